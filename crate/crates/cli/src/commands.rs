use std::fmt::Write as _;

use serde_json::{json, Value};

use polythresh::counterexamples::{
    atomic_infinite_mean, beta_bernoulli, depth_expectation_near_one, koloun_check,
    no_threshold_witness,
};
use polythresh::convext::{extend_1d, moment_finiteness_probe};
use polythresh::cramer::{
    atomic_lambda_star_bracket, atomic_value_distribution, cramer_distribution,
    CramerEvaluator1D, CramerStatus, DistributionOptions, ProductCramer, ValueDistribution,
};
use polythresh::geometry::{tukey_depth_1d, tukey_depth_2d, tukey_depth_sampled};
use polythresh::lattice::{decompose_ball, sandwich_from, DecompositionMode};
use polythresh::measures::{
    fmt17, make_bernoulli, make_symmetric_geometric, FiniteAtomicLaw, LatticeBallLaw, Measure,
    ProductLaw, TailPolicy, DEFAULT_ENUMERATION_CAP,
};
use polythresh::scalar::fmt_short;
use polythresh::simulate::{
    estimate_f, exact_cube_f, threshold_scan, ExperimentConfig, MassMethod, MeasureSpec,
    ThresholdCurve,
};

use crate::manifest::RunManifest;
use crate::{Cli, CliError, CliResult, Command, CounterArgs, CramerArgs, ExtensionArgs, LawArgs, Which};

pub fn dispatch(cli: &Cli) -> CliResult<(RunManifest, String)> {
    let g = &cli.global;
    let no_config = |name: &str| -> CliResult<()> {
        if g.config.is_some() {
            return Err(CliError::Config(format!("{name} does not read --config")));
        }
        Ok(())
    };
    match &cli.command {
        Command::ExactCube { n, big_n } => {
            no_config("exact-cube")?;
            let m = RunManifest::new("exact-cube", json!({"n": n, "N": big_n}), None);
            let f = fmt_short(exact_cube_f(*n, *big_n));
            Ok((m, format!("n,N,F\n{n},{big_n},{f}\n")))
        }
        Command::McThreshold => mc_threshold(cli),
        Command::LatticeThreshold(a) => {
            no_config("lattice-threshold")?;
            lattice_threshold(a, g.seed.unwrap_or(0))
        }
        Command::CramerEval(a) => {
            no_config("cramer-eval")?;
            cramer_eval(read_law(&a.law)?, a)
        }
        Command::ExtensionCheck(a) => {
            no_config("extension-check")?;
            extension_check(read_law(&a.law)?, a)
        }
        Command::Counterexample(a) => {
            no_config("counterexample")?;
            counterexample(a, g.seed.unwrap_or(0))
        }
        Command::DepthEval(a) => {
            no_config("depth-eval")?;
            depth_eval(read_law(&a.law)?, &a.x, a.dirs, g.seed.unwrap_or(0))
        }
    }
}

fn read_config(cli: &Cli) -> CliResult<String> {
    let path = cli
        .global
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn read_law(law: &LawArgs) -> CliResult<Measure<f64>> {
    match (&law.measure, law.bernoulli, law.geometric) {
        (Some(path), None, None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Ok(Measure::from_json(&text)?)
        }
        (None, Some(p), None) => Ok(Measure::Pmf1D(make_bernoulli(p)?)),
        (None, None, Some(q)) => Ok(Measure::Pmf1D(make_symmetric_geometric(
            q,
            TailPolicy::default(),
        )?)),
        _ => Err(CliError::Config(
            "give one of --measure, --bernoulli or --geometric".into(),
        )),
    }
}

fn measure_value(m: &Measure<f64>) -> CliResult<Value> {
    serde_json::to_value(m).map_err(|e| CliError::Core(e.into()))
}

fn mc_threshold(cli: &Cli) -> CliResult<(RunManifest, String)> {
    let text = read_config(cli)?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(s) = cli.global.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let resolved = serde_json::to_value(&cfg).map_err(|e| CliError::Core(e.into()))?;
    let mut m = RunManifest::new("mc-threshold", resolved, Some(cfg.seed));
    let curve = if cfg.rho_grid.is_some() {
        let t = cfg.resolved_t_n().expect("validated");
        let c = threshold_scan(&cfg, t)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "none".into());
        m.note("t_n", fmt17(t));
        m.note("delta", cfg.delta);
        m.note("rho1_hat", opt(c.rho1_hat));
        m.note("rho2_hat", opt(c.rho2_hat));
        m.note("rho_certification", "grid-wise only");
        c
    } else {
        ThresholdCurve {
            rows: estimate_f(&cfg)?,
            rho1_hat: None,
            rho2_hat: None,
            t_n: cfg.resolved_t_n(),
            delta: cfg.delta,
        }
    };
    if curve.rows.iter().any(|r| r.marginal_fraction > 0.0) {
        m.flag("lp_marginal_points_excluded");
    }
    Ok((m, curve.to_csv()))
}

fn lattice_threshold(a: &crate::LatticeArgs, seed: u64) -> CliResult<(RunManifest, String)> {
    let law = LatticeBallLaw::new(a.n, a.r, a.p)?;
    let d = decompose_ball(&law)?;
    let method = if law.k() == 1 && law.max_coordinate() == 1 {
        MassMethod::ExactCrossPolytope
    } else {
        MassMethod::SupportEnumerationLp
    };
    let mut grid = a.big_n.clone();
    grid.sort_unstable();
    let cfg = ExperimentConfig::new(MeasureSpec::LatticeBall { n: a.n, r: a.r, p: a.p }, method)
        .with_n_grid(grid.clone())
        .with_trials(a.trials)
        .with_seed(seed);
    let config = json!({
        "n": a.n, "r": a.r, "p": a.p, "N": grid, "trials": a.trials,
        "mass_method": method,
    });
    let mut m = RunManifest::new("lattice-threshold", config, Some(seed));
    m.note("M_n", d.m_n);
    m.note("A_n_size", d.a_n_size);
    m.note("C_n", fmt17(d.c_n));
    m.note("R_k", d.r_k);
    if d.mode == DecompositionMode::Formula {
        m.flag("decomposition_by_formula");
    }
    if law.guard_band_used() {
        m.flag("guard_band");
    }
    let rows = estimate_f(&cfg)?;
    let mut body = String::from("N,lower,upper,upper_loose,F_hat,half_width\n");
    for r in rows {
        let s = sandwich_from(&d, r.n_samples);
        writeln!(
            body,
            "{},{},{},{},{},{}",
            r.n_samples,
            fmt_short(s.lower),
            fmt_short(s.upper),
            fmt_short(s.upper_loose),
            fmt_short(r.f_hat),
            fmt_short(r.half_width)
        )
        .unwrap();
    }
    Ok((m, body))
}

fn status_name(s: CramerStatus) -> &'static str {
    match s {
        CramerStatus::Interior => "interior",
        CramerStatus::Endpoint => "endpoint",
        CramerStatus::TruncatedEndpoint => "truncated_endpoint",
        CramerStatus::Extrapolated => "extrapolated",
        CramerStatus::Outside => "outside",
    }
}

fn truncation_flags(m: &mut RunManifest, measure: &Measure<f64>) {
    let capped = match measure {
        Measure::Pmf1D(p) => p.truncation_capped(),
        Measure::Product(l) => l.factors().iter().any(|f| f.truncation_capped()),
        _ => false,
    };
    if capped {
        m.flag("truncation_hard_cap");
    }
}

enum Evaluable {
    Product(ProductLaw<f64>),
    Atomic(FiniteAtomicLaw<f64>),
}

fn evaluable(measure: &Measure<f64>) -> CliResult<Evaluable> {
    Ok(match measure {
        Measure::Pmf1D(p) => Evaluable::Product(ProductLaw::new(vec![p.clone()])?),
        Measure::Product(l) => Evaluable::Product(l.clone()),
        Measure::FiniteAtomic(l) => Evaluable::Atomic(l.clone()),
        Measure::LatticeBall(b) => Evaluable::Atomic(b.to_atomic(DEFAULT_ENUMERATION_CAP)?),
    })
}

fn distribution_csv(d: &ValueDistribution<f64>) -> String {
    let mut body = String::from("value,prob\n");
    for &(v, p) in d.entries() {
        writeln!(body, "{},{}", fmt17(v), fmt17(p)).unwrap();
    }
    body
}

fn cramer_eval(measure: Measure<f64>, a: &CramerArgs) -> CliResult<(RunManifest, String)> {
    let law = evaluable(&measure)?;
    let atomic = matches!(law, Evaluable::Atomic(_));
    let mut config = json!({"measure": measure_value(&measure)?});
    if a.distribution {
        config["distribution"] = json!(true);
    } else {
        config["x"] = json!(a.x);
    }
    if atomic {
        config["t_max"] = json!(a.t_max);
    }
    let mut m = RunManifest::new("cramer-eval", config, None);
    truncation_flags(&mut m, &measure);
    if a.distribution {
        let d = match &law {
            Evaluable::Product(l) => cramer_distribution(l, DistributionOptions::default()),
            Evaluable::Atomic(l) => {
                let (d, width) = atomic_value_distribution(l, a.t_max, DistributionOptions::default())?;
                m.note("values", "certified lower brackets");
                m.note("max_bracket_width", fmt17(width));
                d
            }
        };
        if d.is_binned() {
            m.flag(format!("binned(width={})", fmt_short(d.bin_width())));
        }
        return Ok((m, distribution_csv(&d)));
    }
    let mut body = String::from("lambda_star,lower,upper,status\n");
    match &law {
        Evaluable::Product(l) if l.n() == 1 => {
            if a.x.len() != 1 {
                return Err(polythresh::Error::DimensionMismatch { expected: 1, got: a.x.len() }.into());
            }
            let c = CramerEvaluator1D::new(l.factor(0).clone()).cramer_detailed(a.x[0]);
            let v = fmt_short(c.value);
            writeln!(body, "{v},{v},{v},{}", status_name(c.status)).unwrap();
        }
        Evaluable::Product(l) => {
            let v = fmt_short(ProductCramer::new(l).eval(&a.x)?);
            writeln!(body, "{v},{v},{v},exact").unwrap();
        }
        Evaluable::Atomic(l) => {
            let b = atomic_lambda_star_bracket(l, &a.x, &[], a.t_max)?;
            let status = if b.width() == 0.0 { "exact" } else { "bracket" };
            writeln!(
                body,
                "{},{},{},{status}",
                fmt_short(b.lower),
                fmt_short(b.lower),
                fmt_short(b.upper)
            )
            .unwrap();
        }
    }
    Ok((m, body))
}

fn default_radii(law: &ProductLaw<f64>) -> Vec<f64> {
    let r_max = law
        .factors()
        .iter()
        .map(|f| (f.k_min().abs().max(f.k_max().abs()) as f64).powi(2))
        .sum::<f64>()
        .sqrt()
        .max(1.0);
    (1..=8).map(|j| r_max * j as f64 / 8.0).collect()
}

fn extension_check(measure: Measure<f64>, a: &ExtensionArgs) -> CliResult<(RunManifest, String)> {
    let law = match &measure {
        Measure::Pmf1D(p) => ProductLaw::new(vec![p.clone()])?,
        Measure::Product(l) => l.clone(),
        _ => {
            return Err(polythresh::Error::NotApplicable(
                "the extension is available for 1D and product laws only".into(),
            )
            .into())
        }
    };
    let radii = a.radii.clone().unwrap_or_else(|| default_radii(&law));
    let mut m = RunManifest::new(
        "extension-check",
        json!({"measure": measure_value(&measure)?, "q": a.q, "radii": radii}),
        None,
    );
    truncation_flags(&mut m, &measure);
    let mut body = String::from("record,key,value\n");
    let mut integral = 1.0;
    let mut all_concave = true;
    for (i, f) in law.factors().iter().enumerate() {
        let report = polythresh::measures::validate_log_concave(f);
        all_concave &= report.is_log_concave;
        if let Some(k) = report.first_violation {
            writeln!(body, "violation,factor_{i},{k}").unwrap();
        }
        if report.is_log_concave {
            integral *= extend_1d(f)?.integral().value;
        }
    }
    writeln!(body, "summary,log_concave,{all_concave}").unwrap();
    if !all_concave {
        return Ok((m, body));
    }
    // the extension of a product is separable, so its integral factorizes
    writeln!(body, "summary,integral,{}", fmt_short(integral)).unwrap();
    let probe = moment_finiteness_probe(&law, a.q, &radii)?;
    for (r, sum) in &probe.rows {
        writeln!(body, "moment,{},{}", fmt_short(*r), fmt_short(*sum)).unwrap();
    }
    if let Some((amp, rate)) = probe.envelope {
        writeln!(body, "envelope,A,{}", fmt_short(amp)).unwrap();
        writeln!(body, "envelope,B,{}", fmt_short(rate)).unwrap();
    }
    if let Some(t) = probe.tail_bound {
        writeln!(body, "envelope,tail_bound,{}", fmt_short(t)).unwrap();
    }
    writeln!(body, "summary,certified,{}", probe.certified).unwrap();
    Ok((m, body))
}

fn need<T: Copy>(v: Option<T>, name: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Config(format!("--{name} is required")))
}

fn counterexample(a: &CounterArgs, seed: u64) -> CliResult<(RunManifest, String)> {
    let mut body = String::new();
    let m = match a.which {
        Which::Beta => {
            let p = need(a.p, "p")?;
            let n = a.n.unwrap_or(1);
            let b = beta_bernoulli(p, n)?;
            body.push_str("p,n,mean,variance,beta\n");
            writeln!(
                body,
                "{},{n},{},{},{}",
                fmt_short(p),
                fmt_short(b.mean),
                fmt_short(b.variance),
                fmt_short(b.beta)
            )
            .unwrap();
            RunManifest::new("counterexample", json!({"which": "beta", "p": p, "n": n}), None)
        }
        Which::Noth => {
            let n = a.n.unwrap_or(15) as usize;
            let grid = a.big_n.clone().unwrap_or_else(|| vec![1, 4, 16, 64, 256]);
            let trials = a.trials.unwrap_or(1000);
            let t = no_threshold_witness(n, &grid, trials, seed)?;
            body.push_str("N,F_hat,half_width,delta0_lower,lower_ok,upper_ok\n");
            for r in &t.rows {
                writeln!(
                    body,
                    "{},{},{},{},{},{}",
                    r.n_samples,
                    fmt_short(r.f_hat),
                    fmt_short(r.half_width),
                    fmt_short(t.delta0_lower),
                    r.lower_ok,
                    r.upper_ok.map(|b| b.to_string()).unwrap_or_default()
                )
                .unwrap();
            }
            let mut m = RunManifest::new(
                "counterexample",
                json!({"which": "noth", "n": n, "N": grid, "trials": trials}),
                Some(seed),
            );
            m.note("exact_F1", fmt17(t.exact_f1));
            m
        }
        Which::Infmean => {
            let n = a.n.unwrap_or(3) as usize;
            let k = a.k_atoms.unwrap_or(10_000);
            let t_max = a.t_max.unwrap_or(1e22);
            let t = atomic_infinite_mean(n, k, t_max)?;
            body.push_str("k,p_k,lower_bound,partial_sum,t\n");
            for r in &t.rows {
                writeln!(
                    body,
                    "{},{},{},{},{}",
                    r.k,
                    fmt_short(r.p_k),
                    fmt_short(r.lower_bound),
                    fmt_short(r.partial_sum),
                    fmt_short(r.t)
                )
                    .unwrap();
            }
            let mut m = RunManifest::new(
                "counterexample",
                json!({"which": "infmean", "n": n, "k_atoms": k, "t_max": t_max}),
                None,
            );
            m.note("c_truncated", fmt17(t.c_truncated));
            m.note("c_infinite_lower", fmt17(t.c_infinite_lower));
            m.note("tail_mass_bound", fmt17(t.tail_mass_bound));
            m
        }
        Which::Depth1 => {
            let eps = need(a.epsilon, "epsilon")?;
            let n = a.n.unwrap_or(12) as usize;
            let d = depth_expectation_near_one(eps, n)?;
            body.push_str("epsilon,n,value,brute_force\n");
            writeln!(
                body,
                "{},{n},{},{}",
                fmt_short(eps),
                fmt_short(d.value),
                d.brute_force.map(fmt_short).unwrap_or_default()
            )
            .unwrap();
            RunManifest::new("counterexample", json!({"which": "depth1", "epsilon": eps, "n": n}), None)
        }
        Which::Koloun => {
            let w = a.w.unwrap_or(50);
            let r = koloun_check(w)?;
            body.push_str("x,y,z\n");
            for p in &r.points_found {
                writeln!(body, "{},{},{}", p[0], p[1], p[2]).unwrap();
            }
            let mut m = RunManifest::new("counterexample", json!({"which": "koloun", "w": w}), None);
            m.note("exact_checks", r.exact_checks);
            m
        }
    };
    Ok((m, body))
}

fn depth_eval(
    measure: Measure<f64>,
    x: &[f64],
    dirs: usize,
    seed: u64,
) -> CliResult<(RunManifest, String)> {
    let (method, depth) = match &measure {
        Measure::Pmf1D(p) => {
            if x.len() != 1 {
                return Err(CliError::Config("a 1D law needs a single coordinate".into()));
            }
            ("exact_1d", tukey_depth_1d(p, x[0]))
        }
        Measure::FiniteAtomic(l) if l.n() == 2 => ("exact_2d", tukey_depth_2d(l, x)?),
        Measure::FiniteAtomic(l) => ("sampled_upper_bound", tukey_depth_sampled(l, x, dirs, seed)?),
        Measure::Product(l) => ("sampled_upper_bound", tukey_depth_sampled(l, x, dirs, seed)?),
        Measure::LatticeBall(b) => {
            let l = b.to_atomic::<f64>(DEFAULT_ENUMERATION_CAP)?;
            if l.n() == 2 {
                ("exact_2d", tukey_depth_2d(&l, x)?)
            } else {
                ("sampled_upper_bound", tukey_depth_sampled(&l, x, dirs, seed)?)
            }
        }
    };
    let sampled = method == "sampled_upper_bound";
    let m = RunManifest::new(
        "depth-eval",
        json!({"measure": measure_value(&measure)?, "x": x, "dirs": if sampled { Some(dirs) } else { None }}),
        sampled.then_some(seed),
    );
    Ok((m, format!("method,depth\n{method},{}\n", fmt_short(depth))))
}
