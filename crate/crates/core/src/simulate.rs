//! Monte Carlo estimation of the captured mass `F_{n,N}(μ) = E[μ(K_N)]`,
//! closed forms, and the DFM bounds.
//!
//! Every trial owns a ChaCha8 stream selected by its index, and all grid
//! values of `N` in a trial use prefixes of the same sample sequence, so
//! `K_N ⊆ K_{N'}` for `N ≤ N'` and the estimates are monotone in `N`.
//! Reduction runs in trial order, so results do not depend on the thread
//! count.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cramer::{cramer_distribution, DistributionOptions, ValueDistribution};
use crate::error::{Error, Result};
use crate::geometry::{hull_membership, HullStatus, DEFAULT_HULL_TOL};
use crate::lattice::cross_polytope_captured;
use crate::measures::{
    make_bernoulli, LatticeBallLaw, Measure, ProductLaw, DEFAULT_ENUMERATION_CAP,
};
use crate::scalar::{fmt_short, ln_binomial, one_minus_pow_complement, Real, Z_99};

/// Cap on support points scanned by the LP mass method.
pub const LP_SUPPORT_CAP: u128 = 1_000_000;

const INNER_STREAM_KEY: u64 = 0x9E37_79B9_7F4A_7C15;

/// `1 - (1 - 2^{-n})^N`.
pub fn exact_cube_f(n: u32, n_samples: u64) -> f64 {
    one_minus_pow_complement((-(n as f64) * std::f64::consts::LN_2).exp(), n_samples as f64)
}

/// Expected number of distinct values among `N` uniform draws from `M`.
pub fn coupon_expectation(m: u64, n_samples: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    m as f64 * one_minus_pow_complement(1.0 / m as f64, n_samples as f64)
}

/// Sample mean with a 99% normal-approximation half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub trials: usize,
}

impl Estimate {
    /// Half-width is 0 for a single trial.
    pub fn from_values(values: &[f64]) -> Self {
        let t = values.len();
        let mean = values.iter().sum::<f64>() / t as f64;
        let half_width = if t > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1) as f64;
            Z_99 * (var / t as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            half_width,
            trials: t,
        }
    }

    pub fn contains(&self, target: f64, widths: f64) -> bool {
        (self.mean - target).abs() <= widths * self.half_width
    }
}

/// Monte Carlo estimate of `E[D_N]`, the number of distinct coupons among
/// `N` uniform draws from `M`.
pub fn coupon_mc(m: u64, n_samples: u64, trials: usize, seed: u64) -> Estimate {
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let mut seen = vec![false; m as usize];
            let mut d = 0u64;
            for _ in 0..n_samples {
                let i = rng.random_range(0..m as usize);
                if !seen[i] {
                    seen[i] = true;
                    d += 1;
                }
            }
            d as f64
        })
        .collect();
    Estimate::from_values(&values)
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// Uniform law on `{0,1}ⁿ`.
    Cube { n: usize },
    /// Independent Bernoulli coordinates.
    BernoulliProduct { p: Vec<f64> },
    LatticeBall { n: usize, r: f64, p: f64 },
    Explicit { measure: Measure<f64> },
}

impl MeasureSpec {
    pub fn dimension(&self) -> usize {
        match self {
            MeasureSpec::Cube { n } | MeasureSpec::LatticeBall { n, .. } => *n,
            MeasureSpec::BernoulliProduct { p } => p.len(),
            MeasureSpec::Explicit { measure } => measure.dimension(),
        }
    }

    /// Natural normalization scale: `n log 2` for the cube, `log M_n` for
    /// lattice balls.
    pub fn default_t_n(&self) -> Option<f64> {
        match self {
            MeasureSpec::Cube { n } => Some(*n as f64 * std::f64::consts::LN_2),
            MeasureSpec::LatticeBall { n, r, p } => LatticeBallLaw::new(*n, *r, *p)
                .ok()
                .map(|l| (l.count() as f64).ln()),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMethod {
    /// Distinct-sample mass; valid for laws on `{0,1}ⁿ`.
    ExactCube,
    /// Combinatorial capture on `{0, ±e_i}`.
    ExactCrossPolytope,
    /// Hull membership of every support point.
    SupportEnumerationLp,
    /// Hull membership of fresh inner samples.
    McInner,
}

fn default_trials() -> usize {
    1000
}
fn default_delta() -> f64 {
    0.1
}
fn default_inner() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub measure: MeasureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_grid: Option<Vec<f64>>,
    /// Scale used to convert between `rho` and `N = ⌈e^{ρ T_n}⌉`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_n: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub mass_method: MassMethod,
    #[serde(default = "default_inner")]
    pub inner_samples: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl ExperimentConfig {
    pub fn new(measure: MeasureSpec, mass_method: MassMethod) -> Self {
        ExperimentConfig {
            measure,
            n_grid: None,
            rho_grid: None,
            t_n: None,
            trials: default_trials(),
            seed: 0,
            mass_method,
            inner_samples: default_inner(),
            delta: default_delta(),
        }
    }

    pub fn with_n_grid(mut self, grid: Vec<u64>) -> Self {
        self.n_grid = Some(grid);
        self
    }

    pub fn with_rho_grid(mut self, grid: Vec<f64>) -> Self {
        self.rho_grid = Some(grid);
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn resolved_t_n(&self) -> Option<f64> {
        self.t_n.or_else(|| self.measure.default_t_n())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::validation("trials must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::validation("delta must lie in (0, 1)"));
        }
        if self.inner_samples == 0 {
            return Err(Error::validation("inner_samples must be at least 1"));
        }
        if let Some(t) = self.t_n {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::validation("t_n must be positive"));
            }
        }
        match (&self.n_grid, &self.rho_grid) {
            (Some(g), None) => {
                if g.is_empty() || g.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::validation("n_grid must be nonempty and sorted"));
                }
            }
            (None, Some(g)) => {
                if g.is_empty()
                    || g.iter().any(|v| !v.is_finite())
                    || g.windows(2).any(|w| w[0] > w[1])
                {
                    return Err(Error::validation("rho_grid must be nonempty and sorted"));
                }
                if self.resolved_t_n().is_none() {
                    return Err(Error::validation("rho_grid needs t_n for this measure"));
                }
            }
            _ => return Err(Error::validation("give exactly one of n_grid and rho_grid")),
        }
        Ok(())
    }

    /// `(rho, N)` pairs, sorted by `N`.
    pub fn grid(&self) -> Result<Vec<(Option<f64>, u64)>> {
        self.validate()?;
        let t = self.resolved_t_n();
        Ok(match (&self.n_grid, &self.rho_grid) {
            (Some(g), _) => g
                .iter()
                .map(|&n| (t.map(|t| (n as f64).ln() / t), n))
                .collect(),
            (_, Some(g)) => {
                let t = t.expect("validated");
                g.iter()
                    .map(|&rho| {
                        let n = (rho * t).exp().ceil();
                        (Some(rho), if n >= u64::MAX as f64 { u64::MAX } else { n as u64 })
                    })
                    .collect()
            }
            _ => unreachable!(),
        })
    }
}

// Sampling models. Every draw is reduced to a key identifying a support
// point, so that distinct samples can be tracked cheaply.
enum Model {
    Product {
        law: ProductLaw<f64>,
        k_min: Vec<i64>,
        cum: Vec<Vec<f64>>,
        masses: Vec<Vec<f64>>,
        size: u128,
    },
    Indexed {
        points: Vec<Vec<f64>>,
        probs: Vec<f64>,
        alias: WeightedAliasIndex<f64>,
    },
    /// Uniform on `{0, ±e_i}`, keyed like [`crate::lattice::cross_polytope_index`].
    Cross { n: usize },
}

impl Model {
    fn build(spec: &MeasureSpec) -> Result<Model> {
        match spec {
            MeasureSpec::Cube { n } => {
                Model::product(ProductLaw::iid(make_bernoulli(0.5)?, *n)?)
            }
            MeasureSpec::BernoulliProduct { p } => Model::product(ProductLaw::new(
                p.iter().map(|&q| make_bernoulli(q)).collect::<Result<_>>()?,
            )?),
            MeasureSpec::LatticeBall { n, r, p } => Model::ball(&LatticeBallLaw::new(*n, *r, *p)?),
            MeasureSpec::Explicit { measure } => match measure {
                Measure::Pmf1D(p) => Model::product(ProductLaw::new(vec![p.clone()])?),
                Measure::Product(l) => Model::product(l.clone()),
                Measure::FiniteAtomic(l) => {
                    Model::indexed(l.points().map(|p| p.to_vec()).collect(), l.atoms().iter().map(|a| a.prob).collect())
                }
                Measure::LatticeBall(l) => Model::ball(l),
            },
        }
    }

    fn product(law: ProductLaw<f64>) -> Result<Model> {
        let mut k_min = Vec::new();
        let mut cum = Vec::new();
        let mut masses = Vec::new();
        for f in law.factors() {
            let m: Vec<f64> = f.iter().map(|(_, p)| p).collect();
            let total: f64 = m.iter().sum();
            let mut acc = 0.0;
            let c: Vec<f64> = m
                .iter()
                .map(|p| {
                    acc += p / total;
                    acc
                })
                .collect();
            k_min.push(f.k_min());
            cum.push(c);
            masses.push(m);
        }
        let size = law.support_size();
        Ok(Model::Product {
            law,
            k_min,
            cum,
            masses,
            size,
        })
    }

    fn indexed(points: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Model> {
        let alias = WeightedAliasIndex::new(probs.clone())
            .map_err(|e| Error::validation(format!("alias table: {e}")))?;
        Ok(Model::Indexed {
            points,
            probs,
            alias,
        })
    }

    fn ball(law: &LatticeBallLaw) -> Result<Model> {
        if law.k() == 1 && law.max_coordinate() == 1 {
            return Ok(Model::Cross { n: law.n() });
        }
        let pts = law.enumerate(DEFAULT_ENUMERATION_CAP)?;
        let m = pts.len();
        Model::indexed(
            pts.into_iter()
                .map(|p| p.into_iter().map(|v| v as f64).collect())
                .collect(),
            vec![1.0 / m as f64; m],
        )
    }

    fn support_size(&self) -> u128 {
        match self {
            Model::Product { size, .. } => *size,
            Model::Indexed { probs, .. } => probs.len() as u128,
            Model::Cross { n } => 2 * *n as u128 + 1,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> u128 {
        match self {
            Model::Product { cum, .. } => {
                let mut key = 0u128;
                for c in cum {
                    let u: f64 = rng.random();
                    let i = c.partition_point(|v| *v <= u).min(c.len() - 1);
                    key = key * c.len() as u128 + i as u128;
                }
                key
            }
            Model::Indexed { alias, .. } => alias.sample(rng) as u128,
            Model::Cross { n } => rng.random_range(0..2 * n + 1) as u128,
        }
    }

    fn digits(&self, mut key: u128) -> Vec<usize> {
        let Model::Product { cum, .. } = self else {
            unreachable!()
        };
        let mut d = vec![0; cum.len()];
        for (i, c) in cum.iter().enumerate().rev() {
            d[i] = (key % c.len() as u128) as usize;
            key /= c.len() as u128;
        }
        d
    }

    fn prob(&self, key: u128) -> f64 {
        match self {
            Model::Product { masses, .. } => self
                .digits(key)
                .iter()
                .zip(masses)
                .map(|(&i, m)| m[i])
                .product(),
            Model::Indexed { probs, .. } => probs[key as usize],
            Model::Cross { n } => 1.0 / (2 * n + 1) as f64,
        }
    }

    fn point(&self, key: u128) -> Vec<f64> {
        match self {
            Model::Product { k_min, .. } => self
                .digits(key)
                .iter()
                .zip(k_min)
                .map(|(&i, k)| (k + i as i64) as f64)
                .collect(),
            Model::Indexed { points, .. } => points[key as usize].clone(),
            Model::Cross { n } => {
                let mut v = vec![0.0; *n];
                if key > 0 {
                    let j = (key as usize - 1) / 2;
                    v[j] = if key % 2 == 1 { 1.0 } else { -1.0 };
                }
                v
            }
        }
    }

    fn check_method(&self, method: MassMethod) -> Result<()> {
        let ok = match method {
            MassMethod::ExactCube => matches!(self, Model::Product { law, .. } if law.is_binary()),
            MassMethod::ExactCrossPolytope => matches!(self, Model::Cross { .. }),
            MassMethod::SupportEnumerationLp => {
                let s = self.support_size();
                if s > LP_SUPPORT_CAP {
                    return Err(Error::capacity("support points for LP", s as f64, LP_SUPPORT_CAP as f64));
                }
                true
            }
            MassMethod::McInner => true,
        };
        if !ok {
            return Err(Error::validation(format!(
                "mass method {method:?} does not apply to this measure"
            )));
        }
        if matches!(self, Model::Product { size, .. } if *size == u128::MAX) {
            return Err(Error::capacity("product support size", f64::INFINITY, u128::MAX as f64));
        }
        Ok(())
    }
}

/// One row of a threshold curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub rho: Option<f64>,
    pub n_samples: u64,
    pub f_hat: f64,
    pub half_width: f64,
    pub marginal_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdCurve {
    pub rows: Vec<CurveRow>,
    pub rho1_hat: Option<f64>,
    pub rho2_hat: Option<f64>,
    pub t_n: Option<f64>,
    pub delta: f64,
}

pub const CSV_HEADER: &str = "rho,N,F_hat,half_width,marginal_fraction";

impl ThresholdCurve {
    /// CSV body (header plus rows, LF line endings); `rho` is empty when no
    /// scale is known.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let rho = r.rho.map(fmt_short).unwrap_or_default();
            s.push_str(&format!(
                "{rho},{},{},{},{}\n",
                r.n_samples,
                fmt_short(r.f_hat),
                fmt_short(r.half_width),
                fmt_short(r.marginal_fraction)
            ));
        }
        s
    }
}

// μ(K_N) for one trial at each grid size; returns (mass, marginal fraction)
fn run_trial(
    model: &Model,
    method: MassMethod,
    grid: &[u64],
    inner: usize,
    seed: u64,
    trial: usize,
) -> Result<Vec<(f64, f64)>> {
    let mut rng = trial_rng(seed, trial);
    let mut out = Vec::with_capacity(grid.len());
    let mut drawn = 0u64;
    match method {
        MassMethod::ExactCube => {
            let mut seen = HashSet::new();
            let mut mass = 0.0;
            for &n in grid {
                while drawn < n {
                    let k = model.draw(&mut rng);
                    if seen.insert(k) {
                        mass += model.prob(k);
                    }
                    drawn += 1;
                }
                out.push((mass.min(1.0), 0.0));
            }
        }
        MassMethod::ExactCrossPolytope => {
            let Model::Cross { n: dim } = model else {
                unreachable!()
            };
            let mut keys = Vec::new();
            let mut seen = vec![false; 2 * dim + 1];
            for &n in grid {
                while drawn < n {
                    let k = model.draw(&mut rng) as usize;
                    if !seen[k] {
                        seen[k] = true;
                        keys.push(k);
                    }
                    drawn += 1;
                }
                let c = cross_polytope_captured(*dim, keys.iter().copied());
                out.push((c as f64 / (2 * dim + 1) as f64, 0.0));
            }
        }
        MassMethod::SupportEnumerationLp | MassMethod::McInner => {
            let targets: Vec<u128> = if method == MassMethod::McInner {
                let mut inner_rng = ChaCha8Rng::seed_from_u64(seed ^ INNER_STREAM_KEY);
                inner_rng.set_stream(trial as u64);
                (0..inner).map(|_| model.draw(&mut inner_rng)).collect()
            } else {
                (0..model.support_size()).collect()
            };
            let mut seen = HashSet::new();
            let mut vertices: Vec<Vec<f64>> = Vec::new();
            let mut cached: Option<(usize, (f64, f64))> = None;
            for &n in grid {
                while drawn < n {
                    let k = model.draw(&mut rng);
                    if seen.insert(k) {
                        vertices.push(model.point(k));
                    }
                    drawn += 1;
                }
                if let Some((len, v)) = cached {
                    if len == vertices.len() {
                        out.push(v);
                        continue;
                    }
                }
                let v = hull_mass(model, method, &targets, &seen, &vertices)?;
                cached = Some((vertices.len(), v));
                out.push(v);
            }
        }
    }
    Ok(out)
}

fn hull_mass(
    model: &Model,
    method: MassMethod,
    targets: &[u128],
    seen: &HashSet<u128>,
    vertices: &[Vec<f64>],
) -> Result<(f64, f64)> {
    if vertices.is_empty() {
        return Ok((0.0, 0.0));
    }
    let (mut inside, mut marginal) = (0.0, 0usize);
    for &t in targets {
        let w = if method == MassMethod::McInner {
            1.0
        } else {
            model.prob(t)
        };
        if seen.contains(&t) {
            inside += w;
            continue;
        }
        match hull_membership(&model.point(t), vertices, DEFAULT_HULL_TOL)?.status {
            HullStatus::Inside => inside += w,
            HullStatus::Outside => {}
            HullStatus::Marginal => marginal += 1,
        }
    }
    let total = targets.len() as f64;
    let mass = if method == MassMethod::McInner {
        inside / total
    } else {
        inside
    };
    Ok((mass.clamp(0.0, 1.0), marginal as f64 / total))
}

/// Estimate `F_{n,N}` at every grid size of `config`.
pub fn estimate_f(config: &ExperimentConfig) -> Result<Vec<CurveRow>> {
    let grid = config.grid()?;
    let model = Model::build(&config.measure)?;
    model.check_method(config.mass_method)?;
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by_key(|&i| grid[i].1);
    let sizes: Vec<u64> = order.iter().map(|&i| grid[i].1).collect();
    let per_trial: Vec<Vec<(f64, f64)>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            run_trial(
                &model,
                config.mass_method,
                &sizes,
                config.inner_samples,
                config.seed,
                t,
            )
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(grid.len());
    for (j, &i) in order.iter().enumerate() {
        let masses: Vec<f64> = per_trial.iter().map(|r| r[j].0).collect();
        let marg = per_trial.iter().map(|r| r[j].1).sum::<f64>() / config.trials as f64;
        let e = Estimate::from_values(&masses);
        rows.push(CurveRow {
            rho: grid[i].0,
            n_samples: grid[i].1,
            f_hat: e.mean.clamp(0.0, 1.0),
            half_width: e.half_width,
            marginal_fraction: marg,
        });
    }
    Ok(rows)
}

/// Estimate the curve and read off `ρ̂₁` and `ρ̂₂`.
///
/// `ρ̂₁` is the largest grid `ρ` such that `F̂ + hw ≤ δ` at it and every
/// smaller grid point; `ρ̂₂` the smallest such that `F̂ - hw ≥ 1 - δ` at it and
/// every larger one. Only grid-wise statements are possible.
pub fn threshold_scan(config: &ExperimentConfig, t_n: f64) -> Result<ThresholdCurve> {
    let mut cfg = config.clone();
    cfg.t_n = Some(t_n);
    let rows = estimate_f(&cfg)?;
    let delta = cfg.delta;
    let mut rho1 = None;
    for r in &rows {
        if r.f_hat + r.half_width <= delta {
            rho1 = r.rho;
        } else {
            break;
        }
    }
    let mut rho2 = None;
    for r in rows.iter().rev() {
        if r.f_hat - r.half_width >= 1.0 - delta {
            rho2 = r.rho;
        } else {
            break;
        }
    }
    Ok(ThresholdCurve {
        rows,
        rho1_hat: rho1,
        rho2_hat: rho2,
        t_n: Some(t_n),
        delta,
    })
}

/// `min(1, μ_n(B_r) + N e^{-r})` from a precomputed law of `Λ*`.
pub fn dfm_upper_from<T: Real>(dist: &ValueDistribution<T>, n_samples: u64, r: f64) -> f64 {
    let inside = dist.cdf(T::lit(r)).as_f64();
    (inside + n_samples as f64 * (-r).exp()).clamp(0.0, 1.0)
}

pub fn dfm_upper_bound<T: Real>(law: &ProductLaw<T>, n_samples: u64, r: f64) -> f64 {
    let dist = cramer_distribution(law, DistributionOptions::default());
    dfm_upper_from(&dist, n_samples, r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DfmLower {
    pub bound: f64,
    /// Set when `N ≤ n`, where the bound degenerates to 0.
    pub degenerate: bool,
}

/// `exp(-(1+ζ) r - 2ζ n)`, the analytic lower bound on the depth over `B_r`.
pub fn inf_depth_plugin(r: f64, zeta: f64, n: usize) -> f64 {
    (-(1.0 + zeta) * r - 2.0 * zeta * n as f64).exp()
}

pub fn dfm_lower_from<T: Real>(
    dist: &ValueDistribution<T>,
    n: usize,
    n_samples: u64,
    r: f64,
    inf_depth: f64,
    p_max: f64,
) -> Result<DfmLower> {
    if !(inf_depth > 0.0 && inf_depth <= 1.0) {
        return Err(Error::domain("inf_depth must lie in (0, 1]"));
    }
    if !(p_max > 0.0 && p_max <= 1.0) {
        return Err(Error::domain("p_max must lie in (0, 1]"));
    }
    if n_samples <= n as u64 {
        return Ok(DfmLower {
            bound: 0.0,
            degenerate: true,
        });
    }
    let inside = dist.cdf(T::lit(r)).as_f64();
    let lb = ln_binomial(n_samples, n as u64);
    let e = (n_samples - n as u64) as f64;
    let t1 = (lb + e * p_max.ln()).exp();
    let t2 = if inf_depth >= 1.0 {
        0.0
    } else {
        2.0 * (lb + e * (-inf_depth).ln_1p()).exp()
    };
    Ok(DfmLower {
        bound: (inside * (1.0 - t1 - t2)).clamp(0.0, 1.0),
        degenerate: false,
    })
}

pub fn dfm_lower_bound<T: Real>(
    law: &ProductLaw<T>,
    n_samples: u64,
    r: f64,
    inf_depth: f64,
    p_max: f64,
) -> Result<DfmLower> {
    let dist = cramer_distribution(law, DistributionOptions::default());
    dfm_lower_from(&dist, law.n(), n_samples, r, inf_depth, p_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(exact_cube_f(1, 1), 0.5);
        assert_eq!(exact_cube_f(10, 0), 0.0);
        let want = 1.0 - (1023.0f64 / 1024.0).powi(1024);
        assert!((exact_cube_f(10, 1024) - want).abs() < 1e-15);
        assert!((exact_cube_f(10, 1024) - 0.632_300_3).abs() < 1e-7);
        assert_eq!(coupon_expectation(1, 7), 1.0);
        assert!((coupon_expectation(2, 2) - 1.5).abs() < 1e-15);
        assert_eq!(coupon_expectation(5, 0), 0.0);
    }

    #[test]
    fn coupon_small_enumeration() {
        let e = coupon_mc(2, 2, 20_000, 3);
        assert!(e.contains(1.5, 3.0));
    }

    #[test]
    fn cube_matches_formula() {
        let cfg = ExperimentConfig::new(MeasureSpec::Cube { n: 8 }, MassMethod::ExactCube)
            .with_n_grid(vec![64, 256])
            .with_trials(500)
            .with_seed(11);
        let rows = estimate_f(&cfg).unwrap();
        for r in rows {
            assert!((r.f_hat - exact_cube_f(8, r.n_samples)).abs() <= 3.0 * r.half_width);
        }
    }

    #[test]
    fn one_sample_captures_one_atom() {
        let cfg = ExperimentConfig::new(
            MeasureSpec::LatticeBall { n: 10, r: 1.0, p: 1.0 },
            MassMethod::ExactCrossPolytope,
        )
        .with_n_grid(vec![1])
        .with_trials(50);
        let r = estimate_f(&cfg).unwrap()[0];
        assert_eq!(r.f_hat, 1.0 / 21.0);
        assert_eq!(r.half_width, 0.0);
        let single = cfg.clone().with_trials(1);
        assert_eq!(estimate_f(&single).unwrap()[0].f_hat, 1.0 / 21.0);
    }

    #[test]
    fn lp_matches_combinatorial() {
        for n in [2, 3, 5] {
            let spec = MeasureSpec::LatticeBall { n, r: 1.0, p: 1.0 };
            let a = ExperimentConfig::new(spec.clone(), MassMethod::ExactCrossPolytope)
                .with_n_grid(vec![1, 2, 4, 8])
                .with_trials(40)
                .with_seed(5);
            let mut b = a.clone();
            b.mass_method = MassMethod::SupportEnumerationLp;
            let (ra, rb) = (estimate_f(&a).unwrap(), estimate_f(&b).unwrap());
            for (x, y) in ra.iter().zip(&rb) {
                assert!((x.f_hat - y.f_hat).abs() < 1e-12);
                assert_eq!(y.marginal_fraction, 0.0);
            }
        }
    }

    #[test]
    fn incompatible_method() {
        let cfg = ExperimentConfig::new(
            MeasureSpec::LatticeBall { n: 4, r: 2.0, p: 1.0 },
            MassMethod::ExactCube,
        )
        .with_n_grid(vec![1]);
        assert!(matches!(estimate_f(&cfg), Err(Error::Validation(_))));
        let bad = ExperimentConfig::new(MeasureSpec::Cube { n: 3 }, MassMethod::ExactCube)
            .with_n_grid(vec![4, 2]);
        assert!(matches!(estimate_f(&bad), Err(Error::Validation(_))));
    }

    #[test]
    fn monotone_in_n() {
        let cfg = ExperimentConfig::new(
            MeasureSpec::LatticeBall { n: 3, r: 2.0, p: 1.0 },
            MassMethod::McInner,
        )
        .with_n_grid(vec![2, 4, 8, 16, 32])
        .with_trials(30);
        let rows = estimate_f(&cfg).unwrap();
        assert!(rows.windows(2).all(|w| w[0].f_hat <= w[1].f_hat));
    }

    #[test]
    fn thread_independent() {
        let cfg = ExperimentConfig::new(MeasureSpec::Cube { n: 6 }, MassMethod::ExactCube)
            .with_rho_grid(vec![0.5, 1.0, 1.5])
            .with_trials(64);
        let a = estimate_f(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate_f(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn dfm_upper_examples() {
        let law = ProductLaw::iid(make_bernoulli(0.5_f64).unwrap(), 10).unwrap();
        let r = 10.0 * std::f64::consts::LN_2 - 0.01;
        let want = 100.0 * (-r).exp();
        assert!((dfm_upper_bound(&law, 100, r) - want).abs() < 1e-14);
        assert_eq!(dfm_upper_bound(&law, 0, 1.0), 0.0);
        assert_eq!(dfm_upper_bound(&law, 0, 100.0), 1.0);
    }

    #[test]
    fn dfm_lower_examples() {
        let law = ProductLaw::iid(make_bernoulli(0.5_f64).unwrap(), 5).unwrap();
        let d = dfm_lower_bound(&law, 5, 10.0, 0.5, 0.5).unwrap();
        assert!(d.degenerate && d.bound == 0.0);
        let d1 = dfm_lower_bound(&law, 100, 10.0, 1.0, 0.5).unwrap();
        let t1 = (ln_binomial(100, 5) + 95.0 * 0.5f64.ln()).exp();
        assert!((d1.bound - (1.0 - t1)).abs() < 1e-14);
        let mut last = 0.0;
        for n in [200, 500, 1000, 2000, 5000, 10_000, 20_000] {
            let b = dfm_lower_bound(&law, n, 3.5, inf_depth_plugin(3.5, 0.1, 5), 0.5).unwrap();
            assert!(b.bound >= last);
            last = b.bound;
        }
        assert!(last > 0.0);
    }

    #[test]
    fn scan_finds_cube_threshold() {
        let cfg = ExperimentConfig::new(MeasureSpec::Cube { n: 12 }, MassMethod::ExactCube)
            .with_rho_grid(vec![0.5, 0.75, 1.0, 1.25, 1.5])
            .with_trials(100)
            .with_seed(1);
        let c = threshold_scan(&cfg, 12.0 * std::f64::consts::LN_2).unwrap();
        assert!(c.rho1_hat.unwrap() >= 0.5);
        assert!(c.rho2_hat.unwrap() <= 1.5);
        let one = cfg.clone().with_rho_grid(vec![1.0]);
        let c1 = threshold_scan(&one, 12.0 * std::f64::consts::LN_2).unwrap();
        assert!(c1.rho1_hat.is_none() || c1.rho2_hat.is_none());
    }

    #[test]
    fn config_roundtrip() {
        let cfg = ExperimentConfig::new(MeasureSpec::Cube { n: 4 }, MassMethod::ExactCube)
            .with_n_grid(vec![1, 2]);
        let s = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
        let parsed: ExperimentConfig = serde_json::from_str(
            r#"{"measure":{"kind":"cube","n":3},"n_grid":[1],"mass_method":"exact_cube"}"#,
        )
        .unwrap();
        assert_eq!(parsed.trials, 1000);
    }
}
