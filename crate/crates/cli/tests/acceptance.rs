//! End-to-end acceptance checks, one line per criterion.
//!
//! Criteria listed in `UNATTAINABLE` cannot hold for mathematical reasons;
//! they are still evaluated exactly as stated and reported, and a FAIL there
//! does not fail the run.

use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polythresh::counterexamples::{
    atomic_infinite_mean, depth_expectation_near_one, discr_prod_p, discr_prod_sequence,
    bernoulli_entropy, koloun_check, no_threshold_witness,
};
use polythresh::cramer::{
    atomic_lambda_star_bracket, atomic_value_distribution, CramerEvaluator1D, DistributionOptions,
};
use polythresh::geometry::{hull_membership, tukey_depth_1d, HullStatus, DEFAULT_HULL_TOL};
use polythresh::lattice::{decompose_ball, facet_set, r_k, sandwich_bounds};
use polythresh::measures::{make_bernoulli, LatticeBallLaw, DEFAULT_ENUMERATION_CAP};
use polythresh::scalar::binomial;
use polythresh::simulate::{
    coupon_expectation, coupon_mc, estimate_f, exact_cube_f, ExperimentConfig, MassMethod,
    MeasureSpec,
};

const UNATTAINABLE: &[usize] = &[7, 13];

type Criterion = (usize, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_cube_curve() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::new(MeasureSpec::Cube { n: 10 }, MassMethod::ExactCube)
        .with_n_grid(vec![256, 1024, 4096])
        .with_trials(500)
        .with_seed(101);
    let rows = estimate_f(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let within = rows
        .iter()
        .all(|r| (r.f_hat - exact_cube_f(10, r.n_samples)).abs() <= 3.0 * r.half_width);
    let regimes = rows[0].f_hat < 0.25
        && (rows[1].f_hat - 0.632).abs() <= 0.01
        && rows[2].f_hat > 0.98;
    outcome(
        within && regimes && secs < 60.0,
        format!(
            "F = {:.4} / {:.4} / {:.4}, exact {:.4} / {:.4} / {:.4}, {secs:.2} s",
            rows[0].f_hat,
            rows[1].f_hat,
            rows[2].f_hat,
            exact_cube_f(10, 256),
            exact_cube_f(10, 1024),
            exact_cube_f(10, 4096)
        ),
    )
}

fn c2_coupon() -> Outcome {
    let mut pass = true;
    let mut d = Vec::new();
    for n in [50, 100, 500] {
        let e = coupon_mc(100, n, 10_000, 202);
        let want = coupon_expectation(100, n);
        pass &= e.contains(want, 3.0);
        d.push(format!("N={n}: {:.3} vs {want:.3} (hw {:.3})", e.mean, e.half_width));
    }
    outcome(pass, d.join("; "))
}

// Independent oracle: golden-section maximization of ξx - log(1-p+pe^ξ)
// after a coarse scan.
fn bernoulli_oracle(p: f64, x: f64) -> f64 {
    let f = |xi: f64| xi * x - (1.0 - p + p * xi.exp()).ln();
    let (mut best, mut at) = (f64::NEG_INFINITY, 0.0);
    for i in 0..=4000 {
        let xi = -40.0 + 80.0 * i as f64 / 4000.0;
        if f(xi) > best {
            best = f(xi);
            at = xi;
        }
    }
    let (mut a, mut b) = (at - 0.02, at + 0.02);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b)).max(best)
}

fn c3_bernoulli_cramer() -> Outcome {
    let (mut worst_end, mut worst_grid) = (0.0f64, 0.0f64);
    for p in [0.01f64, 0.1, 0.3, 0.5, 0.9] {
        let ev = CramerEvaluator1D::new(make_bernoulli(p).unwrap());
        worst_end = worst_end
            .max((ev.cramer_1d(0.0) + (1.0 - p).ln()).abs())
            .max((ev.cramer_1d(1.0) + p.ln()).abs());
        for i in 1..=50 {
            let x = i as f64 / 51.0;
            worst_grid = worst_grid.max((ev.cramer_1d(x) - bernoulli_oracle(p, x)).abs());
        }
    }
    outcome(
        worst_end < 1e-8 && worst_grid < 1e-6,
        format!("endpoint error {worst_end:.2e}, grid oracle error {worst_grid:.2e}"),
    )
}

fn c4_lattice_expectation() -> Outcome {
    let n = 25;
    let law = LatticeBallLaw::new(n, 1.0, 1.0)
        .unwrap()
        .to_atomic::<f64>(DEFAULT_ENUMERATION_CAP)
        .unwrap();
    let m = (2 * n + 1) as f64;
    let (dist, width) = atomic_value_distribution(&law, 80.0, DistributionOptions::default()).unwrap();
    let want_mean = (2 * n) as f64 / m * m.ln();
    let mean_err = (dist.mean() - want_mean).abs();
    let mut vertex_err = 0.0f64;
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            let b = atomic_lambda_star_bracket(&law, &e, &[], 80.0).unwrap();
            vertex_err = vertex_err.max((b.lower - m.ln()).abs()).max((b.upper - m.ln()).abs());
        }
    }
    outcome(
        mean_err < 1e-10 && vertex_err < 1e-8,
        format!("E error {mean_err:.2e}, vertex error {vertex_err:.2e}, widest bracket {width:.2e}"),
    )
}

// Depth-first scan of integer vectors in [-r, r]^n with an exact running
// budget (p = 1 or p = 2 only).
fn brute_points(n: usize, r2: i64, p: u32) -> Vec<Vec<i64>> {
    fn go(n: usize, left: i64, p: u32, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let m = if p == 1 { left } else { (left as f64).sqrt() as i64 + 1 };
        for v in -m..=m {
            let c = v.abs().pow(p);
            if c <= left {
                cur.push(v);
                go(n, left - c, p, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(n, r2, p, &mut Vec::new(), &mut out);
    out
}

fn c5_ball_decomposition() -> Outcome {
    let mut checked = 0;
    let mut pass = true;
    for n in 1..=12usize {
        for k in 1..=3u64 {
            if k as usize > n {
                continue;
            }
            for (r, p, budget) in [(k as f64, 1.0, k as i64), ((k as f64).sqrt(), 2.0, k as i64)] {
                let law = LatticeBallLaw::new(n, r, p).unwrap();
                let d = decompose_ball(&law).unwrap();
                let pts = brute_points(n, budget, p as u32);
                let layer = pts
                    .iter()
                    .filter(|y| {
                        y.iter().all(|v| v.abs() <= 1)
                            && y.iter().filter(|v| **v != 0).count() as u64 == k
                    })
                    .count() as u128;
                let residual_ok = pts.iter().all(|y| {
                    let nz = y.iter().filter(|v| **v != 0).count() as u64;
                    let in_layer = y.iter().all(|v| v.abs() <= 1) && nz == k;
                    in_layer || nz < k
                });
                let want_layer = (1u128 << k) * binomial(n as u64, k);
                pass &= pts.len() as u128 == d.m_n
                    && layer == want_layer
                    && d.a_n_size == want_layer
                    && pts.len() as u128 == want_layer + d.residual_size
                    && residual_ok;
                checked += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut facets = 0;
    for k in 1..=4u64 {
        let n = 6;
        let law = LatticeBallLaw::new(n, k as f64, 1.0).unwrap();
        let all = law.enumerate(DEFAULT_ENUMERATION_CAP).unwrap();
        for _ in 0..5 {
            let mut idx: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                idx.swap(i, rng.random_range(0..=i));
            }
            let mut x = vec![0i64; n];
            for &i in &idx[..k as usize] {
                x[i] = if rng.random::<bool>() { 1 } else { -1 };
            }
            let scan = all
                .iter()
                .filter(|y| y.iter().zip(&x).map(|(a, b)| a * b).sum::<i64>() == k as i64)
                .count();
            let f = facet_set(&x, &law).unwrap();
            pass &= f.len() == scan && f.len() as u128 == r_k(k);
            facets += 1;
        }
    }
    outcome(pass, format!("{checked} (n, k, p) decompositions, {facets} facet sets"))
}

fn c6_sandwich() -> Outcome {
    let law = LatticeBallLaw::new(10, 1.0, 1.0).unwrap();
    let cfg = ExperimentConfig::new(
        MeasureSpec::LatticeBall { n: 10, r: 1.0, p: 1.0 },
        MassMethod::ExactCrossPolytope,
    )
    .with_n_grid(vec![5, 21, 100, 400])
    .with_trials(2000)
    .with_seed(606);
    let mut pass = true;
    let mut d = Vec::new();
    for r in estimate_f(&cfg).unwrap() {
        let s = sandwich_bounds(&law, r.n_samples).unwrap();
        pass &= s.lower <= r.f_hat + 3.0 * r.half_width && r.f_hat <= s.upper + 3.0 * r.half_width;
        d.push(format!("N={}: {:.4} <= {:.4} <= {:.4}", r.n_samples, s.lower, r.f_hat, s.upper));
    }
    outcome(pass, d.join("; "))
}

fn c7_sharp_threshold() -> Outcome {
    let n = 40;
    let m = (2 * n + 1) as f64;
    let lo = m.powf(0.5).floor() as u64;
    let hi = m.powf(1.5).ceil() as u64;
    let cfg = ExperimentConfig::new(
        MeasureSpec::LatticeBall { n, r: 1.0, p: 1.0 },
        MassMethod::ExactCrossPolytope,
    )
    .with_n_grid(vec![lo, hi])
    .with_trials(2000)
    .with_seed(707);
    let rows = estimate_f(&cfg).unwrap();
    let coupon_floor = 1.0 - (1.0 - 1.0 / m).powi(lo as i32);
    outcome(
        rows[0].f_hat < 0.1 && rows[1].f_hat > 0.9,
        format!(
            "F({lo}) = {:.4} (coupon floor {coupon_floor:.4}), F({hi}) = {:.5}",
            rows[0].f_hat, rows[1].f_hat
        ),
    )
}

fn c8_beta_divergence() -> Outcome {
    let start = Instant::now();
    let betas: Vec<f64> = [10u64, 100, 1000, 10_000, 100_000]
        .iter()
        .map(|&n| discr_prod_sequence(n).unwrap().beta)
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let increasing = betas.windows(2).all(|w| w[0] < w[1]);
    let inc = (100_001..=100_100u64)
        .map(|k| bernoulli_entropy(discr_prod_p(k)))
        .fold(0.0f64, f64::max);
    outcome(
        increasing && secs < 1.0 && inc < 1e-4,
        format!(
            "beta = {:?}, largest increment past 1e5 = {inc:.2e}, {secs:.3} s",
            betas.iter().map(|b| (b * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

fn c9_no_threshold() -> Outcome {
    let t = no_threshold_witness(15, &[1, 4, 16, 64, 256], 2000, 909).unwrap();
    let pass = t.rows.iter().all(|r| r.lower_ok) && t.rows[0].upper_ok == Some(true);
    outcome(
        pass,
        format!(
            "delta0 >= {:.4}, F(1) = {:.4} (exact {:.4}), F(256) = {:.4}",
            t.delta0_lower, t.rows[0].f_hat, t.exact_f1, t.rows[4].f_hat
        ),
    )
}

fn c10_depth_cramer() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for i in 1..=9 {
        let p = i as f64 / 10.0;
        let pmf = make_bernoulli(p).unwrap();
        let ev = CramerEvaluator1D::new(pmf.clone());
        for j in 0..=100 {
            let x = j as f64 / 100.0;
            worst = worst.max(tukey_depth_1d(&pmf, x) - (-ev.cramer_1d(x)).exp());
        }
    }
    outcome(worst <= 1e-12, format!("max(q - exp(-Λ*)) = {worst:.3e}"))
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

// Andrew's monotone chain followed by orientation tests.
fn oracle_inside(pts: &[[f64; 2]], x: [f64; 2]) -> bool {
    let mut p = pts.to_vec();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p.dedup();
    if p.len() == 1 {
        return p[0] == x;
    }
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    if hull.len() == 2 {
        let (a, b) = (hull[0], hull[1]);
        let on_line = cross(a, b, x).abs() <= 1e-12;
        let within = (x[0] - a[0]) * (x[0] - b[0]) <= 0.0 && (x[1] - a[1]) * (x[1] - b[1]) <= 0.0;
        return on_line && within;
    }
    (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], x) >= 0.0)
}

fn c11_hull_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let (mut agree, mut marginal, mut total, mut bad_witness) = (0, 0, 0, 0);
    for case in 0..10_000 {
        let m = rng.random_range(1..=30);
        let pts: Vec<[f64; 2]> = (0..m)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let x = if m == 1 && case % 3 == 0 {
            pts[0]
        } else if case % 3 == 0 {
            // a random convex combination, inside by construction
            let w: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let s: f64 = w.iter().sum();
            let mut x = [0.0; 2];
            for (p, wi) in pts.iter().zip(&w) {
                x[0] += p[0] * wi / s;
                x[1] += p[1] * wi / s;
            }
            x
        } else {
            [rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)]
        };
        let vecs: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        let w = hull_membership(&x, &vecs, DEFAULT_HULL_TOL).unwrap();
        total += 1;
        match w.status {
            HullStatus::Marginal => {
                marginal += 1;
                continue;
            }
            HullStatus::Inside => {
                let c = w.coefficients.as_ref().unwrap();
                let s: f64 = c.iter().sum();
                let mut r = [0.0; 2];
                for (p, ci) in pts.iter().zip(c) {
                    r[0] += p[0] * ci;
                    r[1] += p[1] * ci;
                }
                if c.iter().any(|v| *v < -1e-9)
                    || (s - 1.0).abs() > 1e-9
                    || (r[0] - x[0]).abs() > 1e-9
                    || (r[1] - x[1]).abs() > 1e-9
                {
                    bad_witness += 1;
                }
            }
            HullStatus::Outside => {
                let (th, off) = w.separator.as_ref().unwrap();
                let dot = |p: &[f64]| th[0] * p[0] + th[1] * p[1];
                if dot(&x) <= *off || pts.iter().any(|p| dot(p) > *off + 1e-9) {
                    bad_witness += 1;
                }
            }
        }
        if w.is_inside() == oracle_inside(&pts, x) {
            agree += 1;
        }
    }
    let decided = total - marginal;
    outcome(
        agree == decided && bad_witness == 0,
        format!("{agree}/{decided} agree, {marginal} marginal, {bad_witness} bad witnesses"),
    )
}

fn c12_depth_near_one() -> Outcome {
    let mut pass = true;
    let mut d = Vec::new();
    for eps in [0.5, 0.1, 0.01] {
        let r = depth_expectation_near_one(eps, 12).unwrap();
        let mut brute = 0.0;
        for mask in 0u32..1 << 12 {
            let mut pr = 1.0;
            for i in 0..12 {
                let pi = eps / 2f64.powi(i + 2);
                pr *= if mask >> i & 1 == 1 { pi } else { 1.0 - pi };
            }
            brute += pr * pr;
        }
        pass &= r.value >= 1.0 - eps && (r.value - brute).abs() < 1e-12;
        d.push(format!("eps={eps}: {:.6}", r.value));
    }
    outcome(pass, d.join("; "))
}

fn c13_infinite_mean() -> Outcome {
    let t = atomic_infinite_mean(3, 10_000, 1e22).unwrap();
    let row = |k: u64| t.rows.iter().find(|r| r.k == k).unwrap();
    let r10 = row(10);
    let near = (r10.lower_bound - (1.0 / r10.p_k).ln()).abs() < 0.1;
    let sums: Vec<f64> = [100, 1000, 10_000].iter().map(|&k| row(k).partial_sum).collect();
    let growth = sums.windows(2).all(|w| w[1] - w[0] >= 0.5);
    outcome(
        near && growth,
        format!(
            "k=10: {:.4} vs log(1/p) {:.4}; partial sums {:.3} / {:.3} / {:.3}",
            r10.lower_bound,
            (1.0 / r10.p_k).ln(),
            sums[0],
            sums[1],
            sums[2]
        ),
    )
}

fn c14_koloun() -> Outcome {
    let start = Instant::now();
    let r = koloun_check(50).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        r.points_found == vec![[0, 0, 0]] && secs < 5.0,
        format!("{:?} in {secs:.3} s, {} exact checks", r.points_found, r.exact_checks),
    )
}

fn c15_reproducible_csv() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"measure":{"kind":"cube","n":10},"rho_grid":[0.5,0.75,1.0,1.25,1.5],"trials":300,"seed":42,"mass_method":"exact_cube"}"#,
    )
    .unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_polythresh"))
            .args(["mc-threshold", "--quiet", "--threads", threads, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "4");
    let c = run("c.csv", "1");
    outcome(a == b && a == c, format!("{} bytes, three runs", a.len()))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "cube exact curve", c1_cube_curve),
        (2, "coupon collector", c2_coupon),
        (3, "Bernoulli Cramér transform", c3_bernoulli_cramer),
        (4, "lattice-ball expectations", c4_lattice_expectation),
        (5, "ball decomposition", c5_ball_decomposition),
        (6, "sandwich ordering", c6_sandwich),
        (7, "sharp threshold at log M_n", c7_sharp_threshold),
        (8, "beta divergence", c8_beta_divergence),
        (9, "no-threshold witness", c9_no_threshold),
        (10, "depth-Cramér inequality", c10_depth_cramer),
        (11, "hull oracle equivalence", c11_hull_oracle),
        (12, "E[q] near 1", c12_depth_near_one),
        (13, "infinite-mean evidence", c13_infinite_mean),
        (14, "lattice-free unbounded set", c14_koloun),
        (15, "reproducible CSV", c15_reproducible_csv),
    ];
    let mut unexpected = Vec::new();
    for (id, name, f) in criteria {
        let start = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} [{tag}] {name}: {} ({:.2} s)",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass && !UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
