//! Finite-size versions of the counterexample constructions: diverging `β`
//! for products of rare coins, a product sequence without threshold, a
//! compactly supported atomic law with `E[Λ*] = ∞`, `E[q]` close to 1, and
//! an unbounded convex set in ℝ³ meeting ℤ³ only at the origin.
//!
//! Infinite objects are always truncated; every record carries the bound
//! needed to interpret the truncation.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulate::{estimate_f, ExperimentConfig, MassMethod, MeasureSpec};

/// `-p log p - (1-p) log(1-p)`, the mean of `Λ*` under Bernoulli(p).
pub fn bernoulli_entropy(p: f64) -> f64 {
    -p * p.ln() - (1.0 - p) * (-p).ln_1p()
}

/// `p(1-p) log²(p/(1-p))`, the variance of `Λ*` under Bernoulli(p).
pub fn bernoulli_lambda_variance(p: f64) -> f64 {
    let l = p.ln() - (-p).ln_1p();
    p * (1.0 - p) * l * l
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaRecord {
    pub mean: f64,
    pub variance: f64,
    pub beta: f64,
}

/// Mean, variance and `β` of `Λ*` for `n` independent Bernoulli(p) coins.
pub fn beta_bernoulli(p: f64, n: u64) -> Result<BetaRecord> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p = {p} must lie in (0, 1)")));
    }
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let mean = n as f64 * bernoulli_entropy(p);
    let variance = n as f64 * bernoulli_lambda_variance(p);
    Ok(BetaRecord {
        mean,
        variance,
        beta: variance / (mean * mean),
    })
}

/// `p_k = 1 / (k log³(k+3))`.
pub fn discr_prod_p(k: u64) -> f64 {
    let l = ((k + 3) as f64).ln();
    1.0 / (k as f64 * l * l * l)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiscrProd {
    pub n: u64,
    pub e_partial: f64,
    pub var_partial: f64,
    pub beta: f64,
    /// `Π_{k≤n} (1 - p_k)`.
    pub head_product: f64,
    /// Upper bound on `Σ_{k>n} p_k/(1-p_k)`.
    pub tail_bound: f64,
    /// Lower bound on `δ₀ = (Π_k (1-p_k))²`.
    pub delta0_lower: f64,
}

/// `(1 + 3/n) / (2 log²(n+3)) / (1 - p_{n+1})`, from comparing the tail with
/// `∫_n^∞ dx / ((x+3) log³(x+3))`.
pub fn discr_prod_tail_bound(n: u64) -> f64 {
    let n = n.max(1);
    let l = ((n + 3) as f64).ln();
    (1.0 + 3.0 / n as f64) / (2.0 * l * l) / (1.0 - discr_prod_p(n + 1))
}

/// Exact partial sums for the product of Bernoulli(p_k), `k ≤ n`.
pub fn discr_prod_sequence(n: u64) -> Result<DiscrProd> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let (mut e, mut v, mut log_head) = (0.0, 0.0, 0.0);
    for k in 1..=n {
        let p = discr_prod_p(k);
        e += bernoulli_entropy(p);
        v += bernoulli_lambda_variance(p);
        log_head += (-p).ln_1p();
    }
    let tail = discr_prod_tail_bound(n);
    Ok(DiscrProd {
        n,
        e_partial: e,
        var_partial: v,
        beta: v / (e * e),
        head_product: log_head.exp(),
        tail_bound: tail,
        delta0_lower: (2.0 * log_head - 2.0 * tail).exp(),
    })
}

/// Constants `(C, c)` with `H(p) ≤ -C p log p` and `Var(p) ≥ c p log² p` on
/// a log-spaced scan of `(0, p_hi]`. Empirical, not proven bounds.
pub fn comparison_constants(p_hi: f64, points: usize) -> (f64, f64) {
    let lo = 1e-15f64.ln();
    let hi = p_hi.ln();
    let (mut big, mut small) = (0.0f64, f64::INFINITY);
    for i in 0..points {
        let p = (lo + (hi - lo) * i as f64 / (points - 1).max(1) as f64).exp();
        let lp = p.ln();
        big = big.max(bernoulli_entropy(p) / (-p * lp));
        small = small.min(bernoulli_lambda_variance(p) / (p * lp * lp));
    }
    (big, small)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WitnessRow {
    pub n_samples: u64,
    pub f_hat: f64,
    pub half_width: f64,
    pub lower_ok: bool,
    /// Checked only at `N = 1` for `n ≥ 2`.
    pub upper_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoThresholdTable {
    pub n: usize,
    pub delta0_lower: f64,
    /// `E[μ(K₁)] = Π (1 - 2p_k(1-p_k))`.
    pub exact_f1: f64,
    pub rows: Vec<WitnessRow>,
}

/// Monte Carlo evidence that the captured mass stays above `δ₀` at every `N`
/// while `F(1) ≤ 1/2`.
pub fn no_threshold_witness(
    n: usize,
    n_grid: &[u64],
    trials: usize,
    seed: u64,
) -> Result<NoThresholdTable> {
    if n == 0 || n > 25 {
        return Err(Error::domain("no-threshold witness needs 1 <= n <= 25"));
    }
    let ps: Vec<f64> = (1..=n as u64).map(discr_prod_p).collect();
    let cfg = ExperimentConfig::new(MeasureSpec::BernoulliProduct { p: ps.clone() }, MassMethod::ExactCube)
        .with_n_grid(n_grid.to_vec())
        .with_trials(trials)
        .with_seed(seed);
    let est = estimate_f(&cfg)?;
    let delta0 = discr_prod_sequence(n as u64)?.delta0_lower;
    let rows = est
        .iter()
        .map(|r| WitnessRow {
            n_samples: r.n_samples,
            f_hat: r.f_hat,
            half_width: r.half_width,
            lower_ok: r.f_hat >= delta0 - 3.0 * r.half_width,
            upper_ok: (r.n_samples == 1 && n >= 2).then_some(r.f_hat <= 0.5 + 3.0 * r.half_width),
        })
        .collect();
    Ok(NoThresholdTable {
        n,
        delta0_lower: delta0,
        exact_f1: ps.iter().map(|p| 1.0 - 2.0 * p * (1.0 - p)).product(),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InfiniteMeanRow {
    pub k: u64,
    pub p_k: f64,
    /// Certified lower bound on `Λ*(x_k)` for the truncated law.
    pub lower_bound: f64,
    /// `Σ_{j≤k} p_j · lower_bound_j`.
    pub partial_sum: f64,
    /// The `t` at which the bound was evaluated.
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfiniteMeanTable {
    pub n: usize,
    pub k_atoms: u64,
    /// Normalizer of the truncated law, `1 / Σ_{k≤K} 1/(k log² k)`.
    pub c_truncated: f64,
    /// Lower bound on the normalizer of the untruncated law, from
    /// `Σ_{k>K} 1/(k log² k) ≤ 1/log K`.
    pub c_infinite_lower: f64,
    /// Upper bound on the mass beyond `K` in the untruncated law.
    pub tail_mass_bound: f64,
    pub rows: Vec<InfiniteMeanRow>,
}

/// Atom `x_k` of the construction in ℝⁿ: `x_2 = 0`, otherwise
/// `(cos 1/k, sin 1/k, 0, …)` with an extra 1 at coordinate `k` when `k ≤ n`.
pub fn infinite_mean_atom(n: usize, k: u64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    if k >= 3 {
        let a = 1.0 / k as f64;
        x[0] = a.cos();
        x[1] = a.sin();
        if (k as usize) <= n {
            x[k as usize - 1] = 1.0;
        }
    }
    x
}

// Upper bound on Σ_{m≠k} p_m e^{t·gap_m} + p_k for the ray through
// ξ_k = (cos 1/k, sin 1/k, 0, …). Atoms m ≥ 3 have gap -2 sin²((1/k-1/m)/2),
// monotone in the distance from k; terms with t·gap < -CUT are bounded in bulk
// by (their mass)·e^{t·gap at the window edge}.
struct RaySum<'a> {
    p: &'a [f64],      // p[m], m = 0..=K (entries 0, 1 unused)
    prefix: &'a [f64], // prefix[m] = Σ_{j<m} p[j]
}

const CUT: f64 = 60.0;

impl RaySum<'_> {
    fn gap(k: u64, m: u64) -> f64 {
        if m == 2 {
            return -1.0;
        }
        let d = 0.5 * (1.0 / k as f64 - 1.0 / m as f64);
        let s = d.sin();
        -2.0 * s * s
    }

    fn total(&self, k: u64, t: f64) -> f64 {
        let kmax = (self.p.len() - 1) as u64;
        let inside = |m: u64| t * Self::gap(k, m) >= -CUT;
        // widest window [a, b] ⊆ [3, K] around k with t·gap ≥ -CUT
        let (mut lo, mut hi) = (3u64, k);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if inside(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let a = lo;
        let (mut lo, mut hi) = (k, kmax);
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if inside(mid) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let b = lo;
        let mut s = self.p[2] * (-t).exp();
        for m in a..=b {
            s += self.p[m as usize] * (t * Self::gap(k, m)).exp();
        }
        if a > 3 {
            let rest = self.prefix[a as usize] - self.prefix[3];
            s += rest * (t * Self::gap(k, a - 1)).exp();
        }
        if b < kmax {
            let rest = self.prefix[kmax as usize + 1] - self.prefix[b as usize + 1];
            s += rest * (t * Self::gap(k, b + 1)).exp();
        }
        s
    }

    fn lower(&self, k: u64, t: f64) -> f64 {
        (-self.total(k, t).ln()).max(0.0)
    }
}

/// Certified lower bounds on `Λ*(x_k)` for the construction truncated to
/// atoms `2 ≤ k ≤ K` and renormalized.
///
/// Each bound is `⟨tξ_k, x_k⟩ - Λ(tξ_k) = -log Σ_m p_m e^{t⟨ξ_k, x_m - x_k⟩}`
/// evaluated (with an over-estimated sum) at a single `t ∈ [0, t_max]`,
/// chosen by a log-spaced scan followed by golden-section refinement.
pub fn atomic_infinite_mean(n: usize, k_atoms: u64, t_max: f64) -> Result<InfiniteMeanTable> {
    if n < 2 {
        return Err(Error::domain("construction needs n >= 2"));
    }
    if !(3..=10_000).contains(&k_atoms) {
        return Err(Error::domain("k_atoms must lie in [3, 10^4]"));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::domain("t_max must be positive and finite"));
    }
    let kk = k_atoms as usize;
    let mut w = vec![0.0; kk + 1];
    for (m, wm) in w.iter_mut().enumerate().skip(2) {
        let l = (m as f64).ln();
        *wm = 1.0 / (m as f64 * l * l);
    }
    let s: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|v| v / s).collect();
    let mut prefix = vec![0.0; kk + 2];
    for m in 0..=kk {
        prefix[m + 1] = prefix[m] + p[m];
    }
    let ray = RaySum {
        p: &p,
        prefix: &prefix,
    };
    let mut rows = Vec::with_capacity(kk - 1);
    let mut acc = 0.0;
    for k in 2..=k_atoms {
        let (lb, t) = if k == 2 { (0.0, 0.0) } else { maximize(&ray, k, t_max) };
        acc += p[k as usize] * lb;
        rows.push(InfiniteMeanRow {
            k,
            p_k: p[k as usize],
            lower_bound: lb,
            partial_sum: acc,
            t,
        });
    }
    let tail = 1.0 / (k_atoms as f64).ln();
    let c_inf = 1.0 / (s + tail);
    Ok(InfiniteMeanTable {
        n,
        k_atoms,
        c_truncated: 1.0 / s,
        c_infinite_lower: c_inf,
        tail_mass_bound: tail / s,
        rows,
    })
}

fn maximize(ray: &RaySum<'_>, k: u64, t_max: f64) -> (f64, f64) {
    const GRID: usize = 96;
    let u_lo = 1e-3f64.ln();
    let u_hi = t_max.ln();
    if u_hi <= u_lo {
        let v = ray.lower(k, t_max);
        return if v > 0.0 { (v, t_max) } else { (0.0, 0.0) };
    }
    let f = |u: f64| ray.lower(k, u.exp());
    let step = (u_hi - u_lo) / (GRID - 1) as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut best_i = 0;
    // scan from large t down: small t means wide windows, and the scan can
    // stop once past the peak
    let mut falling = 0;
    for i in (0..GRID).rev() {
        let u = u_lo + step * i as f64;
        let v = f(u);
        if v > best.0 {
            best = (v, u);
            best_i = i;
            falling = 0;
        } else if best.1 != f64::NEG_INFINITY {
            falling += 1;
            if falling == 3 {
                break;
            }
        }
    }
    if best.1 == f64::NEG_INFINITY {
        return (0.0, 0.0);
    }
    // unimodal in log t, since concave in t
    let (mut a, mut b) = (
        u_lo + step * best_i.saturating_sub(1) as f64,
        (u_lo + step * (best_i + 1) as f64).min(u_hi),
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    for (v, u) in [(fc, c), (fd, d)] {
        if v > best.0 {
            best = (v, u);
        }
    }
    (best.0, best.1.exp())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthNearOne {
    pub epsilon: f64,
    pub n: usize,
    pub probs: Vec<f64>,
    /// `Π (1 - 2p_i(1-p_i))`.
    pub value: f64,
    /// `Σ_x P(X = x)²` over `{0,1}ⁿ`, for `n ≤ 20`.
    pub brute_force: Option<f64>,
}

/// `E[q_X]` for independent Bernoulli(ε/2^{i+1}) coordinates.
pub fn depth_expectation_near_one(epsilon: f64, n: usize) -> Result<DepthNearOne> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain("epsilon must lie in (0, 1)"));
    }
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let probs: Vec<f64> = (1..=n as i32).map(|i| epsilon / 2f64.powi(i + 1)).collect();
    let value: f64 = probs.iter().map(|p| 1.0 - 2.0 * p * (1.0 - p)).product();
    if value < 1.0 - epsilon {
        return Err(Error::Undefined(format!(
            "E[q] = {value} fell below 1 - epsilon"
        )));
    }
    let brute_force = (n <= 20).then(|| {
        (0u32..1 << n)
            .map(|mask| {
                let pr: f64 = probs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| if mask >> i & 1 == 1 { *p } else { 1.0 - p })
                    .product();
                pr * pr
            })
            .sum()
    });
    Ok(DepthNearOne {
        epsilon,
        n,
        probs,
        value,
        brute_force,
    })
}

type Q = Ratio<i128>;

/// Sign of `a + b√2`, exactly.
fn sign_with_sqrt2(a: Q, b: Q) -> i8 {
    let sa = a.signum();
    let sb = b.signum();
    if sb.is_zero() {
        return sign_of(&sa);
    }
    if sa.is_zero() || sa == sb {
        return sign_of(&sb);
    }
    // opposite signs: compare a² with 2b²
    let lhs = a * a;
    let rhs = Q::from_integer(2) * b * b;
    if lhs > rhs {
        sign_of(&sa)
    } else if lhs < rhs {
        sign_of(&sb)
    } else {
        0
    }
}

fn sign_of(q: &Q) -> i8 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KolounReport {
    pub box_half_width: i64,
    pub points_found: Vec<[i64; 3]>,
    /// Candidates that needed the exact fallback.
    pub exact_checks: usize,
}

/// Integer points of `{(x,y,z) : (x - √2 z)² + (y - 1/3)² ≤ 1/9}` in the box
/// `[-w, w]³`.
///
/// The `(y - 1/3)²` term is exact; `(x - √2 z)²` is first bracketed in
/// floating point with a generous error margin, and undecided candidates are
/// settled by exact arithmetic in `ℚ(√2)`.
pub fn koloun_check(box_half_width: i64) -> Result<KolounReport> {
    if !(1..=1_000_000).contains(&box_half_width) {
        return Err(Error::domain("box half-width must lie in [1, 10^6]"));
    }
    let w = box_half_width;
    let ninth = Q::new(1, 9);
    let third = Q::new(1, 3);
    let mut found = Vec::new();
    let mut exact = 0;
    for y in -w..=w {
        let dy = Q::from_integer(y as i128) - third;
        let budget = ninth - dy * dy;
        if budget.is_negative() {
            continue;
        }
        let bf = *budget.numer() as f64 / *budget.denom() as f64;
        for x in -w..=w {
            for z in -w..=w {
                let v = x as f64 - std::f64::consts::SQRT_2 * z as f64;
                let lhs = v * v;
                let err = 1e-12 * (1.0 + (x as f64).powi(2) + 2.0 * (z as f64).powi(2));
                if lhs - err > bf {
                    continue;
                }
                let inside = if lhs + err < bf {
                    true
                } else {
                    exact += 1;
                    // (x - √2 z)² - budget = (x² + 2z² - budget) - 2xz·√2
                    let a = Q::from_integer((x as i128).pow(2) + 2 * (z as i128).pow(2)) - budget;
                    let b = Q::from_integer(-2 * x as i128 * z as i128);
                    sign_with_sqrt2(a, b) <= 0
                };
                if inside {
                    found.push([x, y, z]);
                }
            }
        }
    }
    Ok(KolounReport {
        box_half_width: w,
        points_found: found,
        exact_checks: exact,
    })
}
