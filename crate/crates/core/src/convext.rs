//! Piecewise-linear convex extension of `g = -log p` for log-concave mass
//! functions, product extensions, integrability and moment probes, and the
//! normalized restriction of a log-concave function to the lattice.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures::{
    validate_log_concave, Atom, FiniteAtomicLaw, Pmf1D, ProductLaw, TailPolicy,
};
use crate::scalar::{log_sum_exp, Real};

/// `g̃(x) = g(k) + (x - k)(g(k+1) - g(k))` on `[k, k+1]`, `+∞` off the
/// support hull.
#[derive(Clone, Debug)]
pub struct PiecewiseLinearExtension<T> {
    base: Pmf1D<T>,
    slopes: Vec<T>,
}

/// Builds the extension; rejects laws that are not log-concave.
pub fn extend_1d<T: Real>(pmf: &Pmf1D<T>) -> Result<PiecewiseLinearExtension<T>> {
    let report = validate_log_concave(pmf);
    if !report.is_log_concave {
        return Err(Error::validation(format!(
            "not log-concave at k = {}",
            report.first_violation.unwrap_or(pmf.k_min())
        )));
    }
    let g = pmf.log_masses();
    let slopes = g.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(PiecewiseLinearExtension {
        base: pmf.clone(),
        slopes,
    })
}

impl<T: Real> PiecewiseLinearExtension<T> {
    pub fn base(&self) -> &Pmf1D<T> {
        &self.base
    }

    /// `g(k+1) - g(k)` for consecutive support points.
    pub fn slopes(&self) -> &[T] {
        &self.slopes
    }

    pub fn eval(&self, x: T) -> T {
        let (a, b) = (self.base.k_min(), self.base.k_max());
        if !(x >= T::of_i64(a) && x <= T::of_i64(b)) {
            return T::infinity();
        }
        let k = x.floor().to_i64().unwrap().min(b);
        let gk = self.base.g(k);
        if k == b {
            return gk;
        }
        gk + (x - T::of_i64(k)) * self.slopes[(k - a) as usize]
    }

    /// `∫ e^{-g̃}` in closed form, piece by piece.
    pub fn integral(&self) -> IntegralReport<T> {
        let a = self.base.k_min();
        let g = self.base.log_masses();
        let pieces: Vec<(i64, T)> = self
            .slopes
            .iter()
            .enumerate()
            .map(|(i, &s)| (a + i as i64, piece_integral(g[i], s)))
            .collect();
        let value = pieces.iter().map(|p| p.1).sum();
        IntegralReport { value, pieces }
    }
}

/// `∫_0^1 e^{-(g0 + s t)} dt = e^{-g0} (1 - e^{-s}) / s`.
fn piece_integral<T: Real>(g0: T, s: T) -> T {
    let p0 = (-g0).exp();
    if s.abs() < T::lit(1e-8) {
        // series of (1 - e^{-s})/s
        return p0 * (T::one() - s / T::lit(2.0) + s * s / T::lit(6.0));
    }
    p0 * (-(-s).exp_m1()) / s
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralReport<T> {
    pub value: T,
    /// `(k, ∫_k^{k+1} e^{-g̃})`.
    pub pieces: Vec<(i64, T)>,
}

/// `∫_ℝ e^{-g̃}` for a log-concave law.
pub fn integral_extension_1d<T: Real>(ext: &PiecewiseLinearExtension<T>) -> IntegralReport<T> {
    ext.integral()
}

/// `g̃(x) = Σ g̃_i(x_i)` for a product of log-concave factors.
#[derive(Clone, Debug)]
pub struct ProductExtension<T> {
    parts: Vec<PiecewiseLinearExtension<T>>,
}

impl<T: Real> ProductExtension<T> {
    pub fn new(law: &ProductLaw<T>) -> Result<Self> {
        let parts = law
            .factors()
            .iter()
            .map(extend_1d)
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductExtension { parts })
    }

    pub fn parts(&self) -> &[PiecewiseLinearExtension<T>] {
        &self.parts
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.parts.len() {
            return Err(Error::DimensionMismatch {
                expected: self.parts.len(),
                got: x.len(),
            });
        }
        Ok(self
            .parts
            .iter()
            .zip(x)
            .map(|(p, xi)| p.eval(*xi))
            .fold(T::zero(), |a, b| a + b))
    }
}

pub fn product_extension_eval<T: Real>(law: &ProductLaw<T>, x: &[T]) -> Result<T> {
    ProductExtension::new(law)?.eval(x)
}

/// Result of restricting a function to the lattice.
#[derive(Clone, Debug)]
pub enum Restriction<T> {
    /// One-dimensional input: a mass function on a contiguous window.
    OneDim(Pmf1D<T>),
    Atomic(FiniteAtomicLaw<T>),
}

/// Options for [`restriction_construct`].
#[derive(Clone, Copy, Debug)]
pub struct RestrictionOptions {
    /// Caller's bound on `Σ_{ℓ outside window} F(ℓ) / Σ_ℓ F(ℓ)`.
    pub tail_certificate: f64,
    pub epsilon_tail: f64,
    pub spot_checks: usize,
    pub seed: u64,
}

impl Default for RestrictionOptions {
    fn default() -> Self {
        RestrictionOptions {
            tail_certificate: 0.0,
            epsilon_tail: TailPolicy::default().epsilon_tail,
            spot_checks: 1000,
            seed: 0,
        }
    }
}

/// `p(k) = F(k) / Σ_ℓ F(ℓ)` over `ℤⁿ ∩ window`.
///
/// Log-concavity of `F` is spot-checked at random real pairs `a, b` in the
/// window: `F((a+b)/2)² ≥ F(a) F(b)`.
pub fn restriction_construct<T: Real>(
    f: impl Fn(&[f64]) -> f64,
    window: &[(i64, i64)],
    options: RestrictionOptions,
) -> Result<Restriction<T>> {
    let n = window.len();
    if n == 0 || window.iter().any(|(a, b)| a > b) {
        return Err(Error::validation("window must be a nonempty box"));
    }
    if !(options.tail_certificate >= 0.0 && options.tail_certificate < options.epsilon_tail) {
        return Err(Error::validation(format!(
            "tail certificate {} not below epsilon_tail {}",
            options.tail_certificate, options.epsilon_tail
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 0..options.spot_checks {
        let a: Vec<f64> = window
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo as f64..=hi as f64))
            .collect();
        let b: Vec<f64> = window
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo as f64..=hi as f64))
            .collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let (fa, fb, fm) = (f(&a), f(&b), f(&mid));
        let tol = 1e-12 * (fa * fb).abs().max(f64::MIN_POSITIVE);
        if fm * fm < fa * fb - tol {
            return Err(Error::validation(format!(
                "not log-concave: F(mid)^2 < F(a)F(b) for a = {a:?}, b = {b:?}"
            )));
        }
    }
    let total: u128 = window
        .iter()
        .map(|(a, b)| (b - a + 1) as u128)
        .product();
    if total > 10_000_000 {
        return Err(Error::capacity("restriction window", total as f64, 1e7));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut x: Vec<i64> = window.iter().map(|w| w.0).collect();
    loop {
        let xf: Vec<f64> = x.iter().map(|v| *v as f64).collect();
        let w = f(&xf);
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::validation(format!("F({x:?}) = {w} is not a weight")));
        }
        points.push(x.clone());
        weights.push(w);
        let Some(j) = (0..n).rev().find(|&j| x[j] < window[j].1) else {
            break;
        };
        x[j] += 1;
        for (i, xi) in x.iter_mut().enumerate().skip(j + 1) {
            *xi = window[i].0;
        }
    }
    if n == 1 {
        let first = weights.iter().position(|w| *w > 0.0);
        let last = weights.iter().rposition(|w| *w > 0.0);
        let (Some(i0), Some(i1)) = (first, last) else {
            return Err(Error::validation("F vanishes on the window"));
        };
        let lw: Vec<T> = weights[i0..=i1].iter().map(|w| T::lit(w.ln())).collect();
        return Ok(Restriction::OneDim(Pmf1D::from_log_weights(
            points[i0][0],
            lw,
        )?));
    }
    let atoms: Vec<Atom<T>> = points
        .into_iter()
        .zip(weights)
        .filter(|(_, w)| *w > 0.0)
        .map(|(p, w)| Atom {
            point: p.into_iter().map(T::of_i64).collect(),
            prob: T::lit(w),
        })
        .collect();
    if atoms.is_empty() {
        return Err(Error::validation("F vanishes on the window"));
    }
    Ok(Restriction::Atomic(FiniteAtomicLaw::from_weights(atoms)?))
}

/// Partial sums of `Σ g̃(k)^q e^{-g̃(k)}` over Euclidean balls, with a fitted
/// exponential envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentProbe {
    /// `(R, Σ_{‖k‖₂ ≤ R} g(k)^q p(k))`.
    pub rows: Vec<(f64, f64)>,
    /// `(A, B)` with `g̃(k) ≥ B‖k‖₂ - log A` on the outer shell.
    pub envelope: Option<(f64, f64)>,
    /// Bound on the remaining sum beyond the last radius implied by the
    /// envelope; present only when the envelope fit succeeded.
    pub tail_bound: Option<f64>,
    pub certified: bool,
}

/// Probes finiteness of `E[(Λ*)^q]`-type sums for a product of log-concave
/// factors.
pub fn moment_finiteness_probe<T: Real>(
    law: &ProductLaw<T>,
    q: f64,
    radii: &[f64],
) -> Result<MomentProbe> {
    if !(q >= 1.0) {
        return Err(Error::domain(format!("q = {q} must be >= 1")));
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("radii must be nonempty and increasing"));
    }
    ProductExtension::new(law)?;
    let size = law.support_size();
    if size > 10_000_000 {
        return Err(Error::capacity("product support", size as f64, 1e7));
    }
    // (‖k‖₂, g(k))
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(size as usize);
    let factors = law.factors();
    let mut idx: Vec<i64> = factors.iter().map(|f| f.k_min()).collect();
    loop {
        let norm = idx.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
        let g: f64 = factors
            .iter()
            .zip(&idx)
            .map(|(f, k)| f.g(*k).as_f64())
            .sum();
        pts.push((norm, g));
        let Some(j) = (0..idx.len()).rev().find(|&j| idx[j] < factors[j].k_max()) else {
            break;
        };
        idx[j] += 1;
        for (i, v) in idx.iter_mut().enumerate().skip(j + 1) {
            *v = factors[i].k_min();
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let term = |g: f64| if g > 0.0 { g.powf(q) * (-g).exp() } else { 0.0 };
    let mut rows = Vec::with_capacity(radii.len());
    let mut acc = 0.0;
    let mut i = 0;
    for &r in radii {
        while i < pts.len() && pts[i].0 <= r {
            acc += term(pts[i].1);
            i += 1;
        }
        rows.push((r, acc));
    }
    if radii.len() == 1 {
        return Ok(MomentProbe {
            rows,
            envelope: None,
            tail_bound: None,
            certified: false,
        });
    }
    // the shell is the outer half of the probed region that carries mass
    let r_last = radii.last().unwrap().min(pts.last().unwrap().0);
    let shell: Vec<(f64, f64)> = pts
        .iter()
        .copied()
        .filter(|(nrm, _)| *nrm >= 0.5 * r_last && *nrm <= r_last)
        .collect();
    let envelope = fit_envelope(&shell);
    let tail_bound = envelope.map(|(a, b)| envelope_tail(a, b, q, r_last, law.n()));
    Ok(MomentProbe {
        rows,
        envelope,
        tail_bound,
        certified: envelope.is_some(),
    })
}

/// Least-squares slope `B` of `g` against `‖k‖`, then the smallest `log A`
/// making `g ≥ B‖k‖ - log A` on every shell point.
fn fit_envelope(shell: &[(f64, f64)]) -> Option<(f64, f64)> {
    if shell.len() < 2 {
        return None;
    }
    let m = shell.len() as f64;
    let (sx, sy) = shell.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = shell.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2))
    });
    if sxx <= 0.0 {
        return None;
    }
    let b = sxy / sxx;
    if !(b > 0.0) {
        return None;
    }
    let log_a = shell
        .iter()
        .map(|(x, g)| b * x - g)
        .fold(f64::NEG_INFINITY, f64::max);
    Some((log_a.exp(), b))
}

/// `Σ_{j ≥ R} (2j+3)^n · h(Bj - log A)` with `h(g) = g^q e^{-g}`, which
/// dominates the sum over `‖k‖₂ > R` once `BR - log A ≥ q` (where `h` is
/// decreasing).
fn envelope_tail(a: f64, b: f64, q: f64, r: f64, n: usize) -> f64 {
    let la = a.ln();
    let mut j = r.floor();
    while b * j - la < q {
        j += 1.0;
    }
    // terms below the monotone region are bounded by the peak value of h
    let peak = q.powf(q) * (-q).exp();
    let mut total: f64 = 0.0;
    let mut jj = r.floor();
    while jj < j {
        total += (2.0 * jj + 3.0).powi(n as i32) * peak;
        jj += 1.0;
    }
    let terms = (0..).map(|i| {
        let x = j + i as f64;
        let g = b * x - la;
        (n as f64) * (2.0 * x + 3.0).ln() + q * g.ln() - g
    });
    let mut logs = Vec::new();
    for t in terms {
        logs.push(t);
        if t < -800.0 || logs.len() > 1_000_000 {
            break;
        }
    }
    total + log_sum_exp(logs).exp()
}
