use crate::error::{Error, Result};
use crate::measures::{Pmf1D, ProductLaw};
use crate::scalar::{log_sum_exp, Real};

/// Bisection controls for the Legendre solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol_x: f64,
    pub tol_xi: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_x: 1e-12,
            tol_xi: 1e-12,
            max_iter: 200,
        }
    }
}

/// How a value of `Λ*` was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CramerStatus {
    /// Strictly inside the support hull; solved by bisection on `Λ'`.
    Interior,
    /// At a genuine endpoint of a bounded side: `-log p*`.
    Endpoint,
    /// At the truncation edge of an unbounded side: the truncated law's
    /// endpoint value, which understates the true transform.
    TruncatedEndpoint,
    /// Beyond the truncation edge on an unbounded side: linear continuation
    /// with slope `ξ*`.
    Extrapolated,
    /// Outside the support hull of a bounded side: `+∞`.
    Outside,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CramerPoint<T> {
    pub value: T,
    pub status: CramerStatus,
    /// Tilt parameter `h(x)` at the optimum, when solved in the interior.
    pub xi: Option<T>,
}

/// Log-MGF and Cramér transform of a 1D lattice law.
#[derive(Clone, Debug)]
pub struct CramerEvaluator1D<T> {
    pmf: Pmf1D<T>,
    mean: T,
    xi_plus: T,
    xi_minus: T,
    edge_converged: bool,
    solver: SolverOptions,
}

/// Relative change between the last two ratios at an edge above which
/// `r*` is treated as not yet converged.
const EDGE_RATIO_TOL: f64 = 1e-6;

impl<T: Real> CramerEvaluator1D<T> {
    pub fn new(pmf: Pmf1D<T>) -> Self {
        Self::with_solver(pmf, SolverOptions::default())
    }

    pub fn with_solver(pmf: Pmf1D<T>, solver: SolverOptions) -> Self {
        let mean = pmf.mean();
        let (kmin, kmax) = (pmf.k_min(), pmf.k_max());
        let mut edge_converged = true;
        let xi_plus = if pmf.right_unbounded() && kmax > kmin {
            let r = pmf.ratio(kmax - 1).unwrap();
            if let Some(r0) = pmf.ratio(kmax - 2) {
                edge_converged &= ((r - r0) / r).abs().as_f64() <= EDGE_RATIO_TOL;
            }
            (-r.ln()).max(T::zero())
        } else {
            T::infinity()
        };
        let xi_minus = if pmf.left_unbounded() && kmax > kmin {
            // p(k_min) / p(k_min + 1)
            let r = T::one() / pmf.ratio(kmin).unwrap();
            if let Some(r0) = pmf.ratio(kmin + 1) {
                let r0 = T::one() / r0;
                edge_converged &= ((r - r0) / r).abs().as_f64() <= EDGE_RATIO_TOL;
            }
            (-r.ln()).max(T::zero())
        } else {
            T::infinity()
        };
        CramerEvaluator1D {
            pmf,
            mean,
            xi_plus,
            xi_minus,
            edge_converged,
            solver,
        }
    }

    pub fn pmf(&self) -> &Pmf1D<T> {
        &self.pmf
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    /// Right end `ξ*` of the MGF domain (`+∞` for a bounded right side).
    pub fn xi_star(&self) -> T {
        self.xi_plus
    }

    /// Left end, as a positive number: the domain is `(-xi_star_left, xi_star)`.
    pub fn xi_star_left(&self) -> T {
        self.xi_minus
    }

    /// False when the ratio at a truncation edge is still moving, so `ξ*`
    /// is only an estimate.
    pub fn edge_converged(&self) -> bool {
        self.edge_converged
    }

    /// Right support endpoint `x*`; `+∞` for laws truncated from an
    /// unbounded support.
    pub fn x_star(&self) -> T {
        if self.pmf.right_unbounded() {
            T::infinity()
        } else {
            T::of_i64(self.pmf.k_max())
        }
    }

    /// `μ({x*})` for a bounded right side.
    pub fn p_star(&self) -> Option<T> {
        (!self.pmf.right_unbounded()).then(|| self.pmf.mass(self.pmf.k_max()))
    }

    fn in_domain(&self, xi: T) -> bool {
        let shrink = T::one() - T::lit(1e-12);
        xi < self.xi_plus * shrink && -xi < self.xi_minus * shrink
    }

    /// `Λ(ξ) = log Σ p(k) e^{ξk}`; `+∞` outside the open MGF domain.
    pub fn log_mgf(&self, xi: T) -> T {
        if !self.in_domain(xi) {
            return T::infinity();
        }
        log_sum_exp(self.pmf.iter_log().map(|(k, g)| xi * T::of_i64(k) - g))
    }

    /// `Λ'(ξ)`, the mean of the exponentially tilted law.
    pub fn log_mgf_derivative(&self, xi: T) -> T {
        if !self.in_domain(xi) {
            return T::nan();
        }
        self.centered_derivative(xi, T::zero())
    }

    /// `Σ (k - x) w_k(ξ)` with `w` the tilted weights.
    fn centered_derivative(&self, xi: T, x: T) -> T {
        let a: Vec<T> = self
            .pmf
            .iter_log()
            .map(|(k, g)| xi * (T::of_i64(k) - x) - g)
            .collect();
        let lse = log_sum_exp(a.iter().copied());
        self.pmf
            .iter_log()
            .zip(&a)
            .map(|((k, _), ai)| (T::of_i64(k) - x) * (*ai - lse).exp())
            .sum()
    }

    /// `ξx - Λ(ξ)` written as `-log Σ p(k) e^{ξ(k-x)}`.
    fn objective(&self, xi: T, x: T) -> T {
        -log_sum_exp(self.pmf.iter_log().map(|(k, g)| xi * (T::of_i64(k) - x) - g))
    }

    /// `Λ*(x)`.
    pub fn cramer_1d(&self, x: T) -> T {
        self.cramer_detailed(x).value
    }

    pub fn cramer_detailed(&self, x: T) -> CramerPoint<T> {
        let (a, b) = (T::of_i64(self.pmf.k_min()), T::of_i64(self.pmf.k_max()));
        let point = |value, status| CramerPoint {
            value,
            status,
            xi: None,
        };
        if x.is_nan() {
            return point(T::nan(), CramerStatus::Outside);
        }
        if x > b {
            return if self.pmf.right_unbounded() {
                let slope = self.xi_plus;
                point(self.pmf.g(self.pmf.k_max()) + slope * (x - b), CramerStatus::Extrapolated)
            } else {
                point(T::infinity(), CramerStatus::Outside)
            };
        }
        if x < a {
            return if self.pmf.left_unbounded() {
                let slope = self.xi_minus;
                point(self.pmf.g(self.pmf.k_min()) + slope * (a - x), CramerStatus::Extrapolated)
            } else {
                point(T::infinity(), CramerStatus::Outside)
            };
        }
        if x == b || x == a {
            let k = if x == b { self.pmf.k_max() } else { self.pmf.k_min() };
            let unbounded = if x == b {
                self.pmf.right_unbounded()
            } else {
                self.pmf.left_unbounded()
            };
            let status = if unbounded {
                CramerStatus::TruncatedEndpoint
            } else {
                CramerStatus::Endpoint
            };
            return point(self.pmf.g(k), status);
        }
        let xi = self.solve_tilt(x);
        let mut value = T::zero();
        for z in xi {
            let v = self.objective(z, x);
            if v > value {
                value = v;
            }
        }
        CramerPoint {
            value,
            status: CramerStatus::Interior,
            xi: Some(xi[2]),
        }
    }

    /// Bisection on `Λ'(ξ) = x`; returns `[lo, hi, mid]` of the final bracket.
    fn solve_tilt(&self, x: T) -> [T; 3] {
        let h = |xi: T| self.centered_derivative(xi, x);
        let two = T::lit(2.0);
        let cap = T::lit(1e300);
        let (mut lo, mut hi) = (-T::one(), T::one());
        // expand until Λ'(lo) ≤ x ≤ Λ'(hi)
        while h(hi) < T::zero() && hi < cap {
            lo = hi;
            hi = hi * two;
        }
        while h(lo) > T::zero() && -lo < cap {
            hi = lo;
            lo = lo * two;
        }
        let tol_xi = T::lit(self.solver.tol_xi);
        // the value error is of order d² / Λ''(ξ), so |d| ≤ tol_x is ample
        let tol_x = T::lit(self.solver.tol_x);
        for _ in 0..self.solver.max_iter {
            let mid = lo + (hi - lo) / two;
            if hi - lo <= tol_xi * T::one().max(mid.abs()) {
                break;
            }
            let d = h(mid);
            if d.abs() <= tol_x {
                return [mid, mid, mid];
            }
            if d < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        [lo, hi, lo + (hi - lo) / two]
    }
}

impl<T: Real> Pmf1D<T> {
    /// `(k, g(k))` over the support.
    pub(crate) fn iter_log(&self) -> impl Iterator<Item = (i64, T)> + Clone + '_ {
        self.log_masses()
            .iter()
            .enumerate()
            .map(move |(i, g)| (self.k_min() + i as i64, *g))
    }
}

/// Per-coordinate evaluators for a product law.
#[derive(Clone, Debug)]
pub struct ProductCramer<T> {
    evaluators: Vec<CramerEvaluator1D<T>>,
}

impl<T: Real> ProductCramer<T> {
    pub fn new(law: &ProductLaw<T>) -> Self {
        let mut evaluators: Vec<CramerEvaluator1D<T>> = Vec::with_capacity(law.n());
        for f in law.factors() {
            // reuse the evaluator of an identical neighbour
            match evaluators.last() {
                Some(prev) if prev.pmf() == f => evaluators.push(prev.clone()),
                _ => evaluators.push(CramerEvaluator1D::new(f.clone())),
            }
        }
        ProductCramer { evaluators }
    }

    pub fn evaluators(&self) -> &[CramerEvaluator1D<T>] {
        &self.evaluators
    }

    /// `Λ*(x) = Σ Λ*_i(x_i)`.
    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.evaluators.len() {
            return Err(Error::DimensionMismatch {
                expected: self.evaluators.len(),
                got: x.len(),
            });
        }
        let mut acc = T::zero();
        for (ev, xi) in self.evaluators.iter().zip(x) {
            let v = ev.cramer_1d(*xi);
            if v == T::infinity() {
                return Ok(T::infinity());
            }
            acc = acc + v;
        }
        Ok(acc)
    }
}

/// `Λ*_μ(x)` for a product law.
pub fn cramer_product<T: Real>(law: &ProductLaw<T>, x: &[T]) -> Result<T> {
    ProductCramer::new(law).eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{make_bernoulli, make_symmetric_geometric, TailPolicy};

    fn grid_sup(ev: &CramerEvaluator1D<f64>, x: f64) -> f64 {
        // dense grid plus local refinement around the best grid point
        let mut best = (f64::NEG_INFINITY, 0.0);
        let steps = 200_000;
        for i in 0..=steps {
            let xi = -50.0 + 100.0 * i as f64 / steps as f64;
            let v = xi * x - ev.log_mgf(xi);
            if v > best.0 {
                best = (v, xi);
            }
        }
        let h = 100.0 / steps as f64;
        let (mut a, mut b) = (best.1 - h, best.1 + h);
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if m1 * x - ev.log_mgf(m1) < m2 * x - ev.log_mgf(m2) {
                a = m1;
            } else {
                b = m2;
            }
        }
        let m = 0.5 * (a + b);
        best.0.max(m * x - ev.log_mgf(m))
    }

    #[test]
    fn bernoulli_log_mgf() {
        for p in [0.1, 0.3, 0.77] {
            let ev = CramerEvaluator1D::new(make_bernoulli(p).unwrap());
            for xi in [-3.0, -0.2, 0.0, 0.5, 4.0] {
                let want = (1.0 - p + p * f64::exp(xi)).ln();
                assert!((ev.log_mgf(xi) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bernoulli_endpoints() {
        for p in [0.01_f64, 0.3, 0.5, 0.9] {
            let ev = CramerEvaluator1D::new(make_bernoulli(p).unwrap());
            let one = ev.cramer_detailed(1.0);
            assert_eq!(one.status, CramerStatus::Endpoint);
            assert!((one.value + p.ln()).abs() < 1e-15);
            assert!((ev.cramer_1d(0.0) + (1.0 - p).ln()).abs() < 1e-15);
            assert_eq!(ev.cramer_1d(1.5), f64::INFINITY);
            assert_eq!(ev.cramer_1d(-0.1), f64::INFINITY);
            assert!(ev.cramer_1d(p) < 1e-12);
        }
    }

    #[test]
    fn bernoulli_interior_matches_closed_form() {
        // Λ*(x) = x log(x/p) + (1-x) log((1-x)/(1-p))
        let p = 0.3;
        let ev = CramerEvaluator1D::new(make_bernoulli(p).unwrap());
        for i in 1..50 {
            let x = i as f64 / 50.0;
            let want = x * (x / p).ln() + (1.0 - x) * ((1.0 - x) / (1.0 - p)).ln();
            assert!((ev.cramer_1d(x) - want).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn bernoulli_grid_oracle() {
        let ev = CramerEvaluator1D::new(make_bernoulli(0.3).unwrap());
        assert!((ev.cramer_1d(0.6) - grid_sup(&ev, 0.6)).abs() < 1e-8);
    }

    #[test]
    fn geometric_domain_edge() {
        let ev = CramerEvaluator1D::new(
            make_symmetric_geometric(0.5_f64, TailPolicy::default()).unwrap(),
        );
        assert!((ev.xi_star() - 2f64.ln()).abs() < 1e-10);
        assert!(ev.edge_converged());
        assert_eq!(ev.log_mgf(2f64.ln()), f64::INFINITY);
        assert_eq!(ev.log_mgf(-2f64.ln()), f64::INFINITY);
        assert!(ev.log_mgf(0.0).abs() < 1e-14);
        assert!(ev.log_mgf(0.69).is_finite());
        assert!(ev.cramer_1d(0.0) < 1e-12);
        assert_eq!(ev.x_star(), f64::INFINITY);
        assert_eq!(ev.p_star(), None);
    }

    #[test]
    fn truncated_edges_are_flagged() {
        let ev = CramerEvaluator1D::new(
            make_symmetric_geometric(0.5_f64, TailPolicy::default()).unwrap(),
        );
        let k = ev.pmf().k_max();
        let at = ev.cramer_detailed(k as f64);
        assert_eq!(at.status, CramerStatus::TruncatedEndpoint);
        let beyond = ev.cramer_detailed(k as f64 + 2.0);
        assert_eq!(beyond.status, CramerStatus::Extrapolated);
        assert!((beyond.value - at.value - 2.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn product_sums_coordinates() {
        let law = ProductLaw::iid(make_bernoulli(0.5_f64).unwrap(), 6).unwrap();
        let v = cramer_product(&law, &[0.0, 1.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((v - 6.0 * 2f64.ln()).abs() < 1e-13);
        assert!(cramer_product(&law, &[0.5; 6]).unwrap() < 1e-12);
        let mut x = [0.5; 6];
        x[3] = 1.2;
        assert_eq!(cramer_product(&law, &x).unwrap(), f64::INFINITY);
        assert!(cramer_product(&law, &[0.5; 5]).is_err());
    }

    #[test]
    fn f32_bernoulli() {
        let ev = CramerEvaluator1D::new(make_bernoulli(0.3_f32).unwrap());
        let x = 0.6_f32;
        let want = x * (x / 0.3).ln() + (1.0 - x) * ((1.0 - x) / 0.7).ln();
        assert!((ev.cramer_1d(x) - want).abs() < 1e-5);
    }
}
