use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pivot cap for the phase-1 solve.
pub const MAX_PIVOTS: usize = 100_000;

/// Tolerance used when verifying witnesses.
pub const WITNESS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HullStatus {
    Inside,
    Outside,
    /// Neither certificate could be verified; the point is ambiguous at the
    /// working tolerance.
    Marginal,
}

/// Certificate for `x ∈ conv(points)` or its negation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HullWitness {
    pub status: HullStatus,
    /// Convex weights reproducing `x`, when inside.
    pub coefficients: Option<Vec<f64>>,
    /// `(θ, offset)` with `⟨θ, x⟩ > offset ≥ max_i ⟨θ, X_i⟩`, `‖θ‖₂ = 1`.
    pub separator: Option<(Vec<f64>, f64)>,
    /// Phase-1 optimum for inside points, `⟨θ,x⟩ - max_i ⟨θ,X_i⟩` for
    /// outside points.
    pub margin: f64,
    pub pivots: usize,
}

impl HullWitness {
    pub fn is_inside(&self) -> bool {
        self.status == HullStatus::Inside
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Decides `x ∈ conv(points)` by a phase-1 simplex on
/// `{λ ≥ 0, Σλ = 1, Σλ_i X_i = x}` with Bland's rule.
///
/// Arithmetic is carried out in `f64` whatever the input scalar. `tol` is the
/// marginal band on the phase-1 objective. Every `Inside` / `Outside` answer
/// has been re-checked directly against the input points.
pub fn hull_membership<T: Real>(x: &[T], points: &[Vec<T>], tol: f64) -> Result<HullWitness> {
    let Some(first) = points.first() else {
        return Err(Error::validation("hull of an empty point set"));
    };
    let n = x.len();
    if first.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: first.len(),
        });
    }
    for p in points {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.len(),
            });
        }
    }
    let xs: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
    let pts: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().map(|v| v.as_f64()).collect())
        .collect();
    let mut lp = Phase1::new(&xs, &pts);
    let pivots = lp.solve()?;
    let objective = lp.objective();
    if objective <= tol {
        let lambda = lp.primal(pts.len());
        if let Some(w) = verify_inside(&xs, &pts, lambda) {
            return Ok(HullWitness {
                status: HullStatus::Inside,
                coefficients: Some(w),
                separator: None,
                margin: objective,
                pivots,
            });
        }
    } else if let Some((theta, offset, margin)) = verify_outside(&xs, &pts, lp.dual()) {
        return Ok(HullWitness {
            status: HullStatus::Outside,
            coefficients: None,
            separator: Some((theta, offset)),
            margin,
            pivots,
        });
    }
    Ok(HullWitness {
        status: HullStatus::Marginal,
        coefficients: None,
        separator: None,
        margin: objective,
        pivots,
    })
}

fn verify_inside(x: &[f64], pts: &[Vec<f64>], mut lambda: Vec<f64>) -> Option<Vec<f64>> {
    for l in &mut lambda {
        if *l < -WITNESS_TOL {
            return None;
        }
        *l = l.max(0.0);
    }
    let s: f64 = lambda.iter().sum();
    if (s - 1.0).abs() > WITNESS_TOL || s <= 0.0 {
        return None;
    }
    for l in &mut lambda {
        *l /= s;
    }
    let err = (0..x.len())
        .map(|d| {
            let r: f64 = pts.iter().zip(&lambda).map(|(p, l)| p[d] * l).sum();
            (r - x[d]).abs()
        })
        .fold(0.0, f64::max);
    (err <= WITNESS_TOL).then_some(lambda)
}

/// The phase-1 dual `y = (θ', c')` satisfies `⟨θ',X_i⟩ + c' ≤ 0 < ⟨θ',x⟩ + c'`
/// at an infeasible optimum.
fn verify_outside(x: &[f64], pts: &[Vec<f64>], y: Vec<f64>) -> Option<(Vec<f64>, f64, f64)> {
    let n = x.len();
    let norm = y[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let theta: Vec<f64> = y[..n].iter().map(|v| v / norm).collect();
    let dot = |p: &[f64]| p.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>();
    let hi = pts.iter().map(|p| dot(p)).fold(f64::NEG_INFINITY, f64::max);
    let at_x = dot(x);
    let margin = at_x - hi;
    (margin > WITNESS_TOL).then(|| (theta, hi + 0.5 * margin, margin))
}

/// Dense phase-1 tableau. Rows are the `n` coordinate constraints followed by
/// `Σλ = 1`, each flipped to a non-negative right-hand side; one artificial
/// variable per row starts in the basis.
struct Phase1 {
    rows: usize,
    cols: usize,
    m: usize,
    /// `rows × (cols + 1)`, last column the right-hand side.
    t: Vec<f64>,
    /// Reduced costs, last entry minus the objective.
    cost: Vec<f64>,
    basis: Vec<usize>,
    sign: Vec<f64>,
}

const PIVOT_EPS: f64 = 1e-12;

impl Phase1 {
    fn new(x: &[f64], pts: &[Vec<f64>]) -> Self {
        let n = x.len();
        let m = pts.len();
        let rows = n + 1;
        let cols = m + rows;
        let w = cols + 1;
        let mut t = vec![0.0; rows * w];
        let mut sign = vec![1.0; rows];
        for r in 0..rows {
            let rhs = if r < n { x[r] } else { 1.0 };
            let s = if rhs < 0.0 { -1.0 } else { 1.0 };
            sign[r] = s;
            for (j, p) in pts.iter().enumerate() {
                let a = if r < n { p[r] } else { 1.0 };
                t[r * w + j] = s * a;
            }
            t[r * w + m + r] = 1.0;
            t[r * w + cols] = s * rhs;
        }
        // reduced cost of column j: c_j - Σ_r t[r][j] (all artificial costs 1)
        let mut cost = vec![0.0; w];
        for r in 0..rows {
            for j in 0..w {
                if j < m || j == cols {
                    cost[j] -= t[r * w + j];
                }
            }
        }
        Phase1 {
            rows,
            cols,
            m,
            t,
            cost,
            basis: (m..m + rows).collect(),
            sign,
        }
    }

    fn width(&self) -> usize {
        self.cols + 1
    }

    fn solve(&mut self) -> Result<usize> {
        let w = self.width();
        for pivots in 0..MAX_PIVOTS {
            // Bland: lowest-index column with negative reduced cost
            let Some(enter) = (0..self.cols).find(|&j| self.cost[j] < -PIVOT_EPS) else {
                return Ok(pivots);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.t[r * w + enter];
                if a > PIVOT_EPS {
                    let ratio = self.t[r * w + self.cols] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-15
                                || (ratio <= lratio + 1e-15 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            // phase-1 objective is bounded below by zero, so a column with
            // negative reduced cost always has a positive entry
            let Some((r, _)) = leave else {
                return Err(Error::SolverStall(pivots));
            };
            self.pivot(r, enter);
        }
        Err(Error::SolverStall(MAX_PIVOTS))
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                for j in 0..w {
                    self.t[i * w + j] -= f * prow[j];
                }
                self.t[i * w + c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for j in 0..w {
                self.cost[j] -= f * prow[j];
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn objective(&self) -> f64 {
        (-self.cost[self.cols]).max(0.0)
    }

    fn primal(&self, m: usize) -> Vec<f64> {
        let w = self.width();
        let mut lambda = vec![0.0; m];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < m {
                lambda[b] = self.t[r * w + self.cols];
            }
        }
        lambda
    }

    /// Dual of the original (unflipped) rows: `y_r = sign_r (1 - d_r)` where
    /// `d_r` is the reduced cost of artificial `r`.
    fn dual(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.sign[r] * (1.0 - self.cost[self.m + r]))
            .collect()
    }
}
