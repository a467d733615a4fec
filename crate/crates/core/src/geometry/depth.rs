use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::measures::{FiniteAtomicLaw, Pmf1D, ProductLaw};
use crate::scalar::Real;

/// Slack on the closed half-space test `⟨y, θ⟩ ≥ c`.
const HALFSPACE_SLACK: f64 = 1e-12;

/// Cap on the support of `⟨Y, θ⟩` for product laws with a generic direction.
pub const PROJECTION_CAP: usize = 1_000_000;

/// Laws for which `μ({y : ⟨y, θ⟩ ≥ c})` can be computed exactly.
pub trait HalfspaceMass<T> {
    fn dim(&self) -> usize;

    /// Mass of the closed half-space `{⟨y, θ⟩ ≥ c}`; `θ` need not be a unit
    /// vector (both sides are rescaled by `‖θ‖₂`).
    fn halfspace_mass(&self, theta: &[T], c: T) -> Result<T>;
}

fn unit<T: Real>(theta: &[T], c: T) -> Result<(Vec<T>, T)> {
    let norm = theta.iter().map(|v| *v * *v).sum::<T>().sqrt();
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::domain("direction must be a nonzero finite vector"));
    }
    Ok((theta.iter().map(|v| *v / norm).collect(), c / norm))
}

fn slack<T: Real>(c: T) -> T {
    T::lit(HALFSPACE_SLACK).max(T::epsilon() * T::lit(8.0)) * T::one().max(c.abs())
}

impl<T: Real> HalfspaceMass<T> for FiniteAtomicLaw<T> {
    fn dim(&self) -> usize {
        self.n()
    }

    fn halfspace_mass(&self, theta: &[T], c: T) -> Result<T> {
        if theta.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: theta.len(),
            });
        }
        let (u, c) = unit(theta, c)?;
        let cut = c - slack(c);
        Ok(self
            .atoms()
            .iter()
            .filter(|a| a.point.iter().zip(&u).map(|(y, t)| *y * *t).sum::<T>() >= cut)
            .map(|a| a.prob)
            .sum())
    }
}

impl<T: Real> HalfspaceMass<T> for ProductLaw<T> {
    fn dim(&self) -> usize {
        self.n()
    }

    fn halfspace_mass(&self, theta: &[T], c: T) -> Result<T> {
        self.check_dim(theta.len())?;
        let (u, c) = unit(theta, c)?;
        let nonzero: Vec<usize> = (0..u.len()).filter(|&i| u[i] != T::zero()).collect();
        let cut = c - slack(c);
        if nonzero.len() == 1 {
            let i = nonzero[0];
            let t = u[i];
            return Ok(self
                .factor(i)
                .iter()
                .filter(|(k, _)| T::of_i64(*k) * t >= cut)
                .map(|(_, p)| p)
                .sum());
        }
        // law of Σ θ_i Y_i by convolution
        let mut dist: Vec<(T, T)> = vec![(T::zero(), T::one())];
        for &i in &nonzero {
            let t = u[i];
            let f = self.factor(i);
            if dist.len().saturating_mul(f.len()) > PROJECTION_CAP {
                return Err(Error::capacity(
                    "projected product support",
                    dist.len() as f64 * f.len() as f64,
                    PROJECTION_CAP as f64,
                ));
            }
            let mut next = Vec::with_capacity(dist.len() * f.len());
            for &(v, p) in &dist {
                for (k, q) in f.iter() {
                    next.push((v + t * T::of_i64(k), p * q));
                }
            }
            next.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            dist.clear();
            for (v, p) in next {
                match dist.last_mut() {
                    Some(last) if (v - last.0).abs() <= T::lit(1e-13) * T::one().max(v.abs()) => {
                        last.1 = last.1 + p
                    }
                    _ => dist.push((v, p)),
                }
            }
        }
        Ok(dist.iter().filter(|e| e.0 >= cut).map(|e| e.1).sum())
    }
}

/// `min(μ([x, ∞)), μ((-∞, x]))`.
pub fn tukey_depth_1d<T: Real>(pmf: &Pmf1D<T>, x: T) -> T {
    let (mut upper, mut lower) = (T::zero(), T::zero());
    for (k, p) in pmf.iter() {
        let kv = T::of_i64(k);
        if kv >= x {
            upper = upper + p;
        }
        if kv <= x {
            lower = lower + p;
        }
    }
    upper.min(lower).min(T::one())
}

/// Exact half-plane depth in the plane by an angular sweep.
///
/// An atom at angle `φ` around `x` lies in the closed half-plane with
/// outward normal at angle `α` iff `|φ - α| ≤ π/2` (mod 2π). The mass is
/// constant between the critical angles `φ ± π/2` and can only jump up at
/// them, so the minimum is attained at the midpoints of the open arcs.
pub fn tukey_depth_2d<T: Real>(law: &FiniteAtomicLaw<T>, x: &[T]) -> Result<T> {
    if law.n() != 2 || x.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: if law.n() != 2 { law.n() } else { x.len() },
        });
    }
    if law.len() > 100_000 {
        return Err(Error::capacity("atoms for 2D depth", law.len() as f64, 1e5));
    }
    let (x0, x1) = (x[0].as_f64(), x[1].as_f64());
    let mut at_x = 0.0;
    // (angle in [0, 2π), mass)
    let mut around: Vec<(f64, f64)> = Vec::with_capacity(law.len());
    for a in law.atoms() {
        let (dx, dy) = (a.point[0].as_f64() - x0, a.point[1].as_f64() - x1);
        let p = a.prob.as_f64();
        if dx.hypot(dy) <= 1e-12 * (1.0 + x0.abs().max(x1.abs())) {
            at_x += p;
        } else {
            around.push((dy.atan2(dx).rem_euclid(2.0 * PI), p));
        }
    }
    if around.is_empty() {
        return Ok(T::lit(at_x.min(1.0)));
    }
    around.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = around.len();
    // doubled angle list with prefix masses for window queries
    let ang: Vec<f64> = around
        .iter()
        .map(|a| a.0)
        .chain(around.iter().map(|a| a.0 + 2.0 * PI))
        .collect();
    let mut prefix = vec![0.0; 2 * m + 1];
    for i in 0..2 * m {
        prefix[i + 1] = prefix[i] + around[i % m].1;
    }
    let mut crit: Vec<f64> = around
        .iter()
        .flat_map(|a| [(a.0 + PI / 2.0).rem_euclid(2.0 * PI), (a.0 - PI / 2.0).rem_euclid(2.0 * PI)])
        .collect();
    crit.sort_by(|a, b| a.total_cmp(b));
    crit.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    let window_mass = |alpha: f64| {
        // atoms with angle in (alpha - π/2, alpha + π/2), alpha in [0, 2π)
        let lo = alpha - PI / 2.0;
        let (lo, hi) = if lo < 0.0 {
            (lo + 2.0 * PI, alpha + PI / 2.0 + 2.0 * PI)
        } else {
            (lo, alpha + PI / 2.0)
        };
        let i = ang.partition_point(|&a| a <= lo);
        let j = ang.partition_point(|&a| a < hi);
        prefix[j.max(i)] - prefix[i]
    };
    let mut best = f64::INFINITY;
    for (idx, &c) in crit.iter().enumerate() {
        let next = if idx + 1 < crit.len() {
            crit[idx + 1]
        } else {
            crit[0] + 2.0 * PI
        };
        let mid = (0.5 * (c + next)).rem_euclid(2.0 * PI);
        best = best.min(window_mass(mid));
    }
    Ok(T::lit((best + at_x).min(1.0)))
}

/// Minimum of the half-space mass over `n_dirs` random unit directions: an
/// upper bound on the depth, reproducible from `seed`.
pub fn tukey_depth_sampled<T: Real, L: HalfspaceMass<T> + ?Sized>(
    law: &L,
    x: &[T],
    n_dirs: usize,
    seed: u64,
) -> Result<T> {
    let n = law.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = T::one();
    for _ in 0..n_dirs {
        let theta: Vec<T> = (0..n)
            .map(|_| T::lit(StandardNormal.sample(&mut rng)))
            .collect();
        if theta.iter().all(|t| *t == T::zero()) {
            continue;
        }
        let c = theta.iter().zip(x).map(|(a, b)| *a * *b).sum();
        best = best.min(law.halfspace_mass(&theta, c)?);
    }
    Ok(best)
}
