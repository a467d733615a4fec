use crate::error::{Error, Result};
use crate::scalar::{binomial, Real};

use super::atomic::FiniteAtomicLaw;

/// Default cap on enumerated lattice points.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

const GUARD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Budget {
    /// `p` a positive integer and `r^p` an integer: exact arithmetic.
    Exact { p: u32, budget: u64 },
    /// Floating comparison `Σ|x_i|^p ≤ r^p + 1e-9`.
    Guarded { p: f64, budget: f64 },
}

/// Uniform law on `L_n = ℤⁿ ∩ r·B_pⁿ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeBallLaw {
    n: usize,
    r: f64,
    p: f64,
    k: u64,
    budget: Budget,
}

impl LatticeBallLaw {
    pub fn new(n: usize, r: f64, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("dimension must be at least 1"));
        }
        if !(r.is_finite() && r >= 1.0) {
            return Err(Error::domain(format!("radius {r} must be >= 1")));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::domain(format!("exponent {p} must be >= 1")));
        }
        let rp = r.powf(p);
        let snapped = rp.round();
        let near_integer = (rp - snapped).abs() <= GUARD * rp.max(1.0);
        let k = if near_integer { snapped } else { rp.floor() } as u64;
        let budget = if p.fract() == 0.0 && p <= 64.0 && near_integer {
            Budget::Exact {
                p: p as u32,
                budget: snapped as u64,
            }
        } else {
            Budget::Guarded { p, budget: rp }
        };
        Ok(LatticeBallLaw {
            n,
            r,
            p,
            k,
            budget,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `⌊r^p⌋`.
    pub fn k(&self) -> u64 {
        self.k
    }

    /// True when membership falls back to the floating guard band.
    pub fn guard_band_used(&self) -> bool {
        matches!(self.budget, Budget::Guarded { .. })
    }

    /// Largest absolute coordinate value in the ball.
    pub fn max_coordinate(&self) -> i64 {
        match self.budget {
            Budget::Exact { p, budget } => max_exact(p, budget, i64::MAX),
            Budget::Guarded { .. } => (self.r + GUARD).floor() as i64,
        }
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        if x.len() != self.n {
            return false;
        }
        match self.budget {
            Budget::Exact { p, budget } => {
                let mut acc: u128 = 0;
                for v in x {
                    let Some(c) = (v.unsigned_abs() as u128).checked_pow(p) else {
                        return false;
                    };
                    acc += c;
                    if acc > budget as u128 {
                        return false;
                    }
                }
                true
            }
            Budget::Guarded { p, budget } => {
                let s: f64 = x.iter().map(|v| (v.unsigned_abs() as f64).powf(p)).sum();
                s <= budget + GUARD
            }
        }
    }

    /// `M_n = |L_n|`, exact (saturating at `u128::MAX`).
    pub fn count(&self) -> u128 {
        let m = self.max_coordinate();
        if m <= 1 {
            // only {-1,0,1} entries, each nonzero costs 1
            return (0..=self.k.min(self.n as u64))
                .map(|j| binomial(self.n as u64, j).saturating_mul(1u128 << j.min(127)))
                .fold(0u128, |a, b| a.saturating_add(b));
        }
        // distribution of total cost over j coordinates, grown one coordinate
        // at a time
        let costs: Vec<(f64, u128)> = (0..=m)
            .map(|v| (self.cost_f64(v), if v == 0 { 1 } else { 2 }))
            .collect();
        let limit = self.limit_f64();
        let mut dist: Vec<(f64, u128)> = vec![(0.0, 1)];
        for _ in 0..self.n {
            let mut next: Vec<(f64, u128)> = Vec::new();
            for &(s, c) in &dist {
                for &(w, mult) in &costs {
                    let t = s + w;
                    if t <= limit {
                        next.push((t, c.saturating_mul(mult)));
                    }
                }
            }
            next.sort_by(|a, b| a.0.total_cmp(&b.0));
            dist = Vec::with_capacity(next.len());
            for (s, c) in next {
                match dist.last_mut() {
                    Some(last) if (s - last.0).abs() <= 1e-12 * s.max(1.0) => {
                        last.1 = last.1.saturating_add(c)
                    }
                    _ => dist.push((s, c)),
                }
            }
        }
        dist.iter().fold(0u128, |a, &(_, c)| a.saturating_add(c))
    }

    fn cost_f64(&self, v: i64) -> f64 {
        match self.budget {
            Budget::Exact { p, .. } => (v.unsigned_abs() as f64).powi(p as i32),
            Budget::Guarded { p, .. } => (v.unsigned_abs() as f64).powf(p),
        }
    }

    fn limit_f64(&self) -> f64 {
        match self.budget {
            Budget::Exact { budget, .. } => budget as f64 + 0.5,
            Budget::Guarded { budget, .. } => budget + GUARD,
        }
    }

    /// All points of `L_n` in lexicographic order, refusing when the count
    /// exceeds `cap`.
    pub fn enumerate(&self, cap: u64) -> Result<Vec<Vec<i64>>> {
        let est = self.count();
        if est > cap as u128 {
            return Err(Error::capacity("lattice ball size M_n", est as f64, cap as f64));
        }
        let mut out = Vec::with_capacity(est as usize);
        match self.budget {
            Budget::Exact { p, budget } => {
                let m = self.max_coordinate();
                odometer(
                    self.n,
                    budget,
                    |rem| max_exact(p, rem, m),
                    |rem, v| rem - (v.unsigned_abs()).pow(p),
                    |x| out.push(x.to_vec()),
                );
            }
            Budget::Guarded { p, budget } => {
                let m = self.max_coordinate();
                let max_v = |rem: f64| {
                    let mut v = m;
                    while v > 0 && (v as f64).powf(p) > rem + GUARD {
                        v -= 1;
                    }
                    v
                };
                odometer(
                    self.n,
                    budget,
                    max_v,
                    |rem, v| rem - (v.unsigned_abs() as f64).powf(p),
                    |x| out.push(x.to_vec()),
                );
            }
        }
        Ok(out)
    }

    /// The uniform law on `L_n` as an explicit atomic law.
    pub fn to_atomic<T: Real>(&self, cap: u64) -> Result<FiniteAtomicLaw<T>> {
        let pts = self.enumerate(cap)?;
        FiniteAtomicLaw::uniform(
            pts.into_iter()
                .map(|x| x.into_iter().map(T::of_i64).collect())
                .collect(),
        )
    }
}

/// Largest `v ≤ m` with `v^p ≤ rem`.
fn max_exact(p: u32, rem: u64, m: i64) -> i64 {
    // v^p ≤ rem implies v ≤ rem for p ≥ 1
    let mut v = (rem as i64).min(m);
    if p == 1 {
        return v;
    }
    let mut lo = 0i64;
    while lo < v {
        let mid = lo + (v - lo + 1) / 2;
        match (mid as u64).checked_pow(p) {
            Some(c) if c <= rem => lo = mid,
            _ => v = mid - 1,
        }
    }
    lo
}

/// Lexicographic walk over integer vectors where each coordinate lies in
/// `[-a, a]`, `a = max_v(remaining budget)`.
fn odometer<R: Copy>(
    n: usize,
    budget: R,
    max_v: impl Fn(R) -> i64,
    spend: impl Fn(R, i64) -> R,
    mut emit: impl FnMut(&[i64]),
) {
    let mut x = vec![0i64; n];
    let mut rem = vec![budget; n + 1];
    let fill = |from: usize, x: &mut [i64], rem: &mut [R]| {
        for i in from..n {
            x[i] = -max_v(rem[i]);
            rem[i + 1] = spend(rem[i], x[i]);
        }
    };
    fill(0, &mut x, &mut rem);
    loop {
        emit(&x);
        let Some(j) = (0..n).rev().find(|&j| x[j] < max_v(rem[j])) else {
            return;
        };
        x[j] += 1;
        rem[j + 1] = spend(rem[j], x[j]);
        fill(j + 1, &mut x, &mut rem);
    }
}
