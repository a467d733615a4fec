//! Combinatorics of lattice p-balls: the count `M_n`, the layer `A_n` of
//! `{-1,0,1}` vectors with exactly `k = ⌊r^p⌋` nonzeros, facet sets and the
//! coupon-collector sandwich.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{LatticeBallLaw, DEFAULT_ENUMERATION_CAP};
use crate::scalar::{binomial, one_minus_pow_complement};

/// How the counts in a [`BallDecomposition`] were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionMode {
    Enumerated,
    /// Closed form, valid when every coordinate lies in `{-1, 0, 1}`.
    Formula,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallDecomposition {
    #[serde(skip)]
    pub law: LatticeBallLaw,
    pub m_n: u128,
    pub a_n_size: u128,
    pub residual_size: u128,
    /// `residual_size / m_n`.
    pub c_n: f64,
    /// `C(2k-1, k)`.
    pub r_k: u128,
    /// Largest number of nonzero coordinates among residual points.
    pub residual_max_support: usize,
    pub mode: DecompositionMode,
}

fn layer_size(n: usize, k: u64) -> u128 {
    if k > 127 {
        return if k as usize > n { 0 } else { u128::MAX };
    }
    binomial(n as u64, k).saturating_mul(1u128 << k)
}

/// `C(2k-1, k)`, with `R_0 = 1`.
pub fn r_k(k: u64) -> u128 {
    if k == 0 {
        1
    } else {
        binomial(2 * k - 1, k)
    }
}

fn in_layer(y: &[i64], k: u64) -> bool {
    y.iter().all(|v| v.abs() <= 1) && y.iter().filter(|v| **v != 0).count() as u64 == k
}

/// Split `L_n` into `A_n` and the residual, enumerating up to the default cap.
pub fn decompose_ball(law: &LatticeBallLaw) -> Result<BallDecomposition> {
    decompose_ball_with_cap(law, DEFAULT_ENUMERATION_CAP)
}

pub fn decompose_ball_with_cap(law: &LatticeBallLaw, cap: u64) -> Result<BallDecomposition> {
    let n = law.n();
    let k = law.k();
    let count = law.count();
    let r_k = r_k(k);
    let expected_layer = layer_size(n, k);
    if count <= cap as u128 {
        let points = law.enumerate(cap)?;
        let mut a = 0u128;
        let mut worst = 0usize;
        for y in &points {
            if in_layer(y, k) {
                a += 1;
            } else {
                worst = worst.max(y.iter().filter(|v| **v != 0).count());
            }
        }
        let m = points.len() as u128;
        let residual = m - a;
        if a != expected_layer {
            return Err(Error::validation(format!(
                "layer count {a} differs from 2^k C(n,k) = {expected_layer}"
            )));
        }
        if residual > 0 && worst as u64 >= k.max(1) {
            return Err(Error::validation(format!(
                "residual point with {worst} nonzeros, expected at most {}",
                k.saturating_sub(1)
            )));
        }
        return Ok(BallDecomposition {
            law: *law,
            m_n: m,
            a_n_size: a,
            residual_size: residual,
            c_n: residual as f64 / m as f64,
            r_k,
            residual_max_support: worst,
            mode: DecompositionMode::Enumerated,
        });
    }
    if law.max_coordinate() <= 1 {
        let residual = count - expected_layer;
        return Ok(BallDecomposition {
            law: *law,
            m_n: count,
            a_n_size: expected_layer,
            residual_size: residual,
            c_n: residual as f64 / count as f64,
            r_k,
            residual_max_support: if residual > 0 { (k as usize).saturating_sub(1).min(n) } else { 0 },
            mode: DecompositionMode::Formula,
        });
    }
    Err(Error::capacity("lattice ball enumeration", count as f64, cap as f64))
}

/// `F_x = {y ∈ L_n : ⟨x, y⟩ = k}` for `x ∈ A_n`.
///
/// Any such `y` vanishes off the support of `x` and agrees with its signs
/// there, so after a signed permutation taking `x` to `(1,…,1,0,…,0)` the
/// candidates are the nonnegative `k`-tuples summing to `k`. Candidates
/// outside the ball are dropped, so for `p > 1` the set can be smaller than
/// `C(2k-1, k)`.
pub fn facet_set(x: &[i64], law: &LatticeBallLaw) -> Result<Vec<Vec<i64>>> {
    let n = law.n();
    let k = law.k();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if k == 0 || !in_layer(x, k) {
        return Err(Error::domain("point is not in the A_n layer"));
    }
    let support: Vec<(usize, i64)> = x
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0)
        .map(|(i, v)| (i, *v))
        .collect();
    let k = k as usize;
    let mut out = Vec::new();
    let mut parts = vec![0i64; k];
    compositions(k as i64, 0, &mut parts, &mut |c| {
        let mut y = vec![0i64; n];
        for (&(i, s), &v) in support.iter().zip(c) {
            y[i] = s * v;
        }
        if law.contains(&y) {
            out.push(y);
        }
    });
    Ok(out)
}

// nonnegative tuples with the given sum, in lexicographic order
fn compositions(left: i64, at: usize, parts: &mut [i64], emit: &mut impl FnMut(&[i64])) {
    if at + 1 == parts.len() {
        parts[at] = left;
        emit(parts);
        return;
    }
    for v in (0..=left).rev() {
        parts[at] = v;
        compositions(left - v, at + 1, parts, emit);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SandwichBounds {
    pub n_samples: u64,
    /// `1 - (1 - 1/M_n)^N`.
    pub lower: f64,
    /// `lower + C_n + p_bound`, clamped to `[0, 1]`.
    pub upper: f64,
    pub c_n: f64,
    /// `C(N,2) (R_k/M_n)² · |A_n|/M_n`.
    pub p_bound: f64,
    /// Same with the factor `|A_n|/M_n` replaced by 1.
    pub p_bound_loose: f64,
    pub upper_loose: f64,
}

pub fn sandwich_bounds(law: &LatticeBallLaw, n_samples: u64) -> Result<SandwichBounds> {
    Ok(sandwich_from(&decompose_ball(law)?, n_samples))
}

pub fn sandwich_from(d: &BallDecomposition, n_samples: u64) -> SandwichBounds {
    let m = d.m_n as f64;
    let lower = one_minus_pow_complement(1.0 / m, n_samples as f64).clamp(0.0, 1.0);
    let nn = n_samples as f64;
    let pairs = nn * (nn - 1.0) / 2.0;
    let per_point = pairs * (d.r_k as f64 / m).powi(2);
    let p_bound = per_point * (d.a_n_size as f64 / m);
    SandwichBounds {
        n_samples,
        lower,
        upper: (lower + d.c_n + p_bound).clamp(0.0, 1.0),
        c_n: d.c_n,
        p_bound,
        p_bound_loose: per_point,
        upper_loose: (lower + d.c_n + per_point).clamp(0.0, 1.0),
    }
}

fn require_unit_support(law: &LatticeBallLaw) -> Result<()> {
    if law.k() != 1 || law.max_coordinate() != 1 {
        return Err(Error::domain(
            "support must be {0, ±e_i} (radius with r^p in [1, 2))",
        ));
    }
    Ok(())
}

/// Index of a point of `{0, ±e_1, …, ±e_n}`: `0 ↦ 0`, `e_i ↦ 2i+1`,
/// `-e_i ↦ 2i+2`.
pub fn cross_polytope_index(y: &[i64]) -> Option<usize> {
    let mut idx = 0;
    for (i, v) in y.iter().enumerate() {
        let code = match v {
            0 => continue,
            1 => 2 * i + 1,
            -1 => 2 * i + 2,
            _ => return None,
        };
        if idx != 0 {
            return None;
        }
        idx = code;
    }
    Some(idx)
}

/// Number of support points captured by the hull of the sampled indices.
///
/// A vertex is captured only if sampled; the origin is captured if sampled
/// or if both `e_i` and `-e_i` were sampled for some `i`.
pub fn cross_polytope_captured(n: usize, indices: impl IntoIterator<Item = usize>) -> usize {
    let mut seen = vec![false; 2 * n + 1];
    for i in indices {
        seen[i] = true;
    }
    let vertices = seen[1..].iter().filter(|s| **s).count();
    let origin = seen[0] || (0..n).any(|i| seen[2 * i + 1] && seen[2 * i + 2]);
    vertices + origin as usize
}

/// `μ(K_N)` for samples of the uniform law on `{0, ±e_1, …, ±e_n}`.
pub fn cross_polytope_exact_mass(law: &LatticeBallLaw, samples: &[Vec<i64>]) -> Result<f64> {
    require_unit_support(law)?;
    let n = law.n();
    let mut idx = Vec::with_capacity(samples.len());
    for y in samples {
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        idx.push(cross_polytope_index(y).ok_or_else(|| Error::domain("sample not in the support"))?);
    }
    Ok(cross_polytope_captured(n, idx) as f64 / (2 * n + 1) as f64)
}
