use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One atom of a finite law.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom<T> {
    pub point: Vec<T>,
    pub prob: T,
}

/// A law with finitely many atoms in ℝⁿ.
#[derive(Clone, Debug)]
pub struct FiniteAtomicLaw<T> {
    n: usize,
    atoms: Vec<Atom<T>>,
    full_dimensional: bool,
    index: HashMap<Vec<u64>, usize>,
}

impl<T: PartialEq> PartialEq for FiniteAtomicLaw<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.atoms == other.atoms
            && self.full_dimensional == other.full_dimensional
    }
}

fn key<T: Real>(point: &[T]) -> Vec<u64> {
    // -0.0 and 0.0 are the same point
    point
        .iter()
        .map(|x| {
            let v = x.as_f64();
            if v == 0.0 { 0.0f64 } else { v }.to_bits()
        })
        .collect()
}

impl<T: Real> FiniteAtomicLaw<T> {
    /// Validates and renormalizes. Probabilities must be positive and sum to
    /// 1 within `1e-12`; points must be distinct and share a dimension.
    pub fn new(atoms: Vec<Atom<T>>) -> Result<Self> {
        let total = check_atoms(&atoms)?;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::validation(format!(
                "atom probabilities sum to {total}, expected 1"
            )));
        }
        Self::normalized(atoms)
    }

    /// Arbitrary positive weights, normalized.
    pub fn from_weights(atoms: Vec<Atom<T>>) -> Result<Self> {
        check_atoms(&atoms)?;
        Self::normalized(atoms)
    }

    /// Uniform law on the given distinct points.
    pub fn uniform(points: Vec<Vec<T>>) -> Result<Self> {
        let atoms = points
            .into_iter()
            .map(|point| Atom {
                point,
                prob: T::one(),
            })
            .collect();
        Self::from_weights(atoms)
    }

    fn normalized(mut atoms: Vec<Atom<T>>) -> Result<Self> {
        let total: T = atoms.iter().map(|a| a.prob).sum();
        for a in &mut atoms {
            a.prob = a.prob / total;
        }
        let n = atoms[0].point.len();
        let mut index = HashMap::with_capacity(atoms.len());
        for (i, a) in atoms.iter().enumerate() {
            if index.insert(key(&a.point), i).is_some() {
                return Err(Error::validation(format!(
                    "duplicate atom at index {i}"
                )));
            }
        }
        Ok(FiniteAtomicLaw {
            n,
            atoms,
            full_dimensional: false,
            index,
        })
    }

    /// Marks the law full-dimensional after checking that the affine hull of
    /// the atoms is all of ℝⁿ.
    pub fn require_full_dimensional(mut self) -> Result<Self> {
        let rank = affine_rank(&self.atoms);
        if rank < self.n {
            return Err(Error::validation(format!(
                "affine hull has dimension {rank} < {}",
                self.n
            )));
        }
        self.full_dimensional = true;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.full_dimensional
    }

    pub fn points(&self) -> impl Iterator<Item = &[T]> {
        self.atoms.iter().map(|a| a.point.as_slice())
    }

    /// `μ({x})`, zero for non-atoms.
    pub fn mass_of(&self, x: &[T]) -> T {
        self.position(x)
            .map(|i| self.atoms[i].prob)
            .unwrap_or_else(T::zero)
    }

    pub fn position(&self, x: &[T]) -> Option<usize> {
        if x.len() != self.n {
            return None;
        }
        self.index.get(&key(x)).copied()
    }

    pub fn max_mass(&self) -> T {
        self.atoms
            .iter()
            .map(|a| a.prob)
            .fold(T::zero(), |m, p| if p > m { p } else { m })
    }
}

fn check_atoms<T: Real>(atoms: &[Atom<T>]) -> Result<f64> {
    let Some(first) = atoms.first() else {
        return Err(Error::validation("no atoms"));
    };
    let n = first.point.len();
    if n == 0 {
        return Err(Error::validation("atoms must have dimension at least 1"));
    }
    for a in atoms {
        if a.point.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.point.len(),
            });
        }
        if a.point.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("atom coordinates must be finite"));
        }
        if !(a.prob.is_finite() && a.prob > T::zero()) {
            return Err(Error::validation("atom probabilities must be positive"));
        }
    }
    Ok(atoms.iter().map(|a| a.prob.as_f64()).sum())
}

/// Dimension of the affine hull, by Gaussian elimination with partial
/// pivoting on the difference vectors.
fn affine_rank<T: Real>(atoms: &[Atom<T>]) -> usize {
    let base = &atoms[0].point;
    let mut rows: Vec<Vec<f64>> = atoms[1..]
        .iter()
        .map(|a| {
            a.point
                .iter()
                .zip(base)
                .map(|(x, b)| (*x - *b).as_f64())
                .collect()
        })
        .collect();
    let n = base.len();
    let scale = rows
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let tol = 1e-10 * scale;
    let mut rank = 0;
    for col in 0..n {
        let Some(piv) = (rank..rows.len()).max_by(|&a, &b| {
            rows[a][col].abs().total_cmp(&rows[b][col].abs())
        }) else {
            break;
        };
        if rows[piv][col].abs() <= tol {
            continue;
        }
        rows.swap(rank, piv);
        let pivot_row = rows[rank].clone();
        for r in rows.iter_mut().skip(rank + 1) {
            let f = r[col] / pivot_row[col];
            for (x, p) in r.iter_mut().zip(&pivot_row).skip(col) {
                *x -= f * p;
            }
        }
        rank += 1;
    }
    rank
}
