use super::pmf::Pmf1D;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `λ₁ ⊗ … ⊗ λ_n` on ℤⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductLaw<T> {
    factors: Vec<Pmf1D<T>>,
}

impl<T: Real> ProductLaw<T> {
    pub fn new(factors: Vec<Pmf1D<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::validation("product law needs at least one factor"));
        }
        Ok(ProductLaw { factors })
    }

    /// `n` copies of the same factor.
    pub fn iid(factor: Pmf1D<T>, n: usize) -> Result<Self> {
        Self::new(vec![factor; n])
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Pmf1D<T>] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &Pmf1D<T> {
        &self.factors[i]
    }

    /// `-log μ({k})`, `+∞` off the support.
    pub fn g(&self, k: &[i64]) -> Result<T> {
        self.check_dim(k.len())?;
        Ok(self
            .factors
            .iter()
            .zip(k)
            .map(|(f, &ki)| f.g(ki))
            .fold(T::zero(), |a, b| a + b))
    }

    pub fn mass(&self, k: &[i64]) -> Result<T> {
        Ok((-self.g(k)?).exp())
    }

    /// Number of lattice points in the (truncated) support, saturating.
    pub fn support_size(&self) -> u128 {
        self.factors
            .iter()
            .fold(1u128, |acc, f| acc.saturating_mul(f.len() as u128))
    }

    /// True when every factor lives on `{0, 1}`.
    pub fn is_binary(&self) -> bool {
        self.factors.iter().all(|f| f.k_min() == 0 && f.k_max() == 1)
    }

    pub(crate) fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got,
            });
        }
        Ok(())
    }
}
