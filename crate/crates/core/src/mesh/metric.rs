use crate::error::{Error, Result};
use crate::linalg::{wrap_half_turn, Sym2};
use crate::scalar::Real;

/// Per-vertex target sizes and stretch direction.
///
/// `h1` is the size along the stretch axis at angle `theta` from Ox, `h2`
/// the size across it.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField<T> {
    pub h1: Vec<T>,
    pub h2: Vec<T>,
    pub theta: Vec<T>,
}

impl<T: Real> MetricField<T> {
    /// Validates lengths and `h1 ≥ h2 > 0`; angles are wrapped to `[0, π)`.
    pub fn new(h1: Vec<T>, h2: Vec<T>, theta: Vec<T>) -> Result<Self> {
        if h1.len() != h2.len() || h1.len() != theta.len() {
            return Err(Error::InvalidArgument(format!(
                "metric arrays differ in length: {} / {} / {}",
                h1.len(),
                h2.len(),
                theta.len()
            )));
        }
        for i in 0..h1.len() {
            if !(h2[i] > T::zero()) || !(h1[i] >= h2[i]) || !h1[i].is_finite() || !theta[i].is_finite()
            {
                return Err(Error::NonSpdMetric { vertex: i });
            }
        }
        let theta = theta.into_iter().map(wrap_half_turn).collect();
        Ok(Self { h1, h2, theta })
    }

    pub fn uniform(nv: usize, h1: T, h2: T, theta: T) -> Result<Self> {
        Self::new(vec![h1; nv], vec![h2; nv], vec![theta; nv])
    }

    pub fn len(&self) -> usize {
        self.h1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h1.is_empty()
    }

    /// `Q(θ) · diag(1/h1², 1/h2²) · Q(θ)ᵀ`.
    pub fn tensor(&self, i: usize) -> Sym2<T> {
        let a = T::one() / (self.h1[i] * self.h1[i]);
        let b = T::one() / (self.h2[i] * self.h2[i]);
        Sym2::from_eigen(self.theta[i], a, b)
    }

    pub fn tensors(&self) -> Vec<Sym2<T>> {
        (0..self.len()).map(|i| self.tensor(i)).collect()
    }

    /// Inverse of [`MetricField::tensor`] for a single SPD tensor.
    pub fn sizes_from_tensor(m: Sym2<T>) -> Option<(T, T, T)> {
        if !m.is_spd() {
            return None;
        }
        let (big, small, angle) = m.eigen();
        // small eigenvalue ↔ large size; its eigenvector is the stretch axis
        let theta = wrap_half_turn(angle + T::FRAC_PI_2());
        Some((T::one() / small.sqrt(), T::one() / big.sqrt(), theta))
    }
}
