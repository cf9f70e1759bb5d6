//! The FGS filter `(1−α)(I − αL̃)^(−1)`, evaluated by a truncated Taylor series.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Filter parameters bound to a propagation operator `L̃`.
#[derive(Debug, Clone, Copy)]
pub struct FilterSpec<'a> {
    pub alpha: f64,
    pub order: usize,
    pub operator: &'a DenseMatrix,
}

impl<'a> FilterSpec<'a> {
    pub fn new(alpha: f64, order: usize, operator: &'a DenseMatrix) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie strictly inside (0, 1), got {alpha}"
            )));
        }
        if !operator.is_square() {
            return Err(Error::DimensionMismatch("filter operator must be square".into()));
        }
        Ok(FilterSpec {
            alpha,
            order,
            operator,
        })
    }

    /// Uses [`default_order`] for the truncation index.
    pub fn with_default_order(alpha: f64, operator: &'a DenseMatrix) -> Result<Self> {
        Self::new(alpha, default_order(alpha), operator)
    }

    fn check_input(&self, x: &DenseMatrix) -> Result<()> {
        if x.rows() != self.operator.rows() {
            return Err(Error::DimensionMismatch(format!(
                "filter operator is {}x{}, input has {} rows",
                self.operator.rows(),
                self.operator.cols(),
                x.rows()
            )));
        }
        Ok(())
    }
}

/// `⌈4α⌉`, never below 1.
pub fn default_order(alpha: f64) -> usize {
    ((4.0 * alpha).ceil() as usize).max(1)
}

/// `(1−α)·X′_order` with `X′_0 = X`, `X′_i = X + αL̃ X′_(i−1)`.
pub fn fgs_apply(spec: &FilterSpec<'_>, x: &DenseMatrix) -> Result<DenseMatrix> {
    spec.check_input(x)?;
    Ok(horner(spec.alpha, spec.order, x, |m| spec.operator.mul_unchecked(m)))
}

/// Adjoint of [`fgs_apply`]: the same series in `L̃ᵀ`.
pub fn fgs_apply_transpose(spec: &FilterSpec<'_>, x: &DenseMatrix) -> Result<DenseMatrix> {
    spec.check_input(x)?;
    Ok(horner(spec.alpha, spec.order, x, |m| spec.operator.t_mul_unchecked(m)))
}

fn horner(alpha: f64, order: usize, x: &DenseMatrix, apply: impl Fn(&DenseMatrix) -> DenseMatrix) -> DenseMatrix {
    let mut acc = x.clone();
    for _ in 0..order {
        let mut next = apply(&acc);
        for (n, &xi) in next.as_mut_slice().iter_mut().zip(x.as_slice()) {
            *n = xi + alpha * *n;
        }
        acc = next;
    }
    acc.scale(1.0 - alpha)
}

/// Untruncated filter via a linear solve of `(I − αL̃) Z = (1−α) X`.
pub fn fgs_exact(spec: &FilterSpec<'_>, x: &DenseMatrix) -> Result<DenseMatrix> {
    spec.check_input(x)?;
    let n = spec.operator.rows();
    let system = DenseMatrix::from_fn(n, n, |r, c| {
        let id = if r == c { 1.0 } else { 0.0 };
        id - spec.alpha * spec.operator[(r, c)]
    });
    system.solve(&x.scale(1.0 - spec.alpha))
}
