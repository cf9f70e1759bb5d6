//! Closed-form graph semi-supervised classifiers.
//!
//! The generalized family solves `F = (1−α)(I − α D^(−σ) W D^(σ−1))^(−1) Y`, which
//! gives the Standard Laplacian (σ = 1), Normalized Laplacian (σ = ½) and PageRank
//! (σ = 0) classifiers. The fractional variants replace `W, D` by `W_γ, D_γ`.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::spectral::FractionalOperatorSet;

/// One-hot label matrix; unlabeled rows are all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    y: DenseMatrix,
}

impl LabelMatrix {
    /// `labels[i] = Some(k)` marks node `i` as class `k`.
    pub fn from_labels(labels: &[Option<usize>], num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::InvalidArgument("need at least one class".into()));
        }
        let mut y = DenseMatrix::zeros(labels.len(), num_classes);
        for (i, l) in labels.iter().enumerate() {
            if let Some(k) = *l {
                if k >= num_classes {
                    return Err(Error::InvalidArgument(format!(
                        "node {i} has class {k}, but only {num_classes} classes"
                    )));
                }
                y[(i, k)] = 1.0;
            }
        }
        Ok(LabelMatrix { y })
    }

    pub fn from_matrix(y: DenseMatrix) -> Result<Self> {
        for r in 0..y.rows() {
            let row = y.row(r);
            if row.iter().any(|&v| v != 0.0 && v != 1.0) || row.iter().sum::<f64>() > 1.0 {
                return Err(Error::InvalidArgument(format!("row {r} of Y is not one-hot or zero")));
            }
        }
        Ok(LabelMatrix { y })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.y
    }

    pub fn num_nodes(&self) -> usize {
        self.y.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.y.cols()
    }

    pub fn label(&self, node: usize) -> Option<usize> {
        self.y.row(node).iter().position(|&v| v == 1.0)
    }

    pub fn labels(&self) -> Vec<Option<usize>> {
        (0..self.num_nodes()).map(|i| self.label(i)).collect()
    }

    /// Keeps only the labels of `nodes`.
    pub fn restricted_to(&self, nodes: &[usize]) -> LabelMatrix {
        let mut y = DenseMatrix::zeros(self.y.rows(), self.y.cols());
        for &i in nodes {
            y.row_mut(i).copy_from_slice(self.y.row(i));
        }
        LabelMatrix { y }
    }

    fn require_labeled(&self) -> Result<()> {
        if self.y.as_slice().contains(&1.0) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("label matrix has no labeled node".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationMatrix(pub DenseMatrix);

impl ClassificationMatrix {
    pub fn scores(&self) -> &DenseMatrix {
        &self.0
    }
}

/// `α = 2/(2+μ)`.
pub fn mu_to_alpha(mu: f64) -> Result<f64> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("mu must be non-negative, got {mu}")));
    }
    Ok(2.0 / (2.0 + mu))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "alpha must lie strictly inside (0, 1), got {alpha}"
        )))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("sigma must lie in [0, 1], got {sigma}")))
    }
}

/// `D^(−σ) W D^(σ−1)`.
pub fn sigma_operator(w: &DenseMatrix, degrees: &[f64], sigma: f64) -> Result<DenseMatrix> {
    if !w.is_square() || w.rows() != degrees.len() {
        return Err(Error::DimensionMismatch(format!(
            "W is {}x{}, degrees have length {}",
            w.rows(),
            w.cols(),
            degrees.len()
        )));
    }
    if let Some(node) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::ZeroDegree { node });
    }
    let left: Vec<f64> = degrees.iter().map(|d| d.powf(-sigma)).collect();
    let right: Vec<f64> = degrees.iter().map(|d| d.powf(sigma - 1.0)).collect();
    Ok(w.scale_rows(&left).scale_cols(&right))
}

/// Solves `(I − α·op) F = (1−α) Y`.
fn propagate_closed_form(op: &DenseMatrix, y: &LabelMatrix, alpha: f64) -> Result<ClassificationMatrix> {
    if op.rows() != y.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "operator has {} rows, Y has {}",
            op.rows(),
            y.num_nodes()
        )));
    }
    let n = op.rows();
    let system = DenseMatrix::from_fn(n, n, |r, c| {
        let id = if r == c { 1.0 } else { 0.0 };
        id - alpha * op[(r, c)]
    });
    let rhs = y.matrix().scale(1.0 - alpha);
    Ok(ClassificationMatrix(system.solve(&rhs)?))
}

/// Generalized G-SSL classifier on a symmetric weight matrix with degrees `d`.
pub fn gssl_classify(
    w: &DenseMatrix,
    d: &[f64],
    y: &LabelMatrix,
    alpha: f64,
    sigma: f64,
) -> Result<ClassificationMatrix> {
    check_alpha(alpha)?;
    check_sigma(sigma)?;
    y.require_labeled()?;
    let op = sigma_operator(w, d, sigma)?;
    propagate_closed_form(&op, y, alpha)
}

/// Fractional G-SSL classifier: `F = (1−α)(I − α L̃)^(−1) Y`.
pub fn fractional_gssl_classify(
    ops: &FractionalOperatorSet,
    y: &LabelMatrix,
    alpha: f64,
) -> Result<ClassificationMatrix> {
    check_alpha(alpha)?;
    y.require_labeled()?;
    propagate_closed_form(&ops.l_tilde, y, alpha)
}

/// The Laplacian/degree pair a classifier was built from.
#[derive(Debug, Clone, Copy)]
pub enum OptimalityOperator<'a> {
    Standard { w: &'a DenseMatrix, d: &'a [f64] },
    Fractional(&'a FractionalOperatorSet),
}

/// Stationarity residual of the quadratic objective at `F`.
///
/// The first-order condition is
/// `R = 2Fᵀ D^(σ−1)(L+Lᵀ)D^(−σ) + 2μ(F−Y)ᵀ = 0` with `μ = 2(1−α)/α`. The returned
/// value is `max|R| · α/4`, i.e. `R` divided by `2(2+μ)`, which puts it on the scale
/// of the linear-system residual and keeps it meaningful as `α → 0`.
pub fn verify_optimality(
    f: &ClassificationMatrix,
    target: OptimalityOperator<'_>,
    y: &LabelMatrix,
    alpha: f64,
    sigma: f64,
) -> f64 {
    let (l, d): (DenseMatrix, Vec<f64>) = match target {
        OptimalityOperator::Standard { w, d } => {
            let n = w.rows();
            let l = DenseMatrix::from_fn(n, n, |r, c| if r == c { d[r] } else { 0.0 } - w[(r, c)]);
            (l, d.to_vec())
        }
        OptimalityOperator::Fractional(ops) => (ops.l_gamma.clone(), ops.d_gamma.clone()),
    };
    let left: Vec<f64> = d.iter().map(|x| x.powf(sigma - 1.0)).collect();
    let right: Vec<f64> = d.iter().map(|x| x.powf(-sigma)).collect();
    let sym = l.add(&l.transpose()).expect("square");
    let m = sym.scale_rows(&left).scale_cols(&right);
    // (α/4)·R = (α/2)·Fᵀ M + (1−α)(F−Y)ᵀ
    let ftm = f.0.t_mul_unchecked(&m);
    let diff = f.0.sub(y.matrix()).expect("F and Y share a shape").transpose();
    let mut worst: f64 = 0.0;
    for (a, b) in ftm.as_slice().iter().zip(diff.as_slice()) {
        worst = worst.max((0.5 * alpha * a + (1.0 - alpha) * b).abs());
    }
    worst
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn classify_from_scores(f: &DenseMatrix) -> Vec<usize> {
    (0..f.rows())
        .map(|r| {
            f.row(r)
                .iter()
                .enumerate()
                .fold((0usize, f64::NEG_INFINITY), |best, (k, &v)| {
                    if v > best.1 {
                        (k, v)
                    } else {
                        best
                    }
                })
                .0
        })
        .collect()
}
