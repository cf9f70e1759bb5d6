//! Symmetric eigendecomposition, fractional Laplacian powers and the operators built on them.
//!
//! For a Laplacian `L = U Λ Uᵀ` and `0 < γ ≤ 1`, the fractional Laplacian is
//! `L^γ = U Λ^γ Uᵀ`. Its diagonal gives the fractional degrees `D_γ`, and
//! `W_γ = D_γ − L^γ` is the (dense) weight matrix of the fractional graph. The
//! propagation operator used by the classifiers and the filter is
//! `L̃ = D_γ^(−σ) W_γ D_γ^(σ−1)`.

use crate::error::{Error, Result};
use crate::graph::{self, Graph};
use crate::matrix::DenseMatrix;

const SYMMETRY_TOL: f64 = 1e-10;
const NEGATIVE_EIGEN_TOL: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 10_000;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending; column `i` of
/// `eigenvectors` belongs to `eigenvalues[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U · diag(f(λ)) · Uᵀ`, restricted to the given eigenpair indices.
    fn apply_function(&self, indices: impl Iterator<Item = usize>, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.dim();
        let idx: Vec<usize> = indices.collect();
        let u = &self.eigenvectors;
        let scaled = DenseMatrix::from_fn(n, idx.len(), |r, k| u[(r, idx[k])] * f(self.eigenvalues[idx[k]]));
        let basis = DenseMatrix::from_fn(n, idx.len(), |r, k| u[(r, idx[k])]);
        let mut out = scaled.mul_t_unchecked(&basis);
        mirror_upper(&mut out);
        out
    }

    /// `U Λ Uᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.apply_function(0..self.dim(), |l| l)
    }
}

fn mirror_upper(m: &mut DenseMatrix) {
    let n = m.rows();
    for r in 0..n {
        for c in r + 1..n {
            let v = 0.5 * (m[(r, c)] + m[(c, r)]);
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
}

/// Dense symmetric eigendecomposition (Householder tridiagonalization + implicit QR).
///
/// Eigenvalues are sorted ascending and each eigenvector is signed so its first
/// non-negligible component is positive, which makes the result deterministic.
pub fn eigendecompose(l: &DenseMatrix) -> Result<SpectralDecomposition> {
    if !l.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            l.rows(),
            l.cols()
        )));
    }
    let asym = l.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let n = l.rows();
    let mut sym = l.clone();
    mirror_upper(&mut sym);
    let eig = nalgebra::SymmetricEigen::try_new(sym.to_nalgebra(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        let lead = col.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            eigenvectors[(r, k)] = sign * col[r];
        }
    }
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence);
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma must lie in (0, 1], got {gamma}")))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("sigma must lie in [0, 1], got {sigma}")))
    }
}

fn clamped_power(dec: &SpectralDecomposition, gamma: f64) -> Result<impl Fn(f64) -> f64> {
    check_gamma(gamma)?;
    let scale = dec.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if let Some(bad) = dec
        .eigenvalues
        .iter()
        .find(|&&v| v < -NEGATIVE_EIGEN_TOL * scale)
    {
        return Err(Error::InvalidArgument(format!(
            "fractional power of a matrix with negative eigenvalue {bad:e}"
        )));
    }
    let zero = NEGATIVE_EIGEN_TOL * scale;
    Ok(move |l: f64| if l <= zero { 0.0 } else { l.powf(gamma) })
}

/// `L^γ = U Λ^γ Uᵀ`, with eigenvalues of magnitude at most `1e−10·max|λ|` treated as 0.
pub fn fractional_laplacian(dec: &SpectralDecomposition, gamma: f64) -> Result<DenseMatrix> {
    let pow = clamped_power(dec, gamma)?;
    Ok(dec.apply_function(0..dec.dim(), pow))
}

/// Like [`fractional_laplacian`] but keeps only the `top_m` largest eigenpairs.
pub fn fractional_laplacian_truncated(
    dec: &SpectralDecomposition,
    gamma: f64,
    top_m: usize,
) -> Result<DenseMatrix> {
    let pow = clamped_power(dec, gamma)?;
    let n = dec.dim();
    let keep = top_m.min(n);
    Ok(dec.apply_function(n - keep..n, pow))
}

/// Which Laplacian gets raised to the fractional power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaplacianKind {
    #[default]
    Standard,
    /// Experimental: powers of `D^(−1/2) L D^(−1/2)`; rows of `L^γ` no longer sum to zero.
    Normalized,
}

/// `L^γ`, fractional degrees, fractional adjacency and the propagation operator for one `(γ, σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalOperatorSet {
    pub gamma: f64,
    pub sigma: f64,
    pub l_gamma: DenseMatrix,
    /// Diagonal of `D_γ`, i.e. the fractional degrees `(L^γ)ᵢᵢ`.
    pub d_gamma: Vec<f64>,
    pub w_gamma: DenseMatrix,
    pub l_tilde: DenseMatrix,
}

impl FractionalOperatorSet {
    pub fn num_nodes(&self) -> usize {
        self.d_gamma.len()
    }

    pub fn d_gamma_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_diag(&self.d_gamma)
    }

    /// Builds the operators directly from a graph (symmetrizing directed graphs first).
    pub fn from_graph(g: &Graph, gamma: f64, sigma: f64, kind: LaplacianKind) -> Result<Self> {
        let dec = decompose_graph(g, kind)?;
        fractional_operator_set(&dec, gamma, sigma)
    }
}

/// Symmetrized adjacency of `g`.
pub fn symmetric_adjacency(g: &Graph) -> DenseMatrix {
    let w = graph::adjacency(g);
    if g.is_directed() {
        graph::symmetrize(&w).expect("adjacency is square")
    } else {
        w
    }
}

/// Eigendecomposition of the chosen Laplacian of `g`.
pub fn decompose_graph(g: &Graph, kind: LaplacianKind) -> Result<SpectralDecomposition> {
    let w = symmetric_adjacency(g);
    let l = match kind {
        LaplacianKind::Standard => graph::standard_laplacian(&w)?,
        LaplacianKind::Normalized => graph::normalized_laplacian(&w)?,
    };
    eigendecompose(&l)
}

pub fn fractional_operator_set(
    dec: &SpectralDecomposition,
    gamma: f64,
    sigma: f64,
) -> Result<FractionalOperatorSet> {
    check_sigma(sigma)?;
    let l_gamma = fractional_laplacian(dec, gamma)?;
    operator_set_from_power(l_gamma, gamma, sigma)
}

/// Completes an operator set from an already computed `L^γ`.
pub fn operator_set_from_power(
    l_gamma: DenseMatrix,
    gamma: f64,
    sigma: f64,
) -> Result<FractionalOperatorSet> {
    check_gamma(gamma)?;
    check_sigma(sigma)?;
    let d_gamma = positive_fractional_degrees(&l_gamma)?;
    let n = d_gamma.len();
    let w_gamma = DenseMatrix::from_fn(n, n, |r, c| if r == c { 0.0 } else { -l_gamma[(r, c)] });
    let left: Vec<f64> = d_gamma.iter().map(|d| d.powf(-sigma)).collect();
    let right: Vec<f64> = d_gamma.iter().map(|d| d.powf(sigma - 1.0)).collect();
    let mut l_tilde = DenseMatrix::from_fn(n, n, |r, c| left[r] * w_gamma[(r, c)] * right[c]);
    if sigma == 0.5 {
        mirror_upper(&mut l_tilde);
    }
    Ok(FractionalOperatorSet {
        gamma,
        sigma,
        l_gamma,
        d_gamma,
        w_gamma,
        l_tilde,
    })
}

fn positive_fractional_degrees(l_gamma: &DenseMatrix) -> Result<Vec<f64>> {
    let d = l_gamma.diagonal();
    let scale = d.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for (node, &value) in d.iter().enumerate() {
        if value <= 1e-12 * scale {
            return Err(Error::NonPositiveFractionalDegree { node, value });
        }
    }
    Ok(d)
}

/// Lévy-flight transition matrix `m_{u→v} = δ_uv − (L^γ)_uv / k_u`.
///
/// The diagonal is exactly zero and negative round-off is clamped to zero.
pub fn levy_transition(l_gamma: &DenseMatrix, d_gamma: &[f64]) -> Result<DenseMatrix> {
    if !l_gamma.is_square() || l_gamma.rows() != d_gamma.len() {
        return Err(Error::DimensionMismatch(format!(
            "L^γ is {}x{}, degrees have length {}",
            l_gamma.rows(),
            l_gamma.cols(),
            d_gamma.len()
        )));
    }
    if let Some((node, &value)) = d_gamma.iter().enumerate().find(|(_, &k)| k <= 0.0) {
        return Err(Error::NonPositiveFractionalDegree { node, value });
    }
    let n = d_gamma.len();
    Ok(DenseMatrix::from_fn(n, n, |u, v| {
        if u == v {
            0.0
        } else {
            (-l_gamma[(u, v)] / d_gamma[u]).max(0.0)
        }
    }))
}

/// Relaxation time `1 / min{λ₂^γ, 2 − λₙ^γ}` from a normalized-Laplacian spectrum.
pub fn relaxation_time(dec_norm: &SpectralDecomposition, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let ev = &dec_norm.eigenvalues;
    if ev.len() < 2 {
        return Err(Error::InvalidArgument(
            "relaxation time needs at least two nodes".into(),
        ));
    }
    let lambda2 = ev[1];
    let lambda_n = ev[ev.len() - 1].min(2.0);
    if lambda2 <= 1e-10 {
        return Err(Error::ZeroSpectralGap);
    }
    let gap = lambda2.powf(gamma).min(2.0 - lambda_n.powf(gamma));
    if gap <= 1e-10 {
        return Err(Error::ZeroSpectralGap);
    }
    Ok(1.0 / gap)
}
