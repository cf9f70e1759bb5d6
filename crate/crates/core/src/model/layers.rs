use rand::Rng;

use super::{ModelConfig, Params};
use crate::error::{Error, Result};
use crate::fgs::{fgs_apply, fgs_apply_transpose, FilterSpec};
use crate::gssl::LabelMatrix;
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Elu,
    Identity,
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

fn elu_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        z.exp()
    }
}

fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `activation(fgs_apply(spec, H_in) · W)`.
pub fn fgs_conv_forward(
    h_in: &DenseMatrix,
    spec: &FilterSpec<'_>,
    weight: &DenseMatrix,
    activation: Activation,
) -> Result<DenseMatrix> {
    let z = fgs_apply(spec, h_in)?.matmul(weight)?;
    Ok(match activation {
        Activation::Elu => z.map(elu),
        Activation::Identity => z,
    })
}

struct Pooled {
    out: DenseMatrix,
    f_avg: DenseMatrix,
    f_max: DenseMatrix,
    argmax: Vec<usize>,
    gate: Vec<f64>,
}

fn check_branches(branches: &[DenseMatrix]) -> Result<(usize, usize)> {
    let first = branches
        .first()
        .ok_or_else(|| Error::InvalidArgument("pooling needs at least one branch".into()))?;
    if branches.iter().any(|b| b.shape() != first.shape()) {
        return Err(Error::DimensionMismatch("branch outputs differ in shape".into()));
    }
    Ok(first.shape())
}

fn pool_forward(branches: &[DenseMatrix], gate_weight: Option<&[f64]>) -> Result<Pooled> {
    let (n, h) = check_branches(branches)?;
    let nb = branches.len() as f64;
    let mut f_avg = DenseMatrix::zeros(n, h);
    for b in branches {
        f_avg.axpy(1.0 / nb, b);
    }
    let Some(w) = gate_weight else {
        return Ok(Pooled {
            out: f_avg.clone(),
            f_avg,
            f_max: DenseMatrix::zeros(0, 0),
            argmax: Vec::new(),
            gate: Vec::new(),
        });
    };
    let concat = w.len() == branches.len() * h && branches.len() > 1;
    if !concat && w.len() != h {
        return Err(Error::DimensionMismatch(format!(
            "gate weight has length {}, expected {h} or {}",
            w.len(),
            branches.len() * h
        )));
    }
    let mut f_max = branches[0].clone();
    let mut argmax = vec![0usize; n * h];
    for (bi, b) in branches.iter().enumerate().skip(1) {
        for (i, (&v, m)) in b.as_slice().iter().zip(f_max.as_mut_slice()).enumerate() {
            if v > *m {
                *m = v;
                argmax[i] = bi;
            }
        }
    }
    let gate: Vec<f64> = (0..n)
        .map(|v| {
            let s: f64 = if concat {
                branches
                    .iter()
                    .enumerate()
                    .map(|(bi, b)| b.row(v).iter().zip(&w[bi * h..(bi + 1) * h]).map(|(a, g)| a * g).sum::<f64>())
                    .sum()
            } else {
                f_avg.row(v).iter().zip(w).map(|(a, g)| a * g).sum()
            };
            logistic(s)
        })
        .collect();
    let out = DenseMatrix::from_fn(n, h, |v, c| gate[v] * f_max[(v, c)] + (1.0 - gate[v]) * f_avg[(v, c)]);
    Ok(Pooled {
        out,
        f_avg,
        f_max,
        argmax,
        gate,
    })
}

/// Gated max-average pooling across branches with a per-node logistic gate on the
/// branch-mean row (or on the concatenated rows when `gate_weight` has length `n·H`).
pub fn gated_pool(branches: &[DenseMatrix], gate_weight: &[f64]) -> Result<DenseMatrix> {
    Ok(pool_forward(branches, Some(gate_weight))?.out)
}

/// `ReLU(ELU(X W + b) + X)`.
pub fn residual_block(x: &DenseMatrix, weight: &DenseMatrix, bias: &[f64]) -> Result<DenseMatrix> {
    if weight.rows() != x.cols() || weight.cols() != x.cols() || bias.len() != x.cols() {
        return Err(Error::DimensionMismatch(format!(
            "residual block on {}x{} input needs a {}x{} weight and bias of length {}",
            x.rows(),
            x.cols(),
            x.cols(),
            x.cols(),
            x.cols()
        )));
    }
    let z = x.matmul(weight)?;
    Ok(DenseMatrix::from_fn(x.rows(), x.cols(), |r, c| {
        (elu(z[(r, c)] + bias[c]) + x[(r, c)]).max(0.0)
    }))
}

/// Propagation operators for one forward pass: one per branch plus the output layer.
#[derive(Debug, Clone)]
pub struct Propagation<'a> {
    pub alpha: f64,
    pub order: usize,
    pub branches: Vec<&'a DenseMatrix>,
    pub output: &'a DenseMatrix,
}

impl<'a> Propagation<'a> {
    /// Every layer uses the same operator (inference, or training without edge dropping).
    pub fn shared(alpha: f64, order: usize, op: &'a DenseMatrix, branches: usize) -> Self {
        Propagation {
            alpha,
            order,
            branches: vec![op; branches],
            output: op,
        }
    }

    fn spec(&self, op: &'a DenseMatrix) -> Result<FilterSpec<'a>> {
        FilterSpec::new(self.alpha, self.order, op)
    }
}

/// Inverted-dropout masks: entries are 0 or `1/(1−rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub inputs: Vec<DenseMatrix>,
    pub hidden: DenseMatrix,
}

impl DropoutMasks {
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        rate: f64,
        branches: usize,
        nodes: usize,
        features: usize,
        hidden: usize,
    ) -> Self {
        let keep = 1.0 / (1.0 - rate);
        let mut mask = |rows, cols| {
            DenseMatrix::from_fn(rows, cols, |_, _| {
                if rng.random::<f64>() < rate {
                    0.0
                } else {
                    keep
                }
            })
        };
        let inputs = (0..branches).map(|_| mask(nodes, features)).collect();
        let hidden = mask(nodes, hidden);
        DropoutMasks { inputs, hidden }
    }
}

/// Intermediates retained by [`forward`] for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    propagated: Vec<DenseMatrix>,
    pre_act: Vec<DenseMatrix>,
    branch_out: Vec<DenseMatrix>,
    f_avg: DenseMatrix,
    f_max: DenseMatrix,
    argmax: Vec<usize>,
    gate: Vec<f64>,
    pooled: DenseMatrix,
    residual_pre: DenseMatrix,
    residual_sum: DenseMatrix,
    hidden: DenseMatrix,
    output_in: DenseMatrix,
    pub logits: DenseMatrix,
    pub probs: DenseMatrix,
    masks: Option<DropoutMasks>,
    gated: bool,
    residual: bool,
}

impl ForwardCache {
    /// Per-node mean of the branch outputs before pooling.
    pub fn branch_mean(&self) -> &DenseMatrix {
        &self.f_avg
    }

    pub fn branch_outputs(&self) -> &[DenseMatrix] {
        &self.branch_out
    }

    /// Input of the output layer (after the residual block and dropout).
    pub fn hidden_representation(&self) -> &DenseMatrix {
        &self.hidden
    }
}

fn check_shapes(params: &Params, x: &DenseMatrix, prop: &Propagation<'_>) -> Result<()> {
    let nb = params.branches.len();
    if nb == 0 || prop.branches.len() != nb {
        return Err(Error::DimensionMismatch(format!(
            "{} branch weights but {} branch operators",
            nb,
            prop.branches.len()
        )));
    }
    let h = params.residual_weight.rows();
    for (b, w) in params.branches.iter().enumerate() {
        if w.rows() != x.cols() || w.cols() != h {
            return Err(Error::DimensionMismatch(format!(
                "branch {b} weight is {}x{}, expected {}x{h}",
                w.rows(),
                w.cols(),
                x.cols()
            )));
        }
    }
    if params.output.rows() != h || params.residual_bias.cols() != h {
        return Err(Error::DimensionMismatch("hidden width mismatch".into()));
    }
    Ok(())
}

/// Full forward pass. `masks = None` is inference mode.
pub fn forward(
    params: &Params,
    config: &ModelConfig,
    x: &DenseMatrix,
    prop: &Propagation<'_>,
    masks: Option<&DropoutMasks>,
) -> Result<(DenseMatrix, ForwardCache)> {
    check_shapes(params, x, prop)?;
    let nb = params.branches.len();
    let mut propagated = Vec::with_capacity(nb);
    let mut pre_act = Vec::with_capacity(nb);
    let mut branch_out = Vec::with_capacity(nb);
    for b in 0..nb {
        let input = match masks {
            Some(m) => x.zip_with(&m.inputs[b], |a, k| a * k)?,
            None => x.clone(),
        };
        let p = fgs_apply(&prop.spec(prop.branches[b])?, &input)?;
        let z = p.mul_unchecked(&params.branches[b]);
        branch_out.push(z.map(elu));
        pre_act.push(z);
        propagated.push(p);
    }
    let gated = config.gated();
    let pool = pool_forward(&branch_out, gated.then(|| params.gate.as_slice()))?;
    let pooled = pool.out;

    let residual = config.residual();
    let (residual_pre, residual_sum, hidden) = if residual {
        let mut zr = pooled.mul_unchecked(&params.residual_weight);
        let bias = params.residual_bias.as_slice();
        for r in 0..zr.rows() {
            for (v, b) in zr.row_mut(r).iter_mut().zip(bias) {
                *v += b;
            }
        }
        let sum = zr.map(elu).add(&pooled)?;
        let out = sum.map(|v| v.max(0.0));
        (zr, sum, out)
    } else {
        (DenseMatrix::zeros(0, 0), DenseMatrix::zeros(0, 0), pooled.clone())
    };
    let hidden = match masks {
        Some(m) => hidden.zip_with(&m.hidden, |a, k| a * k)?,
        None => hidden,
    };
    let output_in = fgs_apply(&prop.spec(prop.output)?, &hidden)?;
    let logits = output_in.mul_unchecked(&params.output);
    let probs = softmax_rows(&logits);
    let cache = ForwardCache {
        propagated,
        pre_act,
        branch_out,
        f_avg: pool.f_avg,
        f_max: pool.f_max,
        argmax: pool.argmax,
        gate: pool.gate,
        pooled,
        residual_pre,
        residual_sum,
        hidden,
        output_in,
        logits,
        probs: probs.clone(),
        masks: masks.cloned(),
        gated,
        residual,
    };
    Ok((probs, cache))
}

fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        for v in row.iter_mut() {
            *v = (*v - lse).exp();
        }
    }
    out
}

fn masked_labels(y: &LabelMatrix, mask: &[usize]) -> Result<Vec<(usize, usize)>> {
    if mask.is_empty() {
        return Err(Error::InvalidArgument("training mask is empty".into()));
    }
    mask.iter()
        .map(|&v| {
            if v >= y.num_nodes() {
                return Err(Error::InvalidArgument(format!("mask node {v} out of range")));
            }
            y.label(v)
                .map(|k| (v, k))
                .ok_or_else(|| Error::InvalidArgument(format!("mask node {v} has no label")))
        })
        .collect()
}

/// Mean cross-entropy over `mask` plus `l2 · Σ‖W‖²` over all weights (biases excluded).
pub fn loss(probs: &DenseMatrix, y: &LabelMatrix, mask: &[usize], l2: f64, params: &Params) -> Result<f64> {
    let labeled = masked_labels(y, mask)?;
    let ce: f64 = labeled
        .iter()
        .map(|&(v, k)| -probs[(v, k)].max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / labeled.len() as f64;
    let reg: f64 = params.weight_tensors().map(DenseMatrix::sum_squares).sum();
    Ok(ce + l2 * reg)
}

/// Analytical gradients of [`loss`] with respect to every parameter tensor.
pub fn backward(
    params: &Params,
    cache: &ForwardCache,
    prop: &Propagation<'_>,
    y: &LabelMatrix,
    mask: &[usize],
    l2: f64,
) -> Result<Params> {
    let labeled = masked_labels(y, mask)?;
    let (n, k) = cache.probs.shape();
    let inv = 1.0 / labeled.len() as f64;
    let mut d_logits = DenseMatrix::zeros(n, k);
    for &(v, label) in &labeled {
        for c in 0..k {
            let target = if c == label { 1.0 } else { 0.0 };
            d_logits[(v, c)] = (cache.probs[(v, c)] - target) * inv;
        }
    }
    let mut grads = Params::zeros_like(params);

    grads.output = cache.output_in.t_mul_unchecked(&d_logits);
    let d_output_in = d_logits.mul_t_unchecked(&params.output);
    let d_hidden = fgs_apply_transpose(&prop.spec(prop.output)?, &d_output_in)?;
    let d_hidden = match &cache.masks {
        Some(m) => d_hidden.zip_with(&m.hidden, |a, b| a * b)?,
        None => d_hidden,
    };

    let d_pooled = if cache.residual {
        let d_sum = d_hidden.zip_with(&cache.residual_sum, |g, u| if u > 0.0 { g } else { 0.0 })?;
        let d_pre = d_sum.zip_with(&cache.residual_pre, |g, z| g * elu_grad(z))?;
        grads.residual_weight = cache.pooled.t_mul_unchecked(&d_pre);
        let bias_grad: Vec<f64> = (0..d_pre.cols()).map(|c| d_pre.column(c).iter().sum()).collect();
        grads.residual_bias = DenseMatrix::from_row_major(1, bias_grad.len(), bias_grad)?;
        d_sum.add(&d_pre.mul_t_unchecked(&params.residual_weight))?
    } else {
        d_hidden
    };

    let nb = params.branches.len();
    let h = d_pooled.cols();
    let mut d_branch: Vec<DenseMatrix> = (0..nb).map(|_| d_pooled.scale(1.0 / nb as f64)).collect();
    if cache.gated {
        let w = params.gate.as_slice();
        let concat = w.len() != h;
        let mut d_gate = vec![0.0; w.len()];
        for b in d_branch.iter_mut() {
            for v in 0..n {
                let g = cache.gate[v];
                for x in b.row_mut(v) {
                    *x *= 1.0 - g;
                }
            }
        }
        for v in 0..n {
            let g = cache.gate[v];
            let dg: f64 = (0..h)
                .map(|c| d_pooled[(v, c)] * (cache.f_max[(v, c)] - cache.f_avg[(v, c)]))
                .sum();
            let ds = dg * g * (1.0 - g);
            for c in 0..h {
                let i = v * h + c;
                d_branch[cache.argmax[i]].as_mut_slice()[i] += d_pooled[(v, c)] * g;
                if concat {
                    for (b, db) in d_branch.iter_mut().enumerate() {
                        d_gate[b * h + c] += ds * cache.branch_out[b][(v, c)];
                        db[(v, c)] += ds * w[b * h + c];
                    }
                } else {
                    d_gate[c] += ds * cache.f_avg[(v, c)];
                    for db in d_branch.iter_mut() {
                        db[(v, c)] += ds * w[c] / nb as f64;
                    }
                }
            }
        }
        grads.gate = DenseMatrix::from_row_major(d_gate.len(), 1, d_gate)?;
    }
    for b in 0..nb {
        let d_pre = d_branch[b].zip_with(&cache.pre_act[b], |g, z| g * elu_grad(z))?;
        grads.branches[b] = cache.propagated[b].t_mul_unchecked(&d_pre);
    }

    let mut params_l2: Vec<(&mut DenseMatrix, &DenseMatrix)> = grads
        .branches
        .iter_mut()
        .zip(&params.branches)
        .collect();
    params_l2.push((&mut grads.gate, &params.gate));
    params_l2.push((&mut grads.residual_weight, &params.residual_weight));
    params_l2.push((&mut grads.output, &params.output));
    for (g, p) in params_l2 {
        g.axpy(2.0 * l2, p);
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_branch_pool_is_identity() {
        let b = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap();
        let out = gated_pool(std::slice::from_ref(&b), &[10.0, -4.0]).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn zero_gate_is_half_max_half_mean() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 3.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![3.0, 1.0]]).unwrap();
        let out = gated_pool(&[a, b], &[0.0, 0.0]).unwrap();
        // max = [3,3], mean = [2,2]
        assert_eq!(out.row(0), &[2.5, 2.5]);
    }

    #[test]
    fn saturated_gate_selects_max() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 3.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![3.0, 1.0]]).unwrap();
        // branch mean row is [2, 2]; weights 100 push the gate to 1
        let out = gated_pool(&[a, b], &[100.0, 100.0]).unwrap();
        assert_eq!(out.row(0), &[3.0, 3.0]);
    }

    #[test]
    fn pool_rejects_empty_and_ragged() {
        assert!(gated_pool(&[], &[1.0]).is_err());
        let a = DenseMatrix::zeros(2, 2);
        let b = DenseMatrix::zeros(3, 2);
        assert!(gated_pool(&[a, b], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn residual_cases() {
        let x = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap();
        let zero = DenseMatrix::zeros(2, 2);
        assert_eq!(residual_block(&x, &zero, &[0.0, 0.0]).unwrap(), x.map(|v| v.max(0.0)));
        let pos = x.map(f64::abs);
        assert_eq!(residual_block(&pos, &zero, &[0.0, 0.0]).unwrap(), pos);
        assert!(residual_block(&x, &DenseMatrix::zeros(3, 2), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn conv_with_identity_weight_is_filter() {
        let op = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let spec = FilterSpec::new(0.4, 2, &op).unwrap();
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.0]]).unwrap();
        let got = fgs_conv_forward(&x, &spec, &DenseMatrix::identity(2), Activation::Identity).unwrap();
        assert_eq!(got, fgs_apply(&spec, &x).unwrap());
        let zero = DenseMatrix::zeros(2, 2);
        assert_eq!(fgs_conv_forward(&zero, &spec, &DenseMatrix::identity(2), Activation::Elu).unwrap(), zero);
    }

    #[test]
    fn loss_values() {
        let y = LabelMatrix::from_labels(&[Some(0), Some(2)], 3).unwrap();
        let params = Params {
            branches: vec![DenseMatrix::zeros(1, 1)],
            gate: DenseMatrix::zeros(1, 1),
            residual_weight: DenseMatrix::zeros(1, 1),
            residual_bias: DenseMatrix::zeros(1, 1),
            output: DenseMatrix::zeros(1, 3),
        };
        let perfect = DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(loss(&perfect, &y, &[0, 1], 0.0, &params).unwrap() <= 1e-7);
        let uniform = DenseMatrix::from_fn(2, 3, |_, _| 1.0 / 3.0);
        let l = loss(&uniform, &y, &[0, 1], 0.0, &params).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-12);
        assert!((l - 1.0986).abs() < 1e-4);
        let mut with_weight = params.clone();
        with_weight.output = DenseMatrix::zeros(1, 3);
        with_weight.residual_weight = DenseMatrix::from_rows(&[vec![2.0]]).unwrap();
        let l2 = loss(&perfect, &y, &[0, 1], 0.5, &with_weight).unwrap();
        assert!((l2 - 2.0).abs() < 1e-7);
        assert!(loss(&perfect, &y, &[], 0.0, &params).is_err());
    }
}
