//! The Lévy-flight graph convolutional network.
//!
//! Architecture: input dropout → `n` parallel FGS convolution branches (ELU, own
//! weights, own dropout masks, own edge-dropped operators) → gated max-average
//! pooling → residual block `ReLU(ELU(XW + b) + X)` → dropout → FGS output layer →
//! row softmax.

mod adam;
mod checkpoint;
mod layers;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use layers::{
    backward, elu, fgs_conv_forward, forward, gated_pool, loss, residual_block, Activation, DropoutMasks,
    ForwardCache, Propagation,
};
pub use train::{accuracy_on, evaluate, predict, train, EpochRecord, TrainHistory};

use rand::Rng;

use crate::dropedge::DropConfig;
use crate::error::{Error, Result};
use crate::fgs;
use crate::matrix::DenseMatrix;
use crate::rng;
use crate::spectral::LaplacianKind;

/// Components that can be switched off for ablation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Ablations {
    pub no_pdropedge: bool,
    /// Forces a single branch.
    pub no_parallel: bool,
    pub no_residual: bool,
    /// Plain mean pooling instead of the gated max-average pool.
    pub no_gated_pool: bool,
}

/// What the pooling gate looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateInput {
    /// Entrywise mean of the branch outputs (gate vector of length H).
    #[default]
    BranchMean,
    /// Concatenated branch outputs (gate vector of length n·H).
    Concat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub alpha: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub hidden_dim: usize,
    pub num_branches: usize,
    /// `None` means `⌈4α⌉`.
    pub truncation_order: Option<usize>,
    pub dropout_rate: f64,
    pub l2_coeff: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub drop: Option<DropConfig>,
    pub ablations: Ablations,
    pub laplacian: LaplacianKind,
    pub gate_input: GateInput,
    /// Resample dropped edges (and redo the eigendecompositions) every k epochs.
    pub redecompose_every: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            alpha: 0.5,
            sigma: 0.5,
            gamma: 0.5,
            hidden_dim: 16,
            num_branches: 4,
            truncation_order: None,
            dropout_rate: 0.5,
            l2_coeff: 5e-4,
            learning_rate: 0.01,
            epochs: 200,
            seed: 0,
            drop: Some(DropConfig::recommended(0, 0)),
            ablations: Ablations::default(),
            laplacian: LaplacianKind::Standard,
            gate_input: GateInput::BranchMean,
            redecompose_every: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.sigma) {
            return bad(format!("sigma must lie in [0, 1], got {}", self.sigma));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if self.hidden_dim == 0 || self.num_branches == 0 || self.epochs == 0 {
            return bad("hidden_dim, num_branches and epochs must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout_rate));
        }
        if !(self.l2_coeff >= 0.0) || !(self.learning_rate > 0.0) {
            return bad("l2 must be non-negative and learning_rate positive".into());
        }
        if self.redecompose_every == 0 {
            return bad("redecompose_every must be at least 1".into());
        }
        if let Some(d) = &self.drop {
            d.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn effective_branches(&self) -> usize {
        if self.ablations.no_parallel {
            1
        } else {
            self.num_branches
        }
    }

    pub fn order(&self) -> usize {
        self.truncation_order
            .unwrap_or_else(|| fgs::default_order(self.alpha))
    }

    /// Edge dropping settings, if dropping is enabled and not ablated.
    pub fn active_drop(&self) -> Option<&DropConfig> {
        if self.ablations.no_pdropedge {
            None
        } else {
            self.drop.as_ref()
        }
    }

    pub fn gated(&self) -> bool {
        !self.ablations.no_gated_pool
    }

    pub fn residual(&self) -> bool {
        !self.ablations.no_residual
    }
}

/// Trainable tensors; also used for gradients and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// One `Q×H` weight per branch.
    pub branches: Vec<DenseMatrix>,
    /// Gate weights as a column (`H×1`, or `nH×1` for concatenated gate input).
    pub gate: DenseMatrix,
    pub residual_weight: DenseMatrix,
    /// `1×H`.
    pub residual_bias: DenseMatrix,
    /// `H×K`.
    pub output: DenseMatrix,
}

impl Params {
    pub fn zeros_like(other: &Params) -> Params {
        let z = |m: &DenseMatrix| DenseMatrix::zeros(m.rows(), m.cols());
        Params {
            branches: other.branches.iter().map(z).collect(),
            gate: z(&other.gate),
            residual_weight: z(&other.residual_weight),
            residual_bias: z(&other.residual_bias),
            output: z(&other.output),
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.branches.len()).map(|b| format!("branch.{b}")).collect();
        names.extend(["gate", "residual.weight", "residual.bias", "output"].map(String::from));
        names
    }

    pub fn tensors(&self) -> Vec<&DenseMatrix> {
        let mut out: Vec<&DenseMatrix> = self.branches.iter().collect();
        out.extend([&self.gate, &self.residual_weight, &self.residual_bias, &self.output]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        let mut out: Vec<&mut DenseMatrix> = self.branches.iter_mut().collect();
        out.extend([
            &mut self.gate,
            &mut self.residual_weight,
            &mut self.residual_bias,
            &mut self.output,
        ]);
        out
    }

    /// Tensors that carry the ℓ2 penalty (everything but the bias).
    pub(crate) fn weight_tensors(&self) -> impl Iterator<Item = &DenseMatrix> {
        self.branches
            .iter()
            .chain([&self.gate, &self.residual_weight, &self.output])
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.as_slice().iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LfgcnModel {
    pub params: Params,
    pub adam: AdamState,
}

impl LfgcnModel {
    /// Glorot-uniform weights from the config's `init` stream; biases start at zero.
    pub fn init(config: &ModelConfig, num_features: usize, num_classes: usize) -> Result<Self> {
        config.validate()?;
        let h = config.hidden_dim;
        let n = config.effective_branches();
        let gate_len = match config.gate_input {
            GateInput::BranchMean => h,
            GateInput::Concat => n * h,
        };
        let mut slot = 0u64;
        let mut glorot = |rows: usize, cols: usize| {
            let mut r = rng::stream(config.seed, "init", &[slot]);
            slot += 1;
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            DenseMatrix::from_fn(rows, cols, |_, _| r.random_range(-limit..limit))
        };
        let branches = (0..n).map(|_| glorot(num_features, h)).collect();
        let gate = glorot(gate_len, 1);
        let residual_weight = glorot(h, h);
        let output = glorot(h, num_classes);
        let params = Params {
            branches,
            gate,
            residual_weight,
            residual_bias: DenseMatrix::zeros(1, h),
            output,
        };
        let adam = AdamState::new(&params);
        Ok(LfgcnModel { params, adam })
    }

    pub fn num_branches(&self) -> usize {
        self.params.branches.len()
    }
}
