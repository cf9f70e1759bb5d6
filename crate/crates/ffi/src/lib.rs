//! C ABI over `lfgcn-core`.
//!
//! Every function returns an [`LfgcnStatus`]; results go through out-pointers. On a
//! non-zero status, [`lfgcn_last_error`] returns a message for the calling thread.
//! Matrices are row-major `double` arrays. Graph handles are owned by the caller and
//! released with [`lfgcn_graph_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lfgcn_core::dropedge::{self, DropConfig};
use lfgcn_core::fgs::{self, FilterSpec};
use lfgcn_core::graph::{self, Edge, Graph};
use lfgcn_core::gssl::{self, LabelMatrix};
use lfgcn_core::spectral::{self, FractionalOperatorSet, LaplacianKind};
use lfgcn_core::{DenseMatrix, Error, ErrorKind};

/// Status codes; the first four match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfgcnStatus {
    Ok = 0,
    InvalidArgument = 1,
    DataError = 2,
    NumericalError = 3,
    NullPointer = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque graph handle.
pub struct LfgcnGraph {
    inner: Graph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: LfgcnStatus, msg: impl Into<String>) -> LfgcnStatus {
    set_error(msg.into());
    status
}

impl From<Error> for LfgcnStatus {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Usage => LfgcnStatus::InvalidArgument,
            ErrorKind::Data => LfgcnStatus::DataError,
            ErrorKind::Numerical => LfgcnStatus::NumericalError,
        };
        fail(status, e.to_string())
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), LfgcnStatus>) -> LfgcnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LfgcnStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(LfgcnStatus::Panic, "internal panic"),
    }
}

fn null(name: &str) -> LfgcnStatus {
    fail(LfgcnStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn graph_ref<'a>(g: *const LfgcnGraph) -> Result<&'a Graph, LfgcnStatus> {
    g.as_ref().map(|h| &h.inner).ok_or_else(|| null("graph"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], LfgcnStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], LfgcnStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_capacity(have: usize, need: usize, name: &str) -> Result<(), LfgcnStatus> {
    if have < need {
        return Err(fail(
            LfgcnStatus::BufferTooSmall,
            format!("`{name}` holds {have} values, {need} needed"),
        ));
    }
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn lfgcn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds an undirected graph from parallel edge arrays; `weights` may be null for unit weights.
///
/// # Safety
/// `us`, `vs` (and `weights` if non-null) must point to `num_edges` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfgcn_graph_new(
    num_nodes: usize,
    us: *const usize,
    vs: *const usize,
    weights: *const f64,
    num_edges: usize,
    out: *mut *mut LfgcnGraph,
) -> LfgcnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let us = slice(us, num_edges, "us")?;
        let vs = slice(vs, num_edges, "vs")?;
        let ws = if weights.is_null() {
            None
        } else {
            Some(slice(weights, num_edges, "weights")?)
        };
        let edges = (0..num_edges)
            .map(|i| Edge {
                u: us[i],
                v: vs[i],
                w: ws.map_or(1.0, |w| w[i]),
            })
            .collect();
        let g = Graph::new(num_nodes, false, edges)?;
        *out = Box::into_raw(Box::new(LfgcnGraph { inner: g }));
        Ok(())
    })
}

/// Loads an edge-list file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfgcn_graph_load(path: *const c_char, out: *mut *mut LfgcnGraph) -> LfgcnStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(LfgcnStatus::InvalidArgument, "path is not UTF-8"))?;
        let g = graph::load_graph(p)?;
        *out = Box::into_raw(Box::new(LfgcnGraph { inner: g }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lfgcn_graph_free(g: *mut LfgcnGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lfgcn_graph_num_nodes(g: *const LfgcnGraph) -> usize {
    g.as_ref().map_or(0, |h| h.inner.num_nodes())
}

/// # Safety
/// `g` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lfgcn_graph_num_edges(g: *const LfgcnGraph) -> usize {
    g.as_ref().map_or(0, |h| h.inner.num_edges())
}

/// Hop-count edge betweenness, one score per edge in input order.
///
/// # Safety
/// `scores` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn lfgcn_edge_betweenness(
    g: *const LfgcnGraph,
    scores: *mut f64,
    capacity: usize,
) -> LfgcnStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let m = g.to_undirected().num_edges();
        check_capacity(capacity, m, "scores")?;
        let out = slice_mut(scores, m, "scores")?;
        out.copy_from_slice(&dropedge::edge_betweenness(g).scores());
        Ok(())
    })
}

/// Closed-form fractional G-SSL. `labels[v]` is a class in `0..num_classes` or negative
/// for unlabeled. Writes the `N x num_classes` score matrix and, if `predicted` is
/// non-null, the argmax class per node.
///
/// # Safety
/// `labels` must hold `N` values, `scores` `N * num_classes`, `predicted` `N` or be null.
#[no_mangle]
pub unsafe extern "C" fn lfgcn_gssl_classify(
    g: *const LfgcnGraph,
    labels: *const i64,
    num_classes: usize,
    alpha: f64,
    sigma: f64,
    gamma: f64,
    scores: *mut f64,
    predicted: *mut usize,
) -> LfgcnStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let n = g.num_nodes();
        let labels: Vec<Option<usize>> = slice(labels, n, "labels")?
            .iter()
            .map(|&l| usize::try_from(l).ok())
            .collect();
        let y = LabelMatrix::from_labels(&labels, num_classes)?;
        let ops = FractionalOperatorSet::from_graph(g, gamma, sigma, LaplacianKind::Standard)?;
        let f = gssl::fractional_gssl_classify(&ops, &y, alpha)?;
        slice_mut(scores, n * num_classes, "scores")?.copy_from_slice(f.scores().as_slice());
        if !predicted.is_null() {
            slice_mut(predicted, n, "predicted")?.copy_from_slice(&gssl::classify_from_scores(f.scores()));
        }
        Ok(())
    })
}

/// Truncated FGS filter `(1-α) Σ_{i≤order} (αL̃)^i X` on the fractional operator of `g`.
/// `order == 0` selects the default `⌈4α⌉`.
///
/// # Safety
/// `x` and `out` must each hold `N * cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn lfgcn_fgs_apply(
    g: *const LfgcnGraph,
    alpha: f64,
    sigma: f64,
    gamma: f64,
    order: usize,
    x: *const f64,
    cols: usize,
    out: *mut f64,
) -> LfgcnStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let n = g.num_nodes();
        let x = DenseMatrix::from_row_major(n, cols, slice(x, n * cols, "x")?.to_vec())?;
        let ops = FractionalOperatorSet::from_graph(g, gamma, sigma, LaplacianKind::Standard)?;
        let order = if order == 0 { fgs::default_order(alpha) } else { order };
        let spec = FilterSpec::new(alpha, order, &ops.l_tilde)?;
        let y = fgs::fgs_apply(&spec, &x)?;
        slice_mut(out, n * cols, "out")?.copy_from_slice(y.as_slice());
        Ok(())
    })
}

/// Relaxation time of the Lévy-flight walk from the normalized-Laplacian spectrum.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfgcn_relaxation_time(g: *const LfgcnGraph, gamma: f64, out: *mut f64) -> LfgcnStatus {
    guard(|| {
        let g = graph_ref(g)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let dec = spectral::decompose_graph(g, LaplacianKind::Normalized)?;
        *out = spectral::relaxation_time(&dec, gamma)?;
        Ok(())
    })
}

/// One P-DropEdge round. Writes the removed edge ids in draw order and their count.
///
/// # Safety
/// `removed` must hold `capacity` values; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfgcn_pdropedge_sample(
    g: *const LfgcnGraph,
    p_pde: f64,
    tau: f64,
    seed: u64,
    removed: *mut usize,
    capacity: usize,
    count: *mut usize,
) -> LfgcnStatus {
    guard(|| {
        let g = graph_ref(g)?;
        if count.is_null() {
            return Err(null("count"));
        }
        let cfg = DropConfig::new(p_pde, tau, seed)?;
        let table = dropedge::edge_betweenness(g);
        let mut r = lfgcn_core::rng::stream(seed, "dropedge-sample", &[seed]);
        let s = dropedge::pdropedge_sample(g, &table, &cfg, &mut r)?;
        check_capacity(capacity, s.removed.len(), "removed")?;
        slice_mut(removed, s.removed.len(), "removed")?.copy_from_slice(&s.removed);
        *count = s.removed.len();
        Ok(())
    })
}
