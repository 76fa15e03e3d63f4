//! C ABI over the `gcal` library.
//!
//! Graphs are exposed as an opaque [`GcalGraph`] handle that the caller owns
//! and releases with [`gcal_graph_free`]. Every fallible function returns a
//! [`GcalStatus`]; on failure the message is available from
//! [`gcal_last_error`] on the same thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use gcal::dataset::{generate_sbm, load_bundle, SbmSpec};
use gcal::experiment::{run_experiment, write_outputs, ExperimentConfig};
use gcal::{ego_homophily, mean_graph_homophily, minimax_select, ALState, Error, Graph};
use ndarray::ArrayView2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcalStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidState = 3,
    Undefined = 4,
    Numeric = 5,
    Data = 6,
    Config = 7,
    Io = 8,
    Panic = 9,
}

/// Opaque graph handle.
pub struct GcalGraph {
    graph: Graph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GcalStatus {
    match e {
        Error::InvalidArgument(_) => GcalStatus::InvalidArgument,
        Error::InvalidState(_) => GcalStatus::InvalidState,
        Error::Undefined(_) => GcalStatus::Undefined,
        Error::Numeric(_) => GcalStatus::Numeric,
        Error::Config(_) => GcalStatus::Config,
        Error::Io(_) => GcalStatus::Io,
        _ => GcalStatus::Data,
    }
}

fn guard(f: impl FnOnce() -> Result<(), GcalError>) -> GcalStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GcalStatus::Ok,
        Ok(Err(GcalError(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GcalStatus::Panic
        }
    }
}

struct GcalError(GcalStatus, String);

impl From<Error> for GcalError {
    fn from(e: Error) -> Self {
        GcalError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> GcalError {
    GcalError(GcalStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, GcalError> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| GcalError(GcalStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn graph_ref<'a>(g: *const GcalGraph) -> Result<&'a Graph, GcalError> {
    g.as_ref().map(|h| &h.graph).ok_or_else(|| null("graph"))
}

unsafe fn store_graph(graph: Graph, out: *mut *mut GcalGraph) {
    *out = Box::into_raw(Box::new(GcalGraph { graph }));
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn gcal_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gcal_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a dataset bundle directory into `*out`.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gcal_graph_load(dir: *const c_char, out: *mut *mut GcalGraph) -> GcalStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let dir = path_arg(dir, "dir")?;
        let (_, graph) = load_bundle(dir)?;
        store_graph(graph, out);
        Ok(())
    })
}

/// Samples a stochastic block model graph into `*out`.
///
/// # Safety
/// `blocks` must point to `n_blocks` sizes and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gcal_graph_generate_sbm(
    blocks: *const usize,
    n_blocks: usize,
    p_in: f64,
    p_out: f64,
    feat_dim: usize,
    feat_noise: f64,
    seed: u64,
    out: *mut *mut GcalGraph,
) -> GcalStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if blocks.is_null() && n_blocks > 0 {
            return Err(null("blocks"));
        }
        let blocks = if n_blocks == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(blocks, n_blocks).to_vec()
        };
        let spec = SbmSpec {
            blocks,
            p_in,
            p_out,
            feat_dim,
            feat_noise,
        };
        store_graph(generate_sbm(&spec, seed)?, out);
        Ok(())
    })
}

/// Releases a graph handle. Null is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gcal_graph_free(g: *mut GcalGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn gcal_graph_node_count(g: *const GcalGraph) -> usize {
    g.as_ref().map_or(0, |h| h.graph.node_count())
}

/// # Safety
/// `g` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn gcal_graph_edge_count(g: *const GcalGraph) -> usize {
    g.as_ref().map_or(0, |h| h.graph.edge_count())
}

/// # Safety
/// `g` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn gcal_graph_feature_dim(g: *const GcalGraph) -> usize {
    g.as_ref().map_or(0, |h| h.graph.feature_dim())
}

/// # Safety
/// `g` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn gcal_graph_class_count(g: *const GcalGraph) -> usize {
    g.as_ref().map_or(0, |h| h.graph.class_count())
}

/// Ego homophily of node `v`.
///
/// # Safety
/// `g` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gcal_ego_homophily(g: *const GcalGraph, v: usize, out: *mut f64) -> GcalStatus {
    guard(|| {
        let graph = graph_ref(g)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ego_homophily(graph, v)?;
        Ok(())
    })
}

/// Mean ego homophily over the non-isolated nodes.
///
/// # Safety
/// `g` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gcal_mean_graph_homophily(g: *const GcalGraph, out: *mut f64) -> GcalStatus {
    guard(|| {
        let graph = graph_ref(g)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = mean_graph_homophily(graph)?;
        Ok(())
    })
}

/// Minimax selection among `unlabeled` given row-major `rows × cols`
/// embeddings. Writes the chosen node and its score.
///
/// # Safety
/// `embeddings` must hold `rows * cols` values, `unlabeled` must hold
/// `n_unlabeled` ids, and the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gcal_minimax_select(
    g: *const GcalGraph,
    embeddings: *const f64,
    rows: usize,
    cols: usize,
    unlabeled: *const usize,
    n_unlabeled: usize,
    hops: usize,
    seed: u64,
    out_node: *mut usize,
    out_score: *mut f64,
) -> GcalStatus {
    guard(|| {
        let graph = graph_ref(g)?;
        if embeddings.is_null() || unlabeled.is_null() {
            return Err(null("input array"));
        }
        if out_node.is_null() || out_score.is_null() {
            return Err(null("out"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| GcalError(GcalStatus::InvalidArgument, "embedding size overflows".into()))?;
        let h = ArrayView2::from_shape((rows, cols), std::slice::from_raw_parts(embeddings, len))
            .map_err(|e| GcalError(GcalStatus::InvalidArgument, e.to_string()))?;
        let pool = std::slice::from_raw_parts(unlabeled, n_unlabeled);
        let state = ALState::new(graph.node_count(), pool, 0, None)?;
        let pick = minimax_select(graph, h, &state, hops, seed)?;
        *out_node = pick.node;
        *out_score = pick.score;
        Ok(())
    })
}

/// Runs the experiment described by a config file and writes `records.csv`
/// and `summary.json` into `out_dir`.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn gcal_run_experiment(config_path: *const c_char, out_dir: *const c_char) -> GcalStatus {
    guard(|| {
        let cfg_path = path_arg(config_path, "config_path")?;
        let out = path_arg(out_dir, "out_dir")?;
        let mut cfg = ExperimentConfig::from_file(cfg_path)?;
        cfg.out = Some(out.clone());
        let records = run_experiment(&cfg)?;
        write_outputs(&records, &out)?;
        Ok(())
    })
}
