//! C ABI over `oim-core`.
//!
//! Every fallible function returns an [`OimStatus`]; on failure a message is
//! kept per thread and can be read with [`oim_last_error_message`]. Graphs
//! and EXP3 states are opaque handles released with their `_free` function.
//! Strings returned by the library are released with [`oim_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use oim_core::cascade::{exact_spread, monte_carlo_spread_seeded};
use oim_core::ensemble::{exp3_init, exp3_sample, exp3_update, Exp3State};
use oim_core::graph::{assign_weighted_cascade, load_edge_list, DirectedGraph, EdgeListOptions};
use oim_core::harness::{run_experiment, write_csv, ExperimentConfig};
use oim_core::rng::{stream, StreamRng};
use oim_core::OimError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Dimension = 4,
    Capacity = 5,
    Numeric = 6,
    Config = 7,
    Io = 8,
    InvalidUtf8 = 9,
    Panic = 10,
}

impl From<&OimError> for OimStatus {
    fn from(e: &OimError) -> Self {
        match e {
            OimError::Parse { .. } => OimStatus::Parse,
            OimError::InvalidArgument(_) => OimStatus::InvalidArgument,
            OimError::Dimension { .. } => OimStatus::Dimension,
            OimError::Capacity(_) => OimStatus::Capacity,
            OimError::Numeric(_) => OimStatus::Numeric,
            OimError::Config(_) => OimStatus::Config,
            OimError::Io { .. } => OimStatus::Io,
        }
    }
}

/// A directed graph.
pub struct OimGraph {
    inner: DirectedGraph,
}

/// EXP3 weights together with the random stream used for sampling.
pub struct OimExp3 {
    state: Exp3State,
    rng: StreamRng,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(OimStatus, String);

impl From<OimError> for Failure {
    fn from(e: OimError) -> Self {
        Failure(OimStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(OimStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            OimStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            OimStatus::Panic
        }
    }
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(OimStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn graph_arg<'a>(g: *const OimGraph) -> Result<&'a DirectedGraph, Failure> {
    g.as_ref().map(|g| &g.inner).ok_or_else(|| null("graph"))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn oim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a whitespace-separated edge list (`#` starts a comment line).
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oim_graph_from_edge_list(
    text: *const c_char,
    symmetrize: bool,
    out: *mut *mut OimGraph,
) -> OimStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (graph, _) = load_edge_list(text.as_bytes(), EdgeListOptions { symmetrize })?;
        *out = Box::into_raw(Box::new(OimGraph { inner: graph }));
        Ok(())
    })
}

/// Builds a graph from parallel source/target arrays.
///
/// # Safety
/// `sources` and `targets` must each hold `len` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn oim_graph_from_edges(
    node_count: usize,
    sources: *const usize,
    targets: *const usize,
    len: usize,
    out: *mut *mut OimGraph,
) -> OimStatus {
    guard(|| {
        let s = slice_arg(sources, len, "sources")?;
        let t = slice_arg(targets, len, "targets")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let graph = DirectedGraph::from_edges(node_count, s.iter().copied().zip(t.iter().copied()).collect())?;
        *out = Box::into_raw(Box::new(OimGraph { inner: graph }));
        Ok(())
    })
}

/// # Safety
/// `graph` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn oim_graph_free(graph: *mut OimGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` must be a valid handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn oim_graph_node_count(graph: *const OimGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.node_count())
}

/// # Safety
/// `graph` must be a valid handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn oim_graph_edge_count(graph: *const OimGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.edge_count())
}

/// Writes `1 / in_degree(target)` for every edge into `out`, which must
/// hold exactly `edge_count` values.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn oim_graph_weighted_cascade(graph: *const OimGraph, out: *mut f64, len: usize) -> OimStatus {
    guard(|| {
        let g = graph_arg(graph)?;
        if len != g.edge_count() {
            return Err(OimError::Dimension {
                expected: g.edge_count(),
                actual: len,
            }
            .into());
        }
        if len > 0 && out.is_null() {
            return Err(null("out"));
        }
        let model = assign_weighted_cascade(g);
        if len > 0 {
            slice::from_raw_parts_mut(out, len).copy_from_slice(model.probabilities());
        }
        Ok(())
    })
}

/// Exact expected spread by enumerating live-edge patterns (small graphs).
///
/// # Safety
/// Array arguments must hold the stated number of elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn oim_exact_spread(
    graph: *const OimGraph,
    probs: *const f64,
    probs_len: usize,
    seeds: *const usize,
    seeds_len: usize,
    out: *mut f64,
) -> OimStatus {
    guard(|| {
        let g = graph_arg(graph)?;
        let p = slice_arg(probs, probs_len, "probs")?;
        let s = slice_arg(seeds, seeds_len, "seeds")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = exact_spread(g, p, s)?;
        Ok(())
    })
}

/// Monte-Carlo spread estimate; identical for a given `seed` regardless of
/// the thread count.
///
/// # Safety
/// Array arguments must hold the stated number of elements; output pointers
/// must be valid (`out_std_error` may be null).
#[no_mangle]
pub unsafe extern "C" fn oim_monte_carlo_spread(
    graph: *const OimGraph,
    probs: *const f64,
    probs_len: usize,
    seeds: *const usize,
    seeds_len: usize,
    samples: usize,
    seed: u64,
    out_mean: *mut f64,
    out_std_error: *mut f64,
) -> OimStatus {
    guard(|| {
        let g = graph_arg(graph)?;
        let p = slice_arg(probs, probs_len, "probs")?;
        let s = slice_arg(seeds, seeds_len, "seeds")?;
        if out_mean.is_null() {
            return Err(null("out_mean"));
        }
        let est = monte_carlo_spread_seeded(g, p, s, samples, seed)?;
        *out_mean = est.mean;
        if !out_std_error.is_null() {
            *out_std_error = est.std_error;
        }
        Ok(())
    })
}

/// Creates an EXP3 learner over `n` strategies.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oim_exp3_new(n: usize, gamma: f64, seed: u64, out: *mut *mut OimExp3) -> OimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let state = exp3_init(n, gamma)?;
        *out = Box::into_raw(Box::new(OimExp3 {
            state,
            rng: stream(seed, 0),
        }));
        Ok(())
    })
}

/// # Safety
/// `exp3` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn oim_exp3_free(exp3: *mut OimExp3) {
    if !exp3.is_null() {
        drop(Box::from_raw(exp3));
    }
}

/// # Safety
/// `exp3` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn oim_exp3_sample(exp3: *mut OimExp3, out: *mut usize) -> OimStatus {
    guard(|| {
        let e = exp3.as_mut().ok_or_else(|| null("exp3"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = exp3_sample(&e.state, &mut e.rng);
        Ok(())
    })
}

/// Rewards `chosen` with `spread / node_count`.
///
/// # Safety
/// `exp3` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn oim_exp3_update(
    exp3: *mut OimExp3,
    spread: usize,
    node_count: usize,
    chosen: usize,
) -> OimStatus {
    guard(|| {
        let e = exp3.as_mut().ok_or_else(|| null("exp3"))?;
        exp3_update(&mut e.state, spread, node_count, chosen)?;
        Ok(())
    })
}

/// Copies the current selection distribution into `out` (`len` = strategy count).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn oim_exp3_probabilities(exp3: *const OimExp3, out: *mut f64, len: usize) -> OimStatus {
    guard(|| {
        let e = exp3.as_ref().ok_or_else(|| null("exp3"))?;
        let p = e.state.probabilities();
        if len != p.len() {
            return Err(OimError::Dimension {
                expected: p.len(),
                actual: len,
            }
            .into());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        slice::from_raw_parts_mut(out, len).copy_from_slice(p);
        Ok(())
    })
}

/// Runs an experiment from TOML configuration text and returns the
/// per-round CSV. Release the string with [`oim_string_free`].
///
/// # Safety
/// `config_toml` must be a valid NUL-terminated string; `out_csv` must be valid.
#[no_mangle]
pub unsafe extern "C" fn oim_run_experiment(config_toml: *const c_char, out_csv: *mut *mut c_char) -> OimStatus {
    guard(|| {
        let text = str_arg(config_toml, "config_toml")?;
        if out_csv.is_null() {
            return Err(null("out_csv"));
        }
        let cfg = ExperimentConfig::from_toml_str(text)?;
        let summary = run_experiment(&cfg)?;
        let mut bytes = Vec::new();
        write_csv(&summary, &mut bytes).map_err(|e| Failure(OimStatus::Io, e.to_string()))?;
        let c = CString::new(bytes).map_err(|e| Failure(OimStatus::InvalidUtf8, e.to_string()))?;
        *out_csv = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be a string returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn oim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
