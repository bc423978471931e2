//! C ABI for the trilab protocol laboratory.
//!
//! Conventions:
//! - every fallible call returns a [`TrilabStatus`]; on anything but
//!   `TRILAB_STATUS_OK` the thread-local error message is retrievable via
//!   [`trilab_last_error`];
//! - graphs are opaque handles created by `trilab_graph_*` constructors and
//!   released with [`trilab_graph_free`];
//! - structured inputs and outputs (configs, reports, proofs) travel as JSON
//!   strings; returned strings are owned by the caller and released with
//!   [`trilab_string_free`];
//! - hashes are raw 32-byte buffers.
//!
//! The generated header lives at `include/trilab.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use trilab::harness::{counterexample_config, evaluate_trilemma, ProtocolConfig};
use trilab::hash::Hash256;
use trilab::merkle::{merkle_prove, merkle_root, spv_verify, BlockHeader, MerkleProof};
use trilab::netgraph::{connectivity_report, generate_topology, NetworkGraph, TopologySpec};
use trilab::rng::derive_seed;
use trilab::scenario::{run_scenario, to_sorted_json, OutputFormat, ScenarioFile};

/// Result of every fallible call in this ABI.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum TrilabStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Configuration rejected (parse or validation failure).
    InvalidConfig = 3,
    /// The operation itself failed; see `trilab_last_error`.
    RuntimeError = 4,
    /// The library panicked; the call did nothing.
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let safe = CString::new(message.replace('\0', "?"))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(safe));
}

fn fail(status: TrilabStatus, message: impl Into<String>) -> TrilabStatus {
    set_error(message.into());
    status
}

fn guarded(body: impl FnOnce() -> TrilabStatus) -> TrilabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic without message".to_string());
            fail(TrilabStatus::Panic, format!("panic: {message}"))
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, TrilabStatus> {
    if ptr.is_null() {
        return Err(TrilabStatus::NullArgument);
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| TrilabStatus::InvalidUtf8)
}

fn write_string(out: *mut *mut c_char, text: String) -> TrilabStatus {
    if out.is_null() {
        return fail(TrilabStatus::NullArgument, "output pointer is null");
    }
    match CString::new(text) {
        Ok(cstring) => {
            unsafe { *out = cstring.into_raw() };
            TrilabStatus::Ok
        }
        Err(_) => fail(TrilabStatus::RuntimeError, "output contains NUL bytes"),
    }
}

/// Opaque peer-topology handle.
pub struct TrilabGraph {
    inner: NetworkGraph,
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn trilab_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// The last error message raised on this thread, or null if none. The caller
/// owns the returned string; release it with `trilab_string_free`.
#[no_mangle]
pub extern "C" fn trilab_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|message| message.clone().into_raw())
            .unwrap_or(ptr::null_mut())
    })
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `ptr` must be a pointer previously returned by this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn trilab_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        drop(unsafe { CString::from_raw(ptr) });
    }
}

/// Generate a topology from a JSON generator spec (the `topology` object of
/// scenario files) and a seed.
///
/// # Safety
/// `spec_json` must be a valid NUL-terminated string and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn trilab_graph_generate(
    spec_json: *const c_char,
    seed: u64,
    out: *mut *mut TrilabGraph,
) -> TrilabStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TrilabStatus::NullArgument, "output pointer is null");
        }
        let text = match unsafe { read_str(spec_json) } {
            Ok(text) => text,
            Err(status) => return fail(status, "spec_json unreadable"),
        };
        let spec: TopologySpec = match serde_json::from_str(text) {
            Ok(spec) => spec,
            Err(e) => return fail(TrilabStatus::InvalidConfig, format!("topology spec: {e}")),
        };
        match generate_topology(&spec, derive_seed(seed, "topology", 0)) {
            Ok(graph) => {
                unsafe { *out = Box::into_raw(Box::new(TrilabGraph { inner: graph })) };
                TrilabStatus::Ok
            }
            Err(e) => fail(TrilabStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Parse a graph from the edge-list interchange text format.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trilab_graph_from_text(
    text: *const c_char,
    out: *mut *mut TrilabGraph,
) -> TrilabStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TrilabStatus::NullArgument, "output pointer is null");
        }
        let text = match unsafe { read_str(text) } {
            Ok(text) => text,
            Err(status) => return fail(status, "graph text unreadable"),
        };
        match NetworkGraph::from_text(text) {
            Ok(graph) => {
                unsafe { *out = Box::into_raw(Box::new(TrilabGraph { inner: graph })) };
                TrilabStatus::Ok
            }
            Err(e) => fail(TrilabStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Node count of a graph handle; zero if the handle is null.
///
/// # Safety
/// `graph` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn trilab_graph_node_count(graph: *const TrilabGraph) -> u64 {
    if graph.is_null() {
        return 0;
    }
    unsafe { &*graph }.inner.node_count() as u64
}

/// Exact connectivity metrics of a graph as a JSON report.
///
/// # Safety
/// `graph` must be a live handle and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trilab_graph_metrics_json(
    graph: *const TrilabGraph,
    out_json: *mut *mut c_char,
) -> TrilabStatus {
    guarded(|| {
        if graph.is_null() {
            return fail(TrilabStatus::NullArgument, "graph handle is null");
        }
        match connectivity_report(&unsafe { &*graph }.inner) {
            Ok(report) => write_string(out_json, to_sorted_json(&report)),
            Err(e) => fail(TrilabStatus::RuntimeError, e.to_string()),
        }
    })
}

/// Release a graph handle. Null is a no-op.
///
/// # Safety
/// `graph` must be null or a live handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trilab_graph_free(graph: *mut TrilabGraph) {
    if !graph.is_null() {
        drop(unsafe { Box::from_raw(graph) });
    }
}

/// Merkle root over `leaf_count` 32-byte leaves stored contiguously.
///
/// # Safety
/// `leaves` must point to `leaf_count * 32` readable bytes and `out_root` to
/// 32 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn trilab_merkle_root(
    leaves: *const u8,
    leaf_count: usize,
    out_root: *mut u8,
) -> TrilabStatus {
    guarded(|| {
        if leaves.is_null() || out_root.is_null() {
            return fail(TrilabStatus::NullArgument, "leaves/out_root is null");
        }
        let bytes = unsafe { std::slice::from_raw_parts(leaves, leaf_count * 32) };
        let hashes: Vec<Hash256> = bytes
            .chunks_exact(32)
            .map(|chunk| Hash256(chunk.try_into().unwrap()))
            .collect();
        match merkle_root(&hashes) {
            Ok(root) => {
                unsafe { ptr::copy_nonoverlapping(root.as_bytes().as_ptr(), out_root, 32) };
                TrilabStatus::Ok
            }
            Err(e) => fail(TrilabStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Inclusion proof for the leaf at `index`, returned as JSON.
///
/// # Safety
/// `leaves` must point to `leaf_count * 32` readable bytes and `out_json`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trilab_merkle_prove_json(
    leaves: *const u8,
    leaf_count: usize,
    index: usize,
    out_json: *mut *mut c_char,
) -> TrilabStatus {
    guarded(|| {
        if leaves.is_null() {
            return fail(TrilabStatus::NullArgument, "leaves is null");
        }
        let bytes = unsafe { std::slice::from_raw_parts(leaves, leaf_count * 32) };
        let hashes: Vec<Hash256> = bytes
            .chunks_exact(32)
            .map(|chunk| Hash256(chunk.try_into().unwrap()))
            .collect();
        match merkle_prove(&hashes, index) {
            Ok(proof) => write_string(out_json, to_sorted_json(&proof)),
            Err(e) => fail(TrilabStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// SPV acceptance of a transaction id against a 120-byte canonical block
/// header and a JSON proof. `result` receives the verdict.
///
/// # Safety
/// `txid` must point to 32 readable bytes, `header_bytes` to `header_len`
/// readable bytes; `proof_json` must be a valid NUL-terminated string and
/// `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trilab_spv_verify(
    txid: *const u8,
    header_bytes: *const u8,
    header_len: usize,
    proof_json: *const c_char,
    result: *mut bool,
) -> TrilabStatus {
    guarded(|| {
        if txid.is_null() || header_bytes.is_null() || result.is_null() {
            return fail(TrilabStatus::NullArgument, "txid/header/result is null");
        }
        let txid = Hash256(
            unsafe { std::slice::from_raw_parts(txid, 32) }
                .try_into()
                .unwrap(),
        );
        let header_slice = unsafe { std::slice::from_raw_parts(header_bytes, header_len) };
        let header = match BlockHeader::from_bytes(header_slice) {
            Ok(header) => header,
            Err(e) => return fail(TrilabStatus::InvalidConfig, e.to_string()),
        };
        let text = match unsafe { read_str(proof_json) } {
            Ok(text) => text,
            Err(status) => return fail(status, "proof_json unreadable"),
        };
        let proof: MerkleProof = match serde_json::from_str(text) {
            Ok(proof) => proof,
            Err(e) => return fail(TrilabStatus::InvalidConfig, format!("proof: {e}")),
        };
        unsafe { *result = spv_verify(txid, &header, &proof) };
        TrilabStatus::Ok
    })
}

/// The reference counterexample configuration as JSON.
///
/// # Safety
/// `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trilab_counterexample_config_json(
    out_json: *mut *mut c_char,
) -> TrilabStatus {
    guarded(|| write_string(out_json, to_sorted_json(&counterexample_config())))
}

/// Evaluate the three trilemma predicates on a JSON protocol configuration;
/// the full report is returned as JSON.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string and `out_json` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trilab_evaluate_trilemma_json(
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> TrilabStatus {
    guarded(|| {
        let text = match unsafe { read_str(config_json) } {
            Ok(text) => text,
            Err(status) => return fail(status, "config_json unreadable"),
        };
        let config: ProtocolConfig = match serde_json::from_str(text) {
            Ok(config) => config,
            Err(e) => return fail(TrilabStatus::InvalidConfig, format!("config: {e}")),
        };
        if let Err(e) = config.validate() {
            return fail(TrilabStatus::InvalidConfig, e.to_string());
        }
        let report = evaluate_trilemma(&config);
        write_string(out_json, to_sorted_json(&report))
    })
}

/// Run a full scenario file (same schema as the CLI) and return the emitted
/// files as one JSON object `{ "files": {name: contents}, "summary": [..] }`.
///
/// # Safety
/// `scenario_json` must be a valid NUL-terminated string and `out_json` a
/// valid pointer. `seed_override` may be null.
#[no_mangle]
pub unsafe extern "C" fn trilab_run_scenario_json(
    scenario_json: *const c_char,
    seed_override: *const u64,
    out_json: *mut *mut c_char,
) -> TrilabStatus {
    guarded(|| {
        let text = match unsafe { read_str(scenario_json) } {
            Ok(text) => text,
            Err(status) => return fail(status, "scenario_json unreadable"),
        };
        let scenario = match ScenarioFile::parse(text) {
            Ok(scenario) => scenario,
            Err(e) => return fail(TrilabStatus::InvalidConfig, e.to_string()),
        };
        let seed = if seed_override.is_null() {
            None
        } else {
            Some(unsafe { *seed_override })
        };
        match run_scenario(&scenario, seed, OutputFormat::Json) {
            Ok(result) => {
                let files: serde_json::Map<String, serde_json::Value> = result
                    .files
                    .into_iter()
                    .map(|f| (f.name, serde_json::Value::String(f.contents)))
                    .collect();
                let value = serde_json::json!({
                    "files": files,
                    "summary": result.summary_lines,
                });
                write_string(out_json, to_sorted_json(&value))
            }
            Err(e) => fail(TrilabStatus::RuntimeError, e.to_string()),
        }
    })
}
