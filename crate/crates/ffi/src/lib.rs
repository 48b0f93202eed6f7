//! C ABI over the maclens engine.
//!
//! Every function returns an [`MlStatus`]. On failure the message is kept in
//! thread-local storage and read with [`ml_last_error`]. Handles are opaque
//! and must be released with their matching `*_free` function. Strings
//! returned to the caller are released with [`ml_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use maclens::lens::{detect_mac, layer_logits, Trajectory};
use maclens::numkit::{mann_whitney_u, roc_auc, spearman_rho};
use maclens::pipeline::battery::named_battery;
use maclens::pipeline::{run_experiment, ExperimentConfig};
use maclens::substrate::{
    build_toy_vlm, generate_pair, InspectableModel, ModelConfig, Role, SamplePair, ScenarioSpec, ToyVlm,
};
use maclens::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Arguments were rejected (shape, range, non-finite or degenerate data).
    InvalidInput = 3,
    /// A configuration, model or scenario description was rejected.
    Config = 4,
    /// The computation failed after starting, for example on I/O.
    Runtime = 5,
    /// The caller's output buffer is too small.
    BufferTooSmall = 6,
    /// A panic was caught at the boundary.
    Panic = 7,
}

/// Toy model built for one scenario.
pub struct MlModel {
    model: ToyVlm,
    config: ModelConfig,
    scenario: ScenarioSpec,
}

/// Counterfactual and standard inputs of one sample.
pub struct MlPair {
    pair: SamplePair,
}

/// Crossover of one trajectory.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MlMac {
    /// 1-based crossover layer, or 0 when the visual logit never stays ahead.
    pub layer: usize,
    /// Visual minus prior logit at the final layer.
    pub final_gap: f64,
    /// 1 when the visual candidate wins at the final layer.
    pub visual_wins: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: MlStatus, msg: impl Into<String>) -> MlStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> MlStatus {
    let status = if e.is_config() {
        MlStatus::Config
    } else {
        match e {
            Error::Shape(_) | Error::InvalidInput(_) | Error::Degenerate(_) | Error::NonFinite(_) => {
                MlStatus::InvalidInput
            }
            _ => MlStatus::Runtime,
        }
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting panics and errors into status codes.
fn guard(f: impl FnOnce() -> Result<(), MlStatus>) -> MlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(MlStatus::Panic, msg)
        }
    }
}

fn lift<T>(r: maclens::Result<T>) -> Result<T, MlStatus> {
    r.map_err(from_error)
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, MlStatus> {
    if p.is_null() {
        return Err(fail(MlStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MlStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn read_opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, MlStatus> {
    if p.is_null() {
        Ok(None)
    } else {
        read_str(p, what).map(Some)
    }
}

unsafe fn read_slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], MlStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(MlStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), MlStatus> {
    if p.is_null() {
        return Err(fail(MlStatus::NullPointer, format!("{what} is null")));
    }
    p.write(value);
    Ok(())
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, MlStatus> {
    serde_json::from_str(text).map_err(|e| fail(MlStatus::Config, format!("{what}: {e}")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Message of the last failure on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn ml_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ml_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn make_model(config: ModelConfig, scenario: ScenarioSpec) -> Result<Box<MlModel>, MlStatus> {
    let model = lift(build_toy_vlm(&config, &scenario))?;
    Ok(Box::new(MlModel {
        model,
        config,
        scenario,
    }))
}

/// Builds a model from a JSON model configuration (null for the defaults)
/// and a JSON scenario.
///
/// # Safety
/// String arguments must be nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_model_new(
    model_json: *const c_char,
    scenario_json: *const c_char,
    out: *mut *mut MlModel,
) -> MlStatus {
    guard(|| {
        let config = match read_opt_str(model_json, "model_json")? {
            Some(t) => parse_json(t, "model config")?,
            None => ModelConfig::default(),
        };
        let scenario: ScenarioSpec = parse_json(read_str(scenario_json, "scenario_json")?, "scenario")?;
        let m = make_model(config, scenario)?;
        write_out(out, Box::into_raw(m), "out")
    })
}

/// Builds a model for scenario `name` of a named battery.
///
/// # Safety
/// String arguments must be nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_model_from_battery(
    model_json: *const c_char,
    battery: *const c_char,
    name: *const c_char,
    out: *mut *mut MlModel,
) -> MlStatus {
    guard(|| {
        let config = match read_opt_str(model_json, "model_json")? {
            Some(t) => parse_json(t, "model config")?,
            None => ModelConfig::default(),
        };
        let battery = read_str(battery, "battery")?;
        let name = read_str(name, "name")?;
        let scenario = lift(named_battery(battery, &config))?
            .into_iter()
            .find(|s| s.name == name)
            .ok_or_else(|| fail(MlStatus::Config, format!("no scenario `{name}` in battery `{battery}`")))?;
        let m = make_model(config, scenario)?;
        write_out(out, Box::into_raw(m), "out")
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ml_model_free(model: *mut MlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Layer count of a model.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_model_layers(model: *const MlModel, out: *mut usize) -> MlStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(MlStatus::NullPointer, "model is null"))?;
        write_out(out, m.model.layers(), "out")
    })
}

/// Generates the sample pair with the given seed.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_pair_new(model: *const MlModel, seed: u64, out: *mut *mut MlPair) -> MlStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(MlStatus::NullPointer, "model is null"))?;
        let pair = lift(generate_pair(&m.config, &m.scenario, seed))?;
        write_out(out, Box::into_raw(Box::new(MlPair { pair })), "out")
    })
}

/// Releases a pair. Null is ignored.
///
/// # Safety
/// `pair` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ml_pair_free(pair: *mut MlPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// Lens trajectory of the pair's counterfactual input: per-layer visual and
/// prior logits written to `logit_v` and `logit_p`, each of length `len`,
/// which must be at least the layer count.
///
/// # Safety
/// Handles must be live; both buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ml_trajectory(
    model: *const MlModel,
    pair: *const MlPair,
    logit_v: *mut f64,
    logit_p: *mut f64,
    len: usize,
) -> MlStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(MlStatus::NullPointer, "model is null"))?;
        let p = pair.as_ref().ok_or_else(|| fail(MlStatus::NullPointer, "pair is null"))?;
        let l = m.model.layers();
        if len < l {
            return Err(fail(MlStatus::BufferTooSmall, format!("need {l} entries, got {len}")));
        }
        if logit_v.is_null() || logit_p.is_null() {
            return Err(fail(MlStatus::NullPointer, "output buffer is null"));
        }
        let run = lift(m.model.forward(&p.pair.cf, &[]))?;
        let t = lift(layer_logits(&run.cube, &m.model, &m.scenario.variant_sets))?;
        slice::from_raw_parts_mut(logit_v, l).copy_from_slice(&t.logit_v);
        slice::from_raw_parts_mut(logit_p, l).copy_from_slice(&t.logit_p);
        Ok(())
    })
}

/// First stable crossover of a trajectory given as two arrays of length `len`.
///
/// # Safety
/// Both arrays must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_detect_mac(
    logit_v: *const f64,
    logit_p: *const f64,
    len: usize,
    out: *mut MlMac,
) -> MlStatus {
    guard(|| {
        let v = read_slice(logit_v, len, "logit_v")?;
        let p = read_slice(logit_p, len, "logit_p")?;
        let t = lift(Trajectory::from_logits(v.to_vec(), p.to_vec()))?;
        let r = detect_mac(&t);
        let mac = MlMac {
            layer: r.mac_layer.unwrap_or(0),
            final_gap: r.final_gap,
            visual_wins: (r.final_winner == Role::Visual) as i32,
        };
        write_out(out, mac, "out")
    })
}

/// Mann-Whitney U of `a` against `b` with its two-sided p-value.
///
/// # Safety
/// Arrays must hold the stated counts; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_mann_whitney(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out_u: *mut f64,
    out_p: *mut f64,
) -> MlStatus {
    guard(|| {
        let r = lift(mann_whitney_u(read_slice(a, na, "a")?, read_slice(b, nb, "b")?))?;
        write_out(out_u, r.u, "out_u")?;
        write_out(out_p, r.p, "out_p")
    })
}

/// Spearman rank correlation of two arrays of length `n`.
///
/// # Safety
/// Arrays must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_spearman(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> MlStatus {
    guard(|| {
        let rho = lift(spearman_rho(read_slice(x, n, "x")?, read_slice(y, n, "y")?))?;
        write_out(out, rho, "out")
    })
}

/// ROC AUC of `scores` against 0/1 `labels` (nonzero is positive).
///
/// # Safety
/// Arrays must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_roc_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> MlStatus {
    guard(|| {
        let s = read_slice(scores, n, "scores")?;
        let l: Vec<bool> = read_slice(labels, n, "labels")?.iter().map(|&x| x != 0).collect();
        write_out(out, lift(roc_auc(s, &l))?, "out")
    })
}

/// Runs an experiment from a JSON configuration and returns the report as
/// JSON in `out_report`, to be released with [`ml_string_free`].
///
/// # Safety
/// `config_json` must be nul-terminated; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_run_experiment(config_json: *const c_char, out_report: *mut *mut c_char) -> MlStatus {
    guard(|| {
        let text = read_str(config_json, "config_json")?;
        let cfg = lift(ExperimentConfig::from_json(text))?;
        let report = lift(run_experiment(&cfg))?;
        write_out(out_report, into_c_string(report.to_json()), "out_report")
    })
}
