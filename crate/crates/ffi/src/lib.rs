//! C ABI for saddlekit.
//!
//! Objects are opaque handles created by `sk_*_new`/`sk_*_solve` functions and
//! released with the matching `sk_*_free`. Every fallible call returns an
//! [`SkStatus`]; on failure a message is available from
//! [`sk_last_error_message`] on the calling thread until the next failing call.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use saddlekit::cli::{self, Command};
use saddlekit::config::RunConfig;
use saddlekit::kernels::{self, Kernel1D, RadialKernel};
use saddlekit::layer1d::{self, LayerProfile, Nonlinearity};
use saddlekit::saddle::{self, SaddleSolution};
use saddlekit::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

/// Status codes; the numeric values follow the command line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkStatus {
    Ok = 0,
    /// A checked property does not hold.
    PropertyFailure = 1,
    /// Bad argument or configuration.
    InvalidArgument = 2,
    /// Numerical failure (non-convergence, singular system, ...).
    Numerical = 3,
    NullPointer = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
    /// The caller's buffer is too small; the required length was written.
    BufferTooSmall = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(status: SkStatus, msg: impl Into<String>) -> SkStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> SkStatus {
    let status = match e.exit_code() {
        2 => SkStatus::InvalidArgument,
        _ => SkStatus::Numerical,
    };
    fail(status, e.to_string())
}

/// Runs `f` with panics converted into [`SkStatus::Panic`].
fn guard<F: FnOnce() -> SkStatus>(f: F) -> SkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(SkStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, SkStatus> {
    if p.is_null() {
        return Err(fail(SkStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SkStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

macro_rules! out_ptr {
    ($p:expr) => {
        if $p.is_null() {
            return fail(SkStatus::NullPointer, concat!(stringify!($p), " is null"));
        }
    };
}

macro_rules! handle {
    ($p:expr) => {{
        if $p.is_null() {
            return fail(SkStatus::NullPointer, concat!(stringify!($p), " is null"));
        }
        unsafe { &*$p }
    }};
}

macro_rules! try_sk {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

/// Run configuration.
pub struct SkConfig {
    inner: RunConfig,
}

/// Radial kernel together with its one-dimensional reduction (computed lazily).
pub struct SkKernel {
    kernel: RadialKernel,
    reduced: Option<Kernel1D>,
}

/// One-dimensional layer solution.
pub struct SkLayer {
    profile: LayerProfile,
}

/// Saddle-shaped solution on the lattice.
pub struct SkSaddle {
    solution: SaddleSolution,
    nodes: usize,
}

/// Report of a subcommand run.
pub struct SkReport {
    passed: bool,
    text: CString,
    report: cli::Report,
}

/// Result of the ellipticity scan.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SkEllipticity {
    pub holds: bool,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Result of the √τ-convexity scan.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SkConvexity {
    pub strictly_convex: bool,
    pub worst: f64,
    pub tau_at_worst: f64,
}

/// One row of the asymptotic table.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SkAsymptoticRow {
    pub radius: f64,
    pub value: f64,
    pub gradient: f64,
    pub hessian: f64,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failing call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sk_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Preset configuration.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_config_default(out: *mut *mut SkConfig) -> SkStatus {
    out_ptr!(out);
    guard(|| {
        unsafe { *out = Box::into_raw(Box::new(SkConfig { inner: RunConfig::default() })) };
        SkStatus::Ok
    })
}

/// Parses configuration text; relative paths resolve against `base_dir` (may be NULL).
///
/// # Safety
/// `text` and `base_dir` must be NUL-terminated strings or NULL; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_config_parse(text: *const c_char, base_dir: *const c_char, out: *mut *mut SkConfig) -> SkStatus {
    out_ptr!(out);
    guard(|| {
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let base = if base_dir.is_null() {
            "."
        } else {
            match str_arg(base_dir, "base_dir") {
                Ok(b) => b,
                Err(s) => return s,
            }
        };
        let cfg = try_sk!(RunConfig::parse(text, Path::new(base)));
        *out = Box::into_raw(Box::new(SkConfig { inner: cfg }));
        SkStatus::Ok
    })
}

/// Reads and parses a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_config_load(path: *const c_char, out: *mut *mut SkConfig) -> SkStatus {
    out_ptr!(out);
    guard(|| {
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let cfg = try_sk!(RunConfig::from_file(Path::new(path)));
        *out = Box::into_raw(Box::new(SkConfig { inner: cfg }));
        SkStatus::Ok
    })
}

/// Overrides the seed of the randomized ensembles.
///
/// # Safety
/// `cfg` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sk_config_set_seed(cfg: *mut SkConfig, seed: u64) -> SkStatus {
    if cfg.is_null() {
        return fail(SkStatus::NullPointer, "cfg is null");
    }
    (*cfg).inner.seed = seed;
    SkStatus::Ok
}

/// Hex SHA-256 of the resolved configuration, copied into `buf` (with NUL).
///
/// # Safety
/// `cfg` must be a live handle; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sk_config_hash(cfg: *const SkConfig, buf: *mut c_char, len: usize) -> SkStatus {
    let cfg = handle!(cfg);
    copy_str(&cfg.inner.hash(), buf, len, None)
}

/// # Safety
/// `cfg` must be NULL or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn sk_config_free(cfg: *mut SkConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn copy_str(s: &str, buf: *mut c_char, len: usize, needed: Option<*mut usize>) -> SkStatus {
    let bytes = s.as_bytes();
    if let Some(n) = needed {
        if !n.is_null() {
            *n = bytes.len() + 1;
        }
    }
    if buf.is_null() {
        return if needed.is_some() { SkStatus::Ok } else { fail(SkStatus::NullPointer, "buf is null") };
    }
    if len < bytes.len() + 1 {
        return fail(SkStatus::BufferTooSmall, format!("buffer of {len} bytes, need {}", bytes.len() + 1));
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, bytes.len());
    *buf.add(bytes.len()) = 0;
    SkStatus::Ok
}

/// Fractional Laplacian kernel c_{n,γ} r^{-n-2γ}.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_kernel_fractional(n: usize, gamma: f64, out: *mut *mut SkKernel) -> SkStatus {
    out_ptr!(out);
    guard(|| {
        let k = try_sk!(RadialKernel::fractional(n, gamma));
        unsafe { *out = Box::into_raw(Box::new(SkKernel { kernel: k, reduced: None })) };
        SkStatus::Ok
    })
}

/// Kernel described by a configuration.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_kernel_from_config(cfg: *const SkConfig, out: *mut *mut SkKernel) -> SkStatus {
    let cfg = handle!(cfg);
    out_ptr!(out);
    guard(|| {
        let k = try_sk!(cfg.inner.build_kernel());
        *out = Box::into_raw(Box::new(SkKernel { kernel: k, reduced: None }));
        SkStatus::Ok
    })
}

/// k(r).
///
/// # Safety
/// `k` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_kernel_eval(k: *const SkKernel, r: f64, out: *mut f64) -> SkStatus {
    let k = handle!(k);
    out_ptr!(out);
    if !(r > 0.0) {
        return fail(SkStatus::InvalidArgument, format!("r = {r} must be positive"));
    }
    *out = k.kernel.eval(r);
    SkStatus::Ok
}

/// Ellipticity scan on `samples` radii; `PropertyFailure` when the bounds fail.
///
/// # Safety
/// `k` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_kernel_check_ellipticity(k: *const SkKernel, samples: usize, out: *mut SkEllipticity) -> SkStatus {
    let k = handle!(k);
    out_ptr!(out);
    guard(|| {
        let r = try_sk!(kernels::check_ellipticity(&k.kernel, samples));
        *out = SkEllipticity { holds: r.holds, min_ratio: r.min_ratio, max_ratio: r.max_ratio };
        if r.holds {
            SkStatus::Ok
        } else {
            fail(SkStatus::PropertyFailure, format!("ellipticity ratios [{}, {}]", r.min_ratio, r.max_ratio))
        }
    })
}

/// √τ-convexity scan; `PropertyFailure` when not strictly convex.
///
/// # Safety
/// `k` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_kernel_check_sqrt_convexity(k: *const SkKernel, grid: usize, out: *mut SkConvexity) -> SkStatus {
    let k = handle!(k);
    out_ptr!(out);
    guard(|| {
        let r = kernels::sqrt_convexity_scan(&k.kernel, grid);
        *out = SkConvexity { strictly_convex: r.strictly_convex, worst: r.worst, tau_at_worst: r.tau_at_worst };
        if r.strictly_convex {
            SkStatus::Ok
        } else {
            fail(SkStatus::PropertyFailure, format!("second difference {} at τ = {}", r.worst, r.tau_at_worst))
        }
    })
}

/// One-dimensional reduction k₁(τ).
///
/// # Safety
/// `k` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_kernel_reduce_1d(k: *mut SkKernel, tau: f64, out: *mut f64) -> SkStatus {
    if k.is_null() {
        return fail(SkStatus::NullPointer, "k is null");
    }
    out_ptr!(out);
    if !(tau > 0.0) {
        return fail(SkStatus::InvalidArgument, format!("τ = {tau} must be positive"));
    }
    let k = &mut *k;
    guard(|| {
        if k.reduced.is_none() {
            k.reduced = Some(try_sk!(kernels::reduce_to_1d(&k.kernel)));
        }
        *out = k.reduced.as_ref().unwrap().eval(tau);
        SkStatus::Ok
    })
}

/// # Safety
/// `k` must be NULL or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn sk_kernel_free(k: *mut SkKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// Layer solution of the reduced kernel on [-L, L] with spacing h.
/// `nonlinearity` is `allen-cahn` or `peierls`.
///
/// # Safety
/// `k` must be a live handle; `nonlinearity` a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sk_layer_solve(
    k: *const SkKernel,
    nonlinearity: *const c_char,
    half_length: f64,
    h: f64,
    out: *mut *mut SkLayer,
) -> SkStatus {
    let k = handle!(k);
    out_ptr!(out);
    guard(|| {
        let name = match str_arg(nonlinearity, "nonlinearity") {
            Ok(n) => n,
            Err(s) => return s,
        };
        let f = try_sk!(Nonlinearity::by_name(name));
        let k1 = match &k.reduced {
            Some(k1) => k1.clone(),
            None => try_sk!(kernels::reduce_to_1d(&k.kernel)),
        };
        let p = try_sk!(layer1d::solve_layer(&k1, &f, half_length, h));
        *out = Box::into_raw(Box::new(SkLayer { profile: p }));
        SkStatus::Ok
    })
}

/// u₀(x), extended by the fitted tail outside [-L, L].
///
/// # Safety
/// `layer` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_layer_eval(layer: *const SkLayer, x: f64, out: *mut f64) -> SkStatus {
    let l = handle!(layer);
    out_ptr!(out);
    *out = l.profile.eval(x);
    SkStatus::Ok
}

/// Final residual ‖L u₀ - f(u₀)‖_∞.
///
/// # Safety
/// `layer` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_layer_residual(layer: *const SkLayer, out: *mut f64) -> SkStatus {
    let l = handle!(layer);
    out_ptr!(out);
    *out = l.profile.residual;
    SkStatus::Ok
}

/// # Safety
/// `layer` must be NULL or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn sk_layer_free(layer: *mut SkLayer) {
    if !layer.is_null() {
        drop(Box::from_raw(layer));
    }
}

/// Saddle-shaped solution for the configuration (grid, radii, kernel, f).
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_saddle_solve(cfg: *const SkConfig, out: *mut *mut SkSaddle) -> SkStatus {
    let cfg = handle!(cfg);
    out_ptr!(out);
    guard(|| {
        let cfg = &cfg.inner;
        let f = try_sk!(cfg.nonlinearity.build());
        let k = try_sk!(cfg.build_kernel());
        let op = try_sk!(cli::build_operator(cfg, &k));
        let (sol, _) = try_sk!(cli::solve_saddle(cfg, &op, &f));
        let g = op.grid();
        let nodes = g.ball_len(sol.radius).min(g.solver_len());
        *out = Box::into_raw(Box::new(SkSaddle { solution: sol, nodes }));
        SkStatus::Ok
    })
}

/// Number of unknown nodes (lattice points of B_R ∩ O).
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sk_saddle_len(s: *const SkSaddle) -> usize {
    if s.is_null() {
        set_error("s is null");
        return 0;
    }
    (*s).nodes
}

/// Copies (|x'|, |x''|, u) of the first `len` unknowns into the three arrays.
///
/// # Safety
/// `s` must be a live handle; each array must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sk_saddle_values(s: *const SkSaddle, sv: *mut f64, tv: *mut f64, uv: *mut f64, len: usize) -> SkStatus {
    let s = handle!(s);
    out_ptr!(sv);
    out_ptr!(tv);
    out_ptr!(uv);
    if len > s.nodes {
        return fail(SkStatus::InvalidArgument, format!("len = {len} exceeds {} nodes", s.nodes));
    }
    let u = &s.solution.u;
    for i in 0..len {
        let p = u.grid.point(i);
        *sv.add(i) = p.s;
        *tv.add(i) = p.t;
        *uv.add(i) = u.values[i];
    }
    SkStatus::Ok
}

/// Interior residual of the final iterate.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_saddle_residual(s: *const SkSaddle, out: *mut f64) -> SkStatus {
    let s = handle!(s);
    out_ptr!(out);
    *out = s.solution.log.last().map_or(f64::NAN, |l| l.residual);
    SkStatus::Ok
}

/// Asymptotic table at `count` radii; `PropertyFailure` when a column does not
/// strictly decrease.
///
/// # Safety
/// `s` must be a live handle; `radii` and `rows` must hold `count` entries.
#[no_mangle]
pub unsafe extern "C" fn sk_saddle_asymptotic(
    s: *const SkSaddle,
    radii: *const f64,
    count: usize,
    rows: *mut SkAsymptoticRow,
) -> SkStatus {
    let s = handle!(s);
    out_ptr!(radii);
    out_ptr!(rows);
    guard(|| {
        let radii = std::slice::from_raw_parts(radii, count);
        let sol = &s.solution;
        let collar = saddle::default_collar(sol.radius, sol.u.grid.h());
        let t = try_sk!(saddle::asymptotic_error(sol, &sol.data, radii, collar));
        for (i, r) in t.rows.iter().enumerate() {
            *rows.add(i) = SkAsymptoticRow { radius: r.radius, value: r.value, gradient: r.gradient, hessian: r.hessian };
        }
        if t.pass() {
            SkStatus::Ok
        } else {
            fail(SkStatus::PropertyFailure, format!("columns not strictly decreasing: {:?}", t.decreasing))
        }
    })
}

/// # Safety
/// `s` must be NULL or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn sk_saddle_free(s: *mut SkSaddle) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Runs a subcommand (`kernel-check`, `layer`, `eigen`, `saddle`, `evolve`,
/// `verify`, `torsion`) writing its files into `out_dir`. `only` is a
/// comma-separated list or NULL. Returns `PropertyFailure` when a check fails;
/// the report is produced in both cases.
///
/// # Safety
/// `cfg` must be a live handle; strings NUL-terminated (`only` may be NULL); `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sk_run(
    cfg: *const SkConfig,
    command: *const c_char,
    out_dir: *const c_char,
    only: *const c_char,
    out: *mut *mut SkReport,
) -> SkStatus {
    let cfg = handle!(cfg);
    out_ptr!(out);
    guard(|| {
        let name = match str_arg(command, "command") {
            Ok(n) => n,
            Err(s) => return s,
        };
        let dir = match str_arg(out_dir, "out_dir") {
            Ok(n) => n,
            Err(s) => return s,
        };
        let only: Vec<String> = if only.is_null() {
            Vec::new()
        } else {
            match str_arg(only, "only") {
                Ok(o) => o.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
                Err(s) => return s,
            }
        };
        let cmd = match [
            Command::KernelCheck,
            Command::Layer,
            Command::Eigen,
            Command::Saddle,
            Command::Evolve,
            Command::Verify,
            Command::Torsion,
        ]
        .into_iter()
        .find(|c| c.name() == name)
        {
            Some(c) => c,
            None => return fail(SkStatus::InvalidArgument, format!("unknown command `{name}`")),
        };
        let rep = try_sk!(cli::execute(cmd, &cfg.inner, Path::new(dir), &only));
        let text = CString::new(rep.render(&cfg.inner).replace('\0', " ")).unwrap_or_default();
        let passed = rep.passed();
        let numerical = rep.numerical_failure.clone();
        *out = Box::into_raw(Box::new(SkReport { passed, text, report: rep }));
        match numerical {
            Some(e) => fail(SkStatus::Numerical, e),
            None if passed => SkStatus::Ok,
            None => fail(SkStatus::PropertyFailure, "at least one check failed"),
        }
    })
}

/// Whether every check of the report passed.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sk_report_passed(r: *const SkReport) -> bool {
    !r.is_null() && (*r).passed
}

/// Number of checks in the report.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sk_report_check_count(r: *const SkReport) -> usize {
    if r.is_null() {
        return 0;
    }
    (*r).report.checks.len()
}

/// Full text of the report; valid for the lifetime of the handle.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sk_report_text(r: *const SkReport) -> *const c_char {
    if r.is_null() {
        set_error("r is null");
        return ptr::null();
    }
    (*r).text.as_ptr()
}

/// # Safety
/// `r` must be NULL or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn sk_report_free(r: *mut SkReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
