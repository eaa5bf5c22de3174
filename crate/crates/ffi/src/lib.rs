//! C ABI over `blowup-core`.
//!
//! Every function returns an [`SblStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`sbl_last_error`]. Handles are opaque and released with their `_free`.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use blowup_core::energy::{blowup_criterion, Functionals, FunctionalReport};
use blowup_core::hermite::{build_quadrature, eval_big_h, eval_h, MultiIndex, Quadrature};
use blowup_core::ode::{alpha_dichotomy, eval_phi_series, solve_blowup_ode, AlphaBranch, BlowupOdeOptions};
use blowup_core::pde::{Field, Frame, Grid};
use blowup_core::profiles::ProfileSpec;
use blowup_core::{Error, Perturbation, ProblemParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SblStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Numerical = 4,
    Inconclusive = 5,
    Unsupported = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SblPerturbation {
    Zero = 0,
    LogDamped = 1,
    PowerSub = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SblAlphaBranch {
    MinusOneOverS = 0,
    SmallOrder = 1,
    Ambiguous = 2,
    Blowup = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SblProfileKind {
    QuadraticF = 0,
    HigherPsi = 1,
}

/// Values of the weighted functionals at one state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SblFunctionals {
    pub e0: f64,
    pub i: f64,
    pub e: f64,
    pub j: f64,
    pub l2: f64,
    pub lp1: f64,
    pub h1: f64,
}

/// Opaque parameter set.
pub struct SblParams(ProblemParams);

/// Opaque Gauss–Hermite rule.
pub struct SblQuadrature(Quadrature);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> SblStatus {
    match e {
        Error::InvalidParam { .. }
        | Error::DimensionMismatch { .. }
        | Error::QuadratureOrder { .. }
        | Error::DegreeTooHigh { .. }
        | Error::Config { .. } => SblStatus::InvalidArgument,
        Error::Domain(_) => SblStatus::Domain,
        Error::SeriesDivergent { .. }
        | Error::BlowupBranch { .. }
        | Error::BlowupReached { .. }
        | Error::NonFinite { .. }
        | Error::Integration(_)
        | Error::Io(_) => SblStatus::Numerical,
        Error::Inconclusive(_) => SblStatus::Inconclusive,
        Error::Unsupported(_) => SblStatus::Unsupported,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (SblStatus, String)>) -> SblStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SblStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            SblStatus::Panic
        }
    }
}

fn core<T>(r: blowup_core::Result<T>) -> Result<T, (SblStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SblStatus, String) {
    (SblStatus::NullPointer, format!("null pointer: {what}"))
}

fn bad(msg: impl Into<String>) -> (SblStatus, String) {
    (SblStatus::InvalidArgument, msg.into())
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SblStatus, String)> {
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn params<'a>(p: *const SblParams) -> Result<&'a ProblemParams, (SblStatus, String)> {
    unsafe { p.as_ref() }.map(|h| &h.0).ok_or_else(|| null("params"))
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (SblStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sbl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Creates a parameter set; `q` is read only for `PowerSub`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sbl_params_new(
    n: usize,
    p: f64,
    a: f64,
    m: f64,
    mu: f64,
    kind: SblPerturbation,
    q: f64,
    out_handle: *mut *mut SblParams,
) -> SblStatus {
    guard(|| {
        let slot = unsafe { out(out_handle, "out")? };
        let pert = match kind {
            SblPerturbation::Zero => Perturbation::Zero,
            SblPerturbation::LogDamped => Perturbation::LogDamped,
            SblPerturbation::PowerSub => Perturbation::PowerSub { q },
        };
        let prm = core(ProblemParams::derive(n, p, a, m, mu, pert))?;
        *slot = Box::into_raw(Box::new(SblParams(prm)));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`sbl_params_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sbl_params_free(handle: *mut SblParams) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_params_set_theta(handle: *mut SblParams, theta: f64) -> SblStatus {
    guard(|| {
        let h = unsafe { handle.as_mut() }.ok_or_else(|| null("params"))?;
        h.0 = core(h.0.clone().with_theta(theta))?;
        Ok(())
    })
}

macro_rules! getter {
    ($name:ident, $field:ident) => {
        /// # Safety
        /// Pointers must be valid.
        #[no_mangle]
        pub unsafe extern "C" fn $name(handle: *const SblParams, value: *mut f64) -> SblStatus {
            guard(|| {
                let prm = unsafe { params(handle)? };
                *unsafe { out(value, "value")? } = prm.$field;
                Ok(())
            })
        }
    };
}

getter!(sbl_params_kappa, kappa);
getter!(sbl_params_gamma, gamma);
getter!(sbl_params_theta, theta);
getter!(sbl_params_c0, c0);
getter!(sbl_params_s0, s0);

/// 1-D Hermite polynomial h_m(y) (h_2 = y² − 2).
///
/// # Safety
/// `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_hermite_eval(m: usize, y: f64, value: *mut f64) -> SblStatus {
    guard(|| {
        *unsafe { out(value, "value")? } = eval_h(m, y);
        Ok(())
    })
}

/// Tensor Hermite polynomial H_α(y) for α, y of length `n`.
///
/// # Safety
/// `alpha` and `y` must point to `n` elements.
#[no_mangle]
pub unsafe extern "C" fn sbl_hermite_eval_multi(alpha: *const usize, y: *const f64, n: usize, value: *mut f64) -> SblStatus {
    guard(|| {
        let a = unsafe { input(alpha, n, "alpha")? };
        let y = unsafe { input(y, n, "y")? };
        *unsafe { out(value, "value")? } = core(eval_big_h(&MultiIndex::new(a.to_vec()), y))?;
        Ok(())
    })
}

/// Tensor Gauss–Hermite rule for ρ in dimension `n` with `order` nodes per axis.
///
/// # Safety
/// `out_handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_quadrature_new(n: usize, order: usize, out_handle: *mut *mut SblQuadrature) -> SblStatus {
    guard(|| {
        let slot = unsafe { out(out_handle, "out")? };
        let q = core(build_quadrature(n, order))?;
        *slot = Box::into_raw(Box::new(SblQuadrature(q)));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`sbl_quadrature_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sbl_quadrature_free(handle: *mut SblQuadrature) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Number of nodes.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_quadrature_len(handle: *const SblQuadrature, len: *mut usize) -> SblStatus {
    guard(|| {
        let q = unsafe { handle.as_ref() }.ok_or_else(|| null("quadrature"))?;
        *unsafe { out(len, "len")? } = q.0.len();
        Ok(())
    })
}

/// Copies nodes (row-major, len·n values) and weights (len values).
///
/// # Safety
/// `nodes` must hold `nodes_len` and `weights` `weights_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sbl_quadrature_copy(
    handle: *const SblQuadrature,
    nodes: *mut f64,
    nodes_len: usize,
    weights: *mut f64,
    weights_len: usize,
) -> SblStatus {
    guard(|| {
        let q = &unsafe { handle.as_ref() }.ok_or_else(|| null("quadrature"))?.0;
        let total = q.len() * q.n;
        if nodes_len != total || weights_len != q.len() {
            return Err(bad(format!("need {total} node and {} weight slots", q.len())));
        }
        if nodes.is_null() || weights.is_null() {
            return Err(null("buffers"));
        }
        let nb = unsafe { slice::from_raw_parts_mut(nodes, nodes_len) };
        let wb = unsafe { slice::from_raw_parts_mut(weights, weights_len) };
        for i in 0..q.len() {
            nb[i * q.n..(i + 1) * q.n].copy_from_slice(q.node(i));
        }
        wb.copy_from_slice(&q.weights);
        Ok(())
    })
}

/// Blow-up time and rate constant (T−t)^{1/(p−1)}v of v′ = v^p + h(v), v(0) = v0.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_blowup_ode(handle: *const SblParams, v0: f64, blowup_time: *mut f64, rate: *mut f64) -> SblStatus {
    guard(|| {
        let prm = unsafe { params(handle)? };
        let t = unsafe { out(blowup_time, "blowup_time")? };
        let r = unsafe { out(rate, "rate")? };
        let sol = core(solve_blowup_ode(prm, v0, 0.0, BlowupOdeOptions::default()))?;
        *t = sol.blowup_time.ok_or_else(|| (SblStatus::Inconclusive, "no blow-up within the horizon".into()))?;
        *r = sol.rate_constant.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Truncated asymptotic series of φ(s) with `k` terms.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_phi_series(handle: *const SblParams, s: f64, k: usize, value: *mut f64) -> SblStatus {
    guard(|| {
        let prm = unsafe { params(handle)? };
        *unsafe { out(value, "value")? } = core(eval_phi_series(prm, s, k))?;
        Ok(())
    })
}

/// Integrates α′ = α² + c s^{−q} from α(s_begin) = alpha0 to s_end.
/// A blow-up run reports `Blowup` with status Ok.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_alpha_dichotomy(
    q: f64,
    c: f64,
    alpha0: f64,
    s_begin: f64,
    s_end: f64,
    branch: *mut SblAlphaBranch,
    s_alpha_end: *mut f64,
    residual: *mut f64,
) -> SblStatus {
    guard(|| {
        let b = unsafe { out(branch, "branch")? };
        let sa = unsafe { out(s_alpha_end, "s_alpha_end")? };
        let res = unsafe { out(residual, "residual")? };
        match alpha_dichotomy(q, c, alpha0, s_begin, s_end) {
            Ok(r) => {
                *b = match r.branch {
                    AlphaBranch::MinusOneOverS => SblAlphaBranch::MinusOneOverS,
                    AlphaBranch::SmallOrder => SblAlphaBranch::SmallOrder,
                    AlphaBranch::Ambiguous => SblAlphaBranch::Ambiguous,
                };
                *sa = r.s_alpha_end;
                *res = r.residual;
            }
            Err(Error::BlowupBranch { .. }) => {
                *b = SblAlphaBranch::Blowup;
                *sa = f64::NAN;
                *res = f64::NAN;
            }
            Err(e) => return Err((status_of(&e), e.to_string())),
        }
        Ok(())
    })
}

/// Evaluates f_l (kind QuadraticF, `order` = l) or ψ_m (kind HigherPsi,
/// `order` = m, with `count` coefficients: `alphas` holds count·n exponents
/// row-major and `coeffs` the c_α) at ξ of length n.
///
/// # Safety
/// Buffers must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn sbl_profile_eval(
    handle: *const SblParams,
    kind: SblProfileKind,
    order: usize,
    alphas: *const usize,
    coeffs: *const f64,
    count: usize,
    xi: *const f64,
    value: *mut f64,
) -> SblStatus {
    guard(|| {
        let prm = unsafe { params(handle)? };
        let n = prm.n;
        let x = unsafe { input(xi, n, "xi")? };
        let spec = match kind {
            SblProfileKind::QuadraticF => core(ProfileSpec::quadratic(prm, order))?,
            SblProfileKind::HigherPsi => {
                let a = unsafe { input(alphas, count * n, "alphas")? };
                let c = unsafe { input(coeffs, count, "coeffs")? };
                let list = (0..count).map(|k| (MultiIndex::new(a[k * n..(k + 1) * n].to_vec()), c[k])).collect();
                core(ProfileSpec::higher_psi(prm, order, list))?
            }
        };
        *unsafe { out(value, "value")? } = core(spec.eval(x))?;
        Ok(())
    })
}

fn field_from(prm: &ProblemParams, half_width: f64, dy: f64, s: f64, values: &[f64]) -> Result<Field, (SblStatus, String)> {
    let grid = core(Grid::new(prm.n, half_width, dy))?;
    if values.len() != grid.len() {
        return Err(bad(format!("grid has {} nodes, got {} values", grid.len(), values.len())));
    }
    core(Field::new(grid, values.to_vec(), s, Frame::Similarity))
}

/// Weighted functionals of w sampled on the uniform grid [−L, L]^n with
/// spacing dy (row-major in 2-D) at time s.
///
/// # Safety
/// `values` must hold `len` doubles; `report` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_functionals(
    handle: *const SblParams,
    half_width: f64,
    dy: f64,
    s: f64,
    values: *const f64,
    len: usize,
    report: *mut SblFunctionals,
) -> SblStatus {
    guard(|| {
        let prm = unsafe { params(handle)? };
        let v = unsafe { input(values, len, "values")? };
        let field = field_from(prm, half_width, dy, s, v)?;
        let r: FunctionalReport = Functionals::new(&field.grid).report(&field, prm, None);
        *unsafe { out(report, "report")? } = SblFunctionals {
            e0: r.e0,
            i: r.i,
            e: r.e,
            j: r.j,
            l2: r.l2,
            lp1: r.lp1,
            h1: r.h1,
        };
        Ok(())
    })
}

/// Blow-up criterion margin; `triggered` is set to 1 when the margin is positive.
///
/// # Safety
/// `values` must hold `len` doubles; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_criterion(
    handle: *const SblParams,
    half_width: f64,
    dy: f64,
    s: f64,
    values: *const f64,
    len: usize,
    margin: *mut f64,
    triggered: *mut i32,
) -> SblStatus {
    guard(|| {
        let prm = unsafe { params(handle)? };
        let v = unsafe { input(values, len, "values")? };
        let field = field_from(prm, half_width, dy, s, v)?;
        let m = unsafe { out(margin, "margin")? };
        let t = unsafe { out(triggered, "triggered")? };
        let c = blowup_criterion(&field, prm);
        *m = c.margin;
        *t = c.triggered as i32;
        Ok(())
    })
}
