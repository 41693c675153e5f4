//! C ABI over `tradeq`.
//!
//! Instances and results are opaque heap handles owned by the caller and
//! released with their `_free` function. Every fallible call returns a
//! [`TqStatus`]; on failure a message is available from
//! [`tq_last_error_message`] on the same thread. Array outputs are copied
//! into caller buffers whose length is passed explicitly.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tradeq::analytics::country_supply_shares;
use tradeq::equilibrium::{
    default_guard, excess_demand, solve_relative_prices, EquilibriumError, EquilibriumResult,
    SolverConfig,
};
use tradeq::ingest::{load_fixture, Fixture};
use tradeq::model::{DemandMatrix, PriceVector, SupplyMatrix};
use tradeq::report::to_json_string;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    UndefinedDemand = 4,
    ZeroSupply = 5,
    NoProgress = 6,
    UnknownFixture = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TqSolverConfig {
    pub damping: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub zero_price_threshold: f64,
    pub expenditure_guard: f64,
    pub polish_interval: usize,
    pub stall_window: usize,
}

impl From<SolverConfig> for TqSolverConfig {
    fn from(c: SolverConfig) -> Self {
        Self {
            damping: c.damping,
            max_iterations: c.max_iterations,
            tolerance: c.tolerance,
            zero_price_threshold: c.zero_price_threshold,
            expenditure_guard: c.expenditure_guard,
            polish_interval: c.polish_interval,
            stall_window: c.stall_window,
        }
    }
}

impl From<TqSolverConfig> for SolverConfig {
    fn from(c: TqSolverConfig) -> Self {
        Self {
            damping: c.damping,
            max_iterations: c.max_iterations,
            tolerance: c.tolerance,
            zero_price_threshold: c.zero_price_threshold,
            expenditure_guard: c.expenditure_guard,
            polish_interval: c.polish_interval,
            stall_window: c.stall_window,
        }
    }
}

/// Demand and supply matrices of one exchange.
pub struct TqInstance {
    demand: DemandMatrix,
    supply: SupplyMatrix,
}

pub struct TqResult {
    inner: EquilibriumResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: TqStatus, msg: impl Into<String>) -> TqStatus {
    set_error(msg);
    status
}

fn status_of(e: &EquilibriumError) -> TqStatus {
    match e {
        EquilibriumError::UndefinedDemand { .. } => TqStatus::UndefinedDemand,
        EquilibriumError::ZeroSupply => TqStatus::ZeroSupply,
        EquilibriumError::NoProgress { .. } => TqStatus::NoProgress,
        _ => TqStatus::InvalidArgument,
    }
}

fn guarded(f: impl FnOnce() -> TqStatus) -> TqStatus {
    clear_error();
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(TqStatus::Panic, "internal panic"))
}

/// # Safety
/// `ptr` must be null or point to `len` readable values.
unsafe fn slice<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

/// # Safety
/// `out` must be null or point to `len` writable values.
unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> TqStatus {
    if out.is_null() {
        return fail(TqStatus::NullPointer, "output buffer is null");
    }
    if len < src.len() {
        return fail(
            TqStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        );
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    TqStatus::Ok
}

#[no_mangle]
pub extern "C" fn tq_solver_config_default() -> TqSolverConfig {
    SolverConfig::default().into()
}

/// Builds an instance from row-major `goods × countries` demand and supply
/// matrices.
///
/// # Safety
/// `demand` and `supply` must point to `goods * countries` values; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tq_instance_new(
    goods: usize,
    countries: usize,
    demand: *const f64,
    supply: *const f64,
    out: *mut *mut TqInstance,
) -> TqStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TqStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(len) = goods.checked_mul(countries) else {
            return fail(TqStatus::InvalidArgument, "dimensions overflow");
        };
        let (Some(c), Some(b)) = (slice(demand, len), slice(supply, len)) else {
            return fail(TqStatus::NullPointer, "matrix pointer is null");
        };
        let c = DemandMatrix::from_row_major(goods, countries, c.to_vec());
        let b = SupplyMatrix::from_row_major(goods, countries, b.to_vec());
        match (c, b) {
            (Ok(demand), Ok(supply)) => {
                *out = Box::into_raw(Box::new(TqInstance { demand, supply }));
                TqStatus::Ok
            }
            (Err(e), _) | (_, Err(e)) => fail(TqStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Loads a bundled instance fixture such as `degenerate_2x2`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tq_instance_from_fixture(
    name: *const c_char,
    out: *mut *mut TqInstance,
) -> TqStatus {
    guarded(|| {
        if out.is_null() || name.is_null() {
            return fail(TqStatus::NullPointer, "argument is null");
        }
        *out = ptr::null_mut();
        let Ok(name) = CStr::from_ptr(name).to_str() else {
            return fail(TqStatus::InvalidArgument, "name is not UTF-8");
        };
        match load_fixture(name) {
            Ok(Fixture::Instance(i)) => {
                *out = Box::into_raw(Box::new(TqInstance {
                    demand: i.demand,
                    supply: i.supply,
                }));
                TqStatus::Ok
            }
            Ok(Fixture::Caption(_)) => fail(
                TqStatus::InvalidArgument,
                format!("fixture `{name}` has shares only, no matrices"),
            ),
            Err(e) => fail(TqStatus::UnknownFixture, e.to_string()),
        }
    })
}

/// # Safety
/// `inst` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tq_instance_free(inst: *mut TqInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tq_instance_goods(inst: *const TqInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.demand.goods())
}

/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tq_instance_countries(inst: *const TqInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.demand.countries())
}

/// Solves `inst`. `config` may be null for defaults. On `NO_PROGRESS` the
/// best iterate is still returned through `out`.
///
/// # Safety
/// `inst` must be a live handle, `config` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tq_solve(
    inst: *const TqInstance,
    config: *const TqSolverConfig,
    out: *mut *mut TqResult,
) -> TqStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TqStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(inst) = inst.as_ref() else {
            return fail(TqStatus::NullPointer, "instance is null");
        };
        let cfg: SolverConfig = config
            .as_ref()
            .map_or_else(SolverConfig::default, |c| (*c).into());
        match solve_relative_prices(&inst.demand, &inst.supply, &cfg) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(TqResult { inner: r }));
                TqStatus::Ok
            }
            Err(EquilibriumError::NoProgress { window, best }) => {
                *out = Box::into_raw(Box::new(TqResult { inner: *best }));
                fail(
                    TqStatus::NoProgress,
                    format!("no residual decrease within {window} iterations"),
                )
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `res` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tq_result_free(res: *mut TqResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tq_result_goods(res: *const TqResult) -> usize {
    res.as_ref().map_or(0, |r| r.inner.p0.len())
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tq_result_countries(res: *const TqResult) -> usize {
    res.as_ref().map_or(0, |r| r.inner.balance_ratios.len())
}

/// # Safety
/// `res` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tq_result_prices(
    res: *const TqResult,
    out: *mut f64,
    len: usize,
) -> TqStatus {
    guarded(|| match res.as_ref() {
        Some(r) => copy_out(&r.inner.p0, out, len),
        None => fail(TqStatus::NullPointer, "result is null"),
    })
}

/// # Safety
/// `res` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tq_result_excess(
    res: *const TqResult,
    out: *mut f64,
    len: usize,
) -> TqStatus {
    guarded(|| match res.as_ref() {
        Some(r) => copy_out(&r.inner.excess, out, len),
        None => fail(TqStatus::NullPointer, "result is null"),
    })
}

/// # Safety
/// `res` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tq_result_balance_ratios(
    res: *const TqResult,
    out: *mut f64,
    len: usize,
) -> TqStatus {
    guarded(|| match res.as_ref() {
        Some(r) => copy_out(&r.inner.balance_ratios, out, len),
        None => fail(TqStatus::NullPointer, "result is null"),
    })
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tq_result_degeneracy(res: *const TqResult) -> usize {
    res.as_ref().map_or(0, |r| r.inner.degeneracy)
}

/// Unsold share of supply value; NaN for a null handle.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tq_result_recession_level(res: *const TqResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.inner.recession_level)
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tq_result_residual(res: *const TqResult) -> f64 {
    res.as_ref()
        .map_or(f64::NAN, |r| r.inner.complementarity_residual)
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tq_result_converged(res: *const TqResult) -> bool {
    res.as_ref().is_some_and(|r| r.inner.converged)
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tq_result_iterations(res: *const TqResult) -> usize {
    res.as_ref().map_or(0, |r| r.inner.iterations)
}

/// The result as JSON; release with [`tq_string_free`]. Null on failure.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tq_result_to_json(res: *const TqResult) -> *mut c_char {
    clear_error();
    let Some(r) = res.as_ref() else {
        set_error("result is null");
        return ptr::null_mut();
    };
    match catch_unwind(AssertUnwindSafe(|| to_json_string(&r.inner))) {
        Ok(s) => CString::new(s).map_or(ptr::null_mut(), CString::into_raw),
        Err(_) => {
            set_error("internal panic");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Excess demand of `inst` at `prices` (length = goods count).
///
/// # Safety
/// `prices` must hold `len` values and `out` must hold `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn tq_excess_demand(
    inst: *const TqInstance,
    prices: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> TqStatus {
    guarded(|| {
        let Some(inst) = inst.as_ref() else {
            return fail(TqStatus::NullPointer, "instance is null");
        };
        let Some(p) = slice(prices, len) else {
            return fail(TqStatus::NullPointer, "prices is null");
        };
        let p = match PriceVector::new(p.to_vec()) {
            Ok(p) => p,
            Err(e) => return fail(TqStatus::InvalidArgument, e.to_string()),
        };
        match excess_demand(&inst.demand, &inst.supply, &p, default_guard(&inst.supply)) {
            Ok(d) => copy_out(&d, out, out_len),
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Each country's share of total supply (length = country count).
///
/// # Safety
/// `inst` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tq_country_supply_shares(
    inst: *const TqInstance,
    out: *mut f64,
    len: usize,
) -> TqStatus {
    guarded(|| {
        let Some(inst) = inst.as_ref() else {
            return fail(TqStatus::NullPointer, "instance is null");
        };
        match country_supply_shares(&inst.supply) {
            Ok(s) => copy_out(&s, out, len),
            Err(e) => fail(TqStatus::ZeroSupply, e.to_string()),
        }
    })
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
