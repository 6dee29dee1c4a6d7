//! C ABI for the pulsepair simulator.
//!
//! States are opaque heap handles created by `pp_state_*` constructors and
//! released with [`pp_state_free`]. Every fallible call returns a
//! [`PpStatus`]; on failure the message is available from
//! [`pp_last_error_message`] on the same thread. Angles are radians.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pulsepair::analysis::{FitOptions, FringePoint, FringeScan, ScanMode};
use pulsepair::linalg::{Mat4, C64};
use pulsepair::{BellKind, DensityMatrix, DetectorConfig, Error, RunConfig, SourceConfig};

/// Status codes returned by every fallible entry point.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidState = 3,
    FullyBlocked = 4,
    DegenerateSource = 5,
    EpsilonUndefined = 6,
    UnderdeterminedFit = 7,
    DegenerateFringe = 8,
    Panic = 99,
}

#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PpBellKind {
    PhiPlus = 0,
    PhiMinus = 1,
    PsiPlus = 2,
    PsiMinus = 3,
}

/// Opaque two-photon density matrix.
pub struct PpState {
    rho: DensityMatrix,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PpSourceConfig {
    pub pump_angle: f64,
    pub gain_up: f64,
    pub gain_down: f64,
    pub relative_phase: f64,
    pub overlap_mu: f64,
    pub mean_pairs_per_pulse: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PpDetectorConfig {
    pub efficiency1: f64,
    pub efficiency2: f64,
    pub background_prob1: f64,
    pub background_prob2: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PpRunConfig {
    pub n_pulses: u64,
    pub seed: u64,
    pub workers: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PpCountRecord {
    pub n_pulses: u64,
    pub singles1: u64,
    pub singles2: u64,
    pub coincidences: u64,
    pub accidentals: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PpExpectedRates {
    pub p_single1: f64,
    pub p_single2: f64,
    pub p_coinc: f64,
    pub p_accidental: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PpFringeFit {
    pub offset: f64,
    pub amplitude: f64,
    /// Angle of the fringe maximum in `[0, π)`.
    pub phase: f64,
    pub visibility: f64,
    pub rms_residual: f64,
    pub visibility_err: f64,
    pub phase_err: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> PpStatus {
    match err {
        Error::InvalidState(_) => PpStatus::InvalidState,
        Error::FullyBlocked(_) => PpStatus::FullyBlocked,
        Error::DegenerateSource => PpStatus::DegenerateSource,
        Error::EpsilonUndefined => PpStatus::EpsilonUndefined,
        Error::UnderdeterminedFit(_) => PpStatus::UnderdeterminedFit,
        Error::DegenerateFringe(_) => PpStatus::DegenerateFringe,
        Error::InvalidConfig(_) | Error::ArgumentOrder { .. } | Error::VisibilityUndefined | Error::Parse(_) => {
            PpStatus::InvalidArgument
        }
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F>(f: F) -> PpStatus
where
    F: FnOnce() -> Result<(), PpFailure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PpStatus::Ok,
        Ok(Err(PpFailure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            PpStatus::NullPointer
        }
        Ok(Err(PpFailure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic");
            PpStatus::Panic
        }
    }
}

enum PpFailure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for PpFailure {
    fn from(e: Error) -> Self {
        PpFailure::Core(e)
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, PpFailure> {
    // SAFETY: caller guarantees `p` is null or valid for reads.
    unsafe { p.as_ref() }.ok_or(PpFailure::Null(what))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &'static str) -> Result<(), PpFailure> {
    if p.is_null() {
        return Err(PpFailure::Null(what));
    }
    // SAFETY: caller guarantees `p` is valid for writes.
    unsafe { p.write(value) };
    Ok(())
}

unsafe fn emit_state(out: *mut *mut PpState, rho: DensityMatrix) -> Result<(), PpFailure> {
    // SAFETY: forwarded caller contract on `out`.
    unsafe { write_out(out, Box::into_raw(Box::new(PpState { rho })), "out") }
}

impl From<PpSourceConfig> for SourceConfig {
    fn from(c: PpSourceConfig) -> Self {
        SourceConfig {
            pump_angle: c.pump_angle,
            gain_up: c.gain_up,
            gain_down: c.gain_down,
            relative_phase: c.relative_phase,
            overlap_mu: c.overlap_mu,
            mean_pairs_per_pulse: c.mean_pairs_per_pulse,
        }
    }
}

impl From<PpDetectorConfig> for DetectorConfig {
    fn from(c: PpDetectorConfig) -> Self {
        DetectorConfig {
            efficiency1: c.efficiency1,
            efficiency2: c.efficiency2,
            background_prob1: c.background_prob1,
            background_prob2: c.background_prob2,
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, or
/// 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn pp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: `buf` has room for `len` bytes and n < len.
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_state_bell(kind: PpBellKind, out: *mut *mut PpState) -> PpStatus {
    guard(|| {
        let kind = match kind {
            PpBellKind::PhiPlus => BellKind::PhiPlus,
            PpBellKind::PhiMinus => BellKind::PhiMinus,
            PpBellKind::PsiPlus => BellKind::PsiPlus,
            PpBellKind::PsiMinus => BellKind::PsiMinus,
        };
        unsafe { emit_state(out, pulsepair::pure_to_density(&pulsepair::bell_state(kind))) }
    })
}

/// State emitted by the two-crystal source.
///
/// # Safety
/// `cfg` must be valid for reads and `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_state_from_source(cfg: *const PpSourceConfig, out: *mut *mut PpState) -> PpStatus {
    guard(|| {
        let cfg = unsafe { deref(cfg, "cfg") }?;
        let rho = pulsepair::emitted_state(&(*cfg).into())?;
        unsafe { emit_state(out, rho) }
    })
}

/// `cos²Θ |HH⟩⟨HH| + sin²Θ |VV⟩⟨VV|`
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_state_mixed(theta: f64, out: *mut *mut PpState) -> PpStatus {
    guard(|| unsafe { emit_state(out, pulsepair::mixed_state(theta)) })
}

/// Validates a row-major 4×4 matrix given as separate real and imaginary
/// parts (16 doubles each, basis HH, HV, VH, VV).
///
/// # Safety
/// `re` and `im` must each point to 16 readable doubles; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_state_from_matrix(re: *const f64, im: *const f64, out: *mut *mut PpState) -> PpStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(PpFailure::Null("re/im"));
        }
        // SAFETY: both point to 16 doubles per the contract.
        let (re, im) = unsafe { (std::slice::from_raw_parts(re, 16), std::slice::from_raw_parts(im, 16)) };
        let mut m = Mat4::zeros();
        for k in 0..16 {
            m.0[k / 4][k % 4] = C64::new(re[k], im[k]);
        }
        let rho = DensityMatrix::new(m)?;
        unsafe { emit_state(out, rho) }
    })
}

/// Releases a state handle. Null is ignored.
///
/// # Safety
/// `state` must be null or a handle from a `pp_state_*` constructor that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn pp_state_free(state: *mut PpState) {
    if !state.is_null() {
        // SAFETY: handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Copies the row-major matrix entries into `re` and `im` (16 doubles each).
///
/// # Safety
/// `state` must be a live handle; `re` and `im` must be valid for 16 writes.
#[no_mangle]
pub unsafe extern "C" fn pp_state_entries(state: *const PpState, re: *mut f64, im: *mut f64) -> PpStatus {
    guard(|| {
        let s = unsafe { deref(state, "state") }?;
        if re.is_null() || im.is_null() {
            return Err(PpFailure::Null("re/im"));
        }
        for k in 0..16 {
            let z = s.rho.entry(k / 4, k % 4);
            // SAFETY: both buffers hold 16 doubles.
            unsafe {
                *re.add(k) = z.re;
                *im.add(k) = z.im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `state` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_state_concurrence(state: *const PpState, out: *mut f64) -> PpStatus {
    guard(|| {
        let s = unsafe { deref(state, "state") }?;
        unsafe { write_out(out, pulsepair::concurrence(&s.rho), "out") }
    })
}

/// # Safety
/// `state` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_state_purity(state: *const PpState, out: *mut f64) -> PpStatus {
    guard(|| {
        let s = unsafe { deref(state, "state") }?;
        unsafe { write_out(out, pulsepair::purity(&s.rho), "out") }
    })
}

/// # Safety
/// `state` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_coincidence_probability(state: *const PpState, theta1: f64, theta2: f64, out: *mut f64) -> PpStatus {
    guard(|| {
        let s = unsafe { deref(state, "state") }?;
        unsafe { write_out(out, pulsepair::coincidence_probability(&s.rho, theta1, theta2), "out") }
    })
}

/// # Safety
/// `state` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_correlation_e(state: *const PpState, theta1: f64, theta2: f64, out: *mut f64) -> PpStatus {
    guard(|| {
        let s = unsafe { deref(state, "state") }?;
        unsafe { write_out(out, pulsepair::correlation_e(&s.rho, theta1, theta2), "out") }
    })
}

/// # Safety
/// `state` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_chsh(state: *const PpState, a: f64, a_prime: f64, b: f64, b_prime: f64, out: *mut f64) -> PpStatus {
    guard(|| {
        let s = unsafe { deref(state, "state") }?;
        unsafe { write_out(out, pulsepair::chsh(&s.rho, a, a_prime, b, b_prime), "out") }
    })
}

/// Phase shifter then (if `has_plate`) a half-wave plate on arm 1 or 2.
/// Writes a new handle to `out`.
///
/// # Safety
/// `state` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_state_bell_transform(
    state: *const PpState,
    has_plate: bool,
    hwp_angle: f64,
    shifter_phase: f64,
    arm: u32,
    out: *mut *mut PpState,
) -> PpStatus {
    guard(|| {
        let s = unsafe { deref(state, "state") }?;
        let arm = match arm {
            1 => pulsepair::Arm::One,
            2 => pulsepair::Arm::Two,
            other => return Err(Error::InvalidConfig(format!("arm must be 1 or 2, got {other}")).into()),
        };
        let rho = pulsepair::bell_transform(&s.rho, has_plate.then_some(hwp_angle), shifter_phase, arm)?;
        unsafe { emit_state(out, rho) }
    })
}

/// # Safety
/// `state` and `det` must be valid for reads; `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_expected_rates(
    state: *const PpState,
    theta1: f64,
    theta2: f64,
    mean_pairs_per_pulse: f64,
    det: *const PpDetectorConfig,
    out: *mut PpExpectedRates,
) -> PpStatus {
    guard(|| {
        let s = unsafe { deref(state, "state") }?;
        let det = unsafe { deref(det, "det") }?;
        let r = pulsepair::expected_rates(&s.rho, theta1, theta2, mean_pairs_per_pulse, &(*det).into())?;
        let rates = PpExpectedRates { p_single1: r.p_single1, p_single2: r.p_single2, p_coinc: r.p_coinc, p_accidental: r.p_accidental };
        unsafe { write_out(out, rates, "out") }
    })
}

/// Seeded Monte Carlo counting run; deterministic in the seed regardless of
/// `run->workers`.
///
/// # Safety
/// `cfg`, `det`, `run` must be valid for reads; `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_simulate_run(
    cfg: *const PpSourceConfig,
    theta1: f64,
    theta2: f64,
    det: *const PpDetectorConfig,
    run: *const PpRunConfig,
    out: *mut PpCountRecord,
) -> PpStatus {
    guard(|| {
        let cfg = unsafe { deref(cfg, "cfg") }?;
        let det = unsafe { deref(det, "det") }?;
        let run = unsafe { deref(run, "run") }?;
        let run = RunConfig { n_pulses: run.n_pulses, seed: run.seed, workers: run.workers as usize };
        let rec = pulsepair::simulate_run(&(*cfg).into(), theta1, theta2, &(*det).into(), &run)?;
        let rec = PpCountRecord {
            n_pulses: rec.n_pulses,
            singles1: rec.singles1,
            singles2: rec.singles2,
            coincidences: rec.coincidences,
            accidentals: rec.accidentals,
        };
        unsafe { write_out(out, rec, "out") }
    })
}

/// Fits `c₀ + c₁cos2θ + c₂sin2θ` to `n` points. `accidentals` may be null
/// (treated as zero).
///
/// # Safety
/// `theta1` and `coincidences` must hold `n` doubles; `accidentals` must be
/// null or hold `n` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_fit_fringe(
    theta1: *const f64,
    coincidences: *const f64,
    accidentals: *const f64,
    n: usize,
    subtract_accidentals: bool,
    weighted: bool,
    out: *mut PpFringeFit,
) -> PpStatus {
    guard(|| {
        if theta1.is_null() || coincidences.is_null() {
            return Err(PpFailure::Null("theta1/coincidences"));
        }
        // SAFETY: arrays hold n doubles per the contract.
        let (t, c) = unsafe { (std::slice::from_raw_parts(theta1, n), std::slice::from_raw_parts(coincidences, n)) };
        let a = if accidentals.is_null() { None } else { Some(unsafe { std::slice::from_raw_parts(accidentals, n) }) };
        let points = (0..n)
            .map(|k| FringePoint {
                theta1: t[k],
                coincidences: c[k],
                singles1: 0.0,
                singles2: 0.0,
                accidentals: a.map_or(0.0, |a| a[k]),
            })
            .collect();
        let scan = FringeScan::new(0.0, points, ScanMode::Analytic)?;
        let f = pulsepair::fit_fringe_with(&scan, FitOptions { subtract_accidentals, weighted })?;
        let fit = PpFringeFit {
            offset: f.offset,
            amplitude: f.amplitude,
            phase: f.phase,
            visibility: f.visibility,
            rms_residual: f.rms_residual,
            visibility_err: f.visibility_err,
            phase_err: f.phase_err,
        };
        unsafe { write_out(out, fit, "out") }
    })
}

/// `(r_max − r_min) / (r_max + r_min)`
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pp_visibility(r_max: f64, r_min: f64, out: *mut f64) -> PpStatus {
    guard(|| {
        let v = pulsepair::visibility(r_max, r_min)?;
        unsafe { write_out(out, v, "out") }
    })
}
