//! C ABI over the core toolkit: opaque handles, status codes, no panics
//! across the boundary. The header `include/bgw_skeleton.h` is generated at
//! build time.

#![allow(non_camel_case_types)]

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rayon::prelude::*;

use bgw_skeleton::error::Error;
use bgw_skeleton::limit::{extinction_probability, leaf_count_pmf, BirthDeathParams, EscapeLaw};
use bgw_skeleton::model_io::ModelSpec;
use bgw_skeleton::offspring::{MarkingRule, OffspringLaw};
use bgw_skeleton::pgf::{joint_pgf, solve_q_exact};
use bgw_skeleton::regime::{classify_regime_with_threshold, Regime};
use bgw_skeleton::tree::{replica_rng, TreeSimulator, DEFAULT_NODE_CAP};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum bgwsk_status {
    BGWSK_OK = 0,
    /// A scalar argument was outside its domain.
    BGWSK_INVALID_ARGUMENT = 1,
    /// The model (pmf or marking table) failed validation.
    BGWSK_INVALID_MODEL = 2,
    /// mu = 0 and epsilon = 0: no regime.
    BGWSK_DEGENERATE_REGIME = 3,
    /// Conditioning on a null event (survival probability is zero).
    BGWSK_NULL_CONDITIONING = 4,
    /// A numerical routine failed to converge.
    BGWSK_NUMERICAL = 5,
    /// A required pointer was null.
    BGWSK_NULL_POINTER = 6,
    /// The JSON document could not be parsed.
    BGWSK_PARSE_ERROR = 7,
}

use bgwsk_status::*;

impl From<&Error> for bgwsk_status {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidLaw(_) | Error::InvalidFamilyMember { .. } | Error::InvalidMarking(_) => {
                BGWSK_INVALID_MODEL
            }
            Error::Domain { .. } => BGWSK_INVALID_ARGUMENT,
            Error::DegenerateRegime => BGWSK_DEGENERATE_REGIME,
            Error::NullConditioning => BGWSK_NULL_CONDITIONING,
            Error::NoConvergence(_) => BGWSK_NUMERICAL,
            Error::Json(_) => BGWSK_PARSE_ERROR,
            _ => BGWSK_INVALID_ARGUMENT,
        }
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn bgwsk_status_message(status: bgwsk_status) -> *const c_char {
    let msg: &'static [u8] = match status {
        BGWSK_OK => b"ok\0",
        BGWSK_INVALID_ARGUMENT => b"argument out of domain\0",
        BGWSK_INVALID_MODEL => b"invalid model\0",
        BGWSK_DEGENERATE_REGIME => b"degenerate regime: mu = 0 and epsilon = 0\0",
        BGWSK_NULL_CONDITIONING => b"conditioning on a null event\0",
        BGWSK_NUMERICAL => b"numerical failure\0",
        BGWSK_NULL_POINTER => b"null pointer\0",
        BGWSK_PARSE_ERROR => b"could not parse JSON\0",
    };
    msg.as_ptr() as *const c_char
}

/// Opaque marked offspring model: a finite-support law plus marking rule.
pub struct bgwsk_model {
    law: OffspringLaw,
    rule: MarkingRule,
}

/// Opaque escape-time law handle.
pub struct bgwsk_escape_law {
    law: EscapeLaw,
}

/// Regime classification result. `regime` is 0 for the supercritical
/// pure-birth limit, 1 for the balanced binary birth-death limit, 2 for the
/// subcritical single-lineage limit.
#[repr(C)]
pub struct bgwsk_regime_report {
    pub c: f64,
    pub regime: i32,
    pub lambda: f64,
    pub tau: f64,
    pub q_asymptotic: f64,
    pub via_threshold: bool,
}

fn guard<F: FnOnce() -> bgwsk_status>(f: F) -> bgwsk_status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => BGWSK_NUMERICAL,
    }
}

/// Parses a model from a JSON document
/// `{ "pmf": [...], "marking": { "kind": ... } }` (see
/// `schemas/model.schema.json`). On success stores a handle in `out`; free
/// it with `bgwsk_model_free`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_model_from_json(
    json: *const c_char,
    out: *mut *mut bgwsk_model,
) -> bgwsk_status {
    if json.is_null() || out.is_null() {
        return BGWSK_NULL_POINTER;
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => return BGWSK_PARSE_ERROR,
    };
    guard(|| {
        let spec = match ModelSpec::parse(text) {
            Ok(s) => s,
            Err(_) => return BGWSK_PARSE_ERROR,
        };
        match spec.build() {
            Ok((law, rule)) => {
                *out = Box::into_raw(Box::new(bgwsk_model { law, rule }));
                BGWSK_OK
            }
            Err(e) => (&e).into(),
        }
    })
}

/// Builds the binary law with mean `1 + epsilon` and constant marking
/// probability. Free with `bgwsk_model_free`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_model_binary_marked(
    epsilon: f64,
    marking: f64,
    out: *mut *mut bgwsk_model,
) -> bgwsk_status {
    if out.is_null() {
        return BGWSK_NULL_POINTER;
    }
    guard(|| {
        let build = || -> Result<bgwsk_model, Error> {
            let law = OffspringLaw::binary(epsilon)?;
            let rule = MarkingRule::constant(marking, &law)?;
            Ok(bgwsk_model { law, rule })
        };
        match build() {
            Ok(model) => {
                *out = Box::into_raw(Box::new(model));
                BGWSK_OK
            }
            Err(e) => (&e).into(),
        }
    })
}

/// Releases a model handle. Null is accepted.
///
/// # Safety
/// `model` must have come from a `bgwsk_model_*` constructor and not have
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_model_free(model: *mut bgwsk_model) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Exact skeleton survival probability `Q` solving `Q = 1 - f(0, 1 - Q)`.
/// With `include_surviving_lineages` false, the skeleton consists of marked
/// lineages only.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_model_survival(
    model: *const bgwsk_model,
    include_surviving_lineages: bool,
    out: *mut f64,
) -> bgwsk_status {
    if model.is_null() || out.is_null() {
        return BGWSK_NULL_POINTER;
    }
    let m = &*model;
    guard(|| match solve_q_exact(&m.law, &m.rule, include_surviving_lineages) {
        Ok(q) => {
            *out = q;
            BGWSK_OK
        }
        Err(e) => (&e).into(),
    })
}

/// Joint probability generating function `f(r, s)` of (mark, offspring).
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_model_joint_pgf(
    model: *const bgwsk_model,
    r: f64,
    s: f64,
    out: *mut f64,
) -> bgwsk_status {
    if model.is_null() || out.is_null() {
        return BGWSK_NULL_POINTER;
    }
    let m = &*model;
    guard(|| match joint_pgf(&m.law, &m.rule, r, s) {
        Ok(v) => {
            *out = v;
            BGWSK_OK
        }
        Err(e) => (&e).into(),
    })
}

/// Cached model moments: drift `epsilon = mean - 1`, marking probability
/// `mu`, marked mean `M`, second factorial moment `sigma2`. Any output
/// pointer may be null to skip that value.
///
/// # Safety
/// `model` must be a valid pointer; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_model_moments(
    model: *const bgwsk_model,
    epsilon: *mut f64,
    mu: *mut f64,
    marked_mean: *mut f64,
    sigma2: *mut f64,
) -> bgwsk_status {
    if model.is_null() {
        return BGWSK_NULL_POINTER;
    }
    let m = &*model;
    if !epsilon.is_null() {
        *epsilon = m.law.epsilon();
    }
    if !mu.is_null() {
        *mu = m.rule.mu();
    }
    if !marked_mean.is_null() {
        *marked_mean = m.rule.marked_mean();
    }
    if !sigma2.is_null() {
        *sigma2 = m.law.factorial_moment2();
    }
    BGWSK_OK
}

/// Classifies the model's asymptotic regime. `c_threshold <= 0` selects the
/// default threshold 50.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_model_regime(
    model: *const bgwsk_model,
    c_threshold: f64,
    out: *mut bgwsk_regime_report,
) -> bgwsk_status {
    if model.is_null() || out.is_null() {
        return BGWSK_NULL_POINTER;
    }
    let m = &*model;
    let threshold = if c_threshold > 0.0 {
        c_threshold
    } else {
        bgw_skeleton::regime::DEFAULT_C_THRESHOLD
    };
    guard(|| {
        match classify_regime_with_threshold(
            m.law.epsilon(),
            m.rule.mu(),
            m.law.factorial_moment2(),
            None,
            threshold,
        ) {
            Ok(r) => {
                *out = bgwsk_regime_report {
                    c: r.c,
                    regime: match r.regime {
                        Regime::SupercriticalYule => 0,
                        Regime::Balanced => 1,
                        Regime::SubcriticalSingle => 2,
                    },
                    lambda: r.lambda,
                    tau: r.tau,
                    q_asymptotic: r.q_asymptotic,
                    via_threshold: r.via_threshold,
                };
                BGWSK_OK
            }
            Err(e) => (&e).into(),
        }
    })
}

/// Monte Carlo estimate of the skeleton survival probability:
/// `replicas` trees on counter-indexed streams of `seed`, horizon
/// `horizon` generations (0 selects `ceil(10 / tau)` from the regime).
/// Writes the estimate and its binomial standard error.
///
/// # Safety
/// `model`, `estimate` and `se` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_model_survival_mc(
    model: *const bgwsk_model,
    horizon: u32,
    replicas: u64,
    seed: u64,
    estimate: *mut f64,
    se: *mut f64,
) -> bgwsk_status {
    if model.is_null() || estimate.is_null() || se.is_null() {
        return BGWSK_NULL_POINTER;
    }
    if replicas == 0 {
        return BGWSK_INVALID_ARGUMENT;
    }
    let m = &*model;
    guard(|| {
        let horizon = if horizon > 0 {
            horizon
        } else {
            match classify_regime_with_threshold(
                m.law.epsilon(),
                m.rule.mu(),
                m.law.factorial_moment2(),
                None,
                bgw_skeleton::regime::DEFAULT_C_THRESHOLD,
            ) {
                Ok(r) => ((10.0 / r.tau).ceil() as u32).max(1),
                Err(e) => return (&e).into(),
            }
        };
        let sim = match TreeSimulator::new(m.law.clone(), m.rule.clone(), horizon, DEFAULT_NODE_CAP)
        {
            Ok(s) => s,
            Err(e) => return (&e).into(),
        };
        let hits: u64 = (0..replicas)
            .into_par_iter()
            .map(|i| sim.survival_outcome(&mut replica_rng(seed, i)).nonempty() as u64)
            .sum();
        let p = hits as f64 / replicas as f64;
        *estimate = p;
        *se = (p * (1.0 - p) / replicas as f64).sqrt();
        BGWSK_OK
    })
}

/// Creates an escape-time law handle for balance constant `c` and variance
/// `sigma2`. Free with `bgwsk_escape_law_free`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_escape_law_new(
    c: f64,
    sigma2: f64,
    out: *mut *mut bgwsk_escape_law,
) -> bgwsk_status {
    if out.is_null() {
        return BGWSK_NULL_POINTER;
    }
    match EscapeLaw::new(c, sigma2) {
        Ok(law) => {
            *out = Box::into_raw(Box::new(bgwsk_escape_law { law }));
            BGWSK_OK
        }
        Err(e) => (&e).into(),
    }
}

/// Releases an escape-law handle. Null is accepted.
///
/// # Safety
/// `law` must have come from `bgwsk_escape_law_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_escape_law_free(law: *mut bgwsk_escape_law) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// Tail `Q(t) = 1 / (lambda + (1 - lambda) e^t)` on the kappa-scaled clock.
///
/// # Safety
/// `law` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_escape_tail(
    law: *const bgwsk_escape_law,
    t: f64,
    out: *mut f64,
) -> bgwsk_status {
    if law.is_null() || out.is_null() {
        return BGWSK_NULL_POINTER;
    }
    match (*law).law.tail_kappa(t) {
        Ok(v) => {
            *out = v;
            BGWSK_OK
        }
        Err(e) => (&e).into(),
    }
}

/// Escape-time density on the sqrt(mu)-scaled clock.
///
/// # Safety
/// `law` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_escape_density(
    law: *const bgwsk_escape_law,
    t: f64,
    out: *mut f64,
) -> bgwsk_status {
    if law.is_null() || out.is_null() {
        return BGWSK_NULL_POINTER;
    }
    match (*law).law.density_sqrt_mu(t) {
        Ok(v) => {
            *out = v;
            BGWSK_OK
        }
        Err(e) => (&e).into(),
    }
}

/// Density mode on the sqrt(mu)-scaled clock (0 for `c <= 0`); NaN on a
/// null handle.
///
/// # Safety
/// `law` must be a valid pointer or null.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_escape_mode(law: *const bgwsk_escape_law) -> f64 {
    if law.is_null() {
        return f64::NAN;
    }
    (*law).law.mode_sqrt_mu()
}

/// Split probability `lambda = 1/2 + c/(2 kappa)` of the limit skeleton;
/// NaN on a null handle.
///
/// # Safety
/// `law` must be a valid pointer or null.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_escape_lambda(law: *const bgwsk_escape_law) -> f64 {
    if law.is_null() {
        return f64::NAN;
    }
    (*law).law.lambda()
}

/// Fills `out[0..len]` with the leaf-count law `P(W = 1), ..., P(W = len)`
/// of the critical limit skeleton.
///
/// # Safety
/// `out` must point to at least `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_leaf_count_pmf(out: *mut f64, len: usize) -> bgwsk_status {
    if out.is_null() {
        return BGWSK_NULL_POINTER;
    }
    if len == 0 {
        return BGWSK_INVALID_ARGUMENT;
    }
    match leaf_count_pmf(len) {
        Ok(w) => {
            ptr::copy_nonoverlapping(w.as_ptr(), out, len);
            BGWSK_OK
        }
        Err(e) => (&e).into(),
    }
}

/// Eventual extinction probability `min(1, (1 - lambda)/lambda)` of the
/// binary birth-death limit process.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bgwsk_extinction_probability(
    lambda: f64,
    out: *mut f64,
) -> bgwsk_status {
    if out.is_null() {
        return BGWSK_NULL_POINTER;
    }
    match BirthDeathParams::with_unit_rate(lambda) {
        Ok(params) => {
            *out = extinction_probability(&params);
            BGWSK_OK
        }
        Err(e) => (&e).into(),
    }
}
