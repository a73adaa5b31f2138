//! Asymptotic regime classification for marked near-critical processes.
//!
//! The balance constant `c = epsilon / sqrt(mu)` decides the limit shape of
//! the skeleton: a pure-birth process when marking is negligible against a
//! supercritical drift (`c = +inf`), a binary birth-death process with split
//! probability `lambda` for finite `c`, and a single exponentially dying
//! lineage when marking is negligible against a subcritical drift
//! (`c = -inf`). A single instance can only realize a finite `c`, so a
//! threshold on `|c|` maps extreme instances to the degenerate regimes; the
//! report records when the threshold fired.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default `|c|` threshold beyond which an instance is classified into the
/// degenerate supercritical/subcritical regimes.
pub const DEFAULT_C_THRESHOLD: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `c = +inf`: the limit skeleton is the Yule pure-birth process.
    SupercriticalYule,
    /// `c` finite: binary birth-death limit with split probability `lambda`.
    Balanced,
    /// `c = -inf`: a single lineage dying after an exponential time.
    SubcriticalSingle,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::SupercriticalYule => write!(f, "supercritical-yule"),
            Regime::Balanced => write!(f, "balanced"),
            Regime::SubcriticalSingle => write!(f, "subcritical-single"),
        }
    }
}

/// Classification output: the balance constant, the regime, and the limit
/// parameters (split probability `lambda`, generation-to-time scale `tau`,
/// and the asymptotic skeleton survival probability).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegimeReport {
    pub c: f64,
    pub regime: Regime,
    pub lambda: f64,
    pub tau: f64,
    pub q_asymptotic: f64,
    /// True when a finite `c` was pushed into a degenerate regime by the
    /// `|c| >= threshold` rule.
    pub via_threshold: bool,
    pub c_threshold: f64,
}

/// Classifies an instance with the default threshold [`DEFAULT_C_THRESHOLD`].
pub fn classify_regime(
    epsilon: f64,
    mu: f64,
    sigma2: f64,
    c_override: Option<f64>,
) -> Result<RegimeReport> {
    classify_regime_with_threshold(epsilon, mu, sigma2, c_override, DEFAULT_C_THRESHOLD)
}

/// Classifies an instance, mapping `|c| >= threshold` to the degenerate
/// regimes. `c_override` replaces the computed `epsilon / sqrt(mu)` (useful
/// for declaring the limit constant of a sweep explicitly); `+inf`/`-inf`
/// are accepted.
pub fn classify_regime_with_threshold(
    epsilon: f64,
    mu: f64,
    sigma2: f64,
    c_override: Option<f64>,
    threshold: f64,
) -> Result<RegimeReport> {
    if !(0.0..=1.0).contains(&mu) || !mu.is_finite() {
        return Err(Error::Domain {
            what: "marking probability mu",
            value: mu,
        });
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain {
            what: "sigma2",
            value: sigma2,
        });
    }
    if !epsilon.is_finite() {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
        });
    }
    if !(threshold > 0.0) {
        return Err(Error::Domain {
            what: "c threshold",
            value: threshold,
        });
    }
    let c = match c_override {
        Some(c) if c.is_nan() => {
            return Err(Error::Domain {
                what: "c override",
                value: c,
            })
        }
        Some(c) => c,
        None => {
            if mu > 0.0 {
                epsilon / mu.sqrt()
            } else if epsilon > 0.0 {
                f64::INFINITY
            } else if epsilon < 0.0 {
                f64::NEG_INFINITY
            } else {
                return Err(Error::DegenerateRegime);
            }
        }
    };
    let via_threshold = c.is_finite() && c.abs() >= threshold;
    // the degenerate regimes take tau from |epsilon|, which must be positive
    if (c == f64::INFINITY && epsilon <= 0.0) || (c == f64::NEG_INFINITY && epsilon >= 0.0) {
        return Err(Error::Domain {
            what: "epsilon (sign must match the degenerate c override)",
            value: epsilon,
        });
    }
    let report = if c == f64::INFINITY || (via_threshold && c > 0.0) {
        RegimeReport {
            c,
            regime: Regime::SupercriticalYule,
            lambda: 1.0,
            tau: epsilon,
            q_asymptotic: 2.0 * epsilon / sigma2,
            via_threshold,
            c_threshold: threshold,
        }
    } else if c == f64::NEG_INFINITY || (via_threshold && c < 0.0) {
        RegimeReport {
            c,
            regime: Regime::SubcriticalSingle,
            lambda: 0.0,
            tau: epsilon.abs(),
            q_asymptotic: if mu == 0.0 { 0.0 } else { mu / epsilon.abs() },
            via_threshold,
            c_threshold: threshold,
        }
    } else {
        let kappa = (c * c + 2.0 * sigma2).sqrt();
        RegimeReport {
            c,
            regime: Regime::Balanced,
            lambda: 0.5 + c / (2.0 * kappa),
            tau: mu.sqrt() * kappa,
            q_asymptotic: mu.sqrt() * (c + kappa) / sigma2,
            via_threshold,
            c_threshold: threshold,
        }
    };
    Ok(report)
}
