//! Convergence sweeps: families of instances indexed by a vanishing
//! parameter, compared member-by-member against a declared asymptotic
//! oracle, with a monotone-approach verdict and a log-log slope when the
//! oracle is a power law.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mutation::{log_log_slope, sequential_survival, SequentialModel};
use crate::offspring::{MarkingRule, OffspringLaw};
use crate::pgf::solve_q_exact;

/// A sweep family with its asymptotic oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepSpec {
    /// Critical binary law with constant marking probability `mu`;
    /// oracle `Q ~ sqrt(2 mu) / sigma`.
    CriticalMarking { mus: Vec<f64> },
    /// Laws supported on {0, 1, 2, 3} with fixed `p(2) = 0.25`, drift
    /// `epsilon`, and mass `third_mass` on k = 3; oracle
    /// `Q ~ 2 epsilon / sigma^2`, exact when `third_mass = 0`.
    BinarySurvival {
        epsilons: Vec<f64>,
        #[serde(default)]
        third_mass: f64,
    },
    /// Critical (or uniformly drifted) binary chains of `levels` steps;
    /// survival exponent `1 - 2^-levels` in `pi` when critical, `levels`
    /// when strictly subcritical.
    SequentialExponent {
        levels: usize,
        pi_grid: Vec<f64>,
        #[serde(default)]
        eta: f64,
    },
}

impl SweepSpec {
    /// Built-in presets exposed by the CLI.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "critical-marking" => Ok(SweepSpec::CriticalMarking {
                mus: vec![2e-2, 5e-3, 1.25e-3],
            }),
            "binary-survival" => Ok(SweepSpec::BinarySurvival {
                epsilons: vec![0.05, 0.025, 0.0125],
                third_mass: 0.0,
            }),
            "binary-survival-perturbed" => Ok(SweepSpec::BinarySurvival {
                epsilons: vec![0.05, 0.025, 0.0125],
                third_mass: 0.05,
            }),
            "sequential-b2" => Ok(SweepSpec::SequentialExponent {
                levels: 2,
                pi_grid: vec![1e-3, 1e-4, 1e-5],
                eta: 0.0,
            }),
            "sequential-b3" => Ok(SweepSpec::SequentialExponent {
                levels: 3,
                pi_grid: vec![1e-3, 1e-4, 1e-5],
                eta: 0.0,
            }),
            "sequential-subcritical-b2" => Ok(SweepSpec::SequentialExponent {
                levels: 2,
                pi_grid: vec![1e-3, 1e-4, 1e-5],
                eta: -0.1,
            }),
            other => Err(Error::InvalidExperiment(format!("unknown preset '{other}'"))),
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &[
            "critical-marking",
            "binary-survival",
            "binary-survival-perturbed",
            "sequential-b2",
            "sequential-b3",
            "sequential-subcritical-b2",
        ]
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One sweep member: the vanishing parameter, the exact value, and the
/// asymptotic oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub exact: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymptotic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// `|ratio - 1|` strictly decreases along the family.
    pub monotone_approach: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loglog_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_slope: Option<f64>,
    pub config: SweepSpec,
}

/// Law supported on {0, 1, 2, 3} with `p(2) = 0.25`, mean `1 + epsilon`,
/// and mass `delta` on k = 3. At `delta = 0` the first-order survival
/// formula `2 epsilon / sigma^2` is exact for this family.
fn shifted_binary_family(epsilon: f64, delta: f64) -> Result<OffspringLaw> {
    let p3 = delta;
    let p2 = 0.25;
    let p1 = 0.5 + epsilon - 3.0 * delta;
    let p0 = 1.0 - p1 - p2 - p3;
    OffspringLaw::from_pmf(vec![p0, p1, p2, p3])
}

/// Runs a sweep. Requires at least 3 members.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    let mut rows = Vec::new();
    let expected_slope = match spec {
        SweepSpec::CriticalMarking { mus } => {
            require_members(mus.len())?;
            for &mu in mus {
                let law = OffspringLaw::binary(0.0)?;
                let rule = MarkingRule::constant(mu, &law)?;
                let exact = solve_q_exact(&law, &rule, true)?;
                let sigma = law.factorial_moment2().sqrt();
                let asym = (2.0 * mu).sqrt() / sigma;
                rows.push(SweepRow {
                    parameter: mu,
                    exact,
                    asymptotic: Some(asym),
                    ratio: Some(exact / asym),
                });
            }
            Some(0.5)
        }
        SweepSpec::BinarySurvival {
            epsilons,
            third_mass,
        } => {
            require_members(epsilons.len())?;
            for &eps in epsilons {
                let law = shifted_binary_family(eps, *third_mass)?;
                let rule = MarkingRule::none(&law);
                let exact = solve_q_exact(&law, &rule, true)?;
                let asym = 2.0 * law.epsilon() / law.factorial_moment2();
                rows.push(SweepRow {
                    parameter: eps,
                    exact,
                    asymptotic: Some(asym),
                    ratio: Some(exact / asym),
                });
            }
            Some(1.0)
        }
        SweepSpec::SequentialExponent {
            levels,
            pi_grid,
            eta,
        } => {
            require_members(pi_grid.len())?;
            for &pi in pi_grid {
                let model = SequentialModel::uniform_binary_chain(*levels, *eta, pi)?;
                let exact = sequential_survival(&model)?.overall_q;
                rows.push(SweepRow {
                    parameter: pi,
                    exact,
                    asymptotic: None,
                    ratio: None,
                });
            }
            Some(if *eta < 0.0 {
                *levels as f64
            } else {
                1.0 - 0.5f64.powi(*levels as i32)
            })
        }
    };
    let monotone_approach = if rows.iter().all(|r| r.ratio.is_some()) {
        let gaps: Vec<f64> = rows
            .iter()
            .map(|r| (r.ratio.unwrap() - 1.0).abs())
            .collect();
        Some(gaps.windows(2).all(|w| w[1] < w[0] || w[0] == 0.0))
    } else {
        None
    };
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.parameter, r.exact)).collect();
    let loglog_slope = log_log_slope(&points).ok();
    Ok(SweepReport {
        rows,
        monotone_approach,
        loglog_slope,
        expected_slope,
        config: spec.clone(),
    })
}

fn require_members(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidExperiment(format!(
            "sweep needs at least 3 members, got {n}"
        )));
    }
    Ok(())
}

/// Writes `<out_dir>/<id>/<timestamp>.json` and a flat CSV
/// (`parameter,exact,asymptotic,ratio`).
pub fn persist_sweep(
    report: &SweepReport,
    id: &str,
    out_dir: impl AsRef<Path>,
) -> Result<(PathBuf, PathBuf)> {
    let dir = out_dir.as_ref().join(id);
    std::fs::create_dir_all(&dir)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
    let json_path = dir.join(format!("{stamp}.json"));
    let csv_path = dir.join(format!("{stamp}.csv"));
    std::fs::write(&json_path, serde_json::to_string_pretty(report)?)?;
    let mut csv = String::from("parameter,exact,asymptotic,ratio\n");
    for r in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.parameter,
            r.exact,
            r.asymptotic.map(|v| v.to_string()).unwrap_or_default(),
            r.ratio.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    std::fs::write(&csv_path, csv)?;
    Ok((json_path, csv_path))
}
