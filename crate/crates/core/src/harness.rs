//! Experiment orchestration: parallel replication, conditioned sampling
//! with an attempt budget, estimators with standard errors, goodness-of-fit
//! tests against exact oracles, convergence sweeps, and result persistence.
//!
//! Reproducibility contract: every replica draws from its own
//! counter-indexed stream of the master seed, partial results are reduced
//! order-independently (integer tallies or per-replica slots), and
//! conditioned sampling always consumes whole fixed-size blocks of replica
//! indices. A record is therefore bit-identical for any worker count; only
//! the wall clock differs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::{simulate_y, BirthDeathParams, EscapeLaw};
use crate::model_io::{ModelSpec, SequentialModelSpec};
use crate::mutation::{sequential_survival, SequentialModel};
use crate::offspring::{MarkingRule, OffspringLaw};
use crate::pgf::{skeleton_offspring_coefficients, solve_q_exact};
use crate::regime::{classify_regime, RegimeReport};
use crate::stats::{binomial_se, chi_square_gof, ks_test, mean_and_se};
use crate::tree::{
    extract_skeleton, replica_rng, sequential_settle_window, simulate_sequential_escape,
    TreeSimulator, DEFAULT_NODE_CAP,
};

/// Hard ceiling on attempts while waiting for conditioned samples.
pub const DEFAULT_ATTEMPT_BUDGET: u64 = 1_000_000_000;

/// Replica indices are consumed in whole blocks of this size so that the
/// accepted set never depends on scheduling.
const BLOCK: u64 = 8192;

/// Stream index offset separating oracle simulations from replica streams.
const ORACLE_STREAM_OFFSET: u64 = 1 << 32;

/// What an experiment estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    SurvivalProbability,
    SkeletonOffspring,
    EscapeTime,
    SkeletonCounts,
    LeafCount,
    SequentialQ,
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Target::SurvivalProbability => "survival_probability",
            Target::SkeletonOffspring => "skeleton_offspring",
            Target::EscapeTime => "escape_time",
            Target::SkeletonCounts => "skeleton_counts",
            Target::LeafCount => "leaf_count",
            Target::SequentialQ => "sequential_q",
        };
        write!(f, "{name}")
    }
}

/// Model referenced by an experiment: inline or by file path, marked
/// single-type or a sequential chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRef {
    Inline(ModelSpec),
    Path(PathBuf),
    Sequential(SequentialModelSpec),
    SequentialPath(PathBuf),
}

enum ResolvedModel {
    Marked(OffspringLaw, MarkingRule),
    Sequential(SequentialModel),
}

impl ModelRef {
    fn resolve(&self) -> Result<ResolvedModel> {
        match self {
            ModelRef::Inline(spec) => {
                let (law, rule) = spec.build()?;
                Ok(ResolvedModel::Marked(law, rule))
            }
            ModelRef::Path(path) => {
                let (law, rule) = ModelSpec::load(path)?.build()?;
                Ok(ResolvedModel::Marked(law, rule))
            }
            ModelRef::Sequential(spec) => Ok(ResolvedModel::Sequential(spec.build()?)),
            ModelRef::SequentialPath(path) => {
                Ok(ResolvedModel::Sequential(SequentialModelSpec::load(path)?.build()?))
            }
        }
    }
}

/// A fully specified experiment. For conditioned targets
/// (`SkeletonOffspring`, `EscapeTime`, `LeafCount`, `SkeletonCounts`)
/// `replicas` is the number of accepted samples to collect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub id: String,
    pub target: Target,
    pub model: ModelRef,
    pub replicas: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt_budget: Option<u64>,
}

impl Experiment {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One point estimate with its standard error and, when available, the
/// exact oracle it is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub se: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    /// Which operation produced the oracle value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_source: Option<String>,
    /// `|value - oracle| / se`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_score: Option<f64>,
}

impl Estimate {
    fn with_oracle(name: &str, value: f64, se: f64, oracle: f64, source: &str) -> Self {
        Self {
            name: name.into(),
            value,
            se,
            oracle: Some(oracle),
            oracle_source: Some(source.into()),
            // a degenerate SE would put NaN/inf into the record
            z_score: (se > 0.0).then(|| (value - oracle).abs() / se),
        }
    }
}

/// A goodness-of-fit test result within a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofTest {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: u64,
}

/// Attempt bookkeeping of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplingStats {
    pub attempts: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub rejected: u64,
    /// Trees alive at the horizon whose statistic was still undecided.
    pub censored: u64,
    pub cap_hits: u64,
}

/// Persistent outcome of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment_id: String,
    pub target: Target,
    pub estimates: Vec<Estimate>,
    pub gof_tests: Vec<GofTest>,
    pub sampling: SamplingStats,
    pub regime: Option<RegimeReport>,
    pub horizon: u32,
    pub node_cap: usize,
    pub wall_clock_seconds: f64,
    pub version: String,
    pub config: Experiment,
}

fn tau_and_regime(law: &OffspringLaw, rule: &MarkingRule) -> Result<RegimeReport> {
    classify_regime(law.epsilon(), rule.mu(), law.factorial_moment2(), None)
}

fn default_horizon(tau: f64) -> u32 {
    ((10.0 / tau).ceil() as u32).max(1)
}

/// Runs an experiment and returns its record. Fails fast on model
/// validation; sampling failures surface as numerical/budget errors.
pub fn run(experiment: &Experiment) -> Result<ResultRecord> {
    if experiment.replicas == 0 {
        return Err(Error::InvalidExperiment("replicas must be >= 1".into()));
    }
    let started = Instant::now();
    let model = experiment.model.resolve()?;
    let body = || -> Result<ResultRecord> {
        let (estimates, gof_tests, sampling, regime, horizon, node_cap) =
            match (&model, experiment.target) {
                (ResolvedModel::Marked(law, rule), Target::SurvivalProbability) => {
                    run_survival(experiment, law, rule)?
                }
                (ResolvedModel::Marked(law, rule), Target::SkeletonOffspring) => {
                    run_skeleton_offspring(experiment, law, rule)?
                }
                (ResolvedModel::Marked(law, rule), Target::EscapeTime) => {
                    run_escape_time(experiment, law, rule)?
                }
                (ResolvedModel::Marked(law, rule), Target::SkeletonCounts) => {
                    run_skeleton_counts(experiment, law, rule)?
                }
                (ResolvedModel::Marked(law, rule), Target::LeafCount) => {
                    run_leaf_count(experiment, law, rule)?
                }
                (ResolvedModel::Sequential(model), Target::SequentialQ) => {
                    run_sequential_q(experiment, model)?
                }
                (ResolvedModel::Sequential(_), t) => {
                    return Err(Error::InvalidExperiment(format!(
                        "target {t} needs a marked single-type model"
                    )))
                }
                (ResolvedModel::Marked(..), Target::SequentialQ) => {
                    return Err(Error::InvalidExperiment(
                        "target sequential_q needs a sequential model".into(),
                    ))
                }
            };
        Ok(ResultRecord {
            experiment_id: experiment.id.clone(),
            target: experiment.target,
            estimates,
            gof_tests,
            sampling,
            regime,
            horizon,
            node_cap,
            wall_clock_seconds: 0.0,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: experiment.clone(),
        })
    };
    let mut record = match experiment.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidExperiment(format!("worker pool: {e}")))?;
            pool.install(body)?
        }
        None => body()?,
    };
    record.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok(record)
}

type TargetOutput = (
    Vec<Estimate>,
    Vec<GofTest>,
    SamplingStats,
    Option<RegimeReport>,
    u32,
    usize,
);

fn run_survival(
    experiment: &Experiment,
    law: &OffspringLaw,
    rule: &MarkingRule,
) -> Result<TargetOutput> {
    let regime = tau_and_regime(law, rule).ok();
    let horizon = match experiment.horizon {
        Some(h) => h,
        None => {
            let r = regime.as_ref().ok_or(Error::DegenerateRegime)?;
            default_horizon(r.tau)
        }
    };
    let node_cap = experiment.node_cap.unwrap_or(DEFAULT_NODE_CAP);
    let sim = TreeSimulator::new(law.clone(), rule.clone(), horizon, node_cap)?;
    let n = experiment.replicas;
    let seed = experiment.seed;
    let (hits, cap_hits) = (0..n)
        .into_par_iter()
        .map(|i| {
            let out = sim.survival_outcome(&mut replica_rng(seed, i));
            (out.nonempty() as u64, out.cap_hit as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let p_hat = hits as f64 / n as f64;
    let q = solve_q_exact(law, rule, true)?;
    let estimates = vec![Estimate::with_oracle(
        "skeleton_survival_probability",
        p_hat,
        binomial_se(p_hat, n),
        q,
        "solve_q_exact",
    )];
    let sampling = SamplingStats {
        attempts: n,
        accepted: n,
        acceptance_rate: 1.0,
        rejected: 0,
        censored: 0,
        cap_hits,
    };
    Ok((estimates, vec![], sampling, regime, horizon, node_cap))
}

/// Outcome of one conditioned attempt.
enum Attempt<T> {
    Accept(T),
    Reject,
    Censor,
    CapHit,
}

/// Collects `target` accepted samples by rejection over replica indices
/// `0, 1, 2, ...`, processing whole blocks so the accepted set is
/// schedule-independent. Returns samples ordered by replica index.
fn collect_conditioned<T: Send>(
    target: u64,
    budget: u64,
    f: impl Fn(u64) -> Attempt<T> + Sync,
) -> Result<(Vec<T>, SamplingStats)> {
    let mut accepted: Vec<(u64, T)> = Vec::new();
    let mut stats = SamplingStats::default();
    let mut block_start = 0u64;
    while (accepted.len() as u64) < target {
        if block_start >= budget {
            return Err(Error::BudgetExceeded {
                attempts: block_start,
                accepted: accepted.len() as u64,
                target,
            });
        }
        let block_end = block_start + BLOCK;
        let mut batch: Vec<(u64, Attempt<T>)> = (block_start..block_end)
            .into_par_iter()
            .map(|i| (i, f(i)))
            .collect();
        for (i, outcome) in batch.drain(..) {
            match outcome {
                Attempt::Accept(v) => accepted.push((i, v)),
                Attempt::Reject => stats.rejected += 1,
                Attempt::Censor => stats.censored += 1,
                Attempt::CapHit => stats.cap_hits += 1,
            }
        }
        block_start = block_end;
    }
    stats.attempts = block_start;
    stats.acceptance_rate = accepted.len() as f64 / block_start as f64;
    accepted.sort_by_key(|&(i, _)| i);
    accepted.truncate(target as usize);
    stats.accepted = target;
    Ok((accepted.into_iter().map(|(_, v)| v).collect(), stats))
}

fn run_skeleton_offspring(
    experiment: &Experiment,
    law: &OffspringLaw,
    rule: &MarkingRule,
) -> Result<TargetOutput> {
    let regime = tau_and_regime(law, rule)?;
    let horizon = experiment.horizon.unwrap_or_else(|| default_horizon(regime.tau));
    let node_cap = experiment.node_cap.unwrap_or(DEFAULT_NODE_CAP);
    let budget = experiment.attempt_budget.unwrap_or(DEFAULT_ATTEMPT_BUDGET);
    let sim = TreeSimulator::new(law.clone(), rule.clone(), horizon, node_cap)?;
    let seed = experiment.seed;
    let (samples, sampling) = collect_conditioned(experiment.replicas, budget, |i| {
        let mut rng = replica_rng(seed, i);
        let tree = sim.simulate(&mut rng);
        if tree.cap_hit {
            return Attempt::CapHit;
        }
        let skel = extract_skeleton(&tree, horizon);
        if skel.empty {
            Attempt::Reject
        } else {
            let xi = tree.nodes()[0].marked;
            let x1 = skel.generation_counts.get(1).copied().unwrap_or(0);
            Attempt::Accept((xi, x1.min(u16::MAX as u32) as u16))
        }
    })?;

    // exact conditional cells (xi, X(1) = j), j up to the support maximum
    let q = solve_q_exact(law, rule, true)?;
    let kmax = law.support_len() - 1;
    let cells = skeleton_offspring_coefficients(law, rule, q, kmax)?;
    let n = samples.len() as u64;
    let mut observed = vec![0u64; 2 * (kmax + 1)];
    for &(xi, x1) in &samples {
        let j = (x1 as usize).min(kmax);
        observed[usize::from(xi) * (kmax + 1) + j] += 1;
    }
    let expected: Vec<f64> = cells
        .unmarked
        .iter()
        .chain(cells.marked.iter())
        .map(|p| p * n as f64)
        .collect();
    let chi = chi_square_gof(&observed, &expected)?;
    let gof = vec![GofTest {
        name: "skeleton_offspring_chi_square".into(),
        statistic: chi.statistic,
        p_value: chi.p_value,
        n,
    }];

    // the three one-step transition cells of the limit comparison
    let mut estimates = Vec::new();
    let named = [
        ("p_unmarked_one_branch", cells.unmarked.get(1), 0usize, 1usize),
        ("p_marked_no_branch", cells.marked.first(), 1, 0),
        ("p_unmarked_two_branches", cells.unmarked.get(2), 0, 2),
    ];
    for (name, oracle, xi, j) in named {
        if let Some(&oracle) = oracle {
            let count = observed[xi * (kmax + 1) + j];
            let p_hat = count as f64 / n as f64;
            estimates.push(Estimate::with_oracle(
                name,
                p_hat,
                binomial_se(p_hat.max(1.0 / n as f64), n),
                oracle,
                "skeleton_offspring_coefficients",
            ));
        }
    }
    Ok((estimates, gof, sampling, Some(regime), horizon, node_cap))
}

fn run_escape_time(
    experiment: &Experiment,
    law: &OffspringLaw,
    rule: &MarkingRule,
) -> Result<TargetOutput> {
    let regime = tau_and_regime(law, rule)?;
    if !regime.c.is_finite() || regime.via_threshold {
        return Err(Error::InvalidExperiment(
            "escape-time comparison needs a balanced regime (finite c)".into(),
        ));
    }
    let horizon = experiment.horizon.unwrap_or_else(|| default_horizon(regime.tau));
    let node_cap = experiment.node_cap.unwrap_or(DEFAULT_NODE_CAP);
    let budget = experiment.attempt_budget.unwrap_or(DEFAULT_ATTEMPT_BUDGET);
    let sim = TreeSimulator::new(law.clone(), rule.clone(), horizon, node_cap)?;
    let seed = experiment.seed;
    let tau = regime.tau;
    let (mut samples, sampling) = collect_conditioned(experiment.replicas, budget, |i| {
        let mut rng = replica_rng(seed, i);
        let out = sim.first_mark_outcome(&mut rng);
        if out.cap_hit {
            return Attempt::CapHit;
        }
        match out.first_mark_generation {
            // uniform jitter over one generation width makes the scaled
            // sample non-atomic for the continuous-CDF comparison
            Some(g) => Attempt::Accept((g as f64 + rng.random::<f64>()) * tau),
            None if out.alive_at_horizon => Attempt::Censor,
            None => Attempt::Reject,
        }
    })?;
    samples.sort_by(f64::total_cmp);
    let escape = EscapeLaw::new(regime.c, law.factorial_moment2())?;
    let ks = ks_test(&samples, |t| 1.0 - escape.tail_kappa(t).unwrap_or(1.0))?;
    let gof = vec![GofTest {
        name: "escape_time_ks".into(),
        statistic: ks.d,
        p_value: ks.p_value,
        n: samples.len() as u64,
    }];
    let (mean, se) = mean_and_se(&samples);
    let estimates = vec![Estimate::with_oracle(
        "mean_scaled_escape_time",
        mean,
        se,
        escape.mean_kappa(),
        "escape law mean -ln(1-lambda)/lambda",
    )];
    Ok((estimates, gof, sampling, Some(regime), horizon, node_cap))
}

fn run_skeleton_counts(
    experiment: &Experiment,
    law: &OffspringLaw,
    rule: &MarkingRule,
) -> Result<TargetOutput> {
    let regime = tau_and_regime(law, rule)?;
    let horizon = experiment.horizon.unwrap_or_else(|| default_horizon(regime.tau));
    let node_cap = experiment.node_cap.unwrap_or(DEFAULT_NODE_CAP);
    let budget = experiment.attempt_budget.unwrap_or(DEFAULT_ATTEMPT_BUDGET);
    let times = experiment
        .scaled_times
        .clone()
        .unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let sim = TreeSimulator::new(law.clone(), rule.clone(), horizon, node_cap)?;
    let seed = experiment.seed;
    let tau = regime.tau;
    let times_for_worker = times.clone();
    let (samples, sampling) = collect_conditioned(experiment.replicas, budget, move |i| {
        let mut rng = replica_rng(seed, i);
        let tree = sim.simulate(&mut rng);
        if tree.cap_hit {
            return Attempt::CapHit;
        }
        let skel = extract_skeleton(&tree, horizon);
        if skel.empty {
            return Attempt::Reject;
        }
        let counts: Vec<u32> = times_for_worker
            .iter()
            .map(|&t| {
                let g = (t / tau).floor() as usize;
                skel.generation_counts.get(g).copied().unwrap_or(0)
            })
            .collect();
        Attempt::Accept(counts)
    })?;

    // oracle: the limit binary birth-death process at the same times,
    // simulated on its own stream half-space
    let params = BirthDeathParams::with_unit_rate(regime.lambda)?;
    let n_oracle = experiment.replicas;
    let max_t = times.iter().copied().fold(0.0f64, f64::max) + 1e-9;
    let oracle_counts: Vec<Vec<u32>> = (0..n_oracle)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, ORACLE_STREAM_OFFSET + i);
            let path = simulate_y(&params, max_t, 1_000_000, &mut rng)
                .expect("t_end > 0");
            times
                .iter()
                .map(|&t| {
                    path.events
                        .iter()
                        .rev()
                        .find(|&&(et, _)| et <= t)
                        .map(|&(_, n)| n)
                        .unwrap_or(1)
                })
                .collect()
        })
        .collect();

    let mut estimates = Vec::new();
    for (ti, &t) in times.iter().enumerate() {
        let xs: Vec<f64> = samples.iter().map(|c| c[ti] as f64).collect();
        let ys: Vec<f64> = oracle_counts.iter().map(|c| c[ti] as f64).collect();
        let (mx, sx) = mean_and_se(&xs);
        let (my, sy) = mean_and_se(&ys);
        let combined_se = (sx * sx + sy * sy).sqrt();
        estimates.push(Estimate {
            name: format!("mean_skeleton_count_t{t}"),
            value: mx,
            se: sx,
            oracle: Some(my),
            oracle_source: Some(format!(
                "simulate_y mean (MC, se {sy:.3e}); analytic e^((2l-1)t) = {:.6}",
                ((2.0 * regime.lambda - 1.0) * t).exp()
            )),
            z_score: Some((mx - my).abs() / combined_se),
        });
    }
    Ok((estimates, vec![], sampling, Some(regime), horizon, node_cap))
}

fn run_leaf_count(
    experiment: &Experiment,
    law: &OffspringLaw,
    rule: &MarkingRule,
) -> Result<TargetOutput> {
    let regime = tau_and_regime(law, rule)?;
    let horizon = experiment.horizon.unwrap_or_else(|| default_horizon(regime.tau));
    let node_cap = experiment.node_cap.unwrap_or(DEFAULT_NODE_CAP);
    let budget = experiment.attempt_budget.unwrap_or(DEFAULT_ATTEMPT_BUDGET);
    let sim = TreeSimulator::new(law.clone(), rule.clone(), horizon, node_cap)?;
    let seed = experiment.seed;
    let (samples, sampling) = collect_conditioned(experiment.replicas, budget, |i| {
        let out = sim.marked_count_outcome(&mut replica_rng(seed, i));
        if out.cap_hit {
            return Attempt::CapHit;
        }
        if out.total_marked > 0 {
            Attempt::Accept(out.total_marked)
        } else if out.alive_at_horizon {
            Attempt::Censor
        } else {
            Attempt::Reject
        }
    })?;
    let n = samples.len() as u64;
    let oracle = crate::limit::leaf_count_pmf(3)?;
    let mut estimates = Vec::new();
    for w in 1..=3u32 {
        let count = samples.iter().filter(|&&s| s == w).count();
        let p_hat = count as f64 / n as f64;
        estimates.push(Estimate::with_oracle(
            &format!("p_marked_total_{w}"),
            p_hat,
            binomial_se(p_hat, n),
            oracle[(w - 1) as usize],
            "leaf_count_pmf",
        ));
    }
    Ok((estimates, vec![], sampling, Some(regime), horizon, node_cap))
}

fn run_sequential_q(experiment: &Experiment, model: &SequentialModel) -> Result<TargetOutput> {
    let nested = sequential_survival(model)?;
    let taus: Vec<f64> = nested.levels.iter().map(|l| l.tau).collect();
    let horizon = experiment
        .horizon
        .unwrap_or_else(|| default_horizon(taus[0]));
    // marks need the faster mutant clocks to settle before targets show
    let total_horizon = horizon + sequential_settle_window(&taus);
    let node_cap = experiment.node_cap.unwrap_or(DEFAULT_NODE_CAP);
    let n = experiment.replicas;
    let seed = experiment.seed;
    let (hits, cap_hits) = (0..n)
        .into_par_iter()
        .map(|i| {
            let out = simulate_sequential_escape(
                model,
                horizon,
                total_horizon,
                node_cap,
                true,
                &mut replica_rng(seed, i),
            );
            (out.nonempty() as u64, out.cap_hit as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let p_hat = hits as f64 / n as f64;
    let estimates = vec![Estimate::with_oracle(
        "wild_skeleton_survival",
        p_hat,
        binomial_se(p_hat, n),
        nested.overall_q,
        "sequential_survival (nested exact fixed points)",
    )];
    let sampling = SamplingStats {
        attempts: n,
        accepted: n,
        acceptance_rate: 1.0,
        rejected: 0,
        censored: 0,
        cap_hits,
    };
    Ok((estimates, vec![], sampling, None, horizon, node_cap))
}

/// Writes `<out_dir>/<experiment-id>/<timestamp>.json` and `.csv`; returns
/// both paths. The CSV is the flat summary
/// `experiment_id,target,estimate,se,oracle,z,ks_d,p,n,seed`, one row per
/// estimate (the KS columns repeat the record's first test, if any).
pub fn persist(record: &ResultRecord, out_dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let dir = out_dir.as_ref().join(&record.experiment_id);
    std::fs::create_dir_all(&dir)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
    let json_path = dir.join(format!("{stamp}.json"));
    let csv_path = dir.join(format!("{stamp}.csv"));
    std::fs::write(&json_path, serde_json::to_string_pretty(record)?)?;
    let mut csv = String::from("experiment_id,target,estimate,se,oracle,z,ks_d,p,n,seed\n");
    let (ks_d, ks_p) = record
        .gof_tests
        .first()
        .map(|g| (g.statistic.to_string(), g.p_value.to_string()))
        .unwrap_or_default();
    for e in &record.estimates {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            record.experiment_id,
            record.target,
            e.value,
            e.se,
            e.oracle.map(|v| v.to_string()).unwrap_or_default(),
            e.z_score.map(|v| v.to_string()).unwrap_or_default(),
            ks_d,
            ks_p,
            record.sampling.accepted,
            record.config.seed,
        ));
    }
    std::fs::write(&csv_path, csv)?;
    Ok((json_path, csv_path))
}
