//! Mutation-induced marking structures.
//!
//! Binomial mutation: a wild-type mother produces `k + l` daughters by the
//! total-offspring law `q`, each daughter mutating independently with
//! probability `pi`. Focusing on the wild type turns this into a marked
//! single-type process: the wild offspring law is the thinned
//! `p(k) = sum_l q(k + l) C(k+l, l) (1-pi)^k pi^l` and a mother is marked
//! exactly when at least one daughter mutated, which pins the marking table
//! through `p(k)(1 - A(k)) = q(k)(1 - pi)^k`.
//!
//! Sequential mutation chains a fixed number of such steps toward an
//! absorbing target type. The survival probability of the wild-type
//! skeleton follows from nesting exact fixed points: a mutant daughter is
//! "successful" with the survival probability of the next level, so the
//! wild type sees an effective mutation probability `pi * Q_next`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offspring::{MarkingRule, OffspringLaw};
use crate::pgf::{binomial, solve_q_exact};

/// A binomial mutation model and its derived marked single-type view.
#[derive(Debug, Clone)]
pub struct BinomialMutationModel {
    /// Total-offspring law `q` (wild plus mutant daughters).
    pub total_law: OffspringLaw,
    /// Per-daughter mutation probability.
    pub pi: f64,
    /// Wild-type offspring law `p`.
    pub wild_law: OffspringLaw,
    /// Mutation-induced marking rule on the wild law.
    pub rule: MarkingRule,
}

impl BinomialMutationModel {
    /// `eta = mean(q) - 1`, the drift of the total-offspring law.
    pub fn eta(&self) -> f64 {
        self.total_law.epsilon()
    }

    /// Exact survival probability of the wild-type skeleton.
    pub fn survival(&self) -> Result<f64> {
        solve_q_exact(&self.wild_law, &self.rule, true)
    }
}

/// Derives the wild-type law and marking rule of a binomial mutation model
/// by exact summation over the finite support of `q`.
///
/// `support_cap` bounds the wild support and must cover the support of `q`
/// (wild counts never exceed total counts, so the sum is exact).
pub fn derive_binomial(
    total_law: &OffspringLaw,
    pi: f64,
    support_cap: usize,
) -> Result<BinomialMutationModel> {
    derive_thinned_marked(total_law, pi, 1.0, support_cap)
}

/// General thinning derivation: each daughter mutates with probability `pi`
/// and a mutant is "successful" with probability `success_prob`; a mother is
/// marked when at least one daughter is a successful mutant. With
/// `success_prob = 1` this is the plain binomial mutation model; with
/// `success_prob = Q` of the next level it is the exact wild-type view of a
/// sequential chain: per daughter, wild w.p. `1 - pi`, failed mutant w.p.
/// `pi (1 - Q)` (gone from the wild line, no mark), successful mutant w.p.
/// `pi Q`.
pub fn derive_thinned_marked(
    total_law: &OffspringLaw,
    pi: f64,
    success_prob: f64,
    support_cap: usize,
) -> Result<BinomialMutationModel> {
    if !pi.is_finite() || !(0.0 < pi && pi < 1.0) {
        return Err(Error::Domain {
            what: "mutation probability pi",
            value: pi,
        });
    }
    if !success_prob.is_finite() || !(0.0 < success_prob && success_prob <= 1.0) {
        return Err(Error::Domain {
            what: "mutant success probability",
            value: success_prob,
        });
    }
    let support = total_law.support_len();
    if support_cap + 1 < support {
        return Err(Error::Domain {
            what: "support cap (must cover the total law)",
            value: support_cap as f64,
        });
    }
    let q = total_law.pmf();
    // wild counts thin by pi; the no-mark part additionally requires every
    // mutant daughter to fail, weight pi (1 - success) per mutant
    let pi_fail = pi * (1.0 - success_prob);
    let mut p = vec![0.0; support];
    let mut p_no_mark = vec![0.0; support];
    for k in 0..support {
        let wild_weight = (1.0 - pi).powi(k as i32);
        let mut acc = 0.0;
        let mut acc_no_mark = 0.0;
        for l in 0..support - k {
            let shape = q[k + l] * binomial(k + l, l) * wild_weight;
            acc += shape * pi.powi(l as i32);
            acc_no_mark += shape * pi_fail.powi(l as i32);
        }
        p[k] = acc;
        p_no_mark[k] = acc_no_mark;
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Error::NoConvergence("binomial thinning row sum"));
    }
    // repair the tiny fp drift so the law constructor's 1e-12 check holds
    for v in &mut p {
        *v /= sum;
    }
    let mut a = vec![0.0; support];
    for k in 0..support {
        if p[k] > 0.0 {
            a[k] = (1.0 - p_no_mark[k] / p[k]).clamp(0.0, 1.0);
        } else {
            a[k] = 0.0;
        }
    }
    let wild_law = OffspringLaw::from_pmf(p)?;
    let rule = MarkingRule::from_table(a, &wild_law)?;
    Ok(BinomialMutationModel {
        total_law: total_law.clone(),
        pi,
        wild_law,
        rule,
    })
}

/// Marking probability by the thinning identity,
/// `mu = sum_k q(k) (1 - (1 - pi)^k)`. Equals `rule.mu()` up to rounding;
/// kept as the independent route for consistency checks.
pub fn thinning_mu(total_law: &OffspringLaw, pi: f64) -> f64 {
    total_law
        .pmf()
        .iter()
        .enumerate()
        .map(|(k, &qk)| qk * (1.0 - (1.0 - pi).powi(k as i32)))
        .sum()
}

/// Per-member diagnostics of a binomial-mutation family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThinningLimitRow {
    pub pi: f64,
    pub mu: f64,
    pub mu_over_pi: f64,
    pub marked_mean: f64,
    pub eta: f64,
    pub epsilon_wild: f64,
    /// `pi (1 + eta) - mu`, nonnegative and at most `pi^2 sum k^2 q(k)`.
    pub thinning_gap: f64,
    pub thinning_gap_bound: f64,
    /// `eta - epsilon + mu M`, nonnegative and at most `pi sum k^2 q(k)`.
    pub drift_gap: f64,
    pub drift_gap_bound: f64,
    pub wild_factorial_moment2: f64,
}

/// Family-level report for the rare-mutation limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThinningLimitReport {
    pub sigma2_target: f64,
    pub rows: Vec<ThinningLimitRow>,
    /// `mu/pi` approaches 1 monotonically along the family.
    pub mu_ratio_monotone: bool,
    /// `M` approaches `sigma2_target` monotonically along the family.
    pub marked_mean_monotone: bool,
    /// Both sandwich bounds hold for every member.
    pub bounds_hold: bool,
}

/// Checks the rare-mutation limit trends over a family ordered by
/// decreasing `pi`: `mu/pi -> 1`, `M -> sigma^2`, and the two sandwich
/// bounds on the marking probability and the wild drift.
pub fn check_thinning_limits(
    family: &[BinomialMutationModel],
    sigma2_target: f64,
) -> Result<ThinningLimitReport> {
    if family.is_empty() {
        return Err(Error::InvalidExperiment("empty family".into()));
    }
    if family.windows(2).any(|w| w[0].pi <= w[1].pi) {
        return Err(Error::InvalidExperiment(
            "family must be ordered by decreasing pi".into(),
        ));
    }
    let mut rows = Vec::with_capacity(family.len());
    for m in family {
        let mu = m.rule.mu();
        let eta = m.eta();
        let k2 = m.total_law.second_moment();
        rows.push(ThinningLimitRow {
            pi: m.pi,
            mu,
            mu_over_pi: mu / m.pi,
            marked_mean: m.rule.marked_mean(),
            eta,
            epsilon_wild: m.wild_law.epsilon(),
            thinning_gap: m.pi * (1.0 + eta) - mu,
            thinning_gap_bound: m.pi * m.pi * k2,
            drift_gap: eta - m.wild_law.epsilon() + mu * m.rule.marked_mean(),
            drift_gap_bound: m.pi * k2,
            wild_factorial_moment2: m.wild_law.factorial_moment2(),
        });
    }
    let mu_ratio_monotone = rows
        .windows(2)
        .all(|w| (w[1].mu_over_pi - 1.0).abs() <= (w[0].mu_over_pi - 1.0).abs());
    let marked_mean_monotone = rows.windows(2).all(|w| {
        (w[1].marked_mean - sigma2_target).abs() <= (w[0].marked_mean - sigma2_target).abs()
    });
    // allow rounding slack at the 1e-12 scale of the derivation
    let bounds_hold = rows.iter().all(|r| {
        r.thinning_gap >= -1e-12
            && r.thinning_gap <= r.thinning_gap_bound + 1e-12
            && r.drift_gap >= -1e-12
            && r.drift_gap <= r.drift_gap_bound + 1e-12
    });
    Ok(ThinningLimitReport {
        sigma2_target,
        rows,
        mu_ratio_monotone,
        marked_mean_monotone,
        bounds_hold,
    })
}

/// One level of a sequential mutation chain: the level's total-offspring
/// law and its per-daughter mutation probability toward the next type.
#[derive(Debug, Clone)]
pub struct SequentialLevel {
    pub law: OffspringLaw,
    pub mutation_prob: f64,
}

/// An irreversible mutation chain, wild type first; daughters of the last
/// level's mutations are the absorbing target type.
#[derive(Debug, Clone)]
pub struct SequentialModel {
    pub levels: Vec<SequentialLevel>,
}

impl SequentialModel {
    pub fn new(levels: Vec<SequentialLevel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidExperiment("empty level list".into()));
        }
        for (i, level) in levels.iter().enumerate() {
            if !(0.0 < level.mutation_prob && level.mutation_prob < 1.0) {
                return Err(Error::InvalidFamilyMember {
                    index: i,
                    reason: format!(
                        "mutation probability {} not in (0, 1)",
                        level.mutation_prob
                    ),
                });
            }
        }
        Ok(Self { levels })
    }

    /// A chain of `b` critical binary levels with common mutation
    /// probability `pi`.
    pub fn critical_binary_chain(b: usize, pi: f64) -> Result<Self> {
        Self::uniform_binary_chain(b, 0.0, pi)
    }

    /// A chain of `b` binary levels with common drift `eta` and mutation
    /// probability `pi`.
    pub fn uniform_binary_chain(b: usize, eta: f64, pi: f64) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidExperiment("chain length must be >= 1".into()));
        }
        let levels = (0..b)
            .map(|_| {
                Ok(SequentialLevel {
                    law: OffspringLaw::binary(eta)?,
                    mutation_prob: pi,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(levels)
    }

    /// Two-level chain in the separated-time-scale regime: wild drift
    /// `eta = c1 * pi^(3/4)`, intermediate drift `eta_hat = c2 * sqrt(pi)`,
    /// intermediate mutation probability `alpha * pi`.
    pub fn two_level_separated(consts: &TwoLevelConstants, pi: f64) -> Result<Self> {
        Self::new(vec![
            SequentialLevel {
                law: OffspringLaw::binary(consts.c1 * pi.powf(0.75))?,
                mutation_prob: pi,
            },
            SequentialLevel {
                law: OffspringLaw::binary(consts.c2 * pi.sqrt())?,
                mutation_prob: consts.alpha * pi,
            },
        ])
    }

    /// Two-level chain in the shared-time-scale regime (`gamma` in (1, 2)):
    /// wild drift `c1 * pi`, intermediate drift `-beta * pi^(gamma - 1)`,
    /// intermediate mutation probability `alpha * pi^gamma`. Both skeleton
    /// clocks run at order `1/pi`; no closed-form survival oracle exists, so
    /// this preset is checked against simulation only.
    pub fn two_level_shared_scale(
        c1: f64,
        beta: f64,
        alpha: f64,
        gamma: f64,
        pi: f64,
    ) -> Result<Self> {
        if !(1.0 < gamma && gamma < 2.0) {
            return Err(Error::Domain {
                what: "gamma (must be in (1, 2))",
                value: gamma,
            });
        }
        if !(beta > 0.0) {
            return Err(Error::Domain {
                what: "beta (must be positive)",
                value: beta,
            });
        }
        Self::new(vec![
            SequentialLevel {
                law: OffspringLaw::binary(c1 * pi)?,
                mutation_prob: pi,
            },
            SequentialLevel {
                law: OffspringLaw::binary(-beta * pi.powf(gamma - 1.0))?,
                mutation_prob: alpha * pi.powf(gamma),
            },
        ])
    }
}

/// Regime constants of the separated-time-scale two-level chain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TwoLevelConstants {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    pub sigma2_wild: f64,
    pub sigma2_intermediate: f64,
}

impl Default for TwoLevelConstants {
    fn default() -> Self {
        Self {
            c1: 0.0,
            c2: 0.0,
            alpha: 1.0,
            sigma2_wild: 1.0,
            sigma2_intermediate: 1.0,
        }
    }
}

/// Closed-form asymptotic survival of the separated two-level chain:
/// `Q ~ pi^(3/4) (c1 s2 + sqrt(c1^2 s2^2 + 2 s^2 (c2 + sqrt(c2^2 + 2 a s2^2))))
///      / (s^2 s2)`.
pub fn two_level_survival_asymptotic(consts: &TwoLevelConstants, pi: f64) -> f64 {
    let s2w = consts.sigma2_wild;
    let s2i = consts.sigma2_intermediate;
    let si = s2i.sqrt();
    let inner = consts.c2 + (consts.c2 * consts.c2 + 2.0 * consts.alpha * s2i).sqrt();
    let num = consts.c1 * si + (consts.c1 * consts.c1 * s2i + 2.0 * s2w * inner).sqrt();
    pi.powf(0.75) * num / (s2w * si)
}

/// Generation-to-limit-time scales `(tau_wild, tau_intermediate)` of the
/// separated two-level chain. The wild clock is the slower one:
/// `tau_wild / tau_intermediate -> 0` as `pi -> 0`.
pub fn two_level_time_scales(consts: &TwoLevelConstants, pi: f64) -> (f64, f64) {
    let s2i = consts.sigma2_intermediate;
    let inner = consts.c2 + (consts.c2 * consts.c2 + 2.0 * consts.alpha * s2i).sqrt();
    let tau_intermediate = pi.sqrt() * (consts.c2 * consts.c2 + 2.0 * consts.alpha * s2i).sqrt();
    let tau_wild = pi.powf(0.75)
        * (consts.c1 * consts.c1 + 2.0 * consts.sigma2_wild / s2i * inner).sqrt();
    (tau_wild, tau_intermediate)
}

/// Survival of one level in the nested evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSurvival {
    /// Level index, wild type = 0.
    pub level: usize,
    /// Effective successful-mutation probability seen by this level,
    /// `pi_level * Q_{level+1}`.
    pub effective_pi: f64,
    /// Exact fixed-point survival of this level's skeleton.
    pub q: f64,
    /// Generation-to-time scale `sqrt(eps^2 + 2 sigma^2 mu)` of this level.
    pub tau: f64,
}

/// Result of the nested exact evaluation of a sequential chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequentialSurvival {
    /// Per-level survivals, wild type first.
    pub levels: Vec<LevelSurvival>,
    /// Wild-type skeleton survival: the overall escape probability.
    pub overall_q: f64,
    /// Predicted power-law exponent `1 - 2^-b` of `Q` in `pi` for a
    /// critical chain of length `b`.
    pub predicted_exponent: f64,
}

/// Evaluates the chain bottom-up by nested exact fixed points: the deepest
/// level is a plain binomial mutation model; each level above keeps its own
/// offspring thinning `pi` but a mutant daughter only marks the mother when
/// her line succeeds, which happens with the next level's survival
/// probability `Q_next`.
pub fn sequential_survival(model: &SequentialModel) -> Result<SequentialSurvival> {
    let b = model.levels.len();
    let mut out = vec![None; b];
    let mut q_next = 1.0;
    for (idx, level) in model.levels.iter().enumerate().rev() {
        let effective_pi = level.mutation_prob * q_next;
        if !(effective_pi > 0.0) {
            return Err(Error::NullConditioning);
        }
        let derived =
            derive_thinned_marked(&level.law, level.mutation_prob, q_next, level.law.support_len())?;
        let q = solve_q_exact(&derived.wild_law, &derived.rule, true)?;
        let eps = derived.wild_law.epsilon();
        let mu = derived.rule.mu();
        let tau = (eps * eps + 2.0 * derived.wild_law.factorial_moment2() * mu).sqrt();
        out[idx] = Some(LevelSurvival {
            level: idx,
            effective_pi,
            q,
            tau,
        });
        q_next = q;
    }
    let levels: Vec<LevelSurvival> = out.into_iter().map(Option::unwrap).collect();
    let overall_q = levels[0].q;
    Ok(SequentialSurvival {
        levels,
        overall_q,
        predicted_exponent: 1.0 - 0.5f64.powi(b as i32),
    })
}

/// Least-squares slope of `log Q` against `log pi`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::TooFewSamples {
            got: points.len(),
            min: 2,
        });
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn deterministic_two_children_split() {
        // q(2) = 1, pi = 1/2: four equally likely daughter-type outcomes
        let q = OffspringLaw::from_pmf(vec![0.0, 0.0, 1.0]).unwrap();
        let m = derive_binomial(&q, 0.5, 2).unwrap();
        assert_relative_eq!(m.wild_law.pmf()[0], 0.25, epsilon = 1e-14);
        assert_relative_eq!(m.wild_law.pmf()[1], 0.5, epsilon = 1e-14);
        assert_relative_eq!(m.wild_law.pmf()[2], 0.25, epsilon = 1e-14);
        assert_relative_eq!(m.rule.a()[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(m.rule.a()[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(m.rule.a()[2], 0.0, epsilon = 1e-14);
        assert_relative_eq!(m.rule.mu(), 0.75, epsilon = 1e-14);
    }

    #[test]
    fn poisson_closed_forms() {
        // Mutant thinning of a Poisson count is an independent Poisson, so
        // mu = 1 - exp(-pi) and A(k) is constant, giving M = 1 - pi.
        let q = OffspringLaw::poisson(1.0).unwrap();
        let m = derive_binomial(&q, 0.01, q.support_len()).unwrap();
        assert_relative_eq!(m.rule.mu(), 1.0 - (-0.01f64).exp(), epsilon = 1e-11);
        assert_relative_eq!(m.rule.mu(), 0.0099502, epsilon = 1e-7);
        assert_relative_eq!(m.rule.marked_mean(), 0.99, epsilon = 1e-9);
    }

    #[test]
    fn splitting_identities() {
        let q = OffspringLaw::poisson(1.0).unwrap();
        for &pi in &[0.3, 0.05, 1e-3] {
            let m = derive_binomial(&q, pi, q.support_len()).unwrap();
            // p(k)(1 - A(k)) = q(k)(1 - pi)^k
            for k in 0..q.support_len() {
                let lhs = m.wild_law.pmf()[k] * (1.0 - m.rule.a()[k]);
                let rhs = q.pmf()[k] * (1.0 - pi).powi(k as i32);
                assert!((lhs - rhs).abs() < 1e-12, "split identity at k={k}");
            }
            // mu via the rule equals the thinning expression
            assert!((m.rule.mu() - thinning_mu(&q, pi)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_pi() {
        let q = OffspringLaw::poisson(1.0).unwrap();
        assert!(derive_binomial(&q, 0.0, 40).is_err());
        assert!(derive_binomial(&q, 1.0, 40).is_err());
        assert!(derive_binomial(&q, -0.5, 40).is_err());
    }

    #[test]
    fn mu_over_pi_approaches_total_mean() {
        // mu/pi -> 1 + eta monotonically as pi -> 0 with q fixed
        let q = OffspringLaw::binary(0.04).unwrap();
        let mut prev_gap = f64::INFINITY;
        for &pi in &[1e-2, 1e-3, 1e-4] {
            let m = derive_binomial(&q, pi, q.support_len()).unwrap();
            let gap = (m.rule.mu() / pi - (1.0 + m.eta())).abs();
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
    }

    #[test]
    fn thinning_limits_report() {
        let q = OffspringLaw::poisson(1.0).unwrap();
        let family: Vec<_> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&pi| derive_binomial(&q, pi, q.support_len()).unwrap())
            .collect();
        let report = check_thinning_limits(&family, 1.0).unwrap();
        assert!(report.mu_ratio_monotone);
        assert!(report.marked_mean_monotone);
        assert!(report.bounds_hold);
        assert_relative_eq!(report.rows[0].marked_mean, 0.99, epsilon = 1e-9);
        assert_relative_eq!(report.rows[1].marked_mean, 0.999, epsilon = 1e-9);
        assert_relative_eq!(report.rows[2].marked_mean, 0.9999, epsilon = 1e-9);
    }

    #[test]
    fn thinning_limits_binary_family() {
        let q = OffspringLaw::binary(0.0).unwrap();
        let family: Vec<_> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&pi| derive_binomial(&q, pi, q.support_len()).unwrap())
            .collect();
        let report = check_thinning_limits(&family, 1.0).unwrap();
        // M = (1 - pi)/(1 - pi/2) by direct summation over {0, 2}
        for row in &report.rows {
            let expect = (1.0 - row.pi) / (1.0 - row.pi / 2.0);
            assert_relative_eq!(row.marked_mean, expect, epsilon = 1e-12);
        }
        assert!(report.marked_mean_monotone);
        assert!(report.bounds_hold);
    }

    #[test]
    fn thinning_limits_requires_decreasing_pi() {
        let q = OffspringLaw::poisson(1.0).unwrap();
        let family: Vec<_> = [1e-4, 1e-3]
            .iter()
            .map(|&pi| derive_binomial(&q, pi, q.support_len()).unwrap())
            .collect();
        assert!(check_thinning_limits(&family, 1.0).is_err());
    }

    #[test]
    fn thinned_marked_generalizes_binomial() {
        let q = OffspringLaw::poisson(1.0).unwrap();
        let one_step = derive_binomial(&q, 0.05, q.support_len()).unwrap();
        let general = derive_thinned_marked(&q, 0.05, 1.0, q.support_len()).unwrap();
        assert_eq!(one_step.wild_law.pmf(), general.wild_law.pmf());
        assert_eq!(one_step.rule.a(), general.rule.a());
        // marking probability is the pi * success thinning of the total law
        for &s in &[1.0, 0.4, 0.05] {
            let m = derive_thinned_marked(&q, 0.05, s, q.support_len()).unwrap();
            let expect: f64 = q
                .pmf()
                .iter()
                .enumerate()
                .map(|(k, &qk)| qk * (1.0 - (1.0 - 0.05 * s).powi(k as i32)))
                .sum();
            assert!((m.rule.mu() - expect).abs() < 1e-12);
            // the wild offspring law itself is independent of the success
            // probability: mutants leave the wild line either way
            assert_eq!(m.wild_law.pmf(), general.wild_law.pmf());
        }
    }

    #[test]
    fn two_level_fixed_point_closed_form() {
        // critical binary chain at pi = 0.05: the wild no-mark pgf is
        // phi((1 - pi) x + pi (1 - q_hat)), giving a solvable quadratic
        let pi = 0.05;
        let model = SequentialModel::critical_binary_chain(2, pi).unwrap();
        let seq = sequential_survival(&model).unwrap();
        let q_hat = seq.levels[1].q;
        let a = pi * (1.0 - q_hat);
        // x = 1/2 + 1/2 ((1-pi) x + a)^2, smaller root
        let c2 = 0.5 * (1.0 - pi) * (1.0 - pi);
        let c1 = (1.0 - pi) * a - 1.0;
        let c0 = 0.5 + 0.5 * a * a;
        let x = (-c1 - (c1 * c1 - 4.0 * c2 * c0).sqrt()) / (2.0 * c2);
        assert!((seq.overall_q - (1.0 - x)).abs() < 1e-10);
    }

    #[test]
    fn single_level_chain_is_plain_binomial() {
        let model = SequentialModel::critical_binary_chain(1, 1e-3).unwrap();
        let seq = sequential_survival(&model).unwrap();
        let q = OffspringLaw::binary(0.0).unwrap();
        let direct = derive_binomial(&q, 1e-3, q.support_len())
            .unwrap()
            .survival()
            .unwrap();
        assert_relative_eq!(seq.overall_q, direct, epsilon = 1e-12);
        assert_relative_eq!(seq.predicted_exponent, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn two_level_asymptotic_constant() {
        // c1 = c2 = 0, alpha = sigma = sigma2 = 1: Q ~ 2^(3/4) pi^(3/4)
        let consts = TwoLevelConstants::default();
        let pi = 1e-4f64;
        let expect = 2f64.powf(0.75) * pi.powf(0.75);
        assert_relative_eq!(
            two_level_survival_asymptotic(&consts, pi),
            expect,
            epsilon = 1e-12
        );
        assert_relative_eq!(2f64.powf(0.75), 1.6817928, epsilon = 1e-7);
    }

    #[test]
    fn nested_fixed_point_approaches_two_level_asymptotic() {
        let consts = TwoLevelConstants::default();
        let mut prev_gap = f64::INFINITY;
        for &pi in &[1e-3, 1e-4, 1e-5] {
            let model = SequentialModel::critical_binary_chain(2, pi).unwrap();
            let seq = sequential_survival(&model).unwrap();
            let asym = two_level_survival_asymptotic(&consts, pi);
            let gap = (seq.overall_q / asym - 1.0).abs();
            assert!(gap < prev_gap, "ratio must approach 1: gap {gap} at pi={pi}");
            prev_gap = gap;
        }
    }

    #[test]
    fn critical_chain_exponents() {
        for (b, expect) in [(2usize, 0.75), (3usize, 0.875)] {
            let points: Vec<(f64, f64)> = [1e-3, 1e-4, 1e-5]
                .iter()
                .map(|&pi| {
                    let model = SequentialModel::critical_binary_chain(b, pi).unwrap();
                    (pi, sequential_survival(&model).unwrap().overall_q)
                })
                .collect();
            let slope = log_log_slope(&points).unwrap();
            assert!(
                (slope - expect).abs() < 0.05,
                "slope {slope} vs {expect} for b={b}"
            );
        }
    }

    #[test]
    fn subcritical_chain_exponent() {
        // fixed eta < 0: Q ~ const * pi^b
        let points: Vec<(f64, f64)> = [1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&pi| {
                let model = SequentialModel::uniform_binary_chain(2, -0.1, pi).unwrap();
                (pi, sequential_survival(&model).unwrap().overall_q)
            })
            .collect();
        let slope = log_log_slope(&points).unwrap();
        assert!((slope - 2.0).abs() < 0.05, "slope {slope} vs 2");
    }

    #[test]
    fn time_scale_separation() {
        let consts = TwoLevelConstants::default();
        let mut prev = f64::INFINITY;
        for &pi in &[1e-3, 1e-4, 1e-5, 1e-6] {
            let (tau_wild, tau_mid) = two_level_time_scales(&consts, pi);
            let ratio = tau_wild / tau_mid;
            assert!(ratio < prev, "wild/intermediate clock ratio must decrease");
            prev = ratio;
        }
        // with all constants 1 the ratio is (2 pi)^(1/4)
        let (tw, tm) = two_level_time_scales(&consts, 1e-4);
        assert_relative_eq!(tw / tm, (2.0 * 1e-4f64).powf(0.25), epsilon = 1e-10);
    }

    #[test]
    fn shared_scale_preset_validates() {
        assert!(SequentialModel::two_level_shared_scale(0.0, 1.0, 1.0, 1.5, 1e-3).is_ok());
        assert!(SequentialModel::two_level_shared_scale(0.0, 1.0, 1.0, 2.5, 1e-3).is_err());
        assert!(SequentialModel::two_level_shared_scale(0.0, -1.0, 1.0, 1.5, 1e-3).is_err());
    }

    #[test]
    fn empty_chain_rejected() {
        assert!(SequentialModel::new(vec![]).is_err());
    }
}
