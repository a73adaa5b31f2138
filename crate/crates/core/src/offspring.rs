//! Offspring laws and marking rules.
//!
//! An [`OffspringLaw`] is a finite-support probability mass function on
//! {0, 1, 2, ...} with cached first and second factorial moments. A
//! [`MarkingRule`] attaches a marking probability `A(k)` to every offspring
//! count `k` of a law, together with the derived totals: the overall marking
//! probability `mu = sum_k p(k) A(k)` and the mean offspring number of
//! marked particles `M = mu^-1 sum_k k p(k) A(k)`.

use crate::error::{Error, Result};

/// Tolerance for pmf normalization and cached-moment consistency.
pub const PMF_TOL: f64 = 1e-12;

/// Parametric constructors drop the tail once its total mass is below this
/// cutoff, then renormalize.
pub const TAIL_MASS_CUTOFF: f64 = 1e-14;

/// A finite-support offspring distribution with cached moments.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    pmf: Vec<f64>,
    mean: f64,
    factorial_moment2: f64,
}

impl OffspringLaw {
    /// Builds a law from an explicit pmf `p(0), p(1), ..., p(K)`.
    ///
    /// Rejects empty input, entries outside [0, 1], non-finite entries, and
    /// a total mass off 1 by more than [`PMF_TOL`].
    pub fn from_pmf(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidLaw("empty pmf".into()));
        }
        for (k, &p) in pmf.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidLaw(format!("p({k}) = {p} not in [0, 1]")));
            }
        }
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > PMF_TOL {
            return Err(Error::InvalidLaw(format!("pmf sums to {sum}, expected 1")));
        }
        let mean = pmf.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
        let factorial_moment2 = pmf
            .iter()
            .enumerate()
            .map(|(k, &p)| (k * k.saturating_sub(1)) as f64 * p)
            .sum();
        Ok(Self {
            pmf,
            mean,
            factorial_moment2,
        })
    }

    /// Binary law on {0, 2} with mean `1 + epsilon`:
    /// `p(0) = (1 - epsilon)/2`, `p(2) = (1 + epsilon)/2`.
    pub fn binary(epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || !(-1.0..=1.0).contains(&epsilon) {
            return Err(Error::Domain {
                what: "binary law epsilon",
                value: epsilon,
            });
        }
        Self::from_pmf(vec![(1.0 - epsilon) / 2.0, 0.0, (1.0 + epsilon) / 2.0])
    }

    /// Poisson law truncated once the remaining tail mass falls below
    /// [`TAIL_MASS_CUTOFF`], then renormalized.
    pub fn poisson(mean: f64) -> Result<Self> {
        if !mean.is_finite() || mean <= 0.0 {
            return Err(Error::Domain {
                what: "poisson mean",
                value: mean,
            });
        }
        let mut pmf = Vec::new();
        let mut term = (-mean).exp();
        let mut cum = 0.0;
        let mut k = 0usize;
        loop {
            pmf.push(term);
            cum += term;
            if 1.0 - cum <= TAIL_MASS_CUTOFF && k as f64 > mean {
                break;
            }
            k += 1;
            term *= mean / k as f64;
            if k > 10_000 {
                return Err(Error::NoConvergence("poisson truncation"));
            }
        }
        for p in &mut pmf {
            *p /= cum;
        }
        Self::from_pmf(pmf)
    }

    /// Geometric law `p(k) = (1 - s) s^k` with mean `s/(1-s) = mean`,
    /// truncated at tail mass [`TAIL_MASS_CUTOFF`] and renormalized.
    pub fn geometric(mean: f64) -> Result<Self> {
        if !mean.is_finite() || mean <= 0.0 {
            return Err(Error::Domain {
                what: "geometric mean",
                value: mean,
            });
        }
        let s = mean / (1.0 + mean);
        // tail beyond K is s^(K+1)
        let k_max = (TAIL_MASS_CUTOFF.ln() / s.ln()).ceil() as usize;
        let mut pmf: Vec<f64> = (0..=k_max).map(|k| (1.0 - s) * s.powi(k as i32)).collect();
        let cum: f64 = pmf.iter().sum();
        for p in &mut pmf {
            *p /= cum;
        }
        Self::from_pmf(pmf)
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Number of pmf entries, i.e. max offspring count + 1.
    pub fn support_len(&self) -> usize {
        self.pmf.len()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Deviation of the mean from criticality, `mean - 1`.
    pub fn epsilon(&self) -> f64 {
        self.mean - 1.0
    }

    /// Second factorial moment `sum_k k(k-1) p(k)`.
    pub fn factorial_moment2(&self) -> f64 {
        self.factorial_moment2
    }

    /// Second moment `sum_k k^2 p(k)`.
    pub fn second_moment(&self) -> f64 {
        self.factorial_moment2 + self.mean
    }

    /// Truncated second moment `sum_{k >= n} k^2 p(k)`, the uniform
    /// integrability proxy.
    pub fn tail_second_moment(&self, n: usize) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .skip(n)
            .map(|(k, &p)| (k * k) as f64 * p)
            .sum()
    }

    /// Probability generating function `sum_k p(k) s^k`.
    pub fn pgf(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        let mut sk = 1.0;
        for &p in &self.pmf {
            acc += p * sk;
            sk *= s;
        }
        acc
    }

    /// Cumulative distribution table used by samplers.
    pub(crate) fn cumulative(&self) -> Vec<f64> {
        let mut cum = Vec::with_capacity(self.pmf.len());
        let mut acc = 0.0;
        for &p in &self.pmf {
            acc += p;
            cum.push(acc);
        }
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        cum
    }
}

/// Per-offspring-count marking probabilities aligned with a law's support.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkingRule {
    a: Vec<f64>,
    mu: f64,
    marked_mean: f64,
}

impl MarkingRule {
    /// No marking: `A(k) = 0` for all `k`.
    pub fn none(law: &OffspringLaw) -> Self {
        Self {
            a: vec![0.0; law.support_len()],
            mu: 0.0,
            marked_mean: 0.0,
        }
    }

    /// Constant marking probability `A(k) = value` for all `k`.
    pub fn constant(value: f64, law: &OffspringLaw) -> Result<Self> {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidMarking(format!(
                "constant marking probability {value} not in [0, 1]"
            )));
        }
        Self::from_table(vec![value; law.support_len()], law)
    }

    /// Explicit table `A(0), ..., A(K)`; must match the law's support length.
    pub fn from_table(a: Vec<f64>, law: &OffspringLaw) -> Result<Self> {
        if a.len() != law.support_len() {
            return Err(Error::InvalidMarking(format!(
                "marking table has {} entries, law support has {}",
                a.len(),
                law.support_len()
            )));
        }
        for (k, &v) in a.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidMarking(format!(
                    "A({k}) = {v} not in [0, 1]"
                )));
            }
        }
        let mu: f64 = a
            .iter()
            .zip(law.pmf())
            .map(|(&ak, &pk)| pk * ak)
            .sum();
        let weighted: f64 = a
            .iter()
            .zip(law.pmf())
            .enumerate()
            .map(|(k, (&ak, &pk))| k as f64 * pk * ak)
            .sum();
        // M is only ever consumed multiplied by mu, so 0 is the safe value
        // for the unmarked case.
        let marked_mean = if mu > 0.0 { weighted / mu } else { 0.0 };
        Ok(Self {
            a,
            mu,
            marked_mean,
        })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Total marking probability `mu = sum_k p(k) A(k)`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Mean offspring number of marked particles,
    /// `M = mu^-1 sum_k k p(k) A(k)` (0 when `mu = 0`).
    pub fn marked_mean(&self) -> f64 {
        self.marked_mean
    }

    /// Cross term `sum_k k(k-1) p(k) A(k)`; vanishes in the near-critical
    /// rare-marking limit.
    pub fn cross_term(&self, law: &OffspringLaw) -> f64 {
        self.a
            .iter()
            .zip(law.pmf())
            .enumerate()
            .map(|(k, (&ak, &pk))| (k * k.saturating_sub(1)) as f64 * pk * ak)
            .sum()
    }

    pub(crate) fn check_alignment(&self, law: &OffspringLaw) -> Result<()> {
        if self.a.len() != law.support_len() {
            return Err(Error::InvalidMarking(format!(
                "marking table has {} entries, law support has {}",
                self.a.len(),
                law.support_len()
            )));
        }
        Ok(())
    }
}

/// Per-member diagnostics produced by [`validate_family`].
#[derive(Debug, Clone)]
pub struct MemberDiagnostics {
    pub index: usize,
    pub epsilon: f64,
    pub factorial_moment2: f64,
    /// `|sum_k k(k-1) p(k) - sigma_target^2|`
    pub sigma2_abs_dev: f64,
    /// `sum_k k(k-1) p(k) A(k)`, the vanishing cross term.
    pub cross_term: f64,
    pub mu: f64,
    pub marked_mean: f64,
    pub flags: Vec<String>,
}

/// Family-level validation report: near-criticality diagnostics per member
/// plus the uniform-integrability proxy over a grid of truncation points.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub sigma2_target: f64,
    pub members: Vec<MemberDiagnostics>,
    /// `(n, sup_m sum_{k >= n} k^2 p_m(k))` rows.
    pub ui_proxy: Vec<(usize, f64)>,
}

/// Checks a family of (law, rule) pairs against the near-critical,
/// rare-marking conditions: reports per-member `epsilon`, the deviation of
/// the second factorial moment from `sigma2_target`, the marking cross term,
/// and the shared uniform-integrability proxy.
pub fn validate_family(
    members: &[(OffspringLaw, MarkingRule)],
    sigma2_target: f64,
) -> Result<ValidationReport> {
    if members.is_empty() {
        return Err(Error::InvalidExperiment("empty family".into()));
    }
    if !(sigma2_target > 0.0) {
        return Err(Error::Domain {
            what: "sigma2 target",
            value: sigma2_target,
        });
    }
    let mut diags = Vec::with_capacity(members.len());
    for (index, (law, rule)) in members.iter().enumerate() {
        rule.check_alignment(law)
            .map_err(|e| Error::InvalidFamilyMember {
                index,
                reason: e.to_string(),
            })?;
        let mut flags = Vec::new();
        if law.factorial_moment2() <= 0.0 {
            flags.push("second factorial moment is zero".into());
        }
        if rule.mu() == 0.0 && law.epsilon() <= 0.0 {
            flags.push("unmarked and not supercritical: skeleton is empty a.s.".into());
        }
        diags.push(MemberDiagnostics {
            index,
            epsilon: law.epsilon(),
            factorial_moment2: law.factorial_moment2(),
            sigma2_abs_dev: (law.factorial_moment2() - sigma2_target).abs(),
            cross_term: rule.cross_term(law),
            mu: rule.mu(),
            marked_mean: rule.marked_mean(),
            flags,
        });
    }
    let max_support = members
        .iter()
        .map(|(law, _)| law.support_len())
        .max()
        .unwrap_or(1);
    let mut ui_proxy = Vec::new();
    let mut n = 1usize;
    while n <= max_support {
        let sup = members
            .iter()
            .map(|(law, _)| law.tail_second_moment(n))
            .fold(0.0f64, f64::max);
        ui_proxy.push((n, sup));
        n *= 2;
    }
    Ok(ValidationReport {
        sigma2_target,
        members: diags,
        ui_proxy,
    })
}
