//! Generating-function machinery for marked branching processes.
//!
//! The central object is the joint probability generating function
//! `f(r, s) = sum_k p(k) s^k (1 - A(k) + A(k) r)` which tracks a particle's
//! mark indicator through `r` and its offspring count through `s`. The
//! skeleton (marked lineages plus surviving lineages) is empty exactly when
//! the root is unmarked and every daughter subtree has an empty skeleton, so
//! the non-extinction probability `Q` of the skeleton solves
//! `1 - Q = f(0, 1 - Q)`.

use crate::error::{Error, Result};
use crate::offspring::{MarkingRule, OffspringLaw};

/// Absolute tolerance of the fixed-point bisection.
pub const FIXED_POINT_TOL: f64 = 1e-12;

const MAX_BISECTION_ITERS: usize = 200;

fn check_unit(what: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain { what, value: v });
    }
    Ok(())
}

/// Joint pgf `f(r, s) = sum_k p(k) s^k (1 - A(k) + A(k) r)` for
/// `r, s in [0, 1]`.
pub fn joint_pgf(law: &OffspringLaw, rule: &MarkingRule, r: f64, s: f64) -> Result<f64> {
    check_unit("joint pgf argument r", r)?;
    check_unit("joint pgf argument s", s)?;
    rule.check_alignment(law)?;
    let mut acc = 0.0;
    let mut sk = 1.0;
    for (&p, &a) in law.pmf().iter().zip(rule.a()) {
        acc += p * sk * (1.0 - a + a * r);
        sk *= s;
    }
    Ok(acc)
}

/// Exact skeleton survival probability.
///
/// Returns the survival probability `Q in [0, 1]` solving
/// `Q = 1 - f(0, 1 - Q)`, i.e. `1 - Q` is the smallest fixed point of the
/// monotone convex map `x -> f(0, x)` on `[0, 1]`, located by bisection to
/// absolute tolerance [`FIXED_POINT_TOL`].
///
/// With `include_surviving_lineages` (the skeleton of marked lineages plus
/// lineages that survive the horizon), an unmarked supercritical process
/// still has `Q > 0`. With the flag off, the skeleton consists of marked
/// lineages only, so `mu = 0` forces `Q = 0`.
pub fn solve_q_exact(
    law: &OffspringLaw,
    rule: &MarkingRule,
    include_surviving_lineages: bool,
) -> Result<f64> {
    rule.check_alignment(law)?;
    let mu = rule.mu();
    if !include_surviving_lineages && mu == 0.0 {
        return Ok(0.0);
    }
    // Substituting x = 1 - y and factoring x^k - 1 = -(1 - x) s_k(x) with
    // s_k(x) = 1 + x + ... + x^(k-1) turns h(x) = f(0, x) - x into
    //     h(1 - y) = y (1 - G(1 - y)) - mu,
    // G(x) = sum_k p(k)(1 - A(k)) s_k(x). This form has no catastrophic
    // cancellation near x = 1, where the survival-side root lives.
    let g_sum = |x: f64| -> f64 {
        let mut acc = 0.0;
        let mut s = 0.0; // s_k(x)
        let mut xk = 1.0; // x^k
        for (&p, &a) in law.pmf().iter().zip(rule.a()) {
            acc += p * (1.0 - a) * s;
            s += xk;
            xk *= x;
        }
        acc
    };
    let bisect = |f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64| -> Result<f64> {
        // invariant: f(lo) < 0 < f(hi)
        let mut iters = 0;
        while hi - lo > FIXED_POINT_TOL {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            iters += 1;
            if iters > MAX_BISECTION_ITERS {
                return Err(Error::NoConvergence("fixed-point bisection"));
            }
        }
        Ok(0.5 * (lo + hi))
    };
    if mu == 0.0 {
        // y (1 - G(1 - y)) = 0: the survival probability is the root of the
        // increasing factor w(y) = 1 - G(1 - y), with w(0) = -epsilon.
        let w = |y: f64| 1.0 - g_sum(1.0 - y);
        if w(0.0) >= 0.0 {
            return Ok(0.0); // critical or subcritical: extinction is certain
        }
        if w(1.0) <= 0.0 {
            return Ok(1.0); // p(0) = 0: no lineage ever dies
        }
        return bisect(&w, 0.0, 1.0);
    }
    let bh = |y: f64| y * (1.0 - g_sum(1.0 - y)) - mu;
    // bh(0) = -mu < 0 and bh(1) = p(0)(1 - A(0)); a nonpositive value at 1
    // means an empty skeleton is impossible.
    if bh(1.0) <= 0.0 {
        return Ok(1.0);
    }
    bisect(&bh, 0.0, 1.0)
}

/// Joint pgf of `(mark indicator, skeleton offspring count)` of the root,
/// conditioned on a non-empty skeleton:
/// `g(r, s) = [f(r, s q + 1 - q) - (1 - q)] / q` where
/// `q = solve_q_exact(law, rule)`.
pub fn skeleton_offspring_pgf(
    law: &OffspringLaw,
    rule: &MarkingRule,
    q: f64,
    r: f64,
    s: f64,
) -> Result<f64> {
    check_unit("skeleton pgf argument r", r)?;
    check_unit("skeleton pgf argument s", s)?;
    if !(q > 0.0) {
        return Err(Error::NullConditioning);
    }
    check_unit("skeleton survival probability q", q)?;
    let f = joint_pgf(law, rule, r, s * q + 1.0 - q)?;
    Ok((f - (1.0 - q)) / q)
}

/// Exact conditional law of `(mark indicator xi, skeleton offspring X(1))`
/// given a non-empty skeleton.
///
/// `unmarked[j] = P(xi = 0, X(1) = j | non-empty)` and likewise `marked[j]`,
/// for `j = 0 ..= max_count`. Computed by binomial expansion of the joint
/// pgf, exact for finite-support laws:
/// `P(xi, X(1) = j) = sum_k w_k C(k, j) q^j (1-q)^(k-j)` with
/// `w_k = p(k) A(k)` or `p(k)(1 - A(k))`, minus the empty-skeleton mass in
/// the `(xi = 0, j = 0)` cell.
#[derive(Debug, Clone)]
pub struct SkeletonOffspringLaw {
    pub unmarked: Vec<f64>,
    pub marked: Vec<f64>,
}

pub fn skeleton_offspring_coefficients(
    law: &OffspringLaw,
    rule: &MarkingRule,
    q: f64,
    max_count: usize,
) -> Result<SkeletonOffspringLaw> {
    if !(q > 0.0) {
        return Err(Error::NullConditioning);
    }
    check_unit("skeleton survival probability q", q)?;
    rule.check_alignment(law)?;
    let mut unmarked = vec![0.0; max_count + 1];
    let mut marked = vec![0.0; max_count + 1];
    for (k, (&p, &a)) in law.pmf().iter().zip(rule.a()).enumerate() {
        for j in 0..=k.min(max_count) {
            let term = binomial(k, j) * q.powi(j as i32) * (1.0 - q).powi((k - j) as i32);
            unmarked[j] += p * (1.0 - a) * term;
            marked[j] += p * a * term;
        }
    }
    // remove the empty-skeleton event (root unmarked, no skeleton offspring)
    unmarked[0] -= 1.0 - q;
    if unmarked[0].abs() < 1e-12 {
        // f(0, 1-q) = 1-q at the fixed point; clear the rounding residue.
        unmarked[0] = 0.0;
    }
    for v in unmarked.iter_mut().chain(marked.iter_mut()) {
        *v /= q;
    }
    Ok(SkeletonOffspringLaw { unmarked, marked })
}

/// Binomial coefficient as f64; exact for the small supports used here.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

impl SkeletonOffspringLaw {
    /// Total mass; 1 when `max_count` covers the law's support.
    pub fn total(&self) -> f64 {
        self.unmarked.iter().chain(self.marked.iter()).sum()
    }
}

/// Second-order Taylor defect of the joint pgf near `s = 1`:
/// `[1 - f(r, 1-u) - mu (1-r) - u (1 + eps - mu M (1-r))] / (u^2 / 2)`.
///
/// As `u` decreases to 0 this converges to
/// `-sum_k k(k-1) p(k) (1 - A(k) + A(k) r)`, which approaches `-sigma^2`
/// when the marking cross term is small.
pub fn second_order_defect(law: &OffspringLaw, rule: &MarkingRule, r: f64, u: f64) -> Result<f64> {
    check_unit("defect argument r", r)?;
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain {
            what: "defect argument u",
            value: u,
        });
    }
    let f = joint_pgf(law, rule, r, 1.0 - u)?;
    let mu = rule.mu();
    let m = rule.marked_mean();
    let eps = law.epsilon();
    let linear = mu * (1.0 - r) + u * (1.0 + eps - mu * m * (1.0 - r));
    Ok((1.0 - f - linear) / (u * u / 2.0))
}
