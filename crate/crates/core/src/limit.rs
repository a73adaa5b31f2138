//! Limit objects: the binary birth-death process, its extinction
//! probability, the closed-form law of the scaled escape time, and the
//! leaf-count law of the critical limit skeleton.
//!
//! Time conventions. The escape-time tail lives naturally on the
//! `kappa`-scaled clock (`kappa = sqrt(c^2 + 2 sigma^2)`), where it equals
//! `Q(t) = 1 / (lambda + (1 - lambda) e^t)`. The density `psi` is stated on
//! the `sqrt(mu)`-scaled clock; the two are related by `t_kappa = kappa *
//! t_sqrt_mu`. Every public function names the clock it uses.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the binary birth-death limit process: particles live
/// `Exp(rate)` lifetimes and at death leave two children with probability
/// `lambda`, none otherwise.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BirthDeathParams {
    pub lambda: f64,
    pub rate: f64,
}

impl BirthDeathParams {
    pub fn new(lambda: f64, rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
            return Err(Error::Domain {
                what: "split probability lambda",
                value: lambda,
            });
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Domain {
                what: "lifetime rate",
                value: rate,
            });
        }
        Ok(Self { lambda, rate })
    }

    /// Unit-rate lifetimes, the natural time normalization.
    pub fn with_unit_rate(lambda: f64) -> Result<Self> {
        Self::new(lambda, 1.0)
    }
}

/// Eventual extinction probability `min(1, (1 - lambda)/lambda)`; 1 when
/// `lambda = 0`.
pub fn extinction_probability(params: &BirthDeathParams) -> f64 {
    if params.lambda == 0.0 {
        1.0
    } else {
        ((1.0 - params.lambda) / params.lambda).min(1.0)
    }
}

/// One simulated path of the population count: `events[i] = (t_i, n_i)`
/// with the initial state `(0, 1)` first. `exploded` is set when the
/// population reached `cap` and the path was truncated there.
#[derive(Debug, Clone)]
pub struct YPath {
    pub events: Vec<(f64, u32)>,
    pub exploded: bool,
}

impl YPath {
    pub fn final_population(&self) -> u32 {
        self.events.last().map(|&(_, n)| n).unwrap_or(1)
    }
    pub fn extinct(&self) -> bool {
        self.final_population() == 0 && !self.exploded
    }
}

fn exp_draw<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    // inverse transform on (0, 1]; rng.random::<f64>() is in [0, 1)
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Event-driven simulation of the population count up to `t_end`.
///
/// Lifetimes are memoryless, so the count path is the Markov jump process:
/// with `n` alive the next death happens after `Exp(n * rate)` and is a
/// binary split with probability `lambda`. Deterministic given the RNG
/// state.
pub fn simulate_y<R: Rng>(
    params: &BirthDeathParams,
    t_end: f64,
    cap: u32,
    rng: &mut R,
) -> Result<YPath> {
    if !(t_end > 0.0) {
        return Err(Error::Domain {
            what: "t_end",
            value: t_end,
        });
    }
    let mut events = vec![(0.0, 1u32)];
    let mut t = 0.0;
    let mut n = 1u32;
    let mut exploded = false;
    loop {
        if n == 0 {
            break;
        }
        if n >= cap {
            exploded = true;
            break;
        }
        t += exp_draw(rng, n as f64 * params.rate);
        if t > t_end {
            break;
        }
        if rng.random::<f64>() < params.lambda {
            n += 1;
        } else {
            n -= 1;
        }
        events.push((t, n));
    }
    Ok(YPath { events, exploded })
}

/// Terminal state of a path simulated until extinction, explosion past
/// `cap`, or the time limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YOutcome {
    Extinct,
    AliveAtTEnd,
    Exploded,
}

/// Lightweight outcome-only simulation (no path storage).
pub fn y_outcome<R: Rng>(params: &BirthDeathParams, t_end: f64, cap: u32, rng: &mut R) -> YOutcome {
    let mut t = 0.0;
    let mut n = 1u32;
    loop {
        if n == 0 {
            return YOutcome::Extinct;
        }
        if n >= cap {
            return YOutcome::Exploded;
        }
        t += exp_draw(rng, n as f64 * params.rate);
        if t > t_end {
            return YOutcome::AliveAtTEnd;
        }
        if rng.random::<f64>() < params.lambda {
            n += 1;
        } else {
            n -= 1;
        }
    }
}

/// Time of the first death that leaves no children (the first tip of the
/// family tree). Returns `None` if no tip occurred within `max_events`
/// jumps, which happens with probability zero for `lambda < 1`.
pub fn first_tip_time<R: Rng>(
    params: &BirthDeathParams,
    max_events: u64,
    rng: &mut R,
) -> Option<f64> {
    let mut t = 0.0;
    let mut n = 1u64;
    for _ in 0..max_events {
        t += exp_draw(rng, n as f64 * params.rate);
        if rng.random::<f64>() < params.lambda {
            n += 1;
        } else {
            return Some(t);
        }
    }
    None
}

/// Population mean at time `t`, `E[Y(t)] = exp((2 lambda - 1) rate t)`.
pub fn population_mean(params: &BirthDeathParams, t: f64) -> f64 {
    ((2.0 * params.lambda - 1.0) * params.rate * t).exp()
}

/// Closed-form law of the scaled escape time (time to the first tip of the
/// limit skeleton) for balance constant `c` and variance `sigma2`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EscapeLaw {
    pub c: f64,
    pub sigma2: f64,
}

impl EscapeLaw {
    pub fn new(c: f64, sigma2: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::Domain { what: "c", value: c });
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Domain {
                what: "sigma2",
                value: sigma2,
            });
        }
        Ok(Self { c, sigma2 })
    }

    pub fn kappa(&self) -> f64 {
        (self.c * self.c + 2.0 * self.sigma2).sqrt()
    }

    /// Split probability of the limit skeleton,
    /// `lambda = 1/2 + c / (2 kappa)`.
    pub fn lambda(&self) -> f64 {
        0.5 + self.c / (2.0 * self.kappa())
    }

    /// Tail `Q(t) = 1 / (lambda + (1 - lambda) e^t)` on the kappa-scaled
    /// clock; `Q(0) = 1`.
    pub fn tail_kappa(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain {
                what: "escape tail time",
                value: t,
            });
        }
        let lambda = self.lambda();
        Ok(1.0 / (lambda + (1.0 - lambda) * t.exp()))
    }

    /// Tail on the sqrt(mu)-scaled clock, `tail_kappa(kappa * t)`.
    pub fn tail_sqrt_mu(&self, t: f64) -> Result<f64> {
        self.tail_kappa(self.kappa() * t)
    }

    /// Density `psi(t)` of the escape time on the sqrt(mu)-scaled clock:
    /// `psi(t) = 2 (kappa - c) e^(t kappa) /
    ///           (1 + c/kappa + (1 - c/kappa) e^(t kappa))^2`.
    pub fn density_sqrt_mu(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain {
                what: "escape density time",
                value: t,
            });
        }
        let kappa = self.kappa();
        let e = (t * kappa).exp();
        let denom = 1.0 + self.c / kappa + (1.0 - self.c / kappa) * e;
        Ok(2.0 * (kappa - self.c) * e / (denom * denom))
    }

    /// Location of the density maximum on the sqrt(mu)-scaled clock:
    /// `kappa^-1 ln(1 + 2c/(kappa - c))` for `c > 0`; 0 otherwise (the
    /// density is non-increasing when `c <= 0`).
    pub fn mode_sqrt_mu(&self) -> f64 {
        if self.c <= 0.0 {
            return 0.0;
        }
        let kappa = self.kappa();
        (1.0 + 2.0 * self.c / (kappa - self.c)).ln() / kappa
    }

    /// Most likely escape generation for marking probability `mu`:
    /// the density mode translated back to the generation clock.
    pub fn most_likely_escape_generation(&self, mu: f64) -> Result<f64> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain {
                what: "marking probability mu",
                value: mu,
            });
        }
        Ok(self.mode_sqrt_mu() / mu.sqrt())
    }

    /// Converts a generation count to the kappa-scaled clock:
    /// `t = gen * sqrt(mu) * kappa`.
    pub fn generation_to_kappa_time(&self, generation: f64, mu: f64) -> f64 {
        generation * mu.sqrt() * self.kappa()
    }

    /// Mean of the escape time on the kappa-scaled clock,
    /// `-ln(1 - lambda) / lambda` (1 when `lambda = 0`).
    pub fn mean_kappa(&self) -> f64 {
        let lambda = self.lambda();
        if lambda == 0.0 {
            1.0
        } else {
            -(1.0 - lambda).ln() / lambda
        }
    }

    /// Samples `(t, psi(t), tail(t))` rows on the sqrt(mu)-scaled clock over
    /// a uniform grid with `steps` intervals.
    pub fn curve(&self, t_max: f64, steps: usize) -> Result<Vec<CurveRow>> {
        if !(t_max > 0.0) {
            return Err(Error::Domain {
                what: "curve t_max",
                value: t_max,
            });
        }
        if steps == 0 {
            return Err(Error::Domain {
                what: "curve steps",
                value: 0.0,
            });
        }
        let mut rows = Vec::with_capacity(steps + 1);
        for i in 0..=steps {
            let t = t_max * i as f64 / steps as f64;
            rows.push(CurveRow {
                t,
                psi: self.density_sqrt_mu(t)?,
                tail: self.tail_sqrt_mu(t)?,
            });
        }
        Ok(rows)
    }
}

/// One row of the escape-law curve on the sqrt(mu)-scaled clock.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurveRow {
    pub t: f64,
    pub psi: f64,
    pub tail: f64,
}

/// Writes curve rows as CSV with header `t_sqrt_mu,psi,tail`.
pub fn write_curve_csv<W: std::io::Write>(rows: &[CurveRow], mut w: W) -> Result<()> {
    writeln!(w, "t_sqrt_mu,psi,tail")?;
    for row in rows {
        writeln!(w, "{:.17e},{:.17e},{:.17e}", row.t, row.psi, row.tail)?;
    }
    Ok(())
}

/// Leaf-count law of the critical limit skeleton: probabilities
/// `P(W = 1), ..., P(W = n_max)` as the series coefficients of
/// `1 - sqrt(1 - s)`, computed by the stable ratio recurrence
/// `w_{n+1} = w_n (2n - 1) / (2 (n + 1))`, `w_1 = 1/2`.
pub fn leaf_count_pmf(n_max: usize) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(Error::Domain {
            what: "leaf count n_max",
            value: 0.0,
        });
    }
    let mut w = Vec::with_capacity(n_max);
    let mut wn = 0.5;
    w.push(wn);
    for n in 1..n_max {
        wn *= (2.0 * n as f64 - 1.0) / (2.0 * (n as f64 + 1.0));
        w.push(wn);
    }
    Ok(w)
}

/// Same law via the defining branching recursion
/// `w_n = 1/2 * 1{n = 1} + 1/2 * sum_{i + j = n} w_i w_j`
/// (the skeleton root either dies marked or splits into two independent
/// copies). Quadratic in `n_max`; used as the independent cross-check of
/// [`leaf_count_pmf`].
pub fn leaf_count_pmf_by_recursion(n_max: usize) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(Error::Domain {
            what: "leaf count n_max",
            value: 0.0,
        });
    }
    let mut w = vec![0.0; n_max];
    w[0] = 0.5;
    for n in 2..=n_max {
        let mut conv = 0.0;
        for i in 1..n {
            conv += w[i - 1] * w[n - i - 1];
        }
        w[n - 1] = 0.5 * conv;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn extinction_probability_closed_forms() {
        let p = |l| BirthDeathParams::with_unit_rate(l).unwrap();
        assert_eq!(extinction_probability(&p(0.0)), 1.0);
        assert_eq!(extinction_probability(&p(0.5)), 1.0);
        assert_eq!(extinction_probability(&p(1.0)), 0.0);
        assert_relative_eq!(extinction_probability(&p(0.75)), 1.0 / 3.0, epsilon = 1e-15);
        // lambda derived from c = 0.5, sigma = 1: lambda = 2/3, extinction 1/2,
        // matching (kappa - c)/(kappa + c) = (1.5 - 0.5)/(1.5 + 0.5)
        assert_relative_eq!(
            extinction_probability(&p(2.0 / 3.0)),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pure_death_single_event() {
        let params = BirthDeathParams::with_unit_rate(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let path = simulate_y(&params, 100.0, 1000, &mut rng).unwrap();
        assert_eq!(path.events.len(), 2);
        assert!(path.extinct());
        // mean death time = 1
        let n = 100_000;
        let mut acc = 0.0;
        for i in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            rng.set_stream(i);
            acc += first_tip_time(&params, 10, &mut rng).unwrap();
        }
        let mean = acc / n as f64;
        // SE of Exp(1) mean is 1/sqrt(n)
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn yule_mean_growth() {
        // E[Y(1)] = e for the pure-birth case; also the martingale check
        // E[Y(t) e^{-(2 lambda - 1) t}] = 1.
        let params = BirthDeathParams::with_unit_rate(1.0).unwrap();
        let n = 40_000;
        let t = 1.0;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for i in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            rng.set_stream(i);
            let path = simulate_y(&params, t, 100_000, &mut rng).unwrap();
            let y = path.final_population() as f64;
            acc += y;
            acc2 += y * y;
        }
        let mean = acc / n as f64;
        let var = acc2 / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - std::f64::consts::E).abs() < 3.0 * se,
            "mean {mean} vs e, se {se}"
        );
        assert!((mean / population_mean(&params, t) - 1.0).abs() < 3.0 * se / mean.abs());
    }

    #[test]
    fn supercritical_extinction_frequency() {
        let params = BirthDeathParams::with_unit_rate(0.75).unwrap();
        let n = 40_000u64;
        let mut extinct = 0u64;
        for i in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            rng.set_stream(i);
            if y_outcome(&params, 20.0, 1000, &mut rng) == YOutcome::Extinct {
                extinct += 1;
            }
        }
        let p_hat = extinct as f64 / n as f64;
        let se = (p_hat * (1.0 - p_hat) / n as f64).sqrt();
        assert!(
            (p_hat - 1.0 / 3.0).abs() < 3.0 * se,
            "extinction {p_hat} vs 1/3, se {se}"
        );
    }

    #[test]
    fn escape_tail_boundary_and_ode() {
        for &c in &[-0.5, 0.0, 0.5] {
            let law = EscapeLaw::new(c, 1.0).unwrap();
            assert_relative_eq!(law.tail_kappa(0.0).unwrap(), 1.0, epsilon = 1e-15);
            // Q'(t) + Q(t) - lambda Q(t)^2 = 0, checked by central difference
            let h = 1e-5;
            for &t in &[0.1, 0.5, 1.0, 2.0, 5.0] {
                let qp = (law.tail_kappa(t + h).unwrap() - law.tail_kappa(t - h).unwrap())
                    / (2.0 * h);
                let q = law.tail_kappa(t).unwrap();
                let resid = qp + q - law.lambda() * q * q;
                assert!(resid.abs() < 1e-8, "ODE residual {resid} at c={c}, t={t}");
            }
        }
    }

    #[test]
    fn escape_density_closed_form_critical() {
        // c = 0, sigma = 1: psi(t) = 2 sqrt(2) e^(sqrt(2) t) (1 + e^(sqrt(2) t))^-2
        let law = EscapeLaw::new(0.0, 1.0).unwrap();
        for &t in &[0.0, 0.3, 1.0, 2.5] {
            let e = (2f64.sqrt() * t).exp();
            let expect = 2.0 * 2f64.sqrt() * e / ((1.0 + e) * (1.0 + e));
            assert_relative_eq!(law.density_sqrt_mu(t).unwrap(), expect, epsilon = 1e-13);
        }
        assert_relative_eq!(
            law.density_sqrt_mu(0.0).unwrap(),
            2f64.sqrt() / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn escape_density_matches_tail_derivative() {
        // -d/dt tail_sqrt_mu = psi on a grid, to 1e-6 by central differences
        for &c in &[-0.5, 0.0, 0.5] {
            let law = EscapeLaw::new(c, 1.0).unwrap();
            let h = 1e-6;
            for i in 1..60 {
                let t = 0.1 * i as f64;
                let d = -(law.tail_sqrt_mu(t + h).unwrap() - law.tail_sqrt_mu(t - h).unwrap())
                    / (2.0 * h);
                assert!(
                    (d - law.density_sqrt_mu(t).unwrap()).abs() < 1e-6,
                    "density/tail mismatch at c={c}, t={t}"
                );
            }
        }
    }

    #[test]
    fn escape_mode() {
        let law = EscapeLaw::new(0.5, 1.0).unwrap();
        // kappa = 1.5, mode = (2/3) ln 2
        assert_relative_eq!(
            law.mode_sqrt_mu(),
            2.0 / 3.0 * 2f64.ln(),
            epsilon = 1e-15
        );
        // most likely escape generation = mode / sqrt(mu)
        assert_relative_eq!(
            law.most_likely_escape_generation(1e-4).unwrap(),
            law.mode_sqrt_mu() * 100.0,
            epsilon = 1e-12
        );
        assert!(law.most_likely_escape_generation(0.0).is_err());
        // clock converters agree: t_kappa = kappa * t_sqrt_mu
        let gen = 37.0;
        assert_relative_eq!(
            law.generation_to_kappa_time(gen, 1e-4),
            gen * 1e-2 * law.kappa(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            law.tail_sqrt_mu(0.8).unwrap(),
            law.tail_kappa(0.8 * law.kappa()).unwrap(),
            epsilon = 1e-15
        );
        assert_eq!(EscapeLaw::new(0.0, 1.0).unwrap().mode_sqrt_mu(), 0.0);
        assert_eq!(EscapeLaw::new(-0.5, 1.0).unwrap().mode_sqrt_mu(), 0.0);
        // the density is strictly decreasing for c < 0
        let sub = EscapeLaw::new(-0.5, 1.0).unwrap();
        let mut prev = sub.density_sqrt_mu(0.0).unwrap();
        for i in 1..100 {
            let v = sub.density_sqrt_mu(0.05 * i as f64).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn density_normalizes() {
        // Simpson quadrature of psi over [0, 40/kappa] >= 1 - 1e-6
        for &c in &[-0.5, 0.0, 0.5] {
            let law = EscapeLaw::new(c, 1.0).unwrap();
            let t_max = 40.0 / law.kappa();
            let n = 4000; // even
            let h = t_max / n as f64;
            let mut acc = law.density_sqrt_mu(0.0).unwrap() + law.density_sqrt_mu(t_max).unwrap();
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * law.density_sqrt_mu(h * i as f64).unwrap();
            }
            let integral = acc * h / 3.0;
            assert!(
                (integral - 1.0).abs() <= 1e-6,
                "integral {integral} at c={c}"
            );
        }
    }

    #[test]
    fn first_tip_matches_escape_tail_mean() {
        // E[T] = -ln(1 - lambda)/lambda in natural (kappa) units
        let law = EscapeLaw::new(0.0, 1.0).unwrap();
        assert_relative_eq!(law.mean_kappa(), 2.0 * 2f64.ln(), epsilon = 1e-13);
        let params = BirthDeathParams::with_unit_rate(0.5).unwrap();
        let n = 50_000;
        let mut acc = 0.0;
        for i in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(31);
            rng.set_stream(i);
            acc += first_tip_time(&params, 1_000_000, &mut rng).unwrap();
        }
        let mean = acc / n as f64;
        assert!((mean - 2.0 * 2f64.ln()).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn leaf_count_series_values() {
        let w = leaf_count_pmf(4).unwrap();
        assert_relative_eq!(w[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(w[1], 1.0 / 8.0, epsilon = 1e-15);
        assert_relative_eq!(w[2], 1.0 / 16.0, epsilon = 1e-15);
        assert_relative_eq!(w[3], 5.0 / 128.0, epsilon = 1e-15);
    }

    #[test]
    fn leaf_count_series_matches_recursion() {
        let series = leaf_count_pmf(200).unwrap();
        let rec = leaf_count_pmf_by_recursion(200).unwrap();
        for (a, b) in series.iter().zip(&rec) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn leaf_count_partial_sums() {
        // Partial sums increase to 1 with remainder ~ 1/sqrt(pi n): the
        // pgf equals 1 at s = 1 and the coefficients decay like n^{-3/2}.
        let n = 1_000_000;
        let w = leaf_count_pmf(n).unwrap();
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &v in &w {
            acc += v;
            assert!(acc > prev && acc <= 1.0 + 1e-12);
            prev = acc;
        }
        let remainder = 1.0 - acc;
        let predicted = 1.0 / (std::f64::consts::PI * n as f64).sqrt();
        assert!(
            (remainder / predicted - 1.0).abs() < 0.02,
            "remainder {remainder} vs predicted {predicted}"
        );
    }
}
