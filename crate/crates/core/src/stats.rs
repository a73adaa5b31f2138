//! Goodness-of-fit tests and standard errors for the Monte Carlo harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum sample size accepted by [`ks_test`].
pub const KS_MIN_SAMPLES: usize = 8;

/// Terms kept in the asymptotic Kolmogorov series.
const KOLMOGOROV_TERMS: usize = 100;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample Kolmogorov-Smirnov test of sorted `samples` against a
/// continuous CDF. Rejects unsorted input and fewer than
/// [`KS_MIN_SAMPLES`] samples.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            min: KS_MIN_SAMPLES,
        });
    }
    if samples.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::UnsortedSamples);
    }
    let n = samples.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / nf).abs());
        d = d.max((f - (i + 1) as f64 / nf).abs());
    }
    Ok(KsResult {
        d,
        p_value: kolmogorov_p(nf.sqrt() * d),
        n,
    })
}

/// Tail of the Kolmogorov distribution,
/// `P(sqrt(n) D > z) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 z^2)`,
/// truncated at 100 terms and clamped to [0, 1].
pub fn kolmogorov_p(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    let mut acc = 0.0;
    for j in 1..=KOLMOGOROV_TERMS {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * z * z).exp();
        if j % 2 == 1 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Number of cells after pooling low-expectation cells.
    pub cells: usize,
}

/// Minimum expected count per chi-square cell; smaller cells are pooled.
pub const CHI_SQUARE_MIN_EXPECTED: f64 = 5.0;

/// Pearson chi-square goodness-of-fit of observed counts against expected
/// counts. Cells with expected count below [`CHI_SQUARE_MIN_EXPECTED`] are
/// pooled into one remainder cell first; if the remainder is still too
/// small it is merged into the smallest regular cell.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::InvalidExperiment(
            "chi-square needs matching non-empty observed/expected".into(),
        ));
    }
    if expected.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
        return Err(Error::InvalidExperiment(
            "chi-square expected counts must be nonnegative".into(),
        ));
    }
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut pooled = (0.0f64, 0.0f64);
    for (&o, &e) in observed.iter().zip(expected) {
        if e < CHI_SQUARE_MIN_EXPECTED {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 {
        if pooled.1 >= CHI_SQUARE_MIN_EXPECTED || cells.is_empty() {
            cells.push(pooled);
        } else {
            let (idx, _) = cells
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .unwrap();
            cells[idx].0 += pooled.0;
            cells[idx].1 += pooled.1;
        }
    }
    if cells.len() < 2 {
        return Err(Error::InvalidExperiment(
            "chi-square needs at least two cells after pooling".into(),
        ));
    }
    let statistic: f64 = cells
        .iter()
        .map(|&(o, e)| {
            let d = o - e;
            d * d / e
        })
        .sum();
    let df = cells.len() - 1;
    let p_value = statrs::function::gamma::gamma_ur(df as f64 / 2.0, statistic / 2.0);
    Ok(ChiSquareResult {
        statistic,
        degrees_of_freedom: df,
        p_value,
        cells: cells.len(),
    })
}

/// Standard error of a binomial proportion estimate.
pub fn binomial_se(p_hat: f64, n: u64) -> f64 {
    (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

/// Sample mean and its standard error (sample SD over sqrt(n)).
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
