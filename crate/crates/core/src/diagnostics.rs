//! Chain summaries: autocorrelation, effective sample size and equal-tail
//! credible intervals.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autocorrelation {
    /// `rho[k]` for lags `0..=max_lag`.
    pub rho: Vec<f64>,
    /// The chain is constant, so lags beyond zero are undefined and reported
    /// as zero.
    pub degenerate: bool,
}

/// Sample autocorrelation function up to `max_lag`.
pub fn autocorrelation(chain: &[f64], max_lag: usize) -> Result<Autocorrelation> {
    let n = chain.len();
    if n <= max_lag {
        return Err(Error::InvalidInput(format!(
            "chain of length {n} is too short for lag {max_lag}"
        )));
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = chain.iter().map(|x| x - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 || !denom.is_finite() {
        let mut rho = vec![0.0; max_lag + 1];
        rho[0] = 1.0;
        return Ok(Autocorrelation {
            rho,
            degenerate: true,
        });
    }
    let rho = (0..=max_lag)
        .map(|k| {
            let num: f64 = dev[..n - k].iter().zip(&dev[k..]).map(|(a, b)| a * b).sum();
            num / denom
        })
        .collect();
    Ok(Autocorrelation {
        rho,
        degenerate: false,
    })
}

/// Effective sample size `n / (1 + 2 sum rho_k)`, summing until the first
/// negative autocorrelation. `None` for a constant chain.
pub fn effective_sample_size(chain: &[f64]) -> Option<f64> {
    let n = chain.len();
    if n < 2 {
        return None;
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = chain.iter().map(|x| x - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    let mut tail = 0.0;
    for k in 1..n {
        let rho = dev[..n - k]
            .iter()
            .zip(&dev[k..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / denom;
        if rho < 0.0 {
            break;
        }
        tail += rho;
    }
    Some((n as f64 / (1.0 + 2.0 * tail)).min(n as f64))
}

/// Type-7 quantile (linear interpolation between order statistics) of sorted
/// data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    /// Equal-tail 95% interval.
    pub credible_95: (f64, f64),
    /// `None` when the chain is constant.
    pub ess: Option<f64>,
}

pub fn summarize(chain: &[f64], name: impl Into<String>) -> Result<PosteriorSummary> {
    let n = chain.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "need at least two draws to summarise".into(),
        ));
    }
    if chain.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "chain contains non-finite values".into(),
        ));
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let var = chain.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let mut sorted = chain.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(PosteriorSummary {
        name: name.into(),
        mean,
        sd: var.sqrt(),
        median: quantile_sorted(&sorted, 0.5),
        credible_95: (
            quantile_sorted(&sorted, 0.025),
            quantile_sorted(&sorted, 0.975),
        ),
        ess: effective_sample_size(chain),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn acf_examples() {
        let alt: Vec<f64> = (0..1000)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let a = autocorrelation(&alt, 5).unwrap();
        assert_eq!(a.rho[0], 1.0);
        assert!((a.rho[1] + 1.0).abs() < 0.01);

        let mut rng = crate::dist::chain_rng(2, 0);
        let z: Vec<f64> = (0..10_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        assert!(autocorrelation(&z, 1).unwrap().rho[1].abs() < 0.03);

        let flat = autocorrelation(&[3.0; 10], 3).unwrap();
        assert!(flat.degenerate);
        assert_eq!(flat.rho, vec![1.0, 0.0, 0.0, 0.0]);
        assert!(autocorrelation(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[1.0, 2.0, 3.0], "x").unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.sd, 1.0);

        let mut rng = crate::dist::chain_rng(4, 0);
        let z: Vec<f64> = (0..100_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let s = summarize(&z, "z").unwrap();
        assert!((s.credible_95.0 + 1.959_964).abs() < 0.03);
        assert!((s.credible_95.1 - 1.959_964).abs() < 0.03);
        let ess = s.ess.unwrap();
        assert!((ess / 1e5 - 1.0).abs() < 0.05, "ess {ess}");

        assert_eq!(summarize(&[5.0; 50], "c").unwrap().ess, None);
    }

    #[test]
    fn type7_quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert_eq!(quantile_sorted(&xs, 0.5), 2.5);
        assert!((quantile_sorted(&xs, 0.1) - 1.3).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn acf_is_bounded(xs in prop::collection::vec(-10.0..10.0f64, 10..200)) {
            let a = autocorrelation(&xs, 9).unwrap();
            prop_assert!(a.rho.iter().all(|r| r.abs() <= 1.0 + 1e-12));
        }

        #[test]
        fn interval_brackets_median(xs in prop::collection::vec(-10.0..10.0f64, 2..200)) {
            let s = summarize(&xs, "x").unwrap();
            prop_assert!(s.credible_95.0 <= s.median && s.median <= s.credible_95.1);
            prop_assert!(s.sd >= 0.0);
            if let Some(ess) = s.ess {
                prop_assert!(ess <= xs.len() as f64);
            }
        }
    }
}
