//! Residual-life distributions built from posterior draws.
//!
//! For posterior triples `(alpha_i, beta_i, sigma_i)` the unconstrained CDF of
//! the residual life `T` of a unit last seen at `t_k` is
//!
//! ```text
//! F(t) = mean_i Phi((alpha_i + beta_i (t + t_k) - D) / sigma_i)
//! ```
//!
//! and the constrained form conditions on `T > 0`:
//! `F_c(t) = (F(t) - F(0)) / (1 - F(0))`. The constrained form is evaluated
//! through survival sums so that `F_c(0)` is exactly zero and upper tails keep
//! their precision.

use serde::{Deserialize, Serialize};

use crate::dist::{log_sum_exp, norm_cdf, norm_ln_pdf, norm_sf};
use crate::gibbs::{filter_positive_beta, PosteriorDraw};
use crate::model::LinearPathParams;
use crate::{Error, Result};

/// Smallest `1 - F(0)` accepted by the constrained form.
pub const MIN_SURVIVAL: f64 = 1e-12;

/// One posterior triple; `sigma` is the noise standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RulTriple {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl RulTriple {
    pub fn new(alpha: f64, beta: f64, sigma: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "slope must be positive, got {beta}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "invalid triple ({alpha}, {beta}, {sigma})"
            )));
        }
        Ok(Self { alpha, beta, sigma })
    }

    pub fn from_params(params: &LinearPathParams) -> Result<Self> {
        Self::new(params.alpha, params.beta, params.sigma_eps2.sqrt())
    }

    fn z(&self, t: f64, t_k: f64, threshold: f64) -> f64 {
        (self.alpha + self.beta * (t + t_k) - threshold) / self.sigma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulDistribution {
    triples: Vec<RulTriple>,
    t_k: f64,
    threshold: f64,
    constrained: bool,
    /// `1 - F(0)`, the mass beyond zero.
    survival_at_zero: f64,
}

impl RulDistribution {
    pub fn new(
        triples: Vec<RulTriple>,
        t_k: f64,
        threshold: f64,
        constrained: bool,
    ) -> Result<Self> {
        if triples.is_empty() {
            return Err(Error::InvalidInput("no posterior triples".into()));
        }
        if !(t_k >= 0.0 && t_k.is_finite()) || !threshold.is_finite() {
            return Err(Error::InvalidInput(format!(
                "invalid t_k {t_k} or threshold {threshold}"
            )));
        }
        for tr in &triples {
            RulTriple::new(tr.alpha, tr.beta, tr.sigma)?;
        }
        let mut dist = Self {
            triples,
            t_k,
            threshold,
            constrained,
            survival_at_zero: 1.0,
        };
        dist.survival_at_zero = dist.survival(0.0);
        if constrained && dist.survival_at_zero < MIN_SURVIVAL {
            return Err(Error::DegenerateDistribution);
        }
        Ok(dist)
    }

    /// Builds the distribution for `unit` from posterior draws, keeping only
    /// draws with a positive slope for that unit.
    pub fn from_draws(
        draws: &[PosteriorDraw],
        unit: usize,
        t_k: f64,
        threshold: f64,
        constrained: bool,
    ) -> Result<Self> {
        let kept = filter_positive_beta(draws, unit)?;
        let triples = kept
            .draws
            .iter()
            .map(|d| RulTriple::new(d.alpha, d.betas[unit], d.sigma_eps2.sqrt()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(triples, t_k, threshold, constrained)
    }

    pub fn triples(&self) -> &[RulTriple] {
        &self.triples
    }

    pub fn t_k(&self) -> f64 {
        self.t_k
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_constrained(&self) -> bool {
        self.constrained
    }

    /// Same triples with the other support convention.
    pub fn with_constraint(&self, constrained: bool) -> Result<Self> {
        Self::new(self.triples.clone(), self.t_k, self.threshold, constrained)
    }

    /// Unconstrained survival `1 - F(t)`.
    fn survival(&self, t: f64) -> f64 {
        let n = self.triples.len() as f64;
        self.triples
            .iter()
            .map(|tr| norm_sf(tr.z(t, self.t_k, self.threshold)))
            .sum::<f64>()
            / n
    }

    /// Unconstrained CDF regardless of the configured support.
    pub fn unconstrained_cdf(&self, t: f64) -> f64 {
        let n = self.triples.len() as f64;
        self.triples
            .iter()
            .map(|tr| norm_cdf(tr.z(t, self.t_k, self.threshold)))
            .sum::<f64>()
            / n
    }

    /// Mass the unconstrained form puts on `T <= 0`.
    pub fn mass_before_zero(&self) -> f64 {
        1.0 - self.survival_at_zero
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if !self.constrained {
            return self.unconstrained_cdf(t);
        }
        if t <= 0.0 {
            return 0.0;
        }
        (1.0 - self.survival(t) / self.survival_at_zero).clamp(0.0, 1.0)
    }

    pub fn ln_pdf(&self, t: f64) -> f64 {
        if self.constrained && t < 0.0 {
            return f64::NEG_INFINITY;
        }
        let n = self.triples.len() as f64;
        let terms = self.triples.iter().map(|tr| {
            norm_ln_pdf(tr.z(t, self.t_k, self.threshold)) + tr.beta.ln() - tr.sigma.ln()
        });
        let ln_mix = log_sum_exp(terms) - n.ln();
        if self.constrained {
            ln_mix - self.survival_at_zero.ln()
        } else {
            ln_mix
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.ln_pdf(t).exp()
    }

    /// Smallest `t` (to bisection precision) with `cdf(t) >= p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidInput(format!(
                "quantile level {p} outside (0, 1)"
            )));
        }
        let mut hi = 1.0;
        while self.cdf(hi) < p {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Numerical("quantile bracket diverged".into()));
            }
        }
        let mut lo = if self.constrained { 0.0 } else { -1.0 };
        while !self.constrained && self.cdf(lo) >= p {
            lo *= 2.0;
            if lo < -1e12 {
                return Err(Error::Numerical("quantile bracket diverged".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// Single-triple CDF, unconstrained or conditioned on `T > 0`.
pub fn rul_cdf_single(
    params: &LinearPathParams,
    t_k: f64,
    threshold: f64,
    t: f64,
    constrained: bool,
) -> Result<f64> {
    if params.beta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "slope must be positive, got {}",
            params.beta
        )));
    }
    let dist = RulDistribution::new(
        vec![RulTriple::from_params(params)?],
        t_k,
        threshold,
        constrained,
    )?;
    Ok(dist.cdf(t))
}

/// Largest absolute CDF difference over `grid`.
pub fn ks_distance(cdf_a: impl Fn(f64) -> f64, cdf_b: impl Fn(f64) -> f64, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&t| (cdf_a(t) - cdf_b(t)).abs())
        .fold(0.0, f64::max)
}

/// Exact one-sample Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Number of points in the comparison grid.
pub const KS_GRID_POINTS: usize = 2000;

/// Grid of [`KS_GRID_POINTS`] points on `[0, q]`, where `q` is the larger
/// 0.9999 quantile of the two distributions.
pub fn ks_grid(a: &RulDistribution, b: &RulDistribution) -> Result<Vec<f64>> {
    let q = a.quantile(0.9999)?.max(b.quantile(0.9999)?);
    let step = q / (KS_GRID_POINTS - 1) as f64;
    Ok((0..KS_GRID_POINTS).map(|j| j as f64 * step).collect())
}

/// KS distance between an approximated distribution and the single-triple
/// constrained distribution at the data-generating parameters.
pub fn ks_to_truth(approx: &RulDistribution, truth: &LinearPathParams) -> Result<f64> {
    let exact = RulDistribution::new(
        vec![RulTriple::from_params(truth)?],
        approx.t_k(),
        approx.threshold(),
        true,
    )?;
    let grid = ks_grid(approx, &exact)?;
    Ok(ks_distance(|t| approx.cdf(t), |t| exact.cdf(t), &grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(
        alpha: f64,
        beta: f64,
        sigma: f64,
        t_k: f64,
        d: f64,
        constrained: bool,
    ) -> RulDistribution {
        RulDistribution::new(
            vec![RulTriple::new(alpha, beta, sigma).unwrap()],
            t_k,
            d,
            constrained,
        )
        .unwrap()
    }

    #[test]
    fn standard_normal_reduction() {
        let u = single(0.0, 1.0, 1.0, 0.0, 0.0, false);
        let c = single(0.0, 1.0, 1.0, 0.0, 0.0, true);
        assert_eq!(u.cdf(0.0), 0.5);
        assert_eq!(c.cdf(0.0), 0.0);
        for t in [0.3, 1.0, 2.5] {
            assert!((u.cdf(t) - norm_cdf(t)).abs() < 1e-15);
            assert!((c.cdf(t) - (norm_cdf(t) - 0.5) / 0.5).abs() < 1e-14);
            assert!((u.pdf(t) - crate::dist::norm_pdf(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn two_triple_hand_value() {
        let d = RulDistribution::new(
            vec![
                RulTriple::new(0.0, 1.0, 1.0).unwrap(),
                RulTriple::new(0.0, 2.0, 1.0).unwrap(),
            ],
            0.0,
            2.0,
            false,
        )
        .unwrap();
        // 0.5 * (Phi(-1) + Phi(0)) with Phi(-1) = 0.158655253931457051
        assert!((d.cdf(1.0) - 0.329_327_626_965_728_5).abs() < 1e-14);
    }

    #[test]
    fn single_triple_form() {
        let p = LinearPathParams::new(1.0, 2.0, 0.25).unwrap();
        assert_eq!(rul_cdf_single(&p, 1.0, 5.0, 1.0, false).unwrap(), 0.5);
        let q = LinearPathParams::new(0.0, 1.0, 1.0).unwrap();
        assert!((rul_cdf_single(&q, 0.0, 0.0, 1e6, true).unwrap() - 1.0).abs() < 1e-12);
        let d = single(0.0, 1.0, 1.0, 0.0, 0.0, true);
        assert_eq!(rul_cdf_single(&q, 0.0, 0.0, 0.7, true).unwrap(), d.cdf(0.7));
        let bad = LinearPathParams::new(0.0, -1.0, 1.0).unwrap();
        assert!(matches!(
            rul_cdf_single(&bad, 0.0, 0.0, 1.0, false),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn degenerate_when_all_mass_is_past_threshold() {
        let r = RulDistribution::new(
            vec![RulTriple::new(100.0, 1.0, 0.1).unwrap()],
            0.0,
            1.0,
            true,
        );
        assert_eq!(r, Err(Error::DegenerateDistribution));
        assert!(RulDistribution::new(
            vec![RulTriple::new(100.0, 1.0, 0.1).unwrap()],
            0.0,
            1.0,
            false
        )
        .is_ok());
    }

    #[test]
    fn ks_distance_examples() {
        let grid: Vec<f64> = (0..=2000).map(|j| j as f64 / 1000.0).collect();
        let u1 = |t: f64| t.clamp(0.0, 1.0);
        let u2 = |t: f64| (t / 2.0).clamp(0.0, 1.0);
        assert_eq!(ks_distance(u1, u1, &grid), 0.0);
        assert!((ks_distance(u1, u2, &grid) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ks_statistic_of_normal_draws() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = crate::dist::chain_rng(5, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        // DKW: P(D > 0.01) <= 2 exp(-2 n 0.01^2) ~ 4e-9
        assert!(ks_statistic(&xs, norm_cdf) < 0.01);
        assert!((ks_statistic(&[0.5], |t: f64| t) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let d = single(0.0, 1.0, 1.0, 0.0, 0.0, true);
        let q = d.quantile(0.5).unwrap();
        assert!((q - 0.674_489_750_196_081_7).abs() < 1e-9);
        let u = single(0.0, 1.0, 1.0, 0.0, 3.0, false);
        assert!((u.quantile(0.5).unwrap() - 3.0).abs() < 1e-9);
    }

    fn triple_strategy() -> impl Strategy<Value = (f64, f64, f64)> {
        (0.0..4.0f64, 0.5..10.0f64, 0.2..1.5f64)
    }

    proptest! {
        #[test]
        fn constrained_matches_renormalised_unconstrained(
            triples in prop::collection::vec(triple_strategy(), 1..20),
            t_k in 0.0..1.0f64,
            t in 0.0..3.0f64,
        ) {
            let triples: Vec<_> = triples.into_iter().map(|(a, b, s)| RulTriple::new(a, b, s).unwrap()).collect();
            let u = RulDistribution::new(triples.clone(), t_k, 9.0, false).unwrap();
            let c = RulDistribution::new(triples, t_k, 9.0, true).unwrap();
            let f0 = u.cdf(0.0);
            let expected = (u.cdf(t) - f0) / (1.0 - f0);
            prop_assert!((c.cdf(t) - expected).abs() < 1e-12);
            prop_assert_eq!(c.cdf(0.0), 0.0);
            prop_assert!(u.pdf(t) >= 0.0 && c.pdf(t) >= 0.0);
        }

        #[test]
        fn cdf_is_monotone_and_bounded(
            triples in prop::collection::vec(triple_strategy(), 1..20),
            mut ts in prop::collection::vec(0.0..20.0f64, 2..50),
        ) {
            let triples: Vec<_> = triples.into_iter().map(|(a, b, s)| RulTriple::new(a, b, s).unwrap()).collect();
            let d = RulDistribution::new(triples, 0.5, 9.0, true).unwrap();
            ts.sort_by(f64::total_cmp);
            let vals: Vec<f64> = ts.iter().map(|&t| d.cdf(t)).collect();
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((d.cdf(1e6) - 1.0).abs() < 1e-12);
        }
    }
}
