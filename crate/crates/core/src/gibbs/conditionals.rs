//! Full conditional distributions of the blocked Gibbs sampler.
//!
//! Each `*_conditional` function returns the parameters of the exact
//! conditional for the current state, and the matching `update_*` function
//! draws from it without mutating the state. Atom indices are zero-based.

use rand::Rng;

use super::{GibbsState, Observations};
use crate::dist::{
    normalize_log_weights, sample_beta, sample_gamma, sample_half_cauchy, sample_log_categorical,
    sample_normal, NormalParams, MAX_STICK,
};
use crate::model::{GammaParams, PriorSpec, ScalePrior};
use crate::Result;

/// Per-atom occupancy and slope statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomStats {
    pub counts: Vec<usize>,
    pub beta_sums: Vec<f64>,
}

impl AtomStats {
    pub fn new(state: &GibbsState) -> Self {
        let n_atoms = state.atom_means.len();
        let mut counts = vec![0; n_atoms];
        let mut beta_sums = vec![0.0; n_atoms];
        for (&k, &b) in state.classes.iter().zip(&state.betas) {
            counts[k] += 1;
            beta_sums[k] += b;
        }
        Self { counts, beta_sums }
    }
}

/// Sum of squared slope deviations from the mean of atom `h`, over its
/// members.
fn member_sum_squares(state: &GibbsState, h: usize) -> f64 {
    state
        .classes
        .iter()
        .zip(&state.betas)
        .filter(|(&k, _)| k == h)
        .map(|(_, &b)| (b - state.atom_means[h]).powi(2))
        .sum()
}

pub fn alpha_conditional(
    state: &GibbsState,
    obs: &Observations,
    prior: &PriorSpec,
) -> NormalParams {
    let s2a = prior.sigma_alpha2;
    let s2e = state.sigma_eps2;
    let resid: f64 = obs
        .units()
        .iter()
        .zip(&state.betas)
        .map(|(u, &b)| u.sum_y - b * u.sum_t)
        .sum();
    let denom = s2a * obs.total() as f64 + s2e;
    NormalParams {
        mean: (s2a * resid + s2e * prior.mu_alpha) / denom,
        var: s2a * s2e / denom,
    }
}

pub fn update_alpha<R: Rng + ?Sized>(
    state: &GibbsState,
    obs: &Observations,
    prior: &PriorSpec,
    rng: &mut R,
) -> f64 {
    let c = alpha_conditional(state, obs, prior);
    sample_normal(rng, c.mean, c.var)
}

pub fn beta_conditional(state: &GibbsState, obs: &Observations, unit: usize) -> NormalParams {
    let u = &obs.units()[unit];
    let k = state.classes[unit];
    let s2k = state.atom_vars[k];
    let s2e = state.sigma_eps2;
    let denom = s2k * u.sum_t2 + s2e;
    NormalParams {
        mean: (s2k * (u.sum_ty - state.alpha * u.sum_t) + s2e * state.atom_means[k]) / denom,
        var: s2k * s2e / denom,
    }
}

pub fn update_beta<R: Rng + ?Sized>(
    state: &GibbsState,
    obs: &Observations,
    unit: usize,
    rng: &mut R,
) -> f64 {
    let c = beta_conditional(state, obs, unit);
    sample_normal(rng, c.mean, c.var)
}

/// Conditional of the measurement precision `1 / sigma_eps^2`.
pub fn sigma_eps_conditional(
    state: &GibbsState,
    obs: &Observations,
    prior: &PriorSpec,
) -> GammaParams {
    let ssr: f64 = obs
        .units()
        .iter()
        .zip(&state.betas)
        .map(|(u, &b)| {
            u.points()
                .map(|(t, y)| (y - state.alpha - b * t).powi(2))
                .sum::<f64>()
        })
        .sum();
    GammaParams::new(
        prior.sigma_eps.shape + obs.total() as f64 / 2.0,
        prior.sigma_eps.rate + ssr / 2.0,
    )
}

/// Draws a new measurement variance.
pub fn update_sigma_eps<R: Rng + ?Sized>(
    state: &GibbsState,
    obs: &Observations,
    prior: &PriorSpec,
    rng: &mut R,
) -> f64 {
    1.0 / sample_gamma(rng, sigma_eps_conditional(state, obs, prior))
}

fn class_log_weights(state: &GibbsState, unit: usize) -> Vec<f64> {
    let b = state.betas[unit];
    state
        .weights
        .iter()
        .zip(state.atom_means.iter().zip(&state.atom_vars))
        .map(|(&p, (&mu, &var))| {
            if p <= 0.0 {
                f64::NEG_INFINITY
            } else {
                p.ln() - 0.5 * var.ln() - (b - mu).powi(2) / (2.0 * var)
            }
        })
        .collect()
}

/// Normalised probabilities of each atom for the slope of `unit`.
pub fn class_probabilities(state: &GibbsState, unit: usize) -> Result<Vec<f64>> {
    normalize_log_weights(&class_log_weights(state, unit))
}

pub fn update_class<R: Rng + ?Sized>(
    state: &GibbsState,
    unit: usize,
    rng: &mut R,
) -> Result<usize> {
    sample_log_categorical(rng, &class_log_weights(state, unit))
}

/// Beta parameters of the stick fractions `V_1 .. V_{N-1}`.
pub fn stick_conditionals(state: &GibbsState) -> Vec<(f64, f64)> {
    let counts = AtomStats::new(state).counts;
    let n_atoms = counts.len();
    let mut tail: usize = counts.iter().sum();
    let mut params = Vec::with_capacity(n_atoms.saturating_sub(1));
    for &r in counts.iter().take(n_atoms - 1) {
        tail -= r;
        params.push((1.0 + r as f64, state.concentration + tail as f64));
    }
    params
}

/// Draws new stick fractions (the last fixed at one) and the weights they
/// imply.
pub fn update_sticks<R: Rng + ?Sized>(state: &GibbsState, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut sticks: Vec<f64> = stick_conditionals(state)
        .into_iter()
        .map(|(a, b)| sample_beta(rng, a, b))
        .collect();
    sticks.push(1.0);
    let weights = crate::model::stick_weights(&sticks);
    (sticks, weights)
}

/// Conditional of the mean of atom `h`; the prior `N(m_mu, sigma_z^2)` when
/// the atom is empty.
pub fn atom_mean_conditional(state: &GibbsState, prior: &PriorSpec, h: usize) -> NormalParams {
    let stats = AtomStats::new(state);
    atom_mean_from_stats(state, prior, &stats, h)
}

fn atom_mean_from_stats(
    state: &GibbsState,
    prior: &PriorSpec,
    stats: &AtomStats,
    h: usize,
) -> NormalParams {
    let s2z = state.sigma_z2;
    if stats.counts[h] == 0 {
        return NormalParams {
            mean: prior.m_mu,
            var: s2z,
        };
    }
    let s2h = state.atom_vars[h];
    let var = s2h * s2z / (stats.counts[h] as f64 * s2z + s2h);
    NormalParams {
        mean: var * (stats.beta_sums[h] / s2h + prior.m_mu / s2z),
        var,
    }
}

pub fn update_atom_means<R: Rng + ?Sized>(
    state: &GibbsState,
    prior: &PriorSpec,
    rng: &mut R,
) -> Vec<f64> {
    let stats = AtomStats::new(state);
    (0..state.atom_means.len())
        .map(|h| {
            let c = atom_mean_from_stats(state, prior, &stats, h);
            sample_normal(rng, c.mean, c.var)
        })
        .collect()
}

/// Sum of squared deviations of every atom mean from `m_mu`.
fn atom_mean_spread(state: &GibbsState, prior: &PriorSpec) -> f64 {
    state
        .atom_means
        .iter()
        .map(|m| (m - prior.m_mu).powi(2))
        .sum()
}

/// Gamma conditional of `1 / sigma_z^2`, or `None` under a half-Cauchy prior.
pub fn sigma_z_conditional(state: &GibbsState, prior: &PriorSpec) -> Option<GammaParams> {
    match prior.sigma_z {
        ScalePrior::GammaPrecision(g) => Some(GammaParams::new(
            g.shape + state.atom_means.len() as f64 / 2.0,
            g.rate + atom_mean_spread(state, prior) / 2.0,
        )),
        ScalePrior::HalfCauchy { .. } => None,
    }
}

/// Draws a new `sigma_z^2`. The half-Cauchy branch runs `mh_steps`
/// Metropolis-Hastings steps from the current value.
pub fn update_sigma_z<R: Rng + ?Sized>(
    state: &GibbsState,
    prior: &PriorSpec,
    mh_steps: usize,
    rng: &mut R,
) -> f64 {
    match prior.sigma_z {
        ScalePrior::GammaPrecision(_) => {
            let g = sigma_z_conditional(state, prior).expect("gamma branch");
            1.0 / sample_gamma(rng, g)
        }
        ScalePrior::HalfCauchy { scale } => {
            let target = ScaleTarget {
                n_terms: state.atom_means.len(),
                sum_squares: atom_mean_spread(state, prior),
                scale,
            };
            let mut sigma = state.sigma_z2.sqrt();
            for _ in 0..mh_steps.max(1) {
                sigma = target.mh_step(sigma, rng);
            }
            sigma * sigma
        }
    }
}

/// Gamma conditional of `1 / sigma_h^2` for atom `h` (the prior when the atom
/// is empty), or `None` under a half-Cauchy prior.
pub fn atom_variance_conditional(
    state: &GibbsState,
    prior: &PriorSpec,
    h: usize,
) -> Option<GammaParams> {
    let counts = AtomStats::new(state).counts;
    match prior.sigma_h {
        ScalePrior::GammaPrecision(g) if counts[h] == 0 => Some(g),
        ScalePrior::GammaPrecision(g) => Some(GammaParams::new(
            g.shape + counts[h] as f64 / 2.0,
            g.rate + member_sum_squares(state, h) / 2.0,
        )),
        ScalePrior::HalfCauchy { .. } => None,
    }
}

pub fn update_atom_variances<R: Rng + ?Sized>(
    state: &GibbsState,
    prior: &PriorSpec,
    mh_steps: usize,
    rng: &mut R,
) -> Vec<f64> {
    let counts = AtomStats::new(state).counts;
    (0..state.atom_vars.len())
        .map(|h| match prior.sigma_h {
            ScalePrior::GammaPrecision(g) => {
                let params = if counts[h] == 0 {
                    g
                } else {
                    GammaParams::new(
                        g.shape + counts[h] as f64 / 2.0,
                        g.rate + member_sum_squares(state, h) / 2.0,
                    )
                };
                1.0 / sample_gamma(rng, params)
            }
            ScalePrior::HalfCauchy { scale } if counts[h] == 0 => {
                sample_half_cauchy(rng, scale).powi(2)
            }
            ScalePrior::HalfCauchy { scale } => {
                let target = ScaleTarget {
                    n_terms: counts[h],
                    sum_squares: member_sum_squares(state, h),
                    scale,
                };
                let mut sigma = state.atom_vars[h].sqrt();
                for _ in 0..mh_steps.max(1) {
                    sigma = target.mh_step(sigma, rng);
                }
                sigma * sigma
            }
        })
        .collect()
}

pub fn concentration_conditional(state: &GibbsState, prior: &PriorSpec) -> GammaParams {
    let n_atoms = state.sticks.len();
    let log_tail: f64 = state
        .sticks
        .iter()
        .take(n_atoms - 1)
        .map(|&v| (-v.min(MAX_STICK)).ln_1p())
        .sum();
    GammaParams::new(
        n_atoms as f64 + prior.concentration.shape - 1.0,
        prior.concentration.rate - log_tail,
    )
}

pub fn update_concentration<R: Rng + ?Sized>(
    state: &GibbsState,
    prior: &PriorSpec,
    rng: &mut R,
) -> f64 {
    sample_gamma(rng, concentration_conditional(state, prior))
}

/// Unnormalised conditional of a standard deviation with a half-Cauchy prior
/// whose `n_terms` normal children have squared deviations summing to
/// `sum_squares`:
///
/// `sigma^-n * exp(-sum_squares / (2 sigma^2)) / (1 + sigma^2 / scale^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleTarget {
    pub n_terms: usize,
    pub sum_squares: f64,
    pub scale: f64,
}

impl ScaleTarget {
    pub fn ln_density(&self, sigma: f64) -> f64 {
        if !(sigma > 0.0) {
            return f64::NEG_INFINITY;
        }
        -(self.n_terms as f64) * sigma.ln()
            - self.sum_squares / (2.0 * sigma * sigma)
            - (sigma / self.scale).powi(2).ln_1p()
    }

    /// One Metropolis-Hastings step with a `Gamma(1, rate = sigma)` proposal.
    ///
    /// With `q(y | x) = x exp(-x y)` the exponential factors of the Hastings
    /// ratio cancel, leaving `f(y) y / (f(x) x)`.
    pub fn mh_step<R: Rng + ?Sized>(&self, sigma: f64, rng: &mut R) -> f64 {
        let proposal = loop {
            let u: f64 = rng.random();
            let y = -(1.0 - u).ln() / sigma;
            if y > 0.0 && y.is_finite() {
                break y;
            }
        };
        let log_ratio =
            self.ln_density(proposal) - self.ln_density(sigma) + proposal.ln() - sigma.ln();
        let u: f64 = rng.random();
        if log_ratio >= 0.0 || u.ln() < log_ratio {
            proposal
        } else {
            sigma
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::Observations;
    use crate::model::{DegradationDataset, ModelKind, UnitPath};

    fn toy_prior() -> PriorSpec {
        PriorSpec {
            kind: ModelKind::SemiParametric,
            scenario_id: 0,
            mu_alpha: 0.0,
            sigma_alpha2: 1000.0,
            m_mu: 0.0,
            sigma_z: ScalePrior::GammaPrecision(GammaParams::new(0.01, 0.01)),
            sigma_h: ScalePrior::GammaPrecision(GammaParams::new(1.0, 0.01)),
            sigma_eps: GammaParams::new(0.01, 0.01),
            concentration: GammaParams::new(1.0, 1.0),
            truncation: 2,
        }
    }

    fn single_obs_state(t: f64, y: f64) -> (GibbsState, Observations) {
        let unit = UnitPath::new("u", vec![t], vec![y]).unwrap();
        let ds = DegradationDataset::new(vec![unit], None, 10.0).unwrap();
        let obs = Observations::from_dataset(&ds);
        let state = GibbsState {
            alpha: 0.0,
            betas: vec![0.0],
            sigma_eps2: 1.0,
            classes: vec![0],
            sticks: vec![0.5, 1.0],
            weights: vec![0.5, 0.5],
            atom_means: vec![0.0, 0.0],
            atom_vars: vec![1.0, 1.0],
            sigma_z2: 1.0,
            concentration: 1.0,
        };
        (state, obs)
    }

    #[test]
    fn alpha_conditional_examples() {
        let prior = toy_prior();
        let (mut s, obs) = single_obs_state(1.0, 2.0);
        s.betas[0] = 2.0;
        assert_eq!(alpha_conditional(&s, &obs, &prior).mean, 0.0);

        let (mut s, obs) = single_obs_state(1.0, 5.0);
        s.betas[0] = 1.0;
        let c = alpha_conditional(&s, &obs, &prior);
        assert!((c.mean - 4000.0 / 1001.0).abs() < 1e-12);
        assert!((c.var - 1000.0 / 1001.0).abs() < 1e-12);

        let mut tight = prior.clone();
        tight.sigma_alpha2 = 1e-12;
        tight.mu_alpha = 0.7;
        assert!((alpha_conditional(&s, &obs, &tight).mean - 0.7).abs() < 1e-9);
    }

    #[test]
    fn beta_conditional_examples() {
        let (mut s, obs) = single_obs_state(1.0, 0.0);
        assert_eq!(beta_conditional(&s, &obs, 0).mean, 0.0);

        let (mut s2, obs2) = single_obs_state(1.0, 3.0);
        s2.atom_means[0] = 1.0;
        let c = beta_conditional(&s2, &obs2, 0);
        assert!((c.mean - 2.0).abs() < 1e-12);
        assert!((c.var - 0.5).abs() < 1e-12);

        // Flat-prior limit: least squares through the origin of the residuals.
        let unit = UnitPath::new("u", vec![0.5, 1.0, 2.0], vec![1.0, 2.5, 3.5]).unwrap();
        let ds = DegradationDataset::new(vec![unit], None, 10.0).unwrap();
        let obs3 = Observations::from_dataset(&ds);
        s.alpha = 0.5;
        s.atom_vars[0] = 1e12;
        let c = beta_conditional(&s, &obs3, 0);
        let lse = (0.5 * 0.5 + 1.0 * 2.0 + 2.0 * 3.0) / (0.25 + 1.0 + 4.0);
        assert!((c.mean - lse).abs() < 1e-9);
    }

    #[test]
    fn sigma_eps_conditional_examples() {
        let prior = toy_prior();
        // Perfect fit: the rate stays at the prior rate.
        let (mut s, obs) = single_obs_state(1.0, 3.0);
        s.betas[0] = 3.0;
        let g = sigma_eps_conditional(&s, &obs, &prior);
        assert_eq!(g, GammaParams::new(0.01 + 0.5, 0.01));

        // Four observations with SSR = 2.
        let unit = UnitPath::new("u", vec![0.0, 1.0, 2.0, 3.0], vec![1.0, -1.0, 0.0, 0.0]).unwrap();
        let ds = DegradationDataset::new(vec![unit], None, 10.0).unwrap();
        let obs = Observations::from_dataset(&ds);
        s.betas[0] = 0.0;
        s.alpha = 0.0;
        let g = sigma_eps_conditional(&s, &obs, &prior);
        assert!((g.shape - 2.01).abs() < 1e-12 && (g.rate - 1.01).abs() < 1e-12);
        assert!((g.mean() - 1.990_099).abs() < 1e-6);
    }

    #[test]
    fn class_probability_examples() {
        let (mut s, _) = single_obs_state(1.0, 0.0);
        let p = class_probabilities(&s, 0).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);

        s.atom_means = vec![0.0, 10.0];
        let p = class_probabilities(&s, 0).unwrap();
        assert!((p[0] - 1.0 / (1.0 + (-50f64).exp())).abs() < 1e-15);

        s.weights = vec![1.0, 0.0];
        s.sticks = vec![1.0, 1.0];
        s.atom_means = vec![100.0, 0.0];
        let mut rng = crate::dist::chain_rng(5, 0);
        for _ in 0..200 {
            assert_eq!(update_class(&s, 0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn stick_conditional_examples() {
        let (mut s, _) = single_obs_state(1.0, 0.0);
        s.classes = vec![];
        s.betas = vec![];
        s.concentration = 1.0;
        assert_eq!(stick_conditionals(&s), vec![(1.0, 1.0)]);

        s.classes = vec![0, 0, 0];
        s.betas = vec![0.0; 3];
        s.concentration = 2.0;
        assert_eq!(stick_conditionals(&s), vec![(4.0, 2.0)]);
        let mut rng = crate::dist::chain_rng(11, 0);
        let (v, p) = update_sticks(&s, &mut rng);
        assert_eq!(v[1], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn atom_mean_conditional_examples() {
        let prior = toy_prior();
        let (mut s, _) = single_obs_state(1.0, 0.0);
        s.betas[0] = 4.0;
        let c = atom_mean_conditional(&s, &prior, 0);
        assert!((c.mean - 2.0).abs() < 1e-12 && (c.var - 0.5).abs() < 1e-12);
        let empty = atom_mean_conditional(&s, &prior, 1);
        assert_eq!(
            empty,
            NormalParams {
                mean: 0.0,
                var: 1.0
            }
        );
        s.sigma_z2 = 1e-14;
        assert!(atom_mean_conditional(&s, &prior, 0).mean.abs() < 1e-12);
    }

    #[test]
    fn scale_conditional_examples() {
        let mut prior = toy_prior();
        let (mut s, _) = single_obs_state(1.0, 0.0);
        // Deviations (2, 0) around m_mu = 0 plus one more atom at 0: sum = 4.
        s.atom_means = vec![2.0, 0.0];
        let g = sigma_z_conditional(&s, &prior).unwrap();
        assert!((g.shape - 1.01).abs() < 1e-12 && (g.rate - 2.01).abs() < 1e-12);
        s.atom_means = vec![0.0, 0.0];
        let g = sigma_z_conditional(&s, &prior).unwrap();
        assert_eq!(g, GammaParams::new(1.01, 0.01));

        prior.sigma_h = ScalePrior::GammaPrecision(GammaParams::new(1.0, 0.01));
        s.classes = vec![0, 0];
        s.betas = vec![1.0, -1.0];
        let g = atom_variance_conditional(&s, &prior, 0).unwrap();
        assert!((g.shape - 2.0).abs() < 1e-12 && (g.rate - 1.01).abs() < 1e-12);
        assert_eq!(
            atom_variance_conditional(&s, &prior, 1).unwrap(),
            GammaParams::new(1.0, 0.01)
        );
    }

    #[test]
    fn concentration_conditional_examples() {
        let mut prior = toy_prior();
        let (mut s, _) = single_obs_state(1.0, 0.0);
        s.sticks = vec![0.0, 0.0, 1.0];
        prior.concentration = GammaParams::new(1.0, 1.0);
        assert_eq!(
            concentration_conditional(&s, &prior),
            GammaParams::new(3.0, 1.0)
        );
        s.sticks = vec![0.5, 0.5, 1.0];
        let g = concentration_conditional(&s, &prior);
        assert!((g.rate - (1.0 + 2.0 * 2f64.ln())).abs() < 1e-12);
        s.sticks = vec![1.0, 0.3, 1.0];
        let g = concentration_conditional(&s, &prior);
        assert!(g.rate.is_finite() && g.rate >= prior.concentration.rate);
    }
}
