//! Blocked Gibbs sampling for the Dirichlet-process-mixture slope model and
//! its single-normal parametric counterpart.
//!
//! The truncated stick-breaking prior keeps `N` atoms `(mu_h, sigma_h^2)`
//! with weights `p = stick_breaking(V)`. Every unit (training units and the
//! new unit) carries a class label `K_i` pointing at an atom. The parametric
//! model is the same hierarchy with a single atom, so it shares the sampler
//! and skips the label, stick and concentration updates.
//!
//! One sweep applies, in order: `alpha`, each `beta_i`, `sigma_eps^2`, each
//! `K_i`, `(V, p)`, the atom means, `sigma_z`, the atom variances and the
//! concentration `gamma`.

pub mod conditionals;

use serde::{Deserialize, Serialize};

use crate::dist::{chain_rng, ChainRng};
use crate::model::{DegradationDataset, ModelKind, PriorSpec};
use crate::{Error, Result};

pub use conditionals::*;

/// Cached per-unit sufficient statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitObservations {
    times: Vec<f64>,
    ys: Vec<f64>,
    pub sum_t: f64,
    pub sum_t2: f64,
    pub sum_y: f64,
    pub sum_ty: f64,
}

impl UnitObservations {
    fn new(times: Vec<f64>, ys: Vec<f64>) -> Self {
        let mut u = Self {
            times,
            ys,
            sum_t: 0.0,
            sum_t2: 0.0,
            sum_y: 0.0,
            sum_ty: 0.0,
        };
        u.refresh();
        u
    }

    fn refresh(&mut self) {
        self.sum_t = self.times.iter().sum();
        self.sum_t2 = self.times.iter().map(|t| t * t).sum();
        self.sum_y = self.ys.iter().sum();
        self.sum_ty = self.times.iter().zip(&self.ys).map(|(t, y)| t * y).sum();
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Observations of every unit in sampler order (training units, then the
/// new unit).
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    units: Vec<UnitObservations>,
    total: usize,
}

impl Observations {
    pub fn from_dataset(dataset: &DegradationDataset) -> Self {
        let units: Vec<_> = dataset
            .all_units()
            .map(|u| UnitObservations::new(u.times().to_vec(), u.measurements().to_vec()))
            .collect();
        let total = units.iter().map(UnitObservations::len).sum();
        Self { units, total }
    }

    pub fn units(&self) -> &[UnitObservations] {
        &self.units
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Replaces the measurements of `unit`, keeping its times.
    pub fn set_measurements(&mut self, unit: usize, ys: Vec<f64>) -> Result<()> {
        let u = &mut self.units[unit];
        if ys.len() != u.times.len() {
            return Err(Error::LengthMismatch {
                left: u.times.len(),
                right: ys.len(),
            });
        }
        u.ys = ys;
        u.refresh();
        Ok(())
    }
}

/// Full latent state of the sampler. Class labels and atom indices are
/// zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsState {
    pub alpha: f64,
    pub betas: Vec<f64>,
    pub sigma_eps2: f64,
    pub classes: Vec<usize>,
    /// Stick-breaking fractions `V`, last one fixed at 1.
    pub sticks: Vec<f64>,
    /// Atom weights `p = stick_breaking(V)`.
    pub weights: Vec<f64>,
    pub atom_means: Vec<f64>,
    pub atom_vars: Vec<f64>,
    pub sigma_z2: f64,
    pub concentration: f64,
}

impl GibbsState {
    /// Deterministic starting point: least-squares slopes and intercept,
    /// equal atom weights, labels spread round-robin over the atoms.
    pub fn initial(obs: &Observations, prior: &PriorSpec) -> Self {
        let n_atoms = prior.truncation.max(1);
        let mut intercepts = Vec::new();
        let betas: Vec<f64> = obs
            .units()
            .iter()
            .map(
                |u| match crate::model::least_squares_line(&u.times, &u.ys) {
                    Ok((a, b)) => {
                        intercepts.push(a);
                        b
                    }
                    Err(_) => prior.m_mu,
                },
            )
            .collect();
        let alpha = if intercepts.is_empty() {
            obs.units().iter().map(|u| u.sum_y).sum::<f64>() / obs.total() as f64
        } else {
            intercepts.iter().sum::<f64>() / intercepts.len() as f64
        };
        let ssr: f64 = obs
            .units()
            .iter()
            .zip(&betas)
            .map(|(u, &b)| {
                u.points()
                    .map(|(t, y)| (y - alpha - b * t).powi(2))
                    .sum::<f64>()
            })
            .sum();
        let sigma_eps2 = (ssr / obs.total() as f64).max(1e-4);
        let sticks: Vec<f64> = (0..n_atoms).map(|h| 1.0 / (n_atoms - h) as f64).collect();
        let weights = crate::model::stick_weights(&sticks);
        Self {
            alpha,
            classes: (0..betas.len()).map(|i| i % n_atoms).collect(),
            betas,
            sigma_eps2,
            sticks,
            weights,
            atom_means: vec![prior.m_mu; n_atoms],
            atom_vars: vec![1.0; n_atoms],
            sigma_z2: 1.0,
            concentration: 1.0,
        }
    }

    /// Checks the structural invariants that hold after every sweep.
    pub fn check_invariants(&self) -> Result<()> {
        let n_atoms = self.atom_means.len();
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Numerical(format!("atom weights sum to {total}")));
        }
        if self.sticks.last() != Some(&1.0) {
            return Err(Error::Numerical("last stick fraction is not 1".into()));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.sigma_eps2)
            || !positive(self.sigma_z2)
            || !positive(self.concentration)
            || !self.atom_vars.iter().all(|&v| positive(v))
        {
            return Err(Error::Numerical("non-positive variance in state".into()));
        }
        if self.classes.iter().any(|&k| k >= n_atoms) {
            return Err(Error::Numerical("class label out of range".into()));
        }
        Ok(())
    }

    fn all_finite(&self) -> bool {
        self.alpha.is_finite()
            && self.sigma_eps2.is_finite()
            && self.sigma_z2.is_finite()
            && self.concentration.is_finite()
            && self.betas.iter().all(|v| v.is_finite())
            && self.atom_means.iter().all(|v| v.is_finite())
            && self.atom_vars.iter().all(|v| v.is_finite())
            && self.weights.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub total_iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Metropolis-Hastings steps per sweep for half-Cauchy scale updates.
    pub mh_inner_steps: usize,
    /// Keep the full latent state in every retained draw.
    pub keep_state: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            total_iters: 50_000,
            burn_in: 5_000,
            thin: 50,
            seed: 0,
            mh_inner_steps: 1,
            keep_state: false,
        }
    }
}

impl ChainConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.total_iters {
            return Err(Error::InvalidInput(
                "burn-in must be shorter than the chain".into(),
            ));
        }
        if self.thin == 0 || self.mh_inner_steps == 0 {
            return Err(Error::InvalidInput(
                "thin and mh_inner_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn retained_len(&self) -> usize {
        (self.total_iters - self.burn_in) / self.thin
    }
}

/// One retained iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraw {
    pub iter: usize,
    pub alpha: f64,
    pub betas: Vec<f64>,
    pub sigma_eps2: f64,
    pub state: Option<GibbsState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub kind: ModelKind,
    /// Unit ids in the order of `PosteriorDraw::betas`.
    pub unit_ids: Vec<String>,
    pub draws: Vec<PosteriorDraw>,
}

/// A running chain.
#[derive(Debug, Clone)]
pub struct Sampler {
    obs: Observations,
    prior: PriorSpec,
    state: GibbsState,
    rng: ChainRng,
    mh_steps: usize,
}

impl Sampler {
    pub fn new(obs: Observations, prior: PriorSpec, seed: u64, mh_steps: usize) -> Result<Self> {
        prior.validate()?;
        let state = GibbsState::initial(&obs, &prior);
        Ok(Self {
            obs,
            prior,
            state,
            rng: chain_rng(seed, 0),
            mh_steps: mh_steps.max(1),
        })
    }

    pub fn state(&self) -> &GibbsState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut GibbsState {
        &mut self.state
    }

    pub fn observations(&self) -> &Observations {
        &self.obs
    }

    pub fn observations_mut(&mut self) -> &mut Observations {
        &mut self.obs
    }

    pub fn rng_mut(&mut self) -> &mut ChainRng {
        &mut self.rng
    }

    fn guard(&self, update: &'static str, iteration: usize) -> Result<()> {
        if self.state.all_finite() {
            Ok(())
        } else {
            Err(Error::ChainDivergence { update, iteration })
        }
    }

    /// One full scan of the conditionals.
    pub fn sweep(&mut self, iteration: usize) -> Result<()> {
        let mixture = self.prior.kind == ModelKind::SemiParametric;
        let (obs, prior, rng) = (&self.obs, &self.prior, &mut self.rng);

        self.state.alpha = update_alpha(&self.state, obs, prior, rng);
        self.guard("alpha", iteration)?;

        for i in 0..self.state.betas.len() {
            self.state.betas[i] = update_beta(&self.state, obs, i, &mut self.rng);
        }
        self.guard("beta", iteration)?;

        self.state.sigma_eps2 = update_sigma_eps(&self.state, obs, prior, &mut self.rng);
        self.guard("sigma_eps", iteration)?;

        if mixture {
            for i in 0..self.state.classes.len() {
                self.state.classes[i] =
                    update_class(&self.state, i, &mut self.rng).map_err(|_| {
                        Error::ChainDivergence {
                            update: "class",
                            iteration,
                        }
                    })?;
            }
            let (sticks, weights) = update_sticks(&self.state, &mut self.rng);
            self.state.sticks = sticks;
            self.state.weights = weights;
            self.guard("sticks", iteration)?;
        }

        self.state.atom_means = update_atom_means(&self.state, prior, &mut self.rng);
        self.guard("atom_means", iteration)?;

        self.state.sigma_z2 = update_sigma_z(&self.state, prior, self.mh_steps, &mut self.rng);
        self.guard("sigma_z", iteration)?;

        self.state.atom_vars =
            update_atom_variances(&self.state, prior, self.mh_steps, &mut self.rng);
        self.guard("atom_variances", iteration)?;

        if mixture {
            self.state.concentration = update_concentration(&self.state, prior, &mut self.rng);
            self.guard("concentration", iteration)?;
        }
        Ok(())
    }
}

fn run(dataset: &DegradationDataset, prior: &PriorSpec, config: &ChainConfig) -> Result<Chain> {
    config.validate()?;
    let obs = Observations::from_dataset(dataset);
    let mut sampler = Sampler::new(obs, prior.clone(), config.seed, config.mh_inner_steps)?;
    let mut draws = Vec::with_capacity(config.retained_len());
    for iter in 1..=config.total_iters {
        sampler.sweep(iter)?;
        if iter > config.burn_in && (iter - config.burn_in).is_multiple_of(config.thin) {
            let s = sampler.state();
            draws.push(PosteriorDraw {
                iter,
                alpha: s.alpha,
                betas: s.betas.clone(),
                sigma_eps2: s.sigma_eps2,
                state: config.keep_state.then(|| s.clone()),
            });
        }
    }
    Ok(Chain {
        kind: prior.kind,
        unit_ids: dataset
            .all_units()
            .map(|u| u.unit_id().to_string())
            .collect(),
        draws,
    })
}

/// Runs the semi-parametric sampler and returns the thinned post-burn-in
/// draws.
pub fn run_chain(
    dataset: &DegradationDataset,
    prior: &PriorSpec,
    config: &ChainConfig,
) -> Result<Chain> {
    if prior.kind != ModelKind::SemiParametric {
        return Err(Error::InvalidInput(
            "run_chain needs a semi-parametric prior".into(),
        ));
    }
    run(dataset, prior, config)
}

/// Runs the parametric (single normal random effect) sampler.
pub fn run_parametric_chain(
    dataset: &DegradationDataset,
    prior: &PriorSpec,
    config: &ChainConfig,
) -> Result<Chain> {
    if prior.kind != ModelKind::Parametric {
        return Err(Error::InvalidInput(
            "run_parametric_chain needs a parametric prior".into(),
        ));
    }
    run(dataset, prior, config)
}

/// Dispatches on the prior's model kind.
pub fn fit(dataset: &DegradationDataset, prior: &PriorSpec, config: &ChainConfig) -> Result<Chain> {
    run(dataset, prior, config)
}

/// Draws whose slope for `unit` is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredDraws {
    pub draws: Vec<PosteriorDraw>,
    pub retained_fraction: f64,
}

pub fn filter_positive_beta(draws: &[PosteriorDraw], unit: usize) -> Result<FilteredDraws> {
    let kept: Vec<PosteriorDraw> = draws
        .iter()
        .filter(|d| d.betas.get(unit).is_some_and(|&b| b > 0.0))
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyPosterior { unit });
    }
    Ok(FilteredDraws {
        retained_fraction: kept.len() as f64 / draws.len() as f64,
        draws: kept,
    })
}
