//! Transformation-based MCMC over one-dimensional densities, and the point
//! and interval predictions built from its output.
//!
//! Each step draws `eps ~ g` and moves forward with probability `p`
//! (`x + eps` or `x * eps`) or backward otherwise (`x - eps` or `x / eps`).
//! The acceptance ratio carries the move-probability ratio and the Jacobian
//! of the transformation.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::{chain_rng, ChainRng};
use crate::rul::RulDistribution;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    /// `x -> x +/- eps` on the real line.
    Additive,
    /// `x -> x * eps` or `x / eps` on `(0, inf)`.
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsilonDist {
    HalfNormal {
        scale: f64,
    },
    /// Uniform on `(0, 1)`; exact zeros are redrawn.
    UnitUniform,
}

impl EpsilonDist {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EpsilonDist::HalfNormal { scale } => {
                let z: f64 = StandardNormal.sample(rng);
                scale * z.abs()
            }
            EpsilonDist::UnitUniform => loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    return u;
                }
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmcmcConfig {
    pub move_kind: MoveKind,
    pub x0: f64,
    pub p_forward: f64,
    pub total_iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub epsilon: EpsilonDist,
    pub seed: u64,
}

impl TmcmcConfig {
    pub fn additive(seed: u64) -> Self {
        Self {
            move_kind: MoveKind::Additive,
            x0: 1.0,
            p_forward: 0.5,
            total_iters: 10_000,
            burn_in: 1_000,
            thin: 10,
            epsilon: EpsilonDist::HalfNormal { scale: 1.0 },
            seed,
        }
    }

    pub fn multiplicative(seed: u64) -> Self {
        Self {
            move_kind: MoveKind::Multiplicative,
            epsilon: EpsilonDist::UnitUniform,
            ..Self::additive(seed)
        }
    }

    /// Multiplicative moves for the constrained distribution, additive ones
    /// otherwise.
    pub fn for_distribution(dist: &RulDistribution, seed: u64) -> Self {
        if dist.is_constrained() {
            Self::multiplicative(seed)
        } else {
            Self::additive(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_forward > 0.0 && self.p_forward < 1.0) {
            return Err(Error::InvalidInput(format!(
                "forward probability {} outside (0, 1)",
                self.p_forward
            )));
        }
        if self.move_kind == MoveKind::Multiplicative && !(self.x0 > 0.0) {
            return Err(Error::InvalidInput(
                "multiplicative moves need x0 > 0".into(),
            ));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidInput("x0 must be finite".into()));
        }
        if self.burn_in >= self.total_iters || self.thin == 0 {
            return Err(Error::InvalidInput("invalid burn-in or thinning".into()));
        }
        if let EpsilonDist::HalfNormal { scale } = self.epsilon {
            if !(scale > 0.0) {
                return Err(Error::InvalidInput("epsilon scale must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Proposal and log acceptance ratio of one move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub value: f64,
    pub forward: bool,
    /// Log of the move-probability ratio times the Jacobian term, excluding
    /// the target ratio.
    pub ln_correction: f64,
}

/// Deterministic part of a move for given `eps` and direction.
pub fn propose(x: f64, eps: f64, forward: bool, kind: MoveKind, p_forward: f64) -> Proposal {
    let ln_odds = ((1.0 - p_forward) / p_forward).ln();
    let (value, ln_jacobian) = match (kind, forward) {
        (MoveKind::Additive, true) => (x + eps, 0.0),
        (MoveKind::Additive, false) => (x - eps, 0.0),
        (MoveKind::Multiplicative, true) => (x * eps, eps.ln()),
        (MoveKind::Multiplicative, false) => (x / eps, -eps.ln()),
    };
    let ln_correction = if forward {
        ln_odds + ln_jacobian
    } else {
        -ln_odds + ln_jacobian
    };
    Proposal {
        value,
        forward,
        ln_correction,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub value: f64,
    pub ln_density: f64,
    pub accepted: bool,
}

fn step_from<R: Rng + ?Sized>(
    x: f64,
    ln_x: f64,
    target: &impl Fn(f64) -> f64,
    config: &TmcmcConfig,
    rng: &mut R,
) -> Step {
    let eps = config.epsilon.sample(rng);
    let forward = rng.random::<f64>() < config.p_forward;
    let prop = propose(x, eps, forward, config.move_kind, config.p_forward);
    let stay = Step {
        value: x,
        ln_density: ln_x,
        accepted: false,
    };
    if config.move_kind == MoveKind::Multiplicative && !(prop.value > 0.0 && prop.value.is_finite())
    {
        return stay;
    }
    let ln_new = target(prop.value);
    if ln_new.is_nan() || ln_new == f64::NEG_INFINITY {
        return stay;
    }
    let ln_ratio = (ln_new - ln_x + prop.ln_correction).min(0.0);
    let u: f64 = rng.random();
    if u < ln_ratio.exp() {
        Step {
            value: prop.value,
            ln_density: ln_new,
            accepted: true,
        }
    } else {
        stay
    }
}

/// One transformation step from `x` against the log density `target`.
pub fn tmcmc_step<R: Rng + ?Sized>(
    x: f64,
    target: impl Fn(f64) -> f64,
    config: &TmcmcConfig,
    rng: &mut R,
) -> Step {
    let ln_x = target(x);
    step_from(x, ln_x, &target, config, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmcmcOutput {
    pub samples: Vec<f64>,
    pub acceptance_rate: f64,
}

fn run_with_rng(
    target: &impl Fn(f64) -> f64,
    config: &TmcmcConfig,
    rng: &mut ChainRng,
) -> Result<TmcmcOutput> {
    config.validate()?;
    let mut x = config.x0;
    let mut ln_x = target(x);
    if !ln_x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "target density is zero at x0 = {x}"
        )));
    }
    let mut accepted = 0usize;
    let mut samples = Vec::with_capacity((config.total_iters - config.burn_in) / config.thin);
    for iter in 1..=config.total_iters {
        let s = step_from(x, ln_x, target, config, rng);
        x = s.value;
        ln_x = s.ln_density;
        accepted += usize::from(s.accepted);
        if iter > config.burn_in && (iter - config.burn_in).is_multiple_of(config.thin) {
            samples.push(x);
        }
    }
    if accepted == 0 {
        return Err(Error::StuckChain);
    }
    Ok(TmcmcOutput {
        samples,
        acceptance_rate: accepted as f64 / config.total_iters as f64,
    })
}

/// Runs a chain against an arbitrary log density.
pub fn sample_target(target: impl Fn(f64) -> f64, config: &TmcmcConfig) -> Result<TmcmcOutput> {
    run_with_rng(&target, config, &mut chain_rng(config.seed, 0))
}

/// Runs `chains` independent chains (one generator stream each) and pools
/// their retained samples in chain order.
pub fn sample_target_pooled(
    target: impl Fn(f64) -> f64,
    config: &TmcmcConfig,
    chains: usize,
) -> Result<TmcmcOutput> {
    let mut samples = Vec::new();
    let mut rate = 0.0;
    for c in 0..chains.max(1) {
        let out = run_with_rng(&target, config, &mut chain_rng(config.seed, c as u64))?;
        samples.extend(out.samples);
        rate += out.acceptance_rate;
    }
    Ok(TmcmcOutput {
        samples,
        acceptance_rate: rate / chains.max(1) as f64,
    })
}

fn check_support(dist: &RulDistribution, config: &TmcmcConfig) -> Result<()> {
    let expected = if dist.is_constrained() {
        MoveKind::Multiplicative
    } else {
        MoveKind::Additive
    };
    if config.move_kind != expected {
        return Err(Error::InvalidInput(format!(
            "{:?} moves do not match the distribution's support",
            config.move_kind
        )));
    }
    Ok(())
}

/// Samples a residual-life distribution.
pub fn tmcmc_run(dist: &RulDistribution, config: &TmcmcConfig) -> Result<TmcmcOutput> {
    check_support(dist, config)?;
    sample_target(|t| dist.ln_pdf(t), config)
}

/// Pooled variant of [`tmcmc_run`].
pub fn tmcmc_run_pooled(
    dist: &RulDistribution,
    config: &TmcmcConfig,
    chains: usize,
) -> Result<TmcmcOutput> {
    check_support(dist, config)?;
    sample_target_pooled(|t| dist.ln_pdf(t), config, chains)
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("samples contain NaN".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// Sample median; even lengths average the two central order statistics.
pub fn predict_residual_life(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    let xs = sorted(samples)?;
    let n = xs.len();
    Ok(if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    })
}

/// Shortest interval `[x_(j), x_(j+k)]` with `k = ceil(mass * n) - 1`; ties go
/// to the smallest lower end.
pub fn hpd_interval(samples: &[f64], mass: f64) -> Result<(f64, f64)> {
    if samples.len() < 20 {
        return Err(Error::InvalidInput(format!(
            "need at least 20 samples for an interval, got {}",
            samples.len()
        )));
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::InvalidInput(format!("mass {mass} outside (0, 1)")));
    }
    let xs = sorted(samples)?;
    let n = xs.len();
    let k = (((mass * n as f64) - 1e-9).ceil() as usize).clamp(1, n) - 1;
    let mut best = 0;
    let mut width = f64::INFINITY;
    for j in 0..n - k {
        let w = xs[j + k] - xs[j];
        if w < width {
            width = w;
            best = j;
        }
    }
    Ok((xs[best], xs[best + k]))
}
