//! Synthetic degradation studies: slope mixtures, path generation, the
//! fine-grid residual-life oracle and prediction error metrics.

use libm::tgamma as gamma_fn;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Weibull};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{summarize, PosteriorSummary};
use crate::dist::{chain_rng, mix_seed, sample_normal};
use crate::gibbs::{fit, Chain, ChainConfig};
use crate::model::{DegradationDataset, LinearPathParams, ModelKind, PriorSpec, UnitPath};
use crate::rul::{ks_to_truth, RulDistribution};
use crate::tmcmc::{hpd_interval, predict_residual_life, tmcmc_run, TmcmcConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// Mean and variance.
    Normal {
        mean: f64,
        var: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    Weibull {
        shape: f64,
        scale: f64,
    },
}

impl Family {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Family::Normal { mean, var } => mean.is_finite() && var >= 0.0 && var.is_finite(),
            Family::Gamma { shape, rate } => shape > 0.0 && rate > 0.0,
            Family::Weibull { shape, scale } => shape > 0.0 && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid mixture component {self:?}"
            )))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Family::Normal { mean, var } => sample_normal(rng, mean, var),
            Family::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate)
                .expect("validated")
                .sample(rng),
            Family::Weibull { shape, scale } => {
                Weibull::new(scale, shape).expect("validated").sample(rng)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Family::Normal { mean, .. } => mean,
            Family::Gamma { shape, rate } => shape / rate,
            Family::Weibull { shape, scale } => scale * gamma_fn(1.0 + 1.0 / shape),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Family::Normal { var, .. } => var,
            Family::Gamma { shape, rate } => shape / (rate * rate),
            Family::Weibull { shape, scale } => {
                let g1 = gamma_fn(1.0 + 1.0 / shape);
                scale * scale * (gamma_fn(1.0 + 2.0 / shape) - g1 * g1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    components: Vec<(f64, Family)>,
}

impl MixtureSpec {
    pub fn new(components: Vec<(f64, Family)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("mixture needs a component".into()));
        }
        for (w, f) in &components {
            if !(0.0..=1.0).contains(w) {
                return Err(Error::InvalidParameter(format!(
                    "mixture weight {w} outside [0, 1]"
                )));
            }
            f.validate()?;
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {total}"
            )));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(f64, Family)] {
        &self.components
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (w, f) in &self.components {
            if *w > 0.0 {
                chosen = Some(f);
            }
            acc += w;
            if u < acc && *w > 0.0 {
                break;
            }
        }
        chosen.expect("weights sum to one").sample(rng)
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|(w, f)| w * f.mean()).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.components
            .iter()
            .map(|(w, f)| w * (f.variance() + f.mean().powi(2)))
            .sum::<f64>()
            - m * m
    }
}

pub fn sample_mixture<R: Rng + ?Sized>(spec: &MixtureSpec, rng: &mut R) -> f64 {
    spec.sample(rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub case_id: u8,
    pub alpha_true: f64,
    pub sigma_eps2_true: f64,
    pub threshold: f64,
    pub slopes: MixtureSpec,
    pub n_units: usize,
    /// Number of grid points on `[0, 1]`.
    pub grid_points: usize,
    pub seed: u64,
}

impl CaseSpec {
    /// One of the five study cases with `n_units` units observed on
    /// `grid_points` equally spaced times in `[0, 1]`.
    pub fn study(case_id: u8, n_units: usize, grid_points: usize, seed: u64) -> Result<Self> {
        use Family::*;
        let n = |mean, var| Normal { mean, var };
        let (components, sigma_eps2_true, threshold) = match case_id {
            1 => (
                vec![
                    (
                        0.4,
                        Gamma {
                            shape: 40.0,
                            rate: 20.0,
                        },
                    ),
                    (
                        0.25,
                        Gamma {
                            shape: 70.0,
                            rate: 20.0,
                        },
                    ),
                    (
                        0.35,
                        Gamma {
                            shape: 100.0,
                            rate: 20.0,
                        },
                    ),
                ],
                0.7,
                11.0,
            ),
            2 => (
                vec![
                    (
                        0.4,
                        Weibull {
                            shape: 20.0,
                            scale: 2.0,
                        },
                    ),
                    (
                        0.25,
                        Weibull {
                            shape: 40.0,
                            scale: 4.0,
                        },
                    ),
                    (
                        0.35,
                        Weibull {
                            shape: 80.0,
                            scale: 8.0,
                        },
                    ),
                ],
                0.7,
                12.0,
            ),
            3 => (vec![(0.6, n(3.0, 0.1)), (0.4, n(6.0, 0.2))], 0.5, 9.0),
            4 => (
                vec![(0.4, n(2.0, 0.1)), (0.3, n(4.0, 0.15)), (0.3, n(6.0, 0.12))],
                0.6,
                9.0,
            ),
            5 => (
                vec![
                    (0.3, n(2.0, 0.1)),
                    (0.2, n(4.0, 0.15)),
                    (0.2, n(6.0, 0.12)),
                    (0.15, n(8.0, 0.15)),
                    (0.15, n(10.0, 0.1)),
                ],
                0.7,
                13.0,
            ),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "cases are 1..=5, got {case_id}"
                )))
            }
        };
        if n_units == 0 || grid_points < 2 {
            return Err(Error::InvalidInput(
                "need at least one unit and two grid points".into(),
            ));
        }
        Ok(Self {
            case_id,
            alpha_true: 2.0,
            sigma_eps2_true,
            threshold,
            slopes: MixtureSpec::new(components)?,
            n_units,
            grid_points,
            seed,
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        let steps = (self.grid_points - 1) as f64;
        (0..self.grid_points).map(|j| j as f64 / steps).collect()
    }
}

/// Generated paths and the slopes that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticData {
    pub paths: Vec<UnitPath>,
    pub true_betas: Vec<f64>,
    pub threshold: f64,
}

impl SyntheticData {
    /// All units as training units.
    pub fn dataset(&self) -> Result<DegradationDataset> {
        DegradationDataset::new(self.paths.clone(), None, self.threshold)
    }
}

/// Draws each unit's slope from the case mixture and observes
/// `alpha + beta t + eps` on the grid, stopping after the first reading at or
/// above the threshold.
pub fn generate_paths(case: &CaseSpec) -> Result<SyntheticData> {
    let mut rng = chain_rng(case.seed, 0);
    let grid = case.grid();
    let mut paths = Vec::with_capacity(case.n_units);
    let mut true_betas = Vec::with_capacity(case.n_units);
    for u in 0..case.n_units {
        let beta = case.slopes.sample(&mut rng);
        let (mut times, mut ys) = (Vec::new(), Vec::new());
        for &t in &grid {
            let y = case.alpha_true + beta * t + sample_normal(&mut rng, 0.0, case.sigma_eps2_true);
            times.push(t);
            ys.push(y);
            if y >= case.threshold {
                break;
            }
        }
        paths.push(UnitPath::new((u + 1).to_string(), times, ys)?);
        true_betas.push(beta);
    }
    Ok(SyntheticData {
        paths,
        true_betas,
        threshold: case.threshold,
    })
}

/// Spacing of the oracle grid.
pub const ORACLE_STEP: f64 = 0.001;
/// Oracle steps before giving up.
pub const ORACLE_MAX_STEPS: usize = 1_000_000;

/// First-passage residual life: walks `t_k + j * 0.001` with fresh noise and
/// returns `j * 0.001` at the first reading at or above `threshold`.
pub fn true_rul_oracle<R: Rng + ?Sized>(
    alpha: f64,
    beta: f64,
    sigma_eps2: f64,
    threshold: f64,
    t_k: f64,
    rng: &mut R,
) -> Result<f64> {
    for j in 1..=ORACLE_MAX_STEPS {
        let dt = j as f64 * ORACLE_STEP;
        let noise = if sigma_eps2 > 0.0 {
            sample_normal(rng, 0.0, sigma_eps2)
        } else {
            0.0
        };
        if alpha + beta * (t_k + dt) + noise >= threshold {
            return Ok(dt);
        }
    }
    Err(Error::NoCrossing {
        steps: ORACLE_MAX_STEPS,
    })
}

fn check_lengths(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: actual.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("no predictions".into()));
    }
    Ok(())
}

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(pred, actual)?;
    let ss: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    Ok((ss / pred.len() as f64).sqrt())
}

pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(pred, actual)?;
    let s: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum();
    Ok(s / pred.len() as f64)
}

/// Residual-life method: `M1` conditions on `T > 0`, `M2` does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    M1,
    M2,
}

impl Method {
    pub fn constrained(self) -> bool {
        self == Method::M1
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Method::M1 => "m1",
            Method::M2 => "m2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMode {
    /// Refit with each unit in turn as the new unit.
    PerUnit,
    /// Fit once on all units and reuse the chain for every unit.
    Single,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRunConfig {
    pub sp_scenario: u8,
    pub p_scenario: u8,
    pub chain: ChainConfig,
    pub tmcmc_iters: usize,
    pub tmcmc_burn_in: usize,
    pub tmcmc_thin: usize,
    pub hpd_mass: f64,
    pub fit_mode: FitMode,
    /// Seed for chains, transformation samplers and the oracle.
    pub seed: u64,
}

impl CaseRunConfig {
    pub fn new(sp_scenario: u8, p_scenario: u8, seed: u64) -> Self {
        let t = TmcmcConfig::additive(0);
        Self {
            sp_scenario,
            p_scenario,
            chain: ChainConfig::default(),
            tmcmc_iters: t.total_iters,
            tmcmc_burn_in: t.burn_in,
            tmcmc_thin: t.thin,
            hpd_mass: 0.95,
            fit_mode: FitMode::PerUnit,
            seed,
        }
    }

    fn tmcmc(&self, method: Method, seed: u64) -> TmcmcConfig {
        let base = if method.constrained() {
            TmcmcConfig::multiplicative(seed)
        } else {
            TmcmcConfig::additive(seed)
        };
        TmcmcConfig {
            total_iters: self.tmcmc_iters,
            burn_in: self.tmcmc_burn_in,
            thin: self.tmcmc_thin,
            ..base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub kind: ModelKind,
    pub method: Method,
    pub median: f64,
    pub interval: (f64, f64),
    /// KS distance between the approximated distribution and the
    /// data-generating one.
    pub ks: f64,
    pub retained_fraction: f64,
    pub acceptance_rate: f64,
}

impl Prediction {
    pub fn covers(&self, truth: f64) -> bool {
        self.interval.0 <= truth && truth <= self.interval.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitResult {
    pub unit_id: String,
    pub true_beta: f64,
    pub t_k: f64,
    pub true_rul: f64,
    pub predictions: Vec<Prediction>,
}

impl UnitResult {
    pub fn prediction(&self, kind: ModelKind, method: Method) -> Option<&Prediction> {
        self.predictions
            .iter()
            .find(|p| p.kind == kind && p.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub kind: ModelKind,
    pub method: Method,
    pub rmse: f64,
    pub mae: f64,
    pub coverage: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case: CaseSpec,
    pub config: CaseRunConfig,
    pub data: SyntheticData,
    pub units: Vec<UnitResult>,
    pub aggregates: Vec<Aggregate>,
    /// Posterior summaries of `alpha` from the fit in natural unit order.
    pub alpha_summaries: Vec<(ModelKind, PosteriorSummary)>,
}

impl CaseResult {
    pub fn aggregate(&self, kind: ModelKind, method: Method) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.kind == kind && a.method == method)
    }

    pub fn alpha_summary(&self, kind: ModelKind) -> Option<&PosteriorSummary> {
        self.alpha_summaries
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, s)| s)
    }
}

const KINDS: [ModelKind; 2] = [ModelKind::SemiParametric, ModelKind::Parametric];
const METHODS: [Method; 2] = [Method::M1, Method::M2];

fn kind_tag(kind: ModelKind) -> u64 {
    match kind {
        ModelKind::SemiParametric => 0,
        ModelKind::Parametric => 1,
    }
}

fn fit_kind(
    dataset: &DegradationDataset,
    kind: ModelKind,
    config: &CaseRunConfig,
    tag: u64,
) -> Result<Chain> {
    let scenario = match kind {
        ModelKind::SemiParametric => config.sp_scenario,
        ModelKind::Parametric => config.p_scenario,
    };
    let prior = PriorSpec::for_dataset(kind, scenario, dataset)?;
    let chain_cfg = ChainConfig {
        seed: mix_seed(config.seed, tag),
        ..config.chain.clone()
    };
    fit(dataset, &prior, &chain_cfg)
}

#[allow(clippy::too_many_arguments)]
fn predict_unit(
    chain: &Chain,
    index: usize,
    t_k: f64,
    case: &CaseSpec,
    truth: &LinearPathParams,
    kind: ModelKind,
    method: Method,
    config: &CaseRunConfig,
    seed: u64,
) -> Result<Prediction> {
    let dist = RulDistribution::from_draws(
        &chain.draws,
        index,
        t_k,
        case.threshold,
        method.constrained(),
    )?;
    let retained = dist.triples().len() as f64 / chain.draws.len() as f64;
    let out = tmcmc_run(&dist, &config.tmcmc(method, seed))?;
    Ok(Prediction {
        kind,
        method,
        median: predict_residual_life(&out.samples)?,
        interval: hpd_interval(&out.samples, config.hpd_mass)?,
        ks: ks_to_truth(&dist, truth)?,
        retained_fraction: retained,
        acceptance_rate: out.acceptance_rate,
    })
}

/// Runs one study case end to end: generates data, fits both models,
/// predicts every unit's residual life with both methods and scores the
/// predictions against the oracle.
pub fn run_case(case: &CaseSpec, config: &CaseRunConfig) -> Result<CaseResult> {
    let data = generate_paths(case)?;
    let n = data.paths.len();

    let t_ks: Vec<f64> = data
        .paths
        .iter()
        .map(|p| {
            p.last_time_below(case.threshold).ok_or_else(|| {
                Error::InvalidInput("first reading already at threshold".into())
                    .for_unit(p.unit_id())
            })
        })
        .collect::<Result<_>>()?;

    let full = data.dataset()?;
    let shared: Vec<Chain> = match config.fit_mode {
        FitMode::Single => KINDS
            .iter()
            .map(|&k| fit_kind(&full, k, config, kind_tag(k)))
            .collect::<Result<_>>()?,
        FitMode::PerUnit => Vec::new(),
    };

    let units: Vec<UnitResult> = (0..n)
        .into_par_iter()
        .map(|u| -> Result<UnitResult> {
            let path = &data.paths[u];
            let truth =
                LinearPathParams::new(case.alpha_true, data.true_betas[u], case.sigma_eps2_true)?;
            let mut oracle_rng = chain_rng(mix_seed(case.seed, 1 + u as u64), 1);
            let true_rul = true_rul_oracle(
                truth.alpha,
                truth.beta,
                truth.sigma_eps2,
                case.threshold,
                t_ks[u],
                &mut oracle_rng,
            )?;
            let mut predictions = Vec::with_capacity(4);
            for &kind in &KINDS {
                let unit_tag = ((u as u64 + 1) << 8) | kind_tag(kind);
                let (chain, index) = match config.fit_mode {
                    FitMode::Single => (shared[kind_tag(kind) as usize].clone(), u),
                    FitMode::PerUnit => {
                        let ds = DegradationDataset::with_new_unit(&data.paths, u, case.threshold)?;
                        let index = ds.new_unit_index();
                        (fit_kind(&ds, kind, config, unit_tag)?, index)
                    }
                };
                for (m, &method) in METHODS.iter().enumerate() {
                    let seed = mix_seed(config.seed, (unit_tag << 4) | (m as u64 + 2));
                    predictions.push(predict_unit(
                        &chain, index, t_ks[u], case, &truth, kind, method, config, seed,
                    )?);
                }
            }
            Ok(UnitResult {
                unit_id: path.unit_id().to_string(),
                true_beta: truth.beta,
                t_k: t_ks[u],
                true_rul,
                predictions,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let truths: Vec<f64> = units.iter().map(|u| u.true_rul).collect();
    let mut aggregates = Vec::new();
    for &kind in &KINDS {
        for &method in &METHODS {
            let preds: Vec<&Prediction> = units
                .iter()
                .map(|u| {
                    u.prediction(kind, method)
                        .expect("every unit has every prediction")
                })
                .collect();
            let medians: Vec<f64> = preds.iter().map(|p| p.median).collect();
            aggregates.push(Aggregate {
                kind,
                method,
                rmse: rmse(&medians, &truths)?,
                mae: mae(&medians, &truths)?,
                coverage: preds
                    .iter()
                    .zip(&truths)
                    .filter(|(p, &t)| p.covers(t))
                    .count(),
            });
        }
    }

    let alpha_summaries = KINDS
        .iter()
        .map(|&kind| {
            let chain = match config.fit_mode {
                FitMode::Single => shared[kind_tag(kind) as usize].clone(),
                FitMode::PerUnit => {
                    let ds = DegradationDataset::with_new_unit(&data.paths, n - 1, case.threshold)?;
                    fit_kind(&ds, kind, config, ((n as u64) << 8) | kind_tag(kind))?
                }
            };
            let alphas: Vec<f64> = chain.draws.iter().map(|d| d.alpha).collect();
            Ok((kind, summarize(&alphas, "alpha")?))
        })
        .collect::<Result<_>>()?;

    Ok(CaseResult {
        case: case.clone(),
        config: config.clone(),
        data,
        units,
        aggregates,
        alpha_summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_normal_component() {
        let spec = MixtureSpec::new(vec![(
            1.0,
            Family::Normal {
                mean: 3.0,
                var: 0.0,
            },
        )])
        .unwrap();
        let mut rng = chain_rng(1, 0);
        assert!((0..100).all(|_| spec.sample(&mut rng) == 3.0));
    }

    #[test]
    fn zero_weight_component_is_never_drawn() {
        let spec = MixtureSpec::new(vec![
            (
                1.0,
                Family::Normal {
                    mean: 1.0,
                    var: 0.0,
                },
            ),
            (
                0.0,
                Family::Normal {
                    mean: 2.0,
                    var: 0.0,
                },
            ),
        ])
        .unwrap();
        let mut rng = chain_rng(2, 0);
        assert!((0..10_000).all(|_| spec.sample(&mut rng) == 1.0));
        assert!(MixtureSpec::new(vec![(
            0.5,
            Family::Normal {
                mean: 0.0,
                var: 1.0
            }
        )])
        .is_err());
    }

    #[test]
    fn case_one_component_means() {
        let case = CaseSpec::study(1, 10, 31, 0).unwrap();
        let means: Vec<f64> = case
            .slopes
            .components()
            .iter()
            .map(|(_, f)| f.mean())
            .collect();
        assert_eq!(means, vec![2.0, 3.5, 5.0]);
        assert!((case.slopes.mean() - 3.425).abs() < 1e-12);
    }

    #[test]
    fn mixture_moments_match_closed_form() {
        let mut rng = chain_rng(3, 0);
        for id in 1..=5 {
            let spec = CaseSpec::study(id, 10, 31, 0).unwrap().slopes;
            let n = 1_000_000;
            let xs: Vec<f64> = (0..n).map(|_| spec.sample(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let se = (spec.variance() / n as f64).sqrt();
            assert!(
                (mean - spec.mean()).abs() < 3.0 * se,
                "case {id}: {mean} vs {}",
                spec.mean()
            );
        }
    }

    #[test]
    fn noiseless_path_stops_at_first_crossing() {
        let mut case = CaseSpec::study(1, 1, 11, 0).unwrap();
        case.sigma_eps2_true = 0.0;
        case.slopes = MixtureSpec::new(vec![(
            1.0,
            Family::Normal {
                mean: 20.0,
                var: 0.0,
            },
        )])
        .unwrap();
        let data = generate_paths(&case).unwrap();
        let p = &data.paths[0];
        assert_eq!(p.len(), 6);
        assert!((p.times()[5] - 0.5).abs() < 1e-15);

        case.slopes = MixtureSpec::new(vec![(
            1.0,
            Family::Normal {
                mean: 0.1,
                var: 0.0,
            },
        )])
        .unwrap();
        assert_eq!(generate_paths(&case).unwrap().paths[0].len(), 11);
        case.grid_points = 31;
        assert_eq!(generate_paths(&case).unwrap().paths[0].len(), 31);
    }

    #[test]
    fn generation_is_reproducible_and_truncates_once() {
        let case = CaseSpec::study(3, 30, 31, 17).unwrap();
        let a = generate_paths(&case).unwrap();
        assert_eq!(a, generate_paths(&case).unwrap());
        for p in &a.paths {
            let over = p
                .measurements()
                .iter()
                .filter(|&&y| y >= case.threshold)
                .count();
            assert!(over <= 1);
            if over == 1 {
                assert!(*p.measurements().last().unwrap() >= case.threshold);
            } else {
                assert_eq!(p.len(), 31);
            }
        }
    }

    #[test]
    fn oracle_examples() {
        let mut rng = chain_rng(4, 0);
        assert_eq!(
            true_rul_oracle(0.0, 1.0, 0.0, 5.0, 0.0, &mut rng).unwrap(),
            5.0
        );
        assert_eq!(
            true_rul_oracle(4.9995, 1.0, 0.0, 5.0, 0.0, &mut rng).unwrap(),
            0.001
        );
        assert!(matches!(
            true_rul_oracle(0.0, 1e-9, 0.0, 5.0, 0.0, &mut rng),
            Err(Error::NoCrossing { .. })
        ));
    }

    #[test]
    fn noise_advances_the_first_crossing() {
        let mut rng = chain_rng(5, 0);
        let mut noisy: Vec<f64> = (0..1000)
            .map(|_| true_rul_oracle(0.0, 1.0, 0.25, 5.0, 0.0, &mut rng).unwrap())
            .collect();
        noisy.sort_by(f64::total_cmp);
        assert!(noisy[500] <= 5.0);
    }

    #[test]
    fn metric_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[1.0, 2.0], &[0.0, 0.0]).unwrap() - 2.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(mae(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 1.5);
        assert_eq!(rmse(&[3.0], &[1.0]).unwrap(), 2.0);
        assert_eq!(mae(&[3.0], &[1.0]).unwrap(), 2.0);
        assert!(matches!(
            rmse(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae(pairs in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 1..100)) {
            let (p, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = rmse(&p, &a).unwrap();
            let m = mae(&p, &a).unwrap();
            prop_assert!(r >= 0.0 && m >= 0.0);
            prop_assert!(r >= m - 1e-12);
        }
    }

    #[test]
    fn small_case_runs_deterministically() {
        let case = CaseSpec::study(3, 4, 11, 2).unwrap();
        let mut cfg = CaseRunConfig::new(2, 2, 5);
        cfg.chain = ChainConfig {
            total_iters: 600,
            burn_in: 100,
            thin: 5,
            ..ChainConfig::default()
        };
        cfg.fit_mode = FitMode::Single;
        let a = run_case(&case, &cfg).unwrap();
        let b = run_case(&case, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.units.len(), 4);
        assert_eq!(a.aggregates.len(), 4);
        for u in &a.units {
            assert!(u.true_rul > 0.0);
            let d = &a
                .data
                .paths
                .iter()
                .find(|p| p.unit_id() == u.unit_id)
                .unwrap();
            let k = d.times().iter().position(|&t| t == u.t_k).unwrap();
            assert!(d.measurements()[k] < case.threshold);
            assert!(
                u.prediction(ModelKind::Parametric, Method::M1)
                    .unwrap()
                    .median
                    > 0.0
            );
        }
        for agg in &a.aggregates {
            assert!(agg.rmse >= agg.mae);
        }
    }
}
