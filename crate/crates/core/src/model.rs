//! Domain types, prior scenarios and the deterministic pieces of the linear
//! degradation model.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Observed degradation readings of one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitPath {
    unit_id: String,
    times: Vec<f64>,
    measurements: Vec<f64>,
}

impl UnitPath {
    pub fn new(
        unit_id: impl Into<String>,
        times: Vec<f64>,
        measurements: Vec<f64>,
    ) -> Result<Self> {
        let unit_id = unit_id.into();
        if times.is_empty() {
            return Err(Error::InvalidInput(format!(
                "unit {unit_id} has no observations"
            )));
        }
        if times.len() != measurements.len() {
            return Err(Error::LengthMismatch {
                left: times.len(),
                right: measurements.len(),
            });
        }
        if times.iter().chain(&measurements).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "unit {unit_id} has non-finite values"
            )));
        }
        if times[0] < 0.0 {
            return Err(Error::InvalidInput(format!(
                "unit {unit_id} has negative times"
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!(
                "unit {unit_id} times are not strictly increasing"
            )));
        }
        Ok(Self {
            unit_id,
            times,
            measurements,
        })
    }

    pub fn unit_id(&self) -> &str {
        &self.unit_id
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn measurements(&self) -> &[f64] {
        &self.measurements
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times
            .iter()
            .copied()
            .zip(self.measurements.iter().copied())
    }

    /// Time of the last reading strictly below `threshold`, provided every
    /// reading up to it is also below. `None` when the first reading already
    /// reaches the threshold.
    pub fn last_time_below(&self, threshold: f64) -> Option<f64> {
        let crossed = self.measurements.iter().position(|&y| y >= threshold);
        match crossed {
            Some(0) => None,
            Some(j) => Some(self.times[j - 1]),
            None => self.times.last().copied(),
        }
    }

    /// Ordinary least-squares fit of `y = alpha + beta * t`.
    pub fn least_squares(&self) -> Result<(f64, f64)> {
        least_squares_line(&self.times, &self.measurements)
            .map_err(|e| e.for_unit(self.unit_id.clone()))
    }
}

/// Training units, the optional unit whose residual life is predicted, and
/// the failure threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationDataset {
    units: Vec<UnitPath>,
    new_unit: Option<UnitPath>,
    threshold: f64,
}

impl DegradationDataset {
    pub fn new(units: Vec<UnitPath>, new_unit: Option<UnitPath>, threshold: f64) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::InvalidInput(
                "dataset needs at least one training unit".into(),
            ));
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidInput("threshold must be finite".into()));
        }
        Ok(Self {
            units,
            new_unit,
            threshold,
        })
    }

    /// Splits `paths` so that the unit at `index` becomes the new unit and the
    /// rest are training units, keeping their relative order.
    pub fn with_new_unit(paths: &[UnitPath], index: usize, threshold: f64) -> Result<Self> {
        if index >= paths.len() {
            return Err(Error::InvalidInput(format!(
                "unit index {index} out of range for {} units",
                paths.len()
            )));
        }
        let mut units = paths.to_vec();
        let new_unit = units.remove(index);
        if units.is_empty() {
            return Self::new(vec![new_unit], None, threshold);
        }
        Self::new(units, Some(new_unit), threshold)
    }

    pub fn units(&self) -> &[UnitPath] {
        &self.units
    }

    pub fn new_unit(&self) -> Option<&UnitPath> {
        self.new_unit.as_ref()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Training units followed by the new unit, in sampler index order.
    pub fn all_units(&self) -> impl Iterator<Item = &UnitPath> {
        self.units.iter().chain(self.new_unit.iter())
    }

    pub fn unit_count(&self) -> usize {
        self.units.len() + usize::from(self.new_unit.is_some())
    }

    /// Sampler index of the new unit, or of the last training unit when there
    /// is none.
    pub fn new_unit_index(&self) -> usize {
        self.unit_count() - 1
    }

    pub fn total_observations(&self) -> usize {
        self.all_units().map(UnitPath::len).sum()
    }
}

/// Parameters of one linear degradation path with Gaussian measurement error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPathParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma_eps2: f64,
}

impl LinearPathParams {
    pub fn new(alpha: f64, beta: f64, sigma_eps2: f64) -> Result<Self> {
        if !(sigma_eps2 > 0.0) || !sigma_eps2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "measurement variance must be positive, got {sigma_eps2}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            sigma_eps2,
        })
    }
}

pub fn linear_path(alpha: f64, beta: f64, t: f64) -> f64 {
    alpha + beta * t
}

/// Stick-breaking weights `p_h = v_h * prod_{j<h} (1 - v_j)`.
///
/// The last fraction closes the stick; it must be 1.
pub fn stick_breaking(fractions: &[f64]) -> Result<Vec<f64>> {
    if fractions.is_empty() {
        return Err(Error::InvalidInput("no stick-breaking fractions".into()));
    }
    if let Some(v) = fractions.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidInput(format!(
            "stick fraction {v} outside [0, 1]"
        )));
    }
    if fractions[fractions.len() - 1] != 1.0 {
        return Err(Error::InvalidInput(
            "last stick fraction must equal 1".into(),
        ));
    }
    Ok(stick_weights(fractions))
}

/// Unchecked stick-breaking, for callers that maintain the invariants.
pub(crate) fn stick_weights(fractions: &[f64]) -> Vec<f64> {
    let mut remaining = 1.0;
    let mut weights = Vec::with_capacity(fractions.len());
    for &v in fractions {
        weights.push(v * remaining);
        remaining *= 1.0 - v;
    }
    weights
}

/// Expected number of distinct atoms among `m` draws from a Dirichlet process
/// with concentration `gamma`.
pub fn expected_clusters(gamma: f64, m: usize) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "concentration must be positive, got {gamma}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidInput("need at least one draw".into()));
    }
    Ok((0..m).map(|i| gamma / (gamma + i as f64)).sum())
}

pub(crate) fn least_squares_line(times: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = times.len() as f64;
    if times.len() < 2 {
        return Err(Error::DegenerateFit("fewer than two observations".into()));
    }
    let t_mean = times.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for (&t, &y) in times.iter().zip(ys) {
        stt += (t - t_mean) * (t - t_mean);
        sty += (t - t_mean) * (y - y_mean);
    }
    if stt <= 0.0 {
        return Err(Error::DegenerateFit(
            "fewer than two distinct time points".into(),
        ));
    }
    let beta = sty / stt;
    Ok((y_mean - beta * t_mean, beta))
}

/// Data-driven hyperparameters for the random-effect prior: the mean of the
/// per-unit least-squares slopes and `a = sqrt(v)`, `b = cbrt(v)` from their
/// sample variance `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalHyperparams {
    pub m_mu: f64,
    pub a: f64,
    pub b: f64,
    pub slope_variance: f64,
}

pub fn derive_empirical_hyperparams(dataset: &DegradationDataset) -> Result<EmpiricalHyperparams> {
    let slopes = dataset
        .all_units()
        .map(|u| u.least_squares().map(|(_, beta)| beta))
        .collect::<Result<Vec<_>>>()?;
    if slopes.len() < 2 {
        return Err(Error::DegenerateFit(
            "slope variance needs at least two units".into(),
        ));
    }
    let n = slopes.len() as f64;
    let m_mu = slopes.iter().sum::<f64>() / n;
    let v = slopes.iter().map(|b| (b - m_mu).powi(2)).sum::<f64>() / (n - 1.0);
    if !(v > 0.0) {
        return Err(Error::DegenerateFit(
            "all unit slopes are identical; use the vague prior scenario".into(),
        ));
    }
    Ok(EmpiricalHyperparams {
        m_mu,
        a: v.sqrt(),
        b: v.cbrt(),
        slope_variance: v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Dirichlet-process mixture of normals for the slopes.
    SemiParametric,
    /// A single normal for the slopes.
    Parametric,
}

impl ModelKind {
    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::SemiParametric => "sp",
            ModelKind::Parametric => "p",
        }
    }
}

/// Gamma distribution in shape/rate form (mean `shape / rate`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    pub const fn new(shape: f64, rate: f64) -> Self {
        Self { shape, rate }
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.shape > 0.0 && self.rate > 0.0 && self.shape.is_finite() && self.rate.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{what}: gamma shape and rate must be positive, got ({}, {})",
                self.shape, self.rate
            )))
        }
    }
}

/// Prior on a scale parameter of the random-effect hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScalePrior {
    /// Gamma prior on the precision `1 / sigma^2`.
    GammaPrecision(GammaParams),
    /// Half-Cauchy prior on the standard deviation `sigma`.
    HalfCauchy { scale: f64 },
}

impl ScalePrior {
    fn validate(&self, what: &str) -> Result<()> {
        match self {
            ScalePrior::GammaPrecision(g) => g.validate(what),
            ScalePrior::HalfCauchy { scale } if *scale > 0.0 && scale.is_finite() => Ok(()),
            ScalePrior::HalfCauchy { scale } => Err(Error::InvalidParameter(format!(
                "{what}: half-Cauchy scale must be positive, got {scale}"
            ))),
        }
    }
}

const VAGUE: GammaParams = GammaParams::new(0.01, 0.01);
const HALF_CAUCHY_SCALE: f64 = 25.0;

/// Every hyperparameter of one prior scenario.
///
/// Normal second arguments are variances. For the parametric model the
/// atom-level fields describe the single normal `N(mu_beta, sigma_beta^2)`,
/// `truncation` is 1 and `concentration` is unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub kind: ModelKind,
    pub scenario_id: u8,
    pub mu_alpha: f64,
    pub sigma_alpha2: f64,
    pub m_mu: f64,
    pub sigma_z: ScalePrior,
    pub sigma_h: ScalePrior,
    pub sigma_eps: GammaParams,
    pub concentration: GammaParams,
    pub truncation: usize,
}

impl PriorSpec {
    /// Semi-parametric scenario 1 to 5. Scenarios 2 to 5 need the empirical
    /// hyperparameters; `truncation` is normally the number of units.
    pub fn semi_parametric(
        scenario: u8,
        empirical: Option<&EmpiricalHyperparams>,
        truncation: usize,
    ) -> Result<Self> {
        let emp = || {
            empirical.copied().ok_or_else(|| {
                Error::InvalidInput(format!(
                    "semi-parametric scenario {scenario} needs empirical hyperparameters"
                ))
            })
        };
        let half_cauchy = ScalePrior::HalfCauchy {
            scale: HALF_CAUCHY_SCALE,
        };
        let (m_mu, sigma_h, sigma_z, concentration) = match scenario {
            1 => (
                0.0,
                ScalePrior::GammaPrecision(GammaParams::new(1.0, 0.01)),
                ScalePrior::GammaPrecision(VAGUE),
                VAGUE,
            ),
            2 | 3 => {
                let e = emp()?;
                let concentration = if scenario == 2 {
                    GammaParams::new(2.0, 2.0)
                } else {
                    VAGUE
                };
                (
                    e.m_mu,
                    ScalePrior::GammaPrecision(GammaParams::new(e.a, e.b)),
                    ScalePrior::GammaPrecision(VAGUE),
                    concentration,
                )
            }
            4 => (
                emp()?.m_mu,
                half_cauchy,
                half_cauchy,
                GammaParams::new(2.0, 2.0),
            ),
            5 => (emp()?.m_mu, half_cauchy, half_cauchy, VAGUE),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "semi-parametric scenarios are 1..=5, got {scenario}"
                )))
            }
        };
        let spec = Self {
            kind: ModelKind::SemiParametric,
            scenario_id: scenario,
            mu_alpha: 0.0,
            sigma_alpha2: 1000.0,
            m_mu,
            sigma_z,
            sigma_h,
            sigma_eps: VAGUE,
            concentration,
            truncation,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parametric scenario 1 to 3.
    pub fn parametric(scenario: u8, empirical: Option<&EmpiricalHyperparams>) -> Result<Self> {
        let emp = || {
            empirical.copied().ok_or_else(|| {
                Error::InvalidInput(format!(
                    "parametric scenario {scenario} needs empirical hyperparameters"
                ))
            })
        };
        let (m_mu, sigma_h, sigma_z) = match scenario {
            1 => (
                0.0,
                ScalePrior::GammaPrecision(VAGUE),
                ScalePrior::GammaPrecision(VAGUE),
            ),
            2 => {
                let e = emp()?;
                (
                    e.m_mu,
                    ScalePrior::GammaPrecision(GammaParams::new(e.a, e.b)),
                    ScalePrior::GammaPrecision(VAGUE),
                )
            }
            3 => {
                let hc = ScalePrior::HalfCauchy {
                    scale: HALF_CAUCHY_SCALE,
                };
                (emp()?.m_mu, hc, hc)
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "parametric scenarios are 1..=3, got {scenario}"
                )))
            }
        };
        let spec = Self {
            kind: ModelKind::Parametric,
            scenario_id: scenario,
            mu_alpha: 0.0,
            sigma_alpha2: 1000.0,
            m_mu,
            sigma_z,
            sigma_h,
            sigma_eps: VAGUE,
            concentration: VAGUE,
            truncation: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds the scenario for `kind` from the data, deriving empirical
    /// hyperparameters only when the scenario uses them. The truncation level
    /// is the number of units.
    pub fn for_dataset(
        kind: ModelKind,
        scenario: u8,
        dataset: &DegradationDataset,
    ) -> Result<Self> {
        let needs_empirical = scenario != 1;
        let empirical = if needs_empirical {
            Some(derive_empirical_hyperparams(dataset)?)
        } else {
            None
        };
        match kind {
            ModelKind::SemiParametric => {
                Self::semi_parametric(scenario, empirical.as_ref(), dataset.unit_count())
            }
            ModelKind::Parametric => Self::parametric(scenario, empirical.as_ref()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_alpha2 > 0.0) || !self.mu_alpha.is_finite() || !self.m_mu.is_finite() {
            return Err(Error::InvalidParameter(
                "alpha prior or m_mu is invalid".into(),
            ));
        }
        self.sigma_z.validate("sigma_z")?;
        self.sigma_h.validate("sigma_h")?;
        self.sigma_eps.validate("sigma_eps")?;
        self.concentration.validate("concentration")?;
        match self.kind {
            ModelKind::SemiParametric if self.truncation == 0 => Err(Error::InvalidParameter(
                "truncation level must be at least 1".into(),
            )),
            ModelKind::Parametric if self.truncation != 1 => Err(Error::InvalidParameter(
                "parametric model has a single component".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(id: &str, alpha: f64, beta: f64, times: &[f64]) -> UnitPath {
        let ys = times.iter().map(|&t| linear_path(alpha, beta, t)).collect();
        UnitPath::new(id, times.to_vec(), ys).unwrap()
    }

    #[test]
    fn linear_path_examples() {
        assert_eq!(linear_path(0.0, 1.0, 5.0), 5.0);
        assert_eq!(linear_path(2.0, 0.0, 100.0), 2.0);
        assert_eq!(linear_path(2.0, 3.0, 0.5), 3.5);
    }

    #[test]
    fn stick_breaking_examples() {
        assert_eq!(stick_breaking(&[1.0]).unwrap(), vec![1.0]);
        assert_eq!(
            stick_breaking(&[0.5, 0.5, 1.0]).unwrap(),
            vec![0.5, 0.25, 0.25]
        );
        assert_eq!(
            stick_breaking(&[0.0, 0.0, 1.0]).unwrap(),
            vec![0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn stick_breaking_rejects_bad_fractions() {
        assert!(matches!(
            stick_breaking(&[1.5, 1.0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            stick_breaking(&[-0.1, 1.0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            stick_breaking(&[0.3, 0.5]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn expected_clusters_examples() {
        assert_eq!(expected_clusters(1.0, 1).unwrap(), 1.0);
        // 1 + 1/2 + 1/3
        assert!((expected_clusters(1.0, 3).unwrap() - 11.0 / 6.0).abs() < 1e-15);
        let m = 20;
        let mut prev = 0.0;
        for gamma in [1.0, 10.0, 1e3, 1e6, 1e9] {
            let e = expected_clusters(gamma, m).unwrap();
            assert!(e > prev);
            let k = (m - 1) as f64;
            assert!(m as f64 - e <= k * k / (gamma + k) + 1e-9);
            prev = e;
        }
        assert!((expected_clusters(1e9, m).unwrap() - m as f64).abs() < 1e-6);
        assert!(expected_clusters(0.0, 3).is_err());
        assert!(expected_clusters(-1.0, 3).is_err());
    }

    #[test]
    fn empirical_hyperparams_two_units() {
        let t = [0.0, 0.5, 1.0];
        let ds = DegradationDataset::new(
            vec![line("a", 1.0, 2.0, &t)],
            Some(line("b", -3.0, 4.0, &t)),
            10.0,
        )
        .unwrap();
        let h = derive_empirical_hyperparams(&ds).unwrap();
        assert!((h.m_mu - 3.0).abs() < 1e-12);
        assert!((h.slope_variance - 2.0).abs() < 1e-12);
        assert!((h.a - 2f64.sqrt()).abs() < 1e-12);
        assert!((h.b - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn empirical_hyperparams_three_units() {
        // Sample statistics of {1, 2, 6}: mean 3, variance (4 + 1 + 9) / 2 = 7.
        let t = [0.0, 0.1, 0.2, 0.7];
        let units = vec![
            line("a", 2.0, 1.0, &t),
            line("b", 0.0, 2.0, &t),
            line("c", 5.0, 6.0, &t),
        ];
        let ds = DegradationDataset::new(units, None, 10.0).unwrap();
        let h = derive_empirical_hyperparams(&ds).unwrap();
        assert!((h.m_mu - 3.0).abs() < 1e-12);
        assert!((h.slope_variance - 7.0).abs() < 1e-12);
        assert!((h.a - 7f64.sqrt()).abs() < 1e-12);
        assert!((h.b - 7f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn empirical_hyperparams_degenerate() {
        let t = [0.0, 1.0, 2.0];
        let ds = DegradationDataset::new(
            vec![line("a", 0.0, 5.0, &t), line("b", 1.0, 5.0, &t)],
            None,
            10.0,
        )
        .unwrap();
        assert!(matches!(
            derive_empirical_hyperparams(&ds),
            Err(Error::DegenerateFit(_))
        ));

        let single = UnitPath::new("s", vec![1.0], vec![2.0]).unwrap();
        let ds =
            DegradationDataset::new(vec![line("a", 0.0, 5.0, &t), single], None, 10.0).unwrap();
        assert!(matches!(
            derive_empirical_hyperparams(&ds),
            Err(Error::Unit { .. })
        ));
    }

    #[test]
    fn unit_path_validation() {
        assert!(UnitPath::new("u", vec![], vec![]).is_err());
        assert!(UnitPath::new("u", vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(UnitPath::new("u", vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(UnitPath::new("u", vec![1.0, 0.5], vec![1.0, 2.0]).is_err());
        assert!(UnitPath::new("u", vec![0.0, 0.5], vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn last_time_below_threshold() {
        let u = UnitPath::new("u", vec![0.0, 0.1, 0.2, 0.3], vec![1.0, 2.0, 5.0, 6.0]).unwrap();
        assert_eq!(u.last_time_below(5.0), Some(0.1));
        assert_eq!(u.last_time_below(10.0), Some(0.3));
        assert_eq!(u.last_time_below(1.0), None);
    }

    #[test]
    fn prior_scenarios() {
        let emp = EmpiricalHyperparams {
            m_mu: 3.0,
            a: 2.0,
            b: 1.5,
            slope_variance: 4.0,
        };
        let p2 = PriorSpec::semi_parametric(2, Some(&emp), 10).unwrap();
        assert_eq!(
            p2.sigma_h,
            ScalePrior::GammaPrecision(GammaParams::new(2.0, 1.5))
        );
        assert_eq!(p2.concentration, GammaParams::new(2.0, 2.0));
        assert_eq!(p2.sigma_alpha2, 1000.0);
        let p1 = PriorSpec::semi_parametric(1, None, 10).unwrap();
        assert_eq!(p1.m_mu, 0.0);
        assert!(PriorSpec::semi_parametric(2, None, 10).is_err());
        assert!(PriorSpec::semi_parametric(6, Some(&emp), 10).is_err());
        let p5 = PriorSpec::semi_parametric(5, Some(&emp), 10).unwrap();
        assert_eq!(p5.sigma_z, ScalePrior::HalfCauchy { scale: 25.0 });
        let q3 = PriorSpec::parametric(3, Some(&emp)).unwrap();
        assert_eq!(q3.truncation, 1);
        assert_eq!(q3.sigma_h, ScalePrior::HalfCauchy { scale: 25.0 });
        assert!(PriorSpec::parametric(4, Some(&emp)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn stick_breaking_is_a_simplex(v in prop::collection::vec(0.0f64..=1.0, 0..30)) {
            let mut v = v;
            v.push(1.0);
            let p = stick_breaking(&v).unwrap();
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|w| (0.0..=1.0).contains(w)));
        }

        #[test]
        fn expected_clusters_is_monotone(gamma in 0.01f64..100.0, m in 2usize..200, dg in 0.01f64..10.0) {
            let e = expected_clusters(gamma, m).unwrap();
            prop_assert!(expected_clusters(gamma, m + 1).unwrap() > e);
            prop_assert!(expected_clusters(gamma + dg, m).unwrap() > e);
        }

        #[test]
        fn noiseless_slopes_are_recovered(
            slopes in prop::collection::vec(-20.0f64..20.0, 2..8),
            alpha in -5.0f64..5.0,
        ) {
            let t = [0.0, 0.1, 0.25, 0.5, 0.9];
            for (i, &b) in slopes.iter().enumerate() {
                let u = line(&i.to_string(), alpha, b, &t);
                let (_, fitted) = u.least_squares().unwrap();
                prop_assert!((fitted - b).abs() < 1e-10);
            }
        }
    }
}
