//! Declarative experiment configs: a single TOML schema covering every
//! experiment kind. Unknown keys are rejected — a silent typo would corrupt a
//! physics sweep.

use serde::{Deserialize, Serialize};

use crate::dynamics::CoefficientSet;
use crate::error::{NlseError, Result};
use crate::field::{gaussian_packet, plane_wave, Wavefunction};
use crate::gauge::GaugeSchedule;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LinearBenchmark,
    Linearizability,
    MomentumCone,
    MixtureDistinguishability,
    GisinSignaling,
    BlowupScan,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    pub length: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new_1d(self.points, self.length)
    }
}

/// One named wavepacket.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default)]
    pub carrier: f64,
}

fn one() -> f64 {
    1.0
}

impl PacketConfig {
    pub fn build(&self, grid: &Grid) -> Result<Wavefunction> {
        gaussian_packet(grid, self.width, self.center, self.carrier)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "family")]
pub enum StateConfig {
    Gaussian(PacketConfig),
    PlaneWave {
        carrier: f64,
    },
    /// Complex-weighted superposition of packets (weights re/im pairs).
    Superposition {
        components: Vec<SuperpositionComponent>,
    },
    TwoParticleProduct {
        a: PacketConfig,
        b: PacketConfig,
    },
    TwoParticleEntangled {
        a: PacketConfig,
        b: PacketConfig,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperpositionComponent {
    pub weight_re: f64,
    #[serde(default)]
    pub weight_im: f64,
    #[serde(flatten)]
    pub packet: PacketConfig,
}

impl StateConfig {
    pub fn is_two_particle(&self) -> bool {
        matches!(
            self,
            StateConfig::TwoParticleProduct { .. } | StateConfig::TwoParticleEntangled { .. }
        )
    }

    /// Build a 1D state (two-particle families are assembled by the runner).
    pub fn build_1d(&self, grid: &Grid) -> Result<Wavefunction> {
        match self {
            StateConfig::Gaussian(p) => p.build(grid),
            StateConfig::PlaneWave { carrier } => {
                plane_wave(grid, *carrier)?.normalized()
            }
            StateConfig::Superposition { components } => {
                if components.is_empty() {
                    return Err(NlseError::Configuration("empty superposition".into()));
                }
                let mut acc = vec![num_complex::Complex64::default(); grid.total_points()];
                for c in components {
                    let w = num_complex::Complex64::new(c.weight_re, c.weight_im);
                    let packet = c.packet.build(grid)?;
                    for (a, v) in acc.iter_mut().zip(&packet.values) {
                        *a += w * v;
                    }
                }
                Wavefunction::new(grid.clone(), acc)?.normalized()
            }
            _ => Err(NlseError::Configuration(
                "two-particle state in a single-particle experiment".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum PotentialConfig {
    Zero,
    Harmonic {
        omega: f64,
    },
    SquareWell {
        depth: f64,
        half_width: f64,
    },
    /// Piecewise-linear table of `(x, V)` rows, interpolated onto the grid.
    Custom {
        breakpoints: Vec<(f64, f64)>,
    },
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig::Zero
    }
}

impl PotentialConfig {
    /// Sample onto grid coordinates.
    pub fn sample(&self, coords: &[f64]) -> Result<Vec<f64>> {
        match self {
            PotentialConfig::Zero => Ok(vec![0.0; coords.len()]),
            PotentialConfig::Harmonic { omega } => {
                if !omega.is_finite() {
                    return Err(NlseError::Configuration("non-finite omega".into()));
                }
                Ok(coords.iter().map(|&x| 0.5 * omega * omega * x * x).collect())
            }
            PotentialConfig::SquareWell { depth, half_width } => {
                if !(depth.is_finite() && half_width.is_finite() && *half_width > 0.0) {
                    return Err(NlseError::Configuration("bad square well".into()));
                }
                Ok(coords
                    .iter()
                    .map(|&x| if x.abs() <= *half_width { -*depth } else { 0.0 })
                    .collect())
            }
            PotentialConfig::Custom { breakpoints } => {
                if breakpoints.len() < 2 {
                    return Err(NlseError::Configuration(
                        "custom potential needs at least two breakpoints".into(),
                    ));
                }
                if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(NlseError::Configuration(
                        "custom potential breakpoints must increase".into(),
                    ));
                }
                Ok(coords
                    .iter()
                    .map(|&x| {
                        if x <= breakpoints[0].0 {
                            return breakpoints[0].1;
                        }
                        for w in breakpoints.windows(2) {
                            if x <= w[1].0 {
                                let s = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                                return w[0].1 + s * (x - w[0].0);
                            }
                        }
                        breakpoints[breakpoints.len() - 1].1
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    #[serde(default)]
    pub nu1: f64,
    #[serde(default)]
    pub nu2: f64,
    #[serde(default = "one")]
    pub mu0: f64,
    #[serde(default)]
    pub mu1: f64,
    #[serde(default)]
    pub mu2: f64,
    #[serde(default)]
    pub mu3: f64,
    #[serde(default)]
    pub mu4: f64,
    #[serde(default)]
    pub mu5: f64,
    #[serde(default)]
    pub alpha1: f64,
}

impl CoefficientConfig {
    pub fn build(&self) -> CoefficientSet {
        CoefficientSet {
            nu1: self.nu1,
            nu2: self.nu2,
            mu0: self.mu0,
            mu1: self.mu1,
            mu2: self.mu2,
            mu3: self.mu3,
            mu4: self.mu4,
            mu5: self.mu5,
            alpha1: self.alpha1,
        }
    }
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        CoefficientConfig {
            nu1: 0.0,
            nu2: 0.0,
            mu0: 1.0,
            mu1: 0.0,
            mu2: 0.0,
            mu3: 0.0,
            mu4: 0.0,
            mu5: 0.0,
            alpha1: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum GaugeConfig {
    Constant { gamma: f64 },
    PiecewiseLinear { breakpoints: Vec<(f64, f64)> },
}

impl GaugeConfig {
    pub fn build(&self) -> Result<GaugeSchedule> {
        let s = match self {
            GaugeConfig::Constant { gamma } => GaugeSchedule::Constant(*gamma),
            GaugeConfig::PiecewiseLinear { breakpoints } => {
                GaugeSchedule::PiecewiseLinear(breakpoints.clone())
            }
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt: f64,
    /// Number of recorded sample rows in the series output.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    25
}

/// Kind-specific knobs for the momentum-cone experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumConeConfig {
    pub t_list: Vec<f64>,
    /// Momentum intervals `(a, b)`.
    pub regions: Vec<(f64, f64)>,
    #[serde(default = "one")]
    pub mass: f64,
}

/// Kind-specific knobs for the mixture experiment: the two pure components
/// whose equal mixture is unraveled two ways.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureConfig {
    pub a: PacketConfig,
    pub b: PacketConfig,
    #[serde(default = "default_region_count")]
    pub region_count: usize,
    /// Duration of the evolved effects in the family.
    #[serde(default = "default_effect_duration")]
    pub effect_duration: f64,
}

fn default_region_count() -> usize {
    8
}

fn default_effect_duration() -> f64 {
    0.5
}

/// Kind-specific knobs for the two-particle signaling experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GisinConfig {
    /// Potential seen by particle 1.
    pub v1: PotentialConfig,
    /// Remote-potential variants for particle 2 (the first is the baseline).
    pub remote: Vec<PotentialConfig>,
    #[serde(default = "default_region_count")]
    pub marginal_region_count: usize,
    /// Also run at dt/2 and report both statistics.
    #[serde(default)]
    pub dt_convergence: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Pass threshold for the experiment's primary verdict.
    #[serde(default = "default_primary_tol")]
    pub primary: f64,
    /// Secondary threshold where a kind needs one (documented per kind).
    #[serde(default)]
    pub secondary: Option<f64>,
}

fn default_primary_tol() -> f64 {
    1e-4
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig { primary: default_primary_tol(), secondary: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    pub state: StateConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub coefficients: CoefficientConfig,
    #[serde(default)]
    pub gauge: Option<GaugeConfig>,
    pub time: TimeConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default = "one")]
    pub mass: f64,
    /// Output file stem; files land under the runner's output directory.
    #[serde(default = "default_stem")]
    pub stem: String,
    #[serde(default)]
    pub momentum_cone: Option<MomentumConeConfig>,
    #[serde(default)]
    pub mixture: Option<MixtureConfig>,
    #[serde(default)]
    pub gisin: Option<GisinConfig>,
}

fn default_stem() -> String {
    "experiment".into()
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| NlseError::Configuration(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_canonical_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| NlseError::Configuration(format!("config serialize error: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(NlseError::Configuration(format!("mass {} must be positive", self.mass)));
        }
        if !(self.time.t_final.is_finite() && self.time.t_final > 0.0) {
            return Err(NlseError::Configuration("t_final must be positive".into()));
        }
        if !(self.time.dt.is_finite() && self.time.dt > 0.0) {
            return Err(NlseError::Configuration("dt must be positive".into()));
        }
        if self.time.samples == 0 {
            return Err(NlseError::Configuration("samples must be at least 1".into()));
        }
        if !self.coefficients.build().all_finite() {
            return Err(NlseError::Configuration("non-finite coefficients".into()));
        }
        if let Some(g) = &self.gauge {
            g.build()?;
        }
        if self.stem.is_empty()
            || self.stem.contains(std::path::MAIN_SEPARATOR)
            || self.stem.contains("..")
        {
            return Err(NlseError::Configuration(format!("bad output stem {:?}", self.stem)));
        }
        match self.kind {
            ExperimentKind::Linearizability => {
                if self.gauge.is_none() {
                    return Err(NlseError::Configuration(
                        "linearizability needs a [gauge] section".into(),
                    ));
                }
            }
            ExperimentKind::MomentumCone => {
                let mc = self.momentum_cone.as_ref().ok_or_else(|| {
                    NlseError::Configuration("momentum_cone needs a [momentum_cone] section".into())
                })?;
                if mc.t_list.is_empty() || mc.regions.is_empty() {
                    return Err(NlseError::Configuration(
                        "momentum_cone needs t_list and regions".into(),
                    ));
                }
                if mc.t_list.windows(2).any(|w| w[1] <= w[0]) || mc.t_list[0] <= 0.0 {
                    return Err(NlseError::Configuration(
                        "t_list must be positive and increasing".into(),
                    ));
                }
            }
            ExperimentKind::MixtureDistinguishability => {
                if self.mixture.is_none() {
                    return Err(NlseError::Configuration(
                        "mixture_distinguishability needs a [mixture] section".into(),
                    ));
                }
            }
            ExperimentKind::GisinSignaling => {
                let gc = self.gisin.as_ref().ok_or_else(|| {
                    NlseError::Configuration("gisin_signaling needs a [gisin] section".into())
                })?;
                if gc.remote.is_empty() {
                    return Err(NlseError::Configuration(
                        "gisin needs at least one remote potential".into(),
                    ));
                }
                if !self.state.is_two_particle() {
                    return Err(NlseError::Configuration(
                        "gisin needs a two-particle state family".into(),
                    ));
                }
            }
            _ => {}
        }
        if self.state.is_two_particle() && self.kind != ExperimentKind::GisinSignaling {
            return Err(NlseError::Configuration(
                "two-particle states only run under gisin_signaling".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "linear_benchmark"

[grid]
points = 128
length = 32.0

[state]
family = "gaussian"
width = 1.0

[time]
t_final = 1.0
dt = 0.002
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::LinearBenchmark);
        assert_eq!(cfg.grid.points, 128);
        assert_eq!(cfg.mass, 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("[time]", "typo_key = 1\n[time]");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn missing_grid_is_rejected() {
        let text = MINIMAL.replace("[grid]\npoints = 128\nlength = 32.0\n", "");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn round_trip_is_identity_on_canonical_form() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let canonical = cfg.to_canonical_toml().unwrap();
        let reparsed = ExperimentConfig::from_toml_str(&canonical).unwrap();
        assert_eq!(canonical, reparsed.to_canonical_toml().unwrap());
    }

    #[test]
    fn kind_specific_sections_are_required() {
        let text = MINIMAL.replace("linear_benchmark", "momentum_cone");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = MINIMAL.replace("linear_benchmark", "linearizability");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn custom_potential_interpolates() {
        let p = PotentialConfig::Custom {
            breakpoints: vec![(-1.0, 0.0), (1.0, 2.0)],
        };
        let v = p.sample(&[-2.0, 0.0, 1.0, 3.0]).unwrap();
        assert_eq!(v, vec![0.0, 1.0, 2.0, 2.0]);
    }
}
