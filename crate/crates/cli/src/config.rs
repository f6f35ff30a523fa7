//! Experiment configuration: TOML schema and conversion to validated models.

use std::sync::Arc;

use fkqsd::dynamics::{Dynamics, ModelSpec, ModelState, TheoremCase};
use fkqsd::geometry::{Domain, DomainKind};
use fkqsd::lyapunov::{LyapunovKind, LyapunovSpec, ScanConfig};
use fkqsd::oracle::RadialPotential;
use fkqsd::particle::{HistCoords, Histogram, SmcConfig};
use fkqsd::potentials::{
    ConfiningKind, DriftKind, DriftSpec, InteractionSpec, LineChargeSpec, PairKind, PotentialSpec,
    Schrodinger, SingularKind,
};
use fkqsd::samplers::{LevyFamily, LevySpec};
use serde::{Deserialize, Serialize};

use crate::RunError;

/// Lyapunov function, exponents `p` and scan grid.
pub type LyapunovSetup = (LyapunovSpec<f64>, Vec<f64>, ScanConfig<f64>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One of `oL_case1`, `oL_case2`, `levy`, `kinetic`, `interacting`,
    /// `line_charge`, `nonsingular`.
    pub theorem_case: String,
    pub process: ProcessConfig,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub domain: DomainConfig,
    pub particles: ParticlesConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<HistogramConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler_test: Option<SamplerTestConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessConfig {
    Overdamped { dim: usize, drift: DriftConfig },
    Levy { dim: usize, levy: LevyConfig },
    /// `confinement` is the drift `−∇V_c` acting on the velocity.
    Kinetic { dim: usize, gamma: f64, confinement: DriftConfig },
    Interacting { dim: usize, particles: usize, levy: LevyConfig },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftConfig {
    Zero,
    Linear { kappa: f64 },
    GradientPower { coef: f64, exponent: f64 },
    DoubleWell { coef: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LevyConfig {
    BrownianStandard,
    IsotropicStable { alpha: f64 },
    RelativisticStable { alpha: f64, m: f64 },
    VarianceGamma,
    GeometricStable { alpha: f64 },
    JumpDiffusion { alpha: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialConfig {
    Point {
        singular: SingularConfig,
        confining: ConfiningConfig,
        #[serde(default)]
        offset: f64,
    },
    /// Confinement of every particle plus a pair repulsion.
    Interaction { confining: ConfiningConfig, pair: PairConfig },
    /// Radial profile of the distance to the first coordinate axis plus a
    /// confinement in `|x|`.
    LineCharge { profile: PairConfig, confining: ConfiningConfig },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingularConfig {
    None,
    Riesz { exponent: f64, coef: f64 },
    LennardJones { well_depth: f64, length_scale: f64 },
    Log { coef: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfiningConfig {
    None,
    Power { exponent: f64, coef: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairConfig {
    Riesz { exponent: f64, coef: f64 },
    LennardJones { well_depth: f64, length_scale: f64 },
    LogWithFloor { coef: f64, floor: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainConfig {
    #[default]
    Full,
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { r_in: f64, r_out: f64 },
    BallComplement { center: Vec<f64>, radius: f64 },
    Halfspace { normal: Vec<f64>, offset: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesConfig {
    pub n: usize,
    pub delta: f64,
    pub dt: f64,
    pub epochs: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    /// Start position of every particle.
    pub start: Vec<f64>,
    /// Start velocity, kinetic model only (default zero).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_velocity: Option<Vec<f64>>,
}

fn default_burn_in() -> f64 {
    0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistCoordsConfig {
    Cartesian,
    Radial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramConfig {
    pub coords: HistCoordsConfig,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub bins: usize,
    /// Particles used by the one-epoch quasi-stationarity check.
    #[serde(default = "default_check_particles")]
    pub check_particles: usize,
}

fn default_check_particles() -> usize {
    65536
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n_paths: usize,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Point-mass start of the traced law.
    pub start: Vec<f64>,
    pub n: usize,
    pub delta: f64,
    pub epochs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LyapunovSpecConfig {
    ExpRadial { epsilon: f64 },
    PowerRadial { k: f64 },
    Kinetic { a: f64, b: f64, gamma: f64 },
    Unit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    pub spec: LyapunovSpecConfig,
    pub p_list: Vec<f64>,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_r_min() -> f64 {
    ScanConfig::<f64>::default().r_min
}

fn default_r_max() -> f64 {
    ScanConfig::<f64>::default().r_max
}

fn default_points() -> usize {
    ScanConfig::<f64>::default().points
}

fn default_threshold() -> f64 {
    ScanConfig::<f64>::default().threshold
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerTestConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_sampler_dts")]
    pub dts: Vec<f64>,
    /// Radius of the frequency probe grid.
    #[serde(default = "default_probe_radius")]
    pub probe_radius: f64,
}

fn default_samples() -> usize {
    100_000
}

fn default_sampler_dts() -> Vec<f64> {
    vec![0.01, 0.1]
}

fn default_probe_radius() -> f64 {
    3.0
}

/// Grid eigenproblem solved by the `oracle` subcommand. Radial and interval
/// problems take the point potential along the first axis; the two-particle
/// reduction takes the interaction potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleConfig {
    Radial { dim: usize, radius: f64, n: usize },
    Interval { lo: f64, hi: f64, n: usize },
    TwoParticle { n: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    pub seed: u64,
}

fn default_directory() -> String {
    "out".into()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Validation(format!("config: {}", e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn declared_case(&self) -> Result<TheoremCase, RunError> {
        TheoremCase::from_tag(&self.theorem_case)
            .ok_or_else(|| RunError::Validation(format!("unknown theorem_case `{}`", self.theorem_case)))
    }

    /// Builds the model and checks that it meets the declared theorem case.
    pub fn model(&self) -> Result<ModelSpec<f64>, RunError> {
        let case = self.declared_case()?;
        let dynamics = self.process.dynamics()?;
        let potential = self.potential.build(&self.process)?;
        let domain = Domain::new(self.domain.kind(), dynamics.block_dim())?;
        let model = ModelSpec::new(dynamics, potential, domain)?;
        if !model.admissible_cases().contains(&case) {
            let admissible: Vec<_> = model.admissible_cases().iter().map(|c| c.tag()).collect();
            return Err(RunError::Validation(format!(
                "theorem_case `{}` does not hold for this model (admissible: [{}])",
                case.tag(),
                admissible.join(", ")
            )));
        }
        Ok(model)
    }

    pub fn start_state(&self, model: &ModelSpec<f64>) -> Result<ModelState<f64>, RunError> {
        self.state_at(model, self.particles.start.clone())
    }

    pub fn state_at(&self, model: &ModelSpec<f64>, x: Vec<f64>) -> Result<ModelState<f64>, RunError> {
        let state = if model.dynamics().is_kinetic() {
            let v = self
                .particles
                .start_velocity
                .clone()
                .unwrap_or_else(|| vec![0.0; x.len()]);
            ModelState::phase(x, v)
        } else {
            if self.particles.start_velocity.is_some() {
                return Err(RunError::Validation("start_velocity is only used by the kinetic model".into()));
            }
            ModelState::position(x)
        };
        if !model.contains(&state)? {
            return Err(RunError::Validation(
                "start is outside the domain or on the singular set".into(),
            ));
        }
        Ok(state)
    }

    pub fn smc(&self) -> SmcConfig<f64> {
        SmcConfig {
            delta: self.particles.delta,
            dt: self.particles.dt,
            epochs: self.particles.epochs,
            burn_in_fraction: self.particles.burn_in,
        }
    }

    pub fn histogram(&self) -> Result<Histogram<f64>, RunError> {
        let h = self
            .histogram
            .as_ref()
            .ok_or_else(|| RunError::Validation("this subcommand needs a [histogram] section".into()))?;
        let coords = match h.coords {
            HistCoordsConfig::Cartesian => HistCoords::Cartesian,
            HistCoordsConfig::Radial => HistCoords::Radial,
        };
        Ok(Histogram::new(coords, h.lo.clone(), h.hi.clone(), h.bins)?)
    }

    pub fn levy(&self) -> Result<LevySpec<f64>, RunError> {
        match &self.process {
            ProcessConfig::Levy { dim, levy } | ProcessConfig::Interacting { dim, levy, .. } => {
                Ok(LevySpec::new(levy.family(), *dim)?)
            }
            _ => Err(RunError::Validation("sampler-test needs a Lévy or interacting process".into())),
        }
    }

    pub fn lyapunov(&self) -> Result<LyapunovSetup, RunError> {
        let l = self
            .lyapunov
            .as_ref()
            .ok_or_else(|| RunError::Validation("lyapunov needs a [lyapunov] section".into()))?;
        let kind = match l.spec {
            LyapunovSpecConfig::ExpRadial { epsilon } => LyapunovKind::ExpRadial { epsilon },
            LyapunovSpecConfig::PowerRadial { k } => LyapunovKind::PowerRadial { k },
            LyapunovSpecConfig::Kinetic { a, b, gamma } => LyapunovKind::Kinetic { a, b, gamma },
            LyapunovSpecConfig::Unit => LyapunovKind::Unit,
        };
        let scan = ScanConfig {
            r_min: l.r_min,
            r_max: l.r_max,
            points: l.points,
            threshold: l.threshold,
            ..ScanConfig::default()
        };
        Ok((LyapunovSpec::new(kind)?, l.p_list.clone(), scan))
    }

    /// The potential the grid oracle discretizes, as a function of the
    /// radius (radial problems) or the coordinate (interval problems).
    pub fn oracle_potential(&self) -> Result<RadialPotential<f64>, RunError> {
        match self.potential.build(&self.process)? {
            Schrodinger::Point(p) => {
                let dim = p.dim();
                Ok(Arc::new(move |r: f64| {
                    let mut x = vec![0.0; dim];
                    x[0] = r;
                    p.eval(&x).to_extended()
                }))
            }
            _ => Err(RunError::Validation("radial and interval oracles need a point potential".into())),
        }
    }

    /// Trap strength and pair potential of a two-particle reduction.
    pub fn reduction_inputs(&self) -> Result<(f64, RadialPotential<f64>, usize), RunError> {
        let (dim, n) = match self.process {
            ProcessConfig::Interacting { dim, particles, .. } => (dim, particles),
            _ => return Err(RunError::Validation("two_particle oracle needs an interacting process".into())),
        };
        let PotentialConfig::Interaction { confining, pair } = self.potential else {
            return Err(RunError::Validation("two_particle oracle needs an interaction potential".into()));
        };
        let kappa = match confining {
            ConfiningConfig::Power { exponent: 2.0, coef } => 2.0 * coef,
            _ => {
                return Err(RunError::Validation(
                    "two_particle oracle needs a quadratic confinement coef·|x|^2".into(),
                ))
            }
        };
        if n != 2 {
            return Err(RunError::Validation("two_particle oracle needs exactly 2 particles".into()));
        }
        let pair = pair.kind();
        Ok((kappa, Arc::new(move |u: f64| pair.eval(u).to_extended()), dim))
    }
}

impl ProcessConfig {
    fn dynamics(&self) -> Result<Dynamics<f64>, RunError> {
        Ok(match self {
            ProcessConfig::Overdamped { dim, drift } => Dynamics::overdamped(drift.build()?, *dim)?,
            ProcessConfig::Levy { dim, levy } => Dynamics::Levy {
                levy: LevySpec::new(levy.family(), *dim)?,
            },
            ProcessConfig::Kinetic { dim, gamma, confinement } => {
                Dynamics::kinetic(confinement.build()?, *gamma, *dim)?
            }
            ProcessConfig::Interacting { dim, particles, levy } => {
                Dynamics::interacting(*particles, LevySpec::new(levy.family(), *dim)?)?
            }
        })
    }

    fn particle_dim(&self) -> usize {
        match self {
            ProcessConfig::Overdamped { dim, .. }
            | ProcessConfig::Levy { dim, .. }
            | ProcessConfig::Kinetic { dim, .. }
            | ProcessConfig::Interacting { dim, .. } => *dim,
        }
    }
}

impl DriftConfig {
    fn build(self) -> Result<DriftSpec<f64>, RunError> {
        let kind = match self {
            DriftConfig::Zero => DriftKind::Zero,
            DriftConfig::Linear { kappa } => DriftKind::Linear { kappa },
            DriftConfig::GradientPower { coef, exponent } => DriftKind::GradientPower { coef, exponent },
            DriftConfig::DoubleWell { coef } => DriftKind::DoubleWell { coef },
        };
        Ok(DriftSpec::new(kind)?)
    }
}

impl LevyConfig {
    fn family(self) -> LevyFamily<f64> {
        match self {
            LevyConfig::BrownianStandard => LevyFamily::BrownianStandard,
            LevyConfig::IsotropicStable { alpha } => LevyFamily::IsotropicStable { alpha },
            LevyConfig::RelativisticStable { alpha, m } => LevyFamily::RelativisticStable { alpha, m },
            LevyConfig::VarianceGamma => LevyFamily::VarianceGamma,
            LevyConfig::GeometricStable { alpha } => LevyFamily::GeometricStable { alpha },
            LevyConfig::JumpDiffusion { alpha } => LevyFamily::JumpDiffusion { alpha },
        }
    }
}

impl PotentialConfig {
    fn build(&self, process: &ProcessConfig) -> Result<Schrodinger<f64>, RunError> {
        let dim = process.particle_dim();
        Ok(match *self {
            PotentialConfig::Point { singular, confining, offset } => {
                Schrodinger::Point(PotentialSpec::new(singular.kind(), confining.kind(), offset, dim)?)
            }
            PotentialConfig::Interaction { confining, pair } => {
                let n = match process {
                    ProcessConfig::Interacting { particles, .. } => *particles,
                    _ => return Err(RunError::Validation("interaction potentials need an interacting process".into())),
                };
                let trap = PotentialSpec::new(SingularKind::None, confining.kind(), 0.0, dim)?;
                Schrodinger::Interaction(InteractionSpec::new(n, trap, pair.kind())?)
            }
            PotentialConfig::LineCharge { profile, confining } => {
                let trap = PotentialSpec::new(SingularKind::None, confining.kind(), 0.0, dim)?;
                Schrodinger::LineCharge(LineChargeSpec::new(profile.kind(), trap)?)
            }
        })
    }
}

impl SingularConfig {
    fn kind(self) -> SingularKind<f64> {
        match self {
            SingularConfig::None => SingularKind::None,
            SingularConfig::Riesz { exponent, coef } => SingularKind::Riesz { exponent, coef },
            SingularConfig::LennardJones { well_depth, length_scale } => {
                SingularKind::LennardJones { well_depth, length_scale }
            }
            SingularConfig::Log { coef } => SingularKind::LogSingular { coef },
        }
    }
}

impl ConfiningConfig {
    fn kind(self) -> ConfiningKind<f64> {
        match self {
            ConfiningConfig::None => ConfiningKind::None,
            ConfiningConfig::Power { exponent, coef } => ConfiningKind::Power { exponent, coef },
        }
    }
}

impl PairConfig {
    fn kind(self) -> PairKind<f64> {
        match self {
            PairConfig::Riesz { exponent, coef } => PairKind::Riesz { exponent, coef },
            PairConfig::LennardJones { well_depth, length_scale } => {
                PairKind::LennardJones { well_depth, length_scale }
            }
            PairConfig::LogWithFloor { coef, floor } => PairKind::LogWithFloor { coef, floor },
        }
    }
}

impl DomainConfig {
    fn kind(&self) -> DomainKind<f64> {
        match self.clone() {
            DomainConfig::Full => DomainKind::Full,
            DomainConfig::Ball { center, radius } => DomainKind::Ball { center, radius },
            DomainConfig::Annulus { r_in, r_out } => DomainKind::Annulus { r_in, r_out },
            DomainConfig::BallComplement { center, radius } => DomainKind::BallComplement { center, radius },
            DomainConfig::Halfspace { normal, offset } => DomainKind::Halfspace { normal, offset },
        }
    }
}
