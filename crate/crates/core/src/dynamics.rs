//! One-step transition kernels of the four process models.
//!
//! Both diffusions use plain Euler–Maruyama; the Lévy models add an exact
//! increment of the driving process.

use crate::error::{Error, Result};
use crate::geometry::{Domain, DomainKind, SingularSet};
use crate::potentials::{DriftSpec, PotentialClass, Schrodinger};
use crate::samplers::{IncrementSource, LevyFamily, LevySpec};
use crate::scalar::{norm, Real};

/// Threshold on `|b(x)|·dt` above which a step is flagged stiff.
pub const STIFF_THRESHOLD: f64 = 1e4;

#[derive(Clone, Debug, PartialEq)]
pub enum Dynamics<T> {
    /// `dX = b(X) dt + dB`.
    Overdamped { drift: DriftSpec<T>, dim: usize },
    /// `X = x + L_t` for a Lévy process `L`.
    Levy { levy: LevySpec<T> },
    /// `dx = v dt`, `dv = −∇V_c(x) dt − γ v dt + dB`.
    Kinetic { vc: DriftSpec<T>, gamma: T, dim: usize },
    /// `n` independent copies of a Lévy process, one per particle.
    Interacting { n: usize, levy: LevySpec<T> },
}

impl<T: Real> Dynamics<T> {
    pub fn overdamped(drift: DriftSpec<T>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::spec("dimension must be positive"));
        }
        Ok(Dynamics::Overdamped { drift, dim })
    }

    pub fn kinetic(vc: DriftSpec<T>, gamma: T, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::spec("dimension must be positive"));
        }
        if !(gamma > T::zero() && gamma.is_finite()) {
            return Err(Error::spec("kinetic model needs friction γ > 0"));
        }
        Ok(Dynamics::Kinetic { vc, gamma, dim })
    }

    pub fn interacting(n: usize, levy: LevySpec<T>) -> Result<Self> {
        if n < 2 {
            return Err(Error::spec("interacting model needs n ≥ 2"));
        }
        Ok(Dynamics::Interacting { n, levy })
    }

    /// Length of the position vector.
    pub fn position_dim(&self) -> usize {
        match self {
            Dynamics::Overdamped { dim, .. } | Dynamics::Kinetic { dim, .. } => *dim,
            Dynamics::Levy { levy } => levy.dim(),
            Dynamics::Interacting { n, levy } => n * levy.dim(),
        }
    }

    /// Length of one particle block (the whole position except for model 4).
    pub fn block_dim(&self) -> usize {
        match self {
            Dynamics::Interacting { levy, .. } => levy.dim(),
            _ => self.position_dim(),
        }
    }

    pub fn is_kinetic(&self) -> bool {
        matches!(self, Dynamics::Kinetic { .. })
    }

    /// Hamiltonian `V_c(x) + |v|²/2` of the kinetic model.
    pub fn hamiltonian(&self, state: &ModelState<T>) -> Option<T> {
        match self {
            Dynamics::Kinetic { vc, .. } => {
                Some(vc.primitive(&state.x) + crate::scalar::norm_sq(&state.v) * T::lit(0.5))
            }
            _ => None,
        }
    }
}

/// Position (and velocity for the kinetic model) of one process.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState<T> {
    pub x: Vec<T>,
    /// Empty except for the kinetic model.
    pub v: Vec<T>,
}

impl<T: Real> ModelState<T> {
    pub fn position(x: Vec<T>) -> Self {
        Self { x, v: Vec::new() }
    }

    pub fn phase(x: Vec<T>, v: Vec<T>) -> Self {
        Self { x, v }
    }
}

/// Which hypothesis set of the main results a configuration satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TheoremCase {
    /// Overdamped, drift of class c1, potential S1 or S2.
    OLCase1,
    /// Overdamped, potential S2 (or a bounded killing domain), any admissible drift.
    OLCase2,
    /// Lévy process with an S2 potential.
    Levy,
    /// Kinetic Langevin with c1 confinement and an S1/S2 potential.
    Kinetic,
    /// Interacting particles with coercive confinement and a collision singularity.
    Interacting,
    /// Brownian particle with a line-charge potential.
    LineCharge,
    /// Regular, lower bounded potential: coercive, or confinement from a c1 drift.
    Nonsingular,
}

impl TheoremCase {
    pub fn tag(self) -> &'static str {
        match self {
            TheoremCase::OLCase1 => "oL_case1",
            TheoremCase::OLCase2 => "oL_case2",
            TheoremCase::Levy => "levy",
            TheoremCase::Kinetic => "kinetic",
            TheoremCase::Interacting => "interacting",
            TheoremCase::LineCharge => "line_charge",
            TheoremCase::Nonsingular => "nonsingular",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "oL_case1" => TheoremCase::OLCase1,
            "oL_case2" => TheoremCase::OLCase2,
            "levy" => TheoremCase::Levy,
            "kinetic" => TheoremCase::Kinetic,
            "interacting" => TheoremCase::Interacting,
            "line_charge" => TheoremCase::LineCharge,
            "nonsingular" => TheoremCase::Nonsingular,
            _ => return None,
        })
    }
}

/// Dynamics, potential and killing domain of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec<T> {
    dynamics: Dynamics<T>,
    potential: Schrodinger<T>,
    domain: Domain<T>,
    singular: SingularSet,
    cases: Vec<TheoremCase>,
}

impl<T: Real> ModelSpec<T> {
    pub fn new(dynamics: Dynamics<T>, potential: Schrodinger<T>, domain: Domain<T>) -> Result<Self> {
        let pd = dynamics.position_dim();
        if potential.state_dim() != pd {
            return Err(Error::spec(format!(
                "potential acts on dimension {}, dynamics on {pd}",
                potential.state_dim()
            )));
        }
        if domain.block_dim() != dynamics.block_dim() {
            return Err(Error::spec(format!(
                "domain dimension {} does not match the particle dimension {}",
                domain.block_dim(),
                dynamics.block_dim()
            )));
        }
        match (&dynamics, &potential) {
            (Dynamics::Interacting { n, .. }, Schrodinger::Interaction(i)) if *n == i.n() => {}
            (Dynamics::Interacting { .. }, _) => {
                return Err(Error::spec("interacting dynamics need a matching interaction potential"))
            }
            (_, Schrodinger::Interaction(_)) => {
                return Err(Error::spec("interaction potentials need interacting dynamics"))
            }
            _ => {}
        }
        let singular = potential.singular_set();
        let cases = admissible_cases(&dynamics, &potential, &domain);
        Ok(Self {
            dynamics,
            potential,
            domain,
            singular,
            cases,
        })
    }

    pub fn dynamics(&self) -> &Dynamics<T> {
        &self.dynamics
    }

    pub fn potential(&self) -> &Schrodinger<T> {
        &self.potential
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn singular_set(&self) -> SingularSet {
        self.singular
    }

    /// Every theorem case whose hypotheses this configuration meets.
    pub fn admissible_cases(&self) -> &[TheoremCase] {
        &self.cases
    }

    /// The case the run instantiates: the first admissible one.
    pub fn theorem_case(&self) -> Option<TheoremCase> {
        self.cases.first().copied()
    }

    /// The same model with `c` added to the potential.
    pub fn with_shifted_potential(&self, c: T) -> Result<Self> {
        Self::new(self.dynamics.clone(), self.potential.shifted(c)?, self.domain.clone())
    }

    pub fn with_domain(&self, domain: Domain<T>) -> Result<Self> {
        Self::new(self.dynamics.clone(), self.potential.clone(), domain)
    }

    /// Whether the state is alive: position in the open domain, off the
    /// singular set.
    pub fn contains(&self, state: &ModelState<T>) -> Result<bool> {
        self.check_state(state)?;
        Ok(self.contains_unchecked(state))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, state: &ModelState<T>) -> bool {
        self.domain.contains_unchecked(&state.x, &self.singular)
    }

    pub fn singularity_distance(&self, state: &ModelState<T>) -> T {
        self.singular.distance(&state.x)
    }

    pub fn check_state(&self, state: &ModelState<T>) -> Result<()> {
        let pd = self.dynamics.position_dim();
        if state.x.len() != pd {
            return Err(Error::DimensionMismatch {
                expected: pd,
                got: state.x.len(),
            });
        }
        let vd = if self.dynamics.is_kinetic() { pd } else { 0 };
        if state.v.len() != vd {
            return Err(Error::DimensionMismatch {
                expected: vd,
                got: state.v.len(),
            });
        }
        Ok(())
    }

    /// A state at position `x`, with zero velocity for the kinetic model.
    pub fn state_at(&self, x: Vec<T>) -> ModelState<T> {
        let v = if self.dynamics.is_kinetic() {
            vec![T::zero(); x.len()]
        } else {
            Vec::new()
        };
        ModelState { x, v }
    }

    /// Advances `state` by one step of length `dt`.
    ///
    /// Fails if `dt ≤ 0`, on a dimension mismatch, or if the state sits on
    /// the singular set.
    pub fn step<N: IncrementSource<T>>(
        &self,
        state: &ModelState<T>,
        dt: T,
        noise: &mut N,
    ) -> Result<ModelState<T>> {
        if !(dt > T::zero()) {
            return Err(Error::arg("time step must be positive"));
        }
        self.check_state(state)?;
        if self.singular.contains(&state.x) {
            return Err(Error::SingularState);
        }
        let mut next = state.clone();
        let mut scratch = Scratch::new(self.dynamics.position_dim());
        self.advance(&mut next, dt, noise, &mut scratch)?;
        Ok(next)
    }

    /// In-place step without validation. Returns whether the drift was stiff.
    #[inline]
    pub(crate) fn advance<N: IncrementSource<T>>(
        &self,
        state: &mut ModelState<T>,
        dt: T,
        noise: &mut N,
        scratch: &mut Scratch<T>,
    ) -> Result<bool> {
        match &self.dynamics {
            Dynamics::Overdamped { drift, .. } => {
                Ok(overdamped_step(drift, &mut state.x, dt, noise, scratch))
            }
            Dynamics::Levy { levy } => {
                noise.levy(levy, dt, &mut scratch.noise)?;
                for (x, n) in state.x.iter_mut().zip(&scratch.noise) {
                    *x += *n;
                }
                Ok(false)
            }
            Dynamics::Kinetic { vc, gamma, .. } => Ok(kinetic_step(
                vc,
                *gamma,
                &mut state.x,
                &mut state.v,
                dt,
                noise,
                scratch,
            )),
            Dynamics::Interacting { levy, .. } => {
                let d = levy.dim();
                for block in state.x.chunks_mut(d) {
                    noise.levy(levy, dt, &mut scratch.noise[..d])?;
                    for (x, n) in block.iter_mut().zip(&scratch.noise[..d]) {
                        *x += *n;
                    }
                }
                Ok(false)
            }
        }
    }
}

/// Work buffers reused across steps.
pub(crate) struct Scratch<T> {
    drift: Vec<T>,
    noise: Vec<T>,
}

impl<T: Real> Scratch<T> {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            drift: vec![T::zero(); dim],
            noise: vec![T::zero(); dim],
        }
    }
}

fn overdamped_step<T: Real, N: IncrementSource<T>>(
    drift: &DriftSpec<T>,
    x: &mut [T],
    dt: T,
    noise: &mut N,
    scratch: &mut Scratch<T>,
) -> bool {
    drift.eval_into(x, &mut scratch.drift);
    noise.gaussian(dt, &mut scratch.noise);
    for ((xi, b), n) in x.iter_mut().zip(&scratch.drift).zip(&scratch.noise) {
        *xi += *b * dt + *n;
    }
    norm(&scratch.drift) * dt > T::lit(STIFF_THRESHOLD)
}

/// Euler–Maruyama step of the kinetic Langevin equation: the position moves
/// with the old velocity and the velocity update uses the old state.
/// Accepts `γ = 0` (free flight), unlike [`Dynamics::kinetic`].
pub fn kinetic_step_free<T: Real, N: IncrementSource<T>>(
    vc: &DriftSpec<T>,
    gamma: T,
    x: &mut [T],
    v: &mut [T],
    dt: T,
    noise: &mut N,
) -> bool {
    let mut scratch = Scratch::new(x.len());
    kinetic_step(vc, gamma, x, v, dt, noise, &mut scratch)
}

fn kinetic_step<T: Real, N: IncrementSource<T>>(
    vc: &DriftSpec<T>,
    gamma: T,
    x: &mut [T],
    v: &mut [T],
    dt: T,
    noise: &mut N,
    scratch: &mut Scratch<T>,
) -> bool {
    // b = −∇V_c
    vc.eval_into(x, &mut scratch.drift);
    noise.gaussian(dt, &mut scratch.noise);
    for i in 0..x.len() {
        let vi = v[i];
        x[i] += vi * dt;
        v[i] = vi + (scratch.drift[i] - gamma * vi) * dt + scratch.noise[i];
    }
    norm(&scratch.drift) * dt > T::lit(STIFF_THRESHOLD)
}

fn admissible_cases<T: Real>(
    dynamics: &Dynamics<T>,
    potential: &Schrodinger<T>,
    domain: &Domain<T>,
) -> Vec<TheoremCase> {
    let bounded_domain = matches!(
        domain.kind(),
        DomainKind::Ball { .. } | DomainKind::Annulus { .. }
    );
    let mut cases = Vec::new();
    let brownian = |levy: &LevySpec<T>| matches!(levy.family(), LevyFamily::BrownianStandard);
    match (dynamics, potential) {
        (Dynamics::Overdamped { drift, .. }, Schrodinger::Point(p)) => {
            let g = drift.growth_class();
            let singular = matches!(p.class(), PotentialClass::S1 | PotentialClass::S2);
            if g.satisfies_c1() && singular {
                cases.push(TheoremCase::OLCase1);
            }
            if p.class() == PotentialClass::S2 || bounded_domain {
                cases.push(TheoremCase::OLCase2);
            }
            if p.class() == PotentialClass::Coercive
                || (p.class() == PotentialClass::Bounded && g.satisfies_c1())
            {
                cases.push(TheoremCase::Nonsingular);
            }
        }
        (Dynamics::Levy { levy }, Schrodinger::Point(p)) => {
            if p.class() == PotentialClass::S2 || (bounded_domain && p.class() != PotentialClass::Coercive) {
                cases.push(TheoremCase::Levy);
            }
            if brownian(levy) && p.class() == PotentialClass::Coercive {
                cases.push(TheoremCase::Nonsingular);
            }
        }
        (Dynamics::Kinetic { vc, .. }, Schrodinger::Point(p)) => {
            if vc.growth_class().satisfies_c1()
                && matches!(p.class(), PotentialClass::S1 | PotentialClass::S2)
            {
                cases.push(TheoremCase::Kinetic);
            }
        }
        (Dynamics::Interacting { .. }, Schrodinger::Interaction(_)) => {
            cases.push(TheoremCase::Interacting);
        }
        (Dynamics::Overdamped { .. }, Schrodinger::LineCharge(_)) => {
            cases.push(TheoremCase::LineCharge);
        }
        (Dynamics::Levy { levy }, Schrodinger::LineCharge(_)) if brownian(levy) => {
            cases.push(TheoremCase::LineCharge);
        }
        _ => {}
    }
    cases
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{ConfiningKind, PotentialSpec, SingularKind};
    use crate::samplers::{RngIncrements, ZeroNoise};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flat(dim: usize) -> Schrodinger<f64> {
        Schrodinger::Point(PotentialSpec::constant(0.0, dim).unwrap())
    }

    #[test]
    fn overdamped_zero_noise_examples() {
        let m = ModelSpec::new(
            Dynamics::overdamped(DriftSpec::zero(), 2).unwrap(),
            flat(2),
            Domain::full(2),
        )
        .unwrap();
        let s = ModelState::position(vec![0.3, -0.2]);
        assert_eq!(m.step(&s, 0.1, &mut ZeroNoise).unwrap(), s);

        let m = ModelSpec::new(
            Dynamics::overdamped(DriftSpec::linear(1.0).unwrap(), 2).unwrap(),
            flat(2),
            Domain::full(2),
        )
        .unwrap();
        let next = m.step(&ModelState::position(vec![1.0, 0.0]), 0.1, &mut ZeroNoise).unwrap();
        assert!((next.x[0] - 0.9).abs() < 1e-15 && next.x[1] == 0.0);
    }

    #[test]
    fn kinetic_free_flight() {
        let mut x = vec![0.0, 0.0];
        let mut v = vec![1.0, 0.0];
        kinetic_step_free(&DriftSpec::zero(), 0.0, &mut x, &mut v, 0.5, &mut ZeroNoise);
        assert_eq!((x, v), (vec![0.5, 0.0], vec![1.0, 0.0]));
        assert!(Dynamics::kinetic(DriftSpec::<f64>::zero(), 0.0, 2).is_err());
    }

    #[test]
    fn hamiltonian_of_kinetic_state() {
        let dyn_ = Dynamics::kinetic(DriftSpec::linear(2.0).unwrap(), 1.0, 2).unwrap();
        let s = ModelState::phase(vec![1.0, 0.0], vec![0.0, 2.0]);
        // V_c = |x|² + 1, |v|²/2 = 2
        assert_eq!(dyn_.hamiltonian(&s), Some(4.0));
    }

    #[test]
    fn step_rejects_bad_input() {
        let coulomb = Schrodinger::Point(PotentialSpec::coulomb(1.0, 2).unwrap());
        let m = ModelSpec::new(
            Dynamics::overdamped(DriftSpec::zero(), 2).unwrap(),
            coulomb,
            Domain::full(2),
        )
        .unwrap();
        assert_eq!(
            m.step(&ModelState::position(vec![0.0, 0.0]), 0.1, &mut ZeroNoise),
            Err(Error::SingularState)
        );
        assert!(m.step(&ModelState::position(vec![1.0]), 0.1, &mut ZeroNoise).is_err());
        assert!(m.step(&ModelState::position(vec![1.0, 0.0]), 0.0, &mut ZeroNoise).is_err());
    }

    #[test]
    fn theorem_cases() {
        let s1 = Schrodinger::Point(PotentialSpec::coulomb(1.0, 2).unwrap());
        let s2 = Schrodinger::Point(
            PotentialSpec::new(
                SingularKind::Riesz {
                    exponent: 1.0,
                    coef: 1.0,
                },
                ConfiningKind::Power {
                    exponent: 2.0,
                    coef: 1.0,
                },
                0.0,
                2,
            )
            .unwrap(),
        );
        let c1 = DriftSpec::gradient_power(1.0, 4.0).unwrap();
        let m = ModelSpec::new(Dynamics::overdamped(c1, 2).unwrap(), s1.clone(), Domain::full(2)).unwrap();
        assert_eq!(m.theorem_case(), Some(TheoremCase::OLCase1));
        let m = ModelSpec::new(
            Dynamics::overdamped(DriftSpec::zero(), 2).unwrap(),
            s1.clone(),
            Domain::full(2),
        )
        .unwrap();
        assert_eq!(m.theorem_case(), None);
        let stable = LevySpec::new(LevyFamily::IsotropicStable { alpha: 1.5 }, 2).unwrap();
        let m = ModelSpec::new(Dynamics::Levy { levy: stable }, s1, Domain::full(2)).unwrap();
        assert!(!m.admissible_cases().contains(&TheoremCase::Levy));
        let m = ModelSpec::new(Dynamics::Levy { levy: stable }, s2, Domain::full(2)).unwrap();
        assert_eq!(m.theorem_case(), Some(TheoremCase::Levy));
    }

    #[test]
    fn linear_drift_one_step_moments() {
        let kappa = 0.5;
        let dt = 0.1;
        let m = ModelSpec::new(
            Dynamics::overdamped(DriftSpec::linear(kappa).unwrap(), 2).unwrap(),
            flat(2),
            Domain::full(2),
        )
        .unwrap();
        let start = ModelState::position(vec![1.0, -2.0]);
        let mut noise = RngIncrements(ChaCha8Rng::seed_from_u64(11));
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = m.step(&start, dt, &mut noise).unwrap().x[0];
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((mean - (1.0 - kappa * dt)).abs() < 4.0 * (dt / n as f64).sqrt());
        assert!((var / dt - 1.0).abs() < 0.01);
    }

    #[test]
    fn interacting_blocks_are_independent_levy_steps() {
        let levy = LevySpec::brownian(2).unwrap();
        let conf = PotentialSpec::new(
            SingularKind::None,
            ConfiningKind::Power {
                exponent: 2.0,
                coef: 0.5,
            },
            0.0,
            2,
        )
        .unwrap();
        let inter = crate::potentials::InteractionSpec::new(
            2,
            conf,
            crate::potentials::PairKind::Riesz {
                exponent: 1.0,
                coef: 1.0,
            },
        )
        .unwrap();
        let m = ModelSpec::new(
            Dynamics::interacting(2, levy).unwrap(),
            Schrodinger::Interaction(inter),
            Domain::full(2),
        )
        .unwrap();
        let mut noise = RngIncrements(ChaCha8Rng::seed_from_u64(5));
        let start = ModelState::position(vec![0.0, 0.0, 1.0, 0.0]);
        let n = 50_000;
        let dt = 0.2;
        let (mut v0, mut v2, mut c02) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let s = m.step(&start, dt, &mut noise).unwrap();
            v0 += s.x[0] * s.x[0];
            v2 += (s.x[2] - 1.0) * (s.x[2] - 1.0);
            c02 += s.x[0] * (s.x[2] - 1.0);
        }
        let nf = n as f64;
        assert!((v0 / nf / dt - 1.0).abs() < 0.03);
        assert!((v2 / nf / dt - 1.0).abs() < 0.03);
        assert!((c02 / nf / dt).abs() < 4.0 / nf.sqrt() * 1.5);
    }
}
