//! Schrödinger potentials and the drift fields of the diffusion models.
//!
//! Three potential shapes are supported:
//!
//! * [`PotentialSpec`]: a point-singular potential on `ℝ^d ∖ {0}`, made of a
//!   repulsive singular part, an optional confining part and a constant offset;
//! * [`InteractionSpec`]: the energy `Σ V∞(xᵢ) + Σ_{i<j} v(|xᵢ − xⱼ|)` of `n`
//!   particles, singular on collisions;
//! * [`LineChargeSpec`]: a potential in `ℝ³` singular on the vertical axis.
//!
//! Evaluation returns an [`Energy`], whose [`Energy::Singular`] variant is the
//! `+∞` value taken on the singular set. It is never produced by overflow.

use crate::error::{Error, Result};
use crate::geometry::SingularSet;
use crate::scalar::{distance, norm, Real};

/// Extended real value of a potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Energy<T> {
    Finite(T),
    /// The state lies on the singular set.
    Singular,
}

impl<T: Real> Energy<T> {
    pub fn is_singular(self) -> bool {
        matches!(self, Energy::Singular)
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Energy::Finite(v) => Some(v),
            Energy::Singular => None,
        }
    }

    /// The value as a float, `+∞` for the singular sentinel.
    pub fn to_extended(self) -> T {
        self.finite().unwrap_or_else(T::infinity)
    }

    fn plus(self, other: T) -> Self {
        match self {
            Energy::Finite(v) => Energy::Finite(saturate(v + other)),
            Energy::Singular => Energy::Singular,
        }
    }
}

#[inline]
fn saturate<T: Real>(v: T) -> T {
    if v > T::max_value() {
        T::max_value()
    } else {
        v
    }
}

/// Repulsive part of a point-singular potential, as a function of `|x|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SingularKind<T> {
    None,
    /// `coef · |x|^(-exponent)`; `exponent = 1` is Coulomb.
    Riesz { exponent: T, coef: T },
    /// `4ε((σ/r)¹² − (σ/r)⁶)`.
    LennardJones { well_depth: T, length_scale: T },
    /// `−coef · log|x|`; only accepted together with a confining part.
    LogSingular { coef: T },
}

/// Confining part of a potential, as a function of `|x|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConfiningKind<T> {
    None,
    /// `coef · |x|^exponent`.
    Power { exponent: T, coef: T },
}

/// Which confinement class a validated point potential belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PotentialClass {
    /// Diverges exactly at the origin.
    S1,
    /// Diverges at the origin and at infinity.
    S2,
    /// No singularity, coercive at infinity.
    Coercive,
    /// No singularity and no confinement (constant potentials).
    Bounded,
}

/// A validated point-singular (or regular) Schrödinger potential on `ℝ^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec<T> {
    singular: SingularKind<T>,
    confining: ConfiningKind<T>,
    offset: T,
    dim: usize,
    class: PotentialClass,
    lower_bound: T,
    log_dominance_radius: Option<T>,
}

impl<T: Real> PotentialSpec<T> {
    pub fn new(
        singular: SingularKind<T>,
        confining: ConfiningKind<T>,
        offset: T,
        dim: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::spec("potential dimension must be positive"));
        }
        if !offset.is_finite() {
            return Err(Error::spec("potential offset must be finite"));
        }
        let (class, lower_bound) = classify(&singular, &confining, offset)?;
        let log_dominance_radius = match (singular, confining) {
            (SingularKind::LogSingular { coef }, ConfiningKind::Power { exponent, coef: a }) => {
                Some(log_dominance_radius(coef, exponent, a))
            }
            _ => None,
        };
        Ok(Self {
            singular,
            confining,
            offset,
            dim,
            class,
            lower_bound,
            log_dominance_radius,
        })
    }

    /// The constant potential `V ≡ c`.
    pub fn constant(c: T, dim: usize) -> Result<Self> {
        Self::new(SingularKind::None, ConfiningKind::None, c, dim)
    }

    /// Coulomb-type `coef/|x|` with no confinement (class S1).
    pub fn coulomb(coef: T, dim: usize) -> Result<Self> {
        Self::new(
            SingularKind::Riesz {
                exponent: T::one(),
                coef,
            },
            ConfiningKind::None,
            T::zero(),
            dim,
        )
    }

    pub fn singular(&self) -> SingularKind<T> {
        self.singular
    }

    pub fn confining(&self) -> ConfiningKind<T> {
        self.confining
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class(&self) -> PotentialClass {
        self.class
    }

    /// Closed-form lower bound of `V` (may be positive).
    pub fn lower_bound(&self) -> T {
        self.lower_bound
    }

    /// `k_S = max(0, −lower bound)`, so that `V ≥ −k_S`.
    pub fn k_s(&self) -> T {
        (-self.lower_bound).max(T::zero())
    }

    /// For `log` singularities: the radius beyond which the confining part
    /// dominates `coef · log r`.
    pub fn log_dominance_radius(&self) -> Option<T> {
        self.log_dominance_radius
    }

    pub fn is_singular_at_origin(&self) -> bool {
        !matches!(self.singular, SingularKind::None)
    }

    pub fn singular_set(&self) -> SingularSet {
        if self.is_singular_at_origin() {
            SingularSet::Origin
        } else {
            SingularSet::None
        }
    }

    /// `V(x)`.
    pub fn eval(&self, x: &[T]) -> Energy<T> {
        self.eval_variable(x).plus(self.offset)
    }

    /// `V(x) − offset`, the part of the potential that varies in space.
    pub fn eval_variable(&self, x: &[T]) -> Energy<T> {
        self.eval_radius_variable(norm(x))
    }

    /// `V` as a function of `|x|` only, without the offset.
    pub fn eval_radius_variable(&self, r: T) -> Energy<T> {
        let sing = match self.singular {
            SingularKind::None => T::zero(),
            _ if r <= T::zero() => return Energy::Singular,
            SingularKind::Riesz { exponent, coef } => riesz(r, exponent, coef),
            SingularKind::LennardJones {
                well_depth,
                length_scale,
            } => lennard_jones(r, well_depth, length_scale),
            SingularKind::LogSingular { coef } => -coef * r.ln(),
        };
        Energy::Finite(saturate(sing + confining_value(&self.confining, r)))
    }

    pub fn eval_radius(&self, r: T) -> Energy<T> {
        self.eval_radius_variable(r).plus(self.offset)
    }

    /// `inf V` over the punctured space. Closed form when available, otherwise
    /// a numerical minimum over the radius (an upper estimate of the infimum).
    pub fn infimum(&self) -> T {
        match (self.singular, self.confining) {
            (SingularKind::None, _) | (SingularKind::Riesz { .. }, ConfiningKind::None) => {
                self.offset
            }
            (SingularKind::LennardJones { well_depth, .. }, ConfiningKind::None) => {
                self.offset - well_depth
            }
            _ => {
                minimize_radial(|r| self.eval_radius(r).to_extended(), T::lit(1e-6), T::lit(1e6))
                    .1
            }
        }
    }
}

/// Class and closed-form lower bound for a point potential.
///
/// Rejects families that are not bounded below (a bare log singularity).
pub fn classify<T: Real>(
    singular: &SingularKind<T>,
    confining: &ConfiningKind<T>,
    offset: T,
) -> Result<(PotentialClass, T)> {
    let confining_bound = match *confining {
        ConfiningKind::None => T::zero(),
        ConfiningKind::Power { exponent, coef } => {
            if !(exponent > T::zero() && exponent.is_finite()) {
                return Err(Error::spec("confining exponent must be positive"));
            }
            if !(coef > T::zero() && coef.is_finite()) {
                return Err(Error::spec("confining coefficient must be positive"));
            }
            T::zero()
        }
    };
    let has_confining = !matches!(confining, ConfiningKind::None);
    let singular_bound = match *singular {
        SingularKind::None => T::zero(),
        SingularKind::Riesz { exponent, coef } => {
            if !(exponent > T::zero() && coef > T::zero()) {
                return Err(Error::spec("Riesz exponent and coefficient must be positive"));
            }
            T::zero()
        }
        SingularKind::LennardJones {
            well_depth,
            length_scale,
        } => {
            if !(well_depth > T::zero() && length_scale > T::zero()) {
                return Err(Error::spec("Lennard-Jones parameters must be positive"));
            }
            -well_depth
        }
        SingularKind::LogSingular { coef } => {
            if !(coef > T::zero()) {
                return Err(Error::spec("log coefficient must be positive"));
            }
            match *confining {
                ConfiningKind::None => {
                    return Err(Error::spec(
                        "log singularity without confinement is not bounded below",
                    ))
                }
                // min over r of −c log r + a r^k, attained at r^k = c/(a k)
                ConfiningKind::Power { exponent, coef: a } => {
                    let rk = coef / (a * exponent);
                    -coef / exponent * rk.ln() + coef / exponent
                }
            }
        }
    };
    let class = match (singular, has_confining) {
        (SingularKind::None, false) => PotentialClass::Bounded,
        (SingularKind::None, true) => PotentialClass::Coercive,
        (_, false) => PotentialClass::S1,
        (_, true) => PotentialClass::S2,
    };
    // the log bound already accounts for the confining part
    let bound = if matches!(singular, SingularKind::LogSingular { .. }) {
        singular_bound
    } else {
        singular_bound + confining_bound
    };
    Ok((class, bound + offset))
}

fn log_dominance_radius<T: Real>(c: T, k: T, a: T) -> T {
    // f(r) = a r^k − c log r is decreasing then increasing with minimum at r*
    let f = |r: T| a * r.powf(k) - c * r.ln();
    let r_star = (c / (a * k)).powf(T::one() / k);
    if f(r_star) >= T::zero() {
        return T::zero();
    }
    let mut lo = r_star;
    let mut hi = r_star * T::lit(2.0);
    while f(hi) < T::zero() {
        hi *= T::lit(2.0);
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[inline]
fn riesz<T: Real>(r: T, exponent: T, coef: T) -> T {
    coef * r.powf(-exponent)
}

#[inline]
fn lennard_jones<T: Real>(r: T, eps: T, sigma: T) -> T {
    let s6 = (sigma / r).powi(6);
    T::lit(4.0) * eps * (s6 * s6 - s6)
}

#[inline]
fn confining_value<T: Real>(c: &ConfiningKind<T>, r: T) -> T {
    match *c {
        ConfiningKind::None => T::zero(),
        ConfiningKind::Power { exponent, coef } => coef * r.powf(exponent),
    }
}

/// Radial pair profile `v(u)` of interaction and line-charge potentials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PairKind<T> {
    Riesz { exponent: T, coef: T },
    LennardJones { well_depth: T, length_scale: T },
    /// `max(−coef · log u, −floor)`.
    LogWithFloor { coef: T, floor: T },
}

impl<T: Real> PairKind<T> {
    fn validate(&self) -> Result<T> {
        match *self {
            PairKind::Riesz { exponent, coef } => {
                if exponent > T::zero() && coef > T::zero() {
                    Ok(T::zero())
                } else {
                    Err(Error::spec("Riesz exponent and coefficient must be positive"))
                }
            }
            PairKind::LennardJones {
                well_depth,
                length_scale,
            } => {
                if well_depth > T::zero() && length_scale > T::zero() {
                    Ok(well_depth)
                } else {
                    Err(Error::spec("Lennard-Jones parameters must be positive"))
                }
            }
            PairKind::LogWithFloor { coef, floor } => {
                if coef > T::zero() && floor >= T::zero() && floor.is_finite() {
                    Ok(floor)
                } else {
                    Err(Error::spec("log pair profile needs coef > 0 and a finite floor ≥ 0"))
                }
            }
        }
    }

    /// `v(u)`; singular at `u = 0`.
    pub fn eval(&self, u: T) -> Energy<T> {
        if u <= T::zero() {
            return Energy::Singular;
        }
        let v = match *self {
            PairKind::Riesz { exponent, coef } => riesz(u, exponent, coef),
            PairKind::LennardJones {
                well_depth,
                length_scale,
            } => lennard_jones(u, well_depth, length_scale),
            PairKind::LogWithFloor { coef, floor } => (-coef * u.ln()).max(-floor),
        };
        Energy::Finite(saturate(v))
    }
}

/// Confinement `V∞` of the interacting and line-charge models: a regular,
/// coercive point potential.
fn validate_coercive<T: Real>(confining: &PotentialSpec<T>) -> Result<()> {
    if confining.is_singular_at_origin() {
        return Err(Error::spec("confining potential must not be singular"));
    }
    if confining.class() != PotentialClass::Coercive {
        return Err(Error::spec("confining potential must be coercive"));
    }
    Ok(())
}

/// Energy of `n` interacting particles in `ℝ^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionSpec<T> {
    n: usize,
    confining: PotentialSpec<T>,
    pair: PairKind<T>,
    pair_lower_bound: T,
}

impl<T: Real> InteractionSpec<T> {
    pub fn new(n: usize, confining: PotentialSpec<T>, pair: PairKind<T>) -> Result<Self> {
        if n < 2 {
            return Err(Error::spec("interacting model needs at least two particles"));
        }
        validate_coercive(&confining)?;
        let pair_lower_bound = pair.validate()?;
        Ok(Self {
            n,
            confining,
            pair,
            pair_lower_bound,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of a single particle.
    pub fn particle_dim(&self) -> usize {
        self.confining.dim()
    }

    pub fn confining(&self) -> &PotentialSpec<T> {
        &self.confining
    }

    pub fn pair(&self) -> PairKind<T> {
        self.pair
    }

    /// `k_S` of the pair profile: `v ≥ −k_S`.
    pub fn pair_lower_bound(&self) -> T {
        self.pair_lower_bound
    }

    pub fn offset(&self) -> T {
        self.confining.offset() * T::from_usize_lossy(self.n)
    }

    pub fn lower_bound(&self) -> T {
        let n = T::from_usize_lossy(self.n);
        let pairs = T::from_usize_lossy(self.n * (self.n - 1) / 2);
        n * self.confining.lower_bound() - pairs * self.pair_lower_bound
    }

    /// `U_S(x₁, …, xₙ)` with the points stored contiguously.
    pub fn eval(&self, config: &[T]) -> Energy<T> {
        self.eval_variable(config).plus(self.offset())
    }

    pub fn eval_variable(&self, config: &[T]) -> Energy<T> {
        let d = self.particle_dim();
        debug_assert_eq!(config.len(), self.n * d);
        let mut total = T::zero();
        for i in 0..self.n {
            let xi = &config[i * d..(i + 1) * d];
            match self.confining.eval_variable(xi) {
                Energy::Finite(v) => total += v,
                Energy::Singular => return Energy::Singular,
            }
            for j in (i + 1)..self.n {
                let xj = &config[j * d..(j + 1) * d];
                match self.pair.eval(distance(xi, xj)) {
                    Energy::Finite(v) => total += v,
                    Energy::Singular => return Energy::Singular,
                }
            }
        }
        Energy::Finite(saturate(total))
    }

    /// Smallest energy found by a compass search from symmetric starts; an
    /// upper estimate of `inf U_S`.
    pub fn infimum(&self) -> T {
        let d = self.particle_dim();
        let mut best = T::infinity();
        for &radius in &[0.25, 0.5, 1.0, 2.0] {
            let mut start = vec![T::zero(); self.n * d];
            for i in 0..self.n {
                let angle = T::lit(2.0 * std::f64::consts::PI * i as f64 / self.n as f64);
                start[i * d] = T::lit(radius) * angle.cos();
                if d > 1 {
                    start[i * d + 1] = T::lit(radius) * angle.sin();
                }
            }
            let value = compass_minimize(|c| self.eval(c).to_extended(), start, T::lit(0.25));
            best = best.min(value);
        }
        best
    }
}

/// Potential in `ℝ³` singular on the axis `{(0, 0, t)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineChargeSpec<T> {
    radial_profile: PairKind<T>,
    confining: PotentialSpec<T>,
}

impl<T: Real> LineChargeSpec<T> {
    pub fn new(radial_profile: PairKind<T>, confining: PotentialSpec<T>) -> Result<Self> {
        if confining.dim() != 3 {
            return Err(Error::spec("line-charge model lives in three dimensions"));
        }
        validate_coercive(&confining)?;
        radial_profile.validate()?;
        Ok(Self {
            radial_profile,
            confining,
        })
    }

    pub fn radial_profile(&self) -> PairKind<T> {
        self.radial_profile
    }

    pub fn confining(&self) -> &PotentialSpec<T> {
        &self.confining
    }

    pub fn offset(&self) -> T {
        self.confining.offset()
    }

    pub fn lower_bound(&self) -> T {
        let pair_k = self.radial_profile.validate().unwrap_or_else(|_| T::zero());
        self.confining.lower_bound() - pair_k
    }

    pub fn eval(&self, x: &[T]) -> Energy<T> {
        self.eval_variable(x).plus(self.offset())
    }

    pub fn eval_variable(&self, x: &[T]) -> Energy<T> {
        let rho = axis_distance(x);
        match (self.radial_profile.eval(rho), self.confining.eval_variable(x)) {
            (Energy::Finite(a), Energy::Finite(b)) => Energy::Finite(saturate(a + b)),
            _ => Energy::Singular,
        }
    }

    /// `inf_ρ v(ρ) + V∞(ρ)`: the confinement is radial and nondecreasing, so
    /// the minimum sits in the plane `z = 0`.
    pub fn infimum(&self) -> T {
        minimize_radial(
            |r| self.eval(&[r, T::zero(), T::zero()]).to_extended(),
            T::lit(1e-6),
            T::lit(1e6),
        )
        .1
    }
}

/// Distance from `x ∈ ℝ³` to the vertical axis.
#[inline]
pub fn axis_distance<T: Real>(x: &[T]) -> T {
    (x[0] * x[0] + x[1] * x[1]).sqrt()
}

/// Any of the supported Schrödinger potentials.
#[derive(Clone, Debug, PartialEq)]
pub enum Schrodinger<T> {
    Point(PotentialSpec<T>),
    Interaction(InteractionSpec<T>),
    LineCharge(LineChargeSpec<T>),
}

impl<T: Real> Schrodinger<T> {
    /// Length of the position vector the potential acts on.
    pub fn state_dim(&self) -> usize {
        match self {
            Schrodinger::Point(p) => p.dim(),
            Schrodinger::Interaction(i) => i.n() * i.particle_dim(),
            Schrodinger::LineCharge(_) => 3,
        }
    }

    pub fn eval(&self, x: &[T]) -> Energy<T> {
        match self {
            Schrodinger::Point(p) => p.eval(x),
            Schrodinger::Interaction(i) => i.eval(x),
            Schrodinger::LineCharge(l) => l.eval(x),
        }
    }

    pub fn eval_variable(&self, x: &[T]) -> Energy<T> {
        match self {
            Schrodinger::Point(p) => p.eval_variable(x),
            Schrodinger::Interaction(i) => i.eval_variable(x),
            Schrodinger::LineCharge(l) => l.eval_variable(x),
        }
    }

    /// Constant part of the potential, kept out of [`Self::eval_variable`].
    pub fn offset(&self) -> T {
        match self {
            Schrodinger::Point(p) => p.offset(),
            Schrodinger::Interaction(i) => i.offset(),
            Schrodinger::LineCharge(l) => l.offset(),
        }
    }

    pub fn lower_bound(&self) -> T {
        match self {
            Schrodinger::Point(p) => p.lower_bound(),
            Schrodinger::Interaction(i) => i.lower_bound(),
            Schrodinger::LineCharge(l) => l.lower_bound(),
        }
    }

    /// `k_S ≥ 0` with `V ≥ −k_S`.
    pub fn k_s(&self) -> T {
        (-self.lower_bound()).max(T::zero())
    }

    pub fn infimum(&self) -> T {
        match self {
            Schrodinger::Point(p) => p.infimum(),
            Schrodinger::Interaction(i) => i.infimum(),
            Schrodinger::LineCharge(l) => l.infimum(),
        }
    }

    pub fn singular_set(&self) -> SingularSet {
        match self {
            Schrodinger::Point(p) => p.singular_set(),
            Schrodinger::Interaction(i) => SingularSet::Collisions {
                n: i.n(),
                d: i.particle_dim(),
            },
            Schrodinger::LineCharge(_) => SingularSet::Axis,
        }
    }

    /// The same potential with `c` added to its constant part.
    pub fn shifted(&self, c: T) -> Result<Self> {
        Ok(match self {
            Schrodinger::Point(p) => {
                Schrodinger::Point(PotentialSpec::new(p.singular, p.confining, p.offset + c, p.dim)?)
            }
            Schrodinger::Interaction(i) => {
                let per_particle = c / T::from_usize_lossy(i.n);
                let conf = &i.confining;
                let conf = PotentialSpec::new(
                    conf.singular,
                    conf.confining,
                    conf.offset + per_particle,
                    conf.dim,
                )?;
                Schrodinger::Interaction(InteractionSpec::new(i.n, conf, i.pair)?)
            }
            Schrodinger::LineCharge(l) => {
                let conf = &l.confining;
                let conf =
                    PotentialSpec::new(conf.singular, conf.confining, conf.offset + c, conf.dim)?;
                Schrodinger::LineCharge(LineChargeSpec::new(l.radial_profile, conf)?)
            }
        })
    }
}

/// Minimizes `f` over `r ∈ [lo, hi]` on a log grid refined by golden section.
/// Returns `(argmin, min)`.
pub fn minimize_radial<T: Real>(f: impl Fn(T) -> T, lo: T, hi: T) -> (T, T) {
    let n = 2000;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / T::from_usize_lossy(n);
    let at = |i: usize| (llo + step * T::from_usize_lossy(i)).exp();
    let mut best_i = 0;
    let mut best = f(at(0));
    for i in 1..=n {
        let v = f(at(i));
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut a = llo + step * T::from_usize_lossy(best_i.saturating_sub(1));
    let mut b = llo + step * T::from_usize_lossy((best_i + 1).min(n));
    let g = T::lit(0.618_033_988_749_894_8);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c.exp()) < f(d.exp()) {
            b = d;
        } else {
            a = c;
        }
    }
    let r = ((a + b) * T::lit(0.5)).exp();
    let v = f(r);
    if v < best {
        (r, v)
    } else {
        (at(best_i), best)
    }
}

fn compass_minimize<T: Real>(f: impl Fn(&[T]) -> T, mut x: Vec<T>, mut step: T) -> T {
    let mut fx = f(&x);
    let tol = T::lit(1e-9);
    let mut iterations = 0;
    while step > tol && iterations < 100_000 {
        iterations += 1;
        let mut improved = false;
        for i in 0..x.len() {
            for sign in [T::one(), -T::one()] {
                let old = x[i];
                x[i] = old + sign * step;
                let v = f(&x);
                if v < fx {
                    fx = v;
                    improved = true;
                } else {
                    x[i] = old;
                }
            }
        }
        if !improved {
            step *= T::lit(0.5);
        }
    }
    fx
}

/// Growth class of a drift field with respect to the two confinement
/// conditions: `C1` means `b(x)·x/|x| → −∞`, `C2` means at most linear growth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GrowthClass {
    C1,
    C2,
    Both,
}

impl GrowthClass {
    pub fn satisfies_c1(self) -> bool {
        matches!(self, GrowthClass::C1 | GrowthClass::Both)
    }

    pub fn satisfies_c2(self) -> bool {
        matches!(self, GrowthClass::C2 | GrowthClass::Both)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DriftKind<T> {
    Zero,
    /// `b(x) = −κ x`.
    Linear { kappa: T },
    /// `b(x) = −∇(coef |x|^k / k) = −coef |x|^(k−2) x`, `k ≥ 2`.
    GradientPower { coef: T, exponent: T },
    /// `b(x) = −∇(coef (|x|² − 1)² / 4)`.
    DoubleWell { coef: T },
}

/// A validated drift field. Every family is a gradient field `b = −∇V_c`, so
/// it also serves as the confining potential of the kinetic model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftSpec<T> {
    kind: DriftKind<T>,
    growth: GrowthClass,
}

impl<T: Real> DriftSpec<T> {
    pub fn new(kind: DriftKind<T>) -> Result<Self> {
        let growth = match kind {
            DriftKind::Zero => GrowthClass::C2,
            DriftKind::Linear { kappa } => {
                if !(kappa >= T::zero() && kappa.is_finite()) {
                    return Err(Error::spec("linear drift needs κ ≥ 0"));
                }
                if kappa > T::zero() {
                    GrowthClass::Both
                } else {
                    GrowthClass::C2
                }
            }
            DriftKind::GradientPower { coef, exponent } => {
                if !(coef > T::zero()) {
                    return Err(Error::spec("gradient-power drift needs coef > 0"));
                }
                if !(exponent >= T::lit(2.0)) {
                    return Err(Error::spec(
                        "gradient-power drift needs k ≥ 2 to be locally Lipschitz",
                    ));
                }
                if exponent > T::lit(2.0) {
                    GrowthClass::C1
                } else {
                    GrowthClass::Both
                }
            }
            DriftKind::DoubleWell { coef } => {
                if !(coef > T::zero()) {
                    return Err(Error::spec("double-well drift needs coef > 0"));
                }
                GrowthClass::C1
            }
        };
        Ok(Self { kind, growth })
    }

    pub fn zero() -> Self {
        Self {
            kind: DriftKind::Zero,
            growth: GrowthClass::C2,
        }
    }

    pub fn linear(kappa: T) -> Result<Self> {
        Self::new(DriftKind::Linear { kappa })
    }

    pub fn gradient_power(coef: T, exponent: T) -> Result<Self> {
        Self::new(DriftKind::GradientPower { coef, exponent })
    }

    pub fn kind(&self) -> DriftKind<T> {
        self.kind
    }

    pub fn growth_class(&self) -> GrowthClass {
        self.growth
    }

    /// `b(x)/|x|`-style scalar `s(|x|)` with `b(x) = −s(|x|) x`.
    #[inline]
    fn radial_factor(&self, r2: T) -> T {
        match self.kind {
            DriftKind::Zero => T::zero(),
            DriftKind::Linear { kappa } => kappa,
            DriftKind::GradientPower { coef, exponent } => {
                if exponent == T::lit(2.0) {
                    coef
                } else if exponent == T::lit(4.0) {
                    coef * r2
                } else {
                    coef * r2.powf((exponent - T::lit(2.0)) * T::lit(0.5))
                }
            }
            DriftKind::DoubleWell { coef } => coef * (r2 - T::one()),
        }
    }

    /// Writes `b(x)` into `out`.
    pub fn eval_into(&self, x: &[T], out: &mut [T]) {
        let r2 = x.iter().fold(T::zero(), |a, &v| a + v * v);
        let s = self.radial_factor(r2);
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = -s * xi;
        }
    }

    pub fn eval(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        self.eval_into(x, &mut out);
        out
    }

    /// `V_c(x)`: the primitive with `b = −∇V_c`, shifted so that `V_c ≥ 1`.
    pub fn primitive(&self, x: &[T]) -> T {
        let r2 = x.iter().fold(T::zero(), |a, &v| a + v * v);
        let base = match self.kind {
            DriftKind::Zero => T::zero(),
            DriftKind::Linear { kappa } => kappa * r2 * T::lit(0.5),
            DriftKind::GradientPower { coef, exponent } => {
                coef * r2.powf(exponent * T::lit(0.5)) / exponent
            }
            DriftKind::DoubleWell { coef } => {
                let w = r2 - T::one();
                coef * w * w * T::lit(0.25)
            }
        };
        base + T::one()
    }

    /// `∇V_c(x) = −b(x)`.
    pub fn grad_primitive(&self, x: &[T]) -> Vec<T> {
        let mut out = self.eval(x);
        for o in &mut out {
            *o = -*o;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn riesz_1() -> SingularKind<f64> {
        SingularKind::Riesz {
            exponent: 1.0,
            coef: 1.0,
        }
    }

    fn quad() -> ConfiningKind<f64> {
        ConfiningKind::Power {
            exponent: 2.0,
            coef: 1.0,
        }
    }

    #[test]
    fn point_potential_examples() {
        let s1 = PotentialSpec::new(riesz_1(), ConfiningKind::None, 0.0, 2).unwrap();
        assert_eq!(s1.eval(&[2.0, 0.0]), Energy::Finite(0.5));
        assert_eq!(s1.eval(&[0.0, 0.0]), Energy::Singular);

        let s2 = PotentialSpec::new(riesz_1(), quad(), 0.0, 2).unwrap();
        assert_eq!(s2.eval(&[1.0, 0.0]), Energy::Finite(2.0));

        let lj = PotentialSpec::new(
            SingularKind::LennardJones {
                well_depth: 1.0,
                length_scale: 1.0,
            },
            quad(),
            0.0,
            2,
        )
        .unwrap();
        // the LJ part vanishes at unit distance
        assert_eq!(lj.eval(&[0.0, 1.0]), Energy::Finite(1.0));
    }

    #[test]
    fn classification_and_bounds() {
        let (c, lb) = classify(&riesz_1(), &ConfiningKind::None, 0.0).unwrap();
        assert_eq!((c, lb), (PotentialClass::S1, 0.0));
        let (c, lb) = classify(&riesz_1(), &quad(), 0.0).unwrap();
        assert_eq!((c, lb), (PotentialClass::S2, 0.0));
        assert!(classify(&SingularKind::LogSingular { coef: 1.0 }, &ConfiningKind::None, 0.0).is_err());
        let (c, _) = classify(&SingularKind::None, &quad(), 0.0).unwrap();
        assert_eq!(c, PotentialClass::Coercive);
        let (c, lb) = classify(&SingularKind::<f64>::None, &ConfiningKind::None, 0.7).unwrap();
        assert_eq!((c, lb), (PotentialClass::Bounded, 0.7));
    }

    #[test]
    fn log_singular_bound_is_the_minimum() {
        let spec = PotentialSpec::new(SingularKind::LogSingular { coef: 2.0 }, quad(), 0.0, 2).unwrap();
        // −2 log r + r²: minimum at r = 1, value 1
        assert!((spec.lower_bound() - 1.0).abs() < 1e-12);
        assert!((spec.infimum() - 1.0).abs() < 1e-9);
        assert_eq!(spec.log_dominance_radius(), Some(0.0));

        let weak = PotentialSpec::new(
            SingularKind::LogSingular { coef: 3.0 },
            ConfiningKind::Power {
                exponent: 1.0,
                coef: 0.5,
            },
            0.0,
            2,
        )
        .unwrap();
        let r: f64 = weak.log_dominance_radius().unwrap();
        assert!(r > 1.0);
        assert!(0.5 * r >= 3.0 * r.ln() - 1e-9);
        assert!(0.5 * (0.9 * r) < 3.0 * (0.9 * r).ln());
    }

    #[test]
    fn infimum_of_coulomb_plus_quadratic() {
        let s2 = PotentialSpec::new(riesz_1(), quad(), 0.0, 2).unwrap();
        // 1/r + r² minimized at r = 2^{-1/3}
        let r = 0.5f64.powf(1.0 / 3.0);
        assert!((s2.infimum() - (1.0 / r + r * r)).abs() < 1e-9);
        assert_eq!(PotentialSpec::coulomb(1.0, 2).unwrap().infimum(), 0.0);
    }

    #[test]
    fn interaction_examples() {
        let conf = PotentialSpec::new(SingularKind::None, quad(), 0.0, 2).unwrap();
        let pair = PairKind::Riesz {
            exponent: 1.0,
            coef: 1.0,
        };
        let spec = InteractionSpec::new(2, conf, pair).unwrap();
        assert_eq!(spec.eval(&[0.0, 0.0, 1.0, 0.0]), Energy::Finite(2.0));
        assert_eq!(spec.eval(&[0.3, 0.1, 0.3, 0.1]), Energy::Singular);

        let flat = PotentialSpec::new(
            SingularKind::None,
            ConfiningKind::Power {
                exponent: 2.0,
                coef: 1e-300,
            },
            0.0,
            2,
        )
        .unwrap();
        let three = InteractionSpec::new(3, flat, pair).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let v = three.eval(&[0.0, 0.0, 1.0, 0.0, 0.5, h]).finite().unwrap();
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn interaction_rejects_singular_or_flat_confinement() {
        let pair = PairKind::Riesz {
            exponent: 1.0,
            coef: 1.0,
        };
        let flat = PotentialSpec::<f64>::constant(0.0, 2).unwrap();
        assert!(InteractionSpec::new(2, flat, pair).is_err());
        let sing = PotentialSpec::new(riesz_1(), quad(), 0.0, 2).unwrap();
        assert!(InteractionSpec::new(2, sing.clone(), pair).is_err());
        let conf = PotentialSpec::new(SingularKind::None, quad(), 0.0, 2).unwrap();
        assert!(InteractionSpec::new(1, conf, pair).is_err());
    }

    #[test]
    fn log_pair_with_floor_is_bounded() {
        let p = PairKind::LogWithFloor {
            coef: 1.0,
            floor: 2.0,
        };
        assert_eq!(p.validate().unwrap(), 2.0);
        assert_eq!(p.eval(1e9), Energy::Finite(-2.0));
        assert_eq!(p.eval(0.0), Energy::Singular);
        assert!(p.eval(1e-12).finite().unwrap() > 27.0);
    }

    #[test]
    fn line_charge_examples() {
        let conf = PotentialSpec::new(
            SingularKind::None,
            ConfiningKind::Power {
                exponent: 2.0,
                coef: 0.5,
            },
            0.0,
            3,
        )
        .unwrap();
        let spec = LineChargeSpec::<f64>::new(
            PairKind::Riesz {
                exponent: 1.0,
                coef: 1.0,
            },
            conf,
        )
        .unwrap();
        assert_eq!(spec.eval(&[0.0, 0.0, 5.0]), Energy::Singular);
        let v: f64 = spec.eval(&[3.0, 4.0, 0.0]).finite().unwrap();
        assert!((v - (0.2 + 12.5)).abs() < 1e-12);
        // 1/ρ + ρ²/2 is minimized at ρ = 1
        assert!((spec.infimum() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn drift_examples_and_classes() {
        let lin = DriftSpec::linear(1.0).unwrap();
        assert_eq!(lin.eval(&[1.0, 2.0]), vec![-1.0, -2.0]);
        assert_eq!(lin.growth_class(), GrowthClass::Both);
        assert_eq!(DriftSpec::<f64>::zero().eval(&[3.0, -1.0]), vec![0.0, 0.0]);
        assert_eq!(DriftSpec::<f64>::zero().growth_class(), GrowthClass::C2);
        let quartic = DriftSpec::gradient_power(1.0, 4.0).unwrap();
        assert_eq!(quartic.eval(&[1.0, 0.0]), vec![-1.0, 0.0]);
        assert_eq!(quartic.growth_class(), GrowthClass::C1);
        assert!(DriftSpec::gradient_power(1.0, 1.5).is_err());
        let dw = DriftSpec::new(DriftKind::DoubleWell { coef: 1.0 }).unwrap();
        assert_eq!(dw.growth_class(), GrowthClass::C1);
        assert_eq!(dw.eval(&[1.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn primitive_gradient_matches_drift() {
        let drifts = [
            DriftSpec::linear(0.7).unwrap(),
            DriftSpec::gradient_power(1.3, 3.0).unwrap(),
            DriftSpec::new(DriftKind::DoubleWell { coef: 2.0 }).unwrap(),
        ];
        let x = [0.8f64, -1.1];
        let h = 1e-6;
        for drift in drifts {
            assert!(drift.primitive(&[0.0, 0.0]) >= 1.0);
            let grad = drift.grad_primitive(&x);
            for i in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let fd = (drift.primitive(&xp) - drift.primitive(&xm)) / (2.0 * h);
                assert!((fd - grad[i]).abs() < 1e-6, "{drift:?}");
            }
        }
    }

    #[test]
    fn potentials_are_generic_over_f32() {
        let s = PotentialSpec::<f32>::new(
            SingularKind::Riesz {
                exponent: 1.0,
                coef: 1.0,
            },
            ConfiningKind::None,
            0.0,
            2,
        )
        .unwrap();
        assert_eq!(s.eval(&[2.0f32, 0.0]), Energy::Finite(0.5f32));
    }

    fn arb_spec() -> impl Strategy<Value = PotentialSpec<f64>> {
        let singular = prop_oneof![
            Just(SingularKind::None),
            (0.1..4.0f64, 0.1..3.0f64).prop_map(|(b, c)| SingularKind::Riesz { exponent: b, coef: c }),
            (0.1..3.0f64, 0.2..2.0f64).prop_map(|(e, s)| SingularKind::LennardJones {
                well_depth: e,
                length_scale: s
            }),
            (0.1..3.0f64).prop_map(|c| SingularKind::LogSingular { coef: c }),
        ];
        let confining = prop_oneof![
            Just(ConfiningKind::None),
            (0.5..4.0f64, 0.1..3.0f64).prop_map(|(k, c)| ConfiningKind::Power { exponent: k, coef: c }),
        ];
        (singular, confining, -2.0..2.0f64, 1usize..4)
            .prop_filter_map("bounded below", |(s, c, o, d)| PotentialSpec::new(s, c, o, d).ok())
    }

    proptest! {
        #[test]
        fn never_below_lower_bound(spec in arb_spec(), pts in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 3), 50)) {
            for p in pts {
                let x = &p[..spec.dim()];
                if let Energy::Finite(v) = spec.eval(x) {
                    prop_assert!(v >= spec.lower_bound() - 1e-12);
                    prop_assert!(v >= -spec.k_s() - 1e-12);
                }
            }
        }

        #[test]
        fn interaction_is_permutation_invariant(pts in prop::collection::vec(-3.0..3.0f64, 8), perm_seed in 0usize..24) {
            let conf = PotentialSpec::new(SingularKind::None, ConfiningKind::Power { exponent: 2.0, coef: 0.5 }, 0.0, 2).unwrap();
            let spec = InteractionSpec::new(4, conf, PairKind::LennardJones { well_depth: 1.0, length_scale: 0.5 }).unwrap();
            let mut order = vec![0usize, 1, 2, 3];
            let mut k = perm_seed;
            for i in (1..4).rev() {
                order.swap(i, k % (i + 1));
                k /= i + 1;
            }
            let mut shuffled = Vec::new();
            for &i in &order {
                shuffled.extend_from_slice(&pts[2 * i..2 * i + 2]);
            }
            // summation order changes with the permutation; values agree to rounding
            let a = spec.eval(&pts).to_extended();
            let b = spec.eval(&shuffled).to_extended();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn line_charge_symmetries(x in prop::collection::vec(-3.0..3.0f64, 3), shift in -5.0..5.0f64, angle in 0.0..6.3f64) {
            let conf = PotentialSpec::new(SingularKind::None, ConfiningKind::Power { exponent: 2.0, coef: 0.5 }, 0.0, 3).unwrap();
            let spec = LineChargeSpec::new(PairKind::Riesz { exponent: 1.0, coef: 1.0 }, conf.clone()).unwrap();
            let (s, c) = angle.sin_cos();
            let rotated = [c * x[0] - s * x[1], s * x[0] + c * x[1], x[2]];
            let a = spec.eval(&x).to_extended();
            let b = spec.eval(&rotated).to_extended();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            // the singular profile alone is invariant along the axis
            let moved = [x[0], x[1], x[2] + shift];
            prop_assert_eq!(axis_distance(&x), axis_distance(&moved));
        }
    }

    #[test]
    fn s2_diverges_at_both_ends_of_the_grid() {
        let s2 = PotentialSpec::new(riesz_1(), quad(), 0.0, 2).unwrap();
        let small = s2.eval_radius(1e-6).finite().unwrap();
        let large = s2.eval_radius(1e6).finite().unwrap();
        assert!(small > 1e3 && large > 1e3);
    }
}
