//! Killing domains and the singular sets they implicitly exclude.
//!
//! Domains are open: a state on the boundary counts as having exited.

use crate::error::{Error, Result};
use crate::potentials::axis_distance;
use crate::scalar::{distance, norm, Real};

/// Where a potential is `+∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularSet {
    None,
    /// The origin of `ℝ^d`.
    Origin,
    /// The vertical axis `{(0, 0, t)}` of `ℝ³`.
    Axis,
    /// Collisions `xᵢ = xⱼ` of `n` particles in `ℝ^d`.
    Collisions { n: usize, d: usize },
}

impl SingularSet {
    /// Distance from a position vector to the singular set (`+∞` if empty).
    /// For collisions this is the minimal pairwise distance.
    pub fn distance<T: Real>(&self, x: &[T]) -> T {
        match *self {
            SingularSet::None => T::infinity(),
            SingularSet::Origin => norm(x),
            SingularSet::Axis => axis_distance(x),
            SingularSet::Collisions { n, d } => {
                let mut best = T::infinity();
                for i in 0..n {
                    for j in (i + 1)..n {
                        best = best.min(distance(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]));
                    }
                }
                best
            }
        }
    }

    pub fn contains<T: Real>(&self, x: &[T]) -> bool {
        !matches!(self, SingularSet::None) && self.distance(x) <= T::zero()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind<T> {
    /// No killing.
    Full,
    Ball { center: Vec<T>, radius: T },
    /// `{r_in < |x| < r_out}` around the origin.
    Annulus { r_in: T, r_out: T },
    BallComplement { center: Vec<T>, radius: T },
    /// `{x · normal < offset}`.
    Halfspace { normal: Vec<T>, offset: T },
}

/// An open subset of the position space.
///
/// For the interacting model the kind is applied to every particle block of
/// length `block_dim`; the domain is the set of configurations whose particles
/// all lie in it.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain<T> {
    kind: DomainKind<T>,
    block_dim: usize,
}

impl<T: Real> Domain<T> {
    pub fn new(kind: DomainKind<T>, block_dim: usize) -> Result<Self> {
        if block_dim == 0 {
            return Err(Error::spec("domain dimension must be positive"));
        }
        let check_len = |v: &Vec<T>, what: &str| {
            if v.len() != block_dim {
                Err(Error::spec(format!(
                    "{what} has length {}, domain dimension is {block_dim}",
                    v.len()
                )))
            } else {
                Ok(())
            }
        };
        match &kind {
            DomainKind::Full => {}
            DomainKind::Ball { center, radius } | DomainKind::BallComplement { center, radius } => {
                check_len(center, "center")?;
                if !(*radius > T::zero()) {
                    return Err(Error::spec("ball radius must be positive"));
                }
            }
            DomainKind::Annulus { r_in, r_out } => {
                if !(*r_in >= T::zero() && r_out > r_in) {
                    return Err(Error::spec("annulus needs 0 ≤ r_in < r_out"));
                }
            }
            DomainKind::Halfspace { normal, .. } => {
                check_len(normal, "normal")?;
                if !(norm(normal) > T::zero()) {
                    return Err(Error::spec("halfspace normal must be nonzero"));
                }
            }
        }
        Ok(Self { kind, block_dim })
    }

    pub fn full(block_dim: usize) -> Self {
        Self {
            kind: DomainKind::Full,
            block_dim,
        }
    }

    pub fn ball(center: Vec<T>, radius: T) -> Result<Self> {
        let d = center.len();
        Self::new(DomainKind::Ball { center, radius }, d)
    }

    pub fn kind(&self) -> &DomainKind<T> {
        &self.kind
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn is_full(&self) -> bool {
        matches!(self.kind, DomainKind::Full)
    }

    fn block_inside(&self, x: &[T]) -> bool {
        match &self.kind {
            DomainKind::Full => true,
            DomainKind::Ball { center, radius } => distance(x, center) < *radius,
            DomainKind::Annulus { r_in, r_out } => {
                let r = norm(x);
                r > *r_in && r < *r_out
            }
            DomainKind::BallComplement { center, radius } => distance(x, center) > *radius,
            DomainKind::Halfspace { normal, offset } => {
                crate::scalar::dot(x, normal) < *offset
            }
        }
    }

    /// Whether a position vector lies in the open domain and off the singular
    /// set. For kinetic states pass the position component only.
    pub fn contains(&self, x: &[T], singular: &SingularSet) -> Result<bool> {
        if !x.len().is_multiple_of(self.block_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.block_dim,
                got: x.len(),
            });
        }
        Ok(self.contains_unchecked(x, singular))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, x: &[T], singular: &SingularSet) -> bool {
        x.chunks(self.block_dim).all(|b| self.block_inside(b)) && !singular.contains(x)
    }
}
