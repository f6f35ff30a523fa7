//! Finite-difference reference solvers for the Schrödinger operator
//! `−½Δ + V` in one radial variable.
//!
//! These solvers share no code with the Monte Carlo stack beyond the scalar
//! trait, so agreement between the two is an independent check.
//!
//! Radial problems use the cell-centred grid `rᵢ = (i + ½)h`, `h = R/(n + ½)`,
//! with zero flux through `r = 0` and a Dirichlet condition at `r = R`. The
//! discrete operator is the conservative form
//! `−½ r^{1−d} (r^{d−1} u')' + V u`, symmetrized with the cell volumes
//! `r^{d−1}h`, so the ground state is the lowest eigenvalue of a symmetric
//! tridiagonal matrix. Interval problems use the standard vertex grid with
//! Dirichlet conditions at both ends.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `V` as a function of the radius (or of `x` for interval problems).
pub type RadialPotential<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometry<T> {
    /// `0 ≤ r < R` in `d` dimensions, regular at the origin.
    Radial { dim: usize, radius: T },
    /// `lo < x < hi`, absorbing at both ends.
    Interval { lo: T, hi: T },
}

/// A discretized one-variable eigenproblem.
#[derive(Clone)]
pub struct RadialProblem<T> {
    geometry: Geometry<T>,
    potential: RadialPotential<T>,
    n: usize,
}

impl<T: fmt::Debug> fmt::Debug for RadialProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProblem")
            .field("geometry", &self.geometry)
            .field("n", &self.n)
            .finish_non_exhaustive()
    }
}

const MIN_GRID: usize = 16;

impl<T: Real> RadialProblem<T> {
    pub fn radial(dim: usize, radius: T, potential: RadialPotential<T>, n: usize) -> Result<Self> {
        if dim == 0 || !(radius > T::zero() && radius.is_finite()) {
            return Err(Error::spec("radial problem needs d ≥ 1 and 0 < R < ∞"));
        }
        Self::build(Geometry::Radial { dim, radius }, potential, n)
    }

    pub fn interval(lo: T, hi: T, potential: RadialPotential<T>, n: usize) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::spec("interval needs lo < hi"));
        }
        Self::build(Geometry::Interval { lo, hi }, potential, n)
    }

    fn build(geometry: Geometry<T>, potential: RadialPotential<T>, n: usize) -> Result<Self> {
        if n < MIN_GRID {
            return Err(Error::spec(format!("grid needs at least {MIN_GRID} points")));
        }
        let p = Self {
            geometry,
            potential,
            n,
        };
        if p.nodes().iter().any(|&r| !(p.potential)(r).is_finite()) {
            return Err(Error::spec("potential must be finite on the grid"));
        }
        Ok(p)
    }

    /// The same problem on a grid with `n` points.
    pub fn with_grid(&self, n: usize) -> Result<Self> {
        Self::build(self.geometry, self.potential.clone(), n)
    }

    pub fn geometry(&self) -> Geometry<T> {
        self.geometry
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> T {
        let n = T::from_usize_lossy(self.n);
        match self.geometry {
            Geometry::Radial { radius, .. } => radius / (n + T::lit(0.5)),
            Geometry::Interval { lo, hi } => (hi - lo) / (n + T::one()),
        }
    }

    /// Unknown locations.
    pub fn nodes(&self) -> Vec<T> {
        let h = self.spacing();
        (0..self.n)
            .map(|i| match self.geometry {
                Geometry::Radial { .. } => (T::from_usize_lossy(i) + T::lit(0.5)) * h,
                Geometry::Interval { lo, .. } => lo + T::from_usize_lossy(i + 1) * h,
            })
            .collect()
    }

    /// Symmetrized operator: diagonal, off-diagonal, and the cell volumes.
    fn assemble(&self) -> (Vec<T>, Vec<T>, Vec<T>) {
        let h = self.spacing();
        let nodes = self.nodes();
        let half = T::lit(0.5);
        match self.geometry {
            Geometry::Radial { dim, .. } => {
                let p = (dim - 1) as i32;
                let w: Vec<T> = nodes.iter().map(|&r| r.powi(p) * h).collect();
                // flux through the face at (i + 1)h; the face at 0 carries none
                let c: Vec<T> = (0..self.n)
                    .map(|i| (T::from_usize_lossy(i + 1) * h).powi(p) / h)
                    .collect();
                let diag = (0..self.n)
                    .map(|i| {
                        let left = if i == 0 { T::zero() } else { c[i - 1] };
                        half * (c[i] + left) / w[i] + (self.potential)(nodes[i])
                    })
                    .collect();
                let off = (0..self.n - 1)
                    .map(|i| -half * c[i] / (w[i] * w[i + 1]).sqrt())
                    .collect();
                (diag, off, w)
            }
            Geometry::Interval { .. } => {
                let k = T::one() / (h * h);
                let diag = nodes.iter().map(|&x| k + (self.potential)(x)).collect();
                let off = vec![-half * k; self.n - 1];
                (diag, off, vec![h; self.n])
            }
        }
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count<T: Real>(diag: &[T], off: &[T], x: T) -> usize {
    let tiny = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < T::zero() {
        count += 1;
    }
    for i in 1..diag.len() {
        if q.abs() < tiny {
            q = tiny;
        }
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// Solves `(M − σI) y = b` by the Thomas algorithm.
fn thomas<T: Real>(diag: &[T], off: &[T], sigma: T, b: &[T]) -> Vec<T> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut m = diag[0] - sigma;
    c[0] = if n > 1 { off[0] / m } else { T::zero() };
    d[0] = b[0] / m;
    for i in 1..n {
        m = diag[i] - sigma - off[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = off[i] / m;
        }
        d[i] = (b[i] - off[i - 1] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i] - c[i] * d[i + 1];
    }
    d
}

/// Ground eigenpair of a discretized problem.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundState<T> {
    pub lambda: T,
    pub nodes: Vec<T>,
    /// Positive, maximum 1.
    pub eigenfunction: Vec<T>,
}

const INVERSE_ITERATION_CAP: usize = 200;

/// Lowest eigenvalue and eigenfunction: Sturm bisection brackets the
/// eigenvalue, inverse iteration from just below the bracket refines it.
pub fn radial_ground_eigen<T: Real>(problem: &RadialProblem<T>) -> Result<GroundState<T>> {
    let (diag, off, w) = problem.assemble();
    let n = diag.len();
    // Gershgorin bounds
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let rad = (if i > 0 { off[i - 1].abs() } else { T::zero() })
            + (if i + 1 < n { off[i].abs() } else { T::zero() });
        lo = lo.min(diag[i] - rad);
        hi = hi.max(diag[i] + rad);
    }
    let scale = hi.abs().max(lo.abs()).max(T::one());
    let tol = T::epsilon() * T::lit(64.0) * scale;
    while hi - lo > tol {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(&diag, &off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let sigma = lo - tol;
    let mut y = vec![T::one(); n];
    let mut lambda = T::nan();
    for _ in 0..INVERSE_ITERATION_CAP {
        let z = thomas(&diag, &off, sigma, &y);
        let norm = z.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(norm > T::zero() && norm.is_finite()) {
            break;
        }
        let next: Vec<T> = z.iter().map(|&v| v / norm).collect();
        // Rayleigh quotient
        let mut rq = T::zero();
        for i in 0..n {
            let mut my = diag[i] * next[i];
            if i > 0 {
                my += off[i - 1] * next[i - 1];
            }
            if i + 1 < n {
                my += off[i] * next[i + 1];
            }
            rq += next[i] * my;
        }
        let change: T = next.iter().zip(&y).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
        y = next;
        let converged = (rq - lambda).abs() <= tol * T::lit(16.0) && change < T::lit(1e-8).max(T::epsilon().sqrt());
        lambda = rq;
        if converged {
            if (lambda - hi).abs() > T::lit(1e3) * tol {
                return Err(Error::NonConvergence(
                    "inverse iteration converged away from the Sturm bracket".into(),
                ));
            }
            let mut u: Vec<T> = y.iter().zip(&w).map(|(&v, &wi)| v / wi.sqrt()).collect();
            let sign = if u.iter().copied().sum::<T>() < T::zero() { -T::one() } else { T::one() };
            let max = u.iter().map(|&v| v * sign).fold(T::neg_infinity(), T::max);
            u.iter_mut().for_each(|v| *v = *v * sign / max);
            return Ok(GroundState {
                lambda,
                nodes: problem.nodes(),
                eigenfunction: u,
            });
        }
    }
    Err(Error::NonConvergence(format!(
        "inverse iteration did not converge in {INVERSE_ITERATION_CAP} iterations"
    )))
}

/// Ground eigenvalues on three nested grids and their extrapolant.
#[derive(Clone, Debug, PartialEq)]
pub struct Richardson<T> {
    /// Grid sizes `n, 2n, 4n`.
    pub grid_n: [usize; 3],
    pub lambdas: [T; 3],
    /// `(4λ_{4n} − λ_{2n})/3`.
    pub extrapolated: T,
    /// Distance between the extrapolants of the two finer and the two
    /// coarser grids.
    pub error_bar: T,
}

/// Richardson extrapolation of the ground eigenvalue over `n, 2n, 4n`,
/// assuming an `O(h²)` leading error.
pub fn richardson_ground_eigen<T: Real>(problem: &RadialProblem<T>) -> Result<Richardson<T>> {
    let n = problem.grid_size();
    let grid_n = [n, 2 * n, 4 * n];
    let mut lambdas = [T::zero(); 3];
    for (l, &m) in lambdas.iter_mut().zip(&grid_n) {
        *l = radial_ground_eigen(&problem.with_grid(m)?)?.lambda;
    }
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let fine = (four * lambdas[2] - lambdas[1]) / three;
    let coarse = (four * lambdas[1] - lambdas[0]) / three;
    Ok(Richardson {
        grid_n,
        lambdas,
        extrapolated: fine,
        error_bar: (fine - coarse).abs(),
    })
}

/// Survival probability with its change under halving the time step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Survival<T> {
    pub value: T,
    pub dt_change: T,
}

/// `u(t, r₀)` for `∂ₜu = ½Δu − Vu`, `u(0) = 1`, absorbing at the boundary:
/// Crank–Nicolson with `steps` steps after four implicit-Euler quarter steps
/// that damp the boundary incompatibility of the initial data.
pub fn radial_survival<T: Real>(problem: &RadialProblem<T>, t: T, start: T, steps: usize) -> Result<Survival<T>> {
    if !(t > T::zero()) || steps == 0 {
        return Err(Error::arg("need t > 0 and at least one step"));
    }
    let coarse = survival_solve(problem, t, start, steps)?;
    let fine = survival_solve(problem, t, start, 2 * steps)?;
    Ok(Survival {
        value: fine,
        dt_change: (fine - coarse).abs(),
    })
}

fn survival_solve<T: Real>(problem: &RadialProblem<T>, t: T, start: T, steps: usize) -> Result<T> {
    let (diag, off, w) = problem.assemble();
    let n = diag.len();
    let sq: Vec<T> = w.iter().map(|&x| x.sqrt()).collect();
    let mut y: Vec<T> = sq.clone();
    let tau = t / T::from_usize_lossy(steps);
    let half = T::lit(0.5);
    let apply = |y: &[T]| -> Vec<T> {
        (0..n)
            .map(|i| {
                let mut v = diag[i] * y[i];
                if i > 0 {
                    v += off[i - 1] * y[i - 1];
                }
                if i + 1 < n {
                    v += off[i] * y[i + 1];
                }
                v
            })
            .collect()
    };
    // (I + sB) y' = rhs  ⇔  (B + I/s) y' = rhs/s
    let implicit = |rhs: &[T], s: T| -> Vec<T> {
        let d: Vec<T> = diag.to_vec();
        let b: Vec<T> = rhs.iter().map(|&v| v / s).collect();
        thomas(&d, &off, -T::one() / s, &b)
    };
    let quarter = tau * T::lit(0.25);
    for _ in 0..4 {
        y = implicit(&y, quarter);
    }
    for _ in 1..steps {
        let by = apply(&y);
        let rhs: Vec<T> = y.iter().zip(&by).map(|(&a, &b)| a - half * tau * b).collect();
        y = implicit(&rhs, half * tau);
    }
    let u: Vec<T> = y.iter().zip(&sq).map(|(&a, &b)| a / b).collect();
    interpolate(problem, &u, start)
}

/// Value of grid data at a point: quadratic in `r²` through the first two
/// nodes near the origin of a radial grid, linear elsewhere, 0 at absorbing
/// ends.
fn interpolate<T: Real>(problem: &RadialProblem<T>, u: &[T], at: T) -> Result<T> {
    let nodes = problem.nodes();
    let n = nodes.len();
    match problem.geometry {
        Geometry::Radial { radius, .. } => {
            if !(at >= T::zero() && at < radius) {
                return Err(Error::arg("start radius outside [0, R)"));
            }
            if at <= nodes[0] {
                // u ≈ a + b r² through the two innermost nodes
                let (r0, r1) = (nodes[0], nodes[1]);
                let b = (u[1] - u[0]) / (r1 * r1 - r0 * r0);
                let a = u[0] - b * r0 * r0;
                return Ok(a + b * at * at);
            }
            Ok(linear(&nodes, u, at, radius))
        }
        Geometry::Interval { lo, hi } => {
            if !(at > lo && at < hi) {
                return Err(Error::arg("start point outside the interval"));
            }
            if at <= nodes[0] {
                return Ok(u[0] * (at - lo) / (nodes[0] - lo));
            }
            let _ = n;
            Ok(linear(&nodes, u, at, hi))
        }
    }
}

fn linear<T: Real>(nodes: &[T], u: &[T], at: T, end: T) -> T {
    let n = nodes.len();
    if at >= nodes[n - 1] {
        return u[n - 1] * (end - at) / (end - nodes[n - 1]);
    }
    let i = nodes.partition_point(|&r| r <= at) - 1;
    let s = (at - nodes[i]) / (nodes[i + 1] - nodes[i]);
    u[i] * (T::one() - s) + u[i + 1] * s
}

/// Smallest `R` on a doubling ladder from `start` with
/// `V(R) ≥ V_min + margin`, `V_min` taken over a fine scan of `(0, R]`.
pub fn truncation_radius<T: Real>(potential: &dyn Fn(T) -> T, start: T, margin: T) -> Result<T> {
    let mut r = start;
    for _ in 0..40 {
        let samples = 2000;
        let vmin = (1..=samples)
            .map(|i| potential(r * T::from_usize_lossy(i) / T::from_usize_lossy(samples)))
            .fold(T::infinity(), T::min);
        if potential(r) >= vmin + margin {
            return Ok(r);
        }
        r *= T::lit(2.0);
    }
    Err(Error::spec("potential does not grow enough to truncate the domain"))
}

/// Eigenvalue decomposition of two interacting particles in a quadratic
/// trap.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoParticleReduction<T> {
    /// Centre of mass: `d` copies of the 1-d harmonic ground energy.
    pub lambda_cm: Richardson<T>,
    /// Relative coordinate, radial problem in `d` dimensions.
    pub lambda_rel: Richardson<T>,
    pub total: T,
    pub error_bar: T,
    /// Change of `λ_rel` when the truncation radius is doubled.
    pub truncation_change: T,
}

/// `λ` for two Brownian particles with `Σ κ|xᵢ|²/2 + v(|x₁ − x₂|)` via the
/// rotation `u = (x₁+x₂)/√2`, `w = (x₁−x₂)/√2`: the centre of mass sees
/// `κ|u|²/2`, the relative coordinate `κ|w|²/2 + v(√2|w|)`.
pub fn two_particle_reduction<T: Real>(
    kappa: T,
    pair: RadialPotential<T>,
    dim: usize,
    n: usize,
) -> Result<TwoParticleReduction<T>> {
    if !(kappa > T::zero()) || dim == 0 {
        return Err(Error::spec("reduction needs a quadratic trap κ > 0 and d ≥ 1"));
    }
    let half = T::lit(0.5);
    let margin = T::lit(40.0);
    let harmonic: RadialPotential<T> = Arc::new(move |x: T| half * kappa * x * x);
    let l_cm = truncation_radius(&*harmonic, T::one(), margin)?;
    let one_d = richardson_ground_eigen(&RadialProblem::interval(-l_cm, l_cm, harmonic, n)?)?;
    let sqrt2 = T::lit(2.0).sqrt();
    let rel: RadialPotential<T> = Arc::new(move |r: T| half * kappa * r * r + pair(sqrt2 * r));
    let r_rel = truncation_radius(&*rel, T::one(), margin)?;
    let rel_eig = richardson_ground_eigen(&RadialProblem::radial(dim, r_rel, rel.clone(), n)?)?;
    let wide = richardson_ground_eigen(&RadialProblem::radial(dim, T::lit(2.0) * r_rel, rel, 2 * n)?)?;
    let d = T::from_usize_lossy(dim);
    let mut lambda_cm = one_d.clone();
    lambda_cm.lambdas.iter_mut().for_each(|l| *l *= d);
    lambda_cm.extrapolated *= d;
    lambda_cm.error_bar *= d;
    Ok(TwoParticleReduction {
        total: lambda_cm.extrapolated + rel_eig.extrapolated,
        error_bar: lambda_cm.error_bar + rel_eig.error_bar,
        truncation_change: (wide.extrapolated - rel_eig.extrapolated).abs(),
        lambda_cm,
        lambda_rel: rel_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn zero() -> RadialPotential<f64> {
        Arc::new(|_| 0.0)
    }

    #[test]
    fn sine_ground_state_on_interval() {
        let p = RadialProblem::interval(-1.0, 1.0, zero(), 200).unwrap();
        let rich = richardson_ground_eigen(&p).unwrap();
        let exact = PI * PI / 8.0;
        assert!((rich.extrapolated - exact).abs() < 1e-4);
        assert!(rich.error_bar < 1e-4);
        // the discrete eigenvalue of the 3-point Laplacian is known exactly
        let h = 2.0 / 201.0;
        let discrete = 2.0 / (h * h) * (PI * h / 4.0).sin().powi(2);
        let g = radial_ground_eigen(&p).unwrap();
        assert!((g.lambda - discrete).abs() < 1e-10 * discrete);
        assert!(g.eigenfunction.iter().all(|&u| u > 0.0));
    }

    #[test]
    fn harmonic_oscillator() {
        let v: RadialPotential<f64> = Arc::new(|x| 0.5 * x * x);
        let p = RadialProblem::interval(-8.0, 8.0, v.clone(), 200).unwrap();
        let g = radial_ground_eigen(&p).unwrap();
        assert!((g.lambda - 0.5).abs() < 1e-3, "{}", g.lambda);
        // the same problem as a 1-d radial (even) problem
        let r = RadialProblem::radial(1, 8.0, v, 400).unwrap();
        assert!((radial_ground_eigen(&r).unwrap().lambda - 0.5).abs() < 1e-4);
    }

    #[test]
    fn radial_harmonic_in_three_dimensions() {
        let v: RadialPotential<f64> = Arc::new(|r| 0.5 * r * r);
        let p = RadialProblem::radial(3, 9.0, v, 200).unwrap();
        let rich = richardson_ground_eigen(&p).unwrap();
        assert!((rich.extrapolated - 1.5).abs() < 1e-5, "{rich:?}");
    }

    #[test]
    fn disk_eigenvalue_converges_at_second_order() {
        let p = RadialProblem::radial(2, 1.0, zero(), 100).unwrap();
        let rich = richardson_ground_eigen(&p).unwrap();
        let [a, b, c] = rich.lambdas;
        let ratio = (a - b) / (b - c);
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
        assert!(rich.error_bar < 1e-5);
        // eigenfunction is positive and decreasing in r
        let g = radial_ground_eigen(&p).unwrap();
        assert!(g.eigenfunction.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    }

    #[test]
    fn survival_limits() {
        let p = RadialProblem::radial(2, 1.0, zero(), 200).unwrap();
        let s = radial_survival(&p, 1e-4, 0.0, 10).unwrap();
        assert!((s.value - 1.0).abs() < 1e-6);
        let huge: RadialPotential<f64> = Arc::new(|_| 1e4);
        let q = RadialProblem::radial(2, 1.0, huge, 200).unwrap();
        assert!(radial_survival(&q, 0.1, 0.0, 200).unwrap().value < 1e-6);
    }

    #[test]
    fn survival_decays_at_ground_rate() {
        let p = RadialProblem::radial(2, 1.0, zero(), 200).unwrap();
        let lam = radial_ground_eigen(&p).unwrap().lambda;
        let a = radial_survival(&p, 2.0, 0.0, 400).unwrap().value;
        let b = radial_survival(&p, 3.0, 0.0, 600).unwrap().value;
        let slope = (b.ln() - a.ln()) / 1.0;
        assert!((slope + lam).abs() < 0.01 * lam, "{slope} vs {lam}");
    }

    #[test]
    fn two_particle_without_interaction() {
        let red = two_particle_reduction(1.0f64, Arc::new(|_| 0.0), 2, 200).unwrap();
        assert!((red.total - 2.0).abs() < 1e-4, "{}", red.total);
    }

    #[test]
    fn bad_problems_are_rejected() {
        assert!(RadialProblem::radial(2, 1.0, zero(), 4).is_err());
        assert!(RadialProblem::interval(1.0, -1.0, zero(), 200).is_err());
        let sing: RadialPotential<f64> = Arc::new(|x| 1.0 / x);
        assert!(RadialProblem::interval(-1.0, 1.0, sing.clone(), 201).is_err());
        // the cell-centred radial grid never samples r = 0
        assert!(RadialProblem::radial(2, 1.0, sing, 200).is_ok());
    }
}
