//! Increments of the Lévy processes driving the jump models.
//!
//! Every family is built from three primitives: standard normal vectors, the
//! one-sided stable subordinator ([`positive_stable`]) and gamma variables.
//! With `S` a subordinator increment and `Z` a standard normal vector,
//! `√(2S)·Z` has characteristic function `E exp(−S|u|²)`; that identity turns
//! a Laplace exponent `φ` of `S` into the characteristic exponent `φ(|u|²)`.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{norm, Real};

/// Default cap on rejection attempts for the relativistic sampler.
pub const DEFAULT_REJECTION_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LevyFamily<T> {
    /// Standard Brownian motion, `Ψ(u) = |u|²/2`.
    BrownianStandard,
    /// `Ψ(u) = |u|^α`, `α ∈ (0, 2]`. At `α = 2` this is Brownian motion with
    /// twice the standard variance.
    IsotropicStable { alpha: T },
    /// `Ψ(u) = (|u|² + m^(2/α))^(α/2) − m`, `α ∈ (0, 2)`, `m > 0`.
    RelativisticStable { alpha: T, m: T },
    /// `Ψ(u) = log(1 + |u|²)`.
    VarianceGamma,
    /// `Ψ(u) = log(1 + |u|^α)`, `α ∈ (0, 2)`.
    GeometricStable { alpha: T },
    /// `Ψ(u) = |u|² + |u|^α`, `α ∈ (0, 2)`.
    JumpDiffusion { alpha: T },
}

/// A validated Lévy process in `ℝ^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevySpec<T> {
    family: LevyFamily<T>,
    dim: usize,
    rejection_cap: usize,
}

impl<T: Real> LevySpec<T> {
    pub fn new(family: LevyFamily<T>, dim: usize) -> Result<Self> {
        let two = T::lit(2.0);
        let open = |a: T| a > T::zero() && a < two;
        match family {
            LevyFamily::BrownianStandard => {
                if dim == 0 {
                    return Err(Error::spec("dimension must be positive"));
                }
            }
            _ if dim < 2 => {
                return Err(Error::spec("jump families need dimension d ≥ 2"));
            }
            LevyFamily::IsotropicStable { alpha } => {
                if !(alpha > T::zero() && alpha <= two) {
                    return Err(Error::spec("isotropic stable index must lie in (0, 2]"));
                }
            }
            LevyFamily::RelativisticStable { alpha, m } => {
                if !open(alpha) || !(m > T::zero() && m.is_finite()) {
                    return Err(Error::spec("relativistic stable needs α ∈ (0, 2) and m > 0"));
                }
            }
            LevyFamily::VarianceGamma => {}
            LevyFamily::GeometricStable { alpha } | LevyFamily::JumpDiffusion { alpha } => {
                if !open(alpha) {
                    return Err(Error::spec("stability index must lie in (0, 2)"));
                }
            }
        }
        Ok(Self {
            family,
            dim,
            rejection_cap: DEFAULT_REJECTION_CAP,
        })
    }

    pub fn brownian(dim: usize) -> Result<Self> {
        Self::new(LevyFamily::BrownianStandard, dim)
    }

    pub fn with_rejection_cap(mut self, cap: usize) -> Self {
        self.rejection_cap = cap.max(1);
        self
    }

    pub fn family(&self) -> LevyFamily<T> {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rejection_cap(&self) -> usize {
        self.rejection_cap
    }

    /// Characteristic exponent `Ψ(u)`, a function of `|u|` for every family.
    pub fn psi(&self, u: &[T]) -> T {
        self.psi_radial(norm(u))
    }

    pub fn psi_radial(&self, r: T) -> T {
        let r2 = r * r;
        match self.family {
            LevyFamily::BrownianStandard => r2 * T::lit(0.5),
            LevyFamily::IsotropicStable { alpha } => r.powf(alpha),
            LevyFamily::RelativisticStable { alpha, m } => {
                (r2 + m.powf(T::lit(2.0) / alpha)).powf(alpha * T::lit(0.5)) - m
            }
            LevyFamily::VarianceGamma => r2.ln_1p(),
            LevyFamily::GeometricStable { alpha } => r.powf(alpha).ln_1p(),
            LevyFamily::JumpDiffusion { alpha } => r2 + r.powf(alpha),
        }
    }

    /// Whether the law of an increment is rotation invariant (all families).
    pub fn is_isotropic(&self) -> bool {
        true
    }
}

#[inline]
fn std_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}

/// `d` i.i.d. centered normals with variance `dt`.
pub fn gaussian_increment<T: Real, R: Rng + ?Sized>(d: usize, dt: T, rng: &mut R) -> Result<Vec<T>> {
    if !(dt > T::zero()) {
        return Err(Error::arg("time step must be positive"));
    }
    let mut out = vec![T::zero(); d];
    fill_gaussian(dt, &mut out, rng);
    Ok(out)
}

#[inline]
fn fill_gaussian<T: Real, R: Rng + ?Sized>(variance: T, out: &mut [T], rng: &mut R) {
    let s = variance.sqrt();
    for o in out {
        *o = s * std_normal::<T, R>(rng);
    }
}

/// One-sided stable variable with `E exp(−λS) = exp(−t λ^β)`, `β ∈ (0, 1)`.
///
/// Uses the Chambers–Mallows–Stuck representation in Kanter's form: with `U`
/// uniform on `(0, π)` and `E` standard exponential,
/// `S₁ = sin(βU)/sin(U)^(1/β) · (sin((1−β)U)/E)^((1−β)/β)`, and `S = t^(1/β) S₁`.
/// For extremely small `t` the result can round to zero.
pub fn positive_stable<T: Real, R: Rng + ?Sized>(beta: T, t: T, rng: &mut R) -> Result<T> {
    if !(beta > T::zero() && beta < T::one()) {
        return Err(Error::arg("subordinator index must lie in (0, 1)"));
    }
    if !(t > T::zero()) {
        return Err(Error::arg("subordinator time must be positive"));
    }
    Ok(T::lit(positive_stable_unchecked(beta.as_f64(), t.as_f64(), rng)))
}

fn positive_stable_unchecked<R: Rng + ?Sized>(beta: f64, t: f64, rng: &mut R) -> f64 {
    use std::f64::consts::PI;
    loop {
        // open interval (0, π)
        let u = PI * (1.0 - rng.gen::<f64>());
        if u >= PI {
            continue;
        }
        let e: f64 = Exp1.sample(rng);
        if e <= 0.0 {
            continue;
        }
        let a = (beta * u).sin() / u.sin().powf(1.0 / beta);
        let b = (((1.0 - beta) * u).sin() / e).powf((1.0 - beta) / beta);
        let shape = a * b;
        if !(shape > 0.0 && shape.is_finite()) {
            continue;
        }
        // In log space so a tiny `t` cannot zero out a large shape factor.
        // The result may still round to 0 when `t` is extremely small.
        return (t.ln() / beta + shape.ln()).exp();
    }
}

fn gamma_unit_scale<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0)
        .expect("gamma shape is positive")
        .sample(rng)
}

/// One increment over `dt`, with characteristic function `exp(−dt Ψ(u))`.
pub fn levy_increment<T: Real, R: Rng + ?Sized>(spec: &LevySpec<T>, dt: T, rng: &mut R) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); spec.dim()];
    levy_increment_into(spec, dt, &mut out, rng)?;
    Ok(out)
}

/// [`levy_increment`] writing into a caller buffer of length `spec.dim()`.
pub fn levy_increment_into<T: Real, R: Rng + ?Sized>(
    spec: &LevySpec<T>,
    dt: T,
    out: &mut [T],
    rng: &mut R,
) -> Result<()> {
    if !(dt > T::zero()) {
        return Err(Error::arg("time step must be positive"));
    }
    let dtf = dt.as_f64();
    match spec.family {
        LevyFamily::BrownianStandard => fill_gaussian(dt, out, rng),
        LevyFamily::IsotropicStable { alpha } => {
            let alpha = alpha.as_f64();
            if alpha == 2.0 {
                fill_gaussian(T::lit(2.0 * dtf), out, rng);
            } else {
                let s = positive_stable_unchecked(alpha / 2.0, dtf, rng);
                fill_gaussian(T::lit(2.0 * s), out, rng);
            }
        }
        LevyFamily::RelativisticStable { alpha, m } => {
            let (alpha, m) = (alpha.as_f64(), m.as_f64());
            let tilt = m.powf(2.0 / alpha);
            let mut accepted = None;
            for _ in 0..spec.rejection_cap {
                let s = positive_stable_unchecked(alpha / 2.0, dtf, rng);
                if rng.gen::<f64>() < (-tilt * s).exp() {
                    accepted = Some(s);
                    break;
                }
            }
            let s = accepted.ok_or(Error::RejectionCap {
                cap: spec.rejection_cap,
                acceptance: (-m * dtf).exp(),
            })?;
            fill_gaussian(T::lit(2.0 * s), out, rng);
        }
        LevyFamily::VarianceGamma => {
            let g = gamma_unit_scale(dtf, rng);
            fill_gaussian(T::lit(2.0 * g), out, rng);
        }
        LevyFamily::GeometricStable { alpha } => {
            let g = gamma_unit_scale(dtf, rng);
            if g > 0.0 {
                let s = positive_stable_unchecked(alpha.as_f64() / 2.0, g, rng);
                fill_gaussian(T::lit(2.0 * s), out, rng);
            } else {
                out.iter_mut().for_each(|o| *o = T::zero());
            }
        }
        LevyFamily::JumpDiffusion { alpha } => {
            let s = positive_stable_unchecked(alpha.as_f64() / 2.0, dtf, rng);
            // Gaussian part has Ψ = |u|², i.e. variance 2dt per coordinate;
            // the sum of two independent normals is normal with summed variance.
            fill_gaussian(T::lit(2.0 * dtf + 2.0 * s), out, rng);
        }
    }
    Ok(())
}

/// Source of the random increments consumed by the dynamics.
///
/// [`RngIncrements`] draws real noise; [`ZeroNoise`] returns zero increments
/// and turns every model into its deterministic skeleton.
pub trait IncrementSource<T: Real> {
    /// Fills `out` with i.i.d. `N(0, dt)` coordinates.
    fn gaussian(&mut self, dt: T, out: &mut [T]);
    fn levy(&mut self, spec: &LevySpec<T>, dt: T, out: &mut [T]) -> Result<()>;
}

pub struct RngIncrements<R>(pub R);

impl<T: Real, R: Rng> IncrementSource<T> for RngIncrements<R> {
    #[inline]
    fn gaussian(&mut self, dt: T, out: &mut [T]) {
        fill_gaussian(dt, out, &mut self.0);
    }

    #[inline]
    fn levy(&mut self, spec: &LevySpec<T>, dt: T, out: &mut [T]) -> Result<()> {
        levy_increment_into(spec, dt, out, &mut self.0)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroNoise;

impl<T: Real> IncrementSource<T> for ZeroNoise {
    fn gaussian(&mut self, _dt: T, out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
    }

    fn levy(&mut self, _spec: &LevySpec<T>, _dt: T, out: &mut [T]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = T::zero());
        Ok(())
    }
}

/// `(1/N) Σ exp(i u·xⱼ)`.
pub fn empirical_char_function<T: Real>(samples: &[Vec<T>], u: &[T]) -> Result<Complex<T>> {
    if samples.is_empty() {
        return Err(Error::arg("empirical characteristic function needs samples"));
    }
    let (mut re, mut im) = (T::zero(), T::zero());
    for x in samples {
        if x.len() != u.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                got: x.len(),
            });
        }
        let phase = crate::scalar::dot(x, u);
        re += phase.cos();
        im += phase.sin();
    }
    let n = T::from_usize_lossy(samples.len());
    Ok(Complex::new(re / n, im / n))
}

/// Fixed 20-frequency probe grid with `|u| ≤ r_max`: five radii times four
/// directions in the first two coordinates.
pub fn probe_frequencies<T: Real>(dim: usize, r_max: T) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(20);
    for k in 1..=5 {
        let r = r_max * T::lit(k as f64 / 5.0);
        for j in 0..4 {
            let angle = T::lit(std::f64::consts::PI * j as f64 / 4.0);
            let mut u = vec![T::zero(); dim];
            u[0] = r * angle.cos();
            if dim > 1 {
                u[1] = r * angle.sin();
            }
            out.push(u);
        }
    }
    out
}

/// `sup_u |φ̂(u) − exp(−dt Ψ(u))|` over a probe grid.
pub fn char_function_sup_error<T: Real>(
    spec: &LevySpec<T>,
    dt: T,
    samples: &[Vec<T>],
    frequencies: &[Vec<T>],
) -> Result<T> {
    let mut worst = T::zero();
    for u in frequencies {
        let emp = empirical_char_function(samples, u)?;
        let exact = (-dt * spec.psi(u)).exp();
        let err = ((emp.re - exact).powi(2) + emp.im.powi(2)).sqrt();
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_critical_value, ks_two_sample};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn psi_vanishes_at_zero_and_is_nonnegative() {
        let fams = [
            LevyFamily::BrownianStandard,
            LevyFamily::IsotropicStable { alpha: 1.5 },
            LevyFamily::RelativisticStable { alpha: 1.0, m: 2.0 },
            LevyFamily::VarianceGamma,
            LevyFamily::GeometricStable { alpha: 0.7 },
            LevyFamily::JumpDiffusion { alpha: 1.2 },
        ];
        for f in fams {
            let spec = LevySpec::<f64>::new(f, 2).unwrap();
            assert!(spec.psi(&[0.0, 0.0]).abs() < 1e-15, "{f:?}");
            for r in [0.1, 1.0, 3.0, 10.0] {
                assert!(spec.psi_radial(r) >= 0.0);
            }
        }
        // α = 2 stable and standard Brownian motion differ by a factor 2
        let st = LevySpec::new(LevyFamily::IsotropicStable { alpha: 2.0 }, 2).unwrap();
        let bm = LevySpec::<f64>::brownian(2).unwrap();
        assert_eq!(st.psi_radial(1.5), 2.0 * bm.psi_radial(1.5));
    }

    #[test]
    fn spec_validation() {
        assert!(LevySpec::new(LevyFamily::IsotropicStable { alpha: 2.5 }, 2).is_err());
        assert!(LevySpec::new(LevyFamily::IsotropicStable { alpha: 1.0 }, 1).is_err());
        assert!(LevySpec::<f64>::brownian(1).is_ok());
        assert!(LevySpec::new(LevyFamily::RelativisticStable { alpha: 1.0, m: 0.0 }, 2).is_err());
        assert!(LevySpec::new(LevyFamily::GeometricStable { alpha: 2.0 }, 2).is_err());
    }

    #[test]
    fn gaussian_increment_moments() {
        let mut r = rng(1);
        let n = 1_000_000;
        let dt = 0.3;
        let (mut s00, mut s11, mut s01) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = gaussian_increment(2, dt, &mut r).unwrap();
            s00 += x[0] * x[0];
            s11 += x[1] * x[1];
            s01 += x[0] * x[1];
        }
        let nf = n as f64;
        assert!((s00 / nf / dt - 1.0).abs() < 0.01);
        assert!((s11 / nf / dt - 1.0).abs() < 0.01);
        assert!((s01 / nf / dt).abs() < 3.0 / nf.sqrt());
        assert!(gaussian_increment(2, 0.0, &mut r).is_err());
        let tiny = gaussian_increment(2, 1e-14, &mut r).unwrap();
        assert!(norm(&tiny) < 1e-5);
    }

    #[test]
    fn half_stable_matches_levy_distribution() {
        // S = t²/(2Z²) has Laplace transform exp(−t√λ)
        let mut r = rng(2);
        let n = 100_000;
        let t = 0.7;
        let a: Vec<f64> = (0..n).map(|_| positive_stable(0.5, t, &mut r).unwrap()).collect();
        let b: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut r);
                t * t / (2.0 * z * z)
            })
            .collect();
        let d = ks_two_sample(&a, &b);
        assert!(d < ks_critical_value(n, n, 0.01), "KS statistic {d}");
        assert!(a.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn positive_stable_laplace_transform() {
        let mut r = rng(3);
        let n = 100_000;
        for &(beta, t) in &[(0.3, 1.0), (0.75, 0.2), (0.5, 2.0)] {
            let s: Vec<f64> = (0..n).map(|_| positive_stable(beta, t, &mut r).unwrap()).collect();
            for lam in [0.5, 1.0, 2.0] {
                let emp = s.iter().map(|&x| (-lam * x).exp()).sum::<f64>() / n as f64;
                let exact = (-t * f64::powf(lam, beta)).exp();
                assert!((emp - exact).abs() < 4.0 / (n as f64).sqrt(), "β={beta} λ={lam}");
            }
        }
        assert!(positive_stable(1.0, 1.0, &mut r).is_err());
        assert!(positive_stable(0.5, 0.0, &mut r).is_err());
    }

    #[test]
    fn tiny_subordinator_times_terminate() {
        let mut r = rng(9);
        for _ in 0..100 {
            let s: f64 = positive_stable(0.6, 1e-300, &mut r).unwrap();
            assert!(s >= 0.0 && s.is_finite());
        }
        // gamma times at shape 0.01 routinely fall below 1e-200
        let spec = LevySpec::<f64>::new(LevyFamily::GeometricStable { alpha: 1.2 }, 2).unwrap();
        for _ in 0..2000 {
            let x = levy_increment(&spec, 0.01, &mut r).unwrap();
            assert!(x.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn stable_two_has_variance_two_dt() {
        let spec = LevySpec::new(LevyFamily::IsotropicStable { alpha: 2.0 }, 2).unwrap();
        let mut r = rng(4);
        let n = 200_000;
        let dt = 0.1;
        let mut s = 0.0;
        for _ in 0..n {
            let x = levy_increment(&spec, dt, &mut r).unwrap();
            s += x[0] * x[0];
        }
        assert!((s / n as f64 / (2.0 * dt) - 1.0).abs() < 0.02);
    }

    #[test]
    fn stable_char_function() {
        let spec = LevySpec::new(LevyFamily::IsotropicStable { alpha: 1.5 }, 2).unwrap();
        let mut r = rng(5);
        let n = 100_000;
        let samples: Vec<Vec<f64>> = (0..n).map(|_| levy_increment(&spec, 0.1, &mut r).unwrap()).collect();
        let err = char_function_sup_error(&spec, 0.1, &samples, &probe_frequencies(2, 3.0)).unwrap();
        assert!(err < 4.0 / (n as f64).sqrt(), "sup error {err}");
    }

    #[test]
    fn relativistic_rejection_cap() {
        let spec = LevySpec::new(LevyFamily::RelativisticStable { alpha: 1.0, m: 50.0 }, 2)
            .unwrap()
            .with_rejection_cap(1);
        let mut r = rng(6);
        let mut failures = 0;
        for _ in 0..100 {
            if let Err(Error::RejectionCap { cap, .. }) = levy_increment(&spec, 1.0, &mut r) {
                assert_eq!(cap, 1);
                failures += 1;
            }
        }
        assert!(failures > 90);
    }

    #[test]
    fn empirical_char_function_examples() {
        let zeros = vec![vec![0.0, 0.0]; 5];
        assert_eq!(empirical_char_function(&zeros, &[1.0, 2.0]).unwrap(), Complex::new(1.0, 0.0));
        let pts = vec![vec![1.0, -2.0], vec![0.3, 0.3]];
        assert_eq!(empirical_char_function(&pts, &[0.0, 0.0]).unwrap(), Complex::new(1.0, 0.0));
        let v = [1.0, 0.0];
        let sym = vec![v.to_vec(), vec![-1.0, 0.0], v.to_vec(), vec![-1.0, 0.0]];
        let c = empirical_char_function(&sym, &[std::f64::consts::PI, 0.0]).unwrap();
        assert!((c.re + 1.0).abs() < 1e-15 && c.im.abs() < 1e-15);
        assert!(empirical_char_function::<f64>(&[], &[1.0]).is_err());
    }

    #[test]
    fn zero_noise_is_zero() {
        let spec = LevySpec::new(LevyFamily::JumpDiffusion { alpha: 1.0 }, 3).unwrap();
        let mut out = vec![1.0; 3];
        IncrementSource::<f64>::levy(&mut ZeroNoise, &spec, 0.1, &mut out).unwrap();
        assert_eq!(out, vec![0.0; 3]);
    }
}
