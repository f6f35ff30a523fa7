//! Lyapunov functions, their generator ratios `𝓛W/W`, and numerical drift
//! scans.
//!
//! The radial functions use a cutoff `χ` equal to 1 on `B(0, 1/2)` and 0
//! outside `B(0, 1)`; in between `1 − χ(x)` is the quintic smoothstep
//! `6s⁵ − 15s⁴ + 10s³` of `s = 2|x| − 1`, which is C².

use rayon::prelude::*;

use crate::dynamics::{Dynamics, ModelSpec, ModelState};
use crate::error::{Error, Result};
use crate::potentials::{minimize_radial, DriftSpec, Schrodinger};
use crate::samplers::LevyFamily;
use crate::scalar::{dot, norm, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LyapunovKind<T> {
    /// `W = e^{εL}`, `L(x) = |x|(1 − χ(x))`.
    ExpRadial { epsilon: T },
    /// `W = |x|^k (1 − χ(x)) + 1`.
    PowerRadial { k: T },
    /// `W = exp(F − inf F)`, `F = a·H + b·v·G(x)`, `G(x) = x̂ (1 − χ(x))`.
    Kinetic { a: T, b: T, gamma: T },
    /// `W ≡ 1`.
    Unit,
}

/// A validated Lyapunov function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovSpec<T> {
    kind: LyapunovKind<T>,
}

impl<T: Real> LyapunovSpec<T> {
    pub fn new(kind: LyapunovKind<T>) -> Result<Self> {
        match kind {
            LyapunovKind::ExpRadial { epsilon } => {
                if !(epsilon > T::zero() && epsilon.is_finite()) {
                    return Err(Error::spec("exp_radial needs ε > 0"));
                }
            }
            LyapunovKind::PowerRadial { k } => {
                if !(k > T::lit(2.0) && k.is_finite()) {
                    return Err(Error::spec("power_radial needs k > 2"));
                }
            }
            LyapunovKind::Kinetic { a, b, gamma } => {
                if !(gamma > T::zero() && a > T::zero() && b > T::zero()) {
                    return Err(Error::spec("kinetic Lyapunov function needs a, b, γ > 0"));
                }
                if !(a < T::lit(2.0) * gamma) {
                    return Err(Error::spec("kinetic Lyapunov function needs a < 2γ"));
                }
                if !(b < a * (gamma - a * T::lit(0.5))) {
                    return Err(Error::spec("kinetic Lyapunov function needs b < a(γ − a/2)"));
                }
            }
            LyapunovKind::Unit => {}
        }
        Ok(Self { kind })
    }

    pub fn exp_radial(epsilon: T) -> Result<Self> {
        Self::new(LyapunovKind::ExpRadial { epsilon })
    }

    pub fn power_radial(k: T) -> Result<Self> {
        Self::new(LyapunovKind::PowerRadial { k })
    }

    pub fn kinetic(a: T, b: T, gamma: T) -> Result<Self> {
        Self::new(LyapunovKind::Kinetic { a, b, gamma })
    }

    pub fn unit() -> Self {
        Self {
            kind: LyapunovKind::Unit,
        }
    }

    pub fn kind(&self) -> LyapunovKind<T> {
        self.kind
    }

    /// `W` at a state of `model`.
    pub fn value(&self, model: &ModelSpec<T>, state: &ModelState<T>) -> Result<T> {
        self.check_pairing(model)?;
        let r = norm(&state.x);
        Ok(match self.kind {
            LyapunovKind::ExpRadial { epsilon } => {
                let (psi, _, _) = smooth_cutoff(r);
                (epsilon * r * psi).exp()
            }
            LyapunovKind::PowerRadial { k } => {
                let (psi, _, _) = smooth_cutoff(r);
                r.powf(k) * psi + T::one()
            }
            LyapunovKind::Kinetic { a, b, .. } => {
                let vc = kinetic_potential(model)?;
                let (psi, _, _) = smooth_cutoff(r);
                let h = dot(&state.v, &state.v) * T::lit(0.5) + vc.primitive(&state.x);
                let vg = if r > T::zero() { dot(&state.v, &state.x) / r * psi } else { T::zero() };
                (a * h + b * vg - kinetic_inf_f(&vc, a, b)).exp()
            }
            LyapunovKind::Unit => T::one(),
        })
    }

    fn check_pairing(&self, model: &ModelSpec<T>) -> Result<()> {
        let ok = match (self.kind, model.dynamics()) {
            (LyapunovKind::Unit, _) => true,
            (LyapunovKind::Kinetic { gamma, .. }, Dynamics::Kinetic { gamma: g, .. }) => gamma == *g,
            (LyapunovKind::Kinetic { .. }, _) => false,
            (_, Dynamics::Overdamped { .. }) => true,
            (_, Dynamics::Levy { levy }) => matches!(levy.family(), LevyFamily::BrownianStandard),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!(
                "Lyapunov function {:?} has no closed-form generator for this model",
                self.kind
            )))
        }
    }
}

/// `1 − χ` as a function of `r = |x|`, with its first two derivatives in `r`.
pub fn smooth_cutoff<T: Real>(r: T) -> (T, T, T) {
    let half = T::lit(0.5);
    if r <= half {
        return (T::zero(), T::zero(), T::zero());
    }
    if r >= T::one() {
        return (T::one(), T::zero(), T::zero());
    }
    let s = T::lit(2.0) * r - T::one();
    let s2 = s * s;
    let s3 = s2 * s;
    let val = s3 * (T::lit(6.0) * s2 - T::lit(15.0) * s + T::lit(10.0));
    let d1 = T::lit(30.0) * s2 * (s2 - T::lit(2.0) * s + T::one());
    let d2 = T::lit(60.0) * s * (T::lit(2.0) * s2 - T::lit(3.0) * s + T::one());
    (val, T::lit(2.0) * d1, T::lit(4.0) * d2)
}

/// `(f'/f, f''/f)` for the radial profile `f(r)` of an exp/power radial `W`.
fn radial_log_derivatives<T: Real>(kind: LyapunovKind<T>, r: T) -> (T, T) {
    let (psi, dpsi, ddpsi) = smooth_cutoff(r);
    match kind {
        LyapunovKind::ExpRadial { epsilon } => {
            let l1 = psi + r * dpsi;
            let l2 = T::lit(2.0) * dpsi + r * ddpsi;
            (epsilon * l1, epsilon * l2 + epsilon * epsilon * l1 * l1)
        }
        LyapunovKind::PowerRadial { k } => {
            let rk = r.powf(k);
            let rk1 = r.powf(k - T::one());
            let rk2 = r.powf(k - T::lit(2.0));
            let w = rk * psi + T::one();
            let l1 = k * rk1 * psi + rk * dpsi;
            let l2 = k * (k - T::one()) * rk2 * psi + T::lit(2.0) * k * rk1 * dpsi + rk * ddpsi;
            (l1 / w, l2 / w)
        }
        _ => (T::zero(), T::zero()),
    }
}

/// `(b·∇W + ½ΔW)/W` for a radial `W` and drift `b` at `x ≠ 0`.
pub fn gen_ol_ratio<T: Real>(spec: &LyapunovSpec<T>, drift: &DriftSpec<T>, x: &[T]) -> Result<T> {
    let r = norm(x);
    if !(r > T::zero()) {
        return Err(Error::arg("generator ratio is undefined at the origin"));
    }
    match spec.kind {
        LyapunovKind::Unit => return Ok(T::zero()),
        LyapunovKind::Kinetic { .. } => {
            return Err(Error::arg("kinetic Lyapunov function needs the kinetic generator"))
        }
        _ => {}
    }
    let (g1, g2) = radial_log_derivatives(spec.kind, r);
    let b = drift.eval(x);
    let b_radial = dot(&b, x) / r;
    let d = T::from_usize_lossy(x.len());
    Ok(b_radial * g1 + T::lit(0.5) * (g2 + (d - T::one()) * g1 / r))
}

/// `𝓛W/W` of the kinetic Langevin generator
/// `v·∇ₓ − (∇V_c + γv)·∇ᵥ + ½Δᵥ` for the kinetic Lyapunov function.
pub fn gen_kl_ratio<T: Real>(spec: &LyapunovSpec<T>, vc: &DriftSpec<T>, x: &[T], v: &[T]) -> Result<T> {
    let LyapunovKind::Kinetic { a, b, gamma } = spec.kind else {
        return Err(Error::arg("kinetic generator needs a kinetic Lyapunov function"));
    };
    if x.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: v.len(),
        });
    }
    let r = norm(x);
    if !(r > T::zero()) {
        return Err(Error::arg("generator ratio is undefined at x = 0"));
    }
    let (psi, dpsi, _) = smooth_cutoff(r);
    let d = T::from_usize_lossy(x.len());
    let xv = dot(x, v) / r;
    let vv = dot(v, v);
    let grad_vc = vc.grad_primitive(x);
    // G = x̂ψ, ∇G = ψ(I − x̂x̂ᵀ)/r + ψ' x̂x̂ᵀ
    let v_dg_v = psi * (vv - xv * xv) / r + dpsi * xv * xv;
    let v_g = psi * xv;
    let g_dvc = psi * dot(x, &grad_vc) / r;
    let mut grad_v_sq = T::zero();
    for i in 0..x.len() {
        let c = a * v[i] + b * psi * x[i] / r;
        grad_v_sq += c * c;
    }
    let half = T::lit(0.5);
    Ok(a * d * half - a * gamma * vv + b * v_dg_v - b * gamma * v_g - b * g_dvc + half * grad_v_sq)
}

fn kinetic_potential<T: Real>(model: &ModelSpec<T>) -> Result<DriftSpec<T>> {
    match model.dynamics() {
        Dynamics::Kinetic { vc, .. } => Ok(*vc),
        _ => Err(Error::arg("model is not kinetic")),
    }
}

/// `inf F = inf_x [a V_c(x) − b²ψ(|x|)²/(2a)]` (the infimum over `v` is
/// attained at `v = −bG/a`). Every drift family is radial.
fn kinetic_inf_f<T: Real>(vc: &DriftSpec<T>, a: T, b: T) -> T {
    let f = |r: T| {
        let (psi, _, _) = smooth_cutoff(r);
        a * vc.primitive(&[r]) - b * b * psi * psi / (T::lit(2.0) * a)
    };
    let (_, m) = minimize_radial(f, T::lit(1e-6), T::lit(1e3));
    m.min(f(T::zero()))
}

/// `𝓛W/W` at a state of `model`.
pub fn generator_ratio<T: Real>(spec: &LyapunovSpec<T>, model: &ModelSpec<T>, state: &ModelState<T>) -> Result<T> {
    spec.check_pairing(model)?;
    model.check_state(state)?;
    match model.dynamics() {
        Dynamics::Overdamped { drift, .. } => gen_ol_ratio(spec, drift, &state.x),
        Dynamics::Levy { .. } => gen_ol_ratio(spec, &DriftSpec::zero(), &state.x),
        Dynamics::Kinetic { vc, .. } => gen_kl_ratio(spec, vc, &state.x, &state.v),
        Dynamics::Interacting { .. } => Ok(T::zero()),
    }
}

/// Grid and thresholds of a drift scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanConfig<T> {
    pub r_min: T,
    pub r_max: T,
    /// Log-spaced points from `r_min` to `r_max`.
    pub points: usize,
    /// Endpoint values must fall below `−threshold`.
    pub threshold: T,
    /// Central annulus excluded from the reported maximum.
    pub center: (T, T),
    /// `K₀ = {r(x) > −r0}`.
    pub r0: T,
}

impl<T: Real> Default for ScanConfig<T> {
    fn default() -> Self {
        Self {
            r_min: T::lit(1e-3),
            r_max: T::lit(1e3),
            points: 121,
            threshold: T::lit(100.0),
            center: (T::lit(0.1), T::lit(10.0)),
            r0: T::one(),
        }
    }
}

/// The state at scan coordinate `r`: `x = r e₁` for point and line-charge
/// potentials, `(x, v) = (r e₁, r e₂)` for the kinetic model, and the
/// pair `(r/2 e₁, −r/2 e₁)` for the interacting model.
pub fn scan_state<T: Real>(model: &ModelSpec<T>, r: T) -> ModelState<T> {
    let pd = model.dynamics().position_dim();
    let mut x = vec![T::zero(); pd];
    match model.dynamics() {
        Dynamics::Interacting { levy, .. } => {
            let d = levy.dim();
            x[0] = r * T::lit(0.5);
            x[d] = -r * T::lit(0.5);
            ModelState::position(x)
        }
        Dynamics::Kinetic { .. } => {
            x[0] = r;
            let mut v = vec![T::zero(); pd];
            v[1 % pd] = r;
            ModelState::phase(x, v)
        }
        _ => {
            x[0] = r;
            ModelState::position(x)
        }
    }
}

/// Scan results for one `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct PScan<T> {
    pub p: T,
    /// `r(x) = 𝓛W/W − pV` at each scan point.
    pub values: Vec<T>,
    pub max_outside_center: T,
    pub endpoint_low: T,
    pub endpoint_high: T,
    pub below_threshold: bool,
    /// Strictly decreasing over the last five points toward each end.
    pub tail_monotone: bool,
    /// Range of scan coordinates with `r(x) > −r0`, if any.
    pub k0: Option<(T, T)>,
    /// `K₀` does not touch either end of the scan.
    pub k0_compact: bool,
}

impl<T: Real> PScan<T> {
    pub fn passes(&self) -> bool {
        self.below_threshold && self.tail_monotone
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovReport<T> {
    pub coordinates: Vec<T>,
    pub ratios: Vec<T>,
    pub potentials: Vec<T>,
    pub per_p: Vec<PScan<T>>,
    /// `max (𝓛W/W − V)` over the scan.
    pub m0: T,
}

impl<T: Real> LyapunovReport<T> {
    pub fn passes(&self) -> bool {
        self.per_p.iter().all(PScan::passes)
    }
}

/// Tabulates `𝓛W/W − pV` along the model's scan curve for every `p`.
pub fn drift_scan<T: Real>(
    model: &ModelSpec<T>,
    spec: &LyapunovSpec<T>,
    p_list: &[T],
    config: &ScanConfig<T>,
) -> Result<LyapunovReport<T>> {
    spec.check_pairing(model)?;
    if !(config.r_min > T::zero() && config.r_max > config.r_min) || config.points < 10 {
        return Err(Error::arg("scan needs 0 < r_min < r_max and at least 10 points"));
    }
    if p_list.is_empty() || p_list.iter().any(|&p| !(p > T::zero())) {
        return Err(Error::arg("scan needs positive exponents p"));
    }
    let n = config.points;
    let (la, lb) = (config.r_min.ln(), config.r_max.ln());
    let coordinates: Vec<T> = (0..n)
        .map(|i| (la + (lb - la) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)).exp())
        .collect();
    let evals: Vec<Result<(T, T)>> = coordinates
        .par_iter()
        .map(|&r| {
            let s = scan_state(model, r);
            let ratio = generator_ratio(spec, model, &s)?;
            Ok((ratio, model.potential().eval(&s.x).to_extended()))
        })
        .collect();
    let mut ratios = Vec::with_capacity(n);
    let mut potentials = Vec::with_capacity(n);
    for e in evals {
        let (a, v) = e?;
        ratios.push(a);
        potentials.push(v);
    }
    let m0 = ratios
        .iter()
        .zip(&potentials)
        .map(|(&a, &v)| a - v)
        .fold(T::neg_infinity(), T::max);
    let per_p = p_list
        .iter()
        .map(|&p| {
            let values: Vec<T> = ratios.iter().zip(&potentials).map(|(&a, &v)| a - p * v).collect();
            summarize(p, &coordinates, values, config)
        })
        .collect();
    Ok(LyapunovReport {
        coordinates,
        ratios,
        potentials,
        per_p,
        m0,
    })
}

fn summarize<T: Real>(p: T, coords: &[T], values: Vec<T>, config: &ScanConfig<T>) -> PScan<T> {
    let n = values.len();
    let max_outside_center = coords
        .iter()
        .zip(&values)
        .filter(|(&r, _)| r < config.center.0 || r > config.center.1)
        .map(|(_, &v)| v)
        .fold(T::neg_infinity(), T::max);
    let (lo, hi) = (values[0], values[n - 1]);
    let below_threshold = lo < -config.threshold && hi < -config.threshold;
    let tail = 5.min(n);
    let low_ok = (0..tail - 1).all(|i| values[i] < values[i + 1]);
    let high_ok = (n - tail..n - 1).all(|i| values[i + 1] < values[i]);
    let inside: Vec<usize> = (0..n).filter(|&i| values[i] > -config.r0).collect();
    let k0 = match (inside.first(), inside.last()) {
        (Some(&a), Some(&b)) => Some((coords[a], coords[b])),
        _ => None,
    };
    let k0_compact = inside.first().is_none_or(|&a| a > 0) && inside.last().is_none_or(|&b| b < n - 1);
    PScan {
        p,
        values,
        max_outside_center,
        endpoint_low: lo,
        endpoint_high: hi,
        below_threshold,
        tail_monotone: low_ok && high_ok,
        k0,
        k0_compact,
    }
}

/// Analytic `𝓛W` against its central-difference approximation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdCheck<T> {
    pub analytic: T,
    pub finite_difference: T,
    pub abs_error: T,
    /// `abs_error / max(|analytic|, W)`.
    pub rel_error: T,
}

/// Compares `(𝓛W/W)·W` with central differences of `W` of spacing `h`.
#[allow(clippy::needless_range_loop)]
pub fn fd_generator_check<T: Real>(
    spec: &LyapunovSpec<T>,
    model: &ModelSpec<T>,
    state: &ModelState<T>,
    h: T,
) -> Result<FdCheck<T>> {
    if !(h > T::zero()) {
        return Err(Error::arg("spacing must be positive"));
    }
    let w0 = spec.value(model, state)?;
    let analytic = generator_ratio(spec, model, state)? * w0;
    let w = |s: &ModelState<T>| spec.value(model, s);
    let two_h = T::lit(2.0) * h;
    let h2 = h * h;
    let half = T::lit(0.5);
    let dim = state.x.len();
    let mut fd = T::zero();
    match model.dynamics() {
        Dynamics::Kinetic { vc, gamma, .. } => {
            let grad_vc = vc.grad_primitive(&state.x);
            for i in 0..dim {
                let mut p = state.clone();
                let mut m = state.clone();
                p.x[i] += h;
                m.x[i] -= h;
                fd += state.v[i] * (w(&p)? - w(&m)?) / two_h;
                let mut p = state.clone();
                let mut m = state.clone();
                p.v[i] += h;
                m.v[i] -= h;
                let (wp, wm) = (w(&p)?, w(&m)?);
                fd -= (grad_vc[i] + *gamma * state.v[i]) * (wp - wm) / two_h;
                fd += half * (wp - T::lit(2.0) * w0 + wm) / h2;
            }
        }
        _ => {
            let b = match model.dynamics() {
                Dynamics::Overdamped { drift, .. } => drift.eval(&state.x),
                _ => vec![T::zero(); dim],
            };
            for i in 0..dim {
                let mut p = state.clone();
                let mut m = state.clone();
                p.x[i] += h;
                m.x[i] -= h;
                let (wp, wm) = (w(&p)?, w(&m)?);
                fd += b[i] * (wp - wm) / two_h + half * (wp - T::lit(2.0) * w0 + wm) / h2;
            }
        }
    }
    let abs_error = (fd - analytic).abs();
    Ok(FdCheck {
        analytic,
        finite_difference: fd,
        abs_error,
        rel_error: abs_error / analytic.abs().max(w0),
    })
}

/// Whether `|x|` keeps a distance above `margin` from the origin and from
/// both edges of the cutoff annulus, where `W` is only C².
pub fn in_smooth_region<T: Real>(x: &[T], margin: T) -> bool {
    let r = norm(x);
    r > margin && (r - T::lit(0.5)).abs() > margin && (r - T::one()).abs() > margin
}

/// The scan's potential values for a model, exposed for reporting.
pub fn scan_potential<T: Real>(potential: &Schrodinger<T>, state: &ModelState<T>) -> T {
    potential.eval(&state.x).to_extended()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::potentials::PotentialSpec;

    fn overdamped(drift: DriftSpec<f64>, d: usize) -> ModelSpec<f64> {
        ModelSpec::new(
            Dynamics::overdamped(drift, d).unwrap(),
            Schrodinger::Point(PotentialSpec::coulomb(1.0, d).unwrap()),
            Domain::full(d),
        )
        .unwrap()
    }

    fn kinetic(vc: DriftSpec<f64>) -> ModelSpec<f64> {
        ModelSpec::new(
            Dynamics::kinetic(vc, 1.0, 2).unwrap(),
            Schrodinger::Point(PotentialSpec::coulomb(1.0, 2).unwrap()),
            Domain::full(2),
        )
        .unwrap()
    }

    #[test]
    fn cutoff_is_c2() {
        let (v, d1, d2) = smooth_cutoff(0.75f64);
        assert_eq!(v, 0.5);
        assert!(d1 > 0.0 && d2.abs() < 1e-12);
        for r in [0.5f64, 1.0] {
            let (a, a1, a2) = smooth_cutoff(r - 1e-9);
            let (b, b1, b2) = smooth_cutoff(r + 1e-9);
            assert!((a - b).abs() < 1e-7 && (a1 - b1).abs() < 1e-6 && (a2 - b2).abs() < 1e-4);
        }
    }

    #[test]
    fn exp_radial_example() {
        let spec = LyapunovSpec::exp_radial(0.1).unwrap();
        let r: f64 = gen_ol_ratio(&spec, &DriftSpec::linear(1.0).unwrap(), &[2.0, 0.0]).unwrap();
        assert!((r + 0.17).abs() < 1e-12, "{r}");
        let inner = gen_ol_ratio(&spec, &DriftSpec::linear(1.0).unwrap(), &[0.3, 0.2]).unwrap();
        assert_eq!(inner, 0.0);
        assert!(gen_ol_ratio(&spec, &DriftSpec::zero(), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn power_radial_example() {
        // ℓ = |x|⁴: b·∇ℓ = −4|x|⁶ = −256, ½Δℓ = ½·4(4+d−2)|x|² = 32, ℓ + 1 = 17
        let spec = LyapunovSpec::power_radial(4.0).unwrap();
        let drift = DriftSpec::gradient_power(1.0, 4.0).unwrap();
        let r: f64 = gen_ol_ratio(&spec, &drift, &[0.0, 2.0]).unwrap();
        assert!((r + 224.0 / 17.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn kinetic_examples() {
        let spec = LyapunovSpec::kinetic(1.0, 0.2, 1.0).unwrap();
        let quad = DriftSpec::linear(1.0).unwrap();
        let r: f64 = gen_kl_ratio(&spec, &quad, &[3.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((r - 0.42).abs() < 1e-12, "{r}");
        // v = 0, |x| ≥ 1: ad/2 − b G·∇V_c + b²/2
        let x = [1.2, -2.0];
        let g_dvc = dot(&x, &quad.grad_primitive(&x)) / norm(&x);
        let r: f64 = gen_kl_ratio(&spec, &quad, &x, &[0.0, 0.0]).unwrap();
        assert!((r - (1.0 - 0.2 * g_dvc + 0.02)).abs() < 1e-12);
        assert!(LyapunovSpec::kinetic(2.5, 0.1, 1.0).is_err());
        assert!(LyapunovSpec::kinetic(1.0, 0.6, 1.0).is_err());
    }

    #[test]
    fn kinetic_ratio_is_rotation_invariant() {
        let spec = LyapunovSpec::kinetic(1.0, 0.2, 1.0).unwrap();
        let vc = DriftSpec::gradient_power(1.0, 4.0).unwrap();
        let (x, v) = ([0.7, 0.4], [-1.1, 0.3]);
        let rot = |p: [f64; 2], t: f64| [p[0] * t.cos() - p[1] * t.sin(), p[0] * t.sin() + p[1] * t.cos()];
        let base = gen_kl_ratio(&spec, &vc, &x, &v).unwrap();
        for t in [0.3, 1.0, 2.5] {
            let r: f64 = gen_kl_ratio(&spec, &vc, &rot(x, t), &rot(v, t)).unwrap();
            assert!((r - base).abs() < 1e-12);
        }
    }

    #[test]
    fn fd_exp_radial_example() {
        let eps = 0.1;
        let spec = LyapunovSpec::exp_radial(eps).unwrap();
        let m = overdamped(DriftSpec::zero(), 2);
        let s = ModelState::position(vec![2.0, 0.0]);
        let c = fd_generator_check(&spec, &m, &s, 1e-4).unwrap();
        let w = (eps * 2.0f64).exp();
        assert!((c.analytic - 0.5 * (eps * eps + eps / 2.0) * w).abs() < 1e-12);
        assert!(c.rel_error < 1e-6);
    }

    #[test]
    fn fd_second_order() {
        let m = overdamped(DriftSpec::gradient_power(1.0, 4.0).unwrap(), 2);
        let s = ModelState::position(vec![0.6, 0.45]);
        for spec in [LyapunovSpec::exp_radial(0.3).unwrap(), LyapunovSpec::power_radial(3.0).unwrap()] {
            let e1 = fd_generator_check(&spec, &m, &s, 0.02).unwrap().abs_error;
            let e2 = fd_generator_check(&spec, &m, &s, 0.01).unwrap().abs_error;
            assert!((3.5..=4.5).contains(&(e1 / e2)), "{}", e1 / e2);
        }
        let k = kinetic(DriftSpec::gradient_power(1.0, 4.0).unwrap());
        let spec = LyapunovSpec::kinetic(1.0, 0.2, 1.0).unwrap();
        let s = ModelState::phase(vec![0.6, 0.45], vec![0.3, -0.5]);
        let e1 = fd_generator_check(&spec, &k, &s, 0.02).unwrap().abs_error;
        let e2 = fd_generator_check(&spec, &k, &s, 0.01).unwrap().abs_error;
        assert!((3.5..=4.5).contains(&(e1 / e2)), "{}", e1 / e2);
    }

    #[test]
    fn weights_are_at_least_one() {
        let k = kinetic(DriftSpec::gradient_power(1.0, 4.0).unwrap());
        let spec = LyapunovSpec::kinetic(1.0, 0.2, 1.0).unwrap();
        for (x, v) in [([0.9, 0.0], [-0.2, 0.0]), ([1.0, 0.0], [-0.2, 0.0]), ([0.1, 0.1], [0.0, 0.0])] {
            assert!(spec.value(&k, &ModelState::phase(x.to_vec(), v.to_vec())).unwrap() >= 1.0);
        }
    }

    #[test]
    fn unit_scan_is_minus_p_v() {
        let m = overdamped(DriftSpec::linear(1.0).unwrap(), 2);
        let rep = drift_scan(&m, &LyapunovSpec::unit(), &[2.0], &ScanConfig::default()).unwrap();
        for (v, pot) in rep.per_p[0].values.iter().zip(&rep.potentials) {
            assert_eq!(*v, -2.0 * pot);
        }
    }

    #[test]
    fn mismatched_pairings_are_rejected() {
        let m = overdamped(DriftSpec::zero(), 2);
        let spec = LyapunovSpec::kinetic(1.0, 0.2, 1.0).unwrap();
        assert!(drift_scan(&m, &spec, &[2.0], &ScanConfig::default()).is_err());
        let k = kinetic(DriftSpec::zero());
        assert!(drift_scan(&k, &LyapunovSpec::exp_radial(0.1).unwrap(), &[2.0], &ScanConfig::default()).is_err());
    }
}
