//! Killed, exponentially weighted trajectories and Monte Carlo estimates of
//! the sub-Markov semigroup `Q_t f(x) = E_x[f(X_t) e^{−∫₀ᵗ V(X_s) ds} 1{t < σ}]`.
//!
//! Log-weights are accumulated with the trapezoidal rule on step endpoints.
//! The constant part of the potential is integrated separately as
//! `offset · t`, so a potential shift `V ↦ V + c` leaves the spatial part of
//! every log-weight untouched.

use rayon::prelude::*;

use crate::dynamics::{ModelSpec, ModelState, Scratch};
use crate::error::{Error, Result};
use crate::potentials::Energy;
use crate::samplers::{IncrementSource, RngIncrements};
use crate::scalar::Real;
use crate::streams::{stream, Purpose};

/// Weights below `e^{-700}` are treated as exact zeros.
pub const LOG_WEIGHT_FLOOR: f64 = -700.0;

/// Outcome of one killed, weighted path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathResult<T> {
    pub endpoint: ModelState<T>,
    /// Survived every step (`t < σ`).
    pub alive: bool,
    /// `−∫ V ds`, `−∞` if the singular sentinel was met.
    pub log_weight: T,
    /// `−∫ (V − offset) ds`, the spatially varying part of `log_weight`.
    pub log_weight_variable: T,
    /// First step whose state left the domain.
    pub exit_step: Option<usize>,
    pub min_singularity_distance: T,
    /// Steps with `|b|·dt` above the stiffness threshold.
    pub stiff_steps: usize,
}

/// Runs `n_steps` steps of `dt` from `start`, killing on exit and weighting
/// by the potential.
pub fn run_killed_weighted_path<T: Real, N: IncrementSource<T>>(
    model: &ModelSpec<T>,
    start: ModelState<T>,
    dt: T,
    n_steps: usize,
    noise: &mut N,
) -> Result<PathResult<T>> {
    if !(dt > T::zero()) {
        return Err(Error::arg("time step must be positive"));
    }
    model.check_state(&start)?;
    if !model.contains_unchecked(&start) {
        return Err(Error::arg("start state is outside the domain or on the singular set"));
    }
    let mut scratch = Scratch::new(model.dynamics().position_dim());
    run_path_unchecked(model, start, dt, n_steps, noise, &mut scratch)
}

pub(crate) fn run_path_unchecked<T: Real, N: IncrementSource<T>>(
    model: &ModelSpec<T>,
    mut state: ModelState<T>,
    dt: T,
    n_steps: usize,
    noise: &mut N,
    scratch: &mut Scratch<T>,
) -> Result<PathResult<T>> {
    let potential = model.potential();
    let half_dt = dt * T::lit(0.5);
    let mut v_prev = potential.eval_variable(&state.x);
    let mut min_dist = model.singularity_distance(&state);
    let mut lwv = T::zero();
    let mut alive = true;
    let mut exit_step = None;
    let mut stiff_steps = 0;
    let mut steps_done = 0usize;
    for k in 1..=n_steps {
        if model.advance(&mut state, dt, noise, scratch)? {
            stiff_steps += 1;
        }
        min_dist = min_dist.min(model.singularity_distance(&state));
        if !model.contains_unchecked(&state) {
            alive = false;
            exit_step = Some(k);
            break;
        }
        steps_done = k;
        let v_new = potential.eval_variable(&state.x);
        match (v_prev, v_new) {
            (Energy::Finite(a), Energy::Finite(b)) => lwv -= half_dt * (a + b),
            _ => lwv = T::neg_infinity(),
        }
        v_prev = v_new;
    }
    let elapsed = T::from_usize_lossy(steps_done) * dt;
    let log_weight = lwv - potential.offset() * elapsed;
    Ok(PathResult {
        endpoint: state,
        alive,
        log_weight,
        log_weight_variable: lwv,
        exit_step,
        min_singularity_distance: min_dist,
        stiff_steps,
    })
}

/// Number of steps of size `dt` in `t`, rejecting non-integral ratios.
pub fn step_count<T: Real>(t: T, dt: T) -> Result<usize> {
    if !(dt > T::zero() && t >= T::zero()) {
        return Err(Error::arg("need t ≥ 0 and dt > 0"));
    }
    let ratio = (t / dt).as_f64();
    let n = ratio.round();
    if (ratio - n).abs() > 1e-6 * n.max(1.0) {
        return Err(Error::arg(format!("t/dt = {ratio} is not an integer")));
    }
    Ok(n as usize)
}

/// Monte Carlo estimate of `Q_t f(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QtEstimate<T> {
    pub mean: T,
    pub standard_error: T,
    /// Surviving paths whose weight underflowed below `e^{-700}`.
    pub underflows: usize,
    /// All paths were killed or carried zero weight.
    pub zero_mass: bool,
}

/// Runs `n_paths` independent paths from `x` (stream `j` for path `j`) and
/// returns the per-path values `f(X_t) e^{log w} 1{alive}`, in path order.
pub fn path_values<T: Real, F>(
    model: &ModelSpec<T>,
    x: &ModelState<T>,
    f: &F,
    t: T,
    dt: T,
    n_paths: usize,
    seed: u64,
) -> Result<(Vec<T>, usize)>
where
    F: Fn(&ModelState<T>) -> T + Sync,
{
    let n_steps = step_count(t, dt)?;
    model.check_state(x)?;
    if !model.contains_unchecked(x) {
        return Err(Error::arg("start state is outside the domain"));
    }
    let results: Vec<Result<(T, bool)>> = (0..n_paths)
        .into_par_iter()
        .map(|j| {
            let mut noise = RngIncrements(stream(seed, Purpose::Path, 0, j as u64));
            let mut scratch = Scratch::new(model.dynamics().position_dim());
            let path = run_path_unchecked(model, x.clone(), dt, n_steps, &mut noise, &mut scratch)?;
            if !path.alive {
                return Ok((T::zero(), false));
            }
            if path.log_weight < T::lit(LOG_WEIGHT_FLOOR) {
                return Ok((T::zero(), path.log_weight > T::neg_infinity()));
            }
            Ok((f(&path.endpoint) * path.log_weight.exp(), false))
        })
        .collect();
    let mut values = Vec::with_capacity(n_paths);
    let mut underflows = 0;
    for r in results {
        let (v, under) = r?;
        values.push(v);
        underflows += under as usize;
    }
    Ok((values, underflows))
}

/// Estimates `Q_t f(x)` with its standard error. Killed paths contribute 0.
pub fn estimate_qt_f<T: Real, F>(
    model: &ModelSpec<T>,
    x: &ModelState<T>,
    f: &F,
    t: T,
    dt: T,
    n_paths: usize,
    seed: u64,
) -> Result<QtEstimate<T>>
where
    F: Fn(&ModelState<T>) -> T + Sync,
{
    if n_paths < 2 {
        return Err(Error::arg("need at least two paths"));
    }
    let (values, underflows) = path_values(model, x, f, t, dt, n_paths, seed)?;
    let n = T::from_usize_lossy(n_paths);
    let mean = values.iter().copied().fold(T::zero(), |a, v| a + v) / n;
    let all_equal = values.iter().all(|&v| v == values[0]);
    let standard_error = if all_equal {
        T::zero()
    } else {
        let ss = values
            .iter()
            .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean));
        (ss / (n - T::one()) / n).sqrt()
    };
    Ok(QtEstimate {
        mean,
        standard_error,
        underflows,
        zero_mass: values.iter().all(|&v| v == T::zero()),
    })
}

/// Eigenfunction estimate on a grid of start states.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenfunctionEstimate<T> {
    pub values: Vec<T>,
    pub standard_errors: Vec<T>,
    /// Factor the raw `e^{λT} Q_T 1` values were divided by.
    pub normalization: T,
}

/// `φ̂(x) = e^{λ̂T} Q_T 1(x)` on each grid state.
///
/// When `weights` is given (the q.s.d. mass attached to each grid state),
/// the result is rescaled so that the weighted average of `φ̂` is 1.
#[allow(clippy::too_many_arguments)]
pub fn estimate_eigenfunction<T: Real>(
    model: &ModelSpec<T>,
    grid: &[ModelState<T>],
    lambda_hat: T,
    horizon: T,
    dt: T,
    n_paths: usize,
    seed: u64,
    weights: Option<&[T]>,
) -> Result<EigenfunctionEstimate<T>> {
    let scale = (lambda_hat * horizon).exp();
    let mut values = Vec::with_capacity(grid.len());
    let mut ses = Vec::with_capacity(grid.len());
    for (i, x) in grid.iter().enumerate() {
        // one seed per grid state keeps the estimates independent
        let est = estimate_qt_f(model, x, &|_| T::one(), horizon, dt, n_paths, seed ^ ((i as u64 + 1) << 40))?;
        values.push(est.mean * scale);
        ses.push(est.standard_error * scale);
    }
    if values.iter().all(|&v| v == T::zero()) {
        return Err(Error::InsufficientData(
            "every eigenfunction estimate is zero; shorten the horizon or add paths".into(),
        ));
    }
    let normalization = match weights {
        Some(w) => {
            if w.len() != grid.len() {
                return Err(Error::DimensionMismatch {
                    expected: grid.len(),
                    got: w.len(),
                });
            }
            let total: T = w.iter().copied().sum();
            let avg: T = values.iter().zip(w).map(|(&v, &wi)| v * wi).sum::<T>() / total;
            if !(avg > T::zero()) {
                return Err(Error::InsufficientData("weighted eigenfunction mass is zero".into()));
            }
            avg
        }
        None => T::one(),
    };
    Ok(EigenfunctionEstimate {
        values: values.into_iter().map(|v| v / normalization).collect(),
        standard_errors: ses.into_iter().map(|s| s / normalization).collect(),
        normalization,
    })
}
