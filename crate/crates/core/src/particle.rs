//! Interacting particle approximation of the renormalized semigroup.
//!
//! Each epoch propagates every particle for `Δ` with its own stream, weights
//! it by `e^{−∫V}` (zero if killed), records the mean weight `m_k`, and
//! resamples systematically. `−log m_k / Δ` averages to the principal
//! eigenvalue, and the resampled ensemble samples the quasi-stationary law.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dynamics::{ModelSpec, ModelState, Scratch};
use crate::error::{Error, Result};
use crate::fk_engine::{run_path_unchecked, step_count, LOG_WEIGHT_FLOOR};
use crate::samplers::RngIncrements;
use crate::scalar::{norm, Real};
use crate::stats::{batch_means, linear_fit};
use crate::streams::{stream, Purpose};

/// Particle ensemble with its per-epoch traces.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble<T> {
    pub states: Vec<ModelState<T>>,
    pub epoch_index: usize,
    pub log_norm_trace: Vec<T>,
    pub ess_trace: Vec<T>,
    pub extinct: bool,
    /// Alive particles whose weight fell below `e^{-700}` relative to the
    /// best particle of their epoch, summed over epochs.
    pub underflows: usize,
}

impl<T: Real> Ensemble<T> {
    /// Checks that every state is alive for `model`.
    pub fn new(model: &ModelSpec<T>, states: Vec<ModelState<T>>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::arg("ensemble needs at least one particle"));
        }
        for s in &states {
            if !model.contains(s)? {
                return Err(Error::arg("initial state outside the domain or on the singular set"));
            }
        }
        Ok(Self {
            states,
            epoch_index: 0,
            log_norm_trace: Vec::new(),
            ess_trace: Vec::new(),
            extinct: false,
            underflows: 0,
        })
    }

    /// `n` copies of one state.
    pub fn from_point(model: &ModelSpec<T>, state: ModelState<T>, n: usize) -> Result<Self> {
        Self::new(model, vec![state; n])
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Endpoints and weights of one propagation sweep, before resampling.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSweep<T> {
    pub endpoints: Vec<ModelState<T>>,
    /// Spatial log-weights, `−∞` for killed particles.
    pub log_weights: Vec<T>,
    /// Common constant part `−offset · Δ` of every surviving log-weight.
    pub log_offset: T,
}

impl<T: Real> WeightedSweep<T> {
    /// Weights relative to the best particle and the log of that maximum.
    /// `None` if every particle was killed.
    fn relative_weights(&self) -> Option<(Vec<T>, T, usize)> {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(T::neg_infinity(), |a, b| a.max(b));
        if max == T::neg_infinity() {
            return None;
        }
        let floor = T::lit(LOG_WEIGHT_FLOOR);
        let mut under = 0;
        let w = self
            .log_weights
            .iter()
            .map(|&lw| {
                let rel = lw - max;
                if rel < floor {
                    if lw > T::neg_infinity() {
                        under += 1;
                    }
                    T::zero()
                } else {
                    rel.exp()
                }
            })
            .collect();
        Some((w, max, under))
    }
}

/// Runs every state of `states` for `Δ` (stream `(seed, purpose, epoch, i)`
/// for particle `i`) without resampling.
pub fn propagate<T: Real>(
    model: &ModelSpec<T>,
    states: &[ModelState<T>],
    delta: T,
    dt: T,
    seed: u64,
    purpose: Purpose,
    epoch: usize,
) -> Result<WeightedSweep<T>> {
    let n_steps = step_count(delta, dt)?;
    let pd = model.dynamics().position_dim();
    let results: Vec<Result<(ModelState<T>, T)>> = states
        .par_iter()
        .enumerate()
        .map_init(
            || Scratch::new(pd),
            |scratch, (i, s)| {
                let mut noise = RngIncrements(stream(seed, purpose, epoch as u64, i as u64));
                let p = run_path_unchecked(model, s.clone(), dt, n_steps, &mut noise, scratch)?;
                let lw = if p.alive {
                    p.log_weight_variable
                } else {
                    T::neg_infinity()
                };
                Ok((p.endpoint, lw))
            },
        )
        .collect();
    let mut endpoints = Vec::with_capacity(states.len());
    let mut log_weights = Vec::with_capacity(states.len());
    for r in results {
        let (s, lw) = r?;
        endpoints.push(s);
        log_weights.push(lw);
    }
    let log_offset = -model.potential().offset() * T::from_usize_lossy(n_steps) * dt;
    Ok(WeightedSweep {
        endpoints,
        log_weights,
        log_offset,
    })
}

/// Systematic resampling: one uniform `u`, thresholds `(i + u)/N` of the
/// total weight.
///
/// Each count lies between `⌊N w̄ᵢ⌋` and `⌈N w̄ᵢ⌉` for the normalized weights.
pub fn resample_systematic<T: Real, R: Rng + ?Sized>(weights: &[T], rng: &mut R) -> Result<Vec<usize>> {
    let u: f64 = rng.gen();
    resample_systematic_with(weights, T::lit(u))
}

fn resample_systematic_with<T: Real>(weights: &[T], u: T) -> Result<Vec<usize>> {
    if weights.iter().any(|&w| !(w >= T::zero()) || !w.is_finite()) {
        return Err(Error::arg("weights must be finite and nonnegative"));
    }
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::arg("all resampling weights are zero"));
    }
    let n = weights.len();
    let last_positive = weights.iter().rposition(|&w| w > T::zero()).unwrap_or(0);
    let scale = total / T::from_usize_lossy(n);
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    let mut cum = weights[0];
    for i in 0..n {
        let threshold = (T::from_usize_lossy(i) + u) * scale;
        while cum <= threshold && j < last_positive {
            j += 1;
            cum += weights[j];
        }
        out.push(j);
    }
    Ok(out)
}

/// Outcome of one epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochReport<T> {
    /// `log m_k`, `−∞` on extinction.
    pub log_m: T,
    pub ess: T,
    pub alive: usize,
}

/// One propagate–weight–resample epoch. On extinction the ensemble is
/// marked extinct and left unchanged.
pub fn smc_epoch<T: Real>(
    ensemble: &mut Ensemble<T>,
    model: &ModelSpec<T>,
    delta: T,
    dt: T,
    seed: u64,
) -> Result<EpochReport<T>> {
    if ensemble.extinct {
        return Err(Error::Extinct {
            epoch: ensemble.epoch_index,
        });
    }
    let epoch = ensemble.epoch_index;
    let sweep = propagate(model, &ensemble.states, delta, dt, seed, Purpose::Propagate, epoch)?;
    let alive = sweep.log_weights.iter().filter(|&&lw| lw > T::neg_infinity()).count();
    let Some((w, max, under)) = sweep.relative_weights() else {
        ensemble.extinct = true;
        ensemble.log_norm_trace.push(T::neg_infinity());
        ensemble.ess_trace.push(T::zero());
        ensemble.epoch_index += 1;
        return Ok(EpochReport {
            log_m: T::neg_infinity(),
            ess: T::zero(),
            alive: 0,
        });
    };
    let n = T::from_usize_lossy(w.len());
    let sum: T = w.iter().copied().sum();
    let sum_sq: T = w.iter().map(|&x| x * x).sum();
    let log_m = sweep.log_offset + max + (sum / n).ln();
    let ess = sum * sum / sum_sq;
    let mut rng = stream(seed, Purpose::Resample, epoch as u64, 0);
    let idx = resample_systematic(&w, &mut rng)?;
    let mut endpoints = sweep.endpoints;
    let new_states = idx.iter().map(|&i| endpoints[i].clone()).collect();
    endpoints.clear();
    ensemble.states = new_states;
    ensemble.log_norm_trace.push(log_m);
    ensemble.ess_trace.push(ess);
    ensemble.underflows += under;
    ensemble.epoch_index += 1;
    Ok(EpochReport { log_m, ess, alive })
}

/// `λ̂ = −mean(log m_k)/Δ` over the post-burn-in epochs, with a batch-means
/// standard error.
pub fn estimate_lambda<T: Real>(log_norm_trace: &[T], delta: T, burn_in_fraction: T) -> Result<(T, T)> {
    if !(delta > T::zero()) || !(burn_in_fraction >= T::zero() && burn_in_fraction < T::one()) {
        return Err(Error::arg("need Δ > 0 and burn-in fraction in [0, 1)"));
    }
    let burn = burn_in_count(log_norm_trace.len(), burn_in_fraction);
    let post = &log_norm_trace[burn..];
    if post.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} post-burn-in epochs, need at least 10",
            post.len()
        )));
    }
    if post.iter().any(|x| !x.is_finite()) {
        return Err(Error::InsufficientData("trace contains an extinct epoch".into()));
    }
    let (mean, se) = batch_means(post)?;
    Ok((-mean / delta, se / delta))
}

/// Number of leading epochs discarded for a burn-in fraction.
pub fn burn_in_count<T: Real>(epochs: usize, fraction: T) -> usize {
    (T::from_usize_lossy(epochs) * fraction).floor().as_f64() as usize
}

/// Which coordinates a histogram bins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HistCoords {
    /// The leading `lo.len()` position coordinates.
    Cartesian,
    /// The Euclidean norm of the position vector.
    Radial,
}

/// Weighted histogram on a box with an overflow bin.
///
/// Bins are half-open `[a, b)` per axis and stored row-major, the last axis
/// varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram<T> {
    coords: HistCoords,
    lo: Vec<T>,
    hi: Vec<T>,
    bins: usize,
    mass: Vec<T>,
    overflow: T,
}

const MAX_HIST_CELLS: usize = 1 << 24;

impl<T: Real> Histogram<T> {
    pub fn new(coords: HistCoords, lo: Vec<T>, hi: Vec<T>, bins: usize) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::spec("histogram box needs matching, nonempty bounds"));
        }
        if coords == HistCoords::Radial && lo.len() != 1 {
            return Err(Error::spec("radial histograms have one axis"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::spec("histogram box needs lo < hi on every axis"));
        }
        if coords == HistCoords::Radial && lo[0] < T::zero() {
            return Err(Error::spec("radial histogram box must start at r ≥ 0"));
        }
        let cells = (0..lo.len()).try_fold(1usize, |acc, _| acc.checked_mul(bins));
        match cells {
            Some(c) if bins > 0 && c <= MAX_HIST_CELLS => {}
            _ => return Err(Error::spec("histogram needs between 1 and 2^24 cells")),
        }
        let cells = bins.pow(lo.len() as u32);
        Ok(Self {
            coords,
            lo,
            hi,
            bins,
            mass: vec![T::zero(); cells],
            overflow: T::zero(),
        })
    }

    /// Same binning, zero mass.
    pub fn empty_like(&self) -> Self {
        let mut h = self.clone();
        h.mass.iter_mut().for_each(|m| *m = T::zero());
        h.overflow = T::zero();
        h
    }

    pub fn coords(&self) -> HistCoords {
        self.coords
    }

    pub fn lo(&self) -> &[T] {
        &self.lo
    }

    pub fn hi(&self) -> &[T] {
        &self.hi
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn axes(&self) -> usize {
        self.lo.len()
    }

    /// Bin masses (without the overflow bin).
    pub fn masses(&self) -> &[T] {
        &self.mass
    }

    pub fn overflow(&self) -> T {
        self.overflow
    }

    pub fn total_mass(&self) -> T {
        self.mass.iter().copied().sum::<T>() + self.overflow
    }

    pub fn same_binning(&self, other: &Self) -> bool {
        self.coords == other.coords && self.lo == other.lo && self.hi == other.hi && self.bins == other.bins
    }

    /// Cell of a position vector, `None` for the overflow bin.
    pub fn bin_index(&self, x: &[T]) -> Option<usize> {
        let nb = T::from_usize_lossy(self.bins);
        let mut idx = 0usize;
        for a in 0..self.axes() {
            let v = match self.coords {
                HistCoords::Cartesian => *x.get(a)?,
                HistCoords::Radial => norm(x),
            };
            if !(v >= self.lo[a] && v < self.hi[a]) {
                return None;
            }
            let k = ((v - self.lo[a]) / (self.hi[a] - self.lo[a]) * nb).floor().as_f64() as usize;
            idx = idx * self.bins + k.min(self.bins - 1);
        }
        Some(idx)
    }

    pub fn add(&mut self, x: &[T], weight: T) {
        match self.bin_index(x) {
            Some(i) => self.mass[i] += weight,
            None => self.overflow += weight,
        }
    }

    /// Adds every state's position with unit weight.
    pub fn add_states(&mut self, states: &[ModelState<T>]) {
        for s in states {
            self.add(&s.x, T::one());
        }
    }

    /// Rescaled to total mass one (overflow included).
    pub fn normalized(&self) -> Result<Self> {
        let total = self.total_mass();
        if !(total > T::zero()) {
            return Err(Error::InsufficientData("histogram has no mass".into()));
        }
        let mut h = self.clone();
        h.mass.iter_mut().for_each(|m| *m /= total);
        h.overflow /= total;
        Ok(h)
    }

    /// Lower and upper corner of cell `i`.
    pub fn cell_bounds(&self, i: usize) -> (Vec<T>, Vec<T>) {
        let mut rest = i;
        let mut k = vec![0; self.axes()];
        for a in (0..self.axes()).rev() {
            k[a] = rest % self.bins;
            rest /= self.bins;
        }
        let nb = T::from_usize_lossy(self.bins);
        let lo = (0..self.axes())
            .map(|a| self.lo[a] + (self.hi[a] - self.lo[a]) * T::from_usize_lossy(k[a]) / nb)
            .collect();
        let hi = (0..self.axes())
            .map(|a| self.lo[a] + (self.hi[a] - self.lo[a]) * T::from_usize_lossy(k[a] + 1) / nb)
            .collect();
        (lo, hi)
    }

    pub fn cell_center(&self, i: usize) -> Vec<T> {
        let (a, b) = self.cell_bounds(i);
        a.iter().zip(&b).map(|(&x, &y)| (x + y) * T::lit(0.5)).collect()
    }
}

/// `½ Σ |p_b − q_b|` of the normalized histograms, overflow bin included.
pub fn tv_distance<T: Real>(a: &Histogram<T>, b: &Histogram<T>) -> Result<T> {
    if !a.same_binning(b) {
        return Err(Error::arg("histograms have different binning"));
    }
    let (a, b) = (a.normalized()?, b.normalized()?);
    let s: T = a.mass.iter().zip(&b.mass).map(|(&x, &y)| (x - y).abs()).sum();
    Ok(((s + (a.overflow - b.overflow).abs()) * T::lit(0.5)).min(T::one()))
}

/// Normalized histogram of the current ensemble positions.
pub fn qsd_histogram<T: Real>(ensemble: &Ensemble<T>, binning: &Histogram<T>) -> Result<Histogram<T>> {
    let mut h = binning.empty_like();
    h.add_states(&ensemble.states);
    h.normalized()
}

/// Run length and burn-in for [`run_smc`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmcConfig<T> {
    pub delta: T,
    pub dt: T,
    pub epochs: usize,
    pub burn_in_fraction: T,
}

/// Result of a full particle run.
#[derive(Clone, Debug, PartialEq)]
pub struct SmcRun<T> {
    pub ensemble: Ensemble<T>,
    /// `(λ̂, se)`, absent on extinction.
    pub lambda: Option<(T, T)>,
    /// Positions of the resampled ensembles of every post-burn-in epoch.
    pub qsd: Option<Histogram<T>>,
}

/// Runs `config.epochs` epochs; stops early on extinction.
pub fn run_smc<T: Real>(
    model: &ModelSpec<T>,
    mut ensemble: Ensemble<T>,
    config: &SmcConfig<T>,
    seed: u64,
    binning: Option<&Histogram<T>>,
) -> Result<SmcRun<T>> {
    step_count(config.delta, config.dt)?;
    let burn = burn_in_count(config.epochs, config.burn_in_fraction);
    let mut acc = binning.map(|b| b.empty_like());
    for k in 0..config.epochs {
        smc_epoch(&mut ensemble, model, config.delta, config.dt, seed)?;
        if ensemble.extinct {
            return Ok(SmcRun {
                ensemble,
                lambda: None,
                qsd: None,
            });
        }
        if k >= burn {
            if let Some(h) = acc.as_mut() {
                h.add_states(&ensemble.states);
            }
        }
    }
    let lambda = Some(estimate_lambda(
        &ensemble.log_norm_trace,
        config.delta,
        config.burn_in_fraction,
    )?);
    let qsd = match acc {
        Some(h) => Some(h.normalized()?),
        None => None,
    };
    Ok(SmcRun { ensemble, lambda, qsd })
}

/// Draws `n` states from a normalized histogram: a cell by mass, then a
/// point uniformly within it (uniform in volume for radial shells, with a
/// uniform direction). Points outside the domain are redrawn. Overflow
/// mass is ignored. Kinetic models are rejected since velocities are not
/// binned.
pub fn sample_from_histogram<T: Real>(
    hist: &Histogram<T>,
    model: &ModelSpec<T>,
    n: usize,
    seed: u64,
) -> Result<Vec<ModelState<T>>> {
    if model.dynamics().is_kinetic() {
        return Err(Error::arg("cannot sample kinetic states from a position histogram"));
    }
    let dim = model.dynamics().position_dim();
    if hist.coords == HistCoords::Cartesian && hist.axes() != dim {
        return Err(Error::arg("cartesian histogram must bin every position coordinate"));
    }
    let cdf: Vec<f64> = hist
        .mass
        .iter()
        .scan(0.0, |acc, m| {
            *acc += m.as_f64();
            Some(*acc)
        })
        .collect();
    let total = *cdf.last().unwrap_or(&0.0);
    if !(total > 0.0) {
        return Err(Error::InsufficientData("histogram has no in-box mass".into()));
    }
    const MAX_TRIES: usize = 10_000;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, Purpose::Initialize, 0, i as u64);
            for _ in 0..MAX_TRIES {
                let target = rng.gen::<f64>() * total;
                let cell = cdf.partition_point(|&c| c <= target).min(cdf.len() - 1);
                let (lo, hi) = hist.cell_bounds(cell);
                let x: Vec<T> = match hist.coords {
                    HistCoords::Cartesian => lo
                        .iter()
                        .zip(&hi)
                        .map(|(&a, &b)| a + (b - a) * T::lit(rng.gen::<f64>()))
                        .collect(),
                    HistCoords::Radial => {
                        let d = dim as f64;
                        let (a, b) = (lo[0].as_f64().powf(d), hi[0].as_f64().powf(d));
                        let r = (a + (b - a) * rng.gen::<f64>()).powf(1.0 / d);
                        let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                        let len = dir.iter().map(|z| z * z).sum::<f64>().sqrt();
                        dir.iter().map(|z| T::lit(r * z / len)).collect()
                    }
                };
                let s = ModelState::position(x);
                if model.contains_unchecked(&s) {
                    return Ok(s);
                }
            }
            Err(Error::InsufficientData(
                "histogram mass lies outside the domain".into(),
            ))
        })
        .collect()
}

/// Weighted histogram of a sweep's alive endpoints.
fn sweep_histogram<T: Real>(sweep: &WeightedSweep<T>, binning: &Histogram<T>) -> Option<Histogram<T>> {
    let (w, _, _) = sweep.relative_weights()?;
    let mut h = binning.empty_like();
    for (s, &wi) in sweep.endpoints.iter().zip(&w) {
        if wi > T::zero() {
            h.add(&s.x, wi);
        }
    }
    Some(h)
}

/// Samples `n` particles from `rho`, evolves them for one epoch with
/// killing and reweighting, and returns the TV distance of the resulting
/// normalized law to `rho`.
pub fn quasi_stationarity_check<T: Real>(
    rho: &Histogram<T>,
    model: &ModelSpec<T>,
    n: usize,
    delta: T,
    dt: T,
    seed: u64,
) -> Result<T> {
    let states = sample_from_histogram(rho, model, n, seed)?;
    let sweep = propagate(model, &states, delta, dt, seed, Purpose::Check, 0)?;
    let h = sweep_histogram(&sweep, rho).ok_or(Error::Extinct { epoch: 0 })?;
    tv_distance(&h, rho)
}

/// Per-epoch TV distances between the evolved law and a reference.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTrace<T> {
    /// `(t, tv)` after each epoch, `t = Δ, 2Δ, …`.
    pub points: Vec<(T, T)>,
    /// The run went extinct; `points` stops at the last alive epoch.
    pub extinct: bool,
}

/// Evolves the normalized law of `initial` for `epochs` epochs of `Δ`,
/// recording after each the TV distance of the weighted (pre-resampling)
/// ensemble to `reference`.
pub fn convergence_trace<T: Real>(
    model: &ModelSpec<T>,
    initial: Ensemble<T>,
    reference: &Histogram<T>,
    delta: T,
    dt: T,
    epochs: usize,
    seed: u64,
) -> Result<ConvergenceTrace<T>> {
    let mut points = Vec::with_capacity(epochs);
    let mut states = initial.states;
    for k in 0..epochs {
        let sweep = propagate(model, &states, delta, dt, seed, Purpose::Propagate, k)?;
        let Some((w, _, _)) = sweep.relative_weights() else {
            return Ok(ConvergenceTrace { points, extinct: true });
        };
        let mut h = reference.empty_like();
        for (s, &wi) in sweep.endpoints.iter().zip(&w) {
            h.add(&s.x, wi);
        }
        points.push((T::from_usize_lossy(k + 1) * delta, tv_distance(&h, reference)?));
        let mut rng = stream(seed, Purpose::Resample, k as u64, 0);
        let idx = resample_systematic(&w, &mut rng)?;
        states = idx.iter().map(|&i| sweep.endpoints[i].clone()).collect();
    }
    Ok(ConvergenceTrace {
        points,
        extinct: false,
    })
}

/// Noise floor of a trace started from the reference law itself: mean plus
/// three standard deviations of its TV values.
pub fn noise_floor<T: Real>(control: &ConvergenceTrace<T>) -> Result<T> {
    let tv: Vec<T> = control.points.iter().map(|p| p.1).collect();
    if tv.len() < 2 {
        return Err(Error::InsufficientData("control trace needs two or more points".into()));
    }
    Ok(crate::stats::mean(&tv) + T::lit(3.0) * crate::stats::variance(&tv).sqrt())
}

/// Least-squares slope and `r²` of `log tv` against `t`, over the leading
/// run of points with `tv > floor` (the trace is cut at the first point that
/// reaches the floor).
pub fn fit_decay_rate<T: Real>(points: &[(T, T)], floor: T) -> Result<(T, T)> {
    let window: Vec<(f64, f64)> = points
        .iter()
        .take_while(|(_, tv)| *tv > floor)
        .map(|&(t, tv)| (t.as_f64(), tv.as_f64().ln()))
        .collect();
    if window.len() < 6 {
        return Err(Error::InsufficientData(format!(
            "{} points above the floor, need at least 6",
            window.len()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = window.into_iter().unzip();
    let (slope, _, r2) = linear_fit(&xs, &ys)?;
    Ok((T::lit(slope), T::lit(r2)))
}
