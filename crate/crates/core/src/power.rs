//! OEM water-filling power allocation.
//!
//! Every (stream `i`, mode `l`) pair is an orthogonal channel with SNR
//! weight `gamma[i, l]`: sent with power `P` it delivers
//! `log2(1 + P gamma)` bits/s/Hz. Maximizing the sum under a power budget
//! gives `P[i, l] = max(0, w - 1 / gamma[i, l])` with a common water level
//! `w = 1 / (mu* ln 2)`, where `mu*` is the multiplier on the budget.
//!
//! * [`waterfill_instantaneous`] finds `w` for one SNR realization by
//!   iteratively shrinking the candidate set until every member gets
//!   positive power.
//! * [`waterfill_ergodic`] finds `mu*` for an expectation budget over
//!   Rayleigh fading by bisection on a sample average.
//! * [`brute_force_oracle`] enumerates active sets; it exists to check the
//!   other two.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::substream;

/// Nonnegative SNR weights, indexed by (stream `i`, mode `l`).
///
/// Storage is mode-major: all streams of mode 0, then mode 1, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrGrid {
    streams: usize,
    modes: usize,
    values: Vec<f64>,
}

impl SnrGrid {
    /// Builds a grid from mode-major values.
    pub fn new(streams: usize, modes: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != streams * modes {
            return Err(Error::Dimension(format!(
                "{} SNR values for a {streams} x {modes} grid",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::InvalidArgument(format!("SNR value {bad} is not finite and >= 0")));
        }
        Ok(Self { streams, modes, values })
    }

    pub fn from_fn(streams: usize, modes: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let values = (0..modes).flat_map(|l| (0..streams).map(move |i| (i, l))).map(|(i, l)| f(i, l)).collect();
        Self::new(streams, modes, values)
    }

    /// Rows are streams, columns are modes.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let (streams, modes) = m.shape();
        // nalgebra is column-major, which is exactly mode-major here.
        Self::new(streams, modes, m.as_slice().to_vec())
    }

    /// A single-mode grid, e.g. a list of scalar channels.
    pub fn from_channels(values: Vec<f64>) -> Result<Self> {
        Self::new(values.len(), 1, values)
    }

    pub fn streams(&self) -> usize {
        self.streams
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, stream: usize, mode: usize) -> f64 {
        self.values[self.flat_index(stream, mode)]
    }

    pub fn flat_index(&self, stream: usize, mode: usize) -> usize {
        assert!(stream < self.streams && mode < self.modes, "SNR grid index out of range");
        mode * self.streams + stream
    }

    /// (stream, mode) of a mode-major flat index.
    pub fn index_of(&self, flat: usize) -> (usize, usize) {
        (flat % self.streams, flat / self.streams)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Allocation for one SNR realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerPolicy {
    pub streams: usize,
    pub modes: usize,
    /// Mode-major, same layout as [`SnrGrid`].
    pub allocations: Vec<f64>,
    /// `1 / (mu* ln 2)`; zero in outage.
    pub water_level: f64,
    /// Infinite in outage.
    pub mu_star: f64,
    /// (stream, mode) pairs with positive power, in mode-major order.
    pub active_set: Vec<(usize, usize)>,
    pub total_power: f64,
    /// Passes of the shrinking loop (0 for the oracle and for outage).
    pub iterations: usize,
}

impl PowerPolicy {
    fn outage(snr: &SnrGrid, total_power: f64) -> Self {
        Self {
            streams: snr.streams,
            modes: snr.modes,
            allocations: vec![0.0; snr.len()],
            water_level: 0.0,
            mu_star: f64::INFINITY,
            active_set: Vec::new(),
            total_power,
            iterations: 0,
        }
    }

    fn from_active(snr: &SnrGrid, total_power: f64, active: &[usize], water_level: f64, iterations: usize) -> Self {
        let mut allocations = vec![0.0; snr.len()];
        for &k in active {
            allocations[k] = water_level - 1.0 / snr.values[k];
        }
        Self {
            streams: snr.streams,
            modes: snr.modes,
            allocations,
            water_level,
            mu_star: 1.0 / (water_level * LN_2),
            active_set: active.iter().map(|&k| snr.index_of(k)).collect(),
            total_power,
            iterations,
        }
    }

    pub fn power(&self, stream: usize, mode: usize) -> f64 {
        self.allocations[mode * self.streams + stream]
    }

    pub fn is_outage(&self) -> bool {
        self.active_set.is_empty()
    }

    /// SNR threshold `mu* ln 2` separating active from inactive channels.
    pub fn cutoff(&self) -> f64 {
        self.mu_star * LN_2
    }
}

fn check_budget(total_power: f64) -> Result<()> {
    if !(total_power > 0.0 && total_power.is_finite()) {
        return Err(Error::InvalidArgument(format!("total power must be positive (got {total_power})")));
    }
    Ok(())
}

/// Common water level that spends `total_power` on exactly `set`.
fn water_level_for(snr: &[f64], set: &[usize], total_power: f64) -> f64 {
    let inverse_sum: f64 = set.iter().map(|&k| 1.0 / snr[k]).sum();
    (total_power + inverse_sum) / set.len() as f64
}

/// Water-filling for one SNR realization.
///
/// Starts from every channel with positive SNR (a zero-SNR channel can never
/// satisfy `w - 1/gamma > 0`), solves the water level that spends the budget
/// on the current set, keeps only channels whose power would be strictly
/// positive, and repeats until the set stops changing. Each pass can only
/// lower the water level, so dropped channels stay inactive.
///
/// If every SNR is zero the result is the outage policy: all-zero powers,
/// zero water level, infinite `mu*`.
pub fn waterfill_instantaneous(snr: &SnrGrid, total_power: f64) -> Result<PowerPolicy> {
    check_budget(total_power)?;
    let gamma = snr.as_slice();
    let mut set: Vec<usize> = (0..gamma.len()).filter(|&k| gamma[k] > 0.0).collect();
    if set.is_empty() {
        return Ok(PowerPolicy::outage(snr, total_power));
    }

    let mut iterations = 0;
    loop {
        iterations += 1;
        let level = water_level_for(gamma, &set, total_power);
        let next: Vec<usize> = set.iter().copied().filter(|&k| level - 1.0 / gamma[k] > 0.0).collect();
        if next.len() == set.len() {
            return Ok(PowerPolicy::from_active(snr, total_power, &set, level, iterations));
        }
        set = next;
    }
}

/// Largest number of channels [`brute_force_oracle`] will enumerate.
pub const ORACLE_MAX_CHANNELS: usize = 6;

/// Exhaustive active-set search: for every nonempty subset, solve the
/// equal-water-level system, keep it if all its powers are positive, and
/// return the feasible candidate with the highest sum rate.
pub fn brute_force_oracle(snr: &SnrGrid, total_power: f64) -> Result<PowerPolicy> {
    check_budget(total_power)?;
    let k = snr.len();
    if k > ORACLE_MAX_CHANNELS {
        return Err(Error::TooLarge { channels: k, max: ORACLE_MAX_CHANNELS });
    }
    let gamma = snr.as_slice();
    let mut best: Option<(f64, Vec<usize>, f64)> = None;
    for mask in 1u32..(1 << k) {
        let set: Vec<usize> = (0..k).filter(|&c| mask & (1 << c) != 0).collect();
        if set.iter().any(|&c| gamma[c] <= 0.0) {
            continue;
        }
        let level = water_level_for(gamma, &set, total_power);
        if set.iter().any(|&c| level - 1.0 / gamma[c] <= 0.0) {
            continue;
        }
        let rate: f64 = set.iter().map(|&c| (level * gamma[c]).log2()).sum();
        if best.as_ref().is_none_or(|(r, _, _)| rate > *r) {
            best = Some((rate, set, level));
        }
    }
    Ok(match best {
        Some((_, set, level)) => PowerPolicy::from_active(snr, total_power, &set, level, 0),
        None => PowerPolicy::outage(snr, total_power),
    })
}

/// Water-filling rule for the expectation-constrained problem: a fixed
/// `mu*` applied to every fading realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgodicPolicy {
    pub mu_star: f64,
    pub water_level: f64,
    pub total_power: f64,
    /// Sample-average power spent minus the budget, at `mu_star`.
    pub residual: f64,
    pub samples: usize,
    pub bisection_steps: usize,
}

impl ErgodicPolicy {
    pub fn from_mu(mu_star: f64, total_power: f64) -> Self {
        Self {
            mu_star,
            water_level: 1.0 / (mu_star * LN_2),
            total_power,
            residual: 0.0,
            samples: 0,
            bisection_steps: 0,
        }
    }

    /// `max(0, 1 / (mu* ln 2) - 1 / gamma)`; zero at or below the cutoff.
    pub fn allocate(&self, gamma: f64) -> f64 {
        allocation(self.water_level, gamma)
    }

    /// SNR threshold `mu* ln 2`.
    pub fn cutoff(&self) -> f64 {
        self.mu_star * LN_2
    }

    pub fn allocate_grid(&self, snr: &SnrGrid) -> Vec<f64> {
        snr.as_slice().iter().map(|&g| self.allocate(g)).collect()
    }
}

fn allocation(water_level: f64, gamma: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    (water_level - 1.0 / gamma).max(0.0)
}

/// Fills `out` with one Rayleigh-fading realization: exponential SNRs with
/// the given means, drawn in the grid's mode-major order.
pub fn draw_realization<R: Rng + ?Sized>(mean: &SnrGrid, rng: &mut R, out: &mut Vec<f64>) {
    out.clear();
    out.extend(mean.as_slice().iter().map(|&m| {
        let e: f64 = rng.sample(Exp1);
        m * e
    }));
}

/// Realizations for trials `0..samples`, trial `t` drawn from substream `t`.
pub fn draw_realizations(mean: &SnrGrid, samples: usize, seed: u64) -> Vec<f64> {
    let k = mean.len();
    let mut all = vec![0.0; samples * k];
    all.par_chunks_mut(k.max(1)).enumerate().for_each(|(t, chunk)| {
        let mut rng = substream(seed, t as u64);
        let mut buf = Vec::with_capacity(k);
        draw_realization(mean, &mut rng, &mut buf);
        chunk.copy_from_slice(&buf);
    });
    all
}

/// Smallest sample count accepted by the Monte-Carlo routines.
pub const MIN_SAMPLES: usize = 1000;

const MAX_BISECTION_STEPS: usize = 200;

/// Sample-average power spent at water level `w`. Per-trial partial sums
/// are combined in trial order, so the value is independent of threading.
fn average_power(realizations: &[f64], channels: usize, water_level: f64) -> f64 {
    let per_trial: Vec<f64> = realizations
        .par_chunks(channels)
        .map(|trial| trial.iter().map(|&g| allocation(water_level, g)).sum())
        .collect();
    per_trial.iter().sum::<f64>() / per_trial.len() as f64
}

/// Solves for `mu*` such that the sample-average allocated power over
/// `samples` exponential-fading realizations equals `total_power`.
///
/// Bracketing starts at `mu = gamma_max / ln 2` (nothing allocated) and
/// halves `mu` until the budget is exceeded; bisection then runs until the
/// relative residual is below 1e-12 or the bracket collapses.
pub fn waterfill_ergodic(mean_snr: &SnrGrid, total_power: f64, samples: usize, seed: u64) -> Result<ErgodicPolicy> {
    check_budget(total_power)?;
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    if !mean_snr.as_slice().iter().any(|&g| g > 0.0) {
        return Err(Error::InvalidArgument("every mean SNR is zero".into()));
    }
    let channels = mean_snr.len();
    let realizations = draw_realizations(mean_snr, samples, seed);
    let gamma_max = realizations.iter().copied().fold(0.0, f64::max);
    let power_at = |mu: f64| average_power(&realizations, channels, 1.0 / (mu * LN_2));

    let mut hi = gamma_max / LN_2;
    let mut lo = hi;
    let mut spent = 0.0;
    let mut steps = 0;
    while spent < total_power {
        if steps == MAX_BISECTION_STEPS {
            return Err(Error::BisectionFailure { residual: spent - total_power });
        }
        hi = lo;
        lo *= 0.5;
        spent = power_at(lo);
        steps += 1;
    }

    let mut mu = lo;
    let mut residual = spent - total_power;
    for _ in 0..MAX_BISECTION_STEPS {
        if residual.abs() <= 1e-12 * total_power {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = power_at(mid);
        steps += 1;
        if p >= total_power {
            lo = mid;
        } else {
            hi = mid;
        }
        if (p - total_power).abs() < residual.abs() {
            mu = mid;
            residual = p - total_power;
        }
    }
    if residual.abs() > 1e-6 * total_power {
        return Err(Error::BisectionFailure { residual });
    }

    Ok(ErgodicPolicy {
        mu_star: mu,
        water_level: 1.0 / (mu * LN_2),
        total_power,
        residual,
        samples,
        bisection_steps: steps,
    })
}

/// Which of the two channels of a two-mode, single-stream system receive
/// power at a fixed `mu*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    /// Both channels active.
    R1,
    /// Only the mode-0 channel active.
    R2,
    /// Only the mode-1 channel active.
    R3,
    /// Neither: outage.
    R4,
}

/// Partition of the (gamma_{1,0}, gamma_{1,1}) plane by the lines
/// `gamma = mu* ln 2`. Panics unless `mu_star > 0` (infinity allowed).
pub fn classify_region(gamma_0: f64, gamma_1: f64, mu_star: f64) -> Region {
    assert!(mu_star > 0.0, "mu* must be positive, got {mu_star}");
    let cutoff = mu_star * LN_2;
    match (gamma_0 > cutoff, gamma_1 > cutoff) {
        (true, true) => Region::R1,
        (true, false) => Region::R2,
        (false, true) => Region::R3,
        (false, false) => Region::R4,
    }
}
