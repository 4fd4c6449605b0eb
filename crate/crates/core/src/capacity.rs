//! Spectrum efficiency of OEM links and of the plain massive-MIMO baseline.
//!
//! Fading is modeled directly on the per-channel SNR weights: each
//! (stream, mode) channel draws an exponential `gamma` (Rayleigh amplitude)
//! with mean `gamma0 * g_l`, where `gamma0` is the baseline average SNR and
//! `g_l` the relative gain of mode `l`. The ergodic water-filling rule is
//! calibrated on the same realizations it is then evaluated on.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j;
use crate::channel::{mode_gain, ChannelModelKind};
use crate::config::OemConfig;
use crate::error::{Error, Result};
use crate::geometry::build_layout;
use crate::power::{draw_realization, waterfill_ergodic, ErgodicPolicy, PowerPolicy, SnrGrid, MIN_SAMPLES};
use crate::rng::substream;

/// How the power budget relates to the number of channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Budget is `total_power` per orthogonal channel, so the average SNR
    /// per channel stays fixed as channels are added.
    #[default]
    PerChannel,
    /// Budget is `total_power`, shared by all channels.
    Total,
}

impl Normalization {
    pub fn budget(self, total_power: f64, channels: usize) -> f64 {
        match self {
            Self::PerChannel => total_power * channels as f64,
            Self::Total => total_power,
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-channel" => Ok(Self::PerChannel),
            "total" => Ok(Self::Total),
            other => Err(Error::InvalidArgument(format!("unknown normalization {other:?}"))),
        }
    }
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PerChannel => "per-channel",
            Self::Total => "total",
        })
    }
}

/// Average-SNR model for the fading simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FadingModel {
    pub mean_snr_db: f64,
    /// Relative mean SNR of each mode; `mode_profile[0] == 1`.
    pub mode_profile: Vec<f64>,
    pub normalization: Normalization,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl FadingModel {
    pub fn new(mean_snr_db: f64, mode_profile: Vec<f64>, normalization: Normalization) -> Result<Self> {
        let model = Self { mean_snr_db, mode_profile, normalization };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if !self.mean_snr_db.is_finite() {
            return Err(Error::InvalidArgument("mean SNR must be finite".into()));
        }
        match self.mode_profile.first() {
            Some(g0) if (g0 - 1.0).abs() <= 1e-12 => {}
            _ => return Err(Error::InvalidArgument("mode profile must start with g_0 = 1".into())),
        }
        if self.mode_profile.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidArgument("mode gains must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Every mode as strong as mode 0: an ideally converged link.
    pub fn equal_gain(modes: usize, mean_snr_db: f64, normalization: Normalization) -> Result<Self> {
        Self::new(mean_snr_db, vec![1.0; modes.max(1)], normalization)
    }

    /// `g_l = J_l(x)^2 / J_0(x)^2` at the divergence angle.
    pub fn non_convergent(cfg: &OemConfig, mean_snr_db: f64, normalization: Normalization) -> Result<Self> {
        let x = cfg.bessel_argument(cfg.phi);
        Self::new(mean_snr_db, bessel_profile(cfg.u_elems, x, |_| 1.0)?, normalization)
    }

    /// `g_l = (A_l J_l(x_c))^2 / (A_0 J_0(x_c))^2` at the converged angle.
    pub fn convergent(cfg: &OemConfig, mean_snr_db: f64, normalization: Normalization) -> Result<Self> {
        let x = cfg.bessel_argument(cfg.phi_c);
        Self::new(mean_snr_db, bessel_profile(cfg.u_elems, x, |l| cfg.conv_gains[l])?, normalization)
    }

    /// Relative mode gains `|h_l|^2 / |h_0|^2` of the given channel model,
    /// taken on the link between transmit UCA 0 and receive UCA 0.
    pub fn from_channel(
        cfg: &OemConfig,
        kind: ChannelModelKind,
        mean_snr_db: f64,
        normalization: Normalization,
    ) -> Result<Self> {
        let layout = build_layout(cfg)?;
        let power: Vec<f64> = (0..cfg.u_elems)
            .map(|l| mode_gain(cfg, &layout, 0, 0, l, kind).map(|h| h.norm_sqr()))
            .collect::<Result<_>>()?;
        if !(power[0] > 0.0) {
            return Err(Error::InvalidConfig("mode 0 has zero gain; cannot normalize".into()));
        }
        let profile = power.iter().map(|p| p / power[0]).collect();
        Self::new(mean_snr_db, profile, normalization)
    }

    pub fn with_mean_snr_db(&self, mean_snr_db: f64) -> Self {
        Self { mean_snr_db, ..self.clone() }
    }

    pub fn modes(&self) -> usize {
        self.mode_profile.len()
    }

    /// Mean SNR grid for `streams` parallel streams per mode.
    pub fn mean_grid(&self, streams: usize) -> Result<SnrGrid> {
        let base = db_to_linear(self.mean_snr_db);
        SnrGrid::from_fn(streams, self.modes(), |_, l| base * self.mode_profile[l])
    }
}

fn bessel_profile(modes: usize, x: f64, amplitude: impl Fn(usize) -> f64) -> Result<Vec<f64>> {
    let gains: Vec<f64> = (0..modes)
        .map(|l| {
            let order = u32::try_from(l).map_err(|_| Error::Domain { order: u32::MAX, x })?;
            Ok((amplitude(l) * bessel_j(order, x)?).powi(2))
        })
        .collect::<Result<_>>()?;
    if !(gains[0] > 0.0) {
        return Err(Error::InvalidConfig(format!("J_0({x}) vanishes; mode profile undefined")));
    }
    Ok(gains.iter().map(|g| g / gains[0]).collect())
}

/// One point of an SE-versus-SNR curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SePoint {
    pub mean_snr_db: f64,
    /// bits/s/Hz
    pub se: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeCurve {
    pub points: Vec<SePoint>,
    pub config_tag: String,
}

/// `sum over active channels of log2(1 + P gamma)`.
pub fn instantaneous_se(snr: &SnrGrid, policy: &PowerPolicy) -> Result<f64> {
    if snr.streams() != policy.streams || snr.modes() != policy.modes {
        return Err(Error::Dimension(format!(
            "SNR grid {}x{} vs policy {}x{}",
            snr.streams(),
            snr.modes(),
            policy.streams,
            policy.modes
        )));
    }
    Ok(rate_sum(snr.as_slice(), &policy.allocations))
}

fn rate_sum(gamma: &[f64], power: &[f64]) -> f64 {
    gamma.iter().zip(power).map(|(&g, &p)| (p * g).ln_1p()).sum::<f64>() / std::f64::consts::LN_2
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_SAMPLES} trials, got {trials}")));
    }
    Ok(())
}

/// Per-trial SE under `rate(gamma) -> power` on the standard trial streams.
fn per_trial_se(mean: &SnrGrid, trials: usize, seed: u64, power: impl Fn(&[f64], &mut Vec<f64>) + Sync) -> Vec<f64> {
    (0..trials)
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(mean.len()), Vec::with_capacity(mean.len())),
            |(gamma, alloc), t| {
                let mut rng = substream(seed, t as u64);
                draw_realization(mean, &mut rng, gamma);
                power(gamma, alloc);
                rate_sum(gamma, alloc)
            },
        )
        .collect()
}

/// Ergodic SE of a channel set with the given mean SNRs under the ergodic
/// water-filling rule; returns the point estimate, its standard error and
/// the rule used.
pub fn ergodic_se(mean: &SnrGrid, budget: f64, trials: usize, seed: u64) -> Result<(f64, f64, ErgodicPolicy)> {
    check_trials(trials)?;
    let policy = waterfill_ergodic(mean, budget, trials, seed)?;
    let values = per_trial_se(mean, trials, seed, |gamma, alloc| {
        alloc.clear();
        alloc.extend(gamma.iter().map(|&g| policy.allocate(g)));
    });
    let (se, stderr) = mean_and_stderr(&values);
    Ok((se, stderr, policy))
}

/// Ergodic SE with the budget split evenly over all channels in every
/// realization, on the same realizations as [`ergodic_se`].
pub fn ergodic_se_uniform(mean: &SnrGrid, budget: f64, trials: usize, seed: u64) -> Result<(f64, f64)> {
    check_trials(trials)?;
    let share = budget / mean.len() as f64;
    let values = per_trial_se(mean, trials, seed, |gamma, alloc| {
        alloc.clear();
        alloc.resize(gamma.len(), share);
    });
    Ok(mean_and_stderr(&values))
}

/// Ergodic SE of an OEM link: `min(N, M)` streams on each of the `U` modes.
pub fn ergodic_se_oem(cfg: &OemConfig, fading: &FadingModel, total_power: f64, trials: usize, seed: u64) -> Result<SePoint> {
    if fading.modes() != cfg.u_elems {
        return Err(Error::Dimension(format!(
            "mode profile has {} entries, config has {} modes",
            fading.modes(),
            cfg.u_elems
        )));
    }
    let streams = cfg.n_tx.min(cfg.m_rx);
    let mean = fading.mean_grid(streams)?;
    let budget = fading.normalization.budget(total_power, mean.len());
    let (se, stderr, _) = ergodic_se(&mean, budget, trials, seed)?;
    Ok(SePoint { mean_snr_db: fading.mean_snr_db, se, stderr })
}

/// Ergodic SE of plain `N x M` massive MIMO with `min(N, M)` streams.
pub fn ergodic_se_mimo(
    n_tx: usize,
    m_rx: usize,
    mean_snr_db: f64,
    normalization: Normalization,
    total_power: f64,
    trials: usize,
    seed: u64,
) -> Result<SePoint> {
    let streams = n_tx.min(m_rx);
    if streams == 0 {
        return Err(Error::InvalidArgument("need at least one antenna on each side".into()));
    }
    let fading = FadingModel::equal_gain(1, mean_snr_db, normalization)?;
    let mean = fading.mean_grid(streams)?;
    let budget = normalization.budget(total_power, streams);
    let (se, stderr, _) = ergodic_se(&mean, budget, trials, seed)?;
    Ok(SePoint { mean_snr_db, se, stderr })
}

/// Short label for a configuration, e.g. `N=M=32, U=V=8, convergent`.
pub fn config_tag(cfg: &OemConfig, model: &str) -> String {
    let sides = if cfg.n_tx == cfg.m_rx {
        format!("N=M={}", cfg.n_tx)
    } else {
        format!("N={}, M={}", cfg.n_tx, cfg.m_rx)
    };
    let elems = if cfg.u_elems == cfg.v_elems {
        format!("U=V={}", cfg.u_elems)
    } else {
        format!("U={}, V={}", cfg.u_elems, cfg.v_elems)
    };
    format!("{sides}, {elems}, {model}")
}

/// SE-versus-SNR curves for the OEM link and the MIMO baseline with the same
/// UCA counts. Every point reuses `seed`, so the curves are smooth in SNR.
pub fn sweep(
    cfg: &OemConfig,
    fading: &FadingModel,
    snr_db: &[f64],
    total_power: f64,
    trials: usize,
    seed: u64,
) -> Result<(SeCurve, SeCurve)> {
    if snr_db.is_empty() {
        return Err(Error::InvalidArgument("SNR list is empty".into()));
    }
    check_trials(trials)?;
    let mut oem = Vec::with_capacity(snr_db.len());
    let mut mimo = Vec::with_capacity(snr_db.len());
    for &db in snr_db {
        oem.push(ergodic_se_oem(cfg, &fading.with_mean_snr_db(db), total_power, trials, seed)?);
        mimo.push(ergodic_se_mimo(cfg.n_tx, cfg.m_rx, db, fading.normalization, total_power, trials, seed)?);
    }
    let base = if cfg.n_tx == cfg.m_rx {
        format!("N=M={}", cfg.n_tx)
    } else {
        format!("N={}, M={}", cfg.n_tx, cfg.m_rx)
    };
    Ok((
        SeCurve { points: oem, config_tag: config_tag(cfg, "oem") },
        SeCurve { points: mimo, config_tag: format!("{base}, mimo") },
    ))
}
