//! Element-level transmit synthesis, reception, mode decomposition and
//! zero-forcing detection.
//!
//! Each transmit UCA feeds its `U` elements with a phase ramp per mode
//! (an inverse DFT across elements). A receive UCA undoes it by correlating
//! its `V` element samples against each mode's ramp, after which every mode
//! is an ordinary `M x N` MIMO channel `y_l = H_l s_l + w_l` that ZF solves.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{CMatrix, ModeChannel};
use crate::config::OemConfig;
use crate::error::{Error, Result};
use crate::power::SnrGrid;
use crate::rng::substream;

/// Symbols per (transmit UCA, mode): an `N x U` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSymbols {
    pub values: CMatrix,
}

/// Samples per (receive UCA, element): an `M x V` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementObservation {
    pub values: CMatrix,
}

/// Per-mode received signal: an `M x U` matrix plus the per-mode noise
/// variance `V sigma^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedSignal {
    pub values: CMatrix,
    pub noise_var_per_mode: f64,
}

/// ZF output: `N x U` symbol estimates and, when the noise variance is
/// positive, the per-stream SNR weights `gamma[i, l]`.
#[derive(Debug, Clone)]
pub struct Detection {
    pub estimates: CMatrix,
    pub snr: Option<SnrGrid>,
}

fn ramp(index: usize, mode: usize, size: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (index * mode % size) as f64 / size as f64)
}

fn check_shape(what: &str, got: (usize, usize), want: (usize, usize)) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{what} is {got:?}, expected {want:?}")));
    }
    Ok(())
}

/// `x[n, u] = U^(-1/2) sum_l s[n, l] exp(j 2 pi u l / U)`.
pub fn synthesize_elements(symbols: &ModeSymbols, cfg: &OemConfig) -> Result<CMatrix> {
    let (n_tx, u) = (cfg.n_tx, cfg.u_elems);
    check_shape("symbol matrix", symbols.values.shape(), (n_tx, u))?;
    let scale = 1.0 / (u as f64).sqrt();
    Ok(CMatrix::from_fn(n_tx, u, |n, e| {
        (0..u).map(|l| symbols.values[(n, l)] * ramp(e, l, u)).sum::<Complex64>() * scale
    }))
}

/// Adjoint of [`synthesize_elements`]: recovers mode symbols from element
/// feeds.
pub fn analyze_elements(feeds: &CMatrix, cfg: &OemConfig) -> Result<ModeSymbols> {
    let (n_tx, u) = (cfg.n_tx, cfg.u_elems);
    check_shape("element feed matrix", feeds.shape(), (n_tx, u))?;
    let scale = 1.0 / (u as f64).sqrt();
    let values = CMatrix::from_fn(n_tx, u, |n, l| {
        (0..u).map(|e| feeds[(n, e)] * ramp(e, l, u).conj()).sum::<Complex64>() * scale
    });
    Ok(ModeSymbols { values })
}

fn check_channels(channels: &[ModeChannel], cfg: &OemConfig) -> Result<()> {
    if channels.len() != cfg.u_elems {
        return Err(Error::Dimension(format!(
            "{} mode channels supplied, expected {}",
            channels.len(),
            cfg.u_elems
        )));
    }
    for (l, ch) in channels.iter().enumerate() {
        if ch.mode != l {
            return Err(Error::Dimension(format!("channel {l} is labelled mode {}", ch.mode)));
        }
        check_shape("channel matrix", ch.matrix.shape(), (cfg.m_rx, cfg.n_tx))?;
    }
    Ok(())
}

/// Element samples at every receive UCA:
/// `y[m, v] = sum_l sum_n h[m, n, l] s[n, l] exp(j 2 pi v l / V) + w[m, v]`,
/// where `h = H_l / V` and `w` is circularly-symmetric complex Gaussian with
/// variance `cfg.noise_var`, drawn from `noise_seed`.
pub fn propagate(
    symbols: &ModeSymbols,
    channels: &[ModeChannel],
    cfg: &OemConfig,
    noise_seed: u64,
) -> Result<ElementObservation> {
    check_shape("symbol matrix", symbols.values.shape(), (cfg.n_tx, cfg.u_elems))?;
    check_channels(channels, cfg)?;
    let (m_rx, v_elems) = (cfg.m_rx, cfg.v_elems);
    let v_scale = v_elems as f64;

    // Per-mode superposition at each receive UCA center: sum_n h s.
    let at_center: Vec<Vec<Complex64>> = channels
        .iter()
        .map(|ch| {
            let s_l = symbols.values.column(ch.mode);
            (0..m_rx)
                .map(|m| (0..cfg.n_tx).map(|n| ch.matrix[(m, n)] * s_l[n]).sum::<Complex64>() / v_scale)
                .collect()
        })
        .collect();

    let mut values = CMatrix::from_fn(m_rx, v_elems, |m, v| {
        at_center
            .iter()
            .enumerate()
            .map(|(l, per_m)| per_m[m] * ramp(v, l, v_elems))
            .sum::<Complex64>()
    });

    if cfg.noise_var > 0.0 {
        let mut rng = substream(noise_seed, 0);
        let sd = (cfg.noise_var / 2.0).sqrt();
        for m in 0..m_rx {
            for v in 0..v_elems {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                values[(m, v)] += Complex64::new(sd * re, sd * im);
            }
        }
    }
    Ok(ElementObservation { values })
}

/// `y~[m, l] = sum_v y[m, v] exp(-j 2 pi v l / V)` for `l = 0..U`.
///
/// Requires `V >= U`: otherwise two modes differ by a multiple of `V` and
/// cannot be separated.
pub fn decompose_modes(obs: &ElementObservation, cfg: &OemConfig) -> Result<DecomposedSignal> {
    if cfg.v_elems < cfg.u_elems {
        return Err(Error::AliasRisk { u: cfg.u_elems, v: cfg.v_elems });
    }
    check_shape("observation", obs.values.shape(), (cfg.m_rx, cfg.v_elems))?;
    let v_elems = cfg.v_elems;
    let values = CMatrix::from_fn(cfg.m_rx, cfg.u_elems, |m, l| {
        (0..v_elems).map(|v| obs.values[(m, v)] * ramp(v, l, v_elems).conj()).sum()
    });
    Ok(DecomposedSignal { values, noise_var_per_mode: v_elems as f64 * cfg.noise_var })
}

/// Smallest-to-largest singular value ratio below which a mode's channel
/// is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Zero-forcing detection per mode: `s^_l = (H_l^H H_l)^-1 H_l^H y_l`, with
/// per-stream SNR weight `gamma[i, l] = 1 / (sigma_l^2 [(H_l^H H_l)^-1]_ii)`
/// so that a stream sent with power `P` sees SNR `P gamma[i, l]`.
pub fn zf_detect(decomposed: &DecomposedSignal, channels: &[ModeChannel]) -> Result<Detection> {
    let modes = channels.len();
    let m_rx = decomposed.values.nrows();
    if decomposed.values.ncols() != modes {
        return Err(Error::Dimension(format!(
            "decomposed signal has {} modes, {} channels supplied",
            decomposed.values.ncols(),
            modes
        )));
    }
    let n_tx = channels.first().map_or(0, |c| c.matrix.ncols());
    if n_tx > m_rx {
        return Err(Error::Dimension(format!("ZF needs M >= N (M = {m_rx}, N = {n_tx})")));
    }

    let mut estimates = CMatrix::zeros(n_tx, modes);
    let mut inv_diag = DMatrix::<f64>::zeros(n_tx, modes);
    for (l, ch) in channels.iter().enumerate() {
        let h = &ch.matrix;
        check_shape("channel matrix", h.shape(), (m_rx, n_tx))?;
        let sv = h.singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        if !(smax > 0.0) || smin < RANK_TOLERANCE * smax {
            let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
            return Err(Error::RankDeficient { mode: l, ratio });
        }
        let hh = h.adjoint();
        let gram_inv = (&hh * h)
            .try_inverse()
            .ok_or(Error::RankDeficient { mode: l, ratio: smin / smax })?;
        let y = decomposed.values.column(l);
        let s_hat = &gram_inv * (&hh * y);
        estimates.set_column(l, &s_hat);
        for i in 0..n_tx {
            inv_diag[(i, l)] = gram_inv[(i, i)].re;
        }
    }

    let sigma2 = decomposed.noise_var_per_mode;
    let snr = if sigma2 > 0.0 {
        let values = inv_diag.map(|g| 1.0 / (sigma2 * g));
        Some(SnrGrid::from_matrix(values)?)
    } else {
        None
    };
    Ok(Detection { estimates, snr })
}
