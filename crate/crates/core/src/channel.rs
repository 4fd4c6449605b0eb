//! Per-mode line-of-sight channel gains between UCAs.
//!
//! Three models of the gain seen by OAM mode `l` from transmit UCA `n` to
//! receive UCA `m`, all sharing the common factor
//! `c_mn = beta lambda exp(-j 2 pi d_mn / lambda) / (4 pi d_mn)`:
//!
//! * [`ChannelModelKind::ExactSum`]: the finite element sum
//!   `c_mn / sqrt(U) * sum_u exp(j 2 pi u l / U) exp(j x cos(2 pi u / U - theta))`
//!   with `x = 2 pi r2 sin(phi) / lambda`.
//! * [`ChannelModelKind::Bessel`]: its large-`U` limit
//!   `c_mn sqrt(U) exp(j theta l) j^l J_l(x)`.
//! * [`ChannelModelKind::Convergent`]: the Bessel form after a reflector
//!   narrows the beam, `A_l` times the Bessel form evaluated at `phi_c`.
//!
//! The `j^l` factor follows from the Jacobi-Anger expansion
//! `exp(j x cos t) = sum_k j^k J_k(x) exp(j k t)`, which makes the Bessel
//! form the exact limit of the element sum, phase included.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j;
use crate::config::OemConfig;
use crate::error::{Error, Result};
use crate::geometry::{build_layout, ElementLayout};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelModelKind {
    ExactSum,
    Bessel,
    Convergent,
}

impl std::str::FromStr for ChannelModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact-sum" => Ok(Self::ExactSum),
            "bessel" => Ok(Self::Bessel),
            "convergent" => Ok(Self::Convergent),
            other => Err(Error::InvalidArgument(format!("unknown channel model {other:?}"))),
        }
    }
}

impl std::fmt::Display for ChannelModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ExactSum => "exact-sum",
            Self::Bessel => "bessel",
            Self::Convergent => "convergent",
        })
    }
}

/// Channel matrix of one OAM mode: entry (m, n) is `V` times the gain from
/// transmit UCA `n` to receive UCA `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeChannel {
    pub mode: usize,
    pub matrix: CMatrix,
}

/// `j^l`.
fn j_pow(l: usize) -> Complex64 {
    match l % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn check_link(layout: &ElementLayout, m: usize, n: usize) -> Result<()> {
    let (n_tx, m_rx, _, _) = layout.dims();
    if m >= m_rx || n >= n_tx {
        return Err(Error::InvalidArgument(format!(
            "UCA index out of range: m = {m} (M = {m_rx}), n = {n} (N = {n_tx})"
        )));
    }
    Ok(())
}

/// Far-field gain from transmit element `u` of UCA `n` to receive element
/// `v` of UCA `m`.
pub fn element_gain(
    cfg: &OemConfig,
    layout: &ElementLayout,
    m: usize,
    n: usize,
    u: usize,
    v: usize,
) -> Result<Complex64> {
    check_link(layout, m, n)?;
    let (_, _, u_elems, v_elems) = layout.dims();
    if u >= u_elems || v >= v_elems {
        return Err(Error::InvalidArgument(format!(
            "element index out of range: u = {u} (U = {u_elems}), v = {v} (V = {v_elems})"
        )));
    }
    let d_vec = layout.center_vector(m, n);
    let d = d_vec.norm();
    let projection = d_vec.dot(&layout.tx_offset(n, u)) / d;
    let magnitude = cfg.wavelength / (4.0 * PI * (u_elems as f64).sqrt() * d);
    let phase = -2.0 * PI / cfg.wavelength * (d - projection);
    Ok(cfg.beta * magnitude * Complex64::from_polar(1.0, phase))
}

fn common_factor(cfg: &OemConfig, d: f64) -> Complex64 {
    let phase = Complex64::from_polar(1.0, -2.0 * PI * d / cfg.wavelength);
    cfg.beta * cfg.wavelength * phase / (4.0 * PI * d)
}

/// Gain of mode `l` between the centers of transmit UCA `n` and receive
/// UCA `m`.
pub fn mode_gain(
    cfg: &OemConfig,
    layout: &ElementLayout,
    m: usize,
    n: usize,
    l: usize,
    kind: ChannelModelKind,
) -> Result<Complex64> {
    check_link(layout, m, n)?;
    if l >= cfg.u_elems {
        return Err(Error::InvalidArgument(format!(
            "mode {l} out of range for U = {}",
            cfg.u_elems
        )));
    }
    let d = layout.center_distance(m, n);
    let common = common_factor(cfg, d);
    let u_count = cfg.u_elems as f64;

    Ok(match kind {
        ChannelModelKind::ExactSum => {
            let x = cfg.bessel_argument(cfg.phi);
            let sum: Complex64 = (0..cfg.u_elems)
                .map(|u| {
                    let azimuth = 2.0 * PI * u as f64 / u_count;
                    let ramp = azimuth * l as f64;
                    let path = x * (azimuth - cfg.theta).cos();
                    Complex64::from_polar(1.0, ramp + path)
                })
                .sum();
            common * sum / u_count.sqrt()
        }
        ChannelModelKind::Bessel => {
            let x = cfg.bessel_argument(cfg.phi);
            common * bessel_form(cfg, l, x)?
        }
        ChannelModelKind::Convergent => {
            let x = cfg.bessel_argument(cfg.phi_c);
            common * cfg.conv_gains[l] * bessel_form(cfg, l, x)?
        }
    })
}

fn bessel_form(cfg: &OemConfig, l: usize, x: f64) -> Result<Complex64> {
    let order = u32::try_from(l).map_err(|_| Error::Domain { order: u32::MAX, x })?;
    let spin = Complex64::from_polar(1.0, cfg.theta * l as f64);
    Ok((cfg.u_elems as f64).sqrt() * spin * j_pow(l) * bessel_j(order, x)?)
}

/// Builds `H_l` for every mode `l = 0..U`.
pub fn build_mode_channels(cfg: &OemConfig, kind: ChannelModelKind) -> Result<Vec<ModeChannel>> {
    let layout = build_layout(cfg)?;
    mode_channels_for_layout(cfg, &layout, kind)
}

pub fn mode_channels_for_layout(
    cfg: &OemConfig,
    layout: &ElementLayout,
    kind: ChannelModelKind,
) -> Result<Vec<ModeChannel>> {
    let v_scale = cfg.v_elems as f64;
    (0..cfg.u_elems)
        .map(|l| {
            let mut matrix = CMatrix::zeros(cfg.m_rx, cfg.n_tx);
            for m in 0..cfg.m_rx {
                for n in 0..cfg.n_tx {
                    matrix[(m, n)] = v_scale * mode_gain(cfg, layout, m, n, l, kind)?;
                }
            }
            if matrix.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NumericSingularity(format!("non-finite gain on mode {l}")));
            }
            Ok(ModeChannel { mode: l, matrix })
        })
        .collect()
}

/// Convergence gains `A_l = |J_0(x_c)| / |J_l(x_c)|` that equalize every
/// mode's magnitude to mode 0's, with `x_c = 2 pi r2 sin(phi_c) / lambda`.
///
/// This is an idealized perfect reflector, not a measured one.
pub fn equal_gain_convergence(
    modes: usize,
    r2: f64,
    phi_c: f64,
    wavelength: f64,
) -> Result<Vec<f64>> {
    let x = 2.0 * PI * r2 * phi_c.sin() / wavelength;
    let j0 = bessel_j(0, x)?.abs();
    (0..modes)
        .map(|l| {
            let order = u32::try_from(l).map_err(|_| Error::Domain { order: u32::MAX, x })?;
            let jl = bessel_j(order, x)?.abs();
            if jl == 0.0 || j0 == 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "J_{l}({x}) vanishes; equal-gain convergence is undefined, set conv_gains explicitly"
                )));
            }
            Ok(j0 / jl)
        })
        .collect()
}
