//! Array placement and the adjacent-spacing tests that decide whether OAM
//! embedding pays off.
//!
//! Frame: the transmit circle lies in the z = 0 plane, centered on the
//! origin, with its normal (the nominal propagation axis) along +z. The
//! receive circle is parallel to it and centered `link_distance` away in the
//! direction given by polar angle `phi` from +z and azimuth `theta` from +x.
//! UCA `k` sits at azimuth 2 pi k / N (or M) on its circle; element `u` sits
//! at azimuth 2 pi u / U on the UCA, all indices zero-based.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::Serialize;

use crate::config::OemConfig;
use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

/// 3-D positions of every UCA and array-element.
#[derive(Debug, Clone)]
pub struct ElementLayout {
    n_tx: usize,
    m_rx: usize,
    u_elems: usize,
    v_elems: usize,
    pub tx_centers: Vec<Point>,
    pub rx_centers: Vec<Point>,
    /// Transmit element positions, UCA-major: index `n * U + u`.
    pub tx_positions: Vec<Point>,
    /// Receive element positions, UCA-major: index `m * V + v`.
    pub rx_positions: Vec<Point>,
    /// Center-to-center vectors, row-major over (m, n): index `m * N + n`.
    pub center_vectors: Vec<Point>,
}

impl ElementLayout {
    /// Vector from the center of transmit UCA `n` to receive UCA `m`.
    pub fn center_vector(&self, m: usize, n: usize) -> Point {
        self.center_vectors[m * self.n_tx + n]
    }

    pub fn center_distance(&self, m: usize, n: usize) -> f64 {
        self.center_vector(m, n).norm()
    }

    /// Offset of transmit element `u` from its UCA center.
    pub fn tx_offset(&self, n: usize, u: usize) -> Point {
        self.tx_positions[n * self.u_elems + u] - self.tx_centers[n]
    }

    /// Offset of receive element `v` from its UCA center.
    pub fn rx_offset(&self, m: usize, v: usize) -> Point {
        self.rx_positions[m * self.v_elems + v] - self.rx_centers[m]
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.n_tx, self.m_rx, self.u_elems, self.v_elems)
    }

    /// Center of the receive circle.
    pub fn rx_origin(&self) -> Point {
        self.rx_centers.iter().sum::<Point>() / self.m_rx as f64
    }
}

fn ring_point(center: Point, radius: f64, angle: f64) -> Point {
    center + Point::new(radius * angle.cos(), radius * angle.sin(), 0.0)
}

/// Places every UCA and element for `cfg`.
pub fn build_layout(cfg: &OemConfig) -> Result<ElementLayout> {
    cfg.validate()?;
    let (n_tx, m_rx, u_elems, v_elems) = (cfg.n_tx, cfg.m_rx, cfg.u_elems, cfg.v_elems);

    let rx_origin = cfg.link_distance
        * Point::new(
            cfg.phi.sin() * cfg.theta.cos(),
            cfg.phi.sin() * cfg.theta.sin(),
            cfg.phi.cos(),
        );

    let tx_centers: Vec<Point> = (0..n_tx)
        .map(|k| ring_point(Point::zeros(), cfg.r1, 2.0 * PI * k as f64 / n_tx as f64))
        .collect();
    let rx_centers: Vec<Point> = (0..m_rx)
        .map(|k| ring_point(rx_origin, cfg.r1, 2.0 * PI * k as f64 / m_rx as f64))
        .collect();

    let tx_positions = tx_centers
        .iter()
        .flat_map(|&c| {
            (0..u_elems).map(move |u| ring_point(c, cfg.r2, 2.0 * PI * u as f64 / u_elems as f64))
        })
        .collect();
    let rx_positions = rx_centers
        .iter()
        .flat_map(|&c| {
            (0..v_elems).map(move |v| ring_point(c, cfg.r2, 2.0 * PI * v as f64 / v_elems as f64))
        })
        .collect();

    let center_vectors = rx_centers
        .iter()
        .flat_map(|rx| tx_centers.iter().map(move |tx| rx - tx))
        .collect();

    Ok(ElementLayout {
        n_tx,
        m_rx,
        u_elems,
        v_elems,
        tx_centers,
        rx_centers,
        tx_positions,
        rx_positions,
        center_vectors,
    })
}

/// Chord between adjacent points of `count` equally spaced on a circle.
fn chord(radius: f64, count: usize) -> f64 {
    2.0 * radius * (PI / count as f64).sin()
}

/// Distances between adjacent UCA centers (`d_a`) and between adjacent
/// elements of one UCA (`d_e`).
pub fn adjacent_distances(cfg: &OemConfig) -> Result<(f64, f64)> {
    if cfg.n_tx < 2 || cfg.u_elems < 2 {
        return Err(Error::InvalidConfig(format!(
            "adjacent distances need n_tx >= 2 and u_elems >= 2 (got {}, {})",
            cfg.n_tx, cfg.u_elems
        )));
    }
    Ok((chord(cfg.r1, cfg.n_tx), chord(cfg.r2, cfg.u_elems)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scenario {
    /// UCAs are far enough apart for MIMO and elements are close enough
    /// that only OAM can exploit them: use OEM.
    #[serde(rename = "Scenario I")]
    UseOem,
    /// Elements are themselves more than half a wavelength apart: plain
    /// massive MIMO over the elements already achieves the maximum.
    #[serde(rename = "Scenario II")]
    PlainMimo,
    /// UCAs are within half a wavelength of each other; neither scenario
    /// applies.
    #[serde(rename = "UCA spacing below half wavelength")]
    Undersampled,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Scenario::UseOem => "Scenario I",
            Scenario::PlainMimo => "Scenario II",
            Scenario::Undersampled => "UCA spacing below half wavelength",
        };
        f.write_str(s)
    }
}

/// Half-open wavelength interval `[lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavelengthInterval {
    pub lower: f64,
    pub upper: f64,
}

impl WavelengthInterval {
    pub fn contains(&self, wavelength: f64) -> bool {
        self.lower <= wavelength && wavelength < self.upper
    }

    pub fn is_empty(&self) -> bool {
        self.lower >= self.upper
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub d_a: f64,
    pub d_e: f64,
    pub half_wavelength: f64,
    /// Wavelengths for which the configuration is in Scenario I; `None`
    /// when no wavelength qualifies.
    pub oem_interval: Option<WavelengthInterval>,
    /// The interval with the radii paired against the opposite counts
    /// (`r1` with `U`, `r2` with `N`), kept for comparison. It does not
    /// agree with the spacing tests and is never used for decisions.
    pub swapped_interval: WavelengthInterval,
}

/// Classifies the configuration and reports the admissible wavelengths.
///
/// Only `n_tx >= 2`, `u_elems >= 2` and positive radii/wavelength are
/// required, so degenerate geometries (e.g. `r2 == r1`) can be examined.
pub fn scenario_check(cfg: &OemConfig) -> Result<ScenarioReport> {
    if !(cfg.r1 > 0.0 && cfg.r2 > 0.0 && cfg.wavelength > 0.0) {
        return Err(Error::InvalidConfig(
            "scenario check needs positive r1, r2 and wavelength".into(),
        ));
    }
    let (d_a, d_e) = adjacent_distances(cfg)?;
    let half_wavelength = 0.5 * cfg.wavelength;

    let scenario = if d_a > half_wavelength {
        if d_e <= half_wavelength {
            Scenario::UseOem
        } else {
            Scenario::PlainMimo
        }
    } else {
        Scenario::Undersampled
    };

    // d_e <= lambda/2 <=> lambda >= 2 d_e, d_a > lambda/2 <=> lambda < 2 d_a.
    let interval = WavelengthInterval { lower: 2.0 * d_e, upper: 2.0 * d_a };
    let cos_term = |count: usize| (8.0 * (1.0 - (2.0 * PI / count as f64).cos())).sqrt();
    let swapped_interval = WavelengthInterval {
        lower: cfg.r1 * cos_term(cfg.u_elems),
        upper: cfg.r2 * cos_term(cfg.n_tx),
    };

    Ok(ScenarioReport {
        scenario,
        d_a,
        d_e,
        half_wavelength,
        oem_interval: (!interval.is_empty()).then_some(interval),
        swapped_interval,
    })
}
