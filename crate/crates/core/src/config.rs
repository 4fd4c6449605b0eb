//! System parameterization and its JSON file form.
//!
//! The JSON document uses the same field names as [`OemConfig`]. Angles
//! (`phi`, `phi_c`, `theta`) are written in degrees; everything else is SI.
//! `beta` is a two-element `[re, im]` array.
//!
//! ```json
//! {
//!   "n_tx": 4, "m_rx": 4, "u_elems": 8, "v_elems": 8,
//!   "r1": 0.1, "r2": 0.004, "wavelength": 0.0085655,
//!   "phi": 30.0, "phi_c": 3.0, "theta": 0.0,
//!   "beta": [1.0, 0.0], "link_distance": 1.0,
//!   "conv_gains": null, "noise_var": 1e-9
//! }
//! ```
//!
//! `phi_c`, `theta`, `beta` and `conv_gains` may be omitted (or `null`);
//! they default to `phi / 10`, `0`, `1 + 0j` and the equal-gain convergence
//! profile from [`crate::channel::equal_gain_convergence`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier wavelength in meters for a frequency in GHz.
pub fn wavelength_from_ghz(freq_ghz: f64) -> f64 {
    SPEED_OF_LIGHT / (freq_ghz * 1e9)
}

/// Full parameterization of an OEM link. Angles are radians in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct OemConfig {
    /// Number of transmit UCAs (N).
    pub n_tx: usize,
    /// Number of receive UCAs (M).
    pub m_rx: usize,
    /// Array-elements per transmit UCA (U); also the number of OAM modes.
    pub u_elems: usize,
    /// Array-elements per receive UCA (V).
    pub v_elems: usize,
    /// Radius of the circle the UCAs sit on (m).
    pub r1: f64,
    /// UCA radius (m).
    pub r2: f64,
    /// Carrier wavelength (m).
    pub wavelength: f64,
    /// Divergence angle.
    pub phi: f64,
    /// Equivalent angle after converging.
    pub phi_c: f64,
    /// Azimuth of the link direction, measured from the x-axis.
    pub theta: f64,
    /// Lumped attenuation / phase constant.
    pub beta: Complex64,
    /// Distance between the transmit and receive circle centers (m).
    pub link_distance: f64,
    /// Per-mode convergence amplitude gains, one per mode.
    pub conv_gains: Vec<f64>,
    /// Per-element noise variance (W).
    pub noise_var: f64,
}

impl OemConfig {
    /// A 35 GHz configuration with the 30 degree divergence angle used for
    /// the reference experiments, r1 = 0.1 m, r2 = 4 mm, 1 m link, and the
    /// default convergence settings.
    pub fn reference(n_tx: usize, m_rx: usize, u_elems: usize, v_elems: usize) -> Self {
        let wavelength = wavelength_from_ghz(35.0);
        let phi = 30f64.to_radians();
        let phi_c = phi / 10.0;
        let r2 = 0.004;
        let conv_gains = crate::channel::equal_gain_convergence(u_elems, r2, phi_c, wavelength)
            .expect("reference geometry has no Bessel zeros");
        Self {
            n_tx,
            m_rx,
            u_elems,
            v_elems,
            r1: 0.1,
            r2,
            wavelength,
            phi,
            phi_c,
            theta: 0.0,
            beta: Complex64::new(1.0, 0.0),
            link_distance: 1.0,
            conv_gains,
            noise_var: 1e-9,
        }
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_tx < 1 || self.m_rx < 1 || self.u_elems < 1 {
            return fail(format!(
                "need n_tx, m_rx, u_elems >= 1 (got {}, {}, {})",
                self.n_tx, self.m_rx, self.u_elems
            ));
        }
        if self.v_elems < self.u_elems {
            return fail(format!(
                "v_elems ({}) must be >= u_elems ({})",
                self.v_elems, self.u_elems
            ));
        }
        if !(self.r2 > 0.0 && self.r1 > self.r2 && self.r1.is_finite()) {
            return fail(format!("need r1 > r2 > 0 (got r1 = {}, r2 = {})", self.r1, self.r2));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return fail(format!("wavelength must be positive (got {})", self.wavelength));
        }
        if !(self.phi > 0.0 && self.phi < std::f64::consts::FRAC_PI_2) {
            return fail(format!("phi must lie in (0, 90) degrees (got {} rad)", self.phi));
        }
        if !(self.phi_c >= 0.0 && self.phi_c <= self.phi) {
            return fail(format!("need 0 <= phi_c <= phi (got phi_c = {} rad)", self.phi_c));
        }
        if !self.theta.is_finite() {
            return fail("theta must be finite".into());
        }
        if !(self.beta.re.is_finite() && self.beta.im.is_finite()) {
            return fail("beta must be finite".into());
        }
        if !(self.link_distance > 0.0 && self.link_distance.is_finite()) {
            return fail(format!("link_distance must be positive (got {})", self.link_distance));
        }
        if self.conv_gains.len() != self.u_elems {
            return fail(format!(
                "conv_gains has {} entries, expected u_elems = {}",
                self.conv_gains.len(),
                self.u_elems
            ));
        }
        if self.conv_gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return fail("conv_gains must be finite and >= 0".into());
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return fail(format!("noise_var must be >= 0 (got {})", self.noise_var));
        }
        Ok(())
    }

    /// Number of OAM modes carried per UCA.
    pub fn modes(&self) -> usize {
        self.u_elems
    }

    /// Bessel argument 2 pi r2 sin(angle) / lambda.
    pub fn bessel_argument(&self, angle: f64) -> f64 {
        2.0 * std::f64::consts::PI * self.r2 * angle.sin() / self.wavelength
    }

    /// Parses and validates a JSON config document, filling defaults.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        file.into_config()
    }

    /// Serializes with angles in degrees and every default resolved.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("config serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_file()).expect("config serializes")
    }

    fn to_file(&self) -> ConfigFile {
        ConfigFile {
            n_tx: self.n_tx,
            m_rx: self.m_rx,
            u_elems: self.u_elems,
            v_elems: self.v_elems,
            r1: self.r1,
            r2: self.r2,
            wavelength: self.wavelength,
            phi: self.phi.to_degrees(),
            phi_c: Some(self.phi_c.to_degrees()),
            theta: Some(self.theta.to_degrees()),
            beta: Some(self.beta),
            link_distance: self.link_distance,
            conv_gains: Some(self.conv_gains.clone()),
            noise_var: self.noise_var,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n_tx: usize,
    m_rx: usize,
    u_elems: usize,
    v_elems: usize,
    r1: f64,
    r2: f64,
    wavelength: f64,
    phi: f64,
    #[serde(default)]
    phi_c: Option<f64>,
    #[serde(default)]
    theta: Option<f64>,
    #[serde(default)]
    beta: Option<Complex64>,
    link_distance: f64,
    #[serde(default)]
    conv_gains: Option<Vec<f64>>,
    noise_var: f64,
}

impl ConfigFile {
    fn into_config(self) -> Result<OemConfig> {
        let phi = self.phi.to_radians();
        let phi_c = self.phi_c.map(f64::to_radians).unwrap_or(phi / 10.0);
        let mut cfg = OemConfig {
            n_tx: self.n_tx,
            m_rx: self.m_rx,
            u_elems: self.u_elems,
            v_elems: self.v_elems,
            r1: self.r1,
            r2: self.r2,
            wavelength: self.wavelength,
            phi,
            phi_c,
            theta: self.theta.unwrap_or(0.0).to_radians(),
            beta: self.beta.unwrap_or(Complex64::new(1.0, 0.0)),
            link_distance: self.link_distance,
            conv_gains: Vec::new(),
            noise_var: self.noise_var,
        };
        cfg.conv_gains = match self.conv_gains {
            Some(g) => g,
            None => {
                // Only meaningful once the geometry itself is sane.
                let mut probe = cfg.clone();
                probe.conv_gains = vec![1.0; probe.u_elems];
                probe.validate()?;
                crate::channel::equal_gain_convergence(cfg.u_elems, cfg.r2, cfg.phi_c, cfg.wavelength)?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
