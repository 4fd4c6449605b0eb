//! Closed-form sizing of the microstrip patch elements and the converging
//! parabolic reflector. Lengths are in meters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Free-space wave impedance used by the feed-point reactance term.
const FREE_SPACE_OHMS: f64 = 377.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub wavelength: f64,
    pub eps_r: f64,
    pub thickness: f64,
    /// Characteristic impedance of the element, ohms.
    pub z0: f64,
}

impl PatchSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.wavelength) && ok(self.thickness) && ok(self.z0)) {
            return Err(Error::InvalidSpec("wavelength, thickness and z0 must be positive".into()));
        }
        if !(self.eps_r.is_finite() && self.eps_r > 1.0) {
            return Err(Error::InvalidSpec(format!("eps_r must exceed 1, got {}", self.eps_r)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchDesign {
    pub width: f64,
    pub eps_eff: f64,
    pub guide_wavelength: f64,
    pub length: f64,
    pub gap_correction: f64,
    pub feed_offset: f64,
    pub xi_re: f64,
}

/// Effective permittivity of a microstrip of width `w` on a substrate of
/// height `t`.
fn effective_permittivity(eps_r: f64, t: f64, w: f64) -> f64 {
    (eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 / (1.0 + 12.0 * t / w).sqrt()
}

pub fn design_patch(spec: &PatchSpec) -> Result<PatchDesign> {
    spec.validate()?;
    let PatchSpec { wavelength, eps_r, thickness: t, .. } = *spec;
    let width = wavelength / 2.0 / ((eps_r + 1.0) / 2.0).sqrt();
    let eps_eff = effective_permittivity(eps_r, t, width);
    let guide_wavelength = wavelength / eps_eff.sqrt();
    let ratio = width / t;
    let gap_correction = 0.412 * t * (eps_eff + 0.3) * (ratio + 0.264) / ((eps_eff - 0.258) * (ratio + 0.8));
    let length = guide_wavelength / 2.0 - 2.0 * gap_correction;
    if !(length > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "substrate of {t} m is too thick for wavelength {wavelength} m (element length {length} m)"
        )));
    }
    let xi_re = effective_permittivity(eps_r, t, length);
    let feed_offset = length / 2.0 * (1.0 - 1.0 / xi_re.sqrt());
    Ok(PatchDesign { width, eps_eff, guide_wavelength, length, gap_correction, feed_offset, xi_re })
}

/// Radiating-wall impedance of the patch edge.
pub fn wall_impedance(spec: &PatchSpec, design: &PatchDesign) -> Complex64 {
    let g = 0.00836 * design.width / spec.wavelength;
    let b = 0.01668 * design.gap_correction * design.width * design.eps_eff / (spec.thickness * spec.wavelength);
    Complex64::new(g, b).inv()
}

/// Normalized impedance of a line section of electrical length `psi_l`
/// terminated by `zw`.
fn transformed(z0: f64, zw: Complex64, psi_l: f64) -> Result<Complex64> {
    let j = Complex64::i();
    let (s, c) = psi_l.sin_cos();
    let num = z0 * c + j * zw * s;
    let den = zw * c + j * z0 * s;
    let scale = num.norm().max(z0).max(zw.norm());
    if den.norm() < 1e-12 * scale {
        return Err(Error::NumericSingularity(format!("line section of electrical length {psi_l} rad")));
    }
    Ok(num / den)
}

/// Input admittance at a feed point `feed_offset` from one radiating edge,
/// as the sum of the two line sections toward each wall.
pub fn feed_admittance(spec: &PatchSpec, design: &PatchDesign, feed_offset: f64) -> Result<Complex64> {
    spec.validate()?;
    if !(feed_offset > 0.0 && feed_offset < design.length) {
        return Err(Error::InvalidArgument(format!(
            "feed offset {feed_offset} m outside (0, {})",
            design.length
        )));
    }
    let zw = wall_impedance(spec, design);
    let psi = 2.0 * PI / design.guide_wavelength;
    let near = transformed(spec.z0, zw, psi * feed_offset)?;
    let far = transformed(spec.z0, zw, psi * (design.length - feed_offset))?;
    Ok((near + far) / spec.z0)
}

/// Input impedance at the feed point, including the probe reactance through
/// the substrate.
pub fn feed_impedance(spec: &PatchSpec, design: &PatchDesign, feed_offset: f64) -> Result<Complex64> {
    let y1 = feed_admittance(spec, design, feed_offset)?;
    if y1.norm() < 1e-12 / spec.z0 {
        return Err(Error::NumericSingularity("feed admittance vanishes".into()));
    }
    let probe = FREE_SPACE_OHMS / spec.eps_r.sqrt() * (2.0 * PI * spec.thickness / spec.wavelength).tan();
    Ok(y1.inv() + Complex64::new(0.0, probe))
}

/// Feed offset in `(0, L_E/2]` where the input resistance equals `z0`,
/// found by scanning and bisection. `None` when the resistance never
/// crosses `z0` on that half of the patch.
pub fn matched_feed_offset(spec: &PatchSpec, design: &PatchDesign) -> Result<Option<f64>> {
    const SCAN: usize = 2000;
    let half = design.length / 2.0;
    let excess = |x: f64| feed_impedance(spec, design, x).map(|z| z.re - spec.z0);
    let mut prev_x = half / SCAN as f64;
    let mut prev = excess(prev_x)?;
    for k in 2..=SCAN {
        let x = half * k as f64 / SCAN as f64;
        let f = excess(x)?;
        if prev == 0.0 {
            return Ok(Some(prev_x));
        }
        if prev.signum() != f.signum() {
            let (mut lo, mut hi, mut f_lo) = (prev_x, x, prev);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let f_mid = excess(mid)?;
                if f_mid.signum() == f_lo.signum() {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        prev_x = x;
        prev = f;
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DishDesign {
    pub diameter: f64,
    pub focal_length: f64,
    pub kappa: f64,
    /// Paraboloid coefficient: `z = surface * (x^2 + y^2)`.
    pub surface: f64,
}

impl DishDesign {
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        self.surface * (x * x + y * y)
    }
}

/// Aperture diameter and focal length for a reflector of the given gain.
///
/// `gain_db = 0` is accepted and yields `D = lambda sqrt(eta) / pi`.
pub fn design_dish(gain_db: f64, efficiency: f64, kappa: f64, wavelength: f64) -> Result<DishDesign> {
    if !(gain_db.is_finite() && gain_db >= 0.0) {
        return Err(Error::InvalidSpec(format!("gain must be >= 0 dB, got {gain_db}")));
    }
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::InvalidSpec(format!("efficiency must be in (0, 1], got {efficiency}")));
    }
    if !(0.25..=0.5).contains(&kappa) {
        return Err(Error::InvalidSpec(format!("kappa must be in [0.25, 0.5], got {kappa}")));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::InvalidSpec("wavelength must be positive".into()));
    }
    let gain = 10f64.powf(gain_db / 10.0);
    let diameter = wavelength * (gain * efficiency).sqrt() / PI;
    let focal_length = kappa * diameter;
    Ok(DishDesign { diameter, focal_length, kappa, surface: 1.0 / (4.0 * focal_length) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_spec() -> PatchSpec {
        PatchSpec { wavelength: 8.5655e-3, eps_r: 2.2, thickness: 0.245e-3, z0: 50.0 }
    }

    #[test]
    fn reference_patch() {
        let d = design_patch(&reference_spec()).unwrap();
        // lambda / (2 sqrt(1.6))
        assert!((d.width - 8.5655e-3 / (2.0 * 1.6f64.sqrt())).abs() < 1e-15);
        assert!((d.width * 1e3 - 3.386).abs() < 5e-4);
        assert!((d.eps_eff - 2.039).abs() < 5e-4);
        assert!(d.gap_correction > 0.0);
        assert!(0.0 < d.feed_offset && d.feed_offset < d.length / 2.0);
        assert!(d.length < d.guide_wavelength);
        assert!(1.0 < d.eps_eff && d.eps_eff < 2.2);
        assert!(d.xi_re > 1.0);
    }

    #[test]
    fn low_permittivity_limit() {
        let d = design_patch(&PatchSpec { eps_r: 1.0 + 1e-9, ..reference_spec() }).unwrap();
        assert!((d.width - 8.5655e-3 / 2.0).abs() < 1e-11);
        assert!((d.eps_eff - 1.0).abs() < 1e-9);
    }

    #[test]
    fn thick_substrate_rejected() {
        let spec = PatchSpec { thickness: 0.1, ..reference_spec() };
        assert!(matches!(design_patch(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn spec_validation() {
        for spec in [
            PatchSpec { eps_r: 1.0, ..reference_spec() },
            PatchSpec { thickness: 0.0, ..reference_spec() },
            PatchSpec { wavelength: -1.0, ..reference_spec() },
            PatchSpec { z0: 0.0, ..reference_spec() },
        ] {
            assert!(design_patch(&spec).is_err());
        }
    }

    #[test]
    fn scale_covariance() {
        let s = reference_spec();
        let a = design_patch(&s).unwrap();
        for c in [0.01, 0.37, 3.0, 250.0] {
            let b = design_patch(&PatchSpec { wavelength: c * s.wavelength, thickness: c * s.thickness, ..s }).unwrap();
            let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
            assert!(rel(b.width, c * a.width) < 1e-12);
            assert!(rel(b.guide_wavelength, c * a.guide_wavelength) < 1e-12);
            assert!(rel(b.length, c * a.length) < 1e-12);
            assert!(rel(b.gap_correction, c * a.gap_correction) < 1e-12);
            assert!(rel(b.feed_offset, c * a.feed_offset) < 1e-12);
            assert!(rel(b.eps_eff, a.eps_eff) < 1e-12);
            assert!(rel(b.xi_re, a.xi_re) < 1e-12);
        }
    }

    #[test]
    fn wall_impedance_matches_direct_formula() {
        let s = reference_spec();
        let d = design_patch(&s).unwrap();
        let zw = wall_impedance(&s, &d);
        let (g, b) = (
            0.00836 * d.width / s.wavelength,
            0.01668 * d.gap_correction * d.width * d.eps_eff / (s.thickness * s.wavelength),
        );
        let den = g * g + b * b;
        assert!((zw.re - g / den).abs() < 1e-12 * zw.norm());
        assert!((zw.im + b / den).abs() < 1e-12 * zw.norm());
    }

    #[test]
    fn closed_form_feed_is_realizable() {
        let s = reference_spec();
        let d = design_patch(&s).unwrap();
        let z = feed_impedance(&s, &d, d.feed_offset).unwrap();
        assert!(z.re.is_finite() && z.im.is_finite());
        assert!(z.re != 0.0);
    }

    #[test]
    fn centered_feed_is_symmetric() {
        let s = reference_spec();
        let d = design_patch(&s).unwrap();
        let zw = wall_impedance(&s, &d);
        let psi = 2.0 * PI / d.guide_wavelength;
        let half = d.length / 2.0;
        let a = transformed(s.z0, zw, psi * half).unwrap();
        let b = transformed(s.z0, zw, psi * (d.length - half)).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
        let y = feed_admittance(&s, &d, half).unwrap();
        assert!((y - 2.0 * a / s.z0).norm() < 1e-12 * y.norm());
    }

    #[test]
    fn admittance_mirror_symmetry() {
        let s = reference_spec();
        let d = design_patch(&s).unwrap();
        let x = 0.3 * d.length;
        let a = feed_admittance(&s, &d, x).unwrap();
        let b = feed_admittance(&s, &d, d.length - x).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn feed_offset_bounds() {
        let s = reference_spec();
        let d = design_patch(&s).unwrap();
        assert!(feed_impedance(&s, &d, 0.0).is_err());
        assert!(feed_impedance(&s, &d, d.length).is_err());
    }

    #[test]
    fn matched_offset_hits_target_when_found() {
        let s = reference_spec();
        let d = design_patch(&s).unwrap();
        if let Some(x) = matched_feed_offset(&s, &d).unwrap() {
            assert!(x > 0.0 && x <= d.length / 2.0);
            let z = feed_impedance(&s, &d, x).unwrap();
            assert!((z.re - s.z0).abs() < 1e-6 * s.z0);
        }
    }

    #[test]
    fn reference_dish() {
        let d = design_dish(36.0, 0.5, 0.4, 8.5655e-3).unwrap();
        assert!((d.diameter * 1e3 - 121.64).abs() < 0.01);
        assert!((d.focal_length * 1e3 - 48.66).abs() < 0.01);
        assert_eq!(d.focal_length, 0.4 * d.diameter);
        let rim = d.height_at(d.diameter / 2.0, 0.0);
        assert!((rim - d.diameter / (16.0 * d.kappa)).abs() < 1e-15);
        assert!((rim - d.diameter.powi(2) / (16.0 * d.focal_length)).abs() < 1e-15);
    }

    #[test]
    fn unit_gain_dish() {
        let d = design_dish(0.0, 1.0, 0.25, 0.01).unwrap();
        assert!((d.diameter - 0.01 / PI).abs() < 1e-17);
    }

    #[test]
    fn dish_monotone() {
        let mut last = 0.0;
        for g in [0.0, 3.0, 10.0, 20.0, 36.0, 50.0] {
            let d = design_dish(g, 0.6, 0.3, 0.01).unwrap().diameter;
            assert!(d > last);
            last = d;
        }
        let mut last = 0.0;
        for eta in [0.05, 0.2, 0.5, 0.9, 1.0] {
            let d = design_dish(20.0, eta, 0.3, 0.01).unwrap().diameter;
            assert!(d > last);
            last = d;
        }
    }

    #[test]
    fn dish_preconditions() {
        assert!(design_dish(-1.0, 0.5, 0.4, 0.01).is_err());
        assert!(design_dish(10.0, 0.0, 0.4, 0.01).is_err());
        assert!(design_dish(10.0, 1.1, 0.4, 0.01).is_err());
        assert!(design_dish(10.0, 0.5, 0.2, 0.01).is_err());
        assert!(design_dish(10.0, 0.5, 0.51, 0.01).is_err());
        assert!(design_dish(10.0, 0.5, 0.4, 0.0).is_err());
    }
}
