use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

use oem_core::antenna::{self, PatchSpec};
use oem_core::capacity::{self, FadingModel, Normalization};
use oem_core::channel::{build_mode_channels, ChannelModelKind};
use oem_core::config::{wavelength_from_ghz, OemConfig};
use oem_core::geometry::scenario_check;
use oem_core::power::waterfill_instantaneous;
use oem_core::SnrGrid;

use crate::manifest::{sibling, to_json, RunManifest};
use crate::{ChannelArgs, DishArgs, PatchArgs, ScenarioArgs, SimulateArgs, WaterfillArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    Simulation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io(_) => 1,
            Self::Usage(_) => 2,
            Self::Schema(_) => 3,
            Self::Simulation(_) => 4,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn schema(e: impl std::fmt::Display) -> CliError {
    CliError::Schema(e.to_string())
}

fn simulation(e: impl std::fmt::Display) -> CliError {
    CliError::Simulation(e.to_string())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Config plus whether its convergence gains were defaulted.
fn load_config(path: &Path) -> Result<(OemConfig, bool), CliError> {
    let text = read_text(path)?;
    let cfg = OemConfig::from_json_str(&text).map_err(|e| schema(format!("{}: {e}", path.display())))?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(schema)?;
    let defaulted = raw.get("conv_gains").is_none_or(|v| v.is_null());
    Ok((cfg, defaulted))
}

fn parse_model(name: &str) -> Result<ChannelModelKind, CliError> {
    name.parse().map_err(usage)
}

/// Rows written as LF-terminated CSV with a header.
fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn emit_record(command: &str, record: &serde_json::Value, echo: serde_json::Value, out: Option<&Path>) -> Result<(), CliError> {
    let text = to_json(record);
    print!("{text}");
    if let Some(out) = out {
        write_text(out, &text)?;
        RunManifest::new(command, echo, None, &[out]).write_beside(out)?;
    }
    Ok(())
}

const MM: f64 = 1e3;

pub fn design_patch(a: &PatchArgs) -> Result<(), CliError> {
    if !(a.freq_ghz > 0.0) {
        return Err(usage("--freq-ghz must be positive"));
    }
    let spec = PatchSpec {
        wavelength: wavelength_from_ghz(a.freq_ghz),
        eps_r: a.eps_r,
        thickness: a.thickness_mm / MM,
        z0: a.z0,
    };
    let d = antenna::design_patch(&spec).map_err(usage)?;
    let z_in = antenna::feed_impedance(&spec, &d, d.feed_offset).map_err(simulation)?;
    let z_w = antenna::wall_impedance(&spec, &d);
    let matched = antenna::matched_feed_offset(&spec, &d).map_err(simulation)?;
    let record = json!({
        "width": d.width * MM,
        "eps_eff": d.eps_eff,
        "guide_wavelength": d.guide_wavelength * MM,
        "length": d.length * MM,
        "gap_correction": d.gap_correction * MM,
        "feed_offset": d.feed_offset * MM,
        "xi_re": d.xi_re,
        "units": "lengths in mm",
        "diagnostics": {
            "wavelength": spec.wavelength * MM,
            "z0": spec.z0,
            "wall_impedance": [z_w.re, z_w.im],
            "input_impedance_at_feed_offset": [z_in.re, z_in.im],
            "matched_feed_offset": matched.map(|x| x * MM),
        },
    });
    let echo = json!({
        "kind": "patch", "freq_ghz": a.freq_ghz, "eps_r": a.eps_r,
        "thickness_mm": a.thickness_mm, "z0": a.z0,
    });
    emit_record("design patch", &record, echo, a.out.as_deref())
}

pub fn design_dish(a: &DishArgs) -> Result<(), CliError> {
    if !(a.freq_ghz > 0.0) {
        return Err(usage("--freq-ghz must be positive"));
    }
    let d = antenna::design_dish(a.gain_db, a.efficiency, a.kappa, wavelength_from_ghz(a.freq_ghz)).map_err(usage)?;
    let record = json!({
        "diameter": d.diameter * MM,
        "focal_length": d.focal_length * MM,
        "kappa": d.kappa,
        "surface": d.surface / MM,
        "units": "lengths in mm, surface in 1/mm",
    });
    let echo = json!({
        "kind": "dish", "gain_db": a.gain_db, "efficiency": a.efficiency,
        "kappa": a.kappa, "freq_ghz": a.freq_ghz,
    });
    emit_record("design dish", &record, echo, a.out.as_deref())
}

pub fn channel(a: &ChannelArgs) -> Result<(), CliError> {
    let kind = parse_model(&a.model)?;
    let (cfg, _) = load_config(&a.config)?;
    if let Some(l) = a.mode.filter(|&l| l >= cfg.u_elems) {
        return Err(usage(format!("--mode {l} out of range for {} modes", cfg.u_elems)));
    }
    let channels = build_mode_channels(&cfg, kind).map_err(simulation)?;
    let mut rows = Vec::new();
    for ch in channels.iter().filter(|c| a.mode.is_none_or(|l| l == c.mode)) {
        for m in 0..cfg.m_rx {
            for n in 0..cfg.n_tx {
                let h = ch.matrix[(m, n)];
                rows.push(vec![ch.mode.to_string(), m.to_string(), n.to_string(), h.re.to_string(), h.im.to_string()]);
            }
        }
    }
    write_text(&a.out, &csv_text(&["mode", "m", "n", "re", "im"], &rows)?)?;
    let echo = json!({ "config": cfg.to_json_value(), "model": kind.to_string(), "mode": a.mode });
    RunManifest::new("channel", echo, None, &[&a.out]).write_beside(&a.out)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct SnrRow {
    i: usize,
    l: usize,
    gamma: f64,
}

pub fn waterfill(a: &WaterfillArgs) -> Result<(), CliError> {
    if !(a.total_power.is_finite() && a.total_power > 0.0) {
        return Err(usage("--total-power must be positive"));
    }
    let text = read_text(&a.input)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let rows: Vec<SnrRow> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| schema(format!("{}: {e}", a.input.display())))?;
    if rows.is_empty() {
        return Err(schema(format!("{}: no channels", a.input.display())));
    }
    let mut seen = BTreeSet::new();
    if let Some(dup) = rows.iter().find(|r| !seen.insert((r.i, r.l))) {
        return Err(schema(format!("duplicate channel (i={}, l={})", dup.i, dup.l)));
    }
    let grid = SnrGrid::from_channels(rows.iter().map(|r| r.gamma).collect()).map_err(schema)?;
    let policy = waterfill_instantaneous(&grid, a.total_power).map_err(simulation)?;

    let out_rows: Vec<Vec<String>> = rows
        .iter()
        .zip(&policy.allocations)
        .map(|(r, p)| vec![r.i.to_string(), r.l.to_string(), r.gamma.to_string(), p.to_string()])
        .collect();
    write_text(&a.out, &csv_text(&["i", "l", "gamma", "power"], &out_rows)?)?;

    let mu_star = if policy.mu_star.is_finite() { json!(policy.mu_star) } else { json!(null) };
    let summary = json!({
        "mu_star": mu_star,
        "water_level": policy.water_level,
        "active_count": policy.active_set.len(),
    });
    let summary_path = sibling(&a.out, "summary.json");
    let summary_text = to_json(&summary);
    write_text(&summary_path, &summary_text)?;
    print!("{summary_text}");
    let echo = json!({ "input": a.input.display().to_string(), "total_power": a.total_power });
    RunManifest::new("waterfill", echo, None, &[&a.out, &summary_path]).write_beside(&a.out)?;
    Ok(())
}

/// `start:stop:step`, stop inclusive (to within a billionth of a step).
pub fn parse_snr_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(format!("--snr-db {spec:?}: {e}")))?;
    let [start, stop, step] = parts[..] else {
        return Err(usage(format!("--snr-db {spec:?}: expected start:stop:step")));
    };
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && stop >= start) {
        return Err(usage(format!("--snr-db {spec:?}: need finite start <= stop and step > 0")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(usage(format!("--snr-db {spec:?}: too many points")));
    }
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let snr = parse_snr_range(&a.snr_db)?;
    let kind = parse_model(&a.model)?;
    let normalization: Normalization = a.normalization.parse().map_err(usage)?;
    let (cfg, defaulted_gains) = load_config(&a.config)?;

    let fading = match kind {
        ChannelModelKind::Bessel => FadingModel::non_convergent(&cfg, snr[0], normalization),
        ChannelModelKind::Convergent => FadingModel::convergent(&cfg, snr[0], normalization),
        ChannelModelKind::ExactSum => FadingModel::from_channel(&cfg, kind, snr[0], normalization),
    }
    .map_err(simulation)?;
    let (oem, mimo) = capacity::sweep(&cfg, &fading, &snr, a.total_power, a.trials, a.seed).map_err(simulation)?;

    let rows: Vec<Vec<String>> = oem
        .points
        .iter()
        .zip(&mimo.points)
        .map(|(o, m)| {
            vec![
                o.mean_snr_db.to_string(),
                o.se.to_string(),
                o.stderr.to_string(),
                m.se.to_string(),
                m.stderr.to_string(),
            ]
        })
        .collect();
    write_text(&a.out, &csv_text(&["snr_db", "se_oem", "se_oem_stderr", "se_mimo", "se_mimo_stderr"], &rows)?)?;

    let conv_source = match (kind, defaulted_gains) {
        (ChannelModelKind::Convergent, true) => "equal-gain idealization (default)",
        (ChannelModelKind::Convergent, false) => "config",
        _ => "unused",
    };
    let echo = json!({
        "config": cfg.to_json_value(),
        "model": kind.to_string(),
        "normalization": normalization.to_string(),
        "total_power": a.total_power,
        "trials": a.trials,
        "snr_db": snr,
        "mode_profile": fading.mode_profile,
        "conv_gains_source": conv_source,
        "oem_tag": oem.config_tag,
        "mimo_tag": mimo.config_tag,
    });
    RunManifest::new("simulate", echo, Some(a.seed), &[&a.out]).write_beside(&a.out)?;
    Ok(())
}

pub fn scenario(a: &ScenarioArgs) -> Result<(), CliError> {
    let (cfg, _) = load_config(&a.config)?;
    let report = scenario_check(&cfg).map_err(simulation)?;
    let record = json!({
        "scenario": report.scenario.to_string(),
        "d_a": report.d_a,
        "d_e": report.d_e,
        "half_wavelength": report.half_wavelength,
        "oem_interval": report.oem_interval,
        "swapped_interval": report.swapped_interval,
        "units": "meters",
    });
    emit_record("scenario", &record, json!({ "config": cfg.to_json_value() }), a.out.as_deref())
}
