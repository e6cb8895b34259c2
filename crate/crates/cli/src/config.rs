//! Run configuration: one JSON document with a section per command.
//!
//! Every field has a default, so `{}` is a valid config. Unknown keys are
//! rejected and errors carry the dotted path of the offending key.

use crate::error::CliError;
use ionsim_core::interferometer::{default_n_max, InterferometerConfig};
use ionsim_core::noise::max_slope_point;
use ionsim_core::pulse::TrapConfig;
use ionsim_core::{CompileOptions, Error, HilbertSpace};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub trap: TrapSection,
    pub interferometer: InterferometerSection,
    pub fringe: FringeSection,
    pub allan: AllanSection,
    pub compile: CompileSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSection {
    /// Motional frequency, rad/s.
    pub omega_z: f64,
    pub eta: f64,
}

/// Shared by `fringe` and `allan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferometerSection {
    pub order: u32,
    /// Beamsplitter Rabi frequency, rad/s.
    pub omega_pulse: f64,
    pub pulse_phases: [f64; 2],
    /// Phase-segment trap frequency offset, rad/s.
    pub delta_omega_z: f64,
    pub contrast: f64,
    /// Fock cutoff; `null` picks `2 n + 6`.
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FringeSection {
    pub t_start: f64,
    pub t_stop: f64,
    pub points: usize,
    /// Shots per point; 0 writes the noiseless probabilities.
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllanSection {
    pub shots: usize,
    /// Phase `dwz * t` of the operating point; `null` is the maximum-slope
    /// point `pi / (2 n)`.
    pub operating_point: Option<f64>,
    pub bin_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompileSection {
    pub time: f64,
    pub delta_t: f64,
    pub depth: usize,
    pub n_max: usize,
    pub probe_levels: usize,
    pub truncation_tol: f64,
    pub max_trotter_steps: usize,
}

impl Default for TrapSection {
    fn default() -> Self {
        let t = TrapConfig::<f64>::reference();
        Self {
            omega_z: t.omega_z,
            eta: t.eta(),
        }
    }
}

impl Default for InterferometerSection {
    fn default() -> Self {
        Self {
            order: 1,
            omega_pulse: TAU * 5e4,
            pulse_phases: [0.0, 0.0],
            delta_omega_z: TAU * 1e3,
            contrast: 1.0,
            n_max: None,
        }
    }
}

impl Default for FringeSection {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_stop: 2e-3,
            points: 101,
            shots: 0,
        }
    }
}

impl Default for AllanSection {
    fn default() -> Self {
        Self {
            shots: 10_000,
            operating_point: None,
            bin_sizes: (2..=8).map(|k| 1usize << k).collect(),
        }
    }
}

impl Default for CompileSection {
    fn default() -> Self {
        let o = CompileOptions::default();
        Self {
            time: 0.1,
            delta_t: 0.01,
            depth: 1,
            n_max: 30,
            probe_levels: o.probe_levels,
            truncation_tol: o.truncation_tol,
            max_trotter_steps: o.max_trotter_steps,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Maps a core validation error onto the config key it came from.
fn core_error(section: &str, err: Error) -> CliError {
    match err {
        Error::OutOfRange { name, message } => invalid(&format!("{section}.{name}"), message),
        Error::InvalidTrap(message) => trap_error(message),
        Error::InvalidSpace(message) => invalid(&format!("{section}.n_max"), message),
        Error::SpaceTooSmall { required, n_max } => invalid(
            &format!("{section}.n_max"),
            format!("at least {required} is needed, got {n_max}"),
        ),
        other => CliError::Core(other),
    }
}

fn trap_error(message: String) -> CliError {
    let key = if message.starts_with("omega_z") {
        "trap.omega_z"
    } else {
        "trap.eta"
    };
    invalid(key, message)
}

impl RunConfig {
    /// Parses a config document, naming the offending key on failure.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let key = if key == "." { "<root>".to_string() } else { key };
            invalid(&key, e.into_inner().to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, plus any extra input bytes.
    pub fn digest(&self, extra: &[u8]) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("config serializes"));
        h.update(extra);
        hex::encode(h.finalize())
    }

    pub fn trap(&self) -> Result<TrapConfig<f64>, CliError> {
        TrapConfig::with_eta(self.trap.omega_z, self.trap.eta).map_err(|e| core_error("trap", e))
    }

    pub fn interferometer(&self) -> Result<InterferometerConfig<f64>, CliError> {
        let s = &self.interferometer;
        if s.order == 0 {
            return Err(invalid("interferometer.order", "must be at least 1"));
        }
        let n_max = s.n_max.unwrap_or_else(|| default_n_max(s.order));
        let space = HilbertSpace::new(n_max).map_err(|e| core_error("interferometer", e))?;
        let config = InterferometerConfig {
            order: s.order,
            trap: self.trap()?,
            omega_pulse: s.omega_pulse,
            pulse_phases: (s.pulse_phases[0], s.pulse_phases[1]),
            delta_omega_z: s.delta_omega_z,
            contrast: s.contrast,
            space,
        };
        config.validate().map_err(|e| core_error("interferometer", e))?;
        if s.delta_omega_z == 0.0 {
            return Err(invalid("interferometer.delta_omega_z", "must be non-zero"));
        }
        Ok(config)
    }

    pub fn fringe_grid(&self) -> Result<Vec<f64>, CliError> {
        let f = &self.fringe;
        if !(f.t_start >= 0.0) || !f.t_start.is_finite() {
            return Err(invalid("fringe.t_start", "must be finite and non-negative"));
        }
        if !(f.t_stop > f.t_start) || !f.t_stop.is_finite() {
            return Err(invalid("fringe.t_stop", "must be finite and greater than t_start"));
        }
        if f.points < 8 {
            return Err(invalid("fringe.points", "at least 8 points are needed for a fit"));
        }
        let step = (f.t_stop - f.t_start) / (f.points - 1) as f64;
        Ok((0..f.points).map(|i| f.t_start + step * i as f64).collect())
    }

    /// Operating phase for the Allan scan.
    pub fn operating_point(&self) -> Result<f64, CliError> {
        match self.allan.operating_point {
            Some(phi) if phi.is_finite() => Ok(phi),
            Some(_) => Err(invalid("allan.operating_point", "must be finite")),
            None => Ok(max_slope_point(self.interferometer.order.max(1))),
        }
    }

    pub fn allan_checked(&self) -> Result<(), CliError> {
        let a = &self.allan;
        if a.bin_sizes.is_empty() {
            return Err(invalid("allan.bin_sizes", "list is empty"));
        }
        for &n_b in &a.bin_sizes {
            if n_b <= 2 || 2 * n_b >= a.shots {
                return Err(invalid(
                    "allan.bin_sizes",
                    format!("bin size {n_b} is outside 2 < N_b < shots / 2 (shots = {})", a.shots),
                ));
            }
        }
        Ok(())
    }

    pub fn compile_options(&self) -> Result<CompileOptions, CliError> {
        let c = &self.compile;
        for (key, v) in [("compile.time", c.time), ("compile.delta_t", c.delta_t)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(key, format!("must be positive and finite, got {v}")));
            }
        }
        if c.depth == 0 {
            return Err(invalid("compile.depth", "must be at least 1"));
        }
        if !(c.truncation_tol > 0.0) {
            return Err(invalid("compile.truncation_tol", "must be positive"));
        }
        let space = HilbertSpace::new(c.n_max).map_err(|e| core_error("compile", e))?;
        Ok(CompileOptions {
            trap: self.trap()?,
            space: Some(space),
            probe_levels: c.probe_levels,
            truncation_tol: c.truncation_tol,
            max_trotter_steps: c.max_trotter_steps,
        })
    }
}
