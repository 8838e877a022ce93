//! Scenario configuration: defaults, flat JSON files and validation.

use std::path::Path;

use pa_core::channel::PhysicalConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Link model used by the selection experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Outage,
    Fbl,
}

/// Rate policy of the blocklength-sweep experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Fig3Policy {
    Adaptive,
    Fixed,
}

/// Rate policy of the average-error experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Fig4Policy {
    ThroughputOptimal,
    OutageOptimal,
    Capacity,
    Fixed,
}

/// Every experiment input. All keys are optional in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Hz.
    pub carrier_frequency: f64,
    /// Seconds between the PA estimate and the RA transmission.
    pub processing_time: f64,
    /// m/s.
    pub propagation_speed: f64,
    /// PA-to-RA separations of the single-array experiments, in wavelengths.
    pub separations_wavelengths: Vec<f64>,
    pub snr_db: f64,
    pub target_throughput_npcu: Option<f64>,
    pub codeword_length: u64,
    /// `[min, max, step]` in km/h.
    pub speed_grid_kmh: [f64; 3],
    pub seed: u64,
    pub mode: Mode,
    /// Evaluate outage throughput by Monte Carlo instead of quadrature.
    pub monte_carlo: bool,
    pub mc_draws: usize,
    pub error_draws: usize,
    /// Add each separation's zero-mismatch speed to the required-SNR sweep.
    pub fig2_include_matched_speeds: bool,
    pub fig3_lengths: Vec<u64>,
    pub fig3_sigmas: Vec<f64>,
    pub fig3_rate_policy: Fig3Policy,
    pub fig4_snrs_db: Vec<f64>,
    pub fig4_speeds_kmh: Vec<f64>,
    pub fig4_rate_policy: Fig4Policy,
    /// Rate used by the fixed-rate policies, npcu.
    pub fixed_rate: Option<f64>,
    pub arrays_wavelengths: Vec<Vec<f64>>,
    /// Offsets added to every separation of each array, in wavelengths.
    pub middle_shifts_wavelengths: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            carrier_frequency: 2.68e9,
            processing_time: 5e-3,
            propagation_speed: 3e8,
            separations_wavelengths: vec![1.5],
            snr_db: 20.0,
            target_throughput_npcu: Some(5.0),
            codeword_length: 300,
            speed_grid_kmh: [100.0, 140.0, 0.25],
            seed: 0,
            mode: Mode::Outage,
            monte_carlo: false,
            mc_draws: 10_000,
            error_draws: 100_000,
            fig2_include_matched_speeds: true,
            fig3_lengths: vec![50, 100, 200, 300, 400, 600, 800, 1000, 1500, 2000],
            fig3_sigmas: vec![0.1, 0.3, 0.5],
            fig3_rate_policy: Fig3Policy::Adaptive,
            fig4_snrs_db: (0..=15).map(|k| 2.0 * k as f64).collect(),
            fig4_speeds_kmh: vec![110.0, 124.0],
            fig4_rate_policy: Fig4Policy::ThroughputOptimal,
            fixed_rate: None,
            arrays_wavelengths: vec![
                vec![1.5],
                vec![1.6, 1.5, 1.4],
                vec![1.62, 1.56, 1.5, 1.44, 1.38],
            ],
            middle_shifts_wavelengths: vec![0.0],
        }
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn positive(name: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

fn nonempty<T>(name: &str, xs: &[T]) -> Result<(), ConfigError> {
    if xs.is_empty() {
        Err(invalid(format!("{name} must not be empty")))
    } else {
        Ok(())
    }
}

impl ScenarioConfig {
    /// Reads a config file; missing keys take their defaults.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse {
                path: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|source| ConfigError::Parse {
            path: "<json>".into(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("carrier_frequency", self.carrier_frequency)?;
        positive("processing_time", self.processing_time)?;
        positive("propagation_speed", self.propagation_speed)?;
        nonempty("separations_wavelengths", &self.separations_wavelengths)?;
        for &s in &self.separations_wavelengths {
            positive("separations_wavelengths entry", s)?;
        }
        if !self.snr_db.is_finite() {
            return Err(invalid("snr_db must be finite"));
        }
        if let Some(t) = self.target_throughput_npcu {
            if !(t.is_finite() && t >= 0.0) {
                return Err(invalid(format!(
                    "target_throughput_npcu must be >= 0, got {t}"
                )));
            }
        }
        if self.codeword_length == 0 {
            return Err(invalid("codeword_length must be at least 1"));
        }
        self.speeds_kmh()?;
        if self.mc_draws < 2 || self.error_draws < 2 {
            return Err(invalid("Monte Carlo draw counts must be at least 2"));
        }
        nonempty("fig3_lengths", &self.fig3_lengths)?;
        if self.fig3_lengths.contains(&0) {
            return Err(invalid("fig3_lengths entries must be at least 1"));
        }
        nonempty("fig3_sigmas", &self.fig3_sigmas)?;
        for &s in &self.fig3_sigmas {
            if !(0.0..=1.0).contains(&s) {
                return Err(invalid(format!(
                    "fig3_sigmas entries must lie in [0, 1], got {s}"
                )));
            }
        }
        nonempty("fig4_snrs_db", &self.fig4_snrs_db)?;
        if self.fig4_snrs_db.iter().any(|x| !x.is_finite()) {
            return Err(invalid("fig4_snrs_db entries must be finite"));
        }
        nonempty("fig4_speeds_kmh", &self.fig4_speeds_kmh)?;
        if self
            .fig4_speeds_kmh
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(invalid("fig4_speeds_kmh entries must be >= 0"));
        }
        let needs_rate = self.fig3_rate_policy == Fig3Policy::Fixed
            || self.fig4_rate_policy == Fig4Policy::Fixed;
        match self.fixed_rate {
            Some(r) if !(r.is_finite() && r >= 0.0) => {
                return Err(invalid(format!("fixed_rate must be >= 0, got {r}")));
            }
            None if needs_rate => {
                return Err(invalid("a fixed rate policy needs fixed_rate"));
            }
            _ => {}
        }
        nonempty("arrays_wavelengths", &self.arrays_wavelengths)?;
        nonempty("middle_shifts_wavelengths", &self.middle_shifts_wavelengths)?;
        for array in &self.arrays_wavelengths {
            nonempty("arrays_wavelengths entry", array)?;
            for &shift in &self.middle_shifts_wavelengths {
                for &s in array {
                    positive("shifted array separation", s + shift)?;
                }
            }
        }
        Ok(())
    }

    pub fn physical(&self) -> PhysicalConfig {
        PhysicalConfig {
            carrier_frequency: self.carrier_frequency,
            propagation_speed: self.propagation_speed,
            processing_time: self.processing_time,
        }
    }

    /// Uniform speed grid from `speed_grid_kmh`, endpoints included.
    pub fn speeds_kmh(&self) -> Result<Vec<f64>, ConfigError> {
        let [lo, hi, step] = self.speed_grid_kmh;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi >= lo) {
            return Err(invalid(format!(
                "speed grid needs 0 <= min <= max, got [{lo}, {hi}]"
            )));
        }
        positive("speed grid step", step)?;
        let n = ((hi - lo) / step + 1e-9).floor();
        if n > 1e6 {
            return Err(invalid("speed grid has more than a million points"));
        }
        Ok((0..=n as usize).map(|k| lo + k as f64 * step).collect())
    }

    /// Speed grid plus, when enabled, the zero-mismatch speeds of the
    /// separations that fall inside it; sorted ascending.
    pub fn fig2_speeds_kmh(&self) -> Result<Vec<f64>, ConfigError> {
        let mut speeds = self.speeds_kmh()?;
        if self.fig2_include_matched_speeds {
            let phys = self.physical();
            let [lo, hi, _] = self.speed_grid_kmh;
            for &m in &self.separations_wavelengths {
                let v = phys.matched_speed(m * phys.wavelength()) * 3.6;
                if v >= lo && v <= hi && !speeds.iter().any(|s| (s - v).abs() < 1e-9) {
                    speeds.push(v);
                }
            }
            speeds.sort_by(|a, b| a.total_cmp(b));
        }
        Ok(speeds)
    }

    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }
}
