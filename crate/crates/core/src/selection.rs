//! Velocity-aware receive-antenna selection.
//!
//! For a vehicle at speed `v`, each receive antenna `i` sees the mismatch
//! `d_i = |vT − d_{a,i}|`; the antenna with the highest expected throughput
//! at its own mismatch is picked.

use rayon::prelude::*;

use crate::channel::{MismatchState, PhysicalConfig};
use crate::error::{domain, ensure_nonneg, ensure_positive, Error, Result};
use crate::fbl::fbl_throughput;
use crate::rate_adapt::{expected_throughput, Estimator};

pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}

/// Separations in meters between the predictor and each receive antenna,
/// indexed 1..n in the given order.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaArray {
    separations: Vec<f64>,
}

impl AntennaArray {
    pub fn new(separations: Vec<f64>) -> Result<Self> {
        const OP: &str = "AntennaArray::new";
        if separations.is_empty() {
            return Err(domain(OP, "array must hold at least one antenna"));
        }
        for &d in &separations {
            ensure_positive(OP, "separation", d)?;
        }
        Ok(Self { separations })
    }

    /// Builds an array from separations given in wavelengths.
    pub fn from_wavelengths(multiples: &[f64], wavelength: f64) -> Result<Self> {
        Self::new(multiples.iter().map(|m| m * wavelength).collect())
    }

    pub fn separations(&self) -> &[f64] {
        &self.separations
    }

    pub fn len(&self) -> usize {
        self.separations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.separations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMode {
    Outage,
    Fbl { codeword_length: u64 },
}

/// How per-antenna throughput is evaluated. The finite-blocklength mode
/// always integrates by quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputModel {
    pub snr: f64,
    pub mode: LinkMode,
    pub estimator: Estimator,
}

impl ThroughputModel {
    pub fn outage(snr: f64) -> Self {
        Self {
            snr,
            mode: LinkMode::Outage,
            estimator: Estimator::quadrature(),
        }
    }

    pub fn throughput(&self, sigma: f64) -> Result<f64> {
        match self.mode {
            LinkMode::Outage => Ok(expected_throughput(sigma, self.snr, &self.estimator)?.value),
            LinkMode::Fbl { codeword_length } => {
                Ok(fbl_throughput(sigma, self.snr, codeword_length)?.value)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub per_antenna_throughput: Vec<f64>,
    /// 1-based; ties go to the lowest index.
    pub best_index: usize,
    pub best_throughput: f64,
    pub mismatch: Vec<MismatchState>,
}

/// Picks the antenna with the highest expected throughput at speed `speed`
/// (m/s).
pub fn select_antenna(
    array: &AntennaArray,
    speed: f64,
    phys: &PhysicalConfig,
    model: &ThroughputModel,
) -> Result<SelectionResult> {
    select_at(array, speed, phys, model, 0)
}

/// Monte Carlo draws for antenna `i` at sweep position `k` come from
/// stream `base ^ (k << 20 | i)`.
fn stream_for(base: u64, speed_index: usize, antenna_index: usize) -> u64 {
    base ^ (((speed_index as u64) << 20) | antenna_index as u64)
}

fn select_at(
    array: &AntennaArray,
    speed: f64,
    phys: &PhysicalConfig,
    model: &ThroughputModel,
    speed_index: usize,
) -> Result<SelectionResult> {
    const OP: &str = "select_antenna";
    ensure_nonneg(OP, "speed", speed)?;
    ensure_positive(OP, "P", model.snr)?;
    if array.is_empty() {
        return Err(domain(OP, "array must hold at least one antenna"));
    }
    let mut mismatch = Vec::with_capacity(array.len());
    let mut per_antenna_throughput = Vec::with_capacity(array.len());
    for (i, &sep) in array.separations().iter().enumerate() {
        let state = MismatchState::from_geometry(speed, sep, phys)?;
        let estimator = match model.estimator {
            Estimator::MonteCarlo { stream_id, .. } => {
                model
                    .estimator
                    .with_stream(stream_for(stream_id, speed_index, i))
            }
            q => q,
        };
        let m = ThroughputModel {
            estimator,
            ..*model
        };
        per_antenna_throughput.push(m.throughput(state.sigma)?);
        mismatch.push(state);
    }
    let mut best = 0;
    for (i, &eta) in per_antenna_throughput.iter().enumerate() {
        if eta > per_antenna_throughput[best] {
            best = i;
        }
    }
    Ok(SelectionResult {
        best_throughput: per_antenna_throughput[best],
        best_index: best + 1,
        per_antenna_throughput,
        mismatch,
    })
}

/// Runs [`select_antenna`] at every speed (km/h), in parallel; results keep
/// the input order.
pub fn speed_sweep(
    array: &AntennaArray,
    speeds_kmh: &[f64],
    phys: &PhysicalConfig,
    model: &ThroughputModel,
) -> Result<Vec<SelectionResult>> {
    if speeds_kmh.is_empty() {
        return Err(domain("speed_sweep", "speed list is empty"));
    }
    speeds_kmh
        .par_iter()
        .enumerate()
        .map(|(k, &v)| {
            select_at(array, kmh_to_mps(v), phys, model, k).map_err(|e| Error::AtSpeed {
                speed_kmh: v,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Mean best-antenna throughput over the speed list.
pub fn average_throughput_over_speeds(
    array: &AntennaArray,
    speeds_kmh: &[f64],
    phys: &PhysicalConfig,
    model: &ThroughputModel,
) -> Result<f64> {
    let sweep = speed_sweep(array, speeds_kmh, phys, model)?;
    Ok(sweep.iter().map(|s| s.best_throughput).sum::<f64>() / sweep.len() as f64)
}
