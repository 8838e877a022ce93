//! Experiment runners. Each returns an [`ExperimentRecord`] whose rows come
//! out in input order regardless of how many worker threads ran them.

use pa_core::channel::{MismatchState, PhysicalConfig};
use pa_core::fbl::{
    fbl_average_error, fbl_fixed_rate_throughput, fbl_throughput, FblConfig, MonteCarloConfig,
    RatePolicy,
};
use pa_core::rate_adapt::{
    expected_throughput, full_csit_throughput, linear_to_db, no_csit_throughput, required_snr,
    Estimator, SNR_BRACKET_DB,
};
use pa_core::selection::{
    kmh_to_mps, speed_sweep, AntennaArray, LinkMode, SelectionResult, ThroughputModel,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, Fig3Policy, Fig4Policy, Mode, ScenarioConfig};
use crate::record::ExperimentRecord;

/// Bisection tolerance of the required-SNR search, dB.
pub const SNR_TOL_DB: f64 = 0.01;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] pa_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn estimator(cfg: &ScenarioConfig, stream_id: u64) -> Estimator {
    if cfg.monte_carlo {
        Estimator::MonteCarlo {
            draws: cfg.mc_draws,
            seed: cfg.seed,
            stream_id,
        }
    } else {
        Estimator::quadrature()
    }
}

fn mismatch(
    cfg: &ScenarioConfig,
    kmh: f64,
    separation_wavelengths: f64,
) -> pa_core::Result<MismatchState> {
    let phys = cfg.physical();
    MismatchState::from_geometry(
        kmh_to_mps(kmh),
        separation_wavelengths * phys.wavelength(),
        &phys,
    )
}

/// Required SNR in dB, or `None` when the target is out of reach.
fn required_snr_db<F>(target: f64, f: F) -> pa_core::Result<Option<f64>>
where
    F: FnMut(f64) -> pa_core::Result<f64>,
{
    match required_snr(target, f, SNR_TOL_DB) {
        Ok(p) => Ok(Some(linear_to_db(p))),
        Err(pa_core::Error::Unreachable { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Required transmit SNR against speed for the configured separations,
/// next to the full-CSIT and no-CSIT baselines. With several antennas the
/// PA column is the best antenna's requirement. Unreachable targets are
/// written as the top of the search bracket with `unreachable = true`.
pub fn run_fig2_required_snr(cfg: &ScenarioConfig) -> Result<ExperimentRecord, RunError> {
    cfg.validate()?;
    let target = cfg
        .target_throughput_npcu
        .ok_or_else(|| ConfigError::Invalid("fig2 needs target_throughput_npcu".into()))?;
    let sentinel = SNR_BRACKET_DB.1;
    let full = required_snr_db(target, full_csit_throughput)?;
    let none = required_snr_db(target, no_csit_throughput)?;
    let speeds = cfg.fig2_speeds_kmh()?;
    let rows = speeds
        .par_iter()
        .enumerate()
        .map(|(k, &v)| -> pa_core::Result<(usize, f64, Option<f64>)> {
            let mut best: (usize, f64, Option<f64>) = (1, 0.0, None);
            for (i, &sep) in cfg.separations_wavelengths.iter().enumerate() {
                let sigma = mismatch(cfg, v, sep)?.sigma;
                let est = estimator(cfg, ((k as u64) << 20) | i as u64);
                let need =
                    required_snr_db(target, |p| Ok(expected_throughput(sigma, p, &est)?.value))?;
                let better = match (need, best.2) {
                    (Some(a), Some(b)) => a < b,
                    (Some(_), None) => true,
                    _ => i == 0,
                };
                if better {
                    best = (i + 1, sigma, need);
                }
            }
            Ok(best)
        })
        .collect::<pa_core::Result<Vec<_>>>()?;

    let mut rec = ExperimentRecord::new(
        "fig2-required-snr",
        cfg,
        vec![
            "speed_kmh",
            "best_index",
            "sigma",
            "snr_db_pa",
            "snr_db_full_csit",
            "snr_db_no_csit",
            "unreachable",
            "seed",
        ],
    );
    for (&v, (idx, sigma, need)) in speeds.iter().zip(rows) {
        let unreachable = need.is_none() || full.is_none() || none.is_none();
        rec.push(vec![
            v.into(),
            idx.into(),
            sigma.into(),
            need.unwrap_or(sentinel).into(),
            full.unwrap_or(sentinel).into(),
            none.unwrap_or(sentinel).into(),
            unreachable.into(),
            cfg.seed.into(),
        ]);
    }
    Ok(rec)
}

/// True when any row of a required-SNR record hit the sentinel.
pub fn has_unreachable(rec: &ExperimentRecord) -> bool {
    match rec.column("unreachable") {
        Some(c) => rec.rows.iter().any(|r| r[c] == true.into()),
        None => false,
    }
}

/// Finite-blocklength throughput against codeword length for each `σ`,
/// with the no-predictor column (`σ = 1`).
pub fn run_fig3_fbl_throughput(cfg: &ScenarioConfig) -> Result<ExperimentRecord, RunError> {
    cfg.validate()?;
    let p = cfg.snr_linear();
    let eval = |sigma: f64, length: u64| -> pa_core::Result<f64> {
        match cfg.fig3_rate_policy {
            Fig3Policy::Adaptive => Ok(fbl_throughput(sigma, p, length)?.value),
            Fig3Policy::Fixed => {
                let fc = FblConfig::new(length, cfg.fixed_rate.unwrap_or(0.0))?;
                Ok(fbl_fixed_rate_throughput(sigma, p, &fc)?.value)
            }
        }
    };
    let no_pa = cfg
        .fig3_lengths
        .par_iter()
        .map(|&l| eval(1.0, l))
        .collect::<pa_core::Result<Vec<_>>>()?;
    let grid: Vec<(f64, usize)> = cfg
        .fig3_sigmas
        .iter()
        .flat_map(|&s| (0..cfg.fig3_lengths.len()).map(move |j| (s, j)))
        .collect();
    let pa = grid
        .par_iter()
        .map(|&(s, j)| eval(s, cfg.fig3_lengths[j]))
        .collect::<pa_core::Result<Vec<_>>>()?;

    let mut rec = ExperimentRecord::new(
        "fig3-fbl-throughput",
        cfg,
        vec![
            "L",
            "sigma",
            "throughput_npcu_pa",
            "throughput_npcu_no_pa",
            "seed",
        ],
    );
    for (&(s, j), t) in grid.iter().zip(pa) {
        rec.push(vec![
            cfg.fig3_lengths[j].into(),
            s.into(),
            t.into(),
            no_pa[j].into(),
            cfg.seed.into(),
        ]);
    }
    Ok(rec)
}

/// Average block error against SNR for each speed at the configured
/// codeword length. Each speed has its own random stream, shared by all of
/// its SNR points.
pub fn run_fig4_fbl_error(cfg: &ScenarioConfig) -> Result<ExperimentRecord, RunError> {
    cfg.validate()?;
    let sep = cfg.separations_wavelengths[0];
    let policy = match cfg.fig4_rate_policy {
        Fig4Policy::ThroughputOptimal => RatePolicy::ThroughputOptimal,
        Fig4Policy::OutageOptimal => RatePolicy::OutageOptimal,
        Fig4Policy::Capacity => RatePolicy::Capacity,
        Fig4Policy::Fixed => RatePolicy::Fixed(cfg.fixed_rate.unwrap_or(0.0)),
    };
    let grid: Vec<(usize, f64)> = (0..cfg.fig4_speeds_kmh.len())
        .flat_map(|k| cfg.fig4_snrs_db.iter().map(move |&db| (k, db)))
        .collect();
    let rows = grid
        .par_iter()
        .map(|&(k, db)| -> pa_core::Result<(f64, _)> {
            let sigma = mismatch(cfg, cfg.fig4_speeds_kmh[k], sep)?.sigma;
            let mc = MonteCarloConfig {
                draws: cfg.error_draws,
                seed: cfg.seed,
                stream_id: k as u64,
            };
            let p = 10f64.powf(db / 10.0);
            Ok((
                sigma,
                fbl_average_error(sigma, p, cfg.codeword_length, policy, &mc)?,
            ))
        })
        .collect::<pa_core::Result<Vec<_>>>()?;

    let mut rec = ExperimentRecord::new(
        "fig4-fbl-error",
        cfg,
        vec![
            "snr_db",
            "speed_kmh",
            "sigma",
            "avg_error",
            "mc_std_err",
            "outage_prob",
            "seed",
        ],
    );
    for (&(k, db), (sigma, e)) in grid.iter().zip(rows) {
        rec.push(vec![
            db.into(),
            cfg.fig4_speeds_kmh[k].into(),
            sigma.into(),
            e.value.into(),
            e.std_error.into(),
            e.outage.into(),
            cfg.seed.into(),
        ]);
    }
    Ok(rec)
}

/// One array (after shifting) swept over the speed grid.
#[derive(Debug, Clone)]
pub struct ArraySweep {
    /// 1-based position in `arrays_wavelengths`.
    pub array_id: usize,
    pub n_antennas: usize,
    pub shift_wavelengths: f64,
    pub speeds_kmh: Vec<f64>,
    pub results: Vec<SelectionResult>,
}

impl ArraySweep {
    pub fn average(&self) -> f64 {
        self.results.iter().map(|r| r.best_throughput).sum::<f64>() / self.results.len() as f64
    }

    pub fn minimum(&self) -> f64 {
        self.results
            .iter()
            .map(|r| r.best_throughput)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Receive-antenna selection over the speed grid for every configured
/// array and separation shift.
pub fn selection_sweeps(cfg: &ScenarioConfig) -> Result<Vec<ArraySweep>, RunError> {
    cfg.validate()?;
    let phys: PhysicalConfig = cfg.physical();
    let lambda = phys.wavelength();
    let speeds = cfg.speeds_kmh()?;
    let mode = match cfg.mode {
        Mode::Outage => LinkMode::Outage,
        Mode::Fbl => LinkMode::Fbl {
            codeword_length: cfg.codeword_length,
        },
    };
    let mut sweeps = Vec::new();
    for (a, multiples) in cfg.arrays_wavelengths.iter().enumerate() {
        for (s, &shift) in cfg.middle_shifts_wavelengths.iter().enumerate() {
            let shifted: Vec<f64> = multiples.iter().map(|m| m + shift).collect();
            let array = AntennaArray::from_wavelengths(&shifted, lambda)?;
            let model = ThroughputModel {
                snr: cfg.snr_linear(),
                mode,
                estimator: estimator(cfg, ((a as u64) << 48) | ((s as u64) << 40)),
            };
            let results = speed_sweep(&array, &speeds, &phys, &model)?;
            sweeps.push(ArraySweep {
                array_id: a + 1,
                n_antennas: multiples.len(),
                shift_wavelengths: shift,
                speeds_kmh: speeds.clone(),
                results,
            });
        }
    }
    Ok(sweeps)
}

/// Per-speed selection table: best antenna and its throughput.
pub fn fig5_record(cfg: &ScenarioConfig, sweeps: &[ArraySweep]) -> ExperimentRecord {
    let lambda = cfg.physical().wavelength();
    let mut rec = ExperimentRecord::new(
        "fig5-selection-sweep",
        cfg,
        vec![
            "array_id",
            "n_antennas",
            "middle_shift_wavelengths",
            "speed_kmh",
            "best_index",
            "best_mismatch_wavelengths",
            "best_throughput_npcu",
            "seed",
        ],
    );
    for sw in sweeps {
        for (&v, r) in sw.speeds_kmh.iter().zip(&sw.results) {
            rec.push(vec![
                sw.array_id.into(),
                sw.n_antennas.into(),
                sw.shift_wavelengths.into(),
                v.into(),
                r.best_index.into(),
                (r.mismatch[r.best_index - 1].distance / lambda).into(),
                r.best_throughput.into(),
                cfg.seed.into(),
            ]);
        }
    }
    rec
}

/// Per-array summary: average and minimum best throughput over the speed
/// grid, next to the no-CSIT baseline.
pub fn fig7_record(
    cfg: &ScenarioConfig,
    sweeps: &[ArraySweep],
) -> Result<ExperimentRecord, RunError> {
    let baseline = match cfg.mode {
        Mode::Outage => no_csit_throughput(cfg.snr_linear())?,
        Mode::Fbl => fbl_throughput(1.0, cfg.snr_linear(), cfg.codeword_length)?.value,
    };
    let mut rec = ExperimentRecord::new(
        "fig7-average",
        cfg,
        vec![
            "array_id",
            "n_antennas",
            "middle_shift_wavelengths",
            "average_throughput_npcu",
            "min_throughput_npcu",
            "no_csit_average_npcu",
            "seed",
        ],
    );
    for sw in sweeps {
        rec.push(vec![
            sw.array_id.into(),
            sw.n_antennas.into(),
            sw.shift_wavelengths.into(),
            sw.average().into(),
            sw.minimum().into(),
            baseline.into(),
            cfg.seed.into(),
        ]);
    }
    Ok(rec)
}

/// Selection sweep table and summary from one set of sweeps.
pub fn run_fig5_fig6_fig7_selection(
    cfg: &ScenarioConfig,
) -> Result<(ExperimentRecord, ExperimentRecord), RunError> {
    let sweeps = selection_sweeps(cfg)?;
    Ok((fig5_record(cfg, &sweeps), fig7_record(cfg, &sweeps)?))
}
