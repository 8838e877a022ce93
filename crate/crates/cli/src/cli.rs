//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, Fig3Policy, Fig4Policy, Mode, ScenarioConfig};
use crate::experiments::{
    fig5_record, fig7_record, has_unreachable, run_fig2_required_snr, run_fig3_fbl_throughput,
    run_fig4_fbl_error, selection_sweeps, RunError,
};
use crate::output::{Manifest, OutputDir};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNREACHABLE: i32 = 3;

pub const FIG2_FILE: &str = "fig2_required_snr.csv";
pub const FIG3_FILE: &str = "fig3_fbl_throughput.csv";
pub const FIG4_FILE: &str = "fig4_fbl_error.csv";
pub const FIG5_FILE: &str = "fig5_selection_sweep.csv";
pub const FIG7_FILE: &str = "fig7_average.csv";

#[derive(Debug, Parser)]
#[command(
    name = "pa-sim",
    version,
    about = "Predictor-antenna moving-relay link simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Required SNR against speed, with full-CSIT and no-CSIT baselines.
    Fig2RequiredSnr(CommonArgs),
    /// Finite-blocklength throughput against codeword length.
    Fig3FblThroughput(CommonArgs),
    /// Finite-blocklength average error against SNR.
    Fig4FblError(CommonArgs),
    /// Best antenna and throughput across the speed grid.
    Fig5SelectionSweep(CommonArgs),
    /// Average throughput over the speed grid per array.
    Fig7Average(CommonArgs),
    /// Every experiment into one output directory.
    ReproduceAll(CommonArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &CommonArgs) {
        match self {
            Command::Fig2RequiredSnr(a) => ("fig2-required-snr", a),
            Command::Fig3FblThroughput(a) => ("fig3-fbl-throughput", a),
            Command::Fig4FblError(a) => ("fig4-fbl-error", a),
            Command::Fig5SelectionSweep(a) => ("fig5-selection-sweep", a),
            Command::Fig7Average(a) => ("fig7-average", a),
            Command::ReproduceAll(a) => ("reproduce-all", a),
        }
    }
}

/// Flags shared by every subcommand. Each config key has a flag of the same
/// name in kebab case; flags override the config file, which overrides the
/// defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Estimate outage throughput by Monte Carlo instead of quadrature.
    #[arg(long)]
    pub mc: bool,

    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub carrier_frequency: Option<f64>,
    #[arg(long)]
    pub processing_time: Option<f64>,
    #[arg(long)]
    pub propagation_speed: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub separations_wavelengths: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub target_throughput_npcu: Option<f64>,
    #[arg(long)]
    pub codeword_length: Option<u64>,
    /// `min,max,step` in km/h.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub speed_grid_kmh: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub mc_draws: Option<usize>,
    #[arg(long)]
    pub error_draws: Option<usize>,
    /// `true` or `false`.
    #[arg(long)]
    pub fig2_include_matched_speeds: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    pub fig3_lengths: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    pub fig3_sigmas: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub fig3_rate_policy: Option<Fig3Policy>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub fig4_snrs_db: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub fig4_speeds_kmh: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub fig4_rate_policy: Option<Fig4Policy>,
    #[arg(long)]
    pub fixed_rate: Option<f64>,
    /// Arrays separated by `;`, separations by `,`, e.g. `1.5;1.6,1.5,1.4`.
    #[arg(long)]
    pub arrays_wavelengths: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub middle_shifts_wavelengths: Option<Vec<f64>>,
}

fn parse_arrays(text: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    text.split(';')
        .map(|group| {
            group
                .split(',')
                .map(|x| {
                    x.trim().parse::<f64>().map_err(|e| {
                        ConfigError::Invalid(format!("bad array separation {x:?}: {e}"))
                    })
                })
                .collect()
        })
        .collect()
}

impl CommonArgs {
    /// Defaults, then the config file, then flags; the result is validated.
    pub fn resolve(&self) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::from_file(path)?,
            None => ScenarioConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        set!(
            seed,
            carrier_frequency,
            processing_time,
            propagation_speed,
            separations_wavelengths,
            snr_db,
            codeword_length,
            mode,
            mc_draws,
            error_draws,
            fig2_include_matched_speeds,
            fig3_lengths,
            fig3_sigmas,
            fig3_rate_policy,
            fig4_snrs_db,
            fig4_speeds_kmh,
            fig4_rate_policy,
            middle_shifts_wavelengths
        );
        if let Some(t) = self.target_throughput_npcu {
            cfg.target_throughput_npcu = Some(t);
        }
        if let Some(r) = self.fixed_rate {
            cfg.fixed_rate = Some(r);
        }
        if let Some(g) = &self.speed_grid_kmh {
            let grid: [f64; 3] = g.as_slice().try_into().map_err(|_| {
                ConfigError::Invalid(format!("speed-grid-kmh needs min,max,step; got {g:?}"))
            })?;
            cfg.speed_grid_kmh = grid;
        }
        if let Some(text) = &self.arrays_wavelengths {
            cfg.arrays_wavelengths = parse_arrays(text)?;
        }
        if self.mc {
            cfg.monte_carlo = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    run(&cli.command)
}

pub fn run(command: &Command) -> i32 {
    let (name, args) = command.parts();
    let cfg = match args.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("pa-sim: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            eprintln!("pa-sim: --jobs must be at least 1");
            return EXIT_CONFIG;
        }
        pool = pool.num_threads(jobs);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("pa-sim: cannot start worker pool: {e}");
            return EXIT_FAILURE;
        }
    };
    match pool.install(|| execute(name, command, &cfg, &args.out)) {
        Ok(unreachable) if unreachable => EXIT_UNREACHABLE,
        Ok(_) => EXIT_OK,
        Err(RunError::Config(e)) => {
            eprintln!("pa-sim: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("pa-sim: {e}");
            EXIT_FAILURE
        }
    }
}

/// Runs one subcommand into `out`; returns whether a target was unreachable.
fn execute(
    name: &str,
    command: &Command,
    cfg: &ScenarioConfig,
    out: &std::path::Path,
) -> Result<bool, RunError> {
    let mut dir = OutputDir::create(out, Manifest::new(name, cfg))?;
    let mut unreachable = false;
    let all = matches!(command, Command::ReproduceAll(_));
    if all || matches!(command, Command::Fig2RequiredSnr(_)) {
        let rec = run_fig2_required_snr(cfg)?;
        if has_unreachable(&rec) {
            unreachable = true;
            dir.mark_unreachable();
        }
        dir.write(FIG2_FILE, &rec)?;
    }
    if all || matches!(command, Command::Fig3FblThroughput(_)) {
        dir.write(FIG3_FILE, &run_fig3_fbl_throughput(cfg)?)?;
    }
    if all || matches!(command, Command::Fig4FblError(_)) {
        dir.write(FIG4_FILE, &run_fig4_fbl_error(cfg)?)?;
    }
    let fig5 = matches!(command, Command::Fig5SelectionSweep(_));
    let fig7 = matches!(command, Command::Fig7Average(_));
    if all || fig5 || fig7 {
        let sweeps = selection_sweeps(cfg)?;
        if all || fig5 {
            dir.write(FIG5_FILE, &fig5_record(cfg, &sweeps))?;
        }
        if all || fig7 {
            dir.write(FIG7_FILE, &fig7_record(cfg, &sweeps)?)?;
        }
    }
    dir.finish()?;
    Ok(unreachable)
}
