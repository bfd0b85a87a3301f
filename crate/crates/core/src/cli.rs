//! Command-line surface: exponent sweeps, figure data, and end-to-end
//! simulations.
//!
//! Configs are flat JSON objects. Command-line flags override the matching
//! config fields. Output is locale-independent: floats are written with
//! Rust's shortest round-trip formatting.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::codec::{
    build_bsc_codebook, build_conical_codebook, build_offset_codebook, default_bsc_threshold,
    expurgate_to_peak_power, CodebookHeader, CodebookKind, DEFAULT_CODEWORD_CAP,
};
use crate::error::Error;
use crate::estimate::{
    bsc_exact_pmd, exact_pmd_log, mc_error_rates, mc_error_rates_bsc, ErrorEstimates,
};
use crate::exponents::{
    awgn_capacity, bsc_capacity, conical_exponent, converse_geometry, db_to_linear,
    decoder_geometry, derive_design_params, red_alert_exponent, ChannelParams, ConicalVariant,
    DecoderGeometry, DesignParams,
};

/// Version of the CSV and JSON layouts written by this module.
pub const SCHEMA_VERSION: u32 = 1;

const EXPONENT_POINTS: usize = 101;
const FIGURE_POINTS: usize = 201;
const DEFAULT_TRIALS: u64 = 10_000;
const DEFAULT_EPSILON_FRACTION: f64 = 0.1;

#[derive(Debug, Parser)]
#[command(
    name = "redalert",
    version,
    about = "Red-alert exponents, codebooks and error-rate simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub units: Option<Units>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Worker threads for Monte Carlo; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Sweep the AWGN exponents over 101 rates in [0, C].
    Exponent,
    /// Write the data behind a figure as CSV.
    Figure {
        #[arg(value_enum)]
        name: FigureName,
    },
    /// Build a codebook, simulate it, and write a JSON result record.
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    /// Converts a per-use quantity from nats.
    pub fn from_nats(self, x: f64) -> f64 {
        match self {
            Units::Nats => x,
            Units::Bits => x / std::f64::consts::LN_2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureName {
    Fig7,
    Fig8,
    Fig10,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    #[default]
    Awgn,
    Bsc,
}

/// Which power split and backoff the AWGN decoder thresholds assume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DecoderChoice {
    /// α = (N/P)(e^{2R} − 1), λ = 0.
    #[default]
    Ideal,
    /// The codebook's own α and λ.
    Design,
}

fn default_noise_var() -> f64 {
    1.0
}

/// Flat JSON run configuration. Quantities carry their units in the key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub channel: ChannelKind,
    pub p_avg_db: Option<f64>,
    pub p_alert_db: Option<f64>,
    /// P_alert as a linear multiple of P_avg.
    pub p_alert_factor: Option<f64>,
    #[serde(default = "default_noise_var")]
    pub noise_var: f64,
    pub crossover: Option<f64>,
    pub composition: Option<f64>,
    pub codebook: Option<CodebookKind>,
    pub n: Option<usize>,
    pub rate_nats: Option<f64>,
    pub rate_bits: Option<f64>,
    pub rate_capacity_fraction: Option<f64>,
    pub epsilon_nats: Option<f64>,
    pub epsilon_bits: Option<f64>,
    pub epsilon_capacity_fraction: Option<f64>,
    #[serde(default)]
    pub decoder: DecoderChoice,
    #[serde(default)]
    pub delta: f64,
    /// Per-symbol peak power for expurgation of the offset codebook.
    pub peak_power_limit: Option<f64>,
    pub weight_threshold: Option<usize>,
    pub codeword_cap: Option<usize>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub units: Option<Units>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config parses")
    }
}

/// Failure with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::TooManyCodewords { .. } | Error::DeclareError { .. } => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

impl RunConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::input(format!("config: {e}")))
    }

    pub fn channel_params(&self) -> CliResult<ChannelParams> {
        let p_avg_db = self.p_avg_db.unwrap_or(0.0);
        let p_avg = db_to_linear(p_avg_db);
        let p_alert = match (self.p_alert_db, self.p_alert_factor) {
            (Some(_), Some(_)) => {
                return Err(CliError::input(
                    "give at most one of p_alert_db and p_alert_factor",
                ))
            }
            (Some(db), None) => db_to_linear(db),
            (None, Some(f)) => f * p_avg,
            (None, None) => p_avg,
        };
        Ok(ChannelParams::new(p_avg, p_alert, self.noise_var)?)
    }

    fn capacity(&self) -> CliResult<f64> {
        match self.channel {
            ChannelKind::Awgn => Ok(awgn_capacity(&self.channel_params()?)),
            ChannelKind::Bsc => {
                let p = self.crossover()?;
                Ok(bsc_capacity(p))
            }
        }
    }

    fn crossover(&self) -> CliResult<f64> {
        match self.crossover {
            Some(p) if p > 0.0 && p < 0.5 => Ok(p),
            Some(p) => Err(CliError::input(format!(
                "crossover must lie in (0, ½), got {p}"
            ))),
            None => Err(CliError::input("bsc runs need a crossover")),
        }
    }

    /// The configured rate in nats, given capacity C.
    pub fn rate(&self, capacity: f64) -> CliResult<f64> {
        let given = [self.rate_nats, self.rate_bits, self.rate_capacity_fraction];
        match given.iter().flatten().count() {
            0 => {
                return Err(CliError::input(
                    "one of rate_nats, rate_bits, rate_capacity_fraction is required",
                ))
            }
            1 => {}
            _ => {
                return Err(CliError::input(
                    "give exactly one of rate_nats, rate_bits, rate_capacity_fraction",
                ))
            }
        }
        let r = self
            .rate_nats
            .or(self.rate_bits.map(|b| b * std::f64::consts::LN_2))
            .or(self.rate_capacity_fraction.map(|f| f * capacity))
            .expect("counted above");
        if !(r >= 0.0 && r.is_finite()) {
            return Err(CliError::input(format!(
                "rate must be nonnegative, got {r}"
            )));
        }
        Ok(r)
    }

    /// The configured slack in nats; 0.1·C when absent.
    pub fn epsilon(&self, capacity: f64) -> CliResult<f64> {
        let given = [
            self.epsilon_nats,
            self.epsilon_bits,
            self.epsilon_capacity_fraction,
        ];
        if given.iter().flatten().count() > 1 {
            return Err(CliError::input(
                "give at most one of epsilon_nats, epsilon_bits, epsilon_capacity_fraction",
            ));
        }
        Ok(self
            .epsilon_nats
            .or(self.epsilon_bits.map(|b| b * std::f64::consts::LN_2))
            .or(self.epsilon_capacity_fraction.map(|f| f * capacity))
            .unwrap_or(DEFAULT_EPSILON_FRACTION * capacity))
    }

    fn n(&self) -> CliResult<usize> {
        self.n
            .ok_or_else(|| CliError::input("blocklength n is required"))
    }
}

/// Exponent sweep as CSV text.
pub fn exponent_table(config: &RunConfig, units: Units) -> CliResult<String> {
    if config.channel != ChannelKind::Awgn {
        return Err(CliError::input(
            "exponent sweeps are defined for the awgn channel",
        ));
    }
    let params = config.channel_params()?;
    let c = awgn_capacity(&params);
    let mut out = String::new();
    let u = units.name();
    writeln!(
        out,
        "# redalert exponent schema={SCHEMA_VERSION} units={u} p_avg={} p_alert={} noise_var={}",
        params.p_avg, params.p_alert, params.noise_var
    )
    .unwrap();
    writeln!(
        out,
        "rate_{u},e_offset,e_conical_printed,e_conical_corrected,capacity_{u}"
    )
    .unwrap();
    for k in 0..EXPONENT_POINTS {
        let r = sweep_rate(c, k, EXPONENT_POINTS);
        let e = red_alert_exponent(&params, r)?;
        let printed = conical_exponent(&params, r, ConicalVariant::Printed)?;
        let corrected = conical_exponent(&params, r, ConicalVariant::Corrected)?;
        writeln!(
            out,
            "{},{},{},{},{}",
            units.from_nats(r),
            units.from_nats(e),
            units.from_nats(printed),
            units.from_nats(corrected),
            units.from_nats(c)
        )
        .unwrap();
    }
    Ok(out)
}

/// k-th of `points` evenly spaced rates in [0, C], hitting C exactly.
fn sweep_rate(c: f64, k: usize, points: usize) -> f64 {
    if k + 1 == points {
        c
    } else {
        c * k as f64 / (points - 1) as f64
    }
}

const OVERLAY_NOTE: &str = "# sphere-packing upper bound overlay not included";

/// Figure data as CSV text. Exponents are in nats.
pub fn figure_csv(name: FigureName) -> CliResult<String> {
    let mut out = String::new();
    match name {
        FigureName::Fig7 | FigureName::Fig8 => {
            let (db, label) = if name == FigureName::Fig7 {
                (-5.0, "fig7")
            } else {
                (15.0, "fig8")
            };
            let p = db_to_linear(db);
            let curves = [1.0, 2.0, 3.0].map(|f| ChannelParams::new(p, f * p, 1.0));
            let curves = curves.into_iter().collect::<Result<Vec<_>, _>>()?;
            let c = awgn_capacity(&curves[0]);
            writeln!(out, "# redalert figure {label} schema={SCHEMA_VERSION} p_avg_db={db} noise_var=1 exponents=nats").unwrap();
            writeln!(out, "{OVERLAY_NOTE}").unwrap();
            writeln!(out, "rate_nats,rate_bits,e_alert_1x,e_alert_2x,e_alert_3x").unwrap();
            for k in 0..FIGURE_POINTS {
                let r = sweep_rate(c, k, FIGURE_POINTS);
                write!(out, "{},{}", r, Units::Bits.from_nats(r)).unwrap();
                for params in &curves {
                    write!(out, ",{}", red_alert_exponent(params, r)?).unwrap();
                }
                out.push('\n');
            }
        }
        FigureName::Fig10 => {
            writeln!(out, "# redalert figure fig10 schema={SCHEMA_VERSION} p_alert=2*p_avg noise_var=1 exponents=nats").unwrap();
            writeln!(
                out,
                "# long format: one block of 201 rates per p_avg_db, each over its own [0, C]"
            )
            .unwrap();
            writeln!(
                out,
                "rate_nats,rate_bits,p_avg_db,offset,conical_corrected,conical_printed"
            )
            .unwrap();
            for db in [0.0, 5.0, 10.0] {
                let p = db_to_linear(db);
                let params = ChannelParams::new(p, 2.0 * p, 1.0)?;
                let c = awgn_capacity(&params);
                for k in 0..FIGURE_POINTS {
                    let r = sweep_rate(c, k, FIGURE_POINTS);
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        r,
                        Units::Bits.from_nats(r),
                        db,
                        red_alert_exponent(&params, r)?,
                        conical_exponent(&params, r, ConicalVariant::Corrected)?,
                        conical_exponent(&params, r, ConicalVariant::Printed)?
                    )
                    .unwrap();
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "channel", rename_all = "snake_case")]
pub enum RecordParams {
    Awgn {
        params: ChannelParams,
        capacity_nats: f64,
    },
    Bsc {
        crossover: f64,
        composition: f64,
        capacity_nats: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decoder", rename_all = "snake_case")]
pub enum RecordGeometry {
    ConicalShell {
        thresholds: DecoderChoice,
        delta: f64,
        #[serde(flatten)]
        geometry: DecoderGeometry,
    },
    WeightThreshold {
        weight_threshold: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub codebook: u64,
    pub trials: u64,
}

/// JSON result record of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub schema_version: u32,
    pub params: RecordParams,
    pub units: Units,
    /// Requested rate in `units`.
    pub rate: f64,
    /// (1/n) ln M of the codebook actually simulated, in `units`.
    pub realized_rate: f64,
    pub design: Option<DesignParams>,
    pub codebook: CodebookHeader,
    pub geometry: RecordGeometry,
    pub estimates: ErrorEstimates,
    pub seeds: Seeds,
    pub trials: u64,
}

impl SimulationRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }
}

/// Ideal thresholds with slack δ: converse geometry with L²/n − δ, ψ + δ.
fn ideal_geometry(params: &ChannelParams, rate: f64, delta: f64) -> CliResult<DecoderGeometry> {
    if !(delta >= 0.0) {
        return Err(CliError::input(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    let g = converse_geometry(params, rate)?;
    let l2 = g.min_distance_sq_per_dim - delta;
    let psi = g.half_angle + delta;
    if !(l2 > params.noise_var && psi < std::f64::consts::FRAC_PI_2) {
        return Err(CliError::input(format!(
            "delta = {delta} leaves no valid decoder geometry"
        )));
    }
    Ok(DecoderGeometry::from_parts(l2, psi, params.noise_var)?)
}

/// Builds the configured codebook, runs the trials and evaluates p_MD.
pub fn simulate(config: &RunConfig) -> CliResult<SimulationRecord> {
    let capacity = config.capacity()?;
    let rate = config.rate(capacity)?;
    let n = config.n()?;
    let seed = config.seed.unwrap_or(0);
    let trials = config.trials.unwrap_or(DEFAULT_TRIALS);
    let units = config.units.unwrap_or_default();
    let cap = config.codeword_cap.unwrap_or(DEFAULT_CODEWORD_CAP);
    let seeds = Seeds {
        codebook: seed,
        trials: seed,
    };
    match config.channel {
        ChannelKind::Awgn => {
            let params = config.channel_params()?;
            let epsilon = config.epsilon(capacity)?;
            let kind = config.codebook.unwrap_or(CodebookKind::Offset);
            let (cb, design) = match kind {
                CodebookKind::Offset => {
                    let design = derive_design_params(&params, n, rate, epsilon)?;
                    let mut cb = build_offset_codebook(&params, &design, seed, cap)?;
                    if let Some(limit) = config.peak_power_limit {
                        cb = expurgate_to_peak_power(&cb, limit)?.0;
                    }
                    (cb, Some(design))
                }
                CodebookKind::Conical => {
                    if config.peak_power_limit.is_some() {
                        return Err(CliError::input(
                            "peak_power_limit applies to the offset codebook",
                        ));
                    }
                    (
                        build_conical_codebook(&params, n, rate, epsilon, seed, cap)?,
                        None,
                    )
                }
                _ => {
                    return Err(CliError::input(
                        "awgn runs use the offset or conical codebook",
                    ))
                }
            };
            let geometry = match (config.decoder, design) {
                (DecoderChoice::Ideal, _) => ideal_geometry(&params, rate, config.delta)?,
                (DecoderChoice::Design, Some(d)) => {
                    decoder_geometry(&params, d.alpha, d.lambda, config.delta)?
                }
                (DecoderChoice::Design, None) => {
                    return Err(CliError::input(
                        "design thresholds need the offset codebook",
                    ))
                }
            };
            let estimates = mc_error_rates(&cb, &geometry, params.noise_var, trials, seed)?
                .with_log_p_md(exact_pmd_log(n, params.noise_var, &geometry)?);
            Ok(SimulationRecord {
                schema_version: SCHEMA_VERSION,
                params: RecordParams::Awgn {
                    params,
                    capacity_nats: capacity,
                },
                units,
                rate: units.from_nats(rate),
                realized_rate: units.from_nats((cb.m() as f64).ln() / n as f64),
                design,
                codebook: cb.header().clone(),
                geometry: RecordGeometry::ConicalShell {
                    thresholds: config.decoder,
                    delta: config.delta,
                    geometry,
                },
                estimates,
                seeds,
                trials,
            })
        }
        ChannelKind::Bsc => {
            let p = config.crossover()?;
            let q = config
                .composition
                .ok_or_else(|| CliError::input("bsc runs need a composition"))?;
            if rate > capacity {
                return Err(CliError::input(format!(
                    "rate {rate} exceeds C_BSC = {capacity}"
                )));
            }
            let kind = config.codebook.unwrap_or(CodebookKind::BscFixed);
            if !matches!(kind, CodebookKind::BscFixed | CodebookKind::BscConical) {
                return Err(CliError::input(
                    "bsc runs use the bsc_fixed or bsc_conical codebook",
                ));
            }
            let cb = build_bsc_codebook(n, rate, q, kind, seed, cap)?;
            let tau = config
                .weight_threshold
                .unwrap_or_else(|| default_bsc_threshold(n, p, q));
            let estimates = mc_error_rates_bsc(&cb, tau, p, trials, seed)?
                .with_log_p_md(bsc_exact_pmd(n, p, tau)?);
            Ok(SimulationRecord {
                schema_version: SCHEMA_VERSION,
                params: RecordParams::Bsc {
                    crossover: p,
                    composition: q,
                    capacity_nats: capacity,
                },
                units,
                rate: units.from_nats(rate),
                realized_rate: units.from_nats((cb.m() as f64).ln() / n as f64),
                design: None,
                codebook: cb.header().clone(),
                geometry: RecordGeometry::WeightThreshold {
                    weight_threshold: tau,
                },
                estimates,
                seeds,
                trials,
            })
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError {
            code: 1,
            message: format!("{}: {e}", p.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> CliResult<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if cli.trials.is_some() {
        config.trials = cli.trials;
    }
    if cli.units.is_some() {
        config.units = cli.units;
    }
    if cli.out.is_some() {
        config.out.clone_from(&cli.out);
    }
    let units = config.units.unwrap_or_default();
    let body = || -> CliResult<String> {
        match cli.command {
            Command::Exponent => exponent_table(&config, units),
            Command::Figure { name } => figure_csv(name),
            Command::Simulate => simulate(&config).map(|r| r.to_json()),
        }
    };
    let text = match cli.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::input(format!("thread pool: {e}")))?
            .install(body)?,
        None => body()?,
    };
    write_output(config.out.as_deref(), &text)
}

/// Parses `args`, runs, and reports errors on stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
