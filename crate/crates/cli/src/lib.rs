//! Command-line front end for `cavmag-core`.
//!
//! Exit codes: 0 on success, 2 for invalid input or configuration, 3 when
//! a numerical fit does not converge, 1 for output I/O failures.

pub mod config;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use cavmag_core::analysis::{
    extract_peaks, field_linewidth, fit_avoided_crossing, fit_t4_trend, linewidth_estimate,
    FieldWindow, FitReport, TemperatureUnit, TrendSign,
};
use cavmag_core::phase::{phase_map, DEFAULT_BOUNDARIES_APPROXIMATE};
use cavmag_core::spectra::io::{read_csv, write_csv, write_csv_db};
use cavmag_core::spectra::{add_noise, synthesize_map, vertical_cut, MapMetadata};
use cavmag_core::{
    coupling_regime, magnon_branches, spin_flop_field, CouplingParams, Error, LineshapeFailure,
    RegimeReport, TransmissionMap, GYROMAGNETIC_PER_G,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use config::{Range, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Output(_) => 1,
        }
    }

    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{what}: {m}")),
            CliError::NotConverged(m) => CliError::NotConverged(format!("{what}: {m}")),
            CliError::Output(m) => CliError::Output(format!("{what}: {m}")),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Lineshape(LineshapeFailure::NotConverged) | Error::NonPhysicalTrend(_) => {
                CliError::NotConverged(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

fn output_err(e: io::Error) -> CliError {
    CliError::Output(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "cavmag",
    version,
    about = "Cavity-magnon polariton simulation and analysis"
)]
pub struct Cli {
    /// JSON run configuration; defaults apply to anything not given.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resonance branches versus field.
    Dispersion {
        /// Field grid START:STOP:STEP in tesla.
        #[arg(long, allow_hyphen_values = true)]
        field: Option<Range>,
    },
    /// Synthesise a transmission map (CSV plus a `.meta.json` sidecar next to --out).
    Sweep {
        /// Noise level in dB, overriding the config.
        #[arg(long)]
        noise_db: Option<f64>,
        /// Write 10·log10 of the transmission instead of linear power.
        #[arg(long)]
        db: bool,
    },
    /// Fit the polariton branches to the peaks of a map.
    Fit {
        map: PathBuf,
        /// Free parameters, e.g. `G,f_afmr0`.
        #[arg(long)]
        free: Option<String>,
        /// Field window LO:HI in tesla.
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        #[arg(long)]
        min_prominence: Option<f64>,
    },
    /// Field-domain linewidth of a map at a fixed frequency.
    Linewidth {
        map: PathBuf,
        /// Probe frequency in GHz.
        #[arg(long)]
        freq: f64,
    },
    /// Fit `A ± B·T^p` to a `temperature,value` CSV.
    Trend {
        points: PathBuf,
        /// `plus` for broadening, `minus` for a decreasing quantity.
        #[arg(long)]
        sign: String,
        /// Fit the exponent instead of fixing it at 4.
        #[arg(long)]
        free_exponent: bool,
        /// Temperature unit of the input, K or mK.
        #[arg(long, default_value = "K")]
        unit: String,
    },
    /// Rasterised magnetic phase map.
    PhaseMap {
        /// Field grid START:STOP:STEP in tesla.
        #[arg(long, allow_hyphen_values = true)]
        field: Option<Range>,
        /// Temperature grid START:STOP:STEP in kelvin.
        #[arg(long, allow_hyphen_values = true)]
        temperature: Option<Range>,
    },
}

/// Run a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Dispersion { field } => {
            let field = field.unwrap_or(config.dispersion.field);
            cmd_dispersion(&config, field, cli.format.unwrap_or(Format::Csv), out)
        }
        Command::Sweep { noise_db, db } => {
            if cli.format == Some(Format::Json) {
                return Err(CliError::input(
                    "sweep writes CSV with a JSON sidecar; --format json is not supported",
                ));
            }
            if let Some(n) = noise_db {
                config.sweep.noise_db = n;
                config.validate()?;
            }
            cmd_sweep(&config, db, out)
        }
        Command::Fit {
            map,
            free,
            window,
            min_prominence,
        } => {
            if let Some(free) = free {
                config.fit.free = free;
            }
            if let Some(w) = window {
                config.fit.window = parse_window(&w)?;
            }
            if let Some(p) = min_prominence {
                config.fit.min_prominence = p;
            }
            config.validate()?;
            cmd_fit(&config, &map, cli.format.unwrap_or(Format::Json), out)
        }
        Command::Linewidth { map, freq } => {
            cmd_linewidth(&config, &map, freq, cli.format.unwrap_or(Format::Json), out)
        }
        Command::Trend {
            points,
            sign,
            free_exponent,
            unit,
        } => {
            let sign: TrendSign = sign
                .parse()
                .map_err(|e: Error| CliError::input(e.to_string()))?;
            let unit: TemperatureUnit = unit
                .parse()
                .map_err(|e: Error| CliError::input(e.to_string()))?;
            cmd_trend(
                &points,
                sign,
                free_exponent,
                unit,
                cli.format.unwrap_or(Format::Json),
                out,
            )
        }
        Command::PhaseMap { field, temperature } => {
            let field = field.unwrap_or(config.phase_map.field);
            let temperature = temperature.unwrap_or(config.phase_map.temperature);
            cmd_phase_map(
                &config,
                field,
                temperature,
                cli.format.unwrap_or(Format::Csv),
                out,
            )
        }
    }
}

fn parse_window(s: &str) -> Result<FieldWindow, CliError> {
    let bad = || CliError::input(format!("--window: expected LO:HI in tesla, got `{s}`"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo = lo.trim().parse().map_err(|_| bad())?;
    let hi = hi.trim().parse().map_err(|_| bad())?;
    Ok(FieldWindow { lo, hi })
}

/// Buffered writer to `path`, or to stdout.
fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f =
                File::create(p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Output(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(output_err)
}

/// Sidecar path for a CSV output: `map.csv` → `map.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
struct Grid {
    n_fields: usize,
    n_freqs: usize,
}

/// Read a map CSV. When a sweep sidecar sits next to it, the grid shape
/// recorded there must match, which catches files cut at a row boundary.
fn open_map(path: &Path) -> Result<TransmissionMap, CliError> {
    let name = path.display().to_string();
    let f = File::open(path).map_err(|e| CliError::input(format!("{name}: {e}")))?;
    let map = read_csv(BufReader::new(f)).map_err(|e| CliError::from(e).context(&name))?;
    let side = sidecar_path(path);
    if side != path && side.exists() {
        #[derive(serde::Deserialize)]
        struct Partial {
            grid: Grid,
        }
        let text = std::fs::read_to_string(&side)
            .map_err(|e| CliError::input(format!("{}: {e}", side.display())))?;
        let expected = serde_json::from_str::<Partial>(&text)
            .map_err(|e| CliError::input(format!("{}: {e}", side.display())))?
            .grid;
        let found = Grid {
            n_fields: map.n_fields(),
            n_freqs: map.n_freqs(),
        };
        if found != expected {
            return Err(CliError::input(format!(
                "{name}: truncated or altered: sidecar records {}x{} (fields x freqs), file holds {}x{}",
                expected.n_fields, expected.n_freqs, found.n_fields, found.n_freqs
            )));
        }
    }
    Ok(map)
}

#[derive(Serialize)]
struct DispersionRow {
    field_tesla: f64,
    lower_ghz: f64,
    upper_ghz: f64,
    beyond_spin_flop: bool,
}

#[derive(Serialize)]
struct DispersionReport {
    spin_flop_field_tesla: f64,
    rows: Vec<DispersionRow>,
}

pub fn cmd_dispersion(
    config: &RunConfig,
    field: Range,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let fields = field.values("dispersion.field")?;
    field.non_negative("dispersion.field")?;
    let mut rows = Vec::with_capacity(fields.len());
    for b in fields {
        let m = magnon_branches(&config.spins, b)?;
        rows.push(DispersionRow {
            field_tesla: b,
            lower_ghz: m.branches.lower,
            upper_ghz: m.branches.upper,
            beyond_spin_flop: m.clamped,
        });
    }
    match format {
        Format::Json => write_json(
            &DispersionReport {
                spin_flop_field_tesla: spin_flop_field(&config.spins),
                rows,
            },
            out,
        ),
        Format::Csv => {
            let mut w = open_output(out)?;
            let mut body = || -> io::Result<()> {
                writeln!(w, "field_T,lower_GHz,upper_GHz,spin_flop")?;
                for r in &rows {
                    writeln!(
                        w,
                        "{},{},{},{}",
                        r.field_tesla,
                        r.lower_ghz,
                        r.upper_ghz,
                        u8::from(r.beyond_spin_flop)
                    )?;
                }
                w.flush()
            };
            body().map_err(output_err)
        }
    }
}

/// Sidecar written next to a synthesised map.
#[derive(Serialize)]
struct SweepSidecar<'a> {
    grid: Grid,
    metadata: &'a MapMetadata,
    run_config: &'a RunConfig,
}

pub fn cmd_sweep(config: &RunConfig, db: bool, out: Option<&Path>) -> Result<(), CliError> {
    let fields = config.sweep.field.values("sweep.field")?;
    let freqs = config.sweep.freq.values("sweep.freq")?;
    let mut map = synthesize_map(&fields, &freqs, &config.system())?;
    if config.sweep.noise_db > 0.0 {
        map = add_noise(&map, config.sweep.noise_db, config.seed)?;
    }
    let mut w = open_output(out)?;
    if db {
        write_csv_db(&map, &mut w).map_err(output_err)?;
    } else {
        write_csv(&map, &mut w).map_err(output_err)?;
    }
    if let Some(path) = out {
        let sidecar = SweepSidecar {
            grid: Grid {
                n_fields: map.n_fields(),
                n_freqs: map.n_freqs(),
            },
            metadata: map.metadata().expect("synthesised maps carry metadata"),
            run_config: config,
        };
        write_json(&sidecar, Some(&sidecar_path(path)))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FitOutput {
    fit: FitReport,
    /// Regime at the fitted coupling, against the cavity's own frequency.
    regime: RegimeReport,
}

pub fn cmd_fit(
    config: &RunConfig,
    map_path: &Path,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let map = open_map(map_path)?;
    let peaks = extract_peaks(&map, config.fit.min_prominence)?;
    let free = config.free_mask()?;
    let report = fit_avoided_crossing(
        &peaks,
        &config.spins,
        &config.cavity,
        &free,
        config.fit.window,
    )?;
    let g = report.value("G").unwrap_or(config.coupling.big_g);
    let mut cavity = config.cavity;
    if let Some(fc) = report.value("f_cavity") {
        cavity.f_cavity = fc;
    }
    let regime = coupling_regime(
        &CouplingParams::new(g),
        &cavity,
        config.loss().magnon_linewidth,
    );
    let converged = report.converged;
    let output = FitOutput {
        fit: report,
        regime,
    };
    match format {
        Format::Json => write_json(&output, out)?,
        Format::Csv => {
            let mut w = open_output(out)?;
            let mut body = || -> io::Result<()> {
                writeln!(w, "parameter,value,uncertainty")?;
                for ((name, v), s) in output
                    .fit
                    .parameters
                    .iter()
                    .zip(&output.fit.values)
                    .zip(&output.fit.uncertainties)
                {
                    writeln!(w, "{name},{v},{s}")?;
                }
                w.flush()
            };
            body().map_err(output_err)?;
        }
    }
    if converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "fit did not converge after {} iterations (gradient norm {:e})",
            output.fit.iterations, output.fit.gradient_norm
        )))
    }
}

#[derive(Serialize)]
struct LinewidthOutput {
    probe_freq_ghz: f64,
    center_tesla: f64,
    gamma_tesla: f64,
    gamma_ghz: f64,
    conversion_ghz_per_tesla: f64,
    cavity_weight: f64,
    magnon_linewidth_ghz: f64,
}

pub fn cmd_linewidth(
    config: &RunConfig,
    map_path: &Path,
    freq: f64,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let map = open_map(map_path)?;
    let cut = vertical_cut(&map, freq)?;
    let lor = field_linewidth(&cut.points)?;
    let est = linewidth_estimate(lor.fwhm, lor.center, cut.freq, &config.system())?;
    let output = LinewidthOutput {
        probe_freq_ghz: cut.freq,
        center_tesla: lor.center,
        gamma_tesla: est.gamma_tesla,
        gamma_ghz: est.gamma_ghz,
        conversion_ghz_per_tesla: config.spins.g_factor * GYROMAGNETIC_PER_G,
        cavity_weight: est.cavity_weight,
        magnon_linewidth_ghz: est.magnon_linewidth_ghz,
    };
    match format {
        Format::Json => write_json(&output, out),
        Format::Csv => {
            let mut w = open_output(out)?;
            let mut body = || -> io::Result<()> {
                writeln!(
                    w,
                    "probe_freq_GHz,center_T,gamma_T,gamma_GHz,magnon_linewidth_GHz"
                )?;
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    output.probe_freq_ghz,
                    output.center_tesla,
                    output.gamma_tesla,
                    output.gamma_ghz,
                    output.magnon_linewidth_ghz
                )?;
                w.flush()
            };
            body().map_err(output_err)
        }
    }
}

/// `temperature,value` rows; blank lines, `#` comments and a non-numeric
/// first line (header) are skipped.
pub fn read_points<R: BufRead>(input: R) -> Result<Vec<(f64, f64)>, CliError> {
    let mut points = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| CliError::input(format!("line {n}: {e}")))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<(f64, f64)> = match fields.as_slice() {
            [t, y] => t.parse().ok().zip(y.parse().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => points.push(p),
            None if points.is_empty() && n == 1 => continue,
            None => {
                return Err(CliError::input(format!(
                    "line {n}: expected `temperature,value`, got `{line}`"
                )))
            }
        }
    }
    Ok(points)
}

pub fn cmd_trend(
    path: &Path,
    sign: TrendSign,
    exponent_free: bool,
    unit: TemperatureUnit,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let f = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let points =
        read_points(BufReader::new(f)).map_err(|e| e.context(&path.display().to_string()))?;
    let fit = fit_t4_trend(&points, sign, exponent_free, unit)?;
    match format {
        Format::Json => write_json(&fit, out),
        Format::Csv => {
            let mut w = open_output(out)?;
            let mut body = || -> io::Result<()> {
                writeln!(w, "offset,coefficient,exponent,residual_rms")?;
                writeln!(
                    w,
                    "{},{},{},{}",
                    fit.offset, fit.coefficient, fit.exponent, fit.residual_rms
                )?;
                w.flush()
            };
            body().map_err(output_err)
        }
    }
}

#[derive(Serialize)]
struct PhaseCell {
    field_tesla: f64,
    temperature_kelvin: f64,
    phase: cavmag_core::Phase,
}

#[derive(Serialize)]
struct PhaseMapOutput {
    approximate: bool,
    boundaries: cavmag_core::PhaseBoundaries,
    cells: Vec<PhaseCell>,
}

pub fn cmd_phase_map(
    config: &RunConfig,
    field: Range,
    temperature: Range,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    field.non_negative("phase_map.field")?;
    temperature.non_negative("phase_map.temperature")?;
    let fields = field.values("phase_map.field")?;
    let temps = temperature.values("phase_map.temperature")?;
    let boundaries = config.boundaries();
    let cells = phase_map(&fields, &temps, &boundaries);
    // user-supplied boundaries are still the same smooth model
    let approximate = DEFAULT_BOUNDARIES_APPROXIMATE;
    match format {
        Format::Json => write_json(
            &PhaseMapOutput {
                approximate,
                boundaries,
                cells: cells
                    .into_iter()
                    .map(|(b, t, phase)| PhaseCell {
                        field_tesla: b,
                        temperature_kelvin: t,
                        phase,
                    })
                    .collect(),
            },
            out,
        ),
        Format::Csv => {
            let mut w = open_output(out)?;
            let mut body = || -> io::Result<()> {
                writeln!(w, "field_T,temperature_K,phase")?;
                for (b, t, phase) in &cells {
                    writeln!(w, "{b},{t},{phase}")?;
                }
                w.flush()
            };
            body().map_err(output_err)?;
            if let Some(path) = out {
                #[derive(Serialize)]
                struct Sidecar {
                    approximate: bool,
                    boundaries: cavmag_core::PhaseBoundaries,
                }
                write_json(
                    &Sidecar {
                        approximate,
                        boundaries,
                    },
                    Some(&sidecar_path(path)),
                )?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::NothingToFit).code(), 2);
        assert_eq!(
            CliError::from(Error::Lineshape(LineshapeFailure::NotConverged)).code(),
            3
        );
        assert_eq!(
            CliError::from(Error::Lineshape(LineshapeFailure::NoPeak)).code(),
            2
        );
        assert_eq!(
            CliError::from(Error::Parse {
                line: 4,
                reason: "x".into()
            })
            .code(),
            2
        );
    }

    #[test]
    fn trend_points_skip_header_and_comments() {
        let text = "temperature_mK,gamma_MHz\n# comment\n100,35.0\n\n200,36.5\n";
        assert_eq!(
            read_points(text.as_bytes()).unwrap(),
            vec![(100.0, 35.0), (200.0, 36.5)]
        );
        let err = read_points("100,35\n200,abc\n".as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
    }

    #[test]
    fn window_parsing() {
        assert_eq!(
            parse_window("0.2:0.9").unwrap(),
            FieldWindow { lo: 0.2, hi: 0.9 }
        );
        assert!(parse_window("0.2").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
