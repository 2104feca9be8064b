//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 1 for I/O problems.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, ConfigError, ScenarioConfig};
use crate::error::{LogicError, SimError};
use crate::logic::{
    classify_gate, run_case, skew_tolerance, sweep_vertex_resistance, truth_table, GateKind, TruthTable,
};
use crate::network::build_merge_topology;
use crate::units::{parse_quantity, Dimension};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Bisection resolution of regime boundaries.
pub const BOUNDARY_RESOLUTION: f64 = 1e6;

const SKEW_RESOLUTION: f64 = 10e-6;
const MAX_SKEW_PROBE: f64 = 5e-3;

#[derive(Debug, Parser)]
#[command(name = "dendrite-vertex", version, about = "Active dendrite vertex logic simulator")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for CSV output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Remove the vertex channel sources.
    #[arg(long, global = true)]
    pub sources_off: bool,
    /// Lag of input B behind input A (bare numbers are milliseconds).
    #[arg(long, global = true)]
    pub skew: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print lumped segment parameters derived from geometry and membrane constants.
    Derive,
    /// Simulate once and write waveforms.csv and events.csv.
    Run,
    /// Evaluate the four input combinations and name the gate.
    TruthTable,
    /// Map the gate as a function of vertex series resistance.
    Sweep {
        /// `lo:hi`, e.g. `10M:400M` (bare numbers are ohms).
        #[arg(long, default_value = "10M:400M")]
        r_range: String,
        /// Coarse grid step (bare numbers are ohms).
        #[arg(long, default_value = "10M")]
        step: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<LogicError> for CliError {
    fn from(e: LogicError) -> Self {
        match e {
            LogicError::Sim(SimError::BlowUp { .. }) => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        LogicError::from(e).into()
    }
}

/// Reads the scenario and applies command-line overrides.
pub fn load_scenario(common: &CommonArgs) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| CliError::Config(format!("{}:{e}", path.display())))?
        }
        None => ScenarioConfig::default(),
    };
    if common.sources_off {
        cfg.topology.vertex_sources = false;
    }
    if let Some(skew) = &common.skew {
        cfg.stimulus.drive.skew = parse_with_default_unit(skew, Dimension::Time, 1e-3)
            .map_err(|m| CliError::Config(format!("--skew: {m}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_with_default_unit(text: &str, dim: Dimension, bare_scale: f64) -> Result<f64, String> {
    let t = text.trim();
    let bare = t.parse::<f64>().ok();
    match bare {
        Some(v) => Ok(v * bare_scale),
        None => parse_quantity(t, dim).map_err(|e| e.message),
    }
}

/// Parses `lo:hi` with resistance suffixes.
pub fn parse_range(text: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = text.split_once(':').ok_or_else(|| format!("expected lo:hi, found `{text}`"))?;
    let lo = parse_quantity(lo, Dimension::Resistance).map_err(|e| e.message)?;
    let hi = parse_quantity(hi, Dimension::Resistance).map_err(|e| e.message)?;
    if !(lo > 0.0 && hi >= lo) {
        return Err(format!("range must be positive and ascending, found `{text}`"));
    }
    Ok((lo, hi))
}

pub fn execute<W: Write>(cli: &Cli, stdout: &mut W) -> Result<(), CliError> {
    let cfg = load_scenario(&cli.common)?;
    match &cli.command {
        Command::Derive => cmd_derive(&cfg, stdout),
        Command::Run => cmd_run(&cfg, cli.common.out.as_deref(), stdout),
        Command::TruthTable => cmd_truth_table(&cfg, stdout),
        Command::Sweep { r_range, step } => {
            let range = parse_range(r_range).map_err(|m| CliError::Config(format!("--r-range: {m}")))?;
            let step = parse_quantity(step, Dimension::Resistance)
                .map_err(|e| CliError::Config(format!("--step: {}", e.message)))?;
            cmd_sweep(&cfg, range, step, cli.common.out.as_deref(), stdout)
        }
    }
}

pub fn cmd_derive<W: Write>(cfg: &ScenarioConfig, out: &mut W) -> Result<(), CliError> {
    let seg = cfg.segment()?;
    let g = &cfg.geometry;
    let m = &cfg.membrane;
    writeln!(out, "# geometry")?;
    writeln!(out, "length      {:>10.4} um", g.length * 1e4)?;
    writeln!(out, "diameter    {:>10.4} um", g.diameter * 1e4)?;
    writeln!(out, "# segment")?;
    writeln!(out, "C           {:>10.4} pF", seg.cap * 1e12)?;
    writeln!(out, "R_L         {:>10.4} MOhm", seg.r_leak * 1e-6)?;
    writeln!(out, "R           {:>10.4} MOhm", seg.r_series * 1e-6)?;
    writeln!(out, "I_Na        {:>10.4} nA", seg.i_na * 1e9)?;
    writeln!(out, "I_K         {:>10.4} nA", seg.i_k * 1e9)?;
    writeln!(out, "V_REST      {:>10.4} mV", m.v_rest * 1e3)?;
    writeln!(out, "V_TRIG      {:>10.4} mV", m.v_trig * 1e3)?;
    writeln!(out, "V_MAX       {:>10.4} mV", m.v_max * 1e3)?;
    writeln!(out, "V_MIN       {:>10.4} mV", m.v_min * 1e3)?;
    Ok(())
}

pub fn cmd_run<W: Write>(cfg: &ScenarioConfig, dir: Option<&Path>, out: &mut W) -> Result<(), CliError> {
    let topo = build_merge_topology(&cfg.merge_params()?).map_err(|e| CliError::Config(e.to_string()))?;
    let (a, b) = cfg.stimulus.inputs.flags();
    let w = run_case(&topo, &cfg.stimulus.drive, a, b, &cfg.sim, &cfg.membrane)?;
    let dir = dir.unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let wave_path = dir.join("waveforms.csv");
    let event_path = dir.join("events.csv");
    w.write_waveform_csv(io::BufWriter::new(fs::File::create(&wave_path)?))?;
    w.write_events_csv(io::BufWriter::new(fs::File::create(&event_path)?))?;
    writeln!(out, "wrote {} and {}", wave_path.display(), event_path.display())?;
    writeln!(out, "{} events", w.events.len())?;
    Ok(())
}

pub fn cmd_truth_table<W: Write>(cfg: &ScenarioConfig, out: &mut W) -> Result<(), CliError> {
    let p = cfg.merge_params()?;
    let topo = build_merge_topology(&p).map_err(|e| CliError::Config(e.to_string()))?;
    let tt = truth_table(&topo, &cfg.stimulus.drive, &cfg.sim, &cfg.membrane)?;
    writeln!(
        out,
        "# r_vertex = {:.4} MOhm, vertex sources {}",
        p.r_vertex * 1e-6,
        if p.vertex_sources { "on" } else { "off" }
    )?;
    writeln!(out, "A_1 A_11 | A_N")?;
    for (a, b) in TruthTable::inputs() {
        writeln!(out, "  {}    {}  |  {}", a as u8, b as u8, tt.get(a, b) as u8)?;
    }
    let gate = classify_gate(&tt);
    writeln!(out, "gate: {gate}")?;
    if gate == GateKind::Xor {
        let tol = skew_tolerance(
            &topo,
            &cfg.stimulus.drive,
            SKEW_RESOLUTION,
            MAX_SKEW_PROBE,
            &cfg.sim,
            &cfg.membrane,
        )?;
        if let Some(tol) = tol {
            writeln!(out, "skew tolerance: {:.3} ms", tol * 1e3)?;
        }
    }
    Ok(())
}

pub fn cmd_sweep<W: Write>(
    cfg: &ScenarioConfig,
    range: (f64, f64),
    step: f64,
    dir: Option<&Path>,
    out: &mut W,
) -> Result<(), CliError> {
    let base = cfg.sweep_base()?;
    let report = sweep_vertex_resistance(&base, range, step, BOUNDARY_RESOLUTION)?;
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join("regimes.csv");
            report.write_csv(io::BufWriter::new(fs::File::create(&path)?))?;
            writeln!(out, "wrote {}", path.display())?;
            for i in &report.intervals {
                writeln!(
                    out,
                    "{:>8}  {:.3} .. {:.3} MOhm",
                    i.gate.name(),
                    i.r_low * 1e-6,
                    i.r_high * 1e-6
                )?;
            }
        }
        None => report.write_csv(&mut *out)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("10M:400M").unwrap(), (10e6, 400e6));
        assert_eq!(parse_range("1e7:2e7").unwrap(), (1e7, 2e7));
        assert!(parse_range("400M:10M").is_err());
        assert!(parse_range("10M").is_err());
    }

    #[test]
    fn skew_defaults_to_milliseconds() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-18;
        assert!(close(parse_with_default_unit("0.02", Dimension::Time, 1e-3).unwrap(), 20e-6));
        assert!(close(parse_with_default_unit("20 us", Dimension::Time, 1e-3).unwrap(), 20e-6));
    }

    #[test]
    fn derive_prints_table_values() {
        let mut buf = Vec::new();
        cmd_derive(&ScenarioConfig::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("C              15.7080 pF"), "{text}");
        assert!(text.contains("I_K             0.9550 nA"), "{text}");
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        let blow = SimError::BlowUp {
            node: crate::network::NodeId(3),
            time: 1e-3,
            voltage: 2.0,
        };
        assert_eq!(CliError::from(blow).exit_code(), EXIT_NUMERIC);
        let cfg = ConfigError::Invalid {
            key: "sim.dt".into(),
            reason: "x".into(),
        };
        assert_eq!(CliError::from(cfg).exit_code(), EXIT_CONFIG);
    }
}
