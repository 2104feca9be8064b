//! Scenario files.
//!
//! One `section.key = value` assignment per line. `#` starts a comment.
//! Quantities accept unit suffixes (`-54 mV`, `200 MΩ`, `0.5 ms`, `500 µm`);
//! a bare number is read in SI. Keys that are not given keep their defaults,
//! and unknown keys are an error.
//!
//! ```text
//! topology.r_vertex = 200 MΩ
//! stimulus.inputs = both
//! sim.t_end = 30 ms
//! ```

use std::fmt::{self, Write as _};

use crate::engine::{Integrator, SimConfig};
use crate::error::ParamError;
use crate::logic::{DriveKind, InputDrive, SweepBase};
use crate::network::{EdgeConvention, MergeParams};
use crate::segment::{derive_electrical, MembraneConstants, SegmentElectrical, SegmentGeometry};
use crate::units::{format_quantity, parse_quantity, Dimension};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Malformed line or value. Line and column are 1-based.
    Syntax { line: usize, column: usize, message: String },
    /// A value parsed but broke an invariant.
    Invalid { key: String, reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, column, message } => write!(f, "{line}:{column}: {message}"),
            ConfigError::Invalid { key, reason } => write!(f, "`{key}`: {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Which inputs a single `run` drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActiveInputs {
    None,
    #[default]
    A,
    B,
    Both,
}

impl ActiveInputs {
    pub fn flags(self) -> (bool, bool) {
        match self {
            ActiveInputs::None => (false, false),
            ActiveInputs::A => (true, false),
            ActiveInputs::B => (false, true),
            ActiveInputs::Both => (true, true),
        }
    }

    fn name(self) -> &'static str {
        match self {
            ActiveInputs::None => "none",
            ActiveInputs::A => "a",
            ActiveInputs::B => "b",
            ActiveInputs::Both => "both",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "none" => Some(ActiveInputs::None),
            "a" => Some(ActiveInputs::A),
            "b" => Some(ActiveInputs::B),
            "both" => Some(ActiveInputs::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyConfig {
    pub branch_len: u32,
    pub out_len: u32,
    /// `None` means the vertex has the same series resistance as the others.
    pub r_vertex: Option<f64>,
    pub vertex_sources: bool,
    pub edge_convention: EdgeConvention,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            branch_len: 6,
            out_len: 3,
            r_vertex: None,
            vertex_sources: true,
            edge_convention: EdgeConvention::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StimulusConfig {
    pub drive: InputDrive,
    pub inputs: ActiveInputs,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScenarioConfig {
    pub membrane: MembraneConstants,
    pub geometry: SegmentGeometry,
    pub topology: TopologyConfig,
    pub stimulus: StimulusConfig,
    pub sim: SimConfig,
}

enum Value {
    Quantity(Dimension),
    Count,
    Flag,
    Word,
}

const KEYS: &[(&str, Value)] = &[
    ("membrane.c_mem", Value::Quantity(Dimension::CapacitancePerArea)),
    ("membrane.g_leak", Value::Quantity(Dimension::ConductancePerArea)),
    ("membrane.rho_axial", Value::Quantity(Dimension::Resistivity)),
    ("membrane.j_na", Value::Quantity(Dimension::CurrentDensity)),
    ("membrane.j_k", Value::Quantity(Dimension::CurrentDensity)),
    ("membrane.v_rest", Value::Quantity(Dimension::Voltage)),
    ("membrane.v_trig", Value::Quantity(Dimension::Voltage)),
    ("membrane.v_max", Value::Quantity(Dimension::Voltage)),
    ("membrane.v_min", Value::Quantity(Dimension::Voltage)),
    ("membrane.rearm_margin", Value::Quantity(Dimension::Voltage)),
    ("geometry.length", Value::Quantity(Dimension::Length)),
    ("geometry.diameter", Value::Quantity(Dimension::Length)),
    ("topology.branch_len", Value::Count),
    ("topology.out_len", Value::Count),
    ("topology.r_vertex", Value::Quantity(Dimension::Resistance)),
    ("topology.vertex_sources", Value::Flag),
    ("topology.edge_convention", Value::Word),
    ("stimulus.kind", Value::Word),
    ("stimulus.amplitude", Value::Quantity(Dimension::Current)),
    ("stimulus.duration", Value::Quantity(Dimension::Time)),
    ("stimulus.start", Value::Quantity(Dimension::Time)),
    ("stimulus.skew", Value::Quantity(Dimension::Time)),
    ("stimulus.inputs", Value::Word),
    ("sim.dt", Value::Quantity(Dimension::Time)),
    ("sim.t_end", Value::Quantity(Dimension::Time)),
    ("sim.record_stride", Value::Count),
    ("sim.integrator", Value::Word),
];

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    // amplitude/duration may arrive before or after `kind`
    let mut amplitude = 1e-9;
    let mut duration = 0.5e-3;
    let mut force = false;
    if let DriveKind::Current { amplitude: a, duration: d } = cfg.stimulus.drive.kind {
        amplitude = a;
        duration = d;
    }

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let syntax = |column: usize, message: String| ConfigError::Syntax {
            line: line_no,
            column: column + 1,
            message,
        };
        let Some(eq) = content.find('=') else {
            let col = content.len() - content.trim_start().len();
            return Err(syntax(col, "expected `section.key = value`".into()));
        };
        let key = content[..eq].trim();
        let key_col = content.len() - content.trim_start().len();
        let value_text = &content[eq + 1..];
        let value_col = eq + 1;
        let Some((_, kind)) = KEYS.iter().find(|(k, _)| *k == key) else {
            return Err(syntax(key_col, format!("unknown key `{key}`")));
        };
        let word = value_text.trim();
        let word_col = value_col + (value_text.len() - value_text.trim_start().len());

        match kind {
            Value::Quantity(dim) => {
                if key == "topology.r_vertex" && word == "nominal" {
                    cfg.topology.r_vertex = None;
                    continue;
                }
                let v = parse_quantity(value_text, *dim).map_err(|e| syntax(value_col + e.offset, e.message))?;
                let m = &mut cfg.membrane;
                match key {
                    "membrane.c_mem" => m.c_mem = v,
                    "membrane.g_leak" => m.g_leak = v,
                    "membrane.rho_axial" => m.rho_axial = v,
                    "membrane.j_na" => m.j_na = v,
                    "membrane.j_k" => m.j_k = v,
                    "membrane.v_rest" => m.v_rest = v,
                    "membrane.v_trig" => m.v_trig = v,
                    "membrane.v_max" => m.v_max = v,
                    "membrane.v_min" => m.v_min = v,
                    "membrane.rearm_margin" => m.rearm_margin = v,
                    "geometry.length" => cfg.geometry.length = v,
                    "geometry.diameter" => cfg.geometry.diameter = v,
                    "topology.r_vertex" => cfg.topology.r_vertex = Some(v),
                    "stimulus.amplitude" => amplitude = v,
                    "stimulus.duration" => duration = v,
                    "stimulus.start" => cfg.stimulus.drive.start = v,
                    "stimulus.skew" => cfg.stimulus.drive.skew = v,
                    "sim.dt" => cfg.sim.dt = v,
                    "sim.t_end" => cfg.sim.t_end = v,
                    _ => unreachable!("unhandled quantity key {key}"),
                }
            }
            Value::Count => {
                let n: u32 = word
                    .parse()
                    .map_err(|_| syntax(word_col, format!("expected a non-negative integer, found `{word}`")))?;
                match key {
                    "topology.branch_len" => cfg.topology.branch_len = n,
                    "topology.out_len" => cfg.topology.out_len = n,
                    "sim.record_stride" => cfg.sim.record_stride = n as usize,
                    _ => unreachable!("unhandled count key {key}"),
                }
            }
            Value::Flag => {
                let on = match word {
                    "on" | "true" | "yes" => true,
                    "off" | "false" | "no" => false,
                    _ => return Err(syntax(word_col, format!("expected on/off, found `{word}`"))),
                };
                cfg.topology.vertex_sources = on;
            }
            Value::Word => {
                let bad = |allowed: &str| syntax(word_col, format!("expected one of {allowed}, found `{word}`"));
                match key {
                    "topology.edge_convention" => {
                        cfg.topology.edge_convention =
                            EdgeConvention::from_name(word).ok_or_else(|| bad("output-series, split-half"))?
                    }
                    "stimulus.kind" => {
                        force = match word {
                            "current" => false,
                            "force" => true,
                            _ => return Err(bad("current, force")),
                        }
                    }
                    "stimulus.inputs" => {
                        cfg.stimulus.inputs = ActiveInputs::from_name(word).ok_or_else(|| bad("none, a, b, both"))?
                    }
                    "sim.integrator" => {
                        cfg.sim.integrator = Integrator::from_name(word).ok_or_else(|| bad("euler, rk4"))?
                    }
                    _ => unreachable!("unhandled word key {key}"),
                }
            }
        }
    }

    cfg.stimulus.drive.kind = if force {
        DriveKind::Force
    } else {
        DriveKind::Current { amplitude, duration }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn invalid(section: &str, e: ParamError) -> ConfigError {
    ConfigError::Invalid {
        key: format!("{section}.{}", e.field),
        reason: e.reason,
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.membrane.validate().map_err(|e| invalid("membrane", e))?;
        self.geometry.validate().map_err(|e| invalid("geometry", e))?;
        self.merge_params()?;
        let probe = crate::network::NodeId(1);
        self.stimulus
            .drive
            .stimulus(probe, self.stimulus.drive.start)
            .map_err(|e| invalid("stimulus", e))?;
        let skew = self.stimulus.drive.skew;
        if !(skew.is_finite() && skew >= 0.0) {
            return Err(invalid("stimulus", ParamError::new("skew", "must be >= 0")));
        }
        self.sim.validate().map_err(|e| invalid("sim", e))?;
        Ok(())
    }

    pub fn segment(&self) -> Result<SegmentElectrical, ConfigError> {
        derive_electrical(&self.geometry, &self.membrane).map_err(|e| invalid("geometry", e))
    }

    pub fn merge_params(&self) -> Result<MergeParams, ConfigError> {
        let seg = self.segment()?;
        let t = &self.topology;
        let p = MergeParams {
            branch_len: t.branch_len,
            out_len: t.out_len,
            segment: seg,
            r_vertex: t.r_vertex.unwrap_or(seg.r_series),
            vertex_sources: t.vertex_sources,
            convention: t.edge_convention,
        };
        crate::network::build_merge_topology(&p).map_err(|e| invalid("topology", e))?;
        Ok(p)
    }

    pub fn sweep_base(&self) -> Result<SweepBase, ConfigError> {
        Ok(SweepBase {
            merge: self.merge_params()?,
            drive: self.stimulus.drive,
            cfg: self.sim,
            mc: self.membrane,
        })
    }

    /// Every key with its current value in canonical units. Parsing the
    /// dump yields an identical configuration.
    pub fn dump(&self) -> String {
        let m = &self.membrane;
        let mut out = String::new();
        let mut q = |key: &str, v: f64, dim: Dimension| {
            let _ = writeln!(out, "{key} = {}", format_quantity(v, dim));
        };
        q("membrane.c_mem", m.c_mem, Dimension::CapacitancePerArea);
        q("membrane.g_leak", m.g_leak, Dimension::ConductancePerArea);
        q("membrane.rho_axial", m.rho_axial, Dimension::Resistivity);
        q("membrane.j_na", m.j_na, Dimension::CurrentDensity);
        q("membrane.j_k", m.j_k, Dimension::CurrentDensity);
        q("membrane.v_rest", m.v_rest, Dimension::Voltage);
        q("membrane.v_trig", m.v_trig, Dimension::Voltage);
        q("membrane.v_max", m.v_max, Dimension::Voltage);
        q("membrane.v_min", m.v_min, Dimension::Voltage);
        q("membrane.rearm_margin", m.rearm_margin, Dimension::Voltage);
        q("geometry.length", self.geometry.length, Dimension::Length);
        q("geometry.diameter", self.geometry.diameter, Dimension::Length);

        let t = &self.topology;
        let _ = writeln!(out, "topology.branch_len = {}", t.branch_len);
        let _ = writeln!(out, "topology.out_len = {}", t.out_len);
        match t.r_vertex {
            Some(r) => {
                let _ = writeln!(out, "topology.r_vertex = {}", format_quantity(r, Dimension::Resistance));
            }
            None => out.push_str("topology.r_vertex = nominal\n"),
        }
        let _ = writeln!(
            out,
            "topology.vertex_sources = {}",
            if t.vertex_sources { "on" } else { "off" }
        );
        let _ = writeln!(out, "topology.edge_convention = {}", t.edge_convention.name());

        let d = &self.stimulus.drive;
        match d.kind {
            DriveKind::Current { amplitude, duration } => {
                out.push_str("stimulus.kind = current\n");
                let _ = writeln!(
                    out,
                    "stimulus.amplitude = {}",
                    format_quantity(amplitude, Dimension::Current)
                );
                let _ = writeln!(out, "stimulus.duration = {}", format_quantity(duration, Dimension::Time));
            }
            DriveKind::Force => out.push_str("stimulus.kind = force\n"),
        }
        let _ = writeln!(out, "stimulus.start = {}", format_quantity(d.start, Dimension::Time));
        let _ = writeln!(out, "stimulus.skew = {}", format_quantity(d.skew, Dimension::Time));
        let _ = writeln!(out, "stimulus.inputs = {}", self.stimulus.inputs.name());

        let s = &self.sim;
        let _ = writeln!(out, "sim.dt = {}", format_quantity(s.dt, Dimension::Time));
        let _ = writeln!(out, "sim.t_end = {}", format_quantity(s.t_end, Dimension::Time));
        let _ = writeln!(out, "sim.record_stride = {}", s.record_stride);
        let _ = writeln!(out, "sim.integrator = {}", s.integrator.name());
        out
    }
}
