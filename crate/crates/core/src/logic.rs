//! Boolean readout of vertex simulations: output detection, truth tables,
//! gate naming, vertex-resistance sweeps and pulse-width metrics.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::engine::{simulate, SimConfig, WaveformSet};
use crate::error::{LogicError, ParamError};
use crate::network::{build_merge_topology, MergeParams, NodeId, Stimulus, Topology, INPUT_A, INPUT_B, OUTPUT_PROBE};
use crate::segment::{ChannelState, MembraneConstants};

/// Output of a two-input gate for the inputs `(a, b)` in the order
/// `(0,0), (0,1), (1,0), (1,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TruthTable(pub [bool; 4]);

impl TruthTable {
    pub fn from_bits(bits: [u8; 4]) -> Self {
        Self(bits.map(|b| b != 0))
    }

    pub fn get(&self, a: bool, b: bool) -> bool {
        self.0[Self::index(a, b)]
    }

    pub fn index(a: bool, b: bool) -> usize {
        2 * a as usize + b as usize
    }

    /// Input pairs in table order.
    pub fn inputs() -> [(bool, bool); 4] {
        [(false, false), (false, true), (true, false), (true, true)]
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0.map(u8::from);
        write!(f, "({a},{b},{c},{d})")
    }
}

/// The sixteen two-input Boolean functions, numbered by their truth table
/// read as a binary number with the `(0,0)` output as the most significant bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    False,
    And,
    ANimpB,
    A,
    BNimpA,
    B,
    Xor,
    Or,
    Nor,
    Xnor,
    NotB,
    BImpA,
    NotA,
    AImpB,
    Nand,
    True,
}

impl GateKind {
    pub const ALL: [GateKind; 16] = [
        GateKind::False,
        GateKind::And,
        GateKind::ANimpB,
        GateKind::A,
        GateKind::BNimpA,
        GateKind::B,
        GateKind::Xor,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Xnor,
        GateKind::NotB,
        GateKind::BImpA,
        GateKind::NotA,
        GateKind::AImpB,
        GateKind::Nand,
        GateKind::True,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::False => "FALSE",
            GateKind::And => "AND",
            GateKind::ANimpB => "A_NIMP_B",
            GateKind::A => "A",
            GateKind::BNimpA => "B_NIMP_A",
            GateKind::B => "B",
            GateKind::Xor => "XOR",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xnor => "XNOR",
            GateKind::NotB => "NOT_B",
            GateKind::BImpA => "B_IMP_A",
            GateKind::NotA => "NOT_A",
            GateKind::AImpB => "A_IMP_B",
            GateKind::Nand => "NAND",
            GateKind::True => "TRUE",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == s)
    }

    pub fn truth_table(self) -> TruthTable {
        let code = self as u8;
        TruthTable([code & 8 != 0, code & 4 != 0, code & 2 != 0, code & 1 != 0])
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn classify_gate(tt: &TruthTable) -> GateKind {
    let code = tt.0.iter().fold(0usize, |acc, &bit| (acc << 1) | bit as usize);
    GateKind::ALL[code]
}

/// True when `probe` completed a full upstroke: it triggered and went on to
/// reach the peak threshold.
pub fn detect_output(w: &WaveformSet, probe: NodeId) -> Result<bool, LogicError> {
    if !w.nodes.contains(&probe) {
        return Err(LogicError::UnknownNode(probe));
    }
    let mut triggered = false;
    for e in w.events_at(probe) {
        match e.from {
            ChannelState::Resting => triggered = true,
            ChannelState::Depolarizing if triggered => return Ok(true),
            _ => {}
        }
    }
    Ok(false)
}

/// Full width at half amplitude of the first pulse at `node`, measured on
/// the recorded samples with linear interpolation. `None` when the node
/// never rises above the trigger threshold.
pub fn pulse_width(w: &WaveformSet, node: NodeId, mc: &MembraneConstants) -> Result<Option<f64>, LogicError> {
    let v = w.trace(node).ok_or(LogicError::UnknownNode(node))?;
    let t = &w.times;
    let Some(start) = v.iter().position(|&x| x > mc.v_trig) else {
        return Ok(None);
    };
    let end = v[start..]
        .iter()
        .position(|&x| x <= mc.v_trig)
        .map_or(v.len(), |k| start + k);
    let peak = v[start..end].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half = mc.v_rest + (peak - mc.v_rest) / 2.0;
    let first_above = v[start..end].iter().position(|&x| x >= half).map(|k| start + k);
    let Some(rise_idx) = first_above else {
        return Ok(None);
    };
    let rise = if rise_idx == 0 {
        t[0]
    } else {
        crossing(t, v, rise_idx - 1, half)
    };
    let fall_idx = (rise_idx..v.len()).find(|&k| v[k] < half);
    let Some(fall_idx) = fall_idx else {
        return Ok(None);
    };
    let fall = crossing(t, v, fall_idx - 1, half);
    Ok(Some(fall - rise))
}

fn crossing(t: &[f64], v: &[f64], k: usize, level: f64) -> f64 {
    let frac = (level - v[k]) / (v[k + 1] - v[k]);
    t[k] + frac * (t[k + 1] - t[k])
}

/// How an "active" input is delivered to its terminal segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveKind {
    Current { amplitude: f64, duration: f64 },
    Force,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputDrive {
    pub kind: DriveKind,
    /// Onset of input A, s.
    pub start: f64,
    /// Input B lags input A by this much, s.
    pub skew: f64,
}

impl Default for InputDrive {
    /// 1 nA for 0.5 ms at t = 0, no skew.
    fn default() -> Self {
        Self {
            kind: DriveKind::Current {
                amplitude: 1e-9,
                duration: 0.5e-3,
            },
            start: 0.0,
            skew: 0.0,
        }
    }
}

impl InputDrive {
    pub fn stimulus(&self, target: NodeId, start: f64) -> Result<Stimulus, ParamError> {
        match self.kind {
            DriveKind::Current { amplitude, duration } => Stimulus::current(target, amplitude, start, duration),
            DriveKind::Force => Stimulus::force(target, start),
        }
    }

    /// Stimuli for one truth-table case.
    pub fn stimuli(&self, topo: &Topology, a: bool, b: bool) -> Result<Vec<Stimulus>, LogicError> {
        let mut out = Vec::new();
        if a {
            let node = topo.label(INPUT_A).ok_or(LogicError::MissingLabel(INPUT_A))?;
            out.push(self.stimulus(node, self.start)?);
        }
        if b {
            let node = topo.label(INPUT_B).ok_or(LogicError::MissingLabel(INPUT_B))?;
            out.push(self.stimulus(node, self.start + self.skew)?);
        }
        Ok(out)
    }
}

/// Simulates one input combination.
pub fn run_case(
    topo: &Topology,
    drive: &InputDrive,
    a: bool,
    b: bool,
    cfg: &SimConfig,
    mc: &MembraneConstants,
) -> Result<WaveformSet, LogicError> {
    let stimuli = drive.stimuli(topo, a, b)?;
    Ok(simulate(topo, &stimuli, cfg, mc)?)
}

/// Runs all four input combinations and reads the output probe of each.
pub fn truth_table(
    topo: &Topology,
    drive: &InputDrive,
    cfg: &SimConfig,
    mc: &MembraneConstants,
) -> Result<TruthTable, LogicError> {
    let probe = topo.label(OUTPUT_PROBE).ok_or(LogicError::MissingLabel(OUTPUT_PROBE))?;
    let results: Vec<Result<bool, LogicError>> = TruthTable::inputs()
        .par_iter()
        .map(|&(a, b)| detect_output(&run_case(topo, drive, a, b, cfg, mc)?, probe))
        .collect();
    let mut out = [false; 4];
    for (slot, r) in out.iter_mut().zip(results) {
        *slot = r?;
    }
    Ok(TruthTable(out))
}

/// Largest input-B lag (multiple of `step`, at most `max_skew`) for which the
/// network still computes XOR. `None` if it is not XOR at zero lag.
pub fn skew_tolerance(
    topo: &Topology,
    drive: &InputDrive,
    step: f64,
    max_skew: f64,
    cfg: &SimConfig,
    mc: &MembraneConstants,
) -> Result<Option<f64>, LogicError> {
    if !(step > 0.0) {
        return Err(ParamError::new("step", "must be positive").into());
    }
    let probe = topo.label(OUTPUT_PROBE).ok_or(LogicError::MissingLabel(OUTPUT_PROBE))?;
    let base = InputDrive { skew: 0.0, ..*drive };
    if classify_gate(&truth_table(topo, &base, cfg, mc)?) != GateKind::Xor {
        return Ok(None);
    }
    // only the both-active case depends on the lag
    let mut best = 0.0;
    let mut k = 1u32;
    loop {
        let skew = k as f64 * step;
        if skew > max_skew + step * 1e-9 {
            break;
        }
        let d = InputDrive { skew, ..*drive };
        if detect_output(&run_case(topo, &d, true, true, cfg, mc)?, probe)? {
            break;
        }
        best = skew;
        k += 1;
    }
    Ok(Some(best))
}

/// Everything except the vertex resistance needed to evaluate a gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBase {
    pub merge: MergeParams,
    pub drive: InputDrive,
    pub cfg: SimConfig,
    pub mc: MembraneConstants,
}

impl SweepBase {
    pub fn gate_at(&self, r_vertex: f64) -> Result<GateKind, LogicError> {
        let topo = build_merge_topology(&self.merge.with_r_vertex(r_vertex))?;
        Ok(classify_gate(&truth_table(&topo, &self.drive, &self.cfg, &self.mc)?))
    }
}

/// Neighbouring samples less than the resolution apart whose gates differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub below: f64,
    pub above: f64,
    pub from: GateKind,
    pub to: GateKind,
}

impl Boundary {
    pub fn midpoint(&self) -> f64 {
        (self.below + self.above) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeInterval {
    pub r_low: f64,
    pub r_high: f64,
    pub gate: GateKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    /// Every evaluated point, sorted by resistance.
    pub samples: Vec<(f64, GateKind)>,
    pub boundaries: Vec<Boundary>,
    /// Maximal constant-gate intervals covering the scanned range.
    pub intervals: Vec<RegimeInterval>,
}

impl RegimeReport {
    /// Gates of the intervals in increasing resistance order.
    pub fn gate_sequence(&self) -> Vec<GateKind> {
        self.intervals.iter().map(|i| i.gate).collect()
    }

    pub fn interval(&self, gate: GateKind) -> Option<&RegimeInterval> {
        self.intervals.iter().find(|i| i.gate == gate)
    }

    /// `r_vertex_ohm,gate` rows followed by one `# boundary` line per
    /// refined boundary.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "r_vertex_ohm,gate")?;
        for (r, g) in &self.samples {
            writeln!(w, "{r:.6e},{g}")?;
        }
        for b in &self.boundaries {
            writeln!(
                w,
                "# boundary {:.6e} {:.6e} {}->{}",
                b.below, b.above, b.from, b.to
            )?;
        }
        Ok(())
    }
}

/// Classifies the gate on a coarse resistance grid, then bisects every
/// change of gate down to `resolution`.
pub fn sweep_vertex_resistance(
    base: &SweepBase,
    r_range: (f64, f64),
    coarse_step: f64,
    resolution: f64,
) -> Result<RegimeReport, LogicError> {
    let (lo, hi) = r_range;
    if !(lo.is_finite() && lo > 0.0 && hi.is_finite() && hi >= lo) {
        return Err(ParamError::new("r_range", "must be positive and ascending").into());
    }
    if !(coarse_step.is_finite() && coarse_step > 0.0) {
        return Err(ParamError::new("step", "must be positive").into());
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(ParamError::new("resolution", "must be positive").into());
    }

    let n = ((hi - lo) / coarse_step * (1.0 + 1e-12)).floor() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|k| lo + k as f64 * coarse_step).collect();
    let coarse: Vec<(f64, GateKind)> = grid
        .par_iter()
        .map(|&r| base.gate_at(r).map(|g| (r, g)))
        .collect::<Result<_, _>>()?;

    let refined: Vec<Vec<(f64, GateKind)>> = coarse
        .par_windows(2)
        .map(|w| {
            let mut extra = Vec::new();
            if w[0].1 != w[1].1 {
                refine(base, w[0], w[1], resolution, &mut extra)?;
            }
            Ok(extra)
        })
        .collect::<Result<_, LogicError>>()?;

    let mut samples = coarse;
    samples.extend(refined.into_iter().flatten());
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut boundaries = Vec::new();
    let mut intervals: Vec<RegimeInterval> = Vec::new();
    for (k, &(r, g)) in samples.iter().enumerate() {
        match intervals.last_mut() {
            Some(last) if last.gate == g => {}
            Some(last) => {
                let below = samples[k - 1].0;
                let b = Boundary {
                    below,
                    above: r,
                    from: last.gate,
                    to: g,
                };
                last.r_high = b.midpoint();
                intervals.push(RegimeInterval {
                    r_low: b.midpoint(),
                    r_high: r,
                    gate: g,
                });
                boundaries.push(b);
            }
            None => intervals.push(RegimeInterval {
                r_low: lo,
                r_high: r,
                gate: g,
            }),
        }
    }
    if let Some(last) = intervals.last_mut() {
        last.r_high = hi;
    }

    Ok(RegimeReport {
        samples,
        boundaries,
        intervals,
    })
}

fn refine(
    base: &SweepBase,
    low: (f64, GateKind),
    high: (f64, GateKind),
    resolution: f64,
    out: &mut Vec<(f64, GateKind)>,
) -> Result<(), LogicError> {
    if high.0 - low.0 <= resolution {
        return Ok(());
    }
    let mid = (low.0 + high.0) / 2.0;
    let g = base.gate_at(mid)?;
    out.push((mid, g));
    if g != low.1 {
        refine(base, low, (mid, g), resolution, out)?;
    }
    if g != high.1 {
        refine(base, (mid, g), high, resolution, out)?;
    }
    Ok(())
}
