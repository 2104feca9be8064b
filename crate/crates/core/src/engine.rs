//! Fixed-step transient integration of a segment network with switched
//! channel sources.
//!
//! Each node obeys
//!
//! ```text
//! C dV/dt = (v_rest - V)/R_leak + Σ (V_j - V)/R_edge + I_source(phase) + I_stim(t)
//! ```
//!
//! Channel phases are held fixed during a step and updated afterwards from the
//! voltage before and after the step. Sources are ideal: their current does
//! not depend on the load.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::error::{ParamError, SimError};
use crate::network::{validate, NodeId, Stimulus, StimulusKind, Topology};
use crate::segment::{source_current, step_channel_state, ChannelState, MembraneConstants, SegmentElectrical};

/// Any voltage beyond this magnitude aborts the run.
pub const BLOW_UP_LIMIT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    ForwardEuler,
    /// Classic RK4 on the linear part, channel phases frozen within the step.
    Rk4,
}

impl Integrator {
    pub fn name(self) -> &'static str {
        match self {
            Integrator::ForwardEuler => "euler",
            Integrator::Rk4 => "rk4",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "euler" => Some(Integrator::ForwardEuler),
            "rk4" => Some(Integrator::Rk4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// s
    pub dt: f64,
    /// s
    pub t_end: f64,
    /// Keep one sample every `record_stride` steps.
    pub record_stride: usize,
    pub integrator: Integrator,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-6,
            t_end: 50e-3,
            record_stride: 10,
            integrator: Integrator::ForwardEuler,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ParamError::new("dt", "must be positive"));
        }
        if !(self.t_end.is_finite() && self.t_end > self.dt) {
            return Err(ParamError::new("t_end", "must exceed dt"));
        }
        if self.record_stride < 1 {
            return Err(ParamError::new("record_stride", "must be at least 1"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// One logged phase change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub node: NodeId,
    pub time: f64,
    /// Phase being left; the phase entered is always `from.successor()`.
    pub from: ChannelState,
}

impl Event {
    pub fn to(&self) -> ChannelState {
        self.from.successor()
    }

    pub fn transition_name(&self) -> String {
        format!("{}->{}", self.from, self.to())
    }

    pub fn is_trigger(&self) -> bool {
        self.from == ChannelState::Resting
    }
}

/// Decimated voltage traces plus the full event log of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformSet {
    pub nodes: Vec<NodeId>,
    pub times: Vec<f64>,
    /// `voltages[k]` is the trace of `nodes[k]`.
    pub voltages: Vec<Vec<f64>>,
    pub events: Vec<Event>,
}

impl WaveformSet {
    pub fn trace(&self, node: NodeId) -> Option<&[f64]> {
        self.nodes
            .iter()
            .position(|&n| n == node)
            .map(|k| self.voltages[k].as_slice())
    }

    pub fn events_at(&self, node: NodeId) -> impl Iterator<Item = &Event> + '_ {
        self.events.iter().filter(move |e| e.node == node)
    }

    /// Times at which `node` entered the depolarizing phase.
    pub fn trigger_times(&self, node: NodeId) -> Vec<f64> {
        self.events_at(node).filter(|e| e.is_trigger()).map(|e| e.time).collect()
    }

    /// `time_s,<node>,...` with one row per retained sample.
    pub fn write_waveform_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "time_s")?;
        for n in &self.nodes {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for (k, t) in self.times.iter().enumerate() {
            write!(w, "{t:.9e}")?;
            for trace in &self.voltages {
                write!(w, ",{:.9e}", trace[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// `node,time_s,transition`.
    pub fn write_events_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "node,time_s,transition")?;
        for e in &self.events {
            writeln!(w, "{},{:.9e},{}", e.node, e.time, e.transition_name())?;
        }
        Ok(())
    }
}

struct Node {
    seg: SegmentElectrical,
    g_leak: f64,
    neighbors: Vec<(usize, f64)>,
}

/// Runs one transient simulation from rest.
pub fn simulate(
    topo: &Topology,
    stimuli: &[Stimulus],
    cfg: &SimConfig,
    mc: &MembraneConstants,
) -> Result<WaveformSet, SimError> {
    validate(topo).map_err(|r| SimError::Topology(r.to_string()))?;
    cfg.validate()?;
    mc.validate()?;

    let index: HashMap<NodeId, usize> = topo.nodes.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
    let mut nodes: Vec<Node> = topo
        .nodes
        .iter()
        .map(|(_, seg)| Node {
            seg: *seg,
            g_leak: 1.0 / seg.r_leak,
            neighbors: Vec::new(),
        })
        .collect();
    for e in &topo.edges {
        let (a, b) = (index[&e.a], index[&e.b]);
        let g = 1.0 / e.resistance;
        nodes[a].neighbors.push((b, g));
        nodes[b].neighbors.push((a, g));
    }

    let mut injections: Vec<(usize, Stimulus)> = Vec::new();
    let mut forced: Vec<(usize, f64)> = Vec::new();
    for s in stimuli {
        s.validate()?;
        let i = *index.get(&s.target).ok_or(SimError::UnknownStimulusTarget(s.target))?;
        match s.kind {
            StimulusKind::CurrentInjection { .. } => injections.push((i, *s)),
            StimulusKind::ForceTrigger { time } => forced.push((i, time)),
        }
    }
    forced.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut next_forced = 0;

    let n = nodes.len();
    let ids: Vec<NodeId> = topo.node_ids().collect();
    let steps = cfg.steps();
    let n_samples = steps / cfg.record_stride + 1;

    let mut v = vec![mc.v_rest; n];
    let mut phase = vec![ChannelState::Resting; n];
    let mut times = Vec::with_capacity(n_samples);
    let mut traces: Vec<Vec<f64>> = (0..n).map(|_| Vec::with_capacity(n_samples)).collect();
    let mut events = Vec::new();

    times.push(0.0);
    for (trace, &vi) in traces.iter_mut().zip(&v) {
        trace.push(vi);
    }

    let mut drive = vec![0.0; n];
    let mut scratch = Scratch::new(n);
    for step in 0..steps {
        let t = step as f64 * cfg.dt;

        while next_forced < forced.len() && forced[next_forced].1 <= t {
            let i = forced[next_forced].0;
            if phase[i] == ChannelState::Resting && nodes[i].seg.na_enabled {
                events.push(Event {
                    node: ids[i],
                    time: t,
                    from: ChannelState::Resting,
                });
                phase[i] = ChannelState::Depolarizing;
            }
            next_forced += 1;
        }

        for (d, (node, ph)) in drive.iter_mut().zip(nodes.iter().zip(&phase)) {
            *d = source_current(*ph, &node.seg);
        }

        let v_prev = v.clone();
        match cfg.integrator {
            Integrator::ForwardEuler => {
                scratch.stim_at(&injections, t);
                derivative(&nodes, mc.v_rest, &v_prev, &drive, &scratch.stim, &mut scratch.k1);
                for i in 0..n {
                    v[i] = v_prev[i] + cfg.dt * scratch.k1[i];
                }
            }
            Integrator::Rk4 => rk4_step(&nodes, mc.v_rest, &drive, &injections, t, cfg.dt, &mut v, &mut scratch),
        }

        let t_next = (step + 1) as f64 * cfg.dt;
        for i in 0..n {
            if !v[i].is_finite() || v[i].abs() > BLOW_UP_LIMIT {
                return Err(SimError::BlowUp {
                    node: ids[i],
                    time: t_next,
                    voltage: v[i],
                });
            }
            let next = step_channel_state(phase[i], v_prev[i], v[i], &nodes[i].seg, mc);
            if next != phase[i] {
                events.push(Event {
                    node: ids[i],
                    time: t_next,
                    from: phase[i],
                });
                phase[i] = next;
            }
        }

        if (step + 1) % cfg.record_stride == 0 {
            times.push(t_next);
            for (trace, &vi) in traces.iter_mut().zip(&v) {
                trace.push(vi);
            }
        }
    }

    Ok(WaveformSet {
        nodes: ids,
        times,
        voltages: traces,
        events,
    })
}

struct Scratch {
    stim: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            stim: vec![0.0; n],
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    fn stim_at(&mut self, injections: &[(usize, Stimulus)], t: f64) {
        self.stim.iter_mut().for_each(|s| *s = 0.0);
        for (i, s) in injections {
            self.stim[*i] += s.current_at(t);
        }
    }
}

fn derivative(nodes: &[Node], v_rest: f64, v: &[f64], drive: &[f64], stim: &[f64], out: &mut [f64]) {
    for (i, node) in nodes.iter().enumerate() {
        let mut current = (v_rest - v[i]) * node.g_leak + drive[i] + stim[i];
        for &(j, g) in &node.neighbors {
            current += (v[j] - v[i]) * g;
        }
        out[i] = current / node.seg.cap;
    }
}

#[allow(clippy::too_many_arguments)]
fn rk4_step(
    nodes: &[Node],
    v_rest: f64,
    drive: &[f64],
    injections: &[(usize, Stimulus)],
    t: f64,
    dt: f64,
    v: &mut [f64],
    s: &mut Scratch,
) {
    let n = v.len();
    s.stim_at(injections, t);
    derivative(nodes, v_rest, v, drive, &s.stim, &mut s.k1);

    s.stim_at(injections, t + dt / 2.0);
    for i in 0..n {
        s.tmp[i] = v[i] + dt / 2.0 * s.k1[i];
    }
    derivative(nodes, v_rest, &s.tmp, drive, &s.stim, &mut s.k2);
    for i in 0..n {
        s.tmp[i] = v[i] + dt / 2.0 * s.k2[i];
    }
    derivative(nodes, v_rest, &s.tmp, drive, &s.stim, &mut s.k3);

    s.stim_at(injections, t + dt);
    for i in 0..n {
        s.tmp[i] = v[i] + dt * s.k3[i];
    }
    derivative(nodes, v_rest, &s.tmp, drive, &s.stim, &mut s.k4);

    for i in 0..n {
        v[i] += dt / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_merge_topology, MergeParams};
    use crate::segment::{derive_electrical, SegmentGeometry};

    fn seg() -> SegmentElectrical {
        derive_electrical(&SegmentGeometry::default(), &MembraneConstants::default()).unwrap()
    }

    fn single() -> Topology {
        Topology::chain(1, seg()).unwrap()
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let mc = MembraneConstants::default();
        let w = simulate(&single(), &[], &SimConfig::default(), &mc).unwrap();
        assert!(w.events.is_empty());
        let dev = w.voltages[0].iter().map(|v| (v - mc.v_rest).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-5);
    }

    #[test]
    fn sample_count_follows_stride() {
        let cfg = SimConfig {
            dt: 1e-6,
            t_end: 1e-3,
            record_stride: 7,
            ..Default::default()
        };
        let w = simulate(&single(), &[], &cfg, &MembraneConstants::default()).unwrap();
        assert_eq!(w.times.len(), 1000 / 7 + 1);
        assert!(w.voltages.iter().all(|t| t.len() == w.times.len()));
    }

    /// Closed-form single-compartment solution with the phase-dependent
    /// constant source: V(t) = V_inf + (V0 - V_inf) exp(-t/τ),
    /// V_inf = v_rest + R_L·I.
    fn crossing_time(v0: f64, target: f64, current: f64, s: &SegmentElectrical, mc: &MembraneConstants) -> f64 {
        let v_inf = mc.v_rest + s.r_leak * current;
        s.tau() * ((v0 - v_inf) / (target - v_inf)).ln()
    }

    #[test]
    fn forced_single_segment_matches_closed_form() {
        let mc = MembraneConstants::default();
        let s = seg();
        let cfg = SimConfig::default();
        let stim = [Stimulus::force(NodeId(1), 0.0).unwrap()];
        let w = simulate(&single(), &stim, &cfg, &mc).unwrap();
        let times: Vec<f64> = w.events.iter().map(|e| e.time).collect();
        assert_eq!(w.events.len(), 4);
        assert_eq!(times[0], 0.0);

        let up = crossing_time(mc.v_rest, mc.v_max, s.i_na - s.i_k, &s, &mc);
        let down = crossing_time(mc.v_max, mc.v_min, -s.i_k, &s, &mc);
        let recover = crossing_time(mc.v_min, mc.rearm_level(), 0.0, &s, &mc);
        // ≈ 0.49 ms leak-free rise from trigger level; from rest it is longer
        let leak_free = s.cap * (mc.v_max - mc.v_trig) / (s.i_na - s.i_k);
        assert!((leak_free - 0.49e-3).abs() < 0.01e-3);
        assert!((recover - s.tau() * 13f64.ln()).abs() < 1e-12);
        assert!((recover - 8.5e-3).abs() < 0.1e-3);

        let expect = [up, up + down, up + down + recover];
        // one-step event quantization per phase plus first-order Euler drift
        for (got, want) in times[1..].iter().zip(expect) {
            assert!((got - want).abs() < 2e-6 + 1e-3 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn rk4_agrees_with_euler_on_forced_segment() {
        let mc = MembraneConstants::default();
        let stim = [Stimulus::force(NodeId(1), 0.0).unwrap()];
        let euler = simulate(&single(), &stim, &SimConfig::default(), &mc).unwrap();
        let cfg = SimConfig {
            integrator: Integrator::Rk4,
            ..Default::default()
        };
        let rk4 = simulate(&single(), &stim, &cfg, &mc).unwrap();
        assert_eq!(euler.events.len(), rk4.events.len());
        for (a, b) in euler.events.iter().zip(&rk4.events) {
            assert!((a.time - b.time).abs() < 3e-6);
        }
    }

    #[test]
    fn pulse_runs_down_a_chain_in_order() {
        let mc = MembraneConstants::default();
        let topo = Topology::chain(20, seg()).unwrap();
        let stim = [Stimulus::current(NodeId(1), 1e-9, 0.0, 0.5e-3).unwrap()];
        let w = simulate(&topo, &stim, &SimConfig::default(), &mc).unwrap();
        let mut last = -1.0;
        for id in 1..=20 {
            let t = w.trigger_times(NodeId(id));
            assert_eq!(t.len(), 1, "node {id}");
            assert!(t[0] > last);
            last = t[0];
        }
    }

    #[test]
    fn blow_up_names_node_and_time() {
        let mc = MembraneConstants::default();
        let cfg = SimConfig {
            dt: 2e-3,
            t_end: 0.5,
            record_stride: 1,
            ..Default::default()
        };
        let topo = Topology::chain(3, seg()).unwrap();
        // dt far beyond the explicit stability bound
        let kick = [Stimulus::force(NodeId(1), 0.0).unwrap()];
        match simulate(&topo, &kick, &cfg, &mc) {
            Err(SimError::BlowUp { time, .. }) => assert!(time > 0.0 && time <= cfg.t_end),
            other => panic!("expected blow-up, got {other:?}"),
        }
        // explicit huge stimulus also trips the limit
        let stim = [Stimulus::current(NodeId(2), 1e-3, 0.0, 1e-3).unwrap()];
        let err = simulate(&topo, &stim, &SimConfig::default(), &mc).unwrap_err();
        assert!(err.to_string().contains("node 2"), "{err}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let mc = MembraneConstants::default();
        let stim = [Stimulus::force(NodeId(42), 0.0).unwrap()];
        assert!(matches!(
            simulate(&single(), &stim, &SimConfig::default(), &mc),
            Err(SimError::UnknownStimulusTarget(NodeId(42)))
        ));
        let cfg = SimConfig {
            record_stride: 0,
            ..Default::default()
        };
        assert!(matches!(simulate(&single(), &[], &cfg, &mc), Err(SimError::Param(_))));
        let mut t = single();
        t.nodes.clear();
        assert!(matches!(simulate(&t, &[], &SimConfig::default(), &mc), Err(SimError::Topology(_))));
    }

    #[test]
    fn merge_network_events_stay_in_cycle_order() {
        let mc = MembraneConstants::default();
        let topo = build_merge_topology(&MergeParams::new(seg())).unwrap();
        let stim = [Stimulus::current(NodeId(1), 1e-9, 0.0, 0.5e-3).unwrap()];
        let w = simulate(&topo, &stim, &SimConfig::default(), &mc).unwrap();
        for id in topo.node_ids() {
            let mut expect = ChannelState::Resting;
            for e in w.events_at(id) {
                assert_eq!(e.from, expect);
                expect = e.to();
                assert!(e.time >= 0.0 && e.time <= 50e-3);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let mc = MembraneConstants::default();
        let cfg = SimConfig {
            t_end: 5e-3,
            record_stride: 1000,
            ..Default::default()
        };
        let stim = [Stimulus::force(NodeId(1), 0.0).unwrap()];
        let w = simulate(&Topology::chain(2, seg()).unwrap(), &stim, &cfg, &mc).unwrap();
        let mut buf = Vec::new();
        w.write_waveform_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("time_s,1,2"));
        assert_eq!(lines.next(), Some("0.000000000e0,-7.000000000e-2,-7.000000000e-2"));
        assert_eq!(text.lines().count(), 1 + 6);

        let mut buf = Vec::new();
        w.write_events_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("node,time_s,transition\n1,0.000000000e0,resting->depolarizing\n"));
    }
}
