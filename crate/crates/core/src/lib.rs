//! Transient simulation of active dendrite segment networks.
//!
//! Segments carry a leak, an axial resistance and two switched current
//! sources (sodium and potassium) driven by a four-phase threshold state
//! machine. Networks of such segments carry self-sustaining pulses that
//! annihilate on head-on collision, which lets a single merge vertex act as
//! a Boolean gate whose kind depends on the vertex series resistance.
//!
//! Module map:
//!
//! - [`segment`]: membrane constants, lumped parameters, channel phases
//! - [`network`]: topologies, the merge builder, stimuli
//! - [`engine`]: fixed-step integration and waveform/event recording
//! - [`logic`]: truth tables, gate classification, resistance sweeps
//! - [`config`]: the scenario file format
//! - [`cli`]: the `dendrite-vertex` command-line tool

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod logic;
pub mod network;
pub mod segment;
pub mod units;

pub use engine::{simulate, Event, Integrator, SimConfig, WaveformSet};
pub use error::{LogicError, ParamError, SimError};
pub use logic::{
    classify_gate, detect_output, pulse_width, sweep_vertex_resistance, truth_table, GateKind, InputDrive,
    RegimeReport, SweepBase, TruthTable,
};
pub use network::{build_merge_topology, validate, EdgeConvention, MergeParams, NodeId, Stimulus, Topology};
pub use segment::{
    derive_electrical, source_current, step_channel_state, ChannelState, MembraneConstants, SegmentElectrical,
    SegmentGeometry,
};
