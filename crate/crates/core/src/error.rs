use thiserror::Error;

use crate::network::NodeId;

/// A parameter failed its invariant. `field` names the offending value.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{field}`: {reason}")]
pub struct ParamError {
    pub field: &'static str,
    pub reason: String,
}

impl ParamError {
    pub fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("stimulus targets unknown node {0}")]
    UnknownStimulusTarget(NodeId),
    #[error("numerical blow-up at node {node}, t = {time:.6e} s (V = {voltage:e} V)")]
    BlowUp { node: NodeId, time: f64, voltage: f64 },
}

#[derive(Debug, Error)]
pub enum LogicError {
    #[error("node {0} is not part of the waveform set")]
    UnknownNode(NodeId),
    #[error("topology lacks the `{0}` label")]
    MissingLabel(&'static str),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Param(#[from] ParamError),
}
