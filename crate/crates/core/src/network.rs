//! Discretized dendrite networks: segments as nodes, axial resistances as
//! edges, plus the merging-branch builder and stimulus descriptions.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::error::ParamError;
use crate::segment::SegmentElectrical;

/// Segment number. The merge builder uses the conventional numbering where
/// branch A is `1..=n`, the vertex `n+1`, the output trunk follows, and
/// branch B comes last with its highest number adjacent to the vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const INPUT_A: &str = "input_a";
pub const INPUT_B: &str = "input_b";
pub const VERTEX: &str = "vertex";
pub const OUTPUT_PROBE: &str = "output_probe";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    /// Ω
    pub resistance: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Topology {
    pub nodes: Vec<(NodeId, SegmentElectrical)>,
    pub edges: Vec<Edge>,
    pub labels: BTreeMap<String, NodeId>,
}

/// One problem found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum TopologyIssue {
    Empty,
    DuplicateNode(NodeId),
    InvalidSegment(NodeId, ParamError),
    UnknownEndpoint { a: NodeId, b: NodeId },
    SelfEdge(NodeId),
    DuplicateEdge(NodeId, NodeId),
    NonPositiveEdge { a: NodeId, b: NodeId, resistance: f64 },
    Disconnected { components: usize },
    DanglingLabel { label: String, node: NodeId },
}

impl fmt::Display for TopologyIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyIssue::Empty => write!(f, "no nodes"),
            TopologyIssue::DuplicateNode(n) => write!(f, "duplicate node {n}"),
            TopologyIssue::InvalidSegment(n, e) => write!(f, "node {n}: {e}"),
            TopologyIssue::UnknownEndpoint { a, b } => {
                write!(f, "edge {a}-{b} references an unknown node")
            }
            TopologyIssue::SelfEdge(n) => write!(f, "self-edge at node {n}"),
            TopologyIssue::DuplicateEdge(a, b) => write!(f, "duplicate edge {a}-{b}"),
            TopologyIssue::NonPositiveEdge { a, b, resistance } => {
                write!(f, "non-positive edge {a}-{b} ({resistance} Ohm)")
            }
            TopologyIssue::Disconnected { components } => {
                write!(f, "disconnected: {components} components")
            }
            TopologyIssue::DanglingLabel { label, node } => {
                write!(f, "dangling label `{label}` -> node {node}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<TopologyIssue>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.issues.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

impl std::error::Error for ValidationReport {}

/// Checks every structural invariant and reports all violations at once.
pub fn validate(t: &Topology) -> Result<(), ValidationReport> {
    let mut issues = Vec::new();
    if t.nodes.is_empty() {
        issues.push(TopologyIssue::Empty);
    }
    let mut index = HashMap::new();
    for (i, (id, seg)) in t.nodes.iter().enumerate() {
        if index.insert(*id, i).is_some() {
            issues.push(TopologyIssue::DuplicateNode(*id));
        }
        if let Err(e) = seg.validate() {
            issues.push(TopologyIssue::InvalidSegment(*id, e));
        }
    }

    let mut seen = HashSet::new();
    let mut parent: Vec<usize> = (0..t.nodes.len()).collect();
    for e in &t.edges {
        let (Some(&ia), Some(&ib)) = (index.get(&e.a), index.get(&e.b)) else {
            issues.push(TopologyIssue::UnknownEndpoint { a: e.a, b: e.b });
            continue;
        };
        if e.a == e.b {
            issues.push(TopologyIssue::SelfEdge(e.a));
            continue;
        }
        if !seen.insert((e.a.min(e.b), e.a.max(e.b))) {
            issues.push(TopologyIssue::DuplicateEdge(e.a, e.b));
        }
        if !(e.resistance.is_finite() && e.resistance > 0.0) {
            issues.push(TopologyIssue::NonPositiveEdge {
                a: e.a,
                b: e.b,
                resistance: e.resistance,
            });
        }
        let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
        parent[ra] = rb;
    }
    let components = (0..t.nodes.len())
        .map(|i| find(&mut parent, i))
        .collect::<HashSet<_>>()
        .len();
    if components > 1 {
        issues.push(TopologyIssue::Disconnected { components });
    }

    for (label, node) in &t.labels {
        if !index.contains_key(node) {
            issues.push(TopologyIssue::DanglingLabel {
                label: label.clone(),
                node: *node,
            });
        }
    }

    if issues.is_empty() {
        Ok(())
    } else {
        Err(ValidationReport { issues })
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl Topology {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn label(&self, name: &str) -> Option<NodeId> {
        self.labels.get(name).copied()
    }

    pub fn segment(&self, id: NodeId) -> Option<&SegmentElectrical> {
        self.nodes.iter().find(|(n, _)| *n == id).map(|(_, s)| s)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|(id, _)| *id)
    }

    /// Resistance of the edge joining `i` and `j`, in either order.
    pub fn edge_resistance(&self, i: NodeId, j: NodeId) -> Option<f64> {
        self.edges
            .iter()
            .find(|e| (e.a == i && e.b == j) || (e.a == j && e.b == i))
            .map(|e| e.resistance)
    }

    /// Straight chain of `n` identical segments numbered `1..=n`, joined by
    /// their series resistance. `input_a` is node 1 and `input_b` node `n`.
    pub fn chain(n: u32, seg: SegmentElectrical) -> Result<Self, ParamError> {
        if n == 0 {
            return Err(ParamError::new("n", "chain needs at least one segment"));
        }
        seg.validate()?;
        let nodes = (1..=n).map(|i| (NodeId(i), seg)).collect();
        let edges = (1..n)
            .map(|i| Edge {
                a: NodeId(i),
                b: NodeId(i + 1),
                resistance: seg.r_series,
            })
            .collect();
        let labels = [(INPUT_A.to_string(), NodeId(1)), (INPUT_B.to_string(), NodeId(n))]
            .into_iter()
            .collect();
        Ok(Self { nodes, edges, labels })
    }
}

/// Where the vertex segment's series resistance goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeConvention {
    /// Every edge carries `(R_i + R_j) / 2`, so the vertex resistance
    /// weights all three vertex edges equally.
    SplitHalf,
    /// Input arms use `(R_i + R_j) / 2`; the vertex-to-output edge carries the
    /// vertex resistance in full, as the first series element of the output
    /// trunk. Remaining trunk edges are split-half.
    #[default]
    OutputSeries,
}

impl EdgeConvention {
    pub fn name(self) -> &'static str {
        match self {
            EdgeConvention::SplitHalf => "split-half",
            EdgeConvention::OutputSeries => "output-series",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "split-half" => Some(EdgeConvention::SplitHalf),
            "output-series" => Some(EdgeConvention::OutputSeries),
            _ => None,
        }
    }
}

/// Parameters of the two-branch merge network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeParams {
    pub branch_len: u32,
    pub out_len: u32,
    pub segment: SegmentElectrical,
    /// Series resistance of the vertex segment, Ω.
    pub r_vertex: f64,
    /// When false the vertex has no channel sources.
    pub vertex_sources: bool,
    pub convention: EdgeConvention,
}

impl MergeParams {
    /// Six-segment branches, three-segment output trunk, vertex identical
    /// to the other segments.
    pub fn new(segment: SegmentElectrical) -> Self {
        Self {
            branch_len: 6,
            out_len: 3,
            segment,
            r_vertex: segment.r_series,
            vertex_sources: true,
            convention: EdgeConvention::default(),
        }
    }

    pub fn with_r_vertex(mut self, r_vertex: f64) -> Self {
        self.r_vertex = r_vertex;
        self
    }

    pub fn vertex_id(&self) -> NodeId {
        NodeId(self.branch_len + 1)
    }
}

/// Builds two input chains meeting at a vertex followed by an output trunk.
///
/// Terminal nodes are left open. Labels: `input_a` (segment 1), `input_b`
/// (far end of branch B), `vertex`, `output_probe` (first trunk segment).
pub fn build_merge_topology(p: &MergeParams) -> Result<Topology, ParamError> {
    if p.branch_len < 2 {
        return Err(ParamError::new("branch_len", "must be at least 2"));
    }
    if p.out_len < 1 {
        return Err(ParamError::new("out_len", "must be at least 1"));
    }
    if !(p.r_vertex.is_finite() && p.r_vertex > 0.0) {
        return Err(ParamError::new("r_vertex", "must be positive"));
    }
    p.segment.validate()?;

    let bl = p.branch_len;
    let vertex = NodeId(bl + 1);
    let trunk: Vec<NodeId> = (bl + 2..bl + 2 + p.out_len).map(NodeId).collect();
    let b_start = bl + 2 + p.out_len;
    // branch B, input end first
    let branch_b: Vec<NodeId> = (b_start..b_start + bl).map(NodeId).collect();
    let branch_a: Vec<NodeId> = (1..=bl).map(NodeId).collect();

    let mut vertex_seg = p.segment.with_series_resistance(p.r_vertex);
    if !p.vertex_sources {
        vertex_seg = vertex_seg.passive();
    }
    let mut nodes = Vec::with_capacity((2 * bl + 1 + p.out_len) as usize);
    nodes.extend(branch_a.iter().map(|&n| (n, p.segment)));
    nodes.push((vertex, vertex_seg));
    nodes.extend(trunk.iter().map(|&n| (n, p.segment)));
    nodes.extend(branch_b.iter().map(|&n| (n, p.segment)));

    let series = |id: NodeId| {
        if id == vertex {
            p.r_vertex
        } else {
            p.segment.r_series
        }
    };
    let split = |a: NodeId, b: NodeId| Edge {
        a,
        b,
        resistance: (series(a) + series(b)) / 2.0,
    };

    let mut edges = Vec::with_capacity(nodes.len() - 1);
    for chain in [&branch_a, &branch_b] {
        edges.extend(chain.windows(2).map(|w| split(w[0], w[1])));
        edges.push(split(*chain.last().unwrap(), vertex));
    }
    edges.push(match p.convention {
        EdgeConvention::SplitHalf => split(vertex, trunk[0]),
        EdgeConvention::OutputSeries => Edge {
            a: vertex,
            b: trunk[0],
            resistance: p.r_vertex,
        },
    });
    edges.extend(trunk.windows(2).map(|w| split(w[0], w[1])));

    let labels = [
        (INPUT_A, branch_a[0]),
        (INPUT_B, branch_b[0]),
        (VERTEX, vertex),
        (OUTPUT_PROBE, trunk[0]),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();

    Ok(Topology { nodes, edges, labels })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StimulusKind {
    /// Rectangular current pulse into the node.
    CurrentInjection { amplitude: f64, start: f64, duration: f64 },
    /// Puts a resting, excitable node straight into the depolarizing phase.
    ForceTrigger { time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stimulus {
    pub target: NodeId,
    pub kind: StimulusKind,
}

impl Stimulus {
    pub fn current(target: NodeId, amplitude: f64, start: f64, duration: f64) -> Result<Self, ParamError> {
        let s = Self {
            target,
            kind: StimulusKind::CurrentInjection { amplitude, start, duration },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn force(target: NodeId, time: f64) -> Result<Self, ParamError> {
        let s = Self {
            target,
            kind: StimulusKind::ForceTrigger { time },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        match self.kind {
            StimulusKind::CurrentInjection { amplitude, start, duration } => {
                if !amplitude.is_finite() {
                    return Err(ParamError::new("amplitude", "must be finite"));
                }
                if !(start.is_finite() && start >= 0.0) {
                    return Err(ParamError::new("start", "must be >= 0"));
                }
                if !(duration.is_finite() && duration > 0.0) {
                    return Err(ParamError::new("duration", "must be positive"));
                }
            }
            StimulusKind::ForceTrigger { time } => {
                if !(time.is_finite() && time >= 0.0) {
                    return Err(ParamError::new("time", "must be >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Injected current at time `t`.
    pub fn current_at(&self, t: f64) -> f64 {
        match self.kind {
            StimulusKind::CurrentInjection { amplitude, start, duration } if t >= start && t < start + duration => {
                amplitude
            }
            _ => 0.0,
        }
    }
}
