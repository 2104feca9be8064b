use dendrite_vertex::logic::{run_case, skew_tolerance, InputDrive};
use dendrite_vertex::network::{INPUT_A, INPUT_B, OUTPUT_PROBE, VERTEX};
use dendrite_vertex::{
    build_merge_topology, classify_gate, derive_electrical, detect_output, pulse_width, simulate, truth_table,
    GateKind, MembraneConstants, MergeParams, NodeId, SegmentElectrical, SegmentGeometry, SimConfig, Topology,
    TruthTable,
};

// Inside the XOR window of the default network.
const XOR_POINT: f64 = 210e6;

fn seg() -> SegmentElectrical {
    derive_electrical(&SegmentGeometry::default(), &MembraneConstants::default()).unwrap()
}

fn merge(r: f64) -> Topology {
    build_merge_topology(&MergeParams::new(seg()).with_r_vertex(r)).unwrap()
}

fn table(r: f64) -> TruthTable {
    truth_table(
        &merge(r),
        &InputDrive::default(),
        &SimConfig::default(),
        &MembraneConstants::default(),
    )
    .unwrap()
}

#[test]
fn gate_by_vertex_resistance() {
    assert_eq!(table(XOR_POINT), TruthTable::from_bits([0, 1, 1, 0]));
    assert_eq!(classify_gate(&table(50e6)), GateKind::Or);
    assert_eq!(classify_gate(&table(350e6)), GateKind::False);
}

#[test]
fn inputs_are_symmetric() {
    for r in [99.9e6, 150e6, XOR_POINT, 300e6] {
        let tt = table(r);
        assert_eq!(tt.get(false, true), tt.get(true, false), "r = {r}");
        assert!(!tt.get(false, false));
    }
}

#[test]
fn figure_cases_at_operating_point() {
    let mc = MembraneConstants::default();
    let topo = merge(XOR_POINT);
    let probe = topo.label(OUTPUT_PROBE).unwrap();
    let cfg = SimConfig::default();
    let one = run_case(&topo, &InputDrive::default(), true, false, &cfg, &mc).unwrap();
    let both = run_case(&topo, &InputDrive::default(), true, true, &cfg, &mc).unwrap();
    assert!(detect_output(&one, probe).unwrap());
    assert!(!detect_output(&both, probe).unwrap());
    // both inputs: segment 8 never even starts to depolarize
    assert!(both.trigger_times(probe).is_empty());
}

#[test]
fn vertex_pulse_narrows_with_both_inputs() {
    let mc = MembraneConstants::default();
    let cfg = SimConfig {
        record_stride: 1,
        ..SimConfig::default()
    };
    for r in [200e6, XOR_POINT, 222e6] {
        let topo = merge(r);
        let v = topo.label(VERTEX).unwrap();
        let one = run_case(&topo, &InputDrive::default(), true, false, &cfg, &mc).unwrap();
        let both = run_case(&topo, &InputDrive::default(), true, true, &cfg, &mc).unwrap();
        let w1 = pulse_width(&one, v, &mc).unwrap().unwrap();
        let w2 = pulse_width(&both, v, &mc).unwrap().unwrap();
        assert!(w2 < w1, "r = {r}: {w2} vs {w1}");
    }
}

#[test]
fn single_input_vertex_width_fixture() {
    // frozen from the first validated run at 210 MΩ, 1 µs sampling
    let mc = MembraneConstants::default();
    let cfg = SimConfig {
        record_stride: 1,
        ..SimConfig::default()
    };
    let topo = merge(XOR_POINT);
    let w = run_case(&topo, &InputDrive::default(), true, false, &cfg, &mc).unwrap();
    let width = pulse_width(&w, topo.label(VERTEX).unwrap(), &mc).unwrap().unwrap();
    assert!((width - SINGLE_INPUT_WIDTH).abs() < 1e-9, "{width}");
}

const SINGLE_INPUT_WIDTH: f64 = 1.004959489e-3;

#[test]
fn quiescent_nodes_have_no_width() {
    let mc = MembraneConstants::default();
    let topo = merge(XOR_POINT);
    let w = simulate(&topo, &[], &SimConfig::default(), &mc).unwrap();
    assert_eq!(pulse_width(&w, NodeId(7), &mc).unwrap(), None);
    assert!(!detect_output(&w, NodeId(8)).unwrap());
}

#[test]
fn voltages_stay_within_threshold_band() {
    let mc = MembraneConstants::default();
    let topo = merge(XOR_POINT);
    let cfg = SimConfig {
        record_stride: 1,
        ..SimConfig::default()
    };
    for (a, b) in TruthTable::inputs() {
        let w = run_case(&topo, &InputDrive::default(), a, b, &cfg, &mc).unwrap();
        for v in w.voltages.iter().flatten() {
            assert!(*v >= mc.v_min - 5e-3 && *v <= mc.v_max + 5e-3, "{v}");
        }
    }
}

#[test]
fn runs_are_bit_identical() {
    let mc = MembraneConstants::default();
    let topo = merge(XOR_POINT);
    let cfg = SimConfig::default();
    let a = run_case(&topo, &InputDrive::default(), true, true, &cfg, &mc).unwrap();
    let b = run_case(&topo, &InputDrive::default(), true, true, &cfg, &mc).unwrap();
    assert_eq!(a, b);
}

#[test]
fn head_on_pulses_annihilate_in_odd_chains() {
    let mc = MembraneConstants::default();
    let drive = InputDrive::default();
    for n in [9u32, 13, 17, 21] {
        let topo = Topology::chain(n, seg()).unwrap();
        let stim = [
            drive.stimulus(topo.label(INPUT_A).unwrap(), 0.0).unwrap(),
            drive.stimulus(topo.label(INPUT_B).unwrap(), 0.0).unwrap(),
        ];
        let w = simulate(&topo, &stim, &SimConfig::default(), &mc).unwrap();
        let t: Vec<Vec<f64>> = (1..=n).map(|i| w.trigger_times(NodeId(i))).collect();
        assert!(t.iter().all(|x| x.len() == 1), "n = {n}: {t:?}");
        let mid = (n as usize - 1) / 2;
        for i in 0..mid {
            assert!(t[i][0] < t[i + 1][0]);
            // mirror image
            assert!((t[i][0] - t[n as usize - 1 - i][0]).abs() < 1e-9);
        }
    }
}

#[test]
fn lone_pulse_crosses_whole_chain_once() {
    let mc = MembraneConstants::default();
    let topo = Topology::chain(21, seg()).unwrap();
    let stim = [InputDrive::default().stimulus(NodeId(1), 0.0).unwrap()];
    let w = simulate(&topo, &stim, &SimConfig::default(), &mc).unwrap();
    for i in 1..=21 {
        assert_eq!(w.trigger_times(NodeId(i)).len(), 1, "node {i}");
    }
}

#[test]
fn disabled_vertex_makes_and_gate() {
    let mut p = MergeParams::new(seg()).with_r_vertex(60e6);
    p.vertex_sources = false;
    let topo = build_merge_topology(&p).unwrap();
    let mc = MembraneConstants::default();
    let tt = truth_table(&topo, &InputDrive::default(), &SimConfig::default(), &mc).unwrap();
    assert_eq!(classify_gate(&tt), GateKind::And);
    let w = run_case(&topo, &InputDrive::default(), true, true, &SimConfig::default(), &mc).unwrap();
    // a passive vertex never changes phase
    assert_eq!(w.events_at(NodeId(7)).count(), 0);
}

#[test]
fn simultaneity_tolerance_is_finite() {
    let mc = MembraneConstants::default();
    let topo = merge(XOR_POINT);
    let tol = skew_tolerance(&topo, &InputDrive::default(), 10e-6, 3e-3, &SimConfig::default(), &mc)
        .unwrap()
        .unwrap();
    assert!(tol < 3e-3, "{tol}");
    // the last tolerated skew still annihilates, the next one does not
    let probe = topo.label(OUTPUT_PROBE).unwrap();
    let at = |skew: f64| {
        let d = InputDrive {
            skew,
            ..InputDrive::default()
        };
        detect_output(&run_case(&topo, &d, true, true, &SimConfig::default(), &mc).unwrap(), probe).unwrap()
    };
    assert!(!at(tol));
    assert!(at(tol + 10e-6));
    // not XOR at all → no tolerance
    assert_eq!(
        skew_tolerance(&merge(50e6), &InputDrive::default(), 10e-6, 1e-3, &SimConfig::default(), &mc).unwrap(),
        None
    );
}
