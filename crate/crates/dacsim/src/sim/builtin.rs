//! Bundled benchmark scenarios on the nine-node graph.

use nalgebra::DVector;

use super::{
    InitialConditions, MonitoredLinks, ObserverConfig, Scenario, TopologyAction, TopologyEvent,
};
use crate::consensus::{staggered_sinusoids, EstimatorDesign, EstimatorKind};
use crate::fdi::{default_observer_poles, FaultModel, FaultWaveform, ObserverGainSpec};
use crate::graph::Graph;
use crate::{real, Scalar};

/// Fault handling used by a bundled scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// No fault is injected.
    Clean,
    /// The benchmark link fault is injected and left uncompensated.
    Fault,
    /// The fault is injected and the estimates correct the couplings.
    FaultAccommodated,
}

const OMEGA: f64 = 1.5;

fn base<T: Scalar>(kind: EstimatorKind) -> Scenario<T> {
    Scenario {
        graph: Graph::nine_node_benchmark(),
        design: EstimatorDesign::benchmark(kind, real(OMEGA))
            .expect("benchmark design is well-formed"),
        signals: staggered_sinusoids(9, real(OMEGA)),
        faults: vec![],
        events: vec![],
        observer: ObserverConfig {
            gain: ObserverGainSpec::Poles(default_observer_poles(real(OMEGA))),
            monitored: MonitoredLinks::All,
        },
        init: InitialConditions::default(),
        t_start: T::zero(),
        t_end: real(50.0),
        dt: real(1e-3),
        record_stride: 10,
        accommodation: false,
        metrics_window: None,
    }
}

/// The benchmark fault: a unit cosine at 0.75 rad/s on the symmetric
/// link between nodes 1 and 2, switched on after t = 25.
fn benchmark_fault<T: Scalar>() -> FaultModel<T> {
    FaultModel {
        from: 1,
        to: 2,
        onset: real(25.0),
        waveform: FaultWaveform::Cosine { amplitude: T::one(), frequency: real(0.75) },
        symmetric: true,
    }
}

fn apply_variant<T: Scalar>(sc: &mut Scenario<T>, variant: Variant) {
    match variant {
        Variant::Clean => {}
        Variant::Fault => sc.faults.push(benchmark_fault()),
        Variant::FaultAccommodated => {
            sc.faults.push(benchmark_fault());
            sc.accommodation = true;
        }
    }
}

/// First bundled experiment: fixed topology, benchmark link fault.
///
/// The internally stable flavor uses a fixed reference observer gain; the
/// robust flavor places the free observer pole from the default list.
pub fn example_one<T: Scalar>(kind: EstimatorKind, variant: Variant) -> Scenario<T> {
    let mut sc = base(kind);
    if kind == EstimatorKind::Isac {
        sc.observer.gain = ObserverGainSpec::K1(DVector::from_vec(vec![
            real(5.3993),
            real(12.1485),
            real(1.7998),
        ]));
    }
    apply_variant(&mut sc, variant);
    sc
}

/// Second bundled experiment: the edge between nodes 3 and 6 is removed
/// at t = 30, splitting the network into two components.
pub fn example_two<T: Scalar>(kind: EstimatorKind, variant: Variant) -> Scenario<T> {
    let mut sc = base(kind);
    sc.events.push(TopologyEvent {
        time: real(30.0),
        action: TopologyAction::RemoveEdge { i: 3, j: 6 },
    });
    apply_variant(&mut sc, variant);
    sc
}

/// Names accepted by [`builtin_scenario`].
pub fn builtin_names() -> &'static [&'static str] {
    &[
        "example1_isac_clean",
        "example1_isac_fault",
        "example1_isac_fault_accommodated",
        "example2_rac_clean",
        "example2_rac_fault",
        "example2_rac_fault_accommodated",
    ]
}

/// Resolves a bundled scenario by name.
pub fn builtin_scenario<T: Scalar>(name: &str) -> Option<Scenario<T>> {
    use EstimatorKind::{Isac, Rac};
    use Variant::{Clean, Fault, FaultAccommodated};
    Some(match name {
        "example1_isac_clean" => example_one(Isac, Clean),
        "example1_isac_fault" => example_one(Isac, Fault),
        "example1_isac_fault_accommodated" => example_one(Isac, FaultAccommodated),
        "example2_rac_clean" => example_two(Rac, Clean),
        "example2_rac_fault" => example_two(Rac, Fault),
        "example2_rac_fault_accommodated" => example_two(Rac, FaultAccommodated),
        _ => return None,
    })
}
