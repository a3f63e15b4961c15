//! On-disk scenario format (TOML) and its mapping to the simulator
//! [`Scenario64`].
//!
//! All polynomial coefficient lists are **ascending-power**:
//! `[9.0, 3.0, 1.0]` is `s^2 + 3s + 9`.

use dacsim::consensus::{staggered_sinusoids, EstimatorDesign, EstimatorKind, ReferenceSignal, Waveform};
use dacsim::fdi::{default_observer_poles, FaultModel, FaultWaveform, ObserverGainSpec};
use dacsim::graph::Graph;
use dacsim::lti::{Polynomial, TransferFunction};
use dacsim::sim::{
    InitialConditions, MonitoredLinks, ObserverConfig, TopologyAction, TopologyEvent,
};
use dacsim::Scenario64;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Builtin token for the bundled nine-node topology.
pub const GRAPH_BUILTIN: &str = "paper9";
/// Builtin token for the bundled staggered-sinusoid signal set.
pub const SIGNALS_BUILTIN: &str = "eq23";

const DEFAULT_OMEGA: f64 = 1.5;
const DEFAULT_DT: f64 = 1e-3;
const DEFAULT_T_END: f64 = 50.0;
const DEFAULT_RECORD_STRIDE: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub graph: GraphSection,
    pub estimator: EstimatorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals: Option<SignalsSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faults: Vec<FaultEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observer: Option<ObserverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    /// `"isac"` or `"rac"`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_num: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_den: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_num: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_den: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub node: Vec<SignalEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalEntry {
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
    /// `"sin"` or `"cos"`.
    pub waveform: String,
    /// Defaults to the estimator's omega.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultEntry {
    pub from: usize,
    pub to: usize,
    pub onset: f64,
    /// `"cosine"`, `"sine"`, `"constant"`, or `"ramp"`.
    pub waveform: String,
    /// Cosine/sine amplitude, constant level, or ramp slope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default)]
    pub symmetric: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventEntry {
    pub time: f64,
    /// Only `"remove_edge"` is defined.
    pub action: String,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitored: Option<MonitoredField>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MonitoredField {
    /// The string `"all"`.
    Token(String),
    /// Explicit `(from, to)` pairs.
    List(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accommodation: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics_window: Option<(f64, f64)>,
}

impl ScenarioFile {
    /// Parses TOML text; parse errors carry line/column positions.
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml_string(&self) -> Result<String, String> {
        toml::to_string_pretty(self).map_err(|e| e.to_string())
    }

    /// Resolves the file into a runnable scenario.
    pub fn to_scenario(&self) -> Result<Scenario64, String> {
        let graph = match (&self.graph.builtin, self.graph.nodes, &self.graph.edges) {
            (Some(name), None, None) => {
                if name == GRAPH_BUILTIN {
                    Graph::nine_node_benchmark()
                } else {
                    return Err(format!(
                        "[graph] unknown builtin {name:?} (expected {GRAPH_BUILTIN:?})"
                    ));
                }
            }
            (None, Some(n), Some(edges)) => {
                Graph::new(n, edges).map_err(|e| format!("[graph] {e}"))?
            }
            _ => {
                return Err(format!(
                    "[graph] give either builtin = {GRAPH_BUILTIN:?} or nodes plus edges"
                ))
            }
        };
        let n = graph.n();

        let kind = match self.estimator.kind.as_str() {
            "isac" => EstimatorKind::Isac,
            "rac" => EstimatorKind::Rac,
            other => {
                return Err(format!(
                    "[estimator] unknown kind {other:?} (expected \"isac\" or \"rac\")"
                ))
            }
        };
        let omega = self.estimator.omega.unwrap_or(DEFAULT_OMEGA);
        if !omega.is_finite() || omega <= 0.0 {
            return Err("[estimator] omega must be positive".into());
        }
        let est = &self.estimator;
        let explicit = [&est.h_num, &est.h_den, &est.g_num, &est.g_den]
            .iter()
            .filter(|o| o.is_some())
            .count();
        let design = match explicit {
            0 => {
                let bench = EstimatorDesign::benchmark(kind, omega)
                    .map_err(|e| format!("[estimator] {e}"))?;
                match &est.d {
                    None => bench,
                    Some(d) => EstimatorDesign::new(
                        kind,
                        bench.h_tf().clone(),
                        bench.g_tf().clone(),
                        Polynomial::new(d.clone()),
                    )
                    .map_err(|e| format!("[estimator] {e}"))?,
                }
            }
            4 => {
                let tf = |num: &Option<Vec<f64>>, den: &Option<Vec<f64>>, name: &str| {
                    TransferFunction::new(
                        Polynomial::new(num.clone().unwrap()),
                        Polynomial::new(den.clone().unwrap()),
                    )
                    .map_err(|e| format!("[estimator] {name}: {e}"))
                };
                let h = tf(&est.h_num, &est.h_den, "h")?;
                let g = tf(&est.g_num, &est.g_den, "g")?;
                let d = Polynomial::new(
                    est.d.clone().unwrap_or_else(|| vec![omega * omega, 0.0, 1.0]),
                );
                EstimatorDesign::new(kind, h, g, d).map_err(|e| format!("[estimator] {e}"))?
            }
            _ => {
                return Err(
                    "[estimator] h_num, h_den, g_num, g_den must be given together".into(),
                )
            }
        };

        let signals = match &self.signals {
            None => staggered_sinusoids(n, omega),
            Some(s) => match (&s.builtin, s.node.is_empty()) {
                (Some(name), true) => {
                    if name == SIGNALS_BUILTIN {
                        staggered_sinusoids(n, omega)
                    } else {
                        return Err(format!(
                            "[signals] unknown builtin {name:?} (expected {SIGNALS_BUILTIN:?})"
                        ));
                    }
                }
                (None, false) => s
                    .node
                    .iter()
                    .map(|e| {
                        let waveform = match e.waveform.as_str() {
                            "sin" => Waveform::Sin,
                            "cos" => Waveform::Cos,
                            other => {
                                return Err(format!(
                                    "[signals] unknown waveform {other:?} (expected \"sin\" or \"cos\")"
                                ))
                            }
                        };
                        Ok(ReferenceSignal {
                            amplitude: e.amplitude,
                            frequency: e.frequency.unwrap_or(omega),
                            phase: e.phase,
                            waveform,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                _ => {
                    return Err(
                        "[signals] give either builtin or per-node entries, not both".into(),
                    )
                }
            },
        };

        let mut faults = Vec::new();
        for f in &self.faults {
            let need = |v: Option<f64>, field: &str| {
                v.ok_or_else(|| {
                    format!("[[faults]] waveform {:?} requires {field}", f.waveform)
                })
            };
            let waveform = match f.waveform.as_str() {
                "cosine" => FaultWaveform::Cosine {
                    amplitude: need(f.amplitude, "amplitude")?,
                    frequency: need(f.frequency, "frequency")?,
                },
                "sine" => FaultWaveform::Sine {
                    amplitude: need(f.amplitude, "amplitude")?,
                    frequency: need(f.frequency, "frequency")?,
                },
                "constant" => FaultWaveform::Constant { level: need(f.amplitude, "amplitude")? },
                "ramp" => FaultWaveform::Ramp { slope: need(f.amplitude, "amplitude")? },
                other => {
                    return Err(format!(
                        "[[faults]] unknown waveform {other:?} (expected cosine, sine, constant, or ramp)"
                    ))
                }
            };
            faults.push(FaultModel {
                from: f.from,
                to: f.to,
                onset: f.onset,
                waveform,
                symmetric: f.symmetric,
            });
        }

        let mut events = Vec::new();
        for e in &self.events {
            if e.action != "remove_edge" {
                return Err(format!(
                    "[[events]] unknown action {:?} (expected \"remove_edge\")",
                    e.action
                ));
            }
            events.push(TopologyEvent {
                time: e.time,
                action: TopologyAction::RemoveEdge { i: e.i, j: e.j },
            });
        }

        let (gain, monitored) = match &self.observer {
            None => (
                ObserverGainSpec::Poles(default_observer_poles(omega)),
                MonitoredLinks::All,
            ),
            Some(o) => {
                let gain = match (&o.poles, &o.k1) {
                    (Some(_), Some(_)) => {
                        return Err("[observer] give poles or k1, not both".into())
                    }
                    (Some(p), None) => ObserverGainSpec::Poles(p.clone()),
                    (None, Some(k)) => ObserverGainSpec::K1(DVector::from_vec(k.clone())),
                    (None, None) => ObserverGainSpec::Poles(default_observer_poles(omega)),
                };
                let monitored = match &o.monitored {
                    None => MonitoredLinks::All,
                    Some(MonitoredField::Token(s)) if s == "all" => MonitoredLinks::All,
                    Some(MonitoredField::Token(s)) => {
                        return Err(format!(
                            "[observer] unknown monitored token {s:?} (expected \"all\" or a list of links)"
                        ))
                    }
                    Some(MonitoredField::List(v)) => MonitoredLinks::List(v.clone()),
                };
                (gain, monitored)
            }
        };

        let run = self.run.clone().unwrap_or(RunSection {
            dt: None,
            t_start: None,
            t_end: None,
            record_stride: None,
            accommodation: None,
            metrics_window: None,
        });

        Ok(Scenario64 {
            graph,
            design,
            signals,
            faults,
            events,
            observer: ObserverConfig { gain, monitored },
            init: InitialConditions::default(),
            t_start: run.t_start.unwrap_or(0.0),
            t_end: run.t_end.unwrap_or(DEFAULT_T_END),
            dt: run.dt.unwrap_or(DEFAULT_DT),
            record_stride: run.record_stride.unwrap_or(DEFAULT_RECORD_STRIDE),
            accommodation: run.accommodation.unwrap_or(false),
            metrics_window: run.metrics_window,
        })
    }

    /// Expresses a scenario as a file, everything explicit.
    ///
    /// Initial conditions are a library-only feature and cannot be
    /// expressed in the file format.
    pub fn from_scenario(sc: &Scenario64) -> Result<Self, String> {
        if !sc.init.agents.is_empty() || !sc.init.observers.is_empty() {
            return Err("initial conditions cannot be expressed in a scenario file".into());
        }
        let coeffs = |p: &Polynomial<f64>| p.coeffs().to_vec();
        let faults = sc
            .faults
            .iter()
            .map(|f| {
                let (waveform, amplitude, frequency) = match f.waveform {
                    FaultWaveform::Cosine { amplitude, frequency } => {
                        ("cosine", amplitude, Some(frequency))
                    }
                    FaultWaveform::Sine { amplitude, frequency } => {
                        ("sine", amplitude, Some(frequency))
                    }
                    FaultWaveform::Constant { level } => ("constant", level, None),
                    FaultWaveform::Ramp { slope } => ("ramp", slope, None),
                };
                FaultEntry {
                    from: f.from,
                    to: f.to,
                    onset: f.onset,
                    waveform: waveform.to_string(),
                    amplitude: Some(amplitude),
                    frequency,
                    symmetric: f.symmetric,
                }
            })
            .collect();
        let events = sc
            .events
            .iter()
            .map(|e| {
                let TopologyAction::RemoveEdge { i, j } = e.action;
                EventEntry { time: e.time, action: "remove_edge".to_string(), i, j }
            })
            .collect();
        let (poles, k1) = match &sc.observer.gain {
            ObserverGainSpec::Poles(p) => (Some(p.clone()), None),
            ObserverGainSpec::K1(k) => (None, Some(k.iter().copied().collect())),
        };
        let monitored = match &sc.observer.monitored {
            MonitoredLinks::All => MonitoredField::Token("all".to_string()),
            MonitoredLinks::List(v) => MonitoredField::List(v.clone()),
        };
        Ok(ScenarioFile {
            graph: GraphSection {
                builtin: None,
                nodes: Some(sc.graph.n()),
                edges: Some(sc.graph.edges().collect()),
            },
            estimator: EstimatorSection {
                kind: match sc.design.kind {
                    EstimatorKind::Isac => "isac".to_string(),
                    EstimatorKind::Rac => "rac".to_string(),
                },
                omega: Some(sc.design.omega()),
                h_num: Some(coeffs(sc.design.h_tf().num())),
                h_den: Some(coeffs(sc.design.h_tf().den())),
                g_num: Some(coeffs(sc.design.g_tf().num())),
                g_den: Some(coeffs(sc.design.g_tf().den())),
                d: Some(coeffs(&sc.design.d)),
            },
            signals: Some(SignalsSection {
                builtin: None,
                node: sc
                    .signals
                    .iter()
                    .map(|s| SignalEntry {
                        amplitude: s.amplitude,
                        phase: s.phase,
                        waveform: match s.waveform {
                            Waveform::Sin => "sin".to_string(),
                            Waveform::Cos => "cos".to_string(),
                        },
                        frequency: Some(s.frequency),
                    })
                    .collect(),
            }),
            faults,
            events,
            observer: Some(ObserverSection { poles, k1, monitored: Some(monitored) }),
            run: Some(RunSection {
                dt: Some(sc.dt),
                t_start: Some(sc.t_start),
                t_end: Some(sc.t_end),
                record_stride: Some(sc.record_stride),
                accommodation: Some(sc.accommodation),
                metrics_window: sc.metrics_window,
            }),
        })
    }
}
