//! Scenario-driven simulation of consensus networks under link faults.
//!
//! [`run`] integrates all agents and all link observers as one coupled ODE
//! with classical fixed-step RK4. Communicated values are recomputed at
//! every integration stage from the stage states and corrupted by the
//! active faults; topology events apply between steps, never mid-step;
//! identical inputs produce bit-identical outputs.

mod builtin;
pub mod rk4;

pub use builtin::{builtin_names, builtin_scenario, example_one, example_two, Variant};

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::consensus::{
    isac_derivative_corrected, rac_derivative_corrected, verify_design, AgentState,
    EstimatorDesign, EstimatorKind, ReferenceSignal,
};
use crate::error::{Error, Result};
use crate::fdi::{build_extended, uio_design, FaultModel, ObserverGainSpec, ObserverMatrices};
use crate::graph::Graph;
use crate::{real, tol, Scalar};

/// Permitted misalignment, in fractions of a step, between dt and the
/// times that must land on step boundaries.
const GRID_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopologyAction {
    RemoveEdge { i: usize, j: usize },
}

/// A timed change to the communication graph, applied between steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopologyEvent<T: Scalar> {
    pub time: T,
    pub action: TopologyAction,
}

/// Which directed links carry a fault observer at the receiver.
#[derive(Clone, Debug, PartialEq)]
pub enum MonitoredLinks {
    /// One observer per directed link of the initial graph.
    All,
    /// Explicit `(from, to)` pairs; must be edges of the initial graph.
    List(Vec<(usize, usize)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObserverConfig<T: Scalar> {
    pub gain: ObserverGainSpec<T>,
    pub monitored: MonitoredLinks,
}

/// Initial conditions; anything not listed starts at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialConditions<T: Scalar> {
    /// Either empty (all agents at rest) or one state per agent.
    pub agents: Vec<AgentState<T>>,
    /// Observer states by directed link; links must be monitored.
    pub observers: Vec<((usize, usize), DVector<T>)>,
}

impl<T: Scalar> Default for InitialConditions<T> {
    fn default() -> Self {
        Self { agents: Vec::new(), observers: Vec::new() }
    }
}

/// A complete experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T: Scalar> {
    pub graph: Graph,
    pub design: EstimatorDesign<T>,
    pub signals: Vec<ReferenceSignal<T>>,
    pub faults: Vec<FaultModel<T>>,
    pub events: Vec<TopologyEvent<T>>,
    pub observer: ObserverConfig<T>,
    pub init: InitialConditions<T>,
    pub t_start: T,
    pub t_end: T,
    pub dt: T,
    pub record_stride: usize,
    pub accommodation: bool,
    /// Metric window override; `None` selects the default window.
    pub metrics_window: Option<(T, T)>,
}

impl<T: Scalar> Scenario<T> {
    /// Number of integration steps, checking that the horizon is an
    /// integer multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        let span = (self.t_end - self.t_start).to_f64().unwrap_or(f64::NAN);
        let dt = self.dt.to_f64().unwrap_or(f64::NAN);
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidScenario("dt must be positive".into()));
        }
        if !span.is_finite() || span <= 0.0 {
            return Err(Error::InvalidScenario("t_end must exceed t_start".into()));
        }
        let ratio = span / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > GRID_SLACK {
            return Err(Error::InvalidScenario(format!(
                "t_end - t_start = {span} is not an integer multiple of dt = {dt}"
            )));
        }
        Ok(steps as usize)
    }

    /// The resolved, sorted list of monitored directed links.
    pub fn monitored_links(&self) -> Result<Vec<(usize, usize)>> {
        let mut links = match &self.observer.monitored {
            MonitoredLinks::All => {
                let mut v = Vec::new();
                for (i, j) in self.graph.edges() {
                    v.push((i, j));
                    v.push((j, i));
                }
                v
            }
            MonitoredLinks::List(v) => v.clone(),
        };
        links.sort_unstable();
        for w in links.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidScenario(format!(
                    "monitored link ({}, {}) listed twice",
                    w[0].0, w[0].1
                )));
            }
        }
        for &(from, to) in &links {
            if from == to || !self.graph.has_edge(from, to) {
                return Err(Error::InvalidScenario(format!(
                    "monitored link ({from}, {to}) is not an edge of the graph"
                )));
            }
        }
        Ok(links)
    }

    /// Full structural validation; [`run`] performs it implicitly.
    pub fn validate(&self) -> Result<()> {
        let n = self.graph.n();
        if n == 0 {
            return Err(Error::InvalidScenario("graph has no nodes".into()));
        }
        if self.signals.len() != n {
            return Err(Error::InvalidScenario(format!(
                "{} signals declared for {} nodes",
                self.signals.len(),
                n
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidScenario("record_stride must be at least 1".into()));
        }
        if self.design.d.is_zero() {
            return Err(Error::InvalidScenario("internal model d(s) is zero".into()));
        }
        self.steps()?;

        let t_start = self.t_start.to_f64().unwrap_or(f64::NAN);
        let t_end = self.t_end.to_f64().unwrap_or(f64::NAN);
        let dt = self.dt.to_f64().unwrap_or(f64::NAN);
        let on_grid = |t: f64| {
            let r = (t - t_start) / dt;
            (r - r.round()).abs() <= GRID_SLACK
        };

        for f in &self.faults {
            if f.from == f.to
                || f.from == 0
                || f.to == 0
                || f.from > n
                || f.to > n
                || !self.graph.has_edge(f.from, f.to)
            {
                return Err(Error::InvalidScenario(format!(
                    "fault declared on ({}, {}), which is not an edge",
                    f.from, f.to
                )));
            }
            let onset = f.onset.to_f64().unwrap_or(f64::NAN);
            if !onset.is_finite() || !on_grid(onset) {
                return Err(Error::InvalidScenario(format!(
                    "fault onset {onset} is not an integer multiple of dt"
                )));
            }
        }

        let mut scratch = self.graph.clone();
        let mut events = self.events.clone();
        events.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        for ev in &events {
            let time = ev.time.to_f64().unwrap_or(f64::NAN);
            if !(t_start - GRID_SLACK * dt..=t_end + GRID_SLACK * dt).contains(&time) || !on_grid(time) {
                return Err(Error::InvalidScenario(format!(
                    "event time {time} must lie in [t_start, t_end] on the step grid"
                )));
            }
            let TopologyAction::RemoveEdge { i, j } = ev.action;
            scratch = scratch
                .remove_edge(i, j)
                .map_err(|e| Error::InvalidScenario(format!("event at t = {time}: {e}")))?;
        }

        let monitored = self.monitored_links()?;
        let mh = self.design.h.dim();
        let mg = self.design.g.dim();
        if !self.init.agents.is_empty() {
            if self.init.agents.len() != n {
                return Err(Error::InvalidScenario(format!(
                    "{} initial agent states for {} nodes",
                    self.init.agents.len(),
                    n
                )));
            }
            for a in &self.init.agents {
                if a.x1.len() != mh || a.x2.len() != mg {
                    return Err(Error::InvalidScenario(
                        "initial agent state dimensions do not match the design".into(),
                    ));
                }
            }
        }
        let ext_dim = self.design.monitored_dim() + 1;
        let mut seen = std::collections::BTreeSet::new();
        for (link, z) in &self.init.observers {
            if !monitored.contains(link) {
                return Err(Error::InvalidScenario(format!(
                    "initial observer state given for unmonitored link ({}, {})",
                    link.0, link.1
                )));
            }
            if !seen.insert(*link) {
                return Err(Error::InvalidScenario(format!(
                    "initial observer state for link ({}, {}) listed twice",
                    link.0, link.1
                )));
            }
            if z.len() != ext_dim {
                return Err(Error::InvalidScenario(format!(
                    "initial observer state length {} does not match extended dimension {}",
                    z.len(),
                    ext_dim
                )));
            }
        }

        if let Some((a, b)) = self.metrics_window {
            if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
                return Err(Error::InvalidScenario(
                    "metrics window must satisfy a < b".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Full simulator state at the end of a run, for restarts and
/// convergence studies.
#[derive(Clone, Debug, PartialEq)]
pub struct FinalState<T: Scalar> {
    pub t: T,
    pub agents: Vec<AgentState<T>>,
    /// Observer states aligned with the monitored-link list.
    pub observers: Vec<DVector<T>>,
}

impl<T: Scalar> FinalState<T> {
    /// All states as one vector in layout order (agents, then observers).
    pub fn flatten(&self) -> DVector<T> {
        let mut out = Vec::new();
        for a in &self.agents {
            out.extend(a.x1.iter().copied());
            out.extend(a.x2.iter().copied());
        }
        for z in &self.observers {
            out.extend(z.iter().copied());
        }
        DVector::from_vec(out)
    }
}

/// Recorded trajectories. All per-sample vectors share the time axis;
/// observer columns are aligned with `monitored`, average columns with
/// `final_components`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries<T: Scalar> {
    pub t: Vec<T>,
    /// Per-node estimates.
    pub nu: Vec<Vec<T>>,
    /// Per-node tracking error against the node's current component average.
    pub err: Vec<Vec<T>>,
    /// Component averages, one column per component of the final graph.
    pub phibar: Vec<Vec<T>>,
    /// Per-observer fault estimates (frozen once the link is removed).
    pub fhat: Vec<Vec<T>>,
    /// Per-observer applied fault values (as integrated).
    pub fault_truth: Vec<Vec<T>>,
    /// Per-observer true extended-state error norms (harness-side truth,
    /// never available to agents).
    pub obs_err_norm: Vec<Vec<T>>,
    /// Per-node coupling-subsystem state norms.
    pub x2norm: Vec<Vec<T>>,
    pub monitored: Vec<(usize, usize)>,
    pub final_components: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
    pub final_state: FinalState<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

struct EvalCtx<'a, T: Scalar> {
    design: &'a EstimatorDesign<T>,
    signals: &'a [ReferenceSignal<T>],
    faults: &'a [FaultModel<T>],
    neighbors: &'a [Vec<usize>],
    monitored: &'a [(usize, usize)],
    obs_index: &'a BTreeMap<(usize, usize), usize>,
    obs: Option<&'a ObserverMatrices<T>>,
    obs_active: &'a [bool],
    last_fhat: &'a [T],
    accommodation: bool,
    mh: usize,
    mg: usize,
    me: usize,
    obs_offset: usize,
    n: usize,
}

struct StageOut<T: Scalar> {
    dy: DVector<T>,
    nu: Vec<T>,
    /// Per-link corrupted measurement (zero for inactive links).
    measured: Vec<T>,
    /// Per-link fault value applied this stage.
    fault_value: Vec<T>,
    /// Per-link fault estimates (frozen value for inactive links).
    fhat: Vec<T>,
}

fn sender_exchange<T: Scalar>(design: &EstimatorDesign<T>, y: &DVector<T>, i: usize) -> T {
    let mh = design.h.dim();
    let mg = design.g.dim();
    let off = (i - 1) * (mh + mg);
    match design.kind {
        EstimatorKind::Isac => (&design.h.c * y.rows(off, mh))[0],
        EstimatorKind::Rac => (&design.g.c * y.rows(off + mh, mg))[0],
    }
}

/// One evaluation of the coupled network at `(t, y)` under the given
/// per-fault step-activity flags.
fn eval<T: Scalar>(ctx: &EvalCtx<T>, t: T, y: &DVector<T>, fault_active: &[bool]) -> StageOut<T> {
    let n = ctx.n;
    let agent_dim = ctx.mh + ctx.mg;

    let exch: Vec<T> = (1..=n).map(|i| sender_exchange(ctx.design, y, i)).collect();

    let fault_sum = |from: usize, to: usize| -> T {
        let mut s = T::zero();
        for (fi, fm) in ctx.faults.iter().enumerate() {
            if fault_active[fi] && fm.affects(from, to) {
                s += fm.waveform_value(t);
            }
        }
        s
    };

    let nlinks = ctx.monitored.len();
    let mut measured = vec![T::zero(); nlinks];
    let mut fault_value = vec![T::zero(); nlinks];
    let mut fhat = vec![T::zero(); nlinks];
    for (idx, &(from, to)) in ctx.monitored.iter().enumerate() {
        fault_value[idx] = fault_sum(from, to);
        if !ctx.obs_active[idx] {
            fhat[idx] = ctx.last_fhat[idx];
            continue;
        }
        let m = exch[from - 1] + fault_value[idx];
        measured[idx] = m;
        let ob = ctx.obs.expect("active observers require designed matrices");
        let z_last = y[ctx.obs_offset + idx * ctx.me + ctx.me - 1];
        fhat[idx] = z_last + ob.h[ctx.me - 1] * m;
    }

    let mut dy = DVector::zeros(y.len());
    let mut nu = vec![T::zero(); n];
    // Companion value transmitted as the observer drive: the sender's mu
    // for ISAC, the sender's negated estimate for RAC.
    let mut drive_src = vec![T::zero(); n];
    let mut plain: Vec<T> = Vec::new();
    let mut corrected: Vec<(T, T)> = Vec::new();
    for j in 1..=n {
        plain.clear();
        corrected.clear();
        for &l in &ctx.neighbors[j - 1] {
            let recv = exch[l - 1] + fault_sum(l, j);
            let correction = if ctx.accommodation {
                ctx.obs_index
                    .get(&(l, j))
                    .filter(|&&idx| ctx.obs_active[idx])
                    .map(|&idx| fhat[idx])
            } else {
                None
            };
            match correction {
                Some(fh) => corrected.push((recv, fh)),
                None => plain.push(recv),
            }
        }
        let off = (j - 1) * agent_dim;
        let state = AgentState {
            x1: y.rows(off, ctx.mh).into_owned(),
            x2: y.rows(off + ctx.mh, ctx.mg).into_owned(),
        };
        let phi = ctx.signals[j - 1].eval(t);
        match ctx.design.kind {
            EstimatorKind::Isac => {
                let d = isac_derivative_corrected(
                    ctx.design,
                    &state,
                    phi,
                    exch[j - 1],
                    &plain,
                    &corrected,
                );
                dy.rows_mut(off, ctx.mh).copy_from(&d.dx1);
                dy.rows_mut(off + ctx.mh, ctx.mg).copy_from(&d.dx2);
                nu[j - 1] = d.nu;
                drive_src[j - 1] = d.mu;
            }
            EstimatorKind::Rac => {
                let d = rac_derivative_corrected(
                    ctx.design,
                    &state,
                    phi,
                    exch[j - 1],
                    &plain,
                    &corrected,
                );
                dy.rows_mut(off, ctx.mh).copy_from(&d.dx1);
                dy.rows_mut(off + ctx.mh, ctx.mg).copy_from(&d.dx2);
                nu[j - 1] = d.nu;
                drive_src[j - 1] = -d.nu;
            }
        }
    }

    if let Some(ob) = ctx.obs {
        for (idx, &(from, _)) in ctx.monitored.iter().enumerate() {
            if !ctx.obs_active[idx] {
                continue;
            }
            let drive = drive_src[from - 1] + fault_value[idx];
            let zoff = ctx.obs_offset + idx * ctx.me;
            let dz = &ob.f * y.rows(zoff, ctx.me) + &ob.tb * drive + &ob.k * measured[idx];
            dy.rows_mut(zoff, ctx.me).copy_from(&dz);
        }
    }

    StageOut { dy, nu, measured, fault_value, fhat }
}

fn component_map(g: &Graph) -> (Vec<Vec<usize>>, Vec<usize>) {
    let comps = g.components();
    let mut of = vec![0usize; g.n()];
    for (ci, c) in comps.iter().enumerate() {
        for &i in c {
            of[i - 1] = ci;
        }
    }
    (comps, of)
}

/// Simulates a scenario.
///
/// Design feasibility is advisory: failures are reported in
/// [`TimeSeries::warnings`] and the run proceeds. Observer design
/// failures and non-finite states abort with an error.
pub fn run<T: Scalar>(sc: &Scenario<T>) -> Result<TimeSeries<T>> {
    sc.validate()?;
    let n = sc.graph.n();
    let design = &sc.design;
    let mh = design.h.dim();
    let mg = design.g.dim();
    let agent_dim = mh + mg;

    let lap = sc.graph.laplacian::<T>()?;
    let dens: Vec<_> = sc.signals.iter().map(|s| s.generator_denominator()).collect();
    let report = verify_design(design.h_tf(), design.g_tf(), &design.d, &dens, &lap.eigenvalues)?;
    let mut warnings = Vec::new();
    if !report.premise_connected {
        warnings.push("design check: communication graph is not connected".to_string());
    }
    if !report.premise_no_common_unstable {
        warnings.push("design check: h and g share an unstable root".to_string());
    }
    if report.input_models.iter().any(|&b| !b) {
        warnings.push(
            "design check: an input generator is not absorbed by the internal model".to_string(),
        );
    }
    if !report.h_internal_model.pass {
        warnings.push("design check: n_h - d_h is not divisible by d".to_string());
    }
    if !report.h_stable {
        warnings.push("design check: h is not stable".to_string());
    }
    if report.coupling.iter().any(|c| !c.pass) {
        warnings
            .push("design check: coupled polynomial unstable at a Laplacian eigenvalue".to_string());
    }
    if !report.g_internal_model.pass {
        warnings.push("design check: d_g is not divisible by d".to_string());
    }

    let monitored = sc.monitored_links()?;
    let ext = build_extended(design);
    let me = ext.dim();
    let obs = if monitored.is_empty() {
        None
    } else {
        Some(uio_design(&ext, &sc.observer.gain)?)
    };
    let obs_offset = n * agent_dim;
    let obs_index: BTreeMap<(usize, usize), usize> =
        monitored.iter().copied().zip(0..).collect();

    let mut y = DVector::<T>::zeros(obs_offset + monitored.len() * me);
    for (i, a) in sc.init.agents.iter().enumerate() {
        y.rows_mut(i * agent_dim, mh).copy_from(&a.x1);
        y.rows_mut(i * agent_dim + mh, mg).copy_from(&a.x2);
    }
    for (link, z) in &sc.init.observers {
        y.rows_mut(obs_offset + obs_index[link] * me, me).copy_from(z);
    }

    let mut events = sc.events.clone();
    events.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
    let mut final_graph = sc.graph.clone();
    for ev in &events {
        let TopologyAction::RemoveEdge { i, j } = ev.action;
        final_graph = final_graph.remove_edge(i, j)?;
    }
    let final_components = final_graph.components();
    let anchors: Vec<usize> = final_components.iter().map(|c| c[0]).collect();

    let mut topo = sc.graph.clone();
    let mut neighbors: Vec<Vec<usize>> = (1..=n).map(|i| topo.neighbors(i)).collect();
    let (mut components, mut comp_of) = component_map(&topo);
    let mut obs_active: Vec<bool> = vec![true; monitored.len()];
    let mut last_fhat: Vec<T> = vec![T::zero(); monitored.len()];
    let mut last_err_norm: Vec<T> = vec![T::zero(); monitored.len()];

    let steps = sc.steps()?;
    let stride = sc.record_stride;
    let dtf = sc.dt.to_f64().unwrap_or(f64::NAN);
    let t_startf = sc.t_start.to_f64().unwrap_or(f64::NAN);
    let onsets: Vec<f64> = sc
        .faults
        .iter()
        .map(|f| f.onset.to_f64().unwrap_or(f64::NAN))
        .collect();

    let mut rec_t = Vec::new();
    let mut rec_nu = Vec::new();
    let mut rec_err = Vec::new();
    let mut rec_phibar = Vec::new();
    let mut rec_fhat = Vec::new();
    let mut rec_truth = Vec::new();
    let mut rec_oerr = Vec::new();
    let mut rec_x2 = Vec::new();

    macro_rules! mkctx {
        () => {
            EvalCtx {
                design,
                signals: &sc.signals,
                faults: &sc.faults,
                neighbors: &neighbors,
                monitored: &monitored,
                obs_index: &obs_index,
                obs: obs.as_ref(),
                obs_active: &obs_active,
                last_fhat: &last_fhat,
                accommodation: sc.accommodation,
                mh,
                mg,
                me,
                obs_offset,
                n,
            }
        };
    }

    let mut ev_ptr = 0;
    for k in 0..=steps {
        let t = sc.t_start + sc.dt * real(k as f64);
        let tf = t_startf + dtf * k as f64;

        // Step-aligned fault activity: a step never straddles an onset.
        let active: Vec<bool> = onsets.iter().map(|&o| tf >= o - dtf / 2.0).collect();

        while ev_ptr < events.len()
            && events[ev_ptr].time.to_f64().unwrap_or(f64::INFINITY) <= tf + dtf / 2.0
        {
            let TopologyAction::RemoveEdge { i, j } = events[ev_ptr].action;
            topo = topo.remove_edge(i, j)?;
            neighbors = (1..=n).map(|v| topo.neighbors(v)).collect();
            let (c, of) = component_map(&topo);
            components = c;
            comp_of = of;
            for (idx, &(from, to)) in monitored.iter().enumerate() {
                if obs_active[idx] && !topo.has_edge(from, to) {
                    // Freeze the estimate this observer would report now.
                    let mut fval = T::zero();
                    for (fi, fm) in sc.faults.iter().enumerate() {
                        if active[fi] && fm.affects(from, to) {
                            fval += fm.waveform_value(t);
                        }
                    }
                    let m = sender_exchange(design, &y, from) + fval;
                    let ob = obs.as_ref().expect("active observer without matrices");
                    last_fhat[idx] = y[obs_offset + idx * me + me - 1] + ob.h[me - 1] * m;
                    obs_active[idx] = false;
                }
            }
            ev_ptr += 1;
        }

        for v in y.iter() {
            let x = v.to_f64().unwrap_or(f64::NAN);
            if !x.is_finite() || x.abs() > tol::DIVERGENCE {
                return Err(Error::Divergence { t: tf });
            }
        }

        if k % stride == 0 || k == steps {
            let row = {
                let ctx = mkctx!();
                eval(&ctx, t, &y, &active)
            };
            let comp_avg: Vec<T> = components
                .iter()
                .map(|c| {
                    c.iter().map(|&i| sc.signals[i - 1].eval(t)).sum::<T>()
                        / real(c.len() as f64)
                })
                .collect();
            rec_err.push(
                (0..n)
                    .map(|i| row.nu[i] - comp_avg[comp_of[i]])
                    .collect::<Vec<T>>(),
            );
            rec_phibar.push(
                anchors
                    .iter()
                    .map(|&a| comp_avg[comp_of[a - 1]])
                    .collect::<Vec<T>>(),
            );
            rec_x2.push(
                (0..n)
                    .map(|i| y.rows(i * agent_dim + mh, mg).norm())
                    .collect::<Vec<T>>(),
            );
            let mut oerr = Vec::with_capacity(monitored.len());
            for (idx, &(from, _)) in monitored.iter().enumerate() {
                if obs_active[idx] {
                    let ob = obs.as_ref().expect("active observer without matrices");
                    let mut xtrue = DVector::<T>::zeros(me);
                    let boff = (from - 1) * agent_dim;
                    match design.kind {
                        EstimatorKind::Isac => {
                            xtrue.rows_mut(0, mh).copy_from(&y.rows(boff, mh))
                        }
                        EstimatorKind::Rac => {
                            xtrue.rows_mut(0, mg).copy_from(&y.rows(boff + mh, mg))
                        }
                    }
                    xtrue[me - 1] = row.fault_value[idx];
                    let xhat = y.rows(obs_offset + idx * me, me) + &ob.h * row.measured[idx];
                    let en = (xtrue - xhat).norm();
                    last_err_norm[idx] = en;
                    last_fhat[idx] = row.fhat[idx];
                    oerr.push(en);
                } else {
                    oerr.push(last_err_norm[idx]);
                }
            }
            rec_oerr.push(oerr);
            rec_fhat.push(row.fhat);
            rec_truth.push(row.fault_value);
            rec_nu.push(row.nu);
            rec_t.push(t);
        }

        if k == steps {
            break;
        }
        let ctx = mkctx!();
        y = rk4::step(&mut |tt, yy| eval(&ctx, tt, yy, &active).dy, t, &y, sc.dt);
    }

    let final_state = FinalState {
        t: sc.t_end,
        agents: (0..n)
            .map(|i| AgentState {
                x1: y.rows(i * agent_dim, mh).into_owned(),
                x2: y.rows(i * agent_dim + mh, mg).into_owned(),
            })
            .collect(),
        observers: (0..monitored.len())
            .map(|idx| y.rows(obs_offset + idx * me, me).into_owned())
            .collect(),
    };

    Ok(TimeSeries {
        t: rec_t,
        nu: rec_nu,
        err: rec_err,
        phibar: rec_phibar,
        fhat: rec_fhat,
        fault_truth: rec_truth,
        obs_err_norm: rec_oerr,
        x2norm: rec_x2,
        monitored,
        final_components,
        warnings,
        final_state,
    })
}

/// Windowed summary statistics of a recorded run.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport<T: Scalar> {
    pub window: (T, T),
    /// Per-node RMS tracking error.
    pub rms_err: Vec<T>,
    /// Per-node maximum coupling-state norm.
    pub max_x2: Vec<T>,
    pub monitored: Vec<(usize, usize)>,
    /// Per-observer RMS fault-estimation error.
    pub rms_fhat_err: Vec<T>,
}

/// The window used when a scenario does not override it: the last fifth
/// of short runs, `[40, 50]` once the horizon reaches 50.
pub fn default_window<T: Scalar>(t_last: T) -> (T, T) {
    if t_last >= real(50.0) {
        (real(40.0), real(50.0))
    } else {
        (t_last * real(0.8), t_last)
    }
}

/// Computes windowed metrics; `window = None` selects [`default_window`].
pub fn metrics<T: Scalar>(ts: &TimeSeries<T>, window: Option<(T, T)>) -> Result<MetricsReport<T>> {
    let t_last = *ts
        .t
        .last()
        .ok_or(Error::EmptyWindow { a: 0.0, b: 0.0 })?;
    let (a, b) = window.unwrap_or_else(|| default_window(t_last));
    let slack = real::<T>(tol::TIME_GRID);
    let idx: Vec<usize> = ts
        .t
        .iter()
        .enumerate()
        .filter(|&(_, &t)| t >= a - slack && t <= b + slack)
        .map(|(k, _)| k)
        .collect();
    if idx.is_empty() {
        return Err(Error::EmptyWindow {
            a: a.to_f64().unwrap_or(f64::NAN),
            b: b.to_f64().unwrap_or(f64::NAN),
        });
    }
    let count = real::<T>(idx.len() as f64);
    let nn = ts.nu.first().map_or(0, Vec::len);
    let rms_err = (0..nn)
        .map(|i| {
            (idx.iter().map(|&k| ts.err[k][i] * ts.err[k][i]).sum::<T>() / count).sqrt()
        })
        .collect();
    let max_x2 = (0..nn)
        .map(|i| {
            idx.iter()
                .map(|&k| ts.x2norm[k][i])
                .fold(T::zero(), |m, v| m.max(v))
        })
        .collect();
    let rms_fhat_err = (0..ts.monitored.len())
        .map(|i| {
            (idx.iter()
                .map(|&k| {
                    let e = ts.fhat[k][i] - ts.fault_truth[k][i];
                    e * e
                })
                .sum::<T>()
                / count)
                .sqrt()
        })
        .collect();
    Ok(MetricsReport {
        window: (a, b),
        rms_err,
        max_x2,
        monitored: ts.monitored.clone(),
        rms_fhat_err,
    })
}

/// Estimates the integrator's observed convergence order by comparing
/// final states across a geometric ladder of step sizes on a smooth
/// scenario (no faults, no events). Returns the smallest observed order.
pub fn step_convergence_check<T: Scalar>(sc: &Scenario<T>, dts: &[T]) -> Result<T> {
    if dts.len() < 3 {
        return Err(Error::BadStepSizeList);
    }
    if !sc.faults.is_empty() || !sc.events.is_empty() {
        return Err(Error::InvalidScenario(
            "convergence study requires a scenario without faults or events".into(),
        ));
    }
    let ratios: Vec<f64> = dts
        .windows(2)
        .map(|w| w[0].to_f64().unwrap_or(f64::NAN) / w[1].to_f64().unwrap_or(f64::NAN))
        .collect();
    let r0 = ratios[0];
    if ratios
        .iter()
        .any(|&r| !r.is_finite() || r <= 1.0 || (r - r0).abs() > 1e-9 * r0)
    {
        return Err(Error::BadStepSizeList);
    }

    let mut finals = Vec::new();
    for &dt in dts {
        let mut s = sc.clone();
        s.dt = dt;
        s.record_stride = usize::MAX;
        finals.push(run(&s)?.final_state.flatten());
    }
    let diffs: Vec<f64> = finals
        .windows(2)
        .map(|w| (&w[0] - &w[1]).norm().to_f64().unwrap_or(f64::NAN))
        .collect();
    let mut order = f64::INFINITY;
    for w in diffs.windows(2) {
        if w[1] == 0.0 {
            continue;
        }
        order = order.min((w[0] / w[1]).ln() / r0.ln());
    }
    Ok(real(order))
}
