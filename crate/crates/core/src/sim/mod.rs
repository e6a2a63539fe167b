//! Fixed-step transient analysis.
//!
//! Modified nodal analysis with backward Euler companions. Every nonlinear
//! element is piecewise linear, so each step is solved by pinning a segment
//! per element, solving the resulting linear system and re-selecting until
//! the choice is self-consistent. If that does not settle within the
//! re-selection budget the step falls back to a piecewise-linear path
//! following solve started from the previous solution.

mod iv;
mod linear;
mod spikes;

pub use iv::{dynamic_iv, dynamic_iv_with};
pub use linear::Lu;
pub use spikes::{extract_spikes, extract_spikes_series, firing_rate, SpikeTrain};

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::units::format_number;

use crate::device::{ots_current, ots_step, DeviceError, OtsState, Phase, Segment};
use crate::netlist::{ElementKind, Netlist, NetlistError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("step {step}: singular system matrix at {unknown}")]
    Singular { step: usize, unknown: String },
    #[error("step {step}: piecewise-linear solve did not converge")]
    NoConvergence { step: usize },
    #[error("step {step}: Kirchhoff residual {residual:e} A exceeds tolerance")]
    Residual { step: usize, residual: f64 },
    #[error("step {step}: {source}")]
    Device { step: usize, source: DeviceError },
    #[error("invalid simulation options: {0}")]
    Options(String),
    #[error("{0} was not recorded in the trace")]
    NotRecorded(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions<T> {
    /// Segment re-selections per step before the path-following fallback.
    pub max_reselections: usize,
    /// Largest accepted KCL residual per node, amperes.
    pub residual_tol: T,
    /// Nodes to record; `None` records every non-ground node.
    pub nodes: Option<Vec<usize>>,
    /// Element indices whose current and terminal voltage are recorded.
    pub branches: Vec<usize>,
}

/// 1e-9 A in double precision; single precision cannot resolve that at mA currents, so 1e-6 A.
fn default_residual_tol<T: Scalar>() -> T {
    if T::epsilon() > T::lit(1e-10) {
        T::lit(1e-6)
    } else {
        T::lit(1e-9)
    }
}

impl<T: Scalar> Default for SimOptions<T> {
    fn default() -> Self {
        Self {
            max_reselections: 8,
            residual_tol: default_residual_tol(),
            nodes: None,
            branches: Vec::new(),
        }
    }
}

/// Convergence settings shared by every analysis that runs a transient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSettings<T> {
    pub max_reselections: usize,
    pub residual_tol: T,
}

impl<T: Scalar> Default for SolverSettings<T> {
    fn default() -> Self {
        let d = SimOptions::<T>::default();
        Self {
            max_reselections: d.max_reselections,
            residual_tol: d.residual_tol,
        }
    }
}

impl<T: Scalar> SimOptions<T> {
    pub fn with_solver(s: SolverSettings<T>) -> Self {
        Self {
            max_reselections: s.max_reselections,
            residual_tol: s.residual_tol,
            ..Self::default()
        }
    }

    pub fn record_nodes(mut self, nodes: &[usize]) -> Self {
        self.nodes = Some(nodes.to_vec());
        self
    }

    pub fn record_branches(mut self, elements: &[usize]) -> Self {
        self.branches = elements.to_vec();
        self
    }

    /// Records every element's current as well.
    pub fn record_all_branches(mut self, net: &Netlist<T>) -> Self {
        self.branches = (0..net.elements.len()).collect();
        self
    }
}

/// Sampled waveforms. Sample `k` is at `t = k * dt`; sample 0 is the
/// operating point at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T> {
    pub dt: T,
    pub node_ids: Vec<usize>,
    pub node_names: Vec<String>,
    pub node_voltages: Vec<Vec<T>>,
    pub branch_ids: Vec<usize>,
    pub branch_names: Vec<String>,
    /// Current through each recorded element from its first to its second
    /// terminal. For a comparator it is the current drawn out of the output node.
    pub branch_currents: Vec<Vec<T>>,
    /// Voltage between the first and second terminal (comparator: output to ground).
    pub branch_voltages: Vec<Vec<T>>,
    pub max_residual: T,
    /// Steps that needed the path-following fallback.
    pub fallback_steps: usize,
}

impl<T: Scalar> Trace<T> {
    pub fn len(&self) -> usize {
        self.node_voltages
            .first()
            .or(self.branch_currents.first())
            .map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, k: usize) -> T {
        T::from_usize_lossy(k) * self.dt
    }

    pub fn t_end(&self) -> T {
        self.time(self.len().saturating_sub(1))
    }

    pub fn voltage(&self, node: usize) -> Result<&[T], SimError> {
        self.node_ids
            .iter()
            .position(|&n| n == node)
            .map(|i| self.node_voltages[i].as_slice())
            .ok_or_else(|| SimError::NotRecorded(format!("node {node}")))
    }

    pub fn current(&self, element: usize) -> Result<&[T], SimError> {
        self.branch_slot(element)
            .map(|i| self.branch_currents[i].as_slice())
    }

    pub fn element_voltage(&self, element: usize) -> Result<&[T], SimError> {
        self.branch_slot(element)
            .map(|i| self.branch_voltages[i].as_slice())
    }

    fn branch_slot(&self, element: usize) -> Result<usize, SimError> {
        self.branch_ids
            .iter()
            .position(|&e| e == element)
            .ok_or_else(|| SimError::NotRecorded(format!("element {element}")))
    }

    /// CSV with header `t,<nodes>,<branches>`; values printed with shortest
    /// round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.node_names {
            let _ = write!(out, ",{n}");
        }
        for b in &self.branch_names {
            let _ = write!(out, ",{b}");
        }
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&format_number(self.time(k).to_f64_lossy()));
            for s in self.node_voltages.iter().chain(&self.branch_currents) {
                out.push(',');
                out.push_str(&format_number(s[k].to_f64_lossy()));
            }
            out.push('\n');
        }
        out
    }
}

/// Diode leakage conductance in the off segment.
const DIODE_G_MIN: f64 = 1e-12;
/// The `t = 0` operating point is one backward Euler solve with this fraction of `dt`.
const INITIAL_STEP_FRACTION: f64 = 1e-6;
const MAX_PATH_SEGMENTS: usize = 10_000;

/// Piecewise-linear law of one element: `i = g * v + i0` on each segment,
/// segments separated by increasing breakpoints in `v`.
#[derive(Debug, Clone, Copy)]
struct Pwl<T> {
    bounds: [T; 2],
    nb: usize,
    lines: [(T, T); 3],
    /// Comparator: the controlling voltage selects an output level instead.
    control_only: bool,
}

impl<T: Scalar> Pwl<T> {
    fn select(&self, v: T) -> usize {
        self.bounds[..self.nb].iter().filter(|&&b| v > b).count()
    }

    fn current(&self, v: T) -> T {
        let (g, i0) = self.lines[self.select(v)];
        g * v + i0
    }
}

fn ots_pwl<T: Scalar>(p: &crate::device::OtsParams<T>, phase: Phase) -> Pwl<T> {
    match phase {
        Phase::Off => Pwl {
            bounds: [T::zero(); 2],
            nb: 0,
            lines: [Segment::Leak.line(p); 3],
            control_only: false,
        },
        Phase::On => Pwl {
            bounds: [-p.v_hold, p.v_hold],
            nb: 2,
            lines: [
                Segment::Reverse.line(p),
                Segment::DeadZone.line(p),
                Segment::Forward.line(p),
            ],
            control_only: false,
        },
    }
}

struct Engine<'a, T> {
    net: &'a Netlist<T>,
    nn: usize,
    size: usize,
    /// MNA row of each voltage source's branch current, by element index.
    src_row: Vec<usize>,
    laws: Vec<Option<Pwl<T>>>,
    seg: Vec<usize>,
    ots: Vec<OtsState<T>>,
    cap_prev: Vec<T>,
    x: Vec<T>,
    a: Vec<T>,
    b: Vec<T>,
    lu: Lu<T>,
    tol: T,
    max_reselections: usize,
    fallbacks: usize,
}

#[inline]
fn row(node: usize) -> Option<usize> {
    node.checked_sub(1)
}

impl<'a, T: Scalar> Engine<'a, T> {
    fn new(net: &'a Netlist<T>, opts: &SimOptions<T>) -> Self {
        let nn = net.node_count() - 1;
        let mut src_row = vec![usize::MAX; net.elements.len()];
        let mut size = nn;
        let mut cap_prev = vec![T::zero(); net.elements.len()];
        let mut ots = vec![OtsState::off(); net.elements.len()];
        for (i, e) in net.elements.iter().enumerate() {
            match &e.kind {
                ElementKind::VoltageSource(_) => {
                    src_row[i] = size;
                    size += 1;
                }
                ElementKind::Capacitor { initial, .. } => cap_prev[i] = *initial,
                ElementKind::Ots(_) => ots[i] = OtsState::off(),
                _ => {}
            }
        }
        let mut eng = Self {
            net,
            nn,
            size,
            src_row,
            laws: vec![None; net.elements.len()],
            seg: vec![0; net.elements.len()],
            ots,
            cap_prev,
            x: vec![T::zero(); size],
            a: vec![T::zero(); size * size],
            b: vec![T::zero(); size],
            lu: Lu::new(size),
            tol: opts.residual_tol,
            max_reselections: opts.max_reselections,
            fallbacks: 0,
        };
        eng.refresh_laws();
        eng
    }

    fn refresh_laws(&mut self) {
        for (i, e) in self.net.elements.iter().enumerate() {
            self.laws[i] = match &e.kind {
                ElementKind::Diode { v_f, v_z, r_series } => {
                    let g_min = T::lit(DIODE_G_MIN);
                    let g = g_min + r_series.recip();
                    Some(Pwl {
                        bounds: [-*v_z, *v_f],
                        nb: 2,
                        lines: [
                            (g, *v_z / *r_series),
                            (g_min, T::zero()),
                            (g, -*v_f / *r_series),
                        ],
                        control_only: false,
                    })
                }
                ElementKind::Ots(p) => Some(ots_pwl(p, self.ots[i].phase)),
                ElementKind::Comparator {
                    v_out_low,
                    v_out_high,
                    ..
                } => Some(Pwl {
                    bounds: [T::zero(); 2],
                    nb: 1,
                    lines: [
                        (T::zero(), *v_out_low),
                        (T::zero(), *v_out_high),
                        (T::zero(), *v_out_high),
                    ],
                    control_only: true,
                }),
                _ => None,
            };
        }
    }

    fn v(&self, x: &[T], node: usize) -> T {
        row(node).map_or(T::zero(), |r| x[r])
    }

    fn control_voltage(&self, x: &[T], i: usize) -> T {
        let t = &self.net.elements[i].terminals;
        self.v(x, t[0]) - self.v(x, t[1])
    }

    fn select_all(&self, x: &[T], seg: &mut [usize]) {
        for (i, law) in self.laws.iter().enumerate() {
            if let Some(l) = law {
                seg[i] = l.select(self.control_voltage(x, i));
            }
        }
    }

    fn assemble(&mut self, t: T, h: T, seg: &[usize]) {
        let n = self.size;
        self.a.iter_mut().for_each(|v| *v = T::zero());
        self.b.iter_mut().for_each(|v| *v = T::zero());
        let (a, b) = (&mut self.a, &mut self.b);
        let mut stamp_g = |p: usize, m: usize, g: T| {
            if let Some(rp) = row(p) {
                a[rp * n + rp] += g;
            }
            if let Some(rm) = row(m) {
                a[rm * n + rm] += g;
            }
            if let (Some(rp), Some(rm)) = (row(p), row(m)) {
                a[rp * n + rm] -= g;
                a[rm * n + rp] -= g;
            }
        };
        // element current i0 flowing from p to m
        let mut stamp_i = |p: usize, m: usize, i0: T| {
            if let Some(rp) = row(p) {
                b[rp] -= i0;
            }
            if let Some(rm) = row(m) {
                b[rm] += i0;
            }
        };
        for (i, e) in self.net.elements.iter().enumerate() {
            let (p, m) = (e.terminals[0], e.terminals[1]);
            match &e.kind {
                ElementKind::Resistor(r) => stamp_g(p, m, r.recip()),
                ElementKind::Capacitor { farads, .. } => {
                    let g = *farads / h;
                    stamp_g(p, m, g);
                    stamp_i(p, m, -g * self.cap_prev[i]);
                }
                ElementKind::Diode { .. } | ElementKind::Ots(_) => {
                    let (g, i0) = self.laws[i].expect("nonlinear law").lines[seg[i]];
                    stamp_g(p, m, g);
                    stamp_i(p, m, i0);
                }
                ElementKind::Comparator { r_out, .. } => {
                    let level = self.laws[i].expect("comparator law").lines[seg[i]].1;
                    let out = e.terminals[2];
                    let g = r_out.recip();
                    stamp_g(out, 0, g);
                    stamp_i(out, 0, -level * g);
                }
                ElementKind::VoltageSource(_) => {}
            }
        }
        for (i, e) in self.net.elements.iter().enumerate() {
            if let ElementKind::VoltageSource(spec) = &e.kind {
                let j = self.src_row[i];
                let (p, m) = (e.terminals[0], e.terminals[1]);
                if let Some(rp) = row(p) {
                    self.a[rp * n + j] += T::one();
                    self.a[j * n + rp] += T::one();
                }
                if let Some(rm) = row(m) {
                    self.a[rm * n + j] -= T::one();
                    self.a[j * n + rm] -= T::one();
                }
                self.b[j] = spec.value_at(t);
            }
        }
    }

    fn unknown_name(&self, k: usize) -> String {
        if k < self.nn {
            format!("node '{}'", self.net.node_name(k + 1))
        } else {
            let e = self.src_row.iter().position(|&r| r == k).unwrap_or(0);
            format!("branch current of '{}'", self.net.elements[e].name)
        }
    }

    fn factor(&mut self, step: usize) -> Result<(), SimError> {
        let a = std::mem::take(&mut self.a);
        let r = self.lu.factor(&a);
        self.a = a;
        r.map_err(|k| SimError::Singular {
            step,
            unknown: self.unknown_name(k),
        })
    }

    /// Solves one step. `x` holds the previous solution on entry.
    fn solve_step(&mut self, t: T, h: T, step: usize) -> Result<(), SimError> {
        let mut seg = self.seg.clone();
        let mut next = seg.clone();
        let mut x = vec![T::zero(); self.size];
        for _ in 0..=self.max_reselections {
            self.assemble(t, h, &seg);
            self.factor(step)?;
            self.lu.solve(&self.b, &mut x);
            self.select_all(&x, &mut next);
            if next == seg {
                self.x = x;
                self.seg = seg;
                return Ok(());
            }
            std::mem::swap(&mut seg, &mut next);
        }
        self.fallbacks += 1;
        log::debug!("step {step}: segment selection cycled, following the piecewise-linear path");
        self.path_follow(t, h, step)
    }

    /// Continuation from the previous solution `x0`: solves
    /// `F(x) = (1 - lambda) F(x0)` for lambda from 0 to 1, crossing one
    /// segment boundary at a time. Comparator levels stay at their `x0` choice.
    fn path_follow(&mut self, t: T, h: T, step: usize) -> Result<(), SimError> {
        let x0 = self.x.clone();
        let mut seg = vec![0; self.laws.len()];
        self.select_all(&x0, &mut seg);
        self.assemble(t, h, &seg);
        let r0: Vec<T> = (0..self.size)
            .map(|r| {
                let row = &self.a[r * self.size..(r + 1) * self.size];
                row.iter().zip(&x0).fold(T::zero(), |s, (a, x)| s + *a * *x) - self.b[r]
            })
            .collect();
        let mut x = x0;
        let mut lambda = T::zero();
        let mut d = vec![T::zero(); self.size];
        for _ in 0..MAX_PATH_SEGMENTS {
            self.assemble(t, h, &seg);
            self.factor(step)?;
            self.lu.solve(&r0, &mut d);
            let remaining = T::one() - lambda;
            let mut best: Option<(T, usize, usize)> = None;
            for (i, law) in self.laws.iter().enumerate() {
                let Some(l) = law else { continue };
                if l.control_only || l.nb == 0 {
                    continue;
                }
                let v = self.control_voltage(&x, i);
                let dv = -self.control_voltage(&d, i);
                let s = seg[i];
                let (cross, to) = if dv > T::zero() && s < l.nb {
                    ((l.bounds[s] - v) / dv, s + 1)
                } else if dv < T::zero() && s > 0 {
                    ((l.bounds[s - 1] - v) / dv, s - 1)
                } else {
                    continue;
                };
                let cross = cross.max(T::zero());
                if cross < remaining && best.is_none_or(|(c, _, _)| cross < c) {
                    best = Some((cross, i, to));
                }
            }
            match best {
                None => {
                    let mut end = vec![T::zero(); self.size];
                    self.lu.solve(&self.b, &mut end);
                    self.x = end;
                    self.seg = seg;
                    return Ok(());
                }
                Some((dl, i, to)) => {
                    for (xi, di) in x.iter_mut().zip(&d) {
                        *xi -= dl * *di;
                    }
                    lambda += dl;
                    seg[i] = to;
                }
            }
        }
        Err(SimError::NoConvergence { step })
    }

    fn element_current(&self, i: usize, x: &[T], h: T) -> Result<T, DeviceError> {
        let e = &self.net.elements[i];
        let v = self.control_voltage(x, i);
        Ok(match &e.kind {
            ElementKind::Resistor(r) => v / *r,
            ElementKind::Capacitor { farads, .. } => *farads / h * (v - self.cap_prev[i]),
            ElementKind::VoltageSource(_) => x[self.src_row[i]],
            ElementKind::Diode { .. } => self.laws[i].expect("diode law").current(v),
            ElementKind::Ots(p) => ots_current(p, &self.ots[i], v)?,
            ElementKind::Comparator { r_out, .. } => {
                let level = self.laws[i].expect("comparator law").lines[self.seg[i]].1;
                (self.v(x, e.terminals[2]) - level) / *r_out
            }
        })
    }

    /// Largest net current leaving any non-ground node.
    fn residual(&self, h: T, step: usize) -> Result<T, SimError> {
        let mut kcl = vec![T::zero(); self.nn + 1];
        for (i, e) in self.net.elements.iter().enumerate() {
            let c = self
                .element_current(i, &self.x, h)
                .map_err(|source| SimError::Device { step, source })?;
            match e.kind {
                ElementKind::Comparator { .. } => kcl[e.terminals[2]] += c,
                _ => {
                    kcl[e.terminals[0]] += c;
                    kcl[e.terminals[1]] -= c;
                }
            }
        }
        Ok(kcl[1..].iter().fold(T::zero(), |m, c| m.max(c.abs())))
    }

    fn accept(&mut self, h: T, step: usize, update_ots: bool) -> Result<(), SimError> {
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NoConvergence { step });
        }
        for (i, e) in self.net.elements.iter().enumerate() {
            match &e.kind {
                ElementKind::Capacitor { .. } => {
                    self.cap_prev[i] = self.control_voltage(&self.x, i)
                }
                ElementKind::Ots(p) if update_ots => {
                    let v = self.control_voltage(&self.x, i);
                    self.ots[i] = ots_step(p, &self.ots[i], v, h)
                        .map_err(|source| SimError::Device { step, source })?;
                }
                _ => {}
            }
        }
        if update_ots {
            self.refresh_laws();
            let x = std::mem::take(&mut self.x);
            let mut seg = std::mem::take(&mut self.seg);
            self.select_all(&x, &mut seg);
            self.x = x;
            self.seg = seg;
        }
        Ok(())
    }
}

fn warn_on_coarse_step<T: Scalar>(net: &Netlist<T>, dt: T) {
    let tau = net
        .elements
        .iter()
        .filter_map(|e| match &e.kind {
            ElementKind::Ots(p) => Some([p.tau_on, p.tau_off]),
            _ => None,
        })
        .flatten()
        .filter(|t| *t > T::zero())
        .fold(T::infinity(), T::min);
    if !tau.is_finite() {
        return;
    }
    let (dt, tau) = (dt.to_f64_lossy(), tau.to_f64_lossy());
    if dt > tau {
        log::warn!("dt = {dt:e} s exceeds the shortest switching delay ({tau:e} s); switching instants are quantised to dt");
    } else if dt > tau / 2.0 {
        log::debug!("dt = {dt:e} s is above half the shortest switching delay ({tau:e} s)");
    }
}

/// Runs a transient analysis from `t = 0` to `t_stop` with fixed step `dt`.
pub fn transient<T: Scalar>(
    net: &Netlist<T>,
    t_stop: T,
    dt: T,
    opts: &SimOptions<T>,
) -> Result<Trace<T>, SimError> {
    net.validate()?;
    if !(dt > T::zero()) || !dt.is_finite() || !t_stop.is_finite() || t_stop < dt {
        return Err(SimError::Options(format!(
            "need 0 < dt <= t_stop, got dt = {}, t_stop = {}",
            dt, t_stop
        )));
    }
    let n_nodes = net.node_count();
    let node_ids: Vec<usize> = match &opts.nodes {
        Some(v) => v.clone(),
        None => (1..n_nodes).collect(),
    };
    if let Some(&bad) = node_ids.iter().find(|&&n| n >= n_nodes) {
        return Err(SimError::Options(format!("node {bad} out of range")));
    }
    if let Some(&bad) = opts.branches.iter().find(|&&e| e >= net.elements.len()) {
        return Err(SimError::Options(format!("element {bad} out of range")));
    }
    warn_on_coarse_step(net, dt);

    let steps = (t_stop / dt).round().to_usize().unwrap_or(0);
    let mut tr = Trace {
        dt,
        node_names: node_ids
            .iter()
            .map(|&n| net.node_name(n).to_string())
            .collect(),
        node_voltages: vec![Vec::with_capacity(steps + 1); node_ids.len()],
        node_ids,
        branch_names: opts
            .branches
            .iter()
            .map(|&e| format!("i({})", net.elements[e].name))
            .collect(),
        branch_currents: vec![Vec::with_capacity(steps + 1); opts.branches.len()],
        branch_voltages: vec![Vec::with_capacity(steps + 1); opts.branches.len()],
        branch_ids: opts.branches.clone(),
        max_residual: T::zero(),
        fallback_steps: 0,
    };

    let mut eng = Engine::new(net, opts);
    let h0 = dt * T::lit(INITIAL_STEP_FRACTION);
    let (x0, mut seg0) = (eng.x.clone(), eng.seg.clone());
    eng.select_all(&x0, &mut seg0);
    eng.seg = seg0;
    run_step(&mut eng, &mut tr, T::zero(), h0, 0, false)?;
    for k in 1..=steps {
        let t = T::from_usize_lossy(k) * dt;
        run_step(&mut eng, &mut tr, t, dt, k, true)?;
    }
    tr.fallback_steps = eng.fallbacks;
    Ok(tr)
}

fn run_step<T: Scalar>(
    eng: &mut Engine<'_, T>,
    tr: &mut Trace<T>,
    t: T,
    h: T,
    step: usize,
    update_ots: bool,
) -> Result<(), SimError> {
    eng.solve_step(t, h, step)?;
    let res = eng.residual(h, step)?;
    if !(res < eng.tol) {
        return Err(SimError::Residual {
            step,
            residual: res.to_f64_lossy(),
        });
    }
    tr.max_residual = tr.max_residual.max(res);
    for (slot, &n) in tr.node_ids.iter().enumerate() {
        tr.node_voltages[slot].push(eng.v(&eng.x, n));
    }
    for (slot, &e) in tr.branch_ids.iter().enumerate() {
        let c = eng
            .element_current(e, &eng.x, h)
            .map_err(|source| SimError::Device { step, source })?;
        let el = &eng.net.elements[e];
        let v = match el.kind {
            ElementKind::Comparator { .. } => eng.v(&eng.x, el.terminals[2]),
            _ => eng.control_voltage(&eng.x, e),
        };
        tr.branch_currents[slot].push(c);
        tr.branch_voltages[slot].push(v);
    }
    eng.accept(h, step, update_ots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{SourceSpec, GROUND};

    fn rc() -> Netlist<f64> {
        let mut n = Netlist::new();
        let a = n.node("in");
        let b = n.node("out");
        n.dc("V1", a, GROUND, 1.0);
        n.resistor("R1", a, b, 1e3);
        n.capacitor("C1", b, GROUND, 1e-9);
        n
    }

    #[test]
    fn divider_is_exact() {
        let mut n = Netlist::<f64>::new();
        let a = n.node("a");
        let m = n.node("m");
        n.dc("V1", a, GROUND, 5.0);
        n.resistor("R1", a, m, 1e3);
        n.resistor("R2", m, GROUND, 1e3);
        let tr = transient(&n, 1e-6, 1e-7, &SimOptions::default()).unwrap();
        assert_eq!(tr.len(), 11);
        assert!(tr
            .voltage(m)
            .unwrap()
            .iter()
            .all(|&v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn rc_step_and_source_current() {
        let n = rc();
        let opts = SimOptions::default().record_branches(&[0]);
        let tr = transient(&n, 5e-6, 1e-8, &opts).unwrap();
        let v = tr.voltage(2).unwrap();
        assert!(v[0].abs() < 1e-6);
        let expect = 1.0 - (-1.0f64).exp();
        assert!((v[100] - expect).abs() / expect < 0.01, "{}", v[100]);
        // the source delivers current, so the passive-convention branch current is negative
        let i = tr.current(0).unwrap();
        assert!(i[1] < 0.0);
        assert!(tr.max_residual < 1e-9);
    }

    #[test]
    fn initial_condition_holds_at_t0() {
        let mut n = Netlist::<f64>::new();
        let a = n.node("a");
        n.resistor("R1", a, GROUND, 1e3);
        n.push(
            "C1",
            ElementKind::Capacitor {
                farads: 1e-9,
                initial: 2.0,
            },
            &[a, GROUND],
        );
        let tr = transient(&n, 2e-6, 1e-8, &SimOptions::default()).unwrap();
        let v = tr.voltage(a).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-5);
        // 1 us = one time constant, backward Euler decays slightly slower
        assert!((v[100] - 2.0 * (-1.0f64).exp()).abs() < 0.01 * 2.0);
    }

    #[test]
    fn diode_clamps() {
        let mut n = Netlist::<f64>::new();
        let a = n.node("a");
        let k = n.node("k");
        n.source(
            "V1",
            a,
            GROUND,
            SourceSpec::PiecewiseLinear(vec![(0.0, -20.0), (1e-6, 20.0)]),
        );
        n.resistor("R1", a, k, 1e3);
        n.diode("D1", k, GROUND);
        let opts = SimOptions::default().record_branches(&[2]);
        let tr = transient(&n, 1e-6, 1e-9, &opts).unwrap();
        let v = tr.element_voltage(2).unwrap();
        let i = tr.current(2).unwrap();
        for (&v, &i) in v.iter().zip(i) {
            assert!(v < 0.7 + 0.03 && v > -15.0 - 0.01, "{v}");
            if v > -15.0 && v < 0.7 {
                assert!(i.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn comparator_levels() {
        let mut n = Netlist::<f64>::new();
        let a = n.node("a");
        let o = n.node("o");
        n.source(
            "V1",
            a,
            GROUND,
            SourceSpec::PiecewiseLinear(vec![(0.0, -1.0), (1e-6, 1.0)]),
        );
        n.comparator("U1", a, GROUND, o);
        n.resistor("RL", o, GROUND, 1e6);
        let tr = transient(&n, 1e-6, 1e-8, &SimOptions::default()).unwrap();
        let v = tr.voltage(o).unwrap();
        assert!(v[10].abs() < 1e-9);
        assert!((v[90] - 5.0 * 1e6 / (1e6 + 50.0)).abs() < 1e-9);
        assert!(v.iter().all(|&x| (-1e-12..=5.0).contains(&x)));
    }

    #[test]
    fn voltage_source_loop_is_singular() {
        let mut n = Netlist::<f64>::new();
        let a = n.node("a");
        n.dc("V1", a, GROUND, 1.0);
        n.dc("V2", a, GROUND, 2.0);
        let e = transient(&n, 1e-6, 1e-7, &SimOptions::default()).unwrap_err();
        assert!(matches!(e, SimError::Singular { step: 0, .. }), "{e}");
    }

    #[test]
    fn csv_header_and_rows() {
        let n = rc();
        let opts = SimOptions::default().record_branches(&[1]);
        let tr = transient(&n, 2e-8, 1e-8, &opts).unwrap();
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,in,out,i(R1)"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn rejects_bad_options() {
        let n = rc();
        assert!(matches!(
            transient(&n, 1e-6, 0.0, &SimOptions::default()),
            Err(SimError::Options(_))
        ));
        assert!(matches!(
            transient(&n, 1e-9, 1e-8, &SimOptions::default()),
            Err(SimError::Options(_))
        ));
        let o = SimOptions::default().record_nodes(&[9]);
        assert!(matches!(
            transient(&n, 1e-6, 1e-8, &o),
            Err(SimError::Options(_))
        ));
    }

    #[test]
    fn f32_rc() {
        let n: Netlist<f32> = rc().cast();
        let tr = transient(
            &n,
            2e-6,
            1e-8,
            &SimOptions {
                residual_tol: 1e-6,
                ..Default::default()
            },
        )
        .unwrap();
        let v = tr.voltage(2).unwrap()[100];
        assert!((v - 0.632).abs() < 0.01);
    }
}
