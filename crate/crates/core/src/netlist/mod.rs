//! Circuit description: nodes, elements and source waveforms.

mod parse;

pub use parse::{parse_netlist, write_netlist};

use std::collections::{HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::device::{DeviceError, OtsParams};
use crate::scalar::Scalar;

pub const GROUND: usize = 0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetlistError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("element '{element}' references node {node} but the netlist has {node_count} nodes")]
    TerminalOutOfRange {
        element: String,
        node: usize,
        node_count: usize,
    },
    #[error("node '{0}' is not connected to ground through any element")]
    FloatingNode(String),
    #[error("element '{element}': {msg}")]
    InvalidValue { element: String, msg: String },
    #[error("duplicate element name '{0}'")]
    DuplicateName(String),
    #[error("no element named '{0}'")]
    UnknownElement(String),
    #[error("element '{element}': {source}")]
    Device {
        element: String,
        source: DeviceError,
    },
}

/// Time-dependent value of an independent voltage source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SourceSpec<T> {
    Dc(T),
    /// Breakpoints `(t, v)`; holds the first value before the first point
    /// and the last value after the last one.
    PiecewiseLinear(Vec<(T, T)>),
    /// Rectangular pulses with instantaneous edges. `repeat = None` repeats forever.
    Pulse {
        v_low: T,
        v_high: T,
        delay: T,
        width: T,
        period: T,
        repeat: Option<u64>,
    },
    /// Single ramp `0 -> v_peak -> 0`, zero afterwards.
    Triangle {
        v_peak: T,
        t_rise: T,
        t_fall: T,
    },
}

impl<T: Scalar> SourceSpec<T> {
    pub fn value_at(&self, t: T) -> T {
        match self {
            SourceSpec::Dc(v) => *v,
            SourceSpec::PiecewiseLinear(pts) => pwl_value(pts, t),
            SourceSpec::Pulse {
                v_low,
                v_high,
                delay,
                width,
                period,
                repeat,
            } => {
                if t < *delay {
                    return *v_low;
                }
                let since = t - *delay;
                let cycle = (since / *period).floor();
                if let Some(n) = repeat {
                    if cycle >= T::from_u64(*n).unwrap_or_else(T::infinity) {
                        return *v_low;
                    }
                }
                if since - cycle * *period < *width {
                    *v_high
                } else {
                    *v_low
                }
            }
            SourceSpec::Triangle {
                v_peak,
                t_rise,
                t_fall,
            } => {
                if t <= T::zero() {
                    T::zero()
                } else if t < *t_rise {
                    *v_peak * t / *t_rise
                } else if t < *t_rise + *t_fall {
                    *v_peak * (T::one() - (t - *t_rise) / *t_fall)
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = |x: T| x.is_finite();
        match self {
            SourceSpec::Dc(v) if !finite(*v) => Err("non-finite DC value".into()),
            SourceSpec::Dc(_) => Ok(()),
            SourceSpec::PiecewiseLinear(pts) => {
                if pts.is_empty() {
                    return Err("piecewise-linear source needs at least one point".into());
                }
                if pts.iter().any(|&(t, v)| !finite(t) || !finite(v)) {
                    return Err("non-finite piecewise-linear point".into());
                }
                if pts.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err("piecewise-linear times must be strictly increasing".into());
                }
                Ok(())
            }
            SourceSpec::Pulse {
                v_low,
                v_high,
                delay,
                width,
                period,
                ..
            } => {
                if ![*v_low, *v_high, *delay, *width, *period]
                    .into_iter()
                    .all(finite)
                {
                    return Err("non-finite pulse parameter".into());
                }
                if !(*width > T::zero()) || !(*width < *period) {
                    return Err("pulse needs 0 < width < period".into());
                }
                if *delay < T::zero() {
                    return Err("pulse delay must be >= 0".into());
                }
                Ok(())
            }
            SourceSpec::Triangle {
                v_peak,
                t_rise,
                t_fall,
            } => {
                if ![*v_peak, *t_rise, *t_fall].into_iter().all(finite) {
                    return Err("non-finite triangle parameter".into());
                }
                if !(*t_rise > T::zero()) || !(*t_fall > T::zero()) {
                    return Err("triangle needs positive rise and fall times".into());
                }
                Ok(())
            }
        }
    }

    /// Time after which the waveform no longer changes, if any.
    pub fn duration(&self) -> Option<T> {
        match self {
            SourceSpec::Dc(_) => Some(T::zero()),
            SourceSpec::PiecewiseLinear(pts) => pts.last().map(|p| p.0),
            SourceSpec::Pulse {
                delay,
                period,
                repeat,
                ..
            } => repeat.map(|n| *delay + *period * T::from_u64(n).unwrap_or_else(T::infinity)),
            SourceSpec::Triangle { t_rise, t_fall, .. } => Some(*t_rise + *t_fall),
        }
    }
}

fn pwl_value<T: Scalar>(pts: &[(T, T)], t: T) -> T {
    let first = pts[0];
    if t <= first.0 {
        return first.1;
    }
    let last = pts[pts.len() - 1];
    if t >= last.0 {
        return last.1;
    }
    // first index with time > t; bounded to 1..len by the checks above
    let hi = pts.partition_point(|p| p.0 <= t);
    let (t0, v0) = pts[hi - 1];
    let (t1, v1) = pts[hi];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ElementKind<T> {
    Resistor(T),
    Capacitor {
        farads: T,
        initial: T,
    },
    VoltageSource(SourceSpec<T>),
    /// Piecewise-linear diode: off below `v_f`, slope `1/r_series` above it,
    /// reverse breakdown below `-v_z` with the same slope.
    Diode {
        v_f: T,
        v_z: T,
        r_series: T,
    },
    Ots(OtsParams<T>),
    /// Ideal two-level comparator with a resistive output stage. Terminals are
    /// `[v_plus, v_minus, out]`; the output is referenced to ground.
    Comparator {
        v_out_high: T,
        v_out_low: T,
        r_out: T,
    },
}

impl<T> ElementKind<T> {
    pub fn terminal_count(&self) -> usize {
        match self {
            ElementKind::Comparator { .. } => 3,
            _ => 2,
        }
    }

    pub fn letter(&self) -> &'static str {
        match self {
            ElementKind::Resistor(_) => "R",
            ElementKind::Capacitor { .. } => "C",
            ElementKind::VoltageSource(_) => "V",
            ElementKind::Diode { .. } => "D",
            ElementKind::Ots(_) => "OTS",
            ElementKind::Comparator { .. } => "CMP",
        }
    }
}

/// Diode defaults (1N4744A-like zener, piecewise-linear).
pub const DIODE_V_F: f64 = 0.7;
pub const DIODE_V_Z: f64 = 15.0;
pub const DIODE_R_SERIES: f64 = 1.0;
/// Comparator defaults: 0/5 V rails, 50 ohm output.
pub const CMP_V_HIGH: f64 = 5.0;
pub const CMP_V_LOW: f64 = 0.0;
pub const CMP_R_OUT: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Element<T> {
    pub name: String,
    pub kind: ElementKind<T>,
    pub terminals: Vec<usize>,
}

/// Ordered element list over named nodes. Node 0 is ground.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Netlist<T> {
    node_names: Vec<String>,
    #[serde(skip)]
    node_index: HashMap<String, usize>,
    pub elements: Vec<Element<T>>,
}

impl<T: Scalar> Default for Netlist<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Netlist<T> {
    pub fn new() -> Self {
        let mut node_index = HashMap::new();
        node_index.insert("0".to_string(), GROUND);
        Self {
            node_names: vec!["0".to_string()],
            node_index,
            elements: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn node_name(&self, node: usize) -> &str {
        self.node_names.get(node).map(String::as_str).unwrap_or("?")
    }

    /// Index of the named node, creating it if needed. `0` and `gnd` are ground.
    pub fn node(&mut self, name: &str) -> usize {
        let key = if name.eq_ignore_ascii_case("gnd") {
            "0"
        } else {
            name
        };
        if let Some(&i) = self.node_index.get(key) {
            return i;
        }
        let i = self.node_names.len();
        self.node_names.push(key.to_string());
        self.node_index.insert(key.to_string(), i);
        i
    }

    pub fn find_node(&self, name: &str) -> Option<usize> {
        let key = if name.eq_ignore_ascii_case("gnd") {
            "0"
        } else {
            name
        };
        self.node_index.get(key).copied()
    }

    pub fn element_index(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.name == name)
    }

    pub fn element(&self, name: &str) -> Result<&Element<T>, NetlistError> {
        self.elements
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| NetlistError::UnknownElement(name.to_string()))
    }

    pub fn push(&mut self, name: &str, kind: ElementKind<T>, terminals: &[usize]) -> usize {
        self.elements.push(Element {
            name: name.to_string(),
            kind,
            terminals: terminals.to_vec(),
        });
        self.elements.len() - 1
    }

    pub fn resistor(&mut self, name: &str, a: usize, b: usize, ohms: f64) -> usize {
        self.push(name, ElementKind::Resistor(T::lit(ohms)), &[a, b])
    }

    pub fn capacitor(&mut self, name: &str, a: usize, b: usize, farads: f64) -> usize {
        self.push(
            name,
            ElementKind::Capacitor {
                farads: T::lit(farads),
                initial: T::zero(),
            },
            &[a, b],
        )
    }

    pub fn source(&mut self, name: &str, pos: usize, neg: usize, spec: SourceSpec<T>) -> usize {
        self.push(name, ElementKind::VoltageSource(spec), &[pos, neg])
    }

    pub fn dc(&mut self, name: &str, pos: usize, neg: usize, volts: f64) -> usize {
        self.source(name, pos, neg, SourceSpec::Dc(T::lit(volts)))
    }

    /// Diode with the default piecewise-linear model.
    pub fn diode(&mut self, name: &str, anode: usize, cathode: usize) -> usize {
        self.push(
            name,
            ElementKind::Diode {
                v_f: T::lit(DIODE_V_F),
                v_z: T::lit(DIODE_V_Z),
                r_series: T::lit(DIODE_R_SERIES),
            },
            &[anode, cathode],
        )
    }

    pub fn ots(&mut self, name: &str, a: usize, b: usize, params: OtsParams<T>) -> usize {
        self.push(name, ElementKind::Ots(params), &[a, b])
    }

    /// Comparator with the default 0/5 V rails and 50 ohm output.
    pub fn comparator(&mut self, name: &str, plus: usize, minus: usize, out: usize) -> usize {
        self.push(
            name,
            ElementKind::Comparator {
                v_out_high: T::lit(CMP_V_HIGH),
                v_out_low: T::lit(CMP_V_LOW),
                r_out: T::lit(CMP_R_OUT),
            },
            &[plus, minus, out],
        )
    }

    /// Replaces the waveform of the named voltage source.
    pub fn set_source(&mut self, name: &str, spec: SourceSpec<T>) -> Result<(), NetlistError> {
        let e = self
            .elements
            .iter_mut()
            .find(|e| e.name == name)
            .ok_or_else(|| NetlistError::UnknownElement(name.to_string()))?;
        match &mut e.kind {
            ElementKind::VoltageSource(s) => {
                *s = spec;
                Ok(())
            }
            _ => Err(NetlistError::InvalidValue {
                element: name.to_string(),
                msg: "not a voltage source".into(),
            }),
        }
    }

    /// Resets every capacitor's initial voltage to zero.
    pub fn zero_initial_conditions(&mut self) {
        for e in &mut self.elements {
            if let ElementKind::Capacitor { initial, .. } = &mut e.kind {
                *initial = T::zero();
            }
        }
    }

    /// Replaces the parameters of every OTS element.
    pub fn set_all_ots(&mut self, params: OtsParams<T>) {
        for e in &mut self.elements {
            if let ElementKind::Ots(p) = &mut e.kind {
                *p = params;
            }
        }
    }

    pub fn ots_indices(&self) -> Vec<usize> {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, e)| matches!(e.kind, ElementKind::Ots(_)))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count_kind(&self, letter: &str) -> usize {
        self.elements
            .iter()
            .filter(|e| e.kind.letter() == letter)
            .count()
    }

    /// Checks element values, terminal ranges, name uniqueness and that every
    /// node has a conducting path to ground.
    pub fn validate(&self) -> Result<(), NetlistError> {
        let n = self.node_count();
        let mut names = std::collections::HashSet::new();
        for e in &self.elements {
            if !names.insert(e.name.as_str()) {
                return Err(NetlistError::DuplicateName(e.name.clone()));
            }
            if e.terminals.len() != e.kind.terminal_count() {
                return Err(NetlistError::InvalidValue {
                    element: e.name.clone(),
                    msg: format!("expected {} terminals", e.kind.terminal_count()),
                });
            }
            if let Some(&bad) = e.terminals.iter().find(|&&t| t >= n) {
                return Err(NetlistError::TerminalOutOfRange {
                    element: e.name.clone(),
                    node: bad,
                    node_count: n,
                });
            }
            validate_kind(e)?;
        }
        self.check_connectivity()
    }

    fn check_connectivity(&self) -> Result<(), NetlistError> {
        let n = self.node_count();
        let mut adj = vec![Vec::new(); n];
        let mut link = |a: usize, b: usize| {
            adj[a].push(b);
            adj[b].push(a);
        };
        for e in &self.elements {
            match e.kind {
                // inputs draw no current; the output stage is tied to ground
                ElementKind::Comparator { .. } => link(e.terminals[2], GROUND),
                _ => link(e.terminals[0], e.terminals[1]),
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([GROUND]);
        seen[GROUND] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(NetlistError::FloatingNode(self.node_names[i].clone())),
            None => Ok(()),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Netlist<U> {
        let c = |x: T| U::lit(x.to_f64_lossy());
        let elements = self
            .elements
            .iter()
            .map(|e| Element {
                name: e.name.clone(),
                terminals: e.terminals.clone(),
                kind: match &e.kind {
                    ElementKind::Resistor(r) => ElementKind::Resistor(c(*r)),
                    ElementKind::Capacitor { farads, initial } => ElementKind::Capacitor {
                        farads: c(*farads),
                        initial: c(*initial),
                    },
                    ElementKind::VoltageSource(s) => ElementKind::VoltageSource(match s {
                        SourceSpec::Dc(v) => SourceSpec::Dc(c(*v)),
                        SourceSpec::PiecewiseLinear(p) => SourceSpec::PiecewiseLinear(
                            p.iter().map(|&(t, v)| (c(t), c(v))).collect(),
                        ),
                        SourceSpec::Pulse {
                            v_low,
                            v_high,
                            delay,
                            width,
                            period,
                            repeat,
                        } => SourceSpec::Pulse {
                            v_low: c(*v_low),
                            v_high: c(*v_high),
                            delay: c(*delay),
                            width: c(*width),
                            period: c(*period),
                            repeat: *repeat,
                        },
                        SourceSpec::Triangle {
                            v_peak,
                            t_rise,
                            t_fall,
                        } => SourceSpec::Triangle {
                            v_peak: c(*v_peak),
                            t_rise: c(*t_rise),
                            t_fall: c(*t_fall),
                        },
                    }),
                    ElementKind::Diode { v_f, v_z, r_series } => ElementKind::Diode {
                        v_f: c(*v_f),
                        v_z: c(*v_z),
                        r_series: c(*r_series),
                    },
                    ElementKind::Ots(p) => ElementKind::Ots(p.cast()),
                    ElementKind::Comparator {
                        v_out_high,
                        v_out_low,
                        r_out,
                    } => ElementKind::Comparator {
                        v_out_high: c(*v_out_high),
                        v_out_low: c(*v_out_low),
                        r_out: c(*r_out),
                    },
                },
            })
            .collect();
        Netlist {
            node_names: self.node_names.clone(),
            node_index: self.node_index.clone(),
            elements,
        }
    }
}

fn validate_kind<T: Scalar>(e: &Element<T>) -> Result<(), NetlistError> {
    let bad = |msg: &str| {
        Err(NetlistError::InvalidValue {
            element: e.name.clone(),
            msg: msg.to_string(),
        })
    };
    let pos = |x: T| x.is_finite() && x > T::zero();
    match &e.kind {
        ElementKind::Resistor(r) if !pos(*r) => bad("resistance must be > 0"),
        ElementKind::Capacitor { farads, initial } if !pos(*farads) || !initial.is_finite() => {
            bad("capacitance must be > 0 with a finite initial voltage")
        }
        ElementKind::VoltageSource(s) => s.validate().or_else(|m| bad(&m)),
        ElementKind::Diode { v_f, v_z, r_series }
            if !pos(*v_f) || !pos(*v_z) || !pos(*r_series) =>
        {
            bad("diode needs v_f > 0, v_z > 0, r_series > 0")
        }
        ElementKind::Ots(p) => p.validate().map_err(|source| NetlistError::Device {
            element: e.name.clone(),
            source,
        }),
        ElementKind::Comparator {
            v_out_high,
            v_out_low,
            r_out,
        } => {
            if !(v_out_high.is_finite() && v_out_low.is_finite() && *v_out_high > *v_out_low) {
                bad("comparator needs v_out_high > v_out_low")
            } else if !pos(*r_out) {
                bad("comparator output resistance must be > 0")
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::default_params;

    #[test]
    fn pulse_waveform() {
        let p = SourceSpec::Pulse {
            v_low: 0.0,
            v_high: 5.0,
            delay: 1.0,
            width: 1.0,
            period: 4.0,
            repeat: Some(2),
        };
        assert_eq!(p.value_at(0.5), 0.0);
        assert_eq!(p.value_at(1.5), 5.0);
        assert_eq!(p.value_at(2.5), 0.0);
        assert_eq!(p.value_at(5.5), 5.0);
        assert_eq!(p.value_at(9.5), 0.0);
        assert_eq!(p.duration(), Some(9.0));
    }

    #[test]
    fn triangle_and_pwl() {
        let tri = SourceSpec::Triangle {
            v_peak: 4.0,
            t_rise: 2.0,
            t_fall: 2.0,
        };
        assert_eq!(tri.value_at(1.0), 2.0);
        assert_eq!(tri.value_at(2.0), 4.0);
        assert_eq!(tri.value_at(3.0), 2.0);
        assert_eq!(tri.value_at(5.0), 0.0);
        let pwl = SourceSpec::PiecewiseLinear(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.0)]);
        assert_eq!(pwl.value_at(-1.0), 0.0);
        assert_eq!(pwl.value_at(0.5), 1.0);
        assert_eq!(pwl.value_at(2.0), 2.0);
        assert_eq!(pwl.value_at(10.0), 2.0);
    }

    #[test]
    fn source_validation() {
        assert!(SourceSpec::PiecewiseLinear(vec![(0.0, 0.0), (0.0, 1.0)])
            .validate()
            .is_err());
        let p = SourceSpec::Pulse {
            v_low: 0.0,
            v_high: 1.0,
            delay: 0.0,
            width: 2.0,
            period: 2.0,
            repeat: None,
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn floating_node_detected() {
        let mut n = Netlist::<f64>::new();
        let a = n.node("a");
        let b = n.node("b");
        let c = n.node("c");
        n.dc("V1", a, GROUND, 1.0);
        n.resistor("R1", b, c, 1e3);
        assert_eq!(n.validate(), Err(NetlistError::FloatingNode("b".into())));
    }

    #[test]
    fn comparator_inputs_do_not_conduct() {
        let mut n = Netlist::<f64>::new();
        let a = n.node("a");
        let out = n.node("out");
        n.comparator("X1", a, GROUND, out);
        assert_eq!(n.validate(), Err(NetlistError::FloatingNode("a".into())));
        n.resistor("R1", a, GROUND, 1e3);
        n.validate().unwrap();
    }

    #[test]
    fn bad_values_rejected() {
        let mut n = Netlist::<f64>::new();
        let a = n.node("a");
        n.resistor("R1", a, GROUND, -1.0);
        assert!(matches!(
            n.validate(),
            Err(NetlistError::InvalidValue { .. })
        ));
        let mut n = Netlist::<f64>::new();
        let a = n.node("a");
        let mut p = default_params::<f64>();
        p.v_hold = 10.0;
        n.ots("O1", a, GROUND, p);
        assert!(matches!(n.validate(), Err(NetlistError::Device { .. })));
        let mut n = Netlist::<f64>::new();
        let a = n.node("a");
        n.resistor("R1", a, GROUND, 1.0);
        n.resistor("R1", a, GROUND, 1.0);
        assert!(matches!(n.validate(), Err(NetlistError::DuplicateName(_))));
    }

    #[test]
    fn terminal_range_checked() {
        let mut n = Netlist::<f64>::new();
        let a = n.node("a");
        n.resistor("R1", a, GROUND, 1.0);
        n.elements[0].terminals[1] = 7;
        assert!(matches!(
            n.validate(),
            Err(NetlistError::TerminalOutOfRange { node: 7, .. })
        ));
    }
}
