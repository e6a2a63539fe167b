//! Circuit templates for the logic gates and the relaxation oscillator.
//!
//! Every template follows one rule: the input divider puts `v_th` or more
//! across a switch only for the input combinations whose output is 1.

use super::{DecodeMode, GateKind, OutputSpec, Probe};
use crate::device::OtsParams;
use crate::netlist::{Netlist, GROUND};
use crate::scalar::Scalar;
use crate::sim::{extract_spikes, SimError, SpikeTrain, Trace};

/// Current threshold for reading spikes from a switch current.
const SPIKE_CURRENT: f64 = 0.5e-3;
/// Voltage threshold for reading spikes across a sense resistor.
const SPIKE_VOLTAGE: f64 = 0.5;
const REFRACTORY: f64 = 100e-9;
const V_DD: f64 = 5.0;
/// Window comparator offset used to sense a latched switch.
const SENSE_OFFSET: f64 = 0.2;

/// Component values that may be overridden when building templates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateOverrides {
    pub half_adder_c2: f64,
    pub half_adder_c3: f64,
}

impl Default for TemplateOverrides {
    fn default() -> Self {
        Self {
            half_adder_c2: 100e-12,
            half_adder_c3: 500e-12,
        }
    }
}

/// A gate netlist together with its labelled inputs and decoded outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct GateTemplate<T> {
    pub kind: GateKind,
    pub net: Netlist<T>,
    /// Names of the voltage sources that carry the logic inputs, in input order.
    pub inputs: Vec<String>,
    pub outputs: Vec<OutputSpec<T>>,
    /// How the topology realises the truth table; written as comments in netlist files.
    pub notes: Vec<&'static str>,
}

pub fn build_gate<T: Scalar>(kind: GateKind, p: OtsParams<T>) -> GateTemplate<T> {
    build_gate_with(kind, p, &TemplateOverrides::default())
}

pub fn build_gate_with<T: Scalar>(
    kind: GateKind,
    p: OtsParams<T>,
    ov: &TemplateOverrides,
) -> GateTemplate<T> {
    let mut b = Builder::new(p);
    match kind {
        GateKind::And => {
            let (s1, s2) = (b.input("s1"), b.input("s2"));
            let out = and_gate(&mut b, s1, s2);
            b.spike_voltage("y", out, GROUND);
            b.note("s1, s2 -> R1, R2 (0.9k) -> x; C1 (100p) x-0; OTS x-out; R3 (5k) out-0.");
            b.note("One input high: the divider holds x at v_high/2, below v_th.");
            b.note("Both high: x charges towards v_high and the switch fires into R3.");
        }
        GateKind::Or => {
            let (s1, s2) = (b.input("s1"), b.input("s2"));
            let out = or_gate(&mut b, "", s1, s2);
            b.spike_voltage("y", out, GROUND);
            b.note(
                "s1, s2 -> D1, D2 -> R1, R2 (0.9k) -> x; C1 (100p) x-0; OTS x-out; R3 (5k) out-0.",
            );
            b.note("The input diodes block the low input from loading x, so any high");
            b.note("input lifts x to v_high - v_f, above v_th.");
        }
        GateKind::Nor | GateKind::Nand => {
            let (s1, s2) = (b.input("s1"), b.input("s2"));
            let vdd = b.n("vdd");
            b.net.dc("Vdd", vdd, GROUND, V_DD);
            let (y, x) = (b.n("y"), b.n("x"));
            b.net.resistor("R3", vdd, y, 900.0);
            b.net.resistor("R4", y, GROUND, 5e3);
            b.net.capacitor("C2", y, GROUND, 100e-12);
            b.net.ots("OTS1", y, x, b.p);
            b.net.capacitor("C1", y, x, 100e-12);
            if kind == GateKind::Nor {
                b.net.resistor("R1", s1, x, 900.0);
                b.net.resistor("R2", s2, x, 900.0);
            } else {
                let (k1, k2) = (b.n("k1"), b.n("k2"));
                b.net.diode("D1", x, k1);
                b.net.diode("D2", x, k2);
                b.net.resistor("R1", k1, s1, 900.0);
                b.net.resistor("R2", k2, s2, 900.0);
            }
            // idle drop across R3, and the drop at the firing point (x clamped at 0 or v_f)
            let lo = V_DD * 900.0 / 5900.0;
            let clamp = if kind == GateKind::Nand {
                crate::netlist::DIODE_V_F
            } else {
                0.0
            };
            let hi = V_DD - b.p.v_th.to_f64_lossy() - clamp;
            b.outputs.push(OutputSpec {
                name: "y".into(),
                probe: Probe::Voltage { pos: vdd, neg: y },
                mode: DecodeMode::MeanLevel {
                    v_low: T::lit(lo),
                    v_high: T::lit(hi),
                },
            });
            b.note("Vdd (5V) -> R3 (0.9k) -> y; R4 (5k) and C2 (100p) y-0; OTS and C1 (100p) y-x.");
            if kind == GateKind::Nor {
                b.note("s1, s2 -> R1, R2 (0.9k) -> x. Any high input lifts x to v_high/2 or more,");
                b.note("leaving less than v_th across the switch; only (0,0) fires it.");
            } else {
                b.note("x -> D1, D2 -> R1, R2 (0.9k) -> s1, s2. A low input clamps x near v_f,");
                b.note("so the switch sees about 3.5V and fires; with both inputs high x floats up to y.");
            }
            b.note(
                "Output is the drop across R3: about 0.76V idle, larger while the switch conducts.",
            );
        }
        GateKind::Xor => {
            let (s1, s2) = (b.input("s1"), b.input("s2"));
            let ots = xor_gate(&mut b, "", s1, s2);
            b.spike_current("y", ots);
            b.note("s1 -> R1 (1k) -> a; s2 -> R2 (1k) -> b; OTS and C1 (1n) a-b;");
            b.note("R3 (50k) a-0; R4 (10k) b-0; C2 (100p) b-0.");
            b.note("Equal inputs leave well under v_th across the switch. Unequal inputs put");
            b.note(
                "nearly v_high across it in either polarity, and the ambipolar switch oscillates.",
            );
        }
        GateKind::HalfAdder => {
            let (a, bb) = (b.input("a"), b.input("b"));
            let (xa, xb, m) = (b.n("xa"), b.n("xb"), b.n("m"));
            b.net.resistor("R3", a, xa, 1e3);
            b.net.resistor("R4", bb, xb, 1e3);
            let sum = b.net.ots("OTS1", xa, m, b.p);
            b.net.resistor("R6", m, xb, 200.0);
            b.net.capacitor("C1", xa, xb, 1e-9);
            let (x, s) = (b.n("x"), b.n("s"));
            b.net.resistor("R1", a, x, 3e3);
            b.net.resistor("R2", bb, x, 3e3);
            b.net.capacitor("C3", x, GROUND, ov.half_adder_c3);
            b.net.ots("OTS2", x, s, b.p);
            b.net.resistor("R5", s, GROUND, 1e3);
            b.net.capacitor("C2", s, GROUND, ov.half_adder_c2);
            b.spike_current("sum", sum);
            b.spike_voltage("carry", s, GROUND);
            b.note("Sum: a -> R3 (1k) -> xa; b -> R4 (1k) -> xb; OTS1 xa-m; R6 (200) m-xb; C1 (1n) xa-xb.");
            b.note("Carry: a, b -> R1, R2 (3k) -> x; C3 x-0; OTS2 x-s; R5 (1k) and C2 s-0.");
            b.note("The sum switch sees the input difference, the carry switch the input average.");
        }
        GateKind::DcaapCascade => {
            let (e1, e2, inh) = (b.input("ex1"), b.input("ex2"), b.input("inh"));
            let q = latched_xor_sensed(&mut b, "1", e1, e2);
            let qd = b.n("qd");
            b.net.diode("Dq3", q, qd);
            b.net.resistor("Rqd", qd, GROUND, 1e3);
            let ots2 = xor_gate(&mut b, "2", qd, inh);
            b.outputs.push(OutputSpec {
                name: "y_xor1".into(),
                probe: Probe::Voltage {
                    pos: q,
                    neg: GROUND,
                },
                mode: DecodeMode::MeanLevel {
                    v_low: T::zero(),
                    v_high: T::lit(V_DD - 0.7),
                },
            });
            b.spike_current("y_xor2", ots2);
            b.note("Stage 1: ex1, ex2 -> R11, R21 (300) -> a1, b1; OTS1 a1-m1; Rs1 (100) m1-b1.");
            b.note("Unequal inputs latch OTS1 on; two comparators with a 0.2V offset read the");
            b.note("sense resistor in either polarity and are diode-OR'ed into q (10k to ground).");
            b.note("Stage 2 is the standard XOR cell driven by inh and by q through Dq3 into qd");
            b.note("(1k to ground), which keeps the oscillating stage from lifting q.");
        }
        GateKind::FullAdder => {
            let (a, bb, cin) = (b.input("a"), b.input("b"), b.input("cin"));
            let q = latched_xor_sensed(&mut b, "a", a, bb);
            let (p, rp) = (b.n("p"), b.n("ref_p"));
            b.net.dc("Vrefp", rp, GROUND, (V_DD - 0.7) / 2.0);
            b.net.comparator("Up", q, rp, p);
            b.net.resistor("Rp", p, GROUND, 10e3);
            let sum = xor_gate(&mut b, "b", p, cin);
            let c1 = latched_and_sensed(&mut b, "a", a, bb);
            let c2 = latched_and_sensed(&mut b, "b", p, cin);
            let out = or_gate(&mut b, "c", c1, c2);
            b.spike_current("sum", sum);
            b.spike_voltage("cout", out, GROUND);
            b.note(
                "p = a xor b from a latched, comparator-sensed XOR cell restored to 0/5V by Up.",
            );
            b.note("sum = p xor cin from a standard XOR cell.");
            b.note("Latched AND cells a.b and p.cin each drive a comparator (0.6V reference);");
            b.note("their outputs feed a diode OR cell whose spikes give cout.");
        }
    }
    GateTemplate {
        kind,
        net: b.net,
        inputs: b.inputs,
        outputs: b.outputs,
        notes: b.notes,
    }
}

struct Builder<T> {
    net: Netlist<T>,
    p: OtsParams<T>,
    inputs: Vec<String>,
    outputs: Vec<OutputSpec<T>>,
    notes: Vec<&'static str>,
}

impl<T: Scalar> Builder<T> {
    fn new(p: OtsParams<T>) -> Self {
        Self {
            net: Netlist::new(),
            p,
            inputs: Vec::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn n(&mut self, name: &str) -> usize {
        self.net.node(name)
    }

    fn input(&mut self, name: &str) -> usize {
        let node = self.net.node(name);
        let src = format!("V{name}");
        self.net.dc(&src, node, GROUND, 0.0);
        self.inputs.push(src);
        node
    }

    fn note(&mut self, s: &'static str) {
        self.notes.push(s);
    }

    fn spike_voltage(&mut self, name: &str, pos: usize, neg: usize) {
        self.outputs.push(OutputSpec {
            name: name.into(),
            probe: Probe::Voltage { pos, neg },
            mode: DecodeMode::SpikeCount {
                threshold: T::lit(SPIKE_VOLTAGE),
                refractory: T::lit(REFRACTORY),
            },
        });
    }

    fn spike_current(&mut self, name: &str, element: usize) {
        self.outputs.push(OutputSpec {
            name: name.into(),
            probe: Probe::Current { element },
            mode: DecodeMode::SpikeCount {
                threshold: T::lit(SPIKE_CURRENT),
                refractory: T::lit(REFRACTORY),
            },
        });
    }
}

/// Resistor divider into a switch loaded by R3; returns the output node.
fn and_gate<T: Scalar>(b: &mut Builder<T>, s1: usize, s2: usize) -> usize {
    let (x, out) = (b.n("x"), b.n("out"));
    b.net.resistor("R1", s1, x, 900.0);
    b.net.resistor("R2", s2, x, 900.0);
    b.net.capacitor("C1", x, GROUND, 100e-12);
    b.net.ots("OTS", x, out, b.p);
    b.net.resistor("R3", out, GROUND, 5e3);
    out
}

fn or_gate<T: Scalar>(b: &mut Builder<T>, tag: &str, s1: usize, s2: usize) -> usize {
    let (k1, k2) = (b.n(&format!("k1{tag}")), b.n(&format!("k2{tag}")));
    let (x, out) = (b.n(&format!("x{tag}")), b.n(&format!("out{tag}")));
    b.net.diode(&format!("D1{tag}"), s1, k1);
    b.net.diode(&format!("D2{tag}"), s2, k2);
    b.net.resistor(&format!("R1{tag}"), k1, x, 900.0);
    b.net.resistor(&format!("R2{tag}"), k2, x, 900.0);
    b.net.capacitor(&format!("C1{tag}"), x, GROUND, 100e-12);
    b.net.ots(&format!("OTS{tag}"), x, out, b.p);
    b.net.resistor(&format!("R3{tag}"), out, GROUND, 5e3);
    out
}

/// Standard oscillating XOR cell; returns the switch element index.
fn xor_gate<T: Scalar>(b: &mut Builder<T>, tag: &str, s1: usize, s2: usize) -> usize {
    let (a, c) = (b.n(&format!("a{tag}")), b.n(&format!("b{tag}")));
    b.net.resistor(&format!("R1{tag}"), s1, a, 1e3);
    b.net.resistor(&format!("R2{tag}"), s2, c, 1e3);
    let ots = b.net.ots(&format!("OTS{tag}"), a, c, b.p);
    b.net.capacitor(&format!("C1{tag}"), a, c, 1e-9);
    b.net.resistor(&format!("R3{tag}"), a, GROUND, 50e3);
    b.net.resistor(&format!("R4{tag}"), c, GROUND, 10e3);
    b.net.capacitor(&format!("C2{tag}"), c, GROUND, 100e-12);
    ots
}

/// XOR cell with low-value inputs so the switch latches on, read by a
/// window comparator pair; returns the diode-OR node (about 4.3V when true).
fn latched_xor_sensed<T: Scalar>(b: &mut Builder<T>, tag: &str, s1: usize, s2: usize) -> usize {
    let (a, m, c) = (
        b.n(&format!("a{tag}")),
        b.n(&format!("m{tag}")),
        b.n(&format!("b{tag}")),
    );
    b.net.resistor(&format!("R1{tag}"), s1, a, 300.0);
    b.net.resistor(&format!("R2{tag}"), s2, c, 300.0);
    b.net.ots(&format!("OTS{tag}"), a, m, b.p);
    b.net.resistor(&format!("Rs{tag}"), m, c, 100.0);
    let (rm, rc) = (b.n(&format!("ref_m{tag}")), b.n(&format!("ref_b{tag}")));
    b.net.dc(&format!("Voff_m{tag}"), rc, c, SENSE_OFFSET);
    b.net.dc(&format!("Voff_b{tag}"), rm, m, SENSE_OFFSET);
    let (o1, o2, q) = (
        b.n(&format!("u1{tag}")),
        b.n(&format!("u2{tag}")),
        b.n(&format!("q{tag}")),
    );
    b.net.comparator(&format!("U1{tag}"), m, rc, o1);
    b.net.comparator(&format!("U2{tag}"), c, rm, o2);
    b.net.diode(&format!("Dq1{tag}"), o1, q);
    b.net.diode(&format!("Dq2{tag}"), o2, q);
    b.net.resistor(&format!("Rq{tag}"), q, GROUND, 10e3);
    q
}

/// AND cell with a 300 ohm sense resistor so the switch latches; returns a
/// comparator-restored 0/5V output node.
fn latched_and_sensed<T: Scalar>(b: &mut Builder<T>, tag: &str, s1: usize, s2: usize) -> usize {
    let (x, s) = (b.n(&format!("xand{tag}")), b.n(&format!("sand{tag}")));
    b.net.resistor(&format!("R1and{tag}"), s1, x, 900.0);
    b.net.resistor(&format!("R2and{tag}"), s2, x, 900.0);
    b.net.capacitor(&format!("C1and{tag}"), x, GROUND, 100e-12);
    b.net.ots(&format!("OTSand{tag}"), x, s, b.p);
    b.net.resistor(&format!("R3and{tag}"), s, GROUND, 300.0);
    let (r, o) = (b.n(&format!("ref_and{tag}")), b.n(&format!("c{tag}")));
    b.net.dc(&format!("Vref_and{tag}"), r, GROUND, 0.6);
    b.net.comparator(&format!("Uand{tag}"), s, r, o);
    b.net.resistor(&format!("Ro_and{tag}"), o, GROUND, 10e3);
    o
}

/// Relaxation oscillator: `vin -> R_d -> a`, `C_p` from `a` to ground,
/// switch from `a` to `b`, `R_s` from `b` to ground.
#[derive(Debug, Clone, PartialEq)]
pub struct Oscillator<T> {
    pub net: Netlist<T>,
    pub source: usize,
    pub ots: usize,
    pub node_a: usize,
    pub node_b: usize,
}

/// Spike threshold on the sense node `b`.
pub const OSC_SPIKE_THRESHOLD: f64 = 0.3;

impl<T: Scalar> Oscillator<T> {
    /// Spikes read from the voltage across `R_s`.
    pub fn spike_train(&self, tr: &Trace<T>) -> Result<SpikeTrain<T>, SimError> {
        let refractory = T::lit(REFRACTORY).max(tr.dt * T::lit(2.0));
        extract_spikes(tr, self.node_b, T::lit(OSC_SPIKE_THRESHOLD), refractory)
    }
}

pub const OSC_R_D: f64 = 9.1e3;
pub const OSC_R_S: f64 = 100.0;
pub const OSC_C_P: f64 = 1e-9;

pub fn oscillator<T: Scalar>(v_in: T, p: OtsParams<T>) -> Oscillator<T> {
    let mut net = Netlist::new();
    let (i, a, b) = (net.node("in"), net.node("a"), net.node("b"));
    let source = net.source("Vin", i, GROUND, crate::netlist::SourceSpec::Dc(v_in));
    net.resistor("Rd", i, a, OSC_R_D);
    net.capacitor("Cp", a, GROUND, OSC_C_P);
    let ots = net.ots("OTS1", a, b, p);
    net.resistor("Rs", b, GROUND, OSC_R_S);
    Oscillator {
        net,
        source,
        ots,
        node_a: a,
        node_b: b,
    }
}
