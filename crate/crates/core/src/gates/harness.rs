//! Drives gate templates with logic levels and decodes their outputs.

use rayon::prelude::*;
use serde::Serialize;

use super::{
    input_rows, DecodeMode, GateError, GateKind, GateTemplate, LogicEncoding, OutputSpec, Probe,
};
use crate::device::OtsParams;
use crate::netlist::{ElementKind, SourceSpec, GROUND};
use crate::scalar::Scalar;
use crate::sim::{extract_spikes_series, transient, SimOptions, Trace};

#[derive(Debug, Clone, PartialEq)]
pub struct RowResult<T> {
    pub inputs: Vec<bool>,
    pub expected: Vec<bool>,
    pub measured: Vec<bool>,
    /// Spikes (threshold crossings) per output inside the decode window.
    pub spikes: Vec<usize>,
    pub max_residual: T,
    pub trace: Option<Trace<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthTableRow {
    #[serde(rename = "in")]
    pub inputs: Vec<u8>,
    pub expected: Vec<u8>,
    pub measured: Vec<u8>,
    pub spikes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthTable {
    pub kind: GateKind,
    pub rows: Vec<TruthTableRow>,
    #[serde(skip)]
    pub max_residual: f64,
}

impl TruthTable {
    pub fn mismatches(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.expected != r.measured)
            .count()
    }

    pub fn all_match(&self) -> bool {
        self.mismatches() == 0
    }
}

fn bits(v: &[bool]) -> Vec<u8> {
    v.iter().map(|&b| u8::from(b)).collect()
}

fn probe_series<T: Scalar>(tr: &Trace<T>, probe: Probe) -> Result<Vec<T>, GateError> {
    Ok(match probe {
        Probe::Current { element } => tr.current(element)?.to_vec(),
        Probe::Voltage { pos, neg } => {
            let node = |n: usize| -> Result<Option<&[T]>, GateError> {
                if n == GROUND {
                    Ok(None)
                } else {
                    Ok(Some(tr.voltage(n)?))
                }
            };
            let (p, m) = (node(pos)?, node(neg)?);
            (0..tr.len())
                .map(|k| p.map_or(T::zero(), |s| s[k]) - m.map_or(T::zero(), |s| s[k]))
                .collect()
        }
    })
}

/// Decodes one output over the encoding's window. Returns the bit and the
/// number of threshold crossings inside the window.
pub fn decode_output<T: Scalar>(
    tr: &Trace<T>,
    out: &OutputSpec<T>,
    enc: &LogicEncoding<T>,
) -> Result<(bool, usize), GateError> {
    let (t0, t1) = enc.window();
    let window_err = || GateError::Window(t0.to_f64_lossy(), t1.to_f64_lossy());
    if !(t1 > t0) || t1 > tr.t_end() * T::lit(1.0 + 1e-9) {
        return Err(window_err());
    }
    let series: Vec<T> = probe_series(tr, out.probe)?
        .into_iter()
        .map(|v| v.abs())
        .collect();
    let (threshold, refractory) = match out.mode {
        DecodeMode::SpikeCount {
            threshold,
            refractory,
        } => (threshold, refractory),
        DecodeMode::MeanLevel { v_low, v_high } => ((v_low + v_high) / T::lit(2.0), T::zero()),
    };
    let refractory = refractory.max(tr.dt * T::lit(2.0));
    let spikes =
        extract_spikes_series(&series, tr.dt, threshold, refractory, Some((t0, t1)))?.count();
    let bit = match out.mode {
        DecodeMode::SpikeCount { .. } => spikes >= 1,
        DecodeMode::MeanLevel { .. } => {
            let k0 = (t0 / tr.dt).ceil().to_usize().unwrap_or(0);
            let k1 = ((t1 / tr.dt).floor().to_usize().unwrap_or(0)).min(series.len() - 1);
            if k1 < k0 {
                return Err(window_err());
            }
            let sum = series[k0..=k1].iter().fold(T::zero(), |s, &v| s + v);
            sum / T::from_usize_lossy(k1 - k0 + 1) > threshold
        }
    };
    Ok((bit, spikes))
}

/// Simulates one input row from a reset state and decodes every output.
pub fn evaluate_row<T: Scalar>(
    tpl: &GateTemplate<T>,
    inputs: &[bool],
    enc: &LogicEncoding<T>,
    keep_trace: bool,
) -> Result<RowResult<T>, GateError> {
    enc.validate()?;
    if inputs.len() != tpl.kind.arity() {
        return Err(GateError::Arity {
            kind: tpl.kind,
            expected: tpl.kind.arity(),
            got: inputs.len(),
        });
    }
    let mut net = tpl.net.clone();
    net.zero_initial_conditions();
    for (src, &bit) in tpl.inputs.iter().zip(inputs) {
        let v = if bit { enc.v_high } else { enc.v_low };
        net.set_source(src, SourceSpec::Dc(v))
            .map_err(crate::sim::SimError::from)?;
    }
    let opts = if keep_trace {
        let ots: Vec<usize> = net
            .elements
            .iter()
            .enumerate()
            .filter(|(_, e)| matches!(e.kind, ElementKind::Ots(_)))
            .map(|(i, _)| i)
            .collect();
        SimOptions::with_solver(enc.solver).record_branches(&ots)
    } else {
        let mut nodes = Vec::new();
        let mut branches = Vec::new();
        for o in &tpl.outputs {
            match o.probe {
                Probe::Voltage { pos, neg } => {
                    nodes.extend([pos, neg].into_iter().filter(|&n| n != GROUND))
                }
                Probe::Current { element } => branches.push(element),
            }
        }
        SimOptions::with_solver(enc.solver)
            .record_nodes(&nodes)
            .record_branches(&branches)
    };
    let opts = SimOptions {
        branches: merge_branches(&opts.branches, &tpl.outputs),
        ..opts
    };
    let tr = transient(&net, enc.settle + enc.bit_width, enc.dt, &opts)?;
    let mut measured = Vec::with_capacity(tpl.outputs.len());
    let mut spikes = Vec::with_capacity(tpl.outputs.len());
    for o in &tpl.outputs {
        let (bit, n) = decode_output(&tr, o, enc)?;
        measured.push(bit);
        spikes.push(n);
    }
    Ok(RowResult {
        inputs: inputs.to_vec(),
        expected: tpl.kind.expected(inputs),
        measured,
        spikes,
        max_residual: tr.max_residual,
        trace: keep_trace.then_some(tr),
    })
}

fn merge_branches<T>(base: &[usize], outputs: &[OutputSpec<T>]) -> Vec<usize> {
    let mut v = base.to_vec();
    for o in outputs {
        if let Probe::Current { element } = o.probe {
            if !v.contains(&element) {
                v.push(element);
            }
        }
    }
    v
}

/// Output bits of `kind` for one input row, simulated with the default template.
pub fn evaluate<T: Scalar>(
    kind: GateKind,
    inputs: &[bool],
    enc: &LogicEncoding<T>,
    p: OtsParams<T>,
) -> Result<Vec<bool>, GateError> {
    let tpl = super::build_gate(kind, p);
    Ok(evaluate_row(&tpl, inputs, enc, false)?.measured)
}

/// Exhaustive truth table. Rows run in parallel; the result does not depend
/// on the thread count.
pub fn truth_table<T: Scalar>(
    tpl: &GateTemplate<T>,
    enc: &LogicEncoding<T>,
) -> Result<TruthTable, GateError> {
    let rows: Vec<RowResult<T>> = input_rows(tpl.kind.arity())
        .into_par_iter()
        .map(|r| evaluate_row(tpl, &r, enc, false))
        .collect::<Result<_, _>>()?;
    let max_residual = rows
        .iter()
        .fold(0.0f64, |m, r| m.max(r.max_residual.to_f64_lossy()));
    Ok(TruthTable {
        kind: tpl.kind,
        rows: rows
            .into_iter()
            .map(|r| TruthTableRow {
                inputs: bits(&r.inputs),
                expected: bits(&r.expected),
                measured: bits(&r.measured),
                spikes: r.spikes,
            })
            .collect(),
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::Netlist;

    fn flat_trace(value: f64, n: usize) -> (Trace<f64>, OutputSpec<f64>, OutputSpec<f64>) {
        let tr = Trace {
            dt: 1e-6,
            node_ids: vec![1],
            node_names: vec!["y".into()],
            node_voltages: vec![vec![value; n]],
            branch_ids: vec![],
            branch_names: vec![],
            branch_currents: vec![],
            branch_voltages: vec![],
            max_residual: 0.0,
            fallback_steps: 0,
        };
        let probe = Probe::Voltage {
            pos: 1,
            neg: GROUND,
        };
        let spike = OutputSpec {
            name: "y".into(),
            probe,
            mode: DecodeMode::SpikeCount {
                threshold: 0.5,
                refractory: 1e-7,
            },
        };
        let level = OutputSpec {
            name: "y".into(),
            probe,
            mode: DecodeMode::MeanLevel {
                v_low: 0.0,
                v_high: 5.0,
            },
        };
        (tr, spike, level)
    }

    #[test]
    fn zero_trace_decodes_to_zero() {
        let enc = LogicEncoding {
            dt: 1e-6,
            ..Default::default()
        };
        let (tr, spike, level) = flat_trace(0.0, 101);
        assert_eq!(decode_output(&tr, &spike, &enc).unwrap(), (false, 0));
        assert!(!decode_output(&tr, &level, &enc).unwrap().0);
    }

    #[test]
    fn held_high_mean_level_is_one() {
        let enc = LogicEncoding {
            dt: 1e-6,
            ..Default::default()
        };
        let (tr, _, level) = flat_trace(5.0, 101);
        assert!(decode_output(&tr, &level, &enc).unwrap().0);
    }

    #[test]
    fn window_outside_trace_is_an_error() {
        let enc = LogicEncoding {
            dt: 1e-6,
            ..Default::default()
        };
        let (tr, spike, _) = flat_trace(0.0, 50);
        assert!(matches!(
            decode_output(&tr, &spike, &enc),
            Err(GateError::Window(..))
        ));
    }

    #[test]
    fn arity_checked() {
        let tpl = GateTemplate::<f64> {
            kind: GateKind::And,
            net: Netlist::new(),
            inputs: vec![],
            outputs: vec![],
            notes: vec![],
        };
        let e = evaluate_row(&tpl, &[true], &LogicEncoding::default(), false).unwrap_err();
        assert!(matches!(
            e,
            GateError::Arity {
                expected: 2,
                got: 1,
                ..
            }
        ));
    }
}
