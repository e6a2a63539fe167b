//! Logic gate templates and the truth-table harness.

mod harness;
mod templates;

pub use harness::{
    decode_output, evaluate, evaluate_row, truth_table, RowResult, TruthTable, TruthTableRow,
};
pub use templates::{
    build_gate, build_gate_with, oscillator, GateTemplate, Oscillator, TemplateOverrides, OSC_C_P,
    OSC_R_D, OSC_R_S, OSC_SPIKE_THRESHOLD,
};

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::sim::{SimError, SolverSettings};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("unknown gate kind '{0}'")]
    UnknownKind(String),
    #[error("{kind} takes {expected} inputs, got {got}")]
    Arity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("decode window [{0:e}, {1:e}] s is empty or outside the trace")]
    Window(f64, f64),
    #[error("invalid logic encoding: {0}")]
    Encoding(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    And,
    Or,
    Nor,
    Nand,
    Xor,
    HalfAdder,
    FullAdder,
    DcaapCascade,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::And,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Nand,
        GateKind::Xor,
        GateKind::HalfAdder,
        GateKind::FullAdder,
        GateKind::DcaapCascade,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "and",
            GateKind::Or => "or",
            GateKind::Nor => "nor",
            GateKind::Nand => "nand",
            GateKind::Xor => "xor",
            GateKind::HalfAdder => "halfadder",
            GateKind::FullAdder => "fulladder",
            GateKind::DcaapCascade => "dcaap",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::FullAdder | GateKind::DcaapCascade => 3,
            _ => 2,
        }
    }

    pub fn output_count(self) -> usize {
        match self {
            GateKind::HalfAdder | GateKind::FullAdder | GateKind::DcaapCascade => 2,
            _ => 1,
        }
    }

    /// Boolean reference outputs for an input row.
    pub fn expected(self, x: &[bool]) -> Vec<bool> {
        match self {
            GateKind::And => vec![x[0] && x[1]],
            GateKind::Or => vec![x[0] || x[1]],
            GateKind::Nor => vec![!(x[0] || x[1])],
            GateKind::Nand => vec![!(x[0] && x[1])],
            GateKind::Xor => vec![x[0] ^ x[1]],
            GateKind::HalfAdder => vec![x[0] ^ x[1], x[0] && x[1]],
            GateKind::FullAdder => {
                let n = x.iter().filter(|&&b| b).count();
                vec![n % 2 == 1, n >= 2]
            }
            GateKind::DcaapCascade => {
                let y1 = x[0] ^ x[1];
                vec![y1, y1 ^ x[2]]
            }
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = GateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "and" => GateKind::And,
            "or" => GateKind::Or,
            "nor" => GateKind::Nor,
            "nand" => GateKind::Nand,
            "xor" => GateKind::Xor,
            "halfadder" | "ha" => GateKind::HalfAdder,
            "fulladder" | "fa" => GateKind::FullAdder,
            "dcaap" | "dcaapcascade" | "cascade" => GateKind::DcaapCascade,
            _ => return Err(GateError::UnknownKind(s.to_string())),
        })
    }
}

/// Logic levels and timing of a truth-table run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogicEncoding<T> {
    pub v_high: T,
    pub v_low: T,
    /// Length of the decode window.
    pub bit_width: T,
    /// Time the inputs are applied before the decode window opens.
    pub settle: T,
    pub dt: T,
    pub solver: SolverSettings<T>,
}

impl<T: Scalar> Default for LogicEncoding<T> {
    fn default() -> Self {
        Self {
            v_high: T::lit(5.0),
            v_low: T::zero(),
            bit_width: T::lit(50e-6),
            settle: T::lit(50e-6),
            dt: T::lit(50e-9),
            solver: SolverSettings::default(),
        }
    }
}

impl<T: Scalar> LogicEncoding<T> {
    pub fn validate(&self) -> Result<(), GateError> {
        let bad = |m: &str| Err(GateError::Encoding(m.into()));
        if !(self.v_high > T::zero()) || !self.v_high.is_finite() {
            return bad("v_high must be positive");
        }
        if self.v_low != T::zero() {
            return bad("v_low is fixed at 0");
        }
        if !(self.bit_width > T::zero()) || !(self.settle >= T::zero()) {
            return bad("bit_width must be positive and settle non-negative");
        }
        if !(self.dt > T::zero()) || self.dt * T::lit(4.0) > self.bit_width {
            return bad("dt must be positive and well below bit_width");
        }
        Ok(())
    }

    pub fn window(&self) -> (T, T) {
        (self.settle, self.settle + self.bit_width)
    }
}

/// What is measured for an output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Probe {
    /// Voltage between two nodes.
    Voltage { pos: usize, neg: usize },
    /// Current through an element.
    Current { element: usize },
}

/// How a probed waveform becomes a bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DecodeMode<T> {
    /// 1 iff the magnitude crosses `threshold` at least once in the window.
    SpikeCount { threshold: T, refractory: T },
    /// 1 iff the window mean exceeds the midpoint of the two levels.
    MeanLevel { v_low: T, v_high: T },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec<T> {
    pub name: String,
    pub probe: Probe,
    pub mode: DecodeMode<T>,
}

/// All input rows of the given arity in binary counting order, first input most significant.
pub fn input_rows(arity: usize) -> Vec<Vec<bool>> {
    (0..1usize << arity)
        .map(|r| (0..arity).map(|i| r >> (arity - 1 - i) & 1 == 1).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip_names() {
        for k in GateKind::ALL {
            assert_eq!(k.name().parse::<GateKind>().unwrap(), k);
        }
        assert_eq!(
            "half-adder".parse::<GateKind>().unwrap(),
            GateKind::HalfAdder
        );
        assert!("mux".parse::<GateKind>().is_err());
    }

    #[test]
    fn rows_in_counting_order() {
        let r = input_rows(2);
        assert_eq!(
            r,
            vec![
                vec![false, false],
                vec![false, true],
                vec![true, false],
                vec![true, true]
            ]
        );
        assert_eq!(input_rows(3).len(), 8);
    }

    #[test]
    fn reference_tables() {
        let b = |v: &[u8]| v.iter().map(|&x| x == 1).collect::<Vec<_>>();
        assert_eq!(GateKind::DcaapCascade.expected(&b(&[1, 1, 0])), b(&[0, 0]));
        assert_eq!(GateKind::DcaapCascade.expected(&b(&[1, 0, 1])), b(&[1, 0]));
        assert_eq!(GateKind::DcaapCascade.expected(&b(&[0, 1, 1])), b(&[1, 0]));
        assert_eq!(GateKind::FullAdder.expected(&b(&[1, 1, 1])), b(&[1, 1]));
        assert_eq!(GateKind::FullAdder.expected(&b(&[1, 0, 0])), b(&[1, 0]));
        assert_eq!(GateKind::HalfAdder.expected(&b(&[1, 1])), b(&[0, 1]));
    }

    #[test]
    fn encoding_validation() {
        let mut e = LogicEncoding::<f64>::default();
        e.validate().unwrap();
        e.v_high = -1.0;
        assert!(e.validate().is_err());
    }
}
