//! Behavioral simulation of threshold-switch dendrite circuits.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64` for everyday use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod device;
pub mod edge;
pub mod energy;
pub mod gates;
pub mod netlist;
pub mod scalar;
pub mod sim;
pub mod units;

pub use device::{
    default_params, ots_current, ots_step, DeviceError, OtsParams, OtsState, Pending, Phase,
};
pub use edge::{BinaryImage, EdgeError, GradientSample, GrayImage, StreamEncoding};
pub use energy::{EnergyError, EnergyReport, ScalingLaw};
pub use gates::{GateError, GateKind, LogicEncoding, TruthTable};
pub use netlist::{
    parse_netlist, write_netlist, Element, ElementKind, Netlist, NetlistError, SourceSpec, GROUND,
};
pub use scalar::Scalar;
pub use sim::{
    dynamic_iv, dynamic_iv_with, extract_spikes, extract_spikes_series, firing_rate, transient,
    SimError, SimOptions, SolverSettings, SpikeTrain, Trace,
};

pub type OtsParams64 = OtsParams<f64>;
pub type OtsParams32 = OtsParams<f32>;
pub type OtsState64 = OtsState<f64>;
pub type Netlist64 = Netlist<f64>;
pub type Netlist32 = Netlist<f32>;
pub type Trace64 = Trace<f64>;
pub type Trace32 = Trace<f32>;
pub type SpikeTrain64 = SpikeTrain<f64>;
pub type LogicEncoding64 = LogicEncoding<f64>;
pub type StreamEncoding64 = StreamEncoding<f64>;
pub type GradientSample64 = GradientSample<f64>;
