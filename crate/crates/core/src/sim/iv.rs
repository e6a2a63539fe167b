//! Dynamic current-voltage sweep of a single switch.

use super::{transient, SimError, SimOptions, SolverSettings};
use crate::netlist::{ElementKind, Netlist, NetlistError, SourceSpec};
use crate::scalar::Scalar;

/// Drives the netlist's first voltage source with a triangular ramp and
/// returns the `(voltage, current)` trajectory of the switch at
/// `ots_index`, one point per step. No settling is applied.
pub fn dynamic_iv<T: Scalar>(
    net: &Netlist<T>,
    ramp: SourceSpec<T>,
    ots_index: usize,
    dt: T,
) -> Result<Vec<(T, T)>, SimError> {
    dynamic_iv_with(net, ramp, ots_index, dt, SolverSettings::default())
}

pub fn dynamic_iv_with<T: Scalar>(
    net: &Netlist<T>,
    ramp: SourceSpec<T>,
    ots_index: usize,
    dt: T,
    solver: SolverSettings<T>,
) -> Result<Vec<(T, T)>, SimError> {
    let SourceSpec::Triangle { t_rise, t_fall, .. } = ramp else {
        return Err(SimError::Options("the I-V ramp must be a triangle".into()));
    };
    match net.elements.get(ots_index) {
        Some(e) if matches!(e.kind, ElementKind::Ots(_)) => {}
        _ => {
            return Err(SimError::Options(format!(
                "element {ots_index} is not a switch"
            )))
        }
    }
    if net.count_kind("OTS") != 1 {
        return Err(SimError::Options(
            "the I-V circuit must contain exactly one switch".into(),
        ));
    }
    let src = net
        .elements
        .iter()
        .find(|e| matches!(e.kind, ElementKind::VoltageSource(_)))
        .ok_or_else(|| NetlistError::UnknownElement("voltage source".into()))?
        .name
        .clone();
    let mut driven = net.clone();
    driven.set_source(&src, ramp)?;
    let opts = SimOptions::with_solver(solver)
        .record_nodes(&[])
        .record_branches(&[ots_index]);
    let tr = transient(&driven, t_rise + t_fall, dt, &opts)?;
    let v = tr.element_voltage(ots_index)?;
    let i = tr.current(ots_index)?;
    Ok(v.iter().copied().zip(i.iter().copied()).collect())
}
