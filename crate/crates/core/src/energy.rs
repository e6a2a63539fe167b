//! Energy per operation, per-image totals and feature-size scaling.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::device::OtsParams;
use crate::gates::{build_gate, GateKind};
use crate::netlist::{ElementKind, Netlist, SourceSpec};
use crate::scalar::Scalar;
use crate::sim::{transient, SimError, SimOptions, Trace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("integration bounds [{0:e}, {1:e}] s are empty or outside the trace")]
    Bounds(f64, f64),
    #[error("expected exactly one spike inside the bounds, found {0}")]
    SpikeCount(usize),
    #[error("invalid scaling law: {0}")]
    Scaling(String),
    #[error("element {0} does not exist")]
    Element(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "XOR")]
    Xor,
    #[serde(rename = "Sobel3x3")]
    Sobel3x3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Source {
    Simulated,
    Cited,
    Scaled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRow {
    pub label: String,
    /// Joules.
    pub energy_per_op: f64,
    pub op_count: u64,
    /// Joules; always `energy_per_op * op_count`.
    pub total: f64,
    pub method: Method,
    pub source: Source,
}

impl EnergyRow {
    pub fn new(
        label: &str,
        energy_per_op: f64,
        op_count: u64,
        method: Method,
        source: Source,
    ) -> Self {
        Self {
            label: label.into(),
            energy_per_op,
            op_count,
            total: energy_per_op * op_count as f64,
            method,
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub width: usize,
    pub height: usize,
    pub rows: Vec<EnergyRow>,
    pub notes: Vec<String>,
}

/// Two XOR operations (horizontal and vertical) per pixel.
pub fn xor_op_count(width: usize, height: usize) -> u64 {
    width as u64 * height as u64 * 2
}

/// A 3x3 kernel in two directions per pixel.
pub fn sobel_op_count(width: usize, height: usize) -> u64 {
    width as u64 * height as u64 * 9 * 2
}

pub const K20_PJ: f64 = 290.0;
pub const V100_PJ: f64 = 75.0;
pub const H100_PJ: f64 = 20.0;
pub const XEON_E5_2650_PJ: f64 = 2071.0;
/// Measured XOR energy per spike of a 6 um device.
pub const OTS_XOR_PJ: f64 = 467.0;
pub const OTS_REFERENCE_SIZE: f64 = 6e-6;
/// Published 16 nm projection: energy per operation and per 512x512 image.
pub const PROJECTED_PJ: f64 = 0.356;
pub const PROJECTED_IMAGE_UJ: f64 = 0.0032;

/// `E(d) = reference_energy * (d / reference_size)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingLaw {
    pub exponent: f64,
    pub reference_size: f64,
    pub reference_energy: f64,
}

impl ScalingLaw {
    pub const EXPONENT_RANGE: (f64, f64) = (1.6, 2.1);

    pub fn new(
        exponent: f64,
        reference_size: f64,
        reference_energy: f64,
    ) -> Result<Self, EnergyError> {
        let (lo, hi) = Self::EXPONENT_RANGE;
        if !(lo..=hi).contains(&exponent) {
            return Err(EnergyError::Scaling(format!(
                "exponent {exponent} outside [{lo}, {hi}]"
            )));
        }
        if !(reference_size > 0.0) || !reference_size.is_finite() {
            return Err(EnergyError::Scaling(
                "reference size must be positive".into(),
            ));
        }
        if !(reference_energy >= 0.0) || !reference_energy.is_finite() {
            return Err(EnergyError::Scaling(
                "reference energy must be non-negative".into(),
            ));
        }
        Ok(Self {
            exponent,
            reference_size,
            reference_energy,
        })
    }

    /// The measured XOR device at 6 um.
    pub fn ots_xor(exponent: f64) -> Result<Self, EnergyError> {
        Self::new(exponent, OTS_REFERENCE_SIZE, OTS_XOR_PJ * 1e-12)
    }
}

pub fn scale_energy(law: &ScalingLaw, d_target: f64) -> Result<f64, EnergyError> {
    if !(d_target > 0.0) || !d_target.is_finite() {
        return Err(EnergyError::Scaling("target size must be positive".into()));
    }
    if d_target == law.reference_size {
        return Ok(law.reference_energy);
    }
    Ok(law.reference_energy * (d_target / law.reference_size).powf(law.exponent))
}

/// Processor and measured-device comparison for one image size.
pub fn comparison_report(width: usize, height: usize) -> EnergyReport {
    let sobel = sobel_op_count(width, height);
    let xor = xor_op_count(width, height);
    let rows = vec![
        EnergyRow::new(
            "NVIDIA K20",
            K20_PJ * 1e-12,
            sobel,
            Method::Sobel3x3,
            Source::Cited,
        ),
        EnergyRow::new(
            "NVIDIA V100",
            V100_PJ * 1e-12,
            sobel,
            Method::Sobel3x3,
            Source::Cited,
        ),
        EnergyRow::new(
            "NVIDIA H100",
            H100_PJ * 1e-12,
            sobel,
            Method::Sobel3x3,
            Source::Cited,
        ),
        EnergyRow::new(
            "Intel Xeon E5-2650",
            XEON_E5_2650_PJ * 1e-12,
            sobel,
            Method::Sobel3x3,
            Source::Cited,
        ),
        EnergyRow::new(
            "OTS XOR (measured, 6 um)",
            OTS_XOR_PJ * 1e-12,
            xor,
            Method::Xor,
            Source::Cited,
        ),
    ];
    EnergyReport {
        width,
        height,
        rows,
        notes: Vec::new(),
    }
}

impl EnergyReport {
    /// Adds the XOR row scaled to `node` metres and notes how it compares with
    /// the published projection.
    pub fn with_projection(mut self, node: f64, exponent: f64) -> Result<Self, EnergyError> {
        let law = ScalingLaw::ots_xor(exponent)?;
        let e = scale_energy(&law, node)?;
        let ops = xor_op_count(self.width, self.height);
        let label = format!(
            "OTS XOR (scaled to {} nm, n = {exponent})",
            fmt_sig(node * 1e9)
        );
        self.rows
            .push(EnergyRow::new(&label, e, ops, Method::Xor, Source::Scaled));
        let ops_512 = xor_op_count(512, 512) as f64;
        self.notes.push(format!(
            "scaled: {} pJ/op x {ops} ops = {} uJ",
            fmt_sig(e * 1e12),
            fmt_sig(e * ops as f64 * 1e6)
        ));
        self.notes.push(format!(
            "published 16 nm projection: {PROJECTED_PJ} pJ/op and {PROJECTED_IMAGE_UJ} uJ per 512x512 image; \
             these disagree with each other ({PROJECTED_PJ} pJ x {ops_512} = {} uJ)",
            fmt_sig(PROJECTED_PJ * 1e-12 * ops_512 * 1e6)
        ));
        let direct = scale_energy(&ScalingLaw::ots_xor(1.6)?, 16e-9)?;
        self.notes.push(format!(
            "direct d^1.6 scaling of {OTS_XOR_PJ} pJ from 6 um to 16 nm gives {} pJ/op, not {PROJECTED_PJ}; \
             a 3.2 nJ per-image figure matches neither",
            fmt_sig(direct * 1e12)
        ));
        Ok(self)
    }

    pub fn with_row(mut self, row: EnergyRow) -> Self {
        self.rows.push(row);
        self
    }

    /// Aligned text table in pJ per operation and uJ per image.
    pub fn to_text(&self) -> String {
        let header = [
            "Platform",
            "Method",
            "Energy/op (pJ)",
            "Operations",
            "Total (uJ)",
            "Source",
        ];
        let cells: Vec<[String; 6]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.label.clone(),
                    match r.method {
                        Method::Xor => "XOR".into(),
                        Method::Sobel3x3 => "Sobel 3x3".into(),
                    },
                    fmt_sig(r.energy_per_op * 1e12),
                    r.op_count.to_string(),
                    fmt_sig(r.total * 1e6),
                    format!("{:?}", r.source).to_lowercase(),
                ]
            })
            .collect();
        let mut width = header.map(str::len);
        for row in &cells {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = format!("Image {}x{}\n", self.width, self.height);
        let mut line = |row: &[String]| {
            let parts: Vec<String> = row
                .iter()
                .zip(&width)
                .enumerate()
                .map(|(i, (c, &w))| {
                    if i == 0 || i == 1 || i == 5 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&header.map(String::from));
        for row in &cells {
            line(row);
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

/// Four significant digits without trailing zeros.
fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = (3 - x.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{x:.digits$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Trapezoid-rule integral of `v * i` over uniformly spaced samples.
pub fn dissipated_energy<T: Scalar>(v: &[T], i: &[T], dt: T) -> T {
    let p: Vec<T> = v.iter().zip(i).map(|(&v, &i)| v * i).collect();
    p.windows(2)
        .fold(T::zero(), |s, w| s + (w[0] + w[1]) * dt / T::lit(2.0))
}

/// Energy dissipated in `element` between `bounds`. For a threshold switch
/// the bounds must hold exactly one conduction run (`|i| >= i_hold`).
pub fn spike_energy<T: Scalar>(
    tr: &Trace<T>,
    net: &Netlist<T>,
    element: usize,
    bounds: (T, T),
) -> Result<T, EnergyError> {
    let el = net
        .elements
        .get(element)
        .ok_or(EnergyError::Element(element))?;
    let (t0, t1) = bounds;
    let bad = || EnergyError::Bounds(t0.to_f64_lossy(), t1.to_f64_lossy());
    if !(t0 >= T::zero()) || !(t1 > t0) || t1 > tr.t_end() * T::lit(1.0 + 1e-9) {
        return Err(bad());
    }
    let k0 = (t0 / tr.dt).ceil().to_usize().ok_or_else(bad)?;
    let k1 = ((t1 / tr.dt).floor().to_usize().ok_or_else(bad)?).min(tr.len() - 1);
    if k1 <= k0 {
        return Err(bad());
    }
    let v = &tr.element_voltage(element)?[k0..=k1];
    let i = &tr.current(element)?[k0..=k1];
    if let ElementKind::Ots(p) = &el.kind {
        let mut runs = 0;
        let mut inside = false;
        for &x in i {
            let on = x.abs() >= p.i_hold;
            if on && !inside {
                runs += 1;
            }
            inside = on;
        }
        if runs != 1 {
            return Err(EnergyError::SpikeCount(runs));
        }
    }
    Ok(dissipated_energy(v, i, tr.dt))
}

/// Energy of the first spike of the XOR circuit driven with one input high.
pub fn simulated_xor_spike_energy<T: Scalar>(
    v_high: T,
    dt: T,
    p: OtsParams<T>,
) -> Result<T, EnergyError> {
    let tpl = build_gate(GateKind::Xor, p);
    let ots = tpl.net.ots_indices()[0];
    let mut net = tpl.net.clone();
    net.zero_initial_conditions();
    net.set_source(&tpl.inputs[0], SourceSpec::Dc(v_high))
        .map_err(SimError::from)?;
    net.set_source(&tpl.inputs[1], SourceSpec::Dc(T::zero()))
        .map_err(SimError::from)?;
    let opts = SimOptions::default()
        .record_nodes(&[])
        .record_branches(&[ots]);
    let tr = transient(&net, T::lit(20e-6), dt, &opts)?;
    let i = tr.current(ots)?;
    let start = i
        .iter()
        .position(|x| x.abs() >= p.i_hold)
        .ok_or(EnergyError::SpikeCount(0))?;
    let end = start
        + i[start..]
            .iter()
            .position(|x| x.abs() < p.i_hold)
            .ok_or(EnergyError::SpikeCount(0))?;
    let k0 = start.saturating_sub(1);
    let k1 = (end + (p.tau_off / dt).ceil().to_usize().unwrap_or(0) + 1).min(tr.len() - 1);
    spike_energy(&tr, &net, ots, (tr.time(k0), tr.time(k1)))
}
