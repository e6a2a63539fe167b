//! Pixel streams through the XOR circuit.

use rayon::prelude::*;
use serde::Serialize;

use super::image::{or_images, shift, BinaryImage, Direction};
use super::EdgeError;
use crate::device::OtsParams;
use crate::gates::{build_gate, DecodeMode, GateKind, Probe};
use crate::netlist::SourceSpec;
use crate::scalar::Scalar;
use crate::sim::{extract_spikes_series, transient, SimError, SimOptions, SolverSettings};

/// One pulse per set bit, one clock period per bit.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain<T> {
    pub bits: Vec<bool>,
    pub width: T,
    pub period: T,
    pub v_high: T,
    pub v_low: T,
}

impl<T: Scalar> PulseTrain<T> {
    /// Piecewise-linear waveform with ramps of length `edge` at both pulse edges.
    pub fn to_source(&self, edge: T) -> SourceSpec<T> {
        if !self.bits.iter().any(|&b| b) {
            return SourceSpec::Dc(self.v_low);
        }
        let mut pts = vec![(T::zero(), self.v_low)];
        for (k, _) in self.bits.iter().enumerate().filter(|(_, &b)| b) {
            let t0 = T::from_usize_lossy(k) * self.period;
            if t0 > pts[pts.len() - 1].0 {
                pts.push((t0, self.v_low));
            }
            pts.push((t0 + edge, self.v_high));
            pts.push((t0 + self.width, self.v_high));
            pts.push((t0 + self.width + edge, self.v_low));
        }
        SourceSpec::PiecewiseLinear(pts)
    }
}

/// Clocking and decoding of pixel streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamEncoding<T> {
    pub v_high: T,
    pub v_low: T,
    pub width: T,
    pub period: T,
    /// Rise and fall time of each pulse.
    pub edge: T,
    pub dt: T,
    /// Spikes per clock period needed for an output 1.
    pub count_threshold: usize,
    /// Clock periods per independent simulation segment.
    pub segment_periods: usize,
    pub solver: SolverSettings<T>,
}

impl<T: Scalar> Default for StreamEncoding<T> {
    fn default() -> Self {
        Self {
            v_high: T::lit(5.0),
            v_low: T::zero(),
            width: T::lit(5e-6),
            period: T::lit(10e-6),
            edge: T::lit(100e-9),
            dt: T::lit(50e-9),
            count_threshold: 1,
            segment_periods: 4096,
            solver: SolverSettings::default(),
        }
    }
}

impl<T: Scalar> StreamEncoding<T> {
    pub fn validate(&self) -> Result<(), EdgeError> {
        let bad = |m: &str| Err(EdgeError::Encoding(m.into()));
        if !(self.v_high > self.v_low) || !self.v_high.is_finite() || !self.v_low.is_finite() {
            return bad("v_high must exceed v_low");
        }
        if !(self.edge > T::zero())
            || !(self.width > self.edge)
            || !(self.width + self.edge < self.period)
        {
            return bad("need 0 < edge < width and width + edge < period");
        }
        if !(self.dt > T::zero()) || self.dt * T::lit(4.0) > self.width {
            return bad("dt must be positive and well below the pulse width");
        }
        if self.count_threshold == 0 || self.segment_periods == 0 {
            return bad("count_threshold and segment_periods must be at least 1");
        }
        Ok(())
    }

    pub fn train(&self, bits: &[bool]) -> PulseTrain<T> {
        PulseTrain {
            bits: bits.to_vec(),
            width: self.width,
            period: self.period,
            v_high: self.v_high,
            v_low: self.v_low,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamResult<T> {
    pub bits: Vec<bool>,
    /// Spikes counted in each clock period.
    pub counts: Vec<usize>,
    pub max_residual: T,
}

fn run_segment<T: Scalar>(
    a: &[bool],
    b: &[bool],
    enc: &StreamEncoding<T>,
    p: OtsParams<T>,
) -> Result<(Vec<usize>, T), EdgeError> {
    let tpl = build_gate(GateKind::Xor, p);
    let out = &tpl.outputs[0];
    let (
        Probe::Current { element },
        DecodeMode::SpikeCount {
            threshold,
            refractory,
        },
    ) = (out.probe, out.mode)
    else {
        unreachable!("the XOR template reads spikes from the switch current")
    };
    let mut net = tpl.net.clone();
    net.zero_initial_conditions();
    for (name, bits) in tpl.inputs.iter().zip([a, b]) {
        net.set_source(name, enc.train(bits).to_source(enc.edge))
            .map_err(SimError::from)?;
    }
    let n = a.len();
    let opts = SimOptions::with_solver(enc.solver)
        .record_nodes(&[])
        .record_branches(&[element]);
    let tr = transient(&net, T::from_usize_lossy(n) * enc.period, enc.dt, &opts)?;
    let series: Vec<T> = tr.current(element)?.iter().map(|i| i.abs()).collect();
    let refractory = refractory.max(enc.dt * T::lit(2.0));
    let spikes = extract_spikes_series(&series, enc.dt, threshold, refractory, None)?;
    let mut counts = vec![0usize; n];
    for &t in &spikes.spike_times {
        let k = (t / enc.period).floor().to_usize().unwrap_or(0).min(n - 1);
        counts[k] += 1;
    }
    Ok((counts, tr.max_residual))
}

/// Streams two bit sequences through the XOR circuit and reports the
/// per-period spike counts alongside the decoded bits.
pub fn xor_stream_detailed<T: Scalar>(
    a: &[bool],
    b: &[bool],
    enc: &StreamEncoding<T>,
    p: OtsParams<T>,
) -> Result<StreamResult<T>, EdgeError> {
    enc.validate()?;
    if a.len() != b.len() {
        return Err(EdgeError::SizeMismatch(format!(
            "streams of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Ok(StreamResult {
            bits: vec![],
            counts: vec![],
            max_residual: T::zero(),
        });
    }
    let segments: Vec<(Vec<usize>, T)> = a
        .par_chunks(enc.segment_periods)
        .zip(b.par_chunks(enc.segment_periods))
        .map(|(sa, sb)| run_segment(sa, sb, enc, p))
        .collect::<Result<_, _>>()?;
    let mut counts = Vec::with_capacity(a.len());
    let mut max_residual = T::zero();
    for (c, r) in segments {
        counts.extend(c);
        max_residual = max_residual.max(r);
    }
    let bits = counts.iter().map(|&c| c >= enc.count_threshold).collect();
    Ok(StreamResult {
        bits,
        counts,
        max_residual,
    })
}

pub fn xor_stream_circuit<T: Scalar>(
    a: &[bool],
    b: &[bool],
    enc: &StreamEncoding<T>,
    p: OtsParams<T>,
) -> Result<Vec<bool>, EdgeError> {
    Ok(xor_stream_detailed(a, b, enc, p)?.bits)
}

/// Edge map computed by the circuit: each image is XORed with its horizontal
/// and vertical one-pixel shift, both in row-major order, and the two maps are ORed.
pub fn detect_edges<T: Scalar>(
    img: &BinaryImage,
    enc: &StreamEncoding<T>,
    p: OtsParams<T>,
) -> Result<BinaryImage, EdgeError> {
    let sh = shift(img, Direction::Horizontal)?;
    let sv = shift(img, Direction::Vertical)?;
    let (h, v) = rayon::join(
        || xor_stream_circuit(&img.bits, &sh.bits, enc, p),
        || xor_stream_circuit(&img.bits, &sv.bits, enc, p),
    );
    let h = BinaryImage::new(img.width, img.height, h?)?;
    let v = BinaryImage::new(img.width, img.height, v?)?;
    or_images(&h, &v)
}

/// Pixel-wise comparison of a circuit edge map against a reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MismatchReport {
    /// Pixels compared.
    pub total: usize,
    /// `(x, y)` of every differing pixel.
    pub mismatches: Vec<(usize, usize)>,
}

pub fn compare_edges(
    measured: &BinaryImage,
    reference: &BinaryImage,
) -> Result<MismatchReport, EdgeError> {
    if (measured.width, measured.height) != (reference.width, reference.height) {
        return Err(EdgeError::SizeMismatch(format!(
            "{}x{} vs {}x{}",
            measured.width, measured.height, reference.width, reference.height
        )));
    }
    let w = measured.width;
    let mismatches = measured
        .bits
        .iter()
        .zip(&reference.bits)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(k, _)| (k % w, k / w))
        .collect();
    Ok(MismatchReport {
        total: measured.bits.len(),
        mismatches,
    })
}
