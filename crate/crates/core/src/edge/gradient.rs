//! Contrast differences read out as XOR firing rates.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use super::EdgeError;
use crate::device::OtsParams;
use crate::gates::{build_gate, DecodeMode, GateKind, Probe};
use crate::netlist::SourceSpec;
use crate::scalar::Scalar;
use crate::sim::{
    extract_spikes_series, firing_rate, transient, SimError, SimOptions, SolverSettings,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientSample<T> {
    pub delta_c: T,
    pub rate: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientConfig<T> {
    /// Input amplitude for contrast 255.
    pub v_high: T,
    pub window: T,
    pub dt: T,
    pub solver: SolverSettings<T>,
}

impl<T: Scalar> Default for GradientConfig<T> {
    fn default() -> Self {
        Self {
            v_high: T::lit(5.0),
            window: T::lit(1e-3),
            dt: T::lit(10e-9),
            solver: SolverSettings::default(),
        }
    }
}

/// Firing rate of the XOR circuit with both inputs held at `v_high * c / 255`.
pub fn gradient_rate<T: Scalar>(
    c_a: u8,
    c_b: u8,
    cfg: &GradientConfig<T>,
    p: OtsParams<T>,
) -> Result<GradientSample<T>, EdgeError> {
    if !(cfg.window > T::zero()) || !(cfg.dt > T::zero()) || cfg.dt * T::lit(100.0) > cfg.window {
        return Err(EdgeError::Encoding(
            "gradient window must span many time steps".into(),
        ));
    }
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
    for (name, c) in tpl.inputs.iter().zip([c_a, c_b]) {
        let v = cfg.v_high * T::lit(f64::from(c) / 255.0);
        net.set_source(name, SourceSpec::Dc(v))
            .map_err(SimError::from)?;
    }
    let opts = SimOptions::with_solver(cfg.solver)
        .record_nodes(&[])
        .record_branches(&[element]);
    let tr = transient(&net, cfg.window, cfg.dt, &opts)?;
    let series: Vec<T> = tr.current(element)?.iter().map(|i| i.abs()).collect();
    let st = extract_spikes_series(
        &series,
        cfg.dt,
        threshold,
        refractory.max(cfg.dt * T::lit(2.0)),
        None,
    )?;
    if (1..100).contains(&st.count()) {
        warn!(
            "only {} spikes in the gradient window; the rate estimate is coarse",
            st.count()
        );
    }
    Ok(GradientSample {
        delta_c: T::lit(f64::from(c_a.abs_diff(c_b))),
        rate: firing_rate(&st),
    })
}

/// Rates for each contrast difference, driving input A with `delta_c` and B with 0.
pub fn gradient_sweep<T: Scalar>(
    deltas: &[u8],
    cfg: &GradientConfig<T>,
    p: OtsParams<T>,
) -> Result<Vec<GradientSample<T>>, EdgeError> {
    deltas
        .par_iter()
        .map(|&d| gradient_rate(d, 0, cfg, p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit<T> {
    /// Hertz per contrast unit.
    pub slope: T,
    pub intercept: T,
    /// Contrast difference where the fitted line reaches zero rate.
    pub floor: T,
    pub r2: T,
    pub points: usize,
}

/// Least-squares line through the samples with a nonzero rate.
pub fn fit_linear<T: Scalar>(samples: &[GradientSample<T>]) -> Result<LinearFit<T>, EdgeError> {
    let pts: Vec<(T, T)> = samples
        .iter()
        .filter(|s| s.rate > T::zero())
        .map(|s| (s.delta_c, s.rate))
        .collect();
    if pts.is_empty() {
        return Err(EdgeError::Fit("every rate is zero".into()));
    }
    if pts.len() < 3 {
        return Err(EdgeError::Fit(format!(
            "need at least 3 nonzero rates, got {}",
            pts.len()
        )));
    }
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().fold(T::zero(), |s, p| s + p.0) / n;
    let my = pts.iter().fold(T::zero(), |s, p| s + p.1) / n;
    let sxx = pts
        .iter()
        .fold(T::zero(), |s, p| s + (p.0 - mx) * (p.0 - mx));
    let sxy = pts
        .iter()
        .fold(T::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    let syy = pts
        .iter()
        .fold(T::zero(), |s, p| s + (p.1 - my) * (p.1 - my));
    if !(sxx > T::zero()) {
        return Err(EdgeError::Fit(
            "all samples share one contrast difference".into(),
        ));
    }
    let slope = sxy / sxx;
    if !(slope > T::zero()) {
        return Err(EdgeError::Fit(
            "rate does not increase with contrast".into(),
        ));
    }
    let intercept = my - slope * mx;
    let ss_res = pts.iter().fold(T::zero(), |s, p| {
        let e = p.1 - (intercept + slope * p.0);
        s + e * e
    });
    let r2 = if syy > T::zero() {
        T::one() - ss_res / syy
    } else {
        T::one()
    };
    Ok(LinearFit {
        slope,
        intercept,
        floor: (-intercept / slope).max(T::zero()),
        r2,
        points: pts.len(),
    })
}

pub fn gradient_csv<T: Scalar>(samples: &[GradientSample<T>]) -> String {
    let mut s = String::from("delta_c,rate_hz\n");
    for g in samples {
        s.push_str(&format!("{},{}\n", g.delta_c, g.rate));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn samples(points: &[(f64, f64)]) -> Vec<GradientSample<f64>> {
        points
            .iter()
            .map(|&(delta_c, rate)| GradientSample { delta_c, rate })
            .collect()
    }

    #[test]
    fn exact_line() {
        let s: Vec<_> = (0..6)
            .map(|k| f64::from(20 + 10 * k))
            .map(|d| (d, 2.0 * (d - 10.0)))
            .collect();
        let f = fit_linear(&samples(&s)).unwrap();
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert_relative_eq!(f.floor, 10.0, epsilon = 1e-9);
        assert_relative_eq!(f.r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_rates_are_excluded() {
        let f = fit_linear(&samples(&[
            (0.0, 0.0),
            (5.0, 0.0),
            (20.0, 10.0),
            (30.0, 20.0),
            (40.0, 30.0),
        ]))
        .unwrap();
        assert_eq!(f.points, 3);
        assert_relative_eq!(f.floor, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_linear(&samples(&[(0.0, 0.0), (10.0, 0.0)])).is_err());
        assert!(fit_linear(&samples(&[(50.0, 5.0), (50.0, 6.0), (50.0, 7.0)])).is_err());
        assert!(fit_linear(&samples(&[(10.0, 5.0), (20.0, 6.0)])).is_err());
    }

    #[test]
    fn floor_clamped_at_zero() {
        let f = fit_linear(&samples(&[(1.0, 11.0), (2.0, 12.0), (3.0, 13.0)])).unwrap();
        assert_eq!(f.floor, 0.0);
    }

    #[test]
    fn csv_header() {
        let csv = gradient_csv(&samples(&[(0.0, 0.0), (16.0, 1.5)]));
        assert_eq!(csv, "delta_c,rate_hz\n0,0\n16,1.5\n");
    }
}
