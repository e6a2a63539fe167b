//! Threshold-crossing spike extraction and rate coding.

use serde::Serialize;

use super::{SimError, Trace};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpikeTrain<T> {
    pub spike_times: Vec<T>,
    pub detect_threshold: T,
    pub window: (T, T),
}

impl<T: Scalar> SpikeTrain<T> {
    pub fn count(&self) -> usize {
        self.spike_times.len()
    }

    pub fn count_in(&self, t0: T, t1: T) -> usize {
        self.spike_times
            .iter()
            .filter(|&&t| t >= t0 && t < t1)
            .count()
    }

    /// Mean inter-spike interval, if there are at least two spikes.
    pub fn mean_period(&self) -> Option<T> {
        let n = self.spike_times.len();
        if n < 2 {
            return None;
        }
        Some((self.spike_times[n - 1] - self.spike_times[0]) / T::from_usize_lossy(n - 1))
    }
}

/// Spikes in a uniformly sampled series (`t_k = k * dt`). A spike is an
/// upward crossing of `threshold`, timed by linear interpolation; crossings
/// closer than `refractory` to the previous spike are dropped. Only spikes
/// inside `window` (default: the whole series) are kept.
pub fn extract_spikes_series<T: Scalar>(
    samples: &[T],
    dt: T,
    threshold: T,
    refractory: T,
    window: Option<(T, T)>,
) -> Result<SpikeTrain<T>, SimError> {
    if !(dt > T::zero()) {
        return Err(SimError::Options("dt must be positive".into()));
    }
    if !(refractory >= dt * T::lit(2.0)) {
        return Err(SimError::Options(
            "refractory interval must be at least 2 dt".into(),
        ));
    }
    let t_end = T::from_usize_lossy(samples.len().saturating_sub(1)) * dt;
    let window = window.unwrap_or((T::zero(), t_end));
    if !(window.1 > window.0) {
        return Err(SimError::Options("empty spike window".into()));
    }
    let mut spikes = Vec::new();
    let mut last: Option<T> = None;
    for (k, w) in samples.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if !(a < threshold && b >= threshold) {
            continue;
        }
        let t = (T::from_usize_lossy(k) + (threshold - a) / (b - a)) * dt;
        if last.is_some_and(|l| t - l <= refractory) {
            continue;
        }
        last = Some(t);
        if t >= window.0 && t <= window.1 {
            spikes.push(t);
        }
    }
    Ok(SpikeTrain {
        spike_times: spikes,
        detect_threshold: threshold,
        window,
    })
}

/// Spikes on a recorded node voltage over the whole trace.
pub fn extract_spikes<T: Scalar>(
    tr: &Trace<T>,
    node: usize,
    threshold: T,
    refractory: T,
) -> Result<SpikeTrain<T>, SimError> {
    extract_spikes_series(tr.voltage(node)?, tr.dt, threshold, refractory, None)
}

pub fn firing_rate<T: Scalar>(st: &SpikeTrain<T>) -> T {
    let len = st.window.1 - st.window.0;
    if len > T::zero() {
        T::from_usize_lossy(st.spike_times.len()) / len
    } else {
        T::zero()
    }
}
