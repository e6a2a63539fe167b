//! Behavioral model of an ambipolar Ovonic threshold switch.
//!
//! The device is a two-state volatile switch. In the off phase it is a
//! high-resistance leak; once `|v|` reaches the threshold voltage for long
//! enough it turns on and conducts through `r_on` above the holding voltage.
//! It falls back off once its current stays below the holding current for
//! the turn-off delay. The off/on hysteresis between `v_th` and `v_hold`
//! is what gives the negative differential resistance seen with a
//! capacitive load.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite {what} ({value})")]
    NonFinite { what: &'static str, value: f64 },
    #[error("time step must be positive, got {0}")]
    BadTimestep(f64),
}

/// Device parameters. All quantities in SI base units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtsParams<T> {
    pub v_th: T,
    pub v_hold: T,
    pub r_on: T,
    pub g_off: T,
    pub i_hold: T,
    pub tau_on: T,
    pub tau_off: T,
}

impl<T: Scalar> OtsParams<T> {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let fields = [
            ("v_th", self.v_th),
            ("v_hold", self.v_hold),
            ("r_on", self.r_on),
            ("g_off", self.g_off),
            ("i_hold", self.i_hold),
            ("tau_on", self.tau_on),
            ("tau_off", self.tau_off),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(DeviceError::InvalidParams(format!("{name} is not finite")));
            }
        }
        let bad = |m: &str| Err(DeviceError::InvalidParams(m.to_string()));
        if !(self.v_hold > T::zero()) {
            return bad("v_hold must be > 0");
        }
        if !(self.v_th > self.v_hold) {
            return bad("v_th must exceed v_hold");
        }
        if !(self.r_on > T::zero()) || !(self.g_off > T::zero()) {
            return bad("r_on and g_off must be > 0");
        }
        if !(self.r_on * self.g_off < T::lit(1e-3)) {
            return bad("on/off contrast below three decades (r_on * g_off >= 1e-3)");
        }
        if !(self.i_hold > T::zero()) {
            return bad("i_hold must be > 0");
        }
        if self.tau_on < T::zero() || self.tau_off < T::zero() {
            return bad("switching delays must be >= 0");
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> OtsParams<U> {
        let c = |x: T| U::lit(x.to_f64_lossy());
        OtsParams {
            v_th: c(self.v_th),
            v_hold: c(self.v_hold),
            r_on: c(self.r_on),
            g_off: c(self.g_off),
            i_hold: c(self.i_hold),
            tau_on: c(self.tau_on),
            tau_off: c(self.tau_off),
        }
    }
}

impl<T: Scalar> Default for OtsParams<T> {
    fn default() -> Self {
        default_params()
    }
}

/// Calibrated default parameter set.
///
/// `v_th` sits between the one-input and two-input levels of the logic
/// templates' resistor dividers over a +/-10 % logic swing, and `i_hold` is
/// large enough that every template that should self-oscillate cannot
/// sustain the on state (its load line crosses the on branch below
/// `i_hold`).
pub fn default_params<T: Scalar>() -> OtsParams<T> {
    OtsParams {
        v_th: T::lit(3.2),
        v_hold: T::lit(1.0),
        r_on: T::lit(100.0),
        g_off: T::lit(1e-8),
        i_hold: T::lit(2.5e-3),
        tau_on: T::lit(50e-9),
        tau_off: T::lit(50e-9),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Off,
    On,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pending {
    SwitchingOn,
    SwitchingOff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtsState<T> {
    pub phase: Phase,
    pub pending: Option<Pending>,
    pub elapsed: T,
}

impl<T: Scalar> OtsState<T> {
    pub fn off() -> Self {
        Self {
            phase: Phase::Off,
            pending: None,
            elapsed: T::zero(),
        }
    }

    pub fn on() -> Self {
        Self {
            phase: Phase::On,
            pending: None,
            elapsed: T::zero(),
        }
    }

    pub fn is_on(&self) -> bool {
        self.phase == Phase::On
    }
}

impl<T: Scalar> Default for OtsState<T> {
    fn default() -> Self {
        Self::off()
    }
}

/// Linear segment `i = g * v + i0` of the conduction law around a voltage.
///
/// The on-phase law has three segments (negative branch, dead zone, positive
/// branch); the off phase is a single line through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Segment {
    Leak,
    DeadZone,
    Forward,
    Reverse,
}

impl Segment {
    pub fn select<T: Scalar>(p: &OtsParams<T>, phase: Phase, v: T) -> Segment {
        match phase {
            Phase::Off => Segment::Leak,
            Phase::On if v > p.v_hold => Segment::Forward,
            Phase::On if v < -p.v_hold => Segment::Reverse,
            Phase::On => Segment::DeadZone,
        }
    }

    /// `(g, i0)` of the segment.
    pub fn line<T: Scalar>(self, p: &OtsParams<T>) -> (T, T) {
        let g_on = p.r_on.recip();
        match self {
            Segment::Leak => (p.g_off, T::zero()),
            Segment::DeadZone => (T::zero(), T::zero()),
            Segment::Forward => (g_on, -p.v_hold * g_on),
            Segment::Reverse => (g_on, p.v_hold * g_on),
        }
    }
}

/// Device current for the terminal voltage `v` (positive from `n+` to `n-`).
pub fn ots_current<T: Scalar>(p: &OtsParams<T>, s: &OtsState<T>, v: T) -> Result<T, DeviceError> {
    if !v.is_finite() {
        return Err(DeviceError::NonFinite {
            what: "device voltage",
            value: v.to_f64_lossy(),
        });
    }
    Ok(match s.phase {
        Phase::Off => p.g_off * v,
        Phase::On => {
            let over = (v.abs() - p.v_hold).max(T::zero());
            over / p.r_on * v.signum_or_zero()
        }
    })
}

trait SignumOrZero {
    fn signum_or_zero(self) -> Self;
}

impl<T: Scalar> SignumOrZero for T {
    fn signum_or_zero(self) -> Self {
        if self == T::zero() {
            T::zero()
        } else {
            self.signum()
        }
    }
}

/// Advances the switching state machine by `dt` given the (converged)
/// terminal voltage over that step.
pub fn ots_step<T: Scalar>(
    p: &OtsParams<T>,
    s: &OtsState<T>,
    v: T,
    dt: T,
) -> Result<OtsState<T>, DeviceError> {
    if !dt.is_finite() || !(dt > T::zero()) {
        return Err(DeviceError::BadTimestep(dt.to_f64_lossy()));
    }
    let i = ots_current(p, s, v)?;
    let (condition, want, delay, target) = match s.phase {
        Phase::Off => (v.abs() >= p.v_th, Pending::SwitchingOn, p.tau_on, Phase::On),
        Phase::On => (
            i.abs() < p.i_hold,
            Pending::SwitchingOff,
            p.tau_off,
            Phase::Off,
        ),
    };
    if !condition {
        return Ok(OtsState {
            phase: s.phase,
            pending: None,
            elapsed: T::zero(),
        });
    }
    let elapsed = if s.pending == Some(want) {
        s.elapsed + dt
    } else {
        dt
    };
    if elapsed >= delay {
        Ok(OtsState {
            phase: target,
            pending: None,
            elapsed: T::zero(),
        })
    } else {
        Ok(OtsState {
            phase: s.phase,
            pending: Some(want),
            elapsed,
        })
    }
}
