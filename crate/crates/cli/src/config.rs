//! Flat `key = value` run configuration.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use ots_core::units::parse_si;
use ots_core::{default_params, OtsParams64, SolverSettings};

/// Every recognised key, in the order they are documented.
pub const KEYS: &[&str] = &[
    "v_th",
    "v_hold",
    "r_on",
    "g_off",
    "i_hold",
    "tau_on",
    "tau_off",
    "dt",
    "max_reselections",
    "residual_tol",
    "v_high",
    "bit_width",
    "settle",
    "threshold",
    "count_threshold",
    "segment_periods",
    "exponent",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub v_th: Option<f64>,
    pub v_hold: Option<f64>,
    pub r_on: Option<f64>,
    pub g_off: Option<f64>,
    pub i_hold: Option<f64>,
    pub tau_on: Option<f64>,
    pub tau_off: Option<f64>,
    pub dt: Option<f64>,
    pub max_reselections: Option<usize>,
    pub residual_tol: Option<f64>,
    pub v_high: Option<f64>,
    pub bit_width: Option<f64>,
    pub settle: Option<f64>,
    pub threshold: Option<u8>,
    pub count_threshold: Option<usize>,
    pub segment_periods: Option<usize>,
    pub exponent: Option<f64>,
}

fn quantity(v: &str) -> Result<f64> {
    let x = parse_si(v)?;
    if !x.is_finite() {
        bail!("'{v}' is not finite");
    }
    Ok(x)
}

fn count(v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| anyhow!("'{v}' is not a non-negative integer"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "v_th" => self.v_th = Some(quantity(value)?),
            "v_hold" => self.v_hold = Some(quantity(value)?),
            "r_on" => self.r_on = Some(quantity(value)?),
            "g_off" => self.g_off = Some(quantity(value)?),
            "i_hold" => self.i_hold = Some(quantity(value)?),
            "tau_on" => self.tau_on = Some(quantity(value)?),
            "tau_off" => self.tau_off = Some(quantity(value)?),
            "dt" => self.dt = Some(quantity(value)?),
            "max_reselections" => self.max_reselections = Some(count(value)?),
            "residual_tol" => self.residual_tol = Some(quantity(value)?),
            "v_high" => self.v_high = Some(quantity(value)?),
            "bit_width" => self.bit_width = Some(quantity(value)?),
            "settle" => self.settle = Some(quantity(value)?),
            "threshold" => {
                let t = count(value)?;
                self.threshold =
                    Some(u8::try_from(t).map_err(|_| anyhow!("threshold {t} exceeds 255"))?);
            }
            "count_threshold" => self.count_threshold = Some(count(value)?),
            "segment_periods" => self.segment_periods = Some(count(value)?),
            "exponent" => self.exponent = Some(quantity(value)?),
            _ => bail!("unknown key '{key}' (known keys: {})", KEYS.join(", ")),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            cfg.set(k.trim(), v.trim())
                .with_context(|| format!("line {}", i + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Device parameters: defaults overlaid with any configured fields.
    pub fn params(&self) -> Result<OtsParams64> {
        let mut p = default_params::<f64>();
        let fields = [
            (&mut p.v_th, self.v_th),
            (&mut p.v_hold, self.v_hold),
            (&mut p.r_on, self.r_on),
            (&mut p.g_off, self.g_off),
            (&mut p.i_hold, self.i_hold),
            (&mut p.tau_on, self.tau_on),
            (&mut p.tau_off, self.tau_off),
        ];
        for (slot, value) in fields {
            if let Some(v) = value {
                *slot = v;
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn solver(&self) -> Result<SolverSettings<f64>> {
        let mut s = SolverSettings::default();
        if let Some(n) = self.max_reselections {
            s.max_reselections = n;
        }
        if let Some(tol) = self.residual_tol {
            if !(tol > 0.0) {
                bail!("residual_tol must be positive");
            }
            s.residual_tol = tol;
        }
        Ok(s)
    }

    pub fn dt_or(&self, default: f64) -> Result<f64> {
        let dt = self.dt.unwrap_or(default);
        if !(dt > 0.0) {
            bail!("dt must be positive");
        }
        Ok(dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_with_suffixes_and_comments() {
        let cfg =
            RunConfig::parse("# run\nv_th = 3.5\ntau_on=20n  # faster\nthreshold = 100\n").unwrap();
        assert_eq!(cfg.v_th, Some(3.5));
        assert!((cfg.tau_on.unwrap() - 20e-9).abs() < 1e-21);
        assert_eq!(cfg.threshold, Some(100));
        assert_eq!(cfg.params().unwrap().v_th, 3.5);
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let e = RunConfig::parse("dt = 1n\nvth = 3\n").unwrap_err();
        assert!(format!("{e:#}").contains("line 2"), "{e:#}");
    }

    #[test]
    fn invalid_device_override_rejected() {
        let cfg = RunConfig::parse("v_hold = 5\n").unwrap();
        assert!(cfg.params().is_err());
    }

    #[test]
    fn every_key_settable() {
        let mut cfg = RunConfig::default();
        for k in KEYS {
            cfg.set(k, "1").unwrap();
        }
    }
}
