//! Pipeline configuration and its flat `key = value` file format.
//!
//! ```text
//! # comments start with '#'
//! eta = 0.125
//! bin_step = pi/720
//! detail_gain = 1.5,1.0
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so
//! `parse(serialize(c)) == c` holds bit for bit.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::transmission::TransmissionParams;

/// Largest accepted number of pyramid reduction steps.
pub const MAX_LEVELS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub rho_dark: usize,
    pub rho_wgif: usize,
    pub lambda: f64,
    pub bin_step: f64,
    pub nu: usize,
    pub eta: f64,
    pub levels: usize,
    pub r_min: f64,
    pub t_l: f64,
    pub detail_gain: Vec<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            rho_dark: 7,
            rho_wgif: 25,
            lambda: 0.001,
            bin_step: PI / 720.0,
            nu: 200,
            eta: 0.25,
            levels: 1,
            r_min: 0.02,
            t_l: 0.1,
            detail_gain: vec![1.0],
        }
    }
}

/// Key, provenance note.
const KEYS: [(&str, &str); 10] = [
    (
        "rho_dark",
        "dark channel window radius (method default 7, 15x15 window)",
    ),
    (
        "rho_wgif",
        "guided filter window radius (method default 25)",
    ),
    (
        "lambda",
        "guided filter regularization (method default 0.001)",
    ),
    (
        "bin_step",
        "haze-line bin size in radians, must divide pi (method default pi/720)",
    ),
    ("nu", "maximum haze-line subset size (method default 200)"),
    (
        "eta",
        "transmission floor at restoration (method default 1/4; 1/8 for heavy haze)",
    ),
    ("levels", "pyramid reduction steps (method default 1)"),
    (
        "r_min",
        "distance to airlight below which haze-line averaging is skipped (implementation choice)",
    ),
    (
        "t_l",
        "single-scale baseline transmission floor (method default 0.1)",
    ),
    (
        "detail_gain",
        "per-level Laplacian multipliers, missing levels use 1.0 (implementation choice)",
    ),
];

impl PipelineConfig {
    pub fn transmission_params(&self) -> TransmissionParams {
        TransmissionParams {
            rho_dark: self.rho_dark,
            rho_wgif: self.rho_wgif,
            lambda: self.lambda,
            bin_step: self.bin_step,
            nu: self.nu,
            r_min: self.r_min,
        }
    }

    /// Gain of Laplacian level `l`; levels beyond the list use 1.0.
    pub fn gain(&self, l: usize) -> f64 {
        self.detail_gain.get(l).copied().unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho_dark == 0 {
            return Err(Error::param("rho_dark", "must be at least 1"));
        }
        if self.rho_wgif == 0 {
            return Err(Error::param("rho_wgif", "must be at least 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::param(
                "lambda",
                format!("{} must be finite and >= 0", self.lambda),
            ));
        }
        let ratio = PI / self.bin_step;
        if !(self.bin_step > 0.0 && self.bin_step <= PI)
            || (ratio - ratio.round()).abs() > 1e-6 * ratio.round().max(1.0)
        {
            return Err(Error::param(
                "bin_step",
                format!("{} must lie in (0, pi] and divide pi", self.bin_step),
            ));
        }
        if self.nu == 0 {
            return Err(Error::param("nu", "must be at least 1"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::param(
                "eta",
                format!("{} must lie in (0, 1]", self.eta),
            ));
        }
        if !(1..=MAX_LEVELS).contains(&self.levels) {
            return Err(Error::param(
                "levels",
                format!("{} must lie in 1..={MAX_LEVELS}", self.levels),
            ));
        }
        if !(self.r_min >= 0.0 && self.r_min.is_finite()) {
            return Err(Error::param(
                "r_min",
                format!("{} must be finite and >= 0", self.r_min),
            ));
        }
        if !(self.t_l > 0.0 && self.t_l <= 1.0) {
            return Err(Error::param(
                "t_l",
                format!("{} must lie in (0, 1]", self.t_l),
            ));
        }
        if self.detail_gain.is_empty()
            || self
                .detail_gain
                .iter()
                .any(|g| !(*g > 0.0 && g.is_finite()))
        {
            return Err(Error::param(
                "detail_gain",
                "needs at least one finite gain, all > 0",
            ));
        }
        Ok(())
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from("# msdehaze pipeline configuration\n");
        for (key, note) in KEYS {
            let value = match key {
                "rho_dark" => self.rho_dark.to_string(),
                "rho_wgif" => self.rho_wgif.to_string(),
                "lambda" => fmt_f64(self.lambda),
                "bin_step" => fmt_f64(self.bin_step),
                "nu" => self.nu.to_string(),
                "eta" => fmt_f64(self.eta),
                "levels" => self.levels.to_string(),
                "r_min" => fmt_f64(self.r_min),
                "t_l" => fmt_f64(self.t_l),
                "detail_gain" => self
                    .detail_gain
                    .iter()
                    .map(|g| fmt_f64(*g))
                    .collect::<Vec<_>>()
                    .join(","),
                _ => unreachable!(),
            };
            let _ = writeln!(out, "# {note}\n{key} = {value}");
        }
        out
    }

    /// Parses a config file on top of the defaults, then validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.merge_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies every assignment in `text` to `self`, without validating.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| Error::Config {
                line: idx + 1,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| bad(e.to_string()))?;
        }
        Ok(())
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "rho_dark" => self.rho_dark = parse_usize(key, value)?,
            "rho_wgif" => self.rho_wgif = parse_usize(key, value)?,
            "lambda" => self.lambda = parse_f64(key, value)?,
            "bin_step" => self.bin_step = parse_angle(value)?,
            "nu" => self.nu = parse_usize(key, value)?,
            "eta" => self.eta = parse_f64(key, value)?,
            "levels" => self.levels = parse_usize(key, value)?,
            "r_min" => self.r_min = parse_f64(key, value)?,
            "t_l" => self.t_l = parse_f64(key, value)?,
            "detail_gain" => self.detail_gain = parse_list(value)?,
            other => {
                return Err(Error::param("config", format!("unknown key `{other}`")));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

fn fmt_f64(v: f64) -> String {
    let s = format!("{v}");
    if s.contains(['.', 'e', 'N', 'i']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| Error::InvalidParameter {
        name: static_key(key),
        reason: format!("`{value}` is not a non-negative integer"),
    })
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::InvalidParameter {
            name: static_key(key),
            reason: format!("`{value}` is not a finite number"),
        }),
    }
}

/// Accepts a plain number or `pi/N`.
pub fn parse_angle(value: &str) -> Result<f64> {
    let v = value.trim();
    if let Some(den) = v.strip_prefix("pi/") {
        let n: f64 = parse_f64("bin_step", den.trim())?;
        if n > 0.0 {
            return Ok(PI / n);
        }
        return Err(Error::param(
            "bin_step",
            format!("`{value}` has a non-positive divisor"),
        ));
    }
    parse_f64("bin_step", v)
}

/// Comma-separated positive numbers.
pub fn parse_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| parse_f64("detail_gain", s.trim()))
        .collect()
}

fn static_key(key: &str) -> &'static str {
    KEYS.iter()
        .map(|(k, _)| *k)
        .find(|k| *k == key)
        .unwrap_or("config")
}
