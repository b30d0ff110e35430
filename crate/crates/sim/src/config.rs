//! Sweep configuration: defaults, `key=value` files and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cgmimo::detect::{Detector, Tracker};
use cgmimo::phy::{FrameLayout, Modulation};
use cgmimo::precode::Precoder;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("cannot parse {key} = '{value}': {reason}")]
    Parse { key: String, value: String, reason: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Chol,
    Cg,
    Cgls,
    Neumann,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chol" | "cholesky" => Ok(Method::Chol),
            "cg" => Ok(Method::Cg),
            "cgls" => Ok(Method::Cgls),
            "neumann" => Ok(Method::Neumann),
            other => Err(format!("unknown method '{other}' (expected chol, cg, cgls or neumann)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Chol => "chol",
            Method::Cg => "cg",
            Method::Cgls => "cgls",
            Method::Neumann => "neumann",
        })
    }
}

pub fn parse_tracker(s: &str) -> Result<Tracker, String> {
    match s.to_ascii_lowercase().as_str() {
        "exact" => Ok(Tracker::Exact),
        "approx" | "approximate" => Ok(Tracker::Approx),
        other => Err(format!("unknown tracker '{other}' (expected exact or approx)")),
    }
}

fn tracker_name(t: Tracker) -> &'static str {
    match t {
        Tracker::Exact => "exact",
        Tracker::Approx => "approx",
    }
}

/// SNR grid `start:stop:step` in dB, inclusive of `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrGrid {
    pub fn single(snr_db: f64) -> Self {
        SnrGrid { start: snr_db, stop: snr_db, step: 1.0 }
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |reason: &str| Err(ConfigError::Invalid { field: "snr", reason: reason.into() });
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return bad("values must be finite");
        }
        if self.step <= 0.0 {
            return bad("step must be positive");
        }
        if self.stop < self.start {
            return bad("stop must not be below start");
        }
        if (self.stop - self.start) / self.step > 10_000.0 {
            return bad("too many grid points");
        }
        Ok(())
    }
}

impl FromStr for SnrGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"));
        match parts.as_slice() {
            [a] => Ok(SnrGrid::single(num(a)?)),
            [a, b, c] => Ok(SnrGrid { start: num(a)?, stop: num(b)?, step: num(c)? }),
            _ => Err("expected start:stop:step".into()),
        }
    }
}

impl fmt::Display for SnrGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub bs: usize,
    pub users: usize,
    pub modulation: Modulation,
    pub method: Method,
    pub iters: usize,
    pub tracker: Tracker,
    pub snr: SnrGrid,
    pub trials: usize,
    pub subcarriers: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// discarded (trial, SNR) pairs tolerated before the run fails
    pub max_breakdowns: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            bs: 128,
            users: 8,
            modulation: Modulation::Qam16,
            method: Method::Cg,
            iters: 3,
            tracker: Tracker::Approx,
            snr: SnrGrid { start: 0.0, stop: 10.0, step: 1.0 },
            trials: 100,
            subcarriers: 128,
            seed: 1,
            out: None,
            max_breakdowns: 10,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| ConfigError::Parse { key: key.into(), value: value.into(), reason: e.to_string() })
}

impl SweepConfig {
    /// Sets one field from its textual form. Keys match the long CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key.trim() {
            "bs" => self.bs = parse(key, value)?,
            "users" => self.users = parse(key, value)?,
            "mod" | "modulation" => self.modulation = parse(key, value)?,
            "method" => self.method = parse(key, value)?,
            "iters" => self.iters = parse(key, value)?,
            "tracker" => {
                self.tracker = parse_tracker(value.trim())
                    .map_err(|reason| ConfigError::Parse { key: key.into(), value: value.into(), reason })?
            },
            "snr" => self.snr = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "subcarriers" => self.subcarriers = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "max-breakdowns" | "max_breakdowns" => self.max_breakdowns = parse(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        self.apply_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, reason: &str| Err(ConfigError::Invalid { field, reason: reason.into() });
        if self.users == 0 {
            return invalid("users", "need at least one user");
        }
        if self.bs < self.users {
            return invalid("bs", "need at least as many BS antennas as users");
        }
        if self.trials == 0 {
            return invalid("trials", "need at least one trial");
        }
        if self.subcarriers == 0 {
            return invalid("subcarriers", "need at least one subcarrier");
        }
        if self.method != Method::Chol && self.iters == 0 {
            return invalid("iters", "iterative methods need at least one iteration");
        }
        self.snr.validate()?;
        FrameLayout::new(self.subcarriers, self.modulation.bits_per_symbol())
            .map_err(|e| ConfigError::Invalid { field: "subcarriers", reason: e.to_string() })?;
        Ok(())
    }

    pub fn detector(&self) -> Detector {
        detector_for(self.method, self.iters, self.tracker)
    }

    pub fn precoder(&self) -> Precoder {
        precoder_for(self.method, self.iters)
    }

    /// Settings echoed into output metadata, in a fixed order.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("bs", self.bs.to_string()),
            ("users", self.users.to_string()),
            ("mod", self.modulation.to_string()),
            ("method", self.method.to_string()),
            ("iters", self.iters.to_string()),
            ("tracker", tracker_name(self.tracker).to_string()),
            ("snr", self.snr.to_string()),
            ("trials", self.trials.to_string()),
            ("subcarriers", self.subcarriers.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

pub fn detector_for(method: Method, iters: usize, tracker: Tracker) -> Detector {
    match method {
        Method::Chol => Detector::Cholesky,
        Method::Cg => Detector::Cg { iters, tracker },
        Method::Cgls => Detector::Cgls { iters },
        Method::Neumann => Detector::Neumann { iters },
    }
}

pub fn precoder_for(method: Method, iters: usize) -> Precoder {
    match method {
        Method::Chol => Precoder::Cholesky,
        Method::Cg => Precoder::Cg { iters },
        Method::Cgls => Precoder::Cgls { iters },
        Method::Neumann => Precoder::Neumann { iters },
    }
}
