//! Run configuration: defaults, a `key = value` file, then flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use optidisc::focal::FocalModel;
use optidisc::propagation::Method;
use optidisc::readout::Sampling;
use optidisc::SystemConfig64;
use serde::{Serialize, Serializer};

use crate::error::CliError;

/// A lateral length, absolute or in units of the spot half-width `w0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Length {
    Metres(f64),
    SpotRadii(f64),
}

impl Length {
    pub fn metres(&self, w0: f64) -> f64 {
        match *self {
            Self::Metres(v) => v,
            Self::SpotRadii(v) => v * w0,
        }
    }
}

impl FromStr for Length {
    type Err = String;

    /// `130nm`, `0.2um`, `1e-7`, `1e-7m` or `w0/6`, `0.25w0`.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("cannot read length '{s}'"))
        };
        if let Some(rest) = s.strip_prefix("w0/") {
            return Ok(Self::SpotRadii(1.0 / num(rest)?));
        }
        if s == "w0" {
            return Ok(Self::SpotRadii(1.0));
        }
        if let Some(v) = s.strip_suffix("w0") {
            return Ok(Self::SpotRadii(num(v.trim_end_matches('*'))?));
        }
        for (suffix, scale) in [("nm", 1e-9), ("um", 1e-6), ("mm", 1e-3), ("m", 1.0)] {
            if let Some(v) = s.strip_suffix(suffix) {
                return Ok(Self::Metres(num(v)? * scale));
            }
        }
        Ok(Self::Metres(num(s)?))
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Metres(v) => write!(f, "{v:e}m"),
            Self::SpotRadii(v) => write!(f, "{v}w0"),
        }
    }
}

impl Serialize for Length {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub system: SystemConfig64,
    pub offset: Length,
    pub seed: u64,
    pub trials: usize,
    pub sampling: Sampling,
    pub power: f64,
    pub oversampling: f64,
    pub na_list: Vec<f64>,
    /// Pupil fill for the spot scan; zero means uniform.
    pub scan_fill: f64,
    /// Half-width of the focal map in wavelengths.
    pub focus_half_width: f64,
    pub focus_points: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig64::default(),
            offset: Length::Metres(0.0),
            seed: 1,
            trials: 10_000,
            sampling: Sampling::Independent,
            power: 1e-3,
            oversampling: 10.0,
            na_list: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95],
            scan_fill: 0.0,
            focus_half_width: 2.0,
            focus_points: 129,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot read '{value}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse(key, t))
        .collect()
}

impl RunConfig {
    /// Applies one setting. Keys use snake_case; `-` is accepted for `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('-', "_");
        let s = &mut self.system;
        let v = value.trim();
        match key.as_str() {
            "wavelength" => s.wavelength = parse::<Length>(&key, v).and_then(|l| match l {
                Length::Metres(m) => Ok(m),
                Length::SpotRadii(_) => Err(CliError::Config("wavelength must be absolute".into())),
            })?,
            "na" | "numerical_aperture" => s.numerical_aperture = parse(&key, v)?,
            "focal_model" | "model" => {
                s.focal_model = match v {
                    "vectorial" => FocalModel::Vectorial,
                    "paraxial" => FocalModel::Paraxial,
                    _ => return Err(CliError::Config(format!("{key}: expected vectorial or paraxial, got '{v}'"))),
                }
            }
            "gaussian_fill" | "fill" => s.gaussian_fill = parse(&key, v)?,
            "bits" => s.bits = parse(&key, v)?,
            "pitch_factor" => s.pitch_factor = parse(&key, v)?,
            "disc_points" => s.disc_points = parse(&key, v)?,
            "disc_half_width" => s.disc_half_width = parse(&key, v)?,
            "photons" | "n_inc" => s.photons = parse(&key, v)?,
            "focal_length" => s.focal_length = parse::<Length>(&key, v).map(|l| l.metres(f64::NAN))?,
            "detector_points" => s.detector_points = parse(&key, v)?,
            "detector_span" => s.detector_span = parse(&key, v)?,
            "method" | "propagator" => {
                s.method = match v {
                    "fraunhofer" => Method::Fraunhofer,
                    "rayleigh_sommerfeld" | "rayleigh-sommerfeld" | "rs" => Method::RayleighSommerfeld,
                    _ => return Err(CliError::Config(format!("{key}: expected fraunhofer or rayleigh_sommerfeld, got '{v}'"))),
                }
            }
            "pixel_inner" => s.pixel_inner = parse(&key, v)?,
            "pixel_outer" => s.pixel_outer = parse(&key, v)?,
            "excess_db" => s.excess_db = parse(&key, v)?,
            "squeeze_db" => s.squeeze_db = parse(&key, v)?,
            "kappa" => s.kappa = parse(&key, v)?,
            "offset" => self.offset = parse(&key, v)?,
            "seed" => self.seed = parse(&key, v)?,
            "trials" => self.trials = parse(&key, v)?,
            "sampling" => {
                self.sampling = match v {
                    "independent" => Sampling::Independent,
                    "correlated" => Sampling::Correlated,
                    _ => return Err(CliError::Config(format!("{key}: expected independent or correlated, got '{v}'"))),
                }
            }
            "power" => self.power = parse(&key, v)?,
            "oversampling" => self.oversampling = parse(&key, v)?,
            "na_list" => self.na_list = parse_list(&key, v)?,
            "scan_fill" => self.scan_fill = parse(&key, v)?,
            "focus_half_width" => self.focus_half_width = parse(&key, v)?,
            "focus_points" => self.focus_points = parse(&key, v)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(CliError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected key = value", n + 1)))?;
            self.set(key, value).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{origin}:{}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Cross-field checks, naming the first failing constraint.
    pub fn validate(&self) -> Result<(), CliError> {
        self.system.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let bad = |m: String| Err(CliError::Config(m));
        if !self.system.focal_length.is_finite() {
            return bad("focal_length must be an absolute length".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.power > 0.0 && self.oversampling > 0.0) {
            return bad("power and oversampling must be positive".into());
        }
        if !(self.scan_fill >= 0.0) {
            return bad("scan_fill must be >= 0".into());
        }
        if self.na_list.is_empty() {
            return bad("na_list is empty".into());
        }
        if self.focus_points < 3 || !(self.focus_half_width > 0.0) {
            return bad("focal map needs at least 3 points and a positive half-width".into());
        }
        Ok(())
    }
}
