//! Decision rule, Monte Carlo error rates and data-rate estimate.
//!
//! A sequence `j` stays a candidate when `|S(j)| <= κ σ(j)`. One candidate
//! is a decision, several are ambiguous, none is a failure to read.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::PIXELS;
use crate::error::{Error, Result};
use crate::noise::NoiseTable;
use crate::scalar::Scalar;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_KAPPA: f64 = 3.0;

/// Two-sided 95% normal quantile used for Wilson intervals.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "candidates", rename_all = "snake_case")]
pub enum ReadOutcome {
    Decided(usize),
    Ambiguous(Vec<usize>),
    None,
}

impl ReadOutcome {
    pub fn candidates(&self) -> Vec<usize> {
        match self {
            Self::Decided(j) => vec![*j],
            Self::Ambiguous(c) => c.clone(),
            Self::None => Vec::new(),
        }
    }
}

pub fn decide<T: Scalar>(signals: &[T], sigmas: &[T], kappa: T) -> Result<ReadOutcome> {
    if signals.len() != sigmas.len() {
        return Err(Error::InvalidParameter(format!(
            "{} signals but {} standard deviations",
            signals.len(),
            sigmas.len()
        )));
    }
    let c: Vec<usize> = signals
        .iter()
        .zip(sigmas)
        .enumerate()
        .filter(|(_, (s, sd))| s.abs() <= kappa * **sd)
        .map(|(j, _)| j)
        .collect();
    Ok(match c.len() {
        0 => ReadOutcome::None,
        1 => ReadOutcome::Decided(c[0]),
        _ => ReadOutcome::Ambiguous(c),
    })
}

/// Candidates on the noise-free means of disc sequence `i`.
pub fn mean_candidates<T: Scalar>(table: &NoiseTable<T>, i: usize, kappa: T) -> Result<Vec<usize>> {
    Ok(decide(&table.means(i), &table.sigmas(i), kappa)?.candidates())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Each signal drawn on its own from `N(S, σ²)`.
    Independent,
    /// Pixel counts drawn jointly, then combined with every gain set.
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadConfig {
    pub kappa: f64,
    pub trials: usize,
    pub seed: u64,
    pub sampling: Sampling,
}

impl Default for ReadConfig {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
            trials: 20_000,
            seed: 1,
            sampling: Sampling::Independent,
        }
    }
}

impl ReadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {}", self.kappa)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("need at least one trial".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

/// Wilson score interval at 95% for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> Interval {
    if n == 0 {
        return Interval { low: 0.0, high: 1.0 };
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        low: (centre - half).max(0.0),
        high: (centre + half).min(1.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRates {
    pub disc_sequence: String,
    pub trials: usize,
    pub correct: usize,
    /// Decided on a different sequence.
    pub errors: usize,
    pub ambiguous: usize,
    pub none: usize,
    pub error_rate: f64,
    pub ambiguity_rate: f64,
    pub none_rate: f64,
    /// Anything but a correct decision.
    pub failure_rate: f64,
    pub error_ci: Interval,
    pub ambiguity_ci: Interval,
    pub failure_ci: Interval,
}

impl SequenceRates {
    fn new(disc_sequence: String, trials: usize, tally: Tally) -> Self {
        let rate = |k: usize| k as f64 / trials as f64;
        let failures = trials - tally.correct;
        Self {
            disc_sequence,
            trials,
            correct: tally.correct,
            errors: tally.errors,
            ambiguous: tally.ambiguous,
            none: tally.none,
            error_rate: rate(tally.errors),
            ambiguity_rate: rate(tally.ambiguous),
            none_rate: rate(tally.none),
            failure_rate: rate(failures),
            error_ci: wilson_interval(tally.errors, trials),
            ambiguity_ci: wilson_interval(tally.ambiguous, trials),
            failure_ci: wilson_interval(failures, trials),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateReport {
    pub config: ReadConfig,
    pub excess_factor: f64,
    pub squeeze_db: f64,
    pub photons: f64,
    pub sequences: Vec<SequenceRates>,
}

impl ErrorRateReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn mean_failure_rate(&self) -> f64 {
        self.sequences.iter().map(|s| s.failure_rate).sum::<f64>() / self.sequences.len() as f64
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    correct: usize,
    errors: usize,
    ambiguous: usize,
    none: usize,
}

impl Tally {
    fn add(mut self, o: &ReadOutcome, truth: usize) -> Self {
        match o {
            ReadOutcome::Decided(j) if *j == truth => self.correct += 1,
            ReadOutcome::Decided(_) => self.errors += 1,
            ReadOutcome::Ambiguous(_) => self.ambiguous += 1,
            ReadOutcome::None => self.none += 1,
        }
        self
    }

    fn merge(self, o: Self) -> Self {
        Self {
            correct: self.correct + o.correct,
            errors: self.errors + o.errors,
            ambiguous: self.ambiguous + o.ambiguous,
            none: self.none + o.none,
        }
    }
}

/// Stream for one trial: the same `(seed, row, trial)` always yields the
/// same draws, so runs with different noise settings are paired.
fn trial_rng(seed: u64, row: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((row as u64) << 40) ^ trial as u64);
    rng
}

/// Lower-triangular factor of a positive semidefinite matrix; directions
/// with non-positive pivots are dropped.
fn cholesky(a: &[[f64; PIXELS]; PIXELS]) -> [[f64; PIXELS]; PIXELS] {
    let mut l = [[0.0; PIXELS]; PIXELS];
    for i in 0..PIXELS {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (a[i][i] - s).max(0.0).sqrt();
            } else if l[j][j] > 0.0 {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

pub fn monte_carlo_error_rate<T: Scalar>(
    table: &NoiseTable<T>,
    config: &ReadConfig,
) -> Result<ErrorRateReport> {
    config.validate()?;
    let n = table.size();
    let sequences = (0..n)
        .map(|i| {
            let means: Vec<f64> = table.means(i).iter().map(|v| v.as_f64()).collect();
            let sigmas: Vec<f64> = table.sigmas(i).iter().map(|v| v.as_f64()).collect();
            let counts: Vec<f64> = table.counts(i).iter().map(|v| v.as_f64()).collect();
            let gains: Vec<[f64; PIXELS]> = table
                .gains
                .iter()
                .map(|g| g.gains.map(|s| s.as_f64()))
                .collect();
            let factor = match config.sampling {
                Sampling::Independent => None,
                Sampling::Correlated => {
                    let cov = table.pixel_covariance(i)?;
                    Some(cholesky(&cov.map(|r| r.map(|v| v.as_f64()))))
                }
            };
            let tally = (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(config.seed, i, t);
                    let signals: Vec<f64> = match &factor {
                        None => means
                            .iter()
                            .zip(&sigmas)
                            .map(|(m, s)| {
                                let z: f64 = StandardNormal.sample(&mut rng);
                                m + s * z
                            })
                            .collect(),
                        Some(l) => {
                            let z: [f64; PIXELS] =
                                std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                            let sample: [f64; PIXELS] = std::array::from_fn(|k| {
                                counts[k] + (0..=k).map(|m| l[k][m] * z[m]).sum::<f64>()
                            });
                            gains
                                .iter()
                                .map(|g| g.iter().zip(&sample).map(|(a, b)| a * b).sum())
                                .collect()
                        }
                    };
                    decide(&signals, &sigmas, config.kappa).map(|o| (o, i))
                })
                .try_fold(Tally::default, |acc, r| r.map(|(o, i)| acc.add(&o, i)))
                .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
            Ok(SequenceRates::new(table.labels[i].clone(), config.trials, tally))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorRateReport {
        config: *config,
        excess_factor: table.params.excess_factor.as_f64(),
        squeeze_db: table.params.squeeze_db.as_f64(),
        photons: table.params.photons.as_f64(),
        sequences,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataRate<T> {
    pub power: T,
    pub wavelength: T,
    pub photons_per_bit: T,
    pub oversampling: T,
    /// Photons per second `P λ / (h c)`.
    pub photon_flux: T,
    pub bits_per_second: T,
}

/// Read-out rate when each bit uses `photons_per_bit` photons, `oversampling`
/// times over.
pub fn data_rate_estimate<T: Scalar>(
    power: T,
    wavelength: T,
    photons_per_bit: T,
    oversampling: T,
) -> Result<DataRate<T>> {
    for (name, v) in [
        ("power", power),
        ("wavelength", wavelength),
        ("photons per bit", photons_per_bit),
        ("oversampling", oversampling),
    ] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    let photon_flux = power * wavelength / T::lit(PLANCK * SPEED_OF_LIGHT);
    Ok(DataRate {
        power,
        wavelength,
        photons_per_bit,
        oversampling,
        photon_flux,
        bits_per_second: photon_flux / (photons_per_bit * oversampling),
    })
}
