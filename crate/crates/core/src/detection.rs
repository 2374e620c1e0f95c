//! Five-pixel stripe detector, matched gain sets and the signal matrix.
//!
//! A gain set `σ` for sequence `j` is symmetric (`σ1 = σ5`, `σ2 = σ4`), has
//! `σ3 = -σ1/2` and `σ1 = 1`, and cancels the mean signal of `j`:
//! `Σ σk Nk(j) = 0`. The signal of sequence `i` under gains `j` is
//! `S_i(j) = Σ σk(j) Nk(i)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::disc::Bits;
use crate::error::{Error, Result};
use crate::field::FieldProfile;
use crate::propagation::{relative_intensity_distance, FarFieldSet};
use crate::scalar::Scalar;

pub const PIXELS: usize = 5;

/// Tolerance for treating mirror-paired far fields as one profile.
pub const DEFAULT_MERGE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelArray<T> {
    boundaries: [T; PIXELS + 1],
}

impl<T: Scalar> PixelArray<T> {
    pub fn new(boundaries: [T; PIXELS + 1]) -> Result<Self> {
        if boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidPixels("boundaries must be finite".into()));
        }
        if boundaries.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPixels(format!(
                "boundaries must increase strictly: {boundaries:?}"
            )));
        }
        Ok(Self { boundaries })
    }

    /// Five equal stripes across `[-radius, radius]`.
    pub fn equal(radius: T) -> Result<Self> {
        let w = T::lit(2.0) * radius / T::lit(PIXELS as f64);
        Self::new(std::array::from_fn(|k| -radius + w * T::from_usize_lossy(k)))
    }

    /// Mirror-symmetric stripes: the centre pixel spans `±inner·radius`,
    /// pixels 2 and 4 reach `±outer·radius`, pixels 1 and 5 the rim.
    pub fn symmetric(radius: T, inner: T, outer: T) -> Result<Self> {
        if !(T::zero() < inner && inner < outer && outer < T::one()) {
            return Err(Error::InvalidPixels(format!(
                "need 0 < inner < outer < 1, got inner {inner}, outer {outer}"
            )));
        }
        Self::new([
            -radius,
            -outer * radius,
            -inner * radius,
            inner * radius,
            outer * radius,
            radius,
        ])
    }

    pub fn boundaries(&self) -> &[T; PIXELS + 1] {
        &self.boundaries
    }

    /// Pixel containing `x`, if any. The right edge belongs to pixel 5.
    pub fn pixel_of(&self, x: T) -> Option<usize> {
        let b = &self.boundaries;
        if x < b[0] || x > b[PIXELS] {
            return None;
        }
        Some((1..PIXELS).take_while(|&k| x >= b[k]).count())
    }

    /// True when the stripes cover `[-radius, radius]`.
    pub fn covers(&self, radius: T) -> bool {
        self.boundaries[0] <= -radius && self.boundaries[PIXELS] >= radius
    }
}

pub type PixelCounts<T> = [T; PIXELS];

/// Mean photon number on each pixel.
pub fn pixel_photon_numbers<T: Scalar>(
    u_det: &FieldProfile<T>,
    array: &PixelArray<T>,
) -> Result<PixelCounts<T>> {
    let b = array.boundaries();
    let mut out = [T::zero(); PIXELS];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = u_det.energy_between(b[k], b[k + 1])?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSet<T> {
    pub target: String,
    pub gains: [T; PIXELS],
}

impl<T: Scalar> GainSet<T> {
    pub fn unit(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            gains: [T::one(); PIXELS],
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            target: self.target.clone(),
            gains: self.gains.map(|g| g * c),
        }
    }

    /// Signal relative to `Σ |σk| Nk`.
    pub fn relative_residual(&self, n: &PixelCounts<T>) -> T {
        let scale = self
            .gains
            .iter()
            .zip(n)
            .fold(T::zero(), |a, (g, &nk)| a + g.abs() * nk);
        signal(n, self).abs() / scale
    }
}

/// Gains cancelling the mean signal of the profile with pixel counts `n`.
pub fn solve_gains<T: Scalar>(target: impl Into<String>, n: &PixelCounts<T>) -> Result<GainSet<T>> {
    let side = n[1] + n[3];
    if !(side > T::zero()) {
        return Err(Error::SingularGeometry);
    }
    let half = T::lit(0.5);
    let s2 = -(n[0] + n[4] - half * n[2]) / side;
    Ok(GainSet {
        target: target.into(),
        gains: [T::one(), s2, -half, s2, T::one()],
    })
}

pub fn signal<T: Scalar>(n: &PixelCounts<T>, g: &GainSet<T>) -> T {
    n.iter().zip(&g.gains).fold(T::zero(), |a, (&nk, &s)| a + s * nk)
}

/// One sequence (or merged mirror pair) as seen by the detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedProfile<T> {
    pub label: String,
    pub members: Vec<Bits>,
    pub counts: PixelCounts<T>,
}

/// `S_i(j)`: rows are sequences on the disc, columns gain sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalMatrix<T> {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<T>>,
    pub gains: Vec<GainSet<T>>,
    pub rows: Vec<DetectedProfile<T>>,
    pub offset: T,
    pub boundaries: [T; PIXELS + 1],
}

impl<T: Scalar> SignalMatrix<T> {
    pub fn from_profiles(
        rows: Vec<DetectedProfile<T>>,
        offset: T,
        array: &PixelArray<T>,
    ) -> Result<Self> {
        let gains = rows
            .iter()
            .map(|r| solve_gains(r.label.clone(), &r.counts))
            .collect::<Result<Vec<_>>>()?;
        let entries = rows
            .iter()
            .map(|r| gains.iter().map(|g| signal(&r.counts, g)).collect())
            .collect();
        Ok(Self {
            labels: rows.iter().map(|r| r.label.clone()).collect(),
            entries,
            gains,
            rows,
            offset,
            boundaries: *array.boundaries(),
        })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn get(&self, row: &str, column: &str) -> Option<T> {
        Some(self.entries[self.index_of(row)?][self.index_of(column)?])
    }

    pub fn max_abs(&self) -> T {
        self.entries
            .iter()
            .flatten()
            .fold(T::zero(), |a, v| a.max(v.abs()))
    }

    /// Columns of row `i` whose entry is within `tol` of zero.
    pub fn zeros_in_row(&self, i: usize, tol: T) -> Vec<usize> {
        (0..self.size())
            .filter(|&j| self.entries[i][j].abs() <= tol)
            .collect()
    }

    /// Each column multiplied by its own factor, for display against
    /// externally normalized tables.
    pub fn scale_columns(&self, factors: &[T]) -> Result<Self> {
        if factors.len() != self.size() {
            return Err(Error::InvalidParameter(format!(
                "{} column factors for {} columns",
                factors.len(),
                self.size()
            )));
        }
        let mut out = self.clone();
        for row in &mut out.entries {
            for (v, &c) in row.iter_mut().zip(factors) {
                *v *= c;
            }
        }
        for (g, &c) in out.gains.iter_mut().zip(factors) {
            *g = g.scaled(c);
        }
        Ok(out)
    }

    /// CSV laid out as rows `i` (disc) by columns `j` (gain set).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "sequence,{}", self.labels.join(","))?;
        for (label, row) in self.labels.iter().zip(&self.entries) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{label},{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn merged_label(a: &Bits, b: &Bits) -> String {
    format!("{a}/{b}")
}

/// Pixel counts of every far field, one row per sequence.
pub fn detect_all<T: Scalar>(
    set: &FarFieldSet<T>,
    array: &PixelArray<T>,
) -> Result<Vec<DetectedProfile<T>>> {
    set.profiles
        .iter()
        .map(|(seq, p)| {
            Ok(DetectedProfile {
                label: seq.label(),
                members: vec![seq.bits.clone()],
                counts: pixel_photon_numbers(p, array)?,
            })
        })
        .collect()
}

/// Pixel counts with mirror pairs gathered into one row, ordered by the
/// smaller member. The pair's profiles must agree within `tolerance`
/// (relative intensity distance); their counts are averaged.
pub fn detect_merged<T: Scalar>(
    set: &FarFieldSet<T>,
    array: &PixelArray<T>,
    tolerance: T,
) -> Result<Vec<DetectedProfile<T>>> {
    let mut rows = Vec::new();
    for (seq, p) in &set.profiles {
        let bits = &seq.bits;
        let rev = bits.reversed();
        if rev < *bits {
            continue;
        }
        let counts = pixel_photon_numbers(p, array)?;
        if rev == *bits {
            rows.push(DetectedProfile {
                label: bits.to_string(),
                members: vec![bits.clone()],
                counts,
            });
            continue;
        }
        let other = set
            .get(&rev)
            .ok_or_else(|| Error::InvalidBits(format!("no far field for {rev}")))?;
        let distance = relative_intensity_distance(p, other)?;
        if !(distance <= tolerance) {
            return Err(Error::DegenerateMismatch {
                a: bits.to_string(),
                b: rev.to_string(),
                distance: distance.as_f64(),
            });
        }
        let other_counts = pixel_photon_numbers(other, array)?;
        let half = T::lit(0.5);
        rows.push(DetectedProfile {
            label: merged_label(bits, &rev),
            members: vec![bits.clone(), rev.clone()],
            counts: std::array::from_fn(|k| half * (counts[k] + other_counts[k])),
        });
    }
    Ok(rows)
}

/// Signal matrix of a far-field set; mirror pairs are gathered when `merge`.
pub fn build_signal_matrix<T: Scalar>(
    set: &FarFieldSet<T>,
    array: &PixelArray<T>,
    merge: bool,
) -> Result<SignalMatrix<T>> {
    let rows = if merge {
        detect_merged(set, array, T::lit(DEFAULT_MERGE_TOLERANCE))?
    } else {
        detect_all(set, array)?
    };
    SignalMatrix::from_profiles(rows, set.offset, array)
}
