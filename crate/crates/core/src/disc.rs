//! Bit sequences burnt on the disc and the π-phase masks they impose on
//! the reflected field.
//!
//! The surface starts at the "pit" level (phase 0) on the far left. Bit `k`
//! of an `n`-bit sequence sits at `(k - (n-1)/2) · pitch + offset`; a 1 toggles
//! the level there (pit ↔ hole, phase 0 ↔ π), a 0 leaves it unchanged.
//! Steps fall between samples: a sample takes the toggled level when it lies
//! strictly to the right of the transition.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldProfile, Grid1D};
use crate::scalar::Scalar;

/// Ordered bit pattern inside the focal spot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidBits("a bit sequence needs at least one bit".into()));
        }
        Ok(Self(bits))
    }

    /// All `2^n` sequences of length `n`, in binary counting order.
    pub fn all(n: usize) -> Result<Vec<Self>> {
        if n == 0 || n > 16 {
            return Err(Error::InvalidBits(format!("cannot enumerate sequences of length {n}")));
        }
        Ok((0..1usize << n)
            .map(|v| Self((0..n).map(|b| (v >> (n - 1 - b)) & 1 == 1).collect()))
            .collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    /// True for sequences equal to their own reversal.
    pub fn is_palindrome(&self) -> bool {
        *self == self.reversed()
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidBits(format!("unexpected character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits)
    }
}

impl TryFrom<String> for Bits {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Bits> for String {
    fn from(b: Bits) -> Self {
        b.to_string()
    }
}

/// Bits plus their placement on the disc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitSequence<T> {
    pub bits: Bits,
    pub pitch: T,
    pub offset: T,
}

impl<T: Scalar> BitSequence<T> {
    pub fn new(bits: Bits, pitch: T, offset: T) -> Result<Self> {
        if !(pitch > T::zero() && pitch.is_finite()) {
            return Err(Error::InvalidBits(format!("pitch must be positive, got {pitch}")));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidBits("offset must be finite".into()));
        }
        Ok(Self { bits, pitch, offset })
    }

    pub fn parse(bits: &str, pitch: T, offset: T) -> Result<Self> {
        Self::new(bits.parse()?, pitch, offset)
    }

    pub fn label(&self) -> String {
        self.bits.to_string()
    }

    /// Position of bit `k`.
    pub fn bit_position(&self, k: usize) -> T {
        let centre = T::from_usize_lossy(self.bits.len() - 1) * T::lit(0.5);
        (T::from_usize_lossy(k) - centre) * self.pitch + self.offset
    }

    /// Positions where the surface level changes, left to right.
    pub fn transitions(&self) -> Vec<T> {
        self.bits
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| self.bit_position(k))
            .collect()
    }

    /// Extent `[first, last]` of the bit positions.
    pub fn span(&self) -> (T, T) {
        (self.bit_position(0), self.bit_position(self.bits.len() - 1))
    }

    pub fn with_offset(&self, offset: T) -> Self {
        Self {
            offset,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMask<T> {
    grid: Grid1D<T>,
    phase: Vec<T>,
    transitions: Vec<T>,
}

impl<T: Scalar> PhaseMask<T> {
    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    /// Phase per sample, each 0 or π.
    pub fn phase(&self) -> &[T] {
        &self.phase
    }

    pub fn transitions(&self) -> &[T] {
        &self.transitions
    }

    /// `e^{iφ(x)}`, which is ±1.
    pub fn factor(&self, i: usize) -> Complex<T> {
        if self.phase[i] > T::zero() {
            Complex::new(-T::one(), T::zero())
        } else {
            Complex::new(T::one(), T::zero())
        }
    }

    /// CSV with header `x,phase`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,phase")?;
        for (x, p) in self.grid.points().zip(&self.phase) {
            writeln!(out, "{x:e},{p:e}")?;
        }
        Ok(())
    }
}

pub fn mask_from_bits<T: Scalar>(seq: &BitSequence<T>, grid: Grid1D<T>) -> Result<PhaseMask<T>> {
    let (first, last) = seq.span();
    if !(grid.x_min() < first && last < grid.x_max()) {
        return Err(Error::GridTooNarrow {
            grid_min: grid.x_min().as_f64(),
            grid_max: grid.x_max().as_f64(),
            span_min: first.as_f64(),
            span_max: last.as_f64(),
        });
    }
    let transitions = seq.transitions();
    let phase = grid
        .points()
        .map(|x| {
            let toggles = transitions.iter().filter(|&&t| x > t).count();
            if toggles % 2 == 1 {
                T::PI()
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(PhaseMask {
        grid,
        phase,
        transitions,
    })
}

/// Field reflected by the masked surface.
pub fn reflect<T: Scalar>(incident: &FieldProfile<T>, mask: &PhaseMask<T>) -> Result<FieldProfile<T>> {
    if !incident.grid().same_as(&mask.grid) {
        return Err(Error::GridMismatch);
    }
    let amplitude = incident
        .amplitude()
        .iter()
        .enumerate()
        .map(|(i, &a)| a * mask.factor(i))
        .collect();
    FieldProfile::new(mask.grid, amplitude)
}
