//! Propagation of the reflected disc-plane field to the detector behind the
//! lens, apertured by the lens diameter.
//!
//! The detector sees the far field of the disc plane. With `r0 = √(f² + ξ²)`
//! and direction sine `s = ξ / r0`,
//!
//! ```text
//! U(ξ) = e^{i(k r0 - π/4)} (f / r0) √(k / 2π r0) ∫ u(x) e^{-i k x s} dx
//! ```
//!
//! which is the stationary limit of the first Rayleigh–Sommerfeld integral
//! in one transverse dimension,
//!
//! ```text
//! U(ξ) = ∫ u(x) (i k f / 2r) H1(k r) dx,   r = √(f² + (ξ - x)²),
//! ```
//!
//! evaluated directly by the `RayleighSommerfeld` method.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disc::{mask_from_bits, reflect, BitSequence, Bits};
use crate::error::{Error, Result};
use crate::field::{FieldProfile, Grid1D};
use crate::scalar::Scalar;

pub const DEFAULT_FOCAL_LENGTH: f64 = 4e-3;
pub const DEFAULT_DETECTOR_POINTS: usize = 1024;
/// Detector window width in units of the lens diameter.
pub const DEFAULT_DETECTOR_SPAN: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fraunhofer,
    RayleighSommerfeld,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationSpec<T> {
    pub wavelength: T,
    pub focal_length: T,
    pub lens_diameter: T,
    pub method: Method,
    pub detector_points: usize,
    pub detector_span: T,
}

impl<T: Scalar> PropagationSpec<T> {
    /// Lens of focal length `f` whose marginal ray has direction sine `na`.
    pub fn for_aperture(wavelength: T, numerical_aperture: T, focal_length: T) -> Result<Self> {
        let spec = Self {
            wavelength,
            focal_length,
            lens_diameter: T::lit(2.0) * focal_length * numerical_aperture.asin().tan(),
            method: Method::Fraunhofer,
            detector_points: DEFAULT_DETECTOR_POINTS,
            detector_span: T::lit(DEFAULT_DETECTOR_SPAN),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPropagation(m));
        if !(self.wavelength > T::zero() && self.wavelength.is_finite()) {
            return bad(format!("wavelength must be positive, got {}", self.wavelength));
        }
        if !(self.focal_length / self.wavelength > T::lit(1e3)) {
            return bad(format!(
                "focal length {} must exceed 1000 wavelengths",
                self.focal_length
            ));
        }
        if !(self.lens_diameter > T::zero() && self.lens_diameter.is_finite()) {
            return bad(format!("lens diameter must be positive, got {}", self.lens_diameter));
        }
        if self.detector_points < 2 {
            return bad("detector grid needs at least 2 points".into());
        }
        if !(self.detector_span >= T::one()) {
            return bad(format!(
                "detector window ({} lens diameters) must cover the aperture",
                self.detector_span
            ));
        }
        Ok(())
    }

    /// Numerical aperture implied by the lens geometry.
    pub fn numerical_aperture(&self) -> T {
        (self.lens_diameter / (T::lit(2.0) * self.focal_length)).atan().sin()
    }

    /// Checks the lens against the focusing aperture, to 1e-6 relative.
    pub fn check_aperture(&self, numerical_aperture: T) -> Result<()> {
        let na = self.numerical_aperture();
        if ((na - numerical_aperture) / numerical_aperture).abs() > T::lit(1e-6) {
            return Err(Error::InvalidPropagation(format!(
                "lens geometry gives NA {na}, focusing uses {numerical_aperture}"
            )));
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> T {
        T::TAU() / self.wavelength
    }

    pub fn aperture_radius(&self) -> T {
        self.lens_diameter * T::lit(0.5)
    }

    pub fn detector_grid(&self) -> Result<Grid1D<T>> {
        Grid1D::symmetric(
            self.lens_diameter * self.detector_span * T::lit(0.5),
            self.detector_points,
        )
    }
}

/// Apertured detector-plane field on the default detector grid.
pub fn to_detector_plane<T: Scalar>(
    u_disc: &FieldProfile<T>,
    spec: &PropagationSpec<T>,
) -> Result<FieldProfile<T>> {
    to_detector_grid(u_disc, spec, spec.detector_grid()?)
}

/// Apertured detector-plane field on a caller-chosen grid.
pub fn to_detector_grid<T: Scalar>(
    u_disc: &FieldProfile<T>,
    spec: &PropagationSpec<T>,
    grid: Grid1D<T>,
) -> Result<FieldProfile<T>> {
    spec.validate()?;
    let half = spec.aperture_radius();
    if !(grid.x_min() <= -half && grid.x_max() >= half) {
        return Err(Error::GridTooNarrow {
            grid_min: grid.x_min().as_f64(),
            grid_max: grid.x_max().as_f64(),
            span_min: (-half).as_f64(),
            span_max: half.as_f64(),
        });
    }
    propagate(u_disc, spec, grid, Some(half))
}

/// Far field without the lens aperture, on an arbitrary grid.
pub fn unapertured_far_field<T: Scalar>(
    u_disc: &FieldProfile<T>,
    spec: &PropagationSpec<T>,
    grid: Grid1D<T>,
) -> Result<FieldProfile<T>> {
    spec.validate()?;
    propagate(u_disc, spec, grid, None)
}

fn propagate<T: Scalar>(
    u: &FieldProfile<T>,
    spec: &PropagationSpec<T>,
    grid: Grid1D<T>,
    aperture: Option<T>,
) -> Result<FieldProfile<T>> {
    let weights = u.grid().trapezoid_weights();
    let sources: Vec<(T, Complex<T>)> = u
        .grid()
        .points()
        .zip(u.amplitude())
        .zip(&weights)
        .filter(|((_, a), _)| a.norm_sqr() > T::zero())
        .map(|((x, &a), &w)| (x, a * w))
        .collect();
    let k = spec.wavenumber();
    let f = spec.focal_length;
    let xi: Vec<T> = grid.points().collect();
    let amplitude = xi
        .par_iter()
        .map(|&xi| {
            if aperture.is_some_and(|h| xi.abs() > h) {
                return Complex::new(T::zero(), T::zero());
            }
            match spec.method {
                Method::Fraunhofer => fraunhofer_point(&sources, k, f, xi),
                Method::RayleighSommerfeld => rayleigh_sommerfeld_point(&sources, k, f, xi),
            }
        })
        .collect();
    FieldProfile::new(grid, amplitude)
}

fn fraunhofer_point<T: Scalar>(sources: &[(T, Complex<T>)], k: T, f: T, xi: T) -> Complex<T> {
    let r0 = f.hypot(xi);
    let ks = k * xi / r0;
    let mut acc = Complex::new(T::zero(), T::zero());
    for &(x, a) in sources {
        let (s, c) = (ks * x).sin_cos();
        acc += a * Complex::new(c, -s);
    }
    let scale = (f / r0) * (k / (T::TAU() * r0)).sqrt();
    acc * Complex::from_polar(scale, k * r0 - T::FRAC_PI_4())
}

fn rayleigh_sommerfeld_point<T: Scalar>(
    sources: &[(T, Complex<T>)],
    k: T,
    f: T,
    xi: T,
) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    let three_eighths = T::lit(0.375);
    for &(x, a) in sources {
        let r = f.hypot(xi - x);
        let z = k * r;
        // H1(z) ≈ √(2/πz) e^{i(z - 3π/4)} (1 + 3i/8z), multiplied by i k f / 2r
        let mag = (f / r) * (k / (T::TAU() * r)).sqrt();
        let kernel = Complex::from_polar(mag, z - T::FRAC_PI_4())
            * Complex::new(T::one(), three_eighths / z);
        acc += a * kernel;
    }
    acc
}

/// Far fields of every `n`-bit sequence for one incident profile.
#[derive(Debug, Clone)]
pub struct FarFieldSet<T> {
    pub offset: T,
    pub profiles: Vec<(BitSequence<T>, FieldProfile<T>)>,
}

impl<T: Scalar> FarFieldSet<T> {
    pub fn get(&self, bits: &Bits) -> Option<&FieldProfile<T>> {
        self.profiles
            .iter()
            .find(|(s, _)| &s.bits == bits)
            .map(|(_, p)| p)
    }

    pub fn labels(&self) -> Vec<String> {
        self.profiles.iter().map(|(s, _)| s.label()).collect()
    }

    /// CSV with header `sequence,x,re,im,intensity`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "sequence,x,re,im,intensity")?;
        for (seq, p) in &self.profiles {
            let label = seq.label();
            for (x, a) in p.grid().points().zip(p.amplitude()) {
                writeln!(out, "{label},{x:e},{:e},{:e},{:e}", a.re, a.im, a.norm_sqr())?;
            }
        }
        Ok(())
    }
}

/// Reflects `incident` off every sequence of `template.bits.len()` bits at
/// the template pitch and the given offset, then propagates each.
pub fn far_fields<T: Scalar>(
    incident: &FieldProfile<T>,
    template: &BitSequence<T>,
    offset: T,
    spec: &PropagationSpec<T>,
) -> Result<FarFieldSet<T>> {
    let grid = spec.detector_grid()?;
    let profiles = Bits::all(template.bits.len())?
        .into_par_iter()
        .map(|bits| {
            let seq = BitSequence::new(bits, template.pitch, offset)?;
            let mask = mask_from_bits(&seq, *incident.grid())?;
            let reflected = reflect(incident, &mask)?;
            let far = to_detector_grid(&reflected, spec, grid)?;
            Ok((seq, far))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FarFieldSet { offset, profiles })
}

/// `‖I_a - I_b‖₂` between two intensity profiles on one grid.
pub fn intensity_distance<T: Scalar>(a: &FieldProfile<T>, b: &FieldProfile<T>) -> Result<T> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::GridMismatch);
    }
    let diff: Vec<T> = a
        .amplitude()
        .iter()
        .zip(b.amplitude())
        .map(|(p, q)| {
            let d = p.norm_sqr() - q.norm_sqr();
            d * d
        })
        .collect();
    Ok(crate::field::trapezoid(&diff, a.grid().dx()).sqrt())
}

/// `‖I_a - I_b‖₂ / ‖I_a‖₂`.
pub fn relative_intensity_distance<T: Scalar>(
    a: &FieldProfile<T>,
    b: &FieldProfile<T>,
) -> Result<T> {
    let zero = FieldProfile::zeros(*a.grid());
    let norm = intensity_distance(a, &zero)?;
    if !(norm > T::zero()) {
        return Err(Error::ZeroEnergy);
    }
    Ok(intensity_distance(a, b)? / norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSplit<T> {
    pub pair: (String, String),
    pub distance: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileShift<T> {
    pub sequence: String,
    pub distance: T,
}

/// How a lateral disc offset separates mirror-paired far fields and moves
/// the self-mirrored ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracySplit<T> {
    pub offset: T,
    /// Intensity distance between each sequence and its reversal, at `offset`.
    pub pairs: Vec<PairSplit<T>>,
    /// Intensity distance of each palindromic sequence between offset 0 and
    /// `offset`.
    pub shifts: Vec<ProfileShift<T>>,
}

impl<T: Scalar> DegeneracySplit<T> {
    pub fn min_split(&self) -> T {
        self.pairs
            .iter()
            .map(|p| p.distance)
            .fold(T::infinity(), T::min)
    }

    pub fn max_shift(&self) -> T {
        self.shifts
            .iter()
            .map(|p| p.distance)
            .fold(T::zero(), T::max)
    }

    /// True when every pair separates by more than `threshold` and by more
    /// than any unpaired profile moved.
    pub fn resolved(&self, threshold: T) -> bool {
        let split = self.min_split();
        split > threshold && split > self.max_shift()
    }
}

pub fn degeneracy_split<T: Scalar>(
    incident: &FieldProfile<T>,
    template: &BitSequence<T>,
    offset: T,
    spec: &PropagationSpec<T>,
) -> Result<DegeneracySplit<T>> {
    let centred = far_fields(incident, template, T::zero(), spec)?;
    let shifted = far_fields(incident, template, offset, spec)?;
    split_between(&centred, &shifted)
}

pub fn split_between<T: Scalar>(
    centred: &FarFieldSet<T>,
    shifted: &FarFieldSet<T>,
) -> Result<DegeneracySplit<T>> {
    let missing = |b: &Bits| Error::InvalidBits(format!("no far field for {b}"));
    let mut pairs = Vec::new();
    let mut shifts = Vec::new();
    for (seq, profile) in &shifted.profiles {
        let bits = &seq.bits;
        if bits.is_palindrome() {
            let before = centred.get(bits).ok_or_else(|| missing(bits))?;
            shifts.push(ProfileShift {
                sequence: bits.to_string(),
                distance: intensity_distance(before, profile)?,
            });
        } else if bits < &bits.reversed() {
            let rev = bits.reversed();
            let other = shifted.get(&rev).ok_or_else(|| missing(&rev))?;
            pairs.push(PairSplit {
                pair: (bits.to_string(), rev.to_string()),
                distance: intensity_distance(profile, other)?,
            });
        }
    }
    Ok(DegeneracySplit {
        offset: shifted.offset,
        pairs,
        shifts,
    })
}
