//! Focal-plane field of a strongly focused, linearly (x) polarized beam.
//!
//! The vectorial model evaluates the three Richards–Wolf radial integrals
//!
//! ```text
//! I0(r) = ∫ g(θ) √cosθ sinθ (1 + cosθ) J0(k r sinθ) dθ
//! I1(r) = ∫ g(θ) √cosθ sin²θ           J1(k r sinθ) dθ
//! I2(r) = ∫ g(θ) √cosθ sinθ (1 - cosθ) J2(k r sinθ) dθ
//! ```
//!
//! over `θ ∈ [0, θmax]` with a fixed Gauss–Legendre rule, and assembles
//! `Ex = -i(I0 + I2 cos2φ)`, `Ey = -i I2 sin2φ`, `Ez = -2 I1 cosφ`.
//! `g` is the pupil illumination (uniform plane wave or Gaussian fill).
//!
//! The paraxial model is the scalar transform of the same pupil in
//! transverse wavenumber, normalized so both models agree as NA → 0.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldProfile, Grid1D};
use crate::scalar::Scalar;
use crate::special::{bessel_j012, GaussLegendre};

/// Fraction of the focused energy that defines the spot diameter.
pub const SPOT_ENERGY_FRACTION: f64 = 0.86;

pub const DEFAULT_QUADRATURE_NODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FocalModel {
    Vectorial,
    Paraxial,
}

/// Amplitude profile of the beam filling the lens pupil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Illumination<T> {
    /// Plane wave, uniform over the aperture.
    Uniform,
    /// Gaussian with amplitude `exp(-(ρ / (fill ρmax))²)` across the pupil,
    /// `ρ = sinθ`. `fill = 1` puts the 1/e² intensity point on the rim.
    Gaussian { fill: T },
}

/// Which pupil radius the paraxial model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParaxialAperture {
    /// Transverse cutoff `k · NA` (direction sine of the marginal ray).
    Sine,
    /// Transverse cutoff `k · n · tan θmax` (lens radius over focal length).
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocusSpec<T> {
    pub wavelength: T,
    pub numerical_aperture: T,
    pub medium_index: T,
    pub model: FocalModel,
    pub illumination: Illumination<T>,
    pub paraxial_aperture: ParaxialAperture,
    pub quadrature_nodes: usize,
}

impl<T: Scalar> FocusSpec<T> {
    /// Vectorial model, air, uniform illumination.
    pub fn new(wavelength: T, numerical_aperture: T) -> Result<Self> {
        let spec = Self {
            wavelength,
            numerical_aperture,
            medium_index: T::one(),
            model: FocalModel::Vectorial,
            illumination: Illumination::Uniform,
            paraxial_aperture: ParaxialAperture::Sine,
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_model(mut self, model: FocalModel) -> Self {
        self.model = model;
        self
    }

    pub fn with_illumination(mut self, illumination: Illumination<T>) -> Self {
        self.illumination = illumination;
        self
    }

    pub fn with_numerical_aperture(mut self, na: T) -> Result<Self> {
        self.numerical_aperture = na;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidFocus(msg));
        if !(self.wavelength > T::zero() && self.wavelength.is_finite()) {
            return bad(format!("wavelength must be positive, got {}", self.wavelength));
        }
        if !(self.medium_index > T::zero() && self.medium_index.is_finite()) {
            return bad(format!("medium index must be positive, got {}", self.medium_index));
        }
        if !(self.numerical_aperture > T::zero() && self.numerical_aperture < self.medium_index) {
            return bad(format!(
                "numerical aperture must lie in (0, {}), got {}",
                self.medium_index, self.numerical_aperture
            ));
        }
        if let Illumination::Gaussian { fill } = self.illumination {
            if !(fill > T::zero() && fill.is_finite()) {
                return bad(format!("Gaussian fill factor must be positive, got {fill}"));
            }
        }
        if self.quadrature_nodes < 2 {
            return bad("need at least 2 quadrature nodes".into());
        }
        Ok(())
    }

    /// Focusing half-angle `asin(NA / n)`.
    pub fn theta_max(&self) -> T {
        (self.numerical_aperture / self.medium_index).asin()
    }

    /// Wavenumber in the medium.
    pub fn wavenumber(&self) -> T {
        T::TAU() * self.medium_index / self.wavelength
    }

    /// Pupil amplitude at direction sine `s` (relative to the rim).
    fn pupil(&self, rho_fraction: T) -> T {
        match self.illumination {
            Illumination::Uniform => T::one(),
            Illumination::Gaussian { fill } => {
                let q = rho_fraction / fill;
                (-(q * q)).exp()
            }
        }
    }

    fn paraxial_cutoff(&self) -> T {
        let k = self.wavenumber();
        match self.paraxial_aperture {
            ParaxialAperture::Sine => k * self.numerical_aperture / self.medium_index,
            ParaxialAperture::Tangent => k * self.theta_max().tan(),
        }
    }
}

/// Pre-tabulated integrands of the focal-field integrals.
#[derive(Debug, Clone)]
pub struct FocalKernel<T> {
    model: FocalModel,
    k: T,
    // (transverse wavenumber scale, weight for I0, I1, I2)
    nodes: Vec<(T, [T; 3])>,
    total_energy: T,
}

impl<T: Scalar> FocalKernel<T> {
    pub fn new(spec: &FocusSpec<T>) -> Result<Self> {
        spec.validate()?;
        let rule = GaussLegendre::<T>::new(spec.quadrature_nodes);
        let k = spec.wavenumber();
        let two = T::lit(2.0);
        match spec.model {
            FocalModel::Vectorial => {
                let theta_max = spec.theta_max();
                let sin_max = theta_max.sin();
                let mut energy = T::zero();
                let nodes = rule
                    .on_interval(T::zero(), theta_max)
                    .into_iter()
                    .map(|(theta, w)| {
                        let (s, c) = theta.sin_cos();
                        let g = spec.pupil(s / sin_max);
                        energy += w * g * g * s;
                        let a = w * g * c.sqrt() * s;
                        (k * s, [a * (T::one() + c), a * s, a * (T::one() - c)])
                    })
                    .collect();
                Ok(Self {
                    model: spec.model,
                    k,
                    nodes,
                    total_energy: T::lit(8.0) * T::PI() / (k * k) * energy,
                })
            }
            FocalModel::Paraxial => {
                let cutoff = spec.paraxial_cutoff();
                let mut energy = T::zero();
                let scale = two / (k * k);
                let nodes = rule
                    .on_interval(T::zero(), cutoff)
                    .into_iter()
                    .map(|(kappa, w)| {
                        let g = spec.pupil(kappa / cutoff);
                        energy += w * g * g * kappa;
                        (kappa, [scale * w * g * kappa, T::zero(), T::zero()])
                    })
                    .collect();
                Ok(Self {
                    model: spec.model,
                    k,
                    nodes,
                    total_energy: T::lit(4.0) / (k * k * k * k) * T::TAU() * energy,
                })
            }
        }
    }

    pub fn model(&self) -> FocalModel {
        self.model
    }

    /// `[I0, I1, I2]` at radius `r`. The paraxial model fills only `I0`.
    pub fn radial_integrals(&self, r: T) -> [T; 3] {
        let mut acc = [T::zero(); 3];
        match self.model {
            FocalModel::Vectorial => {
                for &(ks, w) in &self.nodes {
                    let j = bessel_j012(ks * r);
                    acc[0] += w[0] * j[0];
                    acc[1] += w[1] * j[1];
                    acc[2] += w[2] * j[2];
                }
            }
            FocalModel::Paraxial => {
                for &(kappa, w) in &self.nodes {
                    acc[0] += w[0] * bessel_j012(kappa * r)[0];
                }
            }
        }
        acc
    }

    /// Azimuthally averaged intensity at radius `r`.
    pub fn mean_intensity(&self, r: T) -> T {
        let [i0, i1, i2] = self.radial_integrals(r);
        i0 * i0 + i2 * i2 + T::lit(2.0) * i1 * i1
    }

    /// Field components at a focal-plane point.
    pub fn components(&self, x: T, y: T) -> [Complex<T>; 3] {
        let r = x.hypot(y);
        let [i0, i1, i2] = self.radial_integrals(r);
        let (cos_phi, sin_phi) = if r > T::zero() {
            (x / r, y / r)
        } else {
            (T::one(), T::zero())
        };
        let cos2 = cos_phi * cos_phi - sin_phi * sin_phi;
        let sin2 = T::lit(2.0) * sin_phi * cos_phi;
        let minus_i = Complex::new(T::zero(), -T::one());
        [
            minus_i * (i0 + i2 * cos2),
            minus_i * (i2 * sin2),
            Complex::new(-T::lit(2.0) * i1 * cos_phi, T::zero()),
        ]
    }

    /// Total focal-plane energy, from the pupil side of Parseval's theorem.
    pub fn total_energy(&self) -> T {
        self.total_energy
    }

    pub fn wavenumber(&self) -> T {
        self.k
    }

    /// Energy inside radius `r`, by Gauss–Legendre panels.
    pub fn encircled_energy(&self, r: T, panel: T) -> T {
        let rule = GaussLegendre::<T>::new(8);
        let mut acc = T::zero();
        let mut start = T::zero();
        while start < r {
            let end = (start + panel).min(r);
            acc += rule.integrate(start, end, |rho| self.mean_intensity(rho) * rho);
            start = end;
        }
        acc * T::TAU()
    }

    /// Diameter enclosing the given energy fraction, from the radial profile
    /// and the exact total energy.
    pub fn radial_spot_diameter(&self, fraction: T) -> Result<T> {
        if !(fraction > T::zero() && fraction < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "energy fraction must lie in (0, 1), got {fraction}"
            )));
        }
        let target = fraction * self.total_energy;
        let scale = self.radial_scale();
        let panel = scale * T::lit(0.05);
        let rule = GaussLegendre::<T>::new(8);
        let panel_energy =
            |a: T, b: T| T::TAU() * rule.integrate(a, b, |rho| self.mean_intensity(rho) * rho);
        let mut acc = T::zero();
        let mut start = T::zero();
        let limit = scale * T::lit(400.0);
        while start < limit {
            let end = start + panel;
            let e = panel_energy(start, end);
            if acc + e >= target {
                let (mut lo, mut hi) = (start, end);
                for _ in 0..60 {
                    let mid = (lo + hi) * T::lit(0.5);
                    if acc + panel_energy(start, mid) >= target {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Ok(lo + hi);
            }
            acc += e;
            start = end;
        }
        Err(Error::InvalidParameter(
            "encircled energy never reached the requested fraction".into(),
        ))
    }

    /// Characteristic focal length scale `1 / (k sinθmax)` (or `1 / cutoff`).
    fn radial_scale(&self) -> T {
        let kmax = self
            .nodes
            .iter()
            .map(|n| n.0)
            .fold(T::zero(), |a, b| a.max(b));
        T::one() / kmax
    }
}

/// Uniform rectangular sampling of the focal plane, row-major in `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D<T> {
    pub x: Grid1D<T>,
    pub y: Grid1D<T>,
}

impl<T: Scalar> Grid2D<T> {
    pub fn square(half_width: T, n: usize) -> Result<Self> {
        let axis = Grid1D::symmetric(half_width, n)?;
        Ok(Self { x: axis, y: axis })
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_area(&self) -> T {
        self.x.dx() * self.y.dx()
    }

    /// Index of the row lying on y = 0, if any.
    pub fn zero_row(&self) -> Option<usize> {
        let tol = self.y.dx() * T::lit(1e-9);
        (0..self.y.len()).find(|&j| self.y.x(j).abs() <= tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocalField2D<T> {
    pub grid: Grid2D<T>,
    pub ex: Vec<Complex<T>>,
    pub ey: Vec<Complex<T>>,
    pub ez: Vec<Complex<T>>,
}

impl<T: Scalar> FocalField2D<T> {
    pub fn intensity(&self) -> Vec<T> {
        self.ex
            .iter()
            .zip(&self.ey)
            .zip(&self.ez)
            .map(|((a, b), c)| a.norm_sqr() + b.norm_sqr() + c.norm_sqr())
            .collect()
    }

    /// Peak magnitudes `[max|Ex|, max|Ey|, max|Ez|]`.
    pub fn peak_magnitudes(&self) -> [T; 3] {
        let peak = |v: &[Complex<T>]| v.iter().map(|a| a.norm()).fold(T::zero(), T::max);
        [peak(&self.ex), peak(&self.ey), peak(&self.ez)]
    }

    /// Grid-sum energy `Σ I dx dy`.
    pub fn energy(&self) -> T {
        self.intensity().into_iter().fold(T::zero(), |a, b| a + b) * self.grid.cell_area()
    }

    /// CSV with header `x,y,|Ex|,|Ey|,|Ez|,intensity`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y,|Ex|,|Ey|,|Ez|,intensity")?;
        let nx = self.grid.x.len();
        for j in 0..self.grid.y.len() {
            for i in 0..nx {
                let idx = j * nx + i;
                let (a, b, c) = (self.ex[idx].norm(), self.ey[idx].norm(), self.ez[idx].norm());
                writeln!(
                    out,
                    "{:e},{:e},{:e},{:e},{:e},{:e}",
                    self.grid.x.x(i),
                    self.grid.y.x(j),
                    a,
                    b,
                    c,
                    a * a + b * b + c * c
                )?;
            }
        }
        Ok(())
    }
}

fn evaluate_map<T: Scalar>(kernel: &FocalKernel<T>, grid: &Grid2D<T>) -> FocalField2D<T> {
    let nx = grid.x.len();
    let rows: Vec<Vec<[Complex<T>; 3]>> = (0..grid.y.len())
        .into_par_iter()
        .map(|j| {
            let y = grid.y.x(j);
            (0..nx).map(|i| kernel.components(grid.x.x(i), y)).collect()
        })
        .collect();
    let mut ex = Vec::with_capacity(grid.len());
    let mut ey = Vec::with_capacity(grid.len());
    let mut ez = Vec::with_capacity(grid.len());
    for row in rows {
        for [a, b, c] in row {
            ex.push(a);
            ey.push(b);
            ez.push(c);
        }
    }
    FocalField2D {
        grid: *grid,
        ex,
        ey,
        ez,
    }
}

/// Vectorial focal field for x-polarized illumination.
pub fn richards_wolf_focal_field<T: Scalar>(
    spec: &FocusSpec<T>,
    grid: &Grid2D<T>,
) -> Result<FocalField2D<T>> {
    let kernel = FocalKernel::new(&spec.with_model(FocalModel::Vectorial))?;
    Ok(evaluate_map(&kernel, grid))
}

/// Scalar paraxial focal field, carried in `Ex`.
pub fn paraxial_focal_field<T: Scalar>(
    spec: &FocusSpec<T>,
    grid: &Grid2D<T>,
) -> Result<FocalField2D<T>> {
    let kernel = FocalKernel::new(&spec.with_model(FocalModel::Paraxial))?;
    Ok(evaluate_map(&kernel, grid))
}

/// Focal field for the model selected in `spec`.
pub fn focal_field<T: Scalar>(spec: &FocusSpec<T>, grid: &Grid2D<T>) -> Result<FocalField2D<T>> {
    match spec.model {
        FocalModel::Vectorial => richards_wolf_focal_field(spec, grid),
        FocalModel::Paraxial => paraxial_focal_field(spec, grid),
    }
}

/// Diameter of the smallest centered disc holding 86% of the energy of a
/// sampled intensity map.
pub fn spot_size_86<T: Scalar>(intensity: &[T], grid: &Grid2D<T>) -> Result<T> {
    spot_size_fraction(intensity, grid, T::lit(SPOT_ENERGY_FRACTION))
}

pub fn spot_size_fraction<T: Scalar>(intensity: &[T], grid: &Grid2D<T>, fraction: T) -> Result<T> {
    if intensity.len() != grid.len() {
        return Err(Error::InvalidGrid(format!(
            "{} samples for a {}-point grid",
            intensity.len(),
            grid.len()
        )));
    }
    if intensity.iter().any(|&v| v < T::zero() || !v.is_finite()) {
        return Err(Error::InvalidParameter("intensity must be finite and non-negative".into()));
    }
    let nx = grid.x.len();
    let mut samples: Vec<(T, T)> = intensity
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let (x, y) = (grid.x.x(idx % nx), grid.y.x(idx / nx));
            (x * x + y * y, v)
        })
        .collect();
    let total = samples.iter().fold(T::zero(), |a, s| a + s.1);
    if !(total > T::zero()) {
        return Err(Error::ZeroEnergy);
    }
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite radii"));
    let target = fraction * total;
    let mut acc = T::zero();
    let mut i = 0;
    while i < samples.len() {
        let r2 = samples[i].0;
        // points at the same radius enter together
        while i < samples.len() && samples[i].0 <= r2 {
            acc += samples[i].1;
            i += 1;
        }
        if acc >= target {
            return Ok(T::lit(2.0) * r2.sqrt());
        }
    }
    Ok(T::lit(2.0) * samples[samples.len() - 1].0.sqrt())
}

/// Spot diameter (86% energy) from the radial profile, for either model.
pub fn radial_spot_size_86<T: Scalar>(spec: &FocusSpec<T>) -> Result<T> {
    FocalKernel::new(spec)?.radial_spot_diameter(T::lit(SPOT_ENERGY_FRACTION))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotScanRow<T> {
    pub na: T,
    pub d86_paraxial: T,
    pub d86_vectorial: T,
}

/// Paraxial and vectorial spot diameters over a list of apertures.
pub fn na_scan<T: Scalar>(spec_base: &FocusSpec<T>, na_values: &[T]) -> Result<Vec<SpotScanRow<T>>> {
    na_values
        .par_iter()
        .map(|&na| {
            let wrap = |e: Error| Error::AtAperture {
                na: na.as_f64(),
                source: Box::new(e),
            };
            let spec = spec_base.with_numerical_aperture(na).map_err(wrap)?;
            let d86_paraxial =
                radial_spot_size_86(&spec.with_model(FocalModel::Paraxial)).map_err(wrap)?;
            let d86_vectorial =
                radial_spot_size_86(&spec.with_model(FocalModel::Vectorial)).map_err(wrap)?;
            Ok(SpotScanRow {
                na,
                d86_paraxial,
                d86_vectorial,
            })
        })
        .collect()
}

/// CSV with header `na,d86_paraxial,d86_vectorial`.
pub fn write_scan_csv<T: Scalar, W: Write>(rows: &[SpotScanRow<T>], mut out: W) -> Result<()> {
    writeln!(out, "na,d86_paraxial,d86_vectorial")?;
    for r in rows {
        writeln!(out, "{},{:e},{:e}", r.na, r.d86_paraxial, r.d86_vectorial)?;
    }
    Ok(())
}

/// `Ex(x, 0)` taken from a computed focal map.
pub fn focal_slice_x<T: Scalar>(field: &FocalField2D<T>) -> Result<FieldProfile<T>> {
    let row = field
        .grid
        .zero_row()
        .ok_or_else(|| Error::InvalidGrid("focal grid has no y = 0 row".into()))?;
    let nx = field.grid.x.len();
    FieldProfile::new(field.grid.x, field.ex[row * nx..(row + 1) * nx].to_vec())
}

/// `Ex(x, 0)` evaluated directly on an arbitrary 1-D grid.
pub fn focal_line_x<T: Scalar>(spec: &FocusSpec<T>, grid: Grid1D<T>) -> Result<FieldProfile<T>> {
    let kernel = FocalKernel::new(spec)?;
    let amplitude: Vec<Complex<T>> = grid
        .points()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|x| kernel.components(x, T::zero())[0])
        .collect();
    FieldProfile::new(grid, amplitude)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: f64 = 780e-9;

    fn spec(na: f64) -> FocusSpec<f64> {
        FocusSpec::new(LAMBDA, na).unwrap()
    }

    #[test]
    fn rejects_invalid_apertures() {
        assert!(FocusSpec::new(LAMBDA, 1.2).is_err());
        assert!(FocusSpec::new(LAMBDA, 1.0).is_err());
        assert!(FocusSpec::new(LAMBDA, 0.0).is_err());
        assert!(FocusSpec::new(-1.0, 0.5).is_err());
        assert!(FocusSpec::new(LAMBDA, 0.99).is_ok());
        let s = spec(0.47);
        assert!((s.theta_max().to_degrees() - 28.04).abs() < 0.01);
    }

    #[test]
    fn ey_vanishes_on_axes_and_symmetry_classes_hold() {
        let grid = Grid2D::<f64>::square(1.5 * LAMBDA, 41).unwrap();
        let f = richards_wolf_focal_field(&spec(0.47), &grid).unwrap();
        let n = 41;
        let at = |v: &Vec<Complex<f64>>, i: usize, j: usize| v[j * n + i];
        let peak = f.peak_magnitudes();
        for i in 0..n {
            assert!(at(&f.ey, i, 20).norm() <= 1e-14 * peak[0]);
            assert!(at(&f.ey, 20, i).norm() <= 1e-14 * peak[0]);
        }
        for j in 0..n {
            for i in 0..n {
                let (mi, mj) = (n - 1 - i, n - 1 - j);
                assert!((at(&f.ex, i, j).norm() - at(&f.ex, mi, j).norm()).abs() < 1e-12 * peak[0]);
                assert!((at(&f.ex, i, j).norm() - at(&f.ex, i, mj).norm()).abs() < 1e-12 * peak[0]);
                assert!((at(&f.ez, i, j).norm() - at(&f.ez, i, mj).norm()).abs() < 1e-12 * peak[0]);
                // Ez is odd along x
                assert!((at(&f.ez, i, j) + at(&f.ez, mi, j)).norm() < 1e-12 * peak[0]);
            }
            assert!(at(&f.ez, 20, j).norm() < 1e-14 * peak[0]);
        }
    }

    #[test]
    fn component_hierarchy_at_cd_aperture() {
        let grid = Grid2D::<f64>::square(2.0 * LAMBDA, 81).unwrap();
        let [ex, ey, ez] = richards_wolf_focal_field(&spec(0.47), &grid)
            .unwrap()
            .peak_magnitudes();
        assert!(ey < ez && ez < ex, "{ex} {ey} {ez}");
    }

    #[test]
    fn small_aperture_ez_is_weak() {
        // the amplitude ratio falls linearly with NA, the intensity ratio as NA²
        let ratio = |na: f64| {
            let grid = Grid2D::<f64>::square(1.2 * LAMBDA / na, 61).unwrap();
            let [ex, _, ez] = richards_wolf_focal_field(&spec(na), &grid)
                .unwrap()
                .peak_magnitudes();
            ez / ex
        };
        let (a, b) = (ratio(0.1), ratio(0.05));
        assert!(a * a < 0.02, "{a}");
        assert!((a / b - 2.0).abs() < 0.05, "{a} {b}");
    }

    #[test]
    fn vectorial_tends_to_paraxial_at_small_na() {
        let s = spec(0.1);
        let grid = Grid1D::symmetric(15.0 * LAMBDA, 601).unwrap();
        let v = focal_line_x(&s, grid).unwrap();
        let p = focal_line_x(&s.with_model(FocalModel::Paraxial), grid).unwrap();
        let vi = v.intensity();
        let pi = p.intensity();
        let (vmax, pmax) = (vi[300], pi[300]);
        let rms = (vi
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a / vmax - b / pmax).powi(2))
            .sum::<f64>()
            / vi.len() as f64)
            .sqrt();
        assert!(rms < 0.01, "rms {rms}");
    }

    #[test]
    fn uniform_paraxial_matches_airy_closed_form() {
        let s = spec(0.3).with_model(FocalModel::Paraxial);
        let kernel = FocalKernel::new(&s).unwrap();
        let k = s.wavenumber();
        for r in [0.0, 0.3e-6, 1.1e-6, 2.7e-6] {
            let v = k * 0.3 * r;
            let airy = if v == 0.0 {
                0.5
            } else {
                crate::special::bessel_j1(v) / v
            };
            let expected = 2.0 * 0.3 * 0.3 * airy;
            assert!((kernel.radial_integrals(r)[0] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn airy_first_zero() {
        // first zero of J1 at 3.8317: r = 3.8317 / (2π) λ / NA = 0.6098 λ/NA
        for na in [0.05, 0.47] {
            let s = spec(na).with_model(FocalModel::Paraxial);
            let kernel = FocalKernel::new(&s).unwrap();
            let expected = 0.61 * LAMBDA / na;
            let (mut lo, mut hi) = (0.4 * LAMBDA / na, 0.8 * LAMBDA / na);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if kernel.radial_integrals(mid)[0] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((lo - expected).abs() / expected < 0.005, "NA {na}: {lo}");
        }
    }

    #[test]
    fn paraxial_components_are_scalar() {
        let grid = Grid2D::<f64>::square(2.0 * LAMBDA, 21).unwrap();
        let f = paraxial_focal_field(&spec(0.47), &grid).unwrap();
        assert!(f.ey.iter().chain(&f.ez).all(|c| c.norm() == 0.0));
    }

    #[test]
    fn paraxial_parseval() {
        // pupil energy against radial quadrature of |E|² far into the tail
        for illumination in [Illumination::Uniform, Illumination::Gaussian { fill: 0.35 }] {
            let s = spec(0.47)
                .with_model(FocalModel::Paraxial)
                .with_illumination(illumination);
            let kernel = FocalKernel::new(&s).unwrap();
            let k_na = s.wavenumber() * 0.47;
            let uniform = matches!(illumination, Illumination::Uniform);
            let v_max = if uniform { 40_000.0 } else { 60.0 };
            let energy = if uniform {
                // closed-form J1 keeps the long tail cheap
                let rule = GaussLegendre::<f64>::new(8);
                let mut acc = 0.0;
                let mut v0 = 0.0;
                while v0 < v_max {
                    acc += rule.integrate(v0, v0 + 0.5, |v| {
                        let a = if v == 0.0 { 0.5 } else { crate::special::bessel_j1(v) / v };
                        4.0 * 0.47f64.powi(4) * a * a * v
                    });
                    v0 += 0.5;
                }
                std::f64::consts::TAU * acc / (k_na * k_na)
            } else {
                kernel.encircled_energy(v_max / k_na, 0.05 / k_na)
            };
            let rel = (energy - kernel.total_energy()).abs() / kernel.total_energy();
            assert!(rel < 1e-4, "{illumination:?}: {rel}");
        }
    }

    #[test]
    fn vectorial_energy_is_conserved() {
        let s = spec(0.8).with_illumination(Illumination::Gaussian { fill: 0.4 });
        let kernel = FocalKernel::new(&s).unwrap();
        let scale = 1.0 / kernel.wavenumber();
        let e = kernel.encircled_energy(80.0 * scale, 0.05 * scale);
        let rel = (e - kernel.total_energy()).abs() / kernel.total_energy();
        assert!(rel < 1e-4, "{rel}");
    }

    #[test]
    fn quadrature_converges() {
        let s = spec(0.47);
        let a = FocalKernel::new(&s).unwrap();
        let b = FocalKernel::new(&FocusSpec {
            quadrature_nodes: 512,
            ..s
        })
        .unwrap();
        for r in [0.0, 0.2e-6, 0.7e-6, 1.5e-6] {
            let (x, y) = (a.radial_integrals(r), b.radial_integrals(r));
            let scale = x[0].abs();
            for n in 0..3 {
                assert!((x[n] - y[n]).abs() < 1e-8 * scale, "r={r} n={n}");
            }
        }
    }

    #[test]
    fn gaussian_spot_size() {
        // exp(-2r²/w²) holds 86.47% inside r = w
        let w = 1.0f64;
        let grid = Grid2D::<f64>::square(3.0, 401).unwrap();
        let nx = 401;
        let intensity: Vec<f64> = (0..grid.len())
            .map(|i| {
                let (x, y) = (grid.x.x(i % nx), grid.y.x(i / nx));
                (-2.0 * (x * x + y * y) / (w * w)).exp()
            })
            .collect();
        let d = spot_size_86(&intensity, &grid).unwrap();
        let expected = 2.0 * w * (-(1.0f64 - 0.86).ln() / 2.0).sqrt();
        assert!((d - expected).abs() < 2.0 * grid.x.dx(), "{d} vs {expected}");
        assert!((d - 2.0 * w).abs() < 0.02 * w);
    }

    #[test]
    fn uniform_disc_spot_size() {
        let diameter = 2.0;
        let grid = Grid2D::<f64>::square(1.5, 601).unwrap();
        let nx = 601;
        let intensity: Vec<f64> = (0..grid.len())
            .map(|i| {
                let (x, y) = (grid.x.x(i % nx), grid.y.x(i / nx));
                if x.hypot(y) <= diameter / 2.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let d = spot_size_86(&intensity, &grid).unwrap();
        assert!((d - diameter * 0.86f64.sqrt()).abs() < 2.0 * grid.x.dx());
    }

    #[test]
    fn spot_size_quantization_is_tight() {
        let grid = Grid2D::<f64>::square(2.0, 81).unwrap();
        let nx = 81;
        let intensity: Vec<f64> = (0..grid.len())
            .map(|i| {
                let (x, y) = (grid.x.x(i % nx), grid.y.x(i / nx));
                (-(x * x + y * y)).exp() * (1.0 + 0.3 * x)
            })
            .collect();
        let d = spot_size_86(&intensity, &grid).unwrap();
        let total: f64 = intensity.iter().sum();
        let within = |rad: f64| -> f64 {
            (0..grid.len())
                .filter(|&i| grid.x.x(i % nx).hypot(grid.y.x(i / nx)) <= rad)
                .map(|i| intensity[i])
                .sum()
        };
        assert!(within(d / 2.0 * (1.0 + 1e-12)) >= 0.86 * total);
        assert!(within(d / 2.0 * (1.0 - 1e-9)) < 0.86 * total);
    }

    #[test]
    fn spot_size_errors() {
        let grid = Grid2D::<f64>::square(1.0, 5).unwrap();
        assert!(matches!(spot_size_86(&[0.0; 25], &grid), Err(Error::ZeroEnergy)));
        assert!(spot_size_86(&[1.0; 24], &grid).is_err());
    }

    #[test]
    fn radial_and_gridded_spot_sizes_agree() {
        let s = spec(0.47).with_illumination(Illumination::Gaussian { fill: 1.0 });
        let radial = radial_spot_size_86(&s).unwrap();
        let grid = Grid2D::<f64>::square(4.0 * LAMBDA, 161).unwrap();
        let map = richards_wolf_focal_field(&s, &grid).unwrap();
        let gridded = spot_size_86(&map.intensity(), &grid).unwrap();
        assert!((radial - gridded).abs() / radial < 0.03, "{radial} vs {gridded}");
    }

    #[test]
    fn slice_matches_line_and_is_even() {
        let s = spec(0.47);
        let grid = Grid2D::<f64>::square(2.0 * LAMBDA, 33).unwrap();
        let map = richards_wolf_focal_field(&s, &grid).unwrap();
        let slice = focal_slice_x(&map).unwrap();
        let line = focal_line_x(&s, grid.x).unwrap();
        let a = slice.amplitude();
        for (i, (p, q)) in a.iter().zip(line.amplitude()).enumerate() {
            assert!((p - q).norm() < 1e-14 * a[16].norm());
            assert!((p - a[32 - i]).norm() < 1e-12 * a[16].norm());
        }
        assert!(slice.photon_number() > 0.0);
        let even = Grid2D::square(2.0 * LAMBDA, 32).unwrap();
        let map = richards_wolf_focal_field(&s, &even).unwrap();
        assert!(focal_slice_x(&map).is_err());
    }

    #[test]
    fn scan_single_point() {
        let rows = na_scan(&spec(0.5), &[0.2]).unwrap();
        assert_eq!(rows.len(), 1);
        let ratio = rows[0].d86_vectorial / rows[0].d86_paraxial;
        assert!((0.98..=1.02).contains(&ratio), "{ratio}");
        let err = na_scan(&spec(0.5), &[0.3, 1.3]).unwrap_err();
        assert!(matches!(err, Error::AtAperture { na, .. } if na == 1.3));
    }
}
