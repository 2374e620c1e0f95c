//! Uniform 1-D grids and complex field profiles in photon-amplitude units.
//!
//! A [`FieldProfile`] stores `u(x)` such that `|u(x)|^2` integrates to a
//! photon number. All integrals use the trapezoid rule on the grid.

use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D<T> {
    x_min: T,
    x_max: T,
    n_points: usize,
}

impl<T: Scalar> Grid1D<T> {
    pub fn new(x_min: T, x_max: T, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {n_points}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    /// Grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: T, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    pub fn x_min(&self) -> T {
        self.x_min
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> T {
        (self.x_max - self.x_min) / T::from_usize_lossy(self.n_points - 1)
    }

    pub fn x(&self, i: usize) -> T {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + self.dx() * T::from_usize_lossy(i)
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = T> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Trapezoid weights: `dx` inside, `dx/2` at both ends.
    pub fn trapezoid_weights(&self) -> Vec<T> {
        let dx = self.dx();
        let mut w = vec![dx; self.n_points];
        w[0] = dx * T::lit(0.5);
        w[self.n_points - 1] = dx * T::lit(0.5);
        w
    }

    /// True when the grid is symmetric about zero to rounding.
    pub fn is_centered(&self) -> bool {
        (self.x_min + self.x_max).abs() <= T::lit(8.0) * T::epsilon() * self.x_max.abs()
    }

    pub(crate) fn same_as(&self, other: &Self) -> bool {
        self.n_points == other.n_points && self.x_min == other.x_min && self.x_max == other.x_max
    }
}

/// Trapezoid integral of samples on a uniform grid.
pub fn trapezoid<T: Scalar>(values: &[T], dx: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let inner = values[1..n - 1].iter().fold(T::zero(), |a, &v| a + v);
            dx * (inner + (values[0] + values[n - 1]) * T::lit(0.5))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldProfile<T> {
    grid: Grid1D<T>,
    amplitude: Vec<Complex<T>>,
}

impl<T: Scalar> FieldProfile<T> {
    pub fn new(grid: Grid1D<T>, amplitude: Vec<Complex<T>>) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} amplitudes for {} grid points",
                amplitude.len(),
                grid.len()
            )));
        }
        if amplitude.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::InvalidGrid("non-finite amplitude".into()));
        }
        Ok(Self { grid, amplitude })
    }

    pub fn from_fn<F: FnMut(T) -> Complex<T>>(grid: Grid1D<T>, f: F) -> Result<Self> {
        let amplitude = grid.points().map(f).collect();
        Self::new(grid, amplitude)
    }

    pub fn zeros(grid: Grid1D<T>) -> Self {
        Self {
            amplitude: vec![Complex::new(T::zero(), T::zero()); grid.len()],
            grid,
        }
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn amplitude(&self) -> &[Complex<T>] {
        &self.amplitude
    }

    pub fn into_amplitude(self) -> Vec<Complex<T>> {
        self.amplitude
    }

    pub fn intensity(&self) -> Vec<T> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `∫|u|² dx`.
    pub fn photon_number(&self) -> T {
        trapezoid(&self.intensity(), self.grid.dx())
    }

    /// `∫ conj(u_self) u_other dx`.
    pub fn overlap(&self, other: &Self) -> Result<Complex<T>> {
        self.check_grid(other)?;
        let w = self.grid.trapezoid_weights();
        Ok(self
            .amplitude
            .iter()
            .zip(&other.amplitude)
            .zip(&w)
            .fold(Complex::new(T::zero(), T::zero()), |acc, ((a, b), &wi)| {
                acc + a.conj() * b * wi
            }))
    }

    /// Rescales the amplitude so the photon number equals `target`.
    pub fn normalize(&self, target: T) -> Result<Self> {
        let n = self.photon_number();
        if !(n > T::zero()) {
            return Err(Error::ZeroEnergy);
        }
        if target < T::zero() || !target.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "normalization target must be a finite non-negative count, got {target}"
            )));
        }
        Ok(self.scaled(Complex::new((target / n).sqrt(), T::zero())))
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        Self {
            grid: self.grid,
            amplitude: self.amplitude.iter().map(|a| a * c).collect(),
        }
    }

    /// Pointwise map of the amplitude, keeping the grid.
    pub fn map_with_x<F: FnMut(T, Complex<T>) -> Complex<T>>(&self, mut f: F) -> Self {
        Self {
            grid: self.grid,
            amplitude: self
                .grid
                .points()
                .zip(&self.amplitude)
                .map(|(x, &a)| f(x, a))
                .collect(),
        }
    }

    /// Integral over `[a, b]` of the piecewise-linear interpolant of `|u|²`.
    ///
    /// Summing this over a partition of an interval gives the integral over
    /// the whole interval up to rounding.
    pub fn energy_between(&self, a: T, b: T) -> Result<T> {
        if !(self.grid.contains(a) && self.grid.contains(b)) || b < a {
            return Err(Error::GridTooNarrow {
                grid_min: self.grid.x_min.as_f64(),
                grid_max: self.grid.x_max.as_f64(),
                span_min: a.as_f64(),
                span_max: b.as_f64(),
            });
        }
        let intensity = self.intensity();
        Ok(integrate_linear(&self.grid, &intensity, a, b))
    }

    /// Profile mirrored about x = 0. Requires a centered grid.
    pub fn mirrored(&self) -> Result<Self> {
        if !self.grid.is_centered() {
            return Err(Error::InvalidGrid("mirror requires a grid centered on 0".into()));
        }
        let mut amplitude = self.amplitude.clone();
        amplitude.reverse();
        Ok(Self {
            grid: self.grid,
            amplitude,
        })
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// CSV with header `x,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,re,im")?;
        for (x, a) in self.grid.points().zip(&self.amplitude) {
            writeln!(out, "{:e},{:e},{:e}", x, a.re, a.im)?;
        }
        Ok(())
    }

    /// Parses the `x,re,im` CSV form. The grid is rebuilt from the first and
    /// last abscissae and must be uniform.
    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("x,re,im") => {}
            other => {
                return Err(Error::InvalidParameter(format!(
                    "expected header `x,re,im`, found {other:?}"
                )))
            }
        }
        let mut xs = Vec::new();
        let mut amplitude = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |s: &str| -> Result<T> {
                s.parse::<f64>().map(T::lit).map_err(|e| {
                    Error::InvalidParameter(format!("row {}: {e}", lineno + 2))
                })
            };
            if cols.len() != 3 {
                return Err(Error::InvalidParameter(format!(
                    "row {}: expected 3 columns",
                    lineno + 2
                )));
            }
            xs.push(parse(cols[0])?);
            amplitude.push(Complex::new(parse(cols[1])?, parse(cols[2])?));
        }
        let n = xs.len();
        if n < 2 {
            return Err(Error::InvalidGrid("fewer than 2 rows".into()));
        }
        let grid = Grid1D::new(xs[0], xs[n - 1], n)?;
        let tol = grid.dx() * T::lit(1e-6);
        if xs.iter().enumerate().any(|(i, &x)| (x - grid.x(i)).abs() > tol) {
            return Err(Error::InvalidGrid("abscissae are not uniformly spaced".into()));
        }
        Self::new(grid, amplitude)
    }
}

pub(crate) fn integrate_linear<T: Scalar>(grid: &Grid1D<T>, values: &[T], a: T, b: T) -> T {
    if b <= a {
        return T::zero();
    }
    let dx = grid.dx();
    let last_cell = grid.len() - 2;
    let cell_of = |x: T| {
        ((x - grid.x_min()) / dx)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(last_cell)
    };
    let half = T::lit(0.5);
    let mut sum = T::zero();
    for i in cell_of(a)..=cell_of(b) {
        let (x0, x1) = (grid.x(i), grid.x(i + 1));
        let lo = a.max(x0);
        let hi = b.min(x1);
        if hi <= lo {
            continue;
        }
        let at = |x: T| values[i] + (values[i + 1] - values[i]) * ((x - x0) / (x1 - x0));
        sum += (hi - lo) * (at(lo) + at(hi)) * half;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn gaussian(grid: Grid1D<f64>, center: f64, w: f64) -> FieldProfile<f64> {
        // unit L2 norm: (2/(pi w^2))^(1/4) exp(-(x-c)^2/w^2)
        let a = (2.0 / (std::f64::consts::PI * w * w)).powf(0.25);
        FieldProfile::from_fn(grid, |x| c(a * (-((x - center) / w).powi(2)).exp(), 0.0)).unwrap()
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
        assert!(Grid1D::new(1.0, 1.0, 10).is_err());
        assert!(Grid1D::new(2.0, 1.0, 10).is_err());
        assert!(Grid1D::new(0.0, f64::NAN, 10).is_err());
        let g = Grid1D::<f64>::new(0.0, 1.0, 11).unwrap();
        assert!((g.dx() - 0.1).abs() < 1e-15);
        assert_eq!(g.x(10), 1.0);
    }

    #[test]
    fn zero_field_has_no_photons() {
        let g = Grid1D::symmetric(1.0, 101).unwrap();
        assert_eq!(FieldProfile::zeros(g).photon_number(), 0.0);
    }

    #[test]
    fn rectangle_integral() {
        // constant c on [0, L] with the support aligned to grid points
        let g = Grid1D::new(-1.0, 3.0, 401).unwrap();
        let (amp, len) = (1.5, 2.0);
        let f = FieldProfile::from_fn(g, |x| {
            if (0.0..=len + 1e-12).contains(&x) {
                c(amp, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        // trapezoid adds half a cell of ramp at each edge
        let expected = amp * amp * (len + g.dx());
        assert!((f.photon_number() - expected).abs() < 1e-12);
        assert!((f.energy_between(0.0, len).unwrap() - amp * amp * len).abs() < 1e-12);
    }

    #[test]
    fn gaussian_normalized_to_25() {
        let g = Grid1D::symmetric(8.0, 4096).unwrap();
        let f = gaussian(g, 0.0, 1.0).scaled(c(5.0, 0.0));
        assert!((f.photon_number() - 25.0).abs() < 1e-8);
    }

    #[test]
    fn overlap_basics() {
        let g = Grid1D::symmetric(8.0, 4096).unwrap();
        let f = gaussian(g, 0.3, 1.1).scaled(c(0.4, -1.2));
        let o = f.overlap(&f).unwrap();
        assert!((o.re - f.photon_number()).abs() < 1e-14);
        assert!(o.im.abs() < 1e-14);

        let left = FieldProfile::from_fn(g, |x| if x < -1.0 { c(1.0, 0.0) } else { c(0.0, 0.0) }).unwrap();
        let right = FieldProfile::from_fn(g, |x| if x > 1.0 { c(0.0, 2.0) } else { c(0.0, 0.0) }).unwrap();
        assert_eq!(left.overlap(&right).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn gaussian_overlap_matches_closed_form() {
        // unit-norm amplitudes ∝ exp(-(x-c)²/(2w²)) overlap as exp(-d²/(4w²))
        let g = Grid1D::symmetric(12.0, 4096).unwrap();
        let w: f64 = 1.3;
        let norm = (std::f64::consts::PI * w * w).powf(-0.25);
        let make = |center: f64| {
            FieldProfile::from_fn(g, |x| c(norm * (-(x - center).powi(2) / (2.0 * w * w)).exp(), 0.0))
                .unwrap()
        };
        for d in [0.0, 0.5, 1.0, 2.5] {
            let got = make(-d / 2.0).overlap(&make(d / 2.0)).unwrap();
            let expected = (-d * d / (4.0 * w * w)).exp();
            assert!((got.re - expected).abs() < 1e-10, "d={d}: {got} vs {expected}");
            assert!(got.im.abs() < 1e-15);
        }
    }

    #[test]
    fn overlap_grid_mismatch() {
        let a = FieldProfile::zeros(Grid1D::symmetric(1.0, 10).unwrap());
        let b = FieldProfile::zeros(Grid1D::symmetric(1.0, 11).unwrap());
        assert!(matches!(a.overlap(&b), Err(Error::GridMismatch)));
    }

    #[test]
    fn normalize_cases() {
        let g = Grid1D::symmetric(8.0, 2048).unwrap();
        let f = gaussian(g, 0.0, 1.0).scaled(c(2.0, 0.0));
        let n = f.photon_number();
        assert!((n - 4.0).abs() < 1e-10);
        let same = f.normalize(n).unwrap();
        for (a, b) in same.amplitude().iter().zip(f.amplitude()) {
            assert!((a - b).norm() < 1e-14);
        }
        let halved = f.normalize(1.0).unwrap();
        for (a, b) in halved.amplitude().iter().zip(f.amplitude()) {
            assert!((a * 2.0 - b).norm() < 1e-10);
        }
        assert!(matches!(
            FieldProfile::zeros(g).normalize(1.0),
            Err(Error::ZeroEnergy)
        ));
    }

    #[test]
    fn grid_refinement_changes_little() {
        let coarse = gaussian(Grid1D::symmetric(8.0, 4096).unwrap(), 0.0, 1.0);
        let fine = gaussian(Grid1D::symmetric(8.0, 8191).unwrap(), 0.0, 1.0);
        let rel = (coarse.photon_number() - fine.photon_number()).abs() / fine.photon_number();
        assert!(rel < 1e-6);
    }

    #[test]
    fn energy_partition_sums_to_total() {
        let g = Grid1D::symmetric(3.0, 301).unwrap();
        let f = gaussian(g, 0.2, 0.7);
        let cuts = [-2.5, -1.234, -0.1, 0.77, 1.9, 2.5];
        let parts: f64 = cuts
            .windows(2)
            .map(|w| f.energy_between(w[0], w[1]).unwrap())
            .sum();
        let whole = f.energy_between(-2.5, 2.5).unwrap();
        assert!((parts - whole).abs() < 1e-14 * whole.max(1.0));
        assert!(f.energy_between(-4.0, 0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid1D::symmetric(1.0, 5).unwrap();
        let f = FieldProfile::from_fn(g, |x| c(x, -2.0 * x)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,re,im\n"));
        let back = FieldProfile::<f64>::read_csv(&text).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn works_in_single_precision() {
        let g = Grid1D::<f32>::symmetric(8.0, 1024).unwrap();
        let f = FieldProfile::from_fn(g, |x| Complex::new((-x * x).exp(), 0.0)).unwrap();
        let n = f.normalize(25.0).unwrap().photon_number();
        assert!((n - 25.0).abs() < 1e-3);
    }

    fn arb_profile() -> impl Strategy<Value = FieldProfile<f64>> {
        proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 64).prop_map(|v| {
            let g = Grid1D::symmetric(2.0, 64).unwrap();
            FieldProfile::new(g, v.into_iter().map(|(r, i)| c(r, i)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn overlap_is_conjugate_symmetric(f in arb_profile(), g in arb_profile()) {
            let fg = f.overlap(&g).unwrap();
            let gf = g.overlap(&f).unwrap();
            prop_assert!((fg - gf.conj()).norm() <= 1e-12 * (1.0 + fg.norm()));
        }

        #[test]
        fn overlap_is_antilinear_in_first(f in arb_profile(), g in arb_profile(),
                                          re in -4.0f64..4.0, im in -4.0f64..4.0) {
            let a = c(re, im);
            let lhs = f.scaled(a).overlap(&g).unwrap();
            let rhs = a.conj() * f.overlap(&g).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }

        #[test]
        fn cauchy_schwarz(f in arb_profile(), g in arb_profile()) {
            let o = f.overlap(&g).unwrap().norm_sqr();
            prop_assert!(o <= f.photon_number() * g.photon_number() * (1.0 + 1e-12));
        }

        #[test]
        fn normalize_hits_target(f in arb_profile(), target in 0.1f64..100.0) {
            prop_assume!(f.photon_number() > 1e-6);
            let n = f.normalize(target).unwrap().photon_number();
            prop_assert!((n - target).abs() <= 1e-10 * target);
        }
    }
}
