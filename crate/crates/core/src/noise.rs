//! Variance of gain-weighted signals: classical excess noise, shot noise and
//! squeezed light.
//!
//! The quantum noise of `S_i(j)` comes from a single transverse mode, the
//! noise mode `w_ij`, equal to `σk(j) u_i(x)` on pixel `k` and normalized to
//! unit L² norm. With `f² = Σ σk² Nk / N_inc`,
//!
//! ```text
//! var_quantum   = f² N_inc <δX²>,  <δX²> = P·10^(-s/10) + (1 - P)
//! var_classical = B S² / N_inc
//! ```
//!
//! where `P` is the squared projection of `w_ij` onto the squeezed subspace.
//! Profiles are rescaled so that `N_inc` counts detected photons.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{
    pixel_photon_numbers, signal, solve_gains, DetectedProfile, GainSet, PixelArray, PixelCounts,
    SignalMatrix, PIXELS,
};
use crate::error::{Error, Result};
use crate::field::FieldProfile;
use crate::scalar::Scalar;

/// Residual norm below which a mode is taken as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams<T> {
    /// Classical noise factor `B = N_inc β²`.
    pub excess_factor: T,
    pub squeeze_db: T,
    pub photons: T,
}

impl<T: Scalar> Default for NoiseParams<T> {
    fn default() -> Self {
        Self {
            excess_factor: T::lit(10.0),
            squeeze_db: T::lit(10.0),
            photons: T::lit(25.0),
        }
    }
}

impl<T: Scalar> NoiseParams<T> {
    pub fn new(excess_factor: T, squeeze_db: T, photons: T) -> Result<Self> {
        let p = Self {
            excess_factor,
            squeeze_db,
            photons,
        };
        p.validate()?;
        Ok(p)
    }

    /// Classical excess noise only on top of shot noise.
    pub fn classical(excess_db: T, photons: T) -> Result<Self> {
        Self::new(db_to_factor(excess_db), T::zero(), photons)
    }

    pub fn shot(photons: T) -> Result<Self> {
        Self::new(T::zero(), T::zero(), photons)
    }

    pub fn squeezed(squeeze_db: T, photons: T) -> Result<Self> {
        Self::new(T::zero(), squeeze_db, photons)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.excess_factor >= T::zero() && self.excess_factor.is_finite()) {
            return bad(format!("classical noise factor must be >= 0, got {}", self.excess_factor));
        }
        if !(self.squeeze_db >= T::zero() && self.squeeze_db.is_finite()) {
            return bad(format!("squeezing must be >= 0 dB, got {}", self.squeeze_db));
        }
        if !(self.photons > T::zero() && self.photons.is_finite()) {
            return bad(format!("photon number must be positive, got {}", self.photons));
        }
        Ok(())
    }

    /// Variance factor `10^(-s/10)` of a squeezed mode.
    pub fn squeeze_factor(&self) -> T {
        db_to_factor(-self.squeeze_db)
    }
}

pub fn db_to_factor<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// `B S² / N_inc`.
pub fn classical_variance<T: Scalar>(mean: T, params: &NoiseParams<T>) -> T {
    params.excess_factor * mean * mean / params.photons
}

/// Normalized quadrature variance of a mode with squeezed fraction `p`.
pub fn quadrature_variance<T: Scalar>(parallel_fraction: T, params: &NoiseParams<T>) -> T {
    let p = parallel_fraction.max(T::zero()).min(T::one());
    p * params.squeeze_factor() + (T::one() - p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMode<T> {
    pub profile: FieldProfile<T>,
    pub disc_sequence: String,
    pub gain_set: String,
    /// `Σ σk² Nk / N_inc`.
    pub f_squared: T,
    /// Detected photons `Σ Nk` of the profile the mode was built from.
    pub photons: T,
}

impl<T: Scalar> NoiseMode<T> {
    /// Shot-noise variance `f² N_inc = Σ σk² Nk`.
    pub fn shot_variance(&self) -> T {
        self.f_squared * self.photons
    }
}

/// Noise mode of profile `u` under gain set `g`.
pub fn noise_mode<T: Scalar>(
    disc_sequence: impl Into<String>,
    u: &FieldProfile<T>,
    g: &GainSet<T>,
    array: &PixelArray<T>,
) -> Result<NoiseMode<T>> {
    if g.gains.iter().all(|s| *s == T::zero()) {
        return Err(Error::ZeroGains);
    }
    let counts = pixel_photon_numbers(u, array)?;
    let photons = counts.iter().fold(T::zero(), |a, &b| a + b);
    if !(photons > T::zero()) {
        return Err(Error::ZeroEnergy);
    }
    let weighted = counts
        .iter()
        .zip(&g.gains)
        .fold(T::zero(), |a, (&n, &s)| a + s * s * n);
    let profile = u.map_with_x(|x, a| match array.pixel_of(x) {
        Some(k) => a * g.gains[k],
        None => Complex::new(T::zero(), T::zero()),
    });
    let profile = profile.normalize(T::one())?;
    Ok(NoiseMode {
        profile,
        disc_sequence: disc_sequence.into(),
        gain_set: g.target.clone(),
        f_squared: weighted / photons,
        photons,
    })
}

/// Orthonormal basis of the squeezed subspace. Empty means coherent light.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SqueezedBasis<T> {
    modes: Vec<FieldProfile<T>>,
}

impl<T: Scalar> SqueezedBasis<T> {
    pub fn empty() -> Self {
        Self { modes: Vec::new() }
    }

    /// Wraps modes that the caller asserts are orthonormal; checked to `tol`.
    pub fn from_orthonormal(modes: Vec<FieldProfile<T>>, tol: T) -> Result<Self> {
        let basis = Self { modes };
        let dev = basis.orthonormality_error()?;
        if dev > tol {
            return Err(Error::NonOrthonormalBasis(dev.as_f64()));
        }
        Ok(basis)
    }

    pub fn dimension(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[FieldProfile<T>] {
        &self.modes
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> Result<T> {
        let mut worst = T::zero();
        for (a, p) in self.modes.iter().enumerate() {
            for (b, q) in self.modes.iter().enumerate().skip(a) {
                let g = p.overlap(q)?;
                let target = if a == b { T::one() } else { T::zero() };
                worst = worst.max((g - Complex::new(target, T::zero())).norm());
            }
        }
        Ok(worst)
    }

    /// `Σ_b |<b, w>|²` for a unit-norm `w`.
    pub fn parallel_fraction(&self, w: &FieldProfile<T>) -> Result<T> {
        self.modes
            .iter()
            .try_fold(T::zero(), |acc, b| Ok(acc + b.overlap(w)?.norm_sqr()))
    }

    /// Real part of `<a|Π|b>` for the projector `Π` onto the subspace.
    pub fn projected_overlap(&self, a: &FieldProfile<T>, b: &FieldProfile<T>) -> Result<T> {
        self.modes.iter().try_fold(T::zero(), |acc, m| {
            Ok(acc + (m.overlap(a)?.conj() * m.overlap(b)?).re)
        })
    }
}

/// Gram–Schmidt (two passes) over the given modes.
pub fn build_squeezed_subspace<T: Scalar>(modes: &[FieldProfile<T>]) -> Result<SqueezedBasis<T>> {
    let tol = T::lit(RANK_TOLERANCE);
    let mut basis: Vec<FieldProfile<T>> = Vec::new();
    for m in modes {
        let norm = m.photon_number().sqrt();
        if !(norm > T::zero()) {
            continue;
        }
        let mut v = m.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.overlap(&v)?;
                let amplitude = v
                    .amplitude()
                    .iter()
                    .zip(b.amplitude())
                    .map(|(&x, &y)| x - y * c)
                    .collect();
                v = FieldProfile::new(*v.grid(), amplitude)?;
            }
        }
        let residual = v.photon_number().sqrt();
        if residual > tol * norm {
            basis.push(v.normalize(T::one())?);
        }
    }
    if basis.is_empty() {
        return Err(Error::RankCollapse);
    }
    Ok(SqueezedBasis { modes: basis })
}

/// `f² N_inc <δX²>` for a noise mode.
pub fn quantum_variance<T: Scalar>(
    mode: &NoiseMode<T>,
    params: &NoiseParams<T>,
    basis: &SqueezedBasis<T>,
) -> Result<T> {
    let p = basis.parallel_fraction(&mode.profile)?;
    Ok(mode.shot_variance() * quadrature_variance(p, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget<T> {
    pub disc_sequence: String,
    pub gain_set: String,
    pub mean: T,
    pub var_classical: T,
    pub var_quantum: T,
    pub var_total: T,
    pub parallel_fraction: T,
}

impl<T: Scalar> NoiseBudget<T> {
    pub fn sigma_total(&self) -> T {
        self.var_total.sqrt()
    }
}

pub fn total_variance<T: Scalar>(
    disc_sequence: impl Into<String>,
    gain_set: impl Into<String>,
    mean: T,
    var_quantum: T,
    parallel_fraction: T,
    params: &NoiseParams<T>,
) -> NoiseBudget<T> {
    let var_classical = classical_variance(mean, params);
    NoiseBudget {
        disc_sequence: disc_sequence.into(),
        gain_set: gain_set.into(),
        mean,
        var_classical,
        var_quantum,
        var_total: var_classical + var_quantum,
        parallel_fraction,
    }
}

/// Budgets for every (disc sequence, gain set) pair.
#[derive(Debug, Clone)]
pub struct NoiseTable<T> {
    pub params: NoiseParams<T>,
    pub labels: Vec<String>,
    /// Row-major: `budgets[i * n + j]`.
    pub budgets: Vec<NoiseBudget<T>>,
    pub basis: SqueezedBasis<T>,
    pub matrix: SignalMatrix<T>,
    /// Profiles rescaled to `N_inc` detected photons.
    pub profiles: Vec<FieldProfile<T>>,
    pub gains: Vec<GainSet<T>>,
    pub array: PixelArray<T>,
}

impl<T: Scalar> NoiseTable<T> {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn budget(&self, i: usize, j: usize) -> &NoiseBudget<T> {
        &self.budgets[i * self.size() + j]
    }

    pub fn means(&self, i: usize) -> Vec<T> {
        (0..self.size()).map(|j| self.budget(i, j).mean).collect()
    }

    pub fn sigmas(&self, i: usize) -> Vec<T> {
        (0..self.size()).map(|j| self.budget(i, j).sigma_total()).collect()
    }

    /// Same table with every variance multiplied by `c`.
    pub fn scale_variances(&self, c: T) -> Self {
        let mut out = self.clone();
        for b in &mut out.budgets {
            b.var_classical *= c;
            b.var_quantum *= c;
            b.var_total *= c;
        }
        out
    }

    pub fn counts(&self, i: usize) -> &PixelCounts<T> {
        &self.matrix.rows[i].counts
    }

    /// Pixel-count covariance for disc sequence `i`, consistent with the
    /// signal variances: shot noise, squeezing and a common classical
    /// fluctuation of the incident power.
    pub fn pixel_covariance(&self, i: usize) -> Result<[[T; PIXELS]; PIXELS]> {
        let u = &self.profiles[i];
        let n = self.counts(i);
        let pieces: Vec<FieldProfile<T>> = (0..PIXELS)
            .map(|k| {
                u.map_with_x(|x, a| {
                    if self.array.pixel_of(x) == Some(k) {
                        a
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                })
            })
            .collect();
        let reduction = T::one() - self.params.squeeze_factor();
        let beta2 = self.params.excess_factor / self.params.photons;
        let mut cov = [[T::zero(); PIXELS]; PIXELS];
        for k in 0..PIXELS {
            for l in 0..PIXELS {
                let mut c = beta2 * n[k] * n[l];
                if k == l {
                    c += n[k];
                }
                if self.basis.dimension() > 0 && reduction > T::zero() {
                    let proj = self.basis.projected_overlap(&pieces[k], &pieces[l])?;
                    // pieces are sampled, counts interpolated; rescale to match
                    let scale = (n[k] * n[l]).sqrt()
                        / (pieces[k].photon_number() * pieces[l].photon_number()).sqrt();
                    c -= reduction * proj * if scale.is_finite() { scale } else { T::zero() };
                }
                cov[k][l] = c;
            }
        }
        Ok(cov)
    }

    /// CSV with header
    /// `disc_sequence,gain_set,mean,var_classical,var_quantum,var_total,sigma_total`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "disc_sequence,gain_set,mean,var_classical,var_quantum,var_total,sigma_total"
        )?;
        for b in &self.budgets {
            writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e},{:e}",
                b.disc_sequence,
                b.gain_set,
                b.mean,
                b.var_classical,
                b.var_quantum,
                b.var_total,
                b.sigma_total()
            )?;
        }
        Ok(())
    }
}

/// Builds the full budget table from one detector-plane profile per row.
///
/// Each profile is rescaled so its detected photon number equals
/// `params.photons`; gain sets are matched to each rescaled profile, and the
/// squeezed subspace is spanned by the diagonal noise modes (unless
/// `params.squeeze_db` is zero).
pub fn noise_table<T: Scalar>(
    rows: &[(String, FieldProfile<T>)],
    array: &PixelArray<T>,
    offset: T,
    params: &NoiseParams<T>,
) -> Result<NoiseTable<T>> {
    params.validate()?;
    let profiles = rows
        .iter()
        .map(|(_, u)| {
            let n = pixel_photon_numbers(u, array)?;
            let detected = n.iter().fold(T::zero(), |a, &b| a + b);
            if !(detected > T::zero()) {
                return Err(Error::ZeroEnergy);
            }
            Ok(u.scaled(Complex::new((params.photons / detected).sqrt(), T::zero())))
        })
        .collect::<Result<Vec<_>>>()?;
    let detected = rows
        .iter()
        .zip(&profiles)
        .map(|((label, _), u)| {
            Ok(DetectedProfile {
                label: label.clone(),
                members: Vec::new(),
                counts: pixel_photon_numbers(u, array)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let matrix = SignalMatrix::from_profiles(detected, offset, array)?;
    let gains: Vec<GainSet<T>> = matrix
        .rows
        .iter()
        .map(|r| solve_gains(r.label.clone(), &r.counts))
        .collect::<Result<_>>()?;
    let n = rows.len();
    let modes: Vec<NoiseMode<T>> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            noise_mode(rows[i].0.clone(), &profiles[i], &gains[j], array)
        })
        .collect::<Result<_>>()?;
    let basis = if params.squeeze_db > T::zero() {
        let diagonal: Vec<FieldProfile<T>> =
            (0..n).map(|i| modes[i * n + i].profile.clone()).collect();
        build_squeezed_subspace(&diagonal)?
    } else {
        SqueezedBasis::empty()
    };
    let budgets = modes
        .par_iter()
        .enumerate()
        .map(|(idx, mode)| {
            let (i, j) = (idx / n, idx % n);
            let mean = signal(&matrix.rows[i].counts, &gains[j]);
            let p = basis.parallel_fraction(&mode.profile)?;
            let var_quantum = mode.shot_variance() * quadrature_variance(p, params);
            Ok(total_variance(
                rows[i].0.clone(),
                rows[j].0.clone(),
                mean,
                var_quantum,
                p,
                params,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NoiseTable {
        params: *params,
        labels: rows.iter().map(|(l, _)| l.clone()).collect(),
        budgets,
        basis,
        matrix,
        profiles,
        gains,
        array: *array,
    })
}
