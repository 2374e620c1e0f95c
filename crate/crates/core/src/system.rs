//! The whole read-out chain with its default geometry: focused spot, disc,
//! lens, five-pixel detector and noise model.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::detection::{
    build_signal_matrix, detect_merged, PixelArray, SignalMatrix, DEFAULT_MERGE_TOLERANCE,
};
use crate::disc::{BitSequence, Bits};
use crate::error::{Error, Result};
use crate::field::{FieldProfile, Grid1D};
use crate::focal::{focal_line_x, radial_spot_size_86, FocalModel, FocusSpec, Illumination};
use crate::noise::{db_to_factor, noise_table, NoiseParams, NoiseTable};
use crate::propagation::{
    degeneracy_split, far_fields, DegeneracySplit, FarFieldSet, Method, PropagationSpec,
};
use crate::readout::{monte_carlo_error_rate, ErrorRateReport, ReadConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig<T> {
    pub wavelength: T,
    pub numerical_aperture: T,
    pub focal_model: FocalModel,
    /// Gaussian pupil fill relative to the rim; zero means uniform.
    pub gaussian_fill: T,
    pub bits: usize,
    /// Bit pitch in units of `w0`, half the 86% spot diameter.
    pub pitch_factor: T,
    pub disc_points: usize,
    /// Half-width of the disc grid in units of `w0`.
    pub disc_half_width: T,
    pub photons: T,
    pub focal_length: T,
    pub detector_points: usize,
    /// Detector window in units of the lens diameter.
    pub detector_span: T,
    pub method: Method,
    /// Pixel edges as fractions of the aperture radius.
    pub pixel_inner: T,
    pub pixel_outer: T,
    pub excess_db: T,
    pub squeeze_db: T,
    pub kappa: T,
    /// Lateral disc offset in units of `w0`.
    pub offset_w0: T,
}

impl<T: Scalar> Default for SystemConfig<T> {
    fn default() -> Self {
        Self {
            wavelength: T::lit(780e-9),
            numerical_aperture: T::lit(0.47),
            focal_model: FocalModel::Vectorial,
            gaussian_fill: T::lit(0.6),
            bits: 3,
            pitch_factor: T::lit(0.8),
            disc_points: 4096,
            disc_half_width: T::lit(8.0),
            photons: T::lit(25.0),
            focal_length: T::lit(crate::propagation::DEFAULT_FOCAL_LENGTH),
            detector_points: crate::propagation::DEFAULT_DETECTOR_POINTS,
            detector_span: T::lit(crate::propagation::DEFAULT_DETECTOR_SPAN),
            method: Method::Fraunhofer,
            pixel_inner: T::lit(0.4),
            pixel_outer: T::lit(0.8),
            excess_db: T::lit(10.0),
            squeeze_db: T::lit(10.0),
            kappa: T::lit(crate::readout::DEFAULT_KAPPA),
            offset_w0: T::zero(),
        }
    }
}

impl<T: Scalar> SystemConfig<T> {
    pub fn focus_spec(&self) -> Result<FocusSpec<T>> {
        let illumination = if self.gaussian_fill > T::zero() {
            Illumination::Gaussian {
                fill: self.gaussian_fill,
            }
        } else {
            Illumination::Uniform
        };
        let spec = FocusSpec::new(self.wavelength, self.numerical_aperture)?
            .with_model(self.focal_model)
            .with_illumination(illumination);
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        self.focus_spec()?;
        if self.bits == 0 || self.bits > 16 {
            return bad(format!("bits must be in 1..=16, got {}", self.bits));
        }
        if !(self.pitch_factor > T::zero() && self.pitch_factor.is_finite()) {
            return bad(format!("pitch factor must be positive, got {}", self.pitch_factor));
        }
        if !(self.disc_half_width > T::zero()) || self.disc_points < 16 {
            return bad("disc grid needs a positive width and at least 16 points".into());
        }
        if !(self.kappa > T::zero()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if !self.offset_w0.is_finite() {
            return bad("offset must be finite".into());
        }
        if !self.excess_db.is_finite() {
            return bad("classical noise level must be finite".into());
        }
        NoiseParams::new(T::zero(), self.squeeze_db, self.photons)?;
        Ok(())
    }

    /// Classical excess noise at `excess_db`, coherent light.
    pub fn classical_noise(&self) -> Result<NoiseParams<T>> {
        NoiseParams::new(db_to_factor(self.excess_db), T::zero(), self.photons)
    }

    pub fn shot_noise(&self) -> Result<NoiseParams<T>> {
        NoiseParams::shot(self.photons)
    }

    pub fn squeezed_noise(&self) -> Result<NoiseParams<T>> {
        NoiseParams::squeezed(self.squeeze_db, self.photons)
    }
}

/// A configured read-out chain.
#[derive(Debug, Clone)]
pub struct System<T> {
    pub config: SystemConfig<T>,
    pub focus: FocusSpec<T>,
    /// Half the 86% energy spot diameter.
    pub w0: T,
    pub pitch: T,
    /// Focal-plane `Ex(x, 0)`, carrying `photons` photons.
    pub incident: FieldProfile<T>,
    pub lens: PropagationSpec<T>,
    pub array: PixelArray<T>,
}

impl<T: Scalar> System<T> {
    pub fn new(config: SystemConfig<T>) -> Result<Self> {
        config.validate()?;
        let focus = config.focus_spec()?;
        let w0 = radial_spot_size_86(&focus)? * T::lit(0.5);
        let pitch = config.pitch_factor * w0;
        let grid = Grid1D::symmetric(config.disc_half_width * w0, config.disc_points)?;
        let incident = focal_line_x(&focus, grid)?.normalize(config.photons)?;
        let mut lens =
            PropagationSpec::for_aperture(config.wavelength, config.numerical_aperture, config.focal_length)?
                .with_method(config.method);
        lens.detector_points = config.detector_points;
        lens.detector_span = config.detector_span;
        lens.validate()?;
        lens.check_aperture(config.numerical_aperture)?;
        let array = PixelArray::symmetric(lens.aperture_radius(), config.pixel_inner, config.pixel_outer)?;
        Ok(Self {
            config,
            focus,
            w0,
            pitch,
            incident,
            lens,
            array,
        })
    }

    pub fn with_defaults() -> Result<Self> {
        Self::new(SystemConfig::default())
    }

    /// Offset from the configuration, in metres.
    pub fn offset(&self) -> T {
        self.config.offset_w0 * self.w0
    }

    pub fn template(&self) -> Result<BitSequence<T>> {
        BitSequence::new(Bits::new(vec![false; self.config.bits])?, self.pitch, T::zero())
    }

    pub fn sequence(&self, bits: &str, offset: T) -> Result<BitSequence<T>> {
        BitSequence::parse(bits, self.pitch, offset)
    }

    pub fn far_fields(&self, offset: T) -> Result<FarFieldSet<T>> {
        far_fields(&self.incident, &self.template()?, offset, &self.lens)
    }

    /// Same far fields through the other propagator.
    pub fn far_fields_with(&self, offset: T, method: Method) -> Result<FarFieldSet<T>> {
        far_fields(
            &self.incident,
            &self.template()?,
            offset,
            &self.lens.with_method(method),
        )
    }

    pub fn signal_matrix(&self, offset: T, merge: bool) -> Result<SignalMatrix<T>> {
        build_signal_matrix(&self.far_fields(offset)?, &self.array, merge)
    }

    pub fn degeneracy_split(&self, offset: T) -> Result<DegeneracySplit<T>> {
        degeneracy_split(&self.incident, &self.template()?, offset, &self.lens)
    }

    /// One detector-plane profile per distinguishable sequence at zero
    /// offset; mirror pairs share a row labelled `a/b`.
    pub fn distinguishable_profiles(&self) -> Result<Vec<(String, FieldProfile<T>)>> {
        let set = self.far_fields(T::zero())?;
        let rows = detect_merged(&set, &self.array, T::lit(DEFAULT_MERGE_TOLERANCE))?;
        rows.into_iter()
            .map(|r| {
                let p = set
                    .get(&r.members[0])
                    .ok_or_else(|| Error::InvalidBits(format!("no far field for {}", r.label)))?;
                Ok((r.label, p.clone()))
            })
            .collect()
    }

    pub fn noise_table(&self, params: &NoiseParams<T>) -> Result<NoiseTable<T>> {
        noise_table(&self.distinguishable_profiles()?, &self.array, T::zero(), params)
    }

    pub fn error_rates(&self, params: &NoiseParams<T>, read: &ReadConfig) -> Result<ErrorRateReport> {
        monte_carlo_error_rate(&self.noise_table(params)?, read)
    }

    /// Reflected disc-plane field for one sequence.
    pub fn reflected(&self, seq: &BitSequence<T>) -> Result<FieldProfile<T>> {
        let mask = crate::disc::mask_from_bits(seq, *self.incident.grid())?;
        crate::disc::reflect(&self.incident, &mask)
    }

    /// `Ex` scaled so its peak is one; used for display only.
    pub fn incident_peak_normalized(&self) -> FieldProfile<T> {
        let peak = self
            .incident
            .amplitude()
            .iter()
            .fold(T::zero(), |a, v| a.max(v.norm()));
        self.incident
            .scaled(Complex::new(T::one() / peak, T::zero()))
    }
}
