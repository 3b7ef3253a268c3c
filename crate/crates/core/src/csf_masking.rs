//! Neural contrast sensitivity and contrast masking.
//!
//! Band coefficients of the retinal response are scaled by the contrast
//! sensitivity at the band's peak frequency and the local adaptation
//! luminance, which puts them in detection-threshold units. A divisive
//! normalization transducer then compresses them according to the masking
//! activity pooled from the same band, its sibling orientations and the
//! neighbouring scales.
//!
//! The shipped sensitivity constants are an uncalibrated approximation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VdpError};
use crate::pyramid::{BandIndex, BandPyramid};
use crate::raster::{convolve_separable_mirror, gaussian_kernel, Plane};

/// Parameters of the contrast sensitivity function
/// `S(f, L) = s_peak(L) · g(f / f_peak(L))` with
///
/// * `g(x) = x^p · exp(p (1 - x^r) / r)` (unit peak at `x = 1`),
/// * `s_peak(L) = peak_sensitivity / (1 + (sensitivity_knee / L)^sensitivity_exponent)`,
/// * `f_peak(L) = peak_frequency / (1 + (frequency_knee / L)^frequency_exponent)`,
///
/// where `p` is `low_frequency_rolloff` and `r` is `high_frequency_exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsfParams {
    pub peak_sensitivity: f64,
    /// cycles per degree, reached at high luminance.
    pub peak_frequency: f64,
    pub low_frequency_rolloff: f64,
    pub high_frequency_exponent: f64,
    /// cd/m².
    pub sensitivity_knee: f64,
    pub sensitivity_exponent: f64,
    /// cd/m².
    pub frequency_knee: f64,
    pub frequency_exponent: f64,
}

impl CsfParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("peak_sensitivity", self.peak_sensitivity),
            ("peak_frequency", self.peak_frequency),
            ("low_frequency_rolloff", self.low_frequency_rolloff),
            ("high_frequency_exponent", self.high_frequency_exponent),
            ("sensitivity_knee", self.sensitivity_knee),
            ("sensitivity_exponent", self.sensitivity_exponent),
            ("frequency_knee", self.frequency_knee),
            ("frequency_exponent", self.frequency_exponent),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(VdpError::InvalidParameter(format!(
                    "csf_params.{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// The same function with every sensitivity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> CsfParams {
        CsfParams {
            peak_sensitivity: self.peak_sensitivity * factor,
            ..*self
        }
    }
}

#[inline]
fn sensitivity(f: f64, l: f64, c: &CsfParams) -> f64 {
    let s_peak = c.peak_sensitivity / (1.0 + (c.sensitivity_knee / l).powf(c.sensitivity_exponent));
    let f_peak = c.peak_frequency / (1.0 + (c.frequency_knee / l).powf(c.frequency_exponent));
    let x = f / f_peak;
    let (p, r) = (c.low_frequency_rolloff, c.high_frequency_exponent);
    s_peak * (p * x.ln() + p * (1.0 - x.powf(r)) / r).exp()
}

/// Contrast sensitivity at `frequency` (cycles per degree) and adaptation
/// luminance `luminance` (cd/m²).
pub fn csf_sensitivity(frequency: f64, luminance: f64, params: &CsfParams) -> Result<f64> {
    if !(frequency > 0.0 && frequency.is_finite()) {
        return Err(VdpError::OutOfRange {
            value: frequency,
            range: "(0, inf) cycles/degree",
        });
    }
    if !(luminance > 0.0 && luminance.is_finite()) {
        return Err(VdpError::OutOfRange {
            value: luminance,
            range: "(0, inf) cd/m^2",
        });
    }
    Ok(sensitivity(frequency, luminance, params))
}

/// Frequency used for the sensitivity of a band: the level peak, or for the
/// residual half the coarsest peak.
pub fn band_frequency(pyramid: &BandPyramid, index: BandIndex) -> f64 {
    let peaks = pyramid.peak_frequencies();
    match index {
        BandIndex::Oriented { level, .. } => peaks[level],
        BandIndex::Residual => peaks[peaks.len() - 1] / 2.0,
    }
}

/// Adaptation luminance at the resolution of every level (and, last, of the
/// residual): geometric means over the decimation blocks of the mirror
/// extended plane.
pub fn adaptation_levels(adaptation: &Plane, pyramid: &BandPyramid) -> Result<Vec<Plane>> {
    if adaptation.dims() != pyramid.image_dims() {
        return Err(VdpError::DimensionMismatch(format!(
            "adaptation plane is {:?}, pyramid image is {:?}",
            adaptation.dims(),
            pyramid.image_dims()
        )));
    }
    if let Some(&bad) = adaptation.as_slice().iter().find(|v| v.is_nan() || **v <= 0.0) {
        return Err(VdpError::OutOfRange {
            value: bad,
            range: "(0, inf) cd/m^2",
        });
    }
    let (ew, eh) = pyramid.extended_dims();
    let log = adaptation.extend_mirror(ew, eh).map(f64::ln);
    Ok((0..=pyramid.level_count())
        .map(|k| log.block_mean(1 << k).map(f64::exp))
        .collect())
}

/// Scales every coefficient by the sensitivity of its band at the local
/// adaptation luminance, giving threshold units.
pub fn normalize_by_csf(pyramid: &BandPyramid, adaptation: &Plane, csf: &CsfParams) -> Result<BandPyramid> {
    csf.validate()?;
    let levels = adaptation_levels(adaptation, pyramid)?;
    normalize_with_levels(pyramid, &levels, csf)
}

/// [`normalize_by_csf`] with precomputed [`adaptation_levels`].
pub fn normalize_with_levels(pyramid: &BandPyramid, levels: &[Plane], csf: &CsfParams) -> Result<BandPyramid> {
    apply_sensitivity(pyramid, &sensitivity_levels(pyramid, levels, csf)?)
}

/// Sensitivity at every sample of every level (and, last, the residual),
/// from [`adaptation_levels`].
pub fn sensitivity_levels(pyramid: &BandPyramid, levels: &[Plane], csf: &CsfParams) -> Result<Vec<Plane>> {
    let count = pyramid.level_count();
    if levels.len() != count + 1 {
        return Err(VdpError::DimensionMismatch(
            "adaptation levels do not match the pyramid".into(),
        ));
    }
    Ok(levels
        .par_iter()
        .enumerate()
        .map(|(k, la)| {
            let index = if k < count {
                BandIndex::Oriented {
                    level: k,
                    orientation: 0,
                }
            } else {
                BandIndex::Residual
            };
            let f = band_frequency(pyramid, index);
            la.map(|l| sensitivity(f, l, csf))
        })
        .collect())
}

/// Multiplies every band by the [`sensitivity_levels`] of its level.
pub fn apply_sensitivity(pyramid: &BandPyramid, sensitivity: &[Plane]) -> Result<BandPyramid> {
    if sensitivity.len() != pyramid.level_count() + 1 {
        return Err(VdpError::DimensionMismatch(
            "sensitivity levels do not match the pyramid".into(),
        ));
    }
    pyramid.map_bands(|index, band| {
        let s = match index {
            BandIndex::Oriented { level, .. } => &sensitivity[level],
            BandIndex::Residual => &sensitivity[pyramid.level_count()],
        };
        band.zip_map(s, |c, s| c * s)
    })
}

/// Which image the masking signal is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskingSource {
    /// Content shared by both images: per coefficient, the smaller magnitude
    /// when test and reference agree in sign, zero otherwise. Symmetric in
    /// the two images.
    MutualMin,
    /// The reference image alone.
    Reference,
}

/// Constants of the masking transducer
/// `r(c, m) = sign(c) |c|^p / (σ^q + m^q)^γ` and of the activity pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskingParams {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub sigma: f64,
    /// Weight of sibling orientations at the same scale.
    pub orientation_weight: f64,
    /// Weight of the same orientation one scale finer and one coarser.
    pub scale_weight: f64,
    /// Gaussian σ of the spatial activity pool, in band samples.
    pub pooling_sigma: f64,
    pub source: MaskingSource,
}

impl MaskingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 1.0 && self.p >= self.q && self.p.is_finite()) {
            return Err(VdpError::InvalidParameter(format!(
                "masking_params need p >= q >= 1, got p = {}, q = {}",
                self.p, self.q
            )));
        }
        if !(self.sigma > 0.0 && self.gamma > 0.0) {
            return Err(VdpError::InvalidParameter(
                "masking_params.sigma and masking_params.gamma must be positive".into(),
            ));
        }
        if !(self.orientation_weight >= 0.0 && self.scale_weight >= 0.0 && self.pooling_sigma >= 0.0) {
            return Err(VdpError::InvalidParameter(
                "masking_params weights and pooling_sigma must be non-negative".into(),
            ));
        }
        Ok(())
    }

    fn denominator(&self, mask: f64) -> f64 {
        (self.sigma.powf(self.q) + mask.max(0.0).powf(self.q)).powf(self.gamma)
    }
}

/// Transducer response to threshold-unit contrast `c` under masking activity
/// `mask` (negative activity is treated as zero).
#[inline]
pub fn masking_transducer(c: f64, mask: f64, params: &MaskingParams) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    c.signum() * c.abs().powf(params.p) / params.denominator(mask)
}

/// Derivative of [`masking_transducer`] with respect to `c`.
#[inline]
pub fn masking_transducer_derivative(c: f64, mask: f64, params: &MaskingParams) -> f64 {
    let p = params.p;
    let slope = if p == 1.0 { 1.0 } else { p * c.abs().powf(p - 1.0) };
    slope / params.denominator(mask)
}

type Magnitudes = Vec<Vec<Plane>>;

fn oriented_magnitudes(pyramid: &BandPyramid) -> Magnitudes {
    (0..pyramid.level_count())
        .map(|k| pyramid.level(k).iter().map(|b| b.map(f64::abs)).collect())
        .collect()
}

/// Sign-coherent shared magnitude `(|t| + |r| - |t - r|) / 2`.
fn shared_magnitudes(test: &BandPyramid, reference: &BandPyramid) -> Magnitudes {
    (0..test.level_count())
        .map(|k| {
            test.level(k)
                .iter()
                .zip(reference.level(k))
                .map(|(t, r)| {
                    t.zip_map(r, |a, b| if a * b > 0.0 { a.abs().min(b.abs()) } else { 0.0 })
                        .expect("congruent pyramids")
                })
                .collect()
        })
        .collect()
}

fn pooled_activity(mags: &Magnitudes, level: usize, orientation: usize, params: &MaskingParams) -> Plane {
    let own = &mags[level][orientation];
    let mut act = own.clone();
    if params.orientation_weight > 0.0 {
        for (j, sib) in mags[level].iter().enumerate() {
            if j != orientation {
                act = act
                    .zip_map(sib, |a, s| a + params.orientation_weight * s)
                    .expect("same level");
            }
        }
    }
    if params.scale_weight > 0.0 {
        if level > 0 {
            let finer = mags[level - 1][orientation].block_mean(2);
            act = act
                .zip_map(&finer, |a, s| a + params.scale_weight * s)
                .expect("finer level");
        }
        if level + 1 < mags.len() {
            let coarser = mags[level + 1][orientation].upsample_bilinear(2);
            act = act
                .zip_map(&coarser, |a, s| a + params.scale_weight * s)
                .expect("coarser level");
        }
    }
    convolve_separable_mirror(&act, &gaussian_kernel(params.pooling_sigma))
}

/// Masking activity of one band: pooled coefficient magnitudes of the band,
/// its sibling orientations and the same orientation at adjacent scales,
/// blurred spatially. The residual's activity is its own blurred magnitude.
pub fn masking_activity(pyramid: &BandPyramid, index: BandIndex, params: &MaskingParams) -> Result<Plane> {
    pyramid.get(index)?;
    match index {
        BandIndex::Oriented { level, orientation } => Ok(pooled_activity(
            &oriented_magnitudes(pyramid),
            level,
            orientation,
            params,
        )),
        BandIndex::Residual => Ok(convolve_separable_mirror(
            &pyramid.residual().map(f64::abs),
            &gaussian_kernel(params.pooling_sigma),
        )),
    }
}

/// Signed per-coefficient perceptual difference in threshold units, shaped
/// like the pyramids it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptualDifferencePyramid {
    bands: BandPyramid,
}

impl PerceptualDifferencePyramid {
    /// Wraps difference values already in threshold units.
    pub fn from_bands(bands: BandPyramid) -> Self {
        PerceptualDifferencePyramid { bands }
    }

    pub fn bands(&self) -> &BandPyramid {
        &self.bands
    }

    pub fn into_bands(self) -> BandPyramid {
        self.bands
    }

    pub fn is_zero(&self) -> bool {
        self.bands.indices().into_iter().all(|i| {
            self.bands
                .get(i)
                .expect("own index")
                .as_slice()
                .iter()
                .all(|&v| v == 0.0)
        })
    }
}

/// Perceptual difference of two pyramids already in threshold units.
///
/// Oriented bands take `r(c_test, m) - r(c_ref, m)` with the masking activity
/// `m` chosen by [`MaskingParams::source`]; the residual, which carries the
/// mean response level, is compared linearly.
pub fn masked_difference(
    test: &BandPyramid,
    reference: &BandPyramid,
    params: &MaskingParams,
) -> Result<PerceptualDifferencePyramid> {
    params.validate()?;
    test.ensure_congruent(reference)?;
    let mags = match params.source {
        MaskingSource::MutualMin => shared_magnitudes(test, reference),
        MaskingSource::Reference => oriented_magnitudes(reference),
    };
    let residual_scale = params.denominator(0.0);
    let bands = test.map_bands(|index, t| {
        let r = reference.get(index)?;
        match index {
            BandIndex::Oriented { level, orientation } => {
                let act = pooled_activity(&mags, level, orientation, params);
                let mut out = Plane::zeros(t.width(), t.height());
                for (i, d) in out.as_mut_slice().iter_mut().enumerate() {
                    let (ct, cr, m) = (t.as_slice()[i], r.as_slice()[i], act.as_slice()[i]);
                    *d = if ct == cr {
                        0.0
                    } else {
                        masking_transducer(ct, m, params) - masking_transducer(cr, m, params)
                    };
                }
                Ok(out)
            }
            BandIndex::Residual => t.zip_map(r, |a, b| (a - b) / residual_scale),
        }
    })?;
    Ok(PerceptualDifferencePyramid { bands })
}

/// Normalizes both pyramids by the CSF at the shared adaptation luminance and
/// returns their masked perceptual difference.
pub fn band_difference(
    test: &BandPyramid,
    reference: &BandPyramid,
    adaptation: &Plane,
    csf: &CsfParams,
    masking: &MaskingParams,
) -> Result<PerceptualDifferencePyramid> {
    test.ensure_congruent(reference)?;
    let levels = adaptation_levels(adaptation, reference)?;
    let tn = normalize_with_levels(test, &levels, csf)?;
    let rn = normalize_with_levels(reference, &levels, csf)?;
    masked_difference(&tn, &rn, masking)
}
