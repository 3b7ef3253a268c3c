//! Prediction heads: visibility maps, detection probability, quality in JOD
//! units and contrast distortion maps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csf_masking::{masking_transducer, MaskingParams, PerceptualDifferencePyramid};
use crate::error::{Result, VdpError};
use crate::pyramid::{BandIndex, BandPyramid};
use crate::raster::Plane;

/// Weibull psychometric function `P = 1 - exp(-(|D| / alpha)^beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsychometricParams {
    pub alpha: f64,
    pub beta: f64,
}

impl PsychometricParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(VdpError::InvalidParameter(
                "psychometric_params.alpha and beta must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// How the visibility map is reduced to a single detection probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionReduction {
    /// Largest probability in the map.
    Max,
    /// Probability summation over all pixels.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingParams {
    /// Minkowski exponent of the distortion pool.
    pub kappa: f64,
    /// Weight of every oriented band.
    pub band_weight: f64,
    /// Weight of the low-pass residual.
    pub residual_weight: f64,
    pub detection: DetectionReduction,
}

impl PoolingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(VdpError::InvalidParameter(format!(
                "pooling_params.kappa must be >= 1, got {}",
                self.kappa
            )));
        }
        if !(self.band_weight >= 0.0 && self.residual_weight >= 0.0) {
            return Err(VdpError::InvalidParameter(
                "pooling_params weights must be non-negative".into(),
            ));
        }
        Ok(())
    }

    fn weight(&self, index: BandIndex) -> f64 {
        match index {
            BandIndex::Oriented { .. } => self.band_weight,
            BandIndex::Residual => self.residual_weight,
        }
    }
}

/// Regression from pooled distortion `E` to quality:
/// `jod = 10 - a · ln(1 + b · E)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JodParams {
    pub a: f64,
    pub b: f64,
}

impl JodParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0 && self.b >= 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(VdpError::InvalidParameter(
                "jod_regression.a and b must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Highest quality on the JOD scale.
pub const MAX_JOD: f64 = 10.0;

/// Probability of detecting a difference of `d` threshold units.
#[inline]
pub fn psychometric(d: f64, params: &PsychometricParams) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    -(-(d.abs() / params.alpha).powf(params.beta)).exp_m1()
}

/// Probability that at least one of several independent detectors fires.
pub fn probability_summation(probabilities: impl IntoIterator<Item = f64>) -> f64 {
    1.0 - probabilities.into_iter().map(|p| 1.0 - p).product::<f64>()
}

/// Per-pixel detection probability at input resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityMap {
    pub probability: Plane,
}

impl VisibilityMap {
    pub fn max(&self) -> f64 {
        self.probability.max()
    }
}

/// Resamples a band-resolution plane to the image grid.
fn to_image(plane: &Plane, pyramid: &BandPyramid, index: BandIndex) -> Plane {
    let (w, h) = pyramid.image_dims();
    plane.upsample_bilinear(pyramid.scale_factor(index)).crop(w, h)
}

/// Combines per-band probability planes (band resolution) into one image map
/// by probability summation.
fn summed_map<F>(pyramid: &BandPyramid, band_probability: F) -> Plane
where
    F: Fn(BandIndex) -> Option<Plane> + Sync,
{
    let (w, h) = pyramid.image_dims();
    let complements: Vec<Plane> = pyramid
        .indices()
        .into_par_iter()
        .filter_map(|index| {
            band_probability(index).map(|p| to_image(&p, pyramid, index).map(|v| 1.0 - v.clamp(0.0, 1.0)))
        })
        .collect();
    let mut survive = Plane::filled(w, h, 1.0);
    for c in &complements {
        survive = survive.zip_map(c, |a, b| a * b).expect("image size");
    }
    survive.map(|s| (1.0 - s).clamp(0.0, 1.0))
}

/// Probability of noticing the difference at each pixel.
pub fn visibility_map(diff: &PerceptualDifferencePyramid, params: &PsychometricParams) -> VisibilityMap {
    let bands = diff.bands();
    let probability = summed_map(bands, |index| {
        Some(bands.get(index).expect("own index").map(|d| psychometric(d, params)))
    });
    VisibilityMap { probability }
}

/// Single-valued probability of detecting any difference.
pub fn detection_probability(
    diff: &PerceptualDifferencePyramid,
    psychometric: &PsychometricParams,
    reduction: DetectionReduction,
) -> f64 {
    reduce_visibility(&visibility_map(diff, psychometric), reduction)
}

pub fn reduce_visibility(map: &VisibilityMap, reduction: DetectionReduction) -> f64 {
    match reduction {
        DetectionReduction::Max => map.max(),
        DetectionReduction::Pooled => probability_summation(map.probability.as_slice().iter().copied()),
    }
}

/// Pooled distortion `E = (Σ_b w_b · mean |D_b|^κ)^(1/κ)`.
pub fn pooled_distortion(diff: &PerceptualDifferencePyramid, params: &PoolingParams) -> f64 {
    let bands = diff.bands();
    let kappa = params.kappa;
    let total: f64 = bands
        .indices()
        .into_iter()
        .map(|index| {
            let plane = bands.get(index).expect("own index");
            let mean = plane.as_slice().iter().map(|d| d.abs().powf(kappa)).sum::<f64>() / plane.len() as f64;
            params.weight(index) * mean
        })
        .sum();
    total.powf(1.0 / kappa)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub jod: f64,
}

/// Maps pooled distortion to JOD.
pub fn jod_from_distortion(distortion: f64, params: &JodParams) -> f64 {
    MAX_JOD - params.a * (params.b * distortion).ln_1p()
}

/// Quality of the test image in JOD units; 10 for no visible difference.
pub fn quality_jod(diff: &PerceptualDifferencePyramid, pooling: &PoolingParams, jod: &JodParams) -> QualityScore {
    QualityScore {
        jod: jod_from_distortion(pooled_distortion(diff, pooling), jod),
    }
}

/// Maps of contrast lost, amplified and reversed in the test image.
#[derive(Debug, Clone, PartialEq)]
pub struct CivdmResult {
    pub loss: Plane,
    pub amplification: Plane,
    pub reversal: Plane,
}

/// Per-band contrast distortion probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct CivdmBands {
    pub loss: Plane,
    pub amplification: Plane,
    pub reversal: Plane,
}

/// Classifies one band. Visibilities come from the unmasked transducer of
/// each image's threshold-unit coefficients: `loss = max(P_ref - P_test, 0)`,
/// `amplification = max(P_test - P_ref, 0)` and
/// `reversal = P_ref · P_test` where the coefficients differ in sign.
pub fn civdm_band(
    test: &Plane,
    reference: &Plane,
    masking: &MaskingParams,
    psych: &PsychometricParams,
) -> Result<CivdmBands> {
    test.ensure_same_dims(reference)?;
    let visible = |c: f64| psychometric(masking_transducer(c, 0.0, masking), psych);
    let n = test.len();
    let (mut loss, mut amp, mut rev) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let (ct, cr) = (test.as_slice()[i], reference.as_slice()[i]);
        if ct == cr {
            continue;
        }
        let (pt, pr) = (visible(ct), visible(cr));
        loss[i] = (pr - pt).max(0.0);
        amp[i] = (pt - pr).max(0.0);
        if ct * cr < 0.0 {
            rev[i] = pr * pt;
        }
    }
    let (w, h) = test.dims();
    Ok(CivdmBands {
        loss: Plane::new(w, h, loss)?,
        amplification: Plane::new(w, h, amp)?,
        reversal: Plane::new(w, h, rev)?,
    })
}

/// Contrast distortion maps from the threshold-unit pyramids of the test and
/// reference images. Oriented bands are classified and combined per pixel by
/// probability summation.
pub fn civdm(
    test: &BandPyramid,
    reference: &BandPyramid,
    masking: &MaskingParams,
    psych: &PsychometricParams,
) -> Result<CivdmResult> {
    test.ensure_congruent(reference)?;
    let oriented: Vec<BandIndex> = test
        .indices()
        .into_iter()
        .filter(|i| matches!(i, BandIndex::Oriented { .. }))
        .collect();
    let per_band: Vec<(BandIndex, CivdmBands)> = oriented
        .par_iter()
        .map(|&index| {
            Ok((
                index,
                civdm_band(test.get(index)?, reference.get(index)?, masking, psych)?,
            ))
        })
        .collect::<Result<_>>()?;
    let pick = |f: fn(&CivdmBands) -> &Plane| {
        summed_map(test, |index| {
            per_band.iter().find(|(i, _)| *i == index).map(|(_, b)| f(b).clone())
        })
    };
    Ok(CivdmResult {
        loss: pick(|b| &b.loss),
        amplification: pick(|b| &b.amplification),
        reversal: pick(|b| &b.reversal),
    })
}
