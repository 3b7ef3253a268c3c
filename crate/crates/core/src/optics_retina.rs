//! Optical and retinal pathway: intra-ocular glare, pupil size, local
//! adaptation and the photoreceptor response.
//!
//! The pathway works on luminance. Glare is a linear filter applied with
//! mirror boundaries, so it preserves mean luminance. The adaptation state is
//! shared by the test and reference images (it is computed from their
//! geometric mean), which keeps the model symmetric in its two inputs.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::display_model::RadianceMap;
use crate::error::{Result, VdpError};
use crate::raster::Plane;
use crate::spectral::MirrorFilter;

/// Smallest luminance admitted into the retinal model, cd/m².
pub const MIN_LUMINANCE: f64 = 1e-5;

/// Calibrated constants of the optical and retinal pathway.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticsParams {
    /// Gaussian σ of the local adaptation pool, visual degrees.
    pub adaptation_sigma_deg: f64,
    /// Adapting field area for the pupil model, deg².
    pub pupil_field_area_deg2: f64,
    /// Age at which the pupil model's age term vanishes.
    pub pupil_reference_age: f64,
    /// Observer age for which the model is calibrated; older or younger eyes
    /// are simulated relative to it.
    pub observer_reference_age: f64,
    /// Exponent of the low-luminance sensitivity loss.
    pub photoreceptor_exponent: f64,
    /// Luminance (cd/m²) where the response turns from square-root to
    /// logarithmic behaviour.
    pub photoreceptor_knee: f64,
    /// Ocular pigmentation factor of the CIE glare function
    /// (0 black, 0.5 brown, 1.0 blue-green eyes).
    pub pigmentation: f64,
}

impl OpticsParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("optics_params.adaptation_sigma_deg", self.adaptation_sigma_deg, true),
            ("optics_params.pupil_field_area_deg2", self.pupil_field_area_deg2, false),
            (
                "optics_params.photoreceptor_exponent",
                self.photoreceptor_exponent,
                false,
            ),
            ("optics_params.photoreceptor_knee", self.photoreceptor_knee, false),
        ];
        for (name, v, zero_ok) in positive {
            if !(v > 0.0 || (zero_ok && v == 0.0)) {
                return Err(VdpError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.photoreceptor_exponent > 1.0 {
            return Err(VdpError::InvalidParameter(
                "optics_params.photoreceptor_exponent must be <= 1".into(),
            ));
        }
        if self.pupil_reference_age < 0.0 || self.observer_reference_age < 0.0 || self.pigmentation < 0.0 {
            return Err(VdpError::InvalidParameter(
                "optics_params ages and pigmentation must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Intra-ocular scatter model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlareMode {
    /// Four-term exponential modulation transfer function of the eye.
    Mtf,
    /// CIE 1999 glare spread function.
    Cie99,
    /// No glare.
    Off,
}

impl FromStr for GlareMode {
    type Err = VdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mtf" => Ok(GlareMode::Mtf),
            "cie99" => Ok(GlareMode::Cie99),
            "off" | "none" => Ok(GlareMode::Off),
            _ => Err(VdpError::InvalidParameter(format!("unknown glare mode `{s}`"))),
        }
    }
}

impl fmt::Display for GlareMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GlareMode::Mtf => "mtf",
            GlareMode::Cie99 => "cie99",
            GlareMode::Off => "off",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticsConfig {
    pub glare_mode: GlareMode,
    /// Observer age, years.
    pub age: f64,
    /// Pixels per visual degree.
    pub ppd: f64,
}

impl OpticsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.age.is_finite() && self.age >= 0.0) {
            return Err(VdpError::InvalidParameter(format!(
                "age must be >= 0, got {}",
                self.age
            )));
        }
        if !(self.ppd.is_finite() && self.ppd > 0.0) {
            return Err(VdpError::InvalidParameter(format!("ppd must be > 0, got {}", self.ppd)));
        }
        Ok(())
    }
}

/// Age scaling of the narrow (core) part of the CIE glare function.
fn cie_core_age_factor(age: f64) -> f64 {
    (1.0 - 0.08 * (age / 70.0).powi(4)).max(0.0)
}

/// Age scaling of the wide (halo) part of the CIE glare function.
fn cie_halo_age_factor(age: f64) -> f64 {
    1.0 + 1.6 * (age / 70.0).powi(4)
}

/// CIE 1999 glare spread function (complete form), sr⁻¹, at `theta_deg`
/// degrees from the glare source.
pub fn cie99_gsf(theta_deg: f64, age: f64, pigmentation: f64) -> f64 {
    let t2 = theta_deg * theta_deg;
    let core = 9.2e6 / (1.0 + t2 / (0.0046 * 0.0046)).powf(1.5) + 1.5e5 / (1.0 + t2 / (0.045 * 0.045)).powf(1.5);
    let wide = 1.0 + t2 / 0.01;
    let halo = 400.0 / wide + 3e-8 * t2 + pigmentation * (1300.0 / wide.powf(1.5) + 0.8 / wide.sqrt());
    cie_core_age_factor(age) * core + cie_halo_age_factor(age) * halo + 2.5e-3 * pigmentation
}

const MTF_WEIGHTS: [f64; 4] = [0.424839, 0.572435, 0.000167576, 0.00255872];
const MTF_RATES: [f64; 4] = [0.028, 0.37, 37.5, 360.0];

/// Optical MTF of the eye at `rho_cpd` cycles per degree, unit gain at DC.
///
/// The two wide-angle scatter terms are scaled with age by the same factors
/// as the CIE glare halo (and the two sharp terms like the CIE core), relative
/// to `reference_age`.
pub fn eye_mtf(rho_cpd: f64, age: f64, reference_age: f64) -> f64 {
    let core = cie_core_age_factor(age) / cie_core_age_factor(reference_age);
    let halo = cie_halo_age_factor(age) / cie_halo_age_factor(reference_age);
    let scale = [core, core, halo, halo];
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..4 {
        let w = MTF_WEIGHTS[k] * scale[k];
        num += w * (-MTF_RATES[k] * rho_cpd).exp();
        den += w;
    }
    num / den
}

/// Frequency-domain glare filter for one image size.
#[derive(Debug, Clone, PartialEq)]
pub struct GlareFilter {
    mode: GlareMode,
    filter: MirrorFilter,
}

impl GlareFilter {
    pub fn mode(&self) -> GlareMode {
        self.mode
    }

    pub fn dc_gain(&self) -> f64 {
        self.filter.dc_gain()
    }

    pub fn image_dims(&self) -> (usize, usize) {
        self.filter.image_dims()
    }

    pub fn mirror_filter(&self) -> &MirrorFilter {
        &self.filter
    }

    pub fn apply_plane(&self, plane: &Plane) -> Result<Plane> {
        if plane.dims() != self.image_dims() {
            return Err(VdpError::DimensionMismatch(format!(
                "glare filter built for {:?}, image is {:?}",
                self.image_dims(),
                plane.dims()
            )));
        }
        Ok(self.filter.apply(plane))
    }
}

/// Pixel-integrated CIE glare function: fine supersampling near the peak.
fn cie99_pixel(dx: f64, dy: f64, ppd: f64, age: f64, pigmentation: f64) -> f64 {
    let reach = dx.abs().max(dy.abs());
    let n = if reach <= 1.0 {
        65
    } else if reach <= 3.0 {
        9
    } else {
        1
    };
    let mut acc = 0.0;
    for i in 0..n {
        let sx = dx + (i as f64 + 0.5) / n as f64 - 0.5;
        for j in 0..n {
            let sy = dy + (j as f64 + 0.5) / n as f64 - 0.5;
            acc += cie99_gsf((sx * sx + sy * sy).sqrt() / ppd, age, pigmentation);
        }
    }
    acc / (n * n) as f64
}

/// Builds the glare filter for a `width` x `height` image.
pub fn build_glare_filter(
    config: &OpticsConfig,
    width: usize,
    height: usize,
    params: &OpticsParams,
) -> Result<GlareFilter> {
    config.validate()?;
    let OpticsConfig { glare_mode, age, ppd } = *config;
    let filter = match glare_mode {
        GlareMode::Off => {
            return Err(VdpError::InvalidParameter(
                "no glare filter exists for glare mode `off`".into(),
            ))
        }
        GlareMode::Mtf => {
            let ref_age = params.observer_reference_age;
            let mut f = MirrorFilter::from_response(width, height, |fx, fy| {
                eye_mtf((fx * fx + fy * fy).sqrt() * ppd, age, ref_age)
            });
            f.pin_unit_dc();
            f
        }
        GlareMode::Cie99 => {
            let pig = params.pigmentation;
            MirrorFilter::from_kernel(width, height, |dx, dy| cie99_pixel(dx, dy, ppd, age, pig))
        }
    };
    Ok(GlareFilter {
        mode: glare_mode,
        filter,
    })
}

/// Applies glare to every channel of a radiance map.
pub fn apply_glare(radiance: &RadianceMap, filter: &GlareFilter) -> Result<RadianceMap> {
    Ok(RadianceMap {
        red: filter.apply_plane(&radiance.red)?,
        green: filter.apply_plane(&radiance.green)?,
        blue: filter.apply_plane(&radiance.blue)?,
        luminance: filter.apply_plane(&radiance.luminance)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct GlareKey {
    mode: GlareMode,
    width: usize,
    height: usize,
    age: u64,
    ppd: u64,
    ref_age: u64,
    pigmentation: u64,
}

/// Glare filters keyed by image size and optics configuration. Safe to share
/// between threads.
#[derive(Debug, Default)]
pub struct GlareCache {
    filters: RwLock<HashMap<GlareKey, Arc<GlareFilter>>>,
}

impl GlareCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(
        &self,
        config: &OpticsConfig,
        width: usize,
        height: usize,
        params: &OpticsParams,
    ) -> Result<Arc<GlareFilter>> {
        let key = GlareKey {
            mode: config.glare_mode,
            width,
            height,
            age: config.age.to_bits(),
            ppd: config.ppd.to_bits(),
            ref_age: params.observer_reference_age.to_bits(),
            pigmentation: params.pigmentation.to_bits(),
        };
        if let Some(f) = self.filters.read().expect("glare cache poisoned").get(&key) {
            return Ok(Arc::clone(f));
        }
        let built = Arc::new(build_glare_filter(config, width, height, params)?);
        let mut map = self.filters.write().expect("glare cache poisoned");
        Ok(Arc::clone(map.entry(key).or_insert(built)))
    }

    pub fn len(&self) -> usize {
        self.filters.read().expect("glare cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Pupil diameter in mm for an adapting luminance (cd/m²) and age (years).
///
/// Unified pupil-size formula for a binocular adapting field of
/// `pupil_field_area_deg2`. The age slope is never positive, so the pupil of
/// observers older than `pupil_reference_age` can only shrink (and that of
/// younger ones only grow), and the result is clamped to `[2, 9]` mm.
pub fn pupil_diameter(adapting_luminance: f64, age: f64, params: &OpticsParams) -> Result<f64> {
    if adapting_luminance.is_nan() || adapting_luminance <= 0.0 {
        return Err(VdpError::OutOfRange {
            value: adapting_luminance,
            range: "(0, inf) cd/m^2",
        });
    }
    if age.is_nan() || age < 0.0 {
        return Err(VdpError::OutOfRange {
            value: age,
            range: "[0, inf) years",
        });
    }
    Ok(pupil_diameter_unchecked(adapting_luminance, age, params))
}

fn pupil_diameter_unchecked(adapting_luminance: f64, age: f64, params: &OpticsParams) -> f64 {
    let f = (adapting_luminance * params.pupil_field_area_deg2 / 846.0).powf(0.41);
    let d_sd = 7.75 - 5.75 * f / (f + 2.0);
    let slope = (0.02132 - 0.009562 * d_sd).min(0.0);
    (d_sd + (age - params.pupil_reference_age) * slope).clamp(2.0, 9.0)
}

/// Retinal illuminance of an observer of `age`, relative to the reference
/// observer, at adapting luminance `la`. Depends only on pupil area.
pub fn age_illuminance_factor(la: f64, age: f64, params: &OpticsParams) -> f64 {
    if age == params.observer_reference_age {
        return 1.0;
    }
    let d = pupil_diameter_unchecked(la, age, params);
    let d_ref = pupil_diameter_unchecked(la, params.observer_reference_age, params);
    (d / d_ref).powi(2)
}

/// Slope of the steady-state response with respect to log luminance: the
/// relative contrast gain at luminance `l`, rising as `l^a` at low light and
/// saturating at 1 in the Weber regime.
#[inline]
pub fn luminance_gain(l: f64, params: &OpticsParams) -> f64 {
    let a = params.photoreceptor_exponent;
    let x = (l / params.photoreceptor_knee).powf(a);
    x / (1.0 + x)
}

/// Steady-state response of an eye fully adapted to `l`: the integral of
/// [`luminance_gain`] over log luminance, `ln(1 + (l / knee)^a) / a`.
#[inline]
pub fn steady_state_response(l: f64, params: &OpticsParams) -> f64 {
    let a = params.photoreceptor_exponent;
    (l / params.photoreceptor_knee).powf(a).ln_1p() / a
}

#[inline]
fn response_unchecked(l: f64, la: f64, params: &OpticsParams) -> f64 {
    steady_state_response(la, params) + luminance_gain(la, params) * (l / la).ln()
}

/// Photoreceptor response to luminance `l` when adapted to `la` (both cd/m²).
///
/// The response is tangent to the steady-state curve at `l = la`, where its
/// log-luminance slope is the contrast gain of that adaptation level, so
/// response differences approximate contrast scaled by local sensitivity.
pub fn photoreceptor_response(l: f64, la: f64, params: &OpticsParams) -> Result<f64> {
    for v in [l, la] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(VdpError::OutOfRange {
                value: v,
                range: "(0, inf) cd/m^2",
            });
        }
    }
    Ok(response_unchecked(l, la, params))
}

/// Local adaptation luminance: a Gaussian-weighted geometric mean of the
/// luminance, with σ given in visual degrees.
pub fn local_adaptation(luminance: &Plane, ppd: f64, sigma_deg: f64) -> Result<Plane> {
    if ppd.is_nan() || ppd <= 0.0 || sigma_deg.is_nan() || sigma_deg < 0.0 {
        return Err(VdpError::InvalidParameter(format!(
            "local adaptation needs ppd > 0 and sigma >= 0, got {ppd} and {sigma_deg}"
        )));
    }
    if let Some(&bad) = luminance.as_slice().iter().find(|v| v.is_nan() || **v <= 0.0) {
        return Err(VdpError::OutOfRange {
            value: bad,
            range: "(0, inf) cd/m^2",
        });
    }
    let sigma = sigma_deg * ppd;
    if sigma < 1e-3 {
        return Ok(luminance.clone());
    }
    let (w, h) = luminance.dims();
    let log_lum = luminance.map(f64::ln);
    let (lo, hi) = (log_lum.min(), log_lum.max());
    let two_s2 = 2.0 * sigma * sigma;
    let kernel = MirrorFilter::from_kernel(w, h, |dx, dy| (-(dx * dx + dy * dy) / two_s2).exp());
    Ok(kernel.apply(&log_lum).map(|v| v.clamp(lo, hi).exp()))
}

/// Per-pixel photoreceptor response and the adaptation it was computed at.
#[derive(Debug, Clone, PartialEq)]
pub struct RetinalResponseMap {
    pub response: Plane,
    /// cd/m², strictly positive.
    pub adaptation_luminance: Plane,
}

impl RetinalResponseMap {
    pub fn dims(&self) -> (usize, usize) {
        self.response.dims()
    }
}

/// Runs the optical and retinal pathway on a test/reference luminance pair.
///
/// Both images are blurred by glare, then share one adaptation map: the
/// local adaptation of their geometric mean. Observer age scales retinal
/// illuminance through the pupil model before the photoreceptor response.
pub fn retinal_pair(
    test: &Plane,
    reference: &Plane,
    config: &OpticsConfig,
    params: &OpticsParams,
    cache: &GlareCache,
) -> Result<(RetinalResponseMap, RetinalResponseMap)> {
    config.validate()?;
    test.ensure_same_dims(reference)?;
    let floor = |p: &Plane| p.map(|v| v.max(MIN_LUMINANCE));
    let (mut lt, mut lr) = (floor(test), floor(reference));
    if config.glare_mode != GlareMode::Off {
        let (w, h) = test.dims();
        let glare = cache.get(config, w, h, params)?;
        lt = floor(&glare.apply_plane(&lt)?);
        lr = floor(&glare.apply_plane(&lr)?);
    }

    let mean = lt.zip_map(&lr, |a, b| (a * b).sqrt())?;
    let mut adapt = local_adaptation(&mean, config.ppd, params.adaptation_sigma_deg)?;

    if config.age != params.observer_reference_age {
        let gain = adapt.map(|la| age_illuminance_factor(la, config.age, params));
        lt = lt.zip_map(&gain, |l, g| l * g)?;
        lr = lr.zip_map(&gain, |l, g| l * g)?;
        adapt = adapt.zip_map(&gain, |l, g| l * g)?;
    }

    let respond = |l: &Plane| l.zip_map(&adapt, |l, la| response_unchecked(l, la, params));
    let rt = respond(&lt)?;
    let rr = respond(&lr)?;
    if rt.as_slice().iter().chain(rr.as_slice()).any(|v| !v.is_finite()) {
        return Err(VdpError::Numeric("non-finite photoreceptor response".into()));
    }
    Ok((
        RetinalResponseMap {
            response: rt,
            adaptation_luminance: adapt.clone(),
        },
        RetinalResponseMap {
            response: rr,
            adaptation_luminance: adapt,
        },
    ))
}
