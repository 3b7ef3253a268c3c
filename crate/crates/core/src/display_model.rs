//! Conversion of display-encoded frames into absolute photometric units.
//!
//! Each linear channel is `EOTF(I) + E_amb * k_refl / pi`: the display's
//! emitted light plus ambient light reflected off the screen, modelled as a
//! Lambertian reflector.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VdpError};
use crate::imgio::{DisplayEncodedFrame, Encoding};
use crate::raster::Plane;

/// SMPTE ST 2084 constants.
pub const PQ_M1: f64 = 2610.0 / 16384.0;
pub const PQ_M2: f64 = 2523.0 / 4096.0 * 128.0;
pub const PQ_C1: f64 = 3424.0 / 4096.0;
pub const PQ_C2: f64 = 2413.0 / 4096.0 * 32.0;
pub const PQ_C3: f64 = 2392.0 / 4096.0 * 32.0;
/// Luminance of PQ code value 1.0, cd/m².
pub const PQ_PEAK: f64 = 10000.0;

/// PQ code value in `[0, 1]` to luminance in cd/m².
///
/// No range checking; see [`pq_decode_checked`].
#[inline]
pub fn pq_decode(v: f64) -> f64 {
    let p = v.powf(1.0 / PQ_M2);
    let num = (p - PQ_C1).max(0.0);
    let den = PQ_C2 - PQ_C3 * p;
    PQ_PEAK * (num / den).powf(1.0 / PQ_M1)
}

/// [`pq_decode`] with the out-of-range policy applied.
pub fn pq_decode_checked(v: f64, policy: RangePolicy) -> Result<f64> {
    Ok(pq_decode(policy.admit(v)?))
}

/// Luminance in cd/m² to PQ code value.
///
/// Zero maps to code value 0 exactly; the closed form would give
/// `C1^M2 ≈ 7.3e-7`, which decodes to zero anyway.
pub fn pq_encode(luminance: f64) -> Result<f64> {
    if !(0.0..=PQ_PEAK).contains(&luminance) {
        return Err(VdpError::OutOfRange {
            value: luminance,
            range: "[0, 10000] cd/m^2",
        });
    }
    if luminance == 0.0 {
        return Ok(0.0);
    }
    let y = (luminance / PQ_PEAK).powf(PQ_M1);
    Ok(((PQ_C1 + PQ_C2 * y) / (1.0 + PQ_C3 * y)).powf(PQ_M2))
}

/// What to do with encoded values outside `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangePolicy {
    /// Clamp and log a warning.
    #[default]
    Tolerant,
    /// Reject.
    Strict,
}

impl RangePolicy {
    fn admit(self, v: f64) -> Result<f64> {
        if v.is_nan() {
            return Err(VdpError::OutOfRange {
                value: v,
                range: "[0, 1]",
            });
        }
        if (0.0..=1.0).contains(&v) {
            return Ok(v);
        }
        match self {
            RangePolicy::Tolerant => {
                warn!("encoded value {v} outside [0, 1]; clamping");
                Ok(v.clamp(0.0, 1.0))
            }
            RangePolicy::Strict => Err(VdpError::OutOfRange {
                value: v,
                range: "[0, 1]",
            }),
        }
    }
}

/// Electro-optical transfer function of the simulated display.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eotf {
    /// SMPTE ST 2084; absolute, ignores peak and black level.
    Pq,
    /// `(peak - black) * V^2.2 + black`.
    Gamma22Srgb,
}

impl Eotf {
    fn name(self) -> &'static str {
        match self {
            Eotf::Pq => "pq",
            Eotf::Gamma22Srgb => "gamma22_srgb",
        }
    }

    fn accepts(self, encoding: Encoding) -> bool {
        matches!(
            (self, encoding),
            (_, Encoding::Linear) | (Eotf::Pq, Encoding::Pq) | (Eotf::Gamma22Srgb, Encoding::Srgb)
        )
    }
}

/// Colour primaries of the linear RGB signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Primaries {
    Bt2020,
    /// sRGB / BT.709.
    Srgb,
}

impl Primaries {
    /// Luminance weights `(w_r, w_g, w_b)`.
    pub fn luminance_weights(self) -> [f64; 3] {
        match self {
            Primaries::Bt2020 => [0.2627, 0.6780, 0.0593],
            Primaries::Srgb => [0.2126, 0.7152, 0.0722],
        }
    }
}

impl FromStr for Primaries {
    type Err = VdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bt2020" | "bt.2020" | "rec2020" => Ok(Primaries::Bt2020),
            "srgb" | "bt709" | "bt.709" | "rec709" => Ok(Primaries::Srgb),
            _ => Err(VdpError::InvalidParameter(format!("unknown primaries `{s}`"))),
        }
    }
}

impl fmt::Display for Primaries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Primaries::Bt2020 => "bt2020",
            Primaries::Srgb => "srgb",
        })
    }
}

/// Display and viewing-environment parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayParams {
    pub eotf: Eotf,
    /// cd/m², gamma EOTF only.
    pub peak_luminance: f64,
    /// cd/m², gamma EOTF only.
    pub black_level: f64,
    /// Ambient illuminance, lux.
    pub ambient_lux: f64,
    /// Screen reflectivity.
    pub reflectivity: f64,
    pub primaries: Primaries,
    pub range_policy: RangePolicy,
}

impl DisplayParams {
    /// HDR PQ display in a 200 lux room with 0.5% screen reflectivity.
    pub fn pq() -> Self {
        DisplayParams {
            eotf: Eotf::Pq,
            peak_luminance: PQ_PEAK,
            black_level: 0.0,
            ambient_lux: 200.0,
            reflectivity: 0.005,
            primaries: Primaries::Bt2020,
            range_policy: RangePolicy::Tolerant,
        }
    }

    /// 100 cd/m² SDR display in the same room.
    pub fn sdr() -> Self {
        DisplayParams {
            eotf: Eotf::Gamma22Srgb,
            peak_luminance: 100.0,
            black_level: 0.1,
            ambient_lux: 200.0,
            reflectivity: 0.005,
            primaries: Primaries::Srgb,
            range_policy: RangePolicy::Tolerant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(VdpError::InvalidParameter(msg));
        if !(self.ambient_lux.is_finite() && self.ambient_lux >= 0.0) {
            return bad(format!("ambient illuminance must be >= 0, got {}", self.ambient_lux));
        }
        if !(0.0..=1.0).contains(&self.reflectivity) {
            return bad(format!("reflectivity must be in [0, 1], got {}", self.reflectivity));
        }
        if !(self.black_level >= 0.0 && self.peak_luminance > self.black_level) || !self.peak_luminance.is_finite() {
            return bad(format!(
                "need peak > black >= 0, got peak {} black {}",
                self.peak_luminance, self.black_level
            ));
        }
        Ok(())
    }

    /// Reflected ambient light added to every channel, cd/m².
    pub fn ambient_floor(&self) -> f64 {
        self.ambient_lux * self.reflectivity / PI
    }
}

/// Absolute linear light per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceMap {
    pub red: Plane,
    pub green: Plane,
    pub blue: Plane,
    /// Photopic luminance, cd/m².
    pub luminance: Plane,
}

impl RadianceMap {
    pub fn from_rgb(red: Plane, green: Plane, blue: Plane, primaries: Primaries) -> Result<Self> {
        let luminance = rgb_to_luminance(&red, &green, &blue, primaries)?;
        Ok(RadianceMap {
            red,
            green,
            blue,
            luminance,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.luminance.dims()
    }
}

/// `Y = w_r R + w_g G + w_b B`.
pub fn rgb_to_luminance(red: &Plane, green: &Plane, blue: &Plane, primaries: Primaries) -> Result<Plane> {
    red.ensure_same_dims(green)?;
    red.ensure_same_dims(blue)?;
    let [wr, wg, wb] = primaries.luminance_weights();
    let data = red
        .as_slice()
        .iter()
        .zip(green.as_slice())
        .zip(blue.as_slice())
        .map(|((r, g), b)| wr * r + wg * g + wb * b)
        .collect();
    Plane::new(red.width(), red.height(), data)
}

/// Simulates the display: decodes every channel through the EOTF and adds
/// the reflected ambient light.
pub fn apply_display_model(frame: &DisplayEncodedFrame, params: &DisplayParams) -> Result<RadianceMap> {
    params.validate()?;
    if !params.eotf.accepts(frame.encoding()) {
        return Err(VdpError::EncodingMismatch {
            frame: frame.encoding().name(),
            display: params.eotf.name(),
        });
    }
    let floor = params.ambient_floor();
    let policy = params.range_policy;
    let decode = |v: f64| -> Result<f64> {
        let linear = match (frame.encoding(), params.eotf) {
            (Encoding::Linear, _) => v,
            (_, Eotf::Pq) => pq_decode_checked(v, policy)?,
            (_, Eotf::Gamma22Srgb) => {
                let v = policy.admit(v)?;
                (params.peak_luminance - params.black_level) * v.powf(2.2) + params.black_level
            }
        };
        Ok(linear + floor)
    };

    let (w, h) = frame.dims();
    let mut channels = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    for px in frame.samples().chunks_exact(3) {
        for c in 0..3 {
            channels[c].push(decode(px[c])?);
        }
    }
    let [r, g, b] = channels;
    RadianceMap::from_rgb(
        Plane::new(w, h, r)?,
        Plane::new(w, h, g)?,
        Plane::new(w, h, b)?,
        params.primaries,
    )
}
