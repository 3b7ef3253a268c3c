//! Image and frame ingestion, and heat-map export.
//!
//! PNG inputs are 8- or 16-bit RGB and are normalized to `[0, 1]`. OpenEXR is
//! accepted only for already-linear input, whose samples are absolute
//! cd/m² rather than normalized code values.

use std::fmt;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VdpError};
use crate::raster::Plane;

/// How the samples of a [`DisplayEncodedFrame`] are encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// SMPTE ST 2084 code values.
    Pq,
    /// Gamma-encoded SDR code values.
    Srgb,
    /// Absolute linear RGB in cd/m².
    Linear,
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::Pq => "pq",
            Encoding::Srgb => "srgb",
            Encoding::Linear => "linear",
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A display-encoded RGB raster, the metric's raw input.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplayEncodedFrame {
    width: usize,
    height: usize,
    encoding: Encoding,
    /// Interleaved RGB, row-major.
    data: Vec<f64>,
}

impl DisplayEncodedFrame {
    /// Builds a frame from interleaved RGB samples.
    ///
    /// Samples must be finite, and linear samples non-negative. Encoded samples
    /// outside `[0, 1]` are accepted here; the display model clamps or rejects
    /// them according to its range policy. Frames read from PNG are always
    /// within `[0, 1]`.
    pub fn new(width: usize, height: usize, encoding: Encoding, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(VdpError::TooSmall {
                width,
                height,
                reason: "frame must be non-empty".into(),
            });
        }
        if data.len() != width * height * 3 {
            return Err(VdpError::DimensionMismatch(format!(
                "{}x{} RGB frame needs {} samples, got {}",
                width,
                height,
                width * height * 3,
                data.len()
            )));
        }
        let valid = |v: f64| match encoding {
            Encoding::Linear => v.is_finite() && v >= 0.0,
            _ => v.is_finite(),
        };
        if let Some(&bad) = data.iter().find(|&&v| !valid(v)) {
            return Err(VdpError::OutOfRange {
                value: bad,
                range: if encoding == Encoding::Linear {
                    "[0, inf)"
                } else {
                    "finite"
                },
            });
        }
        Ok(DisplayEncodedFrame {
            width,
            height,
            encoding,
            data,
        })
    }

    /// An achromatic frame whose three channels all equal `plane`.
    pub fn from_gray(plane: &Plane, encoding: Encoding) -> Result<Self> {
        let data = plane.as_slice().iter().flat_map(|&v| [v, v, v]).collect();
        Self::new(plane.width(), plane.height(), encoding, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn samples(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// One colour channel (0 = R, 1 = G, 2 = B) as a plane.
    pub fn channel(&self, c: usize) -> Plane {
        assert!(c < 3);
        let data = self.data.iter().skip(c).step_by(3).copied().collect();
        Plane::new(self.width, self.height, data).expect("channel size")
    }

    /// Writes the frame as a 16-bit RGB PNG. Linear frames cannot be stored
    /// this way.
    pub fn save_png16(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if self.encoding == Encoding::Linear {
            return Err(VdpError::UnsupportedFormat(
                "linear frames cannot be written as PNG".into(),
            ));
        }
        let raw: Vec<u16> = self
            .data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
            .collect();
        let buf: ImageBuffer<Rgb<u16>, Vec<u16>> =
            ImageBuffer::from_raw(self.width as u32, self.height as u32, raw).expect("buffer size matches dimensions");
        buf.save(path).map_err(|e| image_error(path, e))
    }
}

fn image_error(path: &Path, e: image::ImageError) -> VdpError {
    match e {
        image::ImageError::IoError(io) => VdpError::io(path, io),
        other => VdpError::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

/// Loads an image file as a display-encoded frame.
///
/// `Pq` and `Srgb` expect an 8- or 16-bit RGB PNG; `Linear` expects an RGB
/// OpenEXR file holding absolute values.
pub fn load_image(path: impl AsRef<Path>, encoding: Encoding) -> Result<DisplayEncodedFrame> {
    let path = path.as_ref();
    let reader = image::ImageReader::open(path)
        .map_err(|e| VdpError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| VdpError::io(path, e))?;
    let format = reader.format();
    let img = reader.decode().map_err(|e| image_error(path, e))?;

    let channels = img.color().channel_count();
    if channels != 3 {
        return Err(VdpError::UnsupportedFormat(format!(
            "{}: expected 3 colour channels, found {}",
            path.display(),
            channels
        )));
    }
    let (w, h) = (img.width() as usize, img.height() as usize);

    let data: Vec<f64> = match (encoding, img) {
        (Encoding::Linear, DynamicImage::ImageRgb32F(buf)) => buf.into_raw().into_iter().map(f64::from).collect(),
        (Encoding::Linear, _) => {
            return Err(VdpError::UnsupportedFormat(format!(
                "{}: linear input must be a floating-point OpenEXR file",
                path.display()
            )))
        }
        (_, DynamicImage::ImageRgb8(buf)) if format == Some(image::ImageFormat::Png) => {
            buf.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect()
        }
        (_, DynamicImage::ImageRgb16(buf)) if format == Some(image::ImageFormat::Png) => {
            buf.into_raw().into_iter().map(|v| f64::from(v) / 65535.0).collect()
        }
        (_, other) => {
            return Err(VdpError::UnsupportedFormat(format!(
                "{}: unsupported sample type {:?}; expected an 8- or 16-bit RGB PNG",
                path.display(),
                other.color()
            )))
        }
    };
    DisplayEncodedFrame::new(w, h, encoding, data)
}

/// Parses `frame_%06d.png` into its frame number.
fn frame_number(name: &str) -> Option<u64> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".png")?;
    if digits.len() != 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Lists the `frame_%06d.png` files of a directory in frame order.
pub fn list_frames(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut frames = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| VdpError::io(dir, e))? {
        let entry = entry.map_err(|e| VdpError::io(dir, e))?;
        let name = entry.file_name();
        if let Some(n) = name.to_str().and_then(frame_number) {
            frames.push((n, entry.path()));
        }
    }
    frames.sort_by_key(|(n, _)| *n);
    Ok(frames.into_iter().map(|(_, p)| p).collect())
}

/// Anchor colours of the heat-map ramp: blue, green, yellow, red at levels
/// 0, 85, 170 and 255, linearly interpolated in between.
pub const RAMP_ANCHORS: [(u8, [u8; 3]); 4] = [
    (0, [0, 0, 255]),
    (85, [0, 255, 0]),
    (170, [255, 255, 0]),
    (255, [255, 0, 0]),
];

/// Colour of quantized ramp level `level`.
pub fn ramp_color(level: u8) -> [u8; 3] {
    let l = u32::from(level);
    let seg = RAMP_ANCHORS
        .windows(2)
        .find(|w| l <= u32::from(w[1].0))
        .expect("anchors cover 0..=255");
    let (l0, c0) = (u32::from(seg[0].0), seg[0].1);
    let (l1, c1) = (u32::from(seg[1].0), seg[1].1);
    let t = l - l0;
    let span = l1 - l0;
    let mut out = [0u8; 3];
    for ch in 0..3 {
        let a = u32::from(c0[ch]);
        let b = u32::from(c1[ch]);
        // Anchor channels only move by 0 or 255 per segment, so this is exact.
        out[ch] = if b >= a {
            (a + (b - a) * t / span) as u8
        } else {
            (a - (a - b) * t / span) as u8
        };
    }
    out
}

/// Inverse of [`ramp_color`]; `None` for colours not on the ramp.
pub fn ramp_level(color: [u8; 3]) -> Option<u8> {
    (0..=255u8).find(|&l| ramp_color(l) == color)
}

/// Quantizes a map value in `[0, 1]` to a ramp level.
#[inline]
pub fn quantize(value: f64) -> u8 {
    (value.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Renders a `[0, 1]` map through the ramp.
pub fn heatmap_image(map: &Plane) -> Result<RgbImage> {
    if let Some(&bad) = map.as_slice().iter().find(|v| !v.is_finite()) {
        return Err(VdpError::OutOfRange {
            value: bad,
            range: "[0, 1]",
        });
    }
    let mut img = RgbImage::new(map.width() as u32, map.height() as u32);
    for (x, y, px) in img.enumerate_pixels_mut() {
        *px = Rgb(ramp_color(quantize(map.get(x as usize, y as usize))));
    }
    Ok(img)
}

/// Writes a probability or distortion map as an 8-bit PNG heat map.
pub fn write_heatmap(map: &Plane, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    heatmap_image(map)?.save(path).map_err(|e| image_error(path, e))
}
