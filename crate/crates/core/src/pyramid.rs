//! Multi-scale, multi-orientation band decomposition.
//!
//! The decomposition is a tight frame built in the frequency domain. The image
//! is mirror-extended to a multiple of `2^levels` and then to its mirror
//! torus, where every band filter is applied by spectral multiplication. Level
//! `k` is critically decimated by `2^k` (samples at block centres), and only
//! the quadrant that covers the extended image is stored: the rest of the
//! torus follows by reflection, with orientation `j` reflecting into
//! orientation `(J - j) mod J`.
//!
//! Radial profiles are built from one smooth low-pass `L` with `L = 1` below a
//! quarter of Nyquist and `L = 0` above half of it. Level 0 takes
//! `1 - L(ρ)²`, level `k` takes `L(2^(k-1) ρ)² - L(2^k ρ)²`, and the residual
//! keeps `L(2^(K-1) ρ)²`, so the squared responses sum to one. Orientation
//! windows are raised-cosine partitions of unity over angle modulo π.
//!
//! Reconstruction is the adjoint of decomposition and therefore its inverse.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VdpError};
use crate::raster::Plane;
use crate::spectral::{bin_frequency, forward, inverse_real, mirror_torus};

/// Coarsest band peak allowed, cycles per degree.
pub const MIN_PEAK_CPD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PyramidParams {
    pub orientation_count: usize,
}

impl Default for PyramidParams {
    fn default() -> Self {
        PyramidParams { orientation_count: 4 }
    }
}

impl PyramidParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=32).contains(&self.orientation_count) {
            return Err(VdpError::InvalidParameter(format!(
                "pyramid_params.orientation_count must be in 1..=32, got {}",
                self.orientation_count
            )));
        }
        Ok(())
    }
}

/// Identifies one band of a [`BandPyramid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BandIndex {
    Oriented { level: usize, orientation: usize },
    Residual,
}

/// Number of oriented levels for a `width` x `height` image at `ppd`:
/// `floor(log2(min(w, h))) - 2`, reduced until the coarsest band peak is at
/// least [`MIN_PEAK_CPD`].
pub fn level_count(width: usize, height: usize, ppd: f64) -> Result<usize> {
    if !(ppd > 0.0 && ppd.is_finite()) {
        return Err(VdpError::InvalidParameter(format!("ppd must be > 0, got {ppd}")));
    }
    let min_side = width.min(height);
    let by_size = if min_side == 0 {
        0
    } else {
        (min_side.ilog2() as usize).saturating_sub(2)
    };
    let mut levels = by_size;
    while levels > 0 && ppd / 2.0 / 2f64.powi(levels as i32) < MIN_PEAK_CPD {
        levels -= 1;
    }
    if levels < 1 {
        return Err(VdpError::TooSmall {
            width,
            height,
            reason: format!(
                "no band fits (needs at least 8 pixels per side and ppd >= {})",
                4.0 * MIN_PEAK_CPD
            ),
        });
    }
    Ok(levels)
}

/// Peak frequency in cycles per degree of each of `levels` levels, finest
/// first: Nyquist/2, Nyquist/4, ...
pub fn band_frequencies(ppd: f64, levels: usize) -> Vec<f64> {
    let nyquist = ppd / 2.0;
    (0..levels).map(|k| nyquist / 2f64.powi(k as i32 + 1)).collect()
}

fn smooth_ramp(t: f64) -> f64 {
    t - (2.0 * PI * t).sin() / (2.0 * PI)
}

/// Radial low-pass; `s` is frequency as a fraction of the Nyquist rate.
fn lowpass(s: f64) -> f64 {
    if s <= 0.25 {
        1.0
    } else if s >= 0.5 {
        0.0
    } else {
        (PI / 2.0 * smooth_ramp((4.0 * s).log2())).cos()
    }
}

/// Squared radial response of oriented level `level`.
fn level_power(level: usize, rho: f64) -> f64 {
    if level == 0 {
        1.0 - lowpass(rho).powi(2)
    } else {
        let coarse = lowpass(2f64.powi(level as i32 - 1) * rho);
        let fine = lowpass(2f64.powi(level as i32) * rho);
        (coarse * coarse - fine * fine).max(0.0)
    }
}

/// Angular window of orientation `j` out of `count`; sums to one over `j`.
fn angular_power(theta: f64, j: usize, count: usize) -> f64 {
    if count == 1 {
        return 1.0;
    }
    let centre = PI * j as f64 / count as f64;
    let mut d = (theta - centre).rem_euclid(PI);
    if d > PI / 2.0 {
        d = PI - d;
    }
    let d = d * count as f64 / PI;
    if d >= 1.0 {
        0.0
    } else {
        (PI / 2.0 * smooth_ramp(d)).cos().powi(2)
    }
}

fn mirrored_orientation(j: usize, count: usize) -> usize {
    (count - j) % count
}

/// Amplitude responses of all orientations of `level` at frequency
/// `(fx, fy)` in cycles per sample of the full-resolution grid, written to
/// `out`. Returns false when the whole level is zero there.
fn level_gains(level: usize, count: usize, fx: f64, fy: f64, out: &mut [f64]) -> bool {
    let rho = (fx * fx + fy * fy).sqrt() / 0.5;
    let radial = level_power(level, rho);
    if radial == 0.0 {
        return false;
    }
    let theta = fy.atan2(fx);
    let mut angular = [0.0f64; 32];
    for (j, a) in angular.iter_mut().enumerate().take(count) {
        *a = angular_power(theta, j, count);
    }
    let m = fx.abs().max(fy.abs()) / 0.5;
    let beta = if level == 0 && count > 1 && m > 0.75 {
        // Near the Nyquist edge each window is blended with its mirror image
        // so the filter is identical at +0.5 and -0.5 cycles per sample.
        (PI / 2.0 * smooth_ramp(((m - 0.75) / 0.25).min(1.0))).sin().powi(2)
    } else {
        0.0
    };
    for (j, g) in out.iter_mut().enumerate().take(count) {
        let own = angular[j];
        let blended = own + beta * (angular[mirrored_orientation(j, count)] - own) / 2.0;
        *g = (radial * blended).sqrt();
    }
    true
}

#[cfg(test)]
fn band_gain(level: usize, j: usize, count: usize, fx: f64, fy: f64) -> f64 {
    let mut out = [0.0; 32];
    if level_gains(level, count, fx, fy, &mut out) {
        out[j]
    } else {
        0.0
    }
}

fn residual_gain(levels: usize, fx: f64, fy: f64) -> f64 {
    let rho = (fx * fx + fy * fy).sqrt() / 0.5;
    lowpass(2f64.powi(levels as i32 - 1) * rho)
}

/// Multi-scale, multi-orientation decomposition of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPyramid {
    width: usize,
    height: usize,
    ext_width: usize,
    ext_height: usize,
    ppd: f64,
    orientation_count: usize,
    /// `levels[k][j]`, each `ext / 2^k` in size.
    levels: Vec<Vec<Plane>>,
    residual: Plane,
    peak_frequencies: Vec<f64>,
}

impl BandPyramid {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn orientation_count(&self) -> usize {
        self.orientation_count
    }

    pub fn band_count(&self) -> usize {
        self.level_count() * self.orientation_count + 1
    }

    /// Size of the decomposed image.
    pub fn image_dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Size of the mirror-extended image the bands cover.
    pub fn extended_dims(&self) -> (usize, usize) {
        (self.ext_width, self.ext_height)
    }

    pub fn ppd(&self) -> f64 {
        self.ppd
    }

    /// Peak frequency of each level, cycles per degree.
    pub fn peak_frequencies(&self) -> &[f64] {
        &self.peak_frequencies
    }

    /// Decimation factor of a band relative to the image.
    pub fn scale_factor(&self, index: BandIndex) -> usize {
        match index {
            BandIndex::Oriented { level, .. } => 1 << level,
            BandIndex::Residual => 1 << self.level_count(),
        }
    }

    pub fn level_dims(&self, level: usize) -> (usize, usize) {
        (self.ext_width >> level, self.ext_height >> level)
    }

    pub fn band(&self, level: usize, orientation: usize) -> &Plane {
        &self.levels[level][orientation]
    }

    pub fn level(&self, level: usize) -> &[Plane] {
        &self.levels[level]
    }

    pub fn residual(&self) -> &Plane {
        &self.residual
    }

    pub fn get(&self, index: BandIndex) -> Result<&Plane> {
        match index {
            BandIndex::Oriented { level, orientation }
                if level < self.level_count() && orientation < self.orientation_count =>
            {
                Ok(&self.levels[level][orientation])
            }
            BandIndex::Residual => Ok(&self.residual),
            other => Err(VdpError::InvalidParameter(format!("no band {other:?} in this pyramid"))),
        }
    }

    /// All band indices: oriented bands finest first, then the residual.
    pub fn indices(&self) -> Vec<BandIndex> {
        let mut out: Vec<BandIndex> = (0..self.level_count())
            .flat_map(|level| {
                (0..self.orientation_count).map(move |orientation| BandIndex::Oriented { level, orientation })
            })
            .collect();
        out.push(BandIndex::Residual);
        out
    }

    /// Applies `f` to every band (in parallel), keeping the geometry.
    pub fn map_bands<F>(&self, f: F) -> Result<BandPyramid>
    where
        F: Fn(BandIndex, &Plane) -> Result<Plane> + Sync,
    {
        let levels = (0..self.level_count())
            .into_par_iter()
            .map(|level| {
                (0..self.orientation_count)
                    .map(|orientation| {
                        let idx = BandIndex::Oriented { level, orientation };
                        let out = f(idx, &self.levels[level][orientation])?;
                        self.check_band(idx, &out)?;
                        Ok(out)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let residual = f(BandIndex::Residual, &self.residual)?;
        self.check_band(BandIndex::Residual, &residual)?;
        Ok(self.rebuilt(levels, residual))
    }

    /// A pyramid of the same shape with every coefficient zero.
    pub fn zeros_like(&self) -> BandPyramid {
        self.map_bands(|_, p| Ok(Plane::zeros(p.width(), p.height())))
            .expect("shape is preserved")
    }

    fn rebuilt(&self, levels: Vec<Vec<Plane>>, residual: Plane) -> BandPyramid {
        BandPyramid {
            width: self.width,
            height: self.height,
            ext_width: self.ext_width,
            ext_height: self.ext_height,
            ppd: self.ppd,
            orientation_count: self.orientation_count,
            levels,
            residual,
            peak_frequencies: self.peak_frequencies.clone(),
        }
    }

    fn check_band(&self, index: BandIndex, plane: &Plane) -> Result<()> {
        let s = self.scale_factor(index);
        let want = (self.ext_width / s, self.ext_height / s);
        if plane.dims() != want {
            return Err(VdpError::DimensionMismatch(format!(
                "band {index:?} must be {want:?}, got {:?}",
                plane.dims()
            )));
        }
        Ok(())
    }

    /// Checks that another pyramid has the same geometry.
    pub fn ensure_congruent(&self, other: &BandPyramid) -> Result<()> {
        if self.extended_dims() != other.extended_dims()
            || self.image_dims() != other.image_dims()
            || self.level_count() != other.level_count()
            || self.orientation_count != other.orientation_count
        {
            return Err(VdpError::DimensionMismatch(
                "pyramids differ in size, level count or orientation count".into(),
            ));
        }
        Ok(())
    }

    /// Frame energy `Σ 4^k ‖band‖²`, which equals the energy of the extended
    /// image.
    pub fn energy(&self) -> f64 {
        let mut e = 0.0;
        for (k, level) in self.levels.iter().enumerate() {
            let w = 4f64.powi(k as i32);
            e += w * level.iter().map(Plane::energy).sum::<f64>();
        }
        e + 4f64.powi(self.level_count() as i32) * self.residual.energy()
    }

    /// Replaces the band planes, validating their sizes.
    pub fn with_bands(&self, levels: Vec<Vec<Plane>>, residual: Plane) -> Result<BandPyramid> {
        if levels.len() != self.level_count() || levels.iter().any(|l| l.len() != self.orientation_count) {
            return Err(VdpError::DimensionMismatch(
                "band layout differs from the pyramid".into(),
            ));
        }
        for (level, planes) in levels.iter().enumerate() {
            for (orientation, p) in planes.iter().enumerate() {
                self.check_band(BandIndex::Oriented { level, orientation }, p)?;
            }
        }
        self.check_band(BandIndex::Residual, &residual)?;
        Ok(self.rebuilt(levels, residual))
    }
}

fn extended_size(n: usize, levels: usize) -> usize {
    let block = 1usize << levels;
    n.div_ceil(block) * block
}

/// Maps a bin of a `2n / 2^k` grid to the matching bin of the `2n` grid.
#[inline]
fn full_bin(u: usize, small: usize, full: usize) -> usize {
    if 2 * u <= small {
        u
    } else {
        full - (small - u)
    }
}

type GainFn<'a> = dyn Fn(f64, f64, &mut [f64]) -> bool + Sync + 'a;

/// Gains of one level over the non-negative frequency quadrant of a decimated
/// grid. The other quadrants follow by reflection, which swaps each
/// orientation with its mirror image.
struct GainTable {
    quadrant_width: usize,
    count: usize,
    values: Vec<f64>,
    live: Vec<bool>,
}

impl GainTable {
    fn new(width: usize, height: usize, scale: usize, count: usize, gains: &GainFn) -> Self {
        let (qw, qh) = (width / 2 + 1, height / 2 + 1);
        let mut values = vec![0.0; qw * qh * count];
        let mut live = vec![false; qw * qh];
        for v in 0..qh {
            let fy = v as f64 / height as f64 / scale as f64;
            for u in 0..qw {
                let fx = u as f64 / width as f64 / scale as f64;
                let i = v * qw + u;
                live[i] = gains(fx, fy, &mut values[i * count..(i + 1) * count]);
            }
        }
        GainTable {
            quadrant_width: qw,
            count,
            values,
            live,
        }
    }

    /// Writes the gains at bin `(u, v)` of a `width` x `height` grid to
    /// `out`; false where the whole level is zero.
    #[inline]
    fn at(&self, u: usize, width: usize, v: usize, height: usize, out: &mut [f64]) -> bool {
        let (uq, flip_x) = if 2 * u <= width { (u, false) } else { (width - u, true) };
        let (vq, flip_y) = if 2 * v <= height {
            (v, false)
        } else {
            (height - v, true)
        };
        let i = vq * self.quadrant_width + uq;
        if !self.live[i] {
            return false;
        }
        let row = &self.values[i * self.count..(i + 1) * self.count];
        if flip_x == flip_y {
            out[..self.count].copy_from_slice(row);
        } else {
            for (j, g) in out.iter_mut().enumerate().take(self.count) {
                *g = row[mirrored_orientation(j, self.count)];
            }
        }
        true
    }
}

/// Decomposes an image (typically a retinal response map) into
/// [`level_count`] levels of `orientation_count` bands plus a residual.
pub fn decompose(image: &Plane, ppd: f64, orientation_count: usize) -> Result<BandPyramid> {
    let levels = level_count(image.width(), image.height(), ppd)?;
    decompose_with_levels(image, ppd, orientation_count, levels)
}

/// [`decompose`] with an explicit level count.
pub fn decompose_with_levels(image: &Plane, ppd: f64, orientation_count: usize, levels: usize) -> Result<BandPyramid> {
    PyramidParams { orientation_count }.validate()?;
    let (w, h) = image.dims();
    if levels < 1 || w < (1 << levels) || h < (1 << levels) {
        return Err(VdpError::TooSmall {
            width: w,
            height: h,
            reason: format!("{levels} levels need at least {} pixels per side", 1usize << levels),
        });
    }
    if image.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(VdpError::Numeric("non-finite value in pyramid input".into()));
    }
    let (ew, eh) = (extended_size(w, levels), extended_size(h, levels));
    let torus = mirror_torus(&image.extend_mirror(ew, eh));
    let (pw, ph) = torus.dims();
    let spectrum = forward(&torus);

    // Band values at block centres: spectral decimation by `scale` with a
    // half-block phase shift, separable in x and y.
    let centre_phases = |small: usize, scale: usize| -> Vec<Complex<f64>> {
        let delta = (scale as f64 - 1.0) / 2.0;
        (0..small)
            .map(|u| Complex::from_polar(1.0, 2.0 * PI * bin_frequency(u, small) / scale as f64 * delta))
            .collect()
    };
    let analyse = |scale: usize, count: usize, gains: &GainFn| -> Vec<Plane> {
        let (sw, sh) = (pw / scale, ph / scale);
        let norm = 1.0 / (scale * scale) as f64;
        let (px, py) = (centre_phases(sw, scale), centre_phases(sh, scale));
        let table = GainTable::new(sw, sh, scale, count, gains);
        let mut spectra = vec![vec![Complex::default(); sw * sh]; count];
        let mut g = [0.0f64; 32];
        for v in 0..sh {
            let row = full_bin(v, sh, ph) * pw;
            for u in 0..sw {
                if !table.at(u, sw, v, sh, &mut g) {
                    continue;
                }
                let value = spectrum[row + full_bin(u, sw, pw)] * px[u] * py[v] * norm;
                for (out, &gain) in spectra.iter_mut().zip(&g) {
                    if gain != 0.0 {
                        out[v * sw + u] = value * gain;
                    }
                }
            }
        }
        spectra
            .into_par_iter()
            .map(|s| inverse_real(sw, sh, s).crop(ew / scale, eh / scale))
            .collect()
    };

    let bands: Vec<Plane> = (0..levels)
        .into_par_iter()
        .flat_map_iter(|k| {
            analyse(1 << k, orientation_count, &|fx, fy, out| {
                level_gains(k, orientation_count, fx, fy, out)
            })
        })
        .collect();
    let residual = analyse(1 << levels, 1, &|fx, fy, out| {
        out[0] = residual_gain(levels, fx, fy);
        out[0] != 0.0
    })
    .pop()
    .expect("one residual");

    let mut iter = bands.into_iter();
    let levels_out = (0..levels)
        .map(|_| iter.by_ref().take(orientation_count).collect())
        .collect();

    Ok(BandPyramid {
        width: w,
        height: h,
        ext_width: ew,
        ext_height: eh,
        ppd,
        orientation_count,
        levels: levels_out,
        residual,
        peak_frequencies: band_frequencies(ppd, levels),
    })
}

/// Rebuilds the decimated torus of a band from its stored quadrant and that of
/// its mirror-image orientation.
fn unfold(own: &Plane, mirrored: &Plane) -> Plane {
    let (m, n) = own.dims();
    Plane::from_fn(2 * m, 2 * n, |x, y| {
        let (rx, xs) = if x < m { (false, x) } else { (true, 2 * m - 1 - x) };
        let (ry, ys) = if y < n { (false, y) } else { (true, 2 * n - 1 - y) };
        if rx == ry {
            own.get(xs, ys)
        } else {
            mirrored.get(xs, ys)
        }
    })
}

/// Inverse of [`decompose`].
pub fn reconstruct(pyramid: &BandPyramid) -> Result<Plane> {
    let levels = pyramid.level_count();
    let count = pyramid.orientation_count;
    if levels == 0 || count == 0 {
        return Err(VdpError::InvalidParameter("pyramid has no bands".into()));
    }
    for index in pyramid.indices() {
        pyramid.check_band(index, pyramid.get(index)?)?;
    }
    let (ew, eh) = pyramid.extended_dims();
    let (pw, ph) = (2 * ew, 2 * eh);

    let mut acc = vec![Complex::default(); pw * ph];
    let mut synthesise = |tori: Vec<Plane>, scale: usize, gains: &GainFn| {
        let (sw, sh) = tori[0].dims();
        let delta = (scale as f64 - 1.0) / 2.0;
        let amp = (scale * scale) as f64;
        let phases = |small: usize| -> Vec<Complex<f64>> {
            (0..small)
                .map(|u| Complex::from_polar(1.0, -2.0 * PI * bin_frequency(u, small) / scale as f64 * delta))
                .collect()
        };
        let (px, py) = (phases(sw), phases(sh));
        let table = GainTable::new(sw, sh, scale, tori.len(), gains);
        let spectra: Vec<Vec<Complex<f64>>> = tori.par_iter().map(forward).collect();
        let mut g = [0.0f64; 32];
        for (v, &phase_y) in py.iter().enumerate() {
            let row = full_bin(v, sh, ph) * pw;
            for (u, &phase_x) in px.iter().enumerate() {
                if !table.at(u, sw, v, sh, &mut g) {
                    continue;
                }
                let i = v * sw + u;
                let sum: Complex<f64> = spectra.iter().zip(&g).map(|(s, &gain)| s[i] * gain).sum();
                acc[row + full_bin(u, sw, pw)] += sum * phase_x * phase_y * amp;
            }
        }
    };

    for k in 0..levels {
        let level = &pyramid.levels[k];
        let tori = (0..count)
            .map(|j| unfold(&level[j], &level[mirrored_orientation(j, count)]))
            .collect();
        synthesise(tori, 1 << k, &|fx, fy, out| level_gains(k, count, fx, fy, out));
    }
    synthesise(
        vec![unfold(&pyramid.residual, &pyramid.residual)],
        1 << levels,
        &|fx, fy, out| {
            out[0] = residual_gain(levels, fx, fy);
            out[0] != 0.0
        },
    );

    let out = inverse_real(pw, ph, acc).crop(pyramid.width, pyramid.height);
    if out.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(VdpError::Numeric("non-finite value in reconstruction".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies_halve() {
        assert_eq!(band_frequencies(60.0, 3), vec![15.0, 7.5, 3.75]);
        assert_eq!(band_frequencies(30.0, 1), vec![7.5]);
    }

    #[test]
    fn level_count_rules() {
        assert_eq!(level_count(256, 256, 60.0).unwrap(), 6);
        assert_eq!(level_count(512, 300, 60.0).unwrap(), 6);
        // 8 cpd Nyquist: coarsest peak must stay >= 0.25 cpd.
        assert_eq!(level_count(1024, 1024, 16.0).unwrap(), 5);
        assert!(level_count(7, 100, 60.0).is_err());
        assert!(level_count(64, 64, 0.5).is_err());
    }

    #[test]
    fn filters_partition_unity() {
        let levels = 4;
        for &(fx, fy) in &[
            (0.0, 0.0),
            (0.01, 0.0),
            (0.1, 0.03),
            (0.3, -0.2),
            (0.5, 0.5),
            (-0.5, 0.1),
            (0.02, -0.015),
        ] {
            for count in [1, 2, 4, 6] {
                let mut total = residual_gain(levels, fx, fy).powi(2);
                for k in 0..levels {
                    for j in 0..count {
                        total += band_gain(k, j, count, fx, fy).powi(2);
                    }
                }
                assert!((total - 1.0).abs() < 1e-12, "{fx} {fy} {count}: {total}");
            }
        }
    }

    #[test]
    fn nyquist_is_mirror_symmetric() {
        for j in 0..4 {
            for fy in [-0.4, -0.1, 0.2, 0.5] {
                let a = band_gain(0, j, 4, 0.5, fy);
                let b = band_gain(0, j, 4, 0.5, -fy);
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_small() {
        let img = Plane::from_fn(24, 20, |x, y| ((x * 31 + y * 17) % 23) as f64 / 7.0);
        let pyr = decompose_with_levels(&img, 30.0, 4, 2).unwrap();
        assert_eq!(pyr.level_dims(1), (12, 10));
        let back = reconstruct(&pyr).unwrap();
        for (a, b) in img.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((pyr.energy() - img.energy()).abs() < 1e-9 * img.energy());
    }

    #[test]
    fn odd_sizes_are_extended() {
        let img = Plane::from_fn(37, 29, |x, y| (x as f64 * 0.3).sin() + (y as f64 * 0.7).cos());
        let pyr = decompose_with_levels(&img, 40.0, 3, 2).unwrap();
        assert_eq!(pyr.extended_dims(), (40, 32));
        assert_eq!(pyr.residual().dims(), (10, 8));
        let back = reconstruct(&pyr).unwrap();
        for (a, b) in img.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_goes_to_residual() {
        let img = Plane::filled(32, 32, 2.5);
        let pyr = decompose(&img, 30.0, 4).unwrap();
        for level in 0..pyr.level_count() {
            for j in 0..4 {
                assert!(pyr.band(level, j).as_slice().iter().all(|v| v.abs() < 1e-12));
            }
        }
        assert!(pyr.residual().as_slice().iter().all(|v| (v - 2.5).abs() < 1e-12));
        let zero = reconstruct(&pyr.zeros_like()).unwrap();
        assert!(zero.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn malformed_pyramid_is_rejected() {
        let pyr = decompose(&Plane::filled(32, 32, 1.0), 30.0, 2).unwrap();
        let mut levels: Vec<Vec<Plane>> = (0..pyr.level_count()).map(|k| pyr.level(k).to_vec()).collect();
        levels[0][1] = Plane::zeros(3, 3);
        assert!(pyr.with_bands(levels, pyr.residual().clone()).is_err());
        assert!(pyr
            .get(BandIndex::Oriented {
                level: 9,
                orientation: 0
            })
            .is_err());
    }
}
