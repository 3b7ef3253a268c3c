//! 2-D FFT helpers and convolution with half-sample mirror boundaries.
//!
//! A `w` x `h` plane is extended to a `2w` x `2h` torus by reflecting it about
//! its right and bottom edges. Filtering that torus with an even filter and
//! keeping the top-left quadrant is equivalent to convolving the mirror-padded
//! image, and preserves the image sum whenever the filter's DC gain is one.

use std::cell::RefCell;

use rustfft::num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use crate::raster::Plane;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place 2-D FFT of a row-major `width` x `height` buffer. Neither direction
/// is normalized.
pub fn fft2(width: usize, height: usize, buf: &mut [Complex<f64>], direction: FftDirection) {
    assert_eq!(buf.len(), width * height);
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let row_fft = planner.plan_fft(width, direction);
        row_fft.process(buf);

        let col_fft = planner.plan_fft(height, direction);
        let mut column = vec![Complex::default(); height];
        let mut scratch = vec![Complex::default(); col_fft.get_inplace_scratch_len()];
        for x in 0..width {
            for y in 0..height {
                column[y] = buf[y * width + x];
            }
            col_fft.process_with_scratch(&mut column, &mut scratch);
            for y in 0..height {
                buf[y * width + x] = column[y];
            }
        }
    });
}

/// Forward transform of a real plane.
pub fn forward(plane: &Plane) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = plane.as_slice().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(plane.width(), plane.height(), &mut buf, FftDirection::Forward);
    buf
}

/// Normalized inverse transform, keeping the real part.
pub fn inverse_real(width: usize, height: usize, mut spectrum: Vec<Complex<f64>>) -> Plane {
    fft2(width, height, &mut spectrum, FftDirection::Inverse);
    let norm = 1.0 / (width * height) as f64;
    let data = spectrum.into_iter().map(|c| c.re * norm).collect();
    Plane::new(width, height, data).expect("spectrum size matches")
}

/// Signed frequency of DFT bin `u` on an `n`-point grid, in cycles per sample.
/// The Nyquist bin maps to +0.5.
#[inline]
pub fn bin_frequency(u: usize, n: usize) -> f64 {
    if 2 * u <= n {
        u as f64 / n as f64
    } else {
        (u as f64 - n as f64) / n as f64
    }
}

/// Signed torus offset of sample `i` on an `n`-point periodic grid.
#[inline]
pub fn torus_offset(i: usize, n: usize) -> f64 {
    if 2 * i <= n {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Mirror-extends a plane to the `2w` x `2h` torus.
pub fn mirror_torus(plane: &Plane) -> Plane {
    plane.extend_mirror(2 * plane.width(), 2 * plane.height())
}

/// A real, even frequency response defined on the mirror torus of a
/// `width` x `height` image.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorFilter {
    width: usize,
    height: usize,
    response: Vec<f64>,
}

impl MirrorFilter {
    /// Builds the filter from a response function of signed frequency
    /// `(fx, fy)` in cycles per sample.
    pub fn from_response(width: usize, height: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let (pw, ph) = (2 * width, 2 * height);
        let mut response = Vec::with_capacity(pw * ph);
        for v in 0..ph {
            let fy = bin_frequency(v, ph);
            for u in 0..pw {
                response.push(f(bin_frequency(u, pw), fy));
            }
        }
        MirrorFilter {
            width,
            height,
            response,
        }
    }

    /// Builds the filter from an even spatial kernel `k(dx, dy)` (offsets in
    /// samples) laid out on the torus. The kernel is normalized to unit sum,
    /// and the DC gain is then pinned to exactly one.
    pub fn from_kernel(width: usize, height: usize, k: impl Fn(f64, f64) -> f64) -> Self {
        let (pw, ph) = (2 * width, 2 * height);
        let kernel = Plane::from_fn(pw, ph, |x, y| k(torus_offset(x, pw), torus_offset(y, ph)));
        let total = kernel.sum();
        let spectrum = forward(&kernel);
        let mut response: Vec<f64> = spectrum.iter().map(|c| c.re / total).collect();
        response[0] = 1.0;
        MirrorFilter {
            width,
            height,
            response,
        }
    }

    /// Forces the DC gain to exactly one.
    pub fn pin_unit_dc(&mut self) {
        self.response[0] = 1.0;
    }

    /// Image size this filter applies to.
    pub fn image_dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Size of the mirror torus (and of the response array).
    pub fn padded_dims(&self) -> (usize, usize) {
        (2 * self.width, 2 * self.height)
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn dc_gain(&self) -> f64 {
        self.response[0]
    }

    /// Response at DFT bin `(u, v)` of the padded grid.
    pub fn gain_at(&self, u: usize, v: usize) -> f64 {
        self.response[v * 2 * self.width + u]
    }

    pub fn apply(&self, plane: &Plane) -> Plane {
        assert_eq!(plane.dims(), self.image_dims());
        let (pw, ph) = self.padded_dims();
        let mut spectrum = forward(&mirror_torus(plane));
        for (c, &g) in spectrum.iter_mut().zip(&self.response) {
            *c *= g;
        }
        inverse_real(pw, ph, spectrum).crop(self.width, self.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let p = Plane::from_fn(6, 5, |x, y| (x * 7 + y * 3) as f64 % 5.0);
        let back = inverse_real(6, 5, forward(&p));
        for (a, b) in p.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_dc_filter_preserves_mean() {
        let p = Plane::from_fn(13, 9, |x, y| ((x * x + 3 * y) % 11) as f64);
        let filt = MirrorFilter::from_kernel(13, 9, |dx, dy| (-(dx * dx + dy * dy) / 8.0).exp());
        let out = filt.apply(&p);
        assert!(((out.mean() - p.mean()) / p.mean()).abs() < 1e-12);
    }

    #[test]
    fn bin_frequencies_wrap() {
        assert_eq!(bin_frequency(0, 8), 0.0);
        assert_eq!(bin_frequency(4, 8), 0.5);
        assert_eq!(bin_frequency(5, 8), -0.375);
        assert_eq!(torus_offset(7, 8), -1.0);
    }
}
