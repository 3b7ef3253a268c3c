//! A minimal single-channel raster of `f64` samples, row-major.

use crate::error::{Result, VdpError};

#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(VdpError::DimensionMismatch(format!(
                "{}x{} plane needs {} samples, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Plane { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two planes of equal size.
    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Result<Plane> {
        self.ensure_same_dims(other)?;
        Ok(Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn ensure_same_dims(&self, other: &Plane) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(VdpError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Top-left `width` x `height` window.
    pub fn crop(&self, width: usize, height: usize) -> Plane {
        assert!(width <= self.width && height <= self.height);
        Plane::from_fn(width, height, |x, y| self.get(x, y))
    }

    /// Grows the plane to `width` x `height` by half-sample mirror reflection
    /// at the right and bottom edges.
    pub fn extend_mirror(&self, width: usize, height: usize) -> Plane {
        assert!(width >= self.width && height >= self.height);
        Plane::from_fn(width, height, |x, y| {
            self.get(
                reflect_index(x as isize, self.width),
                reflect_index(y as isize, self.height),
            )
        })
    }

    /// Mean over non-overlapping `factor` x `factor` blocks. Dimensions must
    /// be divisible by `factor`.
    pub fn block_mean(&self, factor: usize) -> Plane {
        assert!(factor > 0 && self.width.is_multiple_of(factor) && self.height.is_multiple_of(factor));
        if factor == 1 {
            return self.clone();
        }
        let (w, h) = (self.width / factor, self.height / factor);
        let norm = 1.0 / (factor * factor) as f64;
        Plane::from_fn(w, h, |bx, by| {
            let mut acc = 0.0;
            for y in by * factor..(by + 1) * factor {
                let row = &self.data[y * self.width + bx * factor..y * self.width + (bx + 1) * factor];
                acc += row.iter().sum::<f64>();
            }
            acc * norm
        })
    }

    /// Bilinear upsampling by an integer factor where each source sample sits
    /// at the centre of its `factor` x `factor` block. Edges are clamped, so the
    /// result stays within the source range.
    pub fn upsample_bilinear(&self, factor: usize) -> Plane {
        assert!(factor > 0);
        if factor == 1 {
            return self.clone();
        }
        let (w, h) = (self.width * factor, self.height * factor);
        let f = factor as f64;
        let axis = |i: usize, n: usize| -> (usize, usize, f64) {
            let pos = ((i as f64 + 0.5) / f - 0.5).clamp(0.0, (n - 1) as f64);
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, pos - i0 as f64)
        };
        let xs: Vec<_> = (0..w).map(|x| axis(x, self.width)).collect();
        let ys: Vec<_> = (0..h).map(|y| axis(y, self.height)).collect();
        Plane::from_fn(w, h, |x, y| {
            let (x0, x1, tx) = xs[x];
            let (y0, y1, ty) = ys[y];
            let top = self.get(x0, y0) * (1.0 - tx) + self.get(x1, y0) * tx;
            let bottom = self.get(x0, y1) * (1.0 - tx) + self.get(x1, y1) * tx;
            top * (1.0 - ty) + bottom * ty
        })
    }
}

/// Half-sample symmetric reflection of an index into `0..n`
/// (`-1 -> 0`, `n -> n-1`), periodic with period `2n`.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    if m < n {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Separable convolution with a symmetric 1-D kernel (`kernel[r]` is the
/// weight at offset `r - radius`) and half-sample mirror boundaries.
pub fn convolve_separable_mirror(plane: &Plane, kernel: &[f64]) -> Plane {
    assert!(kernel.len() % 2 == 1);
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = plane.dims();
    let mut tmp = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let sx = reflect_index(x as isize + k as isize - radius, w);
                acc += kv * plane.get(sx, y);
            }
            tmp.set(x, y, acc);
        }
    }
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let sy = reflect_index(y as isize + k as isize - radius, h);
                acc += kv * tmp.get(x, sy);
            }
            out.set(x, y, acc);
        }
    }
    out
}

/// Sampled Gaussian normalized to unit sum, truncated at 4σ.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}
