#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use vdp::{DisplayEncodedFrame, Encoding, Plane};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn flat(w: usize, h: usize, value: f64) -> Plane {
    Plane::filled(w, h, value)
}

/// Dead-leaves image: occluding discs with power-law radii and random grey
/// levels, which reproduces the edge and spectrum statistics of photographs.
pub fn dead_leaves(w: usize, h: usize, lo: f64, hi: f64, seed: u64) -> Plane {
    let mut r = rng(seed);
    let mut img = Plane::filled(w, h, (lo + hi) / 2.0);
    let r_min = 2.0f64;
    let r_max = w.max(h) as f64 / 3.0;
    for _ in 0..600 {
        let u: f64 = r.gen();
        // Radius density proportional to 1/r^3.
        let radius = 1.0 / ((1.0 - u) / (r_min * r_min) + u / (r_max * r_max)).sqrt();
        let cx = r.gen_range(0.0..w as f64);
        let cy = r.gen_range(0.0..h as f64);
        let level = r.gen_range(lo..hi);
        let x0 = (cx - radius).max(0.0) as usize;
        let x1 = ((cx + radius).ceil() as usize).min(w);
        let y0 = (cy - radius).max(0.0) as usize;
        let y1 = ((cy + radius).ceil() as usize).min(h);
        for y in y0..y1 {
            for x in x0..x1 {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                if dx * dx + dy * dy <= radius * radius {
                    img.set(x, y, level);
                }
            }
        }
    }
    img
}

pub fn uniform_noise(w: usize, h: usize, lo: f64, hi: f64, seed: u64) -> Plane {
    let mut r = rng(seed);
    Plane::from_fn(w, h, |_, _| r.gen_range(lo..hi))
}

pub fn gaussian_noise(w: usize, h: usize, seed: u64) -> Plane {
    let mut r = rng(seed);
    Plane::from_fn(w, h, |_, _| r.sample(StandardNormal))
}

pub fn gray(plane: &Plane, encoding: Encoding) -> DisplayEncodedFrame {
    DisplayEncodedFrame::from_gray(plane, encoding).expect("valid frame")
}

/// Gabor patch on a uniform background, `contrast` relative to `background`
/// (absolute luminance), centred in the image.
pub fn gabor_luminance(size: usize, ppd: f64, cpd: f64, sigma_deg: f64, background: f64, contrast: f64) -> Plane {
    let c = size as f64 / 2.0;
    let s = sigma_deg * ppd;
    Plane::from_fn(size, size, |x, y| {
        let (dx, dy) = (x as f64 + 0.5 - c, y as f64 + 0.5 - c);
        let env = (-(dx * dx + dy * dy) / (2.0 * s * s)).exp();
        background * (1.0 + contrast * env * (2.0 * std::f64::consts::PI * cpd / ppd * dx).cos())
    })
}
