//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p vdp --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use common::{dead_leaves, flat, gabor_luminance, gaussian_noise, gray, uniform_noise};
use vdp::calibration::CalibrationSet;
use vdp::csf_masking::{
    masked_difference, masking_transducer, masking_transducer_derivative, normalize_by_csf, MaskingParams,
};
use vdp::display_model::{apply_display_model, pq_decode, pq_encode, DisplayParams};
use vdp::optics_retina::{build_glare_filter, GlareMode, OpticsConfig};
use vdp::pyramid::{decompose, reconstruct};
use vdp::stats::{plcc, srocc, BenchmarkRow};
use vdp::tasks_runtime::{run_task, run_video, RunConfig, Task, TaskPayload};
use vdp::{DisplayEncodedFrame, Encoding, Plane};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn within_budget(elapsed: Duration, budget: Duration, outcome: Outcome) -> Outcome {
    if elapsed > budget {
        Outcome::new(false, format!("{} (over the {budget:?} budget)", outcome.detail))
    } else {
        outcome
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[allow(clippy::approx_constant)]
fn display_anchor() -> Outcome {
    let start = Instant::now();
    let black = gray(&flat(16, 16, 0.0), Encoding::Pq);
    let radiance = apply_display_model(&black, &DisplayParams::pq()).unwrap();
    let expected = 200.0 * 0.005 / std::f64::consts::PI;
    let black_err = radiance
        .luminance
        .as_slice()
        .iter()
        .map(|&v| rel(v, expected))
        .fold(0.0, f64::max);
    let ends_ok = pq_decode(0.0) == 0.0 && rel(pq_decode(1.0), 10000.0) <= 1e-6;
    let round_trip = (0..1000)
        .map(|i| {
            let l = 10f64.powf(-3.0 + 7.0 * i as f64 / 999.0);
            rel(pq_decode(pq_encode(l).unwrap()), l)
        })
        .fold(0.0, f64::max);
    let pass = black_err <= 1e-4 && (expected - 0.3183).abs() / 0.3183 <= 1e-4 && ends_ok && round_trip <= 1e-4;
    within_budget(
        start.elapsed(),
        Duration::from_secs(1),
        Outcome::new(
            pass,
            format!(
                "black -> {:.6} cd/m^2 (rel err {black_err:.1e}), PQ ends ok: {ends_ok}, round trip max rel err {round_trip:.1e}",
                radiance.luminance.mean()
            ),
        ),
    )
}

fn identity_suite() -> Outcome {
    let start = Instant::now();
    let n = 512;
    let contents = [
        ("flat", flat(n, n, 0.5)),
        ("natural", dead_leaves(n, n, 0.1, 0.75, 7)),
        ("noise", uniform_noise(n, n, 0.0, 1.0, 11)),
    ];
    let mut failures = Vec::new();
    let mut runs = 0;
    for task in Task::ALL {
        let config = RunConfig::new(task, 60.0);
        let calib = CalibrationSet::builtin(task);
        for (name, plane) in &contents {
            let frame = gray(plane, Encoding::Pq);
            let result = run_task(&frame, &frame, &config, &calib).unwrap();
            runs += 1;
            let worst_map = result
                .maps()
                .iter()
                .map(|(_, p)| p.as_slice().iter().fold(0.0f64, |a, &v| a.max(v.abs())))
                .fold(0.0, f64::max);
            let ok = match &result.payload {
                TaskPayload::Quality { score, .. } => score.jod == 10.0,
                TaskPayload::Detection { probability, .. } => *probability == 0.0,
                _ => true,
            } && worst_map <= 1e-12
                && !result.maps().is_empty();
            if !ok {
                failures.push(format!(
                    "{task}/{name}: score {:?}, max map {worst_map:e}",
                    result.score()
                ));
            }
        }
    }
    within_budget(
        start.elapsed(),
        Duration::from_secs(30),
        Outcome::new(
            failures.is_empty(),
            if failures.is_empty() {
                format!("{runs} task/content pairs at {n}x{n} exact")
            } else {
                failures.join("; ")
            },
        ),
    )
}

fn monotone_degradation() -> Outcome {
    let start = Instant::now();
    let n = 256;
    let reference = dead_leaves(n, n, 0.3, 0.6, 3);
    let noise = gaussian_noise(n, n, 5);
    let amplitudes = [0.0, 0.002, 0.005, 0.01, 0.02, 0.04];
    let ref_frame = gray(&reference, Encoding::Pq);
    let score = |task: Task, a: f64| {
        let test = reference.zip_map(&noise, |r, z| r + a * z).unwrap();
        run_task(
            &gray(&test, Encoding::Pq),
            &ref_frame,
            &RunConfig::new(task, 60.0),
            &CalibrationSet::builtin(task),
        )
        .unwrap()
        .score()
        .unwrap()
    };
    let jods: Vec<f64> = amplitudes.iter().map(|&a| score(Task::Quality, a)).collect();
    let dets: Vec<f64> = amplitudes.iter().map(|&a| score(Task::Detection, a)).collect();
    let jod_ok = jods.windows(2).filter(|w| w[1] <= w[0]).count();
    let det_ok = dets.windows(2).filter(|w| w[1] >= w[0]).count();
    within_budget(
        start.elapsed(),
        Duration::from_secs(120),
        Outcome::new(
            jod_ok == 5 && det_ok == 5,
            format!("JOD orderings {jod_ok}/5 {jods:.3?}; detection orderings {det_ok}/5 {dets:.3?}"),
        ),
    )
}

fn pyramid_fidelity() -> Outcome {
    let n = 256;
    let ppd = 60.0;
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let img = uniform_noise(n, n, -3.0, 5.0, 100 + seed);
        let range = img.max() - img.min();
        let back = reconstruct(&decompose(&img, ppd, 4).unwrap()).unwrap();
        let err = img
            .as_slice()
            .iter()
            .zip(back.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err / range);
    }
    let levels = decompose(&flat(n, n, 0.0), ppd, 4).unwrap().level_count();
    let mut min_share = 1.0f64;
    for k in 0..levels {
        let f = 0.25 / (1 << k) as f64;
        let grating = Plane::from_fn(n, n, |x, _| (2.0 * std::f64::consts::PI * f * (x as f64 + 0.5)).cos());
        let pyr = decompose(&grating, ppd, 4).unwrap();
        let mean = grating.mean();
        let ac: f64 = grating.as_slice().iter().map(|v| (v - mean).powi(2)).sum();
        let share = 4f64.powi(k as i32) * pyr.band(k, 0).energy() / ac;
        min_share = min_share.min(share);
    }
    Outcome::new(
        worst <= 1e-4 && min_share >= 0.8,
        format!(
            "max round-trip error {worst:.1e} x range over 10 images; min grating share {:.1}% over {levels} levels",
            100.0 * min_share
        ),
    )
}

fn optics() -> Outcome {
    let calib = CalibrationSet::builtin(Task::Quality);
    let mut dc_exact = true;
    let mut worst_mean = 0.0f64;
    let mut age_violations = 0usize;
    let mut compared = 0usize;
    for mode in [GlareMode::Mtf, GlareMode::Cie99] {
        for &(w, h) in &[(64, 64), (96, 40)] {
            let config = |age| OpticsConfig {
                glare_mode: mode,
                age,
                ppd: 30.0,
            };
            let young = build_glare_filter(&config(24.0), w, h, &calib.optics).unwrap();
            let old = build_glare_filter(&config(70.0), w, h, &calib.optics).unwrap();
            dc_exact &= young.dc_gain() == 1.0 && old.dc_gain() == 1.0;
            for (i, (&g_old, &g_young)) in old
                .mirror_filter()
                .response()
                .iter()
                .zip(young.mirror_filter().response())
                .enumerate()
            {
                if i == 0 {
                    continue;
                }
                compared += 1;
                if g_old > g_young + 1e-12 {
                    age_violations += 1;
                }
            }
            let mut spike = Plane::filled(w, h, 0.1);
            spike.set(w / 3, h / 2, 5000.0);
            for (seed, img) in [uniform_noise(w, h, 0.01, 4000.0, 9), spike].into_iter().enumerate() {
                let out = young.apply_plane(&img).unwrap();
                worst_mean = worst_mean.max(rel(out.mean(), img.mean()));
                let _ = seed;
            }
        }
    }
    Outcome::new(
        dc_exact && worst_mean <= 1e-6 && age_violations == 0,
        format!(
            "DC gain exactly 1: {dc_exact}; worst mean drift {worst_mean:.1e}; age-70 gain above age-24 at {age_violations}/{compared} frequencies"
        ),
    )
}

fn masking_properties() -> Outcome {
    let base = CalibrationSet::builtin(Task::Quality).masking;
    let steep = MaskingParams {
        p: 2.4,
        q: 1.3,
        gamma: 0.6,
        sigma: 0.8,
        ..base
    };
    let mut worst_grad = 0.0f64;
    for params in [base, steep] {
        for i in 0..60 {
            let mag = 10f64.powf(-2.0 + 4.0 * i as f64 / 59.0);
            for c in [mag, -mag] {
                for m in [0.0, 0.5, 5.0, 50.0] {
                    let h = 1e-6 * c.abs();
                    let numeric =
                        (masking_transducer(c + h, m, &params) - masking_transducer(c - h, m, &params)) / (2.0 * h);
                    let analytic = masking_transducer_derivative(c, m, &params);
                    worst_grad = worst_grad.max(rel(analytic, numeric));
                }
            }
        }
    }

    let n = 128;
    let ppd = 60.0;
    let csf = CalibrationSet::builtin(Task::Quality).csf;
    let adapt = flat(n, n, 100.0);
    let grating = |f: f64, theta: f64, phase: f64, amp: f64| {
        let (c, s) = (theta.cos(), theta.sin());
        Plane::from_fn(n, n, move |x, y| {
            let u = c * (x as f64 + 0.5) + s * (y as f64 + 0.5);
            amp * (2.0 * std::f64::consts::PI * f * u + phase).cos()
        })
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let maskers: [(&str, f64, f64, f64); 5] = [
        ("same phase", 1.0, 0.0, 0.0),
        ("opposite phase", 1.0, 0.0, std::f64::consts::PI),
        ("quadrature", 1.0, 0.0, half_pi),
        ("orthogonal", 1.0, half_pi, 0.0),
        ("octave below", 0.5, 0.0, 0.0),
    ];
    let mut passed = 0;
    let mut total = 0;
    let mut failures = Vec::new();
    for level in 1..=4 {
        let f = 0.25 / (1 << level) as f64;
        let target = grating(f, 0.0, 0.0, 0.02);
        for (name, rel_f, theta, phase) in maskers {
            total += 1;
            let mut previous: Option<Vec<f64>> = None;
            let mut ok = true;
            for amp in [0.0, 0.01, 0.03, 0.1, 0.3, 1.0] {
                let masker = grating(f * rel_f, theta, phase, amp);
                let test = masker.zip_map(&target, |a, b| a + b).unwrap();
                let pr = normalize_by_csf(&decompose(&masker, ppd, 4).unwrap(), &adapt, &csf).unwrap();
                let pt = normalize_by_csf(&decompose(&test, ppd, 4).unwrap(), &adapt, &csf).unwrap();
                let d = masked_difference(&pt, &pr, &base).unwrap();
                let mags: Vec<f64> = d
                    .bands()
                    .indices()
                    .into_iter()
                    .flat_map(|i| {
                        d.bands()
                            .get(i)
                            .unwrap()
                            .as_slice()
                            .iter()
                            .map(|v| v.abs())
                            .collect::<Vec<_>>()
                    })
                    .collect();
                if let Some(prev) = &previous {
                    let scale = prev.iter().cloned().fold(0.0, f64::max);
                    if mags.iter().zip(prev).any(|(now, before)| *now > before + 1e-9 * scale) {
                        ok = false;
                    }
                }
                previous = Some(mags);
            }
            if ok {
                passed += 1;
            } else {
                failures.push(format!("level {level} {name}"));
            }
        }
    }
    Outcome::new(
        worst_grad <= 1e-5 && passed == total,
        format!(
            "transducer gradient worst rel err {worst_grad:.1e}; masking monotone in {passed}/{total} grating cases{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!(" (failed: {})", failures.join(", "))
            }
        ),
    )
}

fn video_protocol() -> Outcome {
    let n = 64;
    let reference = dead_leaves(n, n, 0.3, 0.6, 21);
    let noise = gaussian_noise(n, n, 22);
    let test: Vec<DisplayEncodedFrame> = (0..61)
        .map(|i| {
            gray(
                &reference.zip_map(&noise, |r, z| r + 2e-4 * i as f64 * z).unwrap(),
                Encoding::Pq,
            )
        })
        .collect();
    let refs: Vec<DisplayEncodedFrame> = (0..61).map(|_| gray(&reference, Encoding::Pq)).collect();
    let calib = CalibrationSet::builtin(Task::Quality);
    let mut config = RunConfig::new(Task::Quality, 60.0);
    config.frame_step = 30;

    let known: Vec<f64> = [0, 30, 60]
        .iter()
        .map(|&i| run_task(&test[i], &refs[i], &config, &calib).unwrap().score().unwrap())
        .collect();
    let expected = known.iter().sum::<f64>() / known.len() as f64;

    config.parallel = true;
    let par = run_video(&test, &refs, &config, &calib).unwrap();
    config.parallel = false;
    let ser = run_video(&test, &refs, &config, &calib).unwrap();
    let frames: Vec<usize> = par.per_frame.iter().map(|f| f.frame).collect();
    let json_par = par.document(&config, &calib, Default::default()).to_json();
    let json_ser = ser.document(&config, &calib, Default::default()).to_json();
    let pass = par.score() == Some(expected) && frames == [0, 30, 60] && json_par == json_ser;
    Outcome::new(
        pass,
        format!(
            "frames {frames:?}, video score {:?} vs mean of per-frame runs {expected}; parallel/serial JSON identical: {}",
            par.score(),
            json_par == json_ser
        ),
    )
}

fn rows(pred: &[f64], mos: &[f64]) -> Vec<BenchmarkRow> {
    pred.iter()
        .zip(mos)
        .enumerate()
        .map(|(i, (&p, &m))| BenchmarkRow {
            content_id: format!("item{i}"),
            predicted: p,
            mos: m,
        })
        .collect()
}

/// Pearson via raw sums, a different route than the library's centred form.
fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

fn benchmark_statistics() -> Outcome {
    // (predictions, mos, hand-assigned ranks of predictions, ranks of mos)
    type Fixture = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);
    let fixtures: Vec<Fixture> = vec![
        (
            vec![1.0, 2.0, 3.0],
            vec![1.0, 3.0, 2.0],
            vec![1.0, 2.0, 3.0],
            vec![1.0, 3.0, 2.0],
        ),
        (
            vec![0.0, 1.0, 2.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 2.0, 3.0],
            vec![1.5, 3.0, 1.5],
        ),
        (
            vec![7.1, 3.3, 9.8, 5.0, 6.2, 1.4],
            vec![62.0, 40.0, 75.0, 58.0, 49.0, 30.0],
            vec![5.0, 2.0, 6.0, 3.0, 4.0, 1.0],
            vec![5.0, 2.0, 6.0, 4.0, 3.0, 1.0],
        ),
        (
            vec![2.0, 2.0, 5.0, 1.0, 5.0, 5.0, 3.0],
            vec![10.0, 12.0, 12.0, 8.0, 15.0, 14.0, 12.0],
            vec![2.5, 2.5, 6.0, 1.0, 6.0, 6.0, 4.0],
            vec![2.0, 4.0, 4.0, 1.0, 7.0, 6.0, 4.0],
        ),
        (
            vec![1.0, 2.0, 3.0, 4.0],
            vec![3.0, 5.0, 7.0, 9.0],
            vec![1.0, 2.0, 3.0, 4.0],
            vec![1.0, 2.0, 3.0, 4.0],
        ),
    ];
    let mut worst = 0.0f64;
    for (p, m, rp, rm) in &fixtures {
        let r = rows(p, m);
        worst = worst.max((srocc(&r).unwrap() - pearson_oracle(rp, rm)).abs());
        worst = worst.max((plcc(&r).unwrap() - pearson_oracle(p, m)).abs());
    }
    // Untied fixture also checked against the rank-difference formula.
    let (_, _, rp, rm) = &fixtures[2];
    let d2: f64 = rp.iter().zip(rm).map(|(a, b)| (a - b).powi(2)).sum();
    let nn = rp.len() as f64;
    let classic = 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
    worst = worst.max((srocc(&rows(&fixtures[2].0, &fixtures[2].1)).unwrap() - classic).abs());
    let spec_values = srocc(&rows(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0])).unwrap() == 0.5
        && plcc(&rows(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0])).unwrap() == 0.0;
    Outcome::new(
        worst <= 1e-12 && spec_values,
        format!("5 fixtures, worst deviation from oracles {worst:.1e}"),
    )
}

fn detection_threshold(cpd: f64) -> f64 {
    let (size, ppd, background) = (256, 60.0, 100.0);
    let reference = gray(&flat(size, size, background), Encoding::Linear);
    let calib = CalibrationSet::builtin(Task::Detection);
    let config = RunConfig::new(Task::Detection, ppd);
    let evaluator = vdp::Evaluator::new(&config, &calib).unwrap();
    let probability = |contrast: f64| {
        let test = gray(
            &gabor_luminance(size, ppd, cpd, 0.5, background, contrast),
            Encoding::Linear,
        );
        evaluator.evaluate(&test, &reference).unwrap().score().unwrap()
    };
    let (mut lo, mut hi) = (1e-5f64, 1.0f64);
    for _ in 0..30 {
        let mid = (lo * hi).sqrt();
        if probability(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

fn detection_plausibility() -> Outcome {
    let start = Instant::now();
    let low = detection_threshold(4.0);
    let high = detection_threshold(24.0);
    within_budget(
        start.elapsed(),
        Duration::from_secs(300),
        Outcome::new(
            low < high,
            format!("threshold contrast at 100 cd/m^2: 4 cpd {low:.5}, 24 cpd {high:.5}"),
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("display model anchor", display_anchor),
        ("identity suite", identity_suite),
        ("monotone degradation", monotone_degradation),
        ("pyramid fidelity", pyramid_fidelity),
        ("optics", optics),
        ("masking properties", masking_properties),
        ("video protocol", video_protocol),
        ("benchmark statistics", benchmark_statistics),
        ("detection plausibility", detection_plausibility),
    ];
    // Optional positional arguments select criteria by number.
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !selected.is_empty() && !selected.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = check();
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} ({:.1?}) {}",
            i + 1,
            name,
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed(),
            outcome.detail
        );
    }
    println!("{}/{ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
