mod common;

use vdp::calibration::CalibrationSet;
use vdp::csf_masking::csf_sensitivity;
use vdp::optics_retina::{local_adaptation, luminance_gain, photoreceptor_response, steady_state_response};
use vdp::spectral::MirrorFilter;
use vdp::{load_image, run_task, DisplayEncodedFrame, Encoding, Plane, RunConfig, Task, TaskPayload};

#[test]
fn steady_state_response_integrates_the_gain() {
    let p = CalibrationSet::builtin(Task::Quality).optics;
    for &l in &[0.01, 0.5, 20.0, 300.0, 8000.0] {
        // Trapezoid rule over log luminance from far below the knee.
        let (lo, hi) = (1e-14f64.ln(), f64::ln(l));
        let n = 20_000;
        let step = (hi - lo) / n as f64;
        let integral: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * luminance_gain((lo + i as f64 * step).exp(), &p)
            })
            .sum::<f64>()
            * step;
        let model = steady_state_response(l, &p);
        assert!((integral - model).abs() <= 0.02 * model, "l={l}: {integral} vs {model}");
        assert_eq!(photoreceptor_response(l, l, &p).unwrap(), model);
    }
}

#[test]
fn checkerboard_adapts_to_geometric_mean() {
    let board = Plane::from_fn(120, 120, |x, y| if (x / 4 + y / 4) % 2 == 0 { 1.0 } else { 10_000.0 });
    let adapt = local_adaptation(&board, 60.0, 1.0).unwrap();
    for y in 30..90 {
        for x in 30..90 {
            let v = adapt.get(x, y);
            assert!((v / 100.0 - 1.0).abs() < 0.05, "({x},{y}) adapted to {v}");
        }
    }
}

/// Direct convolution on the mirror torus, the reference for the spectral path.
fn mirror_convolve(img: &Plane, k: impl Fn(f64, f64) -> f64) -> Plane {
    let (w, h) = img.dims();
    let (pw, ph) = (2 * w as isize, 2 * h as isize);
    let torus = img.extend_mirror(2 * w, 2 * h);
    let wrap = |d: isize, n: isize| {
        let d = d.rem_euclid(n);
        if 2 * d <= n {
            d as f64
        } else {
            (d - n) as f64
        }
    };
    let mut total = 0.0;
    for y in 0..ph {
        for x in 0..pw {
            total += k(wrap(x, pw), wrap(y, ph));
        }
    }
    Plane::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for sy in 0..ph {
            for sx in 0..pw {
                let kv = k(wrap(x as isize - sx, pw), wrap(y as isize - sy, ph));
                acc += kv * torus.get(sx as usize, sy as usize);
            }
        }
        acc / total
    })
}

#[test]
fn spectral_filter_matches_direct_convolution() {
    let kernel = |dx: f64, dy: f64| (-dx.abs() / 3.0 - dy * dy / 8.0).exp();
    let mut img = common::uniform_noise(24, 18, 0.0, 1.0, 4);
    img.set(7, 9, 200.0);
    let filter = MirrorFilter::from_kernel(24, 18, kernel);
    let fast = filter.apply(&img);
    let slow = mirror_convolve(&img, kernel);
    for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn sensitivity_rises_with_luminance_and_falls_at_high_frequency() {
    let csf = CalibrationSet::builtin(Task::Quality).csf;
    for i in 0..25 {
        let f = 0.5 * 1.25f64.powi(i);
        let dim = csf_sensitivity(f, 0.1, &csf).unwrap();
        let bright = csf_sensitivity(f, 100.0, &csf).unwrap();
        assert!(bright >= dim, "f={f}: {bright} < {dim}");
    }
    for &l in &[0.01, 1.0, 100.0, 10_000.0] {
        assert!(csf_sensitivity(32.0, l, &csf).unwrap() < csf_sensitivity(4.0, l, &csf).unwrap());
    }
    assert!(csf_sensitivity(0.0, 10.0, &csf).is_err());
    assert!(csf_sensitivity(4.0, -1.0, &csf).is_err());
}

fn civdm_maps(test: &Plane, reference: &Plane) -> vdp::CivdmResult {
    let frame = |p: &Plane| common::gray(p, Encoding::Linear);
    let config = RunConfig::new(Task::Civdm, 60.0);
    let result = run_task(
        &frame(test),
        &frame(reference),
        &config,
        &CalibrationSet::builtin(Task::Civdm),
    )
    .unwrap();
    match result.payload {
        TaskPayload::Civdm(maps) => maps,
        other => panic!("unexpected payload {other:?}"),
    }
}

#[test]
fn flattened_content_is_reported_as_loss() {
    let grating = common::gabor_luminance(128, 60.0, 4.0, 0.4, 50.0, 0.5);
    let flat = Plane::filled(128, 128, 50.0);

    let lost = civdm_maps(&flat, &grating);
    assert!(lost.loss.max() > 0.5, "loss peak {}", lost.loss.max());
    assert!(lost.amplification.max() < 1e-9);

    let added = civdm_maps(&grating, &flat);
    assert!(added.amplification.max() > 0.5);
    assert!(added.loss.max() < 1e-9);

    let inverted = grating.map(|v| 100.0 - v);
    let reversed = civdm_maps(&inverted, &grating);
    assert!(
        reversed.reversal.max() > 0.5,
        "reversal peak {}",
        reversed.reversal.max()
    );
}

#[test]
fn png_frames_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<f64> = (0..5 * 4 * 3).map(|i| (i * 977 % 65536) as f64 / 65535.0).collect();
    let frame = DisplayEncodedFrame::new(5, 4, Encoding::Pq, data).unwrap();
    let path = dir.path().join("frame_000000.png");
    frame.save_png16(&path).unwrap();
    let back = load_image(&path, Encoding::Pq).unwrap();
    assert_eq!(back.dims(), (5, 4));
    for (a, b) in frame.samples().iter().zip(back.samples()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(DisplayEncodedFrame::new(2, 2, Encoding::Linear, vec![1.0; 12])
        .unwrap()
        .save_png16(dir.path().join("x.png"))
        .is_err());
}

#[test]
fn missing_and_malformed_files_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = load_image(dir.path().join("nope.png"), Encoding::Pq).unwrap_err();
    assert_eq!(missing.exit_code(), 2);
    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"not an image").unwrap();
    assert_eq!(load_image(&junk, Encoding::Pq).unwrap_err().exit_code(), 2);
}

#[test]
fn frames_are_listed_in_numeric_order() {
    let dir = tempfile::tempdir().unwrap();
    let frame = common::gray(&Plane::filled(4, 4, 0.5), Encoding::Pq);
    for n in [12, 3, 100] {
        frame.save_png16(dir.path().join(format!("frame_{n:06}.png"))).unwrap();
    }
    std::fs::write(dir.path().join("frame_7.png"), b"").unwrap();
    std::fs::write(dir.path().join("notes.txt"), b"").unwrap();
    let names: Vec<String> = vdp::list_frames(dir.path())
        .unwrap()
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["frame_000003.png", "frame_000012.png", "frame_000100.png"]);
}
