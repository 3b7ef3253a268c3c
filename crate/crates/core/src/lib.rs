//! A visual difference predictor for HDR and SDR content.
//!
//! Given a test and a reference image (or video frames) in display-encoded
//! form, the pipeline simulates the display, the optics and photoreceptors
//! of the eye, decomposes the retinal response into frequency and
//! orientation bands, applies contrast sensitivity and masking, and finally
//! predicts one of:
//!
//! * quality degradation in JOD units ([`Task::Quality`]),
//! * per-pixel visibility of differences ([`Task::SideBySide`], [`Task::Flicker`]),
//! * a single detection probability ([`Task::Detection`]),
//! * maps of lost, amplified and reversed contrast ([`Task::Civdm`]).
//!
//! ```
//! use vdp::{run_task, CalibrationSet, DisplayEncodedFrame, Encoding, Plane, RunConfig, Task};
//!
//! let reference = Plane::from_fn(64, 64, |x, _| 0.4 + 0.1 * (x as f64 * 0.4).sin());
//! let test = reference.map(|v| v + 0.02);
//! let config = RunConfig::new(Task::Quality, 60.0);
//! let calib = CalibrationSet::builtin(Task::Quality);
//! let result = run_task(
//!     &DisplayEncodedFrame::from_gray(&test, Encoding::Pq)?,
//!     &DisplayEncodedFrame::from_gray(&reference, Encoding::Pq)?,
//!     &config,
//!     &calib,
//! )?;
//! assert!(result.score().unwrap() < 10.0);
//! # Ok::<(), vdp::VdpError>(())
//! ```

pub mod calibration;
pub mod csf_masking;
pub mod display_model;
pub mod error;
pub mod heads;
pub mod imgio;
pub mod optics_retina;
pub mod pyramid;
pub mod raster;
pub mod spectral;
pub mod stats;
pub mod tasks_runtime;

pub use calibration::{load_calibration, CalibrationSet};
pub use display_model::{apply_display_model, pq_decode, pq_encode, DisplayParams, Eotf, Primaries, RadianceMap};
pub use error::{Result, VdpError};
pub use heads::{CivdmResult, QualityScore, VisibilityMap};
pub use imgio::{list_frames, load_image, write_heatmap, DisplayEncodedFrame, Encoding};
pub use optics_retina::{GlareMode, OpticsConfig, RetinalResponseMap};
pub use pyramid::{decompose, reconstruct, BandIndex, BandPyramid};
pub use raster::Plane;
pub use stats::{plcc, srocc, BenchmarkRow};
pub use tasks_runtime::{
    run_task, run_video, run_video_with, Evaluator, FrameScore, ResultDocument, RunConfig, Task, TaskPayload,
    TaskResult,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/display.md")]
    mod display {}
    #[doc = include_str!("../../../book/src/optics.md")]
    mod optics {}
    #[doc = include_str!("../../../book/src/bands.md")]
    mod bands {}
    #[doc = include_str!("../../../book/src/masking.md")]
    mod masking {}
    #[doc = include_str!("../../../book/src/heads.md")]
    mod heads {}
    #[doc = include_str!("../../../book/src/video.md")]
    mod video {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
