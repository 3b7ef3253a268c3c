//! Task dispatch, the end-to-end pipeline and the frame-sampled video protocol.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationSet;
use crate::csf_masking::{
    adaptation_levels, apply_sensitivity, masked_difference, sensitivity_levels, PerceptualDifferencePyramid,
};
use crate::display_model::{apply_display_model, DisplayParams};
use crate::error::{Result, VdpError};
use crate::heads::{civdm, quality_jod, reduce_visibility, visibility_map, CivdmResult, QualityScore, VisibilityMap};
use crate::imgio::DisplayEncodedFrame;
use crate::optics_retina::{retinal_pair, GlareCache, GlareMode, OpticsConfig};
use crate::pyramid::{decompose, BandPyramid};
use crate::raster::Plane;

/// What the metric predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Quality degradation in JOD units.
    Quality,
    /// Visibility map for images viewed next to each other.
    SideBySide,
    /// Visibility map for images swapped in place.
    Flicker,
    /// Single probability of noticing any difference.
    Detection,
    /// Maps of lost, amplified and reversed contrast.
    Civdm,
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::Quality,
        Task::SideBySide,
        Task::Flicker,
        Task::Detection,
        Task::Civdm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Quality => "quality",
            Task::SideBySide => "side-by-side",
            Task::Flicker => "flicker",
            Task::Detection => "detection",
            Task::Civdm => "civdm",
        }
    }

    /// Whether the task produces a single score that video averaging applies to.
    pub fn is_scored(self) -> bool {
        matches!(self, Task::Quality | Task::Detection)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = VdpError;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| VdpError::UnknownTask(s.to_string()))
    }
}

/// Observer age assumed when none is given, years.
pub const DEFAULT_AGE: f64 = 24.0;
/// Default video sampling: every 30th frame.
pub const DEFAULT_FRAME_STEP: usize = 30;

/// Viewing conditions and run options.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub task: Task,
    /// Pixels per visual degree.
    pub ppd: f64,
    pub display: DisplayParams,
    /// Observer age, years.
    pub age: f64,
    pub glare: GlareMode,
    /// Video sampling interval in frames.
    pub frame_step: usize,
    /// Evaluate video frames concurrently. Results do not depend on it.
    #[serde(skip)]
    pub parallel: bool,
}

impl RunConfig {
    /// HDR PQ display, default observer, MTF glare.
    pub fn new(task: Task, ppd: f64) -> Self {
        RunConfig {
            task,
            ppd,
            display: DisplayParams::pq(),
            age: DEFAULT_AGE,
            glare: GlareMode::Mtf,
            frame_step: DEFAULT_FRAME_STEP,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optics().validate()?;
        self.display.validate()?;
        if self.frame_step == 0 {
            return Err(VdpError::InvalidParameter("frame step must be >= 1".into()));
        }
        Ok(())
    }

    pub fn optics(&self) -> OpticsConfig {
        OpticsConfig {
            glare_mode: self.glare,
            age: self.age,
            ppd: self.ppd,
        }
    }
}

/// Score of one evaluated video frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameScore {
    pub frame: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskPayload {
    Quality {
        score: QualityScore,
        visibility: Option<VisibilityMap>,
    },
    Visibility(VisibilityMap),
    Detection {
        probability: f64,
        visibility: Option<VisibilityMap>,
    },
    Civdm(CivdmResult),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    pub task: Task,
    pub payload: TaskPayload,
    /// Per-frame scores for scored tasks; a single entry for an image pair.
    pub per_frame: Vec<FrameScore>,
}

impl TaskResult {
    /// JOD for quality, probability for detection.
    pub fn score(&self) -> Option<f64> {
        match &self.payload {
            TaskPayload::Quality { score, .. } => Some(score.jod),
            TaskPayload::Detection { probability, .. } => Some(*probability),
            _ => None,
        }
    }

    /// Named per-pixel maps carried by the result, each with values in `[0, 1]`.
    pub fn maps(&self) -> Vec<(&'static str, &Plane)> {
        match &self.payload {
            TaskPayload::Quality { visibility, .. } | TaskPayload::Detection { visibility, .. } => {
                visibility.iter().map(|v| ("visibility", &v.probability)).collect()
            }
            TaskPayload::Visibility(v) => vec![("visibility", &v.probability)],
            TaskPayload::Civdm(c) => vec![
                ("loss", &c.loss),
                ("amplification", &c.amplification),
                ("reversal", &c.reversal),
            ],
        }
    }

    /// The JSON result document; `map_paths` names the files maps were written to.
    pub fn document(
        &self,
        config: &RunConfig,
        calib: &CalibrationSet,
        map_paths: BTreeMap<String, String>,
    ) -> ResultDocument {
        ResultDocument {
            task: self.task,
            score: self.score(),
            per_frame: self.per_frame.clone(),
            maps: map_paths,
            config_echo: ConfigEcho {
                run: config.clone(),
                calibration: calib.clone(),
            },
        }
    }
}

/// Serialized form of a result.
#[derive(Debug, Clone, Serialize)]
pub struct ResultDocument {
    pub task: Task,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub per_frame: Vec<FrameScore>,
    pub maps: BTreeMap<String, String>,
    pub config_echo: ConfigEcho,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub run: RunConfig,
    pub calibration: CalibrationSet,
}

impl ResultDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result documents always serialize")
    }
}

/// Runs the pipeline for one configuration and calibration. Holds the glare
/// filter cache, so reuse one evaluator across frames of the same size.
#[derive(Debug)]
pub struct Evaluator {
    config: RunConfig,
    calib: CalibrationSet,
    glare: GlareCache,
}

impl Evaluator {
    pub fn new(config: &RunConfig, calib: &CalibrationSet) -> Result<Self> {
        config.validate()?;
        if calib.task != config.task {
            return Err(VdpError::TaskMismatch(format!(
                "calibration is for `{}`, task is `{}`",
                calib.task, config.task
            )));
        }
        Ok(Evaluator {
            config: config.clone(),
            calib: calib.clone(),
            glare: GlareCache::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn calibration(&self) -> &CalibrationSet {
        &self.calib
    }

    /// Threshold-unit band pyramids of the test and reference images.
    pub fn normalized_pyramids(
        &self,
        test: &DisplayEncodedFrame,
        reference: &DisplayEncodedFrame,
    ) -> Result<(BandPyramid, BandPyramid)> {
        if test.dims() != reference.dims() {
            return Err(VdpError::DimensionMismatch(format!(
                "test is {:?}, reference is {:?}",
                test.dims(),
                reference.dims()
            )));
        }
        let c = &self.calib;
        let lt = apply_display_model(test, &self.config.display)?.luminance;
        let lr = apply_display_model(reference, &self.config.display)?.luminance;
        let (rt, rr) = retinal_pair(&lt, &lr, &self.config.optics(), &c.optics, &self.glare)?;
        let count = c.pyramid.orientation_count;
        let ppd = self.config.ppd;
        let (pt, pr) = rayon::join(
            || decompose(&rt.response, ppd, count),
            || decompose(&rr.response, ppd, count),
        );
        let (pt, pr) = (pt?, pr?);
        let levels = adaptation_levels(&rr.adaptation_luminance, &pr)?;
        let sensitivity = sensitivity_levels(&pr, &levels, &c.csf)?;
        Ok((
            apply_sensitivity(&pt, &sensitivity)?,
            apply_sensitivity(&pr, &sensitivity)?,
        ))
    }

    /// Masked perceptual difference between the two images.
    pub fn difference(
        &self,
        test: &DisplayEncodedFrame,
        reference: &DisplayEncodedFrame,
    ) -> Result<PerceptualDifferencePyramid> {
        let (tn, rn) = self.normalized_pyramids(test, reference)?;
        masked_difference(&tn, &rn, &self.calib.masking)
    }

    pub fn evaluate(&self, test: &DisplayEncodedFrame, reference: &DisplayEncodedFrame) -> Result<TaskResult> {
        let c = &self.calib;
        let task = self.config.task;
        let payload = if task == Task::Civdm {
            let (tn, rn) = self.normalized_pyramids(test, reference)?;
            TaskPayload::Civdm(civdm(&tn, &rn, &c.masking, &c.psychometric)?)
        } else {
            let diff = self.difference(test, reference)?;
            let vis = visibility_map(&diff, &c.psychometric);
            match task {
                Task::Quality => TaskPayload::Quality {
                    score: quality_jod(&diff, &c.pooling, &c.jod),
                    visibility: Some(vis),
                },
                Task::Detection => TaskPayload::Detection {
                    probability: reduce_visibility(&vis, c.pooling.detection),
                    visibility: Some(vis),
                },
                _ => TaskPayload::Visibility(vis),
            }
        };
        let mut result = TaskResult {
            task,
            payload,
            per_frame: Vec::new(),
        };
        if let Some(score) = result.score() {
            if !score.is_finite() {
                return Err(VdpError::Numeric(format!("{task} score is not finite")));
            }
            result.per_frame.push(FrameScore { frame: 0, score });
        }
        Ok(result)
    }
}

/// Evaluates one image pair.
pub fn run_task(
    test: &DisplayEncodedFrame,
    reference: &DisplayEncodedFrame,
    config: &RunConfig,
    calib: &CalibrationSet,
) -> Result<TaskResult> {
    Evaluator::new(config, calib)?.evaluate(test, reference)
}

/// Frame indices `0, step, 2·step, ...` below `count`.
pub fn select_frames(count: usize, step: usize) -> Result<Vec<usize>> {
    if step == 0 {
        return Err(VdpError::InvalidParameter("frame step must be >= 1".into()));
    }
    if count == 0 {
        return Err(VdpError::EmptySelection("the sequence has no frames".into()));
    }
    Ok((0..count).step_by(step).collect())
}

/// Arithmetic mean, summed in order.
pub fn mean_score(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(VdpError::EmptySelection("no scores to average".into()));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Evaluates a video given as two equally long frame lists.
pub fn run_video(
    test: &[DisplayEncodedFrame],
    reference: &[DisplayEncodedFrame],
    config: &RunConfig,
    calib: &CalibrationSet,
) -> Result<TaskResult> {
    if test.len() != reference.len() {
        return Err(VdpError::DimensionMismatch(format!(
            "test has {} frames, reference has {}",
            test.len(),
            reference.len()
        )));
    }
    let evaluator = Evaluator::new(config, calib)?;
    video_protocol(&evaluator, test.len(), |i| evaluator.evaluate(&test[i], &reference[i]))
}

/// Evaluates a video of `frame_count` frames whose pairs are produced on
/// demand by `load`, so only the selected frames are ever decoded.
pub fn run_video_with<L>(frame_count: usize, load: L, config: &RunConfig, calib: &CalibrationSet) -> Result<TaskResult>
where
    L: Fn(usize) -> Result<(DisplayEncodedFrame, DisplayEncodedFrame)> + Sync,
{
    let evaluator = Evaluator::new(config, calib)?;
    video_protocol(&evaluator, frame_count, |i| {
        let (t, r) = load(i)?;
        evaluator.evaluate(&t, &r)
    })
}

fn video_protocol<F>(evaluator: &Evaluator, frame_count: usize, eval: F) -> Result<TaskResult>
where
    F: Fn(usize) -> Result<TaskResult> + Sync,
{
    let config = evaluator.config();
    if !config.task.is_scored() {
        return Err(VdpError::InvalidParameter(format!(
            "video averaging needs a scored task (quality or detection), got `{}`",
            config.task
        )));
    }
    let frames = select_frames(frame_count, config.frame_step)?;
    let score_of = |&i: &usize| -> Result<FrameScore> {
        let r = eval(i)?;
        Ok(FrameScore {
            frame: i,
            score: r.score().expect("scored task"),
        })
    };
    let per_frame: Vec<FrameScore> = if config.parallel {
        frames.par_iter().map(score_of).collect::<Result<_>>()?
    } else {
        frames.iter().map(score_of).collect::<Result<_>>()?
    };
    let scores: Vec<f64> = per_frame.iter().map(|f| f.score).collect();
    let mean = mean_score(&scores)?;
    let payload = match config.task {
        Task::Quality => TaskPayload::Quality {
            score: QualityScore { jod: mean },
            visibility: None,
        },
        _ => TaskPayload::Detection {
            probability: mean,
            visibility: None,
        },
    };
    Ok(TaskResult {
        task: config.task,
        payload,
        per_frame,
    })
}
