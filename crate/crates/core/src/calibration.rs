//! Per-task calibration files.
//!
//! A calibration file is TOML: a top-level `task` name followed by one table
//! per parameter group. Every parameter the model reads must be present;
//! unknown keys and tables are accepted with a warning so newer files still
//! load in older builds.
//!
//! ```toml
//! task = "quality"
//!
//! [psychometric_params]
//! alpha = 1.0
//! beta = 3.5
//! # ... remaining tables ...
//! ```
//!
//! Default files for every task ship under `calib/<task>.cfg` and are
//! compiled into the library (see [`CalibrationSet::builtin`]).

use std::collections::BTreeSet;
use std::path::Path;

use log::warn;
use serde::Serialize;
use toml::{Table, Value};

use crate::csf_masking::{CsfParams, MaskingParams, MaskingSource};
use crate::error::{Result, VdpError};
use crate::heads::{DetectionReduction, JodParams, PoolingParams, PsychometricParams};
use crate::optics_retina::OpticsParams;
use crate::pyramid::PyramidParams;
use crate::tasks_runtime::Task;

/// Named per-task parameter bundle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationSet {
    pub task: Task,
    pub csf: CsfParams,
    pub masking: MaskingParams,
    pub pooling: PoolingParams,
    pub psychometric: PsychometricParams,
    pub jod: JodParams,
    pub optics: OpticsParams,
    pub pyramid: PyramidParams,
    /// Unknown keys found while loading, as `table.key`.
    #[serde(skip)]
    pub warnings: Vec<String>,
}

const BUILTIN_QUALITY: &str = include_str!("../calib/quality.cfg");
const BUILTIN_SIDE_BY_SIDE: &str = include_str!("../calib/side-by-side.cfg");
const BUILTIN_FLICKER: &str = include_str!("../calib/flicker.cfg");
const BUILTIN_DETECTION: &str = include_str!("../calib/detection.cfg");
const BUILTIN_CIVDM: &str = include_str!("../calib/civdm.cfg");

impl CalibrationSet {
    /// The shipped default calibration for `task`.
    pub fn builtin(task: Task) -> CalibrationSet {
        let text = match task {
            Task::Quality => BUILTIN_QUALITY,
            Task::SideBySide => BUILTIN_SIDE_BY_SIDE,
            Task::Flicker => BUILTIN_FLICKER,
            Task::Detection => BUILTIN_DETECTION,
            Task::Civdm => BUILTIN_CIVDM,
        };
        Self::from_toml_str(text).expect("shipped calibration files are valid")
    }

    pub fn from_toml_str(text: &str) -> Result<CalibrationSet> {
        let mut doc: Table = text.parse().map_err(|e: toml::de::Error| VdpError::MalformedValue {
            key: "<document>".into(),
            message: e.message().to_string(),
        })?;
        let mut warnings = Vec::new();

        let task = match doc.remove("task") {
            Some(Value::String(name)) => name.parse::<Task>()?,
            Some(other) => {
                return Err(VdpError::MalformedValue {
                    key: "task".into(),
                    message: format!("expected a task name, found {}", other.type_str()),
                })
            }
            None => return Err(VdpError::MissingKey("task".into())),
        };

        let mut take = |name: &'static str| -> Result<Section> {
            match doc.remove(name) {
                Some(Value::Table(t)) => Ok(Section::new(name, t)),
                Some(_) => Err(VdpError::MalformedValue {
                    key: name.into(),
                    message: "expected a table".into(),
                }),
                None => Ok(Section::new(name, Table::new())),
            }
        };

        let mut sec = take("csf_params")?;
        let csf = CsfParams {
            peak_sensitivity: sec.get("peak_sensitivity")?,
            peak_frequency: sec.get("peak_frequency")?,
            low_frequency_rolloff: sec.get("low_frequency_rolloff")?,
            high_frequency_exponent: sec.get("high_frequency_exponent")?,
            sensitivity_knee: sec.get("sensitivity_knee")?,
            sensitivity_exponent: sec.get("sensitivity_exponent")?,
            frequency_knee: sec.get("frequency_knee")?,
            frequency_exponent: sec.get("frequency_exponent")?,
        };
        sec.finish(&mut warnings);

        let mut sec = take("masking_params")?;
        let masking = MaskingParams {
            p: sec.get("p")?,
            q: sec.get("q")?,
            gamma: sec.get("gamma")?,
            sigma: sec.get("sigma")?,
            orientation_weight: sec.get("orientation_weight")?,
            scale_weight: sec.get("scale_weight")?,
            pooling_sigma: sec.get("pooling_sigma")?,
            source: if sec.get_flag("mutual")? {
                MaskingSource::MutualMin
            } else {
                MaskingSource::Reference
            },
        };
        sec.finish(&mut warnings);

        let mut sec = take("pooling_params")?;
        let pooling = PoolingParams {
            kappa: sec.get("kappa")?,
            band_weight: sec.get("band_weight")?,
            residual_weight: sec.get("residual_weight")?,
            detection: if sec.get_flag("detection_spatial_pooling")? {
                DetectionReduction::Pooled
            } else {
                DetectionReduction::Max
            },
        };
        sec.finish(&mut warnings);

        let mut sec = take("psychometric_params")?;
        let psychometric = PsychometricParams {
            alpha: sec.get("alpha")?,
            beta: sec.get("beta")?,
        };
        sec.finish(&mut warnings);

        let mut sec = take("jod_regression")?;
        let jod = JodParams {
            a: sec.get("a")?,
            b: sec.get("b")?,
        };
        sec.finish(&mut warnings);

        let mut sec = take("optics_params")?;
        let optics = OpticsParams {
            adaptation_sigma_deg: sec.get("adaptation_sigma_deg")?,
            pupil_field_area_deg2: sec.get("pupil_field_area_deg2")?,
            pupil_reference_age: sec.get("pupil_reference_age")?,
            observer_reference_age: sec.get("observer_reference_age")?,
            photoreceptor_exponent: sec.get("photoreceptor_exponent")?,
            photoreceptor_knee: sec.get("photoreceptor_knee")?,
            pigmentation: sec.get("pigmentation")?,
        };
        sec.finish(&mut warnings);

        let mut sec = take("pyramid_params")?;
        let pyramid = PyramidParams {
            orientation_count: sec.get_count("orientation_count")?,
        };
        sec.finish(&mut warnings);

        for (name, _) in doc {
            warnings.push(name.clone());
            warn!("calibration: ignoring unknown table or key `{name}`");
        }

        csf.validate()?;
        masking.validate()?;
        pooling.validate()?;
        psychometric.validate()?;
        jod.validate()?;
        optics.validate()?;
        pyramid.validate()?;

        Ok(CalibrationSet {
            task,
            csf,
            masking,
            pooling,
            psychometric,
            jod,
            optics,
            pyramid,
            warnings,
        })
    }
}

/// Reads and resolves a calibration file.
pub fn load_calibration(path: impl AsRef<Path>) -> Result<CalibrationSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| VdpError::io(path, e))?;
    CalibrationSet::from_toml_str(&text)
}

struct Section {
    name: &'static str,
    table: Table,
    used: BTreeSet<String>,
}

impl Section {
    fn new(name: &'static str, table: Table) -> Self {
        Section {
            name,
            table,
            used: BTreeSet::new(),
        }
    }

    fn get(&mut self, key: &str) -> Result<f64> {
        let full = format!("{}.{}", self.name, key);
        let value = match self.table.get(key) {
            Some(Value::Float(f)) => *f,
            Some(Value::Integer(i)) => *i as f64,
            Some(other) => {
                return Err(VdpError::MalformedValue {
                    key: full,
                    message: format!("expected a number, found {}", other.type_str()),
                })
            }
            None => return Err(VdpError::MissingKey(full)),
        };
        if !value.is_finite() {
            return Err(VdpError::MalformedValue {
                key: full,
                message: "value is not finite".into(),
            });
        }
        self.used.insert(key.to_string());
        Ok(value)
    }

    /// A 0/1 switch stored as a number.
    fn get_flag(&mut self, key: &str) -> Result<bool> {
        match self.get(key)? {
            0.0 => Ok(false),
            1.0 => Ok(true),
            v => Err(VdpError::MalformedValue {
                key: format!("{}.{}", self.name, key),
                message: format!("expected 0 or 1, found {v}"),
            }),
        }
    }

    fn get_count(&mut self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        if v < 1.0 || v.fract() != 0.0 {
            return Err(VdpError::MalformedValue {
                key: format!("{}.{}", self.name, key),
                message: format!("expected a positive integer, found {v}"),
            });
        }
        Ok(v as usize)
    }

    fn finish(self, warnings: &mut Vec<String>) {
        for key in self.table.keys() {
            if !self.used.contains(key) {
                let full = format!("{}.{}", self.name, key);
                warn!("calibration: ignoring unknown key `{full}`");
                warnings.push(full);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_loads_with_matching_task() {
        for task in Task::ALL {
            let c = CalibrationSet::builtin(task);
            assert_eq!(c.task, task);
            assert!(c.warnings.is_empty(), "{task}: {:?}", c.warnings);
        }
    }

    #[test]
    fn missing_key_is_named() {
        let text = BUILTIN_QUALITY.replace("beta = 3.5", "");
        match CalibrationSet::from_toml_str(&text) {
            Err(VdpError::MissingKey(k)) => assert_eq!(k, "psychometric_params.beta"),
            other => panic!("expected missing key, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_warns() {
        let text = BUILTIN_QUALITY.replace("beta = 3.5", "beta = 3.5\nexperimental_slope = 2.0");
        let c = CalibrationSet::from_toml_str(&text).unwrap();
        assert_eq!(c.warnings, vec!["psychometric_params.experimental_slope"]);
    }

    #[test]
    fn malformed_number_and_unknown_task() {
        let text = BUILTIN_QUALITY.replace("beta = 3.5", "beta = \"steep\"");
        assert!(matches!(
            CalibrationSet::from_toml_str(&text),
            Err(VdpError::MalformedValue { ref key, .. }) if key == "psychometric_params.beta"
        ));
        let text = BUILTIN_QUALITY.replace("task = \"quality\"", "task = \"ranking\"");
        assert!(matches!(
            CalibrationSet::from_toml_str(&text),
            Err(VdpError::UnknownTask(ref t)) if t == "ranking"
        ));
    }
}
