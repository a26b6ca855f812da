use std::fs;
use std::path::Path;

use corrlab_core::behavior::BEHAVIOR_FORMAT;
use corrlab_core::hv::HVMODEL_FORMAT;
use corrlab_core::{evaluate, model_class, Behavior, HvModel, ModelClass};
use serde_json::Value;

use crate::Failure;

/// A behavior read from disk, either directly or by evaluating a model.
pub struct Input {
    pub format: &'static str,
    pub behavior: Behavior,
    pub model: Option<(HvModel, ModelClass)>,
}

impl Input {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
        let doc: Value = serde_json::from_str(&text).map_err(corrlab_core::Error::from)?;
        let format = doc.get("format").and_then(Value::as_str);
        if format == Some(HVMODEL_FORMAT) {
            let model = HvModel::from_json_value(&doc)?;
            let class = model_class(&model)?;
            return Ok(Self {
                format: HVMODEL_FORMAT,
                behavior: evaluate(&model),
                model: Some((model, class)),
            });
        }
        Ok(Self {
            format: BEHAVIOR_FORMAT,
            behavior: Behavior::from_json_value(&doc)?,
            model: None,
        })
    }
}
