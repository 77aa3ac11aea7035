//! TOML model files.
//!
//! ```toml
//! format_version = 1
//! window = 40
//!
//! [descriptor]
//! kind = "wld"
//! scales = [{ points = 8, radius = 1 }]
//! var_bins = 16
//! var_boundaries = []
//! wld = { orientations = 8, segments = 6, sub_bins = 20 }
//!
//! [[class]]
//! id = 1
//! name = "water"
//! pixel_count = 4096
//! bin_count = 960
//! indices = [480, 481]
//! weights = [0.75, 0.25]
//! ```
//!
//! Weights are written in shortest round-trip decimal form, so a model
//! survives save/load bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ClassModel, ModelSet};
use crate::descriptors::{DescriptorConfig, Histogram};
use crate::error::{Error, Result};
use crate::glcm::GlcmModel;

/// Version written to and accepted from model files.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    window: usize,
    descriptor: DescriptorConfig,
    #[serde(rename = "class")]
    classes: Vec<ClassEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassEntry {
    id: u8,
    #[serde(default)]
    name: String,
    pixel_count: usize,
    bin_count: usize,
    indices: Vec<u32>,
    weights: Vec<f64>,
}

/// Parses `text` as TOML and checks its `format_version` before anything
/// else is interpreted.
pub(crate) fn checked_table(text: &str) -> Result<toml::Table> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::CorruptModel(e.message().to_string()))?;
    match table.get("format_version") {
        Some(toml::Value::Integer(v)) if *v == i64::from(FORMAT_VERSION) => Ok(table),
        Some(toml::Value::Integer(v)) => Err(Error::VersionMismatch {
            found: u32::try_from(*v).unwrap_or(u32::MAX),
            supported: FORMAT_VERSION,
        }),
        Some(_) => Err(Error::CorruptModel("format_version must be an integer".into())),
        None => Err(Error::CorruptModel("missing format_version".into())),
    }
}

pub(crate) fn from_table<T: serde::de::DeserializeOwned>(table: toml::Table) -> Result<T> {
    T::deserialize(table).map_err(|e| Error::CorruptModel(e.message().to_string()))
}

pub(crate) fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::CorruptModel(e.to_string()))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn model_to_string(models: &ModelSet) -> Result<String> {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        window: models.window(),
        descriptor: models.config().clone(),
        classes: models
            .classes()
            .iter()
            .map(|c| ClassEntry {
                id: c.class_id,
                name: c.name.clone(),
                pixel_count: c.pixel_count,
                bin_count: c.histogram.len(),
                indices: c.histogram.indices().to_vec(),
                weights: c.histogram.weights().to_vec(),
            })
            .collect(),
    };
    to_toml(&file)
}

pub fn model_from_str(text: &str) -> Result<ModelSet> {
    let file: ModelFile = from_table(checked_table(text)?)?;
    model_from_file(file)
}

fn model_from_file(file: ModelFile) -> Result<ModelSet> {
    let config = file.descriptor;
    config.validate()?;
    let layout = config.layout_id();
    let bins = config.bin_count();
    let classes = file
        .classes
        .into_iter()
        .map(|c| {
            if c.bin_count != bins {
                return Err(Error::LayoutMismatch(format!(
                    "class {} declares {} bins, descriptor has {bins}",
                    c.id, c.bin_count
                )));
            }
            if c.indices.len() != c.weights.len() {
                return Err(Error::CorruptModel(format!(
                    "class {}: {} indices but {} weights",
                    c.id,
                    c.indices.len(),
                    c.weights.len()
                )));
            }
            if c.indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::CorruptModel(format!(
                    "class {}: indices must be strictly ascending",
                    c.id
                )));
            }
            let entries = c.indices.into_iter().zip(c.weights).collect();
            Ok(ClassModel {
                class_id: c.id,
                name: c.name,
                histogram: Histogram::from_sparse(bins, layout, entries)?,
                pixel_count: c.pixel_count,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ModelSet::new(config, file.window, classes).map_err(|e| match e {
        Error::Training(msg) => Error::CorruptModel(msg),
        other => other,
    })
}

pub fn save_model(path: impl AsRef<Path>, models: &ModelSet) -> Result<()> {
    write_text(path.as_ref(), &model_to_string(models)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelSet> {
    model_from_str(&read_text(path.as_ref())?)
}

/// Either kind of trained model.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Histogram(ModelSet),
    Glcm(GlcmModel),
}

impl AnyModel {
    pub fn window(&self) -> usize {
        match self {
            AnyModel::Histogram(m) => m.window(),
            AnyModel::Glcm(m) => m.window(),
        }
    }
}

/// Parses a histogram or GLCM model; the latter has a `glcm` table.
pub fn any_model_from_str(text: &str) -> Result<AnyModel> {
    let table = checked_table(text)?;
    if table.contains_key("glcm") {
        Ok(AnyModel::Glcm(GlcmModel::from_table(table)?))
    } else {
        Ok(AnyModel::Histogram(model_from_file(from_table(table)?)?))
    }
}

pub fn load_any_model(path: impl AsRef<Path>) -> Result<AnyModel> {
    any_model_from_str(&read_text(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::DescriptorKind;

    fn sample_set() -> ModelSet {
        let mut cfg = DescriptorConfig::single(DescriptorKind::WldVar, 8, 1).unwrap();
        cfg.var_boundaries = vec![vec![0.1, 2.5, 1e7 / 3.0]];
        let len = cfg.bin_count();
        let layout = cfg.layout_id();
        let w = [0.1, 0.2, 1.0 / 3.0];
        let rest = 1.0 - w.iter().sum::<f64>();
        let h = Histogram::from_sparse(
            len,
            layout,
            vec![(3, w[0]), (480, w[1]), (700, w[2]), (961, rest)],
        )
        .unwrap();
        let classes = vec![
            ClassModel {
                class_id: 1,
                name: "one".into(),
                histogram: h.clone(),
                pixel_count: 77,
            },
            ClassModel {
                class_id: 2,
                name: "two \"quoted\"".into(),
                histogram: h,
                pixel_count: 5,
            },
        ];
        ModelSet::new(cfg, 12, classes).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let set = sample_set();
        let text = model_to_string(&set).unwrap();
        assert_eq!(model_from_str(&text).unwrap(), set);
        assert!(text.contains("format_version = 1"));
    }

    #[test]
    fn rejects_other_versions() {
        let text = model_to_string(&sample_set()).unwrap().replace("format_version = 1", "format_version = 2");
        assert!(matches!(
            model_from_str(&text),
            Err(Error::VersionMismatch { found: 2, supported: 1 })
        ));
        assert!(matches!(model_from_str("window = 3"), Err(Error::CorruptModel(_))));
        assert!(matches!(model_from_str("not toml ["), Err(Error::CorruptModel(_))));
    }

    #[test]
    fn rejects_wrong_bin_count() {
        let text = model_to_string(&sample_set()).unwrap().replace("bin_count = 976", "bin_count = 10");
        assert!(model_from_str(&text).is_err());
    }
}
