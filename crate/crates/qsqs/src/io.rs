//! JSON detection and ground-truth files.
//!
//! Both schemas carry a top-level `"format_version": 1`. Boxes are
//! `[x1, y1, x2, y2]` corner coordinates; each box's `source_index` is its
//! position in the image's list.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use qsqs_core::eval::GroundTruth;
use qsqs_core::BoundingBox;

use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

fn format_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionFile {
    pub images: Vec<ImageDetections>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageDetections {
    pub image_id: String,
    pub detections: Vec<BoundingBox>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruthFile {
    pub images: Vec<GroundTruth>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDetectionFile {
    #[serde(default = "format_version")]
    format_version: u32,
    images: Vec<RawImageDetections>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawImageDetections {
    image_id: String,
    #[serde(default)]
    detections: Vec<RawDetection>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDetection {
    bbox: [f64; 4],
    score: f64,
    class_id: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawGroundTruthFile {
    #[serde(default = "format_version")]
    format_version: u32,
    images: Vec<RawImageObjects>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawImageObjects {
    image_id: String,
    #[serde(default)]
    objects: Vec<RawObject>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawObject {
    bbox: [f64; 4],
    class_id: u32,
    #[serde(default)]
    ignore: bool,
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(path, &text)
}

pub(crate) fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "unsupported format_version {v}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

fn check_unique_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::Validation(format!("duplicate image_id '{id}'")));
        }
    }
    Ok(())
}

impl DetectionFile {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_raw(parse_json(Path::new("<string>"), text)?)
    }

    pub fn to_json_string(&self) -> String {
        to_json(&self.to_raw())
    }

    fn from_raw(raw: RawDetectionFile) -> Result<Self> {
        check_version(raw.format_version)?;
        check_unique_ids(raw.images.iter().map(|im| im.image_id.as_str()))?;
        let images = raw
            .images
            .into_iter()
            .map(|im| {
                let detections = im
                    .detections
                    .iter()
                    .enumerate()
                    .map(|(k, d)| {
                        BoundingBox::new(d.bbox, d.score, d.class_id, k).map_err(|e| {
                            Error::Validation(format!("image '{}' detection {k}: {e}", im.image_id))
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(ImageDetections {
                    image_id: im.image_id,
                    detections,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { images })
    }

    fn to_raw(&self) -> RawDetectionFile {
        RawDetectionFile {
            format_version: FORMAT_VERSION,
            images: self
                .images
                .iter()
                .map(|im| RawImageDetections {
                    image_id: im.image_id.clone(),
                    detections: im
                        .detections
                        .iter()
                        .map(|b| RawDetection {
                            bbox: b.corners(),
                            score: b.score,
                            class_id: b.class_id,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn num_detections(&self) -> usize {
        self.images.iter().map(|im| im.detections.len()).sum()
    }
}

impl GroundTruthFile {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_raw(parse_json(Path::new("<string>"), text)?)
    }

    pub fn to_json_string(&self) -> String {
        to_json(&self.to_raw())
    }

    fn from_raw(raw: RawGroundTruthFile) -> Result<Self> {
        check_version(raw.format_version)?;
        check_unique_ids(raw.images.iter().map(|im| im.image_id.as_str()))?;
        let images = raw
            .images
            .into_iter()
            .map(|im| {
                let boxes = im
                    .objects
                    .iter()
                    .enumerate()
                    .map(|(k, o)| {
                        BoundingBox::new(o.bbox, 1.0, o.class_id, k).map_err(|e| {
                            Error::Validation(format!("image '{}' object {k}: {e}", im.image_id))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let ignore = im.objects.iter().map(|o| o.ignore).collect();
                Ok(GroundTruth::new(im.image_id, boxes, ignore)?)
            })
            .collect::<Result<_>>()?;
        Ok(Self { images })
    }

    fn to_raw(&self) -> RawGroundTruthFile {
        RawGroundTruthFile {
            format_version: FORMAT_VERSION,
            images: self
                .images
                .iter()
                .map(|g| RawImageObjects {
                    image_id: g.image_id.clone(),
                    objects: g
                        .boxes
                        .iter()
                        .zip(&g.ignore)
                        .map(|(b, &ignore)| RawObject {
                            bbox: b.corners(),
                            class_id: b.class_id,
                            ignore,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<DetectionFile> {
    let path = path.as_ref();
    DetectionFile::from_raw(read_json(path)?)
}

pub fn save_detections(file: &DetectionFile, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &file.to_json_string())
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruthFile> {
    let path = path.as_ref();
    GroundTruthFile::from_raw(read_json(path)?)
}

pub fn save_ground_truth(file: &GroundTruthFile, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &file.to_json_string())
}
