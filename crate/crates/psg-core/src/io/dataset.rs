//! Dataset file: vocabulary plus per-image segments and relations.
//!
//! Masks are stored as explicit run lists (zero-run first, row-major);
//! relations as `[subject_index, object_index, predicate_id]` triples.
//! Parsing enforces structural invariants (run sums, unique image ids) but
//! not graph semantics — `validate_graph` is a separate step.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{SceneCanvas, SegmentMask};
use crate::model::{
    ClassVocabulary, DatasetImage, ObjectInstance, PanopticSceneGraph, PsgDataset, RelationTriplet,
};

use super::DATASET_VERSION;

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    version: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metadata: BTreeMap<String, String>,
    vocabulary: ClassVocabulary,
    images: Vec<ImageRecord>,
}

#[derive(Serialize, Deserialize)]
struct ImageRecord {
    image_id: String,
    height: u32,
    width: u32,
    segments: Vec<SegmentRecord>,
    relations: Vec<(usize, usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct SegmentRecord {
    class_id: usize,
    rle: Vec<usize>,
}

fn schema_err(path: String, err: &Error) -> Error {
    Error::Schema {
        path,
        message: err.to_string(),
    }
}

fn dataset_from_file(file: DatasetFile) -> Result<PsgDataset> {
    if file.version != DATASET_VERSION {
        return Err(Error::Schema {
            path: "version".into(),
            message: format!("expected \"{DATASET_VERSION}\", found \"{}\"", file.version),
        });
    }
    let mut seen = std::collections::HashSet::new();
    let mut images = Vec::with_capacity(file.images.len());
    for (i, record) in file.images.into_iter().enumerate() {
        if !seen.insert(record.image_id.clone()) {
            return Err(Error::DuplicateImage {
                image_id: record.image_id,
            });
        }
        let canvas = SceneCanvas::new(record.height, record.width)
            .map_err(|e| schema_err(format!("images[{i}].height"), &e))?;
        let instances = record
            .segments
            .into_iter()
            .enumerate()
            .map(|(j, segment)| {
                let mask = SegmentMask::from_runs(canvas, segment.rle)
                    .map_err(|e| schema_err(format!("images[{i}].segments[{j}].rle"), &e))?;
                Ok(ObjectInstance::new(segment.class_id, mask))
            })
            .collect::<Result<Vec<_>>>()?;
        let relations = record
            .relations
            .into_iter()
            .map(|(subject_index, object_index, predicate_id)| RelationTriplet {
                subject_index,
                object_index,
                predicate_id,
            })
            .collect();
        images.push(DatasetImage {
            image_id: record.image_id,
            graph: PanopticSceneGraph::new(canvas, instances, relations),
        });
    }
    Ok(PsgDataset {
        vocabulary: file.vocabulary,
        images,
        metadata: file.metadata,
    })
}

fn dataset_to_file(dataset: &PsgDataset) -> DatasetFile {
    DatasetFile {
        version: DATASET_VERSION.to_string(),
        metadata: dataset.metadata.clone(),
        vocabulary: dataset.vocabulary.clone(),
        images: dataset
            .images
            .iter()
            .map(|image| ImageRecord {
                image_id: image.image_id.clone(),
                height: image.graph.canvas.height,
                width: image.graph.canvas.width,
                segments: image
                    .graph
                    .instances
                    .iter()
                    .map(|instance| SegmentRecord {
                        class_id: instance.class_id,
                        rle: instance.mask().runs().to_vec(),
                    })
                    .collect(),
                relations: image
                    .graph
                    .relations
                    .iter()
                    .map(|r| (r.subject_index, r.object_index, r.predicate_id))
                    .collect(),
            })
            .collect(),
    }
}

pub fn parse_dataset_str(text: &str) -> Result<PsgDataset> {
    let file: DatasetFile = serde_json::from_str(text)?;
    dataset_from_file(file)
}

pub fn parse_dataset(path: &Path) -> Result<PsgDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset_str(&text)
}

pub fn render_dataset(dataset: &PsgDataset) -> Result<String> {
    super::to_canonical_json(&dataset_to_file(dataset))
}

pub fn write_dataset(dataset: &PsgDataset, path: &Path) -> Result<()> {
    super::write_canonical_json(&dataset_to_file(dataset), path)
}
