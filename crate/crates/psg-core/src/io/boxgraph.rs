//! Box-graph file: box-grounded objects with named-predicate relations, the
//! source side of dataset fusion. Relations are `[subject_index, predicate
//! name, object_index]` triples.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{BoxObject, BoxRelation};
use crate::mask::BBox;

use super::BOXGRAPH_VERSION;

#[derive(Serialize, Deserialize)]
struct BoxGraphFile {
    version: String,
    images: Vec<BoxImageRecord>,
}

#[derive(Serialize, Deserialize)]
struct BoxImageRecord {
    image_id: String,
    objects: Vec<BoxObjectRecord>,
    relations: Vec<(usize, String, usize)>,
}

#[derive(Serialize, Deserialize)]
struct BoxObjectRecord {
    name: String,
    bbox: [u32; 4],
}

/// One image of box-side annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGraphImage {
    pub image_id: String,
    pub objects: Vec<BoxObject>,
    pub relations: Vec<BoxRelation>,
}

/// A parsed box-graph corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGraph {
    pub images: Vec<BoxGraphImage>,
}

fn boxgraph_from_file(file: BoxGraphFile) -> Result<BoxGraph> {
    if file.version != BOXGRAPH_VERSION {
        return Err(Error::Schema {
            path: "version".into(),
            message: format!("expected \"{BOXGRAPH_VERSION}\", found \"{}\"", file.version),
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
        let objects = record
            .objects
            .into_iter()
            .enumerate()
            .map(|(j, object)| {
                let [x0, y0, x1, y1] = object.bbox;
                let bbox = BBox::new(x0, y0, x1, y1).map_err(|e| Error::Schema {
                    path: format!("images[{i}].objects[{j}].bbox"),
                    message: e.to_string(),
                })?;
                Ok(BoxObject {
                    name: object.name,
                    bbox,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let relations = record
            .relations
            .into_iter()
            .map(|(subject, predicate, object)| BoxRelation {
                subject,
                predicate,
                object,
            })
            .collect();
        images.push(BoxGraphImage {
            image_id: record.image_id,
            objects,
            relations,
        });
    }
    Ok(BoxGraph { images })
}

fn boxgraph_to_file(graph: &BoxGraph) -> BoxGraphFile {
    BoxGraphFile {
        version: BOXGRAPH_VERSION.to_string(),
        images: graph
            .images
            .iter()
            .map(|image| BoxImageRecord {
                image_id: image.image_id.clone(),
                objects: image
                    .objects
                    .iter()
                    .map(|o| BoxObjectRecord {
                        name: o.name.clone(),
                        bbox: [o.bbox.x0, o.bbox.y0, o.bbox.x1, o.bbox.y1],
                    })
                    .collect(),
                relations: image
                    .relations
                    .iter()
                    .map(|r| (r.subject, r.predicate.clone(), r.object))
                    .collect(),
            })
            .collect(),
    }
}

pub fn parse_boxgraph_str(text: &str) -> Result<BoxGraph> {
    let file: BoxGraphFile = serde_json::from_str(text)?;
    boxgraph_from_file(file)
}

pub fn parse_boxgraph(path: &Path) -> Result<BoxGraph> {
    let text = std::fs::read_to_string(path)?;
    parse_boxgraph_str(&text)
}

pub fn render_boxgraph(graph: &BoxGraph) -> Result<String> {
    super::to_canonical_json(&boxgraph_to_file(graph))
}

pub fn write_boxgraph(graph: &BoxGraph, path: &Path) -> Result<()> {
    super::write_canonical_json(&boxgraph_to_file(graph), path)
}
