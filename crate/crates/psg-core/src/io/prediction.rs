//! Prediction file: ranked triplets per image, tagged with the grounding
//! mode. SGDet groundings carry an `rle` run list; PredCls groundings carry a
//! `gt_index` into the ground-truth instance list.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{EvalMode, Grounding, ImagePredictions, PredictionSet, ScoredTriplet};
use crate::mask::{SceneCanvas, SegmentMask};

use super::PREDICTIONS_VERSION;

#[derive(Serialize, Deserialize)]
struct PredictionFile {
    version: String,
    mode: EvalMode,
    images: Vec<PredImageRecord>,
}

#[derive(Serialize, Deserialize)]
struct PredImageRecord {
    image_id: String,
    height: u32,
    width: u32,
    triplets: Vec<TripletRecord>,
}

#[derive(Serialize, Deserialize)]
struct TripletRecord {
    subject: EndpointRecord,
    predicate: usize,
    object: EndpointRecord,
    score: f64,
}

#[derive(Serialize, Deserialize)]
struct EndpointRecord {
    label: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rle: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gt_index: Option<usize>,
}

fn endpoint_to_grounding(
    endpoint: EndpointRecord,
    mode: EvalMode,
    canvas: SceneCanvas,
    path: String,
) -> Result<(usize, Grounding)> {
    let grounding = match (mode, endpoint.rle, endpoint.gt_index) {
        (EvalMode::SgDet, Some(rle), None) => {
            Grounding::Mask(SegmentMask::from_runs(canvas, rle).map_err(|e| Error::Schema {
                path: format!("{path}.rle"),
                message: e.to_string(),
            })?)
        }
        (EvalMode::PredCls, None, Some(index)) => Grounding::GtInstance(index),
        _ => {
            return Err(Error::Schema {
                path,
                message: format!(
                    "grounding-mode-mismatch: {mode} mode needs exactly the {} field",
                    match mode {
                        EvalMode::SgDet => "rle",
                        EvalMode::PredCls => "gt_index",
                    }
                ),
            })
        }
    };
    Ok((endpoint.label, grounding))
}

fn predictions_from_file(file: PredictionFile) -> Result<PredictionSet> {
    if file.version != PREDICTIONS_VERSION {
        return Err(Error::Schema {
            path: "version".into(),
            message: format!(
                "expected \"{PREDICTIONS_VERSION}\", found \"{}\"",
                file.version
            ),
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
        let canvas = SceneCanvas::new(record.height, record.width).map_err(|e| Error::Schema {
            path: format!("images[{i}].height"),
            message: e.to_string(),
        })?;
        let mut triplets = Vec::with_capacity(record.triplets.len());
        let mut previous_score = f64::INFINITY;
        for (j, triplet) in record.triplets.into_iter().enumerate() {
            if !triplet.score.is_finite() {
                return Err(Error::Schema {
                    path: format!("images[{i}].triplets[{j}].score"),
                    message: "score must be finite".into(),
                });
            }
            if triplet.score > previous_score {
                return Err(Error::Schema {
                    path: format!("images[{i}].triplets[{j}].score"),
                    message: "unsorted-predictions: scores must be non-increasing".into(),
                });
            }
            previous_score = triplet.score;
            let (subject_label, subject) = endpoint_to_grounding(
                triplet.subject,
                file.mode,
                canvas,
                format!("images[{i}].triplets[{j}].subject"),
            )?;
            let (object_label, object) = endpoint_to_grounding(
                triplet.object,
                file.mode,
                canvas,
                format!("images[{i}].triplets[{j}].object"),
            )?;
            triplets.push(ScoredTriplet {
                subject_label,
                subject,
                predicate: triplet.predicate,
                object_label,
                object,
                score: triplet.score,
            });
        }
        images.push(ImagePredictions {
            image_id: record.image_id,
            canvas,
            triplets,
        });
    }
    Ok(PredictionSet {
        mode: file.mode,
        images,
    })
}

fn grounding_to_endpoint(label: usize, grounding: &Grounding) -> EndpointRecord {
    match grounding {
        Grounding::Mask(mask) => EndpointRecord {
            label,
            rle: Some(mask.runs().to_vec()),
            gt_index: None,
        },
        Grounding::GtInstance(index) => EndpointRecord {
            label,
            rle: None,
            gt_index: Some(*index),
        },
    }
}

fn predictions_to_file(predictions: &PredictionSet) -> PredictionFile {
    PredictionFile {
        version: PREDICTIONS_VERSION.to_string(),
        mode: predictions.mode,
        images: predictions
            .images
            .iter()
            .map(|image| PredImageRecord {
                image_id: image.image_id.clone(),
                height: image.canvas.height,
                width: image.canvas.width,
                triplets: image
                    .triplets
                    .iter()
                    .map(|t| TripletRecord {
                        subject: grounding_to_endpoint(t.subject_label, &t.subject),
                        predicate: t.predicate,
                        object: grounding_to_endpoint(t.object_label, &t.object),
                        score: t.score,
                    })
                    .collect(),
            })
            .collect(),
    }
}

pub fn parse_predictions_str(text: &str) -> Result<PredictionSet> {
    let file: PredictionFile = serde_json::from_str(text)?;
    predictions_from_file(file)
}

pub fn parse_predictions(path: &Path) -> Result<PredictionSet> {
    let text = std::fs::read_to_string(path)?;
    parse_predictions_str(&text)
}

pub fn render_predictions(predictions: &PredictionSet) -> Result<String> {
    super::to_canonical_json(&predictions_to_file(predictions))
}

pub fn write_predictions(predictions: &PredictionSet, path: &Path) -> Result<()> {
    super::write_canonical_json(&predictions_to_file(predictions), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::BBox;

    fn sample_predictions(mode: EvalMode) -> PredictionSet {
        let canvas = SceneCanvas::new(4, 4).unwrap();
        let mask = SegmentMask::from_rect(canvas, BBox::new(0, 0, 2, 2).unwrap()).unwrap();
        let grounding = |index: usize| match mode {
            EvalMode::SgDet => Grounding::Mask(mask.clone()),
            EvalMode::PredCls => Grounding::GtInstance(index),
        };
        PredictionSet {
            mode,
            images: vec![ImagePredictions {
                image_id: "img-0".into(),
                canvas,
                triplets: vec![
                    ScoredTriplet {
                        subject_label: 0,
                        subject: grounding(0),
                        predicate: 0,
                        object_label: 1,
                        object: grounding(1),
                        score: 0.9,
                    },
                    ScoredTriplet {
                        subject_label: 1,
                        subject: grounding(1),
                        predicate: 0,
                        object_label: 0,
                        object: grounding(0),
                        score: 0.4,
                    },
                ],
            }],
        }
    }

    #[test]
    fn round_trip_both_modes() {
        for mode in [EvalMode::SgDet, EvalMode::PredCls] {
            let predictions = sample_predictions(mode);
            let text = render_predictions(&predictions).unwrap();
            let parsed = parse_predictions_str(&text).unwrap();
            assert_eq!(parsed, predictions);
            assert_eq!(render_predictions(&parsed).unwrap(), text);
        }
    }

    #[test]
    fn unsorted_scores_rejected_at_parse() {
        let mut predictions = sample_predictions(EvalMode::SgDet);
        predictions.images[0].triplets.reverse();
        let text = render_predictions(&predictions).unwrap();
        let err = parse_predictions_str(&text).unwrap_err();
        assert!(err.to_string().contains("unsorted-predictions"));
    }

    #[test]
    fn mode_grounding_mismatch_rejected() {
        let predictions = sample_predictions(EvalMode::SgDet);
        let text = render_predictions(&predictions).unwrap();
        let flipped = text.replace("\"mode\": \"sgdet\"", "\"mode\": \"predcls\"");
        let err = parse_predictions_str(&flipped).unwrap_err();
        assert!(err.to_string().contains("grounding-mode-mismatch"));
    }
}
