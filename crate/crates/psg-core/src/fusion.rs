//! Dataset fusion: embedding-based category matching, greedy IoU instance
//! matching between segmentation-side and box-side annotations, and relation
//! transfer onto the matched instances.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::mask::{bbox_iou, BBox};
use crate::model::{ClassVocabulary, PanopticSceneGraph, RelationTriplet};
use crate::query::cosine;

/// Word-embedding lookup table with one fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn from_entries(entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let dim = entries.first().map_or(0, |(_, v)| v.len());
        if dim == 0 {
            return Err(Error::InvalidConfig {
                reason: "embedding table needs at least one token with dimension >= 1".into(),
            });
        }
        let mut vectors = BTreeMap::new();
        for (token, vector) in entries {
            if vector.len() != dim {
                return Err(Error::DimMismatch {
                    left: dim,
                    right: vector.len(),
                });
            }
            if vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig {
                    reason: format!("embedding for \"{token}\" has a non-finite entry"),
                });
            }
            if vector.iter().all(|&x| x == 0.0) {
                return Err(Error::ZeroVector);
            }
            if vectors.insert(token.clone(), vector).is_some() {
                return Err(Error::InvalidConfig {
                    reason: format!("duplicate token \"{token}\" in embedding table"),
                });
            }
        }
        Ok(EmbeddingTable { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(|v| v.as_slice())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(t, v)| (t.as_str(), v.as_slice()))
    }

    /// Embeds a category name as the mean of its whitespace-token embeddings.
    pub fn embed_name(&self, name: &str) -> Result<Vec<f64>> {
        let tokens: Vec<&str> = name.split_whitespace().collect();
        if tokens.is_empty() {
            return Err(Error::UnknownToken {
                token: name.to_string(),
            });
        }
        let mut sum = vec![0.0f64; self.dim];
        for token in &tokens {
            let vector = self.get(token).ok_or_else(|| Error::UnknownToken {
                token: token.to_string(),
            })?;
            for (s, &x) in sum.iter_mut().zip(vector) {
                *s += x;
            }
        }
        let n = tokens.len() as f64;
        for s in &mut sum {
            *s /= n;
        }
        Ok(sum)
    }
}

/// Fusion settings; multi-token names always embed as the token mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    pub similarity_threshold: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            similarity_threshold: 0.5,
        }
    }
}

impl FusionConfig {
    pub fn new(similarity_threshold: f64) -> Result<Self> {
        if !similarity_threshold.is_finite() {
            return Err(Error::InvalidConfig {
                reason: "similarity threshold must be finite".into(),
            });
        }
        Ok(FusionConfig {
            similarity_threshold,
        })
    }
}

/// Cosine similarity of two category names under the embedding table.
pub fn category_similarity(a: &str, b: &str, table: &EmbeddingTable) -> Result<f64> {
    let u = table.embed_name(a)?;
    let v = table.embed_name(b)?;
    cosine(&u, &v)
}

/// Segmentation-side instance reduced to its name and tightest box.
#[derive(Debug, Clone, PartialEq)]
pub struct SegObject {
    pub name: String,
    pub tight_box: BBox,
}

impl SegObject {
    /// Extracts named tight boxes from a graph; every mask must be nonempty.
    pub fn from_graph(graph: &PanopticSceneGraph, vocab: &ClassVocabulary) -> Result<Vec<Self>> {
        graph
            .instances
            .iter()
            .map(|instance| {
                let name = vocab
                    .object_name(instance.class_id)
                    .ok_or(Error::LabelOutOfRange {
                        label: instance.class_id,
                        size: vocab.object_count(),
                    })?
                    .to_string();
                let tight_box = instance.tight_box().ok_or(Error::EmptyMask)?;
                Ok(SegObject { name, tight_box })
            })
            .collect()
    }
}

/// Box-side object annotation: a category name with a half-open box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxObject {
    pub name: String,
    pub bbox: BBox,
}

/// One accepted instance pair.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMatch {
    pub seg_index: usize,
    pub box_index: usize,
    pub iou: f64,
    pub similarity: f64,
}

/// Greedy instance matching over the global candidate pool.
///
/// Pairs are visited by descending box IoU (ties: lower seg index, then lower
/// box index). A visited pair is matched when its name similarity reaches the
/// threshold, removing both endpoints; otherwise only the pair is discarded.
/// Zero-IoU pairs are never candidates. Similarities are evaluated lazily, so
/// embedding errors surface only for names that are actually considered.
pub fn greedy_instance_match(
    seg_objects: &[SegObject],
    box_objects: &[BoxObject],
    table: &EmbeddingTable,
    cfg: &FusionConfig,
) -> Result<Vec<InstanceMatch>> {
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for (s, seg) in seg_objects.iter().enumerate() {
        for (b, boxed) in box_objects.iter().enumerate() {
            let iou = bbox_iou(seg.tight_box, boxed.bbox);
            if iou > 0.0 {
                candidates.push((s, b, iou));
            }
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut similarity_cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut seg_used = vec![false; seg_objects.len()];
    let mut box_used = vec![false; box_objects.len()];
    let mut matches = Vec::new();
    for (s, b, iou) in candidates {
        if seg_used[s] || box_used[b] {
            continue;
        }
        let similarity = match similarity_cache.get(&(s, b)) {
            Some(&sim) => sim,
            None => {
                let sim = category_similarity(&seg_objects[s].name, &box_objects[b].name, table)?;
                similarity_cache.insert((s, b), sim);
                sim
            }
        };
        if similarity >= cfg.similarity_threshold {
            seg_used[s] = true;
            box_used[b] = true;
            matches.push(InstanceMatch {
                seg_index: s,
                box_index: b,
                iou,
                similarity,
            });
        }
    }
    Ok(matches)
}

/// Box-side relation annotation with a raw predicate name.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRelation {
    pub subject: usize,
    pub predicate: String,
    pub object: usize,
}

/// Why a source relation did not transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    UnmatchedSubject,
    UnmatchedObject,
    UnknownPredicate,
    SelfRelation,
    Duplicate,
}

impl DropReason {
    pub fn token(&self) -> &'static str {
        match self {
            DropReason::UnmatchedSubject => "unmatched-subject",
            DropReason::UnmatchedObject => "unmatched-object",
            DropReason::UnknownPredicate => "unknown-predicate",
            DropReason::SelfRelation => "self-relation",
            DropReason::Duplicate => "duplicate",
        }
    }
}

impl std::fmt::Display for DropReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// A source relation that was dropped, with its position and reason.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedRelation {
    pub source_index: usize,
    pub reason: DropReason,
}

/// Rewrites box-side relations onto matched segmentation instances.
///
/// A relation transfers iff both endpoints are matched and its predicate name
/// maps into the target dictionary; duplicate results collapse to the first.
/// `matches` must be injective on both sides.
pub fn transfer_relations(
    box_relations: &[BoxRelation],
    matches: &[InstanceMatch],
    predicate_ids: &HashMap<String, usize>,
) -> (Vec<RelationTriplet>, Vec<DroppedRelation>) {
    let mut box_to_seg: HashMap<usize, usize> = HashMap::new();
    for m in matches {
        let previous = box_to_seg.insert(m.box_index, m.seg_index);
        debug_assert!(previous.is_none(), "matches must be injective");
    }

    let mut transferred = Vec::new();
    let mut dropped = Vec::new();
    let mut seen: HashMap<(usize, usize, usize), ()> = HashMap::new();
    for (source_index, relation) in box_relations.iter().enumerate() {
        let drop = |reason| DroppedRelation {
            source_index,
            reason,
        };
        let Some(&subject) = box_to_seg.get(&relation.subject) else {
            dropped.push(drop(DropReason::UnmatchedSubject));
            continue;
        };
        let Some(&object) = box_to_seg.get(&relation.object) else {
            dropped.push(drop(DropReason::UnmatchedObject));
            continue;
        };
        let Some(&predicate_id) = predicate_ids.get(&relation.predicate) else {
            dropped.push(drop(DropReason::UnknownPredicate));
            continue;
        };
        if subject == object {
            dropped.push(drop(DropReason::SelfRelation));
            continue;
        }
        if seen.insert((subject, predicate_id, object), ()).is_some() {
            dropped.push(drop(DropReason::Duplicate));
            continue;
        }
        transferred.push(RelationTriplet {
            subject_index: subject,
            object_index: object,
            predicate_id,
        });
    }
    (transferred, dropped)
}
