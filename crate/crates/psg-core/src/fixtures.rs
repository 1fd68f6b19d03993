//! Deterministic synthetic corpus generator.
//!
//! Ground-truth masks are axis-aligned rectangles obtained by recursively
//! splitting the canvas, so disjointness holds by construction and IoU
//! expectations under the noise model are closed-form. Predictions copy the
//! ground-truth triplets through a drop / predicate-relabel / mask-erosion
//! channel. Each image draws from an independent sub-seed, so output is
//! byte-identical across runs, platforms, and thread counts.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{EvalMode, Grounding, ImagePredictions, PredictionSet, ScoredTriplet};
use crate::mask::{BBox, SceneCanvas, SegmentMask};
use crate::model::{
    ClassVocabulary, DatasetImage, ObjectClass, ObjectInstance, PanopticSceneGraph, PsgDataset,
    RelationTriplet,
};
use crate::rng::SplitMix64;

/// Noise channel applied to predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Probability of dropping each ground-truth triplet.
    pub triplet_drop_prob: f64,
    /// Probability of relabeling a kept triplet's predicate to a different one.
    pub predicate_relabel_prob: f64,
    /// Pixels shaved off each rectangle side of a kept triplet's masks.
    pub mask_erosion_pixels: u32,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            triplet_drop_prob: 0.0,
            predicate_relabel_prob: 0.0,
            mask_erosion_pixels: 0,
        }
    }
}

/// Fixture shape: corpus size, per-image layout, vocabulary sizes, and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub seed: u64,
    pub image_count: usize,
    pub canvas: SceneCanvas,
    pub instances_per_image: usize,
    pub relations_per_image: usize,
    pub object_class_count: usize,
    pub predicate_class_count: usize,
    pub noise: NoiseSpec,
}

impl FixtureSpec {
    fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("triplet_drop_prob", self.noise.triplet_drop_prob),
            ("predicate_relabel_prob", self.noise.predicate_relabel_prob),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidConfig {
                    reason: format!("{name} = {p} must lie in [0, 1]"),
                });
            }
        }
        if self.relations_per_image > 0 && self.instances_per_image < 2 {
            return Err(Error::InvalidConfig {
                reason: "relations need at least 2 instances per image".into(),
            });
        }
        if self.instances_per_image > self.canvas.pixel_count() {
            return Err(Error::InfeasibleFixture {
                reason: format!(
                    "{} instances cannot tile a {}x{} canvas",
                    self.instances_per_image, self.canvas.height, self.canvas.width
                ),
            });
        }
        if self.instances_per_image > 0 && self.object_class_count == 0 {
            return Err(Error::InvalidConfig {
                reason: "instances need at least one object class".into(),
            });
        }
        if self.relations_per_image > 0 && self.predicate_class_count == 0 {
            return Err(Error::InvalidConfig {
                reason: "relations need at least one predicate class".into(),
            });
        }
        let n = self.instances_per_image;
        let capacity = n
            .saturating_mul(n.saturating_sub(1))
            .saturating_mul(self.predicate_class_count);
        if self.relations_per_image > capacity {
            return Err(Error::InfeasibleFixture {
                reason: format!(
                    "{} relations exceed the {capacity} distinct triplets available",
                    self.relations_per_image
                ),
            });
        }
        Ok(())
    }

    /// Vocabulary used by all fixture images: alternating thing/stuff object
    /// classes and numbered predicates.
    pub fn vocabulary(&self) -> ClassVocabulary {
        let object_classes = (0..self.object_class_count)
            .map(|i| ObjectClass {
                name: format!("object-{i}"),
                is_thing: i % 2 == 0,
            })
            .collect();
        let predicate_classes = (0..self.predicate_class_count)
            .map(|i| format!("predicate-{i}"))
            .collect();
        ClassVocabulary::new(object_classes, predicate_classes)
            .expect("numbered fixture class names are unique")
    }
}

/// Splits the canvas into `count` disjoint rectangles covering it exactly.
fn split_canvas(canvas: SceneCanvas, count: usize, rng: &mut SplitMix64) -> Vec<BBox> {
    if count == 0 {
        return vec![];
    }
    let mut rects = vec![BBox::new(0, 0, canvas.width, canvas.height).expect("canvas is nonempty")];
    while rects.len() < count {
        // split the first rectangle of maximal area; one with area >= 2
        // exists whenever count <= pixel_count
        let (at, _) = rects
            .iter()
            .enumerate()
            .filter(|(_, r)| r.area() >= 2)
            .max_by(|a, b| a.1.area().cmp(&b.1.area()).then(b.0.cmp(&a.0)))
            .expect("a splittable rectangle remains");
        let rect = rects[at];
        let vertical = match rect.width().cmp(&rect.height()) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => rng.next_bool(0.5),
        };
        let (left, right) = if vertical {
            let cut = rect.x0 + 1 + rng.next_below(u64::from(rect.width()) - 1) as u32;
            (
                BBox::new(rect.x0, rect.y0, cut, rect.y1).expect("positive split"),
                BBox::new(cut, rect.y0, rect.x1, rect.y1).expect("positive split"),
            )
        } else {
            let cut = rect.y0 + 1 + rng.next_below(u64::from(rect.height()) - 1) as u32;
            (
                BBox::new(rect.x0, rect.y0, rect.x1, cut).expect("positive split"),
                BBox::new(rect.x0, cut, rect.x1, rect.y1).expect("positive split"),
            )
        };
        rects[at] = left;
        rects.push(right);
    }
    rects
}

fn sample_relations(
    instance_count: usize,
    relation_count: usize,
    predicate_count: usize,
    rng: &mut SplitMix64,
) -> Vec<RelationTriplet> {
    let mut relations = Vec::with_capacity(relation_count);
    let mut used = std::collections::HashSet::new();
    let mut attempts = 0usize;
    let attempt_budget = 1000 * relation_count.max(1);
    while relations.len() < relation_count {
        if attempts >= attempt_budget {
            // dense regime: enumerate the unused triplets and draw among them
            let mut free: Vec<(usize, usize, usize)> = Vec::new();
            for s in 0..instance_count {
                for o in 0..instance_count {
                    if s == o {
                        continue;
                    }
                    for p in 0..predicate_count {
                        if !used.contains(&(s, p, o)) {
                            free.push((s, p, o));
                        }
                    }
                }
            }
            while relations.len() < relation_count {
                let pick = rng.next_index(free.len());
                let (s, p, o) = free.swap_remove(pick);
                used.insert((s, p, o));
                relations.push(RelationTriplet {
                    subject_index: s,
                    object_index: o,
                    predicate_id: p,
                });
            }
            break;
        }
        attempts += 1;
        let s = rng.next_index(instance_count);
        let mut o = rng.next_index(instance_count - 1);
        if o >= s {
            o += 1;
        }
        let p = rng.next_index(predicate_count);
        if used.insert((s, p, o)) {
            relations.push(RelationTriplet {
                subject_index: s,
                object_index: o,
                predicate_id: p,
            });
        }
    }
    relations
}

fn erode_rect(rect: BBox, pixels: u32) -> Option<BBox> {
    if rect.width() <= 2 * pixels || rect.height() <= 2 * pixels {
        return None;
    }
    Some(
        BBox::new(
            rect.x0 + pixels,
            rect.y0 + pixels,
            rect.x1 - pixels,
            rect.y1 - pixels,
        )
        .expect("erosion kept positive extent"),
    )
}

fn generate_image(spec: &FixtureSpec, index: usize) -> Result<(DatasetImage, ImagePredictions)> {
    let mut rng = SplitMix64::for_substream(spec.seed, index as u64);
    let image_id = format!("img-{index:06}");

    let rects = split_canvas(spec.canvas, spec.instances_per_image, &mut rng);
    let instances: Vec<ObjectInstance> = rects
        .iter()
        .map(|&rect| {
            let class_id = rng.next_index(spec.object_class_count);
            let mask = SegmentMask::from_rect(spec.canvas, rect)?;
            Ok(ObjectInstance::new(class_id, mask))
        })
        .collect::<Result<_>>()?;
    let relations = sample_relations(
        spec.instances_per_image,
        spec.relations_per_image,
        spec.predicate_class_count,
        &mut rng,
    );

    // eroded mask per instance, shared by every triplet referencing it
    let eroded: Vec<SegmentMask> = rects
        .iter()
        .map(|&rect| match erode_rect(rect, spec.noise.mask_erosion_pixels) {
            Some(shrunk) => SegmentMask::from_rect(spec.canvas, shrunk),
            None => Ok(SegmentMask::empty(spec.canvas)),
        })
        .collect::<Result<_>>()?;

    let mut kept: Vec<(usize, usize)> = Vec::new(); // (relation index, predicate)
    for (r, relation) in relations.iter().enumerate() {
        if rng.next_bool(spec.noise.triplet_drop_prob) {
            continue;
        }
        let mut predicate = relation.predicate_id;
        if rng.next_bool(spec.noise.predicate_relabel_prob) && spec.predicate_class_count >= 2 {
            let mut alt = rng.next_index(spec.predicate_class_count - 1);
            if alt >= predicate {
                alt += 1;
            }
            predicate = alt;
        }
        kept.push((r, predicate));
    }

    let total = kept.len();
    let triplets: Vec<ScoredTriplet> = kept
        .into_iter()
        .enumerate()
        .map(|(rank, (r, predicate))| {
            let relation = &relations[r];
            ScoredTriplet {
                subject_label: instances[relation.subject_index].class_id,
                subject: Grounding::Mask(eroded[relation.subject_index].clone()),
                predicate,
                object_label: instances[relation.object_index].class_id,
                object: Grounding::Mask(eroded[relation.object_index].clone()),
                score: (total - rank) as f64 / (total + 1) as f64,
            }
        })
        .collect();

    Ok((
        DatasetImage {
            image_id: image_id.clone(),
            graph: PanopticSceneGraph::new(spec.canvas, instances, relations),
        },
        ImagePredictions {
            image_id,
            canvas: spec.canvas,
            triplets,
        },
    ))
}

/// Generates the ground-truth dataset and the noisy prediction set.
pub fn generate_fixture(spec: &FixtureSpec) -> Result<(PsgDataset, PredictionSet)> {
    spec.validate()?;
    let per_image: Vec<Result<(DatasetImage, ImagePredictions)>> = (0..spec.image_count)
        .into_par_iter()
        .map(|i| generate_image(spec, i))
        .collect();
    let mut images = Vec::with_capacity(spec.image_count);
    let mut predictions = Vec::with_capacity(spec.image_count);
    for item in per_image {
        let (image, preds) = item?;
        images.push(image);
        predictions.push(preds);
    }
    Ok((
        PsgDataset::new(spec.vocabulary(), images),
        PredictionSet {
            mode: EvalMode::SgDet,
            images: predictions,
        },
    ))
}
