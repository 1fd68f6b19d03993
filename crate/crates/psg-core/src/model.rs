//! Panoptic scene graph data model: vocabularies, object instances grounded by
//! disjoint segment masks, relation triplets, validation, and corpus statistics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{tightest_bbox, BBox, SceneCanvas, SegmentMask};

/// One entry of the object-class list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectClass {
    pub name: String,
    pub is_thing: bool,
}

/// Ordered object and predicate class lists.
///
/// Any sizes are accepted; the bundled default carries the 133-object
/// (80 thing + 53 stuff) and 56-predicate panoptic scene graph vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyData")]
pub struct ClassVocabulary {
    object_classes: Vec<ObjectClass>,
    predicate_classes: Vec<String>,
}

#[derive(Deserialize)]
struct VocabularyData {
    object_classes: Vec<ObjectClass>,
    predicate_classes: Vec<String>,
}

impl TryFrom<VocabularyData> for ClassVocabulary {
    type Error = Error;

    fn try_from(data: VocabularyData) -> Result<Self> {
        ClassVocabulary::new(data.object_classes, data.predicate_classes)
    }
}

const DEFAULT_VOCABULARY_JSON: &str = include_str!("../data/psg_vocabulary.json");

impl ClassVocabulary {
    /// Builds a vocabulary, rejecting duplicate names within either list.
    pub fn new(object_classes: Vec<ObjectClass>, predicate_classes: Vec<String>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, class) in object_classes.iter().enumerate() {
            if let Some(first) = seen.insert(class.name.as_str(), i) {
                return Err(Error::InvalidConfig {
                    reason: format!(
                        "duplicate object class \"{}\" at indices {first} and {i}",
                        class.name
                    ),
                });
            }
        }
        let mut seen = HashMap::new();
        for (i, name) in predicate_classes.iter().enumerate() {
            if let Some(first) = seen.insert(name.as_str(), i) {
                return Err(Error::InvalidConfig {
                    reason: format!("duplicate predicate \"{name}\" at indices {first} and {i}"),
                });
            }
        }
        Ok(ClassVocabulary {
            object_classes,
            predicate_classes,
        })
    }

    /// The bundled default vocabulary: 133 object classes, 56 predicates.
    pub fn psg_default() -> Self {
        serde_json::from_str(DEFAULT_VOCABULARY_JSON)
            .expect("bundled vocabulary is valid by construction")
    }

    pub fn object_classes(&self) -> &[ObjectClass] {
        &self.object_classes
    }

    pub fn predicate_classes(&self) -> &[String] {
        &self.predicate_classes
    }

    pub fn object_count(&self) -> usize {
        self.object_classes.len()
    }

    pub fn predicate_count(&self) -> usize {
        self.predicate_classes.len()
    }

    pub fn thing_count(&self) -> usize {
        self.object_classes.iter().filter(|c| c.is_thing).count()
    }

    pub fn stuff_count(&self) -> usize {
        self.object_classes.iter().filter(|c| !c.is_thing).count()
    }

    pub fn object_name(&self, class_id: usize) -> Option<&str> {
        self.object_classes.get(class_id).map(|c| c.name.as_str())
    }

    pub fn predicate_name(&self, predicate_id: usize) -> Option<&str> {
        self.predicate_classes.get(predicate_id).map(|s| s.as_str())
    }

    pub fn is_thing(&self, class_id: usize) -> Option<bool> {
        self.object_classes.get(class_id).map(|c| c.is_thing)
    }
}

/// A labeled object grounded by a segment mask.
///
/// `tight_box` is derived from the mask at construction; it is `None` exactly
/// when the mask has no foreground pixel (which `validate_graph` flags).
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub class_id: usize,
    mask: SegmentMask,
    tight_box: Option<BBox>,
}

impl ObjectInstance {
    pub fn new(class_id: usize, mask: SegmentMask) -> Self {
        let tight_box = tightest_bbox(&mask).ok();
        ObjectInstance {
            class_id,
            mask,
            tight_box,
        }
    }

    pub fn mask(&self) -> &SegmentMask {
        &self.mask
    }

    pub fn tight_box(&self) -> Option<BBox> {
        self.tight_box
    }
}

/// Directed subject-predicate-object edge between two instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RelationTriplet {
    pub subject_index: usize,
    pub object_index: usize,
    pub predicate_id: usize,
}

/// An image's panoptic scene graph: disjoint segment masks with class labels
/// plus relation triplets over the instances.
#[derive(Debug, Clone, PartialEq)]
pub struct PanopticSceneGraph {
    pub canvas: SceneCanvas,
    pub instances: Vec<ObjectInstance>,
    pub relations: Vec<RelationTriplet>,
}

impl PanopticSceneGraph {
    pub fn new(
        canvas: SceneCanvas,
        instances: Vec<ObjectInstance>,
        relations: Vec<RelationTriplet>,
    ) -> Self {
        PanopticSceneGraph {
            canvas,
            instances,
            relations,
        }
    }
}

/// One invariant breach found by [`validate_graph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MasksOverlap {
        first_instance: usize,
        second_instance: usize,
    },
    EmptyMask {
        instance: usize,
    },
    MaskCanvasMismatch {
        instance: usize,
    },
    ClassOutOfRange {
        instance: usize,
        class_id: usize,
        class_count: usize,
    },
    EndpointOutOfRange {
        relation: usize,
        role: Role,
        index: usize,
        instance_count: usize,
    },
    PredicateOutOfRange {
        relation: usize,
        predicate_id: usize,
        predicate_count: usize,
    },
    SelfRelation {
        relation: usize,
    },
    DuplicateRelation {
        first_relation: usize,
        second_relation: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Subject,
    Object,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Role::Subject => write!(f, "subject"),
            Role::Object => write!(f, "object"),
        }
    }
}

impl Violation {
    /// Stable kebab-case token naming the violated invariant.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::MasksOverlap { .. } => "masks-overlap",
            Violation::EmptyMask { .. } => "empty-mask",
            Violation::MaskCanvasMismatch { .. } => "canvas-mismatch",
            Violation::ClassOutOfRange { .. }
            | Violation::EndpointOutOfRange { .. }
            | Violation::PredicateOutOfRange { .. } => "index-out-of-range",
            Violation::SelfRelation { .. } => "self-relation",
            Violation::DuplicateRelation { .. } => "duplicate-relation",
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::MasksOverlap {
                first_instance,
                second_instance,
            } => write!(
                f,
                "masks-overlap: instances {first_instance} and {second_instance} share pixels"
            ),
            Violation::EmptyMask { instance } => {
                write!(f, "empty-mask: instance {instance} has no foreground pixel")
            }
            Violation::MaskCanvasMismatch { instance } => write!(
                f,
                "canvas-mismatch: instance {instance} mask does not match the graph canvas"
            ),
            Violation::ClassOutOfRange {
                instance,
                class_id,
                class_count,
            } => write!(
                f,
                "index-out-of-range: instance {instance} class {class_id} >= {class_count}"
            ),
            Violation::EndpointOutOfRange {
                relation,
                role,
                index,
                instance_count,
            } => write!(
                f,
                "index-out-of-range: relation {relation} {role} {index} >= {instance_count}"
            ),
            Violation::PredicateOutOfRange {
                relation,
                predicate_id,
                predicate_count,
            } => write!(
                f,
                "index-out-of-range: relation {relation} predicate {predicate_id} >= {predicate_count}"
            ),
            Violation::SelfRelation { relation } => write!(
                f,
                "self-relation: relation {relation} has subject == object"
            ),
            Violation::DuplicateRelation {
                first_relation,
                second_relation,
            } => write!(
                f,
                "duplicate-relation: relations {first_relation} and {second_relation} are identical"
            ),
        }
    }
}

fn masks_intersect(a: &SegmentMask, b: &SegmentMask) -> bool {
    // cheap two-pointer walk over the foreground intervals
    let mut it_a = a.one_intervals();
    let mut it_b = b.one_intervals();
    let mut cur_a = it_a.next();
    let mut cur_b = it_b.next();
    while let (Some(x), Some(y)) = (cur_a, cur_b) {
        if x.0.max(y.0) < x.1.min(y.1) {
            return true;
        }
        if x.1 <= y.1 {
            cur_a = it_a.next();
        } else {
            cur_b = it_b.next();
        }
    }
    false
}

/// Checks every graph invariant and reports each breach as data.
///
/// An empty result means the graph is valid under `vocab`. Violations are
/// reported in a fixed order: per-instance checks first, then pairwise mask
/// overlaps, then per-relation checks.
pub fn validate_graph(graph: &PanopticSceneGraph, vocab: &ClassVocabulary) -> Vec<Violation> {
    let mut violations = Vec::new();

    for (i, instance) in graph.instances.iter().enumerate() {
        if instance.mask().canvas() != graph.canvas {
            violations.push(Violation::MaskCanvasMismatch { instance: i });
        }
        if instance.class_id >= vocab.object_count() {
            violations.push(Violation::ClassOutOfRange {
                instance: i,
                class_id: instance.class_id,
                class_count: vocab.object_count(),
            });
        }
        if instance.mask().is_empty() {
            violations.push(Violation::EmptyMask { instance: i });
        }
    }

    for i in 0..graph.instances.len() {
        for j in (i + 1)..graph.instances.len() {
            let (a, b) = (graph.instances[i].mask(), graph.instances[j].mask());
            if a.canvas() == b.canvas() && masks_intersect(a, b) {
                violations.push(Violation::MasksOverlap {
                    first_instance: i,
                    second_instance: j,
                });
            }
        }
    }

    let mut seen: HashMap<(usize, usize, usize), usize> = HashMap::new();
    for (r, relation) in graph.relations.iter().enumerate() {
        let n = graph.instances.len();
        if relation.subject_index >= n {
            violations.push(Violation::EndpointOutOfRange {
                relation: r,
                role: Role::Subject,
                index: relation.subject_index,
                instance_count: n,
            });
        }
        if relation.object_index >= n {
            violations.push(Violation::EndpointOutOfRange {
                relation: r,
                role: Role::Object,
                index: relation.object_index,
                instance_count: n,
            });
        }
        if relation.predicate_id >= vocab.predicate_count() {
            violations.push(Violation::PredicateOutOfRange {
                relation: r,
                predicate_id: relation.predicate_id,
                predicate_count: vocab.predicate_count(),
            });
        }
        if relation.subject_index == relation.object_index {
            violations.push(Violation::SelfRelation { relation: r });
        }
        let key = (
            relation.subject_index,
            relation.predicate_id,
            relation.object_index,
        );
        match seen.get(&key) {
            Some(&first) => violations.push(Violation::DuplicateRelation {
                first_relation: first,
                second_relation: r,
            }),
            None => {
                seen.insert(key, r);
            }
        }
    }

    violations
}

/// Corpus-level averages and relation type mix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub image_count: usize,
    pub mean_instances_per_image: f64,
    pub mean_relations_per_image: f64,
    pub relation_count: usize,
    pub thing_thing_fraction: f64,
    pub stuff_stuff_fraction: f64,
    pub thing_stuff_fraction: f64,
}

/// Arithmetic per-image means plus the thing/stuff composition of relations.
///
/// A relation is thing-thing iff both endpoint classes are things, stuff-stuff
/// iff neither is, and thing-stuff otherwise (in either endpoint order).
pub fn compute_stats(
    dataset: &[PanopticSceneGraph],
    vocab: &ClassVocabulary,
) -> Result<StatsReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let image_count = dataset.len();
    let total_instances: usize = dataset.iter().map(|g| g.instances.len()).sum();
    let total_relations: usize = dataset.iter().map(|g| g.relations.len()).sum();

    let mut thing_thing = 0usize;
    let mut stuff_stuff = 0usize;
    let mut thing_stuff = 0usize;
    for graph in dataset {
        for relation in &graph.relations {
            let endpoint_is_thing = |index: usize| -> Result<bool> {
                let instance = graph.instances.get(index).ok_or(
                    Error::GroundingIndexOutOfRange {
                        index,
                        len: graph.instances.len(),
                    },
                )?;
                vocab
                    .is_thing(instance.class_id)
                    .ok_or(Error::LabelOutOfRange {
                        label: instance.class_id,
                        size: vocab.object_count(),
                    })
            };
            let s = endpoint_is_thing(relation.subject_index)?;
            let o = endpoint_is_thing(relation.object_index)?;
            match (s, o) {
                (true, true) => thing_thing += 1,
                (false, false) => stuff_stuff += 1,
                _ => thing_stuff += 1,
            }
        }
    }

    let fraction = |count: usize| {
        if total_relations == 0 {
            0.0
        } else {
            count as f64 / total_relations as f64
        }
    };

    Ok(StatsReport {
        image_count,
        mean_instances_per_image: total_instances as f64 / image_count as f64,
        mean_relations_per_image: total_relations as f64 / image_count as f64,
        relation_count: total_relations,
        thing_thing_fraction: fraction(thing_thing),
        stuff_stuff_fraction: fraction(stuff_stuff),
        thing_stuff_fraction: fraction(thing_stuff),
    })
}

/// An image entry of a parsed dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetImage {
    pub image_id: String,
    pub graph: PanopticSceneGraph,
}

/// In-memory dataset: a vocabulary plus one scene graph per image, with
/// optional provenance metadata carried through serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct PsgDataset {
    pub vocabulary: ClassVocabulary,
    pub images: Vec<DatasetImage>,
    pub metadata: std::collections::BTreeMap<String, String>,
}

impl PsgDataset {
    pub fn new(vocabulary: ClassVocabulary, images: Vec<DatasetImage>) -> Self {
        PsgDataset {
            vocabulary,
            images,
            metadata: Default::default(),
        }
    }

    pub fn graphs(&self) -> Vec<&PanopticSceneGraph> {
        self.images.iter().map(|i| &i.graph).collect()
    }
}
