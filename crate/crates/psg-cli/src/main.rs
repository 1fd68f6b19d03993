//! `psg` — command-line tools for panoptic scene graph corpora: validation,
//! statistics, recall evaluation, panoptic quality, dataset fusion, and
//! synthetic fixture generation.
//!
//! Exit codes: 0 on success, 1 when the inputs fail validation (invariant
//! violations, misaligned image ids), 2 on usage or parse errors.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use psg_core::error::Error;
use psg_core::eval::{corpus_panoptic_quality, evaluate, EvalConfig, EvalMode};
use psg_core::fixtures::{generate_fixture, FixtureSpec, NoiseSpec};
use psg_core::fusion::{greedy_instance_match, transfer_relations, FusionConfig, SegObject};
use psg_core::io::{boxgraph, dataset, matrix, prediction, report};
use psg_core::mask::SceneCanvas;
use psg_core::model::{compute_stats, validate_graph, PanopticSceneGraph};

#[derive(Parser)]
#[command(name = "psg", version, about = "Panoptic scene graph dataset and evaluation tools")]
struct Cli {
    /// Worker threads for per-image parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every image against the graph invariants.
    Validate {
        /// Dataset file to check.
        dataset: PathBuf,
    },
    /// Print corpus statistics as JSON.
    Stats {
        /// Dataset file to summarize.
        dataset: PathBuf,
    },
    /// Evaluate ranked predictions: R@K and mR@K.
    Eval(EvalArgs),
    /// Corpus-averaged panoptic quality between two datasets.
    Pq {
        /// Ground-truth dataset file.
        #[arg(long)]
        gt: PathBuf,
        /// Predicted dataset file (same image ids).
        #[arg(long)]
        pred: PathBuf,
        /// Also write the report to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transfer box-graph relations onto a segmentation dataset.
    Fuse(FuseArgs),
    /// Generate a deterministic synthetic corpus with noisy predictions.
    Fixtures(FixtureArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth dataset file.
    #[arg(long)]
    gt: PathBuf,
    /// Prediction file.
    #[arg(long)]
    pred: PathBuf,
    /// Evaluation mode; must match the prediction file.
    #[arg(long, value_parser = parse_mode)]
    mode: EvalMode,
    /// Ranks to report, strictly increasing.
    #[arg(long, value_delimiter = ',', default_values_t = [20usize, 50, 100])]
    k: Vec<usize>,
    /// Strict IoU threshold for segment matching.
    #[arg(long = "iou-thr", default_value_t = 0.5)]
    iou_threshold: f64,
    /// Also write the report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FuseArgs {
    /// Segmentation-side dataset file.
    #[arg(long)]
    seg: PathBuf,
    /// Box-graph file carrying the relations to transfer.
    #[arg(long)]
    graph: PathBuf,
    /// Embedding table for category-name similarity.
    #[arg(long)]
    embeddings: PathBuf,
    /// Cosine similarity threshold for a category match.
    #[arg(long = "sim-thr", default_value_t = 0.5)]
    similarity_threshold: f64,
    /// Output dataset path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    images: usize,
    #[arg(long, default_value_t = 64)]
    height: u32,
    #[arg(long, default_value_t = 64)]
    width: u32,
    #[arg(long, default_value_t = 8)]
    instances: usize,
    #[arg(long, default_value_t = 6)]
    relations: usize,
    #[arg(long = "object-classes", default_value_t = 10)]
    object_classes: usize,
    #[arg(long = "predicates", default_value_t = 8)]
    predicate_classes: usize,
    /// Probability of dropping each ground-truth triplet from predictions.
    #[arg(long = "drop-prob", default_value_t = 0.0)]
    drop_prob: f64,
    /// Probability of relabeling a kept triplet's predicate.
    #[arg(long = "relabel-prob", default_value_t = 0.0)]
    relabel_prob: f64,
    /// Pixels eroded from each side of predicted masks.
    #[arg(long = "erode", default_value_t = 0)]
    erode: u32,
    /// Ground-truth dataset output path.
    #[arg(long = "out-gt")]
    out_gt: PathBuf,
    /// Prediction file output path.
    #[arg(long = "out-pred")]
    out_pred: PathBuf,
}

fn parse_mode(text: &str) -> Result<EvalMode, String> {
    match text {
        "sgdet" => Ok(EvalMode::SgDet),
        "predcls" => Ok(EvalMode::PredCls),
        other => Err(format!("unknown mode \"{other}\", expected sgdet or predcls")),
    }
}

/// 1 for content-level validation failures, 2 for usage and parse errors.
fn failure_code(err: &Error) -> u8 {
    match err {
        Error::MissingImage { .. }
        | Error::DuplicateImage { .. }
        | Error::CanvasMismatch { .. }
        | Error::GroundingIndexOutOfRange { .. }
        | Error::GroundingModeMismatch { .. }
        | Error::UnsortedPredictions { .. }
        | Error::LabelOutOfRange { .. }
        | Error::EmptyMask
        | Error::EmptyCorpus => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(failure_code(&err))
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Validate { dataset } => run_validate(&dataset),
        Command::Stats { dataset } => run_stats(&dataset),
        Command::Eval(args) => run_eval(args),
        Command::Pq { gt, pred, out } => run_pq(&gt, &pred, out.as_deref()),
        Command::Fuse(args) => run_fuse(args),
        Command::Fixtures(args) => run_fixtures(args),
    }
}

fn run_validate(path: &std::path::Path) -> Result<ExitCode, Error> {
    let data = dataset::parse_dataset(path)?;
    let mut total = 0usize;
    for image in &data.images {
        for violation in validate_graph(&image.graph, &data.vocabulary) {
            println!("image {}: {violation}", image.image_id);
            total += 1;
        }
    }
    if total == 0 {
        println!("ok: {} images, 0 violations", data.images.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!(
            "invalid: {} violations across {} images",
            total,
            data.images.len()
        );
        Ok(ExitCode::from(1))
    }
}

fn run_stats(path: &std::path::Path) -> Result<ExitCode, Error> {
    let data = dataset::parse_dataset(path)?;
    let graphs: Vec<PanopticSceneGraph> = data.images.iter().map(|i| i.graph.clone()).collect();
    let stats = compute_stats(&graphs, &data.vocabulary)?;
    let mut text = serde_json::to_string_pretty(&stats)?;
    text.push('\n');
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn run_eval(args: EvalArgs) -> Result<ExitCode, Error> {
    let gt = dataset::parse_dataset(&args.gt)?;
    let preds = prediction::parse_predictions(&args.pred)?;
    let cfg = EvalConfig::new(args.mode, args.k, args.iou_threshold)?;
    let result = evaluate(&gt, &preds, &cfg)?;
    let text = report::render_eval_report(&result)?;
    print!("{text}");
    if let Some(out) = args.out {
        std::fs::write(out, text)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_pq(
    gt_path: &std::path::Path,
    pred_path: &std::path::Path,
    out: Option<&std::path::Path>,
) -> Result<ExitCode, Error> {
    let gt = dataset::parse_dataset(gt_path)?;
    let pred = dataset::parse_dataset(pred_path)?;
    let (stats, image_count) = corpus_panoptic_quality(&gt, &pred)?;
    let text = report::render_pq_report(&stats.summarize(), image_count)?;
    print!("{text}");
    if let Some(out) = out {
        std::fs::write(out, text)?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct FuseSummary {
    images: usize,
    images_with_box_annotations: usize,
    box_images_without_segmentation: usize,
    matched_instances: usize,
    transferred_relations: usize,
    dropped_relations: BTreeMap<String, usize>,
}

fn run_fuse(args: FuseArgs) -> Result<ExitCode, Error> {
    let mut seg = dataset::parse_dataset(&args.seg)?;
    let boxes = boxgraph::parse_boxgraph(&args.graph)?;
    let table = matrix::parse_embedding_table(&args.embeddings)?;
    let cfg = FusionConfig::new(args.similarity_threshold)?;

    // the output predicate dictionary: first occurrence order over the
    // box-graph relations
    let mut predicate_ids: HashMap<String, usize> = HashMap::new();
    let mut predicate_names: Vec<String> = Vec::new();
    for image in &boxes.images {
        for relation in &image.relations {
            if !predicate_ids.contains_key(&relation.predicate) {
                predicate_ids.insert(relation.predicate.clone(), predicate_names.len());
                predicate_names.push(relation.predicate.clone());
            }
        }
    }

    let by_id: HashMap<&str, &boxgraph::BoxGraphImage> = boxes
        .images
        .iter()
        .map(|image| (image.image_id.as_str(), image))
        .collect();
    let mut summary = FuseSummary {
        images: seg.images.len(),
        images_with_box_annotations: 0,
        box_images_without_segmentation: 0,
        matched_instances: 0,
        transferred_relations: 0,
        dropped_relations: BTreeMap::new(),
    };
    {
        let seg_ids: std::collections::HashSet<&str> = seg
            .images
            .iter()
            .map(|image| image.image_id.as_str())
            .collect();
        summary.box_images_without_segmentation = boxes
            .images
            .iter()
            .filter(|image| !seg_ids.contains(image.image_id.as_str()))
            .count();
    }

    for image in &mut seg.images {
        let Some(box_image) = by_id.get(image.image_id.as_str()) else {
            image.graph.relations.clear();
            continue;
        };
        summary.images_with_box_annotations += 1;
        let seg_objects = SegObject::from_graph(&image.graph, &seg.vocabulary)?;
        let matches = greedy_instance_match(&seg_objects, &box_image.objects, &table, &cfg)?;
        summary.matched_instances += matches.len();
        let (transferred, dropped) =
            transfer_relations(&box_image.relations, &matches, &predicate_ids);
        summary.transferred_relations += transferred.len();
        for drop in &dropped {
            *summary
                .dropped_relations
                .entry(drop.reason.token().to_string())
                .or_insert(0) += 1;
        }
        image.graph.relations = transferred;
    }

    let vocabulary = psg_core::model::ClassVocabulary::new(
        seg.vocabulary.object_classes().to_vec(),
        predicate_names,
    )?;
    seg.vocabulary = vocabulary;
    seg.metadata.insert(
        "fusion_similarity_threshold".into(),
        format!("{}", args.similarity_threshold),
    );
    dataset::write_dataset(&seg, &args.out)?;

    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct FixtureSummary {
    images: usize,
    gt_triplets: usize,
    predicted_triplets: usize,
}

fn run_fixtures(args: FixtureArgs) -> Result<ExitCode, Error> {
    let spec = FixtureSpec {
        seed: args.seed,
        image_count: args.images,
        canvas: SceneCanvas::new(args.height, args.width)?,
        instances_per_image: args.instances,
        relations_per_image: args.relations,
        object_class_count: args.object_classes,
        predicate_class_count: args.predicate_classes,
        noise: NoiseSpec {
            triplet_drop_prob: args.drop_prob,
            predicate_relabel_prob: args.relabel_prob,
            mask_erosion_pixels: args.erode,
        },
    };
    let (gt, preds) = generate_fixture(&spec)?;
    dataset::write_dataset(&gt, &args.out_gt)?;
    prediction::write_predictions(&preds, &args.out_pred)?;
    let summary = FixtureSummary {
        images: gt.images.len(),
        gt_triplets: gt.images.iter().map(|i| i.graph.relations.len()).sum(),
        predicted_triplets: preds.images.iter().map(|i| i.triplets.len()).sum(),
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}
