//! The `layerscope` command line.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use layerscope_core::coherence::{CoherenceOptions, PairScope, Spread};
use layerscope_core::imbalance::{AnchorRule, Direction, SeriesStats};
use layerscope_core::lowlevel::{
    analytic_baseline, category_share, per_property_share, random_baseline, CannyParams, Property,
};
use layerscope_core::probes::{roughness, roughness_distribution, Histogram, ProbeHyperparams, Trajectory};
use layerscope_core::rng::SplitMix64;
use layerscope_core::synth::{Structure, SynthSpec};
use layerscope_core::{lowlevel::ImageRaster, EmbeddingMatrix, LayerRef, Metric, NeighborhoodSpec};
use serde::Serialize;

use crate::embstore::write_embeddings;
use crate::error::{Error, Result, EXIT_DATA, EXIT_INTERNAL, EXIT_USAGE};
use crate::labels::{load_class_labels, load_label_sets, save_json};
use crate::manifest::{LayerEntry, Manifest, ModelInfo};
use crate::pipeline;
use crate::pnm::encode_image;
use crate::report::{num, write_json, Provenance, Table};

#[derive(Debug, Parser)]
#[command(name = "layerscope", version, about = "Compare how image representations change across model layers")]
pub struct Cli {
    /// Dataset manifest (JSON).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Distance for neighbor computations: euclidean or cosine.
    #[arg(long, global = true)]
    pub metric: Option<Metric>,
    /// Number of images to subsample (imbalance; default 10000 or all).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Neighborhood size.
    #[arg(long, global = true, default_value_t = NeighborhoodSpec::DEFAULT_K)]
    pub k: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert per-layer CSV matrices into EMB1 files and add them to a manifest.
    Ingest(IngestArgs),
    /// Write a synthetic dataset: EMB1 files, manifest, labels and optionally images.
    Synth(SynthArgs),
    /// Information imbalance between anchor layers of one model and every layer of another.
    Imbalance(ImbalanceArgs),
    /// Nearest neighbors of query images per model and layer.
    Neighbors(NeighborsArgs),
    /// Low-level image features, their categories and neighbor category shares.
    Lowlevel(LowlevelArgs),
    /// Label overlap between images and their neighbors, per layer.
    Coherence(CoherenceArgs),
    /// Layerwise linear probes and trajectory roughness.
    Probe(ProbeArgs),
    /// Spread of the imbalance across repeated subsamples of growing size.
    Subsample(SubsampleArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub model: String,
    /// One CSV file per layer, in layer order; one row per image, no header.
    #[arg(long, required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Image ids, one per line (required when the manifest does not exist yet).
    #[arg(long)]
    pub ids: Option<PathBuf>,
    #[arg(long, default_value = "")]
    pub architecture: String,
    #[arg(long, default_value = "")]
    pub objective: String,
    #[arg(long)]
    pub params_millions: Option<f64>,
    #[arg(long)]
    pub pooling: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StructureArg {
    TwoProcess,
    Clusters,
    NoisyCopy,
    ShuffledCopy,
    Walk,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = StructureArg::Walk)]
    pub structure: StructureArg,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Layers per model (walk).
    #[arg(long, default_value_t = 12)]
    pub layers: usize,
    /// Number of models (walk).
    #[arg(long, default_value_t = 1)]
    pub models: usize,
    /// Noise added per layer (walk).
    #[arg(long, default_value_t = 0.3)]
    pub step: f64,
    /// Noise of the copy (noisy-copy).
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
    #[arg(long, default_value_t = 5.0)]
    pub separation: f64,
    /// Also write one synthetic PPM image per point into `images/`.
    #[arg(long)]
    pub images: bool,
    #[arg(long, default_value_t = 32)]
    pub image_size: usize,
}

#[derive(Debug, Args)]
pub struct ImbalanceArgs {
    #[arg(long)]
    pub model_a: String,
    #[arg(long)]
    pub model_b: String,
    /// `three` (second, middle, penultimate), `all`, or comma-separated layer positions.
    #[arg(long, default_value = "three")]
    pub anchors: String,
}

#[derive(Debug, Args)]
pub struct NeighborsArgs {
    #[arg(long = "query", required = true)]
    pub queries: Vec<String>,
    /// Models to report (default: all).
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<String>,
    /// `three`, `all`, or comma-separated layer positions.
    #[arg(long, default_value = "three")]
    pub layers: String,
}

#[derive(Debug, Args)]
pub struct LowlevelArgs {
    /// Directory of PPM/PGM images named `<image id>.ppm` or `.pgm`.
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub group_size: usize,
    /// Also report shares per property.
    #[arg(long)]
    pub per_property: bool,
    #[arg(long, default_value_t = 1.4)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub low: f64,
    #[arg(long, default_value_t = 0.3)]
    pub high: f64,
    #[arg(long, default_value_t = 10)]
    pub baseline_trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    QueryNeighbor,
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpreadArg {
    Pooled,
    PerNeighborhood,
}

#[derive(Debug, Args)]
pub struct CoherenceArgs {
    /// JSON object mapping image ids to label lists.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 50)]
    pub queries: usize,
    #[arg(long, value_enum, default_value_t = ScopeArg::QueryNeighbor)]
    pub scope: ScopeArg,
    #[arg(long, value_enum, default_value_t = SpreadArg::Pooled)]
    pub spread: SpreadArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeMode {
    Binary,
    Multiclass,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// JSON object mapping image ids to a class name.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum, default_value_t = ProbeMode::Binary)]
    pub mode: ProbeMode,
    /// Classes to probe in binary mode (default: every class).
    #[arg(long = "class")]
    pub classes: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    #[arg(long, default_value_t = 0.1)]
    pub heldout: f64,
}

#[derive(Debug, Args)]
pub struct SubsampleArgs {
    #[arg(long)]
    pub model_a: String,
    #[arg(long)]
    pub layer_a: usize,
    #[arg(long)]
    pub model_b: String,
    #[arg(long)]
    pub layer_b: usize,
    /// Subsample sizes (default: 100,1000,10000, limited to the population).
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
}

/// Parses `args` and runs the command, mapping failures to exit codes:
/// 1 usage, 2 data, 3 internal.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    match &cli.command {
        Command::Ingest(a) => ingest(cli, a),
        Command::Synth(a) => synth(cli, a),
        Command::Imbalance(a) => imbalance(cli, a),
        Command::Neighbors(a) => neighbors(cli, a),
        Command::Lowlevel(a) => lowlevel(cli, a),
        Command::Coherence(a) => coherence(cli, a),
        Command::Probe(a) => probe(cli, a),
        Command::Subsample(a) => subsample(cli, a),
    }
}

fn load_manifest(cli: &Cli) -> Result<Manifest> {
    let path = cli.manifest.as_ref().ok_or_else(|| Error::Usage("--manifest is required".into()))?;
    Manifest::load(path)
}

fn spec(cli: &Cli) -> Result<NeighborhoodSpec> {
    NeighborhoodSpec::new(cli.k).map_err(|_| Error::Usage("--k must be at least 1".into()))
}

fn parse_layer_rule(text: &str) -> Result<AnchorRule> {
    match text {
        "three" => Ok(AnchorRule::ThreePoint),
        "all" => Ok(AnchorRule::All),
        list => list
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(AnchorRule::Explicit)
            .map_err(|_| Error::Usage(format!("invalid layer selection `{text}`: use three, all or a comma list"))),
    }
}

fn selected_models(manifest: &Manifest, requested: &[String]) -> Result<Vec<String>> {
    if requested.is_empty() {
        let all = manifest.model_names();
        if all.is_empty() {
            return Err(Error::Data("the manifest lists no layers".into()));
        }
        return Ok(all);
    }
    for m in requested {
        manifest.layers_of(m)?;
    }
    Ok(requested.to_vec())
}

fn out_file(cli: &Cli, name: &str) -> PathBuf {
    cli.out.join(name)
}

fn announce(path: &Path) {
    eprintln!("wrote {}", path.display());
}

fn ingest(cli: &Cli, a: &IngestArgs) -> Result<()> {
    let path = cli.manifest.as_ref().ok_or_else(|| Error::Usage("--manifest is required".into()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut manifest = if path.exists() {
        Manifest::load(path)?
    } else {
        let ids_path = a.ids.as_ref().ok_or_else(|| Error::Usage("--ids is required for a new manifest".into()))?;
        let text = fs::read_to_string(ids_path).map_err(|e| Error::io(ids_path, e))?;
        let ids = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
        Manifest::new(&base, ids)
    };
    if manifest.model_names().contains(&a.model) {
        return Err(Error::Data(format!("model `{}` is already in the manifest", a.model)));
    }
    let count = a.inputs.len();
    fs::create_dir_all(base.join(&a.model)).map_err(|e| Error::io(&base, e))?;
    for (i, input) in a.inputs.iter().enumerate() {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(input)
            .map_err(|e| Error::Csv { path: input.clone(), source: e })?;
        let mut rows: Vec<Vec<f32>> = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Csv { path: input.clone(), source: e })?;
            let row = record
                .iter()
                .map(|v| v.parse::<f32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Data(format!("{}: row {} is not numeric", input.display(), line + 1)))?;
            rows.push(row);
        }
        if rows.len() != manifest.n_images() {
            return Err(Error::Data(format!(
                "{}: {} rows for {} image ids",
                input.display(),
                rows.len(),
                manifest.n_images()
            )));
        }
        let layer = LayerRef::new(a.model.clone(), i, count)?;
        let matrix = EmbeddingMatrix::from_rows(&rows, layer)?;
        let rel = PathBuf::from(&a.model).join(format!("layer_{i:03}.emb"));
        write_embeddings(&matrix, &base.join(&rel))?;
        manifest.layers.push(LayerEntry { model_name: a.model.clone(), layer_index: i, layer_count: count, path: rel });
    }
    manifest.models.push(ModelInfo {
        model_name: a.model.clone(),
        architecture: a.architecture.clone(),
        objective: a.objective.clone(),
        parameter_count_millions: a.params_millions,
        pooling: a.pooling.clone(),
    });
    manifest.save(path)?;
    announce(path);
    Ok(())
}

/// A textured RGB image whose edge density, warmth and texture vary with
/// `stream`.
fn synth_image(seed: u64, stream: u64, size: usize) -> Result<ImageRaster> {
    let mut rng = SplitMix64::derive(seed, stream);
    let base = [rng.below(256) as f64, rng.below(256) as f64, rng.below(256) as f64];
    let stripe = 1 + rng.below(8) as usize;
    let amplitude = rng.below(128) as f64;
    let noise = rng.below(60) as f64;
    let mut samples = Vec::with_capacity(size * size * 3);
    for _y in 0..size {
        for x in 0..size {
            let band = if (x / stripe).is_multiple_of(2) { amplitude } else { -amplitude } / 2.0;
            for b in base {
                samples.push((b + band + noise * rng.normal()).clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(ImageRaster::new(size, size, 3, samples)?)
}

fn synth(cli: &Cli, a: &SynthArgs) -> Result<()> {
    let structure = match a.structure {
        StructureArg::TwoProcess => Structure::TwoProcess,
        StructureArg::Clusters => Structure::GaussianClusters { n_clusters: a.clusters, separation: a.separation },
        StructureArg::NoisyCopy => Structure::NoisyCopy { sigma: a.sigma },
        StructureArg::ShuffledCopy => Structure::ShuffledCopy,
        StructureArg::Walk => Structure::ProgressiveWalk { n_layers: a.layers, step: a.step },
    };
    let mut models = Vec::new();
    let mut labels = Vec::new();
    let n_models = if a.structure == StructureArg::Walk { a.models.max(1) } else { 1 };
    for m in 0..n_models {
        let seed = if n_models == 1 { cli.seed } else { SplitMix64::derive(cli.seed, m as u64).next_u64() };
        let spec = SynthSpec { n_points: a.points, dim: a.dim, seed, structure };
        let out = spec.generate()?;
        for stack in out.models {
            let name = if n_models == 1 {
                stack[0].layer().model_name().to_string()
            } else {
                format!("{}_{m}", stack[0].layer().model_name())
            };
            models.push((name, stack));
        }
        if m == 0 {
            labels = out.labels;
        }
    }

    let ids: Vec<String> = (0..a.points).map(|i| format!("img{i:05}")).collect();
    let mut manifest = Manifest::new(&cli.out, ids.clone());
    for (name, stack) in &models {
        fs::create_dir_all(cli.out.join(name)).map_err(|e| Error::io(&cli.out, e))?;
        manifest.models.push(ModelInfo::named(name));
        for (i, layer) in stack.iter().enumerate() {
            let rel = PathBuf::from(name).join(format!("layer_{i:03}.emb"));
            let layer = layer.clone().with_layer(LayerRef::new(name.clone(), i, stack.len())?);
            write_embeddings(&layer, &cli.out.join(&rel))?;
            manifest.layers.push(LayerEntry {
                model_name: name.clone(),
                layer_index: i,
                layer_count: stack.len(),
                path: rel,
            });
        }
    }
    let manifest_path = out_file(cli, "manifest.json");
    manifest.save(&manifest_path)?;
    announce(&manifest_path);

    if !labels.is_empty() {
        let mut sets: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
        for (kind, values) in &labels {
            let classes: BTreeMap<&str, String> =
                ids.iter().zip(values).map(|(id, v)| (id.as_str(), format!("{kind}{v}"))).collect();
            let path = out_file(cli, &format!("classes_{kind}.json"));
            save_json(&classes, &path)?;
            announce(&path);
            for (id, v) in ids.iter().zip(values) {
                sets.entry(id).or_default().insert(format!("{kind}={v}"));
            }
        }
        let path = out_file(cli, "label_sets.json");
        save_json(&sets, &path)?;
        announce(&path);
    }

    if a.images {
        let dir = out_file(cli, "images");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (i, id) in ids.iter().enumerate() {
            encode_image(&synth_image(cli.seed, i as u64, a.image_size)?, &dir.join(format!("{id}.ppm")))?;
        }
        announce(&dir);
    }
    Ok(())
}

#[derive(Serialize)]
struct GridCell {
    layer_a: usize,
    layer_b: usize,
    delta_ab: f64,
    delta_ba: f64,
}

#[derive(Serialize)]
struct GridJson {
    model_a: String,
    model_b: String,
    n: usize,
    anchors: Vec<usize>,
    targets: Vec<usize>,
    cells: Vec<GridCell>,
}

fn imbalance(cli: &Cli, a: &ImbalanceArgs) -> Result<()> {
    let manifest = load_manifest(cli)?;
    let metric = cli.metric.unwrap_or(Metric::Euclidean);
    let rule = parse_layer_rule(&a.anchors)?;
    let n = pipeline::resolve_sample_size(cli.n, 10_000, manifest.n_images())?;
    let grid = pipeline::imbalance_grid(&manifest, &a.model_a, &a.model_b, &rule, n, cli.seed, metric)?;
    let prov = Provenance::new("imbalance", cli.seed, metric.as_str(), Some(n))
        .with("model_a", &a.model_a)
        .with("model_b", &a.model_b)
        .with("anchors", &a.anchors);

    let mut table =
        Table::new(&["model_a", "layer_a", "model_b", "layer_b", "direction", "delta", "n", "metric", "seed"]);
    for cell in grid.cells() {
        for (direction, delta) in [("a_to_b", cell.delta_ab), ("b_to_a", cell.delta_ba)] {
            table.push(vec![
                a.model_a.clone(),
                cell.layer_a.layer_index().to_string(),
                a.model_b.clone(),
                cell.layer_b.layer_index().to_string(),
                direction.into(),
                num(delta),
                cell.n_used.to_string(),
                metric.as_str().into(),
                cli.seed.to_string(),
            ]);
        }
    }
    let path = out_file(cli, "imbalance.csv");
    table.write(&path, &prov)?;
    announce(&path);

    let json = GridJson {
        model_a: a.model_a.clone(),
        model_b: a.model_b.clone(),
        n,
        anchors: grid.anchors().iter().map(LayerRef::layer_index).collect(),
        targets: grid.targets().iter().map(LayerRef::layer_index).collect(),
        cells: grid
            .cells()
            .iter()
            .map(|c| GridCell {
                layer_a: c.layer_a.layer_index(),
                layer_b: c.layer_b.layer_index(),
                delta_ab: c.delta_ab,
                delta_ba: c.delta_ba,
            })
            .collect(),
    };
    let path = out_file(cli, "imbalance.json");
    write_json(&path, &prov, &json)?;
    announce(&path);

    let mut smooth = Table::new(&["model_a", "layer_a", "model_b", "direction", "smoothness", "n_layers"]);
    if grid.targets().len() >= 3 {
        for (i, anchor) in grid.anchors().iter().enumerate() {
            for (name, dir) in [("a_to_b", Direction::AnchorToTarget), ("b_to_a", Direction::TargetToAnchor)] {
                let stats = SeriesStats::new(grid.series(i, dir))?;
                smooth.push(vec![
                    a.model_a.clone(),
                    anchor.layer_index().to_string(),
                    a.model_b.clone(),
                    name.into(),
                    num(stats.smoothness),
                    stats.series.len().to_string(),
                ]);
            }
        }
    }
    let path = out_file(cli, "smoothness.csv");
    smooth.write(&path, &prov)?;
    announce(&path);
    Ok(())
}

#[derive(Serialize)]
struct NeighborsJson {
    k: usize,
    metric: String,
    queries: Vec<pipeline::QueryNeighbors>,
}

fn neighbors(cli: &Cli, a: &NeighborsArgs) -> Result<()> {
    let manifest = load_manifest(cli)?;
    let metric = cli.metric.unwrap_or(Metric::Cosine);
    let models = selected_models(&manifest, &a.models)?;
    let rule = parse_layer_rule(&a.layers)?;
    let report = pipeline::neighbor_report(&manifest, &a.queries, &models, &rule, spec(cli)?, metric)?;
    let prov = Provenance::new("neighbors", cli.seed, metric.as_str(), Some(manifest.n_images()))
        .with("k", cli.k)
        .with("layers", &a.layers);
    let path = out_file(cli, "neighbors.json");
    write_json(&path, &prov, &NeighborsJson { k: cli.k, metric: metric.as_str().into(), queries: report })?;
    announce(&path);
    Ok(())
}

#[derive(Serialize)]
struct CategoryJson {
    property: String,
    level: String,
    members: Vec<String>,
}

#[derive(Serialize)]
struct CategoriesJson {
    group_size: usize,
    categories: Vec<CategoryJson>,
    skipped: Vec<pipeline::Skipped>,
}

fn lowlevel(cli: &Cli, a: &LowlevelArgs) -> Result<()> {
    let manifest = load_manifest(cli)?;
    let metric = cli.metric.unwrap_or(Metric::Cosine);
    let params = CannyParams { gaussian_sigma: a.sigma, low_threshold: a.low, high_threshold: a.high };
    params.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let spec = spec(cli)?;
    let models = selected_models(&manifest, &a.models)?;
    let features = pipeline::extract_features(&manifest, &a.images, &params)?;
    for s in &features.skipped {
        eprintln!("skipped {}: {}", s.image_id, s.reason);
    }
    let assignments = pipeline::categorize(&features, a.group_size)?;
    let prov = Provenance::new("lowlevel", cli.seed, metric.as_str(), Some(features.rows.len()))
        .with("k", cli.k)
        .with("group_size", a.group_size)
        .with("sigma", a.sigma)
        .with("low", a.low)
        .with("high", a.high)
        .with("baseline_trials", a.baseline_trials);

    let mut table = Table::new(&["image_id", "edge_density", "warmth", "texture"]);
    for r in &features.rows {
        table.push(vec![
            r.image_id.clone(),
            num(r.edge_density),
            r.warmth.map(num).unwrap_or_default(),
            num(r.texture),
        ]);
    }
    let path = out_file(cli, "features.csv");
    table.write(&path, &prov)?;
    announce(&path);

    let categories = CategoriesJson {
        group_size: a.group_size,
        categories: assignments
            .iter()
            .map(|c| CategoryJson {
                property: c.property.to_string(),
                level: c.level.to_string(),
                members: c.members.iter().cloned().collect(),
            })
            .collect(),
        skipped: features.skipped.clone(),
    };
    let path = out_file(cli, "categories.json");
    write_json(&path, &prov, &categories)?;
    announce(&path);

    let scopes: Vec<Option<Property>> = if a.per_property {
        std::iter::once(None).chain(Property::ALL.into_iter().map(Some)).collect()
    } else {
        vec![None]
    };
    let scope_name = |p: Option<Property>| p.map_or("any".to_string(), |p| p.to_string());
    let mut shares = Table::new(&["model", "layer_index", "depth_fraction", "scope", "share", "k", "metric"]);
    let mut baseline_table = None;
    for model in &models {
        let (table, layers) = pipeline::categorized_layers(&manifest, &assignments, model)?;
        for &scope in &scopes {
            let values = match scope {
                None => category_share(&layers, &table, spec, metric)?,
                Some(p) => per_property_share(&layers, &table, spec, metric, p)?,
            };
            for (layer, v) in layers.iter().zip(values) {
                shares.push(vec![
                    model.clone(),
                    layer.layer().layer_index().to_string(),
                    num(layer.layer().depth_fraction()),
                    scope_name(scope),
                    num(v),
                    cli.k.to_string(),
                    metric.as_str().into(),
                ]);
            }
        }
        baseline_table.get_or_insert(table);
    }
    if let Some(table) = baseline_table {
        for &scope in &scopes {
            let random = random_baseline(&table, spec, a.baseline_trials, cli.seed, scope)?;
            let analytic = analytic_baseline(&table, scope);
            for (name, v) in [("baseline_random", random), ("baseline_analytic", analytic)] {
                shares.push(vec![
                    name.into(),
                    String::new(),
                    String::new(),
                    scope_name(scope),
                    num(v),
                    cli.k.to_string(),
                    metric.as_str().into(),
                ]);
            }
        }
    }
    let path = out_file(cli, "shares.csv");
    shares.write(&path, &prov)?;
    announce(&path);
    Ok(())
}

fn coherence(cli: &Cli, a: &CoherenceArgs) -> Result<()> {
    let manifest = load_manifest(cli)?;
    let metric = cli.metric.unwrap_or(Metric::Cosine);
    let labels = load_label_sets(&a.labels)?;
    let models = selected_models(&manifest, &a.models)?;
    let options = CoherenceOptions {
        n_queries: a.queries,
        spec: spec(cli)?,
        metric,
        seed: cli.seed,
        scope: match a.scope {
            ScopeArg::QueryNeighbor => PairScope::QueryNeighbor,
            ScopeArg::AllPairs => PairScope::AllPairs,
        },
        spread: match a.spread {
            SpreadArg::Pooled => Spread::Pooled,
            SpreadArg::PerNeighborhood => Spread::PerNeighborhood,
        },
    };
    let mut table =
        Table::new(&["model", "layer_index", "depth_fraction", "mean_jaccard", "std_jaccard", "n_queries", "k"]);
    for model in &models {
        for p in pipeline::coherence(&manifest, model, &labels, &options)? {
            table.push(vec![
                model.clone(),
                p.layer.layer_index().to_string(),
                num(p.layer.depth_fraction()),
                num(p.mean),
                num(p.std),
                p.n_queries.to_string(),
                p.k.to_string(),
            ]);
        }
    }
    let prov = Provenance::new("coherence", cli.seed, metric.as_str(), Some(manifest.n_images()))
        .with("k", cli.k)
        .with("queries", a.queries)
        .with("scope", format!("{:?}", a.scope))
        .with("spread", format!("{:?}", a.spread));
    let path = out_file(cli, "coherence.csv");
    table.write(&path, &prov)?;
    announce(&path);
    Ok(())
}

#[derive(Serialize)]
struct HistogramJson {
    model: String,
    bin_width: f64,
    range: [f64; 2],
    bin_starts: Vec<f64>,
    counts: Vec<usize>,
    overflow: usize,
    roughness: Vec<f64>,
}

#[derive(Serialize)]
struct HistogramsJson {
    histograms: Vec<HistogramJson>,
}

fn probe(cli: &Cli, a: &ProbeArgs) -> Result<()> {
    let manifest = load_manifest(cli)?;
    let classes = load_class_labels(&a.labels)?;
    let models = selected_models(&manifest, &a.models)?;
    let hp = ProbeHyperparams {
        learning_rate: a.lr,
        epochs: a.epochs,
        l2_penalty: a.l2,
        seed: cli.seed,
        heldout_fraction: a.heldout,
    };
    hp.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let mut trajectories: Vec<Trajectory> = Vec::new();
    for model in &models {
        match a.mode {
            ProbeMode::Binary => {
                let wanted: Vec<String> = if a.classes.is_empty() {
                    classes.values().cloned().collect::<BTreeSet<_>>().into_iter().collect()
                } else {
                    a.classes.clone()
                };
                trajectories.extend(pipeline::binary_trajectories(&manifest, model, &classes, &wanted, &hp)?);
            }
            ProbeMode::Multiclass => {
                let accuracies = pipeline::multiclass(&manifest, model, &classes, &hp)?;
                trajectories.push(Trajectory {
                    model: model.clone(),
                    class_id: "multiclass".into(),
                    roughness: roughness(&accuracies)?,
                    accuracies,
                });
            }
        }
    }
    let n_labeled = pipeline::labeled_rows(&manifest, &classes).0.len();
    let prov = Provenance::new("probe", cli.seed, "none", Some(n_labeled))
        .with("mode", format!("{:?}", a.mode))
        .with("lr", a.lr)
        .with("epochs", a.epochs)
        .with("l2", a.l2)
        .with("heldout", a.heldout);

    let mut traj = Table::new(&["model", "class_id", "layer_index", "depth_fraction", "accuracy"]);
    let mut rough = Table::new(&["model", "class_id", "roughness"]);
    for t in &trajectories {
        let count = t.accuracies.len();
        for (i, acc) in t.accuracies.iter().enumerate() {
            let depth = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            traj.push(vec![t.model.clone(), t.class_id.clone(), i.to_string(), num(depth), num(*acc)]);
        }
        rough.push(vec![t.model.clone(), t.class_id.clone(), num(t.roughness)]);
    }
    let path = out_file(cli, "trajectories.csv");
    traj.write(&path, &prov)?;
    announce(&path);
    let path = out_file(cli, "roughness.csv");
    rough.write(&path, &prov)?;
    announce(&path);

    let dist = roughness_distribution(&trajectories)?;
    let histograms = HistogramsJson {
        histograms: dist
            .histograms
            .iter()
            .map(|(model, h)| HistogramJson {
                model: model.clone(),
                bin_width: Histogram::BIN_WIDTH,
                range: [0.0, Histogram::UPPER],
                bin_starts: (0..Histogram::BINS).map(Histogram::bin_start).collect(),
                counts: h.counts.clone(),
                overflow: h.overflow,
                roughness: dist.per_model[model].clone(),
            })
            .collect(),
    };
    let path = out_file(cli, "histogram.json");
    write_json(&path, &prov, &histograms)?;
    announce(&path);
    Ok(())
}

fn subsample(cli: &Cli, a: &SubsampleArgs) -> Result<()> {
    let manifest = load_manifest(cli)?;
    let metric = cli.metric.unwrap_or(Metric::Euclidean);
    let sizes: Vec<usize> = if a.sizes.is_empty() {
        [100, 1000, 10_000].into_iter().filter(|&s| s <= manifest.n_images()).collect()
    } else {
        a.sizes.clone()
    };
    let stats = pipeline::subsample(
        &manifest,
        (&a.model_a, a.layer_a),
        (&a.model_b, a.layer_b),
        &sizes,
        a.trials,
        metric,
        cli.seed,
    )?;
    let mut table =
        Table::new(&["size", "trials", "mean", "std", "model_a", "layer_a", "model_b", "layer_b", "metric", "seed"]);
    for s in &stats {
        table.push(vec![
            s.size.to_string(),
            a.trials.to_string(),
            num(s.mean),
            num(s.std),
            a.model_a.clone(),
            a.layer_a.to_string(),
            a.model_b.clone(),
            a.layer_b.to_string(),
            metric.as_str().into(),
            cli.seed.to_string(),
        ]);
    }
    let prov = Provenance::new("subsample", cli.seed, metric.as_str(), Some(manifest.n_images()))
        .with("trials", a.trials)
        .with("sizes", sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
    let path = out_file(cli, "subsample.csv");
    table.write(&path, &prov)?;
    announce(&path);
    Ok(())
}

#[doc(hidden)]
pub const EXIT_CODES: [u8; 3] = [EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL];
