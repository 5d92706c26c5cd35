use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use langshape::cloud::{full_cloud, SubCloud};
use langshape::config::{MetricKind, PipelineConfig};
use langshape::io::LabeledMatrix;
use langshape::mca::{self, CategoryPoints};
use langshape::mds::{classical_mds, Embedding};
use langshape::persistence::PersistenceDiagram;
use langshape::pipeline::{self, Artifacts};
use langshape::render::{render_plot, LabeledPoint, PlotData, PlotKind, PlotSpec};
use langshape::synth;

#[derive(Parser)]
#[command(
    name = "langshape",
    version,
    about = "Persistent homology of typological feature data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct StageArgs {
    /// Pipeline configuration (TOML); defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory holding stage artifacts; overrides `output.dir`.
    #[arg(long)]
    dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Wasserstein,
    Bottleneck,
}

#[derive(Subcommand)]
enum Command {
    /// Load, clean, impute and binarize the input table.
    Ingest(StageArgs),
    /// Fit the adjusted MCA on `table.csv`.
    Mca(StageArgs),
    /// Extract per-language sub-clouds.
    Clouds {
        #[command(flatten)]
        stage: StageArgs,
        /// Number of principal axes kept.
        #[arg(long)]
        dims: Option<usize>,
    },
    /// Persistence diagrams of every `subcloud_*.csv`.
    Diagrams {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Pairwise diagram distances.
    Distmat {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long, value_enum)]
        metric: Option<MetricArg>,
        #[arg(long)]
        q: Option<f64>,
    },
    /// Classical MDS of `distmat.csv`.
    Mds {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long)]
        dims: Option<usize>,
    },
    /// Permutation test on `distmat.csv` for the configured groups.
    Permtest {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        shuffles: Option<usize>,
    },
    /// Render one figure from a stage artifact.
    Plot(PlotArgs),
    /// The full pipeline.
    Run(RunArgs),
    /// Write the bundled synthetic dataset and its configuration.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// MCA dimensions used for the sub-clouds.
    #[arg(long)]
    dims: Option<usize>,
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKindArg {
    Scree,
    Scatter,
    Subcloud,
    Diagram,
    Mds2d,
    Mds3d,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, value_enum)]
    kind: PlotKindArg,
    /// Artifact to draw: scree.csv, coordinates.csv, subcloud_*.csv,
    /// diagram_*.csv or mds.csv.
    #[arg(long)]
    input: PathBuf,
    /// For sub-clouds: coordinates.csv drawn as background.
    #[arg(long)]
    background: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "")]
    title: String,
    #[arg(long, default_value_t = 640)]
    width: u32,
    #[arg(long, default_value_t = 480)]
    height: u32,
    #[arg(long)]
    labels: bool,
    /// Homology dimension drawn from a diagram file.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Diagram markers above this persistence are tagged `significant`.
    #[arg(long)]
    threshold: Option<f64>,
}

fn load_config(stage: &StageArgs) -> Result<(PipelineConfig, PathBuf)> {
    let cfg = match &stage.config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    let dir = match (&stage.dir, &stage.config) {
        (Some(d), _) => d.clone(),
        (None, Some(_)) => cfg.output.dir.clone(),
        (None, None) => bail!("give --dir or --config"),
    };
    Ok((cfg, dir))
}

fn apply_metric(cfg: &mut PipelineConfig, metric: Option<MetricArg>, q: Option<f64>) {
    if let Some(m) = metric {
        cfg.metric.kind = match m {
            MetricArg::Wasserstein => MetricKind::Wasserstein,
            MetricArg::Bottleneck => MetricKind::Bottleneck,
        };
    }
    if let Some(q) = q {
        cfg.metric.q = q;
    }
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = PipelineConfig::load(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    if let Some(d) = args.dims {
        cfg.mca.dims = d;
    }
    apply_metric(&mut cfg, args.metric, args.q);
    if args.exact {
        cfg.permtest.exact = true;
    }
    if let Some(s) = args.seed {
        cfg.permtest.seed = s;
    }
    if let Some(o) = args.out {
        cfg.output.dir = o;
    }
    if args.workers.is_some() {
        cfg.output.workers = args.workers;
    }
    cfg.validate()?;
    let outcome = pipeline::run_pipeline(&cfg)?;
    println!(
        "{} languages x {} features; {} diagrams; {} files in {}",
        outcome.table.n_samples(),
        outcome.table.n_features(),
        outcome.diagrams.len(),
        outcome.manifest.len(),
        cfg.output.dir.display()
    );
    if let Some(t) = &outcome.test {
        println!(
            "{} test ({}): loss {:.6}, {}/{} at or below, p = {:.6}",
            t.mode, t.metric, t.observed_loss, t.count_leq, t.total, t.p_value
        );
    }
    Ok(())
}

fn ingest(stage: StageArgs) -> Result<()> {
    let (cfg, dir) = load_config(&stage)?;
    if stage.config.is_none() {
        bail!("ingest needs --config for the input location");
    }
    let raw = pipeline::load_input(&cfg.input)?;
    let (table, report) = pipeline::preprocess(&raw, &cfg.preprocess, &cfg.impute)?;
    let mut art = Artifacts::new(&dir)?;
    art.write_with("table.csv", |b| table.write_wide(b))?;
    art.write("preprocess_report.txt", report.to_text().as_bytes())?;
    art.write_with("preprocess_dropped.csv", |b| report.write_dropped_csv(b))?;
    println!(
        "{} languages x {} features",
        table.n_samples(),
        table.n_features()
    );
    Ok(())
}

fn mca_stage(stage: StageArgs) -> Result<()> {
    let (_, dir) = load_config(&stage)?;
    let table = langshape::ingest::read_value_table(
        open(&dir.join("table.csv"))?,
        langshape::ingest::InputFormat::Wide,
        &Default::default(),
    )?;
    let model = mca::fit(&table)?;
    let mut art = Artifacts::new(&dir)?;
    art.write_with("coordinates.csv", |b| model.points.write_csv(b))?;
    art.write_with("scree.csv", |b| model.write_scree_csv(b))?;
    println!("{} category points", model.n_categories());
    Ok(())
}

fn clouds(stage: StageArgs, dims: Option<usize>) -> Result<()> {
    let (mut cfg, dir) = load_config(&stage)?;
    if let Some(d) = dims {
        cfg.mca.dims = d;
    }
    let (points, table) = pipeline::read_mca_stage(&dir)?;
    let groups = pipeline::resolve_groups(&cfg.groups)?;
    let languages = pipeline::analysis_set(&table, &groups)?;
    let subclouds = pipeline::build_subclouds(&points, &table, &languages, cfg.mca.dims)?;
    let mut art = Artifacts::new(&dir)?;
    for sc in &subclouds {
        art.write_with(&pipeline::subcloud_file(&sc.language_id), |b| {
            sc.write_csv(b)
        })?;
    }
    println!(
        "{} sub-clouds in {} dimensions",
        subclouds.len(),
        cfg.mca.dims
    );
    Ok(())
}

fn diagrams(stage: StageArgs, workers: Option<usize>) -> Result<()> {
    let (cfg, dir) = load_config(&stage)?;
    let languages = pipeline::languages_in(&dir, "subcloud")?;
    let subclouds = pipeline::read_subclouds(&dir, &languages)?;
    let out =
        pipeline::compute_diagrams(&subclouds, &cfg.persistence, workers.or(cfg.output.workers))?;
    let mut art = Artifacts::new(&dir)?;
    for d in &out {
        art.write_with(&pipeline::diagram_file(&d.language_id), |b| {
            d.diagram.write_csv(b)
        })?;
        for (k, c) in d.cycles.iter().enumerate() {
            art.write_with(&pipeline::cycle_file(&d.language_id, k + 1), |b| {
                pipeline::write_cycle_csv(c, b)
            })?;
        }
    }
    println!("{} diagrams", out.len());
    Ok(())
}

fn distmat(stage: StageArgs, metric: Option<MetricArg>, q: Option<f64>) -> Result<()> {
    let (mut cfg, dir) = load_config(&stage)?;
    apply_metric(&mut cfg, metric, q);
    cfg.validate()?;
    let languages = pipeline::languages_in(&dir, "diagram")?;
    let diagrams = pipeline::read_diagrams(&dir, &languages)?;
    let dm = pipeline::diagram_distances(&diagrams, &cfg.metric, cfg.persistence.homology_dim)?;
    Artifacts::new(&dir)?.write_with("distmat.csv", |b| dm.write_csv(b))?;
    println!(
        "{0}x{0} distance matrix ({1})",
        dm.labels.len(),
        cfg.metric.metric()
    );
    Ok(())
}

fn read_distmat(dir: &Path) -> Result<LabeledMatrix> {
    Ok(LabeledMatrix::read_csv(open(&dir.join("distmat.csv"))?)?)
}

fn mds(stage: StageArgs, dims: Option<usize>) -> Result<()> {
    let (cfg, dir) = load_config(&stage)?;
    let dm = read_distmat(&dir)?;
    let e = classical_mds(&dm, dims.unwrap_or(cfg.mds.dims))?;
    let mut art = Artifacts::new(&dir)?;
    art.write_with("mds.csv", |b| e.write_csv(b))?;
    art.write_with("mds_eigenvalues.csv", |b| e.write_eigenvalues_csv(b))?;
    println!("stress {:.6}, {} padded axes", e.stress, e.padded_axes);
    Ok(())
}

fn permtest(
    stage: StageArgs,
    exact: bool,
    seed: Option<u64>,
    shuffles: Option<usize>,
) -> Result<()> {
    let (mut cfg, dir) = load_config(&stage)?;
    cfg.permtest.exact |= exact;
    if let Some(s) = seed {
        cfg.permtest.seed = s;
    }
    if let Some(n) = shuffles {
        cfg.permtest.shuffles = n;
    }
    let dm = read_distmat(&dir)?;
    let groups = pipeline::resolve_groups(&cfg.groups)?;
    let Some(t) = pipeline::run_permtest(
        &dm,
        &groups,
        &cfg.permtest,
        &cfg.metric.metric().to_string(),
    )?
    else {
        bail!("the grouping has fewer than two groups among the analysed languages");
    };
    Artifacts::new(&dir)?.write_with("permtest.csv", |b| t.write_csv(b))?;
    println!(
        "{} test: {}/{} at or below, p = {:.6}",
        t.mode, t.count_leq, t.total, t.p_value
    );
    Ok(())
}

fn xy(c: &[f64]) -> (f64, f64) {
    (c[0], c.get(1).copied().unwrap_or(0.0))
}

fn plot(a: PlotArgs) -> Result<()> {
    let kind = match a.kind {
        PlotKindArg::Scree => PlotKind::Scree,
        PlotKindArg::Scatter => PlotKind::Scatter,
        PlotKindArg::Subcloud => PlotKind::Subcloud,
        PlotKindArg::Diagram => PlotKind::Diagram,
        PlotKindArg::Mds2d => PlotKind::Mds2d,
        PlotKindArg::Mds3d => PlotKind::Mds3d,
    };
    let mut spec = PlotSpec::new(kind, a.title.clone());
    spec.width = a.width;
    spec.height = a.height;
    spec.show_labels = a.labels;
    spec.persistence_threshold = a.threshold;
    let data = match kind {
        PlotKind::Scree => PlotData::Scree(mca::read_scree_shares(open(&a.input)?)?),
        PlotKind::Scatter => {
            let points = CategoryPoints::read_csv(open(&a.input)?)?;
            let cloud = full_cloud(&points, points.coordinates.cols().min(2))?;
            PlotData::Points(
                cloud
                    .points()
                    .iter()
                    .map(|p| {
                        let (x, y) = xy(&p.coords);
                        LabeledPoint::new(p.label.clone(), x, y)
                    })
                    .collect(),
            )
        }
        PlotKind::Subcloud => {
            let sc = SubCloud::read_csv("", open(&a.input)?)?;
            let background = match &a.background {
                Some(p) => {
                    let points = CategoryPoints::read_csv(open(p)?)?;
                    let cloud = full_cloud(&points, points.coordinates.cols().min(2))?;
                    cloud.points().iter().map(|p| xy(&p.coords)).collect()
                }
                None => Vec::new(),
            };
            PlotData::Subcloud {
                background,
                points: sc
                    .cloud
                    .points()
                    .iter()
                    .map(|p| {
                        let (x, y) = xy(&p.coords);
                        LabeledPoint::new(p.label.clone(), x, y)
                    })
                    .collect(),
            }
        }
        PlotKind::Diagram => {
            let d = PersistenceDiagram::read_csv(open(&a.input)?)?;
            PlotData::Diagram(d.dimension(a.dim).points())
        }
        PlotKind::Mds2d | PlotKind::Mds3d => {
            let (labels, coords) = Embedding::read_coordinates(open(&a.input)?)?;
            let at = |i: usize, k: usize| {
                if k < coords.cols() {
                    coords[(i, k)]
                } else {
                    0.0
                }
            };
            if kind == PlotKind::Mds3d {
                PlotData::Points3 {
                    coords: (0..labels.len())
                        .map(|i| [at(i, 0), at(i, 1), at(i, 2)])
                        .collect(),
                    groups: vec![None; labels.len()],
                    labels,
                }
            } else {
                PlotData::Points(
                    labels
                        .iter()
                        .enumerate()
                        .map(|(i, l)| LabeledPoint::new(l.clone(), at(i, 0), at(i, 1)))
                        .collect(),
                )
            }
        }
    };
    let svg = render_plot(&spec, &data)?;
    std::fs::write(&a.out, svg).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(s) => ingest(s),
        Command::Mca(s) => mca_stage(s),
        Command::Clouds { stage, dims } => clouds(stage, dims),
        Command::Diagrams { stage, workers } => diagrams(stage, workers),
        Command::Distmat { stage, metric, q } => distmat(stage, metric, q),
        Command::Mds { stage, dims } => mds(stage, dims),
        Command::Permtest {
            stage,
            exact,
            seed,
            shuffles,
        } => permtest(stage, exact, seed, shuffles),
        Command::Plot(a) => plot(a),
        Command::Run(a) => run(a),
        Command::Synth { out } => {
            synth::generate().write_to(&out)?;
            println!(
                "wrote values.csv, groups.csv, config.toml to {}",
                out.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
