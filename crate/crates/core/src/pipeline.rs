//! End-to-end orchestration and stage artifacts.
//!
//! Each stage reads only what its predecessor writes, so any stage can be
//! rerun from saved CSVs and reproduce the full run bit for bit.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::cloud::{full_cloud, subcloud, SubCloud};
use crate::config::{
    GroupsConfig, ImputeConfig, InputConfig, MetricConfig, PermtestConfig, PersistenceConfig,
    PipelineConfig, PreprocessConfig,
};
use crate::error::{Error, Result};
use crate::ingest::{
    apply_exclusions, filter_by_missingness, impute, load_value_table_with, split_ternary,
    CategoricalTable, LoadOptions, PreprocessReport,
};
use crate::io::{file_tag, read_grouping, LabeledMatrix};
use crate::mca::{self, CategoryPoints, McaModel};
use crate::mds::{classical_mds, Embedding};
use crate::metrics::distance_matrix;
use crate::permtest::{exact_permutation_test_matrix, permutation_test_matrix, TestResult};
use crate::persistence::{
    max_distance, pairwise_distances, reduce_with, representative_cycle,
    rips_filtration_with_budget, PersistenceDiagram, ReductionOptions,
};
use crate::render::{render_plot, LabeledPoint, PlotData, PlotKind, PlotSpec};

/// Reads the raw table and keeps only samples passing the subset filter.
pub fn load_input(cfg: &InputConfig) -> Result<CategoricalTable> {
    let options = LoadOptions {
        sentinels: cfg.sentinels.clone(),
    };
    let table = load_value_table_with(&cfg.path, cfg.format, &options)?;
    let (Some(meta), Some(column), Some(value)) =
        (&cfg.languages, &cfg.subset_column, &cfg.subset_value)
    else {
        return Ok(table);
    };
    let keep = subset_ids(meta, column, value)?;
    let samples: Vec<usize> = (0..table.n_samples())
        .filter(|&i| keep.contains(&table.sample_ids()[i]))
        .collect();
    let features: Vec<usize> = (0..table.n_features()).collect();
    Ok(table.select(&samples, &features))
}

fn subset_ids(path: &Path, column: &str, value: &str) -> Result<HashSet<String>> {
    let mut rdr = csv::Reader::from_reader(crate::io::read_file(path)?);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = find("ID")
        .or_else(|| find("Language_ID"))
        .ok_or_else(|| Error::MissingColumn("ID".into()))?;
    let value_col = find(column).ok_or_else(|| Error::MissingColumn(column.to_owned()))?;
    let mut ids = HashSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.get(value_col).map(str::trim) == Some(value) {
            ids.insert(rec.get(id_col).unwrap_or("").trim().to_owned());
        }
    }
    Ok(ids)
}

/// Exclusions, constant-feature drop, missingness filter, imputation,
/// ternary split, in that order.
pub fn preprocess(
    table: &CategoricalTable,
    pre: &PreprocessConfig,
    imp: &ImputeConfig,
) -> Result<(CategoricalTable, PreprocessReport)> {
    let (t, mut report) = apply_exclusions(table, &pre.exclude, pre.drop_constant);
    let (t, r) = filter_by_missingness(&t, pre.max_missing, pre.passes)?;
    report.merge(r);
    let (t, r) = impute(&t, imp.method, imp.k, imp.seed)?;
    report.merge(r);
    let (t, r) = split_ternary(&t, &pre.ternary, &pre.mapping())?;
    report.merge(r);
    Ok((t.canonicalize(), report))
}

/// `(language, group)` pairs from the CSV and the inline map, in that order.
pub fn resolve_groups(cfg: &GroupsConfig) -> Result<Vec<(String, String)>> {
    let mut out = match &cfg.path {
        Some(p) => read_grouping(crate::io::read_file(p)?)?,
        None => Vec::new(),
    };
    let known: BTreeMap<String, String> = out.iter().cloned().collect();
    for (id, g) in &cfg.assign {
        match known.get(id) {
            Some(existing) if existing != g => {
                return Err(Error::Config(format!(
                    "language {id} is assigned to both {existing} and {g}"
                )))
            }
            Some(_) => {}
            None => out.push((id.clone(), g.clone())),
        }
    }
    Ok(out)
}

/// Languages analysed: the grouped ones, or every sample; sorted.
pub fn analysis_set(table: &CategoricalTable, groups: &[(String, String)]) -> Result<Vec<String>> {
    let mut ids: Vec<String> = if groups.is_empty() {
        table.sample_ids().to_vec()
    } else {
        groups.iter().map(|(id, _)| id.clone()).collect()
    };
    for id in &ids {
        if table.sample_index(id).is_none() {
            return Err(Error::UnknownSample(id.clone()));
        }
    }
    ids.sort();
    Ok(ids)
}

pub fn build_subclouds(
    points: &CategoryPoints,
    table: &CategoricalTable,
    languages: &[String],
    d: usize,
) -> Result<Vec<SubCloud>> {
    languages
        .iter()
        .map(|l| subcloud(points, table, l, d))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LanguageDiagram {
    pub language_id: String,
    /// Pairs of every dimension up to the configured one.
    pub diagram: PersistenceDiagram,
    /// Vertex labels of representative cycles, most persistent first.
    pub cycles: Vec<Vec<String>>,
}

pub fn language_diagram(sc: &SubCloud, cfg: &PersistenceConfig) -> Result<LanguageDiagram> {
    let p = cfg.homology_dim;
    let dm = pairwise_distances(&sc.cloud);
    let scale = cfg.max_scale.unwrap_or_else(|| max_distance(&dm));
    let f = rips_filtration_with_budget(&dm, p + 1, scale, cfg.simplex_budget)?;
    let r = reduce_with(
        &f,
        ReductionOptions {
            clearing: cfg.clearing,
            track_cycles: false,
        },
    );
    let diagram = r.diagrams_through(p)?;
    let mut cycles = Vec::new();
    if p >= 1 {
        let top = diagram.dimension(p).finite();
        for pair in top.by_persistence().into_iter().take(cfg.max_cycles) {
            cycles.push(representative_cycle(&r, pair)?.labels(&sc.cloud));
        }
    }
    Ok(LanguageDiagram {
        language_id: sc.language_id.clone(),
        diagram,
        cycles,
    })
}

/// Per-language diagrams on a pool of `workers` threads; output order
/// follows `subclouds`.
pub fn compute_diagrams(
    subclouds: &[SubCloud],
    cfg: &PersistenceConfig,
    workers: Option<usize>,
) -> Result<Vec<LanguageDiagram>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
    pool.install(|| {
        subclouds
            .par_iter()
            .map(|sc| {
                language_diagram(sc, cfg).map_err(|e| Error::Stage {
                    stage: "diagrams",
                    source: Box::new(Error::invalid(format!("{}: {e}", sc.language_id))),
                })
            })
            .collect()
    })
}

/// Distance matrix between the dimension-`dim` diagrams.
pub fn diagram_distances(
    diagrams: &[(String, PersistenceDiagram)],
    cfg: &MetricConfig,
    dim: usize,
) -> Result<LabeledMatrix> {
    let restricted: Vec<(String, PersistenceDiagram)> = diagrams
        .iter()
        .map(|(l, d)| (l.clone(), d.dimension(dim)))
        .collect();
    distance_matrix(&restricted, &cfg.metric(), cfg.essential_policy())
}

/// The two groups compared and their members' row indices in `dm`.
pub fn test_groups(
    dm: &LabeledMatrix,
    groups: &[(String, String)],
    cfg: &PermtestConfig,
) -> Result<Option<((String, Vec<usize>), (String, Vec<usize>))>> {
    let of: BTreeMap<&str, &str> = groups
        .iter()
        .map(|(l, g)| (l.as_str(), g.as_str()))
        .collect();
    let present: BTreeSet<&str> = dm
        .labels
        .iter()
        .filter_map(|l| of.get(l.as_str()).copied())
        .collect();
    let (g1, g2) = match (&cfg.group1, &cfg.group2) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        (None, None) => {
            if present.len() < 2 {
                return Ok(None);
            }
            if present.len() > 2 {
                return Err(Error::Config(
                    "more than two groups; set permtest.group1 and permtest.group2".into(),
                ));
            }
            let mut it = present.iter();
            (
                it.next().unwrap().to_string(),
                it.next().unwrap().to_string(),
            )
        }
        _ => {
            return Err(Error::Config(
                "set both permtest.group1 and permtest.group2".into(),
            ))
        }
    };
    if g1 == g2 {
        return Err(Error::Config("the two compared groups must differ".into()));
    }
    let members = |g: &str| -> Vec<usize> {
        (0..dm.labels.len())
            .filter(|&i| of.get(dm.labels[i].as_str()) == Some(&g))
            .collect()
    };
    let (m1, m2) = (members(&g1), members(&g2));
    if m1.is_empty() || m2.is_empty() {
        return Err(Error::Config(format!(
            "group {g1} or {g2} has no analysed member"
        )));
    }
    Ok(Some(((g1, m1), (g2, m2))))
}

pub fn run_permtest(
    dm: &LabeledMatrix,
    groups: &[(String, String)],
    cfg: &PermtestConfig,
    metric_name: &str,
) -> Result<Option<TestResult>> {
    let Some(((_, g1), (_, g2))) = test_groups(dm, groups, cfg)? else {
        return Ok(None);
    };
    let mut r = if cfg.exact {
        exact_permutation_test_matrix(&dm.values, &g1, &g2, cfg.partition_cap as u128)?
    } else {
        permutation_test_matrix(&dm.values, &g1, &g2, cfg.shuffles, cfg.seed)?
    };
    r.metric = metric_name.to_owned();
    Ok(Some(r))
}

/// One `manifest.csv` row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Tracks files written into the output directory.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Artifacts {
            dir,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_owned());
        }
        Ok(())
    }

    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> Result<()>,
    ) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    /// Renames every written file to `<name>.partial`.
    pub fn mark_partial(&self) {
        for name in &self.written {
            let from = self.dir.join(name);
            let to = self.dir.join(format!("{name}.partial"));
            // best effort: the stage error is what gets reported
            let _ = std::fs::rename(from, to);
        }
    }

    pub fn manifest(&self) -> Result<Vec<ManifestEntry>> {
        let mut names = self.written.clone();
        names.sort();
        names
            .into_iter()
            .map(|name| {
                let path = self.dir.join(&name);
                let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
                Ok(ManifestEntry {
                    file: name,
                    bytes: bytes.len() as u64,
                    sha256: hex::encode(Sha256::digest(&bytes)),
                })
            })
            .collect()
    }

    /// Writes `manifest.csv` (not listed in itself).
    pub fn write_manifest(&self) -> Result<Vec<ManifestEntry>> {
        let entries = self.manifest()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["file", "bytes", "sha256"])?;
        for e in &entries {
            w.write_record([e.file.clone(), e.bytes.to_string(), e.sha256.clone()])?;
        }
        let buf = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        let path = self.dir.join("manifest.csv");
        std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        Ok(entries)
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut rdr = csv::Reader::from_reader(crate::io::read_file(path)?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(ManifestEntry {
            file: rec.get(0).unwrap_or("").to_owned(),
            bytes: rec.get(1).unwrap_or("0").parse().unwrap_or(0),
            sha256: rec.get(2).unwrap_or("").to_owned(),
        });
    }
    Ok(out)
}

/// Everything a full run produces, in memory.
#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub table: CategoricalTable,
    pub report: PreprocessReport,
    pub model: McaModel,
    pub languages: Vec<String>,
    pub subclouds: Vec<SubCloud>,
    pub diagrams: Vec<LanguageDiagram>,
    pub distances: Option<LabeledMatrix>,
    pub embedding: Option<Embedding>,
    pub test: Option<TestResult>,
    pub manifest: Vec<ManifestEntry>,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => Error::Stage {
            stage: name,
            source: Box::new(other),
        },
    })
}

/// Runs every stage and writes all artifacts into `cfg.output.dir`.
///
/// On failure the files already written are renamed with a `.partial`
/// suffix and the error names the failing stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let mut art = Artifacts::new(&cfg.output.dir)?;
    match run_stages(cfg, &mut art) {
        Ok(mut outcome) => {
            outcome.manifest = art.write_manifest()?;
            Ok(outcome)
        }
        Err(e) => {
            art.mark_partial();
            Err(e)
        }
    }
}

fn csv_name(prefix: &str, id: &str) -> String {
    format!("{prefix}_{}.csv", file_tag(id))
}

pub fn subcloud_file(id: &str) -> String {
    csv_name("subcloud", id)
}

pub fn diagram_file(id: &str) -> String {
    csv_name("diagram", id)
}

pub fn cycle_file(id: &str, k: usize) -> String {
    format!("cycle_{}_{k}.csv", file_tag(id))
}

pub fn write_cycle_csv<W: std::io::Write>(labels: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label"])?;
    for l in labels {
        w.write_record([l])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

fn run_stages(cfg: &PipelineConfig, art: &mut Artifacts) -> Result<PipelineOutcome> {
    let (table, report) = stage(
        "ingest",
        (|| {
            let raw = load_input(&cfg.input)?;
            let (table, report) = preprocess(&raw, &cfg.preprocess, &cfg.impute)?;
            art.write_with("table.csv", |b| table.write_wide(b))?;
            art.write("preprocess_report.txt", report.to_text().as_bytes())?;
            art.write_with("preprocess_dropped.csv", |b| report.write_dropped_csv(b))?;
            Ok((table, report))
        })(),
    )?;

    let model = stage(
        "mca",
        (|| {
            let model = mca::fit(&table)?;
            art.write_with("coordinates.csv", |b| model.points.write_csv(b))?;
            art.write_with("scree.csv", |b| model.write_scree_csv(b))?;
            Ok(model)
        })(),
    )?;

    let groups = stage("clouds", resolve_groups(&cfg.groups))?;
    let (languages, subclouds) = stage(
        "clouds",
        (|| {
            let languages = analysis_set(&table, &groups)?;
            let subclouds = build_subclouds(&model.points, &table, &languages, cfg.mca.dims)?;
            for sc in &subclouds {
                art.write_with(&subcloud_file(&sc.language_id), |b| sc.write_csv(b))?;
            }
            Ok((languages, subclouds))
        })(),
    )?;

    let diagrams = stage(
        "diagrams",
        (|| {
            let diagrams = compute_diagrams(&subclouds, &cfg.persistence, cfg.output.workers)?;
            for d in &diagrams {
                art.write_with(&diagram_file(&d.language_id), |b| d.diagram.write_csv(b))?;
                for (k, c) in d.cycles.iter().enumerate() {
                    art.write_with(&cycle_file(&d.language_id, k + 1), |b| {
                        write_cycle_csv(c, b)
                    })?;
                }
            }
            Ok(diagrams)
        })(),
    )?;

    let labelled: Vec<(String, PersistenceDiagram)> = diagrams
        .iter()
        .map(|d| (d.language_id.clone(), d.diagram.clone()))
        .collect();
    let distances = if labelled.len() >= 2 {
        Some(stage(
            "distmat",
            (|| {
                let dm = diagram_distances(&labelled, &cfg.metric, cfg.persistence.homology_dim)?;
                art.write_with("distmat.csv", |b| dm.write_csv(b))?;
                Ok(dm)
            })(),
        )?)
    } else {
        None
    };

    let embedding = match &distances {
        Some(dm) if dm.labels.len() > cfg.mds.dims => Some(stage(
            "mds",
            (|| {
                let e = classical_mds(dm, cfg.mds.dims)?;
                art.write_with("mds.csv", |b| e.write_csv(b))?;
                art.write_with("mds_eigenvalues.csv", |b| e.write_eigenvalues_csv(b))?;
                Ok(e)
            })(),
        )?),
        _ => None,
    };

    let test = match &distances {
        Some(dm) => stage(
            "permtest",
            (|| {
                let t = run_permtest(dm, &groups, &cfg.permtest, &cfg.metric.metric().to_string())?;
                if let Some(t) = &t {
                    art.write_with("permtest.csv", |b| t.write_csv(b))?;
                }
                Ok(t)
            })(),
        )?,
        None => None,
    };

    if cfg.output.plots {
        stage(
            "render",
            (|| {
                let group_of: BTreeMap<String, String> = groups.iter().cloned().collect();
                write_plots(
                    art,
                    &model,
                    &subclouds,
                    &diagrams,
                    embedding.as_ref(),
                    &group_of,
                    cfg,
                )
            })(),
        )?;
    }

    Ok(PipelineOutcome {
        table,
        report,
        model,
        languages,
        subclouds,
        diagrams,
        distances,
        embedding,
        test,
        manifest: Vec::new(),
    })
}

fn xy(coords: &[f64]) -> (f64, f64) {
    (coords[0], coords.get(1).copied().unwrap_or(0.0))
}

/// Scree, MCA scatter, per-language sub-clouds and diagrams, and the MDS view.
pub fn write_plots(
    art: &mut Artifacts,
    model: &McaModel,
    subclouds: &[SubCloud],
    diagrams: &[LanguageDiagram],
    embedding: Option<&Embedding>,
    group_of: &BTreeMap<String, String>,
    cfg: &PipelineConfig,
) -> Result<()> {
    if let Ok(shares) = mca::variance_percentages(model) {
        let spec = PlotSpec::new(PlotKind::Scree, "Scree plot of adjusted inertia");
        art.write(
            &PlotKind::Scree.file_name("variance"),
            render_plot(&spec, &PlotData::Scree(shares))?.as_bytes(),
        )?;
    }
    let all = full_cloud(&model.points, model.points.coordinates.cols().min(2))?;
    let background: Vec<(f64, f64)> = all.points().iter().map(|p| xy(&p.coords)).collect();
    let scatter: Vec<LabeledPoint> = all
        .points()
        .iter()
        .map(|p| {
            let (x, y) = xy(&p.coords);
            LabeledPoint::new(p.label.clone(), x, y)
        })
        .collect();
    let spec = PlotSpec::new(PlotKind::Scatter, "Category points, first two components");
    art.write(
        &PlotKind::Scatter.file_name("mca"),
        render_plot(&spec, &PlotData::Points(scatter))?.as_bytes(),
    )?;

    for sc in subclouds {
        let points = sc
            .cloud
            .points()
            .iter()
            .map(|p| {
                let (x, y) = xy(&p.coords);
                LabeledPoint::new(p.label.clone(), x, y)
            })
            .collect();
        let spec = PlotSpec::new(
            PlotKind::Subcloud,
            format!("Sub-cloud of {}", sc.language_id),
        );
        let data = PlotData::Subcloud {
            background: background.clone(),
            points,
        };
        art.write(
            &PlotKind::Subcloud.file_name(&sc.language_id),
            render_plot(&spec, &data)?.as_bytes(),
        )?;
    }

    let p = cfg.persistence.homology_dim;
    for d in diagrams {
        let spec = PlotSpec::new(
            PlotKind::Diagram,
            format!("Dimension-{p} diagram of {}", d.language_id),
        );
        let data = PlotData::Diagram(d.diagram.dimension(p).points());
        art.write(
            &PlotKind::Diagram.file_name(&d.language_id),
            render_plot(&spec, &data)?.as_bytes(),
        )?;
    }

    if let Some(e) = embedding {
        let tag = match cfg.metric.kind {
            crate::config::MetricKind::Bottleneck => "bottleneck",
            crate::config::MetricKind::Wasserstein => "wasserstein",
        };
        let mut spec = PlotSpec::new(PlotKind::Mds2d, format!("MDS of {tag} distances"));
        spec.show_labels = true;
        let groups: Vec<Option<String>> =
            e.labels.iter().map(|l| group_of.get(l).cloned()).collect();
        let row = |i: usize, a: usize| {
            if a < e.dims() {
                e.coordinates[(i, a)]
            } else {
                0.0
            }
        };
        if e.dims() >= 3 {
            spec.kind = PlotKind::Mds3d;
            let data = PlotData::Points3 {
                labels: e.labels.clone(),
                coords: (0..e.labels.len())
                    .map(|i| [row(i, 0), row(i, 1), row(i, 2)])
                    .collect(),
                groups,
            };
            art.write(
                &PlotKind::Mds3d.file_name(tag),
                render_plot(&spec, &data)?.as_bytes(),
            )?;
        } else {
            let points = (0..e.labels.len())
                .map(|i| LabeledPoint {
                    label: e.labels[i].clone(),
                    x: row(i, 0),
                    y: row(i, 1),
                    group: groups[i].clone(),
                })
                .collect();
            art.write(
                &PlotKind::Mds2d.file_name(tag),
                render_plot(&spec, &PlotData::Points(points))?.as_bytes(),
            )?;
        }
    }
    Ok(())
}

/// Reads `coordinates.csv` and `table.csv` from a run directory.
pub fn read_mca_stage(dir: &Path) -> Result<(CategoryPoints, CategoricalTable)> {
    let points = CategoryPoints::read_csv(crate::io::read_file(&dir.join("coordinates.csv"))?)?;
    let table = crate::ingest::read_value_table(
        crate::io::read_file(&dir.join("table.csv"))?,
        crate::ingest::InputFormat::Wide,
        &LoadOptions::default(),
    )?;
    Ok((points, table))
}

pub fn read_subclouds(dir: &Path, languages: &[String]) -> Result<Vec<SubCloud>> {
    languages
        .iter()
        .map(|l| SubCloud::read_csv(l, crate::io::read_file(&dir.join(subcloud_file(l)))?))
        .collect()
}

pub fn read_diagrams(
    dir: &Path,
    languages: &[String],
) -> Result<Vec<(String, PersistenceDiagram)>> {
    languages
        .iter()
        .map(|l| {
            let d =
                PersistenceDiagram::read_csv(crate::io::read_file(&dir.join(diagram_file(l)))?)?;
            Ok((l.clone(), d))
        })
        .collect()
}

/// Languages with a file `<prefix>_<id>.csv` in `dir`, sorted.
pub fn languages_in(dir: &Path, prefix: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let head = format!("{prefix}_");
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(rest) = name
            .strip_prefix(&head)
            .and_then(|r| r.strip_suffix(".csv"))
        {
            out.push(rest.to_owned());
        }
    }
    out.sort();
    Ok(out)
}
