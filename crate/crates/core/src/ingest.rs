//! Loading and cleaning of categorical value tables.
//!
//! A [`CategoricalTable`] is a samples × features grid of small integer
//! category codes (or missing cells). Every preprocessing step is a pure
//! function returning a new table plus a [`PreprocessReport`] describing what
//! it removed or rewrote.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CategoryCode = u32;

/// Raw strings read as a missing cell.
pub const DEFAULT_SENTINELS: [&str; 3] = ["", "?", "NA"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoricalTable {
    sample_ids: Vec<String>,
    feature_ids: Vec<String>,
    cells: Vec<Option<CategoryCode>>,
    category_labels: Vec<Vec<String>>,
}

impl CategoricalTable {
    /// Builds a table from already coded cells, checking every invariant.
    pub fn new(
        sample_ids: Vec<String>,
        feature_ids: Vec<String>,
        cells: Vec<Option<CategoryCode>>,
        category_labels: Vec<Vec<String>>,
    ) -> Result<Self> {
        check_unique(&sample_ids)?;
        check_unique(&feature_ids)?;
        if cells.len() != sample_ids.len() * feature_ids.len() {
            return Err(Error::invalid(format!(
                "grid has {} cells, expected {}x{}",
                cells.len(),
                sample_ids.len(),
                feature_ids.len()
            )));
        }
        if category_labels.len() != feature_ids.len() {
            return Err(Error::invalid("one label list per feature required"));
        }
        let q = feature_ids.len();
        for (idx, cell) in cells.iter().enumerate() {
            if let Some(code) = cell {
                let f = idx % q;
                if *code as usize >= category_labels[f].len() {
                    return Err(Error::invalid(format!(
                        "code {code} has no label in feature `{}`",
                        feature_ids[f]
                    )));
                }
            }
        }
        Ok(CategoricalTable {
            sample_ids,
            feature_ids,
            cells,
            category_labels,
        })
    }

    /// Builds a table from display strings; `None` is a missing cell. Codes are
    /// assigned per feature in first-seen (row) order.
    pub fn from_labels<S: AsRef<str>>(
        sample_ids: &[S],
        feature_ids: &[S],
        grid: &[Vec<Option<S>>],
    ) -> Result<Self> {
        let samples: Vec<String> = sample_ids.iter().map(|s| s.as_ref().to_owned()).collect();
        let features: Vec<String> = feature_ids.iter().map(|s| s.as_ref().to_owned()).collect();
        if grid.len() != samples.len() || grid.iter().any(|r| r.len() != features.len()) {
            return Err(Error::invalid("grid shape does not match identifiers"));
        }
        let mut coder = Coder::new(features.len());
        let mut cells = Vec::with_capacity(samples.len() * features.len());
        for row in grid {
            for (f, cell) in row.iter().enumerate() {
                cells.push(cell.as_ref().map(|v| coder.code(f, v.as_ref())));
            }
        }
        CategoricalTable::new(samples, features, cells, coder.labels)
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn labels(&self, feature: usize) -> &[String] {
        &self.category_labels[feature]
    }

    pub fn get(&self, sample: usize, feature: usize) -> Option<CategoryCode> {
        self.cells[sample * self.n_features() + feature]
    }

    pub fn label_at(&self, sample: usize, feature: usize) -> Option<&str> {
        self.get(sample, feature)
            .map(|c| self.category_labels[feature][c as usize].as_str())
    }

    pub fn row(&self, sample: usize) -> &[Option<CategoryCode>] {
        let q = self.n_features();
        &self.cells[sample * q..(sample + 1) * q]
    }

    pub fn sample_index(&self, id: &str) -> Option<usize> {
        self.sample_ids.iter().position(|s| s == id)
    }

    pub fn feature_index(&self, id: &str) -> Option<usize> {
        self.feature_ids.iter().position(|s| s == id)
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    fn column_missing(&self, feature: usize) -> usize {
        (0..self.n_samples())
            .filter(|&i| self.get(i, feature).is_none())
            .count()
    }

    fn distinct_observed(&self, feature: usize) -> Vec<CategoryCode> {
        let mut seen: Vec<CategoryCode> = (0..self.n_samples())
            .filter_map(|i| self.get(i, feature))
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }

    /// Sub-table with the given sample and feature indices (in that order).
    pub fn select(&self, samples: &[usize], features: &[usize]) -> CategoricalTable {
        let mut cells = Vec::with_capacity(samples.len() * features.len());
        for &i in samples {
            for &f in features {
                cells.push(self.get(i, f));
            }
        }
        CategoricalTable {
            sample_ids: samples
                .iter()
                .map(|&i| self.sample_ids[i].clone())
                .collect(),
            feature_ids: features
                .iter()
                .map(|&f| self.feature_ids[f].clone())
                .collect(),
            cells,
            category_labels: features
                .iter()
                .map(|&f| self.category_labels[f].clone())
                .collect(),
        }
    }

    /// Recodes every feature in first-seen row order and drops labels that no
    /// longer occur, so that a wide CSV round trip reproduces the table exactly.
    pub fn canonicalize(&self) -> CategoricalTable {
        let mut coder = Coder::new(self.n_features());
        let mut cells = Vec::with_capacity(self.cells.len());
        for i in 0..self.n_samples() {
            for f in 0..self.n_features() {
                cells.push(self.label_at(i, f).map(|l| coder.code(f, l)));
            }
        }
        CategoricalTable {
            sample_ids: self.sample_ids.clone(),
            feature_ids: self.feature_ids.clone(),
            cells,
            category_labels: coder.labels,
        }
    }

    /// Writes the table as a wide CSV (`sample_id`, then one column per
    /// feature); missing cells are written empty.
    pub fn write_wide<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["sample_id".to_owned()];
        header.extend(self.feature_ids.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.n_samples() {
            let mut rec = vec![self.sample_ids[i].clone()];
            for f in 0..self.n_features() {
                rec.push(self.label_at(i, f).unwrap_or("").to_owned());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

/// Assigns per-feature codes in first-seen order.
struct Coder {
    labels: Vec<Vec<String>>,
    lookup: Vec<HashMap<String, CategoryCode>>,
}

impl Coder {
    fn new(n_features: usize) -> Self {
        Coder {
            labels: vec![Vec::new(); n_features],
            lookup: vec![HashMap::new(); n_features],
        }
    }

    fn code(&mut self, feature: usize, label: &str) -> CategoryCode {
        if let Some(&c) = self.lookup[feature].get(label) {
            return c;
        }
        let c = self.labels[feature].len() as CategoryCode;
        self.labels[feature].push(label.to_owned());
        self.lookup[feature].insert(label.to_owned(), c);
        c
    }

    fn push_feature(&mut self) -> usize {
        self.labels.push(Vec::new());
        self.lookup.push(HashMap::new());
        self.labels.len() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// `Language_ID,Parameter_ID,Value` rows (extra columns ignored).
    Long,
    /// First column sample id, remaining columns one feature each.
    Wide,
}

#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub sentinels: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            sentinels: DEFAULT_SENTINELS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

pub fn load_value_table(path: impl AsRef<Path>, format: InputFormat) -> Result<CategoricalTable> {
    load_value_table_with(path, format, &LoadOptions::default())
}

pub fn load_value_table_with(
    path: impl AsRef<Path>,
    format: InputFormat,
    options: &LoadOptions,
) -> Result<CategoricalTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_value_table(file, format, options)
}

pub fn read_value_table<R: Read>(
    reader: R,
    format: InputFormat,
    options: &LoadOptions,
) -> Result<CategoricalTable> {
    let rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    match format {
        InputFormat::Long => read_long(rdr, options),
        InputFormat::Wide => read_wide(rdr, options),
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn map_csv_error(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { pos, .. } => Error::Malformed {
            line: pos.as_ref().map_or(0, |p| p.line()),
            reason: e.to_string(),
        },
        _ => Error::Csv(e),
    }
}

fn read_long<R: Read>(mut rdr: csv::Reader<R>, options: &LoadOptions) -> Result<CategoricalTable> {
    let headers = rdr.headers().map_err(map_csv_error)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let (c_lang, c_param, c_value) = (col("Language_ID")?, col("Parameter_ID")?, col("Value")?);

    let mut samples: Vec<String> = Vec::new();
    let mut sample_idx: HashMap<String, usize> = HashMap::new();
    let mut features: Vec<String> = Vec::new();
    let mut feature_idx: HashMap<String, usize> = HashMap::new();
    let mut coder = Coder::new(0);
    let mut values: HashMap<(usize, usize), (CategoryCode, u64)> = HashMap::new();

    for rec in rdr.records() {
        let rec = rec.map_err(map_csv_error)?;
        let line = line_of(&rec);
        let lang = rec.get(c_lang).unwrap_or("").trim();
        let param = rec.get(c_param).unwrap_or("").trim();
        if lang.is_empty() || param.is_empty() {
            return Err(Error::Malformed {
                line,
                reason: "empty Language_ID or Parameter_ID".into(),
            });
        }
        let s = *sample_idx.entry(lang.to_owned()).or_insert_with(|| {
            samples.push(lang.to_owned());
            samples.len() - 1
        });
        let f = match feature_idx.get(param) {
            Some(&f) => f,
            None => {
                let f = coder.push_feature();
                features.push(param.to_owned());
                feature_idx.insert(param.to_owned(), f);
                f
            }
        };
        let raw = rec.get(c_value).unwrap_or("").trim();
        if options.sentinels.iter().any(|m| m == raw) {
            continue;
        }
        let code = coder.code(f, raw);
        if let Some(&(prev, _)) = values.get(&(s, f)) {
            if prev != code {
                return Err(Error::ConflictingValue {
                    sample: lang.to_owned(),
                    feature: param.to_owned(),
                    first: coder.labels[f][prev as usize].clone(),
                    second: raw.to_owned(),
                });
            }
        } else {
            values.insert((s, f), (code, line));
        }
    }

    let q = features.len();
    let mut cells = vec![None; samples.len() * q];
    for ((s, f), (code, _)) in values {
        cells[s * q + f] = Some(code);
    }
    CategoricalTable::new(samples, features, cells, coder.labels)
}

fn read_wide<R: Read>(mut rdr: csv::Reader<R>, options: &LoadOptions) -> Result<CategoricalTable> {
    let headers = rdr.headers().map_err(map_csv_error)?.clone();
    if headers.len() < 2 {
        return Err(Error::Malformed {
            line: 1,
            reason: "wide table needs a sample column and at least one feature".into(),
        });
    }
    let features: Vec<String> = headers
        .iter()
        .skip(1)
        .map(|h| h.trim().to_owned())
        .collect();
    let q = features.len();
    let mut coder = Coder::new(q);
    let mut samples = Vec::new();
    let mut cells = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(map_csv_error)?;
        let id = rec.get(0).unwrap_or("").trim();
        if id.is_empty() {
            return Err(Error::Malformed {
                line: line_of(&rec),
                reason: "empty sample id".into(),
            });
        }
        samples.push(id.to_owned());
        for f in 0..q {
            let raw = rec.get(f + 1).unwrap_or("").trim();
            if options.sentinels.iter().any(|m| m == raw) {
                cells.push(None);
            } else {
                cells.push(Some(coder.code(f, raw)));
            }
        }
    }
    CategoricalTable::new(samples, features, cells, coder.labels)
}

/// Record of what each preprocessing step removed or rewrote.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PreprocessReport {
    pub dropped_excluded_samples: Vec<String>,
    pub dropped_constant_features: Vec<String>,
    pub dropped_missing_features: Vec<String>,
    pub dropped_missing_samples: Vec<String>,
    pub missingness_passes: usize,
    pub imputed_cell_count: usize,
    /// Original feature → (XY feature, YX feature), in table order.
    pub ternary_splits: Vec<(String, (String, String))>,
    pub warnings: Vec<String>,
}

impl PreprocessReport {
    pub fn merge(&mut self, other: PreprocessReport) {
        self.dropped_excluded_samples
            .extend(other.dropped_excluded_samples);
        self.dropped_constant_features
            .extend(other.dropped_constant_features);
        self.dropped_missing_features
            .extend(other.dropped_missing_features);
        self.dropped_missing_samples
            .extend(other.dropped_missing_samples);
        self.missingness_passes += other.missingness_passes;
        self.imputed_cell_count += other.imputed_cell_count;
        self.ternary_splits.extend(other.ternary_splits);
        self.warnings.extend(other.warnings);
    }

    /// Human-readable report, one decision per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for id in &self.dropped_excluded_samples {
            let _ = writeln!(s, "exclude-sample {id}");
        }
        for id in &self.dropped_constant_features {
            let _ = writeln!(s, "drop-constant-feature {id}");
        }
        for id in &self.dropped_missing_features {
            let _ = writeln!(s, "drop-feature-missingness {id}");
        }
        for id in &self.dropped_missing_samples {
            let _ = writeln!(s, "drop-sample-missingness {id}");
        }
        if self.missingness_passes > 0 {
            let _ = writeln!(s, "missingness-passes {}", self.missingness_passes);
        }
        for (f, (xy, yx)) in &self.ternary_splits {
            let _ = writeln!(s, "split-ternary {f} -> {xy} {yx}");
        }
        let _ = writeln!(s, "imputed-cells {}", self.imputed_cell_count);
        for w in &self.warnings {
            let _ = writeln!(s, "warning {w}");
        }
        s
    }

    /// CSV of dropped items with columns `kind,id,reason`.
    pub fn write_dropped_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "id", "reason"])?;
        let groups: [(&str, &str, &Vec<String>); 4] = [
            ("sample", "excluded", &self.dropped_excluded_samples),
            ("feature", "constant", &self.dropped_constant_features),
            ("feature", "missingness", &self.dropped_missing_features),
            ("sample", "missingness", &self.dropped_missing_samples),
        ];
        for (kind, reason, ids) in groups {
            for id in ids {
                w.write_record([kind, id.as_str(), reason])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Removes the listed samples and, if `drop_constant`, every feature with at
/// most one distinct observed value. Unknown ids only produce a warning.
pub fn apply_exclusions(
    table: &CategoricalTable,
    excluded_samples: &[String],
    drop_constant: bool,
) -> (CategoricalTable, PreprocessReport) {
    let mut report = PreprocessReport::default();
    let excluded: HashSet<&str> = excluded_samples.iter().map(String::as_str).collect();
    for id in excluded_samples {
        if table.sample_index(id).is_none() {
            report
                .warnings
                .push(format!("excluded sample `{id}` not present"));
        }
    }
    let keep_samples: Vec<usize> = (0..table.n_samples())
        .filter(|&i| {
            let id = table.sample_ids[i].as_str();
            if excluded.contains(id) {
                report.dropped_excluded_samples.push(id.to_owned());
                false
            } else {
                true
            }
        })
        .collect();
    let all_features: Vec<usize> = (0..table.n_features()).collect();
    let reduced = table.select(&keep_samples, &all_features);
    if !drop_constant {
        return (reduced, report);
    }
    let keep_features: Vec<usize> = (0..reduced.n_features())
        .filter(|&f| {
            if reduced.distinct_observed(f).len() <= 1 {
                report
                    .dropped_constant_features
                    .push(reduced.feature_ids[f].clone());
                false
            } else {
                true
            }
        })
        .collect();
    let all_samples: Vec<usize> = (0..reduced.n_samples()).collect();
    (reduced.select(&all_samples, &keep_features), report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterPasses {
    /// One feature pass followed by one sample pass.
    Single,
    /// Repeat feature and sample passes until nothing changes.
    FixedPoint,
}

/// Drops features, then samples, whose missing fraction exceeds `max_fraction`.
pub fn filter_by_missingness(
    table: &CategoricalTable,
    max_fraction: f64,
    passes: FilterPasses,
) -> Result<(CategoricalTable, PreprocessReport)> {
    if !(0.0..=1.0).contains(&max_fraction) {
        return Err(Error::invalid(format!(
            "missingness threshold {max_fraction} outside [0, 1]"
        )));
    }
    let mut report = PreprocessReport::default();
    let mut current = table.clone();
    loop {
        report.missingness_passes += 1;
        let n = current.n_samples();
        let keep_features: Vec<usize> = (0..current.n_features())
            .filter(|&f| {
                let frac = if n == 0 {
                    0.0
                } else {
                    current.column_missing(f) as f64 / n as f64
                };
                if frac > max_fraction {
                    report
                        .dropped_missing_features
                        .push(current.feature_ids[f].clone());
                    false
                } else {
                    true
                }
            })
            .collect();
        let all_samples: Vec<usize> = (0..n).collect();
        let after_features = current.select(&all_samples, &keep_features);

        let q = after_features.n_features();
        let keep_samples: Vec<usize> = (0..after_features.n_samples())
            .filter(|&i| {
                let missing = after_features.row(i).iter().filter(|c| c.is_none()).count();
                let frac = if q == 0 {
                    0.0
                } else {
                    missing as f64 / q as f64
                };
                if frac > max_fraction {
                    report
                        .dropped_missing_samples
                        .push(after_features.sample_ids[i].clone());
                    false
                } else {
                    true
                }
            })
            .collect();
        let all_features: Vec<usize> = (0..q).collect();
        let next = after_features.select(&keep_samples, &all_features);
        let changed =
            next.n_samples() != current.n_samples() || next.n_features() != current.n_features();
        current = next;
        if current.n_samples() == 0 || current.n_features() == 0 {
            return Err(Error::EmptyTable("missingness filtering"));
        }
        if passes == FilterPasses::Single || !changed {
            break;
        }
    }
    Ok((current, report))
}

/// Label → (XY indicator, YX indicator) used when splitting ternary features.
pub type TernaryMapping = BTreeMap<String, (u8, u8)>;

/// `1` = XY order, `2` = YX order, `3` = both.
pub fn default_ternary_mapping() -> TernaryMapping {
    [("1", (1, 0)), ("2", (0, 1)), ("3", (1, 1))]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect()
}

/// Replaces each listed feature `F` by the binary features `F_XY` and `F_YX`.
pub fn split_ternary(
    table: &CategoricalTable,
    ternary_features: &[String],
    mapping: &TernaryMapping,
) -> Result<(CategoricalTable, PreprocessReport)> {
    let mut report = PreprocessReport::default();
    let listed: HashSet<&str> = ternary_features.iter().map(String::as_str).collect();
    for id in ternary_features {
        if table.feature_index(id).is_none() {
            report
                .warnings
                .push(format!("ternary feature `{id}` not present; skipped"));
        }
    }

    let binary_labels = vec!["0".to_owned(), "1".to_owned()];
    let mut feature_ids = Vec::new();
    let mut labels = Vec::new();
    // per output feature: a function of the source cell
    let mut sources: Vec<(usize, Option<bool>)> = Vec::new();
    let mut lookups: Vec<Option<HashMap<CategoryCode, (u8, u8)>>> = Vec::new();

    for f in 0..table.n_features() {
        let id = &table.feature_ids[f];
        if !listed.contains(id.as_str()) {
            feature_ids.push(id.clone());
            labels.push(table.category_labels[f].clone());
            sources.push((f, None));
            lookups.push(None);
            continue;
        }
        let observed = table.distinct_observed(f);
        if observed.len() > 3 {
            return Err(Error::TooManyCategories {
                feature: id.clone(),
                count: observed.len(),
            });
        }
        let mut lookup = HashMap::new();
        for code in observed {
            let label = &table.category_labels[f][code as usize];
            let pair = mapping
                .get(label)
                .ok_or_else(|| Error::UnmappedTernaryValue {
                    feature: id.clone(),
                    value: label.clone(),
                })?;
            lookup.insert(code, *pair);
        }
        let (xy, yx) = (format!("{id}_XY"), format!("{id}_YX"));
        report
            .ternary_splits
            .push((id.clone(), (xy.clone(), yx.clone())));
        for (name, first) in [(xy, true), (yx, false)] {
            feature_ids.push(name);
            labels.push(binary_labels.clone());
            sources.push((f, Some(first)));
            lookups.push(Some(lookup.clone()));
        }
    }

    let mut cells = Vec::with_capacity(table.n_samples() * feature_ids.len());
    for i in 0..table.n_samples() {
        for ((f, which), lookup) in sources.iter().zip(&lookups) {
            let cell = table.get(i, *f);
            cells.push(match (which, lookup) {
                (None, _) => cell,
                (Some(first), Some(lookup)) => cell.map(|c| {
                    let (a, b) = lookup[&c];
                    CategoryCode::from(if *first { a } else { b })
                }),
                (Some(_), None) => unreachable!("split feature without lookup"),
            });
        }
    }
    let out = CategoricalTable::new(table.sample_ids.clone(), feature_ids, cells, labels)?;
    Ok((out, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImputeMethod {
    /// Per-feature majority value; ties broken by a seeded draw.
    Mode,
    /// Majority among the `k` Gower-nearest donors; ties go to the nearest donor.
    Knn,
}

/// Fills every missing cell.
pub fn impute(
    table: &CategoricalTable,
    method: ImputeMethod,
    k: usize,
    seed: u64,
) -> Result<(CategoricalTable, PreprocessReport)> {
    let mut report = PreprocessReport::default();
    let q = table.n_features();
    let n = table.n_samples();
    for f in 0..q {
        if n > 0 && table.column_missing(f) == n {
            return Err(Error::EmptyFeature(table.feature_ids[f].clone()));
        }
    }
    if method == ImputeMethod::Knn && k == 0 {
        return Err(Error::invalid("knn imputation needs k >= 1"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<Option<CategoryCode>> = (0..q)
        .map(|f| {
            if table.column_missing(f) == 0 {
                None
            } else {
                Some(feature_mode(table, f, &mut rng))
            }
        })
        .collect();

    let mut cells = table.cells.clone();
    for i in 0..n {
        for f in 0..q {
            if table.get(i, f).is_some() {
                continue;
            }
            let value = match method {
                ImputeMethod::Mode => None,
                ImputeMethod::Knn => knn_vote(table, i, f, k),
            }
            .or(modes[f])
            .expect("mode exists for every feature with missing cells");
            cells[i * q + f] = Some(value);
            report.imputed_cell_count += 1;
        }
    }
    let out = CategoricalTable {
        cells,
        ..table.clone()
    };
    Ok((out, report))
}

fn feature_mode(table: &CategoricalTable, f: usize, rng: &mut ChaCha8Rng) -> CategoryCode {
    let mut counts: BTreeMap<CategoryCode, usize> = BTreeMap::new();
    for i in 0..table.n_samples() {
        if let Some(c) = table.get(i, f) {
            *counts.entry(c).or_default() += 1;
        }
    }
    let best = counts.values().copied().max().unwrap_or(0);
    let tied: Vec<CategoryCode> = counts
        .iter()
        .filter(|(_, &n)| n == best)
        .map(|(&c, _)| c)
        .collect();
    if tied.len() == 1 {
        tied[0]
    } else {
        *tied.choose(rng).expect("non-empty tie set")
    }
}

/// Gower distance between two samples over co-observed features other than
/// `skip`; `None` when they share no observed feature.
pub fn gower_distance(table: &CategoricalTable, a: usize, b: usize, skip: usize) -> Option<f64> {
    let mut shared = 0usize;
    let mut differ = 0usize;
    for (f, (x, y)) in table.row(a).iter().zip(table.row(b)).enumerate() {
        if f == skip {
            continue;
        }
        if let (Some(x), Some(y)) = (x, y) {
            shared += 1;
            if x != y {
                differ += 1;
            }
        }
    }
    (shared > 0).then(|| differ as f64 / shared as f64)
}

fn knn_vote(table: &CategoricalTable, target: usize, f: usize, k: usize) -> Option<CategoryCode> {
    let mut donors: Vec<(f64, usize, CategoryCode)> = (0..table.n_samples())
        .filter(|&j| j != target)
        .filter_map(|j| {
            let value = table.get(j, f)?;
            let d = gower_distance(table, target, j, f)?;
            Some((d, j, value))
        })
        .collect();
    if donors.is_empty() {
        return None;
    }
    donors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    donors.truncate(k);
    let mut votes: HashMap<CategoryCode, usize> = HashMap::new();
    for &(_, _, v) in &donors {
        *votes.entry(v).or_default() += 1;
    }
    let best = votes.values().copied().max()?;
    donors.iter().map(|&(_, _, v)| v).find(|v| votes[v] == best)
}
