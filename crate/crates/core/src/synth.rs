//! Generator for the bundled synthetic dataset.
//!
//! Background languages carry a latent angle `θ`; arc feature `k` is 1 iff
//! `θ` lies in the half-turn starting at `kπ/12`. The category points of the
//! fitted model then lie on a circle, and a θ-consistent language selects a
//! half of it (no loop). Languages of the `looped` group take value 1 exactly
//! on even-numbered arcs, which selects points all around the circle.
//!
//! Extra rows and columns exercise preprocessing: an excluded dialect, a
//! constant feature, a sparsely coded feature and language, scattered missing
//! cells, and a ternary feature holding arc 0.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const N_ARCS: usize = 12;
pub const N_BACKGROUND: usize = 40;
pub const GROUP_SIZE: usize = 5;
pub const LOOPED: &str = "looped";
pub const ARC: &str = "arc";

/// Half-open test `θ ∈ [kπ/12, kπ/12 + π)` modulo a full turn.
fn on_arc(theta: f64, k: usize) -> bool {
    let start = k as f64 * PI / N_ARCS as f64;
    (theta - start).rem_euclid(2.0 * PI) < PI
}

fn feature_id(k: usize) -> String {
    if k == 0 {
        "SF00".to_owned()
    } else {
        format!("SF{k:02}")
    }
}

/// The arc-0 feature is stored as a ternary word-order style value.
fn value(k: usize, bit: bool) -> &'static str {
    match (k, bit) {
        (0, true) => "1",
        (0, false) => "2",
        (_, true) => "1",
        (_, false) => "0",
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntheticDataset {
    pub values_csv: String,
    pub groups_csv: String,
    pub config_toml: String,
}

struct Row {
    id: String,
    cells: Vec<(String, Option<String>)>,
}

fn theta_row(id: String, theta: f64) -> Row {
    Row {
        id,
        cells: (0..N_ARCS)
            .map(|k| (feature_id(k), Some(value(k, on_arc(theta, k)).to_owned())))
            .collect(),
    }
}

pub fn background_ids() -> Vec<String> {
    (1..=N_BACKGROUND).map(|i| format!("bg{i:03}")).collect()
}

pub fn looped_ids() -> Vec<String> {
    (1..=GROUP_SIZE).map(|i| format!("lp{i:03}")).collect()
}

pub fn arc_ids() -> Vec<String> {
    (1..=GROUP_SIZE).map(|i| format!("ar{i:03}")).collect()
}

pub fn generate() -> SyntheticDataset {
    let mut rows = Vec::new();
    for (i, id) in background_ids().into_iter().enumerate() {
        let theta = 2.0 * PI * (i as f64 + 0.5) / N_BACKGROUND as f64;
        let mut row = theta_row(id, theta);
        // scattered gaps, never more than one per row
        if i % 7 == 3 {
            let k = (i * 5) % N_ARCS;
            row.cells[k].1 = None;
        }
        rows.push(row);
    }
    // a dialect duplicating the first background language
    rows.push(theta_row(
        "bg001d".into(),
        2.0 * PI * 0.5 / N_BACKGROUND as f64,
    ));
    for (i, id) in arc_ids().into_iter().enumerate() {
        let theta = 2.0 * PI * (0.1 + 0.2 * i as f64);
        rows.push(theta_row(id, theta));
    }
    for id in looped_ids() {
        rows.push(Row {
            id,
            cells: (0..N_ARCS)
                .map(|k| (feature_id(k), Some(value(k, k % 2 == 0).to_owned())))
                .collect(),
        });
    }
    // coded for only a few features
    rows.push(Row {
        id: "sparse01".into(),
        cells: (0..N_ARCS)
            .map(|k| (feature_id(k), (k < 4).then(|| value(k, true).to_owned())))
            .collect(),
    });

    let n = rows.len();
    let mut values = String::from("ID,Language_ID,Parameter_ID,Value\n");
    let mut counter = 0usize;
    for (r, row) in rows.iter().enumerate() {
        let mut cells = row.cells.clone();
        cells.push(("SFC1".into(), Some("0".into())));
        // coded for about a third of the languages only
        cells.push(("SFM1".into(), (r % 3 == 0).then(|| (r % 2).to_string())));
        for (f, v) in cells {
            let Some(v) = v else { continue };
            counter += 1;
            let _ = writeln!(values, "{}-{f},{},{f},{v}", row.id, row.id);
        }
    }
    debug_assert!(counter > n);

    let mut groups = String::from("Language_ID,Group\n");
    for id in looped_ids() {
        let _ = writeln!(groups, "{id},{LOOPED}");
    }
    for id in arc_ids() {
        let _ = writeln!(groups, "{id},{ARC}");
    }

    let config = format!(
        "\
[input]
path = \"values.csv\"
format = \"long\"

[preprocess]
exclude = [\"bg001d\"]
drop_constant = true
max_missing = 0.2
ternary = [\"SF00\"]

[impute]
method = \"knn\"
k = 3
seed = 11

[mca]
dims = 2

[persistence]
homology_dim = 1
max_cycles = 1

[metric]
kind = \"wasserstein\"
q = 2.0

[permtest]
exact = true
shuffles = 100
seed = 5
group1 = \"{LOOPED}\"
group2 = \"{ARC}\"

[groups]
path = \"groups.csv\"

[mds]
dims = 2

[output]
dir = \"out\"
"
    );

    SyntheticDataset {
        values_csv: values,
        groups_csv: groups,
        config_toml: config,
    }
}

impl SyntheticDataset {
    /// Writes `values.csv`, `groups.csv` and `config.toml` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [
            ("values.csv", &self.values_csv),
            ("groups.csv", &self.groups_csv),
            ("config.toml", &self.config_toml),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
