//! Adjusted multiple correspondence analysis on the Burt matrix.
//!
//! Pipeline: complete table → indicator matrix `Z` → Burt matrix `B = ZᵀZ` →
//! correspondence matrix, standardized residuals, symmetric eigendecomposition,
//! adjusted inertias and principal coordinates of every category value.

use std::io::Read;

use crate::error::{Error, Result};
use crate::ingest::{CategoricalTable, CategoryCode};
use crate::linalg::{symmetric_eigen, Matrix};

/// One column of the indicator matrix: a category value of a feature.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CategoryId {
    pub feature: String,
    pub code: CategoryCode,
    pub label: String,
}

impl CategoryId {
    /// `feature:label`, the point label used in clouds.
    pub fn display(&self) -> String {
        format!("{}:{}", self.feature, self.label)
    }
}

#[derive(Clone, Debug)]
pub struct IndicatorMatrix {
    entries: Vec<u8>,
    row_ids: Vec<String>,
    column_ids: Vec<CategoryId>,
    n_features: usize,
}

impl IndicatorMatrix {
    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn column_ids(&self) -> &[CategoryId] {
        &self.column_ids
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.n_cols() + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.entries[i * self.n_cols()..(i + 1) * self.n_cols()]
    }
}

/// Builds `Z`, keeping only categories observed at least once. Columns are
/// ordered by feature, then by category code.
pub fn indicator_matrix(table: &CategoricalTable) -> Result<IndicatorMatrix> {
    if !table.is_complete() {
        return Err(Error::MissingCells);
    }
    let (n, q) = (table.n_samples(), table.n_features());
    let mut column_ids = Vec::new();
    let mut column_of: Vec<Vec<Option<usize>>> = Vec::with_capacity(q);
    for f in 0..q {
        let labels = table.labels(f);
        let mut used = vec![false; labels.len()];
        for i in 0..n {
            used[table.get(i, f).expect("complete") as usize] = true;
        }
        let mut map = vec![None; labels.len()];
        for (code, _) in used.iter().enumerate().filter(|(_, &u)| u) {
            map[code] = Some(column_ids.len());
            column_ids.push(CategoryId {
                feature: table.feature_ids()[f].clone(),
                code: code as CategoryCode,
                label: labels[code].clone(),
            });
        }
        column_of.push(map);
    }
    let j = column_ids.len();
    let mut entries = vec![0u8; n * j];
    for i in 0..n {
        for (f, map) in column_of.iter().enumerate() {
            let code = table.get(i, f).expect("complete") as usize;
            entries[i * j + map[code].expect("observed category")] = 1;
        }
    }
    Ok(IndicatorMatrix {
        entries,
        row_ids: table.sample_ids().to_vec(),
        column_ids,
        n_features: q,
    })
}

/// `B = ZᵀZ`.
pub fn burt_matrix(z: &IndicatorMatrix) -> Matrix {
    let j = z.n_cols();
    let mut b = Matrix::zeros(j, j);
    for i in 0..z.n_rows() {
        let ones: Vec<usize> = z
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == 1)
            .map(|(c, _)| c)
            .collect();
        for &a in &ones {
            for &c in &ones {
                b[(a, c)] += 1.0;
            }
        }
    }
    b
}

/// Category identities together with their principal coordinates (row `j` of
/// `coordinates` belongs to `ids[j]`).
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryPoints {
    pub ids: Vec<CategoryId>,
    pub coordinates: Matrix,
}

impl CategoryPoints {
    pub fn position(&self, feature: &str, label: &str) -> Option<usize> {
        self.ids
            .iter()
            .position(|c| c.feature == feature && c.label == label)
    }

    /// `coordinates.csv`: `feature_id,category_code,dim1..dimJ`. The
    /// `category_code` column carries the category's display label.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["feature_id".to_owned(), "category_code".to_owned()];
        header.extend((1..=self.coordinates.cols()).map(|k| format!("dim{k}")));
        w.write_record(&header)?;
        for (j, id) in self.ids.iter().enumerate() {
            let mut rec = vec![id.feature.clone(), id.label.clone()];
            rec.extend(
                self.coordinates
                    .row(j)
                    .iter()
                    .map(|x| crate::io::fmt_f64(*x)),
            );
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        let mut code_counter: std::collections::HashMap<String, CategoryCode> = Default::default();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let feature = rec.get(0).unwrap_or("").to_owned();
            let label = rec.get(1).unwrap_or("").to_owned();
            let code = code_counter.entry(feature.clone()).or_insert(0);
            ids.push(CategoryId {
                feature,
                code: *code,
                label,
            });
            *code += 1;
            rows.push(crate::io::parse_floats(rec.iter().skip(2), line)?);
        }
        Ok(CategoryPoints {
            ids,
            coordinates: Matrix::from_rows(&rows)?,
        })
    }
}

/// Output of the adjusted MCA.
#[derive(Clone, Debug)]
pub struct McaModel {
    /// Row totals `r` of the correspondence matrix.
    pub row_masses: Vec<f64>,
    /// Eigenvalues of the standardized residual matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Adjusted inertias, zero where the eigenvalue is at most `1/Q`.
    pub adjusted_inertias: Vec<f64>,
    /// Orthonormal eigenvectors (columns).
    pub eigenvectors: Matrix,
    /// Adjusted total inertia.
    pub adjusted_total: f64,
    pub n_features: usize,
    /// Principal coordinates: row `j` is category `j`.
    pub points: CategoryPoints,
}

impl McaModel {
    pub fn n_categories(&self) -> usize {
        self.row_masses.len()
    }

    pub fn coordinates(&self) -> &Matrix {
        &self.points.coordinates
    }

    pub fn column_ids(&self) -> &[CategoryId] {
        &self.points.ids
    }

    /// `scree.csv`: component, adjusted inertia, percentage, cumulative percentage.
    pub fn write_scree_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let shares = variance_percentages(self)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "component",
            "adjusted_inertia",
            "percentage",
            "cumulative_percentage",
        ])?;
        let mut cumulative = 0.0;
        for (k, (inertia, share)) in self.adjusted_inertias.iter().zip(&shares).enumerate() {
            cumulative += share;
            w.write_record([
                (k + 1).to_string(),
                crate::io::fmt_f64(*inertia),
                crate::io::fmt_f64(100.0 * share),
                crate::io::fmt_f64(100.0 * cumulative),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Variance shares (fractions) read back from `scree.csv`.
pub fn read_scree_shares<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut shares = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        shares.push(crate::io::parse_f64(rec.get(2).unwrap_or(""), line)? / 100.0);
    }
    Ok(shares)
}

/// Absolute symmetry tolerance on the Burt matrix.
pub const BURT_SYMMETRY_TOL: f64 = 1e-10;

/// Adjusted MCA of a Burt matrix built from `n_features` features. Column ids
/// are left generic (`c<j>`); use [`fit`] to keep the table's category ids.
pub fn mca_adjusted(b: &Matrix, n_features: usize) -> Result<McaModel> {
    let ids = (0..b.rows())
        .map(|j| CategoryId {
            feature: format!("c{j}"),
            code: 0,
            label: "0".to_owned(),
        })
        .collect();
    mca_adjusted_with_ids(b, n_features, ids)
}

fn mca_adjusted_with_ids(b: &Matrix, q: usize, ids: Vec<CategoryId>) -> Result<McaModel> {
    if !b.is_square() {
        return Err(Error::NotSymmetric(f64::INFINITY));
    }
    let asym = b.asymmetry();
    if asym > BURT_SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    if q == 0 {
        return Err(Error::invalid("MCA needs at least one feature"));
    }
    let j = b.rows();
    let total: f64 = b.as_slice().iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("Burt matrix sums to zero".into()));
    }
    let p = Matrix::from_fn(j, j, |a, c| b[(a, c)] / total);
    let r: Vec<f64> = (0..j).map(|a| p.row(a).iter().sum()).collect();
    if let Some(zero) = (0..j).find(|&a| b[(a, a)] <= 0.0 || r[a] <= 0.0) {
        return Err(Error::ZeroMass(zero));
    }
    let s = Matrix::from_fn(j, j, |a, c| {
        (p[(a, c)] - r[a] * r[c]) / (r[a] * r[c]).sqrt()
    });
    let eig = symmetric_eigen(&s)?;

    let qf = q as f64;
    let adjusted_inertias: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| {
            if q > 1 && l > 1.0 / qf {
                let x = qf / (qf - 1.0) * (l - 1.0 / qf);
                x * x
            } else {
                0.0
            }
        })
        .collect();
    let adjusted_total = if q > 1 {
        let sum_sq: f64 = eig.values.iter().map(|l| l * l).sum();
        qf / (qf - 1.0) * (sum_sq - (j as f64 - qf) / (qf * qf))
    } else {
        0.0
    };
    let lambda_tilde: Vec<f64> = adjusted_inertias.iter().map(|x| x.sqrt()).collect();
    let coordinates = Matrix::from_fn(j, j, |a, k| {
        eig.vectors[(a, k)] * lambda_tilde[k] / r[a].sqrt()
    });

    Ok(McaModel {
        row_masses: r,
        eigenvalues: eig.values,
        adjusted_inertias,
        eigenvectors: eig.vectors,
        adjusted_total,
        n_features: q,
        points: CategoryPoints { ids, coordinates },
    })
}

/// Indicator matrix, Burt matrix and adjusted MCA of a complete table.
pub fn fit(table: &CategoricalTable) -> Result<McaModel> {
    let z = indicator_matrix(table)?;
    let b = burt_matrix(&z);
    mca_adjusted_with_ids(&b, z.n_features(), z.column_ids().to_vec())
}

/// Share of adjusted total inertia per component (fractions, not percents).
pub fn variance_percentages(model: &McaModel) -> Result<Vec<f64>> {
    if !(model.adjusted_total > 0.0) {
        return Err(Error::Degenerate(format!(
            "adjusted total inertia is {}",
            model.adjusted_total
        )));
    }
    Ok(model
        .adjusted_inertias
        .iter()
        .map(|x| x / model.adjusted_total)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[&str]]) -> CategoricalTable {
        let ids: Vec<String> = (0..rows.len()).map(|i| format!("s{i}")).collect();
        let feats: Vec<String> = (0..rows[0].len()).map(|f| format!("F{f}")).collect();
        let grid: Vec<Vec<Option<String>>> = rows
            .iter()
            .map(|r| r.iter().map(|v| Some(v.to_string())).collect())
            .collect();
        CategoricalTable::from_labels(&ids, &feats, &grid).unwrap()
    }

    #[test]
    fn indicator_of_two_samples() {
        let t = table(&[&["0", "0"], &["1", "1"]]);
        let z = indicator_matrix(&t).unwrap();
        assert_eq!(z.n_cols(), 4);
        assert_eq!(z.row(0), &[1, 0, 1, 0]);
        assert_eq!(z.row(1), &[0, 1, 0, 1]);
        let b = burt_matrix(&z);
        let expected = Matrix::from_rows(&[
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(b, expected);
    }

    #[test]
    fn identical_samples_keep_one_column_per_feature() {
        let t = table(&[&["a", "x", "p"], &["a", "x", "p"], &["a", "x", "p"]]);
        let z = indicator_matrix(&t).unwrap();
        assert_eq!(z.n_cols(), 3);
    }

    #[test]
    fn missing_cells_are_rejected() {
        let t = CategoricalTable::from_labels(&["a"], &["F"], &[vec![None]]).unwrap();
        assert!(matches!(indicator_matrix(&t), Err(Error::MissingCells)));
    }

    #[test]
    fn burt_total_is_i_q_squared() {
        let t = table(&[
            &["0", "1", "2"],
            &["1", "1", "0"],
            &["0", "0", "2"],
            &["1", "0", "1"],
        ]);
        let z = indicator_matrix(&t).unwrap();
        let b = burt_matrix(&z);
        let total: f64 = b.as_slice().iter().sum();
        assert_eq!(total, (4 * 3 * 3) as f64);
        assert_eq!(b.asymmetry(), 0.0);
    }

    #[test]
    fn burt_equals_triple_loop_product() {
        let t = table(&[
            &["0", "a", "x"],
            &["1", "b", "x"],
            &["0", "b", "y"],
            &["2", "a", "y"],
            &["1", "a", "x"],
        ]);
        let z = indicator_matrix(&t).unwrap();
        let b = burt_matrix(&z);
        for a in 0..z.n_cols() {
            for c in 0..z.n_cols() {
                let mut acc = 0u32;
                for i in 0..z.n_rows() {
                    acc += u32::from(z.get(i, a)) * u32::from(z.get(i, c));
                }
                assert_eq!(b[(a, c)], f64::from(acc));
            }
        }
    }

    #[test]
    fn identical_samples_collapse_to_origin() {
        let t = table(&[&["a", "x"], &["a", "x"], &["a", "x"], &["a", "x"]]);
        let m = fit(&t).unwrap();
        assert!(m.eigenvalues.iter().all(|l| l.abs() < 1e-12));
        assert!(m.adjusted_inertias.iter().all(|&x| x == 0.0));
        assert!(m.coordinates().as_slice().iter().all(|&x| x == 0.0));
        assert!(variance_percentages(&m).is_err());
    }

    #[test]
    fn asymmetric_burt_rejected() {
        let b = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(mca_adjusted(&b, 2), Err(Error::NotSymmetric(_))));
        let zero = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(mca_adjusted(&zero, 1), Err(Error::ZeroMass(1))));
    }

    #[test]
    fn model_invariants_on_small_table() {
        let t = table(&[
            &["0", "a", "x"],
            &["1", "b", "x"],
            &["0", "b", "y"],
            &["2", "a", "y"],
            &["1", "a", "x"],
            &["0", "a", "y"],
        ]);
        let m = fit(&t).unwrap();
        let j = m.n_categories();
        let total_mass: f64 = m.row_masses.iter().sum();
        assert!((total_mass - 1.0).abs() < 1e-12);
        for w in m.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let q = m.n_features as f64;
        for (l, a) in m.eigenvalues.iter().zip(&m.adjusted_inertias) {
            if *l <= 1.0 / q {
                assert_eq!(*a, 0.0);
            }
        }
        // F recomputed from its factors
        for a in 0..j {
            for k in 0..j {
                let f =
                    m.eigenvectors[(a, k)] * m.adjusted_inertias[k].sqrt() / m.row_masses[a].sqrt();
                assert!((f - m.coordinates()[(a, k)]).abs() < 1e-10);
            }
        }
        let vtv = m.eigenvectors.transpose().matmul(&m.eigenvectors);
        for a in 0..j {
            for c in 0..j {
                let e = if a == c { 1.0 } else { 0.0 };
                assert!((vtv[(a, c)] - e).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn percentages_of_single_component() {
        let t = table(&[&["0", "0"], &["1", "1"], &["0", "0"], &["1", "1"]]);
        let m = fit(&t).unwrap();
        let shares = variance_percentages(&m).unwrap();
        // perfectly associated features: one dominant component
        assert!((shares[0] - 1.0).abs() < 1e-9, "{shares:?}");
        assert!(shares[1..].iter().all(|s| s.abs() < 1e-9));
    }

    #[test]
    fn eigenvalues_below_threshold_give_zero_shares() {
        // two independent balanced features: eigenvalues 1/2 = 1/Q
        let t = table(&[&["0", "0"], &["0", "1"], &["1", "0"], &["1", "1"]]);
        let m = fit(&t).unwrap();
        assert!(
            m.adjusted_inertias.iter().all(|&x| x < 1e-20),
            "{:?}",
            m.eigenvalues
        );
    }

    #[test]
    fn coordinates_csv_round_trip() {
        let t = table(&[
            &["0", "a"],
            &["1", "b"],
            &["0", "b"],
            &["1", "a"],
            &["0", "a"],
        ]);
        let m = fit(&t).unwrap();
        let mut buf = Vec::new();
        m.points.write_csv(&mut buf).unwrap();
        let back = CategoryPoints::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.coordinates, m.points.coordinates);
        assert_eq!(
            back.ids.iter().map(CategoryId::display).collect::<Vec<_>>(),
            m.points
                .ids
                .iter()
                .map(CategoryId::display)
                .collect::<Vec<_>>()
        );
    }
}
