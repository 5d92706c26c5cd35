//! Classical (Torgerson) multidimensional scaling.

use std::io::Read;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_floats, LabeledMatrix};
use crate::linalg::{symmetric_eigen, Matrix, SYMMETRY_TOL};

/// Eigenvalues at or below this fraction of the largest one give no axis.
pub const POSITIVE_EIGEN_RTOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub labels: Vec<String>,
    /// `n × k`.
    pub coordinates: Matrix,
    /// Eigenvalue behind each axis; 0 for padded axes.
    pub eigenvalues_used: Vec<f64>,
    /// Full spectrum of the double-centred matrix, descending.
    pub spectrum: Vec<f64>,
    /// `sqrt(Σ (d − d̂)² / Σ d²)` over unordered pairs.
    pub stress: f64,
    /// Trailing axes filled with zeros for lack of positive eigenvalues.
    pub padded_axes: usize,
}

impl Embedding {
    pub fn dims(&self) -> usize {
        self.coordinates.cols()
    }

    /// Euclidean distances between embedded rows.
    pub fn distances(&self) -> Matrix {
        let n = self.coordinates.rows();
        Matrix::from_fn(n, n, |i, j| {
            self.coordinates
                .row(i)
                .iter()
                .zip(self.coordinates.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
    }

    /// `mds.csv`: `label,dim1..dimk`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["label".to_owned()];
        header.extend((1..=self.dims()).map(|a| format!("dim{a}")));
        w.write_record(&header)?;
        for (i, l) in self.labels.iter().enumerate() {
            let mut rec = vec![l.clone()];
            rec.extend(self.coordinates.row(i).iter().map(|x| fmt_f64(*x)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// `mds_eigenvalues.csv`: `axis,eigenvalue,used`, then a `stress` row.
    pub fn write_eigenvalues_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["axis", "eigenvalue", "used"])?;
        for (a, &lambda) in self.spectrum.iter().enumerate() {
            let used = a < self.dims() - self.padded_axes;
            w.write_record([(a + 1).to_string(), fmt_f64(lambda), used.to_string()])?;
        }
        w.write_record(["stress", &fmt_f64(self.stress), ""])?;
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Reads `mds.csv`; only labels and coordinates are recovered.
    pub fn read_coordinates<R: Read>(input: R) -> Result<(Vec<String>, Matrix)> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            labels.push(rec.get(0).unwrap_or("").to_owned());
            rows.push(parse_floats(rec.iter().skip(1), line)?);
        }
        Ok((labels, Matrix::from_rows(&rows)?))
    }
}

fn validate(d: &Matrix) -> Result<()> {
    if !d.is_square() {
        return Err(Error::invalid("distance matrix is not square"));
    }
    let asym = d.asymmetry();
    if asym > SYMMETRY_TOL * d.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    for i in 0..d.rows() {
        if d[(i, i)] != 0.0 {
            return Err(Error::invalid(format!("nonzero diagonal entry at {i}")));
        }
        if d.row(i).iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::invalid(format!(
                "negative or non-finite distance in row {i}"
            )));
        }
    }
    Ok(())
}

/// Embeds `dm` into `k` dimensions: coordinates `V_k Λ_k^{1/2}` of the
/// double-centred matrix `−½ J D² J`.
pub fn classical_mds(dm: &LabeledMatrix, k: usize) -> Result<Embedding> {
    let d = &dm.values;
    validate(d)?;
    let n = d.rows();
    if dm.labels.len() != n {
        return Err(Error::invalid("label count differs from matrix size"));
    }
    if n < 2 || k < 1 || k > n - 1 {
        return Err(Error::DimensionOutOfRange {
            requested: k,
            available: n.saturating_sub(1),
        });
    }

    let sq = Matrix::from_fn(n, n, |i, j| d[(i, j)] * d[(i, j)]);
    let row_mean: Vec<f64> = (0..n)
        .map(|i| sq.row(i).iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let b = Matrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand)
    });

    let eig = symmetric_eigen(&b)?;
    let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut coordinates = Matrix::zeros(n, k);
    let mut eigenvalues_used = vec![0.0; k];
    let mut padded_axes = 0;
    for a in 0..k {
        let lambda = eig.values[a];
        if lambda > POSITIVE_EIGEN_RTOL * top && lambda > 0.0 {
            let s = lambda.sqrt();
            for i in 0..n {
                coordinates[(i, a)] = eig.vectors[(i, a)] * s;
            }
            eigenvalues_used[a] = lambda;
        } else {
            padded_axes += 1;
        }
    }

    let mut emb = Embedding {
        labels: dm.labels.clone(),
        coordinates,
        eigenvalues_used,
        spectrum: eig.values,
        stress: 0.0,
        padded_axes,
    };
    let dhat = emb.distances();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            num += (d[(i, j)] - dhat[(i, j)]).powi(2);
            den += d[(i, j)].powi(2);
        }
    }
    emb.stress = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok(emb)
}
