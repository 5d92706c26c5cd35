//! Category point clouds and per-language sub-clouds.

use std::collections::HashSet;
use std::io::Read;

use crate::error::{Error, Result};
use crate::ingest::CategoricalTable;
use crate::io::{fmt_f64, parse_floats};
use crate::mca::{CategoryId, CategoryPoints};

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub label: String,
    pub coords: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<Point>,
}

impl PointCloud {
    pub fn new(dim: usize, points: Vec<Point>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| p.coords.len() != dim) {
            return Err(Error::invalid(format!(
                "point `{}` has {} coordinates, expected {dim}",
                p.label,
                p.coords.len()
            )));
        }
        let mut seen = HashSet::new();
        for p in &points {
            if !seen.insert(p.label.as_str()) {
                return Err(Error::DuplicateId(p.label.clone()));
            }
        }
        Ok(PointCloud { dim, points })
    }

    /// Cloud with labels `p0, p1, ...`.
    pub fn from_coords(coords: Vec<Vec<f64>>) -> Result<Self> {
        let dim = coords.first().map_or(0, Vec::len);
        let points = coords
            .into_iter()
            .enumerate()
            .map(|(i, c)| Point {
                label: format!("p{i}"),
                coords: c,
            })
            .collect();
        PointCloud::new(dim, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn label(&self, i: usize) -> &str {
        &self.points[i].label
    }

    /// Keeps the first `d` coordinates of every point.
    pub fn truncate(&self, d: usize) -> Result<PointCloud> {
        if d == 0 || d > self.dim {
            return Err(Error::DimensionOutOfRange {
                requested: d,
                available: self.dim,
            });
        }
        Ok(PointCloud {
            dim: d,
            points: self
                .points
                .iter()
                .map(|p| Point {
                    label: p.label.clone(),
                    coords: p.coords[..d].to_vec(),
                })
                .collect(),
        })
    }
}

/// One language's category points: one point per feature.
#[derive(Clone, Debug, PartialEq)]
pub struct SubCloud {
    pub language_id: String,
    pub cloud: PointCloud,
    pub source_categories: Vec<CategoryId>,
}

impl SubCloud {
    /// `subcloud_<language>.csv`: `feature_id,category_code,dim1..dimd`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["feature_id".to_owned(), "category_code".to_owned()];
        header.extend((1..=self.cloud.dim()).map(|k| format!("dim{k}")));
        w.write_record(&header)?;
        for (p, c) in self.cloud.points().iter().zip(&self.source_categories) {
            let mut rec = vec![c.feature.clone(), c.label.clone()];
            rec.extend(p.coords.iter().map(|x| fmt_f64(*x)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(language_id: &str, input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let dim = rdr.headers()?.len().saturating_sub(2);
        let mut points = Vec::new();
        let mut cats = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let id = CategoryId {
                feature: rec.get(0).unwrap_or("").to_owned(),
                code: 0,
                label: rec.get(1).unwrap_or("").to_owned(),
            };
            points.push(Point {
                label: id.display(),
                coords: parse_floats(rec.iter().skip(2), line)?,
            });
            cats.push(id);
        }
        Ok(SubCloud {
            language_id: language_id.to_owned(),
            cloud: PointCloud::new(dim, points)?,
            source_categories: cats,
        })
    }
}

fn check_dim(points: &CategoryPoints, d: usize) -> Result<()> {
    let available = points.coordinates.cols();
    if d == 0 || d > available {
        return Err(Error::DimensionOutOfRange {
            requested: d,
            available,
        });
    }
    Ok(())
}

/// Every retained category value as a point in the first `d` principal axes.
pub fn full_cloud(points: &CategoryPoints, d: usize) -> Result<PointCloud> {
    check_dim(points, d)?;
    let pts = points
        .ids
        .iter()
        .enumerate()
        .map(|(j, id)| Point {
            label: id.display(),
            coords: points.coordinates.row(j)[..d].to_vec(),
        })
        .collect();
    PointCloud::new(d, pts)
}

/// The category points selected by one language's values.
pub fn subcloud(
    points: &CategoryPoints,
    table: &CategoricalTable,
    language_id: &str,
    d: usize,
) -> Result<SubCloud> {
    check_dim(points, d)?;
    let row = table
        .sample_index(language_id)
        .ok_or_else(|| Error::UnknownSample(language_id.to_owned()))?;
    let mut pts = Vec::with_capacity(table.n_features());
    let mut cats = Vec::with_capacity(table.n_features());
    for (f, feature) in table.feature_ids().iter().enumerate() {
        let label = table.label_at(row, f).ok_or(Error::MissingCells)?;
        let j = points.position(feature, label).unwrap_or_else(|| {
            panic!("category {feature}:{label} observed in the table but absent from the model")
        });
        let id = &points.ids[j];
        pts.push(Point {
            label: id.display(),
            coords: points.coordinates.row(j)[..d].to_vec(),
        });
        cats.push(id.clone());
    }
    Ok(SubCloud {
        language_id: language_id.to_owned(),
        cloud: PointCloud::new(d, pts)?,
        source_categories: cats,
    })
}
