//! Shared CSV plumbing for stage artifacts.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// 17 significant digits: enough to round-trip any `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else if x == 0.0 {
        "0".to_owned()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(s: &str, line: u64) -> Result<f64> {
    match s.trim() {
        "inf" | "Inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" | "-Inf" => Ok(f64::NEG_INFINITY),
        t => t.parse().map_err(|_| Error::Malformed {
            line,
            reason: format!("not a number: `{t}`"),
        }),
    }
}

pub(crate) fn parse_floats<'a>(
    fields: impl Iterator<Item = &'a str>,
    line: u64,
) -> Result<Vec<f64>> {
    fields.map(|f| parse_f64(f, line)).collect()
}

/// Square matrix with row/column labels (distance matrices).
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMatrix {
    pub labels: Vec<String>,
    pub values: Matrix,
}

impl LabeledMatrix {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Header `label,<ids...>`, then one row per id.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["label".to_owned()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (i, l) in self.labels.iter().enumerate() {
            let mut rec = vec![l.clone()];
            rec.extend(self.values.row(i).iter().map(|x| fmt_f64(*x)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_owned).collect();
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            labels.push(rec.get(0).unwrap_or("").to_owned());
            rows.push(parse_floats(rec.iter().skip(1), line)?);
        }
        if labels != header {
            return Err(Error::Malformed {
                line: 1,
                reason: "row labels do not match header".into(),
            });
        }
        Ok(LabeledMatrix {
            labels,
            values: Matrix::from_rows(&rows)?,
        })
    }
}

/// Grouping CSV with columns `Language_ID,Group`, kept in file order.
pub fn read_grouping<R: Read>(input: R) -> Result<Vec<(String, String)>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let (c_id, c_group) = (col("Language_ID")?, col("Group")?);
    let mut out = Vec::new();
    let mut seen = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = rec.get(c_id).unwrap_or("").trim().to_owned();
        let group = rec.get(c_group).unwrap_or("").trim().to_owned();
        if seen.insert(id.clone(), ()).is_some() {
            return Err(Error::DuplicateId(id));
        }
        out.push((id, group));
    }
    Ok(out)
}

pub fn read_file(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

/// Keeps file names portable: anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn file_tag(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}
