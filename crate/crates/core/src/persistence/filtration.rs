use std::collections::HashMap;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::simplex::Simplex;

/// Default cap on the number of simplices a Rips construction may produce.
pub const DEFAULT_SIMPLEX_BUDGET: usize = 20_000_000;

/// Filtration values are simplex diameters (longest edge), not radii.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleConvention {
    Diameter,
}

/// Simplices in filtration order, each with its filtration value.
#[derive(Clone, Debug)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    values: Vec<f64>,
    max_dim: usize,
    truncated: bool,
    index: HashMap<Simplex, usize>,
}

impl Filtration {
    fn assemble(entries: Vec<(Simplex, f64)>, max_dim: usize, truncated: bool) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (s, _))| (s.clone(), i))
            .collect();
        let (simplices, values) = entries.into_iter().unzip();
        Filtration {
            simplices,
            values,
            max_dim,
            truncated,
            index,
        }
    }

    /// Validates face closure and value monotonicity, then sorts by
    /// (value, dimension, vertices).
    pub fn from_simplices(entries: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        let mut sorted: Vec<(Simplex, f64)> = entries
            .into_iter()
            .map(|(v, t)| Ok((Simplex::new(v)?, t)))
            .collect::<Result<_>>()?;
        let mut values: HashMap<Simplex, f64> = HashMap::with_capacity(sorted.len());
        for (s, t) in &sorted {
            if !(t.is_finite() && *t >= 0.0) {
                return Err(Error::InvalidFiltration(format!(
                    "{s} has invalid value {t}"
                )));
            }
            if values.insert(s.clone(), *t).is_some() {
                return Err(Error::InvalidFiltration(format!("{s} listed twice")));
            }
        }
        for (s, t) in &sorted {
            for face in s.boundary() {
                match values.get(&face) {
                    None => {
                        return Err(Error::InvalidFiltration(format!(
                            "face {face} of {s} is missing"
                        )))
                    }
                    Some(ft) if ft > t => {
                        return Err(Error::InvalidFiltration(format!(
                            "face {face} enters at {ft}, after its coface {s} at {t}"
                        )))
                    }
                    _ => {}
                }
            }
        }
        sort_entries(&mut sorted);
        let max_dim = sorted.iter().map(|(s, _)| s.dim()).max().unwrap_or(0);
        Ok(Filtration::assemble(sorted, max_dim, false))
    }

    /// Keeps the given order after checking it is a valid filtration order:
    /// values non-decreasing and every face listed before its cofaces.
    pub fn from_ordered(entries: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        let mut seen: HashMap<Simplex, f64> = HashMap::with_capacity(entries.len());
        let mut out = Vec::with_capacity(entries.len());
        let mut last = f64::NEG_INFINITY;
        for (v, t) in entries {
            let s = Simplex::new(v)?;
            if !(t.is_finite() && t >= 0.0) || t < last {
                return Err(Error::InvalidFiltration(format!(
                    "{s} at {t} breaks value order"
                )));
            }
            last = t;
            for face in s.boundary() {
                if !seen.contains_key(&face) {
                    return Err(Error::InvalidFiltration(format!(
                        "face {face} of {s} is not listed before it"
                    )));
                }
            }
            if seen.insert(s.clone(), t).is_some() {
                return Err(Error::InvalidFiltration(format!("{s} listed twice")));
            }
            out.push((s, t));
        }
        let max_dim = out.iter().map(|(s, _)| s.dim()).max().unwrap_or(0);
        Ok(Filtration::assemble(out, max_dim, false))
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn simplex(&self, i: usize) -> &Simplex {
        &self.simplices[i]
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Simplex, f64)> {
        self.simplices.iter().zip(self.values.iter().copied())
    }

    pub fn index_of(&self, s: &Simplex) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Largest simplex dimension the complex was built to.
    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    /// True when the complex was cut at `max_dim` (Rips), so homology in
    /// dimension `max_dim` itself is incomplete.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn scale_convention(&self) -> ScaleConvention {
        ScaleConvention::Diameter
    }

    /// Filtration indices of the facets of simplex `i`, ascending.
    pub fn boundary_indices(&self, i: usize) -> Vec<usize> {
        let mut b: Vec<usize> = self.simplices[i]
            .boundary()
            .iter()
            .map(|f| self.index[f])
            .collect();
        b.sort_unstable();
        b
    }
}

fn sort_entries(entries: &mut [(Simplex, f64)]) {
    entries.sort_by(|(sa, ta), (sb, tb)| {
        ta.total_cmp(tb)
            .then(sa.dim().cmp(&sb.dim()))
            .then_with(|| sa.cmp(sb))
    });
}

/// Euclidean distance matrix of a cloud.
pub fn pairwise_distances(cloud: &PointCloud) -> Matrix {
    let pts = cloud.points();
    let n = pts.len();
    let mut dm = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = pts[i]
                .coords
                .iter()
                .zip(&pts[j].coords)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dm[(i, j)] = d;
            dm[(j, i)] = d;
        }
    }
    dm
}

/// Largest entry of a distance matrix (0 for a single point).
pub fn max_distance(dm: &Matrix) -> f64 {
    dm.as_slice().iter().copied().fold(0.0, f64::max)
}

pub fn rips_filtration(dm: &Matrix, max_dim: usize, max_scale: f64) -> Result<Filtration> {
    rips_filtration_with_budget(dm, max_dim, max_scale, DEFAULT_SIMPLEX_BUDGET)
}

/// Vietoris–Rips filtration: every vertex set of diameter at most
/// `max_scale` and dimension at most `max_dim`, valued by its diameter.
pub fn rips_filtration_with_budget(
    dm: &Matrix,
    max_dim: usize,
    max_scale: f64,
    budget: usize,
) -> Result<Filtration> {
    if !dm.is_square() {
        return Err(Error::invalid("distance matrix must be square"));
    }
    if !(max_scale > 0.0) {
        return Err(Error::invalid(format!(
            "max_scale must be positive, got {max_scale}"
        )));
    }
    if dm.as_slice().iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::invalid("distances must be finite and non-negative"));
    }
    let n = dm.rows();
    let upper: Vec<Vec<usize>> = (0..n)
        .map(|i| ((i + 1)..n).filter(|&j| dm[(i, j)] <= max_scale).collect())
        .collect();

    let mut entries: Vec<(Simplex, f64)> = Vec::new();
    let push = |entries: &mut Vec<(Simplex, f64)>, s: Simplex, t: f64| -> Result<()> {
        if entries.len() >= budget {
            return Err(Error::SimplexBudget {
                count: entries.len() + 1,
                budget,
            });
        }
        entries.push((s, t));
        Ok(())
    };

    // depth-first clique expansion
    let mut stack: Vec<(Vec<usize>, f64, Vec<usize>)> = Vec::new();
    for v in 0..n {
        push(&mut entries, Simplex::vertex(v), 0.0)?;
        if max_dim > 0 {
            stack.push((vec![v], 0.0, upper[v].clone()));
        }
        while let Some((verts, diam, candidates)) = stack.pop() {
            for (k, &c) in candidates.iter().enumerate() {
                let d = verts.iter().map(|&u| dm[(u, c)]).fold(diam, f64::max);
                let mut next = verts.clone();
                next.push(c);
                let dim = next.len() - 1;
                if dim < max_dim {
                    let further: Vec<usize> = candidates[k + 1..]
                        .iter()
                        .copied()
                        .filter(|&w| dm[(c, w)] <= max_scale)
                        .collect();
                    if !further.is_empty() {
                        stack.push((next.clone(), d, further));
                    }
                }
                push(&mut entries, Simplex::from_sorted(next), d)?;
            }
        }
    }
    sort_entries(&mut entries);
    Ok(Filtration::assemble(entries, max_dim, true))
}
