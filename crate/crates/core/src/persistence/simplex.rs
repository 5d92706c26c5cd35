use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// An abstract simplex: strictly increasing vertex indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex(Vec<usize>);

impl Simplex {
    /// Sorts the vertices; rejects empty or repeated vertex lists.
    pub fn new(mut vertices: Vec<usize>) -> Result<Self> {
        vertices.sort_unstable();
        if vertices.is_empty() {
            return Err(Error::InvalidFiltration("empty simplex".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidFiltration(format!(
                "repeated vertex in {vertices:?}"
            )));
        }
        Ok(Simplex(vertices))
    }

    pub(crate) fn from_sorted(vertices: Vec<usize>) -> Self {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        Simplex(vertices)
    }

    pub fn vertex(v: usize) -> Self {
        Simplex(vec![v])
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    /// Facets obtained by deleting one vertex each; empty for a vertex.
    pub fn boundary(&self) -> Vec<Simplex> {
        if self.0.len() < 2 {
            return Vec::new();
        }
        (0..self.0.len())
            .map(|skip| {
                Simplex(
                    self.0
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &v)| v)
                        .collect(),
                )
            })
            .collect()
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ">")
    }
}

pub fn boundary(simplex: &Simplex) -> Vec<Simplex> {
    simplex.boundary()
}

/// Boundary of an F2 chain: facets occurring an odd number of times, sorted.
pub fn chain_boundary(chain: &[Simplex]) -> Vec<Simplex> {
    let mut parity: BTreeMap<Simplex, bool> = BTreeMap::new();
    for s in chain {
        for f in s.boundary() {
            let e = parity.entry(f).or_insert(false);
            *e = !*e;
        }
    }
    parity
        .into_iter()
        .filter(|(_, odd)| *odd)
        .map(|(s, _)| s)
        .collect()
}
