use std::collections::BTreeSet;
use std::io::Read;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64};

use super::filtration::Filtration;
use super::reduction::{reduce, Reduction};
use super::simplex::{chain_boundary, Simplex};

#[derive(Clone, Debug, PartialEq)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
    /// Filtration indices of the creating and killing simplices, when known.
    pub birth_simplex: Option<usize>,
    pub death_simplex: Option<usize>,
}

impl PersistencePair {
    pub fn new(dim: usize, birth: f64, death: f64) -> Self {
        PersistencePair {
            dim,
            birth,
            death,
            birth_simplex: None,
            death_simplex: None,
        }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }
}

/// Multiset of (dimension, birth, death) triples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PersistenceDiagram {
    pub pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn new(pairs: Vec<PersistencePair>) -> Self {
        PersistenceDiagram { pairs }
    }

    /// Dimension-`dim` points given as `(birth, death)`.
    pub fn from_points(dim: usize, points: &[(f64, f64)]) -> Self {
        PersistenceDiagram {
            pairs: points
                .iter()
                .map(|&(b, d)| PersistencePair::new(dim, b, d))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.pairs.iter().map(|p| (p.birth, p.death)).collect()
    }

    pub fn dimension(&self, dim: usize) -> PersistenceDiagram {
        PersistenceDiagram {
            pairs: self
                .pairs
                .iter()
                .filter(|p| p.dim == dim)
                .cloned()
                .collect(),
        }
    }

    pub fn dims(&self) -> BTreeSet<usize> {
        self.pairs.iter().map(|p| p.dim).collect()
    }

    /// Drops essential classes.
    pub fn finite(&self) -> PersistenceDiagram {
        PersistenceDiagram {
            pairs: self
                .pairs
                .iter()
                .filter(|p| !p.is_essential())
                .cloned()
                .collect(),
        }
    }

    /// Replaces infinite deaths by `cap`; classes born at or after `cap` are dropped.
    pub fn capped(&self, cap: f64) -> PersistenceDiagram {
        PersistenceDiagram {
            pairs: self
                .pairs
                .iter()
                .filter_map(|p| {
                    if !p.is_essential() {
                        Some(p.clone())
                    } else if p.birth < cap {
                        Some(PersistencePair {
                            death: cap,
                            ..p.clone()
                        })
                    } else {
                        None
                    }
                })
                .collect(),
        }
    }

    /// The same diagram in radius units (all values halved).
    pub fn to_radius_scale(&self) -> PersistenceDiagram {
        PersistenceDiagram {
            pairs: self
                .pairs
                .iter()
                .map(|p| PersistencePair {
                    birth: p.birth / 2.0,
                    death: p.death / 2.0,
                    ..p.clone()
                })
                .collect(),
        }
    }

    /// Pairs sorted by decreasing persistence (ties by birth).
    pub fn by_persistence(&self) -> Vec<&PersistencePair> {
        let mut v: Vec<&PersistencePair> = self.pairs.iter().collect();
        v.sort_by(|a, b| {
            b.persistence()
                .total_cmp(&a.persistence())
                .then(a.birth.total_cmp(&b.birth))
        });
        v
    }

    /// `diagram_<language>.csv`: `dim,birth,death` with `inf` for essentials.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dim", "birth", "death"])?;
        for p in &self.pairs {
            w.write_record([p.dim.to_string(), fmt_f64(p.birth), fmt_f64(p.death)])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut pairs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let dim = rec
                .get(0)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| Error::Malformed {
                    line,
                    reason: "bad dim".into(),
                })?;
            let birth = parse_f64(rec.get(1).unwrap_or(""), line)?;
            let death = parse_f64(rec.get(2).unwrap_or(""), line)?;
            pairs.push(PersistencePair::new(dim, birth, death));
        }
        Ok(PersistenceDiagram { pairs })
    }
}

fn sort_pairs(pairs: &mut [PersistencePair]) {
    pairs.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.total_cmp(&b.birth))
            .then(a.death.total_cmp(&b.death))
    });
}

fn check_dim(filtration: &Filtration, p: usize) -> Result<()> {
    if filtration.is_truncated() && p + 1 > filtration.max_dim() {
        return Err(Error::HomologyDimTooHigh {
            dim: p,
            needed: p + 1,
        });
    }
    Ok(())
}

impl Reduction<'_> {
    /// Dimension-`p` pairs with positive persistence.
    pub fn diagram(&self, p: usize) -> Result<PersistenceDiagram> {
        let f = self.filtration();
        check_dim(f, p)?;
        let mut pairs: Vec<PersistencePair> = self
            .pairs()
            .iter()
            .filter(|&&(b, _)| f.simplex(b).dim() == p)
            .filter(|&&(b, d)| f.value(d) > f.value(b))
            .map(|&(b, d)| PersistencePair {
                dim: p,
                birth: f.value(b),
                death: f.value(d),
                birth_simplex: Some(b),
                death_simplex: Some(d),
            })
            .collect();
        pairs.extend(
            self.essential()
                .iter()
                .filter(|&&b| f.simplex(b).dim() == p)
                .map(|&b| PersistencePair {
                    dim: p,
                    birth: f.value(b),
                    death: f64::INFINITY,
                    birth_simplex: Some(b),
                    death_simplex: None,
                }),
        );
        sort_pairs(&mut pairs);
        Ok(PersistenceDiagram { pairs })
    }

    /// Pairs of every dimension `0..=max_p`.
    pub fn diagrams_through(&self, max_p: usize) -> Result<PersistenceDiagram> {
        let mut pairs = Vec::new();
        for p in 0..=max_p {
            pairs.extend(self.diagram(p)?.pairs);
        }
        Ok(PersistenceDiagram { pairs })
    }
}

/// Reduces `filtration` and returns its dimension-`p` diagram.
pub fn diagram(filtration: &Filtration, p: usize) -> Result<PersistenceDiagram> {
    check_dim(filtration, p)?;
    reduce(filtration).diagram(p)
}

/// Number of classes alive at `t`: `#{(b, d) : b ≤ t < d}`.
pub fn betti_at(diagram: &PersistenceDiagram, t: f64) -> usize {
    diagram
        .pairs
        .iter()
        .filter(|p| p.birth <= t && t < p.death)
        .count()
}

/// A representative cycle and the vertices it touches.
#[derive(Clone, Debug, PartialEq)]
pub struct Cycle {
    pub simplices: Vec<Simplex>,
    pub vertices: Vec<usize>,
}

impl Cycle {
    fn new(mut simplices: Vec<Simplex>) -> Self {
        simplices.sort();
        let vertices: BTreeSet<usize> = simplices
            .iter()
            .flat_map(|s| s.vertices().iter().copied())
            .collect();
        Cycle {
            simplices,
            vertices: vertices.into_iter().collect(),
        }
    }

    /// Vertex labels in the source cloud.
    pub fn labels(&self, cloud: &PointCloud) -> Vec<String> {
        self.vertices
            .iter()
            .map(|&v| cloud.label(v).to_owned())
            .collect()
    }

    pub fn is_cycle(&self) -> bool {
        chain_boundary(&self.simplices).is_empty()
    }
}

/// The reduced column of the pair's death simplex, a cycle homologous to the
/// class that dies there.
pub fn representative_cycle(reduction: &Reduction<'_>, pair: &PersistencePair) -> Result<Cycle> {
    if pair.is_essential() {
        return Err(Error::EssentialPair(
            "essential class; use essential_representative".into(),
        ));
    }
    let death = pair
        .death_simplex
        .ok_or_else(|| Error::invalid("pair carries no simplex indices"))?;
    Ok(Cycle::new(reduction.death_cycle(death)?))
}

/// Representative of an essential class (needs a reduction with cycle tracking).
pub fn essential_representative(
    reduction: &Reduction<'_>,
    pair: &PersistencePair,
) -> Result<Cycle> {
    let birth = pair
        .birth_simplex
        .ok_or_else(|| Error::invalid("pair carries no simplex indices"))?;
    Ok(Cycle::new(reduction.essential_cycle(birth)?))
}
