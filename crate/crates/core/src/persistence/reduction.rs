//! F2 column reduction of the filtered boundary matrix.

use crate::error::{Error, Result};

use super::filtration::Filtration;
use super::simplex::Simplex;

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReductionOptions {
    /// Reduce from the top dimension down and zero out columns of simplices
    /// already known to be paired as births.
    pub clearing: bool,
    /// Keep the column operations (`R = DV`) so essential classes get
    /// representative cycles.
    pub track_cycles: bool,
}

/// Result of reducing a filtration's boundary matrix.
#[derive(Debug)]
pub struct Reduction<'f> {
    filtration: &'f Filtration,
    columns: Vec<Vec<usize>>,
    cycles: Option<Vec<Vec<usize>>>,
    processed: Vec<bool>,
    pairs: Vec<(usize, usize)>,
    essential: Vec<usize>,
}

pub fn reduce(filtration: &Filtration) -> Reduction<'_> {
    reduce_with(filtration, ReductionOptions::default())
}

pub fn reduce_with(filtration: &Filtration, options: ReductionOptions) -> Reduction<'_> {
    let n = filtration.len();
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut cycles: Option<Vec<Vec<usize>>> = options
        .track_cycles
        .then(|| (0..n).map(|j| vec![j]).collect());
    let mut pivot_col = vec![NONE; n];
    let mut processed = vec![false; n];

    let mut by_dim: Vec<Vec<usize>> = vec![Vec::new(); filtration.max_dim() + 1];
    for (j, (s, _)) in filtration.iter().enumerate() {
        by_dim[s.dim()].push(j);
    }

    let reduce_column = |j: usize,
                         columns: &mut Vec<Vec<usize>>,
                         cycles: &mut Option<Vec<Vec<usize>>>,
                         pivot_col: &mut Vec<usize>|
     -> Option<usize> {
        let mut col = filtration.boundary_indices(j);
        while let Some(&low) = col.last() {
            let k = pivot_col[low];
            if k == NONE {
                break;
            }
            col = symmetric_difference(&col, &columns[k]);
            if let Some(v) = cycles.as_mut() {
                let merged = symmetric_difference(&v[j], &v[k]);
                v[j] = merged;
            }
        }
        let low = col.last().copied();
        if let Some(low) = low {
            pivot_col[low] = j;
        }
        columns[j] = col;
        low
    };

    if options.clearing {
        let mut cleared = vec![false; n];
        for dim in (0..by_dim.len()).rev() {
            for &j in &by_dim[dim] {
                processed[j] = true;
                if cleared[j] {
                    continue;
                }
                if let Some(low) = reduce_column(j, &mut columns, &mut cycles, &mut pivot_col) {
                    cleared[low] = true;
                }
            }
        }
    } else {
        let top = by_dim.len() - 1;
        // unpaired positive simplices one dimension below the column being reduced
        let mut open_below = 0usize;
        for dim in 0..by_dim.len() {
            let early_stop = filtration.is_truncated() && dim == top && dim > 0;
            let mut positives = 0usize;
            for &j in &by_dim[dim] {
                if early_stop && open_below == 0 {
                    break;
                }
                processed[j] = true;
                match reduce_column(j, &mut columns, &mut cycles, &mut pivot_col) {
                    Some(_) => open_below -= 1,
                    None => positives += 1,
                }
            }
            open_below = positives;
        }
    }

    let mut is_birth = vec![false; n];
    let mut pairs = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        if let Some(&low) = col.last() {
            is_birth[low] = true;
            pairs.push((low, j));
        }
    }
    let essential = (0..n)
        .filter(|&j| processed[j] && columns[j].is_empty() && !is_birth[j])
        .collect();

    Reduction {
        filtration,
        columns,
        cycles,
        processed,
        pairs,
        essential,
    }
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl<'f> Reduction<'f> {
    pub fn filtration(&self) -> &'f Filtration {
        self.filtration
    }

    /// `(birth index, death index)` pairs, ordered by death index.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Indices of simplices creating classes that never die.
    pub fn essential(&self) -> &[usize] {
        &self.essential
    }

    /// Reduced column `j` (filtration indices, ascending).
    pub fn column(&self, j: usize) -> &[usize] {
        &self.columns[j]
    }

    pub fn low(&self, j: usize) -> Option<usize> {
        self.columns[j].last().copied()
    }

    pub fn was_processed(&self, j: usize) -> bool {
        self.processed[j]
    }

    /// The reduced column of a death simplex as a chain of simplices: a cycle
    /// whose lowest simplex is the paired birth.
    pub fn death_cycle(&self, death: usize) -> Result<Vec<Simplex>> {
        if self.columns[death].is_empty() {
            return Err(Error::EssentialPair(format!(
                "simplex {} kills no class",
                self.filtration.simplex(death)
            )));
        }
        Ok(self.chain(&self.columns[death]))
    }

    /// Cycle created by an unpaired simplex; needs `track_cycles`.
    pub fn essential_cycle(&self, birth: usize) -> Result<Vec<Simplex>> {
        if !self.essential.contains(&birth) {
            return Err(Error::invalid(format!(
                "simplex {} does not create an essential class",
                self.filtration.simplex(birth)
            )));
        }
        let cycles = self.cycles.as_ref().ok_or_else(|| {
            Error::invalid("essential representatives need ReductionOptions::track_cycles")
        })?;
        Ok(self.chain(&cycles[birth]))
    }

    fn chain(&self, indices: &[usize]) -> Vec<Simplex> {
        indices
            .iter()
            .map(|&i| self.filtration.simplex(i).clone())
            .collect()
    }
}
