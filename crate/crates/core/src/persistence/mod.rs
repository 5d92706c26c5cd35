//! Vietoris–Rips filtrations and persistent homology over F2.
//!
//! Filtration values follow the diameter convention: a simplex enters at the
//! length of its longest edge. Diagrams in the radius convention (`diam ≤ 2r`)
//! are obtained with [`PersistenceDiagram::to_radius_scale`].

mod diagram;
mod filtration;
mod reduction;
mod simplex;

pub use diagram::{
    betti_at, diagram, essential_representative, representative_cycle, Cycle, PersistenceDiagram,
    PersistencePair,
};
pub use filtration::{
    max_distance, pairwise_distances, rips_filtration, rips_filtration_with_budget, Filtration,
    ScaleConvention, DEFAULT_SIMPLEX_BUDGET,
};
pub use reduction::{reduce, reduce_with, Reduction, ReductionOptions};
pub use simplex::{boundary, chain_boundary, Simplex};
