//! Capacities of closed sets on the boundary of the rooted dyadic tree, and
//! of the matching condensers in the closed unit disc.

pub mod boundary_set;
pub mod builder;
pub mod capacity;
pub mod disc;
pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod oracle;
pub mod tree;

pub use boundary_set::{BoundarySet, Coverage, Leaf};
pub use capacity::{
    capacity, capacity_exact, condenser_capacity, condenser_capacity_exact, energy,
    equilibrium_measure, extremal, CapacityTable, EquilibriumMeasure, FluxTable,
};
pub use builder::{
    bound_r, equal_split, lower_bound, lower_bound_delta, psi, psi_iterate, set_of_capacity,
    SplitFamily,
};
pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use oracle::brute_force_capacity;
pub use tree::VertexId;
