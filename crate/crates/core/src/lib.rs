//! Simulator for adiabatic-passage entanglement generation in a pair of
//! optical cavities linked by a fiber.
//!
//! The library models driven multilevel atoms placed in polarization-degenerate
//! cavities, with the cavity and fiber couplings far stronger than the classical
//! drives. That separation of scales pins the dynamics inside the degenerate
//! eigenspaces of the strong-coupling Hamiltonian, and a pair of delayed pulse
//! envelopes then steers the population adiabatically along a dark state of the
//! projected drive. The crates' modules follow the pipeline:
//!
//! - [`hilbert`]: basis-state labels and reachable-set enumeration.
//! - [`model`]: level schemes, pulse envelopes, Hamiltonian and jump-operator
//!   assembly for each scenario family.
//! - [`zeno`]: eigenprojection clustering of the strong-coupling Hamiltonian
//!   and the effective drive it induces on the degenerate subspace.
//! - [`dynamics`]: fixed-step RK4 propagators for state vectors and density
//!   matrices, plus a dense matrix-exponential reference oracle.
//! - [`metrics`]: fidelities, populations, leakage.
//! - [`protocol`]: the passage protocols (single pair, sequential N-atom chain,
//!   multi-polarization high-dimensional variant) and their target states.
//!
//! All numerics are generic over the real scalar type via [`scalar::Scalar`];
//! the crate root re-exports `f64` aliases for the common types.

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod protocol;
pub mod scalar;
pub mod zeno;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Complex amplitude over a generic real scalar.
pub type Cx<S> = num_complex::Complex<S>;

/// Double-precision complex amplitude.
pub type C64 = num_complex::Complex<f64>;

/// Double-precision sparse operator.
pub type SparseOp64 = linalg::SparseOp<f64>;

/// Double-precision dense square matrix.
pub type CMat64 = linalg::CMat<f64>;

/// Double-precision scenario description.
pub type ScenarioSpec64 = model::ScenarioSpec<f64>;

/// Double-precision trajectory record.
pub type Trajectory64 = dynamics::Trajectory<f64>;
