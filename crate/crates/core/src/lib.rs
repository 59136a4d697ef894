//! Exact quantum speed limits for pure-state unitary dynamics.
//!
//! The crate splits a Hamiltonian into its classical and non-classical parts
//! relative to a basis, evolves states under constant or time-dependent
//! Hamiltonians, evaluates the exact and improved speed-limit times along a
//! trajectory, and searches for time-optimal Hamiltonians.
//!
//! ```
//! use qsl_core::prelude::*;
//!
//! let h = pauli::axis([0.6, 0.0, 0.8]);
//! let schedule = HamiltonianSchedule::constant(h).unwrap();
//! let psi0 = PureState::basis(2, 0).unwrap();
//! let traj = evolve(&schedule, &psi0, 1.0, 400, PhysicalConstants::default()).unwrap();
//! let basis = complete_basis_from(&psi0);
//! let t = exact_time_ddim(&traj, &basis).unwrap();
//! assert!((t - 1.0).abs() < 1e-6);
//! ```

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod decomposition;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod optimizer;
pub mod random;

pub use error::{QslError, Result};

pub mod prelude {
    pub use crate::bounds::*;
    pub use crate::decomposition::*;
    pub use crate::error::{QslError, Result};
    pub use crate::evolution::*;
    pub use crate::linalg::*;
    pub use crate::optimizer::*;
    pub use crate::random::*;
}
