//! Hamiltonian forms and order reduction of smooth unconstrained optimal
//! control systems.
//!
//! The crate is organized bottom-up:
//!
//! * [`expr`] exact symbolic expressions (parsing, canonical forms, calculus,
//!   zero tests, linear solving, Jacobian ranks);
//! * [`control`] Lagrangian systems and the Pontryagin pipeline that turns them
//!   into Hamiltonian systems;
//! * [`symplectic`] Poisson brackets, Lie derivatives and 1-form utilities;
//! * [`factorization`] verification and construction of factor systems;
//! * [`numeric`] sampling and trajectory-based cross-checks;
//! * [`format`] the line-oriented `.ocs` system file format.

pub mod expr;
pub mod control;
pub mod numeric;
pub mod symplectic;
pub mod factorization;
pub mod format;
