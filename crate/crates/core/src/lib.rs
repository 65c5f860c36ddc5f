//! Hamiltonian mechanics on the standard Cliffordian Kähler manifold `R^{8n}`.
//!
//! The three almost complex structures `J1`, `J2`, `J3` act on the eight
//! coordinate blocks `x_{bn+i}` as signed permutations. From each one the
//! crate derives the Liouville form `λ = J*(ω)` and the symplectic form
//! `Φ = -dλ` exactly, solves `i_X Φ = dH` for the Hamiltonian vector field,
//! and integrates the resulting flow.
//!
//! ```
//! use cliffham::{hamiltonian, structures::{StateVector, StructureId}};
//!
//! let h = hamiltonian::parse("0.5*(x1^2 + x2^2)", 1).unwrap();
//! let x = StateVector::from_vec(1, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
//! let field = hamiltonian::hamiltonian_field(StructureId::J1, &h, &x).unwrap();
//! assert_eq!(field.components()[1], 1.0);
//! ```

pub mod cli;
pub mod config;
pub mod corpus;
pub mod dynamics;
pub mod error;
pub mod forms;
pub mod hamiltonian;
pub mod plot;
pub mod reference;
pub mod structures;
pub mod verify;

pub use error::{Error, Result};
