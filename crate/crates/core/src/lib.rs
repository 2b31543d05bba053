//! Recover an explicit conjugator for an automorphism of the full matrix
//! algebra `M_n(K)` over `K = Q` or `K = GF(p)`.
//!
//! Given only the two images `H = phi(E_{n,1})` and `G = phi(S)` (with `S`
//! the upper shift matrix), [`skolem_noether::build_conjugator`] assembles an
//! invertible `A` with `phi(X) = A X A^-1` for all `X`. All arithmetic is
//! exact.
//!
//! ```
//! use skolem::{AutomorphismOracle, FieldSpec, Matrix};
//! use skolem::skolem_noether::{build_conjugator, scalar_relation};
//!
//! let q = FieldSpec::Rationals;
//! let b = Matrix::from_i64_rows(q, &[&[1, 2], &[3, 5]]).unwrap();
//! let phi = AutomorphismOracle::conjugation_by(b.clone()).unwrap();
//! let (h, g) = phi.query_generators().unwrap();
//! let w = build_conjugator(&h, &g, 2).unwrap();
//! assert!(scalar_relation(w.conjugator(), &b).unwrap().is_some());
//! assert_eq!(phi.query_count(), 2);
//! ```

pub mod automorphism;
pub mod cli;
pub mod error;
pub mod field;
pub mod fuzz;
pub mod matrix;
pub mod skolem_noether;

pub use automorphism::{AutomorphismOracle, ValidationReport};
pub use error::{Error, Result};
pub use field::{FieldElement, FieldSpec};
pub use matrix::{ColumnVector, Matrix};
pub use skolem_noether::{ConjugationWitness, Outcome, RecoveryReport};
