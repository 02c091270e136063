//! Decision procedures, circuit compilers and a spectral oracle for
//! clock-based quantum satisfiability problems.
//!
//! * [`model`]: instances, clauses, roles and clock components.
//! * [`clauses`]: gate matrices and clause projectors.
//! * [`analyzer`]: structural rejection rules and chain extraction.
//! * [`deciders`]: statevector simulation and the randomized subroutines.
//! * [`compiler`]: circuits to instances, and history states.
//! * [`combinators`]: direct products and sums of instances.
//! * [`qubitize`]: the qudit-to-qubit mapping and its inverse.
//! * [`oracle`]: exact null spaces and spectra of small instances.
//!
//! ```
//! use qsat_core::{analyze, decide, Clause, Gate, Instance, Variant};
//!
//! // Init on c₀, one Hadamard step, Out on c₁: |0⟩ ends in |+⟩.
//! let inst = Instance::new(
//!     Variant::Slct,
//!     3,
//!     vec![Clause::init(0, 1), Clause::prop(Gate::H, &[0], 1, 2), Clause::out(0, 2)],
//! )?;
//! assert_eq!(analyze(&inst, None)?.tasks().len(), 1);
//! assert!(!decide(&inst, None, 32, 0)?.accept);
//! # Ok::<(), qsat_core::Error>(())
//! ```

pub mod analyzer;
pub mod clauses;
pub mod combinators;
pub mod compiler;
pub mod deciders;
pub mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod qubitize;

pub use analyzer::{analyze, mark_undefined, Evidence, Rule, StructuralVerdict, Tacc};
pub use combinators::{decide_combo, direct_product, direct_sum, project, ComboInstance, ComboOp, Side};
pub use compiler::{compile, compile_truncated, history_state, parse_circuit, Circuit, CircuitKind, HistoryKind};
pub use deciders::{decide, simulate, simprop_outcome_prob, Decision};
pub use error::{Error, Result};
pub use model::{assign_roles, components, export_dot, parse_instance, serialize, Clause, Gate, Instance, Role, Variant};
pub use oracle::{LocalHamiltonian, OracleConfig, SpectralReport};
pub use qubitize::{check_consistency, dequbitize, qubitize_instance, Padding};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/instances.md")]
mod book_instances {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/oracle.md")]
mod book_oracle {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/deciding.md")]
mod book_deciding {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/compiling.md")]
mod book_compiling {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/combinators.md")]
mod book_combinators {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/qubitization.md")]
mod book_qubitization {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
