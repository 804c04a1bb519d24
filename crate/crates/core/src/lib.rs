//! Stochastic Galerkin solvers for steady advection-diffusion with a random
//! diffusivity.
//!
//! The pipeline runs from a polynomial chaos basis ([`pc_basis`]) and a
//! Karhunen-Loeve or lognormal description of the diffusivity
//! ([`random_field`]), through bilinear finite elements ([`fem2d`]), to the
//! coupled Galerkin system ([`sg_operator`]). That system is solved with
//! preconditioned GMRES ([`krylov`], [`preconditioners`]) or with
//! mean-splitting relaxation ([`relaxation`]). [`bench`] wires it together
//! for parameter studies.
//!
//! ```
//! use sgkit::bench::{run_single, ExperimentConfig, Method};
//!
//! let cfg = ExperimentConfig {
//!     dim: 2,
//!     order: 2,
//!     mesh: (8, 8),
//!     methods: vec![Method::GaussSeidelSolver, "AGS".parse().unwrap()],
//!     ..Default::default()
//! };
//! let row = run_single(&cfg).unwrap();
//! assert_eq!(row.n_blocks, 6);
//! assert!(row.methods.iter().all(|m| m.rel_diff < 1e-10));
//! ```

pub mod bench;
pub mod error;
pub mod fem2d;
pub mod krylov;
pub mod pc_basis;
pub mod preconditioners;
pub mod random_field;
pub mod relaxation;
pub mod sg_operator;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/basis.md")]
    mod basis {}
    #[doc = include_str!("../../../book/src/random_fields.md")]
    mod random_fields {}
    #[doc = include_str!("../../../book/src/fem.md")]
    mod fem {}
    #[doc = include_str!("../../../book/src/operator.md")]
    mod operator {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

pub use error::{Result, SgError};
pub use krylov::{gmres, GmresConfig, LinearOperator, MeanInverse, MeanSolver, SolveReport};
pub use pc_basis::{Family, MultiIndexBasis, TensorMode, TripleProductTensor};
pub use preconditioners::{PrecondKind, Preconditioner};
pub use sg_operator::{BlockVector, SGOperator};
