//! Laplace eigenvalues of Radon measures on triangulated surfaces.
//!
//! A surface is a [`mesh::TriangleMesh`]; its conformal structure enters only
//! through the cotangent stiffness matrix. A "metric" is a
//! [`measure::DiscreteMeasure`] on the vertices, possibly singular. On top of
//! that the crate offers
//!
//! - [`spectrum`]: the generalized eigenproblem `K u = λ M u` with singular `M`,
//! - [`variation`]: one-sided derivatives along conformal deformations,
//!   extremality certificates and separating directions,
//! - [`capacity`]: capacities, fundamental tones and isocapacity constants,
//! - [`bounds`]: Hersch balancing and the disjoint-annuli capacitor bound,
//! - [`optimize`]: maximization of `λ₁·μ(M)` over density-capped measures,
//! - [`cli`]: reproducible reports, as used by the `confspec` binary.
//!
//! The `examples/` directory has one runnable program per capability.

pub mod bounds;
pub mod capacity;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod measure;
pub mod mesh;
pub mod optimize;
pub mod spectrum;
pub mod variation;

pub use error::{Error, Result};
pub use measure::{DeformationFamily, DiscreteMeasure, SupportKind};
pub use mesh::{Region, RegionKind, StiffnessMatrix, TriangleMesh};
pub use spectrum::{Eigenspace, MassMatrix, SpectralResult};
