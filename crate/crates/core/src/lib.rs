//! Numerical machinery for the Dirichlet problem of the complex Monge-Ampere
//! equation `det[u_ij] = h` on pseudoconvex model domains in C^1 and C^2.
//!
//! The crate is organized around an index-function calculus (`index`): a scalar
//! gauge `f` describing boundary geometry, the derived gauge `g` with
//! `1/g(t) = ∫_t^∞ da/(a f(a))`, and the modulus `ω(δ) = g(δ^{-1/η})^{-2}`.
//! On top of it sit concrete domains and peak functions (`geometry`), discrete
//! complex Hessians and determinant inequalities (`operator`), plurisubharmonic
//! barrier and defining-function constructions (`barriers`), a monotone
//! Gauss-Seidel envelope solver (`solver`), and a Holder-modulus estimation lab
//! (`regularity`). `verification` bundles the property suites into
//! machine-readable verdicts.
//!
//! All values are immutable after construction and safe to read concurrently;
//! every randomized routine takes an explicit seed and is bit-reproducible.

pub mod barriers;
pub mod error;
pub mod field;
pub mod geom;
pub mod geometry;
pub mod index;
pub mod operator;
pub mod quadrature;
pub mod regularity;
pub mod solver;
pub mod verification;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use geom::Point;
pub use geometry::{BoundaryMesh, DomainCatalog, DomainSpec, Grid, NodeClass, PeakFamily};
pub use index::{GIndex, IndexFunction, ModulusOmega};
pub use operator::HermitianPair;
pub use solver::{BoundaryData, Density, ProblemSpec, SolveConfig, SolveReport};
