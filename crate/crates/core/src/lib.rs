//! Symmetric cones, tube domains and weighted Bergman spaces.
//!
//! The crate covers the half-line, the Lorentz cones and the cones of real
//! positive definite matrices. It provides Jordan-algebra primitives, the
//! invariant geometry of the cone, weighted Bergman kernels on the tube over
//! the cone, constructive lattices, mixed-norm quadrature, sampling and
//! atomic reconstruction experiments, and the parameter calculus of the
//! boundedness and interpolation results.

pub mod atoms;
pub mod cone;
pub mod error;
pub mod interp;
pub mod jordan;
pub mod lattice;
pub mod quad;
pub mod spaces;
pub mod tube;

pub use cone::{ConeIndexData, ConeTransform, SpectralParam};
pub use error::{Error, Result};
pub use jordan::{AlgebraKind, Element, Spectrum};
pub use lattice::{ConeLattice, TubeLattice, WhitneyReport};
pub use quad::{NormResult, QuadratureConfig};
pub use atoms::{CoeffArray, FrameSpec, WeightMode};
pub use spaces::AtomCombo;
pub use tube::{KernelSpec, TubePoint};
