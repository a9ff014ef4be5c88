//! Singular plane measures supported on curves and point clouds, the spiral
//! vortex-sheet families that generate them, and numerical diagnostics for
//! membership in H^{-1}(R^2): Riesz t-energies by three independent routes,
//! truncated negative Sobolev norms, Morrey norms, ball-mass scaling and
//! concentration laws, plus a blob-regularized Birkhoff-Rott solver for
//! sheet evolution.

pub mod birkhoff_rott;
pub mod concentration;
pub mod energies;
pub mod geom;
pub mod grid;
pub mod io;
pub mod measure;
pub mod spirals;

pub use geom::PlanePoint;
pub use grid::LogGrid;
pub use measure::{AtomicMeasure, CurveMeasure, Measure, SignedDecomposition};
