//! Gauss curvature measures of convex polytopes in hyperbolic space
//! `H^{m+1}` (m = 1, 2) and the inverse problem: recover a polytope from a
//! discrete measure on `S^m` by maximizing a nonlinear Kantorovich
//! functional.
//!
//! The core is generic over a [`scalar::Scalar`] (any `num_traits::Float`);
//! the aliases below fix it to `f64`.
//!
//! ```
//! use hypcurv::{build_grid, solve, Polytope, SolverConfig};
//!
//! let square = Polytope::regular_polygon(4, 1.0).unwrap();
//! let grid = build_grid(1, 4).unwrap();
//! let mu = square.curvature_measure_integral(&grid).unwrap();
//! let report = solve(&mu, &SolverConfig { grid_level: 4, ..Default::default() }).unwrap();
//! let r = report.body.unwrap().radii()[0];
//! assert!((r - 1.0).abs() < 1e-6);
//! ```

pub mod cells;
pub mod convex;
pub mod crofton;
pub mod ctransform;
pub mod error;
pub mod functions;
pub mod geometry;
pub mod hull;
pub mod io;
pub mod measures;
pub mod quadrature;
pub mod scalar;
pub mod solver;

pub use crate::convex::HyperbolicPolytope;
pub use crate::crofton::{crofton_compare, CroftonConfig, CroftonReport};
pub use crate::ctransform::{
    c_transform, conjugacy_diagnostics, double_convexify, PotentialVector,
};
pub use crate::error::{Error, Result};
pub use crate::measures::{check_conditions, CheckMode, ConditionReport, DiscreteMeasure};
pub use crate::quadrature::{build_grid, QuadratureGrid};
pub use crate::solver::{
    extract_body, functional_k, gradient_k, solve, Discretization, SolveReport, SolverConfig,
};

pub type Polytope = HyperbolicPolytope<f64>;
pub type Measure = DiscreteMeasure<f64>;
pub type Potential = PotentialVector<f64>;
pub type Grid = QuadratureGrid<f64>;
pub type Direction = geometry::UnitVector<f64>;
pub type Report = SolveReport<f64>;
