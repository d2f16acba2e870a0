//! Stabilized asymptotic-preserving (APS) P1 finite elements for strongly
//! anisotropic diffusion on the unit square, with anisotropic a-posteriori
//! error indicators and metric-driven mesh adaptation.
//!
//! All numerical types are generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar for the common case.

// `!(x > 0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod error;
pub mod experiments;
pub mod estimate;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod scalar;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mesh64 = mesh::Mesh<f64>;
pub type Mesh32 = mesh::Mesh<f32>;
pub type MetricField64 = mesh::MetricField<f64>;
pub type ElementGeometry64 = mesh::ElementGeometry<f64>;
pub type Problem64 = problem::Problem<f64>;
pub type Problem32 = problem::Problem<f32>;
pub type ApsSolution64 = fem::ApsSolution<f64>;
pub type ApsSolution32 = fem::ApsSolution<f32>;
pub type IndicatorReport64 = estimate::IndicatorReport<f64>;
pub type Vec2f = linalg::Vec2<f64>;
pub type AdaptConfig64 = adapt::AdaptConfig<f64>;
