//! Adaptive sparse-grid discontinuous Galerkin engine.
//!
//! The crate provides the building blocks of a multiresolution DG solver for
//! moderately high-dimensional PDEs on [0, 1]^d:
//!
//! * [`basis1d`] — orthonormal (Alpert) and interpolatory (Lagrange/Hermite)
//!   multiwavelet families in 1D;
//! * [`opmat1d`] — precomputed 1D volume and interface interaction matrices;
//! * [`grid`] — multi-dimensional element keys, child/parent relations and
//!   downward-closed index sets;
//! * [`solution`] — the DG solution store with separable and adaptive
//!   initialization, evaluation, and coefficient-space error measurement;
//! * [`adapt`] — hierarchical-indicator refinement and coarsening;
//! * [`fasttransform`] — dimension-by-dimension matrix products over
//!   downward-closed sets with lower/upper level splitting;
//! * [`assembly`] — global sparse operators for linear DG forms;
//! * [`nonlinear`] — interpolation of nonlinear fluxes and fast residual
//!   accumulation;
//! * [`timeint`] — explicit Runge-Kutta and second-order-system integrators;
//! * [`pde`] — ready-made drivers: linear transport, Hamilton-Jacobi, and
//!   heterogeneous-media wave propagation.
//!
//! All numerics are generic over the scalar type through [`real::Real`]
//! (`f32` or `f64`); the aliases below fix `f64`, which is what the CLI and
//! the drivers use.

pub mod adapt;
pub mod assembly;
pub mod basis1d;
pub mod error;
pub mod fasttransform;
pub mod grid;
pub mod linalg;
pub mod nonlinear;
pub mod opmat1d;
pub mod pde;
pub mod poly;
pub mod quadrature;
pub mod real;
pub mod solution;
pub mod timeint;

pub use error::{Error, Result};
pub use real::Real;

/// Default scalar for the drivers and the CLI.
pub type DefaultScalar = f64;

pub type Alpert = basis1d::AlpertFamily<DefaultScalar>;
pub type Interp = basis1d::InterpolatoryFamily<DefaultScalar>;
pub type OpMatrix = opmat1d::OperatorMatrix1D<DefaultScalar>;
pub type Solution = solution::DGSolution<DefaultScalar>;
pub type Operator = assembly::GlobalOperator<DefaultScalar>;
pub type Transform = fasttransform::TransformMatrix<DefaultScalar>;
pub type Field = fasttransform::HierField<DefaultScalar>;
