//! Benchmark PDE drivers: linear transport, Hamilton-Jacobi, and
//! heterogeneous-media wave propagation on [0, 1]^d.

pub mod hj;
pub mod transport;
pub mod wave;

use crate::basis1d::InterpolatoryFamily;
use crate::error::Result;
use crate::fasttransform::{DofFn, TransformSet};
use crate::real::Real;
use crate::solution::{DGSolution, InterpParams};

/// What a driver reports back for the convergence and timing tables.
#[derive(Debug, Clone)]
pub struct RunStats<R> {
    pub dof: usize,
    pub l2_error: R,
    pub steps: usize,
    /// Mean wall-clock seconds per time step over the evolution loop.
    pub seconds_per_step: f64,
    /// DOF after each step (adaptive drivers only).
    pub dof_history: Vec<usize>,
}

/// Interpolates a known function onto a fresh single-variable solution, the
/// way the drivers measure errors: adaptive interpolation at a tight
/// threshold on the same level cap, no coarsening.
pub fn reference_solution<R: Real>(
    dim: usize,
    alpt_degree: usize,
    n_max: usize,
    sparse: bool,
    interp: &InterpolatoryFamily<R>,
    tf: &TransformSet<R>,
    f: &DofFn<'_, R>,
    refine_eps: R,
) -> Result<DGSolution<R>> {
    let mut reference =
        DGSolution::new(dim, alpt_degree, InterpParams::of(interp), 1, n_max, sparse)?;
    reference.init_adaptive_interpolation(0, interp, tf, f, refine_eps)?;
    Ok(reference)
}
