//! Eikonal-type Hamilton-Jacobi equation `φ_t + Σ_m |φ_{x_m}| = 0` with
//! outflow boundaries and the adaptive predict / refine / evolve / coarsen
//! loop.
//!
//! Gradients are reconstructed by one-sided local DG differences (two per
//! dimension); the regularized Hamiltonian is evaluated pointwise in
//! Lax-Friedrichs form at the interpolation points, interpolated by Lagrange
//! multiwavelets, and projected onto the Alpert test space. The 2d+1 unknown
//! slots hold φ followed by the per-dimension minus/plus gradients.

use std::time::Instant;

use crate::adapt::{coarsen, refine, AdaptConfig};
use crate::assembly::{assemble_ldg_gradient, GlobalOperator, TraceSign};
use crate::basis1d::{AlpertFamily, InterpolatoryFamily};
use crate::error::Result;
use crate::fasttransform::{
    alpert_to_points_average_matrix, build_transform_set, fast_multiply, DofSample, HierField,
    TransformMatrix, TransformSet, TriSide,
};
use crate::nonlinear::apply_pointwise;
use crate::opmat1d::{build_operator_matrix, BoundaryCondition, OperatorKind, OperatorMatrix1D};
use crate::pde::{reference_solution, RunStats};
use crate::real::Real;
use crate::solution::{DGSolution, InterpParams, SeparableTerm};
use crate::timeint::{predict_snapshot, restore_snapshot, rk_step, RkScheme};

/// Center of the initial profile.
pub fn center<R: Real>() -> R {
    R::half()
}

/// Radius constant of `g(z) = (z² - r₀²)/r₀`.
pub fn radius<R: Real>() -> R {
    R::of(0.125)
}

#[derive(Debug, Clone)]
pub struct HJProblem<R> {
    pub dim: usize,
    pub alpt_degree: usize,
    pub level: usize,
    pub refine_eps: R,
    pub coarsen_eta: R,
    pub cfl: R,
    pub final_time: R,
}

impl<R: Real> HJProblem<R> {
    pub fn new(dim: usize, alpt_degree: usize, refine_eps: R) -> Self {
        Self {
            dim,
            alpt_degree,
            level: 7,
            refine_eps,
            coarsen_eta: refine_eps * R::of(0.1),
            cfl: R::of(0.05),
            final_time: R::of(0.1),
        }
    }
}

/// Componentwise clamp `c_t* = min(max(0, c - t), c + t)`.
fn clamp_shift<R: Real>(c: R, t: R) -> R {
    (c - t).max(R::zero()).min(c + t)
}

/// Exact viscosity solution `φ(x, t) = g(‖(x - a)_t*‖)`.
pub fn exact_hj_solution<R: Real>(x: &[R], t: R) -> R {
    let r0 = radius::<R>();
    let z_sq: R = x
        .iter()
        .map(|&xm| {
            let s = clamp_shift(xm - center::<R>(), t);
            s * s
        })
        .sum();
    (z_sq - r0 * r0) / r0
}

/// First derivative of the exact solution in dimension `m` (defined away
/// from the clamp kinks, which never sit on dyadic points here).
fn exact_hj_gradient<R: Real>(x: &[R], t: R, m: usize) -> R {
    let c = x[m] - center::<R>();
    let s = clamp_shift(c, t);
    let ds = if c.abs() > t { R::one() } else { R::zero() };
    R::two() * s * ds / radius::<R>()
}

/// The regularized Hamiltonian: `H(p) = Σ|p_m|` when `H(p) ≥ δ`, else the C¹
/// quadratic blend `H²/(2δ) + δ/2`. The eikonal Hamiltonian is itself the l1
/// norm of the gradient, and switching on it is what makes the two branches
/// join with matching value and slope.
pub fn regularized_hamiltonian<R: Real>(p: &[R], delta: R) -> R {
    let h: R = p.iter().map(|&v| v.abs()).sum();
    if h >= delta {
        h
    } else {
        h * h / (R::two() * delta) + delta * R::half()
    }
}

/// Trace of the adaptive run, exposed for the structural checks.
#[derive(Debug, Clone, Default)]
pub struct HJTrace<R> {
    pub max_abs_phi: R,
    pub dof_after_refine: Vec<usize>,
    pub dof_after_coarsen: Vec<usize>,
}

struct GradientOps<R> {
    /// [dimension][0 = minus, 1 = plus]
    ops: Vec<[GlobalOperator<R>; 2]>,
}

fn build_gradient_ops<R: Real>(
    sol: &DGSolution<R>,
    opm_inside: &OperatorMatrix1D<R>,
    alpert: &AlpertFamily<R>,
) -> Result<GradientOps<R>> {
    let mut ops = Vec::with_capacity(sol.dim);
    for m in 0..sol.dim {
        let minus = assemble_ldg_gradient(sol, opm_inside, alpert, m, TraceSign::Minus)?;
        let plus = assemble_ldg_gradient(sol, opm_inside, alpert, m, TraceSign::Plus)?;
        ops.push([minus, plus]);
    }
    Ok(GradientOps { ops })
}

/// One right-hand-side evaluation of the φ equation for a given coefficient
/// vector: gradients, pointwise Lax-Friedrichs Hamiltonian, interpolation,
/// projection; returns -P(I[Ĥ]).
///
/// Gradient fields are sampled through the interface-averaged transfer
/// matrix: the broken derivative of a degree-k field is an order more
/// accurate there than in its one-sided endpoint limits.
fn hj_rhs<R: Real>(
    sol: &mut DGSolution<R>,
    grads: &GradientOps<R>,
    a2p_ave: &TransformMatrix<R>,
    lagr: &InterpolatoryFamily<R>,
    tf: &TransformSet<R>,
    phi: &[R],
) -> Result<Vec<R>> {
    let d = sol.dim;
    sol.scatter(0, phi);
    for m in 0..d {
        for s in 0..2 {
            let p = grads.ops[m][s].apply(phi);
            sol.scatter(1 + 2 * m + s, &p);
        }
    }
    let delta = R::two() * R::inv_pow2(sol.max_active_level());
    let alpha = R::one(); // |∂H/∂p_m| = 1 for the eikonal Hamiltonian
    let mut point_fields = Vec::with_capacity(2 * d);
    for var in 1..=2 * d {
        let field = HierField::from_alpt(sol, var);
        point_fields.push(fast_multiply(&field, &vec![a2p_ave; d], TriSide::Lower)?);
    }
    let refs: Vec<&HierField<R>> = point_fields.iter().collect();
    let mut pbar = vec![R::zero(); d];
    let ham = apply_pointwise(lagr, &refs, |_, vals| {
        let mut dissipation = R::zero();
        for m in 0..d {
            let minus = vals[2 * m];
            let plus = vals[2 * m + 1];
            pbar[m] = (minus + plus) * R::half();
            dissipation += alpha * (plus - minus) * R::half();
        }
        regularized_hamiltonian(&pbar, delta) - dissipation
    })?;
    let coeffs = fast_multiply(&ham, &vec![&tf.p2c; d], TriSide::Lower)?;
    let projected = fast_multiply(&coeffs, &vec![&tf.proj_uv; d], TriSide::Lower)?;
    let mut rhs = vec![R::zero(); sol.total_dof()];
    let block = sol.alpt_block_len();
    for (i, key) in projected.keys().iter().enumerate() {
        let off = sol.dof_offset(key).unwrap();
        for (slot, &v) in projected.data[i].iter().enumerate() {
            rhs[off + slot] = -v;
        }
        debug_assert_eq!(projected.data[i].len(), block);
    }
    Ok(rhs)
}

pub fn run_hj<R: Real>(problem: &HJProblem<R>) -> Result<RunStats<R>> {
    let (stats, _) = run_hj_traced(problem)?;
    Ok(stats)
}

/// Runs the driver and hands back the final adaptive solution (φ in slot 0),
/// for downstream inspection or snapshot export.
pub fn run_hj_solution<R: Real>(problem: &HJProblem<R>) -> Result<DGSolution<R>> {
    let (_, _, sol) = run_hj_full(problem)?;
    Ok(sol)
}

fn run_hj_full<R: Real>(
    problem: &HJProblem<R>,
) -> Result<(RunStats<R>, HJTrace<R>, DGSolution<R>)> {
    run_hj_impl(problem)
}

pub fn run_hj_traced<R: Real>(problem: &HJProblem<R>) -> Result<(RunStats<R>, HJTrace<R>)> {
    let (stats, trace, _) = run_hj_impl(problem)?;
    Ok((stats, trace))
}

fn run_hj_impl<R: Real>(
    problem: &HJProblem<R>,
) -> Result<(RunStats<R>, HJTrace<R>, DGSolution<R>)> {
    let d = problem.dim;
    let k = problem.alpt_degree;
    let n = problem.level;
    let n_vars = 2 * d + 1;
    let alpert = AlpertFamily::new(k, n)?;
    let lagr = InterpolatoryFamily::lagrange(n)?;
    let herm = InterpolatoryFamily::hermite(n)?;
    let tf = build_transform_set(&alpert, &lagr, BoundaryCondition::InsideOnly)?;
    let tf_herm = build_transform_set(&alpert, &herm, BoundaryCondition::InsideOnly)?;
    let a2p_ave = alpert_to_points_average_matrix(&alpert, &lagr, 0);
    let opm_inside = build_operator_matrix(
        &alpert,
        &alpert,
        BoundaryCondition::InsideOnly,
        &[
            OperatorKind::UVx,
            OperatorKind::ULftVJp,
            OperatorKind::URgtVJp,
        ],
    )?;
    let cfg = AdaptConfig::new(problem.refine_eps, problem.coarsen_eta, n, vec![0])?;

    let mut sol = DGSolution::new(d, k, InterpParams::of(&lagr), n_vars, n, true)?;
    // φ₀ = (Σ (x_m - a)² - r₀²)/r₀ is a sum of separable terms
    let r0 = radius::<R>();
    let quad_factor = move |x: R| {
        let c = x - center::<R>();
        c * c
    };
    let one_factor = move |_: R| R::one();
    let mut terms = Vec::new();
    for m in 0..d {
        let mut factors: Vec<&dyn Fn(R) -> R> = vec![&one_factor; d];
        factors[m] = &quad_factor;
        terms.push(SeparableTerm {
            weight: R::one() / r0,
            factors,
        });
    }
    let mut const_factors: Vec<&dyn Fn(R) -> R> = Vec::new();
    for _ in 0..d {
        const_factors.push(&one_factor);
    }
    terms.push(SeparableTerm {
        weight: -r0,
        factors: const_factors,
    });
    sol.init_separable_sum(&alpert, 0, &terms)?;
    coarsen(&mut sol, &cfg);

    let mut trace = HJTrace::<R>::default();
    let mut dof_history = Vec::new();
    let mut t = R::zero();
    let mut steps = 0usize;
    let started = Instant::now();
    while t < problem.final_time {
        // part 1: time step from the per-dimension active resolution
        let sum_c_dx: R = sol.max_level_per_dim().iter().map(|&lm| R::pow2(lm)).sum();
        let dt = (problem.cfl / sum_c_dx).min(problem.final_time - t);

        // part 2: forward-Euler prediction
        {
            let grads = build_gradient_ops(&sol, &opm_inside, &alpert)?;
            predict_snapshot(&mut sol);
            let phi = sol.gather(0);
            let predicted = rk_step(RkScheme::ForwardEuler, &phi, dt, &mut |u| {
                hj_rhs(&mut sol, &grads, &a2p_ave, &lagr, &tf, u).expect("rhs evaluation")
            })?;
            sol.scatter(0, &predicted);
        }

        // part 3: refine on the prediction, then recover the state
        refine(&mut sol, &cfg);
        trace.dof_after_refine.push(sol.total_dof());
        restore_snapshot(&mut sol)?;

        // part 4: SSP-RK3 on the enlarged set
        {
            let grads = build_gradient_ops(&sol, &opm_inside, &alpert)?;
            let phi = sol.gather(0);
            let advanced = rk_step(RkScheme::SspRk3, &phi, dt, &mut |u| {
                hj_rhs(&mut sol, &grads, &a2p_ave, &lagr, &tf, u).expect("rhs evaluation")
            })?;
            sol.scatter(0, &advanced);
        }

        // part 5: coarsen
        coarsen(&mut sol, &cfg);
        trace.dof_after_coarsen.push(sol.total_dof());

        let phi_max = sol
            .gather(0)
            .iter()
            .fold(R::zero(), |acc, &v| acc.max(v.abs()));
        trace.max_abs_phi = trace.max_abs_phi.max(phi_max);
        dof_history.push(sol.total_dof());
        t += dt;
        steps += 1;
    }
    let seconds_per_step = started.elapsed().as_secs_f64() / steps.max(1) as f64;

    let tf_ref = &tf_herm;
    let exact = |s: &DofSample<'_, R>| -> R {
        let total: usize = s.derivs.iter().sum();
        match total {
            0 => exact_hj_solution(s.x, problem.final_time),
            1 => {
                let m = s.derivs.iter().position(|&q| q == 1).unwrap();
                exact_hj_gradient(s.x, problem.final_time, m)
            }
            // the exact solution is a sum of one-dimensional terms, so all
            // mixed derivatives vanish
            _ => R::zero(),
        }
    };
    let reference = reference_solution(d, k, n, true, &herm, tf_ref, &exact, R::of(1e-6))?;
    let l2_error = sol.l2_error_against(&reference, 0, 0)?;

    Ok((
        RunStats {
            dof: sol.total_dof(),
            l2_error,
            steps,
            seconds_per_step,
            dof_history,
        },
        trace,
        sol,
    ))
}
