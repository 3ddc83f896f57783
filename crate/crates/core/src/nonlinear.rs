//! Nonlinear terms by interpolation: sample the solution at the hierarchical
//! interpolation points, apply the flux pointwise, convert back to wavelet
//! coefficients, and contract against the Alpert test functions with the
//! fast transforms.

use crate::basis1d::{Family1D, InterpolatoryFamily};
use crate::error::{Error, Result};
use crate::fasttransform::{
    alpert_to_point_values, fast_multiply, HierField, TransformSet, TriSide,
};
use crate::poly::Side;
use crate::real::Real;
use crate::solution::{DGSolution, DegreeTuples};

/// Location data of one interpolation dof tuple handed to pointwise maps.
pub struct PointContext<'a, R> {
    pub x: &'a [R],
    pub sides: &'a [Side],
    pub derivs: &'a [usize],
}

/// A scalar flux with the derivatives the Hermite path needs.
pub struct FluxDescriptor<'a, R> {
    pub f: &'a dyn Fn(R) -> R,
    /// f'; required in Hermite mode.
    pub df: Option<&'a dyn Fn(R) -> R>,
    /// f''; required in Hermite mode for mixed second derivatives (d = 2).
    pub ddf: Option<&'a dyn Fn(R) -> R>,
    /// Lax-Friedrichs dissipation constant (must dominate |f'|).
    pub alpha: R,
}

/// Which interpolation family drives the pointwise step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpMode {
    Lagrange,
    Hermite,
}

/// Applies `map` at every dof tuple of aligned point-value fields.
pub fn apply_pointwise<R: Real>(
    interp: &InterpolatoryFamily<R>,
    inputs: &[&HierField<R>],
    mut map: impl FnMut(&PointContext<'_, R>, &[R]) -> R,
) -> Result<HierField<R>> {
    assert!(!inputs.is_empty());
    let first = inputs[0];
    let per = interp.per_element();
    let dim = first.dim();
    let mut out = HierField::zeros(first.keys().to_vec(), first.slots.clone());
    let mut x = vec![R::zero(); dim];
    let mut sides = vec![Side::Minus; dim];
    let mut derivs = vec![0usize; dim];
    let mut vals = vec![R::zero(); inputs.len()];
    let keys = first.keys().to_vec();
    for (i, key) in keys.iter().enumerate() {
        for tuple in DegreeTuples::new(per, dim) {
            let flat = crate::solution::tuple_index(&tuple, per);
            for m in 0..dim {
                let dof = &interp.dofs()[key.code(m) * per + tuple[m]];
                x[m] = dof.point;
                sides[m] = dof.side;
                derivs[m] = dof.deriv;
            }
            for (slot, field) in vals.iter_mut().zip(inputs) {
                *slot = field.get(key).unwrap()[flat];
            }
            let v = map(
                &PointContext {
                    x: &x,
                    sides: &sides,
                    derivs: &derivs,
                },
                &vals,
            );
            if !v.is_finite() {
                return Err(Error::NonFinite("pointwise flux evaluation".into()));
            }
            out.data[i][flat] = v;
        }
    }
    Ok(out)
}

/// Interpolates `f(u_h)`: Alpert coefficients -> point values -> pointwise
/// flux -> hierarchical interpolation coefficients. The result is also
/// stored in the elements' interpolation blocks of `var`.
///
/// Hermite mode fills derivative dof slots by the chain rule
/// (`d/dx f(u) = f'(u) u_x`, mixed `f''(u) u_x u_y + f'(u) u_xy`), which
/// needs `df` (and `ddf` in 2D); there is no finite-difference fallback.
pub fn interpolate_nonlinear<R: Real>(
    sol: &mut DGSolution<R>,
    var: usize,
    interp: &InterpolatoryFamily<R>,
    tf: &TransformSet<R>,
    flux: &FluxDescriptor<'_, R>,
    mode: InterpMode,
) -> Result<HierField<R>> {
    let dim = sol.dim;
    match mode {
        InterpMode::Lagrange => {
            if interp.deriv_order() != 0 {
                return Err(Error::Unsupported(
                    "Lagrange mode needs a value-only interpolation family".into(),
                ));
            }
        }
        InterpMode::Hermite => {
            if interp.deriv_order() == 0 {
                return Err(Error::Unsupported(
                    "Hermite mode needs a derivative-carrying family".into(),
                ));
            }
            if flux.df.is_none() {
                return Err(Error::Unsupported("Hermite mode requires f'".into()));
            }
            if dim >= 2 && flux.ddf.is_none() {
                return Err(Error::Unsupported(
                    "Hermite mode in several dimensions requires f''".into(),
                ));
            }
            if dim > 2 {
                return Err(Error::Unsupported(
                    "Hermite composition beyond two dimensions needs third derivatives".into(),
                ));
            }
        }
    }
    let point_vals = alpert_to_point_values(sol, var, tf)?;
    let composed = match mode {
        InterpMode::Lagrange => apply_pointwise(interp, &[&point_vals], |_, u| (flux.f)(u[0]))?,
        // Hermite dof tuples already carry the derivative orders and a2p
        // evaluates them; compose by the chain rule slot by slot.
        InterpMode::Hermite => compose_hermite(interp, &point_vals, flux)?,
    };
    let coeffs = fast_multiply(&composed, &vec![&tf.p2c; dim], TriSide::Lower)?;
    coeffs.store_intp(sol, var);
    Ok(coeffs)
}

/// Hermite composition: the point-value field already holds `u` and its
/// (mixed) derivatives at each dof tuple; rebuild the same slots for f(u).
fn compose_hermite<R: Real>(
    interp: &InterpolatoryFamily<R>,
    point_vals: &HierField<R>,
    flux: &FluxDescriptor<'_, R>,
) -> Result<HierField<R>> {
    let per = interp.per_element();
    let dim = point_vals.dim();
    let k = interp.deriv_order();
    let mut out = HierField::zeros(point_vals.keys().to_vec(), point_vals.slots.clone());
    let df = flux.df.expect("checked by caller");
    let keys = point_vals.keys().to_vec();
    for (i, key) in keys.iter().enumerate() {
        let block = point_vals.get(key).unwrap();
        for tuple in DegreeTuples::new(per, dim) {
            let flat = crate::solution::tuple_index(&tuple, per);
            let derivs: Vec<usize> = (0..dim)
                .map(|m| interp.dofs()[key.code(m) * per + tuple[m]].deriv)
                .collect();
            let total: usize = derivs.iter().sum();
            // value slot of the same point: zero out the derivative parts
            let base_tuple: Vec<usize> = tuple.iter().zip(&derivs).map(|(&p, &l)| p - l).collect();
            let u = block[crate::solution::tuple_index(&base_tuple, per)];
            let v = match total {
                0 => (flux.f)(u),
                1 => {
                    let ux = block[flat];
                    df(u) * ux
                }
                2 => {
                    let ddf = flux.ddf.expect("checked by caller");
                    if derivs.iter().all(|&l| l <= 1) {
                        // mixed: f''(u) u_x u_y + f'(u) u_xy
                        let mut first = Vec::new();
                        for m in 0..dim {
                            if derivs[m] == 1 {
                                let mut t = base_tuple.clone();
                                t[m] = tuple[m];
                                first.push(block[crate::solution::tuple_index(&t, per)]);
                            }
                        }
                        ddf(u) * first[0] * first[1] + df(u) * block[flat]
                    } else {
                        // single-direction second derivative (K >= 2)
                        return Err(Error::Unsupported(
                            "Hermite composition with K >= 2 slots".into(),
                        ));
                    }
                }
                _ => {
                    return Err(Error::Unsupported(format!(
                        "Hermite composition of order {total} (K = {k})"
                    )));
                }
            };
            if !v.is_finite() {
                return Err(Error::NonFinite("Hermite flux composition".into()));
            }
            out.data[i][flat] = v;
        }
    }
    Ok(out)
}

/// Accumulates `scale * Σ ∫ I[f] ∂_m v` into the rhs blocks of `var`: the
/// acting dimension contracts with ∫ψ v', the others with ∫ψ v.
pub fn rhs_nonlinear_volume<R: Real>(
    sol: &mut DGSolution<R>,
    var: usize,
    coeffs: &HierField<R>,
    tf: &TransformSet<R>,
    dim: usize,
    scale: R,
) -> Result<()> {
    let mut mats = vec![&tf.proj_uv; sol.dim];
    mats[dim] = &tf.vol_uvx;
    let contribution = fast_multiply(coeffs, &mats, TriSide::Lower)?;
    contribution.add_to_rhs(sol, var, scale);
    Ok(())
}

/// Accumulates the Lax-Friedrichs interface terms of dimension `m`:
/// `scale * Σ_faces (g⁻(u⁻) + g⁺(u⁺))[v]` with `g∓ = (f(u) ± αu)/2`
/// interpolated from the one-sided point values.
pub fn rhs_nonlinear_flux<R: Real>(
    sol: &mut DGSolution<R>,
    var: usize,
    interp: &InterpolatoryFamily<R>,
    tf: &TransformSet<R>,
    flux: &FluxDescriptor<'_, R>,
    dim: usize,
    scale: R,
) -> Result<()> {
    let alpha = flux.alpha;
    let point_vals = alpert_to_point_values(sol, var, tf)?;
    let minus = apply_pointwise(interp, &[&point_vals], |_, u| {
        ((flux.f)(u[0]) + alpha * u[0]) * R::half()
    })?;
    let plus = apply_pointwise(interp, &[&point_vals], |_, u| {
        ((flux.f)(u[0]) - alpha * u[0]) * R::half()
    })?;
    let d = sol.dim;
    let minus_coef = fast_multiply(&minus, &vec![&tf.p2c; d], TriSide::Lower)?;
    let plus_coef = fast_multiply(&plus, &vec![&tf.p2c; d], TriSide::Lower)?;
    let mut mats = vec![&tf.proj_uv; d];
    mats[dim] = &tf.flx_ulft;
    fast_multiply(&minus_coef, &mats, TriSide::Lower)?.add_to_rhs(sol, var, scale);
    mats[dim] = &tf.flx_urgt;
    fast_multiply(&plus_coef, &mats, TriSide::Lower)?.add_to_rhs(sol, var, scale);
    Ok(())
}
