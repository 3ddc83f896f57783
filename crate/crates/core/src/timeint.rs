//! Explicit time integrators over dense coefficient vectors: forward Euler,
//! SSP Runge-Kutta in Shu-Osher form, the classical fourth-order method, and
//! explicit two-step schemes for second-order systems u_tt = L(u).

use crate::error::{Error, Result};
use crate::real::Real;
use crate::solution::DGSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkScheme {
    ForwardEuler,
    SspRk2,
    SspRk3,
    ClassicRk4,
}

fn axpy<R: Real>(a: R, x: &[R], y: &[R]) -> Vec<R> {
    x.iter().zip(y).map(|(&xi, &yi)| a * xi + yi).collect()
}

/// u + theta (w - u); the incremental form keeps u exactly when w == u.
fn convex<R: Real>(u: &[R], w: &[R], theta: R) -> Vec<R> {
    u.iter()
        .zip(w)
        .map(|(&ui, &wi)| ui + theta * (wi - ui))
        .collect()
}

/// One explicit step of `du/dt = rhs(u)`.
pub fn rk_step<R: Real>(
    scheme: RkScheme,
    u: &[R],
    dt: R,
    rhs: &mut impl FnMut(&[R]) -> Vec<R>,
) -> Result<Vec<R>> {
    if dt <= R::zero() {
        return Err(Error::InvalidParameter("time step must be positive".into()));
    }
    Ok(match scheme {
        RkScheme::ForwardEuler => axpy(dt, &rhs(u), u),
        RkScheme::SspRk2 => {
            let u1 = axpy(dt, &rhs(u), u);
            let u2 = axpy(dt, &rhs(&u1), &u1);
            convex(u, &u2, R::half())
        }
        RkScheme::SspRk3 => {
            let u1 = axpy(dt, &rhs(u), u);
            let u2_euler = axpy(dt, &rhs(&u1), &u1);
            let u2 = convex(u, &u2_euler, R::of(0.25));
            let u3_euler = axpy(dt, &rhs(&u2), &u2);
            convex(u, &u3_euler, R::two() / R::of(3.0))
        }
        RkScheme::ClassicRk4 => {
            let k1 = rhs(u);
            let k2 = rhs(&axpy(dt * R::half(), &k1, u));
            let k3 = rhs(&axpy(dt * R::half(), &k2, u));
            let k4 = rhs(&axpy(dt, &k3, u));
            let sixth = dt / R::of(6.0);
            u.iter()
                .enumerate()
                .map(|(i, &ui)| ui + sixth * (k1[i] + R::two() * k2[i] + R::two() * k3[i] + k4[i]))
                .collect()
        }
    })
}

pub fn rk_stages(scheme: RkScheme) -> usize {
    match scheme {
        RkScheme::ForwardEuler => 1,
        RkScheme::SspRk2 => 2,
        RkScheme::SspRk3 => 3,
        RkScheme::ClassicRk4 => 4,
    }
}

/// Integrators for `u_tt = L(u)` advancing the pair (u, u_t).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondOrderScheme {
    /// Two-step central differences (second order).
    Newmark2,
    /// Two-step scheme with the dt^4/12 correction (fourth order; needs L
    /// applied twice per step).
    Newmark4,
    /// Classical RK4 on the first-order system (fourth order).
    Rk4Pair,
}

/// State and scratch of a second-order-system integrator. The two-step
/// schemes bootstrap their missing history from a Taylor expansion.
#[derive(Debug, Clone)]
pub struct SecondOrderIntegrator<R> {
    pub scheme: SecondOrderScheme,
    u_prev: Option<Vec<R>>,
}

impl<R: Real> SecondOrderIntegrator<R> {
    pub fn new(scheme: SecondOrderScheme) -> Self {
        Self {
            scheme,
            u_prev: None,
        }
    }

    /// The two-step history must be rebuilt whenever the DOF layout changes.
    pub fn reset_history(&mut self) {
        self.u_prev = None;
    }

    /// Advances (u, v) by one step of `u_tt = lin(u)`.
    pub fn step(
        &mut self,
        u: &mut Vec<R>,
        v: &mut Vec<R>,
        dt: R,
        lin: &mut impl FnMut(&[R]) -> Vec<R>,
    ) -> Result<()> {
        if dt <= R::zero() {
            return Err(Error::InvalidParameter("time step must be positive".into()));
        }
        match self.scheme {
            SecondOrderScheme::Rk4Pair => {
                let n = u.len();
                let mut state = Vec::with_capacity(2 * n);
                state.extend_from_slice(u);
                state.extend_from_slice(v);
                let mut rhs = |s: &[R]| {
                    let accel = lin(&s[..n]);
                    let mut out = Vec::with_capacity(2 * n);
                    out.extend_from_slice(&s[n..]);
                    out.extend(accel);
                    out
                };
                let next = rk_step(RkScheme::ClassicRk4, &state, dt, &mut rhs)?;
                u.copy_from_slice(&next[..n]);
                v.copy_from_slice(&next[n..]);
            }
            SecondOrderScheme::Newmark2 | SecondOrderScheme::Newmark4 => {
                let fourth = self.scheme == SecondOrderScheme::Newmark4;
                let accel = lin(u);
                let prev = match self.u_prev.take() {
                    Some(p) => p,
                    None => {
                        // u(-dt) by Taylor expansion around t = 0
                        let mut p: Vec<R> = u
                            .iter()
                            .zip(v.iter())
                            .zip(&accel)
                            .map(|((&ui, &vi), &ai)| ui - dt * vi + dt * dt * R::half() * ai)
                            .collect();
                        if fourth {
                            let jerk = lin(v); // d3u/dt3 = L(u_t) for linear L
                            let accel2 = lin(&accel); // L^2 u
                            for i in 0..p.len() {
                                p[i] = p[i] - dt * dt * dt / R::of(6.0) * jerk[i]
                                    + dt * dt * dt * dt / R::of(24.0) * accel2[i];
                            }
                        }
                        p
                    }
                };
                let dt2 = dt * dt;
                let mut force = accel.clone();
                if fourth {
                    let accel2 = lin(&accel);
                    for (f, &a2) in force.iter_mut().zip(&accel2) {
                        *f += dt2 / R::of(12.0) * a2;
                    }
                }
                let next: Vec<R> = u
                    .iter()
                    .zip(&prev)
                    .zip(&force)
                    .map(|((&ui, &pi), &fi)| R::two() * ui - pi + dt2 * fi)
                    .collect();
                // central-difference velocity, corrected by L(v) for 4th order
                let mut vel: Vec<R> = next
                    .iter()
                    .zip(&prev)
                    .map(|(&ni, &pi)| (ni - pi) / (R::two() * dt))
                    .collect();
                if fourth {
                    let jerk = lin(v);
                    for (vi, &ji) in vel.iter_mut().zip(&jerk) {
                        *vi -= dt2 / R::of(6.0) * ji;
                    }
                }
                *v = vel;
                self.u_prev = Some(std::mem::replace(u, next));
            }
        }
        Ok(())
    }
}

/// Copies Alpert coefficients into the predict buffers (before prediction).
pub fn predict_snapshot<R: Real>(sol: &mut DGSolution<R>) {
    sol.snapshot_to_predict();
}

/// Restores the snapshot after refinement: old elements get their pre-step
/// values back, newly added elements keep zeros.
pub fn restore_snapshot<R: Real>(sol: &mut DGSolution<R>) -> Result<()> {
    sol.restore_from_predict()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay_step(scheme: RkScheme, y0: f64, dt: f64, lambda: f64) -> f64 {
        let mut rhs = |u: &[f64]| vec![lambda * u[0]];
        rk_step(scheme, &[y0], dt, &mut rhs).unwrap()[0]
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let mut rhs = |u: &[f64]| u.to_vec();
        assert!(rk_step(RkScheme::ForwardEuler, &[1.0], 0.0, &mut rhs).is_err());
        assert!(rk_step(RkScheme::SspRk3, &[1.0], -0.1, &mut rhs).is_err());
    }

    #[test]
    fn zero_rhs_is_identity() {
        let u = vec![1.0, -2.0, 3.5];
        for scheme in [
            RkScheme::ForwardEuler,
            RkScheme::SspRk2,
            RkScheme::SspRk3,
            RkScheme::ClassicRk4,
        ] {
            let mut rhs = |s: &[f64]| vec![0.0; s.len()];
            let next = rk_step(scheme, &u, 0.1, &mut rhs).unwrap();
            assert_eq!(next, u);
        }
        let mut integ = SecondOrderIntegrator::new(SecondOrderScheme::Newmark2);
        let mut uu = u.clone();
        let mut vv = vec![0.0; 3];
        let mut lin = |s: &[f64]| vec![0.0; s.len()];
        integ.step(&mut uu, &mut vv, 0.1, &mut lin).unwrap();
        assert_eq!(uu, u);
    }

    #[test]
    fn rk3_matches_cubic_taylor_of_decay() {
        // one RK3 step on y' = -y from 1 equals the degree-3 Taylor
        // polynomial of e^{-dt}; the gap to the exact value is O(dt^4)
        let y1 = decay_step(RkScheme::SspRk3, 1.0, 0.1, -1.0);
        let taylor = 1.0 - 0.1 + 0.01 / 2.0 - 0.001 / 6.0;
        assert!((y1 - taylor).abs() < 1e-15, "{y1} vs {taylor}");
        assert!((y1 - (-0.1f64).exp()).abs() < 2e-5);
    }

    fn convergence_order(mut one_run: impl FnMut(f64) -> f64) -> f64 {
        // dt-halving study on a fixed horizon
        let e1 = one_run(0.02);
        let e2 = one_run(0.01);
        (e1 / e2).log2()
    }

    /// y' = A y with a rotation block: exact solution known.
    fn linear_system_error(scheme: RkScheme, dt: f64) -> f64 {
        let t_end = 1.0;
        let steps = (t_end / dt).round() as usize;
        let mut y = vec![1.0, 0.0];
        let mut rhs = |s: &[f64]| vec![-s[1], s[0]];
        for _ in 0..steps {
            y = rk_step(scheme, &y, dt, &mut rhs).unwrap();
        }
        let exact = (t_end.cos(), t_end.sin());
        ((y[0] - exact.0).powi(2) + (y[1] - exact.1).powi(2)).sqrt()
    }

    #[test]
    fn measured_orders_match_schemes() {
        let cases = [
            (RkScheme::ForwardEuler, 1.0, 0.1),
            (RkScheme::SspRk2, 2.0, 0.1),
            (RkScheme::SspRk3, 3.0, 0.1),
            (RkScheme::ClassicRk4, 4.0, 0.15),
        ];
        for (scheme, want, tol) in cases {
            let order = convergence_order(|dt| linear_system_error(scheme, dt));
            assert!(
                (order - want).abs() < tol,
                "{scheme:?}: measured {order:.3}, want {want}"
            );
        }
    }

    fn oscillator_error(scheme: SecondOrderScheme, dt: f64) -> f64 {
        // u'' = -4 u, u(0) = 1, v(0) = 0: u = cos(2t)
        let t_end = 1.0;
        let steps = (t_end / dt).round() as usize;
        let mut u = vec![1.0];
        let mut v = vec![0.0];
        let mut integ = SecondOrderIntegrator::new(scheme);
        let mut lin = |s: &[f64]| vec![-4.0 * s[0]];
        for _ in 0..steps {
            integ.step(&mut u, &mut v, dt, &mut lin).unwrap();
        }
        (u[0] - (2.0 * t_end).cos()).abs()
    }

    #[test]
    fn second_order_scheme_orders() {
        let o2 = convergence_order(|dt| oscillator_error(SecondOrderScheme::Newmark2, dt));
        assert!((o2 - 2.0).abs() < 0.15, "Newmark2 order {o2:.3}");
        let o4 = convergence_order(|dt| oscillator_error(SecondOrderScheme::Newmark4, dt));
        assert!((o4 - 4.0).abs() < 0.15, "Newmark4 order {o4:.3}");
        let opair = convergence_order(|dt| oscillator_error(SecondOrderScheme::Rk4Pair, dt));
        assert!((opair - 4.0).abs() < 0.15, "Rk4Pair order {opair:.3}");
    }

    #[test]
    fn integrators_commute_with_scaling_for_linear_rhs() {
        let mut rhs = |s: &[f64]| vec![-0.7 * s[0] + 0.2 * s[1], 0.1 * s[0]];
        let u = vec![0.4, -1.3];
        let scaled: Vec<f64> = u.iter().map(|x| 5.0 * x).collect();
        for scheme in [RkScheme::SspRk3, RkScheme::ClassicRk4] {
            let a = rk_step(scheme, &u, 0.05, &mut rhs).unwrap();
            let b = rk_step(scheme, &scaled, 0.05, &mut rhs).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((5.0 * x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn snapshot_survives_predict_refine_restore() {
        use crate::adapt::{refine, AdaptConfig};
        use crate::grid::{enumerate_initial, ElementKey};
        use crate::solution::{DGSolution, InterpParams};
        let params = InterpParams {
            points_per_cell: 2,
            deriv_order: 0,
        };
        let mut sol =
            DGSolution::<f64>::with_keys(1, 1, params, 1, 2, true, enumerate_initial(1, 0, true))
                .unwrap();
        sol.set.get_mut(&ElementKey::root(1)).unwrap().alpt[0][0] = 1.0;
        predict_snapshot(&mut sol);
        // crude predict: overwrite with something else
        sol.set.get_mut(&ElementKey::root(1)).unwrap().alpt[0][0] = 7.0;
        let cfg = AdaptConfig::new(0.5, -1.0, 2, vec![0]).unwrap();
        refine(&mut sol, &cfg);
        assert!(sol.n_elements() > 1);
        restore_snapshot(&mut sol).unwrap();
        assert_eq!(sol.set.get(&ElementKey::root(1)).unwrap().alpt[0][0], 1.0);
        // new elements keep zeros
        for (key, elem) in sol.set.iter() {
            if !key.is_root() {
                assert!(elem.alpt[0].iter().all(|&c| c == 0.0));
            }
        }
    }
}
