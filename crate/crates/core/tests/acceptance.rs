//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measurements. Tests share a lock so wall-clock measurements are not
//! polluted by concurrent runs; `--test-threads=1` works too.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use mwdg::adapt::{coarsen, indicator, refine, AdaptConfig, LeafRegistry};
use mwdg::basis1d::{AlpertFamily, Family1D, InterpolatoryFamily};
use mwdg::fasttransform::{direct_multiply, fast_multiply, HierField, TransformMatrix, TriSide};
use mwdg::grid::{enumerate_initial, ElementKey};
use mwdg::linalg::DMat;
use mwdg::nonlinear::{
    interpolate_nonlinear, rhs_nonlinear_flux, rhs_nonlinear_volume, FluxDescriptor, InterpMode,
};
use mwdg::opmat1d::{build_operator_matrix, BoundaryCondition, OperatorKind};
use mwdg::pde::hj::{run_hj, HJProblem};
use mwdg::pde::transport::{run_transport, TransportProblem};
use mwdg::pde::wave::{run_wave, WaveProblem};
use mwdg::poly::inner_product;
use mwdg::quadrature::GaussLegendre;
use mwdg::solution::{DGSolution, InterpParams};
use rand::prelude::*;

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|e| e.into_inner())
}

fn lagr_params() -> InterpParams {
    InterpParams {
        points_per_cell: 2,
        deriv_order: 0,
    }
}

fn within(err: f64, target: f64, rel: f64) -> bool {
    (err - target).abs() <= rel * target
}

#[test]
fn criterion_1_transport_table_d2() {
    let _guard = serial();
    let started = Instant::now();
    let cases_k1 = [
        (5usize, 448usize, 1.59e-2),
        (6, 1024, 3.84e-3),
        (7, 2304, 9.80e-4),
    ];
    for (n, dof, err) in cases_k1 {
        let t0 = Instant::now();
        let stats = run_transport(&TransportProblem::<f64>::new(2, 1, n)).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        assert_eq!(stats.dof, dof, "k=1 N={n}: DOF {} != {dof}", stats.dof);
        assert!(
            within(stats.l2_error, err, 0.25),
            "k=1 N={n}: error {:.4e} outside ±25% of {err:.4e}",
            stats.l2_error
        );
        assert!(dt < 120.0, "k=1 N={n} took {dt:.1}s (budget 120s)");
        println!(
            "  transport d=2 k=1 N={n}: dof {} err {:.4e} ({dt:.1}s)",
            stats.dof, stats.l2_error
        );
    }
    for (n, err) in [(4usize, 1.50e-3), (5, 3.95e-4)] {
        let t0 = Instant::now();
        let stats = run_transport(&TransportProblem::<f64>::new(2, 2, n)).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        assert!(
            within(stats.l2_error, err, 0.30),
            "k=2 N={n}: error {:.4e} outside ±30% of {err:.4e}",
            stats.l2_error
        );
        assert!(dt < 120.0);
        println!(
            "  transport d=2 k=2 N={n}: dof {} err {:.4e} ({dt:.1}s)",
            stats.dof, stats.l2_error
        );
    }
    println!(
        "[criterion 1] PASS transport table d=2 ({:.1}s)",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_2_transport_table_d3() {
    let _guard = serial();
    let started = Instant::now();
    let mut errors = Vec::new();
    for (n, dof, err) in [(4usize, 832usize, 4.60e-1), (5, 2176, 1.48e-1)] {
        let t0 = Instant::now();
        let stats = run_transport(&TransportProblem::<f64>::new(3, 1, n)).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        assert_eq!(stats.dof, dof);
        assert!(
            within(stats.l2_error, err, 0.30),
            "d=3 N={n}: error {:.4e} outside ±30% of {err:.4e}",
            stats.l2_error
        );
        assert!(dt < 300.0, "d=3 N={n} took {dt:.1}s (budget 300s)");
        println!(
            "  transport d=3 k=1 N={n}: dof {} err {:.4e} ({dt:.1}s)",
            stats.dof, stats.l2_error
        );
        errors.push(stats.l2_error);
    }
    let order = (errors[0] / errors[1]).log2();
    assert!(order >= 1.4, "measured order {order:.2} < 1.4");
    println!(
        "[criterion 2] PASS transport d=3 (order {order:.2}, {:.1}s)",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_3_hj_table() {
    let _guard = serial();
    let started = Instant::now();
    let mut errors = Vec::new();
    let targets = [Some((204usize, 4.17e-3)), Some((444, 1.62e-3)), None];
    for (eps, target) in [1e-3f64, 1e-4, 1e-5].iter().zip(targets) {
        let t0 = Instant::now();
        let stats = run_hj(&HJProblem::<f64>::new(2, 1, *eps)).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        assert!(dt < 300.0, "eps={eps:.0e} took {dt:.1}s (budget 300s)");
        if let Some((dof, err)) = target {
            assert!(
                stats.l2_error <= 2.0 * err && stats.l2_error >= err / 2.0,
                "eps={eps:.0e}: error {:.4e} outside x2 of {err:.4e}",
                stats.l2_error
            );
            assert!(
                stats.dof <= 2 * dof && stats.dof >= dof / 2,
                "eps={eps:.0e}: dof {} outside x2 of {dof}",
                stats.dof
            );
        }
        println!(
            "  hj d=2 k=1 eps={eps:.0e}: dof {} err {:.4e} ({dt:.1}s)",
            stats.dof, stats.l2_error
        );
        errors.push(stats.l2_error);
    }
    assert!(
        errors[0] > errors[1] && errors[1] > errors[2],
        "errors not monotone in eps: {errors:?}"
    );
    println!(
        "[criterion 3] PASS hj table ({:.1}s)",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_4_wave_table() {
    let _guard = serial();
    let started = Instant::now();
    let mut errors = Vec::new();
    for (eps, err) in [(1e-1f64, 1.97e-3), (1e-2, 4.17e-4)] {
        let t0 = Instant::now();
        let stats = run_wave(&WaveProblem::<f64>::new(2, 1, eps)).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        assert!(dt < 600.0, "eps={eps:.0e} took {dt:.1}s (budget 600s)");
        assert!(
            stats.l2_error <= 2.0 * err && stats.l2_error >= err / 2.0,
            "eps={eps:.0e}: error {:.4e} outside x2 of {err:.4e}",
            stats.l2_error
        );
        println!(
            "  wave d=2 k=1 eps={eps:.0e}: dof {} err {:.4e} ({dt:.1}s)",
            stats.dof, stats.l2_error
        );
        errors.push(stats.l2_error);
    }
    let ratio = errors[0] / errors[1];
    assert!(ratio >= 3.0, "error ratio {ratio:.2} < 3");
    println!(
        "[criterion 4] PASS wave table (ratio {ratio:.2}, {:.1}s)",
        started.elapsed().as_secs_f64()
    );
}

fn random_closed_keys(rng: &mut StdRng, dim: usize, n: usize) -> Vec<ElementKey> {
    let all = enumerate_initial(dim, n, false);
    let mut keep: std::collections::HashSet<ElementKey> = std::collections::HashSet::new();
    keep.insert(ElementKey::root(dim));
    for key in &all {
        if rng.gen_bool(0.35) {
            keep.insert(key.clone());
        }
    }
    let mut queue: Vec<ElementKey> = keep.iter().cloned().collect();
    while let Some(k) = queue.pop() {
        for p in k.parents() {
            if keep.insert(p.clone()) {
                queue.push(p);
            }
        }
    }
    let mut keys: Vec<ElementKey> = keep.into_iter().collect();
    keys.sort();
    keys
}

fn codes_related(a: usize, b: usize) -> bool {
    let (mut hi, lo) = if a >= b { (a, b) } else { (b, a) };
    while hi > lo {
        hi >>= 1;
    }
    hi == lo
}

fn random_matrix(
    rng: &mut StdRng,
    per: usize,
    n: usize,
    hierarchical: bool,
) -> TransformMatrix<f64> {
    let codes = 1usize << n;
    let mat = DMat::from_fn(per * codes, per * codes, |r, c| {
        if hierarchical && !codes_related(r / per, c / per) {
            0.0
        } else {
            rng.gen_range(-1.0..1.0)
        }
    });
    TransformMatrix::from_dense(mat, per, per, n)
}

#[test]
fn criterion_5_fast_transform_oracle() {
    let _guard = serial();
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut cases = 0usize;
    while cases < 200 {
        let d = rng.gen_range(1..=3usize);
        let n = rng.gen_range(1..=3usize);
        let kind = rng.gen_range(0..3u8); // 0 sparse, 1 full, 2 random-closed
        let keys = match kind {
            0 => enumerate_initial(d, n, true),
            1 => enumerate_initial(d, n, false),
            _ => random_closed_keys(&mut rng, d, n),
        };
        // level-determined sets admit arbitrary matrices; adaptive sets need
        // the hierarchical (ancestor-chain) sparsity pattern the transform
        // matrices actually have
        let hierarchical = kind == 2;
        let per = rng.gen_range(1..=2usize);
        let mats: Vec<TransformMatrix<f64>> = (0..d)
            .map(|_| random_matrix(&mut rng, per, n, hierarchical))
            .collect();
        let refs: Vec<&TransformMatrix<f64>> = mats.iter().collect();
        let mut field = HierField::<f64>::zeros(keys, vec![per; d]);
        for block in &mut field.data {
            for v in block.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        let lower = fast_multiply(&field, &refs, TriSide::Lower).unwrap();
        let upper = fast_multiply(&field, &refs, TriSide::Upper).unwrap();
        let direct = direct_multiply(&field, &refs);
        let denom = direct.max_abs().max(1.0);
        let err = lower.max_abs_diff(&direct) / denom;
        assert!(
            err < 1e-12,
            "case {cases} (d={d} N={n} kind={kind}): {err:.2e}"
        );
        let side_gap = lower.max_abs_diff(&upper) / denom;
        assert!(
            side_gap < 1e-12,
            "case {cases}: diagonal side changed the result by {side_gap:.2e}"
        );
        cases += 1;
    }
    let dt = started.elapsed().as_secs_f64();
    assert!(dt < 60.0, "oracle suite took {dt:.1}s (budget 60s)");
    println!("[criterion 5] PASS fast-transform oracle (200 cases, {dt:.1}s)");
}

#[test]
fn criterion_6_basis_and_operator_properties() {
    let _guard = serial();
    let started = Instant::now();
    // Alpert Gram matrices equal the identity
    for k in 1..=3usize {
        let n = 6;
        let fam = AlpertFamily::<f64>::new(k, n).unwrap();
        let quad = GaussLegendre::new(2 * k + 2);
        let fns = fam.functions();
        for a in 0..fns.len() {
            for b in a..fns.len() {
                // disjoint supports integrate to zero by construction
                let (alo, ahi) = fns[a].poly.support().unwrap();
                let (blo, bhi) = fns[b].poly.support().unwrap();
                if ahi <= blo || bhi <= alo {
                    continue;
                }
                let want = if a == b { 1.0 } else { 0.0 };
                let got = inner_product(&fns[a].poly, &fns[b].poly, &quad);
                assert!(
                    (got - want).abs() < 1e-12,
                    "k={k}: gram({a},{b}) = {got:.3e}"
                );
            }
        }
    }
    // interpolatory delta property at every dof of the same or coarser level
    for fam in [
        InterpolatoryFamily::<f64>::lagrange(4).unwrap(),
        InterpolatoryFamily::<f64>::hermite(3).unwrap(),
    ] {
        let per = fam.per_element();
        for (a, fa) in fam.functions().iter().enumerate() {
            for (b, dof) in fam.dofs().iter().enumerate() {
                let level_b = mwdg::basis1d::code_to_elem(b / per).0;
                if fa.index.level < level_b {
                    continue;
                }
                let got = fa.poly.eval(dof.point, dof.deriv, dof.side);
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((got - want).abs() < 1e-12, "delta({a},{b}) = {got:.3e}");
            }
        }
    }
    // u_v identity
    let fam = AlpertFamily::<f64>::new(2, 4).unwrap();
    let opm = build_operator_matrix(&fam, &fam, BoundaryCondition::Periodic, &[OperatorKind::UV])
        .unwrap();
    let uv = opm.kind(OperatorKind::UV);
    for a in 0..fam.len() {
        for b in 0..fam.len() {
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((uv[(a, b)] - want).abs() < 1e-12);
        }
    }
    // linear consistency of the nonlinear path against the assembled operator
    for (d, n) in [(1usize, 3usize), (2, 3), (3, 2)] {
        let alpert = AlpertFamily::<f64>::new(1, n).unwrap();
        let lagr = InterpolatoryFamily::<f64>::lagrange(n).unwrap();
        let tf =
            mwdg::fasttransform::build_transform_set(&alpert, &lagr, BoundaryCondition::Periodic)
                .unwrap();
        let opm = build_operator_matrix(
            &alpert,
            &alpert,
            BoundaryCondition::Periodic,
            &[
                OperatorKind::UVx,
                OperatorKind::ULftVJp,
                OperatorKind::URgtVJp,
            ],
        )
        .unwrap();
        let mut sol = DGSolution::<f64>::new(d, 1, lagr_params(), 1, n, true).unwrap();
        let mut rng = StdRng::seed_from_u64(101 + d as u64);
        let coefs: Vec<f64> = (0..sol.total_dof())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        sol.scatter(0, &coefs);
        let id = |u: f64| u;
        let flux = FluxDescriptor {
            f: &id,
            df: None,
            ddf: None,
            alpha: 1.0,
        };
        sol.set_rhs_zero();
        let coeffs =
            interpolate_nonlinear(&mut sol, 0, &lagr, &tf, &flux, InterpMode::Lagrange).unwrap();
        for m in 0..d {
            rhs_nonlinear_volume(&mut sol, 0, &coeffs, &tf, m, 1.0).unwrap();
            rhs_nonlinear_flux(&mut sol, 0, &lagr, &tf, &flux, m, 1.0).unwrap();
        }
        let fast_rhs = sol.gather_rhs(0);
        let op = mwdg::assembly::assemble_hyperbolic(
            &sol,
            &opm,
            &vec![1.0; d],
            mwdg::assembly::Flux::Upwind,
        )
        .unwrap();
        let lin_rhs = op.apply(&coefs);
        let denom = lin_rhs.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
        for (i, (a, b)) in fast_rhs.iter().zip(&lin_rhs).enumerate() {
            assert!(
                (a - b).abs() / denom < 1e-11,
                "d={d} dof {i}: |{a:.6e} - {b:.6e}|"
            );
        }
    }
    let dt = started.elapsed().as_secs_f64();
    assert!(dt < 60.0, "property suite took {dt:.1}s (budget 60s)");
    println!("[criterion 6] PASS basis and operator properties ({dt:.1}s)");
}

#[test]
fn criterion_7_adaptivity_structure() {
    let _guard = serial();
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xadab);
    let mut cycles = 0usize;
    while cycles < 500 {
        let d = rng.gen_range(1..=3usize);
        let n_max = rng.gen_range(2..=4usize);
        let mut sol = DGSolution::<f64>::with_keys(
            d,
            1,
            lagr_params(),
            1,
            n_max,
            true,
            enumerate_initial(d, rng.gen_range(0..=1usize), true),
        )
        .unwrap();
        let eps = 10f64.powf(rng.gen_range(-4.0..-1.0));
        let cfg = AdaptConfig::new(eps, 0.1 * eps, n_max, vec![0]).unwrap();
        for _ in 0..rng.gen_range(1..=4usize) {
            let keys: Vec<ElementKey> = sol.set.keys().cloned().collect();
            for key in keys {
                let elem = sol.set.get_mut(&key).unwrap();
                for c in &mut elem.alpt[0] {
                    *c = rng.gen_range(-1.0..1.0) * 10f64.powf(rng.gen_range(-6.0..0.0));
                }
            }
            refine(&mut sol, &cfg);
            check_structure(&sol);
            // protected elements: indicator >= eta must survive coarsening
            let protected: Vec<ElementKey> = sol
                .set
                .iter()
                .filter(|(_, e)| indicator(e, &[0]) >= cfg.coarsen_eta)
                .map(|(k, _)| k.clone())
                .collect();
            let report = coarsen(&mut sol, &cfg);
            check_structure(&sol);
            for key in &protected {
                assert!(
                    sol.set.contains(key),
                    "coarsen removed element {key} with indicator >= eta"
                );
            }
            for removed in &report.removed {
                assert!(!sol.set.contains(removed));
            }
            cycles += 1;
            if cycles >= 500 {
                break;
            }
        }
    }
    let dt = started.elapsed().as_secs_f64();
    assert!(dt < 60.0, "adaptivity suite took {dt:.1}s (budget 60s)");
    println!("[criterion 7] PASS adaptivity structure (500 cycles, {dt:.1}s)");
}

fn check_structure(sol: &DGSolution<f64>) {
    assert!(sol.set.is_downward_closed());
    // leaf registry equals its from-scratch recomputation (it *is* computed
    // from scratch; verify its defining predicate directly)
    let registry = LeafRegistry::compute(sol);
    for key in sol.set.keys() {
        let children = key.children(sol.set.n_max);
        let present = children.iter().filter(|c| sol.set.contains(c)).count();
        let is_leaf = present < children.len() || children.is_empty();
        assert_eq!(registry.leaf.contains(key), is_leaf);
        assert_eq!(registry.zero_child.contains(key), present == 0);
    }
    // global ordering is a bijection
    let mut seen = std::collections::HashSet::new();
    for key in sol.ordered_keys() {
        assert!(seen.insert(sol.dof_offset(key).unwrap()));
    }
    assert_eq!(seen.len(), sol.n_elements());
}

#[test]
fn criterion_8_cpu_time_scales_with_dof() {
    let _guard = serial();
    let started = Instant::now();
    let mut logs: Vec<(f64, f64)> = Vec::new();
    for n in [5usize, 6, 7, 8] {
        let stats = run_transport(&TransportProblem::<f64>::new(2, 1, n)).unwrap();
        println!(
            "  transport d=2 k=1 N={n}: dof {} sec/step {:.3e}",
            stats.dof, stats.seconds_per_step
        );
        logs.push(((stats.dof as f64).ln(), stats.seconds_per_step.ln()));
    }
    // least-squares slope of log(time) vs log(dof)
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|(x, _)| x).sum();
    let sy: f64 = logs.iter().map(|(_, y)| y).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!(
        (slope - 1.0).abs() <= 0.3,
        "wall time grows with DOF at exponent {slope:.2}, outside 1.0 ± 0.3"
    );
    println!(
        "[criterion 8] PASS cpu-time scaling (exponent {slope:.2}, {:.1}s)",
        started.elapsed().as_secs_f64()
    );
}
