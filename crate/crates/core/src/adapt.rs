//! Refinement and coarsening of the active element set, driven by the l2
//! norm of per-element Alpert coefficients.
//!
//! `refine` sweeps the leaves present before the call, adds every absent
//! child of a leaf whose indicator exceeds ε, then completes missing
//! ancestors so no hole is left. `coarsen` repeatedly removes childless
//! leaves whose indicator falls below η until nothing changes; the root
//! always stays. Both rebuild the leaf bookkeeping and the global ordering.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::grid::ElementKey;
use crate::real::Real;
use crate::solution::{DGSolution, Element};

/// Thresholds and scope of the adaptive procedure.
#[derive(Debug, Clone)]
pub struct AdaptConfig<R> {
    pub refine_eps: R,
    /// Negative value disables coarsening.
    pub coarsen_eta: R,
    pub n_max: usize,
    pub indicator_vars: Vec<usize>,
}

impl<R: Real> AdaptConfig<R> {
    pub fn new(
        refine_eps: R,
        coarsen_eta: R,
        n_max: usize,
        indicator_vars: Vec<usize>,
    ) -> Result<Self> {
        if refine_eps <= R::zero() {
            return Err(Error::InvalidParameter(
                "refine_eps must be positive".into(),
            ));
        }
        if coarsen_eta >= refine_eps {
            return Err(Error::InvalidParameter(
                "coarsen_eta must stay below refine_eps".into(),
            ));
        }
        Ok(Self {
            refine_eps,
            coarsen_eta,
            n_max,
            indicator_vars,
        })
    }
}

/// Leaf bookkeeping, exactly recomputable from the element set.
///
/// An element is a leaf when at least one admissible child is absent; an
/// element whose level cap admits no children at all also counts (so it can
/// still be coarsened away). The zero-child subset holds leaves with no
/// children present.
#[derive(Debug, Default)]
pub struct LeafRegistry {
    pub leaf: HashSet<ElementKey>,
    pub zero_child: HashSet<ElementKey>,
}

impl LeafRegistry {
    pub fn compute<R: Real>(sol: &DGSolution<R>) -> Self {
        let n_max = sol.set.n_max;
        let mut leaf = HashSet::new();
        let mut zero_child = HashSet::new();
        for key in sol.set.keys() {
            let children = key.children(n_max);
            let present = children.iter().filter(|c| sol.set.contains(c)).count();
            if present < children.len() || children.is_empty() {
                leaf.insert(key.clone());
            }
            if present == 0 {
                zero_child.insert(key.clone());
            }
        }
        Self { leaf, zero_child }
    }
}

/// Euclidean norm of the Alpert coefficients over the indicator variables.
pub fn indicator<R: Real>(elem: &Element<R>, vars: &[usize]) -> R {
    vars.iter()
        .map(|&v| elem.alpt[v].iter().map(|&c| c * c).sum::<R>())
        .sum::<R>()
        .sqrt()
}

#[derive(Debug, Default)]
pub struct RefineReport {
    pub added: Vec<ElementKey>,
    pub dof_after: usize,
}

#[derive(Debug, Default)]
pub struct CoarsenReport {
    pub removed: Vec<ElementKey>,
    pub dof_after: usize,
}

/// Single-pass refinement over the pre-call leaf set.
pub fn refine<R: Real>(sol: &mut DGSolution<R>, cfg: &AdaptConfig<R>) -> RefineReport {
    for elem in sol.set.values_mut() {
        elem.new_add = false;
    }
    let registry = LeafRegistry::compute(sol);
    let mut added = Vec::new();
    for key in &registry.leaf {
        let ind = indicator(sol.set.get(key).unwrap(), &cfg.indicator_vars);
        if ind <= cfg.refine_eps {
            continue;
        }
        for child in key.children(cfg.n_max) {
            if !sol.set.contains(&child) {
                sol.insert_zero_element(child.clone(), true);
                added.push(child);
            }
        }
    }
    // ancestor completion: no hole is allowed
    let mut queue: Vec<ElementKey> = added.clone();
    while let Some(key) = queue.pop() {
        for parent in key.parents() {
            if !sol.set.contains(&parent) {
                sol.insert_zero_element(parent.clone(), true);
                added.push(parent.clone());
                queue.push(parent);
            }
        }
    }
    sol.rebuild_order();
    debug_assert!(sol.set.is_downward_closed());
    RefineReport {
        added,
        dof_after: sol.total_dof(),
    }
}

/// Fixed-point removal of childless leaves below η; no-op for negative η.
pub fn coarsen<R: Real>(sol: &mut DGSolution<R>, cfg: &AdaptConfig<R>) -> CoarsenReport {
    let mut removed = Vec::new();
    if cfg.coarsen_eta >= R::zero() {
        loop {
            let registry = LeafRegistry::compute(sol);
            let mut doomed: Vec<ElementKey> = registry
                .zero_child
                .iter()
                .filter(|key| !key.is_root())
                .filter(|key| {
                    indicator(sol.set.get(key).unwrap(), &cfg.indicator_vars) < cfg.coarsen_eta
                })
                .cloned()
                .collect();
            if doomed.is_empty() {
                break;
            }
            doomed.sort();
            for key in doomed {
                sol.set.remove(&key);
                removed.push(key);
            }
        }
    }
    sol.rebuild_order();
    debug_assert!(sol.set.is_downward_closed());
    CoarsenReport {
        removed,
        dof_after: sol.total_dof(),
    }
}
