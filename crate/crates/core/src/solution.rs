//! The DG solution: an adaptive element set carrying per-element coefficient
//! blocks, a deterministic global DOF ordering, initialization from separable
//! data, point evaluation, and coefficient-space error measurement.
//!
//! Coefficient layout per element and unknown variable: the Alpert block has
//! `(k+1)^d` entries and the interpolation block `(M+1)^d`, both indexed by
//! degree tuples with dimension 0 fastest. The global ordering enumerates
//! elements in key order (levels, then supports, lexicographic), so it is a
//! bijection that is rebuilt after every refinement or coarsening and is
//! stable across runs.

use crate::basis1d::{AlpertFamily, Basis1DIndex, Family1D, InterpolatoryFamily};
use crate::error::{Error, Result};
use crate::grid::{enumerate_initial, ElementKey, IndexSet};
use crate::poly::Side;
use crate::quadrature::GaussLegendre;
use crate::real::Real;
use std::collections::HashMap;

/// Shape parameters of the interpolatory blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterpParams {
    pub points_per_cell: usize,
    pub deriv_order: usize,
}

impl InterpParams {
    pub fn of<R: Real>(family: &InterpolatoryFamily<R>) -> Self {
        Self {
            points_per_cell: family.points_per_cell(),
            deriv_order: family.deriv_order(),
        }
    }

    /// M = (P+1)(K+1) - 1.
    pub fn poly_degree(&self) -> usize {
        self.points_per_cell * (self.deriv_order + 1) - 1
    }
}

/// Number of entries in a degree-tuple block.
pub fn block_len(per: usize, dim: usize) -> usize {
    per.pow(dim as u32)
}

/// Iterates all degree tuples of a block, dimension 0 fastest.
pub struct DegreeTuples {
    per: usize,
    tuple: Vec<usize>,
    done: bool,
}

impl DegreeTuples {
    pub fn new(per: usize, dim: usize) -> Self {
        Self {
            per,
            tuple: vec![0; dim],
            done: per == 0,
        }
    }
}

impl Iterator for DegreeTuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.tuple.clone();
        let mut m = 0;
        loop {
            if m == self.tuple.len() {
                self.done = true;
                break;
            }
            self.tuple[m] += 1;
            if self.tuple[m] < self.per {
                break;
            }
            self.tuple[m] = 0;
            m += 1;
        }
        Some(out)
    }
}

/// Flat position of a degree tuple (dimension 0 fastest).
pub fn tuple_index(tuple: &[usize], per: usize) -> usize {
    let mut idx = 0;
    for &p in tuple.iter().rev() {
        idx = idx * per + p;
    }
    idx
}

/// Per-element storage: one coefficient block of each kind per variable.
#[derive(Debug, Clone)]
pub struct Element<R> {
    pub alpt: Vec<Vec<R>>,
    pub intp: Vec<Vec<R>>,
    pub rhs: Vec<Vec<R>>,
    pub predict: Vec<Vec<R>>,
    pub new_add: bool,
}

impl<R: Real> Element<R> {
    fn zeroed(n_vars: usize, alpt_len: usize, intp_len: usize) -> Self {
        Self {
            alpt: vec![vec![R::zero(); alpt_len]; n_vars],
            intp: vec![vec![R::zero(); intp_len]; n_vars],
            rhs: vec![vec![R::zero(); alpt_len]; n_vars],
            predict: vec![vec![R::zero(); alpt_len]; n_vars],
            new_add: false,
        }
    }
}

/// One separable term `weight * Π_m factor_m(x_m)`.
pub struct SeparableTerm<'a, R> {
    pub weight: R,
    pub factors: Vec<&'a dyn Fn(R) -> R>,
}

/// The DG solution over a downward-closed element set.
#[derive(Debug, Clone)]
pub struct DGSolution<R> {
    pub dim: usize,
    pub alpt_degree: usize,
    pub interp: InterpParams,
    pub n_vars: usize,
    pub set: IndexSet<Element<R>>,
    ordered: Vec<ElementKey>,
    offsets: HashMap<ElementKey, usize>,
    snapshot_taken: bool,
}

impl<R: Real> DGSolution<R> {
    /// A solution over the standard initial set: `|l|_1 <= n_max` (sparse)
    /// or `|l|_inf <= n_max` (full).
    pub fn new(
        dim: usize,
        alpt_degree: usize,
        interp: InterpParams,
        n_vars: usize,
        n_max: usize,
        sparse: bool,
    ) -> Result<Self> {
        let keys = enumerate_initial(dim, n_max, sparse);
        Self::with_keys(dim, alpt_degree, interp, n_vars, n_max, sparse, keys)
    }

    /// A solution over an explicit key set (must be downward closed).
    pub fn with_keys(
        dim: usize,
        alpt_degree: usize,
        interp: InterpParams,
        n_vars: usize,
        n_max: usize,
        sparse: bool,
        keys: Vec<ElementKey>,
    ) -> Result<Self> {
        if dim == 0 || n_vars == 0 {
            return Err(Error::InvalidParameter(
                "dimension and variable count must be positive".into(),
            ));
        }
        let alpt_len = block_len(alpt_degree + 1, dim);
        let intp_len = block_len(interp.poly_degree() + 1, dim);
        let mut set = IndexSet::empty(n_max, sparse);
        for key in keys {
            if key.dim() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "key {key} has wrong dimension"
                )));
            }
            set.insert(key, Element::zeroed(n_vars, alpt_len, intp_len));
        }
        if !set.is_downward_closed() {
            return Err(Error::NotDownwardClosed);
        }
        let mut sol = Self {
            dim,
            alpt_degree,
            interp,
            n_vars,
            set,
            ordered: Vec::new(),
            offsets: HashMap::new(),
            snapshot_taken: false,
        };
        sol.rebuild_order();
        Ok(sol)
    }

    pub fn alpt_per_dim(&self) -> usize {
        self.alpt_degree + 1
    }

    pub fn intp_per_dim(&self) -> usize {
        self.interp.poly_degree() + 1
    }

    pub fn alpt_block_len(&self) -> usize {
        block_len(self.alpt_per_dim(), self.dim)
    }

    pub fn intp_block_len(&self) -> usize {
        block_len(self.intp_per_dim(), self.dim)
    }

    /// DOF count of one variable.
    pub fn total_dof(&self) -> usize {
        self.set.len() * self.alpt_block_len()
    }

    pub fn n_elements(&self) -> usize {
        self.set.len()
    }

    /// Inserts a zero element (used by refinement). The caller maintains
    /// downward closure and rebuilds the ordering afterwards.
    pub fn insert_zero_element(&mut self, key: ElementKey, new_add: bool) {
        let mut elem = Element::zeroed(self.n_vars, self.alpt_block_len(), self.intp_block_len());
        elem.new_add = new_add;
        self.set.insert(key, elem);
    }

    /// Elements in key order together with their DOF offsets.
    pub fn ordered_keys(&self) -> &[ElementKey] {
        &self.ordered
    }

    pub fn dof_offset(&self, key: &ElementKey) -> Option<usize> {
        self.offsets.get(key).copied()
    }

    /// Recomputes the deterministic element ordering and DOF offsets.
    pub fn rebuild_order(&mut self) {
        let mut keys: Vec<ElementKey> = self.set.keys().cloned().collect();
        keys.sort();
        self.offsets.clear();
        let block = self.alpt_block_len();
        for (i, k) in keys.iter().enumerate() {
            self.offsets.insert(k.clone(), i * block);
        }
        self.ordered = keys;
    }

    /// Largest active level in each dimension.
    pub fn max_level_per_dim(&self) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for key in self.set.keys() {
            for m in 0..self.dim {
                out[m] = out[m].max(key.level(m));
            }
        }
        out
    }

    pub fn max_active_level(&self) -> usize {
        self.max_level_per_dim().into_iter().max().unwrap_or(0)
    }

    /// Copies one variable's Alpert coefficients into a dense vector.
    pub fn gather(&self, var: usize) -> Vec<R> {
        let block = self.alpt_block_len();
        let mut out = vec![R::zero(); self.total_dof()];
        for key in &self.ordered {
            let off = self.offsets[key];
            let elem = self.set.get(key).unwrap();
            out[off..off + block].copy_from_slice(&elem.alpt[var]);
        }
        out
    }

    /// Writes a dense vector back into one variable's Alpert coefficients.
    pub fn scatter(&mut self, var: usize, values: &[R]) {
        assert_eq!(values.len(), self.total_dof(), "vector length mismatch");
        let block = self.alpt_block_len();
        let ordered = std::mem::take(&mut self.ordered);
        for key in &ordered {
            let off = self.offsets[key];
            let elem = self.set.get_mut(key).unwrap();
            elem.alpt[var].copy_from_slice(&values[off..off + block]);
        }
        self.ordered = ordered;
    }

    pub fn gather_rhs(&self, var: usize) -> Vec<R> {
        let block = self.alpt_block_len();
        let mut out = vec![R::zero(); self.total_dof()];
        for key in &self.ordered {
            let off = self.offsets[key];
            out[off..off + block].copy_from_slice(&self.set.get(key).unwrap().rhs[var]);
        }
        out
    }

    pub fn set_rhs_zero(&mut self) {
        for elem in self.set.values_mut() {
            for block in &mut elem.rhs {
                block.iter_mut().for_each(|v| *v = R::zero());
            }
        }
    }

    /// L2 norm of one variable; by orthonormality this is the l2 norm of the
    /// Alpert coefficients. Accumulation runs in key order so results are
    /// bit-stable across runs.
    pub fn l2_norm(&self, var: usize) -> R {
        self.ordered
            .iter()
            .map(|k| {
                let e = self.set.get(k).unwrap();
                e.alpt[var].iter().map(|&c| c * c).sum::<R>()
            })
            .sum::<R>()
            .sqrt()
    }

    /// Projects a weighted sum of separable terms onto the active set: each
    /// 1D factor is projected onto every 1D Alpert function by composite
    /// Gauss quadrature on the finest cells, and the multi-D coefficients
    /// are weighted products of the 1D ones.
    pub fn init_separable_sum(
        &mut self,
        family: &AlpertFamily<R>,
        var: usize,
        terms: &[SeparableTerm<'_, R>],
    ) -> Result<()> {
        let per = self.alpt_per_dim();
        let n1d = family.len();
        let mut tables: Vec<Vec<Vec<R>>> = Vec::with_capacity(terms.len());
        for term in terms {
            if term.factors.len() != self.dim {
                return Err(Error::ShapeMismatch(format!(
                    "separable term has {} factors for dimension {}",
                    term.factors.len(),
                    self.dim
                )));
            }
            let mut per_dim = Vec::with_capacity(self.dim);
            for m in 0..self.dim {
                per_dim.push(project_1d(family, term.factors[m], self.set.n_max)?);
            }
            debug_assert_eq!(per_dim[0].len(), n1d);
            tables.push(per_dim);
        }
        let keys = self.ordered.clone();
        for key in &keys {
            let elem = self.set.get_mut(key).unwrap();
            for tuple in DegreeTuples::new(per, self.dim) {
                let flat = tuple_index(&tuple, per);
                let mut acc = R::zero();
                for (t, term) in terms.iter().enumerate() {
                    let mut prod = term.weight;
                    for m in 0..self.dim {
                        let idx = Basis1DIndex::new(key.level(m), key.support(m), tuple[m]);
                        prod *= tables[t][m][family.flat_index(&idx)];
                    }
                    acc += prod;
                }
                elem.alpt[var][flat] = acc;
            }
        }
        Ok(())
    }

    /// Point value of the expansion; dyadic interfaces use the left-limit
    /// convention unless sides are given explicitly.
    pub fn eval_at(&self, family: &AlpertFamily<R>, x: &[R], var: usize) -> R {
        self.eval_at_sides(family, x, &vec![Side::Minus; self.dim], var)
    }

    pub fn eval_at_sides(
        &self,
        family: &AlpertFamily<R>,
        x: &[R],
        sides: &[Side],
        var: usize,
    ) -> R {
        assert_eq!(x.len(), self.dim);
        let per = self.alpt_per_dim();
        let mut acc = R::zero();
        let mut vals1d = vec![R::zero(); self.dim * per];
        for key in &self.ordered {
            let elem = self.set.get(key).unwrap();
            let mut supported = true;
            for m in 0..self.dim {
                for p in 0..per {
                    let idx = Basis1DIndex::new(key.level(m), key.support(m), p);
                    vals1d[m * per + p] = family
                        .eval(&idx, x[m], 0, sides[m])
                        .expect("index valid by construction");
                }
                if vals1d[m * per..(m + 1) * per]
                    .iter()
                    .all(|v| *v == R::zero())
                {
                    supported = false;
                    break;
                }
            }
            if !supported {
                continue;
            }
            for tuple in DegreeTuples::new(per, self.dim) {
                let c = elem.alpt[var][tuple_index(&tuple, per)];
                if c == R::zero() {
                    continue;
                }
                let mut prod = c;
                for m in 0..self.dim {
                    prod *= vals1d[m * per + tuple[m]];
                }
                acc += prod;
            }
        }
        acc
    }

    /// Coefficient-space L2 distance over the union of the element sets;
    /// elements missing on one side contribute their full coefficient norm.
    pub fn l2_error_against(
        &self,
        other: &DGSolution<R>,
        var: usize,
        var_other: usize,
    ) -> Result<R> {
        if self.dim != other.dim || self.alpt_degree != other.alpt_degree {
            return Err(Error::ShapeMismatch(
                "solutions must share dimension and degree".into(),
            ));
        }
        // key order on both sides keeps the accumulation bit-stable
        let mut acc = R::zero();
        for key in &self.ordered {
            let elem = self.set.get(key).unwrap();
            match other.set.get(key) {
                Some(oe) => {
                    for (a, b) in elem.alpt[var].iter().zip(&oe.alpt[var_other]) {
                        let d = *a - *b;
                        acc += d * d;
                    }
                }
                None => {
                    for &a in &elem.alpt[var] {
                        acc += a * a;
                    }
                }
            }
        }
        for key in other.ordered_keys() {
            if !self.set.contains(key) {
                for &b in &other.set.get(key).unwrap().alpt[var_other] {
                    acc += b * b;
                }
            }
        }
        Ok(acc.sqrt())
    }

    /// Copies Alpert coefficients into the predict buffers.
    pub fn snapshot_to_predict(&mut self) {
        for elem in self.set.values_mut() {
            for (dst, src) in elem.predict.iter_mut().zip(&elem.alpt) {
                dst.copy_from_slice(src);
            }
        }
        self.snapshot_taken = true;
    }

    /// Restores Alpert coefficients from the predict buffers; elements added
    /// after the snapshot keep their zero buffers.
    pub fn restore_from_predict(&mut self) -> Result<()> {
        if !self.snapshot_taken {
            return Err(Error::NoSnapshot);
        }
        for elem in self.set.values_mut() {
            for (dst, src) in elem.alpt.iter_mut().zip(&elem.predict) {
                dst.copy_from_slice(src);
            }
        }
        Ok(())
    }

    pub fn snapshot_taken(&self) -> bool {
        self.snapshot_taken
    }

    // --- snapshot export ----------------------------------------------------

    /// Writes the Alpert coefficients as CSV rows
    /// `levels,supports,variable,degrees,coefficient`, vectors joined by `;`,
    /// coefficients with 17 significant digits.
    pub fn export_csv(&self, w: &mut impl std::io::Write) -> Result<()> {
        writeln!(w, "levels,supports,variable,degrees,coefficient")?;
        let per = self.alpt_per_dim();
        for key in &self.ordered {
            let elem = self.set.get(key).unwrap();
            let levels = join_semicolon(key.levels().iter().map(|l| l.to_string()));
            let supports = join_semicolon(key.supports().iter().map(|j| j.to_string()));
            for var in 0..self.n_vars {
                for tuple in DegreeTuples::new(per, self.dim) {
                    let degrees = join_semicolon(tuple.iter().map(|p| p.to_string()));
                    let c = elem.alpt[var][tuple_index(&tuple, per)];
                    writeln!(w, "{levels},{supports},{var},{degrees},{:.16e}", c.as_f64())?;
                }
            }
        }
        Ok(())
    }

    /// Reloads a snapshot produced by [`DGSolution::export_csv`], creating
    /// elements as needed.
    pub fn import_csv(&mut self, r: impl std::io::BufRead) -> Result<()> {
        let per = self.alpt_per_dim();
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty snapshot".into()))??;
        if header.trim() != "levels,supports,variable,degrees,coefficient" {
            return Err(Error::InvalidParameter(
                "unrecognized snapshot header".into(),
            ));
        }
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::InvalidParameter(format!(
                    "snapshot row with {} fields",
                    fields.len()
                )));
            }
            let levels = parse_semicolon::<u8>(fields[0])?;
            let supports = parse_semicolon::<u32>(fields[1])?;
            let var: usize = fields[2]
                .parse()
                .map_err(|_| Error::InvalidParameter("bad variable index".into()))?;
            let degrees = parse_semicolon::<usize>(fields[3])?;
            let value: f64 = fields[4]
                .parse()
                .map_err(|_| Error::InvalidParameter("bad coefficient".into()))?;
            let key = ElementKey::new(levels, supports)?;
            if key.dim() != self.dim || var >= self.n_vars || degrees.len() != self.dim {
                return Err(Error::ShapeMismatch("snapshot row shape".into()));
            }
            if !self.set.contains(&key) {
                self.insert_zero_element(key.clone(), false);
            }
            let flat = tuple_index(&degrees, per);
            self.set.get_mut(&key).unwrap().alpt[var][flat] = R::of(value);
        }
        if !self.set.is_downward_closed() {
            return Err(Error::NotDownwardClosed);
        }
        self.rebuild_order();
        Ok(())
    }
}

fn join_semicolon(parts: impl Iterator<Item = String>) -> String {
    parts.collect::<Vec<_>>().join(";")
}

fn parse_semicolon<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(';')
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| Error::InvalidParameter(format!("bad vector component {p}")))
        })
        .collect()
}

/// 1D L2 projection of `g` onto every family function, by Gauss quadrature
/// of order k+3 composed over the finest cells.
fn project_1d<R: Real>(
    family: &AlpertFamily<R>,
    g: &dyn Fn(R) -> R,
    n_max: usize,
) -> Result<Vec<R>> {
    let quad = GaussLegendre::new(family.max_degree() + 3);
    let cell = R::inv_pow2(n_max);
    let cells = 1usize << n_max;
    let mut coefs = Vec::with_capacity(family.len());
    for f in family.functions() {
        let (lo, hi) = f.poly.support().unwrap();
        let first = (lo / cell).as_f64().round() as usize;
        let last = (hi / cell).as_f64().round() as usize;
        let mut acc = R::zero();
        for c in first..last.min(cells) {
            let a = R::of_usize(c) * cell;
            let b = a + cell;
            acc += quad.integrate(a, b, |x| g(x) * f.poly.eval(x, 0, Side::Minus));
        }
        if !acc.is_finite() {
            return Err(Error::NonFinite("1D projection quadrature".into()));
        }
        coefs.push(acc);
    }
    Ok(coefs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::enumerate_initial;

    fn lagr_params() -> InterpParams {
        InterpParams {
            points_per_cell: 2,
            deriv_order: 0,
        }
    }

    fn full_solution(dim: usize, k: usize, n: usize, vars: usize) -> DGSolution<f64> {
        DGSolution::new(dim, k, lagr_params(), vars, n, false).unwrap()
    }

    #[test]
    fn tuple_iteration_covers_block() {
        let tuples: Vec<_> = DegreeTuples::new(3, 2).collect();
        assert_eq!(tuples.len(), 9);
        assert_eq!(tuples[0], vec![0, 0]);
        assert_eq!(tuples[1], vec![1, 0]); // dimension 0 fastest
        for (i, t) in tuples.iter().enumerate() {
            assert_eq!(tuple_index(t, 3), i);
        }
    }

    #[test]
    fn gather_scatter_roundtrip() {
        let mut sol = full_solution(2, 1, 3, 1);
        let n = sol.total_dof();
        let vec: Vec<f64> = (0..n).map(|i| i as f64 * 0.25 - 3.0).collect();
        sol.scatter(0, &vec);
        assert_eq!(sol.gather(0), vec);
    }

    #[test]
    fn constant_init_lives_on_root() {
        let fam = AlpertFamily::<f64>::new(1, 4).unwrap();
        let mut sol = DGSolution::new(2, 1, lagr_params(), 1, 4, true).unwrap();
        let one = |_: f64| 1.0;
        sol.init_separable_sum(
            &fam,
            0,
            &[SeparableTerm {
                weight: 1.0,
                factors: vec![&one, &one],
            }],
        )
        .unwrap();
        for (key, elem) in sol.set.iter() {
            for (i, &c) in elem.alpt[0].iter().enumerate() {
                let want = if key.is_root() && i == 0 { 1.0 } else { 0.0 };
                assert!((c - want).abs() < 1e-12, "{key} slot {i}: {c}");
            }
        }
        for x in [[0.2, 0.7], [0.5, 0.5], [0.99, 0.01]] {
            assert!((sol.eval_at(&fam, &x, 0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projects_product_polynomial_exactly() {
        // x1 * x2 lies in the full-grid space for k = 1
        let fam = AlpertFamily::<f64>::new(1, 3).unwrap();
        let mut sol = full_solution(2, 1, 3, 1);
        let id = |x: f64| x;
        sol.init_separable_sum(
            &fam,
            0,
            &[SeparableTerm {
                weight: 1.0,
                factors: vec![&id, &id],
            }],
        )
        .unwrap();
        let got = sol.eval_at(&fam, &[0.3, 0.7], 0);
        assert!((got - 0.21).abs() < 1e-10, "got {got}");
        // linearity in the coefficients
        let coefs = sol.gather(0);
        let scaled: Vec<f64> = coefs.iter().map(|c| 2.5 * c).collect();
        sol.scatter(0, &scaled);
        let got2 = sol.eval_at(&fam, &[0.3, 0.7], 0);
        assert!((got2 - 2.5 * got).abs() < 1e-11);
    }

    #[test]
    fn parseval_matches_tensor_quadrature() {
        // pseudo-random coefficients on a small full grid: the L2 norm from
        // tensor quadrature equals the coefficient norm
        let fam = AlpertFamily::<f64>::new(1, 2).unwrap();
        let mut sol = full_solution(2, 1, 2, 1);
        let n = sol.total_dof();
        let coefs: Vec<f64> = (0..n)
            .map(|i| ((i * 2654435761 + 13) % 1000) as f64 / 500.0 - 1.0)
            .collect();
        sol.scatter(0, &coefs);
        let quad = GaussLegendre::<f64>::new(4);
        let cells = 1usize << 2;
        let h = 0.25;
        let mut norm_sq = 0.0;
        for cx in 0..cells {
            for cy in 0..cells {
                for (&nx, &wx) in quad.nodes.iter().zip(&quad.weights) {
                    for (&ny, &wy) in quad.nodes.iter().zip(&quad.weights) {
                        let x = (cx as f64 + 0.5 + 0.5 * nx) * h;
                        let y = (cy as f64 + 0.5 + 0.5 * ny) * h;
                        let v = sol.eval_at(&fam, &[x, y], 0);
                        norm_sq += wx * wy * v * v * (h * h / 4.0);
                    }
                }
            }
        }
        let coef_norm = sol.l2_norm(0);
        assert!(
            (norm_sq.sqrt() - coef_norm).abs() < 1e-10,
            "{} vs {coef_norm}",
            norm_sq.sqrt()
        );
    }

    #[test]
    fn l2_error_cases() {
        let mut a = full_solution(2, 1, 2, 1);
        let b = full_solution(2, 1, 2, 1);
        assert_eq!(a.l2_error_against(&b, 0, 0).unwrap(), 0.0);
        // single coefficient bump
        let mut v = a.gather(0);
        v[7] = 3e-4;
        a.scatter(0, &v);
        let err = a.l2_error_against(&b, 0, 0).unwrap();
        assert!((err - 3e-4).abs() < 1e-18);
        // missing elements contribute their full norm
        let small = DGSolution::<f64>::with_keys(
            2,
            1,
            lagr_params(),
            1,
            2,
            true,
            enumerate_initial(2, 0, true),
        )
        .unwrap();
        let err2 = a.l2_error_against(&small, 0, 0).unwrap();
        assert!((err2 - 3e-4).abs() < 1e-18);
    }

    #[test]
    fn snapshot_restore_semantics() {
        let mut sol = full_solution(1, 1, 2, 1);
        assert!(sol.restore_from_predict().is_err());
        let v: Vec<f64> = (0..sol.total_dof()).map(|i| i as f64).collect();
        sol.scatter(0, &v);
        sol.snapshot_to_predict();
        let w: Vec<f64> = v.iter().map(|x| x + 100.0).collect();
        sol.scatter(0, &w);
        sol.restore_from_predict().unwrap();
        assert_eq!(sol.gather(0), v);
    }

    #[test]
    fn csv_roundtrip_bit_exact() {
        let mut sol = full_solution(2, 1, 2, 2);
        let n = sol.total_dof();
        let v0: Vec<f64> = (0..n).map(|i| (i as f64 + 0.1) / 3.0).collect();
        let v1: Vec<f64> = (0..n).map(|i| (i as f64).sin() * 1e-7).collect();
        sol.scatter(0, &v0);
        sol.scatter(1, &v1);
        let mut buf = Vec::new();
        sol.export_csv(&mut buf).unwrap();
        let mut back = full_solution(2, 1, 2, 2);
        back.import_csv(std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(back.gather(0), v0);
        assert_eq!(back.gather(1), v1);
    }

    #[test]
    fn rejects_non_closed_key_set() {
        let keys = vec![ElementKey::new(vec![2], vec![1]).unwrap()];
        assert!(matches!(
            DGSolution::<f64>::with_keys(1, 1, lagr_params(), 1, 3, true, keys),
            Err(Error::NotDownwardClosed)
        ));
    }
}
