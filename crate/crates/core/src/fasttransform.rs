//! Fast dimension-by-dimension matrix-vector products over downward-closed
//! index sets.
//!
//! The product being computed is, for every target index in the set G,
//! a sum over all source indices in G weighted by a product of 1D matrix
//! entries, one matrix per dimension. Evaluating that sum dimension by
//! dimension (a 1D contraction per pass, all other dimensions held fixed)
//! restricts the intermediates to G and is exact whenever the already-passed
//! matrices are lower triangular in level and the still-pending ones upper
//! triangular. Splitting the first d-1 matrices into level-lower and
//! level-upper parts therefore turns an arbitrary product into 2^(d-1)
//! dimension-by-dimension terms: per term, the lower passes run first, then
//! the full matrix of the last dimension, then the upper passes.
//!
//! For adaptive (not level-determined) sets the split argument additionally
//! needs the matrices to be *hierarchical*: a nonzero entry must couple 1D
//! elements that sit on one ancestor chain. All basis-transform and volume
//! matrices used here have that property and
//! [`TransformMatrix::is_hierarchical`] asserts it; interface matrices
//! couple neighboring supports as well, which is exact on sparse/full level
//! sets and the standard mild approximation on general adaptive sets.

use std::collections::{HashMap, HashSet};

use crate::basis1d::{AlpertFamily, Family1D, InterpolatoryFamily};
use crate::error::{Error, Result};
use crate::grid::ElementKey;
use crate::linalg::DMat;
use crate::opmat1d::{build_operator_matrix, BoundaryCondition, OperatorKind, OperatorMatrix1D};
use crate::poly::Side;
use crate::real::Real;
use crate::solution::{DGSolution, DegreeTuples};

/// Where same-level entries go in the lower/upper split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriSide {
    Lower,
    Upper,
}

/// A 1D transform over the global basis ordering, with per-element block
/// sparsity index.
#[derive(Debug, Clone)]
pub struct TransformMatrix<R> {
    pub src_per_elem: usize,
    pub tgt_per_elem: usize,
    pub max_level: usize,
    mat: DMat<R>,
    /// blocks[src_code] = target element codes with a nonzero block.
    blocks: Vec<Vec<u32>>,
}

fn level_of_code(code: usize) -> usize {
    if code == 0 {
        0
    } else {
        usize::BITS as usize - code.leading_zeros() as usize
    }
}

/// Two element codes lie on one ancestor chain of the dyadic tree.
/// The parent of code c is c >> 1.
fn codes_related(a: usize, b: usize) -> bool {
    let (mut hi, lo) = if a >= b { (a, b) } else { (b, a) };
    while hi > lo {
        hi >>= 1;
    }
    hi == lo
}

impl<R: Real> TransformMatrix<R> {
    pub fn from_dense(
        mat: DMat<R>,
        src_per_elem: usize,
        tgt_per_elem: usize,
        max_level: usize,
    ) -> Self {
        let codes = 1usize << max_level;
        assert_eq!(mat.rows(), src_per_elem * codes);
        assert_eq!(mat.cols(), tgt_per_elem * codes);
        let mut blocks = vec![Vec::new(); codes];
        for (src_code, list) in blocks.iter_mut().enumerate() {
            for tgt_code in 0..codes {
                'scan: for p in 0..src_per_elem {
                    for q in 0..tgt_per_elem {
                        if mat[(src_code * src_per_elem + p, tgt_code * tgt_per_elem + q)]
                            != R::zero()
                        {
                            list.push(tgt_code as u32);
                            break 'scan;
                        }
                    }
                }
            }
        }
        Self {
            src_per_elem,
            tgt_per_elem,
            max_level,
            mat,
            blocks,
        }
    }

    pub fn from_opmat(opm: &OperatorMatrix1D<R>, kind: OperatorKind) -> Self {
        Self::from_dense(
            opm.kind(kind).clone(),
            opm.trial_per_element,
            opm.test_per_element,
            opm.max_level,
        )
    }

    /// Dense composite Σ c_i kind_i lifted into a transform.
    pub fn from_opmat_composite(opm: &OperatorMatrix1D<R>, parts: &[(R, OperatorKind)]) -> Self {
        Self::from_dense(
            opm.composite(parts),
            opm.trial_per_element,
            opm.test_per_element,
            opm.max_level,
        )
    }

    pub fn entry(&self, src: usize, tgt: usize) -> R {
        self.mat[(src, tgt)]
    }

    pub fn dense(&self) -> &DMat<R> {
        &self.mat
    }

    /// Splits into (lower, upper) by source vs target level; same-level
    /// entries go to `diagonal_side`.
    pub fn split(&self, diagonal_side: TriSide) -> (Self, Self) {
        let codes = 1usize << self.max_level;
        let mut lower = DMat::zeros(self.mat.rows(), self.mat.cols());
        let mut upper = DMat::zeros(self.mat.rows(), self.mat.cols());
        for src_code in 0..codes {
            let src_level = level_of_code(src_code);
            for tgt_code in 0..codes {
                let tgt_level = level_of_code(tgt_code);
                let to_lower = match src_level.cmp(&tgt_level) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => diagonal_side == TriSide::Lower,
                };
                let dst = if to_lower { &mut lower } else { &mut upper };
                for p in 0..self.src_per_elem {
                    for q in 0..self.tgt_per_elem {
                        let r = src_code * self.src_per_elem + p;
                        let c = tgt_code * self.tgt_per_elem + q;
                        dst[(r, c)] = self.mat[(r, c)];
                    }
                }
            }
        }
        (
            Self::from_dense(lower, self.src_per_elem, self.tgt_per_elem, self.max_level),
            Self::from_dense(upper, self.src_per_elem, self.tgt_per_elem, self.max_level),
        )
    }

    /// Every nonzero block couples elements on one ancestor chain.
    pub fn is_hierarchical(&self) -> bool {
        self.blocks
            .iter()
            .enumerate()
            .all(|(src, list)| list.iter().all(|&tgt| codes_related(src, tgt as usize)))
    }
}

/// A per-element coefficient field over a fixed key set, with per-dimension
/// slot counts (they mix mid-transform).
#[derive(Debug, Clone)]
pub struct HierField<R> {
    keys: Vec<ElementKey>,
    index: HashMap<ElementKey, usize>,
    pub slots: Vec<usize>,
    pub data: Vec<Vec<R>>,
}

impl<R: Real> HierField<R> {
    pub fn zeros(keys: Vec<ElementKey>, slots: Vec<usize>) -> Self {
        let block: usize = slots.iter().product();
        let index = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect();
        let data = vec![vec![R::zero(); block]; keys.len()];
        Self {
            keys,
            index,
            slots,
            data,
        }
    }

    pub fn from_alpt(sol: &DGSolution<R>, var: usize) -> Self {
        let mut field = Self::zeros(
            sol.ordered_keys().to_vec(),
            vec![sol.alpt_per_dim(); sol.dim],
        );
        for (i, key) in field.keys.iter().enumerate() {
            field.data[i].copy_from_slice(&sol.set.get(key).unwrap().alpt[var]);
        }
        field
    }

    pub fn from_intp(sol: &DGSolution<R>, var: usize) -> Self {
        let mut field = Self::zeros(
            sol.ordered_keys().to_vec(),
            vec![sol.intp_per_dim(); sol.dim],
        );
        for (i, key) in field.keys.iter().enumerate() {
            field.data[i].copy_from_slice(&sol.set.get(key).unwrap().intp[var]);
        }
        field
    }

    pub fn store_intp(&self, sol: &mut DGSolution<R>, var: usize) {
        for (i, key) in self.keys.iter().enumerate() {
            sol.set.get_mut(key).unwrap().intp[var].copy_from_slice(&self.data[i]);
        }
    }

    /// Adds `scale * field` into the per-element rhs blocks.
    pub fn add_to_rhs(&self, sol: &mut DGSolution<R>, var: usize, scale: R) {
        for (i, key) in self.keys.iter().enumerate() {
            let rhs = &mut sol.set.get_mut(key).unwrap().rhs[var];
            for (dst, &src) in rhs.iter_mut().zip(&self.data[i]) {
                *dst += scale * src;
            }
        }
    }

    pub fn keys(&self) -> &[ElementKey] {
        &self.keys
    }

    pub fn dim(&self) -> usize {
        self.slots.len()
    }

    pub fn block_len(&self) -> usize {
        self.slots.iter().product()
    }

    pub fn get(&self, key: &ElementKey) -> Option<&[R]> {
        self.index.get(key).map(|&i| self.data[i].as_slice())
    }

    pub fn add_scaled(&mut self, other: &Self, c: R) {
        assert_eq!(self.slots, other.slots);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += c * y;
            }
        }
    }

    pub fn scale(&mut self, c: R) {
        for block in &mut self.data {
            for x in block.iter_mut() {
                *x *= c;
            }
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        assert_eq!(self.slots, other.slots);
        let mut acc = R::zero();
        for key in &self.keys {
            let a = self.get(key).unwrap();
            let b = other.get(key).expect("fields share keys");
            for (x, y) in a.iter().zip(b) {
                acc = acc.max((*x - *y).abs());
            }
        }
        acc
    }

    pub fn max_abs(&self) -> R {
        self.data
            .iter()
            .flat_map(|b| b.iter())
            .fold(R::zero(), |acc, &v| acc.max(v.abs()))
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.slots.len()];
        for m in 1..self.slots.len() {
            s[m] = s[m - 1] * self.slots[m - 1];
        }
        s
    }
}

/// One pass: contracts dimension `dim` with `t`, all other indices fixed.
/// Output keys are the input keys; sources outside the set contribute
/// nothing.
pub fn transform_along_dim<R: Real>(
    field: &HierField<R>,
    t: &TransformMatrix<R>,
    dim: usize,
) -> HierField<R> {
    assert_eq!(field.slots[dim], t.src_per_elem, "slot/matrix mismatch");
    let mut out_slots = field.slots.clone();
    out_slots[dim] = t.tgt_per_elem;
    let mut out = HierField::zeros(field.keys.clone(), out_slots);

    // group elements by their codes in all dimensions but `dim`
    let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for (i, key) in field.keys.iter().enumerate() {
        let mut sig = Vec::with_capacity(field.dim() - 1);
        for m in 0..field.dim() {
            if m != dim {
                sig.push(key.code(m) as u32);
            }
        }
        groups.entry(sig).or_default().push(i);
    }

    let in_strides = field.strides();
    let out_strides = out.strides();
    let stride_in = in_strides[dim];
    let stride_out = out_strides[dim];

    // bases: flat offsets of all off-dimension slot tuples (p_dim = 0)
    let mut bases: Vec<(usize, usize)> = Vec::new();
    {
        let mut tuple = vec![0usize; field.dim()];
        'outer: loop {
            let bi: usize = tuple
                .iter()
                .zip(&in_strides)
                .enumerate()
                .filter(|(m, _)| *m != dim)
                .map(|(_, (&p, &s))| p * s)
                .sum();
            let bo: usize = tuple
                .iter()
                .zip(&out_strides)
                .enumerate()
                .filter(|(m, _)| *m != dim)
                .map(|(_, (&p, &s))| p * s)
                .sum();
            bases.push((bi, bo));
            let mut m = 0;
            loop {
                if m == field.dim() {
                    break 'outer;
                }
                if m == dim {
                    m += 1;
                    continue;
                }
                tuple[m] += 1;
                if tuple[m] < field.slots[m] {
                    break;
                }
                tuple[m] = 0;
                m += 1;
            }
        }
    }

    for members in groups.values() {
        let mut present: HashMap<u32, usize> = HashMap::with_capacity(members.len());
        for &i in members {
            present.insert(field.keys[i].code(dim) as u32, i);
        }
        for &src_idx in members {
            let src_code = field.keys[src_idx].code(dim);
            let src_block = &field.data[src_idx];
            for &tgt_code in &t.blocks[src_code] {
                let Some(&tgt_idx) = present.get(&tgt_code) else {
                    continue;
                };
                let row0 = src_code * t.src_per_elem;
                let col0 = tgt_code as usize * t.tgt_per_elem;
                let tgt_block = &mut out.data[tgt_idx];
                for &(bi, bo) in &bases {
                    for p in 0..t.src_per_elem {
                        let a = src_block[bi + p * stride_in];
                        if a == R::zero() {
                            continue;
                        }
                        let row = row0 + p;
                        for q in 0..t.tgt_per_elem {
                            tgt_block[bo + q * stride_out] += a * t.mat[(row, col0 + q)];
                        }
                    }
                }
            }
        }
    }
    out
}

fn check_downward_closed<R: Real>(field: &HierField<R>) -> Result<()> {
    let set: HashSet<&ElementKey> = field.keys.iter().collect();
    for key in &field.keys {
        for p in key.parents() {
            if !set.contains(&p) {
                return Err(Error::NotDownwardClosed);
            }
        }
    }
    Ok(())
}

/// The LU-split fast product: exact evaluation of the d-fold tensor
/// contraction over a downward-closed set in 2^(d-1) dimension-by-dimension
/// terms.
pub fn fast_multiply<R: Real>(
    field: &HierField<R>,
    mats: &[&TransformMatrix<R>],
    diagonal_side: TriSide,
) -> Result<HierField<R>> {
    let d = field.dim();
    assert_eq!(mats.len(), d, "one matrix per dimension");
    check_downward_closed(field)?;
    if d == 1 {
        return Ok(transform_along_dim(field, mats[0], 0));
    }
    let splits: Vec<(TransformMatrix<R>, TransformMatrix<R>)> =
        (0..d - 1).map(|m| mats[m].split(diagonal_side)).collect();
    let out_slots: Vec<usize> = mats.iter().map(|t| t.tgt_per_elem).collect();
    let mut acc = HierField::zeros(field.keys.clone(), out_slots);
    for mask in 0u32..(1 << (d - 1)) {
        let mut term = field.clone();
        // lower passes first, ascending dimension
        for m in 0..d - 1 {
            if mask & (1 << m) != 0 {
                term = transform_along_dim(&term, &splits[m].0, m);
            }
        }
        // the full matrix of the last dimension
        term = transform_along_dim(&term, mats[d - 1], d - 1);
        // upper passes, ascending dimension
        for m in 0..d - 1 {
            if mask & (1 << m) == 0 {
                term = transform_along_dim(&term, &splits[m].1, m);
            }
        }
        acc.add_scaled(&term, R::one());
    }
    Ok(acc)
}

/// Decomposes a flat block offset into a slot tuple (dimension 0 fastest).
fn unflatten(mut flat: usize, slots: &[usize], tuple: &mut [usize]) {
    for (m, &s) in slots.iter().enumerate() {
        tuple[m] = flat % s;
        flat /= s;
    }
}

/// Reference evaluation of the same contraction by direct summation over all
/// source indices; quadratic cost, used as the correctness oracle.
pub fn direct_multiply<R: Real>(
    field: &HierField<R>,
    mats: &[&TransformMatrix<R>],
) -> HierField<R> {
    let d = field.dim();
    let out_slots: Vec<usize> = mats.iter().map(|t| t.tgt_per_elem).collect();
    let mut out = HierField::zeros(field.keys.clone(), out_slots.clone());
    let in_slots = field.slots.clone();
    let in_len: usize = in_slots.iter().product();
    let out_len: usize = out_slots.iter().product();
    let mut src_tuple = vec![0usize; d];
    let mut tgt_tuple = vec![0usize; d];
    for (ti, tgt_key) in field.keys.iter().enumerate() {
        for tgt_flat in 0..out_len {
            unflatten(tgt_flat, &out_slots, &mut tgt_tuple);
            let mut acc = R::zero();
            for (si, src_key) in field.keys.iter().enumerate() {
                for src_flat in 0..in_len {
                    let mut w = field.data[si][src_flat];
                    if w == R::zero() {
                        continue;
                    }
                    unflatten(src_flat, &in_slots, &mut src_tuple);
                    for m in 0..d {
                        let row = src_key.code(m) * mats[m].src_per_elem + src_tuple[m];
                        let col = tgt_key.code(m) * mats[m].tgt_per_elem + tgt_tuple[m];
                        w *= mats[m].entry(row, col);
                        if w == R::zero() {
                            break;
                        }
                    }
                    acc += w;
                }
            }
            out.data[ti][tgt_flat] = acc;
        }
    }
    out
}

fn flat_of(tuple: &[usize], slots: &[usize]) -> usize {
    let mut idx = 0;
    for m in (0..tuple.len()).rev() {
        idx = idx * slots[m] + tuple[m];
    }
    idx
}

// --- transfer-matrix builders ------------------------------------------------

/// Values (and tracked derivatives, plus `extra_deriv`) of every Alpert
/// function at every interpolation dof.
pub fn alpert_to_points_matrix<R: Real>(
    alpert: &AlpertFamily<R>,
    interp: &InterpolatoryFamily<R>,
    extra_deriv: usize,
) -> TransformMatrix<R> {
    let mat = DMat::from_fn(alpert.len(), interp.len(), |a, p| {
        let dof = &interp.dofs()[p];
        alpert.functions()[a]
            .poly
            .eval(dof.point, dof.deriv + extra_deriv, dof.side)
    });
    TransformMatrix::from_dense(
        mat,
        alpert.per_element(),
        interp.per_element(),
        alpert.max_level(),
    )
}

/// Like [`alpert_to_points_matrix`], but sampling the interface average
/// `(w(x⁻) + w(x⁺))/2` at interior dofs (domain-boundary dofs stay
/// one-sided). Broken derivatives of a DG field are an order more accurate
/// in this average than in either one-sided limit, which is what the
/// gradient-sampling path of the Hamilton-Jacobi driver needs.
///
/// The opposite-side evaluation couples neighboring supports, so this matrix
/// is not hierarchical; on general adaptive sets the fast product carries
/// the usual interface-term approximation (exact on sparse/full sets).
pub fn alpert_to_points_average_matrix<R: Real>(
    alpert: &AlpertFamily<R>,
    interp: &InterpolatoryFamily<R>,
    extra_deriv: usize,
) -> TransformMatrix<R> {
    let mat = DMat::from_fn(alpert.len(), interp.len(), |a, p| {
        let dof = &interp.dofs()[p];
        let poly = &alpert.functions()[a].poly;
        let own = poly.eval(dof.point, dof.deriv + extra_deriv, dof.side);
        if dof.point == R::zero() || dof.point == R::one() {
            return own;
        }
        let other_side = match dof.side {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        };
        let other = poly.eval(dof.point, dof.deriv + extra_deriv, other_side);
        (own + other) * R::half()
    });
    TransformMatrix::from_dense(
        mat,
        alpert.per_element(),
        interp.per_element(),
        alpert.max_level(),
    )
}

/// Hierarchical-basis evaluation matrix V: coefficient -> dof values.
pub fn interp_to_points_matrix<R: Real>(interp: &InterpolatoryFamily<R>) -> TransformMatrix<R> {
    let mat = DMat::from_fn(interp.len(), interp.len(), |b, p| {
        let dof = &interp.dofs()[p];
        interp.functions()[b]
            .poly
            .eval(dof.point, dof.deriv, dof.side)
    });
    TransformMatrix::from_dense(
        mat,
        interp.per_element(),
        interp.per_element(),
        interp.max_level(),
    )
}

/// Inverse of [`interp_to_points_matrix`]: dof values -> hierarchical
/// interpolation coefficients (the surplus transform).
pub fn points_to_interp_matrix<R: Real>(
    interp: &InterpolatoryFamily<R>,
) -> Result<TransformMatrix<R>> {
    let v = interp_to_points_matrix(interp);
    let w = crate::linalg::invert(v.dense())?;
    Ok(TransformMatrix::from_dense(
        w,
        interp.per_element(),
        interp.per_element(),
        interp.max_level(),
    ))
}

/// The transform bundle one driver needs: point sampling, surplus transform,
/// projection back to Alpert, and the contraction matrices for volume and
/// interface residuals.
#[derive(Debug, Clone)]
pub struct TransformSet<R> {
    /// Alpert coefficients -> dof values.
    pub a2p: TransformMatrix<R>,
    /// Alpert coefficients -> first-derivative dof values.
    pub a2p_dx: TransformMatrix<R>,
    /// Interpolation coefficients -> dof values (V).
    pub c2p: TransformMatrix<R>,
    /// Dof values -> interpolation coefficients (W = V^{-1}).
    pub p2c: TransformMatrix<R>,
    /// ∫ ψ v: L2 projection of an interpolant onto the Alpert basis.
    pub proj_uv: TransformMatrix<R>,
    /// ∫ ψ v'.
    pub vol_uvx: TransformMatrix<R>,
    /// Σ ψ⁻ [v].
    pub flx_ulft: TransformMatrix<R>,
    /// Σ ψ⁺ [v].
    pub flx_urgt: TransformMatrix<R>,
    /// Σ [ψ] {v_x}.
    pub flx_ujp_vxave: TransformMatrix<R>,
}

pub fn build_transform_set<R: Real>(
    alpert: &AlpertFamily<R>,
    interp: &InterpolatoryFamily<R>,
    bc: BoundaryCondition,
) -> Result<TransformSet<R>> {
    let opm = build_operator_matrix(
        interp,
        alpert,
        bc,
        &[
            OperatorKind::UV,
            OperatorKind::UVx,
            OperatorKind::ULftVJp,
            OperatorKind::URgtVJp,
            OperatorKind::UJpVxAve,
        ],
    )?;
    Ok(TransformSet {
        a2p: alpert_to_points_matrix(alpert, interp, 0),
        a2p_dx: alpert_to_points_matrix(alpert, interp, 1),
        c2p: interp_to_points_matrix(interp),
        p2c: points_to_interp_matrix(interp)?,
        proj_uv: TransformMatrix::from_opmat(&opm, OperatorKind::UV),
        vol_uvx: TransformMatrix::from_opmat(&opm, OperatorKind::UVx),
        flx_ulft: TransformMatrix::from_opmat(&opm, OperatorKind::ULftVJp),
        flx_urgt: TransformMatrix::from_opmat(&opm, OperatorKind::URgtVJp),
        flx_ujp_vxave: TransformMatrix::from_opmat(&opm, OperatorKind::UJpVxAve),
    })
}

/// Solution values (and derivatives, for Hermite dofs) at every
/// interpolation point of the active set.
pub fn alpert_to_point_values<R: Real>(
    sol: &DGSolution<R>,
    var: usize,
    tf: &TransformSet<R>,
) -> Result<HierField<R>> {
    let field = HierField::from_alpt(sol, var);
    fast_multiply(&field, &vec![&tf.a2p; sol.dim], TriSide::Lower)
}

/// Point values -> hierarchical interpolation coefficients.
pub fn point_values_to_interp_coeffs<R: Real>(
    values: &HierField<R>,
    tf: &TransformSet<R>,
) -> Result<HierField<R>> {
    fast_multiply(values, &vec![&tf.p2c; values.dim()], TriSide::Lower)
}

/// Interpolation coefficients -> point values (the inverse direction).
pub fn interp_coeffs_to_point_values<R: Real>(
    coeffs: &HierField<R>,
    tf: &TransformSet<R>,
) -> Result<HierField<R>> {
    fast_multiply(coeffs, &vec![&tf.c2p; coeffs.dim()], TriSide::Lower)
}

// --- adaptive interpolation of a function ------------------------------------

/// A dof sample request: coordinates, one-sided limits, per-dimension
/// derivative orders.
pub struct DofSample<'a, R> {
    pub x: &'a [R],
    pub sides: &'a [Side],
    pub derivs: &'a [usize],
}

pub type DofFn<'a, R> = dyn Fn(&DofSample<'_, R>) -> R + 'a;

/// Evaluates `f` at every interpolation dof tuple of the active set.
pub fn dof_values_field<R: Real>(
    sol: &DGSolution<R>,
    interp: &InterpolatoryFamily<R>,
    f: &DofFn<'_, R>,
) -> Result<HierField<R>> {
    let per = interp.per_element();
    let mut field = HierField::zeros(sol.ordered_keys().to_vec(), vec![per; sol.dim]);
    let mut x = vec![R::zero(); sol.dim];
    let mut sides = vec![Side::Minus; sol.dim];
    let mut derivs = vec![0usize; sol.dim];
    for (i, key) in field.keys.clone().iter().enumerate() {
        for tuple in DegreeTuples::new(per, sol.dim) {
            for m in 0..sol.dim {
                let flat = key.code(m) * per + tuple[m];
                let dof = &interp.dofs()[flat];
                x[m] = dof.point;
                sides[m] = dof.side;
                derivs[m] = dof.deriv;
            }
            let v = f(&DofSample {
                x: &x,
                sides: &sides,
                derivs: &derivs,
            });
            if !v.is_finite() {
                return Err(Error::NonFinite("dof sampling".into()));
            }
            field.data[i][flat_of(&tuple, &field.slots)] = v;
        }
    }
    Ok(field)
}

#[derive(Debug, Default)]
pub struct AdaptiveInitReport {
    pub iterations: usize,
    /// True when leaves above the threshold remained but the level cap
    /// blocked further refinement.
    pub saturated: bool,
}

impl<R: Real> DGSolution<R> {
    /// Adaptive hierarchical interpolation of `f`: refine while some leaf's
    /// interpolation-coefficient norm exceeds `refine_eps`, then convert the
    /// interpolant to Alpert coefficients through the fast transforms.
    ///
    /// Saturating the level cap with indicators still above the threshold is
    /// reported, not treated as a failure.
    pub fn init_adaptive_interpolation(
        &mut self,
        var: usize,
        interp: &InterpolatoryFamily<R>,
        tf: &TransformSet<R>,
        f: &DofFn<'_, R>,
        refine_eps: R,
    ) -> Result<AdaptiveInitReport> {
        let mut report = AdaptiveInitReport::default();
        let coeffs = loop {
            report.iterations += 1;
            let values = dof_values_field(self, interp, f)?;
            let coeffs = fast_multiply(&values, &vec![&tf.p2c; self.dim], TriSide::Lower)?;
            let registry = crate::adapt::LeafRegistry::compute(self);
            let mut added_any = false;
            for key in &registry.leaf {
                let norm = coeffs
                    .get(key)
                    .unwrap()
                    .iter()
                    .map(|&c| c * c)
                    .sum::<R>()
                    .sqrt();
                if norm <= refine_eps {
                    continue;
                }
                let children = key.children(self.set.n_max);
                if children.iter().all(|c| self.set.contains(c)) {
                    // nothing to add: at the cap in every direction
                    report.saturated = true;
                    continue;
                }
                for child in children {
                    if !self.set.contains(&child) {
                        self.insert_zero_element(child, true);
                        added_any = true;
                    }
                }
            }
            if !added_any {
                break coeffs;
            }
            // ancestor completion
            let keys: Vec<ElementKey> = self.set.keys().cloned().collect();
            let mut queue = keys;
            while let Some(key) = queue.pop() {
                for parent in key.parents() {
                    if !self.set.contains(&parent) {
                        self.insert_zero_element(parent.clone(), true);
                        queue.push(parent);
                    }
                }
            }
            self.rebuild_order();
        };
        coeffs.store_intp(self, var);
        let alpt = fast_multiply(&coeffs, &vec![&tf.proj_uv; self.dim], TriSide::Lower)?;
        for (i, key) in alpt.keys().iter().enumerate() {
            self.set.get_mut(key).unwrap().alpt[var].copy_from_slice(&alpt.data[i]);
        }
        Ok(report)
    }
}

pub use crate::solution::tuple_index;
