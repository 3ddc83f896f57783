//! The three 1D multiwavelet families on [0, 1].
//!
//! All families share the same layout: a flat, level-major list of basis
//! functions indexed by `(level n, support j, degree p)`. Level 0 carries the
//! whole-interval functions; level `n >= 1` carries the wavelets of the
//! increment space, `2^(n-1)` supports each holding one function per degree
//! slot. The flat position of a function is `elem_code(n, j) * per_element + p`
//! with `elem_code` the dyadic element numbering, so the total count up to
//! level `N` is `per_element * 2^N`.
//!
//! * Alpert family: L2-orthonormal. Level 0 is the normalized shifted
//!   Legendre basis; level 1 spans the orthogonal complement of the global
//!   polynomials inside the two-cell space and is built here by Gram-Schmidt
//!   (monomials on the right half-cell, orthogonalized against level 0 and
//!   each other, sign fixed by the leading coefficient of the right piece);
//!   level n >= 2 is the dyadic rescaling `2^((n-1)/2) v(2^(n-1) x - j)`.
//!
//! * Interpolatory families (Lagrange, Hermite): delta-valued on a nested
//!   hierarchy of interpolation dofs. A dof is a point, a one-sided limit,
//!   and a derivative order; level-0 dofs sit at the base points, level-n
//!   dofs at the new dyadic midpoints approached from either side. The
//!   level-1 wavelets vanish (with all tracked derivatives) on the level-0
//!   dofs and are delta-valued on the new ones; rescaling to level n uses
//!   the amplitude `2^(-(n-1)l)` so the coefficient of a wavelet equals the
//!   hierarchical surplus of the matching derivative order.

use crate::error::{Error, Result};
use crate::linalg::{solve_multi, DMat};
use crate::poly::{inner_product, Piece, PiecewisePoly, Side};
use crate::quadrature::GaussLegendre;
use crate::real::Real;

/// Identifies one basis function: level, support position, degree slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Basis1DIndex {
    pub level: usize,
    pub support: usize,
    pub degree: usize,
}

impl Basis1DIndex {
    pub fn new(level: usize, support: usize, degree: usize) -> Self {
        Self {
            level,
            support,
            degree,
        }
    }
}

/// Dyadic element numbering: level 0 -> 0, level n >= 1 -> 2^(n-1) + j.
/// Bijective onto 0..2^N for levels up to N.
pub fn elem_code(level: usize, support: usize) -> usize {
    if level == 0 {
        0
    } else {
        (1usize << (level - 1)) + support
    }
}

/// Inverse of [`elem_code`].
pub fn code_to_elem(code: usize) -> (usize, usize) {
    if code == 0 {
        (0, 0)
    } else {
        let level = usize::BITS as usize - code.leading_zeros() as usize;
        (level, code - (1 << (level - 1)))
    }
}

/// Number of supports a level carries.
pub fn supports_at_level(level: usize) -> usize {
    if level == 0 {
        1
    } else {
        1 << (level - 1)
    }
}

/// One stored basis function.
#[derive(Debug, Clone)]
pub struct Basis1D<R> {
    pub index: Basis1DIndex,
    pub poly: PiecewisePoly<R>,
}

/// Common interface of the 1D families; everything downstream (operator
/// matrices, transforms) is written against this.
pub trait Family1D<R: Real> {
    fn max_level(&self) -> usize;
    /// Functions per element (k+1 for Alpert, M+1 for interpolatory).
    fn per_element(&self) -> usize;
    fn functions(&self) -> &[Basis1D<R>];
    /// Polynomial degree bound of the family.
    fn max_degree(&self) -> usize;
    /// Short description used to key operator-matrix cache files.
    fn descriptor(&self) -> String;

    fn len(&self) -> usize {
        self.functions().len()
    }

    fn is_empty(&self) -> bool {
        self.functions().is_empty()
    }

    /// Flat position of an index in the global 1D ordering.
    fn flat_index(&self, idx: &Basis1DIndex) -> usize {
        elem_code(idx.level, idx.support) * self.per_element() + idx.degree
    }

    fn check_index(&self, idx: &Basis1DIndex) -> Result<usize> {
        let ok = idx.level <= self.max_level()
            && idx.support < supports_at_level(idx.level)
            && idx.degree < self.per_element();
        if ok {
            Ok(self.flat_index(idx))
        } else {
            Err(Error::IndexOutOfRange {
                level: idx.level,
                support: idx.support,
                degree: idx.degree,
            })
        }
    }

    /// One-sided evaluation of a derivative of one basis function.
    fn eval(&self, idx: &Basis1DIndex, x: R, deriv: usize, side: Side) -> Result<R> {
        let flat = self.check_index(idx)?;
        if deriv > self.max_degree() {
            return Err(Error::Unsupported(format!(
                "derivative order {deriv} exceeds family degree {}",
                self.max_degree()
            )));
        }
        Ok(self.functions()[flat].poly.eval(x, deriv, side))
    }
}

fn build_flat_list<R: Real>(
    max_level: usize,
    per_element: usize,
    level0: &[PiecewisePoly<R>],
    level1: &[PiecewisePoly<R>],
    amplitude: impl Fn(usize, usize) -> R,
) -> Vec<Basis1D<R>> {
    let mut fns = Vec::with_capacity(per_element << max_level);
    for (p, poly) in level0.iter().enumerate() {
        fns.push(Basis1D {
            index: Basis1DIndex::new(0, 0, p),
            poly: poly.clone(),
        });
    }
    for n in 1..=max_level {
        for j in 0..supports_at_level(n) {
            for (p, poly) in level1.iter().enumerate() {
                let scaled = poly.rescale(n - 1, j, amplitude(n, p));
                fns.push(Basis1D {
                    index: Basis1DIndex::new(n, j, p),
                    poly: scaled,
                });
            }
        }
    }
    fns
}

/// Gram-Schmidt against `fixed` and the previously produced entries, with one
/// re-orthogonalization pass. Sign is normalized so the highest nonzero
/// coefficient of the last piece is positive.
fn orthonormalize<R: Real>(
    generators: &[PiecewisePoly<R>],
    fixed: &[PiecewisePoly<R>],
    quad: &GaussLegendre<R>,
) -> Vec<PiecewisePoly<R>> {
    let mut out: Vec<PiecewisePoly<R>> = Vec::with_capacity(generators.len());
    for g in generators {
        let mut w = g.clone();
        for _ in 0..2 {
            for b in fixed.iter().chain(out.iter()) {
                let c = inner_product(&w, b, quad);
                w = w.add_scaled(b, -c);
            }
        }
        let norm = inner_product(&w, &w, quad).sqrt();
        assert!(
            norm > R::epsilon().sqrt(),
            "degenerate generator in Gram-Schmidt"
        );
        let mut w = w.scaled(R::one() / norm);
        if let Some(last) = w.pieces.last() {
            let lead = last
                .coef
                .iter()
                .rev()
                .copied()
                .find(|c| c.abs() > R::epsilon() * R::of(64.0));
            if let Some(lead) = lead {
                if lead < R::zero() {
                    w = w.scaled(-R::one());
                }
            }
        }
        out.push(w);
    }
    out
}

/// Alpert's orthonormal multiwavelets of degree `k` up to level `N`.
#[derive(Debug, Clone)]
pub struct AlpertFamily<R> {
    degree: usize,
    max_level: usize,
    fns: Vec<Basis1D<R>>,
}

impl<R: Real> AlpertFamily<R> {
    pub fn new(degree: usize, max_level: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidDegree(degree));
        }
        let quad = GaussLegendre::new(degree + 2);
        let monomials: Vec<PiecewisePoly<R>> = (0..=degree)
            .map(|p| {
                let mut coef = vec![R::zero(); p + 1];
                coef[p] = R::one();
                PiecewisePoly::on_unit(coef)
            })
            .collect();
        // Level 0: Gram-Schmidt of monomials = normalized shifted Legendre.
        let level0 = orthonormalize(&monomials, &[], &quad);
        // Level 1: monomials restricted to the right half-cell, orthogonalized
        // against the global polynomials and each other.
        let right_half: Vec<PiecewisePoly<R>> = (0..=degree)
            .map(|p| {
                let mut coef = vec![R::zero(); p + 1];
                coef[p] = R::one();
                PiecewisePoly::new(vec![Piece {
                    lo: R::half(),
                    hi: R::one(),
                    coef,
                }])
            })
            .collect();
        let level1 = orthonormalize(&right_half, &level0, &quad);
        let fns = build_flat_list(max_level, degree + 1, &level0, &level1, |n, _| {
            R::pow2(n - 1).sqrt()
        });
        Ok(Self {
            degree,
            max_level,
            fns,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self, idx: &Basis1DIndex) -> Result<&Basis1D<R>> {
        let flat = self.check_index(idx)?;
        Ok(&self.fns[flat])
    }
}

impl<R: Real> Family1D<R> for AlpertFamily<R> {
    fn max_level(&self) -> usize {
        self.max_level
    }
    fn per_element(&self) -> usize {
        self.degree + 1
    }
    fn functions(&self) -> &[Basis1D<R>] {
        &self.fns
    }
    fn max_degree(&self) -> usize {
        self.degree
    }
    fn descriptor(&self) -> String {
        format!("alpert(k={},N={})", self.degree, self.max_level)
    }
}

/// An interpolation dof: a point approached from one side, for one
/// derivative order.
#[derive(Debug, Clone)]
pub struct InterpDof<R> {
    pub point: R,
    pub side: Side,
    pub deriv: usize,
}

/// Lagrange (K = 0) or Hermite (K >= 1) interpolatory multiwavelets.
#[derive(Debug, Clone)]
pub struct InterpolatoryFamily<R> {
    points_per_cell: usize, // P + 1
    deriv_order: usize,     // K
    poly_degree: usize,     // M = (P+1)(K+1) - 1
    max_level: usize,
    base_points: Vec<R>,
    fns: Vec<Basis1D<R>>,
    dofs: Vec<InterpDof<R>>,
}

impl<R: Real> InterpolatoryFamily<R> {
    /// Piecewise-linear Lagrange family (P = 1, K = 0, base points {0, 1}).
    pub fn lagrange(max_level: usize) -> Result<Self> {
        Self::with_points(&[R::zero(), R::one()], 0, max_level)
    }

    /// Cubic Hermite family (P = 1, K = 1, base points {0, 1}).
    pub fn hermite(max_level: usize) -> Result<Self> {
        Self::with_points(&[R::zero(), R::one()], 1, max_level)
    }

    /// General constructor; the point set must be nested under dyadic
    /// refinement. Only the two-point endpoint layout ships with wavelet
    /// tables; richer layouts are rejected as unsupported.
    pub fn with_points(points: &[R], deriv_order: usize, max_level: usize) -> Result<Self> {
        check_nested(points)?;
        if points.len() != 2 {
            return Err(Error::Unsupported(format!(
                "interpolation point layouts with {} points per cell are not wired up; \
                 only the endpoint pair {{0, 1}} is",
                points.len()
            )));
        }
        let p_max = points.len() - 1;
        let k = deriv_order;
        let m_deg = points.len() * (k + 1) - 1;

        // Level-0 dofs and functions: solve the interpolation conditions.
        let dofs0 = level0_dofs(points, k);
        let e0 = dof_matrix_single(&dofs0, m_deg);
        let phi = solve_multi(&e0, &DMat::identity(m_deg + 1))?;
        let level0: Vec<PiecewisePoly<R>> = (0..=m_deg)
            .map(|col| PiecewisePoly::on_unit((0..=m_deg).map(|row| phi[(row, col)]).collect()))
            .collect();

        // Level-1 wavelets: two pieces, vanishing on the level-0 dofs and
        // delta-valued on the new midpoint dofs.
        let dofs1 = level1_dofs(k);
        let mut all_dofs = dofs0.clone();
        all_dofs.extend(dofs1.iter().cloned());
        let e1 = dof_matrix_two_piece(&all_dofs, m_deg);
        let mut rhs = DMat::zeros(2 * (m_deg + 1), dofs1.len());
        for (col, _) in dofs1.iter().enumerate() {
            rhs[(dofs0.len() + col, col)] = R::one();
        }
        let psi_coef = solve_multi(&e1, &rhs)?;
        let level1: Vec<PiecewisePoly<R>> = (0..dofs1.len())
            .map(|col| {
                let left = Piece {
                    lo: R::zero(),
                    hi: R::half(),
                    coef: (0..=m_deg).map(|row| psi_coef[(row, col)]).collect(),
                };
                let right = Piece {
                    lo: R::half(),
                    hi: R::one(),
                    coef: (0..=m_deg)
                        .map(|row| psi_coef[(m_deg + 1 + row, col)])
                        .collect(),
                };
                prune_zero_pieces(PiecewisePoly::new(vec![left, right]))
            })
            .collect();

        // Derivative-order slots scale by 2^(-(n-1)l) so coefficients stay
        // hierarchical surpluses of the matching derivative.
        let fns = build_flat_list(max_level, m_deg + 1, &level0, &level1, |n, p| {
            let l = p % (k + 1);
            R::inv_pow2((n - 1) * l)
        });

        let mut dofs = Vec::with_capacity(fns.len());
        dofs.extend(dofs0.iter().cloned());
        for n in 1..=max_level {
            let cell = R::inv_pow2(n);
            for j in 0..supports_at_level(n) {
                let point = R::of_usize(2 * j + 1) * cell;
                for i in 0..=p_max {
                    for l in 0..=k {
                        dofs.push(InterpDof {
                            point,
                            side: if i == 0 { Side::Minus } else { Side::Plus },
                            deriv: l,
                        });
                    }
                }
            }
        }

        Ok(Self {
            points_per_cell: points.len(),
            deriv_order,
            poly_degree: m_deg,
            max_level,
            base_points: points.to_vec(),
            fns,
            dofs,
        })
    }

    pub fn points_per_cell(&self) -> usize {
        self.points_per_cell
    }

    /// Highest tracked derivative order K.
    pub fn deriv_order(&self) -> usize {
        self.deriv_order
    }

    pub fn poly_degree(&self) -> usize {
        self.poly_degree
    }

    pub fn base_points(&self) -> &[R] {
        &self.base_points
    }

    /// Dofs in the same flat order as the basis functions.
    pub fn dofs(&self) -> &[InterpDof<R>] {
        &self.dofs
    }

    pub fn basis_poly(&self, idx: &Basis1DIndex) -> Result<&PiecewisePoly<R>> {
        let flat = self.check_index(idx)?;
        Ok(&self.fns[flat].poly)
    }

    /// Interpolation points of level `n` as a plain set of coordinates.
    pub fn level_points(&self, n: usize) -> Vec<R> {
        let cell = R::inv_pow2(n);
        let mut pts = Vec::new();
        for j in 0..(1usize << n) {
            for &x in &self.base_points {
                pts.push((x + R::of_usize(j)) * cell);
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }
}

impl<R: Real> Family1D<R> for InterpolatoryFamily<R> {
    fn max_level(&self) -> usize {
        self.max_level
    }
    fn per_element(&self) -> usize {
        self.poly_degree + 1
    }
    fn functions(&self) -> &[Basis1D<R>] {
        &self.fns
    }
    fn max_degree(&self) -> usize {
        self.poly_degree
    }
    fn descriptor(&self) -> String {
        format!(
            "interp(P={},K={},N={})",
            self.points_per_cell - 1,
            self.deriv_order,
            self.max_level
        )
    }
}

fn level0_dofs<R: Real>(points: &[R], k: usize) -> Vec<InterpDof<R>> {
    let mut dofs = Vec::new();
    for &x in points {
        for l in 0..=k {
            dofs.push(InterpDof {
                point: x,
                side: if x == R::zero() {
                    Side::Plus
                } else {
                    Side::Minus
                },
                deriv: l,
            });
        }
    }
    dofs
}

/// New dofs of level 1: the midpoint approached from the left (i = 0) and
/// from the right (i = 1).
fn level1_dofs<R: Real>(k: usize) -> Vec<InterpDof<R>> {
    let mut dofs = Vec::new();
    for i in 0..2usize {
        for l in 0..=k {
            dofs.push(InterpDof {
                point: R::half(),
                side: if i == 0 { Side::Minus } else { Side::Plus },
                deriv: l,
            });
        }
    }
    dofs
}

/// Rows: dofs; columns: monomial coefficients of a single piece on (0, 1].
fn dof_matrix_single<R: Real>(dofs: &[InterpDof<R>], m_deg: usize) -> DMat<R> {
    DMat::from_fn(dofs.len(), m_deg + 1, |row, col| {
        monomial_deriv_at(col, dofs[row].point, dofs[row].deriv)
    })
}

/// Rows: dofs; columns: [left-piece coefficients, right-piece coefficients]
/// for pieces (0, 1/2] and (1/2, 1].
fn dof_matrix_two_piece<R: Real>(dofs: &[InterpDof<R>], m_deg: usize) -> DMat<R> {
    let cols = 2 * (m_deg + 1);
    DMat::from_fn(dofs.len(), cols, |row, col| {
        let dof = &dofs[row];
        let (piece, mono) = if col <= m_deg {
            (0, col)
        } else {
            (1, col - m_deg - 1)
        };
        let (lo, hi) = if piece == 0 {
            (R::zero(), R::half())
        } else {
            (R::half(), R::one())
        };
        let in_piece = match dof.side {
            Side::Minus => lo < dof.point && dof.point <= hi,
            Side::Plus => lo <= dof.point && dof.point < hi,
        };
        if !in_piece {
            return R::zero();
        }
        let t = (dof.point - lo) / (hi - lo);
        // d^l/dx^l picks up (1/width)^l = 2^l
        monomial_deriv_at(mono, t, dof.deriv) * R::pow2(dof.deriv)
    })
}

/// d^l/dt^l t^m evaluated at t.
fn monomial_deriv_at<R: Real>(m: usize, t: R, l: usize) -> R {
    if l > m {
        return R::zero();
    }
    let mut fall = R::one();
    for s in 0..l {
        fall *= R::of_usize(m - s);
    }
    fall * t.powi((m - l) as i32)
}

fn prune_zero_pieces<R: Real>(poly: PiecewisePoly<R>) -> PiecewisePoly<R> {
    let tol = R::epsilon() * R::of(1024.0);
    let pieces = poly
        .pieces
        .into_iter()
        .filter(|p| p.coef.iter().any(|c| c.abs() > tol))
        .collect();
    PiecewisePoly { pieces }
}

/// Checks `X_0 ⊆ X_1` for the dyadic refinement of the base point set.
fn check_nested<R: Real>(points: &[R]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::NonNestedPoints(
            "need at least two base points".into(),
        ));
    }
    for w in points.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::NonNestedPoints(
                "base points must be strictly increasing".into(),
            ));
        }
    }
    if points[0] != R::zero() || *points.last().unwrap() != R::one() {
        return Err(Error::NonNestedPoints(
            "base points must include the cell endpoints 0 and 1".into(),
        ));
    }
    let level1: Vec<R> = points
        .iter()
        .flat_map(|&x| [x * R::half(), (x + R::one()) * R::half()])
        .collect();
    for &x in points {
        if !level1.iter().any(|&y| y == x) {
            return Err(Error::NonNestedPoints(format!(
                "point {x} is not reproduced by the refined point set"
            )));
        }
    }
    Ok(())
}
