//! Global sparse operators for linear DG bilinear forms over Alpert bases.
//!
//! Orthonormality collapses every non-acting dimension to an exact index
//! match, so a global entry is a single 1D matrix entry in the acting
//! dimension times Kronecker deltas elsewhere. Assembly therefore groups
//! elements by their off-dimension signature and emits one block per 1D
//! element pair. Operators are rebuilt from scratch whenever the element set
//! changes.

use std::collections::HashMap;

use crate::basis1d::{AlpertFamily, Family1D};
use crate::error::{Error, Result};
use crate::linalg::DMat;
#[cfg(test)]
use crate::opmat1d::BoundaryCondition;
use crate::opmat1d::{OperatorKind, OperatorMatrix1D};
use crate::poly::Side;
use crate::real::Real;
use crate::solution::DGSolution;

/// Compressed sparse rows; rows are test (target) DOFs.
#[derive(Debug, Clone)]
pub struct CsrMatrix<R> {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<R>,
}

impl<R: Real> CsrMatrix<R> {
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(u32, u32, R)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        let mut values: Vec<R> = Vec::new();
        indptr.push(0);
        let mut row = 0u32;
        for (r, c, v) in triplets {
            while row < r {
                indptr.push(indices.len());
                row += 1;
            }
            let row_start = indptr[row as usize];
            if indices.len() > row_start && *indices.last().unwrap() == c {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
            }
        }
        while (row as usize) < n_rows {
            indptr.push(indices.len());
            row += 1;
        }
        Self {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// y = A x.
    pub fn apply(&self, x: &[R], y: &mut [R]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (row, y_row) in y.iter_mut().enumerate() {
            let mut acc = R::zero();
            for idx in self.indptr[row]..self.indptr[row + 1] {
                acc += self.values[idx] * x[self.indices[idx] as usize];
            }
            *y_row = acc;
        }
    }

    pub fn apply_vec(&self, x: &[R]) -> Vec<R> {
        let mut y = vec![R::zero(); self.n_rows];
        self.apply(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMat<R> {
        let mut m = DMat::zeros(self.n_rows, self.n_cols);
        for row in 0..self.n_rows {
            for idx in self.indptr[row]..self.indptr[row + 1] {
                m[(row, self.indices[idx] as usize)] += self.values[idx];
            }
        }
        m
    }
}

/// A sparse operator over the global DOF ordering of one variable.
#[derive(Debug, Clone)]
pub struct GlobalOperator<R> {
    pub matrix: CsrMatrix<R>,
    pub descriptor: String,
}

impl<R: Real> GlobalOperator<R> {
    pub fn apply(&self, x: &[R]) -> Vec<R> {
        self.matrix.apply_vec(x)
    }

    pub fn n_dof(&self) -> usize {
        self.matrix.n_rows()
    }
}

/// Per-dimension composite: the dense 1D matrix acting in one dimension.
struct ActingDim<R> {
    dim: usize,
    matrix: DMat<R>,
}

/// Core tensor kernel: for each acting dimension, sums
/// `M1d[src_code*per+p, tgt_code*per+q]` over off-dimension-matching element
/// pairs and shared off-dimension degree tuples.
fn assemble_tensor<R: Real>(
    sol: &DGSolution<R>,
    acting: &[ActingDim<R>],
    descriptor: String,
) -> GlobalOperator<R> {
    let per = sol.alpt_per_dim();
    let d = sol.dim;
    let n_dof = sol.total_dof();
    let block = sol.alpt_block_len();
    let off_block = block / per;
    let mut triplets: Vec<(u32, u32, R)> = Vec::new();

    // strides of the degree tuple (dimension 0 fastest)
    let mut strides = vec![1usize; d];
    for m in 1..d {
        strides[m] = strides[m - 1] * per;
    }

    for part in acting {
        let dim = part.dim;
        // quadrature cancellation leaves ~1e-17 residue in entries that are
        // exact zeros; storing them bloats the matrix by a third and the
        // fraction grows with the level
        let noise_floor = part.matrix.max_abs() * R::of(1e-14);
        // group elements by off-dimension codes
        let mut groups: HashMap<Vec<u32>, Vec<&crate::grid::ElementKey>> = HashMap::new();
        for key in sol.ordered_keys() {
            let mut sig = Vec::with_capacity(d - 1);
            for m in 0..d {
                if m != dim {
                    sig.push(key.code(m) as u32);
                }
            }
            groups.entry(sig).or_default().push(key);
        }
        // off-dimension degree-tuple bases (p_dim = 0)
        let mut bases = Vec::with_capacity(off_block);
        {
            let mut tuple = vec![0usize; d];
            'outer: loop {
                let base: usize = (0..d)
                    .filter(|&m| m != dim)
                    .map(|m| tuple[m] * strides[m])
                    .sum();
                bases.push(base);
                let mut m = 0;
                loop {
                    if m == d {
                        break 'outer;
                    }
                    if m == dim {
                        m += 1;
                        continue;
                    }
                    tuple[m] += 1;
                    if tuple[m] < per {
                        break;
                    }
                    tuple[m] = 0;
                    m += 1;
                }
            }
        }
        let stride_dim = strides[dim];
        for members in groups.values() {
            for &src_key in members {
                let src_off = sol.dof_offset(src_key).unwrap();
                let src_code = src_key.code(dim);
                for &tgt_key in members {
                    let tgt_off = sol.dof_offset(tgt_key).unwrap();
                    let tgt_code = tgt_key.code(dim);
                    for p in 0..per {
                        let row1d = src_code * per + p;
                        for q in 0..per {
                            let v = part.matrix[(row1d, tgt_code * per + q)];
                            if v.abs() <= noise_floor {
                                continue;
                            }
                            for &base in &bases {
                                // CSR row = test dof, column = trial dof
                                triplets.push((
                                    (tgt_off + base + q * stride_dim) as u32,
                                    (src_off + base + p * stride_dim) as u32,
                                    v,
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    GlobalOperator {
        matrix: CsrMatrix::from_triplets(n_dof, n_dof, triplets),
        descriptor,
    }
}

/// Numerical flux of the first-order terms.
#[derive(Debug, Clone, Copy)]
pub enum Flux<R> {
    /// Trace from the inflow side.
    Upwind,
    /// Central flux with jump penalty alpha/2.
    LaxFriedrichs { alpha: R },
}

/// Operator for du/dt = -Σ c_m ∂u/∂x_m in the weak form: volume term plus
/// the chosen interface flux, tensored with identity in the other
/// dimensions.
pub fn assemble_hyperbolic<R: Real>(
    sol: &DGSolution<R>,
    opm: &OperatorMatrix1D<R>,
    speeds: &[R],
    flux: Flux<R>,
) -> Result<GlobalOperator<R>> {
    if speeds.len() != sol.dim {
        return Err(Error::ShapeMismatch("one speed per dimension".into()));
    }
    let mut acting = Vec::new();
    for (m, &c) in speeds.iter().enumerate() {
        if c == R::zero() {
            continue;
        }
        let parts: Vec<(R, OperatorKind)> = match flux {
            Flux::Upwind => {
                let trace = if c > R::zero() {
                    OperatorKind::ULftVJp
                } else {
                    OperatorKind::URgtVJp
                };
                vec![(c, OperatorKind::UVx), (c, trace)]
            }
            Flux::LaxFriedrichs { alpha } => vec![
                (c, OperatorKind::UVx),
                (c * R::half(), OperatorKind::ULftVJp),
                (c * R::half(), OperatorKind::URgtVJp),
                (alpha * R::half(), OperatorKind::ULftVJp),
                (-alpha * R::half(), OperatorKind::URgtVJp),
            ],
        };
        acting.push(ActingDim {
            dim: m,
            matrix: opm.composite(&parts),
        });
    }
    Ok(assemble_tensor(sol, &acting, "hyperbolic".into()))
}

/// Symmetric interior-penalty operator for du/dt = Δu: per dimension
/// `-u'v' - {u_x}[v] - [u]{v_x} - (σ/h)[u][v]`, with `h` the finest active
/// mesh size. The flux signs follow this crate's jump convention
/// `[w] = w⁺ - w⁻`; the operator is consistent, symmetric, and negative
/// semidefinite for σ large enough.
pub fn assemble_ipdg_diffusion<R: Real>(
    sol: &DGSolution<R>,
    opm: &OperatorMatrix1D<R>,
    sigma: R,
) -> Result<GlobalOperator<R>> {
    if sigma <= R::zero() {
        return Err(Error::InvalidParameter("penalty must be positive".into()));
    }
    let h = R::inv_pow2(sol.max_active_level());
    let parts = [
        (-R::one(), OperatorKind::UxVx),
        (-R::one(), OperatorKind::UxAveVJp),
        (-R::one(), OperatorKind::UJpVxAve),
        (-sigma / h, OperatorKind::UJpVJp),
    ];
    let acting: Vec<ActingDim<R>> = (0..sol.dim)
        .map(|m| ActingDim {
            dim: m,
            matrix: opm.composite(&parts),
        })
        .collect();
    Ok(assemble_tensor(sol, &acting, "ipdg-diffusion".into()))
}

/// Jump-penalty part alone: `scale * Σ_m [u][v]`, used by the wave driver
/// with `scale = -σ/h`.
pub fn assemble_jump_penalty<R: Real>(
    sol: &DGSolution<R>,
    opm: &OperatorMatrix1D<R>,
    scale: R,
) -> GlobalOperator<R> {
    let parts = [(scale, OperatorKind::UJpVJp)];
    let acting: Vec<ActingDim<R>> = (0..sol.dim)
        .map(|m| ActingDim {
            dim: m,
            matrix: opm.composite(&parts),
        })
        .collect();
    assemble_tensor(sol, &acting, "jump-penalty".into())
}

/// Tensorizes an arbitrary dense 1D interaction matrix acting in one
/// dimension (identity elsewhere), indexed (trial, test) over the global 1D
/// ordering.
pub fn assemble_acting_dim<R: Real>(
    sol: &DGSolution<R>,
    dim: usize,
    matrix: DMat<R>,
    descriptor: impl Into<String>,
) -> GlobalOperator<R> {
    let acting = vec![ActingDim { dim, matrix }];
    assemble_tensor(sol, &acting, descriptor.into())
}

/// Which one-sided trace the gradient reconstruction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSign {
    Minus,
    Plus,
}

/// One-sided local DG derivative in dimension `m` with outflow (interior
/// trace) boundary handling: `(p, v) = -∫ u v' - Σ_interior û [v]
/// + u(1⁻)v(1⁻) - u(0⁺)v(0⁺)`, where û is the sign-selected trace.
///
/// `opm_inside` must carry the interface kinds with the inside-only boundary
/// condition; the boundary products come from the family traces.
pub fn assemble_ldg_gradient<R: Real>(
    sol: &DGSolution<R>,
    opm_inside: &OperatorMatrix1D<R>,
    family: &AlpertFamily<R>,
    dim: usize,
    sign: TraceSign,
) -> Result<GlobalOperator<R>> {
    if dim >= sol.dim {
        return Err(Error::InvalidParameter(format!(
            "dimension {dim} out of range"
        )));
    }
    let trace = match sign {
        TraceSign::Minus => OperatorKind::ULftVJp,
        TraceSign::Plus => OperatorKind::URgtVJp,
    };
    let mut m1d = opm_inside.composite(&[(-R::one(), OperatorKind::UVx), (-R::one(), trace)]);
    // boundary flux with interior traces: + u(1⁻)v(1⁻) - u(0⁺)v(0⁺)
    let n = family.len();
    let left: Vec<R> = (0..n)
        .map(|i| family.functions()[i].poly.eval(R::zero(), 0, Side::Plus))
        .collect();
    let right: Vec<R> = (0..n)
        .map(|i| family.functions()[i].poly.eval(R::one(), 0, Side::Minus))
        .collect();
    for a in 0..n {
        for b in 0..n {
            let bump = right[a] * right[b] - left[a] * left[b];
            if bump != R::zero() {
                m1d[(a, b)] += bump;
            }
        }
    }
    let acting = vec![ActingDim { dim, matrix: m1d }];
    Ok(assemble_tensor(
        sol,
        &acting,
        format!("ldg-gradient d{dim} {sign:?}"),
    ))
}
