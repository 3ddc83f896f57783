//! Piecewise polynomials on dyadic cells of [0, 1].
//!
//! Every basis function in this crate is stored this way: a short list of
//! cells `(lo, hi]` carrying monomial coefficients in the local coordinate
//! `t = (x - lo)/(hi - lo)`. Dyadic endpoints are exact in binary floating
//! point, so containment tests are exact and scaling a function to a finer
//! level never loses precision.

use crate::quadrature::GaussLegendre;
use crate::real::Real;

/// Which one-sided limit to take at a cell boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Limit from the left (the value a DG function takes on `(lo, hi]`).
    Minus,
    /// Limit from the right.
    Plus,
}

/// One polynomial piece on `(lo, hi]`, coefficients in local `t ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece<R> {
    pub lo: R,
    pub hi: R,
    pub coef: Vec<R>,
}

impl<R: Real> Piece<R> {
    pub fn width(&self) -> R {
        self.hi - self.lo
    }

    /// d^q/dt^q of the local polynomial at local coordinate `t`.
    pub fn eval_local(&self, t: R, deriv: usize) -> R {
        let mut acc = R::zero();
        for m in (deriv..self.coef.len()).rev() {
            // falling factorial m (m-1) ... (m-deriv+1)
            let mut fall = R::one();
            for s in 0..deriv {
                fall *= R::of_usize(m - s);
            }
            acc = acc * t + self.coef[m] * fall;
        }
        acc
    }

    /// d^q/dx^q at global coordinate `x` (caller guarantees containment).
    pub fn eval(&self, x: R, deriv: usize) -> R {
        let w = self.width();
        let t = (x - self.lo) / w;
        let mut v = self.eval_local(t, deriv);
        for _ in 0..deriv {
            v = v / w;
        }
        v
    }
}

/// A function given by disjoint pieces, zero elsewhere; pieces sorted by `lo`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PiecewisePoly<R> {
    pub pieces: Vec<Piece<R>>,
}

impl<R: Real> PiecewisePoly<R> {
    pub fn new(mut pieces: Vec<Piece<R>>) -> Self {
        pieces.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
        Self { pieces }
    }

    /// Single piece on (0, 1] with the given monomial coefficients.
    pub fn on_unit(coef: Vec<R>) -> Self {
        Self::new(vec![Piece {
            lo: R::zero(),
            hi: R::one(),
            coef,
        }])
    }

    pub fn max_degree(&self) -> usize {
        self.pieces
            .iter()
            .map(|p| p.coef.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    /// One-sided evaluation of the q-th derivative; zero outside the support.
    pub fn eval(&self, x: R, deriv: usize, side: Side) -> R {
        for p in &self.pieces {
            let inside = match side {
                Side::Minus => p.lo < x && x <= p.hi,
                Side::Plus => p.lo <= x && x < p.hi,
            };
            if inside {
                return p.eval(x, deriv);
            }
        }
        R::zero()
    }

    /// Support as the hull of the pieces.
    pub fn support(&self) -> Option<(R, R)> {
        let lo = self.pieces.first()?.lo;
        let hi = self.pieces.last()?.hi;
        Some((lo, hi))
    }

    /// All piece endpoints in ascending order, deduplicated.
    pub fn breakpoints(&self) -> Vec<R> {
        let mut pts: Vec<R> = Vec::with_capacity(2 * self.pieces.len());
        for p in &self.pieces {
            pts.push(p.lo);
            pts.push(p.hi);
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }

    /// Maps a function defined on [0, 1] onto dyadic cell `j` of level
    /// `shift` (support `(j 2^-shift, (j+1) 2^-shift]`), scaled by `amp`.
    pub fn rescale(&self, shift: usize, support: usize, amp: R) -> Self {
        let cell = R::inv_pow2(shift);
        let base = R::of_usize(support) * cell;
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                lo: base + p.lo * cell,
                hi: base + p.hi * cell,
                coef: p.coef.iter().map(|&c| c * amp).collect(),
            })
            .collect();
        Self { pieces }
    }

    /// self + c * other, re-split on the union of breakpoints.
    pub fn add_scaled(&self, other: &Self, c: R) -> Self {
        let mut cuts = self.breakpoints();
        cuts.extend(other.breakpoints());
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = (lo + hi) * R::half();
            let a = self.piece_at(mid);
            let b = other.piece_at(mid);
            if a.is_none() && b.is_none() {
                continue;
            }
            let deg = a
                .map_or(0, |p| p.coef.len())
                .max(b.map_or(0, |p| p.coef.len()));
            let mut coef = vec![R::zero(); deg];
            if let Some(p) = a {
                accumulate_restricted(&mut coef, p, lo, hi, R::one());
            }
            if let Some(p) = b {
                accumulate_restricted(&mut coef, p, lo, hi, c);
            }
            pieces.push(Piece { lo, hi, coef });
        }
        Self { pieces }
    }

    pub fn scaled(&self, c: R) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    lo: p.lo,
                    hi: p.hi,
                    coef: p.coef.iter().map(|&v| v * c).collect(),
                })
                .collect(),
        }
    }

    fn piece_at(&self, x: R) -> Option<&Piece<R>> {
        self.pieces.iter().find(|p| p.lo < x && x < p.hi)
    }
}

/// Adds `c * p` restricted to `(lo, hi) ⊆ (p.lo, p.hi)` into monomial
/// coefficients local to `(lo, hi)`: substitute t = a + b s.
fn accumulate_restricted<R: Real>(out: &mut [R], p: &Piece<R>, lo: R, hi: R, c: R) {
    let a = (lo - p.lo) / p.width();
    let b = (hi - lo) / p.width();
    // powers of (a + b s) built incrementally
    let mut pow = vec![R::zero(); out.len()];
    pow[0] = R::one();
    let mut deg = 0usize;
    for (m, &cm) in p.coef.iter().enumerate() {
        if m > 0 {
            // pow <- pow * (a + b s)
            let mut next = vec![R::zero(); out.len()];
            for i in 0..=deg {
                next[i] += pow[i] * a;
                next[i + 1] += pow[i] * b;
            }
            pow = next;
            deg += 1;
        }
        if cm != R::zero() {
            for i in 0..=deg {
                out[i] += c * cm * pow[i];
            }
        }
    }
}

/// L2 inner product of two piecewise polynomials over their overlap.
///
/// Exact for the polynomial degrees involved: the per-interval Gauss rule has
/// `max_degree + 1` points.
pub fn inner_product<R: Real>(
    f: &PiecewisePoly<R>,
    g: &PiecewisePoly<R>,
    quad: &GaussLegendre<R>,
) -> R {
    let mut acc = R::zero();
    for pf in &f.pieces {
        for pg in &g.pieces {
            let lo = pf.lo.max(pg.lo);
            let hi = pf.hi.min(pg.hi);
            if lo < hi {
                acc += quad.integrate(lo, hi, |x| pf.eval(x, 0) * pg.eval(x, 0));
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_on(lo: f64, hi: f64, c0: f64, c1: f64) -> PiecewisePoly<f64> {
        PiecewisePoly::new(vec![Piece {
            lo,
            hi,
            coef: vec![c0, c1],
        }])
    }

    #[test]
    fn one_sided_limits_on_half_open_cells() {
        // value 1 on (0, 1/2], value 3 on (1/2, 1]
        let f = PiecewisePoly::new(vec![
            Piece {
                lo: 0.0,
                hi: 0.5,
                coef: vec![1.0],
            },
            Piece {
                lo: 0.5,
                hi: 1.0,
                coef: vec![3.0],
            },
        ]);
        assert_eq!(f.eval(0.5, 0, Side::Minus), 1.0);
        assert_eq!(f.eval(0.5, 0, Side::Plus), 3.0);
        assert_eq!(f.eval(0.0, 0, Side::Minus), 0.0); // outside (support open at 0)
        assert_eq!(f.eval(0.0, 0, Side::Plus), 1.0);
        assert_eq!(f.eval(1.0, 0, Side::Minus), 3.0);
        assert_eq!(f.eval(1.0, 0, Side::Plus), 0.0);
    }

    #[test]
    fn derivative_uses_chain_rule() {
        // t^2 on (0, 1/4]: x = t/4, f(x) = (4x)^2 -> f'(x) = 32x, f'(1/8) = 4
        let f = PiecewisePoly::new(vec![Piece {
            lo: 0.0f64,
            hi: 0.25,
            coef: vec![0.0, 0.0, 1.0],
        }]);
        assert!((f.eval(0.125, 1, Side::Minus) - 4.0f64).abs() < 1e-14);
    }

    #[test]
    fn add_scaled_matches_pointwise() {
        let f = linear_on(0.0, 1.0, 1.0, 2.0);
        let g = PiecewisePoly::new(vec![
            Piece {
                lo: 0.0,
                hi: 0.5,
                coef: vec![0.5, 1.0],
            },
            Piece {
                lo: 0.5,
                hi: 1.0,
                coef: vec![-1.0, 0.0, 2.0],
            },
        ]);
        let h = f.add_scaled(&g, -3.0);
        for &x in &[0.1, 0.3, 0.499, 0.52, 0.9, 1.0] {
            let want = f.eval(x, 0, Side::Minus) - 3.0 * g.eval(x, 0, Side::Minus);
            let got = h.eval(x, 0, Side::Minus);
            assert!((want - got).abs() < 1e-13, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn rescale_is_exact_on_dyadic_cells() {
        let f = linear_on(0.0, 1.0, 0.0, 1.0); // f(x) = x on (0,1]
        let g = f.rescale(3, 5, 2.0); // 2 f(8x - 5) on (5/8, 6/8]
        assert_eq!(g.support().unwrap(), (0.625, 0.75));
        let x = 0.7;
        assert!((g.eval(x, 0, Side::Minus) - 2.0 * (8.0 * x - 5.0)).abs() < 1e-14);
    }

    #[test]
    fn inner_product_exact() {
        let quad = GaussLegendre::new(4);
        let f = linear_on(0.0, 1.0, 0.0, 1.0);
        let g = linear_on(0.0, 1.0, 1.0, 0.0);
        // ∫ x dx = 1/2
        assert!((inner_product(&f, &g, &quad) - 0.5).abs() < 1e-14);
    }
}
