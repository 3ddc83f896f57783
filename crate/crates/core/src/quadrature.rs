//! Gauss-Legendre quadrature, exact for polynomials of degree `2n - 1`.

use crate::real::Real;

/// Gauss-Legendre rule with `n` points on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<R> {
    pub nodes: Vec<R>,
    pub weights: Vec<R>,
}

impl<R: Real> GaussLegendre<R> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one point");
        let mut nodes = vec![R::zero(); n];
        let mut weights = vec![R::zero(); n];
        for i in 0..n.div_ceil(2) {
            // Newton from the Chebyshev-like initial guess.
            let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut x = R::of(guess);
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x = x - dx;
                if dx.abs() <= R::epsilon() * (x.abs() + R::one()) {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = R::two() / ((R::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `(lo, hi)`.
    pub fn integrate(&self, lo: R, hi: R, mut f: impl FnMut(R) -> R) -> R {
        let scale = (hi - lo) * R::half();
        let mid = (hi + lo) * R::half();
        let mut acc = R::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + scale * x);
        }
        acc * scale
    }
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_with_derivative<R: Real>(n: usize, x: R) -> (R, R) {
    let mut p_prev = R::one();
    let mut p = x;
    if n == 0 {
        return (R::one(), R::zero());
    }
    for k in 2..=n {
        let kf = R::of_usize(k);
        let next = ((R::two() * kf - R::one()) * x * p - (kf - R::one()) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let dp = R::of_usize(n) * (x * p - p_prev) / (x * x - R::one());
    (p, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_monomials_exactly() {
        let quad = GaussLegendre::<f64>::new(5);
        // exact for degree <= 9
        for m in 0..=9usize {
            let exact = 1.0 / (m as f64 + 1.0);
            let got = quad.integrate(0.0, 1.0, |x| x.powi(m as i32));
            assert!((got - exact).abs() < 1e-14, "degree {m}: {got} vs {exact}");
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in 1..=12 {
            let quad = GaussLegendre::<f64>::new(n);
            let total: f64 = quad.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let quad = GaussLegendre::<f32>::new(4);
        let got = quad.integrate(0.0f32, 1.0, |x| x * x);
        assert!((got - 1.0 / 3.0).abs() < 1e-6);
    }
}
