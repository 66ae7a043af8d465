//! Gauss-Legendre quadrature on arbitrary intervals.
//!
//! Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
//! iteration from the Chebyshev-based initial guess; weights follow from
//! `w_i = 2 / ((1 - x_i^2) P_n'(x_i)^2)`. Accuracy is machine precision for
//! the orders used here (up to a few hundred nodes).

/// A quadrature rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-node rule. Panics if `n == 0`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess for the i-th root (descending order).
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`. Weights sum to `b - a`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Evaluates `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degree_3_reference_values() {
        let rule = GaussLegendre::new(3);
        let expect_nodes = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        let expect_weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        for (i, (x, w)) in rule.mapped(-1.0, 1.0).enumerate() {
            assert_abs_diff_eq!(x, expect_nodes[i], epsilon = 1e-14);
            assert_abs_diff_eq!(w, expect_weights[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        // An n-node rule is exact through degree 2n-1.
        let rule = GaussLegendre::new(5);
        let exact = 2.0 / 10.0; // int_{-1}^{1} x^9 dx = 0; x^8 -> 2/9... use x^9 shifted
        let val = rule.integrate(0.0, 1.0, |x| x.powi(9));
        assert_abs_diff_eq!(val, 0.1, epsilon = 1e-14);
        let _ = exact;
    }

    #[test]
    fn single_node_is_midpoint_rule() {
        let rule = GaussLegendre::new(1);
        let pts: Vec<_> = rule.mapped(2.0, 6.0).collect();
        assert_eq!(pts.len(), 1);
        assert_abs_diff_eq!(pts[0].0, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pts[0].1, 4.0, epsilon = 1e-14);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 7, 16, 32, 64] {
            let rule = GaussLegendre::new(n);
            let sum: f64 = rule.mapped(-3.0, 11.0).map(|(_, w)| w).sum();
            assert_abs_diff_eq!(sum, 14.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn high_order_smooth_integrand() {
        let rule = GaussLegendre::new(32);
        let val = rule.integrate(0.0, std::f64::consts::PI, f64::sin);
        assert_abs_diff_eq!(val, 2.0, epsilon = 1e-13);
    }
}
