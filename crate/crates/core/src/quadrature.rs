//! Gauss-Legendre quadrature on [-1, 1].

/// Legendre polynomial P_n(x) and its derivative via the three-term
/// recurrence. Valid for |x| < 1 (the derivative formula divides by x^2 - 1),
/// which holds at every quadrature node.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0;
    let mut cur = x;
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * cur - (kf - 1.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    let nf = n as f64;
    let deriv = nf * (x * cur - prev) / (x * x - 1.0);
    (cur, deriv)
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Roots of P_n are found by Newton iteration from the classical Chebyshev
/// initial guess; the rule integrates polynomials up to degree 2n - 1
/// exactly.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let step = p / d;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        // The initial guesses start at the positive end; store symmetrically.
        nodes[i] = -x.abs();
        nodes[n - 1 - i] = x.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrates f over [a, b] with an n-point Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let rad = 0.5 * (b - a);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| w * f(mid + rad * x))
        .sum::<f64>()
        * rad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules_match_known_nodes() {
        let (x, w) = gauss_legendre(2);
        let r = 1.0 / 3.0_f64.sqrt();
        assert!((x[0] + r).abs() < 1e-14 && (x[1] - r).abs() < 1e-14);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);

        let (x, w) = gauss_legendre(3);
        assert!(x[1].abs() < 1e-14);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-14);
        assert!((x[2] - 0.6_f64.sqrt()).abs() < 1e-14);
        assert!((w[0] - 5.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn degree_exactness_and_weight_sum() {
        for n in [1usize, 2, 5, 17, 64] {
            let (nodes, weights) = gauss_legendre(n);
            let total: f64 = weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-12, "weights must sum to 2, n={n}");
            for i in 0..n {
                assert!((nodes[i] + nodes[n - 1 - i]).abs() < 1e-13);
            }
        }
        // A 5-point rule integrates x^8 exactly: int over [-1,1] is 2/9.
        let v = integrate(|x| x.powi(8), -1.0, 1.0, 5);
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn integrates_transcendentals_to_machine_precision() {
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 24);
        assert!((v - 2.0).abs() < 1e-14);
        let v = integrate(f64::exp, -1.0, 2.0, 24);
        assert!((v - (2.0_f64.exp() - (-1.0_f64).exp())).abs() < 1e-13);
    }
}
