//! Gauss–Legendre quadrature.
//!
//! Small, dependency-free nodes-and-weights generator used for the analytic
//! envelope integrals and for the quadrature oracles in tests (orthogonality,
//! Chapman–Kolmogorov, survival identities). Nodes are computed by Newton
//! iteration on the Legendre polynomial with the usual Chebyshev initial
//! guesses; this is accurate to machine precision for the modest orders
//! (n ≤ a few hundred) used here.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Nodes are returned in increasing order. Panics if `n < 2` (a one-point
/// rule is never what the callers here want).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "gauss_legendre needs at least 2 nodes");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Chebyshev-style initial guess for the i-th root (descending).
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..64 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative via the Bonnet recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrate `f` over `[a, b]` with the `n`-point Gauss–Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let len = 0.5 * (b - a);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| w * f(mid + len * x))
        .sum::<f64>()
        * len
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [2, 5, 16, 64, 65] {
            let (_, w) = gauss_legendre(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n = {n}: sum = {total}");
        }
    }

    #[test]
    fn nodes_are_symmetric_and_increasing() {
        let (x, _) = gauss_legendre(33);
        for i in 0..x.len() {
            assert!((x[i] + x[x.len() - 1 - i]).abs() < 1e-14);
            if i > 0 {
                assert!(x[i] > x[i - 1]);
            }
        }
    }

    #[test]
    fn exact_on_polynomials() {
        // n-point rule is exact through degree 2n-1.
        let val = integrate(|x| x.powi(7) - 3.0 * x.powi(4) + x, 0.0, 1.0, 4);
        let exact = 1.0 / 8.0 - 3.0 / 5.0 + 0.5;
        assert!((val - exact).abs() < 1e-14);
    }

    #[test]
    fn sine_integral() {
        let val = integrate(f64::sin, 0.0, std::f64::consts::PI, 24);
        assert!((val - 2.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_tail_smooth_integrand() {
        // Infinitely flat at zero, like the envelope integrands used in
        // the loop-mass quadrature.
        let val = integrate(|s| (-1.0 / s.max(1e-300)).exp(), 0.0, 1.0, 64);
        // Reference: numeric value of the exponential-integral expression,
        // int_0^1 exp(-1/s) ds = e^{-1} - Gamma(0,1) = 0.14849550677592205.
        assert!((val - 0.148_495_506_775_922_05).abs() < 1e-12);
    }
}
