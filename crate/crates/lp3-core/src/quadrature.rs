//! Gauss–Legendre quadrature on [−1, 1] and its tensorized 2-D form, used by
//! the numerically integrated uniform-weight kernel.

use alloc::vec::Vec;

use crate::math::{abs, cos};

/// Pₙ(x) and Pₙ′(x) via the three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 1 {
        return (x, 1.0);
    }
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

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
///
/// Roots of Pₙ are found by Newton iteration from the Chebyshev-like initial
/// guesses cos(π(i + 0.75)/(n + 0.5)); weights are 2 / ((1 − x²) Pₙ′(x)²).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if abs(dx) <= 1e-15 * (1.0 + abs(x)) {
                break;
            }
        }
        // Re-evaluate the derivative at the settled node: the value left over
        // from the last Newton step belongs to the pre-update x and would
        // cost ~1e−14 of relative weight accuracy.
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes.push(x);
        weights.push(w);
    }
    // `nodes` holds the nonnegative roots in descending order (plus the 0
    // root last when n is odd). Mirror into the full ascending rule.
    let half = n / 2;
    let mut full_nodes = Vec::with_capacity(n);
    let mut full_weights = Vec::with_capacity(n);
    for i in 0..half {
        full_nodes.push(-nodes[i]);
        full_weights.push(weights[i]);
    }
    if n % 2 == 1 {
        full_nodes.push(0.0);
        full_weights.push(weights[m - 1]);
    }
    for i in (0..half).rev() {
        full_nodes.push(nodes[i]);
        full_weights.push(weights[i]);
    }
    (full_nodes, full_weights)
}

/// ∫∫ f(u, v) du dv over [−1,1]² with an n×n tensorized Gauss–Legendre rule.
pub fn integrate_unit_box<F: FnMut(f64, f64) -> f64>(n: usize, mut f: F) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mut total = 0.0;
    for (i, &u) in nodes.iter().enumerate() {
        let mut row = 0.0;
        for (j, &v) in nodes.iter().enumerate() {
            row += weights[j] * f(u, v);
        }
        total += weights[i] * row;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::erf;

    #[test]
    fn five_point_rule_matches_tables() {
        let (x, w) = gauss_legendre(5);
        // Classical 5-point nodes/weights.
        let x_ref = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        let w_ref = [
            0.236_926_885_056_189_08,
            0.478_628_670_499_366_47,
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_47,
            0.236_926_885_056_189_08,
        ];
        for k in 0..5 {
            assert!(abs(x[k] - x_ref[k]) < 1e-13, "node {k}: {}", x[k]);
            assert!(abs(w[k] - w_ref[k]) < 1e-13, "weight {k}: {}", w[k]);
        }
    }

    #[test]
    fn exactness_on_low_degree_polynomials() {
        let (x, w) = gauss_legendre(2);
        let int_x2: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi * xi).sum();
        assert!(abs(int_x2 - 2.0 / 3.0) < 1e-15);
        let int_x3: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi * xi * xi).sum();
        assert!(abs(int_x3) < 1e-15);
    }

    #[test]
    fn gaussian_integral_against_erf() {
        // ∫₋₁¹ e^{−t²} dt = √π · erf(1).
        let (x, w) = gauss_legendre(32);
        let got: f64 = x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| wi * crate::math::exp(-xi * xi))
            .sum();
        let want = crate::math::sqrt(core::f64::consts::PI) * erf(1.0);
        assert!(abs(got - want) < 1e-14, "got {got}, want {want}");
    }

    #[test]
    fn two_dimensional_separable_product() {
        // ∫∫ u²v² over the unit box = (2/3)².
        let got = integrate_unit_box(8, |u, v| u * u * v * v);
        assert!(abs(got - 4.0 / 9.0) < 1e-14);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 3, 7, 8, 64, 128] {
            let (x, w) = gauss_legendre(n);
            assert_eq!(x.len(), n);
            let s: f64 = w.iter().sum();
            assert!(abs(s - 2.0) < 1e-13, "n={n}: {s}");
            for k in 1..n {
                assert!(x[k] > x[k - 1], "nodes not ascending at n={n}");
            }
        }
    }
}
