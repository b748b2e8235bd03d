//! Special functions and fixed quadrature rules shared by the numerical modules.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

pub use statrs::function::gamma::ln_gamma;

/// Natural log of the Beta function.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Log of the surface area of the unit sphere S^{n-1} in R^n.
pub fn ln_sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    std::f64::consts::LN_2 + h * PI.ln() - ln_gamma(h)
}

/// Gauss–Legendre rule with `order` nodes on [-1, 1].
///
/// Nodes come from Newton iteration on P_order started at the Chebyshev
/// approximation; the rule integrates polynomials of degree 2*order-1 exactly.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if order == 0 {
        return (1.0, 0.0);
    }
    let nf = order as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Jacobi rule on [0, 1] for the weight u^b (1-u)^a, a, b > -1.
///
/// Returned weights are normalised to sum to one, so the rule computes the
/// mean of an integrand under the Beta(b+1, a+1) law. Built with the
/// Golub–Welsch eigen-decomposition of the Jacobi matrix.
pub fn gauss_jacobi_unit(order: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    assert!(a > -1.0 && b > -1.0, "Jacobi exponents must exceed -1");
    // Standard Jacobi weight (1-x)^alpha (1+x)^beta on [-1, 1]; u = (1+x)/2.
    let (alpha, beta) = (a, b);
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(order, order);
    for k in 0..order {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < order {
            let j = kf + 1.0;
            let off2 = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * j * (j + alpha) * (j + beta) * (j + ab)
                    / ((2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0))
            };
            let off = off2.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            ((1.0 + eig.eigenvalues[i]) / 2.0, v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(u, w)| (u, w / total)).unzip()
}

/// Tail integral ∫_R^∞ r^a (1+r²)^(-b) dr for 2b - a > 1.
///
/// Substituting u = 1/(1+r²) turns the tail into an incomplete Beta integral
/// over [0, 1/(1+R²)], evaluated by its power series in u.
pub fn power_tail_integral(a: f64, b: f64, radius: f64) -> f64 {
    let p = b - a / 2.0 - 1.5;
    assert!(p > -1.0, "tail integral diverges (a = {a}, b = {b})");
    let u_max = 1.0 / (1.0 + radius * radius);
    let q = (a - 1.0) / 2.0;
    let mut sum = 0.0;
    let mut coeff = 1.0;
    let ln_u = u_max.ln();
    for j in 0..400 {
        let jf = j as f64;
        let term = coeff * ((p + jf + 1.0) * ln_u).exp() / (p + jf + 1.0);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        coeff *= -(q - jf) / (jf + 1.0);
    }
    0.5 * sum
}
