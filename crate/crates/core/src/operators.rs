//! Pointwise diffusion operator L f = ωΔf − (β−1)⟨∇ω, ∇f⟩, its carré du
//! champ Γ and iterated carré du champ Γ₂ on flat ℝⁿ (Ricci curvature zero).

use crate::error::{Error, Result};
use crate::functions::{make_radial_log_cutoff, Jet, Matrix, SmoothFunction, Vector};
use crate::measures::MeasureParams;
use nalgebra::SymmetricEigen;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// Value, gradient, Hessian and Laplacian of the weight at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightJet {
    pub value: f64,
    pub gradient: Vector,
    pub hessian: Matrix,
    pub laplacian: f64,
}

type WeightFn = dyn Fn(&Vector) -> WeightJet + Send + Sync;

/// A smooth positive weight ω.
#[derive(Clone)]
pub struct WeightSpec {
    dim: usize,
    label: String,
    is_cauchy: bool,
    rho_minus: Option<f64>,
    rho_plus: Option<f64>,
    eval: Arc<WeightFn>,
}

impl fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightSpec")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("is_cauchy", &self.is_cauchy)
            .field("rho_minus", &self.rho_minus)
            .field("rho_plus", &self.rho_plus)
            .finish()
    }
}

impl WeightSpec {
    /// ω = 1 + |x|², with Hess ω = 2 Id.
    pub fn cauchy(n: usize) -> Self {
        Self {
            dim: n,
            label: "cauchy".into(),
            is_cauchy: true,
            rho_minus: Some(2.0),
            rho_plus: Some(2.0),
            eval: Arc::new(move |x: &Vector| WeightJet {
                value: 1.0 + x.norm_squared(),
                gradient: x * 2.0,
                hessian: Matrix::identity(n, n) * 2.0,
                laplacian: 2.0 * n as f64,
            }),
        }
    }

    /// ω = 1 + ½ xᵀAx for a symmetric positive definite A; the Hessian
    /// bounds are the extreme eigenvalues of A.
    pub fn quadratic(a: Matrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || n == 0 {
            return Err(Error::invalid("A", "must be a nonempty square matrix"));
        }
        if (&a - a.transpose()).amax() > 1e-12 {
            return Err(Error::invalid("A", "must be symmetric"));
        }
        let eig = SymmetricEigen::new(a.clone()).eigenvalues;
        let lo = eig.min();
        let hi = eig.max();
        if lo <= 0.0 {
            return Err(Error::invalid("A", "must be positive definite"));
        }
        let lap = a.trace();
        Ok(Self {
            dim: n,
            label: "quadratic".into(),
            is_cauchy: false,
            rho_minus: Some(lo),
            rho_plus: Some(hi),
            eval: Arc::new(move |x: &Vector| {
                let ax = &a * x;
                WeightJet {
                    value: 1.0 + 0.5 * x.dot(&ax),
                    gradient: ax,
                    hessian: a.clone(),
                    laplacian: lap,
                }
            }),
        })
    }

    /// Arbitrary weight; Hessian bounds are optional and must satisfy
    /// 0 < ρ₋ ≤ ρ₊ when given.
    pub fn custom(
        dim: usize,
        label: impl Into<String>,
        bounds: Option<(f64, f64)>,
        eval: impl Fn(&Vector) -> WeightJet + Send + Sync + 'static,
    ) -> Result<Self> {
        if let Some((lo, hi)) = bounds {
            if !(0.0 < lo && lo <= hi) {
                return Err(Error::invalid("bounds", "need 0 < rho_minus <= rho_plus"));
            }
        }
        Ok(Self {
            dim,
            label: label.into(),
            is_cauchy: false,
            rho_minus: bounds.map(|b| b.0),
            rho_plus: bounds.map(|b| b.1),
            eval: Arc::new(eval),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_cauchy(&self) -> bool {
        self.is_cauchy
    }

    pub fn rho_minus(&self) -> Option<f64> {
        self.rho_minus
    }

    pub fn rho_plus(&self) -> Option<f64> {
        self.rho_plus
    }

    pub fn eval(&self, x: &Vector) -> WeightJet {
        (self.eval)(x)
    }

    /// Checks positivity at every point, and the closed forms when the
    /// weight claims to be the Cauchy weight.
    pub fn validate(&self, points: &[Vector]) -> Result<()> {
        for x in points {
            let w = self.eval(x);
            if !(w.value > 0.0) {
                return Err(Error::precondition(
                    "WeightSpec",
                    "omega > 0 at every point",
                ));
            }
            if self.is_cauchy {
                let n = self.dim;
                let ok = (&w.hessian - Matrix::identity(n, n) * 2.0).amax() < 1e-12
                    && (w.laplacian - 2.0 * n as f64).abs() < 1e-12
                    && (&w.gradient - x * 2.0).amax() < 1e-12 * (1.0 + x.amax());
                if !ok {
                    return Err(Error::precondition(
                        "WeightSpec",
                        "Cauchy weight closed forms",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// L f from precomputed jets.
pub fn l_from_jets(f: &Jet, w: &WeightJet, beta: f64) -> f64 {
    w.value * f.laplacian() - (beta - 1.0) * w.gradient.dot(&f.gradient)
}

/// Γ₂ from precomputed jets, general weight, in the second-order arrangement.
pub fn gamma2_general_from_jets(f: &Jet, w: &WeightJet, beta: f64) -> f64 {
    let g = &f.gradient;
    let h = &f.hessian;
    let om = w.value;
    let hg = h * g;
    let g2 = g.norm_squared();
    om * om * h.norm_squared()
        + 0.5 * (om * w.laplacian - (beta - 1.0) * w.gradient.norm_squared()) * g2
        + 2.0 * om * hg.dot(&w.gradient)
        - f.laplacian() * om * g.dot(&w.gradient)
        + (beta - 1.0) * om * g.dot(&(&w.hessian * g))
}

/// Cauchy Γ₂ from a precomputed jet.
pub fn gamma2_cauchy_from_jet(f: &Jet, x: &Vector, beta: f64) -> f64 {
    let n = x.len() as f64;
    let om = 1.0 + x.norm_squared();
    let g = &f.gradient;
    let h = &f.hessian;
    om * om * h.norm_squared()
        + (n * om + 2.0 * (beta - 1.0)) * g.norm_squared()
        + 4.0 * om * (h * g).dot(x)
        - 2.0 * om * f.laplacian() * g.dot(x)
}

pub fn apply_l(f: &SmoothFunction, x: &Vector, weight: &WeightSpec, params: &MeasureParams) -> f64 {
    l_from_jets(&f.jet(x), &weight.eval(x), params.beta())
}

/// Γ(f) = ω|∇f|².
pub fn gamma(f: &SmoothFunction, x: &Vector, weight: &WeightSpec) -> f64 {
    weight.eval(x).value * f.gradient(x).norm_squared()
}

pub fn gamma2_general(
    f: &SmoothFunction,
    x: &Vector,
    weight: &WeightSpec,
    params: &MeasureParams,
) -> f64 {
    gamma2_general_from_jets(&f.jet(x), &weight.eval(x), params.beta())
}

pub fn gamma2_cauchy(f: &SmoothFunction, x: &Vector, params: &MeasureParams) -> f64 {
    gamma2_cauchy_from_jet(&f.jet(x), x, params.beta())
}

/// Γ₂ through its definition 2Γ₂ = LΓ(f) − 2Γ(f, Lf), with the derivatives
/// of the analytic fields Γ(f) and Lf taken by fourth-order central
/// differences of step h·(1+|x|).
pub fn gamma2_by_definition(
    f: &SmoothFunction,
    x: &Vector,
    weight: &WeightSpec,
    params: &MeasureParams,
    h: f64,
) -> f64 {
    let beta = params.beta();
    let step = h * (1.0 + x.norm());
    let fields = |y: &Vector| {
        let j = f.jet(y);
        let w = weight.eval(y);
        (
            w.value * j.gradient.norm_squared(),
            l_from_jets(&j, &w, beta),
        )
    };
    let n = x.len();
    let jet = f.jet(x);
    let w = weight.eval(x);
    let (g0, _) = fields(x);
    let mut grad_gamma = Vector::zeros(n);
    let mut grad_l = Vector::zeros(n);
    let mut lap_gamma = 0.0;
    for i in 0..n {
        let at = |k: f64| {
            let mut y = x.clone();
            y[i] += k * step;
            fields(&y)
        };
        let (gp, lp) = at(1.0);
        let (gm, lm) = at(-1.0);
        let (gp2, lp2) = at(2.0);
        let (gm2, lm2) = at(-2.0);
        grad_gamma[i] = (8.0 * (gp - gm) - (gp2 - gm2)) / (12.0 * step);
        grad_l[i] = (8.0 * (lp - lm) - (lp2 - lm2)) / (12.0 * step);
        lap_gamma += (16.0 * (gp + gm) - (gp2 + gm2) - 30.0 * g0) / (12.0 * step * step);
    }
    let l_gamma = w.value * lap_gamma - (beta - 1.0) * w.gradient.dot(&grad_gamma);
    let gamma_f_lf = w.value * jet.gradient.dot(&grad_l);
    0.5 * l_gamma - gamma_f_lf
}

/// The three terms of the Cauchy Γ₂ factorisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gamma2Parts {
    pub total: f64,
    /// ‖ωHess f + x⊗∇f + ∇f⊗x − ⟨∇f, x⟩Id‖²
    pub hessian_square: f64,
    /// (n−2)(|∇f|²|x|² − ⟨∇f, x⟩²)
    pub angular: f64,
    /// (2β+n−2)|∇f|²
    pub gradient: f64,
}

pub fn gamma2_cauchy_factorized_from_jet(f: &Jet, x: &Vector, beta: f64) -> Gamma2Parts {
    let n = x.len();
    let om = 1.0 + x.norm_squared();
    let g = &f.gradient;
    let gx = g.dot(x);
    let xg = x * g.transpose();
    let m = &f.hessian * om + &xg + xg.transpose() - Matrix::identity(n, n) * gx;
    let hessian_square = m.norm_squared();
    // Lagrange identity keeps the angular term exactly nonnegative.
    let mut wedge = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let c = g[i] * x[j] - g[j] * x[i];
            wedge += c * c;
        }
    }
    let angular = if n <= 2 {
        0.0
    } else {
        (n as f64 - 2.0) * wedge
    };
    let gradient = (2.0 * beta + n as f64 - 2.0) * g.norm_squared();
    Gamma2Parts {
        total: hessian_square + angular + gradient,
        hessian_square,
        angular,
        gradient,
    }
}

pub fn gamma2_cauchy_factorized(
    f: &SmoothFunction,
    x: &Vector,
    params: &MeasureParams,
) -> Gamma2Parts {
    gamma2_cauchy_factorized_from_jet(&f.jet(x), x, params.beta())
}

/// A point and test function with Γ₂(f)(x) < ρ Γ(f)(x).
#[derive(Debug, Clone)]
pub struct CdWitness {
    pub x: Vector,
    pub f: SmoothFunction,
    pub gamma: f64,
    pub gamma2: f64,
}

/// Shows that the Cauchy operator is not CD(ρ, ∞) for the given ρ > 0 by
/// placing ½ln|x|² far enough out that Γ₂/Γ ≈ (2β+n−2)/|x|² drops below ρ.
pub fn cd_witness(params: &MeasureParams, rho: f64) -> Result<CdWitness> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::invalid("rho", "must be positive and finite"));
    }
    let n = params.n();
    let beta = params.beta();
    let r = 2.0_f64.max(2.0 * ((2.0 * beta + n as f64) / rho).sqrt());
    let mut c = vec![0.0; n];
    c[0] = r;
    let f = make_radial_log_cutoff(&c, r / 4.0, r / 2.0)?;
    let x = Vector::from_vec(c);
    let jet = f.jet(&x);
    let gamma = (1.0 + x.norm_squared()) * jet.gradient.norm_squared();
    let gamma2 = gamma2_cauchy_from_jet(&jet, &x, beta);
    if !(gamma2 < rho * gamma) {
        return Err(Error::precondition(
            "cd_witness",
            format!(
                "Gamma2 < rho * Gamma at the witness (got {gamma2} vs {})",
                rho * gamma
            ),
        ));
    }
    Ok(CdWitness {
        x,
        f,
        gamma,
        gamma2,
    })
}

/// Minimum eigenvalue margins of the convexity assumptions over a point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margins {
    /// min λ_min(Hess ω).
    pub h1: f64,
    /// min λ_min((β−1)Hess ω + (n+1−β)/(n−1)·ω·[Hess ω − Δω Id]); None for n = 1.
    pub h2: Option<f64>,
    /// Same without the ω factor on the bracket, the form consistent with
    /// the intermediate-range curvature identity.
    pub h2_unweighted: Option<f64>,
}

fn min_eig(m: Matrix) -> f64 {
    SymmetricEigen::new(m).eigenvalues.min()
}

pub fn assumption_margins(
    weight: &WeightSpec,
    params: &MeasureParams,
    points: &[Vector],
) -> Result<Margins> {
    if points.is_empty() {
        return Err(Error::invalid("points", "empty point set"));
    }
    let n = params.n();
    let beta = params.beta();
    let mut h1 = f64::INFINITY;
    let mut h2 = f64::INFINITY;
    let mut h2u = f64::INFINITY;
    for x in points {
        let w = weight.eval(x);
        h1 = h1.min(min_eig(w.hessian.clone()));
        if n >= 2 {
            let c = (n as f64 + 1.0 - beta) / (n as f64 - 1.0);
            let bracket = &w.hessian - Matrix::identity(n, n) * w.laplacian;
            let base = &w.hessian * (beta - 1.0);
            h2 = h2.min(min_eig(&base + &bracket * (c * w.value)));
            h2u = h2u.min(min_eig(&base + &bracket * c));
        }
    }
    Ok(Margins {
        h1,
        h2: (n >= 2).then_some(h2),
        h2_unweighted: (n >= 2).then_some(h2u),
    })
}

/// Spectral-gap lower bounds for a weight with ρ₋Id ≤ Hess ω ≤ ρ₊Id.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBounds {
    /// ρ₋(β−1); valid for β ≥ n+1.
    pub upper_range_bound: f64,
    pub upper_applicable: bool,
    /// ρ₋(β−1−(n+1−β)/(n−1)(nκ−1)); None for n = 1.
    pub mid_range_bound: Option<f64>,
    /// [(n(n+1)κ−2)/(n(κ+1)−2), n+1]; None for n = 1.
    pub valid_beta_window: Option<(f64, f64)>,
    pub mid_applicable: bool,
}

pub fn lower_bound_predictions(
    params: &MeasureParams,
    rho_minus: f64,
    rho_plus: f64,
) -> Result<LowerBounds> {
    if !(0.0 < rho_minus && rho_minus <= rho_plus) {
        return Err(Error::invalid("rho", "need 0 < rho_minus <= rho_plus"));
    }
    let n = params.n() as f64;
    let beta = params.beta();
    let kappa = rho_plus / rho_minus;
    let upper = rho_minus * (beta - 1.0);
    let (mid, window) = if params.n() >= 2 {
        let mid = rho_minus * (beta - 1.0 - (n + 1.0 - beta) / (n - 1.0) * (n * kappa - 1.0));
        let start = (n * (n + 1.0) * kappa - 2.0) / (n * (kappa + 1.0) - 2.0);
        (Some(mid), Some((start, n + 1.0)))
    } else {
        (None, None)
    };
    Ok(LowerBounds {
        upper_range_bound: upper,
        upper_applicable: beta >= n + 1.0,
        mid_range_bound: mid,
        valid_beta_window: window,
        mid_applicable: window.is_some_and(|(a, b)| a <= beta && beta <= b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{
        make_linear, make_power_family, make_quadratic_centered, make_random_test,
        quasi_random_points,
    };
    use approx::assert_relative_eq;

    fn p(n: usize, beta: f64) -> MeasureParams {
        MeasureParams::new(n, beta).unwrap()
    }

    #[test]
    fn linear_and_quadratic_eigen_relations() {
        for &(n, beta) in &[(1, 2.0), (2, 3.5), (3, 5.0), (4, 4.5)] {
            let q = p(n, beta);
            let w = WeightSpec::cauchy(n);
            let v: Vec<f64> = (0..n).map(|i| 1.0 - 0.3 * i as f64).collect();
            let lin = make_linear(&v).unwrap();
            let quad = make_quadratic_centered(&q).unwrap();
            for x in quasi_random_points(n, 100, 5.0) {
                let r1 = apply_l(&lin, &x, &w, &q) + 2.0 * (beta - 1.0) * lin.value(&x);
                assert!(r1.abs() <= 1e-10 * (1.0 + x.norm_squared()), "{r1}");
                let lam = 4.0 * (beta - n as f64 / 2.0 - 1.0);
                let r2 = apply_l(&quad, &x, &w, &q) + lam * quad.value(&x);
                assert!(r2.abs() <= 1e-10 * (1.0 + x.norm_squared()), "{r2}");
            }
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let q = p(2, 3.0);
        let c = make_power_family(2, 0.0);
        let x = Vector::from_vec(vec![0.7, -0.2]);
        let w = WeightSpec::cauchy(2);
        assert_eq!(apply_l(&c, &x, &w, &q), 0.0);
        assert_eq!(gamma(&c, &x, &w), 0.0);
        assert_eq!(gamma2_cauchy(&c, &x, &q), 0.0);
        assert_eq!(gamma2_general(&c, &x, &w, &q), 0.0);
    }

    #[test]
    fn power_family_generator_formula() {
        let q = p(3, 2.7);
        let w = WeightSpec::cauchy(3);
        let eps = 0.35;
        let f = make_power_family(3, eps);
        for x in quasi_random_points(3, 50, 4.0) {
            let w1 = 1.0 + x.norm_squared();
            let expected = eps * (6.0 - 4.0 * (2.7 - eps)) * f.value(&x)
                + 4.0 * eps * (2.7 - eps) * w1.powf(eps - 1.0);
            assert_relative_eq!(
                apply_l(&f, &x, &w, &q),
                expected,
                max_relative = 1e-10,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn general_and_cauchy_gamma2_agree() {
        for &(n, beta) in &[(1, 1.2), (2, 3.0), (3, 2.2), (4, 6.0)] {
            let q = p(n, beta);
            let w = WeightSpec::cauchy(n);
            for seed in 0..10u64 {
                let f = make_random_test(n, seed, 4, 3.0).unwrap();
                for x in quasi_random_points(n, 20, 2.9) {
                    let a = gamma2_general(&f, &x, &w, &q);
                    let b = gamma2_cauchy(&f, &x, &q);
                    let parts = gamma2_cauchy_factorized(&f, &x, &q);
                    let scale = a.abs().max(b.abs()).max(1e-300);
                    assert!((a - b).abs() <= 1e-10 * scale.max(1.0));
                    assert!((parts.total - b).abs() <= 1e-10 * scale.max(1.0));
                    assert!(parts.hessian_square >= -1e-12);
                    assert!(parts.angular >= -1e-12);
                    assert!(parts.gradient >= -1e-12);
                }
            }
        }
    }

    #[test]
    fn one_dimensional_gamma2_form() {
        let q = p(1, 1.7);
        let w = WeightSpec::cauchy(1);
        let f = make_random_test(1, 3, 6, 2.0).unwrap();
        for x in quasi_random_points(1, 30, 1.9) {
            let j = f.jet(&x);
            let (t, d1, d2) = (x[0], j.gradient[0], j.hessian[(0, 0)]);
            let om = 1.0 + t * t;
            let expected = om * om * d2 * d2 + (om + 2.0 * 0.7) * d1 * d1 + 2.0 * d2 * d1 * t * om;
            assert_relative_eq!(
                gamma2_general(&f, &x, &w, &q),
                expected,
                max_relative = 1e-12,
                epsilon = 1e-12
            );
            assert_eq!(gamma2_cauchy_factorized(&f, &x, &q).angular, 0.0);
        }
    }

    #[test]
    fn definition_route_matches_closed_form() {
        let q = p(2, 2.6);
        let w = WeightSpec::cauchy(2);
        let f = make_random_test(2, 9, 5, 2.5).unwrap();
        for x in quasi_random_points(2, 40, 1.2) {
            let a = gamma2_by_definition(&f, &x, &w, &q, 1e-4);
            let b = gamma2_cauchy(&f, &x, &q);
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn linear_gamma2_at_origin() {
        let q = p(3, 2.5);
        let f = make_linear(&[1.0, 2.0, -1.0]).unwrap();
        let v = gamma2_cauchy(&f, &Vector::zeros(3), &q);
        assert_relative_eq!(v, (3.0 + 5.0 - 2.0) * 6.0, max_relative = 1e-14);
    }

    #[test]
    fn witness_closed_forms() {
        for &(n, beta) in &[(1, 1.0), (2, 2.0), (3, 4.5)] {
            let q = p(n, beta);
            for &rho in &[0.01, 0.1, 1.0, 10.0] {
                let wit = cd_witness(&q, rho).unwrap();
                let r2 = wit.x.norm_squared();
                assert_relative_eq!(wit.gamma, 1.0 + 1.0 / r2, max_relative = 1e-10);
                let g2 = n as f64 / (r2 * r2) + (2.0 * beta + n as f64 - 2.0) / r2;
                assert_relative_eq!(wit.gamma2, g2, max_relative = 1e-10);
                assert!(wit.gamma2 < rho * wit.gamma);
            }
        }
        assert!(cd_witness(&p(2, 2.0), -1.0).is_err());
    }

    #[test]
    fn margins_for_cauchy_and_quadratic_weights() {
        let q = p(3, 4.0);
        let pts = quasi_random_points(3, 20, 3.0);
        let m = assumption_margins(&WeightSpec::cauchy(3), &q, &pts).unwrap();
        assert_relative_eq!(m.h1, 2.0, epsilon = 1e-12);
        assert_relative_eq!(m.h2.unwrap(), 6.0, epsilon = 1e-12);
        assert_relative_eq!(
            m.h2_unweighted.unwrap(),
            4.0 * (4.0 - 1.5 - 1.0),
            epsilon = 1e-12
        );

        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 3.0, 2.0]));
        let w = WeightSpec::quadratic(a).unwrap();
        assert_eq!(w.rho_minus(), Some(1.0));
        assert_eq!(w.rho_plus(), Some(3.0));
        let m = assumption_margins(&w, &q, &pts).unwrap();
        assert_relative_eq!(m.h1, 1.0, epsilon = 1e-12);
        assert!(assumption_margins(&w, &q, &[]).is_err());
        assert!(
            assumption_margins(&WeightSpec::cauchy(1), &p(1, 2.0), &[Vector::zeros(1)])
                .unwrap()
                .h2
                .is_none()
        );
    }

    #[test]
    fn lower_bound_formulas() {
        let q = p(3, 3.2);
        let b = lower_bound_predictions(&q, 2.0, 2.0).unwrap();
        assert_relative_eq!(
            b.mid_range_bound.unwrap(),
            4.0 * (3.2 - 2.5),
            epsilon = 1e-12
        );
        assert_relative_eq!(b.valid_beta_window.unwrap().0, 2.5, epsilon = 1e-12);
        let edge = lower_bound_predictions(&p(3, 4.0), 1.5, 1.5).unwrap();
        assert_relative_eq!(edge.upper_range_bound, 1.5 * 3.0, epsilon = 1e-12);
        assert_relative_eq!(edge.mid_range_bound.unwrap(), 1.5 * 3.0, epsilon = 1e-12);
        let k2 = lower_bound_predictions(&p(2, 2.7), 1.0, 2.0).unwrap();
        assert_relative_eq!(k2.valid_beta_window.unwrap().0, 2.5, epsilon = 1e-12);
        assert!(k2.mid_applicable);
        assert!(lower_bound_predictions(&q, 2.0, 1.0).is_err());
    }

    #[test]
    fn weight_validation() {
        let pts = quasi_random_points(2, 10, 2.0);
        assert!(WeightSpec::cauchy(2).validate(&pts).is_ok());
        let bad = WeightSpec::custom(2, "neg", None, |x: &Vector| WeightJet {
            value: -1.0,
            gradient: x.clone(),
            hessian: Matrix::zeros(2, 2),
            laplacian: 0.0,
        })
        .unwrap();
        assert!(bad.validate(&pts).is_err());
        assert!(
            WeightSpec::custom(2, "b", Some((2.0, 1.0)), |_x: &Vector| unreachable!()).is_err()
        );
    }
}
