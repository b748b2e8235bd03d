//! Smooth test functions with hand-coded first and second derivatives.

use crate::error::{Error, Result};
use crate::measures::MeasureParams;
use crate::special::gauss_legendre;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::sync::Arc;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Value, gradient and Hessian of a function at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vector,
    pub hessian: Matrix,
}

impl Jet {
    pub fn zero(n: usize) -> Self {
        Self {
            value: 0.0,
            gradient: Vector::zeros(n),
            hessian: Matrix::zeros(n, n),
        }
    }

    pub fn laplacian(&self) -> f64 {
        self.hessian.trace()
    }

    /// Product rule: (fg)'' = f''g + f'⊗g' + g'⊗f' + f g''.
    pub fn mul(&self, other: &Jet) -> Jet {
        let cross = &self.gradient * other.gradient.transpose();
        // Summing the symmetric part first keeps the result exactly symmetric.
        let sym = &cross + cross.transpose();
        Jet {
            value: self.value * other.value,
            gradient: &self.gradient * other.value + &other.gradient * self.value,
            hessian: (&self.hessian * other.value + &other.hessian * self.value) + sym,
        }
    }
}

type JetFn = dyn Fn(&Vector) -> Jet + Send + Sync;

/// A C² scalar field on ℝⁿ given by an analytic jet evaluator.
///
/// `tail_power` is a growth hint p with f² and ω|∇f|² = O((1+|x|²)^p);
/// quadrature uses it to keep heavy-tailed integrands exact-ish.
#[derive(Clone)]
pub struct SmoothFunction {
    dim: usize,
    label: String,
    support_radius: Option<f64>,
    tail_power: f64,
    jet: Arc<JetFn>,
}

impl fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFunction")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl SmoothFunction {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        support_radius: Option<f64>,
        tail_power: f64,
        jet: impl Fn(&Vector) -> Jet + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            label: label.into(),
            support_radius,
            tail_power,
            jet: Arc::new(jet),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.support_radius
    }

    pub fn tail_power(&self) -> f64 {
        self.tail_power
    }

    pub fn jet(&self, x: &Vector) -> Jet {
        debug_assert_eq!(x.len(), self.dim);
        (self.jet)(x)
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.jet(x).value
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.jet(x).gradient
    }

    pub fn hessian(&self, x: &Vector) -> Matrix {
        self.jet(x).hessian
    }

    pub fn laplacian(&self, x: &Vector) -> f64 {
        self.jet(x).laplacian()
    }

    /// Multiplies by a radial C² bump centred at `center`, equal to 1 within
    /// `r_in` and vanishing beyond `r_out`.
    pub fn times_bump(&self, center: Vector, r_in: f64, r_out: f64) -> SmoothFunction {
        let inner = self.clone();
        let support = center.norm() + r_out;
        let label = format!("{}*bump", self.label);
        SmoothFunction::new(self.dim, label, Some(support), 0.0, move |x| {
            let b = bump_jet(x, &center, r_in, r_out);
            if b.value == 0.0 && b.gradient.iter().all(|v| *v == 0.0) {
                return Jet::zero(x.len());
            }
            inner.jet(x).mul(&b)
        })
    }

    /// f + c.
    pub fn plus_constant(&self, c: f64) -> SmoothFunction {
        let inner = self.clone();
        let label = format!("{}+{c}", self.label);
        SmoothFunction::new(self.dim, label, None, self.tail_power, move |x| {
            let mut j = inner.jet(x);
            j.value += c;
            j
        })
    }
}

/// Bump profile on the transition shell: 1 − t³(10 − 15t + 6t²) and its
/// first two derivatives. C² at both ends.
pub fn bump_profile(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (1.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (0.0, 0.0, 0.0)
    } else {
        let s = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let u = 1.0 - t;
        (s, -30.0 * t * t * u * u, -60.0 * t * u * (1.0 - 2.0 * t))
    }
}

/// Jet of a radial profile φ(|x − c|), given φ, φ', φ'' at ρ = |x − c|.
///
/// Callers must ensure φ'(ρ)/ρ stays bounded as ρ → 0 (φ' vanishes near 0).
fn radial_jet(x: &Vector, center: &Vector, phi: impl Fn(f64) -> (f64, f64, f64)) -> Jet {
    let n = x.len();
    let d = x - center;
    let rho = d.norm();
    let (v, d1, d2) = phi(rho);
    if d1 == 0.0 && d2 == 0.0 {
        return Jet {
            value: v,
            gradient: Vector::zeros(n),
            hessian: Matrix::zeros(n, n),
        };
    }
    let u = d / rho;
    let uu = &u * u.transpose();
    let hessian = &uu * d2 + (Matrix::identity(n, n) - &uu) * (d1 / rho);
    Jet {
        value: v,
        gradient: u * d1,
        hessian,
    }
}

/// Radial bump centred at `center`: 1 for |x−c| ≤ r_in, 0 for |x−c| ≥ r_out.
pub fn bump_jet(x: &Vector, center: &Vector, r_in: f64, r_out: f64) -> Jet {
    let width = r_out - r_in;
    radial_jet(x, center, |rho| {
        let (s, d1, d2) = bump_profile((rho - r_in) / width);
        (s, d1 / width, d2 / (width * width))
    })
}

/// f(x) = ⟨v, x⟩.
pub fn make_linear(v: &[f64]) -> Result<SmoothFunction> {
    if v.is_empty() {
        return Err(Error::InvalidDimension(0));
    }
    if v.iter().all(|c| *c == 0.0) {
        return Err(Error::invalid(
            "v",
            "linear coefficient vector must be nonzero",
        ));
    }
    let v = Vector::from_column_slice(v);
    let n = v.len();
    Ok(SmoothFunction::new(n, "linear", None, 1.0, move |x| Jet {
        value: v.dot(x),
        gradient: v.clone(),
        hessian: Matrix::zeros(n, n),
    }))
}

/// True when the centred quadratic lies in L²(μ_β), i.e. β > n/2 + 2.
pub fn quadratic_in_l2(params: &MeasureParams) -> bool {
    params.beta() > params.half_n() + 2.0
}

/// f(x) = |x|² − n/(2β−n−2), centred whenever E|x|² is finite.
///
/// Any β is accepted; the label records whether f belongs to L²(μ_β) (see
/// [`quadratic_in_l2`]). At β = n/2 + 1 the constant is infinite and the
/// constructor fails.
pub fn make_quadratic_centered(params: &MeasureParams) -> Result<SmoothFunction> {
    let n = params.n();
    let denom = 2.0 * params.beta() - n as f64 - 2.0;
    if denom == 0.0 {
        return Err(Error::precondition(
            "make_quadratic_centered",
            "beta != n/2 + 1",
        ));
    }
    let c = n as f64 / denom;
    let label = if quadratic_in_l2(params) {
        "quadratic_centered".to_string()
    } else {
        "quadratic_centered (not in L2)".to_string()
    };
    Ok(SmoothFunction::new(n, label, None, 2.0, move |x| Jet {
        value: x.norm_squared() - c,
        gradient: x * 2.0,
        hessian: Matrix::identity(n, n) * 2.0,
    }))
}

/// f(x) = a|x|² + b.
pub fn make_quadratic(n: usize, a: f64, b: f64) -> SmoothFunction {
    SmoothFunction::new(n, "quadratic", None, 2.0, move |x| Jet {
        value: a * x.norm_squared() + b,
        gradient: x * (2.0 * a),
        hessian: Matrix::identity(n, n) * (2.0 * a),
    })
}

/// f_ε(x) = (1+|x|²)^ε.
pub fn make_power_family(n: usize, epsilon: f64) -> SmoothFunction {
    let e = epsilon;
    SmoothFunction::new(
        n,
        format!("power({e})"),
        None,
        (2.0 * e).max(0.0),
        move |x| {
            let w = 1.0 + x.norm_squared();
            let we = w.powf(e);
            let g1 = 2.0 * e * we / w;
            let g2 = 4.0 * e * (e - 1.0) * we / (w * w);
            Jet {
                value: we,
                gradient: x * g1,
                hessian: Matrix::identity(n, n) * g1 + (x * x.transpose()) * g2,
            }
        },
    )
}

/// f_ε(x) = x(1+x²)^ε in one dimension.
pub fn make_one_d_family(n: usize, epsilon: f64) -> Result<SmoothFunction> {
    if n != 1 {
        return Err(Error::precondition("make_one_d_family", "dimension 1"));
    }
    let e = epsilon;
    Ok(SmoothFunction::new(
        1,
        format!("x*power({e})"),
        None,
        (2.0 * e + 1.0).max(0.0),
        move |x| {
            let t = x[0];
            let w = 1.0 + t * t;
            let we = w.powf(e);
            let d1 = we + 2.0 * e * t * t * we / w;
            let d2 = 6.0 * e * t * we / w + 4.0 * e * (e - 1.0) * t * t * t * we / (w * w);
            Jet {
                value: t * we,
                gradient: Vector::from_element(1, d1),
                hessian: Matrix::from_element(1, 1, d2),
            }
        },
    ))
}

/// f(x) = ∫₀ˣ (1+s²)^a ds in one dimension; the value uses a 32-point
/// Gauss–Legendre rule, derivatives are exact.
pub fn make_one_d_primitive(exponent: f64) -> SmoothFunction {
    let a = exponent;
    let (gx, gw) = gauss_legendre(32);
    SmoothFunction::new(
        1,
        format!("primitive(omega^{a})"),
        None,
        (2.0 * a + 1.0).max(0.0),
        move |x| {
            let t = x[0];
            let value: f64 = gx
                .iter()
                .zip(&gw)
                .map(|(u, w)| {
                    let s = 0.5 * t * (u + 1.0);
                    w * (1.0 + s * s).powf(a)
                })
                .sum::<f64>()
                * 0.5
                * t;
            let w = 1.0 + t * t;
            Jet {
                value,
                gradient: Vector::from_element(1, w.powf(a)),
                hessian: Matrix::from_element(1, 1, 2.0 * a * t * w.powf(a - 1.0)),
            }
        },
    )
}

/// ½ ln|x|² times a bump equal to 1 near `x0`.
pub fn make_radial_log_cutoff(x0: &[f64], r_in: f64, r_out: f64) -> Result<SmoothFunction> {
    let c = Vector::from_column_slice(x0);
    let norm = c.norm();
    if norm == 0.0 {
        return Err(Error::invalid("x0", "centre must be nonzero"));
    }
    if !(0.0 < r_in && r_in < r_out && r_out < norm) {
        return Err(Error::precondition(
            "make_radial_log_cutoff",
            format!("0 < r_in < r_out < |x0| (got {r_in}, {r_out}, {norm})"),
        ));
    }
    let n = c.len();
    Ok(SmoothFunction::new(
        n,
        "radial_log_cutoff",
        Some(norm + r_out),
        0.0,
        move |x| {
            if (x - &c).norm() >= r_out {
                return Jet::zero(n);
            }
            let r2 = x.norm_squared();
            let log = Jet {
                value: 0.5 * r2.ln(),
                gradient: x / r2,
                hessian: Matrix::identity(n, n) / r2 - (x * x.transpose()) * (2.0 / (r2 * r2)),
            };
            log.mul(&bump_jet(x, &c, r_in, r_out))
        },
    ))
}

#[derive(Debug, Clone)]
struct Monomial {
    coeff: f64,
    exps: Vec<u32>,
}

fn monomials(n: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(n, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, degree, &mut Vec::with_capacity(n), &mut out);
    out
}

fn pow_and_derivs(y: f64, e: u32) -> (f64, f64, f64) {
    let ef = e as f64;
    match e {
        0 => (1.0, 0.0, 0.0),
        1 => (y, 1.0, 0.0),
        _ => {
            let p2 = y.powi(e as i32 - 2);
            (p2 * y * y, ef * p2 * y, ef * (ef - 1.0) * p2)
        }
    }
}

/// Random polynomial of total degree ≤ `degree` in x/R, with standard normal
/// coefficients, times a radial bump equal to 1 on |x| ≤ R/2 and 0 beyond R.
pub fn make_random_test(n: usize, seed: u64, degree: u32, radius: f64) -> Result<SmoothFunction> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if degree > 6 {
        return Err(Error::invalid("degree", "at most 6"));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid("R", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<Monomial> = monomials(n, degree)
        .into_iter()
        .map(|exps| Monomial {
            coeff: StandardNormal.sample(&mut rng),
            exps,
        })
        .collect();
    let origin = Vector::zeros(n);
    let inv_r = 1.0 / radius;
    let label = format!("random(seed={seed},deg={degree},R={radius})");
    Ok(SmoothFunction::new(n, label, Some(radius), 0.0, move |x| {
        let b = bump_jet(x, &origin, 0.5 * radius, radius);
        if b.value == 0.0 && b.gradient.iter().all(|v| *v == 0.0) {
            return Jet::zero(n);
        }
        let y: Vec<f64> = x.iter().map(|v| v * inv_r).collect();
        let mut poly = Jet::zero(n);
        let mut p = vec![(0.0, 0.0, 0.0); n];
        for m in &terms {
            for i in 0..n {
                p[i] = pow_and_derivs(y[i], m.exps[i]);
            }
            let prod_except = |skip: &[usize]| -> f64 {
                (0..n)
                    .filter(|k| !skip.contains(k))
                    .map(|k| p[k].0)
                    .product()
            };
            poly.value += m.coeff * prod_except(&[]);
            for i in 0..n {
                if p[i].1 != 0.0 {
                    poly.gradient[i] += m.coeff * p[i].1 * prod_except(&[i]) * inv_r;
                }
                if p[i].2 != 0.0 {
                    poly.hessian[(i, i)] += m.coeff * p[i].2 * prod_except(&[i]) * inv_r * inv_r;
                }
                for j in (i + 1)..n {
                    if p[i].1 != 0.0 && p[j].1 != 0.0 {
                        let v = m.coeff * p[i].1 * p[j].1 * prod_except(&[i, j]) * inv_r * inv_r;
                        poly.hessian[(i, j)] += v;
                        poly.hessian[(j, i)] += v;
                    }
                }
            }
        }
        poly.mul(&b)
    }))
}

/// Largest relative disagreement between the analytic derivatives and
/// central finite differences with step `h`: the gradient is compared with
/// differences of the value, the Hessian with differences of the gradient.
///
/// Errors are scaled by max(1, largest analytic entry) for each point.
pub fn check_derivatives(f: &SmoothFunction, points: &[Vector], h: f64) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::invalid(
            "h",
            "finite-difference step must lie in [1e-6, 1e-3]",
        ));
    }
    let n = f.dim();
    let mut worst: f64 = 0.0;
    for x in points {
        let jet = f.jet(x);
        let gscale = jet.gradient.amax().max(1.0);
        let hscale = jet.hessian.amax().max(1.0);
        for i in 0..n {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let jp = f.jet(&xp);
            let jm = f.jet(&xm);
            let fd = (jp.value - jm.value) / (2.0 * h);
            worst = worst.max((fd - jet.gradient[i]).abs() / gscale);
            for j in 0..n {
                let fd = (jp.gradient[j] - jm.gradient[j]) / (2.0 * h);
                worst = worst.max((fd - jet.hessian[(i, j)]).abs() / hscale);
            }
        }
    }
    Ok(worst)
}

/// Deterministic low-discrepancy points (Halton sequence) in the ball of
/// the given radius, skipping the centre.
pub fn quasi_random_points(n: usize, count: usize, radius: f64) -> Vec<Vector> {
    const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    fn halton(mut i: u32, base: u32) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    let mut out = Vec::with_capacity(count);
    let mut k = 1u32;
    while out.len() < count {
        let v: Vec<f64> = (0..n)
            .map(|d| 2.0 * halton(k, PRIMES[d % 8]) - 1.0)
            .collect();
        k += 1;
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm <= 1.0 && norm > 1e-3 {
            out.push(Vector::from_vec(v) * radius);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_basics() {
        let f = make_linear(&[1.0, 0.0, 0.0]).unwrap();
        let x = Vector::from_vec(vec![2.0, 0.5, -1.0]);
        assert_eq!(f.value(&x), 2.0);
        assert_eq!(f.gradient(&x), Vector::from_vec(vec![1.0, 0.0, 0.0]));
        assert_eq!(f.hessian(&x), Matrix::zeros(3, 3));
        assert!(make_linear(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn quadratic_centered_value_at_origin() {
        let p = MeasureParams::new(3, 4.0).unwrap();
        let f = make_quadratic_centered(&p).unwrap();
        assert_relative_eq!(f.value(&Vector::zeros(3)), -1.0);
        assert_eq!(f.laplacian(&Vector::from_vec(vec![0.3, 2.0, 1.0])), 6.0);
        let low = MeasureParams::new(3, 3.0).unwrap();
        assert!(make_quadratic_centered(&low)
            .unwrap()
            .label()
            .contains("not in L2"));
        assert!(make_quadratic_centered(&MeasureParams::new(2, 2.0).unwrap()).is_err());
    }

    #[test]
    fn power_family_special_cases() {
        let x = Vector::from_vec(vec![0.4, -1.1]);
        let f0 = make_power_family(2, 0.0);
        assert_eq!(f0.value(&x), 1.0);
        let f1 = make_power_family(2, 1.0);
        assert_relative_eq!(f1.value(&x), 1.0 + x.norm_squared(), epsilon = 1e-14);
        assert!((f1.hessian(&x) - Matrix::identity(2, 2) * 2.0).amax() < 1e-14);
    }

    #[test]
    fn one_d_family_is_odd_and_reduces_to_identity() {
        let f = make_one_d_family(1, 0.37).unwrap();
        for &t in &[0.3, 1.7, 5.0] {
            let a = f.value(&Vector::from_element(1, t));
            let b = f.value(&Vector::from_element(1, -t));
            assert_eq!(a, -b);
        }
        let id = make_one_d_family(1, 0.0).unwrap();
        assert_eq!(id.value(&Vector::from_element(1, 2.5)), 2.5);
        assert!(make_one_d_family(2, 0.1).is_err());
    }

    #[test]
    fn primitive_matches_closed_form_for_a_equals_one() {
        let f = make_one_d_primitive(1.0);
        let t: f64 = 1.3;
        assert_relative_eq!(
            f.value(&Vector::from_element(1, t)),
            t + t.powi(3) / 3.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn bump_profile_is_c2_at_the_ends() {
        let (s0, d0, dd0) = bump_profile(1e-9);
        let (s1, d1, dd1) = bump_profile(1.0 - 1e-9);
        assert!((s0 - 1.0).abs() < 1e-20 && d0.abs() < 1e-15 && dd0.abs() < 1e-7);
        assert!(s1.abs() < 1e-15 && d1.abs() < 1e-15 && dd1.abs() < 1e-7);
    }

    #[test]
    fn radial_log_cutoff_vanishes_outside_and_rejects_bad_geometry() {
        let f = make_radial_log_cutoff(&[3.0, 0.0], 0.5, 1.0).unwrap();
        let far = Vector::from_vec(vec![0.0, 0.0]);
        assert_eq!(f.jet(&far), Jet::zero(2));
        let x0 = Vector::from_vec(vec![3.0, 0.0]);
        assert_relative_eq!(f.value(&x0), 3f64.ln(), epsilon = 1e-14);
        assert!(make_radial_log_cutoff(&[0.0, 0.0], 0.5, 1.0).is_err());
        assert!(make_radial_log_cutoff(&[1.0, 0.0], 0.5, 1.5).is_err());
    }

    #[test]
    fn random_test_support_and_seed_dependence() {
        let f = make_random_test(2, 1, 5, 2.0).unwrap();
        let g = make_random_test(2, 2, 5, 2.0).unwrap();
        let outside = Vector::from_vec(vec![1.5, 1.5]);
        assert_eq!(f.gradient(&outside), Vector::zeros(2));
        let x = Vector::from_vec(vec![0.3, -0.2]);
        assert_ne!(f.value(&x), g.value(&x));
        assert!(make_random_test(2, 1, 7, 1.0).is_err());
    }

    #[test]
    fn derivative_checks() {
        let pts = quasi_random_points(3, 100, 2.0);
        let lin = make_linear(&[1.0, -2.0, 0.5]).unwrap();
        assert!(check_derivatives(&lin, &pts, 1e-4).unwrap() <= 1e-9);
        let pw = make_power_family(3, 0.3);
        assert!(check_derivatives(&pw, &pts, 1e-4).unwrap() <= 1e-6);
        assert!(check_derivatives(&pw, &pts, 1e-2).is_err());

        let bad = SmoothFunction::new(3, "corrupted", None, 0.0, move |x| {
            let mut j = pw.jet(x);
            j.gradient[0] += 0.1;
            j
        });
        assert!(check_derivatives(&bad, &pts, 1e-4).unwrap() > 1e-2);
    }
}
