//! Spectral gap of −L for the Cauchy measures.
//!
//! Separating variables in spherical harmonics, f = g(r)Y_ℓ, reduces the
//! Dirichlet form to the radial quadratic forms
//!
//!   a_ℓ(g) = ∫₀^∞ (1+r²)[g′² + ℓ(ℓ+n−2) g²/r²] r^{n−1}(1+r²)^{−β} dr,
//!   b(g)   = ∫₀^∞ g² r^{n−1}(1+r²)^{−β} dr,
//!
//! whose generalized eigenvalues are assembled here with linear finite
//! elements in t = asinh r. The grid covers r ≤ R = cot δ; beyond R the
//! last hat function continues as a constant and one extra tail function
//! (r/R)^k − 1 carries the power-law decay of the eigenfunction.

use crate::error::{Error, Result};
use crate::measures::{omega_moment, MeasureParams};
use crate::quadrature::{integrate_radial, QuadratureSpec};
use crate::special::{gauss_legendre, power_tail_integral};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

/// Which branch of the piecewise gap formula applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeTag {
    Lower,
    Mid,
    Upper,
}

impl RangeTag {
    pub fn name(&self) -> &'static str {
        match self {
            RangeTag::Lower => "lower",
            RangeTag::Mid => "mid",
            RangeTag::Upper => "upper",
        }
    }
}

impl fmt::Display for RangeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RangeTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lower" => Ok(RangeTag::Lower),
            "mid" => Ok(RangeTag::Mid),
            "upper" => Ok(RangeTag::Upper),
            _ => Err(Error::invalid(
                "range",
                format!("expected lower, mid or upper, got `{s}`"),
            )),
        }
    }
}

/// Range containing β; boundaries belong to the lower-β branch.
pub fn range_tag(params: &MeasureParams) -> RangeTag {
    let (n, beta) = (params.n() as f64, params.beta());
    if params.n() == 1 {
        return if beta <= 1.5 {
            RangeTag::Lower
        } else {
            RangeTag::Upper
        };
    }
    if beta <= n / 2.0 + 2.0 {
        RangeTag::Lower
    } else if beta <= n + 1.0 {
        RangeTag::Mid
    } else {
        RangeTag::Upper
    }
}

/// Gap value of the named branch, whether or not β lies in that range.
pub fn branch_value(params: &MeasureParams, tag: RangeTag) -> f64 {
    let (n, beta) = (params.n() as f64, params.beta());
    match tag {
        RangeTag::Lower => (beta - n / 2.0).powi(2),
        RangeTag::Mid => 4.0 * (beta - n / 2.0 - 1.0),
        RangeTag::Upper => 2.0 * (beta - 1.0),
    }
}

/// The exact spectral gap λ₁(−L) and its range.
pub fn closed_form_gap(params: &MeasureParams) -> (f64, RangeTag) {
    let tag = range_tag(params);
    (branch_value(params, tag), tag)
}

/// Smallest of the Rayleigh-quotient upper bounds given by the linear
/// functions, the centred quadratic and the power family ω^ε.
pub fn upper_bound_min(params: &MeasureParams) -> f64 {
    let (n, beta) = (params.n() as f64, params.beta());
    let mut best = branch_value(params, RangeTag::Lower);
    if beta > n / 2.0 + 1.0 {
        best = best.min(branch_value(params, RangeTag::Upper));
    }
    if beta > n / 2.0 + 2.0 {
        best = best.min(branch_value(params, RangeTag::Mid));
    }
    best
}

/// ∫Γ(f_ε)dμ / Var(f_ε) for f_ε = ω^ε, in closed form.
pub fn rayleigh_quotient_power(eps: f64, params: &MeasureParams) -> Result<f64> {
    let limit = (2.0 * params.beta() - params.n() as f64) / 4.0;
    if eps == 0.0 || !(eps < limit) {
        return Err(Error::precondition(
            "rayleigh_quotient_power",
            format!("eps != 0 and eps < (2 beta - n)/4 = {limit}"),
        ));
    }
    let m = |gamma: f64| omega_moment(-gamma, params);
    let gamma = 4.0 * eps * eps * (m(2.0 * eps)? - m(2.0 * eps - 1.0)?);
    let var = m(2.0 * eps)? - m(eps)?.powi(2);
    Ok(gamma / var)
}

/// Same quotient by radial quadrature.
pub fn rayleigh_quotient_power_quadrature(eps: f64, params: &MeasureParams) -> Result<f64> {
    rayleigh_quotient_power(eps, params)?;
    let spec = |p: f64| QuadratureSpec {
        nodes: 96,
        tail_power: p,
        ..QuadratureSpec::default()
    };
    // The rule absorbs the growth ω^p of the integrand into its weights.
    let p2 = (2.0 * eps).max(0.0);
    let sq = integrate_radial(&|r| (1.0 + r * r).powf(2.0 * eps), params, &spec(p2))?;
    let mean = integrate_radial(&|r| (1.0 + r * r).powf(eps), params, &spec(p2 / 2.0))?;
    let gamma = integrate_radial(
        &|r| 4.0 * eps * eps * r * r * (1.0 + r * r).powf(2.0 * eps - 1.0),
        params,
        &spec(p2),
    )?;
    Ok(gamma / (sq - mean * mean))
}

fn one_d_limit(beta: f64) -> f64 {
    (2.0 * beta - 3.0) / 4.0
}

/// ∫Γ(f_ε)dμ / Var(f_ε) for the odd family f_ε = xω^ε on the line, in
/// closed form through moments of ω.
pub fn rayleigh_quotient_1d(eps: f64, beta: f64) -> Result<f64> {
    let params = MeasureParams::new(1, beta)?;
    if !(eps < one_d_limit(beta)) {
        return Err(Error::precondition(
            "rayleigh_quotient_1d",
            "eps < (2 beta - 3)/4",
        ));
    }
    let m = |gamma: f64| omega_moment(-gamma, &params);
    let a = 1.0 + 2.0 * eps;
    let sq = m(2.0 * eps + 1.0)? - m(2.0 * eps)?;
    let gamma = a * a * m(2.0 * eps + 1.0)? - 4.0 * eps * a * m(2.0 * eps)?
        + 4.0 * eps * eps * m(2.0 * eps - 1.0)?;
    // f is odd, so its mean vanishes and Var(f) = ∫f².
    Ok(gamma / sq)
}

/// Same quotient by radial quadrature.
pub fn rayleigh_quotient_1d_quadrature(eps: f64, beta: f64) -> Result<f64> {
    let params = MeasureParams::new(1, beta)?;
    if !(eps < one_d_limit(beta)) {
        return Err(Error::precondition(
            "rayleigh_quotient_1d",
            "eps < (2 beta - 3)/4",
        ));
    }
    let p = (2.0 * eps + 1.0).max(0.0);
    let spec = QuadratureSpec {
        nodes: 96,
        tail_power: p,
        ..QuadratureSpec::default()
    };
    let sq = integrate_radial(&|r| r * r * (1.0 + r * r).powf(2.0 * eps), &params, &spec)?;
    let gamma = integrate_radial(
        &|r| {
            let w = 1.0 + r * r;
            let d = w.powf(eps - 1.0) * ((1.0 + 2.0 * eps) * w - 2.0 * eps);
            w * d * d
        },
        &params,
        &spec,
    )?;
    Ok(gamma / sq)
}

/// Radial grid: m cells uniform in t = asinh r on [0, asinh(cot δ)].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub m: usize,
    pub delta: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            m: 1024,
            delta: 1e-3,
        }
    }
}

impl Discretization {
    pub fn new(m: usize, delta: f64) -> Result<Self> {
        let d = Self { m, delta };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 64 {
            return Err(Error::invalid("m", "at least 64 cells"));
        }
        if !(self.delta > 0.0 && self.delta <= 0.2) {
            return Err(Error::invalid("delta", "end gap must lie in (0, 0.2]"));
        }
        Ok(())
    }

    /// Truncation radius R = cot δ where the tail closure starts.
    pub fn radius(&self) -> f64 {
        1.0 / self.delta.tan()
    }
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    fn zeros(len: usize) -> Self {
        Self {
            diag: vec![0.0; len],
            off: vec![0.0; len.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let len = self.len();
        (0..len)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < len {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.mul_vec(v))
    }

    /// self − σ·other.
    pub fn shifted(&self, sigma: f64, other: &SymTridiag) -> SymTridiag {
        SymTridiag {
            diag: self
                .diag
                .iter()
                .zip(&other.diag)
                .map(|(a, b)| a - sigma * b)
                .collect(),
            off: self
                .off
                .iter()
                .zip(&other.off)
                .map(|(a, b)| a - sigma * b)
                .collect(),
        }
    }

    /// self + σ·other.
    pub fn plus(&self, sigma: f64, other: &SymTridiag) -> SymTridiag {
        self.shifted(-sigma, other)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let len = self.len();
        DMatrix::from_fn(len, len, |i, j| {
            if i == j {
                self.diag[i]
            } else if i + 1 == j {
                self.off[i]
            } else if j + 1 == i {
                self.off[j]
            } else {
                0.0
            }
        })
    }

    /// Number of negative pivots of the LDLᵀ factorisation, i.e. the number
    /// of negative eigenvalues (Sylvester's law of inertia).
    pub fn negative_count(&self) -> usize {
        let mut count = 0;
        let mut d = 0.0;
        for i in 0..self.len() {
            d = if i == 0 {
                self.diag[0]
            } else {
                let prev = if d == 0.0 { f64::MIN_POSITIVE } else { d };
                self.diag[i] - self.off[i - 1] * self.off[i - 1] / prev
            };
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Solves self·x = rhs by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let len = self.len();
        if len == 0 {
            return Ok(Vec::new());
        }
        // Rows hold (sub, diag, sup, sup2) after pivoting.
        let mut dl: Vec<f64> = self.off.clone();
        let mut d = self.diag.clone();
        let mut du: Vec<f64> = self.off.clone();
        let mut du2 = vec![0.0; len.saturating_sub(2)];
        let mut b = rhs.to_vec();
        for i in 0..len - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return Err(Error::Singular("tridiagonal solve"));
                }
                let f = dl[i] / d[i];
                d[i + 1] -= f * du[i];
                b[i + 1] -= f * b[i];
                dl[i] = 0.0;
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - f * tmp;
                du[i] = tmp;
                if i + 2 < len {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                b.swap(i, i + 1);
                b[i + 1] -= f * b[i];
            }
        }
        if d[len - 1] == 0.0 {
            return Err(Error::Singular("tridiagonal solve"));
        }
        let mut x = vec![0.0; len];
        for i in (0..len).rev() {
            let mut s = b[i];
            if i + 1 < len {
                s -= du[i] * x[i + 1];
            }
            if i + 2 < len {
                s -= du2[i] * x[i + 2];
            }
            x[i] = s / d[i];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tridiagonal solve"));
        }
        Ok(x)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Stiffness and mass matrices of one harmonic degree ℓ.
#[derive(Debug, Clone)]
pub struct ModeProblem {
    pub ell: usize,
    pub n: usize,
    pub beta: f64,
    pub a: SymTridiag,
    pub b: SymTridiag,
    /// Radii of the grid degrees of freedom (node 0 is absent for ℓ ≥ 1).
    pub radii: Vec<f64>,
    /// Exponent k of the tail function (r/R)^k − 1, stored as the last
    /// degree of freedom when present.
    pub tail_exponent: Option<f64>,
    pub radius: f64,
}

fn ln_sinh(t: f64) -> f64 {
    if t > 1.0 {
        t + (-(-2.0 * t).exp()).ln_1p() - std::f64::consts::LN_2
    } else {
        t.sinh().ln()
    }
}

fn ln_cosh(t: f64) -> f64 {
    t.abs() + (-2.0 * t.abs()).exp().ln_1p() - std::f64::consts::LN_2
}

/// k₋ = [(2β−n) − √((2β−n)² − 4(λ − ℓ(ℓ+n−2)))]/2, the decay exponent of an
/// eigenfunction with eigenvalue λ; None when no decaying power law exists.
pub fn tail_exponent(n: usize, beta: f64, ell: usize, lambda: f64) -> Option<f64> {
    let s = 2.0 * beta - n as f64;
    let c = (ell * (ell + n).saturating_sub(2)) as f64;
    let disc = s * s - 4.0 * (lambda - c);
    if disc <= 0.0 {
        return None;
    }
    let k = (s - disc.sqrt()) / 2.0;
    (k >= 0.1).then_some(k)
}

fn angular_coefficient(n: usize, ell: usize) -> f64 {
    ell as f64 * (ell as f64 + n as f64 - 2.0)
}

/// Assembles the forms of mode ℓ, optionally with a tail function of
/// exponent k (which must satisfy k < β − n/2).
pub fn assemble_mode(
    ell: usize,
    params: &MeasureParams,
    disc: &Discretization,
    tail: Option<f64>,
) -> Result<ModeProblem> {
    disc.validate()?;
    let n = params.n();
    let beta = params.beta();
    let nf = n as f64;
    if let Some(k) = tail {
        if !(k > 0.0 && k < beta - nf / 2.0) {
            return Err(Error::invalid(
                "tail",
                "exponent must lie in (0, beta - n/2)",
            ));
        }
    }
    if n == 1 && ell > 1 {
        return Err(Error::invalid(
            "ell",
            "the line has only the even (0) and odd (1) modes",
        ));
    }
    let m = disc.m;
    let radius = disc.radius();
    let t_end = radius.asinh();
    let h = t_end / m as f64;
    let lam = angular_coefficient(n, ell);
    let (gx, gw) = gauss_legendre(8);

    let total = m + 1 + usize::from(tail.is_some());
    let mut a = SymTridiag::zeros(total);
    let mut b = SymTridiag::zeros(total);
    for i in 0..m {
        let t0 = i as f64 * h;
        let (mut m00, mut m01, mut m11, mut stiff) = (0.0, 0.0, 0.0, 0.0);
        let (mut p00, mut p01, mut p11) = (0.0, 0.0, 0.0);
        for (x, w) in gx.iter().zip(&gw) {
            let xi = 0.5 * (x + 1.0);
            let t = t0 + xi * h;
            let wq = 0.5 * w * h;
            let (ls, lc) = (ln_sinh(t), ln_cosh(t));
            let rho = ((nf - 1.0) * ls + (1.0 - 2.0 * beta) * lc).exp() * wq;
            let (f0, f1) = (1.0 - xi, xi);
            m00 += rho * f0 * f0;
            m01 += rho * f0 * f1;
            m11 += rho * f1 * f1;
            stiff += rho / (h * h);
            if lam != 0.0 {
                let pot = lam * ((nf - 3.0) * ls + (3.0 - 2.0 * beta) * lc).exp() * wq;
                p00 += pot * f0 * f0;
                p01 += pot * f0 * f1;
                p11 += pot * f1 * f1;
            }
        }
        b.diag[i] += m00;
        b.diag[i + 1] += m11;
        b.off[i] += m01;
        a.diag[i] += stiff + p00;
        a.diag[i + 1] += stiff + p11;
        a.off[i] += -stiff + p01;
    }

    // Constant continuation of the last hat function beyond R.
    let mass_tail = |e: f64| radius.powf(-e) * power_tail_integral(nf - 1.0 + e, beta, radius);
    let pot_tail = |e: f64| radius.powf(-e) * power_tail_integral(nf - 3.0 + e, beta - 1.0, radius);
    b.diag[m] += mass_tail(0.0);
    if lam != 0.0 {
        a.diag[m] += lam * pot_tail(0.0);
    }
    if let Some(k) = tail {
        let c = m + 1;
        b.off[m] = mass_tail(k) - mass_tail(0.0);
        b.diag[c] = mass_tail(2.0 * k) - 2.0 * mass_tail(k) + mass_tail(0.0);
        let grad = k
            * k
            * radius.powf(-2.0 * k)
            * power_tail_integral(nf - 3.0 + 2.0 * k, beta - 1.0, radius);
        a.diag[c] = grad;
        if lam != 0.0 {
            a.diag[c] += lam * (pot_tail(2.0 * k) - 2.0 * pot_tail(k) + pot_tail(0.0));
            a.off[m] = lam * (pot_tail(k) - pot_tail(0.0));
        }
    }

    let mut radii: Vec<f64> = (0..=m).map(|i| (i as f64 * h).sinh()).collect();
    if ell >= 1 {
        // g(0) = 0 for nonradial modes.
        a.diag.remove(0);
        a.off.remove(0);
        b.diag.remove(0);
        b.off.remove(0);
        radii.remove(0);
    }
    let p = ModeProblem {
        ell,
        n,
        beta,
        a,
        b,
        radii,
        tail_exponent: tail,
        radius,
    };
    if p.a
        .diag
        .iter()
        .chain(&p.a.off)
        .chain(&p.b.diag)
        .chain(&p.b.off)
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("assemble_mode"));
    }
    Ok(p)
}

impl ModeProblem {
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Coefficients of g: nodal values on the grid, and for the tail
    /// function the amplitude c with g(2R) = g(R) + c(2^k − 1).
    pub fn interpolate(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut v: Vec<f64> = self.radii.iter().map(|r| g(*r)).collect();
        if let Some(k) = self.tail_exponent {
            let r = self.radius;
            v.push((g(2.0 * r) - g(r)) / (2f64.powf(k) - 1.0));
        }
        v
    }

    /// The constant function (only meaningful for ℓ = 0).
    pub fn constant_vector(&self) -> Vec<f64> {
        let mut v = vec![1.0; self.radii.len()];
        if self.tail_exponent.is_some() {
            v.push(0.0);
        }
        v
    }

    /// Discrete a(v)/b(v); for ℓ = 0 the B-mean is removed from v first, so
    /// the quotient is the Dirichlet form over the variance.
    pub fn rayleigh(&self, v: &[f64]) -> f64 {
        let num = self.a.quad_form(v);
        let mut den = self.b.quad_form(v);
        if self.ell == 0 {
            let one = self.constant_vector();
            let b1 = self.b.mul_vec(&one);
            den -= dot(v, &b1).powi(2) / dot(&one, &b1);
        }
        num / den
    }

    /// Number of generalized eigenvalues strictly below λ.
    pub fn count_below(&self, lambda: f64) -> usize {
        self.a.shifted(lambda, &self.b).negative_count()
    }

    /// The k smallest generalized eigenvalues of (A, B) by bisection on
    /// Sturm counts; accurate to a few ulps of the eigenvalue.
    pub fn lowest_eigs(&self, k: usize) -> Result<Vec<f64>> {
        if k == 0 || k > 6 || k > self.dim() {
            return Err(Error::invalid("k", "1 <= k <= 6 eigenvalues"));
        }
        let mut hi = 1.0;
        while self.count_below(hi) < k {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::NonFinite("lowest_eigs"));
            }
        }
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let (mut lo, mut up) = (-1.0, hi);
            for _ in 0..200 {
                let mid = 0.5 * (lo + up);
                if mid <= lo || mid >= up {
                    break;
                }
                if self.count_below(mid) > j {
                    up = mid;
                } else {
                    lo = mid;
                }
            }
            out.push(0.5 * (lo + up));
        }
        Ok(out)
    }

    /// Eigenvector for a converged eigenvalue, by inverse iteration, scaled
    /// to unit B-norm.
    pub fn eigenvector(&self, lambda: f64) -> Result<Vec<f64>> {
        let sigma = lambda - 1e-9 * lambda.abs().max(1e-3);
        let shifted = self.a.shifted(sigma, &self.b);
        let mut v = vec![1.0; self.dim()];
        for (i, x) in v.iter_mut().enumerate() {
            *x += 1e-3 * i as f64;
        }
        for _ in 0..4 {
            let rhs = self.b.mul_vec(&v);
            v = shifted.solve(&rhs)?;
            let norm = self.b.quad_form(&v).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(v)
    }

    /// All eigenvalues from a dense Cholesky reduction; for cross-checks at
    /// moderate sizes.
    pub fn dense_eigenvalues(&self) -> Result<Vec<f64>> {
        let chol = self
            .b
            .to_dense()
            .cholesky()
            .ok_or(Error::Singular("mass matrix"))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or(Error::Singular("mass matrix factor"))?;
        let c = &linv * self.a.to_dense() * linv.transpose();
        let sym = (&c + c.transpose()) * 0.5;
        let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }
}

/// Lowest eigenvalues of one mode after converging the tail exponent.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub problem: ModeProblem,
    pub eigenvalues: Vec<f64>,
    /// Lowest nontrivial eigenvalue: the second for ℓ = 0 (the first is
    /// the constant), the first otherwise.
    pub target: f64,
}

/// Solves mode ℓ, refitting the tail exponent to the target eigenvalue a
/// few times.
pub fn solve_mode(
    ell: usize,
    params: &MeasureParams,
    disc: &Discretization,
    k: usize,
) -> Result<ModeSolution> {
    let which = usize::from(ell == 0);
    let k = k.max(which + 1);
    let mut tail = None;
    let mut last = None;
    for _ in 0..5 {
        let problem = assemble_mode(ell, params, disc, tail)?;
        let eigenvalues = problem.lowest_eigs(k)?;
        let target = eigenvalues[which];
        let next = tail_exponent(params.n(), params.beta(), ell, target);
        let done = next
            .map(|x| tail.is_some_and(|t: f64| (t - x).abs() < 1e-10))
            .unwrap_or(tail.is_none());
        last = Some(ModeSolution {
            problem,
            eigenvalues,
            target,
        });
        if done {
            break;
        }
        tail = next;
    }
    Ok(last.expect("at least one pass"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeEigenvalue {
    pub ell: usize,
    pub value: f64,
    pub tail_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub n: usize,
    pub beta: f64,
    pub modes: Vec<ModeEigenvalue>,
    pub numeric_gap: f64,
    pub minimizing_mode: usize,
    pub closed_form: f64,
    pub range_tag: RangeTag,
    /// (numeric − closed form)/closed form; positive when the discrete
    /// value lies above the exact gap.
    pub rel_error: f64,
    pub m: usize,
    pub delta: f64,
}

impl GapReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub const CSV_HEADER: &'static str =
        "n,beta,range_tag,closed_form,numeric_gap,rel_error,minimizing_mode,m,delta";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{},{},{:e}",
            self.n,
            self.beta,
            self.range_tag,
            self.closed_form,
            self.numeric_gap,
            self.rel_error,
            self.minimizing_mode,
            self.m,
            self.delta
        )
    }
}

/// Numeric λ₁(−L): the smallest nontrivial eigenvalue over modes 0..=ℓ_max
/// (0 and 1 only on the line).
pub fn numeric_gap(
    params: &MeasureParams,
    disc: &Discretization,
    ell_max: usize,
) -> Result<GapReport> {
    if ell_max < 2 {
        return Err(Error::invalid("ell_max", "at least 2"));
    }
    let top = if params.n() == 1 { 1 } else { ell_max };
    let modes: Vec<ModeEigenvalue> = (0..=top)
        .into_par_iter()
        .map(|ell| {
            solve_mode(ell, params, disc, 1).map(|s| ModeEigenvalue {
                ell,
                value: s.target,
                tail_exponent: s.problem.tail_exponent,
            })
        })
        .collect::<Result<_>>()?;
    let best = modes
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least two modes");
    let (closed_form, range_tag) = closed_form_gap(params);
    Ok(GapReport {
        n: params.n(),
        beta: params.beta(),
        numeric_gap: best.value,
        minimizing_mode: best.ell,
        closed_form,
        range_tag,
        rel_error: (best.value - closed_form) / closed_form,
        m: disc.m,
        delta: disc.delta,
        modes,
    })
}

/// `steps` equally spaced β values in [lo, hi].
pub fn beta_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// Gap reports over a β sweep, in ascending β order.
pub fn sweep(
    n: usize,
    betas: &[f64],
    disc: &Discretization,
    ell_max: usize,
) -> Result<Vec<GapReport>> {
    betas
        .par_iter()
        .map(|b| numeric_gap(&MeasureParams::new(n, *b)?, disc, ell_max))
        .collect()
}

pub fn write_sweep_csv<W: Write>(reports: &[GapReport], mut out: W) -> Result<()> {
    writeln!(out, "{}", GapReport::CSV_HEADER)?;
    for r in reports {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}
