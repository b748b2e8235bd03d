//! Integration against μ_β and numerical verification of the integrated
//! Γ₂ identities (integration by parts and curvature rewritings).
//!
//! Radial integrals over [0, ∞) use the compactifying substitution
//! u = cos²θ = 1/(1+r²) (r = tan θ), under which r^{n−1}(1+r²)^{−β}dr becomes
//! the Jacobi weight ½ u^{β−n/2−1}(1−u)^{n/2−1}du, integrated by Gauss–Jacobi.
//! Compactly supported integrands use composite Gauss–Legendre panels in r.

use crate::error::{Error, Result};
use crate::functions::{make_random_test, Matrix, SmoothFunction, Vector};
use crate::measures::{log_normalization, sample, MeasureParams};
use crate::operators::{gamma2_general_from_jets, WeightJet, WeightSpec};
use crate::special::{gauss_jacobi_unit, gauss_legendre, ln_sphere_area};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Radial rule (compactified unless truncated) times a deterministic
    /// angular rule; available for n ≤ 3.
    RadialCompactified,
    /// Radial rule times uniform angles; n = 2 only.
    Polar2d,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    /// Gauss–Jacobi order, or Gauss–Legendre order per panel when truncated.
    pub nodes: usize,
    /// Panels per interval between consecutive breakpoints (truncated rules).
    pub panels: usize,
    /// Angular resolution: angles for n = 2, azimuths for n = 3 (with half
    /// as many polar nodes).
    pub angular: usize,
    /// Integrate over |x| ≤ R only (for compactly supported integrands).
    pub truncation: Option<f64>,
    /// Radii where the integrand is only piecewise smooth.
    pub breakpoints: Vec<f64>,
    /// Growth exponent p absorbed into the rule: the integrand is assumed to
    /// behave like (1+r²)^p at infinity (compactified rule only).
    pub tail_power: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::RadialCompactified,
            nodes: 64,
            panels: 2,
            angular: 64,
            truncation: None,
            breakpoints: Vec::new(),
            tail_power: 0.0,
            samples: 1_000_000,
            seed: 0,
        }
    }
}

impl QuadratureSpec {
    /// Rule for an integrand supported in |x| ≤ R that is only C² across the
    /// shell radius R/2 (the random test functions).
    pub fn for_support(radius: f64) -> Self {
        Self {
            nodes: 20,
            truncation: Some(radius),
            breakpoints: vec![0.5 * radius],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 16 {
            return Err(Error::invalid("nodes", "at least 16 quadrature nodes"));
        }
        if self.panels == 0 || self.angular == 0 {
            return Err(Error::invalid(
                "panels",
                "panels and angular nodes must be positive",
            ));
        }
        if let Some(r) = self.truncation {
            if !(r > 0.0) {
                return Err(Error::invalid("truncation", "radius must be positive"));
            }
        }
        if self.scheme == Scheme::MonteCarlo && self.samples < 2 {
            return Err(Error::invalid(
                "samples",
                "Monte Carlo needs at least two samples",
            ));
        }
        Ok(())
    }
}

/// Radial nodes and weights: Σ wᵢ h(rᵢ) ≈ ∫ h(|x|) dμ_β.
#[derive(Debug, Clone)]
pub struct RadialRule {
    pub r: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn radial_rule(params: &MeasureParams, spec: &QuadratureSpec) -> Result<RadialRule> {
    spec.validate()?;
    let n = params.n();
    let beta = params.beta();
    let ln_z = log_normalization(params);
    match spec.truncation {
        None => {
            let p = spec.tail_power;
            let shifted = params.with_beta(beta - p).map_err(|_| {
                Error::precondition(
                    "radial_rule",
                    "beta - tail_power > n/2 for the compactified rule",
                )
            })?;
            let (u, w) = gauss_jacobi_unit(
                spec.nodes,
                params.half_n() - 1.0,
                shifted.beta() - params.half_n() - 1.0,
            );
            let ratio = log_normalization(&shifted) - ln_z;
            let r = u.iter().map(|u| ((1.0 - u) / u).sqrt()).collect();
            // ω^{-p} = u^p
            let w = u
                .iter()
                .zip(&w)
                .map(|(u, w)| w * (ratio + p * u.ln()).exp())
                .collect();
            Ok(RadialRule { r, w })
        }
        Some(radius) => {
            let (gx, gw) = gauss_legendre(spec.nodes);
            let mut cuts: Vec<f64> = vec![0.0];
            cuts.extend(
                spec.breakpoints
                    .iter()
                    .copied()
                    .filter(|b| *b > 0.0 && *b < radius),
            );
            cuts.push(radius);
            cuts.sort_by(f64::total_cmp);
            let ln_area = ln_sphere_area(n);
            let mut r = Vec::new();
            let mut w = Vec::new();
            for seg in cuts.windows(2) {
                let h = (seg[1] - seg[0]) / spec.panels as f64;
                for k in 0..spec.panels {
                    let a = seg[0] + k as f64 * h;
                    for (x, wx) in gx.iter().zip(&gw) {
                        let rr = a + 0.5 * h * (x + 1.0);
                        let ln_dens = (n as f64 - 1.0) * rr.ln() - beta * (1.0 + rr * rr).ln();
                        r.push(rr);
                        w.push(0.5 * h * wx * (ln_area + ln_dens - ln_z).exp());
                    }
                }
            }
            Ok(RadialRule { r, w })
        }
    }
}

/// ∫ h(|x|) dμ_β.
pub fn integrate_radial(
    h: &dyn Fn(f64) -> f64,
    params: &MeasureParams,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let rule = radial_rule(params, spec)?;
    let v: f64 = rule.r.iter().zip(&rule.w).map(|(r, w)| w * h(*r)).sum();
    if !v.is_finite() {
        return Err(Error::NonFinite("integrate_radial"));
    }
    Ok(v)
}

/// Directions and weights (summing to 1) of the angular rule on S^{n−1}.
pub fn sphere_rule(n: usize, angular: usize) -> Result<Vec<(Vector, f64)>> {
    match n {
        1 => Ok(vec![
            (Vector::from_element(1, 1.0), 0.5),
            (Vector::from_element(1, -1.0), 0.5),
        ]),
        2 => Ok((0..angular)
            .map(|j| {
                let phi = 2.0 * PI * (j as f64 + 0.5) / angular as f64;
                (
                    Vector::from_vec(vec![phi.cos(), phi.sin()]),
                    1.0 / angular as f64,
                )
            })
            .collect()),
        3 => {
            let polar = (angular / 2).max(8);
            let (z, wz) = gauss_legendre(polar);
            let mut out = Vec::with_capacity(polar * angular);
            for (zi, wi) in z.iter().zip(&wz) {
                let s = (1.0 - zi * zi).sqrt();
                for j in 0..angular {
                    let phi = 2.0 * PI * (j as f64 + 0.5) / angular as f64;
                    out.push((
                        Vector::from_vec(vec![s * phi.cos(), s * phi.sin(), *zi]),
                        0.5 * wi / angular as f64,
                    ));
                }
            }
            Ok(out)
        }
        _ => Err(Error::precondition(
            "sphere_rule",
            "deterministic angular rules exist for n <= 3; use monte_carlo",
        )),
    }
}

/// An integral estimate; Monte Carlo estimates carry a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: Option<f64>,
}

/// ∫ g dμ_β over ℝⁿ.
pub fn integrate_nd(
    g: &(dyn Fn(&Vector) -> f64 + Sync),
    params: &MeasureParams,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    spec.validate()?;
    let n = params.n();
    let value = match spec.scheme {
        Scheme::MonteCarlo => {
            let batch = sample(params, spec.samples, spec.seed)?;
            let (mean, se) = batch.mean_and_stderr(|p| g(&Vector::from_column_slice(p)));
            if !mean.is_finite() {
                return Err(Error::NonFinite("integrate_nd"));
            }
            return Ok(Estimate {
                value: mean,
                stderr: Some(se),
            });
        }
        Scheme::Polar2d if n != 2 => {
            return Err(Error::precondition(
                "integrate_nd",
                "polar_2d requires n = 2",
            ));
        }
        _ => {
            let radial = radial_rule(params, spec)?;
            let sphere = sphere_rule(n, spec.angular)?;
            let mut total = 0.0;
            for (r, wr) in radial.r.iter().zip(&radial.w) {
                let mut shell = 0.0;
                for (dir, wa) in &sphere {
                    shell += wa * g(&(dir * *r));
                }
                total += wr * shell;
            }
            total
        }
    };
    if !value.is_finite() {
        return Err(Error::NonFinite("integrate_nd"));
    }
    Ok(Estimate {
        value,
        stderr: None,
    })
}

/// Second-order data of f at one quadrature node, plus the two
/// third-derivative quantities Δ|∇f|² and ∇Δf obtained by central
/// differences of the analytic fields ∇|∇f|² = 2 Hess f ∇f and Δf.
#[derive(Debug, Clone)]
pub struct PointSample {
    pub x: Vector,
    /// Quadrature weight of the node against Lebesgue measure.
    pub lebesgue_weight: f64,
    pub weight: WeightJet,
    pub g: Vector,
    pub h: Matrix,
    pub lap: f64,
    pub lap_grad_sq: f64,
    pub grad_lap: Vector,
}

impl PointSample {
    pub fn new(
        f: &SmoothFunction,
        weight: &WeightSpec,
        x: Vector,
        lebesgue_weight: f64,
        fd_step: f64,
    ) -> Self {
        let n = x.len();
        let jet = f.jet(&x);
        let step = fd_step * (1.0 + x.norm());
        let mut lap_grad_sq = 0.0;
        let mut grad_lap = Vector::zeros(n);
        // Fourth-order central stencil; the bumps have large higher
        // derivatives, so the plain three-point rule loses about 1e-5.
        let probe = |i: usize, t: f64| {
            let mut y = x.clone();
            y[i] += t;
            let j = f.jet(&y);
            (2.0 * (&j.hessian * &j.gradient)[i], j.laplacian())
        };
        for i in 0..n {
            let (a1, l1) = probe(i, step);
            let (am1, lm1) = probe(i, -step);
            let (a2, l2) = probe(i, 2.0 * step);
            let (am2, lm2) = probe(i, -2.0 * step);
            let d =
                |p1: f64, m1: f64, p2: f64, m2: f64| (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * step);
            lap_grad_sq += d(a1, am1, a2, am2);
            grad_lap[i] = d(l1, lm1, l2, lm2);
        }
        let lap = jet.laplacian();
        Self {
            weight: weight.eval(&x),
            x,
            lebesgue_weight,
            g: jet.gradient,
            h: jet.hessian,
            lap,
            lap_grad_sq,
            grad_lap,
        }
    }

    fn jet(&self) -> crate::functions::Jet {
        crate::functions::Jet {
            value: 0.0,
            gradient: self.g.clone(),
            hessian: self.h.clone(),
        }
    }
}

/// A compactly supported function sampled once on a fixed tensor rule over
/// its support. The cache is independent of β, so every tag and every β
/// reuses the same derivative data.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    pub n: usize,
    pub label: String,
    pub weight_is_cauchy: bool,
    pub nodes: Vec<PointSample>,
}

pub const FD_STEP: f64 = 1e-4;

impl SampledFunction {
    pub fn new(f: &SmoothFunction, weight: &WeightSpec, spec: &QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        let n = f.dim();
        let radius = spec
            .truncation
            .or(f.support_radius())
            .ok_or_else(|| Error::precondition("verify_identity", "compactly supported f"))?;
        if let Some(s) = f.support_radius() {
            if s > radius * (1.0 + 1e-12) {
                return Err(Error::precondition(
                    "verify_identity",
                    "truncation radius covers the support of f",
                ));
            }
        }
        if spec.scheme == Scheme::Polar2d && n != 2 {
            return Err(Error::precondition(
                "verify_identity",
                "polar_2d requires n = 2",
            ));
        }
        // Lebesgue radial weights: evaluate the μ-rule at β = 0 in spirit,
        // i.e. GL panels on [0, R] times |S^{n-1}| r^{n-1}.
        let (gx, gw) = gauss_legendre(spec.nodes);
        let mut cuts: Vec<f64> = vec![0.0];
        cuts.extend(
            spec.breakpoints
                .iter()
                .copied()
                .filter(|b| *b > 0.0 && *b < radius),
        );
        cuts.push(radius);
        cuts.sort_by(f64::total_cmp);
        let area = ln_sphere_area(n).exp();
        let mut radial = Vec::new();
        for seg in cuts.windows(2) {
            let h = (seg[1] - seg[0]) / spec.panels as f64;
            for k in 0..spec.panels {
                let a = seg[0] + k as f64 * h;
                for (x, wx) in gx.iter().zip(&gw) {
                    let r = a + 0.5 * h * (x + 1.0);
                    radial.push((r, 0.5 * h * wx * area * r.powi(n as i32 - 1)));
                }
            }
        }
        let sphere = sphere_rule(n, spec.angular)?;
        let points: Vec<(Vector, f64)> = radial
            .iter()
            .flat_map(|(r, wr)| sphere.iter().map(move |(d, wa)| (d * *r, wr * wa)))
            .collect();
        let nodes = points
            .into_par_iter()
            .map(|(x, w)| PointSample::new(f, weight, x, w, FD_STEP))
            .collect();
        Ok(Self {
            n,
            label: f.label().to_string(),
            weight_is_cauchy: weight.is_cauchy(),
            nodes,
        })
    }

    /// ∫ F dμ_β for a per-node integrand F.
    pub fn integrate(
        &self,
        params: &MeasureParams,
        integrand: impl Fn(&PointSample) -> f64,
    ) -> f64 {
        let ln_z = log_normalization(params);
        let beta = params.beta();
        self.nodes
            .iter()
            .map(|s| s.lebesgue_weight * (-beta * s.weight.value.ln() - ln_z).exp() * integrand(s))
            .sum()
    }

    /// ∫ (F, G) dμ_β for a pair of integrands in one pass.
    pub fn integrate_pair(
        &self,
        params: &MeasureParams,
        integrand: impl Fn(&PointSample) -> (f64, f64),
    ) -> (f64, f64) {
        let ln_z = log_normalization(params);
        let beta = params.beta();
        self.nodes.iter().fold((0.0, 0.0), |acc, s| {
            let m = s.lebesgue_weight * (-beta * s.weight.value.ln() - ln_z).exp();
            let (a, b) = integrand(s);
            (acc.0 + m * a, acc.1 + m * b)
        })
    }
}

/// Names of the verified integral identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdentityTag {
    Ipp1,
    Ipp2,
    Ipp3,
    Ipp4,
    GammaBis,
    Grg,
    Irg,
    LowFact,
    OnedSplit,
    OnedLow,
}

impl IdentityTag {
    pub const ALL: [IdentityTag; 10] = [
        IdentityTag::Ipp1,
        IdentityTag::Ipp2,
        IdentityTag::Ipp3,
        IdentityTag::Ipp4,
        IdentityTag::GammaBis,
        IdentityTag::Grg,
        IdentityTag::Irg,
        IdentityTag::LowFact,
        IdentityTag::OnedSplit,
        IdentityTag::OnedLow,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            IdentityTag::Ipp1 => "IPP1",
            IdentityTag::Ipp2 => "IPP2",
            IdentityTag::Ipp3 => "IPP3",
            IdentityTag::Ipp4 => "IPP4",
            IdentityTag::GammaBis => "GAMMABIS",
            IdentityTag::Grg => "GRG",
            IdentityTag::Irg => "IRG",
            IdentityTag::LowFact => "LOWFACT",
            IdentityTag::OnedSplit => "ONED_SPLIT",
            IdentityTag::OnedLow => "ONED_LOW",
        }
    }

    /// Reason the tag does not apply to (n, β, weight), if any.
    pub fn skip_reason(&self, params: &MeasureParams, cauchy: bool) -> Option<&'static str> {
        let n = params.n();
        // GRG divides by β − 2; treat β within rounding of 2 as 2.
        let beta_two = (params.beta() - 2.0).abs() < 1e-9;
        match self {
            IdentityTag::Ipp3 | IdentityTag::Ipp4 | IdentityTag::Grg if beta_two => {
                Some("requires beta != 2")
            }
            IdentityTag::Irg if n < 2 => Some("requires n >= 2"),
            IdentityTag::LowFact if n < 2 => Some("requires n >= 2"),
            IdentityTag::OnedSplit | IdentityTag::OnedLow if n != 1 => Some("requires n = 1"),
            IdentityTag::LowFact | IdentityTag::OnedSplit | IdentityTag::OnedLow if !cauchy => {
                Some("requires the Cauchy weight")
            }
            _ => None,
        }
    }
}

impl fmt::Display for IdentityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        IdentityTag::ALL
            .iter()
            .copied()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("tag", format!("unknown identity tag `{s}`")))
    }
}

/// Coefficients B_ε, C_ε, D_ε of the lower-range factorisation.
pub fn lowfact_coefficients(n: usize, beta: f64, eps: f64) -> (f64, f64, f64) {
    let nf = n as f64;
    let b = ((nf - 2.0) * eps * eps - 8.0 * (beta - 1.0) * eps
        + 8.0 * (beta - 1.0) * (nf + 1.0 - beta))
        / (2.0 * (nf - 1.0));
    let c = eps * (eps + 2.0 * (beta - 1.0));
    let d = -eps * eps + (nf + 2.0 - 2.0 * (beta - 1.0)) * eps + 4.0 * (beta - nf / 2.0 - 1.0);
    (b, c, d)
}

/// ε₀ = n/2 + 2 − β, the maximiser of D_ε.
pub fn lowfact_eps0(n: usize, beta: f64) -> f64 {
    n as f64 / 2.0 + 2.0 - beta
}

/// Closed forms of B_{ε₀}, C_{ε₀}, D_{ε₀}.
pub fn lowfact_closed_form(n: usize, beta: f64) -> (f64, f64, f64) {
    let nf = n as f64;
    let b = (nf - 2.0)
        * (4.0 * (beta - 1.0).powi(2) - 4.0 * (nf - 2.0) * (beta - 1.0) + (nf + 2.0).powi(2))
        / (8.0 * (nf - 1.0));
    let c = (nf / 2.0 + 2.0 - beta) * (beta + nf / 2.0);
    let d = (beta - nf / 2.0).powi(2);
    (b, c, d)
}

/// Which ε and constants to plug into the lower-range factorisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LowFactVariant {
    /// ε₀ = n/2+2−β with the closed-form constants.
    Derived,
    /// ε = β−n/2−2 (the opposite sign) with the same closed-form constants.
    OppositeSign,
    /// Arbitrary ε with the general B_ε, C_ε, D_ε.
    Free(f64),
}

fn hs_sq(m: &Matrix) -> f64 {
    m.norm_squared()
}

/// Pointwise (lhs, rhs) integrands of an identity; their integrals agree.
pub fn tag_integrands(
    tag: IdentityTag,
    s: &PointSample,
    params: &MeasureParams,
    lowfact: LowFactVariant,
) -> (f64, f64) {
    let beta = params.beta();
    let n = params.n();
    let nf = n as f64;
    let w = &s.weight;
    let om = w.value;
    let dw = &w.gradient;
    let g = &s.g;
    let h = &s.h;
    let hg = h * g;
    let g2 = g.norm_squared();
    let gw = g.dot(dw);
    let hgw = hg.dot(dw);
    let hwgg = g.dot(&(&w.hessian * g));
    let hs = om * om * hs_sq(h);
    let om_tr = om * s.lap;
    let gamma2 = || gamma2_general_from_jets(&s.jet(), w, beta);
    match tag {
        IdentityTag::Ipp1 => (
            2.0 * om * hgw,
            (-om * w.laplacian + (beta - 1.0) * dw.norm_squared()) * g2,
        ),
        IdentityTag::Ipp2 => (
            s.lap * om * gw,
            -om * hgw - om * hwgg + (beta - 1.0) * gw * gw,
        ),
        IdentityTag::Ipp3 => (2.0 * om * hgw, om * om * s.lap_grad_sq / (beta - 2.0)),
        IdentityTag::Ipp4 => (
            s.lap * om * gw,
            (om * om * g.dot(&s.grad_lap) + om_tr * om_tr) / (beta - 2.0),
        ),
        IdentityTag::GammaBis => {
            let grad_gamma = dw * g2 + &hg * (2.0 * om);
            let lap_gamma = w.laplacian * g2 + 4.0 * dw.dot(&hg) + om * s.lap_grad_sq;
            let grad_lf = dw * s.lap + &s.grad_lap * om - (&w.hessian * g + h * dw) * (beta - 1.0);
            let by_definition =
                0.5 * (om * lap_gamma - (beta - 1.0) * dw.dot(&grad_gamma)) - om * g.dot(&grad_lf);
            (
                by_definition,
                hs + (beta - 1.0) * om * hwgg + om * hgw - s.lap * om * gw,
            )
        }
        IdentityTag::Grg => (
            gamma2(),
            (beta - nf - 1.0) / (beta - 2.0) * hs
                + nf / (beta - 2.0) * (hs - om_tr * om_tr / nf)
                + (beta - 1.0) * om * hwgg,
        ),
        IdentityTag::Irg => {
            let c = (nf + 1.0 - beta) / (nf - 1.0);
            (
                gamma2(),
                nf / (nf - 1.0) * (hs - om_tr * om_tr / nf)
                    + c * (beta - 1.0) * (g2 * dw.norm_squared() - gw * gw)
                    + (beta - 1.0) * om * hwgg
                    + c * om * (hwgg - w.laplacian * g2),
            )
        }
        IdentityTag::LowFact => {
            let (eps, (b, c, d)) = match lowfact {
                LowFactVariant::Derived => (lowfact_eps0(n, beta), lowfact_closed_form(n, beta)),
                LowFactVariant::OppositeSign => {
                    (-lowfact_eps0(n, beta), lowfact_closed_form(n, beta))
                }
                LowFactVariant::Free(e) => (e, lowfact_coefficients(n, beta, e)),
            };
            let x = &s.x;
            let gx = g.dot(x);
            let sym = g * x.transpose() + x * g.transpose();
            let twisted = h * om + sym * (eps / 2.0);
            let trace = om_tr + eps * gx;
            let term = nf / (nf - 1.0) * (hs_sq(&twisted) - trace * trace / nf);
            let wedge = g2 * x.norm_squared() - gx * gx;
            (gamma2(), term + b * wedge + c * g2 + d * om * g2)
        }
        IdentityTag::OnedSplit | IdentityTag::OnedLow => {
            let t = s.x[0];
            let (d1, d2) = (g[0], h[(0, 0)]);
            let rhs = if tag == IdentityTag::OnedSplit {
                let eps = (1.5 - beta).max(0.0);
                let a = 2.0 * (beta - 1.0) + eps;
                let b = a - eps * a;
                (om * d2 + eps * t * d1).powi(2) + (a + b * t * t) * d1 * d1
            } else {
                let k = beta - 0.5;
                (om * d2 + (1.5 - beta) * t * d1).powi(2)
                    + k * k * om * d1 * d1
                    + k * (1.5 - beta) * d1 * d1
            };
            (gamma2(), rhs)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub tag: String,
    pub n: usize,
    pub beta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl IdentityReport {
    pub fn new(
        tag: impl Into<String>,
        params: &MeasureParams,
        lhs: f64,
        rhs: f64,
        trials: usize,
    ) -> Self {
        let abs_err = (lhs - rhs).abs();
        Self {
            tag: tag.into(),
            n: params.n(),
            beta: params.beta(),
            lhs,
            rhs,
            abs_err,
            rel_err: abs_err / 1f64.max(lhs.abs()).max(rhs.abs()),
            trials,
            skipped: None,
        }
    }

    pub fn skipped(tag: IdentityTag, params: &MeasureParams, reason: &str) -> Self {
        Self {
            tag: tag.name().into(),
            n: params.n(),
            beta: params.beta(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            abs_err: f64::NAN,
            rel_err: f64::NAN,
            trials: 0,
            skipped: Some(reason.into()),
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }

    /// Skipped reports pass vacuously.
    pub fn passes(&self, tol: f64) -> bool {
        self.is_skipped() || self.rel_err <= tol
    }
}

/// Evaluates one identity on pre-sampled data.
pub fn verify_sampled(
    tag: IdentityTag,
    sampled: &SampledFunction,
    params: &MeasureParams,
    lowfact: LowFactVariant,
) -> IdentityReport {
    if let Some(reason) = tag.skip_reason(params, sampled.weight_is_cauchy) {
        return IdentityReport::skipped(tag, params, reason);
    }
    let (lhs, rhs) = sampled.integrate_pair(params, |s| tag_integrands(tag, s, params, lowfact));
    IdentityReport::new(tag.name(), params, lhs, rhs, 1)
}

/// Checks one integral identity for a compactly supported f.
pub fn verify_identity(
    tag: IdentityTag,
    f: &SmoothFunction,
    weight: &WeightSpec,
    params: &MeasureParams,
    spec: &QuadratureSpec,
) -> Result<IdentityReport> {
    if f.dim() != params.n() || weight.dim() != params.n() {
        return Err(Error::invalid("f", "dimension mismatch"));
    }
    if let Some(reason) = tag.skip_reason(params, weight.is_cauchy()) {
        return Err(Error::precondition("verify_identity", reason));
    }
    let sampled = SampledFunction::new(f, weight, spec)?;
    Ok(verify_sampled(
        tag,
        &sampled,
        params,
        LowFactVariant::Derived,
    ))
}

/// Outcome of testing both signs of ε₀ in the lower-range factorisation,
/// plus a scan of D_ε over ε subject to B_ε, C_ε ≥ 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowFactSignReport {
    pub eps0_derived: f64,
    pub eps0_opposite: f64,
    pub derived_rel_err: f64,
    pub opposite_rel_err: f64,
    /// Worst error of the general-ε identity over a few ε values.
    pub free_eps_rel_err: f64,
    pub satisfied_by: String,
    pub scan_argmax: Option<f64>,
    pub scan_max_d: Option<f64>,
    pub scan_step: f64,
}

/// Grid scan of D_ε over [lo, hi] restricted to B_ε ≥ 0 and C_ε ≥ 0.
pub fn lowfact_scan(n: usize, beta: f64, lo: f64, hi: f64, steps: usize) -> Option<(f64, f64)> {
    (0..=steps)
        .map(|k| lo + (hi - lo) * k as f64 / steps as f64)
        .filter_map(|e| {
            let (b, c, d) = lowfact_coefficients(n, beta, e);
            (b >= -1e-12 && c >= -1e-12).then_some((e, d))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub n: usize,
    pub beta: f64,
    pub trials: usize,
    pub seed: u64,
    pub reports: Vec<IdentityReport>,
    pub lowfact_sign: Option<LowFactSignReport>,
}

impl VerificationReport {
    pub fn all_pass(&self, tol: f64) -> bool {
        self.reports.iter().all(|r| r.passes(tol))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// CSV with columns tag, n, beta, lhs, rhs, abs_err, rel_err, trials.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "tag,n,beta,lhs,rhs,abs_err,rel_err,trials")?;
        for r in &self.reports {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.tag, r.n, r.beta, r.lhs, r.rhs, r.abs_err, r.rel_err, r.trials
            )?;
        }
        Ok(())
    }
}

/// Options for [`verify_all`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Negative control: flips the sign of the IPP1 right-hand side.
    pub corrupt_ipp1: bool,
}

/// Random test function number `k` of a verification run.
pub fn trial_function(n: usize, seed: u64, k: usize) -> Result<SmoothFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64 + 1);
    let degree = rng.random_range(2..=6);
    let radius = rng.random_range(1.0..4.0);
    make_random_test(n, rng.random(), degree, radius)
}

fn sampling_spec(n: usize, radius: f64) -> QuadratureSpec {
    QuadratureSpec {
        angular: if n == 3 { 24 } else { 64 },
        ..QuadratureSpec::for_support(radius)
    }
}

/// Samples the `trials` random test functions once; shared across β.
pub fn sample_trials(n: usize, trials: usize, seed: u64) -> Result<Vec<SampledFunction>> {
    if trials == 0 {
        return Err(Error::invalid("trials", "at least one trial"));
    }
    let weight = WeightSpec::cauchy(n);
    (0..trials)
        .map(|k| {
            let f = trial_function(n, seed, k)?;
            let radius = f
                .support_radius()
                .expect("random tests are compactly supported");
            SampledFunction::new(&f, &weight, &sampling_spec(n, radius))
        })
        .collect()
}

/// Runs every tag over pre-sampled trial functions and keeps, per tag, the
/// trial with the worst relative error.
pub fn verify_trials(
    params: &MeasureParams,
    samples: &[SampledFunction],
    opts: &VerifyOptions,
) -> VerificationReport {
    let mut reports = Vec::new();
    for tag in IdentityTag::ALL {
        if let Some(reason) = tag.skip_reason(params, true) {
            reports.push(IdentityReport::skipped(tag, params, reason));
            continue;
        }
        let worst = samples
            .par_iter()
            .map(|s| {
                let mut r = verify_sampled(tag, s, params, LowFactVariant::Derived);
                if tag == IdentityTag::Ipp1 && opts.corrupt_ipp1 {
                    r = IdentityReport::new(tag.name(), params, r.lhs, -r.rhs, 1);
                }
                r
            })
            .reduce_with(|a, b| if b.rel_err > a.rel_err { b } else { a })
            .expect("at least one trial");
        reports.push(IdentityReport {
            trials: samples.len(),
            ..worst
        });
    }
    let lowfact_sign = (params.n() >= 2).then(|| lowfact_sign_report(params, samples));
    VerificationReport {
        n: params.n(),
        beta: params.beta(),
        trials: samples.len(),
        seed: opts.seed,
        reports,
        lowfact_sign,
    }
}

/// Tests ε₀ and −ε₀ (and free ε) on the samples and scans D_ε.
pub fn lowfact_sign_report(
    params: &MeasureParams,
    samples: &[SampledFunction],
) -> LowFactSignReport {
    let n = params.n();
    let beta = params.beta();
    let worst = |variant: LowFactVariant| {
        samples
            .iter()
            .map(|s| verify_sampled(IdentityTag::LowFact, s, params, variant).rel_err)
            .fold(0.0, f64::max)
    };
    let derived = worst(LowFactVariant::Derived);
    let opposite = worst(LowFactVariant::OppositeSign);
    let free = [-1.3, -0.4, 0.0, 0.7, 2.1]
        .iter()
        .map(|e| worst(LowFactVariant::Free(*e)))
        .fold(0.0, f64::max);
    let eps0 = lowfact_eps0(n, beta);
    let satisfied_by = match (derived <= 1e-6, opposite <= 1e-6) {
        (true, false) => "n/2+2-beta",
        (false, true) => "beta-n/2-2",
        (true, true) => "both (eps0 = 0)",
        (false, false) => "neither",
    };
    let step = 1e-3;
    let span = eps0.abs() + 4.0;
    let scan = lowfact_scan(n, beta, -span, span, (2.0 * span / step).round() as usize);
    LowFactSignReport {
        eps0_derived: eps0,
        eps0_opposite: -eps0,
        derived_rel_err: derived,
        opposite_rel_err: opposite,
        free_eps_rel_err: free,
        satisfied_by: satisfied_by.into(),
        scan_argmax: scan.map(|s| s.0),
        scan_max_d: scan.map(|s| s.1),
        scan_step: step,
    }
}

/// Runs every applicable tag on `trials` random compactly supported test
/// functions.
pub fn verify_all(params: &MeasureParams, opts: &VerifyOptions) -> Result<VerificationReport> {
    let samples = sample_trials(params.n(), opts.trials, opts.seed)?;
    Ok(verify_trials(params, &samples, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{make_linear, make_power_family};
    use crate::measures::{mean_sq_norm, omega_moment};
    use approx::assert_relative_eq;

    fn p(n: usize, beta: f64) -> MeasureParams {
        MeasureParams::new(n, beta).unwrap()
    }

    #[test]
    fn radial_examples() {
        let spec = QuadratureSpec::default();
        for &(n, beta) in &[(1, 0.8), (2, 1.3), (3, 4.0), (4, 2.6)] {
            let q = p(n, beta);
            assert_relative_eq!(
                integrate_radial(&|_| 1.0, &q, &spec).unwrap(),
                1.0,
                epsilon = 1e-12
            );
            let inv = integrate_radial(&|r| 1.0 / (1.0 + r * r), &q, &spec).unwrap();
            assert_relative_eq!(inv, omega_moment(1.0, &q).unwrap(), max_relative = 1e-9);
        }
        let q = p(3, 4.0);
        let tail = QuadratureSpec {
            tail_power: 1.0,
            ..spec.clone()
        };
        let m2 = integrate_radial(&|r| r * r, &q, &tail).unwrap();
        assert_relative_eq!(m2, mean_sq_norm(&q).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn nan_propagates_as_error() {
        let q = p(2, 3.0);
        assert!(integrate_radial(&|_| f64::NAN, &q, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn spec_validation() {
        let bad = QuadratureSpec {
            nodes: 8,
            ..QuadratureSpec::default()
        };
        assert!(bad.validate().is_err());
        let q = p(3, 3.0);
        let polar = QuadratureSpec {
            scheme: Scheme::Polar2d,
            ..QuadratureSpec::default()
        };
        assert!(integrate_nd(&|_| 1.0, &q, &polar).is_err());
    }

    #[test]
    fn nd_power_family_square() {
        for &(n, beta) in &[(2, 2.0), (3, 3.1)] {
            let q = p(n, beta);
            let eps = (2.0 * beta - n as f64) / 4.0 - 0.1;
            let f = make_power_family(n, eps);
            let spec = QuadratureSpec {
                tail_power: 2.0 * eps,
                ..QuadratureSpec::default()
            };
            let v = integrate_nd(&|x| f.value(x).powi(2), &q, &spec).unwrap();
            assert_relative_eq!(
                v.value,
                omega_moment(-2.0 * eps, &q).unwrap(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn monte_carlo_odd_integrand() {
        let q = p(3, 3.0);
        let spec = QuadratureSpec {
            scheme: Scheme::MonteCarlo,
            samples: 100_000,
            seed: 3,
            ..QuadratureSpec::default()
        };
        let lin = make_linear(&[1.0, 0.0, 0.0])
            .unwrap()
            .times_bump(Vector::zeros(3), 1.0, 2.0);
        let e = integrate_nd(&|x| lin.value(x), &q, &spec).unwrap();
        assert!(e.value.abs() <= 4.0 * e.stderr.unwrap());
    }

    #[test]
    fn tag_names_round_trip() {
        for t in IdentityTag::ALL {
            assert_eq!(t.name().parse::<IdentityTag>().unwrap(), t);
        }
        assert!("IPP9".parse::<IdentityTag>().is_err());
    }

    #[test]
    fn lowfact_constants_match_general_formula_at_eps0() {
        for &(n, beta) in &[(2, 1.5), (3, 2.6), (4, 3.9)] {
            let eps0 = lowfact_eps0(n, beta);
            let (b, c, d) = lowfact_coefficients(n, beta, eps0);
            let (bc, cc, dc) = lowfact_closed_form(n, beta);
            assert_relative_eq!(b, bc, epsilon = 1e-12);
            assert_relative_eq!(c, cc, epsilon = 1e-12);
            assert_relative_eq!(d, dc, epsilon = 1e-12);
            let (e, _) = lowfact_scan(n, beta, -5.0, 5.0, 10_000).unwrap();
            assert!((e - eps0).abs() <= 1e-3);
        }
    }

    #[test]
    fn ipp1_on_a_random_bump() {
        let q = p(2, 3.0);
        let f = make_random_test(2, 5, 4, 2.0).unwrap();
        let r = verify_identity(
            IdentityTag::Ipp1,
            &f,
            &WeightSpec::cauchy(2),
            &q,
            &sampling_spec(2, 2.0),
        )
        .unwrap();
        assert!(r.rel_err <= 1e-6, "{r:?}");
        assert!(verify_identity(
            IdentityTag::Irg,
            &make_random_test(1, 1, 3, 1.0).unwrap(),
            &WeightSpec::cauchy(1),
            &p(1, 2.0),
            &sampling_spec(1, 1.0)
        )
        .is_err());
        assert!(verify_identity(
            IdentityTag::Ipp1,
            &make_linear(&[1.0, 1.0]).unwrap(),
            &WeightSpec::cauchy(2),
            &q,
            &QuadratureSpec::default()
        )
        .is_err());
    }

    #[test]
    fn grg_rhs_reduces_for_linear_times_bump() {
        let q = p(3, 3.5);
        let w = WeightSpec::cauchy(3);
        let f = make_linear(&[0.5, -1.0, 2.0])
            .unwrap()
            .times_bump(Vector::zeros(3), 2.0, 3.0);
        let x = Vector::from_vec(vec![0.4, 0.3, -0.9]);
        let s = PointSample::new(&f, &w, x, 1.0, FD_STEP);
        let (_, rhs) = tag_integrands(IdentityTag::Grg, &s, &q, LowFactVariant::Derived);
        let g = Vector::from_vec(vec![0.5, -1.0, 2.0]);
        assert_relative_eq!(
            rhs,
            2.5 * s.weight.value * 2.0 * g.norm_squared(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn small_verification_run_passes() {
        let q = p(2, 2.6);
        let rep = verify_all(
            &q,
            &VerifyOptions {
                trials: 3,
                seed: 1,
                corrupt_ipp1: false,
            },
        )
        .unwrap();
        for r in &rep.reports {
            eprintln!("{} {:e}", r.tag, r.rel_err);
            assert!(r.passes(1e-5), "{r:?}");
        }
        let sign = rep.lowfact_sign.unwrap();
        assert_eq!(sign.satisfied_by, "n/2+2-beta");
        let bad = verify_all(
            &q,
            &VerifyOptions {
                trials: 2,
                seed: 1,
                corrupt_ipp1: true,
            },
        )
        .unwrap();
        assert!(!bad.all_pass(1e-5));
    }

    #[test]
    fn beta_two_skips_ipp3_ipp4_grg() {
        let q = p(2, 2.0);
        let rep = verify_all(
            &q,
            &VerifyOptions {
                trials: 1,
                seed: 4,
                corrupt_ipp1: false,
            },
        )
        .unwrap();
        let skipped: Vec<&str> = rep
            .reports
            .iter()
            .filter(|r| r.is_skipped())
            .map(|r| r.tag.as_str())
            .collect();
        assert_eq!(
            skipped,
            vec!["IPP3", "IPP4", "GRG", "ONED_SPLIT", "ONED_LOW"]
        );
        assert!(rep.all_pass(1e-5));
    }
}
