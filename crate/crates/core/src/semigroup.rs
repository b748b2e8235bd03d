//! The heat semigroup P_t = e^{tL} on single-harmonic functions.
//!
//! A function f = g(r)Y_ℓ evolves on the mode grid of [`crate::spectral`] by
//! B v′ = −A v. Along the flow, h(t) = ∫(P_t f)² dμ, the energy ∫Γ(P_t f)dμ
//! and ∫Γ₂(P_t f)dμ = ∫(L P_t f)² dμ are read off the grid as vᵀBv, vᵀAv and
//! (Av)ᵀB⁻¹(Av). These drive the variance representation and the deficit
//! time integrals.

use crate::error::{Error, Result};
use crate::functions::{SmoothFunction, Vector};
use crate::measures::MeasureParams;
use crate::quadrature::{integrate_radial, QuadratureSpec};
use crate::special::ln_beta;
use crate::spectral::{
    branch_value, dot, range_tag, solve_mode, Discretization, ModeProblem, RangeTag, SymTridiag,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;
use std::sync::Arc;

/// Radial profile r ↦ (g(r), g′(r)).
pub type Profile = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// One term g(r)Y_ℓ with Y₀ = 1 and Y₁ = x₁/|x| (the sign of x on the line).
#[derive(Clone)]
pub struct ModeComponent {
    pub ell: usize,
    pub profile: Profile,
}

/// A function that is a sum of at most one radial and one dipole term.
#[derive(Clone)]
pub struct RadialFunction {
    pub n: usize,
    pub label: String,
    pub components: Vec<ModeComponent>,
    pub support: Option<f64>,
    /// Radii where the profiles are only piecewise smooth.
    pub breakpoints: Vec<f64>,
    /// g² grows at most like (1+r²)^p.
    pub tail_power: f64,
}

impl std::fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialFunction")
            .field("n", &self.n)
            .field("label", &self.label)
            .field(
                "modes",
                &self.components.iter().map(|c| c.ell).collect::<Vec<_>>(),
            )
            .finish()
    }
}

fn e1(n: usize, r: f64) -> Vector {
    let mut x = Vector::zeros(n);
    x[0] = r;
    x
}

impl RadialFunction {
    pub fn from_profile(n: usize, ell: usize, label: &str, profile: Profile) -> Result<Self> {
        if ell > 1 {
            return Err(Error::invalid(
                "ell",
                "only radial (0) and dipole (1) terms are supported",
            ));
        }
        Ok(Self {
            n,
            label: label.into(),
            components: vec![ModeComponent { ell, profile }],
            support: None,
            breakpoints: Vec::new(),
            tail_power: 0.0,
        })
    }

    pub fn with_support(mut self, radius: f64, breakpoints: &[f64]) -> Self {
        self.support = Some(radius);
        self.breakpoints = breakpoints.to_vec();
        self
    }

    pub fn with_tail_power(mut self, p: f64) -> Self {
        self.tail_power = p;
        self
    }

    /// Reads the profile of f along the first axis, after checking that f is
    /// of the form g(|x|)Y_ℓ at a few random points.
    pub fn from_smooth(f: &SmoothFunction, ell: usize) -> Result<Self> {
        let n = f.dim();
        if n == 1 {
            return Self::from_line(f);
        }
        let check_radius = f.support_radius().unwrap_or(4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..16 {
            let mut x = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let r = rng.random_range(0.05..1.0) * check_radius;
            x *= r / x.norm();
            let g = f.value(&e1(n, r));
            let expected = if ell == 0 { g } else { g * x[0] / r };
            let got = f.value(&x);
            if (got - expected).abs() > 1e-9 * (1.0 + got.abs()) {
                return Err(Error::precondition(
                    "RadialFunction::from_smooth",
                    format!("f is of the form g(|x|) Y_{ell}"),
                ));
            }
        }
        let owned = f.clone();
        let profile: Profile = Arc::new(move |r| {
            let j = owned.jet(&e1(n, r));
            (j.value, j.gradient[0])
        });
        let mut out =
            Self::from_profile(n, ell, f.label(), profile)?.with_tail_power(f.tail_power());
        out.support = f.support_radius();
        Ok(out)
    }

    /// Splits a function on the line into its even and odd parts.
    pub fn from_line(f: &SmoothFunction) -> Result<Self> {
        if f.dim() != 1 {
            return Err(Error::invalid("f", "expected a function on the line"));
        }
        let (even_f, odd_f) = (f.clone(), f.clone());
        let at = |g: &SmoothFunction, x: f64| {
            let j = g.jet(&Vector::from_element(1, x));
            (j.value, j.gradient[0])
        };
        let even: Profile = Arc::new(move |r| {
            let (p, dp) = at(&even_f, r);
            let (m, dm) = at(&even_f, -r);
            (0.5 * (p + m), 0.5 * (dp - dm))
        });
        let odd: Profile = Arc::new(move |r| {
            let (p, dp) = at(&odd_f, r);
            let (m, dm) = at(&odd_f, -r);
            (0.5 * (p - m), 0.5 * (dp + dm))
        });
        Ok(Self {
            n: 1,
            label: f.label().into(),
            components: vec![
                ModeComponent {
                    ell: 0,
                    profile: even,
                },
                ModeComponent {
                    ell: 1,
                    profile: odd,
                },
            ],
            support: f.support_radius(),
            breakpoints: Vec::new(),
            tail_power: f.tail_power(),
        })
    }

    fn quadrature_spec(&self, power: f64) -> QuadratureSpec {
        match self.support {
            Some(r) => QuadratureSpec {
                nodes: 32,
                panels: 8,
                truncation: Some(r),
                breakpoints: self.breakpoints.clone(),
                ..QuadratureSpec::default()
            },
            None => QuadratureSpec {
                nodes: 96,
                tail_power: power,
                ..QuadratureSpec::default()
            },
        }
    }

    /// Angular average of Y_ℓ²: 1 for ℓ = 0 and 1/n for ℓ = 1.
    fn angular_factor(&self, ell: usize) -> f64 {
        if ell == 0 {
            1.0
        } else {
            1.0 / self.n as f64
        }
    }

    /// Var(f) and ∫Γ(f)dμ by radial quadrature of the profiles.
    pub fn variance_and_energy(&self, params: &MeasureParams) -> Result<(f64, f64)> {
        let p = self.tail_power;
        let nf = self.n as f64;
        let mut var = 0.0;
        let mut energy = 0.0;
        for c in &self.components {
            let g = c.profile.clone();
            let w = self.angular_factor(c.ell);
            let sq = integrate_radial(&|r| g(r).0.powi(2), params, &self.quadrature_spec(p))?;
            var += w * sq;
            if c.ell == 0 {
                let mean = integrate_radial(&|r| g(r).0, params, &self.quadrature_spec(p / 2.0))?;
                var -= mean * mean;
            }
            let pot = (c.ell as f64) * (c.ell as f64 + nf - 2.0);
            let e = integrate_radial(
                &|r| {
                    let (v, d) = g(r);
                    let angular = if pot != 0.0 {
                        pot * v * v / (r * r)
                    } else {
                        0.0
                    };
                    (1.0 + r * r) * (d * d + angular)
                },
                params,
                &self.quadrature_spec(p),
            )?;
            energy += w * e;
        }
        Ok((var, energy))
    }
}

/// ∫₀^∞ r^{n−1}(1+r²)^{−β}dr, the radial mass that normalises the forms.
pub fn radial_mass(params: &MeasureParams) -> f64 {
    (ln_beta(params.half_n(), params.beta() - params.half_n()) - std::f64::consts::LN_2).exp()
}

/// Coefficients of all modes at time t.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub params: MeasureParams,
    pub t: f64,
    pub dt: f64,
    pub modes: Vec<(usize, Vec<f64>)>,
}

/// Per-time observables, already normalised by the radial mass and the
/// angular factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub t: f64,
    /// ∫(P_t f)² dμ.
    pub h: f64,
    /// (∫P_t f dμ)², constant in time.
    pub mean_sq: f64,
    /// ∫Γ(P_t f)dμ.
    pub energy: f64,
    /// ∫Γ₂(P_t f)dμ.
    pub gamma2: f64,
}

impl Observables {
    pub fn variance(&self) -> f64 {
        self.h - self.mean_sq
    }
}

struct Stepper {
    lhs: SymTridiag,
    rhs: SymTridiag,
}

impl Stepper {
    fn new(p: &ModeProblem, dt: f64) -> Self {
        Self {
            lhs: p.b.plus(0.5 * dt, &p.a),
            rhs: p.b.shifted(0.5 * dt, &p.a),
        }
    }

    /// Crank–Nicolson step (B + dt/2·A)v⁺ = (B − dt/2·A)v.
    fn step(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.lhs.solve(&self.rhs.mul_vec(v))
    }
}

/// Where in a step the coefficients were sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sample {
    /// A time level t_k.
    Node,
    /// The average of two consecutive levels, representing the step
    /// (t_k, t_k + dt).
    Midpoint,
}

/// Coefficients of every mode at one sample.
pub struct StepView<'a> {
    pub t: f64,
    pub dt: f64,
    pub kind: Sample,
    pub modes: Vec<(&'a ModeProblem, &'a [f64])>,
    m0: f64,
    n: usize,
}

impl StepView<'_> {
    /// Angular factor over the radial mass, converting grid forms into
    /// integrals against μ_β.
    pub fn weight(&self, ell: usize) -> f64 {
        let angular = if ell == 0 { 1.0 } else { 1.0 / self.n as f64 };
        angular / self.m0
    }

    pub fn observables(&self) -> Result<Observables> {
        let mut o = Observables {
            t: self.t,
            h: 0.0,
            mean_sq: 0.0,
            energy: 0.0,
            gamma2: 0.0,
        };
        for (p, v) in &self.modes {
            let w = self.weight(p.ell);
            let (h, mean, e, g2) = mode_observables(p, v)?;
            o.h += w * h;
            o.energy += w * e;
            o.gamma2 += w * g2;
            if p.ell == 0 {
                o.mean_sq += (mean / self.m0).powi(2);
            }
        }
        Ok(o)
    }
}

fn mode_observables(p: &ModeProblem, v: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let av = p.a.mul_vec(v);
    let bv = p.b.mul_vec(v);
    let g2 = dot(&av, &p.b.solve(&av)?);
    let mean = if p.ell == 0 {
        dot(&p.constant_vector(), &bv)
    } else {
        0.0
    };
    Ok((dot(v, &bv), mean, dot(v, &av), g2))
}

/// Integrates B v′ = −A v on each mode up to `t_end` with Crank–Nicolson
/// steps of size ≈ dt. `observe` sees every time level and every step
/// midpoint.
///
/// Time integrals should use the midpoint samples: for Crank–Nicolson
/// h(t_{k+1}) − h(t_k) = −2dt·∫Γ(v̄) and E(t_{k+1}) − E(t_k) = −2dt·∫Γ₂(v̄)
/// hold exactly at the midpoint v̄, so stiff components that the scheme
/// resolves only roughly still carry the right integrated energy.
pub fn evolve_with(
    params: &MeasureParams,
    initial: &[(usize, Vec<f64>)],
    t_end: f64,
    dt: f64,
    problems: &[ModeProblem],
    mut observe: impl FnMut(&StepView) -> Result<()>,
) -> Result<EvolutionState> {
    if !(dt > 0.0 && t_end >= 0.0) {
        return Err(Error::invalid("dt", "dt > 0 and T >= 0"));
    }
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let m0 = radial_mass(params);
    let mut modes = Vec::new();
    for (ell, v) in initial {
        let p = problems
            .iter()
            .find(|p| p.ell == *ell)
            .ok_or_else(|| Error::invalid("problems", format!("no problem for mode {ell}")))?;
        if v.len() != p.dim() {
            return Err(Error::invalid(
                "f0",
                "coefficient vector does not match the mode grid",
            ));
        }
        modes.push((p, Stepper::new(p, dt), v.clone()));
    }
    let n = params.n();
    let first = modes.iter().map(|(p, _, v)| (*p, v.as_slice())).collect();
    observe(&StepView {
        t: 0.0,
        dt,
        kind: Sample::Node,
        modes: first,
        m0,
        n,
    })?;
    for k in 0..steps {
        let mut mids: Vec<Vec<f64>> = Vec::with_capacity(modes.len());
        for (_, stepper, v) in modes.iter_mut() {
            let next = stepper.step(v)?;
            mids.push(v.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect());
            *v = next;
        }
        let mid_view = modes
            .iter()
            .zip(&mids)
            .map(|((p, _, _), m)| (*p, m.as_slice()))
            .collect();
        observe(&StepView {
            t: (k as f64 + 0.5) * dt,
            dt,
            kind: Sample::Midpoint,
            modes: mid_view,
            m0,
            n,
        })?;
        let node_view = modes.iter().map(|(p, _, v)| (*p, v.as_slice())).collect();
        observe(&StepView {
            t: (k + 1) as f64 * dt,
            dt,
            kind: Sample::Node,
            modes: node_view,
            m0,
            n,
        })?;
    }
    Ok(EvolutionState {
        params: *params,
        t: t_end,
        dt,
        modes: modes.into_iter().map(|(p, _, v)| (p.ell, v)).collect(),
    })
}

/// Evolves the mode coefficients to time `t_end`.
pub fn evolve(
    params: &MeasureParams,
    initial: &[(usize, Vec<f64>)],
    t_end: f64,
    dt: f64,
    problems: &[ModeProblem],
) -> Result<EvolutionState> {
    evolve_with(params, initial, t_end, dt, problems, |_| Ok(()))
}

/// Observables at time levels and at step midpoints.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub nodes: Vec<Observables>,
    pub midpoints: Vec<Observables>,
    pub dt: f64,
}

impl Trajectory {
    /// ∫₀^T F dt by the midpoint rule over the steps.
    pub fn integrate(&self, integrand: impl Fn(&Observables) -> f64) -> f64 {
        self.midpoints.iter().map(|o| self.dt * integrand(o)).sum()
    }

    fn record(&mut self, view: &StepView) -> Result<()> {
        self.dt = view.dt;
        let o = view.observables()?;
        match view.kind {
            Sample::Node => self.nodes.push(o),
            Sample::Midpoint => self.midpoints.push(o),
        }
        Ok(())
    }
}

/// Evolves and records all observables.
pub fn trajectory(
    params: &MeasureParams,
    initial: &[(usize, Vec<f64>)],
    t_end: f64,
    dt: f64,
    problems: &[ModeProblem],
) -> Result<Trajectory> {
    let mut tr = Trajectory::default();
    evolve_with(params, initial, t_end, dt, problems, |v| tr.record(v))?;
    Ok(tr)
}

/// Mode problems and interpolated coefficients of f, with the lowest
/// nontrivial discrete eigenvalue over its modes.
pub struct Projected {
    pub problems: Vec<ModeProblem>,
    pub initial: Vec<(usize, Vec<f64>)>,
    pub lambda_hat: f64,
}

pub fn project(
    f: &RadialFunction,
    params: &MeasureParams,
    disc: &Discretization,
) -> Result<Projected> {
    if f.n != params.n() {
        return Err(Error::invalid("f", "dimension mismatch"));
    }
    let mut problems = Vec::new();
    let mut initial = Vec::new();
    let mut lambda_hat = f64::INFINITY;
    for c in &f.components {
        let sol = solve_mode(c.ell, params, disc, 1)?;
        lambda_hat = lambda_hat.min(sol.target);
        let g = c.profile.clone();
        initial.push((c.ell, sol.problem.interpolate(|r| g(r).0)));
        problems.push(sol.problem);
    }
    Ok(Projected {
        problems,
        initial,
        lambda_hat,
    })
}

/// Time-stepping controls shared by the checks below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeControls {
    pub dt: f64,
    /// Horizon; when None, T = ln(Var(f)/eps_target)/(2λ̂₁).
    pub t_end: Option<f64>,
    pub eps_target: f64,
}

impl Default for TimeControls {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: None,
            eps_target: 1e-8,
        }
    }
}

impl TimeControls {
    fn horizon(&self, variance: f64, lambda_hat: f64) -> f64 {
        self.t_end.unwrap_or_else(|| {
            ((variance / self.eps_target).ln() / (2.0 * lambda_hat)).max(self.dt)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceCheck {
    /// Var(f) by quadrature of the profiles.
    pub lhs: f64,
    /// (1/ρ)∫Γ(f) − (2/ρ)∫₀^T∫(Γ₂ − ρΓ)(P_t f) dμ dt on the grid.
    pub rhs: f64,
    pub discrepancy: f64,
    /// Bound on the neglected part beyond T, e^{−2λ̂₁T}·max(Var(f), ∫Γ(f)/ρ).
    pub tail_bound: f64,
    pub t_end: f64,
    pub dt: f64,
    pub lambda_hat: f64,
    /// Var(f) of the grid interpolant.
    pub grid_variance: f64,
}

/// Checks Var(f) = (1/ρ)∫Γ(f) − (2/ρ)∫₀^∞∫(Γ₂ − ρΓ)(P_t f) dμ dt.
pub fn variance_representation_check(
    f: &RadialFunction,
    rho: f64,
    params: &MeasureParams,
    disc: &Discretization,
    time: &TimeControls,
) -> Result<VarianceCheck> {
    if rho == 0.0 || !rho.is_finite() {
        return Err(Error::invalid("rho", "must be finite and nonzero"));
    }
    let (variance, _) = f.variance_and_energy(params)?;
    let proj = project(f, params, disc)?;
    let t_end = time.horizon(variance, proj.lambda_hat);
    let tr = trajectory(params, &proj.initial, t_end, time.dt, &proj.problems)?;
    let first = tr.nodes[0];
    let integral = tr.integrate(|o| o.gamma2 - rho * o.energy);
    let rhs = first.energy / rho - 2.0 / rho * integral;
    let tail_bound =
        (-2.0 * proj.lambda_hat * t_end).exp() * first.variance().max(first.energy / rho.abs());
    Ok(VarianceCheck {
        lhs: variance,
        rhs,
        discrepancy: (variance - rhs).abs(),
        tail_bound,
        t_end,
        dt: tr.dt,
        lambda_hat: proj.lambda_hat,
        grid_variance: first.variance(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficitReport {
    pub range: RangeTag,
    pub lambda: f64,
    pub variance: f64,
    pub energy: f64,
    /// λ·Var(f) − ∫Γ(f)dμ by quadrature; nonpositive by the Poincaré
    /// inequality.
    pub deficit: f64,
    /// −2∫₀^T∫(Γ₂ − λΓ)(P_t f) dμ dt on the grid.
    pub time_integral: f64,
    /// Bound on the part of the time integral beyond T.
    pub tail_bound: f64,
    pub discrepancy: f64,
    /// On the line in the upper range: −2∫₀^T∫ω²((P_t f)″)² dμ dt.
    pub one_d_hessian_integral: Option<f64>,
    pub t_end: f64,
    pub dt: f64,
    /// (t, −2∫(Γ₂ − λΓ)(P_t f)dμ) at every step midpoint.
    #[serde(skip)]
    pub trace: Vec<(f64, f64)>,
}

impl DeficitReport {
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,integrand")?;
        for (t, v) in &self.trace {
            writeln!(out, "{t:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}

/// ∫(ω g″)² on the nodes of a line mode, with ωg″ = g_tt − tanh(t)g_t in
/// t = asinh r and the nodal masses as weights. Beyond R the tail is ignored.
fn hessian_energy_1d(p: &ModeProblem, v: &[f64], disc: &Discretization) -> f64 {
    let m = disc.m;
    let h = disc.radius().asinh() / m as f64;
    // Nodal values on the full grid 0..=m, with g(0) = 0 for the odd mode.
    let mut u = vec![0.0; m + 1];
    let offset = usize::from(p.ell >= 1);
    u[offset..=m].copy_from_slice(&v[..=m - offset]);
    let ghost = if p.ell == 0 { u[1] } else { -u[1] };
    let ones = vec![1.0; p.dim()];
    let lumped = p.b.mul_vec(&ones);
    let mut total = 0.0;
    for i in 0..m {
        let (um, up) = if i == 0 {
            (ghost, u[1])
        } else {
            (u[i - 1], u[i + 1])
        };
        let t = i as f64 * h;
        let ut = (up - um) / (2.0 * h);
        let utt = (up - 2.0 * u[i] + um) / (h * h);
        let w = if i >= offset { lumped[i - offset] } else { 0.0 };
        total += w * (utt - t.tanh() * ut).powi(2);
    }
    total
}

/// λ_range·Var(f) − ∫Γ(f)dμ together with its time-integral form.
pub fn deficit(
    f: &RadialFunction,
    params: &MeasureParams,
    range: RangeTag,
    disc: &Discretization,
    time: &TimeControls,
) -> Result<DeficitReport> {
    let actual = range_tag(params);
    let on_boundary = match range {
        RangeTag::Mid => params.n() >= 2 && (params.beta() - (params.half_n() + 2.0)).abs() < 1e-12,
        RangeTag::Upper => {
            let start = if params.n() == 1 {
                1.5
            } else {
                params.n() as f64 + 1.0
            };
            (params.beta() - start).abs() < 1e-12
        }
        RangeTag::Lower => false,
    };
    if actual != range && !on_boundary {
        return Err(Error::precondition(
            "deficit",
            format!(
                "beta = {} lies in the {actual} range, not the {range} range",
                params.beta()
            ),
        ));
    }
    let lambda = branch_value(params, range);
    let (variance, energy) = f.variance_and_energy(params)?;
    let proj = project(f, params, disc)?;
    let t_end = time.horizon(variance.max(1e-300), proj.lambda_hat);
    let one_d_upper = params.n() == 1 && range == RangeTag::Upper;
    let mut tr = Trajectory::default();
    let mut hessian = 0.0;
    evolve_with(
        params,
        &proj.initial,
        t_end,
        time.dt,
        &proj.problems,
        |view| {
            if one_d_upper && view.kind == Sample::Midpoint {
                hessian += view.dt
                    * view
                        .modes
                        .iter()
                        .map(|(p, v)| view.weight(p.ell) * hessian_energy_1d(p, v, disc))
                        .sum::<f64>();
            }
            tr.record(view)
        },
    )?;
    let first = tr.nodes[0];
    let time_integral = -2.0 * tr.integrate(|o| o.gamma2 - lambda * o.energy);
    let tail_bound = (-2.0 * proj.lambda_hat * t_end).exp()
        * (lambda * first.variance()).abs().max(first.energy);
    let deficit = lambda * variance - energy;
    Ok(DeficitReport {
        range,
        lambda,
        variance,
        energy,
        deficit,
        time_integral,
        tail_bound,
        discrepancy: (deficit - time_integral).abs(),
        one_d_hessian_integral: one_d_upper.then_some(-2.0 * hessian),
        t_end,
        dt: tr.dt,
        trace: tr
            .midpoints
            .iter()
            .map(|o| (o.t, -2.0 * (o.gamma2 - lambda * o.energy)))
            .collect(),
    })
}

/// Largest pointwise residual of the equations satisfied by extremal
/// functions of the given range:
/// upper, ‖Hess f‖_HS; mid, the traceless Hessian and the non-radial part
/// |∇f|²|x|² − ⟨∇f, x⟩²; lower (line only), ωf″ + (3/2 − β)xf′.
pub fn extremal_residual(
    f: &SmoothFunction,
    params: &MeasureParams,
    range: RangeTag,
    points: &[Vector],
) -> Result<f64> {
    let n = params.n();
    if f.dim() != n {
        return Err(Error::invalid("f", "dimension mismatch"));
    }
    if let Some(r) = f.support_radius() {
        if points.iter().any(|x| x.norm() > r) {
            return Err(Error::precondition(
                "extremal_residual",
                "points within the support of f",
            ));
        }
    }
    let nf = n as f64;
    let mut worst: f64 = 0.0;
    for x in points {
        let j = f.jet(x);
        let res = match range {
            RangeTag::Upper => j.hessian.norm(),
            RangeTag::Mid => {
                let tr = j.hessian.trace();
                let traceless = (j.hessian.norm_squared() - tr * tr / nf).max(0.0).sqrt();
                let g2 = j.gradient.norm_squared();
                let gx = j.gradient.dot(x);
                traceless.max((g2 * x.norm_squared() - gx * gx).abs())
            }
            RangeTag::Lower => {
                if n != 1 {
                    return Err(Error::precondition(
                        "extremal_residual",
                        "the lower range has extremal equations only on the line",
                    ));
                }
                let t = x[0];
                ((1.0 + t * t) * j.hessian[(0, 0)] + (1.5 - params.beta()) * t * j.gradient[0])
                    .abs()
            }
        };
        worst = worst.max(res);
    }
    Ok(worst)
}
