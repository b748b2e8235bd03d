//! `cauchy-lab`: sweeps, identity checks and reports for the Cauchy-type
//! diffusion operators. Exit status 0 means success, 1 a configuration or
//! input error, 2 a numerical check outside its tolerance.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cauchy_gap::functions::{
    make_linear, make_power_family, make_quadratic, make_quadratic_centered, make_random_test,
    quasi_random_points, Vector,
};
use cauchy_gap::measures::{mean_sq_norm, omega_moment, sample};
use cauchy_gap::operators::{cd_witness, gamma2_cauchy, gamma2_cauchy_factorized};
use cauchy_gap::quadrature::{trial_function, verify_all, VerificationReport, VerifyOptions};
use cauchy_gap::semigroup::{deficit, RadialFunction, TimeControls};
use cauchy_gap::spectral::{
    beta_grid, branch_value, numeric_gap, range_tag, rayleigh_quotient_1d,
    rayleigh_quotient_1d_quadrature, rayleigh_quotient_power, rayleigh_quotient_power_quadrature,
    sweep, write_sweep_csv, Discretization, GapReport, RangeTag,
};
use cauchy_gap::MeasureParams;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use config::ConfigFile;
use output::Format;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Tolerance(String),
}

impl From<cauchy_gap::Error> for Failure {
    fn from(e: cauchy_gap::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("i/o: {e}"))
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Parser, Debug)]
#[command(
    name = "cauchy-lab",
    version,
    about = "Spectral gaps and Γ-calculus checks for generalised Cauchy measures"
)]
struct Cli {
    /// Plain-text key=value file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Numeric spectral gap at one β against the closed form.
    Gap(GapArgs),
    /// Gap reports over an equally spaced β range.
    Sweep(SweepArgs),
    /// Integration-by-parts identities, Γ₂ factorisation and CD witnesses.
    Verify(VerifyArgs),
    /// Poincaré deficit of a test function and its semigroup representation.
    Deficit(DeficitArgs),
    /// Rayleigh quotients of the power families near their L² threshold.
    Rayleigh(RayleighArgs),
    /// Draw points from the measure.
    Sample(SampleArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Output file; defaults to $CAUCHY_LAB_OUT_DIR/<command>.<ext> or stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Tolerance for the command's pass/fail check.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Radial finite elements per mode.
    #[arg(long)]
    m: Option<usize>,
    /// Truncation angle; the grid ends at r = cot δ.
    #[arg(long)]
    delta: Option<f64>,
    /// Highest spherical-harmonic degree examined.
    #[arg(long)]
    ell_max: Option<usize>,
}

#[derive(Args, Debug)]
struct GapArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    beta: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    beta_min: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Debug: flip the sign of one IPP1 coefficient (negative control).
    #[arg(long, hide = true)]
    corrupt_ipp1: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    /// x₁; extremal in the upper range.
    Linear,
    /// |x|² − E|x|²; extremal in the intermediate range.
    Quadratic,
    /// (1+|x|²)^ε, needs --eps.
    Power,
    /// x₁ times a smooth bump supported in |x| ≤ 2.
    Linbump,
    /// |x|² times a smooth bump supported in |x| ≤ 2.
    Quadbump,
    /// Random polynomial times a bump (line only), seeded by --seed.
    Random,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Family as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug)]
struct DeficitArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    beta: Option<f64>,
    /// lower, mid or upper; defaults to the range containing β.
    #[arg(long)]
    range: Option<RangeTag>,
    #[arg(long = "f", visible_alias = "family", value_enum)]
    family: Option<Family>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Crank–Nicolson time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Also write (t, integrand) of the time integral to this CSV file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RayleighFamily {
    /// (1+|x|²)^ε.
    Power,
    /// x(1+x²)^ε on the line.
    Oned,
}

impl std::str::FromStr for RayleighFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <RayleighFamily as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug)]
struct RayleighArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum)]
    family: Option<RayleighFamily>,
    /// Exponents ε, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    eps: Vec<f64>,
    /// Distances d below the L² threshold; ε = threshold − d.
    #[arg(long, value_delimiter = ',')]
    eps_from_limit: Vec<f64>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn required<T>(v: Option<T>, key: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Config(format!("missing required option --{key}")))
}

/// Options every command resolves the same way.
struct Resolved {
    n: usize,
    out: Option<PathBuf>,
    format: Format,
    tol: Option<f64>,
}

fn resolve_common(
    c: Common,
    cfg: &ConfigFile,
    default_format: Format,
) -> Result<Resolved, Failure> {
    let n = required(cfg.pick(c.n, "n")?, "n")?;
    let out = cfg.pick(c.out, "out")?;
    let format = cfg.pick(c.format, "format")?.unwrap_or(default_format);
    let tol = cfg.pick(c.tol, "tol")?;
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(Failure::Config("--tol must be positive".into()));
        }
    }
    Ok(Resolved {
        n,
        out,
        format,
        tol,
    })
}

fn resolve_grid(g: GridArgs, cfg: &ConfigFile) -> Result<(Discretization, usize), Failure> {
    let d = Discretization::default();
    let disc = Discretization::new(
        cfg.pick(g.m, "m")?.unwrap_or(d.m),
        cfg.pick(g.delta, "delta")?.unwrap_or(d.delta),
    )?;
    let ell_max = cfg.pick(g.ell_max, "ell-max")?.unwrap_or(4);
    if ell_max < 2 {
        return Err(Failure::Config("--ell-max must be at least 2".into()));
    }
    Ok((disc, ell_max))
}

fn write_gap(
    reports: &[GapReport],
    format: Format,
    out: &mut dyn Write,
    single: bool,
) -> CmdResult {
    match format {
        Format::Csv => write_sweep_csv(reports, &mut *out)?,
        Format::Json if single => writeln!(out, "{}", reports[0].to_json())?,
        Format::Json => writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(reports).expect("reports serialise")
        )?,
    }
    out.flush()?;
    Ok(())
}

fn cmd_gap(a: GapArgs, cfg: &ConfigFile) -> CmdResult {
    let c = resolve_common(a.common, cfg, Format::Json)?;
    let beta = required(cfg.pick(a.beta, "beta")?, "beta")?;
    let (disc, ell_max) = resolve_grid(a.grid, cfg)?;
    cfg.finish()?;
    let params = MeasureParams::new(c.n, beta)?;
    let tol = c.tol.unwrap_or(1e-3);

    let report = numeric_gap(&params, &disc, ell_max)?;
    let mut out = output::open(c.out, "gap", c.format)?;
    write_gap(std::slice::from_ref(&report), c.format, &mut out, true)?;
    eprintln!(
        "n={} beta={} {} range: closed form {:.10}, numeric {:.10} (mode {}), rel error {:.3e}",
        report.n,
        report.beta,
        report.range_tag,
        report.closed_form,
        report.numeric_gap,
        report.minimizing_mode,
        report.rel_error
    );
    if report.rel_error.abs() > tol {
        return Err(Failure::Tolerance(format!(
            "relative error {:.3e} exceeds {tol:e}",
            report.rel_error
        )));
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs, cfg: &ConfigFile) -> CmdResult {
    let c = resolve_common(a.common, cfg, Format::Csv)?;
    let lo = required(cfg.pick(a.beta_min, "beta-min")?, "beta-min")?;
    let hi = required(cfg.pick(a.beta_max, "beta-max")?, "beta-max")?;
    let steps = required(cfg.pick(a.steps, "steps")?, "steps")?;
    let (disc, ell_max) = resolve_grid(a.grid, cfg)?;
    cfg.finish()?;
    if c.n == 0 {
        return Err(Failure::Config("--n must be at least 1".into()));
    }
    let half = c.n as f64 / 2.0;
    if !(lo > half && hi >= lo && hi.is_finite()) || steps == 0 {
        return Err(Failure::Config(format!(
            "need n/2 = {half} < beta-min <= beta-max and steps >= 1"
        )));
    }

    let reports = sweep(c.n, &beta_grid(lo, hi, steps), &disc, ell_max)?;
    let mut out = output::open(c.out, "sweep", c.format)?;
    write_gap(&reports, c.format, &mut out, false)?;
    if let Some(tol) = c.tol {
        let bad = reports.iter().filter(|r| r.rel_error.abs() > tol).count();
        if bad > 0 {
            return Err(Failure::Tolerance(format!(
                "{bad} of {} rows exceed relative error {tol:e}",
                reports.len()
            )));
        }
    }
    Ok(())
}

/// Pointwise check of the Cauchy Γ₂ factorisation on the trial functions.
fn factorization_check(
    params: &MeasureParams,
    seed: u64,
    trials: usize,
) -> Result<serde_json::Value, Failure> {
    let mut max_rel: f64 = 0.0;
    let mut min_part = f64::INFINITY;
    let mut points_checked = 0usize;
    for k in 0..trials.min(10) {
        let f = trial_function(params.n(), seed, k)?;
        let radius = f.support_radius().unwrap_or(4.0);
        for x in quasi_random_points(params.n(), 64, radius) {
            let parts = gamma2_cauchy_factorized(&f, &x, params);
            let direct = gamma2_cauchy(&f, &x, params);
            max_rel = max_rel.max((parts.total - direct).abs() / direct.abs().max(1.0));
            min_part = min_part
                .min(parts.hessian_square)
                .min(parts.angular)
                .min(parts.gradient);
            points_checked += 1;
        }
    }
    Ok(json!({
        "points": points_checked,
        "max_rel_error": max_rel,
        "min_part": min_part,
        "pass": max_rel <= 1e-10 && min_part >= 0.0,
    }))
}

fn witness_check(params: &MeasureParams) -> Vec<serde_json::Value> {
    [0.01, 0.1, 1.0, 10.0]
        .iter()
        .map(|&rho| match cd_witness(params, rho) {
            Ok(w) => json!({
                "rho": rho,
                "x_norm": w.x.norm(),
                "gamma": w.gamma,
                "gamma2": w.gamma2,
                "pass": w.gamma2 < rho * w.gamma,
            }),
            Err(e) => json!({ "rho": rho, "error": e.to_string(), "pass": false }),
        })
        .collect()
}

fn cmd_verify(a: VerifyArgs, cfg: &ConfigFile) -> CmdResult {
    let c = resolve_common(a.common, cfg, Format::Json)?;
    let beta = required(cfg.pick(a.beta, "beta")?, "beta")?;
    let trials = cfg.pick(a.trials, "trials")?.unwrap_or(50);
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(0);
    let corrupt = cfg.pick_flag(a.corrupt_ipp1, "corrupt-ipp1")?;
    cfg.finish()?;
    let params = MeasureParams::new(c.n, beta)?;
    if trials == 0 {
        return Err(Failure::Config("--trials must be positive".into()));
    }
    let tol = c.tol.unwrap_or(1e-5);

    let report: VerificationReport = verify_all(
        &params,
        &VerifyOptions {
            trials,
            seed,
            corrupt_ipp1: corrupt,
        },
    )?;
    let factorization = factorization_check(&params, seed, trials)?;
    let witnesses = witness_check(&params);

    let mut out = output::open(c.out, "verify", c.format)?;
    match c.format {
        Format::Json => {
            let doc = json!({
                "tolerance": tol,
                "identities": report,
                "factorization": factorization,
                "cd_witnesses": witnesses,
            });
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&doc).expect("serialises")
            )?;
        }
        Format::Csv => report.write_csv(&mut out)?,
    }
    out.flush()?;

    let mut failed: Vec<String> = report
        .reports
        .iter()
        .filter(|r| !r.passes(tol))
        .map(|r| format!("{} (rel err {:.3e})", r.tag, r.rel_err))
        .collect();
    for r in &report.reports {
        let status = if r.is_skipped() {
            "skipped"
        } else if r.passes(tol) {
            "pass"
        } else {
            "FAIL"
        };
        eprintln!("{:<10} {status:<8} rel err {:.3e}", r.tag, r.rel_err);
    }
    if factorization["pass"] != true {
        failed.push("factorization".into());
    }
    if witnesses.iter().any(|w| w["pass"] != true) {
        failed.push("cd witness".into());
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Tolerance(format!("failed: {}", failed.join(", "))))
    }
}

fn deficit_function(
    family: Family,
    params: &MeasureParams,
    eps: Option<f64>,
    seed: u64,
) -> Result<RadialFunction, Failure> {
    let n = params.n();
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let bump = |f: cauchy_gap::functions::SmoothFunction| f.times_bump(Vector::zeros(n), 1.0, 2.0);
    let rf = match family {
        Family::Linear => RadialFunction::from_smooth(&make_linear(&e1)?, 1)?,
        Family::Quadratic => RadialFunction::from_smooth(&make_quadratic_centered(params)?, 0)?,
        Family::Power => {
            let e = required(eps, "eps")?;
            RadialFunction::from_smooth(&make_power_family(n, e), 0)?
        }
        Family::Linbump => {
            RadialFunction::from_smooth(&bump(make_linear(&e1)?), 1)?.with_support(2.0, &[1.0])
        }
        Family::Quadbump => RadialFunction::from_smooth(&bump(make_quadratic(n, 1.0, 0.0)), 0)?
            .with_support(2.0, &[1.0]),
        Family::Random => {
            if n != 1 {
                return Err(Failure::Config(
                    "the random family is only available on the line (--n 1)".into(),
                ));
            }
            RadialFunction::from_line(&make_random_test(1, seed, 4, 2.0)?)?
                .with_support(2.0, &[1.0])
        }
    };
    Ok(rf)
}

fn cmd_deficit(a: DeficitArgs, cfg: &ConfigFile) -> CmdResult {
    let c = resolve_common(a.common, cfg, Format::Csv)?;
    let beta = required(cfg.pick(a.beta, "beta")?, "beta")?;
    let range = cfg.pick(a.range, "range")?;
    let family = required(cfg.pick(a.family, "f")?, "f")?;
    let eps = cfg.pick(a.eps, "eps")?;
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(0);
    let d = Discretization::default();
    let disc = Discretization::new(
        cfg.pick(a.m, "m")?.unwrap_or(d.m),
        cfg.pick(a.delta, "delta")?.unwrap_or(d.delta),
    )?;
    let time = TimeControls {
        dt: cfg.pick(a.dt, "dt")?.unwrap_or(TimeControls::default().dt),
        ..TimeControls::default()
    };
    let trace = cfg.pick(a.trace, "trace")?;
    cfg.finish()?;
    if !(time.dt > 0.0) {
        return Err(Failure::Config("--dt must be positive".into()));
    }
    let params = MeasureParams::new(c.n, beta)?;
    let range = range.unwrap_or_else(|| range_tag(&params));
    let tol = c.tol.unwrap_or(1e-3);

    let f = deficit_function(family, &params, eps, seed)?;
    let r = deficit(&f, &params, range, &disc, &time)?;

    let mut out = output::open(c.out, "deficit", c.format)?;
    match c.format {
        Format::Json => writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&r).expect("serialises")
        )?,
        Format::Csv => {
            writeln!(
                out,
                "n,beta,range,family,lambda,variance,energy,deficit,time_integral,discrepancy,tail_bound,one_d_hessian_integral,t_end,dt"
            )?;
            let hess = r
                .one_d_hessian_integral
                .map(|v| format!("{v:.16e}"))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:e}",
                c.n,
                beta,
                r.range,
                family.to_possible_value().expect("named").get_name(),
                r.lambda,
                r.variance,
                r.energy,
                r.deficit,
                r.time_integral,
                r.discrepancy,
                r.tail_bound,
                hess,
                r.t_end,
                r.dt
            )?;
        }
    }
    out.flush()?;
    if let Some(path) = trace {
        let file = std::fs::File::create(&path)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
        r.write_trace_csv(std::io::BufWriter::new(file))?;
    }
    eprintln!(
        "deficit {:.6e}, time integral {:.6e}, discrepancy {:.3e} (tail bound {:.3e})",
        r.deficit, r.time_integral, r.discrepancy, r.tail_bound
    );

    let scale = r.lambda * r.variance + r.energy;
    if r.deficit > tol * scale {
        return Err(Failure::Tolerance(format!(
            "positive deficit {:.3e} contradicts the Poincaré inequality",
            r.deficit
        )));
    }
    if r.discrepancy > r.tail_bound + tol * scale {
        return Err(Failure::Tolerance(format!(
            "time integral misses the deficit by {:.3e}",
            r.discrepancy
        )));
    }
    Ok(())
}

fn cmd_rayleigh(a: RayleighArgs, cfg: &ConfigFile) -> CmdResult {
    let c = resolve_common(a.common, cfg, Format::Csv)?;
    let beta = required(cfg.pick(a.beta, "beta")?, "beta")?;
    let family = cfg
        .pick(a.family, "family")?
        .unwrap_or(RayleighFamily::Power);
    let eps = cfg.pick_list(a.eps, "eps")?;
    let from_limit = cfg.pick_list(a.eps_from_limit, "eps-from-limit")?;
    cfg.finish()?;
    let params = MeasureParams::new(c.n, beta)?;
    if family == RayleighFamily::Oned && c.n != 1 {
        return Err(Failure::Config("the oned family needs --n 1".into()));
    }
    let threshold = match family {
        RayleighFamily::Power => (2.0 * beta - c.n as f64) / 4.0,
        RayleighFamily::Oned => (2.0 * beta - 3.0) / 4.0,
    };
    let mut values: Vec<f64> = eps.clone();
    values.extend(from_limit.iter().map(|d| threshold - d));
    if values.is_empty() {
        return Err(Failure::Config("give --eps or --eps-from-limit".into()));
    }
    // On the lower branch the quotient tends to (β − n/2)² at the threshold.
    let limit = branch_value(&params, RangeTag::Lower);

    let mut rows = Vec::with_capacity(values.len());
    for &e in &values {
        let (q, quad) = match family {
            RayleighFamily::Power => (
                rayleigh_quotient_power(e, &params)?,
                rayleigh_quotient_power_quadrature(e, &params)?,
            ),
            RayleighFamily::Oned => (
                rayleigh_quotient_1d(e, beta)?,
                rayleigh_quotient_1d_quadrature(e, beta)?,
            ),
        };
        rows.push((e, q, quad));
    }

    let name = family
        .to_possible_value()
        .expect("named")
        .get_name()
        .to_string();
    let mut out = output::open(c.out, "rayleigh", c.format)?;
    match c.format {
        Format::Csv => {
            writeln!(out, "family,n,beta,eps,quotient,quotient_quadrature,limit")?;
            for (e, q, quad) in &rows {
                writeln!(
                    out,
                    "{name},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    c.n, beta, e, q, quad, limit
                )?;
            }
        }
        Format::Json => {
            let doc = json!({
                "family": name,
                "n": c.n,
                "beta": beta,
                "threshold": threshold,
                "limit": limit,
                "rows": rows.iter().map(|(e, q, quad)| json!({
                    "eps": e, "quotient": q, "quotient_quadrature": quad
                })).collect::<Vec<_>>(),
            });
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&doc).expect("serialises")
            )?;
        }
    }
    out.flush()?;
    if let Some(tol) = c.tol {
        let worst = rows
            .iter()
            .map(|(_, q, quad)| (q - quad).abs() / q.abs().max(1e-300))
            .fold(0.0, f64::max);
        if worst > tol {
            return Err(Failure::Tolerance(format!(
                "closed form and quadrature differ by {worst:.3e}"
            )));
        }
    }
    Ok(())
}

fn cmd_sample(a: SampleArgs, cfg: &ConfigFile) -> CmdResult {
    let c = resolve_common(a.common, cfg, Format::Csv)?;
    let beta = required(cfg.pick(a.beta, "beta")?, "beta")?;
    let count = required(cfg.pick(a.count, "count")?, "count")?;
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(0);
    cfg.finish()?;
    if c.format != Format::Csv {
        return Err(Failure::Config("sample writes CSV only".into()));
    }
    let params = MeasureParams::new(c.n, beta)?;
    let z_max = c.tol.unwrap_or(4.0);

    let batch = sample(&params, count, seed)?;
    let sq = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>();
    let mut checks = vec![(
        "inv_omega",
        batch.mean_and_stderr(|p| 1.0 / (1.0 + sq(p))),
        omega_moment(1.0, &params)?,
    )];
    if let Ok(exact) = mean_sq_norm(&params) {
        checks.push(("sq_norm", batch.mean_and_stderr(sq), exact));
    }

    let mut out = output::open(c.out, "sample", c.format)?;
    batch.write_csv(&mut out)?;
    let mut worst: f64 = 0.0;
    for (name, (mean, se), exact) in &checks {
        let z = (mean - exact) / se;
        worst = worst.max(z.abs());
        writeln!(
            out,
            "# moment,{name},{mean:.16e},{se:.16e},{exact:.16e},{z:.6}"
        )?;
    }
    out.flush()?;
    if worst > z_max {
        return Err(Failure::Tolerance(format!(
            "sample moment off by {worst:.2} standard errors"
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Gap(a) => cmd_gap(a, &cfg),
        Command::Sweep(a) => cmd_sweep(a, &cfg),
        Command::Verify(a) => cmd_verify(a, &cfg),
        Command::Deficit(a) => cmd_deficit(a, &cfg),
        Command::Rayleigh(a) => cmd_rayleigh(a, &cfg),
        Command::Sample(a) => cmd_sample(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Tolerance(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(2)
        }
    }
}
