//! The generalised Cauchy probability measure μ_β on ℝⁿ, with density
//! proportional to (1+|x|²)^(-β), its normalisation, moments and a sampler.

use crate::error::{Error, Result};
use crate::special::ln_gamma;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Dimension and exponent identifying μ_β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureParams {
    n: usize,
    beta: f64,
}

impl MeasureParams {
    /// Validated constructor: rejects n = 0 and β ≤ n/2.
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        if !beta.is_finite() || beta <= n as f64 / 2.0 {
            return Err(Error::NotProbability { n, beta });
        }
        Ok(Self { n, beta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// n/2 as a float, used everywhere thresholds are written in β.
    pub fn half_n(&self) -> f64 {
        self.n as f64 / 2.0
    }

    /// Same dimension with a different exponent.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.n, beta)
    }
}

fn ln_normalization(n: usize, beta: f64) -> f64 {
    let h = n as f64 / 2.0;
    h * PI.ln() + ln_gamma(beta - h) - ln_gamma(beta)
}

/// Z_{n,β} = π^{n/2} Γ(β−n/2) / Γ(β), the integral of (1+|x|²)^(-β) over ℝⁿ.
pub fn normalization(params: &MeasureParams) -> f64 {
    ln_normalization(params.n, params.beta).exp()
}

/// Log of [`normalization`]; finite far beyond the range where Z itself
/// under- or overflows.
pub fn log_normalization(params: &MeasureParams) -> f64 {
    ln_normalization(params.n, params.beta)
}

/// Probability density of μ_β at `x`.
pub fn density(x: &[f64], params: &MeasureParams) -> f64 {
    debug_assert_eq!(x.len(), params.n);
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (-params.beta * (1.0 + r2).ln() - log_normalization(params)).exp()
}

/// ∫ (1+|x|²)^(-γ) dμ_β = Z_{n,β+γ} / Z_{n,β}.
pub fn omega_moment(gamma: f64, params: &MeasureParams) -> Result<f64> {
    let shifted = params.beta + gamma;
    if !(shifted > params.half_n()) {
        return Err(Error::precondition(
            "omega_moment",
            format!("beta + gamma > n/2 (got {shifted} <= {})", params.half_n()),
        ));
    }
    Ok((ln_normalization(params.n, shifted) - ln_normalization(params.n, params.beta)).exp())
}

/// E|x|² = n / (2β − n − 2), finite only for β > n/2 + 1.
pub fn mean_sq_norm(params: &MeasureParams) -> Result<f64> {
    let denom = 2.0 * params.beta - params.n as f64 - 2.0;
    if denom <= 0.0 {
        return Err(Error::precondition(
            "mean_sq_norm",
            format!("beta > n/2 + 1 (got beta = {})", params.beta),
        ));
    }
    Ok(params.n as f64 / denom)
}

/// Radial CDF of |x|² under μ_β.
///
/// With u = 1/(1+|x|²) the law of u is Beta(β−n/2, n/2), so
/// P(|x|² ≤ s) = 1 − I_{1/(1+s)}(β−n/2, n/2).
pub fn sq_norm_cdf(s: f64, params: &MeasureParams) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let u0 = 1.0 / (1.0 + s);
    1.0 - statrs::function::beta::beta_reg(params.beta - params.half_n(), params.half_n(), u0)
}

/// A batch of points drawn from μ_β, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub n: usize,
    pub seed: u64,
    pub count: usize,
    coords: Vec<f64>,
}

/// Points per independent generator stream. Each chunk gets its own ChaCha
/// stream so that chunks can be drawn in parallel without changing the output.
const CHUNK: usize = 8192;

impl SampleBatch {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.n)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Sample mean and standard error of a scalar statistic of the points.
    pub fn mean_and_stderr(&self, stat: impl Fn(&[f64]) -> f64 + Sync) -> (f64, f64) {
        let values: Vec<f64> = self.points().map(&stat).collect();
        let count = values.len() as f64;
        let mean = values.iter().sum::<f64>() / count;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        (mean, (var / count).sqrt())
    }

    /// Kolmogorov–Smirnov statistic of the empirical law of |x|² against
    /// the exact radial CDF.
    pub fn ks_sq_norm(&self, params: &MeasureParams) -> f64 {
        let mut s: Vec<f64> = self
            .points()
            .map(|p| p.iter().map(|v| v * v).sum())
            .collect();
        s.sort_by(f64::total_cmp);
        let count = s.len() as f64;
        s.iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = sq_norm_cdf(v, params);
                (f - i as f64 / count)
                    .abs()
                    .max((i as f64 + 1.0) / count - f)
            })
            .fold(0.0, f64::max)
    }

    /// CSV export: header `x1,...,xn`, one row per point, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (1..=self.n).map(|i| format!("x{i}")).collect();
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for p in self.points() {
            line.clear();
            for (i, v) in p.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Draws `count` points from μ_β as x = g/√s with g standard Gaussian and
/// s ~ χ²(2β − n), the latter generated as Gamma(shape (2β−n)/2, scale 2).
pub fn sample(params: &MeasureParams, count: usize, seed: u64) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::invalid("count", "must be positive"));
    }
    let n = params.n;
    let dof = 2.0 * params.beta - n as f64;
    let chi2 = Gamma::new(dof / 2.0, 2.0).map_err(|e| Error::invalid("beta", e.to_string()))?;
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            let mut buf = Vec::with_capacity(len * n);
            for _ in 0..len {
                let s: f64 = chi2.sample(&mut rng);
                let scale = 1.0 / s.sqrt();
                for _ in 0..n {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    buf.push(g * scale);
                }
            }
            buf
        })
        .collect();
    Ok(SampleBatch {
        n,
        seed,
        count,
        coords: parts.concat(),
    })
}
