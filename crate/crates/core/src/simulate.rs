//! Benchmark trend surfaces built from Gaussian-process sample paths.
//!
//! With `f_1, …, f_5` drawn from zero-mean GPs with RBF kernels
//! `k_i(x, x') = θ_i² exp(−(x − x')² / 2θ_i²)`:
//!
//! ```text
//! Constant            β_t(x) = f_1(x)
//! Smooth              β_t(x) = f_1(x) sin((t + x) / 5)
//! PiecewiseConstant   β_t(x) = f_i(x)   for t in block i of length T/5
//! VaryingSmoothness   β_t(x) = f_1(x) + 20 { sin(4t/n − 2) + 2 exp(−30 (4t/n − 2)²) }
//! ```
//!
//! The domain is `[1, n]` (`n = 120` by default) and the `H` evaluation
//! points are equally spaced over it, so `H = n` gives `x ∈ {1, …, H}`.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Domain, FunctionalDataset, Record};
use crate::error::{invalid, Error, Result};
use crate::rng::{self, streams};
use crate::sampler::dist::standard_normal;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Constant,
    Smooth,
    PiecewiseConstant,
    VaryingSmoothness,
}

impl Scenario {
    pub const ALL: [Scenario; 4] =
        [Scenario::Constant, Scenario::Smooth, Scenario::PiecewiseConstant, Scenario::VaryingSmoothness];

    /// Scenario from its 1-based number or name.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "constant" => Ok(Scenario::Constant),
            "2" | "smooth" => Ok(Scenario::Smooth),
            "3" | "piecewise" | "piecewise-constant" => Ok(Scenario::PiecewiseConstant),
            "4" | "varying" | "varying-smoothness" => Ok(Scenario::VaryingSmoothness),
            other => Err(invalid(format!("unknown scenario {other:?}"))),
        }
    }

    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Constant => "constant",
            Scenario::Smooth => "smooth",
            Scenario::PiecewiseConstant => "piecewise-constant",
            Scenario::VaryingSmoothness => "varying-smoothness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n_times: usize,
    /// Number of evaluation points `H`.
    pub n_points: usize,
    /// Upper end `n` of the domain `[1, n]`; also the `n` in the
    /// varying-smoothness bump.
    pub domain_size: f64,
    pub noise_sd: f64,
    pub theta: [f64; 5],
    pub seed: u64,
    pub omit_rate: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            scenario: Scenario::Constant,
            n_times: 50,
            n_points: 120,
            domain_size: 120.0,
            noise_sd: 5.0,
            theta: [30.0, 20.0, 35.0, 25.0, 30.0],
            seed: 0,
            omit_rate: 0.0,
        }
    }
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        Self { scenario, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_times < 2 {
            return Err(invalid("T must be at least 2"));
        }
        if self.n_points == 0 {
            return Err(invalid("H must be at least 1"));
        }
        if !(self.domain_size > 1.0 && self.domain_size.is_finite()) {
            return Err(invalid("domain size must exceed 1"));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(invalid("noise sd must be nonnegative"));
        }
        if self.theta.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(invalid("all theta must be positive"));
        }
        if !(0.0..1.0).contains(&self.omit_rate) {
            return Err(invalid("omit rate must lie in [0, 1)"));
        }
        if self.scenario == Scenario::PiecewiseConstant && self.n_times % 5 != 0 {
            return Err(invalid(format!("piecewise constant needs T divisible by 5, got {}", self.n_times)));
        }
        Ok(())
    }

    pub fn domain<F: Scalar>(&self) -> Domain<F> {
        Domain::new(F::one(), F::lit(self.domain_size)).expect("validated domain")
    }

    /// `H` equally spaced points over `[1, n]`.
    pub fn grid(&self) -> Vec<f64> {
        if self.n_points == 1 {
            return vec![1.0];
        }
        let step = (self.domain_size - 1.0) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| if i + 1 == self.n_points { self.domain_size } else { 1.0 + i as f64 * step })
            .collect()
    }
}

/// True values `β_t(x)` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendSurface<F: Scalar> {
    pub grid: Vec<F>,
    /// `T × H`.
    pub values: DMatrix<F>,
}

impl<F: Scalar> TrendSurface<F> {
    pub fn new(grid: Vec<F>, values: DMatrix<F>) -> Result<Self> {
        if values.ncols() != grid.len() {
            return Err(Error::Shape(format!("{} grid points but {} columns", grid.len(), values.ncols())));
        }
        if values.iter().any(|v| !v.finite()) {
            return Err(Error::NonFinite("trend surface".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn n_times(&self) -> usize {
        self.values.nrows()
    }

    /// Long format `t,s,y` with 1-based `t`.
    pub fn write(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "t,s,y")?;
        for t in 0..self.n_times() {
            for (h, x) in self.grid.iter().enumerate() {
                writeln!(out, "{},{},{}", t + 1, x.as_f64(), self.values[(t, h)].as_f64())?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    /// Reads a long-format surface; every `t` must share the same grid.
    pub fn read(reader: impl BufRead, domain: Domain<F>) -> Result<Self> {
        let ds = FunctionalDataset::read(reader, domain)?;
        let grid = ds.record(0).points.clone();
        if ds.records().iter().any(|r| r.points != grid) {
            return Err(invalid("truth surface needs a common grid for all t"));
        }
        let values = DMatrix::from_fn(ds.len(), grid.len(), |t, h| ds.record(t).values[h]);
        Self::new(grid, values)
    }

    pub fn load(path: impl AsRef<Path>, domain: Domain<F>) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?), domain)
    }
}

pub fn rbf_kernel(theta: f64, x1: f64, x2: f64) -> f64 {
    let d = x1 - x2;
    theta * theta * (-d * d / (2.0 * theta * theta)).exp()
}

/// One draw of the zero-mean RBF Gaussian process on `grid`.
///
/// The diagonal gets `1e-8 θ²` jitter, raised tenfold up to three times if
/// the factorization still fails.
pub fn gp_path<F: Scalar, R: Rng + ?Sized>(theta: F, grid: &[F], rng: &mut R) -> Result<Vec<F>> {
    if !(theta > F::zero()) {
        return Err(invalid("GP length scale must be positive"));
    }
    let th = theta.as_f64();
    let n = grid.len();
    let k = DMatrix::<F>::from_fn(n, n, |i, j| F::lit(rbf_kernel(th, grid[i].as_f64(), grid[j].as_f64())));
    let mut jitter = 1e-8 * th * th;
    let mut factor = None;
    for _ in 0..4 {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += F::lit(jitter);
        }
        if let Some(c) = kj.cholesky() {
            factor = Some(c);
            break;
        }
        jitter *= 10.0;
    }
    let chol = factor.ok_or_else(|| Error::NotPositiveDefinite(format!("GP covariance with theta = {th}")))?;
    let z = DVector::<F>::from_fn(n, |_, _| F::lit(standard_normal(rng)));
    Ok((chol.l() * z).iter().copied().collect())
}

/// Truth surface of a scenario from precomputed paths `f_1..f_5`.
pub fn trend_surface<F: Scalar>(spec: &ScenarioSpec, paths: &[Vec<F>; 5]) -> Result<TrendSurface<F>> {
    spec.validate()?;
    let grid = spec.grid();
    let n = spec.domain_size;
    let block = spec.n_times / 5;
    let values = DMatrix::from_fn(spec.n_times, grid.len(), |ti, h| {
        let t = (ti + 1) as f64;
        let f1 = paths[0][h].as_f64();
        let v = match spec.scenario {
            Scenario::Constant => f1,
            Scenario::Smooth => f1 * ((t + grid[h]) / 5.0).sin(),
            Scenario::PiecewiseConstant => paths[ti / block][h].as_f64(),
            Scenario::VaryingSmoothness => f1 + varying_bump(t, n),
        };
        F::lit(v)
    });
    TrendSurface::new(grid.into_iter().map(F::lit).collect(), values)
}

/// `20 { sin(4t/n − 2) + 2 exp(−30 (4t/n − 2)²) }`.
pub fn varying_bump(t: f64, n: f64) -> f64 {
    let u = 4.0 * t / n - 2.0;
    20.0 * (u.sin() + 2.0 * (-30.0 * u * u).exp())
}

/// Truth and noisy observations for one replicate.
///
/// All five paths are always drawn (in index order) from the stream
/// `(seed, SIMULATE)`, then the noise, then the omission.
pub fn make_scenario<F: Scalar>(spec: &ScenarioSpec) -> Result<(TrendSurface<F>, FunctionalDataset<F>)> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, streams::SIMULATE);
    let grid: Vec<F> = spec.grid().into_iter().map(F::lit).collect();
    let mut paths: [Vec<F>; 5] = Default::default();
    for (p, theta) in paths.iter_mut().zip(spec.theta) {
        *p = gp_path(F::lit(theta), &grid, &mut rng)?;
    }
    let truth = trend_surface(spec, &paths)?;
    let records = (0..spec.n_times)
        .map(|t| Record {
            points: grid.clone(),
            values: (0..grid.len())
                .map(|h| truth.values[(t, h)] + F::lit(spec.noise_sd * standard_normal(&mut rng)))
                .collect(),
        })
        .collect();
    let mut ds = FunctionalDataset::new(records, spec.domain(), None)?;
    if spec.omit_rate > 0.0 {
        ds = ds.omit_at_random(spec.omit_rate, &mut rng)?;
    }
    Ok((truth, ds))
}
