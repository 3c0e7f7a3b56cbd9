//! Pointwise posterior summaries of `Z_t(x)` and accuracy criteria against
//! a known truth.
//!
//! Quantiles use the linear interpolation rule (type 7): for sorted draws
//! `z_(1) ≤ … ≤ z_(m)` and probability `p`, let `h = (m − 1) p`; the
//! quantile is `z_(⌊h⌋+1) + (h − ⌊h⌋)(z_(⌊h⌋+2) − z_(⌊h⌋+1))`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::basis::BSplineSystem;
use crate::data::FunctionalDataset;
use crate::error::{invalid, Error, Result};
use crate::sampler::DrawStore;
use crate::scalar::Scalar;
use crate::simulate::TrendSurface;

/// Type-7 quantile of an ascending slice.
pub fn quantile_sorted<F: Scalar>(sorted: &[F], p: f64) -> F {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() || frac == 0.0 {
        return sorted[lo];
    }
    sorted[lo] + F::lit(frac) * (sorted[lo + 1] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary<F: Scalar> {
    pub grid: Vec<F>,
    /// Each matrix is `T × H`.
    pub mean: DMatrix<F>,
    pub median: DMatrix<F>,
    pub lower: DMatrix<F>,
    pub upper: DMatrix<F>,
}

impl<F: Scalar> PosteriorSummary<F> {
    pub fn n_times(&self) -> usize {
        self.mean.nrows()
    }

    pub fn write(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "t,s,mean,median,q025,q975")?;
        for t in 0..self.n_times() {
            for (h, x) in self.grid.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    t + 1,
                    x.as_f64(),
                    self.mean[(t, h)].as_f64(),
                    self.median[(t, h)].as_f64(),
                    self.lower[(t, h)].as_f64(),
                    self.upper[(t, h)].as_f64()
                )?;
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

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut rows: Vec<(usize, [f64; 5])> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse { line: i + 1, msg: msg.into() };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 6 {
                return Err(bad("expected 6 fields"));
            }
            let t: usize = f[0].parse().map_err(|_| bad("bad t"))?;
            let mut v = [0.0; 5];
            for (slot, s) in v.iter_mut().zip(&f[1..]) {
                *slot = s.parse().map_err(|_| bad("bad number"))?;
            }
            rows.push((t, v));
        }
        let n_times = rows.iter().map(|r| r.0).max().ok_or_else(|| invalid("empty summary"))?;
        if rows.len() % n_times != 0 {
            return Err(invalid("summary rows do not form a T × H grid"));
        }
        let h = rows.len() / n_times;
        let grid: Vec<F> = rows[..h].iter().map(|r| F::lit(r.1[0])).collect();
        let cell = |k: usize| {
            DMatrix::from_fn(n_times, h, |t, j| F::lit(rows[t * h + j].1[k]))
        };
        for (i, (t, v)) in rows.iter().enumerate() {
            if *t != i / h + 1 || F::lit(v[0]) != grid[i % h] {
                return Err(invalid("summary rows must be ordered by t, then s"));
            }
        }
        Ok(Self { grid, mean: cell(1), median: cell(2), lower: cell(3), upper: cell(4) })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Evaluate every retained draw on `grid` and reduce pointwise.
pub fn summarize<F: Scalar>(
    store: &DrawStore<F>,
    system: &BSplineSystem<F>,
    grid: &[F],
) -> Result<PosteriorSummary<F>> {
    if store.is_empty() {
        return Err(invalid("cannot summarize an empty draw store"));
    }
    if store.n_basis() != system.len() {
        return Err(Error::Shape(format!(
            "draws have L = {}, basis has L = {}",
            store.n_basis(),
            system.len()
        )));
    }
    let phi = system.design_matrix(grid)?.phi;
    let (n_times, h, m) = (store.n_times(), grid.len(), store.len());
    let mut out = PosteriorSummary {
        grid: grid.to_vec(),
        mean: DMatrix::zeros(n_times, h),
        median: DMatrix::zeros(n_times, h),
        lower: DMatrix::zeros(n_times, h),
        upper: DMatrix::zeros(n_times, h),
    };
    let mf = F::from_usize_lossy(m);
    for t in 0..n_times {
        let coeffs = DMatrix::from_fn(system.len(), m, |l, d| store.draws()[d].coeffs[(t, l)]);
        let z = &phi * coeffs;
        let mut buf = vec![F::zero(); m];
        for j in 0..h {
            buf.iter_mut().zip(z.row(j).iter()).for_each(|(b, v)| *b = *v);
            out.mean[(t, j)] = buf.iter().fold(F::zero(), |a, v| a + *v) / mf;
            buf.sort_by(|a, b| a.as_f64().total_cmp(&b.as_f64()));
            out.median[(t, j)] = quantile_sorted(&buf, 0.5);
            out.lower[(t, j)] = quantile_sorted(&buf, 0.025);
            out.upper[(t, j)] = quantile_sorted(&buf, 0.975);
        }
    }
    Ok(out)
}

fn check_shape<F: Scalar>(est: &DMatrix<F>, truth: &TrendSurface<F>) -> Result<()> {
    if est.shape() != truth.values.shape() {
        return Err(Error::Shape(format!(
            "estimate is {:?}, truth is {:?}",
            est.shape(),
            truth.values.shape()
        )));
    }
    Ok(())
}

fn check_grid<F: Scalar>(summary: &PosteriorSummary<F>, truth: &TrendSurface<F>) -> Result<()> {
    let tol = F::lit(1e-9);
    if summary.grid.len() != truth.grid.len()
        || summary.grid.iter().zip(&truth.grid).any(|(a, b)| (*a - *b).abs() > tol * (F::one() + b.abs()))
    {
        return Err(Error::Shape("summary and truth grids differ".into()));
    }
    check_shape(&summary.median, truth)
}

/// Mean absolute deviation of a point estimate.
pub fn mad_of<F: Scalar>(est: &DMatrix<F>, truth: &TrendSurface<F>) -> Result<f64> {
    check_shape(est, truth)?;
    let s: f64 = est.iter().zip(truth.values.iter()).map(|(a, b)| (*a - *b).abs().as_f64()).sum();
    Ok(s / est.len() as f64)
}

/// Mean absolute deviation between estimated and true changes over `t`.
pub fn masvd_of<F: Scalar>(est: &DMatrix<F>, truth: &TrendSurface<F>) -> Result<f64> {
    check_shape(est, truth)?;
    let (n_times, h) = est.shape();
    if n_times < 2 {
        return Err(invalid("MASVD needs T ≥ 2"));
    }
    let mut s = 0.0;
    for t in 0..n_times - 1 {
        for j in 0..h {
            let de = est[(t + 1, j)] - est[(t, j)];
            let dt = truth.values[(t + 1, j)] - truth.values[(t, j)];
            s += (de - dt).abs().as_f64();
        }
    }
    Ok(s / (h * (n_times - 1)) as f64)
}

pub fn mad<F: Scalar>(summary: &PosteriorSummary<F>, truth: &TrendSurface<F>) -> Result<f64> {
    check_grid(summary, truth)?;
    mad_of(&summary.median, truth)
}

pub fn masvd<F: Scalar>(summary: &PosteriorSummary<F>, truth: &TrendSurface<F>) -> Result<f64> {
    check_grid(summary, truth)?;
    masvd_of(&summary.median, truth)
}

pub fn mciw<F: Scalar>(summary: &PosteriorSummary<F>) -> f64 {
    let s: f64 = summary.upper.iter().zip(summary.lower.iter()).map(|(u, l)| (*u - *l).as_f64()).sum();
    s / summary.upper.len() as f64
}

/// Share of cells with `lower < truth < upper` (strict).
pub fn mc<F: Scalar>(summary: &PosteriorSummary<F>, truth: &TrendSurface<F>) -> Result<f64> {
    check_grid(summary, truth)?;
    let hits = truth
        .values
        .iter()
        .zip(summary.lower.iter().zip(summary.upper.iter()))
        .filter(|(b, (l, u))| *u > *b && *b > *l)
        .count();
    Ok(hits as f64 / truth.values.len() as f64)
}

/// The four criteria. For point-estimate baselines `mciw` and `mc` are
/// absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub mad: f64,
    pub masvd: f64,
    pub mciw: Option<f64>,
    pub mc: Option<f64>,
}

impl MetricsReport {
    pub fn evaluate<F: Scalar>(summary: &PosteriorSummary<F>, truth: &TrendSurface<F>) -> Result<Self> {
        Ok(Self {
            mad: mad(summary, truth)?,
            masvd: masvd(summary, truth)?,
            mciw: Some(mciw(summary)),
            mc: Some(mc(summary, truth)?),
        })
    }

    pub fn point_estimate<F: Scalar>(est: &DMatrix<F>, truth: &TrendSurface<F>) -> Result<Self> {
        Ok(Self { mad: mad_of(est, truth)?, masvd: masvd_of(est, truth)?, mciw: None, mc: None })
    }

    /// `key=value` lines.
    pub fn write(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "mad={}", self.mad)?;
        writeln!(out, "masvd={}", self.masvd)?;
        if let Some(v) = self.mciw {
            writeln!(out, "mciw={v}")?;
        }
        if let Some(v) = self.mc {
            writeln!(out, "mc={v}")?;
        }
        Ok(())
    }

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: "expected key=value".into() })?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad value for {k}") })?;
            kv.insert(k.trim().to_string(), v);
        }
        let need = |k: &str| kv.get(k).copied().ok_or_else(|| invalid(format!("metrics file lacks {k}")));
        Ok(Self { mad: need("mad")?, masvd: need("masvd")?, mciw: kv.get("mciw").copied(), mc: kv.get("mc").copied() })
    }
}

/// Per-time least-squares B-spline fit `Φ_grid (Φ_tᵀΦ_t)⁻¹ Φ_tᵀ y_t`, the
/// smoothing-free baseline.
pub fn least_squares_surface<F: Scalar>(
    data: &FunctionalDataset<F>,
    system: &BSplineSystem<F>,
    grid: &[F],
) -> Result<DMatrix<F>> {
    let phi_grid = system.design_matrix(grid)?.phi;
    let mut out = DMatrix::zeros(data.len(), grid.len());
    for (t, rec) in data.records().iter().enumerate() {
        let d = system.design_matrix(&rec.points)?;
        let chol = d.gram_cholesky().map_err(|_| {
            Error::NotPositiveDefinite(format!("least squares at t = {}: Gram matrix is singular", t + 1))
        })?;
        let rhs = d.phi.transpose() * nalgebra::DVector::from_column_slice(&rec.values);
        let coef = chol.solve(&rhs);
        out.row_mut(t).copy_from(&(&phi_grid * coef).transpose());
    }
    Ok(out)
}
