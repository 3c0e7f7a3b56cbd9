//! Retained posterior draws and their on-disk formats.
//!
//! Columnar text: header `iteration,param,index,value`, preceded by a
//! `# T=.. L=.. k=..` comment line. `param` is one of `sigma2`, `tau2`,
//! `lambda2` (index = difference) or `b` (index = `t * L + l`, 0-based).
//!
//! Binary (`FHS1`), all integers `u64` and all reals `f64`, little-endian:
//!
//! ```text
//! magic   "FHS1"            4 bytes
//! T, L, k, m                4 × u64   (m = number of draws)
//! m × { iteration: u64, sigma2, tau2, lambda2[T-k-1], b[T*L] row-major }
//! ```

use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"FHS1";

#[derive(Debug, Clone, PartialEq)]
pub struct Draw<F: Scalar> {
    pub iteration: u64,
    pub sigma2: F,
    pub tau2: F,
    pub lambda2: Vec<F>,
    /// `T × L`.
    pub coeffs: DMatrix<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrawStore<F: Scalar> {
    n_times: usize,
    n_basis: usize,
    order: usize,
    draws: Vec<Draw<F>>,
}

impl<F: Scalar> DrawStore<F> {
    pub fn new(n_times: usize, n_basis: usize, order: usize) -> Self {
        Self { n_times, n_basis, order, draws: Vec::new() }
    }

    pub fn push(&mut self, draw: Draw<F>) -> Result<()> {
        if draw.coeffs.shape() != (self.n_times, self.n_basis)
            || draw.lambda2.len() != self.n_diffs()
        {
            return Err(Error::Shape("draw does not match store dimensions".into()));
        }
        self.draws.push(draw);
        Ok(())
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_diffs(&self) -> usize {
        self.n_times - self.order - 1
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draws(&self) -> &[Draw<F>] {
        &self.draws
    }

    pub fn write_text(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "# T={} L={} k={}", self.n_times, self.n_basis, self.order)?;
        writeln!(out, "iteration,param,index,value")?;
        for d in &self.draws {
            let it = d.iteration;
            writeln!(out, "{it},sigma2,0,{}", d.sigma2.as_f64())?;
            writeln!(out, "{it},tau2,0,{}", d.tau2.as_f64())?;
            for (j, v) in d.lambda2.iter().enumerate() {
                writeln!(out, "{it},lambda2,{j},{}", v.as_f64())?;
            }
            for t in 0..self.n_times {
                for l in 0..self.n_basis {
                    writeln!(out, "{it},b,{},{}", t * self.n_basis + l, d.coeffs[(t, l)].as_f64())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_text(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty draw file".into()))??;
        let dims = parse_dims(&header)?;
        let mut store = Self::new(dims[0], dims[1], dims[2]);
        let mut current: Option<Draw<F>> = None;
        for (i, line) in lines.enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Format(format!("bad draw row {:?}", line));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad());
            }
            let it: u64 = fields[0].parse().map_err(|_| bad())?;
            let idx: usize = fields[2].parse().map_err(|_| bad())?;
            let value = F::lit(fields[3].parse::<f64>().map_err(|_| bad())?);
            if current.as_ref().is_none_or(|d| d.iteration != it) {
                if let Some(d) = current.take() {
                    store.push(d)?;
                }
                current = Some(Draw {
                    iteration: it,
                    sigma2: F::zero(),
                    tau2: F::zero(),
                    lambda2: vec![F::zero(); store.n_diffs()],
                    coeffs: DMatrix::zeros(store.n_times, store.n_basis),
                });
            }
            let d = current.as_mut().expect("just set");
            match fields[1] {
                "sigma2" => d.sigma2 = value,
                "tau2" => d.tau2 = value,
                "lambda2" if idx < d.lambda2.len() => d.lambda2[idx] = value,
                "b" if idx < store.n_times * store.n_basis => {
                    d.coeffs[(idx / store.n_basis, idx % store.n_basis)] = value
                }
                _ => return Err(bad()),
            }
        }
        if let Some(d) = current {
            store.push(d)?;
        }
        Ok(store)
    }

    pub fn write_binary(&self, mut out: impl Write) -> Result<()> {
        out.write_all(MAGIC)?;
        for v in [self.n_times, self.n_basis, self.order, self.draws.len()] {
            out.write_all(&(v as u64).to_le_bytes())?;
        }
        for d in &self.draws {
            out.write_all(&d.iteration.to_le_bytes())?;
            let reals = [d.sigma2, d.tau2]
                .into_iter()
                .chain(d.lambda2.iter().copied())
                .chain((0..self.n_times).flat_map(|t| (0..self.n_basis).map(move |l| (t, l))).map(|(t, l)| d.coeffs[(t, l)]));
            for v in reals {
                out.write_all(&v.as_f64().to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("missing FHS1 magic".into()));
        }
        let mut word = || -> Result<[u8; 8]> {
            let mut b = [0u8; 8];
            input.read_exact(&mut b)?;
            Ok(b)
        };
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = u64::from_le_bytes(word()?) as usize;
        }
        let [n_times, n_basis, order, m] = dims;
        if order + 1 >= n_times {
            return Err(Error::Format(format!("inconsistent dimensions T={n_times}, k={order}")));
        }
        let mut store = Self::new(n_times, n_basis, order);
        for _ in 0..m {
            let iteration = u64::from_le_bytes(word()?);
            let mut real = || -> Result<F> { Ok(F::lit(f64::from_le_bytes(word()?))) };
            let sigma2 = real()?;
            let tau2 = real()?;
            let lambda2 = (0..store.n_diffs()).map(|_| real()).collect::<Result<Vec<_>>>()?;
            let mut coeffs = DMatrix::zeros(n_times, n_basis);
            for t in 0..n_times {
                for l in 0..n_basis {
                    coeffs[(t, l)] = real()?;
                }
            }
            store.push(Draw { iteration, sigma2, tau2, lambda2, coeffs })?;
        }
        Ok(store)
    }
}

fn parse_dims(header: &str) -> Result<[usize; 3]> {
    let mut dims = [None; 3];
    for tok in header.trim_start_matches('#').split_whitespace() {
        let (key, val) = tok.split_once('=').ok_or_else(|| Error::Format(header.into()))?;
        let val: usize = val.parse().map_err(|_| Error::Format(header.into()))?;
        match key {
            "T" => dims[0] = Some(val),
            "L" => dims[1] = Some(val),
            "k" => dims[2] = Some(val),
            _ => {}
        }
    }
    match dims {
        [Some(t), Some(l), Some(k)] if k + 1 < t => Ok([t, l, k]),
        _ => Err(Error::Format(format!("bad header {header:?}"))),
    }
}
