//! Sequences of discretely observed curves.
//!
//! The canonical on-disk form is a long-format triplet file with header
//! `t,s,y`: one observation per row, `t` a 1-based time index, `s` the
//! sampling location and `y` the observed value. Comma or tab separated.
//! Irregular time spacing is carried by an optional sidecar `t,h` file
//! giving the gap `h_t` between time `t` and `t + 1`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Closed interval `[lo, hi]` holding every sampling point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<F> {
    pub lo: F,
    pub hi: F,
}

impl<F: Scalar> Domain<F> {
    pub fn new(lo: F, hi: F) -> Result<Self> {
        if !(lo.finite() && hi.finite()) || lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "degenerate domain [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, s: F) -> bool {
        s >= self.lo && s <= self.hi
    }

    pub fn width(&self) -> F {
        self.hi - self.lo
    }
}

/// One curve: strictly increasing points and the values observed there.
#[derive(Debug, Clone, PartialEq)]
pub struct Record<F> {
    pub points: Vec<F>,
    pub values: Vec<F>,
}

impl<F: Scalar> Record<F> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset<F> {
    records: Vec<Record<F>>,
    domain: Domain<F>,
    gaps: Option<Vec<F>>,
}

impl<F: Scalar> FunctionalDataset<F> {
    pub fn new(records: Vec<Record<F>>, domain: Domain<F>, gaps: Option<Vec<F>>) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::Dataset(format!(
                "need at least 2 time indices, got {}",
                records.len()
            )));
        }
        for (t, rec) in records.iter().enumerate() {
            if rec.points.len() != rec.values.len() {
                return Err(Error::Dataset(format!(
                    "record {} has {} points but {} values",
                    t + 1,
                    rec.points.len(),
                    rec.values.len()
                )));
            }
            if rec.is_empty() {
                return Err(Error::Dataset(format!("record {} is empty", t + 1)));
            }
            for w in rec.points.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::Dataset(format!(
                        "points of record {} are not strictly increasing",
                        t + 1
                    )));
                }
            }
            if let Some(s) = rec.points.iter().find(|s| !domain.contains(**s)) {
                return Err(Error::Dataset(format!(
                    "point {s} of record {} lies outside [{}, {}]",
                    t + 1,
                    domain.lo,
                    domain.hi
                )));
            }
            if rec.values.iter().any(|y| !y.finite()) {
                return Err(Error::Dataset(format!("record {} has a non-finite value", t + 1)));
            }
        }
        if let Some(h) = &gaps {
            check_gaps(h, records.len())?;
        }
        Ok(Self { records, domain, gaps })
    }

    /// Number of time indices `T`.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record<F>] {
        &self.records
    }

    pub fn record(&self, t: usize) -> &Record<F> {
        &self.records[t]
    }

    pub fn domain(&self) -> Domain<F> {
        self.domain
    }

    pub fn gaps(&self) -> Option<&[F]> {
        self.gaps.as_deref()
    }

    /// Gap between time `t` and `t + 1` (0-based), 1 on a regular grid.
    pub fn gap(&self, t: usize) -> F {
        self.gaps.as_ref().map_or_else(F::one, |h| h[t])
    }

    pub fn with_gaps(mut self, gaps: Vec<F>) -> Result<Self> {
        check_gaps(&gaps, self.len())?;
        self.gaps = Some(gaps);
        Ok(self)
    }

    pub fn total_points(&self) -> usize {
        self.records.iter().map(Record::len).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.records.iter().map(Record::len).collect()
    }

    /// True when every record is observed at the same locations.
    pub fn is_homogeneous(&self) -> bool {
        let first = &self.records[0].points;
        self.records.iter().all(|r| &r.points == first)
    }

    /// Read a long-format `t,s,y` file.
    pub fn load(path: impl AsRef<Path>, domain: Domain<F>) -> Result<Self> {
        let file = fs::File::open(path)?;
        Self::read(BufReader::new(file), domain)
    }

    pub fn read(reader: impl BufRead, domain: Domain<F>) -> Result<Self> {
        let mut by_t: BTreeMap<usize, Vec<(F, F)>> = BTreeMap::new();
        for (line, row) in rows(reader, 3)? {
            let t = parse_index(&row[0], line)?;
            let s = parse_real::<F>(&row[1], line)?;
            let y = parse_real::<F>(&row[2], line)?;
            by_t.entry(t).or_default().push((s, y));
        }
        let t_max = by_t.keys().next_back().copied().unwrap_or(0);
        if t_max < 2 {
            return Err(Error::Dataset(format!("need at least 2 time indices, got {t_max}")));
        }
        let mut records = Vec::with_capacity(t_max);
        for t in 1..=t_max {
            let mut obs = by_t
                .remove(&t)
                .ok_or_else(|| Error::Dataset(format!("missing time index t={t}")))?;
            obs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite points"));
            if let Some(w) = obs.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::Dataset(format!("duplicate observation (t={t}, s={})", w[0].0)));
            }
            records.push(Record {
                points: obs.iter().map(|o| o.0).collect(),
                values: obs.iter().map(|o| o.1).collect(),
            });
        }
        Self::new(records, domain, None)
    }

    /// Write the long-format `t,s,y` representation.
    pub fn write(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "t,s,y")?;
        for (t, rec) in self.records.iter().enumerate() {
            for (s, y) in rec.points.iter().zip(&rec.values) {
                writeln!(out, "{},{},{}", t + 1, s.as_f64(), y.as_f64())?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    /// Read a sidecar `t,h` gap file and attach it.
    pub fn load_gaps(self, path: impl AsRef<Path>) -> Result<Self> {
        let file = fs::File::open(path)?;
        let t_len = self.len();
        let mut gaps = vec![None; t_len - 1];
        for (line, row) in rows(BufReader::new(file), 2)? {
            let t = parse_index(&row[0], line)?;
            if t > t_len - 1 {
                return Err(Error::Parse { line, msg: format!("gap index {t} exceeds T-1") });
            }
            gaps[t - 1] = Some(parse_real::<F>(&row[1], line)?);
        }
        let gaps = gaps
            .into_iter()
            .enumerate()
            .map(|(i, h)| h.ok_or_else(|| Error::Dataset(format!("missing gap for t={}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        self.with_gaps(gaps)
    }

    /// Remove `round(rate * total)` observations chosen uniformly without
    /// replacement from the pooled set. Surviving points keep their order.
    pub fn omit_at_random<R: Rng + ?Sized>(&self, rate: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!("omission rate {rate} not in [0, 1)")));
        }
        let total = self.total_points();
        let n_omit = (rate * total as f64).round() as usize;
        if n_omit == 0 {
            return Ok(self.clone());
        }
        let mut keep = vec![true; total];
        for i in index::sample(rng, total, n_omit) {
            keep[i] = false;
        }
        let mut offset = 0;
        let mut records = Vec::with_capacity(self.len());
        for (t, rec) in self.records.iter().enumerate() {
            let mask = &keep[offset..offset + rec.len()];
            offset += rec.len();
            let kept: Vec<usize> = (0..rec.len()).filter(|&i| mask[i]).collect();
            if kept.is_empty() {
                return Err(Error::Dataset(format!(
                    "omission at rate {rate} empties record {}",
                    t + 1
                )));
            }
            records.push(Record {
                points: kept.iter().map(|&i| rec.points[i]).collect(),
                values: kept.iter().map(|&i| rec.values[i]).collect(),
            });
        }
        Self::new(records, self.domain, self.gaps.clone())
    }
}

fn check_gaps<F: Scalar>(gaps: &[F], t_len: usize) -> Result<()> {
    if gaps.len() != t_len - 1 {
        return Err(Error::Dataset(format!(
            "expected {} gaps, got {}",
            t_len - 1,
            gaps.len()
        )));
    }
    if gaps.iter().any(|h| !(h.finite() && *h > F::zero())) {
        return Err(Error::Dataset("gaps must be positive and finite".into()));
    }
    Ok(())
}

/// Data rows of a delimited text file, skipping the header line, blank
/// lines and `#` comments. Yields `(1-based line number, fields)`.
fn rows(reader: impl BufRead, width: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    let mut seen_header = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = trimmed
            .split([',', '\t'])
            .map(|f| f.trim().to_string())
            .collect();
        if !seen_header {
            seen_header = true;
            if fields.first().is_some_and(|f| f.eq_ignore_ascii_case("t")) {
                continue;
            }
        }
        if fields.len() != width {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        out.push((i + 1, fields));
    }
    Ok(out)
}

fn parse_index(field: &str, line: usize) -> Result<usize> {
    match field.parse::<usize>() {
        Ok(t) if t >= 1 => Ok(t),
        _ => Err(Error::Parse { line, msg: format!("bad time index {field:?}") }),
    }
}

fn parse_real<F: Scalar>(field: &str, line: usize) -> Result<F> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(F::lit(v)),
        _ => Err(Error::Parse { line, msg: format!("bad real {field:?}") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn unit() -> Domain<f64> {
        Domain::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn groups_rows_by_time() {
        let ds = FunctionalDataset::read("t,s,y\n1,0.0,1.0\n1,1.0,2.0\n2,0.5,3.0\n".as_bytes(), unit())
            .unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.counts(), vec![2, 1]);
    }

    #[test]
    fn sorts_points_within_time() {
        let ds =
            FunctionalDataset::read("t,s,y\n1,0.9,1\n1,0.1,2\n2,0.5,3\n".as_bytes(), unit()).unwrap();
        assert_eq!(ds.record(0).points, vec![0.1, 0.9]);
        assert_eq!(ds.record(0).values, vec![2.0, 1.0]);
    }

    #[test]
    fn rejects_missing_time_index() {
        let err = FunctionalDataset::read("t,s,y\n1,0.0,1.0\n3,0.0,1.0\n".as_bytes(), unit());
        assert!(matches!(err, Err(Error::Dataset(m)) if m.contains("t=2")));
    }

    #[test]
    fn rejects_empty_file() {
        assert!(FunctionalDataset::<f64>::read("".as_bytes(), unit()).is_err());
        assert!(FunctionalDataset::<f64>::read("t,s,y\n".as_bytes(), unit()).is_err());
    }

    #[test]
    fn rejects_duplicates_outside_points_and_garbage() {
        assert!(FunctionalDataset::<f64>::read("t,s,y\n1,0.5,1\n1,0.5,2\n2,0,0\n".as_bytes(), unit()).is_err());
        assert!(FunctionalDataset::<f64>::read("t,s,y\n1,1.5,1\n2,0,0\n".as_bytes(), unit()).is_err());
        assert!(matches!(
            FunctionalDataset::<f64>::read("t,s,y\n1,abc,1\n2,0,0\n".as_bytes(), unit()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn omission_zero_rate_is_identity() {
        let ds = grid_dataset(5, 10);
        let out = ds.omit_at_random(0.0, &mut rng::stream(1, 0)).unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn omission_count_matches_rounding() {
        let ds = grid_dataset(50, 120);
        let out = ds.omit_at_random(0.10, &mut rng::stream(3, 0)).unwrap();
        assert_eq!(out.total_points(), 5400);
    }

    #[test]
    fn omission_that_empties_a_record_fails() {
        let ds = grid_dataset(2, 1);
        assert!(ds.omit_at_random(0.999, &mut rng::stream(0, 0)).is_err());
        assert!(ds.omit_at_random(1.0, &mut rng::stream(0, 0)).is_err());
    }

    #[test]
    fn gaps_are_validated() {
        let ds = grid_dataset(3, 2);
        assert!(ds.clone().with_gaps(vec![1.0]).is_err());
        assert!(ds.clone().with_gaps(vec![1.0, 0.0]).is_err());
        let ds = ds.with_gaps(vec![1.0, 2.5]).unwrap();
        assert_eq!(ds.gap(1), 2.5);
    }

    pub(crate) fn grid_dataset(t_len: usize, n: usize) -> FunctionalDataset<f64> {
        let records = (0..t_len)
            .map(|t| Record {
                points: (0..n).map(|i| i as f64 / n.max(1) as f64).collect(),
                values: (0..n).map(|i| (t * n + i) as f64).collect(),
            })
            .collect();
        FunctionalDataset::new(records, unit(), None).unwrap()
    }
}
