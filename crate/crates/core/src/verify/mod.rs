//! Numeric checks of the shrinkage properties and of the sampler.

pub mod geweke;
pub mod marginal;
pub mod shrinkage;

use std::fmt::Write as _;

pub use geweke::{geweke_joint_test, Fault, GewekeConfig, GewekeResult};
pub use marginal::{marginal_prior_density, tail_slope};
pub use shrinkage::{brute_force, closed_form, alt_closed_form, ShrinkageBlockSpec};

use crate::error::Result;

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    /// Informational lines that carry no pass/fail verdict.
    pub notes: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        for n in &self.notes {
            let _ = writeln!(out, "NOTE {n}");
        }
        let _ = writeln!(
            out,
            "{} of {} checks passed",
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len()
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub geweke_samples: usize,
    /// Skip the sampler test, which dominates the run time.
    pub skip_geweke: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0, geweke_samples: 20_000, skip_geweke: false }
    }
}

pub const SLOPE_TOLERANCE: f64 = 0.1;
pub const BLOCK_TOLERANCE: f64 = 1e-10;
pub const GEWEKE_Z_LIMIT: f64 = 4.0;

/// Runs every check.
pub fn run_all(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();

    let d: Vec<f64> = [0.001, 0.01, 0.1]
        .iter()
        .map(|z| marginal_prior_density(*z, 2, 1.0, 1.0))
        .collect::<Result<_>>()?;
    report.push(
        "marginal density diverges at the origin",
        d[0] > d[1] && d[1] > d[2],
        format!("pi(0.001)={:.6e} pi(0.01)={:.6e} pi(0.1)={:.6e}", d[0], d[1], d[2]),
    );

    let mut decreasing = true;
    let mut prev = f64::INFINITY;
    for i in 0..=60 {
        let z = 10f64.powf(-3.0 + 7.0 * i as f64 / 60.0);
        let v = marginal_prior_density(z, 2, 1.0, 1.0)?;
        decreasing &= v < prev;
        prev = v;
    }
    report.push("marginal density is decreasing on [1e-3, 1e4]", decreasing, "61 log-spaced points, L=2");

    for l in [1, 2, 5] {
        let slope = tail_slope(l, 1.0, 1.0, 1e2, 1e4, 41)?;
        let target = -((l + 1) as f64);
        report.push(
            format!("tail exponent L={l}"),
            (slope - target).abs() < SLOPE_TOLERANCE,
            format!("slope={slope:.6} target={target}"),
        );
    }

    let mut worst = 0.0f64;
    let mut worst_offdiag = 0.0f64;
    let mut worst_alt = 0.0f64;
    let grid = shrinkage::default_grid();
    for spec in &grid {
        let block = brute_force(spec)?;
        let c = closed_form(spec)?;
        for i in 0..spec.n {
            for j in 0..spec.n {
                if i == j {
                    worst = worst.max((block[(i, j)] - c).abs());
                } else {
                    worst_offdiag = worst_offdiag.max(block[(i, j)].abs());
                }
            }
        }
        worst_alt = worst_alt.max((alt_closed_form(spec)? - block[(0, 0)]).abs());
    }
    report.push(
        "shrinkage block closed form vs dense inverse",
        worst < BLOCK_TOLERANCE,
        format!("{} settings, max |c - block| = {worst:.3e}", grid.len()),
    );
    report.push(
        "shrinkage block is a multiple of the identity",
        worst_offdiag < 1e-12,
        format!("max off-diagonal {worst_offdiag:.3e}"),
    );
    let big = closed_form(&ShrinkageBlockSpec { n_times: 5, n: 1, tau: 1.0, sigma: 1.0, lambda1: 1e6, lambda_rest: 1.0 })?;
    report.push("large local scale gives c -> 1", (big - 1.0).abs() < 1e-4, format!("c(1e6) = {big:.12}"));
    report.notes.push(format!(
        "quoted block-inverse expression differs from the dense inverse by up to {worst_alt:.3e}"
    ));

    if !opts.skip_geweke {
        let cfg = GewekeConfig { seed: opts.seed, n_samples: opts.geweke_samples, ..Default::default() };
        let ok = geweke_joint_test(&cfg)?;
        let zs: Vec<String> = ok.stats.iter().map(|s| format!("{}={:.3}", s.name, s.z)).collect();
        report.push(
            "joint distribution test",
            ok.max_abs_z() < GEWEKE_Z_LIMIT,
            format!("max |z| = {:.3} ({})", ok.max_abs_z(), zs.join(" ")),
        );
        let bad = geweke_joint_test(&GewekeConfig { fault: Fault::Sigma2ShapeOffset(1.0), ..cfg })?;
        report.push(
            "joint distribution test detects a corrupted sigma2 shape",
            bad.max_abs_z() >= GEWEKE_Z_LIMIT,
            format!("max |z| = {:.3}", bad.max_abs_z()),
        );
    }
    Ok(report)
}
