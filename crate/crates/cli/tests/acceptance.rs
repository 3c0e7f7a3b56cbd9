//! Acceptance criteria. Each test writes one `criterion N PASS|FAIL` line to
//! stderr (uncaptured) and then asserts.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use fhs::sampler::dist::ln_inverse_gamma;
use fhs::sampler::{gaussian_log_kernel, ChainState, Posterior};
use fhs::verify::geweke::{geweke_joint_test, Fault, GewekeConfig};
use fhs::verify::marginal::{marginal_prior_density, tail_slope};
use fhs::verify::shrinkage::{self, brute_force, closed_form, ShrinkageBlockSpec};
use fhs::{rng, BSplineSystem, Domain, FunctionalDataset, LocalPrior, PriorConfig, Record};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const SLICE_TOL: f64 = 1e-8;
const SLICE_PAIRS: usize = 100;
const GEWEKE_SAMPLES: usize = 20_000;
const GEWEKE_Z: f64 = 4.0;
const SLOPE_TOL: f64 = 0.1;
const BLOCK_TOL: f64 = 1e-10;
const LIMIT_TOL: f64 = 1e-4;
const MAD_MAX: f64 = 1.0;
const MC_MIN: f64 = 0.90;
const MEAN_MAD_BAND: (f64, f64) = (0.3, 0.9);
const STUDY_SEED: &str = "2024";
const STUDY_REPLICATES: &str = "5";

fn report(n: usize, passed: bool, detail: &str, started: Instant) {
    let line = format!(
        "criterion {n} {}: {detail} [{:.1}s]\n",
        if passed { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(passed, "criterion {n}: {detail}");
}

// ---------------------------------------------------------------- 1

fn dataset(n_times: usize, ragged: bool, seed: u64) -> FunctionalDataset<f64> {
    let mut r = rng::stream(seed, 1);
    let records = (0..n_times)
        .map(|t| {
            let n = if ragged { 8 + (3 * t) % 7 } else { 14 };
            let mut points: Vec<f64> = (0..n)
                .map(|i| if ragged { r.random::<f64>() * 10.0 } else { 10.0 * i as f64 / (n - 1) as f64 })
                .collect();
            points.sort_by(f64::total_cmp);
            points.dedup();
            let values = points.iter().map(|s| (0.6 * s).sin() * 2.0 + t as f64 * 0.2 + r.random::<f64>()).collect();
            Record { points, values }
        })
        .collect();
    FunctionalDataset::new(records, Domain::new(0.0, 10.0).unwrap(), None).unwrap()
}

fn random_state<R: Rng>(n_times: usize, l: usize, n_diffs: usize, r: &mut R) -> ChainState<f64> {
    let mut pos = || 0.05 + 3.0 * r.random::<f64>();
    let lambda2 = (0..n_diffs).map(|_| pos()).collect();
    let nu = (0..n_diffs).map(|_| pos()).collect();
    let (tau2, xi, sigma2) = (pos(), pos(), pos());
    let coeffs = DMatrix::from_fn(n_times, l, |_, _| 6.0 * (r.random::<f64>() - 0.5));
    ChainState { coeffs, lambda2, nu, tau2, xi, sigma2 }
}

#[test]
fn criterion_1_slice_consistency() {
    let started = Instant::now();
    let (n_times, l) = (7, 5);
    let mut worst = 0.0f64;
    let mut checked = BTreeMap::<&str, usize>::new();
    for order in [0, 1] {
        for ragged in [false, true] {
            let ds = dataset(n_times, ragged, 10 * order as u64 + ragged as u64);
            let designs = BSplineSystem::new(ds.domain(), l).unwrap().designs(&ds).unwrap();
            let cfg = PriorConfig { order, a_sigma: 2.0, b_sigma: 0.7, ..Default::default() };
            let post = Posterior::new(&ds, &designs, cfg).unwrap();
            assert_eq!(post.is_homogeneous(), !ragged);
            let mut r = rng::stream(99, (order * 2 + ragged as usize) as u64);
            let mut check = |name: &'static str, lj: f64, cond: f64| {
                worst = worst.max((lj - cond).abs() / lj.abs().max(1.0));
                *checked.entry(name).or_default() += 1;
            };
            for _ in 0..SLICE_PAIRS {
                let s0 = random_state(n_times, l, post.n_diffs(), &mut r);
                let lj0 = post.log_joint(&s0).unwrap();

                let mut s1 = s0.clone();
                s1.sigma2 = 0.05 + 3.0 * r.random::<f64>();
                let (a, b) = post.sigma2_conditional(&s0);
                check("sigma2", post.log_joint(&s1).unwrap() - lj0, ln_inverse_gamma(s1.sigma2, a, b) - ln_inverse_gamma(s0.sigma2, a, b));

                let mut s1 = s0.clone();
                s1.tau2 = 0.05 + 3.0 * r.random::<f64>();
                let (a, b) = post.tau2_conditional(&s0);
                check("tau2", post.log_joint(&s1).unwrap() - lj0, ln_inverse_gamma(s1.tau2, a, b) - ln_inverse_gamma(s0.tau2, a, b));

                let j = r.random_range(0..post.n_diffs());
                let mut s1 = s0.clone();
                s1.lambda2[j] = 0.05 + 3.0 * r.random::<f64>();
                let q = post.quad_forms(&s0)[j];
                let (a, b) = post.lambda2_conditional(&s0, j, q);
                check(
                    "lambda2",
                    post.log_joint(&s1).unwrap() - lj0,
                    ln_inverse_gamma(s1.lambda2[j], a, b) - ln_inverse_gamma(s0.lambda2[j], a, b),
                );

                let t = r.random_range(0..n_times);
                let (mean, precision) = post.coeff_conditional(&s0, t).unwrap();
                let new = DVector::from_fn(l, |_, _| 6.0 * (r.random::<f64>() - 0.5));
                let mut s1 = s0.clone();
                s1.coeffs.set_row(t, &new.transpose());
                let old = s0.coeffs.row(t).transpose();
                check(
                    "b_t",
                    post.log_joint(&s1).unwrap() - lj0,
                    gaussian_log_kernel(&new, &mean, &precision) - gaussian_log_kernel(&old, &mean, &precision),
                );
            }
        }
    }
    let counts: Vec<String> = checked.iter().map(|(k, v)| format!("{k}:{v}")).collect();
    let ok = worst < SLICE_TOL && started.elapsed().as_secs() < 60;
    report(1, ok, &format!("worst relative gap {worst:.2e} over {} (k in 0,1; homogeneous and not)", counts.join(" ")), started);
}

// ---------------------------------------------------------------- 2

#[test]
fn criterion_2_joint_distribution_test() {
    let started = Instant::now();
    let base = GewekeConfig { n_samples: GEWEKE_SAMPLES, seed: 0, ..Default::default() };
    assert_eq!((base.n_times, base.n_points, base.n_basis, base.order), (4, 6, 4, 0));
    let hc = geweke_joint_test(&base).unwrap().max_abs_z();
    let ex = geweke_joint_test(&GewekeConfig { local_prior: LocalPrior::Exponential, ..base.clone() })
        .unwrap()
        .max_abs_z();
    let bad = geweke_joint_test(&GewekeConfig { fault: Fault::Sigma2ShapeOffset(1.0), ..base }).unwrap().max_abs_z();
    let ok = hc < GEWEKE_Z && ex < GEWEKE_Z && bad >= GEWEKE_Z && started.elapsed().as_secs() < 300;
    report(2, ok, &format!("max |z| half-Cauchy {hc:.2}, exponential {ex:.2}, corrupted sigma2 shape {bad:.2}"), started);
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_3_marginal_prior_density() {
    let started = Instant::now();
    let d: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|z| marginal_prior_density(*z, 2, 1.0, 1.0).unwrap()).collect();
    let rising = d[0] < d[1] && d[1] < d[2];
    let slopes: Vec<(usize, f64)> = [1, 2, 5].iter().map(|&l| (l, tail_slope(l, 1.0, 1.0, 1e2, 1e4, 41).unwrap())).collect();
    let tails = slopes.iter().all(|(l, s)| (s + (l + 1) as f64).abs() < SLOPE_TOL);
    let detail = format!(
        "density {:.4e} < {:.4e} < {:.4e}; slopes {}",
        d[0],
        d[1],
        d[2],
        slopes.iter().map(|(l, s)| format!("L={l}:{s:.4}")).collect::<Vec<_>>().join(" ")
    );
    report(3, rising && tails && started.elapsed().as_secs() < 60, &detail, started);
}

// ---------------------------------------------------------------- 4

#[test]
fn criterion_4_shrinkage_block() {
    let started = Instant::now();
    let grid = shrinkage::default_grid();
    let mut worst = 0.0f64;
    for spec in &grid {
        let block = brute_force(spec).unwrap();
        let c = closed_form(spec).unwrap();
        for i in 0..spec.n {
            for j in 0..spec.n {
                worst = worst.max((block[(i, j)] - if i == j { c } else { 0.0 }).abs());
            }
        }
    }
    let spec = ShrinkageBlockSpec { n_times: 5, n: 1, tau: 1.0, sigma: 1.0, lambda1: 1e6, lambda_rest: 1.0 };
    let c = closed_form(&spec).unwrap();
    let ok = worst < BLOCK_TOL && (c - 1.0).abs() < LIMIT_TOL && started.elapsed().as_secs() < 60;
    report(4, ok, &format!("{} settings, max gap {worst:.2e}; |c - 1| = {:.2e} at lambda_1 = 1e6", grid.len(), (c - 1.0).abs()), started);
}

// ---------------------------------------------------------- 5 to 8

fn fhs(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_fhs")).args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read_kv(path: &Path) -> BTreeMap<String, f64> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.parse().unwrap()))
        .collect()
}

struct Study {
    dir: PathBuf,
    /// Per-replicate FHS metrics.
    fhs: Vec<BTreeMap<String, f64>>,
    baseline: Vec<BTreeMap<String, f64>>,
    secs: f64,
}

impl Study {
    fn mean(&self, key: &str) -> f64 {
        self.fhs.iter().map(|m| m[key]).sum::<f64>() / self.fhs.len() as f64
    }
}

fn scratch() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| tempfile::tempdir().unwrap()).path()
}

fn run_study(name: &str, extra: &[&str], replicates: &str) -> Study {
    let started = Instant::now();
    let dir = scratch().join(name);
    let mut args = vec!["replicate", "--seed", STUDY_SEED, "--replicates", replicates, "--out", dir.to_str().unwrap()];
    args.extend(extra);
    fhs(&args);
    let n: usize = replicates.parse().unwrap();
    let fhs = (0..n).map(|i| read_kv(&dir.join(format!("rep_{i:03}/metrics.txt")))).collect();
    let baseline = (0..n).map(|i| read_kv(&dir.join(format!("rep_{i:03}/baseline.txt")))).collect();
    Study { dir, fhs, baseline, secs: started.elapsed().as_secs_f64() }
}

fn scenario1() -> &'static Study {
    static S: OnceLock<Study> = OnceLock::new();
    S.get_or_init(|| run_study("s1_h120", &["--scenario", "1"], STUDY_REPLICATES))
}

fn scenario1_h60() -> &'static Study {
    static S: OnceLock<Study> = OnceLock::new();
    S.get_or_init(|| run_study("s1_h60", &["--scenario", "1", "--n-points", "60"], STUDY_REPLICATES))
}

fn scenario1_omit() -> &'static Study {
    static S: OnceLock<Study> = OnceLock::new();
    S.get_or_init(|| run_study("s1_omit10", &["--scenario", "1", "--omit-rate", "0.1"], STUDY_REPLICATES))
}

#[test]
fn criterion_5_scenario_1_reproduction() {
    let started = Instant::now();
    let s = scenario1();
    let first = &s.fhs[0];
    let l = read_kv(&s.dir.join("rep_000/best.txt"))["L"];
    let single = first["mad"] <= MAD_MAX && first["mc"] >= MC_MIN && s.secs / 5.0 < 15.0 * 60.0;
    let mean_mad = s.mean("mad");
    let band = (MEAN_MAD_BAND.0..=MEAN_MAD_BAND.1).contains(&mean_mad);
    let mads: Vec<String> = s.fhs.iter().map(|m| format!("{:.3}", m["mad"])).collect();
    let detail = format!(
        "replicate 1: L={l} MAD {:.3} MC {:.3}; 5 replicates: mean MAD {mean_mad:.3} (each {}) mean MC {:.3}, band [{}, {}]",
        first["mad"],
        first["mc"],
        mads.join(" "),
        s.mean("mc"),
        MEAN_MAD_BAND.0,
        MEAN_MAD_BAND.1
    );
    report(5, single && band, &detail, started);
}

#[test]
fn criterion_6_scenario_3_beats_least_squares() {
    let started = Instant::now();
    let s = run_study("s3", &["--scenario", "3"], "1");
    let (f, b) = (s.fhs[0]["mad"], s.baseline[0]["mad"]);
    report(6, f < b && s.secs < 15.0 * 60.0, &format!("FHS MAD {f:.3} vs per-t least squares MAD {b:.3} at the selected L"), started);
}

#[test]
fn criterion_7_fewer_points_widen_intervals() {
    let started = Instant::now();
    let (full, half) = (scenario1(), scenario1_h60());
    let (w120, w60) = (full.mean("mciw"), half.mean("mciw"));
    let (c120, c60) = (full.mean("mc"), half.mean("mc"));
    let ok = w60 > w120 && c120 >= MC_MIN && c60 >= MC_MIN;
    report(7, ok, &format!("mean MCIW H=60 {w60:.3} vs H=120 {w120:.3}; mean MC {c60:.3} / {c120:.3}"), started);
}

#[test]
fn criterion_8_omission_widens_intervals() {
    let started = Instant::now();
    let (full, thin) = (scenario1(), scenario1_omit());
    let (w0, w10) = (full.mean("mciw"), thin.mean("mciw"));
    let complete = thin.fhs.len() == 5
        && fs::read_to_string(thin.dir.join("table.txt")).unwrap().contains("5 of 5 replicates succeeded");
    let ok = w10 > w0 && complete;
    report(8, ok, &format!("mean MCIW 10% omitted {w10:.3} vs complete {w0:.3}; all fits completed: {complete}"), started);
}

// ---------------------------------------------------------------- 9

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

/// Everything equal except `wall_clock_secs` in manifests.
fn same_outputs(a: &Path, b: &Path) -> Result<usize, String> {
    let (fa, fb) = (files_under(a), files_under(b));
    let rel = |root: &Path, v: &[PathBuf]| v.iter().map(|p| p.strip_prefix(root).unwrap().to_path_buf()).collect::<Vec<_>>();
    if rel(a, &fa) != rel(b, &fb) {
        return Err(format!("file sets differ under {}", a.display()));
    }
    for (x, y) in fa.iter().zip(&fb) {
        if x.file_name().unwrap() == "manifest.json" {
            let load = |p: &Path| {
                let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
                v["wall_clock_secs"] = serde_json::Value::Null;
                v
            };
            if load(x) != load(y) {
                return Err(format!("{} differs", x.display()));
            }
        } else if fs::read(x).unwrap() != fs::read(y).unwrap() {
            return Err(format!("{} differs", x.display()));
        }
    }
    Ok(fa.len())
}

#[test]
fn criterion_9_rerun_from_manifest() {
    let started = Instant::now();
    let root = scratch().join("determinism");
    let d = |name: &str| root.join(name).to_str().unwrap().to_string();
    let sim_data = format!("{}/data.csv", d("simulate"));
    let sim_truth = format!("{}/truth.csv", d("simulate"));
    let fit_summary = format!("{}/summary.csv", d("fit"));
    let short = ["--burn", "40", "--draws", "30"];
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("simulate", vec!["simulate", "--scenario", "3", "--n-times", "10", "--n-points", "50", "--omit-rate", "0.1", "--seed", "3"]
            .into_iter().map(String::from).collect()),
        ("fit", ["fit", "--data", &sim_data, "-L", "9", "-k", "1", "--seed", "4"].into_iter().chain(short).map(String::from).collect()),
        ("select", ["select", "--data", &sim_data, "--l-candidates", "5,9", "--k-candidates", "0,1", "--prior", "laplace"]
            .into_iter().chain(short).map(String::from).collect()),
        ("metrics", ["metrics", "--summary", &fit_summary, "--truth", &sim_truth].into_iter().map(String::from).collect()),
        ("replicate", ["replicate", "--scenario", "2", "--n-times", "8", "--n-points", "40", "--replicates", "2", "--l-candidates", "7,9"]
            .into_iter().chain(short).map(String::from).collect()),
        ("verify", ["verify", "--geweke-samples", "2000", "--seed", "1"].into_iter().map(String::from).collect()),
    ];
    let mut checked = Vec::new();
    let mut failure = None;
    for (name, args) in &runs {
        let out = d(name);
        let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
        a.extend(["--out", &out]);
        fhs(&a);
        let again = d(&format!("{name}_rerun"));
        fhs(&["rerun", &format!("{out}/manifest.json"), "--out", &again]);
        match same_outputs(Path::new(&out), Path::new(&again)) {
            Ok(n) => checked.push(format!("{name}:{n} files")),
            Err(e) => failure = Some(e),
        }
    }
    let detail = match &failure {
        None => format!("bitwise identical reruns for {}", checked.join(" ")),
        Some(e) => e.clone(),
    };
    report(9, failure.is_none(), &detail, started);
}
