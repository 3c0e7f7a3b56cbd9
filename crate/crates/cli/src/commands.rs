use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use fhs::metrics::{self, MetricsReport, PosteriorSummary};
use fhs::rng;
use fhs::select::{self, write_report};
use fhs::simulate::{make_scenario, ScenarioSpec, TrendSurface};
use fhs::verify::{self, VerifyOptions};
use fhs::{BSplineSystem, CoeffScheme, Domain, DrawStore, FunctionalDataset, Init, LocalPrior, McmcConfig, PriorConfig};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::manifest::{strip_out, RunManifest};
use crate::{
    Cli, Command, DataArgs, FitArgs, McmcArgs, MetricsArgs, ModelArgs, PriorKind, ReplicateArgs, RerunArgs,
    ScenarioArgs, SchemeKind, SelectArgs, SimulateArgs, VerifyArgs,
};

type Res<T> = Result<T, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Run `cli`; `Ok(false)` means the command ran but reported failure.
pub fn dispatch(cli: Cli, args: &[String]) -> Res<bool> {
    if let Command::Rerun(r) = &cli.command {
        return rerun(r, cli.out.as_deref(), cli.threads);
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().map_err(err)?;
    }
    let out = cli.out.clone().ok_or("--out DIR is required")?;
    fs::create_dir_all(&out).map_err(|e| format!("creating {}: {e}", out.display()))?;
    let start = Instant::now();
    let seed = cli.seed;
    let (name, ok, mut artifacts, extra) = match &cli.command {
        Command::Simulate(a) => ("simulate", true, simulate(a, seed, &out)?, json!({})),
        Command::Fit(a) => {
            let (files, domain) = fit(a, seed, &out)?;
            ("fit", true, files, json!({ "domain": domain }))
        }
        Command::Select(a) => {
            let (files, domain) = select_cmd(a, seed, &out)?;
            ("select", true, files, json!({ "domain": domain }))
        }
        Command::Metrics(a) => ("metrics", true, metrics_cmd(a, &out)?, json!({})),
        Command::Replicate(a) => {
            let (ok, files) = replicate(a, seed, &out)?;
            ("replicate", ok, files, json!({}))
        }
        Command::Verify(a) => {
            let (ok, files) = verify_cmd(a, seed, &out)?;
            ("verify", ok, files, json!({}))
        }
        Command::Rerun(_) => unreachable!(),
    };
    artifacts.sort();
    let mut config = serde_json::to_value(&cli.command).map_err(err)?;
    if let Some(obj) = config.as_object_mut() {
        obj.insert("resolved".into(), extra);
    }
    let manifest = RunManifest {
        command: name.into(),
        args: strip_out(args),
        cwd: std::env::current_dir().map_err(err)?,
        config,
        seed,
        artifacts,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    manifest.save(&out)?;
    Ok(ok)
}

fn rerun(r: &RerunArgs, out: Option<&Path>, threads: Option<usize>) -> Res<bool> {
    let m = RunManifest::load(&r.manifest)?;
    let out = out.ok_or("--out DIR is required")?;
    fs::create_dir_all(out).map_err(err)?;
    let out = fs::canonicalize(out).map_err(err)?;
    std::env::set_current_dir(&m.cwd).map_err(|e| format!("entering {}: {e}", m.cwd.display()))?;
    let mut argv = vec!["fhs".to_string()];
    argv.extend(m.args.iter().cloned());
    if let (Some(n), false) = (threads, m.args.iter().any(|a| a.starts_with("--threads"))) {
        argv.extend(["--threads".into(), n.to_string()]);
    }
    argv.extend(["--out".into(), out.display().to_string()]);
    let cli = Cli::try_parse_from(&argv).map_err(err)?;
    if matches!(cli.command, Command::Rerun(_)) {
        return Err("a manifest cannot record a rerun".into());
    }
    dispatch(cli, &argv[1..])
}

fn spec_of(a: &ScenarioArgs, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        scenario: a.scenario,
        n_times: a.n_times,
        n_points: a.n_points,
        domain_size: a.domain_size,
        noise_sd: a.noise_sd,
        omit_rate: a.omit_rate,
        seed,
        ..ScenarioSpec::default()
    }
}

fn simulate(a: &SimulateArgs, seed: u64, out: &Path) -> Res<Vec<String>> {
    let spec = spec_of(&a.scenario, seed);
    let (truth, data) = make_scenario::<f64>(&spec).map_err(err)?;
    data.save(out.join("data.csv")).map_err(err)?;
    truth.save(out.join("truth.csv")).map_err(err)?;
    Ok(vec!["data.csv".into(), "truth.csv".into()])
}

/// Read the data, inferring the domain from the points when not given.
fn load_data(a: &DataArgs) -> Res<FunctionalDataset<f64>> {
    let wide = Domain::new(-1e300, 1e300).map_err(err)?;
    let raw = FunctionalDataset::load(&a.data, wide).map_err(|e| format!("{}: {e}", a.data.display()))?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in raw.records() {
        lo = lo.min(r.points[0]);
        hi = hi.max(*r.points.last().expect("nonempty record"));
    }
    let lo = a.domain_lo.unwrap_or(lo);
    let hi = a.domain_hi.unwrap_or(hi);
    let domain = Domain::new(lo, hi).map_err(err)?;
    let ds = FunctionalDataset::new(raw.records().to_vec(), domain, None).map_err(err)?;
    match &a.gaps {
        Some(p) => ds.load_gaps(p).map_err(err),
        None => Ok(ds),
    }
}

fn prior_of(m: &ModelArgs, order: usize, use_gaps: bool) -> PriorConfig<f64> {
    PriorConfig {
        order,
        a_sigma: m.a_sigma,
        b_sigma: m.b_sigma,
        local_prior: match m.prior {
            PriorKind::Horseshoe => LocalPrior::HalfCauchy,
            PriorKind::Laplace => LocalPrior::Exponential,
        },
        use_gaps,
        gram_jitter: m.gram_jitter,
        level_prior_var: m.level_prior_var,
    }
}

fn mcmc_of(m: &McmcArgs, seed: u64) -> McmcConfig<f64> {
    McmcConfig {
        n_burn: m.burn,
        n_draws: m.draws,
        thin: m.thin,
        seed,
        chain_id: 0,
        init: Init::Default,
        scheme: match m.scheme {
            SchemeKind::Joint => CoeffScheme::Joint,
            SchemeKind::Sweep => CoeffScheme::Sweep,
        },
    }
}

/// Observed locations, or `n` equally spaced points over the domain.
fn summary_grid(ds: &FunctionalDataset<f64>, n: Option<usize>) -> Vec<f64> {
    let d = ds.domain();
    match n {
        Some(0) | Some(1) => vec![d.lo],
        Some(n) => (0..n)
            .map(|i| if i + 1 == n { d.hi } else { d.lo + d.width() * i as f64 / (n - 1) as f64 })
            .collect(),
        None => {
            let mut g: Vec<f64> = ds.records().iter().flat_map(|r| r.points.iter().copied()).collect();
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        }
    }
}

fn save_draws(store: &DrawStore<f64>, out: &Path, text: bool) -> Res<String> {
    let name = if text { "draws.txt" } else { "draws.fhs1" };
    let file = fs::File::create(out.join(name)).map_err(err)?;
    let w = BufWriter::new(file);
    if text { store.write_text(w) } else { store.write_binary(w) }.map_err(err)?;
    Ok(name.into())
}

fn write_kv(path: &Path, pairs: &[(&str, String)]) -> Res<()> {
    let text: String = pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    fs::write(path, text).map_err(err)
}

fn fit(a: &FitArgs, seed: u64, out: &Path) -> Res<(Vec<String>, [f64; 2])> {
    let ds = load_data(&a.data)?;
    let prior = prior_of(&a.model, a.order, a.data.gaps.is_some());
    let (ppl, store) = select::fit_candidate(&ds, a.n_basis, prior, &mcmc_of(&a.mcmc, seed)).map_err(err)?;
    let system = BSplineSystem::new(ds.domain(), a.n_basis).map_err(err)?;
    let summary = metrics::summarize(&store, &system, &summary_grid(&ds, a.mcmc.grid_points)).map_err(err)?;
    summary.save(out.join("summary.csv")).map_err(err)?;
    let draws = save_draws(&store, out, a.text_draws)?;
    write_kv(
        &out.join("fit.txt"),
        &[
            ("L", a.n_basis.to_string()),
            ("k", a.order.to_string()),
            ("ppl", ppl.ppl.to_string()),
            ("fit", ppl.fit.to_string()),
            ("variance", ppl.variance.to_string()),
            ("penalty", ppl.penalty.to_string()),
            ("draws", store.len().to_string()),
        ],
    )?;
    let d = ds.domain();
    Ok((vec!["summary.csv".into(), draws, "fit.txt".into()], [d.lo, d.hi]))
}

/// Selection on `ds`; writes the report, the summary of the winner and
/// `best.txt`. Returns the winning `L`, the summary and the draws.
#[allow(clippy::too_many_arguments)]
fn run_selection(
    ds: &FunctionalDataset<f64>,
    cand: &crate::CandidateArgs,
    model: &ModelArgs,
    mcmc: &McmcArgs,
    use_gaps: bool,
    seed: u64,
    grid: &[f64],
    out: &Path,
) -> Res<(usize, PosteriorSummary<f64>, DrawStore<f64>)> {
    let prior = prior_of(model, 0, use_gaps);
    let sel = select::select_model(ds, &cand.l_candidates, &cand.k_candidates, prior, &mcmc_of(mcmc, seed))
        .map_err(err)?;
    let table = fs::File::create(out.join("selection.txt")).map_err(err)?;
    let csv = fs::File::create(out.join("selection.csv")).map_err(err)?;
    write_report(&sel.outcomes, BufWriter::new(table), BufWriter::new(csv)).map_err(err)?;
    let best = sel.best();
    write_kv(
        &out.join("best.txt"),
        &[("L", sel.best_l.to_string()), ("k", sel.best_k.to_string()), ("ppl", best.ppl.to_string())],
    )?;
    let system = BSplineSystem::new(ds.domain(), sel.best_l).map_err(err)?;
    let summary = metrics::summarize(&sel.best_draws, &system, grid).map_err(err)?;
    summary.save(out.join("summary.csv")).map_err(err)?;
    Ok((sel.best_l, summary, sel.best_draws))
}

fn select_cmd(a: &SelectArgs, seed: u64, out: &Path) -> Res<(Vec<String>, [f64; 2])> {
    let ds = load_data(&a.data)?;
    let grid = summary_grid(&ds, a.mcmc.grid_points);
    let (_, _, draws) =
        run_selection(&ds, &a.candidates, &a.model, &a.mcmc, a.data.gaps.is_some(), seed, &grid, out)?;
    let name = save_draws(&draws, out, a.text_draws)?;
    let d = ds.domain();
    let files = ["selection.txt", "selection.csv", "best.txt", "summary.csv"];
    let mut files: Vec<String> = files.iter().map(|s| s.to_string()).collect();
    files.push(name);
    Ok((files, [d.lo, d.hi]))
}

fn metrics_cmd(a: &MetricsArgs, out: &Path) -> Res<Vec<String>> {
    let summary = PosteriorSummary::<f64>::load(&a.summary).map_err(|e| format!("{}: {e}", a.summary.display()))?;
    let lo = summary.grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = summary.grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let truth = TrendSurface::load(&a.truth, Domain::new(lo, hi).map_err(err)?)
        .map_err(|e| format!("{}: {e}", a.truth.display()))?;
    let report = MetricsReport::evaluate(&summary, &truth).map_err(err)?;
    let mut buf = Vec::new();
    report.write(&mut buf).map_err(err)?;
    fs::write(out.join("metrics.txt"), buf).map_err(err)?;
    Ok(vec!["metrics.txt".into()])
}

fn write_metrics(report: &MetricsReport, path: &Path) -> Res<()> {
    let mut buf = Vec::new();
    report.write(&mut buf).map_err(err)?;
    fs::write(path, buf).map_err(err)
}

/// One replicate into `dir`: data, truth, selection, FHS and least-squares
/// metrics.
fn replicate_one(a: &ReplicateArgs, seed: u64, index: usize, dir: &Path) -> Res<()> {
    fs::create_dir_all(dir).map_err(err)?;
    let start = Instant::now();
    let spec = spec_of(&a.scenario, seed);
    let (truth, ds) = make_scenario::<f64>(&spec).map_err(err)?;
    ds.save(dir.join("data.csv")).map_err(err)?;
    truth.save(dir.join("truth.csv")).map_err(err)?;
    let grid = spec.grid();
    let (best_l, summary, _) = run_selection(&ds, &a.candidates, &a.model, &a.mcmc, false, seed, &grid, dir)?;
    write_metrics(&MetricsReport::evaluate(&summary, &truth).map_err(err)?, &dir.join("metrics.txt"))?;
    let system = BSplineSystem::new(ds.domain(), best_l).map_err(err)?;
    let ls = metrics::least_squares_surface(&ds, &system, &grid).map_err(err)?;
    write_metrics(&MetricsReport::point_estimate(&ls, &truth).map_err(err)?, &dir.join("baseline.txt"))?;
    let files = ["baseline.txt", "best.txt", "data.csv", "metrics.txt", "selection.csv", "selection.txt", "summary.csv", "truth.csv"];
    RunManifest {
        command: "replicate-member".into(),
        args: Vec::new(),
        cwd: std::env::current_dir().map_err(err)?,
        config: json!({ "spec": spec, "index": index }),
        seed,
        artifacts: files.iter().map(|s| s.to_string()).collect(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").into(),
    }
    .save(dir)
}

fn read_kv(path: &Path) -> Res<BTreeMap<String, f64>> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| Ok((k.trim().to_string(), v.trim().parse::<f64>().map_err(err)?)))
        .collect()
}

#[derive(Debug, Default, Serialize)]
struct Aggregate {
    n: usize,
    sums: BTreeMap<String, f64>,
}

impl Aggregate {
    fn add(&mut self, kv: &BTreeMap<String, f64>, l: f64) {
        self.n += 1;
        for (k, v) in kv {
            *self.sums.entry(k.clone()).or_default() += v;
        }
        *self.sums.entry("L".into()).or_default() += l;
    }

    fn mean(&self, key: &str) -> Option<f64> {
        self.sums.get(key).map(|s| s / self.n as f64)
    }
}

/// Fold the replicate directories under `out` into table.txt / table.csv.
pub fn aggregate(out: &Path, n_replicates: usize) -> Res<(usize, Vec<String>)> {
    let mut fhs_agg = Aggregate::default();
    let mut ls_agg = Aggregate::default();
    let mut failures = Vec::new();
    for i in 0..n_replicates {
        let dir = out.join(rep_name(i));
        let read = || -> Res<_> {
            let best = read_kv(&dir.join("best.txt"))?;
            let l = *best.get("L").ok_or("best.txt lacks L")?;
            Ok((read_kv(&dir.join("metrics.txt"))?, read_kv(&dir.join("baseline.txt"))?, l))
        };
        match read() {
            Ok((m, b, l)) => {
                fhs_agg.add(&m, l);
                ls_agg.add(&b, l);
            }
            Err(e) => failures.push(format!("{}: {e}", rep_name(i))),
        }
    }
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    let mut table = format!(
        "{:<10} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
        "method", "MAD", "MCIW", "MASVD", "MC", "L"
    );
    let mut csv = String::from("method,mad,mciw,masvd,mc,L,replicates\n");
    for (name, agg) in [("FHS", &fhs_agg), ("B-spline", &ls_agg)] {
        if agg.n == 0 {
            continue;
        }
        table += &format!(
            "{:<10} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
            name,
            fmt(agg.mean("mad")),
            fmt(agg.mean("mciw")),
            fmt(agg.mean("masvd")),
            fmt(agg.mean("mc")),
            fmt(agg.mean("L"))
        );
        let raw = |k: &str| agg.mean(k).map_or(String::new(), |v| v.to_string());
        csv += &format!("{name},{},{},{},{},{},{}\n", raw("mad"), raw("mciw"), raw("masvd"), raw("mc"), raw("L"), agg.n);
    }
    table += &format!("{} of {n_replicates} replicates succeeded\n", fhs_agg.n);
    for f in &failures {
        table += &format!("failed {f}\n");
    }
    fs::write(out.join("table.txt"), table).map_err(err)?;
    fs::write(out.join("table.csv"), csv).map_err(err)?;
    Ok((fhs_agg.n, vec!["table.txt".into(), "table.csv".into()]))
}

fn rep_name(i: usize) -> String {
    format!("rep_{i:03}")
}

fn replicate(a: &ReplicateArgs, seed: u64, out: &Path) -> Res<(bool, Vec<String>)> {
    if a.replicates == 0 {
        return Err("--replicates must be at least 1".into());
    }
    let errors: Vec<Option<String>> = (0..a.replicates)
        .into_par_iter()
        .map(|i| {
            let dir = out.join(rep_name(i));
            replicate_one(a, rng::child_seed(seed, i as u64), i, &dir).err().map(|e| {
                let _ = fs::create_dir_all(&dir);
                let _ = fs::write(dir.join("error.txt"), format!("{e}\n"));
                e
            })
        })
        .collect();
    for (i, e) in errors.iter().enumerate() {
        if let Some(e) = e {
            eprintln!("replicate {i} failed: {e}");
        }
    }
    let (n_ok, mut files) = aggregate(out, a.replicates)?;
    files.extend((0..a.replicates).map(rep_name));
    Ok((n_ok > 0, files))
}

fn verify_cmd(a: &VerifyArgs, seed: u64, out: &Path) -> Res<(bool, Vec<String>)> {
    let opts = VerifyOptions { seed, geweke_samples: a.geweke_samples, skip_geweke: a.skip_geweke };
    let report = verify::run_all(&opts).map_err(err)?;
    let text = report.render();
    print!("{text}");
    fs::write(out.join("verify.txt"), text).map_err(err)?;
    Ok((report.passed(), vec!["verify.txt".into()]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_skips_failed_replicates() {
        let tmp = tempfile::tempdir().unwrap();
        let rep = tmp.path().join("rep_000");
        fs::create_dir_all(&rep).unwrap();
        fs::write(rep.join("best.txt"), "L=13\nk=0\nppl=1\n").unwrap();
        fs::write(rep.join("metrics.txt"), "mad=0.5\nmasvd=0.2\nmciw=3\nmc=0.95\n").unwrap();
        fs::write(rep.join("baseline.txt"), "mad=1.5\nmasvd=2\n").unwrap();
        fs::create_dir_all(tmp.path().join("rep_001")).unwrap();
        let (n, _) = aggregate(tmp.path(), 2).unwrap();
        assert_eq!(n, 1);
        let table = fs::read_to_string(tmp.path().join("table.txt")).unwrap();
        assert!(table.contains("1 of 2 replicates succeeded") && table.contains("failed rep_001"));
        let csv = fs::read_to_string(tmp.path().join("table.csv")).unwrap();
        assert!(csv.contains("FHS,0.5,3,0.2,0.95,13,1"), "{csv}");
        assert!(csv.contains("B-spline,1.5,,2,,13,1"), "{csv}");
    }
}
