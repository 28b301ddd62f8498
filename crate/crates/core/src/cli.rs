//! Command-line front end. Exit codes: 0 success, 1 config or usage error,
//! 2 runtime error, 3 a verification suite ran but some check failed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Level, LevelPlan, Plan};
use crate::diffusion::{estimate_harmonic_measure, simulate_auxiliary};
use crate::ensemble::run_replicas;
use crate::error::{Error, Result};
use crate::io::{
    fmt_f64, read_trajectories_csv, write_jsonl, write_stats_csv, write_table, write_trajectories_csv, AbsorptionLine,
    JumpLine,
};
use crate::limit::{simulate_corner_chain, simulate_limit, CoefficientConvention, DiffusionConstant, JumpRateRule};
use crate::simplex::Trajectory;
use crate::sip::simulate_sip;
use crate::verify::acceptance::{run_criterion, CRITERIA};
use crate::verify::adjudicate::{adjudicate, AdjudicationConfig, AdjudicationReport};
use crate::verify::{config_hash, sha256_hex};
use crate::verify::rates::{estimate_condensate_jump_rate, CondensateConfig};
use crate::verify::EnsembleStats;

#[derive(Debug, Parser)]
#[command(name = "sipcond", version, about = "Simulate and verify condensation in the symmetric inclusion process")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment config and write trajectories, events and a manifest.
    Simulate(RunArgs),
    /// Sample pure Wright–Fisher absorption points for the config's kernel and start.
    HarmonicMeasure(RunArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Rank the candidate limit coefficients against particle-system data.
    Adjudicate(AdjudicateArgs),
    /// Summarise a trajectory CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Worker threads; defaults to all cores. Never changes results.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Limit-process convention, e.g. `constant,half`.
    #[arg(long)]
    pub convention: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "acceptance")]
    pub suite: String,
    /// Subset of criteria, e.g. `--criteria 1,3`.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<u8>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AdjudicateArgs {
    /// Adjudication manifest; the built-in default when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Trajectory CSV written by `simulate`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Condensate threshold for hop counting.
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
}

/// Marks where a failure happened, which decides the exit code.
enum Failure {
    Config(Error),
    Runtime(Error),
    ChecksFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn config_err(e: Error) -> Failure {
    Failure::Config(e)
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(&a, false),
        Command::HarmonicMeasure(a) => simulate(&a, true),
        Command::Verify(a) => verify(&a),
        Command::Adjudicate(a) => adjudicate_cmd(&a),
        Command::Report(a) => report(&a),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(Failure::ChecksFailed) => 3,
    }
}

/// Parses a comma-separated list of convention names into `base`.
pub fn apply_convention(base: CoefficientConvention, spec: &str) -> Result<CoefficientConvention> {
    let mut conv = base;
    for token in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let jump = JumpRateRule::ALL.iter().find(|r| r.name() == token);
        let diff = DiffusionConstant::ALL.iter().find(|d| d.name() == token);
        if jump.is_none() && diff.is_none() {
            return Err(Error::Config(format!("`--convention`: unknown name `{token}`")));
        }
        if let Some(&r) = jump {
            conv.jump_rate_rule = r;
        }
        if let Some(&d) = diff {
            conv.diffusion_constant = d;
        }
    }
    Ok(conv)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_manifest(dir: &Path, text: &str) -> Result<()> {
    write_manifest_with(dir, "rerun with --config manifest.toml", text)
}

fn write_manifest_with(dir: &Path, note: &str, text: &str) -> Result<()> {
    let mut f = create(dir, "manifest.toml")?;
    writeln!(f, "# sipcond {} manifest; {note}", env!("CARGO_PKG_VERSION"))?;
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

fn resolve(a: &RunArgs, force_wf: bool) -> Result<(ExperimentConfig, Plan)> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if force_wf {
        cfg.level = Level::WfAbsorption;
    }
    if let Some(s) = a.overrides.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.overrides.replicas {
        cfg.replicas = r;
    }
    if let Some(spec) = &a.convention {
        let limit = cfg
            .limit
            .as_mut()
            .filter(|_| cfg.level == Level::Limit)
            .ok_or_else(|| Error::Config("`--convention` only applies to level `limit`".into()))?;
        limit.convention = apply_convention(limit.convention, spec)?;
    }
    let plan = cfg.plan()?;
    Ok((cfg, plan))
}

fn simulate(a: &RunArgs, force_wf: bool) -> std::result::Result<(), Failure> {
    let (cfg, plan) = resolve(a, force_wf).map_err(config_err)?;
    let manifest = cfg.manifest().map_err(config_err)?;
    let workers = a.overrides.workers;
    fs::create_dir_all(&a.out)?;
    let (k, x0, grid) = (&plan.kernel, &plan.start, &plan.grid);
    let reps = cfg.replicas;
    let mut jumps: Vec<JumpLine> = Vec::new();
    let ensemble: Vec<Trajectory> = match &plan.level {
        LevelPlan::Sip(p, init) => {
            run_replicas(cfg.seed, reps, workers, |r, s, rng| simulate_sip(k, p, init, grid, s, r, rng))?
        }
        LevelPlan::Auxiliary(p) => {
            run_replicas(cfg.seed, reps, workers, |r, s, rng| simulate_auxiliary(x0, k, p, grid, s, r, rng))?
        }
        LevelPlan::CornerChain(site) => run_replicas(cfg.seed, reps, workers, |r, s, rng| {
            simulate_corner_chain(k, cfg.alpha, *site, grid, s, r, rng)
        })?,
        LevelPlan::Limit(p, state) => {
            let runs = run_replicas(cfg.seed, reps, workers, |r, s, rng| simulate_limit(state, k, p, grid, s, r, rng))?;
            let mut out = Vec::with_capacity(runs.len());
            for run in runs {
                let (replica, seed) = (run.trajectory.replica_id, run.trajectory.seed);
                jumps.extend(run.jumps.into_iter().map(|jump| JumpLine { replica, seed, jump }));
                out.push(run.trajectory);
            }
            out
        }
        LevelPlan::WfAbsorption(p, eps) => {
            let hm = estimate_harmonic_measure(x0, k, eps, p, reps, cfg.seed, workers)?;
            let lines = hm.results.iter().enumerate().map(|(r, res)| AbsorptionLine {
                replica: r as u64,
                point: res.point.clone(),
                time: res.time,
                hit_cap: res.hit_cap,
            });
            write_jsonl(create(&a.out, "absorption.jsonl")?, lines)?;
            let rows: Vec<Vec<String>> = (0..k.site_count())
                .map(|i| {
                    vec![
                        (i + 1).to_string(),
                        fmt_f64(x0[i]),
                        fmt_f64(hm.corner_frequency[i]),
                        fmt_f64(hm.corner_std_error[i]),
                    ]
                })
                .collect();
            write_table(create(&a.out, "harmonic_measure.csv")?, &["site", "start", "frequency", "std_error"], &rows)?;
            write_manifest(&a.out, &manifest)?;
            println!(
                "{} absorptions, {} capped, {} on faces; corner frequencies {:?}",
                hm.replicas,
                hm.capped,
                hm.face_points.len(),
                hm.corner_frequency
            );
            return Ok(());
        }
    };
    write_trajectories_csv(create(&a.out, "trajectories.csv")?, &ensemble)?;
    if cfg.level == Level::Limit {
        write_jsonl(create(&a.out, "jumps.jsonl")?, &jumps)?;
    }
    let mut meta = BTreeMap::new();
    meta.insert("level".to_string(), format!("{:?}", cfg.level));
    let stats = EnsembleStats::coordinates(&ensemble, meta, config_hash(&cfg))?;
    write_stats_csv(create(&a.out, "stats.csv")?, &stats)?;
    write_manifest(&a.out, &manifest)?;
    println!("{} replicas x {} samples written to {}", ensemble.len(), grid.len(), a.out.display());
    Ok(())
}

fn verify(a: &VerifyArgs) -> std::result::Result<(), Failure> {
    if a.suite != "acceptance" {
        return Err(Failure::Config(Error::Config(format!("`--suite`: unknown suite `{}`", a.suite))));
    }
    if let Some(bad) = a.criteria.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(Failure::Config(Error::Config(format!("`--criteria`: no criterion {bad}"))));
    }
    let ids: Vec<u8> =
        CRITERIA.iter().map(|c| c.0).filter(|id| a.criteria.is_empty() || a.criteria.contains(id)).collect();
    let mut results = Vec::new();
    for id in ids {
        let r = run_criterion(id, a.workers)?;
        println!("{}", r.line());
        results.push(r);
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        let ids: Vec<String> = results.iter().map(|r| r.id.to_string()).collect();
        let text = format!("suite = \"{}\"\ncriteria = [{}]\n", a.suite, ids.join(", "));
        write_manifest_with(dir, "criteria run with their built-in settings", &text)?;
        write_jsonl(create(dir, "acceptance.jsonl")?, &results)?;
        let mut txt = create(dir, "acceptance.txt")?;
        for r in &results {
            writeln!(txt, "{}", r.line())?;
        }
        txt.flush()?;
    }
    if results.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::ChecksFailed)
    }
}

fn adjudicate_cmd(a: &AdjudicateArgs) -> std::result::Result<(), Failure> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(Error::Config(format!("cannot read {}: {e}", path.display()))))?;
            toml::from_str::<AdjudicationConfig>(&text)
                .map_err(|e| Failure::Config(Error::Config(e.message().to_string())))?
        }
        None => AdjudicationConfig::default(),
    };
    if let Some(s) = a.overrides.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.overrides.replicas {
        cfg.replicas = r;
    }
    let manifest = toml::to_string(&cfg).map_err(|e| Failure::Config(Error::Config(e.to_string())))?;
    let report = adjudicate(&cfg, a.overrides.workers)?;
    fs::create_dir_all(&a.out)?;
    write_adjudication(&a.out, &report)?;
    write_manifest(&a.out, &manifest)?;
    print!("{}", adjudication_summary(&report));
    Ok(())
}

fn write_adjudication(dir: &Path, rep: &AdjudicationReport) -> Result<()> {
    let mut f = create(dir, "adjudication.json")?;
    serde_json::to_writer_pretty(&mut f, rep)?;
    f.write_all(b"\n")?;
    f.flush()?;

    let mut fit_lines = Vec::new();
    let mut fit_rows = Vec::new();
    for e in &rep.experiments {
        for p in &e.diffusivity {
            fit_lines.push(serde_json::json!({ "experiment": e.name, "quantity": "diffusion_constant", "fit": p }));
            for c in &p.candidates {
                fit_rows.push(vec![
                    e.name.clone(),
                    "diffusion_constant".into(),
                    format!("{}-{}", p.pair.0, p.pair.1),
                    fmt_f64(p.estimate.value),
                    fmt_f64(p.estimate.ci_low),
                    fmt_f64(p.estimate.ci_high),
                    c.convention.clone(),
                    fmt_f64(c.predicted),
                    fmt_f64(c.z),
                    c.inside_ci.to_string(),
                    serde_json::to_value(p.verdict)?.as_str().unwrap_or_default().to_string(),
                ]);
            }
        }
        let j = &e.first_jump;
        fit_lines.push(serde_json::json!({ "experiment": e.name, "quantity": "first_jump_rate", "fit": j }));
        for c in &j.candidates {
            fit_rows.push(vec![
                e.name.clone(),
                "first_jump_rate".into(),
                String::new(),
                fmt_f64(j.estimate.rate),
                fmt_f64(j.estimate.ci_low),
                fmt_f64(j.estimate.ci_high),
                c.convention.clone(),
                fmt_f64(c.predicted),
                fmt_f64(c.z),
                c.inside_ci.to_string(),
                serde_json::to_value(j.verdict)?.as_str().unwrap_or_default().to_string(),
            ]);
        }
    }
    write_jsonl(create(dir, "fits.jsonl")?, &fit_lines)?;
    write_table(
        create(dir, "fits.csv")?,
        &[
            "experiment",
            "quantity",
            "pair",
            "estimate",
            "ci_low",
            "ci_high",
            "convention",
            "predicted",
            "z",
            "inside_ci",
            "verdict",
        ],
        &fit_rows,
    )?;
    let rank_rows: Vec<Vec<String>> =
        [("diffusion_constant", &rep.diffusion_ranking), ("jump_rate_rule", &rep.jump_ranking)]
            .iter()
            .flat_map(|(family, ranks)| {
                ranks.iter().map(move |r| {
                    vec![
                        family.to_string(),
                        r.rank.to_string(),
                        r.convention.clone(),
                        fmt_f64(r.chi2),
                        r.fits.to_string(),
                    ]
                })
            })
            .collect();
    write_table(create(dir, "rankings.csv")?, &["family", "rank", "convention", "chi2", "fits"], &rank_rows)?;
    let cal_rows: Vec<Vec<String>> = rep
        .calibration
        .iter()
        .map(|c| {
            vec![
                c.estimator.clone(),
                fmt_f64(c.truth),
                c.trials.to_string(),
                c.covered.to_string(),
                fmt_f64(c.coverage),
                c.pass.to_string(),
            ]
        })
        .collect();
    write_table(
        create(dir, "calibration.csv")?,
        &["estimator", "truth", "trials", "covered", "coverage", "pass"],
        &cal_rows,
    )?;
    let mut txt = create(dir, "summary.txt")?;
    txt.write_all(adjudication_summary(rep).as_bytes())?;
    txt.flush()?;
    Ok(())
}

/// Human-readable digest of an adjudication report.
pub fn adjudication_summary(rep: &AdjudicationReport) -> String {
    let mut s = String::new();
    let verdict = |v| serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    for e in &rep.experiments {
        s += &format!("{} ({}, start {:?})\n", e.name, e.kernel, e.start);
        for p in &e.diffusivity {
            s += &format!(
                "  pair {}-{} (two-step count {}): c = {:.4} [{:.4}, {:.4}] over {} intervals -> {}\n",
                p.pair.0,
                p.pair.1,
                p.p_hat,
                p.estimate.value,
                p.estimate.ci_low,
                p.estimate.ci_high,
                p.intervals,
                verdict(p.verdict)
            );
        }
        for q in &e.skipped_pairs {
            s += &format!("  pair {}-{}: too few usable intervals\n", q.0, q.1);
        }
        let j = &e.first_jump.estimate;
        s += &format!(
            "  first jump: rate {:.4} [{:.4}, {:.4}] from {} events -> {}\n",
            j.rate,
            j.ci_low,
            j.ci_high,
            j.events,
            verdict(e.first_jump.verdict)
        );
    }
    for (title, ranks) in [("diffusion constant", &rep.diffusion_ranking), ("jump rate rule", &rep.jump_ranking)] {
        s += &format!("{title} ranking (sum of squared z):\n");
        for r in ranks.iter() {
            s += &format!("  {}. {} {:.2} over {} fits\n", r.rank, r.convention, r.chi2, r.fits);
        }
    }
    s += "calibration:\n";
    for c in &rep.calibration {
        s += &format!(
            "  {}: {}/{} intervals cover {:.4} ({:.2}) {}\n",
            c.estimator,
            c.covered,
            c.trials,
            c.truth,
            c.coverage,
            if c.pass { "ok" } else { "LOW" }
        );
    }
    s
}

fn report(a: &ReportArgs) -> std::result::Result<(), Failure> {
    if !(a.threshold > 0.5 && a.threshold < 1.0) {
        return Err(Failure::Config(Error::Config("`--threshold` must lie in (0.5, 1)".into())));
    }
    let bytes = fs::read(&a.input)
        .map_err(|e| Failure::Config(Error::Config(format!("cannot read {}: {e}", a.input.display()))))?;
    let ensemble = read_trajectories_csv(bytes.as_slice())?;
    fs::create_dir_all(&a.out)?;
    let record = toml::toml! { input = (a.input.display().to_string()) input_sha256 = (sha256_hex(&bytes)) threshold = (a.threshold) };
    write_manifest_with(&a.out, "inputs of sipcond report", &record.to_string())?;
    let mut meta = BTreeMap::new();
    meta.insert("input".to_string(), a.input.display().to_string());
    let stats = EnsembleStats::coordinates(&ensemble, meta, String::new())?;
    write_stats_csv(create(&a.out, "stats.csv")?, &stats)?;
    let mut summary = format!("{} replicas, {} samples each\n", ensemble.len(), stats.times.len());
    let cfg = CondensateConfig { threshold: a.threshold, ..CondensateConfig::default() };
    match estimate_condensate_jump_rate(&ensemble, &cfg) {
        Ok(rates) => {
            let rows: Vec<Vec<String>> = rates
                .edges
                .iter()
                .map(|e| {
                    vec![
                        (e.from + 1).to_string(),
                        (e.to + 1).to_string(),
                        e.estimate.events.to_string(),
                        fmt_f64(e.estimate.exposure),
                        fmt_f64(e.estimate.rate),
                        fmt_f64(e.estimate.ci_low),
                        fmt_f64(e.estimate.ci_high),
                    ]
                })
                .collect();
            write_table(
                create(&a.out, "hop_rates.csv")?,
                &["from", "to", "hops", "exposure", "rate", "ci_low", "ci_high"],
                &rows,
            )?;
            summary += &format!(
                "{} hops, pooled exit rate {:.4}, mean holding time {:.4}\n",
                rates.transitions,
                rates.pooled_exit_rate().rate,
                rates.mean_holding_time()
            );
        }
        Err(Error::NotCondensed { fraction }) => {
            summary += &format!("not condensed ({fraction:.3} of samples above threshold); no hop rates\n");
        }
        Err(e) => return Err(e.into()),
    }
    let mut f = create(&a.out, "report.json")?;
    serde_json::to_writer_pretty(&mut f, &stats)?;
    f.flush()?;
    fs::write(a.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}
