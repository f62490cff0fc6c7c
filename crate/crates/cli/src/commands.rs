use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rads_core::corpusgap::{compare, load_corpus, KlConfig};
use rads_core::harness::{summarize, sweep as run_sweep, write_reports_csv, TransferContext, TransferReport};
use rads_core::selection::{select_with_policy, Policy};
use rads_core::signals::{build_signals, ScorePool};
use serde::Deserialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::{
    CorpusGapArgs, ExperimentArgs, Failure, RunFlags, SamplerFlags, ScoreArgs, SelectArgs, SweepArgs, ValidateArgs,
};

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failed run never leaves a partial output.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::runtime(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn parse_policy(s: &str) -> Result<Policy, Failure> {
    s.parse()
        .map_err(|e: rads_core::RadsError| Failure::usage(e.to_string()))
}

fn parse_list(s: &str, what: &str) -> Result<Vec<u64>, Failure> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if items.is_empty() {
        return Err(Failure::usage(format!("{what} list is empty")));
    }
    items
        .iter()
        .map(|t| t.parse().map_err(|_| Failure::usage(format!("invalid {what} {t:?}"))))
        .collect()
}

fn load_scores(path: &Path) -> Result<ScorePool, Failure> {
    ScorePool::read_jsonl(open(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn apply_sampler_flags(cfg: &mut RunConfig, flags: &SamplerFlags) -> Result<(), Failure> {
    let sampler = &mut cfg.harness.sampler;
    if let Some(l) = flags.lambda {
        sampler.lambda = l;
    }
    if let Some(r) = flags.rho {
        sampler.utility.rho = r;
    }
    if let Some(e) = flags.episodes {
        sampler.agent.episodes = e;
    }
    cfg.validate()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureRow {
    id: String,
    features: Vec<f64>,
}

fn load_features(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<String>), Failure> {
    let (mut features, mut ids) = (Vec::new(), Vec::new());
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Failure::runtime(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: FeatureRow = serde_json::from_str(&line)
            .map_err(|e| Failure::usage(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        if row.features.len() != 2 || row.features.iter().any(|x| !x.is_finite()) {
            return Err(Failure::usage(format!(
                "{}: line {}: features must be two finite numbers",
                path.display(),
                i + 1
            )));
        }
        features.push(row.features);
        ids.push(row.id);
    }
    if ids.is_empty() {
        return Err(Failure::usage(format!("{}: no rows", path.display())));
    }
    Ok((features, ids))
}

pub fn score(args: ScoreArgs) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(args.common.config.as_deref())?;
    if let Some(k) = args.passes {
        cfg.harness.passes = k;
    }
    cfg.validate()?;
    let seed = cfg.seed(args.common.seed);
    let domains = cfg.scenario.generate()?;
    let (features, ids) = match &args.features {
        Some(p) => load_features(p)?,
        None => (domains.target.train.features.clone(), domains.target.train.ids.clone()),
    };
    let ctx = TransferContext::prepare_on(&domains, &features, &ids, &cfg.harness, seed)?;
    let mut buf = Vec::new();
    ctx.pool.write_jsonl(&mut buf)?;
    write_atomic(&args.out, &buf)?;
    eprintln!("scored {} samples with {} passes", ctx.pool.len(), ctx.pool.passes());
    Ok(())
}

pub fn select(args: SelectArgs) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(args.common.config.as_deref())?;
    apply_sampler_flags(&mut cfg, &args.sampler)?;
    let policy = parse_policy(&args.policy)?;
    let pool = load_scores(&args.scores)?;
    let records = build_signals(&pool)?;
    let result = select_with_policy(
        policy,
        &records,
        &cfg.harness.sampler,
        args.budget,
        cfg.seed(args.common.seed),
    )?;
    let mut text = result.to_json_pretty()?;
    text.push('\n');
    write_atomic(&args.out, text.as_bytes())?;
    eprintln!(
        "{policy}: selected {} of budget {}",
        result.budget_used(),
        result.budget
    );
    Ok(())
}

fn seeds(run: &RunFlags, base: u64) -> Result<Vec<u64>, Failure> {
    match &run.seeds {
        Some(s) => parse_list(s, "seed"),
        None if run.runs == 0 => Err(Failure::usage("--runs must be at least 1")),
        None => Ok((0..run.runs).map(|i| base + i).collect()),
    }
}

fn apply_run_flags(cfg: &mut RunConfig, run: &RunFlags) -> Result<(), Failure> {
    if let Some(k) = run.passes {
        cfg.harness.passes = k;
    }
    if let Some(r) = run.resamples {
        cfg.harness.bootstrap_resamples = r;
    }
    cfg.validate()
}

fn write_reports(reports: &[TransferReport], run: &RunFlags) -> Result<(), Failure> {
    let format = run
        .format
        .clone()
        .unwrap_or_else(|| match run.out.extension().and_then(|e| e.to_str()) {
            Some("json") => "json".into(),
            _ => "csv".into(),
        });
    let bytes = if format == "json" {
        let doc = json!({ "reports": reports, "summary": summarize(reports) });
        let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Failure::runtime(e.to_string()))?;
        s.push('\n');
        s.into_bytes()
    } else {
        let mut buf = Vec::new();
        write_reports_csv(reports, &mut buf)?;
        buf
    };
    write_atomic(&run.out, &bytes)
}

fn print_summary(reports: &[TransferReport]) {
    for s in summarize(reports) {
        eprintln!(
            "{} budget {}: mean target F1 {:.4}, mean source F1 {:.4}, mean budget used {:.2} ({} runs)",
            s.policy, s.budget, s.target.f1, s.source.f1, s.mean_budget_used, s.runs
        );
    }
}

pub fn experiment(args: ExperimentArgs) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(args.common.config.as_deref())?;
    apply_sampler_flags(&mut cfg, &args.sampler)?;
    apply_run_flags(&mut cfg, &args.run)?;
    let policy = parse_policy(&args.policy)?;
    let seeds = seeds(&args.run, cfg.seed(args.common.seed))?;
    let domains = cfg.scenario.generate()?;
    let reports = run_sweep(&domains, policy, &[args.budget], &seeds, &cfg.harness)?;
    write_reports(&reports, &args.run)?;
    print_summary(&reports);
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(args.common.config.as_deref())?;
    apply_sampler_flags(&mut cfg, &args.sampler)?;
    apply_run_flags(&mut cfg, &args.run)?;
    let policy = parse_policy(&args.policy)?;
    let budgets: Vec<usize> = parse_list(&args.budgets, "budget")?
        .into_iter()
        .map(|b| b as usize)
        .collect();
    if budgets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Failure::usage("budgets must be sorted ascending"));
    }
    let seeds = seeds(&args.run, cfg.seed(args.common.seed))?;
    let domains = cfg.scenario.generate()?;
    if let Some(&b) = budgets.iter().find(|&&b| b > domains.target.train.len()) {
        return Err(Failure::usage(format!(
            "budget {b} exceeds target pool size {}",
            domains.target.train.len()
        )));
    }
    let reports = run_sweep(&domains, policy, &budgets, &seeds, &cfg.harness)?;
    write_reports(&reports, &args.run)?;
    print_summary(&reports);
    Ok(())
}

pub fn corpusgap(args: CorpusGapArgs) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(args.common.config.as_deref())?;
    let cg = &mut cfg.corpusgap;
    if let Some(n) = args.max_n {
        cg.max_n = n;
    }
    if let Some(e) = args.epsilon {
        cg.epsilon = e;
    }
    if let Some(k) = args.top_k {
        cg.top_k = k;
    }
    cfg.validate()?;
    let load = |p: &Path| load_corpus(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())));
    let (a, b) = (load(&args.a)?, load(&args.b)?);
    let cg = &cfg.corpusgap;
    let report = compare(&a, &b, cg.max_n, &KlConfig { epsilon: cg.epsilon }, cg.top_k)?;
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Failure::runtime(e.to_string()))?;
    text.push('\n');
    write_atomic(&args.out, text.as_bytes())?;
    eprintln!(
        "coverage a->b {:.4}, jaccard {:.4}, KL(a||b) {:.4}",
        report.coverage_ab, report.jaccard, report.kl_ab
    );
    Ok(())
}

pub fn validate(args: ValidateArgs) -> Result<(), Failure> {
    let cfg_path = args.common.config.as_deref();
    if args.scores.is_none() && cfg_path.is_none() {
        return Err(Failure::usage("nothing to validate: pass --scores and/or --config"));
    }
    if let Some(p) = cfg_path {
        RunConfig::load(Some(p))?;
        println!("{}: valid configuration", p.display());
    }
    if let Some(p) = &args.scores {
        let pool = load_scores(p)?;
        build_signals(&pool)?;
        println!(
            "{}: valid score file ({} entries, {} passes, {} classes)",
            p.display(),
            pool.len(),
            pool.passes(),
            pool.classes()
        );
    }
    Ok(())
}
