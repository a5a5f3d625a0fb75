mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use startup_match::analysis::{self, preference_profiles};
use startup_match::bprmf::BprParams;
use startup_match::dataset::{
    corpus_stats, histogram_to_text, parse_date, parse_events, temporal_split, Corpus,
    ParseOptions, Split, SplitRule, TagSet,
};
use startup_match::diffusion::{seed_from_tags, Kernel};
use startup_match::eval::{
    evaluate, prepare, sweep, Baseline, BprSettings, EvalOptions, Method, SweepGrid,
};
use startup_match::graph::{assemble, Representation};
use startup_match::synth::{generate, SynthConfig};

use config::ConfigFile;

#[derive(Parser, Debug)]
#[command(name = "startup-match", version, about = "Recommend investors for brand-new companies")]
struct Cli {
    /// Flat key = value file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Evaluation worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Corpus summary and degree histograms.
    Stats(StatsArgs),
    /// Investor tag-preference profiles and histograms.
    Analyze(AnalyzeArgs),
    /// Temporal train/test split and the resulting targets.
    Split(SplitArgs),
    /// Ranked investor list for a new company's tags.
    Recommend(RecommendArgs),
    /// Mean ranking score and AUC of one method.
    Evaluate(EvaluateArgs),
    /// Lambda x reach grid over kernels and representations plus baselines.
    Sweep(SweepArgs),
    /// Write a synthetic event file.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Bins for the preference histograms.
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    min_companies: Option<usize>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    min_companies: Option<usize>,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// `90/10`, `0.85`, `fraction:0.95` or `before:YYYY-MM-DD`.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Args, Debug, Default)]
struct MethodArgs {
    /// `probs`, `heats`, or a baseline: popularity, tag-voting,
    /// normalized-tag-voting, neighbor-cf, bpr-mf.
    #[arg(long)]
    method: Option<String>,
    /// cit-w, cit-u, cti-w, cti-u or tci.
    #[arg(long)]
    representation: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    reach: Option<usize>,
    /// Latent factors for bpr-mf.
    #[arg(long)]
    factors: Option<usize>,
    /// SGD samples for bpr-mf (default 100 x events).
    #[arg(long)]
    bpr_samples: Option<usize>,
    /// Neighbours used to place a new company in factor space.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct RecommendArgs {
    /// Training events.
    #[arg(long)]
    input: PathBuf,
    /// Target tags separated by `|`.
    #[arg(long)]
    tags: String,
    #[command(flatten)]
    method: MethodArgs,
    /// Number of investors to list.
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    split: Option<String>,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    split: Option<String>,
    /// Comma-separated kernels.
    #[arg(long)]
    kernels: Option<String>,
    /// Comma-separated representations, or `all`.
    #[arg(long)]
    representations: Option<String>,
    /// Comma-separated baselines, `all` or `none`.
    #[arg(long)]
    baselines: Option<String>,
    #[arg(long)]
    lambda_step: Option<f64>,
    #[arg(long)]
    max_reach: Option<usize>,
    #[arg(long)]
    factors: Option<usize>,
    #[arg(long)]
    bpr_samples: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    investors: Option<usize>,
    #[arg(long)]
    companies: Option<usize>,
    #[arg(long)]
    tags: Option<usize>,
    #[arg(long)]
    tags_per_company: Option<f64>,
    #[arg(long)]
    activity_exponent: Option<f64>,
    #[arg(long)]
    min_activity: Option<usize>,
    #[arg(long)]
    max_activity: Option<usize>,
    #[arg(long)]
    tag_skew: Option<f64>,
    /// Probability an investment targets the investor's favorite tag.
    #[arg(long)]
    preference: Option<f64>,
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    end: Option<String>,
    #[arg(long)]
    max_lag_days: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Files written so far; removed again if the command fails.
#[derive(Default)]
struct Outputs {
    written: Vec<PathBuf>,
}

impl Outputs {
    fn dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
    }

    fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        self.written.push(path.to_path_buf());
        fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn discard(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

struct Ctx {
    cfg: ConfigFile,
    workers: Option<usize>,
}

fn load(path: &Path) -> Result<Corpus> {
    let parsed = parse_events(path, &ParseOptions::default())
        .with_context(|| format!("loading {}", path.display()))?;
    let r = &parsed.report;
    if r.dropped_rows() > 0 {
        eprintln!(
            "warning: dropped {} of {} rows ({} malformed, {} without investor, {} duplicate)",
            r.dropped_rows(),
            r.rows_read,
            r.malformed_rows,
            r.missing_investor_rows,
            r.duplicate_rows
        );
    }
    Ok(parsed.corpus)
}

fn split_rule(ctx: &Ctx, flag: Option<String>) -> Result<SplitRule> {
    let raw = ctx.cfg.pick(flag, "split", "90/10".to_string())?;
    Ok(raw.parse()?)
}

fn make_split(ctx: &Ctx, input: &Path, flag: Option<String>) -> Result<Split> {
    let rule = split_rule(ctx, flag)?;
    let corpus = load(input)?;
    let split = temporal_split(&corpus, rule)?;
    if split.tagless_new_companies > 0 {
        eprintln!(
            "warning: {} new companies without tags are not evaluated",
            split.tagless_new_companies
        );
    }
    Ok(split)
}

fn bpr_settings(
    ctx: &Ctx,
    factors: Option<usize>,
    samples: Option<usize>,
    k: Option<usize>,
    seed: Option<u64>,
) -> Result<BprSettings> {
    let d = BprParams::default();
    Ok(BprSettings {
        params: BprParams {
            factors: ctx.cfg.pick(factors, "factors", d.factors)?,
            samples: ctx.cfg.resolve(samples, "bpr-samples")?,
            seed: ctx.cfg.pick(seed, "seed", d.seed)?,
            ..d
        },
        k: ctx.cfg.pick(k, "k", 6)?,
    })
}

fn resolve_method(ctx: &Ctx, m: MethodArgs) -> Result<(Method, BprSettings)> {
    let bpr = bpr_settings(ctx, m.factors, m.bpr_samples, m.k, m.seed)?;
    let name = ctx
        .cfg
        .resolve(m.method, "method")?
        .context("--method is required")?;
    if let Ok(kernel) = name.parse::<Kernel>() {
        let rep: Representation = ctx
            .cfg
            .pick(m.representation, "representation", "cit-w".to_string())?
            .parse()?;
        let lambda = ctx
            .cfg
            .resolve(m.lambda, "lambda")?
            .context("--lambda is required for diffusion methods")?;
        let reach = ctx.cfg.pick(m.reach, "reach", 1usize)?;
        return Ok((Method::diffusion(kernel, rep, lambda, reach)?, bpr));
    }
    let baseline: Baseline = name.parse()?;
    if m.lambda.is_some() || m.reach.is_some() || m.representation.is_some() {
        eprintln!("warning: --lambda, --reach and --representation are ignored by {baseline}");
    }
    Ok((Method::Baseline(baseline), bpr))
}

fn list<T>(raw: &str, all: &[T]) -> Result<Vec<T>>
where
    T: std::str::FromStr + Copy,
    T::Err: std::error::Error + Send + Sync + 'static,
{
    match raw.trim() {
        "all" => Ok(all.to_vec()),
        "none" | "" => Ok(Vec::new()),
        items => items
            .split(',')
            .map(|s| s.trim().parse::<T>().map_err(Into::into))
            .collect(),
    }
}

fn cmd_stats(ctx: &Ctx, a: StatsArgs, out: &mut Outputs) -> Result<()> {
    let corpus = load(&a.input)?;
    let stats = corpus_stats(&corpus)?;
    out.dir(&a.out_dir)?;
    out.write(&a.out_dir.join("stats.txt"), &stats.to_report())?;
    out.write(
        &a.out_dir.join("companies_per_investor.tsv"),
        &histogram_to_text(&stats.companies_per_investor),
    )?;
    out.write(
        &a.out_dir.join("investors_per_company.tsv"),
        &histogram_to_text(&stats.investors_per_company),
    )?;
    out.write(
        &a.out_dir.join("tags_per_company.tsv"),
        &histogram_to_text(&stats.tags_per_company),
    )?;
    write_preferences(ctx, &corpus, &a.out_dir, a.bins, a.min_companies, out)?;
    print!("{}", stats.to_report());
    Ok(())
}

fn write_preferences(
    ctx: &Ctx,
    corpus: &Corpus,
    dir: &Path,
    bins: Option<usize>,
    min_companies: Option<usize>,
    out: &mut Outputs,
) -> Result<String> {
    let bins = ctx.cfg.pick(bins, "bins", analysis::DEFAULT_BINS)?;
    let min = ctx
        .cfg
        .pick(min_companies, "min-companies", analysis::DEFAULT_MIN_COMPANIES)?;
    if bins == 0 {
        bail!("--bins must be at least 1");
    }
    let profiles = preference_profiles(corpus, min);
    let p = analysis::histogram(profiles.iter().map(|p| p.p), bins);
    let p_prime = analysis::histogram(profiles.iter().map(|p| p.p_prime), bins);
    out.write(&dir.join("favorite_tag_share.tsv"), &analysis::histogram_to_text(&p))?;
    out.write(&dir.join("giant_component_share.tsv"), &analysis::histogram_to_text(&p_prime))?;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
    Ok(format!(
        "qualifying_investors\t{}\nmean_p\t{}\nmean_p_prime\t{}\n",
        profiles.len(),
        fmt(analysis::mean_p(&profiles)),
        fmt(analysis::mean_p_prime(&profiles))
    ))
}

fn cmd_analyze(ctx: &Ctx, a: AnalyzeArgs, out: &mut Outputs) -> Result<()> {
    let corpus = load(&a.input)?;
    out.dir(&a.out_dir)?;
    let min = ctx
        .cfg
        .pick(a.min_companies, "min-companies", analysis::DEFAULT_MIN_COMPANIES)?;
    out.write(
        &a.out_dir.join("profiles.tsv"),
        &analysis::profiles_to_tsv(&preference_profiles(&corpus, min)),
    )?;
    let summary = write_preferences(ctx, &corpus, &a.out_dir, a.bins, Some(min), out)?;
    out.write(&a.out_dir.join("preferences.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_split(ctx: &Ctx, a: SplitArgs, out: &mut Outputs) -> Result<()> {
    let split = make_split(ctx, &a.input, a.split)?;
    out.dir(&a.out_dir)?;
    let opts = ParseOptions::default();
    for (name, corpus) in [("train.csv", &split.train), ("test.csv", &split.test)] {
        let mut buf = Vec::new();
        corpus.write_to(&mut buf, &opts)?;
        out.write(&a.out_dir.join(name), &String::from_utf8(buf)?)?;
    }
    let mut targets = String::from("company\ttags\trelevant_investors\n");
    for t in &split.targets {
        let tags: Vec<&str> = t.tags.iter().map(String::as_str).collect();
        let relevant: Vec<&str> = t.relevant.iter().map(String::as_str).collect();
        targets.push_str(&format!("{}\t{}\t{}\n", t.company, tags.join("|"), relevant.join("|")));
    }
    out.write(&a.out_dir.join("targets.tsv"), &targets)?;
    println!(
        "split {}: {} train events, {} test events, {} targets",
        split.rule,
        split.train.events().len(),
        split.test.events().len(),
        split.targets.len()
    );
    Ok(())
}

fn cmd_recommend(ctx: &Ctx, a: RecommendArgs, out: &mut Outputs) -> Result<()> {
    let (method, bpr) = resolve_method(ctx, a.method)?;
    let top = ctx.cfg.resolve(a.top, "top")?;
    let train = load(&a.input)?;
    let tags: TagSet = a
        .tags
        .split('|')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect();
    if tags.is_empty() {
        bail!("--tags lists no tags");
    }
    let seed = seed_from_tags(&assemble(Representation::Tci, &train), tags.iter().map(String::as_str));
    if seed.is_zero() {
        eprintln!(
            "warning: none of the target tags occur in the training data; all scores tie and the list is in id order"
        );
    }
    let scorer = prepare(&method, &train, &bpr)?;
    let scores = scorer.score(&tags)?;
    let mut text = format!("# {}\n", method.label());
    text.push_str(&scores.to_text(top));
    out.write(&a.out, &text)?;
    Ok(())
}

fn cmd_evaluate(ctx: &Ctx, a: EvaluateArgs, out: &mut Outputs) -> Result<()> {
    let (method, bpr) = resolve_method(ctx, a.method)?;
    let split = make_split(ctx, &a.input, a.split)?;
    let options = EvalOptions {
        workers: ctx.workers,
        bpr,
    };
    let report = evaluate(&method, &split, &options)?;
    out.dir(&a.out_dir)?;
    out.write(&a.out_dir.join("report.txt"), &report.to_text())?;
    out.write(&a.out_dir.join("records.tsv"), &report.records_tsv())?;
    out.write(
        &a.out_dir.join("timing.tsv"),
        &format!(
            "entry\tseconds_total\tseconds_per_target\n{}\t{:.6}\t{:.9}\n",
            report.method, report.timing.total_secs, report.timing.per_target_secs
        ),
    )?;
    print!("{}", report.to_text());
    Ok(())
}

fn cmd_sweep(ctx: &Ctx, a: SweepArgs, out: &mut Outputs) -> Result<()> {
    let cfg = &ctx.cfg;
    let kernels = list(&cfg.pick(a.kernels, "kernels", "probs,heats".into())?, &[Kernel::ProbS, Kernel::HeatS])?;
    let reps = list(&cfg.pick(a.representations, "representations", "all".into())?, &Representation::ALL)?;
    let baselines = list(&cfg.pick(a.baselines, "baselines", "all".into())?, &Baseline::ALL)?;
    let grid = SweepGrid::with_step(
        cfg.pick(a.lambda_step, "lambda-step", 0.02)?,
        cfg.pick(a.max_reach, "max-reach", 7)?,
    )?;
    if kernels.is_empty() && baselines.is_empty() {
        bail!("nothing to sweep");
    }
    let bpr = bpr_settings(ctx, a.factors, a.bpr_samples, a.k, a.seed)?;
    let split = make_split(ctx, &a.input, a.split)?;
    let options = EvalOptions {
        workers: ctx.workers,
        bpr,
    };
    let cmp = sweep(&kernels, &reps, &baselines, &grid, &split, &options)?;
    out.dir(&a.out_dir)?;
    out.write(&a.out_dir.join("table.txt"), &cmp.to_text())?;
    out.write(&a.out_dir.join("table.tsv"), &cmp.to_tsv())?;
    out.write(&a.out_dir.join("timing.tsv"), &cmp.timing_tsv())?;
    print!("{}", cmp.to_text());
    Ok(())
}

fn cmd_synth(ctx: &Ctx, a: SynthArgs, out: &mut Outputs) -> Result<()> {
    let cfg = &ctx.cfg;
    let d = SynthConfig::default();
    let date = |flag: Option<String>, key: &str, default| -> Result<_> {
        match cfg.resolve(flag, key)? {
            None => Ok(default),
            Some(raw) => parse_date(&raw).with_context(|| format!("invalid date `{raw}`")),
        }
    };
    let synth = SynthConfig {
        n_investors: cfg.pick(a.investors, "investors", d.n_investors)?,
        n_companies: cfg.pick(a.companies, "companies", d.n_companies)?,
        n_tags: cfg.pick(a.tags, "tags", d.n_tags)?,
        tags_per_company: cfg.pick(a.tags_per_company, "tags-per-company", d.tags_per_company)?,
        activity_exponent: cfg.pick(a.activity_exponent, "activity-exponent", d.activity_exponent)?,
        min_activity: cfg.pick(a.min_activity, "min-activity", d.min_activity)?,
        max_activity: cfg.resolve(a.max_activity, "max-activity")?,
        tag_skew: cfg.pick(a.tag_skew, "tag-skew", d.tag_skew)?,
        preference_strength: cfg.pick(a.preference, "preference", d.preference_strength)?,
        start: date(a.start, "start", d.start)?,
        end: date(a.end, "end", d.end)?,
        max_lag_days: cfg.pick(a.max_lag_days, "max-lag-days", d.max_lag_days)?,
        seed: cfg.pick(a.seed, "seed", d.seed)?,
    };
    let corpus = generate(&synth)?;
    let mut buf = Vec::new();
    corpus.write_to(&mut buf, &ParseOptions::default())?;
    out.write(&a.out, &String::from_utf8(buf)?)?;
    println!(
        "{} events, {} investors, {} companies, {} tags",
        corpus.events().len(),
        corpus.n_investors(),
        corpus.n_companies(),
        corpus.n_tags()
    );
    Ok(())
}

fn run(cli: Cli, out: &mut Outputs) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let workers = cfg.resolve(cli.workers, "workers")?;
    if workers == Some(0) {
        bail!("--workers must be at least 1");
    }
    let ctx = Ctx { cfg, workers };
    match cli.command {
        Command::Stats(a) => cmd_stats(&ctx, a, out),
        Command::Analyze(a) => cmd_analyze(&ctx, a, out),
        Command::Split(a) => cmd_split(&ctx, a, out),
        Command::Recommend(a) => cmd_recommend(&ctx, a, out),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a, out),
        Command::Sweep(a) => cmd_sweep(&ctx, a, out),
        Command::Synth(a) => cmd_synth(&ctx, a, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Outputs::default();
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            out.discard();
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
