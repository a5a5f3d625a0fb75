//! Ranking Score / AUC evaluation, method preparation, parameter sweeps and
//! comparison tables.
//!
//! Per target the ranking is computed over every training investor. Ties
//! (within [`TIE_TOLERANCE`]) share the average of the ranks they span.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{
    normalized_tag_voting, popularity, tag_voting, CompanySimilarity, InvestmentCount,
    NeighborCf, TagInvestCounts,
};
use crate::bprmf::{bprmf_score, map_new_company, train_bpr, BprParams, FactorModel};
use crate::dataset::{Corpus, Split, TagSet};
use crate::diffusion::{self, Diffuser, Kernel, KernelConfig};
use crate::error::{Error, Result};
use crate::graph::{assemble, Representation, TripartiteGraph};
use crate::scores::{ScoreVector, TIE_TOLERANCE};

/// Relative rank `r / o` of each relevant index among all `o` scores.
pub fn rank_scores(scores: &[f64], relevant: &[usize]) -> Vec<f64> {
    let o = scores.len() as f64;
    relevant
        .iter()
        .map(|&i| {
            let s = scores[i];
            let (mut above, mut tied) = (0usize, 0usize);
            for &t in scores {
                if t > s + TIE_TOLERANCE {
                    above += 1;
                } else if t >= s - TIE_TOLERANCE {
                    tied += 1;
                }
            }
            // `tied` includes the investor itself
            (above as f64 + 1.0 + (tied - 1) as f64 / 2.0) / o
        })
        .collect()
}

/// Probability that a relevant index outscores an irrelevant one, ties
/// counted half. `None` when either side is empty.
pub fn auc_scores(scores: &[f64], relevant: &[usize]) -> Option<f64> {
    let mut is_relevant = vec![false; scores.len()];
    for &i in relevant {
        is_relevant[i] = true;
    }
    let n_rel = is_relevant.iter().filter(|&&r| r).count();
    let n_irr = scores.len() - n_rel;
    if n_rel == 0 || n_irr == 0 {
        return None;
    }
    let mut credit = 0.0;
    for (i, &s) in scores.iter().enumerate() {
        if !is_relevant[i] {
            continue;
        }
        for (j, &t) in scores.iter().enumerate() {
            if is_relevant[j] {
                continue;
            }
            if t < s - TIE_TOLERANCE {
                credit += 1.0;
            } else if t <= s + TIE_TOLERANCE {
                credit += 0.5;
            }
        }
    }
    Some(credit / (n_rel * n_irr) as f64)
}

fn relevant_indices(scores: &ScoreVector, relevant: &BTreeSet<String>) -> Vec<usize> {
    relevant.iter().filter_map(|id| scores.index_of(id)).collect()
}

/// Ranking score of every scorable relevant investor.
pub fn ranking_score(scores: &ScoreVector, relevant: &BTreeSet<String>) -> Result<Vec<f64>> {
    let idx = relevant_indices(scores, relevant);
    if idx.is_empty() {
        return Err(Error::NoEvaluableTargets);
    }
    Ok(rank_scores(scores.scores(), &idx))
}

pub fn auc(scores: &ScoreVector, relevant: &BTreeSet<String>) -> Result<f64> {
    auc_scores(scores.scores(), &relevant_indices(scores, relevant))
        .ok_or(Error::NoEvaluableTargets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Baseline {
    Popularity,
    TagVoting,
    NormalizedTagVoting,
    NeighborCf,
    BprMf,
}

impl Baseline {
    pub const ALL: [Baseline; 5] = [
        Baseline::Popularity,
        Baseline::TagVoting,
        Baseline::NormalizedTagVoting,
        Baseline::NeighborCf,
        Baseline::BprMf,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Baseline::Popularity => "popularity",
            Baseline::TagVoting => "tag-voting",
            Baseline::NormalizedTagVoting => "normalized-tag-voting",
            Baseline::NeighborCf => "neighbor-cf",
            Baseline::BprMf => "bpr-mf",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Baseline::ALL
            .into_iter()
            .find(|b| b.label() == norm)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Settings shared by the factorization baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct BprSettings {
    pub params: BprParams,
    /// Neighbours used to map a new company to a factor.
    pub k: usize,
}

impl Default for BprSettings {
    fn default() -> Self {
        Self {
            params: BprParams::default(),
            k: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Diffusion {
        representation: Representation,
        config: KernelConfig,
    },
    Baseline(Baseline),
}

impl Method {
    pub fn diffusion(
        kernel: Kernel,
        representation: Representation,
        lambda: f64,
        reach: usize,
    ) -> Result<Self> {
        Ok(Method::Diffusion {
            representation,
            config: KernelConfig::new(kernel, lambda, reach)?,
        })
    }

    pub fn label(&self) -> String {
        match self {
            Method::Diffusion {
                representation,
                config,
            } => diffusion::provenance(*representation, config),
            Method::Baseline(b) => b.label().to_string(),
        }
    }
}

/// A method fitted to a training corpus, ready to score new companies.
pub trait Scorer: Send + Sync {
    fn investors(&self) -> &Arc<[String]>;
    fn score(&self, target_tags: &TagSet) -> Result<ScoreVector>;
}

struct DiffusionScorer {
    graph: TripartiteGraph,
    investors: Arc<[String]>,
    config: KernelConfig,
}

impl Scorer for DiffusionScorer {
    fn investors(&self) -> &Arc<[String]> {
        &self.investors
    }

    fn score(&self, target_tags: &TagSet) -> Result<ScoreVector> {
        diffusion::score(&self.graph, target_tags.iter().map(String::as_str), &self.config)
    }
}

struct PopularityScorer(ScoreVector);

impl Scorer for PopularityScorer {
    fn investors(&self) -> &Arc<[String]> {
        self.0.investors()
    }

    fn score(&self, _: &TagSet) -> Result<ScoreVector> {
        Ok(self.0.clone())
    }
}

struct VotingScorer {
    counts: TagInvestCounts,
    normalized: bool,
}

impl Scorer for VotingScorer {
    fn investors(&self) -> &Arc<[String]> {
        self.counts.investors()
    }

    fn score(&self, target_tags: &TagSet) -> Result<ScoreVector> {
        Ok(if self.normalized {
            normalized_tag_voting(&self.counts, target_tags)
        } else {
            tag_voting(&self.counts, target_tags)
        })
    }
}

impl Scorer for NeighborCf {
    fn investors(&self) -> &Arc<[String]> {
        NeighborCf::investors(self)
    }

    fn score(&self, target_tags: &TagSet) -> Result<ScoreVector> {
        Ok(NeighborCf::score(self, target_tags))
    }
}

struct BprScorer {
    model: FactorModel,
    similarity: CompanySimilarity,
    investors: Arc<[String]>,
    k: usize,
}

impl Scorer for BprScorer {
    fn investors(&self) -> &Arc<[String]> {
        &self.investors
    }

    fn score(&self, target_tags: &TagSet) -> Result<ScoreVector> {
        let phi = map_new_company(&self.model, &self.similarity, target_tags, self.k)?;
        let sv = bprmf_score(&self.model, &phi)?;
        ScoreVector::new(self.investors.clone(), sv.into_scores(), "bpr-mf")
    }
}

/// Builds graphs, counts or factor models for `method` from a training
/// corpus.
pub fn prepare(method: &Method, train: &Corpus, bpr: &BprSettings) -> Result<Box<dyn Scorer>> {
    Ok(match method {
        Method::Diffusion {
            representation,
            config,
        } => {
            let graph = assemble(*representation, train);
            Box::new(DiffusionScorer {
                investors: graph.investors(),
                graph,
                config: *config,
            })
        }
        Method::Baseline(Baseline::Popularity) => Box::new(PopularityScorer(popularity(train))),
        Method::Baseline(b @ (Baseline::TagVoting | Baseline::NormalizedTagVoting)) => {
            Box::new(VotingScorer {
                counts: TagInvestCounts::new(train, InvestmentCount::Links),
                normalized: *b == Baseline::NormalizedTagVoting,
            })
        }
        Method::Baseline(Baseline::NeighborCf) => Box::new(NeighborCf::new(train)),
        Method::Baseline(Baseline::BprMf) => Box::new(BprScorer {
            model: train_bpr(train, &bpr.params)?,
            similarity: CompanySimilarity::new(train),
            investors: train.investors().clone(),
            k: bpr.k,
        }),
    })
}

/// A target resolved against the training investor index.
#[derive(Debug, Clone)]
pub struct EvalTarget {
    pub company: String,
    pub tags: TagSet,
    pub relevant: Vec<usize>,
}

/// Targets that survive relevance filtering, plus what was dropped.
#[derive(Debug, Clone)]
pub struct EvalTargets {
    pub investors: Arc<[String]>,
    pub targets: Vec<EvalTarget>,
    /// Relevant investors missing from training (cannot be ranked).
    pub dropped_relevant: usize,
    /// Targets left with no rankable relevant investor.
    pub excluded_targets: usize,
}

impl EvalTargets {
    pub fn from_split(split: &Split) -> Self {
        let investors = split.train.investors().clone();
        let mut dropped = 0;
        let mut excluded = 0;
        let mut targets = Vec::new();
        for t in &split.targets {
            let relevant: Vec<usize> = t
                .relevant
                .iter()
                .filter_map(|id| investors.binary_search(id).ok())
                .collect();
            dropped += t.relevant.len() - relevant.len();
            if relevant.is_empty() {
                excluded += 1;
                continue;
            }
            targets.push(EvalTarget {
                company: t.company.clone(),
                tags: t.tags.clone(),
                relevant,
            });
        }
        Self {
            investors,
            targets,
            dropped_relevant: dropped,
            excluded_targets: excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetRecord {
    pub company: String,
    /// Relative ranks `r / o`, one per rankable relevant investor.
    pub ranking_scores: Vec<f64>,
    pub auc: Option<f64>,
    /// Number of ranked investors.
    pub o: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub total_secs: f64,
    pub per_target_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub method: String,
    pub split_rule: String,
    /// Micro-average over (target, relevant investor) pairs.
    pub mean_rs: f64,
    /// Macro-average over targets with a defined AUC.
    pub mean_auc: f64,
    pub records: Vec<TargetRecord>,
    pub excluded_targets: usize,
    pub dropped_relevant: usize,
    pub timing: Timing,
}

impl EvaluationReport {
    pub fn n_pairs(&self) -> usize {
        self.records.iter().map(|r| r.ranking_scores.len()).sum()
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub bpr: BprSettings,
}

fn run_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

struct Aggregate {
    mean_rs: f64,
    mean_auc: f64,
}

fn aggregate(records: &[TargetRecord]) -> Aggregate {
    let (mut rs_sum, mut n) = (0.0, 0usize);
    let (mut auc_sum, mut n_auc) = (0.0, 0usize);
    for r in records {
        rs_sum += r.ranking_scores.iter().sum::<f64>();
        n += r.ranking_scores.len();
        if let Some(a) = r.auc {
            auc_sum += a;
            n_auc += 1;
        }
    }
    Aggregate {
        mean_rs: if n > 0 { rs_sum / n as f64 } else { f64::NAN },
        mean_auc: if n_auc > 0 { auc_sum / n_auc as f64 } else { f64::NAN },
    }
}

fn record(target: &EvalTarget, scores: &[f64]) -> TargetRecord {
    TargetRecord {
        company: target.company.clone(),
        ranking_scores: rank_scores(scores, &target.relevant),
        auc: auc_scores(scores, &target.relevant),
        o: scores.len(),
    }
}

/// Scores every evaluable target with an already prepared scorer.
pub fn evaluate_scorer(
    scorer: &dyn Scorer,
    label: &str,
    split: &Split,
    targets: &EvalTargets,
    workers: Option<usize>,
) -> Result<EvaluationReport> {
    if targets.targets.is_empty() {
        return Err(Error::NoEvaluableTargets);
    }
    if scorer.investors() != &targets.investors {
        return Err(Error::DimensionMismatch {
            expected: targets.investors.len(),
            found: scorer.investors().len(),
        });
    }
    let start = Instant::now();
    let records = run_pool(workers, || {
        targets
            .targets
            .par_iter()
            .map(|t| scorer.score(&t.tags).map(|sv| record(t, sv.scores())))
            .collect::<Result<Vec<_>>>()
    })??;
    let total = start.elapsed().as_secs_f64();
    let agg = aggregate(&records);
    Ok(EvaluationReport {
        method: label.to_string(),
        split_rule: split.rule.to_string(),
        mean_rs: agg.mean_rs,
        mean_auc: agg.mean_auc,
        records,
        excluded_targets: targets.excluded_targets,
        dropped_relevant: targets.dropped_relevant,
        timing: Timing {
            total_secs: total,
            per_target_secs: total / targets.targets.len() as f64,
        },
    })
}

/// Prepares `method` on the training data and evaluates it on every target.
/// Timing covers scoring only.
pub fn evaluate(method: &Method, split: &Split, options: &EvalOptions) -> Result<EvaluationReport> {
    let targets = EvalTargets::from_split(split);
    if targets.targets.is_empty() {
        return Err(Error::NoEvaluableTargets);
    }
    let scorer = prepare(method, &split.train, &options.bpr)?;
    evaluate_scorer(scorer.as_ref(), &method.label(), split, &targets, options.workers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub lambdas: Vec<f64>,
    pub max_reach: usize,
}

impl SweepGrid {
    /// `0, step, 2 step, ..., 1`.
    pub fn with_step(step: f64, max_reach: usize) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::InvalidConfig(format!("lambda step {step} not in (0, 1]")));
        }
        let n = (1.0 / step).round() as usize;
        let lambdas = (0..=n).map(|i| (i as f64 * step).min(1.0)).collect();
        Self::new(lambdas, max_reach)
    }

    pub fn new(lambdas: Vec<f64>, max_reach: usize) -> Result<Self> {
        if lambdas.is_empty() || lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::InvalidConfig("lambda grid must lie in [0, 1]".into()));
        }
        if max_reach == 0 {
            return Err(Error::InvalidConfig("max reach must be at least 1".into()));
        }
        Ok(Self { lambdas, max_reach })
    }
}

impl Default for SweepGrid {
    /// Lambda step 0.02, reach 1 to 7.
    fn default() -> Self {
        Self::with_step(0.02, 7).expect("valid default grid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub lambda: f64,
    pub reach: usize,
    pub mean_rs: f64,
    pub mean_auc: f64,
}

/// All grid cells for one (kernel, representation) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSeries {
    pub kernel: Kernel,
    pub representation: Representation,
    /// Ordered by lambda, then reach.
    pub cells: Vec<SweepCell>,
    pub seconds: f64,
}

impl SweepSeries {
    /// Lowest mean RS; equal values prefer smaller lambda, then smaller reach.
    pub fn best(&self) -> SweepCell {
        best_of(self.cells.iter())
    }

    pub fn best_at_reach(&self, reach: usize) -> Option<SweepCell> {
        let mut it = self.cells.iter().filter(|c| c.reach == reach).peekable();
        it.peek()?;
        Some(best_of(it))
    }

    pub fn cell(&self, lambda: f64, reach: usize) -> Option<SweepCell> {
        self.cells
            .iter()
            .find(|c| c.lambda == lambda && c.reach == reach)
            .copied()
    }
}

fn best_of<'a>(cells: impl Iterator<Item = &'a SweepCell>) -> SweepCell {
    let mut best: Option<SweepCell> = None;
    for c in cells {
        let better = match best {
            None => true,
            Some(b) => {
                c.mean_rs < b.mean_rs
                    || (c.mean_rs == b.mean_rs && (c.lambda, c.reach) < (b.lambda, b.reach))
            }
        };
        if better {
            best = Some(*c);
        }
    }
    best.expect("non-empty sweep")
}

/// Evaluates every (lambda, reach) cell of the grid for one kernel on one
/// representation. Each target is diffused once per lambda and read out at
/// every reach.
pub fn sweep_series(
    kernel: Kernel,
    representation: Representation,
    grid: &SweepGrid,
    split: &Split,
    targets: &EvalTargets,
    workers: Option<usize>,
) -> Result<SweepSeries> {
    if targets.targets.is_empty() {
        return Err(Error::NoEvaluableTargets);
    }
    let start = Instant::now();
    let graph = assemble(representation, &split.train);
    if graph.investors() != targets.investors {
        return Err(Error::DimensionMismatch {
            expected: targets.investors.len(),
            found: graph.investors().len(),
        });
    }
    let mut cells = Vec::with_capacity(grid.lambdas.len() * grid.max_reach);
    for &lambda in &grid.lambdas {
        // per target: one record per reach
        let per_target: Vec<Vec<TargetRecord>> = run_pool(workers, || {
            targets
                .targets
                .par_iter()
                .map_init(
                    || Diffuser::new(&graph),
                    |d, t| {
                        let by_reach = d.scores_by_reach(
                            t.tags.iter().map(String::as_str),
                            kernel,
                            lambda,
                            grid.max_reach,
                        )?;
                        Ok(by_reach.iter().map(|s| record(t, s)).collect())
                    },
                )
                .collect::<Result<Vec<_>>>()
        })??;
        for reach in 1..=grid.max_reach {
            let records: Vec<TargetRecord> =
                per_target.iter().map(|r| r[reach - 1].clone()).collect();
            let agg = aggregate(&records);
            cells.push(SweepCell {
                lambda,
                reach,
                mean_rs: agg.mean_rs,
                mean_auc: agg.mean_auc,
            });
        }
    }
    Ok(SweepSeries {
        kernel,
        representation,
        cells,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// A full comparison: diffusion sweeps plus baseline evaluations.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub split_rule: String,
    pub n_targets: usize,
    pub n_pairs: usize,
    pub excluded_targets: usize,
    pub series: Vec<SweepSeries>,
    pub baselines: Vec<EvaluationReport>,
}

pub fn sweep(
    kernels: &[Kernel],
    representations: &[Representation],
    baselines: &[Baseline],
    grid: &SweepGrid,
    split: &Split,
    options: &EvalOptions,
) -> Result<Comparison> {
    let targets = EvalTargets::from_split(split);
    if targets.targets.is_empty() {
        return Err(Error::NoEvaluableTargets);
    }
    let mut series = Vec::new();
    for &kernel in kernels {
        for &rep in representations {
            series.push(sweep_series(kernel, rep, grid, split, &targets, options.workers)?);
        }
    }
    let mut reports = Vec::new();
    for &b in baselines {
        let method = Method::Baseline(b);
        let scorer = prepare(&method, &split.train, &options.bpr)?;
        reports.push(evaluate_scorer(
            scorer.as_ref(),
            b.label(),
            split,
            &targets,
            options.workers,
        )?);
    }
    Ok(Comparison {
        split_rule: split.rule.to_string(),
        n_targets: targets.targets.len(),
        n_pairs: targets.targets.iter().map(|t| t.relevant.len()).sum(),
        excluded_targets: targets.excluded_targets,
        series,
        baselines: reports,
    })
}

/// Where the lowest mean RS of a comparison sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BestCell {
    Series(usize),
    Baseline(usize),
}

impl Comparison {
    pub fn series_for(&self, kernel: Kernel, rep: Representation) -> Option<&SweepSeries> {
        self.series
            .iter()
            .find(|s| s.kernel == kernel && s.representation == rep)
    }

    pub fn baseline(&self, b: Baseline) -> Option<&EvaluationReport> {
        self.baselines.iter().find(|r| r.method == b.label())
    }

    /// The single best entry across optimized series and baselines; earlier
    /// entries win exact ties.
    pub fn global_best(&self) -> Option<BestCell> {
        let mut best: Option<(f64, BestCell)> = None;
        let candidates = self
            .series
            .iter()
            .enumerate()
            .map(|(i, s)| (s.best().mean_rs, BestCell::Series(i)))
            .chain(
                self.baselines
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (r.mean_rs, BestCell::Baseline(i))),
            );
        for (rs, cell) in candidates {
            if best.is_none_or(|(b, _)| rs < b) {
                best = Some((rs, cell));
            }
        }
        best.map(|(_, c)| c)
    }

    /// Aligned text table: rows are kernel/reach, columns representations;
    /// cells hold mean RS with the optimal lambda (and reach).
    pub fn to_text(&self) -> String {
        let mut reps: Vec<Representation> = Vec::new();
        let mut kernels: Vec<Kernel> = Vec::new();
        for s in &self.series {
            if !reps.contains(&s.representation) {
                reps.push(s.representation);
            }
            if !kernels.contains(&s.kernel) {
                kernels.push(s.kernel);
            }
        }
        let best = self.global_best();
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["method".to_string()];
        header.extend(reps.iter().map(|r| r.label().to_string()));
        rows.push(header);

        for &kernel in &kernels {
            let max_reach = self
                .series
                .iter()
                .filter(|s| s.kernel == kernel)
                .flat_map(|s| s.cells.iter().map(|c| c.reach))
                .max()
                .unwrap_or(0);
            for reach in 1..=max_reach {
                let mut row = vec![format!("{kernel} reach={reach}")];
                for &rep in &reps {
                    row.push(
                        self.series_for(kernel, rep)
                            .and_then(|s| s.best_at_reach(reach))
                            .map_or("-".into(), |c| {
                                format!("{:.5} l*={:.2}", c.mean_rs, c.lambda)
                            }),
                    );
                }
                rows.push(row);
            }
            let mut row = vec![format!("{kernel} reach*")];
            for &rep in &reps {
                let idx = self
                    .series
                    .iter()
                    .position(|s| s.kernel == kernel && s.representation == rep);
                row.push(idx.map_or("-".into(), |i| {
                    let c = self.series[i].best();
                    let mark = if best == Some(BestCell::Series(i)) { " *" } else { "" };
                    format!("{:.5} l*={:.2} r*={}{mark}", c.mean_rs, c.lambda, c.reach)
                }));
            }
            rows.push(row);
        }
        for (i, r) in self.baselines.iter().enumerate() {
            let mark = if best == Some(BestCell::Baseline(i)) { " *" } else { "" };
            let mut row = vec![r.method.clone(), format!("{:.5}{mark}", r.mean_rs)];
            row.resize(reps.len() + 1, String::new());
            rows.push(row);
        }

        let widths: Vec<usize> = (0..rows[0].len())
            .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let _ = writeln!(out, "# mean ranking score (lower is better); * marks the best entry");
        let _ = writeln!(
            out,
            "# split {}  targets {}  pairs {}  excluded {}",
            self.split_rule, self.n_targets, self.n_pairs, self.excluded_targets
        );
        for row in rows {
            let line = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect::<Vec<_>>()
                .join("  ");
            let _ = writeln!(out, "{}", line.trim_end());
        }
        out
    }

    /// One tab-separated line per grid cell and per baseline.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("kernel\trepresentation\tlambda\treach\tmean_rs\tmean_auc\tbest\n");
        let best = self.global_best();
        for (i, s) in self.series.iter().enumerate() {
            let series_best = s.best();
            for c in &s.cells {
                let flag = if best == Some(BestCell::Series(i)) && *c == series_best {
                    "1"
                } else {
                    "0"
                };
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{:.10}\t{:.10}\t{flag}",
                    s.kernel, s.representation, c.lambda, c.reach, c.mean_rs, c.mean_auc
                );
            }
        }
        for (i, r) in self.baselines.iter().enumerate() {
            let flag = if best == Some(BestCell::Baseline(i)) { "1" } else { "0" };
            let _ = writeln!(
                out,
                "{}\t-\t-\t-\t{:.10}\t{:.10}\t{flag}",
                r.method, r.mean_rs, r.mean_auc
            );
        }
        out
    }

    /// Wall-clock timing, kept apart from the deterministic tables.
    pub fn timing_tsv(&self) -> String {
        let mut out = String::from("entry\tseconds_total\tseconds_per_target\n");
        for s in &self.series {
            // one diffusion per (target, lambda)
            let runs = s.cells.iter().filter(|c| c.reach == 1).count() * self.n_targets;
            let _ = writeln!(
                out,
                "{} {}\t{:.6}\t{:.9}",
                s.kernel,
                s.representation,
                s.seconds,
                s.seconds / runs.max(1) as f64
            );
        }
        for r in &self.baselines {
            let _ = writeln!(
                out,
                "{}\t{:.6}\t{:.9}",
                r.method, r.timing.total_secs, r.timing.per_target_secs
            );
        }
        out
    }
}

impl EvaluationReport {
    /// Key-value summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method\t{}", self.method);
        let _ = writeln!(out, "split\t{}", self.split_rule);
        let _ = writeln!(out, "targets\t{}", self.records.len());
        let _ = writeln!(out, "pairs\t{}", self.n_pairs());
        let _ = writeln!(out, "excluded_targets\t{}", self.excluded_targets);
        let _ = writeln!(out, "dropped_relevant\t{}", self.dropped_relevant);
        let _ = writeln!(out, "mean_rs\t{:.10}", self.mean_rs);
        let _ = writeln!(out, "mean_auc\t{:.10}", self.mean_auc);
        out
    }

    /// Per-target tab-separated details.
    pub fn records_tsv(&self) -> String {
        let mut out = String::from("company\to\tn_relevant\tmean_rs\tauc\n");
        for r in &self.records {
            let mean = r.ranking_scores.iter().sum::<f64>() / r.ranking_scores.len() as f64;
            let auc = r.auc.map_or("-".to_string(), |a| format!("{a:.10}"));
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{mean:.10}\t{auc}",
                r.company,
                r.o,
                r.ranking_scores.len()
            );
        }
        out
    }
}
