//! Acceptance suite. Every check prints a single `PASS` / `FAIL` line.

mod oracle;

use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use startup_match::baselines::{
    neighbor_cf, normalized_tag_voting, CompanySimilarity, InvestmentCount, TagInvestCounts,
};
use startup_match::bprmf::{map_new_company, train_bpr, BprParams, FactorModel};
use startup_match::dataset::{temporal_split, Corpus, InvestmentEvent, Split, SplitRule, TagSet};
use startup_match::diffusion::{
    self, heats_step, probs_step, probs_step_unsplit, DiffusionState, Kernel, KernelConfig,
};
use startup_match::eval::{
    auc_scores, evaluate, evaluate_scorer, prepare, rank_scores, sweep, sweep_series, Baseline,
    BprSettings, EvalOptions, EvalTargets, Method, SweepGrid,
};
use startup_match::fixtures;
use startup_match::graph::{assemble, BipartiteAdjacency, Representation, TripartiteGraph};
use startup_match::synth::{generate, SynthConfig};
use startup_match::analysis::{favorite_tag_dominance, mean_p};

fn verdict(id: u32, name: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {status} {name}: {detail}");
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn ids(prefix: &str, n: usize) -> Arc<[String]> {
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

fn random_graph(rng: &mut ChaCha8Rng, rep: Representation) -> TripartiteGraph {
    let nl = rng.random_range(1..=16);
    let nm = rng.random_range(1..=17);
    let nr = rng.random_range(1..=16);
    let density = rng.random_range(0.1..0.6);
    let weight = |rng: &mut ChaCha8Rng| {
        if rep.is_weighted() {
            rng.random_range(1..=4) as f64
        } else {
            1.0
        }
    };
    let mut lm = Vec::new();
    for x in 0..nl {
        for y in 0..nm {
            if rng.random::<f64>() < density {
                lm.push((x, y, weight(rng)));
            }
        }
    }
    let mut mr = Vec::new();
    for y in 0..nm {
        for z in 0..nr {
            if rng.random::<f64>() < density {
                mr.push((y, z, weight(rng)));
            }
        }
    }
    let (l, m, r) = (ids("l", nl), ids("m", nm), ids("r", nr));
    TripartiteGraph::from_parts(
        rep,
        BipartiteAdjacency::from_entries(l, m.clone(), lm).unwrap(),
        BipartiteAdjacency::from_entries(m, r, mr).unwrap(),
    )
    .unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, g: &TripartiteGraph) -> DiffusionState {
    let mut s = DiffusionState::zeros(g);
    for v in s.left.iter_mut().chain(&mut s.middle).chain(&mut s.right) {
        if rng.random::<f64>() < 0.5 {
            *v = rng.random::<f64>();
        }
    }
    s
}

#[test]
fn criterion_01_sparse_kernels_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut checks = 0usize;
    for i in 0..100 {
        let rep = Representation::ALL[i % Representation::ALL.len()];
        let g = random_graph(&mut rng, rep);
        assert!(g.n_left() + g.n_middle() + g.n_right() <= 50);
        let dense = oracle::Dense::from_graph(&g);
        let start = random_state(&mut rng, &g);
        for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let (mut sp, mut dp) = (start.clone(), start.clone());
            let (mut sh, mut dh) = (start.clone(), start.clone());
            for _ in 1..=8 {
                sp = probs_step(&g, &sp, lambda).unwrap();
                dp = oracle::probs(&dense, &dp, lambda, 1.0 - lambda);
                sh = heats_step(&g, &sh, lambda).unwrap();
                dh = oracle::heats(&dense, &dh, lambda);
                worst = worst
                    .max(oracle::max_abs_diff(&sp, &dp))
                    .max(oracle::max_abs_diff(&sh, &dh));
                checks += 2;
            }
        }
    }
    verdict(
        1,
        "sparse ProbS/HeatS equal dense oracle",
        worst <= 1e-12,
        &format!("{checks} step comparisons, max |error| {worst:.3e}"),
    );
}

fn identity_corpus() -> Corpus {
    generate(&SynthConfig {
        n_investors: 1200,
        n_companies: 4000,
        n_tags: 200,
        seed: 77,
        ..SynthConfig::default()
    })
    .unwrap()
}

#[test]
fn criterion_02_cit_reach_one_equals_normalized_tag_voting() {
    let corpus = identity_corpus();
    let split = temporal_split(&corpus, SplitRule::Fraction(0.85)).unwrap();
    let g = assemble(Representation::CitWeighted, &split.train);
    let counts = TagInvestCounts::new(&split.train, InvestmentCount::Links);
    let mut worst: f64 = 0.0;
    for t in &split.targets {
        for lambda in [0.0, 0.5, 0.82] {
            let cfg = KernelConfig::new(Kernel::ProbS, lambda, 1).unwrap();
            let d = diffusion::score(&g, t.tags.iter().map(String::as_str), &cfg).unwrap();
            let v = normalized_tag_voting(&counts, &t.tags);
            for (a, b) in d.scores().iter().zip(v.scores()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let opts = EvalOptions::default();
    let probs = evaluate(
        &Method::diffusion(Kernel::ProbS, Representation::CitWeighted, 0.82, 1).unwrap(),
        &split,
        &opts,
    )
    .unwrap();
    let voting = evaluate(&Method::Baseline(Baseline::NormalizedTagVoting), &split, &opts).unwrap();
    let n = split.targets.len();
    verdict(
        2,
        "CIT-w ProbS reach 1 equals normalized tag voting",
        n >= 500
            && worst <= 1e-9
            && probs.mean_rs == voting.mean_rs
            && probs.mean_auc == voting.mean_auc,
        &format!(
            "{n} targets, max |diff| {worst:.3e}, mean RS {:.6} vs {:.6}",
            probs.mean_rs, voting.mean_rs
        ),
    );
}

fn tags(v: &[&str]) -> TagSet {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn criterion_03_toy_a_hand_calculations() {
    let train = Corpus::from_events(fixtures::toy_a_train()).unwrap();
    let target = tags(&["T1", "T2"]);
    let run = |rep, lambda| {
        let g = assemble(rep, &train);
        let cfg = KernelConfig::new(Kernel::ProbS, lambda, 1).unwrap();
        diffusion::score(&g, target.iter().map(String::as_str), &cfg)
            .unwrap()
            .into_scores()
    };
    let tci = run(Representation::Tci, 0.5);
    let cit = run(Representation::CitWeighted, 0.5);
    let cf = neighbor_cf(&train, &target).into_scores();
    let r = 0.5f64.sqrt();
    let expected = [
        (tci.clone(), vec![0.375, 0.625]),
        (cit.clone(), vec![5.0 / 6.0, 7.0 / 6.0]),
        (cf.clone(), vec![1.0 / (1.0 + r), 1.0]),
    ];
    let worst = expected
        .iter()
        .flat_map(|(got, want)| got.iter().zip(want).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    verdict(
        3,
        "Toy-A hand calculations",
        worst <= 1e-12 && (cf[0] - 0.5858).abs() < 5e-5,
        &format!("TCI {tci:?}, CIT-w {cit:?}, neighbor-CF {cf:?}, max |error| {worst:.3e}"),
    );
}

/// Random graph whose middle nodes each touch exactly one side and whose
/// outer nodes all have a neighbor.
fn one_sided_graph(rng: &mut ChaCha8Rng) -> TripartiteGraph {
    loop {
        let nl = rng.random_range(1..=10);
        let nm = rng.random_range(2..=20);
        let nr = rng.random_range(1..=10);
        let mut lm = Vec::new();
        let mut mr = Vec::new();
        for y in 0..nm {
            let left = rng.random::<bool>();
            let n_outer = if left { nl } else { nr };
            let first = rng.random_range(0..n_outer);
            for o in 0..n_outer {
                if o == first || rng.random::<f64>() < 0.3 {
                    let w = rng.random_range(1..=3) as f64;
                    if left {
                        lm.push((o, y, w));
                    } else {
                        mr.push((y, o, w));
                    }
                }
            }
        }
        let lm = BipartiteAdjacency::from_entries(ids("l", nl), ids("m", nm), lm).unwrap();
        let mr = BipartiteAdjacency::from_entries(ids("m", nm), ids("r", nr), mr).unwrap();
        let covered = (0..nl).all(|x| lm.row_degree(x) > 0) && (0..nr).all(|z| mr.col_degree(z) > 0);
        if covered {
            return TripartiteGraph::from_parts(Representation::CitWeighted, lm, mr).unwrap();
        }
    }
}

#[test]
fn criterion_04_conservation_and_one_sided_leak() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_conservation: f64 = 0.0;
    for _ in 0..100 {
        let g = one_sided_graph(&mut rng);
        let mut s = random_state(&mut rng, &g);
        let total = s.total();
        for l in s.left.iter_mut().chain(&mut s.middle).chain(&mut s.right) {
            *l /= total.max(f64::MIN_POSITIVE);
        }
        let start = s.total();
        for _ in 0..8 {
            s = probs_step_unsplit(&g, &s).unwrap();
            worst_conservation = worst_conservation.max((s.total() - start).abs());
        }
    }

    // a middle node with neighbors on one side only loses the other side's share
    let mut worst_leak: f64 = 0.0;
    for (lambda, f, left_only) in [(0.3, 1.0, true), (0.3, 0.7, false), (0.82, 2.5, true), (0.0, 1.0, true), (1.0, 1.0, false)] {
        let (l, m, r) = (ids("l", 2), ids("m", 2), ids("r", 2));
        // m00 is one-sided, m01 links both sides
        let (lm, mr) = if left_only {
            (vec![(0, 0, 1.0), (1, 0, 2.0), (0, 1, 1.0)], vec![(1, 0, 1.0)])
        } else {
            (vec![(0, 1, 1.0)], vec![(0, 0, 1.0), (0, 1, 3.0), (1, 1, 1.0)])
        };
        let g = TripartiteGraph::from_parts(
            Representation::CitWeighted,
            BipartiteAdjacency::from_entries(l, m.clone(), lm).unwrap(),
            BipartiteAdjacency::from_entries(m, r, mr).unwrap(),
        )
        .unwrap();
        let mut s = DiffusionState::zeros(&g);
        s.middle[0] = f;
        let next = probs_step(&g, &s, lambda).unwrap();
        let expected_leak = if left_only { (1.0 - lambda) * f } else { lambda * f };
        worst_leak = worst_leak.max(((f - next.total()) - expected_leak).abs());
    }
    verdict(
        4,
        "resource conservation and one-sided leak",
        worst_conservation <= 1e-12 && worst_leak <= 1e-12,
        &format!(
            "max conservation drift {worst_conservation:.3e}, max leak error {worst_leak:.3e}"
        ),
    );
}

#[test]
fn criterion_05_metric_sanity() {
    let corpus = identity_corpus();
    let split = temporal_split(&corpus, SplitRule::Fraction(0.9)).unwrap();
    let targets = EvalTargets::from_split(&split);
    let o = targets.investors.len();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut sum, mut n) = (0.0, 0usize);
    for t in &targets.targets {
        let scores: Vec<f64> = (0..o).map(|_| rng.random::<f64>()).collect();
        let rs = rank_scores(&scores, &t.relevant);
        n += rs.len();
        sum += rs.iter().sum::<f64>();
    }
    let random_rs = sum / n as f64;

    let g = assemble(Representation::CitWeighted, &split.train);
    let transforms: [fn(f64) -> f64; 3] = [
        |x| 10.0 * x + 3.0,
        |x| x.exp() * 20.0,
        |x| 50.0 * x + x * x * x,
    ];
    let mut invariant = true;
    for t in &targets.targets {
        let cfg = KernelConfig::new(Kernel::ProbS, 0.5, 2).unwrap();
        let sv = diffusion::score(&g, t.tags.iter().map(String::as_str), &cfg).unwrap();
        let base_rs = rank_scores(sv.scores(), &t.relevant);
        let base_auc = auc_scores(sv.scores(), &t.relevant);
        for f in transforms {
            let moved: Vec<f64> = sv.scores().iter().map(|&x| f(x)).collect();
            invariant &= rank_scores(&moved, &t.relevant) == base_rs;
            invariant &= auc_scores(&moved, &t.relevant) == base_auc;
        }
    }
    let tied = auc_scores(&vec![0.25; 40], &[1, 7, 9]);
    verdict(
        5,
        "metric sanity",
        targets.targets.len() >= 200
            && (0.45..=0.55).contains(&random_rs)
            && invariant
            && tied == Some(0.5),
        &format!(
            "{} targets, random-score mean RS {random_rs:.4}, transform invariant {invariant}, all-tie AUC {tied:?}",
            targets.targets.len()
        ),
    );
}

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const SPLITS: [f64; 3] = [0.85, 0.9, 0.95];

fn qualitative_config(seed: u64) -> SynthConfig {
    SynthConfig {
        n_investors: 2000,
        n_companies: 5200,
        preference_strength: 0.6,
        seed,
        ..SynthConfig::default()
    }
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    probs_cit: f64,
    probs_tci: f64,
    heats_cit: f64,
    popularity: f64,
}

struct Qualitative {
    n_investors: usize,
    n_companies: usize,
    /// Indexed `[split][seed]`.
    outcomes: Vec<Vec<Outcome>>,
}

fn qualitative() -> &'static Qualitative {
    static CELL: OnceLock<Qualitative> = OnceLock::new();
    CELL.get_or_init(|| {
        let grid = SweepGrid::with_step(0.25, 3).unwrap();
        let mut outcomes = vec![Vec::new(); SPLITS.len()];
        let (mut n_investors, mut n_companies) = (usize::MAX, usize::MAX);
        for seed in SEEDS {
            let corpus = generate(&qualitative_config(seed)).unwrap();
            n_investors = n_investors.min(corpus.n_investors());
            n_companies = n_companies.min(corpus.n_companies());
            for (i, &p) in SPLITS.iter().enumerate() {
                let split = temporal_split(&corpus, SplitRule::Fraction(p)).unwrap();
                let targets = EvalTargets::from_split(&split);
                let best = |kernel, rep| {
                    sweep_series(kernel, rep, &grid, &split, &targets, None)
                        .unwrap()
                        .best()
                        .mean_rs
                };
                let pop = prepare(&Method::Baseline(Baseline::Popularity), &split.train, &BprSettings::default())
                    .unwrap();
                outcomes[i].push(Outcome {
                    probs_cit: best(Kernel::ProbS, Representation::CitWeighted),
                    probs_tci: best(Kernel::ProbS, Representation::Tci),
                    heats_cit: best(Kernel::HeatS, Representation::CitWeighted),
                    popularity: evaluate_scorer(pop.as_ref(), "popularity", &split, &targets, None)
                        .unwrap()
                        .mean_rs,
                });
            }
        }
        Qualitative {
            n_investors,
            n_companies,
            outcomes,
        }
    })
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Each competitor's mean RS must exceed ProbS CIT-w's by more than the
/// standard error of the per-seed paired difference.
fn ordering(outcomes: &[Outcome]) -> (bool, String) {
    let cit: Vec<f64> = outcomes.iter().map(|o| o.probs_cit).collect();
    let (cit_mean, cit_se) = mean_se(&cit);
    let mut ok = true;
    let mut detail = format!("ProbS CIT-w {cit_mean:.5}±{cit_se:.5}");
    let rivals: [(&str, fn(&Outcome) -> f64); 3] = [
        ("ProbS TCI", |o| o.probs_tci),
        ("HeatS CIT-w", |o| o.heats_cit),
        ("popularity", |o| o.popularity),
    ];
    for (name, get) in rivals {
        let rival: Vec<f64> = outcomes.iter().map(get).collect();
        let diffs: Vec<f64> = rival.iter().zip(&cit).map(|(r, c)| r - c).collect();
        let (margin, se) = mean_se(&diffs);
        ok &= margin > se;
        detail.push_str(&format!(
            "; {name} {:.5} (margin {margin:.5}, paired SE {se:.5})",
            mean_se(&rival).0
        ));
    }
    (ok, detail)
}

#[test]
fn criterion_06_qualitative_ordering_on_synthetic_corpus() {
    let q = qualitative();
    let at_90 = SPLITS.iter().position(|&p| p == 0.9).unwrap();
    let (ok, detail) = ordering(&q.outcomes[at_90]);
    verdict(
        6,
        "synthetic ordering at 90/10",
        ok && q.n_investors >= 2000 && q.n_companies >= 5000,
        &format!(
            "{} investors, {} companies, {} seeds: {detail}",
            q.n_investors,
            q.n_companies,
            SEEDS.len()
        ),
    );
}

#[test]
fn criterion_07_preference_analysis() {
    let base = SynthConfig {
        n_investors: 600,
        n_companies: 2000,
        n_tags: 120,
        ..SynthConfig::default()
    };
    let mut all_one = true;
    let mut means = Vec::new();
    for pi in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let mut sum = 0.0;
        for seed in SEEDS {
            let c = generate(&SynthConfig {
                preference_strength: pi,
                seed,
                ..base.clone()
            })
            .unwrap();
            let profiles = favorite_tag_dominance(&c, 5);
            if pi == 1.0 {
                all_one &= !profiles.is_empty() && profiles.iter().all(|p| p.p == 1.0);
            }
            sum += mean_p(&profiles).unwrap();
        }
        means.push(sum / SEEDS.len() as f64);
    }
    let monotone = means.windows(2).all(|w| w[0] <= w[1]);
    verdict(
        7,
        "preference dominance",
        all_one && monotone,
        &format!("P = 1 at full preference: {all_one}; mean P over pi grid {means:.4?}"),
    );
}

/// Held-out (investor, positive, negative) triples; negatives avoid every
/// company the investor backed anywhere in `full`.
fn held_out_triples(
    model: &FactorModel,
    held: &Corpus,
    full: &Corpus,
    n: usize,
    seed: u64,
) -> Vec<(usize, usize, usize)> {
    let portfolios = full.portfolios();
    let positives: Vec<(usize, usize)> = held
        .links()
        .into_iter()
        .filter_map(|(x, c)| Some((model.investor_index(x)?, model.company_index(c)?)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_companies = model.companies().len();
    let mut out = Vec::with_capacity(n);
    while out.len() < n && !positives.is_empty() {
        let (x, a) = positives[rng.random_range(0..positives.len())];
        let b = rng.random_range(0..n_companies);
        if !portfolios[model.investors()[x].as_str()].contains(model.companies()[b].as_str()) {
            out.push((x, a, b));
        }
    }
    out
}

#[test]
fn criterion_08_bpr_contract() {
    // one tag per company and a strong preference give the factors shared
    // structure to recover
    let corpus = generate(&SynthConfig {
        n_investors: 400,
        n_companies: 300,
        n_tags: 10,
        tags_per_company: 1.0,
        max_activity: Some(100),
        preference_strength: 0.9,
        seed: 8,
        ..SynthConfig::default()
    })
    .unwrap();
    // hold out every tenth distinct link
    let links: Vec<(String, String)> = corpus
        .links()
        .into_iter()
        .map(|(x, c)| (x.to_string(), c.to_string()))
        .collect();
    let held: BTreeSet<&(String, String)> = links.iter().skip(9).step_by(10).collect();
    let (mut train_events, mut held_events) = (Vec::new(), Vec::new());
    for e in corpus.events() {
        if held.contains(&(e.investor.clone(), e.company.clone())) {
            held_events.push(e.clone());
        } else {
            train_events.push(e.clone());
        }
    }
    let train = Corpus::from_events(train_events).unwrap();
    let held = Corpus::from_events(held_events).unwrap();
    let params = BprParams {
        seed: 17,
        ..BprParams::default()
    };
    let a = train_bpr(&train, &params).unwrap();
    let b = train_bpr(&train, &params).unwrap();
    let reproducible = a.to_json().unwrap() == b.to_json().unwrap();
    let init = train_bpr(
        &train,
        &BprParams {
            samples: Some(0),
            ..params.clone()
        },
    )
    .unwrap();
    let triples = held_out_triples(&a, &held, &corpus, 5000, 3);
    let (before, after) = (init.objective(&triples), a.objective(&triples));

    // the unique neighbor with similarity 1 is the only company sharing a tag
    let d = |day| chrono::NaiveDate::from_ymd_opt(2021, 3, day).unwrap();
    let small = Corpus::from_events(vec![
        InvestmentEvent::new("X1", "A", ["x", "y"], d(1)).unwrap(),
        InvestmentEvent::new("X2", "B", ["z"], d(2)).unwrap(),
        InvestmentEvent::new("X2", "C", ["w", "z"], d(3)).unwrap(),
        InvestmentEvent::new("X3", "B", ["z"], d(4)).unwrap(),
    ])
    .unwrap();
    let model = train_bpr(&small, &BprParams { samples: Some(500), ..params }).unwrap();
    let phi = map_new_company(&model, &CompanySimilarity::new(&small), &tags(&["x", "y"]), 6).unwrap();
    let exact = phi == model.company_factor(model.company_index("A").unwrap());

    verdict(
        8,
        "BPR-MF contract",
        reproducible && triples.len() == 5000 && after > before && exact,
        &format!(
            "bit-reproducible {reproducible}; held-out objective {before:.5} -> {after:.5} on {} triples; exact neighbor mapping {exact}",
            triples.len()
        ),
    );
}

#[test]
fn criterion_09_split_robustness() {
    let q = qualitative();
    let mut ok = true;
    let mut details = Vec::new();
    for (i, p) in SPLITS.iter().enumerate() {
        let (good, detail) = ordering(&q.outcomes[i]);
        ok &= good;
        details.push(format!("train fraction {p}: {detail}"));
    }
    verdict(9, "ordering holds at every split", ok, &details.join(" | "));
}

fn pipeline_reports(workers: usize) -> String {
    let corpus = generate(&SynthConfig {
        n_investors: 300,
        n_companies: 900,
        n_tags: 60,
        seed: 10,
        ..SynthConfig::default()
    })
    .unwrap();
    let split: Split = temporal_split(&corpus, SplitRule::Fraction(0.9)).unwrap();
    let options = EvalOptions {
        workers: Some(workers),
        bpr: BprSettings::default(),
    };
    let grid = SweepGrid::with_step(0.25, 3).unwrap();
    let cmp = sweep(
        &[Kernel::ProbS, Kernel::HeatS],
        &Representation::ALL,
        &Baseline::ALL,
        &grid,
        &split,
        &options,
    )
    .unwrap();
    let mut out = cmp.to_text();
    out.push_str(&cmp.to_tsv());
    for b in &cmp.baselines {
        out.push_str(&b.to_text());
        out.push_str(&b.records_tsv());
    }
    out
}

#[test]
fn criterion_10_determinism_across_worker_counts() {
    let reference = pipeline_reports(1);
    let same = [1, 2, 4].iter().all(|&w| pipeline_reports(w) == reference);
    verdict(
        10,
        "byte-identical reports",
        same,
        &format!("{} bytes of report compared for 1, 2 and 4 workers", reference.len()),
    );
}
