//! Non-iterative reference scorers: popularity, tag voting, normalized tag
//! voting and item-based collaborative filtering over tag cosine similarity.

use std::sync::Arc;

use crate::dataset::{Corpus, TagSet};
use crate::graph::{build_company_tag, build_investor_company, build_virtual_investor_tag, BipartiteAdjacency};
use crate::scores::ScoreVector;

/// How the per-tag investment total `N` is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InvestmentCount {
    /// Distinct (investor, company) links into companies carrying the tag.
    #[default]
    Links,
    /// Raw events into companies carrying the tag.
    Events,
}

/// `n(x, t)`: distinct companies investor `x` backed that carry tag `t`;
/// `N(t)`: total investments received by companies carrying `t`.
#[derive(Debug, Clone)]
pub struct TagInvestCounts {
    per_investor: BipartiteAdjacency,
    totals: Vec<f64>,
}

impl TagInvestCounts {
    pub fn new(train: &Corpus, count: InvestmentCount) -> Self {
        let per_investor = build_virtual_investor_tag(train, true);
        let totals = match count {
            InvestmentCount::Links => per_investor.col_sums().to_vec(),
            InvestmentCount::Events => {
                let mut totals = vec![0.0; per_investor.n_cols()];
                for e in train.events() {
                    for t in &train.tag_catalog()[&e.company] {
                        let j = per_investor.col_index(t).expect("catalog tag");
                        totals[j] += 1.0;
                    }
                }
                totals
            }
        };
        Self {
            per_investor,
            totals,
        }
    }

    pub fn investors(&self) -> &Arc<[String]> {
        self.per_investor.rows()
    }

    pub fn n(&self, investor: &str, tag: &str) -> f64 {
        match (self.per_investor.row_index(investor), self.per_investor.col_index(tag)) {
            (Some(i), Some(j)) => self.per_investor.weight(i, j),
            _ => 0.0,
        }
    }

    pub fn total(&self, tag: &str) -> f64 {
        self.per_investor
            .col_index(tag)
            .map_or(0.0, |j| self.totals[j])
    }

    fn vote<F>(&self, target_tags: &TagSet, name: &str, weight: F) -> ScoreVector
    where
        F: Fn(f64, f64) -> f64,
    {
        let mut scores = vec![0.0; self.per_investor.n_rows()];
        for tag in target_tags {
            let Some(j) = self.per_investor.col_index(tag) else {
                continue;
            };
            let total = self.totals[j];
            for (x, n) in self.per_investor.col(j) {
                scores[x] += weight(n, total);
            }
        }
        ScoreVector::new(self.investors().clone(), scores, name).expect("one score per investor")
    }
}

/// Number of distinct companies each investor backed; identical for every
/// target.
pub fn popularity(train: &Corpus) -> ScoreVector {
    let adj = build_investor_company(train);
    let scores = (0..adj.n_rows()).map(|i| adj.row_degree(i) as f64).collect();
    ScoreVector::new(adj.rows().clone(), scores, "popularity").expect("one score per investor")
}

/// `s(x) = sum over target tags t of n(x, t)`.
pub fn tag_voting(counts: &TagInvestCounts, target_tags: &TagSet) -> ScoreVector {
    counts.vote(target_tags, "tag-voting", |n, _| n)
}

/// `s(x) = sum over target tags t of n(x, t) / N(t)`; tags with `N = 0` add
/// nothing.
pub fn normalized_tag_voting(counts: &TagInvestCounts, target_tags: &TagSet) -> ScoreVector {
    counts.vote(target_tags, "normalized-tag-voting", |n, total| {
        if total > 0.0 {
            n / total
        } else {
            0.0
        }
    })
}

/// Cosine similarity of two tag sets: `|a ∩ b| / sqrt(|a| |b|)`.
pub fn tag_cosine(a: &TagSet, b: &TagSet) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let common = a.intersection(b).count();
    common as f64 / ((a.len() * b.len()) as f64).sqrt()
}

/// Tag-cosine similarity of a new company to every training company.
#[derive(Debug, Clone)]
pub struct CompanySimilarity {
    company_tag: BipartiteAdjacency,
}

impl CompanySimilarity {
    pub fn new(train: &Corpus) -> Self {
        Self {
            company_tag: build_company_tag(train),
        }
    }

    pub fn companies(&self) -> &Arc<[String]> {
        self.company_tag.rows()
    }

    /// Similarity per training company, in sorted company order. Unknown
    /// target tags still count toward `|T(a)|`.
    pub fn similarities(&self, target_tags: &TagSet) -> Vec<f64> {
        let adj = &self.company_tag;
        let mut common = vec![0usize; adj.n_rows()];
        for tag in target_tags {
            if let Some(j) = adj.col_index(tag) {
                for (c, _) in adj.col(j) {
                    common[c] += 1;
                }
            }
        }
        let na = target_tags.len();
        common
            .iter()
            .enumerate()
            .map(|(c, &k)| {
                if k == 0 {
                    0.0
                } else {
                    k as f64 / ((na * adj.row_degree(c)) as f64).sqrt()
                }
            })
            .collect()
    }
}

/// Item-based collaborative filtering: similarity-weighted share of the
/// training companies each investor backed.
#[derive(Debug, Clone)]
pub struct NeighborCf {
    similarity: CompanySimilarity,
    /// rows: companies, cols: investors
    backers: BipartiteAdjacency,
}

impl NeighborCf {
    pub fn new(train: &Corpus) -> Self {
        Self {
            similarity: CompanySimilarity::new(train),
            backers: build_investor_company(train).transpose(),
        }
    }

    pub fn investors(&self) -> &Arc<[String]> {
        self.backers.cols()
    }

    pub fn score(&self, target_tags: &TagSet) -> ScoreVector {
        let sims = self.similarity.similarities(target_tags);
        let mut scores = vec![0.0; self.backers.n_cols()];
        let mut denom = 0.0;
        for (c, &sim) in sims.iter().enumerate() {
            if sim == 0.0 {
                continue;
            }
            denom += sim;
            for (x, a) in self.backers.row(c) {
                scores[x] += sim * a;
            }
        }
        if denom > 0.0 {
            for s in &mut scores {
                *s /= denom;
            }
        }
        ScoreVector::new(self.investors().clone(), scores, "neighbor-cf").expect("one score per investor")
    }
}

pub fn neighbor_cf(train: &Corpus, target_tags: &TagSet) -> ScoreVector {
    NeighborCf::new(train).score(target_tags)
}
