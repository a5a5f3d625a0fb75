//! Investor domain-preference statistics.
//!
//! For every investor with enough distinct companies: the favorite tag
//! `T*`, the share `P` of companies carrying it, and the share `P'` of
//! companies inside the largest component of the "shares a tag" graph on
//! the investor's portfolio.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::dataset::{Corpus, TagSet};

pub const DEFAULT_MIN_COMPANIES: usize = 5;
pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceProfile {
    pub investor: String,
    pub favorite_tag: String,
    pub p: f64,
    pub p_prime: f64,
    pub n_companies: usize,
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }

    pub fn largest(&self) -> usize {
        (0..self.parent.len())
            .filter(|&i| self.parent[i] == i)
            .map(|i| self.size[i])
            .max()
            .unwrap_or(0)
    }
}

/// Most frequent tag over `portfolio` (distinct companies), ties to the
/// smallest id, and the number of companies carrying it.
fn favorite(portfolio: &[&TagSet]) -> Option<(String, usize)> {
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for tags in portfolio {
        for t in *tags {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut best: Option<(&str, usize)> = None;
    for (t, n) in freq {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((t, n));
        }
    }
    best.map(|(t, n)| (t.to_string(), n))
}

/// Largest connected component size when companies sharing any tag are
/// linked.
pub fn giant_component_size(portfolio: &[&TagSet]) -> usize {
    let mut ds = DisjointSet::new(portfolio.len());
    let mut first_with: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, tags) in portfolio.iter().enumerate() {
        for t in *tags {
            match first_with.get(t.as_str()) {
                Some(&j) => ds.union(i, j),
                None => {
                    first_with.insert(t.as_str(), i);
                }
            }
        }
    }
    ds.largest()
}

/// Both statistics for every investor with at least `min_companies`
/// distinct companies, sorted by investor id.
pub fn preference_profiles(train: &Corpus, min_companies: usize) -> Vec<PreferenceProfile> {
    let catalog = train.tag_catalog();
    train
        .portfolios()
        .into_iter()
        .filter(|(_, companies)| companies.len() >= min_companies.max(1))
        .map(|(investor, companies)| {
            let portfolio: Vec<&TagSet> = companies.iter().map(|c| &catalog[*c]).collect();
            let n = portfolio.len();
            let (favorite_tag, carrying) = favorite(&portfolio).unwrap_or_default();
            PreferenceProfile {
                investor: investor.to_string(),
                favorite_tag,
                p: carrying as f64 / n as f64,
                p_prime: giant_component_size(&portfolio) as f64 / n as f64,
                n_companies: n,
            }
        })
        .collect()
}

pub fn favorite_tag_dominance(train: &Corpus, min_companies: usize) -> Vec<PreferenceProfile> {
    preference_profiles(train, min_companies)
}

pub fn similarity_giant_component(train: &Corpus, min_companies: usize) -> Vec<PreferenceProfile> {
    preference_profiles(train, min_companies)
}

pub fn mean_p(profiles: &[PreferenceProfile]) -> Option<f64> {
    mean(profiles.iter().map(|p| p.p))
}

pub fn mean_p_prime(profiles: &[PreferenceProfile]) -> Option<f64> {
    mean(profiles.iter().map(|p| p.p_prime))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Counts of values in `bins` equal-width bins over `[0, 1]`; 1.0 lands in
/// the last bin.
pub fn histogram(values: impl IntoIterator<Item = f64>, bins: usize) -> Vec<usize> {
    let bins = bins.max(1);
    let mut counts = vec![0; bins];
    for v in values {
        let b = ((v.clamp(0.0, 1.0) * bins as f64).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
}

/// Two columns: bin lower edge and count.
pub fn histogram_to_text(counts: &[usize]) -> String {
    let width = 1.0 / counts.len().max(1) as f64;
    let mut out = String::new();
    for (i, c) in counts.iter().enumerate() {
        let _ = writeln!(out, "{:.4}\t{c}", i as f64 * width);
    }
    out
}

pub fn profiles_to_tsv(profiles: &[PreferenceProfile]) -> String {
    let mut out = String::from("investor\tn_companies\tfavorite_tag\tp\tp_prime\n");
    for p in profiles {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{:.6}",
            p.investor, p.n_companies, p.favorite_tag, p.p, p.p_prime
        );
    }
    out
}
