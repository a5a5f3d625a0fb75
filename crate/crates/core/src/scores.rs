use std::cmp::Ordering;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Two scores closer than this are treated as tied when ranking.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Per-investor scores for one target, indexed like the training investor
/// list (sorted ids).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    investors: Arc<[String]>,
    scores: Vec<f64>,
    provenance: String,
}

impl ScoreVector {
    pub fn new(investors: Arc<[String]>, scores: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if investors.len() != scores.len() {
            return Err(Error::DimensionMismatch {
                expected: investors.len(),
                found: scores.len(),
            });
        }
        Ok(Self {
            investors,
            scores,
            provenance: provenance.into(),
        })
    }

    pub fn investors(&self) -> &Arc<[String]> {
        &self.investors
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn into_scores(self) -> Vec<f64> {
        self.scores
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, investor: &str) -> Option<f64> {
        self.index_of(investor).map(|i| self.scores[i])
    }

    pub fn index_of(&self, investor: &str) -> Option<usize> {
        self.investors
            .binary_search_by(|x| x.as_str().cmp(investor))
            .ok()
    }

    /// True when every score equals the first one within [`TIE_TOLERANCE`].
    pub fn is_uniform(&self) -> bool {
        match self.scores.first() {
            Some(&first) => self.scores.iter().all(|s| (s - first).abs() <= TIE_TOLERANCE),
            None => true,
        }
    }

    /// Investor indices by descending score, then ascending id.
    pub fn ranked(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| {
            self.scores[b]
                .partial_cmp(&self.scores[a])
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.investors[a].cmp(&self.investors[b]))
        });
        order
    }

    /// `investor_id<TAB>score` lines in ranked order, at most `limit` lines.
    pub fn to_text(&self, limit: Option<usize>) -> String {
        let order = self.ranked();
        let n = limit.unwrap_or(order.len()).min(order.len());
        order[..n].iter().fold(String::new(), |mut s, &i| {
            let _ = writeln!(s, "{}\t{}", self.investors[i], self.scores[i]);
            s
        })
    }
}
