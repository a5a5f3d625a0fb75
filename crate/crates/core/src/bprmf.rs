//! Matrix factorization trained with Bayesian Personalized Ranking, plus a
//! weighted kNN mapping from a new company's tags to a latent factor.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::baselines::CompanySimilarity;
use crate::dataset::{Corpus, TagSet};
use crate::error::{Error, Result};
use crate::scores::ScoreVector;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BprParams {
    pub factors: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    /// Sampled triples; `None` means 100 per training event.
    pub samples: Option<usize>,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for BprParams {
    fn default() -> Self {
        Self {
            factors: 30,
            learning_rate: 0.05,
            regularization: 0.0025,
            samples: None,
            init_std: 0.1,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModel {
    pub format_version: u32,
    pub params: BprParams,
    investors: Vec<String>,
    companies: Vec<String>,
    /// Row-major, `investors.len() x factors`.
    investor_factors: Vec<f64>,
    /// Row-major, `companies.len() x factors`.
    company_factors: Vec<f64>,
}

/// A (investor, positive company, negative company) index triple.
pub type Triple = (usize, usize, usize);

/// Positive pairs and portfolio lookups in model index space.
struct Interactions {
    n_companies: usize,
    positives: Vec<(usize, usize)>,
    portfolios: Vec<BTreeSet<usize>>,
}

impl Interactions {
    fn new(train: &Corpus) -> Self {
        let investors = train.investors();
        let companies = train.companies();
        let idx = |ids: &[String], id: &str| ids.binary_search_by(|x| x.as_str().cmp(id)).unwrap();
        let mut portfolios = vec![BTreeSet::new(); investors.len()];
        let mut positives = Vec::new();
        for (x, c) in train.links() {
            let (xi, ci) = (idx(investors, x), idx(companies, c));
            portfolios[xi].insert(ci);
            positives.push((xi, ci));
        }
        // investors who backed every company have no negatives
        positives.retain(|&(x, _)| portfolios[x].len() < companies.len());
        Self {
            n_companies: companies.len(),
            positives,
            portfolios,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Triple {
        let (x, a) = self.positives[rng.random_range(0..self.positives.len())];
        loop {
            let b = rng.random_range(0..self.n_companies);
            if !self.portfolios[x].contains(&b) {
                return (x, a, b);
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Fits investor and company factors by stochastic gradient ascent on
/// `ln sigmoid(<w_x, h_a> - <w_x, h_b>)` with L2 shrinkage.
pub fn train_bpr(train: &Corpus, params: &BprParams) -> Result<FactorModel> {
    if params.factors == 0 {
        return Err(Error::InvalidConfig("factor count must be at least 1".into()));
    }
    if !(params.learning_rate > 0.0) || params.regularization < 0.0 || params.init_std < 0.0 {
        return Err(Error::InvalidConfig("invalid BPR hyperparameters".into()));
    }
    let data = Interactions::new(train);
    if data.positives.is_empty() {
        return Err(Error::Training(
            "no investor has an uninvested company to sample as a negative".into(),
        ));
    }

    let d = params.factors;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, params.init_std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut w: Vec<f64> = (0..train.n_investors() * d).map(|_| normal.sample(&mut rng)).collect();
    let mut h: Vec<f64> = (0..train.n_companies() * d).map(|_| normal.sample(&mut rng)).collect();

    let n_samples = params.samples.unwrap_or(100 * train.events().len());
    let (lr, reg) = (params.learning_rate, params.regularization);
    let mut diff = vec![0.0; d];
    for _ in 0..n_samples {
        let (x, a, b) = data.sample(&mut rng);
        let wx = &w[x * d..(x + 1) * d];
        let ha = &h[a * d..(a + 1) * d];
        let hb = &h[b * d..(b + 1) * d];
        for k in 0..d {
            diff[k] = ha[k] - hb[k];
        }
        let margin = dot(wx, &diff);
        // d/dmargin ln sigmoid(margin)
        let g = 1.0 / (1.0 + margin.exp());
        for k in 0..d {
            let wk = w[x * d + k];
            w[x * d + k] += lr * (g * diff[k] - reg * wk);
            h[a * d + k] += lr * (g * wk - reg * h[a * d + k]);
            h[b * d + k] += lr * (-g * wk - reg * h[b * d + k]);
        }
    }
    if w.iter().chain(&h).any(|v| !v.is_finite()) {
        return Err(Error::Training("factors diverged".into()));
    }

    Ok(FactorModel {
        format_version: FORMAT_VERSION,
        params: params.clone(),
        investors: train.investors().to_vec(),
        companies: train.companies().to_vec(),
        investor_factors: w,
        company_factors: h,
    })
}

/// Uniform (investor, positive, negative) triples from a corpus, expressed in
/// the model's index space. Pairs whose ids the model does not know are
/// skipped.
pub fn sample_triples(model: &FactorModel, corpus: &Corpus, n: usize, seed: u64) -> Vec<Triple> {
    let mut positives = Vec::new();
    let mut portfolios = vec![BTreeSet::new(); model.investors.len()];
    for (x, c) in corpus.links() {
        if let (Some(xi), Some(ci)) = (model.investor_index(x), model.company_index(c)) {
            positives.push((xi, ci));
            portfolios[xi].insert(ci);
        }
    }
    let n_companies = model.companies.len();
    positives.retain(|&(x, _)| portfolios[x].len() < n_companies);
    if positives.is_empty() {
        return Vec::new();
    }
    let data = Interactions {
        n_companies,
        positives,
        portfolios,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| data.sample(&mut rng)).collect()
}

impl FactorModel {
    pub fn factors(&self) -> usize {
        self.params.factors
    }

    pub fn investors(&self) -> &[String] {
        &self.investors
    }

    pub fn companies(&self) -> &[String] {
        &self.companies
    }

    pub fn investor_index(&self, id: &str) -> Option<usize> {
        self.investors.binary_search_by(|x| x.as_str().cmp(id)).ok()
    }

    pub fn company_index(&self, id: &str) -> Option<usize> {
        self.companies.binary_search_by(|x| x.as_str().cmp(id)).ok()
    }

    pub fn investor_factor(&self, i: usize) -> &[f64] {
        let d = self.factors();
        &self.investor_factors[i * d..(i + 1) * d]
    }

    pub fn company_factor(&self, c: usize) -> &[f64] {
        let d = self.factors();
        &self.company_factors[c * d..(c + 1) * d]
    }

    /// Mean `ln sigmoid(<w_x, h_a - h_b>)` over the triples.
    pub fn objective(&self, triples: &[Triple]) -> f64 {
        if triples.is_empty() {
            return 0.0;
        }
        let total: f64 = triples
            .iter()
            .map(|&(x, a, b)| {
                let w = self.investor_factor(x);
                log_sigmoid(dot(w, self.company_factor(a)) - dot(w, self.company_factor(b)))
            })
            .sum();
        total / triples.len() as f64
    }

    /// Fraction of triples where the positive outscores the negative.
    pub fn pairwise_accuracy(&self, triples: &[Triple]) -> f64 {
        if triples.is_empty() {
            return 0.0;
        }
        let wins = triples
            .iter()
            .filter(|&&(x, a, b)| {
                let w = self.investor_factor(x);
                dot(w, self.company_factor(a)) > dot(w, self.company_factor(b))
            })
            .count();
        wins as f64 / triples.len() as f64
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: FactorModel = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if model.format_version != FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported factor model version {}",
                model.format_version
            )));
        }
        let d = model.params.factors;
        if model.investor_factors.len() != model.investors.len() * d
            || model.company_factors.len() != model.companies.len() * d
        {
            return Err(Error::InvalidConfig("factor table sizes do not match".into()));
        }
        Ok(model)
    }
}

/// Estimates a latent factor for an unseen company as the similarity-weighted
/// mean over its `k` most tag-similar training companies. Only companies with
/// positive similarity qualify; equal similarities prefer the smaller id. With
/// no qualifying neighbour the zero vector is returned.
pub fn map_new_company(
    model: &FactorModel,
    similarity: &CompanySimilarity,
    target_tags: &TagSet,
    k: usize,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if similarity.companies().len() != model.companies.len() {
        return Err(Error::DimensionMismatch {
            expected: model.companies.len(),
            found: similarity.companies().len(),
        });
    }
    let sims = similarity.similarities(target_tags);
    let mut neighbours: Vec<(usize, f64)> = sims
        .into_iter()
        .enumerate()
        .filter(|&(_, s)| s > 0.0)
        .collect();
    // company indices follow sorted ids, so a stable sort keeps ties by id
    neighbours.sort_by(|a, b| b.1.total_cmp(&a.1));
    neighbours.truncate(k);

    let d = model.factors();
    let mut phi = vec![0.0; d];
    let denom: f64 = neighbours.iter().map(|&(_, s)| s).sum();
    if denom == 0.0 {
        return Ok(phi);
    }
    for &(c, s) in &neighbours {
        for (p, h) in phi.iter_mut().zip(model.company_factor(c)) {
            *p += s * h;
        }
    }
    for p in &mut phi {
        *p /= denom;
    }
    Ok(phi)
}

/// Inner product of every investor factor with the estimated company factor.
pub fn bprmf_score(model: &FactorModel, phi: &[f64]) -> Result<ScoreVector> {
    if phi.len() != model.factors() {
        return Err(Error::DimensionMismatch {
            expected: model.factors(),
            found: phi.len(),
        });
    }
    let scores = (0..model.investors.len())
        .map(|i| dot(model.investor_factor(i), phi))
        .collect();
    let ids: Arc<[String]> = model.investors.iter().cloned().collect();
    ScoreVector::new(ids, scores, "bpr-mf")
}
