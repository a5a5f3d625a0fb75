//! Synthetic investment corpora with tunable investor tag preference.
//!
//! Companies get a tag set and a founding date. Each investor gets a
//! favorite tag and an activity level drawn from a truncated power law;
//! every investment goes to a company carrying the favorite tag with
//! probability `preference_strength`, otherwise to a uniformly random
//! company. An investment is dated a short random lag after the company's
//! founding, so the most recent events mostly concern young companies.

use chrono::{Days, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;

use crate::dataset::{Corpus, InvestmentEvent};
use crate::error::{Error, Result};

const FAVORITE_RETRIES: usize = 64;
const DUPLICATE_RETRIES: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_investors: usize,
    pub n_companies: usize,
    pub n_tags: usize,
    /// Mean tag-set size per company.
    pub tags_per_company: f64,
    /// Exponent of the truncated power law for investments per investor.
    pub activity_exponent: f64,
    pub min_activity: usize,
    /// Upper activity bound; `None` means `n_companies / 10`.
    pub max_activity: Option<usize>,
    /// Zipf exponent of tag popularity (0 = all tags equally common).
    pub tag_skew: f64,
    /// Probability that an investment targets the investor's favorite tag.
    pub preference_strength: f64,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Maximum days between founding and an investment.
    pub max_lag_days: u64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_investors: 2000,
            n_companies: 5000,
            n_tags: 300,
            tags_per_company: 4.9,
            activity_exponent: 2.5,
            min_activity: 5,
            max_activity: None,
            tag_skew: 0.8,
            preference_strength: 0.6,
            start: NaiveDate::from_ymd_opt(2005, 1, 1).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2016, 12, 31).expect("valid date"),
            max_lag_days: 120,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn activity_cap(&self) -> usize {
        self.max_activity
            .unwrap_or(self.n_companies / 10)
            .max(self.min_activity.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_investors == 0 || self.n_companies == 0 || self.n_tags == 0 {
            return fail("counts must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.preference_strength) {
            return fail("preference strength must lie in [0, 1]");
        }
        if !(self.tags_per_company >= 1.0 && self.tags_per_company <= self.n_tags as f64) {
            return fail("tags per company must lie in [1, n_tags]");
        }
        if !self.activity_exponent.is_finite() || self.activity_exponent < 0.0 {
            return fail("activity exponent must be finite and non-negative");
        }
        if !self.tag_skew.is_finite() || self.tag_skew < 0.0 {
            return fail("tag skew must be finite and non-negative");
        }
        if self.end < self.start {
            return fail("end date precedes start date");
        }
        Ok(())
    }
}

fn width(n: usize) -> usize {
    n.to_string().len()
}

/// Draws a corpus; identical configs give identical corpora.
pub fn generate(cfg: &SynthConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let synth_err = |e: &dyn std::fmt::Display| Error::Synth(e.to_string());

    let tag_ids: Vec<String> = (0..cfg.n_tags)
        .map(|t| format!("T{:0w$}", t + 1, w = width(cfg.n_tags)))
        .collect();
    let tag_weights: Vec<f64> = (0..cfg.n_tags)
        .map(|r| (r as f64 + 1.0).powf(-cfg.tag_skew))
        .collect();

    // companies: tag sets and founding dates, ids in founding order
    let span = (cfg.end - cfg.start).num_days().max(0) as u64;
    let mut founded: Vec<u64> = (0..cfg.n_companies)
        .map(|_| rng.random_range(0..=span))
        .collect();
    founded.sort_unstable();
    let extra = Poisson::new(cfg.tags_per_company - 1.0).ok();
    let mut company_tags: Vec<Vec<usize>> = Vec::with_capacity(cfg.n_companies);
    for _ in 0..cfg.n_companies {
        let size = match &extra {
            Some(p) => 1 + p.sample(&mut rng) as usize,
            None => 1,
        }
        .min(cfg.n_tags);
        let mut tags: Vec<usize> =
            rand::seq::index::sample_weighted(&mut rng, cfg.n_tags, |i| tag_weights[i], size)
                .map_err(|e| synth_err(&e))?
                .into_iter()
                .collect();
        tags.sort_unstable();
        company_tags.push(tags);
    }
    let mut carriers: Vec<Vec<usize>> = vec![Vec::new(); cfg.n_tags];
    for (c, tags) in company_tags.iter().enumerate() {
        for &t in tags {
            carriers[t].push(c);
        }
    }

    let tag_pick = WeightedIndex::new(&tag_weights).map_err(|e| synth_err(&e))?;
    let lo = cfg.min_activity.max(1);
    let hi = cfg.activity_cap();
    let activity_weights: Vec<f64> = (lo..=hi)
        .map(|k| (k as f64).powf(-cfg.activity_exponent))
        .collect();
    let activity_pick = WeightedIndex::new(&activity_weights).map_err(|e| synth_err(&e))?;

    let iw = width(cfg.n_investors);
    let cw = width(cfg.n_companies);
    let mut events = Vec::new();
    for x in 0..cfg.n_investors {
        let mut favorite = None;
        for _ in 0..FAVORITE_RETRIES {
            let t = tag_pick.sample(&mut rng);
            if !carriers[t].is_empty() {
                favorite = Some(t);
                break;
            }
        }
        let favorite = favorite.ok_or_else(|| {
            Error::Synth(format!(
                "no feasible favorite tag after {FAVORITE_RETRIES} draws"
            ))
        })?;
        let pool = &carriers[favorite];
        let activity = lo + activity_pick.sample(&mut rng);
        let investor = format!("I{:0iw$}", x + 1);

        let mut chosen: Vec<usize> = Vec::with_capacity(activity);
        for _ in 0..activity {
            let preferred = rng.random::<f64>() < cfg.preference_strength;
            let pick = (0..DUPLICATE_RETRIES)
                .map(|_| {
                    if preferred {
                        pool[rng.random_range(0..pool.len())]
                    } else {
                        rng.random_range(0..cfg.n_companies)
                    }
                })
                .find(|c| !chosen.contains(c));
            if let Some(c) = pick {
                chosen.push(c);
            }
        }
        for c in chosen {
            let lag = rng.random_range(0..=cfg.max_lag_days);
            let date = cfg
                .start
                .checked_add_days(Days::new(founded[c] + lag))
                .ok_or_else(|| Error::Synth("date overflow".into()))?;
            events.push(InvestmentEvent::new(
                &investor,
                &format!("C{:0cw$}", c + 1),
                company_tags[c].iter().map(|&t| tag_ids[t].as_str()),
                date,
            )?);
        }
    }
    if events.is_empty() {
        return Err(Error::Synth("configuration produced no events".into()));
    }
    events.sort_by(|a, b| {
        (a.date, &a.company, &a.investor).cmp(&(b.date, &b.company, &b.investor))
    });
    Corpus::from_events(events)
}
