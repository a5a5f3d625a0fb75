//! Investment-event ingestion, corpus statistics and temporal splitting.
//!
//! The on-disk format is one event per row:
//!
//! ```text
//! investor_id,company_id,tag1|tag2|tag3,2016-09-06
//! ```
//!
//! Dates are accepted as `YYYY-MM-DD` or `YYYY.MM.DD`. A header row whose
//! first field is `investor_id` is skipped.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub type TagSet = BTreeSet<String>;

/// A degree histogram: value -> number of nodes with that value.
pub type Histogram = BTreeMap<usize, usize>;

pub const HEADER: [&str; 4] = ["investor_id", "company_id", "tags", "date"];

fn min_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(1900, 1, 1).unwrap()
}

fn max_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2100, 1, 1).unwrap()
}

/// One investor putting money into one company on one day.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InvestmentEvent {
    pub investor: String,
    pub company: String,
    pub tags: TagSet,
    pub date: NaiveDate,
}

impl InvestmentEvent {
    pub fn new<I, S>(investor: &str, company: &str, tags: I, date: NaiveDate) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if investor.is_empty() || company.is_empty() {
            return Err(Error::InvalidConfig(
                "investor and company ids must be non-empty".into(),
            ));
        }
        if date < min_date() || date > max_date() {
            return Err(Error::InvalidConfig(format!("date {date} out of range")));
        }
        Ok(Self {
            investor: investor.to_string(),
            company: company.to_string(),
            tags: tags.into_iter().map(Into::into).collect(),
            date,
        })
    }
}

/// An ordered collection of events plus the derived id catalogs.
///
/// Id lists are sorted and deduplicated; every index-based structure in the
/// crate (graph layers, score vectors, factor tables) uses these orders.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    events: Vec<InvestmentEvent>,
    tag_catalog: BTreeMap<String, TagSet>,
    investors: Arc<[String]>,
    companies: Arc<[String]>,
    tags: Arc<[String]>,
}

impl Corpus {
    /// Builds a corpus from events in the given order. Events are kept as-is;
    /// duplicate removal happens at parse time.
    pub fn from_events(events: Vec<InvestmentEvent>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut tag_catalog: BTreeMap<String, TagSet> = BTreeMap::new();
        let mut investors = BTreeSet::new();
        for e in &events {
            investors.insert(e.investor.clone());
            tag_catalog
                .entry(e.company.clone())
                .or_default()
                .extend(e.tags.iter().cloned());
        }
        let tags: BTreeSet<&String> = tag_catalog.values().flatten().collect();
        let tags: Arc<[String]> = tags.into_iter().cloned().collect();
        let companies: Arc<[String]> = tag_catalog.keys().cloned().collect();
        Ok(Self {
            events,
            tag_catalog,
            investors: investors.into_iter().collect(),
            companies,
            tags,
        })
    }

    pub fn events(&self) -> &[InvestmentEvent] {
        &self.events
    }

    /// Company id -> union of the tags seen on that company's events.
    pub fn tag_catalog(&self) -> &BTreeMap<String, TagSet> {
        &self.tag_catalog
    }

    pub fn company_tags(&self, company: &str) -> Option<&TagSet> {
        self.tag_catalog.get(company)
    }

    /// Sorted distinct investor ids.
    pub fn investors(&self) -> &Arc<[String]> {
        &self.investors
    }

    /// Sorted distinct company ids.
    pub fn companies(&self) -> &Arc<[String]> {
        &self.companies
    }

    /// Sorted distinct tag ids.
    pub fn tags(&self) -> &Arc<[String]> {
        &self.tags
    }

    pub fn n_investors(&self) -> usize {
        self.investors.len()
    }

    pub fn n_companies(&self) -> usize {
        self.companies.len()
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    /// Distinct (investor, company) pairs, sorted.
    pub fn links(&self) -> BTreeSet<(&str, &str)> {
        self.events
            .iter()
            .map(|e| (e.investor.as_str(), e.company.as_str()))
            .collect()
    }

    /// Investor -> set of distinct companies invested in.
    pub fn portfolios(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for e in &self.events {
            out.entry(e.investor.as_str())
                .or_default()
                .insert(e.company.as_str());
        }
        out
    }

    pub fn write_to<W: Write>(&self, writer: W, options: &ParseOptions) -> Result<()> {
        write_events(&self.events, writer, options)
    }

    pub fn save(&self, path: &Path, options: &ParseOptions) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(file), options)
    }
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Field delimiter.
    pub delimiter: u8,
    /// Delimiter inside the tag-list field.
    pub tag_delimiter: char,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            tag_delimiter: '|',
        }
    }
}

/// Row-level bookkeeping from [`parse_events`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub rows_read: usize,
    pub malformed_rows: usize,
    pub missing_investor_rows: usize,
    pub duplicate_rows: usize,
}

impl ParseReport {
    pub fn dropped_rows(&self) -> usize {
        self.malformed_rows + self.missing_investor_rows + self.duplicate_rows
    }
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub corpus: Corpus,
    pub report: ParseReport,
}

pub fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    let date = NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(raw, "%Y.%m.%d"))
        .ok()?;
    (min_date()..=max_date()).contains(&date).then_some(date)
}

pub fn parse_events(path: &Path, options: &ParseOptions) -> Result<Parsed> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_events_from(file, options).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_events_from<R: Read>(reader: R, options: &ParseOptions) -> Result<Parsed> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(options.delimiter)
        .from_reader(reader);

    let mut report = ParseReport::default();
    let mut seen = HashSet::new();
    let mut events = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(err) => {
                if let csv::ErrorKind::Io(_) = err.kind() {
                    let csv::ErrorKind::Io(io) = err.into_kind() else {
                        unreachable!()
                    };
                    return Err(Error::io("<reader>", io));
                }
                report.rows_read += 1;
                report.malformed_rows += 1;
                continue;
            }
        };
        if row == 0 && record.get(0).map(str::trim) == Some(HEADER[0]) {
            continue;
        }
        report.rows_read += 1;
        if record.len() != 4 {
            report.malformed_rows += 1;
            continue;
        }
        let investor = record[0].trim();
        let company = record[1].trim();
        if investor.is_empty() {
            report.missing_investor_rows += 1;
            continue;
        }
        let Some(date) = parse_date(&record[3]) else {
            report.malformed_rows += 1;
            continue;
        };
        if company.is_empty() {
            report.malformed_rows += 1;
            continue;
        }
        let tags = record[2]
            .split(options.tag_delimiter)
            .map(str::trim)
            .filter(|t| !t.is_empty());
        let event = InvestmentEvent::new(investor, company, tags, date)?;
        if !seen.insert(event.clone()) {
            report.duplicate_rows += 1;
            continue;
        }
        events.push(event);
    }
    let corpus = Corpus::from_events(events)?;
    Ok(Parsed { corpus, report })
}

pub fn write_events<W: Write>(
    events: &[InvestmentEvent],
    writer: W,
    options: &ParseOptions,
) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(options.delimiter)
        .from_writer(writer);
    let to_io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<writer>", io),
        other => Error::InvalidConfig(format!("{other:?}")),
    };
    wtr.write_record(HEADER).map_err(to_io)?;
    let sep = options.tag_delimiter.to_string();
    for e in events {
        if let Some(bad) = e.tags.iter().find(|t| t.contains(options.tag_delimiter)) {
            return Err(Error::InvalidConfig(format!(
                "tag `{bad}` contains the tag delimiter"
            )));
        }
        let tags = e.tags.iter().map(String::as_str).collect::<Vec<_>>().join(&sep);
        let date = e.date.format("%Y-%m-%d").to_string();
        wtr.write_record([e.investor.as_str(), e.company.as_str(), &tags, &date])
            .map_err(to_io)?;
    }
    wtr.flush().map_err(|e| Error::io("<writer>", e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub n_events: usize,
    pub n_investors: usize,
    pub n_companies: usize,
    pub n_tags: usize,
    pub n_tagless_companies: usize,
    pub mean_companies_per_investor: f64,
    pub mean_investors_per_company: f64,
    pub mean_tags_per_company: f64,
    pub single_investor_fraction: f64,
    pub companies_per_investor: Histogram,
    pub investors_per_company: Histogram,
    pub tags_per_company: Histogram,
}

impl CorpusStats {
    /// Key-value text report, one `key<TAB>value` pair per line.
    pub fn to_report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "events\t{}", self.n_events);
        let _ = writeln!(s, "investors\t{}", self.n_investors);
        let _ = writeln!(s, "companies\t{}", self.n_companies);
        let _ = writeln!(s, "tags\t{}", self.n_tags);
        let _ = writeln!(s, "tagless_companies\t{}", self.n_tagless_companies);
        let _ = writeln!(
            s,
            "mean_companies_per_investor\t{:.6}",
            self.mean_companies_per_investor
        );
        let _ = writeln!(
            s,
            "mean_investors_per_company\t{:.6}",
            self.mean_investors_per_company
        );
        let _ = writeln!(s, "mean_tags_per_company\t{:.6}", self.mean_tags_per_company);
        let _ = writeln!(
            s,
            "single_investor_fraction\t{:.6}",
            self.single_investor_fraction
        );
        s
    }
}

/// Two-column `value<TAB>count` text.
pub fn histogram_to_text(h: &Histogram) -> String {
    h.iter().fold(String::new(), |mut s, (v, c)| {
        let _ = writeln!(s, "{v}\t{c}");
        s
    })
}

pub fn corpus_stats(c: &Corpus) -> Result<CorpusStats> {
    if c.events.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let portfolios = c.portfolios();
    let mut backers: HashMap<&str, usize> = HashMap::new();
    for (_, companies) in &portfolios {
        for company in companies {
            *backers.entry(company).or_default() += 1;
        }
    }

    let mut companies_per_investor = Histogram::new();
    for companies in portfolios.values() {
        *companies_per_investor.entry(companies.len()).or_default() += 1;
    }
    let mut investors_per_company = Histogram::new();
    for n in backers.values() {
        *investors_per_company.entry(*n).or_default() += 1;
    }
    let mut tags_per_company = Histogram::new();
    for tags in c.tag_catalog.values() {
        *tags_per_company.entry(tags.len()).or_default() += 1;
    }

    let n_links: usize = portfolios.values().map(BTreeSet::len).sum();
    let n_tag_links: usize = c.tag_catalog.values().map(BTreeSet::len).sum();
    let n_inv = c.n_investors() as f64;
    let n_comp = c.n_companies() as f64;
    Ok(CorpusStats {
        n_events: c.events.len(),
        n_investors: c.n_investors(),
        n_companies: c.n_companies(),
        n_tags: c.n_tags(),
        n_tagless_companies: tags_per_company.get(&0).copied().unwrap_or(0),
        mean_companies_per_investor: n_links as f64 / n_inv,
        mean_investors_per_company: n_links as f64 / n_comp,
        mean_tags_per_company: n_tag_links as f64 / n_comp,
        single_investor_fraction: investors_per_company.get(&1).copied().unwrap_or(0) as f64
            / n_comp,
        companies_per_investor,
        investors_per_company,
        tags_per_company,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitRule {
    /// The earliest `ceil(p * N)` events train, the rest test.
    Fraction(f64),
    /// Events strictly before the date train, the rest test.
    BeforeDate(NaiveDate),
}

impl std::fmt::Display for SplitRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitRule::Fraction(p) => write!(f, "fraction:{p}"),
            SplitRule::BeforeDate(d) => write!(f, "before:{}", d.format("%Y-%m-%d")),
        }
    }
}

impl std::str::FromStr for SplitRule {
    type Err = Error;

    /// Accepts `0.9`, `90/10`, `fraction:0.9` or `before:2016-09-06`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidSplit(format!("cannot parse split rule `{s}`"));
        if let Some(date) = s.strip_prefix("before:") {
            return parse_date(date).map(SplitRule::BeforeDate).ok_or_else(bad);
        }
        let frac = s.strip_prefix("fraction:").unwrap_or(s);
        let p = if let Some((a, b)) = frac.split_once('/') {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / (a + b)
        } else {
            frac.parse().map_err(|_| bad())?
        };
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidSplit(format!("fraction {p} not in (0, 1)")));
        }
        Ok(SplitRule::Fraction(p))
    }
}

/// A company first invested in during the test window.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub company: String,
    pub tags: TagSet,
    /// Distinct investors of the company's test events.
    pub relevant: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Corpus,
    pub test: Corpus,
    pub rule: SplitRule,
    pub targets: Vec<Target>,
    /// New companies skipped because they carry no tags.
    pub tagless_new_companies: usize,
}

pub fn temporal_split(c: &Corpus, rule: SplitRule) -> Result<Split> {
    let mut order: Vec<&InvestmentEvent> = c.events.iter().collect();
    // stable: same-day events keep input order
    order.sort_by_key(|e| e.date);

    let n_train = match rule {
        SplitRule::Fraction(p) => {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidSplit(format!("fraction {p} not in (0, 1)")));
            }
            // guard against p * N landing a hair above an integer
            ((p * order.len() as f64) - 1e-9).ceil().max(0.0) as usize
        }
        SplitRule::BeforeDate(d) => order.partition_point(|e| e.date < d),
    };
    if n_train == 0 || n_train >= order.len() {
        return Err(Error::InvalidSplit(format!(
            "rule {rule} leaves {n_train} train / {} test events",
            order.len().saturating_sub(n_train)
        )));
    }
    let (train, test) = order.split_at(n_train);
    let train = Corpus::from_events(train.iter().map(|e| (*e).clone()).collect())?;
    let test = Corpus::from_events(test.iter().map(|e| (*e).clone()).collect())?;

    let mut relevant: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for e in &test.events {
        if train.tag_catalog.contains_key(&e.company) {
            continue;
        }
        relevant
            .entry(e.company.as_str())
            .or_default()
            .insert(e.investor.clone());
    }
    let mut targets = Vec::with_capacity(relevant.len());
    let mut tagless = 0;
    for (company, relevant) in relevant {
        let tags = test.tag_catalog[company].clone();
        if tags.is_empty() {
            tagless += 1;
            continue;
        }
        targets.push(Target {
            company: company.to_string(),
            tags,
            relevant,
        });
    }
    Ok(Split {
        train,
        test,
        rule,
        targets,
        tagless_new_companies: tagless,
    })
}
