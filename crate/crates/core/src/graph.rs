//! Bipartite adjacencies and the five tripartite network layouts.
//!
//! Every layout stacks two bipartite adjacencies around a middle layer:
//!
//! | label   | left    | middle   | right    | investor–tag weights |
//! |---------|---------|----------|----------|----------------------|
//! | `TCI`   | tag     | company  | investor | (no such links)      |
//! | `CTI-w` | company | tag      | investor | distinct companies   |
//! | `CTI-u` | company | tag      | investor | 0/1                  |
//! | `CIT-w` | company | investor | tag      | distinct companies   |
//! | `CIT-u` | company | investor | tag      | 0/1                  |
//!
//! Investor–tag links are "virtual": they exist because the investor backed a
//! company carrying the tag. Node ids are laid out in sorted order so that
//! indices, and therefore tie-breaking, are reproducible.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use crate::dataset::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Tag,
    Company,
    Investor,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Tag => "tag",
            Role::Company => "company",
            Role::Investor => "investor",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Representation {
    Tci,
    CtiWeighted,
    CtiUnweighted,
    CitWeighted,
    CitUnweighted,
}

impl Representation {
    /// Table order: CIT-w, CIT-u, CTI-w, CTI-u, TCI.
    pub const ALL: [Representation; 5] = [
        Representation::CitWeighted,
        Representation::CitUnweighted,
        Representation::CtiWeighted,
        Representation::CtiUnweighted,
        Representation::Tci,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Representation::Tci => "TCI",
            Representation::CtiWeighted => "CTI-w",
            Representation::CtiUnweighted => "CTI-u",
            Representation::CitWeighted => "CIT-w",
            Representation::CitUnweighted => "CIT-u",
        }
    }

    /// Roles of the (left, middle, right) layers.
    pub fn roles(self) -> [Role; 3] {
        match self {
            Representation::Tci => [Role::Tag, Role::Company, Role::Investor],
            Representation::CtiWeighted | Representation::CtiUnweighted => {
                [Role::Company, Role::Tag, Role::Investor]
            }
            Representation::CitWeighted | Representation::CitUnweighted => {
                [Role::Company, Role::Investor, Role::Tag]
            }
        }
    }

    pub fn is_weighted(self) -> bool {
        matches!(
            self,
            Representation::CtiWeighted | Representation::CitWeighted
        )
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match norm.as_str() {
            "tci" => Representation::Tci,
            "cti-w" | "cti-weighted" => Representation::CtiWeighted,
            "cti-u" | "cti-unweighted" | "cti" => Representation::CtiUnweighted,
            "cit-w" | "cit-weighted" => Representation::CitWeighted,
            "cit-u" | "cit-unweighted" | "cit" => Representation::CitUnweighted,
            _ => return Err(Error::UnknownRepresentation(s.to_string())),
        })
    }
}

/// Sparse non-negative weights between a row node set and a column node set,
/// stored both row-major and column-major so either side iterates in
/// O(degree).
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteAdjacency {
    rows: Arc<[String]>,
    cols: Arc<[String]>,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    row_w: Vec<f64>,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_w: Vec<f64>,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
}

impl BipartiteAdjacency {
    /// Builds from `(row, col, weight)` triples. Repeated pairs are summed,
    /// zero weights are dropped.
    pub fn from_entries<I>(rows: Arc<[String]>, cols: Arc<[String]>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (r, c, w) in entries {
            if r >= rows.len() || c >= cols.len() {
                return Err(Error::InvalidConfig(format!(
                    "edge ({r}, {c}) outside a {}x{} adjacency",
                    rows.len(),
                    cols.len()
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidConfig(format!("invalid edge weight {w}")));
            }
            *merged.entry((r, c)).or_insert(0.0) += w;
        }
        merged.retain(|_, w| *w > 0.0);

        let mut row_ptr = vec![0; rows.len() + 1];
        let mut col_ptr = vec![0; cols.len() + 1];
        for &(r, c) in merged.keys() {
            row_ptr[r + 1] += 1;
            col_ptr[c + 1] += 1;
        }
        for i in 0..rows.len() {
            row_ptr[i + 1] += row_ptr[i];
        }
        for j in 0..cols.len() {
            col_ptr[j + 1] += col_ptr[j];
        }
        let nnz = merged.len();
        let mut row_idx = Vec::with_capacity(nnz);
        let mut row_w = Vec::with_capacity(nnz);
        let mut col_idx = vec![0; nnz];
        let mut col_w = vec![0.0; nnz];
        let mut cursor = col_ptr.clone();
        // BTreeMap iteration is row-major, so columns fill in ascending row order
        for (&(r, c), &w) in &merged {
            row_idx.push(c);
            row_w.push(w);
            col_idx[cursor[c]] = r;
            col_w[cursor[c]] = w;
            cursor[c] += 1;
        }

        let row_sums = (0..rows.len())
            .map(|i| row_w[row_ptr[i]..row_ptr[i + 1]].iter().sum())
            .collect();
        let col_sums = (0..cols.len())
            .map(|j| col_w[col_ptr[j]..col_ptr[j + 1]].iter().sum())
            .collect();
        Ok(Self {
            rows,
            cols,
            row_ptr,
            row_idx,
            row_w,
            col_ptr,
            col_idx,
            col_w,
            row_sums,
            col_sums,
        })
    }

    pub fn rows(&self) -> &Arc<[String]> {
        &self.rows
    }

    pub fn cols(&self) -> &Arc<[String]> {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// `(col, weight)` pairs of row `i`, ascending by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.row_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.row_w[span].iter().copied())
    }

    /// `(row, weight)` pairs of column `j`, ascending by row.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.col_ptr[j]..self.col_ptr[j + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.col_w[span].iter().copied())
    }

    /// Weighted row degrees.
    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    /// Weighted column degrees.
    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    pub fn row_degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn col_degree(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.row_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.row_w[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.rows.binary_search_by(|r| r.as_str().cmp(id)).ok()
    }

    pub fn col_index(&self, id: &str) -> Option<usize> {
        self.cols.binary_search_by(|c| c.as_str().cmp(id)).ok()
    }

    /// All `(row, col, weight)` triples in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows()).flat_map(move |i| self.row(i).map(move |(j, w)| (i, j, w)))
    }

    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            row_ptr: self.col_ptr.clone(),
            row_idx: self.col_idx.clone(),
            row_w: self.col_w.clone(),
            col_ptr: self.row_ptr.clone(),
            col_idx: self.row_idx.clone(),
            col_w: self.row_w.clone(),
            row_sums: self.col_sums.clone(),
            col_sums: self.row_sums.clone(),
        }
    }

    /// Same support, every weight clamped to 1.
    pub fn binarized(&self) -> Self {
        Self::from_entries(
            self.rows.clone(),
            self.cols.clone(),
            self.entries().map(|(i, j, _)| (i, j, 1.0)),
        )
        .expect("support of a valid adjacency is valid")
    }
}

fn position(ids: &[String], id: &str) -> usize {
    ids.binary_search_by(|x| x.as_str().cmp(id))
        .expect("id taken from the same corpus")
}

/// Binary investor × company adjacency: one link per distinct pair.
pub fn build_investor_company(train: &Corpus) -> BipartiteAdjacency {
    let investors = train.investors();
    let companies = train.companies();
    let entries: Vec<_> = train
        .links()
        .into_iter()
        .map(|(x, c)| (position(investors, x), position(companies, c), 1.0))
        .collect();
    BipartiteAdjacency::from_entries(investors.clone(), companies.clone(), entries)
        .expect("corpus links are in range")
}

/// Binary company × tag adjacency over the corpus tag catalog.
pub fn build_company_tag(train: &Corpus) -> BipartiteAdjacency {
    let companies = train.companies();
    let tags = train.tags();
    let entries: Vec<_> = train
        .tag_catalog()
        .iter()
        .flat_map(|(c, ts)| {
            let ci = position(companies, c);
            ts.iter().map(move |t| (ci, position(tags, t), 1.0))
        })
        .collect();
    BipartiteAdjacency::from_entries(companies.clone(), tags.clone(), entries)
        .expect("catalog entries are in range")
}

/// Investor × tag adjacency; the weighted form counts the distinct companies
/// the investor backed that carry the tag.
pub fn build_virtual_investor_tag(train: &Corpus, weighted: bool) -> BipartiteAdjacency {
    let investors = train.investors();
    let tags = train.tags();
    let catalog = train.tag_catalog();
    let mut entries = Vec::new();
    for (x, c) in train.links() {
        let xi = position(investors, x);
        for t in &catalog[c] {
            entries.push((xi, position(tags, t), 1.0));
        }
    }
    let adj = BipartiteAdjacency::from_entries(investors.clone(), tags.clone(), entries)
        .expect("corpus links are in range");
    if weighted {
        adj
    } else {
        adj.binarized()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerPos {
    Left,
    Middle,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub role: Role,
    pub ids: Arc<[String]>,
}

/// Three node layers joined by a left×middle and a middle×right adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct TripartiteGraph {
    representation: Representation,
    left_middle: BipartiteAdjacency,
    middle_right: BipartiteAdjacency,
}

impl TripartiteGraph {
    /// `left_middle` has left nodes as rows; `middle_right` has middle nodes
    /// as rows.
    pub fn from_parts(
        representation: Representation,
        left_middle: BipartiteAdjacency,
        middle_right: BipartiteAdjacency,
    ) -> Result<Self> {
        if left_middle.cols() != middle_right.rows() {
            return Err(Error::InvalidConfig(
                "middle layer differs between the two adjacencies".into(),
            ));
        }
        if !representation.is_weighted()
            && left_middle
                .entries()
                .chain(middle_right.entries())
                .any(|(_, _, w)| w != 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "{representation} must be unweighted"
            )));
        }
        Ok(Self {
            representation,
            left_middle,
            middle_right,
        })
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn left(&self) -> Layer {
        Layer {
            role: self.representation.roles()[0],
            ids: self.left_middle.rows().clone(),
        }
    }

    pub fn middle(&self) -> Layer {
        Layer {
            role: self.representation.roles()[1],
            ids: self.middle_right.rows().clone(),
        }
    }

    pub fn right(&self) -> Layer {
        Layer {
            role: self.representation.roles()[2],
            ids: self.middle_right.cols().clone(),
        }
    }

    pub fn n_left(&self) -> usize {
        self.left_middle.n_rows()
    }

    pub fn n_middle(&self) -> usize {
        self.middle_right.n_rows()
    }

    pub fn n_right(&self) -> usize {
        self.middle_right.n_cols()
    }

    /// Rows: left nodes, columns: middle nodes.
    pub fn left_middle(&self) -> &BipartiteAdjacency {
        &self.left_middle
    }

    /// Rows: middle nodes, columns: right nodes.
    pub fn middle_right(&self) -> &BipartiteAdjacency {
        &self.middle_right
    }

    pub fn position_of(&self, role: Role) -> LayerPos {
        let roles = self.representation.roles();
        if roles[0] == role {
            LayerPos::Left
        } else if roles[1] == role {
            LayerPos::Middle
        } else {
            LayerPos::Right
        }
    }

    pub fn layer(&self, pos: LayerPos) -> Layer {
        match pos {
            LayerPos::Left => self.left(),
            LayerPos::Middle => self.middle(),
            LayerPos::Right => self.right(),
        }
    }

    pub fn investors(&self) -> Arc<[String]> {
        self.layer(self.position_of(Role::Investor)).ids
    }

    pub fn tags(&self) -> Arc<[String]> {
        self.layer(self.position_of(Role::Tag)).ids
    }

    /// Writes the tab-separated edge-list form read by [`Self::from_edge_list`].
    pub fn to_edge_list(&self) -> Result<String> {
        let mut out = String::new();
        let roles = self.representation.roles();
        let _ = writeln!(out, "#tripartite\t{}", self.representation);
        let _ = writeln!(out, "#layers\t{}\t{}\t{}", roles[0], roles[1], roles[2]);
        for (tag, layer) in [("L", self.left()), ("M", self.middle()), ("R", self.right())] {
            for id in layer.ids.iter() {
                check_id(id)?;
                let _ = writeln!(out, "{tag}\t{id}");
            }
        }
        let (l, m, r) = (self.left().ids, self.middle().ids, self.right().ids);
        for (i, j, w) in self.left_middle.entries() {
            let _ = writeln!(out, "LM\t{}\t{}\t{w}", l[i], m[j]);
        }
        for (i, j, w) in self.middle_right.entries() {
            let _ = writeln!(out, "MR\t{}\t{}\t{w}", m[i], r[j]);
        }
        Ok(out)
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let err = |line: usize, message: &str| Error::Parse {
            line,
            message: message.to_string(),
        };
        let mut representation = None;
        let mut ids: [Vec<String>; 3] = Default::default();
        let mut lm = Vec::new();
        let mut mr = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let n = n + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["#tripartite", label] => representation = Some(label.parse::<Representation>()?),
                ["#layers", ..] => {}
                ["L", id] => ids[0].push(id.to_string()),
                ["M", id] => ids[1].push(id.to_string()),
                ["R", id] => ids[2].push(id.to_string()),
                ["LM", a, b, w] => lm.push((n, *a, *b, *w)),
                ["MR", a, b, w] => mr.push((n, *a, *b, *w)),
                _ => return Err(err(n, "unrecognized record")),
            }
        }
        let representation = representation.ok_or_else(|| err(1, "missing #tripartite header"))?;
        let [l, m, r] = ids.map(|v| -> Arc<[String]> { v.into() });
        let lookup = |ids: &[String]| -> BTreeMap<String, usize> {
            ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect()
        };
        let (li, mi, ri) = (lookup(&l), lookup(&m), lookup(&r));
        let resolve = |edges: Vec<(usize, &str, &str, &str)>,
                       rows: &BTreeMap<String, usize>,
                       cols: &BTreeMap<String, usize>|
         -> Result<Vec<(usize, usize, f64)>> {
            edges
                .into_iter()
                .map(|(n, a, b, w)| {
                    let a = *rows.get(a).ok_or_else(|| err(n, "unknown row node"))?;
                    let b = *cols.get(b).ok_or_else(|| err(n, "unknown column node"))?;
                    let w: f64 = w.parse().map_err(|_| err(n, "bad weight"))?;
                    Ok((a, b, w))
                })
                .collect()
        };
        let left_middle =
            BipartiteAdjacency::from_entries(l, m.clone(), resolve(lm, &li, &mi)?)?;
        let middle_right = BipartiteAdjacency::from_entries(m, r, resolve(mr, &mi, &ri)?)?;
        Self::from_parts(representation, left_middle, middle_right)
    }
}

fn check_id(id: &str) -> Result<()> {
    if id.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidConfig(format!(
            "id `{id}` cannot be written to an edge list"
        )));
    }
    Ok(())
}

/// Assembles one of the five tripartite layouts from a training corpus.
pub fn assemble(representation: Representation, train: &Corpus) -> TripartiteGraph {
    let (left_middle, middle_right) = match representation {
        Representation::Tci => (
            build_company_tag(train).transpose(),
            build_investor_company(train).transpose(),
        ),
        Representation::CtiWeighted | Representation::CtiUnweighted => (
            build_company_tag(train),
            build_virtual_investor_tag(train, representation.is_weighted()).transpose(),
        ),
        Representation::CitWeighted | Representation::CitUnweighted => (
            build_investor_company(train).transpose(),
            build_virtual_investor_tag(train, representation.is_weighted()),
        ),
    };
    TripartiteGraph::from_parts(representation, left_middle, middle_right)
        .expect("builders produce consistent layers")
}
