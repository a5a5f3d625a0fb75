//! ProbS (mass diffusion) and HeatS (heat conduction) on a tripartite graph.
//!
//! A step is a simultaneous update computed from a snapshot of the previous
//! state. Middle nodes send a share `lambda` of their resource to the left
//! layer and `1 - lambda` to the right layer; outer nodes send everything to
//! the middle. Any division by a zero degree contributes no flow.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{LayerPos, Representation, Role, TripartiteGraph};
use crate::scores::ScoreVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kernel {
    ProbS,
    HeatS,
}

impl Kernel {
    pub fn label(self) -> &'static str {
        match self {
            Kernel::ProbS => "ProbS",
            Kernel::HeatS => "HeatS",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "probs" => Ok(Kernel::ProbS),
            "heats" => Ok(Kernel::HeatS),
            _ => Err(Error::UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub kernel: Kernel,
    pub lambda: f64,
    pub reach: usize,
}

impl KernelConfig {
    pub fn new(kernel: Kernel, lambda: f64, reach: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidConfig(format!("lambda {lambda} not in [0, 1]")));
        }
        if reach == 0 {
            return Err(Error::InvalidConfig("reach must be at least 1".into()));
        }
        Ok(Self {
            kernel,
            lambda,
            reach,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionState {
    pub left: Vec<f64>,
    pub middle: Vec<f64>,
    pub right: Vec<f64>,
    pub step: usize,
}

impl DiffusionState {
    pub fn zeros(g: &TripartiteGraph) -> Self {
        Self {
            left: vec![0.0; g.n_left()],
            middle: vec![0.0; g.n_middle()],
            right: vec![0.0; g.n_right()],
            step: 0,
        }
    }

    pub fn layer(&self, pos: LayerPos) -> &[f64] {
        match pos {
            LayerPos::Left => &self.left,
            LayerPos::Middle => &self.middle,
            LayerPos::Right => &self.right,
        }
    }

    pub fn layer_mut(&mut self, pos: LayerPos) -> &mut Vec<f64> {
        match pos {
            LayerPos::Left => &mut self.left,
            LayerPos::Middle => &mut self.middle,
            LayerPos::Right => &mut self.right,
        }
    }

    pub fn total(&self) -> f64 {
        self.left.iter().chain(&self.middle).chain(&self.right).sum()
    }

    fn check_dims(&self, g: &TripartiteGraph) -> Result<()> {
        for (have, want) in [
            (self.left.len(), g.n_left()),
            (self.middle.len(), g.n_middle()),
            (self.right.len(), g.n_right()),
        ] {
            if have != want {
                return Err(Error::DimensionMismatch {
                    expected: want,
                    found: have,
                });
            }
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        let ok = self
            .left
            .iter()
            .chain(&self.middle)
            .chain(&self.right)
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::NumericalFailure { step: self.step })
        }
    }
}

#[derive(Debug, Clone)]
pub struct Seed {
    pub state: DiffusionState,
    pub known_tags: usize,
    pub unknown_tags: usize,
}

impl Seed {
    /// No target tag exists in the graph; every score will tie at zero.
    pub fn is_zero(&self) -> bool {
        self.known_tags == 0
    }
}

/// One unit of resource on every target tag found in the graph's tag layer.
pub fn seed_from_tags<'a, I>(g: &TripartiteGraph, tags: I) -> Seed
where
    I: IntoIterator<Item = &'a str>,
{
    let pos = g.position_of(Role::Tag);
    let ids = g.layer(pos).ids;
    let mut state = DiffusionState::zeros(g);
    let (mut known, mut unknown) = (0, 0);
    let layer = state.layer_mut(pos);
    for tag in tags {
        match ids.binary_search_by(|t| t.as_str().cmp(tag)) {
            Ok(i) if layer[i] == 0.0 => {
                layer[i] = 1.0;
                known += 1;
            }
            Ok(_) => {}
            Err(_) => unknown += 1,
        }
    }
    Seed {
        state,
        known_tags: known,
        unknown_tags: unknown,
    }
}

fn reciprocal(k: &[f64]) -> Vec<f64> {
    k.iter().map(|&k| if k > 0.0 { 1.0 / k } else { 0.0 }).collect()
}

/// Precomputed degree reciprocals and scratch space for repeated stepping on
/// one graph.
pub struct Diffuser<'g> {
    g: &'g TripartiteGraph,
    inv_left: Vec<f64>,
    inv_mid_left: Vec<f64>,
    inv_mid_right: Vec<f64>,
    inv_right: Vec<f64>,
    scratch_left: Vec<f64>,
    scratch_mid: Vec<f64>,
    scratch_right: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Split {
    Lambda(f64),
    /// Middle nodes pass their full resource to both sides.
    Unsplit,
}

impl<'g> Diffuser<'g> {
    pub fn new(g: &'g TripartiteGraph) -> Self {
        let lm = g.left_middle();
        let mr = g.middle_right();
        Self {
            g,
            inv_left: reciprocal(lm.row_sums()),
            inv_mid_left: reciprocal(lm.col_sums()),
            inv_mid_right: reciprocal(mr.row_sums()),
            inv_right: reciprocal(mr.col_sums()),
            scratch_left: vec![0.0; g.n_left()],
            scratch_mid: vec![0.0; g.n_middle()],
            scratch_right: vec![0.0; g.n_right()],
        }
    }

    pub fn graph(&self) -> &'g TripartiteGraph {
        self.g
    }

    /// Advances `s` by one step in place.
    pub fn step(&mut self, s: &mut DiffusionState, kernel: Kernel, lambda: f64) -> Result<()> {
        s.check_dims(self.g)?;
        match kernel {
            Kernel::ProbS => self.probs(s, Split::Lambda(lambda)),
            Kernel::HeatS => self.heats(s, lambda),
        }
        s.step += 1;
        s.check_finite()
    }

    fn probs(&mut self, s: &mut DiffusionState, split: Split) {
        let lm = self.g.left_middle();
        let mr = self.g.middle_right();

        // outer layers -> middle, each sender divides by its own degree
        for (x, v) in self.scratch_left.iter_mut().enumerate() {
            *v = s.left[x] * self.inv_left[x];
        }
        for (z, v) in self.scratch_right.iter_mut().enumerate() {
            *v = s.right[z] * self.inv_right[z];
        }
        for (y, out) in self.scratch_mid.iter_mut().enumerate() {
            let from_left: f64 = lm.col(y).map(|(x, w)| w * self.scratch_left[x]).sum();
            let from_right: f64 = mr.row(y).map(|(z, w)| w * self.scratch_right[z]).sum();
            *out = from_left + from_right;
        }

        // middle -> outer layers, divided by the per-side middle degree
        let (to_left, to_right) = match split {
            Split::Lambda(l) => (l, 1.0 - l),
            Split::Unsplit => (1.0, 1.0),
        };
        for (x, out) in self.scratch_left.iter_mut().enumerate() {
            let sum: f64 = lm
                .row(x)
                .map(|(y, w)| w * s.middle[y] * self.inv_mid_left[y])
                .sum();
            *out = to_left * sum;
        }
        for (z, out) in self.scratch_right.iter_mut().enumerate() {
            let sum: f64 = mr
                .col(z)
                .map(|(y, w)| w * s.middle[y] * self.inv_mid_right[y])
                .sum();
            *out = to_right * sum;
        }
        self.swap_into(s);
    }

    fn heats(&mut self, s: &mut DiffusionState, lambda: f64) {
        let lm = self.g.left_middle();
        let mr = self.g.middle_right();

        // each receiver averages over its own degree
        for (y, out) in self.scratch_mid.iter_mut().enumerate() {
            let from_left: f64 = lm.col(y).map(|(x, w)| w * s.left[x]).sum();
            let from_right: f64 = mr.row(y).map(|(z, w)| w * s.right[z]).sum();
            *out = from_left * self.inv_mid_left[y] + from_right * self.inv_mid_right[y];
        }
        for (x, out) in self.scratch_left.iter_mut().enumerate() {
            let sum: f64 = lm.row(x).map(|(y, w)| w * s.middle[y]).sum();
            *out = lambda * (sum * self.inv_left[x]);
        }
        for (z, out) in self.scratch_right.iter_mut().enumerate() {
            let sum: f64 = mr.col(z).map(|(y, w)| w * s.middle[y]).sum();
            *out = (1.0 - lambda) * (sum * self.inv_right[z]);
        }
        self.swap_into(s);
    }

    fn swap_into(&mut self, s: &mut DiffusionState) {
        std::mem::swap(&mut s.left, &mut self.scratch_left);
        std::mem::swap(&mut s.middle, &mut self.scratch_mid);
        std::mem::swap(&mut s.right, &mut self.scratch_right);
    }

    /// Investor-layer values after each reach `1..=max_reach`, from a tag seed.
    pub fn scores_by_reach<'a, I>(
        &mut self,
        tags: I,
        kernel: Kernel,
        lambda: f64,
        max_reach: usize,
    ) -> Result<Vec<Vec<f64>>>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let rep = self.g.representation();
        let investors = self.g.position_of(Role::Investor);
        let mut state = seed_from_tags(self.g, tags).state;
        let mut out = Vec::with_capacity(max_reach);
        for reach in 1..=max_reach {
            while state.step < steps_for_reach(rep, reach) {
                self.step(&mut state, kernel, lambda)?;
            }
            out.push(state.layer(investors).to_vec());
        }
        Ok(out)
    }
}

/// One ProbS step with the lambda split on middle-node outflow.
pub fn probs_step(g: &TripartiteGraph, s: &DiffusionState, lambda: f64) -> Result<DiffusionState> {
    let mut next = s.clone();
    Diffuser::new(g).step(&mut next, Kernel::ProbS, lambda)?;
    Ok(next)
}

/// ProbS without the lambda split: middle nodes hand their whole resource to
/// each side.
pub fn probs_step_unsplit(g: &TripartiteGraph, s: &DiffusionState) -> Result<DiffusionState> {
    s.check_dims(g)?;
    let mut next = s.clone();
    Diffuser::new(g).probs(&mut next, Split::Unsplit);
    next.step += 1;
    next.check_finite()?;
    Ok(next)
}

pub fn heats_step(g: &TripartiteGraph, s: &DiffusionState, lambda: f64) -> Result<DiffusionState> {
    let mut next = s.clone();
    Diffuser::new(g).step(&mut next, Kernel::HeatS, lambda)?;
    Ok(next)
}

/// Number of steps until resource reaches the investor layer for the
/// `reach`-th time. Investors sit two hops from the tags in TCI and one hop
/// away in the virtual-link layouts.
pub fn steps_for_reach(representation: Representation, reach: usize) -> usize {
    match representation {
        Representation::Tci => 2 * reach,
        _ => (2 * reach).saturating_sub(1),
    }
}

/// Seeds the target's tags, diffuses to the configured reach and returns the
/// investor-layer values.
pub fn score<'a, I>(g: &TripartiteGraph, target_tags: I, cfg: &KernelConfig) -> Result<ScoreVector>
where
    I: IntoIterator<Item = &'a str>,
{
    let cfg = KernelConfig::new(cfg.kernel, cfg.lambda, cfg.reach)?;
    let mut diffuser = Diffuser::new(g);
    let mut state = seed_from_tags(g, target_tags).state;
    let steps = steps_for_reach(g.representation(), cfg.reach);
    for _ in 0..steps {
        diffuser.step(&mut state, cfg.kernel, cfg.lambda)?;
    }
    let pos = g.position_of(Role::Investor);
    let scores = std::mem::take(state.layer_mut(pos));
    ScoreVector::new(g.investors(), scores, provenance(g.representation(), &cfg))
}

pub fn provenance(rep: Representation, cfg: &KernelConfig) -> String {
    format!(
        "{} {} lambda={} reach={}",
        cfg.kernel, rep, cfg.lambda, cfg.reach
    )
}
