//! Dense-matrix reference implementations used to cross-check the sparse
//! kernels.

#![allow(dead_code)]

use startup_match::diffusion::DiffusionState;
use startup_match::graph::TripartiteGraph;

/// Full weight matrices: `a[x][y]` left-middle, `b[y][z]` middle-right.
pub struct Dense {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl Dense {
    pub fn from_graph(g: &TripartiteGraph) -> Self {
        let mut a = vec![vec![0.0; g.n_middle()]; g.n_left()];
        let mut b = vec![vec![0.0; g.n_right()]; g.n_middle()];
        for (x, y, w) in g.left_middle().entries() {
            a[x][y] = w;
        }
        for (y, z, w) in g.middle_right().entries() {
            b[y][z] = w;
        }
        Self { a, b }
    }

    fn n_left(&self) -> usize {
        self.a.len()
    }

    fn n_middle(&self) -> usize {
        self.b.len()
    }

    fn n_right(&self) -> usize {
        self.b.first().map_or(0, Vec::len)
    }

    fn k_left(&self, x: usize) -> f64 {
        self.a[x].iter().sum()
    }

    fn k_mid_left(&self, y: usize) -> f64 {
        (0..self.n_left()).map(|x| self.a[x][y]).sum()
    }

    fn k_mid_right(&self, y: usize) -> f64 {
        self.b[y].iter().sum()
    }

    fn k_right(&self, z: usize) -> f64 {
        (0..self.n_middle()).map(|y| self.b[y][z]).sum()
    }
}

fn div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Sender-normalized spreading; `to_left` / `to_right` scale the middle
/// layer's outflow.
pub fn probs(d: &Dense, s: &DiffusionState, to_left: f64, to_right: f64) -> DiffusionState {
    let (nl, nm, nr) = (d.n_left(), d.n_middle(), d.n_right());
    let mut out = DiffusionState {
        left: vec![0.0; nl],
        middle: vec![0.0; nm],
        right: vec![0.0; nr],
        step: s.step + 1,
    };
    for y in 0..nm {
        for x in 0..nl {
            out.middle[y] += div(s.left[x] * d.a[x][y], d.k_left(x));
        }
        for z in 0..nr {
            out.middle[y] += div(s.right[z] * d.b[y][z], d.k_right(z));
        }
    }
    for x in 0..nl {
        for y in 0..nm {
            out.left[x] += to_left * div(s.middle[y] * d.a[x][y], d.k_mid_left(y));
        }
    }
    for z in 0..nr {
        for y in 0..nm {
            out.right[z] += to_right * div(s.middle[y] * d.b[y][z], d.k_mid_right(y));
        }
    }
    out
}

/// Receiver-normalized averaging.
pub fn heats(d: &Dense, s: &DiffusionState, lambda: f64) -> DiffusionState {
    let (nl, nm, nr) = (d.n_left(), d.n_middle(), d.n_right());
    let mut out = DiffusionState {
        left: vec![0.0; nl],
        middle: vec![0.0; nm],
        right: vec![0.0; nr],
        step: s.step + 1,
    };
    for y in 0..nm {
        let from_left: f64 = (0..nl).map(|x| s.left[x] * d.a[x][y]).sum();
        let from_right: f64 = (0..nr).map(|z| s.right[z] * d.b[y][z]).sum();
        out.middle[y] = div(from_left, d.k_mid_left(y)) + div(from_right, d.k_mid_right(y));
    }
    for x in 0..nl {
        let sum: f64 = (0..nm).map(|y| s.middle[y] * d.a[x][y]).sum();
        out.left[x] = lambda * div(sum, d.k_left(x));
    }
    for z in 0..nr {
        let sum: f64 = (0..nm).map(|y| s.middle[y] * d.b[y][z]).sum();
        out.right[z] = (1.0 - lambda) * div(sum, d.k_right(z));
    }
    out
}

pub fn max_abs_diff(a: &DiffusionState, b: &DiffusionState) -> f64 {
    let pairs = a
        .left
        .iter()
        .zip(&b.left)
        .chain(a.middle.iter().zip(&b.middle))
        .chain(a.right.iter().zip(&b.right));
    assert_eq!(a.left.len(), b.left.len());
    assert_eq!(a.middle.len(), b.middle.len());
    assert_eq!(a.right.len(), b.right.len());
    pairs.map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
