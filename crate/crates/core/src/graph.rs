//! Undirected simple graphs over dense `0..n` node indices.
//!
//! Edge membership lives in a packed bit matrix (one row of `u64` words per
//! node) so that `has_edge` is a single bit test and shared-partner counts are
//! a popcount over the AND of two rows. Adjacency lists are kept alongside for
//! degree lookups and `O(degree)` neighbor iteration.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Seed;

#[derive(Clone, Debug)]
pub struct UndirectedGraph {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    adj: Vec<Vec<u32>>,
    edge_count: usize,
}

impl PartialEq for UndirectedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.bits == other.bits
    }
}

impl Eq for UndirectedGraph {}

/// Number of unordered node pairs, `n(n-1)/2`.
pub fn dyad_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

impl UndirectedGraph {
    pub fn new_empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let words = n.div_ceil(64);
        Ok(Self {
            n,
            words,
            bits: vec![0; n * words],
            adj: vec![Vec::new(); n],
            edge_count: 0,
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::new_empty(n)?;
        for i in 0..n {
            for j in i + 1..n {
                g.flip(i, j);
            }
        }
        Ok(g)
    }

    /// Bernoulli(`p`) graph: every dyad is included independently.
    pub fn random(n: usize, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        let mut g = Self::new_empty(n)?;
        let mut rng = Seed(seed).rng();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    g.flip(i, j);
                }
            }
        }
        Ok(g)
    }

    /// Builds a graph from 0-based pairs. Self-loops, duplicates (in either
    /// orientation) and out-of-range endpoints are rejected.
    pub fn from_edge_list(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new_empty(n)?;
        for &(a, b) in pairs {
            g.check_pair(a, b)?;
            if g.has_edge(a, b) {
                return Err(Error::DuplicateEdge(a.min(b), a.max(b)));
            }
            g.flip(a, b);
        }
        Ok(g)
    }

    /// Canonical edge list: `i < j`, sorted lexicographically.
    pub fn to_edge_list(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for i in 0..self.n {
            for j in self.row_iter(i) {
                if j > i {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn dyad_count(&self) -> usize {
        dyad_count(self.n)
    }

    pub fn density(&self) -> f64 {
        let d = self.dyad_count();
        if d == 0 {
            0.0
        } else {
            self.edge_count as f64 / d as f64
        }
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adj[i]
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn row_iter(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        iter_bits(self.row(i).iter().copied())
    }

    pub(crate) fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        for index in [i, j] {
            if index >= self.n {
                return Err(Error::NodeOutOfRange { index, n: self.n });
            }
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        Ok(())
    }

    /// Flips dyad `(i, j)` and returns whether the edge is now present.
    pub fn toggle(&mut self, i: usize, j: usize) -> Result<bool> {
        self.check_pair(i, j)?;
        Ok(self.flip(i, j))
    }

    /// Unchecked toggle for hot loops; `i != j`, both `< n`.
    #[inline]
    pub(crate) fn flip(&mut self, i: usize, j: usize) -> bool {
        debug_assert!(i != j && i < self.n && j < self.n);
        let (wi, wj) = (i * self.words + j / 64, j * self.words + i / 64);
        let (mi, mj) = (1u64 << (j % 64), 1u64 << (i % 64));
        self.bits[wi] ^= mi;
        self.bits[wj] ^= mj;
        if self.bits[wi] & mi != 0 {
            self.adj[i].push(j as u32);
            self.adj[j].push(i as u32);
            self.edge_count += 1;
            true
        } else {
            remove_value(&mut self.adj[i], j as u32);
            remove_value(&mut self.adj[j], i as u32);
            self.edge_count -= 1;
            false
        }
    }

    /// Sets the state of dyad `(i, j)`; returns the previous state.
    pub(crate) fn set_edge(&mut self, i: usize, j: usize, present: bool) -> bool {
        let was = self.has_edge(i, j);
        if was != present {
            self.flip(i, j);
        }
        was
    }

    /// Number of common neighbors of `i` and `j`.
    pub fn shared_partners(&self, i: usize, j: usize) -> Result<usize> {
        self.check_pair(i, j)?;
        Ok(self.shared_partners_unchecked(i, j))
    }

    #[inline]
    pub fn shared_partners_unchecked(&self, i: usize, j: usize) -> usize {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Iterates the common neighbors of `i` and `j` in increasing order.
    pub fn common_neighbors(&self, i: usize, j: usize) -> impl Iterator<Item = usize> + '_ {
        iter_bits(self.row(i).iter().zip(self.row(j)).map(|(a, b)| a & b))
    }

    /// Applies a node relabeling: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: perm.len() });
        }
        let pairs: Vec<_> = self.to_edge_list().into_iter().map(|(i, j)| (perm[i], perm[j])).collect();
        Self::from_edge_list(self.n, &pairs)
    }
}

fn remove_value(v: &mut Vec<u32>, x: u32) {
    if let Some(pos) = v.iter().position(|&y| y == x) {
        v.swap_remove(pos);
    }
}

fn iter_bits(words: impl Iterator<Item = u64>) -> impl Iterator<Item = usize> {
    words.enumerate().flat_map(|(w, mut word)| {
        std::iter::from_fn(move || {
            if word == 0 {
                return None;
            }
            let t = word.trailing_zeros() as usize;
            word &= word - 1;
            Some(w * 64 + t)
        })
    })
}

/// Maps a linear index in `0..n(n-1)/2` to the dyad `(i, j)`, `i < j`, in
/// row-major order.
pub fn dyad_from_index(n: usize, mut k: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
        i += 1;
    }
}
