//! The rooted Cayley tree of order `k`, truncated at a finite depth.
//!
//! Vertices are numbered breadth-first from the root (id 0), so each sphere
//! `W_n` is a contiguous id range and the direct successors of a vertex are
//! consecutive ids.

use std::ops::Range;

use crate::error::{Error, Result};

pub type Vertex = usize;

/// `|W_n|`: 1 for the root, `(k+1) k^(n-1)` beyond.
pub fn sphere_size(k: usize, n: usize) -> u64 {
    if n == 0 {
        1
    } else {
        (k as u64 + 1) * (k as u64).pow(n as u32 - 1)
    }
}

/// `|V_n| = 1 + (k+1)(k^n - 1)/(k-1)`; the path graph `2n + 1` when `k = 1`.
pub fn ball_size(k: usize, n: usize) -> u64 {
    if k == 1 {
        return 2 * n as u64 + 1;
    }
    let k = k as u64;
    1 + (k + 1) * (k.pow(n as u32) - 1) / (k - 1)
}

/// `|V_n|` by adding up sphere sizes level by level.
pub fn ball_size_by_levels(k: usize, n: usize) -> u64 {
    (0..=n).map(|m| sphere_size(k, m)).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CayleyTree {
    order: usize,
    depth: usize,
    level_starts: Vec<usize>,
}

impl CayleyTree {
    pub fn new(order: usize, depth: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::BadOrder);
        }
        let mut level_starts = Vec::with_capacity(depth + 2);
        let mut start = 0usize;
        for n in 0..=depth {
            level_starts.push(start);
            start += sphere_size(order, n) as usize;
        }
        level_starts.push(start);
        Ok(Self {
            order,
            depth,
            level_starts,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn vertex_count(&self) -> usize {
        self.level_starts[self.depth + 1]
    }

    /// The ids of `W_n`.
    pub fn level(&self, n: usize) -> Range<Vertex> {
        self.level_starts[n]..self.level_starts[n + 1]
    }

    /// The ids of `V_n`.
    pub fn ball(&self, n: usize) -> Range<Vertex> {
        0..self.level_starts[n + 1]
    }

    /// Distance from the root.
    pub fn level_of(&self, x: Vertex) -> usize {
        self.level_starts.partition_point(|&s| s <= x) - 1
    }

    /// `S(x)`, in id order.
    pub fn successors(&self, x: Vertex) -> Result<Range<Vertex>> {
        if x >= self.vertex_count() {
            return Err(Error::OutOfTree(x));
        }
        let n = self.level_of(x);
        if n >= self.depth {
            return Err(Error::OutOfTree(x));
        }
        let next = self.level_starts[n + 1];
        Ok(if n == 0 {
            next..next + self.order + 1
        } else {
            let offset = x - self.level_starts[n];
            let first = next + offset * self.order;
            first..first + self.order
        })
    }

    pub fn parent(&self, x: Vertex) -> Option<Vertex> {
        match self.level_of(x) {
            0 => None,
            1 => Some(0),
            n => {
                let offset = x - self.level_starts[n];
                Some(self.level_starts[n - 1] + offset / self.order)
            }
        }
    }

    /// `L_n`: every parent-child pair inside `V_n`, ordered by child id.
    pub fn edges(&self, n: usize) -> Result<Vec<(Vertex, Vertex)>> {
        if n > self.depth {
            return Err(Error::DepthOutOfRange {
                requested: n,
                depth: self.depth,
            });
        }
        Ok((1..self.level_starts[n + 1])
            .map(|y| (self.parent(y).expect("non-root vertex"), y))
            .collect())
    }
}
