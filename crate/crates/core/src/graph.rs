//! Graph skeletons carrying the random blocks.
//!
//! Two families are supported: Erdős–Rényi graphs where every pair is an edge
//! independently with probability `Z/N`, and random `Z`-regular simple graphs
//! drawn from the pairing (configuration) model.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFamily {
    ErdosRenyi,
    Regular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n_vertices: usize,
    /// Average degree for Erdős–Rényi, exact degree for regular graphs.
    pub mean_degree: f64,
    pub family: GraphFamily,
}

impl GraphSpec {
    pub fn erdos_renyi(n_vertices: usize, mean_degree: f64) -> Self {
        Self {
            n_vertices,
            mean_degree,
            family: GraphFamily::ErdosRenyi,
        }
    }

    pub fn regular(n_vertices: usize, degree: usize) -> Self {
        Self {
            n_vertices,
            mean_degree: degree as f64,
            family: GraphFamily::Regular,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vertices;
        let z = self.mean_degree;
        if n == 0 {
            return Err(Error::InvalidSpec("graph needs at least one vertex".into()));
        }
        if !z.is_finite() || z < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "mean degree {z} must be finite and nonnegative"
            )));
        }
        match self.family {
            GraphFamily::ErdosRenyi => {
                if z > n as f64 {
                    return Err(Error::InvalidSpec(format!(
                        "edge probability Z/N = {z}/{n} exceeds 1"
                    )));
                }
            }
            GraphFamily::Regular => {
                if z.fract() != 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "regular degree {z} is not an integer"
                    )));
                }
                let k = z as usize;
                if k >= n {
                    return Err(Error::InvalidSpec(format!(
                        "regular degree {k} must be below N = {n}"
                    )));
                }
                if (n * k) % 2 != 0 {
                    return Err(Error::InvalidSpec(format!("N*Z = {n}*{k} is odd")));
                }
            }
        }
        Ok(())
    }
}

/// Simple undirected graph as a sorted list of `(min, max)` vertex pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSet {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    pub fn empty(n_vertices: usize) -> Self {
        Self {
            n_vertices,
            edges: Vec::new(),
        }
    }

    /// Builds an edge set from arbitrary pairs, normalizing and sorting them.
    /// Self-loops, duplicates and out-of-range endpoints are rejected.
    pub fn from_pairs(
        n_vertices: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (i, j) in pairs {
            if i == j {
                return Err(Error::InvalidSpec(format!("self-loop at vertex {i}")));
            }
            if i >= n_vertices || j >= n_vertices {
                return Err(Error::InvalidSpec(format!(
                    "edge ({i},{j}) out of range for N = {n_vertices}"
                )));
            }
            edges.push((i.min(j), i.max(j)));
        }
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        if edges.len() != before {
            return Err(Error::InvalidSpec("duplicate edge".into()));
        }
        Ok(Self { n_vertices, edges })
    }

    pub fn complete(n_vertices: usize) -> Self {
        let edges = (0..n_vertices)
            .flat_map(|i| (i + 1..n_vertices).map(move |j| (i, j)))
            .collect();
        Self { n_vertices, edges }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }
}

pub fn vertex_degrees(edges: &EdgeSet) -> Vec<usize> {
    let mut degrees = vec![0; edges.n_vertices];
    for &(i, j) in &edges.edges {
        degrees[i] += 1;
        degrees[j] += 1;
    }
    degrees
}

/// Dispatches on the graph family.
pub fn sample_edges<R: Rng + ?Sized>(spec: &GraphSpec, rng: &mut R) -> Result<EdgeSet> {
    match spec.family {
        GraphFamily::ErdosRenyi => sample_er_edges(spec, rng),
        GraphFamily::Regular => sample_regular_edges(spec, rng),
    }
}

/// Erdős–Rényi skeleton: each of the `N(N-1)/2` pairs independently with
/// probability `Z/N`. Pairs are visited in lexicographic order, which is also
/// the storage order.
pub fn sample_er_edges<R: Rng + ?Sized>(spec: &GraphSpec, rng: &mut R) -> Result<EdgeSet> {
    if spec.family != GraphFamily::ErdosRenyi {
        return Err(Error::InvalidSpec("expected an Erdős–Rényi spec".into()));
    }
    spec.validate()?;
    let n = spec.n_vertices;
    let p = spec.mean_degree / n as f64;
    let mut edges = Vec::new();
    if p > 0.0 {
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((i, j));
                }
            }
        }
    }
    Ok(EdgeSet {
        n_vertices: n,
        edges,
    })
}

/// Consecutive rejected proposals before checking whether the partial pairing
/// can still be completed.
const STUCK_PROBE: usize = 64;
const MAX_RESTARTS: usize = 10_000;

/// Random `Z`-regular simple graph from the pairing model.
///
/// Each vertex owns `Z` half-edges. Random pairs of free half-edges are
/// joined unless they would create a self-loop or a repeated edge; if the
/// remaining half-edges admit no valid pair the whole pairing restarts.
pub fn sample_regular_edges<R: Rng + ?Sized>(spec: &GraphSpec, rng: &mut R) -> Result<EdgeSet> {
    if spec.family != GraphFamily::Regular {
        return Err(Error::InvalidSpec("expected a regular-graph spec".into()));
    }
    spec.validate()?;
    let n = spec.n_vertices;
    let k = spec.mean_degree as usize;
    if k == 0 {
        return Ok(EdgeSet::empty(n));
    }
    for _ in 0..MAX_RESTARTS {
        if let Some(pairs) = try_pairing(n, k, rng) {
            return EdgeSet::from_pairs(n, pairs);
        }
    }
    Err(Error::Resource(format!(
        "no simple {k}-regular pairing on {n} vertices after {MAX_RESTARTS} restarts"
    )))
}

fn try_pairing<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Option<Vec<(usize, usize)>> {
    let mut free: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
    free.shuffle(rng);
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(n * k / 2);
    let mut pairs = Vec::with_capacity(n * k / 2);
    let mut rejected = 0;
    while !free.is_empty() {
        let a = rng.random_range(0..free.len());
        let b = rng.random_range(0..free.len());
        let (u, v) = (free[a], free[b]);
        let key = (u.min(v), u.max(v));
        if a == b || u == v || seen.contains(&key) {
            rejected += 1;
            if rejected >= STUCK_PROBE {
                if !has_valid_pair(&free, &seen) {
                    return None;
                }
                rejected = 0;
            }
            continue;
        }
        rejected = 0;
        seen.insert(key);
        pairs.push(key);
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        free.swap_remove(hi);
        free.swap_remove(lo);
    }
    Some(pairs)
}

fn has_valid_pair(free: &[usize], seen: &HashSet<(usize, usize)>) -> bool {
    let mut vertices: Vec<usize> = free.to_vec();
    vertices.sort_unstable();
    vertices.dedup();
    for (x, &u) in vertices.iter().enumerate() {
        for &v in &vertices[x + 1..] {
            if !seen.contains(&(u, v)) {
                return true;
            }
        }
    }
    false
}
