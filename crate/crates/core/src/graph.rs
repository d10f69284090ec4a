//! Undirected simple graphs, edge-list ingestion and the seed contract.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense adjacency matrices above this order are refused by default.
pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// Undirected simple graph on vertices `0..n`.
///
/// Edges are stored once as `(i, j)` with `i < j`, sorted lexicographically.
/// The value is immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from arbitrary pairs: endpoints are normalized, duplicates
    /// collapsed and self-loops dropped.
    pub fn from_edges<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{n}"
                )));
            }
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
        Ok(Graph { n, edges: set.into_iter().collect() })
    }

    /// Graph with `n` vertices and no edges.
    pub fn empty(n: usize) -> Self {
        Graph { n, edges: Vec::new() }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Graph { n, edges }
    }

    /// Internal constructor for generators that already emit normalized,
    /// duplicate-free pairs.
    pub(crate) fn from_sorted_unique(n: usize, mut edges: Vec<(usize, usize)>) -> Self {
        edges.sort_unstable();
        debug_assert!(edges.windows(2).all(|w| w[0] != w[1]));
        debug_assert!(edges.iter().all(|&(i, j)| i < j && j < n));
        Graph { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).is_ok()
    }

    /// Degree sequence; sums to twice the edge count.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    /// `Some(d)` when every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let deg = self.degrees();
        let first = *deg.first()?;
        deg.iter().all(|&d| d == first).then_some(first)
    }

    /// Dense symmetric 0/1 adjacency matrix, refusing graphs above
    /// [`DEFAULT_DENSE_CAP`].
    pub fn adjacency_dense<T: Real>(&self) -> Result<SymmetricMatrix<T>> {
        self.adjacency_dense_capped(DEFAULT_DENSE_CAP)
    }

    pub fn adjacency_dense_capped<T: Real>(&self, cap: usize) -> Result<SymmetricMatrix<T>> {
        if self.n > cap {
            return Err(Error::ResourceLimit { n: self.n, cap });
        }
        let mut m = SymmetricMatrix::zeros(self.n);
        for &(i, j) in &self.edges {
            m.set_sym(i, j, T::one());
        }
        Ok(m)
    }

    /// Number of connected components, isolated vertices included.
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut count = self.n;
        for &(i, j) in &self.edges {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
                count -= 1;
            }
        }
        count
    }

    pub fn isolated_count(&self) -> usize {
        self.degrees().iter().filter(|&&d| d == 0).count()
    }

    /// Mean local clustering coefficient; vertices of degree < 2 contribute 0.
    pub fn average_clustering(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let adj = self.neighbors();
        let mut total = 0.0;
        for nb in &adj {
            let k = nb.len();
            if k < 2 {
                continue;
            }
            let mut links = 0usize;
            for (a, &u) in nb.iter().enumerate() {
                for &v in &nb[a + 1..] {
                    if self.has_edge(u, v) {
                        links += 1;
                    }
                }
            }
            total += 2.0 * links as f64 / (k * (k - 1)) as f64;
        }
        total / self.n as f64
    }

    /// Serializes in the edge-list format read by [`load_edge_list`], with an
    /// `n=` header so isolated vertices survive the round trip.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 8 + 16);
        let _ = writeln!(out, "n={}", self.n);
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    /// Order-independent 64-bit fingerprint of `(n, edges)` (FNV-1a).
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        feed(self.n as u64);
        for &(i, j) in &self.edges {
            feed(i as u64);
            feed(j as u64);
        }
        h
    }
}

/// Dense symmetric matrix in row-major storage. Only used as eigensolver input.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SymmetricMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix { n, data: vec![T::zero(); n * n] }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn map_inplace(&mut self, mut f: impl FnMut(usize, usize, T) -> T) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                self.data[k] = f(i, j, self.data[k]);
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub(crate) fn into_raw(self) -> (usize, Vec<T>) {
        (self.n, self.data)
    }
}

/// 64-bit seed. Every generator is a pure function of its parameters and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Child seed number `index` of this seed (splitmix64 finalizer over
    /// `seed + (index + 1) * golden_gamma`).
    pub fn derive(self, index: u64) -> Seed {
        Seed(splitmix64(self.0.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1)))))
    }

    /// Child seed keyed by a string label, e.g. a model family name.
    pub fn derive_label(self, label: &str) -> Seed {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        self.derive(h)
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeListOptions {
    /// Subtract one from every id (files using 1-based vertex ids).
    pub one_based: bool,
}

/// Result of parsing an edge list, with tallies of what was discarded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub duplicates: usize,
    pub self_loops: usize,
    /// Vertex count from an `n=` header, when present.
    pub declared_n: Option<usize>,
}

/// Parses the whitespace-separated edge-list format.
///
/// `#` and `%` start comment lines, blank lines are skipped and an optional
/// `n=<int>` line fixes the vertex count. Columns after the first two are
/// ignored.
pub fn load_edge_list(text: &str) -> Result<LoadedGraph> {
    load_edge_list_with(text, EdgeListOptions::default())
}

pub fn load_edge_list_with(text: &str, opts: EdgeListOptions) -> Result<LoadedGraph> {
    let mut declared_n = None;
    let mut pairs = Vec::new();
    let mut self_loops = 0usize;
    let mut max_id: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("n=") {
            let n = rest.trim().parse::<usize>().map_err(|_| Error::MalformedLine {
                line: line_no,
                reason: format!("bad vertex-count header {line:?}"),
            })?;
            declared_n = Some(n);
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut next_id = || -> Result<usize> {
            let tok = tokens.next().ok_or_else(|| Error::MalformedLine {
                line: line_no,
                reason: "expected two vertex ids".into(),
            })?;
            let id = tok.parse::<usize>().map_err(|_| Error::MalformedLine {
                line: line_no,
                reason: format!("{tok:?} is not a non-negative integer"),
            })?;
            if opts.one_based {
                id.checked_sub(1).ok_or_else(|| Error::MalformedLine {
                    line: line_no,
                    reason: "vertex id 0 in a 1-based file".into(),
                })
            } else {
                Ok(id)
            }
        };
        let a = next_id()?;
        let b = next_id()?;
        max_id = Some(max_id.map_or(a.max(b), |m| m.max(a).max(b)));
        if a == b {
            self_loops += 1;
        } else {
            pairs.push((a.min(b), a.max(b)));
        }
    }

    let implied_n = max_id.map_or(0, |m| m + 1);
    let n = match declared_n {
        Some(d) if d < implied_n => {
            return Err(Error::MalformedLine {
                line: 0,
                reason: format!("header declares n={d} but ids reach {}", implied_n - 1),
            })
        }
        Some(d) => d,
        None => implied_n,
    };
    if n == 0 {
        return Err(Error::EmptyGraph);
    }

    let total = pairs.len();
    pairs.sort_unstable();
    pairs.dedup();
    let duplicates = total - pairs.len();
    Ok(LoadedGraph {
        graph: Graph::from_sorted_unique(n, pairs),
        duplicates,
        self_loops,
        declared_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let g = load_edge_list("0 1\n1 2\n2 0\n").unwrap().graph;
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(g.degrees(), vec![2, 2, 2]);
    }

    #[test]
    fn duplicates_and_self_loops_are_tallied() {
        let l = load_edge_list("0 1\n0 1\n1 1\n").unwrap();
        assert_eq!(l.graph.n(), 2);
        assert_eq!(l.graph.edges(), &[(0, 1)]);
        assert_eq!(l.duplicates, 1);
        assert_eq!(l.self_loops, 1);
    }

    #[test]
    fn reversed_duplicate_counts_once() {
        let l = load_edge_list("0 1\n1 0\n").unwrap();
        assert_eq!(l.graph.edge_count(), 1);
        assert_eq!(l.duplicates, 1);
    }

    #[test]
    fn comments_header_and_extra_columns() {
        let text = "% konect style\n# comment\nn=6\n\n0 1 1.0\n2\t3\n";
        let l = load_edge_list(text).unwrap();
        assert_eq!(l.graph.n(), 6);
        assert_eq!(l.declared_n, Some(6));
        assert_eq!(l.graph.isolated_count(), 2);
    }

    #[test]
    fn one_based_offset() {
        let l = load_edge_list_with("1 2\n2 3\n", EdgeListOptions { one_based: true }).unwrap();
        assert_eq!(l.graph.n(), 3);
        assert_eq!(l.graph.edges(), &[(0, 1), (1, 2)]);
        assert!(load_edge_list_with("0 1\n", EdgeListOptions { one_based: true }).is_err());
    }

    #[test]
    fn malformed_line_reports_number() {
        match load_edge_list("0 1\n1 x\n") {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_edge_list("0 -1\n"), Err(Error::MalformedLine { line: 1, .. })));
        assert!(matches!(load_edge_list("3\n"), Err(Error::MalformedLine { .. })));
    }

    #[test]
    fn empty_input() {
        assert_eq!(load_edge_list("# nothing\n"), Err(Error::EmptyGraph));
        // only self-loops still defines vertices
        let l = load_edge_list("2 2\n").unwrap();
        assert_eq!(l.graph.n(), 3);
        assert_eq!(l.graph.edge_count(), 0);
    }

    #[test]
    fn header_smaller_than_ids_is_rejected() {
        assert!(load_edge_list("n=2\n0 5\n").is_err());
    }

    #[test]
    fn degree_examples() {
        let single = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert_eq!(single.degrees(), vec![1, 1, 0]);
        let star = Graph::from_edges(5, (1..5).map(|j| (0, j))).unwrap();
        assert_eq!(star.degrees(), vec![4, 1, 1, 1, 1]);
    }

    #[test]
    fn dense_adjacency() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let a = g.adjacency_dense::<f64>().unwrap();
        assert_eq!((a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1)), (0.0, 1.0, 1.0, 0.0));

        let k3 = Graph::complete(3).adjacency_dense::<f64>().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(k3.get(i, j), if i == j { 0.0 } else { 1.0 });
            }
        }
        let z = Graph::empty(3).adjacency_dense::<f32>().unwrap();
        assert!((0..3).all(|i| (0..3).all(|j| z.get(i, j) == 0.0)));
    }

    #[test]
    fn dense_cap() {
        let g = Graph::empty(11);
        assert_eq!(
            g.adjacency_dense_capped::<f64>(10),
            Err(Error::ResourceLimit { n: 11, cap: 10 })
        );
    }

    #[test]
    fn components_and_clustering() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(g.component_count(), 3);
        assert!((g.average_clustering() - 3.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn seed_derivation_is_stable_and_distinct() {
        let s = Seed(42);
        assert_eq!(s.derive(3), Seed(42).derive(3));
        assert_ne!(s.derive(0), s.derive(1));
        assert_ne!(s.derive_label("er"), s.derive_label("dr"));
    }
}
