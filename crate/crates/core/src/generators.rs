//! Samplers for the random-graph families used in fitting and selection.
//!
//! Every sampler is a pure function of `(parameters, n, seed)`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Seed};

/// Default ring-lattice neighborhood for Watts-Strogatz graphs.
pub const DEFAULT_WS_K: usize = 4;
/// Default number of edges attached per new Barabási-Albert vertex.
pub const DEFAULT_BA_M: usize = 1;
/// Pairing-model attempts before the d-regular sampler switches to repair.
pub const DR_PAIRING_ATTEMPTS: usize = 100;

/// Random-graph families known to the fitting code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Er,
    Dr,
    Grg,
    Ws,
    Ba,
    Bm,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 6] = [Self::Er, Self::Dr, Self::Grg, Self::Ws, Self::Ba, Self::Bm];

    pub fn name(self) -> &'static str {
        match self {
            Self::Er => "er",
            Self::Dr => "dr",
            Self::Grg => "grg",
            Self::Ws => "ws",
            Self::Ba => "ba",
            Self::Bm => "bm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model family {s:?}")))
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name().to_ascii_uppercase())
    }
}

/// Probabilities between distinct blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffBlock {
    Uniform(f64),
    /// Symmetric M×M matrix; the diagonal is ignored.
    Pairwise(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub block_sizes: Vec<usize>,
    pub off_block: OffBlock,
    pub p_within: Vec<f64>,
}

impl BlockParams {
    /// `M` blocks of `size` vertices each with a single off-block probability.
    pub fn equal(blocks: usize, size: usize, p0: f64, p_within: Vec<f64>) -> Self {
        BlockParams { block_sizes: vec![size; blocks], off_block: OffBlock::Uniform(p0), p_within }
    }

    pub fn blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn n(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Connection probability between blocks `a` and `b`.
    pub fn prob(&self, a: usize, b: usize) -> f64 {
        if a == b {
            self.p_within[a]
        } else {
            match &self.off_block {
                OffBlock::Uniform(p) => *p,
                OffBlock::Pairwise(m) => m[a][b],
            }
        }
    }

    /// Block index of every vertex (contiguous ranges).
    pub fn membership(&self) -> Vec<usize> {
        self.block_sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect()
    }

    /// True when the block structure satisfies the equal-size, shared
    /// off-block probability assumptions of the Stieltjes limit.
    pub fn is_canonical(&self) -> bool {
        let equal = self.block_sizes.windows(2).all(|w| w[0] == w[1]);
        let uniform = match &self.off_block {
            OffBlock::Uniform(_) => true,
            OffBlock::Pairwise(m) => {
                let mut vals = (0..m.len()).flat_map(|a| (0..m.len()).filter(move |&b| b != a).map(move |b| (a, b)));
                match vals.next() {
                    None => true,
                    Some((a0, b0)) => vals.all(|(a, b)| m[a][b] == m[a0][b0]),
                }
            }
        };
        equal && uniform
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.blocks();
        if m == 0 {
            return Err(Error::InvalidParameter("block model needs at least one block".into()));
        }
        if self.block_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidParameter("block sizes must be positive".into()));
        }
        if self.p_within.len() != m {
            return Err(Error::InvalidParameter(format!(
                "{} within-block probabilities for {m} blocks",
                self.p_within.len()
            )));
        }
        for &p in &self.p_within {
            check_prob("p_within", p)?;
        }
        match &self.off_block {
            OffBlock::Uniform(p) => check_prob("p0", *p)?,
            OffBlock::Pairwise(mat) => {
                if mat.len() != m || mat.iter().any(|r| r.len() != m) {
                    return Err(Error::InvalidParameter(format!("off-block matrix must be {m}x{m}")));
                }
                for a in 0..m {
                    for b in 0..m {
                        if a != b {
                            check_prob("p_ab", mat[a][b])?;
                            if mat[a][b] != mat[b][a] {
                                return Err(Error::InvalidParameter("off-block matrix must be symmetric".into()));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parameters of one member of a random-graph family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelParams {
    Er { p: f64 },
    Dr { d: usize },
    Grg { r: f64 },
    Ws { p_r: f64, k: usize },
    Ba { p_s: f64, m: usize },
    Bm(BlockParams),
}

impl ModelParams {
    pub fn family(&self) -> ModelFamily {
        match self {
            Self::Er { .. } => ModelFamily::Er,
            Self::Dr { .. } => ModelFamily::Dr,
            Self::Grg { .. } => ModelFamily::Grg,
            Self::Ws { .. } => ModelFamily::Ws,
            Self::Ba { .. } => ModelFamily::Ba,
            Self::Bm(_) => ModelFamily::Bm,
        }
    }

    /// Checks the family invariants for graphs on `n` vertices.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        match self {
            Self::Er { p } => check_prob("p", *p),
            Self::Dr { d } => check_regular(n, *d),
            Self::Grg { r } => {
                if !(0.0..=std::f64::consts::SQRT_2).contains(r) {
                    return Err(Error::InvalidParameter(format!("radius {r} outside [0, sqrt 2]")));
                }
                Ok(())
            }
            Self::Ws { p_r, k } => {
                check_prob("p_r", *p_r)?;
                if *k == 0 || k % 2 != 0 || *k >= n {
                    return Err(Error::InvalidParameter(format!("K={k} must be even with 0 < K < n={n}")));
                }
                Ok(())
            }
            Self::Ba { p_s, m } => {
                if !(p_s.is_finite() && *p_s >= 0.0) {
                    return Err(Error::InvalidParameter(format!("exponent p_s={p_s} must be >= 0")));
                }
                if *m == 0 || *m >= n {
                    return Err(Error::InvalidParameter(format!("need n > m >= 1, got n={n}, m={m}")));
                }
                Ok(())
            }
            Self::Bm(b) => {
                b.validate()?;
                if b.n() != n {
                    return Err(Error::InvalidParameter(format!("block sizes sum to {} but n={n}", b.n())));
                }
                Ok(())
            }
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name}={p} is not a probability")))
    }
}

fn check_regular(n: usize, d: usize) -> Result<()> {
    if (n * d) % 2 != 0 {
        return Err(Error::InfeasibleDegree(format!("n*d must be even (n={n}, d={d})")));
    }
    if d == 0 || d >= n {
        return Err(Error::InfeasibleDegree(format!("need 0 < d < n (n={n}, d={d})")));
    }
    Ok(())
}

/// Samples a graph from `params` on `n` vertices.
pub fn generate(params: &ModelParams, n: usize, seed: Seed) -> Result<Graph> {
    params.validate(n)?;
    match params {
        ModelParams::Er { p } => Ok(generate_er(n, *p, seed)),
        ModelParams::Dr { d } => generate_dr(n, *d, seed),
        ModelParams::Grg { r } => Ok(generate_grg(n, *r, seed)),
        ModelParams::Ws { p_r, k } => Ok(generate_ws(n, *k, *p_r, seed)),
        ModelParams::Ba { p_s, m } => Ok(generate_ba(n, *m, *p_s, seed)),
        ModelParams::Bm(b) => generate_bm(b, seed),
    }
}

/// Erdős-Rényi graph: each pair `i < j`, visited in lexicographic order,
/// consumes one uniform draw.
pub fn generate_er(n: usize, p: f64, seed: Seed) -> Graph {
    let mut rng = seed.rng();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_sorted_unique(n, edges)
}

/// Block model with contiguous blocks. Consumes the random stream exactly
/// like [`generate_er`], so a single block reproduces the ER graph for the
/// same seed.
pub fn generate_bm(params: &BlockParams, seed: Seed) -> Result<Graph> {
    params.validate()?;
    let n = params.n();
    let member = params.membership();
    let m = params.blocks();
    let probs: Vec<f64> = (0..m * m).map(|k| params.prob(k / m, k % m)).collect();
    let mut rng = seed.rng();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < probs[member[i] * m + member[j]] {
                edges.push((i, j));
            }
        }
    }
    Ok(Graph::from_sorted_unique(n, edges))
}

/// Random geometric graph on the unit square with Euclidean distance.
pub fn generate_grg(n: usize, r: f64, seed: Seed) -> Graph {
    let mut rng = seed.rng();
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    let r2 = r * r;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let dx = pts[i].0 - pts[j].0;
            let dy = pts[i].1 - pts[j].1;
            if dx * dx + dy * dy <= r2 {
                edges.push((i, j));
            }
        }
    }
    Graph::from_sorted_unique(n, edges)
}

/// Watts-Strogatz small world: ring lattice with `k/2` neighbors per side,
/// then each lattice edge `(i, i+j)` is rewired to `(i, u)` with probability
/// `p_r`, `u` uniform among vertices that keep the graph simple.
pub fn generate_ws(n: usize, k: usize, p_r: f64, seed: Seed) -> Graph {
    assert!(k % 2 == 0 && k > 0 && k < n, "K must be even with 0 < K < n");
    let mut rng = seed.rng();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for i in 0..n {
        for j in 1..=k / 2 {
            let u = (i + j) % n;
            adj[i].insert(u);
            adj[u].insert(i);
        }
    }
    for j in 1..=k / 2 {
        for i in 0..n {
            if rng.random::<f64>() >= p_r {
                continue;
            }
            let u = (i + j) % n;
            if !adj[i].contains(&u) || adj[i].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != i && !adj[i].contains(&w) {
                    break w;
                }
            };
            adj[i].remove(&u);
            adj[u].remove(&i);
            adj[i].insert(w);
            adj[w].insert(i);
        }
    }
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(i, nb)| nb.range(i + 1..).map(move |&j| (i, j)))
        .collect();
    Graph::from_sorted_unique(n, edges)
}

/// Barabási-Albert growth with nonlinear preferential attachment.
///
/// Starts from a clique on `m + 1` vertices. Each new vertex connects to `m`
/// distinct earlier vertices drawn with weight `deg^p_s` (weight 1 when the
/// degree is 0).
pub fn generate_ba(n: usize, m: usize, p_s: f64, seed: Seed) -> Graph {
    assert!(m >= 1 && n > m, "need n > m >= 1");
    let mut rng = seed.rng();
    let mut degree = vec![0usize; n];
    let mut edges = Vec::with_capacity(m * n);
    for i in 0..=m {
        for j in i + 1..=m {
            edges.push((i, j));
            degree[i] += 1;
            degree[j] += 1;
        }
    }
    let weight = |d: usize| if d == 0 { 1.0 } else { (d as f64).powf(p_s) };
    let mut tree = Fenwick::new(n);
    for v in 0..=m {
        tree.set(v, weight(degree[v]));
    }
    let mut chosen = Vec::with_capacity(m);
    for v in m + 1..n {
        chosen.clear();
        for _ in 0..m {
            let total = tree.total();
            let target = tree.find(rng.random::<f64>() * total).min(v - 1);
            // exclude from the remaining draws of this step
            tree.set(target, 0.0);
            chosen.push(target);
        }
        for &u in &chosen {
            edges.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
            tree.set(u, weight(degree[u]));
        }
        tree.set(v, weight(degree[v]));
    }
    Graph::from_sorted_unique(n, edges)
}

/// Uniform-ish random d-regular graph.
///
/// Pairing model with rejection of loops and multi-edges; after
/// [`DR_PAIRING_ATTEMPTS`] rejected pairings the last pairing is repaired by
/// degree-preserving edge switches.
pub fn generate_dr(n: usize, d: usize, seed: Seed) -> Result<Graph> {
    check_regular(n, d)?;
    let mut rng = seed.rng();
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut last = Vec::new();
    for _ in 0..DR_PAIRING_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let pairs: Vec<(usize, usize)> =
            stubs.chunks_exact(2).map(|c| (c[0].min(c[1]), c[0].max(c[1]))).collect();
        if is_simple(&pairs) {
            return Ok(Graph::from_sorted_unique(n, pairs));
        }
        last = pairs;
    }
    repair_pairing(n, last, &mut rng)
}

fn is_simple(pairs: &[(usize, usize)]) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(pairs.len());
    pairs.iter().all(|&(a, b)| a != b && seen.insert((a, b)))
}

fn repair_pairing(n: usize, mut pairs: Vec<(usize, usize)>, rng: &mut ChaCha8Rng) -> Result<Graph> {
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for &(a, b) in &pairs {
        *count.entry(key(a, b)).or_default() += 1;
    }
    let is_bad = |count: &HashMap<(usize, usize), usize>, (a, b): (usize, usize)| a == b || count[&key(a, b)] > 1;
    let budget = 1000 * pairs.len().max(1);
    for _ in 0..budget {
        let Some(e) = (0..pairs.len()).find(|&i| is_bad(&count, pairs[i])) else {
            return Ok(Graph::from_sorted_unique(n, pairs));
        };
        let f = rng.random_range(0..pairs.len());
        if f == e {
            continue;
        }
        let (a, b) = pairs[e];
        let (mut c, mut dd) = pairs[f];
        if rng.random::<bool>() {
            std::mem::swap(&mut c, &mut dd);
        }
        if a == c || b == dd || count.contains_key(&key(a, c)) || count.contains_key(&key(b, dd)) || key(a, c) == key(b, dd) {
            continue;
        }
        for old in [pairs[e], pairs[f]] {
            let k = key(old.0, old.1);
            let slot = count.get_mut(&k).expect("tracked edge");
            *slot -= 1;
            if *slot == 0 {
                count.remove(&k);
            }
        }
        pairs[e] = key(a, c);
        pairs[f] = key(b, dd);
        count.insert(pairs[e], 1);
        count.insert(pairs[f], 1);
    }
    if is_simple(&pairs) {
        return Ok(Graph::from_sorted_unique(n, pairs));
    }
    Err(Error::GenerationFailure {
        attempts: DR_PAIRING_ATTEMPTS,
        reason: format!("edge-switch repair did not reach a simple graph within {budget} switches"),
    })
}

/// Binary indexed tree over non-negative weights supporting prefix search.
struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick { tree: vec![0.0; n + 1], values: vec![0.0; n] }
    }

    fn set(&mut self, i: usize, v: f64) {
        let delta = v - self.values[i];
        self.values[i] = v;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut k = self.tree.len() - 1;
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`, skipping
    /// zero-weight entries.
    fn find(&self, mut target: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        // rounding can land on a zero-weight slot; walk to the nearest live one
        let mut i = pos.min(n - 1);
        while self.values[i] == 0.0 && i > 0 {
            i -= 1;
        }
        if self.values[i] == 0.0 {
            i = (0..n).find(|&j| self.values[j] > 0.0).unwrap_or(0);
        }
        i
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_extremes() {
        assert_eq!(generate_er(20, 0.0, Seed(1)).edge_count(), 0);
        assert_eq!(generate_er(20, 1.0, Seed(1)), Graph::complete(20));
    }

    #[test]
    fn er_edge_count_moments() {
        // Binomial(499500, 0.3): sd ≈ 323.9; the mean of 5 runs has sd ≈ 144.8
        let pairs = 1000.0 * 999.0 / 2.0;
        let mean: f64 = (0..5).map(|s| generate_er(1000, 0.3, Seed(s)).edge_count() as f64).sum::<f64>() / 5.0;
        let sd_mean = (pairs * 0.3 * 0.7 / 5.0f64).sqrt();
        assert!((mean - 149_850.0).abs() < 4.0 * sd_mean, "mean {mean}");
    }

    #[test]
    fn dr_small_cases() {
        let k4 = generate_dr(4, 3, Seed(3)).unwrap();
        assert_eq!(k4, Graph::complete(4));
        let c = generate_dr(6, 2, Seed(9)).unwrap();
        assert_eq!(c.degrees(), vec![2; 6]);
        assert_eq!(c.edge_count(), 6);
    }

    #[test]
    fn dr_degrees_exact() {
        for s in 0..3 {
            let g = generate_dr(500, 5, Seed(s)).unwrap();
            assert_eq!(g.degrees(), vec![5; 500]);
        }
        // dense enough that plain pairing essentially never succeeds
        let g = generate_dr(60, 20, Seed(5)).unwrap();
        assert_eq!(g.regular_degree(), Some(20));
    }

    #[test]
    fn dr_infeasible() {
        assert!(matches!(generate_dr(5, 3, Seed(0)), Err(Error::InfeasibleDegree(m)) if m.contains("n*d must be even")));
        assert!(matches!(generate_dr(4, 4, Seed(0)), Err(Error::InfeasibleDegree(_))));
        assert!(matches!(generate_dr(4, 0, Seed(0)), Err(Error::InfeasibleDegree(_))));
    }

    #[test]
    fn grg_extremes_and_monotonicity() {
        assert_eq!(generate_grg(50, 0.0, Seed(2)).edge_count(), 0);
        assert_eq!(generate_grg(50, std::f64::consts::SQRT_2, Seed(2)), Graph::complete(50));
        // same positions for the same seed, so edge sets are nested in r
        let small = generate_grg(300, 0.1, Seed(4));
        let large = generate_grg(300, 0.15, Seed(4));
        assert!(small.edges().iter().all(|&(i, j)| large.has_edge(i, j)));
    }

    #[test]
    fn grg_mean_degree() {
        // interior mean degree n·π·r² ≈ 31.4; the boundary loss for r=0.1 on the
        // unit square is about 8r/3 ≈ 0.267 of that
        let n = 1000;
        let r: f64 = 0.1;
        let mean_deg: f64 = (0..5)
            .map(|s| 2.0 * generate_grg(n, r, Seed(s)).edge_count() as f64 / n as f64)
            .sum::<f64>()
            / 5.0;
        let expected = (n - 1) as f64 * (std::f64::consts::PI * r * r - 8.0 * r.powi(3) / 3.0 + r.powi(4) / 2.0);
        assert!((mean_deg - expected).abs() < 0.05 * expected, "{mean_deg} vs {expected}");
    }

    #[test]
    fn ws_lattice_and_edge_count() {
        let g = generate_ws(20, 4, 0.0, Seed(0));
        assert_eq!(g.degrees(), vec![4; 20]);
        assert!(g.has_edge(0, 1) && g.has_edge(0, 2) && g.has_edge(0, 19) && g.has_edge(0, 18));
        for p in [0.1, 0.5, 1.0] {
            assert_eq!(generate_ws(100, 4, p, Seed(3)).edge_count(), 200);
        }
    }

    #[test]
    fn ws_clustering_exceeds_er() {
        let (n, k, seeds) = (500, 4, 50u64);
        let m = n * k / 2;
        let p_er = m as f64 / (n * (n - 1) / 2) as f64;
        let (mut ws, mut er) = (0.0, 0.0);
        for s in 0..seeds {
            ws += generate_ws(n, k, 0.1, Seed(s)).average_clustering();
            er += generate_er(n, p_er, Seed(1000 + s)).average_clustering();
        }
        assert!(ws > er, "ws {ws} er {er}");
    }

    #[test]
    fn ba_structure() {
        assert_eq!(generate_ba(4, 3, 1.0, Seed(1)), Graph::complete(4));
        let tree = generate_ba(300, 1, 1.0, Seed(2));
        assert_eq!(tree.edge_count(), 299);
        assert_eq!(tree.component_count(), 1);
        let g = generate_ba(200, 3, 1.3, Seed(2));
        assert_eq!(g.edge_count(), 6 + 3 * 196);
    }

    #[test]
    fn ba_heavy_tail() {
        let mut hits = 0;
        for s in 0..50 {
            let mut deg = generate_ba(1000, 1, 1.0, Seed(s)).degrees();
            deg.sort_unstable();
            let median = deg[deg.len() / 2] as f64;
            let top = *deg.last().unwrap() as f64;
            if top > 5.0 * median {
                hits += 1;
            }
        }
        assert_eq!(hits, 50);
    }

    #[test]
    fn bm_single_block_is_er() {
        let b = BlockParams::equal(1, 80, 0.3, vec![0.25]);
        assert_eq!(generate_bm(&b, Seed(11)).unwrap(), generate_er(80, 0.25, Seed(11)));
    }

    #[test]
    fn bm_block_densities() {
        let b = BlockParams::equal(3, 300, 0.2, vec![0.8, 0.5, 0.6]);
        let g = generate_bm(&b, Seed(5)).unwrap();
        let member = b.membership();
        let mut hits = [[0f64; 3]; 3];
        for &(i, j) in g.edges() {
            let (a, c) = (member[i].min(member[j]), member[i].max(member[j]));
            hits[a][c] += 1.0;
        }
        let within = 300.0 * 299.0 / 2.0;
        let across = 300.0 * 300.0;
        assert!((hits[0][0] / within - 0.8).abs() < 0.01);
        assert!((hits[1][1] / within - 0.5).abs() < 0.01);
        assert!((hits[0][2] / across - 0.2).abs() < 0.01);
    }

    #[test]
    fn bm_pairwise_off_block() {
        let b = BlockParams {
            block_sizes: vec![300; 3],
            off_block: OffBlock::Pairwise(vec![
                vec![0.0, 0.1, 0.2],
                vec![0.1, 0.0, 0.05],
                vec![0.2, 0.05, 0.0],
            ]),
            p_within: vec![0.8, 0.5, 0.6],
        };
        assert!(!b.is_canonical());
        let g = generate_bm(&b, Seed(1)).unwrap();
        let cross12 = g.edges().iter().filter(|&&(i, j)| i < 300 && (300..600).contains(&j)).count();
        assert!((cross12 as f64 / 90_000.0 - 0.1).abs() < 0.01);
    }

    #[test]
    fn validation() {
        assert!(ModelParams::Ws { p_r: 0.1, k: 3 }.validate(10).is_err());
        assert!(ModelParams::Ws { p_r: 0.1, k: 10 }.validate(10).is_err());
        assert!(ModelParams::Er { p: 1.5 }.validate(10).is_err());
        assert!(ModelParams::Grg { r: 1.5 }.validate(10).is_err());
        assert!(ModelParams::Ba { p_s: 1.0, m: 10 }.validate(10).is_err());
        assert!(ModelParams::Bm(BlockParams::equal(2, 5, 0.1, vec![0.5, 0.5])).validate(11).is_err());
    }

    #[test]
    fn determinism() {
        let params = [
            ModelParams::Er { p: 0.1 },
            ModelParams::Dr { d: 3 },
            ModelParams::Grg { r: 0.2 },
            ModelParams::Ws { p_r: 0.3, k: 4 },
            ModelParams::Ba { p_s: 1.5, m: 2 },
        ];
        for p in &params {
            let a = generate(p, 60, Seed(77)).unwrap().fingerprint();
            let b = generate(p, 60, Seed(77)).unwrap().fingerprint();
            let c = generate(p, 60, Seed(78)).unwrap().fingerprint();
            assert_eq!(a, b, "{p:?}");
            assert_ne!(a, c, "{p:?}");
        }
    }
}
