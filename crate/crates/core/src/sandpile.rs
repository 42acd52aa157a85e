//! Empirical oracle: Erdős–Rényi graphs and the p-parts of their sandpile
//! groups.
//!
//! The sandpile group of a connected graph is the cokernel of its reduced
//! Laplacian; its order is the number of spanning trees. The p-Sylow
//! subgroup `⊕ Z/p^{λ_i}` is read off the p-adic valuations of the Smith
//! invariant factors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand_core::RngCore;
use rayon::prelude::*;

use crate::bounded::BoundedReal;
use crate::error::{Error, Result};
use crate::measures::{self, PartitionDistribution};
use crate::partition::Partition;
use crate::prime::Prime;
use crate::rational::{self, int, ExactRational};
use crate::sampler::trial_rng;
use crate::snf::{self, IntMatrix};

/// Default cap on recorded p-adic valuations.
pub const DEFAULT_VALUATION_CAP: u32 = 12;

/// Simple undirected graph on `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::new(n);
        for i in 0..n {
            for j in i + 1..n {
                g.edges.insert((i, j));
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Rejects loops, duplicates and out-of-range endpoints.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        if u == v {
            return Err(Error::OutOfRange(format!("self-loop at vertex {u}")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::OutOfRange(format!(
                "edge {u} {v} outside 0..{}",
                self.n
            )));
        }
        if !self.edges.insert((u.min(v), u.max(v))) {
            return Err(Error::OutOfRange(format!("duplicate edge {u} {v}")));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.n;
        for &(u, v) in &self.edges {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }

    /// Same graph with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Graph> {
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Graph::from_edges(self.n, &edges)
    }
}

/// Edge-list text: a header `n <count>`, then one `u v` line per edge.
impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n {}", self.n)?;
        for (u, v) in &self.edges {
            writeln!(f, "{u} {v}")?;
        }
        Ok(())
    }
}

impl FromStr for Graph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let n = header
            .strip_prefix("n ")
            .and_then(|c| c.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse(format!("expected header \"n <count>\", got {header:?}")))?;
        let mut g = Graph::new(n);
        for line in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => g.add_edge(u, v)?,
                _ => return Err(Error::Parse(format!("bad edge line {line:?}"))),
            }
        }
        Ok(g)
    }
}

fn check_q(q: &ExactRational) -> Result<()> {
    if *q <= ExactRational::zero() || *q >= ExactRational::one() {
        return Err(Error::OutOfRange(format!(
            "edge probability must lie strictly inside (0,1), got {}",
            rational::format_rational(q)
        )));
    }
    Ok(())
}

/// G(n, q): each pair `i < j`, in lexicographic order, consumes one `u64`
/// draw `k` and becomes an edge iff `k / 2^64 < q`.
pub fn gen_er_graph<R: RngCore>(n: usize, q: &ExactRational, rng: &mut R) -> Result<Graph> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("need at least 2 vertices, got {n}")));
    }
    check_q(q)?;
    let threshold = rational::ceil_scaled(q, 64).to_u128().unwrap_or(1 << 64);
    let mut g = Graph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if (rng.next_u64() as u128) < threshold {
                g.edges.insert((i, j));
            }
        }
    }
    Ok(g)
}

/// Laplacian with the row and column of `root` removed.
pub fn reduced_laplacian(g: &Graph, root: usize) -> Result<IntMatrix> {
    Ok(reduced_laplacian_i64(g, root)?
        .into_iter()
        .map(|r| r.into_iter().map(BigInt::from).collect())
        .collect())
}

fn reduced_laplacian_i64(g: &Graph, root: usize) -> Result<Vec<Vec<i64>>> {
    if root >= g.n {
        return Err(Error::OutOfRange(format!("root {root} not a vertex")));
    }
    let index = |v: usize| if v < root { v } else { v - 1 };
    let m = g.n - 1;
    let mut l = vec![vec![0i64; m]; m];
    for &(u, v) in &g.edges {
        if u != root {
            l[index(u)][index(u)] += 1;
        }
        if v != root {
            l[index(v)][index(v)] += 1;
        }
        if u != root && v != root {
            l[index(u)][index(v)] -= 1;
            l[index(v)][index(u)] -= 1;
        }
    }
    Ok(l)
}

/// Partition of the p-part of `coker(m)` from the integer Smith form.
/// Valuations at or above `cap` are recorded as `cap` and flagged.
pub fn p_sylow_partition(m: &IntMatrix, p: Prime, cap: u32) -> Result<(Partition, bool)> {
    let diag = snf::smith_diagonal(m)?;
    if cfg!(debug_assertions) {
        debug_assert!(diag.windows(2).all(|w| w[1].is_multiple_of(&w[0])));
        let prod: BigInt = diag.iter().product();
        debug_assert_eq!(prod, snf::determinant(m)?.abs());
    }
    let mut vals: Vec<u32> = diag
        .iter()
        .map(|d| snf::valuation(d, p.get(), cap))
        .filter(|&v| v > 0)
        .collect();
    let capped = vals.iter().any(|&v| v >= cap);
    vals.sort_unstable_by(|a, b| b.cmp(a));
    Ok((Partition::new(vals)?, capped))
}

/// Same result as [`p_sylow_partition`] on a graph, through the p-local
/// elimination when `p^cap` fits in 63 bits.
pub fn graph_p_sylow(g: &Graph, p: Prime, cap: u32) -> Result<(Partition, bool)> {
    let root = g.n - 1;
    let l = reduced_laplacian_i64(g, root)?;
    match snf::p_local_valuations(&l, p.get(), cap)? {
        Some(mut vals) => {
            vals.retain(|&v| v > 0);
            vals.sort_unstable_by(|a, b| b.cmp(a));
            let capped = vals.first().is_some_and(|&v| v >= cap);
            Ok((Partition::new(vals)?, capped))
        }
        None => p_sylow_partition(&reduced_laplacian(g, root)?, p, cap),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub q: ExactRational,
    pub p: Prime,
    pub trials: u64,
    pub seed: u64,
    pub cap: u32,
}

/// One trial's bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphSampleRecord {
    pub n: usize,
    pub q: ExactRational,
    pub seed: u64,
    pub trial: u64,
    pub connected: bool,
    pub partition: Option<Partition>,
    pub valuation_capped: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub counts: BTreeMap<Partition, u64>,
    pub connected: u64,
    pub discarded_disconnected: u64,
    pub capped_count: u64,
}

impl ExperimentResult {
    /// Frequencies among connected samples, with the bookkeeping counts as
    /// extra JSON fields.
    pub fn to_distribution(&self) -> Result<PartitionDistribution> {
        if self.connected == 0 {
            return Err(Error::OutOfRange("no connected samples".into()));
        }
        let c = &self.config;
        let mut params = BTreeMap::new();
        params.insert("n".to_string(), c.n.into());
        params.insert("q".to_string(), rational::format_rational(&c.q).into());
        params.insert("seed".to_string(), c.seed.into());
        params.insert("cap".to_string(), c.cap.into());
        params.insert("requested_trials".to_string(), c.trials.into());
        let mut d = PartitionDistribution::from_counts(c.p, "sandpile", params, &self.counts, self.connected);
        d.extra
            .insert("discarded_disconnected".into(), self.discarded_disconnected.into());
        d.extra.insert("capped".into(), self.capped_count.into());
        Ok(d)
    }
}

pub fn run_trial<R: RngCore>(config: &ExperimentConfig, trial: u64, rng: &mut R) -> Result<GraphSampleRecord> {
    let g = gen_er_graph(config.n, &config.q, rng)?;
    let connected = g.is_connected();
    let (partition, capped) = if connected {
        let (l, c) = graph_p_sylow(&g, config.p, config.cap)?;
        (Some(l), c)
    } else {
        (None, false)
    };
    Ok(GraphSampleRecord {
        n: config.n,
        q: config.q.clone(),
        seed: config.seed,
        trial,
        connected,
        partition,
        valuation_capped: capped,
    })
}

/// Runs `config.trials` graphs, each from its own `(seed, trial)` stream.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(config, |t| trial_rng(config.seed, t))
}

/// As [`run_experiment`] with a caller-supplied stream per trial index.
pub fn run_experiment_with<R, F>(config: &ExperimentConfig, make_rng: F) -> Result<ExperimentResult>
where
    R: RngCore,
    F: Fn(u64) -> R + Sync,
{
    if config.trials == 0 {
        return Err(Error::OutOfRange("trials must be at least 1".into()));
    }
    if config.cap == 0 {
        return Err(Error::OutOfRange("valuation cap must be at least 1".into()));
    }
    if config.n < 2 {
        return Err(Error::OutOfRange(format!("need at least 2 vertices, got {}", config.n)));
    }
    check_q(&config.q)?;
    let records = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t, &mut make_rng(t)))
        .collect::<Result<Vec<_>>>()?;
    let mut result = ExperimentResult {
        config: config.clone(),
        counts: BTreeMap::new(),
        connected: 0,
        discarded_disconnected: 0,
        capped_count: 0,
    };
    for r in records {
        match r.partition {
            Some(l) => {
                result.connected += 1;
                if r.valuation_capped {
                    result.capped_count += 1;
                }
                *result.counts.entry(l).or_insert(0) += 1;
            }
            None => result.discarded_disconnected += 1,
        }
    }
    Ok(result)
}

/// How mass outside the listed supports enters [`tv_distance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailMode {
    /// Tail mass is spread over unknown partitions: it contributes between
    /// `|t1 − t2|/2` and `(t1 + t2)/2`.
    Unallocated,
    /// Both tails describe the same event and are compared as one cell.
    Bucketed,
}

/// Total-variation distance `½ Σ |d1(λ) − d2(λ)|` over the union of
/// supports, plus the tail contribution selected by `mode`.
pub fn tv_distance(d1: &PartitionDistribution, d2: &PartitionDistribution, mode: TailMode) -> Result<BoundedReal> {
    let tol = measures::constant_tolerance();
    let round = |b: BoundedReal| if b.is_exact() { b } else { b.rounded(measures::OUTPUT_BITS) };
    let mut cells: BTreeMap<Partition, (BoundedReal, BoundedReal)> = BTreeMap::new();
    for (l, b) in d1.enclosed_entries(&tol)? {
        cells.entry(l).or_insert_with(|| (BoundedReal::zero(), BoundedReal::zero())).0 = round(b);
    }
    for (l, b) in d2.enclosed_entries(&tol)? {
        cells.entry(l).or_insert_with(|| (BoundedReal::zero(), BoundedReal::zero())).1 = round(b);
    }
    let listed: BoundedReal = cells.into_values().map(|(a, b)| (&a - &b).abs()).sum();
    let half = rational::rat(1, 2);
    let diff = (&d1.tail_mass - &d2.tail_mass).abs();
    let tail = match mode {
        TailMode::Bucketed => diff,
        TailMode::Unallocated => {
            let upper = d1.tail_mass.hi() + d2.tail_mass.hi();
            BoundedReal::from_bounds(diff.lo().max(ExactRational::zero()), upper)
        }
    };
    Ok((&listed + &tail).scale(&half))
}

/// Restricts a distribution to partitions of size `≤ max_size`, moving the
/// rest into the tail.
pub fn restrict_by_size(d: &PartitionDistribution, max_size: u32) -> Result<PartitionDistribution> {
    let tol = measures::constant_tolerance();
    let mut out = d.clone();
    let dropped: BTreeMap<_, _> = d
        .entries
        .iter()
        .filter(|(l, _)| l.size() > max_size)
        .map(|(l, m)| (l.clone(), m.clone()))
        .collect();
    let mut moved = BoundedReal::zero();
    for (l, m) in &dropped {
        out.entries.remove(l);
        moved = &moved + &m.enclose(d.p, &tol)?;
    }
    out.tail_mass = &out.tail_mass + &moved;
    Ok(out)
}

/// Spanning-tree count by determinant; zero for disconnected graphs.
pub fn spanning_tree_count(g: &Graph) -> Result<BigInt> {
    if g.n <= 1 {
        return Ok(BigInt::one());
    }
    Ok(snf::determinant(&reduced_laplacian(g, g.n - 1)?)?.abs())
}

/// p-part of an integer as `p^{v_p(x)}`.
pub fn p_part(x: &BigInt, p: Prime) -> BigInt {
    let pb = BigInt::from(p.get());
    let mut y = x.abs();
    let mut out = BigInt::one();
    while !y.is_zero() && y.is_multiple_of(&pb) {
        y /= &pb;
        out *= &pb;
    }
    out
}

/// Exact-rational frequency of `[]` in an experiment.
pub fn trivial_frequency(result: &ExperimentResult) -> ExactRational {
    let hits = result.counts.get(&Partition::empty()).copied().unwrap_or(0);
    int(hits as i64) / int(result.connected.max(1) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    struct Zeros;
    impl RngCore for Zeros {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0)
        }
    }

    #[test]
    fn forced_edge() {
        let g = gen_er_graph(2, &rat(1, 2), &mut Zeros).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert!(gen_er_graph(1, &rat(1, 2), &mut Zeros).is_err());
        assert!(gen_er_graph(3, &int(1), &mut Zeros).is_err());
        assert!(gen_er_graph(3, &int(0), &mut Zeros).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_er_graph(5, &rat(1, 2), &mut trial_rng(9, 0)).unwrap();
        let b = gen_er_graph(5, &rat(1, 2), &mut trial_rng(9, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edge_counts_concentrate() {
        let n = 50;
        let pairs = (n * (n - 1) / 2) as f64;
        let sigma = (pairs * 0.25).sqrt();
        for t in 0..100 {
            let g = gen_er_graph(n, &rat(1, 2), &mut trial_rng(1, t)).unwrap();
            assert!((g.edge_count() as f64 - pairs / 2.0).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn laplacian_examples() {
        let tri = Graph::complete(3);
        let l = reduced_laplacian(&tri, 2).unwrap();
        assert_eq!(l, vec![vec![BigInt::from(2), BigInt::from(-1)], vec![BigInt::from(-1), BigInt::from(2)]]);
        assert_eq!(snf::determinant(&l).unwrap(), BigInt::from(3));

        let path = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(reduced_laplacian(&path, 1).unwrap(), vec![vec![BigInt::from(1)]]);

        let k4 = reduced_laplacian(&Graph::complete(4), 3).unwrap();
        assert_eq!(k4.len(), 3);
        assert_eq!(snf::determinant(&k4).unwrap(), BigInt::from(16));
    }

    #[test]
    fn sylow_examples() {
        let tri = reduced_laplacian(&Graph::complete(3), 2).unwrap();
        assert_eq!(p_sylow_partition(&tri, p(3), 12).unwrap(), (Partition::new(vec![1]).unwrap(), false));
        assert_eq!(p_sylow_partition(&tri, p(2), 12).unwrap(), (Partition::empty(), false));
        let k4 = reduced_laplacian(&Graph::complete(4), 3).unwrap();
        assert_eq!(p_sylow_partition(&k4, p(2), 12).unwrap(), (Partition::new(vec![2, 2]).unwrap(), false));
        assert_eq!(p_sylow_partition(&k4, p(2), 1).unwrap(), (Partition::new(vec![1, 1]).unwrap(), true));
        let disconnected = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert_eq!(
            p_sylow_partition(&reduced_laplacian(&disconnected, 2).unwrap(), p(2), 12),
            Err(Error::SingularMatrix)
        );
    }

    #[test]
    fn p_local_path_agrees_on_complete_graphs() {
        // K_n has group (Z/n)^{n-2}
        for n in 3..=9usize {
            let g = Graph::complete(n);
            for prime in [2u64, 3, 5, 7] {
                let reference = p_sylow_partition(&reduced_laplacian(&g, n - 1).unwrap(), p(prime), 12).unwrap();
                assert_eq!(graph_p_sylow(&g, p(prime), 12).unwrap(), reference, "K_{n} p={prime}");
            }
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 1), (3, 0)]).unwrap();
        let text = g.to_string();
        assert_eq!(text, "n 4\n0 1\n0 3\n1 2\n");
        assert_eq!(text.parse::<Graph>().unwrap(), g);
        assert!("n 2\n0 0\n".parse::<Graph>().is_err());
        assert!("n 2\n0 1\n1 0\n".parse::<Graph>().is_err());
        assert!("m 2\n".parse::<Graph>().is_err());
        assert!("n 2\n0 5\n".parse::<Graph>().is_err());
    }

    #[test]
    fn forced_complete_triangle_experiment() {
        let cfg = ExperimentConfig {
            n: 3,
            q: rat(1, 2),
            p: p(3),
            trials: 1,
            seed: 0,
            cap: 12,
        };
        let res = run_experiment_with(&cfg, |_| Zeros).unwrap();
        assert_eq!(res.counts.len(), 1);
        assert_eq!(res.counts[&Partition::new(vec![1]).unwrap()], 1);
        assert_eq!(res.discarded_disconnected, 0);
    }

    #[test]
    fn experiment_bookkeeping() {
        let cfg = ExperimentConfig {
            n: 6,
            q: rat(1, 4),
            p: p(2),
            trials: 300,
            seed: 4,
            cap: 12,
        };
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.connected + res.discarded_disconnected, 300);
        assert!(res.discarded_disconnected > 0);
        assert_eq!(res.counts.values().sum::<u64>(), res.connected);
        assert_eq!(res, run_experiment(&cfg).unwrap());
        let d = res.to_distribution().unwrap();
        let v = d.to_json_value().unwrap();
        assert_eq!(v["discarded_disconnected"], res.discarded_disconnected);
        assert_eq!(v["capped"], 0);
    }

    fn point(l: &[u32], num: i64, den: i64) -> (Partition, ExactRational) {
        (Partition::new(l.to_vec()).unwrap(), rat(num, den))
    }

    fn table(entries: &[(Partition, ExactRational)]) -> PartitionDistribution {
        let mut d = PartitionDistribution::from_counts(p(2), "t", BTreeMap::new(), &BTreeMap::new(), 1);
        d.trials = None;
        for (l, m) in entries {
            d.entries.insert(l.clone(), measures::MassValue::exact(m.clone()));
        }
        d
    }

    #[test]
    fn tv_examples() {
        let a = table(&[point(&[], 1, 2), point(&[1], 1, 2)]);
        assert_eq!(tv_distance(&a, &a, TailMode::Unallocated).unwrap(), BoundedReal::zero());
        let x = table(&[point(&[], 1, 1)]);
        let y = table(&[point(&[1], 1, 1)]);
        assert_eq!(tv_distance(&x, &y, TailMode::Bucketed).unwrap(), BoundedReal::exact(int(1)));
        let z = table(&[point(&[], 3, 4), point(&[2], 1, 4)]);
        assert_eq!(tv_distance(&a, &z, TailMode::Bucketed).unwrap(), BoundedReal::exact(rat(1, 2)));
    }

    #[test]
    fn tv_tail_modes() {
        let mut a = table(&[point(&[], 1, 2)]);
        a.tail_mass = BoundedReal::exact(rat(1, 2));
        let mut b = table(&[point(&[], 3, 4)]);
        b.tail_mass = BoundedReal::exact(rat(1, 4));
        let bucketed = tv_distance(&a, &b, TailMode::Bucketed).unwrap();
        assert_eq!(bucketed, BoundedReal::exact(rat(1, 4)));
        let open = tv_distance(&a, &b, TailMode::Unallocated).unwrap();
        assert_eq!(open.lo(), rat(1, 4));
        assert_eq!(open.hi(), rat(1, 2));
    }

    #[test]
    fn restrict_moves_mass_to_tail() {
        let a = table(&[point(&[], 1, 2), point(&[1], 1, 4), point(&[2], 1, 4)]);
        let r = restrict_by_size(&a, 1).unwrap();
        assert_eq!(r.entries.len(), 2);
        assert_eq!(r.tail_mass, BoundedReal::exact(rat(1, 4)));
    }

    #[test]
    fn p_part_examples() {
        assert_eq!(p_part(&BigInt::from(48), p(2)), BigInt::from(16));
        assert_eq!(p_part(&BigInt::from(-45), p(3)), BigInt::from(9));
        assert_eq!(p_part(&BigInt::from(7), p(2)), BigInt::from(1));
    }
}
