//! Shared brute-force oracles for integration tests.
#![allow(dead_code)]

use cohen_lenstra::sandpile::Graph;

pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            v.push((i, j));
        }
    }
    v
}

pub fn graph_from_mask(n: usize, pairs: &[(usize, usize)], mask: u32) -> Graph {
    let edges: Vec<_> = pairs
        .iter()
        .enumerate()
        .filter(|(k, _)| mask >> k & 1 == 1)
        .map(|(_, &e)| e)
        .collect();
    Graph::from_edges(n, &edges).unwrap()
}

/// Counts edge subsets of size n-1 without a cycle.
pub fn brute_force_spanning_trees(g: &Graph) -> u64 {
    let n = g.vertex_count();
    let edges: Vec<_> = g.edges().collect();
    let need = n - 1;
    if edges.len() < need {
        return 0;
    }
    let mut count = 0;
    let mut chosen = Vec::with_capacity(need);
    fn rec(
        edges: &[(usize, usize)],
        start: usize,
        need: usize,
        n: usize,
        chosen: &mut Vec<(usize, usize)>,
        count: &mut u64,
    ) {
        if chosen.len() == need {
            let mut parent: Vec<usize> = (0..n).collect();
            fn find(p: &mut [usize], mut x: usize) -> usize {
                while p[x] != x {
                    x = p[x];
                }
                x
            }
            for &(u, v) in chosen.iter() {
                let (a, b) = (find(&mut parent, u), find(&mut parent, v));
                if a == b {
                    return;
                }
                parent[a] = b;
            }
            *count += 1;
            return;
        }
        for k in start..edges.len() {
            if edges.len() - k < need - chosen.len() {
                break;
            }
            chosen.push(edges[k]);
            rec(edges, k + 1, need, n, chosen, count);
            chosen.pop();
        }
    }
    rec(&edges, 0, need, n, &mut chosen, &mut count);
    count
}
