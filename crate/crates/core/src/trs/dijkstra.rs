//! Multi-source Dijkstra that keeps every equal-cost predecessor, and
//! enumeration of all shortest paths from the resulting predecessor DAG.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::ops::Add;

/// Edge weight. Must be strictly positive on every edge.
pub trait Weight: Copy + Ord + Add<Output = Self> {
    fn zero() -> Self;
}

impl Weight for u64 {
    fn zero() -> Self {
        0
    }
}

impl Weight for u32 {
    fn zero() -> Self {
        0
    }
}

/// Weighted adjacency lists, indexed by node.
pub type WeightedAdjacency<W> = Vec<Vec<(usize, W)>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortestPaths<W> {
    /// `None` for unreachable nodes.
    pub dist: Vec<Option<W>>,
    /// All predecessors on some shortest path, in discovery order.
    pub pred: Vec<Vec<usize>>,
}

/// Every source starts at distance zero.
pub fn modified_dijkstra<W: Weight>(adj: &[Vec<(usize, W)>], sources: &[usize]) -> ShortestPaths<W> {
    let n = adj.len();
    let mut dist: Vec<Option<W>> = vec![None; n];
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if dist[s].is_none() {
            dist[s] = Some(W::zero());
            heap.push(Reverse((W::zero(), s)));
        }
    }
    while let Some(Reverse((d, u))) = heap.pop() {
        if done[u] || dist[u] != Some(d) {
            continue;
        }
        done[u] = true;
        for &(v, w) in &adj[u] {
            let alt = d + w;
            match dist[v] {
                Some(cur) if alt > cur => {}
                Some(cur) if alt == cur => {
                    if !pred[v].contains(&u) {
                        pred[v].push(u);
                    }
                }
                _ => {
                    dist[v] = Some(alt);
                    pred[v].clear();
                    pred[v].push(u);
                    heap.push(Reverse((alt, v)));
                }
            }
        }
    }
    ShortestPaths { dist, pred }
}

/// Paths found by backtracking, plus whether the cap cut the list short.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathSet {
    pub paths: Vec<Vec<usize>>,
    pub truncated: bool,
}

/// All shortest paths ending at each reachable destination, source first.
/// At most `cap` paths are returned.
pub fn enumerate_paths<W>(sp: &ShortestPaths<W>, destinations: &[usize], cap: usize) -> PathSet {
    let mut out = PathSet::default();
    let mut seen_dest = vec![false; sp.dist.len()];
    for &d in destinations {
        if sp.dist[d].is_none() || seen_dest[d] {
            continue;
        }
        seen_dest[d] = true;
        let mut stack = vec![d];
        if !backtrack(sp, &mut stack, cap, &mut out) {
            out.truncated = true;
            break;
        }
    }
    out
}

/// Returns false once the cap is reached with paths left unvisited.
fn backtrack<W>(sp: &ShortestPaths<W>, stack: &mut Vec<usize>, cap: usize, out: &mut PathSet) -> bool {
    let last = *stack.last().expect("non-empty path");
    if sp.pred[last].is_empty() {
        if out.paths.len() == cap {
            return false;
        }
        out.paths.push(stack.iter().rev().copied().collect());
        return true;
    }
    for &u in &sp.pred[last] {
        stack.push(u);
        let ok = backtrack(sp, stack, cap, out);
        stack.pop();
        if !ok {
            return false;
        }
    }
    true
}
