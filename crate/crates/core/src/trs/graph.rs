use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::par::{self, Execution};

use super::dijkstra::WeightedAdjacency;
use super::TrsError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    /// Directed, between consecutive cells of one offer.
    Route,
    /// Stored in both directions, between co-located cells of different offers.
    Transfer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node<C> {
    pub offer_id: u64,
    pub position: usize,
    pub cell: C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OfferSlot {
    pub first: usize,
    pub len: usize,
    pub capacity: u32,
    pub remaining: u32,
}

impl OfferSlot {
    pub fn nodes(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.len
    }
}

/// Which count an edge weighting minimizes first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Weighting {
    /// Route edges cost one unit, transfers a small epsilon.
    CellFirst,
    /// Transfers cost one unit, route edges a small epsilon.
    TransferFirst,
}

/// Route and transfer edges over the cells of every offer. `C` is the
/// per-cell payload: ciphertexts on the organizer, plaintext in oracles.
#[derive(Clone, Debug)]
pub struct TransferGraph<C> {
    epoch: u64,
    nodes: Vec<Node<C>>,
    adj: Vec<Vec<(usize, EdgeKind)>>,
    offers: BTreeMap<u64, OfferSlot>,
}

impl<C> TransferGraph<C> {
    pub fn new(epoch: u64) -> Self {
        Self { epoch, nodes: Vec::new(), adj: Vec::new(), offers: BTreeMap::new() }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn nodes(&self) -> &[Node<C>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node<C> {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges(&self, u: usize) -> &[(usize, EdgeKind)] {
        &self.adj[u]
    }

    pub fn offer(&self, offer_id: u64) -> Option<&OfferSlot> {
        self.offers.get(&offer_id)
    }

    pub fn offers(&self) -> impl Iterator<Item = (u64, &OfferSlot)> {
        self.offers.iter().map(|(&id, s)| (id, s))
    }

    /// Nodes of offers with capacity left.
    pub fn is_active(&self, node: usize) -> bool {
        self.offers[&self.nodes[node].offer_id].remaining > 0
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&n| self.is_active(n))
    }

    pub fn route_edge_count(&self) -> usize {
        self.adj.iter().flatten().filter(|(_, k)| *k == EdgeKind::Route).count()
    }

    pub fn transfer_edge_count(&self) -> usize {
        self.adj.iter().flatten().filter(|(_, k)| *k == EdgeKind::Transfer).count() / 2
    }

    /// Directed arcs, counting each transfer edge twice.
    pub fn arc_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// Inserts an offer's cells, linking each new cell to every active cell
    /// of other offers for which `co_located(new, existing)` holds.
    pub fn add_offer<F>(
        &mut self,
        offer_id: u64,
        cells: Vec<C>,
        capacity: u32,
        exec: Execution,
        co_located: F,
    ) -> Result<(), TrsError>
    where
        C: Sync,
        F: Fn(&C, &C) -> bool + Sync + Send,
    {
        if cells.len() < 2 {
            return Err(TrsError::RouteTooShort(cells.len()));
        }
        if capacity == 0 {
            return Err(TrsError::ZeroCapacity);
        }
        if self.offers.contains_key(&offer_id) {
            return Err(TrsError::DuplicateOffer(offer_id));
        }
        let existing: Vec<usize> = self.active_nodes().collect();
        let n_new = cells.len();
        let links: Vec<(usize, usize)> = {
            let nodes = &self.nodes;
            let cells = &cells;
            let existing = &existing;
            par::map_range(exec, n_new * existing.len(), move |i| {
                let (a, b) = (i / existing.len(), existing[i % existing.len()]);
                co_located(&cells[a], &nodes[b].cell).then_some((a, b))
            })
            .into_iter()
            .flatten()
            .collect()
        };
        let first = self.nodes.len();
        for (position, cell) in cells.into_iter().enumerate() {
            self.nodes.push(Node { offer_id, position, cell });
            self.adj.push(Vec::new());
        }
        for i in first..first + n_new - 1 {
            self.adj[i].push((i + 1, EdgeKind::Route));
        }
        for (a, b) in links {
            self.adj[first + a].push((b, EdgeKind::Transfer));
            self.adj[b].push((first + a, EdgeKind::Transfer));
        }
        self.offers.insert(offer_id, OfferSlot { first, len: n_new, capacity, remaining: capacity });
        Ok(())
    }

    /// Uses one seat of `offer_id`. Returns true if that exhausted the
    /// offer, in which case all of its edges are gone.
    pub fn consume(&mut self, offer_id: u64) -> Result<bool, TrsError> {
        let slot = self.offers.get_mut(&offer_id).ok_or(TrsError::UnknownOffer(offer_id))?;
        if slot.remaining == 0 {
            return Err(TrsError::OfferExhausted(offer_id));
        }
        slot.remaining -= 1;
        if slot.remaining > 0 {
            return Ok(false);
        }
        let range = slot.nodes();
        for u in range.clone() {
            for (v, _) in std::mem::take(&mut self.adj[u]) {
                if !range.contains(&v) {
                    self.adj[v].retain(|&(x, _)| x != u);
                }
            }
        }
        Ok(true)
    }

    /// Integer weights: one unit is `4 * (arcs + 1)` and epsilon is 1, so the
    /// epsilon terms of any simple path stay below half a unit.
    pub fn unit_weight(&self) -> u64 {
        4 * (self.arc_count() as u64 + 1)
    }

    pub fn weighted(&self, weighting: Weighting) -> WeightedAdjacency<u64> {
        let unit = self.unit_weight();
        let (route, transfer) = match weighting {
            Weighting::CellFirst => (unit, 1),
            Weighting::TransferFirst => (1, unit),
        };
        self.adj
            .iter()
            .map(|es| {
                es.iter()
                    .map(|&(v, k)| (v, if k == EdgeKind::Route { route } else { transfer }))
                    .collect()
            })
            .collect()
    }

    pub fn edge_kind(&self, u: usize, v: usize) -> Option<EdgeKind> {
        self.adj[u].iter().find(|(x, _)| *x == v).map(|(_, k)| *k)
    }

    /// Edges keyed by `(offer_id, position)`, transfers with the smaller end first.
    pub fn edge_set(&self) -> BTreeSet<((u64, usize), (u64, usize), EdgeKind)> {
        let key = |n: usize| (self.nodes[n].offer_id, self.nodes[n].position);
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, es)| es.iter().map(move |&(v, k)| (u, v, k)))
            .filter(|&(u, v, k)| k == EdgeKind::Route || key(u) < key(v))
            .map(|(u, v, k)| (key(u), key(v), k))
            .collect()
    }

    /// Structural invariants; returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (u, es) in self.adj.iter().enumerate() {
            let nu = &self.nodes[u];
            for &(v, k) in es {
                let nv = &self.nodes[v];
                match k {
                    EdgeKind::Route => {
                        if nu.offer_id != nv.offer_id || nv.position != nu.position + 1 {
                            return Err(format!("route edge {u}->{v} skips or crosses offers"));
                        }
                    }
                    EdgeKind::Transfer => {
                        if nu.offer_id == nv.offer_id {
                            return Err(format!("transfer edge {u}-{v} within one offer"));
                        }
                        if !self.adj[v].contains(&(u, EdgeKind::Transfer)) {
                            return Err(format!("transfer edge {u}-{v} is not symmetric"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Debug dump: one `u v kind weight` line per arc.
    pub fn to_adjacency_text(&self, weighting: Weighting) -> String {
        let weights = self.weighted(weighting);
        let mut out = String::new();
        for (u, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "node {u} offer={} pos={}", n.offer_id, n.position);
        }
        for (u, es) in self.adj.iter().enumerate() {
            for (&(v, k), &(_, w)) in es.iter().zip(&weights[u]) {
                let kind = if k == EdgeKind::Route { "route" } else { "transfer" };
                let _ = writeln!(out, "{u} {v} {kind} {w}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph() -> TransferGraph<u32> {
        let mut g = TransferGraph::new(0);
        let eq = |a: &u32, b: &u32| a == b;
        g.add_offer(1, vec![10, 11, 12, 13, 14], 1, Execution::Sequential, eq).unwrap();
        g.add_offer(2, vec![20, 12, 13, 23, 24], 5, Execution::Parallel, eq).unwrap();
        g
    }

    #[test]
    fn two_shared_cells_give_two_transfer_edges() {
        let g = graph();
        assert_eq!(g.route_edge_count(), 8);
        assert_eq!(g.transfer_edge_count(), 2);
        assert_eq!(g.arc_count(), 12);
        g.check_invariants().unwrap();
        let transfers: Vec<_> =
            g.edge_set().into_iter().filter(|e| e.2 == EdgeKind::Transfer).collect();
        assert_eq!(
            transfers,
            vec![((1, 2), (2, 1), EdgeKind::Transfer), ((1, 3), (2, 2), EdgeKind::Transfer)]
        );
    }

    #[test]
    fn exhaustion_removes_edges() {
        let mut g = graph();
        assert!(!g.consume(2).unwrap());
        assert_eq!(g.offer(2).unwrap().remaining, 4);
        assert!(g.consume(1).unwrap());
        assert_eq!(g.transfer_edge_count(), 0);
        assert_eq!(g.route_edge_count(), 4);
        assert!(!g.is_active(0));
        g.check_invariants().unwrap();
        assert!(matches!(g.consume(1), Err(TrsError::OfferExhausted(1))));
        assert!(matches!(g.consume(9), Err(TrsError::UnknownOffer(9))));
    }

    #[test]
    fn rejects_bad_offers() {
        let mut g = graph();
        let eq = |a: &u32, b: &u32| a == b;
        assert!(matches!(
            g.add_offer(3, vec![1], 1, Execution::Sequential, eq),
            Err(TrsError::RouteTooShort(1))
        ));
        assert!(matches!(
            g.add_offer(1, vec![1, 2], 1, Execution::Sequential, eq),
            Err(TrsError::DuplicateOffer(1))
        ));
    }

    #[test]
    fn weights_are_lexicographic() {
        let g = graph();
        let unit = g.unit_weight();
        assert_eq!(unit, 52);
        let w = g.weighted(Weighting::CellFirst);
        assert_eq!(w[0][0], (1, unit));
        assert!(g.to_adjacency_text(Weighting::TransferFirst).contains("transfer 52"));
    }
}
