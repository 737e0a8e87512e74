//! Transferable matching: a rider may change drivers where two routes pass
//! the same cell in the same time interval. Each offer becomes a chain of
//! graph nodes; co-located nodes of different offers are joined by transfer
//! edges, and rider preferences become edge weightings for an
//! all-shortest-paths search.

mod cell_vector;
pub mod dijkstra;
mod graph;
mod search;

pub use cell_vector::{encode_cell, interval_of, CellVector};
pub use dijkstra::{enumerate_paths, modified_dijkstra, PathSet, ShortestPaths, Weight};
pub use graph::{EdgeKind, Node, OfferSlot, TransferGraph, Weighting};
pub use search::{search_nodes, shortest_paths, PathResult, Preference, SearchOutcome, DEFAULT_PATH_CAP};

use rand::Rng;
use thiserror::Error;

use crate::bloom::{BloomError, CellId};
use crate::knn::{
    encrypt_index, match_similarity, meets_threshold, EncryptedIndex, KnnError, Orientation, Role,
    Scheme, TosSecrets, UserKeySet,
};
use crate::par::{self, Execution};

#[derive(Debug, Error)]
pub enum TrsError {
    #[error(transparent)]
    Knn(#[from] KnnError),
    #[error(transparent)]
    Bloom(#[from] BloomError),
    #[error("cell id {id} does not fit in {k} bits")]
    IdOverflow { id: u32, k: usize },
    #[error("interval {interval} out of range for {ell} intervals")]
    IntervalOutOfRange { interval: usize, ell: usize },
    #[error("a route needs at least 2 cells, got {0}")]
    RouteTooShort(usize),
    #[error("capacity must be at least 1")]
    ZeroCapacity,
    #[error("offer {0} already in the graph")]
    DuplicateOffer(u64),
    #[error("unknown offer {0}")]
    UnknownOffer(u64),
    #[error("offer {0} has no capacity left")]
    OfferExhausted(u64),
    #[error("no edge between nodes {0} and {1}")]
    BrokenPath(usize, usize),
    #[error("invalid preference: {0}")]
    InvalidPreference(String),
    #[error("expected a {expected:?} key set, got {actual:?}")]
    WrongRole { expected: Role, actual: Role },
}

/// A cell on a driver's route, at the interval the driver passes it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimedCell {
    pub cell: CellId,
    pub interval: usize,
}

/// Dimensions of the cell encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrsEncoding {
    pub k: usize,
    pub ell: usize,
}

impl TrsEncoding {
    pub fn n(&self) -> usize {
        2 * self.k + self.ell
    }

    /// Similarity of two encodings of the same cell and interval.
    pub fn threshold(&self) -> usize {
        self.k + 1
    }

    pub fn vector(&self, c: TimedCell) -> Result<Vec<bool>, TrsError> {
        Ok(encode_cell(c.cell, c.interval, self.k, self.ell)?.bits())
    }
}

/// The driver-form and rider-form ciphertexts of one route cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TrsCellIndex {
    pub plus: EncryptedIndex,
    pub minus: EncryptedIndex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrsOffer {
    pub offer_id: u64,
    pub cells: Vec<TrsCellIndex>,
    pub capacity: u32,
    pub contact_blob: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrsRequest {
    pub request_id: u64,
    pub pickup: EncryptedIndex,
    pub dropoff: EncryptedIndex,
    pub preference: Preference,
    pub contact_blob: Vec<u8>,
}

fn check_role(keys: &UserKeySet, expected: Role) -> Result<(), TrsError> {
    if keys.role() != expected {
        return Err(TrsError::WrongRole { expected, actual: keys.role() });
    }
    Ok(())
}

fn check_index(i: &EncryptedIndex, n: usize, orientation: Orientation) -> Result<(), TrsError> {
    if i.scheme() != Scheme::Trs {
        return Err(KnnError::SchemeMismatch.into());
    }
    if i.orientation() != orientation {
        return Err(KnnError::OrientationMismatch.into());
    }
    if i.dim() != n {
        return Err(KnnError::DimensionMismatch { expected: n, actual: i.dim() }.into());
    }
    Ok(())
}

/// Encrypts every route cell twice: with the driver key set (`plus`) and
/// with the rider key set (`minus`).
pub fn build_offer<R: Rng + ?Sized>(
    enc: &TrsEncoding,
    route: &[TimedCell],
    capacity: u32,
    driver_keys: &UserKeySet,
    rider_keys: &UserKeySet,
    rng: &mut R,
) -> Result<TrsOffer, TrsError> {
    check_role(driver_keys, Role::DriverTrs)?;
    check_role(rider_keys, Role::RiderTrs)?;
    if route.len() < 2 {
        return Err(TrsError::RouteTooShort(route.len()));
    }
    if capacity == 0 {
        return Err(TrsError::ZeroCapacity);
    }
    let cells = route
        .iter()
        .map(|&c| {
            let v = enc.vector(c)?;
            Ok(TrsCellIndex {
                plus: encrypt_index(&v, driver_keys, rng)?,
                minus: encrypt_index(&v, rider_keys, rng)?,
            })
        })
        .collect::<Result<_, TrsError>>()?;
    Ok(TrsOffer { offer_id: 0, cells, capacity, contact_blob: Vec::new() })
}

pub fn build_request<R: Rng + ?Sized>(
    enc: &TrsEncoding,
    pickup: TimedCell,
    dropoff: TimedCell,
    preference: Preference,
    rider_keys: &UserKeySet,
    rng: &mut R,
) -> Result<TrsRequest, TrsError> {
    check_role(rider_keys, Role::RiderTrs)?;
    Ok(TrsRequest {
        request_id: 0,
        pickup: encrypt_index(&enc.vector(pickup)?, rider_keys, rng)?,
        dropoff: encrypt_index(&enc.vector(dropoff)?, rider_keys, rng)?,
        preference: preference.validate()?,
        contact_blob: Vec::new(),
    })
}

impl TrsOffer {
    pub fn validate(&self, n: usize) -> Result<(), TrsError> {
        if self.cells.len() < 2 {
            return Err(TrsError::RouteTooShort(self.cells.len()));
        }
        if self.capacity == 0 {
            return Err(TrsError::ZeroCapacity);
        }
        self.cells.iter().try_for_each(|c| {
            check_index(&c.plus, n, Orientation::Column)?;
            check_index(&c.minus, n, Orientation::Row)
        })
    }
}

impl TrsRequest {
    pub fn validate(&self, n: usize) -> Result<(), TrsError> {
        check_index(&self.pickup, n, Orientation::Row)?;
        check_index(&self.dropoff, n, Orientation::Row)?;
        self.preference.validate()?;
        Ok(())
    }

    pub fn unmask(self, tos: &TosSecrets) -> Result<Self, TrsError> {
        Ok(Self { pickup: self.pickup.unmask(tos)?, dropoff: self.dropoff.unmask(tos)?, ..self })
    }
}

/// What the organizer keeps per graph node.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphCell {
    /// Unmasked driver-form index.
    pub plus: EncryptedIndex,
    /// Unmasked rider-form index.
    pub minus: EncryptedIndex,
    /// The driver-form index as submitted, relayed to riders at transfer points.
    pub relay: EncryptedIndex,
}

pub type TrsGraph = TransferGraph<GraphCell>;

/// Unmasks an offer's cells and inserts them, linking co-located cells.
pub fn insert_offer(
    graph: &mut TrsGraph,
    offer: TrsOffer,
    tos: &TosSecrets,
    enc: &TrsEncoding,
    exec: Execution,
) -> Result<(), TrsError> {
    offer.validate(enc.n())?;
    let cells = par::map(exec, &offer.cells, |c| -> Result<GraphCell, TrsError> {
        Ok(GraphCell {
            plus: c.plus.clone().unmask(tos)?,
            minus: c.minus.clone().unmask(tos)?,
            relay: c.plus.clone(),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let target = enc.threshold();
    graph.add_offer(offer.offer_id, cells, offer.capacity, exec, move |new, old| {
        match_similarity(&new.minus, &old.plus).is_ok_and(|s| meets_threshold(s, target))
    })
}

pub fn build_graph(
    offers: Vec<TrsOffer>,
    tos: &TosSecrets,
    enc: &TrsEncoding,
    epoch: u64,
    exec: Execution,
) -> Result<TrsGraph, TrsError> {
    let mut graph = TrsGraph::new(epoch);
    for offer in offers {
        insert_offer(&mut graph, offer, tos, enc, exec)?;
    }
    Ok(graph)
}

/// Active nodes whose driver-form index matches `query` at the cell threshold.
pub fn matching_nodes(
    graph: &TrsGraph,
    query: &EncryptedIndex,
    enc: &TrsEncoding,
    exec: Execution,
) -> Result<Vec<usize>, TrsError> {
    let active: Vec<usize> = graph.active_nodes().collect();
    let target = enc.threshold();
    let hits = par::map(exec, &active, |&n| -> Result<bool, TrsError> {
        Ok(meets_threshold(match_similarity(query, &graph.node(n).cell.plus)?, target))
    });
    let mut out = Vec::new();
    for (n, hit) in active.into_iter().zip(hits) {
        if hit? {
            out.push(n);
        }
    }
    Ok(out)
}

/// Finds the rider's itinerary under the request's preference.
pub fn search(
    graph: &TrsGraph,
    request: &TrsRequest,
    tos: &TosSecrets,
    enc: &TrsEncoding,
    cap: usize,
    exec: Execution,
) -> Result<SearchOutcome, TrsError> {
    let unmasked;
    let request = if request.pickup.is_unmasked() && request.dropoff.is_unmasked() {
        request
    } else {
        unmasked = request.clone().unmask(tos)?;
        &unmasked
    };
    let sources = matching_nodes(graph, &request.pickup, enc, exec)?;
    let destinations = matching_nodes(graph, &request.dropoff, enc, exec)?;
    search_nodes(graph, &sources, &destinations, request.preference, cap)
}

/// Uses one seat of every offer on each served path.
pub fn update_graph<C>(graph: &mut TransferGraph<C>, served: &[PathResult]) -> Result<(), TrsError> {
    for path in served {
        for &offer in &path.offers {
            if graph.offer(offer).is_none() {
                return Err(TrsError::UnknownOffer(offer));
            }
        }
        let mut offers = path.offers.clone();
        offers.sort_unstable();
        offers.dedup();
        for offer in offers {
            graph.consume(offer)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::{derive_user_keys, generate_master_keys, SchemeParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn tc(id: u32, interval: usize) -> TimedCell {
        TimedCell { cell: CellId { id, epoch: 0 }, interval }
    }

    #[test]
    fn encrypted_graph_and_search() {
        let enc = TrsEncoding { k: 4, ell: 3 };
        let (_, trs, tos) = generate_master_keys(&SchemeParams::new(4, 4, 3).unwrap(), 8).unwrap();
        let dk = derive_user_keys(&trs, &tos, Role::DriverTrs, 1).unwrap();
        let rk = derive_user_keys(&trs, &tos, Role::RiderTrs, 2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let r1 = [tc(1, 0), tc(2, 0), tc(3, 0), tc(4, 0), tc(5, 0)];
        let r2 = [tc(9, 0), tc(3, 0), tc(4, 0), tc(10, 0), tc(11, 0)];
        let mut o1 = build_offer(&enc, &r1, 1, &dk, &rk, &mut rng).unwrap();
        let mut o2 = build_offer(&enc, &r2, 2, &dk, &rk, &mut rng).unwrap();
        o1.offer_id = 1;
        o2.offer_id = 2;
        let mut g = build_graph(vec![o1, o2], &tos, &enc, 0, Execution::Parallel).unwrap();
        assert_eq!(g.transfer_edge_count(), 2);
        g.check_invariants().unwrap();

        let req = build_request(&enc, tc(1, 0), tc(11, 0), Preference::MinCells, &rk, &mut rng).unwrap();
        let out = search(&g, &req, &tos, &enc, DEFAULT_PATH_CAP, Execution::Sequential).unwrap();
        let path = out.selected.unwrap();
        assert_eq!(path.offers, vec![1, 2]);
        assert_eq!(path.transfer_count, 1);
        assert_eq!(path.cell_count, 6);
        assert_eq!(out.candidates.len(), 2);

        update_graph(&mut g, &[path]).unwrap();
        let again = search(&g, &req, &tos, &enc, DEFAULT_PATH_CAP, Execution::Sequential).unwrap();
        assert!(again.selected.is_none());

        let off_route =
            build_request(&enc, tc(7, 0), tc(11, 0), Preference::MinCells, &rk, &mut rng).unwrap();
        let none = search(&g, &off_route, &tos, &enc, DEFAULT_PATH_CAP, Execution::Sequential).unwrap();
        assert!(none.selected.is_none());
    }

    #[test]
    fn one_cell_routes_rejected() {
        let enc = TrsEncoding { k: 3, ell: 2 };
        let (_, trs, tos) = generate_master_keys(&SchemeParams::new(4, 3, 2).unwrap(), 8).unwrap();
        let dk = derive_user_keys(&trs, &tos, Role::DriverTrs, 1).unwrap();
        let rk = derive_user_keys(&trs, &tos, Role::RiderTrs, 2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert!(matches!(
            build_offer(&enc, &[tc(1, 0)], 1, &dk, &rk, &mut rng),
            Err(TrsError::RouteTooShort(1))
        ));
        assert!(matches!(
            build_offer(&enc, &[tc(1, 0), tc(2, 0)], 1, &rk, &rk, &mut rng),
            Err(TrsError::WrongRole { .. })
        ));
    }
}
