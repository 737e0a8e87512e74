use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::dijkstra::{enumerate_paths, modified_dijkstra};
use super::graph::{EdgeKind, TransferGraph, Weighting};
use super::TrsError;

/// Default cap on enumerated paths per pass.
pub const DEFAULT_PATH_CAP: usize = 10_000;

/// Rider preferences over the number of traversed cells and transfers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preference {
    MinCells,
    MaxCells(u32),
    MinTransfers,
    MaxTransfers(u32),
    MinCellsTransfers,
    MinTransfersMaxCells(u32),
    MinCellsMaxTransfers(u32),
    MaxCellsTransfers(u32, u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Combine {
    Single(Weighting),
    Intersection,
    Union,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Primary {
    Cells,
    Transfers,
}

struct Plan {
    combine: Combine,
    max_cells: Option<u32>,
    max_transfers: Option<u32>,
    primary: Primary,
}

impl Preference {
    pub fn validate(self) -> Result<Self, TrsError> {
        let bad_cells = match self {
            Preference::MaxCells(c)
            | Preference::MinTransfersMaxCells(c)
            | Preference::MaxCellsTransfers(c, _) => c == 0,
            _ => false,
        };
        if bad_cells {
            return Err(TrsError::InvalidPreference("cell limit must be at least 1".into()));
        }
        Ok(self)
    }

    fn plan(self) -> Plan {
        use Combine::*;
        use Weighting::*;
        let (combine, max_cells, max_transfers, primary) = match self {
            Preference::MinCells => (Single(CellFirst), None, None, Primary::Cells),
            Preference::MinTransfers => (Single(TransferFirst), None, None, Primary::Transfers),
            Preference::MaxCells(c) => (Single(CellFirst), Some(c), None, Primary::Transfers),
            Preference::MaxTransfers(t) => (Single(TransferFirst), None, Some(t), Primary::Cells),
            Preference::MinCellsTransfers => (Intersection, None, None, Primary::Cells),
            Preference::MinTransfersMaxCells(c) => {
                (Single(TransferFirst), Some(c), None, Primary::Transfers)
            }
            Preference::MinCellsMaxTransfers(t) => (Single(CellFirst), None, Some(t), Primary::Cells),
            Preference::MaxCellsTransfers(c, t) => (Union, Some(c), Some(t), Primary::Cells),
        };
        Plan { combine, max_cells, max_transfers, primary }
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preference::MinCells => write!(f, "min_c"),
            Preference::MaxCells(c) => write!(f, "max_c:{c}"),
            Preference::MinTransfers => write!(f, "min_t"),
            Preference::MaxTransfers(t) => write!(f, "max_t:{t}"),
            Preference::MinCellsTransfers => write!(f, "min_ct"),
            Preference::MinTransfersMaxCells(c) => write!(f, "min_t+max_c:{c}"),
            Preference::MinCellsMaxTransfers(t) => write!(f, "min_c+max_t:{t}"),
            Preference::MaxCellsTransfers(c, t) => write!(f, "max_ct:{c}:{t}"),
        }
    }
}

impl FromStr for Preference {
    type Err = TrsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TrsError::InvalidPreference(s.to_string());
        let mut it = s.split(':');
        let head = it.next().ok_or_else(bad)?;
        let mut limit = || -> Result<u32, TrsError> {
            it.next().ok_or_else(bad)?.parse().map_err(|_| bad())
        };
        let pref = match head {
            "min_c" => Preference::MinCells,
            "min_t" => Preference::MinTransfers,
            "min_ct" => Preference::MinCellsTransfers,
            "max_c" => Preference::MaxCells(limit()?),
            "max_t" => Preference::MaxTransfers(limit()?),
            "min_t+max_c" => Preference::MinTransfersMaxCells(limit()?),
            "min_c+max_t" => Preference::MinCellsMaxTransfers(limit()?),
            "max_ct" => {
                let c = limit()?;
                Preference::MaxCellsTransfers(c, limit()?)
            }
            _ => return Err(bad()),
        };
        if it.next().is_some() {
            return Err(bad());
        }
        pref.validate()
    }
}

/// One rider itinerary through the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathResult {
    pub nodes: Vec<usize>,
    /// Route edges traversed plus one.
    pub cell_count: usize,
    pub transfer_count: usize,
    /// Offers in traversal order.
    pub offers: Vec<u64>,
    /// Set when path enumeration hit its cap.
    pub truncated: bool,
}

impl PathResult {
    pub fn from_nodes<C>(graph: &TransferGraph<C>, nodes: Vec<usize>) -> Result<Self, TrsError> {
        let mut routes = 0;
        let mut transfers = 0;
        for w in nodes.windows(2) {
            match graph.edge_kind(w[0], w[1]) {
                Some(EdgeKind::Route) => routes += 1,
                Some(EdgeKind::Transfer) => transfers += 1,
                None => return Err(TrsError::BrokenPath(w[0], w[1])),
            }
        }
        let mut offers: Vec<u64> = nodes.iter().map(|&n| graph.node(n).offer_id).collect();
        offers.dedup();
        Ok(Self { nodes, cell_count: routes + 1, transfer_count: transfers, offers, truncated: false })
    }

    fn within(&self, plan: &Plan) -> bool {
        plan.max_cells.is_none_or(|c| self.cell_count <= c as usize)
            && plan.max_transfers.is_none_or(|t| self.transfer_count <= t as usize)
    }

    fn order(&self, other: &Self, primary: Primary) -> Ordering {
        let key = |p: &Self| match primary {
            Primary::Cells => (p.cell_count, p.transfer_count),
            Primary::Transfers => (p.transfer_count, p.cell_count),
        };
        key(self).cmp(&key(other)).then_with(|| self.nodes.cmp(&other.nodes))
    }
}

/// Candidate paths after the preference's passes and bounds, and the one selected.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchOutcome {
    pub candidates: Vec<PathResult>,
    pub selected: Option<PathResult>,
    pub truncated: bool,
}

/// Shortest paths from `sources` to each reachable destination under one weighting.
pub fn shortest_paths<C>(
    graph: &TransferGraph<C>,
    sources: &[usize],
    destinations: &[usize],
    weighting: Weighting,
    cap: usize,
) -> Result<(Vec<PathResult>, bool), TrsError> {
    let sp = modified_dijkstra(&graph.weighted(weighting), sources);
    let set = enumerate_paths(&sp, destinations, cap);
    let paths = set
        .paths
        .into_iter()
        .map(|p| PathResult::from_nodes(graph, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((paths, set.truncated))
}

/// Runs the preference on already matched source and destination nodes.
pub fn search_nodes<C>(
    graph: &TransferGraph<C>,
    sources: &[usize],
    destinations: &[usize],
    preference: Preference,
    cap: usize,
) -> Result<SearchOutcome, TrsError> {
    if sources.is_empty() || destinations.is_empty() {
        return Ok(SearchOutcome::default());
    }
    let plan = preference.plan();
    let run = |w| shortest_paths(graph, sources, destinations, w, cap);
    let (mut paths, truncated) = match plan.combine {
        Combine::Single(w) => run(w)?,
        Combine::Intersection | Combine::Union => {
            let (cells, tc) = run(Weighting::CellFirst)?;
            let (transfers, tt) = run(Weighting::TransferFirst)?;
            let merged = if plan.combine == Combine::Intersection {
                cells.into_iter().filter(|p| transfers.iter().any(|q| q.nodes == p.nodes)).collect()
            } else {
                let mut all = cells;
                for p in transfers {
                    if !all.iter().any(|q| q.nodes == p.nodes) {
                        all.push(p);
                    }
                }
                all
            };
            (merged, tc || tt)
        }
    };
    paths.retain(|p| p.within(&plan));
    for p in &mut paths {
        p.truncated = truncated;
    }
    let selected = paths.iter().min_by(|a, b| a.order(b, plan.primary)).cloned();
    Ok(SearchOutcome { candidates: paths, selected, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preference_labels_round_trip() {
        let all = [
            Preference::MinCells,
            Preference::MaxCells(9),
            Preference::MinTransfers,
            Preference::MaxTransfers(0),
            Preference::MinCellsTransfers,
            Preference::MinTransfersMaxCells(4),
            Preference::MinCellsMaxTransfers(2),
            Preference::MaxCellsTransfers(7, 1),
        ];
        for p in all {
            assert_eq!(p.to_string().parse::<Preference>().unwrap(), p);
        }
        assert!("max_c:0".parse::<Preference>().is_err());
        assert!("max_c".parse::<Preference>().is_err());
        assert!("min_x".parse::<Preference>().is_err());
        assert!("min_c:3".parse::<Preference>().is_err());
    }
}
