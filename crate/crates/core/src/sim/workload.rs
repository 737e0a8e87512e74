use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bloom::SECONDS_PER_DAY;
use crate::nrs::RideCase;
use crate::trs::Preference;

use super::city::GridCity;
use super::SimError;

/// Travel time through one cell.
pub const SECONDS_PER_CELL: u32 = 20;
/// Longest a rider waits at a transfer cell for the second vehicle.
pub const MAX_TRANSFER_WAIT: u32 = 600;
/// Length of one NRS time slot; routes are kept inside a single slot.
const SLOT_SECONDS: u32 = SECONDS_PER_DAY / 48;

#[derive(Clone, Debug, PartialEq)]
pub struct OfferTrip {
    pub route: Vec<u32>,
    pub depart: u32,
    pub capacity: u32,
    pub cases: Vec<RideCase>,
    /// Pick-up and drop-off areas are the cells within this Manhattan
    /// distance of the route's ends.
    pub area_radius: usize,
}

impl OfferTrip {
    pub fn time_at(&self, position: usize) -> u32 {
        self.depart + position as u32 * SECONDS_PER_CELL
    }

    pub fn pickup_area(&self, city: &GridCity) -> Vec<u32> {
        city.area(self.route[0], self.area_radius)
    }

    pub fn dropoff_area(&self, city: &GridCity) -> Vec<u32> {
        city.area(*self.route.last().expect("non-empty route"), self.area_radius)
    }
}

/// How a request was generated; kept for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RequestKind {
    /// Rides part of one offer's route.
    Direct,
    /// Needs two offers that meet in one cell.
    Transfer,
    /// Unrelated to any offer.
    Random,
}

impl RequestKind {
    pub fn label(self) -> &'static str {
        match self {
            RequestKind::Direct => "direct",
            RequestKind::Transfer => "transfer",
            RequestKind::Random => "random",
        }
    }

    fn from_label(s: &str) -> Option<Self> {
        [RequestKind::Direct, RequestKind::Transfer, RequestKind::Random]
            .into_iter()
            .find(|k| k.label() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RequestTrip {
    pub pickup: u32,
    pub dropoff: u32,
    pub depart: u32,
    pub arrive: u32,
    pub route: Vec<u32>,
    pub preference: Preference,
    pub kind: RequestKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadConfig {
    pub n_offers: usize,
    pub n_requests: usize,
    pub seed: u64,
    /// Inclusive range of route lengths in steps.
    pub route_len: (usize, usize),
    /// Share of requests placed on offer routes.
    pub hit_rate: f64,
    /// Among those, the share that needs a transfer.
    pub transfer_share: f64,
    pub capacity: u32,
    pub cases: Vec<RideCase>,
    pub preference: Preference,
    pub area_radius: usize,
    /// Departures fall in `[start, end)` seconds after midnight.
    pub window: (u32, u32),
    /// Longest cell list a rider route may have.
    pub max_route_cells: usize,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            n_offers: 30,
            n_requests: 50,
            seed: 0,
            route_len: (20, 40),
            hit_rate: 0.9,
            transfer_share: 1.0 / 3.0,
            capacity: 5,
            cases: RideCase::ALL.to_vec(),
            preference: Preference::MinCells,
            area_radius: 2,
            window: (7 * 3600, 9 * 3600),
            max_route_cells: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    pub city: GridCity,
    pub offers: Vec<OfferTrip>,
    pub requests: Vec<RequestTrip>,
}

/// A place where a rider can leave offer `from` at `from_pos` and board
/// offer `to` at `to_pos`.
#[derive(Clone, Copy, Debug)]
struct Meeting {
    from: usize,
    from_pos: usize,
    to: usize,
    to_pos: usize,
}

fn meetings(offers: &[OfferTrip]) -> Vec<Meeting> {
    let mut by_cell: HashMap<u32, Vec<(usize, usize)>> = HashMap::new();
    for (o, trip) in offers.iter().enumerate() {
        for (pos, &cell) in trip.route.iter().enumerate() {
            by_cell.entry(cell).or_default().push((o, pos));
        }
    }
    let mut cells: Vec<_> = by_cell.into_iter().collect();
    cells.sort_unstable_by_key(|(c, _)| *c);
    let mut out = Vec::new();
    for (_, visits) in cells {
        for &(a, i) in &visits {
            for &(b, j) in &visits {
                if a == b || i == 0 || j + 1 >= offers[b].route.len() {
                    continue;
                }
                let (ta, tb) = (offers[a].time_at(i), offers[b].time_at(j));
                if tb >= ta && tb - ta <= MAX_TRANSFER_WAIT {
                    out.push(Meeting { from: a, from_pos: i, to: b, to_pos: j });
                }
            }
        }
    }
    out
}

fn random_endpoints<R: Rng + ?Sized>(
    city: &GridCity,
    len: (usize, usize),
    rng: &mut R,
) -> Result<(u32, u32), SimError> {
    let cells = city.cell_count() as u32;
    for _ in 0..10_000 {
        let a = rng.random_range(0..cells);
        let b = rng.random_range(0..cells);
        if (len.0..=len.1).contains(&city.distance(a, b)) {
            return Ok((a, b));
        }
    }
    Err(SimError::Config(format!("no route of length {:?} fits the city", len)))
}

/// Departure in the window, moved to the next slot start if the trip would
/// cross a slot boundary.
fn aligned_departure<R: Rng + ?Sized>(window: (u32, u32), cells: usize, rng: &mut R) -> u32 {
    let depart = rng.random_range(window.0..window.1);
    let end = depart + (cells as u32 - 1) * SECONDS_PER_CELL;
    if end / SLOT_SECONDS == depart / SLOT_SECONDS {
        depart
    } else {
        (depart / SLOT_SECONDS + 1) * SLOT_SECONDS
    }
}

pub fn generate_workload(city: GridCity, cfg: &WorkloadConfig) -> Result<Workload, SimError> {
    let (lo, hi) = cfg.route_len;
    if lo == 0 || lo > hi || hi > city.diameter() {
        return Err(SimError::Config(format!(
            "route length {lo}..={hi} infeasible in a city of diameter {}",
            city.diameter()
        )));
    }
    if hi + 1 > cfg.max_route_cells || (hi + 1) * SECONDS_PER_CELL as usize >= SLOT_SECONDS as usize {
        return Err(SimError::Config(format!("routes of {hi} steps are too long")));
    }
    if !(0.0..=1.0).contains(&cfg.hit_rate) || !(0.0..=1.0).contains(&cfg.transfer_share) {
        return Err(SimError::Config("rates must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut offers = Vec::with_capacity(cfg.n_offers);
    for _ in 0..cfg.n_offers {
        let (a, b) = random_endpoints(&city, cfg.route_len, &mut rng)?;
        let route = city.monotone_path(a, b, &mut rng);
        let depart = aligned_departure(cfg.window, route.len(), &mut rng);
        offers.push(OfferTrip {
            route,
            depart,
            capacity: cfg.capacity,
            cases: cfg.cases.clone(),
            area_radius: cfg.area_radius,
        });
    }
    let meet = meetings(&offers);
    let half = cfg.max_route_cells / 2 - 1;
    let mut requests = Vec::with_capacity(cfg.n_requests);
    for _ in 0..cfg.n_requests {
        let u: f64 = rng.random();
        let want_transfer = u < cfg.hit_rate * cfg.transfer_share;
        let request = if want_transfer && !meet.is_empty() {
            let m = *meet.choose(&mut rng).expect("non-empty");
            let (a, b) = (&offers[m.from], &offers[m.to]);
            let p = rng.random_range(m.from_pos.saturating_sub(half)..m.from_pos);
            let d = rng.random_range(m.to_pos + 1..b.route.len().min(m.to_pos + half + 1));
            let mut route = a.route[p..=m.from_pos].to_vec();
            route.extend_from_slice(&b.route[m.to_pos + 1..=d]);
            RequestTrip {
                pickup: a.route[p],
                dropoff: b.route[d],
                depart: a.time_at(p),
                arrive: b.time_at(d),
                route,
                preference: cfg.preference,
                kind: RequestKind::Transfer,
            }
        } else if u < cfg.hit_rate && !offers.is_empty() {
            let o = &offers[rng.random_range(0..offers.len())];
            let p = rng.random_range(0..=2.min(o.route.len() - 2));
            let d = rng.random_range(p + 1..o.route.len());
            RequestTrip {
                pickup: o.route[p],
                dropoff: o.route[d],
                depart: o.time_at(p),
                arrive: o.time_at(d),
                route: o.route[p..=d].to_vec(),
                preference: cfg.preference,
                kind: RequestKind::Direct,
            }
        } else {
            let (a, b) = random_endpoints(&city, cfg.route_len, &mut rng)?;
            let route = city.monotone_path(a, b, &mut rng);
            let depart = rng.random_range(cfg.window.0..cfg.window.1);
            RequestTrip {
                pickup: a,
                dropoff: b,
                depart,
                arrive: depart + (route.len() as u32 - 1) * SECONDS_PER_CELL,
                route,
                preference: cfg.preference,
                kind: RequestKind::Random,
            }
        };
        requests.push(request);
    }
    Ok(Workload { city, offers, requests })
}

fn join(cells: &[u32]) -> String {
    cells.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

impl Workload {
    /// Line-oriented text form: a `city` header, then one trip per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("city rows={} cols={}\n", self.city.rows, self.city.cols);
        for o in &self.offers {
            let cases: Vec<_> = o.cases.iter().map(|c| c.label()).collect();
            let _ = writeln!(
                out,
                "offer route={} depart={} capacity={} cases={} radius={}",
                join(&o.route),
                o.depart,
                o.capacity,
                cases.join(","),
                o.area_radius
            );
        }
        for r in &self.requests {
            let _ = writeln!(
                out,
                "request pickup={} dropoff={} depart={} arrive={} route={} pref={} kind={}",
                r.pickup,
                r.dropoff,
                r.depart,
                r.arrive,
                join(&r.route),
                r.preference,
                r.kind.label()
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut city = None;
        let mut offers = Vec::new();
        let mut requests = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |what: &str| SimError::Parse { line: n + 1, message: what.to_string() };
            let mut words = line.split_whitespace();
            let head = words.next().expect("non-empty line");
            let fields: HashMap<&str, &str> = words
                .map(|w| w.split_once('=').ok_or_else(|| err(&format!("expected key=value, got {w}"))))
                .collect::<Result<_, _>>()?;
            let get = |k: &str| fields.get(k).copied().ok_or_else(|| err(&format!("missing {k}")));
            let num = |k: &str| -> Result<u64, SimError> {
                get(k)?.parse().map_err(|_| err(&format!("bad number for {k}")))
            };
            let cells = |k: &str| -> Result<Vec<u32>, SimError> {
                get(k)?
                    .split(',')
                    .map(|c| c.parse().map_err(|_| err(&format!("bad cell list for {k}"))))
                    .collect()
            };
            match head {
                "city" => city = Some(GridCity::new(num("rows")? as usize, num("cols")? as usize)?),
                "offer" => {
                    let cases = get("cases")?
                        .split(',')
                        .map(|c| RideCase::from_label(c).ok_or_else(|| err(&format!("unknown case {c}"))))
                        .collect::<Result<_, _>>()?;
                    offers.push(OfferTrip {
                        route: cells("route")?,
                        depart: num("depart")? as u32,
                        capacity: num("capacity")? as u32,
                        cases,
                        area_radius: fields.get("radius").map_or(Ok(2), |_| num("radius"))? as usize,
                    });
                }
                "request" => requests.push(RequestTrip {
                    pickup: num("pickup")? as u32,
                    dropoff: num("dropoff")? as u32,
                    depart: num("depart")? as u32,
                    arrive: num("arrive")? as u32,
                    route: cells("route")?,
                    preference: get("pref")?.parse().map_err(|_| err("bad preference"))?,
                    kind: fields
                        .get("kind")
                        .map_or(Some(RequestKind::Random), |k| RequestKind::from_label(k))
                        .ok_or_else(|| err("unknown kind"))?,
                }),
                other => return Err(err(&format!("unknown record {other}"))),
            }
        }
        let city = city.ok_or(SimError::Parse { line: 0, message: "missing city line".into() })?;
        let w = Self { city, offers, requests };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (i, o) in self.offers.iter().enumerate() {
            if o.route.len() < 2 || !self.city.is_simple_path(&o.route) {
                return Err(SimError::Config(format!("offer {i} route is not a simple grid path")));
            }
            if o.capacity == 0 || o.cases.is_empty() {
                return Err(SimError::Config(format!("offer {i} needs capacity and cases")));
            }
            if o.time_at(o.route.len() - 1) >= SECONDS_PER_DAY {
                return Err(SimError::Config(format!("offer {i} runs past midnight")));
            }
        }
        for (i, r) in self.requests.iter().enumerate() {
            let cells = [r.pickup, r.dropoff].into_iter().chain(r.route.iter().copied());
            if cells.clone().any(|c| !self.city.contains(c)) || r.route.is_empty() {
                return Err(SimError::Config(format!("request {i} leaves the city")));
            }
            if r.depart >= SECONDS_PER_DAY || r.arrive >= SECONDS_PER_DAY || r.arrive < r.depart {
                return Err(SimError::Config(format!("request {i} has invalid times")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(seed: u64) -> Workload {
        let cfg = WorkloadConfig { n_offers: 12, n_requests: 40, seed, ..Default::default() };
        generate_workload(GridCity::new(40, 40).unwrap(), &cfg).unwrap()
    }

    #[test]
    fn deterministic_and_valid() {
        let a = sample(3);
        assert_eq!(a, sample(3));
        assert_ne!(a, sample(4));
        a.validate().unwrap();
        for o in &a.offers {
            assert!((21..=41).contains(&o.route.len()));
            let last = o.time_at(o.route.len() - 1);
            assert_eq!(o.depart / SLOT_SECONDS, last / SLOT_SECONDS);
        }
        for r in &a.requests {
            assert!(r.route.len() <= 60);
        }
    }

    #[test]
    fn text_round_trip() {
        let w = sample(5);
        assert_eq!(Workload::parse(&w.to_text()).unwrap(), w);
        assert!(Workload::parse("offer route=1,2").is_err());
        assert!(Workload::parse("city rows=4 cols=4\nboat x=1").is_err());
    }

    #[test]
    fn hit_rate_zero_gives_random_requests() {
        let cfg = WorkloadConfig { hit_rate: 0.0, n_requests: 20, ..Default::default() };
        let w = generate_workload(GridCity::new(40, 40).unwrap(), &cfg).unwrap();
        assert!(w.requests.iter().all(|r| r.kind == RequestKind::Random));
    }

    #[test]
    fn infeasible_lengths_rejected() {
        let cfg = WorkloadConfig { route_len: (20, 40), ..Default::default() };
        assert!(generate_workload(GridCity::new(10, 10).unwrap(), &cfg).is_err());
    }
}
