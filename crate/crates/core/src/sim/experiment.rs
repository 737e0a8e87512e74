use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::bloom::EpochIdMap;
use crate::knn::{Role, Scheme};
use crate::nrs::{exact_outcome, OfferSpec, RequestSpec};
use crate::par::Execution;
use crate::tos::{Client, Loopback, MatchDetail, MatchResult, PublicParams, Server, ServerConfig, Transport};
use crate::trs::{interval_of, Preference, TimedCell};

use super::city::GridCity;
use super::metrics::{MetricsReport, MetricsRow};
use super::workload::{generate_workload, OfferTrip, RequestTrip, Workload, WorkloadConfig};
use super::SimError;

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub city: GridCity,
    pub workload: WorkloadConfig,
    /// Bloom sizing, `k`, `ell`, path cap and seed for the server. The token
    /// count and `k` are raised as needed for the workload.
    pub server: ServerConfig,
    pub schemes: Vec<Scheme>,
    /// Registered users per role; trips are spread over them round-robin.
    pub key_pool: usize,
    pub exec: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            city: GridCity::new(40, 40).expect("valid city"),
            workload: WorkloadConfig::default(),
            server: ServerConfig { epoch_period: 0, ..ServerConfig::default() },
            schemes: vec![Scheme::Nrs, Scheme::Trs],
            key_pool: 4,
            exec: Execution::default(),
        }
    }
}

pub fn offer_spec(trip: &OfferTrip, city: &GridCity, map: &EpochIdMap) -> OfferSpec {
    OfferSpec {
        pickup_cells: map.cells(&trip.pickup_area(city)),
        dropoff_cells: map.cells(&trip.dropoff_area(city)),
        route_cells: map.cells(&trip.route),
        depart: trip.depart,
        capacity: trip.capacity,
        cases: trip.cases.clone(),
    }
}

pub fn request_spec(trip: &RequestTrip, map: &EpochIdMap) -> RequestSpec {
    RequestSpec {
        pickup: map.cell(trip.pickup),
        dropoff: map.cell(trip.dropoff),
        route_cells: map.cells(&trip.route),
        depart: trip.depart,
    }
}

fn scheme_label(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::Nrs => "nrs",
        Scheme::Trs => "trs",
    }
}

fn contact(kind: &str, i: usize) -> Vec<u8> {
    format!("{kind}-{i:06}").into_bytes()
}

struct Pools {
    drivers: Vec<Client<Loopback>>,
    riders: Vec<Client<Loopback>>,
}

impl Pools {
    fn register(server: &Arc<Mutex<Server>>, scheme: Scheme, size: usize, seed: u64) -> Result<Self, SimError> {
        let (driver, rider) = match scheme {
            Scheme::Nrs => (Role::DriverNrs, Role::RiderNrs),
            Scheme::Trs => (Role::DriverTrs, Role::RiderTrs),
        };
        let make = |role: Role, salt: u64| -> Result<Vec<_>, SimError> {
            (0..size)
                .map(|i| {
                    let seed = seed.wrapping_mul(1_000_003).wrapping_add(salt * 1000 + i as u64);
                    Ok(Client::register(Loopback::new(server.clone()), role, 0, seed)?)
                })
                .collect()
        };
        Ok(Self { drivers: make(driver, 1)?, riders: make(rider, 2)? })
    }
}

/// What one pass over the workload produced.
struct Pass {
    results: Vec<MatchResult>,
    sub: Submission,
    search_ms: f64,
    map: EpochIdMap,
    params: PublicParams,
}

fn fresh_server(cfg: &ExperimentConfig, workload: &Workload) -> Result<Arc<Mutex<Server>>, SimError> {
    let pool = cfg.key_pool.max(1);
    let most = workload.offers.len().max(workload.requests.len());
    let server = ServerConfig {
        k: cfg.server.k.max(workload.city.id_bits()),
        tokens_per_bundle: most.div_ceil(pool) + 1,
        epoch_period: 0,
        ..cfg.server.clone()
    };
    Ok(Arc::new(Mutex::new(Server::new(server, cfg.exec)?)))
}

/// Ids the server assigned to each trip, and the upload volume.
#[derive(Clone, Debug, Default)]
pub struct Submission {
    pub offer_index: HashMap<u64, usize>,
    pub request_index: HashMap<u64, usize>,
    pub offer_bytes: usize,
    pub request_bytes: usize,
}

/// Encrypts and submits every trip of `workload`, spreading offers over
/// `drivers` and requests over `riders` round-robin. TRS requests use
/// `preference` when given, their own otherwise.
pub fn submit_workload<T: Transport>(
    drivers: &mut [Client<T>],
    riders: &mut [Client<T>],
    workload: &Workload,
    scheme: Scheme,
    preference: Option<Preference>,
) -> Result<Submission, SimError> {
    if drivers.is_empty() || riders.is_empty() {
        return Err(SimError::Config("need at least one driver and one rider client".into()));
    }
    let map = drivers[0].id_map();
    let ell = drivers[0].params().ell;
    let timed = |cell: u32, t: u32| -> Result<TimedCell, SimError> {
        Ok(TimedCell { cell: map.cell(cell), interval: interval_of(t, ell)? })
    };
    let mut sub = Submission::default();
    for (i, trip) in workload.offers.iter().enumerate() {
        let n = drivers.len();
        let client = &mut drivers[i % n];
        let payload = match scheme {
            Scheme::Nrs => client.nrs_offer(&offer_spec(trip, &workload.city, &map), &contact("offer", i))?,
            Scheme::Trs => {
                let route = trip
                    .route
                    .iter()
                    .enumerate()
                    .map(|(pos, &c)| timed(c, trip.time_at(pos)))
                    .collect::<Result<Vec<_>, _>>()?;
                client.trs_offer(&route, trip.capacity, &contact("offer", i))?
            }
        };
        let before = client.traffic().sent;
        let id = client.submit_offer(payload)?;
        sub.offer_bytes += client.traffic().sent - before;
        sub.offer_index.insert(id, i);
    }
    for (i, trip) in workload.requests.iter().enumerate() {
        let n = riders.len();
        let client = &mut riders[i % n];
        let payload = match scheme {
            Scheme::Nrs => client.nrs_request(&request_spec(trip, &map), &contact("request", i))?,
            Scheme::Trs => {
                let pickup = timed(trip.pickup, trip.depart)?;
                let dropoff = timed(trip.dropoff, trip.arrive)?;
                let pref = preference.unwrap_or(trip.preference);
                client.trs_request(pickup, dropoff, pref, &contact("request", i))?
            }
        };
        let before = client.traffic().sent;
        let id = client.submit_request(payload)?;
        sub.request_bytes += client.traffic().sent - before;
        sub.request_index.insert(id, i);
    }
    Ok(sub)
}

fn run_pass(
    cfg: &ExperimentConfig,
    workload: &Workload,
    scheme: Scheme,
    preference: Option<Preference>,
) -> Result<Pass, SimError> {
    let server = fresh_server(cfg, workload)?;
    let mut pools = Pools::register(&server, scheme, cfg.key_pool.max(1), cfg.workload.seed)?;
    let sub = submit_workload(&mut pools.drivers, &mut pools.riders, workload, scheme, preference)?;
    let start = Instant::now();
    let results = pools.drivers[0].run_matching(scheme)?;
    let search_ms = start.elapsed().as_secs_f64() * 1e3;
    let map = pools.drivers[0].id_map();
    let params = *pools.drivers[0].params();
    Ok(Pass { results, sub, search_ms, map, params })
}

fn served_share(pass: &Pass, n_requests: usize) -> f64 {
    if n_requests == 0 {
        0.0
    } else {
        pass.results.len() as f64 / n_requests as f64
    }
}

/// Runs each configured scheme on an already generated workload.
pub fn run_workload(cfg: &ExperimentConfig, workload: &Workload) -> Result<MetricsReport, SimError> {
    workload.validate()?;
    let mut report = MetricsReport::default();
    let n_offers = workload.offers.len();
    let n_requests = workload.requests.len();
    for &scheme in &cfg.schemes {
        let pass = match scheme {
            Scheme::Nrs => run_pass(cfg, workload, scheme, None)?,
            Scheme::Trs => run_pass(cfg, workload, scheme, Some(Preference::MinCells))?,
        };
        let mut fpp_events = 0;
        if scheme == Scheme::Nrs {
            let map = &pass.map;
            for r in &pass.results {
                let o = &workload.offers[pass.sub.offer_index[&r.offer_ids[0]]];
                let q = &workload.requests[pass.sub.request_index[&r.request_id]];
                let exact = exact_outcome(&offer_spec(o, &workload.city, map), &request_spec(q, map));
                if exact != match r.detail {
                    MatchDetail::Nrs(case) => Some(case),
                    MatchDetail::Trs { .. } => None,
                } {
                    fpp_events += 1;
                }
            }
        }
        let success_rate = served_share(&pass, n_requests);
        let needs_second_pass = scheme == Scheme::Trs
            && workload.requests.iter().any(|r| r.preference != Preference::MinCells);
        let preference_success_rate = if needs_second_pass {
            served_share(&run_pass(cfg, workload, scheme, None)?, n_requests)
        } else {
            success_rate
        };
        let involved: usize = pass.results.iter().map(|r| r.offer_ids.len()).sum();
        let per = |total: usize, n: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
        report.rows.push(MetricsRow {
            scheme: scheme_label(scheme).into(),
            seed: cfg.workload.seed,
            rows: workload.city.rows,
            cols: workload.city.cols,
            cell_count: workload.city.cell_count(),
            n_offers,
            n_requests,
            capacity: workload.offers.first().map_or(0, |o| o.capacity),
            m: pass.params.m,
            alpha: pass.params.alpha,
            k: pass.params.k,
            ell: pass.params.ell,
            preference: cfg.workload.preference.to_string(),
            search_time_ms: pass.search_ms,
            bytes_per_offer: per(pass.sub.offer_bytes, n_offers),
            bytes_per_request: per(pass.sub.request_bytes, n_requests),
            vehicle_service_rate: per(involved, n_offers),
            success_rate,
            preference_success_rate,
            fpp_events,
            served: pass.results.len(),
        });
    }
    Ok(report)
}

/// Generates the workload from the config and runs it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport, SimError> {
    let workload = generate_workload(cfg.city, &cfg.workload)?;
    run_workload(cfg, &workload)
}
