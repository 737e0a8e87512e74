//! Non-transferable matching: one driver carries the rider from pick-up to
//! drop-off. Trips are Bloom filters over cell ids, encrypted as kNN indices,
//! and matched by the organizer through a time gate, a pick-up gate and the
//! driver's accepted drop-off cases.

use std::borrow::Cow;

use rand::Rng;
use thiserror::Error;

use crate::bloom::{
    encode_time_slot, BloomError, BloomFilter, BloomParams, CellId, TimeSlotVector, NRS_TIME_SLOTS,
};
use crate::knn::{
    encrypt_index, match_similarity, meets_threshold, EncryptedIndex, KnnError, Orientation, Role,
    Scheme, TosSecrets, UserKeySet,
};
use crate::par::{self, Execution};

#[derive(Debug, Error)]
pub enum NrsError {
    #[error(transparent)]
    Knn(#[from] KnnError),
    #[error(transparent)]
    Bloom(#[from] BloomError),
    #[error("{0} cell set is empty")]
    EmptyCells(&'static str),
    #[error("{what} has {got} cells, more than the {max} the filter is sized for")]
    TooManyCells { what: &'static str, got: usize, max: usize },
    #[error("offer accepts no ridesharing case")]
    NoCases,
    #[error("capacity must be at least 1")]
    ZeroCapacity,
    #[error("expected a {expected:?} key set, got {actual:?}")]
    WrongRole { expected: Role, actual: Role },
    #[error("filter length {m} is shorter than the {slots} time slots")]
    TimeSlotsExceedFilter { m: usize, slots: usize },
    #[error("malformed trip: {0}")]
    Malformed(&'static str),
}

/// How the rider's drop-off relates to the driver's trip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RideCase {
    /// Rider's destination lies in the driver's drop-off area.
    MpMd,
    /// Rider's destination lies on the driver's route.
    MpRd,
    /// Driver's destination lies on the rider's route.
    MpEd,
}

impl RideCase {
    pub const ALL: [RideCase; 3] = [RideCase::MpMd, RideCase::MpRd, RideCase::MpEd];

    pub fn code(self) -> u8 {
        match self {
            RideCase::MpMd => 0,
            RideCase::MpRd => 1,
            RideCase::MpEd => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.code() == code)
    }

    pub fn label(self) -> &'static str {
        match self {
            RideCase::MpMd => "MD",
            RideCase::MpRd => "RD",
            RideCase::MpEd => "ED",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label().eq_ignore_ascii_case(s.trim_start_matches("MP/")))
    }
}

/// Shared encoding parameters for one epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NrsEncoding {
    pub bloom: BloomParams,
    /// Largest cell set a single filter may hold.
    pub max_items: usize,
    pub epoch: u64,
    pub salt: u64,
    pub time_slots: usize,
}

impl NrsEncoding {
    pub fn new(bloom: BloomParams, max_items: usize, epoch: u64, salt: u64) -> Self {
        Self { bloom, max_items, epoch, salt, time_slots: NRS_TIME_SLOTS }
    }

    pub fn alpha(&self) -> usize {
        self.bloom.alpha
    }

    pub fn filter(&self, what: &'static str, cells: &[CellId]) -> Result<BloomFilter, NrsError> {
        if cells.is_empty() {
            return Err(NrsError::EmptyCells(what));
        }
        if cells.len() > self.max_items {
            return Err(NrsError::TooManyCells { what, got: cells.len(), max: self.max_items });
        }
        Ok(BloomFilter::with_cells(self.bloom, self.epoch, self.salt, cells)?)
    }

    pub fn time(&self, t: u32) -> Result<TimeSlotVector, NrsError> {
        if self.time_slots > self.bloom.m {
            return Err(NrsError::TimeSlotsExceedFilter { m: self.bloom.m, slots: self.time_slots });
        }
        Ok(encode_time_slot(t, self.time_slots)?)
    }
}

/// What a driver knows about their own trip.
#[derive(Clone, Debug, PartialEq)]
pub struct OfferSpec {
    pub pickup_cells: Vec<CellId>,
    pub dropoff_cells: Vec<CellId>,
    pub route_cells: Vec<CellId>,
    /// Seconds after midnight.
    pub depart: u32,
    pub capacity: u32,
    pub cases: Vec<RideCase>,
}

impl OfferSpec {
    /// The trip's final route cell.
    pub fn destination(&self) -> Option<CellId> {
        self.route_cells.last().copied()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RequestSpec {
    pub pickup: CellId,
    pub dropoff: CellId,
    pub route_cells: Vec<CellId>,
    pub depart: u32,
}

/// Plaintext filters of an offer, before encryption.
#[derive(Clone, Debug, PartialEq)]
pub struct OfferFilters {
    pub pickup: BloomFilter,
    pub dropoff: BloomFilter,
    pub route: BloomFilter,
    /// Single-cell filter of the trip's last cell, present when MP/ED is accepted.
    pub destination: Option<BloomFilter>,
    pub time: TimeSlotVector,
    pub capacity: u32,
    pub cases: Vec<RideCase>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RequestFilters {
    pub pickup: BloomFilter,
    pub dropoff: BloomFilter,
    pub route: BloomFilter,
    pub time: TimeSlotVector,
}

impl OfferFilters {
    pub fn build(enc: &NrsEncoding, spec: &OfferSpec) -> Result<Self, NrsError> {
        if spec.cases.is_empty() {
            return Err(NrsError::NoCases);
        }
        if spec.capacity == 0 {
            return Err(NrsError::ZeroCapacity);
        }
        let destination = if spec.cases.contains(&RideCase::MpEd) {
            let dest = spec.destination().ok_or(NrsError::EmptyCells("route"))?;
            Some(enc.filter("destination", &[dest])?)
        } else {
            None
        };
        Ok(Self {
            pickup: enc.filter("pick-up", &spec.pickup_cells)?,
            dropoff: enc.filter("drop-off", &spec.dropoff_cells)?,
            route: enc.filter("route", &spec.route_cells)?,
            destination,
            time: enc.time(spec.depart)?,
            capacity: spec.capacity,
            cases: spec.cases.clone(),
        })
    }
}

impl RequestFilters {
    pub fn build(enc: &NrsEncoding, spec: &RequestSpec) -> Result<Self, NrsError> {
        Ok(Self {
            pickup: enc.filter("pick-up", &[spec.pickup])?,
            dropoff: enc.filter("drop-off", &[spec.dropoff])?,
            route: enc.filter("route", &spec.route_cells)?,
            time: enc.time(spec.depart)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NrsOffer {
    pub offer_id: u64,
    pub pickup: EncryptedIndex,
    pub dropoff: EncryptedIndex,
    pub route: EncryptedIndex,
    pub destination: Option<EncryptedIndex>,
    pub time: EncryptedIndex,
    pub capacity: u32,
    pub cases: Vec<RideCase>,
    pub contact_blob: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NrsRequest {
    pub request_id: u64,
    pub pickup: EncryptedIndex,
    pub dropoff: EncryptedIndex,
    pub route: EncryptedIndex,
    pub time: EncryptedIndex,
    pub contact_blob: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NrsMatch {
    pub offer_id: u64,
    pub request_id: u64,
    pub case: RideCase,
}

fn check_role(keys: &UserKeySet, expected: Role) -> Result<(), NrsError> {
    if keys.role() != expected {
        return Err(NrsError::WrongRole { expected, actual: keys.role() });
    }
    Ok(())
}

fn encrypt_filter<R: Rng + ?Sized>(
    f: &BloomFilter,
    keys: &UserKeySet,
    rng: &mut R,
) -> Result<EncryptedIndex, NrsError> {
    Ok(encrypt_index(&f.bits(), keys, rng)?)
}

fn encrypt_time<R: Rng + ?Sized>(
    t: &TimeSlotVector,
    keys: &UserKeySet,
    rng: &mut R,
) -> Result<EncryptedIndex, NrsError> {
    Ok(encrypt_index(&t.bits(keys.dim()), keys, rng)?)
}

impl NrsOffer {
    pub fn encrypt<R: Rng + ?Sized>(
        filters: &OfferFilters,
        keys: &UserKeySet,
        rng: &mut R,
    ) -> Result<Self, NrsError> {
        check_role(keys, Role::DriverNrs)?;
        Ok(Self {
            offer_id: 0,
            pickup: encrypt_filter(&filters.pickup, keys, rng)?,
            dropoff: encrypt_filter(&filters.dropoff, keys, rng)?,
            route: encrypt_filter(&filters.route, keys, rng)?,
            destination: filters
                .destination
                .as_ref()
                .map(|d| encrypt_filter(d, keys, rng))
                .transpose()?,
            time: encrypt_time(&filters.time, keys, rng)?,
            capacity: filters.capacity,
            cases: filters.cases.clone(),
            contact_blob: Vec::new(),
        })
    }

    pub fn indices(&self) -> impl Iterator<Item = &EncryptedIndex> {
        [&self.pickup, &self.dropoff, &self.route, &self.time].into_iter().chain(&self.destination)
    }

    /// Checks the structural invariants of a received offer.
    pub fn validate(&self, m: usize) -> Result<(), NrsError> {
        if self.cases.is_empty() {
            return Err(NrsError::NoCases);
        }
        if self.capacity == 0 {
            return Err(NrsError::ZeroCapacity);
        }
        if self.cases.contains(&RideCase::MpEd) != self.destination.is_some() {
            return Err(NrsError::Malformed("destination index must accompany MP/ED"));
        }
        check_indices(self.indices(), m, Orientation::Column)
    }

    pub fn unmask(self, tos: &TosSecrets) -> Result<Self, NrsError> {
        Ok(Self {
            pickup: self.pickup.unmask(tos)?,
            dropoff: self.dropoff.unmask(tos)?,
            route: self.route.unmask(tos)?,
            destination: self.destination.map(|d| d.unmask(tos)).transpose()?,
            time: self.time.unmask(tos)?,
            ..self
        })
    }

    fn is_unmasked(&self) -> bool {
        self.indices().all(EncryptedIndex::is_unmasked)
    }
}

impl NrsRequest {
    pub fn encrypt<R: Rng + ?Sized>(
        filters: &RequestFilters,
        keys: &UserKeySet,
        rng: &mut R,
    ) -> Result<Self, NrsError> {
        check_role(keys, Role::RiderNrs)?;
        Ok(Self {
            request_id: 0,
            pickup: encrypt_filter(&filters.pickup, keys, rng)?,
            dropoff: encrypt_filter(&filters.dropoff, keys, rng)?,
            route: encrypt_filter(&filters.route, keys, rng)?,
            time: encrypt_time(&filters.time, keys, rng)?,
            contact_blob: Vec::new(),
        })
    }

    pub fn indices(&self) -> impl Iterator<Item = &EncryptedIndex> {
        [&self.pickup, &self.dropoff, &self.route, &self.time].into_iter()
    }

    pub fn validate(&self, m: usize) -> Result<(), NrsError> {
        check_indices(self.indices(), m, Orientation::Row)
    }

    pub fn unmask(self, tos: &TosSecrets) -> Result<Self, NrsError> {
        Ok(Self {
            pickup: self.pickup.unmask(tos)?,
            dropoff: self.dropoff.unmask(tos)?,
            route: self.route.unmask(tos)?,
            time: self.time.unmask(tos)?,
            ..self
        })
    }

    fn is_unmasked(&self) -> bool {
        self.indices().all(EncryptedIndex::is_unmasked)
    }
}

fn check_indices<'a>(
    mut indices: impl Iterator<Item = &'a EncryptedIndex>,
    m: usize,
    orientation: Orientation,
) -> Result<(), NrsError> {
    indices.try_for_each(|i| {
        if i.scheme() != Scheme::Nrs {
            return Err(KnnError::SchemeMismatch.into());
        }
        if i.orientation() != orientation {
            return Err(KnnError::OrientationMismatch.into());
        }
        if i.dim() != m {
            return Err(KnnError::DimensionMismatch { expected: m, actual: i.dim() }.into());
        }
        Ok(())
    })
}

pub fn build_offer<R: Rng + ?Sized>(
    enc: &NrsEncoding,
    spec: &OfferSpec,
    keys: &UserKeySet,
    rng: &mut R,
) -> Result<NrsOffer, NrsError> {
    NrsOffer::encrypt(&OfferFilters::build(enc, spec)?, keys, rng)
}

pub fn build_request<R: Rng + ?Sized>(
    enc: &NrsEncoding,
    spec: &RequestSpec,
    keys: &UserKeySet,
    rng: &mut R,
) -> Result<NrsRequest, NrsError> {
    NrsRequest::encrypt(&RequestFilters::build(enc, spec)?, keys, rng)
}

/// Applies the gates in order: time, pick-up, then the first accepted case
/// that passes.
pub fn decide(
    cases: &[RideCase],
    time_ok: bool,
    pickup_ok: bool,
    mut case_ok: impl FnMut(RideCase) -> Result<bool, NrsError>,
) -> Result<Option<RideCase>, NrsError> {
    if !(time_ok && pickup_ok) {
        return Ok(None);
    }
    for &case in cases {
        if case_ok(case)? {
            return Ok(Some(case));
        }
    }
    Ok(None)
}

fn sim_hits(rider: &EncryptedIndex, driver: &EncryptedIndex, target: usize) -> Result<bool, NrsError> {
    Ok(meets_threshold(match_similarity(rider, driver)?, target))
}

/// ED swaps roles: the rider's route is the row operand.
fn case_hits(
    offer: &NrsOffer,
    request: &NrsRequest,
    case: RideCase,
    alpha: usize,
) -> Result<bool, NrsError> {
    match case {
        RideCase::MpMd => sim_hits(&request.dropoff, &offer.dropoff, alpha),
        RideCase::MpRd => sim_hits(&request.dropoff, &offer.route, alpha),
        RideCase::MpEd => {
            let dest = offer
                .destination
                .as_ref()
                .ok_or(NrsError::Malformed("MP/ED offer without destination index"))?;
            sim_hits(&request.route, dest, alpha)
        }
    }
}

fn evaluate_unmasked(
    offer: &NrsOffer,
    request: &NrsRequest,
    alpha: usize,
) -> Result<Option<RideCase>, NrsError> {
    let time_ok = sim_hits(&request.time, &offer.time, 1)?;
    let pickup_ok = time_ok && sim_hits(&request.pickup, &offer.pickup, alpha)?;
    decide(&offer.cases, time_ok, pickup_ok, |c| case_hits(offer, request, c, alpha))
}

fn prepared_offer<'a>(offer: &'a NrsOffer, tos: &TosSecrets) -> Result<Cow<'a, NrsOffer>, NrsError> {
    if offer.is_unmasked() {
        Ok(Cow::Borrowed(offer))
    } else {
        Ok(Cow::Owned(offer.clone().unmask(tos)?))
    }
}

fn prepared_request<'a>(
    request: &'a NrsRequest,
    tos: &TosSecrets,
) -> Result<Cow<'a, NrsRequest>, NrsError> {
    if request.is_unmasked() {
        Ok(Cow::Borrowed(request))
    } else {
        Ok(Cow::Owned(request.clone().unmask(tos)?))
    }
}

/// Matches one offer against one request. Masked inputs are unmasked first.
pub fn match_pair(
    offer: &NrsOffer,
    request: &NrsRequest,
    tos: &TosSecrets,
    alpha: usize,
) -> Result<Option<NrsMatch>, NrsError> {
    let offer = prepared_offer(offer, tos)?;
    let request = prepared_request(request, tos)?;
    Ok(evaluate_unmasked(&offer, &request, alpha)?.map(|case| NrsMatch {
        offer_id: offer.offer_id,
        request_id: request.request_id,
        case,
    }))
}

/// Outcome of every (request, offer) pair, request-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairTable {
    pub n_offers: usize,
    pub outcomes: Vec<Option<RideCase>>,
}

impl PairTable {
    pub fn get(&self, request: usize, offer: usize) -> Option<RideCase> {
        self.outcomes[request * self.n_offers + offer]
    }
}

/// Evaluates all pairs of unmasked offers and requests.
pub fn pair_table(
    offers: &[NrsOffer],
    requests: &[NrsRequest],
    alpha: usize,
    exec: Execution,
) -> Result<PairTable, NrsError> {
    let n_offers = offers.len();
    let outcomes = par::map_range(exec, n_offers * requests.len(), |i| {
        evaluate_unmasked(&offers[i % n_offers], &requests[i / n_offers], alpha)
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    Ok(PairTable { n_offers, outcomes })
}

/// Greedy first-feasible assignment in request order. Returns
/// `(request index, offer index, case)` and decrements `remaining`.
pub fn assign_greedy(table: &PairTable, remaining: &mut [u32]) -> Vec<(usize, usize, RideCase)> {
    let n_requests = table.outcomes.len().checked_div(table.n_offers).unwrap_or(0);
    let mut out = Vec::new();
    for r in 0..n_requests {
        let hit = (0..table.n_offers)
            .find_map(|o| table.get(r, o).filter(|_| remaining[o] > 0).map(|c| (o, c)));
        if let Some((o, case)) = hit {
            remaining[o] -= 1;
            out.push((r, o, case));
        }
    }
    out
}

/// Matches a batch, with each offer's remaining capacity supplied and updated.
pub fn match_with_capacity(
    offers: &[NrsOffer],
    requests: &[NrsRequest],
    tos: &TosSecrets,
    alpha: usize,
    remaining: &mut [u32],
    exec: Execution,
) -> Result<Vec<NrsMatch>, NrsError> {
    assert_eq!(offers.len(), remaining.len(), "one capacity counter per offer");
    let offers: Vec<NrsOffer> = par::map(exec, offers, |o| prepared_offer(o, tos).map(Cow::into_owned))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let requests: Vec<NrsRequest> =
        par::map(exec, requests, |r| prepared_request(r, tos).map(Cow::into_owned))
            .into_iter()
            .collect::<Result<_, _>>()?;
    let table = pair_table(&offers, &requests, alpha, exec)?;
    Ok(assign_greedy(&table, remaining)
        .into_iter()
        .map(|(r, o, case)| NrsMatch {
            offer_id: offers[o].offer_id,
            request_id: requests[r].request_id,
            case,
        })
        .collect())
}

pub fn match_all(
    offers: &[NrsOffer],
    requests: &[NrsRequest],
    tos: &TosSecrets,
    alpha: usize,
    exec: Execution,
) -> Result<Vec<NrsMatch>, NrsError> {
    let mut remaining: Vec<u32> = offers.iter().map(|o| o.capacity).collect();
    match_with_capacity(offers, requests, tos, alpha, &mut remaining, exec)
}

/// The same gates evaluated on plaintext filters.
pub fn plain_outcome(offer: &OfferFilters, request: &RequestFilters) -> Option<RideCase> {
    let alpha = offer.pickup.params().alpha;
    let time_ok = offer.time.dot(&request.time) == 1;
    let hit = |a: &BloomFilter, b: &BloomFilter| a.dot(b).map(|d| d == alpha).unwrap_or(false);
    let pickup_ok = hit(&request.pickup, &offer.pickup);
    decide(&offer.cases, time_ok, pickup_ok, |case| {
        Ok(match case {
            RideCase::MpMd => hit(&request.dropoff, &offer.dropoff),
            RideCase::MpRd => hit(&request.dropoff, &offer.route),
            RideCase::MpEd => offer.destination.as_ref().is_some_and(|d| hit(&request.route, d)),
        })
    })
    .expect("plaintext gates are infallible")
}

/// Ground truth on the cell sets themselves, with no Bloom filter involved.
pub fn exact_outcome(offer: &OfferSpec, request: &RequestSpec) -> Option<RideCase> {
    let time_ok = crate::bloom::slot_of(offer.depart, NRS_TIME_SLOTS).ok()
        == crate::bloom::slot_of(request.depart, NRS_TIME_SLOTS).ok();
    let pickup_ok = offer.pickup_cells.contains(&request.pickup);
    decide(&offer.cases, time_ok, pickup_ok, |case| {
        Ok(match case {
            RideCase::MpMd => offer.dropoff_cells.contains(&request.dropoff),
            RideCase::MpRd => offer.route_cells.contains(&request.dropoff),
            RideCase::MpEd => offer.destination().is_some_and(|d| request.route_cells.contains(&d)),
        })
    })
    .expect("set gates are infallible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::{derive_user_keys, generate_master_keys, SchemeParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct Fixture {
        enc: NrsEncoding,
        tos: TosSecrets,
        driver: UserKeySet,
        rider: UserKeySet,
    }

    fn fixture() -> Fixture {
        let bloom = BloomParams { m: 64, alpha: 3 };
        let (nrs, _, tos) = generate_master_keys(&SchemeParams::new(64, 4, 4).unwrap(), 5).unwrap();
        Fixture {
            enc: NrsEncoding::new(bloom, 12, 0, 99),
            driver: derive_user_keys(&nrs, &tos, Role::DriverNrs, 1).unwrap(),
            rider: derive_user_keys(&nrs, &tos, Role::RiderNrs, 2).unwrap(),
            tos,
        }
    }

    fn cells(ids: &[u32]) -> Vec<CellId> {
        ids.iter().map(|&id| CellId { id, epoch: 0 }).collect()
    }

    fn offer_spec(cases: Vec<RideCase>) -> OfferSpec {
        OfferSpec {
            pickup_cells: cells(&[1, 2]),
            dropoff_cells: cells(&[8, 9]),
            route_cells: cells(&[1, 3, 5, 7, 9]),
            depart: 8 * 3600,
            capacity: 1,
            cases,
        }
    }

    fn request_spec(dropoff: u32, route: &[u32]) -> RequestSpec {
        RequestSpec {
            pickup: CellId { id: 1, epoch: 0 },
            dropoff: CellId { id: dropoff, epoch: 0 },
            route_cells: cells(route),
            depart: 8 * 3600 + 600,
        }
    }

    fn run(f: &Fixture, offer: &OfferSpec, req: &RequestSpec) -> Option<RideCase> {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let o = build_offer(&f.enc, offer, &f.driver, &mut rng).unwrap();
        let r = build_request(&f.enc, req, &f.rider, &mut rng).unwrap();
        match_pair(&o, &r, &f.tos, f.enc.alpha()).unwrap().map(|m| m.case)
    }

    #[test]
    fn the_three_cases() {
        let f = fixture();
        let all = vec![RideCase::MpMd, RideCase::MpRd, RideCase::MpEd];
        assert_eq!(run(&f, &offer_spec(all.clone()), &request_spec(8, &[1, 8])), Some(RideCase::MpMd));
        assert_eq!(run(&f, &offer_spec(all.clone()), &request_spec(5, &[1, 5])), Some(RideCase::MpRd));
        assert_eq!(
            run(&f, &offer_spec(all), &request_spec(14, &[1, 9, 14])),
            Some(RideCase::MpEd)
        );
        let md_only = offer_spec(vec![RideCase::MpMd]);
        assert_eq!(run(&f, &md_only, &request_spec(5, &[1, 5])), None);
    }

    #[test]
    fn time_gate() {
        let f = fixture();
        let mut req = request_spec(8, &[1, 8]);
        req.depart = 12 * 3600;
        assert_eq!(run(&f, &offer_spec(vec![RideCase::MpMd]), &req), None);
    }

    #[test]
    fn capacity_bounds_matches() {
        let f = fixture();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let o = build_offer(&f.enc, &offer_spec(vec![RideCase::MpMd]), &f.driver, &mut rng).unwrap();
        let reqs: Vec<NrsRequest> = (0..2)
            .map(|i| {
                let mut r = build_request(&f.enc, &request_spec(8, &[1, 8]), &f.rider, &mut rng).unwrap();
                r.request_id = i;
                r
            })
            .collect();
        let matches = match_all(&[o], &reqs, &f.tos, 3, Execution::Sequential).unwrap();
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].request_id, 0);
        assert!(match_all(&[], &reqs, &f.tos, 3, Execution::Sequential).unwrap().is_empty());
    }

    #[test]
    fn invalid_offers_rejected() {
        let f = fixture();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        assert!(matches!(
            build_offer(&f.enc, &offer_spec(vec![]), &f.driver, &mut rng),
            Err(NrsError::NoCases)
        ));
        let mut big = offer_spec(vec![RideCase::MpMd]);
        big.route_cells = cells(&(0..13).collect::<Vec<_>>());
        assert!(matches!(
            build_offer(&f.enc, &big, &f.driver, &mut rng),
            Err(NrsError::TooManyCells { .. })
        ));
        assert!(matches!(
            build_offer(&f.enc, &offer_spec(vec![RideCase::MpMd]), &f.rider, &mut rng),
            Err(NrsError::WrongRole { .. })
        ));
    }

    #[test]
    fn case_labels_round_trip() {
        for c in RideCase::ALL {
            assert_eq!(RideCase::from_label(c.label()), Some(c));
            assert_eq!(RideCase::from_code(c.code()), Some(c));
        }
        assert_eq!(RideCase::from_label("MP/RD"), Some(RideCase::MpRd));
    }
}
