//! The trip organizer's state and matching rounds. It sees unmasked
//! ciphertexts, opaque contact blobs and token values, and nothing else.

use std::collections::{HashMap, HashSet};

use crate::knn::{Scheme, TosSecrets};
use crate::nrs::{self, NrsOffer, NrsRequest};
use crate::par::Execution;
use crate::trs::{self, EdgeKind, PathResult, TrsEncoding, TrsGraph, TrsRequest};

use super::messages::{MatchDetail, MatchResult, OfferPayload, RequestPayload};
use super::wire::Token;
use super::TosError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrganizerParams {
    pub m: usize,
    pub alpha: usize,
    pub trs: TrsEncoding,
    pub p_max: usize,
}

pub struct TripOrganizer {
    params: OrganizerParams,
    exec: Execution,
    epoch: u64,
    secrets: TosSecrets,
    tokens: HashSet<Token>,
    next_id: u64,
    nrs_offers: Vec<NrsOffer>,
    nrs_remaining: Vec<u32>,
    nrs_requests: Vec<NrsRequest>,
    graph: TrsGraph,
    offer_contacts: HashMap<u64, Vec<u8>>,
    trs_requests: Vec<TrsRequest>,
    notifications: HashMap<u64, Vec<MatchResult>>,
}

impl TripOrganizer {
    pub fn new(params: OrganizerParams, epoch: u64, secrets: TosSecrets, exec: Execution) -> Self {
        Self {
            params,
            exec,
            epoch,
            secrets,
            tokens: HashSet::new(),
            next_id: 1,
            nrs_offers: Vec::new(),
            nrs_remaining: Vec::new(),
            nrs_requests: Vec::new(),
            graph: TrsGraph::new(epoch),
            offer_contacts: HashMap::new(),
            trs_requests: Vec::new(),
            notifications: HashMap::new(),
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn params(&self) -> OrganizerParams {
        self.params
    }

    pub fn graph(&self) -> &TrsGraph {
        &self.graph
    }

    pub fn pending(&self, scheme: Scheme) -> (usize, usize) {
        match scheme {
            Scheme::Nrs => (self.nrs_offers.len(), self.nrs_requests.len()),
            Scheme::Trs => (self.graph.offers().count(), self.trs_requests.len()),
        }
    }

    pub fn admit_tokens(&mut self, tokens: impl IntoIterator<Item = Token>) {
        self.tokens.extend(tokens);
    }

    /// Consumes a token; each one authenticates exactly one message.
    pub fn authenticate(&mut self, token: Option<&Token>) -> Result<(), TosError> {
        match token {
            Some(t) if self.tokens.remove(t) => Ok(()),
            Some(_) => Err(TosError::Auth("unknown or already used token".into())),
            None => Err(TosError::Auth("missing token".into())),
        }
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn submit_offer(&mut self, offer: OfferPayload) -> Result<u64, TosError> {
        match offer {
            OfferPayload::Nrs(o) => {
                o.validate(self.params.m)?;
                let mut o = o.unmask(&self.secrets)?;
                o.offer_id = self.fresh_id();
                self.nrs_remaining.push(o.capacity);
                let id = o.offer_id;
                self.nrs_offers.push(o);
                Ok(id)
            }
            OfferPayload::Trs(mut o) => {
                o.validate(self.params.trs.n())?;
                let id = self.fresh_id();
                o.offer_id = id;
                let contact = std::mem::take(&mut o.contact_blob);
                trs::insert_offer(&mut self.graph, o, &self.secrets, &self.params.trs, self.exec)?;
                self.offer_contacts.insert(id, contact);
                Ok(id)
            }
        }
    }

    pub fn submit_request(&mut self, request: RequestPayload) -> Result<u64, TosError> {
        match request {
            RequestPayload::Nrs(r) => {
                r.validate(self.params.m)?;
                let mut r = r.unmask(&self.secrets)?;
                r.request_id = self.fresh_id();
                let id = r.request_id;
                self.nrs_requests.push(r);
                Ok(id)
            }
            RequestPayload::Trs(r) => {
                r.validate(self.params.trs.n())?;
                let mut r = r.unmask(&self.secrets)?;
                r.request_id = self.fresh_id();
                let id = r.request_id;
                self.trs_requests.push(r);
                Ok(id)
            }
        }
    }

    /// Matches every pending request of `scheme` once. Offers keep their
    /// remaining capacity across rounds; requests are consumed.
    pub fn run_matching(&mut self, scheme: Scheme) -> Result<Vec<MatchResult>, TosError> {
        let results = match scheme {
            Scheme::Nrs => self.match_nrs()?,
            Scheme::Trs => self.match_trs()?,
        };
        for r in &results {
            for id in std::iter::once(r.request_id).chain(r.offer_ids.iter().copied()) {
                self.notifications.entry(id).or_default().push(r.clone());
            }
        }
        Ok(results)
    }

    fn match_nrs(&mut self) -> Result<Vec<MatchResult>, TosError> {
        let requests = std::mem::take(&mut self.nrs_requests);
        let matches = nrs::match_with_capacity(
            &self.nrs_offers,
            &requests,
            &self.secrets,
            self.params.alpha,
            &mut self.nrs_remaining,
            self.exec,
        )?;
        let offer_at: HashMap<u64, usize> =
            self.nrs_offers.iter().enumerate().map(|(i, o)| (o.offer_id, i)).collect();
        let request_at: HashMap<u64, usize> =
            requests.iter().enumerate().map(|(i, r)| (r.request_id, i)).collect();
        Ok(matches
            .into_iter()
            .map(|m| MatchResult {
                scheme: Scheme::Nrs,
                request_id: m.request_id,
                offer_ids: vec![m.offer_id],
                detail: MatchDetail::Nrs(m.case),
                request_contact: requests[request_at[&m.request_id]].contact_blob.clone(),
                offer_contacts: vec![self.nrs_offers[offer_at[&m.offer_id]].contact_blob.clone()],
            })
            .collect())
    }

    fn match_trs(&mut self) -> Result<Vec<MatchResult>, TosError> {
        let requests = std::mem::take(&mut self.trs_requests);
        let mut results = Vec::new();
        for request in requests {
            let outcome = trs::search(
                &self.graph,
                &request,
                &self.secrets,
                &self.params.trs,
                self.params.p_max,
                self.exec,
            )?;
            let Some(path) = outcome.selected else { continue };
            results.push(self.trs_result(&request, &path));
            trs::update_graph(&mut self.graph, std::slice::from_ref(&path))?;
        }
        Ok(results)
    }

    fn trs_result(&self, request: &TrsRequest, path: &PathResult) -> MatchResult {
        let transfer_cells = path
            .nodes
            .windows(2)
            .filter(|w| self.graph.edge_kind(w[0], w[1]) == Some(EdgeKind::Transfer))
            .map(|w| self.graph.node(w[0]).cell.relay.clone())
            .collect();
        MatchResult {
            scheme: Scheme::Trs,
            request_id: request.request_id,
            offer_ids: path.offers.clone(),
            detail: MatchDetail::Trs {
                cell_count: path.cell_count,
                transfer_count: path.transfer_count,
                transfer_cells,
            },
            request_contact: request.contact_blob.clone(),
            offer_contacts: path
                .offers
                .iter()
                .map(|id| self.offer_contacts.get(id).cloned().unwrap_or_default())
                .collect(),
        }
    }

    /// Drains the notifications addressed to an offer or request id.
    pub fn poll(&mut self, id: u64) -> Vec<MatchResult> {
        self.notifications.remove(&id).unwrap_or_default()
    }

    /// Enters a new epoch: pending trips of the old one are dropped, and the
    /// masking secrets replaced if the authority redrew them.
    pub fn rotate(&mut self, epoch: u64, secrets: TosSecrets) {
        self.epoch = epoch;
        self.secrets = secrets;
        self.nrs_offers.clear();
        self.nrs_remaining.clear();
        self.nrs_requests.clear();
        self.graph = TrsGraph::new(epoch);
        self.offer_contacts.clear();
        self.trs_requests.clear();
    }
}
