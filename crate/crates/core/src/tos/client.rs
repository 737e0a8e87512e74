use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::bloom::{BloomParams, EpochIdMap};
use crate::knn::{Role, Scheme, UserKeySet};
use crate::nrs::{self, NrsEncoding, OfferSpec, RequestSpec};
use crate::trs::{self, Preference, TimedCell, TrsEncoding};

use super::messages::{Envelope, KeyBundle, MatchResult, Message, OfferPayload, PublicParams, RequestPayload};
use super::transport::Transport;
use super::wire::Token;
use super::TosError;

/// Bytes moved through a client's transport.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Traffic {
    pub sent: usize,
    pub received: usize,
}

/// A registered user. Encrypts trips locally and talks to the server
/// through any transport.
pub struct Client<T: Transport> {
    transport: T,
    role: Role,
    params: PublicParams,
    keys: Vec<UserKeySet>,
    tokens: Vec<Token>,
    rng: ChaCha20Rng,
    traffic: Traffic,
}

/// Sends a message without a client identity, for registration and admin calls.
pub fn call<T: Transport>(
    transport: &mut T,
    epoch: u64,
    token: Option<Token>,
    message: Message,
    traffic: &mut Traffic,
) -> Result<Message, TosError> {
    let frame = Envelope::new(epoch, token, message).encode()?;
    let reply = transport.exchange(&frame)?;
    traffic.sent += frame.len();
    traffic.received += reply.len();
    match Envelope::decode(&reply)?.message {
        Message::Error(e) => Err(TosError::Server(e)),
        m => Ok(m),
    }
}

impl<T: Transport> Client<T> {
    pub fn register(mut transport: T, role: Role, epoch: u64, seed: u64) -> Result<Self, TosError> {
        let mut traffic = Traffic::default();
        match call(&mut transport, epoch, None, Message::RegisterUser { role }, &mut traffic)? {
            Message::KeyBundle(b) => Ok(Self::from_bundle(transport, role, b, seed)),
            other => Err(TosError::Rejected(format!("expected key bundle, got type {}", other.code()))),
        }
    }

    pub fn from_bundle(transport: T, role: Role, bundle: KeyBundle, seed: u64) -> Self {
        let mut tokens = bundle.tokens;
        tokens.reverse();
        Self {
            transport,
            role,
            params: bundle.params,
            keys: bundle.keys,
            tokens,
            rng: ChaCha20Rng::seed_from_u64(seed),
            traffic: Traffic::default(),
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn params(&self) -> &PublicParams {
        &self.params
    }

    pub fn keys(&self) -> &[UserKeySet] {
        &self.keys
    }

    pub fn tokens_left(&self) -> usize {
        self.tokens.len()
    }

    pub fn traffic(&self) -> Traffic {
        self.traffic
    }

    pub fn transport_mut(&mut self) -> &mut T {
        &mut self.transport
    }

    /// Cell ids for the current epoch.
    pub fn id_map(&self) -> EpochIdMap {
        EpochIdMap::new(self.params.k, self.params.epoch, self.params.salt)
    }

    pub fn nrs_encoding(&self) -> NrsEncoding {
        let p = &self.params;
        NrsEncoding::new(BloomParams { m: p.m, alpha: p.alpha }, p.max_items, p.epoch, p.salt)
    }

    pub fn trs_encoding(&self) -> TrsEncoding {
        TrsEncoding { k: self.params.k, ell: self.params.ell }
    }

    /// Adopts a new epoch announced by the authority.
    pub fn set_epoch(&mut self, epoch: u64, salt: u64) {
        self.params.epoch = epoch;
        self.params.salt = salt;
    }

    fn key(keys: &[UserKeySet], role: Role) -> Result<&UserKeySet, TosError> {
        keys.iter()
            .find(|k| k.role() == role)
            .ok_or_else(|| TosError::Rejected(format!("no {role:?} key set in this bundle")))
    }

    pub fn send(&mut self, message: Message, authenticated: bool) -> Result<Message, TosError> {
        let token = if authenticated {
            Some(self.tokens.pop().ok_or_else(|| TosError::Auth("out of tokens".into()))?)
        } else {
            None
        };
        call(&mut self.transport, self.params.epoch, token, message, &mut self.traffic)
    }

    /// Sends with an explicit token, e.g. to exercise replay handling.
    pub fn send_with_token(&mut self, message: Message, token: Token) -> Result<Message, TosError> {
        call(&mut self.transport, self.params.epoch, Some(token), message, &mut self.traffic)
    }

    /// Takes the next unused token out of the bundle.
    pub fn take_token(&mut self) -> Option<Token> {
        self.tokens.pop()
    }

    fn expect_ack(reply: Message) -> Result<u64, TosError> {
        match reply {
            Message::Ack { id } => Ok(id),
            other => Err(TosError::Rejected(format!("expected ack, got type {}", other.code()))),
        }
    }

    fn expect_matches(reply: Message) -> Result<Vec<MatchResult>, TosError> {
        match reply {
            Message::MatchNotification(r) => Ok(r),
            other => Err(TosError::Rejected(format!("expected matches, got type {}", other.code()))),
        }
    }

    pub fn submit_offer(&mut self, offer: OfferPayload) -> Result<u64, TosError> {
        Self::expect_ack(self.send(Message::SubmitOffer(offer), true)?)
    }

    pub fn submit_request(&mut self, request: RequestPayload) -> Result<u64, TosError> {
        Self::expect_ack(self.send(Message::SubmitRequest(request), true)?)
    }

    pub fn nrs_offer(&mut self, spec: &OfferSpec, contact: &[u8]) -> Result<OfferPayload, TosError> {
        let enc = self.nrs_encoding();
        let keys = Self::key(&self.keys, Role::DriverNrs)?;
        let mut o = nrs::build_offer(&enc, spec, keys, &mut self.rng)?;
        o.contact_blob = contact.to_vec();
        Ok(OfferPayload::Nrs(o))
    }

    pub fn nrs_request(&mut self, spec: &RequestSpec, contact: &[u8]) -> Result<RequestPayload, TosError> {
        let enc = self.nrs_encoding();
        let keys = Self::key(&self.keys, Role::RiderNrs)?;
        let mut r = nrs::build_request(&enc, spec, keys, &mut self.rng)?;
        r.contact_blob = contact.to_vec();
        Ok(RequestPayload::Nrs(r))
    }

    pub fn trs_offer(
        &mut self,
        route: &[TimedCell],
        capacity: u32,
        contact: &[u8],
    ) -> Result<OfferPayload, TosError> {
        let enc = self.trs_encoding();
        let dk = Self::key(&self.keys, Role::DriverTrs)?;
        let rk = Self::key(&self.keys, Role::RiderTrs)?;
        let mut o = trs::build_offer(&enc, route, capacity, dk, rk, &mut self.rng)?;
        o.contact_blob = contact.to_vec();
        Ok(OfferPayload::Trs(o))
    }

    pub fn trs_request(
        &mut self,
        pickup: TimedCell,
        dropoff: TimedCell,
        preference: Preference,
        contact: &[u8],
    ) -> Result<RequestPayload, TosError> {
        let enc = self.trs_encoding();
        let rk = Self::key(&self.keys, Role::RiderTrs)?;
        let mut r = trs::build_request(&enc, pickup, dropoff, preference, rk, &mut self.rng)?;
        r.contact_blob = contact.to_vec();
        Ok(RequestPayload::Trs(r))
    }

    pub fn run_matching(&mut self, scheme: Scheme) -> Result<Vec<MatchResult>, TosError> {
        Self::expect_matches(self.send(Message::RunMatching { scheme }, false)?)
    }

    pub fn poll(&mut self, id: u64) -> Result<Vec<MatchResult>, TosError> {
        Self::expect_matches(self.send(Message::PollNotifications { id }, true)?)
    }

    /// Asks the server to rotate and adopts the announced epoch.
    pub fn rotate_epoch(&mut self) -> Result<(u64, u64), TosError> {
        match self.send(Message::RotateEpoch, false)? {
            Message::EpochAnnounce { epoch, salt } => {
                self.set_epoch(epoch, salt);
                Ok((epoch, salt))
            }
            other => Err(TosError::Rejected(format!("expected announce, got type {}", other.code()))),
        }
    }
}
