//! Message types and their payload encodings.

use crate::knn::{read_key_set, write_key_set, EncryptedIndex, Role, Scheme, UserKeySet};
use crate::nrs::{NrsOffer, NrsRequest, RideCase};
use crate::trs::{Preference, TrsCellIndex, TrsOffer, TrsRequest};

use super::wire::{Frame, Reader, Token, Writer, TOKEN_LEN};
use super::TosError;

/// Everything a registered user needs besides their key sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PublicParams {
    pub epoch: u64,
    pub salt: u64,
    pub m: usize,
    pub alpha: usize,
    pub max_items: usize,
    pub k: usize,
    pub ell: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeyBundle {
    pub params: PublicParams,
    pub keys: Vec<UserKeySet>,
    pub tokens: Vec<Token>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OfferPayload {
    Nrs(NrsOffer),
    Trs(TrsOffer),
}

#[derive(Clone, Debug, PartialEq)]
pub enum RequestPayload {
    Nrs(NrsRequest),
    Trs(TrsRequest),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatchDetail {
    Nrs(RideCase),
    Trs {
        cell_count: usize,
        transfer_count: usize,
        /// Driver-form ciphertexts of the cells where the rider changes vehicle.
        transfer_cells: Vec<EncryptedIndex>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub scheme: Scheme,
    pub request_id: u64,
    /// One offer for NRS; offers in traversal order for TRS.
    pub offer_ids: Vec<u64>,
    pub detail: MatchDetail,
    pub request_contact: Vec<u8>,
    pub offer_contacts: Vec<Vec<u8>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    RegisterUser { role: Role },
    KeyBundle(KeyBundle),
    SubmitOffer(OfferPayload),
    SubmitRequest(RequestPayload),
    MatchNotification(Vec<MatchResult>),
    EpochAnnounce { epoch: u64, salt: u64 },
    Error(String),
    Ack { id: u64 },
    RunMatching { scheme: Scheme },
    PollNotifications { id: u64 },
    RotateEpoch,
}

impl Message {
    pub fn code(&self) -> u8 {
        match self {
            Message::RegisterUser { .. } => 1,
            Message::KeyBundle(_) => 2,
            Message::SubmitOffer(_) => 3,
            Message::SubmitRequest(_) => 4,
            Message::MatchNotification(_) => 5,
            Message::EpochAnnounce { .. } => 6,
            Message::Error(_) => 7,
            Message::Ack { .. } => 8,
            Message::RunMatching { .. } => 9,
            Message::PollNotifications { .. } => 10,
            Message::RotateEpoch => 11,
        }
    }

    /// Messages a user must authenticate with a token.
    pub fn needs_token(&self) -> bool {
        matches!(
            self,
            Message::SubmitOffer(_) | Message::SubmitRequest(_) | Message::PollNotifications { .. }
        )
    }

    pub fn encode_payload(&self) -> Result<Vec<u8>, TosError> {
        let mut w = Writer::new();
        match self {
            Message::RegisterUser { role } => {
                w.u8(role.code());
            }
            Message::KeyBundle(b) => {
                let p = &b.params;
                w.u64(p.epoch).u64(p.salt);
                for v in [p.m, p.alpha, p.max_items, p.k, p.ell] {
                    w.u32(v as u32);
                }
                w.u32(b.keys.len() as u32);
                for k in &b.keys {
                    let mut buf = Vec::new();
                    write_key_set(&mut buf, k)?;
                    w.bytes(&buf);
                }
                w.u32(b.tokens.len() as u32);
                for t in &b.tokens {
                    w.raw(t);
                }
            }
            Message::SubmitOffer(OfferPayload::Nrs(o)) => {
                w.u8(Scheme::Nrs.code());
                w.index(&o.pickup).index(&o.dropoff).index(&o.route).index(&o.time);
                match &o.destination {
                    Some(d) => w.u8(1).index(d),
                    None => w.u8(0),
                };
                w.u32(o.capacity).u32(o.cases.len() as u32);
                for c in &o.cases {
                    w.u8(c.code());
                }
                w.bytes(&o.contact_blob);
            }
            Message::SubmitOffer(OfferPayload::Trs(o)) => {
                w.u8(Scheme::Trs.code()).u32(o.cells.len() as u32);
                for c in &o.cells {
                    w.index(&c.plus).index(&c.minus);
                }
                w.u32(o.capacity).bytes(&o.contact_blob);
            }
            Message::SubmitRequest(RequestPayload::Nrs(r)) => {
                w.u8(Scheme::Nrs.code());
                w.index(&r.pickup).index(&r.dropoff).index(&r.route).index(&r.time);
                w.bytes(&r.contact_blob);
            }
            Message::SubmitRequest(RequestPayload::Trs(r)) => {
                w.u8(Scheme::Trs.code()).index(&r.pickup).index(&r.dropoff);
                w.str(&r.preference.to_string()).bytes(&r.contact_blob);
            }
            Message::MatchNotification(results) => {
                w.u32(results.len() as u32);
                for r in results {
                    encode_result(&mut w, r);
                }
            }
            Message::EpochAnnounce { epoch, salt } => {
                w.u64(*epoch).u64(*salt);
            }
            Message::Error(msg) => {
                w.str(msg);
            }
            Message::Ack { id } | Message::PollNotifications { id } => {
                w.u64(*id);
            }
            Message::RunMatching { scheme } => {
                w.u8(scheme.code());
            }
            Message::RotateEpoch => {}
        }
        Ok(w.finish())
    }

    pub fn decode_payload(code: u8, payload: &[u8]) -> Result<Self, TosError> {
        let mut r = Reader::new(payload);
        let msg = match code {
            1 => Message::RegisterUser { role: role(r.u8()?)? },
            2 => {
                let epoch = r.u64()?;
                let salt = r.u64()?;
                let mut v = [0usize; 5];
                for x in &mut v {
                    *x = r.u32()? as usize;
                }
                let [m, alpha, max_items, k, ell] = v;
                let params = PublicParams { epoch, salt, m, alpha, max_items, k, ell };
                let keys = (0..r.u32()?)
                    .map(|_| Ok(read_key_set(r.bytes()?)?))
                    .collect::<Result<_, TosError>>()?;
                let n_tokens = r.u32()? as usize;
                let tokens = (0..n_tokens)
                    .map(|_| Ok(r.raw(TOKEN_LEN)?.try_into().unwrap()))
                    .collect::<Result<_, TosError>>()?;
                Message::KeyBundle(KeyBundle { params, keys, tokens })
            }
            3 => Message::SubmitOffer(match scheme(r.u8()?)? {
                Scheme::Nrs => {
                    let (pickup, dropoff, route, time) = (r.index()?, r.index()?, r.index()?, r.index()?);
                    let destination = if r.u8()? == 1 { Some(r.index()?) } else { None };
                    let capacity = r.u32()?;
                    let cases = (0..r.u32()?)
                        .map(|_| {
                            RideCase::from_code(r.u8()?).ok_or_else(|| TosError::Wire("case".into()))
                        })
                        .collect::<Result<_, _>>()?;
                    OfferPayload::Nrs(NrsOffer {
                        offer_id: 0,
                        pickup,
                        dropoff,
                        route,
                        destination,
                        time,
                        capacity,
                        cases,
                        contact_blob: r.bytes()?.to_vec(),
                    })
                }
                Scheme::Trs => {
                    let cells = (0..r.u32()?)
                        .map(|_| Ok(TrsCellIndex { plus: r.index()?, minus: r.index()? }))
                        .collect::<Result<_, TosError>>()?;
                    OfferPayload::Trs(TrsOffer {
                        offer_id: 0,
                        cells,
                        capacity: r.u32()?,
                        contact_blob: r.bytes()?.to_vec(),
                    })
                }
            }),
            4 => Message::SubmitRequest(match scheme(r.u8()?)? {
                Scheme::Nrs => RequestPayload::Nrs(NrsRequest {
                    request_id: 0,
                    pickup: r.index()?,
                    dropoff: r.index()?,
                    route: r.index()?,
                    time: r.index()?,
                    contact_blob: r.bytes()?.to_vec(),
                }),
                Scheme::Trs => RequestPayload::Trs(TrsRequest {
                    request_id: 0,
                    pickup: r.index()?,
                    dropoff: r.index()?,
                    preference: r.str()?.parse::<Preference>()?,
                    contact_blob: r.bytes()?.to_vec(),
                }),
            }),
            5 => Message::MatchNotification(
                (0..r.u32()?).map(|_| decode_result(&mut r)).collect::<Result<_, _>>()?,
            ),
            6 => Message::EpochAnnounce { epoch: r.u64()?, salt: r.u64()? },
            7 => Message::Error(r.str()?),
            8 => Message::Ack { id: r.u64()? },
            9 => Message::RunMatching { scheme: scheme(r.u8()?)? },
            10 => Message::PollNotifications { id: r.u64()? },
            11 => Message::RotateEpoch,
            other => return Err(TosError::Wire(format!("unknown message type {other}"))),
        };
        r.finish()?;
        Ok(msg)
    }
}

fn role(code: u8) -> Result<Role, TosError> {
    Role::from_code(code).ok_or_else(|| TosError::Wire(format!("unknown role {code}")))
}

fn scheme(code: u8) -> Result<Scheme, TosError> {
    Scheme::from_code(code).ok_or_else(|| TosError::Wire(format!("unknown scheme {code}")))
}

fn encode_result(w: &mut Writer, r: &MatchResult) {
    w.u8(r.scheme.code()).u64(r.request_id).u32(r.offer_ids.len() as u32);
    for id in &r.offer_ids {
        w.u64(*id);
    }
    match &r.detail {
        MatchDetail::Nrs(case) => {
            w.u8(0).u8(case.code());
        }
        MatchDetail::Trs { cell_count, transfer_count, transfer_cells } => {
            w.u8(1).u32(*cell_count as u32).u32(*transfer_count as u32);
            w.u32(transfer_cells.len() as u32);
            for c in transfer_cells {
                w.index(c);
            }
        }
    }
    w.bytes(&r.request_contact).u32(r.offer_contacts.len() as u32);
    for c in &r.offer_contacts {
        w.bytes(c);
    }
}

fn decode_result(r: &mut Reader<'_>) -> Result<MatchResult, TosError> {
    let scheme = scheme(r.u8()?)?;
    let request_id = r.u64()?;
    let offer_ids = (0..r.u32()?).map(|_| r.u64()).collect::<Result<_, _>>()?;
    let detail = match r.u8()? {
        0 => MatchDetail::Nrs(
            RideCase::from_code(r.u8()?).ok_or_else(|| TosError::Wire("case".into()))?,
        ),
        1 => MatchDetail::Trs {
            cell_count: r.u32()? as usize,
            transfer_count: r.u32()? as usize,
            transfer_cells: (0..r.u32()?).map(|_| r.index()).collect::<Result<_, _>>()?,
        },
        _ => return Err(TosError::Wire("match detail".into())),
    };
    let request_contact = r.bytes()?.to_vec();
    let offer_contacts = (0..r.u32()?).map(|_| Ok(r.bytes()?.to_vec())).collect::<Result<_, TosError>>()?;
    Ok(MatchResult { scheme, request_id, offer_ids, detail, request_contact, offer_contacts })
}

/// A message with its routing header.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub epoch: u64,
    pub token: Option<Token>,
    pub message: Message,
}

impl Envelope {
    pub fn new(epoch: u64, token: Option<Token>, message: Message) -> Self {
        Self { epoch, token, message }
    }

    pub fn to_frame(&self) -> Result<Frame, TosError> {
        Ok(Frame {
            msg_type: self.message.code(),
            epoch: self.epoch,
            token: self.token.unwrap_or([0; TOKEN_LEN]),
            payload: self.message.encode_payload()?,
        })
    }

    pub fn encode(&self) -> Result<Vec<u8>, TosError> {
        Ok(self.to_frame()?.encode())
    }

    pub fn from_frame(frame: &Frame) -> Result<Self, TosError> {
        Ok(Self {
            epoch: frame.epoch,
            token: frame.has_token().then_some(frame.token),
            message: Message::decode_payload(frame.msg_type, &frame.payload)?,
        })
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, TosError> {
        Self::from_frame(&Frame::decode(bytes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::Orientation;

    fn idx(scheme: Scheme, orientation: Orientation) -> EncryptedIndex {
        EncryptedIndex::from_raw(scheme, orientation, 1, (0..8).map(f64::from).collect(), false).unwrap()
    }

    fn round_trip(m: Message) {
        let env = Envelope::new(3, Some([1; TOKEN_LEN]), m);
        assert_eq!(Envelope::decode(&env.encode().unwrap()).unwrap(), env);
    }

    #[test]
    fn messages_round_trip() {
        let col = idx(Scheme::Nrs, Orientation::Column);
        let row = idx(Scheme::Nrs, Orientation::Row);
        round_trip(Message::RegisterUser { role: Role::RiderTrs });
        round_trip(Message::SubmitOffer(OfferPayload::Nrs(NrsOffer {
            offer_id: 0,
            pickup: col.clone(),
            dropoff: col.clone(),
            route: col.clone(),
            destination: Some(col.clone()),
            time: col,
            capacity: 2,
            cases: vec![RideCase::MpMd, RideCase::MpEd],
            contact_blob: b"call me".to_vec(),
        })));
        round_trip(Message::SubmitRequest(RequestPayload::Nrs(NrsRequest {
            request_id: 0,
            pickup: row.clone(),
            dropoff: row.clone(),
            route: row.clone(),
            time: row,
            contact_blob: vec![],
        })));
        let tcol = idx(Scheme::Trs, Orientation::Column);
        let trow = idx(Scheme::Trs, Orientation::Row);
        round_trip(Message::SubmitOffer(OfferPayload::Trs(TrsOffer {
            offer_id: 0,
            cells: vec![TrsCellIndex { plus: tcol.clone(), minus: trow.clone() }; 2],
            capacity: 1,
            contact_blob: vec![7],
        })));
        round_trip(Message::SubmitRequest(RequestPayload::Trs(TrsRequest {
            request_id: 0,
            pickup: trow.clone(),
            dropoff: trow,
            preference: Preference::MaxCellsTransfers(9, 1),
            contact_blob: vec![],
        })));
        round_trip(Message::MatchNotification(vec![
            MatchResult {
                scheme: Scheme::Nrs,
                request_id: 4,
                offer_ids: vec![2],
                detail: MatchDetail::Nrs(RideCase::MpRd),
                request_contact: vec![1],
                offer_contacts: vec![vec![2]],
            },
            MatchResult {
                scheme: Scheme::Trs,
                request_id: 5,
                offer_ids: vec![1, 3],
                detail: MatchDetail::Trs { cell_count: 6, transfer_count: 1, transfer_cells: vec![tcol] },
                request_contact: vec![],
                offer_contacts: vec![vec![], vec![3]],
            },
        ]));
        round_trip(Message::EpochAnnounce { epoch: 9, salt: 10 });
        round_trip(Message::Error("nope".into()));
        round_trip(Message::Ack { id: 12 });
        round_trip(Message::RunMatching { scheme: Scheme::Trs });
        round_trip(Message::PollNotifications { id: 1 });
        round_trip(Message::RotateEpoch);
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(Message::decode_payload(42, &[]).is_err());
        assert!(Message::decode_payload(8, &[1, 2, 3]).is_err());
        assert!(Message::decode_payload(11, &[0]).is_err());
    }
}
