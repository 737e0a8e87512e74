//! The trip-organizing service: key registration, trip ingestion, matching
//! rounds for both schemes, epoch rotation, and the binary wire protocol.

mod authority;
mod client;
mod config;
mod messages;
mod organizer;
mod server;
mod transport;
pub mod wire;

pub use authority::TrustedAuthority;
pub use client::{call, Client, Traffic};
pub use config::ServerConfig;
pub use messages::{
    Envelope, KeyBundle, MatchDetail, MatchResult, Message, OfferPayload, PublicParams, RequestPayload,
};
pub use organizer::{OrganizerParams, TripOrganizer};
pub use server::Server;
pub use transport::{serve, Loopback, TcpTransport, Transport};
pub use wire::{Frame, Token};

use thiserror::Error;

use crate::bloom::BloomError;
use crate::knn::KnnError;
use crate::nrs::NrsError;
use crate::trs::TrsError;

#[derive(Debug, Error)]
pub enum TosError {
    #[error("wire format: {0}")]
    Wire(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("stale epoch {got}, current is {current}")]
    StaleEpoch { got: u64, current: u64 },
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("config: {0}")]
    Config(String),
    #[error("server error: {0}")]
    Server(String),
    #[error(transparent)]
    Knn(#[from] KnnError),
    #[error(transparent)]
    Bloom(#[from] BloomError),
    #[error(transparent)]
    Nrs(#[from] NrsError),
    #[error(transparent)]
    Trs(#[from] TrsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
