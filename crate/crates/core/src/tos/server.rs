use std::time::{Duration, Instant};

use crate::knn::Scheme;
use crate::par::Execution;
use crate::trs::TrsEncoding;

use super::authority::TrustedAuthority;
use super::config::ServerConfig;
use super::messages::{Envelope, Message};
use super::organizer::{OrganizerParams, TripOrganizer};
use super::TosError;

/// One process hosting both endpoints: the authority answers registrations
/// and the organizer everything else. The organizer is only handed the
/// masking secrets and token values.
pub struct Server {
    config: ServerConfig,
    authority: TrustedAuthority,
    organizer: TripOrganizer,
    epoch_started: Instant,
}

impl Server {
    pub fn new(config: ServerConfig, exec: Execution) -> Result<Self, TosError> {
        config.validate()?;
        let scheme = config.scheme_params()?;
        let bloom = config.bloom()?;
        let authority = TrustedAuthority::new(scheme, bloom.alpha, config.max_items, config.seed)?;
        let params = OrganizerParams {
            m: bloom.m,
            alpha: bloom.alpha,
            trs: TrsEncoding { k: config.k, ell: config.ell },
            p_max: config.p_max,
        };
        let organizer =
            TripOrganizer::new(params, authority.epoch(), authority.tos_secrets().clone(), exec);
        Ok(Self { config, authority, organizer, epoch_started: Instant::now() })
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn epoch(&self) -> u64 {
        self.organizer.epoch()
    }

    pub fn organizer(&self) -> &TripOrganizer {
        &self.organizer
    }

    /// Decodes a frame and always answers with a frame; failures become `Error`.
    pub fn handle_bytes(&mut self, frame: &[u8]) -> Vec<u8> {
        let reply = match Envelope::decode(frame) {
            Ok(env) => self.handle(env),
            Err(e) => Message::Error(e.to_string()),
        };
        let env = Envelope::new(self.epoch(), None, reply);
        env.encode().unwrap_or_else(|e| {
            Envelope::new(self.epoch(), None, Message::Error(e.to_string()))
                .encode()
                .expect("error frames always encode")
        })
    }

    pub fn handle(&mut self, env: Envelope) -> Message {
        self.dispatch(env).unwrap_or_else(|e| Message::Error(e.to_string()))
    }

    fn dispatch(&mut self, env: Envelope) -> Result<Message, TosError> {
        if env.epoch != self.epoch() {
            return Err(TosError::StaleEpoch { got: env.epoch, current: self.epoch() });
        }
        if env.message.needs_token() {
            self.organizer.authenticate(env.token.as_ref())?;
        }
        match env.message {
            Message::RegisterUser { role } => {
                let tokens: Vec<_> =
                    (0..self.config.tokens_per_bundle).map(|_| self.authority.fresh_token()).collect();
                let bundle = self.authority.register(role, tokens.clone())?;
                self.organizer.admit_tokens(tokens);
                Ok(Message::KeyBundle(bundle))
            }
            Message::SubmitOffer(o) => Ok(Message::Ack { id: self.organizer.submit_offer(o)? }),
            Message::SubmitRequest(r) => Ok(Message::Ack { id: self.organizer.submit_request(r)? }),
            Message::RunMatching { scheme } => {
                Ok(Message::MatchNotification(self.organizer.run_matching(scheme)?))
            }
            Message::PollNotifications { id } => Ok(Message::MatchNotification(self.organizer.poll(id))),
            Message::RotateEpoch => self.rotate_epoch(),
            other => Err(TosError::Rejected(format!("message type {} is server-bound only", other.code()))),
        }
    }

    pub fn rotate_epoch(&mut self) -> Result<Message, TosError> {
        let (epoch, salt) = self.authority.rotate(self.config.regenerate_keys_on_rotate)?;
        self.organizer.rotate(epoch, self.authority.tos_secrets().clone());
        self.epoch_started = Instant::now();
        Ok(Message::EpochAnnounce { epoch, salt })
    }

    /// Rotates if the configured epoch period has elapsed.
    pub fn rotate_if_due(&mut self) -> Result<Option<Message>, TosError> {
        let period = self.config.epoch_period;
        if period > 0 && self.epoch_started.elapsed() >= Duration::from_secs(period) {
            return self.rotate_epoch().map(Some);
        }
        Ok(None)
    }

    pub fn pending(&self, scheme: Scheme) -> (usize, usize) {
        self.organizer.pending(scheme)
    }
}
