use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::knn::{generate_master_keys, KeyDeriver, Role, SchemeParams, TosSecrets, UserKeySet};

use super::messages::{KeyBundle, PublicParams};
use super::wire::Token;
use super::TosError;

/// Holds the master keys, issues per-user key sets and decides the epoch
/// salt. Runs offline from the organizer's point of view.
pub struct TrustedAuthority {
    scheme: SchemeParams,
    alpha: usize,
    max_items: usize,
    epoch: u64,
    salt: u64,
    nrs: KeyDeriver,
    trs: KeyDeriver,
    tos: TosSecrets,
    rng: ChaCha20Rng,
}

impl TrustedAuthority {
    pub fn new(scheme: SchemeParams, alpha: usize, max_items: usize, seed: u64) -> Result<Self, TosError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (nrs, trs, tos) = Self::masters(&scheme, &mut rng)?;
        let salt = rng.next_u64();
        Ok(Self { scheme, alpha, max_items, epoch: 0, salt, nrs, trs, tos, rng })
    }

    fn masters(
        scheme: &SchemeParams,
        rng: &mut ChaCha20Rng,
    ) -> Result<(KeyDeriver, KeyDeriver, TosSecrets), TosError> {
        let (nrs, trs, tos) = generate_master_keys(scheme, rng.next_u64())?;
        let nrs = KeyDeriver::new(&nrs, &tos, scheme.numeric)?;
        let trs = KeyDeriver::new(&trs, &tos, scheme.numeric)?;
        Ok((nrs, trs, tos))
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn salt(&self) -> u64 {
        self.salt
    }

    /// The organizer's masking secrets for the current keys.
    pub fn tos_secrets(&self) -> &TosSecrets {
        &self.tos
    }

    pub fn public_params(&self) -> PublicParams {
        PublicParams {
            epoch: self.epoch,
            salt: self.salt,
            m: self.scheme.m,
            alpha: self.alpha,
            max_items: self.max_items,
            k: self.scheme.k,
            ell: self.scheme.ell,
        }
    }

    /// Key sets for a role. TRS drivers also get a rider-form key set to
    /// encrypt the second index of every route cell.
    pub fn derive(&mut self, role: Role) -> Result<Vec<UserKeySet>, TosError> {
        let mut keys = Vec::with_capacity(2);
        match role {
            Role::DriverNrs | Role::RiderNrs => keys.push(self.nrs.derive(role, &mut self.rng)?),
            Role::RiderTrs => keys.push(self.trs.derive(role, &mut self.rng)?),
            Role::DriverTrs => {
                keys.push(self.trs.derive(Role::DriverTrs, &mut self.rng)?);
                keys.push(self.trs.derive(Role::RiderTrs, &mut self.rng)?);
            }
        }
        Ok(keys)
    }

    pub fn register(&mut self, role: Role, tokens: Vec<Token>) -> Result<KeyBundle, TosError> {
        Ok(KeyBundle { params: self.public_params(), keys: self.derive(role)?, tokens })
    }

    pub fn fresh_token(&mut self) -> Token {
        let mut t: Token = self.rng.random();
        // The all-zero token marks unauthenticated frames.
        if t == [0; 32] {
            t[0] = 1;
        }
        t
    }

    /// Moves to the next epoch with a new salt, optionally redrawing all keys.
    pub fn rotate(&mut self, regenerate_keys: bool) -> Result<(u64, u64), TosError> {
        if regenerate_keys {
            let (nrs, trs, tos) = Self::masters(&self.scheme, &mut self.rng)?;
            self.nrs = nrs;
            self.trs = trs;
            self.tos = tos;
        }
        self.epoch += 1;
        self.salt = self.rng.next_u64();
        Ok((self.epoch, self.salt))
    }
}
