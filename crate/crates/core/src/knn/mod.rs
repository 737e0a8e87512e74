//! Modified kNN secure inner-product scheme.
//!
//! A trusted authority draws two master key sets (one per matching scheme),
//! a splitting vector for each, and four masking matrices for the trip
//! organizer. Every user receives key sets whose eight parts are randomized
//! products of the master matrices; two users' ciphertexts can only be
//! compared after the organizer strips its masks, and the comparison yields
//! exactly the plaintext inner product.

mod index;
mod keyfile;
mod keys;
pub(crate) mod matrix;

pub use matrix::{identity_error, max_abs_diff, Matrix};

pub use index::{
    encrypt_index, match_similarity, split_vector, unmask, EncryptedIndex, Orientation, Party,
};
pub use keyfile::{read_key_set, write_key_set, KEY_FILE_MAGIC};
pub use keys::{
    derive_user_keys, generate_master_keys, KeyDeriver, MasterKey, SplitVector, TosSecrets,
    UserKeySet,
};

use thiserror::Error;

/// Number of ciphertext parts in every index and key set.
pub const PARTS: usize = 8;

#[derive(Debug, Error)]
pub enum KnnError {
    #[error("invalid scheme parameters: {0}")]
    InvalidParams(String),
    #[error("no well-conditioned matrix after {attempts} draws")]
    Singular { attempts: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("role {role:?} cannot be derived from a {scheme:?} master key")]
    RoleMismatch { role: Role, scheme: Scheme },
    #[error("index orientation mismatch")]
    OrientationMismatch,
    #[error("indices belong to different schemes")]
    SchemeMismatch,
    #[error("index already unmasked")]
    AlreadyUnmasked,
    #[error("index must be unmasked before matching")]
    NotUnmasked,
    #[error("malformed key file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which of the two ride organization schemes a key or index belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Non-transferable: one driver end to end, Bloom-filter vectors of length `m`.
    Nrs,
    /// Transferable: per-cell vectors of length `n = 2k + ell`.
    Trs,
}

impl Scheme {
    pub fn code(self) -> u8 {
        match self {
            Scheme::Nrs => 0,
            Scheme::Trs => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Scheme::Nrs),
            1 => Some(Scheme::Trs),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    DriverNrs,
    RiderNrs,
    DriverTrs,
    RiderTrs,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::DriverNrs, Role::RiderNrs, Role::DriverTrs, Role::RiderTrs];

    pub fn scheme(self) -> Scheme {
        match self {
            Role::DriverNrs | Role::RiderNrs => Scheme::Nrs,
            Role::DriverTrs | Role::RiderTrs => Scheme::Trs,
        }
    }

    /// Driver roles produce column-form indices, rider roles row-form.
    pub fn orientation(self) -> Orientation {
        match self {
            Role::DriverNrs | Role::DriverTrs => Orientation::Column,
            Role::RiderNrs | Role::RiderTrs => Orientation::Row,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Role::DriverNrs => 0,
            Role::RiderNrs => 1,
            Role::DriverTrs => 2,
            Role::RiderTrs => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Role::ALL.into_iter().find(|r| r.code() == code)
    }
}

/// Element domain for key matrices and split randomness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericField {
    /// Matrix entries and split halves are drawn uniformly from `[-bound, bound]`.
    pub entry_bound: f64,
    /// Draws whose spectral condition estimate exceeds this are rejected.
    pub max_condition: f64,
}

impl Default for NumericField {
    fn default() -> Self {
        Self { entry_bound: 1.0, max_condition: 1e6 }
    }
}

/// Absolute tolerance between an encrypted similarity and the plaintext dot product.
pub const SIMILARITY_TOLERANCE: f64 = 1e-3;

/// Similarities are integers in plaintext, so threshold tests accept half a unit.
pub const THRESHOLD_MARGIN: f64 = 0.5;

pub fn meets_threshold(similarity: f64, target: usize) -> bool {
    (similarity - target as f64).abs() < THRESHOLD_MARGIN
}

/// Vector sizes for both schemes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeParams {
    /// Bloom filter length for NRS vectors.
    pub m: usize,
    /// Bits per cell identifier.
    pub k: usize,
    /// Time intervals per day in a TRS cell vector.
    pub ell: usize,
    pub numeric: NumericField,
}

impl SchemeParams {
    pub fn new(m: usize, k: usize, ell: usize) -> Result<Self, KnnError> {
        let params = Self { m, k, ell, numeric: NumericField::default() };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), KnnError> {
        if self.m == 0 {
            return Err(KnnError::InvalidParams("m must be at least 1".into()));
        }
        if self.k == 0 || self.k > 32 {
            return Err(KnnError::InvalidParams(format!("k = {} out of 1..=32", self.k)));
        }
        if self.ell == 0 {
            return Err(KnnError::InvalidParams("ell must be at least 1".into()));
        }
        if !(self.numeric.entry_bound > 0.0 && self.numeric.max_condition >= 1.0) {
            return Err(KnnError::InvalidParams("numeric field out of range".into()));
        }
        Ok(())
    }

    /// TRS cell vector length.
    pub fn n(&self) -> usize {
        2 * self.k + self.ell
    }

    pub fn dim(&self, scheme: Scheme) -> usize {
        match scheme {
            Scheme::Nrs => self.m,
            Scheme::Trs => self.n(),
        }
    }
}

/// Smallest `k` with `2^k >= cells`.
pub fn bits_for_cells(cells: usize) -> usize {
    let mut k = 1;
    while (1usize << k) < cells {
        k += 1;
    }
    k
}
