use rand::Rng;

use super::keys::{SplitVector, TosSecrets, UserKeySet};
use super::matrix::{mat_t_vec, mat_vec};
use super::{KnnError, NumericField, Scheme, PARTS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Driver-side: key parts multiply column vectors.
    Column,
    /// Rider-side: row vectors multiply key parts.
    Row,
}

impl Orientation {
    pub fn code(self) -> u8 {
        match self {
            Orientation::Column => 0,
            Orientation::Row => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Orientation::Column),
            1 => Some(Orientation::Row),
            _ => None,
        }
    }
}

/// Which side of the splitting convention a vector is split under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    /// Splits where the splitting bit is one, copies where it is zero.
    Driver,
    /// The opposite convention.
    Rider,
}

/// Splits a binary vector into two real halves. Copied positions duplicate
/// the entry; split positions hold a uniform random value and its exact
/// complement.
pub fn split_vector<R: Rng + ?Sized>(
    v: &[bool],
    split: &SplitVector,
    party: Party,
    bound: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>), KnnError> {
    if v.len() != split.len() {
        return Err(KnnError::DimensionMismatch { expected: split.len(), actual: v.len() });
    }
    let split_on = party == Party::Driver;
    let mut first = Vec::with_capacity(v.len());
    let mut second = Vec::with_capacity(v.len());
    for (&bit, &s) in v.iter().zip(split.bits()) {
        let x = if bit { 1.0 } else { 0.0 };
        if s == split_on {
            let r = rng.random_range(-bound..=bound);
            first.push(r);
            second.push(x - r);
        } else {
            first.push(x);
            second.push(x);
        }
    }
    Ok((first, second))
}

/// An eight-part ciphertext of one binary vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EncryptedIndex {
    scheme: Scheme,
    orientation: Orientation,
    dim: usize,
    /// `PARTS` consecutive blocks of `dim` values.
    parts: Vec<f64>,
    unmasked: bool,
}

impl EncryptedIndex {
    pub fn from_raw(
        scheme: Scheme,
        orientation: Orientation,
        dim: usize,
        parts: Vec<f64>,
        unmasked: bool,
    ) -> Result<Self, KnnError> {
        if parts.len() != PARTS * dim {
            return Err(KnnError::DimensionMismatch { expected: PARTS * dim, actual: parts.len() });
        }
        Ok(Self { scheme, orientation, dim, parts, unmasked })
    }

    /// Encrypts `v` under `keys`. Parts 1-4 use the first split half, parts
    /// 5-8 the second.
    pub fn encrypt<R: Rng + ?Sized>(
        v: &[bool],
        keys: &UserKeySet,
        bound: f64,
        rng: &mut R,
    ) -> Result<Self, KnnError> {
        let dim = keys.dim();
        if v.len() != dim {
            return Err(KnnError::DimensionMismatch { expected: dim, actual: v.len() });
        }
        let role = keys.role();
        let orientation = role.orientation();
        let party = match orientation {
            Orientation::Column => Party::Driver,
            Orientation::Row => Party::Rider,
        };
        let (first, second) = split_vector(v, keys.split(), party, bound, rng)?;
        let mut parts = Vec::with_capacity(PARTS * dim);
        for (i, key) in keys.parts().iter().enumerate() {
            let half = if i < PARTS / 2 { &first } else { &second };
            let block = match orientation {
                Orientation::Column => mat_vec(key, half),
                Orientation::Row => mat_t_vec(key, half),
            };
            parts.extend(block);
        }
        Ok(Self { scheme: role.scheme(), orientation, dim, parts, unmasked: false })
    }

    /// Strips the organizer mask: column parts are left-multiplied by the
    /// driver mask, row parts right-multiplied by the inverse rider mask.
    pub fn unmask(mut self, tos: &TosSecrets) -> Result<Self, KnnError> {
        if self.unmasked {
            return Err(KnnError::AlreadyUnmasked);
        }
        if tos.dim(self.scheme) != self.dim {
            return Err(KnnError::DimensionMismatch {
                expected: tos.dim(self.scheme),
                actual: self.dim,
            });
        }
        let dim = self.dim;
        for block in self.parts.chunks_mut(dim) {
            let out = match self.orientation {
                Orientation::Column => mat_vec(tos.driver_mask(self.scheme), block),
                Orientation::Row => mat_t_vec(tos.rider_mask_inverse(self.scheme), block),
            };
            block.copy_from_slice(&out);
        }
        self.unmasked = true;
        Ok(self)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_unmasked(&self) -> bool {
        self.unmasked
    }

    pub fn parts(&self) -> &[f64] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &[f64] {
        &self.parts[i * self.dim..(i + 1) * self.dim]
    }

    /// Sum of the eight part-wise inner products, with no masking checks.
    /// Only meaningful after both sides are unmasked; exposed for analysis.
    pub fn raw_dot(&self, other: &EncryptedIndex) -> f64 {
        self.parts.iter().zip(&other.parts).map(|(a, b)| a * b).sum()
    }

    /// Serialized size in bytes of the numeric payload.
    pub fn payload_bytes(&self) -> usize {
        self.parts.len() * std::mem::size_of::<f64>()
    }
}

/// Similarity between an unmasked rider-form and an unmasked driver-form
/// index; equals the plaintext inner product up to rounding.
pub fn match_similarity(rider: &EncryptedIndex, driver: &EncryptedIndex) -> Result<f64, KnnError> {
    if rider.orientation != Orientation::Row || driver.orientation != Orientation::Column {
        return Err(KnnError::OrientationMismatch);
    }
    if rider.scheme != driver.scheme {
        return Err(KnnError::SchemeMismatch);
    }
    if rider.dim != driver.dim {
        return Err(KnnError::DimensionMismatch { expected: driver.dim, actual: rider.dim });
    }
    if !(rider.unmasked && driver.unmasked) {
        return Err(KnnError::NotUnmasked);
    }
    Ok(rider.raw_dot(driver))
}

/// Encrypts with the default numeric field.
pub fn encrypt_index<R: Rng + ?Sized>(
    v: &[bool],
    keys: &UserKeySet,
    rng: &mut R,
) -> Result<EncryptedIndex, KnnError> {
    EncryptedIndex::encrypt(v, keys, NumericField::default().entry_bound, rng)
}

pub fn unmask(index: EncryptedIndex, tos: &TosSecrets) -> Result<EncryptedIndex, KnnError> {
    index.unmask(tos)
}
