//! Trip encoding for the non-transferable scheme: Bloom filters over cell
//! identifiers in which every cell sets exactly `alpha` distinct bits, and
//! one-hot time-slot vectors.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;
use xxhash_rust::xxh3::{xxh3_128_with_seed, xxh3_64_with_seed};

pub const SECONDS_PER_DAY: u32 = 86_400;

/// Time slots per day in NRS time vectors.
pub const NRS_TIME_SLOTS: usize = 48;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BloomError {
    #[error("{alpha} distinct positions cannot fit in {m} bits")]
    TooManyHashes { alpha: usize, m: usize },
    #[error("cell epoch {cell} does not match filter epoch {filter}")]
    EpochMismatch { cell: u64, filter: u64 },
    #[error("filter parameters differ")]
    ParamMismatch,
    #[error("time {0} s is outside a day")]
    TimeOutOfRange(u32),
    #[error("invalid sizing request: {0}")]
    InvalidSizing(String),
    #[error("malformed filter bytes")]
    Format,
}

/// A cell's identifier within one identifier-rotation epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub id: u32,
    pub epoch: u64,
}

/// Keyed permutation from physical cell numbers to the identifiers used in
/// one epoch, so the same place looks unrelated across epochs.
#[derive(Clone, Debug)]
pub struct EpochIdMap {
    epoch: u64,
    ids: Vec<u32>,
}

impl EpochIdMap {
    /// Permutes `[0, 2^k)`; physical cells must be below `2^k`.
    pub fn new(k: usize, epoch: u64, salt: u64) -> Self {
        let seed = xxh3_64_with_seed(&epoch.to_le_bytes(), salt);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut ids: Vec<u32> = (0..(1u32 << k)).collect();
        ids.shuffle(&mut rng);
        Self { epoch, ids }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn cell(&self, physical: u32) -> CellId {
        CellId { id: self.ids[physical as usize], epoch: self.epoch }
    }

    pub fn cells<'a>(&'a self, physical: impl IntoIterator<Item = &'a u32> + 'a) -> Vec<CellId> {
        physical.into_iter().map(|&c| self.cell(c)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BloomParams {
    pub m: usize,
    pub alpha: usize,
}

impl BloomParams {
    /// The fixed 2048-bit configuration, with the hash count that minimizes
    /// the false positive rate for 60 cells.
    pub fn wide() -> Self {
        Self { m: 2048, alpha: optimal_alpha(2048, 60) }
    }
}

fn optimal_alpha(m: usize, items: usize) -> usize {
    ((m as f64 / items as f64) * std::f64::consts::LN_2).ceil().max(1.0) as usize
}

/// Standard Bloom sizing with `m` rounded up to whole 64-bit words.
pub fn sizing(max_items: usize, target_fpp: f64) -> Result<BloomParams, BloomError> {
    if max_items == 0 {
        return Err(BloomError::InvalidSizing("max_items must be positive".into()));
    }
    if !(target_fpp > 0.0 && target_fpp < 1.0) {
        return Err(BloomError::InvalidSizing(format!("fpp {target_fpp} not in (0, 1)")));
    }
    let ln2 = std::f64::consts::LN_2;
    let raw = (-(max_items as f64) * target_fpp.ln() / (ln2 * ln2)).ceil() as usize;
    let m = raw.max(1).div_ceil(64) * 64;
    Ok(BloomParams { m, alpha: optimal_alpha(m, max_items) })
}

/// Analytic false positive probability after inserting `items` cells.
pub fn analytic_fpp(params: BloomParams, items: usize) -> f64 {
    let a = params.alpha as f64;
    (1.0 - (-a * items as f64 / params.m as f64).exp()).powf(a)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BloomFilter {
    params: BloomParams,
    epoch: u64,
    salt: u64,
    words: Vec<u64>,
}

impl BloomFilter {
    pub fn new(params: BloomParams, epoch: u64, salt: u64) -> Result<Self, BloomError> {
        if params.alpha == 0 || params.alpha > params.m {
            return Err(BloomError::TooManyHashes { alpha: params.alpha, m: params.m });
        }
        Ok(Self { params, epoch, salt, words: vec![0; params.m.div_ceil(64)] })
    }

    pub fn with_cells<'a>(
        params: BloomParams,
        epoch: u64,
        salt: u64,
        cells: impl IntoIterator<Item = &'a CellId>,
    ) -> Result<Self, BloomError> {
        let mut f = Self::new(params, epoch, salt)?;
        for c in cells {
            f.insert(c)?;
        }
        Ok(f)
    }

    pub fn params(&self) -> BloomParams {
        self.params
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn salt(&self) -> u64 {
        self.salt
    }

    /// The `alpha` pairwise-distinct bit positions of `cell`. A hash that
    /// lands on an already chosen position is retried with the smallest
    /// counter that yields a fresh one.
    pub fn positions(&self, cell: &CellId) -> Result<Vec<usize>, BloomError> {
        if cell.epoch != self.epoch {
            return Err(BloomError::EpochMismatch { cell: cell.epoch, filter: self.epoch });
        }
        let BloomParams { m, alpha } = self.params;
        let mut chosen = Vec::with_capacity(alpha);
        for i in 0..alpha as u32 {
            let mut counter = 0u32;
            let pos = loop {
                let p = self.hash(cell, i, counter);
                if !chosen.contains(&p) {
                    break p;
                }
                counter += 1;
            };
            chosen.push(pos);
        }
        debug_assert!(chosen.iter().all(|&p| p < m));
        Ok(chosen)
    }

    fn hash(&self, cell: &CellId, i: u32, counter: u32) -> usize {
        let mut pre = [0u8; 20];
        pre[..4].copy_from_slice(&cell.id.to_le_bytes());
        pre[4..8].copy_from_slice(&i.to_le_bytes());
        pre[8..12].copy_from_slice(&counter.to_le_bytes());
        pre[12..].copy_from_slice(&self.epoch.to_le_bytes());
        (xxh3_128_with_seed(&pre, self.salt) % self.params.m as u128) as usize
    }

    pub fn insert(&mut self, cell: &CellId) -> Result<(), BloomError> {
        for p in self.positions(cell)? {
            self.words[p / 64] |= 1 << (p % 64);
        }
        Ok(())
    }

    pub fn get(&self, pos: usize) -> bool {
        self.words[pos / 64] >> (pos % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Plaintext inner product of two filters with equal parameters.
    pub fn dot(&self, other: &BloomFilter) -> Result<usize, BloomError> {
        self.check_compatible(other)?;
        Ok(self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum())
    }

    fn check_compatible(&self, other: &BloomFilter) -> Result<(), BloomError> {
        if self.params != other.params || self.epoch != other.epoch || self.salt != other.salt {
            return Err(BloomError::ParamMismatch);
        }
        Ok(())
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.params.m).map(|p| self.get(p)).collect()
    }

    /// `m u32 | alpha u32 | epoch u64 | salt u64 | words`, little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.words.len() * 8);
        out.extend_from_slice(&(self.params.m as u32).to_le_bytes());
        out.extend_from_slice(&(self.params.alpha as u32).to_le_bytes());
        out.extend_from_slice(&self.epoch.to_le_bytes());
        out.extend_from_slice(&self.salt.to_le_bytes());
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BloomError> {
        if bytes.len() < 24 {
            return Err(BloomError::Format);
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let params = BloomParams { m: u32_at(0), alpha: u32_at(4) };
        let mut f = Self::new(params, u64_at(8), u64_at(16))?;
        if bytes.len() != 24 + f.words.len() * 8 {
            return Err(BloomError::Format);
        }
        for (i, w) in f.words.iter_mut().enumerate() {
            *w = u64_at(24 + 8 * i);
        }
        Ok(f)
    }
}

/// Dot product between the one-cell filter of `query` and `filter`:
/// `alpha` on membership (or a false positive), less otherwise.
pub fn membership_dot(query: &CellId, filter: &BloomFilter) -> Result<usize, BloomError> {
    Ok(filter.positions(query)?.into_iter().filter(|&p| filter.get(p)).count())
}

/// One-hot encoding of a time of day.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimeSlotVector {
    pub slots: usize,
    pub index: usize,
}

impl TimeSlotVector {
    /// The one-hot vector, zero-padded to `len` (which must be at least `slots`).
    pub fn bits(&self, len: usize) -> Vec<bool> {
        assert!(len >= self.slots, "time vector longer than target length");
        let mut v = vec![false; len];
        v[self.index] = true;
        v
    }

    pub fn dot(&self, other: &TimeSlotVector) -> usize {
        usize::from(self.slots == other.slots && self.index == other.index)
    }
}

/// Slot index of `t` seconds after midnight in a day divided into `slots`.
pub fn slot_of(t: u32, slots: usize) -> Result<usize, BloomError> {
    if t >= SECONDS_PER_DAY {
        return Err(BloomError::TimeOutOfRange(t));
    }
    Ok((t as u64 * slots as u64 / SECONDS_PER_DAY as u64) as usize)
}

pub fn encode_time_slot(t: u32, slots: usize) -> Result<TimeSlotVector, BloomError> {
    Ok(TimeSlotVector { slots, index: slot_of(t, slots)? })
}
