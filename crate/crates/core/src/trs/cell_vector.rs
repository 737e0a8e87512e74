use crate::bloom::{slot_of, CellId};

use super::TrsError;

/// Binary encoding of one (cell, time interval): the id bits, their
/// complement, and a one-hot interval. Two encodings share `k + 1` ones
/// exactly when both the cell and the interval agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellVector {
    pub k: usize,
    pub ell: usize,
    pub id: u32,
    pub interval: usize,
}

impl CellVector {
    pub fn len(&self) -> usize {
        2 * self.k + self.ell
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Id bits are written most significant first.
    pub fn bits(&self) -> Vec<bool> {
        let mut v = Vec::with_capacity(self.len());
        v.extend((0..self.k).rev().map(|b| self.id >> b & 1 == 1));
        v.extend((0..self.k).rev().map(|b| self.id >> b & 1 == 0));
        v.extend((0..self.ell).map(|i| i == self.interval));
        v
    }

    pub fn dot(&self, other: &CellVector) -> usize {
        self.bits().iter().zip(other.bits()).filter(|(a, b)| **a && *b).count()
    }
}

pub fn encode_cell(cell: CellId, interval: usize, k: usize, ell: usize) -> Result<CellVector, TrsError> {
    if k < 32 && cell.id >= 1 << k {
        return Err(TrsError::IdOverflow { id: cell.id, k });
    }
    if interval >= ell {
        return Err(TrsError::IntervalOutOfRange { interval, ell });
    }
    Ok(CellVector { k, ell, id: cell.id, interval })
}

/// Interval index of `t` seconds after midnight in a day split into `ell` intervals.
pub fn interval_of(t: u32, ell: usize) -> Result<usize, TrsError> {
    Ok(slot_of(t, ell)?)
}
