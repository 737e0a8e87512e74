//! Binary key-set files.
//!
//! ```text
//! magic "KNN1" | role u8 | dim u32 | part count u8 (= 8) | fingerprint u64
//! split vector: dim bytes (0/1)
//! 8 parts, each dim*dim f64, row-major
//! ```
//!
//! All integers and floats are little-endian. The fingerprint is the xxh3-64
//! of everything after it.

use std::io::{Read, Write};

use faer::Mat;
use xxhash_rust::xxh3::xxh3_64;

use super::keys::{SplitVector, UserKeySet};
use super::{KnnError, Role, PARTS};

pub const KEY_FILE_MAGIC: &[u8; 4] = b"KNN1";

pub fn write_key_set<W: Write>(mut w: W, keys: &UserKeySet) -> Result<(), KnnError> {
    let dim = keys.dim();
    let mut body = Vec::with_capacity(dim + PARTS * dim * dim * 8);
    body.extend(keys.split().bits().iter().map(|&b| b as u8));
    for part in keys.parts() {
        for i in 0..dim {
            for j in 0..dim {
                body.extend_from_slice(&part[(i, j)].to_le_bytes());
            }
        }
    }
    w.write_all(KEY_FILE_MAGIC)?;
    w.write_all(&[keys.role().code()])?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    w.write_all(&[PARTS as u8])?;
    w.write_all(&xxh3_64(&body).to_le_bytes())?;
    w.write_all(&body)?;
    Ok(())
}

pub fn read_key_set<R: Read>(mut r: R) -> Result<UserKeySet, KnnError> {
    let mut header = [0u8; 18];
    r.read_exact(&mut header)?;
    if &header[..4] != KEY_FILE_MAGIC {
        return Err(KnnError::Format("bad magic".into()));
    }
    let role = Role::from_code(header[4])
        .ok_or_else(|| KnnError::Format(format!("unknown role byte {}", header[4])))?;
    let dim = u32::from_le_bytes(header[5..9].try_into().unwrap()) as usize;
    if header[9] as usize != PARTS {
        return Err(KnnError::Format(format!("part count {} != {PARTS}", header[9])));
    }
    let fingerprint = u64::from_le_bytes(header[10..18].try_into().unwrap());
    let mut body = vec![0u8; dim + PARTS * dim * dim * 8];
    r.read_exact(&mut body)?;
    if xxh3_64(&body) != fingerprint {
        return Err(KnnError::Format("fingerprint mismatch".into()));
    }
    let (split_bytes, floats) = body.split_at(dim);
    let split = split_bytes
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(KnnError::Format(format!("split byte {b}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut values = floats.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let parts = (0..PARTS)
        .map(|_| {
            let mut m = Mat::<f64>::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] = values.next().unwrap();
                }
            }
            m
        })
        .collect();
    UserKeySet::from_parts(role, parts, SplitVector::new(split))
}
