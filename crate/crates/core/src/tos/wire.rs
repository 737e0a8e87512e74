//! Frame layout and primitive payload codecs.
//!
//! ```text
//! u32 length of the rest | u8 msg_type | u64 epoch | 32-byte token | payload
//! ```

use crate::knn::{EncryptedIndex, Orientation, Scheme, PARTS};

use super::TosError;

pub const TOKEN_LEN: usize = 32;
pub const HEADER_LEN: usize = 1 + 8 + TOKEN_LEN;
/// Upper bound on a frame body, to refuse absurd length prefixes.
pub const MAX_FRAME: usize = 1 << 30;

pub type Token = [u8; TOKEN_LEN];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: u8,
    pub epoch: u64,
    pub token: Token,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn encode(&self) -> Vec<u8> {
        let len = HEADER_LEN + self.payload.len();
        let mut out = Vec::with_capacity(4 + len);
        out.extend_from_slice(&(len as u32).to_le_bytes());
        out.push(self.msg_type);
        out.extend_from_slice(&self.epoch.to_le_bytes());
        out.extend_from_slice(&self.token);
        out.extend_from_slice(&self.payload);
        out
    }

    /// Decodes one complete frame, length prefix included.
    pub fn decode(bytes: &[u8]) -> Result<Self, TosError> {
        if bytes.len() < 4 {
            return Err(TosError::Wire("short frame".into()));
        }
        let len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        if len != bytes.len() - 4 {
            return Err(TosError::Wire(format!("length {len} != {}", bytes.len() - 4)));
        }
        Self::decode_body(&bytes[4..])
    }

    pub fn decode_body(body: &[u8]) -> Result<Self, TosError> {
        if body.len() < HEADER_LEN {
            return Err(TosError::Wire("frame shorter than header".into()));
        }
        Ok(Self {
            msg_type: body[0],
            epoch: u64::from_le_bytes(body[1..9].try_into().unwrap()),
            token: body[9..HEADER_LEN].try_into().unwrap(),
            payload: body[HEADER_LEN..].to_vec(),
        })
    }

    pub fn has_token(&self) -> bool {
        self.token != [0; TOKEN_LEN]
    }
}

/// Reads one length-prefixed frame from a byte stream.
pub fn read_frame<R: std::io::Read>(r: &mut R) -> Result<Vec<u8>, TosError> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let n = u32::from_le_bytes(len) as usize;
    if !(HEADER_LEN..=MAX_FRAME).contains(&n) {
        return Err(TosError::Wire(format!("frame length {n}")));
    }
    let mut out = vec![0u8; 4 + n];
    out[..4].copy_from_slice(&len);
    r.read_exact(&mut out[4..])?;
    Ok(out)
}

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.u32(v.len() as u32);
        self.buf.extend_from_slice(v);
        self
    }

    pub fn str(&mut self, v: &str) -> &mut Self {
        self.bytes(v.as_bytes())
    }

    pub fn raw(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    /// `u8 scheme | u8 orientation | u8 unmasked | u32 dim | 8*dim f64`
    pub fn index(&mut self, idx: &EncryptedIndex) -> &mut Self {
        self.u8(idx.scheme().code());
        self.u8(idx.orientation().code());
        self.u8(idx.is_unmasked() as u8);
        self.u32(idx.dim() as u32);
        self.buf.reserve(idx.parts().len() * 8);
        for x in idx.parts() {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
        self
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], TosError> {
        if self.buf.len() < n {
            return Err(TosError::Wire("truncated payload".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8, TosError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, TosError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, TosError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], TosError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    pub fn str(&mut self) -> Result<String, TosError> {
        String::from_utf8(self.bytes()?.to_vec()).map_err(|_| TosError::Wire("invalid utf-8".into()))
    }

    pub fn raw(&mut self, n: usize) -> Result<&'a [u8], TosError> {
        self.take(n)
    }

    pub fn index(&mut self) -> Result<EncryptedIndex, TosError> {
        let scheme = Scheme::from_code(self.u8()?).ok_or_else(|| TosError::Wire("scheme".into()))?;
        let orientation =
            Orientation::from_code(self.u8()?).ok_or_else(|| TosError::Wire("orientation".into()))?;
        let unmasked = match self.u8()? {
            0 => false,
            1 => true,
            _ => return Err(TosError::Wire("unmasked flag".into())),
        };
        let dim = self.u32()? as usize;
        let n = dim.checked_mul(PARTS * 8).filter(|&n| n <= self.buf.len());
        let raw = self.take(n.ok_or_else(|| TosError::Wire("index length".into()))?)?;
        let parts = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(EncryptedIndex::from_raw(scheme, orientation, dim, parts, unmasked)?)
    }

    pub fn finish(self) -> Result<(), TosError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(TosError::Wire(format!("{} trailing bytes", self.buf.len())))
        }
    }
}
