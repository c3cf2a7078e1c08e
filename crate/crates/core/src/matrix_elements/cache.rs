//! On-disk cache of rate matrices.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "LCRM"
//!      4     4  format version (u32, currently 1)
//!      8     4  kind (u32: 0 = absorption, 1 = spontaneous)
//!     12     8  matrix size L (u64)
//!     20     8  fingerprint (u64)
//!     28     8  entry count (u64)
//!     36     8  checksum: first 8 bytes of SHA-256 over the payload (u64)
//!     44  16·k  payload: k triplets (to: u32, from: u32, rate: f64 bits),
//!               column-major, rows increasing within a column
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::rates::{RateKind, RateMatrix};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"LCRM";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 44;

/// Stable 64-bit digest of the physics that produced a matrix.
pub struct Fingerprint(Sha256);

impl Fingerprint {
    pub fn new(kind: RateKind) -> Self {
        let mut h = Sha256::new();
        h.update(b"lasercond-rate-matrix");
        h.update([kind.tag()]);
        Fingerprint(h)
    }

    pub fn u64(&mut self, v: u64) {
        self.0.update(v.to_le_bytes());
    }

    pub fn i64(&mut self, v: i64) {
        self.0.update(v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.0.update(v.to_bits().to_le_bytes());
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.u64(b.len() as u64);
        self.0.update(b);
    }

    pub fn finish(self) -> u64 {
        first_u64(&self.0.finalize())
    }
}

fn first_u64(digest: &[u8]) -> u64 {
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

fn checksum(payload: &[u8]) -> u64 {
    first_u64(&Sha256::digest(payload))
}

pub fn encode(m: &RateMatrix) -> Vec<u8> {
    let mut payload = Vec::with_capacity(m.nnz() * 16);
    for (to, from, v) in m.triplets() {
        payload.extend_from_slice(&to.to_le_bytes());
        payload.extend_from_slice(&from.to_le_bytes());
        payload.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.kind().tag() as u32).to_le_bytes());
    out.extend_from_slice(&(m.size() as u64).to_le_bytes());
    out.extend_from_slice(&m.fingerprint().to_le_bytes());
    out.extend_from_slice(&(m.nnz() as u64).to_le_bytes());
    out.extend_from_slice(&checksum(&payload).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn read_u64(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn decode(bytes: &[u8], expected_fingerprint: u64) -> Result<RateMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Corrupt(format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Corrupt("bad magic".into()));
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(Error::Corrupt(format!("unsupported format version {version}")));
    }
    let kind = RateKind::from_tag(read_u32(bytes, 8) as u8).ok_or_else(|| Error::Corrupt("bad kind".into()))?;
    let size = read_u64(bytes, 12) as usize;
    let fingerprint = read_u64(bytes, 20);
    let nnz = read_u64(bytes, 28) as usize;
    let sum = read_u64(bytes, 36);
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != nnz.saturating_mul(16) {
        return Err(Error::Corrupt(format!(
            "checksum error: payload holds {} bytes, header promises {}",
            payload.len(),
            nnz * 16
        )));
    }
    if checksum(payload) != sum {
        return Err(Error::Corrupt("checksum error: payload digest mismatch".into()));
    }
    if fingerprint != expected_fingerprint {
        return Err(Error::FingerprintMismatch {
            expected: expected_fingerprint,
            found: fingerprint,
        });
    }
    let triplets: Vec<(u32, u32, f64)> = payload
        .chunks_exact(16)
        .map(|c| (read_u32(c, 0), read_u32(c, 4), f64::from_bits(read_u64(c, 8))))
        .collect();
    RateMatrix::from_sorted_triplets(kind, size, fingerprint, &triplets)
}

/// Write atomically: temp file in the same directory, then rename.
pub fn cache_store(m: &RateMatrix, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&encode(m))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn cache_load(path: &Path, expected_fingerprint: u64) -> Result<RateMatrix> {
    decode(&fs::read(path)?, expected_fingerprint)
}

/// Conventional file name for a fingerprint inside a cache directory.
pub fn cache_file_name(fingerprint: u64) -> String {
    format!("{fingerprint:016x}.lcrm")
}
