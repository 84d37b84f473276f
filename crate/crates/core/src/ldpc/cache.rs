//! On-disk cache of lifted codes.
//!
//! A blob stores the protograph and every edge-type permutation; the encoder
//! is rebuilt on load. Layout (little endian):
//!
//! ```text
//! magic "SIDMACOD" | u32 version | u32 rows | u32 cols | u32 z | u64 seed
//! rows*cols u32 base entries | for each edge type: z u32 check copies
//! ```
//!
//! Files are named by the SHA-256 of `(version, protograph text, z, seed)` so
//! identical requests always hit the same file.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ldpc::code::{build_code, LiftedCode};
use crate::ldpc::peg::Lift;
use crate::ldpc::protograph::Protograph;

const MAGIC: &[u8; 8] = b"SIDMACOD";
pub const FORMAT_VERSION: u32 = 2;

pub fn cache_key(proto: &Protograph, z: usize, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(FORMAT_VERSION.to_le_bytes());
    h.update(proto.to_string().as_bytes());
    h.update((z as u64).to_le_bytes());
    h.update(seed.to_le_bytes());
    hex::encode(h.finalize())
}

pub fn encode_lift(lift: &Lift) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(lift.proto.num_checks() as u32).to_le_bytes());
    out.extend_from_slice(&(lift.proto.num_vars() as u32).to_le_bytes());
    out.extend_from_slice(&(lift.z as u32).to_le_bytes());
    out.extend_from_slice(&lift.seed.to_le_bytes());
    for row in lift.proto.rows() {
        for &b in row {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    for perm in &lift.assignment {
        for &j in perm {
            out.extend_from_slice(&j.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::Parse("truncated code blob".into()))?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_lift(buf: &[u8]) -> Result<Lift> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Parse("not a code blob".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported code blob version {version}")));
    }
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let z = r.u32()? as usize;
    let seed = r.u64()?;
    let mut matrix = vec![vec![0i64; cols]; rows];
    for row in matrix.iter_mut() {
        for b in row.iter_mut() {
            *b = i64::from(r.u32()?);
        }
    }
    let proto = Protograph::new(&matrix)?;
    let mut assignment = Vec::with_capacity(proto.edges().len());
    for _ in 0..proto.edges().len() {
        let mut perm = Vec::with_capacity(z);
        for _ in 0..z {
            let j = r.u32()?;
            if j as usize >= z {
                return Err(Error::Parse("check copy out of range".into()));
            }
            perm.push(j);
        }
        assignment.push(perm);
    }
    if r.pos != buf.len() {
        return Err(Error::Parse("trailing bytes in code blob".into()));
    }
    Ok(Lift {
        proto,
        z,
        seed,
        assignment,
    })
}

/// Directory-backed cache of [`build_code`] results.
#[derive(Debug, Clone)]
pub struct CodeCache {
    dir: PathBuf,
}

impl CodeCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    pub fn path_for(&self, proto: &Protograph, z: usize, seed: u64) -> PathBuf {
        self.dir.join(format!("{}.code", cache_key(proto, z, seed)))
    }

    /// Loads the code for `(proto, z, seed)` or builds and stores it.
    pub fn get_or_build(&self, proto: &Protograph, z: usize, seed: u64, message_bits: usize) -> Result<LiftedCode> {
        let path = self.path_for(proto, z, seed);
        if let Ok(bytes) = fs::read(&path) {
            let code = LiftedCode::from_lift(decode_lift(&bytes)?);
            if code.dimension() < message_bits {
                return Err(Error::RankDeficient {
                    available: code.dimension(),
                    required: message_bits,
                });
            }
            return Ok(code);
        }
        let code = build_code(proto, z, seed, message_bits)?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, encode_lift(code.lift()))?;
        fs::rename(&tmp, &path)?;
        Ok(code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::peg::lift_peg;

    #[test]
    fn blob_round_trip() {
        let p = Protograph::new(&[vec![1, 2, 1, 0], vec![1, 0, 1, 1]]).unwrap();
        let lift = lift_peg(&p, 8, 5).unwrap();
        let bytes = encode_lift(&lift);
        assert_eq!(decode_lift(&bytes).unwrap(), lift);
        assert!(decode_lift(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(decode_lift(&bad).is_err());
    }

    #[test]
    fn cache_reuses_identical_code() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CodeCache::new(dir.path()).unwrap();
        let p = Protograph::new(&[vec![1, 1, 1, 1], vec![1, 1, 0, 1]]).unwrap();
        let a = cache.get_or_build(&p, 10, 3, 15).unwrap();
        assert!(cache.path_for(&p, 10, 3).exists());
        let b = cache.get_or_build(&p, 10, 3, 15).unwrap();
        assert_eq!(a.lift(), b.lift());
        assert_ne!(cache_key(&p, 10, 3), cache_key(&p, 10, 4));
    }
}
