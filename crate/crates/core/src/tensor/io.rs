//! The `TNS3` binary tensor format.
//!
//! Layout: the magic bytes `TNS3`, a little-endian `u32` version (1), three
//! little-endian `u64` dimensions `n1, n2, n`, then `n1·n2·n` little-endian
//! `f64` values in [`Tensor3`] memory order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Tensor3;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TNS3";
pub const VERSION: u32 = 1;

pub fn write_tns3<W: Write>(t: &Tensor3, mut w: W) -> Result<()> {
    let (n1, n2, n) = t.dims();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for d in [n1, n2, n] {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tns3<R: Read>(mut r: R) -> Result<Tensor3> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported TNS3 version {version}")));
    }
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        *d = usize::try_from(u64::from_le_bytes(buf)).map_err(|_| Error::Format("dimension overflow".into()))?;
    }
    let [n1, n2, n] = dims;
    if n1 == 0 || n2 == 0 || n == 0 {
        return Err(Error::Format(format!("non-positive dimensions {n1}x{n2}x{n}")));
    }
    let len = n1
        .checked_mul(n2)
        .and_then(|x| x.checked_mul(n))
        .ok_or_else(|| Error::Format("dimension overflow".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(Error::Format(format!("expected {} payload bytes, found {}", len * 8, bytes.len())));
    }
    let data: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Tensor3::from_vec(n1, n2, n, data)
}

pub fn save_tns3(t: &Tensor3, path: impl AsRef<Path>) -> Result<()> {
    write_tns3(t, BufWriter::new(File::create(path)?))
}

pub fn load_tns3(path: impl AsRef<Path>) -> Result<Tensor3> {
    read_tns3(BufReader::new(File::open(path)?))
}
