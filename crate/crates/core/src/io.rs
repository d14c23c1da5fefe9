//! Flat binary format for [`SvdParam`].
//!
//! ```text
//! "OSVD" | version u32 | out_dim u32 | in_dim u32 | nU u32 | nV u32
//! U vectors (nU × out_dim f64) | V vectors (nV × in_dim f64) | sigma (min(out_dim, in_dim) f64)
//! ```
//! All integers and floats little-endian.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::householder::HouseholderChain;
use crate::scalar::Scalar;
use crate::svd::SvdParam;

pub const MAGIC: &[u8; 4] = b"OSVD";
pub const VERSION: u32 = 1;

pub fn write_param<T: Scalar, W: Write>(param: &SvdParam<T>, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    for n in [
        VERSION as usize,
        param.out_dim(),
        param.in_dim(),
        param.u().len(),
        param.v().len(),
    ] {
        let n = u32::try_from(n).map_err(|_| Error::Format(format!("{n} exceeds u32")))?;
        out.write_all(&n.to_le_bytes())?;
    }
    let vectors = param.u().vectors().iter().chain(param.v().vectors());
    for x in vectors.flat_map(|h| h.as_slice()).chain(param.sigma()) {
        out.write_all(&x.to_f64_lossless().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_param<T: Scalar, R: Read>(mut input: R) -> Result<SvdParam<T>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let out_dim = read_u32(&mut input)? as usize;
    let in_dim = read_u32(&mut input)? as usize;
    let n_u = read_u32(&mut input)? as usize;
    let n_v = read_u32(&mut input)? as usize;
    if out_dim == 0 || in_dim == 0 {
        return Err(Error::Format("dimensions must be positive".into()));
    }
    let u = read_chain(&mut input, out_dim, n_u)?;
    let v = read_chain(&mut input, in_dim, n_v)?;
    let sigma = read_values(&mut input, out_dim.min(in_dim))?;
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes".into()));
    }
    SvdParam::new(u, v, sigma)
}

pub fn to_bytes<T: Scalar>(param: &SvdParam<T>) -> Vec<u8> {
    let mut buf = Vec::new();
    write_param(param, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub fn from_bytes<T: Scalar>(bytes: &[u8]) -> Result<SvdParam<T>> {
    read_param(bytes)
}

pub fn save<T: Scalar>(param: &SvdParam<T>, path: impl AsRef<std::path::Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_param(param, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load<T: Scalar>(path: impl AsRef<std::path::Path>) -> Result<SvdParam<T>> {
    let file = std::fs::File::open(path)?;
    read_param(std::io::BufReader::new(file))
}

fn read_chain<T: Scalar, R: Read>(input: &mut R, dim: usize, len: usize) -> Result<HouseholderChain<T>> {
    let vectors = (0..len)
        .map(|_| read_values(input, dim))
        .collect::<Result<Vec<_>>>()?;
    HouseholderChain::from_vecs(dim, vectors)
}

fn read_values<T: Scalar, R: Read>(input: &mut R, n: usize) -> Result<Vec<T>> {
    let mut buf = [0u8; 8];
    (0..n)
        .map(|_| {
            input.read_exact(&mut buf).map_err(truncated)?;
            Ok(T::from_f64_lossy(f64::from_le_bytes(buf)))
        })
        .collect()
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf).map_err(truncated)?;
    Ok(u32::from_le_bytes(buf))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated input".into())
    } else {
        Error::Io(e)
    }
}
