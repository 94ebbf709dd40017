//! Parameter snapshots.
//!
//! Binary layout (little endian):
//!
//! ```text
//!   magic    8 bytes   "DRMNET01"
//!   depth    u32
//!   widths   u32 × (depth + 1)
//!   act      u8        0 = logistic, 1 = tanh
//!   B_theta  f64
//!   count    u64
//!   theta    f64 × count
//! ```
//!
//! The binary form round-trips bit-exactly. The JSON form is
//! `{"arch": {depth, widths, activation, B_theta}, "params": [...]}`.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use super::{Activation, NetworkArch, NetworkParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"DRMNET01";

pub fn save_binary<W: Write>(mut w: W, arch: &NetworkArch, params: &NetworkParams) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(arch.depth() as u32).to_le_bytes())?;
    for &n in arch.widths() {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    let act: u8 = match arch.activation() {
        Activation::Logistic => 0,
        Activation::Tanh => 1,
    };
    w.write_all(&[act])?;
    w.write_all(&arch.weight_bound().to_le_bytes())?;
    w.write_all(&(params.len() as u64).to_le_bytes())?;
    for v in params.as_flat() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_binary<R: Read>(mut r: R) -> Result<(NetworkArch, NetworkParams)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let depth = read_u32(&mut r)? as usize;
    if depth > 1 << 16 {
        return Err(Error::Format(format!("implausible depth {depth}")));
    }
    let widths = (0..=depth)
        .map(|_| read_u32(&mut r).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let mut act = [0u8; 1];
    r.read_exact(&mut act)?;
    let activation = match act[0] {
        0 => Activation::Logistic,
        1 => Activation::Tanh,
        other => return Err(Error::Format(format!("unknown activation tag {other}"))),
    };
    let bound = f64::from_le_bytes(read_array(&mut r)?);
    let arch = NetworkArch::new(widths, activation, bound)?;
    let count = u64::from_le_bytes(read_array(&mut r)?) as usize;
    if count != arch.param_count() {
        return Err(Error::Format(format!(
            "header declares {count} parameters, architecture needs {}",
            arch.param_count()
        )));
    }
    let theta = (0..count)
        .map(|_| read_array(&mut r).map(f64::from_le_bytes))
        .collect::<Result<Vec<_>>>()?;
    let params = NetworkParams::from_flat(&arch, theta)?;
    Ok((arch, params))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub arch: NetworkArch,
    pub params: Vec<f64>,
}

pub fn save_json<W: Write>(w: W, arch: &NetworkArch, params: &NetworkParams) -> Result<()> {
    let file = ParamsFile {
        arch: arch.clone(),
        params: params.as_flat().to_vec(),
    };
    serde_json::to_writer(w, &file).map_err(|e| Error::Format(e.to_string()))
}

pub fn load_json<R: Read>(r: R) -> Result<(NetworkArch, NetworkParams)> {
    let file: ParamsFile = serde_json::from_reader(r).map_err(|e| Error::Format(e.to_string()))?;
    let params = NetworkParams::from_flat(&file.arch, file.params)?;
    Ok((file.arch, params))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}
