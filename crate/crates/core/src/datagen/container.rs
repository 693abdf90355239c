//! Binary instance container.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic    8 bytes  "SPHTINST"
//! version  u32      1
//! rows     u64      design rows (nb)
//! cols     u64      design columns
//! truth    u64      number of truth entries
//! design   rows*cols f64, row-major
//! response rows f64
//! truth    truth f64 (column-major for matrix parameters)
//! ```
//!
//! The generation spec lives in a JSON sidecar next to the container
//! (same path with a `.json` extension).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{InstanceSpec, SyntheticInstance};
use crate::error::{HtError, Result};
use crate::linalg::DenseMatrix;
use crate::param::Parameter;
use crate::scalar::Real;

pub const CONTAINER_MAGIC: &[u8; 8] = b"SPHTINST";
pub const CONTAINER_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 3 * 8;

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    rows: usize,
    cols: usize,
    spec: InstanceSpec,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_instance<S: Real>(path: impl AsRef<Path>, instance: &SyntheticInstance<S>) -> Result<()> {
    let path = path.as_ref();
    let (rows, cols) = (instance.design.rows(), instance.design.cols());
    let truth = instance.truth.as_slice();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * (rows * cols + rows + truth.len()));
    buf.extend_from_slice(CONTAINER_MAGIC);
    buf.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    for n in [rows, cols, truth.len()] {
        buf.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for v in instance
        .design
        .as_slice()
        .iter()
        .chain(&instance.responses)
        .chain(truth)
    {
        buf.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    }
    fs::File::create(path)?.write_all(&buf)?;

    let sidecar = Sidecar {
        format_version: CONTAINER_VERSION,
        rows,
        cols,
        spec: instance.spec.clone(),
    };
    let mut json = serde_json::to_string_pretty(&sidecar)?;
    json.push('\n');
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn read_instance<S: Real>(path: impl AsRef<Path>) -> Result<SyntheticInstance<S>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;

    if bytes.len() < HEADER_LEN || &bytes[..8] != CONTAINER_MAGIC {
        return Err(HtError::Format("not an instance container (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CONTAINER_VERSION {
        return Err(HtError::Format(format!("unsupported container version {version}")));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[12 + 8 * k..20 + 8 * k].try_into().expect("8 bytes")) as usize;
    let (rows, cols, truth_len) = (word(0), word(1), word(2));
    let count = rows
        .checked_mul(cols)
        .and_then(|m| m.checked_add(rows))
        .and_then(|m| m.checked_add(truth_len))
        .ok_or_else(|| HtError::Format("container sizes overflow".into()))?;
    if bytes.len() != HEADER_LEN + 8 * count {
        return Err(HtError::Format(format!(
            "container holds {} payload bytes, header implies {}",
            bytes.len() - HEADER_LEN,
            8 * count
        )));
    }
    if (sidecar.rows, sidecar.cols) != (rows, cols) {
        return Err(HtError::Format("sidecar dimensions disagree with the container".into()));
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| S::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))));
    let design: Vec<S> = values.by_ref().take(rows * cols).collect();
    let responses: Vec<S> = values.by_ref().take(rows).collect();
    let truth: Vec<S> = values.collect();
    Ok(SyntheticInstance {
        design: DenseMatrix::from_row_major(rows, cols, design)?,
        responses,
        truth: Parameter::new(truth, sidecar.spec.parameter_shape())?,
        spec: sidecar.spec,
    })
}
