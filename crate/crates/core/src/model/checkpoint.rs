//! Parameter checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! bytes 0..8    magic "GCALCKPT"
//! bytes 8..12   u32 header length L
//! bytes 12..12+L  UTF-8 JSON {"tensors":[{"name":"w1","shape":[m,h]}, ...]}
//! rest          f64 values of each tensor in header order, row-major
//! ```
//!
//! Tensor order is w1, w2, g1, b1, g2, b2.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{ModelParams, TENSOR_NAMES};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"GCALCKPT";

#[derive(Debug, Serialize, Deserialize)]
struct TensorHeader {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    tensors: Vec<TensorHeader>,
}

pub fn write_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let header = Header {
        tensors: TENSOR_NAMES
            .iter()
            .zip(params.shapes())
            .map(|(name, shape)| TensorHeader {
                name: name.to_string(),
                shape,
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut bytes = Vec::with_capacity(12 + json.len() + 8 * params.parameter_count());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&json);
    for t in params.tensors() {
        for x in t {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Malformed {
        file: "checkpoint".into(),
        line: 0,
        msg: msg.into(),
    }
}

fn take_matrix(t: &TensorHeader, values: &mut impl Iterator<Item = f64>) -> Result<Array2<f64>> {
    let [r, c] = t.shape[..] else {
        return Err(corrupt(format!("{} must be 2-d", t.name)));
    };
    Ok(Array2::from_shape_vec((r, c), values.take(r * c).collect()).expect("length checked"))
}

fn take_vector(t: &TensorHeader, values: &mut impl Iterator<Item = f64>) -> Result<Array1<f64>> {
    let [len] = t.shape[..] else {
        return Err(corrupt(format!("{} must be 1-d", t.name)));
    };
    Ok(values.take(len).collect())
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    let bytes = fs::read(path)?;
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body_start = 12 + header_len;
    let header: Header = serde_json::from_slice(bytes.get(12..body_start).ok_or_else(|| corrupt("truncated header"))?)?;
    let names: Vec<&str> = header.tensors.iter().map(|t| t.name.as_str()).collect();
    if names != TENSOR_NAMES {
        return Err(corrupt(format!("unexpected tensor list {names:?}")));
    }
    let mut values = bytes[body_start..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let expected: usize = header.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum();
    if (bytes.len() - body_start) != 8 * expected {
        return Err(corrupt(format!(
            "expected {expected} values, found {} bytes",
            bytes.len() - body_start
        )));
    }
    let w1 = take_matrix(&header.tensors[0], &mut values)?;
    let w2 = take_matrix(&header.tensors[1], &mut values)?;
    let g1 = take_matrix(&header.tensors[2], &mut values)?;
    let b1 = take_vector(&header.tensors[3], &mut values)?;
    let g2 = take_matrix(&header.tensors[4], &mut values)?;
    let b2 = take_vector(&header.tensors[5], &mut values)?;
    let params = ModelParams { w1, w2, g1, b1, g2, b2 };
    params.validate()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDims;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut p = ModelParams::init(ModelDims::new(5, 4, 3), &mut ChaCha8Rng::seed_from_u64(8));
        p.b1[2] = -0.125;
        p.b2[0] = 1e-300;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.ckpt");
        write_checkpoint(&p, &path).unwrap();
        assert_eq!(read_checkpoint(&path).unwrap(), p);

        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], b"GCALCKPT");
        let n = bytes.len();
        fs::write(&path, &bytes[..n - 8]).unwrap();
        assert!(read_checkpoint(&path).is_err());
    }
}
