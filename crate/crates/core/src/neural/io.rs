//! Portable model files.
//!
//! Layout: 8-byte magic, little-endian u64 header length, a JSON header with
//! the layer widths (and optional scalings), then every parameter as a
//! little-endian f64: per layer, weights row-major (`out × in`) then biases.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, MlpSpec};
use super::train::{Regressor, Standardizer};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"ILMLP\x00\x00\x01";

#[derive(Serialize, Deserialize)]
struct Header {
    widths: Vec<usize>,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_scaling: Option<Standardizer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_scaling: Option<Standardizer>,
}

fn encode(model: &Mlp, input_scaling: Option<&Standardizer>, target_scaling: Option<&Standardizer>) -> Result<Vec<u8>> {
    let header = Header {
        widths: model.spec().widths(),
        seed: model.spec().seed,
        input_scaling: input_scaling.cloned(),
        target_scaling: target_scaling.cloned(),
    };
    let json = serde_json::to_vec(&header).map_err(|source| Error::Json {
        context: "model header".into(),
        source,
    })?;
    let params = model.params_flat();
    let mut out = Vec::with_capacity(16 + json.len() + 8 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

fn decode(mut bytes: &[u8]) -> Result<(Mlp, Header)> {
    let mut magic = [0u8; 8];
    let bad = |what: &str| Error::input(format!("malformed model file: {what}"));
    bytes.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
    if &magic != MAGIC {
        return Err(bad("wrong magic"));
    }
    let mut len = [0u8; 8];
    bytes.read_exact(&mut len).map_err(|_| bad("truncated header length"))?;
    let len = u64::from_le_bytes(len) as usize;
    if bytes.len() < len {
        return Err(bad("truncated header"));
    }
    let header: Header = serde_json::from_slice(&bytes[..len]).map_err(|source| Error::Json {
        context: "model header".into(),
        source,
    })?;
    bytes = &bytes[len..];
    if header.widths.len() < 2 {
        return Err(bad("fewer than two layer widths"));
    }
    let w = &header.widths;
    let spec = MlpSpec::new(w[0], w[w.len() - 1], w[1..w.len() - 1].to_vec(), header.seed);
    let mut model = Mlp::new(spec)?;
    if bytes.len() != 8 * model.param_count() {
        return Err(bad("parameter block has the wrong size"));
    }
    let params: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    model.set_params_flat(&params)?;
    Ok((model, header))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn save_mlp(model: &Mlp, path: &Path) -> Result<()> {
    write_file(path, &encode(model, None, None)?)
}

/// Loads parameters only; the optimizer state starts fresh.
pub fn load_mlp(path: &Path) -> Result<Mlp> {
    decode(&read_file(path)?).map(|(m, _)| m)
}

pub fn save_regressor(reg: &Regressor, path: &Path) -> Result<()> {
    write_file(
        path,
        &encode(&reg.model, Some(&reg.input_scaling), Some(&reg.target_scaling))?,
    )
}

/// Missing scalings load as identity.
pub fn load_regressor(path: &Path) -> Result<Regressor> {
    let (model, header) = decode(&read_file(path)?)?;
    let input_scaling = header
        .input_scaling
        .unwrap_or_else(|| Standardizer::identity(model.input_dim()));
    let target_scaling = header
        .target_scaling
        .unwrap_or_else(|| Standardizer::identity(model.output_dim()));
    if input_scaling.dim() != model.input_dim() || target_scaling.dim() != model.output_dim() {
        return Err(Error::input("malformed model file: scaling dimension mismatch"));
    }
    Ok(Regressor {
        model,
        input_scaling,
        target_scaling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::train::{Dataset, TrainConfig};

    #[test]
    fn mlp_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let m = Mlp::new(MlpSpec::new(3, 2, vec![5, 4], 77)).unwrap();
        save_mlp(&m, &path).unwrap();
        let back = load_mlp(&path).unwrap();
        assert_eq!(back.params_flat(), m.params_flat());
        assert_eq!(back.spec(), m.spec());
    }

    #[test]
    fn regressor_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.bin");
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let ys: Vec<Vec<f64>> = (0..20).map(|i| vec![2.0 * i as f64]).collect();
        let data = Dataset::from_rows(&xs, &ys).unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        let (reg, _) = Regressor::fit(MlpSpec::new(2, 1, vec![4], 1), &data, &cfg).unwrap();
        save_regressor(&reg, &path).unwrap();
        let back = load_regressor(&path).unwrap();
        assert_eq!(back.predict(&[3.0, 9.0]).unwrap(), reg.predict(&[3.0, 9.0]).unwrap());
    }

    #[test]
    fn corrupted_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"not a model").unwrap();
        assert!(load_mlp(&path).is_err());
        let m = Mlp::new(MlpSpec::new(1, 1, vec![2], 0)).unwrap();
        let mut bytes = encode(&m, None, None).unwrap();
        bytes.pop();
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_mlp(&path).is_err());
        assert!(matches!(load_mlp(&dir.path().join("missing")), Err(Error::Io { .. })));
    }
}
