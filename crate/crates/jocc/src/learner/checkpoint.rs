//! Checkpoint files: a structured-text header followed by a flat
//! little-endian f64 parameter payload. Round-trips are bit-exact.
//!
//! Layout:
//! ```text
//! JOCCKPT1\n
//! {"kind":...,"iteration":...,"config_hash":...,"nets":[{"name":...,"sizes":[...]}]}\n
//! <raw f64 little-endian payload, nets concatenated in header order>
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::learner::Mlp;

const MAGIC: &[u8] = b"JOCCKPT1\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub kind: String,
    pub iteration: u64,
    pub config_hash: String,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: String,
    iteration: u64,
    config_hash: String,
    nets: Vec<NetEntry>,
}

#[derive(Serialize, Deserialize)]
struct NetEntry {
    name: String,
    sizes: Vec<usize>,
}

pub fn save_checkpoint(path: &Path, meta: &CheckpointMeta, nets: &[(&str, &Mlp)]) -> Result<()> {
    let header = Header {
        kind: meta.kind.clone(),
        iteration: meta.iteration,
        config_hash: meta.config_hash.clone(),
        nets: nets
            .iter()
            .map(|(name, net)| NetEntry {
                name: name.to_string(),
                sizes: net.sizes().to_vec(),
            })
            .collect(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC).map_err(|e| Error::io(path, e))?;
    let header_json =
        serde_json::to_string(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    w.write_all(header_json.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    for (_, net) in nets {
        for p in net.flatten_params() {
            w.write_all(&p.to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointMeta, Vec<(String, Mlp)>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 9];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "{} is not a checkpoint file",
            path.display()
        )));
    }
    let mut header_line = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        r.read_exact(&mut byte).map_err(|e| Error::io(path, e))?;
        if byte[0] == b'\n' {
            break;
        }
        header_line.push(byte[0]);
    }
    let header: Header = serde_json::from_slice(&header_line)
        .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;

    let mut nets = Vec::with_capacity(header.nets.len());
    for entry in &header.nets {
        let mut net = Mlp::zeros(&entry.sizes);
        let count = net.param_count();
        let mut flat = vec![0.0f64; count];
        let mut buf = [0u8; 8];
        for value in flat.iter_mut() {
            r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
            *value = f64::from_le_bytes(buf);
        }
        net.set_params(&flat)?;
        nets.push((entry.name.clone(), net));
    }
    let mut trailing = Vec::new();
    r.read_to_end(&mut trailing).map_err(|e| Error::io(path, e))?;
    if !trailing.is_empty() {
        return Err(Error::Checkpoint(format!(
            "{} has {} trailing bytes",
            path.display(),
            trailing.len()
        )));
    }
    Ok((
        CheckpointMeta {
            kind: header.kind,
            iteration: header.iteration,
            config_hash: header.config_hash,
        },
        nets,
    ))
}

/// SHA-256 of a file's bytes, used to compare checkpoints across runs.
pub fn file_sha256(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(hasher.finalize()))
}
