//! Flat binary tensor checkpoints: a single-line JSON shape manifest followed
//! by all element data as little-endian 64-bit floats, in manifest order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{numel, Tensor};

#[derive(Serialize, Deserialize)]
struct Manifest {
    shapes: Vec<Vec<usize>>,
}

pub fn save_tensors(path: &Path, tensors: &[&Tensor]) -> Result<()> {
    let manifest = Manifest {
        shapes: tensors.iter().map(|t| t.shape().to_vec()).collect(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &manifest)?;
    w.write_all(b"\n")?;
    for t in tensors {
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_tensors(path: &Path) -> Result<Vec<Tensor>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(Error::Truncated {
                file: path.to_path_buf(),
                detail: "missing manifest line".into(),
            });
        }
        if byte[0] == b'\n' {
            break;
        }
        header.push(byte[0]);
    }
    let manifest: Manifest = serde_json::from_slice(&header)?;

    let mut tensors = Vec::with_capacity(manifest.shapes.len());
    let mut buf = [0u8; 8];
    for shape in manifest.shapes {
        let n = numel(&shape);
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut buf).map_err(|e| Error::Truncated {
                file: path.to_path_buf(),
                detail: format!("payload shorter than manifest promises: {e}"),
            })?;
            data.push(f64::from_le_bytes(buf));
        }
        tensors.push(Tensor::from_vec(shape, data)?);
    }
    if r.read(&mut byte)? != 0 {
        return Err(Error::Truncated {
            file: path.to_path_buf(),
            detail: "trailing bytes after declared payload".into(),
        });
    }
    Ok(tensors)
}
