//! MNIST IDX ingestion: big-endian headers, unsigned-byte pixels, optional
//! gzip transparency for `.gz` paths. Pixels are scaled to `[0, 1]` and then
//! standardized with the conventional constants below.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::bufread::GzDecoder;

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// IDX magic for 3-dimensional unsigned-byte image files.
pub const IMAGE_MAGIC: u32 = 0x0000_0803;
/// IDX magic for 1-dimensional unsigned-byte label files.
pub const LABEL_MAGIC: u32 = 0x0000_0801;
/// Mean of the scaled training pixels used for standardization.
pub const MNIST_MEAN: f64 = 0.1307;
/// Standard deviation of the scaled training pixels.
pub const MNIST_STD: f64 = 0.3081;

/// Standardizes one already-scaled (`[0, 1]`) pixel value.
pub fn standardize(scaled: f64) -> f64 {
    (scaled - MNIST_MEAN) / MNIST_STD
}

fn open(path: &Path) -> Result<Box<dyn Read>> {
    let file = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(GzDecoder::new(file)))
    } else {
        Ok(Box::new(file))
    }
}

fn read_u32_be(r: &mut dyn Read, path: &Path, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| Error::Truncated {
        file: path.to_path_buf(),
        detail: format!("while reading {what}: {e}"),
    })?;
    Ok(u32::from_be_bytes(buf))
}

fn read_payload(r: &mut dyn Read, len: usize, path: &Path) -> Result<Vec<u8>> {
    let mut data = vec![0u8; len];
    r.read_exact(&mut data).map_err(|e| Error::Truncated {
        file: path.to_path_buf(),
        detail: format!("payload shorter than the declared dimensions: {e}"),
    })?;
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Truncated {
            file: path.to_path_buf(),
            detail: "payload longer than the declared dimensions".into(),
        });
    }
    Ok(data)
}

fn check_magic(r: &mut dyn Read, path: &Path, expected: u32) -> Result<()> {
    let found = read_u32_be(r, path, "magic number")?;
    if found != expected {
        return Err(Error::BadMagic {
            file: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Loads one images/labels file pair into a standardized dataset with inputs
/// shaped `[n, 1, rows, cols]` and labels `0..=9`.
pub fn load_mnist(images_path: &Path, labels_path: &Path, split: Split) -> Result<Dataset> {
    let mut img = open(images_path)?;
    check_magic(img.as_mut(), images_path, IMAGE_MAGIC)?;
    let n = read_u32_be(img.as_mut(), images_path, "image count")? as usize;
    let rows = read_u32_be(img.as_mut(), images_path, "row count")? as usize;
    let cols = read_u32_be(img.as_mut(), images_path, "column count")? as usize;
    let pixels = read_payload(img.as_mut(), n * rows * cols, images_path)?;

    let mut lab = open(labels_path)?;
    check_magic(lab.as_mut(), labels_path, LABEL_MAGIC)?;
    let n_labels = read_u32_be(lab.as_mut(), labels_path, "label count")? as usize;
    if n_labels != n {
        return Err(Error::CountMismatch {
            images: n,
            labels: n_labels,
        });
    }
    let raw_labels = read_payload(lab.as_mut(), n_labels, labels_path)?;

    let data: Vec<f64> = pixels
        .iter()
        .map(|&p| standardize(p as f64 / 255.0))
        .collect();
    let inputs = Tensor::from_vec(vec![n, 1, rows, cols], data)?;
    let labels: Vec<u32> = raw_labels.iter().map(|&l| l as u32).collect();
    Dataset::new(inputs, labels, 10, split)
}

/// Resolves `dir/name`, transparently falling back to `dir/name.gz`.
pub fn resolve_mnist_file(dir: &Path, name: &str) -> Result<PathBuf> {
    let plain = dir.join(name);
    if plain.exists() {
        return Ok(plain);
    }
    let gz = dir.join(format!("{name}.gz"));
    if gz.exists() {
        return Ok(gz);
    }
    Err(Error::Config(format!(
        "neither {} nor {} exists; supply the MNIST IDX files (see README)",
        plain.display(),
        gz.display()
    )))
}
