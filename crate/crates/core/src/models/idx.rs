//! IDX image/label files (the MNIST distribution format): big-endian u32
//! magic and dimensions followed by raw unsigned bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dist::SeededStream;
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Grayscale images with integer labels. Pixels are kept as the raw bytes;
/// [`Dataset::image`] returns intensities scaled to [0, 1].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        let size = rows * cols;
        if size == 0 || pixels.len() != size * labels.len() {
            return Err(Error::Consistency(format!(
                "{} pixel bytes for {} labels of {rows}x{cols} images",
                pixels.len(),
                labels.len()
            )));
        }
        Ok(Self { rows, cols, pixels, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image_size(&self) -> usize {
        self.rows * self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn raw_image(&self, i: usize) -> &[u8] {
        let s = self.image_size();
        &self.pixels[i * s..(i + 1) * s]
    }

    /// Intensities of image i divided by 255.
    pub fn image(&self, i: usize) -> Vec<f64> {
        self.raw_image(i).iter().map(|&p| f64::from(p) / 255.0).collect()
    }

    pub fn label(&self, i: usize) -> usize {
        usize::from(self.labels[i])
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// The listed rows, in order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut pixels = Vec::with_capacity(indices.len() * self.image_size());
        for &i in indices {
            pixels.extend_from_slice(self.raw_image(i));
        }
        Dataset {
            rows: self.rows,
            cols: self.cols,
            pixels,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// The first n rows.
    pub fn head(&self, n: usize) -> Dataset {
        self.select(&(0..n.min(self.len())).collect::<Vec<_>>())
    }

    /// n distinct rows chosen uniformly at random, in drawn order.
    pub fn random_subset(&self, n: usize, stream: SeededStream) -> Result<Dataset> {
        if n > self.len() {
            return Err(Error::Domain(format!("cannot choose {n} of {} rows", self.len())));
        }
        let mut order = stream.rng().permutation(self.len());
        order.truncate(n);
        Ok(self.select(&order))
    }

    pub fn write_idx(&self, images: &Path, labels: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(images).map_err(Error::at_path(images))?);
        for v in [IMAGES_MAGIC, self.len() as u32, self.rows as u32, self.cols as u32] {
            w.write_all(&v.to_be_bytes())?;
        }
        w.write_all(&self.pixels)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(labels).map_err(Error::at_path(labels))?);
        for v in [LABELS_MAGIC, self.len() as u32] {
            w.write_all(&v.to_be_bytes())?;
        }
        w.write_all(&self.labels)?;
        w.flush()?;
        Ok(())
    }
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_be_bytes(b))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(Error::at_path(path))?))
}

fn check_magic(path: &Path, got: u32, want: u32) -> Result<()> {
    if got != want {
        return Err(Error::Format(format!(
            "{}: magic {got:#010x}, expected {want:#010x}",
            path.display()
        )));
    }
    Ok(())
}

/// Reads an image file and its label file.
pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let mut r = open(images)?;
    check_magic(images, read_u32(&mut r).map_err(Error::at_path(images))?, IMAGES_MAGIC)?;
    let dims = (|| -> std::io::Result<[u32; 3]> { Ok([read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?]) })()
        .map_err(Error::at_path(images))?;
    let [n, rows, cols] = dims.map(|v| v as usize);
    let mut pixels = vec![0u8; n * rows * cols];
    r.read_exact(&mut pixels).map_err(Error::at_path(images))?;

    let mut r = open(labels)?;
    check_magic(labels, read_u32(&mut r).map_err(Error::at_path(labels))?, LABELS_MAGIC)?;
    let m = read_u32(&mut r).map_err(Error::at_path(labels))? as usize;
    if m != n {
        return Err(Error::Consistency(format!("{n} images but {m} labels")));
    }
    let mut label_bytes = vec![0u8; m];
    r.read_exact(&mut label_bytes).map_err(Error::at_path(labels))?;
    Dataset::new(rows, cols, pixels, label_bytes)
}
