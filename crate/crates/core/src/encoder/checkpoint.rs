//! Binary checkpoint format, little-endian throughout:
//!
//! ```text
//! magic      8 bytes  "MGCKPT01"
//! input_dim  u32
//! d          u32      embedding dimension
//! C          u32      class count
//! layers     u32
//! per layer: rows u32, cols u32, rows*cols f64 (row-major), rows f64 (bias)
//! head1      C*d f64 (row-major)
//! head2      C*d f64 (row-major)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::model::{DualHeadModel, Layer};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MGCKPT01";

pub fn write_checkpoint<W: Write>(model: &DualHeadModel, mut w: W) -> std::io::Result<()> {
    let u32_of = |v: usize| u32::try_from(v).map_err(|_| std::io::Error::other("dimension exceeds u32"));
    w.write_all(CHECKPOINT_MAGIC)?;
    for v in [model.input_dim(), model.embedding_dim(), model.num_classes(), model.layers.len()] {
        w.write_all(&u32_of(v)?.to_le_bytes())?;
    }
    let put = |xs: &[f64], w: &mut W| -> std::io::Result<()> {
        for x in xs {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    };
    for layer in &model.layers {
        w.write_all(&u32_of(layer.output_dim())?.to_le_bytes())?;
        w.write_all(&u32_of(layer.input_dim())?.to_le_bytes())?;
        put(layer.weights.as_slice(), &mut w)?;
        put(&layer.bias, &mut w)?;
    }
    put(model.head1.as_slice(), &mut w)?;
    put(model.head2.as_slice(), &mut w)?;
    w.flush()
}

struct Reader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| Error::Format {
            what: "checkpoint",
            offset: self.offset,
            message: format!("reading {what}: {e}"),
        })?;
        self.offset += N as u64;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.bytes::<4>(what)?) as usize)
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        (0..n).map(|_| self.bytes::<8>(what).map(f64::from_le_bytes)).collect()
    }

    fn fail(&self, message: String) -> Error {
        Error::Format {
            what: "checkpoint",
            offset: self.offset,
            message,
        }
    }
}

// Refuse shapes whose payload would exceed this many f64 values.
const MAX_VALUES: usize = 1 << 28;

pub fn read_checkpoint<R: Read>(r: R) -> Result<DualHeadModel> {
    let mut r = Reader { inner: r, offset: 0 };
    let magic = r.bytes::<8>("magic")?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format {
            what: "checkpoint",
            offset: 0,
            message: format!("bad magic {magic:02x?}"),
        });
    }
    let input_dim = r.u32("input_dim")?;
    let d = r.u32("embedding dimension")?;
    let classes = r.u32("class count")?;
    let layer_count = r.u32("layer count")?;
    if layer_count == 0 || input_dim == 0 || d == 0 || classes == 0 {
        return Err(r.fail("zero dimension in header".into()));
    }
    let mut layers = Vec::with_capacity(layer_count.min(64));
    let mut expected_in = input_dim;
    for i in 0..layer_count {
        let rows = r.u32("layer rows")?;
        let cols = r.u32("layer cols")?;
        if cols != expected_in || rows == 0 || rows.saturating_mul(cols) > MAX_VALUES {
            return Err(r.fail(format!("layer {i} has shape {rows}x{cols}, expected input size {expected_in}")));
        }
        let weights = Matrix::from_row_major(rows, cols, r.f64s(rows * cols, "layer weights")?);
        let bias = r.f64s(rows, "layer bias")?;
        layers.push(Layer { weights, bias });
        expected_in = rows;
    }
    if expected_in != d {
        return Err(r.fail(format!("last layer emits {expected_in} values but header says d = {d}")));
    }
    if classes.saturating_mul(d) > MAX_VALUES {
        return Err(r.fail(format!("head shape {classes}x{d} is too large")));
    }
    let head1 = Matrix::from_row_major(classes, d, r.f64s(classes * d, "head 1")?);
    let head2 = Matrix::from_row_major(classes, d, r.f64s(classes * d, "head 2")?);
    let mut probe = [0u8; 1];
    match r.inner.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => return Err(r.fail("trailing bytes after head 2".into())),
        Err(e) => return Err(r.fail(e.to_string())),
    }
    let model = DualHeadModel { layers, head1, head2 };
    model.validate().map_err(|e| r.fail(e.to_string()))?;
    Ok(model)
}

pub fn save_checkpoint(model: &DualHeadModel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(model, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<DualHeadModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(BufReader::new(file)).map_err(|e| e.context(format!("loading {}", path.display())))
}
