//! Binary parameter files.
//!
//! Kernel bank: magic `STHCKB1`, then `K, k_h, k_w, k_t, c_in` as u32 LE,
//! then `K * c_in * k_t * k_h * k_w` weights in `(k, c, t, h, w)` order and
//! `K` biases, all f64 LE.
//!
//! Classifier head (same conventions): magic `STHCHD1`, `num_classes,
//! feature_len` as u32 LE, class-major weights, then biases.

use std::fs;
use std::path::Path;

use super::{ClassifierHead, KernelSet};
use crate::spectral::KernelShape;
use crate::{Error, Result};

pub const KERNEL_BANK_MAGIC: &[u8; 7] = b"STHCKB1";
pub const HEAD_MAGIC: &[u8; 7] = b"STHCHD1";

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("count {v} exceeds u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], magic: &[u8; 7]) -> Result<Self> {
        if bytes.len() < magic.len() || &bytes[..magic.len()] != magic {
            return Err(Error::Format(format!(
                "bad magic, expected {}",
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(Self {
            bytes,
            pos: magic.len(),
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "truncated file: need {n} bytes at offset {}, have {}",
                    self.pos,
                    self.bytes.len() - self.pos
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn encode_kernels(kernels: &KernelSet) -> Result<Vec<u8>> {
    let s = kernels.shape();
    let mut out = Vec::with_capacity(7 + 20 + 8 * (kernels.weights().len() + kernels.count()));
    out.extend_from_slice(KERNEL_BANK_MAGIC);
    for v in [kernels.count(), s.k_h, s.k_w, s.k_t, s.c_in] {
        put_u32(&mut out, v)?;
    }
    put_f64s(&mut out, kernels.weights());
    put_f64s(&mut out, kernels.biases());
    Ok(out)
}

pub fn decode_kernels(bytes: &[u8]) -> Result<KernelSet> {
    let mut r = Reader::new(bytes, KERNEL_BANK_MAGIC)?;
    let count = r.u32()?;
    let shape = KernelShape::new(r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    if count == 0 || shape.is_empty() {
        return Err(Error::Format(format!(
            "empty kernel bank header: {count} kernels of {shape:?}"
        )));
    }
    let weights = r.f64s(count * shape.len())?;
    let biases = r.f64s(count)?;
    r.finish()?;
    KernelSet::new(shape, weights, biases).map_err(|e| Error::Format(e.to_string()))
}

pub fn encode_head(head: &ClassifierHead) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(7 + 8 + 8 * (head.weights().len() + head.num_classes()));
    out.extend_from_slice(HEAD_MAGIC);
    put_u32(&mut out, head.num_classes())?;
    put_u32(&mut out, head.feature_len())?;
    put_f64s(&mut out, head.weights());
    put_f64s(&mut out, head.bias());
    Ok(out)
}

pub fn decode_head(bytes: &[u8]) -> Result<ClassifierHead> {
    let mut r = Reader::new(bytes, HEAD_MAGIC)?;
    let classes = r.u32()?;
    let len = r.u32()?;
    if classes == 0 || len == 0 {
        return Err(Error::Format("empty classifier head header".into()));
    }
    let weights = r.f64s(classes * len)?;
    let bias = r.f64s(classes)?;
    r.finish()?;
    ClassifierHead::new(len, weights, bias).map_err(|e| Error::Format(e.to_string()))
}

pub fn export_kernels(kernels: &KernelSet, path: &Path) -> Result<()> {
    Ok(fs::write(path, encode_kernels(kernels)?)?)
}

pub fn import_kernels(path: &Path) -> Result<KernelSet> {
    decode_kernels(&fs::read(path)?)
}

pub fn export_head(head: &ClassifierHead, path: &Path) -> Result<()> {
    Ok(fs::write(path, encode_head(head)?)?)
}

pub fn import_head(path: &Path) -> Result<ClassifierHead> {
    decode_head(&fs::read(path)?)
}
