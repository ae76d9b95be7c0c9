//! Bit-exact file formats for tensors, masks, and images.
//!
//! `DTF1` (dense tensor): magic `DTF1`, order as one byte, dims as u64
//! little-endian, then the entries as f64 little-endian in first-index-fastest
//! order. `DMF1` (mask): magic `DMF1`, order byte, dims as u64 LE, observed
//! count as u64 LE, then the bits packed LSB-first in the same linear order,
//! zero-padded to a byte boundary. Images use binary PPM (P6) with 8-bit
//! channels, mapped to an `H x W x 3` tensor scaled to `[0, 1]`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::tensor::{DenseTensor, MAX_MODES};

const TENSOR_MAGIC: [u8; 4] = *b"DTF1";
const MASK_MAGIC: [u8; 4] = *b"DMF1";

fn read_exact_or_truncated(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated(what.to_string())
        } else {
            Error::Io(e)
        }
    })
}

fn read_header(r: &mut impl Read, magic: [u8; 4]) -> Result<Vec<usize>> {
    let mut found = [0u8; 4];
    read_exact_or_truncated(r, &mut found, "magic")?;
    if found != magic {
        return Err(Error::MagicMismatch {
            expected: magic,
            found,
        });
    }
    let mut n = [0u8; 1];
    read_exact_or_truncated(r, &mut n, "mode count")?;
    let n = n[0] as usize;
    if n == 0 || n > MAX_MODES {
        return Err(Error::DimOverflow(format!(
            "file declares {n} modes, supported range is 1..={MAX_MODES}"
        )));
    }
    let mut dims = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        read_exact_or_truncated(r, &mut b, "dimension")?;
        let d = u64::from_le_bytes(b);
        if d == 0 || d > usize::MAX as u64 {
            return Err(Error::DimOverflow(format!("dimension {d} out of range")));
        }
        dims.push(d as usize);
    }
    Ok(dims)
}

fn write_header(w: &mut impl Write, magic: [u8; 4], dims: &[usize]) -> Result<()> {
    w.write_all(&magic)?;
    w.write_all(&[dims.len() as u8])?;
    for &d in dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    Ok(())
}

pub fn write_tensor(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, TENSOR_MAGIC, t.dims())?;
    for &v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let mut r = BufReader::new(File::open(path)?);
    let dims = read_header(&mut r, TENSOR_MAGIC)?;
    let total: usize = dims.iter().product();
    let mut data = Vec::with_capacity(total);
    let mut b = [0u8; 8];
    for _ in 0..total {
        read_exact_or_truncated(&mut r, &mut b, "tensor payload")?;
        data.push(f64::from_le_bytes(b));
    }
    DenseTensor::from_vec(&dims, data)
}

pub fn write_mask(m: &ObservationMask, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, MASK_MAGIC, m.dims())?;
    w.write_all(&(m.observed_count() as u64).to_le_bytes())?;
    let nbytes = m.len().div_ceil(8);
    let mut bytes = vec![0u8; nbytes];
    for (blk, &word) in m.blocks().iter().enumerate() {
        for off in 0..8 {
            let at = blk * 8 + off;
            if at < nbytes {
                bytes[at] = (word >> (off * 8)) as u8;
            }
        }
    }
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<ObservationMask> {
    let mut r = BufReader::new(File::open(path)?);
    let dims = read_header(&mut r, MASK_MAGIC)?;
    let mut b = [0u8; 8];
    read_exact_or_truncated(&mut r, &mut b, "observed count")?;
    let declared = u64::from_le_bytes(b) as usize;
    let total: usize = dims.iter().product();
    let nbytes = total.div_ceil(8);
    let mut bytes = vec![0u8; nbytes];
    read_exact_or_truncated(&mut r, &mut bytes, "mask payload")?;
    let mask = ObservationMask::from_fn(&dims, |i| bytes[i / 8] >> (i % 8) & 1 == 1)?;
    if mask.observed_count() != declared {
        return Err(Error::Format(format!(
            "mask popcount {} disagrees with recorded count {declared}",
            mask.observed_count()
        )));
    }
    Ok(mask)
}

/// Mark entries missing when they equal `sentinel` or are non-finite. A NaN
/// sentinel means "non-finite entries only".
pub fn derive_mask_from_sentinel(t: &DenseTensor, sentinel: f64) -> Result<ObservationMask> {
    let mask = ObservationMask::from_fn(t.dims(), |i| {
        let v = t.data()[i];
        v.is_finite() && !(sentinel.is_finite() && v == sentinel)
    })?;
    if mask.observed_count() == 0 {
        return Err(Error::EmptyObservations);
    }
    Ok(mask)
}

fn ppm_token(r: &mut impl Read) -> Result<Vec<u8>> {
    // skip whitespace and '#' comments, then collect one token
    let mut tok = Vec::new();
    let mut b = [0u8; 1];
    loop {
        read_exact_or_truncated(r, &mut b, "PPM header")?;
        match b[0] {
            b'#' => loop {
                read_exact_or_truncated(r, &mut b, "PPM comment")?;
                if b[0] == b'\n' {
                    break;
                }
            },
            c if c.is_ascii_whitespace() => {
                if !tok.is_empty() {
                    return Ok(tok);
                }
            }
            c => tok.push(c),
        }
    }
}

fn ppm_number(r: &mut impl Read, what: &str) -> Result<usize> {
    let tok = ppm_token(r)?;
    std::str::from_utf8(&tok)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::Format(format!("malformed PPM {what}")))
}

/// Read a binary PPM (P6, 8-bit) into an `H x W x 3` tensor scaled to `[0, 1]`.
pub fn read_image_ppm(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let mut r = BufReader::new(File::open(path)?);
    let magic = ppm_token(&mut r)?;
    if magic != b"P6" {
        return Err(Error::Format(format!(
            "unsupported PPM magic {:?}, only binary P6 is handled",
            String::from_utf8_lossy(&magic)
        )));
    }
    let width = ppm_number(&mut r, "width")?;
    let height = ppm_number(&mut r, "height")?;
    let maxval = ppm_number(&mut r, "maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!(
            "unsupported PPM maxval {maxval}, expected 255"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::Format("degenerate PPM size".into()));
    }
    let mut raw = vec![0u8; width * height * 3];
    read_exact_or_truncated(&mut r, &mut raw, "PPM pixels")?;
    let mut t = DenseTensor::zeros(&[height, width, 3])?;
    for row in 0..height {
        for col in 0..width {
            for ch in 0..3 {
                let v = raw[(row * width + col) * 3 + ch] as f64 / 255.0;
                t.set(&[row, col, ch], v);
            }
        }
    }
    Ok(t)
}

/// Write an `H x W x 3` tensor as binary PPM, clamping to `[0, 1]` and
/// rounding each channel to `0..=255`.
pub fn write_image_ppm(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    if t.order() != 3 || t.dims()[2] != 3 {
        return Err(Error::ShapeMismatch(format!(
            "PPM output needs an H x W x 3 tensor, got {:?}",
            t.dims()
        )));
    }
    let (height, width) = (t.dims()[0], t.dims()[1]);
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P6\n{width} {height}\n255\n")?;
    let mut raw = Vec::with_capacity(width * height * 3);
    for row in 0..height {
        for col in 0..width {
            for ch in 0..3 {
                let v = t.get(&[row, col, ch]).clamp(0.0, 1.0);
                raw.push((v * 255.0).round() as u8);
            }
        }
    }
    w.write_all(&raw)?;
    w.flush()?;
    Ok(())
}
