//! Rank-3 float tensors (channels x height x width) and their file formats.
//!
//! The flat layout is channel-major row-major: `index = (c * H + y) * W + x`.
//! Every dense oracle in the crate relies on this ordering, so it is part of
//! the public contract rather than an implementation detail.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SsdError};

/// Shape of a rank-3 tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl TensorShape {
    pub fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    /// Square spatial shape at `res` pixels per side.
    pub fn square(channels: usize, res: usize) -> Self {
        Self::new(channels, res, res)
    }

    pub fn numel(&self) -> usize {
        self.channels * self.height * self.width
    }
}

impl std::fmt::Display for TensorShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

/// Rank-3 tensor of f64 values, channel-major row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: TensorShape,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: TensorShape) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.numel()],
        }
    }

    pub fn from_vec(shape: TensorShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.numel() {
            return Err(SsdError::Shape(format!(
                "expected {} elements for shape {shape}, got {}",
                shape.numel(),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn constant(shape: TensorShape, value: f64) -> Self {
        Self {
            shape,
            data: vec![value; shape.numel()],
        }
    }

    /// Standard-normal sample of the given shape.
    pub fn standard_normal<R: Rng + ?Sized>(shape: TensorShape, rng: &mut R) -> Self {
        let data = (0..shape.numel())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self { shape, data }
    }

    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.shape.height + y) * self.shape.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.shape.height + y) * self.shape.width + x] = v;
    }

    pub fn scale(&self, s: f64) -> Tensor {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Tensor {
            shape: self.shape,
            data,
        })
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Tensor {
            shape: self.shape,
            data,
        })
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Tensor, s: f64) -> Result<Tensor> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + s * b)
            .collect();
        Ok(Tensor {
            shape: self.shape,
            data,
        })
    }

    pub fn dot(&self, other: &Tensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Per-channel mean over the spatial dimensions.
    pub fn channel_means(&self) -> Vec<f64> {
        let plane = self.shape.height * self.shape.width;
        (0..self.shape.channels)
            .map(|c| self.data[c * plane..(c + 1) * plane].iter().sum::<f64>() / plane as f64)
            .collect()
    }

    /// Per-channel population variance over the spatial dimensions.
    pub fn channel_variances(&self) -> Vec<f64> {
        let plane = self.shape.height * self.shape.width;
        let means = self.channel_means();
        (0..self.shape.channels)
            .map(|c| {
                self.data[c * plane..(c + 1) * plane]
                    .iter()
                    .map(|v| (v - means[c]) * (v - means[c]))
                    .sum::<f64>()
                    / plane as f64
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> Tensor {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|v| v.clamp(lo, hi)).collect(),
        }
    }

    fn check_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(SsdError::Shape(format!(
                "{} vs {}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }
}

const STF_MAGIC: &[u8; 4] = b"STF1";

/// Serializes a tensor in the STF format: magic "STF1", rank u8, dims u32
/// little-endian, payload f32 little-endian in flat order.
pub fn write_stf<W: Write>(w: &mut W, tensor: &Tensor) -> Result<()> {
    w.write_all(STF_MAGIC)?;
    w.write_all(&[3u8])?;
    let s = tensor.shape();
    for dim in [s.channels, s.height, s.width] {
        let dim = u32::try_from(dim)
            .map_err(|_| SsdError::Format(format!("dimension {dim} exceeds u32")))?;
        w.write_all(&dim.to_le_bytes())?;
    }
    for v in tensor.data() {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_stf<R: Read>(r: &mut R) -> Result<Tensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != STF_MAGIC {
        return Err(SsdError::Format("missing STF1 magic".into()));
    }
    let mut rank = [0u8; 1];
    r.read_exact(&mut rank)?;
    if rank[0] != 3 {
        return Err(SsdError::Format(format!(
            "only rank-3 tensors supported, got rank {}",
            rank[0]
        )));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)?;
        *d = u32::from_le_bytes(buf) as usize;
    }
    let shape = TensorShape::new(dims[0], dims[1], dims[2]);
    let mut data = Vec::with_capacity(shape.numel());
    for _ in 0..shape.numel() {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)?;
        data.push(f32::from_le_bytes(buf) as f64);
    }
    Tensor::from_vec(shape, data)
}

pub fn write_stf_file<P: AsRef<Path>>(path: P, tensor: &Tensor) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_stf(&mut f, tensor)
}

pub fn read_stf_file<P: AsRef<Path>>(path: P) -> Result<Tensor> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_stf(&mut f)
}

/// Maps a value in [-1, 1] to an 8-bit level, rounding half to even.
fn to_byte(v: f64) -> u8 {
    let u = (v.clamp(-1.0, 1.0) + 1.0) / 2.0 * 255.0;
    u.round_ties_even() as u8
}

/// Writes a 1-channel tensor as binary PGM (P5) or a 3-channel tensor as
/// binary PPM (P6). For inspection only; never read back.
pub fn write_pnm<W: Write>(w: &mut W, tensor: &Tensor) -> Result<()> {
    let s = tensor.shape();
    match s.channels {
        1 => {
            write!(w, "P5\n{} {}\n255\n", s.width, s.height)?;
            let bytes: Vec<u8> = tensor.data().iter().map(|&v| to_byte(v)).collect();
            w.write_all(&bytes)?;
        }
        3 => {
            write!(w, "P6\n{} {}\n255\n", s.width, s.height)?;
            let mut bytes = Vec::with_capacity(s.numel());
            for y in 0..s.height {
                for x in 0..s.width {
                    for c in 0..3 {
                        bytes.push(to_byte(tensor.at(c, y, x)));
                    }
                }
            }
            w.write_all(&bytes)?;
        }
        n => {
            return Err(SsdError::Format(format!(
                "PNM export needs 1 or 3 channels, got {n}"
            )))
        }
    }
    Ok(())
}

pub fn write_pnm_file<P: AsRef<Path>>(path: P, tensor: &Tensor) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_pnm(&mut f, tensor)
}

/// File extension matching what `write_pnm` will emit for this tensor.
pub fn pnm_extension(tensor: &Tensor) -> &'static str {
    if tensor.shape().channels == 3 {
        "ppm"
    } else {
        "pgm"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_order_is_channel_major_row_major() {
        let mut t = Tensor::zeros(TensorShape::new(2, 3, 4));
        t.set(1, 2, 3, 7.0);
        assert_eq!(t.data()[(3 + 2) * 4 + 3], 7.0);
    }

    #[test]
    fn stf_round_trip_is_bit_exact() {
        let shape = TensorShape::new(3, 4, 5);
        let data: Vec<f64> = (0..shape.numel())
            .map(|i| (i as f64 - 30.0) * 0.173 + 0.25)
            .collect();
        let t = Tensor::from_vec(shape, data).unwrap();

        let mut first = Vec::new();
        write_stf(&mut first, &t).unwrap();
        let back = read_stf(&mut first.as_slice()).unwrap();
        let mut second = Vec::new();
        write_stf(&mut second, &back).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn stf_rejects_bad_magic() {
        let bytes = b"NOPE\x03";
        assert!(read_stf(&mut &bytes[..]).is_err());
    }

    #[test]
    fn byte_mapping_rounds_half_to_even() {
        // (v+1)/2*255 = 127.5 exactly at v = 0 -> rounds to 128? ties-even picks 128.
        assert_eq!(to_byte(0.0), 128);
        assert_eq!(to_byte(-1.0), 0);
        assert_eq!(to_byte(1.0), 255);
        assert_eq!(to_byte(-3.0), 0);
        assert_eq!(to_byte(3.0), 255);
    }

    #[test]
    fn pnm_headers() {
        let t = Tensor::zeros(TensorShape::new(1, 2, 3));
        let mut buf = Vec::new();
        write_pnm(&mut buf, &t).unwrap();
        assert!(buf.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(buf.len(), 11 + 6);

        let t = Tensor::zeros(TensorShape::new(3, 2, 2));
        let mut buf = Vec::new();
        write_pnm(&mut buf, &t).unwrap();
        assert!(buf.starts_with(b"P6\n2 2\n255\n"));
    }
}
