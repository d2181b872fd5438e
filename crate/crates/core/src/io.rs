//! Flat binary files for echoes and images.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic        4 bytes  "CVRD"
//! version      u32      1
//! kind         u32      0 = echo, 1 = complex image, 2 = real image
//! rows         u64      echo: frequencies; image: height
//! cols         u64      echo: angles;      image: width
//! geometry_id  u64
//! data         f64 x rows*cols, row-major; complex samples as (re, im) pairs
//! ```

use std::path::Path;

use num_complex::Complex64;

use crate::echo::EchoMatrix;
use crate::error::{Error, Result};
use crate::image::{ImageComplex, ImageReal};

const MAGIC: &[u8; 4] = b"CVRD";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Echo = 0,
    ComplexImage = 1,
    RealImage = 2,
}

impl FileKind {
    fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Self::Echo),
            1 => Ok(Self::ComplexImage),
            2 => Ok(Self::RealImage),
            _ => Err(Error::Format(format!("unknown file kind {code}"))),
        }
    }
}

/// Any of the three payloads.
#[derive(Debug, Clone, PartialEq)]
pub enum DataFile {
    Echo(EchoMatrix),
    ComplexImage(ImageComplex),
    RealImage(ImageReal),
}

fn encode(kind: FileKind, rows: usize, cols: usize, geometry_id: u64, data: impl Iterator<Item = f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + rows * cols * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(kind as u32).to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    out.extend_from_slice(&geometry_id.to_le_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn complex_parts(values: &[Complex64]) -> impl Iterator<Item = f64> + '_ {
    values.iter().flat_map(|v| [v.re, v.im])
}

pub fn echo_to_bytes(echo: &EchoMatrix) -> Vec<u8> {
    encode(FileKind::Echo, echo.num_freq, echo.num_angle, echo.geometry_id, complex_parts(&echo.values))
}

pub fn complex_image_to_bytes(image: &ImageComplex) -> Vec<u8> {
    encode(FileKind::ComplexImage, image.height, image.width, image.geometry_id, complex_parts(&image.values))
}

pub fn real_image_to_bytes(image: &ImageReal) -> Vec<u8> {
    encode(FileKind::RealImage, image.height, image.width, image.geometry_id, image.values.iter().copied())
}

fn u32_at(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(buf[at..at + 4].try_into().expect("4 bytes"))
}

fn u64_at(buf: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(buf[at..at + 8].try_into().expect("8 bytes"))
}

pub fn from_bytes(buf: &[u8]) -> Result<DataFile> {
    if buf.len() < HEADER_LEN {
        return Err(Error::Format(format!("file is {} bytes, header needs {HEADER_LEN}", buf.len())));
    }
    if &buf[..4] != MAGIC {
        return Err(Error::Format("bad magic, not an echo/image file".into()));
    }
    let version = u32_at(buf, 4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let kind = FileKind::from_code(u32_at(buf, 8))?;
    let rows = usize::try_from(u64_at(buf, 12)).map_err(|_| Error::Format("row count too large".into()))?;
    let cols = usize::try_from(u64_at(buf, 20)).map_err(|_| Error::Format("column count too large".into()))?;
    let geometry_id = u64_at(buf, 28);
    let per = if kind == FileKind::RealImage { 1 } else { 2 };
    let n = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(per))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let body = &buf[HEADER_LEN..];
    if body.len() != n * 8 {
        return Err(Error::Format(format!("expected {} data bytes for {rows}x{cols}, found {}", n * 8, body.len())));
    }
    let floats: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let complex = || floats.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect::<Vec<_>>();
    Ok(match kind {
        FileKind::Echo => DataFile::Echo(EchoMatrix { num_freq: rows, num_angle: cols, values: complex(), geometry_id }),
        FileKind::ComplexImage => {
            DataFile::ComplexImage(ImageComplex { width: cols, height: rows, values: complex(), geometry_id })
        }
        FileKind::RealImage => DataFile::RealImage(ImageReal::from_values(cols, rows, floats, geometry_id)?),
    })
}

pub fn read_file(path: impl AsRef<Path>) -> Result<DataFile> {
    let path = path.as_ref();
    let buf = std::fs::read(path)?;
    from_bytes(&buf).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_echo(path: impl AsRef<Path>, echo: &EchoMatrix) -> Result<()> {
    Ok(std::fs::write(path, echo_to_bytes(echo))?)
}

pub fn write_complex_image(path: impl AsRef<Path>, image: &ImageComplex) -> Result<()> {
    Ok(std::fs::write(path, complex_image_to_bytes(image))?)
}

pub fn write_real_image(path: impl AsRef<Path>, image: &ImageReal) -> Result<()> {
    Ok(std::fs::write(path, real_image_to_bytes(image))?)
}

pub fn read_echo(path: impl AsRef<Path>) -> Result<EchoMatrix> {
    match read_file(path)? {
        DataFile::Echo(e) => Ok(e),
        _ => Err(Error::Format("expected an echo file".into())),
    }
}

/// Reads a real image, or the magnitude of a complex one.
pub fn read_real_image(path: impl AsRef<Path>) -> Result<ImageReal> {
    match read_file(path)? {
        DataFile::RealImage(i) => Ok(i),
        DataFile::ComplexImage(i) => Ok(i.magnitude()),
        DataFile::Echo(_) => Err(Error::Format("expected an image file, found an echo".into())),
    }
}
