//! Visibility and color buffers with binary Netpbm I/O (`P5` / `P6`).

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image sizes differ: {0:?} vs {1:?}")]
    SizeMismatch((usize, usize), (usize, usize)),
    #[error("pixel buffer has {got} entries, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("bad netpbm data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One visibility value in `[0, 1]` per pixel, row-major from the top row.
#[derive(Clone, Debug, PartialEq)]
pub struct VisibilityImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl VisibilityImage {
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            values: vec![value.clamp(0.0, 1.0); width * height],
        }
    }

    /// Values are clamped to `[0, 1]`.
    pub fn from_values(width: usize, height: usize, mut values: Vec<f64>) -> Result<Self, ImageError> {
        if values.len() != width * height {
            return Err(ImageError::Length {
                expected: width * height,
                got: values.len(),
            });
        }
        for v in &mut values {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// 8-bit quantization used by the PGM writer: `round(255 v)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().map(|&v| (255.0 * v).round() as u8).collect()
    }

    pub fn write_pgm(&self, mut out: impl Write) -> io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.to_bytes())
    }

    pub fn read_pgm(input: impl Read) -> Result<Self, ImageError> {
        let (width, height, data) = read_netpbm(input, b"P5", 1)?;
        let values = data.iter().map(|&b| b as f64 / 255.0).collect();
        Ok(Self { width, height, values })
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut w = io::BufWriter::new(std::fs::File::create(path)?);
        self.write_pgm(&mut w)?;
        w.flush()
    }

    pub fn load_pgm(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        Self::read_pgm(io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Linear RGB in `[0, 1]`, row-major from the top row.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self, ImageError> {
        if pixels.len() != width * height {
            return Err(ImageError::Length {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn write_ppm(&self, mut out: impl Write) -> io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .flat_map(|p| p.map(|c| (255.0 * c.clamp(0.0, 1.0)).round() as u8))
            .collect();
        out.write_all(&bytes)
    }

    pub fn save_ppm(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut w = io::BufWriter::new(std::fs::File::create(path)?);
        self.write_ppm(&mut w)?;
        w.flush()
    }
}

/// Parses a binary Netpbm header (comments allowed) and returns the raw
/// 8-bit samples.
fn read_netpbm(mut input: impl Read, magic: &[u8; 2], channels: usize) -> Result<(usize, usize, Vec<u8>), ImageError> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    if buf.len() < 2 || &buf[..2] != magic {
        return Err(ImageError::Format(format!(
            "expected magic {}",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match buf.get(pos) {
                Some(b'#') => {
                    while buf.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while buf.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&buf[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::Format("bad header field".into()))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(ImageError::Format(format!(
            "only maxval 255 is supported, got {maxval}"
        )));
    }
    if !buf.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(ImageError::Format("missing whitespace after header".into()));
    }
    pos += 1;
    let expected = width * height * channels;
    let data = buf
        .get(pos..pos + expected)
        .ok_or_else(|| ImageError::Format(format!("expected {expected} data bytes, got {}", buf.len() - pos)))?;
    Ok((width, height, data.to_vec()))
}
