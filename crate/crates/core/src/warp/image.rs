//! 8-bit raster images with binary PPM/PGM (`P6`/`P5`) input and output.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImageError {
    #[error("unsupported magic number (expected P5 or P6)")]
    BadMagic,
    #[error("malformed header: {0}")]
    BadHeader(&'static str),
    #[error("maxval {0} outside 1..=255")]
    UnsupportedMaxval(u32),
    #[error("image dimensions {width}×{height} are zero or too large")]
    BadDimensions { width: usize, height: usize },
    #[error("pixel data truncated: need {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },
    #[error("buffer holds {found} samples, expected {expected}")]
    BufferLength { expected: usize, found: usize },
    #[error("channel count must be 1 or 3, got {0}")]
    Channels(usize),
}

/// Upper bound on `width · height · channels` accepted anywhere.
pub const MAX_SAMPLES: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

fn sample_count(width: usize, height: usize, channels: usize) -> Result<usize, ImageError> {
    if channels != 1 && channels != 3 {
        return Err(ImageError::Channels(channels));
    }
    width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .filter(|&n| n > 0 && n <= MAX_SAMPLES)
        .ok_or(ImageError::BadDimensions { width, height })
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        let expected = sample_count(width, height, channels)?;
        if data.len() != expected {
            return Err(ImageError::BufferLength {
                expected,
                found: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// All-black image.
    pub fn blank(width: usize, height: usize, channels: usize) -> Result<Self, ImageError> {
        let n = sample_count(width, height, channels)?;
        Self::new(width, height, channels, vec![0; n])
    }

    /// RGB test card: a grid of dark lines every `cell` pixels over a
    /// red/green coordinate gradient.
    pub fn grid_pattern(width: usize, height: usize, cell: usize) -> Result<Self, ImageError> {
        let mut img = Self::blank(width, height, 3)?;
        let cell = cell.max(1);
        for y in 0..height {
            for x in 0..width {
                let px = if x % cell == 0 || y % cell == 0 {
                    [20, 20, 20]
                } else {
                    [(255 * x / width.max(1)) as u8, (255 * y / height.max(1)) as u8, 160]
                };
                img.pixel_mut(x, y).copy_from_slice(&px);
            }
        }
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// Decodes binary `P5` (gray) or `P6` (RGB). Samples with `maxval < 255`
    /// are rescaled to the full 8-bit range.
    pub fn decode_ppm(bytes: &[u8]) -> Result<Self, ImageError> {
        let channels = match bytes.get(..2) {
            Some(b"P5") => 1,
            Some(b"P6") => 3,
            _ => return Err(ImageError::BadMagic),
        };
        let mut pos = 2;
        let mut fields = [0u32; 3];
        for field in &mut fields {
            skip_space_and_comments(bytes, &mut pos)?;
            *field = read_decimal(bytes, &mut pos)?;
        }
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => return Err(ImageError::BadHeader("missing whitespace after maxval")),
        }
        let [width, height, maxval] = fields;
        if maxval == 0 || maxval > 255 {
            return Err(ImageError::UnsupportedMaxval(maxval));
        }
        let (width, height) = (width as usize, height as usize);
        let needed = sample_count(width, height, channels)?;
        let body = &bytes[pos..];
        if body.len() < needed {
            return Err(ImageError::Truncated {
                needed,
                found: body.len(),
            });
        }
        let data = if maxval == 255 {
            body[..needed].to_vec()
        } else {
            body[..needed]
                .iter()
                .map(|&v| ((u32::from(v).min(maxval) * 255 + maxval / 2) / maxval) as u8)
                .collect()
        };
        Self::new(width, height, channels, data)
    }

    pub fn encode_ppm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn read_ppm(path: impl AsRef<Path>) -> Result<Self, super::WarpError> {
        let bytes = std::fs::read(path)?;
        Ok(Self::decode_ppm(&bytes)?)
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<(), super::WarpError> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(&self.encode_ppm())?;
        file.flush()?;
        Ok(())
    }
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) -> Result<(), ImageError> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(_) => return Ok(()),
            None => return Err(ImageError::BadHeader("unexpected end of header")),
        }
    }
}

fn read_decimal(bytes: &[u8], pos: &mut usize) -> Result<u32, ImageError> {
    let start = *pos;
    let mut value: u32 = 0;
    while let Some(&b) = bytes.get(*pos) {
        if !b.is_ascii_digit() {
            break;
        }
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add(u32::from(b - b'0')))
            .ok_or(ImageError::BadHeader("number too large"))?;
        *pos += 1;
    }
    if *pos == start {
        return Err(ImageError::BadHeader("expected a decimal number"));
    }
    Ok(value)
}
