//! 8-bit grayscale rasters: binary PGM (P5) read/write and PNG read.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::{BinaryMask, Error, GrayImage, Result};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Decoded 8-bit single-channel raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gray8 {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

pub fn decode_gray8(bytes: &[u8]) -> Result<Gray8> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else {
        Err(Error::UnsupportedFormat(
            "expected binary PGM (P5) or PNG".into(),
        ))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Gray8> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments between header tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Decode("malformed PGM header".into()))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval {maxval}, only 8-bit is supported"
        )));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Decode("malformed PGM header".into()));
    }
    pos += 1;
    let n = width * height;
    let body = bytes
        .get(pos..pos + n)
        .ok_or_else(|| Error::Decode(format!("PGM body shorter than {n} bytes")))?;
    Ok(Gray8 {
        width,
        height,
        pixels: body.to_vec(),
    })
}

fn decode_png(bytes: &[u8]) -> Result<Gray8> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Decode(format!("png: {e}")))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "PNG must be 8-bit grayscale, got {:?} at {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Decode("png: image too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Decode(format!("png: {e}")))?;
    let stride = frame.line_size;
    let pixels = buf
        .chunks(stride)
        .take(height)
        .flat_map(|row| &row[..width])
        .copied()
        .collect();
    Ok(Gray8 {
        width,
        height,
        pixels,
    })
}

pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads a mask; any pixel above zero is foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let g = decode_gray8(&read(path.as_ref())?)?;
    BinaryMask::new(g.width, g.height, g.pixels.iter().map(|&v| v > 0).collect())
}

/// Writes a mask as PGM with values {0, 255}.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &mask_to_pgm(mask))
}

pub fn mask_to_pgm(mask: &BinaryMask) -> Vec<u8> {
    let px: Vec<u8> = mask
        .bits()
        .iter()
        .map(|&b| if b { 255 } else { 0 })
        .collect();
    encode_pgm(mask.width(), mask.height(), &px)
}

/// Loads an 8-bit grayscale image scaled to `[0, 1]`.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let g = decode_gray8(&read(path.as_ref())?)?;
    GrayImage::new(
        g.width,
        g.height,
        g.pixels.iter().map(|&v| v as f64 / 255.0).collect(),
    )
}

/// Writes an image as 8-bit PGM, rounding to the nearest level.
pub fn save_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let px: Vec<u8> = img
        .data()
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    write(path.as_ref(), &encode_pgm(img.width(), img.height(), &px))
}
