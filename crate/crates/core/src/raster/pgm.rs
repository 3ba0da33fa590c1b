//! Binary netpbm graymap (P5) with 8-bit samples.

use std::path::Path;

use super::{BinaryRaster, GrayRaster};
use crate::error::{Error, Result};

/// Decodes a P5 image. Header comments are accepted; `maxval` must be in
/// 1..=255 and every sample must be <= `maxval`. Samples are kept verbatim.
pub fn decode(bytes: &[u8]) -> Result<GrayRaster> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::parse(1, "not a binary PGM (missing P5 magic)"));
    }
    let width = parse_uint(next_token(bytes, &mut pos)?, "width")?;
    let height = parse_uint(next_token(bytes, &mut pos)?, "height")?;
    let maxval = parse_uint(next_token(bytes, &mut pos)?, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::parse(
            line_of(bytes, pos),
            format!("unsupported maxval {maxval} (8-bit only)"),
        ));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::parse(line_of(bytes, pos), "missing raster separator")),
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::parse(line_of(bytes, pos), "image dimensions overflow"))?;
    let body = &bytes[pos..];
    if body.len() != n {
        return Err(Error::parse(
            line_of(bytes, pos),
            format!("expected {n} raster bytes, found {}", body.len()),
        ));
    }
    if let Some(&v) = body.iter().find(|&&v| v as usize > maxval) {
        return Err(Error::parse(
            line_of(bytes, pos),
            format!("sample {v} exceeds maxval {maxval}"),
        ));
    }
    GrayRaster::new(width, height, body.to_vec())
}

/// Encodes with `maxval` 255 and a minimal header.
pub fn encode(img: &GrayRaster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn read(path: &Path) -> Result<GrayRaster> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn write(path: &Path, img: &GrayRaster) -> Result<()> {
    std::fs::write(path, encode(img)).map_err(|e| Error::io(path, e))
}

/// Masks are stored as graymaps with values {0, 255}.
pub fn write_mask(path: &Path, mask: &BinaryRaster) -> Result<()> {
    write(path, &mask.to_gray())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        match bytes.get(*pos) {
            None => return Err(Error::parse(line_of(bytes, *pos), "truncated header")),
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
        }
    }
    let start = *pos;
    while let Some(&b) = bytes.get(*pos) {
        if b.is_ascii_whitespace() || b == b'#' {
            break;
        }
        *pos += 1;
    }
    Ok(&bytes[start..*pos])
}

fn parse_uint(tok: &[u8], what: &str) -> Result<usize> {
    std::str::from_utf8(tok)
        .ok()
        .filter(|s| !s.is_empty() && s.len() <= 9 && s.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::parse(1, format!("bad {what} field")))
}

fn line_of(bytes: &[u8], pos: usize) -> usize {
    1 + bytes[..pos.min(bytes.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
}
