use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::Raster;

/// On-disk sample encoding of a grayscale image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    /// Binary PGM (P5), maxval 255.
    Pgm8,
    /// Binary PGM (P5), maxval 65535, big-endian samples.
    Pgm16,
    /// Grayscale PFM, 32-bit floats, lossless path.
    Pfm,
}

impl ImageFormat {
    /// Guesses the format from the file extension; PGM defaults to 8-bit.
    pub fn from_extension(path: &Path) -> Option<ImageFormat> {
        match path.extension()?.to_str()? {
            "pgm" => Some(ImageFormat::Pgm8),
            "pfm" => Some(ImageFormat::Pfm),
            _ => None,
        }
    }
}

fn malformed(format: &'static str, reason: impl Into<String>) -> Error {
    Error::MalformedFile {
        format,
        reason: reason.into(),
    }
}

/// Pulls the next whitespace-delimited header token, skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(&bytes[start..*pos])
}

fn parse_usize(tok: &[u8], format: &'static str, what: &str) -> Result<usize> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed(format, format!("invalid {what}")))
}

/// Loads a PGM or PFM grayscale image. PGM samples are normalized to
/// [0, 1]; PFM samples are kept as raw floats.
pub fn load_image(path: &Path) -> Result<(Raster, ImageFormat)> {
    let bytes = fs::read(path)?;
    match bytes.get(..2) {
        Some(b"P5") => load_pgm(&bytes),
        Some(b"Pf") => load_pfm(&bytes),
        Some(b"PF") => Err(malformed("PFM", "color PFM is not supported")),
        _ => Err(malformed("image", "unrecognized magic; expected P5 or Pf")),
    }
}

fn load_pgm(bytes: &[u8]) -> Result<(Raster, ImageFormat)> {
    let mut pos = 2;
    let width = parse_usize(
        next_token(bytes, &mut pos).ok_or_else(|| malformed("PGM", "truncated header"))?,
        "PGM",
        "width",
    )?;
    let height = parse_usize(
        next_token(bytes, &mut pos).ok_or_else(|| malformed("PGM", "truncated header"))?,
        "PGM",
        "height",
    )?;
    let maxval = parse_usize(
        next_token(bytes, &mut pos).ok_or_else(|| malformed("PGM", "truncated header"))?,
        "PGM",
        "maxval",
    )?;
    if width == 0 || height == 0 {
        return Err(malformed("PGM", "zero image dimension"));
    }
    let format = match maxval {
        255 => ImageFormat::Pgm8,
        65535 => ImageFormat::Pgm16,
        other => return Err(malformed("PGM", format!("unsupported maxval {other}"))),
    };
    // Exactly one whitespace byte separates the header from the samples.
    pos += 1;
    let sample_bytes = if maxval == 255 { 1 } else { 2 };
    let need = width * height * sample_bytes;
    let data = bytes
        .get(pos..pos + need)
        .ok_or_else(|| malformed("PGM", "truncated sample data"))?;
    let scale = 1.0 / maxval as f64;
    let samples: Vec<f64> = if sample_bytes == 1 {
        data.iter().map(|&b| b as f64 * scale).collect()
    } else {
        data.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    };
    Ok((Raster::from_vec(width, height, samples)?, format))
}

fn load_pfm(bytes: &[u8]) -> Result<(Raster, ImageFormat)> {
    let mut pos = 2;
    let width = parse_usize(
        next_token(bytes, &mut pos).ok_or_else(|| malformed("PFM", "truncated header"))?,
        "PFM",
        "width",
    )?;
    let height = parse_usize(
        next_token(bytes, &mut pos).ok_or_else(|| malformed("PFM", "truncated header"))?,
        "PFM",
        "height",
    )?;
    let scale_tok = next_token(bytes, &mut pos).ok_or_else(|| malformed("PFM", "truncated header"))?;
    let scale: f64 = std::str::from_utf8(scale_tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed("PFM", "invalid scale"))?;
    if width == 0 || height == 0 {
        return Err(malformed("PFM", "zero image dimension"));
    }
    let little_endian = scale < 0.0;
    pos += 1;
    let need = width * height * 4;
    let data = bytes
        .get(pos..pos + need)
        .ok_or_else(|| malformed("PFM", "truncated sample data"))?;
    let mut raster = Raster::zeros(width, height);
    // PFM stores scanlines bottom-to-top.
    for y in 0..height {
        let row = &data[(height - 1 - y) * width * 4..][..width * 4];
        for (x, c) in row.chunks_exact(4).enumerate() {
            let b = [c[0], c[1], c[2], c[3]];
            let v = if little_endian {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            };
            raster[(x, y)] = v as f64;
        }
    }
    Ok((raster, ImageFormat::Pfm))
}

/// Writes a grayscale image. PGM output is clamped to [0, 1] and quantized
/// to the requested bit depth; PFM output is lossless 32-bit floats.
pub fn save_image(path: &Path, raster: &Raster, format: ImageFormat) -> Result<()> {
    let (w, h) = (raster.width(), raster.height());
    let mut out: Vec<u8> = Vec::with_capacity(32 + w * h * 4);
    match format {
        ImageFormat::Pgm8 => {
            out.extend_from_slice(format!("P5\n{w} {h}\n255\n").as_bytes());
            for &v in raster.data() {
                out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        ImageFormat::Pgm16 => {
            out.extend_from_slice(format!("P5\n{w} {h}\n65535\n").as_bytes());
            for &v in raster.data() {
                let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
                out.extend_from_slice(&q.to_be_bytes());
            }
        }
        ImageFormat::Pfm => {
            out.extend_from_slice(format!("Pf\n{w} {h}\n-1.0\n").as_bytes());
            for y in (0..h).rev() {
                for &v in raster.row(y) {
                    out.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_path(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("anisobox-io-{}-{name}", std::process::id()))
    }

    fn ramp(w: usize, h: usize) -> Raster {
        Raster::from_vec(
            w,
            h,
            (0..w * h).map(|i| i as f64 / (w * h - 1) as f64).collect(),
        )
        .unwrap()
    }

    #[test]
    fn pgm8_round_trip_value_identical() {
        let path = temp_path("r8.pgm");
        let img = ramp(7, 5);
        save_image(&path, &img, ImageFormat::Pgm8).unwrap();
        let (back, fmt) = load_image(&path).unwrap();
        assert_eq!(fmt, ImageFormat::Pgm8);
        // Quantize-once fixed point: a second round trip changes nothing.
        save_image(&path, &back, ImageFormat::Pgm8).unwrap();
        let (again, _) = load_image(&path).unwrap();
        assert_eq!(back.data(), again.data());
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn pgm16_round_trip_value_identical() {
        let path = temp_path("r16.pgm");
        let img = ramp(5, 7);
        save_image(&path, &img, ImageFormat::Pgm16).unwrap();
        let (back, fmt) = load_image(&path).unwrap();
        assert_eq!(fmt, ImageFormat::Pgm16);
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-12);
        }
    }

    #[test]
    fn pfm_round_trip_bit_identical() {
        let path = temp_path("r.pfm");
        let mut img = ramp(6, 4);
        img[(2, 1)] = -3.25;
        img[(0, 3)] = 1e6;
        save_image(&path, &img, ImageFormat::Pfm).unwrap();
        let (back, fmt) = load_image(&path).unwrap();
        assert_eq!(fmt, ImageFormat::Pfm);
        let bits: Vec<u32> = img.data().iter().map(|&v| (v as f32).to_bits()).collect();
        let back_bits: Vec<u32> = back.data().iter().map(|&v| (v as f32).to_bits()).collect();
        assert_eq!(bits, back_bits);
        let first = std::fs::read(&path).unwrap();
        save_image(&path, &back, ImageFormat::Pfm).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let path = temp_path("c.pgm");
        std::fs::write(&path, b"P5\n# a comment\n2 1\n# another\n255\n\x00\xff").unwrap();
        let (img, _) = load_image(&path).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0]);
    }

    #[test]
    fn malformed_inputs_are_diagnosed() {
        let path = temp_path("bad.pgm");
        std::fs::write(&path, b"P5\n2 2\n255\n\x00").unwrap();
        match load_image(&path) {
            Err(Error::MalformedFile { format: "PGM", .. }) => {}
            other => panic!("expected malformed PGM, got {other:?}"),
        }
        std::fs::write(&path, b"XX nothing").unwrap();
        assert!(load_image(&path).is_err());
    }
}
