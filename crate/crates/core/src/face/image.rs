//! 64x64 grayscale face crops, PGM I/O and a synthetic face generator.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::FaceError;
use crate::synth::rng;

pub const FACE_SIDE: usize = 64;
pub const FACE_PIXELS: usize = FACE_SIDE * FACE_SIDE;

/// Row-major grayscale crop with pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceImage {
    pixels: Vec<f64>,
    pub source_id: String,
}

impl FaceImage {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<f64>,
        source_id: impl Into<String>,
    ) -> Result<Self, FaceError> {
        if width != FACE_SIDE || height != FACE_SIDE || pixels.len() != FACE_PIXELS {
            return Err(FaceError::WrongSize { width, height });
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(FaceError::PixelRange(i));
        }
        Ok(Self {
            pixels,
            source_id: source_id.into(),
        })
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Parses binary (P5) or plain (P2) PGM data.
    pub fn from_pgm(data: &[u8], source_id: impl Into<String>) -> Result<Self, FaceError> {
        let mut pos = 0;
        let magic = next_token(data, &mut pos)?;
        let binary = match magic.as_slice() {
            b"P5" => true,
            b"P2" => false,
            _ => return Err(FaceError::Pgm("not a PGM file (expected P2 or P5)".into())),
        };
        let width = parse_num(&next_token(data, &mut pos)?)?;
        let height = parse_num(&next_token(data, &mut pos)?)?;
        let maxval = parse_num(&next_token(data, &mut pos)?)?;
        if maxval == 0 || maxval > 65535 {
            return Err(FaceError::Pgm(format!("maxval {maxval} outside 1..=65535")));
        }
        let count = width
            .checked_mul(height)
            .ok_or_else(|| FaceError::Pgm("dimensions overflow".into()))?;
        let mut raw = Vec::with_capacity(count.min(1 << 20));
        if binary {
            // Exactly one whitespace byte separates the header from the raster.
            pos += 1;
            let bytes = if maxval < 256 { 1 } else { 2 };
            let body = data
                .get(pos..pos + count * bytes)
                .ok_or_else(|| FaceError::Pgm("truncated raster".into()))?;
            if bytes == 1 {
                raw.extend(body.iter().map(|&b| b as usize));
            } else {
                raw.extend(
                    body.chunks_exact(2)
                        .map(|c| u16::from_be_bytes([c[0], c[1]]) as usize),
                );
            }
        } else {
            for _ in 0..count {
                raw.push(parse_num(&next_token(data, &mut pos)?)?);
            }
        }
        if let Some(v) = raw.iter().find(|&&v| v > maxval) {
            return Err(FaceError::Pgm(format!(
                "sample {v} exceeds maxval {maxval}"
            )));
        }
        let pixels = raw.into_iter().map(|v| v as f64 / maxval as f64).collect();
        Self::new(width, height, pixels, source_id)
    }

    pub fn load_pgm(path: &Path) -> Result<Self, FaceError> {
        let data = std::fs::read(path).map_err(|source| FaceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_pgm(&data, path.display().to_string())
    }

    /// Binary PGM with maxval 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{FACE_SIDE} {FACE_SIDE}\n255\n").into_bytes();
        out.extend(self.pixels.iter().map(|p| (p * 255.0).round() as u8));
        out
    }
}

fn next_token(data: &[u8], pos: &mut usize) -> Result<Vec<u8>, FaceError> {
    loop {
        match data.get(*pos) {
            None => return Err(FaceError::Pgm("unexpected end of header".into())),
            Some(b'#') => {
                while let Some(&c) = data.get(*pos) {
                    *pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            }
            Some(c) if c.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
        }
    }
    let start = *pos;
    while data.get(*pos).is_some_and(|c| !c.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(data[start..*pos].to_vec())
}

fn parse_num(tok: &[u8]) -> Result<usize, FaceError> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| FaceError::Pgm(format!("bad number {:?}", String::from_utf8_lossy(tok))))
}

/// Synthetic face for `identity`, take `take`. An identity is a fixed pattern
/// of smooth blobs over a shared head outline; a take adds sensor noise and a
/// brightness/contrast change. Takes of one identity stay close after
/// embedding, different identities do not.
pub fn synthetic_face(identity: u64, take: u64) -> FaceImage {
    let mut r = rng(identity, 500);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..14)
        .map(|_| {
            (
                r.random_range(8.0..56.0),
                r.random_range(8.0..56.0),
                r.random_range(3.0..9.0),
                r.random_range(-0.35..0.35),
            )
        })
        .collect();
    let mut t = rng(identity ^ take.wrapping_mul(0xA24B_AED4_963E_E407), 501);
    let gain = t.random_range(0.9..1.1);
    let offset = t.random_range(-0.05..0.05);
    let mut pixels = Vec::with_capacity(FACE_PIXELS);
    for y in 0..FACE_SIDE {
        for x in 0..FACE_SIDE {
            let (fx, fy) = (x as f64, y as f64);
            let oval = (((fx - 31.5) / 24.0).powi(2) + ((fy - 31.5) / 30.0).powi(2)).min(1.0);
            let mut v = 0.5 + 0.1 * (1.0 - oval);
            for &(bx, by, s, a) in &blobs {
                v += a * (-((fx - bx).powi(2) + (fy - by).powi(2)) / (2.0 * s * s)).exp();
            }
            let n: f64 = StandardNormal.sample(&mut t);
            pixels.push((0.5 + gain * (v - 0.5) + offset + 0.02 * n).clamp(0.0, 1.0));
        }
    }
    FaceImage::new(
        FACE_SIDE,
        FACE_SIDE,
        pixels,
        format!("synthetic:{identity}:{take}"),
    )
    .expect("valid synthetic face")
}

/// Uniform random pixels; the far-from-any-face case.
pub fn random_image(seed: u64) -> FaceImage {
    let mut r = rng(seed, 502);
    let pixels = (0..FACE_PIXELS)
        .map(|_| r.random_range(0.0..=1.0))
        .collect();
    FaceImage::new(FACE_SIDE, FACE_SIDE, pixels, format!("random:{seed}"))
        .expect("valid random image")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_binary_and_plain() {
        let img = synthetic_face(1, 0);
        let back = FaceImage::from_pgm(&img.to_pgm(), "x").unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
        assert_eq!(back.to_pgm(), img.to_pgm());

        let mut plain = String::from("P2\n# comment\n64 64\n15\n");
        for i in 0..FACE_PIXELS {
            plain.push_str(&format!("{} ", i % 16));
        }
        let p = FaceImage::from_pgm(plain.as_bytes(), "plain").unwrap();
        assert_eq!(p.pixels()[15], 1.0);
        assert_eq!(p.pixels()[16], 0.0);
    }

    #[test]
    fn sixteen_bit_raster() {
        let mut data = b"P5 64 64 65535\n".to_vec();
        for i in 0..FACE_PIXELS {
            data.extend(((i * 16) as u16).to_be_bytes());
        }
        let p = FaceImage::from_pgm(&data, "16").unwrap();
        assert_eq!(p.pixels()[1], 16.0 / 65535.0);
    }

    #[test]
    fn rejects_bad_pgm() {
        assert!(matches!(
            FaceImage::from_pgm(b"P5\n32 32\n255\n", "x"),
            Err(FaceError::Pgm(_))
        ));
        let mut small = b"P5\n32 32\n255\n".to_vec();
        small.extend(vec![0u8; 32 * 32]);
        assert!(matches!(
            FaceImage::from_pgm(&small, "x"),
            Err(FaceError::WrongSize {
                width: 32,
                height: 32
            })
        ));
        assert!(matches!(
            FaceImage::from_pgm(b"P6\n64 64\n255\n", "x"),
            Err(FaceError::Pgm(_))
        ));
        assert!(matches!(
            FaceImage::from_pgm(b"P2 64 64 10 11", "x"),
            Err(FaceError::Pgm(_))
        ));
        assert!(matches!(
            FaceImage::new(64, 64, vec![1.5; FACE_PIXELS], "x"),
            Err(FaceError::PixelRange(0))
        ));
    }
}
