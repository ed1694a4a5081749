//! Output plumbing: lossless raw payloads with a fixed header, content
//! hashes, palettes, PNG/PPM images, CSV tables and JSON sidecars.

use crate::error::{Error, Result};
use crate::escape::{Grid, PointClass};
use crate::lavaurs::{HopResult, LavaursPixel};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

pub const RAW_MAGIC: [u8; 8] = *b"IMPLRAW1";
pub const RAW_HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PayloadKind {
    /// Real values (Green function, distances).
    F64,
    /// Tri-state or class codes.
    U8,
    /// Band or hop indices.
    U32,
}

impl PayloadKind {
    fn code(self) -> u32 {
        match self {
            PayloadKind::F64 => 1,
            PayloadKind::U8 => 2,
            PayloadKind::U32 => 3,
        }
    }

    fn from_code(c: u32) -> Option<Self> {
        match c {
            1 => Some(PayloadKind::F64),
            2 => Some(PayloadKind::U8),
            3 => Some(PayloadKind::U32),
            _ => None,
        }
    }

    pub fn elem_size(self) -> usize {
        match self {
            PayloadKind::F64 => 8,
            PayloadKind::U8 => 1,
            PayloadKind::U32 => 4,
        }
    }
}

/// Header (magic, width, height, kind, element size, 8 reserved bytes) then
/// little-endian elements in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPayload {
    pub width: usize,
    pub height: usize,
    pub kind: PayloadKind,
    pub bytes: Vec<u8>,
}

fn header(width: usize, height: usize, kind: PayloadKind) -> Vec<u8> {
    let mut h = Vec::with_capacity(RAW_HEADER_LEN);
    h.extend_from_slice(&RAW_MAGIC);
    h.extend_from_slice(&(width as u32).to_le_bytes());
    h.extend_from_slice(&(height as u32).to_le_bytes());
    h.extend_from_slice(&kind.code().to_le_bytes());
    h.extend_from_slice(&(kind.elem_size() as u32).to_le_bytes());
    h.extend_from_slice(&[0u8; 8]);
    h
}

impl RawPayload {
    pub fn from_f64(g: &Grid<f64>) -> Self {
        let mut bytes = header(g.width, g.height, PayloadKind::F64);
        for v in &g.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        RawPayload { width: g.width, height: g.height, kind: PayloadKind::F64, bytes }
    }

    pub fn from_u8(width: usize, height: usize, data: &[u8]) -> Self {
        let mut bytes = header(width, height, PayloadKind::U8);
        bytes.extend_from_slice(data);
        RawPayload { width, height, kind: PayloadKind::U8, bytes }
    }

    pub fn from_u32(width: usize, height: usize, data: &[u32]) -> Self {
        let mut bytes = header(width, height, PayloadKind::U32);
        for v in data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        RawPayload { width, height, kind: PayloadKind::U32, bytes }
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::InvalidParams(format!("raw payload: {m}"));
        if bytes.len() < RAW_HEADER_LEN || bytes[..8] != RAW_MAGIC {
            return Err(bad("missing magic"));
        }
        let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap());
        let (w, h) = (word(8) as usize, word(12) as usize);
        let kind = PayloadKind::from_code(word(16)).ok_or_else(|| bad("unknown kind"))?;
        if word(20) as usize != kind.elem_size() || bytes.len() != RAW_HEADER_LEN + w * h * kind.elem_size() {
            return Err(bad("length mismatch"));
        }
        Ok(RawPayload { width: w, height: h, kind, bytes: bytes.to_vec() })
    }

    pub fn data(&self) -> &[u8] {
        &self.bytes[RAW_HEADER_LEN..]
    }

    pub fn to_f64(&self) -> Option<Vec<f64>> {
        (self.kind == PayloadKind::F64)
            .then(|| self.data().chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn sha256(&self) -> String {
        sha256_hex(&self.bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.bytes).map_err(io)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

pub type Rgb = [u8; 3];

pub const GRAY: Rgb = [128, 128, 128];
pub const BLACK: Rgb = [0, 0, 0];
pub const WHITE: Rgb = [255, 255, 255];
/// Diagnostic colour for unresolved pixels.
pub const MAGENTA: Rgb = [230, 0, 200];

/// Log-banded palette for positive Green values, black on K+.
pub fn green_color(g: f64) -> Rgb {
    if g <= 0.0 || !g.is_finite() {
        return BLACK;
    }
    let band = (-(g.log2()) * 2.0).floor() as i64;
    const BANDS: [Rgb; 6] =
        [[250, 220, 90], [240, 140, 60], [200, 70, 80], [120, 60, 150], [60, 110, 200], [90, 190, 210]];
    BANDS[band.rem_euclid(BANDS.len() as i64) as usize]
}

pub fn class_color(c: &PointClass) -> Rgb {
    match c {
        PointClass::Escaped(_) => GRAY,
        PointClass::AttractedToO(_) => [40, 40, 90],
        PointClass::BoundedOther => BLACK,
    }
}

pub fn lavaurs_color(p: &LavaursPixel) -> Rgb {
    match p {
        LavaursPixel::Gray => GRAY,
        LavaursPixel::Black => BLACK,
        LavaursPixel::White => WHITE,
        LavaursPixel::Indeterminate => MAGENTA,
    }
}

/// Tri-state colours with white shaded by the escape hop so chains stay visible.
pub fn hop_color(h: &HopResult) -> Rgb {
    match h {
        HopResult::EscapedAtHop(0) => GRAY,
        HopResult::EscapedAtHop(n) => {
            let v = 255u8.saturating_sub(((*n - 1) * 24).min(160) as u8);
            [v, v, 255]
        }
        HopResult::Indeterminate(_) => MAGENTA,
        _ => BLACK,
    }
}

/// Two-way integer-level bands of a complex value.
pub fn band_color(z: Option<crate::scalar::C64>) -> Rgb {
    match z {
        None => [200, 30, 30],
        Some(z) => {
            let a = z.re.floor().rem_euclid(2.0) as u8;
            let b = z.im.floor().rem_euclid(2.0) as u8;
            match (a, b) {
                (0, 0) => [240, 240, 240],
                (1, 0) => [150, 180, 230],
                (0, 1) => [230, 190, 140],
                _ => [90, 90, 120],
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ImageFormat {
    Png,
    Ppm,
}

impl std::str::FromStr for ImageFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "png" => Ok(ImageFormat::Png),
            "ppm" => Ok(ImageFormat::Ppm),
            _ => Err(Error::InvalidParams(format!("unknown image format {s}"))),
        }
    }
}

pub fn render<T, F: Fn(&T) -> Rgb>(g: &Grid<T>, color: F) -> Vec<u8> {
    g.data.iter().flat_map(color).collect()
}

pub fn write_image(path: &Path, width: usize, height: usize, rgb: &[u8], format: ImageFormat) -> Result<()> {
    if rgb.len() != width * height * 3 {
        return Err(Error::InvalidParams("image buffer size mismatch".into()));
    }
    match format {
        ImageFormat::Png => {
            image::save_buffer(path, rgb, width as u32, height as u32, image::ColorType::Rgb8).map_err(io)
        }
        ImageFormat::Ppm => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
            write!(f, "P6\n{width} {height}\n255\n").map_err(io)?;
            f.write_all(rgb).map_err(io)?;
            f.flush().map_err(io)
        }
    }
}

pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<&str> = r.iter().map(|s| s.as_ref()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io)
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(io)?;
    std::fs::write(path, s + "\n").map_err(io)
}

/// Sidecar record for an image job.
pub fn sidecar(job: &str, config: Value, payload: &RawPayload, extra: Value) -> Value {
    serde_json::json!({
        "job": job,
        "config": config,
        "width": payload.width,
        "height": payload.height,
        "payload_kind": payload.kind,
        "payload_sha256": payload.sha256(),
        "extra": extra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_roundtrip_and_header() {
        let g = Grid { width: 3, height: 2, data: vec![0.0, 1.5, -2.0, 1e300, 5e-324, 7.0] };
        let p = RawPayload::from_f64(&g);
        assert_eq!(p.bytes.len(), 32 + 48);
        assert_eq!(&p.bytes[..8], b"IMPLRAW1");
        let q = RawPayload::parse(&p.bytes).unwrap();
        assert_eq!(q.to_f64().unwrap(), g.data);
        assert_eq!(q.sha256(), p.sha256());
        assert!(RawPayload::parse(&p.bytes[..40]).is_err());
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn images_write() {
        let dir = tempfile::tempdir().unwrap();
        let rgb = vec![10u8; 2 * 2 * 3];
        let ppm = dir.path().join("a.ppm");
        write_image(&ppm, 2, 2, &rgb, ImageFormat::Ppm).unwrap();
        let bytes = std::fs::read(&ppm).unwrap();
        assert!(bytes.starts_with(b"P6\n2 2\n255\n"));
        write_image(&dir.path().join("a.png"), 2, 2, &rgb, ImageFormat::Png).unwrap();
        assert!(write_image(&ppm, 3, 2, &rgb, ImageFormat::Ppm).is_err());
    }

    #[test]
    fn green_palette_black_on_kplus() {
        assert_eq!(green_color(0.0), BLACK);
        assert_ne!(green_color(0.3), BLACK);
    }
}
