use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::RenderError;

/// 8-bit RGB image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; (width * height * 3) as usize],
        }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RenderError> {
        if pixels.len() != (width * height * 3) as usize {
            return Err(RenderError::BadImage(format!(
                "{} bytes for {width}x{height}",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: u32, y: u32, c: [u8; 3]) {
        let i = ((y * self.width + x) * 3) as usize;
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    pub fn sha256_hex(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.width.to_le_bytes());
        h.update(self.height.to_le_bytes());
        h.update(&self.pixels);
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Binary PPM (P6) encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write_ppm(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_ppm())
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self, RenderError> {
        let bad = |m: &str| RenderError::BadImage(m.to_string());
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header"))?);
        }
        if fields[0] != "P6" || fields[3] != "255" {
            return Err(bad("not an 8-bit P6 file"));
        }
        let w: u32 = fields[1].parse().map_err(|_| bad("width"))?;
        let h: u32 = fields[2].parse().map_err(|_| bad("height"))?;
        let data = bytes.get(pos + 1..).ok_or_else(|| bad("missing pixels"))?;
        Self::from_pixels(w, h, data.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let mut img = Image::new(5, 3);
        img.set(4, 2, [1, 2, 3]);
        img.set(0, 0, [255, 0, 9]);
        let back = Image::from_ppm(&img.to_ppm()).unwrap();
        assert_eq!(back, img);
        assert!(Image::from_ppm(&img.to_ppm()[..20]).is_err());
    }
}
