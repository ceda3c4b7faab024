use std::fs;
use std::path::Path;

use crate::error::{Result, TaxonsError};

/// RGB image with intensities in `[0, 1]`, stored channel-major (`[3][h][w]`)
/// so it can be fed to a convolutional network directly.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Observation {
    pub const CHANNELS: usize = 3;

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        let plane = width * height;
        let mut data = vec![0.0; 3 * plane];
        for (c, chunk) in data.chunks_exact_mut(plane.max(1)).enumerate().take(3) {
            chunk.fill(rgb[c]);
        }
        Observation {
            width,
            height,
            data,
        }
    }

    pub fn from_channel_major(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 3 * width * height {
            return Err(TaxonsError::Shape {
                expected: vec![3, height, width],
                got: vec![data.len()],
            });
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(TaxonsError::invalid(format!("pixel intensity {v} outside [0, 1]")));
        }
        Ok(Observation {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `[3, height, width]`
    pub fn shape(&self) -> [usize; 3] {
        [3, self.height, self.width]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, col: usize, row: usize) -> [f64; 3] {
        let plane = self.width * self.height;
        let i = row * self.width + col;
        [self.data[i], self.data[plane + i], self.data[2 * plane + i]]
    }

    pub fn set_pixel(&mut self, col: usize, row: usize, rgb: [f64; 3]) {
        let plane = self.width * self.height;
        let i = row * self.width + col;
        self.data[i] = rgb[0];
        self.data[plane + i] = rgb[1];
        self.data[2 * plane + i] = rgb[2];
    }

    /// Binary PPM (P6), 8 bits per channel, `round(255 * v)`.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(3 * self.width * self.height);
        for row in 0..self.height {
            for col in 0..self.width {
                for v in self.pixel(col, row) {
                    out.push((255.0 * v).round().clamp(0.0, 255.0) as u8);
                }
            }
        }
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let bad = |reason: &str| TaxonsError::Format {
            path: "<ppm>".into(),
            reason: reason.into(),
        };
        let mut fields = Vec::with_capacity(4);
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ascii header"))?);
        }
        if fields[0] != "P6" {
            return Err(bad("not a binary P6 image"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
        let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        if maxval != 255 {
            return Err(bad("only 8-bit images are supported"));
        }
        // exactly one whitespace byte separates header and raster
        pos += 1;
        let raster = bytes.get(pos..).ok_or_else(|| bad("missing raster"))?;
        if raster.len() != 3 * width * height {
            return Err(bad("raster size does not match header"));
        }
        let mut obs = Observation::filled(width, height, [0.0; 3]);
        for (i, px) in raster.chunks_exact(3).enumerate() {
            let rgb = [px[0], px[1], px[2]].map(|b| f64::from(b) / 255.0);
            obs.set_pixel(i % width, i / width, rgb);
        }
        Ok(obs)
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_ppm()).map_err(|e| TaxonsError::io(path, e))
    }

    pub fn read_ppm(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| TaxonsError::io(path, e))?;
        Observation::from_ppm(&bytes).map_err(|e| match e {
            TaxonsError::Format { reason, .. } => TaxonsError::Format {
                path: path.to_path_buf(),
                reason,
            },
            other => other,
        })
    }
}

pub fn color(rgb: [u8; 3]) -> [f64; 3] {
    rgb.map(|b| f64::from(b) / 255.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip_is_exact_for_8bit_colours() {
        let mut obs = Observation::filled(5, 3, color([10, 20, 30]));
        obs.set_pixel(4, 2, color([255, 0, 128]));
        let bytes = obs.to_ppm();
        assert!(bytes.starts_with(b"P6\n5 3\n255\n"));
        let back = Observation::from_ppm(&bytes).unwrap();
        assert_eq!(back, obs);
        assert_eq!(back.to_ppm(), bytes);
    }

    #[test]
    fn rejects_out_of_range_and_bad_headers() {
        assert!(Observation::from_channel_major(1, 1, vec![0.0, 1.5, 0.0]).is_err());
        assert!(Observation::from_ppm(b"P3\n1 1\n255\n000").is_err());
        assert!(Observation::from_ppm(b"P6\n2 2\n255\n\x00\x00").is_err());
    }
}
