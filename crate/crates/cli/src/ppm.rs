//! Binary PPM (P6, maxval 255) reading and writing.

use std::fs;
use std::path::Path;

use crate::common::{CliError, CliResult};

pub struct Image {
    pub width: usize,
    pub height: usize,
    /// RGB triples, row-major, `3 * width * height` bytes.
    pub data: Vec<u8>,
}

impl Image {
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Pixels as RGB points in `[0, 1]^3`.
    pub fn to_points(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks_exact(3)
            .map(|px| px.iter().map(|&c| c as f64 / 255.0).collect())
            .collect()
    }

    pub fn from_points(points: &[Vec<f64>], width: usize, height: usize) -> Image {
        let mut data = Vec::with_capacity(points.len() * 3);
        for p in points {
            for &c in p.iter().take(3) {
                data.push((c.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        Image {
            width,
            height,
            data,
        }
    }
}

pub fn read_ppm(path: &Path) -> CliResult<Image> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let mut pos = 0usize;
    let mut next_token = |bytes: &[u8]| -> CliResult<String> {
        // Skip whitespace and '#' comments.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(CliError::validation("truncated PPM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = next_token(&bytes)?;
    if magic != "P6" {
        return Err(CliError::validation(format!(
            "unsupported PPM magic {magic:?}; only binary P6 is accepted"
        )));
    }
    let width: usize = next_token(&bytes)?
        .parse()
        .map_err(|e| CliError::validation(format!("bad PPM width: {e}")))?;
    let height: usize = next_token(&bytes)?
        .parse()
        .map_err(|e| CliError::validation(format!("bad PPM height: {e}")))?;
    let maxval: usize = next_token(&bytes)?
        .parse()
        .map_err(|e| CliError::validation(format!("bad PPM maxval: {e}")))?;
    if maxval != 255 {
        return Err(CliError::validation(format!(
            "unsupported PPM maxval {maxval}; expected 255"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = 3 * width * height;
    if bytes.len() < pos + need {
        return Err(CliError::validation("PPM raster shorter than header promises"));
    }
    Ok(Image {
        width,
        height,
        data: bytes[pos..pos + need].to_vec(),
    })
}

pub fn write_ppm(path: &Path, img: &Image) -> CliResult<()> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    crate::common::write_file(path, &out)
}
