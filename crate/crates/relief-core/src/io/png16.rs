//! 16-bit grayscale PNG height fields. Values are quantized over the
//! field's [min, max] range; the range is recorded in a JSON sidecar
//! `<path>.range.json` so reading inverts the quantization exactly.

use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RangeSidecar {
    pub min: f64,
    pub max: f64,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".range.json");
    PathBuf::from(s)
}

pub fn write_png16(path: &Path, h: &ScalarField) -> Result<()> {
    let (min, max) = (h.min(), h.max());
    let range = max - min;
    let img = ImageBuffer::<Luma<u16>, Vec<u16>>::from_fn(
        h.width() as u32,
        h.height() as u32,
        |u, v| {
            let x = h.at(u as usize, v as usize);
            let q = if range > 0.0 {
                ((x - min) / range * 65535.0).round() as u16
            } else {
                0
            };
            Luma([q])
        },
    );
    img.save(path)?;
    let sidecar = RangeSidecar { min, max };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

pub fn read_png16(path: &Path) -> Result<ScalarField> {
    let sc_path = sidecar_path(path);
    if !sc_path.exists() {
        return Err(Error::MissingSidecar(sc_path));
    }
    let sidecar: RangeSidecar = serde_json::from_str(&std::fs::read_to_string(&sc_path)?)?;
    let img = image::open(path)?.to_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let range = sidecar.max - sidecar.min;
    let mut data = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let q = img.get_pixel(u as u32, v as u32).0[0] as f64;
            data.push(if range > 0.0 {
                sidecar.min + q / 65535.0 * range
            } else {
                sidecar.min
            });
        }
    }
    ScalarField::new(w, h, data)
}
