//! Lambertian preview shading of a height field.

use std::path::Path;

use image::{GrayImage, Luma};

use crate::error::{Error, Result};
use crate::field::{gradient, normals_from_gradient, ScalarField};

/// Shade with `max(0, <n, light>)` per pixel, quantized to 8 bits. The
/// light direction is normalized on input. Depends on gradients only, so
/// adding a constant to the field leaves the preview unchanged.
pub fn render_preview(h: &ScalarField, light_dir: [f64; 3], eta: f64) -> Result<GrayImage> {
    let norm = (light_dir[0] * light_dir[0]
        + light_dir[1] * light_dir[1]
        + light_dir[2] * light_dir[2])
        .sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroLightDirection);
    }
    let l = [light_dir[0] / norm, light_dir[1] / norm, light_dir[2] / norm];
    let normals = normals_from_gradient(&gradient(h), eta)?;
    let img = GrayImage::from_fn(h.width() as u32, h.height() as u32, |u, v| {
        let (nx, ny, nz) = normals.at(u as usize, v as usize);
        let intensity = (nx * l[0] + ny * l[1] + nz * l[2]).max(0.0).min(1.0);
        Luma([(255.0 * intensity).round() as u8])
    });
    Ok(img)
}

pub fn write_preview(path: &Path, h: &ScalarField, light_dir: [f64; 3], eta: f64) -> Result<()> {
    let img = render_preview(h, light_dir, eta)?;
    img.save(path)?;
    Ok(())
}
