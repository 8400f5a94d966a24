//! Synthetic benchmark scenes used by tests, benches and the style
//! comparison.

use crate::error::Result;
use crate::field::{MaskField, ScalarField};

/// Centered square of height 1 on a background of 0; the mask marks the
/// square. The square spans [n/4, 3n/4) in both axes.
pub fn box_on_plane(n: usize) -> Result<(ScalarField, MaskField)> {
    let lo = n / 4;
    let hi = 3 * n / 4;
    let inside = move |u: usize, v: usize| u >= lo && u < hi && v >= lo && v < hi;
    let h = ScalarField::from_fn(n, n, |u, v| if inside(u, v) { 1.0 } else { 0.0 })?;
    let mask = MaskField::from_fn(n, n, inside)?;
    Ok((h, mask))
}

/// Rows of a small sinusoidal wrinkle on a flat left half and a steep ramp
/// on the right half. The wrinkle sits in the detail band; the ramp's slope
/// saturates both sigmoid edges, so a band-pass layer must suppress it.
pub fn wrinkle_ramp(n: usize) -> Result<ScalarField> {
    let slope = 1.6;
    ScalarField::from_fn(n, n, |u, _| {
        let base = if u < n / 2 {
            0.0
        } else {
            slope * (u - n / 2) as f64
        };
        base + 0.01 * (2.0 * std::f64::consts::PI * 8.0 * u as f64 / n as f64).sin()
    })
}

/// Smooth dome plus a near-Nyquist wrinkle along u.
///
/// The wrinkle phase is `2*pi*k0*u/(w-1)` with `k0 = (w-1)/2`, which makes
/// it vanish exactly at the align-corners sample positions of a half-size
/// downsample; a two-scale pipeline then sees the wrinkle only through its
/// native-resolution detail pass.
pub fn dome_wrinkle(w: usize, h: usize) -> Result<ScalarField> {
    let k0 = ((w - 1) / 2) as f64;
    let denom = (w - 1) as f64;
    ScalarField::from_fn(w, h, |u, v| {
        let dome = 0.4
            * (std::f64::consts::PI * u as f64 / (w - 1) as f64).sin()
            * (std::f64::consts::PI * v as f64 / (h - 1) as f64).sin();
        dome + 0.01 * (2.0 * std::f64::consts::PI * k0 * u as f64 / denom).sin()
    })
}
