//! End-to-end relief generation: depth conversion, structure and detail
//! layers, and two-scale fusion for high-resolution inputs.

use crate::error::{Error, Result};
use crate::field::{check_dims, gradient, resample, MaskField, ScalarField};
use crate::gradmap::{phi1, phi2, ReliefParams};
use crate::poisson::{reconstruct_from_gradients, SolveReport};

/// Longest side processed by the structure pass; larger inputs are
/// downsampled and refined with a native-resolution detail pass.
pub const STRUCTURE_BUDGET: usize = 1024;

/// Solve accounting for a pipeline run.
#[derive(Debug, Clone, Copy)]
pub struct PipelineReport {
    pub structure: SolveReport,
    pub detail: Option<SolveReport>,
}

/// Map depth to height: foreground `h = (z_far - depth) / (z_far - z_near)`
/// clamped to [0, 1], background 0.
pub fn depth_to_height(
    depth: &ScalarField,
    mask: &MaskField,
    z_near: f64,
    z_far: f64,
) -> Result<ScalarField> {
    if !(z_near < z_far) {
        return Err(Error::BadDepthRange { z_near, z_far });
    }
    check_dims(depth.width(), depth.height(), mask.width(), mask.height())?;
    let scale = 1.0 / (z_far - z_near);
    ScalarField::from_fn(depth.width(), depth.height(), |u, v| {
        if mask.at(u, v) {
            ((z_far - depth.at(u, v)) * scale).clamp(0.0, 1.0)
        } else {
            0.0
        }
    })
}

/// Shift so the background median is 0 (skipped when the mask has no
/// background), then scale so the foreground maximum is 1 (skipped when
/// it is not positive). Applying it twice equals applying it once.
pub fn normalize_structure(h: &ScalarField, omega: &MaskField) -> ScalarField {
    let mut out = h.clone();
    let mut bg: Vec<f64> = (0..h.len())
        .filter(|&i| !omega.data()[i])
        .map(|i| h.data()[i])
        .collect();
    if !bg.is_empty() {
        bg.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = bg.len();
        let med = if n % 2 == 1 {
            bg[n / 2]
        } else {
            0.5 * (bg[n / 2 - 1] + bg[n / 2])
        };
        out.shift(-med);
    }
    let fg_max = (0..h.len())
        .filter(|&i| omega.data()[i])
        .map(|i| out.data()[i])
        .fold(f64::NEG_INFINITY, f64::max);
    if fg_max > 1e-12 && fg_max.is_finite() {
        out.scale(1.0 / fg_max);
    }
    out
}

/// Structure layer: Poisson reconstruction of the Φ1-remapped source
/// gradients, normalized to the background-0 / foreground-max-1 gauge.
pub fn structure_layer(
    h_source: &ScalarField,
    omega: &MaskField,
    params: &ReliefParams,
) -> Result<(ScalarField, SolveReport)> {
    params.validate()?;
    check_dims(
        h_source.width(),
        h_source.height(),
        omega.width(),
        omega.height(),
    )?;
    let g = phi1(&gradient(h_source), params.alpha, params.phi_mode)?;
    let (rec, report) = reconstruct_from_gradients(&g)?;
    Ok((normalize_structure(&rec, omega), report))
}

/// Detail layer: Poisson reconstruction of the Φ2 band-passed source
/// gradients (the height field whose Laplacian matches the detail target).
pub fn detail_layer(
    h_source: &ScalarField,
    params: &ReliefParams,
) -> Result<(ScalarField, SolveReport)> {
    params.validate()?;
    let g = phi2(
        &gradient(h_source),
        params.alpha1,
        params.alpha2,
        params.phi_mode,
    )?;
    reconstruct_from_gradients(&g)
}

/// Upsample the structure to the detail's dimensions and add the weighted
/// detail. Requires detail dimensions >= structure dimensions.
pub fn fuse(structure: &ScalarField, detail: &ScalarField, weight: f64) -> Result<ScalarField> {
    if detail.width() < structure.width() || detail.height() < structure.height() {
        return Err(Error::DimensionMismatch {
            expected_width: structure.width(),
            expected_height: structure.height(),
            got_width: detail.width(),
            got_height: detail.height(),
        });
    }
    let mut out = resample(structure, detail.width(), detail.height())?;
    out.add_scaled(detail, weight)?;
    Ok(out)
}

fn downsample_dims(w: usize, h: usize, budget: usize) -> (usize, usize) {
    let longest = w.max(h);
    let scale = budget as f64 / longest as f64;
    let nw = ((w as f64 * scale).round() as usize).max(2);
    let nh = ((h as f64 * scale).round() as usize).max(2);
    (nw, nh)
}

/// Downsample a mask through bilinear resampling of its 0/1 indicator.
fn resample_mask(mask: &MaskField, nw: usize, nh: usize) -> Result<MaskField> {
    let as_scalar = ScalarField::from_fn(mask.width(), mask.height(), |u, v| {
        if mask.at(u, v) {
            1.0
        } else {
            0.0
        }
    })?;
    let r = resample(&as_scalar, nw, nh)?;
    MaskField::from_fn(nw, nh, |u, v| r.at(u, v) > 0.5)
}

/// Two-scale relief: structure on the (at most) 1024-longest-side
/// downsample, detail at native resolution, fused at native resolution.
/// Inputs within the budget skip the detail pass.
pub fn two_scale(
    h_source: &ScalarField,
    omega: &MaskField,
    params: &ReliefParams,
) -> Result<(ScalarField, PipelineReport)> {
    params.validate()?;
    check_dims(
        h_source.width(),
        h_source.height(),
        omega.width(),
        omega.height(),
    )?;
    let (w, h) = (h_source.width(), h_source.height());
    if w.max(h) <= STRUCTURE_BUDGET {
        let (structure, report) = structure_layer(h_source, omega, params)?;
        return Ok((
            structure,
            PipelineReport {
                structure: report,
                detail: None,
            },
        ));
    }
    let (nw, nh) = downsample_dims(w, h, STRUCTURE_BUDGET);
    let lo = resample(h_source, nw, nh)?;
    let lo_mask = resample_mask(omega, nw, nh)?;
    let (structure, structure_report) = structure_layer(&lo, &lo_mask, params)?;
    let (detail, detail_report) = detail_layer(h_source, params)?;
    let fused = fuse(&structure, &detail, 1.0)?;
    Ok((
        fused,
        PipelineReport {
            structure: structure_report,
            detail: Some(detail_report),
        },
    ))
}
