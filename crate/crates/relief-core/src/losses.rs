//! Gradient- and normal-domain loss evaluators and their analytic height
//! gradients.
//!
//! All four losses depend on the prediction only through its gradient, so
//! they are invariant to adding a constant. Reductions use a fixed order
//! (each row summed left to right, row partials folded in row order) so
//! values are reproducible for any thread count.

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::field::{check_dims, divergence, gradient, GradientField, MaskField, ScalarField};
use crate::gradmap::{check_band, phi2, PhiMode};

/// Which loss a gradient/optimizer call refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    L1s,
    L2s,
    Cosine,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LossKind::L1s => write!(f, "l1"),
            LossKind::L2s => write!(f, "l2"),
            LossKind::Cosine => write!(f, "cosine"),
        }
    }
}

/// Loss value plus its per-pixel contribution map.
///
/// For the gradient losses `value = sum(per_pixel) / n_pixels`; for the
/// cosine loss `per_pixel` holds the masked normal dot products and
/// `value = 1 - sum(per_pixel) / n_pixels`.
#[derive(Debug, Clone)]
pub struct LossReport {
    pub value: f64,
    pub per_pixel: ScalarField,
    pub n_pixels: usize,
}

fn checked_mask(h: &ScalarField, omega: &MaskField) -> Result<usize> {
    check_dims(h.width(), h.height(), omega.width(), omega.height())?;
    let n = omega.count_foreground();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(n)
}

fn grad_residual_report<F>(
    h_pred: &ScalarField,
    g_target: &GradientField,
    omega: &MaskField,
    per_pixel_of: F,
) -> Result<LossReport>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    crate::poisson::check_same_grid(h_pred, g_target)?;
    let n = checked_mask(h_pred, omega)?;
    let (w, ht) = (h_pred.width(), h_pred.height());
    let gh = gradient(h_pred);
    let mut per = vec![0.0; w * ht];
    let mask = omega.data();
    let (du, dv) = (gh.du(), gh.dv());
    let (tu, tv) = (g_target.du(), g_target.dv());
    exec::fill_rows(Exec::auto(), &mut per, w, |v, row| {
        for (u, out) in row.iter_mut().enumerate() {
            let i = v * w + u;
            *out = if mask[i] {
                per_pixel_of(du[i] - tu[i], dv[i] - tv[i])
            } else {
                0.0
            };
        }
    });
    let per_pixel = ScalarField::from_parts(w, ht, per);
    let total = exec::sum_rows(Exec::Seq, ht, |v| {
        per_pixel.data()[v * w..(v + 1) * w].iter().sum::<f64>()
    });
    Ok(LossReport {
        value: total / n as f64,
        per_pixel,
        n_pixels: n,
    })
}

/// Mean over the mask of the squared gradient mismatch.
pub fn loss_l2s(
    h_pred: &ScalarField,
    g_target: &GradientField,
    omega: &MaskField,
) -> Result<LossReport> {
    grad_residual_report(h_pred, g_target, omega, |ru, rv| ru * ru + rv * rv)
}

/// Mean over the mask of the componentwise L1 gradient mismatch.
pub fn loss_l1s(
    h_pred: &ScalarField,
    g_target: &GradientField,
    omega: &MaskField,
) -> Result<LossReport> {
    grad_residual_report(h_pred, g_target, omega, |ru, rv| ru.abs() + rv.abs())
}

/// Cosine distance between normals derived from the prediction's gradient
/// and from the target gradient, both with steepness `eta`.
pub fn loss_cosine(
    h_pred: &ScalarField,
    g_target: &GradientField,
    eta: f64,
    omega: &MaskField,
) -> Result<LossReport> {
    if !(eta > 0.0) {
        return Err(Error::NonPositiveEta(eta));
    }
    crate::poisson::check_same_grid(h_pred, g_target)?;
    let n = checked_mask(h_pred, omega)?;
    let (w, ht) = (h_pred.width(), h_pred.height());
    let gh = gradient(h_pred);
    let mut per = vec![0.0; w * ht];
    let mask = omega.data();
    let (du, dv) = (gh.du(), gh.dv());
    let (tu, tv) = (g_target.du(), g_target.dv());
    exec::fill_rows(Exec::auto(), &mut per, w, |v, row| {
        for (u, out) in row.iter_mut().enumerate() {
            let i = v * w + u;
            *out = if mask[i] {
                normal_dot(du[i], dv[i], tu[i], tv[i], eta)
            } else {
                0.0
            };
        }
    });
    let per_pixel = ScalarField::from_parts(w, ht, per);
    let total = exec::sum_rows(Exec::Seq, ht, |v| {
        per_pixel.data()[v * w..(v + 1) * w].iter().sum::<f64>()
    });
    Ok(LossReport {
        value: 1.0 - total / n as f64,
        per_pixel,
        n_pixels: n,
    })
}

/// Dot product of the unit normals of two gradients with steepness eta.
#[inline]
fn normal_dot(p: f64, q: f64, tp: f64, tq: f64, eta: f64) -> f64 {
    let s = (p * p + q * q + eta * eta).sqrt();
    let t = (tp * tp + tq * tq + eta * eta).sqrt();
    (p * tp + q * tq + eta * eta) / (s * t)
}

/// Detail loss: mean over the mask of the squared mismatch between `h_d`
/// and the divergence of the band-passed source gradients. Note the target
/// is a divergence field, not heights.
pub fn loss_detail(
    h_d: &ScalarField,
    h_source: &ScalarField,
    alpha1: f64,
    alpha2: f64,
    omega: &MaskField,
) -> Result<LossReport> {
    check_band(alpha1, alpha2)?;
    check_dims(
        h_d.width(),
        h_d.height(),
        h_source.width(),
        h_source.height(),
    )?;
    let n = checked_mask(h_d, omega)?;
    let target = divergence(&phi2(
        &gradient(h_source),
        alpha1,
        alpha2,
        PhiMode::Normalized,
    )?);
    let (w, ht) = (h_d.width(), h_d.height());
    let mut per = vec![0.0; w * ht];
    let mask = omega.data();
    let (hd, td) = (h_d.data(), target.data());
    exec::fill_rows(Exec::auto(), &mut per, w, |v, row| {
        for (u, out) in row.iter_mut().enumerate() {
            let i = v * w + u;
            *out = if mask[i] {
                let r = hd[i] - td[i];
                r * r
            } else {
                0.0
            };
        }
    });
    let per_pixel = ScalarField::from_parts(w, ht, per);
    let total = exec::sum_rows(Exec::Seq, ht, |v| {
        per_pixel.data()[v * w..(v + 1) * w].iter().sum::<f64>()
    });
    Ok(LossReport {
        value: total / n as f64,
        per_pixel,
        n_pixels: n,
    })
}

/// Value and analytic height-gradient of the chosen loss in one pass.
/// `eta` is used by the cosine loss only.
///
/// The gradient is assembled as the negative divergence of the per-pixel
/// loss derivative with respect to the prediction's gradient, which is
/// exact because divergence is the negative adjoint of gradient.
pub(crate) fn loss_value_and_grad(
    h_pred: &ScalarField,
    kind: LossKind,
    g_target: &GradientField,
    eta: f64,
    omega: &MaskField,
) -> Result<(f64, ScalarField)> {
    crate::poisson::check_same_grid(h_pred, g_target)?;
    let n = checked_mask(h_pred, omega)? as f64;
    if kind == LossKind::Cosine && !(eta > 0.0) {
        return Err(Error::NonPositiveEta(eta));
    }
    let (w, ht) = (h_pred.width(), h_pred.height());
    let gh = gradient(h_pred);
    let mut wu = vec![0.0; w * ht];
    let mut wv = vec![0.0; w * ht];
    let mask = omega.data();
    let (du, dv) = (gh.du(), gh.dv());
    let (tu, tv) = (g_target.du(), g_target.dv());

    // Weight field w = dL/d(grad h), plus one partial of the value per row.
    let total = exec::fill_rows2_sum(Exec::auto(), &mut wu, &mut wv, w, |v, ru, rv| {
        let mut acc = 0.0;
        for u in 0..w {
            let i = v * w + u;
            if !mask[i] {
                ru[u] = 0.0;
                rv[u] = 0.0;
                continue;
            }
            match kind {
                LossKind::L2s => {
                    let (a, b) = (du[i] - tu[i], dv[i] - tv[i]);
                    acc += a * a + b * b;
                    ru[u] = 2.0 / n * a;
                    rv[u] = 2.0 / n * b;
                }
                LossKind::L1s => {
                    let (a, b) = (du[i] - tu[i], dv[i] - tv[i]);
                    acc += a.abs() + b.abs();
                    // Subgradient at 0 is 0.
                    ru[u] = sign0(a) / n;
                    rv[u] = sign0(b) / n;
                }
                LossKind::Cosine => {
                    let (p, q) = (du[i], dv[i]);
                    let s = (p * p + q * q + eta * eta).sqrt();
                    let t = (tu[i] * tu[i] + tv[i] * tv[i] + eta * eta).sqrt();
                    let (nix, niy, niz) = (-tu[i] / t, -tv[i] / t, eta / t);
                    // a = <(-p,-q,eta), n_i>
                    let a = -p * nix - q * niy + eta * niz;
                    acc += a / s;
                    ru[u] = (nix / s + a * p / (s * s * s)) / n;
                    rv[u] = (niy / s + a * q / (s * s * s)) / n;
                }
            }
        }
        acc
    });
    let value = match kind {
        LossKind::Cosine => 1.0 - total / n,
        _ => total / n,
    };
    let weights = GradientField::from_parts(w, ht, wu, wv);
    let mut grad = divergence(&weights);
    grad.scale(-1.0);
    Ok((value, grad))
}

#[inline]
fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The exact gradient of the chosen loss with respect to every height value.
pub fn loss_grad(
    h_pred: &ScalarField,
    kind: LossKind,
    g_target: &GradientField,
    eta: f64,
    omega: &MaskField,
) -> Result<ScalarField> {
    loss_value_and_grad(h_pred, kind, g_target, eta, omega).map(|(_, g)| g)
}
