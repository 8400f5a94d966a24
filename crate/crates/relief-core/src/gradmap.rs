//! Gradient-magnitude remapping: the sigmoid variant S, the structure remap
//! Φ1 and the band-pass detail remap Φ2.

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::field::GradientField;

/// How Φ1/Φ2 apply the magnitude response to a gradient vector.
///
/// `Normalized` replaces the magnitude: `x -> S(|x|, a) * x/|x|`, which
/// boosts small gradients and caps every magnitude below 1. `Literal`
/// multiplies the vector by the response: `x -> S(|x|, a) * x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhiMode {
    #[default]
    Normalized,
    Literal,
}

impl std::fmt::Display for PhiMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PhiMode::Normalized => write!(f, "normalized"),
            PhiMode::Literal => write!(f, "literal"),
        }
    }
}

impl std::str::FromStr for PhiMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "normalized" => Ok(PhiMode::Normalized),
            "literal" => Ok(PhiMode::Literal),
            other => Err(format!("unknown phi mode '{other}' (normalized|literal)")),
        }
    }
}

/// Scalar knobs for the relief pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliefParams {
    /// Structure remap strength.
    pub alpha: f64,
    /// Lower detail band edge.
    pub alpha1: f64,
    /// Upper detail band edge.
    pub alpha2: f64,
    /// Normal steepness for the cosine loss.
    pub eta: f64,
    pub phi_mode: PhiMode,
}

impl Default for ReliefParams {
    fn default() -> Self {
        // eta = 0.05 keeps loss normals steep enough that the cosine loss
        // flattens backgrounds and sharpens silhouettes; see style_compare.
        Self {
            alpha: 8.0,
            alpha1: 4.0,
            alpha2: 16.0,
            eta: 0.05,
            phi_mode: PhiMode::Normalized,
        }
    }
}

impl ReliefParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::NonPositiveAlpha(self.alpha));
        }
        check_band(self.alpha1, self.alpha2)?;
        if !(self.eta > 0.0) {
            return Err(Error::NonPositiveEta(self.eta));
        }
        Ok(())
    }
}

pub(crate) fn check_band(alpha1: f64, alpha2: f64) -> Result<()> {
    if !(alpha1 > 0.0 && alpha2 > 0.0 && alpha1 < alpha2) {
        return Err(Error::BandOrder { alpha1, alpha2 });
    }
    Ok(())
}

/// Saturation value strictly below 1, with enough margin that remapped
/// magnitudes stay below 1 through the divide/multiply round trip.
pub(crate) const ONE_BELOW: f64 = 1.0 - 1e-15;

/// S(x, a) = (1 - e^(-ax)) / (1 + e^(-ax)), computed as tanh(ax/2).
/// Clamped to the open interval (-1, 1): tanh rounds to 1.0 for large
/// arguments, and downstream magnitude remaps rely on |S| < 1 strictly.
#[inline]
pub(crate) fn s_unchecked(x: f64, alpha: f64) -> f64 {
    (0.5 * alpha * x).tanh().clamp(-ONE_BELOW, ONE_BELOW)
}

/// The sigmoid variant S(x, alpha). Odd in x, strictly increasing,
/// range (-1, 1); (S(x,1)+1)/2 is the logistic sigmoid.
pub fn sigmoid_variant(x: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    Ok(s_unchecked(x, alpha))
}

#[inline]
fn remap_pixel(du: f64, dv: f64, response: f64, m: f64, mode: PhiMode) -> (f64, f64) {
    match mode {
        PhiMode::Literal => (response * du, response * dv),
        PhiMode::Normalized => {
            if m > 0.0 {
                let k = response / m;
                (k * du, k * dv)
            } else {
                (0.0, 0.0)
            }
        }
    }
}

fn remap_impl<F>(g: &GradientField, mode: PhiMode, response: F, exec: Exec) -> GradientField
where
    F: Fn(f64) -> f64 + Sync,
{
    let (w, h) = (g.width(), g.height());
    let mut du = vec![0.0; w * h];
    let mut dv = vec![0.0; w * h];
    let (gu, gv) = (g.du(), g.dv());
    exec::fill_rows2(exec, &mut du, &mut dv, w, |v, ru, rv| {
        for u in 0..w {
            let i = v * w + u;
            let (p, q) = (gu[i], gv[i]);
            let m = (p * p + q * q).sqrt();
            let (np, nq) = remap_pixel(p, q, response(m), m, mode);
            ru[u] = np;
            rv[u] = nq;
        }
    });
    GradientField::from_parts(w, h, du, dv)
}

/// Φ1: structure remap, per-pixel response S(|x|, alpha).
pub fn phi1(g: &GradientField, alpha: f64, mode: PhiMode) -> Result<GradientField> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    Ok(remap_impl(g, mode, |m| s_unchecked(m, alpha), Exec::auto()))
}

/// Sequential variant of [`phi1`] (identical output).
pub fn phi1_seq(g: &GradientField, alpha: f64, mode: PhiMode) -> Result<GradientField> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    Ok(remap_impl(g, mode, |m| s_unchecked(m, alpha), Exec::Seq))
}

/// Φ2: band-pass detail remap, response S(|x|, alpha2) - S(|x|, alpha1) >= 0.
pub fn phi2(g: &GradientField, alpha1: f64, alpha2: f64, mode: PhiMode) -> Result<GradientField> {
    check_band(alpha1, alpha2)?;
    Ok(remap_impl(
        g,
        mode,
        |m| s_unchecked(m, alpha2) - s_unchecked(m, alpha1),
        Exec::auto(),
    ))
}
