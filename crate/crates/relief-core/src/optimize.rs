//! Direct height-field minimization of the gradient- and normal-domain
//! losses, and the loss-style comparison it supports.
//!
//! The optimizer is gradient descent with momentum and a fixed backtracking
//! rule. The descent direction is the sum-loss gradient (N times the mean
//! loss gradient) so useful step sizes do not depend on the grid size. The
//! step grows 1.5x per accepted iteration until the first rejection and
//! re-grows only after 30 consecutive clean accepts; a rejection halves it.
//! Velocity survives the first 3 rejections of an iteration, then resets to
//! a pure gradient retry. Accepted loss values never increase.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{gradient, GradientField, MaskField, ScalarField};
use crate::gradmap::{phi1, ReliefParams};
use crate::losses::{loss_value_and_grad, LossKind};

/// Initial iterate for [`optimize_height`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    #[default]
    Zeros,
    /// Start from a caller-supplied field (`init_from`).
    Source,
}

impl std::str::FromStr for Init {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "zeros" => Ok(Init::Zeros),
            "source" => Ok(Init::Source),
            other => Err(format!("unknown init '{other}' (zeros|source)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeConfig {
    pub loss_kind: LossKind,
    /// Initial step along the sum-loss gradient.
    pub step: f64,
    pub momentum: f64,
    pub max_iter: usize,
    /// Stop when the relative loss decrease of an accepted iteration falls
    /// below this (a zero decrease counts only after a 50-iteration streak).
    pub rel_tol: f64,
    pub init: Init,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            loss_kind: LossKind::L2s,
            step: 0.05,
            momentum: 0.9,
            max_iter: 2000,
            rel_tol: 1e-12,
            init: Init::Zeros,
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::InvalidConfig("step must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1)"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("rel_tol must be positive"));
        }
        Ok(())
    }
}

const GROW: f64 = 1.5;
const REGROW_AFTER: usize = 30;
const KEEP_V_REJECTS: usize = 3;
const MAX_REJECTS: usize = 40;
const FLAT_STREAK_STOP: usize = 50;
const STALL_REL_INCREASE: f64 = 1e-9;

/// Minimize the chosen loss over the height field. Returns the field and
/// the number of iterations attempted. Deterministic given the config.
///
/// `init_from` supplies the starting field when `cfg.init == Init::Source`.
pub fn optimize_height(
    g_target: &GradientField,
    omega: &MaskField,
    cfg: &OptimizeConfig,
    eta: f64,
    init_from: Option<&ScalarField>,
) -> Result<(ScalarField, usize)> {
    cfg.validate()?;
    let (w, ht) = (g_target.width(), g_target.height());
    let mut h = match cfg.init {
        Init::Zeros => ScalarField::zeros(w, ht)?,
        Init::Source => init_from.ok_or(Error::MissingInitField)?.clone(),
    };
    if cfg.max_iter == 0 {
        return Ok((h, 0));
    }
    let n = (w * ht) as f64;
    let mut velocity = vec![0.0; w * ht];
    let mut proposal = vec![0.0; w * ht];
    let mut step = cfg.step;
    let mut growing = true;
    let mut clean_accepts = 0usize;
    let mut flat_streak = 0usize;

    let (mut loss, mut grad) = loss_value_and_grad(&h, cfg.loss_kind, g_target, eta, omega)?;

    let mut iterations = 0usize;
    while iterations < cfg.max_iter {
        iterations += 1;

        let grad_max = grad.data().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if grad_max == 0.0 {
            break; // stationary point
        }

        // Backtracking: halve the step until the candidate does not
        // increase the loss.
        let mut rejects = 0usize;
        let (cand, cand_loss, cand_grad) = loop {
            let gd = grad.data();
            for i in 0..proposal.len() {
                proposal[i] = cfg.momentum * velocity[i] - step * n * gd[i];
            }
            let mut cand = h.clone();
            for (ci, pi) in cand.data_mut().iter_mut().zip(proposal.iter()) {
                *ci += pi;
            }
            let (cl, cg) = loss_value_and_grad(&cand, cfg.loss_kind, g_target, eta, omega)?;
            if cl <= loss {
                std::mem::swap(&mut velocity, &mut proposal);
                break (cand, cl, cg);
            }
            rejects += 1;
            growing = false;
            clean_accepts = 0;
            step *= 0.5;
            if rejects > KEEP_V_REJECTS {
                velocity.iter_mut().for_each(|v| *v = 0.0);
            }
            if rejects >= MAX_REJECTS {
                let rel_increase = (cl - loss) / loss.max(f64::MIN_POSITIVE);
                if rel_increase <= STALL_REL_INCREASE {
                    // Subgradient/kink resolution reached: converged.
                    return Ok((h, iterations));
                }
                return Err(Error::Diverged {
                    iteration: iterations,
                });
            }
        };

        let decrease = loss - cand_loss;
        let rel = decrease / loss.max(f64::MIN_POSITIVE);
        h = cand;
        loss = cand_loss;
        grad = cand_grad;
        clean_accepts += 1;
        if growing || clean_accepts >= REGROW_AFTER {
            step *= GROW;
        }
        if decrease == 0.0 {
            flat_streak += 1;
            if flat_streak >= FLAT_STREAK_STOP {
                break;
            }
        } else {
            flat_streak = 0;
            if rel < cfg.rel_tol {
                break;
            }
        }
    }
    Ok((h, iterations))
}

/// Per-loss style metrics over a scene.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StyleEntry {
    /// Mean |h| over the background after shifting its median to zero.
    pub background_mean_abs: f64,
    /// Mean gradient magnitude in a 2-pixel band around the mask boundary.
    pub silhouette_sharpness: f64,
}

/// Style metrics for the three optimizer losses on one scene.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StyleReport {
    pub l1s: StyleEntry,
    pub l2s: StyleEntry,
    pub cosine: StyleEntry,
}

/// Optimize each of {l1, l2, cosine} against `phi1(gradient(h_source))`
/// and report background flatness and silhouette sharpness per loss.
///
/// The optimization runs over the full image domain; `omega` defines the
/// reporting regions (background outside it, silhouette band around its
/// boundary). An all-background mask yields a zero report.
pub fn style_compare(
    h_source: &ScalarField,
    omega: &MaskField,
    params: &ReliefParams,
    cfg_base: &OptimizeConfig,
) -> Result<StyleReport> {
    params.validate()?;
    cfg_base.validate()?;
    crate::field::check_dims(
        h_source.width(),
        h_source.height(),
        omega.width(),
        omega.height(),
    )?;
    if omega.count_foreground() == 0 {
        return Ok(StyleReport::default());
    }
    let g_target = phi1(&gradient(h_source), params.alpha, params.phi_mode)?;
    let full = MaskField::all_true(h_source.width(), h_source.height())?;

    let mut report = StyleReport::default();
    for kind in [LossKind::L1s, LossKind::L2s, LossKind::Cosine] {
        let cfg = OptimizeConfig {
            loss_kind: kind,
            ..*cfg_base
        };
        let (h, _) = optimize_height(&g_target, &full, &cfg, params.eta, Some(h_source))?;
        let entry = style_metrics(&h, omega);
        match kind {
            LossKind::L1s => report.l1s = entry,
            LossKind::L2s => report.l2s = entry,
            LossKind::Cosine => report.cosine = entry,
        }
    }
    Ok(report)
}

/// Background flatness and silhouette sharpness of a relief against a mask.
pub fn style_metrics(h: &ScalarField, omega: &MaskField) -> StyleEntry {
    let (w, ht) = (h.width(), h.height());
    let bg: Vec<f64> = (0..w * ht)
        .filter(|&i| !omega.data()[i])
        .map(|i| h.data()[i])
        .collect();
    let background_mean_abs = if bg.is_empty() {
        0.0
    } else {
        let med = median(bg.clone());
        bg.iter().map(|x| (x - med).abs()).sum::<f64>() / bg.len() as f64
    };

    // 2-pixel band: pixels whose 5x5 neighborhood contains both foreground
    // and background.
    let g = gradient(h);
    let mut band_sum = 0.0;
    let mut band_count = 0usize;
    for v in 0..ht {
        for u in 0..w {
            let mut has_fg = false;
            let mut has_bg = false;
            for dv in -2i64..=2 {
                for du in -2i64..=2 {
                    let uu = u as i64 + du;
                    let vv = v as i64 + dv;
                    if uu < 0 || vv < 0 || uu >= w as i64 || vv >= ht as i64 {
                        continue;
                    }
                    if omega.at(uu as usize, vv as usize) {
                        has_fg = true;
                    } else {
                        has_bg = true;
                    }
                }
            }
            if has_fg && has_bg {
                let (p, q) = g.at(u, v);
                band_sum += (p * p + q * q).sqrt();
                band_count += 1;
            }
        }
    }
    let silhouette_sharpness = if band_count > 0 {
        band_sum / band_count as f64
    } else {
        0.0
    };
    StyleEntry {
        background_mean_abs,
        silhouette_sharpness,
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
