//! Shared oracles for the integration suites: a dense matrix form of the
//! gradient operator, a naive DCT, and a central-difference gradient
//! checker. These recompute results through independent routes and must
//! stay free of the library's internal composition.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use relief_core::{GradientField, LossKind, MaskField, ScalarField};

/// Dense matrix of the forward-difference gradient operator, rows ordered
/// as all du entries then all dv entries.
pub fn dense_gradient_matrix(w: usize, h: usize) -> DMatrix<f64> {
    let n = w * h;
    let mut g = DMatrix::zeros(2 * n, n);
    for v in 0..h {
        for u in 0..w {
            let row = v * w + u;
            if u + 1 < w {
                g[(row, v * w + u + 1)] = 1.0;
                g[(row, v * w + u)] = -1.0;
            }
            if v + 1 < h {
                g[(n + row, (v + 1) * w + u)] = 1.0;
                g[(n + row, v * w + u)] = -1.0;
            }
        }
    }
    g
}

pub fn gradient_to_vector(g: &GradientField) -> nalgebra::DVector<f64> {
    let n = g.width() * g.height();
    let mut out = nalgebra::DVector::zeros(2 * n);
    for i in 0..n {
        out[i] = g.du()[i];
        out[n + i] = g.dv()[i];
    }
    out
}

pub fn random_field(w: usize, h: usize, rng: &mut ChaCha8Rng) -> ScalarField {
    ScalarField::from_fn(w, h, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
}

pub fn random_gradient(w: usize, h: usize, rng: &mut ChaCha8Rng) -> GradientField {
    GradientField::new(
        w,
        h,
        (0..w * h).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        (0..w * h).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

/// Unnormalized DCT-II of one row: out[k] = sum_n x[n] cos(pi k (2n+1)/(2N)).
pub fn naive_dct2(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(i, &xi)| {
                    xi * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n as f64))
                        .cos()
                })
                .sum()
        })
        .collect()
}

/// Energy in DCT coefficients with k > N/2 (wavelength below 4 pixels).
pub fn high_band_energy(row: &[f64]) -> f64 {
    let c = naive_dct2(row);
    let n = row.len();
    c[n / 2 + 1..].iter().map(|x| x * x).sum()
}

/// Central finite differences of a loss value with respect to each height.
pub fn fd_loss_grad(
    h: &ScalarField,
    kind: LossKind,
    g: &GradientField,
    eta: f64,
    omega: &MaskField,
    step: f64,
) -> ScalarField {
    let eval = |hh: &ScalarField| -> f64 {
        match kind {
            LossKind::L1s => relief_core::loss_l1s(hh, g, omega).unwrap().value,
            LossKind::L2s => relief_core::loss_l2s(hh, g, omega).unwrap().value,
            LossKind::Cosine => relief_core::loss_cosine(hh, g, eta, omega).unwrap().value,
        }
    };
    let mut out = ScalarField::zeros(h.width(), h.height()).unwrap();
    let mut work = h.clone();
    for v in 0..h.height() {
        for u in 0..h.width() {
            let orig = work.at(u, v);
            work.set(u, v, orig + step);
            let fp = eval(&work);
            work.set(u, v, orig - step);
            let fm = eval(&work);
            work.set(u, v, orig);
            out.set(u, v, (fp - fm) / (2.0 * step));
        }
    }
    out
}

/// Max per-pixel relative error between an analytic and a finite-difference
/// gradient, with a floor tied to the field's own scale so near-zero
/// entries compare against it rather than against raw rounding noise.
pub fn max_rel_error(analytic: &ScalarField, fd: &ScalarField) -> f64 {
    let gmax = analytic
        .data()
        .iter()
        .fold(0.0_f64, |m, x| m.max(x.abs()))
        .max(fd.data().iter().fold(0.0_f64, |m, x| m.max(x.abs())));
    if gmax == 0.0 {
        return 0.0;
    }
    analytic
        .data()
        .iter()
        .zip(fd.data())
        .map(|(a, f)| (a - f).abs() / (a.abs().max(f.abs())).max(0.01 * gmax))
        .fold(0.0, f64::max)
}
