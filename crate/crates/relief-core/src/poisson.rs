//! Poisson reconstruction: recover the height field whose gradient best
//! matches a target gradient field by solving `lap h = div g` under
//! homogeneous Neumann boundary conditions with a zero-mean gauge.
//!
//! The spectral path diagonalizes the discrete Laplacian (the composition
//! `divergence . gradient` from [`crate::field`]) in the DCT-II basis:
//! the 1-D operator with that boundary stencil has eigenvectors
//! `cos(pi k (2n+1) / (2N))` and eigenvalues `2 cos(pi k / N) - 2`.
//! A preconditioned conjugate-gradient fallback is kept for masked or
//! irregular domains.

use std::sync::Arc;
use std::time::Instant;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::field::{check_dims, divergence, gradient, GradientField, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Spectral,
    Iterative,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveMethod::Spectral => write!(f, "spectral"),
            SolveMethod::Iterative => write!(f, "iterative"),
        }
    }
}

/// Accounting attached to every solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    pub method: SolveMethod,
    /// 0 for the spectral method.
    pub iterations: usize,
    /// Relative L2 norm of `lap h - rhs`.
    pub residual: f64,
    pub wall_time: f64,
}

/// One DCT-II / DCT-III pair of a given length, built on a complex FFT of
/// twice the length (even-extension mapping).
struct DctPlan {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// exp(-i pi k / (2N)) for k in 0..N.
    twiddle: Vec<Complex<f64>>,
}

impl DctPlan {
    fn new(planner: &mut FftPlanner<f64>, n: usize) -> Self {
        let forward = planner.plan_fft_forward(2 * n);
        let inverse = planner.plan_fft_inverse(2 * n);
        let twiddle = (0..n)
            .map(|k| {
                let theta = std::f64::consts::PI * k as f64 / (2.0 * n as f64);
                Complex::new(theta.cos(), -theta.sin())
            })
            .collect();
        Self {
            n,
            forward,
            inverse,
            twiddle,
        }
    }

    fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    /// Unnormalized DCT-II: `out[k] = sum_n x[n] cos(pi k (2n+1) / (2N))`.
    fn dct2_row(&self, row: &mut [f64], buf: &mut [Complex<f64>], scratch: &mut [Complex<f64>]) {
        let n = self.n;
        for i in 0..n {
            buf[i] = Complex::new(row[i], 0.0);
            buf[2 * n - 1 - i] = Complex::new(row[i], 0.0);
        }
        self.forward.process_with_scratch(buf, scratch);
        for k in 0..n {
            let z = self.twiddle[k] * buf[k];
            row[k] = 0.5 * z.re;
        }
    }

    /// Inverse of [`Self::dct2_row`] (a scaled DCT-III).
    fn idct2_row(&self, row: &mut [f64], buf: &mut [Complex<f64>], scratch: &mut [Complex<f64>]) {
        let n = self.n;
        buf[0] = Complex::new(0.5 * row[0], 0.0);
        for k in 1..n {
            // c[k] * exp(+i pi k / (2N))
            buf[k] = self.twiddle[k].conj() * row[k];
        }
        for item in buf.iter_mut().take(2 * n).skip(n) {
            *item = Complex::new(0.0, 0.0);
        }
        self.inverse.process_with_scratch(buf, scratch);
        let scale = 2.0 / n as f64;
        for i in 0..n {
            row[i] = scale * buf[i].re;
        }
    }
}

/// Apply a 1-D transform to every row of a row-major buffer.
fn transform_rows<F>(exec: Exec, data: &mut [f64], width: usize, plan: &DctPlan, f: F)
where
    F: Fn(&DctPlan, &mut [f64], &mut [Complex<f64>], &mut [Complex<f64>]) + Sync,
{
    debug_assert_eq!(plan.n, width);
    let scratch_len = plan.scratch_len();
    match exec {
        Exec::Seq => {
            let mut buf = vec![Complex::new(0.0, 0.0); 2 * width];
            let mut scratch = vec![Complex::new(0.0, 0.0); scratch_len];
            for row in data.chunks_mut(width) {
                f(plan, row, &mut buf, &mut scratch);
            }
        }
        #[cfg(feature = "parallel")]
        Exec::Par => {
            use rayon::prelude::*;
            data.par_chunks_mut(width).for_each_init(
                || {
                    (
                        vec![Complex::new(0.0, 0.0); 2 * width],
                        vec![Complex::new(0.0, 0.0); scratch_len],
                    )
                },
                |(buf, scratch), row| f(plan, row, buf, scratch),
            );
        }
    }
}

fn transpose(src: &[f64], w: usize, h: usize, dst: &mut [f64]) {
    const BLOCK: usize = 64;
    for bv in (0..h).step_by(BLOCK) {
        for bu in (0..w).step_by(BLOCK) {
            for v in bv..(bv + BLOCK).min(h) {
                for u in bu..(bu + BLOCK).min(w) {
                    dst[u * h + v] = src[v * w + u];
                }
            }
        }
    }
}

/// Eigenvalues of the 1-D Neumann Laplacian stencil, `2 cos(pi k / N) - 2`.
fn laplacian_eigenvalues(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 2.0 * (std::f64::consts::PI * k as f64 / n as f64).cos() - 2.0)
        .collect()
}

fn solve_spectral_impl(rhs: &ScalarField, exec: Exec) -> Result<(ScalarField, SolveReport)> {
    let start = Instant::now();
    let (w, h) = (rhs.width(), rhs.height());

    // Neumann compatibility: project out the mean of the right-hand side.
    let mean = rhs.mean();
    let mut data: Vec<f64> = rhs.data().iter().map(|x| x - mean).collect();

    let mut planner = FftPlanner::new();
    let plan_w = DctPlan::new(&mut planner, w);
    let plan_h = DctPlan::new(&mut planner, h);

    // Forward DCT along u, then (transposed) along v.
    transform_rows(exec, &mut data, w, &plan_w, DctPlan::dct2_row);
    let mut t = vec![0.0; w * h];
    transpose(&data, w, h, &mut t);
    transform_rows(exec, &mut t, h, &plan_h, DctPlan::dct2_row);

    // Divide by the eigenvalue sum; zero the DC coefficient (zero-mean gauge).
    let lam_u = laplacian_eigenvalues(w);
    let lam_v = laplacian_eigenvalues(h);
    exec::fill_rows(exec, &mut t, h, |ku, row| {
        for (kv, c) in row.iter_mut().enumerate() {
            if ku == 0 && kv == 0 {
                *c = 0.0;
            } else {
                *c /= lam_u[ku] + lam_v[kv];
            }
        }
    });

    // Inverse transforms back.
    transform_rows(exec, &mut t, h, &plan_h, DctPlan::idct2_row);
    transpose(&t, h, w, &mut data);
    transform_rows(exec, &mut data, w, &plan_w, DctPlan::idct2_row);

    let mut out = ScalarField::from_parts(w, h, data);
    let out_mean = out.mean();
    out.shift(-out_mean);

    let residual = relative_residual(&out, rhs);
    let report = SolveReport {
        method: SolveMethod::Spectral,
        iterations: 0,
        residual,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((out, report))
}

/// Relative L2 norm of `lap h - rhs` against the mean-removed `rhs`.
fn relative_residual(h: &ScalarField, rhs: &ScalarField) -> f64 {
    let lap = divergence(&gradient(h));
    let mean = rhs.mean();
    let w = rhs.width();
    let (num, den) = (0..rhs.height()).fold((0.0, 0.0), |(num, den), v| {
        let mut n = 0.0;
        let mut d = 0.0;
        for u in 0..w {
            let b = rhs.at(u, v) - mean;
            let r = lap.at(u, v) - b;
            n += r * r;
            d += b * b;
        }
        (num + n, den + d)
    });
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            num.sqrt()
        }
    } else {
        (num / den).sqrt()
    }
}

/// Solve `lap h = rhs` via cosine-basis diagonalization. Deterministic;
/// the returned field has zero mean.
pub fn solve_spectral(rhs: &ScalarField) -> Result<(ScalarField, SolveReport)> {
    solve_spectral_impl(rhs, Exec::auto())
}

/// Sequential variant of [`solve_spectral`] (identical output).
pub fn solve_spectral_seq(rhs: &ScalarField) -> Result<(ScalarField, SolveReport)> {
    solve_spectral_impl(rhs, Exec::Seq)
}

/// Apply the negated Neumann Laplacian `y = -lap x` (a positive
/// semidefinite operator) row by row.
fn apply_neg_laplacian(exec: Exec, x: &[f64], w: usize, h: usize, y: &mut [f64]) {
    exec::fill_rows(exec, y, w, |v, row| {
        for (u, out) in row.iter_mut().enumerate() {
            let i = v * w + u;
            let c = x[i];
            let mut acc = 0.0;
            if u + 1 < w {
                acc += c - x[i + 1];
            }
            if u >= 1 {
                acc += c - x[i - 1];
            }
            if v + 1 < h {
                acc += c - x[i + w];
            }
            if v >= 1 {
                acc += c - x[i - w];
            }
            *out = acc;
        }
    });
}

fn dot(exec: Exec, a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    exec::sum_rows(exec, h, |v| {
        let mut acc = 0.0;
        for u in 0..w {
            acc += a[v * w + u] * b[v * w + u];
        }
        acc
    })
}

/// Jacobi-preconditioned conjugate gradients on `-lap h = -rhs`.
///
/// Reductions are per-row partials folded in row order, so the iteration
/// and its result are identical for any thread count.
pub fn solve_iterative(
    rhs: &ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<(ScalarField, SolveReport)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("tol must be positive"));
    }
    if max_iter == 0 {
        return Err(Error::InvalidConfig("max_iter must be at least 1"));
    }
    let start = Instant::now();
    let exec = Exec::auto();
    let (w, h) = (rhs.width(), rhs.height());
    let n = w * h;

    let mean = rhs.mean();
    // A x = b with A = -lap and b = -(rhs - mean).
    let b: Vec<f64> = rhs.data().iter().map(|x| -(x - mean)).collect();
    let bnorm = dot(exec, &b, &b, w, h).sqrt();
    if bnorm == 0.0 {
        let out = ScalarField::zeros(w, h)?;
        let report = SolveReport {
            method: SolveMethod::Iterative,
            iterations: 0,
            residual: 0.0,
            wall_time: start.elapsed().as_secs_f64(),
        };
        return Ok((out, report));
    }

    // Jacobi preconditioner: diagonal of -lap is the neighbor count.
    let mut inv_diag = vec![0.0; n];
    for v in 0..h {
        for u in 0..w {
            let mut deg = 0.0;
            if u + 1 < w {
                deg += 1.0;
            }
            if u >= 1 {
                deg += 1.0;
            }
            if v + 1 < h {
                deg += 1.0;
            }
            if v >= 1 {
                deg += 1.0;
            }
            inv_diag[v * w + u] = 1.0 / deg;
        }
    }

    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(exec, &r, &z, w, h);
    let mut ap = vec![0.0; n];

    let mut iterations = 0;
    let mut rel = 1.0;
    for it in 1..=max_iter {
        apply_neg_laplacian(exec, &p, w, h, &mut ap);
        let pap = dot(exec, &p, &ap, w, h);
        if pap <= 0.0 {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations = it;
        rel = dot(exec, &r, &r, w, h).sqrt() / bnorm;
        if rel <= tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(exec, &r, &z, w, h);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if rel > tol {
        return Err(Error::NonConvergence {
            iterations,
            residual: rel,
        });
    }

    let mut out = ScalarField::from_parts(w, h, x);
    let m = out.mean();
    out.shift(-m);
    let residual = relative_residual(&out, rhs);
    let report = SolveReport {
        method: SolveMethod::Iterative,
        iterations,
        residual,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((out, report))
}

/// Divergence, then spectral solve: the zero-mean height field whose
/// gradient best matches `g`.
pub fn reconstruct_from_gradients(g: &GradientField) -> Result<(ScalarField, SolveReport)> {
    solve_spectral(&divergence(g))
}

/// Sequential variant of [`reconstruct_from_gradients`] (identical output).
pub fn reconstruct_from_gradients_seq(g: &GradientField) -> Result<(ScalarField, SolveReport)> {
    let rhs = crate::field::divergence_seq(g);
    solve_spectral_seq(&rhs)
}

/// Shared dimension check for callers pairing fields with gradients.
pub(crate) fn check_same_grid(h: &ScalarField, g: &GradientField) -> Result<()> {
    check_dims(h.width(), h.height(), g.width(), g.height())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::gradient;

    fn naive_dct2(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(i, &xi)| {
                        xi * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64
                            / (2.0 * n as f64))
                            .cos()
                    })
                    .sum()
            })
            .collect()
    }

    fn naive_idct2(c: &[f64]) -> Vec<f64> {
        let n = c.len();
        (0..n)
            .map(|i| {
                let mut acc = c[0] / 2.0;
                for (k, &ck) in c.iter().enumerate().skip(1) {
                    acc += ck
                        * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n as f64))
                            .cos();
                }
                2.0 * acc / n as f64
            })
            .collect()
    }

    #[test]
    fn dct_rows_match_naive_oracle() {
        for n in [2usize, 3, 8, 13] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 5) as f64 * 0.31 - 0.4).collect();
            let mut planner = FftPlanner::new();
            let plan = DctPlan::new(&mut planner, n);
            let mut row = x.clone();
            let mut buf = vec![Complex::new(0.0, 0.0); 2 * n];
            let mut scratch = vec![Complex::new(0.0, 0.0); plan.scratch_len()];
            plan.dct2_row(&mut row, &mut buf, &mut scratch);
            let oracle = naive_dct2(&x);
            for (a, b) in row.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12, "forward mismatch for n = {n}");
            }
            plan.idct2_row(&mut row, &mut buf, &mut scratch);
            let back = naive_idct2(&oracle);
            for ((a, b), orig) in row.iter().zip(&back).zip(&x) {
                assert!((a - b).abs() < 1e-12);
                assert!((a - orig).abs() < 1e-12, "round trip broken for n = {n}");
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero_field() {
        let rhs = ScalarField::zeros(8, 6).unwrap();
        let (h, report) = solve_spectral(&rhs).unwrap();
        assert!(h.data().iter().all(|&x| x.abs() < 1e-14));
        assert_eq!(report.iterations, 0);
        assert_eq!(report.method, SolveMethod::Spectral);
    }

    #[test]
    fn exact_gradient_round_trip() {
        let h = ScalarField::from_fn(32, 24, |u, v| {
            (0.3 * u as f64 / 31.0).sin() + (0.7 * v as f64 / 23.0).cos() * 0.5
        })
        .unwrap();
        let (rec, report) = reconstruct_from_gradients(&gradient(&h)).unwrap();
        let mut centered = h.clone();
        let m = centered.mean();
        centered.shift(-m);
        assert!(rec.rmse(&centered).unwrap() < 1e-10);
        assert!(report.residual < 1e-10);
    }

    #[test]
    fn analytic_neumann_field_256() {
        let (w, h) = (256, 256);
        let star = ScalarField::from_fn(w, h, |u, v| {
            (std::f64::consts::PI * u as f64 / (w - 1) as f64).cos()
                * (std::f64::consts::PI * v as f64 / (h - 1) as f64).cos()
        })
        .unwrap();
        let (rec, _) = reconstruct_from_gradients(&gradient(&star)).unwrap();
        let mut centered = star.clone();
        let m = centered.mean();
        centered.shift(-m);
        assert!(rec.rmse(&centered).unwrap() < 1e-6);
    }

    #[test]
    fn iterative_zero_rhs_takes_no_iterations() {
        let rhs = ScalarField::zeros(8, 8).unwrap();
        let (h, report) = solve_iterative(&rhs, 1e-10, 100).unwrap();
        assert!(h.data().iter().all(|&x| x == 0.0));
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn iterative_matches_spectral_on_random_divergence() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let g = GradientField::new(
            64,
            64,
            (0..64 * 64).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..64 * 64).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let rhs = divergence(&g);
        let (hs, _) = solve_spectral(&rhs).unwrap();
        let (hi, report) = solve_iterative(&rhs, 1e-12, 10_000).unwrap();
        assert!(hs.rmse(&hi).unwrap() < 1e-8);
        assert!(report.iterations > 0);
        assert_eq!(report.method, SolveMethod::Iterative);
    }

    #[test]
    fn iterative_recovers_analytic_field_256() {
        let (w, h) = (256, 256);
        let star = ScalarField::from_fn(w, h, |u, v| {
            (std::f64::consts::PI * u as f64 / (w - 1) as f64).cos()
                * (std::f64::consts::PI * v as f64 / (h - 1) as f64).cos()
        })
        .unwrap();
        let rhs = divergence(&gradient(&star));
        let (rec, _) = solve_iterative(&rhs, 1e-10, 20_000).unwrap();
        let mut centered = star.clone();
        let m = centered.mean();
        centered.shift(-m);
        assert!(rec.rmse(&centered).unwrap() < 1e-6);
    }

    #[test]
    fn iterative_reports_nonconvergence() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = GradientField::new(
            32,
            32,
            (0..32 * 32).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..32 * 32).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let rhs = divergence(&g);
        match solve_iterative(&rhs, 1e-14, 2) {
            Err(Error::NonConvergence { iterations, .. }) => assert_eq!(iterations, 2),
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn variational_optimality() {
        // <gradient(h) - g, gradient(w)> ~ 0 for random test fields w.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let g = GradientField::new(
            24,
            24,
            (0..24 * 24).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..24 * 24).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let (h, _) = reconstruct_from_gradients(&g).unwrap();
        let gh = gradient(&h);
        let res = GradientField::new(
            24,
            24,
            gh.du().iter().zip(g.du()).map(|(a, b)| a - b).collect(),
            gh.dv().iter().zip(g.dv()).map(|(a, b)| a - b).collect(),
        )
        .unwrap();
        let res_norm = crate::field::gradient_dot(&res, &res).unwrap().sqrt();
        for _ in 0..20 {
            let wf = ScalarField::from_fn(24, 24, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
            let gw = gradient(&wf);
            let gw_norm = crate::field::gradient_dot(&gw, &gw).unwrap().sqrt();
            let inner = crate::field::gradient_dot(&res, &gw).unwrap();
            assert!(
                inner.abs() <= 1e-8 * res_norm * gw_norm + 1e-12,
                "optimality violated: {inner}"
            );
        }
    }

    #[test]
    fn output_is_zero_mean() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let g = GradientField::new(
            16,
            12,
            (0..192).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..192).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let (h, _) = reconstruct_from_gradients(&g).unwrap();
        assert!(h.mean().abs() < 1e-12);
    }

    #[test]
    fn remapped_step_reconstruction_shrinks_jump() {
        use crate::gradmap::{phi1, PhiMode};
        // 0/1 step image; the 1-D oracle integrates the remapped step
        // gradients: the jump collapses to S(1, 8) < 1.
        let (w, h) = (64, 16);
        let step = ScalarField::from_fn(w, h, |u, _| if u >= w / 2 { 1.0 } else { 0.0 }).unwrap();
        let g = phi1(&gradient(&step), 8.0, PhiMode::Normalized).unwrap();
        let (rec, _) = reconstruct_from_gradients(&g).unwrap();
        let row = h / 2;
        let left: f64 = (8..24).map(|u| rec.at(u, row)).sum::<f64>() / 16.0;
        let right: f64 = (40..56).map(|u| rec.at(u, row)).sum::<f64>() / 16.0;
        let jump = right - left;
        let oracle_jump = crate::gradmap::sigmoid_variant(1.0, 8.0).unwrap();
        assert!(jump > 0.9 && jump < 1.0, "jump = {jump}");
        assert!(jump <= oracle_jump + 1e-6);
        // Background (left plateau) stays flat relative to the contrast.
        let var: f64 = (8..24)
            .map(|u| (rec.at(u, row) - left).powi(2))
            .sum::<f64>()
            / 16.0;
        assert!(var.sqrt() < 0.1 * jump);
    }

    #[test]
    fn spectral_par_and_seq_agree_bitwise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = GradientField::new(
            33,
            19,
            (0..33 * 19).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..33 * 19).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let (a, _) = reconstruct_from_gradients(&g).unwrap();
        let (b, _) = reconstruct_from_gradients_seq(&g).unwrap();
        assert_eq!(a, b);
    }
}
