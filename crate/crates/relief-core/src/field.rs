//! Grid primitives and discrete differential operators.
//!
//! Conventions used throughout the crate:
//! - fields are row-major, `u` indexes columns (width), `v` indexes rows;
//! - `gradient` takes forward differences with a replicated boundary
//!   (last column of `du` and last row of `dv` are zero);
//! - `divergence` is the negative adjoint of `gradient`, so for any fields
//!   on the same grid `<gradient(h), g> + <h, divergence(g)> = 0` exactly
//!   in exact arithmetic. All downstream loss gradients and the Poisson
//!   solver rely on that identity.

use crate::error::{Error, Result};
use crate::exec::{self, Exec};

/// Rectangular grid of scalar heights, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarField {
    /// Validates dimensions (≥ 2×2), length and finiteness.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::GridTooSmall { width, height });
        }
        if data.len() != width * height {
            return Err(Error::DataLength {
                width,
                height,
                got: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::GridTooSmall { width, height });
        }
        Ok(Self {
            width,
            height,
            data: vec![0.0; width * height],
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Build from a per-pixel function of (u, v).
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(
        width: usize,
        height: usize,
        mut f: F,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                data.push(f(u, v));
            }
        }
        Self::new(width, height, data)
    }

    pub(crate) fn from_parts(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: f64) {
        self.data[v * self.width + u] = value;
    }

    pub fn same_shape(&self, other: &ScalarField) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn mean(&self) -> f64 {
        let w = self.width;
        let data = &self.data;
        let total = exec::sum_rows(Exec::Seq, self.height, |v| {
            data[v * w..(v + 1) * w].iter().sum::<f64>()
        });
        total / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// In-place `self += scale * other`.
    pub fn add_scaled(&mut self, other: &ScalarField, scale: f64) -> Result<()> {
        check_dims(self.width, self.height, other.width, other.height)?;
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += scale * b;
        }
        Ok(())
    }

    /// In-place `self += c`.
    pub fn shift(&mut self, c: f64) {
        for a in self.data.iter_mut() {
            *a += c;
        }
    }

    /// In-place `self *= c`.
    pub fn scale(&mut self, c: f64) {
        for a in self.data.iter_mut() {
            *a *= c;
        }
    }

    /// Root-mean-square difference between two same-shape fields.
    pub fn rmse(&self, other: &ScalarField) -> Result<f64> {
        check_dims(self.width, self.height, other.width, other.height)?;
        let w = self.width;
        let (a, b) = (&self.data, &other.data);
        let ss = exec::sum_rows(Exec::Seq, self.height, |v| {
            let ra = &a[v * w..(v + 1) * w];
            let rb = &b[v * w..(v + 1) * w];
            ra.iter()
                .zip(rb)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
        });
        Ok((ss / self.data.len() as f64).sqrt())
    }
}

/// Per-pixel 2-vectors (height units per pixel).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    du: Vec<f64>,
    dv: Vec<f64>,
}

impl GradientField {
    pub fn new(width: usize, height: usize, du: Vec<f64>, dv: Vec<f64>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::GridTooSmall { width, height });
        }
        for data in [&du, &dv] {
            if data.len() != width * height {
                return Err(Error::DataLength {
                    width,
                    height,
                    got: data.len(),
                });
            }
            if let Some(index) = data.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(Self {
            width,
            height,
            du,
            dv,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::GridTooSmall { width, height });
        }
        Ok(Self {
            width,
            height,
            du: vec![0.0; width * height],
            dv: vec![0.0; width * height],
        })
    }

    pub(crate) fn from_parts(width: usize, height: usize, du: Vec<f64>, dv: Vec<f64>) -> Self {
        debug_assert_eq!(du.len(), width * height);
        debug_assert_eq!(dv.len(), width * height);
        Self {
            width,
            height,
            du,
            dv,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn du(&self) -> &[f64] {
        &self.du
    }

    pub fn dv(&self) -> &[f64] {
        &self.dv
    }

    pub fn du_mut(&mut self) -> &mut [f64] {
        &mut self.du
    }

    pub fn dv_mut(&mut self) -> &mut [f64] {
        &mut self.dv
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> (f64, f64) {
        let i = v * self.width + u;
        (self.du[i], self.dv[i])
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, du: f64, dv: f64) {
        let i = v * self.width + u;
        self.du[i] = du;
        self.dv[i] = dv;
    }

    pub fn same_shape_as_field(&self, f: &ScalarField) -> bool {
        self.width == f.width() && self.height == f.height()
    }
}

/// Per-pixel unit 3-vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    width: usize,
    height: usize,
    nx: Vec<f64>,
    ny: Vec<f64>,
    nz: Vec<f64>,
}

impl NormalField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn nx(&self) -> &[f64] {
        &self.nx
    }

    pub fn ny(&self) -> &[f64] {
        &self.ny
    }

    pub fn nz(&self) -> &[f64] {
        &self.nz
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> (f64, f64, f64) {
        let i = v * self.width + u;
        (self.nx[i], self.ny[i], self.nz[i])
    }
}

/// Per-pixel binary foreground indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskField {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl MaskField {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::GridTooSmall { width, height });
        }
        if data.len() != width * height {
            return Err(Error::DataLength {
                width,
                height,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn all_true(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn from_fn<F: FnMut(usize, usize) -> bool>(
        width: usize,
        height: usize,
        mut f: F,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                data.push(f(u, v));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> bool {
        self.data[v * self.width + u]
    }

    /// Number of foreground pixels.
    pub fn count_foreground(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn same_shape_as_field(&self, f: &ScalarField) -> bool {
        self.width == f.width() && self.height == f.height()
    }
}

pub(crate) fn check_dims(ew: usize, eh: usize, gw: usize, gh: usize) -> Result<()> {
    if ew != gw || eh != gh {
        return Err(Error::DimensionMismatch {
            expected_width: ew,
            expected_height: eh,
            got_width: gw,
            got_height: gh,
        });
    }
    Ok(())
}

fn gradient_impl(h: &ScalarField, exec: Exec) -> GradientField {
    let (w, ht) = (h.width(), h.height());
    let mut du = vec![0.0; w * ht];
    let mut dv = vec![0.0; w * ht];
    let data = h.data();
    exec::fill_rows2(exec, &mut du, &mut dv, w, |v, du_row, dv_row| {
        let row = &data[v * w..(v + 1) * w];
        for u in 0..w - 1 {
            du_row[u] = row[u + 1] - row[u];
        }
        du_row[w - 1] = 0.0;
        if v + 1 < ht {
            let next = &data[(v + 1) * w..(v + 2) * w];
            for u in 0..w {
                dv_row[u] = next[u] - row[u];
            }
        } else {
            for x in dv_row.iter_mut() {
                *x = 0.0;
            }
        }
    });
    GradientField::from_parts(w, ht, du, dv)
}

/// Forward-difference gradient with replicated boundary.
pub fn gradient(h: &ScalarField) -> GradientField {
    gradient_impl(h, Exec::auto())
}

/// Sequential variant of [`gradient`] (identical output).
pub fn gradient_seq(h: &ScalarField) -> GradientField {
    gradient_impl(h, Exec::Seq)
}

fn divergence_impl(g: &GradientField, exec: Exec) -> ScalarField {
    let (w, ht) = (g.width(), g.height());
    let mut out = vec![0.0; w * ht];
    let (du, dv) = (g.du(), g.dv());
    exec::fill_rows(exec, &mut out, w, |v, row| {
        let du_row = &du[v * w..(v + 1) * w];
        for u in 0..w {
            let mut acc = 0.0;
            if u + 1 < w {
                acc += du_row[u];
            }
            if u >= 1 {
                acc -= du_row[u - 1];
            }
            if v + 1 < ht {
                acc += dv[v * w + u];
            }
            if v >= 1 {
                acc -= dv[(v - 1) * w + u];
            }
            row[u] = acc;
        }
    });
    ScalarField::from_parts(w, ht, out)
}

/// Backward-difference divergence, the negative adjoint of [`gradient`].
///
/// The last column of `du` and last row of `dv` never enter the result;
/// the gradient never writes them, so adjointness requires dropping them.
pub fn divergence(g: &GradientField) -> ScalarField {
    divergence_impl(g, Exec::auto())
}

/// Sequential variant of [`divergence`] (identical output).
pub fn divergence_seq(g: &GradientField) -> ScalarField {
    divergence_impl(g, Exec::Seq)
}

/// Per pixel `n = (-du, -dv, eta)` normalized to unit length.
pub fn normals_from_gradient(g: &GradientField, eta: f64) -> Result<NormalField> {
    if !(eta > 0.0) {
        return Err(Error::NonPositiveEta(eta));
    }
    let (w, ht) = (g.width(), g.height());
    let mut nx = vec![0.0; w * ht];
    let mut ny = vec![0.0; w * ht];
    let mut nz = vec![0.0; w * ht];
    let (du, dv) = (g.du(), g.dv());
    exec::fill_rows3(
        Exec::auto(),
        &mut nx,
        &mut ny,
        &mut nz,
        w,
        |v, rx, ry, rz| {
            for u in 0..w {
                let i = v * w + u;
                let (p, q) = (du[i], dv[i]);
                let len = (p * p + q * q + eta * eta).sqrt();
                rx[u] = -p / len;
                ry[u] = -q / len;
                rz[u] = eta / len;
            }
        },
    );
    Ok(NormalField {
        width: w,
        height: ht,
        nx,
        ny,
        nz,
    })
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // a + t*(b - a): exact for a == b and at t == 0.
    a + t * (b - a)
}

/// Bilinear resampling with edge clamping (align-corners mapping).
/// Identity (bit-exact clone) when the dimensions are unchanged.
pub fn resample(h: &ScalarField, new_width: usize, new_height: usize) -> Result<ScalarField> {
    if new_width < 2 || new_height < 2 {
        return Err(Error::GridTooSmall {
            width: new_width,
            height: new_height,
        });
    }
    let (w, ht) = (h.width(), h.height());
    if new_width == w && new_height == ht {
        return Ok(h.clone());
    }
    let data = h.data();
    let mut out = vec![0.0; new_width * new_height];
    let sx = (w - 1) as f64 / (new_width - 1) as f64;
    let sy = (ht - 1) as f64 / (new_height - 1) as f64;
    exec::fill_rows(Exec::auto(), &mut out, new_width, |v2, row| {
        let y = v2 as f64 * sy;
        let y0 = (y.floor() as usize).min(ht - 1);
        let y1 = (y0 + 1).min(ht - 1);
        let ty = y - y0 as f64;
        let r0 = &data[y0 * w..y0 * w + w];
        let r1 = &data[y1 * w..y1 * w + w];
        for (u2, out_px) in row.iter_mut().enumerate() {
            let x = u2 as f64 * sx;
            let x0 = (x.floor() as usize).min(w - 1);
            let x1 = (x0 + 1).min(w - 1);
            let tx = x - x0 as f64;
            let top = lerp(r0[x0], r0[x1], tx);
            let bot = lerp(r1[x0], r1[x1], tx);
            *out_px = lerp(top, bot, ty);
        }
    });
    Ok(ScalarField::from_parts(new_width, new_height, out))
}

/// Inner product of two gradient fields (row-order reduction).
pub fn gradient_dot(a: &GradientField, b: &GradientField) -> Result<f64> {
    check_dims(a.width(), a.height(), b.width(), b.height())?;
    let w = a.width();
    Ok(exec::sum_rows(Exec::Seq, a.height(), |v| {
        let r = v * w..(v + 1) * w;
        let mut acc = 0.0;
        for i in r {
            acc += a.du()[i] * b.du()[i] + a.dv()[i] * b.dv()[i];
        }
        acc
    }))
}

/// Inner product of two scalar fields (row-order reduction).
pub fn field_dot(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    check_dims(a.width(), a.height(), b.width(), b.height())?;
    let w = a.width();
    Ok(exec::sum_rows(Exec::Seq, a.height(), |v| {
        let mut acc = 0.0;
        for i in v * w..(v + 1) * w {
            acc += a.data()[i] * b.data()[i];
        }
        acc
    }))
}
