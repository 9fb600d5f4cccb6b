//! Bernstein basis evaluation and patch differential geometry.
//!
//! Everything here is evaluated in the direct monomial-weighted form with a
//! fixed summation order, so results are deterministic across runs and the
//! same parameter value always reproduces the same bits.

use nalgebra::{Point3, Vector3};

use crate::cage::{Patch, PatchKind, MAX_DEGREE};
use crate::error::{Error, Result};

/// Slack admitted around the parameter domain before evaluation errors out.
/// Midpoint subdivision can land a hair outside `u + v <= 1` in floating
/// point; anything beyond this band is a caller bug.
pub const DOMAIN_EPS: f64 = 1e-12;

const N: usize = MAX_DEGREE + 1;
const TRI_MAX: usize = N * (N + 1) / 2;

/// `BINOM[n][k]` = C(n, k) for `n, k <= MAX_DEGREE`, exact in f64.
const BINOM: [[f64; N]; N] = binom_table();

const fn binom_table() -> [[f64; N]; N] {
    let mut t = [[0u64; N]; N];
    let mut n = 0;
    while n < N {
        t[n][0] = 1;
        t[n][n] = 1;
        let mut k = 1;
        while k < n {
            t[n][k] = t[n - 1][k - 1] + t[n - 1][k];
            k += 1;
        }
        n += 1;
    }
    let mut out = [[0.0f64; N]; N];
    let mut i = 0;
    while i < N {
        let mut k = 0;
        while k < N {
            out[i][k] = t[i][k] as f64;
            k += 1;
        }
        i += 1;
    }
    out
}

/// Fill `out[0..=n]` with the degree-`n` Bernstein values at `t`.
pub(crate) fn bernstein_into(n: usize, t: f64, out: &mut [f64]) {
    debug_assert!(n <= MAX_DEGREE && out.len() > n);
    let s = 1.0 - t;
    let mut tp = [0.0f64; N];
    let mut sp = [0.0f64; N];
    tp[0] = 1.0;
    sp[0] = 1.0;
    for i in 1..=n {
        tp[i] = tp[i - 1] * t;
        sp[i] = sp[i - 1] * s;
    }
    for i in 0..=n {
        out[i] = BINOM[n][i] * tp[i] * sp[n - i];
    }
}

/// Fill `out[0..=n]` with the derivatives of the degree-`n` Bernstein values
/// at `t`, via the degree-`n-1` difference form.
pub(crate) fn bernstein_deriv_into(n: usize, t: f64, out: &mut [f64]) {
    debug_assert!(n >= 1 && n <= MAX_DEGREE && out.len() > n);
    let mut lower = [0.0f64; N];
    bernstein_into(n - 1, t, &mut lower);
    let nf = n as f64;
    out[0] = -nf * lower[0];
    for i in 1..n {
        out[i] = nf * (lower[i - 1] - lower[i]);
    }
    out[n] = nf * lower[n - 1];
}

/// Fill `out` with the degree-`n` simplex basis values at `(u, v)`,
/// lexicographic in `(i, j)`.
pub(crate) fn triangle_weights_into(n: usize, u: f64, v: f64, out: &mut [f64]) {
    debug_assert!(n <= MAX_DEGREE && out.len() >= (n + 1) * (n + 2) / 2);
    let w = 1.0 - u - v;
    let mut up = [0.0f64; N];
    let mut vp = [0.0f64; N];
    let mut wp = [0.0f64; N];
    up[0] = 1.0;
    vp[0] = 1.0;
    wp[0] = 1.0;
    for i in 1..=n {
        up[i] = up[i - 1] * u;
        vp[i] = vp[i - 1] * v;
        wp[i] = wp[i - 1] * w;
    }
    let mut idx = 0;
    for i in 0..=n {
        for j in 0..=n - i {
            out[idx] = BINOM[n][i] * BINOM[n - i][j] * up[i] * vp[j] * wp[n - i - j];
            idx += 1;
        }
    }
}

impl Patch {
    fn check_domain(&self, u: f64, v: f64) -> Result<()> {
        let ok = match self.kind() {
            PatchKind::Tensor => {
                u >= -DOMAIN_EPS && u <= 1.0 + DOMAIN_EPS && v >= -DOMAIN_EPS && v <= 1.0 + DOMAIN_EPS
            }
            PatchKind::Triangle => u >= -DOMAIN_EPS && v >= -DOMAIN_EPS && u + v <= 1.0 + DOMAIN_EPS,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::OutsideDomain { u, v })
        }
    }

    /// Evaluate the patch surface at `(u, v)`.
    pub fn point(&self, u: f64, v: f64) -> Result<Point3<f64>> {
        self.check_domain(u, v)?;
        Ok(self.point_raw(u, v))
    }

    /// First partial derivatives `(d/du, d/dv)` of the surface at `(u, v)`.
    pub fn partials(&self, u: f64, v: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
        self.check_domain(u, v)?;
        Ok(self.partials_raw(u, v))
    }

    /// Basis weights at `(u, v)`, one per control point in storage order.
    pub fn basis_weights(&self, u: f64, v: f64) -> Result<Vec<f64>> {
        self.check_domain(u, v)?;
        let mut out = Vec::new();
        self.weights_raw_into(u, v, &mut out);
        Ok(out)
    }

    pub(crate) fn point_raw(&self, u: f64, v: f64) -> Point3<f64> {
        let mut acc = Vector3::zeros();
        match self {
            Patch::Tensor(p) => {
                let (m, n) = p.degrees();
                let mut bu = [0.0f64; N];
                let mut bv = [0.0f64; N];
                bernstein_into(m, u, &mut bu);
                bernstein_into(n, v, &mut bv);
                let pts = p.points();
                for i in 0..=m {
                    for j in 0..=n {
                        acc += (bu[i] * bv[j]) * pts[i * (n + 1) + j].coords;
                    }
                }
            }
            Patch::Triangle(p) => {
                let n = p.degree();
                let mut w = [0.0f64; TRI_MAX];
                triangle_weights_into(n, u, v, &mut w);
                for (wt, pt) in w[..p.points().len()].iter().zip(p.points()) {
                    acc += *wt * pt.coords;
                }
            }
        }
        Point3::from(acc)
    }

    pub(crate) fn partials_raw(&self, u: f64, v: f64) -> (Vector3<f64>, Vector3<f64>) {
        let mut du = Vector3::zeros();
        let mut dv = Vector3::zeros();
        match self {
            Patch::Tensor(p) => {
                let (m, n) = p.degrees();
                let mut bu = [0.0f64; N];
                let mut bv = [0.0f64; N];
                let mut dbu = [0.0f64; N];
                let mut dbv = [0.0f64; N];
                bernstein_into(m, u, &mut bu);
                bernstein_into(n, v, &mut bv);
                bernstein_deriv_into(m, u, &mut dbu);
                bernstein_deriv_into(n, v, &mut dbv);
                let pts = p.points();
                for i in 0..=m {
                    for j in 0..=n {
                        let c = pts[i * (n + 1) + j].coords;
                        du += (dbu[i] * bv[j]) * c;
                        dv += (bu[i] * dbv[j]) * c;
                    }
                }
            }
            Patch::Triangle(p) => {
                let n = p.degree();
                let mut low = [0.0f64; TRI_MAX];
                triangle_weights_into(n - 1, u, v, &mut low);
                let nf = n as f64;
                let mut idx = 0;
                for i in 0..n {
                    for j in 0..n - i {
                        let g = low[idx];
                        idx += 1;
                        let base = p.point(i, j).coords;
                        du += g * (p.point(i + 1, j).coords - base);
                        dv += g * (p.point(i, j + 1).coords - base);
                    }
                }
                du *= nf;
                dv *= nf;
            }
        }
        (du, dv)
    }

    /// Partial derivatives of every basis weight at `(u, v)`, filled into
    /// `du_out` / `dv_out` in control-point storage order.
    pub(crate) fn weight_grads_raw_into(
        &self,
        u: f64,
        v: f64,
        du_out: &mut Vec<f64>,
        dv_out: &mut Vec<f64>,
    ) {
        du_out.clear();
        dv_out.clear();
        match self {
            Patch::Tensor(p) => {
                let (m, n) = p.degrees();
                let mut bu = [0.0f64; N];
                let mut bv = [0.0f64; N];
                let mut dbu = [0.0f64; N];
                let mut dbv = [0.0f64; N];
                bernstein_into(m, u, &mut bu);
                bernstein_into(n, v, &mut bv);
                bernstein_deriv_into(m, u, &mut dbu);
                bernstein_deriv_into(n, v, &mut dbv);
                for i in 0..=m {
                    for j in 0..=n {
                        du_out.push(dbu[i] * bv[j]);
                        dv_out.push(bu[i] * dbv[j]);
                    }
                }
            }
            Patch::Triangle(p) => {
                let n = p.degree();
                let mut low = [0.0f64; TRI_MAX];
                triangle_weights_into(n - 1, u, v, &mut low);
                let nf = n as f64;
                // Lexicographic index into the degree-(n-1) table.
                let li = |a: usize, b: usize| a * n - a * (a.saturating_sub(1)) / 2 + b;
                for i in 0..=n {
                    for j in 0..=n - i {
                        let towards_w = if i + j <= n - 1 { low[li(i, j)] } else { 0.0 };
                        let from_u = if i >= 1 { low[li(i - 1, j)] } else { 0.0 };
                        let from_v = if j >= 1 { low[li(i, j - 1)] } else { 0.0 };
                        du_out.push(nf * (from_u - towards_w));
                        dv_out.push(nf * (from_v - towards_w));
                    }
                }
            }
        }
    }

    pub(crate) fn weights_raw_into(&self, u: f64, v: f64, out: &mut Vec<f64>) {
        out.clear();
        match self {
            Patch::Tensor(p) => {
                let (m, n) = p.degrees();
                let mut bu = [0.0f64; N];
                let mut bv = [0.0f64; N];
                bernstein_into(m, u, &mut bu);
                bernstein_into(n, v, &mut bv);
                for i in 0..=m {
                    for j in 0..=n {
                        out.push(bu[i] * bv[j]);
                    }
                }
            }
            Patch::Triangle(p) => {
                let n = p.degree();
                let count = p.points().len();
                out.resize(count, 0.0);
                triangle_weights_into(n, u, v, &mut out[..]);
            }
        }
    }
}
