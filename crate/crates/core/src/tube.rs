//! The tube domain `T_Ω = V + iΩ` and the weighted Bergman kernels on it.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::cone::{index_data, integrate_omega, integrate_omega_complex, invariant_distance, SpectralParam};
use crate::error::{Error, Result};
use crate::jordan::{sym_leading_minors, AlgebraKind, Coeffs, Element};
use crate::quad::{gauss_legendre, integrate, panels_for, tensor_sum, CellOrder, CompositeRule, Integral, QuadratureConfig};

pub type CMinors = SmallVec<[Complex64; 4]>;

/// Default lower bound for the minors of the imaginary part of a tube point.
pub const DEFAULT_CONE_MARGIN: f64 = 0.0;

/// `z = x + iy` with `y ∈ Ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubePoint {
    pub x: Coeffs,
    pub y: Element,
}

impl TubePoint {
    pub fn new(x: &[f64], y: Element) -> Result<Self> {
        Self::with_margin(x, y, DEFAULT_CONE_MARGIN)
    }

    /// Requires every minor of `y` to exceed `margin`.
    pub fn with_margin(x: &[f64], y: Element, margin: f64) -> Result<Self> {
        if x.len() != y.kind.dim() {
            return Err(Error::Dimension(format!("x has {} coordinates, expected {}", x.len(), y.kind.dim())));
        }
        if x.iter().chain(y.coeffs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite tube point".into()));
        }
        if y.minors().iter().any(|&d| !(d > margin)) {
            return Err(Error::Domain(format!("imaginary part {:?} is not in the cone", y.coeffs.as_slice())));
        }
        Ok(TubePoint { x: Coeffs::from_slice(x), y })
    }

    /// The base point `ie`.
    pub fn i_e(kind: AlgebraKind) -> Self {
        TubePoint { x: Coeffs::from_elem(0.0, kind.dim()), y: kind.identity() }
    }

    pub fn kind(&self) -> AlgebraKind {
        self.y.kind
    }

    pub fn translate(&self, a: &[f64]) -> TubePoint {
        let x = self.x.iter().zip(a).map(|(u, v)| u + v).collect();
        TubePoint { x, y: self.y.clone() }
    }

    /// Coordinates of `z/i = y − ix`.
    pub fn zeta(&self) -> SmallVec<[Complex64; 6]> {
        self.x.iter().zip(&self.y.coeffs).map(|(&x, &y)| Complex64::new(y, -x)).collect()
    }

    /// `z − w̄ = (x_z − x_w) + i(y_z + y_w)`.
    pub fn minus_conj(&self, w: &TubePoint) -> Result<TubePoint> {
        if self.kind() != w.kind() {
            return Err(Error::Dimension("tube points of different kinds".into()));
        }
        let x = self.x.iter().zip(&w.x).map(|(a, b)| a - b).collect();
        let y = self.y.coeffs.iter().zip(&w.y.coeffs).map(|(a, b)| a + b).collect();
        Ok(TubePoint { x, y: Element { kind: self.kind(), coeffs: y } })
    }
}

/// Complexified principal minors at the coordinates `zeta`.
pub fn complex_minors(kind: AlgebraKind, zeta: &[Complex64]) -> CMinors {
    match kind {
        AlgebraKind::Rank1 => smallvec![zeta[0]],
        AlgebraKind::Lorentz(_) => {
            let tail: Complex64 = zeta[1..].iter().map(|v| v * v).sum();
            smallvec![zeta[0] + zeta[1], zeta[0] * zeta[0] - tail]
        }
        AlgebraKind::SymMatrices(m) => sym_leading_minors(m, zeta),
    }
}

/// Polynomial degree of the minor `Δ_{k+1}`.
fn minor_degree(kind: AlgebraKind, k: usize) -> usize {
    match kind {
        AlgebraKind::Rank1 => 1,
        AlgebraKind::Lorentz(_) | AlgebraKind::SymMatrices(_) => k + 1,
    }
}

/// `(log Δ_1(z/i), …, log Δ_r(z/i))`, holomorphic in `z` and real on `iΩ`.
///
/// Minors of degree at most two take the principal branch. Higher-degree
/// minors are continued along `t ↦ y − itx`, `t ∈ [0, 1]`.
pub fn complex_minor_logs(z: &TubePoint) -> Result<CMinors> {
    let kind = z.kind();
    let vals = complex_minors(kind, &z.zeta());
    let mut out = CMinors::with_capacity(vals.len());
    let mut first_continued = None;
    for (k, v) in vals.iter().enumerate() {
        if minor_degree(kind, k) <= 2 {
            if !(v.norm() > 0.0) || !v.is_finite() {
                return Err(Error::Branch { t: 1.0, detail: format!("minor {} vanishes at z = {:?}", k + 1, z) });
            }
            out.push(v.ln());
        } else {
            first_continued.get_or_insert(k);
            out.push(Complex64::new(f64::NAN, f64::NAN));
        }
    }
    if let Some(k0) = first_continued {
        continue_logs(z, k0, &mut out)?;
    }
    Ok(out)
}

fn continue_logs(z: &TubePoint, k0: usize, out: &mut CMinors) -> Result<()> {
    const MAX_STEP: f64 = 0.125;
    let kind = z.kind();
    let r = out.len();
    let at = |t: f64| -> CMinors {
        let zeta: SmallVec<[Complex64; 6]> =
            z.x.iter().zip(&z.y.coeffs).map(|(&x, &y)| Complex64::new(y, -t * x)).collect();
        complex_minors(kind, &zeta)
    };
    let mut prev = at(0.0);
    let mut args: SmallVec<[f64; 4]> = smallvec![0.0; r];
    let (mut t, mut h) = (0.0, MAX_STEP);
    while t < 1.0 {
        let tn = (t + h).min(1.0);
        let vals = at(tn);
        let mut step: SmallVec<[f64; 4]> = smallvec![0.0; r];
        let mut ok = true;
        for k in k0..r {
            let v = vals[k];
            if !(v.norm() > 0.0) || !v.is_finite() {
                ok = false;
                break;
            }
            let a = (v / prev[k]).arg();
            if a.abs() > PI / 4.0 {
                ok = false;
                break;
            }
            step[k] = a;
        }
        if ok {
            for k in k0..r {
                args[k] += step[k];
            }
            prev = vals;
            t = tn;
            h = (2.0 * h).min(MAX_STEP);
        } else {
            h *= 0.5;
            if h < 1e-12 {
                return Err(Error::Branch {
                    t,
                    detail: format!("a complex minor vanishes on the segment from iy to z = {:?}", z),
                });
            }
        }
    }
    for k in k0..r {
        out[k] = Complex64::new(prev[k].norm().ln(), args[k]);
    }
    Ok(())
}

/// `log |Δ_k(z/i)|`; needs no branch choice.
pub fn log_abs_minors(kind: AlgebraKind, zeta: &[Complex64]) -> SmallVec<[f64; 4]> {
    complex_minors(kind, zeta).iter().map(|v| v.norm().ln()).collect()
}

/// Exponents `b_k − b_{k+1}` of the minors in `Δ_b`.
fn minor_exponents(b: &[f64]) -> SmallVec<[f64; 4]> {
    (0..b.len()).map(|k| b[k] - b.get(k + 1).copied().unwrap_or(0.0)).collect()
}

/// `−s − n/r`.
pub fn kernel_exponent(s: &SpectralParam) -> SpectralParam {
    s.neg().shift(-s.kind.n_over_r())
}

/// Weighted Bergman kernel `B_s = d_s Δ_{−s−n/r}((z − w̄)/i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub s: SpectralParam,
    pub d_s: f64,
    pub calibration_error: f64,
}

impl KernelSpec {
    /// A kernel with a known constant.
    pub fn with_constant(s: SpectralParam, d_s: f64) -> Result<Self> {
        if !s.bergman_ok() {
            return Err(Error::Domain(format!("s = {:?} is outside the Bergman range", s.s)));
        }
        if !(d_s > 0.0) {
            return Err(Error::Param("d_s must be positive".into()));
        }
        Ok(KernelSpec { s, d_s, calibration_error: 0.0 })
    }

    /// Exact half-plane constant `d_s = s 2^{s−1}/π`.
    pub fn rank1(s: f64) -> Result<Self> {
        Self::with_constant(SpectralParam::scalar(AlgebraKind::Rank1, s), s * 2f64.powf(s - 1.0) / PI)
    }
}

/// `log Δ_{−s−n/r}((z − w̄)/i)`.
pub fn log_unnormalized_kernel(z: &TubePoint, w: &TubePoint, s: &SpectralParam) -> Result<Complex64> {
    if s.kind != z.kind() {
        return Err(Error::Dimension("kernel parameter and point kinds differ".into()));
    }
    let logs = complex_minor_logs(&z.minus_conj(w)?)?;
    let e = minor_exponents(&kernel_exponent(s).s);
    Ok(logs.iter().zip(&e).filter(|(_, e)| **e != 0.0).map(|(l, e)| l * e).sum())
}

pub fn unnormalized_kernel(z: &TubePoint, w: &TubePoint, s: &SpectralParam) -> Result<Complex64> {
    Ok(log_unnormalized_kernel(z, w, s)?.exp())
}

pub fn bergman_kernel(z: &TubePoint, w: &TubePoint, ks: &KernelSpec) -> Result<Complex64> {
    Ok(ks.d_s * unnormalized_kernel(z, w, &ks.s)?)
}

/// `B_s(z, z) = d_s Δ_{−s−n/r}(2y)`.
pub fn kernel_diagonal(z: &TubePoint, ks: &KernelSpec) -> Result<f64> {
    Ok(ks.d_s * z.y.scale(2.0).power_delta(&kernel_exponent(&ks.s))?)
}

/// `∫_V |Δ_b(e − iτ)|² dτ` over the trace-Euclidean measure.
fn x_moment(b: &SpectralParam, cfg: &QuadratureConfig) -> Result<Integral> {
    let kind = b.kind;
    let scales = kind.ortho_scales();
    let e = minor_exponents(&b.s);
    let mut zeta: SmallVec<[Complex64; 6]> = kind.identity().coeffs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    integrate(kind.dim(), cfg.x_halfwidth, cfg, |sig| {
        let mut lw = 0.0;
        for i in 0..sig.len() {
            zeta[i].im = -sig[i].sinh() / scales[i];
            lw += sig[i].cosh().ln();
        }
        for (l, ek) in log_abs_minors(kind, &zeta).iter().zip(&e) {
            lw += 2.0 * ek * l;
        }
        Complex64::new(lw.exp(), 0.0)
    })
}

/// `∫_Ω Δ_{2b+n/r}(y0 + v) Δ_{s−n/r}(v) dv`.
fn height_integral(s: &SpectralParam, b: &SpectralParam, y0: &Element, cfg: &QuadratureConfig) -> Result<f64> {
    let nr = s.kind.n_over_r();
    let p = b.scale(2.0).shift(nr);
    let res = integrate_omega(s.kind, &s.shift(-nr), cfg, |v| {
        let a = Element { kind: v.kind, coeffs: v.coeffs.iter().zip(&y0.coeffs).map(|(a, b)| a + b).collect() };
        a.power_delta(&p).unwrap_or(0.0)
    })?;
    Ok(res.value)
}

/// Point used to measure the calibration residual.
fn calibration_check_point(kind: AlgebraKind) -> Element {
    let r = kind.rank();
    let w: Vec<f64> = if r == 1 {
        vec![2.0]
    } else {
        (0..r).map(|k| 2f64.powf(1.0 - 2.0 * k as f64 / (r - 1) as f64)).collect()
    };
    let d = kind.frame_diagonal(&w).expect("frame weights match the rank");
    // Tilt by a unipotent triangular map so the point is off the frame diagonal.
    let mut t = kind.identity();
    if kind.dim() > 1 {
        t.coeffs[kind.dim() - 1] += 0.25;
    }
    if t.in_cone() {
        let root = t.sqrt().expect("cone point");
        root.quadratic_rep_unchecked(&d)
    } else {
        d
    }
}

/// Calibrates `d_s` so that `B_s` reproduces itself at `ie`.
///
/// The `x`-integral of `|Δ_b(a − iu)|²` is `C_b Δ_{2b+n/r}(a)` by triangular
/// invariance, which leaves two `n`-dimensional quadratures. The residual of the
/// identity `‖B_s(·, z0)‖² = B_s(z0, z0)` at a second point is reported as
/// `calibration_error`.
pub fn calibrate_kernel_constant(s: &SpectralParam, cfg: &QuadratureConfig) -> Result<KernelSpec> {
    cfg.validate()?;
    if !s.bergman_ok() {
        return Err(Error::Domain(format!("s = {:?} is outside the Bergman range", s.s)));
    }
    let kind = s.kind;
    let b = kernel_exponent(s);
    let c = x_moment(&b, cfg)?.value.re;
    let e = kind.identity();
    let d_s = e.scale(2.0).power_delta(&b)? / (c * height_integral(s, &b, &e, cfg)?);
    let y0 = calibration_check_point(kind);
    let norm2 = d_s * d_s * c * height_integral(s, &b, &y0, cfg)?;
    let diag = d_s * y0.scale(2.0).power_delta(&b)?;
    Ok(KernelSpec { s: s.clone(), d_s, calibration_error: (norm2 / diag - 1.0).abs() })
}

/// Integrates `f` over `T_Ω` against `Δ_σ(v) du dv` (trace-Euclidean measures).
///
/// The outer integral over `v ∈ Ω` is adaptive. For each `v` the inner integral
/// runs over `u = x_c + P(√(v + a_ref)) τ`, `τ_i = sinh σ_i` in orthonormal
/// coordinates, with a fixed tensor rule on `[−cfg.x_halfwidth, cfg.x_halfwidth]^n`.
pub fn integrate_tube<F>(
    sigma: &SpectralParam,
    x_c: &[f64],
    a_ref: &Element,
    cfg: &QuadratureConfig,
    mut f: F,
) -> Result<Integral>
where
    F: FnMut(&TubePoint) -> Complex64,
{
    let kind = sigma.kind;
    let n = kind.dim();
    if x_c.len() != n || a_ref.kind != kind {
        return Err(Error::Dimension("tube integration inputs disagree in kind".into()));
    }
    let nr = kind.n_over_r();
    let scales = kind.ortho_scales();
    let rule = CompositeRule::new(cfg.x_halfwidth, panels_for(cfg.x_halfwidth, cfg.base_resolution), cfg.order);
    integrate_omega_complex(kind, sigma, cfg, |v| {
        let a = Element { kind, coeffs: v.coeffs.iter().zip(&a_ref.coeffs).map(|(p, q)| p + q).collect() };
        let root = match a.sqrt() {
            Ok(r) => r,
            Err(_) => return Complex64::new(0.0, 0.0),
        };
        let jac = a.det().powf(nr);
        let mut tau = kind.zero();
        let mut z = TubePoint { x: Coeffs::from_slice(x_c), y: v.clone() };
        tensor_sum(n, &rule, CellOrder::Natural, |sig| {
            let mut w = jac;
            for i in 0..n {
                tau.coeffs[i] = sig[i].sinh() / scales[i];
                w *= sig[i].cosh();
            }
            let u = root.quadratic_rep_unchecked(&tau);
            for i in 0..n {
                z.x[i] = x_c[i] + u.coeffs[i];
            }
            f(&z) * w
        })
        .total
    })
}

/// Bergman metric `g_{jk} = ∂_j ∂̄_k log B(z, z)` of the unweighted kernel in
/// coordinates. It depends on `y` only and equals `(n/2r)` times the Hessian of
/// `−log Δ`, i.e. the trace form composed with `P(y^{-1})`.
pub fn bergman_metric(z: &TubePoint) -> Result<DMatrix<f64>> {
    let y = &z.y;
    if !y.in_cone() {
        return Err(Error::Domain("point is not in the tube".into()));
    }
    let kind = y.kind;
    let p = y.inverse()?.quadratic_rep_matrix();
    let scales = kind.ortho_scales();
    let c = kind.dim() as f64 / (2.0 * kind.rank() as f64);
    let n = kind.dim();
    let g = DMatrix::from_fn(n, n, |i, j| c * 0.5 * (scales[i] * scales[i] * p[(i, j)] + scales[j] * scales[j] * p[(j, i)]));
    Ok(g)
}

/// `‖P(y_a^{-1/2})(x_a − x_b)‖` combined with `d_Ω(y_a, y_b)`, maximized over both orderings.
pub fn quasi_distance(z1: &TubePoint, z2: &TubePoint) -> Result<f64> {
    if z1.kind() != z2.kind() {
        return Err(Error::Dimension("tube points of different kinds".into()));
    }
    let d = invariant_distance(&z1.y, &z2.y)?;
    let side = |a: &TubePoint, b: &TubePoint| -> Result<f64> {
        let dx = Element { kind: a.kind(), coeffs: a.x.iter().zip(&b.x).map(|(p, q)| p - q).collect() };
        Ok(a.y.inv_sqrt()?.quadratic_rep_unchecked(&dx).norm())
    };
    Ok(side(z1, z2)?.max(side(z2, z1)?).max(d))
}

/// Length of the straight segment from `z1` to `z2` in the Bergman metric.
pub fn segment_length(z1: &TubePoint, z2: &TubePoint) -> Result<f64> {
    let kind = z1.kind();
    let dx: Vec<f64> = z2.x.iter().zip(&z1.x).map(|(a, b)| a - b).collect();
    let dy: Vec<f64> = z2.y.coeffs.iter().zip(&z1.y.coeffs).map(|(a, b)| a - b).collect();
    let (nodes, weights) = gauss_legendre(8);
    let panels = 8;
    let mut total = 0.0;
    for p in 0..panels {
        for (t0, w) in nodes.iter().zip(&weights) {
            let t = (p as f64 + 0.5 * (t0 + 1.0)) / panels as f64;
            let y = Element { kind, coeffs: z1.y.coeffs.iter().zip(&dy).map(|(a, b)| a + t * b).collect() };
            let g = bergman_metric(&TubePoint { x: z1.x.clone(), y })?;
            let q = |v: &[f64]| -> f64 {
                let v = nalgebra::DVector::from_column_slice(v);
                (v.transpose() * &g * &v)[(0, 0)]
            };
            total += 0.5 * w / panels as f64 * (q(&dx) + q(&dy)).max(0.0).sqrt();
        }
    }
    Ok(total)
}

/// `n_k`-aware lower bound for admissible kernel exponents; re-exported for callers
/// building parameter sweeps.
pub fn bergman_threshold(kind: AlgebraKind) -> Vec<f64> {
    index_data(kind).n_k.iter().map(|n| n / 2.0).collect()
}
