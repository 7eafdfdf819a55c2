//! Atom combinations, mixed norms and the pairing of weighted Bergman spaces.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use std::f64::consts::PI;

use crate::cone::{chart_point, integrate_omega, integrate_omega_complex, invariant_distance, log_gamma_omega, transform_to, SpectralParam};
use crate::error::{Error, Result};
use crate::jordan::{AlgebraKind, Coeffs, Element};
use crate::quad::{integrate, tensor_sum, CellOrder, CompositeRule, Integral, NormResult, QuadratureConfig};
use crate::tube::{bergman_kernel, integrate_tube, unnormalized_kernel, KernelSpec, TubePoint};

/// `F = Σ_m c_m B_t(·, w_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomCombo {
    pub ks: KernelSpec,
    pub centers: Vec<TubePoint>,
    pub coeffs: Vec<Complex64>,
}

/// Default atom parameter `t = s + n/r + 2`.
pub fn atom_parameter(s: &SpectralParam) -> SpectralParam {
    s.shift(s.kind.n_over_r() + 2.0)
}

#[derive(Serialize, Deserialize)]
struct AtomFile {
    kind: String,
    t: Vec<f64>,
    d_t: f64,
    centers: Vec<CenterFile>,
    coeffs: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct CenterFile {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl AtomCombo {
    pub fn new(ks: KernelSpec, centers: Vec<TubePoint>, coeffs: Vec<Complex64>) -> Result<Self> {
        if centers.len() != coeffs.len() {
            return Err(Error::Dimension(format!("{} centers but {} coefficients", centers.len(), coeffs.len())));
        }
        if centers.iter().any(|c| c.kind() != ks.s.kind) {
            return Err(Error::Dimension("atom center of the wrong kind".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Param("non-finite atom coefficient".into()));
        }
        Ok(AtomCombo { ks, centers, coeffs })
    }

    pub fn zero(ks: KernelSpec) -> Self {
        AtomCombo { ks, centers: Vec::new(), coeffs: Vec::new() }
    }

    pub fn single(ks: KernelSpec, w: TubePoint, c: Complex64) -> Result<Self> {
        Self::new(ks, vec![w], vec![c])
    }

    pub fn kind(&self) -> AlgebraKind {
        self.ks.s.kind
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    pub fn eval(&self, z: &TubePoint) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, c) in self.centers.iter().zip(&self.coeffs) {
            if *c != Complex64::new(0.0, 0.0) {
                acc += c * bergman_kernel(z, w, &self.ks)?;
            }
        }
        Ok(acc)
    }

    pub fn scale(&self, a: Complex64) -> Self {
        AtomCombo { ks: self.ks.clone(), centers: self.centers.clone(), coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// Concatenation of two combos with the same kernel.
    pub fn add(&self, other: &AtomCombo) -> Result<Self> {
        if self.ks != other.ks {
            return Err(Error::Param("atom combos with different kernels".into()));
        }
        let mut out = self.clone();
        out.centers.extend(other.centers.iter().cloned());
        out.coeffs.extend(other.coeffs.iter().copied());
        Ok(out)
    }

    /// Mean real part and mean imaginary part of the centers, or `ie` for the zero combo.
    pub fn anchor(&self) -> (Coeffs, Element) {
        let kind = self.kind();
        let m = self.centers.len();
        if m == 0 {
            return (Coeffs::from_elem(0.0, kind.dim()), kind.identity());
        }
        let mut x = Coeffs::from_elem(0.0, kind.dim());
        let mut y = kind.zero();
        for c in &self.centers {
            for i in 0..kind.dim() {
                x[i] += c.x[i] / m as f64;
                y.coeffs[i] += c.y.coeffs[i] / m as f64;
            }
        }
        (x, y)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = AtomFile {
            kind: self.kind().name(),
            t: self.ks.s.s.clone(),
            d_t: self.ks.d_s,
            centers: self.centers.iter().map(|c| CenterFile { x: c.x.to_vec(), y: c.y.coeffs.to_vec() }).collect(),
            coeffs: self.coeffs.iter().map(|c| (c.re, c.im)).collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: AtomFile = serde_json::from_str(text)?;
        let kind = AlgebraKind::parse(&file.kind)?;
        let ks = KernelSpec::with_constant(SpectralParam::new(kind, &file.t)?, file.d_t)?;
        let centers = file
            .centers
            .iter()
            .map(|c| TubePoint::new(&c.x, Element::new(kind, &c.y)?))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ks, centers, file.coeffs.iter().map(|(a, b)| Complex64::new(*a, *b)).collect())
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::Param(format!("p must be in [1, ∞], got {p}")))
    }
}

fn check_q(q: f64) -> Result<()> {
    if q >= 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::Param(format!("q must be in [1, ∞), got {q}")))
    }
}

fn zero_norm() -> NormResult {
    NormResult { value: 0.0, error_estimate: 0.0, truncation_estimate: 0.0 }
}

/// `x = x_c + P(√a) τ` with `τ_i = sinh σ_i` in orthonormal coordinates.
struct SliceMap {
    root: Element,
    jac: f64,
    xc: Coeffs,
    scales: Coeffs,
    tau: Element,
}

impl SliceMap {
    fn new(xc: Coeffs, a: &Element) -> Result<Self> {
        let kind = a.kind;
        Ok(SliceMap {
            root: a.sqrt()?,
            jac: a.det().powf(kind.n_over_r()),
            xc,
            scales: kind.ortho_scales(),
            tau: kind.zero(),
        })
    }

    /// Real part and Jacobian for the mapped variables `σ`.
    fn point(&mut self, sig: &[f64]) -> (Coeffs, f64) {
        let mut w = self.jac;
        for i in 0..sig.len() {
            self.tau.coeffs[i] = sig[i].sinh() / self.scales[i];
            w *= sig[i].cosh();
        }
        let u = self.root.quadratic_rep_unchecked(&self.tau);
        (self.xc.iter().zip(&u.coeffs).map(|(a, b)| a + b).collect(), w)
    }
}

/// `‖F(· + iy)‖_{L^p(V)}`; `p = ∞` is the supremum over a refined grid.
pub fn slice_norm(f: &AtomCombo, y: &Element, p: f64, cfg: &QuadratureConfig) -> Result<NormResult> {
    check_p(p)?;
    cfg.validate()?;
    if y.kind != f.kind() || !y.in_cone() {
        return Err(Error::Domain("slice height must be a cone point of the same kind".into()));
    }
    if f.is_zero() {
        return Ok(zero_norm());
    }
    let (xc, yref) = f.anchor();
    let a = y.add(&yref)?;
    let mut map = SliceMap::new(xc, &a)?;
    let n = y.kind.dim();
    let mut failure = None;
    if p.is_infinite() {
        return slice_sup(f, y, &mut map, cfg);
    }
    let res = integrate(n, cfg.x_halfwidth, cfg, |sig| {
        let (x, w) = map.point(sig);
        match f.eval(&TubePoint { x, y: y.clone() }) {
            Ok(v) => Complex64::new(v.norm().powf(p) * w, 0.0),
            Err(e) => {
                failure.get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(root_result(res.value.re, res.error_estimate, res.truncation_estimate, p))
}

/// `(I, δI) ↦ (I^{1/p}, δI · I^{1/p−1}/p)`.
fn root_result(i: f64, err: f64, trunc: f64, p: f64) -> NormResult {
    let v = i.max(0.0).powf(1.0 / p);
    let d = if i > 0.0 { v / (p * i) } else { 0.0 };
    NormResult { value: v, error_estimate: err * d, truncation_estimate: trunc * d }
}

fn slice_sup(f: &AtomCombo, y: &Element, map: &mut SliceMap, cfg: &QuadratureConfig) -> Result<NormResult> {
    let n = y.kind.dim();
    let t = cfg.x_halfwidth;
    let mut prev: Option<f64> = None;
    let mut m = 8 * cfg.base_resolution;
    for _ in 0..=cfg.refinement_depth {
        let per_axis = 2 * m + 1;
        if per_axis.checked_pow(n as u32).map_or(true, |c| c > 4_000_000) {
            break;
        }
        let mut best: f64 = 0.0;
        let mut idx = vec![0usize; n];
        loop {
            let sig: Vec<f64> = idx.iter().map(|&i| -t + 2.0 * t * i as f64 / (per_axis - 1) as f64).collect();
            let (x, _) = map.point(&sig);
            best = best.max(f.eval(&TubePoint { x, y: y.clone() })?.norm());
            let mut a = 0;
            while a < n {
                idx[a] += 1;
                if idx[a] < per_axis {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
            if a == n {
                break;
            }
        }
        if let Some(pv) = prev {
            if (best - pv).abs() <= cfg.tol * best {
                return Ok(NormResult { value: best, error_estimate: (best - pv).abs(), truncation_estimate: 0.0 });
            }
        }
        prev = Some(best);
        m *= 2;
    }
    let v = prev.unwrap_or(0.0);
    Ok(NormResult { value: v, error_estimate: cfg.tol * v, truncation_estimate: 0.0 })
}

/// `‖F‖_{L^{p,q}_s} = (∫_Ω ‖F(· + iy)‖_p^q Δ_{s−n/r}(y) dy)^{1/q}`.
pub fn mixed_norm(f: &AtomCombo, p: f64, q: f64, s: &SpectralParam, cfg: &QuadratureConfig) -> Result<NormResult> {
    check_p(p)?;
    check_q(q)?;
    if s.kind != f.kind() {
        return Err(Error::Dimension("weight and function kinds differ".into()));
    }
    if !s.bergman_ok() {
        return Err(Error::Domain(format!("s = {:?} is outside the Bergman range", s.s)));
    }
    if f.is_zero() {
        return Ok(zero_norm());
    }
    let mut failure = None;
    let res = integrate_omega(s.kind, &s.shift(-s.kind.n_over_r()), cfg, |v| match slice_norm(f, v, p, cfg) {
        Ok(r) => r.value.powf(q),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    })
    .map_err(|e| match e {
        Error::Convergence(m) => Error::Convergence(format!("outer integral over the cone: {m}")),
        other => other,
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(root_result(res.value, res.error_estimate, res.truncation_estimate, q))
}

fn scalar_exponent(s: &SpectralParam) -> Option<f64> {
    let v = s.s[0];
    s.s.iter().all(|w| *w == v).then_some(v)
}

/// Kernel exponent `t + n/r` of `F`, which must be scalar.
fn kernel_exponent(f: &AtomCombo) -> Result<f64> {
    let t = scalar_exponent(&f.ks.s).ok_or_else(|| Error::Param("closed L² forms need a scalar atom parameter".into()))?;
    Ok(t + f.kind().n_over_r())
}

/// `Σ_{k,m} c_k conj(c'_m) Δ^{−γ}(v_k + v'_m + a + i(u_k − u'_m))`.
fn gram_sum(f: &AtomCombo, g: &AtomCombo, gamma: f64, shift: &Element) -> Result<Complex64> {
    let kind = f.kind();
    let sp = SpectralParam::scalar(kind, gamma - kind.n_over_r());
    let half = shift.scale(0.5);
    let lift = |c: &AtomCombo| -> Result<Vec<TubePoint>> {
        c.centers.iter().map(|w| Ok(TubePoint { x: w.x.clone(), y: w.y.add(&half)? })).collect()
    };
    let (lf, lg) = (lift(f)?, lift(g)?);
    let mut acc = Complex64::new(0.0, 0.0);
    for (wk, ck) in lf.iter().zip(&f.coeffs) {
        for (wm, cm) in lg.iter().zip(&g.coeffs) {
            acc += ck * cm.conj() * unnormalized_kernel(wm, wk, &sp)?;
        }
    }
    Ok(acc)
}

/// Closed form of `∫_V F(x + iy) conj(G(x + iy)) dx` by Plancherel.
pub fn slice_pairing(f: &AtomCombo, g: &AtomCombo, y: &Element) -> Result<Complex64> {
    if f.kind() != g.kind() || y.kind != f.kind() {
        return Err(Error::Dimension("pairing arguments of different kinds".into()));
    }
    let (a, b) = (kernel_exponent(f)?, kernel_exponent(g)?);
    let kind = f.kind();
    let n = kind.dim() as f64;
    let beta = a + b - kind.n_over_r();
    let lg = |v: f64| log_gamma_omega(&SpectralParam::scalar(kind, v));
    let log_c = n * (2.0 * PI).ln() + f.ks.d_s.ln() + g.ks.d_s.ln() + lg(beta)? - lg(a)? - lg(b)?;
    Ok(log_c.exp() * gram_sum(f, g, beta, &y.scale(2.0))?)
}

/// Closed form of `‖F(· + iy)‖²_{L²(V)}` by Plancherel.
pub fn slice_l2_squared(f: &AtomCombo, y: &Element) -> Result<f64> {
    Ok(slice_pairing(f, f, y)?.re)
}

/// `∫_{T_Ω} F conj(G) Δ_{s−n/r}(v) du dv` with the inner integral in closed form
/// and the outer one by quadrature over the cone.
pub fn hilbert_pairing(f: &AtomCombo, g: &AtomCombo, s: &SpectralParam, cfg: &QuadratureConfig) -> Result<Integral> {
    if f.kind() != g.kind() || s.kind != f.kind() {
        return Err(Error::Dimension("pairing arguments of different kinds".into()));
    }
    if !s.bergman_ok() {
        return Err(Error::Domain(format!("s = {:?} is outside the Bergman range", s.s)));
    }
    kernel_exponent(f)?;
    kernel_exponent(g)?;
    let mut failure = None;
    let res = integrate_omega_complex(f.kind(), &s.shift(-s.kind.n_over_r()), cfg, |v| {
        slice_pairing(f, g, v).unwrap_or_else(|e| {
            failure.get_or_insert(e);
            Complex64::new(0.0, 0.0)
        })
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(res),
    }
}

/// Closed form of `‖F‖_{A²_s}` for kernel combinations with scalar `t` and `s`.
pub fn hilbert_norm(f: &AtomCombo, s: &SpectralParam) -> Result<f64> {
    if s.kind != f.kind() {
        return Err(Error::Dimension("weight and function kinds differ".into()));
    }
    if !s.bergman_ok() {
        return Err(Error::Domain(format!("s = {:?} is outside the Bergman range", s.s)));
    }
    let sv = scalar_exponent(s).ok_or_else(|| Error::Param("closed L² forms need a scalar weight".into()))?;
    if f.is_zero() {
        return Ok(0.0);
    }
    let kind = f.kind();
    let alpha = kernel_exponent(f)?;
    let (n, r) = (kind.dim() as f64, kind.rank() as f64);
    let gamma = 2.0 * alpha - kind.n_over_r() - sv;
    let g = |v: f64| log_gamma_omega(&SpectralParam::scalar(kind, v));
    let log_c = n * (2.0 * PI).ln() + 2.0 * f.ks.d_s.ln() - r * sv * 2f64.ln() + g(sv)? + g(gamma)? - 2.0 * g(alpha)?;
    Ok((log_c.exp() * gram_sum(f, f, gamma, &kind.zero())?.re).max(0.0).sqrt())
}

/// `∫_{T_Ω} F conj(G) Δ_{s−n/r}(v) du dv`.
pub fn dual_pairing(f: &AtomCombo, g: &AtomCombo, s: &SpectralParam, cfg: &QuadratureConfig) -> Result<Integral> {
    if f.kind() != g.kind() || s.kind != f.kind() {
        return Err(Error::Dimension("pairing arguments of different kinds".into()));
    }
    if !s.bergman_ok() {
        return Err(Error::Domain(format!("s = {:?} is outside the Bergman range", s.s)));
    }
    if f.is_zero() || g.is_zero() {
        return Ok(Integral { value: Complex64::new(0.0, 0.0), error_estimate: 0.0, truncation_estimate: 0.0 });
    }
    let both = AtomCombo { ks: f.ks.clone(), centers: f.centers.iter().chain(&g.centers).cloned().collect(), coeffs: vec![] };
    let (xc, yref) = both.anchor_of_centers();
    let mut failure = None;
    let res = integrate_tube(&s.shift(-s.kind.n_over_r()), &xc, &yref, cfg, |z| match (f.eval(z), g.eval(z)) {
        (Ok(a), Ok(b)) => a * b.conj(),
        (Err(e), _) | (_, Err(e)) => {
            failure.get_or_insert(e);
            Complex64::new(0.0, 0.0)
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(res),
    }
}

impl AtomCombo {
    fn anchor_of_centers(&self) -> (Coeffs, Element) {
        let probe = AtomCombo { coeffs: vec![Complex64::new(1.0, 0.0); self.centers.len()], ..self.clone() };
        probe.anchor()
    }
}

/// Half-widths of a chart box containing `B_δ(e)`: `|ℓ_k| ≤ (2k−1)δ/2` and
/// off-diagonal entries bounded by `e^{δ/2}`.
fn ball_chart_box(kind: AlgebraKind, delta: f64) -> Vec<f64> {
    let r = kind.rank();
    let mut out: Vec<f64> = (1..=r).map(|k| (2 * k - 1) as f64 * delta / 2.0).collect();
    out.extend(std::iter::repeat((delta / 2.0).exp()).take(kind.dim() - r));
    out
}

/// Fixed tensor rule on the box `Π [−w_i, w_i]`.
fn box_sum(widths: &[f64], cfg: &QuadratureConfig, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let d = widths.len();
    let rule = CompositeRule::new(1.0, 2 * cfg.base_resolution, cfg.order);
    let vol: f64 = widths.iter().product();
    let mut pt = vec![0.0; d];
    tensor_sum(d, &rule, CellOrder::Natural, |u| {
        for i in 0..d {
            pt[i] = u[i] * widths[i];
        }
        Complex64::new(f(&pt), 0.0)
    })
    .total
    .re
        * vol
}

/// `∫_{B_δ(e)} h(v) dv` over the invariant ball, in the triangular chart.
fn integrate_cone_ball(kind: AlgebraKind, delta: f64, cfg: &QuadratureConfig, mut h: impl FnMut(&Element) -> f64) -> f64 {
    let r = kind.rank();
    let e = kind.identity();
    let log_mf = kind.measure_factor().ln();
    let widths = ball_chart_box(kind, delta);
    box_sum(&widths, cfg, |c| {
        let (v, lj) = chart_point(kind, &c[..r], &c[r..]);
        match invariant_distance(&v, &e) {
            Ok(d) if d < delta => h(&v) * (lj + log_mf).exp(),
            _ => 0.0,
        }
    })
}

fn ball_volume_with(kind: AlgebraKind, radius: f64, widen: f64) -> f64 {
    let cfg = QuadratureConfig { base_resolution: 8, order: 4, ..Default::default() };
    let r = kind.rank();
    let e = kind.identity();
    let nr = kind.n_over_r();
    let log_mf = kind.measure_factor().ln();
    let widths: Vec<f64> = ball_chart_box(kind, radius).iter().map(|w| w * widen).collect();
    box_sum(&widths, &cfg, |c| {
        let (v, lj) = chart_point(kind, &c[..r], &c[r..]);
        match invariant_distance(&v, &e) {
            Ok(d) if d < radius => (lj + log_mf - nr * v.det().ln()).exp(),
            _ => 0.0,
        }
    })
}

/// Invariant measure `∫_{B_D(e)} Δ^{−n/r}(v) dv` of the ball of radius `D`.
pub fn invariant_ball_volume(kind: AlgebraKind, radius: f64) -> Result<f64> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Param(format!("radius must be positive, got {radius}")));
    }
    if kind == AlgebraKind::Rank1 {
        return Ok(2.0 * radius);
    }
    Ok(ball_volume_with(kind, radius, 1.0))
}

/// Values compared by the mean-value inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanValueReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `|F(z)|^p` against `δ^{−2n} ∫_{B_δ(z)} |F|^p Δ^{−2n/r}(v) du dv` over the
/// quasi-distance ball, computed at `ie` through the affine map `w ↦ x_z + g w`.
pub fn mean_value_check(f: &AtomCombo, z: &TubePoint, delta: f64, p: f64, cfg: &QuadratureConfig) -> Result<MeanValueReport> {
    check_p(p)?;
    if !(delta > 0.0 && delta < 1.0) || p.is_infinite() {
        return Err(Error::Param("need δ in (0, 1) and finite p".into()));
    }
    let kind = z.kind();
    let n = kind.dim();
    let lhs = f.eval(z)?.norm().powf(p);
    if f.is_zero() {
        return Ok(MeanValueReport { lhs, rhs: 0.0, ratio: 0.0 });
    }
    let g = transform_to(&z.y)?;
    let two_n_r = 2.0 * kind.n_over_r();
    let inner_widths = vec![delta; n];
    let mut failure = None;
    let total = integrate_cone_ball(kind, delta, cfg, |v| {
        let vis = match v.inv_sqrt() {
            Ok(x) => x,
            Err(_) => return 0.0,
        };
        let y = g.apply(v);
        let w = v.det().powf(-two_n_r);
        w * box_sum(&inner_widths, cfg, |u| {
            if u.iter().map(|a| a * a).sum::<f64>() >= delta * delta {
                return 0.0;
            }
            let uc = Element::from_ortho(kind, u);
            if vis.quadratic_rep_unchecked(&uc).norm() >= delta {
                return 0.0;
            }
            let x = z.translate(&g.apply(&uc).coeffs).x;
            match f.eval(&TubePoint { x, y: y.clone() }) {
                Ok(val) => val.norm().powf(p),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        })
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let rhs = delta.powi(-2 * n as i32) * total;
    Ok(MeanValueReport { lhs, rhs, ratio: if rhs > 0.0 { lhs / rhs } else { f64::INFINITY } })
}

/// Values compared by the slice-norm inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceGrowthReport {
    pub lhs: f64,
    pub rhs: f64,
}

/// `‖F(·+iy)‖_p^q` against `∫_{B_δ(y)} ‖F(·+iv)‖_p^q Δ^{−n/r}(v) dv`.
pub fn slice_growth_check(f: &AtomCombo, y: &Element, delta: f64, p: f64, q: f64, cfg: &QuadratureConfig) -> Result<SliceGrowthReport> {
    check_p(p)?;
    check_q(q)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Param("need δ in (0, 1)".into()));
    }
    let lhs = slice_norm(f, y, p, cfg)?.value.powf(q);
    if f.is_zero() {
        return Ok(SliceGrowthReport { lhs, rhs: 0.0 });
    }
    let kind = y.kind;
    let g = transform_to(y)?;
    let nr = kind.n_over_r();
    let mut failure = None;
    let rhs = integrate_cone_ball(kind, delta, cfg, |v| match slice_norm(f, &g.apply(v), p, cfg) {
        Ok(r) => r.value.powf(q) * v.det().powf(-nr),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(SliceGrowthReport { lhs, rhs }),
    }
}
