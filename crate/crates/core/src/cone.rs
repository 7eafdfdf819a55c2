//! Geometry and special functions of the symmetric cone `Ω`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::jordan::{AlgebraKind, Element};
use num_complex::Complex64;

use crate::quad::{integrate, Integral, NormResult, QuadratureConfig};

/// A vector `s ∈ R^r` of weight exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParam {
    pub kind: AlgebraKind,
    pub s: Vec<f64>,
}

impl SpectralParam {
    pub fn new(kind: AlgebraKind, s: &[f64]) -> Result<Self> {
        kind.validate()?;
        if s.len() != kind.rank() {
            return Err(Error::Dimension(format!("{} needs {} exponents, got {}", kind.name(), kind.rank(), s.len())));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Param("exponents must be finite".into()));
        }
        Ok(SpectralParam { kind, s: s.to_vec() })
    }

    /// `(v, …, v)`.
    pub fn scalar(kind: AlgebraKind, v: f64) -> Self {
        SpectralParam { kind, s: vec![v; kind.rank()] }
    }

    /// `s + (c, …, c)`.
    pub fn shift(&self, c: f64) -> Self {
        SpectralParam { kind: self.kind, s: self.s.iter().map(|v| v + c).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        SpectralParam { kind: self.kind, s: self.s.iter().map(|v| v * c).collect() }
    }

    /// `s* = (s_r, …, s_1)`.
    pub fn reversed(&self) -> Self {
        SpectralParam { kind: self.kind, s: self.s.iter().rev().copied().collect() }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// `s_k > n_k/2` for all `k`.
    pub fn bergman_ok(&self) -> bool {
        let idx = index_data(self.kind);
        self.s.iter().zip(&idx.n_k).all(|(s, n)| *s > n / 2.0)
    }

    pub fn gamma_ok(&self) -> bool {
        self.bergman_ok()
    }

    /// `s_k > n/r − 1` for all `k`.
    pub fn interp_ok(&self) -> bool {
        let b = self.kind.n_over_r() - 1.0;
        self.s.iter().all(|s| *s > b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeIndexData {
    pub r: usize,
    pub n: usize,
    pub n_k: Vec<f64>,
    pub m_k: Vec<f64>,
}

pub fn index_data(kind: AlgebraKind) -> ConeIndexData {
    let r = kind.rank();
    let n = kind.dim();
    if r == 1 {
        return ConeIndexData { r, n, n_k: vec![0.0], m_k: vec![0.0] };
    }
    let d = 2.0 * (n as f64 / r as f64 - 1.0) / (r as f64 - 1.0);
    let n_k = (1..=r).map(|k| (k - 1) as f64 * d).collect();
    let m_k = (1..=r).map(|k| (r - k) as f64 * d).collect();
    ConeIndexData { r, n, n_k, m_k }
}

/// Sylvester test: all principal minors positive.
pub fn contains(x: &Element) -> bool {
    x.in_cone()
}

fn require_cone(x: &Element, what: &str) -> Result<()> {
    if contains(x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} = {:?} is not in the cone", x.coeffs.as_slice())))
    }
}

/// Eigenvalues of `P(x^{-1/2}) y`.
pub fn relative_eigenvalues(x: &Element, y: &Element) -> Result<Vec<f64>> {
    if x.kind != y.kind {
        return Err(Error::Dimension("kind mismatch".into()));
    }
    require_cone(x, "x")?;
    require_cone(y, "y")?;
    match x.kind {
        AlgebraKind::Rank1 => Ok(vec![y.coeffs[0] / x.coeffs[0]]),
        AlgebraKind::Lorentz(_) => Ok(x.inv_sqrt()?.quadratic_rep_unchecked(y).eigenvalues()),
        AlgebraKind::SymMatrices(_) => {
            let chol = x
                .to_matrix()
                .cholesky()
                .ok_or_else(|| Error::Domain("x is not positive definite".into()))?;
            let l = chol.l();
            let linv = l.clone().try_inverse().ok_or_else(|| Error::Domain("singular factor".into()))?;
            let w = &linv * y.to_matrix() * linv.transpose();
            let w = (&w + w.transpose()) * 0.5;
            let mut ev: Vec<f64> = w.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
            Ok(ev)
        }
    }
}

/// Invariant distance `d_Ω(x, y) = ‖log spec P(x^{-1/2}) y‖₂`.
pub fn invariant_distance(x: &Element, y: &Element) -> Result<f64> {
    let ev = relative_eigenvalues(x, y)?;
    Ok(ev.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

/// `max_k |log(Δ_k(x)/Δ_k(y))|`.
pub fn minor_log_ratio(x: &Element, y: &Element) -> Result<f64> {
    require_cone(x, "x")?;
    require_cone(y, "y")?;
    Ok(x.minors()
        .iter()
        .zip(y.minors())
        .map(|(a, b)| (a / b).ln().abs())
        .fold(0.0, f64::max))
}

/// Largest `γ ∈ [0, 1]` (to `1e-12`) with `y − γξ ∈ Ω`, found by bisection on
/// cone membership.
pub fn inclusion_factor(xi: &Element, y: &Element) -> Result<f64> {
    require_cone(xi, "xi")?;
    require_cone(y, "y")?;
    let inside = |g: f64| contains(&y.sub(&xi.scale(g)).expect("same kind"));
    if inside(1.0) {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// A linear automorphism of `Ω` given by its coordinate matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeTransform {
    pub kind: AlgebraKind,
    pub matrix: DMatrix<f64>,
    pub det: f64,
}

impl ConeTransform {
    pub fn apply(&self, x: &Element) -> Element {
        let v = &self.matrix * nalgebra::DVector::from_column_slice(&x.coeffs);
        Element { kind: self.kind, coeffs: v.iter().copied().collect() }
    }

    /// `g^{-1} x`.
    pub fn solve(&self, x: &Element) -> Result<Element> {
        let lu = self.matrix.clone().lu();
        let v = lu
            .solve(&nalgebra::DVector::from_column_slice(&x.coeffs))
            .ok_or_else(|| Error::Domain("singular transform".into()))?;
        Ok(Element { kind: self.kind, coeffs: v.iter().copied().collect() })
    }
}

/// `g_y = P(√y)`, so that `g_y e = y` and `det g_y = Δ(y)^{n/r}`.
pub fn transform_to(y: &Element) -> Result<ConeTransform> {
    require_cone(y, "y")?;
    let root = y.sqrt()?;
    Ok(ConeTransform { kind: y.kind, matrix: root.quadratic_rep_matrix(), det: y.det().powf(y.kind.n_over_r()) })
}

/// `log Γ_Ω(s)`.
pub fn log_gamma_omega(s: &SpectralParam) -> Result<f64> {
    let idx = index_data(s.kind);
    if !s.gamma_ok() {
        return Err(Error::Domain(format!("Γ_Ω is undefined at s = {:?}", s.s)));
    }
    let (n, r) = (idx.n as f64, idx.r as f64);
    let mut acc = 0.5 * (n - r) * (2.0 * std::f64::consts::PI).ln();
    for (sk, nk) in s.s.iter().zip(&idx.n_k) {
        acc += ln_gamma(sk - nk / 2.0);
    }
    Ok(acc)
}

/// `Γ_Ω(s) = (2π)^{(n−r)/2} Π Γ(s_k − n_k/2)`.
pub fn gamma_omega(s: &SpectralParam) -> Result<f64> {
    Ok(log_gamma_omega(s)?.exp())
}

/// `Γ_Ω(s) Δ_s(y^{-1})`, using `Δ_s(y^{-1}) = 1/Δ*_{s*}(y)`.
pub fn laplace_power_closed(s: &SpectralParam, y: &Element) -> Result<f64> {
    if s.kind != y.kind {
        return Err(Error::Dimension("kind mismatch".into()));
    }
    require_cone(y, "y")?;
    Ok(gamma_omega(s)? / y.rotated_power_delta(&s.reversed())?)
}

/// `∫_Ω e^{−(ξ|y)} Δ_s(ξ) Δ^{−n/r}(ξ) dξ` by quadrature.
pub fn laplace_power_quadrature(s: &SpectralParam, y: &Element, cfg: &QuadratureConfig) -> Result<NormResult> {
    if s.kind != y.kind {
        return Err(Error::Dimension("kind mismatch".into()));
    }
    require_cone(y, "y")?;
    if !s.gamma_ok() {
        return Err(Error::Domain(format!("integral diverges at s = {:?}", s.s)));
    }
    let weight = s.shift(-y.kind.n_over_r());
    integrate_omega(y.kind, &weight, cfg, |xi| (-xi.trace_inner_unchecked(y)).exp())
}

/// Point of `Ω` in the triangular chart.
///
/// `ell` holds the logarithms of the diagonal of the triangular factor and `b`
/// its off-diagonal part. Returns the point and the logarithm of the density
/// of the coordinate Lebesgue measure with respect to `dℓ db`. In this chart
/// `Δ_k(y) = exp(2(ℓ_1 + … + ℓ_k))`.
pub fn chart_point(kind: AlgebraKind, ell: &[f64], b: &[f64]) -> (Element, f64) {
    match kind {
        AlgebraKind::Rank1 => (Element::rank1((2.0 * ell[0]).exp()), std::f64::consts::LN_2 + 2.0 * ell[0]),
        AlgebraKind::Lorentz(n) => {
            let a = ell[0].exp();
            let c2 = (2.0 * ell[1]).exp();
            let bb: f64 = b.iter().map(|v| v * v).sum();
            let u = a * a;
            let v = bb + c2;
            let mut coeffs = crate::jordan::Coeffs::from_elem(0.0, n);
            coeffs[0] = 0.5 * (u + v);
            coeffs[1] = 0.5 * (u - v);
            for (i, bi) in b.iter().enumerate() {
                coeffs[2 + i] = a * bi;
            }
            let lj = std::f64::consts::LN_2 + n as f64 * ell[0] + 2.0 * ell[1];
            (Element { kind, coeffs }, lj)
        }
        AlgebraKind::SymMatrices(m) => {
            let mut l = vec![0.0; m * m];
            let mut idx = 0;
            for j in 0..m {
                l[j * m + j] = ell[j].exp();
                for i in (j + 1)..m {
                    l[i * m + j] = b[idx];
                    idx += 1;
                }
            }
            let mut coeffs = crate::jordan::Coeffs::with_capacity(kind.dim());
            for i in 0..m {
                for j in i..m {
                    coeffs.push((0..=i).map(|k| l[i * m + k] * l[j * m + k]).sum());
                }
            }
            let mut lj = m as f64 * std::f64::consts::LN_2;
            for (i, e) in ell.iter().enumerate() {
                lj += (m - i + 1) as f64 * e;
            }
            (Element { kind, coeffs }, lj)
        }
    }
}

/// For each off-diagonal chart coordinate, the index of the diagonal entry
/// whose size sets its natural scale.
fn chart_b_anchor(kind: AlgebraKind) -> Vec<usize> {
    match kind {
        AlgebraKind::Rank1 => vec![],
        AlgebraKind::Lorentz(n) => vec![0; n - 2],
        AlgebraKind::SymMatrices(m) => {
            let mut v = Vec::new();
            for j in 0..m {
                for _ in (j + 1)..m {
                    v.push(j);
                }
            }
            v
        }
    }
}

/// Map `u ↦ ℓ`: identity for `u ≥ 0`, `sinh u` for `u < 0`; returns `(ℓ, dℓ/du)`.
#[inline]
fn ell_map(u: f64) -> (f64, f64) {
    if u >= 0.0 {
        (u, 1.0)
    } else {
        (u.sinh(), u.cosh())
    }
}

/// Point of `Ω` and log-density for the mapped chart variables `u ∈ R^n`.
///
/// Includes the trace-measure factor, so `∫_Ω h dξ = ∫ h(y(u)) e^{w(u)} du`.
pub(crate) struct OmegaChart {
    kind: AlgebraKind,
    anchors: Vec<usize>,
    log_mf: f64,
    ell: Vec<f64>,
    b: Vec<f64>,
}

impl OmegaChart {
    pub(crate) fn new(kind: AlgebraKind) -> Self {
        OmegaChart {
            kind,
            anchors: chart_b_anchor(kind),
            log_mf: kind.measure_factor().ln(),
            ell: vec![0.0; kind.rank()],
            b: vec![0.0; kind.dim() - kind.rank()],
        }
    }

    /// Returns `(y, log density, ℓ)`; `ℓ` gives `log Δ_k(y) = 2(ℓ_1 + … + ℓ_k)`.
    pub(crate) fn point(&mut self, u: &[f64]) -> (Element, f64, &[f64]) {
        let r = self.ell.len();
        let mut logw = self.log_mf;
        for i in 0..r {
            let (l, dl) = ell_map(u[i]);
            self.ell[i] = l;
            logw += dl.ln();
        }
        for (e, &j) in self.anchors.iter().enumerate() {
            let sc = (1.0 + (2.0 * self.ell[j]).exp()).sqrt();
            let ue = u[r + e];
            self.b[e] = sc * ue.sinh();
            logw += (sc * ue.cosh()).ln();
        }
        let (y, lj) = chart_point(self.kind, &self.ell, &self.b);
        (y, logw + lj, &self.ell)
    }
}

/// `∫_Ω g(ξ) Δ_σ(ξ) dξ` for complex `g`, with respect to the trace-Euclidean
/// Lebesgue measure.
///
/// The integral is computed in the triangular chart on the box
/// `[-T, T]^n`, `T = cfg.omega_radius`, of mapped variables.
pub fn integrate_omega_complex<G>(kind: AlgebraKind, sigma: &SpectralParam, cfg: &QuadratureConfig, mut g: G) -> Result<Integral>
where
    G: FnMut(&Element) -> Complex64,
{
    if sigma.kind != kind {
        return Err(Error::Dimension("kind mismatch".into()));
    }
    let mut chart = OmegaChart::new(kind);
    integrate(kind.dim(), cfg.omega_radius, cfg, |u| {
        let (y, mut logw, ell) = chart.point(u);
        for (sk, l) in sigma.s.iter().zip(ell) {
            logw += 2.0 * sk * l;
        }
        if logw < -745.0 {
            return Complex64::new(0.0, 0.0);
        }
        g(&y) * logw.exp()
    })
}

/// Real-valued version of [`integrate_omega_complex`].
pub fn integrate_omega<G>(kind: AlgebraKind, sigma: &SpectralParam, cfg: &QuadratureConfig, mut g: G) -> Result<NormResult>
where
    G: FnMut(&Element) -> f64,
{
    let r = integrate_omega_complex(kind, sigma, cfg, |y| Complex64::new(g(y), 0.0))?;
    Ok(NormResult { value: r.value.re, error_estimate: r.error_estimate, truncation_estimate: r.truncation_estimate })
}
