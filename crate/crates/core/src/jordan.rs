//! Euclidean Jordan algebras for the three instantiated cone families: the
//! half-line, the Lorentz cones and real symmetric matrices.
//!
//! Elements are stored as coordinate vectors. For `Lorentz(n)` the
//! coordinates are the standard basis of `R^n`; for `SymMatrices(m)` they are
//! the upper triangle listed row by row, each off-diagonal entry stored once.
//! The trace inner product `(x|y) = tr(x∘y)` is recovered through per-coordinate
//! scale factors (see [`AlgebraKind::ortho_scales`]).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::cone::SpectralParam;
use crate::error::{Error, Result};

/// Inline storage for coordinate vectors; every instantiated family up to
/// `SymMatrices(3)` fits without a heap allocation.
pub type Coeffs = SmallVec<[f64; 6]>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgebraKind {
    /// `V = R`, `Ω = (0, ∞)`.
    Rank1,
    /// Lorentz cone in `R^n`, `n ≥ 3`.
    Lorentz(usize),
    /// Real symmetric `m × m` matrices, `Ω` the positive definite ones.
    SymMatrices(usize),
}

impl AlgebraKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AlgebraKind::Rank1 => Ok(()),
            AlgebraKind::Lorentz(n) if n >= 3 => Ok(()),
            AlgebraKind::Lorentz(n) => Err(Error::Param(format!("Lorentz cone needs n >= 3, got {n}"))),
            AlgebraKind::SymMatrices(m) if m >= 1 => Ok(()),
            AlgebraKind::SymMatrices(_) => Err(Error::Param("SymMatrices needs m >= 1".into())),
        }
    }

    pub fn rank(&self) -> usize {
        match *self {
            AlgebraKind::Rank1 => 1,
            AlgebraKind::Lorentz(_) => 2,
            AlgebraKind::SymMatrices(m) => m,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            AlgebraKind::Rank1 => 1,
            AlgebraKind::Lorentz(n) => n,
            AlgebraKind::SymMatrices(m) => m * (m + 1) / 2,
        }
    }

    /// `n / r`.
    pub fn n_over_r(&self) -> f64 {
        self.dim() as f64 / self.rank() as f64
    }

    /// Short name used by the CLI (`rank1`, `lorentz3`, `sym2`, ...).
    pub fn name(&self) -> String {
        match *self {
            AlgebraKind::Rank1 => "rank1".into(),
            AlgebraKind::Lorentz(n) => format!("lorentz{n}"),
            AlgebraKind::SymMatrices(m) => format!("sym{m}"),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim().to_ascii_lowercase();
        let kind = if name == "rank1" {
            AlgebraKind::Rank1
        } else if let Some(rest) = name.strip_prefix("lorentz") {
            AlgebraKind::Lorentz(rest.parse().map_err(|_| Error::Param(format!("bad cone name {name}")))?)
        } else if let Some(rest) = name.strip_prefix("sym") {
            AlgebraKind::SymMatrices(rest.parse().map_err(|_| Error::Param(format!("bad cone name {name}")))?)
        } else {
            return Err(Error::Param(format!("unknown cone {name}")));
        };
        kind.validate()?;
        Ok(kind)
    }

    /// Factors `σ_i` with `(x|y) = Σ σ_i² x_i y_i`; `σ_i x_i` are coordinates in
    /// an orthonormal basis for the trace inner product.
    pub fn ortho_scales(&self) -> Coeffs {
        match *self {
            AlgebraKind::Rank1 => smallvec![1.0],
            AlgebraKind::Lorentz(n) => smallvec![std::f64::consts::SQRT_2; n],
            AlgebraKind::SymMatrices(m) => {
                let mut s = Coeffs::with_capacity(self.dim());
                for i in 0..m {
                    for j in i..m {
                        s.push(if i == j { 1.0 } else { std::f64::consts::SQRT_2 });
                    }
                }
                s
            }
        }
    }

    /// Density of the trace-Euclidean Lebesgue measure with respect to the
    /// coordinate Lebesgue measure `Π dx_i`.
    pub fn measure_factor(&self) -> f64 {
        self.ortho_scales().iter().product()
    }

    pub fn identity(&self) -> Element {
        let mut c = Coeffs::from_elem(0.0, self.dim());
        match *self {
            AlgebraKind::Rank1 | AlgebraKind::Lorentz(_) => c[0] = 1.0,
            AlgebraKind::SymMatrices(m) => {
                for i in 0..m {
                    c[sym_index(m, i, i)] = 1.0;
                }
            }
        }
        Element { kind: *self, coeffs: c }
    }

    pub fn zero(&self) -> Element {
        Element { kind: *self, coeffs: Coeffs::from_elem(0.0, self.dim()) }
    }

    /// The fixed Jordan frame `c_1, …, c_r`.
    pub fn frame(&self) -> Vec<Element> {
        match *self {
            AlgebraKind::Rank1 => vec![self.identity()],
            AlgebraKind::Lorentz(n) => {
                let mut c1 = Coeffs::from_elem(0.0, n);
                let mut c2 = Coeffs::from_elem(0.0, n);
                c1[0] = 0.5;
                c1[1] = 0.5;
                c2[0] = 0.5;
                c2[1] = -0.5;
                vec![Element { kind: *self, coeffs: c1 }, Element { kind: *self, coeffs: c2 }]
            }
            AlgebraKind::SymMatrices(m) => (0..m)
                .map(|k| {
                    let mut c = Coeffs::from_elem(0.0, self.dim());
                    c[sym_index(m, k, k)] = 1.0;
                    Element { kind: *self, coeffs: c }
                })
                .collect(),
        }
    }

    /// `Σ a_k c_k` for the fixed frame.
    pub fn frame_diagonal(&self, a: &[f64]) -> Result<Element> {
        if a.len() != self.rank() {
            return Err(Error::Dimension(format!("expected {} frame weights, got {}", self.rank(), a.len())));
        }
        let mut out = self.zero();
        for (c, &w) in self.frame().iter().zip(a) {
            for (o, v) in out.coeffs.iter_mut().zip(&c.coeffs) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    /// Basis element `i` of the coordinate system.
    pub fn basis(&self, i: usize) -> Element {
        let mut e = self.zero();
        e.coeffs[i] = 1.0;
        e
    }
}

/// Position of entry `(i, j)`, `i ≤ j`, in the row-major upper-triangle listing.
pub fn sym_index(m: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * m - i * i.saturating_sub(1) / 2 + (j - i)
}

/// A point of the Jordan algebra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub kind: AlgebraKind,
    pub coeffs: Coeffs,
}

/// Spectral decomposition `x = Σ λ_k f_k` with eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub frame: Vec<Element>,
}

impl Spectrum {
    /// `Σ f(λ_k) f_k`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Element {
        let kind = self.frame[0].kind;
        let mut out = kind.zero();
        for (lam, fk) in self.eigenvalues.iter().zip(&self.frame) {
            let w = f(*lam);
            for (o, v) in out.coeffs.iter_mut().zip(&fk.coeffs) {
                *o += w * v;
            }
        }
        out
    }
}

impl Element {
    pub fn new(kind: AlgebraKind, coeffs: &[f64]) -> Result<Self> {
        kind.validate()?;
        if coeffs.len() != kind.dim() {
            return Err(Error::Dimension(format!(
                "{} expects {} coordinates, got {}",
                kind.name(),
                kind.dim(),
                coeffs.len()
            )));
        }
        Ok(Element { kind, coeffs: Coeffs::from_slice(coeffs) })
    }

    pub fn rank1(x: f64) -> Self {
        Element { kind: AlgebraKind::Rank1, coeffs: smallvec![x] }
    }

    /// Builds a `SymMatrices(m)` element from the upper triangle of `mat`.
    pub fn from_matrix(mat: &DMatrix<f64>) -> Result<Self> {
        let m = mat.nrows();
        if mat.ncols() != m || m == 0 {
            return Err(Error::Dimension("expected a non-empty square matrix".into()));
        }
        let kind = AlgebraKind::SymMatrices(m);
        let mut c = Coeffs::from_elem(0.0, kind.dim());
        for i in 0..m {
            for j in i..m {
                c[sym_index(m, i, j)] = mat[(i, j)];
            }
        }
        Ok(Element { kind, coeffs: c })
    }

    /// Convenience constructor from nested rows (upper triangle is used).
    pub fn sym(rows: &[&[f64]]) -> Result<Self> {
        let m = rows.len();
        let mat = DMatrix::from_fn(m, m, |i, j| rows[i.min(j)][i.max(j)]);
        Self::from_matrix(&mat)
    }

    /// Symmetric matrix of a `SymMatrices` element.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self.kind {
            AlgebraKind::SymMatrices(m) => {
                DMatrix::from_fn(m, m, |i, j| self.coeffs[sym_index(m, i, j)])
            }
            AlgebraKind::Rank1 => DMatrix::from_element(1, 1, self.coeffs[0]),
            AlgebraKind::Lorentz(_) => {
                // Only Lorentz(3) has a 2x2 symmetric model; other callers use coordinates.
                let x = &self.coeffs;
                DMatrix::from_row_slice(2, 2, &[x[0] + x[1], x[2], x[2], x[0] - x[1]])
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn check_kind(&self, other: &Element) -> Result<()> {
        if self.kind != other.kind {
            return Err(Error::Dimension(format!(
                "kind mismatch: {} vs {}",
                self.kind.name(),
                other.kind.name()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.check_kind(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.check_kind(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, s: f64) -> Element {
        Element { kind: self.kind, coeffs: self.coeffs.iter().map(|v| v * s).collect() }
    }

    fn zip_with(&self, other: &Element, f: impl Fn(f64, f64) -> f64) -> Element {
        Element {
            kind: self.kind,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    /// Jordan product `a ∘ b`.
    pub fn product(&self, other: &Element) -> Result<Element> {
        self.check_kind(other)?;
        Ok(self.product_unchecked(other))
    }

    pub(crate) fn product_unchecked(&self, b: &Element) -> Element {
        let a = self;
        match a.kind {
            AlgebraKind::Rank1 => Element::rank1(a.coeffs[0] * b.coeffs[0]),
            AlgebraKind::Lorentz(n) => {
                let mut c = Coeffs::from_elem(0.0, n);
                c[0] = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).sum();
                for i in 1..n {
                    c[i] = a.coeffs[0] * b.coeffs[i] + b.coeffs[0] * a.coeffs[i];
                }
                Element { kind: a.kind, coeffs: c }
            }
            AlgebraKind::SymMatrices(_) => {
                let (am, bm) = (a.to_matrix(), b.to_matrix());
                let prod = (&am * &bm + &bm * &am) * 0.5;
                Element::from_matrix(&prod).expect("square")
            }
        }
    }

    pub fn square(&self) -> Element {
        self.product_unchecked(self)
    }

    /// Quadratic representation `P(a)x = 2a∘(a∘x) − a²∘x`.
    pub fn quadratic_rep(&self, x: &Element) -> Result<Element> {
        self.check_kind(x)?;
        Ok(self.quadratic_rep_unchecked(x))
    }

    pub(crate) fn quadratic_rep_unchecked(&self, x: &Element) -> Element {
        match self.kind {
            AlgebraKind::SymMatrices(_) => {
                let a = self.to_matrix();
                Element::from_matrix(&(&a * x.to_matrix() * &a)).expect("square")
            }
            AlgebraKind::Lorentz(_) => {
                let ax = self.product_unchecked(x);
                let a_ax = self.product_unchecked(&ax);
                let aa_x = self.square().product_unchecked(x);
                a_ax.scale(2.0).zip_with(&aa_x, |u, v| u - v)
            }
            AlgebraKind::Rank1 => Element::rank1(self.coeffs[0] * self.coeffs[0] * x.coeffs[0]),
        }
    }

    /// Matrix of `P(a)` in the coordinate basis.
    pub fn quadratic_rep_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let col = self.quadratic_rep_unchecked(&self.kind.basis(j));
            for i in 0..n {
                m[(i, j)] = col.coeffs[i];
            }
        }
        m
    }

    /// Trace inner product `(x|y) = tr(x∘y)`.
    pub fn trace_inner(&self, other: &Element) -> Result<f64> {
        self.check_kind(other)?;
        Ok(self.trace_inner_unchecked(other))
    }

    pub(crate) fn trace_inner_unchecked(&self, other: &Element) -> f64 {
        match self.kind {
            AlgebraKind::Rank1 => self.coeffs[0] * other.coeffs[0],
            AlgebraKind::Lorentz(_) => 2.0 * self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum::<f64>(),
            AlgebraKind::SymMatrices(m) => {
                let mut s = 0.0;
                for i in 0..m {
                    for j in i..m {
                        let k = sym_index(m, i, j);
                        let w = if i == j { 1.0 } else { 2.0 };
                        s += w * self.coeffs[k] * other.coeffs[k];
                    }
                }
                s
            }
        }
    }

    /// `tr(x) = (x|e)`.
    pub fn trace(&self) -> f64 {
        self.trace_inner_unchecked(&self.kind.identity())
    }

    /// Trace norm `√(x|x)`.
    pub fn norm(&self) -> f64 {
        self.trace_inner_unchecked(self).sqrt()
    }

    /// Coordinates in a trace-orthonormal basis.
    pub fn to_ortho(&self) -> Coeffs {
        self.coeffs.iter().zip(self.kind.ortho_scales()).map(|(c, s)| c * s).collect()
    }

    pub fn from_ortho(kind: AlgebraKind, u: &[f64]) -> Element {
        Element { kind, coeffs: u.iter().zip(kind.ortho_scales()).map(|(c, s)| c / s).collect() }
    }

    /// Spectral decomposition with eigenvalues in descending order.
    pub fn spectral(&self) -> Spectrum {
        match self.kind {
            AlgebraKind::Rank1 => Spectrum { eigenvalues: vec![self.coeffs[0]], frame: vec![self.kind.identity()] },
            AlgebraKind::Lorentz(n) => {
                let x0 = self.coeffs[0];
                let rad = self.coeffs[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut u = Coeffs::from_elem(0.0, n);
                if rad > 1e-300 {
                    for i in 1..n {
                        u[i] = self.coeffs[i] / rad;
                    }
                } else {
                    u[1] = 1.0;
                }
                let mut f1 = u.clone();
                let mut f2: Coeffs = u.iter().map(|v| -v).collect();
                f1[0] = 1.0;
                f2[0] = 1.0;
                let half = |c: Coeffs| Element { kind: self.kind, coeffs: c.iter().map(|v| 0.5 * v).collect() };
                Spectrum { eigenvalues: vec![x0 + rad, x0 - rad], frame: vec![half(f1), half(f2)] }
            }
            AlgebraKind::SymMatrices(m) => {
                let eig = self.to_matrix().symmetric_eigen();
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal));
                let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
                let frame = order
                    .iter()
                    .map(|&k| {
                        let v = eig.eigenvectors.column(k);
                        Element::from_matrix(&(v * v.transpose())).expect("square")
                    })
                    .collect();
                Spectrum { eigenvalues, frame }
            }
        }
    }

    /// Eigenvalues only (descending), avoiding frame construction where possible.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.kind {
            AlgebraKind::Rank1 => vec![self.coeffs[0]],
            AlgebraKind::Lorentz(_) => {
                let rad = self.coeffs[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                vec![self.coeffs[0] + rad, self.coeffs[0] - rad]
            }
            AlgebraKind::SymMatrices(_) => {
                let mut ev: Vec<f64> = self.to_matrix().symmetric_eigenvalues().iter().copied().collect();
                ev.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
                ev
            }
        }
    }

    /// Principal minors `Δ_1(x), …, Δ_r(x)` with respect to the fixed frame.
    pub fn minors(&self) -> Vec<f64> {
        match self.kind {
            AlgebraKind::Rank1 => vec![self.coeffs[0]],
            AlgebraKind::Lorentz(_) => vec![self.coeffs[0] + self.coeffs[1], lorentz_det(&self.coeffs)],
            AlgebraKind::SymMatrices(m) => sym_leading_minors(m, &self.coeffs).to_vec(),
        }
    }

    /// Principal minors `Δ*_k` with respect to the reversed frame `c_r, …, c_1`.
    pub fn rotated_minors(&self) -> Vec<f64> {
        match self.kind {
            AlgebraKind::Rank1 => vec![self.coeffs[0]],
            AlgebraKind::Lorentz(_) => vec![self.coeffs[0] - self.coeffs[1], lorentz_det(&self.coeffs)],
            AlgebraKind::SymMatrices(m) => sym_leading_minors(m, &sym_reversed(m, &self.coeffs)).to_vec(),
        }
    }

    /// Jordan determinant `Δ(x) = Δ_r(x)`.
    pub fn det(&self) -> f64 {
        match self.kind {
            AlgebraKind::Rank1 => self.coeffs[0],
            AlgebraKind::Lorentz(_) => lorentz_det(&self.coeffs),
            AlgebraKind::SymMatrices(m) if m <= 3 => sym_leading_minors(m, &self.coeffs)[m - 1],
            AlgebraKind::SymMatrices(_) => self.to_matrix().determinant(),
        }
    }

    /// Sylvester membership: all principal minors positive.
    pub fn in_cone(&self) -> bool {
        self.minors().iter().all(|&d| d > 0.0)
    }

    /// Generalized power `Δ_s(x) = Δ_1^{s_1−s_2} ⋯ Δ_r^{s_r}` for `x ∈ Ω`.
    pub fn power_delta(&self, s: &SpectralParam) -> Result<f64> {
        Ok(self.log_power_delta(s)?.exp())
    }

    /// `log Δ_s(x)`.
    pub fn log_power_delta(&self, s: &SpectralParam) -> Result<f64> {
        if s.kind != self.kind {
            return Err(Error::Dimension("spectral parameter and element kinds differ".into()));
        }
        let minors = self.minors();
        if minors.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Domain(format!("point {:?} is not in the cone", self.coeffs.as_slice())));
        }
        Ok(power_from_minors(&minors, &s.s))
    }

    /// `Δ*_s(x)` built from rotated minors.
    pub fn rotated_power_delta(&self, s: &SpectralParam) -> Result<f64> {
        let minors = self.rotated_minors();
        if minors.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Domain("point is not in the cone".into()));
        }
        Ok(power_from_minors(&minors, &s.s).exp())
    }

    /// Jordan inverse.
    pub fn inverse(&self) -> Result<Element> {
        match self.kind {
            AlgebraKind::Rank1 => {
                if self.coeffs[0] == 0.0 {
                    return Err(Error::Domain("zero is not invertible".into()));
                }
                Ok(Element::rank1(1.0 / self.coeffs[0]))
            }
            AlgebraKind::Lorentz(_) => {
                let d = lorentz_det(&self.coeffs);
                let scale = self.coeffs.iter().map(|v| v * v).sum::<f64>();
                if d.abs() <= 1e-14 * scale {
                    return Err(Error::Domain("singular Lorentz element".into()));
                }
                let mut c: Coeffs = self.coeffs.iter().map(|v| -v / d).collect();
                c[0] = self.coeffs[0] / d;
                Ok(Element { kind: self.kind, coeffs: c })
            }
            AlgebraKind::SymMatrices(_) => {
                let inv = self
                    .to_matrix()
                    .try_inverse()
                    .ok_or_else(|| Error::Domain("singular matrix".into()))?;
                let sym = (&inv + inv.transpose()) * 0.5;
                Element::from_matrix(&sym)
            }
        }
    }

    /// Square root of a cone element.
    pub fn sqrt(&self) -> Result<Element> {
        let sp = self.spectral();
        if sp.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Domain("sqrt requires a point of the cone".into()));
        }
        Ok(sp.map(f64::sqrt))
    }

    /// `x^{-1/2}` for a cone element.
    pub fn inv_sqrt(&self) -> Result<Element> {
        let sp = self.spectral();
        if sp.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Domain("inverse square root requires a point of the cone".into()));
        }
        Ok(sp.map(|l| 1.0 / l.sqrt()))
    }

    /// Jordan exponential; maps `V` onto `Ω`.
    pub fn exp(&self) -> Element {
        self.spectral().map(f64::exp)
    }

    /// Jordan logarithm of a cone element.
    pub fn log(&self) -> Result<Element> {
        let sp = self.spectral();
        if sp.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Domain("log requires a point of the cone".into()));
        }
        Ok(sp.map(f64::ln))
    }
}

/// `Σ (s_k − s_{k+1}) log Δ_k` with `s_{r+1} = 0`.
pub(crate) fn power_from_minors(minors: &[f64], s: &[f64]) -> f64 {
    let r = s.len();
    (0..r)
        .map(|k| {
            let next = if k + 1 < r { s[k + 1] } else { 0.0 };
            let e = s[k] - next;
            if e == 0.0 {
                0.0
            } else {
                e * minors[k].ln()
            }
        })
        .sum()
}

fn lorentz_det(x: &[f64]) -> f64 {
    x[0] * x[0] - x[1..].iter().map(|v| v * v).sum::<f64>()
}

/// Leading principal minors of the symmetric matrix with upper triangle `c`.
pub(crate) fn sym_leading_minors<T: nalgebra::ComplexField + Copy>(m: usize, c: &[T]) -> SmallVec<[T; 4]> {
    match m {
        1 => smallvec![c[0]],
        2 => smallvec![c[0], c[0] * c[2] - c[1] * c[1]],
        3 => {
            let (a11, a12, a13, a22, a23, a33) = (c[0], c[1], c[2], c[3], c[4], c[5]);
            let d2 = a11 * a22 - a12 * a12;
            let d3 = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) + a13 * (a12 * a23 - a22 * a13);
            smallvec![a11, d2, d3]
        }
        _ => {
            let a = DMatrix::from_fn(m, m, |i, j| c[sym_index(m, i, j)]);
            (1..=m).map(|k| a.view((0, 0), (k, k)).determinant()).collect()
        }
    }
}

/// Upper triangle of the matrix with rows and columns in reverse order.
pub(crate) fn sym_reversed<T: Copy>(m: usize, c: &[T]) -> SmallVec<[T; 6]> {
    let mut out = SmallVec::with_capacity(c.len());
    for i in 0..m {
        for j in i..m {
            out.push(c[sym_index(m, m - 1 - j, m - 1 - i)]);
        }
    }
    out
}
