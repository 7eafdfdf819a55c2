//! Sampling and synthesis operators on tube lattices, coefficient norms and
//! atomic reconstruction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::SpectralParam;
use crate::error::{Error, Result};
use crate::jordan::Element;
use crate::lattice::TubeLattice;
use crate::quad::QuadratureConfig;
use crate::spaces::{invariant_ball_volume, mixed_norm, AtomCombo};
use crate::tube::{bergman_kernel, KernelSpec, TubePoint};

const LSQ_REFINEMENTS: usize = 4;

/// Largest normal-matrix condition number solved without a ridge.
const LSQ_CONDITION_LIMIT: f64 = 1e12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Coefficients `λ_{l,j}` stored as `values[j][l]`, matching [`TubeLattice::xgrids`].
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffArray {
    pub values: Vec<Vec<Complex64>>,
}

#[derive(Serialize, Deserialize)]
struct CoeffFile {
    values: Vec<Vec<(f64, f64)>>,
}

impl CoeffArray {
    pub fn zeros(tl: &TubeLattice) -> Self {
        CoeffArray { values: tl.xgrids.iter().map(|g| vec![ZERO; g.len()]).collect() }
    }

    pub fn matches(&self, tl: &TubeLattice) -> bool {
        self.values.len() == tl.xgrids.len() && self.values.iter().zip(&tl.xgrids).all(|(v, g)| v.len() == g.len())
    }

    fn check(&self, tl: &TubeLattice) -> Result<()> {
        if self.matches(tl) {
            Ok(())
        } else {
            Err(Error::Dimension("coefficient array does not match the lattice".into()))
        }
    }

    pub fn len(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, l: usize, j: usize) -> Option<Complex64> {
        self.values.get(j).and_then(|v| v.get(l)).copied()
    }

    pub fn set(&mut self, l: usize, j: usize, v: Complex64) -> Result<()> {
        let slot = self
            .values
            .get_mut(j)
            .and_then(|row| row.get_mut(l))
            .ok_or_else(|| Error::Index(format!("coefficient ({l}, {j})")))?;
        *slot = v;
        Ok(())
    }

    /// `(l, j, λ_{l,j})` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.values.iter().enumerate().flat_map(|(j, row)| row.iter().enumerate().map(move |(l, v)| (l, j, *v)))
    }

    pub fn scale(&self, a: Complex64) -> Self {
        CoeffArray { values: self.values.iter().map(|row| row.iter().map(|v| v * a).collect()).collect() }
    }

    pub fn add(&self, other: &CoeffArray) -> Result<Self> {
        if self.values.len() != other.values.len() || self.values.iter().zip(&other.values).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::Dimension("coefficient arrays of different shapes".into()));
        }
        Ok(CoeffArray {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect(),
        })
    }

    pub fn to_vector(&self) -> DVector<Complex64> {
        DVector::from_iterator(self.len(), self.iter().map(|(_, _, v)| v))
    }

    pub fn from_vector(tl: &TubeLattice, v: &DVector<Complex64>) -> Result<Self> {
        if v.len() != tl.len() {
            return Err(Error::Dimension(format!("vector of length {} for {} lattice points", v.len(), tl.len())));
        }
        let mut it = v.iter().copied();
        Ok(CoeffArray { values: tl.xgrids.iter().map(|g| it.by_ref().take(g.len()).collect()).collect() })
    }

    pub fn to_json(&self) -> Result<String> {
        let file = CoeffFile { values: self.values.iter().map(|r| r.iter().map(|c| (c.re, c.im)).collect()).collect() };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CoeffFile = serde_json::from_str(text)?;
        Ok(CoeffArray { values: file.values.iter().map(|r| r.iter().map(|(a, b)| Complex64::new(*a, *b)).collect()).collect() })
    }
}

/// Height weight attached to the atom at `z_{l,j}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightMode {
    /// `Δ_{s+nq/(rp)}(y_j)`.
    #[default]
    StatementWeight,
    /// `Δ_{s+n/r}(y_j)`.
    PairingWeight,
}

impl WeightMode {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "statement" => Ok(WeightMode::StatementWeight),
            "pairing" => Ok(WeightMode::PairingWeight),
            _ => Err(Error::Param(format!("unknown weight mode {name:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightMode::StatementWeight => "statement",
            WeightMode::PairingWeight => "pairing",
        }
    }
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if p >= 1.0 && q >= 1.0 && p.is_finite() && q.is_finite() {
        Ok(())
    } else {
        Err(Error::Param(format!("need 1 ≤ p, q < ∞, got p = {p}, q = {q}")))
    }
}

/// Exponent `s + nq/(rp)`.
fn sampling_exponent(s: &SpectralParam, p: f64, q: f64) -> SpectralParam {
    s.shift(s.kind.n_over_r() * q / p)
}

/// Kernel, weight mode and exponents defining the synthesis operator.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSpec {
    pub ks: KernelSpec,
    pub wm: WeightMode,
    pub p: f64,
    pub q: f64,
}

impl FrameSpec {
    pub fn new(ks: KernelSpec, wm: WeightMode, p: f64, q: f64) -> Result<Self> {
        check_pq(p, q)?;
        Ok(FrameSpec { ks, wm, p, q })
    }

    pub fn weight(&self, y: &Element) -> Result<f64> {
        let s = &self.ks.s;
        let e = match self.wm {
            WeightMode::StatementWeight => sampling_exponent(s, self.p, self.q),
            WeightMode::PairingWeight => s.shift(s.kind.n_over_r()),
        };
        y.power_delta(&e)
    }

    /// Weights of the cone points of `tl`.
    pub fn weights(&self, tl: &TubeLattice) -> Result<Vec<f64>> {
        tl.cone.points.iter().map(|y| self.weight(y)).collect()
    }
}

/// `λ_{l,j} = F(z_{l,j})`.
pub fn analysis(f: &AtomCombo, tl: &TubeLattice) -> Result<CoeffArray> {
    if f.kind() != tl.kind() {
        return Err(Error::Dimension("function and lattice of different kinds".into()));
    }
    let mut out = CoeffArray::zeros(tl);
    if f.is_zero() {
        return Ok(out);
    }
    for (j, row) in out.values.iter_mut().enumerate() {
        let y = &tl.cone.points[j];
        for (l, v) in row.iter_mut().enumerate() {
            *v = f.eval(&TubePoint { x: tl.xgrids[j][l].clone(), y: y.clone() })?;
        }
    }
    Ok(out)
}

/// `(Σ_j (Σ_l |λ_{l,j}|^p)^{q/p} Δ_{s+nq/(rp)}(y_j))^{1/q}`.
pub fn coeff_norm(lambda: &CoeffArray, tl: &TubeLattice, p: f64, q: f64, s: &SpectralParam) -> Result<f64> {
    check_pq(p, q)?;
    lambda.check(tl)?;
    let e = sampling_exponent(s, p, q);
    let mut total = 0.0;
    for (j, row) in lambda.values.iter().enumerate() {
        let inner: f64 = row.iter().map(|v| v.norm().powf(p)).sum();
        if inner > 0.0 {
            total += inner.powf(q / p) * tl.cone.points[j].power_delta(&e)?;
        }
    }
    Ok(total.powf(1.0 / q))
}

/// Per-point cell measures of a lattice: `κ_x(j)` in units of `Δ^{n/r}(y_j)`
/// for the real directions and `κ_y` in the invariant measure of the cone.
#[derive(Clone, Debug, PartialEq)]
pub struct CellMeasures {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Cell measures from the covered regions and the point counts.
pub fn cell_measures(tl: &TubeLattice) -> Result<CellMeasures> {
    let kind = tl.kind();
    let n = kind.dim();
    let box_volume = (2.0 * tl.xbox).powi(n as i32) * kind.measure_factor();
    let x = tl
        .xgrids
        .iter()
        .zip(&tl.cone.transforms)
        .map(|(g, t)| if g.is_empty() { 0.0 } else { box_volume / (g.len() as f64 * t.det) })
        .collect();
    let y = invariant_ball_volume(kind, tl.cone.radius)? / tl.cone.len() as f64;
    Ok(CellMeasures { x, y })
}

/// Lattice sum with each point weighted by its cell, a Riemann sum for
/// `‖F‖_{L^{p,q}_s}^q`.
pub fn normalized_coeff_sum(lambda: &CoeffArray, tl: &TubeLattice, p: f64, q: f64, s: &SpectralParam, cells: &CellMeasures) -> Result<f64> {
    check_pq(p, q)?;
    lambda.check(tl)?;
    let e = sampling_exponent(s, p, q);
    let mut total = 0.0;
    for (j, row) in lambda.values.iter().enumerate() {
        let inner: f64 = row.iter().map(|v| v.norm().powf(p)).sum::<f64>() * cells.x[j];
        if inner > 0.0 {
            total += inner.powf(q / p) * tl.cone.points[j].power_delta(&e)?;
        }
    }
    Ok(total * cells.y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingRatio {
    /// `coeff_norm^q / mixed_norm^q`.
    pub raw: f64,
    /// Cell-weighted lattice sum over `mixed_norm^q`.
    pub normalized: f64,
    pub mixed_norm: f64,
}

/// Sampling ratio against a precomputed mixed norm.
pub fn sampling_ratio_with_norm(f: &AtomCombo, tl: &TubeLattice, p: f64, q: f64, s: &SpectralParam, norm: f64) -> Result<SamplingRatio> {
    check_pq(p, q)?;
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Param(format!("degenerate function: mixed norm {norm}")));
    }
    let lambda = analysis(f, tl)?;
    let cells = cell_measures(tl)?;
    let nq = norm.powf(q);
    Ok(SamplingRatio {
        raw: coeff_norm(&lambda, tl, p, q, s)?.powf(q) / nq,
        normalized: normalized_coeff_sum(&lambda, tl, p, q, s, &cells)? / nq,
        mixed_norm: norm,
    })
}

pub fn sampling_ratio(f: &AtomCombo, tl: &TubeLattice, p: f64, q: f64, s: &SpectralParam, cfg: &QuadratureConfig) -> Result<SamplingRatio> {
    let norm = mixed_norm(f, p, q, s, cfg)?.value;
    sampling_ratio_with_norm(f, tl, p, q, s, norm)
}

/// `F(z) = Σ λ_{l,j} w(y_j) B_s(z, z_{l,j})`; zero coefficients are dropped.
pub fn synthesis(lambda: &CoeffArray, tl: &TubeLattice, spec: &FrameSpec) -> Result<AtomCombo> {
    lambda.check(tl)?;
    if spec.ks.s.kind != tl.kind() {
        return Err(Error::Dimension("kernel and lattice of different kinds".into()));
    }
    let w = spec.weights(tl)?;
    let mut centers = Vec::new();
    let mut coeffs = Vec::new();
    for (l, j, v) in lambda.iter() {
        if v != ZERO {
            centers.push(tl.point(l, j)?);
            coeffs.push(v * w[j]);
        }
    }
    AtomCombo::new(spec.ks.clone(), centers, coeffs)
}

/// `S_c F = c · synthesis(analysis(F))`.
pub fn frame_apply(f: &AtomCombo, tl: &TubeLattice, spec: &FrameSpec, c: f64) -> Result<AtomCombo> {
    if !(c > 0.0) {
        return Err(Error::Param(format!("relaxation constant must be positive, got {c}")));
    }
    Ok(synthesis(&analysis(f, tl)?, tl, spec)?.scale(Complex64::new(c, 0.0)))
}

/// `M_{im} = w(y_m) B_s(z_i, z_m)` over the lattice points in storage order.
pub fn collocation_matrix(points: &[TubePoint], tl: &TubeLattice, spec: &FrameSpec) -> Result<DMatrix<Complex64>> {
    let centers = tl.points();
    let w = spec.weights(tl)?;
    let wcol: Vec<f64> = tl.indices().map(|(_, j)| w[j]).collect();
    let mut m = DMatrix::from_element(points.len(), centers.len(), ZERO);
    for (c, zc) in centers.iter().enumerate() {
        for (i, z) in points.iter().enumerate() {
            m[(i, c)] = bergman_kernel(z, zc, &spec.ks)? * wcol[c];
        }
    }
    Ok(m)
}

/// Relaxation constant for `I − cS` and the spectral estimates behind it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relaxation {
    pub c: f64,
    pub mu_max: f64,
    pub mu_min: f64,
    /// Estimated spectral radius of `I − cS`.
    pub factor: f64,
}

fn power_iteration(apply: impl Fn(&DVector<Complex64>) -> DVector<Complex64>, dim: usize, iters: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    v /= Complex64::new(v.norm(), 0.0);
    let mut mu = 0.0;
    for _ in 0..iters {
        let w = apply(&v);
        let next = v.dotc(&w).re;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        v = w / Complex64::new(nw, 0.0);
        if (next - mu).abs() <= 1e-12 * next.abs() {
            return next;
        }
        mu = next;
    }
    mu
}

/// `c = 2/(μ_min + μ_max)` for the extreme eigenvalues of the Hermitian form
/// `W^{1/2} K W^{1/2}` of the square lattice collocation matrix `K W`,
/// estimated by power iteration.
pub fn optimal_relaxation(kw: &DMatrix<Complex64>, tl: &TubeLattice, spec: &FrameSpec, iters: usize, seed: u64) -> Result<Relaxation> {
    let n = kw.nrows();
    if kw.ncols() != n || n != tl.len() || n == 0 {
        return Err(Error::Dimension("relaxation needs the square lattice collocation matrix".into()));
    }
    let w = spec.weights(tl)?;
    let root: Vec<f64> = tl.indices().map(|(_, j)| w[j].sqrt()).collect();
    let mut a = kw.clone();
    for c in 0..n {
        for r in 0..n {
            a[(r, c)] *= root[r] / root[c];
        }
    }
    let a = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let mu_max = power_iteration(|v| &a * v, n, iters, seed);
    let shifted = power_iteration(|v| v * Complex64::new(mu_max, 0.0) - &a * v, n, iters, seed.wrapping_add(1));
    let mu_min = (mu_max - shifted).max(0.0);
    let c = 2.0 / (mu_min + mu_max);
    Ok(Relaxation { c, mu_max, mu_min, factor: (mu_max - mu_min) / (mu_max + mu_min) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeumannResult {
    pub lambda: CoeffArray,
    pub residuals: Vec<f64>,
    pub relaxation: Relaxation,
    /// Set when the residual grew in two consecutive steps.
    pub diverged: bool,
}

/// Lattice quantities shared by all Neumann runs on one target.
struct NeumannSystem {
    kw: DMatrix<Complex64>,
    v: DMatrix<Complex64>,
    fv: DVector<Complex64>,
    g0: DVector<Complex64>,
    sup: f64,
}

impl NeumannSystem {
    fn run(&self, c: f64, iters: usize) -> (DVector<Complex64>, Vec<f64>) {
        let c = Complex64::new(c, 0.0);
        let mut g = self.g0.clone();
        let mut lambda = DVector::from_element(self.g0.len(), ZERO);
        let mut residuals = Vec::with_capacity(iters);
        for _ in 0..iters {
            lambda += &g * c;
            g -= (&self.kw * &g) * c;
            let res = if self.sup > 0.0 { (&self.fv - &self.v * &lambda).iter().map(|z| z.norm()).fold(0.0, f64::max) / self.sup } else { 0.0 };
            residuals.push(res);
        }
        (lambda, residuals)
    }
}

/// Multiples of `1/μ_max` tried when the spectral estimate leaves `c` undetermined.
const RELAXATION_GRID: [f64; 15] = [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0, 1.125, 1.25, 1.375, 1.5, 1.625, 1.75, 1.875];

/// Smallest usable `μ_min/μ_max`; below it `I − cS` has no contraction margin.
const SPECTRAL_GAP: f64 = 1e-3;

/// Neumann iteration `λ += c R G_k`, `G_{k+1} = G_k − S_c G_k` starting at
/// `G_0 = F`; residuals are `sup |F − synthesis(λ)| / sup |F|` over `validation`.
///
/// With `c = None` the relaxation is [`optimal_relaxation`] when the spectral
/// estimate shows a gap, and otherwise the multiple of `1/μ_max` on a fixed grid
/// with the smallest final residual.
pub fn reconstruct_neumann(
    f: &AtomCombo,
    tl: &TubeLattice,
    spec: &FrameSpec,
    iters: usize,
    validation: &[TubePoint],
    c: Option<f64>,
) -> Result<NeumannResult> {
    if iters == 0 {
        return Err(Error::Param("at least one iteration is required".into()));
    }
    if validation.is_empty() {
        return Err(Error::Param("empty validation set".into()));
    }
    if let Some(c) = c {
        if !(c > 0.0) {
            return Err(Error::Param(format!("relaxation constant must be positive, got {c}")));
        }
    }
    let kw = collocation_matrix(&tl.points(), tl, spec)?;
    let mut relaxation = optimal_relaxation(&kw, tl, spec, 300, 0)?;
    let fv = DVector::from_iterator(validation.len(), validation.iter().map(|z| f.eval(z)).collect::<Result<Vec<_>>>()?);
    let system = NeumannSystem {
        v: collocation_matrix(validation, tl, spec)?,
        sup: fv.iter().map(|z| z.norm()).fold(0.0, f64::max),
        fv,
        g0: analysis(f, tl)?.to_vector(),
        kw,
    };
    let chosen = match c {
        Some(c) => c,
        None if relaxation.mu_min >= SPECTRAL_GAP * relaxation.mu_max => relaxation.c,
        None => {
            let mut best = (f64::INFINITY, relaxation.c);
            for k in RELAXATION_GRID {
                let c = k / relaxation.mu_max;
                let last = *system.run(c, iters).1.last().expect("iters ≥ 1");
                if last < best.0 {
                    best = (last, c);
                }
            }
            best.1
        }
    };
    relaxation.c = chosen;
    relaxation.factor = (1.0 - chosen * relaxation.mu_min).abs().max((1.0 - chosen * relaxation.mu_max).abs());
    let (lambda, residuals) = system.run(chosen, iters);
    let diverged = residuals.windows(3).any(|w| w[1] > w[0] && w[2] > w[1]);
    Ok(NeumannResult { lambda: CoeffArray::from_vector(tl, &lambda)?, residuals, relaxation, diverged })
}

/// Geometric mean of the residual ratios over the run, `(r_K/r_1)^{1/(K−1)}`.
pub fn residual_factor(residuals: &[f64]) -> Option<f64> {
    match (residuals.first(), residuals.last()) {
        (Some(&a), Some(&b)) if residuals.len() > 1 && a > 0.0 => Some((b / a).powf(1.0 / (residuals.len() - 1) as f64)),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsqResult {
    pub lambda: CoeffArray,
    /// `‖F − synthesis(λ)‖ / ‖F‖` over the collocation points.
    pub residual: f64,
    /// Zero when the system was well enough conditioned to solve directly.
    pub ridge: f64,
    /// Estimated condition number of the normal matrix after equilibration and ridge.
    pub condition: f64,
}

/// Ratio of the extreme diagonal magnitudes of a pivoted triangular factor,
/// an estimate of its condition number.
fn triangular_condition(r: &DMatrix<Complex64>) -> f64 {
    let (lo, hi) = r.diagonal().iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d.norm()), hi.max(d.norm())));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// `sup |F − G| / sup |F|` over `points`.
pub fn relative_sup_residual(f: &AtomCombo, g: &AtomCombo, points: &[TubePoint]) -> Result<f64> {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for z in points {
        let a = f.eval(z)?;
        num = num.max((a - g.eval(z)?).norm());
        den = den.max(a.norm());
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Least squares fit of `λ` on `collocation` by regularized normal equations.
pub fn reconstruct_lsq(f: &AtomCombo, tl: &TubeLattice, spec: &FrameSpec, collocation: &[TubePoint]) -> Result<LsqResult> {
    let n = tl.len();
    if collocation.len() < n || n == 0 {
        return Err(Error::Param(format!("{} collocation points for {n} lattice points", collocation.len())));
    }
    let m = collocation_matrix(collocation, tl, spec)?;
    let b = DVector::from_iterator(collocation.len(), collocation.iter().map(|z| f.eval(z)).collect::<Result<Vec<_>>>()?);
    let rows = m.nrows();
    // Columns are equilibrated so that the ridge acts evenly on all atoms.
    let colscale: Vec<f64> = m.column_iter().map(|c| if c.norm() > 0.0 { 1.0 / c.norm() } else { 1.0 }).collect();
    let mut m = m;
    for (c, sc) in colscale.iter().enumerate() {
        m.column_mut(c).scale_mut(*sc);
    }
    // Well-conditioned systems are solved exactly; otherwise the ridge
    // normal equations are solved through a QR factorization of `[M; √ε I]`.
    // Column pivoting makes the diagonal of R rank revealing.
    let mut ridge = 0.0;
    let mut aug = m.clone();
    let mut qr = aug.clone().col_piv_qr();
    let mut condition = triangular_condition(&qr.r()).powi(2);
    if !(condition <= LSQ_CONDITION_LIMIT) {
        ridge = 1e-10 * m.norm_squared() / n as f64;
        aug = DMatrix::from_element(rows + n, n, ZERO);
        aug.view_mut((0, 0), (rows, n)).copy_from(&m);
        for i in 0..n {
            aug[(rows + i, i)] = Complex64::new(ridge.sqrt(), 0.0);
        }
        qr = aug.clone().col_piv_qr();
        condition = triangular_condition(&qr.r()).powi(2);
    }
    let total_rows = aug.nrows();
    let (q, rfac) = (qr.q(), qr.r());
    let solve = |rhs: &DVector<Complex64>| -> Result<DVector<Complex64>> {
        let mut ext = DVector::from_element(total_rows, ZERO);
        ext.rows_mut(0, rows).copy_from(rhs);
        let mut x = rfac.solve_upper_triangular(&(q.adjoint() * ext)).ok_or_else(|| Error::Domain("singular least squares system".into()))?;
        qr.p().inv_permute_rows(&mut x);
        Ok(x)
    };
    let mut lambda = solve(&b)?;
    let mut r = &b - &m * &lambda;
    // Iterated refinement removes the ridge bias on well-resolved directions.
    for _ in 0..LSQ_REFINEMENTS {
        let next = &lambda + solve(&r)?;
        let rn = &b - &m * &next;
        if rn.norm() >= r.norm() {
            break;
        }
        lambda = next;
        r = rn;
    }
    for (v, sc) in lambda.iter_mut().zip(&colscale) {
        *v *= *sc;
    }
    let bn = b.norm();
    let residual = if bn > 0.0 { r.norm() / bn } else { 0.0 };
    Ok(LsqResult { lambda: CoeffArray::from_vector(tl, &lambda)?, residual, ridge, condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::AlgebraKind;
    use crate::lattice::{build_cone_lattice, build_tube_lattice};

    fn rank1_lattice(delta: f64) -> TubeLattice {
        build_tube_lattice(build_cone_lattice(AlgebraKind::Rank1, delta, 1.0).unwrap(), 2.0, 1.0).unwrap()
    }

    fn spec(wm: WeightMode) -> FrameSpec {
        FrameSpec::new(KernelSpec::rank1(2.0).unwrap(), wm, 2.0, 2.0).unwrap()
    }

    fn atom(x: f64, y: f64) -> AtomCombo {
        AtomCombo::single(KernelSpec::rank1(4.0).unwrap(), TubePoint::new(&[x], Element::rank1(y)).unwrap(), Complex64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn analysis_is_linear_evaluation() {
        let tl = rank1_lattice(0.4);
        let ks = KernelSpec::rank1(4.0).unwrap();
        assert!(analysis(&AtomCombo::zero(ks.clone()), &tl).unwrap().iter().all(|(_, _, v)| v == ZERO));
        let f = atom(0.2, 0.9);
        let a = analysis(&f, &tl).unwrap();
        assert!(a.matches(&tl));
        for (l, j, v) in a.iter().step_by(7) {
            assert_eq!(v, bergman_kernel(&tl.point(l, j).unwrap(), &f.centers[0], &ks).unwrap());
        }
        let g = atom(-0.3, 1.4);
        let c = Complex64::new(0.5, -2.0);
        let combo = analysis(&f.add(&g.scale(c)).unwrap(), &tl).unwrap();
        let parts = a.add(&analysis(&g, &tl).unwrap().scale(c)).unwrap();
        for ((_, _, u), (_, _, v)) in combo.iter().zip(parts.iter()) {
            assert!((u - v).norm() <= 1e-14 * u.norm().max(1e-300));
        }
    }

    #[test]
    fn coeff_norm_examples() {
        let tl = rank1_lattice(0.4);
        let s = SpectralParam::scalar(AlgebraKind::Rank1, 2.0);
        let mut lam = CoeffArray::zeros(&tl);
        assert_eq!(coeff_norm(&lam, &tl, 2.0, 3.0, &s).unwrap(), 0.0);
        let j = 2;
        lam.set(1, j, Complex64::new(3.0, 4.0)).unwrap();
        let y = tl.cone.points[j].coeffs[0];
        // p = 2, q = 3: Δ_{s + nq/(rp)} = y^{2 + 1.5}.
        let want = 5.0 * y.powf(3.5 / 3.0);
        assert!((coeff_norm(&lam, &tl, 2.0, 3.0, &s).unwrap() / want - 1.0).abs() < 1e-14);
        // Two points on the same height and one on another.
        lam.set(0, j, Complex64::new(0.0, 1.0)).unwrap();
        let k = 0;
        lam.set(0, k, Complex64::new(2.0, 0.0)).unwrap();
        let yk = tl.cone.points[k].coeffs[0];
        let want = (26.0f64.powf(1.5) * y.powf(3.5) + 8.0 * yk.powf(3.5)).powf(1.0 / 3.0);
        assert!((coeff_norm(&lam, &tl, 2.0, 3.0, &s).unwrap() / want - 1.0).abs() < 1e-14);
        assert!((coeff_norm(&lam.scale(Complex64::new(0.0, 2.0)), &tl, 2.0, 3.0, &s).unwrap() / want - 2.0).abs() < 1e-14);
    }

    #[test]
    fn coeff_json_round_trip() {
        let tl = rank1_lattice(0.8);
        let lam = analysis(&atom(0.1, 1.2), &tl).unwrap();
        assert_eq!(CoeffArray::from_json(&lam.to_json().unwrap()).unwrap(), lam);
        assert_eq!(CoeffArray::from_vector(&tl, &lam.to_vector()).unwrap(), lam);
    }

    #[test]
    fn synthesis_and_frame_apply() {
        let tl = rank1_lattice(0.4);
        let sp = spec(WeightMode::StatementWeight);
        let zero = CoeffArray::zeros(&tl);
        assert!(synthesis(&zero, &tl, &sp).unwrap().is_zero());
        let mut lam = zero.clone();
        lam.set(3, 1, Complex64::new(2.0, 0.0)).unwrap();
        let f = synthesis(&lam, &tl, &sp).unwrap();
        assert_eq!(f.centers, vec![tl.point(3, 1).unwrap()]);
        let y = tl.cone.points[1].coeffs[0];
        assert!((f.coeffs[0].re / (2.0 * y.powf(3.0)) - 1.0).abs() < 1e-14);
        let g = atom(0.0, 1.0);
        let s0 = frame_apply(&AtomCombo::zero(g.ks.clone()), &tl, &sp, 0.5).unwrap();
        assert!(s0.is_zero());
        let z = TubePoint::new(&[0.05], Element::rank1(0.95)).unwrap();
        let a = frame_apply(&g, &tl, &sp, 0.5).unwrap().eval(&z).unwrap();
        let b = frame_apply(&g.scale(Complex64::new(0.0, 3.0)), &tl, &sp, 0.5).unwrap().eval(&z).unwrap();
        assert!((b - a * Complex64::new(0.0, 3.0)).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn pairing_weight_matches_statement_weight_when_p_equals_q() {
        let tl = rank1_lattice(0.8);
        let a = spec(WeightMode::StatementWeight).weights(&tl).unwrap();
        let b = spec(WeightMode::PairingWeight).weights(&tl).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u / v - 1.0).abs() < 1e-14);
        }
        let c = FrameSpec::new(KernelSpec::rank1(2.0).unwrap(), WeightMode::StatementWeight, 1.0, 2.0).unwrap();
        let y = tl.cone.points[0].coeffs[0];
        assert!((c.weight(&tl.cone.points[0]).unwrap() / y.powf(4.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn relaxation_contracts() {
        let tl = rank1_lattice(0.4);
        let sp = spec(WeightMode::PairingWeight);
        let kw = collocation_matrix(&tl.points(), &tl, &sp).unwrap();
        let r = optimal_relaxation(&kw, &tl, &sp, 3000, 1).unwrap();
        assert!(r.mu_max > 0.0 && r.mu_min >= 0.0 && r.factor < 1.0, "{r:?}");
    }

    #[test]
    fn lsq_zero_target_and_manufactured_solution() {
        let tl = build_tube_lattice(build_cone_lattice(AlgebraKind::Rank1, 0.8, 0.5).unwrap(), 2.0, 0.6).unwrap();
        let sp = spec(WeightMode::StatementWeight);
        let colloc: Vec<TubePoint> = tl
            .points()
            .iter()
            .flat_map(|z| [z.clone(), TubePoint::new(&[z.x[0] + 0.03], z.y.scale(1.02)).unwrap()])
            .collect();
        let zero = AtomCombo::zero(sp.ks.clone());
        let r = reconstruct_lsq(&zero, &tl, &sp, &colloc).unwrap();
        assert!(r.lambda.iter().all(|(_, _, v)| v == ZERO));
        assert_eq!(r.residual, 0.0);
        let mut lam = CoeffArray::zeros(&tl);
        lam.set(1, 0, Complex64::new(1.0, -1.0)).unwrap();
        lam.set(0, 0, Complex64::new(0.5, 0.0)).unwrap();
        let f = synthesis(&lam, &tl, &sp).unwrap();
        let r = reconstruct_lsq(&f, &tl, &sp, &colloc).unwrap();
        assert!(r.residual < 1e-8, "{} {}", r.residual, r.condition);
        assert!(r.condition >= 1.0 && r.ridge == 0.0);
        assert!(reconstruct_lsq(&f, &tl, &sp, &colloc[..3]).is_err());
    }

    #[test]
    fn neumann_reports_and_is_reproducible() {
        let tl = rank1_lattice(0.4);
        let sp = spec(WeightMode::StatementWeight);
        let f = atom(0.1, 1.1);
        let val: Vec<TubePoint> = (0..5).map(|i| TubePoint::new(&[0.1 * i as f64 - 0.2], Element::rank1(0.9 + 0.05 * i as f64)).unwrap()).collect();
        assert!(reconstruct_neumann(&f, &tl, &sp, 0, &val, None).is_err());
        let a = reconstruct_neumann(&f, &tl, &sp, 6, &val, None).unwrap();
        let b = reconstruct_neumann(&f, &tl, &sp, 6, &val, None).unwrap();
        assert_eq!(a.residuals.len(), 6);
        assert_eq!(a, b);
        let z = reconstruct_neumann(&AtomCombo::zero(f.ks.clone()), &tl, &sp, 3, &val, None).unwrap();
        assert!(z.residuals.iter().all(|r| *r == 0.0));
    }
}
