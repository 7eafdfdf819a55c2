//! Tensor-product composite Gauss–Legendre quadrature on boxes `[-T, T]^d`,
//! with compensated summation over cells and built-in truncation and
//! discretization estimates.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Half-width of the box for the real directions, in mapped units.
    pub x_halfwidth: f64,
    /// Half-width of the box for the cone directions, in mapped units.
    pub omega_radius: f64,
    /// Panels per unit length of the mapped variables.
    pub base_resolution: usize,
    /// Maximum number of box doublings or resolution doublings.
    pub refinement_depth: usize,
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            x_halfwidth: 3.0,
            omega_radius: 4.0,
            base_resolution: 2,
            refinement_depth: 3,
            order: 6,
            tol: 1e-6,
            seed: 0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Param("quadrature tolerance must be positive".into()));
        }
        if self.base_resolution < 1 || self.order < 1 {
            return Err(Error::Param("resolution and order must be at least 1".into()));
        }
        if !(self.x_halfwidth > 0.0 && self.omega_radius > 0.0) {
            return Err(Error::Param("truncation radii must be positive".into()));
        }
        Ok(())
    }

    /// Copy with both truncation radii doubled.
    pub fn doubled_box(&self) -> Self {
        QuadratureConfig { x_halfwidth: 2.0 * self.x_halfwidth, omega_radius: 2.0 * self.omega_radius, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub error_estimate: f64,
    pub truncation_estimate: f64,
}

/// Result of a complex-valued integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: Complex64,
    pub error_estimate: f64,
    pub truncation_estimate: f64,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..(k + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if k == 0 { 1.0 } else { p1 };
            dp = k as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite rule on `[-t, t]` split into `panels` equal panels.
#[derive(Clone, Debug)]
pub struct CompositeRule {
    pub t: f64,
    pub panels: usize,
    pub order: usize,
    /// `nodes[p * order + i]` lies in panel `p`.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(t: f64, panels: usize, order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let h = 2.0 * t / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = -t + (p as f64 + 0.5) * h;
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(mid + 0.5 * h * x);
                weights.push(0.5 * h * w);
            }
        }
        CompositeRule { t, panels, order, nodes, weights }
    }

    /// Panel is not in the outermost layer.
    fn inner_panel(&self, p: usize) -> bool {
        p > 0 && p + 1 < self.panels
    }
}

/// Order in which cells are visited.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellOrder {
    Natural,
    Shuffled(u64),
}

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
struct Acc {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

impl Acc {
    #[inline]
    fn add(&mut self, v: Complex64) {
        neumaier(&mut self.re, &mut self.re_c, v.re);
        neumaier(&mut self.im, &mut self.im_c, v.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

/// Sums over the whole box and over the box without its outermost layer of panels.
#[derive(Clone, Copy, Debug)]
pub struct TensorSums {
    pub total: Complex64,
    pub inner: Complex64,
    pub evaluations: usize,
}

/// Tensor product of `rule` in `d` dimensions applied to `f`.
pub fn tensor_sum<F>(d: usize, rule: &CompositeRule, order: CellOrder, mut f: F) -> TensorSums
where
    F: FnMut(&[f64]) -> Complex64,
{
    let panels = rule.panels;
    let k = rule.order;
    let n_cells = panels.checked_pow(d as u32).expect("cell count overflow");
    let mut cells: Vec<usize> = (0..n_cells).collect();
    if let CellOrder::Shuffled(seed) = order {
        cells.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut total = Acc::default();
    let mut inner = Acc::default();
    let mut point = vec![0.0; d];
    let mut cell_idx = vec![0usize; d];
    let mut node_idx = vec![0usize; d];
    let n_nodes = k.pow(d as u32);
    for &cell in &cells {
        let mut c = cell;
        let mut is_inner = true;
        for slot in cell_idx.iter_mut() {
            *slot = c % panels;
            c /= panels;
            is_inner &= rule.inner_panel(*slot);
        }
        let mut cell_acc = Acc::default();
        for node in 0..n_nodes {
            let mut m = node;
            let mut w = 1.0;
            for a in 0..d {
                node_idx[a] = m % k;
                m /= k;
                let idx = cell_idx[a] * k + node_idx[a];
                point[a] = rule.nodes[idx];
                w *= rule.weights[idx];
            }
            let v = f(&point);
            cell_acc.add(v * w);
        }
        let cv = cell_acc.value();
        total.add(cv);
        if is_inner {
            inner.add(cv);
        }
    }
    TensorSums { total: total.value(), inner: inner.value(), evaluations: n_cells * n_nodes }
}

/// Even panel count with width at most `1/resolution`.
pub fn panels_for(t: f64, resolution: usize) -> usize {
    let raw = (2.0 * t * resolution as f64).ceil() as usize;
    raw.div_ceil(2).max(2) * 2
}

/// Integrates `f` over `[-t, t]^d` where `t` starts at `t0`, doubling the box
/// while the outermost layer of panels carries more than `tol/2` of the mass
/// and doubling the resolution while fine and coarse rules disagree by more
/// than `tol`.
pub fn integrate<F>(d: usize, t0: f64, cfg: &QuadratureConfig, mut f: F) -> Result<Integral>
where
    F: FnMut(&[f64]) -> Complex64,
{
    cfg.validate()?;
    if d == 0 {
        return Ok(Integral { value: f(&[]), error_estimate: 0.0, truncation_estimate: 0.0 });
    }
    let mut t = t0;
    let mut res = cfg.base_resolution;
    let mut last = None;
    for _ in 0..=cfg.refinement_depth {
        let panels = panels_for(t, res);
        let fine = tensor_sum(d, &CompositeRule::new(t, panels, cfg.order), CellOrder::Natural, &mut f);
        let coarse = tensor_sum(d, &CompositeRule::new(t, panels / 2, cfg.order), CellOrder::Natural, &mut f);
        let scale = fine.total.norm();
        let trunc = (fine.total - fine.inner).norm();
        // The coarse rule has twice the panel width; its error dominates the
        // difference, so the difference is scaled towards the fine-rule error.
        let err = (fine.total - coarse.total).norm() / (1u64 << cfg.order.min(30)) as f64;
        let out = Integral { value: fine.total, error_estimate: err, truncation_estimate: trunc };
        let trunc_ok = trunc <= 0.5 * cfg.tol * scale || scale == 0.0;
        let err_ok = err <= cfg.tol * scale || scale == 0.0;
        if trunc_ok && err_ok {
            return Ok(out);
        }
        if !trunc_ok {
            t *= 2.0;
        }
        if !err_ok {
            res *= 2;
        }
        last = Some(out);
    }
    let out = last.expect("at least one pass");
    Err(Error::Convergence(format!(
        "d = {d}, box {t0}, value {:.6e}, error estimate {:.3e}, truncation estimate {:.3e}",
        out.value.norm(),
        out.error_estimate,
        out.truncation_estimate
    )))
}

/// Single pass of [`integrate`] with no refinement; used for inner integrals
/// of nested quadratures.
pub fn integrate_fixed<F>(d: usize, t: f64, resolution: usize, order: usize, mut f: F) -> Integral
where
    F: FnMut(&[f64]) -> Complex64,
{
    if d == 0 {
        return Integral { value: f(&[]), error_estimate: 0.0, truncation_estimate: 0.0 };
    }
    let panels = panels_for(t, resolution);
    let fine = tensor_sum(d, &CompositeRule::new(t, panels, order), CellOrder::Natural, &mut f);
    let coarse = tensor_sum(d, &CompositeRule::new(t, panels / 2, order), CellOrder::Natural, &mut f);
    Integral {
        value: fine.total,
        error_estimate: (fine.total - coarse.total).norm() / (1u64 << order.min(30)) as f64,
        truncation_estimate: (fine.total - fine.inner).norm(),
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(d: usize, t0: f64, cfg: &QuadratureConfig, mut f: F) -> Result<NormResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let r = integrate(d, t0, cfg, |u| Complex64::new(f(u), 0.0))?;
    Ok(NormResult { value: r.value.re, error_estimate: r.error_estimate, truncation_estimate: r.truncation_estimate })
}

/// Adaptive Gauss–Kronrod (7/15) integration of a scalar function on `[a, b]`.
pub fn adaptive_gk<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    const XK: [f64; 8] = [
        0.991_455_371_120_812_6,
        0.949_107_912_342_758_5,
        0.864_864_423_359_769_1,
        0.741_531_185_599_394_4,
        0.586_087_235_467_691_1,
        0.405_845_151_377_397_2,
        0.207_784_955_007_898_5,
        0.0,
    ];
    const WK: [f64; 8] = [
        0.022_935_322_010_529_22,
        0.063_092_092_629_978_55,
        0.104_790_010_322_250_2,
        0.140_653_259_715_525_9,
        0.169_004_726_639_267_9,
        0.190_350_578_064_785_4,
        0.204_432_940_075_298_9,
        0.209_482_141_084_728_0,
    ];
    const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    kron *= h;
    gauss *= h;
    if depth == 0 || (kron - gauss).abs() <= tol.max(1e-15 * kron.abs()) {
        return kron;
    }
    adaptive_gk(f, a, c, 0.5 * tol, depth - 1) + adaptive_gk(f, c, b, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for k in 1..12 {
            let (x, w) = gauss_legendre(k);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * k) {
                let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-13, "k={k} deg={deg}");
            }
        }
    }

    #[test]
    fn gaussian_in_three_dimensions() {
        let cfg = QuadratureConfig { tol: 1e-10, ..Default::default() };
        let r = integrate_real(3, 3.0, &cfg, |u| (-u.iter().map(|v| v * v).sum::<f64>()).exp()).unwrap();
        assert!((r.value - std::f64::consts::PI.powf(1.5)).abs() < 1e-10);
        assert!(r.truncation_estimate < 1e-6);
    }

    #[test]
    fn box_doubling_when_tail_is_heavy() {
        let cfg = QuadratureConfig { tol: 1e-8, refinement_depth: 6, ..Default::default() };
        let r = integrate_real(1, 1.0, &cfg, |u| 1.0 / (1.0 + u[0] * u[0]).powi(4)).unwrap();
        assert!((r.value - 5.0 * std::f64::consts::PI / 16.0).abs() < 1e-8);
    }

    #[test]
    fn non_convergence_is_reported() {
        let cfg = QuadratureConfig { refinement_depth: 1, ..Default::default() };
        let err = integrate_real(1, 1.0, &cfg, |u| 1.0 / (1.0 + u[0].abs())).unwrap_err();
        assert!(matches!(err, Error::Convergence(_)));
    }

    #[test]
    fn cell_order_does_not_matter() {
        let rule = CompositeRule::new(2.0, 8, 4);
        let f = |u: &[f64]| Complex64::new((u[0] * 3.0).sin() * (-u[1] * u[1]).exp(), u[0] * u[1]);
        let a = tensor_sum(2, &rule, CellOrder::Natural, f).total;
        let b = tensor_sum(2, &rule, CellOrder::Shuffled(7), f).total;
        assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn gauss_kronrod_matches_closed_form() {
        let v = adaptive_gk(&|x: f64| x.exp(), 0.0, 1.0, 1e-13, 30);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-13);
    }
}
