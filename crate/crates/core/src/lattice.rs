//! Constructive δ-lattices in `Ω` and in the tube `T_Ω`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use statrs::function::gamma::gamma;

use crate::cone::{invariant_distance, minor_log_ratio, transform_to, ConeTransform};
use crate::error::{Error, Result};
use crate::jordan::{AlgebraKind, Coeffs, Element};
use crate::tube::{quasi_distance, segment_length, TubePoint};

/// Relative slack used when comparing distances against the separation radius.
pub const SEPARATION_SLACK: f64 = 1e-9;

/// Format version of serialized lattices.
pub const LATTICE_FORMAT_VERSION: u32 = 1;

/// Default `R` when too few samples are available to estimate it.
pub const DEFAULT_R: f64 = 4.0;

/// Maximal δ-separated family in the `d_Ω`-ball of radius `radius` around `e`.
#[derive(Clone, Debug)]
pub struct ConeLattice {
    pub kind: AlgebraKind,
    pub delta: f64,
    pub radius: f64,
    pub points: Vec<Element>,
    /// `g_j = P(√y_j)`.
    pub transforms: Vec<ConeTransform>,
    /// `log y_j` in trace-orthonormal coordinates.
    log_points: Vec<Coeffs>,
}

impl ConeLattice {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn from_points(kind: AlgebraKind, delta: f64, radius: f64, points: Vec<Element>) -> Result<Self> {
        let transforms = points.iter().map(transform_to).collect::<Result<Vec<_>>>()?;
        let log_points = points.iter().map(|p| p.log().map(|l| l.to_ortho())).collect::<Result<Vec<_>>>()?;
        Ok(ConeLattice { kind, delta, radius, points, transforms, log_points })
    }

    /// Drops point `j`; used to build negative controls.
    pub fn without_point(&self, j: usize) -> Result<Self> {
        if j >= self.len() {
            return Err(Error::Index(format!("point {j} of {}", self.len())));
        }
        let mut points = self.points.clone();
        points.remove(j);
        Self::from_points(self.kind, self.delta, self.radius, points)
    }
}

/// Empirical constants attached to a tube lattice.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatticeConstants {
    pub n_measured: usize,
    pub eta1: f64,
    pub eta2: f64,
}

/// The lattice `z_{l,j} = x_{l,j} + i y_j`.
#[derive(Clone, Debug)]
pub struct TubeLattice {
    pub cone: ConeLattice,
    pub r: f64,
    pub xbox: f64,
    pub xgrids: Vec<Vec<Coeffs>>,
    pub constants: LatticeConstants,
}

impl TubeLattice {
    pub fn kind(&self) -> AlgebraKind {
        self.cone.kind
    }

    /// `δ/R`.
    pub fn x_separation(&self) -> f64 {
        self.cone.delta / self.r
    }

    pub fn len(&self) -> usize {
        self.xgrids.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(l, j)` pairs in storage order.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.xgrids.iter().enumerate().flat_map(|(j, g)| (0..g.len()).map(move |l| (l, j)))
    }

    pub fn point(&self, l: usize, j: usize) -> Result<TubePoint> {
        let x = self
            .xgrids
            .get(j)
            .and_then(|g| g.get(l))
            .ok_or_else(|| Error::Index(format!("lattice point ({l}, {j})")))?;
        Ok(TubePoint { x: x.clone(), y: self.cone.points[j].clone() })
    }

    /// All lattice points in storage order.
    pub fn points(&self) -> Vec<TubePoint> {
        self.indices().map(|(l, j)| self.point(l, j).expect("valid index")).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = LatticeFile {
            version: LATTICE_FORMAT_VERSION,
            kind: self.kind().name(),
            delta: self.cone.delta,
            r: self.r,
            d: self.cone.radius,
            xbox: self.xbox,
            points: self.cone.points.iter().map(|p| p.coeffs.to_vec()).collect(),
            xgrids: self.xgrids.iter().map(|g| g.iter().map(|x| x.to_vec()).collect()).collect(),
            constants: self.constants.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: LatticeFile = serde_json::from_str(text)?;
        if file.version != LATTICE_FORMAT_VERSION {
            return Err(Error::Serde(format!("unsupported lattice format version {}", file.version)));
        }
        let kind = AlgebraKind::parse(&file.kind)?;
        if file.xgrids.len() != file.points.len() {
            return Err(Error::Serde("xgrids and points differ in length".into()));
        }
        let points = file.points.iter().map(|p| Element::new(kind, p)).collect::<Result<Vec<_>>>()?;
        let cone = ConeLattice::from_points(kind, file.delta, file.d, points)?;
        let mut xgrids = Vec::with_capacity(file.xgrids.len());
        for g in &file.xgrids {
            let mut out = Vec::with_capacity(g.len());
            for x in g {
                if x.len() != kind.dim() {
                    return Err(Error::Dimension("lattice x-point of wrong length".into()));
                }
                out.push(Coeffs::from_slice(x));
            }
            xgrids.push(out);
        }
        Ok(TubeLattice { cone, r: file.r, xbox: file.xbox, xgrids, constants: file.constants })
    }
}

#[derive(Serialize, Deserialize)]
struct LatticeFile {
    version: u32,
    kind: String,
    delta: f64,
    #[serde(rename = "R")]
    r: f64,
    #[serde(rename = "D")]
    d: f64,
    xbox: f64,
    points: Vec<Vec<f64>>,
    xgrids: Vec<Vec<Vec<f64>>>,
    constants: LatticeConstants,
}

/// Outcome of [`verify_whitney`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WhitneyReport {
    pub delta: f64,
    pub r: f64,
    pub cone_points: usize,
    pub tube_points: usize,
    pub samples: usize,
    pub cone_pairs_checked: usize,
    pub separation_violations: usize,
    pub coverage_misses: usize,
    pub max_overlap: usize,
    pub x_pairs_checked: usize,
    pub x_separation_violations: usize,
    pub x_coverage_misses: usize,
    pub max_x_overlap: usize,
    /// Largest `Δ_k(y)/Δ_k(y_j)` (or its inverse) with `y ∈ B_δ(y_j)`.
    pub gamma: f64,
    /// `box_measure / Δ^{n/r}(y_j)`, the same for all boxes.
    pub measure_constant: f64,
    pub measure_spread: f64,
    /// Largest `Δ^{n/r}(v)/Δ^{n/r}(y_j)` (or its inverse) with `v ∈ B_δ(y_j)`.
    pub det_ratio: f64,
    /// Largest `ρ(z, z_{l,j})/δ` for `z ∈ I_{l,j} + iB_{δ/R}(y_j)`.
    pub inclusion_ratio: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub passed: bool,
}

type Key = SmallVec<[i64; 6]>;

/// Uniform hash grid over points of `R^d`.
struct HashGrid {
    side: f64,
    cells: HashMap<Key, Vec<usize>>,
}

impl HashGrid {
    fn new(side: f64) -> Self {
        HashGrid { side, cells: HashMap::new() }
    }

    fn key(&self, p: &[f64]) -> Key {
        p.iter().map(|v| (v / self.side).floor() as i64).collect()
    }

    fn insert(&mut self, p: &[f64], idx: usize) {
        self.cells.entry(self.key(p)).or_default().push(idx);
    }

    /// Calls `f` on every stored index in the cells adjacent to `p`; stops when `f` returns false.
    fn for_near(&self, p: &[f64], mut f: impl FnMut(usize) -> bool) {
        let base = self.key(p);
        let d = base.len();
        let mut off = vec![-1i64; d];
        loop {
            let key: Key = base.iter().zip(&off).map(|(b, o)| b + o).collect();
            if let Some(v) = self.cells.get(&key) {
                for &i in v {
                    if !f(i) {
                        return;
                    }
                }
            }
            let mut a = 0;
            loop {
                if a == d {
                    return;
                }
                off[a] += 1;
                if off[a] <= 1 {
                    break;
                }
                off[a] = -1;
                a += 1;
            }
        }
    }
}

/// `0, 1, −1, 2, −2, …` used to order candidate grids from the centre outwards.
fn zigzag(i: usize) -> i64 {
    let h = i.div_ceil(2) as i64;
    if i % 2 == 1 {
        h
    } else {
        -h
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Greedy maximal δ-separated set in `{y : d_Ω(y, e) ≤ radius}`.
///
/// Candidates are `exp(H)` for `H ∈ (δ/8)Z^n` in trace-orthonormal coordinates,
/// visited in lexicographic order of the index sequence `0, 1, −1, 2, −2, …` per
/// axis; grid points just outside the region are replaced by their radial
/// projection onto its boundary. Since `d_Ω(exp H, e) = |H|` the region test is exact, and since
/// `d_Ω(exp H, exp H') ≥ |H − H'|` only candidates with `|H − H'| < δ` can conflict.
pub fn build_cone_lattice(kind: AlgebraKind, delta: f64, radius: f64) -> Result<ConeLattice> {
    kind.validate()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Param(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Param(format!("radius must be positive, got {radius}")));
    }
    let n = kind.dim();
    let h = delta / 8.0;
    // Grid points up to one cell diagonal outside the ball are projected onto
    // its boundary so that points near the rim have candidates close by.
    let reach = radius + h * (n as f64).sqrt();
    let kmax = (reach / h).floor() as usize;
    let width = 2 * kmax + 1;
    let total = width.checked_pow(n as u32).ok_or_else(|| Error::Param("candidate grid too large".into()))?;
    let mut grid = HashGrid::new(delta);
    let mut logs: Vec<Coeffs> = Vec::new();
    let mut points: Vec<Element> = Vec::new();
    let thresh = delta * (1.0 - SEPARATION_SLACK);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut hv: Coeffs = idx.iter().map(|&i| h * zigzag(i) as f64).collect();
        let len = hv.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len > radius * (1.0 + 1e-12) && len <= reach {
            hv.iter_mut().for_each(|v| *v *= radius / len);
        }
        if len <= reach {
            let y = Element::from_ortho(kind, &hv).exp();
            let mut free = true;
            grid.for_near(&hv, |j| {
                if euclid(&logs[j], &hv) < thresh && invariant_distance(&points[j], &y).map_or(true, |d| d < thresh) {
                    free = false;
                }
                free
            });
            if free {
                grid.insert(&hv, points.len());
                logs.push(hv);
                points.push(y);
            }
        }
        for a in (0..n).rev() {
            idx[a] += 1;
            if idx[a] < width {
                break;
            }
            idx[a] = 0;
        }
    }
    if points.is_empty() {
        return Err(Error::Domain("empty lattice region".into()));
    }
    ConeLattice::from_points(kind, delta, radius, points)
}

/// Matrix of `g` from trace-orthonormal coordinates to coordinates.
fn ortho_matrix(g: &ConeTransform) -> DMatrix<f64> {
    let scales = g.kind.ortho_scales();
    let mut m = g.matrix.clone();
    for (c, s) in scales.iter().enumerate() {
        m.column_mut(c).scale_mut(1.0 / s);
    }
    m
}

/// Integer offsets `o` with `|o|² < 16` visited before the origin in
/// lexicographic order, nearest first.
fn earlier_offsets(n: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut o = vec![-3i64; n];
    loop {
        let norm2: i64 = o.iter().map(|v| v * v).sum();
        let first = o.iter().find(|v| **v != 0).copied().unwrap_or(0);
        if norm2 < 16 && first < 0 {
            out.push(o.clone());
        }
        let mut a = n;
        loop {
            if a == 0 {
                out.sort_by_key(|v| v.iter().map(|x| x * x).sum::<i64>());
                return out;
            }
            a -= 1;
            o[a] += 1;
            if o[a] <= 3 {
                break;
            }
            o[a] = -3;
        }
    }
}

/// Greedy `(δ/R)`-separated grid for one height `y_j`.
///
/// Candidates are `g_j(hk)`, `h = δ/(4R)`, `k ∈ Z^n` in trace-orthonormal
/// coordinates, lying in the box enlarged by one separation radius, visited in
/// lexicographic order of `k`.
fn build_xgrid(g: &ConeTransform, sep: f64, xbox: f64, offsets: &[Vec<i64>]) -> Result<Vec<Coeffs>> {
    let n = g.kind.dim();
    let m = ortho_matrix(g);
    let minv = m.clone().try_inverse().ok_or_else(|| Error::Domain("singular cone transform".into()))?;
    let h = sep / 4.0;
    let half: Vec<f64> = (0..n).map(|i| xbox + sep * m.row(i).norm()).collect();
    let kmax: Vec<i64> = (0..n)
        .map(|i| ((0..n).map(|l| minv[(i, l)].abs() * half[l]).sum::<f64>() / h).ceil() as i64)
        .collect();
    let dims: Vec<usize> = kmax.iter().map(|k| (2 * k + 1) as usize).collect();
    let total = dims.iter().try_fold(1usize, |acc, d| acc.checked_mul(*d)).ok_or_else(|| Error::Param("x-grid too large".into()))?;
    if total > 1usize << 34 {
        return Err(Error::Param(format!("x-grid candidate count {total} is too large")));
    }
    let mut strides = vec![1usize; n];
    for a in (0..n - 1).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let mut taken = vec![0u64; total.div_ceil(64)];
    let mut out = Vec::new();
    let last = n - 1;
    let mut k = vec![0i64; n];
    for a in 0..last {
        k[a] = -kmax[a];
    }
    let mut prefix = vec![0.0; n];
    loop {
        // Range of the last index keeping every coordinate inside the enlarged box.
        for (i, p) in prefix.iter_mut().enumerate() {
            *p = h * (0..last).map(|a| m[(i, a)] * k[a] as f64).sum::<f64>();
        }
        let (mut lo, mut hi) = (-kmax[last] as f64, kmax[last] as f64);
        for i in 0..n {
            let c = h * m[(i, last)];
            if c.abs() < 1e-300 {
                if prefix[i].abs() > half[i] {
                    hi = lo - 1.0;
                }
                continue;
            }
            let (a, b) = ((-half[i] - prefix[i]) / c, (half[i] - prefix[i]) / c);
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
        let base: usize = (0..last).map(|a| (k[a] + kmax[a]) as usize * strides[a]).sum();
        let mut kl = lo.ceil() as i64;
        while (kl as f64) <= hi {
            k[last] = kl;
            let lin = base + (kl + kmax[last]) as usize;
            let mut free = true;
            for o in offsets {
                let mut inside = true;
                let mut j = lin as i64;
                for a in 0..n {
                    let c = k[a] + o[a];
                    if c < -kmax[a] || c > kmax[a] {
                        inside = false;
                        break;
                    }
                    j += o[a] * strides[a] as i64;
                }
                if inside && taken[j as usize / 64] >> (j as usize % 64) & 1 == 1 {
                    free = false;
                    break;
                }
            }
            if free {
                taken[lin / 64] |= 1 << (lin % 64);
                out.push((0..n).map(|i| prefix[i] + h * m[(i, last)] * kl as f64).collect());
            }
            kl += 1;
        }
        let mut a = last;
        loop {
            if a == 0 {
                return Ok(out);
            }
            a -= 1;
            k[a] += 1;
            if k[a] <= kmax[a] {
                break;
            }
            k[a] = -kmax[a];
        }
    }
}

/// Tube lattice over `cone` with x-separation `δ/R` in `g_j`-coordinates,
/// covering the box `[−xbox, xbox]^n`.
pub fn build_tube_lattice(cone: ConeLattice, r: f64, xbox: f64) -> Result<TubeLattice> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::Param(format!("R must exceed 1, got {r}")));
    }
    if !(xbox > 0.0) || !xbox.is_finite() {
        return Err(Error::Param(format!("xbox must be positive, got {xbox}")));
    }
    let sep = cone.delta / r;
    let offsets = earlier_offsets(cone.kind.dim());
    let xgrids = cone.transforms.iter().map(|g| build_xgrid(g, sep, xbox, &offsets)).collect::<Result<Vec<_>>>()?;
    Ok(TubeLattice { cone, r, xbox, xgrids, constants: LatticeConstants::default() })
}

/// Volume of the Euclidean unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    std::f64::consts::PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0 + 1.0)
}

/// Trace-Euclidean measure of `I_{l,j} = {x : ‖g_j^{-1}(x − x_{l,j})‖ < δ/R}`,
/// i.e. `ω_n (δ/R)^n Δ^{n/r}(y_j)`.
pub fn box_measure(tl: &TubeLattice, l: usize, j: usize) -> Result<f64> {
    if j >= tl.xgrids.len() || l >= tl.xgrids[j].len() {
        return Err(Error::Index(format!("lattice point ({l}, {j})")));
    }
    let n = tl.kind().dim();
    Ok(unit_ball_volume(n) * tl.x_separation().powi(n as i32) * tl.cone.transforms[j].det)
}

/// Uniform sample in the Euclidean ball of radius `rad` in `R^n`.
fn ball_sample(rng: &mut ChaCha8Rng, n: usize, rad: f64) -> Coeffs {
    loop {
        let p: Coeffs = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: f64 = p.iter().map(|v| v * v).sum();
        if r2 <= 1.0 {
            return p.iter().map(|v| v * rad).collect();
        }
    }
}

/// Smallest `R = 2^k`, `k ≥ 1`, with `ρ/R ≤ L ≤ Rρ` on `samples` random pairs in
/// a unit neighbourhood of `ie`, where `L` is the Bergman length of the
/// straight segment and `ρ` the quasi-distance. Returns [`DEFAULT_R`] for fewer
/// than 8 samples.
pub fn estimate_r(kind: AlgebraKind, samples: usize, seed: u64) -> Result<f64> {
    kind.validate()?;
    if samples < 8 {
        return Ok(DEFAULT_R);
    }
    let n = kind.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Result<TubePoint> {
        let y = Element::from_ortho(kind, &ball_sample(rng, n, 0.5)).exp();
        let x = Element::from_ortho(kind, &ball_sample(rng, n, 0.5));
        TubePoint::new(&x.coeffs, y)
    };
    let mut worst: f64 = 1.0;
    for _ in 0..samples {
        let a = draw(&mut rng)?;
        let b = draw(&mut rng)?;
        let rho = quasi_distance(&a, &b)?;
        if rho <= 1e-12 {
            continue;
        }
        let len = segment_length(&a, &b)?;
        worst = worst.max(len / rho).max(rho / len);
    }
    let mut r = 2.0;
    while r < worst {
        r *= 2.0;
    }
    Ok(r)
}

/// Checks separation, covering and overlap of `tl` and measures the
/// constants attached to it.
pub fn verify_whitney(tl: &TubeLattice, samples: usize, seed: u64) -> Result<WhitneyReport> {
    let cone = &tl.cone;
    let kind = cone.kind;
    let n = kind.dim();
    let nr = kind.n_over_r();
    let delta = cone.delta;
    let thresh = delta * (1.0 - SEPARATION_SLACK);
    let mut rep = WhitneyReport {
        delta,
        r: tl.r,
        cone_points: cone.len(),
        tube_points: tl.len(),
        samples,
        gamma: 1.0,
        det_ratio: 1.0,
        ..Default::default()
    };

    // Cone separation: Thompson-type lower bound |log λ_max − log λ_max'| ≤ d_Ω as a filter.
    let spec: Vec<(f64, f64)> = cone
        .points
        .iter()
        .map(|p| {
            let ev = p.eigenvalues();
            (ev[0].ln(), ev[ev.len() - 1].ln())
        })
        .collect();
    let mut sgrid = HashGrid::new(delta);
    for (j, (a, b)) in spec.iter().enumerate() {
        sgrid.insert(&[*a, *b], j);
    }
    for (i, (a, b)) in spec.iter().enumerate() {
        sgrid.for_near(&[*a, *b], |j| {
            if j > i {
                rep.cone_pairs_checked += 1;
                if invariant_distance(&cone.points[i], &cone.points[j]).map_or(true, |d| d < thresh) {
                    rep.separation_violations += 1;
                }
            }
            true
        });
    }

    // Cone coverage, overlap and minor comparison.
    let mut lgrid = HashGrid::new(delta);
    for (j, l) in cone.log_points.iter().enumerate() {
        lgrid.insert(l, j);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let hv = ball_sample(&mut rng, n, cone.radius);
        let y = Element::from_ortho(kind, &hv).exp();
        let mut count = 0;
        lgrid.for_near(&hv, |j| {
            if euclid(&cone.log_points[j], &hv) < delta {
                if let Ok(d) = invariant_distance(&cone.points[j], &y) {
                    if d < delta {
                        count += 1;
                        if let Ok(m) = minor_log_ratio(&y, &cone.points[j]) {
                            rep.gamma = rep.gamma.max(m.exp());
                        }
                        let dr = ((y.det() / cone.points[j].det()).ln() * nr).abs().exp();
                        rep.det_ratio = rep.det_ratio.max(dr);
                    }
                }
            }
            true
        });
        if count == 0 {
            rep.coverage_misses += 1;
        }
        rep.max_overlap = rep.max_overlap.max(count);
    }

    // x-grids: separation, coverage and overlap in g_j-coordinates.
    let sep = tl.x_separation();
    let sthresh = sep * (1.0 - SEPARATION_SLACK);
    let mut local: Vec<Vec<Coeffs>> = Vec::with_capacity(cone.len());
    let mut grids: Vec<HashGrid> = Vec::with_capacity(cone.len());
    for (j, g) in cone.transforms.iter().enumerate() {
        let minv = ortho_matrix(g).try_inverse().ok_or_else(|| Error::Domain("singular cone transform".into()))?;
        let pts: Vec<Coeffs> = tl.xgrids[j]
            .iter()
            .map(|x| (&minv * DVector::from_column_slice(x)).iter().copied().collect())
            .collect();
        let mut grid = HashGrid::new(sep);
        for (l, p) in pts.iter().enumerate() {
            grid.insert(p, l);
        }
        for (l, p) in pts.iter().enumerate() {
            grid.for_near(p, |k| {
                if k > l {
                    rep.x_pairs_checked += 1;
                    if euclid(&pts[k], p) < sthresh {
                        rep.x_separation_violations += 1;
                    }
                }
                true
            });
        }
        local.push(pts);
        grids.push(grid);
    }
    let minvs: Vec<DMatrix<f64>> = cone
        .transforms
        .iter()
        .map(|g| ortho_matrix(g).try_inverse().expect("checked above"))
        .collect();
    for _ in 0..samples {
        let j = rng.gen_range(0..cone.len());
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-tl.xbox..tl.xbox)).collect();
        let t: Coeffs = (&minvs[j] * DVector::from_column_slice(&x)).iter().copied().collect();
        let mut count = 0;
        grids[j].for_near(&t, |l| {
            if euclid(&local[j][l], &t) < sep {
                count += 1;
            }
            true
        });
        if count == 0 {
            rep.x_coverage_misses += 1;
        }
        rep.max_x_overlap = rep.max_x_overlap.max(count);
    }

    // Box measures.
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (l, j) in tl.indices() {
        let c = box_measure(tl, l, j)? / cone.points[j].det().powf(nr);
        lo = lo.min(c);
        hi = hi.max(c);
    }
    if tl.is_empty() {
        lo = unit_ball_volume(n) * sep.powi(n as i32);
        hi = lo;
    }
    rep.measure_constant = lo;
    rep.measure_spread = if lo > 0.0 { hi / lo - 1.0 } else { 0.0 };

    // Inclusion of I_{l,j} + iB_{δ/R}(y_j) in a quasi-ball around z_{l,j}.
    if !tl.is_empty() {
        let idx: Vec<(usize, usize)> = tl.indices().collect();
        for _ in 0..samples.min(2000) {
            let (l, j) = idx[rng.gen_range(0..idx.len())];
            let z0 = tl.point(l, j)?;
            let g = &cone.transforms[j];
            let tau = Element::from_ortho(kind, &ball_sample(&mut rng, n, sep));
            let x = z0.translate(&g.apply(&tau).coeffs).x;
            let y = g.apply(&Element::from_ortho(kind, &ball_sample(&mut rng, n, sep)).exp());
            let z = TubePoint::new(&x, y)?;
            rep.inclusion_ratio = rep.inclusion_ratio.max(quasi_distance(&z, &z0)? / delta);
        }
    }

    let (eta1, eta2) = estimate_etas(kind, samples.min(4000), seed ^ 0x9e37_79b9)?;
    rep.eta1 = eta1;
    rep.eta2 = eta2;
    rep.passed = rep.separation_violations == 0
        && rep.coverage_misses == 0
        && rep.x_separation_violations == 0
        && rep.x_coverage_misses == 0;
    Ok(rep)
}

/// Sampled bounds `η₂ ≤ |ξ − e|/d_Ω(ξ, e) ≤ η₁` over `d_Ω(ξ, e) ≤ 1`.
pub fn estimate_etas(kind: AlgebraKind, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let n = kind.dim();
    let e = kind.identity();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut hi, mut lo): (f64, f64) = (0.0, f64::INFINITY);
    for _ in 0..samples.max(1) {
        let hv = ball_sample(&mut rng, n, 1.0);
        let d = hv.iter().map(|v| v * v).sum::<f64>().sqrt();
        if d < 1e-9 {
            continue;
        }
        let xi = Element::from_ortho(kind, &hv).exp();
        let ratio = xi.sub(&e)?.norm() / d;
        hi = hi.max(ratio);
        lo = lo.min(ratio);
    }
    Ok((hi, lo))
}

/// Builds a tube lattice and fills its measured constants.
pub fn build_verified(kind: AlgebraKind, delta: f64, radius: f64, r: f64, xbox: f64, samples: usize, seed: u64) -> Result<(TubeLattice, WhitneyReport)> {
    let cone = build_cone_lattice(kind, delta, radius)?;
    let mut tl = build_tube_lattice(cone, r, xbox)?;
    let rep = verify_whitney(&tl, samples, seed)?;
    tl.constants = LatticeConstants { n_measured: rep.max_overlap, eta1: rep.eta1, eta2: rep.eta2 };
    Ok((tl, rep))
}
