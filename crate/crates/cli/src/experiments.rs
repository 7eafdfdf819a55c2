//! Deterministic test functions and point sets shared by the subcommands.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symtube::atoms::{CoeffArray, SamplingRatio};
use symtube::cone::{invariant_distance, SpectralParam};
use symtube::jordan::{AlgebraKind, Element};
use symtube::lattice::TubeLattice;
use symtube::quad::QuadratureConfig;
use symtube::spaces::{hilbert_norm, mixed_norm, AtomCombo};
use symtube::tube::{KernelSpec, TubePoint};
use symtube::Result;

fn cone_point(kind: AlgebraKind, rng: &mut ChaCha8Rng, spread: f64) -> Element {
    let h: Vec<f64> = (0..kind.dim()).map(|_| rng.gen_range(-spread..spread)).collect();
    Element::from_ortho(kind, &h).exp()
}

fn unit_phase(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Complex64 {
    Complex64::from_polar(rng.gen_range(lo..hi), rng.gen_range(0.0..2.0 * PI))
}

/// `count` combinations of one or two atoms centred near `ie`.
pub fn atom_family(ks: &KernelSpec, count: usize, seed: u64) -> Result<Vec<AtomCombo>> {
    let kind = ks.s.kind;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|m| {
            let atoms = 1 + m % 2;
            let mut centers = Vec::with_capacity(atoms);
            let mut coeffs = Vec::with_capacity(atoms);
            for _ in 0..atoms {
                let x: Vec<f64> = (0..kind.dim()).map(|_| rng.gen_range(-0.2..0.2)).collect();
                centers.push(TubePoint::new(&x, cone_point(kind, &mut rng, 0.15))?);
                coeffs.push(unit_phase(&mut rng, 0.5, 1.5));
            }
            AtomCombo::new(ks.clone(), centers, coeffs)
        })
        .collect()
}

/// Random points with `|x_i| ≤ 0.5` and `y = exp(h)`, `|h_i| ≤ 0.3`.
pub fn validation_points(kind: AlgebraKind, count: usize, seed: u64) -> Result<Vec<TubePoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: Vec<f64> = (0..kind.dim()).map(|_| rng.gen_range(-0.5..0.5)).collect();
            TubePoint::new(&x, cone_point(kind, &mut rng, 0.3))
        })
        .collect()
}

/// Lattice points together with slightly displaced copies.
pub fn collocation_points(tl: &TubeLattice) -> Result<Vec<TubePoint>> {
    let mut out = Vec::with_capacity(2 * tl.len());
    for z in tl.points() {
        let x: Vec<f64> = z.x.iter().map(|v| v + 0.013).collect();
        let shifted = TubePoint::new(&x, z.y.scale(1.011))?;
        out.push(z);
        out.push(shifted);
    }
    Ok(out)
}

/// Random coefficients on the lattice points with `|x|_∞ < 0.3` and `d(y, e) < 0.3`.
pub fn manufactured_coefficients(tl: &TubeLattice, seed: u64) -> Result<CoeffArray> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = tl.kind().identity();
    let mut lam = CoeffArray::zeros(tl);
    for j in 0..tl.cone.len() {
        if invariant_distance(&tl.cone.points[j], &e)? >= 0.3 {
            continue;
        }
        for (l, x) in tl.xgrids[j].iter().enumerate() {
            if x.iter().all(|v| v.abs() < 0.3) {
                lam.set(l, j, unit_phase(&mut rng, 0.5, 1.5))?;
            }
        }
    }
    Ok(lam)
}

/// A fixed point off every lattice built here.
pub fn off_lattice_point(kind: AlgebraKind) -> Result<TubePoint> {
    let x: Vec<f64> = (0..kind.dim()).map(|i| 0.123 - 0.031 * i as f64).collect();
    let h: Vec<f64> = (0..kind.dim()).map(|i| 0.157 - 0.043 * i as f64).collect();
    TubePoint::new(&x, Element::from_ortho(kind, &h).exp())
}

fn scalar(s: &SpectralParam) -> bool {
    s.s.iter().all(|v| *v == s.s[0])
}

/// `‖F‖_{A^{p,q}_s}`: the closed form when `p = q = 2` with scalar parameters,
/// quadrature otherwise.
pub fn function_norm(f: &AtomCombo, p: f64, q: f64, s: &SpectralParam, cfg: &QuadratureConfig) -> Result<f64> {
    if p == 2.0 && q == 2.0 && scalar(s) && scalar(&f.ks.s) {
        hilbert_norm(f, s)
    } else {
        Ok(mixed_norm(f, p, q, s, cfg)?.value)
    }
}

/// Smallest and largest normalized ratio.
pub fn band(ratios: &[SamplingRatio]) -> (f64, f64) {
    ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.normalized), hi.max(r.normalized)))
}
