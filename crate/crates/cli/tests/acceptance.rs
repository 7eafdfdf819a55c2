use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symtube::atoms::{reconstruct_lsq, reconstruct_neumann, relative_sup_residual, synthesis, FrameSpec, WeightMode};
use symtube::cone::{contains, gamma_omega, integrate_omega, laplace_power_closed, laplace_power_quadrature, SpectralParam};
use symtube::interp::{
    interpolate, positive_window, projector_window, q_s, q_s_p, p_s, reiteration_solve, reiteration_theta, wolff, Ext, MixedParams,
    WindowCase,
};
use symtube::jordan::{AlgebraKind, Element};
use symtube::lattice::{build_cone_lattice, build_tube_lattice, build_verified, estimate_r, TubeLattice};
use symtube::quad::{adaptive_gk, tensor_sum, CellOrder, CompositeRule, QuadratureConfig};
use symtube::spaces::{atom_parameter, hilbert_pairing, AtomCombo};
use symtube::tube::{bergman_metric, calibrate_kernel_constant, kernel_diagonal, KernelSpec, TubePoint};
use symtube_cli::commands::sampling_rows;
use symtube_cli::config::layered;
use symtube_cli::experiments::{collocation_points, manufactured_coefficients, off_lattice_point, validation_points};
use symtube_cli::RunConfig;

type Outcome = Result<String, String>;

const L3: AlgebraKind = AlgebraKind::Lorentz(3);
const S2: AlgebraKind = AlgebraKind::SymMatrices(2);
const KINDS: [AlgebraKind; 5] = [AlgebraKind::Rank1, L3, AlgebraKind::Lorentz(5), S2, AlgebraKind::SymMatrices(3)];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, t: Instant) -> Result<(), String> {
    if t.elapsed() > limit {
        Err(format!("took {:.1?}, limit {limit:?}", t.elapsed()))
    } else {
        Ok(())
    }
}

fn cone_point(kind: AlgebraKind, h: &[f64]) -> Element {
    Element::from_ortho(kind, h).exp()
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..r)).collect()
}

fn laplace_identity() -> Outcome {
    let t = Instant::now();
    let cfg = QuadratureConfig { tol: 1e-8, ..Default::default() };
    let mut worst: f64 = 0.0;
    for kind in [L3, S2] {
        let nr = kind.n_over_r();
        let params = [
            SpectralParam::scalar(kind, nr + 0.5),
            SpectralParam::scalar(kind, nr + 1.75),
            SpectralParam::new(kind, &[nr + 0.25, nr + 1.5]).map_err(|e| e.to_string())?,
        ];
        let mut ys = vec![kind.identity()];
        let mut y1 = kind.identity().scale(1.4);
        y1.coeffs[1] += 0.3;
        ys.push(y1);
        ys.push(cone_point(kind, &[0.2, -0.25, 0.15]));
        for s in &params {
            for y in &ys {
                let closed = laplace_power_closed(s, y).map_err(|e| e.to_string())?;
                let quad = laplace_power_quadrature(s, y, &cfg).map_err(|e| e.to_string())?.value;
                worst = worst.max(rel(quad, closed));
            }
        }
    }
    within(Duration::from_secs(60), t)?;
    check(worst < 1e-6, format!("18 cases, max rel err {worst:.2e}"))
}

fn gamma_product() -> Outcome {
    let cfg = QuadratureConfig { tol: 1e-8, ..Default::default() };
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for kind in [AlgebraKind::Rank1, L3, S2] {
        let nr = kind.n_over_r();
        let r = kind.rank();
        for k in 0..5 {
            let base = nr - 0.4 + 0.55 * k as f64;
            let s: Vec<f64> = (0..r).map(|i| base + 0.3 * i as f64).collect();
            let s = SpectralParam::new(kind, &s).map_err(|e| e.to_string())?;
            let want = gamma_omega(&s).map_err(|e| e.to_string())?;
            let got = integrate_omega(kind, &s.shift(-nr), &cfg, |y| (-y.trace()).exp()).map_err(|e| e.to_string())?.value;
            worst = worst.max(rel(got, want));
            cases += 1;
        }
    }
    check(worst < 1e-6, format!("{cases} cases, max rel err {worst:.2e}"))
}

fn jordan_suite() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases = 1000;
    let mut worst = [0.0f64; 4];
    let mut sylvester_mismatch = 0;
    let mut sylvester_checked = 0;
    for i in 0..cases {
        let kind = KINDS[i % KINDS.len()];
        let n = kind.dim();
        let r = kind.rank();
        let x = Element::new(kind, &uniform(&mut rng, n, 2.0)).unwrap();
        let y = Element::new(kind, &uniform(&mut rng, n, 2.0)).unwrap();
        let x2 = x.square();
        let lhs = x2.product(&x.product(&y).unwrap()).unwrap();
        let rhs = x.product(&x2.product(&y).unwrap()).unwrap();
        let scale = lhs.norm().max(rhs.norm()).max(x.norm().powi(3) * y.norm());
        worst[0] = worst[0].max(lhs.sub(&rhs).unwrap().norm() / scale);

        let a = cone_point(kind, &uniform(&mut rng, n, 0.5));
        let u = cone_point(kind, &uniform(&mut rng, n, 1.0));
        worst[1] = worst[1].max(rel(a.quadratic_rep(&u).unwrap().det(), a.det().powi(2) * u.det()));

        let d = (0..r).map(|_| rng.gen_range(0.3..3.0)).collect::<Vec<_>>();
        let da = kind.frame_diagonal(&d).unwrap();
        let got = da.quadratic_rep(&u).unwrap().minors();
        let m = u.minors();
        let mut f = 1.0;
        for k in 0..r {
            f *= d[k] * d[k];
            worst[2] = worst[2].max(rel(got[k], f * m[k]));
        }

        let sv: Vec<f64> = (0..r).map(|_| rng.gen_range(-2.0..3.0)).collect();
        let s = SpectralParam::new(kind, &sv).unwrap();
        let lhs = u.inverse().unwrap().power_delta(&s).unwrap();
        let rhs = 1.0 / u.rotated_power_delta(&s.reversed()).unwrap();
        worst[3] = worst[3].max(rel(lhs, rhs));

        let ev = x.eigenvalues();
        if ev.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min) > 1e-8 {
            sylvester_checked += 1;
            let by_minors = x.minors().iter().all(|v| *v > 0.0);
            let by_eigen = ev.iter().all(|e| *e > 0.0);
            if by_minors != by_eigen || contains(&x) != by_eigen {
                sylvester_mismatch += 1;
            }
        }
    }
    within(Duration::from_secs(10), t)?;
    let max = worst.iter().copied().fold(0.0, f64::max);
    check(
        max < 1e-10 && sylvester_mismatch == 0,
        format!(
            "{cases} cases: jordan {:.1e}, det P(a) {:.1e}, minors {:.1e}, rotated inverse {:.1e}, sylvester {sylvester_mismatch}/{sylvester_checked} mismatches",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn whitney_suite() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, radius, xbox) in [(AlgebraKind::Rank1, 1.5, 1.5), (L3, 1.6, 0.05), (S2, 1.6, 0.05)] {
        let r = estimate_r(kind, 2000, 0).map_err(|e| e.to_string())?;
        let mut overlaps = Vec::new();
        for delta in [0.8, 0.4, 0.2] {
            let (_, rep) = build_verified(kind, delta, radius, r, xbox, 10_000, 1).map_err(|e| e.to_string())?;
            let misses = rep.coverage_misses + rep.x_coverage_misses + rep.separation_violations + rep.x_separation_violations;
            ok &= rep.passed && misses == 0 && rep.measure_spread <= 1e-12;
            overlaps.push(rep.max_overlap);
            parts.push(format!("{}@{delta}: {} pts, misses {misses}, spread {:.0e}", kind.name(), rep.tube_points, rep.measure_spread));
        }
        let spread = overlaps.iter().max().unwrap() - overlaps.iter().min().unwrap();
        ok &= spread <= 1;
        parts.push(format!("{} max_overlap {overlaps:?}", kind.name()));
    }
    within(Duration::from_secs(120), t)?;
    check(ok, parts.join("; "))
}

fn calibration() -> Outcome {
    let cfg = QuadratureConfig { tol: 1e-6, ..Default::default() };
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in [AlgebraKind::Rank1, L3, S2] {
        let nr = kind.n_over_r();
        let n = kind.dim();
        let s = SpectralParam::scalar(kind, nr + 0.5);
        let ks = calibrate_kernel_constant(&s, &cfg).map_err(|e| e.to_string())?;
        let doubled = calibrate_kernel_constant(&s, &cfg.doubled_box()).map_err(|e| e.to_string())?;
        let stability = rel(ks.d_s, doubled.d_s);
        let mut y = kind.identity().scale(1.2);
        if n > 1 {
            y.coeffs[1] += 0.1;
        }
        let x: Vec<f64> = (0..n).map(|i| 0.1 * i as f64).collect();
        let f_ks = KernelSpec::with_constant(atom_parameter(&s), 1.0).map_err(|e| e.to_string())?;
        let f = AtomCombo::single(f_ks, TubePoint::new(&x, y).unwrap(), Complex64::new(1.0, 0.0)).map_err(|e| e.to_string())?;
        let mut repro: f64 = 0.0;
        for k in 0..3 {
            let h: Vec<f64> = (0..n).map(|i| 0.2 * (k as f64 - 1.0) + 0.05 * i as f64).collect();
            let z = TubePoint::new(&vec![0.3 - 0.2 * k as f64; n], cone_point(kind, &h)).unwrap();
            let b = AtomCombo::single(ks.clone(), z.clone(), Complex64::new(1.0, 0.0)).map_err(|e| e.to_string())?;
            let got = hilbert_pairing(&f, &b, &s, &cfg).map_err(|e| e.to_string())?.value;
            let want = f.eval(&z).map_err(|e| e.to_string())?;
            repro = repro.max((got - want).norm() / want.norm());
        }
        ok &= stability < 1e-3 && repro < 1e-3;
        parts.push(format!("{}: box doubling {stability:.1e}, reproducing {repro:.1e}", kind.name()));
        if kind == AlgebraKind::Rank1 {
            let sv = s.s[0];
            let exact = KernelSpec::rank1(sv).map_err(|e| e.to_string())?.d_s;
            // B(ie, ie) = ∫ |B(z, ie)|² v^{s-1}: d 2^{-(s+1)} = d² ∫∫ |x + i(v + 1)|^{-2(s+1)} v^{s-1}
            let inner = |v: f64| {
                let g = |t: f64| {
                    let u = t / (1.0 - t * t);
                    (u * u + (v + 1.0) * (v + 1.0)).powf(-(sv + 1.0)) * (1.0 + t * t) / (1.0 - t * t).powi(2)
                };
                adaptive_gk(&g, -1.0, 1.0, 1e-13, 40)
            };
            let outer = |t: f64| {
                let v = t / (1.0 - t);
                inner(v) * v.powf(sv - 1.0) / (1.0 - t).powi(2)
            };
            let oracle = 2f64.powf(-(sv + 1.0)) / adaptive_gk(&outer, 0.0, 1.0, 1e-12, 40);
            let e1 = rel(ks.d_s, oracle);
            ok &= e1 < 1e-4 && rel(exact, oracle) < 1e-4;
            parts.push(format!("rank1 d_s vs 1-D oracle {e1:.1e}"));
        }
    }
    check(ok, parts.join("; "))
}

fn run_config(pairs: &[(&str, &str)]) -> Result<RunConfig, String> {
    let flags: BTreeMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    RunConfig::from_map(&layered(BTreeMap::new(), flags)).map_err(|e| e.to_string())
}

fn sampling() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for (cone, s, radius, xbox) in [("rank1", "1.5", "1.5", "1.5"), ("lorentz3", "2", "0.8", "0.3")] {
        let cfg = run_config(&[
            ("cone", cone),
            ("s", s),
            ("delta", "0.4,0.2"),
            ("radius", radius),
            ("xbox", xbox),
            ("family", "10"),
            ("seed", "7"),
        ])?;
        let rows = sampling_rows(&cfg).map_err(|e| e.to_string())?;
        let at = |d: f64| rows.iter().find(|r| r.delta == d).map(|r| (r.band_min, r.band_max)).unwrap();
        let (lo4, hi4) = at(0.4);
        let (lo2, hi2) = at(0.2);
        let ratio = hi4 / lo4;
        let nested = lo2 >= 0.5 * lo4 && hi2 <= 2.0 * hi4;
        ok &= ratio <= 50.0 && nested;
        parts.push(format!("{cone}: band@0.4 [{lo4:.3e}, {hi4:.3e}] ratio {ratio:.2}, band@0.2 [{lo2:.3e}, {hi2:.3e}]"));
    }
    within(Duration::from_secs(300), t)?;
    check(ok, parts.join("; "))
}

fn rank1_lattice(delta: f64, radius: f64, xbox: f64, r: f64) -> TubeLattice {
    build_tube_lattice(build_cone_lattice(AlgebraKind::Rank1, delta, radius).unwrap(), r, xbox).unwrap()
}

fn reconstruction() -> Outcome {
    let t = Instant::now();
    let kind = AlgebraKind::Rank1;
    let spec = FrameSpec::new(KernelSpec::rank1(2.0).unwrap(), WeightMode::StatementWeight, 2.0, 2.0).map_err(|e| e.to_string())?;
    let r = estimate_r(kind, 2000, 0).map_err(|e| e.to_string())?;
    let validation = validation_points(kind, 40, 1).map_err(|e| e.to_string())?;
    let err = |e: symtube::Error| e.to_string();

    let small = rank1_lattice(0.2, 1.5, 1.5, r);
    let f = synthesis(&manufactured_coefficients(&small, 0).map_err(err)?, &small, &spec).map_err(err)?;
    let lsq = reconstruct_lsq(&f, &small, &spec, &collocation_points(&small).map_err(err)?).map_err(err)?;
    let g = synthesis(&lsq.lambda, &small, &spec).map_err(err)?;
    let lsq_val = relative_sup_residual(&f, &g, &validation).map_err(err)?;

    let wide = rank1_lattice(0.2, 2.0, 2.5, r);
    let f = synthesis(&manufactured_coefficients(&wide, 0).map_err(err)?, &wide, &spec).map_err(err)?;
    let neu = reconstruct_neumann(&f, &wide, &spec, 20, &validation, None).map_err(err)?;
    let neu_last = *neu.residuals.last().unwrap();

    let atom = AtomCombo::single(spec.ks.clone(), off_lattice_point(kind).map_err(err)?, Complex64::new(1.0, 0.0)).map_err(err)?;
    let mut off = Vec::new();
    for delta in [0.8, 0.4, 0.2] {
        let tl = rank1_lattice(delta, 1.5, 1.5, r);
        let res = reconstruct_lsq(&atom, &tl, &spec, &collocation_points(&tl).map_err(err)?).map_err(err)?;
        let g = synthesis(&res.lambda, &tl, &spec).map_err(err)?;
        off.push(relative_sup_residual(&atom, &g, &validation).map_err(err)?);
    }
    let monotone = off.windows(2).all(|w| w[1] < w[0]);
    within(Duration::from_secs(300), t)?;
    check(
        lsq.residual < 1e-6 && lsq_val < 1e-6 && neu_last < 1e-4 && monotone,
        format!(
            "lsq residual {:.1e} (validation {lsq_val:.1e}, {} pts); neumann after 20: {neu_last:.1e} ({} pts); off-lattice {:?}",
            lsq.residual,
            small.len(),
            wide.len(),
            off.iter().map(|v| format!("{v:.1e}")).collect::<Vec<_>>()
        ),
    )
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn fin(n: i64, d: i64) -> Ext<BigRational> {
    Ext::Fin(q(n, d))
}

fn parameter_calculus() -> Outcome {
    let s = vec![q(3, 2), q(3, 2)];
    let t: Vec<BigRational> = s.iter().map(|v| v + q(7, 2)).collect();
    let w = |p: Ext<BigRational>, qq: BigRational, s: &[BigRational]| projector_window(L3, &p, &qq, s).unwrap();
    let a = MixedParams::new(L3, fin(2, 1), q(2, 1), vec![q(1, 1), q(1, 1)]).unwrap();
    let b = MixedParams::new(L3, fin(4, 1), q(2, 1), vec![q(3, 1), q(2, 1)]).unwrap();
    let cases: Vec<(&str, Box<dyn Fn() -> bool>)> = vec![
        ("q_s rank1", Box::new(|| q_s(AlgebraKind::Rank1, &[q(7, 3)]).unwrap() == Ext::Inf)),
        ("q_s lorentz3 3/2", Box::new(|| q_s(L3, &s).unwrap() == fin(4, 1))),
        ("q_s lorentz3 1", Box::new(|| q_s(L3, &[q(1, 1), q(1, 1)]).unwrap() == fin(3, 1))),
        ("p_s lorentz3 3/2", Box::new(|| p_s(L3, &s).unwrap() == Ext::Inf)),
        ("p_s lorentz3 1/2", Box::new(|| p_s(L3, &[q(1, 2), q(1, 2)]).unwrap() == fin(5, 1))),
        ("q_s(2)", Box::new(|| q_s_p(L3, &s, &fin(2, 1)).unwrap() == fin(8, 1))),
        ("q_s(1)", Box::new(|| q_s_p(L3, &s, &fin(1, 1)).unwrap() == fin(4, 1))),
        ("q_s(inf)", Box::new(|| q_s_p(L3, &s, &Ext::Inf).unwrap() == fin(4, 1))),
        ("window rank1", Box::new(|| projector_window(AlgebraKind::Rank1, &fin(2, 1), &q(2, 1), &[q(2, 1)]).unwrap().satisfied)),
        ("window full", Box::new(|| {
            let r = w(fin(2, 1), q(2, 1), &s);
            r.satisfied && r.case == WindowCase::Full && r.q_s_p == fin(8, 1)
        })),
        ("window q = q_s(p)", Box::new(|| !w(fin(2, 1), q(8, 1), &s).satisfied)),
        ("window q = q_s(p)'", Box::new(|| !w(fin(2, 1), q(8, 7), &s).satisfied)),
        ("window inside", Box::new(|| w(fin(2, 1), q(7, 1), &s).satisfied)),
        ("window restricted", Box::new(|| {
            let r = w(fin(1, 1), q(2, 1), &[q(2, 5), q(3, 5)]);
            r.case == WindowCase::Restricted && r.p_s == fin(25, 6)
        })),
        ("positive q=1", Box::new(|| positive_window(L3, &s, &t, &q(1, 1)).unwrap())),
        ("positive small t", Box::new(|| !positive_window(L3, &s, &[q(1, 2), q(5, 1)], &q(1, 1)).unwrap())),
        ("positive q=3/2", Box::new(|| positive_window(L3, &s, &t, &q(3, 2)).unwrap())),
        ("positive q=2", Box::new(|| !positive_window(L3, &s, &t, &q(2, 1)).unwrap())),
        ("interpolate", Box::new(|| {
            let m = interpolate(&q(1, 2), &a, &b).unwrap();
            m.p == fin(8, 3) && m.q == q(2, 1) && m.s == vec![q(2, 1), q(3, 2)]
        })),
        ("interpolate diagonal", Box::new(|| interpolate(&q(1, 3), &a, &a).unwrap() == a)),
        ("wolff", Box::new(|| wolff(&q(1, 2), &q(1, 2)).unwrap() == (q(1, 3), q(2, 3)))),
        ("reiteration theta", Box::new(|| reiteration_theta(&q(3, 2), &q(6, 1), &q(1, 2)).unwrap() == q(1, 2))),
        ("reiteration round trip", Box::new(|| {
            let (q0, q1, phi) = (q(3, 2), q(6, 1), q(1, 2));
            let theta = reiteration_theta(&q0, &q1, &phi).unwrap();
            let rep = reiteration_solve(L3, &s, &fin(2, 1), &q0, &fin(4, 1), &q1, &theta, &phi).unwrap();
            let balance = (q(1, 1) - theta.clone()) / q0 + theta / rep.q3.clone();
            rep.admissible
                && rep.q3 == q(3, 1)
                && rep.p2 == fin(12, 5)
                && rep.p3 == fin(3, 1)
                && rep.phi_bound == fin(3, 4)
                && (rep.xi.clone(), rep.psi.clone()) == (q(1, 3), q(2, 3))
                && balance == q(1, 2)
        })),
        ("reiteration phi bound", Box::new(|| {
            let phi = q(99, 100);
            let theta = reiteration_theta(&q(3, 2), &q(6, 1), &phi).unwrap();
            let rep = reiteration_solve(L3, &s, &Ext::Inf, &q(3, 2), &Ext::Inf, &q(6, 1), &theta, &phi).unwrap();
            rep.balance_ok && rep.hypotheses_ok && !rep.phi_ok && !rep.admissible
        })),
        ("reiteration q1 = q_s", Box::new(|| {
            let phi = q(99, 100);
            let theta = reiteration_theta(&q(3, 2), &q(4, 1), &phi).unwrap();
            let rep = reiteration_solve(L3, &s, &Ext::Inf, &q(3, 2), &Ext::Inf, &q(4, 1), &theta, &phi).unwrap();
            rep.phi_bound == fin(1, 1) && rep.phi_ok
        })),
    ];
    let failed: Vec<&str> = cases.iter().filter(|(_, f)| !f()).map(|(n, _)| *n).collect();
    check(failed.is_empty(), format!("{} cases, failed {failed:?}", cases.len()))
}

fn metric_fd_error(kind: AlgebraKind, y: &[f64]) -> f64 {
    let ks = KernelSpec::with_constant(SpectralParam::scalar(kind, kind.n_over_r()), 1.0).unwrap();
    let z = TubePoint::new(&vec![0.0; kind.dim()], Element::new(kind, y).unwrap()).unwrap();
    let g = bergman_metric(&z).unwrap();
    let n = kind.dim();
    let h = 1e-4;
    let f = |i: usize, a: f64, j: usize, b: f64| {
        let mut p = z.clone();
        p.y.coeffs[i] += a;
        p.y.coeffs[j] += b;
        kernel_diagonal(&p, &ks).unwrap().ln()
    };
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let hess = (f(i, h, j, h) - f(i, h, j, -h) - f(i, -h, j, h) + f(i, -h, j, -h)) / (4.0 * h * h);
            worst = worst.max((0.25 * hess - g[(i, j)]).abs() / g.amax());
        }
    }
    worst
}

fn hygiene() -> Outcome {
    let metric = [
        metric_fd_error(L3, &[2.0, 0.5, -0.7]),
        metric_fd_error(S2, &[1.5, 0.3, 0.8]),
        metric_fd_error(AlgebraKind::Lorentz(4), &[1.2, 0.1, 0.2, -0.3]),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let rule = CompositeRule::new(2.5, 5, 6);
    let f = |u: &[f64]| Complex64::new((-u.iter().map(|v| v * v).sum::<f64>()).exp(), u[0].sin() * u[1].cos() + 0.1 * u[2]);
    let base = tensor_sum(3, &rule, CellOrder::Natural, f).total;
    let mut perm: f64 = 0.0;
    for seed in 1..6 {
        let other = tensor_sum(3, &rule, CellOrder::Shuffled(seed), f).total;
        perm = perm.max((other - base).norm() / base.norm());
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [&[&str]; 5] = [
        &["lattice", "--cone", "lorentz3", "--delta", "0.8", "--radius", "0.6", "--xbox", "0.3", "--samples", "300", "--seed", "3"],
        &["laplace", "--cone", "sym2", "--s", "2", "--tol", "1e-7"],
        &["sampling", "--delta", "0.8,0.4", "--family", "4", "--seed", "11"],
        &["reconstruct", "--mode", "neumann", "--delta", "0.8", "--iters", "6", "--seed", "5"],
        &["params", "--cone", "sym3", "--s", "5/2", "--theta", "1/3", "--phi", "2/5"],
    ];
    let mut differing = Vec::new();
    for args in runs {
        let out: Vec<_> = (0..2)
            .map(|_| Command::new(env!("CARGO_BIN_EXE_symtube")).args(args).current_dir(dir.path()).output().unwrap())
            .collect();
        if !out[0].status.success() || out[0].stdout != out[1].stdout {
            differing.push(args[0]);
        }
    }
    check(
        metric < 1e-6 && perm < 1e-12 && differing.is_empty(),
        format!("metric vs finite differences {metric:.1e}; cell permutation {perm:.1e}; cli runs not reproducible {differing:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Outcome); 9] = [
        (1, laplace_identity),
        (2, gamma_product),
        (3, jordan_suite),
        (4, whitney_suite),
        (5, calibration),
        (6, sampling),
        (7, reconstruction),
        (8, parameter_calculus),
        (9, hygiene),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failures = 0;
    for (n, run) in criteria {
        if only.is_some_and(|k| k != n) {
            continue;
        }
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS ({detail}; {secs:.1} s)"),
            Err(detail) => {
                failures += 1;
                println!("criterion {n}: FAIL ({detail}; {secs:.1} s)");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
