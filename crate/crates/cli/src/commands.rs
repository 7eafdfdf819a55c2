//! The subcommands. Each writes its result to `--out` (or stdout) and returns
//! an error carrying the exit status when something fails.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Map, Value};
use symtube::atoms::{reconstruct_lsq, reconstruct_neumann, relative_sup_residual, sampling_ratio_with_norm, synthesis, FrameSpec};
use symtube::cone::{laplace_power_closed, laplace_power_quadrature};
use symtube::interp::{
    interpolate, p_s, positive_window, projector_window, q_s, q_s_p, reiteration_solve, reiteration_theta, wolff, Ext, MixedParams, WindowCase,
};
use symtube::jordan::{AlgebraKind, Element};
use symtube::lattice::{build_cone_lattice, build_tube_lattice, build_verified, estimate_r, verify_whitney, TubeLattice};
use symtube::spaces::{atom_parameter, AtomCombo};
use symtube::tube::{calibrate_kernel_constant, KernelSpec};
use symtube::SpectralParam;

use crate::config::{parse_ext, parse_rational, Mode, RPolicy, RunConfig, Target};
use crate::error::CliError;
use crate::experiments::{
    atom_family, band, collocation_points, function_norm, manufactured_coefficients, off_lattice_point, validation_points,
};

const OPEN_QUESTION: &str =
    "outside this window it is not known whether the reiteration identities extend to other endpoint parameters";

/// Destination of the run's text output.
fn destination(cfg: &RunConfig, delta: Option<f64>) -> Option<PathBuf> {
    let out = cfg.out.as_ref()?;
    let path = PathBuf::from(out);
    match delta {
        Some(d) if cfg.deltas.len() > 1 => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
            let name = match path.extension().and_then(|e| e.to_str()) {
                Some(ext) => format!("{stem}_delta{d}.{ext}"),
                None => format!("{stem}_delta{d}"),
            };
            Some(path.with_file_name(name))
        }
        _ => Some(path),
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// A JSON document with the run header.
fn document(cfg: &RunConfig, command: &str, body: Map<String, Value>) -> String {
    let mut doc = Map::new();
    doc.insert("command".into(), json!(command));
    doc.insert("config_hash".into(), json!(cfg.hash()));
    doc.insert("seed".into(), json!(cfg.seed));
    doc.insert("config".into(), json!(cfg.canonical()));
    doc.extend(body);
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
    text.push('\n');
    text
}

/// Comment header for CSV output.
fn csv_header(cfg: &RunConfig, command: &str, extra: &[(&str, String)]) -> String {
    let mut out = format!("# command={command}\n# config_hash={}\n# seed={}\n", cfg.hash(), cfg.seed);
    for (k, v) in cfg.canonical() {
        let _ = writeln!(out, "# {k}={v}");
    }
    for (k, v) in extra {
        let _ = writeln!(out, "# {k}={v}");
    }
    out
}

fn resolve_r(cfg: &RunConfig) -> Result<f64, CliError> {
    Ok(match cfg.r {
        RPolicy::Fixed(r) => r,
        RPolicy::Estimate => estimate_r(cfg.kind, cfg.samples.max(1), cfg.seed)?,
    })
}

fn build(cfg: &RunConfig, delta: f64, r: f64) -> Result<TubeLattice, CliError> {
    Ok(build_tube_lattice(build_cone_lattice(cfg.kind, delta, cfg.radius)?, r, cfg.xbox)?)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

pub fn lattice(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(input) = &cfg.input {
        return verify_lattice_file(cfg, Path::new(input));
    }
    let r = resolve_r(cfg)?;
    let mut runs = Vec::new();
    let mut failed = Vec::new();
    for &delta in &cfg.deltas {
        let (tl, report) = build_verified(cfg.kind, delta, cfg.radius, r, cfg.xbox, cfg.samples, cfg.seed)?;
        if !report.passed {
            failed.push(delta);
        }
        let path = destination(cfg, Some(delta));
        if let Some(p) = &path {
            let lattice: Value = serde_json::from_str(&tl.to_json()?).map_err(|e| CliError::Io(e.to_string()))?;
            let mut body = Map::new();
            body.insert("delta".into(), json!(delta));
            body.insert("report".into(), to_value(&report));
            body.insert("lattice".into(), lattice);
            write_text(Some(p), &document(cfg, "lattice", body))?;
        }
        runs.push(json!({
            "delta": delta,
            "file": path.map(|p| p.display().to_string()),
            "report": report,
        }));
    }
    let mut body = Map::new();
    body.insert("r".into(), json!(r));
    body.insert("runs".into(), Value::Array(runs));
    write_text(None, &document(cfg, "lattice", body))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("lattice checks failed for delta {failed:?}")))
    }
}

/// Re-verifies a lattice file written by [`lattice`].
fn verify_lattice_file(cfg: &RunConfig, path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let corrupt = |m: String| CliError::Verification(format!("{}: {m}", path.display()));
    let doc: Value = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    if let (Some(hash), Some(config)) = (doc.get("config_hash"), doc.get("config")) {
        let settings: BTreeMap<String, String> = serde_json::from_value(config.clone()).map_err(|e| corrupt(e.to_string()))?;
        if hash.as_str() != Some(crate::config::hash_settings(&settings).as_str()) {
            return Err(corrupt("configuration hash does not match".into()));
        }
    }
    let payload = doc.get("lattice").unwrap_or(&doc);
    let tl = TubeLattice::from_json(&payload.to_string()).map_err(|e| corrupt(e.to_string()))?;
    let report = verify_whitney(&tl, cfg.samples, cfg.seed)?;
    let mut body = Map::new();
    body.insert("input".into(), json!(path.display().to_string()));
    body.insert("report".into(), to_value(&report));
    write_text(destination(cfg, None).as_deref(), &document(cfg, "lattice", body))?;
    if report.passed {
        Ok(())
    } else {
        Err(corrupt("lattice checks failed".into()))
    }
}

pub fn laplace(cfg: &RunConfig) -> Result<(), CliError> {
    let s = cfg.s_param()?;
    let y = match &cfg.y {
        Some(c) => Element::new(cfg.kind, c)?,
        None => cfg.kind.identity(),
    };
    if !y.in_cone() {
        return Err(CliError::Invalid("y must lie in the cone".into()));
    }
    let closed = laplace_power_closed(&s, &y)?;
    let quad = laplace_power_quadrature(&s, &y, &cfg.quad)?;
    let mut body = Map::new();
    body.insert("s".into(), json!(s.s));
    body.insert("y".into(), json!(y.coeffs.to_vec()));
    body.insert("closed".into(), json!(closed));
    body.insert("quadrature".into(), json!(quad.value));
    body.insert("error_estimate".into(), json!(quad.error_estimate));
    body.insert("rel_err".into(), json!((quad.value - closed).abs() / closed.abs()));
    write_text(destination(cfg, None).as_deref(), &document(cfg, "laplace", body))
}

/// One member of one lattice in a sampling sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingRow {
    pub delta: f64,
    pub tube_points: usize,
    pub member: usize,
    pub raw: f64,
    pub normalized: f64,
    pub norm: f64,
    pub band_min: f64,
    pub band_max: f64,
}

pub fn sampling_rows(cfg: &RunConfig) -> Result<Vec<SamplingRow>, CliError> {
    if cfg.family == 0 {
        return Err(CliError::Invalid("the test family is empty".into()));
    }
    let s = cfg.s_param()?;
    let (p, q) = cfg.pq()?;
    if !s.bergman_ok() {
        return Err(CliError::Invalid(format!("s = {:?} is outside the Bergman range", s.s)));
    }
    let ks = KernelSpec::with_constant(atom_parameter(&s), 1.0)?;
    let family = atom_family(&ks, cfg.family, cfg.seed)?;
    let norms = family.iter().map(|f| function_norm(f, p, q, &s, &cfg.quad)).collect::<symtube::Result<Vec<_>>>()?;
    let r = resolve_r(cfg)?;
    let mut rows = Vec::new();
    for &delta in &cfg.deltas {
        let tl = build(cfg, delta, r)?;
        let ratios = family
            .iter()
            .zip(&norms)
            .map(|(f, n)| sampling_ratio_with_norm(f, &tl, p, q, &s, *n))
            .collect::<symtube::Result<Vec<_>>>()?;
        let (lo, hi) = band(&ratios);
        for (m, (ratio, norm)) in ratios.iter().zip(&norms).enumerate() {
            rows.push(SamplingRow {
                delta,
                tube_points: tl.len(),
                member: m,
                raw: ratio.raw,
                normalized: ratio.normalized,
                norm: *norm,
                band_min: lo,
                band_max: hi,
            });
        }
    }
    Ok(rows)
}

pub fn sampling(cfg: &RunConfig) -> Result<(), CliError> {
    let rows = sampling_rows(cfg)?;
    let (p, q) = cfg.pq()?;
    let s = cfg.s_param()?;
    let scalar = s.s.iter().all(|v| *v == s.s[0]);
    let method = if p == 2.0 && q == 2.0 && scalar { "closed form" } else { "quadrature" };
    let mut out = csv_header(cfg, "sampling", &[("norm", method.to_string())]);
    out.push_str("delta,tube_points,member,raw,normalized,norm,band_min,band_max,band_ratio\n");
    for r in &rows {
        let _ = writeln!(
            out,
            "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.delta,
            r.tube_points,
            r.member,
            r.raw,
            r.normalized,
            r.norm,
            r.band_min,
            r.band_max,
            r.band_max / r.band_min
        );
    }
    write_text(destination(cfg, None).as_deref(), &out)
}

fn frame_kernel(s: &SpectralParam, cfg: &RunConfig) -> Result<KernelSpec, CliError> {
    Ok(match s.kind {
        AlgebraKind::Rank1 => KernelSpec::rank1(s.s[0])?,
        _ => calibrate_kernel_constant(s, &cfg.quad)?,
    })
}

fn target(cfg: &RunConfig, tl: &TubeLattice, spec: &FrameSpec) -> Result<AtomCombo, CliError> {
    Ok(match cfg.target {
        Target::Zero => AtomCombo::zero(spec.ks.clone()),
        Target::Atom => AtomCombo::single(spec.ks.clone(), off_lattice_point(cfg.kind)?, num_complex::Complex64::new(1.0, 0.0))?,
        Target::Manufactured => synthesis(&manufactured_coefficients(tl, cfg.seed)?, tl, spec)?,
    })
}

pub fn reconstruct(cfg: &RunConfig) -> Result<(), CliError> {
    let s = cfg.s_param()?;
    let (p, q) = cfg.pq()?;
    if !s.bergman_ok() {
        return Err(CliError::Invalid(format!("s = {:?} is outside the Bergman range", s.s)));
    }
    if cfg.validation == 0 {
        return Err(CliError::Invalid("at least one validation point is required".into()));
    }
    let ks = frame_kernel(&s, cfg)?;
    let spec = FrameSpec::new(ks, cfg.weight, p, q)?;
    let validation = validation_points(cfg.kind, cfg.validation, cfg.seed.wrapping_add(1))?;
    let r = resolve_r(cfg)?;
    let target_name = match cfg.target {
        Target::Zero => "zero",
        Target::Atom => "atom",
        Target::Manufactured => "manufactured",
    };
    let mut out = csv_header(cfg, "reconstruct", &[("target", target_name.into()), ("d_s", format!("{:e}", spec.ks.d_s))]);
    match cfg.mode {
        Mode::Lsq => out.push_str("delta,tube_points,residual,validation,ridge,condition\n"),
        Mode::Neumann => out.push_str("delta,tube_points,iteration,residual,relaxation,diverged\n"),
    }
    for &delta in &cfg.deltas {
        let tl = build(cfg, delta, r)?;
        let f = target(cfg, &tl, &spec)?;
        match cfg.mode {
            Mode::Lsq => {
                let res = reconstruct_lsq(&f, &tl, &spec, &collocation_points(&tl)?)?;
                let g = synthesis(&res.lambda, &tl, &spec)?;
                let val = relative_sup_residual(&f, &g, &validation)?;
                let _ = writeln!(out, "{delta},{},{:e},{:e},{:e},{:e}", tl.len(), res.residual, val, res.ridge, res.condition);
            }
            Mode::Neumann => {
                let res = reconstruct_neumann(&f, &tl, &spec, cfg.iters.max(1), &validation, None)?;
                for (k, v) in res.residuals.iter().enumerate() {
                    let _ = writeln!(out, "{delta},{},{},{:e},{:e},{}", tl.len(), k + 1, v, res.relaxation.c, res.diverged);
                }
            }
        }
    }
    write_text(destination(cfg, None).as_deref(), &out)
}

fn rational_json(r: &BigRational) -> Value {
    let exact = if r.is_integer() { r.numer().to_string() } else { format!("{}/{}", r.numer(), r.denom()) };
    json!({ "exact": exact, "value": r.to_f64() })
}

fn ext_json(e: &Ext<BigRational>) -> Value {
    match e {
        Ext::Inf => json!({ "exact": "inf", "value": "inf" }),
        Ext::Fin(r) => rational_json(r),
    }
}

fn list_json(v: &[BigRational]) -> Value {
    Value::Array(v.iter().map(rational_json).collect())
}

pub fn params(cfg: &RunConfig) -> Result<(), CliError> {
    let kind = cfg.kind;
    let s = &cfg.s;
    let p = parse_ext(&cfg.p)?;
    let q = cfg.q_rational()?;
    let window = projector_window(kind, &p, &q, s)?;
    let mut body = Map::new();
    body.insert("s".into(), list_json(s));
    body.insert("p".into(), ext_json(&p));
    body.insert("q".into(), rational_json(&q));
    body.insert("q_s".into(), ext_json(&q_s(kind, s)?));
    body.insert("p_s".into(), ext_json(&p_s(kind, s)?));
    body.insert("q_s_p".into(), ext_json(&q_s_p(kind, s, &p)?));
    let case = match window.case {
        WindowCase::Restricted => "restricted",
        WindowCase::Full => "full",
        WindowCase::None => "none",
    };
    body.insert(
        "projector_window".into(),
        json!({ "satisfied": window.satisfied, "case": case, "margins": [window.margins.0, window.margins.1] }),
    );
    let mut open = !window.satisfied;
    if let Some(t) = &cfg.t {
        body.insert("t".into(), list_json(t));
        body.insert("positive_window".into(), json!(positive_window(kind, s, t, &q)?));
    }
    if let (Some(theta), Some(phi)) = (&cfg.theta, &cfg.phi) {
        let (xi, psi) = wolff(theta, phi)?;
        body.insert("wolff".into(), json!({ "theta": rational_json(theta), "phi": rational_json(phi), "xi": rational_json(&xi), "psi": rational_json(&psi) }));
    }
    let ends: Vec<&str> = cfg.endpoints.iter().flatten().map(String::as_str).collect();
    if ends.len() == 4 {
        let (p0, q0, p1, q1) = (parse_ext(ends[0])?, parse_rational(ends[1])?, parse_ext(ends[2])?, parse_rational(ends[3])?);
        if let Some(theta) = &cfg.theta {
            let a = MixedParams::new(kind, p0.clone(), q0.clone(), s.clone())?;
            let b = MixedParams::new(kind, p1.clone(), q1.clone(), s.clone())?;
            let m = interpolate(theta, &a, &b)?;
            body.insert("interpolated".into(), json!({ "p": ext_json(&m.p), "q": rational_json(&m.q), "s": list_json(&m.s) }));
        }
        if let Some(phi) = &cfg.phi {
            let theta = match &cfg.theta {
                Some(t) => t.clone(),
                None => reiteration_theta(&q0, &q1, phi)?,
            };
            let rep = reiteration_solve(kind, s, &p0, &q0, &p1, &q1, &theta, phi)?;
            open |= !rep.admissible;
            body.insert(
                "reiteration".into(),
                json!({
                    "theta": rational_json(&theta),
                    "admissible": rep.admissible,
                    "hypotheses_ok": rep.hypotheses_ok,
                    "balance_ok": rep.balance_ok,
                    "phi_ok": rep.phi_ok,
                    "phi_bound": ext_json(&rep.phi_bound),
                    "p2": ext_json(&rep.p2),
                    "q2": rational_json(&rep.q2),
                    "p3": ext_json(&rep.p3),
                    "q3": rational_json(&rep.q3),
                    "xi": rational_json(&rep.xi),
                    "psi": rational_json(&rep.psi),
                }),
            );
        }
    } else if !ends.is_empty() {
        return Err(CliError::Invalid("p0, q0, p1 and q1 must be given together".into()));
    }
    if open {
        body.insert("open_question".into(), json!(OPEN_QUESTION));
    }
    write_text(destination(cfg, None).as_deref(), &document(cfg, "params", body))
}
