//! Run configuration: defaults, flat `key=value` files and command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use sha2::{Digest, Sha256};
use symtube::atoms::WeightMode;
use symtube::cone::SpectralParam;
use symtube::interp::Ext;
use symtube::jordan::AlgebraKind;
use symtube::quad::QuadratureConfig;

use crate::error::CliError;

/// Every recognised key with its default; an empty default means "unset".
pub const KEYS: &[(&str, &str, &str)] = &[
    ("cone", "rank1", "cone family: rank1, lorentzN or symN"),
    ("delta", "0.4", "lattice step, or a comma separated sweep"),
    ("radius", "1.0", "invariant radius D of the cone region"),
    ("xbox", "1.0", "half-width of the real box"),
    ("r", "estimate", "x-grid factor R: a number or 'estimate'"),
    ("samples", "2000", "Monte Carlo samples for lattice checks"),
    ("input", "", "lattice file to verify instead of building one"),
    ("p", "2", "real-direction exponent (may be 'inf' for params)"),
    ("q", "2", "cone-direction exponent"),
    ("s", "", "weight exponents; one value is broadcast (default n/r + 1)"),
    ("t", "", "second exponent vector for the positive-operator window"),
    ("y", "", "cone point coordinates (default e)"),
    ("family", "10", "number of test functions"),
    ("mode", "lsq", "reconstruction method: lsq or neumann"),
    ("target", "manufactured", "reconstruction target: manufactured, atom or zero"),
    ("weight", "statement", "synthesis weights: statement or pairing"),
    ("iters", "20", "Neumann iterations"),
    ("validation", "40", "validation points for reconstruction"),
    ("theta", "", "interpolation parameter"),
    ("phi", "", "second interpolation parameter"),
    ("p0", "", "first endpoint p"),
    ("q0", "", "first endpoint q"),
    ("p1", "", "second endpoint p"),
    ("q1", "", "second endpoint q"),
    ("tol", "1e-6", "quadrature tolerance"),
    ("order", "6", "Gauss-Legendre nodes per panel"),
    ("resolution", "2", "panels per unit length"),
    ("depth", "3", "refinement depth"),
    ("x_halfwidth", "3", "quadrature box half-width for real directions"),
    ("omega_radius", "4", "quadrature box half-width for cone directions"),
    ("seed", "0", "random seed"),
    ("out", "", "output path"),
];

pub fn default_value(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(k, _, _)| *k == key).map(|(_, d, _)| *d)
}

/// Reads a flat `key=value` file; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("config line {}: expected key=value", no + 1)))?;
        let k = k.trim().replace('-', "_");
        if default_value(&k).is_none() {
            return Err(CliError::Invalid(format!("config line {}: unknown key {k}", no + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// Defaults, then the file, then the flags.
pub fn layered(file: BTreeMap<String, String>, flags: BTreeMap<String, String>) -> BTreeMap<String, String> {
    let mut map: BTreeMap<String, String> = KEYS.iter().map(|(k, d, _)| (k.to_string(), d.to_string())).collect();
    map.extend(file);
    map.extend(flags);
    map
}

/// SHA-256 of `key=value` lines in key order, hex encoded.
pub fn hash_settings(settings: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    for (k, v) in settings {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum RPolicy {
    Estimate,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Mode {
    Lsq,
    Neumann,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Manufactured,
    Atom,
    Zero,
}

/// Validated configuration shared by all subcommands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub kind: AlgebraKind,
    pub deltas: Vec<f64>,
    pub radius: f64,
    pub xbox: f64,
    pub r: RPolicy,
    pub samples: usize,
    pub input: Option<String>,
    pub p: String,
    pub q: String,
    pub s: Vec<BigRational>,
    pub t: Option<Vec<BigRational>>,
    pub y: Option<Vec<f64>>,
    pub family: usize,
    pub mode: Mode,
    pub target: Target,
    pub weight: WeightMode,
    pub iters: usize,
    pub validation: usize,
    pub theta: Option<BigRational>,
    pub phi: Option<BigRational>,
    pub endpoints: [Option<String>; 4],
    pub quad: QuadratureConfig,
    pub seed: u64,
    pub out: Option<String>,
    canonical: BTreeMap<String, String>,
}

fn number<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, CliError> {
    let v = &map[key];
    v.parse().map_err(|_| CliError::Invalid(format!("{key}: cannot parse '{v}'")))
}

fn positive(map: &BTreeMap<String, String>, key: &str) -> Result<f64, CliError> {
    let v: f64 = number(map, key)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Invalid(format!("{key} must be positive and finite")));
    }
    Ok(v)
}

fn optional(map: &BTreeMap<String, String>, key: &str) -> Option<String> {
    let v = map[key].trim();
    (!v.is_empty()).then(|| v.to_string())
}

/// Exact value of a decimal, integer or `a/b` literal.
pub fn parse_rational(text: &str) -> Result<BigRational, CliError> {
    let t = text.trim();
    let bad = || CliError::Invalid(format!("'{t}' is not a rational number"));
    if t.contains('/') {
        let r = BigRational::from_str(t).map_err(|_| bad())?;
        return Ok(r);
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let num = BigInt::from_str(&format!("{int}{frac}")).map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut v = BigRational::from_integer(num);
    for _ in 0..scale.unsigned_abs() {
        v = if scale > 0 { v * ten.clone() } else { v / ten.clone() };
    }
    Ok(if neg { -v } else { v })
}

pub fn parse_ext(text: &str) -> Result<Ext<BigRational>, CliError> {
    match text.trim() {
        "inf" | "infinity" | "∞" => Ok(Ext::Inf),
        t => Ok(Ext::Fin(parse_rational(t)?)),
    }
}

fn rational_list(text: &str, rank: usize, key: &str) -> Result<Vec<BigRational>, CliError> {
    let vals = text.split(',').map(parse_rational).collect::<Result<Vec<_>, _>>()?;
    match vals.len() {
        1 => Ok(vec![vals[0].clone(); rank]),
        l if l == rank => Ok(vals),
        l => Err(CliError::Invalid(format!("{key} needs 1 or {rank} values, got {l}"))),
    }
}

fn float_list(text: &str, key: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Invalid(format!("{key}: cannot parse '{v}'"))))
        .collect()
}

fn rational_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl RunConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let kind = AlgebraKind::parse(&map["cone"]).map_err(|e| CliError::Invalid(e.to_string()))?;
        let deltas = float_list(&map["delta"], "delta")?;
        if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return Err(CliError::Invalid("delta values must lie in (0, 1)".into()));
        }
        let radius = positive(map, "radius")?;
        let xbox = positive(map, "xbox")?;
        let r = match map["r"].trim() {
            "estimate" => RPolicy::Estimate,
            _ => RPolicy::Fixed(positive(map, "r")?),
        };
        let samples: usize = number(map, "samples")?;
        let rank = kind.rank();
        let nr = BigRational::new(BigInt::from(kind.dim()), BigInt::from(rank));
        let s = match optional(map, "s") {
            Some(t) => rational_list(&t, rank, "s")?,
            None => vec![nr + BigRational::from_integer(1.into()); rank],
        };
        let t = optional(map, "t").map(|v| rational_list(&v, rank, "t")).transpose()?;
        let y = optional(map, "y").map(|v| float_list(&v, "y")).transpose()?;
        if let Some(y) = &y {
            if y.len() != kind.dim() {
                return Err(CliError::Invalid(format!("y needs {} coordinates", kind.dim())));
            }
        }
        let mode = match map["mode"].as_str() {
            "lsq" => Mode::Lsq,
            "neumann" => Mode::Neumann,
            m => return Err(CliError::Invalid(format!("unknown mode {m}"))),
        };
        let target = match map["target"].as_str() {
            "manufactured" => Target::Manufactured,
            "atom" => Target::Atom,
            "zero" => Target::Zero,
            m => return Err(CliError::Invalid(format!("unknown target {m}"))),
        };
        let weight = WeightMode::parse(&map["weight"]).map_err(|e| CliError::Invalid(e.to_string()))?;
        let quad = QuadratureConfig {
            x_halfwidth: positive(map, "x_halfwidth")?,
            omega_radius: positive(map, "omega_radius")?,
            base_resolution: number(map, "resolution")?,
            refinement_depth: number(map, "depth")?,
            order: number(map, "order")?,
            tol: positive(map, "tol")?,
            seed: number(map, "seed")?,
        };
        quad.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
        let theta = optional(map, "theta").map(|v| parse_rational(&v)).transpose()?;
        let phi = optional(map, "phi").map(|v| parse_rational(&v)).transpose()?;
        let endpoints = ["p0", "q0", "p1", "q1"].map(|k| optional(map, k));
        let mut canonical = map.clone();
        canonical.remove("out");
        canonical.insert("cone".into(), kind.name());
        canonical.insert("s".into(), s.iter().map(rational_string).collect::<Vec<_>>().join(","));
        canonical.insert("delta".into(), deltas.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        if let RPolicy::Fixed(v) = r {
            canonical.insert("r".into(), v.to_string());
        }
        for (k, v) in [("radius", radius), ("xbox", xbox), ("tol", quad.tol), ("x_halfwidth", quad.x_halfwidth), ("omega_radius", quad.omega_radius)] {
            canonical.insert(k.into(), v.to_string());
        }
        for k in ["samples", "family", "iters", "validation", "order", "resolution", "depth", "seed"] {
            canonical.insert(k.into(), number::<u64>(map, k)?.to_string());
        }
        Ok(RunConfig {
            kind,
            deltas,
            radius,
            xbox,
            r,
            samples,
            input: optional(map, "input"),
            p: map["p"].trim().to_string(),
            q: map["q"].trim().to_string(),
            s,
            t,
            y,
            family: number(map, "family")?,
            mode,
            target,
            weight,
            iters: number(map, "iters")?,
            validation: number(map, "validation")?,
            theta,
            phi,
            endpoints,
            quad,
            seed: number(map, "seed")?,
            out: optional(map, "out"),
            canonical,
        })
    }

    /// The resolved settings other than the output path.
    pub fn canonical(&self) -> &BTreeMap<String, String> {
        &self.canonical
    }

    pub fn hash(&self) -> String {
        hash_settings(&self.canonical)
    }

    pub fn s_param(&self) -> Result<SpectralParam, CliError> {
        let v: Vec<f64> = self.s.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect();
        SpectralParam::new(self.kind, &v).map_err(|e| CliError::Invalid(e.to_string()))
    }

    pub fn pq(&self) -> Result<(f64, f64), CliError> {
        let p: f64 = self.p.parse().map_err(|_| CliError::Invalid(format!("p: cannot parse '{}'", self.p)))?;
        let q: f64 = self.q.parse().map_err(|_| CliError::Invalid(format!("q: cannot parse '{}'", self.q)))?;
        if !(p >= 1.0 && p.is_finite() && q >= 1.0 && q.is_finite()) {
            return Err(CliError::Invalid("p and q must be finite and at least 1".into()));
        }
        Ok((p, q))
    }

    pub fn q_rational(&self) -> Result<BigRational, CliError> {
        let q = parse_rational(&self.q)?;
        if q < BigRational::from_integer(1.into()) {
            return Err(CliError::Invalid("q must be at least 1".into()));
        }
        Ok(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(parse_rational("3/2").unwrap(), r(3, 2));
        assert_eq!(parse_rational("1.25").unwrap(), r(5, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), r(-1, 2));
        assert_eq!(parse_rational("2e-1").unwrap(), r(1, 5));
        assert_eq!(parse_rational("7").unwrap(), r(7, 1));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational(".").is_err());
        assert_eq!(parse_ext("inf").unwrap(), Ext::Inf);
    }

    #[test]
    fn layering_and_hash() {
        let file = parse_config_text("# sweep\ncone = lorentz3\ndelta=0.2,0.4\nseed=3 # trailing\n").unwrap();
        let flags: BTreeMap<String, String> = [("seed".to_string(), "5".to_string())].into();
        let map = layered(file, flags);
        let cfg = RunConfig::from_map(&map).unwrap();
        assert_eq!(cfg.kind, AlgebraKind::Lorentz(3));
        assert_eq!(cfg.deltas, vec![0.2, 0.4]);
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.s.len(), 2);
        let mut other = map.clone();
        other.insert("out".into(), "somewhere.json".into());
        assert_eq!(RunConfig::from_map(&other).unwrap().hash(), cfg.hash());
        other.insert("seed".into(), "6".into());
        assert_ne!(RunConfig::from_map(&other).unwrap().hash(), cfg.hash());
        assert!(parse_config_text("nonsense").is_err());
        assert!(parse_config_text("colour=red").is_err());
    }

    #[test]
    fn validation() {
        let bad = |k: &str, v: &str| {
            let map = layered(BTreeMap::new(), [(k.to_string(), v.to_string())].into());
            RunConfig::from_map(&map).is_err()
        };
        assert!(bad("cone", "lorentz2"));
        assert!(bad("delta", "1.5"));
        assert!(bad("radius", "-1"));
        assert!(bad("s", "1,2,3"));
        assert!(bad("mode", "magic"));
        assert!(!bad("r", "2.5"));
    }
}
