//! Parameter calculus for the boundedness windows of weighted Bergman
//! projectors and for complex interpolation between mixed-norm Bergman spaces.
//!
//! Everything is generic over [`Real`], implemented for `f64` and for exact
//! rationals. Boundaries of strict windows always evaluate to `false`.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::jordan::AlgebraKind;

/// Ordered field used by the calculus.
pub trait Real: Clone + PartialOrd + Num + Debug {
    fn int(n: i64) -> Self;
    fn ratio(n: i64, d: i64) -> Self {
        Self::int(n) / Self::int(d)
    }
    fn to_f64(&self) -> f64;
    /// Absolute tolerance for identities that hold exactly in theory.
    fn identity_tolerance() -> Self;
}

impl Real for f64 {
    fn int(n: i64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn identity_tolerance() -> Self {
        1e-12
    }
}

impl Real for BigRational {
    fn int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn identity_tolerance() -> Self {
        Self::zero()
    }
}

/// `T ∪ {+∞}`; finite values order below `Inf`.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub enum Ext<T> {
    Fin(T),
    Inf,
}

impl<T: Real> Ext<T> {
    pub fn is_inf(&self) -> bool {
        matches!(self, Ext::Inf)
    }

    /// `1/x` with `1/∞ = 0` and `1/0 = ∞`.
    pub fn recip(&self) -> Ext<T> {
        match self {
            Ext::Inf => Ext::Fin(T::zero()),
            Ext::Fin(v) if v.is_zero() => Ext::Inf,
            Ext::Fin(v) => Ext::Fin(T::one() / v.clone()),
        }
    }

    /// `1/x` for `x > 0`, as a finite value.
    pub fn inv(&self) -> T {
        match self {
            Ext::Inf => T::zero(),
            Ext::Fin(v) => T::one() / v.clone(),
        }
    }

    pub fn min(self, other: Ext<T>) -> Ext<T> {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Product with a positive scalar factor.
    pub fn mul_pos(&self, f: &Ext<T>) -> Ext<T> {
        match (self, f) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a.clone() * b.clone()),
            _ => Ext::Inf,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Ext::Inf => f64::INFINITY,
            Ext::Fin(v) => v.to_f64(),
        }
    }
}

/// Exponent `p ∈ [1, ∞]`, `q ∈ [1, ∞)` and weight `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedParams<T> {
    pub kind: AlgebraKind,
    pub p: Ext<T>,
    pub q: T,
    pub s: Vec<T>,
}

impl<T: Real> MixedParams<T> {
    pub fn new(kind: AlgebraKind, p: Ext<T>, q: T, s: Vec<T>) -> Result<Self> {
        kind.validate()?;
        if s.len() != kind.rank() {
            return Err(Error::Dimension(format!("expected {} exponents", kind.rank())));
        }
        if let Ext::Fin(pv) = &p {
            if *pv < T::one() {
                return Err(Error::Param("p must be at least 1".into()));
            }
        }
        if q < T::one() {
            return Err(Error::Param("q must be at least 1".into()));
        }
        Ok(MixedParams { kind, p, q, s })
    }
}

/// `(n_k, m_k)` as exact values of `T`.
pub fn index_exact<T: Real>(kind: AlgebraKind) -> (Vec<T>, Vec<T>) {
    let r = kind.rank() as i64;
    let n = kind.dim() as i64;
    if r == 1 {
        return (vec![T::zero()], vec![T::zero()]);
    }
    let nk = (1..=r).map(|k| T::ratio(2 * (k - 1) * (n - r), r * (r - 1))).collect();
    let mk = (1..=r).map(|k| T::ratio(2 * (r - k) * (n - r), r * (r - 1))).collect();
    (nk, mk)
}

fn n_over_r<T: Real>(kind: AlgebraKind) -> T {
    T::ratio(kind.dim() as i64, kind.rank() as i64)
}

fn check_len<T>(kind: AlgebraKind, s: &[T]) -> Result<()> {
    if s.len() != kind.rank() {
        return Err(Error::Dimension(format!("expected {} exponents, got {}", kind.rank(), s.len())));
    }
    Ok(())
}

/// `q_s = min_k (1 + (s_k − n_k/2)/(m_k/2))`, terms with `m_k = 0` being `+∞`.
pub fn q_s<T: Real>(kind: AlgebraKind, s: &[T]) -> Result<Ext<T>> {
    check_len(kind, s)?;
    let (nk, mk) = index_exact::<T>(kind);
    let two = T::int(2);
    let mut out = Ext::Inf;
    for k in 0..s.len() {
        if mk[k].is_zero() {
            continue;
        }
        let term = T::one() + (s[k].clone() - nk[k].clone() / two.clone()) / (mk[k].clone() / two.clone());
        out = out.min(Ext::Fin(term));
    }
    Ok(out)
}

/// `p_s = 1 + min_k (s_k + n/r)/((m_k − s_k)₊)`, terms with `(·)₊ = 0` being `+∞`.
pub fn p_s<T: Real>(kind: AlgebraKind, s: &[T]) -> Result<Ext<T>> {
    check_len(kind, s)?;
    let (_, mk) = index_exact::<T>(kind);
    let nr = n_over_r::<T>(kind);
    let mut best = Ext::Inf;
    for k in 0..s.len() {
        let den = mk[k].clone() - s[k].clone();
        if den <= T::zero() {
            continue;
        }
        best = best.min(Ext::Fin((s[k].clone() + nr.clone()) / den));
    }
    Ok(match best {
        Ext::Inf => Ext::Inf,
        Ext::Fin(v) => Ext::Fin(T::one() + v),
    })
}

/// Hölder conjugate `p' = p/(p − 1)`.
pub fn conjugate<T: Real>(p: &Ext<T>) -> Ext<T> {
    match p {
        Ext::Inf => Ext::Fin(T::one()),
        Ext::Fin(v) if v.is_one() => Ext::Inf,
        Ext::Fin(v) => Ext::Fin(v.clone() / (v.clone() - T::one())),
    }
}

/// `q_s(p) = min(p, p') q_s`.
pub fn q_s_p<T: Real>(kind: AlgebraKind, s: &[T], p: &Ext<T>) -> Result<Ext<T>> {
    let qs = q_s(kind, s)?;
    let m = p.clone().min(conjugate(p));
    Ok(qs.mul_pos(&m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum WindowCase {
    /// `s_j > n_j/2` and `1 ≤ p < p_s`.
    Restricted,
    /// `s_j > n/r − 1` and `1 ≤ p ≤ ∞`.
    Full,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowReport<T> {
    pub q_s: Ext<T>,
    pub p_s: Ext<T>,
    pub q_s_p: Ext<T>,
    pub case: WindowCase,
    pub satisfied: bool,
    /// `(1/q − 1/q_s(p), 1 − 1/q_s(p) − 1/q)`; both positive iff the `q`-window holds.
    pub margins: (f64, f64),
}

/// Boundedness window for the weighted Bergman projector on `L^{p,q}_s`.
///
/// When both cases apply, [`WindowCase::Full`] is reported.
pub fn projector_window<T: Real>(kind: AlgebraKind, p: &Ext<T>, q: &T, s: &[T]) -> Result<WindowReport<T>> {
    let qs = q_s(kind, s)?;
    let ps = p_s(kind, s)?;
    let qsp = q_s_p(kind, s, p)?;
    let inv_q = T::one() / q.clone();
    let inv_qsp = qsp.inv();
    let lower = inv_q.clone() - inv_qsp.clone();
    let upper = T::one() - inv_qsp - inv_q;
    let in_window = lower > T::zero() && upper > T::zero();
    let (nk, _) = index_exact::<T>(kind);
    let two = T::int(2);
    let nr1 = n_over_r::<T>(kind) - T::one();
    let p_ge_1 = match p {
        Ext::Inf => true,
        Ext::Fin(v) => *v >= T::one(),
    };
    let case_i = s.iter().zip(&nk).all(|(sj, nj)| *sj > nj.clone() / two.clone()) && p_ge_1 && *p < ps;
    let case_ii = s.iter().all(|sj| *sj > nr1) && p_ge_1;
    let case = if case_ii {
        WindowCase::Full
    } else if case_i {
        WindowCase::Restricted
    } else {
        WindowCase::None
    };
    Ok(WindowReport {
        q_s: qs,
        p_s: ps,
        q_s_p: qsp,
        case,
        satisfied: in_window && case != WindowCase::None,
        margins: (lower.to_f64(), upper.to_f64()),
    })
}

/// Window for the positive Bergman operator `P⁺_t` on `L^q_s`.
pub fn positive_window<T: Real>(kind: AlgebraKind, s: &[T], t: &[T], q: &T) -> Result<bool> {
    check_len(kind, s)?;
    check_len(kind, t)?;
    let (nk, mk) = index_exact::<T>(kind);
    let two = T::int(2);
    let nr1 = n_over_r::<T>(kind) - T::one();
    if !t.iter().all(|tk| *tk > nr1) {
        return Ok(false);
    }
    let r = s.len();
    if q.is_one() {
        return Ok((0..r).all(|k| {
            s[k] > nk[k].clone() / two.clone() && t[k].clone() - s[k].clone() > mk[k].clone() / two.clone()
        }));
    }
    if *q < T::one() {
        return Ok(false);
    }
    let mut lo = Ext::Fin(T::one());
    let mut hi_min = Ext::Fin(T::one());
    for k in 0..r {
        let a = s[k].clone() - nk[k].clone() / two.clone();
        let den = t[k].clone() - nk[k].clone() / two.clone();
        let term = if den.is_zero() {
            Ext::Inf
        } else {
            Ext::Fin((a.clone() + mk[k].clone() / two.clone()) / den)
        };
        if term > lo {
            lo = term;
        }
        if !mk[k].is_zero() {
            hi_min = hi_min.min(Ext::Fin(a / (mk[k].clone() / two.clone())));
        }
    }
    let hi = match hi_min {
        Ext::Fin(v) => Ext::Fin(T::one() + v),
        Ext::Inf => Ext::Inf,
    };
    let qe = Ext::Fin(q.clone());
    Ok(lo < qe && qe < hi)
}

fn open_unit<T: Real>(x: &T, name: &str) -> Result<()> {
    if *x > T::zero() && *x < T::one() {
        Ok(())
    } else {
        Err(Error::Param(format!("{name} must lie in (0, 1), got {x:?}")))
    }
}

/// Parameters of the interpolation space `[A^{p0,q0}_{s0}, A^{p1,q1}_{s1}]_θ`.
pub fn interpolate<T: Real>(theta: &T, p0: &MixedParams<T>, p1: &MixedParams<T>) -> Result<MixedParams<T>> {
    open_unit(theta, "theta")?;
    if p0.kind != p1.kind {
        return Err(Error::Dimension("kind mismatch".into()));
    }
    let th = theta.clone();
    let om = T::one() - th.clone();
    let inv_p = om.clone() * p0.p.inv() + th.clone() * p1.p.inv();
    let p = Ext::Fin(inv_p).recip();
    let inv_q = om.clone() / p0.q.clone() + th.clone() / p1.q.clone();
    let q = T::one() / inv_q;
    let s = p0
        .s
        .iter()
        .zip(&p1.s)
        .map(|(a, b)| q.clone() * (om.clone() * a.clone() / p0.q.clone() + th.clone() * b.clone() / p1.q.clone()))
        .collect();
    Ok(MixedParams { kind: p0.kind, p, q, s })
}

/// Wolff reiteration parameters `ξ = θφ/(1−θ+θφ)`, `ψ = φ/(1−θ+θφ)`.
pub fn wolff<T: Real>(theta: &T, phi: &T) -> Result<(T, T)> {
    open_unit(theta, "theta")?;
    open_unit(phi, "phi")?;
    let den = T::one() - theta.clone() + theta.clone() * phi.clone();
    Ok((theta.clone() * phi.clone() / den.clone(), phi.clone() / den))
}

/// `θ` solving `1/2 = (1−θ)/q0 + θ((1−φ)/2 + φ/q1)`.
pub fn reiteration_theta<T: Real>(q0: &T, q1: &T, phi: &T) -> Result<T> {
    let half = T::ratio(1, 2);
    let c = (T::one() - phi.clone()) * half.clone() + phi.clone() / q1.clone();
    let a = T::one() / q0.clone();
    let den = c - a.clone();
    if den.is_zero() {
        return Err(Error::Param("the relation between theta and phi is degenerate".into()));
    }
    Ok((half - a) / den)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReiterationReport<T> {
    pub admissible: bool,
    pub hypotheses_ok: bool,
    pub balance_ok: bool,
    pub phi_ok: bool,
    /// Right-hand side of the bound on `φ`.
    pub phi_bound: Ext<T>,
    pub p2: Ext<T>,
    pub q2: T,
    pub p3: Ext<T>,
    pub q3: T,
    pub xi: T,
    pub psi: T,
}

fn approx_eq<T: Real>(a: &T, b: &T) -> bool {
    let d = a.clone() - b.clone();
    let d = if d < T::zero() { T::zero() - d } else { d };
    d <= T::identity_tolerance()
}

/// Checks the hypotheses of the reiteration statement and computes
/// `(p2, 2)`, `(p3, q3)` and `(ξ, ψ)`.
#[allow(clippy::too_many_arguments)]
pub fn reiteration_solve<T: Real>(
    kind: AlgebraKind,
    s: &[T],
    p0: &Ext<T>,
    q0: &T,
    p1: &Ext<T>,
    q1: &T,
    theta: &T,
    phi: &T,
) -> Result<ReiterationReport<T>> {
    let (xi, psi) = wolff(theta, phi)?;
    let qs = q_s(kind, s)?;
    let nr1 = n_over_r::<T>(kind) - T::one();
    let one = T::one();
    let half = T::ratio(1, 2);
    let p_ok = |p: &Ext<T>| match p {
        Ext::Inf => true,
        Ext::Fin(v) => *v >= one,
    };
    let hypotheses_ok = s.iter().all(|sk| *sk > nr1)
        && p_ok(p0)
        && p_ok(p1)
        && *q0 >= one
        && Ext::Fin(q0.clone()) < qs
        && qs <= Ext::Fin(q1.clone());
    let inv_q3 = (one.clone() - phi.clone()) * half.clone() + phi.clone() / q1.clone();
    let rhs = (one.clone() - theta.clone()) / q0.clone() + theta.clone() * inv_q3.clone();
    let balance_ok = approx_eq(&rhs, &half);
    let num = half.clone() - qs.inv();
    let den = half.clone() - one.clone() / q1.clone();
    let phi_bound = if den.is_zero() { Ext::Inf } else { Ext::Fin(num / den) };
    let phi_ok = Ext::Fin(phi.clone()) < phi_bound;
    let inv_p2 = (one.clone() - xi.clone()) * p0.inv() + xi.clone() * p1.inv();
    let inv_p3 = (one.clone() - phi.clone()) * inv_p2.clone() + phi.clone() * p1.inv();
    Ok(ReiterationReport {
        admissible: hypotheses_ok && balance_ok && phi_ok,
        hypotheses_ok,
        balance_ok,
        phi_ok,
        phi_bound,
        p2: Ext::Fin(inv_p2).recip(),
        q2: T::int(2),
        p3: Ext::Fin(inv_p3).recip(),
        q3: one / inv_q3,
        xi,
        psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::ratio(n, d)
    }

    const L3: AlgebraKind = AlgebraKind::Lorentz(3);

    #[test]
    fn q_s_examples() {
        assert_eq!(q_s(AlgebraKind::Rank1, &[q(7, 3)]).unwrap(), Ext::Inf);
        assert_eq!(q_s(L3, &[q(3, 2), q(3, 2)]).unwrap(), Ext::Fin(q(4, 1)));
        assert_eq!(q_s(L3, &[q(1, 1), q(1, 1)]).unwrap(), Ext::Fin(q(3, 1)));
    }

    #[test]
    fn p_s_examples() {
        assert_eq!(p_s(L3, &[q(3, 2), q(3, 2)]).unwrap(), Ext::Inf);
        // m_1 − s_1 = 1 − 1/2 = 1/2, (1/2 + 3/2)/(1/2) = 4
        assert_eq!(p_s(L3, &[q(1, 2), q(1, 2)]).unwrap(), Ext::Fin(q(5, 1)));
        let s = [q(3, 2), q(3, 2)];
        assert_eq!(q_s_p(L3, &s, &Ext::Fin(q(2, 1))).unwrap(), Ext::Fin(q(8, 1)));
        assert_eq!(q_s_p(L3, &s, &Ext::Fin(q(1, 1))).unwrap(), Ext::Fin(q(4, 1)));
        assert_eq!(q_s_p(L3, &s, &Ext::Inf).unwrap(), Ext::Fin(q(4, 1)));
    }

    #[test]
    fn projector_window_examples() {
        let r = projector_window(AlgebraKind::Rank1, &Ext::Fin(q(2, 1)), &q(2, 1), &[q(2, 1)]).unwrap();
        assert!(r.satisfied);
        let r = projector_window(L3, &Ext::Fin(q(2, 1)), &q(2, 1), &[q(3, 2), q(3, 2)]).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.case, WindowCase::Full);
        assert_eq!(r.q_s_p, Ext::Fin(q(8, 1)));
        let r = projector_window(L3, &Ext::Fin(q(2, 1)), &q(8, 1), &[q(3, 2), q(3, 2)]).unwrap();
        assert!(!r.satisfied);
        let r = projector_window(L3, &Ext::Fin(q(2, 1)), &q(8, 7), &[q(3, 2), q(3, 2)]).unwrap();
        assert!(!r.satisfied);
        let r = projector_window(L3, &Ext::Fin(q(2, 1)), &q(7, 1), &[q(3, 2), q(3, 2)]).unwrap();
        assert!(r.satisfied);
    }

    #[test]
    fn projector_window_restricted_case_only() {
        // s_1 = 2/5 is below n/r − 1 = 1/2; p_s = 25/6
        let s = [q(2, 5), q(3, 5)];
        let r = projector_window(L3, &Ext::Fin(q(1, 1)), &q(2, 1), &s).unwrap();
        assert_eq!(r.case, WindowCase::Restricted);
        assert_eq!(r.p_s, Ext::Fin(q(25, 6)));
    }

    #[test]
    fn positive_window_examples() {
        let s = [q(3, 2), q(3, 2)];
        let t: Vec<Q> = s.iter().map(|v| v + q(7, 2)).collect();
        assert!(positive_window(L3, &s, &t, &q(1, 1)).unwrap());
        assert!(!positive_window(L3, &s, &[q(1, 2), q(5, 1)], &q(1, 1)).unwrap());
        // q > 1: lower max(1, (3/2 + 1/2)/5) = 1, upper 1 + min(1, 3) = 2
        assert!(positive_window(L3, &s, &t, &q(3, 2)).unwrap());
        assert!(!positive_window(L3, &s, &t, &q(2, 1)).unwrap());
    }

    #[test]
    fn interpolate_examples() {
        let a = MixedParams::new(L3, Ext::Fin(q(2, 1)), q(2, 1), vec![q(1, 1), q(1, 1)]).unwrap();
        let b = MixedParams::new(L3, Ext::Fin(q(4, 1)), q(2, 1), vec![q(3, 1), q(2, 1)]).unwrap();
        let m = interpolate(&q(1, 2), &a, &b).unwrap();
        assert_eq!(m.p, Ext::Fin(q(8, 3)));
        assert_eq!(m.s, vec![q(2, 1), q(3, 2)]);
        assert_eq!(interpolate(&q(1, 3), &a, &a).unwrap(), a);
        assert!(interpolate(&q(0, 1), &a, &b).is_err());
        let near = interpolate(&1e-12f64, &MixedParams::new(L3, Ext::Fin(2.0), 2.0, vec![1.0, 1.0]).unwrap(),
            &MixedParams::new(L3, Ext::Fin(4.0), 3.0, vec![3.0, 2.0]).unwrap()).unwrap();
        assert!((near.p.to_f64() - 2.0).abs() < 1e-9 && (near.q - 2.0).abs() < 1e-9);
        assert!((near.s[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wolff_examples() {
        assert_eq!(wolff(&q(1, 2), &q(1, 2)).unwrap(), (q(1, 3), q(2, 3)));
        let (xi, psi) = wolff(&0.3, &(1.0 - 1e-12)).unwrap();
        assert!((xi - 0.3).abs() < 1e-9 && (psi - 1.0).abs() < 1e-9);
        assert!(wolff(&q(1, 1), &q(1, 2)).is_err());
    }

    #[test]
    fn reiteration_example() {
        let s = [q(3, 2), q(3, 2)];
        let phi = q(1, 2);
        let theta = reiteration_theta(&q(3, 2), &q(6, 1), &phi).unwrap();
        assert_eq!(theta, q(1, 2));
        let rep = reiteration_solve(L3, &s, &Ext::Fin(q(2, 1)), &q(3, 2), &Ext::Fin(q(4, 1)), &q(6, 1), &theta, &phi).unwrap();
        assert!(rep.admissible);
        assert_eq!(rep.phi_bound, Ext::Fin(q(3, 4)));
        assert_eq!(rep.q3, q(3, 1));
        assert_eq!((rep.xi.clone(), rep.psi.clone()), (q(1, 3), q(2, 3)));
        // 1/p2 = (2/3)(1/2) + (1/3)(1/4) = 5/12
        assert_eq!(rep.p2, Ext::Fin(q(12, 5)));
        // 1/p3 = (1/2)(5/12) + (1/2)(1/4) = 1/3
        assert_eq!(rep.p3, Ext::Fin(q(3, 1)));
    }

    #[test]
    fn reiteration_phi_bound_violation() {
        let s = [q(3, 2), q(3, 2)];
        let phi = q(99, 100);
        let theta = reiteration_theta(&q(3, 2), &q(6, 1), &phi).unwrap();
        let rep = reiteration_solve(L3, &s, &Ext::Inf, &q(3, 2), &Ext::Inf, &q(6, 1), &theta, &phi).unwrap();
        assert!(rep.balance_ok && rep.hypotheses_ok);
        assert!(!rep.phi_ok && !rep.admissible);
    }

    #[test]
    fn reiteration_bound_is_one_when_q1_equals_q_s() {
        let s = [q(3, 2), q(3, 2)];
        let phi = q(99, 100);
        let theta = reiteration_theta(&q(3, 2), &q(4, 1), &phi).unwrap();
        let rep = reiteration_solve(L3, &s, &Ext::Inf, &q(3, 2), &Ext::Inf, &q(4, 1), &theta, &phi).unwrap();
        assert_eq!(rep.phi_bound, Ext::Fin(q(1, 1)));
        assert!(rep.phi_ok);
    }

    #[test]
    fn float_boundary_is_strict() {
        let r = projector_window(L3, &Ext::Fin(2.0), &8.0, &[1.5, 1.5]).unwrap();
        assert!(!r.satisfied);
    }
}
