//! Offspring laws and Poisson point processes.
//!
//! Atoms of the driving process live on a rectangle `[x_lo, x_hi] x [t_lo, t_hi]`
//! with intensity `du dt mu`. Sinks live on a vertical edge with intensity
//! `ds / (lambda + (1 - alpha) s)`, sampled by inverting the closed-form
//! cumulative intensity.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Law of the initial number of lives. All mass sits on `{1, 2, ...}`.
#[derive(Debug, Clone, PartialEq)]
pub enum OffspringDistribution<R> {
    Dirac(u32),
    /// `P(k) = alpha (1 - alpha)^(k-1)` for `k >= 1`, mean `1 / alpha`.
    Geometric(R),
    /// Finite table, sorted by value, probabilities summing to one.
    Table(Vec<(u32, R)>),
}

const TABLE_SUM_TOL: f64 = 1e-12;

impl<R: Real> OffspringDistribution<R> {
    pub fn dirac(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDistribution("dirac mass at 0".into()));
        }
        Ok(Self::Dirac(k))
    }

    pub fn geometric(alpha: R) -> Result<Self> {
        if !(alpha > R::zero() && alpha <= R::one()) {
            return Err(Error::InvalidDistribution(format!(
                "geometric parameter {alpha} outside (0, 1]"
            )));
        }
        Ok(Self::Geometric(alpha))
    }

    /// Builds a table law; weights must sum to one within `1e-12`.
    pub fn table(weights: impl IntoIterator<Item = (u32, R)>) -> Result<Self> {
        Self::table_with_tolerance(weights, TABLE_SUM_TOL)
    }

    /// Builds a table law, accepting a total mass within `tol` of one and
    /// renormalizing.
    pub fn table_with_tolerance(weights: impl IntoIterator<Item = (u32, R)>, tol: f64) -> Result<Self> {
        let mut entries: Vec<(u32, R)> = Vec::new();
        for (k, p) in weights {
            if k == 0 {
                return Err(Error::InvalidDistribution("mass at 0 (leaves) is not supported".into()));
            }
            if !p.is_finite() || p < R::zero() {
                return Err(Error::InvalidDistribution(format!("bad probability {p} for {k}")));
            }
            if entries.iter().any(|&(j, _)| j == k) {
                return Err(Error::InvalidDistribution(format!("value {k} listed twice")));
            }
            if p > R::zero() {
                entries.push((k, p));
            }
        }
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("empty table".into()));
        }
        entries.sort_by_key(|&(k, _)| k);
        let total = entries.iter().fold(R::zero(), |acc, &(_, p)| acc + p);
        if (total.as_f64() - 1.0).abs() > tol {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        for e in &mut entries {
            e.1 = e.1 / total;
        }
        Ok(Self::Table(entries))
    }

    pub fn mean(&self) -> R {
        match self {
            Self::Dirac(k) => R::lit(f64::from(*k)),
            Self::Geometric(a) => R::one() / *a,
            Self::Table(t) => t
                .iter()
                .fold(R::zero(), |acc, &(k, p)| acc + R::lit(f64::from(k)) * p),
        }
    }

    /// Probability of exactly `k` lives.
    pub fn pmf(&self, k: u32) -> R {
        match self {
            Self::Dirac(j) => {
                if *j == k {
                    R::one()
                } else {
                    R::zero()
                }
            }
            Self::Geometric(a) => {
                if k == 0 {
                    R::zero()
                } else {
                    *a * (R::one() - *a).powi(k as i32 - 1)
                }
            }
            Self::Table(t) => t
                .iter()
                .find(|&&(j, _)| j == k)
                .map_or(R::zero(), |&(_, p)| p),
        }
    }

    /// The support with its weights, if finite.
    pub fn finite_support(&self) -> Option<Vec<(u32, R)>> {
        match self {
            Self::Dirac(k) => Some(vec![(*k, R::one())]),
            Self::Geometric(a) if *a == R::one() => Some(vec![(1, R::one())]),
            Self::Geometric(_) => None,
            Self::Table(t) => Some(t.clone()),
        }
    }

    pub fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> u32 {
        match self {
            Self::Dirac(k) => *k,
            Self::Geometric(a) => {
                if *a == R::one() {
                    return 1;
                }
                let u = R::sample_open_unit(rng);
                let k = (u.ln() / (R::one() - *a).ln()).floor();
                k.to_u32().unwrap_or(u32::MAX - 1).saturating_add(1)
            }
            Self::Table(t) => {
                let u = R::sample_unit(rng);
                let mut acc = R::zero();
                for &(k, p) in t {
                    acc = acc + p;
                    if u < acc {
                        return k;
                    }
                }
                t[t.len() - 1].0
            }
        }
    }
}

/// Draws one offspring count.
pub fn sample_offspring<R: Real, G: Rng + ?Sized>(dist: &OffspringDistribution<R>, rng: &mut G) -> u32 {
    dist.sample(rng)
}

impl<R: Real> fmt::Display for OffspringDistribution<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dirac(k) => write!(f, "dirac:{k}"),
            Self::Geometric(a) => write!(f, "geom:{a}"),
            Self::Table(t) => {
                write!(f, "table:")?;
                for (i, (k, p)) in t.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}={p}")?;
                }
                Ok(())
            }
        }
    }
}

/// Tolerance on the table mass accepted by the text grammar.
pub const SPEC_SUM_TOL: f64 = 1e-9;

impl<R: Real> FromStr for OffspringDistribution<R> {
    type Err = Error;

    /// Parses `dirac:K`, `geom:ALPHA` or `table:V1=P1,V2=P2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidDistribution(format!("{why} in {s:?}"));
        let (kind, body) = s.trim().split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let num = |x: &str| -> Result<R> {
            let v: f64 = x.trim().parse().map_err(|_| bad("bad number"))?;
            Ok(R::lit(v))
        };
        match kind.trim() {
            "dirac" => {
                let k: u32 = body.trim().parse().map_err(|_| bad("bad integer"))?;
                Self::dirac(k)
            }
            "geom" | "geometric" => Self::geometric(num(body)?),
            "table" => {
                let mut pairs = Vec::new();
                for item in body.split(',') {
                    let (k, p) = item.split_once('=').ok_or_else(|| bad("missing '='"))?;
                    let k: u32 = k.trim().parse().map_err(|_| bad("bad integer"))?;
                    pairs.push((k, num(p)?));
                }
                Self::table_with_tolerance(pairs, SPEC_SUM_TOL)
            }
            _ => Err(bad("unknown law")),
        }
    }
}

impl<R: Real> Serialize for OffspringDistribution<R> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de, R: Real> Deserialize<'de> for OffspringDistribution<R> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A marked point of the driving process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct Atom<R> {
    pub label: R,
    pub time: R,
    pub lives: u32,
}

impl<R: Real> Atom<R> {
    pub fn new(label: R, time: R, lives: u32) -> Self {
        Self { label, time, lives }
    }
}

/// Axis-aligned rectangle `[x_lo, x_hi] x [t_lo, t_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct Rect<R> {
    pub x_lo: R,
    pub x_hi: R,
    pub t_lo: R,
    pub t_hi: R,
}

impl<R: Real> Rect<R> {
    pub fn new(x_lo: R, x_hi: R, t_lo: R, t_hi: R) -> Result<Self> {
        let r = Self { x_lo, x_hi, t_lo, t_hi };
        for v in [x_lo, x_hi, t_lo, t_hi] {
            if !v.is_finite() {
                return Err(Error::NonFinite(v.as_f64()));
            }
        }
        if x_hi < x_lo || t_hi < t_lo {
            return Err(Error::InvalidRectangle(format!(
                "[{x_lo}, {x_hi}] x [{t_lo}, {t_hi}] is inverted"
            )));
        }
        Ok(r)
    }

    pub fn area(&self) -> R {
        (self.x_hi - self.x_lo) * (self.t_hi - self.t_lo)
    }
}

/// Samples the marked PPP with intensity `du dt dist` on `rect`, sorted by time.
///
/// Times are generated by exponential gaps of rate `x_hi - x_lo`, which gives a
/// Poisson count and sorted output in one pass.
pub fn sample_marked_ppp<R: Real, G: Rng + ?Sized>(
    rect: &Rect<R>,
    dist: &OffspringDistribution<R>,
    rng: &mut G,
) -> Vec<Atom<R>> {
    let width = rect.x_hi - rect.x_lo;
    let mut atoms = Vec::new();
    if rect.area() <= R::zero() {
        return atoms;
    }
    let mut t = rect.t_lo;
    loop {
        t = t - R::sample_open_unit(rng).ln() / width;
        if t > rect.t_hi {
            break;
        }
        let label = rect.x_lo + width * R::sample_unit(rng);
        let lives = dist.sample(rng);
        atoms.push(Atom { label, time: t, lives });
    }
    atoms
}

/// Samples a homogeneous PPP of rate `rate` on `[lo, hi]`, sorted.
pub fn sample_homogeneous<R: Real, G: Rng + ?Sized>(rate: R, lo: R, hi: R, rng: &mut G) -> Vec<R> {
    let mut out = Vec::new();
    if rate <= R::zero() || hi <= lo {
        return out;
    }
    let mut x = lo;
    loop {
        x = x - R::sample_open_unit(rng).ln() / rate;
        if x > hi {
            return out;
        }
        out.push(x);
    }
}

/// Intensity `1 / (lambda + (1 - alpha) s)` on the half-line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real")]
pub struct SinkIntensity<R> {
    pub lambda: R,
    pub alpha: R,
}

impl<R: Real> SinkIntensity<R> {
    pub fn new(lambda: R, alpha: R) -> Result<Self> {
        if !(lambda >= R::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
        }
        if !(alpha > R::zero() && alpha <= R::one()) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1]")));
        }
        if lambda == R::zero() && alpha == R::one() {
            return Err(Error::InvalidParameter(
                "lambda = 0 with alpha = 1 gives a non-integrable sink intensity".into(),
            ));
        }
        Ok(Self { lambda, alpha })
    }

    pub fn density(&self, s: R) -> R {
        R::one() / (self.lambda + (R::one() - self.alpha) * s)
    }

    /// Integrated intensity over `[a, b]`.
    pub fn mass(&self, a: R, b: R) -> R {
        let beta = R::one() - self.alpha;
        if beta == R::zero() {
            (b - a) / self.lambda
        } else {
            ((self.lambda + beta * b) / (self.lambda + beta * a)).ln() / beta
        }
    }

    /// The point `s >= a` with `mass(a, s) = m`.
    pub fn quantile(&self, a: R, m: R) -> R {
        let beta = R::one() - self.alpha;
        if beta == R::zero() {
            a + self.lambda * m
        } else {
            ((self.lambda + beta * a) * (beta * m).exp() - self.lambda) / beta
        }
    }

    /// Inverse-transform sampling on `(lo, hi]`.
    pub fn sample<G: Rng + ?Sized>(&self, lo: R, hi: R, rng: &mut G) -> Vec<R> {
        let mut out = Vec::new();
        let mut s = lo;
        if hi <= lo {
            return out;
        }
        loop {
            let e = -R::sample_open_unit(rng).ln();
            s = self.quantile(s, e);
            if s > hi {
                return out;
            }
            out.push(s);
        }
    }
}

/// Sinks on `(0, t_max]` (or `(truncation, t_max]`) with intensity
/// `1 / (lambda + (1 - alpha) s)`.
///
/// With `lambda = 0` the intensity is not integrable at the origin and a
/// truncation height is required; sinks below the first atom never act, so
/// the minimum atom time is the natural choice.
pub fn sample_sink_process<R: Real, G: Rng + ?Sized>(
    lambda: R,
    alpha: R,
    t_max: R,
    truncation: Option<R>,
    rng: &mut G,
) -> Result<Vec<R>> {
    let intensity = SinkIntensity::new(lambda, alpha)?;
    if !(t_max > R::zero()) {
        return Err(Error::InvalidParameter(format!("t_max = {t_max}")));
    }
    let lo = match truncation {
        Some(e) if e >= R::zero() => e,
        Some(e) => return Err(Error::InvalidParameter(format!("truncation {e} < 0"))),
        None if lambda == R::zero() => {
            return Err(Error::InvalidParameter("lambda = 0 needs a truncation height".into()))
        }
        None => R::zero(),
    };
    if lambda == R::zero() && lo == R::zero() {
        return Err(Error::InvalidParameter("lambda = 0 needs a positive truncation height".into()));
    }
    Ok(intensity.sample(lo, t_max, rng))
}
