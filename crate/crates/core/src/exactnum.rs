//! Exact rational arithmetic and certified interval comparisons.
//!
//! Every decision taken by the enumeration code bottoms out here: a real
//! number is held as a rational midpoint plus a rational radius, and two
//! values are only ordered once their enclosures are disjoint. Values that
//! come from a [`Generator`] can be refined on demand.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational number, always in lowest terms with a positive denominator.
pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(v: impl Into<BigInt>) -> Rat {
    Rat::from_integer(v.into())
}

/// Formats as `"num/den"`, the wire format used by every file this crate writes.
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| bad())?;
    let den = BigInt::from_str(den).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rat::new(num, den))
}

/// Serde adapter for [`Rat`] as a `"num/den"` string.
pub mod serde_rat {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for [`BigInt`] as a decimal string.
pub mod serde_bigint {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        BigInt::from_str(s.trim()).map_err(serde::de::Error::custom)
    }
}

/// Natural log of a positive big integer, accurate to about 1e-15 relative.
pub fn ln_bigint(v: &BigInt) -> f64 {
    assert!(v.sign() == Sign::Plus, "ln of non-positive integer");
    let bits = v.bits();
    if bits <= 64 {
        return v.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational.
pub fn ln_rat(r: &Rat) -> f64 {
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    sign * ln_rat(&r.abs()).exp()
}

/// `floor(r + 1/2)`: nearest integer, halves rounded up.
pub fn round_half_up(r: &Rat) -> BigInt {
    let twice = r * rat_int(2) + Rat::one();
    twice.numer().div_floor(&(twice.denom() * BigInt::from(2)))
}

/// An integer vector with its sup-norm cached.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntVec {
    coords: Vec<BigInt>,
    supnorm: BigInt,
}

impl IntVec {
    pub fn new(coords: Vec<BigInt>) -> Self {
        let supnorm = coords
            .iter()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigInt::zero);
        IntVec { coords, supnorm }
    }

    pub fn from_i64(coords: &[i64]) -> Self {
        Self::new(coords.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    pub fn supnorm(&self) -> &BigInt {
        &self.supnorm
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.supnorm.is_zero()
    }

    pub fn concat(&self, other: &IntVec) -> IntVec {
        let mut c = self.coords.clone();
        c.extend(other.coords.iter().cloned());
        IntVec::new(c)
    }

    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.coords.iter().map(|c| c.to_i64()).collect()
    }

    /// `"a;b;c"`, the CSV cell format.
    pub fn join(&self) -> String {
        self.coords
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse_joined(s: &str) -> Result<IntVec> {
        if s.trim().is_empty() {
            return Ok(IntVec::new(vec![]));
        }
        s.split(';')
            .map(|p| {
                BigInt::from_str(p.trim()).map_err(|_| Error::Parse(format!("bad integer {p:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(IntVec::new)
    }
}

impl fmt::Display for IntVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.join().replace(';', ", "))
    }
}

impl Serialize for IntVec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntVec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| BigInt::from_str(s).map_err(serde::de::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(IntVec::new)
    }
}

/// Bit length above which Liouville refinement stops adding terms.
const LIOUVILLE_MAX_DENOM_BITS: u64 = 1 << 22;
/// Precision of a square-root enclosure at depth 0, in bits.
const SQRT_BASE_BITS: u64 = 128;

/// Digit stream in {1, 2} for one row of a Liouville column.
pub fn liouville_digits(seed: u64, row: usize) -> impl Iterator<Item = u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    std::iter::repeat_with(move || if rng.random::<bool>() { 2 } else { 1 })
}

/// Source of arbitrarily tight enclosures for one real number.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `offset + scale * sqrt(radicand)`.
    AffineSqrt {
        #[serde(with = "serde_rat")]
        offset: Rat,
        #[serde(with = "serde_rat")]
        scale: Rat,
        #[serde(with = "serde_rat")]
        radicand: Rat,
    },
    /// `sum_k d_k / q_k` with `q_1 = q1`, `q_{k+1} = q_k^power`; the first
    /// digits are explicit and the tail continues the seeded digit stream.
    Liouville {
        #[serde(with = "serde_bigint")]
        q1: BigInt,
        power: u32,
        digits: Vec<u8>,
        tail_seed: u64,
        row: usize,
    },
}

impl Generator {
    pub fn sqrt_affine(offset: Rat, scale: Rat, radicand: Rat) -> Self {
        Generator::AffineSqrt {
            offset,
            scale,
            radicand,
        }
    }

    /// Enclosure `(mid, rad)` at the given depth; `rad` strictly decreases in depth
    /// (Liouville terms stop growing once the denominator passes 2^22 bits).
    pub fn enclosure(&self, depth: u32) -> (Rat, Rat) {
        match self {
            Generator::AffineSqrt {
                offset,
                scale,
                radicand,
            } => {
                let bits = SQRT_BASE_BITS * (depth as u64 + 1);
                let (m, r) = sqrt_enclosure(radicand, bits);
                (offset + scale * m, scale.abs() * r)
            }
            Generator::Liouville {
                q1,
                power,
                digits,
                tail_seed,
                row,
            } => {
                let base_terms = digits.len();
                let mut terms = base_terms + depth as usize;
                let q1_bits = q1.bits().max(1);
                // q_{terms+1} has q1_bits * power^terms bits
                while terms > base_terms
                    && (*power as f64).powi(terms as i32) * q1_bits as f64
                        > LIOUVILLE_MAX_DENOM_BITS as f64
                {
                    terms -= 1;
                }
                let all: Vec<u8> = digits
                    .iter()
                    .copied()
                    .chain(liouville_digits(*tail_seed, *row).skip(base_terms))
                    .take(terms)
                    .collect();
                liouville_partial(q1, *power, &all)
            }
        }
    }
}

/// Denominators `q_1..q_count` of the schedule `q_{k+1} = q_k^power`.
pub fn liouville_denominators(q1: &BigInt, power: u32, count: usize) -> Vec<BigInt> {
    let mut qs = Vec::with_capacity(count);
    let mut q = q1.clone();
    for _ in 0..count {
        qs.push(q.clone());
        q = num_traits::pow(q, power as usize);
    }
    qs
}

/// Partial sum over the given digits and the tail radius `3 / q_{K+1}`.
pub fn liouville_partial(q1: &BigInt, power: u32, digits: &[u8]) -> (Rat, Rat) {
    let qs = liouville_denominators(q1, power, digits.len() + 1);
    let last = qs.last().unwrap().clone();
    // common denominator q_K; q_k | q_K because the schedule uses integer powers
    let qk = if digits.is_empty() {
        BigInt::one()
    } else {
        qs[digits.len() - 1].clone()
    };
    let mut num = BigInt::zero();
    for (d, q) in digits.iter().zip(&qs) {
        num += BigInt::from(*d) * (&qk / q);
    }
    (Rat::new(num, qk), Rat::new(BigInt::from(3), last))
}

fn sqrt_enclosure(r: &Rat, bits: u64) -> (Rat, Rat) {
    assert!(!r.is_negative(), "sqrt of negative rational");
    let (a, b) = (r.numer(), r.denom());
    let scale = BigInt::one() << (2 * bits);
    let s = (a * b * scale).sqrt();
    let den = b * (BigInt::one() << bits) * BigInt::from(2);
    let mid = Rat::new(BigInt::from(2) * s + BigInt::one(), den.clone());
    (mid, Rat::new(BigInt::one(), den))
}

/// A real number known to lie in `[mid - rad, mid + rad]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifiedValue {
    mid: Rat,
    rad: Rat,
    generator: Option<Generator>,
}

impl CertifiedValue {
    pub fn exact(v: Rat) -> Self {
        CertifiedValue {
            mid: v,
            rad: Rat::zero(),
            generator: None,
        }
    }

    pub fn interval(mid: Rat, rad: Rat) -> Self {
        assert!(!rad.is_negative(), "negative radius");
        CertifiedValue {
            mid,
            rad,
            generator: None,
        }
    }

    pub fn from_generator(g: Generator) -> Self {
        let (mid, rad) = g.enclosure(0);
        CertifiedValue {
            mid,
            rad,
            generator: Some(g),
        }
    }

    /// Rebuilds a value from its serialized parts; a generator, when present,
    /// is trusted to enclose the same real as `(mid, rad)`.
    pub fn from_parts(mid: Rat, rad: Rat, generator: Option<Generator>) -> Result<Self> {
        if rad.is_negative() {
            return Err(Error::Parse("negative radius".into()));
        }
        Ok(CertifiedValue {
            mid,
            rad,
            generator,
        })
    }

    pub fn mid(&self) -> &Rat {
        &self.mid
    }

    pub fn rad(&self) -> &Rat {
        &self.rad
    }

    pub fn generator(&self) -> Option<&Generator> {
        self.generator.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    pub fn lo(&self) -> Rat {
        &self.mid - &self.rad
    }

    pub fn hi(&self) -> Rat {
        &self.mid + &self.rad
    }

    pub fn can_refine(&self) -> bool {
        self.generator.is_some() && !self.is_exact()
    }

    /// Enclosure at `depth`; values without a generator are returned unchanged.
    pub fn refined(&self, depth: u32) -> CertifiedValue {
        match &self.generator {
            Some(g) if depth > 0 && !self.is_exact() => {
                let (mid, rad) = g.enclosure(depth);
                // never widen past the stored enclosure
                if rad < self.rad {
                    CertifiedValue {
                        mid,
                        rad,
                        generator: Some(g.clone()),
                    }
                } else {
                    self.clone()
                }
            }
            _ => self.clone(),
        }
    }

    pub fn add(&self, other: &CertifiedValue) -> CertifiedValue {
        CertifiedValue::interval(&self.mid + &other.mid, &self.rad + &other.rad)
    }

    pub fn scale_int(&self, k: &BigInt) -> CertifiedValue {
        let k = rat_int(k.clone());
        CertifiedValue::interval(&self.mid * &k, &self.rad * k.abs())
    }

    pub fn mul(&self, other: &CertifiedValue) -> CertifiedValue {
        let rad = self.mid.abs() * &other.rad + other.mid.abs() * &self.rad + &self.rad * &other.rad;
        CertifiedValue::interval(&self.mid * &other.mid, rad)
    }

    pub fn contains_zero(&self) -> bool {
        self.lo() <= Rat::zero() && self.hi() >= Rat::zero()
    }
}

impl fmt::Display for CertifiedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", format_rat(&self.mid))
        } else {
            write!(f, "{} ± {}", format_rat(&self.mid), format_rat(&self.rad))
        }
    }
}

#[derive(Serialize)]
struct CertifiedValueWire {
    #[serde(with = "serde_rat")]
    mid: Rat,
    #[serde(with = "serde_rat")]
    rad: Rat,
    #[serde(default)]
    spec: Option<Generator>,
}

impl Serialize for CertifiedValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CertifiedValueWire {
            mid: self.mid.clone(),
            rad: self.rad.clone(),
            spec: self.generator.clone(),
        }
        .serialize(s)
    }
}

#[derive(Deserialize)]
struct CertifiedValueInput {
    mid: Option<String>,
    rad: Option<String>,
    #[serde(default)]
    spec: Option<Generator>,
}

/// `mid` and `rad` may be omitted when `spec` is given; `rad` defaults to 0.
impl<'de> Deserialize<'de> for CertifiedValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = CertifiedValueInput::deserialize(d)?;
        let parse = |s: &str| parse_rat(s).map_err(D::Error::custom);
        match (w.mid, w.rad, w.spec) {
            (None, None, Some(g)) => Ok(CertifiedValue::from_generator(g)),
            (Some(mid), rad, spec) => {
                let rad = rad.as_deref().map(parse).transpose()?.unwrap_or_else(Rat::zero);
                CertifiedValue::from_parts(parse(&mid)?, rad, spec).map_err(D::Error::custom)
            }
            _ => Err(D::Error::custom("entry needs `mid` or `spec`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOutcome {
    Less,
    Greater,
    Equal,
    Unresolved,
}

impl CmpOutcome {
    pub fn reverse(self) -> CmpOutcome {
        match self {
            CmpOutcome::Less => CmpOutcome::Greater,
            CmpOutcome::Greater => CmpOutcome::Less,
            o => o,
        }
    }

    pub fn ordering(self) -> Option<Ordering> {
        match self {
            CmpOutcome::Less => Some(Ordering::Less),
            CmpOutcome::Greater => Some(Ordering::Greater),
            CmpOutcome::Equal => Some(Ordering::Equal),
            CmpOutcome::Unresolved => None,
        }
    }
}

fn cmp_once(a: &CertifiedValue, b: &CertifiedValue) -> CmpOutcome {
    if a.hi() < b.lo() {
        CmpOutcome::Less
    } else if a.lo() > b.hi() {
        CmpOutcome::Greater
    } else if a.is_exact() && b.is_exact() && a.mid == b.mid {
        CmpOutcome::Equal
    } else {
        CmpOutcome::Unresolved
    }
}

/// Depth schedule for refinement retries: 1, 2, 4, ... up to `max_depth`.
pub fn depth_schedule(max_depth: u32) -> impl Iterator<Item = u32> {
    std::iter::successors(Some(1u32), |d| d.checked_mul(2)).take_while(move |&d| d <= max_depth)
}

/// Compares two lazily refined values. `fa(0)`/`fb(0)` are the base
/// enclosures; deeper ones are requested only while the comparison is open.
pub fn cmp_refining<F, G>(mut fa: F, mut fb: G, max_depth: u32, refinable: bool) -> CmpOutcome
where
    F: FnMut(u32) -> CertifiedValue,
    G: FnMut(u32) -> CertifiedValue,
{
    let out = cmp_once(&fa(0), &fb(0));
    if out != CmpOutcome::Unresolved || !refinable {
        return out;
    }
    for depth in depth_schedule(max_depth) {
        let out = cmp_once(&fa(depth), &fb(depth));
        if out != CmpOutcome::Unresolved {
            return out;
        }
    }
    CmpOutcome::Unresolved
}

/// Certified comparison. `Less`/`Greater` only for disjoint enclosures,
/// `Equal` only for identical exact rationals.
pub fn cmp_certified(a: &CertifiedValue, b: &CertifiedValue, max_depth: u32) -> CmpOutcome {
    let refinable = a.can_refine() || b.can_refine();
    cmp_refining(|d| a.refined(d), |d| b.refined(d), max_depth, refinable)
}

/// Result of [`nearest_int_dist`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NearestInt {
    pub dist: CertifiedValue,
    pub y: IntVec,
    pub tie: bool,
}

/// Sup-norm distance to the nearest integer vector.
pub fn nearest_int_dist(v: &[CertifiedValue]) -> NearestInt {
    assert!(!v.is_empty(), "nearest_int_dist of empty vector");
    let half = rat(1, 2);
    let mut y = Vec::with_capacity(v.len());
    let mut dist = Rat::zero();
    let mut rad = Rat::zero();
    let mut tie = false;
    for c in v {
        let yi = round_half_up(c.mid());
        let d = (c.mid() - rat_int(yi.clone())).abs();
        if c.is_exact() {
            tie |= d == half;
        } else {
            tie |= &d + c.rad() >= half;
        }
        if d > dist {
            dist = d;
        }
        if c.rad() > &rad {
            rad = c.rad().clone();
        }
        y.push(yi);
    }
    NearestInt {
        dist: CertifiedValue::interval(dist, rad),
        y: IntVec::new(y),
        tie,
    }
}

/// Certified upper bound check `value <= bound`, refining when possible.
pub fn certify_le(
    value: &CertifiedValue,
    bound: &CertifiedValue,
    max_depth: u32,
) -> Option<bool> {
    match cmp_certified(value, bound, max_depth) {
        CmpOutcome::Less | CmpOutcome::Equal => Some(true),
        CmpOutcome::Greater => Some(false),
        CmpOutcome::Unresolved => {
            if value.hi() <= bound.lo() {
                Some(true)
            } else {
                None
            }
        }
    }
}

/// Integer ceiling of a non-negative rational.
pub fn ceil_rat(r: &Rat) -> BigInt {
    r.numer().div_ceil(r.denom())
}

impl FromStr for CertifiedValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_rat(s).map(CertifiedValue::exact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex(n: i64, d: i64) -> CertifiedValue {
        CertifiedValue::exact(rat(n, d))
    }

    #[test]
    fn cmp_exact_rationals() {
        assert_eq!(cmp_certified(&ex(1, 3), &ex(1, 2), 0), CmpOutcome::Less);
        assert_eq!(cmp_certified(&ex(2, 7), &ex(2, 7), 0), CmpOutcome::Equal);
    }

    #[test]
    fn cmp_overlap_without_refine_is_unresolved() {
        let a = CertifiedValue::interval(rat(1, 2), rat(1, 100));
        assert_eq!(cmp_certified(&a, &ex(1, 2), 0), CmpOutcome::Unresolved);
        assert_eq!(cmp_certified(&a, &ex(1, 2), 8), CmpOutcome::Unresolved);
    }

    #[test]
    fn non_exact_values_never_certify_equal() {
        let g = Generator::sqrt_affine(rat(0, 1), rat(1, 1), rat(2, 1));
        let a = CertifiedValue::from_generator(g.clone());
        let b = CertifiedValue::from_generator(g);
        assert_eq!(cmp_certified(&a, &b, 4), CmpOutcome::Unresolved);
    }

    #[test]
    fn refinement_separates_close_values() {
        // sqrt(2) against a rational 2^-200 above it
        let g = Generator::sqrt_affine(rat(0, 1), rat(1, 1), rat(2, 1));
        let a = CertifiedValue::from_generator(g.clone());
        let (m, _) = g.enclosure(6);
        let b = CertifiedValue::exact(m + Rat::new(BigInt::one(), BigInt::one() << 200u32));
        assert_eq!(cmp_certified(&a, &b, 0), CmpOutcome::Unresolved);
        assert_eq!(cmp_certified(&a, &b, 8), CmpOutcome::Less);
    }

    #[test]
    fn sqrt_enclosure_contains_root() {
        let g = Generator::sqrt_affine(rat(-1, 2), rat(1, 2), rat(5, 1));
        for depth in [0, 1, 3] {
            let (m, r) = g.enclosure(depth);
            let lo = &m - &r;
            let hi = &m + &r;
            // (2x+1)^2 = 5 at the golden ratio conjugate
            let f = |x: &Rat| {
                let t = x * rat_int(2) + Rat::one();
                &t * &t - rat_int(5)
            };
            assert!(f(&lo) < Rat::zero() && f(&hi) > Rat::zero());
        }
        assert!(g.enclosure(2).1 < g.enclosure(1).1);
    }

    #[test]
    fn liouville_partial_sum_matches_hand_value() {
        let (m, r) = liouville_partial(&BigInt::from(2), 3, &[1, 1, 1, 1]);
        let expect = rat(1, 2) + rat(1, 8) + rat(1, 512) + Rat::new(BigInt::one(), BigInt::one() << 27u32);
        assert_eq!(m, expect);
        assert_eq!(r, Rat::new(BigInt::from(3), BigInt::one() << 81u32));
    }

    #[test]
    fn liouville_refinement_is_nested() {
        let g = Generator::Liouville {
            q1: BigInt::from(2),
            power: 3,
            digits: vec![1, 2, 1],
            tail_seed: 5,
            row: 1,
        };
        let (m0, r0) = g.enclosure(0);
        let (m1, r1) = g.enclosure(1);
        assert!(r1 < r0);
        assert!(&m1 - &r1 >= &m0 - &r0 && &m1 + &r1 <= &m0 + &r0);
    }

    #[test]
    fn nearest_int_examples() {
        let r = nearest_int_dist(&[ex(1, 3)]);
        assert_eq!(r.dist, ex(1, 3));
        assert_eq!(r.y, IntVec::from_i64(&[0]));
        assert!(!r.tie);

        let r = nearest_int_dist(&[ex(1, 2)]);
        assert_eq!(r.dist, ex(1, 2));
        assert!(r.y == IntVec::from_i64(&[0]) || r.y == IntVec::from_i64(&[1]));
        assert!(r.tie);

        let r = nearest_int_dist(&[ex(9, 4), ex(-9, 10)]);
        assert_eq!(r.dist, ex(1, 4));
        assert_eq!(r.y, IntVec::from_i64(&[2, -1]));
        assert!(!r.tie);
    }

    #[test]
    fn rat_wire_format() {
        assert_eq!(format_rat(&rat(-6, 4)), "-3/2");
        assert_eq!(parse_rat("-3/2").unwrap(), rat(-3, 2));
        assert_eq!(parse_rat("7").unwrap(), rat(7, 1));
        assert!(parse_rat("1/0").is_err());
        let v = CertifiedValue::interval(rat(1, 3), rat(1, 1000));
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"mid":"1/3","rad":"1/1000","spec":null}"#);
        assert_eq!(serde_json::from_str::<CertifiedValue>(&s).unwrap(), v);
    }

    fn arb_rat() -> impl Strategy<Value = Rat> {
        (any::<i64>(), 1..i64::MAX).prop_map(|(n, d)| rat(n, d))
    }

    proptest! {
        #[test]
        fn rat_add_sub_roundtrip(a in arb_rat(), b in arb_rat()) {
            prop_assert_eq!(&(&a + &b) - &b, a);
        }

        #[test]
        fn cmp_antisymmetric(a in arb_rat(), b in arb_rat(), ra in 0..1000i64, rb in 0..1000i64) {
            let x = CertifiedValue::interval(a.clone(), rat(ra, 1_000_000));
            let y = CertifiedValue::interval(b.clone(), rat(rb, 1_000_000));
            prop_assert_eq!(cmp_certified(&x, &y, 0), cmp_certified(&y, &x, 0).reverse());
            if ra == 0 && rb == 0 {
                let expect = match a.cmp(&b) {
                    Ordering::Less => CmpOutcome::Less,
                    Ordering::Greater => CmpOutcome::Greater,
                    Ordering::Equal => CmpOutcome::Equal,
                };
                prop_assert_eq!(cmp_certified(&x, &y, 0), expect);
            }
        }

        #[test]
        fn nearest_int_shift_invariant(
            nums in proptest::collection::vec(-10_000i64..10_000, 1..4),
            den in 1i64..500,
            shift in proptest::collection::vec(-50i64..50, 4),
        ) {
            let v: Vec<_> = nums.iter().map(|&n| ex(n, den)).collect();
            let w: Vec<_> = nums.iter().zip(&shift).map(|(&n, &s)| ex(n + s * den, den)).collect();
            let a = nearest_int_dist(&v);
            let b = nearest_int_dist(&w);
            prop_assert!(a.dist.mid() <= &rat(1, 2));
            prop_assert_eq!(&a.dist, &b.dist);
            for (i, (ya, yb)) in a.y.coords().iter().zip(b.y.coords()).enumerate() {
                prop_assert_eq!(ya + BigInt::from(shift[i]), yb.clone());
            }
        }
    }
}
