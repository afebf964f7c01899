//! Liouville-type base matrices, random extensions `Θ = (Θ* | Θ²)`, and the
//! checks that compare the best approximations of the two.
//!
//! The base column uses a shared-denominator series `θ_j = Σ d_{j,k} / q_k`
//! with `q_{k+1} = q_k^⌈u⌉` and digits in {1, 2}. Nothing here certifies
//! algebraic independence of the entries.

use std::io::Write;
use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{best_sequence_with, ApproxConfig, ApproxSequence, MatrixTheta, ThetaEval};
use crate::error::{Error, Result};
use crate::exactnum::{
    ceil_rat, liouville_denominators, liouville_digits, rat, rat_int, rat_to_f64, serde_bigint,
    serde_rat, CertifiedValue, CmpOutcome, Generator, IntVec, Rat,
};
use crate::scan::{scan_shells, BelowSink, FixedKernel};

/// Margin added to `1/(1-γ)` in the schedule inequality for `γ < 1`.
pub fn schedule_margin() -> Rat {
    rat(1, 10)
}

/// Smallest admissible schedule exponent for a target `γ`.
pub fn min_schedule(gamma: &Rat) -> Rat {
    if gamma < &Rat::one() {
        (Rat::one() - gamma).recip() + schedule_margin()
    } else {
        gamma + rat_int(2)
    }
}

pub fn check_schedule(gamma: &Rat, u: &Rat) -> Result<()> {
    if !gamma.is_positive() {
        return Err(Error::InvalidSchedule(format!("gamma = {gamma} must be positive")));
    }
    let need = min_schedule(gamma);
    if u < &need {
        return Err(Error::InvalidSchedule(format!(
            "u = {u} is below the required {need} for gamma = {gamma}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiouvilleSpec {
    pub n: usize,
    #[serde(with = "serde_rat")]
    pub gamma: Rat,
    #[serde(with = "serde_rat")]
    pub u: Rat,
    #[serde(with = "serde_bigint")]
    pub q1: BigInt,
    /// Number of explicit terms `K`.
    pub k: usize,
    /// `n x K` digits in {1, 2}.
    pub digits: Vec<Vec<u8>>,
    /// Seed of the digit stream that continues past `K` under refinement.
    pub tail_seed: u64,
}

impl LiouvilleSpec {
    /// Digits drawn from the seeded stream, one stream per row.
    pub fn from_seed(n: usize, gamma: Rat, u: Rat, q1: u64, k: usize, seed: u64) -> Result<Self> {
        let digits = (0..n)
            .map(|row| liouville_digits(seed, row).take(k).collect())
            .collect();
        let spec = LiouvilleSpec {
            n,
            gamma,
            u,
            q1: BigInt::from(q1),
            k,
            digits,
            tail_seed: seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_schedule(&self.gamma, &self.u)?;
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if self.q1 < BigInt::from(2) {
            return Err(Error::InvalidParameter("q1 must be at least 2".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidParameter("K must be at least 2".into()));
        }
        if self.digits.len() != self.n || self.digits.iter().any(|r| r.len() != self.k) {
            return Err(Error::DimensionMismatch(format!(
                "digits must be {} x {}",
                self.n, self.k
            )));
        }
        if self.digits.iter().flatten().any(|&d| d != 1 && d != 2) {
            return Err(Error::InvalidParameter("digits must be 1 or 2".into()));
        }
        Ok(())
    }

    /// `⌈u⌉`.
    pub fn power(&self) -> u32 {
        ceil_rat(&self.u).to_u32().expect("schedule exponent fits in u32")
    }

    /// `q_1 .. q_count`.
    pub fn denominators(&self, count: usize) -> Vec<BigInt> {
        liouville_denominators(&self.q1, self.power(), count)
    }
}

/// The `n x 1` column of refinable Liouville entries.
pub fn liouville_column(spec: &LiouvilleSpec) -> Result<MatrixTheta> {
    spec.validate()?;
    let power = spec.power();
    let entries = (0..spec.n)
        .map(|row| {
            vec![CertifiedValue::from_generator(Generator::Liouville {
                q1: spec.q1.clone(),
                power,
                digits: spec.digits[row].clone(),
                tail_seed: spec.tail_seed,
                row,
            })]
        })
        .collect();
    let prov = serde_json::json!({ "liouville": spec });
    MatrixTheta::new(1, spec.n, entries, prov)
}

/// ChaCha stream of the random base columns.
pub const BASE_STREAM: u64 = 1;
/// ChaCha stream of the extension columns.
pub const EXTENSION_STREAM: u64 = 2;

/// `n x cols` matrix of uniform dyadic rationals in `[0, 1)` with `bits` bits,
/// drawn row-major from ChaCha8 stream `stream` of `seed`.
pub fn random_dyadic(n: usize, cols: usize, seed: u64, stream: u64, bits: u32) -> Result<MatrixTheta> {
    if bits == 0 || bits > 128 {
        return Err(Error::InvalidParameter("precision_bits must be in 1..=128".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let den = BigInt::one() << bits;
    let entries = (0..n)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    let v: u128 = rng.random::<u128>() >> (128 - bits);
                    CertifiedValue::exact(Rat::new(BigInt::from(v), den.clone()))
                })
                .collect()
        })
        .collect();
    MatrixTheta::new(
        cols,
        n,
        entries,
        serde_json::json!({ "random_dyadic": { "seed": seed, "stream": stream, "bits": bits } }),
    )
}

/// Concatenates single columns, then appends `extra` random dyadic columns.
pub fn compose_base(
    cols: &[MatrixTheta],
    extra: usize,
    seed: u64,
    precision_bits: u32,
) -> Result<MatrixTheta> {
    let first = cols
        .first()
        .ok_or_else(|| Error::DimensionMismatch("compose_base needs a column".into()))?;
    let mut parts: Vec<MatrixTheta> = cols.to_vec();
    if extra > 0 {
        parts.push(random_dyadic(first.n(), extra, seed, BASE_STREAM, precision_bits)?);
    }
    let prov: Vec<serde_json::Value> = parts.iter().map(|p| p.provenance().clone()).collect();
    Ok(MatrixTheta::hcat(&parts)?.with_provenance(serde_json::json!({ "compose_base": prov })))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionSpec {
    pub base: MatrixTheta,
    pub m: usize,
    pub seed: u64,
    pub precision_bits: u32,
}

pub const DEFAULT_PRECISION_BITS: u32 = 128;

/// `(Θ* | Θ²)` with `Θ²` uniform dyadic.
pub fn extend_random(spec: &ExtensionSpec) -> Result<MatrixTheta> {
    let k = spec.base.m();
    if spec.m <= k {
        return Err(Error::InvalidParameter(format!(
            "m = {} must exceed the base width {k}",
            spec.m
        )));
    }
    let extra = random_dyadic(spec.base.n(), spec.m - k, spec.seed, EXTENSION_STREAM, spec.precision_bits)?;
    let theta = MatrixTheta::hcat(&[spec.base.clone(), extra])?;
    Ok(theta.with_provenance(serde_json::json!({
        "extension": {
            "base": spec.base.provenance(),
            "m": spec.m,
            "seed": spec.seed,
            "precision_bits": spec.precision_bits,
        }
    })))
}

/// Base records padded with `m - k` zeros between the `x` and `y` parts.
pub fn embedded_sequence(base_seq: &ApproxSequence, m: usize) -> Result<Vec<IntVec>> {
    let k = base_seq.theta.m();
    if m < k {
        return Err(Error::InvalidParameter(format!("m = {m} is below the base width {k}")));
    }
    let pad = IntVec::new(vec![BigInt::zero(); m - k]);
    Ok(base_seq
        .records
        .iter()
        .map(|r| r.x.concat(&pad).concat(&r.y))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", content = "t")]
pub enum Coincidence {
    /// Records and `ψ` agree for all `t >= t0` up to `T`.
    Coincides(u64),
    /// `|x|` of the last record where the two sequences disagree.
    Mismatch(u64),
}

/// Compares already computed sequences of `Θ` and of its leading block.
pub fn compare_sequences(ext: &ApproxSequence, base: &ApproxSequence) -> Result<Coincidence> {
    let emb = embedded_sequence(base, ext.theta.m())?;
    let ez = ext.extended_vectors();
    let (mut i, mut j) = (ez.len(), emb.len());
    while i > 0 && j > 0 && ez[i - 1] == emb[j - 1] && ext.records[i - 1].xnorm == base.records[j - 1].xnorm {
        i -= 1;
        j -= 1;
    }
    if i == ez.len() {
        let last = ext
            .records
            .last()
            .map_or(1, |r| r.xnorm)
            .max(base.records.last().map_or(1, |r| r.xnorm));
        return Ok(Coincidence::Mismatch(last));
    }
    if i == 0 && j == 0 {
        return Ok(Coincidence::Coincides(1));
    }
    Ok(Coincidence::Coincides(ext.records[i].xnorm))
}

/// Whether the best approximations of `theta` and of `base` (its leading
/// columns) agree from some `t0` on, up to `t_max`.
pub fn verify_coincidence(
    theta: &MatrixTheta,
    base: &MatrixTheta,
    t_max: u64,
    cfg: &ApproxConfig,
) -> Result<(Coincidence, ApproxSequence, ApproxSequence)> {
    let k = base.m();
    if base.n() != theta.n() || k > theta.m() {
        return Err(Error::DimensionMismatch("base does not fit inside theta".into()));
    }
    for j in 0..theta.n() {
        for i in 0..k {
            if theta.entry(j, i).mid() != base.entry(j, i).mid() {
                return Err(Error::DimensionMismatch(
                    "base columns are not the leading columns of theta".into(),
                ));
            }
        }
    }
    let ext = best_sequence_with(theta, t_max, cfg)?;
    let bs = best_sequence_with(base, t_max, cfg)?;
    Ok((compare_sequences(&ext, &bs)?, ext, bs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub m: usize,
    pub n: usize,
    /// Upper bounds of `|x_{nu+1}|^m xi_nu^n`.
    #[serde(with = "rat_vec")]
    pub terms: Vec<Rat>,
    #[serde(with = "rat_vec")]
    pub partial_sums: Vec<Rat>,
    /// `term_{nu+1} / term_nu` in floating point.
    pub ratios: Vec<f64>,
    pub all_ratios_below_one: bool,
    pub verdict: SeriesVerdict,
}

mod rat_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(crate::exactnum::format_rat).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rat>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| crate::exactnum::parse_rat(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Partial sums of `Σ |x_{nu+1}|^m xi_nu^n` over the first `count` pairs.
///
/// The verdict is a heuristic on the second half of the ratios: geometric
/// decay (mean log-ratio below ln 0.9, all ratios below 1) reads as
/// convergent, a geometric mean of at least 0.9 as divergent.
pub fn series_partial_sums(
    base_seq: &ApproxSequence,
    m: usize,
    n: usize,
    count: usize,
) -> Result<SeriesReport> {
    let recs = &base_seq.records;
    if count == 0 || recs.len() < count + 1 {
        return Err(Error::InsufficientData(format!(
            "{} records, need count + 1 = {}",
            recs.len(),
            count + 1
        )));
    }
    let mut terms = Vec::with_capacity(count);
    let mut partial_sums = Vec::with_capacity(count);
    let mut acc = Rat::zero();
    for nu in 0..count {
        let xi = recs[nu].xi.hi();
        let t = num_traits::pow(rat_int(recs[nu + 1].xnorm), m) * num_traits::pow(xi, n);
        acc += &t;
        terms.push(t);
        partial_sums.push(acc.clone());
    }
    let ratios: Vec<f64> = terms
        .windows(2)
        .map(|w| {
            if w[0].is_zero() {
                f64::NAN
            } else {
                rat_to_f64(&(&w[1] / &w[0]))
            }
        })
        .collect();
    let all_ratios_below_one = !ratios.is_empty() && terms.windows(2).all(|w| w[1] < w[0]);
    let tail = &ratios[ratios.len() / 2..];
    let verdict = if tail.is_empty() || tail.iter().any(|r| !r.is_finite()) {
        SeriesVerdict::Inconclusive
    } else {
        let mean_ln = tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64;
        if mean_ln >= 0.9f64.ln() {
            SeriesVerdict::Divergent
        } else if tail.iter().all(|&r| r < 1.0) {
            SeriesVerdict::Convergent
        } else {
            SeriesVerdict::Inconclusive
        }
    };
    Ok(SeriesReport {
        m,
        n,
        terms,
        partial_sums,
        ratios,
        all_ratios_below_one,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub step: usize,
    /// `(nu, |x_{nu+step}| / |x_nu|)`
    pub ratios: Vec<(usize, f64)>,
    pub min_ratio: f64,
    pub threshold: f64,
    pub exceeds: bool,
}

pub const DEFAULT_GROWTH_THRESHOLD: f64 = 2.0;

/// Minimum of `|x_{nu+d}| / |x_nu|` over the sequence.
pub fn growth_check(seq: &ApproxSequence, threshold: f64) -> Result<GrowthReport> {
    let d = seq.theta.d();
    let recs = &seq.records;
    if recs.len() < 2 * d + 2 {
        return Err(Error::InsufficientData(format!(
            "{} records, need 2d + 2 = {}",
            recs.len(),
            2 * d + 2
        )));
    }
    let ratios: Vec<(usize, f64)> = (0..recs.len() - d)
        .map(|i| (i + 1, recs[i + d].xnorm as f64 / recs[i].xnorm as f64))
        .collect();
    let min_ratio = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(GrowthReport {
        step: d,
        ratios,
        min_ratio,
        threshold,
        exceeds: min_ratio >= threshold,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadsetConfig {
    /// Largest admissible `(2 |x_{nu+1}| + 1)^m` per sample.
    pub budget: f64,
    /// Constant `c` of the window `max_j |y_j - (Θ* x)_j| <= c |x_tail|`; `None` means `m`.
    pub y_window: Option<u64>,
    pub precision_bits: u32,
    pub max_depth: u32,
}

impl Default for BadsetConfig {
    fn default() -> Self {
        BadsetConfig {
            budget: 1e8,
            y_window: None,
            precision_bits: 64,
            max_depth: crate::approx::DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadsetReport {
    pub nu: usize,
    pub m: usize,
    pub samples: usize,
    pub hits: usize,
    /// Hits that relied on an unresolved comparison (counted as hits).
    pub unresolved: usize,
    pub estimate: f64,
    /// Binomial standard error of `estimate`.
    pub sigma: f64,
    /// `xi_nu^n * |x_{nu+1}|^m`
    pub bound: f64,
    pub bound_ratio: f64,
    pub per_sample: Vec<(usize, bool)>,
}

pub const MIN_MC_SAMPLES: usize = 100;

/// Sample `i` of [`badset_mc`] uses ChaCha stream `MC_STREAM_BASE + i`.
pub const MC_STREAM_BASE: u64 = 1 << 32;

/// Monte Carlo estimate of the measure of the set of `Θ²` for which some
/// `x` with nonzero tail `x_tail`, `|x| <= |x_{nu+1}|`, has `|Θx - y| <= xi_nu`.
pub fn badset_mc(
    base: &MatrixTheta,
    base_seq: &ApproxSequence,
    nu: usize,
    m: usize,
    samples: usize,
    seed: u64,
    cfg: &BadsetConfig,
) -> Result<BadsetReport> {
    let k = base.m();
    let n = base.n();
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "samples = {samples} is below the minimum {MIN_MC_SAMPLES}"
        )));
    }
    if m <= k {
        return Err(Error::InvalidParameter(format!("m = {m} must exceed the base width {k}")));
    }
    if nu == 0 || nu + 1 > base_seq.records.len() {
        return Err(Error::InvalidParameter(format!(
            "nu = {nu} needs records nu and nu+1 (have {})",
            base_seq.records.len()
        )));
    }
    let rec = &base_seq.records[nu - 1];
    let x_next = base_seq.records[nu].xnorm;
    let needed = (2.0 * x_next as f64 + 1.0).powi(m as i32);
    if needed > cfg.budget {
        return Err(Error::BudgetExceeded {
            needed,
            budget: cfg.budget,
        });
    }
    let c = cfg.y_window.unwrap_or(m as u64);
    let xi = rec.xi.clone();

    let outcomes: Vec<Result<(bool, bool)>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let extra = random_dyadic(n, m - k, seed, MC_STREAM_BASE + s as u64, cfg.precision_bits)?;
            let theta = MatrixTheta::hcat(&[base.clone(), extra])?;
            one_sample(&theta, base_seq, nu, k, c, x_next, cfg)
        })
        .collect();
    let mut per_sample = Vec::with_capacity(samples);
    let mut hits = 0;
    let mut unresolved = 0;
    for (s, o) in outcomes.into_iter().enumerate() {
        let (hit, unsure) = o?;
        hits += hit as usize;
        unresolved += unsure as usize;
        per_sample.push((s, hit));
    }
    let p = hits as f64 / samples as f64;
    let sigma = (p * (1.0 - p) / samples as f64).sqrt();
    let bound = rat_to_f64(&xi.hi()).powi(n as i32) * (x_next as f64).powi(m as i32);
    Ok(BadsetReport {
        nu,
        m,
        samples,
        hits,
        unresolved,
        estimate: p,
        sigma,
        bound,
        bound_ratio: if bound > 0.0 { p / bound } else { f64::INFINITY },
        per_sample,
    })
}

fn one_sample(
    theta: &MatrixTheta,
    base_seq: &ApproxSequence,
    nu: usize,
    k: usize,
    c: u64,
    x_next: u64,
    cfg: &BadsetConfig,
) -> Result<(bool, bool)> {
    let rec = &base_seq.records[nu - 1];
    let ev = ThetaEval::new(theta, cfg.max_depth);
    let base_ev = ThetaEval::new(&base_seq.theta, cfg.max_depth);
    let kernel = ev.kernel();
    let thr = FixedKernel::threshold(&rec.xi.hi());
    let mut result = (false, false);
    let hi = i64::try_from(x_next).map_err(|_| Error::InvalidParameter("x_{nu+1} too large".into()))?;
    scan_shells(
        &kernel,
        1,
        hi,
        |_| BelowSink::new(thr, k),
        |sc| {
            for cand in &sc.cands {
                let x: Vec<BigInt> = cand.x.iter().map(|&v| BigInt::from(v)).collect();
                let out = crate::exactnum::cmp_refining(
                    |d| ev.nearest(&x, d).dist,
                    |d| base_ev.nearest(rec.x.coords(), d).dist,
                    cfg.max_depth,
                    theta.is_refinable(),
                );
                let close = match out {
                    CmpOutcome::Greater => continue,
                    CmpOutcome::Unresolved => None,
                    _ => Some(()),
                };
                // y-window around the base part of Θx
                let tail = cand.x[k..].iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
                let y = ev.nearest(&x, 0).y;
                let base_part: Vec<CertifiedValue> = (0..theta.n())
                    .map(|j| {
                        (0..k).fold(CertifiedValue::exact(Rat::zero()), |acc, i| {
                            acc.add(&theta.entry(j, i).scale_int(&x[i]))
                        })
                    })
                    .collect();
                let lim = Rat::from_integer(BigInt::from(c) * BigInt::from(tail));
                let mut window = Some(true);
                for (yj, bj) in y.coords().iter().zip(&base_part) {
                    let lo = rat_int(yj.clone()) - bj.hi();
                    let hi = rat_int(yj.clone()) - bj.lo();
                    let max_abs = lo.abs().max(hi.abs());
                    let min_abs = if lo.is_positive() || hi.is_negative() {
                        lo.abs().min(hi.abs())
                    } else {
                        Rat::zero()
                    };
                    if max_abs <= lim {
                        continue;
                    }
                    if min_abs > lim {
                        window = Some(false);
                        break;
                    }
                    window = None;
                }
                match (close, window) {
                    (_, Some(false)) => continue,
                    (Some(()), Some(true)) => {
                        result = (true, false);
                        return Ok(ControlFlow::Break(()));
                    }
                    _ => {
                        result = (true, true);
                        return Ok(ControlFlow::Break(()));
                    }
                }
            }
            Ok(ControlFlow::Continue(thr))
        },
    )?;
    Ok(result)
}

/// Writes `(sample, hit)` pairs as CSV.
pub fn write_badset_csv<W: Write>(report: &BadsetReport, w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wr.write_record(["sample", "hit"])?;
    for (s, h) in &report.per_sample {
        wr.write_record([s.to_string(), (*h as u8).to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiViolation {
    pub t: u64,
    #[serde(with = "serde_rat")]
    pub psi_lower: Rat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiBoundReport {
    pub t_lo: u64,
    pub t_hi: u64,
    /// Number of constant pieces of `ψ` checked.
    pub steps: usize,
    pub violations: Vec<PsiViolation>,
}

/// Checks `ψ(t) <= t^(-γ)` for every integer `t` in `[q_1, q_{K-1}]`.
///
/// On each constant piece `[|x_nu|, |x_{nu+1}| - 1]` the worst `t` is the
/// right end, so one certified comparison `xi_nu^b t^a <= 1` (`γ = a/b`)
/// per piece covers every integer in it.
pub fn psi_bound_check(spec: &LiouvilleSpec, cfg: &ApproxConfig) -> Result<PsiBoundReport> {
    let col = liouville_column(spec)?;
    let qs = spec.denominators(spec.k - 1);
    let lo = qs[0]
        .to_u64()
        .ok_or_else(|| Error::InvalidParameter("q_1 too large".into()))?;
    let hi = qs[spec.k - 2]
        .to_u64()
        .ok_or_else(|| Error::BudgetExceeded {
            needed: rat_to_f64(&rat_int(qs[spec.k - 2].clone())),
            budget: u64::MAX as f64,
        })?;
    let seq = best_sequence_with(&col, hi, cfg)?;
    psi_bound_on(&seq, &spec.gamma, lo, hi, cfg)
}

/// The same check on an existing sequence over `[lo, hi]`.
pub fn psi_bound_on(
    seq: &ApproxSequence,
    gamma: &Rat,
    lo: u64,
    hi: u64,
    cfg: &ApproxConfig,
) -> Result<PsiBoundReport> {
    let (a, b) = (gamma.numer().clone(), gamma.denom().clone());
    let a = a.to_usize().ok_or_else(|| Error::InvalidParameter("gamma numerator too large".into()))?;
    let b = b.to_usize().ok_or_else(|| Error::InvalidParameter("gamma denominator too large".into()))?;
    let ev = ThetaEval::new(&seq.theta, cfg.max_depth);
    let recs = &seq.records;
    let mut violations = Vec::new();
    let mut steps = 0;
    for (i, r) in recs.iter().enumerate() {
        let start = r.xnorm.max(lo);
        let end = match recs.get(i + 1) {
            Some(next) => (next.xnorm - 1).min(hi),
            None => hi,
        };
        if start > end {
            continue;
        }
        steps += 1;
        let tpow = num_traits::pow(rat_int(end), a);
        let check = |xi: &CertifiedValue| {
            let up = num_traits::pow(xi.hi(), b) * &tpow;
            let low = num_traits::pow(xi.lo().max(Rat::zero()), b) * &tpow;
            if up <= Rat::one() {
                Some(true)
            } else if low > Rat::one() {
                Some(false)
            } else {
                None
            }
        };
        let mut verdict = check(&r.xi);
        if verdict.is_none() && seq.theta.is_refinable() {
            for d in crate::exactnum::depth_schedule(cfg.max_depth) {
                verdict = check(&ev.nearest(r.x.coords(), d).dist);
                if verdict.is_some() {
                    break;
                }
            }
        }
        match verdict {
            Some(true) => {}
            Some(false) => violations.push(PsiViolation {
                t: end,
                psi_lower: r.xi.lo(),
            }),
            None => {
                return Err(Error::PrecisionExhausted(format!(
                    "psi bound at t = {end} straddles t^-gamma"
                )))
            }
        }
    }
    Ok(PsiBoundReport {
        t_lo: lo,
        t_hi: hi,
        steps,
        violations,
    })
}
