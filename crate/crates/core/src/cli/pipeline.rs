//! End-to-end verification runs: construct, approximate, estimate, certify.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approx::{
    best_sequence_with, ApproxConfig, ApproxSequence, BestApproxRecord, MatrixTheta, DEFAULT_MAX_DEPTH,
};
use crate::construct::{
    compose_base, extend_random, liouville_column, series_partial_sums, verify_coincidence,
    Coincidence, ExtensionSpec, LiouvilleSpec, SeriesReport, DEFAULT_PRECISION_BITS,
};
use crate::error::{Error, Result};
use crate::exactnum::{rat, rat_int, serde_rat, CertifiedValue, Generator, Rat};
use crate::lattice::{
    cert_completely_irrational_with, default_min_tail, estimate_r, CertConfig, CertOutcome,
    IrrationalityCertificate,
};

fn default_seeds() -> Vec<u64> {
    vec![7, 8, 9, 10, 11]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma3Params {
    pub n: usize,
    pub m: usize,
    #[serde(with = "serde_rat")]
    pub gamma: Rat,
    #[serde(with = "serde_rat")]
    pub u: Rat,
    pub q1: u64,
    /// Number of Liouville terms; `None` picks the smallest `K` with `q_{K-1} >= t_max`.
    pub k: Option<usize>,
    pub t_max: u64,
    pub liouville_seed: u64,
    pub seeds: Vec<u64>,
    pub precision_bits: u32,
    pub min_tail: Option<usize>,
    pub max_depth: u32,
    pub required_passes: usize,
}

impl Default for Lemma3Params {
    fn default() -> Self {
        Lemma3Params {
            n: 3,
            m: 2,
            gamma: rat(4, 5),
            u: rat(6, 1),
            q1: 3,
            k: None,
            t_max: 10_000,
            liouville_seed: 7,
            seeds: default_seeds(),
            precision_bits: DEFAULT_PRECISION_BITS,
            min_tail: None,
            max_depth: DEFAULT_MAX_DEPTH,
            required_passes: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma4Params {
    pub n: usize,
    pub m: usize,
    #[serde(with = "serde_rat")]
    pub gamma: Rat,
    #[serde(with = "serde_rat")]
    pub u: Rat,
    pub q1: u64,
    pub k: Option<usize>,
    pub t_max: u64,
    pub liouville_seed: u64,
    /// Seed of the random second base column.
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub precision_bits: u32,
    pub min_tail: Option<usize>,
    pub max_depth: u32,
    pub cert_b: u32,
    pub cert_budget: f64,
    pub required_passes: usize,
}

impl Default for Lemma4Params {
    fn default() -> Self {
        Lemma4Params {
            n: 2,
            m: 3,
            gamma: rat(2, 1),
            u: rat(4, 1),
            q1: 3,
            k: None,
            t_max: 300,
            liouville_seed: 7,
            base_seed: 7,
            seeds: default_seeds(),
            precision_bits: DEFAULT_PRECISION_BITS,
            min_tail: None,
            max_depth: DEFAULT_MAX_DEPTH,
            cert_b: 2,
            cert_budget: CertConfig::default().budget,
            required_passes: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Theorem1Params {
    pub case: String,
    pub seeds: Vec<u64>,
    pub t_max: u64,
    pub min_tail: Option<usize>,
    pub max_depth: u32,
    pub required_passes: usize,
}

impl Default for Theorem1Params {
    fn default() -> Self {
        Theorem1Params {
            case: "m1n2".into(),
            seeds: default_seeds(),
            t_max: 100_000,
            min_tail: None,
            max_depth: DEFAULT_MAX_DEPTH,
            required_passes: 4,
        }
    }
}

fn check_common(seeds: &[u64], required: usize, t_max: u64) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("at least one seed is required".into()));
    }
    if required == 0 || required > seeds.len() {
        return Err(Error::InvalidParameter(format!(
            "required_passes = {required} must be in 1..={}",
            seeds.len()
        )));
    }
    if t_max == 0 {
        return Err(Error::InvalidParameter("t_max must be at least 1".into()));
    }
    Ok(())
}

impl Lemma3Params {
    pub fn validate(&self) -> Result<()> {
        check_common(&self.seeds, self.required_passes, self.t_max)?;
        if self.m < 2 || self.n <= self.m {
            return Err(Error::InvalidParameter(format!(
                "lemma3 needs 2 <= m < n, got m = {}, n = {}",
                self.m, self.n
            )));
        }
        let lo = rat(self.m as i64, self.n as i64);
        if self.gamma <= lo || self.gamma >= Rat::one() {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} must lie strictly between m/n = {lo} and 1",
                self.gamma
            )));
        }
        self.liouville_spec().map(|_| ())
    }

    pub fn liouville_spec(&self) -> Result<LiouvilleSpec> {
        let k = match self.k {
            Some(k) => k,
            None => auto_k(self.q1, &self.u, self.t_max)?,
        };
        LiouvilleSpec::from_seed(self.n, self.gamma.clone(), self.u.clone(), self.q1, k, self.liouville_seed)
    }
}

impl Lemma4Params {
    pub fn validate(&self) -> Result<()> {
        check_common(&self.seeds, self.required_passes, self.t_max)?;
        if self.m < 3 || self.n > self.m || self.n == 0 {
            return Err(Error::InvalidParameter(format!(
                "lemma4 needs 1 <= n <= m and m >= 3, got m = {}, n = {}",
                self.m, self.n
            )));
        }
        let lo = rat(self.m as i64, self.n as i64);
        if self.gamma <= lo {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} must exceed m/n = {lo}",
                self.gamma
            )));
        }
        if self.cert_b == 0 {
            return Err(Error::InvalidParameter("cert_b must be positive".into()));
        }
        self.liouville_spec().map(|_| ())
    }

    pub fn liouville_spec(&self) -> Result<LiouvilleSpec> {
        let k = match self.k {
            Some(k) => k,
            None => auto_k(self.q1, &self.u, self.t_max)?,
        };
        LiouvilleSpec::from_seed(self.n, self.gamma.clone(), self.u.clone(), self.q1, k, self.liouville_seed)
    }
}

impl Theorem1Params {
    pub fn validate(&self) -> Result<()> {
        check_common(&self.seeds, self.required_passes, self.t_max)?;
        if self.case != "m1n2" {
            return Err(Error::InvalidParameter(format!(
                "unknown theorem1-sanity case {:?} (expected m1n2)",
                self.case
            )));
        }
        Ok(())
    }
}

/// Smallest `K >= 2` with `q_{K-1} >= t_max`.
pub fn auto_k(q1: u64, u: &Rat, t_max: u64) -> Result<usize> {
    if q1 < 2 {
        return Err(Error::InvalidParameter("q1 must be at least 2".into()));
    }
    let power = crate::exactnum::ceil_rat(u)
        .to_u32()
        .filter(|&p| p >= 1)
        .ok_or_else(|| Error::InvalidSchedule(format!("u = {u} is not a usable exponent")))?;
    let target = BigInt::from(t_max);
    let mut q = BigInt::from(q1);
    let mut k = 2;
    while q < target {
        if power == 1 {
            return Err(Error::InvalidSchedule("u must exceed 1".into()));
        }
        q = num_traits::pow(q, power as usize);
        k += 1;
    }
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub coincidence: Option<Coincidence>,
    pub ext_xnorms: Vec<u64>,
    pub ext_records: Vec<BestApproxRecord>,
    pub r_est: Option<usize>,
    pub base_r_est: Option<usize>,
    pub pass: bool,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub pipeline: String,
    pub params: serde_json::Value,
    pub d: usize,
    pub target_r: usize,
    pub base: MatrixTheta,
    pub base_xnorms: Vec<u64>,
    pub base_records: Vec<BestApproxRecord>,
    /// `q_1, q_2, ...` up to the sequence range.
    pub denominators: Vec<String>,
    pub series: Option<SeriesReport>,
    pub series_error: Option<String>,
    pub certificate: Option<IrrationalityCertificate>,
    pub certificate_error: Option<String>,
    pub seeds: Vec<SeedReport>,
    pub passed: usize,
    pub required_passes: usize,
    pub policy_holds: bool,
}

struct SeedCheck<'a> {
    base: &'a MatrixTheta,
    m: usize,
    t_max: u64,
    precision_bits: u32,
    min_tail: usize,
    target_r: usize,
    /// Largest admissible `t0`, if bounded.
    t0_limit: Option<u64>,
    cfg: ApproxConfig,
}

impl SeedCheck<'_> {
    fn run(&self, seed: u64) -> Result<SeedReport> {
        let theta = extend_random(&ExtensionSpec {
            base: self.base.clone(),
            m: self.m,
            seed,
            precision_bits: self.precision_bits,
        })?;
        let (coin, ext, bs) = verify_coincidence(&theta, self.base, self.t_max, &self.cfg)?;
        let mut failures = Vec::new();
        match (&coin, self.t0_limit) {
            (Coincidence::Mismatch(t), _) => failures.push(format!("sequences disagree at |x| = {t}")),
            (Coincidence::Coincides(t0), Some(lim)) if *t0 > lim => {
                failures.push(format!("t0 = {t0} exceeds {lim}"))
            }
            _ => {}
        }
        let r_est = match estimate_r(&ext, self.min_tail) {
            Ok(r) => {
                if r.r_est != self.target_r {
                    failures.push(format!("estimate_R = {} (expected {})", r.r_est, self.target_r));
                }
                Some(r.r_est)
            }
            Err(e) => {
                failures.push(format!("estimate_R: {e}"));
                None
            }
        };
        let base_r_est = estimate_r(&bs, self.min_tail).ok().map(|r| r.r_est);
        Ok(SeedReport {
            seed,
            coincidence: Some(coin),
            ext_xnorms: ext.xnorms(),
            ext_records: ext.records.clone(),
            r_est,
            base_r_est,
            pass: failures.is_empty(),
            failures,
        })
    }
}

fn seed_report_or_error(seed: u64, r: Result<SeedReport>) -> SeedReport {
    r.unwrap_or_else(|e| SeedReport {
        seed,
        coincidence: None,
        ext_xnorms: vec![],
        ext_records: vec![],
        r_est: None,
        base_r_est: None,
        pass: false,
        failures: vec![e.to_string()],
    })
}

fn denominators_in_range(spec: &LiouvilleSpec, t_max: u64) -> Vec<BigInt> {
    let mut out = spec.denominators(1);
    let limit = BigInt::from(t_max);
    while out.last().unwrap() <= &limit {
        let next = num_traits::pow(out.last().unwrap().clone(), spec.power() as usize);
        out.push(next);
    }
    out
}

/// `Θ = (Θ* | Θ²)` with a single Liouville column: coincidence with `t0 <= q_2`,
/// `estimate_R = n + 1`, and base series term ratios below 1.
pub fn run_lemma3(p: &Lemma3Params) -> Result<PipelineReport> {
    p.validate()?;
    let spec = p.liouville_spec()?;
    let base = liouville_column(&spec)?;
    let cfg = ApproxConfig { max_depth: p.max_depth };
    let base_seq = best_sequence_with(&base, p.t_max, &cfg)?;
    let qs = denominators_in_range(&spec, p.t_max);
    let d = p.m + p.n;
    let check = SeedCheck {
        base: &base,
        m: p.m,
        t_max: p.t_max,
        precision_bits: p.precision_bits,
        min_tail: p.min_tail.unwrap_or_else(|| default_min_tail(d)),
        target_r: p.n + 1,
        t0_limit: qs.get(1).and_then(|q| q.to_u64()).or(Some(u64::MAX)),
        cfg,
    };
    let (series, series_error) = match series_partial_sums(&base_seq, p.m, p.n, base_seq.len().saturating_sub(1)) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let series_ok = series.as_ref().is_some_and(|s| s.all_ratios_below_one);
    let mut seeds = Vec::new();
    for &seed in &p.seeds {
        let mut r = seed_report_or_error(seed, check.run(seed));
        if !series_ok {
            r.failures.push("base series term ratios are not all below 1".into());
            r.pass = false;
        }
        seeds.push(r);
    }
    Ok(finish(
        "lemma3",
        serde_json::to_value(p)?,
        d,
        p.n + 1,
        base,
        &base_seq,
        &qs,
        series,
        series_error,
        None,
        None,
        seeds,
        p.required_passes,
        true,
    ))
}

/// Two-column base `(Liouville | random)` extended by random columns:
/// coincidence, `estimate_R = n + 2`, and a certificate for the base.
pub fn run_lemma4(p: &Lemma4Params) -> Result<PipelineReport> {
    p.validate()?;
    let spec = p.liouville_spec()?;
    let col = liouville_column(&spec)?;
    let base = compose_base(&[col], 1, p.base_seed, p.precision_bits)?;
    let cfg = ApproxConfig { max_depth: p.max_depth };
    let base_seq = best_sequence_with(&base, p.t_max, &cfg)?;
    let qs = denominators_in_range(&spec, p.t_max);
    let cert = cert_completely_irrational_with(
        &base,
        p.cert_b,
        &CertConfig {
            budget: p.cert_budget,
            max_depth: p.max_depth,
        },
    );
    let (certificate, cert_ok, cert_err) = match cert {
        Ok(c) => {
            let ok = matches!(c.outcome, CertOutcome::Certified { .. });
            (Some(c), ok, None)
        }
        Err(e) => (None, false, Some(e.to_string())),
    };
    let d = p.m + p.n;
    let check = SeedCheck {
        base: &base,
        m: p.m,
        t_max: p.t_max,
        precision_bits: p.precision_bits,
        min_tail: p.min_tail.unwrap_or_else(|| default_min_tail(d)),
        target_r: p.n + 2,
        t0_limit: None,
        cfg,
    };
    let seeds = p
        .seeds
        .iter()
        .map(|&s| seed_report_or_error(s, check.run(s)))
        .collect();
    let mut report = finish(
        "lemma4",
        serde_json::to_value(p)?,
        d,
        p.n + 2,
        base,
        &base_seq,
        &qs,
        None,
        None,
        certificate,
        cert_err,
        seeds,
        p.required_passes,
        cert_ok,
    );
    if !cert_ok && report.certificate_error.is_none() {
        report.certificate_error = Some("base matrix was not certified".into());
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    pipeline: &str,
    params: serde_json::Value,
    d: usize,
    target_r: usize,
    base: MatrixTheta,
    base_seq: &ApproxSequence,
    qs: &[BigInt],
    series: Option<SeriesReport>,
    series_error: Option<String>,
    certificate: Option<IrrationalityCertificate>,
    certificate_error: Option<String>,
    seeds: Vec<SeedReport>,
    required_passes: usize,
    extra_ok: bool,
) -> PipelineReport {
    let passed = seeds.iter().filter(|s| s.pass).count();
    PipelineReport {
        pipeline: pipeline.into(),
        params,
        d,
        target_r,
        base,
        base_xnorms: base_seq.xnorms(),
        base_records: base_seq.records.clone(),
        denominators: qs.iter().map(|q| q.to_string()).collect(),
        series,
        series_error,
        certificate,
        certificate_error,
        seeds,
        passed,
        required_passes,
        policy_holds: extra_ok && passed >= required_passes,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SanitySample {
    pub seed: u64,
    pub radicands: Vec<u64>,
    pub records: usize,
    pub r_est: Option<usize>,
    pub pass: bool,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SanityReport {
    pub case: String,
    pub params: serde_json::Value,
    pub d: usize,
    pub samples: Vec<SanitySample>,
    pub passed: usize,
    pub required_passes: usize,
    pub policy_holds: bool,
}

fn is_square(v: u64) -> bool {
    let r = (v as f64).sqrt().round() as u64;
    (r.saturating_sub(1)..=r + 1).any(|s| s * s == v)
}

/// Two radicands in `2..100` with `1, √a, √b` linearly independent over Q.
pub fn sample_radicands(seed: u64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let a = rng.random_range(2..100u64);
        let b = rng.random_range(2..100u64);
        if a != b && !is_square(a) && !is_square(b) && !is_square(a * b) {
            return (a, b);
        }
    }
}

/// `θ = {√v}` as a refinable value.
pub fn frac_sqrt(v: u64) -> CertifiedValue {
    let floor = (1..).take_while(|s: &u64| s * s <= v).last().unwrap_or(0);
    CertifiedValue::from_generator(Generator::sqrt_affine(
        -rat_int(floor),
        Rat::one(),
        rat_int(v),
    ))
}

/// `m = 1, n = 2` vectors `({√a}, {√b})`: `estimate_R` should equal `d = 3`.
pub fn run_theorem1_sanity(p: &Theorem1Params) -> Result<SanityReport> {
    p.validate()?;
    let cfg = ApproxConfig { max_depth: p.max_depth };
    let d = 3;
    let min_tail = p.min_tail.unwrap_or_else(|| default_min_tail(d));
    let mut samples = Vec::new();
    for &seed in &p.seeds {
        let (a, b) = sample_radicands(seed);
        let theta = MatrixTheta::new(
            1,
            2,
            vec![vec![frac_sqrt(a)], vec![frac_sqrt(b)]],
            serde_json::json!({ "frac_sqrt": [a, b], "seed": seed }),
        )?;
        let mut failures = Vec::new();
        let (records, r_est) = match best_sequence_with(&theta, p.t_max, &cfg) {
            Ok(seq) => match estimate_r(&seq, min_tail) {
                Ok(r) => (seq.len(), Some(r.r_est)),
                Err(e) => {
                    failures.push(format!("estimate_R: {e}"));
                    (seq.len(), None)
                }
            },
            Err(e) => {
                failures.push(e.to_string());
                (0, None)
            }
        };
        if let Some(r) = r_est {
            if r != d {
                failures.push(format!("estimate_R = {r} (expected {d})"));
            }
        }
        samples.push(SanitySample {
            seed,
            radicands: vec![a, b],
            records,
            r_est,
            pass: failures.is_empty(),
            failures,
        });
    }
    let passed = samples.iter().filter(|s| s.pass).count();
    Ok(SanityReport {
        case: p.case.clone(),
        params: serde_json::to_value(p)?,
        d,
        samples,
        passed,
        required_passes: p.required_passes,
        policy_holds: passed >= p.required_passes,
    })
}
