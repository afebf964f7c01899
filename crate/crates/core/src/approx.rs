//! Best simultaneous approximations of a real matrix.
//!
//! `Θ` is stored with `n` rows and `m` columns and acts as `y ≈ Θx` for
//! `x ∈ Z^m`. Points are visited in sup-norm shells; every shell is first
//! screened with the fixed-point kernel and the survivors are decided with
//! exact rational arithmetic.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::ops::ControlFlow;
use std::rc::Rc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{
    cmp_refining, format_rat, parse_rat, rat_int, CertifiedValue, CmpOutcome, IntVec,
    NearestInt, Rat,
};
use crate::scan::{scan_shells, BelowSink, Cand, FixedKernel, MinSink};

pub const DEFAULT_MAX_DEPTH: u32 = 8;

/// An `n x m` real matrix with certified entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixWire", into = "MatrixWire")]
pub struct MatrixTheta {
    m: usize,
    n: usize,
    entries: Vec<Vec<CertifiedValue>>,
    provenance: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    m: usize,
    n: usize,
    entries: Vec<Vec<CertifiedValue>>,
    #[serde(default)]
    provenance: serde_json::Value,
}

impl TryFrom<MatrixWire> for MatrixTheta {
    type Error = Error;
    fn try_from(w: MatrixWire) -> Result<Self> {
        MatrixTheta::new(w.m, w.n, w.entries, w.provenance)
    }
}

impl From<MatrixTheta> for MatrixWire {
    fn from(t: MatrixTheta) -> Self {
        MatrixWire {
            m: t.m,
            n: t.n,
            entries: t.entries,
            provenance: t.provenance,
        }
    }
}

impl MatrixTheta {
    pub fn new(
        m: usize,
        n: usize,
        entries: Vec<Vec<CertifiedValue>>,
        provenance: serde_json::Value,
    ) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::DimensionMismatch("m and n must be positive".into()));
        }
        if entries.len() != n || entries.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} rows of {m} entries"
            )));
        }
        Ok(MatrixTheta {
            m,
            n,
            entries,
            provenance,
        })
    }

    /// Exact matrix from rational rows.
    pub fn from_rats(rows: Vec<Vec<Rat>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        let entries = rows
            .into_iter()
            .map(|r| r.into_iter().map(CertifiedValue::exact).collect())
            .collect();
        Self::new(m, n, entries, serde_json::Value::Null)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.m + self.n
    }

    pub fn entry(&self, row: usize, col: usize) -> &CertifiedValue {
        &self.entries[row][col]
    }

    pub fn rows(&self) -> &[Vec<CertifiedValue>] {
        &self.entries
    }

    pub fn provenance(&self) -> &serde_json::Value {
        &self.provenance
    }

    pub fn with_provenance(mut self, p: serde_json::Value) -> Self {
        self.provenance = p;
        self
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().flatten().all(|e| e.is_exact())
    }

    pub fn is_refinable(&self) -> bool {
        self.entries.iter().flatten().any(|e| e.can_refine())
    }

    /// The `col`-th column as an `n x 1` matrix.
    pub fn column(&self, col: usize) -> MatrixTheta {
        let entries = self.entries.iter().map(|r| vec![r[col].clone()]).collect();
        MatrixTheta::new(1, self.n, entries, serde_json::Value::Null).unwrap()
    }

    /// Leading `k` columns.
    pub fn leading(&self, k: usize) -> MatrixTheta {
        let entries = self.entries.iter().map(|r| r[..k].to_vec()).collect();
        MatrixTheta::new(k, self.n, entries, serde_json::Value::Null).unwrap()
    }

    /// Horizontal concatenation.
    pub fn hcat(parts: &[MatrixTheta]) -> Result<MatrixTheta> {
        let n = parts
            .first()
            .ok_or_else(|| Error::DimensionMismatch("no columns".into()))?
            .n;
        if let Some(p) = parts.iter().find(|p| p.n != n) {
            return Err(Error::DimensionMismatch(format!(
                "column blocks have {} and {} rows",
                n, p.n
            )));
        }
        let entries: Vec<Vec<CertifiedValue>> = (0..n)
            .map(|j| parts.iter().flat_map(|p| p.entries[j].clone()).collect())
            .collect();
        let m = entries[0].len();
        MatrixTheta::new(m, n, entries, serde_json::Value::Null)
    }

    /// `-Θ`, exact matrices only.
    pub fn negated(&self) -> MatrixTheta {
        let entries = self
            .entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|e| CertifiedValue::interval(-e.mid().clone(), e.rad().clone()))
                    .collect()
            })
            .collect();
        MatrixTheta::new(self.m, self.n, entries, self.provenance.clone()).unwrap()
    }

    /// Enclosure of `Θx` row by row at base depth.
    pub fn apply(&self, x: &IntVec) -> Vec<CertifiedValue> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x.coords())
                    .fold(CertifiedValue::exact(Rat::zero()), |acc, (e, xi)| {
                        acc.add(&e.scale_int(xi))
                    })
            })
            .collect()
    }
}

/// All entries at one refinement depth over a common denominator.
struct Snapshot {
    den: BigInt,
    /// row-major `n x m`
    nums: Vec<BigInt>,
    rads: Vec<Rat>,
    exact: bool,
}

impl Snapshot {
    fn new(theta: &MatrixTheta, depth: u32) -> Self {
        let vals: Vec<CertifiedValue> = theta
            .entries
            .iter()
            .flatten()
            .map(|e| e.refined(depth))
            .collect();
        let den = vals
            .iter()
            .fold(BigInt::one(), |acc, v| acc.lcm(v.mid().denom()));
        let nums = vals
            .iter()
            .map(|v| v.mid().numer() * (&den / v.mid().denom()))
            .collect();
        let exact = vals.iter().all(|v| v.is_exact());
        let rads = vals.iter().map(|v| v.rad().clone()).collect();
        Snapshot {
            den,
            nums,
            rads,
            exact,
        }
    }

    fn mids_rads(&self) -> (Vec<Rat>, Vec<Rat>) {
        let mids = self
            .nums
            .iter()
            .map(|v| Rat::new(v.clone(), self.den.clone()))
            .collect();
        (mids, self.rads.clone())
    }

    fn nearest(&self, m: usize, x: &[BigInt]) -> NearestInt {
        let n = self.nums.len() / m;
        let two_den = &self.den * 2;
        let mut best = BigInt::zero();
        let mut rad = Rat::zero();
        let mut y = Vec::with_capacity(n);
        let mut tie = false;
        for j in 0..n {
            let row = &self.nums[j * m..(j + 1) * m];
            let r: BigInt = row.iter().zip(x).map(|(a, b)| a * b).sum();
            let twice: BigInt = &r * 2 + &self.den;
            let yj = twice.div_floor(&two_den);
            let dj = (&r - &yj * &self.den).abs();
            let rj = if self.exact {
                Rat::zero()
            } else {
                self.rads[j * m..(j + 1) * m]
                    .iter()
                    .zip(x)
                    .map(|(e, xi)| e * rat_int(xi.abs()))
                    .sum()
            };
            if rj.is_zero() {
                tie |= &dj * 2 == self.den;
            } else {
                tie |= Rat::new(&dj * 2, self.den.clone()) + &rj * rat_int(2) >= Rat::one();
            }
            if dj > best {
                best = dj;
            }
            if rj > rad {
                rad = rj;
            }
            y.push(yj);
        }
        NearestInt {
            dist: CertifiedValue::interval(Rat::new(best, self.den.clone()), rad),
            y: IntVec::new(y),
            tie,
        }
    }
}

/// Lazily refined evaluator of `||Θx||`.
pub(crate) struct ThetaEval<'a> {
    theta: &'a MatrixTheta,
    max_depth: u32,
    refinable: bool,
    snaps: RefCell<BTreeMap<u32, Rc<Snapshot>>>,
    deepest: RefCell<u32>,
}

impl<'a> ThetaEval<'a> {
    pub fn new(theta: &'a MatrixTheta, max_depth: u32) -> Self {
        ThetaEval {
            theta,
            max_depth,
            refinable: theta.is_refinable(),
            snaps: RefCell::new(BTreeMap::new()),
            deepest: RefCell::new(0),
        }
    }

    fn snapshot(&self, depth: u32) -> Rc<Snapshot> {
        let depth = if self.refinable { depth } else { 0 };
        let mut deepest = self.deepest.borrow_mut();
        *deepest = (*deepest).max(depth);
        self.snaps
            .borrow_mut()
            .entry(depth)
            .or_insert_with(|| Rc::new(Snapshot::new(self.theta, depth)))
            .clone()
    }

    pub fn deepest(&self) -> u32 {
        *self.deepest.borrow()
    }

    pub fn kernel(&self) -> FixedKernel {
        let (mids, rads) = self.snapshot(0).mids_rads();
        FixedKernel::new(self.theta.m, self.theta.n, &mids, &rads)
    }

    pub fn nearest(&self, x: &[BigInt], depth: u32) -> NearestInt {
        self.snapshot(depth).nearest(self.theta.m, x)
    }

    pub fn cmp_x(&self, a: &[BigInt], b: &[BigInt]) -> CmpOutcome {
        cmp_refining(
            |d| self.nearest(a, d).dist,
            |d| self.nearest(b, d).dist,
            self.max_depth,
            self.refinable,
        )
    }

    /// Compares `||Θa||` with `||Θb||` where only `b`'s enclosure is known.
    pub fn cmp_with_record(&self, a: &[BigInt], rec: &BestApproxRecord) -> CmpOutcome {
        self.cmp_x(a, rec.x.coords())
    }
}

/// One best approximation `z = (x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestApproxRecord {
    pub x: IntVec,
    pub y: IntVec,
    pub xnorm: u64,
    pub xi: CertifiedValue,
    pub tie_x: bool,
    pub tie_y: bool,
    pub exact_hit: bool,
    /// Some comparison inside this record's shell could not be certified.
    #[serde(default)]
    pub uncertain: bool,
}

impl BestApproxRecord {
    /// The extended vector `(x, y)`.
    pub fn z(&self) -> IntVec {
        self.x.concat(&self.y)
    }

    /// A tie whose existence is certified, as opposed to merely unresolved.
    fn certified_tie(&self) -> bool {
        self.tie_x || (self.tie_y && self.xi.is_exact())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "witness")]
pub enum GoodStatus {
    Good,
    /// 1-based index of the first record carrying a certified tie.
    NotGood(usize),
    /// 1-based index of the first record with an unresolved tie.
    Unknown(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxSequence {
    pub theta: MatrixTheta,
    #[serde(rename = "T")]
    pub t_max: u64,
    pub records: Vec<BestApproxRecord>,
    pub good_status: GoodStatus,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ApproxSequence {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn xnorms(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.xnorm).collect()
    }

    pub fn ends_in_exact_hit(&self) -> bool {
        self.records.last().is_some_and(|r| r.exact_hit)
    }

    /// `ψ(t)` read off the step function; `None` for `t` below the first
    /// record or above `T` (unless the sequence ended in an exact hit).
    pub fn psi_at(&self, t: u64) -> Option<&CertifiedValue> {
        if t > self.t_max && !self.ends_in_exact_hit() {
            return None;
        }
        let k = self.records.partition_point(|r| r.xnorm <= t);
        (k > 0).then(|| &self.records[k - 1].xi)
    }

    pub fn extended_vectors(&self) -> Vec<IntVec> {
        self.records.iter().map(|r| r.z()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub max_depth: u32,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig {
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

fn bigs(x: &[i64]) -> Vec<BigInt> {
    x.iter().map(|&v| BigInt::from(v)).collect()
}

fn check_t(t: u64) -> Result<i64> {
    if t == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    i64::try_from(t).map_err(|_| Error::InvalidParameter(format!("T = {t} is too large")))
}

/// Certified minimum of one shell.
struct ShellMin {
    x: Vec<BigInt>,
    near: NearestInt,
    tie_x: bool,
    uncertain: bool,
}

fn shell_min(ev: &ThetaEval, cands: &[Cand]) -> ShellMin {
    let mut xs: Vec<Vec<BigInt>> = cands.iter().map(|c| bigs(&c.x)).collect();
    let mut best = 0;
    for i in 1..xs.len() {
        if ev.cmp_x(&xs[i], &xs[best]) == CmpOutcome::Less {
            best = i;
        }
    }
    // second pass: every other candidate against the chosen one
    let (mut tie_x, mut uncertain);
    loop {
        tie_x = false;
        uncertain = false;
        let mut moved = false;
        for i in 0..xs.len() {
            if i == best {
                continue;
            }
            match ev.cmp_x(&xs[i], &xs[best]) {
                CmpOutcome::Less => {
                    best = i;
                    moved = true;
                    break;
                }
                CmpOutcome::Equal => tie_x = true,
                CmpOutcome::Unresolved => uncertain = true,
                CmpOutcome::Greater => {}
            }
        }
        if !moved {
            break;
        }
    }
    let near = ev.nearest(&xs[best], 0);
    ShellMin {
        x: xs.swap_remove(best),
        near,
        tie_x,
        uncertain,
    }
}

/// Best approximation sequence with `|x| <= t_max`.
pub fn best_sequence(theta: &MatrixTheta, t_max: u64) -> Result<ApproxSequence> {
    best_sequence_with(theta, t_max, &ApproxConfig::default())
}

pub fn best_sequence_with(
    theta: &MatrixTheta,
    t_max: u64,
    cfg: &ApproxConfig,
) -> Result<ApproxSequence> {
    let hi = check_t(t_max)?;
    let ev = ThetaEval::new(theta, cfg.max_depth);
    let kernel = ev.kernel();
    let mut records: Vec<BestApproxRecord> = Vec::new();
    scan_shells(&kernel, 1, hi, MinSink::new, |sc| {
        let sm = shell_min(&ev, &sc.cands);
        if let Some(last) = records.last() {
            match ev.cmp_with_record(&sm.x, last) {
                CmpOutcome::Less => {}
                CmpOutcome::Equal | CmpOutcome::Greater => {
                    return Ok(ControlFlow::Continue(FixedKernel::threshold(&last.xi.hi())))
                }
                CmpOutcome::Unresolved => {
                    return Err(Error::PrecisionExhausted(format!(
                        "cannot order ||Θx|| for x = {} against the record x = {}",
                        IntVec::new(sm.x.clone()),
                        last.x
                    )))
                }
            }
        }
        let exact_hit = sm.near.dist.is_exact() && sm.near.dist.mid().is_zero();
        let uncertain = sm.uncertain || (sm.near.tie && !sm.near.dist.is_exact());
        let rec = BestApproxRecord {
            x: IntVec::new(sm.x),
            y: sm.near.y,
            xnorm: sc.s as u64,
            xi: sm.near.dist,
            tie_x: sm.tie_x,
            tie_y: sm.near.tie,
            exact_hit,
            uncertain,
        };
        let thr = FixedKernel::threshold(&rec.xi.hi());
        records.push(rec);
        Ok(if exact_hit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(thr)
        })
    })?;
    // report every enclosure at the deepest level any decision needed
    let depth = ev.deepest();
    if depth > 0 {
        for r in &mut records {
            r.xi = ev.nearest(r.x.coords(), depth).dist;
        }
    }
    let mut warnings = Vec::new();
    if let Some(r) = records.last().filter(|r| r.exact_hit) {
        warnings.push(format!(
            "exact hit at x = {}: Θx is an integer vector, so Θ is not irrational and the sequence stops",
            r.x
        ));
    }
    let mut seq = ApproxSequence {
        theta: theta.clone(),
        t_max,
        records,
        good_status: GoodStatus::Good,
        warnings,
    };
    seq.good_status = goodness(&seq);
    Ok(seq)
}

/// `ψ_Θ(t)`: the minimum of `||Θx||` over `0 < |x| <= t`.
pub fn psi(theta: &MatrixTheta, t: u64) -> Result<CertifiedValue> {
    psi_with(theta, t, &ApproxConfig::default())
}

pub fn psi_with(theta: &MatrixTheta, t: u64, cfg: &ApproxConfig) -> Result<CertifiedValue> {
    let seq = best_sequence_with(theta, t, cfg)?;
    Ok(seq.records.last().expect("at least one record").xi.clone())
}

/// Status re-derived from the stored flags.
pub fn goodness(seq: &ApproxSequence) -> GoodStatus {
    if let Some(i) = seq.records.iter().position(|r| r.certified_tie()) {
        return GoodStatus::NotGood(i + 1);
    }
    if let Some(i) = seq
        .records
        .iter()
        .position(|r| r.uncertain || r.tie_y)
    {
        return GoodStatus::Unknown(i + 1);
    }
    GoodStatus::Good
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", content = "z")]
pub enum PiCheck {
    Empty,
    Violation(IntVec),
}

/// Looks for integer points `(x, y)` other than `±z_1..±z_ν` with
/// `0 < |x| < |x_{ν+1}|` and `|Θx - y| < ξ_ν`. `nu` is 1-based.
pub fn check_pi_empty(theta: &MatrixTheta, seq: &ApproxSequence, nu: usize) -> Result<PiCheck> {
    check_pi_empty_with(theta, seq, nu, &ApproxConfig::default())
}

pub fn check_pi_empty_with(
    theta: &MatrixTheta,
    seq: &ApproxSequence,
    nu: usize,
    cfg: &ApproxConfig,
) -> Result<PiCheck> {
    if nu == 0 || nu + 1 > seq.records.len() {
        return Err(Error::InvalidParameter(format!(
            "nu = {nu} needs records nu and nu+1 (have {})",
            seq.records.len()
        )));
    }
    if theta.m != seq.theta.m || theta.n != seq.theta.n {
        return Err(Error::DimensionMismatch("theta does not match the sequence".into()));
    }
    let rec = &seq.records[nu - 1];
    let xi = rec.xi.mid().clone();
    let bound = seq.records[nu].xnorm as i64 - 1;
    if bound < 1 || (rec.xi.is_exact() && xi.is_zero()) {
        return Ok(PiCheck::Empty);
    }
    let known: Vec<&IntVec> = seq.records[..nu].iter().map(|r| &r.x).collect();
    let ev = ThetaEval::new(theta, cfg.max_depth);
    let kernel = ev.kernel();
    let thr = FixedKernel::threshold(&rec.xi.hi());
    let mut found: Option<Result<PiCheck>> = None;
    scan_shells(
        &kernel,
        1,
        bound,
        |_| BelowSink::new(thr, 0),
        |sc| {
            for c in &sc.cands {
                let x = bigs(&c.x);
                let xv = IntVec::new(x.clone());
                if known.contains(&&xv) {
                    continue;
                }
                let out = cmp_refining(
                    |d| ev.nearest(&x, d).dist,
                    |d| {
                        if d == 0 {
                            rec.xi.clone()
                        } else {
                            ev.nearest(rec.x.coords(), d).dist
                        }
                    },
                    cfg.max_depth,
                    theta.is_refinable(),
                );
                match out {
                    CmpOutcome::Less => {
                        let y = ev.nearest(&x, 0).y;
                        found = Some(Ok(PiCheck::Violation(xv.concat(&y))));
                        return Ok(ControlFlow::Break(()));
                    }
                    CmpOutcome::Unresolved => {
                        found = Some(Err(Error::PrecisionExhausted(format!(
                            "cannot compare ||Θx|| at x = {xv} with ξ_{nu}"
                        ))));
                        return Ok(ControlFlow::Break(()));
                    }
                    _ => {}
                }
            }
            Ok(ControlFlow::Continue(thr))
        },
    )?;
    found.unwrap_or(Ok(PiCheck::Empty))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiRow {
    pub nu: usize,
    /// Enclosure of `ξ_ν^n · |x_{ν+1}|^m`.
    pub lhs: CertifiedValue,
    pub pass: bool,
}

/// Checks `ξ_ν^n · |x_{ν+1}|^m <= 1` for each consecutive pair.
pub fn minkowski_check(seq: &ApproxSequence) -> Result<Vec<MinkowskiRow>> {
    minkowski_check_with(seq, &ApproxConfig::default())
}

pub fn minkowski_check_with(seq: &ApproxSequence, cfg: &ApproxConfig) -> Result<Vec<MinkowskiRow>> {
    if seq.records.len() < 2 {
        return Err(Error::InsufficientData(
            "the Minkowski check needs at least two records".into(),
        ));
    }
    let (m, n) = (seq.theta.m, seq.theta.n);
    let ev = ThetaEval::new(&seq.theta, cfg.max_depth);
    let lhs_at = |r: &BestApproxRecord, next: u64, xi: &CertifiedValue| {
        let mut acc = CertifiedValue::exact(num_traits::pow(rat_int(next), m));
        for _ in 0..n {
            acc = acc.mul(xi);
        }
        let _ = r;
        acc
    };
    let one = Rat::one();
    let mut out = Vec::with_capacity(seq.records.len() - 1);
    for (i, w) in seq.records.windows(2).enumerate() {
        let nu = i + 1;
        let mut lhs = lhs_at(&w[0], w[1].xnorm, &w[0].xi);
        let mut decided = None;
        for depth in std::iter::once(0).chain(crate::exactnum::depth_schedule(cfg.max_depth)) {
            if depth > 0 {
                if !seq.theta.is_refinable() || w[0].xi.is_exact() {
                    break;
                }
                let xi = ev.nearest(w[0].x.coords(), depth).dist;
                lhs = lhs_at(&w[0], w[1].xnorm, &xi);
            }
            if lhs.hi() <= one {
                decided = Some(true);
                break;
            }
            if lhs.lo() > one {
                decided = Some(false);
                break;
            }
        }
        let pass = decided.ok_or_else(|| {
            Error::PrecisionExhausted(format!("Minkowski bound at nu = {nu} straddles 1"))
        })?;
        out.push(MinkowskiRow { nu, lhs, pass });
    }
    Ok(out)
}

/// Minkowski check for a bare `(ξ_ν, |x_{ν+1}|)` pair.
pub fn minkowski_pair(xi: &Rat, x_next: u64, m: usize, n: usize) -> bool {
    num_traits::pow(xi.clone(), n) * num_traits::pow(rat_int(x_next), m) <= Rat::one()
}

const CSV_HEADER: [&str; 11] = [
    "nu", "xnorm", "x", "y", "xi_num", "xi_den", "xi_rad_num", "xi_rad_den", "tie_x", "tie_y",
    "exact_hit",
];

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes the record table as CSV (LF line endings).
pub fn write_csv<W: Write>(records: &[BestApproxRecord], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for (i, r) in records.iter().enumerate() {
        wr.write_record([
            (i + 1).to_string(),
            r.xnorm.to_string(),
            r.x.join(),
            r.y.join(),
            r.xi.mid().numer().to_string(),
            r.xi.mid().denom().to_string(),
            r.xi.rad().numer().to_string(),
            r.xi.rad().denom().to_string(),
            flag(r.tie_x).into(),
            flag(r.tie_y).into(),
            flag(r.exact_hit).into(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<BestApproxRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Parse("unexpected sequence CSV header".into()));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let get = |i: usize| row.get(i).unwrap_or("");
        let flag = |i: usize| match get(i) {
            "0" => Ok(false),
            "1" => Ok(true),
            v => Err(Error::Parse(format!("bad flag {v:?}"))),
        };
        let xnorm: u64 = get(1)
            .parse()
            .map_err(|_| Error::Parse(format!("bad xnorm {:?}", get(1))))?;
        let mid = parse_rat(&format!("{}/{}", get(4), get(5)))?;
        let rad = parse_rat(&format!("{}/{}", get(6), get(7)))?;
        out.push(BestApproxRecord {
            x: IntVec::parse_joined(get(2))?,
            y: IntVec::parse_joined(get(3))?,
            xnorm,
            xi: CertifiedValue::from_parts(mid, rad, None)?,
            tie_x: flag(8)?,
            tie_y: flag(9)?,
            exact_hit: flag(10)?,
            uncertain: false,
        });
    }
    Ok(out)
}

/// Human-readable one-line summary of a record.
pub fn describe(r: &BestApproxRecord) -> String {
    format!(
        "|x|={} x={} y={} xi={}{}",
        r.xnorm,
        r.x,
        r.y,
        format_rat(r.xi.mid()),
        if r.exact_hit { " (exact hit)" } else { "" }
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{rat, Generator};
    use proptest::prelude::*;
    use num_traits::ToPrimitive;

    fn one_by_one(v: Rat) -> MatrixTheta {
        MatrixTheta::from_rats(vec![vec![v]]).unwrap()
    }

    fn golden(t: u64) -> ApproxSequence {
        let g = Generator::sqrt_affine(rat(-1, 2), rat(1, 2), rat(5, 1));
        let th = MatrixTheta::new(
            1,
            1,
            vec![vec![CertifiedValue::from_generator(g)]],
            serde_json::Value::Null,
        )
        .unwrap();
        best_sequence(&th, t).unwrap()
    }

    #[test]
    fn psi_two_sevenths() {
        let th = one_by_one(rat(2, 7));
        assert_eq!(psi(&th, 1).unwrap(), CertifiedValue::exact(rat(2, 7)));
        assert_eq!(psi(&th, 3).unwrap(), CertifiedValue::exact(rat(1, 7)));
        assert_eq!(psi(&th, 7).unwrap(), CertifiedValue::exact(rat(0, 1)));
    }

    #[test]
    fn two_sevenths_sequence() {
        let seq = best_sequence(&one_by_one(rat(2, 7)), 10).unwrap();
        assert_eq!(seq.xnorms(), vec![1, 3, 7]);
        let xi: Vec<_> = seq.records.iter().map(|r| r.xi.mid().clone()).collect();
        assert_eq!(xi, vec![rat(2, 7), rat(1, 7), rat(0, 1)]);
        assert!(seq.records[2].exact_hit);
        assert_eq!(seq.good_status, GoodStatus::Good);
        assert_eq!(seq.warnings.len(), 1);
        assert_eq!(seq.records[1].y, IntVec::from_i64(&[1]));
    }

    #[test]
    fn half_is_not_good() {
        let seq = best_sequence(&one_by_one(rat(1, 2)), 5).unwrap();
        assert!(seq.records[0].tie_y);
        assert_eq!(seq.records[0].xi, CertifiedValue::exact(rat(1, 2)));
        assert_eq!(seq.good_status, GoodStatus::NotGood(1));
        // x = 2 already gives an integer
        assert_eq!(seq.xnorms(), vec![1, 2]);
        assert!(seq.records[1].exact_hit);
    }

    #[test]
    fn golden_ratio_gives_fibonacci() {
        let seq = golden(100);
        assert_eq!(seq.xnorms(), vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
        assert_eq!(seq.good_status, GoodStatus::Good);
        assert!(minkowski_check(&seq).unwrap().iter().all(|r| r.pass));
    }

    #[test]
    fn pi_emptiness() {
        let th = one_by_one(rat(2, 7));
        let seq = best_sequence(&th, 10).unwrap();
        assert_eq!(check_pi_empty(&th, &seq, 1).unwrap(), PiCheck::Empty);
        assert_eq!(check_pi_empty(&th, &seq, 2).unwrap(), PiCheck::Empty);

        let mut bad = seq.clone();
        bad.records = vec![
            seq.records[0].clone(),
            BestApproxRecord {
                x: IntVec::from_i64(&[2]),
                y: IntVec::from_i64(&[1]),
                xnorm: 2,
                xi: CertifiedValue::exact(rat(3, 7)),
                tie_x: false,
                tie_y: false,
                exact_hit: false,
                uncertain: false,
            },
            seq.records[2].clone(),
        ];
        assert_eq!(
            check_pi_empty(&th, &bad, 2).unwrap(),
            PiCheck::Violation(IntVec::from_i64(&[3, 1]))
        );
    }

    #[test]
    fn minkowski_rows() {
        let seq = best_sequence(&one_by_one(rat(2, 7)), 10).unwrap();
        let rows = minkowski_check(&seq).unwrap();
        assert_eq!(rows[0].lhs, CertifiedValue::exact(rat(6, 7)));
        assert!(rows.iter().all(|r| r.pass));
        assert!(!minkowski_pair(&rat(1, 2), 3, 1, 1));
    }

    #[test]
    fn csv_roundtrip() {
        let seq = golden(30);
        let mut buf = Vec::new();
        write_csv(&seq.records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("nu,xnorm,x,y,xi_num,xi_den,xi_rad_num,xi_rad_den,tie_x,tie_y,exact_hit\n"));
        assert!(!text.contains('\r'));
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back, seq.records);
    }

    #[test]
    fn matrix_json_roundtrip() {
        let th = MatrixTheta::from_rats(vec![vec![rat(1, 3), rat(2, 5)], vec![rat(-1, 7), rat(0, 1)]])
            .unwrap();
        let s = serde_json::to_string(&th).unwrap();
        assert!(s.starts_with(r#"{"m":2,"n":2,"entries":[[{"mid":"1/3""#));
        assert_eq!(serde_json::from_str::<MatrixTheta>(&s).unwrap(), th);
        let bad = r#"{"m":2,"n":1,"entries":[[{"mid":"1/3","rad":"0/1"}]]}"#;
        assert!(serde_json::from_str::<MatrixTheta>(bad).is_err());
    }

    #[test]
    fn two_dimensional_shell_tie() {
        // (1/2, 1/2): x = (1,1) and (1,-1) both give integers
        let th = MatrixTheta::from_rats(vec![vec![rat(1, 2), rat(1, 2)]]).unwrap();
        let seq = best_sequence(&th, 4).unwrap();
        let last = seq.records.last().unwrap();
        assert!(last.exact_hit && last.tie_x);
        assert!(matches!(seq.good_status, GoodStatus::NotGood(_)));
    }

    fn arb_theta() -> impl Strategy<Value = MatrixTheta> {
        (1usize..=2, 1usize..=2).prop_flat_map(|(m, n)| {
            proptest::collection::vec(-500i64..500, m * n).prop_map(move |v| {
                let rows = (0..n)
                    .map(|j| (0..m).map(|i| rat(v[j * m + i], 997)).collect())
                    .collect();
                MatrixTheta::from_rats(rows).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn records_are_monotone_and_psi_steps(th in arb_theta()) {
            let seq = best_sequence(&th, 25).unwrap();
            for w in seq.records.windows(2) {
                prop_assert!(w[0].xnorm < w[1].xnorm);
                prop_assert!(w[0].xi.mid() > w[1].xi.mid());
            }
            for r in &seq.records {
                prop_assert_eq!(r.x.supnorm().to_u64().unwrap(), r.xnorm);
                let first = r.x.coords().iter().find(|c| !c.is_zero()).unwrap();
                prop_assert!(first.is_positive());
            }
            for t in 1..=seq.records.last().unwrap().xnorm {
                prop_assert_eq!(seq.psi_at(t).cloned().unwrap(), psi(&th, t).unwrap());
            }
        }

        #[test]
        fn negation_preserves_norms_and_xi(th in arb_theta()) {
            let a = best_sequence(&th, 20).unwrap();
            let b = best_sequence(&th.negated(), 20).unwrap();
            prop_assert_eq!(a.xnorms(), b.xnorms());
            let xa: Vec<_> = a.records.iter().map(|r| r.xi.clone()).collect();
            let xb: Vec<_> = b.records.iter().map(|r| r.xi.clone()).collect();
            prop_assert_eq!(xa, xb);
        }

        #[test]
        fn minkowski_holds(th in arb_theta()) {
            let seq = best_sequence(&th, 30).unwrap();
            if seq.len() >= 2 {
                prop_assert!(minkowski_check(&seq).unwrap().iter().all(|r| r.pass));
            }
        }
    }
}
