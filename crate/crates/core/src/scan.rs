//! Certified fixed-point screening of integer points.
//!
//! Each matrix entry is rounded to a 128-bit binary fraction. For an integer
//! vector `x` the wrapping sum `sum_i F_ji * x_i` is exactly the fractional
//! part of the rounded row value, so the distance to the nearest integer is
//! known up to an explicit error `E_j = sum_i err_ji * |x_i|` (in units of
//! 2^-128). A point is discarded only when its certified lower bound exceeds
//! the current threshold; survivors are re-evaluated exactly by the caller.

use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;

use crate::error::Result;
use crate::exactnum::{ceil_rat, Rat};

const FRAC_BITS: u32 = 128;

fn two_pow_frac() -> BigInt {
    BigInt::one() << FRAC_BITS
}

/// Fixed-point image of an `n x m` matrix.
#[derive(Clone, Debug)]
pub(crate) struct FixedKernel {
    m: usize,
    n: usize,
    coef: Vec<u128>,
    err: Vec<u128>,
}

impl FixedKernel {
    /// `mids` and `rads` are row-major `n x m`.
    pub fn new(m: usize, n: usize, mids: &[Rat], rads: &[Rat]) -> Self {
        let one = two_pow_frac();
        let coef = mids
            .iter()
            .map(|r| {
                let num: BigInt = r.numer() * &one * 2;
                let num = num + r.denom();
                let rounded = num.div_floor(&(r.denom() * 2));
                rounded.mod_floor(&one).to_u128().unwrap()
            })
            .collect();
        let err = rads
            .iter()
            .map(|r| {
                let e = ceil_rat(&(r * Rat::from_integer(one.clone())));
                match e.to_u128() {
                    Some(v) if v < (1u128 << 126) => v + 1,
                    _ => u128::MAX,
                }
            })
            .collect();
        FixedKernel { m, n, coef, err }
    }

    /// `ceil(v * 2^128)`, saturating; `v` must be non-negative.
    pub fn threshold(v: &Rat) -> u128 {
        if !v.is_positive() {
            return 0;
        }
        ceil_rat(&(v * Rat::from_integer(two_pow_frac())))
            .to_u128()
            .unwrap_or(u128::MAX)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Cand {
    pub x: Vec<i64>,
    pub lower: u128,
    pub upper: u128,
}

#[derive(Clone, Debug)]
pub(crate) struct ShellCands {
    pub s: i64,
    pub cands: Vec<Cand>,
}

pub(crate) trait Sink {
    fn threshold(&self) -> u128;
    fn accept(&mut self, x: &[i64], lower: u128, upper: u128);
    fn end_shell(&mut self) -> Vec<Cand>;
}

/// Keeps the points that may attain a new running minimum: everything whose
/// lower bound does not exceed the smallest upper bound seen so far.
#[derive(Debug)]
pub(crate) struct MinSink {
    thr: u128,
    cur: Vec<Cand>,
}

impl MinSink {
    /// `thr` is an upper bound already known to be attained by an earlier point.
    pub fn new(thr: u128) -> Self {
        MinSink {
            thr,
            cur: Vec::new(),
        }
    }
}

impl Sink for MinSink {
    fn threshold(&self) -> u128 {
        self.thr
    }

    fn accept(&mut self, x: &[i64], lower: u128, upper: u128) {
        if upper < self.thr {
            self.thr = upper;
        }
        self.cur.push(Cand {
            x: x.to_vec(),
            lower,
            upper,
        });
    }

    fn end_shell(&mut self) -> Vec<Cand> {
        let thr = self.thr;
        let mut out = std::mem::take(&mut self.cur);
        out.retain(|c| c.lower <= thr);
        out
    }
}

/// Keeps every point whose lower bound is at most a fixed threshold,
/// optionally requiring a nonzero coordinate at index `>= skip`.
#[derive(Debug)]
pub(crate) struct BelowSink {
    thr: u128,
    skip: usize,
    cur: Vec<Cand>,
}

impl BelowSink {
    pub fn new(thr: u128, skip: usize) -> Self {
        BelowSink {
            thr,
            skip,
            cur: Vec::new(),
        }
    }
}

impl Sink for BelowSink {
    fn threshold(&self) -> u128 {
        self.thr
    }

    fn accept(&mut self, x: &[i64], lower: u128, upper: u128) {
        if x[self.skip..].iter().all(|&v| v == 0) {
            return;
        }
        self.cur.push(Cand {
            x: x.to_vec(),
            lower,
            upper,
        });
    }

    fn end_shell(&mut self) -> Vec<Cand> {
        std::mem::take(&mut self.cur)
    }
}

/// Walks the sign-normalized points of one sup-norm shell in lexicographic order.
pub(crate) struct Scanner<'k> {
    k: &'k FixedKernel,
    x: Vec<i64>,
    sums: Vec<u128>,
    errs: Vec<u128>,
    cur: Vec<u128>,
}

impl<'k> Scanner<'k> {
    pub fn new(k: &'k FixedKernel) -> Self {
        Scanner {
            k,
            x: vec![0; k.m],
            sums: vec![0; (k.m + 1) * k.n],
            errs: vec![0; (k.m + 1) * k.n],
            cur: vec![0; k.n],
        }
    }

    pub fn shell<S: Sink>(&mut self, s: i64, sink: &mut S) {
        debug_assert!(s >= 1);
        self.level(0, s, true, true, sink);
    }

    fn level<S: Sink>(&mut self, i: usize, s: i64, pending: bool, need: bool, sink: &mut S) {
        let (m, n) = (self.k.m, self.k.n);
        if i + 1 == m {
            self.innermost(s, pending, need, sink);
            return;
        }
        let lo = if pending { 0 } else { -s };
        for v in lo..=s {
            self.x[i] = v;
            let vu = v as i128 as u128;
            let va = v.unsigned_abs() as u128;
            for j in 0..n {
                let c = self.k.coef[j * m + i];
                let e = self.k.err[j * m + i];
                self.sums[(i + 1) * n + j] = self.sums[i * n + j].wrapping_add(c.wrapping_mul(vu));
                self.errs[(i + 1) * n + j] = self.errs[i * n + j].saturating_add(e.saturating_mul(va));
            }
            self.level(i + 1, s, pending && v == 0, need && v.abs() < s, sink);
        }
    }

    fn innermost<S: Sink>(&mut self, s: i64, pending: bool, need: bool, sink: &mut S) {
        let i = self.k.m - 1;
        if need {
            if !pending {
                self.single(i, -s, sink);
            }
            self.single(i, s, sink);
            return;
        }
        let (m, n) = (self.k.m, self.k.n);
        let start = (-s) as i128 as u128;
        for j in 0..n {
            self.cur[j] = self.sums[i * n + j].wrapping_add(self.k.coef[j * m + i].wrapping_mul(start));
        }
        for v in -s..=s {
            self.x[i] = v;
            self.test_point(i, v, sink);
            for j in 0..n {
                self.cur[j] = self.cur[j].wrapping_add(self.k.coef[j * m + i]);
            }
        }
    }

    fn single<S: Sink>(&mut self, i: usize, v: i64, sink: &mut S) {
        let (m, n) = (self.k.m, self.k.n);
        let vu = v as i128 as u128;
        for j in 0..n {
            self.cur[j] = self.sums[i * n + j].wrapping_add(self.k.coef[j * m + i].wrapping_mul(vu));
        }
        self.x[i] = v;
        self.test_point(i, v, sink);
    }

    #[inline]
    fn test_point<S: Sink>(&mut self, i: usize, v: i64, sink: &mut S) {
        let (m, n) = (self.k.m, self.k.n);
        let thr = sink.threshold();
        let va = v.unsigned_abs() as u128;
        let mut lo_max = 0u128;
        let mut up_max = 0u128;
        for j in 0..n {
            let s = self.cur[j];
            let d = s.min(s.wrapping_neg());
            let e = self.errs[i * n + j].saturating_add(self.k.err[j * m + i].saturating_mul(va));
            let lo = d.saturating_sub(e);
            if lo > thr {
                return;
            }
            lo_max = lo_max.max(lo);
            up_max = up_max.max(d.saturating_add(e));
        }
        sink.accept(&self.x, lo_max, up_max);
    }
}

fn scan_block<S: Sink>(k: &FixedKernel, a: i64, b: i64, mut sink: S) -> Vec<ShellCands> {
    let mut sc = Scanner::new(k);
    let mut out = Vec::new();
    for s in a..=b {
        sc.shell(s, &mut sink);
        let cands = sink.end_shell();
        if !cands.is_empty() {
            out.push(ShellCands { s, cands });
        }
    }
    out
}

fn split_by_work(a: i64, b: i64, m: usize, parts: usize) -> Vec<(i64, i64)> {
    let w = |s: i64| (s.max(1) as f64).powi(m as i32 - 1);
    let total: f64 = (a..=b).map(w).sum();
    let target = total / parts as f64;
    let mut out = Vec::new();
    let mut start = a;
    let mut acc = 0.0;
    for s in a..=b {
        acc += w(s);
        if acc >= target && s < b {
            out.push((start, s));
            start = s + 1;
            acc = 0.0;
        }
    }
    out.push((start, b));
    out
}

/// Scans shells `lo..=hi` in parallel blocks and hands the surviving
/// candidates to `consume` in shell order. `consume` returns the threshold
/// used to seed the sinks of the next wave, or `Break` to stop.
pub(crate) fn scan_shells<S, F, C>(
    k: &FixedKernel,
    lo: i64,
    hi: i64,
    make_sink: F,
    mut consume: C,
) -> Result<()>
where
    S: Sink,
    F: Fn(u128) -> S + Sync,
    C: FnMut(ShellCands) -> Result<ControlFlow<(), u128>>,
{
    let mut thr = u128::MAX;
    if lo > hi {
        return Ok(());
    }
    let parts = rayon::current_num_threads().max(1) * 4;
    let mut start = lo;
    let mut wave = 64i64;
    while start <= hi {
        let end = hi.min(start.saturating_add(wave - 1));
        let blocks = split_by_work(start, end, k.m, parts);
        let results: Vec<Vec<ShellCands>> = blocks
            .par_iter()
            .map(|&(a, b)| scan_block(k, a, b, make_sink(thr)))
            .collect();
        for sc in results.into_iter().flatten() {
            match consume(sc)? {
                ControlFlow::Break(()) => return Ok(()),
                ControlFlow::Continue(t) => thr = t,
            }
        }
        start = end + 1;
        wave = wave.saturating_mul(4);
    }
    Ok(())
}

/// Number of sign-normalized points on shell `s`, computed exactly.
#[cfg(test)]
fn shell_size(m: usize, s: i64) -> i64 {
    ((2 * s + 1).pow(m as u32) - (2 * s - 1).pow(m as u32)) / 2
}
