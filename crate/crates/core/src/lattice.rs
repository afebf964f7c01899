//! Exact integer linear algebra on extended approximation vectors.

use std::collections::{BTreeMap, HashSet};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{ApproxSequence, MatrixTheta};
use crate::error::{Error, Result};
use crate::exactnum::{
    depth_schedule, rat_int, rat_to_f64, serde_bigint, serde_rat, CertifiedValue, Generator,
    IntVec, Rat,
};

type Mat = Vec<Vec<BigInt>>;

fn rows_of(vectors: &[IntVec]) -> Result<(Mat, usize)> {
    let d = vectors.first().map_or(0, |v| v.len());
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::DimensionMismatch("vectors of different lengths".into()));
    }
    Ok((vectors.iter().map(|v| v.coords().to_vec()).collect(), d))
}

/// Fraction-free (Bareiss) elimination; returns the rank.
fn bareiss_rank(mut a: Mat, cols: usize) -> usize {
    let rows = a.len();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                a[i][j] = v / &prev;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Determinant of a square integer matrix by Bareiss elimination.
fn bareiss_det(mut a: Mat) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut prev = BigInt::one();
    let mut sign = 1;
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return BigInt::zero();
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[k][k] * &a[i][j] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    a[n - 1][n - 1].clone() * sign
}

/// Rank of the rational span.
pub fn int_rank(vectors: &[IntVec]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let (a, d) = rows_of(vectors).expect("vectors of equal length");
    bareiss_rank(a, d)
}

/// Unimodular row reduction of `a` on its first `cols` columns.
/// Returns the number of nonzero rows of the echelon part.
fn echelon(a: &mut Mat, cols: usize) -> usize {
    let rows = a.len();
    let mut cur = 0;
    for c in 0..cols {
        if cur == rows {
            break;
        }
        loop {
            let piv = (cur..rows)
                .filter(|&r| !a[r][c].is_zero())
                .min_by(|&x, &y| a[x][c].abs().cmp(&a[y][c].abs()));
            let Some(piv) = piv else { break };
            a.swap(cur, piv);
            let pivot_row = a[cur].clone();
            let mut clean = true;
            for r in cur + 1..rows {
                if a[r][c].is_zero() {
                    continue;
                }
                let q = a[r][c].div_floor(&pivot_row[c]);
                for (v, p) in a[r].iter_mut().zip(&pivot_row) {
                    *v -= &q * p;
                }
                clean &= a[r][c].is_zero();
            }
            if clean {
                cur += 1;
                break;
            }
        }
    }
    cur
}

/// Row Hermite normal form: positive pivots, entries above a pivot reduced
/// into `[0, pivot)`, zero rows dropped. Canonical for the row lattice.
fn hnf_rows(mut a: Mat, cols: usize) -> Mat {
    let rank = echelon(&mut a, cols);
    a.truncate(rank);
    let mut pivots = Vec::with_capacity(rank);
    for i in 0..rank {
        let c = (0..cols).find(|&c| !a[i][c].is_zero()).unwrap();
        if a[i][c].is_negative() {
            for v in a[i].iter_mut() {
                *v = -&*v;
            }
        }
        pivots.push(c);
    }
    for i in 0..rank {
        let c = pivots[i];
        let row = a[i].clone();
        for r in 0..i {
            let q = a[r][c].div_floor(&row[c]);
            if !q.is_zero() {
                for (v, p) in a[r].iter_mut().zip(&row) {
                    *v -= &q * p;
                }
            }
        }
    }
    a
}

/// Lattice basis of `{w ∈ Z^d : a·w = 0 for every row a}`.
fn int_kernel(rows: &Mat, d: usize) -> Mat {
    let p = rows.len();
    let mut t: Mat = (0..d)
        .map(|i| {
            let mut r: Vec<BigInt> = rows.iter().map(|a| a[i].clone()).collect();
            r.extend((0..d).map(|j| BigInt::from((i == j) as i32)));
            r
        })
        .collect();
    let rank = echelon(&mut t, p);
    t[rank..].iter().map(|r| r[p..].to_vec()).collect()
}

/// Saturated integer basis of a rational subspace with its squared height.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalSubspace {
    /// Basis columns (column-major), in Hermite normal form.
    pub basis: Vec<IntVec>,
    #[serde(with = "serde_bigint")]
    pub height_sq: BigInt,
}

impl RationalSubspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.basis.first().map_or(0, |b| b.len())
    }

    /// Whether `v` lies in the rational span.
    pub fn contains(&self, v: &IntVec) -> bool {
        let mut all = self.basis.clone();
        all.push(v.clone());
        int_rank(&all) == self.dim()
    }
}

/// Gram determinant of the given vectors.
pub fn gram_det(vectors: &[IntVec]) -> BigInt {
    let g: Mat = vectors
        .iter()
        .map(|a| {
            vectors
                .iter()
                .map(|b| a.coords().iter().zip(b.coords()).map(|(p, q)| p * q).sum())
                .collect()
        })
        .collect();
    bareiss_det(g)
}

/// The lattice `span_Q(vectors) ∩ Z^d`, canonically.
pub fn saturated_basis(vectors: &[IntVec]) -> Result<RationalSubspace> {
    if vectors.is_empty() {
        return Err(Error::InvalidParameter("saturated_basis of an empty set".into()));
    }
    let (rows, d) = rows_of(vectors)?;
    let normals = int_kernel(&rows, d);
    let sat = int_kernel(&normals, d);
    let basis: Vec<IntVec> = hnf_rows(sat, d).into_iter().map(IntVec::new).collect();
    let height_sq = gram_det(&basis);
    Ok(RationalSubspace { basis, height_sq })
}

/// `Δ = sqrt(radicand)`, the area spanned by two vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covolume {
    #[serde(with = "serde_bigint")]
    pub radicand: BigInt,
    pub value: f64,
}

pub fn covolume2(z1: &IntVec, z2: &IntVec) -> Result<Covolume> {
    if z1.len() != z2.len() {
        return Err(Error::DimensionMismatch("covolume2 of vectors of different lengths".into()));
    }
    let radicand = gram_det(&[z1.clone(), z2.clone()]);
    let value = rat_to_f64(&rat_int(radicand.clone())).sqrt();
    Ok(Covolume { radicand, value })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionReport {
    /// `(nu0, rank span{z_nu : nu >= nu0})`
    pub tail_ranks: Vec<(usize, usize)>,
    #[serde(rename = "R_est")]
    pub r_est: usize,
    pub nu0_star: usize,
    pub witness: RationalSubspace,
}

pub fn default_min_tail(d: usize) -> usize {
    d + 2
}

/// Tail-span ranks of the extended vectors and the stabilized value.
pub fn estimate_r(seq: &ApproxSequence, min_tail: usize) -> Result<DimensionReport> {
    let z = seq.extended_vectors();
    estimate_r_vectors(&z, min_tail)
}

pub fn estimate_r_vectors(z: &[IntVec], min_tail: usize) -> Result<DimensionReport> {
    let n = z.len();
    if n < min_tail + 1 || n < 2 {
        return Err(Error::InsufficientData(format!(
            "{n} records, need at least min_tail + 1 = {}",
            (min_tail + 1).max(2)
        )));
    }
    let last = n - min_tail.max(1);
    let tail_ranks: Vec<(usize, usize)> = (1..=last).map(|nu0| (nu0, int_rank(&z[nu0 - 1..]))).collect();
    let r_est = tail_ranks.last().unwrap().1;
    let nu0_star = tail_ranks.iter().find(|t| t.1 == r_est).unwrap().0;
    let witness = saturated_basis(&z[nu0_star - 1..])?;
    Ok(DimensionReport {
        tail_ranks,
        r_est,
        nu0_star,
        witness,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertOutcome {
    Certified {
        #[serde(with = "serde_rat")]
        min_absdet_lower: Rat,
        checked: usize,
    },
    /// Rows of a primitive integer `m x d` matrix `U` with `det(U [I; Θ]) = 0`.
    Counterexample { u: Vec<IntVec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrrationalityCertificate {
    pub bound_b: u32,
    pub outcome: CertOutcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertConfig {
    /// Largest admissible `(2B+1)^(m d)`.
    pub budget: f64,
    pub max_depth: u32,
}

impl Default for CertConfig {
    fn default() -> Self {
        CertConfig {
            budget: 2e7,
            max_depth: crate::approx::DEFAULT_MAX_DEPTH,
        }
    }
}

/// Symbolic form of an entry: `c + Σ a_k · atom_k`.
#[derive(Clone, Debug)]
enum AtomKind {
    Sqrt(Rat),
    Opaque,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Poly(BTreeMap<Vec<usize>, Rat>);

impl Poly {
    fn constant(c: Rat) -> Poly {
        let mut p = BTreeMap::new();
        if !c.is_zero() {
            p.insert(Vec::new(), c);
        }
        Poly(p)
    }

    fn add_term(&mut self, mono: Vec<usize>, c: Rat) {
        let e = self.0.entry(mono.clone()).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.0.remove(&mono);
        }
    }

    fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (k, v) in &other.0 {
            out.add_term(k.clone(), v.clone());
        }
        out
    }

    fn mul(&self, other: &Poly, atoms: &[AtomKind]) -> Poly {
        let mut out = Poly::default();
        for (ka, va) in &self.0 {
            for (kb, vb) in &other.0 {
                let mut mono: Vec<usize> = ka.iter().chain(kb).copied().collect();
                mono.sort_unstable();
                let mut coef = va * vb;
                // sqrt(r)^2 = r
                let mut reduced = Vec::with_capacity(mono.len());
                let mut i = 0;
                while i < mono.len() {
                    if i + 1 < mono.len() && mono[i] == mono[i + 1] {
                        if let AtomKind::Sqrt(r) = &atoms[mono[i]] {
                            coef *= r;
                            i += 2;
                            continue;
                        }
                    }
                    reduced.push(mono[i]);
                    i += 1;
                }
                out.add_term(reduced, coef);
            }
        }
        out
    }

    fn scale(&self, k: &Rat) -> Poly {
        let mut out = Poly::default();
        for (m, v) in &self.0 {
            out.add_term(m.clone(), v * k);
        }
        out
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
}

struct Symbolic {
    atoms: Vec<AtomKind>,
    /// row-major `n x m`
    entries: Vec<Poly>,
}

impl Symbolic {
    fn new(theta: &MatrixTheta) -> Symbolic {
        let mut atoms = Vec::new();
        let mut keys: Vec<(Generator, usize)> = Vec::new();
        let mut sqrt_keys: Vec<(Rat, usize)> = Vec::new();
        let mut entries = Vec::new();
        for row in theta.rows() {
            for e in row {
                let p = if e.is_exact() {
                    Poly::constant(e.mid().clone())
                } else {
                    match e.generator() {
                        Some(Generator::AffineSqrt {
                            offset,
                            scale,
                            radicand,
                        }) => {
                            let id = match sqrt_keys.iter().find(|k| &k.0 == radicand) {
                                Some(k) => k.1,
                                None => {
                                    atoms.push(AtomKind::Sqrt(radicand.clone()));
                                    sqrt_keys.push((radicand.clone(), atoms.len() - 1));
                                    atoms.len() - 1
                                }
                            };
                            let mut p = Poly::constant(offset.clone());
                            p.add_term(vec![id], scale.clone());
                            p
                        }
                        Some(g) => {
                            let id = match keys.iter().find(|k| &k.0 == g) {
                                Some(k) => k.1,
                                None => {
                                    atoms.push(AtomKind::Opaque);
                                    keys.push((g.clone(), atoms.len() - 1));
                                    atoms.len() - 1
                                }
                            };
                            let mut p = Poly::default();
                            p.add_term(vec![id], Rat::one());
                            p
                        }
                        None => {
                            atoms.push(AtomKind::Opaque);
                            let mut p = Poly::default();
                            p.add_term(vec![atoms.len() - 1], Rat::one());
                            p
                        }
                    }
                };
                entries.push(p);
            }
        }
        Symbolic { atoms, entries }
    }
}

fn permutations(m: usize) -> Vec<(Vec<usize>, bool)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, m: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == m {
            out.push(prefix.clone());
            return;
        }
        for i in 0..m {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, m, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], m, &mut out);
    out.into_iter()
        .map(|p| {
            let inversions = (0..m)
                .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            (p, inversions % 2 == 1)
        })
        .collect()
}

/// `M = U_x + U_y Θ` for `U = [U_x | U_y]`.
fn symbolic_matrix(u: &[i64], m: usize, n: usize, sym: &Symbolic) -> Vec<Poly> {
    let d = m + n;
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let mut p = Poly::constant(Rat::from_integer(BigInt::from(u[i * d + j])));
            for k in 0..n {
                let c = u[i * d + m + k];
                if c != 0 {
                    p = p.add(&sym.entries[k * m + j].scale(&Rat::from_integer(BigInt::from(c))));
                }
            }
            out.push(p);
        }
    }
    out
}

fn det_poly(mat: &[Poly], m: usize, perms: &[(Vec<usize>, bool)], atoms: &[AtomKind]) -> Poly {
    let mut total = Poly::default();
    for (p, odd) in perms {
        let mut term = Poly::constant(Rat::one());
        for i in 0..m {
            term = term.mul(&mat[i * m + p[i]], atoms);
            if term.is_zero() {
                break;
            }
        }
        if *odd {
            term = term.scale(&-Rat::one());
        }
        total = total.add(&term);
    }
    total
}

fn det_interval(
    u: &[i64],
    m: usize,
    n: usize,
    vals: &[CertifiedValue],
    perms: &[(Vec<usize>, bool)],
) -> CertifiedValue {
    let d = m + n;
    let mat: Vec<CertifiedValue> = (0..m * m)
        .map(|ij| {
            let (i, j) = (ij / m, ij % m);
            let mut v = CertifiedValue::exact(Rat::from_integer(BigInt::from(u[i * d + j])));
            for k in 0..n {
                let c = u[i * d + m + k];
                if c != 0 {
                    v = v.add(&vals[k * m + j].scale_int(&BigInt::from(c)));
                }
            }
            v
        })
        .collect();
    let mut total = CertifiedValue::exact(Rat::zero());
    for (p, odd) in perms {
        let mut term = CertifiedValue::exact(Rat::one());
        for i in 0..m {
            term = term.mul(&mat[i * m + p[i]]);
        }
        if *odd {
            term = term.scale_int(&BigInt::from(-1));
        }
        total = total.add(&term);
    }
    total
}

/// Reduced row echelon form over Q, the dedup key for a row space.
fn rref_key(u: &[i64], m: usize, d: usize) -> Option<Vec<Ratio<i64>>> {
    let mut a: Vec<Vec<Ratio<i64>>> = (0..m)
        .map(|i| (0..d).map(|j| Ratio::from_integer(u[i * d + j])).collect())
        .collect();
    let mut r = 0;
    for c in 0..d {
        let Some(p) = (r..m).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for v in a[r].iter_mut() {
            *v *= inv;
        }
        for i in 0..m {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c];
                for j in 0..d {
                    let s = a[r][j] * f;
                    a[i][j] -= s;
                }
            }
        }
        r += 1;
        if r == m {
            break;
        }
    }
    (r == m).then(|| a.into_iter().flatten().collect())
}

/// Searches integer `m x d` matrices `U` with entries in `[-B, B]` for one with
/// `det(U [I_m; Θ]) = 0`. Certified only when every determinant is bounded
/// away from zero.
pub fn cert_completely_irrational(theta: &MatrixTheta, b: u32) -> Result<IrrationalityCertificate> {
    cert_completely_irrational_with(theta, b, &CertConfig::default())
}

pub fn cert_completely_irrational_with(
    theta: &MatrixTheta,
    b: u32,
    cfg: &CertConfig,
) -> Result<IrrationalityCertificate> {
    if b == 0 {
        return Err(Error::InvalidParameter("B must be at least 1".into()));
    }
    let (m, n) = (theta.m(), theta.n());
    let d = m + n;
    let needed = (2.0 * b as f64 + 1.0).powi((m * d) as i32);
    if needed > cfg.budget {
        return Err(Error::BudgetExceeded {
            needed,
            budget: cfg.budget,
        });
    }
    if m > 5 {
        return Err(Error::InvalidParameter("m > 5 is not supported".into()));
    }
    let b = b as i64;
    let len = m * d;
    // lexicographic odometer over [-B, B]^(m d), first entry most significant
    let mut u = vec![-b; len];
    let mut seen = HashSet::new();
    let mut unique: Vec<Vec<i64>> = Vec::new();
    loop {
        if let Some(key) = rref_key(&u, m, d) {
            if seen.insert(key) {
                unique.push(u.clone());
            }
        }
        let mut i = len;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if u[i] < b {
                u[i] += 1;
                break;
            }
            u[i] = -b;
        }
        if u.iter().all(|&v| v == -b) {
            break;
        }
    }

    let sym = Symbolic::new(theta);
    let perms = permutations(m);
    let refinable = theta.is_refinable();
    let snapshot = |depth: u32| -> Vec<CertifiedValue> {
        theta.rows().iter().flatten().map(|e| e.refined(depth)).collect()
    };
    let base = snapshot(0);
    let mut deeper: Vec<(u32, Vec<CertifiedValue>)> = Vec::new();
    if refinable {
        for depth in depth_schedule(cfg.max_depth) {
            deeper.push((depth, snapshot(depth)));
        }
    }

    enum One {
        Zero,
        Lower(Rat),
        Unknown,
    }
    let results: Vec<One> = unique
        .par_iter()
        .map(|u| {
            let mat = symbolic_matrix(u, m, n, &sym);
            if det_poly(&mat, m, &perms, &sym.atoms).is_zero() {
                return One::Zero;
            }
            let mut v = det_interval(u, m, n, &base, &perms);
            let mut k = 0;
            while v.contains_zero() && k < deeper.len() {
                v = det_interval(u, m, n, &deeper[k].1, &perms);
                k += 1;
            }
            if v.contains_zero() {
                One::Unknown
            } else {
                One::Lower(v.mid().abs() - v.rad())
            }
        })
        .collect();

    let mut min_lower: Option<Rat> = None;
    for (u, r) in unique.iter().zip(&results) {
        match r {
            One::Zero => {
                let rows: Vec<IntVec> = (0..m).map(|i| IntVec::from_i64(&u[i * d..(i + 1) * d])).collect();
                let canon = saturated_basis(&rows)?;
                return Ok(IrrationalityCertificate {
                    bound_b: b as u32,
                    outcome: CertOutcome::Counterexample { u: canon.basis },
                });
            }
            One::Unknown => {
                return Err(Error::PrecisionExhausted(format!(
                    "determinant for U = {:?} straddles zero",
                    u
                )))
            }
            One::Lower(l) => {
                if min_lower.as_ref().is_none_or(|cur| l < cur) {
                    min_lower = Some(l.clone());
                }
            }
        }
    }
    Ok(IrrationalityCertificate {
        bound_b: b as u32,
        outcome: CertOutcome::Certified {
            min_absdet_lower: min_lower.unwrap_or_else(Rat::zero),
            checked: unique.len(),
        },
    })
}

/// One row of the non-certified proof diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagRow {
    pub nu: usize,
    #[serde(with = "serde_bigint")]
    pub delta_radicand: BigInt,
    pub delta: f64,
    /// `|x_{nu+1}| * xi_nu`
    #[serde(with = "serde_rat")]
    pub product: Rat,
    pub dist_to_ell: Option<f64>,
    pub delta_over_product: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub intersection_dim: usize,
    /// Unit direction of `R ∩ L` (floating point).
    pub ell: Vec<f64>,
    /// Smallest angle between the parts of `R` and `L` orthogonal to `ell`.
    pub angle: Option<f64>,
    pub rows: Vec<DiagRow>,
}

fn orthonormal_columns(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, false);
    let u = svd.u.unwrap();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-12 * svd.singular_values.max()).count();
    u.columns(0, rank).into_owned()
}

/// Floating-point table of covolumes, products and distances to `R ∩ L_Θ`.
pub fn proof_diagnostics(
    seq: &ApproxSequence,
    witness: &RationalSubspace,
    theta: &MatrixTheta,
) -> Result<Diagnostics> {
    let (m, n) = (theta.m(), theta.n());
    let d = m + n;
    if witness.dim() < 2 {
        return Err(Error::InvalidParameter("witness must have dimension at least 2".into()));
    }
    if witness.ambient() != d {
        return Err(Error::DimensionMismatch("witness and theta dimensions differ".into()));
    }
    let l = DMatrix::from_fn(d, m, |r, c| {
        if r < m {
            (r == c) as u8 as f64
        } else {
            rat_to_f64(theta.entry(r - m, c).mid())
        }
    });
    let rmat = DMatrix::from_fn(d, witness.dim(), |r, c| {
        witness.basis[c].coords()[r].to_f64().unwrap_or(f64::NAN)
    });
    let ql = orthonormal_columns(&l);
    let qr = orthonormal_columns(&rmat);
    let cross = ql.transpose() * &qr;
    let svd = cross.clone().svd(true, false);
    let mut sv: Vec<(f64, usize)> = svd.singular_values.iter().copied().zip(0..).collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0));
    let tol = 1e-9;
    let dim = sv.iter().filter(|s| s.0 > 1.0 - tol).count();
    if dim != 1 {
        return Err(Error::DegenerateIntersection(dim));
    }
    let u = svd.u.unwrap();
    let e = &ql * u.column(sv[0].1);
    let e = &e / e.norm();
    let angle = sv.get(1).map(|s| s.0.clamp(-1.0, 1.0).acos());

    let recs = &seq.records;
    let mut rows = Vec::new();
    for (i, w) in recs.windows(2).enumerate() {
        let cov = covolume2(&w[0].z(), &w[1].z())?;
        let product = w[0].xi.mid() * rat_int(w[1].xnorm);
        let z: Vec<f64> = w[0].z().coords().iter().map(|c| rat_to_f64(&rat_int(c.clone()))).collect();
        let zv = nalgebra::DVector::from_vec(z);
        let proj = e.dot(&zv);
        let dist = (&zv - &e * proj).norm();
        let pf = rat_to_f64(&product);
        rows.push(DiagRow {
            nu: i + 1,
            delta_radicand: cov.radicand,
            delta: cov.value,
            product,
            dist_to_ell: dist.is_finite().then_some(dist),
            delta_over_product: (pf > 0.0).then(|| cov.value / pf),
        });
    }
    Ok(Diagnostics {
        intersection_dim: dim,
        ell: e.iter().copied().collect(),
        angle,
        rows,
    })
}

/// Dimension of `R ∩ L_Θ` estimated numerically (same tolerance as the diagnostics).
pub fn intersection_dim(witness: &RationalSubspace, theta: &MatrixTheta) -> usize {
    let (m, n) = (theta.m(), theta.n());
    let d = m + n;
    let l = DMatrix::from_fn(d, m, |r, c| {
        if r < m {
            (r == c) as u8 as f64
        } else {
            rat_to_f64(theta.entry(r - m, c).mid())
        }
    });
    let rmat = DMatrix::from_fn(d, witness.dim(), |r, c| {
        witness.basis[c].coords()[r].to_f64().unwrap_or(f64::NAN)
    });
    let cross = orthonormal_columns(&l).transpose() * orthonormal_columns(&rmat);
    cross.singular_values().iter().filter(|&&s| s > 1.0 - 1e-9).count()
}
