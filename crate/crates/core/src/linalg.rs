//! Exact integer linear algebra: Smith normal form, unique solves, saturated
//! kernels and homology of chain complexes of free Z-modules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Int = BigInt;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("right-hand side is not in the integer column span")]
    NoIntegerSolution,
    #[error("matrix has a nontrivial kernel, solution is not unique")]
    NonUnique,
    #[error("boundary composition is nonzero at degree {degree}")]
    NotAComplex { degree: usize },
}

/// Dense row-major matrix of arbitrary-precision integers.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Int>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![Int::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Int::one());
        }
        m
    }

    pub fn from_rows<T: Into<Int> + Clone>(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DimensionMismatch {
                    expected: format!("{c} columns"),
                    found: format!("{} columns", row.len()),
                });
            }
            data.extend(row.iter().cloned().map(Into::into));
        }
        Ok(IntMatrix { rows: r, cols: c, data })
    }

    /// Builds a matrix with the given shape from row vectors; handy when the
    /// row list may be empty but the column count is still meaningful.
    pub fn from_row_vecs(rows: usize, cols: usize, vecs: &[Vec<Int>]) -> Self {
        assert_eq!(vecs.len(), rows);
        let mut m = Self::zeros(rows, cols);
        for (i, v) in vecs.iter().enumerate() {
            assert_eq!(v.len(), cols);
            for (j, x) in v.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    /// Matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_columns(rows: usize, cols: &[Vec<Int>]) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, v) in cols.iter().enumerate() {
            assert_eq!(v.len(), rows);
            for (i, x) in v.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &Int {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Int) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: &Int) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[Int] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Int> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Int>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{} rows", self.cols),
                found: format!("{} rows", other.rows),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(l, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Int]) -> Result<Vec<Int>, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("vector of length {}", self.cols),
                found: format!("length {}", v.len()),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn add(&self, other: &IntMatrix) -> Result<IntMatrix, LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{:?}", self.shape()),
                found: format!("{:?}", other.shape()),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(IntMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: &Int) -> IntMatrix {
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn neg(&self) -> IntMatrix {
        self.scale(&Int::from(-1))
    }

    /// Kronecker product, row index `i * other.rows + k`.
    pub fn kron(&self, other: &IntMatrix) -> IntMatrix {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        let b = other.get(k, l);
                        if !b.is_zero() {
                            out.set(i * other.rows + k, j * other.cols + l, a * b);
                        }
                    }
                }
            }
        }
        out
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn put_block(&mut self, r0: usize, c0: usize, block: &IntMatrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.set(r0 + i, c0 + j, block.get(i, j).clone());
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> IntMatrix {
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.set(i, j, self.get(r0 + i, c0 + j).clone());
            }
        }
        out
    }

    pub fn hstack(parts: &[&IntMatrix], rows: usize) -> IntMatrix {
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut c = 0;
        for p in parts {
            assert_eq!(p.rows, rows);
            out.put_block(0, c, p);
            c += p.cols;
        }
        out
    }

    pub fn vstack(parts: &[&IntMatrix], cols: usize) -> IntMatrix {
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut out = Self::zeros(rows, cols);
        let mut r = 0;
        for p in parts {
            assert_eq!(p.cols, cols);
            out.put_block(r, 0, p);
            r += p.rows;
        }
        out
    }

    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.to_i64()).collect())
            .collect()
    }

    fn nonzero_rows(&self) -> Vec<BTreeMap<usize, Int>> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(j, x)| (j, x.clone()))
                    .collect()
            })
            .collect()
    }
}

/// `u * a * v == d` with `u`, `v` unimodular and `d` diagonal with
/// `d[i] | d[i+1]` on the nonzero part.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    pub rank: usize,
}

impl Smith {
    pub fn diagonal(&self) -> Vec<Int> {
        (0..self.rank).map(|i| self.d.get(i, i).clone()).collect()
    }
}

struct SnfWork {
    a: Vec<Vec<Int>>,
    u: Option<Vec<Vec<Int>>>,
    v: Option<Vec<Vec<Int>>>,
    m: usize,
    n: usize,
}

impl SnfWork {
    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        self.a.swap(i, j);
        if let Some(u) = &mut self.u {
            u.swap(i, j);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for row in &mut self.a {
            row.swap(i, j);
        }
        if let Some(v) = &mut self.v {
            for row in v {
                row.swap(i, j);
            }
        }
    }

    // row[dst] += q * row[src]
    fn add_row(&mut self, src: usize, dst: usize, q: &Int) {
        let (s, d) = pair_mut(&mut self.a, src, dst);
        axpy(d, q, s);
        if let Some(u) = &mut self.u {
            let (s, d) = pair_mut(u, src, dst);
            axpy(d, q, s);
        }
    }

    // col[dst] += q * col[src]
    fn add_col(&mut self, src: usize, dst: usize, q: &Int) {
        for row in &mut self.a {
            if !row[src].is_zero() {
                let t = &row[src] * q;
                row[dst] += t;
            }
        }
        if let Some(v) = &mut self.v {
            for row in v {
                if !row[src].is_zero() {
                    let t = &row[src] * q;
                    row[dst] += t;
                }
            }
        }
    }

    fn neg_row(&mut self, i: usize) {
        for x in &mut self.a[i] {
            *x = -std::mem::take(x);
        }
        if let Some(u) = &mut self.u {
            for x in &mut u[i] {
                *x = -std::mem::take(x);
            }
        }
    }

    fn run(&mut self) -> usize {
        let mut t = 0;
        while t < self.m.min(self.n) {
            let Some((pi, pj)) = self.min_entry(t) else {
                break;
            };
            self.swap_rows(t, pi);
            self.swap_cols(t, pj);
            loop {
                let mut clean = true;
                for i in t + 1..self.m {
                    if !self.a[i][t].is_zero() {
                        let q = -self.a[i][t].div_floor(&self.a[t][t]);
                        self.add_row(t, i, &q);
                        if !self.a[i][t].is_zero() {
                            clean = false;
                        }
                    }
                }
                for j in t + 1..self.n {
                    if !self.a[t][j].is_zero() {
                        let q = -self.a[t][j].div_floor(&self.a[t][t]);
                        self.add_col(t, j, &q);
                        if !self.a[t][j].is_zero() {
                            clean = false;
                        }
                    }
                }
                if !clean {
                    // bring the smallest leftover in row/column t to the pivot
                    let mut best: Option<(usize, usize)> = None;
                    let mut best_abs: Option<Int> = None;
                    for i in t..self.m {
                        let x = &self.a[i][t];
                        if !x.is_zero() && best_abs.as_ref().is_none_or(|b| x.abs() < *b) {
                            best_abs = Some(x.abs());
                            best = Some((i, t));
                        }
                    }
                    for j in t..self.n {
                        let x = &self.a[t][j];
                        if !x.is_zero() && best_abs.as_ref().is_none_or(|b| x.abs() < *b) {
                            best_abs = Some(x.abs());
                            best = Some((t, j));
                        }
                    }
                    let (bi, bj) = best.expect("pivot row/column cannot vanish");
                    self.swap_rows(t, bi);
                    self.swap_cols(t, bj);
                    continue;
                }
                let p = self.a[t][t].clone();
                let bad = (t + 1..self.m).find(|&i| {
                    (t + 1..self.n).any(|j| !self.a[i][j].is_zero() && !self.a[i][j].is_multiple_of(&p))
                });
                match bad {
                    Some(i) => self.add_row(i, t, &Int::one()),
                    None => break,
                }
            }
            if self.a[t][t].is_negative() {
                self.neg_row(t);
            }
            t += 1;
        }
        t
    }

    fn min_entry(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        let mut best_abs: Option<Int> = None;
        for i in t..self.m {
            for j in t..self.n {
                let x = &self.a[i][j];
                if x.is_zero() {
                    continue;
                }
                if best_abs.as_ref().is_none_or(|b| x.abs() < *b) {
                    if x.is_one() || (-x).is_one() {
                        return Some((i, j));
                    }
                    best_abs = Some(x.abs());
                    best = Some((i, j));
                }
            }
        }
        best
    }
}

fn pair_mut<T>(v: &mut [T], src: usize, dst: usize) -> (&T, &mut T) {
    assert_ne!(src, dst);
    if src < dst {
        let (a, b) = v.split_at_mut(dst);
        (&a[src], &mut b[0])
    } else {
        let (a, b) = v.split_at_mut(src);
        (&b[0], &mut a[dst])
    }
}

fn axpy(dst: &mut [Int], q: &Int, src: &[Int]) {
    for (d, s) in dst.iter_mut().zip(src) {
        if !s.is_zero() {
            *d += s * q;
        }
    }
}

fn identity_rows(n: usize) -> Vec<Vec<Int>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Int::one() } else { Int::zero() }).collect())
        .collect()
}

pub fn smith_normal_form(a: &IntMatrix) -> Smith {
    let (m, n) = a.shape();
    let mut w = SnfWork {
        a: a.to_rows(),
        u: Some(identity_rows(m)),
        v: Some(identity_rows(n)),
        m,
        n,
    };
    let rank = w.run();
    Smith {
        u: IntMatrix::from_row_vecs(m, m, &w.u.unwrap()),
        d: IntMatrix::from_row_vecs(m, n, &w.a),
        v: IntMatrix::from_row_vecs(n, n, &w.v.unwrap()),
        rank,
    }
}

/// Nonzero invariant factors in divisibility order. Unit pivots are removed
/// by sparse elimination first; the remainder goes through dense reduction.
pub fn invariant_factors(a: &IntMatrix) -> Vec<Int> {
    let mut rows = a.nonzero_rows();
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); a.cols()];
    for (i, r) in rows.iter().enumerate() {
        for &j in r.keys() {
            col_rows[j].insert(i);
        }
    }
    let mut alive: Vec<bool> = rows.iter().map(|r| !r.is_empty()).collect();
    let mut units = 0usize;
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        for (j, cr) in col_rows.iter().enumerate() {
            if cr.is_empty() {
                continue;
            }
            for &i in cr {
                let x = &rows[i][&j];
                if x.is_one() || (-x).is_one() {
                    let cost = (rows[i].len() - 1) * (cr.len() - 1);
                    if best.is_none_or(|b| cost < b.2) {
                        best = Some((i, j, cost));
                    }
                }
            }
            if matches!(best, Some((_, _, 0))) {
                break;
            }
        }
        let Some((p, c, _)) = best else {
            break;
        };
        let prow = std::mem::take(&mut rows[p]);
        let pval = prow[&c].clone();
        let targets: Vec<usize> = col_rows[c].iter().copied().filter(|&i| i != p).collect();
        for i in targets {
            let f = &rows[i][&c] * &pval;
            for (&j, x) in &prow {
                let e = rows[i].entry(j).or_insert_with(Int::zero);
                *e -= &f * x;
                if e.is_zero() {
                    rows[i].remove(&j);
                    col_rows[j].remove(&i);
                } else {
                    col_rows[j].insert(i);
                }
            }
        }
        for &j in prow.keys() {
            col_rows[j].remove(&p);
        }
        alive[p] = false;
        units += 1;
    }
    let rest: Vec<usize> = (0..rows.len()).filter(|&i| alive[i] && !rows[i].is_empty()).collect();
    let mut out = vec![Int::one(); units];
    if !rest.is_empty() {
        let cols: Vec<usize> = rest
            .iter()
            .flat_map(|&i| rows[i].keys().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let cpos: BTreeMap<usize, usize> = cols.iter().enumerate().map(|(k, &j)| (j, k)).collect();
        let mut dense = vec![vec![Int::zero(); cols.len()]; rest.len()];
        for (r, &i) in rest.iter().enumerate() {
            for (j, x) in &rows[i] {
                dense[r][cpos[j]] = x.clone();
            }
        }
        let mut w = SnfWork { a: dense, u: None, v: None, m: rest.len(), n: cols.len() };
        let rank = w.run();
        out.extend((0..rank).map(|i| w.a[i][i].clone()));
    }
    out
}

pub fn rank(a: &IntMatrix) -> usize {
    invariant_factors(a).len()
}

/// Precomputed Smith data for repeated solves against one matrix.
///
/// Tall matrices are reduced to a square subsystem on rows that are
/// independent modulo a large prime; solutions are checked against the
/// full system.
#[derive(Clone, Debug)]
pub struct UniqueSolver {
    smith: Smith,
    rows: Option<(Vec<usize>, IntMatrix)>,
}

const SELECT_PRIME: u64 = 2_305_843_009_213_693_951; // 2^61 - 1

fn mod_prime(x: &Int) -> u64 {
    let p = Int::from(SELECT_PRIME);
    x.mod_floor(&p).to_u64().unwrap()
}

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % SELECT_PRIME as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

/// Greedy row basis modulo a large prime, in row order.
fn independent_rows_modp(a: &IntMatrix) -> Vec<usize> {
    let n = a.cols();
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut picked = Vec::new();
    for i in 0..a.rows() {
        if picked.len() == n {
            break;
        }
        let mut v: Vec<u64> = a.row(i).iter().map(mod_prime).collect();
        for (pc, b) in &basis {
            if v[*pc] != 0 {
                let f = v[*pc];
                for (x, y) in v.iter_mut().zip(b) {
                    *x = (*x + SELECT_PRIME - mulmod(f, *y)) % SELECT_PRIME;
                }
            }
        }
        if let Some(pc) = v.iter().position(|&x| x != 0) {
            let inv = powmod(v[pc], SELECT_PRIME - 2);
            for x in v.iter_mut() {
                *x = mulmod(*x, inv);
            }
            basis.push((pc, v));
            picked.push(i);
        }
    }
    picked
}

impl UniqueSolver {
    pub fn new(a: &IntMatrix) -> Result<Self, LinalgError> {
        if a.rows() > a.cols() && a.cols() > 0 {
            let sel = independent_rows_modp(a);
            if sel.len() == a.cols() {
                let mut sub = IntMatrix::zeros(sel.len(), a.cols());
                for (r, &i) in sel.iter().enumerate() {
                    for j in 0..a.cols() {
                        sub.set(r, j, a.get(i, j).clone());
                    }
                }
                let smith = smith_normal_form(&sub);
                debug_assert_eq!(smith.rank, a.cols());
                return Ok(UniqueSolver { smith, rows: Some((sel, a.clone())) });
            }
        }
        let smith = smith_normal_form(a);
        if smith.rank < a.cols() {
            return Err(LinalgError::NonUnique);
        }
        Ok(UniqueSolver { smith, rows: None })
    }

    pub fn solve(&self, b: &[Int]) -> Result<Vec<Int>, LinalgError> {
        match &self.rows {
            None => self.solve_square(b),
            Some((sel, full)) => {
                if b.len() != full.rows() {
                    return Err(LinalgError::DimensionMismatch {
                        expected: format!("right-hand side of length {}", full.rows()),
                        found: format!("length {}", b.len()),
                    });
                }
                let sub: Vec<Int> = sel.iter().map(|&i| b[i].clone()).collect();
                let x = self.solve_square(&sub)?;
                if full.mul_vec(&x)? != b {
                    return Err(LinalgError::NoIntegerSolution);
                }
                Ok(x)
            }
        }
    }

    fn solve_square(&self, b: &[Int]) -> Result<Vec<Int>, LinalgError> {
        let s = &self.smith;
        let ub = s.u.mul_vec(b)?;
        let mut y = vec![Int::zero(); s.v.rows()];
        for (i, x) in ub.iter().enumerate() {
            if i < s.rank {
                let d = s.d.get(i, i);
                if !x.is_multiple_of(d) {
                    return Err(LinalgError::NoIntegerSolution);
                }
                y[i] = x / d;
            } else if !x.is_zero() {
                return Err(LinalgError::NoIntegerSolution);
            }
        }
        s.v.mul_vec(&y)
    }
}

/// The unique integer `x` with `a x = b`.
pub fn solve_unique(a: &IntMatrix, b: &[Int]) -> Result<Vec<Int>, LinalgError> {
    if b.len() != a.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("right-hand side of length {}", a.rows()),
            found: format!("length {}", b.len()),
        });
    }
    UniqueSolver::new(a)?.solve(b)
}

/// Row-style Hermite normal form of the lattice spanned by `vectors`:
/// echelon, positive pivots, entries above pivots reduced; zero rows dropped.
pub fn hermite_rows(vectors: &[Vec<Int>], width: usize) -> Vec<Vec<Int>> {
    let mut a: Vec<Vec<Int>> = vectors.to_vec();
    let mut r = 0;
    for col in 0..width {
        if r >= a.len() {
            break;
        }
        loop {
            let piv = (r..a.len())
                .filter(|&i| !a[i][col].is_zero())
                .min_by(|&i, &j| a[i][col].abs().cmp(&a[j][col].abs()));
            let Some(p) = piv else { break };
            a.swap(r, p);
            let mut done = true;
            for i in r + 1..a.len() {
                if !a[i][col].is_zero() {
                    let q = -a[i][col].div_floor(&a[r][col]);
                    let (s, d) = pair_mut(&mut a, r, i);
                    axpy(d, &q, s);
                    if !a[i][col].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if a[r][col].is_zero() {
            continue;
        }
        if a[r][col].is_negative() {
            for x in &mut a[r] {
                *x = -std::mem::take(x);
            }
        }
        for i in 0..r {
            if !a[i][col].is_zero() {
                let q = -a[i][col].div_floor(&a[r][col]);
                let (s, d) = pair_mut(&mut a, r, i);
                axpy(d, &q, s);
            }
        }
        r += 1;
    }
    a.truncate(r);
    a
}

/// Basis of the saturated kernel lattice `{x : a x = 0}` in Hermite form.
pub fn kernel_basis(a: &IntMatrix) -> Vec<Vec<Int>> {
    let s = smith_normal_form(a);
    let n = a.cols();
    let raw: Vec<Vec<Int>> = (s.rank..n).map(|j| s.v.column(j)).collect();
    hermite_rows(&raw, n)
}

/// True when the columns of `a` span a saturated sublattice of rank `cols`.
pub fn is_saturated_injective(a: &IntMatrix) -> bool {
    let f = invariant_factors(a);
    f.len() == a.cols() && f.iter().all(One::is_one)
}

/// `C_n` of rank `dims[n]`; `boundaries[i]` is `d_{i+1}: C_{i+1} -> C_i`.
#[derive(Clone, Debug)]
pub struct ChainComplex {
    dims: Vec<usize>,
    boundaries: Vec<IntMatrix>,
}

impl ChainComplex {
    pub fn new(dims: Vec<usize>, boundaries: Vec<IntMatrix>) -> Result<Self, LinalgError> {
        if boundaries.len() + 1 != dims.len().max(1) {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{} boundary maps", dims.len().saturating_sub(1)),
                found: format!("{}", boundaries.len()),
            });
        }
        for (i, d) in boundaries.iter().enumerate() {
            if d.shape() != (dims[i], dims[i + 1]) {
                return Err(LinalgError::DimensionMismatch {
                    expected: format!("{}x{} at degree {}", dims[i], dims[i + 1], i + 1),
                    found: format!("{:?}", d.shape()),
                });
            }
        }
        for i in 1..boundaries.len() {
            if !boundaries[i - 1].mul(&boundaries[i])?.is_zero() {
                return Err(LinalgError::NotAComplex { degree: i + 1 });
            }
        }
        Ok(ChainComplex { dims, boundaries })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// `d_n: C_n -> C_{n-1}`, `None` for `n == 0` or out of range.
    pub fn boundary(&self, n: usize) -> Option<&IntMatrix> {
        if n == 0 {
            None
        } else {
            self.boundaries.get(n - 1)
        }
    }

    pub fn top_degree(&self) -> usize {
        self.dims.len().saturating_sub(1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct HomologySummary {
    pub betti: Vec<usize>,
    pub torsion: Vec<Vec<Int>>,
}

impl HomologySummary {
    pub fn is_zero_in(&self, n: usize) -> bool {
        self.betti.get(n).is_none_or(|&b| b == 0) && self.torsion.get(n).is_none_or(|t| t.is_empty())
    }

    pub fn is_free(&self) -> bool {
        self.torsion.iter().all(|t| t.is_empty())
    }

    /// Degrees with nonzero homology.
    pub fn support(&self) -> Vec<usize> {
        (0..self.betti.len()).filter(|&n| !self.is_zero_in(n)).collect()
    }

    pub fn total_rank(&self) -> usize {
        self.betti.iter().sum()
    }

    /// Drops trailing zero degrees so summaries compare by content.
    pub fn trimmed(mut self) -> Self {
        while !self.betti.is_empty() && self.is_zero_in(self.betti.len() - 1) {
            self.betti.pop();
            self.torsion.pop();
        }
        self
    }
}

pub fn homology(c: &ChainComplex) -> HomologySummary {
    let n = c.dims.len();
    let factors: Vec<Vec<Int>> = c.boundaries.iter().map(invariant_factors).collect();
    let mut betti = Vec::with_capacity(n);
    let mut torsion = Vec::with_capacity(n);
    for deg in 0..n {
        let out_rank = if deg == 0 { 0 } else { factors[deg - 1].len() };
        let (in_rank, tors) = match factors.get(deg) {
            Some(f) => (f.len(), f.iter().filter(|x| !x.is_one()).cloned().collect()),
            None => (0, Vec::new()),
        };
        betti.push(c.dims[deg] - out_rank - in_rank);
        torsion.push(tors);
    }
    HomologySummary { betti, torsion }
}

pub fn rank_mod2(a: &IntMatrix) -> usize {
    let mut rows: Vec<FixedBitSet> = (0..a.rows())
        .map(|i| {
            let mut b = FixedBitSet::with_capacity(a.cols());
            for (j, x) in a.row(i).iter().enumerate() {
                if x.is_odd() {
                    b.insert(j);
                }
            }
            b
        })
        .collect();
    let mut r = 0;
    for col in 0..a.cols() {
        let Some(p) = (r..rows.len()).find(|&i| rows[i].contains(col)) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.contains(col) {
                row.symmetric_difference_with(&pivot);
            }
        }
        r += 1;
    }
    r
}

/// Betti numbers with Z/2 coefficients.
pub fn homology_mod2(c: &ChainComplex) -> Vec<usize> {
    let ranks: Vec<usize> = c.boundaries.iter().map(rank_mod2).collect();
    (0..c.dims.len())
        .map(|deg| {
            let out_rank = if deg == 0 { 0 } else { ranks[deg - 1] };
            let in_rank = ranks.get(deg).copied().unwrap_or(0);
            c.dims[deg] - out_rank - in_rank
        })
        .collect()
}

pub fn int_vec(xs: &[i64]) -> Vec<Int> {
    xs.iter().map(|&x| Int::from(x)).collect()
}
