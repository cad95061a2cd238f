//! Exact integer and rational arithmetic, and the dense linear algebra used
//! by every other module: reduced row echelon form, canonical solving of
//! possibly underdetermined systems, products and ranks.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision natural number.
pub type Nat = BigUint;

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: {op} got {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("ragged matrix rows: row {row} has {len} entries, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn nat_to_rational(n: &Nat) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

/// Parses `"num/den"` or an integer shorthand such as `"5"` or `"-3"`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    match t.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Rational::new(n, d))
        }
        None => {
            let n: BigInt = t.parse().map_err(|_| err())?;
            Ok(Rational::from_integer(n))
        }
    }
}

/// Serializes as `"num/den"`, always with an explicit denominator.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Serde adapter storing a [`Rational`] as its `"num/den"` string.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for vectors of rationals.
pub mod serde_rational_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Dense row-major matrix of rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RatMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        let nrows = rows.len();
        let mut data = Vec::with_capacity(nrows * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(LinalgError::Ragged {
                    row: i,
                    len: row.len(),
                    expected: cols,
                });
            }
            data.extend(row);
        }
        Ok(RatMatrix {
            rows: nrows,
            cols,
            data,
        })
    }

    /// Convenience constructor for integer literals. Panics on ragged input.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect())
            .expect("ragged integer matrix literal")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn row_mut(&mut self, i: usize) -> &mut [Rational] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
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

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (k, &j) in cols.iter().enumerate() {
                m.set(i, k, self.get(i, j).clone());
            }
        }
        m
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        RatMatrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn is_zero_row(&self, i: usize) -> bool {
        self.row(i).iter().all(Zero::is_zero)
    }

    pub fn mul(&self, other: &RatMatrix) -> Result<RatMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "mat_mul",
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let idx = i * out.cols + j;
                        out.data[idx] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Result<Vec<Rational>, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch {
                op: "mat_vec",
                left: (self.rows, self.cols),
                right: (v.len(), 1),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// Reduced row echelon form with the textbook choice of the leftmost
    /// available pivot column.
    pub fn rref(&self) -> (RatMatrix, Vec<usize>) {
        let order: Vec<usize> = (0..self.cols).collect();
        rref_with_order(self, &order)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

/// Gauss-Jordan elimination that visits columns in `order`. Pivot positions
/// are reported as original column indices, in the order they were chosen.
fn rref_with_order(m: &RatMatrix, order: &[usize]) -> (RatMatrix, Vec<usize>) {
    let mut r = m.clone();
    let mut pivots = Vec::new();
    let mut lead = 0;
    for &col in order {
        if lead == r.rows {
            break;
        }
        let Some(pivot_row) = (lead..r.rows).find(|&i| !r.get(i, col).is_zero()) else {
            continue;
        };
        if pivot_row != lead {
            for j in 0..r.cols {
                r.data.swap(pivot_row * r.cols + j, lead * r.cols + j);
            }
        }
        let inv = r.get(lead, col).recip();
        for x in r.row_mut(lead) {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        let pivot = r.row(lead).to_vec();
        for i in 0..r.rows {
            if i == lead {
                continue;
            }
            let factor = r.get(i, col).clone();
            if factor.is_zero() {
                continue;
            }
            for (x, p) in r.row_mut(i).iter_mut().zip(&pivot) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
        pivots.push(col);
        lead += 1;
    }
    (r, pivots)
}

/// Outcome of [`solve_detailed`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solve {
    /// A particular solution and the dimension of the solution space.
    Solved { x: Vec<Rational>, free_dim: usize },
    Inconsistent,
}

/// Solves `A x = b` exactly. Pivots are taken from the highest column index
/// downwards, and every free variable (necessarily a lower-index column) is
/// set to zero. This prefers relations that use the last columns, i.e. the
/// deepest internal nodes when columns are in breadth-first order.
pub fn solve_detailed(a: &RatMatrix, b: &[Rational]) -> Result<Solve, LinalgError> {
    if a.rows() != b.len() {
        return Err(LinalgError::DimensionMismatch {
            op: "solve",
            left: (a.rows(), a.cols()),
            right: (b.len(), 1),
        });
    }
    let n = a.cols();
    let mut aug = RatMatrix::zeros(a.rows(), n + 1);
    for i in 0..a.rows() {
        for j in 0..n {
            aug.set(i, j, a.get(i, j).clone());
        }
        aug.set(i, n, b[i].clone());
    }
    let mut order: Vec<usize> = (0..n).rev().collect();
    order.push(n);
    let (r, pivots) = rref_with_order(&aug, &order);
    if pivots.contains(&n) {
        return Ok(Solve::Inconsistent);
    }
    let mut x = vec![Rational::zero(); n];
    for (row, &col) in pivots.iter().enumerate() {
        x[col] = r.get(row, n).clone();
    }
    Ok(Solve::Solved {
        x,
        free_dim: n - pivots.len(),
    })
}

/// The canonical solution of `A x = b`, or `None` when the system is
/// inconsistent. See [`solve_detailed`] for the tie-break.
pub fn solve_canonical(a: &RatMatrix, b: &[Rational]) -> Result<Option<Vec<Rational>>, LinalgError> {
    Ok(match solve_detailed(a, b)? {
        Solve::Solved { x, .. } => Some(x),
        Solve::Inconsistent => None,
    })
}

/// Returns a small subset of row indices whose subsystem is already
/// inconsistent, or `None` if the whole system is consistent. Pairs are
/// tried first; otherwise rows are greedily dropped from an inconsistent
/// prefix while the remainder stays inconsistent.
pub fn inconsistent_core(a: &RatMatrix, b: &[Rational]) -> Result<Option<Vec<usize>>, LinalgError> {
    let inconsistent = |rows: &[usize]| -> Result<bool, LinalgError> {
        let sub = a.select_rows(rows);
        let rhs: Vec<Rational> = rows.iter().map(|&i| b[i].clone()).collect();
        Ok(matches!(solve_detailed(&sub, &rhs)?, Solve::Inconsistent))
    };
    let all: Vec<usize> = (0..a.rows()).collect();
    if !inconsistent(&all)? {
        return Ok(None);
    }
    for i in 0..a.rows() {
        let zero_lhs = a.is_zero_row(i);
        if zero_lhs && !b[i].is_zero() {
            return Ok(Some(vec![i]));
        }
    }
    // Distinct augmented rows, keeping the first occurrence of each.
    let mut distinct: Vec<usize> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for i in 0..a.rows() {
        let mut key = a.row(i).to_vec();
        key.push(b[i].clone());
        if seen.insert(key) {
            distinct.push(i);
        }
    }
    if distinct.len() <= 400 {
        for (x, &i) in distinct.iter().enumerate() {
            for &j in &distinct[x + 1..] {
                if inconsistent(&[i, j])? {
                    return Ok(Some(vec![i, j]));
                }
            }
        }
    }
    // Shortest inconsistent prefix, then greedy deletion.
    let mut end = distinct.len();
    let (mut lo, mut hi) = (1, distinct.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if inconsistent(&distinct[..mid])? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    end = end.min(lo);
    let mut core: Vec<usize> = distinct[..end].to_vec();
    let mut k = 0;
    while k < core.len() {
        let mut trial = core.clone();
        trial.remove(k);
        if !trial.is_empty() && inconsistent(&trial)? {
            core = trial;
        } else {
            k += 1;
        }
    }
    Ok(Some(core))
}

/// Incrementally maintained row-echelon basis, used to track the rank of a
/// growing family of vectors without recomputing from scratch.
#[derive(Clone, Debug, Default)]
pub struct EchelonBasis {
    rows: Vec<(usize, Vec<Rational>)>,
}

impl EchelonBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Inserts `v`; returns true when it was independent of the basis.
    pub fn insert(&mut self, v: &[Rational]) -> bool {
        let mut v = v.to_vec();
        for (pivot, row) in &self.rows {
            let f = v[*pivot].clone();
            if f.is_zero() {
                continue;
            }
            for (x, r) in v.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x -= &f * r;
                }
            }
        }
        let Some(pivot) = v.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = v[pivot].recip();
        for x in v.iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        // Keep earlier rows reduced against the new pivot.
        for (_, row) in self.rows.iter_mut() {
            let f = row[pivot].clone();
            if f.is_zero() {
                continue;
            }
            for (x, r) in row.iter_mut().zip(&v) {
                if !r.is_zero() {
                    *x -= &f * r;
                }
            }
        }
        self.rows.push((pivot, v));
        true
    }
}

pub fn is_integral(r: &Rational) -> bool {
    r.is_integer()
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| rat(x)).collect()
    }

    #[test]
    fn rref_identity_and_rank_one() {
        let id = RatMatrix::identity(2);
        assert_eq!(id.rref(), (id.clone(), vec![0, 1]));
        let m = RatMatrix::from_i64(&[&[1, 2], &[2, 4]]);
        let (r, p) = m.rref();
        assert_eq!(r, RatMatrix::from_i64(&[&[1, 2], &[0, 0]]));
        assert_eq!(p, vec![0]);
    }

    #[test]
    fn solve_identity_and_inconsistent() {
        let b = vec![ratio(1, 3), rat(-2), rat(7)];
        assert_eq!(solve_canonical(&RatMatrix::identity(3), &b).unwrap(), Some(b));
        let a = RatMatrix::from_i64(&[&[1], &[1]]);
        assert_eq!(solve_canonical(&a, &v(&[1, 2])).unwrap(), None);
    }

    #[test]
    fn solve_dimension_mismatch() {
        let a = RatMatrix::from_i64(&[&[1, 0]]);
        assert!(solve_canonical(&a, &v(&[1, 2])).is_err());
        assert!(a.mul(&RatMatrix::identity(3)).is_err());
        assert!(a.mul_vec(&v(&[1])).is_err());
    }

    #[test]
    fn free_variables_are_low_columns() {
        // x0 + x1 = 2 : the pivot lands on x1.
        let a = RatMatrix::from_i64(&[&[1, 1]]);
        match solve_detailed(&a, &v(&[2])).unwrap() {
            Solve::Solved { x, free_dim } => {
                assert_eq!(x, v(&[0, 2]));
                assert_eq!(free_dim, 1);
            }
            Solve::Inconsistent => panic!(),
        }
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("-1/4").unwrap(), ratio(-1, 4));
        assert_eq!(parse_rational("5").unwrap(), rat(5));
        assert_eq!(parse_rational("6/-4").unwrap(), ratio(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(format_rational(&rat(5)), "5/1");
        assert_eq!(format_rational(&ratio(10, -40)), "-1/4");
    }

    #[test]
    fn characteristic_rows_rank() {
        // Indicators of N, 2N, 4N on 0..16.
        let rows: Vec<Vec<Rational>> = [1, 2, 4]
            .iter()
            .map(|&m| (0..16).map(|n| rat(i64::from(n % m == 0))).collect())
            .collect();
        let m = RatMatrix::from_rows(rows.clone()).unwrap();
        assert_eq!(m.rank(), 3);
        let mut basis = EchelonBasis::new();
        for r in &rows {
            assert!(basis.insert(r));
        }
        assert!(!basis.insert(&rows[1]));
    }

    #[test]
    fn inconsistent_core_finds_pair() {
        let a = RatMatrix::from_i64(&[&[1, 1], &[2, 2], &[3, 3], &[1, 2]]);
        let b = v(&[2, 4, 5, 3]);
        let core = inconsistent_core(&a, &b).unwrap().unwrap();
        assert_eq!(core.len(), 2);
        assert!(inconsistent_core(&a, &v(&[2, 4, 6, 3])).unwrap().is_none());
    }
}
