//! Exact integer and rational linear algebra.
//!
//! Everything downstream (constraint columns, schedules, allocations) is
//! expressed over `i64` with checked arithmetic. Eliminations run in `i128`
//! with row-gcd normalization so intermediate growth stays small.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Deref, Index, IndexMut};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("invalid rational literal `{0}`")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, AlgebraError>;

pub(crate) fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn narrow(v: i128, what: &'static str) -> Result<i64> {
    i64::try_from(v).map_err(|_| AlgebraError::Overflow(what))
}

// ---------------------------------------------------------------------------
// Rational

/// Reduced fraction with a positive denominator.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i64,
    den: i64,
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    pub fn new(num: i64, den: i64) -> Result<Self> {
        Self::from_i128(num as i128, den as i128)
    }

    pub fn integer(v: i64) -> Self {
        Rational { num: v, den: 1 }
    }

    fn from_i128(num: i128, den: i128) -> Result<Self> {
        if den == 0 {
            return Err(AlgebraError::ZeroDenominator);
        }
        let g = gcd(num, den).max(1);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        Ok(Rational {
            num: narrow(n, "rational numerator")?,
            den: narrow(d, "rational denominator")?,
        })
    }

    pub fn numer(&self) -> i64 {
        self.num
    }

    pub fn denom(&self) -> i64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_negative(&self) -> bool {
        self.num < 0
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self> {
        let n = self.num as i128 * rhs.den as i128 + rhs.num as i128 * self.den as i128;
        Self::from_i128(n, self.den as i128 * rhs.den as i128)
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self> {
        self.checked_add(Rational {
            num: -rhs.num,
            den: rhs.den,
        })
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self> {
        Self::from_i128(
            self.num as i128 * rhs.num as i128,
            self.den as i128 * rhs.den as i128,
        )
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        Self::from_i128(
            self.num as i128 * rhs.den as i128,
            self.den as i128 * rhs.num as i128,
        )
    }

    pub fn scale(self, k: i64) -> Result<Self> {
        self.checked_mul(Rational::integer(k))
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::ZERO
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::integer(v)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl std::str::FromStr for Rational {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || AlgebraError::Parse(s.to_string());
        match s.trim().split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| bad())?;
                let d: i64 = d.trim().parse().map_err(|_| bad())?;
                Rational::new(n, d)
            }
            None => Ok(Rational::integer(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(Rational::integer(v)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

// ---------------------------------------------------------------------------
// IntVector

#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntVector(Vec<i64>);

impl IntVector {
    pub fn new(entries: Vec<i64>) -> Self {
        IntVector(entries)
    }

    pub fn zeros(len: usize) -> Self {
        IntVector(vec![0; len])
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = vec![0; len];
        v[i] = 1;
        IntVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<i64> {
        self.0
    }

    pub fn dot(&self, other: &[i64]) -> Result<i64> {
        dot(&self.0, other)
    }

    pub fn add(&self, other: &IntVector) -> Result<IntVector> {
        same_len(self.len(), other.len(), "vector add")?;
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                a.checked_add(*b)
                    .ok_or(AlgebraError::Overflow("vector add"))
            })
            .collect::<Result<Vec<_>>>()
            .map(IntVector)
    }

    pub fn sub(&self, other: &IntVector) -> Result<IntVector> {
        same_len(self.len(), other.len(), "vector sub")?;
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                a.checked_sub(*b)
                    .ok_or(AlgebraError::Overflow("vector sub"))
            })
            .collect::<Result<Vec<_>>>()
            .map(IntVector)
    }

    pub fn scale(&self, k: i64) -> Result<IntVector> {
        self.0
            .iter()
            .map(|a| {
                a.checked_mul(k)
                    .ok_or(AlgebraError::Overflow("vector scale"))
            })
            .collect::<Result<Vec<_>>>()
            .map(IntVector)
    }
}

impl Deref for IntVector {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl Index<usize> for IntVector {
    type Output = i64;
    fn index(&self, i: usize) -> &i64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for IntVector {
    fn index_mut(&mut self, i: usize) -> &mut i64 {
        &mut self.0[i]
    }
}

impl From<Vec<i64>> for IntVector {
    fn from(v: Vec<i64>) -> Self {
        IntVector(v)
    }
}

impl FromIterator<i64> for IntVector {
    fn from_iter<I: IntoIterator<Item = i64>>(iter: I) -> Self {
        IntVector(iter.into_iter().collect())
    }
}

impl fmt::Debug for IntVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for IntVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

fn same_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(AlgebraError::DimensionMismatch(format!(
            "{what}: {a} vs {b}"
        )));
    }
    Ok(())
}

/// Checked dot product.
pub fn dot(a: &[i64], b: &[i64]) -> Result<i64> {
    same_len(a.len(), b.len(), "dot")?;
    let s: i128 = a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum();
    narrow(s, "dot")
}

/// Lexicographic comparison of equal-length vectors.
pub fn lex_compare(a: &[i64], b: &[i64]) -> Result<Ordering> {
    same_len(a.len(), b.len(), "lex_compare")?;
    Ok(a.cmp(b))
}

// ---------------------------------------------------------------------------
// IntMatrix

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    /// Builds a matrix from row lists; `cols` is needed for the 0-row case.
    pub fn from_rows(rows: &[Vec<i64>], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(AlgebraError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(IntMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_row_vectors(rows: &[IntVector], cols: usize) -> Result<Self> {
        let rows: Vec<Vec<i64>> = rows.iter().map(|r| r.to_vec()).collect();
        Self::from_rows(&rows, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vector(&self, i: usize) -> IntVector {
        IntVector(self.row(i).to_vec())
    }

    pub fn column(&self, j: usize) -> IntVector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Copy with row `i` removed.
    pub fn without_row(&self, i: usize) -> IntMatrix {
        let rows: Vec<Vec<i64>> = (0..self.rows)
            .filter(|&k| k != i)
            .map(|k| self.row(k).to_vec())
            .collect();
        IntMatrix::from_rows(&rows, self.cols).expect("shape preserved")
    }

    /// Matrix with `row` appended.
    pub fn with_row(&self, row: &[i64]) -> Result<IntMatrix> {
        same_len(row.len(), self.cols, "append row")?;
        let mut m = self.clone();
        m.data.extend_from_slice(row);
        m.rows += 1;
        Ok(m)
    }

    /// Rows `0..k`.
    pub fn top_rows(&self, k: usize) -> IntMatrix {
        let k = k.min(self.rows);
        IntMatrix {
            rows: k,
            cols: self.cols,
            data: self.data[..k * self.cols].to_vec(),
        }
    }

    pub fn matvec(&self, v: &[i64]) -> Result<IntVector> {
        same_len(self.cols, v.len(), "matvec")?;
        (0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect::<Result<Vec<_>>>()
            .map(IntVector)
    }

    /// Row vector times matrix: `v^T * self`.
    pub fn vecmat(&self, v: &[i64]) -> Result<IntVector> {
        same_len(self.rows, v.len(), "vecmat")?;
        (0..self.cols)
            .map(|j| {
                let s: i128 = (0..self.rows)
                    .map(|i| v[i] as i128 * self[(i, j)] as i128)
                    .sum();
                narrow(s, "vecmat")
            })
            .collect::<Result<Vec<_>>>()
            .map(IntVector)
    }

    pub fn matmul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        same_len(self.cols, other.rows, "matmul")?;
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let s: i128 = (0..self.cols)
                    .map(|k| self[(i, k)] as i128 * other[(k, j)] as i128)
                    .sum();
                out[(i, j)] = narrow(s, "matmul")?;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(AlgebraError::DimensionMismatch(format!(
                "add: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| {
                a.checked_add(*b)
                    .ok_or(AlgebraError::Overflow("matrix add"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, k: i64) -> Result<IntMatrix> {
        let data = self
            .data
            .iter()
            .map(|a| {
                a.checked_mul(k)
                    .ok_or(AlgebraError::Overflow("matrix scale"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    fn to_wide(&self) -> Vec<Vec<i128>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|&x| x as i128).collect())
            .collect()
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = i64;
    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}{:?}", self.rows, self.cols, self.to_rows())
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<i64>>::deserialize(d)?;
        let cols = rows.first().map_or(0, |r| r.len());
        IntMatrix::from_rows(&rows, cols).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Rank and integer kernel

fn normalize_row(row: &mut [i128]) {
    let g = row.iter().fold(0, |g, &x| gcd(g, x));
    if g > 1 {
        row.iter_mut().for_each(|x| *x /= g);
    }
}

/// Rank over the rationals.
pub fn rank(m: &IntMatrix) -> usize {
    let mut a = m.to_wide();
    let (rows, cols) = (m.rows, m.cols);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..rows {
            if a[i][c] != 0 {
                let (pv, x) = (a[r][c], a[i][c]);
                for k in c..cols {
                    a[i][k] = a[i][k] * pv - a[r][k] * x;
                }
                normalize_row(&mut a[i]);
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Row Hermite normal form of the integer row lattice, zero rows dropped.
/// Pivots are positive and entries above a pivot lie in `[0, pivot)`.
fn row_hnf(mut a: Vec<Vec<i128>>, cols: usize) -> Vec<Vec<i128>> {
    let rows = a.len();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        // Euclid on column c among rows r.. until one nonzero remains.
        loop {
            let mut best: Option<usize> = None;
            for i in r..rows {
                if a[i][c] != 0 && best.is_none_or(|b| a[i][c].abs() < a[b][c].abs()) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            a.swap(r, b);
            let mut done = true;
            for i in r + 1..rows {
                if a[i][c] != 0 {
                    let q = a[i][c] / a[r][c];
                    for k in 0..cols {
                        a[i][k] -= q * a[r][k];
                    }
                    if a[i][c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if a[r][c] == 0 {
            continue;
        }
        if a[r][c] < 0 {
            a[r].iter_mut().for_each(|x| *x = -*x);
        }
        let p = a[r][c];
        for i in 0..r {
            let q = a[i][c].div_euclid(p);
            if q != 0 {
                for k in 0..cols {
                    a[i][k] -= q * a[r][k];
                }
            }
        }
        r += 1;
    }
    a.truncate(r);
    a
}

/// Basis of `ker(m) ∩ ℤ^cols`.
///
/// The basis is returned in row Hermite normal form: primitive vectors whose
/// first nonzero entry is positive, in decreasing lexicographic order. The
/// form is canonical for the lattice, so equal kernels give equal output.
pub fn integer_kernel_basis(m: &IntMatrix) -> Vec<IntVector> {
    let (rows, n) = (m.rows, m.cols);
    // Row-reduce [m^T | I]; rows whose left part vanishes span the kernel.
    let width = rows + n;
    let mut a: Vec<Vec<i128>> = (0..n)
        .map(|j| {
            let mut r = vec![0i128; width];
            for i in 0..rows {
                r[i] = m[(i, j)] as i128;
            }
            r[rows + j] = 1;
            r
        })
        .collect();
    let mut r = 0;
    for c in 0..rows {
        if r == n {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for i in r..n {
                if a[i][c] != 0 && best.is_none_or(|b| a[i][c].abs() < a[b][c].abs()) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            a.swap(r, b);
            let mut done = true;
            for i in r + 1..n {
                if a[i][c] != 0 {
                    let q = a[i][c] / a[r][c];
                    for k in 0..width {
                        a[i][k] -= q * a[r][k];
                    }
                    if a[i][c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if a[r][c] != 0 {
            r += 1;
        }
    }
    let kernel: Vec<Vec<i128>> = a[r..].iter().map(|row| row[rows..].to_vec()).collect();
    row_hnf(kernel, n)
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|x| i64::try_from(x).expect("kernel entry fits i64"))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[i64]]) -> IntMatrix {
        let cols = rows.first().map_or(0, |r| r.len());
        IntMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), cols).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&IntMatrix::identity(2)), 2);
        assert_eq!(rank(&IntMatrix::zeros(3, 2)), 0);
        assert_eq!(rank(&mat(&[&[1, 0, 0], &[0, 0, 1]])), 2);
        assert_eq!(rank(&mat(&[&[2, 4], &[1, 2]])), 1);
        assert_eq!(rank(&IntMatrix::zeros(0, 3)), 0);
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(
            integer_kernel_basis(&mat(&[&[1, 0]])),
            vec![IntVector::new(vec![0, 1])]
        );
        assert!(integer_kernel_basis(&IntMatrix::identity(2)).is_empty());
        assert_eq!(
            integer_kernel_basis(&mat(&[&[1, 0, 0], &[0, 0, 1]])),
            vec![IntVector::new(vec![0, 1, 0])]
        );
        assert_eq!(
            integer_kernel_basis(&mat(&[&[1, 1]])),
            vec![IntVector::new(vec![1, -1])]
        );
        assert_eq!(
            integer_kernel_basis(&mat(&[&[1, 0, 0]])),
            vec![IntVector::new(vec![0, 1, 0]), IntVector::new(vec![0, 0, 1])]
        );
        // zero-row matrix: unit vectors
        assert_eq!(
            integer_kernel_basis(&IntMatrix::zeros(0, 2)),
            vec![IntVector::new(vec![1, 0]), IntVector::new(vec![0, 1])]
        );
    }

    #[test]
    fn kernel_is_saturated() {
        // [2, 0] has rational kernel (0,1); the lattice basis must not be (0,2).
        assert_eq!(
            integer_kernel_basis(&mat(&[&[2, 0]])),
            vec![IntVector::new(vec![0, 1])]
        );
        // [2, 4]: kernel spanned by (2,-1).
        assert_eq!(
            integer_kernel_basis(&mat(&[&[2, 4]])),
            vec![IntVector::new(vec![2, -1])]
        );
    }

    #[test]
    fn lex_examples() {
        assert_eq!(lex_compare(&[1, 0, 5], &[1, 1, 0]).unwrap(), Ordering::Less);
        assert_eq!(lex_compare(&[2, 2], &[2, 2]).unwrap(), Ordering::Equal);
        assert_eq!(lex_compare(&[0, 3], &[0, 2]).unwrap(), Ordering::Greater);
        assert!(lex_compare(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn matvec_examples() {
        let m = mat(&[&[1, 2], &[3, 4]]);
        assert_eq!(m.matvec(&[1, 1]).unwrap(), IntVector::new(vec![3, 7]));
        assert_eq!(
            IntMatrix::identity(3)
                .matvec(&[4, -1, 2])
                .unwrap()
                .as_slice(),
            &[4, -1, 2]
        );
        assert!(IntMatrix::zeros(2, 2).matvec(&[5, 6]).unwrap().is_zero());
        assert!(matches!(
            m.matvec(&[1]),
            Err(AlgebraError::DimensionMismatch(_))
        ));
        let big = mat(&[&[i64::MAX, i64::MAX]]);
        assert!(matches!(
            big.matvec(&[1, 1]),
            Err(AlgebraError::Overflow(_))
        ));
    }

    #[test]
    fn rational_arithmetic() {
        let a = Rational::new(6, -4).unwrap();
        assert_eq!((a.numer(), a.denom()), (-3, 2));
        let b = a.checked_add(Rational::new(1, 2).unwrap()).unwrap();
        assert_eq!(b, Rational::integer(-1));
        assert_eq!(
            "7/14".parse::<Rational>().unwrap(),
            Rational::new(1, 2).unwrap()
        );
        assert_eq!(Rational::new(1, 0), Err(AlgebraError::ZeroDenominator));
        assert!(Rational::integer(i64::MAX)
            .checked_add(Rational::ONE)
            .is_err());
        assert!(Rational::new(1, 3).unwrap() < Rational::new(1, 2).unwrap());
        assert_eq!(Rational::new(3, 2).unwrap().to_string(), "3/2");
    }

    proptest! {
        #[test]
        fn lex_is_total_order(a in prop::collection::vec(-3i64..=3, 4),
                              b in prop::collection::vec(-3i64..=3, 4),
                              c in prop::collection::vec(-3i64..=3, 4)) {
            let ab = lex_compare(&a, &b).unwrap();
            prop_assert_eq!(ab.reverse(), lex_compare(&b, &a).unwrap());
            if ab != Ordering::Greater && lex_compare(&b, &c).unwrap() != Ordering::Greater {
                prop_assert_ne!(lex_compare(&a, &c).unwrap(), Ordering::Greater);
            }
        }

        #[test]
        fn kernel_vectors_annihilate(rows in 0usize..4, cols in 1usize..5,
                                     entries in prop::collection::vec(-4i64..=4, 16)) {
            let data: Vec<Vec<i64>> =
                (0..rows).map(|i| entries[i * cols..(i + 1) * cols].to_vec()).collect();
            let m = IntMatrix::from_rows(&data, cols).unwrap();
            let basis = integer_kernel_basis(&m);
            prop_assert_eq!(basis.len(), cols - rank(&m));
            for v in &basis {
                prop_assert!(m.matvec(v).unwrap().is_zero());
                let g = v.iter().fold(0i128, |g, &x| gcd(g, x as i128));
                prop_assert_eq!(g, 1);
                prop_assert!(v.iter().find(|&&x| x != 0).copied().unwrap() > 0);
            }
            for w in basis.windows(2) {
                prop_assert_eq!(lex_compare(&w[0], &w[1]).unwrap(), Ordering::Greater);
            }
        }
    }
}
