//! Small dense integer and rational matrices.
//!
//! Everything here is exact: integer matrices carry `i64` entries and the
//! rational ones use arbitrary precision, so products of many contractions
//! never lose information. Floating point only appears through the explicit
//! `to_f64` conversions.

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Integer vector in ℤ^d.
pub type IVec = Vec<i64>;

/// Rational vector in ℚ^d.
pub type QVec = Vec<BigRational>;

pub fn q_int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn q_frac(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn ivec_to_q(v: &[i64]) -> QVec {
    v.iter().map(|&x| q_int(x)).collect()
}

pub fn qvec_to_f64(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(q_to_f64).collect()
}

pub fn q_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Fractional part in `[0, 1)`.
pub fn q_frac_part(q: &BigRational) -> BigRational {
    q - q.floor()
}

pub fn qvec_add(a: &[BigRational], b: &[BigRational]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn qvec_dot_ivec(a: &[BigRational], b: &[i64]) -> BigRational {
    a.iter()
        .zip(b)
        .fold(BigRational::zero(), |acc, (x, &y)| acc + x * BigInt::from(y))
}

pub fn ivec_sub(a: &[i64], b: &[i64]) -> IVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn ivec_add(a: &[i64], b: &[i64]) -> IVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Least common multiple of the denominators of a set of rationals.
pub fn common_denominator<'a, I>(values: I) -> BigInt
where
    I: IntoIterator<Item = &'a BigRational>,
{
    values
        .into_iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

/// Format a rational as `p` or `p/q`.
pub fn fmt_q(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parse `p`, `-p` or `p/q` into an exact rational.
pub fn parse_q(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IMatrix {
    dim: usize,
    entries: Vec<i64>,
}

impl IMatrix {
    pub fn new(dim: usize, entries: Vec<i64>) -> Self {
        assert_eq!(entries.len(), dim * dim, "matrix entry count");
        IMatrix { dim, entries }
    }

    /// Build from rows; returns `None` when the rows do not form a square matrix.
    pub fn from_rows(rows: &[Vec<i64>]) -> Option<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        Some(IMatrix::new(dim, rows.concat()))
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1; dim])
    }

    pub fn diag(d: &[i64]) -> Self {
        let n = d.len();
        let mut entries = vec![0; n * n];
        for (i, &v) in d.iter().enumerate() {
            entries[i * n + i] = v;
        }
        IMatrix::new(n, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut entries = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.get(i, j);
            }
        }
        IMatrix::new(n, entries)
    }

    pub fn mul(&self, other: &IMatrix) -> IMatrix {
        let n = self.dim;
        let mut entries = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum();
            }
        }
        IMatrix::new(n, entries)
    }

    pub fn mul_vec(&self, v: &[i64]) -> IVec {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Exact determinant (fraction-free Bareiss elimination).
    pub fn det(&self) -> i128 {
        let n = self.dim;
        let mut a: Vec<i128> = self.entries.iter().map(|&x| x as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if a[k * n + k] == 0 {
                match (k + 1..n).find(|&r| a[r * n + k] != 0) {
                    Some(r) => {
                        for c in 0..n {
                            a.swap(k * n + c, r * n + c);
                        }
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
                }
            }
            prev = a[k * n + k];
        }
        sign * a[n * n - 1]
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0))
    }

    pub fn diagonal(&self) -> IVec {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_q(&self) -> QMatrix {
        QMatrix::new(self.dim, self.entries.iter().map(|&x| q_int(x)).collect())
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j) as f64)
    }
}

impl fmt::Debug for IMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.rows())
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct QMatrix {
    dim: usize,
    entries: Vec<BigRational>,
}

impl QMatrix {
    pub fn new(dim: usize, entries: Vec<BigRational>) -> Self {
        assert_eq!(entries.len(), dim * dim, "matrix entry count");
        QMatrix { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        IMatrix::identity(dim).to_q()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let entries = (0..n * n)
            .map(|idx| self.get(idx % n, idx / n).clone())
            .collect();
        QMatrix::new(n, entries)
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        let n = self.dim;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let s = (0..n).fold(BigRational::zero(), |acc, k| {
                    acc + self.get(i, k) * other.get(k, j)
                });
                entries.push(s);
            }
        }
        QMatrix::new(n, entries)
    }

    pub fn mul_qvec(&self, v: &[BigRational]) -> QVec {
        (0..self.dim)
            .map(|i| {
                (0..self.dim).fold(BigRational::zero(), |acc, j| acc + self.get(i, j) * &v[j])
            })
            .collect()
    }

    pub fn mul_ivec(&self, v: &[i64]) -> QVec {
        (0..self.dim)
            .map(|i| {
                (0..self.dim).fold(BigRational::zero(), |acc, j| {
                    acc + self.get(i, j) * BigInt::from(v[j])
                })
            })
            .collect()
    }

    /// Gauss-Jordan inverse; `None` for singular matrices.
    pub fn inverse(&self) -> Option<QMatrix> {
        let n = self.dim;
        let mut a = self.entries.clone();
        let mut inv = QMatrix::identity(n).entries;
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[r * n + col].is_zero())?;
            if pivot != col {
                for c in 0..n {
                    a.swap(pivot * n + c, col * n + c);
                    inv.swap(pivot * n + c, col * n + c);
                }
            }
            let p = a[col * n + col].clone();
            for c in 0..n {
                a[col * n + c] = &a[col * n + c] / &p;
                inv[col * n + c] = &inv[col * n + c] / &p;
            }
            for r in 0..n {
                if r == col || a[r * n + col].is_zero() {
                    continue;
                }
                let factor = a[r * n + col].clone();
                for c in 0..n {
                    let da = &factor * &a[col * n + c];
                    let di = &factor * &inv[col * n + c];
                    a[r * n + c] -= da;
                    inv[r * n + c] -= di;
                }
            }
        }
        Some(QMatrix::new(n, inv))
    }

    /// Integer matrix when every entry is integral.
    pub fn to_integer(&self) -> Option<IMatrix> {
        let entries = self
            .entries
            .iter()
            .map(|q| if q.is_integer() { q.numer().to_i64() } else { None })
            .collect::<Option<Vec<_>>>()?;
        Some(IMatrix::new(self.dim, entries))
    }

    /// Squared Frobenius norm, an exact upper bound for the squared operator norm.
    pub fn frobenius_sq(&self) -> BigRational {
        self.entries
            .iter()
            .fold(BigRational::zero(), |acc, q| acc + q * q)
    }

    pub fn max_abs_denominator(&self) -> BigInt {
        common_denominator(self.entries.iter())
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| q_to_f64(self.get(i, j)))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|q| q.is_zero())
    }

    pub fn max_abs(&self) -> BigRational {
        self.entries
            .iter()
            .map(|q| q.abs())
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| fmt_q(self.get(i, j))).collect())
            .collect();
        write!(f, "{:?}", rows)
    }
}

/// Largest singular value of a real matrix.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Euclidean norm of a vector.
pub fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
