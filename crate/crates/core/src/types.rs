//! Expanding matrices, digit sets and admissible pairs.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{q_to_f64, IMatrix, IVec, QMatrix};

/// Tolerance on the spectral radius of `R^{-1}` around 1.
pub const EXPANDING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionCheck {
    pub expanding: bool,
    /// Spectral radius of `R^{-1}`, i.e. one over the smallest eigenvalue modulus of `R`.
    pub inverse_spectral_radius: f64,
}

/// Decide whether every eigenvalue of `r` has modulus greater than one.
///
/// Unimodular matrices and matrices with eigenvalue ±1 are rejected exactly;
/// otherwise the verdict comes from the numerical spectrum with a 1e-9 margin.
pub fn check_expanding(r: &IMatrix) -> Result<ExpansionCheck> {
    let det = r.det();
    if det == 0 {
        return Err(Error::NotInvertible);
    }
    let eigen = r.to_f64().complex_eigenvalues();
    let min_modulus = eigen.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let inverse_spectral_radius = 1.0 / min_modulus;
    let expanding = if det.abs() == 1 {
        // product of the moduli is 1, so not all of them exceed 1
        false
    } else if inverse_spectral_radius < 1.0 - EXPANDING_TOL {
        true
    } else if inverse_spectral_radius > 1.0 + EXPANDING_TOL {
        false
    } else {
        let n = r.dim();
        let shifted = |s: i64| {
            let mut rows = r.rows();
            for (i, row) in rows.iter_mut().enumerate().take(n) {
                row[i] -= s;
            }
            IMatrix::from_rows(&rows).map(|m| m.det()).unwrap_or(1)
        };
        if shifted(1) == 0 || shifted(-1) == 0 {
            false
        } else {
            return Err(Error::Borderline(inverse_spectral_radius));
        }
    };
    Ok(ExpansionCheck {
        expanding,
        inverse_spectral_radius,
    })
}

/// Integer matrix whose eigenvalues all lie outside the closed unit disc.
#[derive(Clone, PartialEq)]
pub struct ExpandingMatrix {
    matrix: IMatrix,
    det: i128,
    inverse: QMatrix,
    /// `sign(det) * adj(R^T)`, so that `R^{-T} z = adj_t z / |det|`.
    adj_t: IMatrix,
}

impl std::fmt::Debug for ExpandingMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.matrix.fmt(f)
    }
}

impl ExpandingMatrix {
    pub fn new(matrix: IMatrix) -> Result<Self> {
        let check = check_expanding(&matrix)?;
        if !check.expanding {
            return Err(Error::NotExpanding(check.inverse_spectral_radius));
        }
        Ok(Self::new_unchecked_expansion(matrix))
    }

    /// Wrap any nonsingular integer matrix (used for composed products whose
    /// expansion is irrelevant to the caller).
    pub(crate) fn new_unchecked_expansion(matrix: IMatrix) -> Self {
        let det = matrix.det();
        let inverse = matrix.to_q().inverse().expect("nonsingular");
        let abs_det = BigRational::from_integer(BigInt::from(det.abs()));
        let adj_t = inverse
            .transpose()
            .entries()
            .iter()
            .map(|q| q * &abs_det)
            .collect::<Vec<_>>();
        let adj_t = QMatrix::new(matrix.dim(), adj_t)
            .to_integer()
            .expect("adjugate is integral");
        ExpandingMatrix {
            matrix,
            det,
            inverse,
            adj_t,
        }
    }

    pub fn matrix(&self) -> &IMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn det(&self) -> i128 {
        self.det
    }

    pub fn abs_det(&self) -> u64 {
        self.det.unsigned_abs() as u64
    }

    /// Exact `R^{-1}`.
    pub fn inverse(&self) -> &QMatrix {
        &self.inverse
    }

    /// Canonical representative of `v` modulo `R^T ℤ^d`: the unique
    /// congruent vector whose `R^{-T}`-coordinates lie in `[0,1)^d`.
    pub fn reduce(&self, v: &[i64]) -> IVec {
        let d = self.abs_det() as i64;
        let coords = self.adj_t.mul_vec(v);
        let floors: IVec = coords.iter().map(|c| c.div_floor(&d)).collect();
        let shift = self.matrix.transpose().mul_vec(&floors);
        v.iter().zip(shift).map(|(a, b)| a - b).collect()
    }

    /// Whether two integer vectors agree modulo `R^T ℤ^d`.
    pub fn congruent(&self, a: &[i64], b: &[i64]) -> bool {
        self.reduce(a) == self.reduce(b)
    }

    /// Coset representatives of `ℤ^d / R^T ℤ^d`, lexicographically sorted.
    ///
    /// Scans the integer bounding box of the parallelepiped `R^T [0,1)^d` and
    /// keeps the points whose `R^{-T}`-coordinates fall in `[0,1)^d`.
    pub fn residues(&self) -> Vec<IVec> {
        let n = self.dim();
        let rt = self.matrix.transpose();
        let d = self.abs_det() as i64;
        let bounds: Vec<(i64, i64)> = (0..n)
            .map(|i| {
                let row = (0..n).map(|j| rt.get(i, j));
                let lo: i64 = row.clone().filter(|&x| x < 0).sum();
                let hi: i64 = row.filter(|&x| x > 0).sum();
                (lo, hi)
            })
            .collect();
        let mut out = Vec::with_capacity(d as usize);
        let mut z: IVec = bounds.iter().map(|b| b.0).collect();
        loop {
            let coords = self.adj_t.mul_vec(&z);
            if coords.iter().all(|&c| c >= 0 && c < d) {
                out.push(z.clone());
            }
            // odometer over the bounding box
            let mut i = n;
            loop {
                if i == 0 {
                    out.sort();
                    return out;
                }
                i -= 1;
                if z[i] < bounds[i].1 {
                    z[i] += 1;
                    break;
                }
                z[i] = bounds[i].0;
            }
        }
    }
}

/// Coset representatives of `ℤ^d / R^T ℤ^d`.
pub fn residues(r: &ExpandingMatrix) -> Vec<IVec> {
    r.residues()
}

/// Whether `(R, B)` lies in the diagonal class: `R = diag(m_1..m_d)` with
/// all `m_i >= 2` and `B` inside the digit box `Π {0..m_i-1}`.
pub fn check_dd_membership(r: &IMatrix, b: &[IVec]) -> bool {
    if !r.is_diagonal() {
        return false;
    }
    let m = r.diagonal();
    if m.iter().any(|&mi| mi < 2) || b.is_empty() {
        return false;
    }
    b.iter().all(|digit| {
        digit.len() == m.len() && digit.iter().zip(&m).all(|(&x, &mi)| 0 <= x && x < mi)
    })
}

/// Finite set of integer digits with optional positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitSet {
    digits: Vec<IVec>,
    weights: Option<Vec<BigRational>>,
}

impl DigitSet {
    pub fn new(digits: Vec<IVec>) -> Result<Self> {
        Self::with_weights(digits, None)
    }

    pub fn with_weights(digits: Vec<IVec>, weights: Option<Vec<BigRational>>) -> Result<Self> {
        let first = digits
            .first()
            .ok_or_else(|| Error::InvalidDigits("digit set is empty".into()))?;
        let dim = first.len();
        if let Some(bad) = digits.iter().find(|d| d.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        let unique: BTreeSet<&IVec> = digits.iter().collect();
        if unique.len() != digits.len() {
            return Err(Error::InvalidDigits("duplicate digits".into()));
        }
        if let Some(w) = &weights {
            if w.len() != digits.len() {
                return Err(Error::InvalidDigits(format!(
                    "{} weights for {} digits",
                    w.len(),
                    digits.len()
                )));
            }
            if w.iter().any(|x| !x.is_positive()) {
                return Err(Error::InvalidDigits("weights must be positive".into()));
            }
        }
        Ok(DigitSet { digits, weights })
    }

    pub fn digits(&self) -> &[IVec] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.digits[0].len()
    }

    pub fn is_uniform(&self) -> bool {
        match &self.weights {
            None => true,
            Some(w) => w.iter().all(|x| x == &w[0]),
        }
    }

    /// Weights normalized to sum to one (uniform when none were given).
    pub fn probabilities(&self) -> Vec<BigRational> {
        match &self.weights {
            None => {
                let p = BigRational::new(BigInt::one(), BigInt::from(self.digits.len()));
                vec![p; self.digits.len()]
            }
            Some(w) => {
                let total = w.iter().fold(BigRational::zero(), |a, x| a + x);
                w.iter().map(|x| x / &total).collect()
            }
        }
    }

    pub fn probabilities_f64(&self) -> Vec<f64> {
        self.probabilities().iter().map(q_to_f64).collect()
    }

    pub fn translate(&self, t: &[i64]) -> DigitSet {
        DigitSet {
            digits: self
                .digits
                .iter()
                .map(|d| d.iter().zip(t).map(|(a, b)| a + b).collect())
                .collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.digits
            .iter()
            .map(|d| {
                d.iter()
                    .map(|&x| (x as f64) * (x as f64))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// A named pair `(R, B)` with an optional candidate spectrum `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissiblePair {
    pub name: String,
    r: ExpandingMatrix,
    b: DigitSet,
    l: Option<Vec<IVec>>,
}

impl AdmissiblePair {
    pub fn new(
        name: impl Into<String>,
        r: ExpandingMatrix,
        b: DigitSet,
        l: Option<Vec<IVec>>,
    ) -> Result<Self> {
        let dim = r.dim();
        if b.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: b.dim(),
            });
        }
        if let Some(l) = &l {
            if l.len() != b.len() {
                return Err(Error::SizeMismatch(format!(
                    "#L = {} but #B = {}",
                    l.len(),
                    b.len()
                )));
            }
            if let Some(bad) = l.iter().find(|v| v.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: bad.len(),
                });
            }
            let classes: BTreeSet<IVec> = l.iter().map(|v| r.reduce(v)).collect();
            if classes.len() != l.len() {
                return Err(Error::SizeMismatch(
                    "L elements are not distinct modulo R^T Z^d".into(),
                ));
            }
        }
        Ok(AdmissiblePair {
            name: name.into(),
            r,
            b,
            l,
        })
    }

    /// Convenience constructor from raw integer data.
    pub fn from_raw(
        name: &str,
        r_rows: &[Vec<i64>],
        digits: &[Vec<i64>],
        spectrum: Option<&[Vec<i64>]>,
    ) -> Result<Self> {
        let m = IMatrix::from_rows(r_rows)
            .ok_or_else(|| Error::SizeMismatch("R must be a nonempty square matrix".into()))?;
        let r = ExpandingMatrix::new(m)?;
        let b = DigitSet::new(digits.to_vec())?;
        Self::new(name, r, b, spectrum.map(|s| s.to_vec()))
    }

    pub fn r(&self) -> &ExpandingMatrix {
        &self.r
    }

    pub fn b(&self) -> &DigitSet {
        &self.b
    }

    pub fn l(&self) -> Option<&[IVec]> {
        self.l.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    pub fn with_spectrum(&self, l: Vec<IVec>) -> Result<Self> {
        Self::new(self.name.clone(), self.r.clone(), self.b.clone(), Some(l))
    }

    /// Attached spectrum translated so that it contains the origin, with
    /// the origin moved to the front.
    pub fn normalized_spectrum(&self) -> Option<Vec<IVec>> {
        let l = self.l.as_ref()?;
        let zero = vec![0i64; self.dim()];
        let shift = if l.contains(&zero) {
            zero.clone()
        } else {
            l[0].clone()
        };
        let mut out: Vec<IVec> = l
            .iter()
            .map(|v| v.iter().zip(&shift).map(|(a, b)| a - b).collect())
            .collect();
        let pos = out.iter().position(|v| v == &zero).expect("contains zero");
        let z = out.remove(pos);
        out.insert(0, z);
        Some(out)
    }

    pub fn in_dd_class(&self) -> bool {
        check_dd_membership(self.r.matrix(), self.b.digits())
    }
}

/// Upper bound for the product of digit counts, saturating.
pub fn checked_count_product<I: IntoIterator<Item = usize>>(counts: I) -> u128 {
    counts
        .into_iter()
        .fold(1u128, |acc, c| acc.saturating_mul(c as u128))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<i64>]) -> IMatrix {
        IMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn expanding_examples() {
        let r1 = check_expanding(&m(&[vec![4, 0], vec![4, -4]])).unwrap();
        assert!(r1.expanding);
        assert!(!check_expanding(&IMatrix::identity(2)).unwrap().expanding);
        let rot = check_expanding(&m(&[vec![3, -3], vec![3, 3]])).unwrap();
        assert!(rot.expanding);
        assert!((rot.inverse_spectral_radius - 1.0 / 18f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn expanding_errors() {
        assert!(matches!(
            check_expanding(&m(&[vec![1, 2], vec![2, 4]])),
            Err(Error::NotInvertible)
        ));
        // eigenvalues 2 and 1: not expanding, decided exactly
        let c = check_expanding(&m(&[vec![2, 0], vec![0, 1]])).unwrap();
        assert!(!c.expanding);
        // unimodular
        assert!(!check_expanding(&m(&[vec![2, 1], vec![1, 1]])).unwrap().expanding);
    }

    #[test]
    fn residue_counts() {
        let r = ExpandingMatrix::new(IMatrix::diag(&[2, 2])).unwrap();
        assert_eq!(
            r.residues(),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        let r1 = ExpandingMatrix::new(m(&[vec![4, 0], vec![4, -4]])).unwrap();
        assert_eq!(r1.residues().len(), 16);
        let r = ExpandingMatrix::new(IMatrix::diag(&[2])).unwrap();
        assert_eq!(r.residues(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn reduce_is_canonical() {
        let r1 = ExpandingMatrix::new(m(&[vec![4, 0], vec![4, -4]])).unwrap();
        let reps = r1.residues();
        for v in [vec![5, -7], vec![-13, 2], vec![100, 33]] {
            let red = r1.reduce(&v);
            assert!(reps.contains(&red), "{:?} -> {:?}", v, red);
            assert!(r1.congruent(&v, &red));
        }
        for rep in &reps {
            assert_eq!(&r1.reduce(rep), rep);
        }
    }

    #[test]
    fn dd_membership() {
        let b = vec![vec![0, 0], vec![0, 1], vec![1, 0]];
        assert!(check_dd_membership(&IMatrix::diag(&[3, 3]), &b));
        assert!(!check_dd_membership(&m(&[vec![4, 0], vec![4, -4]]), &b));
        assert!(!check_dd_membership(&IMatrix::diag(&[2]), &[vec![0], vec![3]]));
    }

    #[test]
    fn digit_set_validation() {
        assert!(DigitSet::new(vec![]).is_err());
        assert!(DigitSet::new(vec![vec![0], vec![0]]).is_err());
        assert!(DigitSet::new(vec![vec![0], vec![1, 2]]).is_err());
        let w = DigitSet::with_weights(
            vec![vec![0], vec![1]],
            Some(vec![BigRational::from_integer(1.into()), BigRational::from_integer(3.into())]),
        )
        .unwrap();
        let p = w.probabilities();
        assert_eq!(p[0], BigRational::new(1.into(), 4.into()));
        assert!(!w.is_uniform());
    }

    #[test]
    fn pair_rejects_bad_spectrum() {
        let err = AdmissiblePair::from_raw("p", &[vec![4]], &[vec![0], vec![2]], Some(&[vec![0]]));
        assert!(matches!(err, Err(Error::SizeMismatch(_))));
        let err = AdmissiblePair::from_raw(
            "p",
            &[vec![4]],
            &[vec![0], vec![2]],
            Some(&[vec![0], vec![4]]),
        );
        assert!(matches!(err, Err(Error::SizeMismatch(_))));
        let p = AdmissiblePair::from_raw(
            "p",
            &[vec![4]],
            &[vec![0], vec![2]],
            Some(&[vec![3], vec![2]]),
        )
        .unwrap();
        assert_eq!(p.normalized_spectrum().unwrap(), vec![vec![0], vec![-1]]);
    }
}
