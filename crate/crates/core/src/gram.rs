//! Gram matrices `[μ̂(λ - λ')]` of exponentials against discrete measures,
//! with exact vanishing tests for the off-diagonal entries.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::cyclotomic::{phase_sum, CyclotomicSum};
use crate::error::{Error, Result};
use crate::linalg::{common_denominator, ivec_to_q, q_frac_part, IVec, QVec};
use crate::measure::DiscreteMeasure;

/// Off-diagonal threshold used when an exact test is unavailable.
pub const FLOAT_FALLBACK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GramReport {
    pub size: usize,
    /// Every off-diagonal entry was decided by an exact cyclotomic test.
    pub exact: bool,
    /// The matrix is the identity (exactly when `exact`, else within the
    /// fallback threshold).
    pub identity: bool,
    pub max_offdiag: f64,
    pub max_diag_dev: f64,
    pub matrix: Option<Vec<Vec<Complex64>>>,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    value: Complex64,
    exact_zero: Option<bool>,
}

/// Atoms scaled to integers `x = X / qx` and weights `w = c / qw`; the
/// modulus `qx·ql` also absorbs the denominators `ql` of the frequencies.
struct Integerized {
    modulus: i128,
    points: Vec<Vec<i128>>,
    coeffs: Vec<i128>,
}

fn integerize(mu: &DiscreteMeasure, lambda: &[QVec]) -> Option<Integerized> {
    let qx = common_denominator(mu.atoms().iter().flat_map(|(x, _)| x.iter()));
    let ql = common_denominator(lambda.iter().flatten());
    let qw = common_denominator(mu.atoms().iter().map(|(_, w)| w));
    let modulus = (&qx * &ql).to_i128().filter(|&m| m <= 1 << 30)?;
    let scale = |v: &BigRational, q: &BigInt| (v * q).to_integer().to_i128();
    let points = mu
        .atoms()
        .iter()
        .map(|(x, _)| x.iter().map(|c| scale(c, &qx)).collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()?;
    let coeffs = mu
        .atoms()
        .iter()
        .map(|(_, w)| scale(w, &qw))
        .collect::<Option<Vec<_>>>()?;
    let freqs = lambda
        .iter()
        .map(|l| l.iter().map(|c| scale(c, &ql)).collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()?;
    // keep every dot product comfortably inside i128
    let max_abs = |v: &Vec<Vec<i128>>| v.iter().flatten().map(|x| x.unsigned_abs()).max().unwrap_or(0);
    max_abs(&points)
        .checked_mul(max_abs(&freqs))?
        .checked_mul(4 * (mu.dim() as u128 + 1))?;
    Some(Integerized {
        modulus,
        points,
        coeffs,
    })
}

fn entry_integer(data: &Integerized, delta: &[i128], total_weight: f64) -> Result<Entry> {
    let mut sum = CyclotomicSum::new(data.modulus as u64);
    let mut value = Complex64::zero();
    for (x, &c) in data.points.iter().zip(&data.coeffs) {
        let dot: i128 = x.iter().zip(delta).map(|(a, b)| a * b).sum();
        let e = (-dot).rem_euclid(data.modulus);
        sum.add_term(e, c)?;
        let angle = std::f64::consts::TAU * e as f64 / data.modulus as f64;
        value += Complex64::from_polar(c as f64, angle);
    }
    Ok(Entry {
        value: value / total_weight,
        exact_zero: Some(sum.is_zero()?),
    })
}

fn entry_rational(mu: &DiscreteMeasure, delta: &[BigRational]) -> Result<Entry> {
    let mut terms = Vec::with_capacity(mu.len());
    for (x, w) in mu.atoms() {
        let dot = x.iter().zip(delta).fold(BigRational::zero(), |acc, (a, b)| acc + a * b);
        terms.push((w.clone(), q_frac_part(&dot)));
    }
    let exact_zero = match phase_sum(&terms) {
        Ok(s) => Some(s.is_zero()?),
        Err(Error::Overflow(_)) => None,
        Err(e) => return Err(e),
    };
    let value = terms
        .iter()
        .map(|(w, t)| {
            Complex64::from_polar(
                w.to_f64().unwrap_or(f64::NAN),
                -std::f64::consts::TAU * t.to_f64().unwrap_or(f64::NAN),
            )
        })
        .sum();
    Ok(Entry { value, exact_zero })
}

/// Gram matrix of `{e_λ}` in `L²(μ)`: entry `(λ, λ')` is
/// `Σ_x w_x e^{-2πi (λ-λ')·x}`. Off-diagonal vanishing is decided exactly
/// through cyclotomic sums; entries are shared between equal differences.
pub fn gram_matrix(mu: &DiscreteMeasure, lambda: &[QVec], keep_matrix: bool) -> Result<GramReport> {
    let n = lambda.len();
    if let Some(bad) = lambda.iter().find(|l| l.len() != mu.dim()) {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: bad.len(),
        });
    }
    let ints = integerize(mu, lambda);
    // unique differences up to sign (the entry at -Δ is the conjugate)
    let mut index: BTreeMap<Vec<BigRational>, usize> = BTreeMap::new();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let delta: Vec<BigRational> = lambda[i].iter().zip(&lambda[j]).map(|(a, b)| a - b).collect();
            let neg: Vec<BigRational> = delta.iter().map(|v| -v).collect();
            let (key, conj) = if delta >= neg { (delta, false) } else { (neg, true) };
            let next = index.len();
            let id = *index.entry(key).or_insert(next);
            pairs.push((i, j, id, conj));
        }
    }
    let mut keys: Vec<(usize, Vec<BigRational>)> = index.into_iter().map(|(k, v)| (v, k)).collect();
    keys.sort_by_key(|(v, _)| *v);
    let total_weight = ints
        .as_ref()
        .map_or(1.0, |d| d.coeffs.iter().map(|&c| c as f64).sum());
    let ql = common_denominator(lambda.iter().flatten());
    let entries: Vec<Entry> = keys
        .par_iter()
        .map(|(_, delta)| match &ints {
            Some(data) => {
                let scaled: Vec<i128> = delta
                    .iter()
                    .map(|v| (v * &ql).to_integer().to_i128().expect("fits after integerize"))
                    .collect();
                entry_integer(data, &scaled, total_weight)
            }
            None => entry_rational(mu, delta),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut exact = true;
    let mut all_zero = true;
    let mut max_offdiag: f64 = 0.0;
    for e in &entries {
        max_offdiag = max_offdiag.max(e.value.norm());
        match e.exact_zero {
            Some(z) => all_zero &= z,
            None => exact = false,
        }
    }
    let identity = if exact {
        all_zero
    } else {
        max_offdiag < FLOAT_FALLBACK_TOL
    };
    let matrix = keep_matrix.then(|| {
        let mut m = vec![vec![Complex64::new(1.0, 0.0); n]; n];
        for &(i, j, id, conj) in &pairs {
            let v = if conj { entries[id].value.conj() } else { entries[id].value };
            m[i][j] = v;
            m[j][i] = v.conj();
        }
        m
    });
    Ok(GramReport {
        size: n,
        exact,
        identity,
        max_offdiag,
        // total mass is exactly one, so the diagonal is exactly one
        max_diag_dev: 0.0,
        matrix,
    })
}

/// [`gram_matrix`] for integer frequencies.
pub fn gram_matrix_int(mu: &DiscreteMeasure, lambda: &[IVec], keep_matrix: bool) -> Result<GramReport> {
    let q: Vec<QVec> = lambda.iter().map(|l| ivec_to_q(l)).collect();
    gram_matrix(mu, &q, keep_matrix)
}

/// `(1/N) Σ_i e^{-2πi ξ·x_i}`.
pub fn empirical_cf(samples: &[Vec<f64>], xi: &[f64]) -> Result<Complex64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let sum: Complex64 = samples
        .iter()
        .map(|x| {
            let t: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
            Complex64::from_polar(1.0, -std::f64::consts::TAU * t)
        })
        .sum();
    Ok(sum / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::q_frac;
    use crate::measure::{build_mu_n, sample, DEFAULT_ATOM_CAP};

    #[test]
    fn trivial_gram() {
        let mu = build_mu_n(&fixtures::jp(), 1, DEFAULT_ATOM_CAP).unwrap();
        let rep = gram_matrix_int(&mu, &[vec![0]], true).unwrap();
        assert!(rep.identity && rep.exact);
        assert_eq!(rep.matrix.unwrap(), vec![vec![Complex64::new(1.0, 0.0)]]);
    }

    #[test]
    fn one_level_spectra() {
        let mu = build_mu_n(&fixtures::jp(), 1, DEFAULT_ATOM_CAP).unwrap();
        let rep = gram_matrix_int(&mu, &[vec![0], vec![1]], true).unwrap();
        assert!(rep.exact && rep.identity);
        let p1 = fixtures::example1_word(&[0]);
        let mu = build_mu_n(&p1, 1, DEFAULT_ATOM_CAP).unwrap();
        let rep = gram_matrix_int(&mu, fixtures::example1_p1().l().unwrap(), false).unwrap();
        assert!(rep.exact && rep.identity);
        // {0, 2} is not orthogonal for the quarter measure at level one
        let mu = build_mu_n(&fixtures::jp(), 1, DEFAULT_ATOM_CAP).unwrap();
        let rep = gram_matrix_int(&mu, &[vec![0], vec![2]], false).unwrap();
        assert!(rep.exact && !rep.identity);
        assert!((rep.max_offdiag - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hermitian_unit_diagonal() {
        let mu = build_mu_n(&fixtures::example1_alternating(), 2, DEFAULT_ATOM_CAP).unwrap();
        let lam: Vec<IVec> = fixtures::lattice_box(2, 1);
        let rep = gram_matrix_int(&mu, &lam, true).unwrap();
        let m = rep.matrix.unwrap();
        for i in 0..m.len() {
            assert_eq!(m[i][i], Complex64::new(1.0, 0.0));
            for j in 0..m.len() {
                assert!((m[i][j] - m[j][i].conj()).norm() < 1e-15);
                // oracle: direct atom sum
                let d: Vec<f64> = lam[i].iter().zip(&lam[j]).map(|(a, b)| (a - b) as f64).collect();
                assert!((m[i][j] - mu.fourier(&d)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rational_frequencies() {
        let mu = DiscreteMeasure::uniform(vec![vec![q_frac(0, 1)], vec![q_frac(1, 1)]]).unwrap();
        let lam = vec![vec![q_frac(0, 1)], vec![q_frac(1, 2)]];
        let rep = gram_matrix(&mu, &lam, false).unwrap();
        assert!(rep.exact && rep.identity);
    }

    #[test]
    fn empirical_characteristic_function() {
        assert!(matches!(empirical_cf(&[], &[1.0]), Err(Error::EmptySamples)));
        let origin = vec![vec![0.0, 0.0]; 10];
        assert_eq!(empirical_cf(&origin, &[0.3, 0.9]).unwrap(), Complex64::new(1.0, 0.0));
        let s = sample(&fixtures::jp(), 10, 100_000, 3).unwrap();
        assert_eq!(empirical_cf(&s, &[0.0]).unwrap(), Complex64::new(1.0, 0.0));
        assert!(empirical_cf(&s, &[1.0]).unwrap().norm() < 0.02);
    }
}
