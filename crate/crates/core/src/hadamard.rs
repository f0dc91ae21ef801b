//! Admissibility of `(R, B, L)`, spectrum search among residues, and the
//! calculus of admissible pairs (translation, composition, pushforward).

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::One;

use crate::cyclotomic::phase_sum;
use crate::error::{Error, Result};
use crate::linalg::{ivec_add, ivec_sub, q_frac_part, q_to_f64, qvec_dot_ivec, IMatrix, IVec, QMatrix, QVec};
use crate::types::{AdmissiblePair, ExpandingMatrix};

/// Float threshold for the fast admissibility path.
pub const FLOAT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Float,
}

/// `θ_{b,ℓ} = (R^{-1} b)·ℓ mod 1`, rows indexed by `B`, columns by `L`.
pub fn mask_phase_matrix(r: &IMatrix, b: &[IVec], l: &[IVec]) -> Result<Vec<Vec<BigRational>>> {
    if b.len() != l.len() {
        return Err(Error::SizeMismatch(format!(
            "#B = {} but #L = {}",
            b.len(),
            l.len()
        )));
    }
    let inv = r.to_q().inverse().ok_or(Error::NotInvertible)?;
    let rb: Vec<QVec> = b.iter().map(|v| inv.mul_ivec(v)).collect();
    Ok(rb
        .iter()
        .map(|x| l.iter().map(|v| q_frac_part(&qvec_dot_ivec(x, v))).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    /// Exact verdict (absent in float mode).
    pub exact: Option<bool>,
    /// Largest `|(1/#B) Σ_b e^{-2πi (R^{-1}b)·(ℓ-ℓ')}|` over `ℓ ≠ ℓ'`.
    pub max_modulus: f64,
}

/// Unitarity of `[e^{-2πi (R^{-1}b)·ℓ}] / sqrt(#B)`, i.e. vanishing of the
/// mask sums at every difference `ℓ - ℓ'`. In exact mode the float verdict is
/// computed too and any disagreement is an error.
pub fn check_admissible(r: &IMatrix, b: &[IVec], l: &[IVec], mode: Mode) -> Result<AdmissibilityReport> {
    if b.len() != l.len() {
        return Err(Error::SizeMismatch(format!(
            "#B = {} but #L = {}",
            b.len(),
            l.len()
        )));
    }
    let inv = r.to_q().inverse().ok_or(Error::NotInvertible)?;
    let rb: Vec<QVec> = b.iter().map(|v| inv.mul_ivec(v)).collect();
    let w = BigRational::one() / BigRational::from_integer(b.len().into());
    let mut exact_ok = true;
    let mut max_modulus: f64 = 0.0;
    for (i, li) in l.iter().enumerate() {
        for lj in &l[i + 1..] {
            let diff = ivec_sub(li, lj);
            let phases: Vec<BigRational> = rb.iter().map(|x| q_frac_part(&qvec_dot_ivec(x, &diff))).collect();
            let m = float_mask_modulus(&phases);
            max_modulus = max_modulus.max(m);
            if mode == Mode::Exact && exact_ok {
                let terms: Vec<_> = phases.into_iter().map(|t| (w.clone(), t)).collect();
                exact_ok = phase_sum(&terms)?.is_zero()?;
            }
        }
    }
    let float_ok = max_modulus < FLOAT_TOL;
    match mode {
        Mode::Float => Ok(AdmissibilityReport {
            admissible: float_ok,
            exact: None,
            max_modulus,
        }),
        Mode::Exact if exact_ok != float_ok => Err(Error::ToleranceBreach {
            exact: exact_ok,
            float: float_ok,
            modulus: max_modulus,
        }),
        Mode::Exact => Ok(AdmissibilityReport {
            admissible: exact_ok,
            exact: Some(exact_ok),
            max_modulus,
        }),
    }
}

fn float_mask_modulus(phases: &[BigRational]) -> f64 {
    let n = phases.len() as f64;
    let (re, im) = phases.iter().fold((0.0, 0.0), |(re, im), t| {
        let a = -std::f64::consts::TAU * q_to_f64(t);
        (re + a.cos(), im + a.sin())
    });
    (re * re + im * im).sqrt() / n
}

/// Admissibility of a pair with its attached spectrum.
pub fn check_pair(pair: &AdmissiblePair, mode: Mode) -> Result<AdmissibilityReport> {
    let l = pair.l().ok_or_else(|| Error::MissingSpectrum(pair.name.clone()))?;
    check_admissible(pair.r().matrix(), pair.b().digits(), l, mode)
}

/// Exact vanishing of the mask of `B` at `R^{-T} ℓ`.
fn mask_vanishes(inv: &QMatrix, b: &[IVec], ell: &[i64]) -> Result<bool> {
    let w = BigRational::one() / BigRational::from_integer(b.len().into());
    let terms: Vec<_> = b
        .iter()
        .map(|v| (w.clone(), q_frac_part(&qvec_dot_ivec(&inv.mul_ivec(v), ell))))
        .collect();
    phase_sum(&terms)?.is_zero()
}

/// Spectra `L ∋ 0` of `δ_{R^{-1}B}` made of canonical residues.
///
/// Vertices are the residues of `ℤ^d / R^T ℤ^d`, with an edge where the
/// mask vanishes exactly at `R^{-T}(ℓ - ℓ')`; spectra are the cliques of
/// size `#B` through 0. Each spectrum is returned as `0` followed by the
/// remaining elements in lexicographic order, and the list is ordered
/// lexicographically, truncated to `max_count`.
pub fn find_spectra(r: &ExpandingMatrix, b: &[IVec], max_count: usize) -> Result<Vec<Vec<IVec>>> {
    let dim = r.dim();
    let zero = vec![0i64; dim];
    if b.is_empty() || max_count == 0 || b.len() as u64 > r.abs_det() {
        return Ok(Vec::new());
    }
    let inv = r.inverse();
    // the mask at R^{-T}ℓ depends only on the class of ℓ
    let residues = r.residues();
    let mut zeros = BTreeSet::new();
    for v in &residues {
        if v != &zero && mask_vanishes(inv, b, v)? {
            zeros.insert(v.clone());
        }
    }
    let candidates: Vec<IVec> = residues.iter().filter(|v| zeros.contains(*v)).cloned().collect();
    let n = candidates.len();
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| i != j && zeros.contains(&r.reduce(&ivec_sub(&candidates[i], &candidates[j]))))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    let all: Vec<usize> = (0..n).collect();
    extend_cliques(&adj, &all, b.len() - 1, &mut chosen, &mut out, max_count);
    Ok(out
        .into_iter()
        .map(|c| {
            let mut l = vec![zero.clone()];
            l.extend(c.into_iter().map(|i| candidates[i].clone()));
            l
        })
        .collect())
}

fn extend_cliques(
    adj: &[Vec<bool>],
    pool: &[usize],
    need: usize,
    chosen: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    max_count: usize,
) {
    if out.len() >= max_count {
        return;
    }
    if need == 0 {
        out.push(chosen.clone());
        return;
    }
    for (pos, &v) in pool.iter().enumerate() {
        if pool.len() - pos < need {
            break;
        }
        let next: Vec<usize> = pool[pos + 1..].iter().copied().filter(|&u| adj[v][u]).collect();
        if next.len() + 1 < need {
            continue;
        }
        chosen.push(v);
        extend_cliques(adj, &next, need - 1, chosen, out, max_count);
        chosen.pop();
        if out.len() >= max_count {
            return;
        }
    }
}

/// `(R, B, L)` without an expansion requirement on `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct HadamardTriple {
    pub r: IMatrix,
    pub b: Vec<IVec>,
    pub l: Vec<IVec>,
}

impl HadamardTriple {
    pub fn from_pair(pair: &AdmissiblePair) -> Result<Self> {
        let l = pair.l().ok_or_else(|| Error::MissingSpectrum(pair.name.clone()))?;
        Ok(HadamardTriple {
            r: pair.r().matrix().clone(),
            b: pair.b().digits().to_vec(),
            l: l.to_vec(),
        })
    }

    pub fn check(&self, mode: Mode) -> Result<AdmissibilityReport> {
        check_admissible(&self.r, &self.b, &self.l, mode)
    }
}

/// `𝐑 = R_n⋯R_1`, `𝐁 = (R_n⋯R_2)B_1 + ⋯ + B_n`,
/// `𝐋 = L_1 + R_1^T L_2 + ⋯ + (R_1^T⋯R_{n-1}^T) L_n`.
pub fn compose_pairs(triples: &[HadamardTriple]) -> Result<HadamardTriple> {
    let first = triples
        .first()
        .ok_or_else(|| Error::InvalidParameter("no triples to compose".into()))?;
    let dim = first.r.dim();
    if let Some(t) = triples.iter().find(|t| t.r.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: t.r.dim(),
        });
    }
    let mut r = first.r.clone();
    let mut b = first.b.clone();
    let mut l = first.l.clone();
    // R_1^T ⋯ R_{k-1}^T
    let mut rt_prod = first.r.transpose();
    for t in &triples[1..] {
        b = sumset(&b.iter().map(|v| t.r.mul_vec(v)).collect::<Vec<_>>(), &t.b);
        l = sumset(&l, &t.l.iter().map(|v| rt_prod.mul_vec(v)).collect::<Vec<_>>());
        r = t.r.mul(&r);
        rt_prod = rt_prod.mul(&t.r.transpose());
    }
    let distinct: BTreeSet<&IVec> = b.iter().collect();
    if distinct.len() != b.len() {
        return Err(Error::InvalidDigits("composed digits are not distinct".into()));
    }
    Ok(HadamardTriple { r, b, l })
}

/// `{a + b}` in the order `a` major, `b` minor.
pub fn sumset(a: &[IVec], b: &[IVec]) -> Vec<IVec> {
    a.iter().flat_map(|x| b.iter().map(move |y| ivec_add(x, y))).collect()
}

pub fn translate_spectrum(l: &[IVec], l0: &[i64]) -> Vec<IVec> {
    l.iter().map(|v| ivec_add(v, l0)).collect()
}

pub fn translate_digits(b: &[IVec], t: &[i64]) -> Vec<IVec> {
    b.iter().map(|x| ivec_add(x, t)).collect()
}

/// `(M^T)^{-1} Λ`, exactly.
pub fn pushforward_spectrum(lambda: &[QVec], m: &IMatrix) -> Result<Vec<QVec>> {
    let mt_inv = m.transpose().to_q().inverse().ok_or(Error::NotInvertible)?;
    Ok(lambda.iter().map(|v| mt_inv.mul_qvec(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{ivec_to_q, q_frac, q_int};

    fn m1(x: i64) -> IMatrix {
        IMatrix::new(1, vec![x])
    }

    fn v1(xs: &[i64]) -> Vec<IVec> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn phase_matrix_examples() {
        let p = mask_phase_matrix(&m1(4), &v1(&[0, 2]), &v1(&[0, 1])).unwrap();
        assert_eq!(p, vec![vec![q_int(0), q_int(0)], vec![q_int(0), q_frac(1, 2)]]);
        let e = fixtures::example1_p1();
        let p = mask_phase_matrix(e.r().matrix(), e.b().digits(), e.l().unwrap()).unwrap();
        for row in &p {
            // column of ℓ = 0 is zero
            assert_eq!(row[0], q_int(0));
            for t in row {
                assert!((num_bigint::BigInt::from(4) % t.denom()) == 0.into());
            }
        }
        assert!(mask_phase_matrix(&m1(4), &v1(&[0, 2]), &v1(&[0])).is_err());
    }

    #[test]
    fn admissibility_fixtures() {
        for pair in [fixtures::jp_pair(), fixtures::example1_p1(), fixtures::example1_p2()] {
            let rep = check_pair(&pair, Mode::Exact).unwrap();
            assert!(rep.admissible, "{}", pair.name);
            assert!(check_pair(&pair, Mode::Float).unwrap().admissible);
        }
        let rep = check_pair(&fixtures::cantor3_pair(), Mode::Exact).unwrap();
        assert!(!rep.admissible);
        assert!((rep.max_modulus - 0.5).abs() < 1e-12);
        for n in 1..=8 {
            assert!(check_pair(&fixtures::example2_pair(n), Mode::Exact).unwrap().admissible);
        }
    }

    #[test]
    fn spectrum_search_examples() {
        let r3 = ExpandingMatrix::new(m1(3)).unwrap();
        assert!(find_spectra(&r3, &v1(&[0, 2]), 10).unwrap().is_empty());
        let r4 = ExpandingMatrix::new(m1(4)).unwrap();
        let s = find_spectra(&r4, &v1(&[0, 2]), 10).unwrap();
        assert!(s.contains(&v1(&[0, 1])));
        assert_eq!(s, vec![v1(&[0, 1]), v1(&[0, 3])]);
        let r2 = ExpandingMatrix::new(m1(2)).unwrap();
        assert_eq!(find_spectra(&r2, &v1(&[0, 1]), 10).unwrap(), vec![v1(&[0, 1])]);
    }

    #[test]
    fn found_spectra_are_admissible() {
        let p = fixtures::example1_p1();
        let all = find_spectra(p.r(), p.b().digits(), 50).unwrap();
        assert!(!all.is_empty());
        let sorted = {
            let mut s = all.clone();
            s.sort();
            s
        };
        assert_eq!(all, sorted);
        for l in &all {
            assert_eq!(l.len(), 4);
            assert_eq!(l[0], vec![0, 0]);
            assert!(check_admissible(p.r().matrix(), p.b().digits(), l, Mode::Exact).unwrap().admissible);
        }
        // the attached spectrum is found up to residue classes
        let target: BTreeSet<IVec> = p.l().unwrap().iter().map(|v| p.r().reduce(v)).collect();
        assert!(all
            .iter()
            .any(|l| l.iter().map(|v| p.r().reduce(v)).collect::<BTreeSet<_>>() == target));
    }

    #[test]
    fn composition() {
        let jp = HadamardTriple::from_pair(&fixtures::jp_pair()).unwrap();
        assert_eq!(compose_pairs(&[jp.clone()]).unwrap(), jp);
        let c = compose_pairs(&[jp.clone(), jp]).unwrap();
        assert_eq!(c.r, m1(16));
        assert_eq!(c.b, v1(&[0, 2, 8, 10]));
        assert_eq!(c.l, v1(&[0, 4, 1, 5]));
        assert!(c.check(Mode::Exact).unwrap().admissible);

        let t1 = HadamardTriple::from_pair(&fixtures::example1_p1()).unwrap();
        let t2 = HadamardTriple::from_pair(&fixtures::example1_p2()).unwrap();
        let c = compose_pairs(&[t1, t2]).unwrap();
        assert_eq!(c.l.len(), 12);
        assert!(c.check(Mode::Exact).unwrap().admissible);
    }

    #[test]
    fn translations() {
        let r = m1(4);
        let l = translate_spectrum(&v1(&[0, 1]), &[-1]);
        assert_eq!(l, v1(&[-1, 0]));
        assert!(check_admissible(&r, &v1(&[0, 2]), &l, Mode::Exact).unwrap().admissible);
        assert_eq!(translate_spectrum(&v1(&[0, 1]), &[0]), v1(&[0, 1]));
        let b = translate_digits(&v1(&[0, 2]), &[1]);
        assert_eq!(b, v1(&[1, 3]));
        assert!(check_admissible(&r, &b, &v1(&[0, 1]), Mode::Exact).unwrap().admissible);
    }

    #[test]
    fn pushforward() {
        let lam: Vec<QVec> = [0, 1].iter().map(|&x| ivec_to_q(&[x])).collect();
        assert_eq!(pushforward_spectrum(&lam, &IMatrix::identity(1)).unwrap(), lam);
        assert_eq!(
            pushforward_spectrum(&lam, &m1(4)).unwrap(),
            vec![vec![q_int(0)], vec![q_frac(1, 4)]]
        );
        let lam: Vec<QVec> = [0, 1, 4, 5].iter().map(|&x| ivec_to_q(&[x])).collect();
        assert_eq!(
            pushforward_spectrum(&lam, &m1(16)).unwrap(),
            vec![vec![q_int(0)], vec![q_frac(1, 16)], vec![q_frac(1, 4)], vec![q_frac(5, 16)]]
        );
        assert!(matches!(
            pushforward_spectrum(&lam, &m1(0)),
            Err(Error::NotInvertible)
        ));
    }
}
