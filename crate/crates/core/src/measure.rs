//! Finitely supported probability measures with exact rational atoms.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{ivec_to_q, qvec_add, qvec_to_f64, QMatrix, QVec};
use crate::system::ConvolutionSystem;
use crate::types::checked_count_product;

/// Default cap on the number of atoms produced by [`build_mu_n`].
pub const DEFAULT_ATOM_CAP: u128 = 1_000_000;

/// Atoms are kept sorted by position with duplicates merged by exact
/// equality; the total mass is exactly one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteMeasure {
    dim: usize,
    atoms: Vec<(QVec, BigRational)>,
}

impl DiscreteMeasure {
    /// Merge duplicate points and validate positivity and unit mass.
    pub fn from_atoms(dim: usize, atoms: Vec<(QVec, BigRational)>) -> Result<Self> {
        let mut merged: BTreeMap<QVec, BigRational> = BTreeMap::new();
        for (x, w) in atoms {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.len(),
                });
            }
            if !w.is_positive() {
                return Err(Error::InvalidMeasure("non-positive weight".into()));
            }
            *merged.entry(x).or_insert_with(BigRational::zero) += w;
        }
        let total = merged.values().fold(BigRational::zero(), |a, w| a + w);
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!("total mass {total} != 1")));
        }
        Ok(DiscreteMeasure {
            dim,
            atoms: merged.into_iter().collect(),
        })
    }

    pub fn dirac(point: QVec) -> Self {
        DiscreteMeasure {
            dim: point.len(),
            atoms: vec![(point, BigRational::one())],
        }
    }

    /// `δ_A`: equal weights on the distinct points of `A`.
    pub fn uniform(points: Vec<QVec>) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| Error::InvalidMeasure("no points".into()))?;
        let w = BigRational::new(BigInt::one(), BigInt::from(points.len()));
        Self::from_atoms(dim, points.into_iter().map(|p| (p, w.clone())).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[(QVec, BigRational)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Mass of a single point (zero when it is not an atom).
    pub fn mass_at(&self, x: &[BigRational]) -> BigRational {
        self.atoms
            .binary_search_by(|(p, _)| p.as_slice().cmp(x))
            .map(|i| self.atoms[i].1.clone())
            .unwrap_or_else(|_| BigRational::zero())
    }

    /// `μ ∗ ν`: pairwise sums of atoms with product weights.
    pub fn convolve(&self, other: &DiscreteMeasure) -> DiscreteMeasure {
        let mut merged: BTreeMap<QVec, BigRational> = BTreeMap::new();
        for (x, w) in &self.atoms {
            for (y, v) in &other.atoms {
                *merged.entry(qvec_add(x, y)).or_insert_with(BigRational::zero) += w * v;
            }
        }
        DiscreteMeasure {
            dim: self.dim,
            atoms: merged.into_iter().collect(),
        }
    }

    /// Image under the linear map `x ↦ M x`.
    pub fn map_linear(&self, m: &QMatrix) -> DiscreteMeasure {
        let mut merged: BTreeMap<QVec, BigRational> = BTreeMap::new();
        for (x, w) in &self.atoms {
            *merged.entry(m.mul_qvec(x)).or_insert_with(BigRational::zero) += w;
        }
        DiscreteMeasure {
            dim: self.dim,
            atoms: merged.into_iter().collect(),
        }
    }

    /// `Σ w e^{-2πi ξ·x}` evaluated directly over the atoms.
    pub fn fourier(&self, xi: &[f64]) -> Complex64 {
        self.atoms
            .iter()
            .map(|(x, w)| {
                let phase: f64 = qvec_to_f64(x).iter().zip(xi).map(|(a, b)| a * b).sum();
                Complex64::from_polar(crate::linalg::q_to_f64(w), -std::f64::consts::TAU * phase)
            })
            .sum()
    }

    /// Total mass (exact).
    pub fn total_mass(&self) -> BigRational {
        self.atoms
            .iter()
            .fold(BigRational::zero(), |a, (_, w)| a + w)
    }
}

/// `μ ∗ ν`.
pub fn convolve_discrete(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> DiscreteMeasure {
    mu.convolve(nu)
}

/// The weighted digit measure `Σ p_b δ_{M b}` for the pair at level `k`.
pub fn level_factor(system: &ConvolutionSystem, k: usize, m: &QMatrix) -> Result<DiscreteMeasure> {
    let pair = system.pair_at(k)?;
    let probs = pair.b().probabilities();
    let atoms = pair
        .b()
        .digits()
        .iter()
        .zip(probs)
        .map(|(b, p)| (m.mul_ivec(b), p))
        .collect();
    DiscreteMeasure::from_atoms(system.dim(), atoms)
}

/// `μ_n = δ_{R_1^{-1}B_1} ∗ δ_{(R_2R_1)^{-1}B_2} ∗ ⋯ ∗ δ_{(R_n⋯R_1)^{-1}B_n}`
/// with exact rational atoms.
pub fn build_mu_n(system: &ConvolutionSystem, n: usize, atom_cap: u128) -> Result<DiscreteMeasure> {
    system.check_depth(n)?;
    let bound = checked_count_product(
        (1..=n).map(|k| system.pair_at(k).map(|p| p.b().len()).unwrap_or(1)),
    );
    if bound > atom_cap {
        return Err(Error::DepthTooLarge {
            atoms: bound,
            cap: atom_cap,
        });
    }
    let mut mu = DiscreteMeasure::dirac(ivec_to_q(&vec![0; system.dim()]));
    for (k, m) in system.inverse_products(n)?.iter().enumerate() {
        mu = mu.convolve(&level_factor(system, k + 1, m)?);
    }
    Ok(mu)
}

/// Monte Carlo points `Σ_{k≤depth} (R_k⋯R_1)^{-1} b_k` with digits drawn
/// independently according to the digit weights. Deterministic in `seed`.
pub fn sample(
    system: &ConvolutionSystem,
    depth: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    system.check_depth(depth)?;
    let dim = system.dim();
    let mut levels = Vec::with_capacity(depth);
    for (k, m) in system.inverse_products(depth)?.iter().enumerate() {
        let pair = system.pair_at(k + 1)?;
        let points: Vec<Vec<f64>> = pair
            .b()
            .digits()
            .iter()
            .map(|b| qvec_to_f64(&m.mul_ivec(b)))
            .collect();
        let dist = WeightedIndex::new(pair.b().probabilities_f64())
            .map_err(|e| Error::InvalidDigits(e.to_string()))?;
        levels.push((points, dist));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut x = vec![0.0; dim];
        for (points, dist) in &levels {
            let p = &points[dist.sample(&mut rng)];
            for (xi, pi) in x.iter_mut().zip(p) {
                *xi += pi;
            }
        }
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{q_frac, q_int};

    fn atoms_1d(m: &DiscreteMeasure) -> Vec<(BigRational, BigRational)> {
        m.atoms()
            .iter()
            .map(|(x, w)| (x[0].clone(), w.clone()))
            .collect()
    }

    #[test]
    fn convolution_examples() {
        let half = DiscreteMeasure::uniform(vec![vec![q_int(0)], vec![q_frac(1, 2)]]).unwrap();
        let eighth = DiscreteMeasure::uniform(vec![vec![q_int(0)], vec![q_frac(1, 8)]]).unwrap();
        let c = convolve_discrete(&half, &eighth);
        let quarter = q_frac(1, 4);
        assert_eq!(
            atoms_1d(&c),
            vec![
                (q_int(0), quarter.clone()),
                (q_frac(1, 8), quarter.clone()),
                (q_frac(1, 2), quarter.clone()),
                (q_frac(5, 8), quarter.clone()),
            ]
        );
        let c = convolve_discrete(&half, &half);
        assert_eq!(
            atoms_1d(&c),
            vec![
                (q_int(0), q_frac(1, 4)),
                (q_frac(1, 2), q_frac(1, 2)),
                (q_int(1), q_frac(1, 4)),
            ]
        );
        let id = DiscreteMeasure::dirac(vec![q_int(0)]);
        assert_eq!(convolve_discrete(&id, &half), half);
    }

    #[test]
    fn mu_n_examples() {
        let jp = fixtures::jp();
        let m1 = build_mu_n(&jp, 1, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(
            atoms_1d(&m1),
            vec![(q_int(0), q_frac(1, 2)), (q_frac(1, 2), q_frac(1, 2))]
        );
        let m2 = build_mu_n(&jp, 2, DEFAULT_ATOM_CAP).unwrap();
        let xs: Vec<_> = atoms_1d(&m2).into_iter().map(|a| a.0).collect();
        assert_eq!(xs, vec![q_int(0), q_frac(1, 8), q_frac(1, 2), q_frac(5, 8)]);

        let ex1 = fixtures::example1_alternating();
        let m = build_mu_n(&ex1, 1, DEFAULT_ATOM_CAP).unwrap();
        let mut expected = vec![
            vec![q_frac(1, 2), q_frac(1, 2)],
            vec![q_frac(3, 4), q_frac(3, 4)],
            vec![q_frac(1, 2), q_frac(1, 4)],
            vec![q_frac(3, 4), q_frac(1, 2)],
        ];
        expected.sort();
        let got: Vec<QVec> = m.atoms().iter().map(|a| a.0.clone()).collect();
        assert_eq!(got, expected);
        assert!(m.atoms().iter().all(|a| a.1 == q_frac(1, 4)));
    }

    #[test]
    fn atom_cap_guard() {
        let jp = fixtures::jp();
        assert!(matches!(
            build_mu_n(&jp, 21, DEFAULT_ATOM_CAP),
            Err(Error::DepthTooLarge { .. })
        ));
        assert!(build_mu_n(&jp, 10, 2000).is_ok());
    }

    #[test]
    fn invalid_measures_rejected() {
        assert!(DiscreteMeasure::from_atoms(1, vec![(vec![q_int(0)], q_frac(1, 2))]).is_err());
        assert!(DiscreteMeasure::from_atoms(
            1,
            vec![(vec![q_int(0)], q_frac(3, 2)), (vec![q_int(1)], q_frac(-1, 2))]
        )
        .is_err());
        let merged = DiscreteMeasure::from_atoms(
            1,
            vec![(vec![q_int(0)], q_frac(1, 2)), (vec![q_int(0)], q_frac(1, 2))],
        )
        .unwrap();
        assert_eq!(merged.len(), 1);
    }

    #[test]
    fn sampling_basics() {
        let jp = fixtures::jp();
        let pts = sample(&jp, 0, 5, 1).unwrap();
        assert!(pts.iter().all(|p| p == &vec![0.0]));
        assert!(sample(&jp, 4, 0, 1).unwrap().is_empty());
        assert_eq!(sample(&jp, 6, 100, 9).unwrap(), sample(&jp, 6, 100, 9).unwrap());
        assert_ne!(sample(&jp, 6, 100, 9).unwrap(), sample(&jp, 6, 100, 10).unwrap());
    }
}
