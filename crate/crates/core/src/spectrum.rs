//! Candidate spectra: the canonical tower `L_1 + R_1^T L_2 + ⋯` and the
//! corrected construction that shifts tower elements by `R^T k` so the tail
//! transforms stay bounded below.
//!
//! Sets are kept in tower order: every level is a prefix of the next and
//! the origin comes first.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{GridSpec, MaskProductEvaluator, QFunction};
use crate::gram::{gram_matrix_int, GramReport};
use crate::linalg::{euclid, operator_norm, qvec_to_f64, IMatrix, IVec};
use crate::measure::{build_mu_n, DEFAULT_ATOM_CAP};
use crate::system::ConvolutionSystem;

/// Largest depth scanned when choosing level depths automatically.
pub const MAX_AUTO_DEPTH: usize = 60;

/// `(R_{p+1}^T ⋯ R_q^T)` as an integer matrix.
fn transposed_product(system: &ConvolutionSystem, p: usize, q: usize) -> Result<IMatrix> {
    let mut acc = IMatrix::identity(system.dim());
    for k in p + 1..=q {
        acc = acc.mul(&system.pair_at(k)?.r().matrix().transpose());
    }
    Ok(acc)
}

/// `𝐋_{p,q} = L_{p+1} + R_{p+1}^T L_{p+2} + ⋯ + (R_{p+1}^T⋯R_{q-1}^T) L_q`
/// with every `L_k` translated to contain 0, in tower order.
pub fn tower(system: &ConvolutionSystem, p: usize, q: usize) -> Result<Vec<IVec>> {
    system.check_depth(q)?;
    let mut out = vec![vec![0i64; system.dim()]];
    let mut rt = IMatrix::identity(system.dim());
    for k in p + 1..=q {
        let pair = system.pair_at(k)?;
        let l = pair
            .normalized_spectrum()
            .ok_or_else(|| Error::MissingSpectrum(pair.name.clone()))?;
        let mut next = Vec::with_capacity(out.len() * l.len());
        for ell in &l {
            let shift = rt.mul_vec(ell);
            next.extend(out.iter().map(|v| v.iter().zip(&shift).map(|(a, b)| a + b).collect::<IVec>()));
        }
        out = next;
        rt = rt.mul(&pair.r().matrix().transpose());
    }
    Ok(out)
}

/// `Λ_n = L_1 + R_1^T L_2 + ⋯ + (R_1^T⋯R_{n-1}^T) L_n`.
pub fn canonical_spectrum(system: &ConvolutionSystem, n: usize) -> Result<Vec<IVec>> {
    tower(system, 0, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionParams {
    pub gamma: f64,
    pub eps: f64,
    pub box_radius: i64,
    pub tail_depth: usize,
}

impl Default for CorrectionParams {
    fn default() -> Self {
        CorrectionParams {
            gamma: 0.2,
            eps: 1e-2,
            box_radius: 3,
            tail_depth: 30,
        }
    }
}

/// How the level depths `m_1 < m_2 < ⋯` are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelDepths {
    Explicit(Vec<usize>),
    /// `m_1 = first`; every later `m_j` is the smallest depth passing the
    /// level-gap rule for `Λ_{j-1}`.
    Auto { first: usize, levels: usize },
}

/// One corrected element: `λ ∈ 𝐋_{m_{j-1},m_j}`, its shift `k` and
/// `|ν̂_{>m_j}(x + k)|` at `x = (R_{m_{j-1}+1}^T⋯R_{m_j}^T)^{-1} λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub lambda: IVec,
    pub k: IVec,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCandidate {
    pub dim: usize,
    /// `Λ_1 ⊆ Λ_2 ⊆ ⋯`; each level is a prefix of the next.
    pub levels: Vec<Vec<IVec>>,
    pub depths: Vec<usize>,
    /// Corrections of level `j` (index `j-1`); empty for the first level.
    pub corrections: Vec<Vec<Correction>>,
    pub params: CorrectionParams,
    /// Largest `|(R_1^T⋯R_{m_j}^T)^{-1} λ|` over `Λ_{j-1}` for each level.
    pub level_gaps: Vec<f64>,
    /// `‖(R_{m+T}⋯R_{m+1})^{-1}‖` of the truncated tails, per level.
    pub tail_norms: Vec<f64>,
}

impl SpectrumCandidate {
    pub fn level(&self, j: usize) -> &[IVec] {
        &self.levels[j - 1]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Rows `(level, λ, k)` where `λ` is the element of the level in which
    /// it first appears and `k` its correction (zero for the first level).
    pub fn table(&self) -> Vec<(usize, IVec, IVec)> {
        let zero = vec![0i64; self.dim];
        let mut rows = Vec::new();
        for (j, level) in self.levels.iter().enumerate() {
            if j == 0 {
                rows.extend(level.iter().map(|l| (1, l.clone(), zero.clone())));
            } else {
                rows.extend(self.corrections[j].iter().map(|c| (j + 1, c.lambda.clone(), c.k.clone())));
            }
        }
        rows
    }
}

/// Largest `|(R_1^T⋯R_m^T)^{-1} λ|` over `λ`, with the maximizer.
fn level_gap(system: &ConvolutionSystem, m: usize, lambda: &[IVec]) -> Result<(f64, IVec)> {
    let inv_t = system.inverse_product(m)?.transpose();
    let mut worst = (0.0, vec![0; system.dim()]);
    for l in lambda {
        let v = euclid(&qvec_to_f64(&inv_t.mul_ivec(l)));
        if v > worst.0 {
            worst = (v, l.clone());
        }
    }
    Ok(worst)
}

fn box_points(dim: usize, r: i64) -> Vec<IVec> {
    let mut pts = crate::fixtures::lattice_box(dim, r);
    // smallest norm first, then lexicographic
    pts.sort_by(|a, b| {
        let na: i64 = a.iter().map(|x| x * x).sum();
        let nb: i64 = b.iter().map(|x| x * x).sum();
        na.cmp(&nb).then_with(|| a.cmp(b))
    });
    pts
}

/// Pick `k` for one tower element: `k = 0` when it already reaches `ε`,
/// otherwise the maximizer of `|ν̂(x + k)|` over the box (ties broken by
/// smallest norm, then lexicographically).
fn choose_k(tail: &MaskProductEvaluator, x: &[f64], lambda: &IVec, level: usize, params: &CorrectionParams, candidates: &[IVec]) -> Result<(IVec, f64)> {
    let zero = vec![0i64; x.len()];
    let v0 = tail.eval_shifted(&zero, x).norm();
    if lambda.iter().all(|&c| c == 0) || v0 >= params.eps {
        if v0 < params.eps {
            return Err(Error::CorrectionNotFound {
                level,
                lambda: lambda.clone(),
                best: v0,
                eps: params.eps,
            });
        }
        return Ok((zero, v0));
    }
    let mut best = (zero, v0);
    for k in candidates {
        let v = tail.eval_shifted(k, x).norm();
        if v > best.1 {
            best = (k.clone(), v);
        }
    }
    if best.1 < params.eps {
        return Err(Error::CorrectionNotFound {
            level,
            lambda: lambda.clone(),
            best: best.1,
            eps: params.eps,
        });
    }
    Ok(best)
}

/// Build `Λ_1 = 𝐋_{0,m_1}` and, for `j >= 2`,
/// `Λ_j = Λ_{j-1} + 𝐑_{0,m_{j-1}}^T {λ + 𝐑_{m_{j-1},m_j}^T k_{λ,j} : λ ∈ 𝐋_{m_{j-1},m_j}}`.
pub fn corrected_spectrum(system: &ConvolutionSystem, depths: &LevelDepths, params: &CorrectionParams) -> Result<SpectrumCandidate> {
    if !(params.gamma > 0.0 && params.eps > 0.0) || params.box_radius < 0 {
        return Err(Error::InvalidParameter("gamma and eps must be positive, box radius nonnegative".into()));
    }
    let (first, count) = match depths {
        LevelDepths::Explicit(v) => {
            if v.is_empty() || v.windows(2).any(|w| w[0] >= w[1]) || v[0] == 0 {
                return Err(Error::InvalidParameter("level depths must be positive and increasing".into()));
            }
            (v[0], v.len())
        }
        LevelDepths::Auto { first, levels } => {
            if *first == 0 || *levels == 0 {
                return Err(Error::InvalidParameter("level depths must be positive".into()));
            }
            (*first, *levels)
        }
    };
    let dim = system.dim();
    let candidates = box_points(dim, params.box_radius);
    let mut levels = vec![tower(system, 0, first)?];
    let mut chosen = vec![first];
    let mut corrections = vec![Vec::new()];
    let mut level_gaps = vec![0.0];
    let mut tail_norms = vec![tail_norm(system, first, params.tail_depth)?];
    for j in 2..=count {
        let prev = levels.last().expect("one level");
        let m_prev = *chosen.last().expect("one depth");
        let m = match depths {
            LevelDepths::Explicit(v) => {
                let m = v[j - 1];
                let (gap, lambda) = level_gap(system, m, prev)?;
                if gap >= params.gamma / 2.0 {
                    return Err(Error::LevelGapTooSmall {
                        level: j,
                        lambda,
                        value: gap,
                        bound: params.gamma / 2.0,
                    });
                }
                m
            }
            LevelDepths::Auto { .. } => {
                let mut m = m_prev + 1;
                loop {
                    system.check_depth(m)?;
                    let (gap, lambda) = level_gap(system, m, prev)?;
                    if gap < params.gamma / 2.0 {
                        break m;
                    }
                    if m >= MAX_AUTO_DEPTH {
                        return Err(Error::LevelGapTooSmall {
                            level: j,
                            lambda,
                            value: gap,
                            bound: params.gamma / 2.0,
                        });
                    }
                    m += 1;
                }
            }
        };
        level_gaps.push(level_gap(system, m, prev)?.0);
        let block = tower(system, m_prev, m)?;
        let seg_t = transposed_product(system, m_prev, m)?;
        let seg_inv_t = seg_t.to_q().inverse().ok_or(Error::NotInvertible)?;
        let tail = MaskProductEvaluator::tail(system, m, params.tail_depth)?;
        let corr: Vec<Correction> = block
            .par_iter()
            .map(|lambda| {
                let x = qvec_to_f64(&seg_inv_t.mul_ivec(lambda));
                let (k, value) = choose_k(&tail, &x, lambda, j, params, &candidates)?;
                Ok(Correction {
                    lambda: lambda.clone(),
                    k,
                    value,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let head_t = transposed_product(system, 0, m_prev)?;
        let mut next = Vec::with_capacity(prev.len() * corr.len());
        for c in &corr {
            let shifted: IVec = c.lambda.iter().zip(seg_t.mul_vec(&c.k)).map(|(a, b)| a + b).collect();
            let offset = head_t.mul_vec(&shifted);
            next.extend(prev.iter().map(|v| v.iter().zip(&offset).map(|(a, b)| a + b).collect::<IVec>()));
        }
        levels.push(next);
        chosen.push(m);
        corrections.push(corr);
        tail_norms.push(tail_norm(system, m, params.tail_depth)?);
    }
    Ok(SpectrumCandidate {
        dim,
        levels,
        depths: chosen,
        corrections,
        params: params.clone(),
        level_gaps,
        tail_norms,
    })
}

fn tail_norm(system: &ConvolutionSystem, m: usize, t: usize) -> Result<f64> {
    system.check_depth(m + t)?;
    Ok(operator_norm(&system.shift(m)?.inverse_product(t)?.to_f64()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub level: usize,
    pub depth: usize,
    pub size: usize,
    pub gram: GramReport,
    pub q_min: f64,
    pub q_max: f64,
    pub truncation: usize,
    pub grid_res: usize,
}

impl LevelReport {
    /// `Q` on the grid lies in `[1 - delta, 1 + 1e-9]`.
    pub fn q_within(&self, delta: f64) -> bool {
        self.q_min >= 1.0 - delta && self.q_max <= 1.0 + 1e-9
    }
}

/// Checks for level `j`: exact Gram identity of `Λ_j` against `μ_{m_j}`,
/// and the range of `Q` over `Λ_j` with `μ̂` truncated at depth
/// `truncation`, on a grid of the centered cell `[-1/2, 1/2)^d`.
pub fn verify_level(system: &ConvolutionSystem, candidate: &SpectrumCandidate, j: usize, grid_res: usize, truncation: usize) -> Result<LevelReport> {
    if j == 0 || j > candidate.len() {
        return Err(Error::InvalidParameter(format!("level {j} not built")));
    }
    let mut report = verify_lambda(system, candidate.level(j), candidate.depths[j - 1], grid_res, truncation)?;
    report.level = j;
    Ok(report)
}

/// The same checks for an arbitrary frequency set against `μ_depth`.
pub fn verify_lambda(system: &ConvolutionSystem, lambda: &[IVec], depth: usize, grid_res: usize, truncation: usize) -> Result<LevelReport> {
    let mu = build_mu_n(system, depth, DEFAULT_ATOM_CAP)?;
    let gram = gram_matrix_int(&mu, lambda, false)?;
    let ev = MaskProductEvaluator::new(system, truncation)?;
    let q = QFunction::new(&ev, lambda);
    let grid = GridSpec::centered(system.dim(), grid_res)?;
    let values: Vec<f64> = (0..grid.len()).into_par_iter().map(|i| q.value(&grid.point(i))).collect();
    let q_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let q_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(LevelReport {
        level: 0,
        depth,
        size: lambda.len(),
        gram,
        q_min,
        q_max,
        truncation,
        grid_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::collections::BTreeSet;

    #[test]
    fn canonical_examples() {
        let jp = fixtures::jp();
        assert_eq!(canonical_spectrum(&jp, 1).unwrap(), vec![vec![0], vec![1]]);
        assert_eq!(canonical_spectrum(&jp, 2).unwrap(), vec![vec![0], vec![1], vec![4], vec![5]]);
        let sys = fixtures::example1_alternating();
        let l2 = canonical_spectrum(&sys, 2).unwrap();
        assert_eq!(l2.len(), 12);
        let mu = build_mu_n(&sys, 2, DEFAULT_ATOM_CAP).unwrap();
        assert!(gram_matrix_int(&mu, &l2, false).unwrap().identity);
        let bare = crate::system::ConvolutionSystem::constant(fixtures::jp_pair().clone());
        assert!(canonical_spectrum(&bare, 3).is_ok());
    }

    #[test]
    fn missing_spectrum() {
        let p = crate::types::AdmissiblePair::from_raw("x", &[vec![4]], &[vec![0], vec![2]], None).unwrap();
        let sys = crate::system::ConvolutionSystem::constant(p);
        assert!(matches!(canonical_spectrum(&sys, 2), Err(Error::MissingSpectrum(_))));
    }

    #[test]
    fn tower_is_nested_and_distinct() {
        let sys = fixtures::example1_alternating();
        for n in 1..=4 {
            let a = canonical_spectrum(&sys, n - 1).unwrap();
            let b = canonical_spectrum(&sys, n).unwrap();
            assert_eq!(&b[..a.len()], &a[..]);
            let m = transposed_product(&sys, 0, n).unwrap().transpose();
            let r = crate::types::ExpandingMatrix::new(m).unwrap();
            let classes: BTreeSet<IVec> = b.iter().map(|v| r.reduce(v)).collect();
            assert_eq!(classes.len(), b.len());
        }
    }

    #[test]
    fn jp_corrections_vanish() {
        let jp = fixtures::jp();
        let params = CorrectionParams {
            gamma: 0.2,
            eps: 0.05,
            box_radius: 3,
            tail_depth: 30,
        };
        let cand = corrected_spectrum(&jp, &LevelDepths::Explicit(vec![1, 3, 5]), &params).unwrap();
        for (j, level) in cand.levels.iter().enumerate() {
            assert_eq!(level, &canonical_spectrum(&jp, cand.depths[j]).unwrap());
        }
        assert!(cand.corrections.iter().flatten().all(|c| c.k == vec![0]));
    }

    #[test]
    fn level_gap_is_enforced() {
        let sys = fixtures::example1_alternating();
        let params = CorrectionParams {
            gamma: 0.1,
            ..CorrectionParams::default()
        };
        let err = corrected_spectrum(&sys, &LevelDepths::Explicit(vec![2, 4, 6]), &params).unwrap_err();
        assert!(matches!(err, Error::LevelGapTooSmall { level: 2, .. }), "{err}");
        // scanning finds admissible depths for the same gamma
        let cand = corrected_spectrum(&sys, &LevelDepths::Auto { first: 2, levels: 3 }, &params).unwrap();
        assert!(cand.level_gaps.iter().all(|&g| g < 0.05));
    }

    #[test]
    fn corrected_levels_are_exact_spectra() {
        let sys = fixtures::example1_alternating();
        let params = CorrectionParams {
            gamma: 0.2,
            ..CorrectionParams::default()
        };
        let cand = corrected_spectrum(&sys, &LevelDepths::Explicit(vec![2, 4]), &params).unwrap();
        assert_eq!(cand.level(2).len(), 144);
        assert_eq!(&cand.level(2)[..12], cand.level(1));
        for c in &cand.corrections[1] {
            assert!(c.value >= params.eps);
            if c.lambda.iter().all(|&x| x == 0) {
                assert_eq!(c.k, vec![0, 0]);
            }
        }
        let rep = verify_level(&sys, &cand, 2, 16, 40).unwrap();
        assert!(rep.gram.exact && rep.gram.identity);
        assert!(rep.q_max <= 1.0 + 1e-9);
    }
}
