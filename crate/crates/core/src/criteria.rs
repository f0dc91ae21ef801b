//! Sufficient-condition checkers: cube containment, digit isolation for
//! diagonal pairs, isolation witnesses for an empty integral periodic zero
//! set, zero-set scans and equi-positivity estimates.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::fourier::{FourierTransform, GridSpec, MaskProductEvaluator};
use crate::linalg::{ivec_to_q, q_int, q_to_f64, qvec_add, qvec_to_f64, IMatrix, IVec, QMatrix, QVec};
use crate::measure::DiscreteMeasure;
use crate::system::ConvolutionSystem;
use crate::types::check_dd_membership;

/// Largest dimension for which cube vertices are enumerated.
pub const MAX_VERTEX_DIM: usize = 20;

/// The cube `C = t_0 + [0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeSpec {
    pub t0: QVec,
}

impl CubeSpec {
    pub fn unit(dim: usize) -> Self {
        CubeSpec {
            t0: vec![BigRational::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.t0.len()
    }

    pub fn vertices(&self) -> Result<Vec<QVec>> {
        let d = self.dim();
        if d > MAX_VERTEX_DIM {
            return Err(Error::TooManyVertices(d));
        }
        Ok((0..1usize << d)
            .map(|mask| {
                self.t0
                    .iter()
                    .enumerate()
                    .map(|(i, t)| if mask >> i & 1 == 1 { t + BigRational::one() } else { t.clone() })
                    .collect()
            })
            .collect())
    }

    /// Closed (`strict = false`) or open membership.
    pub fn contains(&self, x: &[BigRational], strict: bool) -> bool {
        x.iter().zip(&self.t0).all(|(xi, t)| {
            let hi = t + BigRational::one();
            if strict {
                xi > t && xi < &hi
            } else {
                xi >= t && xi <= &hi
            }
        })
    }

    /// Largest Euclidean norm of a point of the cube.
    pub fn radius(&self) -> Result<f64> {
        Ok(self
            .vertices()?
            .iter()
            .map(|v| crate::linalg::euclid(&qvec_to_f64(v)))
            .fold(0.0, f64::max))
    }
}

/// Whether `R^{-1}(C + b) ⊆ C` (or `⊆ int C`): the image is a
/// parallelepiped, so it suffices to test its vertices.
pub fn image_in_cube(inv: &QMatrix, b: &[i64], cube: &CubeSpec, strict: bool) -> Result<bool> {
    let bq = ivec_to_q(b);
    for v in cube.vertices()? {
        if !cube.contains(&inv.mul_qvec(&qvec_add(&v, &bq)), strict) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairContainment {
    pub name: String,
    pub contained: bool,
    pub failing_digit: Option<IVec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistinguishedCheck {
    pub name: String,
    pub digit: IVec,
    pub strictly_inside: bool,
    /// See [`recurring_indices`].
    pub recurs: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeReport {
    pub cube: CubeSpec,
    pub containment: Vec<PairContainment>,
    pub all_contained: bool,
    pub distinguished: Option<DistinguishedCheck>,
}

impl CubeReport {
    pub fn holds(&self) -> bool {
        self.all_contained
            && self
                .distinguished
                .as_ref()
                .is_some_and(|d| d.strictly_inside && d.recurs)
    }
}

/// Containment `R_n^{-1}(C + b) ⊆ C` for every pair used by the word, and
/// strict containment `R^{-1}(C + b_0) ⊆ int C` for the distinguished pair.
/// Without a distinguished pair the first recurring pair and digit (in
/// cycle order, digits lexicographically) passing the strict test is used.
pub fn check_cube_conditions(system: &ConvolutionSystem, cube: &CubeSpec, distinguished: Option<(&str, &[i64])>) -> Result<CubeReport> {
    if cube.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: cube.dim(),
        });
    }
    cube.vertices()?;
    let mut containment = Vec::new();
    for i in system.used_indices() {
        let pair = &system.menu()[i];
        let mut failing = None;
        for b in pair.b().digits() {
            if !image_in_cube(pair.r().inverse(), b, cube, false)? {
                failing = Some(b.clone());
                break;
            }
        }
        containment.push(PairContainment {
            name: pair.name.clone(),
            contained: failing.is_none(),
            failing_digit: failing,
        });
    }
    let all_contained = containment.iter().all(|c| c.contained);
    let recurring = recurring_indices(system);
    let recurs = |idx: usize| recurring.contains(&idx);
    let distinguished = match distinguished {
        Some((name, b0)) => {
            let idx = system
                .menu()
                .iter()
                .position(|p| p.name == name)
                .ok_or_else(|| Error::UnknownPair(name.to_string()))?;
            let pair = &system.menu()[idx];
            if !pair.b().digits().iter().any(|d| d.as_slice() == b0) {
                return Err(Error::InvalidDigits(format!("{b0:?} is not a digit of `{name}`")));
            }
            Some(DistinguishedCheck {
                name: name.to_string(),
                digit: b0.to_vec(),
                strictly_inside: image_in_cube(pair.r().inverse(), b0, cube, true)?,
                recurs: recurs(idx),
            })
        }
        None => {
            let mut found = None;
            'search: for &idx in &recurring {
                let pair = &system.menu()[idx];
                let mut digits = pair.b().digits().to_vec();
                digits.sort();
                for b in digits {
                    if image_in_cube(pair.r().inverse(), &b, cube, true)? {
                        found = Some(DistinguishedCheck {
                            name: pair.name.clone(),
                            digit: b,
                            strictly_inside: true,
                            recurs: true,
                        });
                        break 'search;
                    }
                }
            }
            found
        }
    };
    Ok(CubeReport {
        cube: cube.clone(),
        containment,
        all_contained,
        distinguished,
    })
}

/// Menu indices of pairs that recur: for an eventually periodic word, pairs
/// equal (same `R` and `B`) to a pair of the cycle; for a finite word,
/// pairs occurring at least twice. Ordered by first occurrence.
pub fn recurring_indices(system: &ConvolutionSystem) -> Vec<usize> {
    let menu = system.menu();
    let same = |a: usize, b: usize| menu[a].r().matrix() == menu[b].r().matrix() && menu[a].b() == menu[b].b();
    let word: Vec<usize> = system.prefix().iter().chain(system.cycle()).copied().collect();
    let mut out: Vec<usize> = Vec::new();
    for &i in &word {
        if out.iter().any(|&j| same(i, j)) {
            continue;
        }
        let recurs = if system.is_finite() {
            word.iter().filter(|&&j| same(i, j)).count() >= 2
        } else {
            system.cycle().iter().any(|&j| same(i, j))
        };
        if recurs {
            out.push(i);
        }
    }
    out
}

/// First digit `b` (lexicographically) with `b + R n - b' ∉ {0,1}^d` for all
/// `n ∈ {-1,0,1}^d \ {0}` and `b' ∈ B`, i.e. `R^{-1}b + n` avoids the support
/// cover `R^{-1}B + R^{-1}[0,1]^d`. The cover contains the support, so
/// `None` does not rule out an isolated point of the true support.
pub fn find_isolating_digit(r: &IMatrix, b: &[IVec]) -> Result<Option<IVec>> {
    if !check_dd_membership(r, b) {
        return Err(Error::NotDiagonalClass);
    }
    let m = r.diagonal();
    let dim = m.len();
    let shifts: Vec<IVec> = crate::fixtures::lattice_box(dim, 1)
        .into_iter()
        .filter(|n| n.iter().any(|&x| x != 0))
        .collect();
    let mut digits = b.to_vec();
    digits.sort();
    for cand in &digits {
        let blocked = shifts.iter().any(|n| {
            b.iter().any(|bp| {
                (0..dim).all(|i| {
                    let v = cand[i] + m[i] * n[i] - bp[i];
                    v == 0 || v == 1
                })
            })
        });
        if !blocked {
            return Ok(Some(cand.clone()));
        }
    }
    Ok(None)
}

/// What is known about the support of the measure under test.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportModel {
    /// An explicit discrete measure.
    Atoms(DiscreteMeasure),
    /// The support lies in `∪_a (a + cell · C)`; each cylinder carries
    /// positive mass. When `anchors_in_support` the anchors themselves are
    /// known support points.
    Cover {
        anchors: Vec<QVec>,
        cell: QMatrix,
        cube: CubeSpec,
        anchors_in_support: bool,
    },
}

impl SupportModel {
    /// Cover of a truncated system: anchors are the atoms of `μ_n` and the
    /// cell is `(R_n⋯R_1)^{-1}`, valid when every tail lives in `cube`.
    pub fn truncated(system: &ConvolutionSystem, n: usize, cube: &CubeSpec) -> Result<Self> {
        let mu = crate::measure::build_mu_n(system, n, crate::measure::DEFAULT_ATOM_CAP)?;
        Ok(SupportModel::Cover {
            anchors: mu.atoms().iter().map(|(x, _)| x.clone()).collect(),
            cell: system.inverse_product(n)?,
            cube: cube.clone(),
            anchors_in_support: false,
        })
    }

    /// The cover `R^{-1}B + R^{-1}[0,1]^d` of `(δ_B * ρ)∘R` with `spt ρ ⊆ [0,1]^d`,
    /// taking the origin to be a support point of `ρ`.
    pub fn digit_cover(r: &IMatrix, b: &[IVec]) -> Result<Self> {
        let inv = r.to_q().inverse().ok_or(Error::NotInvertible)?;
        Ok(SupportModel::Cover {
            anchors: b.iter().map(|v| inv.mul_ivec(v)).collect(),
            cell: inv,
            cube: CubeSpec::unit(r.dim()),
            anchors_in_support: true,
        })
    }

    fn dim(&self) -> usize {
        match self {
            SupportModel::Atoms(m) => m.dim(),
            SupportModel::Cover { cell, .. } => cell.dim(),
        }
    }

    /// Exact bounding boxes of the pieces of the model.
    fn piece_boxes(&self) -> Result<Vec<(QVec, QVec)>> {
        match self {
            SupportModel::Atoms(m) => Ok(m.atoms().iter().map(|(x, _)| (x.clone(), x.clone())).collect()),
            SupportModel::Cover { anchors, cell, cube, .. } => {
                let corners: Vec<QVec> = cube.vertices()?.iter().map(|v| cell.mul_qvec(v)).collect();
                let (lo, hi) = bbox(&corners);
                Ok(anchors.iter().map(|a| (qvec_add(a, &lo), qvec_add(a, &hi))).collect())
            }
        }
    }
}

fn bbox(points: &[QVec]) -> (QVec, QVec) {
    let d = points[0].len();
    let mut lo = points[0].clone();
    let mut hi = points[0].clone();
    for p in &points[1..] {
        for i in 0..d {
            if p[i] < lo[i] {
                lo[i] = p[i].clone();
            }
            if p[i] > hi[i] {
                hi[i] = p[i].clone();
            }
        }
    }
    (lo, hi)
}

/// The candidate set `E`.
#[derive(Debug, Clone, PartialEq)]
pub enum WitnessSet {
    Point(QVec),
    Box { lo: QVec, hi: QVec },
}

impl WitnessSet {
    fn bounds(&self) -> (QVec, QVec) {
        match self {
            WitnessSet::Point(p) => (p.clone(), p.clone()),
            WitnessSet::Box { lo, hi } => (lo.clone(), hi.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub holds: bool,
    /// `μ(E) > 0` is certified by the model.
    pub mass_certified: bool,
    /// No translate `E + k`, `k ≠ 0`, meets the model.
    pub translates_clear: bool,
    pub blocking_k: Option<IVec>,
    pub lattice_radius: i64,
    /// Largest `|k|_∞` that could reach the support.
    pub needed_radius: i64,
}

fn boxes_meet(alo: &[BigRational], ahi: &[BigRational], blo: &[BigRational], bhi: &[BigRational]) -> bool {
    (0..alo.len()).all(|i| alo[i] <= bhi[i] && blo[i] <= ahi[i])
}

fn shift(v: &[BigRational], k: &[i64]) -> QVec {
    v.iter().zip(k).map(|(a, &b)| a + q_int(b)).collect()
}

/// Checks `μ(E) > 0` and `μ(E + k) = 0` for all `k ≠ 0`. Only `k` whose
/// translate can reach the support bounding box are tested; they must lie
/// within `|k|_∞ <= lattice_radius`, otherwise the translates cannot be
/// bounded and an error is returned.
pub fn check_isolation_witness(model: &SupportModel, e: &WitnessSet, lattice_radius: i64) -> Result<WitnessReport> {
    let dim = model.dim();
    let (elo, ehi) = e.bounds();
    if elo.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: elo.len(),
        });
    }
    let pieces = model.piece_boxes()?;
    if pieces.is_empty() {
        return Err(Error::UnboundedSupport("empty support model".into()));
    }
    let (slo, _) = bbox(&pieces.iter().map(|p| p.0.clone()).collect::<Vec<_>>());
    let (_, shi) = bbox(&pieces.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
    // E + k meets the support box only if slo - ehi <= k <= shi - elo
    let mut ranges = Vec::with_capacity(dim);
    let mut needed = 0i64;
    for i in 0..dim {
        let lo = (&slo[i] - &ehi[i]).ceil().to_integer();
        let hi = (&shi[i] - &elo[i]).floor().to_integer();
        let lo: i64 = lo.try_into().map_err(|_| Error::UnboundedSupport("support box too large".into()))?;
        let hi: i64 = hi.try_into().map_err(|_| Error::UnboundedSupport("support box too large".into()))?;
        needed = needed.max(lo.abs()).max(hi.abs());
        ranges.push((lo, hi));
    }
    if needed > lattice_radius {
        return Err(Error::UnboundedSupport(format!(
            "translates up to |k| = {needed} reach the support, beyond the lattice radius {lattice_radius}"
        )));
    }

    let mass_certified = match (model, e) {
        (SupportModel::Atoms(m), _) => m
            .atoms()
            .iter()
            .any(|(x, _)| boxes_meet(x, x, &elo, &ehi)),
        (SupportModel::Cover { anchors, anchors_in_support, .. }, WitnessSet::Point(p)) => {
            *anchors_in_support && anchors.contains(p)
        }
        (SupportModel::Cover { .. }, WitnessSet::Box { lo, hi }) => pieces
            .iter()
            .any(|(plo, phi)| (0..dim).all(|i| lo[i] <= plo[i] && phi[i] <= hi[i])),
    };

    let mut blocking = None;
    let mut k: IVec = ranges.iter().map(|r| r.0).collect();
    'outer: loop {
        if k.iter().any(|&x| x != 0) {
            let (klo, khi) = (shift(&elo, &k), shift(&ehi, &k));
            let hit = match (model, e) {
                (SupportModel::Cover { anchors, cell, cube, .. }, WitnessSet::Point(_)) => {
                    let m = cell.inverse().ok_or(Error::NotInvertible)?;
                    anchors.iter().any(|a| {
                        let diff: QVec = klo.iter().zip(a).map(|(x, y)| x - y).collect();
                        cube.contains(&m.mul_qvec(&diff), false)
                    })
                }
                _ => pieces.iter().any(|(plo, phi)| boxes_meet(plo, phi, &klo, &khi)),
            };
            if hit {
                blocking = Some(k.clone());
                break 'outer;
            }
        }
        let mut i = dim;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            if k[i] < ranges[i].1 {
                k[i] += 1;
                break;
            }
            k[i] = ranges[i].0;
        }
    }
    let translates_clear = blocking.is_none();
    Ok(WitnessReport {
        holds: mass_certified && translates_clear,
        mass_certified,
        translates_clear,
        blocking_k: blocking,
        lattice_radius,
        needed_radius: needed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroScanReport {
    /// Grid points `x` with `max_{|k|_∞ <= K} |μ̂(x + k)| < tol`, with that maximum.
    pub candidates: Vec<(Vec<f64>, f64)>,
    pub lattice_radius: i64,
    pub tol: f64,
    pub grid_res: Vec<usize>,
    pub truncation: Option<usize>,
}

/// Scan `[0,1)^d` for points whose integer translates within the lattice
/// box all have small transform. An empty list is evidence, not proof,
/// that the integral periodic zero set is empty.
pub fn scan_zero_set<F: FourierTransform>(f: &F, grid: &GridSpec, lattice_radius: i64, tol: f64, truncation: Option<usize>) -> ZeroScanReport {
    let ks = crate::fixtures::lattice_box(f.dim(), lattice_radius);
    let candidates: Vec<Option<(Vec<f64>, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let mut worst: f64 = 0.0;
            for k in &ks {
                let xi: Vec<f64> = x.iter().zip(k).map(|(a, &b)| a + b as f64).collect();
                worst = worst.max(f.eval(&xi).norm());
                if worst >= tol {
                    return None;
                }
            }
            Some((x, worst))
        })
        .collect();
    ZeroScanReport {
        candidates: candidates.into_iter().flatten().collect(),
        lattice_radius,
        tol,
        grid_res: grid.res.clone(),
        truncation,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquiPositivityCertificate {
    pub tail: usize,
    pub eps: f64,
    /// Half the grid spacing (largest over the axes).
    pub gamma: f64,
    pub grid_res: usize,
    pub box_radius: i64,
    pub truncation: usize,
    /// `(x, k_x, |ν̂(x + k_x)|)` for every grid point.
    pub table: Vec<(Vec<f64>, IVec, f64)>,
    pub worst: (Vec<f64>, f64),
    /// `2π · r` when the tail support is known to lie in a ball of radius `r`.
    pub lipschitz: Option<f64>,
    pub eps_min: f64,
    pub passed: bool,
    /// Values are estimates on a grid with a truncated tail.
    pub empirical: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquiPositivityParams {
    pub grid_res: usize,
    pub box_radius: i64,
    pub tail_depth: usize,
    pub eps_min: f64,
    pub support_radius: Option<f64>,
}

impl Default for EquiPositivityParams {
    fn default() -> Self {
        EquiPositivityParams {
            grid_res: 128,
            box_radius: 3,
            tail_depth: 30,
            eps_min: 1e-4,
            support_radius: None,
        }
    }
}

/// For each grid `x ∈ [0,1)^d` choose `k_x` maximizing `|ν̂_{>n}(x + k)|`
/// over the box (ties: smallest norm, then lexicographic; `k = 0` at the
/// origin) and report `ε = min_x |ν̂_{>n}(x + k_x)|`.
pub fn estimate_equipositivity(system: &ConvolutionSystem, n: usize, params: &EquiPositivityParams) -> Result<EquiPositivityCertificate> {
    if params.grid_res == 0 || params.box_radius < 0 {
        return Err(Error::InvalidParameter("grid resolution must be positive".into()));
    }
    let tail = MaskProductEvaluator::tail(system, n, params.tail_depth)?;
    let dim = system.dim();
    let grid = GridSpec::unit(dim, params.grid_res)?;
    let mut ks = crate::fixtures::lattice_box(dim, params.box_radius);
    ks.sort_by(|a, b| {
        let na: i64 = a.iter().map(|x| x * x).sum();
        let nb: i64 = b.iter().map(|x| x * x).sum();
        na.cmp(&nb).then_with(|| a.cmp(b))
    });
    let table: Vec<(Vec<f64>, IVec, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            if i == 0 {
                let v = tail.eval(&x).norm();
                return (x, vec![0; dim], v);
            }
            let mut best = (ks[0].clone(), -1.0);
            for k in &ks {
                let v = tail.eval_shifted(k, &x).norm();
                if v > best.1 {
                    best = (k.clone(), v);
                }
            }
            (x, best.0, best.1)
        })
        .collect();
    let worst = table
        .iter()
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .map(|(x, _, v)| (x.clone(), *v))
        .expect("nonempty grid");
    let eps = worst.1;
    Ok(EquiPositivityCertificate {
        tail: n,
        eps,
        gamma: 0.5 / params.grid_res as f64,
        grid_res: params.grid_res,
        box_radius: params.box_radius,
        truncation: params.tail_depth,
        table,
        worst,
        lipschitz: params.support_radius.map(|r| TAU * r),
        eps_min: params.eps_min,
        passed: eps > params.eps_min,
        empirical: true,
    })
}

/// Re-evaluate `|ν̂(x + k_x)|` at every row and check it reaches `ε`.
pub fn revalidate_equipositivity(system: &ConvolutionSystem, cert: &EquiPositivityCertificate) -> Result<bool> {
    let tail = MaskProductEvaluator::tail(system, cert.tail, cert.truncation)?;
    Ok(cert
        .table
        .par_iter()
        .all(|(x, k, _)| tail.eval_shifted(k, x).norm() >= cert.eps))
}

/// Rational point `R^{-1} b`.
pub fn digit_point(r: &IMatrix, b: &[i64]) -> Result<QVec> {
    Ok(r.to_q().inverse().ok_or(Error::NotInvertible)?.mul_ivec(b))
}

/// Floating-point view of a witness set, for reports.
pub fn witness_to_f64(e: &WitnessSet) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = e.bounds();
    (lo.iter().map(q_to_f64).collect(), hi.iter().map(q_to_f64).collect())
}
