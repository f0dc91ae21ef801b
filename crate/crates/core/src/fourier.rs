//! Masks, truncated infinite products `μ̂_n`, tail transforms `ν̂_{>n}` and
//! the completeness function `Q(ξ) = Σ_λ |μ̂(λ+ξ)|²`.
//!
//! The points `(R_k⋯R_1)^{-1} b` are computed exactly and only converted to
//! floating point for the final exponentials. Integer frequency shifts are
//! reduced modulo one in exact arithmetic before being combined with the
//! real part of the argument.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, q_frac_part, q_to_f64, qvec_dot_ivec, qvec_to_f64, IVec, QMatrix, QVec};
use crate::measure::DiscreteMeasure;
use crate::system::ConvolutionSystem;
use crate::types::DigitSet;

/// Anything whose Fourier transform can be evaluated pointwise.
pub trait FourierTransform: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, xi: &[f64]) -> Complex64;
}

impl FourierTransform for DiscreteMeasure {
    fn dim(&self) -> usize {
        DiscreteMeasure::dim(self)
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        self.fourier(xi)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `m_B(ξ) = Σ_b p_b e^{-2πi b·ξ}` (uniform weights unless given).
pub fn mask_eval(b: &DigitSet, xi: &[f64]) -> Complex64 {
    b.digits()
        .iter()
        .zip(b.probabilities_f64())
        .map(|(d, p)| {
            let t: f64 = d.iter().zip(xi).map(|(&x, y)| x as f64 * y).sum();
            Complex64::from_polar(p, -TAU * t)
        })
        .sum()
}

#[derive(Debug, Clone)]
struct Level {
    exact: Vec<QVec>,
    points: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

/// `μ̂_T(ξ) = Π_{k≤T} m_{B_k}((R_k⋯R_1)^{-T} ξ)` for a fixed depth `T`.
#[derive(Debug, Clone)]
pub struct MaskProductEvaluator {
    dim: usize,
    levels: Vec<Level>,
    inverse_products: Vec<QMatrix>,
}

impl MaskProductEvaluator {
    pub fn new(system: &ConvolutionSystem, depth: usize) -> Result<Self> {
        let inverse_products = system.inverse_products(depth)?;
        let mut levels = Vec::with_capacity(depth);
        for (k, m) in inverse_products.iter().enumerate() {
            let b = system.pair_at(k + 1)?.b();
            let exact: Vec<QVec> = b.digits().iter().map(|d| m.mul_ivec(d)).collect();
            let points = exact.iter().map(|v| qvec_to_f64(v)).collect();
            levels.push(Level {
                exact,
                points,
                probs: b.probabilities_f64(),
            });
        }
        Ok(MaskProductEvaluator {
            dim: system.dim(),
            levels,
            inverse_products,
        })
    }

    /// Evaluator of `ν̂_{>n}` truncated after `t` further levels.
    pub fn tail(system: &ConvolutionSystem, n: usize, t: usize) -> Result<Self> {
        system.check_depth(n + t)?;
        Self::new(&system.shift(n)?, t)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Exact `(R_k⋯R_1)^{-1}` for `1 <= k <= depth`.
    pub fn inverse_product(&self, k: usize) -> &QMatrix {
        &self.inverse_products[k - 1]
    }

    /// `‖(R_T⋯R_1)^{-1}‖` at the full depth (1 at depth 0).
    pub fn tail_norm(&self) -> f64 {
        self.inverse_products
            .last()
            .map_or(1.0, |m| operator_norm(&m.to_f64()))
    }

    /// Partial product over the first `n` levels.
    pub fn eval_depth(&self, n: usize, xi: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for level in &self.levels[..n] {
            let m: Complex64 = level
                .points
                .iter()
                .zip(&level.probs)
                .map(|(y, &p)| Complex64::from_polar(p, -TAU * dot(y, xi)))
                .sum();
            acc *= m;
        }
        acc
    }

    /// Exact phases `((R_k⋯R_1)^{-1} b)·λ mod 1` of an integer shift.
    pub fn shift_phases(&self, lambda: &[i64]) -> Vec<Vec<f64>> {
        self.levels
            .iter()
            .map(|level| {
                level
                    .exact
                    .iter()
                    .map(|y| q_to_f64(&q_frac_part(&qvec_dot_ivec(y, lambda))))
                    .collect()
            })
            .collect()
    }

    /// `μ̂_T(λ + x)` from precomputed phases of `λ`.
    pub fn eval_with_phases(&self, phases: &[Vec<f64>], x: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (level, ph) in self.levels.iter().zip(phases) {
            let m: Complex64 = level
                .points
                .iter()
                .zip(&level.probs)
                .zip(ph)
                .map(|((y, &p), &t)| Complex64::from_polar(p, -TAU * (t + dot(y, x))))
                .sum();
            acc *= m;
        }
        acc
    }

    /// `μ̂_T(λ + x)` for integer `λ`.
    pub fn eval_shifted(&self, lambda: &[i64], x: &[f64]) -> Complex64 {
        self.eval_with_phases(&self.shift_phases(lambda), x)
    }
}

impl FourierTransform for MaskProductEvaluator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        self.eval_depth(self.depth(), xi)
    }
}

/// `μ̂_n(ξ)`.
pub fn mu_n_hat(system: &ConvolutionSystem, n: usize, xi: &[f64]) -> Result<Complex64> {
    Ok(MaskProductEvaluator::new(system, n)?.eval(xi))
}

/// `ν̂_{>n}(ξ)` truncated to the levels `n+1..=n+t`.
pub fn nu_gt_n_hat(system: &ConvolutionSystem, n: usize, t: usize, xi: &[f64]) -> Result<Complex64> {
    Ok(MaskProductEvaluator::tail(system, n, t)?.eval(xi))
}

/// Guaranteed error of the depth-`n` truncation when the tail measure is
/// known to live in a cube.
///
/// With `spt ν_{>n} ⊆ C` the tail `μ_{>n}` lives in `(R_n⋯R_1)^{-1} C`, so
/// `|μ̂(ξ) - μ̂_n(ξ)| <= |1 - μ̂_{>n}(ξ)| <= 2π r |ξ| ‖(R_n⋯R_1)^{-1}‖` where
/// `r` bounds the norms of points of `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationBound {
    pub depth: usize,
    pub support_radius: f64,
    pub inverse_norm: f64,
    pub valid: bool,
}

impl TruncationBound {
    pub fn heuristic(depth: usize, inverse_norm: f64) -> Self {
        TruncationBound {
            depth,
            support_radius: 0.0,
            inverse_norm,
            valid: false,
        }
    }

    pub fn certified(depth: usize, inverse_norm: f64, support_radius: f64) -> Self {
        assert!(support_radius >= 0.0, "support radius must be nonnegative");
        TruncationBound {
            depth,
            support_radius,
            inverse_norm,
            valid: true,
        }
    }

    /// Bound on `|μ̂(ξ) - μ̂_n(ξ)|`, `None` unless certified.
    pub fn transform_error(&self, xi: &[f64]) -> Option<f64> {
        self.valid.then(|| {
            let norm = dot(xi, xi).sqrt();
            (TAU * self.support_radius * norm * self.inverse_norm).min(2.0)
        })
    }

    /// Bound on `|Q(x) - Q_n(x)|` over the finite set `Λ`.
    pub fn q_error(&self, lambda: &[IVec], x: &[f64]) -> Option<f64> {
        if !self.valid {
            return None;
        }
        let mut total = 0.0;
        for l in lambda {
            let xi: Vec<f64> = l.iter().zip(x).map(|(&a, b)| a as f64 + b).collect();
            total += 2.0 * self.transform_error(&xi)?;
        }
        Some(total)
    }

    pub fn label(&self) -> &'static str {
        if self.valid {
            "certified"
        } else {
            "heuristic depth"
        }
    }
}

/// `Q(x) = Σ_{λ∈Λ} |μ̂_T(λ+x)|²` for a fixed finite `Λ ⊂ ℤ^d`, with the
/// exact shift phases of every `λ` precomputed.
#[derive(Debug, Clone)]
pub struct QFunction<'a> {
    evaluator: &'a MaskProductEvaluator,
    lambda: Vec<IVec>,
    phases: Vec<Vec<Vec<f64>>>,
}

impl<'a> QFunction<'a> {
    pub fn new(evaluator: &'a MaskProductEvaluator, lambda: &[IVec]) -> Self {
        let phases = lambda
            .par_iter()
            .map(|l| evaluator.shift_phases(l))
            .collect();
        QFunction {
            evaluator,
            lambda: lambda.to_vec(),
            phases,
        }
    }

    pub fn lambda(&self) -> &[IVec] {
        &self.lambda
    }

    /// The terms `|μ̂_T(λ+x)|²` in the order of `Λ`.
    pub fn terms(&self, x: &[f64]) -> Vec<f64> {
        self.phases
            .iter()
            .map(|ph| self.evaluator.eval_with_phases(ph, x).norm_sqr())
            .collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms(x).iter().sum()
    }

    /// Partial sums over the first `sizes[i]` elements, for nested levels
    /// stored as prefixes of `Λ`.
    pub fn nested_values(&self, x: &[f64], sizes: &[usize]) -> Vec<f64> {
        let terms = self.terms(x);
        sizes.iter().map(|&s| terms[..s].iter().sum()).collect()
    }
}

/// `Q(ξ)` over `Λ` with the evaluator's truncation.
pub fn q_function(evaluator: &MaskProductEvaluator, lambda: &[IVec], xi: &[f64]) -> f64 {
    QFunction::new(evaluator, lambda).value(xi)
}

/// Uniform half-open grid: along axis `i`, `res[i]` points
/// `lo[i] + j (hi[i] - lo[i]) / res[i]`. Points are ordered with the first
/// coordinate varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub res: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, res: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != res.len() || lo.is_empty() {
            return Err(Error::InvalidParameter("grid bounds and resolution must share the dimension".into()));
        }
        if res.iter().any(|&r| r == 0) {
            return Err(Error::InvalidParameter("grid resolution must be positive".into()));
        }
        Ok(GridSpec { lo, hi, res })
    }

    /// `[lo, hi)^d` with `res` points per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, res: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], vec![res; dim])
    }

    /// The unit cell `[0,1)^d`.
    pub fn unit(dim: usize, res: usize) -> Result<Self> {
        Self::cube(dim, 0.0, 1.0, res)
    }

    /// The centered cell `[-1/2, 1/2)^d`.
    pub fn centered(dim: usize, res: usize) -> Result<Self> {
        Self::cube(dim, -0.5, 0.5, res)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.res.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| (self.hi[i] - self.lo[i]) / self.res[i] as f64)
            .collect()
    }

    pub fn point(&self, mut index: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let j = index % self.res[i];
                index /= self.res[i];
                self.lo[i] + j as f64 * (self.hi[i] - self.lo[i]) / self.res[i] as f64
            })
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Which quantity a grid evaluation produces.
#[derive(Debug, Clone, PartialEq)]
pub enum Quantity {
    MuHat2,
    Q(Vec<IVec>),
}

/// Values of the quantity at every grid point, in grid order. Evaluation
/// is parallel; the output does not depend on the thread count.
pub fn grid_eval(evaluator: &MaskProductEvaluator, grid: &GridSpec, quantity: &Quantity) -> Result<Vec<f64>> {
    if grid.dim() != evaluator.dim {
        return Err(Error::DimensionMismatch {
            expected: evaluator.dim,
            found: grid.dim(),
        });
    }
    let indices: Vec<usize> = (0..grid.len()).collect();
    Ok(match quantity {
        Quantity::MuHat2 => indices
            .par_iter()
            .map(|&i| evaluator.eval(&grid.point(i)).norm_sqr())
            .collect(),
        Quantity::Q(lambda) => {
            let q = QFunction::new(evaluator, lambda);
            indices.par_iter().map(|&i| q.value(&grid.point(i))).collect()
        }
    })
}

/// Row-major raster; row 0 is the lowest second coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl Raster {
    pub fn from_grid(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        let (nx, ny) = match grid.res.as_slice() {
            [nx] => (*nx, 1),
            [nx, ny] => (*nx, *ny),
            _ => return Err(Error::RasterDimension(grid.dim())),
        };
        if values.len() != nx * ny {
            return Err(Error::SizeMismatch(format!(
                "{} values for a {nx}x{ny} raster",
                values.len()
            )));
        }
        Ok(Raster { nx, ny, values })
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }
}
