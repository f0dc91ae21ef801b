//! Convolution systems: a menu of pairs and an eventually periodic word.

use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, QMatrix};
use crate::types::AdmissiblePair;

/// A menu of named pairs together with the word `prefix · cycle^∞` that
/// selects `(R_n, B_n)` for `n = 1, 2, ...`.
///
/// With an empty cycle the system is finite and only depths up to the
/// prefix length are addressable.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionSystem {
    dim: usize,
    menu: Vec<AdmissiblePair>,
    prefix: Vec<usize>,
    cycle: Vec<usize>,
}

impl ConvolutionSystem {
    pub fn new(menu: Vec<AdmissiblePair>, prefix: Vec<usize>, cycle: Vec<usize>) -> Result<Self> {
        let dim = menu
            .first()
            .map(|p| p.dim())
            .ok_or_else(|| Error::Config("menu is empty".into()))?;
        if let Some(p) = menu.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        if let Some(&bad) = prefix.iter().chain(&cycle).find(|&&i| i >= menu.len()) {
            return Err(Error::UnknownPair(format!("#{bad}")));
        }
        Ok(ConvolutionSystem {
            dim,
            menu,
            prefix,
            cycle,
        })
    }

    /// Build from pair names.
    pub fn from_names(menu: Vec<AdmissiblePair>, prefix: &[&str], cycle: &[&str]) -> Result<Self> {
        let lookup = |name: &&str| {
            menu.iter()
                .position(|p| p.name == *name)
                .ok_or_else(|| Error::UnknownPair(name.to_string()))
        };
        let prefix = prefix.iter().map(lookup).collect::<Result<Vec<_>>>()?;
        let cycle = cycle.iter().map(lookup).collect::<Result<Vec<_>>>()?;
        Self::new(menu, prefix, cycle)
    }

    /// The constant word `p p p ...`.
    pub fn constant(pair: AdmissiblePair) -> Self {
        Self::new(vec![pair], vec![], vec![0]).expect("single pair system")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn menu(&self) -> &[AdmissiblePair] {
        &self.menu
    }

    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[usize] {
        &self.cycle
    }

    pub fn is_finite(&self) -> bool {
        self.cycle.is_empty()
    }

    /// Largest addressable depth; `None` when the word is infinite.
    pub fn max_depth(&self) -> Option<usize> {
        self.is_finite().then_some(self.prefix.len())
    }

    pub fn check_depth(&self, n: usize) -> Result<()> {
        match self.max_depth() {
            Some(max) if n > max => Err(Error::DepthOutOfRange {
                requested: n,
                available: max,
            }),
            _ => Ok(()),
        }
    }

    /// Menu index of the letter at level `k >= 1`.
    pub fn index_at(&self, k: usize) -> Result<usize> {
        assert!(k >= 1, "levels are 1-based");
        self.check_depth(k)?;
        if k <= self.prefix.len() {
            Ok(self.prefix[k - 1])
        } else {
            let m = k - 1 - self.prefix.len();
            Ok(self.cycle[m % self.cycle.len()])
        }
    }

    /// The pair `(R_k, B_k)` at level `k >= 1`.
    pub fn pair_at(&self, k: usize) -> Result<&AdmissiblePair> {
        Ok(&self.menu[self.index_at(k)?])
    }

    /// Menu indices that actually occur in the word.
    pub fn used_indices(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self.prefix.iter().chain(&self.cycle).copied().collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    /// The shifted system generating `ν_{>n}` (first `n` letters dropped).
    pub fn shift(&self, n: usize) -> Result<ConvolutionSystem> {
        self.check_depth(n)?;
        let (prefix, cycle) = if n <= self.prefix.len() {
            (self.prefix[n..].to_vec(), self.cycle.clone())
        } else {
            let m = (n - self.prefix.len()) % self.cycle.len();
            let mut cycle = self.cycle.clone();
            cycle.rotate_left(m);
            (Vec::new(), cycle)
        };
        Ok(ConvolutionSystem {
            dim: self.dim,
            menu: self.menu.clone(),
            prefix,
            cycle,
        })
    }

    /// The finite system consisting of the first `n` letters.
    pub fn truncate(&self, n: usize) -> Result<ConvolutionSystem> {
        self.check_depth(n)?;
        let prefix = (1..=n).map(|k| self.index_at(k)).collect::<Result<Vec<_>>>()?;
        Ok(ConvolutionSystem {
            dim: self.dim,
            menu: self.menu.clone(),
            prefix,
            cycle: Vec::new(),
        })
    }

    /// Exact `(R_k ⋯ R_1)^{-1}` for `k = 1..=n`.
    pub fn inverse_products(&self, n: usize) -> Result<Vec<QMatrix>> {
        self.check_depth(n)?;
        let mut acc = QMatrix::identity(self.dim);
        let mut out = Vec::with_capacity(n);
        for k in 1..=n {
            acc = acc.mul(self.pair_at(k)?.r().inverse());
            out.push(acc.clone());
        }
        Ok(out)
    }

    /// Exact `(R_n ⋯ R_1)^{-1}` (identity for `n = 0`).
    pub fn inverse_product(&self, n: usize) -> Result<QMatrix> {
        Ok(self
            .inverse_products(n)?
            .pop()
            .unwrap_or_else(|| QMatrix::identity(self.dim)))
    }

    /// Default truncation depth: 40, or earlier once `‖(R_T⋯R_1)^{-1}‖ < 1e-10`,
    /// capped by the addressable depth.
    pub fn default_truncation(&self) -> usize {
        let cap = self.max_depth().map_or(40, |m| m.min(40));
        let mut acc = QMatrix::identity(self.dim);
        for k in 1..=cap {
            acc = acc.mul(self.pair_at(k).expect("within cap").r().inverse());
            if operator_norm(&acc.to_f64()) < 1e-10 {
                return k;
            }
        }
        cap
    }

    /// Exact products of the cycle: `P = R_{c_L} ⋯ R_{c_1}` in inverse form.
    pub fn cycle_inverse_product(&self) -> Option<QMatrix> {
        if self.cycle.is_empty() {
            return None;
        }
        let mut acc = QMatrix::identity(self.dim);
        for &i in &self.cycle {
            acc = acc.mul(self.menu[i].r().inverse());
        }
        Some(acc)
    }
}

/// The sequence `‖R_1^{-1} ⋯ R_n^{-1}‖` for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub norms: Vec<f64>,
    pub threshold: f64,
    pub below_threshold: bool,
}

/// Operator 2-norms of the exact inverse products, converted to floating
/// point only at the end.
pub fn contraction_norms(
    system: &ConvolutionSystem,
    n_max: usize,
    threshold: f64,
) -> Result<ContractionReport> {
    let norms: Vec<f64> = system
        .inverse_products(n_max)?
        .iter()
        .map(|m| operator_norm(&m.to_f64()))
        .collect();
    let below_threshold = norms.last().is_some_and(|&v| v < threshold);
    Ok(ContractionReport {
        norms,
        threshold,
        below_threshold,
    })
}

/// Exact certificate that `‖(R_n⋯R_1)^{-1}‖ → 0` for an eventually periodic
/// word: some power of the inverse cycle product has squared Frobenius norm
/// below one. Returns the power found, up to `max_power`.
pub fn certify_cycle_contraction(system: &ConvolutionSystem, max_power: usize) -> Option<usize> {
    let p = system.cycle_inverse_product()?;
    let mut acc = p.clone();
    for k in 1..=max_power {
        if acc.frobenius_sq() < BigRational::one() {
            return Some(k);
        }
        acc = acc.mul(&p);
    }
    None
}
