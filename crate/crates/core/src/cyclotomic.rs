//! Exact vanishing test for integer combinations of roots of unity.
//!
//! A sum `Σ c_j ζ_D^j` with `ζ_D = e^{2πi/D}` vanishes iff the polynomial
//! `Σ c_j x^j` is divisible by the cyclotomic polynomial `Φ_D`. Two routes
//! are provided: direct division by `Φ_D`, and a reduction to the squarefree
//! radical `r = rad(D)` using `Φ_D(x) = Φ_r(x^{D/r})`, which splits the sum
//! into `D/r` independent sums over `r`-th roots of unity.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};

/// `Σ c_j ζ_D^j`, stored sparsely with exponents reduced mod `D`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CyclotomicSum {
    modulus: u64,
    terms: BTreeMap<u64, i128>,
}

impl CyclotomicSum {
    pub fn new(modulus: u64) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        CyclotomicSum {
            modulus,
            terms: BTreeMap::new(),
        }
    }

    /// From a dense coefficient vector of length `D`.
    pub fn from_coefficients(coeffs: &[i128]) -> Self {
        let mut s = Self::new(coeffs.len() as u64);
        for (j, &c) in coeffs.iter().enumerate() {
            s.add_term(j as i128, c).expect("dense coefficients fit");
        }
        s
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Add `c ζ_D^j` (any integer `j`).
    pub fn add_term(&mut self, exponent: i128, coeff: i128) -> Result<()> {
        if coeff == 0 {
            return Ok(());
        }
        let j = exponent.rem_euclid(self.modulus as i128) as u64;
        let slot = self.terms.entry(j).or_insert(0);
        *slot = slot
            .checked_add(coeff)
            .ok_or(Error::Overflow("cyclotomic coefficient"))?;
        if *slot == 0 {
            self.terms.remove(&j);
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Vec<i128> {
        let mut v = vec![0; self.modulus as usize];
        for (&j, &c) in &self.terms {
            v[j as usize] = c;
        }
        v
    }

    /// Floating-point value of the sum.
    pub fn value(&self) -> Complex64 {
        let d = self.modulus as f64;
        self.terms
            .iter()
            .map(|(&j, &c)| Complex64::from_polar(c as f64, std::f64::consts::TAU * j as f64 / d))
            .sum()
    }

    /// Exact zero test via the radical reduction.
    pub fn is_zero(&self) -> Result<bool> {
        if self.terms.is_empty() {
            return Ok(true);
        }
        let r = radical(self.modulus);
        let s = self.modulus / r;
        let phi = cyclotomic_poly(r)?;
        let mut groups: BTreeMap<u64, Vec<i128>> = BTreeMap::new();
        for (&j, &c) in &self.terms {
            let g = groups.entry(j % s).or_insert_with(|| vec![0; r as usize]);
            g[(j / s) as usize] += c;
        }
        for poly in groups.into_values() {
            if poly_rem_monic(&poly, &phi)?.iter().any(|&c| c != 0) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Exact zero test by direct division by `Φ_D`.
    pub fn is_zero_by_division(&self) -> Result<bool> {
        let phi = cyclotomic_poly(self.modulus)?;
        Ok(poly_rem_monic(&self.coefficients(), &phi)?
            .iter()
            .all(|&c| c == 0))
    }
}

/// `Σ w_j e^{-2πi θ_j}` for rational weights and phases, scaled by the
/// common denominator of the weights so that the coefficients are integers.
/// The modulus is the least common multiple of the phase denominators.
pub fn phase_sum(terms: &[(BigRational, BigRational)]) -> Result<CyclotomicSum> {
    let wden = terms
        .iter()
        .fold(BigInt::one(), |acc, (w, _)| acc.lcm(w.denom()));
    let pden = terms
        .iter()
        .fold(BigInt::one(), |acc, (_, t)| acc.lcm(t.denom()));
    let modulus = pden
        .to_u64()
        .filter(|&m| m <= 1 << 24)
        .ok_or(Error::Overflow("phase denominator"))?;
    let mut sum = CyclotomicSum::new(modulus);
    for (w, t) in terms {
        let coeff = (w * &wden).to_integer();
        let exp = -(t * &pden).to_integer();
        let exp = exp.mod_floor(&pden);
        sum.add_term(
            exp.to_i128().ok_or(Error::Overflow("phase exponent"))?,
            coeff.to_i128().ok_or(Error::Overflow("phase weight"))?,
        )?;
    }
    Ok(sum)
}

/// Product of the distinct prime factors of `n`.
pub fn radical(mut n: u64) -> u64 {
    let mut r = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            r *= p;
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        r *= n;
    }
    r
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut i = 1;
    while i * i <= n {
        if n % i == 0 {
            out.push(i);
            if i != n / i {
                out.push(n / i);
            }
        }
        i += 1;
    }
    out.sort_unstable();
    out
}

/// Remainder of `p` modulo a monic integer polynomial (coefficients low to high).
pub fn poly_rem_monic(p: &[i128], m: &[i128]) -> Result<Vec<i128>> {
    let deg = m.len() - 1;
    debug_assert_eq!(m[deg], 1);
    let mut r = p.to_vec();
    while r.len() > deg {
        let lead = r.pop().expect("nonempty");
        if lead == 0 {
            continue;
        }
        let shift = r.len() - deg;
        for (i, &mi) in m[..deg].iter().enumerate() {
            let t = lead
                .checked_mul(mi)
                .ok_or(Error::Overflow("cyclotomic reduction"))?;
            r[shift + i] = r[shift + i]
                .checked_sub(t)
                .ok_or(Error::Overflow("cyclotomic reduction"))?;
        }
    }
    Ok(r)
}

/// Exact quotient of `p` by a monic divisor.
fn poly_div_exact(p: &[i128], m: &[i128]) -> Result<Vec<i128>> {
    let deg = m.len() - 1;
    let mut r = p.to_vec();
    let qlen = p.len() - deg;
    let mut q = vec![0i128; qlen];
    for k in (0..qlen).rev() {
        let lead = r[k + deg];
        q[k] = lead;
        if lead == 0 {
            continue;
        }
        for (i, &mi) in m.iter().enumerate() {
            let t = lead
                .checked_mul(mi)
                .ok_or(Error::Overflow("cyclotomic division"))?;
            r[k + i] = r[k + i]
                .checked_sub(t)
                .ok_or(Error::Overflow("cyclotomic division"))?;
        }
    }
    debug_assert!(r.iter().all(|&c| c == 0), "division was not exact");
    Ok(q)
}

fn cache() -> &'static Mutex<HashMap<u64, Arc<Vec<i128>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Vec<i128>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `Φ_n` via `(x^n - 1) / Π_{e | n, e < n} Φ_e`, memoized.
pub fn cyclotomic_poly(n: u64) -> Result<Arc<Vec<i128>>> {
    assert!(n >= 1, "cyclotomic index must be positive");
    if let Some(p) = cache().lock().expect("cache lock").get(&n) {
        return Ok(p.clone());
    }
    let mut p = vec![0i128; n as usize + 1];
    p[0] = -1;
    p[n as usize] = 1;
    for e in divisors(n) {
        if e < n {
            p = poly_div_exact(&p, &cyclotomic_poly(e)?)?;
        }
    }
    let p = Arc::new(p);
    cache().lock().expect("cache lock").insert(n, p.clone());
    Ok(p)
}
