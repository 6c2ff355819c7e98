//! Exact finite-dimensional exterior algebra.
//!
//! Elements are stored sparsely as `subset → coefficient` maps where a subset of
//! generators is a `u64` bitmask (bit `k` ⇔ generator `k`).  Monomials are always
//! read in ascending generator order, so the product of two monomials picks up
//! the sign of the permutation that sorts the concatenated index list.
//!
//! Coefficients may be real ([`GrassmannElement`]) or complex
//! ([`ComplexGrassmann`]); the complex ring is needed for the Ward-identity
//! sector where the exponent carries an `i`.

mod element;
mod group;
mod matrix;

use std::collections::HashMap;
use std::fmt;
use std::ops::{AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use element::{EvenFn, Multivector, DEFAULT_TOLERANCE, PRUNE_THRESHOLD};
pub use group::{GroupComponent, GroupElement};
pub use matrix::{ElemMatrix, SuperMatrix};

/// Largest number of generators a single algebra may hold (one bit per generator).
pub const MAX_GENERATORS: usize = 64;

/// Real-coefficient Grassmann element.
pub type GrassmannElement = Multivector<f64>;
/// Complex-coefficient Grassmann element.
pub type ComplexGrassmann = Multivector<Complex64>;

/// Ordered, immutable set of odd generators.
#[derive(Clone, PartialEq, Eq)]
pub struct GeneratorSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl GeneratorSet {
    pub fn new<I, S>(names: I) -> Result<Arc<Self>>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > MAX_GENERATORS {
            return Err(Error::InvalidGenerators(format!(
                "{} generators requested, cap is {MAX_GENERATORS}",
                names.len()
            )));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (k, n) in names.iter().enumerate() {
            if index.insert(n.clone(), k).is_some() {
                return Err(Error::InvalidGenerators(format!("duplicate generator `{n}`")));
            }
        }
        Ok(Arc::new(Self { names, index }))
    }

    /// The algebra with no generators (plain numbers).
    pub fn empty() -> Arc<Self> {
        Arc::new(Self { names: Vec::new(), index: HashMap::new() })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, k: usize) -> &str {
        &self.names[k]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    /// Mask with every generator bit set.
    pub fn full_mask(&self) -> u64 {
        if self.names.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.names.len()) - 1
        }
    }
}

impl fmt::Debug for GeneratorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.names).finish()
    }
}

/// Two handles refer to the same algebra if they are the same allocation or
/// list the same generators in the same order.
pub(crate) fn same_algebra(a: &Arc<GeneratorSet>, b: &Arc<GeneratorSet>) -> bool {
    Arc::ptr_eq(a, b) || a.names == b.names
}

/// Coefficient ring of a multivector.
pub trait Coeff:
    Copy
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + AddAssign
    + SubAssign
    + MulAssign
    + Mul<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn is_zero(self) -> bool {
        self.modulus() == 0.0
    }
    /// Taylor coefficients `f^{(k)}(x)/k!` for `k = 0..=order`, or a domain error.
    fn taylor(self, f: EvenFn, order: usize) -> Result<Vec<Self>>;
    fn is_finite(self) -> bool;
}

fn binomial_series(p: f64, order: usize) -> Vec<f64> {
    // binom(p, k) for k = 0..=order
    let mut out = Vec::with_capacity(order + 1);
    let mut c = 1.0;
    for k in 0..=order {
        out.push(c);
        c *= (p - k as f64) / (k as f64 + 1.0);
    }
    out
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn taylor(self, f: EvenFn, order: usize) -> Result<Vec<Self>> {
        let b = self;
        if f == EvenFn::Inverse && b == 0.0 {
            return Err(Error::Domain("Inverse needs a nonzero body".into()));
        }
        if matches!(f, EvenFn::Log | EvenFn::Sqrt) && b <= 0.0 {
            return Err(Error::Domain(format!("{f:?} needs a positive body, got {b}")));
        }
        let mut out = Vec::with_capacity(order + 1);
        match f {
            EvenFn::Exp => {
                let e = b.exp();
                let mut fact = 1.0;
                for k in 0..=order {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    out.push(e / fact);
                }
            }
            EvenFn::Log => {
                out.push(b.ln());
                for k in 1..=order {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    out.push(sign / (k as f64 * b.powi(k as i32)));
                }
            }
            EvenFn::Inverse => {
                for k in 0..=order {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    out.push(sign / b.powi(k as i32 + 1));
                }
            }
            EvenFn::Sqrt => {
                for (k, c) in binomial_series(0.5, order).into_iter().enumerate() {
                    out.push(c * b.powf(0.5 - k as f64));
                }
            }
        }
        Ok(out)
    }
}

impl Coeff for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn taylor(self, f: EvenFn, order: usize) -> Result<Vec<Self>> {
        let b = self;
        // Principal branches; the body only has to avoid the branch point.
        if f != EvenFn::Exp && b.norm() == 0.0 {
            return Err(Error::Domain(format!("{f:?} needs a nonzero body")));
        }
        let mut out = Vec::with_capacity(order + 1);
        match f {
            EvenFn::Exp => {
                let e = b.exp();
                let mut fact = 1.0;
                for k in 0..=order {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    out.push(e / fact);
                }
            }
            EvenFn::Log => {
                out.push(b.ln());
                for k in 1..=order {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    out.push(sign / (b.powi(k as i32) * k as f64));
                }
            }
            EvenFn::Inverse => {
                for k in 0..=order {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    out.push(Complex64::new(sign, 0.0) / b.powi(k as i32 + 1));
                }
            }
            EvenFn::Sqrt => {
                for (k, c) in binomial_series(0.5, order).into_iter().enumerate() {
                    out.push(b.powf(0.5 - k as f64) * c);
                }
            }
        }
        Ok(out)
    }
}

/// Sign of the product of two ascending monomials `m1 · m2` (zero when they overlap).
#[inline]
pub(crate) fn monomial_sign(m1: u64, m2: u64) -> i32 {
    if m1 & m2 != 0 {
        return 0;
    }
    let mut swaps = 0u32;
    let mut rest = m2;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        // generators of m1 sitting above j must hop over it
        swaps += if j == 63 { 0 } else { (m1 >> (j + 1)).count_ones() };
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Sign picked up by moving generator `g` to the front of monomial `mask`.
#[inline]
pub(crate) fn front_sign(mask: u64, g: usize) -> f64 {
    let below = if g == 0 { 0 } else { mask & ((1u64 << g) - 1) };
    if below.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_oversize() {
        assert!(GeneratorSet::new(["a", "a"]).is_err());
        let many: Vec<String> = (0..65).map(|k| format!("g{k}")).collect();
        assert!(GeneratorSet::new(many).is_err());
        let ok: Vec<String> = (0..64).map(|k| format!("g{k}")).collect();
        assert_eq!(GeneratorSet::new(ok).unwrap().full_mask(), u64::MAX);
    }

    #[test]
    fn monomial_signs() {
        // g0 · g1 = +g0g1, g1 · g0 = −g0g1
        assert_eq!(monomial_sign(0b01, 0b10), 1);
        assert_eq!(monomial_sign(0b10, 0b01), -1);
        assert_eq!(monomial_sign(0b01, 0b01), 0);
        // (g1 g2) · g0: g0 hops over two generators
        assert_eq!(monomial_sign(0b110, 0b001), 1);
        // g2 · (g0 g1)
        assert_eq!(monomial_sign(0b100, 0b011), 1);
        // g1 · (g0 g2): one swap
        assert_eq!(monomial_sign(0b010, 0b101), -1);
    }
}
