use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{front_sign, monomial_sign, same_algebra, Coeff, GeneratorSet};
use crate::error::{Error, Result};

/// Per-coefficient absolute tolerance used by `==`.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
/// Coefficients below this fraction of the operand scale are treated as
/// round-off and dropped during canonicalisation.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Algebras up to this many generators multiply through a dense accumulator.
const DENSE_LIMIT: usize = 12;

/// Analytic functions that may be applied to even elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvenFn {
    Exp,
    Log,
    Inverse,
    Sqrt,
}

impl std::str::FromStr for EvenFn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(Self::Exp),
            "log" => Ok(Self::Log),
            "inverse" => Ok(Self::Inverse),
            "sqrt" => Ok(Self::Sqrt),
            other => Err(Error::Config(format!("unknown even function `{other}`"))),
        }
    }
}

/// Element of the exterior algebra over a [`GeneratorSet`].
///
/// Terms are kept sorted by bitmask with no stored zeros.
#[derive(Clone)]
pub struct Multivector<T> {
    algebra: Arc<GeneratorSet>,
    terms: Vec<(u64, T)>,
}

fn max_modulus<T: Coeff>(terms: &[(u64, T)]) -> f64 {
    terms.iter().map(|(_, c)| c.modulus()).fold(0.0, f64::max)
}

/// Drop round-off relative to `scale` and exact zeros.
fn prune<T: Coeff>(terms: &mut Vec<(u64, T)>, scale: f64) {
    let cut = PRUNE_THRESHOLD * scale;
    terms.retain(|(_, c)| {
        let m = c.modulus();
        m != 0.0 && (m > cut || m.is_nan())
    });
}

impl<T: Coeff> Multivector<T> {
    pub fn zero(algebra: &Arc<GeneratorSet>) -> Self {
        Self { algebra: algebra.clone(), terms: Vec::new() }
    }

    pub fn scalar(algebra: &Arc<GeneratorSet>, c: T) -> Self {
        let terms = if c.is_zero() { Vec::new() } else { vec![(0, c)] };
        Self { algebra: algebra.clone(), terms }
    }

    pub fn one(algebra: &Arc<GeneratorSet>) -> Self {
        Self::scalar(algebra, T::one())
    }

    /// The generator with index `k`.
    pub fn generator(algebra: &Arc<GeneratorSet>, k: usize) -> Result<Self> {
        if k >= algebra.len() {
            return Err(Error::UnknownGenerator(format!("#{k}")));
        }
        Ok(Self { algebra: algebra.clone(), terms: vec![(1u64 << k, T::one())] })
    }

    pub fn generator_named(algebra: &Arc<GeneratorSet>, name: &str) -> Result<Self> {
        Self::generator(algebra, algebra.index_of(name)?)
    }

    /// Build from `(mask, coeff)` pairs; duplicate masks are summed.
    pub fn from_terms<I: IntoIterator<Item = (u64, T)>>(
        algebra: &Arc<GeneratorSet>,
        terms: I,
    ) -> Result<Self> {
        let full = algebra.full_mask();
        let mut v: Vec<(u64, T)> = Vec::new();
        for (m, c) in terms {
            if m & !full != 0 {
                return Err(Error::UnknownGenerator(format!("mask {m:#b} outside algebra")));
            }
            v.push((m, c));
        }
        Ok(Self::from_unsorted(algebra.clone(), v, 0.0))
    }

    /// Monomial `c · g_{k1} g_{k2} …` with the indices in the order given.
    pub fn monomial(algebra: &Arc<GeneratorSet>, indices: &[usize], c: T) -> Result<Self> {
        let mut out = Self::scalar(algebra, c);
        for &k in indices {
            out = out.mul_checked(&Self::generator(algebra, k)?)?;
        }
        Ok(out)
    }

    fn from_unsorted(algebra: Arc<GeneratorSet>, mut v: Vec<(u64, T)>, scale: f64) -> Self {
        v.sort_unstable_by_key(|(m, _)| *m);
        let mut merged: Vec<(u64, T)> = Vec::with_capacity(v.len());
        for (m, c) in v {
            match merged.last_mut() {
                Some((lm, lc)) if *lm == m => *lc += c,
                _ => merged.push((m, c)),
            }
        }
        prune(&mut merged, scale);
        Self { algebra, terms: merged }
    }

    pub fn algebra(&self) -> &Arc<GeneratorSet> {
        &self.algebra
    }

    pub fn terms(&self) -> &[(u64, T)] {
        &self.terms
    }

    pub fn coeff(&self, mask: u64) -> T {
        match self.terms.binary_search_by_key(&mask, |(m, _)| *m) {
            Ok(k) => self.terms[k].1,
            Err(_) => T::zero(),
        }
    }

    /// Coefficient of the monomial written with the given generator order
    /// (accounts for the reordering sign).
    pub fn coeff_of(&self, indices: &[usize]) -> T {
        let mut mask = 0u64;
        let mut sign = 1i32;
        for &k in indices {
            let bit = 1u64 << k;
            let s = monomial_sign(mask, bit);
            if s == 0 {
                return T::zero();
            }
            sign *= s;
            mask |= bit;
        }
        let c = self.coeff(mask);
        if sign < 0 {
            -c
        } else {
            c
        }
    }

    pub fn body(&self) -> T {
        self.coeff(0)
    }

    pub fn soul(&self) -> Self {
        Self {
            algebra: self.algebra.clone(),
            terms: self.terms.iter().filter(|(m, _)| *m != 0).copied().collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        max_modulus(&self.terms)
    }

    pub fn is_even(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.count_ones() % 2 == 0)
    }

    pub fn is_odd(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.count_ones() % 2 == 1)
    }

    /// Keep only the monomials of the given degree.
    pub fn grade(&self, k: u32) -> Self {
        Self {
            algebra: self.algebra.clone(),
            terms: self.terms.iter().filter(|(m, _)| m.count_ones() == k).copied().collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.is_finite())
    }

    fn check_algebra(&self, other: &Self) -> Result<()> {
        if same_algebra(&self.algebra, &other.algebra) {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch)
        }
    }

    fn merge(&self, other: &Self, sign: T) -> Self {
        let scale = self.max_abs().max(other.max_abs());
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.terms, &other.terms);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push((b[j].0, sign * b[j].1));
                j += 1;
            } else {
                let mut c = a[i].1;
                c += sign * b[j].1;
                out.push((a[i].0, c));
                i += 1;
                j += 1;
            }
        }
        prune(&mut out, scale);
        Self { algebra: self.algebra.clone(), terms: out }
    }

    pub fn add_checked(&self, other: &Self) -> Result<Self> {
        self.check_algebra(other)?;
        Ok(self.merge(other, T::one()))
    }

    pub fn sub_checked(&self, other: &Self) -> Result<Self> {
        self.check_algebra(other)?;
        Ok(self.merge(other, -T::one()))
    }

    pub fn mul_checked(&self, other: &Self) -> Result<Self> {
        self.check_algebra(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        if self.terms.is_empty() || other.terms.is_empty() {
            return Self::zero(&self.algebra);
        }
        let scale = self.max_abs() * other.max_abs();
        // Fast path: scalar factor.
        if self.terms.len() == 1 && self.terms[0].0 == 0 {
            let c = self.terms[0].1;
            let mut t: Vec<_> = other.terms.iter().map(|&(m, x)| (m, c * x)).collect();
            prune(&mut t, scale);
            return Self { algebra: self.algebra.clone(), terms: t };
        }
        if other.terms.len() == 1 && other.terms[0].0 == 0 {
            let c = other.terms[0].1;
            let mut t: Vec<_> = self.terms.iter().map(|&(m, x)| (m, x * c)).collect();
            prune(&mut t, scale);
            return Self { algebra: self.algebra.clone(), terms: t };
        }
        let n = self.algebra.len();
        if n <= DENSE_LIMIT {
            let mut acc = vec![T::zero(); 1usize << n];
            let mut touched = vec![false; 1usize << n];
            for &(m1, c1) in &self.terms {
                for &(m2, c2) in &other.terms {
                    let s = monomial_sign(m1, m2);
                    if s == 0 {
                        continue;
                    }
                    let m = (m1 | m2) as usize;
                    let p = c1 * c2;
                    if s > 0 {
                        acc[m] += p;
                    } else {
                        acc[m] -= p;
                    }
                    touched[m] = true;
                }
            }
            let mut t = Vec::new();
            for (m, c) in acc.into_iter().enumerate() {
                if touched[m] {
                    t.push((m as u64, c));
                }
            }
            prune(&mut t, scale);
            Self { algebra: self.algebra.clone(), terms: t }
        } else {
            let mut v = Vec::with_capacity(self.terms.len() * other.terms.len());
            for &(m1, c1) in &self.terms {
                for &(m2, c2) in &other.terms {
                    let s = monomial_sign(m1, m2);
                    if s == 0 {
                        continue;
                    }
                    let p = c1 * c2;
                    v.push((m1 | m2, if s > 0 { p } else { -p }));
                }
            }
            Self::from_unsorted(self.algebra.clone(), v, scale)
        }
    }

    pub fn scale(&self, c: T) -> Self {
        if c.is_zero() {
            return Self::zero(&self.algebra);
        }
        Self {
            algebra: self.algebra.clone(),
            terms: self.terms.iter().map(|&(m, x)| (m, x * c)).collect(),
        }
    }

    pub fn add_scalar(&self, c: T) -> Self {
        self.merge(&Self::scalar(&self.algebra, c), T::one())
    }

    /// Integer power by repeated squaring.
    pub fn powi(&self, k: u32) -> Self {
        let mut out = Self::one(&self.algebra);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        out
    }

    /// `f(x)` for an even `x`: `f(body)` plus the terminating Taylor series in the soul.
    pub fn apply(&self, f: EvenFn) -> Result<Self> {
        if !self.is_even() {
            return Err(Error::Parity(format!("{f:?} is only defined on even elements")));
        }
        let soul = self.soul();
        // Every even soul monomial has degree ≥ 2, so soul^k = 0 once 2k > n.
        let order = self.algebra.len() / 2;
        let coeffs = self.body().taylor(f, order)?;
        let mut out = Self::scalar(&self.algebra, coeffs[0]);
        let mut power = Self::one(&self.algebra);
        for c in coeffs.iter().skip(1) {
            power = power.mul_unchecked(&soul);
            if power.is_zero() {
                break;
            }
            out = out.merge(&power.scale(*c), T::one());
        }
        Ok(out)
    }

    pub fn exp(&self) -> Result<Self> {
        self.apply(EvenFn::Exp)
    }

    pub fn ln(&self) -> Result<Self> {
        self.apply(EvenFn::Log)
    }

    pub fn inverse(&self) -> Result<Self> {
        self.apply(EvenFn::Inverse)
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.apply(EvenFn::Sqrt)
    }

    /// Left Berezin derivative with respect to generator `g`.
    pub fn berezin(&self, g: usize) -> Result<Self> {
        if g >= self.algebra.len() {
            return Err(Error::UnknownGenerator(format!("#{g}")));
        }
        let bit = 1u64 << g;
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m & bit != 0)
            .map(|&(m, c)| {
                let s = front_sign(m, g);
                (m & !bit, if s > 0.0 { c } else { -c })
            })
            .collect();
        // removing a fixed bit preserves the ordering of the remaining masks
        Ok(Self { algebra: self.algebra.clone(), terms })
    }

    pub fn berezin_named(&self, name: &str) -> Result<Self> {
        self.berezin(self.algebra.index_of(name)?)
    }

    /// Apply `∂_{g_k}` for `k` in `order`, first entry first.
    pub fn berezin_seq(&self, order: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        for &g in order {
            out = out.berezin(g)?;
        }
        Ok(out)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if !same_algebra(&self.algebra, &other.algebra) {
            return false;
        }
        let diff = self.merge(other, -T::one());
        diff.terms.iter().all(|(_, c)| c.modulus() <= tol)
    }

    /// Largest coefficient modulus of `self − other`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub_checked(other)?.max_abs())
    }

    pub fn map<U: Coeff>(&self, f: impl Fn(T) -> U) -> Multivector<U> {
        let mut terms: Vec<(u64, U)> = self.terms.iter().map(|&(m, c)| (m, f(c))).collect();
        prune(&mut terms, 0.0);
        Multivector { algebra: self.algebra.clone(), terms }
    }

    /// Re-express over another generator set that contains every generator of
    /// this one (matched by name, any order).
    pub fn embed(&self, target: &Arc<GeneratorSet>) -> Result<Self> {
        let map: Vec<usize> = self
            .algebra
            .names()
            .iter()
            .map(|n| target.index_of(n))
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(self.terms.len());
        for &(m, c) in &self.terms {
            let mut mask = 0u64;
            let mut sign = 1i32;
            let mut rest = m;
            while rest != 0 {
                let k = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let bit = 1u64 << map[k];
                sign *= monomial_sign(mask, bit);
                mask |= bit;
            }
            out.push((mask, if sign > 0 { c } else { -c }));
        }
        Ok(Self::from_unsorted(target.clone(), out, 0.0))
    }

    /// Names of the generators in `mask`, ascending.
    pub fn subset_names(&self, mask: u64) -> Vec<String> {
        subset_indices(mask).into_iter().map(|k| self.algebra.name(k).to_string()).collect()
    }
}

/// Ascending generator indices of a bitmask.
pub(crate) fn subset_indices(mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut rest = mask;
    while rest != 0 {
        out.push(rest.trailing_zeros() as usize);
        rest &= rest - 1;
    }
    out
}

impl Multivector<f64> {
    pub fn to_complex(&self) -> Multivector<Complex64> {
        self.map(|c| Complex64::new(c, 0.0))
    }
}

impl Multivector<Complex64> {
    pub fn re(&self) -> Multivector<f64> {
        self.map(|c| c.re)
    }

    pub fn im(&self) -> Multivector<f64> {
        self.map(|c| c.im)
    }
}

impl<T: Coeff> PartialEq for Multivector<T> {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other, DEFAULT_TOLERANCE)
    }
}

impl<T: Coeff + fmt::Display> fmt::Display for Multivector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, &(m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for name in self.subset_names(m) {
                write!(f, "·{name}")?;
            }
        }
        Ok(())
    }
}

impl<T: Coeff> fmt::Debug for Multivector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_map();
        for &(m, c) in &self.terms {
            list.entry(&self.subset_names(m).join(""), &c);
        }
        list.finish()
    }
}

// Operator sugar. Mixing algebras through an operator is a programming error and
// panics; use the `*_checked` methods for fallible arithmetic.

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<T: Coeff> $tr<&Multivector<T>> for &Multivector<T> {
            type Output = Multivector<T>;
            fn $method(self, rhs: &Multivector<T>) -> Multivector<T> {
                self.$checked(rhs).expect("operands over different generator sets")
            }
        }
        impl<T: Coeff> $tr<Multivector<T>> for Multivector<T> {
            type Output = Multivector<T>;
            fn $method(self, rhs: Multivector<T>) -> Multivector<T> {
                (&self).$method(&rhs)
            }
        }
        impl<T: Coeff> $tr<&Multivector<T>> for Multivector<T> {
            type Output = Multivector<T>;
            fn $method(self, rhs: &Multivector<T>) -> Multivector<T> {
                (&self).$method(rhs)
            }
        }
        impl<T: Coeff> $tr<Multivector<T>> for &Multivector<T> {
            type Output = Multivector<T>;
            fn $method(self, rhs: Multivector<T>) -> Multivector<T> {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, add_checked);
binop!(Sub, sub, sub_checked);
binop!(Mul, mul, mul_checked);

impl<T: Coeff> Mul<T> for &Multivector<T> {
    type Output = Multivector<T>;
    fn mul(self, rhs: T) -> Multivector<T> {
        self.scale(rhs)
    }
}

impl<T: Coeff> Mul<T> for Multivector<T> {
    type Output = Multivector<T>;
    fn mul(self, rhs: T) -> Multivector<T> {
        self.scale(rhs)
    }
}

impl<T: Coeff> Add<T> for &Multivector<T> {
    type Output = Multivector<T>;
    fn add(self, rhs: T) -> Multivector<T> {
        self.add_scalar(rhs)
    }
}

impl<T: Coeff> Add<T> for Multivector<T> {
    type Output = Multivector<T>;
    fn add(self, rhs: T) -> Multivector<T> {
        self.add_scalar(rhs)
    }
}

impl<T: Coeff> Neg for &Multivector<T> {
    type Output = Multivector<T>;
    fn neg(self) -> Multivector<T> {
        self.scale(-T::one())
    }
}

impl<T: Coeff> Neg for Multivector<T> {
    type Output = Multivector<T>;
    fn neg(self) -> Multivector<T> {
        -&self
    }
}

impl<T: Coeff> AddAssign<&Multivector<T>> for Multivector<T> {
    fn add_assign(&mut self, rhs: &Multivector<T>) {
        *self = &*self + rhs;
    }
}

impl<T: Coeff> SubAssign<&Multivector<T>> for Multivector<T> {
    fn sub_assign(&mut self, rhs: &Multivector<T>) {
        *self = &*self - rhs;
    }
}

// --- JSON -----------------------------------------------------------------

/// Wire format of a Grassmann element.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementJson {
    pub generators: Vec<String>,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermJson {
    pub subset: Vec<usize>,
    pub coeff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff_im: Option<f64>,
}

/// Conversion of coefficients to and from the wire format.
pub trait JsonCoeff: Coeff {
    fn to_parts(self) -> (f64, Option<f64>);
    fn from_parts(re: f64, im: Option<f64>) -> Result<Self>;
}

impl JsonCoeff for f64 {
    fn to_parts(self) -> (f64, Option<f64>) {
        (self, None)
    }
    fn from_parts(re: f64, im: Option<f64>) -> Result<Self> {
        match im {
            Some(x) if x != 0.0 => Err(Error::Domain("complex coefficient in a real element".into())),
            _ => Ok(re),
        }
    }
}

impl JsonCoeff for Complex64 {
    fn to_parts(self) -> (f64, Option<f64>) {
        (self.re, Some(self.im))
    }
    fn from_parts(re: f64, im: Option<f64>) -> Result<Self> {
        Ok(Complex64::new(re, im.unwrap_or(0.0)))
    }
}

impl<T: JsonCoeff> Multivector<T> {
    pub fn to_json(&self) -> ElementJson {
        ElementJson {
            generators: self.algebra.names().to_vec(),
            terms: self
                .terms
                .iter()
                .map(|&(m, c)| {
                    let (coeff, coeff_im) = c.to_parts();
                    TermJson { subset: subset_indices(m), coeff, coeff_im }
                })
                .collect(),
        }
    }

    pub fn from_json(json: &ElementJson) -> Result<Self> {
        let algebra = GeneratorSet::new(json.generators.iter().cloned())?;
        Self::from_json_in(json, &algebra)
    }

    /// Parse into an existing algebra (generator lists must agree).
    pub fn from_json_in(json: &ElementJson, algebra: &Arc<GeneratorSet>) -> Result<Self> {
        if json.generators != algebra.names() {
            return Err(Error::AlgebraMismatch);
        }
        let mut terms = Vec::with_capacity(json.terms.len());
        for t in &json.terms {
            let mut mask = 0u64;
            for &k in &t.subset {
                if k >= algebra.len() {
                    return Err(Error::UnknownGenerator(format!("#{k}")));
                }
                if mask & (1 << k) != 0 {
                    return Err(Error::Domain(format!("repeated generator #{k} in subset")));
                }
                mask |= 1 << k;
            }
            // subsets are read in the order listed
            let c = T::from_parts(t.coeff, t.coeff_im)?;
            terms.extend(Self::monomial(algebra, &t.subset, c)?.terms);
        }
        Self::from_terms(algebra, terms)
    }
}

impl<T: JsonCoeff> Serialize for Multivector<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de, T: JsonCoeff> Deserialize<'de> for Multivector<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = ElementJson::deserialize(d)?;
        Self::from_json(&json).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::GrassmannElement;

    fn alg(n: usize) -> Arc<GeneratorSet> {
        GeneratorSet::new((0..n).map(|k| format!("g{k}"))).unwrap()
    }

    #[test]
    fn anticommutation_and_nilpotency() {
        let a = alg(2);
        let p1 = GrassmannElement::generator(&a, 0).unwrap();
        let p2 = GrassmannElement::generator(&a, 1).unwrap();
        assert_eq!((&p1 * &p2).coeff(0b11), 1.0);
        assert_eq!((&p2 * &p1).coeff(0b11), -1.0);
        assert!((&p1 * &p1).is_zero());
    }

    #[test]
    fn nilpotent_cross_term_cancels() {
        let a = GeneratorSet::new(["psibar1", "psi1"]).unwrap();
        let pb = GrassmannElement::generator(&a, 0).unwrap();
        let p = GrassmannElement::generator(&a, 1).unwrap();
        let n = &pb * &p;
        let x = &n + 1.0;
        let y = (-&n) + 1.0;
        assert_eq!(&x * &y, GrassmannElement::one(&a));
    }

    #[test]
    fn even_functions() {
        let a = GeneratorSet::new(["psibar1", "psi1"]).unwrap();
        let n = GrassmannElement::monomial(&a, &[0, 1], 1.0).unwrap();
        assert_eq!(n.exp().unwrap(), &n + 1.0);
        let x = &n + 2.0;
        let inv = x.inverse().unwrap();
        assert_eq!(inv.body(), 0.5);
        assert_eq!(inv.coeff(0b11), -0.25);
        assert_eq!(&inv * &x, GrassmannElement::one(&a));
        assert_eq!(GrassmannElement::one(&a).sqrt().unwrap(), GrassmannElement::one(&a));
        let r = x.sqrt().unwrap();
        assert_eq!(&r * &r, x);
        assert_eq!(x.ln().unwrap().exp().unwrap(), x);
    }

    #[test]
    fn domain_and_parity_errors() {
        let a = alg(2);
        let g = GrassmannElement::generator(&a, 0).unwrap();
        assert!(matches!(g.exp(), Err(Error::Parity(_))));
        let neg = GrassmannElement::scalar(&a, -1.0);
        assert!(matches!(neg.sqrt(), Err(Error::Domain(_))));
        assert!(matches!(neg.ln(), Err(Error::Domain(_))));
        assert!(matches!(GrassmannElement::zero(&a).inverse(), Err(Error::Domain(_))));
    }

    #[test]
    fn berezin_examples() {
        let a = GeneratorSet::new(["psibar1", "psi1"]).unwrap();
        let pb = GrassmannElement::generator(&a, 0).unwrap();
        let p = GrassmannElement::generator(&a, 1).unwrap();
        assert_eq!(p.berezin(1).unwrap(), GrassmannElement::one(&a));
        assert_eq!((&pb * &p).berezin(1).unwrap(), -&pb);
        let big_a = 3.7;
        let f = (&pb * &p * (-big_a)) + 1.0;
        // ∂ψ̄ ∂ψ: the ψ derivative acts first
        let d = f.berezin_seq(&[1, 0]).unwrap();
        assert_eq!(d, GrassmannElement::scalar(&a, big_a));
        assert!(GrassmannElement::one(&a).berezin_named("nope").is_err());
    }

    #[test]
    fn mismatch_is_an_error() {
        let a = alg(1);
        let b = GeneratorSet::new(["other"]).unwrap();
        let x = GrassmannElement::one(&a);
        let y = GrassmannElement::one(&b);
        assert!(matches!(x.mul_checked(&y), Err(Error::AlgebraMismatch)));
    }

    #[test]
    fn json_round_trip() {
        let a = alg(3);
        let x = GrassmannElement::from_terms(&a, [(0, 1.5), (0b101, -2.0), (0b010, 0.25)]).unwrap();
        let s = serde_json::to_string(&x).unwrap();
        let y: GrassmannElement = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
        let c = x.to_complex().scale(Complex64::new(0.0, 1.0));
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("coeff_im"));
        let d: Multivector<Complex64> = serde_json::from_str(&s).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn json_subset_order_is_respected() {
        let json: ElementJson = serde_json::from_str(
            r#"{"generators":["a","b"],"terms":[{"subset":[1,0],"coeff":2.0}]}"#,
        )
        .unwrap();
        let x = GrassmannElement::from_json(&json).unwrap();
        assert_eq!(x.coeff(0b11), -2.0);
    }

    #[test]
    fn embed_reorders_with_sign() {
        let small = GeneratorSet::new(["a", "b"]).unwrap();
        let big = GeneratorSet::new(["b", "c", "a"]).unwrap();
        let x = GrassmannElement::monomial(&small, &[0, 1], 1.0).unwrap();
        let y = x.embed(&big).unwrap();
        // a·b = −b·a
        assert_eq!(y.coeff_of(&[0, 2]), -1.0);
        assert_eq!(y.coeff_of(&[2, 0]), 1.0);
    }
}
