use std::sync::Arc;

use super::{same_algebra, GeneratorSet, GrassmannElement};
use crate::error::{Error, Result};

/// One vertex component `[a, b, χ̄, χ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupComponent {
    pub a: GrassmannElement,
    pub b: GrassmannElement,
    pub chibar: GrassmannElement,
    pub chi: GrassmannElement,
}

impl GroupComponent {
    pub fn identity(algebra: &Arc<GeneratorSet>) -> Self {
        Self {
            a: GrassmannElement::one(algebra),
            b: GrassmannElement::zero(algebra),
            chibar: GrassmannElement::zero(algebra),
            chi: GrassmannElement::zero(algebra),
        }
    }

    pub fn real(algebra: &Arc<GeneratorSet>, a: f64, b: f64) -> Self {
        Self {
            a: GrassmannElement::scalar(algebra, a),
            b: GrassmannElement::scalar(algebra, b),
            chibar: GrassmannElement::zero(algebra),
            chi: GrassmannElement::zero(algebra),
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.a.is_even() || !self.b.is_even() {
            return Err(Error::Parity("a and b must be even".into()));
        }
        if !self.chibar.is_odd() || !self.chi.is_odd() {
            return Err(Error::Parity("χ̄ and χ must be odd".into()));
        }
        if !(self.a.body() > 0.0) {
            return Err(Error::Invariant(format!("body(a) = {} is not positive", self.a.body())));
        }
        Ok(())
    }

    fn is_identity(&self) -> bool {
        let alg = self.a.algebra();
        self == &Self::identity(alg)
    }
}

/// Element of the vertexwise supergroup, indexed over `Ṽ` with the pinned
/// vertex last; the pinned component is always the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    algebra: Arc<GeneratorSet>,
    comps: Vec<GroupComponent>,
}

impl GroupElement {
    pub fn new(algebra: &Arc<GeneratorSet>, comps: Vec<GroupComponent>) -> Result<Self> {
        let last = comps
            .last()
            .ok_or_else(|| Error::Shape("group element needs at least the pinned vertex".into()))?;
        for c in &comps {
            for x in [&c.a, &c.b, &c.chibar, &c.chi] {
                if !same_algebra(x.algebra(), algebra) {
                    return Err(Error::AlgebraMismatch);
                }
            }
            c.validate()?;
        }
        if !last.is_identity() {
            return Err(Error::Invariant("pinned component must be [1,0,0,0]".into()));
        }
        Ok(Self { algebra: algebra.clone(), comps })
    }

    pub fn identity(algebra: &Arc<GeneratorSet>, n_tilde: usize) -> Self {
        Self { algebra: algebra.clone(), comps: vec![GroupComponent::identity(algebra); n_tilde] }
    }

    /// Real element `[a,b]` given over the free vertices `V`; the pinned
    /// component is appended.
    pub fn from_real(algebra: &Arc<GeneratorSet>, a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Shape("a and b differ in length".into()));
        }
        let mut comps: Vec<_> = a.iter().zip(b).map(|(&x, &y)| GroupComponent::real(algebra, x, y)).collect();
        comps.push(GroupComponent::identity(algebra));
        Self::new(algebra, comps)
    }

    pub fn algebra(&self) -> &Arc<GeneratorSet> {
        &self.algebra
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn components(&self) -> &[GroupComponent] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &GroupComponent {
        &self.comps[i]
    }

    /// `[aa', b+ab', χ̄+aχ̄', χ+aχ']` componentwise.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.comps.len() != other.comps.len() {
            return Err(Error::Shape("group elements over different vertex sets".into()));
        }
        if !same_algebra(&self.algebra, &other.algebra) {
            return Err(Error::AlgebraMismatch);
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(v, w)| GroupComponent {
                a: &v.a * &w.a,
                b: &v.b + &(&v.a * &w.b),
                chibar: &v.chibar + &(&v.a * &w.chibar),
                chi: &v.chi + &(&v.a * &w.chi),
            })
            .collect();
        Self::new(&self.algebra, comps)
    }

    /// `[a⁻¹, −ba⁻¹, −χ̄a⁻¹, −χa⁻¹]` componentwise.
    pub fn inv(&self) -> Result<Self> {
        let comps = self
            .comps
            .iter()
            .map(|v| {
                let ainv = v.a.inverse()?;
                Ok(GroupComponent {
                    b: -(&v.b * &ainv),
                    chibar: -(&v.chibar * &ainv),
                    chi: -(&v.chi * &ainv),
                    a: ainv,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(&self.algebra, comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_product_and_inverse() {
        let alg = GeneratorSet::empty();
        let v = GroupElement::from_real(&alg, &[2.0], &[1.0]).unwrap();
        let w = GroupElement::from_real(&alg, &[3.0], &[4.0]).unwrap();
        let p = v.mul(&w).unwrap();
        assert_eq!(p.component(0).a.body(), 6.0);
        assert_eq!(p.component(0).b.body(), 9.0);
        let i = v.inv().unwrap();
        assert_eq!(i.component(0).a.body(), 0.5);
        assert_eq!(i.component(0).b.body(), -0.5);
        assert_eq!(v.mul(&i).unwrap(), GroupElement::identity(&alg, 2));
    }

    #[test]
    fn super_inverse() {
        let alg = GeneratorSet::new(["cb", "c"]).unwrap();
        let cb = GrassmannElement::generator(&alg, 0).unwrap();
        let c = GrassmannElement::generator(&alg, 1).unwrap();
        let comp = GroupComponent {
            a: (&cb * &c) * 0.5 + 1.5,
            b: GrassmannElement::scalar(&alg, -0.3),
            chibar: cb * 2.0,
            chi: c,
        };
        let v = GroupElement::new(&alg, vec![comp, GroupComponent::identity(&alg)]).unwrap();
        let id = GroupElement::identity(&alg, 2);
        assert_eq!(v.mul(&v.inv().unwrap()).unwrap(), id);
        assert_eq!(v.inv().unwrap().mul(&v).unwrap(), id);
    }

    #[test]
    fn invariants_enforced() {
        let alg = GeneratorSet::empty();
        assert!(matches!(GroupElement::from_real(&alg, &[-1.0], &[0.0]), Err(Error::Invariant(_))));
        let bad_pin = vec![GroupComponent::identity(&alg), GroupComponent::real(&alg, 2.0, 0.0)];
        assert!(matches!(GroupElement::new(&alg, bad_pin), Err(Error::Invariant(_))));
    }
}
