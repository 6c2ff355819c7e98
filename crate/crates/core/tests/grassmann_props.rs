//! Algebraic invariants of the exterior algebra, its even functions, Berezin
//! integration and the supermatrix/group layers.

use std::sync::Arc;

use proptest::prelude::*;
use susy_sigma::grassmann::{
    ElemMatrix, GeneratorSet, GrassmannElement, GroupComponent, GroupElement, SuperMatrix,
};

const N: usize = 4;

fn algebra() -> Arc<GeneratorSet> {
    GeneratorSet::new(["g1", "g2", "g3", "g4"]).unwrap()
}

/// Arbitrary element: one coefficient per mask.
fn element() -> impl Strategy<Value = GrassmannElement> {
    prop::collection::vec(-2.0f64..2.0, 1 << N).prop_map(|c| {
        GrassmannElement::from_terms(&algebra(), c.into_iter().enumerate().map(|(m, x)| (m as u64, x))).unwrap()
    })
}

fn even_element(body_min: f64) -> impl Strategy<Value = GrassmannElement> {
    (element(), body_min..body_min + 2.0).prop_map(|(x, b)| {
        let even = x.grade(2) + x.grade(4);
        even.add_scalar(b)
    })
}

fn odd_element() -> impl Strategy<Value = GrassmannElement> {
    element().prop_map(|x| x.grade(1) + x.grade(3))
}

fn close(a: &GrassmannElement, b: &GrassmannElement, tol: f64) -> bool {
    a.distance(b).unwrap() <= tol * (1.0 + a.max_abs().max(b.max_abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_is_associative_and_distributive(x in element(), y in element(), z in element()) {
        prop_assert!(close(&(&(&x * &y) * &z), &(&x * &(&y * &z)), 1e-12));
        prop_assert!(close(&(&x * &(&y + &z)), &(&(&x * &y) + &(&x * &z)), 1e-12));
    }

    #[test]
    fn supercommutativity(e in even_element(-1.0), o1 in odd_element(), o2 in odd_element()) {
        prop_assert!(close(&(&e * &o1), &(&o1 * &e), 1e-12));
        prop_assert!(close(&(&o1 * &o2), &(-(&o2 * &o1)), 1e-12));
        prop_assert!((&o1 * &o1).max_abs() < 1e-12);
    }

    #[test]
    fn even_functions_invert_each_other(x in even_element(0.5)) {
        prop_assert!(close(&x.ln().unwrap().exp().unwrap(), &x, 1e-11));
        let one = GrassmannElement::one(x.algebra());
        prop_assert!(close(&(&x * &x.inverse().unwrap()), &one, 1e-11));
        let r = x.sqrt().unwrap();
        prop_assert!(close(&(&r * &r), &x, 1e-11));
    }

    #[test]
    fn exp_is_a_homomorphism_on_even(x in even_element(-1.0), y in even_element(-1.0)) {
        let lhs = (&x + &y).exp().unwrap();
        let rhs = &x.exp().unwrap() * &y.exp().unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-11));
    }

    #[test]
    fn berezin_is_a_left_derivation(x in element(), y in element(), g in 0..N) {
        // ∂(xy) = (∂x) y + (−1)^{|x|} x ∂y on homogeneous x
        for xh in [x.grade(1) + x.grade(3), x.grade(0) + x.grade(2) + x.grade(4)] {
            let sign = if xh.is_odd() { -1.0 } else { 1.0 };
            let lhs = (&xh * &y).berezin(g).unwrap();
            let rhs = &(&xh.berezin(g).unwrap() * &y) + &(&(&xh * &y.berezin(g).unwrap()) * sign);
            prop_assert!(close(&lhs, &rhs, 1e-12));
        }
        // integrals of derivatives vanish: ∂_g ∂_g = 0
        prop_assert!(x.berezin(g).unwrap().berezin(g).unwrap().is_zero());
    }
}

fn supermatrix() -> impl Strategy<Value = SuperMatrix<f64>> {
    let alg = algebra();
    (
        prop::collection::vec(even_element(-1.0), 4),
        prop::collection::vec(odd_element(), 4),
        prop::collection::vec(odd_element(), 4),
        prop::collection::vec(even_element(-1.0), 4),
    )
        .prop_map(move |(a, s, g, b)| {
            let block = |v: &[GrassmannElement], diag: bool| {
                let mut m = ElemMatrix::zeros(&alg, 2, 2);
                for i in 0..2 {
                    for j in 0..2 {
                        let x = if diag && i == j { v[2 * i + j].add_scalar(4.0) } else { v[2 * i + j].clone() };
                        m.set(i, j, x);
                    }
                }
                m
            };
            SuperMatrix::new(block(&a, true), block(&s, false), block(&g, false), block(&b, true)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sdet_is_multiplicative(m in supermatrix(), n in supermatrix()) {
        let lhs = m.mul(&n).unwrap().sdet().unwrap();
        let rhs = &m.sdet().unwrap() * &n.sdet().unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn group_axioms(
        a in prop::collection::vec(even_element(0.3), 2),
        b in prop::collection::vec(even_element(-1.0), 2),
        cb in prop::collection::vec(odd_element(), 2),
        c in prop::collection::vec(odd_element(), 2),
        k in 0usize..2,
    ) {
        let alg = algebra();
        let comp = |i: usize| GroupComponent { a: a[i].clone(), b: b[i].clone(), chibar: cb[i].clone(), chi: c[i].clone() };
        let v = GroupElement::new(&alg, vec![comp(0), GroupComponent::identity(&alg)]).unwrap();
        let w = GroupElement::new(&alg, vec![comp(1), GroupComponent::identity(&alg)]).unwrap();
        let e = GroupElement::identity(&alg, 2);
        let vw = v.mul(&w).unwrap();
        let lhs = vw.mul(&v).unwrap();
        let rhs = v.mul(&w.mul(&v).unwrap()).unwrap();
        let id = v.mul(&v.inv().unwrap()).unwrap();
        for (x, y) in [(&lhs, &rhs), (&id, &e), (&v.mul(&e).unwrap(), &v)] {
            let (p, q) = (x.component(k), y.component(k));
            prop_assert!(close(&p.a, &q.a, 1e-11));
            prop_assert!(close(&p.b, &q.b, 1e-11));
            prop_assert!(close(&p.chibar, &q.chibar, 1e-11));
            prop_assert!(close(&p.chi, &q.chi, 1e-11));
        }
    }
}

#[test]
fn berezin_convention() {
    // ∂_ψ̄ ∂_ψ (1 − A ψ̄ ψ) = A, so ∫ ψ̄ψ = −1
    let alg = GeneratorSet::new(["psibar", "psi"]).unwrap();
    let pb = GrassmannElement::generator(&alg, 0).unwrap();
    let p = GrassmannElement::generator(&alg, 1).unwrap();
    let x = (&pb * &p * -2.5).add_scalar(1.0);
    assert_eq!(x.berezin(1).unwrap().berezin(0).unwrap().body(), 2.5);
    assert_eq!((&pb * &p).berezin(1).unwrap().berezin(0).unwrap().body(), -1.0);
}

#[test]
fn odd_functions_are_rejected() {
    let alg = algebra();
    let g = GrassmannElement::generator(&alg, 0).unwrap();
    assert!(g.exp().is_err());
    assert!(GrassmannElement::scalar(&alg, -1.0).ln().is_err());
    assert!(GrassmannElement::zero(&alg).inverse().is_err());
    assert!(GrassmannElement::scalar(&alg, -2.0).inverse().is_ok());
}
