//! The bundled checks.  Each one returns its compared coefficients; the
//! verdict is applied by [`super::run_check`].

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::quadrature::{integrate_2d, QuadOptions};
use super::report::{scalar_vs_exact, scalar_vs_scalar, Coefficient};
use super::CheckSpec;
use crate::error::{Error, Result};
use crate::grassmann::{
    ComplexGrassmann, ElemMatrix, GeneratorSet, GrassmannElement, GroupComponent, GroupElement, SuperMatrix,
};
use crate::graph::fixtures::{line_tower, single_edge, triangle, z_tower};
use crate::graph::{Graph, GraphTower};
use crate::sampler::{derive_seed, expect, sample_s_given_u, ChainConfig, SuperAlgebra};
use crate::scaling::{
    density_ratio, laplace_closed_form, laplace_exponent, radon_nikodym, rescale_weights, scale_fields, Direction,
    ScaleParams,
};
use crate::sigma_core::{
    build_a, compute_theta, h_beta_vv, log_rho, rho_density, s_cart, spinor_det, spinor_norm_form, CartesianPoint,
    FieldConfig, RhoMode,
};
use crate::supersym::checks::{
    consistency_check, grassmann_laplace_check, horo_quadrature, laplace_quadrature, susy_martingale_check,
    super_image_measure_check, tau_algebra, ward_check, MartingaleSpec,
};
use crate::supersym::{
    a_matrix_super, bold_rho, super_jacobian, super_scale_point, super_scale_pullback, ward_exponential, LaplaceParams,
    Parity, SuperObservable, SuperPoint, SuperWeights,
};

/// Coefficients and free-form notes produced by a check.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub coefficients: Vec<Coefficient>,
    pub notes: Vec<String>,
}

/// What a check runs on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    None,
    Graph,
    Tower,
}

pub struct CheckInfo {
    pub id: &'static str,
    pub description: &'static str,
    pub fixture: Fixture,
    /// Per-coefficient z threshold before multiplicity correction.
    pub z_threshold: f64,
    pub run: fn(&CheckSpec) -> Result<Outcome>,
}

impl std::fmt::Debug for CheckInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CheckInfo").field("id", &self.id).finish()
    }
}

macro_rules! check {
    ($id:expr, $desc:expr, $fix:expr, $run:expr) => {
        check!($id, $desc, $fix, 3.0, $run)
    };
    ($id:expr, $desc:expr, $fix:expr, $z:expr, $run:expr) => {
        CheckInfo { id: $id, description: $desc, fixture: $fix, z_threshold: $z, run: $run }
    };
}

pub static CHECKS: &[CheckInfo] = &[
    check!("rho-equivalence", "direct, quadratic-form and spinor forms of rho agree", Fixture::None, rho_equivalence),
    check!("spinor-identity", "2x2 determinant equals the epsilon-norm form", Fixture::None, spinor_identity),
    check!("A-scale-invariance", "A^{W^a}(u - log a) = A^W(u), real and as a superfunction", Fixture::None, a_scale_invariance),
    check!("zeta-scaling", "reference supermeasure picks up prod a under scaling (quadrature)", Fixture::None, zeta_scaling),
    check!("radon-nikodym", "density ratio of the scaled measure; two-sided MC on bump functions", Fixture::Graph, radon_nikodym_check),
    check!("laplace-real", "joint Laplace transform of (beta, theta) vs closed form", Fixture::Graph, laplace_real),
    check!("laplace-grassmann", "Grassmann-Laplace transform of (beta, theta, phibar, phi) vs closed form", Fixture::Graph, laplace_grassmann_check),
    check!("consistency", "closed forms and (beta, theta) moments agree along a wired tower", Fixture::Tower, consistency),
    check!("martingale-generating", "generating martingale at two levels and its closed form", Fixture::Tower, martingale_generating),
    check!("martingale-derivatives", "alpha-derivative martingales M_j, M_jl, M_jlm at two levels", Fixture::Tower, martingale_derivatives),
    check!("martingale-special-cases", "real and imaginary parts of M_j and M_jj at two levels", Fixture::Tower, martingale_special_cases),
    check!("ward", "E[exp(<alpha, e^u(1+is)> + <tau, e^u(psibar + i psi)>)] = e^<alpha,1>", Fixture::Graph, ward),
    check!("marginal-lemma", "Berezin integral of the superdensity is rho; of exp(-<psibar,A psi>) is det A", Fixture::None, marginal_lemma),
    check!("jacobian-sdet", "sdet of the super Jacobian is 1; sdet is multiplicative", Fixture::None, jacobian_sdet),
    check!("theta-conditional", "theta given u is centered Gaussian with covariance H_beta", Fixture::Graph, 5.0, theta_conditional),
    check!("cartesian-horospherical", "Ward integrand integrates identically in both coordinate systems", Fixture::None, cartesian_horospherical),
    check!("image-measure-super", "E_W[f e^-<pi,varpi>] = L E_{W^a}[S* f] for a bump times psibar psi", Fixture::Graph, image_measure_super),
];

// --- shared helpers ----------------------------------------------------------

fn rng_for(spec: &CheckSpec, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(spec.chain.seed, stream))
}

fn sub_chain(spec: &CheckSpec, stream: u64) -> ChainConfig {
    spec.chain.with_seed(derive_seed(spec.chain.seed, stream))
}

fn tol(spec: &CheckSpec, default: f64) -> f64 {
    spec.tolerance.unwrap_or(default)
}

fn graphs(spec: &CheckSpec, defaults: Vec<(&str, Graph)>) -> Vec<(String, Graph)> {
    match &spec.graph {
        Some(g) => vec![("custom graph".to_string(), g.clone())],
        None => defaults.into_iter().map(|(n, g)| (n.to_string(), g)).collect(),
    }
}

fn towers(spec: &CheckSpec, defaults: Vec<(&str, GraphTower)>) -> Vec<(String, GraphTower)> {
    match &spec.tower {
        Some(t) => vec![("custom".to_string(), t.clone())],
        None => defaults.into_iter().map(|(n, t)| (n.to_string(), t)).collect(),
    }
}

fn edge() -> Graph {
    single_edge(1.0)
}

fn tri() -> Graph {
    triangle(1.0, 1.0, 1.0)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Random connected graph on `n_tilde` vertices (pinned last) with weights in `[0.2, 2]`.
pub(crate) fn random_graph(rng: &mut ChaCha8Rng, n_tilde: usize) -> Result<Graph> {
    let mut w = DMatrix::zeros(n_tilde, n_tilde);
    for k in 1..n_tilde {
        let j = rng.random_range(0..k);
        let x = rng.random_range(0.2..2.0);
        w[(k, j)] = x;
        w[(j, k)] = x;
    }
    for i in 0..n_tilde {
        for j in (i + 1)..n_tilde {
            if w[(i, j)] == 0.0 && rng.random::<f64>() < 0.3 {
                let x = rng.random_range(0.2..2.0);
                w[(i, j)] = x;
                w[(j, i)] = x;
            }
        }
    }
    Graph::from_weights(w)
}

fn random_config(rng: &mut ChaCha8Rng, g: &Graph, scale: f64) -> FieldConfig {
    let n = g.n_free();
    let u: Vec<f64> = (0..n).map(|_| scale * normal(rng)).collect();
    let s: Vec<f64> = (0..n).map(|_| scale * normal(rng)).collect();
    FieldConfig::from_free(&u, &s)
}

fn kappa_algebra() -> Arc<GeneratorSet> {
    GeneratorSet::new(["kappabar", "kappa"]).expect("two generators")
}

/// `[a + ε κ̄κ, b, χ̄₀ κ̄, χ₀ κ]` on every free vertex of `g`.
fn kappa_group(g: &Graph, a: f64, eps: f64, b: f64, chibar: f64, chi: f64) -> Result<GroupElement> {
    let alg = kappa_algebra();
    let kb = GrassmannElement::generator(&alg, 0)?;
    let k = GrassmannElement::generator(&alg, 1)?;
    let mut comps: Vec<GroupComponent> = (0..g.n_free())
        .map(|_| GroupComponent {
            a: (&kb * &k * eps).add_scalar(a),
            b: GrassmannElement::scalar(&alg, b),
            chibar: &kb * chibar,
            chi: &k * chi,
        })
        .collect();
    comps.push(GroupComponent::identity(&alg));
    GroupElement::new(&alg, comps)
}

/// One deterministic coefficient per Grassmann coefficient of two elements.
fn compare_elements(label: &str, x: &ComplexGrassmann, y: &ComplexGrassmann, tol: f64) -> Vec<Coefficient> {
    let count = 1u64 << x.algebra().len();
    let mut out = Vec::new();
    for m in 0..count {
        let (a, b) = (x.coeff(m), y.coeff(m));
        out.push(Coefficient::deterministic(format!("{label} [re]"), a.re, b.re, tol).with_subset(x.subset_names(m)));
        if a.im != 0.0 || b.im != 0.0 {
            out.push(Coefficient::deterministic(format!("{label} [im]"), a.im, b.im, tol).with_subset(x.subset_names(m)));
        }
    }
    out
}

fn prefix(mut cs: Vec<Coefficient>, p: &str) -> Vec<Coefficient> {
    for c in &mut cs {
        c.label = format!("{p}: {}", c.label);
    }
    cs
}

// --- deterministic checks ---------------------------------------------------

fn rho_equivalence(spec: &CheckSpec) -> Result<Outcome> {
    let mut rng = rng_for(spec, 0);
    let (mut q, mut s) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(2..=5);
        let g = random_graph(&mut rng, n)?;
        let cfg = random_config(&mut rng, &g, 1.0);
        let d = log_rho(&g, &cfg, RhoMode::Direct)?;
        q = q.max((log_rho(&g, &cfg, RhoMode::Quadratic)? - d).exp_m1().abs());
        s = s.max((log_rho(&g, &cfg, RhoMode::Spinor)? - d).exp_m1().abs());
    }
    let t = tol(spec, 1e-12);
    Ok(Outcome {
        coefficients: vec![
            Coefficient::deterministic("max |rho_quadratic / rho_direct - 1| (100 random configurations)", q, 0.0, t),
            Coefficient::deterministic("max |rho_spinor / rho_direct - 1| (100 random configurations)", s, 0.0, t),
        ],
        notes: vec![],
    })
}

fn spinor_identity(spec: &CheckSpec) -> Result<Outcome> {
    let mut rng = rng_for(spec, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (ai, aj) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        let (bi, bj) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let d = spinor_det(ai, bi, aj, bj);
        let n = spinor_norm_form(ai, bi, aj, bj);
        worst = worst.max((d - n).abs() / n.abs().max(1.0));
    }
    let t = tol(spec, 1e-12);
    Ok(Outcome {
        coefficients: vec![
            Coefficient::deterministic("max scaled |det - norm form| (1000 random pairs)", worst, 0.0, t),
            Coefficient::deterministic("hand case [1,0],[1,1]: determinant", spinor_det(1.0, 0.0, 1.0, 1.0), -1.0, t),
            Coefficient::deterministic("hand case [1,0],[1,1]: norm form", spinor_norm_form(1.0, 0.0, 1.0, 1.0), -1.0, t),
        ],
        notes: vec![],
    })
}

fn a_scale_invariance(spec: &CheckSpec) -> Result<Outcome> {
    let mut rng = rng_for(spec, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=5);
        let g = random_graph(&mut rng, n)?;
        let cfg = random_config(&mut rng, &g, 1.0);
        let a: Vec<f64> = (0..g.n_free()).map(|_| rng.random_range(0.3..3.0)).collect();
        let p = ScaleParams::new(&a, &vec![0.0; a.len()])?;
        let ga = rescale_weights(&p, &g)?;
        let shifted: Vec<f64> = cfg.u.iter().zip(&p.a).map(|(u, a)| u - a.ln()).collect();
        let lhs = build_a(&ga, &shifted);
        let rhs = build_a(&g, &cfg.u);
        let scale = rhs.amax().max(1e-300);
        worst = worst.max((lhs - &rhs).amax() / scale);
    }
    // the same identity with Grassmann-valued a, pulled back as a superfunction
    let g = triangle(0.8, 1.2, 0.5);
    let v = kappa_group(&g, 1.3, 0.4, 0.2, 0.6, -0.3)?;
    let sa = SuperAlgebra::new(&g, v.algebra())?;
    let p = SuperPoint::at(&sa, &FieldConfig::from_free(&[0.2, -0.5], &[0.4, 1.0]));
    let back = super_scale_point(&v.inv()?, &p)?;
    let lhs = a_matrix_super(&SuperWeights::rescaled(&g, &v)?, &back.u)?;
    let rhs = a_matrix_super(&SuperWeights::real(&g, v.algebra()), &p.u)?;
    let mut sworst = 0.0f64;
    for i in 0..g.n_tilde() {
        for j in 0..g.n_tilde() {
            sworst = sworst.max(lhs.get(i, j).distance(rhs.get(i, j))?);
        }
    }
    let t = tol(spec, 1e-12);
    Ok(Outcome {
        coefficients: vec![
            Coefficient::deterministic("max relative entry deviation (100 random graphs)", worst, 0.0, t),
            Coefficient::deterministic("superfunction form, max coefficient deviation", sworst, 0.0, t),
        ],
        notes: vec![],
    })
}

fn zeta_scaling(spec: &CheckSpec) -> Result<Outcome> {
    let g = edge();
    let v = kappa_group(&g, 1.3, 0.2, 0.4, 0.5, -0.7)?;
    let sa = SuperAlgebra::new(&g, v.algebra())?;
    let f = SuperObservable::real("window", Parity::Even, |p| {
        let (u, s) = (&p.u[0], &p.s[0]);
        let du = u.add_scalar(-0.1);
        let w = (-(&(&du * &du) + &(s * s * 0.5))).exp()?;
        let odd = &(&p.psibar[0] * &p.psi[0]) * &(u * 0.3).add_scalar(1.0);
        Ok(&w * &(odd + (s * 0.2)))
    });
    let pulled = super_scale_pullback(&v, &f);
    let comp = v.component(0).clone();
    let shift = comp.b.body() / comp.a.body();
    let opts = QuadOptions { abs_tol: 1e-10, ..Default::default() };
    let lhs = horo_quadrature(
        &g,
        &sa,
        move |u: f64| {
            let c = (-u).exp() * shift;
            (c - 12.0, c + 12.0)
        },
        |cfg| pulled.eval(&SuperPoint::at(&sa, cfg)),
        opts,
    )?;
    let base = horo_quadrature(&g, &sa, |_| (-12.0, 12.0), |cfg| f.eval(&SuperPoint::at(&sa, cfg)), opts)?;
    let rhs = &comp.a.to_complex() * &base;
    Ok(Outcome {
        coefficients: compare_elements("int dzeta S*f vs a int dzeta f", &lhs, &rhs, tol(spec, 1e-6)),
        notes: vec![format!("a = {}", comp.a)],
    })
}

fn marginal_lemma(spec: &CheckSpec) -> Result<Outcome> {
    let mut rng = rng_for(spec, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=4);
        let g = random_graph(&mut rng, n)?;
        let cfg = random_config(&mut rng, &g, 0.8);
        let sa = SuperAlgebra::new(&g, &GeneratorSet::empty())?;
        let r = bold_rho(&SuperWeights::real(&g, sa.params()), &sa, &cfg)?;
        let marg = sa.berezin(&r)?.body();
        let rho = rho_density(&g, &cfg, RhoMode::Direct)?.value;
        worst = worst.max((marg / rho - 1.0).abs());
    }
    let mut dworst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..=4);
        let a = DMatrix::from_fn(n, n, |i, j| normal(&mut rng) + if i == j { 2.0 } else { 0.0 });
        let names: Vec<String> = (0..n).flat_map(|i| [format!("psibar_{i}"), format!("psi_{i}")]).collect();
        let alg = GeneratorSet::new(names)?;
        let mut form = GrassmannElement::zero(&alg);
        for i in 0..n {
            for j in 0..n {
                let t = &GrassmannElement::generator(&alg, 2 * i)? * &GrassmannElement::generator(&alg, 2 * j + 1)?;
                form += &(t * a[(i, j)]);
            }
        }
        let mut x = (-form).exp()?;
        for i in (0..n).rev() {
            x = x.berezin(2 * i + 1)?.berezin(2 * i)?;
        }
        let det = a.determinant();
        dworst = dworst.max((x.body() - det).abs() / det.abs().max(1.0));
    }
    let t = tol(spec, 1e-12);
    Ok(Outcome {
        coefficients: vec![
            Coefficient::deterministic("max |Berezin(bold rho) / rho - 1| (50 random configurations)", worst, 0.0, t),
            Coefficient::deterministic("max scaled |Berezin(exp(-<psibar,A psi>)) - det A| (50 random A, n <= 4)", dworst, 0.0, t),
        ],
        notes: vec![],
    })
}

/// Random supermatrix with `p` even and `q` odd dimensions over `alg`.
pub(crate) fn random_supermatrix(rng: &mut ChaCha8Rng, alg: &Arc<GeneratorSet>, p: usize, q: usize) -> Result<SuperMatrix<f64>> {
    let k = alg.len();
    let even = |rng: &mut ChaCha8Rng, diag: bool| -> Result<GrassmannElement> {
        let mut x = GrassmannElement::scalar(alg, normal(rng) * 0.5 + if diag { 2.0 } else { 0.0 });
        for i in 0..k {
            for j in (i + 1)..k {
                x += &GrassmannElement::monomial(alg, &[i, j], normal(rng) * 0.3)?;
            }
        }
        Ok(x)
    };
    let odd = |rng: &mut ChaCha8Rng| -> Result<GrassmannElement> {
        let mut x = GrassmannElement::zero(alg);
        for i in 0..k {
            x += &GrassmannElement::monomial(alg, &[i], normal(rng) * 0.5)?;
        }
        Ok(x)
    };
    let mut a = ElemMatrix::zeros(alg, p, p);
    let mut b = ElemMatrix::zeros(alg, q, q);
    let mut sigma = ElemMatrix::zeros(alg, p, q);
    let mut gamma = ElemMatrix::zeros(alg, q, p);
    for i in 0..p {
        for j in 0..p {
            a.set(i, j, even(rng, i == j)?);
        }
        for j in 0..q {
            sigma.set(i, j, odd(rng)?);
        }
    }
    for i in 0..q {
        for j in 0..q {
            b.set(i, j, even(rng, i == j)?);
        }
        for j in 0..p {
            gamma.set(i, j, odd(rng)?);
        }
    }
    SuperMatrix::new(a, sigma, gamma, b)
}

fn jacobian_sdet(spec: &CheckSpec) -> Result<Outcome> {
    let mut rng = rng_for(spec, 0);
    let alg = GeneratorSet::new(["kappabar_1", "kappa_1", "kappabar_2", "kappa_2"])?;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(1..=3);
        let gens: Vec<GrassmannElement> = (0..4).map(|k| GrassmannElement::generator(&alg, k)).collect::<Result<_>>()?;
        let mut comps = Vec::new();
        for _ in 0..n {
            comps.push(GroupComponent {
                a: (&gens[0] * &gens[1] * normal(&mut rng)).add_scalar(rng.random_range(0.3..2.5)),
                b: (&gens[2] * &gens[3] * normal(&mut rng)).add_scalar(normal(&mut rng)),
                chibar: &(&gens[0] * normal(&mut rng)) + &(&gens[2] * normal(&mut rng)),
                chi: &(&gens[1] * normal(&mut rng)) + &(&gens[3] * normal(&mut rng)),
            });
        }
        comps.push(GroupComponent::identity(&alg));
        let v = GroupElement::new(&alg, comps)?;
        let u: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let d = super_jacobian(&v, &u)?.sdet()?;
        worst = worst.max(d.distance(&GrassmannElement::one(&alg))?);
    }
    let mut mult = 0.0f64;
    let small = GeneratorSet::new(["g1", "g2", "g3", "g4"])?;
    for _ in 0..20 {
        let (p, q) = (rng.random_range(1..=2), rng.random_range(1..=2));
        let m = random_supermatrix(&mut rng, &small, p, q)?;
        let n = random_supermatrix(&mut rng, &small, p, q)?;
        let lhs = m.mul(&n)?.sdet()?;
        let rhs = &m.sdet()? * &n.sdet()?;
        mult = mult.max(lhs.distance(&rhs)? / rhs.max_abs().max(1.0));
    }
    let t = tol(spec, 1e-12);
    Ok(Outcome {
        coefficients: vec![
            Coefficient::deterministic("max |sdet(dx'/dx) - 1| (20 random v, u)", worst, 0.0, t),
            Coefficient::deterministic("max scaled |sdet(MN) - sdet(M) sdet(N)| (20 random pairs)", mult, 0.0, t),
        ],
        notes: vec![],
    })
}

/// Horospherical and cartesian integrals of the Ward integrand at one vertex.
pub(crate) fn ward_quadratures(w: f64, alpha: f64, tau_coeff: f64) -> Result<(ComplexGrassmann, ComplexGrassmann)> {
    let g = single_edge(w);
    let params = tau_algebra(&g)?;
    let sa = SuperAlgebra::new(&g, &params)?;
    let tau = vec![&sa.param(0) * tau_coeff, GrassmannElement::zero(sa.combined())];
    let sw = SuperWeights::real(&g, &params);
    let opts = QuadOptions { abs_tol: 1e-9, ..Default::default() };
    let horo = horo_quadrature(
        &g,
        &sa,
        move |u: f64| {
            let h = 14.0 / (w * u.exp()).sqrt();
            (-h, h)
        },
        |cfg| {
            let m = ward_exponential(&SuperPoint::at(&sa, cfg), &[alpha, 0.0], &tau)?;
            Ok(&bold_rho(&sw, &sa, cfg)?.to_complex() * &m)
        },
        opts,
    )?;

    // ∫ dx dy/(2π) ∂_ξ ∂_η (z⁻¹ e^{𝒮_cart} f)
    let mut names = vec!["xi".to_string(), "eta".to_string()];
    names.extend(params.names().iter().cloned());
    let alg = GeneratorSet::new(names)?;
    let xi = GrassmannElement::generator(&alg, 0)?;
    let eta = GrassmannElement::generator(&alg, 1)?;
    let t = &GrassmannElement::generator(&alg, 2)? * tau_coeff;
    let zero = GrassmannElement::zero(&alg);
    let i = Complex64::new(0.0, 1.0);
    let count = 1usize << params.len();
    let (v, _) = integrate_2d(
        |x, y| {
            let z = (&xi * &eta * 2.0).add_scalar(1.0 + x * x + y * y).sqrt()?;
            let p = CartesianPoint {
                x: vec![GrassmannElement::scalar(&alg, x), zero.clone()],
                y: vec![GrassmannElement::scalar(&alg, y), zero.clone()],
                z: vec![z.clone(), GrassmannElement::one(&alg)],
                xi: vec![xi.clone(), zero.clone()],
                eta: vec![eta.clone(), zero.clone()],
            };
            let action = s_cart(&g, &p);
            let lin = (&z.add_scalar(x) * alpha).to_complex().add_scalar(i * (alpha * y));
            let odd = &(&t.to_complex() * &(&xi.to_complex() + &(&eta.to_complex() * i)));
            let e = (&(&action.to_complex() + &lin) + odd).exp()?;
            let val = (&e * &z.inverse()?.to_complex()).berezin(1)?.berezin(0)?;
            let mut out = vec![0.0; 2 * count];
            for &(m, c) in val.terms() {
                let k = (m >> 2) as usize;
                out[2 * k] = c.re / (2.0 * PI);
                out[2 * k + 1] = c.im / (2.0 * PI);
            }
            Ok(out)
        },
        (-40.0, 40.0),
        |_| (-40.0, 40.0),
        2 * count,
        opts,
    )?;
    let cart = ComplexGrassmann::from_terms(&params, (0..count).map(|m| (m as u64, Complex64::new(v[2 * m], v[2 * m + 1]))))?;
    Ok((horo, cart))
}

fn cartesian_horospherical(spec: &CheckSpec) -> Result<Outcome> {
    let t = tol(spec, 1e-5);
    let alpha = -1.0;
    let (horo, cart) = ward_quadratures(1.0, alpha, 0.7)?;
    let exact = ComplexGrassmann::scalar(horo.algebra(), Complex64::new(alpha.exp(), 0.0));
    let mut cs = compare_elements("cartesian vs horospherical", &cart, &horo, t);
    cs.extend(compare_elements("horospherical vs e^alpha", &horo, &exact, t));
    cs.extend(compare_elements("cartesian vs e^alpha", &cart, &exact, t));
    Ok(Outcome { coefficients: cs, notes: vec![] })
}

// --- Monte Carlo checks -----------------------------------------------------

fn theta_conditional(spec: &CheckSpec) -> Result<Outcome> {
    let mut cs = Vec::new();
    for (name, g) in graphs(spec, vec![("triangle", tri())]) {
        let n = g.n_free();
        let mut u: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.3 } else { -0.5 }).collect();
        u.push(0.0);
        let h = h_beta_vv(&g, &u);
        let draws = spec.chain.n_samples;
        let mut rng = rng_for(spec, 0);
        let k = n * (n + 1) / 2;
        let (mut sum, mut sq) = (vec![0.0; k + n], vec![0.0; k + n]);
        for _ in 0..draws {
            let s = sample_s_given_u(&g, &u, &mut rng)?;
            let th = compute_theta(&g, &u, &s);
            let mut idx = 0;
            for i in 0..n {
                for j in i..n {
                    let x = th[i] * th[j];
                    sum[idx] += x;
                    sq[idx] += x * x;
                    idx += 1;
                }
            }
            for i in 0..n {
                sum[k + i] += th[i];
                sq[k + i] += th[i] * th[i];
            }
        }
        let nf = draws as f64;
        let stat = |idx: usize| {
            let m = sum[idx] / nf;
            let var = (sq[idx] / nf - m * m).max(0.0) * nf / (nf - 1.0);
            (m, (var / nf).sqrt())
        };
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                let (m, se) = stat(idx);
                cs.push(Coefficient::statistical(format!("{name}: Cov(theta_{i}, theta_{j}) vs H_beta"), vec![], m, se, h[(i, j)], 0.0));
                idx += 1;
            }
        }
        for i in 0..n {
            let (m, se) = stat(k + i);
            cs.push(Coefficient::statistical(format!("{name}: E[theta_{i}] vs 0"), vec![], m, se, 0.0, 0.0));
        }
    }
    Ok(Outcome { coefficients: cs, notes: vec![] })
}

/// Per-graph tilt points `(a, b)` over the free vertices.
fn laplace_points(spec: &CheckSpec, g: &Graph) -> Vec<Vec<(f64, f64)>> {
    if let Some(ab) = spec.ab {
        return vec![vec![ab; g.n_free()]];
    }
    let pool = [(1.2, 0.3), (0.9, 0.2), (1.5, -0.5), (1.0, 0.4), (0.8, 0.0), (1.1, -0.45), (1.3, 0.5)];
    (0..5).map(|k| (0..g.n_free()).map(|i| pool[(k + 2 * i) % pool.len()]).collect()).collect()
}

fn to_params(pt: &[(f64, f64)]) -> Result<ScaleParams> {
    let a: Vec<f64> = pt.iter().map(|x| x.0).collect();
    let b: Vec<f64> = pt.iter().map(|x| x.1).collect();
    ScaleParams::new(&a, &b)
}

fn gate_real(p: &ScaleParams, n: usize) -> Result<()> {
    let c: Vec<f64> = (0..n).map(|i| p.a[i] * p.a[i] + p.b[i] * p.b[i] - 1.0).collect();
    crate::supersym::decay_gate(&c, &p.b[..n])
}

fn laplace_real(spec: &CheckSpec) -> Result<Outcome> {
    let mut cs = Vec::new();
    let mut notes = Vec::new();
    for (k, (name, g)) in graphs(spec, vec![("edge", edge()), ("triangle", tri())]).into_iter().enumerate() {
        let params: Vec<ScaleParams> = laplace_points(spec, &g).iter().map(|p| to_params(p)).collect::<Result<_>>()?;
        for p in &params {
            gate_real(p, g.n_free())?;
        }
        let est = expect(&g, &sub_chain(spec, k as u64), params.len(), |d, o| {
            let cfg = d.field();
            for (slot, p) in o.iter_mut().zip(&params) {
                *slot = laplace_exponent(&g, p, &cfg).exp();
            }
            Ok(())
        })?;
        for (j, p) in params.iter().enumerate() {
            let label = format!("{name}: a={:?} b={:?}", &p.a[..g.n_free()], &p.b[..g.n_free()]);
            let exact = laplace_closed_form(&g, p)?;
            cs.push(scalar_vs_exact(&format!("{label}: MC vs closed form"), &est.component(j), exact));
            if g.n_free() == 1 {
                let alg = GeneratorSet::empty();
                let v = p.to_group(&alg)?;
                let q = laplace_quadrature(&g, &v)?.body();
                cs.push(Coefficient::deterministic(format!("{label}: quadrature vs closed form"), q, exact, tol(spec, 1e-6)));
            }
        }
        notes.push(format!("{name}: rhat {:.4}, acceptance {:.3}", est.rhat, est.acceptance));
    }
    Ok(Outcome { coefficients: cs, notes })
}

fn radon_nikodym_check(spec: &CheckSpec) -> Result<Outcome> {
    let mut cs = Vec::new();
    // pointwise density ratio
    let mut rng = rng_for(spec, 100);
    let g = triangle(1.0, 0.6, 1.7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let cfg = random_config(&mut rng, &g, 1.0);
        let a = [rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)];
        let b = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let p = ScaleParams::new(&a, &b)?;
        let r1 = radon_nikodym(&g, &p, &cfg)?;
        let r2 = density_ratio(&g, &p, &cfg)?;
        worst = worst.max((r1 / r2 - 1.0).abs());
    }
    cs.push(Coefficient::deterministic("max |closed-form RN / density ratio - 1| (1000 points)", worst, 0.0, tol(spec, 1e-10)));

    // two-sided Monte Carlo on Gaussian bumps
    let centers = [(0.0, 0.0), (0.5, 0.5), (-0.5, 0.3), (0.3, -0.7), (-0.2, 1.0)];
    let bump = |c: (f64, f64), cfg: &FieldConfig, n: usize| -> f64 {
        let e: f64 = (0..n).map(|i| (cfg.u[i] - c.0).powi(2) + 0.5 * (cfg.s[i] - c.1).powi(2)).sum();
        (-e).exp()
    };
    for (k, (name, g)) in graphs(spec, vec![("edge", edge())]).into_iter().enumerate() {
        let (a, b) = spec.ab.unwrap_or((1.2, 0.3));
        let p = ScaleParams::uniform(&g, a, b)?;
        gate_real(&p, g.n_free())?;
        let n = g.n_free();
        let lap = laplace_closed_form(&g, &p)?;
        let lhs = expect(&g, &sub_chain(spec, 2 * k as u64), centers.len(), |d, o| {
            let cfg = d.field();
            let tilt = laplace_exponent(&g, &p, &cfg).exp();
            for (slot, &c) in o.iter_mut().zip(&centers) {
                *slot = bump(c, &cfg, n) * tilt;
            }
            Ok(())
        })?;
        let ga = rescale_weights(&p, &g)?;
        let rhs = expect(&ga, &sub_chain(spec, 2 * k as u64 + 1), centers.len(), |d, o| {
            let moved = scale_fields(&p, &d.field(), Direction::Forward);
            for (slot, &c) in o.iter_mut().zip(&centers) {
                *slot = lap * bump(c, &moved, n);
            }
            Ok(())
        })?;
        for (j, c) in centers.iter().enumerate() {
            cs.push(scalar_vs_scalar(
                &format!("{name}: bump at {c:?}: E_W[f e^tilt] vs L E_Wa[f o S]"),
                &lhs.component(j),
                &rhs.component(j),
            ));
        }
    }
    Ok(Outcome { coefficients: cs, notes: vec![] })
}

fn laplace_grassmann_check(spec: &CheckSpec) -> Result<Outcome> {
    let mut cs = Vec::new();
    let (a, b) = spec.ab.unwrap_or((1.1, 0.2));
    for (k, (name, g)) in graphs(spec, vec![("edge", edge())]).into_iter().enumerate() {
        // real a with odd parameters, then a Grassmann a from a soul-free first component of π
        let v_real = kappa_group(&g, a, 0.0, b, 0.8, -0.6)?;
        let mut pi = LaplaceParams::from_group(&v_real);
        for c in &mut pi.c {
            *c = GrassmannElement::scalar(c.algebra(), c.body());
        }
        let v_soul = pi.to_group()?;
        for (tag, v) in [("real a", &v_real), ("a = sqrt(1 + c - b^2 - 2 chibar chi)", &v_soul)] {
            let label = format!("{name}, {tag}");
            cs.extend(prefix(grassmann_laplace_check(&g, v, &sub_chain(spec, k as u64))?, &label));
            if g.n_free() == 1 {
                let q = laplace_quadrature(&g, v)?.to_complex();
                let exact = crate::scaling::laplace_grassmann(&g, v)?.to_complex();
                cs.extend(compare_elements(&format!("{label}: quadrature vs closed form"), &q, &exact, tol(spec, 1e-6)));
            }
        }
    }
    Ok(Outcome { coefficients: cs, notes: vec![] })
}

fn image_measure_super(spec: &CheckSpec) -> Result<Outcome> {
    let f = SuperObservable::real("bump psibar_1 psi_1", Parity::Even, |p| {
        let du = p.u[0].add_scalar(-0.2);
        let w = (-(&(&du * &du) + &(&p.s[0] * &p.s[0] * 0.5))).exp()?;
        Ok(&w * &(&p.psibar[0] * &p.psi[0]))
    });
    let mut cs = Vec::new();
    for (k, (name, g)) in graphs(spec, vec![("edge", edge())]).into_iter().enumerate() {
        let (a, b) = spec.ab.unwrap_or((1.3, 0.2));
        let empty = GeneratorSet::empty();
        let v_real = GroupElement::from_real(&empty, &vec![a; g.n_free()], &vec![b; g.n_free()])?;
        let v_odd = kappa_group(&g, a, 0.1, b, 0.5, 0.4)?;
        cs.extend(prefix(super_image_measure_check(&g, &v_real, &f, &sub_chain(spec, 2 * k as u64))?, &format!("{name}, real [a,b]")));
        cs.extend(prefix(
            super_image_measure_check(&g, &v_odd, &f, &sub_chain(spec, 2 * k as u64 + 1))?,
            &format!("{name}, [a,b,chibar,chi] with souls"),
        ));
    }
    Ok(Outcome { coefficients: cs, notes: vec![] })
}

fn ward(spec: &CheckSpec) -> Result<Outcome> {
    let mut cs = Vec::new();
    let cases: Vec<(String, Graph, Vec<f64>, bool)> = match &spec.graph {
        Some(g) => {
            let mut alpha = vec![0.0; g.n_free()];
            alpha[0] = -1.0;
            vec![("graph".into(), g.clone(), alpha, true)]
        }
        None => vec![
            ("edge, alpha_1 = -1".into(), edge(), vec![-1.0], false),
            ("triangle with tau".into(), tri(), vec![-0.5, -0.3], true),
        ],
    };
    for (k, (name, g, alpha, with_tau)) in cases.into_iter().enumerate() {
        cs.extend(prefix(ward_check(&g, &alpha, with_tau, &sub_chain(spec, k as u64))?, &name));
    }
    Ok(Outcome { coefficients: cs, notes: vec![] })
}

fn universe_index(t: &GraphTower, id: &str) -> Result<usize> {
    t.universe().iter().position(|x| x == id).ok_or_else(|| Error::Graph(format!("`{id}` is not in the universe")))
}

fn alpha_on(t: &GraphTower, entries: &[(&str, f64)]) -> Result<Vec<f64>> {
    let mut a = vec![0.0; t.universe().len()];
    for &(id, x) in entries {
        a[universe_index(t, id)?] = x;
    }
    Ok(a)
}

/// Tilt `(c, b)` on `V_n` from `(a, b)` pairs cycled over the level.
fn tilt(t: &GraphTower, n: usize, pairs: &[(f64, f64)]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = t.level(n)?.len();
    let c = (0..k).map(|i| {
        let (a, b) = pairs[i % pairs.len()];
        a * a + b * b - 1.0
    });
    let b = (0..k).map(|i| pairs[i % pairs.len()].1);
    Ok((c.collect(), b.collect()))
}

/// Default towers with two supported vertices of `α` each: one inside `V_n`
/// and one outside.
fn tower_cases(spec: &CheckSpec) -> Result<Vec<(String, GraphTower, usize, Vec<f64>)>> {
    let mut out = Vec::new();
    for (name, t) in towers(spec, vec![("line", line_tower()), ("Z", z_tower())]) {
        for n in 0..t.n_levels() - 1 {
            let level = t.level(n)?;
            let inside = level[0];
            let outside = (0..t.universe().len()).rev().find(|k| !level.contains(k));
            let mut alpha = vec![0.0; t.universe().len()];
            alpha[inside] = -0.5;
            if let Some(o) = outside {
                alpha[o] = -0.7;
            }
            out.push((format!("{name} tower, level {n}"), t.clone(), n, alpha));
        }
    }
    Ok(out)
}

fn martingale_generating(spec: &CheckSpec) -> Result<Outcome> {
    let mut cs = Vec::new();
    let pairs = [(1.1, 0.2), (0.95, -0.1)];
    for (k, (name, t, n, alpha)) in tower_cases(spec)?.into_iter().enumerate() {
        let (c, b) = tilt(&t, n, &pairs)?;
        let m = MartingaleSpec { alpha, c, b, ..Default::default() };
        cs.extend(prefix(susy_martingale_check(&t, n, &m, &sub_chain(spec, k as u64))?, &name));
    }
    if spec.tower.is_none() {
        // the supersymmetric version: odd τ on two vertices and one χ-pair in the tilt
        let t = line_tower();
        let (c, b) = tilt(&t, 0, &pairs)?;
        let m = MartingaleSpec {
            alpha: alpha_on(&t, &[("1", -0.5)])?,
            tau: vec![universe_index(&t, "1")?, universe_index(&t, "2")?],
            c,
            b,
            chi: Some((vec![0.6], vec![-0.4])),
            ..Default::default()
        };
        cs.extend(prefix(susy_martingale_check(&t, 0, &m, &sub_chain(spec, 100))?, "line tower, level 0, tau and chi"));
        let (c, b) = tilt(&t, 0, &pairs)?;
        let m = MartingaleSpec {
            tau: vec![universe_index(&t, "1")?, universe_index(&t, "2")?],
            c,
            b,
            phi_monomial: Some((vec![0], vec![0])),
            ..Default::default()
        };
        cs.extend(prefix(susy_martingale_check(&t, 0, &m, &sub_chain(spec, 101))?, "line tower, level 0, phibar_1 phi_1 monomial"));
    }
    Ok(Outcome { coefficients: cs, notes: vec![] })
}

fn derivative_cases(t: &GraphTower, n: usize) -> Result<Vec<Vec<usize>>> {
    let level = t.level(n)?;
    let j = level[0];
    let out = (0..t.universe().len()).find(|k| !level.contains(k) && t.level(n + 1).map(|l| l.contains(k)).unwrap_or(false));
    let l = out.unwrap_or(j);
    Ok(vec![vec![j], vec![j, l], vec![j, j, l]])
}

fn martingale_derivatives(spec: &CheckSpec) -> Result<Outcome> {
    let mut cs = Vec::new();
    let pairs = [(1.1, 0.2), (0.95, -0.1)];
    let mut stream = 0u64;
    for (name, t) in towers(spec, vec![("line", line_tower()), ("Z", z_tower())]) {
        let n = 0;
        let (c, b) = tilt(&t, n, &pairs)?;
        for jset in derivative_cases(&t, n)? {
            let ids: Vec<&str> = jset.iter().map(|&k| t.universe()[k].as_str()).collect();
            let mut alpha = vec![0.0; t.universe().len()];
            alpha[t.level(n)?[0]] = -0.3;
            let m = MartingaleSpec { alpha, derivative: jset.clone(), c: c.clone(), b: b.clone(), ..Default::default() };
            cs.extend(prefix(
                susy_martingale_check(&t, n, &m, &sub_chain(spec, stream))?,
                &format!("{name} tower, M_{{{}}}", ids.join(",")),
            ));
            stream += 1;
        }
    }
    Ok(Outcome { coefficients: cs, notes: vec![] })
}

fn martingale_special_cases(spec: &CheckSpec) -> Result<Outcome> {
    let mut cs = Vec::new();
    let (c, b) = (vec![0.0], vec![0.0]);
    let mut stream = 0u64;
    for (name, t) in towers(spec, vec![("line", line_tower())]) {
        let n = 0;
        let level = t.level(n)?;
        let (c, b) = if level.len() == c.len() { (c.clone(), b.clone()) } else { (vec![0.0; level.len()], vec![0.0; level.len()]) };
        let j = level[0];
        let id = &t.universe()[j];
        let cases = [
            (vec![j], format!("e^u_{id}"), format!("s_{id} e^u_{id}")),
            (vec![j, j], format!("e^(2u_{id}) (1 - s_{id}^2)"), format!("2 s_{id} e^(2u_{id})")),
        ];
        for (jset, re, im) in cases {
            let m = MartingaleSpec { derivative: jset, c: c.clone(), b: b.clone(), ..Default::default() };
            let mut out = susy_martingale_check(&t, n, &m, &sub_chain(spec, stream))?;
            stream += 1;
            for co in &mut out {
                co.label = co.label.replace("[re]", &format!("[Re: {re}]")).replace("[im]", &format!("[Im: {im}]"));
            }
            cs.extend(prefix(out, &format!("{name} tower")));
        }
    }
    Ok(Outcome { coefficients: cs, notes: vec![] })
}

fn consistency(spec: &CheckSpec) -> Result<Outcome> {
    let mut cs = Vec::new();
    let mut stream = 0u64;
    for (name, t) in towers(spec, vec![("line", line_tower()), ("Z", z_tower())]) {
        for n in 0..t.n_levels() - 1 {
            let level = t.level(n)?;
            let (pa, pb) = spec.ab.unwrap_or((1.2, 0.3));
            let mut a = vec![1.0; t.universe().len()];
            let mut b = vec![0.0; t.universe().len()];
            for (k, &q) in level.iter().enumerate() {
                a[q] = if k % 2 == 0 { pa } else { 0.9 };
                b[q] = if k % 2 == 0 { pb } else { -0.2 };
            }
            let out = consistency_check(&t, n, &a, &b, &sub_chain(spec, stream), tol(spec, 1e-14))?;
            stream += 1;
            cs.extend(prefix(out, &format!("{name} tower, level {n}")));
        }
    }
    Ok(Outcome { coefficients: cs, notes: vec![] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ward_quadratures_agree() {
        let (h, c) = ward_quadratures(1.0, -1.0, 0.7).unwrap();
        let e = (-1f64).exp();
        assert!((h.body().re - e).abs() < 1e-6, "{h}");
        assert!((c.body().re - e).abs() < 1e-6, "{c}");
    }

    #[test]
    fn random_graphs_are_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=5 {
            assert_eq!(random_graph(&mut rng, n).unwrap().n_tilde(), n);
        }
    }
}
