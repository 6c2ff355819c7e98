//! The full `H^{2|2}` sector.
//!
//! Superfunctions are evaluated at a [`SuperPoint`]: even coordinates `u, s`
//! and odd coordinates `ψ̄, ψ`, all represented as Grassmann elements over a
//! combined algebra (field generators followed by parameter generators).  At
//! a Monte Carlo draw `u, s` are plain numbers; after a super scaling they pick
//! up nilpotent souls and every function of them becomes a finite Taylor
//! series.
//!
//! Expectations are Berezin-first: the odd integral is done exactly for each
//! sampled `(u, s)` (see [`crate::sampler::super_expect`]), so the Grassmann
//! sector contributes no variance of its own.

pub mod checks;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grassmann::{
    ComplexGrassmann, ElemMatrix, GeneratorSet, GrassmannElement, GroupComponent, GroupElement, SuperMatrix,
};
use crate::graph::Graph;
use crate::sampler::SuperAlgebra;
use crate::sigma_core::{compute_beta, compute_theta, FieldConfig};

/// A point of superspace over `Ṽ`; the pinned entries are `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperPoint {
    pub u: Vec<GrassmannElement>,
    pub s: Vec<GrassmannElement>,
    pub psibar: Vec<GrassmannElement>,
    pub psi: Vec<GrassmannElement>,
}

impl SuperPoint {
    /// Real `(u, s)` together with the odd generators of `sa`.
    pub fn at(sa: &SuperAlgebra, cfg: &FieldConfig) -> Self {
        let alg = sa.combined();
        let n = cfg.u.len();
        Self {
            u: cfg.u.iter().map(|&x| GrassmannElement::scalar(alg, x)).collect(),
            s: cfg.s.iter().map(|&x| GrassmannElement::scalar(alg, x)).collect(),
            psibar: (0..n).map(|i| sa.psibar(i)).collect(),
            psi: (0..n).map(|i| sa.psi(i)).collect(),
        }
    }

    pub fn algebra(&self) -> &Arc<GeneratorSet> {
        self.u[0].algebra()
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// Declared parity of a superfunction's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

type Evaluator = dyn Fn(&SuperPoint) -> Result<ComplexGrassmann> + Send + Sync;

/// A superfunction `f(u, s, ψ̄, ψ)` with values in the combined algebra.
///
/// Evaluators must be pure and must only use Grassmann arithmetic on the
/// point's coordinates, so that they can be evaluated at scaled points.
#[derive(Clone)]
pub struct SuperObservable {
    name: String,
    parity: Parity,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for SuperObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SuperObservable").field("name", &self.name).field("parity", &self.parity).finish()
    }
}

impl SuperObservable {
    pub fn new<F>(name: impl Into<String>, parity: Parity, f: F) -> Self
    where
        F: Fn(&SuperPoint) -> Result<ComplexGrassmann> + Send + Sync + 'static,
    {
        Self { name: name.into(), parity, eval: Arc::new(f) }
    }

    /// Wrap a real-valued evaluator.
    pub fn real<F>(name: impl Into<String>, parity: Parity, f: F) -> Self
    where
        F: Fn(&SuperPoint) -> Result<GrassmannElement> + Send + Sync + 'static,
    {
        Self::new(name, parity, move |p| Ok(f(p)?.to_complex()))
    }

    pub fn constant_one() -> Self {
        Self::new("1", Parity::Even, |p| Ok(ComplexGrassmann::one(p.algebra())))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Evaluate and enforce the declared parity.
    pub fn eval(&self, p: &SuperPoint) -> Result<ComplexGrassmann> {
        let v = (self.eval)(p)?;
        let ok = match self.parity {
            Parity::Even => v.is_even(),
            Parity::Odd => v.is_odd(),
            Parity::Mixed => true,
        };
        if !ok {
            return Err(Error::Parity(format!("observable `{}` violated its declared parity", self.name)));
        }
        if !v.is_finite() {
            return Err(Error::Estimation(format!("observable `{}` is not finite", self.name)));
        }
        Ok(v)
    }
}

/// Which odd observable to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiKind {
    Phi,
    PhiBar,
}

/// `φ_i = Σ_j W_ij e^{u_j}(ψ_i − ψ_j)` (resp. `φ̄` with `ψ̄`) for `i ∈ V`, i.e.
/// `e^{−u} A_VV(u) ψ_V`.
pub fn compute_phi(g: &Graph, u: &[f64], sa: &SuperAlgebra, kind: PhiKind) -> Vec<GrassmannElement> {
    let field = |i: usize| match kind {
        PhiKind::Phi => sa.psi(i),
        PhiKind::PhiBar => sa.psibar(i),
    };
    let n = g.n_tilde();
    (0..g.n_free())
        .map(|i| {
            let mut acc = GrassmannElement::zero(sa.combined());
            let fi = field(i);
            for j in 0..n {
                let w = g.weight(i, j);
                if w != 0.0 {
                    acc += &((&fi - &field(j)) * (w * u[j].exp()));
                }
            }
            acc
        })
        .collect()
}

/// `ϖ = (β, θ, φ̄, φ)` at a real point.
#[derive(Debug, Clone)]
pub struct LaplaceObservablePack {
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub phibar: Vec<GrassmannElement>,
    pub phi: Vec<GrassmannElement>,
}

impl LaplaceObservablePack {
    pub fn at(g: &Graph, sa: &SuperAlgebra, cfg: &FieldConfig) -> Self {
        Self {
            beta: compute_beta(g, &cfg.u),
            theta: compute_theta(g, &cfg.u, &cfg.s),
            phibar: compute_phi(g, &cfg.u, sa, PhiKind::PhiBar),
            phi: compute_phi(g, &cfg.u, sa, PhiKind::Phi),
        }
    }
}

/// `π = (a² + b² + 2χ̄χ − 1, b, χ̄, χ)` over `V`, in the parameter algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceParams {
    pub c: Vec<GrassmannElement>,
    pub b: Vec<GrassmannElement>,
    pub chibar: Vec<GrassmannElement>,
    pub chi: Vec<GrassmannElement>,
}

impl LaplaceParams {
    /// Read `π` off a group element (free components only).
    pub fn from_group(v: &GroupElement) -> Self {
        let n = v.len() - 1;
        let mut p = Self { c: vec![], b: vec![], chibar: vec![], chi: vec![] };
        for comp in &v.components()[..n] {
            let c = (&comp.a * &comp.a) + (&comp.b * &comp.b) + (&comp.chibar * &comp.chi) * 2.0;
            p.c.push(c.add_scalar(-1.0));
            p.b.push(comp.b.clone());
            p.chibar.push(comp.chibar.clone());
            p.chi.push(comp.chi.clone());
        }
        p
    }

    /// The group element with this `π`: `a = √(1 + c − b² − 2χ̄χ)`.
    pub fn to_group(&self) -> Result<GroupElement> {
        let n = self.c.len();
        if self.b.len() != n || self.chibar.len() != n || self.chi.len() != n {
            return Err(Error::Shape("π components differ in length".into()));
        }
        let alg = match self.c.first() {
            Some(x) => x.algebra().clone(),
            None => return Err(Error::Shape("π is empty".into())),
        };
        let mut comps = Vec::with_capacity(n + 1);
        for i in 0..n {
            let a2 = (&self.c[i] - &(&self.b[i] * &self.b[i])) - (&self.chibar[i] * &self.chi[i]) * 2.0;
            let a2 = a2.add_scalar(1.0);
            if !(a2.body() > 0.0) {
                return Err(Error::Domain(format!("1 + c − b² must be positive at vertex {i}, got {}", a2.body())));
            }
            comps.push(GroupComponent {
                a: a2.sqrt()?,
                b: self.b[i].clone(),
                chibar: self.chibar[i].clone(),
                chi: self.chi[i].clone(),
            });
        }
        comps.push(GroupComponent::identity(&alg));
        GroupElement::new(&alg, comps)
    }

    /// `⟨π, ϖ⟩ = ⟨c, β⟩ + ⟨b, θ⟩ + ⟨χ̄, φ⟩ + ⟨φ̄, χ⟩`, with `π` lifted into the
    /// algebra of `ϖ`.  Mind the factor order of the last pairing.
    pub fn pair(&self, w: &LaplaceObservablePack, sa: &SuperAlgebra) -> Result<GrassmannElement> {
        let mut acc = GrassmannElement::zero(sa.combined());
        for i in 0..self.c.len() {
            acc += &(sa.lift(&self.c[i])? * w.beta[i]);
            acc += &(sa.lift(&self.b[i])? * w.theta[i]);
            acc += &(&sa.lift(&self.chibar[i])? * &w.phi[i]);
            acc += &(&w.phibar[i] * &sa.lift(&self.chi[i])?);
        }
        Ok(acc)
    }

    /// The real part of `π` only, i.e. the tilt `(c, b)` for real parameters.
    pub fn real(alg: &Arc<GeneratorSet>, c: &[f64], b: &[f64]) -> Self {
        let z = GrassmannElement::zero(alg);
        Self {
            c: c.iter().map(|&x| GrassmannElement::scalar(alg, x)).collect(),
            b: b.iter().map(|&x| GrassmannElement::scalar(alg, x)).collect(),
            chibar: vec![z.clone(); c.len()],
            chi: vec![z; c.len()],
        }
    }
}

/// Edge weights with values in the parameter algebra (positive bodies),
/// aligned with the edge list of a real body graph.
#[derive(Debug, Clone)]
pub struct SuperWeights {
    body: Graph,
    weights: Vec<GrassmannElement>,
}

impl SuperWeights {
    pub fn real(g: &Graph, params: &Arc<GeneratorSet>) -> Self {
        let weights = g.edges().iter().map(|&(_, _, w)| GrassmannElement::scalar(params, w)).collect();
        Self { body: g.clone(), weights }
    }

    /// `W^a_ij = a_i a_j W_ij`.
    pub fn rescaled(g: &Graph, v: &GroupElement) -> Result<Self> {
        if v.len() != g.n_tilde() {
            return Err(Error::Shape(format!("group element needs {} components", g.n_tilde())));
        }
        let weights: Vec<GrassmannElement> = g
            .edges()
            .iter()
            .map(|&(i, j, w)| (&v.component(i).a * &v.component(j).a) * w)
            .collect();
        Self::from_parts(g, weights)
    }

    /// Pair an edge-aligned list of weights with the topology of `g`; the body
    /// graph is rebuilt from the bodies of `weights`.
    pub fn from_parts(g: &Graph, weights: Vec<GrassmannElement>) -> Result<Self> {
        if weights.len() != g.edges().len() {
            return Err(Error::Shape("one weight per edge is required".into()));
        }
        let mut w = nalgebra::DMatrix::zeros(g.n_tilde(), g.n_tilde());
        for (&(i, j, _), x) in g.edges().iter().zip(&weights) {
            if !x.is_even() {
                return Err(Error::Parity("weights must be even".into()));
            }
            if !(x.body() > 0.0) {
                return Err(Error::Domain(format!("weight body {} is not positive", x.body())));
            }
            w[(i, j)] = x.body();
            w[(j, i)] = x.body();
        }
        Ok(Self { body: g.with_weights(w)?, weights })
    }

    pub fn body(&self) -> &Graph {
        &self.body
    }

    pub fn weights(&self) -> &[GrassmannElement] {
        &self.weights
    }

    pub fn is_real(&self) -> bool {
        self.weights.iter().all(|w| w.soul().is_zero())
    }
}

/// Exponent of the superdensity: `−Σ_edges W_ij[(cosh(u_i−u_j) − 1) +
/// ½(s_i−s_j)² e^{u_i+u_j} + (ψ̄_i−ψ̄_j)(ψ_i−ψ_j) e^{u_i+u_j}]`.
pub(crate) fn super_action(sw: &SuperWeights, sa: &SuperAlgebra, cfg: &FieldConfig, with_odd: bool) -> Result<GrassmannElement> {
    let alg = sa.combined();
    let mut acc = GrassmannElement::zero(alg);
    for (&(i, j, _), w) in sw.body.edges().iter().zip(&sw.weights) {
        let (u, s) = (&cfg.u, &cfg.s);
        let e = (u[i] + u[j]).exp();
        let bos = ((u[i] - u[j]).cosh() - 1.0) + 0.5 * (s[i] - s[j]).powi(2) * e;
        let mut t = GrassmannElement::scalar(alg, bos);
        if with_odd {
            t += &(&(&sa.psibar(i) - &sa.psibar(j)) * &(&sa.psi(i) - &sa.psi(j)) * e);
        }
        acc -= &(&sa.lift(w)? * &t);
    }
    Ok(acc)
}

/// `e^{−½⟨s,As⟩} e^{−⟨ψ̄,Aψ⟩} ∏_edges e^{−W_ij(cosh(u_i−u_j)−1)}` over the
/// combined algebra.
pub fn bold_rho(sw: &SuperWeights, sa: &SuperAlgebra, cfg: &FieldConfig) -> Result<GrassmannElement> {
    super_action(sw, sa, cfg, true)?.exp()
}

/// The per-sample factor `R · e^{−⟨ψ̄, A'ψ⟩}` used when integrating against
/// `μ^{W'}` while sampling from `μ^{body(W')}`: the super density of `W'`
/// divided by the bosonic density of its body.  For real weights this is just
/// `e^{−⟨ψ̄,Aψ⟩}`.
pub fn reweighted_gaussian(sw: &SuperWeights, sa: &SuperAlgebra, cfg: &FieldConfig) -> Result<GrassmannElement> {
    let full = super_action(sw, sa, cfg, true)?;
    let real = SuperWeights::real(&sw.body, sa.params());
    let bos = super_action(&real, sa, cfg, false)?;
    (&full - &bos).exp()
}

/// Lift every component of `v` into `target`.
fn lift_group(v: &GroupElement, target: &Arc<GeneratorSet>) -> Result<Vec<[GrassmannElement; 4]>> {
    v.components()
        .iter()
        .map(|c| Ok([c.a.embed(target)?, c.b.embed(target)?, c.chibar.embed(target)?, c.chi.embed(target)?]))
        .collect()
}

/// `𝒮_v(u, s, ψ̄, ψ) = (u + log a, s − e^{−u} b a⁻¹, ψ̄ − e^{−u} χ̄ a⁻¹, ψ − e^{−u} χ a⁻¹)`.
pub fn super_scale_point(v: &GroupElement, p: &SuperPoint) -> Result<SuperPoint> {
    if v.len() != p.len() {
        return Err(Error::Shape(format!("group element has {} components, point has {}", v.len(), p.len())));
    }
    let comps = lift_group(v, p.algebra())?;
    let mut out = SuperPoint { u: vec![], s: vec![], psibar: vec![], psi: vec![] };
    for (i, [a, b, chibar, chi]) in comps.iter().enumerate() {
        let e = (-&p.u[i]).exp()?;
        let ainv = a.inverse()?;
        let k = &e * &ainv;
        out.u.push(&p.u[i] + &a.ln()?);
        out.s.push(&p.s[i] - &(&k * b));
        out.psibar.push(&p.psibar[i] - &(&k * chibar));
        out.psi.push(&p.psi[i] - &(&k * chi));
    }
    Ok(out)
}

/// `𝒮*_v f = f ∘ 𝒮_v`.
///
/// Pullbacks compose in reverse: `𝒮*_{v·v'} = 𝒮*_{v'} ∘ 𝒮*_v`, because the
/// point maps satisfy `𝒮_v ∘ 𝒮_{v'} = 𝒮_{v·v'}`.
pub fn super_scale_pullback(v: &GroupElement, f: &SuperObservable) -> SuperObservable {
    let v = v.clone();
    let inner = f.clone();
    SuperObservable::new(format!("S*({})", f.name()), f.parity(), move |p| {
        inner.eval(&super_scale_point(&v, p)?)
    })
}

/// Super Jacobi matrix `∂x'/∂x` of `𝒮_v` in the layout `(u_V, s_V | ψ̄_V, ψ_V)`.
pub fn super_jacobian(v: &GroupElement, u: &[f64]) -> Result<SuperMatrix<f64>> {
    let n = v.len() - 1;
    if u.len() < n {
        return Err(Error::Shape(format!("u needs at least {n} entries")));
    }
    let alg = v.algebra();
    let mut a = ElemMatrix::identity(alg, 2 * n);
    let sigma = ElemMatrix::zeros(alg, 2 * n, 2 * n);
    let mut gamma = ElemMatrix::zeros(alg, 2 * n, 2 * n);
    let b = ElemMatrix::identity(alg, 2 * n);
    for (i, c) in v.components()[..n].iter().enumerate() {
        let k = c.a.inverse()? * (-u[i]).exp();
        a.set(n + i, i, &k * &c.b);
        gamma.set(i, i, &k * &c.chibar);
        gamma.set(n + i, i, &k * &c.chi);
    }
    SuperMatrix::new(a, sigma, gamma, b)
}

/// `A^W(u)` as a matrix over `Ṽ` with entries depending on even `u`.
pub fn a_matrix_super(sw: &SuperWeights, u: &[GrassmannElement]) -> Result<ElemMatrix<f64>> {
    let n = sw.body.n_tilde();
    let alg = u[0].algebra().clone();
    let mut m = ElemMatrix::zeros(&alg, n, n);
    for (&(i, j, _), w) in sw.body.edges().iter().zip(&sw.weights) {
        let t = &w.embed(&alg)? * &(&u[i] + &u[j]).exp()?;
        m.set(i, j, m.get(i, j) - &t);
        m.set(j, i, m.get(j, i) - &t);
        m.set(i, i, m.get(i, i) + &t);
        m.set(j, j, m.get(j, j) + &t);
    }
    Ok(m)
}

/// Reject tilts whose integrand has infinite variance under the sampler.
///
/// The tilt `e^{−⟨c,β⟩−⟨b,θ⟩}` is integrable iff `1 + c − b² > 0` at every
/// vertex (the action stays bounded above); its square is integrable iff
/// `1 + 2c − 4b² > 0`, which for `c = a² + b² − 1` reads `2a² − 2b² > 1`.
pub fn decay_gate(c: &[f64], b: &[f64]) -> Result<()> {
    for (i, (&c, &b)) in c.iter().zip(b).enumerate() {
        if !(1.0 + c - b * b > 0.0) {
            return Err(Error::Domain(format!("tilt at vertex {i} is not integrable (1 + c − b² ≤ 0)")));
        }
        if !(1.0 + 2.0 * c - 4.0 * b * b > 0.0) {
            return Err(Error::Domain(format!(
                "tilt at vertex {i} has infinite variance (1 + 2c − 4b² ≤ 0); choose parameters with 2a² − 2b² > 1"
            )));
        }
    }
    Ok(())
}

/// `e^{⟨α, e^u(1+is)⟩ + ⟨τ, e^u(ψ̄ + iψ)⟩}` at a super point, `α` and `τ`
/// given over `Ṽ` (`τ` in the combined algebra, zero where absent).
pub fn ward_exponential(p: &SuperPoint, alpha: &[f64], tau: &[GrassmannElement]) -> Result<ComplexGrassmann> {
    let alg = p.algebra();
    let i = Complex64::new(0.0, 1.0);
    let mut acc = ComplexGrassmann::zero(alg);
    for k in 0..p.len() {
        let e = p.u[k].exp()?.to_complex();
        if alpha[k] != 0.0 {
            let z = (&p.s[k].to_complex() * i).add_scalar(Complex64::new(1.0, 0.0));
            acc += &(&e * &z * Complex64::new(alpha[k], 0.0));
        }
        if !tau[k].is_zero() {
            let odd = &p.psibar[k].to_complex() + &(&p.psi[k].to_complex() * i);
            acc += &(&tau[k].to_complex() * &(&e * &odd));
        }
    }
    acc.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{path, single_edge, triangle};
    use crate::sigma_core::{build_a_vv, rho_density, RhoMode};

    fn chi_algebra() -> Arc<GeneratorSet> {
        GeneratorSet::new(["chibar", "chi"]).unwrap()
    }

    fn sample_group(alg: &Arc<GeneratorSet>, n: usize, seed: f64) -> GroupElement {
        let kb = GrassmannElement::generator(alg, 0).unwrap();
        let k = GrassmannElement::generator(alg, 1).unwrap();
        let mut comps: Vec<GroupComponent> = (0..n)
            .map(|i| {
                let t = seed + i as f64;
                GroupComponent {
                    a: (&kb * &k * (0.3 * t.sin())).add_scalar(1.0 + 0.2 * t.cos().abs()),
                    b: (&kb * &k * 0.1).add_scalar(0.4 * t.sin()),
                    chibar: &kb * (0.5 + 0.1 * t),
                    chi: &k * (0.7 - 0.2 * t),
                }
            })
            .collect();
        comps.push(GroupComponent::identity(alg));
        GroupElement::new(alg, comps).unwrap()
    }

    #[test]
    fn phi_examples() {
        let g = single_edge(1.0);
        let sa = SuperAlgebra::new(&g, &GeneratorSet::empty()).unwrap();
        let phi = compute_phi(&g, &[0.0, 0.0], &sa, PhiKind::Phi);
        assert_eq!(phi[0], sa.psi(0));
        let g = path(2);
        let sa = SuperAlgebra::new(&g, &GeneratorSet::empty()).unwrap();
        let u = [0.3, -0.4, 0.0];
        let phi = compute_phi(&g, &u, &sa, PhiKind::Phi);
        let m = build_a_vv(&g, &u);
        for i in 0..2 {
            for j in 0..2 {
                let expect = (-u[i]).exp() * m[(i, j)];
                assert!((phi[i].coeff(1 << sa.psi_index(j)) - expect).abs() < 1e-14);
            }
        }
        // φ_1 carries −W_12 e^{u_2} on ψ_2: the e^{−u_1} row factor cancels the e^{u_1} in A_12
        assert!((phi[0].coeff(1 << sa.psi_index(1)) + u[1].exp()).abs() < 1e-14);
    }

    #[test]
    fn bold_rho_marginal() {
        let g = triangle(0.7, 1.3, 0.4);
        let sa = SuperAlgebra::new(&g, &GeneratorSet::empty()).unwrap();
        let cfg = FieldConfig::from_free(&[0.3, -0.6], &[1.1, -0.2]);
        let sw = SuperWeights::real(&g, sa.params());
        let r = bold_rho(&sw, &sa, &cfg).unwrap();
        let marg = sa.berezin(&r).unwrap().body();
        let rho = rho_density(&g, &cfg, RhoMode::Direct).unwrap().value;
        assert!((marg / rho - 1.0).abs() < 1e-12);
        let origin = bold_rho(&sw, &sa, &FieldConfig::origin(&g)).unwrap();
        assert!((origin.body() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_edge_psibar_psi_coefficient() {
        let g = single_edge(1.0);
        let sa = SuperAlgebra::new(&g, &GeneratorSet::empty()).unwrap();
        let cfg = FieldConfig::from_free(&[0.4], &[0.2]);
        let r = bold_rho(&SuperWeights::real(&g, sa.params()), &sa, &cfg).unwrap();
        let a11 = 0.4f64.exp();
        let coef = r.coeff_of(&[sa.psibar_index(0), sa.psi_index(0)]);
        assert!((coef + a11 * r.body()).abs() < 1e-14);
    }

    #[test]
    fn pullback_identity_and_round_trip() {
        let g = triangle(1.0, 1.0, 1.0);
        let params = chi_algebra();
        let sa = SuperAlgebra::new(&g, &params).unwrap();
        let f = SuperObservable::real("poly", Parity::Even, |p| {
            let q = &(&p.psibar[0] * &p.psi[1]) * &p.u[1];
            Ok((&(&p.u[0] * &p.s[1]) + &q).add_scalar(0.5) + (&p.s[0] * &p.s[0]))
        });
        let p = SuperPoint::at(&sa, &FieldConfig::from_free(&[0.2, -0.3], &[0.5, 0.1]));
        let id = GroupElement::identity(&params, 3);
        assert_eq!(super_scale_pullback(&id, &f).eval(&p).unwrap(), f.eval(&p).unwrap());
        let v = sample_group(&params, 2, 0.3);
        let back = super_scale_pullback(&v, &super_scale_pullback(&v.inv().unwrap(), &f));
        assert!(back.eval(&p).unwrap().approx_eq(&f.eval(&p).unwrap(), 1e-12));
    }

    #[test]
    fn pullbacks_compose_in_reverse() {
        let g = triangle(1.0, 1.0, 1.0);
        let params = chi_algebra();
        let sa = SuperAlgebra::new(&g, &params).unwrap();
        let f = SuperObservable::real("f", Parity::Mixed, |p| {
            Ok(&(&p.u[0] * &p.s[1]) + &(&p.psi[0] * &p.s[0]) + (&p.psibar[1] * &p.u[1]).add_scalar(1.0))
        });
        let p = SuperPoint::at(&sa, &FieldConfig::from_free(&[0.1, 0.7], &[-0.5, 0.9]));
        let v1 = sample_group(&params, 2, 0.1);
        let v2 = sample_group(&params, 2, 1.9);
        let prod = super_scale_pullback(&v1.mul(&v2).unwrap(), &f).eval(&p).unwrap();
        let seq = super_scale_pullback(&v2, &super_scale_pullback(&v1, &f)).eval(&p).unwrap();
        assert!(prod.approx_eq(&seq, 1e-12));
    }

    #[test]
    fn pullback_of_generating_martingale() {
        let g = single_edge(1.0);
        let params = GeneratorSet::new(["chibar", "chi", "tau"]).unwrap();
        let sa = SuperAlgebra::new(&g, &params).unwrap();
        let tau = vec![sa.param(2), GrassmannElement::zero(sa.combined())];
        let alpha = [-0.7, 0.0];
        let t2 = tau.clone();
        let m = SuperObservable::new("M", Parity::Even, move |p| ward_exponential(p, &alpha, &t2));
        let kb = GrassmannElement::generator(&params, 0).unwrap();
        let k = GrassmannElement::generator(&params, 1).unwrap();
        let comp = GroupComponent {
            a: (&kb * &k * 0.2).add_scalar(1.3),
            b: GrassmannElement::scalar(&params, -0.4),
            chibar: kb * 0.6,
            chi: k * 1.1,
        };
        let v = GroupElement::new(&params, vec![comp.clone(), GroupComponent::identity(&params)]).unwrap();
        let p = SuperPoint::at(&sa, &FieldConfig::from_free(&[0.35], &[-0.8]));
        let lhs = super_scale_pullback(&v, &m).eval(&p).unwrap();
        // e^{⟨aα, e^u(1+is)⟩ + ⟨aτ, e^u(ψ̄+iψ)⟩} e^{−⟨α, ib⟩ − ⟨τ, χ̄ + iχ⟩}
        let a = sa.lift(&comp.a).unwrap();
        let scaled_tau: Vec<GrassmannElement> = vec![&tau[0] * &a, tau[1].clone()];
        let i = Complex64::new(0.0, 1.0);
        let mut rhs = ComplexGrassmann::zero(sa.combined());
        let e = (0.35f64).exp();
        rhs += &((&a.to_complex() * Complex64::new(alpha[0] * e, 0.0)) * Complex64::new(1.0, -0.8));
        let odd = &p.psibar[0].to_complex() + &(&p.psi[0].to_complex() * i);
        rhs += &(&scaled_tau[0].to_complex() * &(odd * Complex64::new(e, 0.0)));
        rhs += &(&sa.lift(&comp.b).unwrap().to_complex() * (-i * alpha[0]));
        let chis = &sa.lift(&comp.chibar).unwrap().to_complex() + &(&sa.lift(&comp.chi).unwrap().to_complex() * i);
        rhs -= &(&tau[0].to_complex() * &chis);
        assert!(lhs.approx_eq(&rhs.exp().unwrap(), 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn jacobian_sdet_is_one() {
        let params = chi_algebra();
        let id = GroupElement::identity(&params, 3);
        let j = super_jacobian(&id, &[0.1, 0.2]).unwrap();
        assert_eq!(j.sdet().unwrap(), GrassmannElement::one(&params));
        for t in [0.0, 0.4, 2.2] {
            let v = sample_group(&params, 2, t);
            let j = super_jacobian(&v, &[0.3 * t, -1.0]).unwrap();
            let d = j.sdet().unwrap();
            assert!(d.approx_eq(&GrassmannElement::one(&params), 1e-14), "{d}");
        }
        // b-only: the even block is unit lower triangular and Γ vanishes
        let v = GroupElement::from_real(&params, &[1.0, 1.0], &[0.5, -0.2]).unwrap();
        let j = super_jacobian(&v, &[0.0, 0.0]).unwrap();
        for r in 0..4 {
            for c in (r + 1)..4 {
                assert!(j.a.get(r, c).is_zero());
            }
            for c in 0..4 {
                assert!(j.gamma.get(r, c).is_zero());
            }
        }
        assert_eq!(j.a.get(2, 0).body(), 0.5);
    }

    #[test]
    fn a_is_scale_invariant_as_superfunction() {
        let g = triangle(0.8, 1.2, 0.5);
        let params = chi_algebra();
        let v = sample_group(&params, 2, 0.9);
        let sa = SuperAlgebra::new(&g, &params).unwrap();
        let p = SuperPoint::at(&sa, &FieldConfig::from_free(&[0.2, -0.5], &[0.0, 0.0]));
        let scaled = SuperWeights::rescaled(&g, &v).unwrap();
        let back = super_scale_point(&v.inv().unwrap(), &p).unwrap();
        let lhs = a_matrix_super(&scaled, &back.u).unwrap();
        let rhs = a_matrix_super(&SuperWeights::real(&g, &params), &p.u).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(lhs.get(i, j).approx_eq(rhs.get(i, j), 1e-12));
            }
        }
    }

    #[test]
    fn pi_round_trip() {
        let params = chi_algebra();
        let v = sample_group(&params, 2, 0.5);
        let pi = LaplaceParams::from_group(&v);
        let w = pi.to_group().unwrap();
        for (x, y) in v.components().iter().zip(w.components()) {
            assert!(x.a.approx_eq(&y.a, 1e-12));
        }
    }

    #[test]
    fn reweighting_is_trivial_for_real_weights() {
        let g = triangle(0.8, 1.2, 0.5);
        let sa = SuperAlgebra::new(&g, &GeneratorSet::empty()).unwrap();
        let cfg = FieldConfig::from_free(&[0.2, -0.5], &[0.3, 0.1]);
        let r = reweighted_gaussian(&SuperWeights::real(&g, sa.params()), &sa, &cfg).unwrap();
        let direct = crate::sampler::psi_gaussian(&g, &sa, &cfg.u).unwrap();
        assert!(r.approx_eq(&direct, 1e-12));
    }

    #[test]
    fn gate() {
        assert!(decay_gate(&[1.2f64.powi(2) + 0.09 - 1.0], &[0.3]).is_ok());
        assert!(decay_gate(&[0.8f64.powi(2) + 0.25 - 1.0], &[0.5]).is_err());
        assert!(decay_gate(&[-2.0], &[0.0]).is_err());
    }
}
