//! Monte Carlo and quadrature checks of the super identities: the
//! Grassmann–Laplace transform, the super image measure, Ward identities,
//! consistency along a wired tower and the martingale hierarchy.

use std::collections::HashSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    decay_gate, reweighted_gaussian, super_scale_pullback, ward_exponential, LaplaceObservablePack, LaplaceParams,
    SuperObservable, SuperPoint, SuperWeights,
};
use crate::error::{Error, Result};
use crate::grassmann::{ComplexGrassmann, GeneratorSet, GrassmannElement, GroupElement};
use crate::graph::{Graph, GraphTower};
use crate::sampler::{derive_seed, expect, super_expect, ChainConfig, SuperAlgebra};
use crate::scaling::{laplace_closed_form, laplace_grassmann, ScaleParams};
use crate::sigma_core::{build_a_vv, compute_beta, compute_theta, FieldConfig};
use crate::verify::quadrature::{integrate_2d, QuadOptions};
use crate::verify::report::{grassmann_vs_exact, grassmann_vs_grassmann, scalar_vs_exact, scalar_vs_scalar, Coefficient};

/// `−⟨ψ̄, A_VV(u) ψ⟩` over the combined algebra.
pub fn psi_exponent(g: &Graph, sa: &SuperAlgebra, u: &[f64]) -> GrassmannElement {
    let a = build_a_vv(g, u);
    let alg = sa.combined().clone();
    -sa.psi_form(&|i, j| GrassmannElement::scalar(&alg, a[(i, j)]))
}

/// Bodies of `(c, b)` of a parameter pack, for the decay gate.
fn pi_bodies(pi: &LaplaceParams) -> (Vec<f64>, Vec<f64>) {
    (pi.c.iter().map(|x| x.body()).collect(), pi.b.iter().map(|x| x.body()).collect())
}

/// `e^{−⟨ψ̄,Aψ⟩ − ⟨π, ϖ⟩}` at a real point.
pub fn laplace_integrand(g: &Graph, sa: &SuperAlgebra, pi: &LaplaceParams, cfg: &FieldConfig) -> Result<GrassmannElement> {
    let pack = LaplaceObservablePack::at(g, sa, cfg);
    (&psi_exponent(g, sa, &cfg.u) - &pi.pair(&pack, sa)?).exp()
}

/// `∫ du ds/(2π) e^{−u} ∂_ψ̄ ∂_ψ F(u, s)` for a graph with one free vertex,
/// by nested adaptive quadrature; `F` must already contain the superdensity.
pub fn horo_quadrature<W, F>(g: &Graph, sa: &SuperAlgebra, s_window: W, integrand: F, opts: QuadOptions) -> Result<ComplexGrassmann>
where
    W: Fn(f64) -> (f64, f64),
    F: Fn(&FieldConfig) -> Result<ComplexGrassmann>,
{
    if g.n_free() != 1 {
        return Err(Error::Shape("quadrature oracles need exactly one free vertex".into()));
    }
    let count = 1usize << sa.params().len();
    let (v, _) = integrate_2d(
        |u, s| {
            let x = integrand(&FieldConfig::from_free(&[u], &[s]))?;
            let y = sa.berezin(&x)?;
            let w = (-u).exp() / (2.0 * PI);
            let mut out = vec![0.0; 2 * count];
            for &(m, c) in y.terms() {
                out[2 * m as usize] = c.re * w;
                out[2 * m as usize + 1] = c.im * w;
            }
            Ok(out)
        },
        (-12.0, 12.0),
        s_window,
        2 * count,
        opts,
    )?;
    ComplexGrassmann::from_terms(sa.params(), (0..count).map(|m| (m as u64, Complex64::new(v[2 * m], v[2 * m + 1]))))
}

/// Integration window in `s` at a single vertex of total weight `w`, shifted
/// by the linear tilt `−b θ`.
pub fn s_window(w: f64, b: f64) -> impl Fn(f64) -> (f64, f64) {
    move |u: f64| {
        let center = -b * (-u).exp();
        let half = 14.0 / (w * u.exp()).sqrt();
        (center - half, center + half)
    }
}

/// Every coefficient of `∫dμ^W e^{−⟨π,ϖ⟩}` at one free vertex, by quadrature.
pub fn laplace_quadrature(g: &Graph, v: &GroupElement) -> Result<GrassmannElement> {
    let sa = SuperAlgebra::new(g, v.algebra())?;
    let pi = LaplaceParams::from_group(v);
    let sw = SuperWeights::real(g, v.algebra());
    let w = g.weight(0, g.pinned());
    let out = horo_quadrature(
        g,
        &sa,
        s_window(w, pi.b[0].body()),
        |cfg| {
            let pack = LaplaceObservablePack::at(g, &sa, cfg);
            let action = super::super_action(&sw, &sa, cfg, true)?;
            Ok((&action - &pi.pair(&pack, &sa)?).exp()?.to_complex())
        },
        QuadOptions { abs_tol: 1e-9, ..Default::default() },
    )?;
    Ok(out.re())
}

/// MC estimate of `∫dμ^W e^{−⟨π,ϖ⟩}` against the closed form, coefficientwise.
pub fn grassmann_laplace_check(g: &Graph, v: &GroupElement, cc: &ChainConfig) -> Result<Vec<Coefficient>> {
    if v.algebra().len() > 6 {
        return Err(Error::Config("at most three χ-pairs (six parameter generators) are supported".into()));
    }
    let pi = LaplaceParams::from_group(v);
    let (c, b) = pi_bodies(&pi);
    decay_gate(&c, &b)?;
    let sa = SuperAlgebra::new(g, v.algebra())?;
    let est = super_expect(g, &sa, cc, |d| Ok(laplace_integrand(g, &sa, &pi, &d.field())?.to_complex()))?;
    let reference = laplace_grassmann(g, v)?.to_complex();
    Ok(grassmann_vs_exact("E[exp(-<pi,varpi>)] vs closed form", &est, &reference, false))
}

/// `∫dμ^W f e^{−⟨π,ϖ⟩} = ℒ^W(a,b,χ̄,χ) ∫dμ^{W^a} 𝒮*_v f`, both sides by MC;
/// Grassmann-valued `W^a` is handled by reweighting against its body.
pub fn super_image_measure_check(
    g: &Graph,
    v: &GroupElement,
    f: &SuperObservable,
    cc: &ChainConfig,
) -> Result<Vec<Coefficient>> {
    let pi = LaplaceParams::from_group(v);
    let (c, b) = pi_bodies(&pi);
    decay_gate(&c, &b)?;
    let params = v.algebra();
    let sa = SuperAlgebra::new(g, params)?;
    let lhs = super_expect(g, &sa, &cc.with_seed(derive_seed(cc.seed, 0)), |d| {
        let cfg = d.field();
        let base = laplace_integrand(g, &sa, &pi, &cfg)?.to_complex();
        Ok(&base * &f.eval(&SuperPoint::at(&sa, &cfg))?)
    })?;
    let sw = SuperWeights::rescaled(g, v)?;
    let g0 = sw.body().clone();
    let sa0 = SuperAlgebra::new(&g0, params)?;
    let lap = sa0.lift(&laplace_grassmann(g, v)?)?.to_complex();
    let pulled = super_scale_pullback(v, f);
    let rhs = super_expect(&g0, &sa0, &cc.with_seed(derive_seed(cc.seed, 1)), |d| {
        let cfg = d.field();
        let r = reweighted_gaussian(&sw, &sa0, &cfg)?.to_complex();
        Ok(&(&r * &pulled.eval(&SuperPoint::at(&sa0, &cfg))?) * &lap)
    })?;
    Ok(grassmann_vs_grassmann(&format!("E_W[{} e^-<pi,varpi>] vs L E_Wa[S* f]", f.name()), &lhs, &rhs, true))
}

/// Odd parameters `τ_i` (one generator per free vertex) for Ward checks.
pub fn tau_algebra(g: &Graph) -> Result<std::sync::Arc<GeneratorSet>> {
    GeneratorSet::new(g.ids()[..g.n_free()].iter().map(|id| format!("tau_{id}")))
}

/// `∫dμ^W e^{⟨α, e^u(1+is)⟩ + ⟨τ, e^u(ψ̄+iψ)⟩} = e^{⟨α,1⟩}` for `α ≤ 0` given
/// over `V`, optionally with one odd `τ_i` per free vertex.
pub fn ward_check(g: &Graph, alpha: &[f64], with_tau: bool, cc: &ChainConfig) -> Result<Vec<Coefficient>> {
    if alpha.len() != g.n_free() {
        return Err(Error::Shape(format!("alpha needs {} entries", g.n_free())));
    }
    if let Some(x) = alpha.iter().find(|x| !(**x <= 0.0)) {
        return Err(Error::Domain(format!("alpha entries must be nonpositive, got {x}")));
    }
    let params = if with_tau { tau_algebra(g)? } else { GeneratorSet::empty() };
    let sa = SuperAlgebra::new(g, &params)?;
    let mut a = alpha.to_vec();
    a.push(0.0);
    let zero = GrassmannElement::zero(sa.combined());
    let tau: Vec<GrassmannElement> =
        (0..g.n_tilde()).map(|i| if with_tau && i < g.n_free() { sa.param(i) } else { zero.clone() }).collect();
    let est = super_expect(g, &sa, cc, |d| {
        let cfg = d.field();
        let m = ward_exponential(&SuperPoint::at(&sa, &cfg), &a, &tau)?;
        let gauss = psi_exponent(g, &sa, &cfg.u).exp()?.to_complex();
        Ok(&gauss * &m)
    })?;
    let reference = ComplexGrassmann::scalar(&params, Complex64::new(alpha.iter().sum::<f64>().exp(), 0.0));
    Ok(grassmann_vs_exact("E[exp(<alpha,e^u(1+is)> + <tau,e^u(psibar+i psi)>)] vs e^<alpha,1>", &est, &reference, true))
}

/// Parameters of a two-level martingale check.
///
/// Universe-indexed: `alpha` (nonpositive, empty = 0), `tau` (vertices carrying
/// an odd parameter) and `derivative` (the multi-index `J` of `∂_α`).
/// Level-`n`-indexed: the tilt `(c, b)` (empty = 0), the optional χ-pair
/// coefficients `χ̄_i = chi.0[i] κ̄`, `χ_i = chi.1[i] κ`, and the optional
/// monomial `φ̄_I φ_J`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MartingaleSpec {
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub tau: Vec<usize>,
    #[serde(default)]
    pub derivative: Vec<usize>,
    #[serde(default)]
    pub c: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default)]
    pub chi: Option<(Vec<f64>, Vec<f64>)>,
    #[serde(default)]
    pub phi_monomial: Option<(Vec<usize>, Vec<usize>)>,
}

struct MartingaleSetup {
    params: std::sync::Arc<GeneratorSet>,
    pi: LaplaceParams,
    alpha: Vec<f64>,
    /// Parameter index of `τ_k` for each universe vertex `k` that carries one.
    tau_index: Vec<Option<usize>>,
}

impl MartingaleSpec {
    fn setup(&self, tower: &GraphTower, n: usize) -> Result<MartingaleSetup> {
        let nu = tower.universe().len();
        let vn = tower.level(n)?.len();
        let alpha = if self.alpha.is_empty() { vec![0.0; nu] } else { self.alpha.clone() };
        if alpha.len() != nu {
            return Err(Error::Shape(format!("alpha needs {nu} entries")));
        }
        let c = if self.c.is_empty() { vec![0.0; vn] } else { self.c.clone() };
        let b = if self.b.is_empty() { vec![0.0; vn] } else { self.b.clone() };
        if c.len() != vn || b.len() != vn {
            return Err(Error::Shape(format!("the tilt lives on V_{n} ({vn} vertices)")));
        }
        decay_gate(&c, &b)?;
        if self.tau.iter().chain(&self.derivative).any(|&k| k >= nu) {
            return Err(Error::Shape("vertex index outside the universe".into()));
        }
        let mut names: Vec<String> = Vec::new();
        let mut tau_index = vec![None; nu];
        let mut seen = HashSet::new();
        for &k in &self.tau {
            if seen.insert(k) {
                tau_index[k] = Some(names.len());
                names.push(format!("tau_{}", tower.universe()[k]));
            }
        }
        if self.chi.is_some() {
            names.push("kappabar".into());
            names.push("kappa".into());
        }
        let params = GeneratorSet::new(names)?;
        let mut pi = LaplaceParams::real(&params, &c, &b);
        if let Some((cb, ch)) = &self.chi {
            if cb.len() != vn || ch.len() != vn {
                return Err(Error::Shape(format!("χ coefficients live on V_{n}")));
            }
            let kb = GrassmannElement::generator(&params, params.len() - 2)?;
            let k = GrassmannElement::generator(&params, params.len() - 1)?;
            pi.chibar = cb.iter().map(|&x| &kb * x).collect();
            pi.chi = ch.iter().map(|&x| &k * x).collect();
        }
        if let Some((i, j)) = &self.phi_monomial {
            if i.iter().chain(j).any(|&q| q >= vn) {
                return Err(Error::Shape(format!("monomial indices must lie in V_{n}")));
            }
        }
        Ok(MartingaleSetup { params, pi, alpha, tau_index })
    }

    /// Estimate `∫dμ_m ∂_J M^{(m)}_{α,τ} g(ϖ^{V_m}|_{V_n})` at level `m ≥ n`.
    fn level_estimate(
        &self,
        tower: &GraphTower,
        n: usize,
        m: usize,
        setup: &MartingaleSetup,
        cc: &ChainConfig,
    ) -> Result<crate::sampler::GrassmannEstimate> {
        let g = tower.wired_subgraph(m)?;
        let sa = SuperAlgebra::new(&g, &setup.params)?;
        let alpha = tower.extend_alpha(&setup.alpha, m)?;
        let pos = tower.embedding(n, m)?;
        let level = tower.level(m)?;
        let zero = GrassmannElement::zero(sa.combined());
        let tau: Vec<GrassmannElement> = level
            .iter()
            .map(|&k| setup.tau_index[k].map(|t| sa.param(t)).unwrap_or_else(|| zero.clone()))
            .collect();
        let deriv: Vec<usize> =
            self.derivative.iter().filter_map(|k| level.iter().position(|x| x == k)).collect();
        let alpha_delta = *alpha.last().expect("pinned entry");
        let i = Complex64::new(0.0, 1.0);
        super_expect(&g, &sa, cc, |d| {
            let cfg = d.field();
            let full = LaplaceObservablePack::at(&g, &sa, &cfg);
            let pack = LaplaceObservablePack {
                beta: pos.iter().map(|&q| full.beta[q]).collect(),
                theta: pos.iter().map(|&q| full.theta[q]).collect(),
                phibar: pos.iter().map(|&q| full.phibar[q].clone()).collect(),
                phi: pos.iter().map(|&q| full.phi[q].clone()).collect(),
            };
            let real = &psi_exponent(&g, &sa, &cfg.u) - &setup.pi.pair(&pack, &sa)?;
            let mut ex = real.to_complex();
            let mut scalar = Complex64::new(alpha_delta, 0.0);
            for q in 0..g.n_free() {
                let e = cfg.u[q].exp();
                scalar += alpha[q] * e * Complex64::new(1.0, cfg.s[q]);
                if !tau[q].is_zero() {
                    let odd = &sa.psibar(q).to_complex() + &(&sa.psi(q).to_complex() * i);
                    ex += &(&tau[q].to_complex() * &(odd * Complex64::new(e, 0.0)));
                }
            }
            let mut val = ex.add_scalar(scalar).exp()?;
            let mut factor = Complex64::new(1.0, 0.0);
            for &q in &deriv {
                factor *= cfg.u[q].exp() * Complex64::new(1.0, cfg.s[q]);
            }
            val = val * factor;
            if let Some((ii, jj)) = &self.phi_monomial {
                let mut mono = GrassmannElement::one(sa.combined());
                for &q in ii {
                    mono = &mono * &pack.phibar[q];
                }
                for &q in jj {
                    mono = &mono * &pack.phi[q];
                }
                val = &val * &mono.to_complex();
            }
            Ok(val)
        })
    }

    /// `ℒ_n · ∏_J (a_j − ib_j) · e^{⟨α^{(n)}, a − ib⟩ − ⟨τ, χ̄ + iχ⟩}`.
    fn closed_form(&self, tower: &GraphTower, n: usize, setup: &MartingaleSetup) -> Result<ComplexGrassmann> {
        let g = tower.wired_subgraph(n)?;
        let v = setup.pi.to_group()?;
        let lap = laplace_grassmann(&g, &v)?.to_complex();
        let alpha = tower.extend_alpha(&setup.alpha, n)?;
        let level = tower.level(n)?;
        let i = Complex64::new(0.0, 1.0);
        let alg = &setup.params;
        let a_minus_ib = |q: usize| {
            let c = v.component(q);
            &c.a.to_complex() - &(&c.b.to_complex() * i)
        };
        let mut ex = ComplexGrassmann::zero(alg);
        for q in 0..g.n_tilde() {
            ex += &(a_minus_ib(q) * Complex64::new(alpha[q], 0.0));
        }
        for (q, &k) in level.iter().enumerate() {
            if let Some(t) = setup.tau_index[k] {
                let tau = GrassmannElement::generator(alg, t)?.to_complex();
                let c = v.component(q);
                let chis = &c.chibar.to_complex() + &(&c.chi.to_complex() * i);
                ex -= &(&tau * &chis);
            }
        }
        let mut out = &lap * &ex.exp()?;
        for k in &self.derivative {
            if let Some(q) = level.iter().position(|x| x == k) {
                out = &out * &a_minus_ib(q);
            }
        }
        Ok(out)
    }
}

/// Two-level martingale check: level `n` against level `n + 1`, and both
/// against the closed form when the test function is a pure exponential tilt.
pub fn susy_martingale_check(
    tower: &GraphTower,
    n: usize,
    spec: &MartingaleSpec,
    cc: &ChainConfig,
) -> Result<Vec<Coefficient>> {
    let setup = spec.setup(tower, n)?;
    tower.level(n + 1)?;
    let lo = spec.level_estimate(tower, n, n, &setup, &cc.with_seed(derive_seed(cc.seed, 2 * n as u64)))?;
    let hi = spec.level_estimate(tower, n, n + 1, &setup, &cc.with_seed(derive_seed(cc.seed, 2 * n as u64 + 1)))?;
    let mut out = grassmann_vs_grassmann(&format!("level {n} vs level {}", n + 1), &lo, &hi, true);
    if spec.phi_monomial.is_none() {
        let reference = spec.closed_form(tower, n, &setup)?;
        out.extend(grassmann_vs_exact(&format!("level {n} vs closed form"), &lo, &reference, true));
        out.extend(grassmann_vs_exact(&format!("level {} vs closed form", n + 1), &hi, &reference, true));
    }
    Ok(out)
}

/// `ℒ_n = ℒ_{n+1}` for parameters supported in `V_n` (exact), and matching
/// first and second moments of `(β, θ)` on `V_n` across the two levels (MC).
/// `a`, `b` are given over the universe.
pub fn consistency_check(
    tower: &GraphTower,
    n: usize,
    a: &[f64],
    b: &[f64],
    cc: &ChainConfig,
    tol: f64,
) -> Result<Vec<Coefficient>> {
    let nu = tower.universe().len();
    if a.len() != nu || b.len() != nu {
        return Err(Error::Shape(format!("parameters need {nu} entries")));
    }
    let inside: HashSet<usize> = tower.level(n)?.iter().copied().collect();
    for k in 0..nu {
        if !inside.contains(&k) && (a[k] != 1.0 || b[k] != 0.0) {
            return Err(Error::Domain(format!(
                "parameters must be [1,0] outside V_{n}; vertex `{}` has [{}, {}]",
                tower.universe()[k],
                a[k],
                b[k]
            )));
        }
    }
    let restrict = |m: usize| -> Result<ScaleParams> {
        let level = tower.level(m)?;
        ScaleParams::new(&level.iter().map(|&k| a[k]).collect::<Vec<_>>(), &level.iter().map(|&k| b[k]).collect::<Vec<_>>())
    };
    let gn = tower.wired_subgraph(n)?;
    let gm = tower.wired_subgraph(n + 1)?;
    let ln = laplace_closed_form(&gn, &restrict(n)?)?;
    let lm = laplace_closed_form(&gm, &restrict(n + 1)?)?;
    let mut out = vec![Coefficient::relative(format!("L_{n} vs L_{}", n + 1), ln, lm, tol)];

    let vn = gn.n_free();
    let mut labels = Vec::new();
    for i in 0..vn {
        labels.push(format!("beta[{i}]"));
        labels.push(format!("theta[{i}]"));
    }
    for i in 0..vn {
        for j in i..vn {
            labels.push(format!("beta[{i}]beta[{j}]"));
            labels.push(format!("theta[{i}]theta[{j}]"));
        }
    }
    let moments = |g: &Graph, pos: &[usize], seed: u64| {
        expect(g, &cc.with_seed(seed), labels.len(), |d, o| {
            let beta = compute_beta(g, d.u);
            let theta = compute_theta(g, d.u, d.s);
            let mut k = 0;
            for &q in pos {
                o[k] = beta[q];
                o[k + 1] = theta[q];
                k += 2;
            }
            for (x, &p) in pos.iter().enumerate() {
                for &r in &pos[x..] {
                    o[k] = beta[p] * beta[r];
                    o[k + 1] = theta[p] * theta[r];
                    k += 2;
                }
            }
            Ok(())
        })
    };
    let en = moments(&gn, &tower.embedding(n, n)?, derive_seed(cc.seed, 10))?;
    let em = moments(&gm, &tower.embedding(n, n + 1)?, derive_seed(cc.seed, 11))?;
    for (k, label) in labels.iter().enumerate() {
        out.push(scalar_vs_scalar(&format!("{label}: level {n} vs {}", n + 1), &en.component(k), &em.component(k)));
        if label.starts_with("theta[") && !label.contains("]theta") {
            out.push(scalar_vs_exact(&format!("{label} at level {n} vs 0"), &en.component(k), 0.0));
            out.push(scalar_vs_exact(&format!("{label} at level {} vs 0", n + 1), &em.component(k), 0.0));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{line_tower, single_edge};
    use crate::grassmann::GroupComponent;

    #[test]
    fn quadrature_normalization_and_laplace_body() {
        let g = single_edge(1.0);
        let alg = GeneratorSet::empty();
        let id = GroupElement::identity(&alg, 2);
        assert!((laplace_quadrature(&g, &id).unwrap().body() - 1.0).abs() < 1e-7);
        let v = GroupElement::from_real(&alg, &[1.2], &[0.3]).unwrap();
        let q = laplace_quadrature(&g, &v).unwrap().body();
        assert!((q - 0.68228).abs() < 1e-5, "{q}");
    }

    #[test]
    fn quadrature_matches_grassmann_closed_form() {
        let g = single_edge(1.0);
        let alg = GeneratorSet::new(["kappabar", "kappa"]).unwrap();
        let kb = GrassmannElement::generator(&alg, 0).unwrap();
        let k = GrassmannElement::generator(&alg, 1).unwrap();
        let comp = GroupComponent {
            a: (&kb * &k * 0.3).add_scalar(1.1),
            b: GrassmannElement::scalar(&alg, 0.2),
            chibar: kb * 0.8,
            chi: k * -0.6,
        };
        let v = GroupElement::new(&alg, vec![comp, GroupComponent::identity(&alg)]).unwrap();
        let q = laplace_quadrature(&g, &v).unwrap();
        let c = laplace_grassmann(&g, &v).unwrap();
        assert!(q.approx_eq(&c, 1e-6), "{q} vs {c}");
    }

    #[test]
    fn consistency_rejects_outside_support() {
        let t = line_tower();
        let cc = ChainConfig::default().with_samples(1000);
        assert!(consistency_check(&t, 0, &[1.2, 1.1, 1.0, 1.0], &[0.0; 4], &cc, 1e-12).is_err());
    }

    #[test]
    fn ward_trivial_case_is_exact() {
        let g = single_edge(1.0);
        let cc = ChainConfig { n_samples: 2000, burn_in: 200, ..Default::default() };
        let r = ward_check(&g, &[0.0], true, &cc).unwrap();
        assert!(r.iter().all(|c| c.z == 0.0 && c.stderr < 1e-12), "{r:?}");
    }
}
