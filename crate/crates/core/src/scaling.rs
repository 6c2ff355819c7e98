//! The scaling action of the affine group on fields and weights, its
//! Radon–Nikodym density, and closed-form Laplace transforms.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{GroupElement, GrassmannElement};
use crate::graph::Graph;
use crate::sigma_core::{compute_beta, compute_theta, h_beta_vv, log_rho, FieldConfig, RhoMode};

/// Real group element `[a, b]` per vertex over `Ṽ`, pinned component `[1, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Direction of the scaling map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl ScaleParams {
    /// Build from values on the free vertices; the pinned `[1, 0]` is appended.
    pub fn new(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Shape("a and b differ in length".into()));
        }
        if let Some(x) = a.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(Error::Domain(format!("a must be positive, got {x}")));
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("b must be finite".into()));
        }
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.push(1.0);
        b.push(0.0);
        Ok(Self { a, b })
    }

    pub fn identity(g: &Graph) -> Self {
        Self { a: vec![1.0; g.n_tilde()], b: vec![0.0; g.n_tilde()] }
    }

    /// Uniform parameters on every free vertex of `g`.
    pub fn uniform(g: &Graph, a: f64, b: f64) -> Result<Self> {
        Self::new(&vec![a; g.n_free()], &vec![b; g.n_free()])
    }

    pub fn check(&self, g: &Graph) -> Result<()> {
        let n = g.n_tilde();
        if self.a.len() != n || self.b.len() != n {
            return Err(Error::Shape(format!("scale parameters need {n} entries")));
        }
        if self.a[n - 1] != 1.0 || self.b[n - 1] != 0.0 {
            return Err(Error::Invariant("pinned component must be [1,0]".into()));
        }
        if self.a.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::Domain("a must be positive".into()));
        }
        Ok(())
    }

    /// Group product `[aa', b + ab']`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a.iter().zip(&other.a).map(|(x, y)| x * y).collect(),
            b: self.b.iter().zip(&other.b).zip(&self.a).map(|((b, b2), a)| b + a * b2).collect(),
        }
    }

    /// `[1/a, −b/a]`.
    pub fn inverse(&self) -> Self {
        Self {
            a: self.a.iter().map(|x| 1.0 / x).collect(),
            b: self.b.iter().zip(&self.a).map(|(b, a)| -b / a).collect(),
        }
    }

    /// As a Grassmann group element with zero odd parts.
    pub fn to_group(&self, algebra: &std::sync::Arc<crate::grassmann::GeneratorSet>) -> Result<GroupElement> {
        let n = self.a.len() - 1;
        GroupElement::from_real(algebra, &self.a[..n], &self.b[..n])
    }
}

/// `𝒮_{[a,b]}(u,s) = (u + log a, s − e^{−u} b / a)`; the inverse map is
/// `(u − log a, s + e^{−u} b)`.
pub fn scale_fields(p: &ScaleParams, cfg: &FieldConfig, dir: Direction) -> FieldConfig {
    let n = cfg.u.len();
    let mut u = vec![0.0; n];
    let mut s = vec![0.0; n];
    for i in 0..n {
        let (a, b) = (p.a[i], p.b[i]);
        match dir {
            Direction::Forward => {
                u[i] = cfg.u[i] + a.ln();
                s[i] = cfg.s[i] - (-cfg.u[i]).exp() * b / a;
            }
            Direction::Inverse => {
                u[i] = cfg.u[i] - a.ln();
                s[i] = cfg.s[i] + (-cfg.u[i]).exp() * b;
            }
        }
    }
    FieldConfig { u, s }
}

/// `W^a_ij = a_i a_j W_ij`.
pub fn rescale_weights(p: &ScaleParams, g: &Graph) -> Result<Graph> {
    p.check(g)?;
    let n = g.n_tilde();
    let w = DMatrix::from_fn(n, n, |i, j| p.a[i] * p.a[j] * g.weight(i, j));
    g.with_weights(w)
}

/// `log ℒ^W(a,b) = −Σ_edges W_ij(a_ia_j + b_ib_j − 1) − Σ_V log a_j`.
pub fn log_laplace_closed_form(g: &Graph, p: &ScaleParams) -> Result<f64> {
    p.check(g)?;
    let edges: f64 = g
        .edges()
        .iter()
        .map(|&(i, j, w)| w * (p.a[i] * p.a[j] + p.b[i] * p.b[j] - 1.0))
        .sum();
    let logs: f64 = p.a[..g.n_free()].iter().map(|a| a.ln()).sum();
    Ok(-edges - logs)
}

pub fn laplace_closed_form(g: &Graph, p: &ScaleParams) -> Result<f64> {
    Ok(log_laplace_closed_form(g, p)?.exp())
}

/// Grassmann version:
/// `∏_edges exp(−W_ij(a_ia_j + b_ib_j + χ̄_iχ_j + χ̄_jχ_i − 1)) · ∏_V a_j⁻¹`.
pub fn laplace_grassmann(g: &Graph, v: &GroupElement) -> Result<GrassmannElement> {
    if v.len() != g.n_tilde() {
        return Err(Error::Shape(format!("group element needs {} components", g.n_tilde())));
    }
    let alg = v.algebra().clone();
    let mut exponent = GrassmannElement::zero(&alg);
    for &(i, j, w) in g.edges() {
        let (ci, cj) = (v.component(i), v.component(j));
        let t = (&ci.a * &cj.a) + (&ci.b * &cj.b) + (&ci.chibar * &cj.chi) + (&cj.chibar * &ci.chi);
        exponent -= &(t.add_scalar(-1.0) * w);
    }
    let mut out = exponent.exp()?;
    for j in 0..g.n_free() {
        out = &out * &v.component(j).a.inverse()?;
    }
    Ok(out)
}

/// The Laplace exponent `−⟨a² + b² − 1, β(u)⟩ − ⟨b, θ(u,s)⟩`.
pub fn laplace_exponent(g: &Graph, p: &ScaleParams, cfg: &FieldConfig) -> f64 {
    let beta = compute_beta(g, &cfg.u);
    let theta = compute_theta(g, &cfg.u, &cfg.s);
    (0..g.n_free())
        .map(|i| -(p.a[i] * p.a[i] + p.b[i] * p.b[i] - 1.0) * beta[i] - p.b[i] * theta[i])
        .sum()
}

/// `d(𝒮_{[a,b]} μ^{W^a}) / dμ^W (u,s) = ℒ⁻¹ e^{−⟨a²+b²−1, β⟩ − ⟨b, θ⟩}`.
pub fn radon_nikodym(g: &Graph, p: &ScaleParams, cfg: &FieldConfig) -> Result<f64> {
    Ok((laplace_exponent(g, p, cfg) - log_laplace_closed_form(g, p)?).exp())
}

/// The same density from first principles:
/// `ρ^{W^a}(𝒮⁻¹(u,s)) · ∏ a_i / ρ^W(u,s)`.
pub fn density_ratio(g: &Graph, p: &ScaleParams, cfg: &FieldConfig) -> Result<f64> {
    let ga = rescale_weights(p, g)?;
    let back = scale_fields(p, cfg, Direction::Inverse);
    let log_prod_a: f64 = p.a[..g.n_free()].iter().map(|a| a.ln()).sum();
    let num = log_rho(&ga, &back, RhoMode::Direct)?;
    let den = log_rho(g, cfg, RhoMode::Direct)?;
    Ok((num + log_prod_a - den).exp())
}

/// Covariance of `θ` given `u`: `H_β(u)` on `V × V`.
pub fn theta_conditional_covariance(g: &Graph, u: &[f64]) -> DMatrix<f64> {
    h_beta_vv(g, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{single_edge, triangle};

    #[test]
    fn closed_form_single_edge() {
        let g = single_edge(1.0);
        let p = ScaleParams::new(&[1.2], &[0.3]).unwrap();
        let l = laplace_closed_form(&g, &p).unwrap();
        assert!((l - (-0.2f64).exp() / 1.2).abs() < 1e-14);
        assert!((l - 0.68228).abs() < 1e-5);
        assert_eq!(laplace_closed_form(&g, &ScaleParams::identity(&g)).unwrap(), 1.0);
    }

    #[test]
    fn weights_and_fields() {
        let g = single_edge(1.0);
        let p = ScaleParams::new(&[2.0], &[0.0]).unwrap();
        assert_eq!(rescale_weights(&p, &g).unwrap().weight(0, 1), 2.0);
        let e = ScaleParams::new(&[1f64.exp()], &[0.0]).unwrap();
        let f = scale_fields(&e, &FieldConfig::origin(&g), Direction::Forward);
        assert!((f.u[0] - 1.0).abs() < 1e-15);
        let id = ScaleParams::identity(&g);
        let c = FieldConfig::from_free(&[0.4], &[-1.1]);
        assert_eq!(scale_fields(&id, &c, Direction::Forward), c);
    }

    #[test]
    fn ratio_matches_closed_form() {
        let g = triangle(1.0, 0.6, 1.7);
        let p = ScaleParams::new(&[1.3, 0.7], &[0.2, -0.5]).unwrap();
        let c = FieldConfig::from_free(&[0.3, -0.8], &[0.5, 1.2]);
        let r1 = radon_nikodym(&g, &p, &c).unwrap();
        let r2 = density_ratio(&g, &p, &c).unwrap();
        assert!((r1 / r2 - 1.0).abs() < 1e-10, "{r1} vs {r2}");
    }

    #[test]
    fn real_grassmann_laplace_agree() {
        let g = triangle(1.0, 0.6, 1.7);
        let p = ScaleParams::new(&[1.3, 0.7], &[0.2, -0.5]).unwrap();
        let alg = crate::grassmann::GeneratorSet::empty();
        let v = p.to_group(&alg).unwrap();
        let lg = laplace_grassmann(&g, &v).unwrap();
        assert!((lg.body() - laplace_closed_form(&g, &p).unwrap()).abs() < 1e-14);
    }
}
