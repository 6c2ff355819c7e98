//! Deterministic quantities of the model: `A^W(u)`, `β`, `θ`, `H_β`, the
//! three equivalent forms of the density `ρ^W`, the inversions `β ↦ u` and
//! `(β, θ) ↦ s`, and cartesian coordinates.
//!
//! All vectors are indexed over `Ṽ` with the pinned vertex last unless the
//! name says otherwise (`*_vv` matrices and `β`, `θ` live on `V` only).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::GrassmannElement;
use crate::graph::Graph;

/// A point `(u, s)` with `u_δ = s_δ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub u: Vec<f64>,
    pub s: Vec<f64>,
}

impl FieldConfig {
    /// Validate lengths and the pinned zeros.
    pub fn new(g: &Graph, u: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        let n = g.n_tilde();
        if u.len() != n || s.len() != n {
            return Err(Error::Shape(format!("field config needs {n} entries per field")));
        }
        if u[n - 1] != 0.0 || s[n - 1] != 0.0 {
            return Err(Error::Domain("fields must vanish at the pinned vertex".into()));
        }
        Ok(Self { u, s })
    }

    /// Build from values on `V`; the pinned zeros are appended.
    pub fn from_free(u: &[f64], s: &[f64]) -> Self {
        let mut u = u.to_vec();
        let mut s = s.to_vec();
        u.push(0.0);
        s.push(0.0);
        Self { u, s }
    }

    pub fn origin(g: &Graph) -> Self {
        Self { u: vec![0.0; g.n_tilde()], s: vec![0.0; g.n_tilde()] }
    }
}

/// `A^W(u)` over `Ṽ × Ṽ`.
pub fn build_a(g: &Graph, u: &[f64]) -> DMatrix<f64> {
    let n = g.n_tilde();
    let mut a = DMatrix::zeros(n, n);
    for &(i, j, w) in g.edges() {
        let x = w * (u[i] + u[j]).exp();
        a[(i, j)] -= x;
        a[(j, i)] -= x;
        a[(i, i)] += x;
        a[(j, j)] += x;
    }
    a
}

/// The `V × V` block of `A^W(u)`.
pub fn build_a_vv(g: &Graph, u: &[f64]) -> DMatrix<f64> {
    let n = g.n_free();
    build_a(g, u).view((0, 0), (n, n)).into_owned()
}

/// `β̃_i = ½ Σ_j W_ij e^{u_j − u_i}` over all of `Ṽ`.
pub fn beta_tilde(g: &Graph, u: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; g.n_tilde()];
    for &(i, j, w) in g.edges() {
        b[i] += 0.5 * w * (u[j] - u[i]).exp();
        b[j] += 0.5 * w * (u[i] - u[j]).exp();
    }
    b
}

/// `β` restricted to `V`.
pub fn compute_beta(g: &Graph, u: &[f64]) -> Vec<f64> {
    let mut b = beta_tilde(g, u);
    b.truncate(g.n_free());
    b
}

/// `θ = e^{−u} A_VV(u) s_V` (matrix form).
pub fn compute_theta(g: &Graph, u: &[f64], s: &[f64]) -> Vec<f64> {
    let n = g.n_free();
    let a = build_a_vv(g, u);
    let sv = DVector::from_column_slice(&s[..n]);
    let t = a * sv;
    (0..n).map(|i| (-u[i]).exp() * t[i]).collect()
}

/// `θ_i = Σ_j W_ij e^{u_j}(s_i − s_j)` (componentwise form).
pub fn compute_theta_componentwise(g: &Graph, u: &[f64], s: &[f64]) -> Vec<f64> {
    let n = g.n_free();
    (0..n)
        .map(|i| (0..g.n_tilde()).map(|j| g.weight(i, j) * u[j].exp() * (s[i] - s[j])).sum())
        .collect()
}

/// `H_β = e^{−u} A(u) e^{−u}` over `Ṽ × Ṽ`.
pub fn h_beta(g: &Graph, u: &[f64]) -> DMatrix<f64> {
    let a = build_a(g, u);
    let n = g.n_tilde();
    DMatrix::from_fn(n, n, |i, j| (-u[i]).exp() * a[(i, j)] * (-u[j]).exp())
}

/// `H_β` from its direct definition `2β̃_i δ_ij − W_ij`.
pub fn h_beta_direct(g: &Graph, u: &[f64]) -> DMatrix<f64> {
    let bt = beta_tilde(g, u);
    let n = g.n_tilde();
    DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 * bt[i] } else { -g.weight(i, j) })
}

/// The `V × V` block of `H_β`, i.e. the conditional covariance of `θ` given `u`.
pub fn h_beta_vv(g: &Graph, u: &[f64]) -> DMatrix<f64> {
    let n = g.n_free();
    h_beta(g, u).view((0, 0), (n, n)).into_owned()
}

/// Cholesky factor of a symmetric matrix, or a positive-definiteness error.
pub fn cholesky(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or(Error::NotPositiveDefinite)
}

/// `log det A_VV(u)` via Cholesky.
pub fn log_det_a_vv(g: &Graph, u: &[f64]) -> Result<f64> {
    let c = cholesky(build_a_vv(g, u))?;
    Ok(2.0 * c.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// Representation used to evaluate `ρ^W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoMode {
    Direct,
    Quadratic,
    Spinor,
}

/// Value of `ρ^W` with its logarithm; `underflow` is set when the exponential
/// of a finite logarithm rounds to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoValue {
    pub value: f64,
    pub log_value: f64,
    pub underflow: bool,
}

/// Edge action `cosh(u_i − u_j) − 1 + ½(s_i − s_j)² e^{u_i + u_j}`.
pub fn edge_action(ui: f64, uj: f64, si: f64, sj: f64) -> f64 {
    (ui - uj).cosh() - 1.0 + 0.5 * (si - sj).powi(2) * (ui + uj).exp()
}

/// `Σ_edges W_ij [cosh(u_i − u_j) − 1]`.
pub fn cosh_action(g: &Graph, u: &[f64]) -> f64 {
    g.edges().iter().map(|&(i, j, w)| w * ((u[i] - u[j]).cosh() - 1.0)).sum()
}

/// The 2×2 matrix of the group element `[a, b]`.
pub fn group_matrix(a: f64, b: f64) -> Matrix2<f64> {
    Matrix2::new(a, b, 0.0, 1.0)
}

/// `det(v_i v_iᵗ / a_i − v_j v_jᵗ / a_j)` evaluated literally.
pub fn spinor_det(ai: f64, bi: f64, aj: f64, bj: f64) -> f64 {
    let vi = group_matrix(ai, bi);
    let vj = group_matrix(aj, bj);
    (vi * vi.transpose() / ai - vj * vj.transpose() / aj).determinant()
}

/// `2 − ‖v_iᵗ ε v_j‖² / (a_i a_j)` with the Frobenius norm.
pub fn spinor_norm_form(ai: f64, bi: f64, aj: f64, bj: f64) -> f64 {
    let eps = Matrix2::new(0.0, -1.0, 1.0, 0.0);
    let m = group_matrix(ai, bi).transpose() * eps * group_matrix(aj, bj);
    2.0 - m.norm_squared() / (ai * aj)
}

/// Logarithm of `ρ^W(u, s)` in the requested representation.
pub fn log_rho(g: &Graph, cfg: &FieldConfig, mode: RhoMode) -> Result<f64> {
    let (u, s) = (&cfg.u, &cfg.s);
    let ld = log_det_a_vv(g, u)?;
    let rest = match mode {
        RhoMode::Direct => -g
            .edges()
            .iter()
            .map(|&(i, j, w)| w * edge_action(u[i], u[j], s[i], s[j]))
            .sum::<f64>(),
        RhoMode::Quadratic => {
            let a = build_a(g, u);
            let sv = DVector::from_column_slice(s);
            let em = DVector::from_iterator(u.len(), u.iter().map(|x| (-x).exp()));
            -0.5 * sv.dot(&(&a * &sv)) - 0.5 * em.dot(&(&a * &em))
        }
        RhoMode::Spinor => g
            .edges()
            .iter()
            .map(|&(i, j, w)| 0.5 * w * spinor_det((-u[i]).exp(), s[i], (-u[j]).exp(), s[j]))
            .sum(),
    };
    Ok(ld + rest)
}

pub fn rho_density(g: &Graph, cfg: &FieldConfig, mode: RhoMode) -> Result<RhoValue> {
    let log_value = log_rho(g, cfg, mode)?;
    let value = log_value.exp();
    Ok(RhoValue { value, log_value, underflow: value == 0.0 && log_value.is_finite() })
}

/// Log-density of the `u`-marginal (up to a constant):
/// `½ log det A_VV − Σ W[cosh − 1] − Σ_V u_i`.
pub fn log_u_marginal(g: &Graph, u: &[f64]) -> Result<f64> {
    let ld = log_det_a_vv(g, u)?;
    let lin: f64 = u[..g.n_free()].iter().sum();
    Ok(0.5 * ld - cosh_action(g, u) - lin)
}

/// Convergence controls for [`u_from_beta_with`].
#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-10 }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Recover `u` (over `Ṽ`, `u_δ = 0`) from `β` on `V`.
pub fn u_from_beta(g: &Graph, beta: &[f64]) -> Result<Vec<f64>> {
    u_from_beta_with(g, beta, NewtonOptions::default())
}

/// Linear start: `2β_i e^{u_i} = Σ_j W_ij e^{u_j}` means `H_VV e^{u_V} = W_{Vδ}`.
fn linear_start(g: &Graph, beta: &[f64]) -> Option<Vec<f64>> {
    let n = g.n_free();
    let h = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 * beta[i] } else { -g.weight(i, j) });
    let rhs = DVector::from_fn(n, |i, _| g.weight(i, g.pinned()));
    let x = h.lu().solve(&rhs)?;
    if x.iter().all(|v| v.is_finite() && *v > 0.0) {
        let mut u: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        u.push(0.0);
        Some(u)
    } else {
        None
    }
}

/// Damped Newton on `F(u) = β(u) − β*`, started from the linear solution when
/// it exists (otherwise from `u = 0`).
pub fn u_from_beta_with(g: &Graph, beta: &[f64], opts: NewtonOptions) -> Result<Vec<f64>> {
    let n = g.n_free();
    if beta.len() != n {
        return Err(Error::Shape(format!("beta needs {n} entries")));
    }
    let u0 = linear_start(g, beta).unwrap_or_else(|| vec![0.0; n + 1]);
    newton(g, beta, u0, opts)
}

/// Damped Newton iteration for `β(u) = β*` from a given start.
pub fn newton(g: &Graph, beta: &[f64], mut u: Vec<f64>, opts: NewtonOptions) -> Result<Vec<f64>> {
    let n = g.n_free();
    let mut res = max_abs_diff(&compute_beta(g, &u), beta);
    // Every attainable β is strictly positive (each vertex has an edge).
    if beta.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(Error::InversionFailure { residual: res, iterations: 0 });
    }
    for it in 0..opts.max_iter {
        let cur = compute_beta(g, &u);
        let f = DVector::from_fn(n, |i, _| cur[i] - beta[i]);
        let jac = DMatrix::from_fn(n, n, |i, k| {
            if i == k {
                -cur[i]
            } else {
                0.5 * g.weight(i, k) * (u[k] - u[i]).exp()
            }
        });
        let step = match jac.lu().solve(&f) {
            Some(s) if s.iter().all(|x| x.is_finite()) => s,
            _ => return Err(Error::InversionFailure { residual: res, iterations: it }),
        };
        // Converged only when the residual is small *and* the iterate has
        // settled; a vanishing residual with O(1) steps means u runs off to infinity.
        let settled = step.amax() <= STEP_TOL;
        if res <= opts.tol && settled {
            return Ok(u);
        }
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let mut cand = u.clone();
            for i in 0..n {
                cand[i] -= t * step[i];
            }
            let r = max_abs_diff(&compute_beta(g, &cand), beta);
            if r.is_finite() && r < res {
                u = cand;
                res = r;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            // No further decrease is possible in floating point.
            return if res <= opts.tol && step.amax() <= STEP_TOL.sqrt() {
                Ok(u)
            } else {
                Err(Error::InversionFailure { residual: res, iterations: it })
            };
        }
    }
    Err(Error::InversionFailure { residual: res, iterations: opts.max_iter })
}

/// Newton step size below which the iterate counts as settled.
const STEP_TOL: f64 = 1e-9;

/// Recover `s` (over `Ṽ`) from `(β, θ)`: `s_V = A_VV(u)⁻¹ e^{u} θ` with `u = u(β)`.
pub fn s_from_beta_theta(g: &Graph, beta: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
    let u = u_from_beta(g, beta)?;
    s_from_u_theta(g, &u, theta)
}

/// `s_V = A_VV(u)⁻¹ e^{u} θ`.
pub fn s_from_u_theta(g: &Graph, u: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
    let n = g.n_free();
    if theta.len() != n {
        return Err(Error::Shape(format!("theta needs {n} entries")));
    }
    let c = cholesky(build_a_vv(g, u))?;
    let rhs = DVector::from_fn(n, |i, _| u[i].exp() * theta[i]);
    let mut s: Vec<f64> = c.solve(&rhs).iter().copied().collect();
    s.push(0.0);
    Ok(s)
}

/// Cartesian coordinates `(x, y, z, ξ, η)` of a point of `H^{2|2}`.
#[derive(Debug, Clone)]
pub struct CartesianPoint {
    pub x: Vec<GrassmannElement>,
    pub y: Vec<GrassmannElement>,
    pub z: Vec<GrassmannElement>,
    pub xi: Vec<GrassmannElement>,
    pub eta: Vec<GrassmannElement>,
}

/// Map horospherical `(u, s, ψ̄, ψ)` to cartesian coordinates:
/// `x = sinh u − (½s² + ψ̄ψ)e^u`, `y = s e^u`, `z = cosh u + (½s² + ψ̄ψ)e^u`,
/// `ξ = e^u ψ̄`, `η = e^u ψ`.
pub fn to_cartesian(
    cfg: &FieldConfig,
    psibar: &[GrassmannElement],
    psi: &[GrassmannElement],
) -> Result<CartesianPoint> {
    let n = cfg.u.len();
    if psibar.len() != n || psi.len() != n {
        return Err(Error::Shape("odd fields must be given over every vertex".into()));
    }
    let alg = psi[0].algebra().clone();
    let mut p = CartesianPoint { x: vec![], y: vec![], z: vec![], xi: vec![], eta: vec![] };
    for i in 0..n {
        if !psibar[i].is_odd() || !psi[i].is_odd() {
            return Err(Error::Parity("ψ̄ and ψ must be odd".into()));
        }
        let (u, s) = (cfg.u[i], cfg.s[i]);
        let e = u.exp();
        let q = (&psibar[i] * &psi[i]).add_scalar(0.5 * s * s) * e;
        p.x.push((-&q).add_scalar(u.sinh()));
        p.z.push(q.add_scalar(u.cosh()));
        p.y.push(GrassmannElement::scalar(&alg, s * e));
        p.xi.push(&psibar[i] * e);
        p.eta.push(&psi[i] * e);
    }
    Ok(p)
}

/// `𝒮_cart = −Σ_edges W_ij(−1 − x_ix_j − y_iy_j + z_iz_j − ξ_iη_j + η_iξ_j)`.
pub fn s_cart(g: &Graph, p: &CartesianPoint) -> GrassmannElement {
    let alg = p.x[0].algebra().clone();
    let mut acc = GrassmannElement::zero(&alg);
    for &(i, j, w) in g.edges() {
        let t = (&p.z[i] * &p.z[j]) - (&p.x[i] * &p.x[j]) - (&p.y[i] * &p.y[j]) - (&p.xi[i] * &p.eta[j])
            + (&p.eta[i] * &p.xi[j]);
        acc -= &(t.add_scalar(-1.0) * w);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{single_edge, triangle};

    #[test]
    fn single_edge_a_and_beta() {
        let g = single_edge(1.0);
        let a = build_a(&g, &[0.0, 0.0]);
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert_eq!(compute_beta(&g, &[0.0, 0.0]), vec![0.5]);
        assert!((compute_beta(&g, &[2f64.ln(), 0.0])[0] - 0.25).abs() < 1e-15);
        assert_eq!(compute_theta(&g, &[0.0, 0.0], &[1.0, 0.0]), vec![1.0]);
    }

    #[test]
    fn rho_examples() {
        let g = single_edge(1.0);
        for mode in [RhoMode::Direct, RhoMode::Quadratic, RhoMode::Spinor] {
            let r = rho_density(&g, &FieldConfig::origin(&g), mode).unwrap();
            assert!((r.value - 1.0).abs() < 1e-14);
            let r = rho_density(&g, &FieldConfig::from_free(&[1.0], &[0.0]), mode).unwrap();
            let expect = 1f64.exp() * (-(1f64.cosh() - 1.0)).exp();
            assert!((r.value - expect).abs() < 1e-12, "{mode:?}");
            assert!((r.value - 1.5792).abs() < 1e-4);
        }
    }

    #[test]
    fn underflow_is_flagged() {
        let g = single_edge(1.0);
        let r = rho_density(&g, &FieldConfig::from_free(&[40.0], &[0.0]), RhoMode::Direct).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.underflow);
    }

    #[test]
    fn spinor_hand_case() {
        assert!((spinor_det(1.0, 0.0, 1.0, 1.0) + 1.0).abs() < 1e-15);
        assert!((spinor_norm_form(1.0, 0.0, 1.0, 1.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn h_beta_forms_agree() {
        let g = triangle(1.0, 0.7, 1.3);
        let u = [0.3, -0.4, 0.0];
        let h = h_beta(&g, &u);
        assert!((h - h_beta_direct(&g, &u)).amax() < 1e-12);
        let b = compute_beta(&g, &u);
        let hv = h_beta_vv(&g, &u);
        for i in 0..2 {
            assert!((hv[(i, i)] - 2.0 * b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_zero_is_not_invertible() {
        let g = single_edge(1.0);
        assert!(matches!(u_from_beta(&g, &[0.0]), Err(Error::InversionFailure { .. })));
    }

    #[test]
    fn inversions_at_origin() {
        let g = triangle(1.0, 1.0, 1.0);
        let b = compute_beta(&g, &[0.0; 3]);
        let u = u_from_beta(&g, &b).unwrap();
        assert!(u.iter().all(|x| x.abs() < 1e-12));
        let s = s_from_beta_theta(&g, &b, &[0.0, 0.0]).unwrap();
        assert!(s.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn newton_from_zero_also_converges() {
        let g = triangle(1.0, 0.5, 2.0);
        let target = [0.7, -0.3, 0.0];
        let beta = compute_beta(&g, &target);
        let u = newton(&g, &beta, vec![0.0; 3], NewtonOptions::default()).unwrap();
        assert!(max_abs_diff(&u, &target) < 1e-8);
    }

    #[test]
    fn cartesian_simple_points() {
        let alg = crate::grassmann::GeneratorSet::new(["pb1", "p1"]).unwrap();
        let zero = GrassmannElement::zero(&alg);
        let cfg = FieldConfig::from_free(&[1.0], &[0.0]);
        let p = to_cartesian(&cfg, &[zero.clone(), zero.clone()], &[zero.clone(), zero]).unwrap();
        assert!((p.x[0].body() - 1f64.sinh()).abs() < 1e-15);
        assert!((p.z[0].body() - 1f64.cosh()).abs() < 1e-15);
        assert_eq!(p.z[1].body(), 1.0);
    }
}
