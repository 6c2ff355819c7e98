//! Monte-Carlo sampling of `μ^W`.
//!
//! The `s`-sector is Gaussian given `u`, so it is integrated out analytically:
//! the chain runs on the `u`-marginal
//!
//! ```text
//!   π(u) ∝ √det A_VV(u) · ∏_edges e^{−W_ij[cosh(u_i − u_j) − 1]} · ∏_{i∈V} e^{−u_i}
//! ```
//!
//! with single-site Gaussian random-walk Metropolis updates, and `s` is then
//! drawn exactly as `s_V = L⁻ᵀ z` where `L Lᵀ = A_VV(u)`.  Standard errors come
//! from batch means pooled over independent chains.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{ComplexGrassmann, GeneratorSet, GrassmannElement, Multivector};
use crate::graph::Graph;
use crate::sigma_core::FieldConfig;

/// Number of batches per chain used for batch-means standard errors.
pub const BATCHES_PER_CHAIN: usize = 32;
/// Acceptance rate targeted while tuning the proposal during burn-in.
pub const TARGET_ACCEPTANCE: f64 = 0.3;
const TUNE_WINDOW: usize = 50;

/// Sampler settings. `n_samples` is the total over all chains; it is rounded
/// up so every chain holds a whole number of equally sized batches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_samples: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub n_chains: usize,
    pub proposal_scale: f64,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { n_samples: 100_000, burn_in: 2_000, thinning: 1, n_chains: 4, proposal_scale: 1.0, seed: 0 }
    }
}

impl ChainConfig {
    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.burn_in == 0 || self.thinning == 0 || self.n_chains == 0 {
            return Err(Error::Config("sample, burn-in, thinning and chain counts must be at least 1".into()));
        }
        if !(self.proposal_scale > 0.0 && self.proposal_scale.is_finite()) {
            return Err(Error::Config(format!("proposal scale must be positive, got {}", self.proposal_scale)));
        }
        Ok(())
    }

    /// Samples kept per chain (a multiple of [`BATCHES_PER_CHAIN`]).
    pub fn per_chain(&self) -> usize {
        let per = self.n_samples.div_ceil(self.n_chains);
        per.div_ceil(BATCHES_PER_CHAIN) * BATCHES_PER_CHAIN
    }

    /// Independent RNG stream for a chain.
    pub fn rng(&self, chain: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chain as u64 + 1);
        rng
    }
}

/// Seed for the `stream`-th independent sub-run of a check (SplitMix64 mix).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One retained state of the chain together with an exact `s` draw.
#[derive(Debug, Clone, Copy)]
pub struct Draw<'a> {
    /// `u` over `Ṽ` (pinned entry 0).
    pub u: &'a [f64],
    /// `s` over `Ṽ` (pinned entry 0).
    pub s: &'a [f64],
    pub chain: usize,
    pub index: usize,
}

impl Draw<'_> {
    pub fn field(&self) -> FieldConfig {
        FieldConfig { u: self.u.to_vec(), s: self.s.to_vec() }
    }
}

/// Vector-valued Monte-Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_samples: usize,
    pub n_effective: Vec<f64>,
    pub seed: u64,
    /// Largest Gelman–Rubin statistic over the components (1 when undefined).
    pub rhat: f64,
    /// Metropolis acceptance rate after tuning.
    pub acceptance: f64,
}

/// Scalar estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub n_effective: f64,
    pub seed: u64,
    pub rhat: f64,
}

impl Estimate {
    pub fn component(&self, k: usize) -> ScalarEstimate {
        ScalarEstimate {
            mean: self.mean[k],
            stderr: self.stderr[k],
            n_samples: self.n_samples,
            n_effective: self.n_effective[k],
            seed: self.seed,
            rhat: self.rhat,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

// --- small dense linear algebra on reusable buffers ----------------------

/// In-place lower Cholesky factor of the row-major `n × n` matrix in `a`.
fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut x = a[i * n + j];
            for k in 0..j {
                x -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = x / d;
        }
    }
    true
}

/// Evaluator of the `u`-marginal with scratch space.
struct Target<'g> {
    g: &'g Graph,
    n: usize,
    buf: Vec<f64>,
}

impl<'g> Target<'g> {
    fn new(g: &'g Graph) -> Self {
        let n = g.n_free();
        Self { g, n, buf: vec![0.0; n * n] }
    }

    /// Fill `buf` with `A_VV(u)` and factor it.
    fn factor(&mut self, u: &[f64]) -> bool {
        let n = self.n;
        self.buf.iter_mut().for_each(|x| *x = 0.0);
        for &(i, j, w) in self.g.edges() {
            let x = w * (u[i] + u[j]).exp();
            if i < n {
                self.buf[i * n + i] += x;
            }
            if j < n {
                self.buf[j * n + j] += x;
            }
            if i < n && j < n {
                self.buf[i * n + j] -= x;
                self.buf[j * n + i] -= x;
            }
        }
        cholesky_in_place(&mut self.buf, n)
    }

    fn log_density(&mut self, u: &[f64]) -> f64 {
        if u.iter().any(|x| !x.is_finite()) || !self.factor(u) {
            return f64::NEG_INFINITY;
        }
        let n = self.n;
        let half_log_det: f64 = (0..n).map(|i| self.buf[i * n + i].ln()).sum();
        let cosh: f64 = self.g.edges().iter().map(|&(i, j, w)| w * ((u[i] - u[j]).cosh() - 1.0)).sum();
        let lin: f64 = u[..n].iter().sum();
        let v = half_log_det - cosh - lin;
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    /// `s_V = L⁻ᵀ z` using the factor currently in `buf`.
    fn draw_s(&self, rng: &mut ChaCha8Rng, s: &mut [f64]) {
        let n = self.n;
        for x in s[..n].iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        for i in (0..n).rev() {
            let mut x = s[i];
            for k in (i + 1)..n {
                x -= self.buf[k * n + i] * s[k];
            }
            s[i] = x / self.buf[i * n + i];
        }
        s[n] = 0.0;
    }
}

/// Draw `s ~ N(0, A_VV(u)⁻¹)` (pinned entry 0).
pub fn sample_s_given_u<R: Rng>(g: &Graph, u: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let mut t = Target::new(g);
    if !t.factor(u) {
        return Err(Error::NotPositiveDefinite);
    }
    let n = t.n;
    let mut s = vec![0.0; n + 1];
    for x in s[..n].iter_mut() {
        *x = rng.sample(StandardNormal);
    }
    for i in (0..n).rev() {
        let mut x = s[i];
        for k in (i + 1)..n {
            x -= t.buf[k * n + i] * s[k];
        }
        s[i] = x / t.buf[i * n + i];
    }
    Ok(s)
}

/// Per-chain Metropolis state.
struct Chain<'g> {
    target: Target<'g>,
    u: Vec<f64>,
    logp: f64,
    scale: Vec<f64>,
    accepted: usize,
    proposed: usize,
}

impl<'g> Chain<'g> {
    fn new(g: &'g Graph, cc: &ChainConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut target = Target::new(g);
        let n = g.n_free();
        // Over-dispersed start; retry until the density is finite.
        let mut u = vec![0.0; n + 1];
        let mut logp = f64::NEG_INFINITY;
        for _ in 0..100 {
            for x in u[..n].iter_mut() {
                *x = rng.sample::<f64, _>(StandardNormal);
            }
            logp = target.log_density(&u);
            if logp.is_finite() {
                break;
            }
        }
        if !logp.is_finite() {
            u.iter_mut().for_each(|x| *x = 0.0);
            logp = target.log_density(&u);
        }
        Self { target, u, logp, scale: vec![cc.proposal_scale; n], accepted: 0, proposed: 0 }
    }

    /// One sweep of single-site updates; returns per-site acceptance flags in `acc`.
    fn sweep(&mut self, rng: &mut ChaCha8Rng, acc: &mut [usize]) {
        for i in 0..self.target.n {
            let old = self.u[i];
            let z: f64 = rng.sample(StandardNormal);
            self.u[i] = old + self.scale[i] * z;
            let lp = self.target.log_density(&self.u);
            let log_ratio = lp - self.logp;
            let uni: f64 = rng.random();
            self.proposed += 1;
            if log_ratio >= 0.0 || uni.ln() < log_ratio {
                self.logp = lp;
                self.accepted += 1;
                acc[i] += 1;
            } else {
                self.u[i] = old;
            }
        }
    }

    /// Burn-in with proposal tuning, then freeze.
    fn burn_in(&mut self, rng: &mut ChaCha8Rng, sweeps: usize) {
        let n = self.target.n;
        let mut acc = vec![0usize; n];
        let mut window = 0usize;
        let mut round = 0usize;
        for _ in 0..sweeps {
            self.sweep(rng, &mut acc);
            window += 1;
            if window == TUNE_WINDOW {
                round += 1;
                let gain = 1.0 / (round as f64).sqrt();
                for i in 0..n {
                    let rate = acc[i] as f64 / window as f64;
                    self.scale[i] *= (gain * 2.0 * (rate - TARGET_ACCEPTANCE)).exp();
                    self.scale[i] = self.scale[i].clamp(1e-4, 1e3);
                }
                acc.iter_mut().for_each(|x| *x = 0);
                window = 0;
            }
        }
        self.accepted = 0;
        self.proposed = 0;
    }

    fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Running statistics for one chain.
struct ChainStats {
    batch_means: Vec<Vec<f64>>,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    n: usize,
    acceptance: f64,
}

/// Run all chains in parallel, feeding every retained draw to `visit`.
/// Returns each chain's state with its post-tuning acceptance rate, in chain order.
fn run_chains<S, F>(g: &Graph, cc: &ChainConfig, init: impl Fn() -> S + Sync, visit: F) -> Result<Vec<(S, f64)>>
where
    S: Send,
    F: Fn(&mut S, &Draw<'_>) -> Result<()> + Sync,
{
    cc.validate()?;
    let per_chain = cc.per_chain();
    (0..cc.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = cc.rng(c);
            let mut chain = Chain::new(g, cc, &mut rng);
            chain.burn_in(&mut rng, cc.burn_in);
            let mut state = init();
            let mut s = vec![0.0; g.n_tilde()];
            let mut acc = vec![0usize; g.n_free()];
            for k in 0..per_chain {
                for _ in 0..cc.thinning {
                    chain.sweep(&mut rng, &mut acc);
                }
                chain.target.factor(&chain.u);
                chain.target.draw_s(&mut rng, &mut s);
                visit(&mut state, &Draw { u: &chain.u, s: &s, chain: c, index: k })?;
            }
            Ok((state, chain.acceptance()))
        })
        .collect()
}

/// Monte-Carlo mean of a vector-valued observable of `(u, s)`.
///
/// `f` writes the `dim` components for one draw into a zeroed buffer.
pub fn expect<F>(g: &Graph, cc: &ChainConfig, dim: usize, f: F) -> Result<Estimate>
where
    F: Fn(&Draw<'_>, &mut [f64]) -> Result<()> + Sync,
{
    cc.validate()?;
    let per_chain = cc.per_chain();
    let batch = per_chain / BATCHES_PER_CHAIN;
    let init = || {
        let st = ChainStats {
            batch_means: Vec::with_capacity(BATCHES_PER_CHAIN),
            sum: vec![0.0; dim],
            sumsq: vec![0.0; dim],
            n: 0,
            acceptance: 0.0,
        };
        (st, vec![0.0; dim], vec![0.0; dim])
    };
    let out = run_chains(g, cc, init, |(st, buf, cur), d| {
        buf.iter_mut().for_each(|x| *x = 0.0);
        f(d, buf)?;
        for (k, &x) in buf.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Estimation(format!(
                    "observable component {k} is {x} at chain {} draw {} (u = {:?}, s = {:?})",
                    d.chain, d.index, d.u, d.s
                )));
            }
            cur[k] += x;
            st.sum[k] += x;
            st.sumsq[k] += x * x;
        }
        st.n += 1;
        if st.n % batch == 0 {
            st.batch_means.push(cur.iter().map(|x| x / batch as f64).collect());
            cur.iter_mut().for_each(|x| *x = 0.0);
        }
        Ok(())
    })?;
    let stats: Vec<ChainStats> = out
        .into_iter()
        .map(|((mut st, _, _), acc)| {
            st.acceptance = acc;
            st
        })
        .collect();
    Ok(combine(&stats, dim, per_chain, cc.seed))
}

fn combine(stats: &[ChainStats], dim: usize, per_chain: usize, seed: u64) -> Estimate {
    let m = stats.len();
    let total = m * per_chain;
    let nb: usize = stats.iter().map(|s| s.batch_means.len()).sum();
    let mut mean = vec![0.0; dim];
    let mut stderr = vec![0.0; dim];
    let mut n_eff = vec![0.0; dim];
    let mut rhat: f64 = 1.0;
    for k in 0..dim {
        let grand = stats.iter().map(|s| s.sum[k]).sum::<f64>() / total as f64;
        // batch means around the grand mean
        let ss: f64 = stats
            .iter()
            .flat_map(|s| s.batch_means.iter())
            .map(|b| (b[k] - grand).powi(2))
            .sum();
        let var_batch = if nb > 1 { ss / (nb - 1) as f64 } else { 0.0 };
        let se = (var_batch / nb as f64).sqrt();
        let var_sample = (stats.iter().map(|s| s.sumsq[k]).sum::<f64>() / total as f64 - grand * grand).max(0.0);
        mean[k] = grand;
        stderr[k] = se;
        n_eff[k] = if se > 0.0 { (var_sample / (se * se)).min(total as f64) } else { total as f64 };
        // Gelman–Rubin
        if m >= 2 {
            let n = per_chain as f64;
            let chain_means: Vec<f64> = stats.iter().map(|s| s.sum[k] / n).collect();
            let w = stats
                .iter()
                .zip(&chain_means)
                .map(|(s, cm)| ((s.sumsq[k] - n * cm * cm) / (n - 1.0)).max(0.0))
                .sum::<f64>()
                / m as f64;
            let b = n * chain_means.iter().map(|cm| (cm - grand).powi(2)).sum::<f64>() / (m - 1) as f64;
            if w > 1e-300 * (1.0 + grand * grand) && w > 0.0 {
                let v = (n - 1.0) / n * w + b / n;
                rhat = rhat.max((v / w).sqrt());
            }
        }
    }
    let acceptance = stats.iter().map(|s| s.acceptance).sum::<f64>() / m as f64;
    Estimate { mean, stderr, n_samples: total, n_effective: n_eff, seed, rhat, acceptance }
}

/// Scalar convenience wrapper around [`expect`].
pub fn expect_scalar<F>(g: &Graph, cc: &ChainConfig, f: F) -> Result<ScalarEstimate>
where
    F: Fn(&Draw<'_>) -> f64 + Sync,
{
    let e = expect(g, cc, 1, |d, out| {
        out[0] = f(d);
        Ok(())
    })?;
    Ok(e.component(0))
}

/// Complex observable; returns `(real part, imaginary part)` estimates.
pub fn expect_complex<F>(g: &Graph, cc: &ChainConfig, f: F) -> Result<(ScalarEstimate, ScalarEstimate)>
where
    F: Fn(&Draw<'_>) -> Complex64 + Sync,
{
    let e = expect(g, cc, 2, |d, out| {
        let z = f(d);
        out[0] = z.re;
        out[1] = z.im;
        Ok(())
    })?;
    Ok((e.component(0), e.component(1)))
}

/// Retained draws of all chains, chain by chain.
pub fn draws(g: &Graph, cc: &ChainConfig) -> Result<Vec<FieldConfig>> {
    let per = run_chains(g, cc, Vec::new, |v: &mut Vec<FieldConfig>, d| {
        v.push(d.field());
        Ok(())
    })?;
    Ok(per.into_iter().flat_map(|(v, _)| v).collect())
}

// --- Grassmann-valued estimates --------------------------------------------

/// Combined algebra `ψ̄_1, ψ_1, …, ψ̄_n, ψ_n, χ…` for Berezin-first estimates:
/// field generators for every free vertex followed by the parameter generators.
#[derive(Debug, Clone)]
pub struct SuperAlgebra {
    combined: Arc<GeneratorSet>,
    params: Arc<GeneratorSet>,
    n_free: usize,
}

impl SuperAlgebra {
    pub fn new(g: &Graph, params: &Arc<GeneratorSet>) -> Result<Self> {
        let n = g.n_free();
        let mut names = Vec::with_capacity(2 * n + params.len());
        for id in &g.ids()[..n] {
            names.push(format!("psibar_{id}"));
            names.push(format!("psi_{id}"));
        }
        names.extend(params.names().iter().cloned());
        Ok(Self { combined: GeneratorSet::new(names)?, params: params.clone(), n_free: n })
    }

    pub fn combined(&self) -> &Arc<GeneratorSet> {
        &self.combined
    }

    pub fn params(&self) -> &Arc<GeneratorSet> {
        &self.params
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Index of `ψ̄_i` in the combined algebra.
    pub fn psibar_index(&self, i: usize) -> usize {
        2 * i
    }

    pub fn psi_index(&self, i: usize) -> usize {
        2 * i + 1
    }

    /// `ψ̄_i` over `Ṽ` (zero at the pinned vertex).
    pub fn psibar(&self, i: usize) -> GrassmannElement {
        if i < self.n_free {
            GrassmannElement::generator(&self.combined, 2 * i).expect("in range")
        } else {
            GrassmannElement::zero(&self.combined)
        }
    }

    pub fn psi(&self, i: usize) -> GrassmannElement {
        if i < self.n_free {
            GrassmannElement::generator(&self.combined, 2 * i + 1).expect("in range")
        } else {
            GrassmannElement::zero(&self.combined)
        }
    }

    /// Parameter generator `k` lifted into the combined algebra.
    pub fn param(&self, k: usize) -> GrassmannElement {
        GrassmannElement::generator(&self.combined, 2 * self.n_free + k).expect("in range")
    }

    /// Lift an element of the parameter algebra into the combined algebra.
    pub fn lift<T: crate::grassmann::Coeff>(&self, x: &Multivector<T>) -> Result<Multivector<T>> {
        x.embed(&self.combined)
    }

    /// `⟨ψ̄, M ψ⟩ = Σ_{i,j∈V} ψ̄_i M_ij ψ_j` for a matrix over `V` with even entries.
    pub fn psi_form(&self, m: &dyn Fn(usize, usize) -> GrassmannElement) -> GrassmannElement {
        let mut acc = GrassmannElement::zero(&self.combined);
        for i in 0..self.n_free {
            let pb = self.psibar(i);
            for j in 0..self.n_free {
                let mij = m(i, j);
                if mij.is_zero() {
                    continue;
                }
                acc += &(&pb * &(&mij * &self.psi(j)));
            }
        }
        acc
    }

    /// `∏_{i∈V} ∂_{ψ̄_i} ∂_{ψ_i}`, projected onto the parameter algebra.
    pub fn berezin<T: crate::grassmann::Coeff>(&self, x: &Multivector<T>) -> Result<Multivector<T>> {
        let mut y = x.clone();
        for i in (0..self.n_free).rev() {
            y = y.berezin(self.psi_index(i))?.berezin(self.psibar_index(i))?;
        }
        let shift = 2 * self.n_free;
        let terms: Vec<(u64, T)> = y.terms().iter().map(|&(m, c)| (m >> shift, c)).collect();
        if y.terms().iter().any(|(m, _)| m & ((1u64 << shift) - 1) != 0) {
            return Err(Error::Parity("field generators survived the Berezin integral".into()));
        }
        Multivector::from_terms(&self.params, terms)
    }
}

/// Λ-valued estimate: one complex coefficient per subset of parameter generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrassmannEstimate {
    pub generators: Vec<String>,
    pub masks: Vec<u64>,
    pub mean_re: Vec<f64>,
    pub mean_im: Vec<f64>,
    pub stderr_re: Vec<f64>,
    pub stderr_im: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub rhat: f64,
}

impl GrassmannEstimate {
    fn from_estimate(params: &Arc<GeneratorSet>, e: &Estimate) -> Self {
        let count = 1usize << params.len();
        let masks: Vec<u64> = (0..count as u64).collect();
        Self {
            generators: params.names().to_vec(),
            masks,
            mean_re: (0..count).map(|k| e.mean[2 * k]).collect(),
            mean_im: (0..count).map(|k| e.mean[2 * k + 1]).collect(),
            stderr_re: (0..count).map(|k| e.stderr[2 * k]).collect(),
            stderr_im: (0..count).map(|k| e.stderr[2 * k + 1]).collect(),
            n_samples: e.n_samples,
            seed: e.seed,
            rhat: e.rhat,
        }
    }

    pub fn mean(&self, params: &Arc<GeneratorSet>) -> Result<ComplexGrassmann> {
        ComplexGrassmann::from_terms(
            params,
            self.masks.iter().enumerate().map(|(k, &m)| (m, Complex64::new(self.mean_re[k], self.mean_im[k]))),
        )
    }

    /// `(mean, stderr)` of the coefficient of `mask`.
    pub fn coefficient(&self, mask: u64) -> (Complex64, Complex64) {
        let k = mask as usize;
        (
            Complex64::new(self.mean_re[k], self.mean_im[k]),
            Complex64::new(self.stderr_re[k], self.stderr_im[k]),
        )
    }
}

/// Berezin-first super expectation.
///
/// `integrand(draw)` must return, over the combined algebra, the element
/// `R · e^{−⟨ψ̄, A ψ⟩} · f` where `R` is any per-sample reweighting factor
/// (1 for real weights).  The per-sample value is
/// `∏∂_{ψ̄_i}∂_{ψ_i}(integrand) / det A_VV(u)` with `A` the real-weight matrix
/// the chain samples from; only `(u, s)` is random.
pub fn super_expect<F>(g: &Graph, sa: &SuperAlgebra, cc: &ChainConfig, integrand: F) -> Result<GrassmannEstimate>
where
    F: Fn(&Draw<'_>) -> Result<ComplexGrassmann> + Sync,
{
    let count = 1usize << sa.params.len();
    let e = expect(g, cc, 2 * count, |d, out| {
        let x = integrand(d)?;
        let ld = crate::sigma_core::log_det_a_vv(g, d.u)?;
        let inv_det = (-ld).exp();
        let y = sa.berezin(&x)?;
        for &(m, c) in y.terms() {
            out[2 * m as usize] = c.re * inv_det;
            out[2 * m as usize + 1] = c.im * inv_det;
        }
        Ok(())
    })?;
    Ok(GrassmannEstimate::from_estimate(&sa.params, &e))
}

/// `e^{−⟨ψ̄, A_VV(u) ψ⟩}` over the combined algebra for real weights.
pub fn psi_gaussian(g: &Graph, sa: &SuperAlgebra, u: &[f64]) -> Result<GrassmannElement> {
    let a = crate::sigma_core::build_a_vv(g, u);
    let alg = sa.combined.clone();
    let form = sa.psi_form(&|i, j| GrassmannElement::scalar(&alg, a[(i, j)]));
    (-form).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{single_edge, triangle};

    fn quick() -> ChainConfig {
        ChainConfig { n_samples: 20_000, burn_in: 500, ..Default::default() }.with_seed(11)
    }

    #[test]
    fn constant_observable_is_exact() {
        let g = triangle(1.0, 1.0, 1.0);
        let e = expect_scalar(&g, &quick(), |_| 1.0).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn seed_determinism() {
        let g = single_edge(1.0);
        let a = expect_scalar(&g, &quick(), |d| d.u[0]).unwrap();
        let b = expect_scalar(&g, &quick(), |d| d.u[0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nan_observable_fails() {
        let g = single_edge(1.0);
        let r = expect_scalar(&g, &quick(), |_| f64::NAN);
        assert!(matches!(r, Err(Error::Estimation(_))));
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig { n_chains: 0, ..Default::default() }.validate().is_err());
        assert!(ChainConfig { proposal_scale: 0.0, ..Default::default() }.validate().is_err());
        let cc = ChainConfig { n_samples: 100, n_chains: 3, ..Default::default() };
        assert_eq!(cc.per_chain() % BATCHES_PER_CHAIN, 0);
        assert!(cc.per_chain() * 3 >= 100);
    }

    #[test]
    fn acceptance_after_tuning() {
        let g = single_edge(1.0);
        let cc = quick();
        let e = expect(&g, &cc, 1, |d, o| {
            o[0] = d.u[0];
            Ok(())
        })
        .unwrap();
        assert!((0.1..=0.7).contains(&e.acceptance), "acceptance {}", e.acceptance);
    }

    #[test]
    fn super_expect_of_one_is_exact() {
        let g = triangle(1.0, 0.5, 2.0);
        let params = GeneratorSet::new(["chibar_1", "chi_1"]).unwrap();
        let sa = SuperAlgebra::new(&g, &params).unwrap();
        let e = super_expect(&g, &sa, &quick(), |d| Ok(psi_gaussian(&g, &sa, d.u)?.to_complex())).unwrap();
        assert!((e.mean_re[0] - 1.0).abs() < 1e-12);
        assert!(e.stderr_re[0] < 1e-12);
        for k in 1..4 {
            assert_eq!(e.mean_re[k], 0.0);
        }
    }
}
