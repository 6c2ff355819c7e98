//! Per-coefficient comparisons, verdict policy and the report format.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::grassmann::ComplexGrassmann;
use crate::sampler::{GrassmannEstimate, ScalarEstimate};

/// Combined standard errors below this are treated as this value.
pub const STDERR_FLOOR: f64 = 1e-12;

/// One compared quantity.
///
/// Statistical comparisons (`tolerance == None`) report the z-score
/// `(estimate − reference) / max(√(stderr² + reference_stderr²), floor)`.
/// Deterministic ones report `|estimate − reference| / tolerance` as `z` and
/// pass iff it is at most 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub label: String,
    pub subset: Vec<String>,
    pub estimate: f64,
    pub stderr: f64,
    pub reference: f64,
    #[serde(default)]
    pub reference_stderr: f64,
    pub z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Coefficient {
    pub fn statistical(
        label: impl Into<String>,
        subset: Vec<String>,
        estimate: f64,
        stderr: f64,
        reference: f64,
        reference_stderr: f64,
    ) -> Self {
        let se = (stderr * stderr + reference_stderr * reference_stderr).sqrt().max(STDERR_FLOOR);
        let z = if estimate == reference { 0.0 } else { (estimate - reference) / se };
        Self { label: label.into(), subset, estimate, stderr, reference, reference_stderr, z, tolerance: None }
    }

    pub fn deterministic(label: impl Into<String>, estimate: f64, reference: f64, tolerance: f64) -> Self {
        let res = (estimate - reference).abs();
        let z = if res == 0.0 { 0.0 } else { res / tolerance };
        Self {
            label: label.into(),
            subset: vec![],
            estimate,
            stderr: 0.0,
            reference,
            reference_stderr: 0.0,
            z: if z.is_nan() { f64::INFINITY } else { z },
            tolerance: Some(tolerance),
        }
    }

    /// Relative deterministic comparison: `|estimate/reference − 1| ≤ tolerance`.
    pub fn relative(label: impl Into<String>, estimate: f64, reference: f64, tolerance: f64) -> Self {
        let mut c = Self::deterministic(label, estimate, reference, tolerance);
        let res = if estimate == reference { 0.0 } else { (estimate / reference - 1.0).abs() };
        c.z = if res.is_nan() { f64::INFINITY } else { res / tolerance };
        c
    }

    pub fn with_subset(mut self, subset: Vec<String>) -> Self {
        self.subset = subset;
        self
    }

    pub fn is_statistical(&self) -> bool {
        self.tolerance.is_none()
    }
}

/// Compare a scalar estimate against an exact value.
pub fn scalar_vs_exact(label: &str, e: &ScalarEstimate, reference: f64) -> Coefficient {
    Coefficient::statistical(label, vec![], e.mean, e.stderr, reference, 0.0)
}

/// Compare two independent scalar estimates.
pub fn scalar_vs_scalar(label: &str, a: &ScalarEstimate, b: &ScalarEstimate) -> Coefficient {
    Coefficient::statistical(label, vec![], a.mean, a.stderr, b.mean, b.stderr)
}

fn parts(z: Complex64) -> [(&'static str, f64); 2] {
    [("re", z.re), ("im", z.im)]
}

/// Compare every coefficient (real and, if `complex`, imaginary part) of a
/// Grassmann-valued estimate against an exact element of the same algebra.
pub fn grassmann_vs_exact(
    label: &str,
    est: &GrassmannEstimate,
    reference: &ComplexGrassmann,
    complex: bool,
) -> Vec<Coefficient> {
    let mut out = Vec::new();
    for &mask in &est.masks {
        let (m, se) = est.coefficient(mask);
        let r = reference.coeff(mask);
        let subset = reference.subset_names(mask);
        for ((part, mv), (_, sv)) in parts(m).into_iter().zip(parts(se)) {
            if part == "im" && !complex {
                continue;
            }
            let rv = if part == "re" { r.re } else { r.im };
            out.push(Coefficient::statistical(format!("{label} [{part}]"), subset.clone(), mv, sv, rv, 0.0));
        }
    }
    out
}

/// Compare two independent Grassmann-valued estimates coefficientwise.
pub fn grassmann_vs_grassmann(label: &str, a: &GrassmannEstimate, b: &GrassmannEstimate, complex: bool) -> Vec<Coefficient> {
    let mut out = Vec::new();
    for &mask in &a.masks {
        let (ma, sa) = a.coefficient(mask);
        let (mb, sb) = b.coefficient(mask);
        let subset: Vec<String> = (0..a.generators.len())
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| a.generators[k].clone())
            .collect();
        let pa = parts(ma);
        let psa = parts(sa);
        let pb = parts(mb);
        let psb = parts(sb);
        for k in 0..2 {
            if k == 1 && !complex {
                continue;
            }
            out.push(Coefficient::statistical(
                format!("{label} [{}]", pa[k].0),
                subset.clone(),
                pa[k].1,
                psa[k].1,
                pb[k].1,
                psb[k].1,
            ));
        }
    }
    out
}

/// Verdict thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    /// Per-coefficient z threshold before multiplicity correction.
    pub z_threshold: f64,
    /// Widen the threshold so that the family of statistical coefficients in
    /// one report keeps the single-coefficient false-failure rate.
    pub bonferroni: bool,
}

impl Default for Policy {
    fn default() -> Self {
        Self { z_threshold: 3.0, bonferroni: true }
    }
}

impl Policy {
    /// Effective threshold for `k` statistical coefficients.
    pub fn threshold(&self, k: usize) -> f64 {
        if !(self.z_threshold > 0.0) {
            return 0.0;
        }
        if !self.bonferroni || k <= 1 {
            return self.z_threshold;
        }
        let n = Normal::new(0.0, 1.0).expect("standard normal");
        let alpha = 2.0 * (1.0 - n.cdf(self.z_threshold));
        n.inverse_cdf(1.0 - alpha / (2.0 * k as f64)).max(self.z_threshold)
    }

    /// `(pass, effective threshold)`.  A non-positive threshold always fails.
    pub fn judge(&self, coefficients: &[Coefficient]) -> (bool, f64) {
        let k = coefficients.iter().filter(|c| c.is_statistical()).count();
        let t = self.threshold(k);
        if !(self.z_threshold > 0.0) {
            return (false, t);
        }
        let ok = !coefficients.is_empty()
            && coefficients.iter().all(|c| match c.tolerance {
                None => c.z.abs() <= t,
                Some(_) => c.z.abs() <= 1.0,
            });
        (ok, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub verdict: Verdict,
    pub seed: u64,
    pub coefficients: Vec<Coefficient>,
    pub runtime_s: f64,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Largest `|z|` among statistical coefficients.
    pub fn max_abs_z(&self) -> f64 {
        self.coefficients.iter().filter(|c| c.is_statistical()).map(|c| c.z.abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bonferroni_widens() {
        let p = Policy::default();
        assert_eq!(p.threshold(1), 3.0);
        let t = p.threshold(32);
        assert!(t > 3.5 && t < 4.5, "{t}");
        assert_eq!(Policy { bonferroni: false, ..p }.threshold(32), 3.0);
    }

    #[test]
    fn zero_threshold_fails() {
        let c = vec![Coefficient::statistical("x", vec![], 1.0, 0.1, 1.0, 0.0)];
        assert!(Policy::default().judge(&c).0);
        assert!(!Policy { z_threshold: 0.0, bonferroni: true }.judge(&c).0);
    }

    #[test]
    fn floors_and_deterministic() {
        let c = Coefficient::statistical("x", vec![], 1.0, 0.0, 1.0 + 1e-9, 0.0);
        assert!(c.z.abs() > 100.0);
        let d = Coefficient::deterministic("y", 1.0, 1.0 + 1e-13, 1e-12);
        assert!(d.z <= 1.0);
        assert!(Coefficient::deterministic("y", f64::NAN, 1.0, 1e-12).z.is_infinite());
    }
}
