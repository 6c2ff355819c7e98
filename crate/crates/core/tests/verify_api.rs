use susy_sigma::grassmann::{GeneratorSet, GroupElement};
use susy_sigma::graph::fixtures::{single_edge, triangle};
use susy_sigma::sampler::{psi_gaussian, super_expect, ChainConfig, SuperAlgebra};
use susy_sigma::supersym::checks::super_image_measure_check;
use susy_sigma::supersym::SuperObservable;
use susy_sigma::verify::{matching_ids, run_check, run_suite, CheckSpec, Policy, Report};

fn zero_runtime(mut r: Report) -> Report {
    r.runtime_s = 0.0;
    r
}

#[test]
fn super_expectation_of_one_is_exact() {
    let g = triangle(1.0, 0.7, 1.3);
    let sa = SuperAlgebra::new(&g, &GeneratorSet::empty()).unwrap();
    let cc = ChainConfig::default().with_samples(4096).with_seed(1);
    let est = super_expect(&g, &sa, &cc, |d| Ok(psi_gaussian(&g, &sa, d.u)?.to_complex())).unwrap();
    let (m, se) = est.coefficient(0);
    assert!((m.re - 1.0).abs() < 1e-12 && m.im == 0.0, "{m}");
    assert!(se.re < 1e-12, "{se}");
}

#[test]
fn laplace_real_on_the_edge_is_within_three_sigma() {
    let mut spec = CheckSpec::new("laplace-real")
        .with_chain(ChainConfig::default().with_samples(200_000).with_seed(11))
        .with_policy(Policy { z_threshold: 3.0, bonferroni: false });
    spec.graph = Some(single_edge(1.0));
    let r = run_check(&spec).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(r.coefficients.iter().all(|c| c.z.abs() <= 3.0));
}

#[test]
fn martingale_filter_selects_three_checks() {
    assert_eq!(matching_ids("martingale-*").unwrap(), ["martingale-generating", "martingale-derivatives", "martingale-special-cases"]);
    assert_eq!(matching_ids("*").unwrap().len(), 17);
    assert!(matching_ids("[").is_err());
}

#[test]
fn parallelism_does_not_change_reports() {
    let base = CheckSpec::new("").with_chain(ChainConfig::default().with_samples(8192).with_seed(3));
    let one = run_suite("[jtw]*", 1, &base).unwrap();
    let four = run_suite("[jtw]*", 4, &base).unwrap();
    assert_eq!(one.reports.len(), 3);
    let a: Vec<Report> = one.reports.into_iter().map(zero_runtime).collect();
    let b: Vec<Report> = four.reports.into_iter().map(zero_runtime).collect();
    assert_eq!(a, b);
}

#[test]
fn image_measure_with_constant_one_reduces_to_the_laplace_transform() {
    let g = single_edge(1.0);
    let v = GroupElement::from_real(&GeneratorSet::empty(), &[1.2], &[0.3]).unwrap();
    let cc = ChainConfig::default().with_samples(100_000).with_seed(5);
    let coefs = super_image_measure_check(&g, &v, &SuperObservable::constant_one(), &cc).unwrap();
    // real part of the body only; imaginary parts are identically zero
    let body = &coefs[0];
    assert!(body.z.abs() < 3.5, "{body:?}");
    assert!((body.reference - 0.68228).abs() < 5e-6, "{body:?}");
}

#[test]
fn out_of_range_tilt_is_reported_not_faked() {
    // (a, b) = (0.8, 0.5) gives a tilted integrand with infinite variance on the edge
    let mut spec = CheckSpec::new("laplace-real").with_chain(ChainConfig::default().with_samples(4096));
    spec.graph = Some(single_edge(1.0));
    spec.ab = Some((0.8, 0.5));
    let r = run_check(&spec).unwrap();
    assert!(!r.passed());
    assert!(r.error.as_deref().unwrap_or("").contains("variance"), "{r:?}");
}
