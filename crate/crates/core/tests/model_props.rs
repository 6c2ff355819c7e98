//! Invariants of the bosonic model on random small graphs.

use nalgebra::DMatrix;
use proptest::prelude::*;
use susy_sigma::graph::Graph;
use susy_sigma::scaling::{
    density_ratio, laplace_closed_form, radon_nikodym, rescale_weights, scale_fields, Direction, ScaleParams,
};
use susy_sigma::sigma_core::{
    build_a, compute_beta, compute_theta, compute_theta_componentwise, h_beta, h_beta_direct, log_rho,
    s_from_beta_theta, spinor_det, spinor_norm_form, u_from_beta, FieldConfig, RhoMode,
};

/// Connected graph on 2..=5 vertices (last one pinned): a random spanning
/// tree plus random extra edges.
fn graph() -> impl Strategy<Value = Graph> {
    (2usize..=5)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec((0.0f64..1.0, 0.2f64..2.0), n),
                prop::collection::vec(prop::option::weighted(0.3, 0.2f64..2.0), n * n),
            )
        })
        .prop_map(|(n, tree, extra)| {
            let mut w = DMatrix::zeros(n, n);
            for k in 1..n {
                let j = ((tree[k].0 * k as f64) as usize).min(k - 1);
                w[(k, j)] = tree[k].1;
                w[(j, k)] = tree[k].1;
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    if let (0.0, Some(x)) = (w[(i, j)], extra[i * n + j]) {
                        w[(i, j)] = x;
                        w[(j, i)] = x;
                    }
                }
            }
            Graph::from_weights(w).unwrap()
        })
}

fn with_fields() -> impl Strategy<Value = (Graph, FieldConfig)> {
    graph().prop_flat_map(|g| {
        let n = g.n_free();
        (Just(g), prop::collection::vec(-1.5f64..1.5, n), prop::collection::vec(-2.0f64..2.0, n))
            .prop_map(|(g, u, s)| (g, FieldConfig::from_free(&u, &s)))
    })
}

fn with_params() -> impl Strategy<Value = (Graph, FieldConfig, ScaleParams)> {
    with_fields().prop_flat_map(|(g, cfg)| {
        let n = g.n_free();
        (Just(g), Just(cfg), prop::collection::vec(0.4f64..2.5, n), prop::collection::vec(-1.0f64..1.0, n))
            .prop_map(|(g, c, a, b)| (g, c, ScaleParams::new(&a, &b).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rho_representations_agree((g, cfg) in with_fields()) {
        let d = log_rho(&g, &cfg, RhoMode::Direct).unwrap();
        prop_assert!((log_rho(&g, &cfg, RhoMode::Quadratic).unwrap() - d).abs() < 1e-12 * d.abs().max(1.0));
        prop_assert!((log_rho(&g, &cfg, RhoMode::Spinor).unwrap() - d).abs() < 1e-12 * d.abs().max(1.0));
    }

    #[test]
    fn spinor_identity(ai in 0.1f64..3.0, bi in -2.0f64..2.0, aj in 0.1f64..3.0, bj in -2.0f64..2.0) {
        let d = spinor_det(ai, bi, aj, bj);
        prop_assert!((d - spinor_norm_form(ai, bi, aj, bj)).abs() <= 1e-12 * d.abs().max(1.0));
    }

    #[test]
    fn a_matrix_rows_sum_to_zero((g, cfg) in with_fields()) {
        let a = build_a(&g, &cfg.u);
        for i in 0..g.n_tilde() {
            let row: f64 = a.row(i).iter().sum();
            prop_assert!(row.abs() < 1e-12 * a[(i, i)].max(1.0));
        }
        prop_assert!((&a - a.transpose()).amax() == 0.0);
    }

    #[test]
    fn theta_and_h_beta_forms_agree((g, cfg) in with_fields()) {
        let t1 = compute_theta(&g, &cfg.u, &cfg.s);
        let t2 = compute_theta_componentwise(&g, &cfg.u, &cfg.s);
        for (x, y) in t1.iter().zip(&t2) {
            prop_assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
        let h = h_beta(&g, &cfg.u);
        prop_assert!((&h - h_beta_direct(&g, &cfg.u)).amax() < 1e-12 * h.amax().max(1.0));
    }

    #[test]
    fn inversions_round_trip((g, cfg) in with_fields()) {
        let beta = compute_beta(&g, &cfg.u);
        let theta = compute_theta(&g, &cfg.u, &cfg.s);
        let u = u_from_beta(&g, &beta).unwrap();
        let s = s_from_beta_theta(&g, &beta, &theta).unwrap();
        for i in 0..g.n_free() {
            prop_assert!((u[i] - cfg.u[i]).abs() <= 1e-8, "u: {:?} vs {:?}", u, cfg.u);
            prop_assert!((s[i] - cfg.s[i]).abs() <= 1e-8, "s: {:?} vs {:?}", s, cfg.s);
        }
    }

    #[test]
    fn a_matrix_is_scale_invariant((g, cfg, p) in with_params()) {
        let ga = rescale_weights(&p, &g).unwrap();
        let shifted: Vec<f64> = cfg.u.iter().zip(&p.a).map(|(u, a)| u - a.ln()).collect();
        let lhs = build_a(&ga, &shifted);
        let rhs = build_a(&g, &cfg.u);
        prop_assert!((lhs - &rhs).amax() <= 1e-12 * rhs.amax());
    }

    #[test]
    fn radon_nikodym_matches_density_ratio((g, cfg, p) in with_params()) {
        let r1 = radon_nikodym(&g, &p, &cfg).unwrap();
        let r2 = density_ratio(&g, &p, &cfg).unwrap();
        prop_assert!((r1 / r2 - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn scaling_maps_invert((g, cfg, p) in with_params()) {
        let there = scale_fields(&p, &cfg, Direction::Forward);
        let back = scale_fields(&p, &there, Direction::Inverse);
        for i in 0..g.n_tilde() {
            prop_assert!((back.u[i] - cfg.u[i]).abs() < 1e-12);
            prop_assert!((back.s[i] - cfg.s[i]).abs() < 1e-10 * cfg.s[i].abs().max(1.0));
        }
    }

    #[test]
    fn scale_params_compose((g, _cfg, p) in with_params(), a2 in 0.5f64..2.0, b2 in -1.0f64..1.0) {
        let q = ScaleParams::uniform(&g, a2, b2).unwrap();
        let pq = p.compose(&q);
        prop_assert!(pq.check(&g).is_ok());
        let back = pq.compose(&pq.inverse());
        for i in 0..g.n_tilde() {
            prop_assert!((back.a[i] - 1.0).abs() < 1e-12);
            prop_assert!(back.b[i].abs() < 1e-12);
        }
        prop_assert!(laplace_closed_form(&g, &ScaleParams::identity(&g)).unwrap() == 1.0);
    }
}
