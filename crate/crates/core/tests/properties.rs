use blowup_core::classify::{a_matrix, semigroup_trace, set_a_matrix};
use blowup_core::csv::num;
use blowup_core::energy::{j_from_e, Functionals};
use blowup_core::experiment::{ExperimentConfig, Scenario};
use blowup_core::hermite::{
    build_quadrature, eval_h, eval_h_closed, multi_indices, project, semigroup_apply, HermiteCoeffs, MultiIndex,
};
use blowup_core::numerics::{geomspace, linspace};
use blowup_core::params::{Perturbation, ProblemParams};
use blowup_core::pde::{Field, Frame, Grid, GridOperator};
use blowup_core::profiles::{residual_g, xi_lattice, ProfileSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn pert() -> impl Strategy<Value = (f64, f64, Perturbation)> {
    prop_oneof![
        (1.2f64..4.0).prop_map(|p| (p, 0.0, Perturbation::Zero)),
        (1.2f64..4.0, -1.0f64..1.0).prop_map(|(p, mu)| (p, mu, Perturbation::LogDamped)),
        (1.6f64..4.0, 0.1f64..0.9).prop_map(|(p, t)| (p, 1.0, Perturbation::PowerSub { q: 1.0 + t * (p - 1.0) })),
    ]
}

fn coeffs(n: usize, deg: usize) -> impl Strategy<Value = HermiteCoeffs> {
    let len = multi_indices(n, deg).len();
    prop::collection::vec(-1.0f64..1.0, len).prop_map(move |v| {
        let mut c = HermiteCoeffs::zeros(n, deg);
        c.coeffs = v;
        c
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn derivation_is_idempotent((p, mu, pt) in pert()) {
        let a = ProblemParams::derive(1, p, 2.0, 1e4, mu, pt).unwrap().with_theta(3.0).unwrap();
        let b = a.rederive().unwrap();
        prop_assert_eq!(a.kappa.to_bits(), b.kappa.to_bits());
        prop_assert_eq!(a.c0.to_bits(), b.c0.to_bits());
        prop_assert_eq!(a.s0.to_bits(), b.s0.to_bits());
        prop_assert_eq!(a.gamma.to_bits(), b.gamma.to_bits());
        prop_assert_eq!(a.theta.to_bits(), b.theta.to_bits());
    }

    #[test]
    fn bound_holds_on_sub_grids((p, mu, pt) in pert(), lo in 0usize..300, stride in 1usize..7) {
        let prm = ProblemParams::derive(1, p, 2.0, 1e4, mu, pt).unwrap();
        let g = prm.bound_grid;
        let w: Vec<f64> = linspace(-g.w_max, g.w_max, g.n_w).into_iter().skip(lo / 3).step_by(stride).collect();
        let s: Vec<f64> = geomspace(prm.s0, g.s_max, g.n_s).into_iter().skip(lo).step_by(stride).collect();
        prop_assert!(prm.check_perturbation_bound(&w, &s) <= prm.c0);
    }

    #[test]
    fn log_damped_h_is_odd(p in 1.2f64..4.0, mu in -2.0f64..2.0) {
        let prm = ProblemParams::derive(1, p, 2.0, 1e4, mu, Perturbation::LogDamped).unwrap();
        for z in geomspace(1e-6, 1e6, 97) {
            prop_assert_eq!(prm.h(0, -z), -prm.h(0, z));
        }
    }

    #[test]
    fn j_is_rebuilt_from_stored_fields(amp in 0.1f64..2.0, s in 2.0f64..50.0, theta in 0.0f64..8.0) {
        let prm = ProblemParams::derive(1, 2.0, 2.0, 10.0, 1.0, Perturbation::LogDamped).unwrap().with_theta(theta).unwrap();
        let g = Grid::new(1, 8.0, 0.1).unwrap();
        let f = Field::from_fn(g.clone(), s, Frame::Similarity, |y| amp * (-y[0] * y[0] / 4.0).exp()).unwrap();
        let r = Functionals::new(&g).report(&f, &prm, None);
        prop_assert_eq!(r.e.to_bits(), (r.e0 + r.i).to_bits());
        prop_assert_eq!(r.j.to_bits(), j_from_e(&prm, r.e, r.s).to_bits());
    }
}

proptest! {
    #[test]
    fn kappa_is_the_constant_solution(p in 1.05f64..6.0) {
        let k = blowup_core::params::kappa(p);
        prop_assert!((k.powf(p) - k / (p - 1.0)).abs() <= 1e-12 * k.powf(p));
    }

    #[test]
    fn hermite_recurrence_matches_closed_form(m in 0usize..12, y in -6.0f64..6.0) {
        let a = eval_h(m, y);
        let b = eval_h_closed(m, y);
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
    }

    #[test]
    fn project_reconstruct_round_trip(c in coeffs(2, 5)) {
        let quad = build_quadrature(2, 7).unwrap();
        let vals: Vec<f64> = (0..quad.len()).map(|i| c.reconstruct(quad.node(i))).collect();
        let back = project(&vals, &quad, 5).unwrap();
        for (x, y) in c.coeffs.iter().zip(&back.coeffs) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
    }

    #[test]
    fn semigroup_composes(c in coeffs(2, 6), s1 in -2.0f64..4.0, s2 in -2.0f64..4.0) {
        let ab = semigroup_apply(&semigroup_apply(&c, s1), s2);
        let d = semigroup_apply(&c, s1 + s2);
        for (x, y) in ab.coeffs.iter().zip(&d.coeffs) {
            // exp of a rounded argument: error grows with |λ|(|s1| + |s2|) ≤ 16
            prop_assert!((x - y).abs() <= 32.0 * f64::EPSILON * x.abs().max(y.abs()));
        }
    }

    #[test]
    fn zxy_pythagoras(c in coeffs(2, 6), t in 0.0f64..5.0) {
        let tr = semigroup_trace(2, 6, &c, &[0.0, t]);
        for x in &tr.snapshots {
            let lhs = x.z * x.z + x.x * x.x + x.y * x.y;
            let rhs = x.coeffs.norm_sq();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
            prop_assert!((x.v_norm * x.v_norm - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }
    }

    #[test]
    fn a_matrix_round_trip(v in prop::collection::vec(-1.0f64..1.0, 3)) {
        let a = DMatrix::from_row_slice(2, 2, &[v[0], v[1], v[1], v[2]]);
        let mut c = HermiteCoeffs::zeros(2, 2);
        set_a_matrix(&mut c, &a).unwrap();
        prop_assert_eq!(a_matrix(&c), a);
    }

    #[test]
    fn quadratic_profile_shape(p in 1.2f64..4.0, x in -5.0f64..5.0, y in -5.0f64..5.0, t in 1.0f64..3.0) {
        let prm = ProblemParams::derive(2, p, 2.0, 10.0, 0.0, Perturbation::Zero).unwrap();
        let f2 = ProfileSpec::quadratic(&prm, 2).unwrap();
        let f1 = ProfileSpec::quadratic(&prm, 1).unwrap();
        let v = f2.eval(&[x, y]).unwrap();
        prop_assert!(v > 0.0 && v <= prm.kappa);
        prop_assert_eq!(v, f2.eval(&[-x, y]).unwrap());
        prop_assert_eq!(v, f2.eval(&[x, -y]).unwrap());
        // summation order differs; the power −1/(p−1) scales the rounding
        prop_assert!((v - f2.eval(&[y, x]).unwrap()).abs() <= 4.0 * f64::EPSILON * v * (1.0 + 1.0 / (p - 1.0)));
        // decreasing along rays in the active coordinates
        prop_assert!(f2.eval(&[t * x, t * y]).unwrap() <= v);
        prop_assert_eq!(f1.eval(&[x, y]).unwrap(), f1.eval(&[x, 0.0]).unwrap());
    }

    #[test]
    fn higher_profile_solves_its_equation(p in 1.2f64..4.0, c in prop::collection::vec(0.1f64..2.0, 3)) {
        let prm = ProblemParams::derive(2, p, 2.0, 10.0, 0.0, Perturbation::Zero).unwrap();
        let spec = ProfileSpec::higher_psi(
            &prm,
            4,
            vec![(MultiIndex::new(vec![4, 0]), c[0]), (MultiIndex::new(vec![2, 2]), c[1]), (MultiIndex::new(vec![0, 4]), c[2])],
        )
        .unwrap();
        // the terms of the identity are of size κ^p
        let scale = prm.kappa.powf(p).max(1.0);
        prop_assert!(residual_g(&spec, &xi_lattice(2, 2.0)).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn csv_numbers_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn operator_is_self_adjoint(seed in prop::collection::vec(-1.0f64..1.0, 8)) {
        let g = Grid::new(1, 6.0, 0.1).unwrap();
        let f: Vec<f64> = g.coords().iter().map(|y| seed[0] + seed[1] * y + seed[2] * (seed[3] * y).sin()).collect();
        let h: Vec<f64> = g.coords().iter().map(|y| seed[4] + seed[5] * y * y + seed[6] * (seed[7] * y).cos()).collect();
        let op = GridOperator::new(&g, Frame::Similarity);
        let w = g.weights();
        let lhs = op.inner(&op.apply(&f), &h, &w);
        let rhs = op.inner(&f, &op.apply(&h), &w);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn config_round_trips(p in 1.1f64..5.0, mu in -3.0f64..3.0, dx in 1e-4f64..1e-1, seed in 0..=i64::MAX as u64) {
        let mut c = ExperimentConfig::new(Scenario::PdeBlowup);
        c.params.p = p;
        c.params.mu = mu;
        c.pde.dx = dx;
        c.seed = seed;
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn oversized_seed_is_a_config_error(seed in (i64::MAX as u64 + 1)..=u64::MAX) {
        let mut c = ExperimentConfig::new(Scenario::OdeRate);
        c.seed = seed;
        let err = c.validate().unwrap_err().to_string();
        prop_assert!(err.contains("seed"), "{}", err);
    }
}
