use proptest::collection::vec;
use proptest::prelude::*;

use sfp_core::mappings::{
    average, estimate_demicontractive_modulus, fixed_point_residual, lipschitz_slack,
    verify_quasi_nonexpansive,
};
use sfp_core::solver::{
    f_value, grad_f, run, CompositionMode, ParameterSchedule, StepperConfig, Stopping,
};
use sfp_core::{
    BoundedLinearMap, ConvexSet, DomainSampler, MappingClass, MappingSpec, SelfMap, SfpProblem,
    Vector,
};

const DIM: usize = 4;

fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-10.0f64..10.0, n)
}

fn vector(n: usize) -> impl Strategy<Value = Vector> {
    entries(n).prop_map(|e| Vector::new(e).unwrap())
}

fn matrix() -> impl Strategy<Value = BoundedLinearMap> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
        vec(-5.0f64..5.0, r * c).prop_map(move |d| BoundedLinearMap::new(r, c, d).unwrap())
    })
}

fn nonzero(n: usize) -> impl Strategy<Value = Vector> {
    vector(n).prop_filter("nonzero normal", |v| v.norm() > 1e-3)
}

fn convex_set() -> impl Strategy<Value = ConvexSet> {
    prop_oneof![
        (vector(DIM), vec(0.0f64..3.0, DIM)).prop_map(|(c, w)| {
            let w = Vector::new(w).unwrap();
            ConvexSet::boxed(&c - &w, &c + &w).unwrap()
        }),
        (vector(DIM), 0.1f64..5.0).prop_map(|(c, r)| ConvexSet::ball(c, r).unwrap()),
        (nonzero(DIM), -5.0f64..5.0).prop_map(|(a, b)| ConvexSet::halfspace(a, b).unwrap()),
        (nonzero(DIM), -5.0f64..5.0).prop_map(|(a, b)| ConvexSet::hyperplane(a, b).unwrap()),
        vector(DIM).prop_map(ConvexSet::singleton),
        (1usize..DIM + 1)
            .prop_flat_map(|r| vec(-3.0f64..3.0, r * DIM).prop_map(move |d| (r, d)))
            .prop_map(|(r, d)| ConvexSet::affine_nullspace(BoundedLinearMap::new(r, DIM, d).unwrap())),
        Just(ConvexSet::whole_space(DIM)),
    ]
}

/// Instance with a planted solution `x̂`: `C` a ball around `x̂`, `Q` a box
/// around `Ax̂`.
fn planted_problem() -> impl Strategy<Value = SfpProblem> {
    (
        vec(-2.0f64..2.0, 3 * DIM),
        vector(DIM),
        0.1f64..2.0,
        vec(0.05f64..1.0, 3),
    )
        .prop_map(|(a, x, r, w)| {
            let a = BoundedLinearMap::new(3, DIM, a).unwrap();
            let ax = a.apply(&x).unwrap();
            let w = Vector::new(w).unwrap();
            SfpProblem::new(
                a,
                ConvexSet::ball(x.clone(), r).unwrap(),
                ConvexSet::boxed(&ax - &w, &ax + &w).unwrap(),
                None,
                MappingSpec::zero(DIM),
            )
            .unwrap()
            .with_known_solution(x)
            .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn adjoint_identity(m in matrix(), seed in any::<u64>()) {
        let mut rng = sfp_core::sampling::seeded(seed);
        let x = sfp_core::sampling::gaussian_vector(&mut rng, m.cols(), 3.0);
        let y = sfp_core::sampling::gaussian_vector(&mut rng, m.rows(), 3.0);
        let lhs = m.apply(&x).unwrap().dot(&y);
        let rhs = x.dot(&m.apply_adjoint(&y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + x.norm() * y.norm()));
    }

    #[test]
    fn convex_combination_identity(x in vector(DIM), y in vector(DIM), t in 0.0f64..=1.0) {
        let lhs = Vector::lincomb(t, &x, 1.0 - t, &y).norm_squared();
        let rhs = t * x.norm_squared() + (1.0 - t) * y.norm_squared()
            - t * (1.0 - t) * x.distance(&y).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + x.norm_squared() + y.norm_squared()));
    }

    #[test]
    fn sum_square_inequality(x in vector(DIM), y in vector(DIM)) {
        let s = &x + &y;
        let lhs = s.norm_squared();
        let rhs = x.norm_squared() + 2.0 * y.dot(&s);
        prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn operator_norm_bounds_every_direction(m in matrix(), x in vector(5)) {
        let x = Vector::from_slice(&x.as_slice()[..m.cols()]).unwrap();
        prop_assume!(x.norm() > 1e-6);
        let tol = 1e-10;
        let est = m.operator_norm(tol, 100_000).unwrap();
        let ratio = m.apply(&x).unwrap().norm() / x.norm();
        prop_assert!(est >= ratio - tol * m.frobenius_norm() - 1e-12, "{est} < {ratio}");
    }

    #[test]
    fn projection_properties(set in convex_set(), x in vector(DIM), z in vector(DIM), seed in any::<u64>()) {
        let px = set.project(&x).unwrap();
        let pz = set.project(&z).unwrap();
        prop_assert!(set.project(&px).unwrap().distance(&px) <= 1e-10);
        prop_assert!(px.distance(&pz) <= x.distance(&z) + 1e-10);
        prop_assert!(px.distance(&pz).powi(2) <= (&x - &z).dot(&(&px - &pz)) + 1e-10);
        let report = sfp_core::sets::check_projection_characterization(&set, &x, 50, seed).unwrap();
        prop_assert!(report.holds(1e-10), "{report:?}");
        prop_assert!(set.membership_residual(&px).unwrap() <= 1e-10);
    }

    #[test]
    fn nullspace_projection_is_linear(
        d in vec(-3.0f64..3.0, 2 * DIM),
        x in vector(DIM),
        y in vector(DIM),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let set = ConvexSet::affine_nullspace(BoundedLinearMap::new(2, DIM, d).unwrap());
        let lhs = set.project(&Vector::lincomb(a, &x, b, &y)).unwrap();
        let rhs = Vector::lincomb(a, &set.project(&x).unwrap(), b, &set.project(&y).unwrap());
        prop_assert!(lhs.distance(&rhs) <= 1e-10 * (1.0 + x.norm() + y.norm()));
    }

    #[test]
    fn averaging_matches_definition_and_keeps_fixed_points(
        lambda in 0.001f64..=1.0,
        x in -1.0f64..2.0,
    ) {
        let t = MappingSpec::example_2_2();
        let avg = average(&t, lambda).unwrap();
        let xv = Vector::from_slice(&[x]).unwrap();
        let expected = (1.0 - lambda) * x + lambda * t.eval(&xv)[0];
        prop_assert_eq!(avg.eval(&xv)[0], expected);
        for p in t.known_fixed_points() {
            prop_assert!(fixed_point_residual(&avg, p).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn modulus_estimate_is_monotone_in_samples(seed in any::<u64>(), n in 1usize..200, extra in 1usize..200) {
        let t = MappingSpec::example_2_2();
        let star = Vector::from_slice(&[7.0 / 8.0]).unwrap();
        let sampler = DomainSampler::UniformBox { lower: vec![0.0], upper: vec![1.0] };
        let small = estimate_demicontractive_modulus(&t, &star, &sampler, n, seed).unwrap();
        let large = estimate_demicontractive_modulus(&t, &star, &sampler, n + extra, seed).unwrap();
        prop_assert!(large >= small);
        prop_assert!(large <= 2.0 / 3.0 + 1e-12);
    }

    #[test]
    fn contraction_slacks_are_ordered(c in 0.0f64..0.99, shift in vector(DIM), seed in any::<u64>()) {
        // g(x) = c x + shift has the single fixed point shift / (1 − c)
        let g = MappingSpec::affine(BoundedLinearMap::diagonal(&[c; DIM]), shift.clone())
            .unwrap()
            .with_class(MappingClass::Contraction(c))
            .unwrap();
        let p = shift.scale(1.0 / (1.0 - c));
        let sampler = DomainSampler::Gaussian { center: p.as_slice().to_vec(), scale: 5.0 };
        let contraction = lipschitz_slack(&g, c, &sampler, 100, seed).unwrap().max_slack;
        let nonexpansive = lipschitz_slack(&g, 1.0, &sampler, 100, seed).unwrap().max_slack;
        let qne = verify_quasi_nonexpansive(&g, &p, &sampler, 100, seed).unwrap().max_slack;
        let k = estimate_demicontractive_modulus(&g, &p, &sampler, 100, seed).unwrap();
        prop_assert!(contraction <= 1e-9);
        prop_assert!(nonexpansive <= contraction + 1e-12);
        prop_assert!(qne <= 1e-9);
        prop_assert!(k <= 1e-9);
    }

    #[test]
    fn gradient_matches_central_differences(p in planted_problem(), x in vector(DIM)) {
        let g = grad_f(&p, &x).unwrap();
        let h = 1e-6 * (1.0 + x.norm());
        let mut fd = Vec::with_capacity(DIM);
        for i in 0..DIM {
            let mut plus = x.as_slice().to_vec();
            let mut minus = plus.clone();
            plus[i] += h;
            minus[i] -= h;
            let fp = f_value(&p, &Vector::new(plus).unwrap()).unwrap();
            let fm = f_value(&p, &Vector::new(minus).unwrap()).unwrap();
            fd.push((fp - fm) / (2.0 * h));
        }
        let fd = Vector::new(fd).unwrap();
        // f is only C^{1,1}: a kink of P_Q inside the stencil costs O(h‖A‖²)
        let kink = h * p.a().frobenius_norm().powi(2);
        prop_assert!(g.distance(&fd) <= 1e-6 * g.norm() + kink, "{g:?} vs {fd:?}");
    }

    #[test]
    fn gradient_is_lipschitz(p in planted_problem(), x in vector(DIM), y in vector(DIM)) {
        let l = p.a().operator_norm(1e-12, 100_000).unwrap();
        let lhs = grad_f(&p, &x).unwrap().distance(&grad_f(&p, &y).unwrap());
        prop_assert!(lhs <= (l * l + 1e-8) * x.distance(&y));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn run_monitors_hold(p in planted_problem(), start in vector(DIM), mode_ix in 0usize..3) {
        let mode = CompositionMode::ALL[mode_ix];
        let schedule = ParameterSchedule::paper_s4();
        let config = StepperConfig::algorithm1(mode).with_stopping(Stopping {
            max_iter: 150,
            ..Stopping::default()
        });
        let shifted = &start + &Vector::filled(DIM, 0.5);
        let h = run(&p, &schedule, &config, &shifted, &start).unwrap();
        prop_assert_eq!(h.records.len(), h.iterates.len() - 1);
        for r in &h.records {
            prop_assert!(r.inertial_size <= r.params.epsilon + 1e-15);
            prop_assert!(r.combination_gap.unwrap() <= 1e-12 * (1.0 + h.iterates[r.n].norm()));
            prop_assert!(r.psi >= -1e-12);
            if mode == CompositionMode::Proof && r.averaged_qne_ok == Some(true) {
                prop_assert!(r.fejer_y.unwrap() <= 1e-10);
                prop_assert!(r.fejer_v.unwrap() <= 1e-10);
            }
        }
        let again = run(&p, &schedule, &config, &shifted, &start).unwrap();
        prop_assert_eq!(h, again);
    }
}
