use proptest::prelude::*;
use sharpineq::functionals::{
    normalize, power_functional, power_functional_grid, FreeParam, NormalizationProblem, Pipeline, Region, Target,
};
use sharpineq::grid::{gradient_fd, integrate, make_grid, sample, Domain, DomainKind, Grid, GridFunction};
use sharpineq::hopf_lax::{
    inf_convolution, inf_convolution_kernel, inf_convolution_separable_brute, q_pointwise, Datum,
};
use sharpineq::inequalities::{theta_residual, theta_solve, ThetaKind};
use sharpineq::norms::{
    conjugate_analytic, conjugate_brute_force, conjugate_discrete, conjugate_halfspace, Field, NormSpec,
    PotentialSpec,
};
use sharpineq::transport::{displacement_interpolation, monotone_map, Density1D};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() }
}

fn line(r: f64, nodes: usize) -> Grid {
    make_grid(Domain::cube(1, r), &[nodes]).unwrap()
}

fn boxed(center: [f64; 2], radius: [f64; 2], nodes: [usize; 2]) -> Grid {
    make_grid(Domain::full(center.to_vec(), radius.to_vec()), &nodes).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn trapezoid_exact_on_multi_affine(
        c in -3.0..3.0f64, a0 in -3.0..3.0f64, a1 in -3.0..3.0f64, b in -3.0..3.0f64,
        c0 in -2.0..2.0f64, c1 in -2.0..2.0f64, r0 in 0.2..3.0f64, r1 in 0.2..3.0f64,
        n0 in 2usize..40, n1 in 2usize..40,
    ) {
        let g = boxed([c0, c1], [r0, r1], [n0, n1]);
        let u = sample(|x| c + a0 * x[0] + a1 * x[1] + b * x[0] * x[1], &g).unwrap();
        let vol = 4.0 * r0 * r1;
        let exact = vol * (c + a0 * c0 + a1 * c1 + b * c0 * c1);
        let scale = vol * (c.abs() + (a0 * c0).abs() + (a1 * c1).abs() + (b * c0 * c1).abs() + 1.0);
        prop_assert!((integrate(&u).unwrap() - exact).abs() <= 1e-14 * scale);
    }

    #[test]
    fn gradient_exact_on_affine(
        c in -3.0..3.0f64, a0 in -3.0..3.0f64, a1 in -3.0..3.0f64,
        r0 in 0.5..3.0f64, r1 in 0.5..3.0f64, n0 in 3usize..30, n1 in 3usize..30,
    ) {
        let g = boxed([0.0, 0.0], [r0, r1], [n0, n1]);
        let u = sample(|x| c + a0 * x[0] + a1 * x[1], &g).unwrap();
        let d = gradient_fd(&u);
        for (axis, slope) in [a0, a1].into_iter().enumerate() {
            for v in &d[axis].values {
                prop_assert!((v - slope).abs() <= 1e-13 * (1.0 + c.abs() + a0.abs() + a1.abs()) * (r0 + r1).max(1.0));
            }
        }
    }

    #[test]
    fn integrate_is_linear(
        alpha in -5.0..5.0f64, beta in -5.0..5.0f64, k in 0.1..3.0f64, n0 in 3usize..40, n1 in 3usize..40,
    ) {
        let g = boxed([0.3, -0.2], [1.5, 2.0], [n0, n1]);
        let u = sample(|x| (k * x[0]).sin() + x[1] * x[1], &g).unwrap();
        let v = sample(|x| (-x[0] * x[0] - x[1]).exp(), &g).unwrap();
        let w = GridFunction::new(
            g.clone(),
            u.values.iter().zip(&v.values).map(|(a, b)| alpha * a + beta * b).collect(),
        ).unwrap();
        let lhs = integrate(&w).unwrap();
        let (iu, iv) = (integrate(&u).unwrap(), integrate(&v).unwrap());
        let rhs = alpha * iu + beta * iv;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (alpha.abs() * iu.abs() + beta.abs() * iv.abs()).max(1e-300));
    }

    #[test]
    fn trapezoid_refines_at_second_order(k0 in -1.5..1.5f64, k1 in -1.5..1.5f64, r in 0.5..1.5f64) {
        prop_assume!(k0.abs() > 0.3 && k1.abs() > 0.3);
        // Same-sign curvature on both axes keeps the leading error term away from zero.
        let exact = (2.0 * (k0 * r).sinh() / k0) * (2.0 * (k1 * r).sinh() / k1);
        let err = |n: usize| {
            let g = boxed([0.0, 0.0], [r, r], [n, n]);
            let u = sample(|x| (k0 * x[0] + k1 * x[1]).exp(), &g).unwrap();
            (integrate(&u).unwrap() - exact).abs()
        };
        let order = (err(33) / err(65)).log2();
        prop_assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn biconjugate_is_identity_on_convex_samples(
        al in 0.5..2.0f64, be in 0.0..1.0f64, c in -1.0..1.0f64, nodes in 65usize..200,
    ) {
        let u = move |x: f64| 0.5 * al * x * x + be * x.cosh().ln() + c * x;
        let src = line(4.0, nodes);
        let us = sample(|x| u(x[0]), &src).unwrap();
        let slope = 4.0 * al + be + c.abs() + 1.0;
        let dual_nodes = (2.0 * slope / (0.5 * al * src.spacing[0])).ceil() as usize + 1;
        let dual = line(slope, dual_nodes);
        let star = conjugate_discrete(&us, &dual).unwrap();
        let back = conjugate_discrete(&star, &src).unwrap();
        for (a, b) in us.values.iter().zip(&back.values) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        // Fenchel–Young on every sampled pair.
        for (i, x) in src.axis_nodes(0).iter().enumerate() {
            for (j, y) in dual.axis_nodes(0).iter().enumerate().step_by(7) {
                prop_assert!(x * y <= us.values[i] + star.values[j] + 1e-12);
            }
        }
    }

    #[test]
    fn fenchel_young_for_power_family(
        q in 1.2..5.0f64, r in 1.1..6.0f64, s in 0.2..3.0f64, off in -1.0..1.0f64,
        x0 in -3.0..3.0f64, x1 in -3.0..3.0f64, y0 in -3.0..3.0f64, y1 in -3.0..3.0f64,
    ) {
        let w = PotentialSpec::convex(NormSpec::lp(r), q, s, off);
        let star = conjugate_analytic(&w).unwrap();
        let f = star.formula().unwrap();
        let (x, y) = ([x0, x1], [y0, y1]);
        let slack = w.value(&x) + f.eval(&y) - (x0 * y0 + x1 * y1);
        prop_assert!(slack >= -1e-12 * (1.0 + w.value(&x).abs() + f.eval(&y).abs()));
        let mut grad = [0.0; 2];
        w.gradient(&x, &mut grad);
        let eq = w.value(&x) + f.eval(&grad) - (x0 * grad[0] + x1 * grad[1]);
        prop_assert!(eq.abs() <= 1e-10 * (1.0 + w.value(&x).abs() + f.eval(&grad).abs()));
    }

    #[test]
    fn fast_conjugate_matches_brute_force_bitwise(
        vals in proptest::collection::vec(-2.0..2.0f64, 40..200), r in 0.5..4.0f64, dual_r in 0.5..6.0f64,
    ) {
        let src = line(r, vals.len());
        let u = GridFunction::new(src, vals.clone()).unwrap();
        let dual = line(dual_r, vals.len() + 7);
        let fast = conjugate_discrete(&u, &dual).unwrap();
        let slow = conjugate_brute_force(&u, &dual).unwrap();
        prop_assert!(fast.values.iter().zip(&slow.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn restricted_conjugate_is_dominated(
        q in 1.2..5.0f64, s in 0.2..3.0f64, off in -1.0..1.0f64, y0 in -3.0..3.0f64, y1 in -3.0..3.0f64,
        from in -1.0..1.0f64, separable in any::<bool>(),
    ) {
        let norm = if separable { NormSpec::lp(q) } else { NormSpec::euclidean() };
        let w = PotentialSpec::convex(norm, q, s, off);
        let full = conjugate_analytic(&w).unwrap().formula().unwrap().eval(&[y0, y1]);
        let half = conjugate_halfspace(&w.on_half_space(from), &[y0, y1]).unwrap();
        prop_assert!(half <= full + 1e-12 * (1.0 + full.abs()));
    }

    #[test]
    fn hopf_lax_is_monotone(
        g1 in proptest::collection::vec(-2.0..2.0f64, 41), bump in proptest::collection::vec(0.0..1.0f64, 41),
        h in 0.05..3.0f64, q in 1.3..4.0f64,
    ) {
        let grid = line(2.0, 41);
        let w = PotentialSpec::convex(NormSpec::euclidean(), q, 1.0, 0.0);
        let u1 = GridFunction::new(grid.clone(), g1.clone()).unwrap();
        let u2 = GridFunction::new(grid.clone(), g1.iter().zip(&bump).map(|(a, b)| a + b).collect()).unwrap();
        let q1 = inf_convolution(&u1, &w, h, &grid).unwrap();
        let q2 = inf_convolution(&u2, &w, h, &grid).unwrap();
        prop_assert!(q1.values.iter().zip(&q2.values).all(|(a, b)| a <= b));
    }

    #[test]
    fn hopf_lax_below_every_competitor(
        h in 0.05..5.0f64, qg in 1.3..4.0f64, qw in 1.3..4.0f64, sg in 0.3..3.0f64, cg in 0.1..2.0f64,
        x0 in -4.0..4.0f64, x1 in -4.0..4.0f64, y0 in -4.0..4.0f64, y1 in -4.0..4.0f64,
    ) {
        let g = PotentialSpec::convex(NormSpec::euclidean(), qg, sg, cg);
        let w = PotentialSpec::convex(NormSpec::lp(qw), qw, 1.0, 0.2);
        let (x, y) = ([x0, x1], [y0, y1]);
        let qx = q_pointwise(Datum::Potential(&g), &w, h, &x, DomainKind::Full).unwrap();
        let z = [(x0 - y0) / h, (x1 - y1) / h];
        let bound = g.value(&y) + h * w.value(&z);
        prop_assert!(qx <= bound + 1e-9 * (1.0 + bound.abs()), "{qx} > {bound}");
    }

    #[test]
    fn rescaling_identity_on_nodes(h in 0.25..4.0f64, qg in 1.5..4.0f64, sg in 0.3..2.0f64, cw in 0.0..1.0f64) {
        let w = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.0, cw);
        let gf = PotentialSpec::convex(NormSpec::euclidean(), qg, sg, 0.5);
        let src = line(4.0, 161);
        let u = sample(|x| gf.value(x), &src).unwrap();
        let lhs = inf_convolution(&u, &w, h, &src).unwrap();
        let scaled = line(4.0 / h, 161);
        let wu = sample(|x| w.value(x), &scaled).unwrap();
        let rhs = inf_convolution_kernel(&wu, &gf, 1.0 / h, &scaled).unwrap();
        for i in 40..121 {
            prop_assert!((lhs.values[i] - h * rhs.values[i]).abs() <= 1e-9 * (1.0 + lhs.values[i].abs()));
        }
    }

    #[test]
    fn separable_hopf_lax_matches_brute_force_bitwise(
        vals in proptest::collection::vec(-2.0..2.0f64, 21 * 17), h in 0.1..3.0f64, q in 1.3..4.0f64,
    ) {
        let grid = boxed([0.0, 0.0], [2.0, 1.5], [21, 17]);
        let u = GridFunction::new(grid.clone(), vals).unwrap();
        let w = PotentialSpec::convex(NormSpec::lp(q), q, 1.0, 0.1);
        let fast = inf_convolution(&u, &w, h, &grid).unwrap();
        let slow = inf_convolution_separable_brute(&u, &w, h, &grid).unwrap();
        prop_assert!(fast.values.iter().zip(&slow.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn transport_map_is_nondecreasing(
        m0 in -1.5..1.5f64, s0 in 0.4..1.5f64, m1 in -1.5..1.5f64, s1 in 0.4..1.5f64, wmix in 0.0..1.0f64,
        t in 0.0..1.0f64,
    ) {
        let gauss = |m: f64, s: f64| move |x: f64| (-(x - m) * (x - m) / (2.0 * s * s)).exp();
        let (ga, gb) = (gauss(m0, s0), gauss(m1, s1));
        let mu = Density1D::from_fn_normalized(move |x| wmix * ga(x) + (1.0 - wmix) * gb(x) + 1e-3 * gb(-x), line(8.0, 513)).unwrap();
        let nu = Density1D::from_fn_normalized(gauss(m1 - m0, s1 * 0.7 + 0.3), line(10.0, 513)).unwrap();
        let map = monotone_map(&mu, &nu).unwrap();
        prop_assert!(map.monotone);
        prop_assert!(map.values.windows(2).all(|w| w[1] >= w[0]));
        let mid = displacement_interpolation(&mu, &nu, t).unwrap();
        prop_assert!((mid.cell_mass() - 1.0).abs() <= 1e-10, "mass {}", mid.cell_mass());
    }

    #[test]
    fn normalize_round_trips(q in 1.5..4.0f64, s in 0.3..3.0f64, n in 1usize..4, extra in 0.5..3.0f64) {
        let nf = n as f64;
        let a = nf / q + extra;
        let problem = NormalizationProblem::new(
            PotentialSpec::convex(NormSpec::euclidean(), q, s, 1.0),
            FreeParam::Offset,
            Target::InvPower(a),
            n,
        );
        let c = normalize(&problem).unwrap();
        prop_assert!((problem.integral(c).unwrap().value - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn power_functional_is_homogeneous(
        q in 1.5..4.0f64, s in 0.3..3.0f64, c in 0.2..2.0f64, lambda in 0.1..10.0f64, n in 1usize..4,
    ) {
        let nf = n as f64;
        let r = -(nf / q + 1.0);
        let g = PotentialSpec::convex(NormSpec::euclidean(), q, s, c);
        let lg = PotentialSpec::convex(NormSpec::euclidean(), q, lambda * s, lambda * c);
        let region = Region::radial(n, NormSpec::euclidean());
        let pipe = Pipeline::Adaptive { tol: 1e-12 };
        let base = power_functional(&g, r, &region, &pipe).unwrap().value;
        let scaled = power_functional(&lg, r, &region, &pipe).unwrap().value;
        prop_assert!((scaled - lambda.powf(r) * base).abs() <= 1e-9 * scaled.abs());
    }

    #[test]
    fn grid_functional_refines_at_second_order(
        mag in 0.3..2.5f64, negative in any::<bool>(), k0 in 0.3..1.5f64, k1 in 0.3..1.5f64,
    ) {
        let r = if negative { -mag } else { mag };
        let (c, h) = ([0.2, 0.0], [0.8, 1.0]);
        let exact: f64 = (0..2)
            .map(|i| [k0, k1][i])
            .zip(c.iter().zip(&h))
            .map(|(k, (c, h))| ((k * (c + h)).exp() - (k * (c - h)).exp()) / k)
            .product();
        let err = |n: usize| {
            let g = boxed(c, h, [n, n]);
            let u = sample(|x| ((k0 * x[0] + k1 * x[1]) / r).exp(), &g).unwrap();
            (power_functional_grid(&u, r).unwrap() - exact).abs()
        };
        let order = (err(33) / err(65)).log2();
        prop_assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn theta_solutions_have_tiny_residuals(n in 1usize..7, pick in 0usize..4, u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let nf = n as f64;
        let (kind, p, a) = match pick {
            0 | 3 => {
                let p = 1.1 + u * nf.max(1.2);
                (if pick == 0 { ThetaKind::GnPlus } else { ThetaKind::GnTrace }, p, nf.max(p) + 0.05 + 3.9 * v)
            }
            1 => {
                let a = 1.2 + u * (nf + 1.8);
                (ThetaKind::GnMinus, a + 0.05 + 3.9 * v, a)
            }
            _ => (ThetaKind::GnConcave, 1.1 + u * (nf + 0.9), 0.2 + v * (nf + 2.8)),
        };
        if let Ok(t) = theta_solve(kind, n, p, a) {
            prop_assert!(theta_residual(kind, n, p, a, t) <= 1e-14);
        }
    }
}

#[test]
fn semigroup_equality_error_shrinks_under_refinement() {
    for (q, h) in [(2.0, 0.5), (3.0, 1.3), (1.5, 2.0)] {
        let w = PotentialSpec::convex(NormSpec::euclidean(), q, 1.0, 0.4);
        let errs: Vec<f64> = [65usize, 129, 257]
            .iter()
            .map(|&nodes| {
                let grid = line(4.0, nodes);
                let u = sample(|x| w.value(x), &grid).unwrap();
                let qh = inf_convolution(&u, &w, h, &grid).unwrap();
                let exact = sample(|x| (1.0 + h) * w.value(&[x[0] / (1.0 + h)]), &grid).unwrap();
                let inner: Vec<usize> = (0..grid.len()).filter(|&i| grid.node(i)[0].abs() <= 2.0).collect();
                inner.iter().map(|&i| (qh.values[i] - exact.values[i]).abs()).fold(0.0, f64::max)
            })
            .collect();
        for pair in errs.windows(2) {
            assert!(pair[1] <= pair[0], "q={q} h={h}: {errs:?}");
            assert!(pair[1] == 0.0 || (pair[0] / pair[1]).log2() >= 1.0, "q={q} h={h}: {errs:?}");
        }
    }
}
