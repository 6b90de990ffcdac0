use proptest::prelude::*;
use saddlekit::kernels::{check_ellipticity, reduce_at, reduce_to_1d, Kernel1D, RadialKernel};
use saddlekit::layer1d::{solve_layer, Nonlinearity};
use saddlekit::operator::{LatticeOperator, LineOperator, OddGridFunction, TriangularGrid};
use saddlekit::parabolic::{evolve, line_system, EvolveOptions};
use saddlekit::radial_geometry::{AveragedKernelCache, QuadrantPoint};
use std::sync::{Arc, OnceLock};

fn point_in_o() -> impl Strategy<Value = QuadrantPoint> {
    (0.01f64..6.0, 0.0f64..1.0).prop_map(|(s, frac)| QuadrantPoint { s, t: s * frac * 0.999 })
}

fn lattice() -> &'static LatticeOperator {
    static OP: OnceLock<LatticeOperator> = OnceLock::new();
    OP.get_or_init(|| {
        let grid = Arc::new(TriangularGrid::new(1, 0.5, 5.0, 1.0).unwrap());
        LatticeOperator::new(grid, &RadialKernel::fractional(2, 0.5).unwrap()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reduction_is_linear(a in 0.1f64..3.0, b in 0.1f64..3.0, tau in 0.05f64..20.0) {
        let k1 = RadialKernel::fractional(2, 0.5).unwrap();
        let k2 = RadialKernel::modulated(2, 0.5, 1.0, 2.0, |r| 1.0 + (-r).exp(), "power-exp").unwrap();
        let sum = RadialKernel::combine(a, &k1, b, &k2).unwrap();
        let lhs = reduce_at(&sum, tau).unwrap();
        let rhs = a * reduce_at(&k1, tau).unwrap() + b * reduce_at(&k2, tau).unwrap();
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-7, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn kbar_is_symmetric(x in point_in_o(), y in point_in_o(), gamma in 0.1f64..0.9) {
        prop_assume!((x.s - y.s).abs() + (x.t - y.t).abs() > 1e-6);
        let cache = AveragedKernelCache::new(1, RadialKernel::fractional(2, gamma).unwrap()).unwrap();
        let (a, b) = (cache.kbar(x, y).unwrap(), cache.kbar(y, x).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn kernel_difference_is_positive_for_fractional_kernels(x in point_in_o(), y in point_in_o(), gamma in 0.05f64..0.95) {
        prop_assume!(y.s > y.t && (x.s - y.s).abs() + (x.t - y.t).abs() > 1e-6);
        prop_assume!(x.s > x.t);
        let cache = AveragedKernelCache::new(1, RadialKernel::fractional(2, gamma).unwrap()).unwrap();
        prop_assert!(cache.kernel_difference(x, y).unwrap() > 0.0);
    }

    #[test]
    fn kernel_difference_vanishes_on_the_cone(x in point_in_o(), rho in 0.1f64..5.0) {
        prop_assume!(x.s > x.t);
        let cache = AveragedKernelCache::new(1, RadialKernel::fractional(2, 0.5).unwrap()).unwrap();
        let c = rho * std::f64::consts::FRAC_1_SQRT_2;
        prop_assume!((x.s - c).abs() + (x.t - c).abs() > 0.05);
        let mut prev = f64::INFINITY;
        for d in [1e-2, 1e-4, 1e-6] {
            let y = QuadrantPoint { s: c + d, t: c - d };
            let v = cache.kernel_difference(x, y).unwrap().abs();
            prop_assert!(v < prev);
            prev = v;
        }
        let base = cache.kbar(x, QuadrantPoint { s: c, t: c }).unwrap();
        prop_assert!(prev <= 1e-3 * base, "{} vs K̄ = {}", prev, base);
    }

    #[test]
    fn lattice_operator_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let op = lattice();
        let grid = op.grid().clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut w1 = OddGridFunction::zeros(grid.clone());
        let mut w2 = OddGridFunction::zeros(grid.clone());
        for i in 0..grid.len() {
            w1.values[i] = rng.gen_range(-1.0..1.0);
            w2.values[i] = rng.gen_range(-1.0..1.0);
        }
        let mut comb = OddGridFunction::zeros(grid.clone());
        for i in 0..grid.len() {
            comb.values[i] = a * w1.values[i] + b * w2.values[i];
        }
        let (l1, l2, lc) = (op.apply(&w1), op.apply(&w2), op.apply(&comb));
        let scale = l1.iter().chain(&l2).fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..grid.solver_len() {
            prop_assert!((lc[i] - a * l1[i] - b * l2[i]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn lattice_operator_is_a_comparison_operator(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let op = lattice();
        let grid = op.grid().clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut lo = OddGridFunction::zeros(grid.clone());
        let mut hi = OddGridFunction::zeros(grid.clone());
        for i in 0..grid.len() {
            lo.values[i] = rng.gen_range(-1.0..1.0);
            hi.values[i] = lo.values[i] + rng.gen_range(0.0..1.0);
        }
        let x = rng.gen_range(0..grid.solver_len());
        hi.values[x] = lo.values[x];
        // touching from above at x: L lo(x) ≥ L hi(x)
        prop_assert!(op.apply_at(&lo, x) >= op.apply_at(&hi, x) - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn reduction_preserves_ellipticity(gamma in 0.2f64..0.8, amp in 0.0f64..1.0) {
        let k = RadialKernel::modulated(2, gamma, 1.0, 1.0 + amp, move |r| 1.0 + amp * (-r * r).exp(), "bump").unwrap();
        let k1 = reduce_to_1d(&k).unwrap();
        prop_assert_eq!(k1.eval(-0.7), k1.eval(0.7));
        let e = k1.check_ellipticity(101).unwrap();
        prop_assert!(e.holds, "{:?}", e);
        prop_assert!(check_ellipticity(&k, 101).unwrap().holds);
    }

    #[test]
    fn layer_is_pinned_monotone_and_bounded(gamma in 0.3f64..0.7, peierls in any::<bool>()) {
        let f = if peierls { Nonlinearity::peierls() } else { Nonlinearity::allen_cahn() };
        let p = solve_layer(&Kernel1D::fractional(gamma).unwrap(), &f, 20.0, 0.05).unwrap();
        prop_assert_eq!(p.u.values[p.u.center()], 0.0);
        prop_assert!(p.u.values.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(p.u.values.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn parabolic_flow_preserves_order(seed in any::<u64>(), gap in 0.01f64..0.5) {
        use rand::{Rng, SeedableRng};
        let k1 = Kernel1D::fractional(0.5).unwrap();
        let op = LineOperator::new(&k1, 5.0, 0.1).unwrap();
        let sys = line_system(&op, 0.2);
        let f = Nonlinearity::allen_cahn();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v0: Vec<f64> = (0..sys.len()).map(|_| rng.gen_range(-1.0..0.5)).collect();
        let w0: Vec<f64> = v0.iter().map(|v| v + rng.gen_range(0.0..gap)).collect();
        let mut opts = EvolveOptions::new(1.0, 0.05);
        opts.snapshot_every = 2;
        let a = evolve(&sys, &f, &v0, opts).unwrap();
        let b = evolve(&sys, &f, &w0, opts).unwrap();
        prop_assert_eq!(a.snapshots.len(), b.snapshots.len());
        for ((t, va), (_, vb)) in a.snapshots.iter().zip(&b.snapshots) {
            for (x, y) in va.iter().zip(vb) {
                prop_assert!(x <= &(y + 1e-12), "order lost at t = {}", t);
            }
        }
    }
}
