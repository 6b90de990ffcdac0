use saddlekit::cli::{build_operator, solve_saddle};
use saddlekit::config::RunConfig;
use saddlekit::layer1d::{LayerProfile, Nonlinearity};
use saddlekit::operator::{ExteriorRule, LatticeOperator, OddGridFunction};
use saddlekit::saddle::{
    build_subsolution, monotone_iteration, supersolution, uniqueness_probe, Direction, IterationOptions, SaddleSolution,
};
use saddlekit::Error;
use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;
use std::sync::OnceLock;

struct Small {
    cfg: RunConfig,
    op: LatticeOperator,
    f: Nonlinearity,
    sol: SaddleSolution,
    layer: LayerProfile,
}

/// A coarse version of the preset: h = 0.25 on B_10.
fn small() -> &'static Small {
    static S: OnceLock<Small> = OnceLock::new();
    S.get_or_init(|| {
        let text = "[grid]\nh = 0.25\ns_max = 10\n[saddle]\nradii = 5, 7.5, 10\ntable_radii = 2, 4, 6\n[eigen]\nradii = 1, 2, 4\n";
        let cfg = RunConfig::parse(text, Path::new(".")).unwrap();
        let f = cfg.nonlinearity.build().unwrap();
        let op = build_operator(&cfg, &cfg.build_kernel().unwrap()).unwrap();
        let (sol, layer) = solve_saddle(&cfg, &op, &f).unwrap();
        Small { cfg, op, f, sol, layer }
    })
}

fn opts(cfg: &RunConfig) -> IterationOptions {
    IterationOptions { tol: cfg.saddle.tol, max_iter: cfg.saddle.max_iter, ..Default::default() }
}

#[test]
fn eps_one_engages_the_shrink_loop() {
    let s = small();
    // φ is normalized to sup 1, so ε = 1 puts f(1) = 0 against λ₁ > 0 at the maximum
    let sub = build_subsolution(&s.op, &s.f, 2.0, 10.0, 1.0).unwrap();
    assert!(sub.shrink_steps >= 1, "{sub:?}");
    assert!(sub.eps <= 0.5);
    assert!(sub.lambda < 0.5 && sub.lambda > 0.3, "λ₁(R₀) should sit just below f'(0)/2: {}", sub.lambda);
    let grid = s.op.grid();
    let peak = sub.func.values.iter().cloned().fold(0.0, f64::max);
    assert!((peak - sub.eps).abs() < 1e-12);
    for (i, &v) in sub.func.values.iter().enumerate() {
        assert!(v >= 0.0);
        if grid.radius(i) > sub.r0 + 1e-12 {
            assert_eq!(v, 0.0);
        }
    }
    let lv = s.op.apply(&sub.func);
    for i in 0..grid.solver_len() {
        if sub.func.values[i] > 0.0 {
            assert!(lv[i] <= s.f.eval(sub.func.values[i]) + 1e-12 * sub.eps, "subsolution fails at node {i}");
        }
    }
}

#[test]
fn subsolution_needs_a_small_eigenvalue() {
    let s = small();
    let weak = Nonlinearity::polynomial(&[0.0, 0.01, 0.0, -0.01]).unwrap();
    let e = build_subsolution(&s.op, &weak, 1.0, 2.0, 0.5).unwrap_err();
    assert!(matches!(e, Error::Hypothesis(_)), "{e}");
}

#[test]
fn supersolution_is_a_supersolution() {
    let s = small();
    let grid = s.op.grid().clone();
    let sup = supersolution(&grid, 5.0, &OddGridFunction::zeros(grid.clone()));
    let lv = s.op.apply(&sup);
    for i in 0..grid.solver_len() {
        if sup.values[i] == 1.0 {
            assert!(lv[i] > 0.0, "L(super) = {} at node {i}", lv[i]);
        }
    }
}

#[test]
fn iteration_integrity() {
    let s = small();
    for l in &s.sol.log {
        assert!(l.max_violation <= 1e-10, "{l:?}");
        assert!(l.residual < 1e-6, "{l:?}");
    }
    let grid = s.op.grid();
    let n = grid.ball_len(s.sol.radius).min(grid.solver_len());
    for i in 0..n {
        let u = s.sol.u.values[i];
        assert!(u > 0.0 && u < 1.0, "u = {u} at node {i}");
    }
    let c: Vec<f64> = s.sol.log.iter().skip(1).map(|l| l.cauchy).collect();
    assert!(c.windows(2).all(|w| w[1] < w[0]), "Cauchy differences {c:?}");
}

#[test]
fn bounded_below_away_from_the_cone() {
    let s = small();
    let eps = 0.5;
    let delta = 0.5 * s.layer.eval(eps * FRAC_1_SQRT_2);
    let grid = s.op.grid();
    let n = grid.ball_len(s.sol.radius).min(grid.solver_len());
    let mut checked = 0;
    let mut inf = f64::INFINITY;
    for i in 0..n {
        let p = grid.point(i);
        if p.s > p.t + eps {
            let u = s.sol.u.values[i];
            inf = inf.min(u);
            // the saddle is flatter than the layer near the origin
            if p.norm() > 2.0 * eps {
                assert!(u >= delta, "u = {u} < δ = {delta} at ({}, {})", p.s, p.t);
                checked += 1;
            }
        }
    }
    assert!(checked > 100);
    assert!(inf >= 0.5 * delta, "inf u = {inf} on the retracted set");
}

#[test]
fn ascending_descending_and_mirror_agree() {
    let s = small();
    let u = uniqueness_probe(&s.op, &s.f, &s.sol, opts(&s.cfg)).unwrap();
    assert!(u.pass(), "{u:?}");
    assert!(u.mirror < 1e-10);
    // u_asc ≤ u_desc and u_desc ≤ u_asc up to the probe tolerance
    for (a, d) in u.ascending.values.iter().zip(&u.descending.values) {
        assert!(a - d <= 1e-5 && d - a <= 1e-5);
    }
}

#[test]
fn starting_above_the_sandwich_is_detected() {
    let s = small();
    let grid = s.op.grid().clone();
    let r = 5.0;
    let zero = OddGridFunction::zeros(grid.clone());
    let sup = supersolution(&grid, r, &zero);
    // an ascending run started at the supersolution must decrease and is rejected
    let e = monotone_iteration(&s.op, &s.f, r, &zero, &sup, None, Direction::Ascending, IterationOptions::default())
        .unwrap_err();
    assert!(matches!(e, Error::Monotonicity(_)), "{e}");
}

#[test]
fn zero_data_iteration_converges_to_a_positive_solution() {
    let s = small();
    let grid = s.op.grid().clone();
    let r = 6.0;
    let zero = OddGridFunction::zeros(grid.clone());
    let sub = build_subsolution(&s.op, &s.f, 2.0, r, 0.5).unwrap();
    let sup = supersolution(&grid, r, &zero);
    let out = monotone_iteration(&s.op, &s.f, r, &zero, &sub.func, Some((&sub.func, &sup)), Direction::Ascending, opts(&s.cfg))
        .unwrap();
    assert!(out.max_violation <= 1e-10);
    assert!(out.change_history.windows(2).skip(5).all(|w| w[1] <= w[0] * 1.0001 + 1e-14));
    let n = grid.ball_len(r).min(grid.solver_len());
    assert!(out.u.values[..n].iter().all(|v| (0.0..1.0).contains(v)));
    assert!(matches!(out.u.exterior, ExteriorRule::Zero));
}
