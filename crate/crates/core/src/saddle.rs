//! Saddle-shaped solutions by monotone iteration in balls B_R ∩ O (m = 1 lattice).

use crate::eigen::{first_odd_eigenpair, EigenOptions};
use crate::error::{Error, Result};
use crate::layer1d::Nonlinearity;
use crate::operator::system::sup_norm;
use crate::operator::{ExteriorRule, LatticeOperator, OddGridFunction, TriangularGrid};
use std::sync::Arc;

#[derive(Debug, Clone, Copy)]
pub struct IterationOptions {
    /// Stop when ‖v_k - v_{k-1}‖_∞ falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Allowed violation of the monotone sandwich.
    pub sandwich_tol: f64,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions { tol: 1e-8, max_iter: 10_000, sandwich_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct Subsolution {
    /// ε φ₁ on B_{R₀} ∩ O, zero elsewhere (zero exterior).
    pub func: OddGridFunction,
    pub eps: f64,
    pub r0: f64,
    pub lambda: f64,
    /// Number of times ε was halved.
    pub shrink_steps: usize,
}

/// ε φ₁^{R₀} with R₀ grown (by factors of 1.5 from `r0_start`, at most `r0_max`) until
/// λ₁(R₀) < f′(0)/2 (or λ₁ < f′(0) at `r0_max`) and ε halved from `eps0` until L(εφ₁) ≤ f(εφ₁) on B_{R₀} ∩ O.
pub fn build_subsolution(op: &LatticeOperator, f: &Nonlinearity, r0_start: f64, r0_max: f64, eps0: f64) -> Result<Subsolution> {
    let target = 0.5 * f.deriv(0.0);
    let mut r0 = r0_start;
    let eig = loop {
        let e = first_odd_eigenpair(op, r0, EigenOptions::default())?;
        if e.lambda < target {
            break e;
        }
        if r0 >= r0_max {
            // λ₁ < f′(0) still admits a small ε
            if e.lambda < f.deriv(0.0) {
                break e;
            }
            return Err(Error::Hypothesis(format!(
                "λ₁(B_R) = {:.4} ≥ f′(0) up to R = {r0}; enlarge the schedule",
                e.lambda
            )));
        }
        r0 = (1.5 * r0).min(r0_max);
    };
    let vmax = eig.nodes.iter().map(|&i| eig.phi.values[i]).fold(0.0, f64::max);
    let mut eps = eps0;
    let mut shrink = 0;
    loop {
        let mut sub = OddGridFunction::zeros(op.grid().clone());
        for &i in &eig.nodes {
            sub.values[i] = eps * eig.phi.values[i] / vmax;
        }
        let lv = op.apply(&sub);
        let ok = eig.nodes.iter().all(|&i| lv[i] - f.eval(sub.values[i]) <= 1e-12 * eps);
        if ok {
            return Ok(Subsolution { func: sub, eps, r0, lambda: eig.lambda, shrink_steps: shrink });
        }
        eps *= 0.5;
        shrink += 1;
        if eps < 1e-8 {
            return Err(Error::Hypothesis("subsolution ε underflow: eigen data and discretization disagree".into()));
        }
    }
}

/// 1 on the unknowns of B_R ∩ O, the data elsewhere. With zero data this is
/// χ_{O∩B_R} - χ_{I∩B_R}; L of it is ≥ 0 = f(1) wherever it equals 1.
pub fn supersolution(grid: &Arc<TriangularGrid>, radius: f64, data: &OddGridFunction) -> OddGridFunction {
    let mut s = data.clone();
    for i in 0..grid.ball_len(radius).min(grid.solver_len()) {
        s.values[i] = 1.0;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Iterates must increase.
    Ascending,
    /// Iterates must decrease.
    Descending,
    /// No monotonicity is asserted (e.g. perturbed starts).
    Free,
}

#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub u: OddGridFunction,
    pub iterations: usize,
    pub last_change: f64,
    /// sup |L u - f(u)| over unknowns at distance ≥ h from the cone.
    pub residual: f64,
    /// Largest violation of the sandwich observed along the way.
    pub max_violation: f64,
    pub change_history: Vec<f64>,
}

/// (L_K + b) v_k = f(v_{k-1}) + b v_{k-1} in B_R ∩ O with `data` outside.
/// `bounds` (sub, super) are checked at every step.
pub fn monotone_iteration(
    op: &LatticeOperator,
    f: &Nonlinearity,
    radius: f64,
    data: &OddGridFunction,
    start: &OddGridFunction,
    bounds: Option<(&OddGridFunction, &OddGridFunction)>,
    dir: Direction,
    opts: IterationOptions,
) -> Result<IterationOutcome> {
    let grid = op.grid();
    let n = grid.ball_len(radius).min(grid.solver_len());
    if n == 0 {
        return Err(Error::Domain(format!("no unknowns in B_{radius}")));
    }
    let region: Vec<usize> = (0..n).collect();
    let sys = op.assemble(&region, data)?;
    let b = f.monotone_shift();
    let fac = sys.factor(b)?;
    let mut v: Vec<f64> = start.values[..n].to_vec();
    let mut worst = 0.0f64;
    let mut history = Vec::new();
    let mut it = 0;
    let mut change;
    loop {
        let rhs: Vec<f64> = (0..n).map(|i| f.eval(v[i]) + b * v[i] + sys.forcing[i]).collect();
        let next = fac.solve(&rhs);
        change = 0.0f64;
        for i in 0..n {
            let d = next[i] - v[i];
            change = change.max(d.abs());
            let step_violation = match dir {
                Direction::Ascending => -d,
                Direction::Descending => d,
                Direction::Free => 0.0,
            };
            worst = worst.max(step_violation);
            if let Some((lo, hi)) = bounds {
                worst = worst.max(lo.values[i] - next[i]).max(next[i] - hi.values[i]);
            }
        }
        v = next;
        it += 1;
        history.push(change);
        if !change.is_finite() {
            return Err(Error::Divergence("monotone iteration produced non-finite values".into()));
        }
        if dir != Direction::Free && worst > opts.sandwich_tol {
            return Err(Error::Monotonicity(format!(
                "monotone sandwich violated by {worst:.3e} at iteration {it}; the discrete maximum principle fails"
            )));
        }
        if change < opts.tol {
            break;
        }
        if it >= opts.max_iter {
            let k = history.len();
            let rate = (history[k - 1] / history[k - 11]).powf(0.1);
            return Err(Error::NoConvergence(format!(
                "monotone iteration: change {change:.3e} after {it} iterations (rate {rate:.4})"
            )));
        }
    }
    let mut u = data.clone();
    u.values[..n].copy_from_slice(&v);
    let residual = interior_residual(op, f, &u, radius);
    Ok(IterationOutcome { u, iterations: it, last_change: change, residual, max_violation: worst, change_history: history })
}

/// sup |L u - f(u)| over unknowns of B_R ∩ O at distance ≥ h from the cone.
pub fn interior_residual(op: &LatticeOperator, f: &Nonlinearity, u: &OddGridFunction, radius: f64) -> f64 {
    let grid = op.grid();
    let n = grid.ball_len(radius).min(grid.solver_len());
    let lu = op.apply(u);
    (0..n)
        .filter(|&i| !grid.is_boundary_layer(i))
        .map(|i| (lu[i] - f.eval(u.values[i])).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub radius: f64,
    pub iterations: usize,
    pub residual: f64,
    pub last_change: f64,
    /// sup |u_R - u_{R_prev}| on B_{R/2} (NaN for the first radius).
    pub cauchy: f64,
    /// Largest violation of the sub/super sandwich over all iterates.
    pub max_violation: f64,
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub u: OddGridFunction,
    pub radius: f64,
    pub subsolution: Subsolution,
    pub log: Vec<RunLog>,
    /// Solution at every radius of the schedule.
    pub runs: Vec<OddGridFunction>,
    /// Exterior data used at every radius.
    pub data: ExteriorRule,
}

/// Monotone iteration at each radius of an increasing schedule, with `data`
/// prescribed outside B_R. Each run ascends from the eigen subsolution, which
/// is admissible for every R ≥ R₀ since it vanishes outside B_{R₀}; radii
/// below R₀ ascend from 0, admissible because the data are ≥ 0 in O.
pub fn saddle_solve(
    op: &LatticeOperator,
    f: &Nonlinearity,
    data: ExteriorRule,
    schedule: &[f64],
    opts: IterationOptions,
) -> Result<SaddleSolution> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("radii schedule must be increasing".into()));
    }
    let grid = op.grid().clone();
    let last = *schedule.last().unwrap();
    if last > grid.s_max() + 1e-12 {
        return Err(Error::Config(format!("final radius {last} exceeds S_max = {}", grid.s_max())));
    }
    let sub = build_subsolution(op, f, 2.0, last, 0.5)?;
    let mut runs: Vec<OddGridFunction> = Vec::new();
    let mut log = Vec::new();
    for &r in schedule {
        let d = OddGridFunction::from_rule(grid.clone(), data.clone());
        let sup = supersolution(&grid, r, &d);
        let mut start = d.clone();
        let n = grid.ball_len(r).min(grid.solver_len());
        if sub.r0 <= r {
            start.values[..n].copy_from_slice(&sub.func.values[..n]);
        } else {
            start.values[..n].iter_mut().for_each(|v| *v = 0.0);
        }
        let out = monotone_iteration(op, f, r, &d, &start, Some((&start, &sup)), Direction::Ascending, opts)?;
        let cauchy = match runs.last() {
            Some(prev) => {
                let k = grid.ball_len(0.5 * r);
                (0..k).map(|i| (out.u.values[i] - prev.values[i]).abs()).fold(0.0, f64::max)
            }
            None => f64::NAN,
        };
        log.push(RunLog {
            radius: r,
            iterations: out.iterations,
            residual: out.residual,
            last_change: out.last_change,
            cauchy,
            max_violation: out.max_violation,
        });
        runs.push(out.u);
    }
    Ok(SaddleSolution { u: runs.last().unwrap().clone(), radius: last, subsolution: sub, log, runs, data })
}

/// Discrete first and second derivatives at lattice point (a, b) by centered
/// differences: ([∂s, ∂t], [∂ss, ∂tt, ∂st]).
fn lattice_derivatives<G: Fn(i32, i32) -> f64>(g: &G, a: i32, b: i32, h: f64) -> ([f64; 2], [f64; 3]) {
    let c = g(a, b);
    let (e, w, n, s) = (g(a + 1, b), g(a - 1, b), g(a, b + 1), g(a, b - 1));
    let ds = (e - w) / (2.0 * h);
    let dt = (n - s) / (2.0 * h);
    let dss = (e - 2.0 * c + w) / (h * h);
    let dtt = (n - 2.0 * c + s) / (h * h);
    let dst = (g(a + 1, b + 1) - g(a + 1, b - 1) - g(a - 1, b + 1) + g(a - 1, b - 1)) / (4.0 * h * h);
    ([ds, dt], [dss, dtt, dst])
}

#[derive(Debug, Clone)]
pub struct AsymptoticRow {
    pub radius: f64,
    pub value: f64,
    pub gradient: f64,
    pub hessian: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct AsymptoticTable {
    pub rows: Vec<AsymptoticRow>,
    /// Strict decrease of each column across the radii.
    pub decreasing: [bool; 3],
}

impl AsymptoticTable {
    pub fn pass(&self) -> bool {
        self.decreasing.iter().all(|d| *d)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "R,sup_u_minus_U,sup_grad,sup_hess,nodes")?;
        for r in &self.rows {
            writeln!(out, "{},{:.6e},{:.6e},{:.6e},{}", r.radius, r.value, r.gradient, r.hessian, r.nodes)?;
        }
        Ok(())
    }
}

/// Width of the collar next to the truncation sphere left out of the
/// asymptotic comparison. Dirichlet solutions of order-2γ problems behave like
/// dist^γ at the sphere, so derivatives there reflect the truncation only.
pub fn default_collar(radius: f64, h: f64) -> f64 {
    (2.0 * h).max(0.125 * radius)
}

/// sup over nodes of O ∖ B_R (inside the solved ball minus `collar`) of
/// |u - U|, |∇u - ∇U| and |D²u - D²U|.
pub fn asymptotic_error(sol: &SaddleSolution, big_u: &ExteriorRule, radii: &[f64], collar: f64) -> Result<AsymptoticTable> {
    let u = &sol.u;
    let grid = &u.grid;
    let h = grid.h();
    let outer = sol.radius - collar;
    let gu = |a: i32, b: i32| u.at_lattice(a, b);
    let gv = |a: i32, b: i32| big_u.value(a as f64 * h, b as f64 * h);
    let mut rows = Vec::new();
    for &r in radii {
        let (mut e0, mut e1, mut e2, mut count) = (0.0f64, 0.0f64, 0.0f64, 0);
        for i in 0..grid.solver_len() {
            let rad = grid.radius(i);
            if rad < r || rad > outer {
                continue;
            }
            let [a, b] = grid.lattice_index(i);
            let (du, ddu) = lattice_derivatives(&gu, a, b, h);
            let (dv, ddv) = lattice_derivatives(&gv, a, b, h);
            e0 = e0.max((u.values[i] - gv(a, b)).abs());
            e1 = e1.max((du[0] - dv[0]).abs().max((du[1] - dv[1]).abs()));
            e2 = e2.max((0..3).map(|k| (ddu[k] - ddv[k]).abs()).fold(0.0, f64::max));
            count += 1;
        }
        if count == 0 {
            return Err(Error::Domain(format!("empty annulus for R = {r}")));
        }
        rows.push(AsymptoticRow { radius: r, value: e0, gradient: e1, hessian: e2, nodes: count });
    }
    let dec = |k: usize| {
        rows.windows(2).all(|w| {
            let v = |r: &AsymptoticRow| [r.value, r.gradient, r.hessian][k];
            v(&w[1]) < v(&w[0])
        })
    };
    Ok(AsymptoticTable { decreasing: [dec(0), dec(1), dec(2)], rows })
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    /// sup |u_asc - u_desc|.
    pub ascending_vs_descending: f64,
    /// sup |u_perturbed - u_asc|.
    pub perturbed: f64,
    /// sup |u_mirror + u_asc| for the sign-flipped problem.
    pub mirror: f64,
    pub iterations: [usize; 4],
    pub ascending: OddGridFunction,
    pub descending: OddGridFunction,
}

impl UniquenessReport {
    pub fn max_difference(&self) -> f64 {
        self.ascending_vs_descending.max(self.perturbed).max(self.mirror)
    }

    pub fn pass(&self) -> bool {
        self.max_difference() < 1e-5
    }
}

/// Ascending, descending, perturbed and sign-flipped constructions at the
/// final radius of `sol`.
pub fn uniqueness_probe(op: &LatticeOperator, f: &Nonlinearity, sol: &SaddleSolution, opts: IterationOptions) -> Result<UniquenessReport> {
    let grid = op.grid().clone();
    let r = sol.radius;
    let n = grid.ball_len(r).min(grid.solver_len());
    let data = OddGridFunction::from_rule(grid.clone(), sol.data.clone());
    let sup = supersolution(&grid, r, &data);
    let mut sub = data.clone();
    sub.values[..n].copy_from_slice(&sol.subsolution.func.values[..n]);

    let asc = monotone_iteration(op, f, r, &data, &sub, Some((&sub, &sup)), Direction::Ascending, opts)?;
    let desc = monotone_iteration(op, f, r, &data, &sup, Some((&sub, &sup)), Direction::Descending, opts)?;

    // u + 0.1 bump, clipped to (0, 1)
    let mut pert = asc.u.clone();
    let c = (0.35 * r, 0.1 * r);
    for i in 0..n {
        let p = grid.point(i);
        let d2 = (p.s - c.0).powi(2) + (p.t - c.1).powi(2);
        let bump = (-(d2) / (0.05 * r * r)).exp() * (p.s - p.t).min(1.0);
        pert.values[i] = (pert.values[i] + 0.1 * bump).clamp(1e-12, 1.0 - 1e-12);
    }
    let per = monotone_iteration(op, f, r, &data, &pert, None, Direction::Free, opts)?;

    // the problem with data -U started from -sub
    let mut neg_data = data.clone();
    neg_data.values.iter_mut().for_each(|v| *v = -*v);
    neg_data.exterior = negate_rule(&sol.data);
    let mut neg_sub = neg_data.clone();
    for i in 0..n {
        neg_sub.values[i] = -sub.values[i];
    }
    let mir = monotone_iteration(op, f, r, &neg_data, &neg_sub, None, Direction::Descending, opts)?;

    let diff = |a: &OddGridFunction, b: &OddGridFunction, sign: f64| {
        (0..n).map(|i| (a.values[i] - sign * b.values[i]).abs()).fold(0.0, f64::max)
    };
    Ok(UniquenessReport {
        ascending_vs_descending: diff(&asc.u, &desc.u, 1.0),
        perturbed: diff(&per.u, &asc.u, 1.0),
        mirror: diff(&mir.u, &asc.u, -1.0),
        iterations: [asc.iterations, desc.iterations, per.iterations, mir.iterations],
        ascending: asc.u,
        descending: desc.u,
    })
}

fn negate_rule(rule: &ExteriorRule) -> ExteriorRule {
    match rule {
        ExteriorRule::Zero => ExteriorRule::Zero,
        other => {
            let r = other.clone();
            ExteriorRule::Custom { name: format!("neg:{}", other.key()), f: Arc::new(move |s, t| -r.value_o(s, t)) }
        }
    }
}

/// sup-norm of the difference of two grid functions over the first `n` nodes.
pub fn sup_difference(a: &OddGridFunction, b: &OddGridFunction, n: usize) -> f64 {
    let d: Vec<f64> = (0..n).map(|i| a.values[i] - b.values[i]).collect();
    sup_norm(&d)
}

/// Layer solution of the 1-D operator induced by the lattice on functions of
/// (s - t)/√2, on [-L, L] with spacing h/√2. This is the discrete counterpart
/// of U that the lattice saddle solution approaches away from the cone.
pub fn lattice_layer(op: &LatticeOperator, f: &Nonlinearity, half_length: f64) -> Result<crate::layer1d::LayerProfile> {
    use crate::operator::LineOperator;
    let k1 = crate::kernels::reduce_to_1d(op.kernel())?;
    let hd = op.grid().h() * std::f64::consts::FRAC_1_SQRT_2;
    let (_, n) = crate::operator::Profile1D::grid(half_length, hd)?;
    let w = op.weights().diagonal_weights(n - 1);
    let line = LineOperator::from_weights(&k1, half_length, hd, w)?;
    crate::layer1d::solve_layer_with(&line, f, crate::layer1d::LayerOptions::default())
}
