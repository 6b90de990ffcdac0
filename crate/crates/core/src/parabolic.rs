//! Nonlocal parabolic flow ∂ₜv + L_K v = f(v) on a truncated domain, with the
//! scalar ODE ξ̇ = f(ξ) as barrier.

use crate::error::{Error, Result};
use crate::layer1d::Nonlinearity;
use crate::operator::{DirichletSystem, LineOperator, TailRule};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub t: f64,
    pub min: f64,
    pub max: f64,
    /// ‖∂ₜv‖_∞ over the last step.
    pub rate: f64,
}

/// How the data outside the computational domain evolve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExteriorMode {
    /// The forcing of the system stays as assembled.
    Fixed,
    /// Constant exterior value following the discrete ODE from ξ₀. Needs a
    /// system with `unit_forcing`; the assembled forcing is ignored.
    FollowOde { xi0: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub t_final: f64,
    pub dt: f64,
    pub exterior: ExteriorMode,
    /// Snapshots of v are kept every this many steps (and at the end); 0 keeps none.
    pub snapshot_every: usize,
    pub max_rejections: usize,
}

impl EvolveOptions {
    pub fn new(t_final: f64, dt: f64) -> Self {
        EvolveOptions { t_final, dt, exterior: ExteriorMode::Fixed, snapshot_every: 0, max_rejections: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub v: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    pub history: Vec<HistoryRow>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub rejections: usize,
    /// Exterior value at each history row (ODE-following mode), else empty.
    pub exterior_values: Vec<f64>,
}

impl EvolutionState {
    pub fn write_history<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,min,max,residual")?;
        for r in &self.history {
            writeln!(out, "{:.10},{:.12e},{:.12e},{:.6e}", r.t, r.min, r.max, r.rate)?;
        }
        Ok(())
    }
}

fn extrema(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// One step of the scalar scheme (1 + Δt b) ξ' = ξ + Δt (f(ξ) + b ξ).
fn scalar_step(f: &Nonlinearity, b: f64, dt: f64, xi: f64) -> f64 {
    (xi + dt * (f.eval(xi) + b * xi)) / (1.0 + dt * b)
}

/// Semi-implicit stepping (I + Δt(L_K + b)) v_{k+1} = v_k + Δt (f(v_k) + b v_k)
/// with the Dirichlet data of `sys`. Δt is halved when ‖∂ₜv‖ jumps by more
/// than a factor 10 or turns non-finite.
pub fn evolve(sys: &DirichletSystem, f: &Nonlinearity, v0: &[f64], opts: EvolveOptions) -> Result<EvolutionState> {
    let n = sys.len();
    if v0.len() != n {
        return Err(Error::Domain(format!("initial data has {} values for {n} unknowns", v0.len())));
    }
    if !(opts.t_final > 0.0 && opts.dt > 0.0) {
        return Err(Error::Domain("evolution needs T > 0 and Δt > 0".into()));
    }
    let unit = match opts.exterior {
        ExteriorMode::Fixed => None,
        ExteriorMode::FollowOde { .. } => Some(
            sys.unit_forcing
                .as_ref()
                .ok_or_else(|| Error::Config("ODE-following exterior needs a system with unit forcing".into()))?,
        ),
    };
    let b = f.monotone_shift();
    let (lo0, hi0) = extrema(v0);
    let bound = 10.0 * lo0.abs().max(hi0.abs()).max(1.0);
    let mut steps = (opts.t_final / opts.dt).ceil().max(1.0) as usize;
    let mut dt = opts.t_final / steps as f64;
    let mut fac = sys.factor(b + 1.0 / dt)?;
    let mut v = v0.to_vec();
    let mut t = 0.0;
    let mut xi = match opts.exterior {
        ExteriorMode::FollowOde { xi0 } => xi0,
        ExteriorMode::Fixed => 0.0,
    };
    let mut history = vec![HistoryRow { t: 0.0, min: lo0, max: hi0, rate: 0.0 }];
    let mut ext = if unit.is_some() { vec![xi] } else { Vec::new() };
    let mut snapshots = if opts.snapshot_every > 0 { vec![(0.0, v.clone())] } else { Vec::new() };
    let mut rejections = 0;
    let mut k = 0;
    let mut last_rate = f64::INFINITY;
    while k < steps {
        let xi_next = scalar_step(f, b, dt, xi);
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let forcing = match unit {
                    Some(u) => xi_next * u[i],
                    None => sys.forcing[i],
                };
                v[i] / dt + f.eval(v[i]) + b * v[i] + forcing
            })
            .collect();
        let next = fac.solve(&rhs);
        let rate = next.iter().zip(&v).fold(0.0f64, |m, (a, c)| m.max((a - c).abs())) / dt;
        let jump = k > 0 && last_rate > 1e-12 && rate > 10.0 * last_rate;
        if !rate.is_finite() || jump {
            rejections += 1;
            if rejections > opts.max_rejections {
                return Err(Error::NoConvergence(format!("evolution: {rejections} step rejections at t = {t:.4}")));
            }
            let remaining = opts.t_final - t;
            dt *= 0.5;
            steps = k + (remaining / dt).round().max(1.0) as usize;
            dt = remaining / (steps - k) as f64;
            fac = sys.factor(b + 1.0 / dt)?;
            continue;
        }
        v = next;
        xi = xi_next;
        k += 1;
        t = if k == steps { opts.t_final } else { t + dt };
        last_rate = rate;
        let (lo, hi) = extrema(&v);
        if lo.abs().max(hi.abs()) > bound {
            return Err(Error::Divergence(format!("evolution blew up at t = {t:.4}: sup |v| = {:.3e}", lo.abs().max(hi.abs()))));
        }
        history.push(HistoryRow { t, min: lo, max: hi, rate });
        if unit.is_some() {
            ext.push(xi);
        }
        if opts.snapshot_every > 0 && (k % opts.snapshot_every == 0 || k == steps) {
            snapshots.push((t, v.clone()));
        }
    }
    Ok(EvolutionState { v, t, dt, history, snapshots, rejections, exterior_values: ext })
}

/// Richardson extrapolation of the final state over `levels` runs with steps
/// Δt, Δt/2, …; the scheme is first order, so the error expands in powers of Δt.
pub fn evolve_extrapolated(sys: &DirichletSystem, f: &Nonlinearity, v0: &[f64], opts: EvolveOptions, levels: usize) -> Result<Vec<f64>> {
    if levels == 0 {
        return Err(Error::Config("extrapolation needs at least one level".into()));
    }
    let mut table: Vec<Vec<Vec<f64>>> = Vec::new();
    for l in 0..levels {
        let o = EvolveOptions { dt: opts.dt / 2f64.powi(l as i32), snapshot_every: 0, ..opts };
        let s = evolve(sys, f, v0, o)?;
        if s.rejections > 0 {
            return Err(Error::NoConvergence("step rejections spoil the extrapolation".into()));
        }
        let mut row = vec![s.v];
        for j in 1..=l {
            let c = 2f64.powi(j as i32);
            let prev = &table[l - 1][j - 1];
            let cur = &row[j - 1];
            row.push(cur.iter().zip(prev).map(|(a, p)| (c * a - p) / (c - 1.0)).collect());
        }
        table.push(row);
    }
    Ok(table.pop().unwrap().pop().unwrap())
}

/// ξ(t) at the requested (nondecreasing) times for ξ̇ = f(ξ), ξ(0) = ξ₀,
/// by classical RK4 with step ≤ 10⁻³.
pub fn ode_barrier(f: &Nonlinearity, xi0: f64, times: &[f64]) -> Result<Vec<f64>> {
    if !(xi0 > 0.0 && xi0 < 1.0) {
        return Err(Error::Domain(format!("barrier start ξ₀ = {xi0} must lie in (0, 1)")));
    }
    for i in 0..=200 {
        let x = xi0 + (1.0 - xi0) * i as f64 / 201.0;
        if f.eval(x) <= 0.0 {
            return Err(Error::Hypothesis(format!("f({x:.4}) ≤ 0 in (0, 1)")));
        }
    }
    let rhs = |x: f64| f.eval(x);
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut x) = (0.0, xi0);
    for &target in times {
        if target < t {
            return Err(Error::Domain("barrier times must be nondecreasing".into()));
        }
        let n = ((target - t) / 1e-3).ceil() as usize;
        if n > 0 {
            let h = (target - t) / n as f64;
            for _ in 0..n {
                let k1 = rhs(x);
                let k2 = rhs(x + 0.5 * h * k1);
                let k3 = rhs(x + 0.5 * h * k2);
                let k4 = rhs(x + h * k3);
                x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        t = target;
        out.push(x);
    }
    Ok(out)
}

/// Closed form for f = u - u³: ξ(t)² = 1 / (1 + (ξ₀⁻² - 1) e^{-2t}).
pub fn allen_cahn_trajectory(xi0: f64, t: f64) -> f64 {
    (1.0 / (1.0 + (1.0 / (xi0 * xi0) - 1.0) * (-2.0 * t).exp())).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierSide {
    /// v ≥ ξ.
    Below,
    /// v ≤ ξ.
    Above,
}

#[derive(Debug, Clone)]
pub struct BarrierReport {
    pub pass: bool,
    /// Smallest signed margin (v - ξ for a lower barrier).
    pub worst_margin: f64,
    pub at_time: f64,
    pub checked: usize,
}

/// Compares the recorded extrema of `state` with `barrier(t)` at every history
/// time, with tolerance 10⁻⁸.
pub fn barrier_comparison<B: Fn(f64) -> f64>(state: &EvolutionState, barrier: B, side: BarrierSide) -> BarrierReport {
    let mut worst = f64::INFINITY;
    let mut at = 0.0;
    for r in &state.history {
        let m = match side {
            BarrierSide::Below => r.min - barrier(r.t),
            BarrierSide::Above => barrier(r.t) - r.max,
        };
        if m < worst {
            worst = m;
            at = r.t;
        }
    }
    BarrierReport { pass: worst >= -1e-8, worst_margin: worst, at_time: at, checked: state.history.len() }
}

/// The barrier a discrete evolution with step `dt` must respect: the scalar
/// scheme itself, i.e. exactly what a spatially constant state would do.
pub fn discrete_barrier(f: &Nonlinearity, xi0: f64, dt: f64, steps: usize) -> Vec<f64> {
    let b = f.monotone_shift();
    let mut out = Vec::with_capacity(steps + 1);
    let mut xi = xi0;
    out.push(xi);
    for _ in 0..steps {
        xi = scalar_step(f, b, dt, xi);
        out.push(xi);
    }
    out
}

/// sup/inf of positive samples (distance to the center, value) inside B_R,
/// given that every sample within 2R is positive.
pub fn harnack_ratio<I: IntoIterator<Item = (f64, f64)>>(samples: I, radius: f64) -> Result<f64> {
    let (mut lo, mut hi, mut count) = (f64::INFINITY, 0.0f64, 0usize);
    for (d, v) in samples {
        if d <= 2.0 * radius && !(v > 0.0) {
            return Err(Error::Hypothesis(format!("Harnack needs v > 0 on B_2R; found {v:.3e} at distance {d:.3}")));
        }
        if d <= radius {
            lo = lo.min(v);
            hi = hi.max(v);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Domain(format!("no samples in B_{radius}")));
    }
    Ok(hi / lo)
}

/// Harnack ratio of an odd lattice function on B_R(center), center in O.
pub fn harnack_ratio_lattice(v: &crate::operator::OddGridFunction, center: (f64, f64), radius: f64) -> Result<f64> {
    let h = v.grid.h();
    let r2 = 2.0 * radius;
    let (a0, a1) = (((center.0 - r2) / h).floor() as i32, ((center.0 + r2) / h).ceil() as i32);
    let (b0, b1) = (((center.1 - r2) / h).floor() as i32, ((center.1 + r2) / h).ceil() as i32);
    let mut samples = Vec::new();
    for a in a0..=a1 {
        for b in b0..=b1 {
            let d = (a as f64 * h - center.0).hypot(b as f64 * h - center.1);
            if d <= r2 {
                samples.push((d, v.at_lattice(a, b)));
            }
        }
    }
    harnack_ratio(samples, radius)
}

/// Dirichlet system of the 1-D operator with a constant exterior value.
pub fn line_system(op: &LineOperator, exterior: f64) -> DirichletSystem {
    op.system(&TailRule::Constant(exterior))
}

#[derive(Debug, Clone)]
pub struct LiouvilleReport {
    /// sup over the history of |v| for zero data.
    pub zero_drift: f64,
    /// max |v(T) - ξ(T)| for constant data against the closed-form ODE
    /// (Richardson-extrapolated in Δt).
    pub constant_error: f64,
    pub bump_barrier: BarrierReport,
    /// sup over the core |x| ≤ L/2 of 1 - v at the final time.
    pub core_gap: f64,
    /// core gap at each recorded snapshot, (t, gap).
    pub core_gap_history: Vec<(f64, f64)>,
    /// History of the bump run.
    pub bump_history: Vec<HistoryRow>,
}

impl LiouvilleReport {
    pub fn pass(&self) -> bool {
        self.zero_drift == 0.0
            && self.constant_error < 1e-6
            && self.bump_barrier.pass
            && self.core_gap_history.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12)
    }
}

/// The three desk runs of the Liouville dichotomy on the line: zero data,
/// constant data ξ₀ and a bump of height `amp` on top of the level ξ₀.
pub fn liouville_runs(op: &LineOperator, f: &Nonlinearity, xi0: f64, amp: f64, t_final: f64, dt: f64) -> Result<LiouvilleReport> {
    let n = op.len();
    let xs: Vec<f64> = (0..n).map(|i| -op.half_length() + i as f64 * op.h()).collect();

    let zero = evolve(&line_system(op, 0.0), f, &vec![0.0; n], EvolveOptions::new(t_final, dt))?;
    let zero_drift = zero.history.iter().map(|r| r.min.abs().max(r.max.abs())).fold(0.0, f64::max);

    let sys = line_system(op, xi0);
    let mut o = EvolveOptions::new(t_final, dt);
    o.exterior = ExteriorMode::FollowOde { xi0 };
    let cst = evolve_extrapolated(&sys, f, &vec![xi0; n], o, 4)?;
    let exact = ode_barrier(f, xi0, &[t_final])?[0];
    let constant_error = cst.iter().map(|v| (v - exact).abs()).fold(0.0, f64::max);

    let bump: Vec<f64> = xs.iter().map(|x| xi0 + amp * (-(x * x) / 4.0).exp()).collect();
    o.snapshot_every = ((1.0 / dt).round() as usize).max(1);
    let run = evolve(&sys, f, &bump, o)?;
    let steps = run.history.len() - 1;
    let bar = discrete_barrier(f, xi0, t_final / steps as f64, steps);
    let times: Vec<f64> = run.history.iter().map(|r| r.t).collect();
    let lookup = |t: f64| {
        let k = times.partition_point(|&s| s < t - 1e-12);
        bar[k.min(bar.len() - 1)]
    };
    let bump_barrier = barrier_comparison(&run, lookup, BarrierSide::Below);
    let core = |v: &[f64]| {
        xs.iter().zip(v).filter(|(x, _)| x.abs() <= 0.5 * op.half_length()).map(|(_, v)| 1.0 - v).fold(0.0, f64::max)
    };
    let core_gap_history: Vec<(f64, f64)> = run.snapshots.iter().map(|(t, v)| (*t, core(v))).collect();
    Ok(LiouvilleReport {
        zero_drift,
        constant_error,
        bump_barrier,
        core_gap: core(&run.v),
        core_gap_history,
        bump_history: run.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_trajectory() {
        let f = Nonlinearity::allen_cahn();
        let xs = ode_barrier(&f, 0.5, &[0.0, 1.0, 5.0]).unwrap();
        for (x, t) in xs.iter().zip([0.0, 1.0, 5.0]) {
            assert!((x - allen_cahn_trajectory(0.5, t)).abs() < 1e-10);
            assert!((x * x - 1.0 / (1.0 + 3.0 * (-2.0 * t).exp())).abs() < 1e-10);
        }
        assert!(ode_barrier(&f, 1.2, &[1.0]).is_err());
    }

    #[test]
    fn harnack_of_constant() {
        let s = (0..10).map(|i| (i as f64 * 0.1, 1.0));
        assert_eq!(harnack_ratio(s, 0.5).unwrap(), 1.0);
        assert!(harnack_ratio([(0.1, 1.0), (0.9, -1.0)], 0.5).is_err());
    }

    #[test]
    fn liouville_dichotomy_on_the_line() {
        let k = crate::kernels::Kernel1D::fractional(0.5).unwrap();
        let op = LineOperator::new(&k, 10.0, 0.1).unwrap();
        let f = Nonlinearity::allen_cahn();
        let r = liouville_runs(&op, &f, 0.5, 0.3, 5.0, 0.02).unwrap();
        assert_eq!(r.zero_drift, 0.0);
        assert!(r.constant_error < 1e-6, "{}", r.constant_error);
        assert!(r.bump_barrier.pass, "{:?}", r.bump_barrier);
        assert!(r.core_gap < 1e-3, "{}", r.core_gap);
        assert!(r.pass());
    }
}
