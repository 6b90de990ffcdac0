//! First odd eigenpair of L_K in B_R ∩ O (zero data outside B_R) on the lattice.

use crate::error::{Error, Result};
use crate::operator::system::DirichletSystem;
use crate::operator::{LatticeOperator, OddGridFunction};
use crate::special::linear_fit;
use faer::Side;
use std::io::Write;

#[derive(Debug, Clone)]
pub struct OddEigenpair {
    pub radius: f64,
    pub lambda: f64,
    /// Normalized in L²(B_R ∩ O), nonnegative, zero outside B_R.
    pub phi: OddGridFunction,
    /// Rayleigh quotient of `phi`.
    pub rayleigh: f64,
    /// sup |Mφ - λφ| / λ over the unknowns.
    pub residual: f64,
    pub iterations: usize,
    pub ritz_history: Vec<f64>,
    /// Grid ids of the unknowns (nodes with |x| < R).
    pub nodes: Vec<usize>,
}

impl OddEigenpair {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# R={} lambda1={:.12e} rayleigh={:.12e}", self.radius, self.lambda, self.rayleigh)?;
        writeln!(out, "s,t,phi1")?;
        for &i in &self.nodes {
            let p = self.phi.grid.point(i);
            writeln!(out, "{:.6},{:.6},{:.12e}", p.s, p.t, self.phi.values[i])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-10, max_iter: 500 }
    }
}

/// Area weight of each unknown: orbit size times the cell area.
fn mass(op: &LatticeOperator, sys: &DirichletSystem) -> Vec<f64> {
    let h = op.grid().h();
    sys.weights.iter().map(|w| w * h * h).collect()
}

fn dot_w(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), m)| x * y * m).sum()
}

/// Rayleigh quotient ⟨v, Mv⟩_W / ⟨v, v⟩_W of the restricted operator.
pub fn rayleigh_quotient(sys: &DirichletSystem, v: &[f64]) -> f64 {
    let mv = sys.matvec(v);
    dot_w(v, &mv, &sys.weights) / dot_w(v, v, &sys.weights)
}

/// Dirichlet system of L_K on B_R ∩ O with zero data.
pub fn ball_system(op: &LatticeOperator, radius: f64) -> Result<DirichletSystem> {
    let g = op.grid();
    if radius > g.s_max() + 1e-12 {
        return Err(Error::Domain(format!("R = {radius} exceeds S_max = {}", g.s_max())));
    }
    let region: Vec<usize> = (0..g.ball_len(radius)).collect();
    if region.is_empty() {
        return Err(Error::Domain(format!("no lattice nodes in B_{radius}")));
    }
    op.assemble(&region, &OddGridFunction::zeros(g.clone()))
}

/// Inverse power iteration for the smallest eigenvalue of the restricted operator.
pub fn first_odd_eigenpair(op: &LatticeOperator, radius: f64, opts: EigenOptions) -> Result<OddEigenpair> {
    let sys = ball_system(op, radius)?;
    let n = sys.len();
    let fac = sys.factor(0.0)?;
    let w = mass(op, &sys);
    let mut v = vec![1.0; n];
    let norm = dot_w(&v, &v, &w).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut lambda = rayleigh_quotient(&sys, &v);
    let mut history = vec![lambda];
    let mut it = 0;
    loop {
        let mut next = fac.solve(&v);
        let norm = dot_w(&next, &next, &w).sqrt();
        next.iter_mut().for_each(|x| *x /= norm);
        let change = next.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        lambda = rayleigh_quotient(&sys, &v);
        history.push(lambda);
        it += 1;
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if change <= opts.tol * vmax {
            break;
        }
        if it >= opts.max_iter {
            return Err(Error::NoConvergence(format!(
                "inverse iteration did not converge; Ritz values {:?}",
                &history[history.len().saturating_sub(5)..]
            )));
        }
    }
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let mv = sys.matvec(&v);
    let residual = mv.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - lambda * b).abs())) / lambda;
    let mut phi = OddGridFunction::zeros(op.grid().clone());
    for (k, &i) in sys.nodes.iter().enumerate() {
        phi.values[i] = v[k];
    }
    Ok(OddEigenpair {
        radius,
        lambda,
        rayleigh: rayleigh_quotient(&sys, &v),
        phi,
        residual,
        iterations: it,
        ritz_history: history,
        nodes: sys.nodes.clone(),
    })
}

/// Smallest eigenvalue by dense symmetric eigendecomposition (the oracle).
pub fn dense_smallest_eigenvalue(sys: &DirichletSystem) -> f64 {
    let ev = sys.symmetrized().selfadjoint_eigenvalues(Side::Lower);
    ev.into_iter().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    /// (R, λ₁(R), λ₁(R) R^{2γ})
    pub rows: Vec<(f64, f64, f64)>,
    /// max/min of the products.
    pub ratio: f64,
    /// Log-log slope of λ₁ against R.
    pub slope: f64,
    pub decreasing: bool,
    pub pass: bool,
}

/// λ₁(R) R^{2γ} over the given radii (at least three, spanning a factor ≥ 4).
pub fn scaling_study(op: &LatticeOperator, radii: &[f64], opts: EigenOptions) -> Result<ScalingReport> {
    if radii.len() < 3 {
        return Err(Error::Config("scaling study needs at least three radii".into()));
    }
    let lo = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().cloned().fold(0.0, f64::max);
    if hi < 4.0 * lo {
        return Err(Error::Config("scaling radii must span a factor of at least 4".into()));
    }
    let g2 = 2.0 * op.kernel().order();
    let mut rows = Vec::new();
    for &r in radii {
        let e = first_odd_eigenpair(op, r, opts)?;
        rows.push((r, e.lambda, e.lambda * r.powf(g2)));
    }
    let pmax = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let pmin = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let xs: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let (slope, _) = linear_fit(&xs, &ys);
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let decreasing = sorted.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(ScalingReport { ratio: pmax / pmin, slope, decreasing, pass: pmax / pmin < 3.0, rows })
}
