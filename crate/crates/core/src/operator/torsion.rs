//! Torsion problem L_K φ = 1 in B_R, φ = 0 outside, for radial kernels in R^n.
//!
//! φ is sought as (1 - q)_+^γ ψ(q) with q = |x|²/R² and ψ a Chebyshev series in q,
//! fitted by least-squares collocation. L_K of each basis function is evaluated
//! by paired-direction quadrature in polar coordinates around the target point.

use crate::error::{Error, Result};
use crate::kernels::RadialKernel;
use crate::quad::{self, Tol};
use crate::special::sphere_area;
use faer::prelude::SpSolverLstsq;
use faer::Mat;
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy)]
pub struct TorsionOptions {
    /// Degree of the Chebyshev series for ψ.
    pub degree: usize,
    /// Number of collocation radii (≥ degree + 1).
    pub points: usize,
    pub rel_tol: f64,
}

impl Default for TorsionOptions {
    fn default() -> Self {
        TorsionOptions { degree: 8, points: 16, rel_tol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct TorsionSolution {
    pub n: usize,
    pub radius: f64,
    pub gamma: f64,
    coeffs: Vec<f64>,
    /// M_R = sup φ_R.
    pub sup: f64,
    /// Radius where the supremum is attained.
    pub argmax: f64,
    /// sup |L_K φ - 1| at check radii between the collocation points.
    pub residual: f64,
}

fn chebyshev(n: usize, x: f64) -> Vec<f64> {
    let mut t = vec![1.0; n + 1];
    if n > 0 {
        t[1] = x;
    }
    for k in 2..=n {
        t[k] = 2.0 * x * t[k - 1] - t[k - 2];
    }
    t
}

impl TorsionSolution {
    /// φ_R at radius r.
    pub fn phi(&self, r: f64) -> f64 {
        let q = (r / self.radius).powi(2);
        if q >= 1.0 {
            return 0.0;
        }
        let t = chebyshev(self.coeffs.len() - 1, 2.0 * q - 1.0);
        (1.0 - q).powf(self.gamma) * t.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum::<f64>()
    }

    /// ψ_R = 1 - φ_R / M_R.
    pub fn psi(&self, r: f64) -> f64 {
        1.0 - self.phi(r) / self.sup
    }
}

/// L_K applied to the radial function b at radius r, in dimension n, where b
/// vanishes for |y| ≥ big_r and has a (big_r - |y|)^γ edge.
pub fn apply_radial<B: Fn(f64) -> f64>(k: &RadialKernel, b: &B, r: f64, big_r: f64, tol: Tol) -> Result<f64> {
    let n = k.dim();
    let br = b(r);
    let inner = Tol::new(tol.abs, 0.1 * tol.rel).with_max(200);
    // ∫ over the half sphere of 2b(r) - b(|x+ρω|) - b(|x-ρω|)
    let ring = |rho: f64| -> f64 {
        if n == 1 {
            return 2.0 * br - b((r + rho).abs()) - b((r - rho).abs());
        }
        let g = |th: f64| {
            let c = th.cos();
            let a = r * r + rho * rho;
            let v = 2.0 * br - b((a + 2.0 * r * rho * c).max(0.0).sqrt()) - b((a - 2.0 * r * rho * c).max(0.0).sqrt());
            v * th.sin().powi(n as i32 - 2)
        };
        let mut pts = vec![0.0];
        if r > 0.0 {
            let c = ((big_r * big_r - r * r - rho * rho) / (2.0 * r * rho)).abs();
            if c < 1.0 {
                pts.push(c.acos());
            }
        }
        pts.push(FRAC_PI_2);
        sphere_area(n - 2) * quad::adaptive_breaks(&g, &pts, inner).value
    };
    let f = |rho: f64| k.eval(rho) * rho.powi(n as i32 - 1) * ring(rho);
    let outer = big_r + r;
    // much below 1e-3 (R - r) the paired difference is lost to roundoff for γ > 1/2
    let rho_t = 1e-3 * (big_r - r).max(1e-3 * big_r);
    let mut br_pts = vec![rho_t];
    let mut x = 4.0 * rho_t;
    while x < outer {
        br_pts.push(x);
        x *= 4.0;
    }
    for p in [big_r - r, outer] {
        if p > rho_t {
            br_pts.push(p);
        }
    }
    br_pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    br_pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * outer);
    let mut total = quad::check(quad::adaptive_breaks(&f, &br_pts, tol), "torsion operator")?;
    // small-ρ part, where the paired integrand is c ρ^{1-2γ}
    total += f(rho_t) * rho_t / (2.0 - 2.0 * k.order());
    // beyond R + r only b(r) survives; for n = 1 the half sphere is a single point
    if br != 0.0 {
        let half = if n == 1 { 1.0 } else { 0.5 * sphere_area(n - 1) };
        let tail = |rho: f64| k.eval(rho) * rho.powi(n as i32 - 1);
        total += 2.0 * br * half * quad::integrate_semi_infinite(&tail, outer, Tol::new(1e-300, tol.rel), "torsion tail")?;
    }
    Ok(total)
}

/// Solves L_K φ = 1 in B_R with zero exterior data.
pub fn solve_torsion(k: &RadialKernel, radius: f64, opts: TorsionOptions) -> Result<TorsionSolution> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("torsion radius must be positive, got {radius}")));
    }
    if opts.points <= opts.degree {
        return Err(Error::Config("torsion needs more collocation points than the degree".into()));
    }
    let gamma = k.order();
    let d = opts.degree;
    let tol = Tol::new(1e-14, opts.rel_tol).with_max(400);
    let basis = |j: usize| {
        move |rr: f64| {
            let q = (rr / radius).powi(2);
            if q >= 1.0 {
                0.0
            } else {
                (1.0 - q).powf(gamma) * chebyshev(d, 2.0 * q - 1.0)[j]
            }
        }
    };
    // Chebyshev points in q, clustered at both ends
    let qs: Vec<f64> = (0..opts.points)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::PI * (i as f64 + 0.5) / opts.points as f64).cos())
        .collect();
    let mut a = Mat::<f64>::zeros(opts.points, d + 1);
    for (i, q) in qs.iter().enumerate() {
        let r = radius * q.sqrt();
        for j in 0..=d {
            a.write(i, j, apply_radial(k, &basis(j), r, radius, tol)?);
        }
    }
    let rhs = Mat::<f64>::from_fn(opts.points, 1, |_, _| 1.0);
    let sol = a.qr().solve_lstsq(&rhs);
    let coeffs: Vec<f64> = (0..=d).map(|j| sol.read(j, 0)).collect();
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::LinearAlgebra("torsion collocation system is singular".into()));
    }
    let mut s = TorsionSolution { n: k.dim(), radius, gamma, coeffs, sup: 0.0, argmax: 0.0, residual: 0.0 };
    for i in 0..=400 {
        let r = radius * i as f64 / 400.0;
        let v = s.phi(r);
        if v > s.sup {
            s.sup = v;
            s.argmax = r;
        }
    }
    if !(s.sup > 0.0) {
        return Err(Error::Monotonicity("torsion function is not positive".into()));
    }
    let phi = |r: f64| s.phi(r);
    let mut res: f64 = 0.0;
    for w in qs.windows(2) {
        let r = radius * (0.5 * (w[0] + w[1])).sqrt();
        res = res.max((apply_radial(k, &phi, r, radius, tol)? - 1.0).abs());
    }
    s.residual = res;
    Ok(s)
}

/// Closed-form torsion function of the fractional Laplacian of order γ in R^n.
pub fn fractional_torsion(n: usize, gamma: f64, radius: f64, r: f64) -> f64 {
    use crate::special::gamma_fn;
    let nf = n as f64;
    let kappa = gamma_fn(nf / 2.0) / (4f64.powf(gamma) * gamma_fn(nf / 2.0 + gamma) * gamma_fn(1.0 + gamma));
    if r >= radius {
        0.0
    } else {
        kappa * (radius * radius - r * r).powf(gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_is_a_fixed_point() {
        // the closed form satisfies L φ = 1 when pushed through the quadrature
        for &(n, g) in &[(1, 0.5), (2, 0.3), (3, 0.75)] {
            let k = RadialKernel::fractional(n, g).unwrap();
            let phi = |r: f64| fractional_torsion(n, g, 2.0, r);
            for &r in &[0.0, 0.7, 1.5, 1.9] {
                let v = apply_radial(&k, &phi, r, 2.0, Tol::new(1e-14, 1e-10).with_max(400)).unwrap();
                assert!((v - 1.0).abs() < 1e-5, "n={n} γ={g} r={r}: {v}");
            }
        }
    }

    #[test]
    fn fractional_torsion_recovered() {
        let k = RadialKernel::fractional(2, 0.5).unwrap();
        let s = solve_torsion(&k, 1.5, TorsionOptions { degree: 4, points: 8, rel_tol: 1e-9 }).unwrap();
        for i in 0..20 {
            let r = 1.5 * i as f64 / 20.0;
            let e = fractional_torsion(2, 0.5, 1.5, r);
            assert!((s.phi(r) / e - 1.0).abs() < 1e-4, "r={r}");
        }
        assert!(s.residual < 1e-5);
    }
}
