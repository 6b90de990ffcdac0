//! Radial kernels of the ellipticity class L₀(n, γ, λ, Λ), their checks, and
//! the reduction of an n-dimensional kernel to a one-dimensional one.

use crate::error::{Error, Result};
use crate::interp::LogLogTable;
use crate::quad::{self, Tol};
use crate::special::{gamma_fn, logspace, sphere_area};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// c_{n,γ} = γ 4^γ Γ(n/2+γ) / (π^{n/2} Γ(1-γ)).
pub fn frac_constant(n: usize, gamma: f64) -> Result<f64> {
    check_params(n, gamma)?;
    let nf = n as f64;
    Ok(gamma * 4f64.powf(gamma) * gamma_fn(nf / 2.0 + gamma) / (PI.powf(nf / 2.0) * gamma_fn(1.0 - gamma)))
}

fn check_params(n: usize, gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("order γ = {gamma} must lie in (0,1)")));
    }
    if n == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Fractional,
    Modulated,
    Table,
    Custom,
}

/// K(z) = k(|z|) on R^n.
#[derive(Clone)]
pub struct RadialKernel {
    n: usize,
    gamma: f64,
    lambda: f64,
    big_lambda: f64,
    c: f64,
    kind: KernelKind,
    profile: ProfileFn,
    label: String,
}

impl fmt::Debug for RadialKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialKernel")
            .field("n", &self.n)
            .field("gamma", &self.gamma)
            .field("lambda", &self.lambda)
            .field("Lambda", &self.big_lambda)
            .field("label", &self.label)
            .finish()
    }
}

impl RadialKernel {
    /// The fractional Laplacian kernel c_{n,γ} r^{-n-2γ}.
    pub fn fractional(n: usize, gamma: f64) -> Result<Self> {
        let c = frac_constant(n, gamma)?;
        let p = n as f64 + 2.0 * gamma;
        Ok(RadialKernel {
            n,
            gamma,
            lambda: 1.0,
            big_lambda: 1.0,
            c,
            kind: KernelKind::Fractional,
            profile: Arc::new(move |r: f64| c * r.powf(-p)),
            label: format!("fractional(n={n}, γ={gamma})"),
        })
    }

    /// k(r) = c_{n,γ} r^{-n-2γ} g(r), with declared bounds λ ≤ g ≤ Λ.
    pub fn modulated<G>(n: usize, gamma: f64, lambda: f64, big_lambda: f64, g: G, label: &str) -> Result<Self>
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let c = frac_constant(n, gamma)?;
        check_bounds(lambda, big_lambda)?;
        let p = n as f64 + 2.0 * gamma;
        Ok(RadialKernel {
            n,
            gamma,
            lambda,
            big_lambda,
            c,
            kind: KernelKind::Modulated,
            profile: Arc::new(move |r: f64| c * r.powf(-p) * g(r)),
            label: label.to_string(),
        })
    }

    /// Arbitrary profile k(r).
    pub fn custom<K>(n: usize, gamma: f64, lambda: f64, big_lambda: f64, k: K, label: &str) -> Result<Self>
    where
        K: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let c = frac_constant(n, gamma)?;
        check_bounds(lambda, big_lambda)?;
        Ok(RadialKernel {
            n,
            gamma,
            lambda,
            big_lambda,
            c,
            kind: KernelKind::Custom,
            profile: Arc::new(k),
            label: label.to_string(),
        })
    }

    /// Tabulated profile (r_i, k_i), interpolated in log-log coordinates.
    pub fn from_table(n: usize, gamma: f64, lambda: f64, big_lambda: f64, r: &[f64], k: &[f64]) -> Result<Self> {
        let c = frac_constant(n, gamma)?;
        check_bounds(lambda, big_lambda)?;
        let table = LogLogTable::new(r, k)?;
        Ok(RadialKernel {
            n,
            gamma,
            lambda,
            big_lambda,
            c,
            kind: KernelKind::Table,
            profile: Arc::new(move |x: f64| table.eval(x)),
            label: format!("table({} samples)", r.len()),
        })
    }

    /// a K₁ + b K₂ for kernels with the same (n, γ).
    pub fn combine(a: f64, k1: &RadialKernel, b: f64, k2: &RadialKernel) -> Result<Self> {
        if k1.n != k2.n || k1.gamma != k2.gamma || a < 0.0 || b < 0.0 {
            return Err(Error::Domain("combination needs matching (n, γ) and nonnegative weights".into()));
        }
        let (p1, p2) = (k1.profile.clone(), k2.profile.clone());
        Ok(RadialKernel {
            n: k1.n,
            gamma: k1.gamma,
            lambda: a * k1.lambda + b * k2.lambda,
            big_lambda: a * k1.big_lambda + b * k2.big_lambda,
            c: k1.c,
            kind: KernelKind::Custom,
            profile: Arc::new(move |r| a * p1(r) + b * p2(r)),
            label: format!("{a}·[{}] + {b}·[{}]", k1.label, k2.label),
        })
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        (self.profile)(r)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    /// c_{n,γ} of the ambient dimension.
    pub fn norm_constant(&self) -> f64 {
        self.c
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn profile(&self) -> ProfileFn {
        self.profile.clone()
    }

    /// Same profile viewed in another ambient dimension (used when a kernel on
    /// R^{2m} is specified by its profile alone).
    pub fn with_dim(&self, n: usize) -> Result<Self> {
        let mut k = self.clone();
        k.c = frac_constant(n, self.gamma)?;
        k.n = n;
        Ok(k)
    }
}

fn check_bounds(lambda: f64, big_lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && big_lambda >= lambda && big_lambda.is_finite()) {
        return Err(Error::Domain(format!("ellipticity bounds need 0 < λ ≤ Λ, got ({lambda}, {big_lambda})")));
    }
    Ok(())
}

/// Outcome of an ellipticity scan.
#[derive(Debug, Clone, Copy)]
pub struct EllipticityReport {
    pub holds: bool,
    /// min of k(r) r^{n+2γ} / c_{n,γ}
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub r_at_min: f64,
    pub r_at_max: f64,
}

fn ellipticity_scan<F: Fn(f64) -> f64>(
    k: F,
    n: usize,
    gamma: f64,
    lambda: f64,
    big_lambda: f64,
    samples: usize,
) -> Result<EllipticityReport> {
    if samples < 2 {
        return Err(Error::Domain("ellipticity scan needs at least 2 samples".into()));
    }
    let c = frac_constant(n, gamma)?;
    let p = n as f64 + 2.0 * gamma;
    let mut rep = EllipticityReport {
        holds: true,
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        r_at_min: 0.0,
        r_at_max: 0.0,
    };
    for r in logspace(1e-4, 1e4, samples) {
        let v = k(r);
        if !v.is_finite() {
            return Err(Error::Evaluation { r });
        }
        let ratio = v * r.powf(p) / c;
        if ratio < rep.min_ratio {
            rep.min_ratio = ratio;
            rep.r_at_min = r;
        }
        if ratio > rep.max_ratio {
            rep.max_ratio = ratio;
            rep.r_at_max = r;
        }
    }
    let slack = 1e-9;
    rep.holds = rep.min_ratio >= lambda * (1.0 - slack) && rep.max_ratio <= big_lambda * (1.0 + slack);
    Ok(rep)
}

/// Scan k(r) r^{n+2γ}/c_{n,γ} over r ∈ [1e-4, 1e4] against [λ, Λ].
pub fn check_ellipticity(k: &RadialKernel, samples: usize) -> Result<EllipticityReport> {
    ellipticity_scan(|r| k.eval(r), k.n, k.gamma, k.lambda, k.big_lambda, samples)
}

/// Location of the worst convexity defect of τ ↦ k(√τ).
#[derive(Debug, Clone, Copy)]
pub struct ConvexityReport {
    pub strictly_convex: bool,
    /// Smallest normalized second difference found.
    pub worst: f64,
    pub tau_at_worst: f64,
}

/// Second differences of τ ↦ k(√τ) on a log grid τ = r², r ∈ [1e-4, 1e4].
pub fn sqrt_convexity_scan(k: &RadialKernel, grid: usize) -> ConvexityReport {
    let taus = logspace(1e-8, 1e8, grid.max(3));
    let g: Vec<f64> = taus.iter().map(|t| k.eval(t.sqrt())).collect();
    let mut rep = ConvexityReport { strictly_convex: true, worst: f64::INFINITY, tau_at_worst: 0.0 };
    for i in 1..taus.len() - 1 {
        let s1 = (g[i] - g[i - 1]) / (taus[i] - taus[i - 1]);
        let s2 = (g[i + 1] - g[i]) / (taus[i + 1] - taus[i]);
        let scale = s1.abs() + s2.abs();
        let d = if scale > 0.0 { (s2 - s1) / scale } else { 0.0 };
        if d < rep.worst {
            rep.worst = d;
            rep.tau_at_worst = taus[i];
        }
        if !(d > 1e-12) {
            rep.strictly_convex = false;
        }
    }
    rep
}

pub fn check_sqrt_convexity(k: &RadialKernel, grid: usize) -> bool {
    sqrt_convexity_scan(k, grid).strictly_convex
}

#[derive(Clone)]
enum Repr1D {
    Power { coef: f64 },
    Table(Arc<LogLogTable>),
    Exact(ProfileFn),
}

/// Even kernel k₁(τ) on R.
#[derive(Clone)]
pub struct Kernel1D {
    gamma: f64,
    lambda: f64,
    big_lambda: f64,
    repr: Repr1D,
}

impl fmt::Debug for Kernel1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.repr {
            Repr1D::Power { .. } => "power",
            Repr1D::Table(_) => "table",
            Repr1D::Exact(_) => "exact",
        };
        f.debug_struct("Kernel1D").field("gamma", &self.gamma).field("repr", &kind).finish()
    }
}

const TAIL_TOL: Tol = Tol { abs: 1e-300, rel: 1e-11, max_intervals: 4000 };

impl Kernel1D {
    /// c_{1,γ} |τ|^{-1-2γ}.
    pub fn fractional(gamma: f64) -> Result<Self> {
        Ok(Kernel1D { gamma, lambda: 1.0, big_lambda: 1.0, repr: Repr1D::Power { coef: frac_constant(1, gamma)? } })
    }

    pub fn from_fn<F>(gamma: f64, lambda: f64, big_lambda: f64, k: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_params(1, gamma)?;
        check_bounds(lambda, big_lambda)?;
        Ok(Kernel1D { gamma, lambda, big_lambda, repr: Repr1D::Exact(Arc::new(k)) })
    }

    pub fn order(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    /// Coefficient C when k₁ = C|τ|^{-1-2γ} exactly.
    pub fn power_coef(&self) -> Option<f64> {
        match self.repr {
            Repr1D::Power { coef } => Some(coef),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, tau: f64) -> f64 {
        let t = tau.abs();
        match &self.repr {
            Repr1D::Power { coef } => coef * t.powf(-1.0 - 2.0 * self.gamma),
            Repr1D::Table(tab) => tab.eval(t),
            Repr1D::Exact(f) => f(t),
        }
    }

    /// ∫_a^b k₁ for 0 < a < b.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        match &self.repr {
            Repr1D::Power { coef } => {
                let s = 2.0 * self.gamma;
                coef * (a.powf(-s) - b.powf(-s)) / s
            }
            _ => {
                let f = |t: f64| self.eval(t);
                let (lo, hi) = (a.ln(), b.ln());
                let n = ((hi - lo) / 0.5).ceil().max(1.0) as usize;
                let pts: Vec<f64> = (0..=n).map(|i| (lo + (hi - lo) * i as f64 / n as f64).exp()).collect();
                quad::adaptive_breaks(&f, &pts, TAIL_TOL).value
            }
        }
    }

    /// ∫_a^b τ² k₁ for 0 < a < b.
    pub fn moment2(&self, a: f64, b: f64) -> f64 {
        match &self.repr {
            Repr1D::Power { coef } => {
                let s = 2.0 - 2.0 * self.gamma;
                coef * (b.powf(s) - a.powf(s)) / s
            }
            _ => {
                let f = |t: f64| t * t * self.eval(t);
                quad::adaptive(&f, a, b, TAIL_TOL).value
            }
        }
    }

    /// ∫_a^∞ k₁ for a > 0.
    pub fn tail_mass(&self, a: f64) -> f64 {
        match &self.repr {
            Repr1D::Power { coef } => coef * a.powf(-2.0 * self.gamma) / (2.0 * self.gamma),
            Repr1D::Table(tab) => {
                let top = tab.xmax();
                let (_, p) = tab.tail_exponents();
                let tail = |from: f64| tab.eval(from) * from / (-p - 1.0);
                if a >= top {
                    tail(a)
                } else {
                    self.mass(a, top) + tail(top)
                }
            }
            Repr1D::Exact(f) => {
                let g = |t: f64| f(t);
                quad::adaptive_semi_infinite(&g, a, TAIL_TOL).value
            }
        }
    }

    /// ∫_a^∞ k₁(τ) (x₀+τ)^{-p} dτ for x₀ + a > 0, used for algebraic tails.
    pub fn weighted_tail(&self, a: f64, x0: f64, p: f64) -> f64 {
        let f = |t: f64| self.eval(t) * (x0 + t).powf(-p);
        quad::adaptive_semi_infinite(&f, a, TAIL_TOL).value
    }

    /// ∫_0^a τ² k₁(τ) dτ.
    pub fn second_moment(&self, a: f64) -> f64 {
        match &self.repr {
            Repr1D::Power { coef } => coef * a.powf(2.0 - 2.0 * self.gamma) / (2.0 - 2.0 * self.gamma),
            _ => {
                let f = |t: f64| t * t * self.eval(t);
                let pts: Vec<f64> = (0..=40).map(|i| a * 2f64.powi(i - 40)).collect();
                let mut p = vec![0.0];
                p.extend(pts);
                quad::adaptive_breaks(&f, &p, TAIL_TOL).value
            }
        }
    }

    /// Ellipticity scan of k₁ as a one-dimensional kernel.
    pub fn check_ellipticity(&self, samples: usize) -> Result<EllipticityReport> {
        ellipticity_scan(|t| self.eval(t), 1, self.gamma, self.lambda, self.big_lambda, samples)
    }
}

/// Samples per decade of the reduced-kernel table.
const REDUCE_PER_DECADE: usize = 64;

/// k₁(τ) = |S^{n-2}| ∫_0^∞ k(√(ρ²+τ²)) ρ^{n-2} dρ, tabulated on τ ∈ [1e-4, 1e4].
/// For n = 1 the kernel is returned unchanged.
pub fn reduce_to_1d(k: &RadialKernel) -> Result<Kernel1D> {
    if k.n == 1 {
        return Ok(Kernel1D {
            gamma: k.gamma,
            lambda: k.lambda,
            big_lambda: k.big_lambda,
            repr: if k.kind == KernelKind::Fractional {
                Repr1D::Power { coef: k.c }
            } else {
                Repr1D::Exact(k.profile.clone())
            },
        });
    }
    let taus = logspace(1e-4, 1e4, 8 * REDUCE_PER_DECADE + 1);
    let vals = taus.iter().map(|&t| reduce_at(k, t)).collect::<Result<Vec<f64>>>()?;
    Ok(Kernel1D {
        gamma: k.gamma,
        lambda: k.lambda,
        big_lambda: k.big_lambda,
        repr: Repr1D::Table(Arc::new(LogLogTable::new(&taus, &vals)?)),
    })
}

/// Single value of the reduction integral at τ > 0.
pub fn reduce_at(k: &RadialKernel, tau: f64) -> Result<f64> {
    let n = k.n;
    let w = sphere_area(n - 2);
    let e = (n - 2) as i32;
    // ρ = τσ; σ ∈ [0,1] directly, σ ∈ [1,∞) through σ = 1/u
    let near = |s: f64| k.eval(tau * (1.0 + s * s).sqrt()) * s.powi(e);
    let far = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let s = 1.0 / u;
        k.eval(tau * (1.0 + s * s).sqrt()) * s.powi(e) / (u * u)
    };
    let tol = Tol::new(1e-300, 1e-11).with_max(4000);
    let a = quad::adaptive(&near, 0.0, 1.0, tol);
    let b = quad::adaptive_breaks(&far, &[0.0, 1e-6, 1e-4, 1e-2, 0.1, 1.0], tol);
    let val = w * tau.powi(n as i32 - 1) * (a.value + b.value);
    let rel = (a.error + b.error) / (a.value + b.value).abs().max(1e-300);
    if !val.is_finite() || rel > 1e-8 {
        return Err(Error::Quadrature { context: format!("kernel reduction at τ = {tau}"), rel_err: rel });
    }
    Ok(val)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_closed_forms() {
        assert!((frac_constant(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-15);
        // n = 2, γ = 1/2: Γ(3/2) / (π Γ(1/2)) · 1/2 · 2 = 1/(2π)
        assert!((frac_constant(2, 0.5).unwrap() - 0.5 / PI).abs() < 1e-15);
        assert!(frac_constant(2, 1.0).is_err());
        assert!(frac_constant(2, 0.0).is_err());
        // near γ = 1 the constant vanishes like (1-γ): c/(1-γ) → 4Γ(n/2+1)/π^{n/2}
        let v: Vec<f64> = [0.9, 0.95, 0.99].iter().map(|g| frac_constant(3, *g).unwrap()).collect();
        assert!(v[0] > v[1] && v[1] > v[2] && v[2] > 0.0);
        let lim = 4.0 * gamma_fn(2.5) / PI.powf(1.5);
        assert!((frac_constant(3, 1.0 - 1e-7).unwrap() / 1e-7 / lim - 1.0).abs() < 1e-5);
    }

    #[test]
    fn fractional_kernel_values() {
        let k = RadialKernel::fractional(1, 0.5).unwrap();
        assert!((k.eval(2.0) / k.eval(1.0) - 0.25).abs() < 1e-15);
        let k2 = RadialKernel::fractional(2, 0.5).unwrap();
        assert_eq!(k2.eval(1.0), frac_constant(2, 0.5).unwrap());
        let r = check_ellipticity(&k2, 200).unwrap();
        assert!(r.holds);
        assert!((r.min_ratio - 1.0).abs() < 1e-12 && (r.max_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ellipticity_examples() {
        let k = RadialKernel::modulated(2, 0.3, 0.5, 1.5, |r: f64| 1.0 + 0.5 * r.ln().sin(), "osc").unwrap();
        assert!(check_ellipticity(&k, 500).unwrap().holds);
        let k = RadialKernel::modulated(2, 0.3, 0.5, 1.5, |r: f64| (-r).exp(), "exp").unwrap();
        let rep = check_ellipticity(&k, 500).unwrap();
        assert!(!rep.holds);
        assert!(rep.r_at_min > 1.0);
        let bad = RadialKernel::custom(2, 0.3, 0.5, 1.5, |_| f64::NAN, "nan").unwrap();
        assert!(matches!(check_ellipticity(&bad, 5), Err(Error::Evaluation { .. })));
    }

    #[test]
    fn convexity_examples() {
        assert!(check_sqrt_convexity(&RadialKernel::fractional(2, 0.4).unwrap(), 400));
        // k(√τ) affine on τ ≤ 1
        let k = RadialKernel::custom(2, 0.5, 0.1, 10.0, |r: f64| if r < 1.0 { 3.0 - r * r } else { 2.0 * r.powf(-3.0) }, "affine")
            .unwrap();
        assert!(!check_sqrt_convexity(&k, 400));
    }

    #[test]
    fn reduction_of_fractional_kernel() {
        for n in [2usize, 3] {
            let k = RadialKernel::fractional(n, 0.5).unwrap();
            let k1 = reduce_to_1d(&k).unwrap();
            for t in [0.1f64, 1.0, 10.0] {
                let exact = frac_constant(1, 0.5).unwrap() * t.powf(-2.0);
                assert!((k1.eval(t) / exact - 1.0).abs() < 1e-6);
                assert_eq!(k1.eval(t), k1.eval(-t));
            }
        }
    }

    #[test]
    fn one_dimensional_masses() {
        let k = Kernel1D::fractional(0.3).unwrap();
        let e = Kernel1D::from_fn(0.3, 1.0, 1.0, {
            let c = frac_constant(1, 0.3).unwrap();
            move |t: f64| c * t.powf(-1.6)
        })
        .unwrap();
        for (a, b) in [(0.05, 0.15), (1.0, 7.0)] {
            assert!((k.mass(a, b) / e.mass(a, b) - 1.0).abs() < 1e-9);
        }
        assert!((k.tail_mass(2.0) / e.tail_mass(2.0) - 1.0).abs() < 1e-8);
        assert!((k.second_moment(0.1) / e.second_moment(0.1) - 1.0).abs() < 1e-8);
    }
}
