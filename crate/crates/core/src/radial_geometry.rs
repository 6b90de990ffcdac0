//! Geometry of the Simons cone in the coordinates s = |x'|, t = |x''|: the
//! involution, the orbit-averaged kernel K̄ and the zero-order coefficient A.

use crate::error::{Error, Result};
use crate::kernels::RadialKernel;
use crate::quad::{self, gauss_jacobi, Rule, Tol};
use crate::special::{gamma_fn, sphere_area};
use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI, SQRT_2};
use std::sync::Mutex;

/// A point (s, t) = (|x'|, |x''|) of the closed quadrant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantPoint {
    pub s: f64,
    pub t: f64,
}

impl QuadrantPoint {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        if !(s >= 0.0 && t >= 0.0) {
            return Err(Error::Domain(format!("quadrant point needs s, t ≥ 0, got ({s}, {t})")));
        }
        Ok(QuadrantPoint { s, t })
    }

    /// Inside O = {s > t}.
    pub fn in_o(&self) -> bool {
        self.s > self.t
    }

    /// Signed distance (s - t)/√2 to the cone.
    pub fn signed_distance(&self) -> f64 {
        (self.s - self.t) * FRAC_1_SQRT_2
    }

    pub fn norm(&self) -> f64 {
        self.s.hypot(self.t)
    }
}

/// (s, t) ↦ (t, s).
pub fn star(p: QuadrantPoint) -> QuadrantPoint {
    QuadrantPoint { s: p.t, t: p.s }
}

/// Averaged kernel K̄ on R^{2m} = R^m × R^m, with angular rules and a memo
/// for lattice arguments.
pub struct AveragedKernelCache {
    m: usize,
    kernel: RadialKernel,
    rules: Vec<Rule>,
    memo: Mutex<HashMap<[i64; 4], f64>>,
}

impl std::fmt::Debug for AveragedKernelCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AveragedKernelCache").field("m", &self.m).field("kernel", &self.kernel).finish()
    }
}

/// ∫_0^π sin^{m-2}θ dθ.
pub fn angular_normalizer(m: usize) -> f64 {
    if m < 2 {
        return 1.0;
    }
    let mf = m as f64;
    PI.sqrt() * gamma_fn((mf - 1.0) / 2.0) / gamma_fn(mf / 2.0)
}

impl AveragedKernelCache {
    /// `kernel` must live on R^{2m}.
    pub fn new(m: usize, kernel: RadialKernel) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("half-dimension m must be positive".into()));
        }
        if kernel.dim() != 2 * m {
            return Err(Error::Domain(format!("kernel dimension {} does not match 2m = {}", kernel.dim(), 2 * m)));
        }
        let mut rules = Vec::new();
        if m >= 2 {
            let a = (m as f64 - 3.0) / 2.0;
            let z = angular_normalizer(m);
            for n in [32, 64, 128, 256] {
                let mut r = gauss_jacobi(n, a, a)?;
                for w in r.weights.iter_mut() {
                    *w /= z;
                }
                rules.push(r);
            }
        }
        Ok(AveragedKernelCache { m, kernel, rules, memo: Mutex::new(HashMap::new()) })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kernel(&self) -> &RadialKernel {
        &self.kernel
    }

    /// Angular rule (nodes in z = cos θ, weights normalized to total 1) at the
    /// default resolution. Empty for m = 1.
    pub fn angular_rule(&self) -> Option<&Rule> {
        self.rules.first()
    }

    fn kbar_rule(&self, rule: &Rule, x: QuadrantPoint, y: QuadrantPoint) -> f64 {
        let a0 = x.s * x.s + y.s * y.s + x.t * x.t + y.t * y.t;
        let (ps, pt) = (2.0 * x.s * y.s, 2.0 * x.t * y.t);
        let mut acc = 0.0;
        for (z1, w1) in rule.nodes.iter().zip(&rule.weights) {
            let mut inner = 0.0;
            let b = a0 - ps * z1;
            for (z2, w2) in rule.nodes.iter().zip(&rule.weights) {
                inner += w2 * self.kernel.eval((b - pt * z2).max(0.0).sqrt());
            }
            acc += w1 * inner;
        }
        acc
    }

    fn kbar_adaptive(&self, x: QuadrantPoint, y: QuadrantPoint) -> Result<f64> {
        let e = (self.m - 2) as i32;
        let z = angular_normalizer(self.m);
        let tol = Tol::new(1e-300, 1e-10).with_max(400);
        let inner = |al: f64| {
            let b = x.s * x.s + y.s * y.s - 2.0 * x.s * y.s * al.cos() + x.t * x.t + y.t * y.t;
            let g = |be: f64| {
                self.kernel.eval((b - 2.0 * x.t * y.t * be.cos()).max(0.0).sqrt()) * be.sin().powi(e)
            };
            quad::adaptive_breaks(&g, &[0.0, 0.01, 0.1, PI], tol).value * al.sin().powi(e)
        };
        let v = quad::adaptive_breaks(&inner, &[0.0, 0.01, 0.1, PI], tol);
        quad::check(v, "averaged kernel").map(|v| v / (z * z))
    }

    /// K̄(x, y), the average of K(|Rx - y|) over R ∈ O(m)².
    pub fn kbar(&self, x: QuadrantPoint, y: QuadrantPoint) -> Result<f64> {
        if (x.s - y.s).abs() < 1e-14 && (x.t - y.t).abs() < 1e-14 {
            return Err(Error::Singular(format!("K̄ at coincident points ({}, {})", x.s, x.t)));
        }
        if self.m == 1 {
            let k = &self.kernel;
            let (ds0, ds1) = (x.s - y.s, x.s + y.s);
            let (dt0, dt1) = (x.t - y.t, x.t + y.t);
            return Ok(0.25
                * (k.eval(ds0.hypot(dt0)) + k.eval(ds0.hypot(dt1)) + k.eval(ds1.hypot(dt0)) + k.eval(ds1.hypot(dt1))));
        }
        let mut prev = self.kbar_rule(&self.rules[0], x, y);
        for r in &self.rules[1..] {
            let next = self.kbar_rule(r, x, y);
            if (next - prev).abs() <= 1e-9 * next.abs() {
                return Ok(next);
            }
            prev = next;
        }
        self.kbar_adaptive(x, y)
    }

    /// K̄ at lattice arguments (i h, j h), (k h, l h), memoized on the indices.
    pub fn kbar_grid(&self, idx: [i64; 4], h: f64) -> Result<f64> {
        if let Some(v) = self.memo.lock().unwrap().get(&idx) {
            return Ok(*v);
        }
        let x = QuadrantPoint { s: idx[0] as f64 * h, t: idx[1] as f64 * h };
        let y = QuadrantPoint { s: idx[2] as f64 * h, t: idx[3] as f64 * h };
        let v = self.kbar(x, y)?;
        self.memo.lock().unwrap().insert(idx, v);
        Ok(v)
    }

    /// K̄(x, y) - K̄(x, y★) for x ∈ O and y in the closure of O.
    pub fn kernel_difference(&self, x: QuadrantPoint, y: QuadrantPoint) -> Result<f64> {
        if !x.in_o() || y.s < y.t {
            return Err(Error::Domain(format!("kernel difference needs x ∈ O, y ∈ closure of O; got {x:?}, {y:?}")));
        }
        if y.s == y.t {
            return Ok(0.0);
        }
        Ok(self.kbar(x, y)? - self.kbar(x, star(y))?)
    }

    /// A(x) = ∫_O K̄(x, y★) dy. The y-integral is computed exactly up to |y| = S;
    /// beyond S the far-field envelope ½|S^{2m-1}| ∫_S^∞ k(r) r^{2m-1} dr is added.
    pub fn zero_order_coefficient(&self, x: QuadrantPoint, s_trunc: f64) -> Result<f64> {
        if !(x.s > x.t) {
            return Err(Error::Divergence(format!("A(x) is infinite on the cone, x = ({}, {})", x.s, x.t)));
        }
        if s_trunc <= 2.0 * x.norm() {
            return Err(Error::Domain(format!("truncation S = {s_trunc} too small for |x| = {}", x.norm())));
        }
        let n = 2 * self.m;
        let k = &self.kernel;
        let tail_f = |r: f64| k.eval(r) * r.powi(n as i32 - 1);
        let tail = 0.5
            * sphere_area(n - 1)
            * quad::integrate_semi_infinite(&tail_f, s_trunc, Tol::new(1e-300, 1e-10), "A(x) tail")?;
        if self.m == 1 {
            return Ok(self.zero_order_planar(x, s_trunc)? + tail);
        }
        Ok(self.zero_order_nested(x, s_trunc)? + tail)
    }

    fn zero_order_planar(&self, x: QuadrantPoint, s_trunc: f64) -> Result<f64> {
        let d1 = (x.s - x.t) * FRAC_1_SQRT_2;
        let d2 = (x.s + x.t) * FRAC_1_SQRT_2;
        let r0 = x.norm();
        let k = &self.kernel;
        let f = |rho: f64| k.eval(rho) * rho * angle_in_i(x.s, x.t, rho);
        let tol = Tol::new(1e-300, 1e-11).with_max(4000);
        let mut total = 0.0;
        // square-root onsets at the tangency radii d1 and d2
        let mut pts = vec![d1, d2, r0, 2.0 * r0];
        pts.retain(|p| *p < s_trunc);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        pts.push(s_trunc);
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let g = |u: f64| 2.0 * u * f(a + u * u);
            let ub = (b - a).sqrt();
            let mut br = vec![0.0];
            let mut q = ub * 1e-4;
            while q < ub {
                br.push(q);
                q *= 8.0;
            }
            br.push(ub);
            total += quad::check(quad::adaptive_breaks(&g, &br, tol), "A(x) radial integral")?;
        }
        Ok(total)
    }

    fn zero_order_nested(&self, x: QuadrantPoint, s_trunc: f64) -> Result<f64> {
        let m = self.m;
        let w2 = sphere_area(m - 1).powi(2);
        let e = m as i32 - 1;
        let tol = Tol::new(1e-300, 1e-7).with_max(300);
        let r0 = x.norm();
        let inner = |rho: f64| -> f64 {
            let g = |phi: f64| {
                let (sg, tg) = (rho * phi.cos(), rho * phi.sin());
                let y_star = QuadrantPoint { s: tg, t: sg };
                self.kbar(x, y_star).unwrap_or(f64::NAN) * (sg * tg).powi(e)
            };
            quad::adaptive_breaks(&g, &[0.0, FRAC_PI_4 * 0.9, FRAC_PI_4], tol).value * rho
        };
        let pts = [0.0, 0.5 * r0, 0.9 * r0, r0, 1.1 * r0, 2.0 * r0, s_trunc];
        let v = quad::adaptive_breaks(&inner, &pts, tol);
        quad::check(v, "A(x) nested integral").map(|v| v * w2)
    }
}

/// Length of the set of angles θ for which (s,t) + ρ(cos θ, sin θ) lies in
/// I = {|z₂| > |z₁|}.
pub fn angle_in_i(s: f64, t: f64, rho: f64) -> f64 {
    let mut th: Vec<f64> = Vec::with_capacity(4);
    let q1 = (s - t) / (rho * SQRT_2);
    if q1.abs() <= 1.0 {
        let a = q1.asin();
        th.push(FRAC_PI_4 + a);
        th.push(FRAC_PI_4 + PI - a);
    }
    let q2 = -(s + t) / (rho * SQRT_2);
    if q2.abs() <= 1.0 {
        let a = q2.asin();
        th.push(-FRAC_PI_4 + a);
        th.push(-FRAC_PI_4 + PI - a);
    }
    let inside = |a: f64| {
        let (z1, z2) = (s + rho * a.cos(), t + rho * a.sin());
        z2.abs() > z1.abs()
    };
    if th.is_empty() {
        return if inside(0.0) { 2.0 * PI } else { 0.0 };
    }
    for a in th.iter_mut() {
        *a = a.rem_euclid(2.0 * PI);
    }
    th.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    for i in 0..th.len() {
        let a = th[i];
        let b = if i + 1 < th.len() { th[i + 1] } else { th[0] + 2.0 * PI };
        if b - a > 0.0 && inside(0.5 * (a + b)) {
            total += b - a;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac_cache(m: usize, g: f64) -> AveragedKernelCache {
        AveragedKernelCache::new(m, RadialKernel::fractional(2 * m, g).unwrap()).unwrap()
    }

    #[test]
    fn star_is_an_involution() {
        let p = QuadrantPoint::new(1.0, 0.0).unwrap();
        assert_eq!(star(p), QuadrantPoint { s: 0.0, t: 1.0 });
        assert_eq!(star(star(p)), p);
        let c = QuadrantPoint::new(0.7, 0.7).unwrap();
        assert_eq!(star(c), c);
    }

    #[test]
    fn four_term_average() {
        let c = frac_cache(1, 0.5);
        let k = c.kernel().clone();
        let x = QuadrantPoint { s: 1.0, t: 0.0 };
        let y = QuadrantPoint { s: 0.0, t: 1.0 };
        // all four sign combinations sit at distance √2
        let v = c.kbar(x, y).unwrap();
        assert!((v - k.eval(SQRT_2)).abs() < 1e-15);
        assert!(c.kbar(x, x).is_err());
    }

    #[test]
    fn angle_limits() {
        // far from everything the circle is split evenly
        assert!((angle_in_i(1.0, 0.2, 1e6) - PI).abs() < 1e-5);
        // small circle strictly inside O
        assert_eq!(angle_in_i(2.0, 0.5, 0.3), 0.0);
        // brute force
        let (s, t, r) = (1.3, 0.4, 1.1);
        let n = 200_000;
        let mut cnt = 0;
        for i in 0..n {
            let a = 2.0 * PI * (i as f64 + 0.5) / n as f64;
            let (z1, z2) = (s + r * a.cos(), t + r * a.sin());
            if z2.abs() > z1.abs() {
                cnt += 1;
            }
        }
        assert!((angle_in_i(s, t, r) - 2.0 * PI * cnt as f64 / n as f64).abs() < 1e-4);
    }

    #[test]
    fn m2_uses_quadrature_consistently() {
        let c = frac_cache(2, 0.5);
        let x = QuadrantPoint { s: 1.5, t: 0.4 };
        let y = QuadrantPoint { s: 0.9, t: 0.7 };
        let a = c.kbar(x, y).unwrap();
        let b = c.kbar_adaptive(x, y).unwrap();
        assert!((a / b - 1.0).abs() < 1e-8);
        assert!((c.kbar(y, x).unwrap() / a - 1.0).abs() < 1e-12);
        assert!((c.kbar(star(x), star(y)).unwrap() / a - 1.0).abs() < 1e-12);
    }
}
