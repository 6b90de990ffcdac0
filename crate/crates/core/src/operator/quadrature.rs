//! Quadrature evaluation of L_K w(x) = ∫_O (w(x)-w(y))(K̄(x,y)-K̄(x,y★)) dy + 2w(x)A(x)
//! for a cone-odd function given as a callable on the closed quadrant.

use crate::error::{Error, Result};
use crate::quad::{self, Tol};
use crate::radial_geometry::{star, AveragedKernelCache, QuadrantPoint};
use crate::special::sphere_area;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[derive(Debug, Clone, Copy)]
pub struct ApplyOptions {
    /// Radius of the symmetric near-field disk (capped by the distance to the
    /// region boundary).
    pub delta: f64,
    /// Truncation of the y-integral.
    pub s_trunc: f64,
    pub rel_tol: f64,
}

impl Default for ApplyOptions {
    fn default() -> Self {
        ApplyOptions { delta: 0.25, s_trunc: 60.0, rel_tol: 1e-8 }
    }
}

/// Inward unit normals of the triangle T = {0 < τ < σ}.
const NORMALS: [(f64, f64); 2] = [(FRAC_1_SQRT_2, -FRAC_1_SQRT_2), (0.0, 1.0)];
/// Inward unit normals of the wedge {|τ| < σ}.
const WEDGE: [(f64, f64); 2] = [(FRAC_1_SQRT_2, -FRAC_1_SQRT_2), (FRAC_1_SQRT_2, FRAC_1_SQRT_2)];

/// Angular arcs of the circle |y - x| = ρ inside the region.
fn arcs(x: (f64, f64), rho: f64, normals: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut th = Vec::new();
    for &(nx, ny) in normals {
        let c = -(x.0 * nx + x.1 * ny) / rho;
        if c.abs() < 1.0 {
            let beta = ny.atan2(nx);
            let a = c.acos();
            th.push((beta + a).rem_euclid(2.0 * PI));
            th.push((beta - a).rem_euclid(2.0 * PI));
        }
    }
    let inside = |a: f64| {
        let (y0, y1) = (x.0 + rho * a.cos(), x.1 + rho * a.sin());
        normals.iter().all(|&(nx, ny)| y0 * nx + y1 * ny > 0.0)
    };
    if th.is_empty() {
        return if inside(0.0) { vec![(0.0, 2.0 * PI)] } else { vec![] };
    }
    th.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::new();
    for i in 0..th.len() {
        let a = th[i];
        let b = if i + 1 < th.len() { th[i + 1] } else { th[0] + 2.0 * PI };
        if b > a && inside(0.5 * (a + b)) {
            out.push((a, b));
        }
    }
    out
}

/// L_K w(x) by adaptive quadrature. `w` is evaluated on the closed quadrant
/// (s ≥ 0, t ≥ 0) and must be odd under (s,t) ↦ (t,s).
pub fn apply_odd_fn<W>(cache: &AveragedKernelCache, w: &W, x: QuadrantPoint, opts: ApplyOptions) -> Result<f64>
where
    W: Fn(QuadrantPoint) -> f64,
{
    if !x.in_o() {
        return Err(Error::Domain(format!("evaluation point must lie in O, got {x:?}")));
    }
    let m = cache.m();
    let k = cache.kernel();
    let wx = w(x);
    // m = 1: wedge {|τ| < σ} with the kernel averaged over σ ↦ -σ only, which is
    // singular at y = x alone. m ≥ 2: the triangle T with K̄ and the product-of-spheres
    // measure; a point on τ = 0 uses the even extension across τ = 0 with weight ½.
    let wedge = m == 1 || x.t == 0.0;
    let normals: &[(f64, f64)] = if wedge { &WEDGE } else { &NORMALS };
    let dist_b = normals.iter().map(|&(nx, ny)| x.s * nx + x.t * ny).fold(f64::INFINITY, f64::min);
    if dist_b <= 0.0 {
        return Err(Error::Domain("evaluation point on the region boundary".into()));
    }
    let delta = opts.delta.min(0.5 * dist_b);
    let e = m as i32 - 1;
    let factor = match (m, wedge) {
        (1, _) => 1.0,
        (_, true) => 0.5 * sphere_area(m - 1).powi(2),
        _ => sphere_area(m - 1).powi(2),
    };
    let integrand = |y0: f64, y1: f64| -> f64 {
        let y = QuadrantPoint { s: y0, t: y1.abs() };
        let dw = wx - w(y);
        if dw == 0.0 {
            return 0.0;
        }
        if m == 1 {
            let kk = |a: f64, b: f64| k.eval((x.s - a).hypot(x.t - b));
            return dw * (kk(y0, y1) + kk(-y0, y1) - kk(y1, y0) - kk(y1, -y0));
        }
        let d = cache.kbar(x, y).unwrap_or(f64::NAN) - cache.kbar(x, star(y)).unwrap_or(f64::NAN);
        dw * d * (y.s * y.t).powi(e)
    };
    let tol = Tol::new(1e-13, opts.rel_tol).with_max(400);
    let inner = Tol::new(1e-14, 0.1 * opts.rel_tol).with_max(200);

    // near field: pair y = x ± ρe
    let near_ring = |rho: f64| -> f64 {
        let g = |a: f64| {
            let (c, s) = (rho * a.cos(), rho * a.sin());
            integrand(x.s + c, x.t + s) + integrand(x.s - c, x.t - s)
        };
        rho * quad::adaptive(&g, 0.0, PI, inner).value
    };
    // the paired ring behaves like ρ^{1-2γ} near 0; integrate that part in closed form
    let rho_t = 1e-3 * delta;
    let mut br = vec![rho_t];
    let mut r = 4.0 * rho_t;
    while r < delta {
        br.push(r);
        r *= 4.0;
    }
    br.push(delta);
    let mut near = quad::check(quad::adaptive_breaks(&near_ring, &br, tol), "near-field integral")?;
    let p = 2.0 - 2.0 * k.order();
    near += near_ring(rho_t) * rho_t / p;

    // far field over arcs inside the region
    let far_ring = |rho: f64| -> f64 {
        let mut acc = 0.0;
        // in the wedge, w(σ, |τ|) may have a kink on τ = 0
        let kink = (wedge && rho > x.t).then(|| (-x.t / rho).asin());
        for (a, b) in arcs((x.s, x.t), rho, normals) {
            let g = |th: f64| integrand(x.s + rho * th.cos(), x.t + rho * th.sin());
            let mut pts = vec![a];
            if let Some(k0) = kink {
                for c in [k0, PI - k0, k0 + 2.0 * PI, 3.0 * PI - k0] {
                    if c > a && c < b {
                        pts.push(c);
                    }
                }
            }
            pts.push(b);
            pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
            acc += quad::adaptive_breaks(&g, &pts, inner).value;
        }
        rho * acc
    };
    let mut br = vec![delta];
    let mut r = 2.0 * delta;
    while r < opts.s_trunc {
        br.push(r);
        r *= 2.0;
    }
    for &(nx, ny) in normals.iter().chain(wedge.then_some(&(0.0, 1.0))) {
        let d = x.s * nx + x.t * ny;
        if d > delta {
            br.push(d);
        }
    }
    br.push(x.norm());
    br.push(opts.s_trunc);
    br.retain(|v| *v >= delta && *v <= opts.s_trunc);
    br.sort_by(|a, b| a.partial_cmp(b).unwrap());
    br.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let far = quad::check(quad::adaptive_breaks(&far_ring, &br, tol), "far-field integral")?;

    let zero = if wx != 0.0 { 2.0 * wx * cache.zero_order_coefficient(x, opts.s_trunc.max(10.0 * x.norm()))? } else { 0.0 };
    Ok(factor * (near + far) + zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::RadialKernel;

    #[test]
    fn arcs_cover_expected_angles() {
        // small circle well inside the wedge: full turn
        let a = arcs((3.0, 1.0), 0.5, &NORMALS);
        assert_eq!(arcs((3.0, 0.0), 0.5, &WEDGE).len(), 1);
        assert_eq!(a.len(), 1);
        assert!((a[0].1 - a[0].0 - 2.0 * PI).abs() < 1e-12);
        // huge circle: about a quarter of the turn in the wedge
        let a = arcs((1.0, 0.2), 1e7, &NORMALS);
        let tot: f64 = a.iter().map(|p| p.1 - p.0).sum();
        assert!((tot - PI / 4.0).abs() < 1e-4);
    }

    #[test]
    fn indicator_gives_twice_a() {
        let c = AveragedKernelCache::new(1, RadialKernel::fractional(2, 0.5).unwrap()).unwrap();
        let w = |p: QuadrantPoint| (p.s - p.t).signum();
        let x = QuadrantPoint { s: 1.4, t: 0.6 };
        let v = apply_odd_fn(&c, &w, x, ApplyOptions::default()).unwrap();
        let a = c.zero_order_coefficient(x, 60.0).unwrap();
        assert!((v / (2.0 * a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matches_planar_principal_value() {
        let k = RadialKernel::fractional(2, 0.4).unwrap();
        let c = AveragedKernelCache::new(1, k.clone()).unwrap();
        let f = |s: f64, t: f64| (s * s - t * t) * (-(s * s + t * t)).exp();
        let w = |p: QuadrantPoint| f(p.s, p.t);
        let tol = Tol::new(1e-13, 1e-10).with_max(400);
        for &(s, t) in &[(0.9, 0.3), (1.5, 1.2), (0.4, 0.05)] {
            let fx = f(s, t);
            // the circle passes closest to the origin at this angle
            let th0 = (-t).atan2(-s).rem_euclid(PI);
            let ring = |rho: f64| {
                let g = |a: f64| {
                    let (cx, cy) = (rho * a.cos(), rho * a.sin());
                    2.0 * fx - f((s + cx).abs(), (t + cy).abs()) - f((s - cx).abs(), (t - cy).abs())
                };
                rho * k.eval(rho) * quad::adaptive_breaks(&g, &[0.0, th0, PI], tol).value
            };
            let br = [1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
            let mut oracle = quad::adaptive_breaks(&ring, &br, tol).value;
            // below 1e-4 the ring is c ρ^{1-2γ} to leading order
            oracle += ring(1e-4) * 1e-4 / (2.0 - 0.8);
            // beyond 64 only the constant 2 f(x) survives
            oracle += 2.0 * PI * fx * k.eval(64.0) * 64f64.powi(2) / (2.0 * 0.4);
            let v = apply_odd_fn(&c, &w, QuadrantPoint { s, t }, ApplyOptions::default()).unwrap();
            assert!((v - oracle).abs() < 2e-6 * (1.0 + oracle.abs()), "({s},{t}): {v} vs {oracle}");
        }
    }
}
