//! Quadrature rules: Gauss–Legendre, Gauss–Jacobi (Golub–Welsch) and
//! adaptive Gauss–Kronrod integration on finite and semi-infinite ranges.

use crate::error::{Error, Result};
use crate::special::gamma_fn;
use faer::{Mat, Side};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600077226325,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Result of a quadrature together with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Stopping rule for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tol { abs, rel, max_intervals: 2000 }
    }

    pub fn with_max(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }
}

impl Default for Tol {
    fn default() -> Self {
        Tol::new(1e-300, 1e-10)
    }
}

/// One 21-point Kronrod panel. Returns (kronrod value, error estimate).
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[10];
    let mut rg = 0.0;
    let mut abs_k = rk.abs();
    for j in 0..10 {
        let dx = hw * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        rk += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    let val = rk * hw;
    let mut err = ((rk - rg) * hw).abs();
    // QUADPACK-style scaling of the raw difference
    let resasc = abs_k * hw.abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (1.0f64).min((200.0 * err / resasc).powf(1.5));
    }
    let round = 50.0 * f64::EPSILON * abs_k * hw.abs();
    (val, err.max(round))
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Adaptive Gauss–Kronrod over the breakpoints `pts` (sorted, at least two).
/// Never fails; the `converged` flag reports whether the tolerance was met.
pub fn adaptive_breaks<F: Fn(f64) -> f64>(f: &F, pts: &[f64], tol: Tol) -> Estimate {
    let mut heap = BinaryHeap::new();
    let mut done_val = 0.0;
    let mut done_err = 0.0;
    for w in pts.windows(2) {
        if w[1] > w[0] {
            let (val, err) = gk21(f, w[0], w[1]);
            heap.push(Panel { a: w[0], b: w[1], val, err });
        }
    }
    let mut count = heap.len();
    loop {
        let (tv, te) = heap
            .iter()
            .fold((done_val, done_err), |(v, e), p| (v + p.val, e + p.err));
        let target = tol.abs.max(tol.rel * tv.abs());
        if te <= target || heap.is_empty() {
            return Estimate { value: tv, error: te, converged: true };
        }
        if count >= tol.max_intervals {
            return Estimate { value: tv, error: te, converged: false };
        }
        let p = heap.pop().unwrap();
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) || (p.b - p.a) < 1e-14 * (p.a.abs() + p.b.abs()) {
            done_val += p.val;
            done_err += p.err;
            continue;
        }
        let (v1, e1) = gk21(f, p.a, mid);
        let (v2, e2) = gk21(f, mid, p.b);
        heap.push(Panel { a: p.a, b: mid, val: v1, err: e1 });
        heap.push(Panel { a: mid, b: p.b, val: v2, err: e2 });
        count += 1;
    }
}

/// Adaptive integration on [a, b].
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tol) -> Estimate {
    adaptive_breaks(f, &[a, b], tol)
}

/// Adaptive integration that turns non-convergence into an error.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tol, context: &str) -> Result<f64> {
    let e = adaptive(f, a, b, tol);
    check(e, context)
}

pub fn check(e: Estimate, context: &str) -> Result<f64> {
    if e.converged && e.value.is_finite() {
        Ok(e.value)
    } else {
        Err(Error::Quadrature {
            context: context.to_string(),
            rel_err: e.error / e.value.abs().max(1e-300),
        })
    }
}

/// ∫_a^∞ f. The range beyond `b0` is mapped logarithmically and then
/// compactified, which suits integrands with power-law tails.
pub fn adaptive_semi_infinite<F: Fn(f64) -> f64>(f: &F, a: f64, tol: Tol) -> Estimate {
    let b0 = if a > 0.0 { 2.0 * a } else { 1.0 };
    let head = adaptive(f, a, b0, tol);
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let v = t / (1.0 - t);
        let x = b0 * v.exp();
        if !x.is_finite() || x > 1e250 {
            return 0.0;
        }
        let y = f(x) * x / ((1.0 - t) * (1.0 - t));
        if y.is_finite() {
            y
        } else {
            0.0
        }
    };
    let tail = adaptive_breaks(&g, &[0.0, 0.5, 0.8, 0.95, 1.0], tol);
    Estimate {
        value: head.value + tail.value,
        error: head.error + tail.error,
        converged: head.converged && tail.converged,
    }
}

pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: &F, a: f64, tol: Tol, context: &str) -> Result<f64> {
    check(adaptive_semi_infinite(f, a, tol), context)
}

/// Nodes and weights of an n-point quadrature rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Apply the rule mapped affinely from [-1,1] to [a,b].
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let hw = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + hw * x))
            .sum::<f64>()
            * hw
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss–Legendre rule on [-1,1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = nf * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// Gauss–Jacobi rule on [-1,1] for the weight (1-x)^α (1+x)^β, α, β > -1,
/// computed from the Jacobi matrix (Golub–Welsch).
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<Rule> {
    if alpha <= -1.0 || beta <= -1.0 || n == 0 {
        return Err(Error::Domain(format!("Gauss-Jacobi needs α, β > -1 and n ≥ 1, got ({alpha}, {beta}, {n})")));
    }
    let ab = alpha + beta;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for (k, d) in diag.iter_mut().enumerate() {
        let kf = k as f64;
        let den = (2.0 * kf + ab) * (2.0 * kf + ab + 2.0);
        *d = if den.abs() < 1e-300 { (beta - alpha) / (ab + 2.0) } else { (beta * beta - alpha * alpha) / den };
    }
    for (k0, o) in off.iter_mut().enumerate() {
        let k = (k0 + 1) as f64;
        let b2 = if k0 == 0 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * k * (k + alpha) * (k + beta) * (k + ab)
                / ((2.0 * k + ab).powi(2) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0))
        };
        *o = b2.sqrt();
    }
    let jm = Mat::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i == j + 1 {
            off[j]
        } else if j == i + 1 {
            off[i]
        } else {
            0.0
        }
    });
    let evd = jm.selfadjoint_eigendecomposition(Side::Lower);
    let mu0 = 2f64.powf(ab + 1.0) * gamma_fn(alpha + 1.0) * gamma_fn(beta + 1.0) / gamma_fn(ab + 2.0);
    let s = evd.s().column_vector();
    let u = evd.u();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = u.read(0, i);
            (s.read(i), mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Composite Gauss–Legendre over the given breakpoints.
pub fn composite<F: Fn(f64) -> f64>(rule: &Rule, f: &F, pts: &[f64]) -> f64 {
    pts.windows(2).map(|w| rule.integrate(f, w[0], w[1])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_is_exact_for_degree_31() {
        let f = |x: f64| x.powi(30) + x.powi(31);
        let (v, _) = gk21(&f, -1.0, 1.0);
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
        let s: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((s - 2.0).abs() < 1e-14);
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn legendre_exactness() {
        let r = gauss_legendre(12);
        let v = r.integrate(|x| x.powi(22), -1.0, 1.0);
        assert!((v - 2.0 / 23.0).abs() < 1e-14);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn jacobi_reduces_to_legendre_and_chebyshev() {
        let j = gauss_jacobi(10, 0.0, 0.0).unwrap();
        let l = gauss_legendre(10);
        for i in 0..10 {
            assert!((j.nodes[i] - l.nodes[i]).abs() < 1e-13);
            assert!((j.weights[i] - l.weights[i]).abs() < 1e-13);
        }
        let c = gauss_jacobi(8, -0.5, -0.5).unwrap();
        for (i, x) in c.nodes.iter().enumerate() {
            let exact = -((2.0 * i as f64 + 1.0) * std::f64::consts::PI / 16.0).cos();
            assert!((x - exact).abs() < 1e-13);
            assert!((c.weights[i] - std::f64::consts::PI / 8.0).abs() < 1e-13);
        }
    }

    #[test]
    fn jacobi_moment() {
        // ∫ x² (1-x²)^{1/2} dx = π/8
        let r = gauss_jacobi(6, 0.5, 0.5).unwrap();
        let v: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x * x).sum();
        assert!((v - std::f64::consts::PI / 8.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_singular_endpoint() {
        let f = |x: f64| x.powf(-0.5);
        let e = adaptive(&f, 0.0, 1.0, Tol::new(1e-14, 1e-12));
        assert!(e.converged);
        assert!((e.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite_power_tail() {
        let f = |x: f64| x.powf(-1.5);
        let v = integrate_semi_infinite(&f, 2.0, Tol::new(1e-15, 1e-12), "t").unwrap();
        assert!((v - 2.0 / 2f64.sqrt()).abs() < 1e-10);
        let g = |x: f64| (-x).exp();
        let v = integrate_semi_infinite(&g, -1.0, Tol::new(1e-15, 1e-12), "t").unwrap();
        assert!((v - 1f64.exp()).abs() < 1e-10);
    }
}
