//! One-dimensional operator L_{K₁} on a uniform grid of [-L, L] with
//! prescribed tails beyond ±L.

use super::system::DirichletSystem;
use crate::error::{Error, Result};
use crate::kernels::Kernel1D;
use rayon::prelude::*;
use std::io::Write;

/// Values beyond ±L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailRule {
    /// v ≡ c on both sides.
    Constant(f64),
    /// v(y) = sign(y)(limit - coef |y|^{-exponent}).
    Odd { limit: f64, coef: f64, exponent: f64 },
}

impl TailRule {
    pub fn value(&self, y: f64) -> f64 {
        match *self {
            TailRule::Constant(c) => c,
            TailRule::Odd { limit, coef, exponent } => y.signum() * (limit - coef * y.abs().powf(-exponent)),
        }
    }
}

/// Samples on x_i = -L + i h, i = 0..=N, with a tail rule.
#[derive(Debug, Clone)]
pub struct Profile1D {
    pub h: f64,
    pub half_length: f64,
    pub values: Vec<f64>,
    pub tail: TailRule,
    pub odd: bool,
}

impl Profile1D {
    /// Grid with N = 2L/h rounded to an even integer; L is adjusted to N h / 2.
    pub fn grid(half_length: f64, h: f64) -> Result<(f64, usize)> {
        if !(h > 0.0 && half_length > h) {
            return Err(Error::Domain(format!("invalid 1-D grid (L = {half_length}, h = {h})")));
        }
        let half = (half_length / h).round() as usize;
        Ok((half as f64 * h, 2 * half + 1))
    }

    pub fn from_fn<F: Fn(f64) -> f64>(half_length: f64, h: f64, f: F, tail: TailRule, odd: bool) -> Result<Self> {
        let (l, n) = Self::grid(half_length, h)?;
        let values = (0..n).map(|i| f(-l + i as f64 * h)).collect();
        let mut p = Profile1D { h, half_length: l, values, tail, odd };
        if odd {
            p.symmetrize();
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.h
    }

    pub fn center(&self) -> usize {
        self.values.len() / 2
    }

    /// v ← (v(x) - v(-x))/2.
    pub fn symmetrize(&mut self) {
        let n = self.values.len();
        for i in 0..n / 2 {
            let a = 0.5 * (self.values[n - 1 - i] - self.values[i]);
            self.values[n - 1 - i] = a;
            self.values[i] = -a;
        }
        self.values[n / 2] = 0.0;
    }

    /// Cubic (Catmull–Rom) interpolation inside, tail rule outside.
    pub fn eval(&self, x: f64) -> f64 {
        let l = self.half_length;
        if x.abs() > l {
            return self.tail.value(x);
        }
        let n = self.values.len();
        let u = (x + l) / self.h;
        let i = (u.floor() as usize).min(n - 2);
        let t = u - i as f64;
        let get = |j: isize| -> f64 {
            if j < 0 || j as usize >= n {
                self.tail.value(-l + j as f64 * self.h)
            } else {
                self.values[j as usize]
            }
        };
        let i = i as isize;
        let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
        let t2 = t * t;
        let t3 = t2 * t;
        0.5 * (2.0 * p1 + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.8},{:.12e}", self.x(i), v)?;
        }
        Ok(())
    }
}

/// Weights of a 1-D lattice operator together with the continuous kernel
/// used for the tails.
#[derive(Clone)]
pub struct LineOperator {
    h: f64,
    half_length: f64,
    n: usize,
    /// w[k] couples nodes k apart (near-field correction included in w[1]).
    w: Vec<f64>,
    kernel: Kernel1D,
    tail_l: Vec<f64>,
    tail_r: Vec<f64>,
}

impl std::fmt::Debug for LineOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LineOperator").field("h", &self.h).field("n", &self.n).finish()
    }
}

impl LineOperator {
    /// Moment-matched cell weights ∫_{cell k} τ² k₁ / (k h)², so quadratics are
    /// integrated exactly, plus the near-field moment of k₁.
    pub fn new(kernel: &Kernel1D, half_length: f64, h: f64) -> Result<Self> {
        let (l, n) = Profile1D::grid(half_length, h)?;
        let mut w: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|k| {
                if k == 0 {
                    return 0.0;
                }
                let kh = k as f64 * h;
                kernel.moment2(kh - 0.5 * h, kh + 0.5 * h) / (kh * kh)
            })
            .collect();
        let c0 = 2.0 * kernel.second_moment(0.5 * h);
        w[1] += c0 / (2.0 * h * h);
        Self::finish(kernel, l, h, n, w)
    }

    /// Given lattice weights w[k] for k = 0..n-1 (w[0] ignored).
    pub fn from_weights(kernel: &Kernel1D, half_length: f64, h: f64, weights: Vec<f64>) -> Result<Self> {
        let (l, n) = Profile1D::grid(half_length, h)?;
        if weights.len() < n {
            return Err(Error::Domain(format!("need {n} weights, got {}", weights.len())));
        }
        let mut w = weights;
        w.truncate(n);
        w[0] = 0.0;
        Self::finish(kernel, l, h, n, w)
    }

    fn finish(kernel: &Kernel1D, l: f64, h: f64, n: usize, w: Vec<f64>) -> Result<Self> {
        let edge = l + 0.5 * h;
        let tails: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = -l + i as f64 * h;
                (kernel.tail_mass(x + edge), kernel.tail_mass(edge - x))
            })
            .collect();
        Ok(LineOperator {
            h,
            half_length: l,
            n,
            w,
            kernel: kernel.clone(),
            tail_l: tails.iter().map(|t| t.0).collect(),
            tail_r: tails.iter().map(|t| t.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn kernel(&self) -> &Kernel1D {
        &self.kernel
    }

    fn x(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.h
    }

    /// Contribution ∫_{|y|>L+h/2} v(y) k₁(x_i - y) dy of the tail rule.
    pub fn tail_integral(&self, tail: &TailRule, i: usize) -> f64 {
        match *tail {
            TailRule::Constant(c) => c * (self.tail_l[i] + self.tail_r[i]),
            TailRule::Odd { limit, coef, exponent } => {
                let x = self.x(i);
                let edge = self.half_length + 0.5 * self.h;
                let mut v = limit * (self.tail_r[i] - self.tail_l[i]);
                if coef != 0.0 {
                    let r = self.kernel.weighted_tail(edge - x, x, exponent);
                    let l = self.kernel.weighted_tail(edge + x, -x, exponent);
                    v -= coef * (r - l);
                }
                v
            }
        }
    }

    /// L v at node i.
    pub fn apply_at(&self, v: &Profile1D, i: usize) -> f64 {
        let vi = v.values[i];
        let mut acc = 0.0;
        for (j, vj) in v.values.iter().enumerate() {
            if j != i {
                acc += (vi - vj) * self.w[i.abs_diff(j)];
            }
        }
        acc + vi * (self.tail_l[i] + self.tail_r[i]) - self.tail_integral(&v.tail, i)
    }

    pub fn apply(&self, v: &Profile1D) -> Vec<f64> {
        (0..self.n).into_par_iter().map(|i| self.apply_at(v, i)).collect()
    }

    /// Dense system on all nodes with the given tail as data.
    pub fn system(&self, tail: &TailRule) -> DirichletSystem {
        let n = self.n;
        let mut m = faer::Mat::<f64>::zeros(n, n);
        for i in 0..n {
            let mut d = self.tail_l[i] + self.tail_r[i];
            for j in 0..n {
                if j != i {
                    let w = self.w[i.abs_diff(j)];
                    m.write(i, j, -w);
                    d += w;
                }
            }
            m.write(i, i, d);
        }
        let forcing: Vec<f64> = (0..n).into_par_iter().map(|i| self.tail_integral(tail, i)).collect();
        let unit = (0..n).map(|i| self.tail_l[i] + self.tail_r[i]).collect();
        DirichletSystem { matrix: m, forcing, weights: vec![1.0; n], unit_forcing: Some(unit), nodes: (0..n).collect() }
    }
}

/// L_{K₁} v at node i (builds the operator; prefer [`LineOperator`] for repeated use).
pub fn apply_1d(k1: &Kernel1D, v: &Profile1D, i: usize) -> Result<f64> {
    let op = LineOperator::new(k1, v.half_length, v.h)?;
    Ok(op.apply_at(v, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constants_are_annihilated() {
        let k = Kernel1D::fractional(0.4).unwrap();
        let op = LineOperator::new(&k, 5.0, 0.1).unwrap();
        let v = Profile1D::from_fn(5.0, 0.1, |_| 0.7, TailRule::Constant(0.7), false).unwrap();
        let lv = op.apply(&v);
        assert!(lv.iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn arctan_substitution() {
        let k = Kernel1D::fractional(0.5).unwrap();
        let (l, h) = (20.0, 0.02);
        let v = Profile1D::from_fn(l, h, |x| 2.0 / PI * x.atan(), TailRule::Odd { limit: 1.0, coef: 2.0 / PI, exponent: 1.0 }, true)
            .unwrap();
        let op = LineOperator::new(&k, l, h).unwrap();
        let mut worst = 0.0f64;
        for i in 0..v.len() {
            let x = v.x(i);
            if x.abs() <= 5.0 {
                let r = op.apply_at(&v, i) - (PI * v.values[i]).sin() / PI;
                worst = worst.max(r.abs());
            }
        }
        assert!(worst < 1e-3, "residual {worst}");
        // oddness of the result
        let c = v.center();
        assert!((op.apply_at(&v, c + 37) + op.apply_at(&v, c - 37)).abs() < 1e-12);
    }
}
