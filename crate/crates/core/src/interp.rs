//! Interpolation helpers: natural cubic splines, used in log-log form for
//! kernel tables.

use crate::error::{Error, Result};

/// Natural cubic spline through (x_i, y_i), x strictly increasing.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Domain("spline needs at least two matching samples".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("spline abscissae must be strictly increasing".into()));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the interior second derivatives
            let k = n - 2;
            let mut a = vec![0.0; k];
            let mut b = vec![0.0; k];
            let mut c = vec![0.0; k];
            let mut d = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                a[i - 1] = h0;
                b[i - 1] = 2.0 * (h0 + h1);
                c[i - 1] = h1;
                d[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for i in 1..k {
                let w = a[i] / b[i - 1];
                b[i] -= w * c[i - 1];
                d[i] -= w * d[i - 1];
            }
            let mut sol = vec![0.0; k];
            sol[k - 1] = d[k - 1] / b[k - 1];
            for i in (0..k - 1).rev() {
                sol[i] = (d[i] - c[i] * sol[i + 1]) / b[i];
            }
            m[1..n - 1].copy_from_slice(&sol);
        }
        Ok(CubicSpline { x, y, m })
    }

    pub fn xmin(&self) -> f64 {
        self.x[0]
    }

    pub fn xmax(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn xs(&self) -> &[f64] {
        &self.x
    }

    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    /// Evaluate inside [x_0, x_n]; clamps outside.
    pub fn eval(&self, xv: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.binary_search_by(|p| p.partial_cmp(&xv).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => return self.y[i],
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let t = ((xv - self.x[i]) / h).clamp(0.0, 1.0);
        let a = 1.0 - t;
        a * self.y[i]
            + t * self.y[i + 1]
            + h * h / 6.0 * ((a * a * a - a) * self.m[i] + (t * t * t - t) * self.m[i + 1])
    }
}

/// Positive function tabulated on [x_0, x_n] and interpolated by a cubic spline
/// in (ln x, ln y), extended by power laws fitted on the first and last decade.
#[derive(Debug, Clone)]
pub struct LogLogTable {
    spline: CubicSpline,
    lo_exp: f64,
    hi_exp: f64,
}

impl LogLogTable {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain("log-log table needs positive finite samples".into()));
        }
        let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let dec = std::f64::consts::LN_10;
        let fit = |range: Vec<usize>| -> f64 {
            let xs: Vec<f64> = range.iter().map(|&i| lx[i]).collect();
            let ys: Vec<f64> = range.iter().map(|&i| ly[i]).collect();
            crate::special::linear_fit(&xs, &ys).0
        };
        let n = lx.len();
        let lo: Vec<usize> = (0..n).filter(|&i| lx[i] <= lx[0] + dec).collect();
        let hi: Vec<usize> = (0..n).filter(|&i| lx[i] >= lx[n - 1] - dec).collect();
        let lo = if lo.len() < 2 { vec![0, 1] } else { lo };
        let hi = if hi.len() < 2 { vec![n - 2, n - 1] } else { hi };
        let lo_exp = fit(lo);
        let hi_exp = fit(hi);
        Ok(LogLogTable { spline: CubicSpline::new(lx, ly)?, lo_exp, hi_exp })
    }

    pub fn xmin(&self) -> f64 {
        self.spline.xmin().exp()
    }

    pub fn xmax(&self) -> f64 {
        self.spline.xmax().exp()
    }

    /// Power-law exponents used below x_0 and above x_n.
    pub fn tail_exponents(&self) -> (f64, f64) {
        (self.lo_exp, self.hi_exp)
    }

    /// Value at the upper end of the table.
    pub fn y_max(&self) -> f64 {
        self.spline.ys().last().unwrap().exp()
    }

    pub fn y_min(&self) -> f64 {
        self.spline.ys()[0].exp()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let lx = x.ln();
        if lx < self.spline.xmin() {
            (self.spline.ys()[0] + self.lo_exp * (lx - self.spline.xmin())).exp()
        } else if lx > self.spline.xmax() {
            (self.spline.ys().last().unwrap() + self.hi_exp * (lx - self.spline.xmax())).exp()
        } else {
            self.spline.eval(lx).exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_lines_and_cubics_nearly() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let s = CubicSpline::new(x, y).unwrap();
        assert!((s.eval(3.3) - 5.6).abs() < 1e-13);
        let x: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = CubicSpline::new(x, y).unwrap();
        assert!((s.eval(4.321) - 4.321f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn loglog_power_is_exact() {
        let x = crate::special::logspace(1e-2, 1e2, 33);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-1.7)).collect();
        let t = LogLogTable::new(&x, &y).unwrap();
        for v in [1e-4, 0.37, 5.0, 1e5] {
            assert!((t.eval(v) / (3.0 * v.powf(-1.7)) - 1.0).abs() < 1e-12);
        }
    }
}
