//! Allen–Cahn type nonlinearities: odd, vanishing at ±1, strictly concave on (0,1).

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    f: ScalarFn,
    df: ScalarFn,
    d2f: ScalarFn,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonlinearity({})", self.name)
    }
}

impl Nonlinearity {
    pub fn custom(name: &str, f: ScalarFn, df: ScalarFn, d2f: ScalarFn) -> Self {
        Nonlinearity { name: name.into(), f, df, d2f }
    }

    /// u - u³.
    pub fn allen_cahn() -> Self {
        Self::custom("allen-cahn", Arc::new(|u| u - u * u * u), Arc::new(|u| 1.0 - 3.0 * u * u), Arc::new(|u| -6.0 * u))
    }

    /// sin(πu)/π.
    pub fn peierls() -> Self {
        Self::custom(
            "peierls",
            Arc::new(|u| (PI * u).sin() / PI),
            Arc::new(|u| (PI * u).cos()),
            Arc::new(|u| -PI * (PI * u).sin()),
        )
    }

    /// Σ a_k u^k from a coefficient table (a_0 first).
    pub fn polynomial(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("polynomial nonlinearity needs finite coefficients".into()));
        }
        let a: Arc<[f64]> = coeffs.into();
        let horner = |c: &[f64], u: f64| c.iter().rev().fold(0.0, |acc, x| acc * u + x);
        let d1: Arc<[f64]> = a.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
        let d2: Arc<[f64]> = d1.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
        let name = format!(
            "poly[{}]",
            coeffs.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(",")
        );
        let (a0, a1, a2) = (a.clone(), d1.clone(), d2.clone());
        Ok(Self::custom(
            &name,
            Arc::new(move |u| horner(&a0, u)),
            Arc::new(move |u| horner(&a1, u)),
            Arc::new(move |u| horner(&a2, u)),
        ))
    }

    /// Builtins by name: `allen-cahn`, `peierls`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "allen-cahn" => Ok(Self::allen_cahn()),
            "peierls" => Ok(Self::peierls()),
            other => Err(Error::Config(format!("unknown nonlinearity `{other}`"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn deriv(&self, u: f64) -> f64 {
        (self.df)(u)
    }

    pub fn deriv2(&self, u: f64) -> f64 {
        (self.d2f)(u)
    }

    /// b = max(0, -min f′ on [-1, 1]) from a 10³-point scan.
    pub fn monotone_shift(&self) -> f64 {
        let mut lo = f64::INFINITY;
        for i in 0..=1000 {
            lo = lo.min(self.deriv(-1.0 + 2.0 * i as f64 / 1000.0));
        }
        (-lo).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct FlagCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Worst sampled value of the quantity being tested.
    pub worst: f64,
    pub at: f64,
}

#[derive(Debug, Clone)]
pub struct NonlinearityReport {
    pub checks: Vec<FlagCheck>,
}

impl NonlinearityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn flag(&self, name: &str) -> Option<&FlagCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Samples the structural hypotheses on f.
pub fn validate_nonlinearity(f: &Nonlinearity) -> Result<NonlinearityReport> {
    let samples: Vec<f64> = (0..64).map(|i| -1.5 + 3.0 * (i as f64 + 0.5) / 64.0).collect();
    for &u in samples.iter().chain([-1.0, 0.0, 1.0].iter()) {
        if !(f.eval(u).is_finite() && f.deriv(u).is_finite() && f.deriv2(u).is_finite()) {
            return Err(Error::Hypothesis(format!("{} is not finite at u = {u}", f.name())));
        }
    }
    let mut checks = Vec::new();

    let (mut worst, mut at) = (0.0f64, 0.0);
    for &u in &samples {
        let e = (f.eval(-u) + f.eval(u)).abs();
        if e > worst {
            worst = e;
            at = u;
        }
    }
    checks.push(FlagCheck { name: "odd", pass: worst <= 1e-12, worst, at });

    let (e1, e2) = (f.eval(1.0).abs(), f.eval(-1.0).abs());
    let (worst, at) = if e1 >= e2 { (e1, 1.0) } else { (e2, -1.0) };
    checks.push(FlagCheck { name: "zeros", pass: worst <= 1e-12, worst, at });

    let (mut worst, mut at) = (f64::NEG_INFINITY, 0.0);
    for i in 0..64 {
        let u = (i as f64 + 0.5) / 64.0;
        let v = f.deriv2(u);
        if v > worst {
            worst = v;
            at = u;
        }
    }
    checks.push(FlagCheck { name: "concave", pass: worst < 0.0, worst, at });

    let d0 = f.deriv(0.0);
    checks.push(FlagCheck { name: "f'(0)>0", pass: d0 > 0.0, worst: d0, at: 0.0 });
    let (a, b) = (f.deriv(1.0), f.deriv(-1.0));
    let (worst, at) = if a >= b { (a, 1.0) } else { (b, -1.0) };
    checks.push(FlagCheck { name: "f'(±1)<0", pass: worst < 0.0, worst, at });
    Ok(NonlinearityReport { checks })
}
