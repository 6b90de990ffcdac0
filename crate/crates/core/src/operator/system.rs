//! Dense Dirichlet systems `M u = rhs + forcing` and their factorizations.

use crate::error::{Error, Result};
use faer::prelude::SpSolver;
use faer::{Col, Mat, Side};

/// Discretized `L` restricted to a set of unknowns. Exterior data enter
/// through `forcing`: `(L w)_i = (M w)_i - forcing_i`. `diag(weights)·M` is
/// symmetric, so the shifted systems are solved by Cholesky.
#[derive(Clone)]
pub struct DirichletSystem {
    pub matrix: Mat<f64>,
    pub forcing: Vec<f64>,
    pub weights: Vec<f64>,
    /// Forcing produced by exterior data equal to the constant 1 (when known).
    pub unit_forcing: Option<Vec<f64>>,
    /// Grid indices of the unknowns.
    pub nodes: Vec<usize>,
}

impl std::fmt::Debug for DirichletSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletSystem").field("n", &self.len()).finish()
    }
}

impl DirichletSystem {
    pub fn len(&self) -> usize {
        self.forcing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forcing.is_empty()
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.matrix.read(i, i)
    }

    /// M v.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for (j, vj) in v.iter().enumerate() {
                    acc += self.matrix.read(i, j) * vj;
                }
                acc
            })
            .collect()
    }

    /// L applied to the function equal to `v` on the unknowns and to the
    /// exterior data elsewhere.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matvec(v).iter().zip(&self.forcing).map(|(a, g)| a - g).collect()
    }

    /// Add `b` to every diagonal entry.
    pub fn shifted(&self, b: f64) -> DirichletSystem {
        let mut s = self.clone();
        for i in 0..s.len() {
            s.matrix.write(i, i, s.matrix.read(i, i) + b);
        }
        s
    }

    /// Add the potential c_i to the diagonal (M + diag c).
    pub fn with_potential(&self, c: &[f64]) -> DirichletSystem {
        let mut s = self.clone();
        for (i, ci) in c.iter().enumerate() {
            s.matrix.write(i, i, s.matrix.read(i, i) + ci);
        }
        s
    }

    /// Replace the exterior contribution.
    pub fn with_forcing(&self, forcing: Vec<f64>) -> DirichletSystem {
        let mut s = self.clone();
        s.forcing = forcing;
        s
    }

    /// Cholesky factorization of diag(w)(M + shift).
    pub fn factor(&self, shift: f64) -> Result<SymFactor> {
        let n = self.len();
        let mut bad = None;
        for i in 0..n {
            if !(self.matrix.read(i, i) + shift > 0.0) {
                bad = Some(i);
                break;
            }
        }
        if let Some(i) = bad {
            return Err(Error::LinearAlgebra(format!(
                "non-positive diagonal at unknown {i}; grid too coarse for this order"
            )));
        }
        let a = Mat::<f64>::from_fn(n, n, |i, j| {
            let v = 0.5 * (self.weights[i] * self.matrix.read(i, j) + self.weights[j] * self.matrix.read(j, i));
            if i == j {
                v + self.weights[i] * shift
            } else {
                v
            }
        });
        let llt = a
            .cholesky(Side::Lower)
            .map_err(|_| Error::LinearAlgebra("operator matrix is not positive definite".into()))?;
        Ok(SymFactor { llt, weights: self.weights.clone() })
    }

    /// Solve (M + shift) u = rhs + forcing.
    pub fn solve(&self, rhs: &[f64], shift: f64) -> Result<Vec<f64>> {
        let f = self.factor(shift)?;
        let r: Vec<f64> = rhs.iter().zip(&self.forcing).map(|(a, b)| a + b).collect();
        Ok(f.solve(&r))
    }

    /// Symmetrized matrix diag(√w) M diag(1/√w) as a dense matrix.
    pub fn symmetrized(&self) -> Mat<f64> {
        let n = self.len();
        let sq: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        Mat::<f64>::from_fn(n, n, |i, j| {
            0.5 * (sq[i] / sq[j] * self.matrix.read(i, j) + sq[j] / sq[i] * self.matrix.read(j, i))
        })
    }

    /// Infinity-norm condition estimate from the extreme eigenvalues of the
    /// symmetrized matrix (dense; use only for modest sizes).
    pub fn condition_estimate(&self, shift: f64) -> f64 {
        let ev = self.symmetrized().selfadjoint_eigenvalues(Side::Lower);
        let lo = ev.first().copied().unwrap_or(1.0) + shift;
        let hi = ev.last().copied().unwrap_or(1.0) + shift;
        (hi / lo).abs()
    }
}

/// Factorization of a weighted-symmetric matrix.
pub struct SymFactor {
    llt: faer::linalg::solvers::Cholesky<f64>,
    weights: Vec<f64>,
}

impl SymFactor {
    /// Solve (M + shift) u = r.
    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        let b = Col::<f64>::from_fn(r.len(), |i| self.weights[i] * r[i]);
        let x = self.llt.solve(&b);
        (0..r.len()).map(|i| x.read(i)).collect()
    }
}

/// General dense LU solve.
pub fn lu_solve(a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let lu = a.partial_piv_lu();
    let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
    let x = lu.solve(&rhs);
    let out: Vec<f64> = (0..b.len()).map(|i| x.read(i)).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearAlgebra("singular matrix in LU solve".into()));
    }
    Ok(out)
}

/// LU factorization reused across right-hand sides.
pub struct LuFactor {
    lu: faer::linalg::solvers::PartialPivLu<f64>,
}

impl LuFactor {
    pub fn new(a: &Mat<f64>) -> Self {
        LuFactor { lu: a.partial_piv_lu() }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x.read(i)).collect()
    }
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
