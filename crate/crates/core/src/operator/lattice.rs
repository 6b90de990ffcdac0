//! Lattice discretization of L_K on functions of (|x'|, |x''|) that are odd
//! with respect to the Simons cone, for m = 1 (ambient dimension 2).
//!
//! Unknowns live on lattice points (a h, b h) with a > b ≥ 0. A cell weight
//! W(p) ≈ ∫_{cell p} K is attached to every lattice offset p ≠ 0, and the
//! singular cell contributes -¼ C₀ Δ_h w with C₀ = ∫_{cell 0} |z|² K. Beyond the
//! data disk the exterior rule is integrated by polar quadrature.

use super::system::DirichletSystem;
use crate::error::{Error, Result};
use crate::kernels::RadialKernel;
use crate::quad::{self, gauss_legendre, Rule, Tol};
use crate::radial_geometry::QuadrantPoint;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;
use std::io::Write;
use std::sync::{Arc, Mutex};

/// Lattice nodes (a h, b h), a > b ≥ 0, inside the data disk of radius
/// `s_max + band`. Nodes are sorted by radius so every ball is a prefix.
#[derive(Debug, Clone)]
pub struct TriangularGrid {
    h: f64,
    m: usize,
    s_max: f64,
    s_lat: f64,
    nrad: i32,
    nodes: Vec<[i32; 2]>,
    index: Vec<i32>,
    n_solver: usize,
    disk: Vec<[i32; 2]>,
}

impl TriangularGrid {
    pub fn new(m: usize, h: f64, s_max: f64, band: f64) -> Result<Self> {
        if !(h > 0.0 && s_max > h && band >= 0.0) {
            return Err(Error::Domain(format!("invalid grid (h = {h}, S_max = {s_max}, band = {band})")));
        }
        let s_lat = s_max + band;
        let nrad = (s_lat / h + 1e-9).floor() as i32;
        let r2max = (s_lat / h + 1e-9).powi(2);
        let mut nodes = Vec::new();
        let mut disk = Vec::new();
        for a in -nrad..=nrad {
            for b in -nrad..=nrad {
                let r2 = (a * a + b * b) as f64;
                if r2 <= r2max {
                    disk.push([a, b]);
                    if a > b && b >= 0 {
                        nodes.push([a, b]);
                    }
                }
            }
        }
        nodes.sort_by_key(|p| (p[0] * p[0] + p[1] * p[1], p[0]));
        let w = (nrad + 1) as usize;
        let mut index = vec![-1i32; w * w];
        for (i, p) in nodes.iter().enumerate() {
            index[p[0] as usize * w + p[1] as usize] = i as i32;
        }
        let smax2 = (s_max / h + 1e-9).powi(2);
        let n_solver = nodes.iter().take_while(|p| ((p[0] * p[0] + p[1] * p[1]) as f64) <= smax2).count();
        Ok(TriangularGrid { h, m, s_max, s_lat, nrad, nodes, index, n_solver, disk })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    /// Radius of the lattice data disk.
    pub fn s_lat(&self) -> f64 {
        self.s_lat
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of nodes with |x| ≤ S_max (a prefix of the node list).
    pub fn solver_len(&self) -> usize {
        self.n_solver
    }

    pub fn lattice_index(&self, i: usize) -> [i32; 2] {
        self.nodes[i]
    }

    pub fn point(&self, i: usize) -> QuadrantPoint {
        let p = self.nodes[i];
        QuadrantPoint { s: p[0] as f64 * self.h, t: p[1] as f64 * self.h }
    }

    pub fn radius(&self, i: usize) -> f64 {
        let p = self.nodes[i];
        self.h * ((p[0] * p[0] + p[1] * p[1]) as f64).sqrt()
    }

    /// Node id of lattice point (a, b) with a > b ≥ 0.
    pub fn node_id(&self, a: i32, b: i32) -> Option<usize> {
        if a <= b || b < 0 || a > self.nrad {
            return None;
        }
        let w = (self.nrad + 1) as usize;
        let v = self.index[a as usize * w + b as usize];
        (v >= 0).then_some(v as usize)
    }

    /// Number of lattice points of O in the orbit of node i under sign changes.
    pub fn orbit_size(&self, i: usize) -> f64 {
        if self.nodes[i][1] == 0 {
            2.0
        } else {
            4.0
        }
    }

    pub fn dist_to_cone(&self, i: usize) -> f64 {
        let p = self.nodes[i];
        (p[0] - p[1]) as f64 * self.h * FRAC_1_SQRT_2
    }

    /// Nodes closer than h to the cone.
    pub fn is_boundary_layer(&self, i: usize) -> bool {
        self.dist_to_cone(i) < self.h - 1e-12
    }

    /// Nodes with |x| < R, as a prefix length.
    pub fn ball_len(&self, radius: f64) -> usize {
        let r2 = (radius / self.h - 1e-9).powi(2);
        self.nodes.iter().take_while(|p| ((p[0] * p[0] + p[1] * p[1]) as f64) < r2).count()
    }

    /// All lattice points of the data disk (both signs).
    pub fn disk(&self) -> &[[i32; 2]] {
        &self.disk
    }

    /// Radius of the circle with the same area as the data disk.
    pub fn equivalent_radius(&self) -> f64 {
        self.h * (self.disk.len() as f64 / std::f64::consts::PI).sqrt()
    }
}

pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PlanarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Values prescribed outside the lattice disk (and used as Dirichlet data).
#[derive(Clone)]
pub enum ExteriorRule {
    Zero,
    /// χ_O - χ_I.
    Sign,
    /// u₀((s-t)/√2) for an odd profile u₀.
    Profile { name: String, f: ProfileFn },
    /// Arbitrary values on O; extended oddly.
    Custom { name: String, f: PlanarFn },
}

impl fmt::Debug for ExteriorRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

impl ExteriorRule {
    /// Value at (s, t) with s ≥ t.
    pub fn value_o(&self, s: f64, t: f64) -> f64 {
        match self {
            ExteriorRule::Zero => 0.0,
            ExteriorRule::Sign => {
                if s > t {
                    1.0
                } else {
                    0.0
                }
            }
            ExteriorRule::Profile { f, .. } => f((s - t) * FRAC_1_SQRT_2),
            ExteriorRule::Custom { f, .. } => f(s, t),
        }
    }

    /// Value at (s, t) with the odd extension across the cone.
    pub fn value(&self, s: f64, t: f64) -> f64 {
        if s >= t {
            self.value_o(s, t)
        } else {
            -self.value_o(t, s)
        }
    }

    pub fn key(&self) -> String {
        match self {
            ExteriorRule::Zero => "zero".into(),
            ExteriorRule::Sign => "sign".into(),
            ExteriorRule::Profile { name, .. } => format!("profile:{name}"),
            ExteriorRule::Custom { name, .. } => format!("custom:{name}"),
        }
    }
}

/// Grid values of a cone-odd function plus its exterior rule.
#[derive(Clone)]
pub struct OddGridFunction {
    pub grid: Arc<TriangularGrid>,
    pub values: Vec<f64>,
    pub exterior: ExteriorRule,
}

impl fmt::Debug for OddGridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OddGridFunction").field("n", &self.values.len()).field("exterior", &self.exterior).finish()
    }
}

impl OddGridFunction {
    /// Every node set from the exterior rule.
    pub fn from_rule(grid: Arc<TriangularGrid>, exterior: ExteriorRule) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                exterior.value_o(p.s, p.t)
            })
            .collect();
        OddGridFunction { grid, values, exterior }
    }

    pub fn from_fn<F: Fn(QuadrantPoint) -> f64>(grid: Arc<TriangularGrid>, f: F, exterior: ExteriorRule) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        OddGridFunction { grid, values, exterior }
    }

    pub fn zeros(grid: Arc<TriangularGrid>) -> Self {
        let n = grid.len();
        OddGridFunction { grid, values: vec![0.0; n], exterior: ExteriorRule::Zero }
    }

    /// Value at an arbitrary lattice point (a, b) ∈ Z² of the data disk.
    pub fn at_lattice(&self, a: i32, b: i32) -> f64 {
        let (s, t) = (a.abs(), b.abs());
        if s == t {
            0.0
        } else if s > t {
            self.grid.node_id(s, t).map_or_else(|| self.exterior.value_o(s as f64 * self.grid.h, t as f64 * self.grid.h), |i| self.values[i])
        } else {
            -self.grid.node_id(t, s).map_or_else(|| self.exterior.value_o(t as f64 * self.grid.h, s as f64 * self.grid.h), |i| self.values[i])
        }
    }

    /// Write `s,t,value` rows with a commented header.
    pub fn write_csv<W: Write>(&self, mut out: W, gamma: f64) -> std::io::Result<()> {
        writeln!(
            out,
            "# m={} gamma={} h={} S_max={} exterior={}",
            self.grid.m,
            gamma,
            self.grid.h,
            self.grid.s_max,
            self.exterior.key()
        )?;
        writeln!(out, "s,t,value")?;
        for i in 0..self.grid.len() {
            let p = self.grid.point(i);
            writeln!(out, "{:.6},{:.6},{:.12e}", p.s, p.t, self.values[i])?;
        }
        Ok(())
    }
}

/// Cell weights of the lattice, by absolute offset. The weight of offset p is
/// ∫_{cell p} K(z) |z|² dz / |p h|², which integrates quadratics exactly.
pub struct LatticeWeights {
    h: f64,
    dim: usize,
    table: Vec<f64>,
    c0: f64,
    kernel: RadialKernel,
    far_rule: Rule,
}

impl LatticeWeights {
    pub fn new(kernel: &RadialKernel, h: f64, max_offset: i32) -> Result<Self> {
        if kernel.dim() != 2 {
            return Err(Error::Domain("lattice weights need a kernel on R²".into()));
        }
        let dim = max_offset as usize + 1;
        let far_rule = gauss_legendre(4);
        let mut me = LatticeWeights { h, dim, table: vec![0.0; dim * dim], c0: 0.0, kernel: kernel.clone(), far_rule };
        me.c0 = near_moment(kernel, h)?;
        let pairs: Vec<(i32, i32)> = (0..=max_offset).flat_map(|a| (0..=a).map(move |b| (a, b))).collect();
        let vals = pairs.par_iter().map(|&(a, b)| me.cell_integral(a, b)).collect::<Result<Vec<f64>>>()?;
        for (&(a, b), v) in pairs.iter().zip(vals) {
            me.table[a as usize * dim + b as usize] = v;
            me.table[b as usize * dim + a as usize] = v;
        }
        me.table[0] = 0.0;
        let near = me.c0 / (4.0 * h * h);
        me.table[dim] += near;
        me.table[1] += near;
        Ok(me)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// ∫_{cell 0} |z|² K(z) dz.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    fn cell_integral(&self, a: i32, b: i32) -> Result<f64> {
        if a == 0 && b == 0 {
            return Ok(0.0);
        }
        let h = self.h;
        let k = &self.kernel;
        let (xa, xb) = (a as f64 * h, b as f64 * h);
        let p2 = xa * xa + xb * xb;
        if a * a + b * b > 36 {
            let r = &self.far_rule;
            let mut acc = 0.0;
            for (u, wu) in r.nodes.iter().zip(&r.weights) {
                for (v, wv) in r.nodes.iter().zip(&r.weights) {
                    let (z1, z2) = (xa + 0.5 * h * u, xb + 0.5 * h * v);
                    let z2n = z1 * z1 + z2 * z2;
                    acc += wu * wv * k.eval(z2n.sqrt()) * z2n;
                }
            }
            return Ok(acc * 0.25 * h * h / p2);
        }
        let tol = Tol::new(1e-300, 1e-12).with_max(500);
        let inner = |z1: f64| {
            let g = |z2: f64| k.eval(z1.hypot(z2)) * (z1 * z1 + z2 * z2) / p2;
            quad::adaptive(&g, xb - 0.5 * h, xb + 0.5 * h, tol).value
        };
        quad::integrate(&inner, xa - 0.5 * h, xa + 0.5 * h, tol, "lattice cell weight")
    }

    /// Weight of offset (da, db), near-field correction included.
    #[inline]
    pub fn get(&self, da: i32, db: i32) -> f64 {
        let (a, b) = (da.unsigned_abs() as usize, db.unsigned_abs() as usize);
        if a < self.dim && b < self.dim {
            self.table[a * self.dim + b]
        } else {
            self.cell_integral(a as i32, b as i32).unwrap_or(0.0)
        }
    }

    /// Weights of the diagonal lattice functions v(a - b): Σ_a W(a, a - k),
    /// k = 0..=kmax, for spacing h/√2.
    pub fn diagonal_weights(&self, kmax: usize) -> Vec<f64> {
        let amax: i32 = 4000;
        let g = self.kernel.order();
        let (h, c) = (self.h, self.kernel.norm_constant());
        (0..=kmax)
            .into_par_iter()
            .map(|k| {
                if k == 0 {
                    return 0.0;
                }
                let k = k as i32;
                let mut acc = 0.0;
                for a in -amax..=amax + k {
                    acc += self.get(a, a - k);
                }
                // remaining terms: Σ h² k(h√2 |a|) over |a| > amax, both sides
                let a0 = amax as f64;
                let ratio = self.kernel.eval(h * std::f64::consts::SQRT_2 * a0) / (c * (h * std::f64::consts::SQRT_2 * a0).powf(-2.0 - 2.0 * g));
                acc + 2.0 * h * h * c * ratio * (h * std::f64::consts::SQRT_2).powf(-2.0 - 2.0 * g) * a0.powf(-1.0 - 2.0 * g) / (1.0 + 2.0 * g)
            })
            .collect()
    }
}

/// ∫ over the square |z₁|,|z₂| < h/2 of |z|² K(|z|).
fn near_moment(k: &RadialKernel, h: f64) -> Result<f64> {
    let tol = Tol::new(1e-300, 1e-12);
    let outer = |th: f64| {
        let rmax = 0.5 * h / th.cos();
        let g = |r: f64| r * r * r * k.eval(r);
        let pts: Vec<f64> = (0..=30).map(|i| rmax * 2f64.powi(i - 30)).collect();
        let mut p = vec![0.0];
        p.extend(pts);
        quad::adaptive_breaks(&g, &p, tol).value
    };
    Ok(8.0 * quad::integrate(&outer, 0.0, FRAC_PI_4, tol, "near-field moment")?)
}

/// L_K on lattice cone-odd functions (m = 1).
pub struct LatticeOperator {
    grid: Arc<TriangularGrid>,
    kernel: RadialKernel,
    weights: LatticeWeights,
    disk_sum: Vec<f64>,
    t_far: Vec<f64>,
    far_cache: Mutex<HashMap<String, Arc<Vec<f64>>>>,
}

impl fmt::Debug for LatticeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticeOperator").field("nodes", &self.grid.len()).field("kernel", &self.kernel).finish()
    }
}

/// Polar quadrature for the region outside the data disk.
struct FarQuadrature {
    /// (radius, weight including the ρ² dv Jacobian)
    radial: Vec<(f64, f64)>,
    /// (angle, weight) on [0, π/4]
    angular: Vec<(f64, f64)>,
}

impl FarQuadrature {
    fn new(rho_b: f64, gamma: f64) -> Self {
        let vmax = 36.0 / (2.0 * gamma);
        let mut br = vec![0.0, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0];
        let mut v = 6.0;
        while v < vmax {
            br.push(v);
            v *= 1.5;
        }
        br.push(vmax);
        let gl = gauss_legendre(8);
        let mut radial = Vec::new();
        for w in br.windows(2) {
            let (c, hw) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
                let vv = c + hw * x;
                let rho = rho_b * vv.exp();
                radial.push((rho, wt * hw * rho * rho));
            }
        }
        let ga = gauss_legendre(24);
        let angular = ga
            .nodes
            .iter()
            .zip(&ga.weights)
            .map(|(x, w)| (FRAC_PI_4 * 0.5 * (1.0 + x), w * FRAC_PI_4 * 0.5))
            .collect();
        FarQuadrature { radial, angular }
    }
}

impl LatticeOperator {
    pub fn new(grid: Arc<TriangularGrid>, kernel: &RadialKernel) -> Result<Self> {
        if grid.m() != 1 {
            return Err(Error::Domain("lattice operator is implemented for m = 1".into()));
        }
        let kernel = if kernel.dim() == 2 { kernel.clone() } else { kernel.with_dim(2)? };
        let weights = LatticeWeights::new(&kernel, grid.h(), 2 * grid.nrad)?;
        let ns = grid.solver_len();
        let disk_sum: Vec<f64> = (0..ns)
            .into_par_iter()
            .map(|i| {
                let x = grid.lattice_index(i);
                let mut acc = 0.0;
                for p in grid.disk() {
                    if p[0] != x[0] || p[1] != x[1] {
                        acc += weights.get(p[0] - x[0], p[1] - x[1]);
                    }
                }
                acc
            })
            .collect();
        let mut op = LatticeOperator {
            grid,
            kernel,
            weights,
            disk_sum,
            t_far: Vec::new(),
            far_cache: Mutex::new(HashMap::new()),
        };
        op.t_far = op.far_field(None);
        Ok(op)
    }

    pub fn grid(&self) -> &Arc<TriangularGrid> {
        &self.grid
    }

    pub fn kernel(&self) -> &RadialKernel {
        &self.kernel
    }

    pub fn weights(&self) -> &LatticeWeights {
        &self.weights
    }

    /// D_i = Σ_{p ≠ x_i} W(p - x_i) over the disk plus the far-field mass.
    pub fn diagonal_mass(&self, i: usize) -> f64 {
        self.disk_sum[i] + self.t_far[i]
    }

    /// ∫_{|y| > ρ_b} K(x_i - y) dy.
    pub fn far_mass(&self, i: usize) -> f64 {
        self.t_far[i]
    }

    /// Far-field integral ∫_{|y| > ρ_b} w(y) K(x_i - y) dy for every solver node;
    /// `None` integrates the kernel alone.
    fn far_field(&self, rule: Option<&ExteriorRule>) -> Vec<f64> {
        let grid = &self.grid;
        let fq = FarQuadrature::new(grid.equivalent_radius(), self.kernel.order());
        let k = &self.kernel;
        (0..grid.solver_len())
            .into_par_iter()
            .map(|i| {
                let x = grid.point(i);
                let mut acc = 0.0;
                for &(rho, wr) in &fq.radial {
                    let mut ring = 0.0;
                    for &(phi, wp) in &fq.angular {
                        // y in the O-sector at angle φ and its star in the I-sector
                        let (c, s) = (rho * phi.cos(), rho * phi.sin());
                        let ko = sign_sum(k, x.s, x.t, c, s);
                        let ki = sign_sum(k, x.s, x.t, s, c);
                        match rule {
                            None => ring += wp * (ko + ki),
                            Some(r) => {
                                let v = r.value_o(c, s);
                                ring += wp * v * (ko - ki);
                            }
                        }
                    }
                    acc += wr * ring;
                }
                acc
            })
            .collect()
    }

    fn far_for(&self, rule: &ExteriorRule) -> Arc<Vec<f64>> {
        if let ExteriorRule::Zero = rule {
            return Arc::new(vec![0.0; self.grid.solver_len()]);
        }
        let key = rule.key();
        if let Some(v) = self.far_cache.lock().unwrap().get(&key) {
            return v.clone();
        }
        let v = Arc::new(self.far_field(Some(rule)));
        self.far_cache.lock().unwrap().insert(key, v.clone());
        v
    }

    /// L w at every solver node.
    pub fn apply(&self, w: &OddGridFunction) -> Vec<f64> {
        let grid = &self.grid;
        let disk_vals: Vec<f64> = grid.disk().iter().map(|p| w.at_lattice(p[0], p[1])).collect();
        let far = self.far_for(&w.exterior);
        (0..grid.solver_len())
            .into_par_iter()
            .map(|i| {
                let x = grid.lattice_index(i);
                let mut acc = 0.0;
                for (p, v) in grid.disk().iter().zip(&disk_vals) {
                    if *v != 0.0 && (p[0] != x[0] || p[1] != x[1]) {
                        acc += v * self.weights.get(p[0] - x[0], p[1] - x[1]);
                    }
                }
                self.diagonal_mass(i) * w.values[i] - acc - far[i]
            })
            .collect()
    }

    /// L w at one solver node.
    pub fn apply_at(&self, w: &OddGridFunction, i: usize) -> f64 {
        let grid = &self.grid;
        let x = grid.lattice_index(i);
        let mut acc = 0.0;
        for p in grid.disk() {
            if p[0] != x[0] || p[1] != x[1] {
                let v = w.at_lattice(p[0], p[1]);
                if v != 0.0 {
                    acc += v * self.weights.get(p[0] - x[0], p[1] - x[1]);
                }
            }
        }
        self.diagonal_mass(i) * w.values[i] - acc - self.far_for(&w.exterior)[i]
    }

    /// Folded coupling G_ij: Σ of W over the O-images of node j minus the
    /// I-images (excluding x_i itself).
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let x = self.grid.lattice_index(i);
        let [a, b] = self.grid.lattice_index(j);
        let imgs: &[(i32, i32)] = if b == 0 { &[(1, 1), (-1, 1)] } else { &[(1, 1), (-1, 1), (1, -1), (-1, -1)] };
        let mut acc = 0.0;
        for &(sa, sb) in imgs {
            let (pa, pb) = (sa * a, sb * b);
            if !(pa == x[0] && pb == x[1]) {
                acc += self.weights.get(pa - x[0], pb - x[1]);
            }
            // the star image (swap) lies in I
            let (qa, qb) = (sb * b, sa * a);
            acc -= self.weights.get(qa - x[0], qb - x[1]);
        }
        acc
    }

    /// Dirichlet system for the unknowns `region` (solver node ids); all other
    /// values of `data` (nodes and exterior rule) are prescribed.
    pub fn assemble(&self, region: &[usize], data: &OddGridFunction) -> Result<DirichletSystem> {
        let ns = self.grid.solver_len();
        if region.iter().any(|&i| i >= ns) {
            return Err(Error::Domain("region must lie inside S_max".into()));
        }
        let n = region.len();
        let rows: Vec<Vec<f64>> = region
            .par_iter()
            .map(|&i| {
                let mut row: Vec<f64> = region.iter().map(|&j| -self.coupling(i, j)).collect();
                let k = region.iter().position(|&j| j == i).unwrap();
                row[k] += self.diagonal_mass(i);
                row
            })
            .collect();
        let mut matrix = faer::Mat::<f64>::zeros(n, n);
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                matrix.write(r, c, *v);
            }
        }
        for r in 0..n {
            if !(matrix.read(r, r) > 0.0) {
                return Err(Error::LinearAlgebra(format!("non-positive diagonal at node {}", region[r])));
            }
        }
        let mut outside = data.clone();
        for &i in region {
            outside.values[i] = 0.0;
        }
        let lw = self.apply(&outside);
        let forcing = region.iter().map(|&i| -lw[i]).collect();
        let weights = region.iter().map(|&i| self.grid.orbit_size(i)).collect();
        Ok(DirichletSystem { matrix, forcing, weights, unit_forcing: None, nodes: region.to_vec() })
    }
}

/// Σ over sign changes of K((s,t) - (±c, ±d)).
#[inline]
fn sign_sum(k: &RadialKernel, s: f64, t: f64, c: f64, d: f64) -> f64 {
    let (a0, a1) = (s - c, s + c);
    let (b0, b1) = (t - d, t + d);
    k.eval(a0.hypot(b0)) + k.eval(a0.hypot(b1)) + k.eval(a1.hypot(b0)) + k.eval(a1.hypot(b1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_structure() {
        let g = TriangularGrid::new(1, 0.5, 4.0, 1.0).unwrap();
        for i in 0..g.len() {
            let p = g.lattice_index(i);
            assert!(p[0] > p[1] && p[1] >= 0);
            assert_eq!(g.node_id(p[0], p[1]), Some(i));
        }
        assert!(g.solver_len() < g.len());
        let n2 = g.ball_len(2.0);
        assert!((0..n2).all(|i| g.radius(i) < 2.0));
        assert!((n2..g.len()).all(|i| g.radius(i) >= 2.0 - 1e-12));
    }

    #[test]
    fn near_field_moment_fractional() {
        // ∫_{square} |z|^{-2γ} c dz computed by the polar formula against a direct nested rule
        let k = RadialKernel::fractional(2, 0.5).unwrap();
        let h = 0.3;
        let c0 = near_moment(&k, h).unwrap();
        let tol = Tol::new(1e-300, 1e-11);
        let inner = |x: f64| {
            let g = |y: f64| (x * x + y * y) * k.eval(x.hypot(y));
            quad::adaptive_breaks(&g, &[-0.5 * h, 0.0, 0.5 * h], tol).value
        };
        let d = quad::adaptive_breaks(&inner, &[-0.5 * h, 0.0, 0.5 * h], tol).value;
        assert!((c0 / d - 1.0).abs() < 1e-7);
    }

    #[test]
    fn far_field_mass_matches_direct_quadrature() {
        let k = RadialKernel::fractional(2, 0.5).unwrap();
        let g = Arc::new(TriangularGrid::new(1, 0.25, 3.0, 2.0).unwrap());
        let op = LatticeOperator::new(g.clone(), &k).unwrap();
        let rb = g.equivalent_radius();
        let tol = Tol::new(1e-300, 1e-10);
        for i in [0, g.solver_len() / 2, g.solver_len() - 1] {
            let x = g.point(i);
            let ring = |rho: f64| {
                let f = |th: f64| k.eval((x.s - rho * th.cos()).hypot(x.t - rho * th.sin()));
                rho * quad::adaptive(&f, 0.0, 2.0 * std::f64::consts::PI, tol).value
            };
            let direct = quad::adaptive_semi_infinite(&ring, rb, tol).value;
            assert!((op.far_mass(i) / direct - 1.0).abs() < 1e-6, "{} vs {direct}", op.far_mass(i));
        }
    }
}
