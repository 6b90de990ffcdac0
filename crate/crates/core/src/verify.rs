//! Maximum principles, the ABP-type bound, the stability form and torsion
//! growth, checked on ensembles of discrete solves.
//!
//! Every scenario checks its hypotheses first (tolerance 1e-8) and its
//! conclusion second (tolerance 1e-6). A scenario whose hypotheses fail is
//! vacuous, never failed. The limsup-at-infinity hypothesis is replaced by
//! the sign of the data on the truncation collar.

use crate::error::{Error, Result};
use crate::kernels::RadialKernel;
use crate::layer1d::Nonlinearity;
use crate::operator::system::lu_solve;
use crate::operator::{solve_torsion, DirichletSystem, ExteriorRule, LatticeOperator, OddGridFunction, TorsionOptions};
use crate::special::linear_fit;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::io::Write;

pub const HYPOTHESIS_TOL: f64 = 1e-8;
pub const CONCLUSION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Vacuous,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "vacuous",
        })
    }
}

/// v on the lattice, an open set Ω of unknowns and a potential c on Ω.
#[derive(Debug, Clone)]
pub struct MpScenario {
    pub region: Vec<usize>,
    pub c: Vec<f64>,
    pub v: OddGridFunction,
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome {
    pub verdict: Verdict,
    /// Worst hypothesis value (≥ -1e-8 or ≤ 1e-8 depending on the sign convention).
    pub hypothesis: f64,
    /// Worst conclusion value in Ω.
    pub conclusion: f64,
}

/// The exterior rule takes values of the given sign on O (sampled).
fn rule_has_sign(rule: &ExteriorRule, sign: f64, radius: f64) -> bool {
    match rule {
        ExteriorRule::Zero => true,
        _ => (0..64).all(|k| {
            let th = std::f64::consts::FRAC_PI_4 * (k as f64 + 0.5) / 64.0;
            [1.0, 2.0, 8.0].iter().all(|&m| sign * rule.value_o(m * radius * th.cos(), m * radius * th.sin()) >= -HYPOTHESIS_TOL)
        }),
    }
}

fn in_region(region: &[usize], n: usize) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in region {
        m[i] = true;
    }
    m
}

/// Weak maximum principle for odd functions: L v + c v ≥ 0 in Ω, c ≥ 0,
/// v ≥ 0 in O ∖ Ω ⇒ v ≥ 0 in Ω.
pub fn weak_mp_odd(op: &LatticeOperator, sc: &MpScenario) -> Outcome {
    sign_mp(op, sc, 1.0, &sc.c, true)
}

/// Maximum principle in sets near the cone: L v + c v ≤ 0 in Ω, v ≤ 0 in O ∖ Ω
/// ⇒ v ≤ 0 in Ω, for c bounded below and Ω thin enough.
pub fn narrow_mp_odd(op: &LatticeOperator, sc: &MpScenario) -> Outcome {
    sign_mp(op, sc, -1.0, &sc.c, false)
}

/// `sign` = +1 tests v ≥ 0 from L v + c v ≥ 0; -1 tests v ≤ 0 from L v + c v ≤ 0.
fn sign_mp(op: &LatticeOperator, sc: &MpScenario, sign: f64, c: &[f64], need_c_nonneg: bool) -> Outcome {
    let grid = op.grid();
    let lv = op.apply(&sc.v);
    let mask = in_region(&sc.region, grid.len());
    let mut hyp = f64::INFINITY;
    for (k, &i) in sc.region.iter().enumerate() {
        hyp = hyp.min(sign * (lv[i] + c[k] * sc.v.values[i]));
    }
    for i in 0..grid.len() {
        if !mask[i] {
            hyp = hyp.min(sign * sc.v.values[i]);
        }
    }
    let mut ok = hyp >= -HYPOTHESIS_TOL && rule_has_sign(&sc.v.exterior, sign, grid.s_lat());
    if need_c_nonneg && c.iter().any(|&x| x < 0.0) {
        ok = false;
    }
    let concl = sc.region.iter().map(|&i| sign * sc.v.values[i]).fold(f64::INFINITY, f64::min);
    let verdict = if !ok {
        Verdict::Vacuous
    } else if concl >= -CONCLUSION_TOL {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Outcome { verdict, hypothesis: hyp, conclusion: concl }
}

/// Solves (M + diag c) v = g + forcing on `region` with `data` outside.
pub fn solve_dirichlet(op: &LatticeOperator, region: &[usize], data: &OddGridFunction, c: &[f64], g: &[f64]) -> Result<OddGridFunction> {
    let sys = op.assemble(region, data)?.with_potential(c);
    let rhs: Vec<f64> = g.iter().zip(&sys.forcing).map(|(a, b)| a + b).collect();
    let x = match sys.factor(0.0) {
        Ok(f) => f.solve(&rhs),
        Err(_) => lu_solve(&sys.matrix, &rhs)?,
    };
    let mut v = data.clone();
    for (k, &i) in region.iter().enumerate() {
        v.values[i] = x[k];
    }
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct EnsembleRow {
    pub id: usize,
    pub family: String,
    pub outcome: Outcome,
    pub nodes: usize,
}

#[derive(Debug, Clone, Default)]
pub struct EnsembleReport {
    pub rows: Vec<EnsembleRow>,
}

impl EnsembleReport {
    pub fn count(&self, v: Verdict) -> usize {
        self.rows.iter().filter(|r| r.outcome.verdict == v).count()
    }

    /// No non-vacuous failure and at least `min` non-vacuous instances.
    pub fn pass(&self, min: usize) -> bool {
        self.count(Verdict::Fail) == 0 && self.count(Verdict::Pass) >= min
    }

    pub fn extend(&mut self, other: EnsembleReport) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "id,type,hypotheses,conclusion,hypothesis_margin,conclusion_margin,nodes")?;
        for r in &self.rows {
            let h = if r.outcome.verdict == Verdict::Vacuous { "fail" } else { "hold" };
            writeln!(
                out,
                "{},{},{},{},{:.3e},{:.3e},{}",
                r.id, r.family, h, r.outcome.verdict, r.outcome.hypothesis, r.outcome.conclusion, r.nodes
            )?;
        }
        Ok(())
    }
}

/// Random ball B_ρ(x₀) ∩ O ∩ B_{S_max} with at least `min_nodes` unknowns.
fn random_region(op: &LatticeOperator, rng: &mut ChaCha8Rng, min_nodes: usize) -> Vec<usize> {
    let grid = op.grid();
    let s = grid.s_max();
    loop {
        let r0 = rng.gen_range(0.0..0.8 * s);
        let th = rng.gen_range(0.0..std::f64::consts::FRAC_PI_4);
        let (cs, ct) = (r0 * th.cos(), r0 * th.sin());
        let rho = rng.gen_range(0.2 * s..0.6 * s);
        let region: Vec<usize> = (0..grid.solver_len())
            .filter(|&i| {
                let p = grid.point(i);
                (p.s - cs).hypot(p.t - ct) < rho
            })
            .collect();
        if region.len() >= min_nodes {
            return region;
        }
    }
}

/// Solved instances of the weak MP: g ≥ 0, c ≥ 0, nonnegative data outside Ω.
pub fn weak_mp_ensemble(op: &LatticeOperator, rng: &mut ChaCha8Rng, count: usize) -> Result<EnsembleReport> {
    let grid = op.grid().clone();
    let mut rep = EnsembleReport::default();
    for id in 0..count {
        let region = random_region(op, rng, 4);
        let mask = in_region(&region, grid.len());
        let mut data = OddGridFunction::zeros(grid.clone());
        let density = rng.gen_range(0.0..1.0);
        for i in 0..grid.len() {
            if !mask[i] && rng.gen_bool(density) {
                data.values[i] = rng.gen_range(0.0..1.0);
            }
        }
        let c: Vec<f64> = region.iter().map(|_| rng.gen_range(0.0..2.0)).collect();
        let g: Vec<f64> = region.iter().map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect();
        let v = solve_dirichlet(op, &region, &data, &c, &g)?;
        let outcome = weak_mp_odd(op, &MpScenario { region: region.clone(), c, v });
        rep.rows.push(EnsembleRow { id, family: "weak-mp".into(), outcome, nodes: region.len() });
    }
    Ok(rep)
}

/// Unknowns with 0 < s - t < ε inside B_ρ.
pub fn strip_region(op: &LatticeOperator, eps: f64, rho: f64) -> Vec<usize> {
    let grid = op.grid();
    (0..grid.solver_len())
        .filter(|&i| {
            let p = grid.point(i);
            p.s - p.t < eps - 1e-12 && grid.radius(i) < rho
        })
        .collect()
}

/// Narrow-set instances with constant c = -c_minus on Ω = {s - t < ε} ∩ B_ρ:
/// g ≤ 0 and nonpositive data outside Ω.
pub fn narrow_mp_ensemble(
    op: &LatticeOperator,
    rng: &mut ChaCha8Rng,
    eps: f64,
    c_minus: f64,
    count: usize,
) -> Result<EnsembleReport> {
    let grid = op.grid().clone();
    let rho = 0.8 * grid.s_max();
    let region = strip_region(op, eps, rho);
    if region.is_empty() {
        return Err(Error::Domain(format!("no unknowns with s - t < {eps} at h = {}", grid.h())));
    }
    let mask = in_region(&region, grid.len());
    let sys = op.assemble(&region, &OddGridFunction::zeros(grid.clone()))?;
    let c = vec![-c_minus; region.len()];
    let shifted = sys.with_potential(&c);
    let lu = crate::operator::system::LuFactor::new(&shifted.matrix);
    let mut rep = EnsembleReport::default();
    for id in 0..count {
        let mut data = OddGridFunction::zeros(grid.clone());
        let density = rng.gen_range(0.0..0.5);
        for i in 0..grid.len() {
            if !mask[i] && rng.gen_bool(density) {
                data.values[i] = -rng.gen_range(0.0..1.0);
            }
        }
        let g: Vec<f64> = region.iter().map(|_| if rng.gen_bool(0.5) { -rng.gen_range(0.0..1.0) } else { 0.0 }).collect();
        let outside = {
            let mut d = data.clone();
            for &i in &region {
                d.values[i] = 0.0;
            }
            d
        };
        let lw = op.apply(&outside);
        let rhs: Vec<f64> = region.iter().enumerate().map(|(k, &i)| g[k] - lw[i]).collect();
        let x = lu.solve(&rhs);
        let mut v = data;
        for (k, &i) in region.iter().enumerate() {
            v.values[i] = x[k];
        }
        let outcome = narrow_mp_odd(op, &MpScenario { region: region.clone(), c: c.clone(), v });
        rep.rows.push(EnsembleRow { id, family: format!("narrow-mp eps={eps} c-={c_minus}"), outcome, nodes: region.len() });
    }
    Ok(rep)
}

#[derive(Debug, Clone)]
pub struct NarrowScan {
    /// (‖c₋‖, largest ε of the scan below which every instance passed; 0 if none).
    pub thresholds: Vec<(f64, f64)>,
    /// ε̄ is nonincreasing in ‖c₋‖.
    pub monotone: bool,
    pub report: EnsembleReport,
}

/// Threshold scan over widths and potentials.
pub fn narrow_scan(op: &LatticeOperator, rng: &mut ChaCha8Rng, widths: &[f64], c_minus: &[f64], per_cell: usize) -> Result<NarrowScan> {
    let mut report = EnsembleReport::default();
    let mut thresholds = Vec::new();
    for &cm in c_minus {
        let mut bar = 0.0;
        for &w in widths {
            let r = narrow_mp_ensemble(op, rng, w, cm, per_cell)?;
            let ok = r.count(Verdict::Fail) == 0;
            report.extend(r);
            if !ok {
                break;
            }
            bar = w;
        }
        thresholds.push((cm, bar));
    }
    let monotone = thresholds.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(NarrowScan { thresholds, monotone, report })
}

/// Narrowness radius R(Ω): the least R (on the lattice scale) such that every
/// x ∈ Ω has |B_R(x) ∖ Ω| ≥ |B_R(x)|/2, counted on lattice points of R².
pub fn narrowness_radius(op: &LatticeOperator, region: &[usize]) -> Result<f64> {
    let grid = op.grid();
    let h = grid.h();
    let mask = in_region(region, grid.len());
    let member = |a: i32, b: i32| -> bool {
        let (s, t) = (a.abs(), b.abs());
        s > t && grid.node_id(s, t).is_some_and(|i| mask[i])
    };
    let kmax = (grid.s_lat() / h) as i32;
    let mut worst = 0i32;
    for &i in region {
        let [a, b] = grid.lattice_index(i);
        let mut found = None;
        for k in 1..=kmax {
            let (mut inside, mut total) = (0usize, 0usize);
            for da in -k..=k {
                for db in -k..=k {
                    if da * da + db * db <= k * k {
                        total += 1;
                        if member(a + da, b + db) {
                            inside += 1;
                        }
                    }
                }
            }
            if 2 * (total - inside) >= total {
                found = Some(k);
                break;
            }
        }
        match found {
            Some(k) => worst = worst.max(k),
            None => return Err(Error::Domain("R(Ω) is not finite on the truncated grid".into())),
        }
    }
    Ok(worst as f64 * h)
}

#[derive(Debug, Clone)]
pub struct AbpReport {
    /// Frozen constant, fitted on the first half of the ensemble.
    pub constant: f64,
    /// Worst ratio sup v / (C R^{2γ} ‖h‖) on the second half.
    pub worst_ratio: f64,
    /// (w, R(Ω), sup v) for h ≡ 1, c = 0 strips.
    pub strips: Vec<(f64, f64, f64)>,
    /// Log-log slope of sup v against R(Ω) over the strips.
    pub slope: f64,
    /// sup v(2h) / sup v(h) for one instance.
    pub doubling: f64,
    pub instances: usize,
    pub report: EnsembleReport,
}

impl AbpReport {
    pub fn pass(&self, gamma: f64) -> bool {
        self.worst_ratio <= 1.1 && (self.slope - 2.0 * gamma).abs() <= 0.3 && self.doubling <= 2.0 + 1e-9
    }
}

/// ABP-type bound over strips {0 < (s - t)/√2 < w} ∩ B_ρ with c ≤ 0 and
/// 0 ≤ h, zero data outside Ω.
pub fn abp_check(op: &LatticeOperator, rng: &mut ChaCha8Rng, widths: &[f64], count: usize) -> Result<AbpReport> {
    let grid = op.grid().clone();
    let gamma = op.kernel().order();
    let rho = 0.8 * grid.s_max();
    let zero = OddGridFunction::zeros(grid.clone());
    let mut regions = Vec::new();
    for &w in widths {
        let region = strip_region(op, w * std::f64::consts::SQRT_2, rho);
        let r = narrowness_radius(op, &region)?;
        let sys = op.assemble(&region, &zero)?;
        regions.push((w, region, r, sys));
    }
    // scaling with h ≡ 1, c = 0
    let mut strips = Vec::new();
    for (w, region, r, sys) in &regions {
        let x = sys.solve(&vec![1.0; region.len()], 0.0)?;
        strips.push((*w, *r, x.iter().cloned().fold(0.0, f64::max)));
    }
    let (slope, _) = linear_fit(
        &strips.iter().map(|s| s.1.ln()).collect::<Vec<_>>(),
        &strips.iter().map(|s| s.2.ln()).collect::<Vec<_>>(),
    );
    let mut ratios = Vec::new();
    let mut report = EnsembleReport::default();
    for id in 0..count {
        let (w, region, r, sys) = &regions[id % regions.len()];
        let c: Vec<f64> = region.iter().map(|_| rng.gen_range(0.0..2.0)).collect();
        let hmax = rng.gen_range(0.1..2.0);
        let h: Vec<f64> = region.iter().map(|_| rng.gen_range(0.0..hmax)).collect();
        let hn = h.iter().cloned().fold(0.0, f64::max);
        let x = sys.with_potential(&c).solve(&h, 0.0)?;
        let sup = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ratios.push(sup / (r.powf(2.0 * gamma) * hn));
        let outcome = Outcome { verdict: Verdict::Pass, hypothesis: 0.0, conclusion: f64::NAN };
        report.rows.push(EnsembleRow { id, family: format!("abp w={w}"), outcome, nodes: region.len() });
    }
    let half = count / 2;
    let constant = ratios[..half].iter().cloned().fold(0.0, f64::max);
    let worst_ratio = ratios[half..].iter().cloned().fold(0.0, f64::max) / constant;
    for (k, row) in report.rows.iter_mut().enumerate() {
        if k >= half && ratios[k] > 1.1 * constant {
            row.outcome.verdict = Verdict::Fail;
        }
        row.outcome.conclusion = ratios[k] / constant;
    }
    // doubling h doubles sup v (c = 0 solve is linear)
    let (_, region, _, sys) = &regions[0];
    let h: Vec<f64> = region.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
    let a = sys.solve(&h, 0.0)?.into_iter().fold(0.0, f64::max);
    let b = sys.solve(&h.iter().map(|x| 2.0 * x).collect::<Vec<_>>(), 0.0)?.into_iter().fold(0.0, f64::max);
    Ok(AbpReport { constant, worst_ratio, strips, slope, doubling: b / a, instances: count, report })
}

/// Linearized MP: L v - f′(u) v + |c| v ≤ 0 in Ω ⊂ O, v ≤ 0 outside ⇒ v ≤ 0.
pub fn linearized_mp_check(op: &LatticeOperator, f: &Nonlinearity, u: &OddGridFunction, sc: &MpScenario) -> Outcome {
    let c: Vec<f64> = sc.region.iter().zip(&sc.c).map(|(&i, ci)| -f.deriv(u.values[i]) + ci.abs()).collect();
    sign_mp(op, sc, -1.0, &c, false)
}

/// Candidates from solves of the linearized problem on random Ω ⊂ B_ρ ∩ O
/// with g ≤ 0 and zero data, plus -u.
pub fn linearized_mp_ensemble(
    op: &LatticeOperator,
    f: &Nonlinearity,
    u: &OddGridFunction,
    rho: f64,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Result<EnsembleReport> {
    let grid = op.grid().clone();
    let zero = OddGridFunction::zeros(grid.clone());
    let mut rep = EnsembleReport::default();
    let all: Vec<usize> = (0..grid.ball_len(rho)).collect();
    for id in 0..count {
        let cs = rng.gen_range(0.0..rho);
        let ct = rng.gen_range(0.0..cs);
        let r = rng.gen_range(0.25 * rho..0.75 * rho);
        let region: Vec<usize> = all
            .iter()
            .cloned()
            .filter(|&i| {
                let p = grid.point(i);
                (p.s - cs).hypot(p.t - ct) < r
            })
            .collect();
        if region.is_empty() {
            continue;
        }
        let c: Vec<f64> = region.iter().map(|_| -rng.gen_range(0.0..1.0)).collect();
        let pot: Vec<f64> = region.iter().zip(&c).map(|(&i, ci)| -f.deriv(u.values[i]) - ci).collect();
        let g: Vec<f64> = region.iter().map(|_| if rng.gen_bool(0.5) { -rng.gen_range(0.0..1.0) } else { 0.0 }).collect();
        let v = solve_dirichlet(op, &region, &zero, &pot, &g)?;
        let outcome = linearized_mp_check(op, f, u, &MpScenario { region: region.clone(), c, v });
        rep.rows.push(EnsembleRow { id, family: "linearized-mp".into(), outcome, nodes: region.len() });
    }
    // v = -u on B_ρ ∩ O with c = 0
    let mut neg = u.clone();
    neg.values.iter_mut().for_each(|x| *x = -*x);
    neg.exterior = ExteriorRule::Custom {
        name: format!("neg:{}", u.exterior.key()),
        f: {
            let r = u.exterior.clone();
            std::sync::Arc::new(move |s, t| -r.value_o(s, t))
        },
    };
    let outcome = linearized_mp_check(op, f, u, &MpScenario { region: all.clone(), c: vec![0.0; all.len()], v: neg });
    rep.rows.push(EnsembleRow { id: count, family: "linearized-mp -u".into(), outcome, nodes: all.len() });
    Ok(rep)
}

/// The linearized MP applied to v = u₁ - u₂ with the potential f′(u₂): the
/// uniqueness argument run in both orders.
pub fn uniqueness_through_mp(
    op: &LatticeOperator,
    f: &Nonlinearity,
    u1: &OddGridFunction,
    u2: &OddGridFunction,
    radius: f64,
) -> [Outcome; 2] {
    let grid = op.grid();
    let region: Vec<usize> = (0..grid.ball_len(radius).min(grid.solver_len())).collect();
    let diff = |a: &OddGridFunction, b: &OddGridFunction| {
        let mut v = OddGridFunction::zeros(grid.clone());
        for i in 0..grid.len() {
            v.values[i] = a.values[i] - b.values[i];
        }
        v
    };
    let c = vec![0.0; region.len()];
    [
        linearized_mp_check(op, f, u2, &MpScenario { region: region.clone(), c: c.clone(), v: diff(u1, u2) }),
        linearized_mp_check(op, f, u1, &MpScenario { region, c, v: diff(u2, u1) }),
    ]
}

/// |ξ(x) - ξ(y)|² - (φ(x) - φ(y))(ξ²(x)/φ(x) - ξ²(y)/φ(y)), which is ≥ 0 for φ > 0.
pub fn picone_gap(phi_x: f64, phi_y: f64, xi_x: f64, xi_y: f64) -> f64 {
    (xi_x - xi_y).powi(2) - (phi_x - phi_y) * (xi_x * xi_x / phi_x - xi_y * xi_y / phi_y)
}

/// Q(ξ) = ½ ∬ |ξ(x) - ξ(y)|² K - ∫ f′(u) ξ² for ξ doubly radial and supported
/// in O, as lattice sums over R² (ξ is given by its values on the nodes).
pub fn stability_form(op: &LatticeOperator, f: &Nonlinearity, u: &OddGridFunction, xi: &[f64]) -> Result<f64> {
    let grid = op.grid();
    let h = grid.h();
    let support: Vec<usize> = (0..grid.solver_len()).filter(|&i| xi[i] != 0.0).collect();
    if support.is_empty() {
        return Ok(0.0);
    }
    for &i in &support {
        if !(u.values[i] > 0.0) {
            return Err(Error::Hypothesis(format!("u ≤ 0 at node {i} of the support")));
        }
    }
    // every point of R² carrying ξ: sign images (±a, ±b) of each support node
    let mut pts: Vec<([i32; 2], f64, usize)> = Vec::new();
    for &i in &support {
        let [a, b] = grid.lattice_index(i);
        let mut imgs = vec![[a, b], [-a, b]];
        if b != 0 {
            imgs.extend([[a, -b], [-a, -b]]);
        }
        for p in imgs {
            pts.push((p, xi[i], i));
        }
    }
    let w = op.weights();
    let mut q = 0.0;
    for (p, x, i) in &pts {
        let mut off = 0.0;
        for (r, y, _) in &pts {
            if r != p {
                off += w.get(r[0] - p[0], r[1] - p[1]) * y;
            }
        }
        q += x * (op.diagonal_mass(*i) * x - off) - f.deriv(u.values[*i]) * x * x;
    }
    Ok(q * h * h)
}

/// Random smooth bumps compactly supported in O ∩ B_ρ.
pub fn random_bumps(op: &LatticeOperator, rng: &mut ChaCha8Rng, rho: f64, count: usize) -> Vec<Vec<f64>> {
    let grid = op.grid();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let r0 = rng.gen_range(0.1 * rho..0.9 * rho);
        let th = rng.gen_range(0.0..std::f64::consts::FRAC_PI_4);
        let (cs, ct) = (r0 * th.cos(), r0 * th.sin());
        let dist_cone = (cs - ct) * std::f64::consts::FRAC_1_SQRT_2;
        let rmax = dist_cone.min(rho - r0);
        if rmax < 2.0 * grid.h() {
            continue;
        }
        let w = rng.gen_range(2.0 * grid.h()..=rmax);
        let amp = rng.gen_range(0.1..1.0);
        let xi: Vec<f64> = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                let d2 = ((p.s - cs).powi(2) + (p.t - ct).powi(2)) / (w * w);
                if d2 < 1.0 {
                    amp * (-1.0 / (1.0 - d2)).exp() * std::f64::consts::E
                } else {
                    0.0
                }
            })
            .collect();
        if xi.iter().any(|&x| x != 0.0) {
            out.push(xi);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct TorsionGrowth {
    /// (R, M_R)
    pub rows: Vec<(f64, f64)>,
    pub slope: f64,
    pub monotone: bool,
}

impl TorsionGrowth {
    pub fn pass(&self, gamma: f64, tol: f64) -> bool {
        self.monotone && (self.slope - 2.0 * gamma).abs() <= tol
    }
}

/// M_R = sup φ_R over the radii and its log-log slope.
pub fn no_bounded_torsion_check(k: &RadialKernel, radii: &[f64], opts: TorsionOptions) -> Result<TorsionGrowth> {
    let mut rows = Vec::new();
    for &r in radii {
        rows.push((r, solve_torsion(k, r, opts)?.sup));
    }
    let (slope, _) = linear_fit(
        &rows.iter().map(|r| r.0.ln()).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.1.ln()).collect::<Vec<_>>(),
    );
    let monotone = rows.windows(2).all(|w| w[1].1 > w[0].1);
    Ok(TorsionGrowth { rows, slope, monotone })
}

/// Convenience: `DirichletSystem` of L_K on Ω with zero data.
pub fn zero_data_system(op: &LatticeOperator, region: &[usize]) -> Result<DirichletSystem> {
    op.assemble(region, &OddGridFunction::zeros(op.grid().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn picone_is_nonnegative(px in 1e-3f64..10.0, py in 1e-3f64..10.0, xx in -5.0f64..5.0, xy in -5.0f64..5.0) {
            prop_assert!(picone_gap(px, py, xx, xy) >= -1e-9 * (1.0 + xx * xx / px + xy * xy / py));
        }
    }

    #[test]
    fn picone_fails_for_sign_changing_phi() {
        // the pointwise inequality needs φ > 0 at both points
        assert!(picone_gap(1.0, -0.5, 1.0, 0.0) < 0.0);
    }
}
