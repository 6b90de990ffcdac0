//! Command-line front end: parses a [`RunConfig`], runs one subcommand and
//! writes CSV artifacts plus a plain-text `report.txt`.
//!
//! Exit codes: 0 all checks pass, 1 a checked property fails, 2 usage or
//! configuration error, 3 numerical failure.

use crate::config::{KernelSpec, RunConfig};
use crate::eigen::{first_odd_eigenpair, scaling_study, EigenOptions};
use crate::error::{Error, Result};
use crate::kernels::{check_ellipticity, frac_constant, reduce_to_1d, sqrt_convexity_scan, KernelKind, RadialKernel};
use crate::layer1d::{check_layer_decay, check_second_derivative, solve_layer, validate_nonlinearity, Nonlinearity};
use crate::operator::{fractional_torsion, solve_torsion, LatticeOperator, LineOperator, TorsionOptions, TriangularGrid};
use crate::parabolic::liouville_runs;
use crate::saddle::{
    asymptotic_error, default_collar, lattice_layer, saddle_solve, uniqueness_probe, IterationOptions, SaddleSolution,
};
use crate::special::logspace;
use crate::verify::{self, EnsembleReport, Verdict};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "saddlekit", version, about = "Saddle-shaped solutions of nonlocal Allen-Cahn type equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (flat key = value with [sections]); the preset is used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: saddlekit-out/<command>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized ensembles; overrides `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Comma-separated subset of the checks to run (verify families, saddle stages).
    #[arg(long, global = true, value_delimiter = ',')]
    pub only: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Ellipticity, √τ-convexity and one-dimensional reduction of the kernel.
    KernelCheck,
    /// One-dimensional layer solution and its decay and concavity.
    Layer,
    /// First odd eigenpair in balls and its scaling.
    Eigen,
    /// Saddle-shaped solution by monotone iteration, asymptotics and uniqueness.
    Saddle,
    /// Parabolic runs of the Liouville dichotomy.
    Evolve,
    /// Randomized maximum-principle ensembles and the stability form.
    Verify,
    /// Growth of the torsion supremum in balls.
    Torsion,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::KernelCheck => "kernel-check",
            Command::Layer => "layer",
            Command::Eigen => "eigen",
            Command::Saddle => "saddle",
            Command::Evolve => "evolve",
            Command::Verify => "verify",
            Command::Torsion => "torsion",
        }
    }

    /// Names accepted by `--only`.
    pub fn stages(self) -> &'static [&'static str] {
        match self {
            Command::Saddle => &["asymptotic", "uniqueness"],
            Command::Verify => &VERIFY_FAMILIES,
            _ => &[],
        }
    }
}

pub const VERIFY_FAMILIES: [&str; 7] =
    ["weak-mp", "narrow-mp", "narrow-scan", "abp", "linearized-mp", "uniqueness-mp", "stability"];

/// One checked claim.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: String,
    pub tolerance: String,
    pub invariant: String,
}

/// Results of one subcommand.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub info: Vec<String>,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    /// Set when part of the command could not be computed; maps to exit code 3.
    pub numerical_failure: Option<String>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: command.into(), info: Vec::new(), checks: Vec::new(), files: Vec::new(), numerical_failure: None }
    }

    pub fn info(&mut self, s: impl Into<String>) {
        self.info.push(s.into());
    }

    pub fn check(&mut self, name: &str, pass: bool, value: impl Into<String>, tolerance: &str, invariant: &str) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            value: value.into(),
            tolerance: tolerance.into(),
            invariant: invariant.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "saddlekit {VERSION} {}", self.command);
        let _ = writeln!(s, "config-hash: {}", cfg.hash());
        let _ = writeln!(s, "seed: {}", cfg.seed);
        let _ = writeln!(s, "\n== configuration ==");
        for l in cfg.canonical().lines() {
            let _ = writeln!(s, "  {l}");
        }
        let _ = writeln!(s, "\n== results ==");
        for l in &self.info {
            let _ = writeln!(s, "  {l}");
        }
        let _ = writeln!(s, "\n== checks ==");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "  {} {}: {} (tolerance: {}; invariant: {})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance,
                c.invariant
            );
        }
        if let Some(e) = &self.numerical_failure {
            let _ = writeln!(s, "\nnumerical failure: {e}");
        }
        let n = self.checks.iter().filter(|c| c.pass).count();
        let _ = writeln!(s, "\nsummary: {n}/{} checks passed", self.checks.len());
        if !self.files.is_empty() {
            let _ = writeln!(s, "files: {}", self.files.join(", "));
        }
        s
    }
}

/// Output directory plus the list of files written to it.
struct Out<'a> {
    dir: &'a Path,
    report: &'a mut Report,
}

impl Out<'_> {
    fn write<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        f(&mut w)?;
        w.flush()?;
        self.report.files.push(name.into());
        Ok(())
    }
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Lattice operator of the configured kernel on the configured grid.
pub fn build_operator(cfg: &RunConfig, kernel: &RadialKernel) -> Result<LatticeOperator> {
    let g = &cfg.grid;
    let grid = Arc::new(TriangularGrid::new(g.m, g.h, g.s_max, g.band)?);
    LatticeOperator::new(grid, kernel)
}

fn planar_kernel(cfg: &RunConfig) -> Result<RadialKernel> {
    let k = cfg.build_kernel()?;
    let n = 2 * cfg.grid.m;
    if k.dim() == n {
        Ok(k)
    } else {
        k.with_dim(n)
    }
}

fn iteration_options(cfg: &RunConfig) -> IterationOptions {
    IterationOptions { tol: cfg.saddle.tol, max_iter: cfg.saddle.max_iter, ..Default::default() }
}

pub fn cmd_kernel_check(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mut rep = Report::new("kernel-check");
    let k = cfg.build_kernel()?;
    rep.info(format!("kernel: {} (n = {}, γ = {})", k.label(), k.dim(), k.order()));

    let ell = check_ellipticity(&k, 2001)?;
    rep.info(format!(
        "k(r) r^(n+2γ) / c_(n,γ) ranges over [{:.6}, {:.6}] (min at r = {:.3e}, max at r = {:.3e})",
        ell.min_ratio, ell.max_ratio, ell.r_at_min, ell.r_at_max
    ));
    rep.check(
        "ellipticity",
        ell.holds,
        format!("worst ratios {:.6} / {:.6}", ell.min_ratio, ell.max_ratio),
        &format!("[λ, Λ] = [{}, {}] with relative slack 1e-9 on 2001 radii in [1e-4, 1e4]", k.lambda(), k.big_lambda()),
        "K belongs to the ellipticity class L0(n, γ, λ, Λ)",
    );

    let conv = sqrt_convexity_scan(&k, 4001);
    rep.check(
        "sqrt-convexity",
        conv.strictly_convex,
        format!("worst normalized second difference {:.3e} at τ = {:.3e}", conv.worst, conv.tau_at_worst),
        "> 1e-12 on 4001 log-spaced τ in [1e-8, 1e8]",
        "τ ↦ k(√τ) strictly convex, so K̄(x,y) > K̄(x,y★) on O × O",
    );

    let k1 = match reduce_to_1d(&k) {
        Ok(k1) => Some(k1),
        Err(e) => {
            rep.numerical_failure = Some(format!("one-dimensional reduction: {e}"));
            None
        }
    };
    let taus = logspace(1e-2, 1e2, 9);
    if let Some(k1) = &k1 {
        reduction_check(&mut rep, &k, k1, &taus)?;
    }

    let c = frac_constant(k.dim(), k.order())?;
    let p = k.dim() as f64 + 2.0 * k.order();
    let mut o = Out { dir: out, report: &mut rep };
    o.write("kernel.csv", |w| {
        writeln!(w, "r,k,ratio,k1")?;
        for r in logspace(1e-3, 1e3, 61) {
            let v = k.eval(r);
            let r1 = k1.as_ref().map_or(f64::NAN, |k1| k1.eval(r));
            writeln!(w, "{:.6e},{:.12e},{:.12e},{:.12e}", r, v, v * r.powf(p) / c, r1)?;
        }
        Ok(())
    })?;
    Ok(rep)
}

fn reduction_check(rep: &mut Report, k: &RadialKernel, k1: &crate::kernels::Kernel1D, taus: &[f64]) -> Result<()> {
    if k.kind() == KernelKind::Fractional {
        let c1 = frac_constant(1, k.order())?;
        let worst = taus
            .iter()
            .map(|&t| (k1.eval(t) / (c1 * t.powf(-1.0 - 2.0 * k.order())) - 1.0).abs())
            .fold(0.0, f64::max);
        rep.check(
            "reduction",
            worst < 1e-6,
            format!("max relative error {} against c_(1,γ)|τ|^(-1-2γ)", sci(worst)),
            "1e-6 relative at 9 τ in [1e-2, 1e2]",
            "the reduction of the fractional kernel is the one-dimensional fractional kernel",
        );
    } else {
        let e1 = k1.check_ellipticity(2001)?;
        rep.check(
            "reduction",
            e1.holds,
            format!("reduced ratios in [{:.6}, {:.6}]", e1.min_ratio, e1.max_ratio),
            &format!("[{}, {}] with relative slack 1e-9", k1.lambda(), k1.big_lambda()),
            "the reduced kernel lies in L0(1, γ, λ, Λ)",
        );
    }
    Ok(())
}

fn nonlinearity_checks(rep: &mut Report, f: &Nonlinearity) -> Result<()> {
    let nr = validate_nonlinearity(f)?;
    let failed: Vec<&str> = nr.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    rep.check(
        "nonlinearity",
        nr.all_pass(),
        if failed.is_empty() { "odd, f(±1) = 0, concave on (0,1), f'(0) > 0, f'(±1) < 0".into() } else { format!("failed: {}", failed.join(", ")) },
        "1e-12 on oddness and zeros, strict signs elsewhere",
        "f is an Allen-Cahn type nonlinearity",
    );
    Ok(())
}

pub fn cmd_layer(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mut rep = Report::new("layer");
    let f = cfg.nonlinearity.build()?;
    nonlinearity_checks(&mut rep, &f)?;
    let k1 = reduce_to_1d(&cfg.build_kernel()?)?;
    let p = solve_layer(&k1, &f, cfg.layer.half_length, cfg.layer.h)?;
    rep.info(format!(
        "flow steps {}, Newton steps {}, tail u ≈ 1 - {:.4} x^{:.3}",
        p.flow_steps, p.newton_steps, p.tail_coef, -p.tail_exponent
    ));
    rep.check(
        "layer-residual",
        p.residual <= 1e-8,
        format!("‖L u - f(u)‖ = {}", sci(p.residual)),
        "1e-8",
        "u0 solves the one-dimensional equation",
    );
    let gamma = k1.order();
    if cfg.kernel.spec == KernelSpec::Fractional && f.name() == "peierls" && (gamma - 0.5).abs() < 1e-12 {
        let err = (0..p.u.len())
            .filter(|&i| p.u.x(i).abs() <= 5.0)
            .map(|i| (p.u.values[i] - std::f64::consts::FRAC_2_PI * p.u.x(i).atan()).abs())
            .fold(0.0, f64::max);
        rep.check(
            "arctan-oracle",
            err < 1e-2,
            format!("sup |u0 - (2/π) arctan x| on [-5, 5] = {}", sci(err)),
            "1e-2",
            "closed-form layer for γ = 1/2 and f = sin(πu)/π",
        );
    }
    let d = check_layer_decay(&p);
    rep.check(
        "decay-u",
        !d.inconclusive && d.pass_u,
        format!("exponent of 1 - u0: {:.4} (expected {})", d.exponent_u, d.expected_u),
        "±0.2, fitted on [L/4, 3L/4]",
        "|u0 - sign x| decays like |x|^(-2γ)",
    );
    rep.check(
        "decay-du",
        !d.inconclusive && d.pass_du,
        format!("exponent of u0': {:.4} (expected {})", d.exponent_du, d.expected_du),
        "±0.2, fitted on [L/4, 3L/4]",
        "u0' decays like |x|^(-1-2γ)",
    );
    let c = check_second_derivative(&p);
    rep.check(
        "concavity",
        c.negative,
        format!("max u0'' on (h, L-1) = {} at x = {:.3}", sci(c.worst), c.worst_x),
        "< 0 at every node",
        "u0 is concave on (0, ∞)",
    );
    rep.check(
        "second-derivative-decay",
        c.decays,
        format!("|u0''(L-1)| = {}, tail fit {} with exponent {:.3}", sci(c.end_value), sci(c.tail_fit), c.tail_exponent),
        "negative tail exponent and end value within 10x of the tail fit",
        "u0'' tends to 0 at infinity",
    );
    Out { dir: out, report: &mut rep }.write("layer.csv", |w| p.write_csv(w))?;
    Ok(rep)
}

pub fn cmd_eigen(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mut rep = Report::new("eigen");
    let op = build_operator(cfg, &planar_kernel(cfg)?)?;
    let opts = EigenOptions::default();
    let study = scaling_study(&op, &cfg.eigen.radii, opts)?;
    for r in &study.rows {
        rep.info(format!("R = {}: λ1 = {:.6e}, λ1 R^(2γ) = {:.6}", r.0, r.1, r.2));
    }
    rep.info(format!("log-log slope of λ1 against R: {:.4}", study.slope));
    rep.check(
        "eigen-scaling",
        study.pass,
        format!("max/min of λ1 R^(2γ) = {:.4}", study.ratio),
        "< 3",
        "λ1,odd(B_R) is comparable to R^(-2γ)",
    );
    rep.check(
        "eigen-monotone",
        study.decreasing,
        "λ1 strictly decreasing in R".to_string(),
        "strict",
        "domain monotonicity of the first odd eigenvalue",
    );
    let mut min_phi = f64::INFINITY;
    let mut worst_res = 0.0f64;
    let mut last = None;
    for &r in &cfg.eigen.radii {
        let e = first_odd_eigenpair(&op, r, opts)?;
        min_phi = e.nodes.iter().map(|&i| e.phi.values[i]).fold(min_phi, f64::min);
        worst_res = worst_res.max(e.residual);
        last = Some(e);
    }
    rep.check(
        "eigen-positivity",
        min_phi > 0.0,
        format!("min φ1 over interior O nodes = {}", sci(min_phi)),
        "> 0",
        "the first odd eigenfunction is positive in O",
    );
    rep.check(
        "eigen-residual",
        worst_res < 1e-6,
        format!("sup |Mφ - λφ| / λ = {}", sci(worst_res)),
        "1e-6",
        "(λ1, φ1) is an eigenpair of the restricted operator",
    );
    let mut o = Out { dir: out, report: &mut rep };
    o.write("eigen_scaling.csv", |w| {
        writeln!(w, "R,lambda1,lambda1_R2gamma")?;
        for r in &study.rows {
            writeln!(w, "{},{:.12e},{:.12e}", r.0, r.1, r.2)?;
        }
        Ok(())
    })?;
    let e = last.unwrap();
    o.write("phi1.csv", |w| e.write_csv(w))?;
    Ok(rep)
}

/// Saddle solution of the configured problem (shared by `saddle` and `verify`).
pub fn solve_saddle(cfg: &RunConfig, op: &LatticeOperator, f: &Nonlinearity) -> Result<(SaddleSolution, crate::layer1d::LayerProfile)> {
    let lay = lattice_layer(op, f, cfg.saddle_layer_half_length())?;
    let sol = saddle_solve(op, f, lay.exterior_rule("U_h"), &cfg.saddle.radii, iteration_options(cfg))?;
    Ok((sol, lay))
}

pub fn cmd_saddle(cfg: &RunConfig, out: &Path, only: &[String]) -> Result<Report> {
    let mut rep = Report::new("saddle");
    let wants = |s: &str| only.is_empty() || only.iter().any(|o| o == s);
    let f = cfg.nonlinearity.build()?;
    nonlinearity_checks(&mut rep, &f)?;
    let op = build_operator(cfg, &planar_kernel(cfg)?)?;
    let grid = op.grid().clone();
    let t0 = Instant::now();
    let (sol, lay) = solve_saddle(cfg, &op, &f)?;
    log::info!("saddle solve finished in {:.1?}", t0.elapsed());
    let sub = &sol.subsolution;
    rep.info(format!(
        "subsolution: ε = {} on B_{} with λ1 = {:.4} ({} halvings)",
        sub.eps, sub.r0, sub.lambda, sub.shrink_steps
    ));
    for l in &sol.log {
        rep.info(format!(
            "R = {}: {} iterations, last change {}, residual {}, sandwich violation {}, Cauchy {}",
            l.radius,
            l.iterations,
            sci(l.last_change),
            sci(l.residual),
            sci(l.max_violation),
            sci(l.cauchy)
        ));
    }
    let viol = sol.log.iter().map(|l| l.max_violation).fold(0.0, f64::max);
    rep.check(
        "sandwich",
        viol <= 1e-10,
        format!("largest violation {}", sci(viol)),
        "1e-10",
        "monotone iterates stay between the sub- and supersolution",
    );
    let res = sol.log.last().unwrap().residual;
    rep.check(
        "residual",
        res < 1e-6,
        format!("sup |L u - f(u)| = {}", sci(res)),
        "1e-6 on unknowns at distance ≥ h from the cone",
        "the limit solves the equation in B_R",
    );
    let n = grid.ball_len(sol.radius).min(grid.solver_len());
    let (lo, hi) = sol.u.values[..n].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    rep.check(
        "range",
        lo > 0.0 && hi < 1.0,
        format!("u ∈ [{}, {}] on interior O nodes", sci(lo), sci(hi)),
        "strict",
        "0 < u < 1 in O",
    );
    let mut o = Out { dir: out, report: &mut rep };
    o.write("u.csv", |w| sol.u.write_csv(w, op.kernel().order()))?;
    o.write("iterations.csv", |w| {
        writeln!(w, "R,iterations,last_change,residual,sandwich_violation,cauchy")?;
        for l in &sol.log {
            writeln!(
                w,
                "{},{},{:.6e},{:.6e},{:.6e},{:.6e}",
                l.radius, l.iterations, l.last_change, l.residual, l.max_violation, l.cauchy
            )?;
        }
        Ok(())
    })?;
    o.write("layer_lattice.csv", |w| lay.write_csv(w))?;

    if wants("asymptotic") {
        let collar = default_collar(sol.radius, grid.h());
        let table = asymptotic_error(&sol, &sol.data, &cfg.saddle.table_radii, collar)?;
        for r in &table.rows {
            rep.info(format!(
                "O \\ B_{}: |u-U| {}, |∇u-∇U| {}, |D²u-D²U| {} over {} nodes",
                r.radius,
                sci(r.value),
                sci(r.gradient),
                sci(r.hessian),
                r.nodes
            ));
        }
        rep.check(
            "asymptotic",
            table.pass(),
            format!("strict decrease (value, gradient, Hessian) = {:?}", table.decreasing),
            &format!("strict decrease across R = {:?}, collar {collar} at the truncation sphere", cfg.saddle.table_radii),
            "u - U, ∇(u - U), D²(u - U) tend to 0 away from the origin",
        );
        Out { dir: out, report: &mut rep }.write("asymptotic_table.csv", |w| table.write_csv(w))?;
    }
    if wants("uniqueness") {
        let t0 = Instant::now();
        let u = uniqueness_probe(&op, &f, &sol, iteration_options(cfg))?;
        log::info!("uniqueness probe finished in {:.1?}", t0.elapsed());
        rep.check(
            "uniqueness",
            u.pass(),
            format!(
                "ascending vs descending {}, perturbed {}, mirrored {}",
                sci(u.ascending_vs_descending),
                sci(u.perturbed),
                sci(u.mirror)
            ),
            "1e-5 sup-norm",
            "the saddle-shaped solution with this exterior datum is unique",
        );
    }
    Ok(rep)
}

pub fn cmd_evolve(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mut rep = Report::new("evolve");
    let f = cfg.nonlinearity.build()?;
    let e = &cfg.evolve;
    let k1 = reduce_to_1d(&cfg.build_kernel()?)?;
    let line = LineOperator::new(&k1, e.half_length, e.h)?;
    let r = liouville_runs(&line, &f, e.xi0, e.amp, e.t_final, e.dt)?;
    rep.check(
        "zero-data",
        r.zero_drift == 0.0,
        format!("sup |v| = {}", sci(r.zero_drift)),
        "exactly 0",
        "zero data stays zero",
    );
    rep.check(
        "constant-data",
        r.constant_error < 1e-6,
        format!("max |v(T) - ξ(T)| = {}", sci(r.constant_error)),
        "1e-6 after Richardson extrapolation in Δt",
        "constant data follow the ODE ξ' = f(ξ)",
    );
    rep.check(
        "barrier",
        r.bump_barrier.pass,
        format!(
            "worst margin {} at t = {} over {} times",
            sci(r.bump_barrier.worst_margin),
            r.bump_barrier.at_time,
            r.bump_barrier.checked
        ),
        "-1e-8",
        "parabolic comparison: v ≥ ξ(t) for data above the level ξ0",
    );
    let monotone = r.core_gap_history.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    rep.check(
        "core-gap",
        monotone && r.core_gap < r.core_gap_history.first().map_or(1.0, |g| g.1.max(1e-300)),
        format!("sup (1 - v) on |x| ≤ L/2 at T: {}", sci(r.core_gap)),
        "nonincreasing in time up to 1e-12",
        "positive solutions are driven to 1",
    );
    let mut o = Out { dir: out, report: &mut rep };
    o.write("history.csv", |w| {
        writeln!(w, "t,min,max,residual")?;
        for h in &r.bump_history {
            writeln!(w, "{:.10},{:.12e},{:.12e},{:.6e}", h.t, h.min, h.max, h.rate)?;
        }
        Ok(())
    })?;
    o.write("core_gap.csv", |w| {
        writeln!(w, "t,gap")?;
        for (t, g) in &r.core_gap_history {
            writeln!(w, "{t:.10},{g:.12e}")?;
        }
        Ok(())
    })?;
    Ok(rep)
}

fn ensemble_check(rep: &mut Report, name: &str, e: &EnsembleReport, min: usize, invariant: &str) {
    rep.check(
        name,
        e.pass(min),
        format!("{} pass, {} fail, {} vacuous", e.count(Verdict::Pass), e.count(Verdict::Fail), e.count(Verdict::Vacuous)),
        &format!(
            "0 failures over ≥ {min} non-vacuous instances; hypotheses to {:e}, conclusion to {:e}",
            verify::HYPOTHESIS_TOL,
            verify::CONCLUSION_TOL
        ),
        invariant,
    );
}

pub fn cmd_verify(cfg: &RunConfig, out: &Path, only: &[String]) -> Result<Report> {
    let mut rep = Report::new("verify");
    let wants = |s: &str| only.is_empty() || only.iter().any(|o| o == s);
    let v = &cfg.verify;
    let seed = cfg.seed;
    let kernel = planar_kernel(cfg)?;
    let gamma = kernel.order();
    let f = cfg.nonlinearity.build()?;
    let mut all = EnsembleReport::default();

    if wants("weak-mp") {
        let grid = Arc::new(TriangularGrid::new(1, v.weak_h, v.weak_s_max, 4.0 * v.weak_h)?);
        let op = LatticeOperator::new(grid, &kernel)?;
        let e = verify::weak_mp_ensemble(&op, &mut rng_for(seed, 0), v.count)?;
        ensemble_check(&mut rep, "weak-mp", &e, v.count, "weak maximum principle for odd functions");
        all.extend(e);
    }
    let narrow = ["narrow-mp", "narrow-scan", "abp"].iter().any(|s| wants(s));
    if narrow {
        let grid = Arc::new(TriangularGrid::new(1, v.narrow_h, v.narrow_s_max, v.narrow_band)?);
        let op = LatticeOperator::new(grid, &kernel)?;
        if wants("narrow-mp") {
            let e = verify::narrow_mp_ensemble(&op, &mut rng_for(seed, 1), v.narrow_eps, v.c_minus, v.count)?;
            ensemble_check(
                &mut rep,
                "narrow-mp",
                &e,
                v.count,
                "maximum principle in narrow sets near the cone with bounded negative potential",
            );
            all.extend(e);
        }
        if wants("narrow-scan") {
            let s = verify::narrow_scan(&op, &mut rng_for(seed, 2), &v.scan_widths, &v.scan_c_minus, v.scan_per_cell)?;
            for (c, w) in &s.thresholds {
                rep.info(format!("narrow scan: ‖c-‖ = {c}: all instances pass for ε ≤ {w}"));
            }
            rep.check(
                "narrow-scan",
                s.monotone,
                format!("thresholds {:?}", s.thresholds),
                "ε̄ nonincreasing in ‖c-‖",
                "narrowness needed grows with the negative potential",
            );
            Out { dir: out, report: &mut rep }.write("narrow_scan.csv", |w| {
                writeln!(w, "c_minus,eps_bar")?;
                for (c, e) in &s.thresholds {
                    writeln!(w, "{c},{e}")?;
                }
                Ok(())
            })?;
        }
        if wants("abp") {
            let a = verify::abp_check(&op, &mut rng_for(seed, 3), &v.abp_widths, v.count)?;
            rep.info(format!("ABP constant (frozen on the first half) C = {:.4}", a.constant));
            rep.check(
                "abp",
                a.pass(gamma),
                format!(
                    "worst ratio {:.4}, strip slope {:.3}, doubling {:.4} over {} instances",
                    a.worst_ratio, a.slope, a.doubling, a.instances
                ),
                &format!("ratio ≤ 1.1, |slope - 2γ| ≤ 0.3 with 2γ = {}, doubling ≤ 2", 2.0 * gamma),
                "sup v ≤ C R(Ω)^(2γ) ‖h‖ for subsolutions in Ω",
            );
            Out { dir: out, report: &mut rep }.write("abp.csv", |w| {
                writeln!(w, "width,narrowness_radius,sup_v")?;
                for (wd, r, s) in &a.strips {
                    writeln!(w, "{wd},{r:.6},{s:.12e}")?;
                }
                Ok(())
            })?;
            all.extend(a.report);
        }
    }

    let needs_u = ["linearized-mp", "uniqueness-mp", "stability"].iter().any(|s| wants(s));
    if needs_u {
        let op = build_operator(cfg, &kernel)?;
        let (sol, _) = solve_saddle(cfg, &op, &f)?;
        rep.info(format!("saddle solution on B_{} (residual {})", sol.radius, sci(sol.log.last().unwrap().residual)));
        if wants("linearized-mp") {
            let e = verify::linearized_mp_ensemble(&op, &f, &sol.u, v.linearized_rho, &mut rng_for(seed, 4), v.count)?;
            ensemble_check(
                &mut rep,
                "linearized-mp",
                &e,
                v.count,
                "maximum principle for the linearized operator L_K - f'(u) in O",
            );
            all.extend(e);
        }
        if wants("uniqueness-mp") {
            let p = uniqueness_probe(&op, &f, &sol, iteration_options(cfg))?;
            let [a, b] = verify::uniqueness_through_mp(&op, &f, &p.ascending, &p.descending, sol.radius);
            rep.check(
                "uniqueness-mp",
                a.verdict == Verdict::Pass && b.verdict == Verdict::Pass,
                format!("u1 - u2: {}, u2 - u1: {}", a.verdict, b.verdict),
                &format!("conclusion to {:e}", verify::CONCLUSION_TOL),
                "two saddle-shaped solutions are ordered both ways",
            );
        }
        if wants("stability") {
            let bumps = verify::random_bumps(&op, &mut rng_for(seed, 5), v.bump_rho, v.bumps);
            let qs: Vec<f64> = bumps.iter().map(|b| verify::stability_form(&op, &f, &sol.u, b)).collect::<Result<_>>()?;
            let qmin = qs.iter().cloned().fold(f64::INFINITY, f64::min);
            rep.check(
                "stability",
                qmin >= 0.0,
                format!("min Q(ξ) = {} over {} bumps", sci(qmin), qs.len()),
                "≥ 0",
                "the saddle solution is stable for odd perturbations",
            );
            Out { dir: out, report: &mut rep }.write("stability.csv", |w| {
                writeln!(w, "bump,Q")?;
                for (i, q) in qs.iter().enumerate() {
                    writeln!(w, "{i},{q:.12e}")?;
                }
                Ok(())
            })?;
        }
    }
    if !all.rows.is_empty() {
        Out { dir: out, report: &mut rep }.write("verdicts.csv", |w| all.write_csv(w))?;
    }
    Ok(rep)
}

pub fn cmd_torsion(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mut rep = Report::new("torsion");
    let n = cfg.torsion_dim();
    let base = cfg.build_kernel()?;
    let k = if base.dim() == n { base } else { base.with_dim(n)? };
    let gamma = k.order();
    let opts = TorsionOptions::default();
    let g = verify::no_bounded_torsion_check(&k, &cfg.torsion.radii, opts)?;
    for (r, m) in &g.rows {
        rep.info(format!("R = {r}: M_R = {m:.6e}"));
    }
    rep.check(
        "torsion-growth",
        g.pass(gamma, 0.1),
        format!("slope of log M_R against log R = {:.4}, increasing = {}", g.slope, g.monotone),
        &format!("2γ ± 0.1 with 2γ = {}", 2.0 * gamma),
        "M_R grows like R^(2γ); no bounded torsion in the whole space",
    );
    let big_r = *cfg.torsion.radii.last().unwrap();
    let s = solve_torsion(&k, big_r, opts)?;
    rep.info(format!("residual sup |L φ - 1| at R = {big_r}: {}", sci(s.residual)));
    let samples: Vec<f64> = (0..40).map(|i| big_r * i as f64 / 40.0).collect();
    if k.kind() == KernelKind::Fractional {
        let err = samples
            .iter()
            .map(|&r| (s.phi(r) / fractional_torsion(n, gamma, big_r, r) - 1.0).abs())
            .fold(0.0, f64::max);
        rep.check(
            "torsion-profile",
            err < 1e-2,
            format!("sup relative error against c (R² - r²)^γ = {}", sci(err)),
            "1e-2 on 40 radii in [0, R)",
            "closed-form torsion of the fractional Laplacian",
        );
    }
    Out { dir: out, report: &mut rep }.write("torsion.csv", |w| {
        writeln!(w, "R,M_R")?;
        for (r, m) in &g.rows {
            writeln!(w, "{r},{m:.12e}")?;
        }
        Ok(())
    })?;
    Out { dir: out, report: &mut rep }.write("torsion_profile.csv", |w| {
        writeln!(w, "r,phi")?;
        for &r in &samples {
            writeln!(w, "{r:.6},{:.12e}", s.phi(r))?;
        }
        Ok(())
    })?;
    Ok(rep)
}

/// Runs `command` with `cfg`, writing artifacts and `report.txt` into `out`.
pub fn execute(command: Command, cfg: &RunConfig, out: &Path, only: &[String]) -> Result<Report> {
    let allowed = command.stages();
    if let Some(bad) = only.iter().find(|o| !allowed.contains(&o.as_str())) {
        return Err(Error::Config(if allowed.is_empty() {
            format!("--only is not supported by `{}` (got `{bad}`)", command.name())
        } else {
            format!("--only `{bad}` is not one of {}", allowed.join(", "))
        }));
    }
    std::fs::create_dir_all(out)?;
    let mut rep = match command {
        Command::KernelCheck => cmd_kernel_check(cfg, out),
        Command::Layer => cmd_layer(cfg, out),
        Command::Eigen => cmd_eigen(cfg, out),
        Command::Saddle => cmd_saddle(cfg, out, only),
        Command::Evolve => cmd_evolve(cfg, out),
        Command::Verify => cmd_verify(cfg, out, only),
        Command::Torsion => cmd_torsion(cfg, out),
    }?;
    rep.files.push("report.txt".into());
    std::fs::write(out.join("report.txt"), rep.render(cfg))?;
    Ok(rep)
}

/// Full front end; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run_cli(&cli) {
        Ok(rep) => {
            for c in &rep.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value);
            }
            if let Some(e) = &rep.numerical_failure {
                eprintln!("error: {e}");
                3
            } else if rep.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_cli(cli: &Cli) -> Result<Report> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("saddlekit-out").join(cli.command.name()));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| execute(cli.command, &cfg, &out, &cli.only))
}
