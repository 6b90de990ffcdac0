//! Run configuration: a flat `key = value` format grouped in `[sections]`.
//!
//! ```text
//! [kernel]
//! kind = fractional
//! gamma = 0.5
//!
//! [nonlinearity]
//! name = allen-cahn
//! ```
//!
//! Every key has a default, so an empty file is the desk-scale preset.
//! Unknown sections or keys are rejected with the offending name.

use crate::error::{Error, Result};
use crate::kernels::RadialKernel;
use crate::layer1d::Nonlinearity;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

/// Closed forms accepted by `kind = expression`, all of the shape
/// k(r) = c_{n,γ} r^{-n-2γ} g(r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpressionForm {
    /// g = a.
    Power { a: f64 },
    /// g = a + b e^{-μ r}.
    PowerExp { a: f64, b: f64, mu: f64 },
    /// g = a + b cos(ω r).
    PowerCos { a: f64, b: f64, omega: f64 },
}

impl ExpressionForm {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            ExpressionForm::Power { a } => a,
            ExpressionForm::PowerExp { a, b, mu } => a + b * (-mu * r).exp(),
            ExpressionForm::PowerCos { a, b, omega } => a + b * (omega * r).cos(),
        }
    }

    /// Exact (inf, sup) of the modulation over r > 0.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            ExpressionForm::Power { a } => (a, a),
            ExpressionForm::PowerExp { a, b, .. } => (a.min(a + b), a.max(a + b)),
            ExpressionForm::PowerCos { a, b, .. } => (a - b.abs(), a + b.abs()),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            ExpressionForm::Power { .. } => "power",
            ExpressionForm::PowerExp { .. } => "power-exp",
            ExpressionForm::PowerCos { .. } => "power-cos",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Fractional,
    /// Two-column CSV (r, k), lines starting with `#` or a non-numeric header skipped.
    Table { file: PathBuf },
    Expression(ExpressionForm),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub spec: KernelSpec,
    /// Ambient dimension of the kernel; defaults to 2m.
    pub n: Option<usize>,
    pub gamma: f64,
    /// Declared ellipticity bounds (required for tables, inferred for expressions).
    pub lambda: Option<f64>,
    pub big_lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearitySpec {
    Named(String),
    /// a_0, a_1, ... of Σ a_k u^k.
    Polynomial(Vec<f64>),
}

impl NonlinearitySpec {
    pub fn build(&self) -> Result<Nonlinearity> {
        match self {
            NonlinearitySpec::Named(n) => Nonlinearity::by_name(n),
            NonlinearitySpec::Polynomial(c) => Nonlinearity::polynomial(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub m: usize,
    pub h: f64,
    pub s_max: f64,
    pub band: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleConfig {
    pub radii: Vec<f64>,
    /// Radii of the asymptotic table.
    pub table_radii: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// Half-length of the lattice layer used as exterior data; defaults to 2 S_max.
    pub layer_half_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerConfig {
    pub half_length: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenConfig {
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub half_length: f64,
    pub h: f64,
    pub xi0: f64,
    pub amp: f64,
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub count: usize,
    pub bumps: usize,
    pub weak_h: f64,
    pub weak_s_max: f64,
    pub narrow_h: f64,
    pub narrow_s_max: f64,
    pub narrow_band: f64,
    pub narrow_eps: f64,
    pub c_minus: f64,
    pub scan_widths: Vec<f64>,
    pub scan_c_minus: Vec<f64>,
    pub scan_per_cell: usize,
    pub abp_widths: Vec<f64>,
    pub linearized_rho: f64,
    pub bump_rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorsionConfig {
    pub radii: Vec<f64>,
    /// Dimension of the torsion problem; defaults to the kernel dimension.
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kernel: KernelConfig,
    pub nonlinearity: NonlinearitySpec,
    pub grid: GridConfig,
    pub saddle: SaddleConfig,
    pub layer: LayerConfig,
    pub eigen: EigenConfig,
    pub evolve: EvolveConfig,
    pub verify: VerifyConfig,
    pub torsion: TorsionConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    /// m = 1, γ = 1/2, Allen–Cahn, h = 0.2, S_max = 20, radii {5, 10, 15, 20}.
    fn default() -> Self {
        RunConfig {
            kernel: KernelConfig { spec: KernelSpec::Fractional, n: None, gamma: 0.5, lambda: None, big_lambda: None },
            nonlinearity: NonlinearitySpec::Named("allen-cahn".into()),
            grid: GridConfig { m: 1, h: 0.2, s_max: 20.0, band: 2.0 },
            saddle: SaddleConfig {
                radii: vec![5.0, 10.0, 15.0, 20.0],
                table_radii: vec![5.0, 10.0, 15.0],
                tol: 1e-10,
                max_iter: 10_000,
                layer_half_length: None,
            },
            layer: LayerConfig { half_length: 20.0, h: 0.05 },
            eigen: EigenConfig { radii: vec![2.0, 4.0, 8.0] },
            evolve: EvolveConfig { half_length: 10.0, h: 0.1, xi0: 0.5, amp: 0.3, t_final: 5.0, dt: 0.02 },
            verify: VerifyConfig {
                count: 100,
                bumps: 50,
                weak_h: 0.25,
                weak_s_max: 4.0,
                narrow_h: 0.02,
                narrow_s_max: 1.0,
                narrow_band: 0.2,
                narrow_eps: 0.05,
                c_minus: 1.0,
                scan_widths: vec![0.05, 0.1, 0.2, 0.4, 0.8],
                scan_c_minus: vec![1.0, 30.0, 100.0, 300.0, 1000.0],
                scan_per_cell: 10,
                abp_widths: vec![0.1, 0.2, 0.4],
                linearized_rho: 6.0,
                bump_rho: 9.0,
            },
            torsion: TorsionConfig { radii: vec![1.0, 2.0, 4.0, 8.0], n: None },
            seed: 1,
            out: None,
        }
    }
}

/// Raw `section.key -> (value, line)` map; keys are consumed as they are read.
struct Raw {
    entries: BTreeMap<String, (String, usize)>,
}

fn bad(key: &str, line: usize, msg: impl fmt::Display) -> Error {
    Error::Config(format!("`{key}` (line {line}): {msg}"))
}

impl Raw {
    fn parse(text: &str) -> Result<Self> {
        const SECTIONS: [&str; 10] =
            ["kernel", "nonlinearity", "grid", "saddle", "layer", "eigen", "evolve", "verify", "torsion", "run"];
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (no, raw) in text.lines().enumerate() {
            let no = no + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {no}: unterminated section header `{line}`")))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::Config(format!("line {no}: unknown section `[{name}]`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {no}: expected `key = value`, got `{line}`")))?;
            let sec = section
                .as_deref()
                .ok_or_else(|| Error::Config(format!("line {no}: key `{}` outside any section", k.trim())))?;
            let key = format!("{sec}.{}", k.trim());
            if entries.insert(key.clone(), (v.trim().to_string(), no)).is_some() {
                return Err(Error::Config(format!("line {no}: duplicate key `{key}`")));
            }
        }
        Ok(Raw { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.take(key).map(|(v, _)| v)
    }

    fn num<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.opt_num(key)?.unwrap_or(default))
    }

    fn opt_num<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|e| bad(key, line, format!("`{v}`: {e}"))),
        }
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some((v, line)) => v
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| bad(key, line, format!("`{}`: {e}", x.trim()))))
                .collect(),
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, (_, line))) => Err(Error::Config(format!("line {line}: unknown key `{k}`"))),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("`{key}` must be positive and finite, got {v}")))
    }
}

fn increasing(key: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.iter().any(|x| !(*x > 0.0)) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("`{key}` must be a nonempty increasing list of positive numbers")));
    }
    Ok(())
}

impl RunConfig {
    /// Parses `text`; relative table paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let d = RunConfig::default();
        let mut raw = Raw::parse(text)?;

        let gamma = raw.num("kernel.gamma", d.kernel.gamma)?;
        let kind = raw.take("kernel.kind").unwrap_or(("fractional".into(), 0));
        let spec = match kind.0.as_str() {
            "fractional" => KernelSpec::Fractional,
            "table" => {
                let file = raw
                    .string("kernel.file")
                    .ok_or_else(|| Error::Config("`kernel.file` is required for kind = table".into()))?;
                KernelSpec::Table { file: base.join(file) }
            }
            "expression" => {
                let form = raw
                    .string("kernel.form")
                    .ok_or_else(|| Error::Config("`kernel.form` is required for kind = expression".into()))?;
                let a = raw.num("kernel.a", 1.0)?;
                let b = raw.num("kernel.b", 0.0)?;
                KernelSpec::Expression(match form.as_str() {
                    "power" => ExpressionForm::Power { a },
                    "power-exp" => ExpressionForm::PowerExp { a, b, mu: raw.num("kernel.mu", 1.0)? },
                    "power-cos" => ExpressionForm::PowerCos { a, b, omega: raw.num("kernel.omega", 1.0)? },
                    other => {
                        return Err(Error::Config(format!(
                            "`kernel.form`: unknown form `{other}` (expected power, power-exp or power-cos)"
                        )))
                    }
                })
            }
            other => return Err(bad("kernel.kind", kind.1, format!("unknown kind `{other}`"))),
        };
        let kernel = KernelConfig {
            spec,
            n: raw.opt_num("kernel.n")?,
            gamma,
            lambda: raw.opt_num("kernel.lambda")?,
            big_lambda: raw.opt_num("kernel.Lambda")?,
        };

        let nonlinearity = match (raw.take("nonlinearity.name"), raw.take("nonlinearity.coeffs")) {
            (Some(_), Some((_, line))) => {
                return Err(bad("nonlinearity.coeffs", line, "give either `name` or `coeffs`, not both"))
            }
            (Some((n, _)), None) => NonlinearitySpec::Named(n),
            (None, Some((c, line))) => NonlinearitySpec::Polynomial(
                c.split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|e| bad("nonlinearity.coeffs", line, e)))
                    .collect::<Result<_>>()?,
            ),
            (None, None) => d.nonlinearity.clone(),
        };

        let grid = GridConfig {
            m: raw.num("grid.m", d.grid.m)?,
            h: raw.num("grid.h", d.grid.h)?,
            s_max: raw.num("grid.s_max", d.grid.s_max)?,
            band: raw.num("grid.band", d.grid.band)?,
        };
        let saddle = SaddleConfig {
            radii: raw.list("saddle.radii", &d.saddle.radii)?,
            table_radii: raw.list("saddle.table_radii", &d.saddle.table_radii)?,
            tol: raw.num("saddle.tol", d.saddle.tol)?,
            max_iter: raw.num("saddle.max_iter", d.saddle.max_iter)?,
            layer_half_length: raw.opt_num("saddle.layer_half_length")?,
        };
        let layer = LayerConfig {
            half_length: raw.num("layer.half_length", d.layer.half_length)?,
            h: raw.num("layer.h", d.layer.h)?,
        };
        let eigen = EigenConfig { radii: raw.list("eigen.radii", &d.eigen.radii)? };
        let e = &d.evolve;
        let evolve = EvolveConfig {
            half_length: raw.num("evolve.half_length", e.half_length)?,
            h: raw.num("evolve.h", e.h)?,
            xi0: raw.num("evolve.xi0", e.xi0)?,
            amp: raw.num("evolve.amp", e.amp)?,
            t_final: raw.num("evolve.t_final", e.t_final)?,
            dt: raw.num("evolve.dt", e.dt)?,
        };
        let v = &d.verify;
        let verify = VerifyConfig {
            count: raw.num("verify.count", v.count)?,
            bumps: raw.num("verify.bumps", v.bumps)?,
            weak_h: raw.num("verify.weak_h", v.weak_h)?,
            weak_s_max: raw.num("verify.weak_s_max", v.weak_s_max)?,
            narrow_h: raw.num("verify.narrow_h", v.narrow_h)?,
            narrow_s_max: raw.num("verify.narrow_s_max", v.narrow_s_max)?,
            narrow_band: raw.num("verify.narrow_band", v.narrow_band)?,
            narrow_eps: raw.num("verify.narrow_eps", v.narrow_eps)?,
            c_minus: raw.num("verify.c_minus", v.c_minus)?,
            scan_widths: raw.list("verify.scan_widths", &v.scan_widths)?,
            scan_c_minus: raw.list("verify.scan_c_minus", &v.scan_c_minus)?,
            scan_per_cell: raw.num("verify.scan_per_cell", v.scan_per_cell)?,
            abp_widths: raw.list("verify.abp_widths", &v.abp_widths)?,
            linearized_rho: raw.num("verify.linearized_rho", v.linearized_rho)?,
            bump_rho: raw.num("verify.bump_rho", v.bump_rho)?,
        };
        let torsion =
            TorsionConfig { radii: raw.list("torsion.radii", &d.torsion.radii)?, n: raw.opt_num("torsion.n")? };
        let seed = raw.num("run.seed", d.seed)?;
        let out = raw.string("run.out").map(|p| base.join(p));
        raw.finish()?;

        let cfg = RunConfig { kernel, nonlinearity, grid, saddle, layer, eigen, evolve, verify, torsion, seed, out };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Range checks; also confirms that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        let k = &self.kernel;
        if !(k.gamma > 0.0 && k.gamma < 1.0) {
            return Err(Error::Config(format!("`kernel.gamma` must lie in (0,1), got {}", k.gamma)));
        }
        if k.n == Some(0) {
            return Err(Error::Config("`kernel.n` must be positive".into()));
        }
        if let KernelSpec::Table { file } = &k.spec {
            if !file.is_file() {
                return Err(Error::Config(format!("`kernel.file`: {} does not exist", file.display())));
            }
            if k.lambda.is_none() || k.big_lambda.is_none() {
                return Err(Error::Config("`kernel.lambda` and `kernel.Lambda` are required for kind = table".into()));
            }
        }
        if let (Some(l), Some(u)) = (k.lambda, k.big_lambda) {
            if !(l > 0.0 && u >= l) {
                return Err(Error::Config(format!("`kernel.lambda`/`kernel.Lambda` need 0 < λ ≤ Λ, got ({l}, {u})")));
            }
        }
        if let NonlinearitySpec::Named(n) = &self.nonlinearity {
            if n != "allen-cahn" && n != "peierls" {
                return Err(Error::Config(format!("`nonlinearity.name`: unknown builtin `{n}`")));
            }
        }
        let g = &self.grid;
        if g.m != 1 {
            return Err(Error::Config(format!("`grid.m` = {}: the lattice solver supports m = 1 only", g.m)));
        }
        positive("grid.h", g.h)?;
        positive("grid.s_max", g.s_max)?;
        if !(g.band >= 0.0) {
            return Err(Error::Config("`grid.band` must be nonnegative".into()));
        }
        increasing("saddle.radii", &self.saddle.radii)?;
        increasing("saddle.table_radii", &self.saddle.table_radii)?;
        if *self.saddle.radii.last().unwrap() > g.s_max + 1e-12 {
            return Err(Error::Config("`saddle.radii` must not exceed `grid.s_max`".into()));
        }
        positive("saddle.tol", self.saddle.tol)?;
        increasing("eigen.radii", &self.eigen.radii)?;
        if *self.eigen.radii.last().unwrap() > g.s_max + 1e-12 {
            return Err(Error::Config("`eigen.radii` must not exceed `grid.s_max`".into()));
        }
        positive("layer.h", self.layer.h)?;
        positive("layer.half_length", self.layer.half_length)?;
        let e = &self.evolve;
        for (key, v) in [("evolve.h", e.h), ("evolve.half_length", e.half_length), ("evolve.t_final", e.t_final), ("evolve.dt", e.dt)] {
            positive(key, v)?;
        }
        if !(e.xi0 > 0.0 && e.xi0 < 1.0) {
            return Err(Error::Config(format!("`evolve.xi0` must lie in (0,1), got {}", e.xi0)));
        }
        let v = &self.verify;
        for (key, x) in [
            ("verify.weak_h", v.weak_h),
            ("verify.weak_s_max", v.weak_s_max),
            ("verify.narrow_h", v.narrow_h),
            ("verify.narrow_s_max", v.narrow_s_max),
            ("verify.narrow_eps", v.narrow_eps),
            ("verify.linearized_rho", v.linearized_rho),
            ("verify.bump_rho", v.bump_rho),
        ] {
            positive(key, x)?;
        }
        increasing("verify.scan_widths", &v.scan_widths)?;
        increasing("verify.scan_c_minus", &v.scan_c_minus)?;
        increasing("verify.abp_widths", &v.abp_widths)?;
        increasing("torsion.radii", &self.torsion.radii)?;
        Ok(())
    }

    /// Dimension of the kernel (defaults to 2m).
    pub fn kernel_dim(&self) -> usize {
        self.kernel.n.unwrap_or(2 * self.grid.m)
    }

    /// Builds the kernel in its declared dimension.
    pub fn build_kernel(&self) -> Result<RadialKernel> {
        let k = &self.kernel;
        let n = self.kernel_dim();
        match &k.spec {
            KernelSpec::Fractional => RadialKernel::fractional(n, k.gamma),
            KernelSpec::Table { file } => {
                let (r, v) = read_table(file)?;
                RadialKernel::from_table(n, k.gamma, k.lambda.unwrap(), k.big_lambda.unwrap(), &r, &v)
            }
            KernelSpec::Expression(form) => {
                let (lo, hi) = form.range();
                let lambda = k.lambda.unwrap_or(lo);
                let big_lambda = k.big_lambda.unwrap_or(hi);
                if !(lambda > 0.0) {
                    return Err(Error::Config(format!(
                        "`kernel.lambda`: the modulation of {} reaches {lo}; declare a positive lower bound",
                        form.name()
                    )));
                }
                let f = *form;
                RadialKernel::modulated(n, k.gamma, lambda, big_lambda, move |r| f.eval(r), form.name())
            }
        }
    }

    /// Canonical text of the resolved configuration (valid input for `parse`).
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let k = &self.kernel;
        let _ = writeln!(s, "[kernel]");
        match &k.spec {
            KernelSpec::Fractional => {
                let _ = writeln!(s, "kind = fractional");
            }
            KernelSpec::Table { file } => {
                let _ = writeln!(s, "kind = table\nfile = {}", file.display());
            }
            KernelSpec::Expression(f) => {
                let _ = writeln!(s, "kind = expression\nform = {}", f.name());
                let _ = match *f {
                    ExpressionForm::Power { a } => writeln!(s, "a = {a}"),
                    ExpressionForm::PowerExp { a, b, mu } => writeln!(s, "a = {a}\nb = {b}\nmu = {mu}"),
                    ExpressionForm::PowerCos { a, b, omega } => writeln!(s, "a = {a}\nb = {b}\nomega = {omega}"),
                };
            }
        }
        let _ = writeln!(s, "n = {}\ngamma = {}", self.kernel_dim(), k.gamma);
        if let Some(l) = k.lambda {
            let _ = writeln!(s, "lambda = {l}");
        }
        if let Some(l) = k.big_lambda {
            let _ = writeln!(s, "Lambda = {l}");
        }
        let _ = match &self.nonlinearity {
            NonlinearitySpec::Named(n) => writeln!(s, "\n[nonlinearity]\nname = {n}"),
            NonlinearitySpec::Polynomial(c) => writeln!(s, "\n[nonlinearity]\ncoeffs = {}", list(c)),
        };
        let g = &self.grid;
        let _ = writeln!(s, "\n[grid]\nm = {}\nh = {}\ns_max = {}\nband = {}", g.m, g.h, g.s_max, g.band);
        let sd = &self.saddle;
        let _ = writeln!(
            s,
            "\n[saddle]\nradii = {}\ntable_radii = {}\ntol = {:e}\nmax_iter = {}\nlayer_half_length = {}",
            list(&sd.radii),
            list(&sd.table_radii),
            sd.tol,
            sd.max_iter,
            self.saddle_layer_half_length()
        );
        let _ = writeln!(s, "\n[layer]\nhalf_length = {}\nh = {}", self.layer.half_length, self.layer.h);
        let _ = writeln!(s, "\n[eigen]\nradii = {}", list(&self.eigen.radii));
        let e = &self.evolve;
        let _ = writeln!(
            s,
            "\n[evolve]\nhalf_length = {}\nh = {}\nxi0 = {}\namp = {}\nt_final = {}\ndt = {}",
            e.half_length, e.h, e.xi0, e.amp, e.t_final, e.dt
        );
        let v = &self.verify;
        let _ = writeln!(
            s,
            "\n[verify]\ncount = {}\nbumps = {}\nweak_h = {}\nweak_s_max = {}\nnarrow_h = {}\nnarrow_s_max = {}\n\
             narrow_band = {}\nnarrow_eps = {}\nc_minus = {}\nscan_widths = {}\nscan_c_minus = {}\nscan_per_cell = {}\n\
             abp_widths = {}\nlinearized_rho = {}\nbump_rho = {}",
            v.count,
            v.bumps,
            v.weak_h,
            v.weak_s_max,
            v.narrow_h,
            v.narrow_s_max,
            v.narrow_band,
            v.narrow_eps,
            v.c_minus,
            list(&v.scan_widths),
            list(&v.scan_c_minus),
            v.scan_per_cell,
            list(&v.abp_widths),
            v.linearized_rho,
            v.bump_rho
        );
        let _ = writeln!(s, "\n[torsion]\nradii = {}\nn = {}", list(&self.torsion.radii), self.torsion_dim());
        let _ = writeln!(s, "\n[run]\nseed = {}", self.seed);
        s
    }

    pub fn saddle_layer_half_length(&self) -> f64 {
        self.saddle.layer_half_length.unwrap_or(2.0 * self.grid.s_max)
    }

    pub fn torsion_dim(&self) -> usize {
        self.torsion.n.unwrap_or_else(|| self.kernel_dim())
    }

    /// SHA-256 of the canonical text, the table contents (if any) and the tool version.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        if let KernelSpec::Table { file } = &self.kernel.spec {
            if let Ok(bytes) = std::fs::read(file) {
                h.update(&bytes);
            }
        }
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Reads a two-column (r, k) table.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let (mut r, mut k) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if rec.len() != 2 {
            return Err(Error::Config(format!("{} row {}: expected two columns", path.display(), i + 1)));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                r.push(a);
                k.push(b);
            }
            // a header row is allowed before the data
            _ if i == 0 => continue,
            _ => return Err(Error::Config(format!("{} row {}: non-numeric entry", path.display(), i + 1))),
        }
    }
    Ok((r, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_preset() {
        let c = RunConfig::parse("", Path::new(".")).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn canonical_round_trips() {
        let text = "[kernel]\nkind = expression\nform = power-cos\na = 1\nb = 0.5\n[grid]\nh = 0.25\ns_max = 10\n[saddle]\nradii = 5, 10\n";
        let c = RunConfig::parse(text, Path::new(".")).unwrap();
        let again = RunConfig::parse(&c.canonical(), Path::new(".")).unwrap();
        assert_eq!(c.canonical(), again.canonical());
        assert_eq!(c.hash(), again.hash());
        assert_ne!(c.hash(), RunConfig::default().hash());
    }

    #[test]
    fn offending_key_is_named() {
        let e = RunConfig::parse("[grid]\nhh = 0.1\n", Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("grid.hh"), "{e}");
        let e = RunConfig::parse("[grid]\nh = abc\n", Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("grid.h"), "{e}");
        let e = RunConfig::parse("[kernel]\ngamma = 1.5\n", Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("kernel.gamma"), "{e}");
        assert!(RunConfig::parse("[bogus]\n", Path::new(".")).is_err());
        assert!(RunConfig::parse("h = 1\n", Path::new(".")).is_err());
    }
}
