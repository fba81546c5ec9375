//! Batch front-end. Every command writes CSV profiles, `summary.json` and
//! `log.txt` into the output directory.
//!
//! Exit codes: 0 success, 1 configuration error, 2 non-convergence,
//! 3 missing prerequisite file.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, CriticalCoupling, StringOptions, UnitMoments};
use crate::discretization::{make_grid, Field, Grid, GridKind};
use crate::error::Error;
use crate::ground_states::{self, SolveOptions};
use crate::io::{self, FlatJson};
use crate::variational::{self, Params, State};

/// Components with sup-norm above this count as present.
const NONZERO_SUP: f64 = 1e-2;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Missing(String),
    NonConvergence(String),
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Runtime(_) => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Missing(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Missing(m) => write!(f, "missing prerequisite: {m}"),
            CliError::NonConvergence(m) => write!(f, "did not converge: {m}"),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) | Error::Parse(m) | Error::InvalidSize(m) => CliError::Config(m),
            Error::InvalidDimension { .. } => CliError::Config(e.to_string()),
            Error::NonConvergence(m) => CliError::NonConvergence(m),
            other => CliError::Runtime(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "skdv", version, about = "Ground states of the bi-harmonic coupled Schrödinger–KdV system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scalar ground state V₂ at λ₂; writes V2.csv.
    Scalar(CommonArgs),
    /// Critical coupling Λ and its minimiser h̃; writes V2.csv, htilde.csv.
    Lambda(CommonArgs),
    /// Coupled ground state; writes ground.csv (coord,u,v) and V2.csv.
    Ground(CommonArgs),
    /// Local-min / saddle classification of (0, V₂).
    Classify(CommonArgs),
    /// Trial state t(V₂,V₂) and the λ₂ sweep; writes sweep.csv.
    Thm8(CommonArgs),
    /// String-method mountain-pass estimate between (0, V₂) and a ground state.
    Mp(CommonArgs),
    /// Standing-travelling wave at time t from a state file; writes wave.csv.
    Reconstruct(CommonArgs),
}

/// Flags override values from `--config`; both override the defaults.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// `key = value` configuration file (keys as the long flags, `-` or `_`)
    #[arg(long, allow_hyphen_values = true)]
    config: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long, allow_hyphen_values = true)]
    out: Option<String>,
    /// [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    lambda1: Option<String>,
    /// [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    lambda2: Option<String>,
    /// Coupling β [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Coupling as a multiple of Λ at the configured λ₂; overrides --beta
    #[arg(long, allow_hyphen_values = true)]
    beta_rel: Option<String>,
    /// Space dimension N [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    dim: Option<String>,
    /// Grid kind, line or radial [default: line for N = 1, radial otherwise]
    #[arg(long, allow_hyphen_values = true)]
    kind: Option<String>,
    /// Grid nodes [default: 2048]
    #[arg(long, allow_hyphen_values = true)]
    n: Option<String>,
    /// Half-length L of the line box or radius R [default: 40]
    #[arg(long = "L", allow_hyphen_values = true)]
    extent: Option<String>,
    /// [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    /// Sup-norm tolerance on the Riesz gradient [default: 1e-9]
    #[arg(long, allow_hyphen_values = true)]
    tol_grad: Option<String>,
    /// [default: 1e-12]
    #[arg(long, allow_hyphen_values = true)]
    tol_energy: Option<String>,
    /// [default: 20000]
    #[arg(long, allow_hyphen_values = true)]
    max_iters: Option<String>,
    /// [default: 3]
    #[arg(long, allow_hyphen_values = true)]
    multistart: Option<String>,
    /// ground: initialisation, `default` or `semi-trivial` [default: default]
    #[arg(long, allow_hyphen_values = true)]
    init: Option<String>,
    /// classify: random tangent directions [default: 200]
    #[arg(long, allow_hyphen_values = true)]
    samples: Option<String>,
    /// thm8: λ₂ range lo:hi, doubled from lo [default: 0.000244140625:4096]
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
    /// thm8: bisection steps [default: 20]
    #[arg(long, allow_hyphen_values = true)]
    bisections: Option<String>,
    /// mp: beads on the string [default: 17]
    #[arg(long, allow_hyphen_values = true)]
    beads: Option<String>,
    /// mp: string iterations [default: 300]
    #[arg(long, allow_hyphen_values = true)]
    string_iters: Option<String>,
    /// mp: ground-state CSV (coord,u,v) used as the far endpoint
    #[arg(long, allow_hyphen_values = true)]
    ground: Option<String>,
    /// reconstruct: state CSV (coord,u,v)
    #[arg(long, allow_hyphen_values = true)]
    state: Option<String>,
    /// reconstruct: time t [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    time: Option<String>,
}

impl CommonArgs {
    fn pairs(&self) -> Vec<(&'static str, &String)> {
        let all = [
            ("out", &self.out),
            ("lambda1", &self.lambda1),
            ("lambda2", &self.lambda2),
            ("beta", &self.beta),
            ("beta_rel", &self.beta_rel),
            ("dim", &self.dim),
            ("kind", &self.kind),
            ("n", &self.n),
            ("L", &self.extent),
            ("seed", &self.seed),
            ("tol_grad", &self.tol_grad),
            ("tol_energy", &self.tol_energy),
            ("max_iters", &self.max_iters),
            ("multistart", &self.multistart),
            ("init", &self.init),
            ("samples", &self.samples),
            ("sweep", &self.sweep),
            ("bisections", &self.bisections),
            ("beads", &self.beads),
            ("string_iters", &self.string_iters),
            ("ground", &self.ground),
            ("state", &self.state),
            ("time", &self.time),
        ];
        all.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k, v))).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    Default,
    SemiTrivial,
}

/// Effective configuration of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub out: PathBuf,
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta: f64,
    pub beta_rel: Option<f64>,
    pub dim: usize,
    pub kind: Option<GridKind>,
    pub n: usize,
    pub extent: f64,
    pub seed: u64,
    pub tol_grad: f64,
    pub tol_energy: f64,
    pub max_iters: usize,
    pub multistart: usize,
    pub init: InitKind,
    pub samples: usize,
    pub sweep: (f64, f64),
    pub bisections: usize,
    pub beads: usize,
    pub string_iters: usize,
    pub ground: Option<PathBuf>,
    pub state: Option<PathBuf>,
    pub time: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out: PathBuf::from("out"),
            lambda1: 1.0,
            lambda2: 1.0,
            beta: 0.0,
            beta_rel: None,
            dim: 1,
            kind: None,
            n: 2048,
            extent: 40.0,
            seed: 0,
            tol_grad: 1e-9,
            tol_energy: 1e-12,
            max_iters: 20_000,
            multistart: 3,
            init: InitKind::Default,
            samples: 200,
            sweep: (2f64.powi(-12), 4096.0),
            bisections: 20,
            beads: 17,
            string_iters: 300,
            ground: None,
            state: None,
            time: 0.0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.trim().parse().map_err(|_| CliError::Config(format!("{key}: cannot parse `{value}`")))
}

impl RunConfig {
    /// Sets one key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "out" => self.out = PathBuf::from(v),
            "lambda1" => self.lambda1 = parse_num(&key, v)?,
            "lambda2" => self.lambda2 = parse_num(&key, v)?,
            "beta" => self.beta = parse_num(&key, v)?,
            "beta_rel" => self.beta_rel = Some(parse_num(&key, v)?),
            "dim" => self.dim = parse_num(&key, v)?,
            "kind" => self.kind = Some(v.parse().map_err(|e: Error| CliError::Config(e.to_string()))?),
            "n" => self.n = parse_num(&key, v)?,
            "L" | "l" | "extent" => self.extent = parse_num(&key, v)?,
            "seed" => self.seed = parse_num(&key, v)?,
            "tol_grad" => self.tol_grad = parse_num(&key, v)?,
            "tol_energy" => self.tol_energy = parse_num(&key, v)?,
            "max_iters" => self.max_iters = parse_num(&key, v)?,
            "multistart" => self.multistart = parse_num(&key, v)?,
            "init" => {
                self.init = match v {
                    "default" => InitKind::Default,
                    "semi-trivial" | "semi_trivial" => InitKind::SemiTrivial,
                    _ => return Err(CliError::Config(format!("init: expected default or semi-trivial, got `{v}`"))),
                }
            }
            "samples" => self.samples = parse_num(&key, v)?,
            "sweep" => {
                let (lo, hi) =
                    v.split_once(':').ok_or_else(|| CliError::Config(format!("sweep: expected lo:hi, got `{v}`")))?;
                self.sweep = (parse_num(&key, lo)?, parse_num(&key, hi)?);
            }
            "bisections" => self.bisections = parse_num(&key, v)?,
            "beads" => self.beads = parse_num(&key, v)?,
            "string_iters" => self.string_iters = parse_num(&key, v)?,
            "ground" => self.ground = Some(PathBuf::from(v)),
            "state" => self.state = Some(PathBuf::from(v)),
            "time" => self.time = parse_num(&key, v)?,
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_file_text(&mut self, text: &str) -> CliResult<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn grid_kind(&self) -> GridKind {
        self.kind.unwrap_or(if self.dim == 1 { GridKind::Line } else { GridKind::Radial })
    }

    pub fn grid(&self) -> CliResult<Grid> {
        Ok(make_grid(self.grid_kind(), self.n, self.extent, self.dim)?)
    }

    /// Parameters with β as configured; `beta_rel` is resolved by the caller.
    pub fn params(&self) -> CliResult<Params> {
        Ok(Params::new(self.lambda1, self.lambda2, self.beta, self.dim)?)
    }

    pub fn solve_options(&self) -> CliResult<SolveOptions> {
        let o = SolveOptions {
            max_iters: self.max_iters,
            tol_grad: self.tol_grad,
            tol_energy: self.tol_energy,
            multistart: self.multistart,
            seed: self.seed,
            ..SolveOptions::default()
        };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.params()?;
        self.grid()?;
        self.solve_options()?;
        if let Some(r) = self.beta_rel {
            if !r.is_finite() {
                return Err(CliError::Config("beta_rel must be finite".into()));
            }
        }
        if !self.time.is_finite() {
            return Err(CliError::Config("time must be finite".into()));
        }
        Ok(())
    }

    /// Writes every effective setting under `config.` keys.
    pub fn echo(&self, j: &mut FlatJson) {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        j.insert("config.out", self.out.display().to_string());
        j.insert("config.lambda1", self.lambda1);
        j.insert("config.lambda2", self.lambda2);
        j.insert("config.beta", self.beta);
        j.insert("config.beta_rel", self.beta_rel);
        j.insert("config.dim", self.dim);
        j.insert("config.kind", self.grid_kind().as_str());
        j.insert("config.n", self.n);
        j.insert("config.L", self.extent);
        j.insert("config.seed", self.seed);
        j.insert("config.tol_grad", self.tol_grad);
        j.insert("config.tol_energy", self.tol_energy);
        j.insert("config.max_iters", self.max_iters);
        j.insert("config.multistart", self.multistart);
        j.insert("config.init", if self.init == InitKind::Default { "default" } else { "semi-trivial" });
        j.insert("config.samples", self.samples);
        j.insert("config.sweep_lo", self.sweep.0);
        j.insert("config.sweep_hi", self.sweep.1);
        j.insert("config.bisections", self.bisections);
        j.insert("config.beads", self.beads);
        j.insert("config.string_iters", self.string_iters);
        j.insert("config.ground", path(&self.ground));
        j.insert("config.state", path(&self.state));
        j.insert("config.time", self.time);
    }
}

/// `(cos(λ₁t)u, sin(λ₁t)u, v(· − λ₂t))`, the standing-travelling wave built
/// from a stationary state. Line grids only.
pub fn reconstruct_wave(s: &State, t: f64, lambda1: f64, lambda2: f64) -> crate::Result<(Field, Field, Field)> {
    let g = s.grid();
    if g.kind() != GridKind::Line {
        return Err(Error::RequiresLineGrid);
    }
    let phase = lambda1 * t;
    let travelled = g.spectral_shift(&s.v, lambda2 * t)?;
    Ok((s.u.scale(phase.cos()), s.u.scale(phase.sin()), travelled))
}

struct Bundle {
    dir: PathBuf,
    summary: FlatJson,
    log: Vec<String>,
}

impl Bundle {
    fn new(cfg: &RunConfig, command: &str) -> CliResult<Bundle> {
        fs::create_dir_all(&cfg.out)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", cfg.out.display())))?;
        let mut summary = FlatJson::new();
        summary.insert("command", command);
        cfg.echo(&mut summary);
        Ok(Bundle { dir: cfg.out.clone(), summary, log: vec![format!("command {command}")] })
    }

    fn log(&mut self, line: impl Into<String>) {
        self.log.push(line.into());
    }

    fn file(&self, name: &str) -> CliResult<BufWriter<File>> {
        let path = self.dir.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Runtime(Error::Io(format!("{}: {e}", path.display()))))
    }

    fn field(&mut self, name: &str, f: &Field) -> CliResult<()> {
        io::write_field_csv(self.file(name)?, f)?;
        self.log(format!("wrote {name}"));
        Ok(())
    }

    fn state(&mut self, name: &str, s: &State) -> CliResult<()> {
        io::write_state_csv(self.file(name)?, s)?;
        self.log(format!("wrote {name}"));
        Ok(())
    }

    fn finish(self) -> CliResult<()> {
        let mut w = self.file("summary.json")?;
        w.write_all(self.summary.render().as_bytes()).map_err(Error::from)?;
        w.flush().map_err(Error::from)?;
        let mut l = self.file("log.txt")?;
        for line in &self.log {
            writeln!(l, "{line}").map_err(Error::from)?;
        }
        l.flush().map_err(Error::from)?;
        Ok(())
    }
}

fn scalar_state(cfg: &RunConfig, g: &Grid, b: &mut Bundle) -> CliResult<(Field, ground_states::SolveReport)> {
    let o = cfg.solve_options()?;
    let (v2, r) = ground_states::solve_scalar_ground(cfg.lambda2, g, &o)?;
    b.log(format!("scalar solve: converged={} iters={} phi={}", r.converged, r.iters, io::fmt_f64(r.final_energy)));
    Ok((v2, r))
}

fn critical(cfg: &RunConfig, v2: &Field, b: &mut Bundle) -> CliResult<CriticalCoupling> {
    let cc = analysis::lambda_threshold(cfg.lambda1, v2, &cfg.solve_options()?)?;
    b.log(format!("critical coupling: Lambda={} iters={}", io::fmt_f64(cc.lambda), cc.iters));
    b.summary.insert("Lambda", cc.lambda);
    Ok(cc)
}

fn resolved_params(cfg: &RunConfig, cc: Option<&CriticalCoupling>) -> CliResult<Params> {
    let p = cfg.params()?;
    Ok(match (cfg.beta_rel, cc) {
        (Some(r), Some(cc)) => p.with_beta(r * cc.lambda),
        _ => p,
    })
}

fn phi_v2(p: &Params, v2: &Field) -> CliResult<f64> {
    Ok(variational::energy(p, &State::semi_trivial(v2))?.phi)
}

fn cmd_scalar(cfg: &RunConfig, b: &mut Bundle) -> CliResult<bool> {
    let g = cfg.grid()?;
    let (v2, r) = scalar_state(cfg, &g, b)?;
    b.field("V2.csv", &v2)?;
    let p = cfg.params()?;
    let e = variational::energy(&p, &State::semi_trivial(&v2))?;
    let s = &mut b.summary;
    s.insert("converged", r.converged);
    s.insert("iters", r.iters);
    s.insert("energy", e.phi);
    s.insert("energy_from_cubic", e.cubic_abs / 12.0);
    s.insert("nehari_rel_defect", (e.norm_v_sq - 0.5 * e.cubic_abs).abs() / e.norm_v_sq);
    s.insert("grad_norm", r.grad_norm);
    s.insert("residual_sup", r.residual_sup);
    s.insert("changes_sign", r.changes_sign);
    s.insert("min_value", v2.min_value());
    s.insert("max_value", v2.max_value());
    Ok(r.converged)
}

fn cmd_lambda(cfg: &RunConfig, b: &mut Bundle) -> CliResult<bool> {
    let g = cfg.grid()?;
    let (v2, r) = scalar_state(cfg, &g, b)?;
    let cc = critical(cfg, &v2, b)?;
    b.field("V2.csv", &v2)?;
    b.field("htilde.csv", &cc.minimizer)?;
    let p = cfg.params()?;
    let phi = phi_v2(&p, &v2)?;
    b.summary.insert("phi_v2", phi);
    b.summary.insert("lambda_iters", cc.iters);
    b.summary.insert("scalar_converged", r.converged);
    Ok(r.converged)
}

fn cmd_ground(cfg: &RunConfig, b: &mut Bundle) -> CliResult<bool> {
    let g = cfg.grid()?;
    let o = cfg.solve_options()?;
    let (v2, rs) = scalar_state(cfg, &g, b)?;
    let cc = critical(cfg, &v2, b)?;
    let p = resolved_params(cfg, Some(&cc))?;
    let inits = match cfg.init {
        InitKind::Default => ground_states::default_initializations(&v2, p.lambda2, &o),
        InitKind::SemiTrivial => vec![State::semi_trivial(&v2)],
    };
    let (s, r) = ground_states::solve_coupled_ground_from(&p, &inits, &o)?;
    b.log(format!("coupled solve: converged={} iters={} start={}", r.converged, r.iters, r.start_index));
    b.state("ground.csv", &s)?;
    b.field("V2.csv", &v2)?;
    let e = variational::energy(&p, &s)?;
    let phi_v2 = phi_v2(&p, &v2)?;
    let (usup, vsup) = (s.u.sup_norm(), s.v.sup_norm());
    let j = &mut b.summary;
    j.insert("beta", p.beta);
    j.insert("converged", r.converged && rs.converged);
    j.insert("iters", r.iters);
    j.insert("phi", e.phi);
    j.insert("phi_v2", phi_v2);
    j.insert("phi_below_phi_v2", e.phi < phi_v2);
    j.insert("u_sup", usup);
    j.insert("v_sup", vsup);
    j.insert("both_components_nonzero", usup > NONZERO_SUP && vsup > NONZERO_SUP);
    j.insert("semi_trivial", usup == 0.0);
    j.insert("psi_rel", e.psi(p.beta).abs() / e.norm_sq);
    j.insert("on_manifold", e.on_manifold(p.beta));
    j.insert("grad_norm", r.grad_norm);
    j.insert("residual_sup", r.residual_sup);
    j.insert("nehari_floor", r.nehari_floor);
    j.insert("t_history_max", r.t_history_max);
    j.insert("sign_fix_applied", r.sign_fix_applied);
    j.insert("sign_fix_t", r.sign_fix_t);
    j.insert("sign_fix_t_moment", r.sign_fix_t_moment);
    j.insert("changes_sign", r.changes_sign);
    j.insert("start_index", r.start_index);
    Ok(r.converged && rs.converged)
}

fn cmd_classify(cfg: &RunConfig, b: &mut Bundle) -> CliResult<bool> {
    let g = cfg.grid()?;
    let (v2, rs) = scalar_state(cfg, &g, b)?;
    let cc = critical(cfg, &v2, b)?;
    let p = resolved_params(cfg, Some(&cc))?;
    let c = analysis::classify_semitrivial(&p, &v2, &cc, cfg.samples, cfg.seed)?;
    b.log(format!("classification: {}", c.verdict));
    b.field("htilde.csv", &cc.minimizer)?;
    let phi = phi_v2(&p, &v2)?;
    let j = &mut b.summary;
    j.insert("beta", p.beta);
    j.insert("phi_v2", phi);
    j.insert("verdict", c.verdict.as_str());
    j.insert("witness_value", c.witness_value);
    j.insert("witness_expected", (c.lambda_crit - c.beta) * c.witness_weight);
    j.insert("tangent_samples", c.tangent_samples);
    j.insert("positive_samples", c.positive_samples);
    j.insert("min_sample", c.min_sample);
    j.insert("tangency_defect", c.tangency_defect);
    Ok(rs.converged)
}

fn cmd_thm8(cfg: &RunConfig, b: &mut Bundle) -> CliResult<bool> {
    let g = cfg.grid()?;
    let o = cfg.solve_options()?;
    let (v, rv) = ground_states::solve_scalar_ground(1.0, &g, &o)?;
    b.log(format!("unit profile: converged={} iters={}", rv.converged, rv.iters));
    let v2 = ground_states::rescale_ground(&v, cfg.lambda2)?;
    let cc = critical(cfg, &v2, b)?;
    let p = resolved_params(cfg, Some(&cc))?;
    let m = UnitMoments::from_field(&v);
    let grid = analysis::geometric_grid(cfg.sweep.0, cfg.sweep.1)?;
    let sweep = analysis::theorem8_sweep(&m, &p, &grid, cfg.bisections)?;
    let mut w = b.file("sweep.csv")?;
    let opt = |x: Option<f64>| x.map(io::fmt_f64).unwrap_or_default();
    writeln!(w, "lambda2,t_star,phi_w,phi_v2,holds").map_err(Error::from)?;
    for r in &sweep.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            io::fmt_f64(r.lambda2),
            opt(r.t_star),
            opt(r.phi_w),
            io::fmt_f64(r.phi_v2),
            r.inequality_holds
        )
        .map_err(Error::from)?;
    }
    w.flush().map_err(Error::from)?;
    b.log("wrote sweep.csv");
    let here = analysis::theorem8_candidate(&m, &p)?;
    let check = analysis::theorem8_grid_check(&here, &p, &v).ok();
    let j = &mut b.summary;
    j.insert("beta", p.beta);
    j.insert("moment_A", m.quad);
    j.insert("moment_B", m.quartic);
    j.insert("moment_C", m.cubic);
    j.insert("moment_C_abs", m.cubic_abs);
    j.insert("lambda2_threshold", sweep.threshold);
    j.insert("monotonicity_violations", sweep.monotonicity_violations);
    j.insert("t_star", here.t_star);
    j.insert("phi_w", here.phi_w);
    j.insert("phi_v2", here.phi_v2);
    j.insert("inequality_holds", here.inequality_holds);
    j.insert("phi_w_grid", check.as_ref().map(|c| c.phi_grid));
    j.insert("phi_w_rel_defect", check.as_ref().map(|c| c.phi_rel_defect));
    j.insert("psi_w_rel", check.as_ref().map(|c| c.psi_rel));
    Ok(rv.converged)
}

fn require(path: &Option<PathBuf>, flag: &str) -> CliResult<PathBuf> {
    let p = path.clone().ok_or_else(|| CliError::Missing(format!("--{flag} is required")))?;
    if !p.is_file() {
        return Err(CliError::Missing(format!("{} does not exist", p.display())));
    }
    Ok(p)
}

fn read_state(path: &Path, g: &Grid) -> CliResult<State> {
    let f = File::open(path).map_err(|e| CliError::Missing(format!("{}: {e}", path.display())))?;
    io::read_state_csv(BufReader::new(f), g).map_err(|e| CliError::Missing(format!("{}: {e}", path.display())))
}

fn cmd_mp(cfg: &RunConfig, b: &mut Bundle) -> CliResult<bool> {
    let path = require(&cfg.ground, "ground")?;
    let g = cfg.grid()?;
    let o = cfg.solve_options()?;
    let far = read_state(&path, &g)?;
    let (v2, _) = scalar_state(cfg, &g, b)?;
    let cc = critical(cfg, &v2, b)?;
    let p = resolved_params(cfg, Some(&cc))?;
    let near = variational::nehari_project(&p, &State::semi_trivial(&v2))?.1;
    let so = StringOptions { beads: cfg.beads, max_iters: cfg.string_iters, ..StringOptions::default() };
    let mp = analysis::mountain_pass_estimate(&p, &near, &far, &so, &o).map_err(|e| match e {
        Error::OffManifold { .. } => {
            CliError::Missing(format!("{} is not on the Nehari manifold for these parameters: {e}", path.display()))
        }
        other => other.into(),
    })?;
    b.log(format!("string: iters={} converged={} climb={}", mp.string_iters, mp.converged, mp.climb_iters));
    b.state("saddle.csv", &mp.argmax_state)?;
    let mut w = b.file("beads.csv")?;
    writeln!(w, "index,phi").map_err(Error::from)?;
    for (i, e) in mp.bead_energies.iter().enumerate() {
        writeln!(w, "{i},{}", io::fmt_f64(*e)).map_err(Error::from)?;
    }
    w.flush().map_err(Error::from)?;
    let phi = phi_v2(&p, &v2)?;
    let ok = mp.converged || mp.saddle_grad_norm <= so.climb_tol;
    let j = &mut b.summary;
    j.insert("beta", p.beta);
    j.insert("phi_v2", phi);
    j.insert("level_m", mp.level_m);
    j.insert("level_above_phi_v2", mp.level_m > phi);
    j.insert("endpoint_a_energy", mp.endpoint_energies.0);
    j.insert("endpoint_b_energy", mp.endpoint_energies.1);
    j.insert("bead_count", mp.bead_count);
    j.insert("argmax_index", mp.argmax_index);
    j.insert("saddle_grad_norm", mp.saddle_grad_norm);
    j.insert("string_iters", mp.string_iters);
    j.insert("climb_iters", mp.climb_iters);
    j.insert("converged", ok);
    Ok(ok)
}

fn cmd_reconstruct(cfg: &RunConfig, b: &mut Bundle) -> CliResult<bool> {
    let path = require(&cfg.state, "state")?;
    let g = cfg.grid()?;
    if g.kind() != GridKind::Line {
        return Err(CliError::Config("reconstruct requires a line grid".into()));
    }
    let s = read_state(&path, &g)?;
    let (fr, fi, gv) = reconstruct_wave(&s, cfg.time, cfg.lambda1, cfg.lambda2)?;
    let mut w = b.file("wave.csv")?;
    writeln!(w, "coord,f_real,f_imag,g").map_err(Error::from)?;
    for i in 0..g.len() {
        writeln!(
            w,
            "{},{},{},{}",
            io::fmt_f64(g.nodes()[i]),
            io::fmt_f64(fr.values()[i]),
            io::fmt_f64(fi.values()[i]),
            io::fmt_f64(gv.values()[i])
        )
        .map_err(Error::from)?;
    }
    w.flush().map_err(Error::from)?;
    b.log("wrote wave.csv");
    let modulus = fr
        .values()
        .iter()
        .zip(fi.values())
        .zip(s.u.values())
        .fold(0.0f64, |m, ((a, c), u)| m.max((a.hypot(*c) - u.abs()).abs()));
    b.summary.insert("modulus_defect", modulus);
    Ok(true)
}

fn build_config(args: &CommonArgs) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_file_text(&text)?;
    }
    for (k, v) in args.pairs() {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// A command body; returns whether its iterative parts converged.
type CommandFn = fn(&RunConfig, &mut Bundle) -> CliResult<bool>;

fn dispatch(cmd: &Command) -> CliResult<()> {
    let (name, args, run): (&str, &CommonArgs, CommandFn) = match cmd {
        Command::Scalar(a) => ("scalar", a, cmd_scalar),
        Command::Lambda(a) => ("lambda", a, cmd_lambda),
        Command::Ground(a) => ("ground", a, cmd_ground),
        Command::Classify(a) => ("classify", a, cmd_classify),
        Command::Thm8(a) => ("thm8", a, cmd_thm8),
        Command::Mp(a) => ("mp", a, cmd_mp),
        Command::Reconstruct(a) => ("reconstruct", a, cmd_reconstruct),
    };
    let cfg = build_config(args)?;
    let mut bundle = Bundle::new(&cfg, name)?;
    let converged = run(&cfg, &mut bundle)?;
    bundle.finish()?;
    if converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!("{name}: see {}", cfg.out.join("summary.json").display())))
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("skdv: {e}");
            e.exit_code()
        }
    }
}
