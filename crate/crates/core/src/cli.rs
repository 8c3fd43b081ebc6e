//! Command-line experiments: `run`, `branches`, `converge` and `check`.
//!
//! Settings come from built-in defaults, an optional preset, an optional
//! `key = value` file and finally command-line flags, later sources winning.
//! `HVI_OUT` overrides the output directory.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use evalexpr::{ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};

use crate::analysis::{AbstractConstants, check_conditions, convergence_study, interpolant_norms};
use crate::error::{Error, Result};
use crate::fem1d::{DiscreteNorms, Mesh1D, TridiagonalSystem, assemble_mass, assemble_stiffness};
use crate::nonsmooth::{PiecewiseQuadraticPotential, Quadratic};
use crate::rothe::{
    BranchPolicy, DEFAULT_HORIZON, DEFAULT_MAX_BRANCHES, InitialDatum, Problem, RotheConfig,
    SolutionTree, make_interpolants,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const OUTPUT_ENV: &str = "HVI_OUT";

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidPotential(_)
        | Error::InvalidMesh(_)
        | Error::InvalidConfig(_)
        | Error::InconsistentConstants(_)
        | Error::DimensionMismatch { .. } => EXIT_CONFIG,
        Error::SingularPivot { .. } | Error::NoSolution { .. } => EXIT_NUMERICAL,
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    J1,
    J2,
    Custom {
        breakpoints: Vec<f64>,
        pieces: Vec<Quadratic>,
    },
}

impl PotentialSpec {
    pub fn build(&self) -> Result<PiecewiseQuadraticPotential> {
        match self {
            Self::J1 => Ok(PiecewiseQuadraticPotential::j1()),
            Self::J2 => Ok(PiecewiseQuadraticPotential::j2()),
            Self::Custom {
                breakpoints,
                pieces,
            } => PiecewiseQuadraticPotential::new(breakpoints.clone(), pieces.clone()),
        }
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: expected a number, got {s:?}")))
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_f64(key, t))
        .collect()
}

/// `c2:c1:c0;c2:c1:c0;…`
pub fn parse_pieces(s: &str) -> Result<Vec<Quadratic>> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let c: Vec<f64> = t
                .split(':')
                .map(|v| parse_f64("pieces", v))
                .collect::<Result<_>>()?;
            match c[..] {
                [c2, c1, c0] => Ok(Quadratic::new(c2, c1, c0)),
                _ => Err(Error::InvalidConfig(format!(
                    "pieces: expected c2:c1:c0, got {t:?}"
                ))),
            }
        })
        .collect()
}

/// Initial datum: `const:<v>` or `expr:<expression in x>` (`pi` is defined,
/// functions use the `math::` prefix, e.g. `expr:2*math::sin(pi*x/2)`).
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Const(f64),
    Expr(String),
}

impl InitialSpec {
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(v) = s.strip_prefix("const:") {
            return Ok(Self::Const(parse_f64("u0", v)?));
        }
        if let Some(e) = s.strip_prefix("expr:") {
            let spec = Self::Expr(e.to_string());
            spec.build()?(0.5);
            return Ok(spec);
        }
        Err(Error::InvalidConfig(format!(
            "u0: expected const:<v> or expr:<f(x)>, got {s:?}"
        )))
    }

    pub fn build(&self) -> Result<Arc<InitialDatum>> {
        match self {
            Self::Const(v) => {
                let v = *v;
                Ok(Arc::new(move |_| v))
            }
            Self::Expr(e) => {
                let tree: Node<DefaultNumericTypes> = evalexpr::build_operator_tree(e)
                    .map_err(|err| Error::InvalidConfig(format!("u0 expression {e:?}: {err}")))?;
                let eval = move |x: f64| -> std::result::Result<f64, String> {
                    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
                    ctx.set_value("x".into(), Value::Float(x))
                        .map_err(|e| e.to_string())?;
                    ctx.set_value("pi".into(), Value::Float(std::f64::consts::PI))
                        .map_err(|e| e.to_string())?;
                    tree.eval_number_with_context(&ctx)
                        .map_err(|e| e.to_string())
                };
                eval(0.5)
                    .map_err(|err| Error::InvalidConfig(format!("u0 expression {e:?}: {err}")))?;
                Ok(Arc::new(move |x| eval(x).unwrap_or(f64::NAN)))
            }
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub potential: PotentialSpec,
    pub nx: usize,
    pub dt: f64,
    pub horizon: f64,
    pub u0: InitialSpec,
    pub policy: BranchPolicy,
    pub max_branches: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            potential: PotentialSpec::J2,
            nx: 100,
            dt: 0.01,
            horizon: DEFAULT_HORIZON,
            u0: InitialSpec::Const(2.0),
            policy: BranchPolicy::All,
            max_branches: DEFAULT_MAX_BRANCHES,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// `paper-j1` / `paper-j2`: `Δt = Δx = 0.01`, `u₀ ≡ 2`, `T = 1`.
    pub fn preset(name: &str) -> Result<Self> {
        let potential = match name {
            "paper-j1" => PotentialSpec::J1,
            "paper-j2" => PotentialSpec::J2,
            _ => return Err(Error::InvalidConfig(format!("unknown preset {name:?}"))),
        };
        Ok(Self {
            potential,
            nx: 100,
            dt: 0.01,
            horizon: 1.0,
            u0: InitialSpec::Const(2.0),
            ..Self::default()
        })
    }

    /// Resolves `key = value` settings; a `preset` key is applied first.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = match pairs.get("preset") {
            Some(p) => Self::preset(p)?,
            None => Self::default(),
        };
        let mut breakpoints: Vec<f64> = Vec::new();
        let mut pieces: Option<Vec<Quadratic>> = None;
        let mut custom = false;
        for (key, value) in pairs {
            let value = value.trim();
            match key.as_str() {
                "preset" => {}
                "potential" => match value {
                    "j1" => cfg.potential = PotentialSpec::J1,
                    "j2" => cfg.potential = PotentialSpec::J2,
                    "custom" => custom = true,
                    _ => return Err(Error::InvalidConfig(format!("unknown potential {value:?}"))),
                },
                "breakpoints" => breakpoints = parse_list(key, value)?,
                "pieces" => pieces = Some(parse_pieces(value)?),
                "nx" => {
                    cfg.nx = value.parse().map_err(|_| {
                        Error::InvalidConfig(format!("nx: expected an integer, got {value:?}"))
                    })?
                }
                "dt" => cfg.dt = parse_f64(key, value)?,
                "T" => cfg.horizon = parse_f64(key, value)?,
                "u0" => cfg.u0 = InitialSpec::parse(value)?,
                "policy" => cfg.policy = value.parse()?,
                "max_branches" => {
                    cfg.max_branches = value.parse().map_err(|_| {
                        Error::InvalidConfig(format!(
                            "max_branches: expected an integer, got {value:?}"
                        ))
                    })?
                }
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "seed" => {
                    cfg.seed = value.parse().map_err(|_| {
                        Error::InvalidConfig(format!("seed: expected an integer, got {value:?}"))
                    })?
                }
                _ => return Err(Error::InvalidConfig(format!("unknown setting {key:?}"))),
            }
        }
        if custom {
            let pieces = pieces
                .ok_or_else(|| Error::InvalidConfig("custom potential needs pieces".into()))?;
            cfg.potential = PotentialSpec::Custom {
                breakpoints,
                pieces,
            };
        }
        if let Ok(dir) = std::env::var(OUTPUT_ENV)
            && !dir.is_empty()
        {
            cfg.output_dir = PathBuf::from(dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 {
            return Err(Error::InvalidConfig(format!(
                "nx must be >= 2, got {}",
                self.nx
            )));
        }
        if self.max_branches == 0 {
            return Err(Error::InvalidConfig("max_branches must be >= 1".into()));
        }
        RotheConfig::new(self.dt, self.horizon)?;
        self.potential.build()?;
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem> {
        let mesh = Mesh1D::uniform(self.nx)?;
        let graph = self.potential.build()?.clarke_subdifferential();
        let mut problem = Problem::new(mesh, graph, self.u0.build()?)
            .with_horizon(self.horizon)
            .with_policy(self.policy);
        problem.max_branches = self.max_branches;
        Ok(problem)
    }
}

/// Parses a `key = value` file; `#` starts a comment.
pub fn read_pairs(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{}:{}: expected key = value",
                path.display(),
                lineno + 1
            ))
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Parser)]
#[command(
    name = "rothe-hvi",
    version,
    about = "Rothe solver for a heat equation with a nonmonotone multivalued boundary law"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write trajectory, norms and surface data.
    Run(ExperimentArgs),
    /// Follow the minimal and maximal boundary branches and their spread.
    Branches(ExperimentArgs),
    /// Errors against a fine-step reference over a list of time steps.
    Converge(ConvergeArgs),
    /// Check the structural assumptions for a set of constants.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// `key = value` settings file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// paper-j1 or paper-j2.
    #[arg(long)]
    pub preset: Option<String>,
    /// j1, j2 or custom.
    #[arg(long)]
    pub potential: Option<String>,
    /// Breakpoints of a custom potential, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub breakpoints: Option<String>,
    /// Pieces of a custom potential, `c2:c1:c0;…`.
    #[arg(long, allow_hyphen_values = true)]
    pub pieces: Option<String>,
    #[arg(long)]
    pub nx: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long = "T")]
    pub horizon: Option<String>,
    /// const:<v> or expr:<f(x)>.
    #[arg(long, allow_hyphen_values = true)]
    pub u0: Option<String>,
    /// all, min_boundary, max_boundary or first.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub max_branches: Option<String>,
    #[arg(long, short = 'o')]
    pub output_dir: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Also write mass.csv and stiffness.csv.
    #[arg(long)]
    pub dump_matrices: bool,
}

impl ExperimentArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut pairs = match &self.config {
            Some(path) => read_pairs(path)?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("preset", &self.preset),
            ("potential", &self.potential),
            ("breakpoints", &self.breakpoints),
            ("pieces", &self.pieces),
            ("nx", &self.nx),
            ("dt", &self.dt),
            ("T", &self.horizon),
            ("u0", &self.u0),
            ("policy", &self.policy),
            ("max_branches", &self.max_branches),
            ("output_dir", &self.output_dir),
            ("seed", &self.seed),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                pairs.insert(k.to_string(), v.clone());
            }
        }
        ExperimentConfig::from_pairs(&pairs)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Time steps to compare, comma separated.
    #[arg(long, default_value = "0.04,0.02,0.01,0.005")]
    pub taus: String,
    /// Time step of the reference run.
    #[arg(long, default_value_t = 0.0025)]
    pub reference: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// `key = value` file with alpha, beta, a, b, c, iota_norm, p_norm, d,
    /// sigma, m1, m2, m3.
    pub constants: PathBuf,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_matrix_csv(sys: &TridiagonalSystem, w: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["row", "lower", "diag", "upper"])?;
    for i in 0..sys.size() {
        let (lo, d, up) = sys.row(i);
        w.write_record([i.to_string(), lo.to_string(), d.to_string(), up.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `x, t, u` rows over the Dirichlet node and all free nodes.
pub fn write_surface_csv(
    mesh: &Mesh1D,
    tau: f64,
    snapshots: &[Vec<f64>],
    w: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["x", "t", "u"])?;
    for (k, snap) in snapshots.iter().enumerate() {
        let t = (k as f64 * tau).to_string();
        w.write_record(["0".to_string(), t.clone(), "0".to_string()])?;
        for (x, u) in mesh.nodes().zip(snap) {
            w.write_record([x.to_string(), t.clone(), u.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

const PLOT_SCRIPT: &str = "\
set datafile separator ','
set xlabel 'x'
set ylabel 't'
set zlabel 'u'
set ticslevel 0
splot 'surface.csv' using 1:2:3 every ::1 with points pointtype 7 pointsize 0.3 notitle
pause -1
";

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub levels: usize,
    pub max_width: usize,
    pub multiplicity: bool,
    pub truncated: bool,
}

fn solve_checked(problem: &Problem, dt: f64, policy: BranchPolicy) -> Result<SolutionTree> {
    let tree = problem.solve_with_policy(dt, policy)?;
    if !tree.is_complete() {
        return Err(Error::NoSolution {
            level: tree.levels.len(),
        });
    }
    Ok(tree)
}

pub fn cmd_run(cfg: &ExperimentConfig, dump_matrices: bool) -> Result<RunSummary> {
    let problem = cfg.problem()?;
    let tree = solve_checked(&problem, cfg.dt, cfg.policy)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;

    tree.write_csv(create(dir, "trajectory.csv")?)?;
    let snaps = tree.primary_snapshots();
    let norms = DiscreteNorms::new(&problem.mesh);
    let (pc, pl) = make_interpolants(snaps.clone(), cfg.dt);
    interpolant_norms(&norms, &pc, &pl)?.write_csv(create(dir, "norms.csv")?)?;
    write_surface_csv(&problem.mesh, cfg.dt, &snaps, create(dir, "surface.csv")?)?;
    create(dir, "plot.gp")?.write_all(PLOT_SCRIPT.as_bytes())?;
    if dump_matrices {
        write_matrix_csv(&assemble_mass(&problem.mesh), create(dir, "mass.csv")?)?;
        write_matrix_csv(
            &assemble_stiffness(&problem.mesh),
            create(dir, "stiffness.csv")?,
        )?;
    }
    Ok(RunSummary {
        levels: tree.levels.len(),
        max_width: tree.max_width(),
        multiplicity: tree.has_multiplicity(),
        truncated: tree.is_truncated(),
    })
}

/// Per-level boundary values of the min and max branches.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadRow {
    pub t: f64,
    pub min_boundary: f64,
    pub max_boundary: f64,
}

impl SpreadRow {
    pub fn spread(&self) -> f64 {
        self.max_boundary - self.min_boundary
    }
}

pub fn cmd_branches(cfg: &ExperimentConfig) -> Result<Vec<SpreadRow>> {
    let problem = cfg.problem()?;
    let (min, max) = rayon::join(
        || solve_checked(&problem, cfg.dt, BranchPolicy::MinBoundary),
        || solve_checked(&problem, cfg.dt, BranchPolicy::MaxBoundary),
    );
    let (min, max) = (min?, max?);
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    min.write_csv(create(dir, "trajectory_min.csv")?)?;
    max.write_csv(create(dir, "trajectory_max.csv")?)?;

    let rows: Vec<SpreadRow> = min
        .primary_path()
        .iter()
        .zip(max.primary_path())
        .enumerate()
        .map(|(k, (a, b))| SpreadRow {
            t: k as f64 * cfg.dt,
            min_boundary: a.boundary_value(),
            max_boundary: b.boundary_value(),
        })
        .collect();
    let mut w = csv::Writer::from_writer(create(dir, "spread.csv")?);
    w.write_record(["t", "alpha_n_min", "alpha_n_max", "spread"])?;
    for r in &rows {
        w.write_record([
            r.t.to_string(),
            r.min_boundary.to_string(),
            r.max_boundary.to_string(),
            r.spread().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

pub fn cmd_converge(
    cfg: &ExperimentConfig,
    taus: &[f64],
    reference: f64,
) -> Result<crate::analysis::ConvergenceTable> {
    if taus.is_empty() {
        return Err(Error::InvalidConfig("no time steps given".into()));
    }
    for &tau in taus.iter().chain([&reference]) {
        RotheConfig::new(tau, cfg.horizon)?;
    }
    let table = convergence_study(&cfg.problem()?, taus, reference)?;
    fs::create_dir_all(&cfg.output_dir)?;
    table.write_csv(create(&cfg.output_dir, "convergence.csv")?)?;
    Ok(table)
}

pub fn parse_constants(pairs: &BTreeMap<String, String>) -> Result<AbstractConstants> {
    let get = |k: &str| pairs.get(k).map(|v| parse_f64(k, v)).transpose();
    let required =
        |k: &str| get(k)?.ok_or_else(|| Error::InconsistentConstants(format!("missing {k}")));
    for key in pairs.keys() {
        if ![
            "alpha",
            "beta",
            "a",
            "b",
            "c",
            "iota_norm",
            "p_norm",
            "d",
            "sigma",
            "m1",
            "m2",
            "m3",
        ]
        .contains(&key.as_str())
        {
            return Err(Error::InvalidConfig(format!("unknown constant {key:?}")));
        }
    }
    let d_sigma = match (get("d")?, get("sigma")?) {
        (Some(d), Some(s)) => Some((d, s)),
        (None, None) => None,
        _ => {
            return Err(Error::InconsistentConstants(
                "d and sigma must be given together".into(),
            ));
        }
    };
    let k = AbstractConstants {
        alpha: required("alpha")?,
        beta: get("beta")?.unwrap_or(0.0),
        a: get("a")?,
        b: get("b")?,
        c: required("c")?,
        iota_norm: required("iota_norm")?,
        p_norm: get("p_norm")?,
        d_sigma,
        m1: get("m1")?,
        m2: get("m2")?,
        m3: get("m3")?,
    };
    k.validate()?;
    Ok(k)
}

pub fn cmd_check(path: &Path) -> Result<String> {
    let constants = parse_constants(&read_pairs(path)?)?;
    Ok(check_conditions(&constants)?.to_string())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let s = cmd_run(&cfg, args.dump_matrices)?;
            println!("levels: {}", s.levels);
            println!("max branches per level: {}", s.max_width);
            println!(
                "multiplicity: {}",
                if s.multiplicity { "yes" } else { "no" }
            );
            if s.truncated {
                println!("truncated: yes (max_branches = {})", cfg.max_branches);
            }
            println!("output: {}", cfg.output_dir.display());
        }
        Command::Branches(args) => {
            let cfg = args.resolve()?;
            let rows = cmd_branches(&cfg)?;
            let max = rows.iter().map(SpreadRow::spread).fold(0.0, f64::max);
            println!("max spread: {max}");
            println!("output: {}", cfg.output_dir.display());
        }
        Command::Converge(args) => {
            let cfg = args.experiment.resolve()?;
            let taus = parse_list("taus", &args.taus)?;
            let table = cmd_converge(&cfg, &taus, args.reference)?;
            println!(
                "{:>10} {:>14} {:>14} {:>8}",
                "tau", "err_CH", "err_L2V", "branches"
            );
            for r in &table.rows {
                println!(
                    "{:>10} {:>14.6e} {:>14.6e} {:>8}",
                    r.tau, r.err_ch, r.err_l2v, r.branch_count
                );
            }
            for w in &table.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Check(args) => print!("{}", cmd_check(&args.constants)?),
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(kv: &[(&str, &str)]) -> BTreeMap<String, String> {
        kv.iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn presets_pin_reference_settings() {
        let c = ExperimentConfig::preset("paper-j1").unwrap();
        assert_eq!((c.nx, c.dt, c.horizon), (100, 0.01, 1.0));
        assert_eq!(c.u0, InitialSpec::Const(2.0));
        assert_eq!(c.potential, PotentialSpec::J1);
        assert!(ExperimentConfig::preset("paper-j3").is_err());
    }

    #[test]
    fn non_dividing_step_rejected() {
        let err = ExperimentConfig::from_pairs(&pairs(&[
            ("potential", "j2"),
            ("dt", "0.3"),
            ("T", "1.0"),
        ]));
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
        assert_eq!(exit_code(&err.unwrap_err()), EXIT_CONFIG);
    }

    #[test]
    fn custom_potential_parses() {
        let c = ExperimentConfig::from_pairs(&pairs(&[
            ("potential", "custom"),
            ("breakpoints", "0, 1"),
            ("pieces", "0:0:0; 0.5:0:0; 0:0:0.5"),
        ]))
        .unwrap();
        assert_eq!(
            c.potential.build().unwrap(),
            PiecewiseQuadraticPotential::j1()
        );
        let bad = ExperimentConfig::from_pairs(&pairs(&[
            ("potential", "custom"),
            ("breakpoints", "0"),
            ("pieces", "0:0:0;0:0:1"),
        ]));
        assert!(matches!(bad, Err(Error::InvalidPotential(_))));
    }

    #[test]
    fn initial_expression() {
        let u0 = InitialSpec::parse("expr:2*math::sin(pi*x/2)")
            .unwrap()
            .build()
            .unwrap();
        assert!((u0(1.0) - 2.0).abs() < 1e-15);
        assert!(InitialSpec::parse("expr:2*y").is_err());
        assert!(InitialSpec::parse("two").is_err());
    }

    #[test]
    fn constants_file_keys() {
        let k =
            parse_constants(&pairs(&[("alpha", "1"), ("c", "0.3"), ("iota_norm", "1")])).unwrap();
        assert_eq!(k.beta, 0.0);
        let sigma2 = parse_constants(&pairs(&[
            ("alpha", "1"),
            ("c", "0.3"),
            ("iota_norm", "1"),
            ("d", "1"),
            ("sigma", "2"),
        ]));
        assert!(matches!(sigma2, Err(Error::InconsistentConstants(_))));
        assert!(parse_constants(&pairs(&[("alpha", "1")])).is_err());
    }
}
