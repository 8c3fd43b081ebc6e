//! Backward-Euler (Rothe) stepping for the discretized boundary inclusion
//!
//! ```text
//! (M/τ + K) α^k + e_n ξ^k = M α^{k-1}/τ + f_τ^k,    ξ^k ∈ ∂j(α_n^k)
//! ```
//!
//! Every step is solved completely: each segment of the subdifferential graph
//! is tried in turn and the solutions that land on their own segment are
//! kept. Branching steps grow a [`SolutionTree`].

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem1d::{Mesh1D, TridiagonalSystem, assemble_mass, assemble_stiffness};
use crate::nonsmooth::{Segment, SubdifferentialGraph};

pub const DEFAULT_HORIZON: f64 = 1.0;
pub const DEFAULT_MAX_BRANCHES: usize = 64;
pub const DEFAULT_DEDUPE_TOL: f64 = 1e-10;
/// Tolerance of the "does the solution land on its segment" test.
pub const ACCEPT_TOL: f64 = 1e-12;

const SIMPSON_PANELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotheConfig {
    pub tau: f64,
    pub steps: usize,
    pub horizon: f64,
    pub max_branches: usize,
    pub dedupe_tol: f64,
}

impl RotheConfig {
    pub fn new(tau: f64, horizon: f64) -> Result<Self> {
        if tau.is_nan() || tau <= 0.0 || horizon.is_nan() || horizon <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "time step and horizon must be positive (tau = {tau}, T = {horizon})"
            )));
        }
        let steps = (horizon / tau).round();
        if steps < 1.0 || (steps * tau - horizon).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "time step {tau} does not divide horizon {horizon}"
            )));
        }
        Ok(Self {
            tau,
            steps: steps as usize,
            horizon,
            max_branches: DEFAULT_MAX_BRANCHES,
            dedupe_tol: DEFAULT_DEDUPE_TOL,
        })
    }

    pub fn with_max_branches(mut self, max_branches: usize) -> Self {
        self.max_branches = max_branches.max(1);
        self
    }

    pub fn with_dedupe_tol(mut self, tol: f64) -> Self {
        self.dedupe_tol = tol;
        self
    }

    /// Time of level `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }
}

/// Time-dependent right-hand side, given by its action vector on the basis.
pub type Forcing = dyn Fn(f64) -> Vec<f64> + Send + Sync;
pub type InitialDatum = dyn Fn(f64) -> f64 + Send + Sync;

/// Mean of `f` over `((k-1)τ, kτ)` by composite Simpson's rule.
pub fn clement_average<F>(f: F, tau: f64, k: usize) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    assert!(k >= 1, "time levels start at 1");
    let a = (k - 1) as f64 * tau;
    let h = tau / SIMPSON_PANELS as f64;
    let mut acc: Vec<f64> = Vec::new();
    for i in 0..=SIMPSON_PANELS {
        let w = match i {
            0 | SIMPSON_PANELS => 1.0,
            i if i % 2 == 1 => 4.0,
            _ => 2.0,
        };
        let v = f(a + i as f64 * h);
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        for (s, x) in acc.iter_mut().zip(&v) {
            *s += w * x;
        }
    }
    // (h/3)·Σ / τ
    let scale = h / 3.0 / tau;
    acc.iter_mut().for_each(|s| *s *= scale);
    acc
}

/// Nodal interpolation at the free nodes; the Dirichlet node is skipped.
pub fn project_initial<F: Fn(f64) -> f64>(mesh: &Mesh1D, u0: F) -> Vec<f64> {
    mesh.nodes().map(u0).collect()
}

/// Which graph segment produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    Initial,
    Affine(usize),
    Vertical(usize),
}

impl CaseTag {
    fn for_segment(index: usize, seg: &Segment) -> Self {
        if seg.is_vertical() {
            CaseTag::Vertical(index)
        } else {
            CaseTag::Affine(index)
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseTag::Initial => write!(f, "init"),
            CaseTag::Affine(i) => write!(f, "A{i}"),
            CaseTag::Vertical(i) => write!(f, "V{i}"),
        }
    }
}

impl FromStr for CaseTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("bad case tag {s:?}"));
        if s == "init" {
            return Ok(CaseTag::Initial);
        }
        let (kind, idx) = s.split_at_checked(1).ok_or_else(bad)?;
        let idx: usize = idx.parse().map_err(|_| bad())?;
        match kind {
            "A" => Ok(CaseTag::Affine(idx)),
            "V" => Ok(CaseTag::Vertical(idx)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSolution {
    pub state: Vec<f64>,
    pub case_tag: CaseTag,
    pub boundary_flux: f64,
}

impl StepSolution {
    pub fn boundary_value(&self) -> f64 {
        *self.state.last().expect("non-empty state")
    }
}

#[derive(Debug)]
pub struct SegmentFailure {
    pub segment: usize,
    pub error: Error,
}

/// Result of one complete step: every solution plus the segments whose
/// modified system could not be solved.
#[derive(Debug, Default)]
pub struct StepOutcome {
    pub solutions: Vec<StepSolution>,
    pub failures: Vec<SegmentFailure>,
}

impl StepOutcome {
    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Precomputed step operator `M/τ + K` for one mesh and time step.
#[derive(Debug, Clone)]
pub struct RotheStepper {
    mesh: Mesh1D,
    tau: f64,
    mass: TridiagonalSystem,
    lhs: TridiagonalSystem,
}

impl RotheStepper {
    pub fn new(mesh: &Mesh1D, tau: f64) -> Self {
        let mass = assemble_mass(mesh);
        let lhs = &mass.scale(1.0 / tau) + &assemble_stiffness(mesh);
        Self {
            mesh: *mesh,
            tau,
            mass,
            lhs,
        }
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn lhs(&self) -> &TridiagonalSystem {
        &self.lhs
    }

    /// `M·prev/τ + f_k`.
    pub fn rhs(&self, prev: &[f64], f_k: &[f64]) -> Vec<f64> {
        let mut rhs = self.mass.matvec(prev);
        for (r, f) in rhs.iter_mut().zip(f_k) {
            *r = *r / self.tau + f;
        }
        rhs
    }

    /// ∞-norm of `(M/τ + K)α + e_n ξ − rhs`.
    pub fn residual(&self, prev: &[f64], f_k: &[f64], state: &[f64], xi: f64) -> f64 {
        let mut r = self.lhs.matvec(state);
        let rhs = self.rhs(prev, f_k);
        *r.last_mut().unwrap() += xi;
        inf_dist(&r, &rhs)
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.mesh.n() {
            return Err(Error::DimensionMismatch {
                expected: self.mesh.n(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Enumerates all solutions of one step, one segment of the graph at a
    /// time, left to right. Solutions found twice (a shared endpoint of two
    /// closed segments) are merged.
    pub fn step_all(
        &self,
        graph: &SubdifferentialGraph,
        prev: &[f64],
        f_k: &[f64],
        dedupe_tol: f64,
    ) -> Result<StepOutcome> {
        self.check_len(prev)?;
        self.check_len(f_k)?;
        let n = self.mesh.n();
        let rhs = self.rhs(prev, f_k);
        let mut out = StepOutcome::default();

        for (idx, seg) in graph.segments().iter().enumerate() {
            let tag = CaseTag::for_segment(idx, seg);
            let found = match *seg {
                Segment::Affine {
                    r_lo,
                    r_hi,
                    slope,
                    intercept,
                } => {
                    let mut sys = self.lhs.clone();
                    sys.diag[n - 1] += slope;
                    let mut b = rhs.clone();
                    b[n - 1] -= intercept;
                    sys.solve(&b).map(|state| {
                        let r = state[n - 1];
                        (r >= r_lo - ACCEPT_TOL && r <= r_hi + ACCEPT_TOL).then_some(StepSolution {
                            boundary_flux: slope * r + intercept,
                            state,
                            case_tag: tag,
                        })
                    })
                }
                Segment::Vertical { r, xi_lo, xi_hi } => {
                    let reduced = self.lhs.leading(n - 1);
                    let mut b = rhs[..n - 1].to_vec();
                    b[n - 2] -= self.lhs.upper[n - 2] * r;
                    reduced.solve(&b).map(|mut state| {
                        let xi = rhs[n - 1]
                            - self.lhs.lower[n - 2] * state[n - 2]
                            - self.lhs.diag[n - 1] * r;
                        state.push(r);
                        (xi >= xi_lo - ACCEPT_TOL && xi <= xi_hi + ACCEPT_TOL).then_some(
                            StepSolution {
                                state,
                                case_tag: tag,
                                boundary_flux: xi,
                            },
                        )
                    })
                }
            };
            match found {
                Ok(Some(sol)) => {
                    if !out
                        .solutions
                        .iter()
                        .any(|s| inf_dist(&s.state, &sol.state) <= dedupe_tol)
                    {
                        out.solutions.push(sol);
                    }
                }
                Ok(None) => {}
                Err(error) => out.failures.push(SegmentFailure {
                    segment: idx,
                    error,
                }),
            }
        }
        Ok(out)
    }
}

/// One complete step with the default deduplication tolerance.
pub fn rothe_step_all(
    mesh: &Mesh1D,
    graph: &SubdifferentialGraph,
    prev: &[f64],
    tau: f64,
    f_k: &[f64],
) -> Result<StepOutcome> {
    RotheStepper::new(mesh, tau).step_all(graph, prev, f_k, DEFAULT_DEDUPE_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchPolicy {
    /// Keep every solution, up to the branch cap.
    All,
    /// Follow the solution with the smallest boundary value.
    MinBoundary,
    /// Follow the solution with the largest boundary value.
    MaxBoundary,
    /// Follow the first solution in graph order.
    First,
}

impl FromStr for BranchPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "min_boundary" | "min" => Ok(Self::MinBoundary),
            "max_boundary" | "max" => Ok(Self::MaxBoundary),
            "first" => Ok(Self::First),
            _ => Err(Error::InvalidConfig(format!("unknown branch policy {s:?}"))),
        }
    }
}

impl fmt::Display for BranchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::All => "all",
            Self::MinBoundary => "min_boundary",
            Self::MaxBoundary => "max_boundary",
            Self::First => "first",
        })
    }
}

impl BranchPolicy {
    fn select(self, mut sols: Vec<StepSolution>) -> Vec<StepSolution> {
        let by_boundary =
            |a: &StepSolution, b: &StepSolution| a.boundary_value().total_cmp(&b.boundary_value());
        match self {
            Self::All => sols,
            Self::First => {
                sols.truncate(1);
                sols
            }
            // min_by / max_by keep the first / last among ties; use explicit
            // folds so both keep the earliest segment.
            Self::MinBoundary => sols
                .into_iter()
                .reduce(|a, b| if by_boundary(&b, &a).is_lt() { b } else { a })
                .into_iter()
                .collect(),
            Self::MaxBoundary => sols
                .into_iter()
                .reduce(|a, b| if by_boundary(&b, &a).is_gt() { b } else { a })
                .into_iter()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Index of the branch within its level.
    pub id: usize,
    /// Index of the parent branch within the previous level.
    pub parent: Option<usize>,
    pub case_tag: CaseTag,
    pub boundary_flux: f64,
    pub state: Vec<f64>,
}

impl Branch {
    pub fn boundary_value(&self) -> f64 {
        *self.state.last().expect("non-empty state")
    }
}

/// A branch that could not be continued.
#[derive(Debug, Clone, PartialEq)]
pub struct Termination {
    /// Level at which no solution was found.
    pub level: usize,
    /// Branch id in the previous level.
    pub parent: usize,
    pub failed_segments: Vec<usize>,
}

/// All discrete solutions found by a run, level by level.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTree {
    pub tau: f64,
    pub steps: usize,
    pub policy: BranchPolicy,
    pub levels: Vec<Vec<Branch>>,
    pub truncated_levels: Vec<usize>,
    pub terminations: Vec<Termination>,
}

impl SolutionTree {
    pub fn is_complete(&self) -> bool {
        self.levels.len() == self.steps + 1
    }

    pub fn is_truncated(&self) -> bool {
        !self.truncated_levels.is_empty()
    }

    pub fn max_width(&self) -> usize {
        self.levels.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Whether some branch had more than one continuation.
    pub fn has_multiplicity(&self) -> bool {
        self.levels
            .iter()
            .skip(1)
            .any(|level| level.windows(2).any(|w| w[0].parent == w[1].parent))
    }

    /// Branches from the root to `(level, id)`.
    pub fn path(&self, level: usize, id: usize) -> Vec<&Branch> {
        let mut out = Vec::with_capacity(level + 1);
        let mut cur = &self.levels[level][id];
        out.push(cur);
        for k in (0..level).rev() {
            cur = &self.levels[k][cur.parent.expect("non-root branch has a parent")];
            out.push(cur);
        }
        out.reverse();
        out
    }

    /// Path to the first branch of the deepest level.
    pub fn primary_path(&self) -> Vec<&Branch> {
        self.path(self.levels.len() - 1, 0)
    }

    pub fn snapshots(path: &[&Branch]) -> Vec<Vec<f64>> {
        path.iter().map(|b| b.state.clone()).collect()
    }

    pub fn primary_snapshots(&self) -> Vec<Vec<f64>> {
        Self::snapshots(&self.primary_path())
    }

    /// Writes every branch as a CSV row:
    /// `t, branch_id, parent_id, case_tag, alpha_1 … alpha_n, xi`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let n = self.levels[0][0].state.len();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![
            "t".to_string(),
            "branch_id".into(),
            "parent_id".into(),
            "case_tag".into(),
        ];
        header.extend((1..=n).map(|i| format!("alpha_{i}")));
        header.push("xi".into());
        w.write_record(&header)?;
        for (k, level) in self.levels.iter().enumerate() {
            let t = k as f64 * self.tau;
            for b in level {
                let mut rec = vec![
                    t.to_string(),
                    b.id.to_string(),
                    b.parent.map(|p| p.to_string()).unwrap_or_default(),
                    b.case_tag.to_string(),
                ];
                rec.extend(b.state.iter().map(f64::to_string));
                rec.push(b.boundary_flux.to_string());
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the Rothe scheme from `u0` to the horizon, branching per `policy`.
///
/// Branches that admit no solution are recorded in
/// [`SolutionTree::terminations`]; if a whole level dies the tree stops there.
pub fn run(
    config: &RotheConfig,
    mesh: &Mesh1D,
    graph: &SubdifferentialGraph,
    u0: &InitialDatum,
    forcing: Option<&Forcing>,
    policy: BranchPolicy,
) -> Result<SolutionTree> {
    let stepper = RotheStepper::new(mesh, config.tau);
    let n = mesh.n();
    let alpha0 = project_initial(mesh, u0);
    let root = Branch {
        id: 0,
        parent: None,
        case_tag: CaseTag::Initial,
        boundary_flux: graph.select(alpha0[n - 1]).lo,
        state: alpha0,
    };
    let mut tree = SolutionTree {
        tau: config.tau,
        steps: config.steps,
        policy,
        levels: vec![vec![root]],
        truncated_levels: Vec::new(),
        terminations: Vec::new(),
    };

    for k in 1..=config.steps {
        let f_k = match forcing {
            Some(f) => clement_average(f, config.tau, k),
            None => clement_average(|_| vec![0.0; n], config.tau, k),
        };
        if f_k.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f_k.len(),
            });
        }
        let prev = tree.levels.last().unwrap();
        let outcomes: Vec<StepOutcome> = prev
            .par_iter()
            .map(|b| stepper.step_all(graph, &b.state, &f_k, config.dedupe_tol))
            .collect::<Result<_>>()?;

        let mut level: Vec<Branch> = Vec::new();
        for (parent, outcome) in outcomes.into_iter().enumerate() {
            if outcome.is_empty() {
                tree.terminations.push(Termination {
                    level: k,
                    parent,
                    failed_segments: outcome.failures.iter().map(|f| f.segment).collect(),
                });
                continue;
            }
            for sol in policy.select(outcome.solutions) {
                if level
                    .iter()
                    .any(|b| inf_dist(&b.state, &sol.state) <= config.dedupe_tol)
                {
                    continue;
                }
                level.push(Branch {
                    id: level.len(),
                    parent: Some(parent),
                    case_tag: sol.case_tag,
                    boundary_flux: sol.boundary_flux,
                    state: sol.state,
                });
            }
        }
        if level.len() > config.max_branches {
            level.truncate(config.max_branches);
            tree.truncated_levels.push(k);
        }
        if level.is_empty() {
            break;
        }
        tree.levels.push(level);
    }
    Ok(tree)
}

/// A complete problem description that can be solved for any time step.
#[derive(Clone)]
pub struct Problem {
    pub mesh: Mesh1D,
    pub graph: SubdifferentialGraph,
    pub u0: Arc<InitialDatum>,
    pub forcing: Option<Arc<Forcing>>,
    pub horizon: f64,
    pub policy: BranchPolicy,
    pub max_branches: usize,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("mesh", &self.mesh)
            .field("graph", &self.graph)
            .field("horizon", &self.horizon)
            .field("policy", &self.policy)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(mesh: Mesh1D, graph: SubdifferentialGraph, u0: Arc<InitialDatum>) -> Self {
        Self {
            mesh,
            graph,
            u0,
            forcing: None,
            horizon: DEFAULT_HORIZON,
            policy: BranchPolicy::First,
            max_branches: DEFAULT_MAX_BRANCHES,
        }
    }

    pub fn with_policy(mut self, policy: BranchPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_forcing(mut self, forcing: Arc<Forcing>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn solve(&self, tau: f64) -> Result<SolutionTree> {
        self.solve_with_policy(tau, self.policy)
    }

    pub fn solve_with_policy(&self, tau: f64, policy: BranchPolicy) -> Result<SolutionTree> {
        let config = RotheConfig::new(tau, self.horizon)?.with_max_branches(self.max_branches);
        run(
            &config,
            &self.mesh,
            &self.graph,
            self.u0.as_ref(),
            self.forcing.as_deref(),
            policy,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolantKind {
    PiecewiseConstant,
    PiecewiseLinear,
}

/// Time interpolant of the snapshots `u^0, …, u^N` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant {
    pub kind: InterpolantKind,
    pub tau: f64,
    pub snapshots: Vec<Vec<f64>>,
}

impl Interpolant {
    pub fn steps(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.tau
    }

    /// Returns `(k, s)` with `t = kτ + s`, snapping `t` onto grid nodes
    /// within a relative `1e-9`.
    fn locate(&self, t: f64) -> (usize, Option<f64>) {
        let s = t / self.tau;
        let r = s.round();
        if (s - r).abs() < 1e-9 {
            return ((r.max(0.0) as usize).min(self.steps()), None);
        }
        let k = (s.ceil().max(1.0) as usize).min(self.steps());
        (k, Some(s))
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        match (self.kind, self.locate(t)) {
            (_, (k, None)) => self.snapshots[k].clone(),
            (InterpolantKind::PiecewiseConstant, (k, Some(_))) => self.snapshots[k].clone(),
            (InterpolantKind::PiecewiseLinear, (k, Some(s))) => {
                // (t/τ − k + 1) u^k + (k − t/τ) u^{k−1}
                let w_new = s - k as f64 + 1.0;
                let w_old = k as f64 - s;
                self.snapshots[k]
                    .iter()
                    .zip(&self.snapshots[k - 1])
                    .map(|(a, b)| w_new * a + w_old * b)
                    .collect()
            }
        }
    }

    /// `(u^k − u^{k−1})/τ` on the interval containing `t` (left-closed at
    /// grid nodes, so `t = kτ` reads the `(k+1)`-th slope except at `T`).
    pub fn derivative(&self, t: f64) -> Vec<f64> {
        if self.kind == InterpolantKind::PiecewiseConstant {
            return vec![0.0; self.snapshots[0].len()];
        }
        let k = match self.locate(t) {
            (k, None) => (k + 1).min(self.steps()),
            (k, Some(_)) => k,
        };
        self.slope(k)
    }

    /// Difference quotient of the `k`-th interval.
    pub fn slope(&self, k: usize) -> Vec<f64> {
        self.snapshots[k]
            .iter()
            .zip(&self.snapshots[k - 1])
            .map(|(a, b)| (a - b) / self.tau)
            .collect()
    }
}

/// Piecewise-constant and piecewise-linear interpolants over the same
/// snapshots.
pub fn make_interpolants(snapshots: Vec<Vec<f64>>, tau: f64) -> (Interpolant, Interpolant) {
    assert!(snapshots.len() >= 2, "need at least one time step");
    (
        Interpolant {
            kind: InterpolantKind::PiecewiseConstant,
            tau,
            snapshots: snapshots.clone(),
        },
        Interpolant {
            kind: InterpolantKind::PiecewiseLinear,
            tau,
            snapshots,
        },
    )
}
