//! Norms of Rothe interpolants, the discrete `BV²` seminorm, empirical a
//! priori bounds, the abstract condition checker and convergence studies.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem1d::{DiscreteNorms, Mesh1D};
use crate::rothe::{Interpolant, Problem, SolutionTree};

pub const NORM_REPORT_HEADER: [&str; 5] = ["l2V", "linfH", "cH", "l2Vstar_du", "bv2"];
pub const CONVERGENCE_HEADER: [&str; 4] = ["tau", "err_CH", "err_L2V", "branch_count"];

/// Norms of the interpolants built on one branch path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    /// `‖ū_τ‖_{L²(0,T;V)} = √(τ Σ_{k≥1} ‖u^k‖_V²)`.
    pub l2v: f64,
    /// `max_{k≥1} ‖u^k‖_H`.
    pub linf_h: f64,
    /// `max_{k≥0} ‖u^k‖_H`.
    pub c_h: f64,
    /// `‖u'_τ‖_{L²(0,T;V*)}`.
    pub l2vstar_du: f64,
    /// Squared `BV²(0,T;V*)` seminorm of `ū_τ`.
    pub bv2: f64,
}

impl NormReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(NORM_REPORT_HEADER)?;
        w.write_record(
            [self.l2v, self.linf_h, self.c_h, self.l2vstar_du, self.bv2].map(|v| v.to_string()),
        )?;
        w.flush()?;
        Ok(())
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn interpolant_norms(
    norms: &DiscreteNorms,
    pc: &Interpolant,
    pl: &Interpolant,
) -> Result<NormReport> {
    if pc.snapshots != pl.snapshots || pc.tau != pl.tau {
        return Err(Error::InvalidConfig(
            "interpolants do not share snapshots".into(),
        ));
    }
    let tau = pc.tau;
    let snaps = &pc.snapshots;
    let h: Vec<f64> = snaps.iter().map(|u| norms.h(u)).collect();
    let l2v = (tau * snaps[1..].iter().map(|u| norms.v(u).powi(2)).sum::<f64>()).sqrt();
    let linf_h = h[1..].iter().copied().fold(0.0, f64::max);
    let c_h = h.iter().copied().fold(0.0, f64::max);
    let mut du2 = 0.0;
    for k in 1..snaps.len() {
        du2 += norms.dual_of_h(&pl.slope(k))?.powi(2);
    }
    let l2vstar_du = (tau * du2).sqrt();
    let reps = snaps
        .iter()
        .map(|u| norms.riesz_of_h(u))
        .collect::<Result<Vec<_>>>()?;
    let bv2 = bv2_seminorm(&reps, |d| norms.v(d));
    Ok(NormReport {
        l2v,
        linf_h,
        c_h,
        l2vstar_du,
        bv2,
    })
}

/// `∫₀ᵀ ‖ū_τ(t) − u_τ(t)‖²_{V*} dt`, by evaluating both interpolants at the
/// two Gauss points of every interval (exact for the quadratic integrand).
pub fn interpolant_gap_l2_vstar_sq(
    norms: &DiscreteNorms,
    pc: &Interpolant,
    pl: &Interpolant,
) -> Result<f64> {
    let tau = pc.tau;
    let offset = 0.5 / 3f64.sqrt();
    let mut acc = 0.0;
    for k in 1..pc.snapshots.len() {
        let start = (k - 1) as f64 * tau;
        for g in [0.5 - offset, 0.5 + offset] {
            let t = start + g * tau;
            let d = diff(&pc.eval(t), &pl.eval(t));
            acc += 0.5 * tau * norms.dual_of_h(&d)?.powi(2);
        }
    }
    Ok(acc)
}

/// Squared `BV²` seminorm of a piecewise-constant function with the given
/// successive values: the largest `Σ ‖v_{m_j} − v_{m_{j−1}}‖²` over
/// increasing index subsequences, by dynamic programming over the last
/// chosen index.
pub fn bv2_seminorm<F>(values: &[Vec<f64>], norm: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let n = values.len();
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        for i in 0..j {
            let cand = best[i] + norm(&diff(&values[j], &values[i])).powi(2);
            if cand > best[j] {
                best[j] = cand;
            }
        }
    }
    best.into_iter().fold(0.0, f64::max)
}

/// The three step-wise quantities bounded independently of `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepwiseBounds {
    /// `max_{k≥1} ‖u^k‖_H`
    pub max_h: f64,
    /// `Σ ‖u^k − u^{k−1}‖_H²`
    pub sum_increments_h2: f64,
    /// `τ Σ ‖u^k‖_V²`
    pub tau_sum_v2: f64,
}

impl StepwiseBounds {
    pub fn from_snapshots(norms: &DiscreteNorms, tau: f64, snaps: &[Vec<f64>]) -> Self {
        let max_h = snaps[1..].iter().map(|u| norms.h(u)).fold(0.0, f64::max);
        let sum_increments_h2 = snaps
            .windows(2)
            .map(|w| norms.h(&diff(&w[1], &w[0])).powi(2))
            .sum();
        let tau_sum_v2 = tau * snaps[1..].iter().map(|u| norms.v(u).powi(2)).sum::<f64>();
        Self {
            max_h,
            sum_increments_h2,
            tau_sum_v2,
        }
    }

    fn named(&self) -> [(&'static str, f64); 3] {
        [
            ("max_k |u^k|_H", self.max_h),
            ("sum |u^k - u^k-1|_H^2", self.sum_increments_h2),
            ("tau sum |u^k|_V^2", self.tau_sum_v2),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundVerdict {
    /// `(τ, quantities)` in the order the runs were given.
    pub rows: Vec<(f64, StepwiseBounds)>,
    pub violations: Vec<String>,
}

impl BoundVerdict {
    pub fn bounded(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Envelope factor applied to the coarsest run.
pub const BOUND_ENVELOPE: f64 = 2.0;

/// Checks that the step-wise quantities of every run stay within
/// [`BOUND_ENVELOPE`] times those of the coarsest run. Each tree contributes
/// its primary path.
pub fn apriori_bound_suite(mesh: &Mesh1D, runs: &[SolutionTree]) -> BoundVerdict {
    let norms = DiscreteNorms::new(mesh);
    let rows: Vec<(f64, StepwiseBounds)> = runs
        .iter()
        .map(|t| {
            (
                t.tau,
                StepwiseBounds::from_snapshots(&norms, t.tau, &t.primary_snapshots()),
            )
        })
        .collect();
    let mut violations = Vec::new();
    if let Some(&(tau_c, coarse)) = rows.iter().max_by(|a, b| a.0.total_cmp(&b.0)) {
        for &(tau, q) in &rows {
            for ((name, v), (_, c)) in q.named().into_iter().zip(coarse.named()) {
                if v > BOUND_ENVELOPE * c {
                    violations.push(format!(
                        "{name} at tau = {tau}: {v} exceeds {BOUND_ENVELOPE} x {c} (tau = {tau_c})"
                    ));
                }
            }
        }
    }
    BoundVerdict { rows, violations }
}

/// Constants of the abstract assumptions on `A` and `J`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AbstractConstants {
    pub alpha: f64,
    pub beta: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: f64,
    pub iota_norm: f64,
    pub p_norm: Option<f64>,
    /// `(d, σ)` of the `J°(u; −u) ≤ d(1 + ‖u‖^σ)` bound.
    pub d_sigma: Option<(f64, f64)>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub m3: Option<f64>,
}

impl AbstractConstants {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InconsistentConstants(msg));
        let finite_nonneg = |name: &str, v: f64| -> Result<()> {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InconsistentConstants(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
            Ok(())
        };
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("c must be > 0, got {}", self.c));
        }
        finite_nonneg("beta", self.beta)?;
        finite_nonneg("iota_norm", self.iota_norm)?;
        if let Some(a) = self.a {
            finite_nonneg("a", a)?;
        }
        if let Some(b) = self.b
            && (b.is_nan() || b <= 0.0)
        {
            return bad(format!("b must be > 0, got {b}"));
        }
        if let Some(p) = self.p_norm {
            finite_nonneg("p_norm", p)?;
        }
        if let Some((d, sigma)) = self.d_sigma {
            finite_nonneg("d", d)?;
            if !(1.0..2.0).contains(&sigma) {
                return bad(format!("sigma must lie in [1, 2), got {sigma}"));
            }
        }
        if let Some(m1) = self.m1 {
            finite_nonneg("m1", m1)?;
        }
        for (name, m) in [("m2", self.m2), ("m3", self.m3)] {
            if let Some(m) = m
                && (m.is_nan() || m <= 0.0)
            {
                return bad(format!("{name} must be > 0, got {m}"));
            }
        }
        Ok(())
    }
}

fn reciprocal(x: f64) -> f64 {
    if x > 0.0 { 1.0 / x } else { f64::INFINITY }
}

/// Which structural assumptions hold and the resulting step-size limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub haux_a: bool,
    pub haux_b: bool,
    pub haux_c: bool,
    /// Case A coercivity threshold `1/(β + c‖p‖)`.
    pub tau0_a_linear: Option<f64>,
    /// Case A coercivity threshold with the squared norm, `1/(β + c‖p‖²)`.
    pub tau0_a_squared: Option<f64>,
    /// Case A restriction of the discrete Gronwall step, `1/(4(β + c‖p‖²))`.
    pub tau_bounds_a: Option<f64>,
    /// Cases B and C: `1/β`, infinite when `β = 0`.
    pub tau0_bc: Option<f64>,
    /// Largest admissible step over the cases that hold (0 if none does).
    pub tau0: f64,
    /// `None` when the monotonicity constants are not supplied.
    pub h_const: Option<bool>,
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let holds = |b: bool| if b { "holds" } else { "fails" };
        writeln!(f, "H_aux A: {}", holds(self.haux_a))?;
        writeln!(f, "H_aux B: {}", holds(self.haux_b))?;
        writeln!(f, "H_aux C: {}", holds(self.haux_c))?;
        if let (Some(lin), Some(sq), Some(gr)) =
            (self.tau0_a_linear, self.tau0_a_squared, self.tau_bounds_a)
        {
            writeln!(f, "tau0 (case A, 1/(beta + c|p|)): {lin}")?;
            writeln!(f, "tau0 (case A, 1/(beta + c|p|^2)): {sq}")?;
            writeln!(f, "tau bound (case A, 1/(4(beta + c|p|^2))): {gr}")?;
        }
        if let Some(bc) = self.tau0_bc {
            writeln!(f, "tau0 (cases B/C, 1/beta): {bc}")?;
        }
        writeln!(f, "tau0: {}", self.tau0)?;
        match self.h_const {
            Some(b) => writeln!(f, "H_const: {}", holds(b)),
            None => writeln!(f, "H_const: not checked (m1/m3 missing)"),
        }
    }
}

pub fn check_conditions(k: &AbstractConstants) -> Result<ConditionReport> {
    k.validate()?;
    let haux_a = k.p_norm.is_some();
    let haux_b = k.alpha > k.c * k.iota_norm * k.iota_norm;
    let haux_c = k.d_sigma.is_some();

    let (tau0_a_linear, tau0_a_squared, tau_bounds_a) = match k.p_norm {
        Some(p) if haux_a => (
            Some(reciprocal(k.beta + k.c * p)),
            Some(reciprocal(k.beta + k.c * p * p)),
            Some(reciprocal(4.0 * (k.beta + k.c * p * p))),
        ),
        _ => (None, None, None),
    };
    let tau0_bc = (haux_b || haux_c).then(|| reciprocal(k.beta));

    // Any one case that holds is enough; case A is limited by its tighter
    // Gronwall restriction.
    let tau0 = [tau_bounds_a, tau0_bc]
        .into_iter()
        .flatten()
        .fold(0.0, f64::max);

    let h_const = if haux_a {
        Some(true)
    } else {
        match (k.m1, k.m3) {
            (Some(m1), Some(m3)) => Some(m1 >= m3 * k.iota_norm * k.iota_norm),
            _ => None,
        }
    };

    Ok(ConditionReport {
        haux_a,
        haux_b,
        haux_c,
        tau0_a_linear,
        tau0_a_squared,
        tau_bounds_a,
        tau0_bc,
        tau0,
        h_const,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub tau: f64,
    pub err_ch: f64,
    pub err_l2v: f64,
    pub branch_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub reference_tau: f64,
    /// Ordered by decreasing `τ`.
    pub rows: Vec<ConvergenceRow>,
    pub warnings: Vec<String>,
}

impl ConvergenceTable {
    pub fn err_ch_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].err_ch < w[0].err_ch)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CONVERGENCE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.tau.to_string(),
                r.err_ch.to_string(),
                r.err_l2v.to_string(),
                r.branch_count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn step_ratio(coarse: f64, fine: f64) -> Result<usize> {
    let r = coarse / fine;
    let rounded = r.round();
    if rounded < 1.0 || (r - rounded).abs() > 1e-9 * rounded {
        return Err(Error::InvalidConfig(format!(
            "time step {coarse} is not a multiple of the reference step {fine}"
        )));
    }
    Ok(rounded as usize)
}

/// Errors of one coarse trajectory against a fine one, compared only at
/// coincident time nodes (`err_CH`) and through the piecewise-constant
/// interpolants on the fine grid (`err_L2V`).
pub fn trajectory_errors(
    norms: &DiscreteNorms,
    coarse: &[Vec<f64>],
    coarse_tau: f64,
    fine: &[Vec<f64>],
    fine_tau: f64,
) -> Result<(f64, f64)> {
    let ratio = step_ratio(coarse_tau, fine_tau)?;
    if (coarse.len() - 1) * ratio != fine.len() - 1 {
        return Err(Error::DimensionMismatch {
            expected: (coarse.len() - 1) * ratio + 1,
            got: fine.len(),
        });
    }
    let err_ch = coarse
        .iter()
        .enumerate()
        .map(|(k, u)| norms.h(&diff(u, &fine[k * ratio])))
        .fold(0.0, f64::max);
    let mut acc = 0.0;
    for (j, u_fine) in fine.iter().enumerate().skip(1) {
        let k = j.div_ceil(ratio);
        acc += fine_tau * norms.v(&diff(&coarse[k], u_fine)).powi(2);
    }
    Ok((err_ch, acc.sqrt()))
}

/// Solves `problem` for every step in `taus` and for `reference_tau`, and
/// tabulates the errors of the policy-selected primary paths.
pub fn convergence_study(
    problem: &Problem,
    taus: &[f64],
    reference_tau: f64,
) -> Result<ConvergenceTable> {
    let mut all_taus: Vec<f64> = taus.to_vec();
    all_taus.push(reference_tau);
    let trees: Vec<SolutionTree> = all_taus
        .par_iter()
        .map(|&tau| problem.solve(tau))
        .collect::<Result<_>>()?;
    for t in &trees {
        if !t.is_complete() {
            return Err(Error::NoSolution {
                level: t.levels.len(),
            });
        }
    }
    let (reference, runs) = trees.split_last().unwrap();
    let norms = DiscreteNorms::new(&problem.mesh);
    let fine = reference.primary_snapshots();

    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(runs.len());
    for t in runs {
        let (err_ch, err_l2v) =
            trajectory_errors(&norms, &t.primary_snapshots(), t.tau, &fine, reference.tau)?;
        if t.max_width() != reference.max_width() {
            warnings.push(format!(
                "branch count {} at tau = {} differs from reference {}",
                t.max_width(),
                t.tau,
                reference.max_width()
            ));
        }
        rows.push(ConvergenceRow {
            tau: t.tau,
            err_ch,
            err_l2v,
            branch_count: t.max_width(),
        });
    }
    rows.sort_by(|a, b| b.tau.total_cmp(&a.tau));
    Ok(ConvergenceTable {
        reference_tau,
        rows,
        warnings,
    })
}

/// Series solution of `u_t = u_xx` with `u(0,t) = 0`, `u_x(1,t) = 0`:
/// `u = Σ b_k e^{−μ_k² t} sin(μ_k x)` with `μ_k = (k + ½)π`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatSeries {
    pub coeffs: Vec<f64>,
}

impl HeatSeries {
    fn mu(k: usize) -> f64 {
        (k as f64 + 0.5) * PI
    }

    /// Expansion of the constant initial datum `u_0 ≡ value`.
    pub fn constant(value: f64, terms: usize) -> Self {
        Self {
            coeffs: (0..terms).map(|k| 2.0 * value / Self::mu(k)).collect(),
        }
    }

    /// `amplitude · sin(πx/2)`, a single eigenmode.
    pub fn first_mode(amplitude: f64) -> Self {
        Self {
            coeffs: vec![amplitude],
        }
    }

    pub fn initial(&self, x: f64) -> f64 {
        self.eval(x, 0.0)
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let mu = Self::mu(k);
                b * (-mu * mu * t).exp() * (mu * x).sin()
            })
            .sum()
    }

    /// `max_k ‖I_h u(t_k) − u^k‖_H` over the given snapshots, `I_h` being
    /// nodal interpolation.
    pub fn error_ch(&self, norms: &DiscreteNorms, snapshots: &[Vec<f64>], tau: f64) -> f64 {
        let mesh = *norms.mesh();
        snapshots
            .iter()
            .enumerate()
            .map(|(k, u)| {
                let t = k as f64 * tau;
                let exact: Vec<f64> = mesh.nodes().map(|x| self.eval(x, t)).collect();
                norms.h(&diff(&exact, u))
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rothe::make_interpolants;

    fn abs_norm(v: &[f64]) -> f64 {
        v[0].abs()
    }

    fn scalars(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn bv2_examples() {
        assert_eq!(bv2_seminorm(&scalars(&[0.0, 1.0, 0.0]), abs_norm), 2.0);
        assert_eq!(bv2_seminorm(&scalars(&[0.0, 1.0, 2.0]), abs_norm), 4.0);
        assert_eq!(bv2_seminorm(&scalars(&[3.0; 6]), abs_norm), 0.0);
        assert_eq!(bv2_seminorm(&scalars(&[5.0]), abs_norm), 0.0);
    }

    #[test]
    fn zero_snapshots_have_zero_norms() {
        let mesh = Mesh1D::uniform(5).unwrap();
        let norms = DiscreteNorms::new(&mesh);
        let (pc, pl) = make_interpolants(vec![vec![0.0; 5]; 4], 0.25);
        let r = interpolant_norms(&norms, &pc, &pl).unwrap();
        assert_eq!(
            r,
            NormReport {
                l2v: 0.0,
                linf_h: 0.0,
                c_h: 0.0,
                l2vstar_du: 0.0,
                bv2: 0.0
            }
        );
    }

    #[test]
    fn one_step_derivative_norm() {
        let mesh = Mesh1D::uniform(2).unwrap();
        let norms = DiscreteNorms::new(&mesh);
        let (pc, pl) = make_interpolants(vec![vec![0.0, 0.0], vec![1.0, 1.0]], 1.0);
        let r = interpolant_norms(&norms, &pc, &pl).unwrap();
        let expected = norms.dual(&norms.mass().matvec(&[1.0, 1.0])).unwrap();
        assert!((r.l2vstar_du - expected).abs() < 1e-15);
    }

    #[test]
    fn condition_examples() {
        let base = AbstractConstants {
            alpha: 1.0,
            c: 0.3,
            iota_norm: 1.0,
            ..Default::default()
        };
        let r = check_conditions(&base).unwrap();
        assert!(r.haux_b && !r.haux_a && !r.haux_c);
        assert_eq!(r.tau0_bc, Some(f64::INFINITY));
        assert_eq!(r.tau0, f64::INFINITY);
        assert_eq!(r.h_const, None);
        assert!(r.to_string().contains("H_aux B: holds"));

        let unique = AbstractConstants {
            m1: Some(2.0),
            m3: Some(1.0),
            ..base
        };
        assert_eq!(check_conditions(&unique).unwrap().h_const, Some(true));

        let with_p = AbstractConstants {
            beta: 1.0,
            p_norm: Some(2.0),
            alpha: 0.1,
            ..base
        };
        let r = check_conditions(&with_p).unwrap();
        assert!(r.haux_a && !r.haux_b);
        assert_eq!(r.tau0_a_linear, Some(1.0 / 1.6));
        assert_eq!(r.tau0_a_squared, Some(1.0 / 2.2));
        assert_eq!(r.tau_bounds_a, Some(1.0 / 8.8));
        assert_eq!(r.tau0, 1.0 / 8.8);
        assert_eq!(r.h_const, Some(true));
    }

    #[test]
    fn condition_rejections() {
        let base = AbstractConstants {
            alpha: 1.0,
            c: 0.3,
            iota_norm: 1.0,
            ..Default::default()
        };
        for bad in [
            AbstractConstants {
                d_sigma: Some((1.0, 2.0)),
                ..base
            },
            AbstractConstants {
                d_sigma: Some((1.0, 0.5)),
                ..base
            },
            AbstractConstants { alpha: 0.0, ..base },
            AbstractConstants { c: 0.0, ..base },
            AbstractConstants { beta: -1.0, ..base },
            AbstractConstants {
                m3: Some(0.0),
                ..base
            },
        ] {
            assert!(matches!(
                check_conditions(&bad),
                Err(Error::InconsistentConstants(_))
            ));
        }
    }

    #[test]
    fn heat_series_constant_datum() {
        let s = HeatSeries::constant(2.0, 20_000);
        assert!((s.initial(0.5) - 2.0).abs() < 1e-3);
        assert_eq!(s.initial(0.0), 0.0);
        let m = HeatSeries::first_mode(1.0);
        assert!((m.eval(1.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn step_ratio_rules() {
        assert_eq!(step_ratio(0.04, 0.0025).unwrap(), 16);
        assert_eq!(step_ratio(0.01, 0.01).unwrap(), 1);
        assert!(step_ratio(0.01, 0.003).is_err());
    }
}
