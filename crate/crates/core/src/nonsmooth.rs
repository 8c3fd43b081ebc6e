//! Piecewise-quadratic locally Lipschitz potentials and their Clarke
//! subdifferential graphs.
//!
//! A potential is stored as quadratic pieces between ordered breakpoints. The
//! derivative of each piece is affine, so the Clarke generalized gradient is a
//! closed graph made of affine segments joined by vertical segments at every
//! derivative jump. For piecewise-C¹ scalar functions this graph is exact.

use crate::error::{Error, Result};

/// Absolute tolerance for graph membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

const CONTINUITY_RTOL: f64 = 1e-12;

/// `c2 r² + c1 r + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl Quadratic {
    pub const fn new(c2: f64, c1: f64, c0: f64) -> Self {
        Self { c2, c1, c0 }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        (self.c2 * r + self.c1) * r + self.c0
    }

    #[inline]
    pub fn derivative(&self, r: f64) -> f64 {
        2.0 * self.c2 * r + self.c1
    }
}

/// A continuous potential `j: ℝ → ℝ` made of quadratic pieces.
///
/// Piece `i` lives on `[b_{i-1}, b_i]` with `b_{-1} = -∞` and `b_M = +∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseQuadraticPotential {
    breakpoints: Vec<f64>,
    pieces: Vec<Quadratic>,
}

impl PiecewiseQuadraticPotential {
    /// Validates ordering, finiteness and continuity at every breakpoint.
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Quadratic>) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidPotential(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite())
            || pieces
                .iter()
                .any(|q| !(q.c2.is_finite() && q.c1.is_finite() && q.c0.is_finite()))
        {
            return Err(Error::InvalidPotential("non-finite coefficient".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPotential(format!(
                "breakpoints not strictly increasing: {} >= {}",
                w[0], w[1]
            )));
        }
        for (i, &b) in breakpoints.iter().enumerate() {
            let left = pieces[i].eval(b);
            let right = pieces[i + 1].eval(b);
            let scale = 1f64.max(left.abs()).max(right.abs());
            if (left - right).abs() > CONTINUITY_RTOL * scale {
                return Err(Error::InvalidPotential(format!(
                    "discontinuous at r = {b}: {left} vs {right}"
                )));
            }
        }
        Ok(Self {
            breakpoints,
            pieces,
        })
    }

    /// Builds a potential from per-piece `(c2, c1)` pairs, choosing every
    /// constant term so that the result is continuous and the first piece
    /// takes `anchor` at the first breakpoint (or at zero if there is none).
    pub fn continuous(breakpoints: Vec<f64>, derivs: &[(f64, f64)], anchor: f64) -> Result<Self> {
        if derivs.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidPotential(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                derivs.len()
            )));
        }
        let first_at = breakpoints.first().copied().unwrap_or(0.0);
        let (c2, c1) = derivs[0];
        let mut pieces = vec![Quadratic::new(
            c2,
            c1,
            anchor - c2 * first_at * first_at - c1 * first_at,
        )];
        for (i, &(c2, c1)) in derivs.iter().enumerate().skip(1) {
            let b = breakpoints[i - 1];
            let value = pieces[i - 1].eval(b);
            pieces.push(Quadratic::new(c2, c1, value - c2 * b * b - c1 * b));
        }
        Self::new(breakpoints, pieces)
    }

    /// `0` for `r ≤ 0`, `r²/2` on `[0, 1]`, `1/2` for `r ≥ 1`.
    pub fn j1() -> Self {
        Self::new(
            vec![0.0, 1.0],
            vec![
                Quadratic::new(0.0, 0.0, 0.0),
                Quadratic::new(0.5, 0.0, 0.0),
                Quadratic::new(0.0, 0.0, 0.5),
            ],
        )
        .expect("j1 is a valid potential")
    }

    /// `0` for `r ≤ 1`, `(1 - (r-2)²)/2` on `[1, 2]`, `1/2` for `r ≥ 2`.
    pub fn j2() -> Self {
        // (1 - (r-2)^2)/2 = -r^2/2 + 2r - 3/2
        Self::new(
            vec![1.0, 2.0],
            vec![
                Quadratic::new(0.0, 0.0, 0.0),
                Quadratic::new(-0.5, 2.0, -1.5),
                Quadratic::new(0.0, 0.0, 0.5),
            ],
        )
        .expect("j2 is a valid potential")
    }

    /// The zero potential; its graph is `ξ = 0` and the problem reduces to
    /// the linear heat equation with a homogeneous Neumann end.
    pub fn zero() -> Self {
        Self::new(vec![], vec![Quadratic::new(0.0, 0.0, 0.0)]).expect("zero potential")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Quadratic] {
        &self.pieces
    }

    fn piece_index(&self, r: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < r)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.pieces[self.piece_index(r)].eval(r)
    }

    /// Exact Clarke generalized gradient.
    pub fn clarke_subdifferential(&self) -> SubdifferentialGraph {
        let mut segments = Vec::with_capacity(2 * self.pieces.len());
        for (i, piece) in self.pieces.iter().enumerate() {
            let lo = if i == 0 {
                f64::NEG_INFINITY
            } else {
                self.breakpoints[i - 1]
            };
            let hi = self.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
            segments.push(Segment::Affine {
                r_lo: lo,
                r_hi: hi,
                slope: 2.0 * piece.c2,
                intercept: piece.c1,
            });
            if let Some(&b) = self.breakpoints.get(i) {
                let left = piece.derivative(b);
                let right = self.pieces[i + 1].derivative(b);
                if (left - right).abs() > MEMBERSHIP_TOL {
                    segments.push(Segment::Vertical {
                        r: b,
                        xi_lo: left.min(right),
                        xi_hi: left.max(right),
                    });
                }
            }
        }
        SubdifferentialGraph { segments }
    }
}

/// Free-function form of [`PiecewiseQuadraticPotential::clarke_subdifferential`].
pub fn clarke_subdifferential(j: &PiecewiseQuadraticPotential) -> SubdifferentialGraph {
    j.clarke_subdifferential()
}

/// A closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    fn hull(self, other: Self) -> Self {
        Self {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// `ξ = slope·r + intercept` on the closed interval `[r_lo, r_hi]`.
    Affine {
        r_lo: f64,
        r_hi: f64,
        slope: f64,
        intercept: f64,
    },
    /// The whole interval `[xi_lo, xi_hi]` at `r`.
    Vertical { r: f64, xi_lo: f64, xi_hi: f64 },
}

impl Segment {
    pub fn is_vertical(&self) -> bool {
        matches!(self, Segment::Vertical { .. })
    }

    /// Values of the segment at `r`, or `None` when `r` is outside it.
    pub fn select(&self, r: f64) -> Option<Interval> {
        match *self {
            Segment::Affine {
                r_lo,
                r_hi,
                slope,
                intercept,
            } => (r >= r_lo && r <= r_hi).then(|| Interval::point(slope * r + intercept)),
            Segment::Vertical {
                r: at,
                xi_lo,
                xi_hi,
            } => (r == at).then_some(Interval {
                lo: xi_lo,
                hi: xi_hi,
            }),
        }
    }

    pub fn contains(&self, r: f64, xi: f64, tol: f64) -> bool {
        match *self {
            Segment::Affine {
                r_lo,
                r_hi,
                slope,
                intercept,
            } => r >= r_lo - tol && r <= r_hi + tol && (slope * r + intercept - xi).abs() <= tol,
            Segment::Vertical {
                r: at,
                xi_lo,
                xi_hi,
            } => (r - at).abs() <= tol && xi >= xi_lo - tol && xi <= xi_hi + tol,
        }
    }
}

/// Graph of a Clarke subdifferential as an ordered list of segments.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdifferentialGraph {
    segments: Vec<Segment>,
}

impl SubdifferentialGraph {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// `∂j(r)` as a closed interval; a singleton away from vertical segments.
    pub fn select(&self, r: f64) -> Interval {
        self.segments
            .iter()
            .filter_map(|s| s.select(r))
            .reduce(Interval::hull)
            .expect("affine segments tile the real line")
    }

    /// Whether `(r, xi)` lies on the graph within `tol`.
    pub fn contains(&self, r: f64, xi: f64, tol: f64) -> bool {
        self.segments.iter().any(|s| s.contains(r, xi, tol))
    }

    /// Smallest `c ≥ 0` with `|ξ| ≤ c(1 + |r|)` on the whole graph.
    ///
    /// On an affine piece `|slope·r + intercept| / (1 + |r|)` is monotone
    /// between sign changes of `r` and of the numerator, so the supremum is
    /// attained at a finite endpoint, at `r = 0`, or in the limit `|slope|`
    /// along an unbounded end.
    pub fn growth_constant(&self) -> f64 {
        let ratio = |r: f64, xi: f64| xi.abs() / (1.0 + r.abs());
        let mut c: f64 = 0.0;
        for seg in &self.segments {
            match *seg {
                Segment::Affine {
                    r_lo,
                    r_hi,
                    slope,
                    intercept,
                } => {
                    for end in [r_lo, r_hi] {
                        if end.is_finite() {
                            c = c.max(ratio(end, slope * end + intercept));
                        } else {
                            c = c.max(slope.abs());
                        }
                    }
                    if r_lo <= 0.0 && 0.0 <= r_hi {
                        c = c.max(intercept.abs());
                    }
                }
                Segment::Vertical { r, xi_lo, xi_hi } => {
                    c = c.max(ratio(r, xi_lo)).max(ratio(r, xi_hi));
                }
            }
        }
        c
    }
}
