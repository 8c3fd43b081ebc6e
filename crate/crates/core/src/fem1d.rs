//! P1 finite elements on a uniform mesh of (0, 1) with a Dirichlet node at
//! `x = 0`. The Dirichlet node is eliminated, so the unknowns are the nodal
//! values at `x_1, …, x_n` and the last one sits on the boundary `x = 1`.

use std::ops::{Add, Mul};

use num_traits::{FromPrimitive, Num};

use crate::error::{Error, Result};

/// Pivots smaller than this in magnitude are treated as singular.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    n: usize,
    dx: f64,
}

impl Mesh1D {
    pub fn new(n: usize, dx: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMesh(format!(
                "need at least 2 free nodes, got {n}"
            )));
        }
        if dx.is_nan() || dx <= 0.0 || (n as f64 * dx - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMesh(format!("n·dx must be 1, got {n}·{dx}")));
        }
        Ok(Self { n, dx })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(n, 1.0 / n as f64)
    }

    /// Number of free nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Coordinate of free node `i` (1-based, `x_n = 1`).
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n { 1.0 } else { i as f64 * self.dx }
    }

    /// Coordinates of the free nodes `x_1, …, x_n`.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.n).map(|i| self.node(i))
    }
}

/// A tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem<T = f64> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Num + Copy> TridiagonalSystem<T> {
    pub fn new(lower: Vec<T>, diag: Vec<T>, upper: Vec<T>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for off in [&lower, &upper] {
            if off.len() != n - 1 {
                return Err(Error::DimensionMismatch {
                    expected: n - 1,
                    got: off.len(),
                });
            }
        }
        Ok(Self { lower, diag, upper })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            lower: vec![T::zero(); n - 1],
            diag: vec![T::one(); n],
            upper: vec![T::zero(); n - 1],
        }
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    /// Entries `(a_{i,i-1}, a_{i,i}, a_{i,i+1})` of row `i` (0-based), with
    /// zero outside the matrix.
    pub fn row(&self, i: usize) -> (T, T, T) {
        let lo = if i > 0 { self.lower[i - 1] } else { T::zero() };
        let up = if i + 1 < self.size() {
            self.upper[i]
        } else {
            T::zero()
        };
        (lo, self.diag[i], up)
    }

    pub fn scale(&self, s: T) -> Self {
        let map = |v: &[T]| v.iter().map(|&x| x * s).collect();
        Self {
            lower: map(&self.lower),
            diag: map(&self.diag),
            upper: map(&self.upper),
        }
    }

    /// Leading principal submatrix of size `m`.
    pub fn leading(&self, m: usize) -> Self {
        assert!(m >= 1 && m <= self.size());
        Self {
            lower: self.lower[..m - 1].to_vec(),
            diag: self.diag[..m].to_vec(),
            upper: self.upper[..m - 1].to_vec(),
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let n = self.size();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let (lo, d, up) = self.row(i);
                let mut s = d * x[i];
                if i > 0 {
                    s = s + lo * x[i - 1];
                }
                if i + 1 < n {
                    s = s + up * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower == self.upper
    }
}

impl<T: Num + Copy> Add for &TridiagonalSystem<T> {
    type Output = TridiagonalSystem<T>;

    fn add(self, rhs: Self) -> TridiagonalSystem<T> {
        assert_eq!(self.size(), rhs.size());
        let zip = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x + y).collect();
        TridiagonalSystem {
            lower: zip(&self.lower, &rhs.lower),
            diag: zip(&self.diag, &rhs.diag),
            upper: zip(&self.upper, &rhs.upper),
        }
    }
}

impl<T: Num + Copy> Mul<T> for &TridiagonalSystem<T> {
    type Output = TridiagonalSystem<T>;

    fn mul(self, s: T) -> TridiagonalSystem<T> {
        self.scale(s)
    }
}

impl TridiagonalSystem<f64> {
    /// Thomas algorithm without pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.size();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let mut c = vec![0.0; n];
        let mut x = rhs.to_vec();
        let mut pivot = self.diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = self.diag[i] - self.lower[i - 1] * c[i - 1];
            }
            if pivot.is_nan() || pivot.abs() < PIVOT_TOL {
                return Err(Error::SingularPivot { row: i, pivot });
            }
            if i + 1 < n {
                c[i] = self.upper[i] / pivot;
            }
            x[i] = if i > 0 {
                (x[i] - self.lower[i - 1] * x[i - 1]) / pivot
            } else {
                x[i] / pivot
            };
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            let (lo, d, up) = self.row(i);
            a[i][i] = d;
            if i > 0 {
                a[i][i - 1] = lo;
            }
            if i + 1 < n {
                a[i][i + 1] = up;
            }
        }
        a
    }
}

pub fn solve_tridiagonal(sys: &TridiagonalSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    sys.solve(rhs)
}

fn from_int<T: FromPrimitive>(v: i64) -> T {
    T::from_i64(v).expect("small integer is representable")
}

/// Mass matrix `∫ v_i v_j` with exact coefficients, for any field `T`.
pub fn assemble_mass_with<T: Num + Copy + FromPrimitive>(n: usize, dx: T) -> TridiagonalSystem<T> {
    let two_thirds = dx * from_int(2) / from_int(3);
    let mut diag = vec![two_thirds; n];
    diag[n - 1] = dx / from_int(3);
    let off = vec![dx / from_int(6); n - 1];
    TridiagonalSystem {
        lower: off.clone(),
        diag,
        upper: off,
    }
}

/// Stiffness matrix `∫ v_i' v_j'` with exact coefficients.
pub fn assemble_stiffness_with<T: Num + Copy + FromPrimitive>(
    n: usize,
    dx: T,
) -> TridiagonalSystem<T> {
    let inv = T::one() / dx;
    let mut diag = vec![inv * from_int(2); n];
    diag[n - 1] = inv;
    let off = vec![T::zero() - inv; n - 1];
    TridiagonalSystem {
        lower: off.clone(),
        diag,
        upper: off,
    }
}

pub fn assemble_mass(mesh: &Mesh1D) -> TridiagonalSystem {
    assemble_mass_with(mesh.n(), mesh.dx())
}

pub fn assemble_stiffness(mesh: &Mesh1D) -> TridiagonalSystem {
    assemble_stiffness_with(mesh.n(), mesh.dx())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discrete `H`, `V` and `V*` norms on `V_n`, with the matrices assembled once.
///
/// `V` carries the full `H¹` inner product `M + K`; the `V*` norm of a
/// functional with action vector `g` is `√(gᵀ (M+K)⁻¹ g)`.
#[derive(Debug, Clone)]
pub struct DiscreteNorms {
    mesh: Mesh1D,
    mass: TridiagonalSystem,
    gram_v: TridiagonalSystem,
}

impl DiscreteNorms {
    pub fn new(mesh: &Mesh1D) -> Self {
        let mass = assemble_mass(mesh);
        let gram_v = &mass + &assemble_stiffness(mesh);
        Self {
            mesh: *mesh,
            mass,
            gram_v,
        }
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn mass(&self) -> &TridiagonalSystem {
        &self.mass
    }

    pub fn h(&self, c: &[f64]) -> f64 {
        dot(c, &self.mass.matvec(c)).max(0.0).sqrt()
    }

    pub fn v(&self, c: &[f64]) -> f64 {
        dot(c, &self.gram_v.matvec(c)).max(0.0).sqrt()
    }

    /// `V*` norm of the functional with action vector `g`.
    pub fn dual(&self, g: &[f64]) -> Result<f64> {
        let w = self.gram_v.solve(g)?;
        Ok(dot(g, &w).max(0.0).sqrt())
    }

    /// Riesz representative `(M+K)⁻¹ M c` of `c ∈ H ⊂ V*`; its `V` norm is
    /// the `V*` norm of `c`.
    pub fn riesz_of_h(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.gram_v.solve(&self.mass.matvec(c))
    }

    /// `V*` norm of `c` viewed as an element of `H ⊂ V*`, i.e. of `M c`.
    pub fn dual_of_h(&self, c: &[f64]) -> Result<f64> {
        self.dual(&self.mass.matvec(c))
    }
}

pub fn norm_h(mesh: &Mesh1D, coeffs: &[f64]) -> f64 {
    dot(coeffs, &assemble_mass(mesh).matvec(coeffs))
        .max(0.0)
        .sqrt()
}

pub fn norm_v(mesh: &Mesh1D, coeffs: &[f64]) -> f64 {
    DiscreteNorms::new(mesh).v(coeffs)
}

pub fn dual_norm(mesh: &Mesh1D, functional: &[f64]) -> Result<f64> {
    DiscreteNorms::new(mesh).dual(functional)
}
