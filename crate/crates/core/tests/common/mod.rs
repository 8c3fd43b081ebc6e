//! Independent oracles shared by the integration tests. Nothing here calls
//! the solver paths it is used to check.

#![allow(dead_code)]

use rand::Rng;
use rothe_hvi::nonsmooth::{PiecewiseQuadraticPotential, SubdifferentialGraph};

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        x.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            let (upper, lower) = m.split_at_mut(row);
            for (a, b) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *a -= f * b;
            }
            x[row] -= f * x[col];
        }
    }
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (x[row] - s) / m[row][row];
    }
    x
}

pub fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

/// Dense `M/τ + K` and `M` for the uniform P1 mesh with `n` free nodes,
/// assembled element by element from the hat-function integrals.
pub fn dense_step_matrices(n: usize, tau: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let dx = 1.0 / n as f64;
    let mut m = vec![vec![0.0; n]; n];
    let mut k = vec![vec![0.0; n]; n];
    // element e spans nodes e and e+1 (node 0 is the Dirichlet node)
    for e in 0..n {
        let local_m = [[dx / 3.0, dx / 6.0], [dx / 6.0, dx / 3.0]];
        let local_k = [[1.0 / dx, -1.0 / dx], [-1.0 / dx, 1.0 / dx]];
        let nodes = [e as isize - 1, e as isize];
        for a in 0..2 {
            for b in 0..2 {
                if nodes[a] >= 0 && nodes[b] >= 0 {
                    let (i, j) = (nodes[a] as usize, nodes[b] as usize);
                    m[i][j] += local_m[a][b];
                    k[i][j] += local_k[a][b];
                }
            }
        }
    }
    let lhs = (0..n)
        .map(|i| (0..n).map(|j| m[i][j] / tau + k[i][j]).collect())
        .collect();
    (lhs, m)
}

/// Every solution of `lhs·α + e_n ξ = rhs`, `ξ ∈ ∂j(α_n)`, by eliminating
/// the interior unknowns densely and scanning the scalar inclusion
/// `g·r + ∂j(r) ∋ c` over a grid of spacing `h` (plus the breakpoints).
pub fn schur_scan(
    lhs: &[Vec<f64>],
    rhs: &[f64],
    graph: &SubdifferentialGraph,
    breakpoints: &[f64],
    h: f64,
) -> Vec<Vec<f64>> {
    let n = rhs.len();
    let interior: Vec<Vec<f64>> = lhs[..n - 1].iter().map(|r| r[..n - 1].to_vec()).collect();
    let col: Vec<f64> = lhs[..n - 1].iter().map(|r| r[n - 1]).collect();
    let y_b = dense_solve(&interior, &rhs[..n - 1]);
    let y_c = dense_solve(&interior, &col);
    // α_I(r) = y_b − r·y_c
    let row = &lhs[n - 1];
    let g = row[n - 1] - (0..n - 1).map(|i| row[i] * y_c[i]).sum::<f64>();
    let c = rhs[n - 1] - (0..n - 1).map(|i| row[i] * y_b[i]).sum::<f64>();

    // ξ is bounded on the tested graphs, so every root lies in
    // [(c − ξ_max)/g, (c − ξ_min)/g].
    let (mut xi_min, mut xi_max) = (0.0f64, 0.0f64);
    for s in -2000..=2000 {
        let iv = graph.select(s as f64 * 0.01);
        xi_min = xi_min.min(iv.lo);
        xi_max = xi_max.max(iv.hi);
    }
    for &b in breakpoints {
        let iv = graph.select(b);
        xi_min = xi_min.min(iv.lo);
        xi_max = xi_max.max(iv.hi);
    }
    assert!(g > 0.0);
    let lo = (c - xi_max) / g - 10.0 * h;
    let hi = (c - xi_min) / g + 10.0 * h;

    let mut points: Vec<f64> = (0..=((hi - lo) / h).ceil() as usize)
        .map(|i| lo + i as f64 * h)
        .collect();
    points.extend(breakpoints.iter().copied().filter(|&b| b > lo && b < hi));
    points.sort_by(f64::total_cmp);
    points.dedup();

    let f = |r: f64| {
        let iv = graph.select(r);
        (g * r + iv.lo - c, g * r + iv.hi - c)
    };
    let tol = 1e-12 * (1.0 + c.abs());
    let mut roots: Vec<f64> = Vec::new();
    for (i, &r) in points.iter().enumerate() {
        let (a, b) = f(r);
        if a < b && a <= tol && b >= -tol {
            roots.push(r);
        }
        if let Some(&next) = points.get(i + 1) {
            // no breakpoint strictly inside the cell, so the graph is affine
            // there: extrapolate from two interior samples
            let (p, q) = (r + (next - r) / 3.0, r + 2.0 * (next - r) / 3.0);
            let (fp, fq) = (f(p).0, f(q).0);
            let slope = (fq - fp) / (q - p);
            if slope.abs() > 0.0 {
                let root = p - fp / slope;
                if root >= r - 1e-12 && root <= next + 1e-12 {
                    roots.push(root.clamp(r, next));
                }
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    roots
        .into_iter()
        .map(|r| {
            let mut state: Vec<f64> = y_b.iter().zip(&y_c).map(|(b, c)| b - r * c).collect();
            state.push(r);
            state
        })
        .collect()
}

/// Random continuous piecewise-quadratic potential with linear tails and
/// bounded derivative.
pub fn random_potential<R: Rng>(rng: &mut R) -> PiecewiseQuadraticPotential {
    let m = rng.gen_range(1..=4);
    let mut breakpoints: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..3.0)).collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup_by(|a, b| (*a - *b).abs() < 0.05);
    let mut derivs = vec![(0.0, rng.gen_range(-1.0..1.0))];
    for _ in 1..breakpoints.len() {
        derivs.push((rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
    }
    derivs.push((0.0, rng.gen_range(-1.0..1.0)));
    PiecewiseQuadraticPotential::continuous(breakpoints, &derivs, rng.gen_range(-1.0..1.0)).unwrap()
}

/// Finite-difference estimate of `j°(r; d)`: the largest difference
/// quotient `(j(y + t d) − j(y))/t` over base points `y` within `1e-7` of
/// `r` and steps `t` in `[1e-8, 1e-7]`.
pub fn clarke_directional_fd(j: &PiecewiseQuadraticPotential, r: f64, d: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for m in -10..=10 {
        let y = r + m as f64 * 1e-8;
        for t in [1e-8, 3e-8, 1e-7] {
            best = best.max((j.eval(y + t * d) - j.eval(y)) / t);
        }
    }
    best
}

/// Squared `BV²` seminorm by enumerating every index subsequence.
pub fn bv2_brute_force<F: Fn(&[f64]) -> f64>(values: &[Vec<f64>], norm: F) -> f64 {
    let n = values.len();
    let mut best: f64 = 0.0;
    for mask in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mut s = 0.0;
        for w in idx.windows(2) {
            let d: Vec<f64> = values[w[1]]
                .iter()
                .zip(&values[w[0]])
                .map(|(a, b)| a - b)
                .collect();
            s += norm(&d).powi(2);
        }
        best = best.max(s);
    }
    best
}
