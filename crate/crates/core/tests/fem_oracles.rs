mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rothe_hvi::fem1d::{
    DiscreteNorms, Mesh1D, TridiagonalSystem, assemble_mass, assemble_stiffness, dual_norm, norm_h,
    solve_tridiagonal,
};

fn to_nalgebra(sys: &TridiagonalSystem) -> DMatrix<f64> {
    let dense = sys.to_dense();
    let n = dense.len();
    DMatrix::from_fn(n, n, |i, j| dense[i][j])
}

#[test]
fn mass_and_stiffness_are_spd() {
    for n in 2..=12 {
        let mesh = Mesh1D::uniform(n).unwrap();
        for sys in [assemble_mass(&mesh), assemble_stiffness(&mesh)] {
            assert!(sys.is_symmetric());
            let eig = to_nalgebra(&sys).symmetric_eigenvalues();
            assert!(eig.iter().all(|&l| l > 0.0), "n={n}: {eig}");
        }
    }
}

#[test]
fn assembly_matches_element_oracle() {
    for n in 2..=9 {
        let tau = 0.02;
        let mesh = Mesh1D::uniform(n).unwrap();
        let (lhs, mass) = common::dense_step_matrices(n, tau);
        let got_m = assemble_mass(&mesh).to_dense();
        let got_lhs =
            (&assemble_mass(&mesh).scale(1.0 / tau) + &assemble_stiffness(&mesh)).to_dense();
        for i in 0..n {
            for j in 0..n {
                assert!((got_m[i][j] - mass[i][j]).abs() < 1e-13);
                assert!((got_lhs[i][j] - lhs[i][j]).abs() < 1e-9 * lhs[i][j].abs().max(1.0));
            }
        }
    }
}

#[test]
fn thomas_matches_dense_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..200 {
        let n: usize = 8;
        let lower: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let off = lower.get(i.wrapping_sub(1)).map_or(0.0, |v: &f64| v.abs())
                    + upper.get(i).map_or(0.0, |v| v.abs());
                (off + rng.gen_range(0.5..2.0)) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
            })
            .collect();
        let sys = TridiagonalSystem::new(lower, diag, upper).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let got = solve_tridiagonal(&sys, &b).unwrap();
        let want = common::dense_solve(&sys.to_dense(), &b);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }
    }
}

#[test]
fn dual_norm_matches_dense_gram_solve() {
    let n = 6;
    let mesh = Mesh1D::uniform(n).unwrap();
    let (_, mass) = common::dense_step_matrices(n, 1.0);
    let stiff = assemble_stiffness(&mesh).to_dense();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| mass[i][j] + stiff[i][j]).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z = common::dense_solve(&gram, &g);
        let want = g.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>().sqrt();
        assert!((dual_norm(&mesh, &g).unwrap() - want).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn dual_of_h_is_dominated_by_h_norm(c in prop::collection::vec(-10.0f64..10.0, 2..40)) {
        let mesh = Mesh1D::uniform(c.len()).unwrap();
        let norms = DiscreteNorms::new(&mesh);
        let mc = assemble_mass(&mesh).matvec(&c);
        let dual = dual_norm(&mesh, &mc).unwrap();
        prop_assert!(dual <= norm_h(&mesh, &c) * (1.0 + 1e-12) + 1e-15);
        prop_assert!((norms.dual_of_h(&c).unwrap() - dual).abs() <= 1e-10 * (1.0 + dual));
    }
}
