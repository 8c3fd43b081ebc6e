mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rothe_hvi::nonsmooth::{PiecewiseQuadraticPotential, Segment};

fn support(j: &PiecewiseQuadraticPotential, r: f64, d: f64) -> f64 {
    let iv = j.clarke_subdifferential().select(r);
    (iv.lo * d).max(iv.hi * d)
}

fn sample_points(j: &PiecewiseQuadraticPotential) -> Vec<f64> {
    let mut pts: Vec<f64> = (-30..=40).map(|i| i as f64 * 0.1 + 0.0371).collect();
    for &b in j.breakpoints() {
        pts.extend([b, b - 1e-3, b + 1e-3]);
    }
    pts
}

fn potentials() -> Vec<PiecewiseQuadraticPotential> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = vec![
        PiecewiseQuadraticPotential::j1(),
        PiecewiseQuadraticPotential::j2(),
    ];
    out.extend((0..5).map(|_| common::random_potential(&mut rng)));
    out
}

#[test]
fn support_function_matches_generalized_directional_derivative() {
    for j in potentials() {
        for r in sample_points(&j) {
            for d in [1.0, -1.0] {
                let fd = common::clarke_directional_fd(&j, r, d);
                let exact = support(&j, r, d);
                assert!((fd - exact).abs() < 1e-6, "r={r} d={d}: fd {fd} vs {exact}");
            }
        }
    }
}

#[test]
fn graph_is_upper_semicontinuous() {
    for j in potentials() {
        let graph = j.clarke_subdifferential();
        for &b in j.breakpoints() {
            let at = graph.select(b);
            for k in 1..=8 {
                let eps = 10f64.powi(-k);
                for r in [b - eps, b + eps] {
                    let near = graph.select(r);
                    let slack = 10.0 * eps;
                    assert!(near.lo >= at.lo - slack && near.hi <= at.hi + slack);
                }
            }
        }
    }
}

#[test]
fn integrating_the_graph_recovers_the_potential() {
    for j in potentials() {
        let graph = j.clarke_subdifferential();
        let (a, b) = (-3.0, 4.0);
        let mut nodes = vec![a];
        nodes.extend(j.breakpoints().iter().copied().filter(|&x| x > a && x < b));
        nodes.push(b);
        // ξ is affine between consecutive nodes, so the midpoint rule is exact
        let integral: f64 = nodes
            .windows(2)
            .map(|w| {
                let mid = graph.select(0.5 * (w[0] + w[1]));
                assert!(mid.is_singleton());
                mid.lo * (w[1] - w[0])
            })
            .sum();
        assert!((integral - (j.eval(b) - j.eval(a))).abs() < 1e-9);
    }
}

#[test]
fn vertical_segments_sit_exactly_at_derivative_jumps() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let j = common::random_potential(&mut rng);
        let graph = j.clarke_subdifferential();
        for seg in graph.segments() {
            if let Segment::Vertical { r, xi_lo, xi_hi } = *seg {
                assert!(j.breakpoints().contains(&r));
                let h = 1e-7;
                let left = (j.eval(r) - j.eval(r - h)) / h;
                let right = (j.eval(r + h) - j.eval(r)) / h;
                assert!((left.min(right) - xi_lo).abs() < 1e-5);
                assert!((left.max(right) - xi_hi).abs() < 1e-5);
            }
        }
        let probe: f64 = rng.gen_range(-5.0..5.0);
        assert!(graph.select(probe).lo <= graph.select(probe).hi);
    }
}

#[test]
fn growth_constant_dominates_sampled_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let j = common::random_potential(&mut rng);
        let graph = j.clarke_subdifferential();
        let c = graph.growth_constant();
        for i in -2000..=2000 {
            let r = i as f64 * 0.01;
            let iv = graph.select(r);
            let m = iv.lo.abs().max(iv.hi.abs());
            assert!(m <= c * (1.0 + r.abs()) + 1e-12, "r={r}: {m} > {c}(1+|r|)");
        }
    }
}
