use std::f64::consts::PI;

use approx::assert_relative_eq;
use hypimcf::quadrature::unit_sphere_area;
use hypimcf::starshape::{
    geometry, graph_from_text, graph_to_text, mean_curvature_oracle, PolarGrid, RadialGraph,
};
use proptest::prelude::*;

fn grid(n: usize, nodes: usize) -> PolarGrid {
    PolarGrid::new(n, nodes).unwrap()
}

#[test]
fn perturbed_curvature_matches_first_variation() {
    let g = RadialGraph::perturbed(grid(3, 512), 1.0, 0.1, 2).unwrap();
    let geo = geometry(&g).unwrap();
    let mut worst: f64 = 0.0;
    for node in 0..512 {
        let oracle = mean_curvature_oracle(&g, node).unwrap();
        worst = worst.max((oracle - geo.mean_curvature[node]).abs());
    }
    assert!(worst < 5e-3, "worst deviation {worst}");
}

#[test]
fn offset_sphere_is_umbilic_with_known_integrals() {
    for n in [3usize, 4, 5] {
        let (c, a) = (0.5, 1.5);
        let g = RadialGraph::offset_sphere(grid(n, 513), c, a).unwrap();
        let geo = geometry(&g).unwrap();
        let expected_h = (n as f64 - 1.0) / a.tanh();
        for (i, h) in geo.mean_curvature.iter().enumerate() {
            assert!((h - expected_h).abs() < 2e-4, "n={n} node={i} H={h}");
        }
        let w = unit_sphere_area(n - 1);
        let sa = a.sinh();
        assert_relative_eq!(geo.area(), w * sa.powi(n as i32 - 1), max_relative = 1e-6);
        assert_relative_eq!(
            geo.bulk_potential(),
            c.cosh() * w * sa.powi(n as i32) / n as f64,
            max_relative = 1e-6
        );
    }
}

#[test]
fn quadrature_converges_on_offset_spheres() {
    let exact = 4.0 * PI * 1.5f64.sinh().powi(2);
    let err = |nodes: usize| {
        let g = RadialGraph::offset_sphere(grid(3, nodes), 0.5, 1.5).unwrap();
        (geometry(&g).unwrap().area() - exact).abs()
    };
    let (coarse, fine) = (err(33), err(65));
    assert!(coarse / fine > 3.5, "ratio {}", coarse / fine);
}

#[test]
fn sphere_quantities_resolution_independent() {
    let a = geometry(&RadialGraph::sphere(grid(3, 64), 1.3).unwrap()).unwrap();
    let b = geometry(&RadialGraph::sphere(grid(3, 257), 1.3).unwrap()).unwrap();
    assert_relative_eq!(a.area(), b.area(), max_relative = 1e-12);
    assert_relative_eq!(
        a.weighted_total_curvature(),
        b.weighted_total_curvature(),
        max_relative = 1e-12
    );
}

fn smooth_graph(n: usize, nodes: usize, coeffs: &[f64]) -> RadialGraph {
    RadialGraph::from_fn(grid(n, nodes), "random", |psi| {
        1.0 + coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| a * (2.0 * (k as f64 + 1.0) * psi).cos())
            .sum::<f64>()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn divergence_identity(n in 3usize..=7, a in -0.08..0.08f64, b in -0.04..0.04f64) {
        let geo = geometry(&smooth_graph(n, 512, &[a, b])).unwrap();
        let rel = (geo.support_integral() - n as f64 * geo.bulk_potential()).abs()
            / geo.support_integral();
        prop_assert!(rel < 1e-4);
    }

    #[test]
    fn integrated_potential_identity(n in 3usize..=7, a in -0.08..0.08f64, b in -0.04..0.04f64) {
        let geo = geometry(&smooth_graph(n, 512, &[a, b])).unwrap();
        let lhs = geo.curvature_support_integral();
        let rhs = (n as f64 - 1.0) * geo.potential_integral();
        prop_assert!((lhs - rhs).abs() / geo.potential_integral() < 1e-3, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn curvature_agrees_with_oracle(a in -0.08..0.08f64, b in -0.03..0.03f64, node in 0usize..512) {
        let g = smooth_graph(3, 512, &[a, b]);
        let geo = geometry(&g).unwrap();
        let oracle = mean_curvature_oracle(&g, node).unwrap();
        prop_assert!((oracle - geo.mean_curvature[node]).abs() < 5e-3);
    }

    #[test]
    fn text_round_trip(n in 3usize..=7, nodes in 16usize..80, a in -0.3..0.3f64) {
        let g = RadialGraph::perturbed(grid(n, nodes), 1.0, a, 2).unwrap();
        let back = graph_from_text(&graph_to_text(&g)).unwrap();
        prop_assert_eq!(back.r(), g.r());
    }

    #[test]
    fn sphere_relation_h_phi(n in 3usize..=7, r in 0.1..3.0f64) {
        let geo = geometry(&RadialGraph::sphere(grid(n, 64), r).unwrap()).unwrap();
        for i in 0..64 {
            let lhs = geo.mean_curvature[i] * geo.support[i];
            prop_assert!((lhs - (n as f64 - 1.0) * r.cosh()).abs() < 1e-12 * r.cosh() * n as f64);
        }
    }
}
