use hypimcf::certificate::{Verdict, Witness};
use hypimcf::hypgeo::{ball_radius, SphereInversion};
use hypimcf::reflect::*;
use hypimcf::starshape::{PolarGrid, RadialGraph};
use nalgebra::DVector;
use proptest::prelude::*;

fn grid(nodes: usize) -> PolarGrid {
    PolarGrid::new(3, nodes).unwrap()
}

fn axis() -> DVector<f64> {
    DVector::from_vec(vec![1.0, 0.0, 0.0])
}

/// The expanding-sphere solution from a centered ball, sampled on a polar grid.
struct RadialField {
    r0: f64,
    r_max: f64,
}

impl MeridianField for RadialField {
    fn value_at(&self, r: f64, _psi: f64) -> Option<f64> {
        (r <= self.r_max).then(|| 2.0 * (r.sinh() / self.r0.sinh()).ln().max(0.0))
    }

    fn samples(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for i in 0..=40 {
            let r = self.r0 + (self.r_max - self.r0) * i as f64 / 40.0;
            for j in 0..=24 {
                let psi = std::f64::consts::PI * j as f64 / 24.0;
                out.push((r, psi, self.value_at(r, psi).unwrap()));
            }
        }
        out
    }
}

#[test]
fn folded_profile_fails_with_a_witness_pair() {
    // a meridian curve that turns back on itself near ψ = 0.3
    let mut samples: Vec<(f64, f64)> = (0..30).map(|k| (2.0, -1.0 + 0.045 * k as f64)).collect();
    samples.push((2.6, 0.31));
    samples.push((2.6, 0.0));
    let cloud = PointCloud::from_meridian(3, &samples, 1.0, "folded");
    let cert = certify_star_shaped(&cloud, ball_radius(1.0)).unwrap();
    assert_eq!(cert.verdict, Verdict::Failed);
    assert!(cert.margin < 0.0);
    assert!(matches!(cert.witness, Some(Witness::Pair(_, _))));
}

#[test]
fn cloud_inside_the_inner_ball_is_a_precondition_failure() {
    let g = RadialGraph::sphere(grid(33), 0.8).unwrap();
    let cert = certify_star_shaped(&PointCloud::from_graph(&g, 0.0), ball_radius(1.0)).unwrap();
    assert_eq!(cert.verdict, Verdict::PreconditionViolated);
    assert!(!cert.passed());
}

#[test]
fn radial_field_passes_the_comparison_for_every_reflection() {
    let field = RadialField { r0: 1.0, r_max: 3.5 };
    let omega0 = RadialGraph::sphere(grid(33), 1.0).unwrap();
    for lambda in [0.2, 0.5, 0.8] {
        let inv = SphereInversion::new(lambda, &axis()).unwrap();
        let cert = comparison_check(&field, &inv, &omega0, 0.0).unwrap();
        assert!(cert.passed(), "lambda={lambda} {cert:?}");
        assert!(cert.samples > 0);
    }
}

#[test]
fn failed_hypothesis_draws_no_conclusion() {
    // the sphere through λ = 0.2 passes between the origin and the ball's center at ρ ≈ 0.38,
    // so the larger part of Ω₀ lies in H and reflects outside
    let omega0 = RadialGraph::offset_sphere(grid(33), 0.8, 1.0).unwrap();
    let field = RadialField { r0: 0.1, r_max: 3.0 };
    let inv = SphereInversion::new(0.2, &axis()).unwrap();
    let cert = comparison_check(&field, &inv, &omega0, 0.0).unwrap();
    assert_eq!(cert.verdict, Verdict::HypothesisNotMet);
    assert_eq!(cert.samples, 0);
    assert!(!cert.passed());
}

#[test]
fn rigidity_threshold_brackets_a_bisection_oracle() {
    let g = RadialGraph::perturbed(grid(65), 2.0, 0.3, 2).unwrap();
    let (dr, _) = g.derivatives();
    // bisection on r+ for the first violated node, independent of the closed form
    let passes = |rp: f64| g.r().iter().zip(&dr).all(|(&r, d)| d.abs() <= hypimcf::starshape::gradient_bound(rp, r));
    // the bound grows with r+, so small r+ violate it
    let (mut lo, mut hi) = (1e-6, g.min_r() * (1.0 - 1e-9));
    assert!(!passes(lo) && passes(hi));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let report = rigidity_probe(&[0.5 * lo, (1.01 * hi).min(g.min_r() * 0.999)], &g).unwrap();
    assert!((report.threshold - lo).abs() < 1e-9, "{} vs {lo}", report.threshold);
    assert!(!report.rows[0].consistent && report.rows[1].consistent);
    assert!(!report.consistent_for_all);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradient_certificate_implies_star_certificate(
        r0 in 1.5..3.0f64,
        a in -0.3..0.3f64,
        k in 1u32..4,
        shrink in 0.3..0.95f64,
    ) {
        let g = RadialGraph::perturbed(grid(33), r0, a, k).unwrap();
        let r_plus = shrink * g.min_r();
        let gb = gradient_bound_check(&g, r_plus).unwrap();
        prop_assume!(gb.passed());
        let star = certify_star_shaped(&PointCloud::from_graph(&g, 0.0), ball_radius(r_plus)).unwrap();
        prop_assert!(star.passed(), "gradient margin {} star margin {}", gb.margin, star.margin);
    }

    #[test]
    fn waiting_time_is_monotone(r_minus in 0.2..2.0f64, gap in 0.0..2.0f64, bump in 0.01..0.5f64, n in 3usize..8) {
        let r_plus = r_minus + gap;
        let t = waiting_time(r_minus, r_plus, n).unwrap();
        prop_assert!(t >= 0.0);
        prop_assert_eq!(t == 0.0, gap == 0.0);
        prop_assert!(waiting_time(r_minus, r_plus + bump, n).unwrap() > t);
        if r_minus + bump <= r_plus {
            prop_assert!(waiting_time(r_minus + bump, r_plus, n).unwrap() < t);
        }
    }

    #[test]
    fn centered_spheres_are_star_shaped_for_every_inner_ball(r in 0.5..3.0f64, frac in 0.05..0.99f64) {
        let g = RadialGraph::sphere(grid(17), r).unwrap();
        let cert = certify_star_shaped(&PointCloud::from_graph(&g, 0.0), ball_radius(frac * r)).unwrap();
        prop_assert!(cert.passed());
        prop_assert!(cert.margin > 0.0);
    }
}
