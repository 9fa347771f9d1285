use halfline_demo::{boundary_trace, period_curve, similarity_eigenvalues, similarity_profile};

#[test]
fn trace_is_interleaved_and_descending() {
    let tr = boundary_trace(1.0, 0.5, 10.0).unwrap();
    assert_eq!(tr.len() % 2, 0);
    assert!(tr.len() / 2 <= 2 * 400);
    let us: Vec<f64> = tr.chunks(2).map(|p| p[1]).collect();
    assert!(us.last().unwrap() < &-5.0);
    assert!(boundary_trace(1.0, 0.5, -1.0).is_err());
}

#[test]
fn period_curve_starts_at_two_pi_over_c() {
    let pts = period_curve(1.0, 0.5, 3).unwrap();
    assert_eq!(pts.len(), 6);
    assert!((pts[1] - std::f64::consts::TAU).abs() < 1e-3);
    assert!(pts[5] > pts[3] && pts[3] > pts[1]);
    assert!(period_curve(1.0, 1.2, 3).is_err());
}

#[test]
fn profile_and_spectrum() {
    let p = similarity_profile(8.0).unwrap();
    assert!((p[1] - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-8);
    let eig = similarity_eigenvalues(f64::NAN, 2).unwrap();
    assert!((eig[0] - 1.0).abs() < 1e-2);
    let neumann = similarity_eigenvalues(0.0, 1).unwrap();
    assert!((neumann[0] + 0.5).abs() < 1e-4);
}
