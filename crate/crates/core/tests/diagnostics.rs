use hgtc::cli::{self, preset};
use hgtc::diagnostics::{
    compatibility_errors, diagnostics_csv, entropy_inequality_audit, l1_error, l2_error,
    observed_order, sample, CSV_HEADER,
};
use hgtc::physics::{primitives_from_state, state_from_primitives, ModelParams};
use hgtc::solver::FieldSet;

use nalgebra::{Matrix3 as Mat3, Vector3 as Vec3};

fn unit_square_mesh(h: f64) -> hgtc::mesh::Mesh {
    let mut cfg = preset("stationary_contact").unwrap();
    cfg.h = h;
    cli::build_mesh(&cfg).unwrap()
}

#[test]
fn observed_order_recovers_known_rates() {
    let hs = [0.4, 0.2, 0.1];
    // errors ~ h^2 give order 2 exactly in the log ratios
    let e2: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
    for o in observed_order(&hs, &e2) {
        assert!((o - 2.0).abs() < 1e-12);
    }
    // uneven refinement ratios still work
    let hs = [0.3, 0.22, 0.07];
    let e1: Vec<f64> = hs.iter().map(|h| 0.5 * h).collect();
    for o in observed_order(&hs, &e1) {
        assert!((o - 1.0).abs() < 1e-12);
    }
    // an exactly-zero fine error reports an infinite rate
    let inf = observed_order(&[0.2, 0.1], &[1e-3, 0.0]);
    assert!(inf[0].is_infinite());
}

#[test]
#[should_panic]
fn observed_order_rejects_nondecreasing_resolution() {
    observed_order(&[0.1, 0.1], &[1.0, 1.0]);
}

#[test]
fn error_norms_match_closed_forms_on_simple_data() {
    let mesh = unit_square_mesh(0.11);
    let total_area: f64 = mesh.cells.iter().map(|c| c.area).sum();
    assert!((total_area - 1.0).abs() < 1e-10);

    // constant offset: L2 = c * sqrt(area), L1 = c * area
    let vals = vec![2.5; mesh.cells.len()];
    let l2 = l2_error(&mesh, &vals, |_| 2.0);
    let l1 = l1_error(&mesh, &vals, |_| 2.0);
    assert!((l2 - 0.5 * total_area.sqrt()).abs() < 1e-12);
    assert!((l1 - 0.5 * total_area).abs() < 1e-12);

    // sampling the exact function at barycenters gives zero error
    let f = |x: [f64; 2]| x[0] + 3.0 * x[1];
    let sampled: Vec<f64> = mesh.cells.iter().map(|c| f(c.barycenter)).collect();
    assert_eq!(l2_error(&mesh, &sampled, f), 0.0);
    assert_eq!(l1_error(&mesh, &sampled, f), 0.0);
}

#[test]
fn compatibility_errors_vanish_at_consistent_initialization() {
    let params = ModelParams::default();
    let u = state_from_primitives(
        1.3,
        &Vec3::new(0.2, -0.1, 0.0),
        0.9,
        &(Mat3::identity() * 1.3f64.cbrt()),
        &Vec3::zeros(),
        1.0,
        &params,
    )
    .unwrap();
    let fields = FieldSet::from_states(vec![u; 4], &params).unwrap();
    let (da, ds) = compatibility_errors(&fields, &params).unwrap();
    assert!(da.abs() < 1e-14 && ds.abs() < 1e-12);

    // perturbing a companion shows up in the corresponding monitor only
    let mut drifted = fields.clone();
    drifted.det_companion[2] += 1e-3;
    let (da, _) = compatibility_errors(&drifted, &params).unwrap();
    assert!((da - 1e-3).abs() < 1e-15);
}

#[test]
fn sample_reports_exact_totals_on_a_uniform_field() {
    let params = ModelParams::default();
    let mesh = unit_square_mesh(0.2);
    let u = state_from_primitives(
        2.0,
        &Vec3::new(0.3, 0.0, 0.0),
        1.5,
        &(Mat3::identity() * 2.0f64.cbrt()),
        &Vec3::zeros(),
        1.0,
        &params,
    )
    .unwrap();
    let prim = primitives_from_state(&u, &params).unwrap();
    let fields = FieldSet::from_states(vec![u; mesh.cells.len()], &params).unwrap();
    let s = sample(&mesh, &fields, &params).unwrap();
    assert!((s.mass - 2.0).abs() < 1e-10);
    assert!((s.energy - u.energy).abs() < 1e-10);
    assert!((s.entropy - 2.0 * prim.s).abs() < 1e-10);
    assert!((s.min_p - 1.5).abs() < 1e-14);
    assert!((s.min_rho - 2.0).abs() < 1e-14);
}

#[test]
fn entropy_audit_flags_the_worst_normalized_cell() {
    let audit = [1.0, -2e-12, 3.0];
    let companions = [0.5, 1.0, 4.0];
    let worst = entropy_inequality_audit(&audit, &companions);
    assert!((worst - (-1e-12)).abs() < 1e-24);
    // all-positive production audits clean
    assert!(entropy_inequality_audit(&[0.1, 0.2], &[1.0, 1.0]) > 0.0);
}

#[test]
fn diagnostics_csv_round_trips_every_column() {
    let s = hgtc::diagnostics::DiagnosticsSample {
        t: 0.125,
        delta_a: 3.0e-13,
        delta_s: 4.5e-7,
        mass: 1.0 + 1e-15,
        energy: 2.75,
        entropy: -0.3,
        min_p: 0.7142857142857143,
        min_rho: 1.0,
    };
    let csv = diagnostics_csv(&[s]);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|t| t.parse().unwrap())
        .collect();
    let want = [s.t, s.delta_a, s.delta_s, s.mass, s.energy, s.entropy, s.min_p, s.min_rho];
    for (a, b) in row.iter().zip(want.iter()) {
        assert_eq!(a, b, "column did not survive the round trip");
    }
}
