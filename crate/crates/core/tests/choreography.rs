use std::f64::consts::TAU;
use std::path::Path;

use num_complex::Complex64;
use rotnbody::choreography::*;
use rotnbody::cli;
use rotnbody::problem::{Problem, ProblemParams};
use rotnbody::seqspace::SeqVec;
use rotnbody::solver::{newton_refine, seed_bundled_trefoil, NewtonSettings};

fn trefoil() -> (SeqVec<Complex64>, ProblemParams) {
    let seed = seed_bundled_trefoil();
    let pr = Problem::new(seed.params);
    let (x, _) = newton_refine(&pr, &seed.x0, &NewtonSettings::default(), &seed.reference()).unwrap();
    (x.u, seed.params)
}

fn ten_nine() -> (SeqVec<Complex64>, ProblemParams) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/configs/n4_10_9.json");
    let cfg = cli::load_config(&path).unwrap();
    let seed = cli::load_seed(&cfg).unwrap();
    (seed.x0.u, seed.params)
}

#[test]
fn trefoil_is_a_three_two_torus_knot() {
    let (u, params) = trefoil();
    let traj = to_inertial(&u, params, 4096).unwrap();
    let k = classify_knot(&traj).unwrap();
    assert_eq!(k.torus_type(), (3, 2), "{k:?}");
    assert!(!k.trivial);
    assert_eq!(k.z_axis_winding, (k.toroidal - params.q as i64) / params.p as i64);
}

#[test]
fn trefoil_closes_and_is_a_choreography() {
    let (u, params) = trefoil();
    assert!(closure_defect(&u, params) <= 1e-8);
    assert!(choreography_defect(&u, params, 2048).unwrap() <= 1e-10);
    assert!(dde_residual(&u, params, 1024) <= 1e-8);
    let rot = reconstruct_rotating(&u, params, 2048);
    assert!(min_pairwise_distance(&rot) >= 0.05);
    assert!(polygon_defect(&rot) <= 1e-10);
}

#[test]
fn ten_nine_set_is_invariant_under_tenth_turns() {
    let (u, params) = ten_nine();
    let traj = to_inertial(&u, params, 3000).unwrap();
    let path = &traj.bodies[params.n - 1];
    let spacing = path.windows(2).map(|w| {
        let (a, b) = (w[0].pos(), w[1].pos());
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    });
    let spacing = spacing.fold(0.0, f64::max);
    let symmetric = rotation_overlap(path, TAU / params.p as f64);
    let off = rotation_overlap(path, TAU / (2.0 * params.p as f64));
    assert!(symmetric <= spacing, "overlap {symmetric} spacing {spacing}");
    assert!(off > 10.0 * spacing, "half-step rotation overlaps too: {off}");

    let k = classify_knot(&traj).unwrap();
    assert_eq!(k.torus_type(), (10, 9), "{k:?}");
}

#[test]
fn export_round_trips() {
    let (u, params) = trefoil();
    let traj = to_inertial(&u, params, 257).unwrap();
    let rows = traj.rows();
    assert_eq!(rows.len(), params.n * 257);
    assert_eq!(parse_csv(&traj.to_csv()).unwrap(), rows);
    let back: TrajectoryFile = serde_json::from_str(&traj.to_json()).unwrap();
    assert_eq!(back.rows, rows);
    assert_eq!(back.frame, Frame::Inertial);
    assert_eq!(back.params, params);

    let dir = std::env::temp_dir().join(format!("rnb_export_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("t.csv");
    export(&traj, "csv".parse().unwrap(), &csv).unwrap();
    assert_eq!(parse_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap(), rows);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn malformed_csv_is_rejected() {
    assert!(parse_csv("x,y\n1,2\n").is_err());
    assert!(parse_csv("t,body,x,y,z\n1,2,3\n").is_err());
    assert!(parse_csv("t,body,x,y,z\n1,b,3,4,5\n").is_err());
    assert!("svg".parse::<ExportFormat>().is_err());
}

#[test]
fn rotating_frame_is_refused() {
    let (u, params) = trefoil();
    let rot = reconstruct_rotating(&u, params, 128);
    assert!(matches!(classify_knot(&rot), Err(ChoreographyError::WrongFrame { .. })));
}
