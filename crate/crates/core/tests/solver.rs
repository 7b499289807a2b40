use num_complex::Complex64;
use rotnbody::problem::{Problem, StateX};
use rotnbody::solver::{continue_omega, newton_refine, seed_bundled_trefoil, NewtonSettings, SolverError};

fn refined() -> (StateX<Complex64>, Vec<f64>) {
    let seed = seed_bundled_trefoil();
    let pr = Problem::new(seed.params);
    let (x, rep) = newton_refine(&pr, &seed.x0, &NewtonSettings::default(), &seed.reference()).unwrap();
    (x, rep.residuals)
}

#[test]
fn trefoil_newton_converges_quadratically() {
    let (_, res) = refined();
    println!("{res:?}");
    assert!(res.len() - 1 <= 5, "{res:?}");
    assert!(*res.last().unwrap() <= 1e-12);
    for w in res.windows(2) {
        if w[0] <= 1e-4 && w[1] > 1e-13 {
            assert!(w[1] <= 1e3 * w[0] * w[0], "{res:?}");
        }
    }
}

#[test]
fn trefoil_basin() {
    let seed = seed_bundled_trefoil();
    let pr = Problem::new(seed.params);
    let r = seed.reference();
    let s = NewtonSettings::default();
    let (x, _) = newton_refine(&pr, &seed.x0, &s, &r).unwrap();
    let m = seed.params.m;
    let mut xs = x.to_vec(m);
    // deterministic pseudo-random real perturbation of the cosine/sine parts
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for z in xs.iter_mut() {
        *z += Complex64::new(next(), next()) * 2e-4;
    }
    let mut y = StateX::from_vec(&xs, seed.params.n, m);
    y.symmetrize();
    let (z, _) = newton_refine(&pr, &y, &s, &r).unwrap();
    let d = z
        .to_vec(m)
        .iter()
        .zip(x.to_vec(m))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(d <= 1e-10, "{d}");
}

#[test]
fn exact_zero_needs_no_iterations() {
    let seed = seed_bundled_trefoil();
    let pr = Problem::new(seed.params);
    let r = seed.reference();
    let loose = NewtonSettings {
        tol: 1e-12,
        ..Default::default()
    };
    let (x, _) = newton_refine(&pr, &seed.x0, &loose, &r).unwrap();
    let (_, rep) = newton_refine(&pr, &x, &loose, &r).unwrap();
    assert_eq!(rep.iterations, 0);
}

#[test]
fn continuation_steps() {
    let seed = seed_bundled_trefoil();
    let pr = Problem::new(seed.params);
    let r = seed.reference();
    let s = NewtonSettings::default();
    let (x, _) = newton_refine(&pr, &seed.x0, &s, &r).unwrap();
    let om = seed.params.omega();
    let same = continue_omega(seed.params, &x, &r, om, om, 3, &s).unwrap();
    assert_eq!(same.len(), 1);
    let path = continue_omega(seed.params, &x, &r, om, om + 1e-3, 2, &s).unwrap();
    assert_eq!(path.len(), 3);
    let m = seed.params.m;
    let d = path[2]
        .to_vec(m)
        .iter()
        .zip(x.to_vec(m))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(d > 1e-6 && d < 1e-1, "{d}");
    for (i, st) in path.iter().enumerate() {
        let om_i = om + 1e-3 * i as f64 / 2.0;
        let res = Problem::with_omega(seed.params, om_i).galerkin_map(st, &r);
        assert!(res.iter().all(|c| c.norm() <= s.tol));
    }
}

#[test]
fn continuation_abort_returns_partial() {
    let seed = seed_bundled_trefoil();
    let r = seed.reference();
    let s = NewtonSettings {
        max_iter: 2,
        ..Default::default()
    };
    let om = seed.params.omega();
    let pr = Problem::new(seed.params);
    let (x, _) = newton_refine(&pr, &seed.x0, &NewtonSettings::default(), &r).unwrap();
    match continue_omega(seed.params, &x, &r, om, 0.0, 1, &s) {
        Err(SolverError::Continuation { step, partial, .. }) => {
            assert_eq!(step, 1);
            assert_eq!(partial.len(), 1);
        }
        other => panic!("expected abort, got {:?}", other.map(|v| v.len())),
    }
}
