use nswp_core::specfun::RealFn;
use nswp_core::trajectory::{trajectory_from_force, Trajectory};
use nswp_core::PhysicalConstants;

/// Classical RK4 for m d̈ = A + F(t) from rest.
fn rk4_motion(
    force_a: f64,
    f: impl Fn(f64) -> f64,
    mass: f64,
    t_end: f64,
    steps: usize,
) -> (f64, f64) {
    let h = t_end / steps as f64;
    let acc = |t: f64| (force_a + f(t)) / mass;
    let (mut x, mut v) = (0.0, 0.0);
    for k in 0..steps {
        let t = k as f64 * h;
        let (k1x, k1v) = (v, acc(t));
        let (k2x, k2v) = (v + 0.5 * h * k1v, acc(t + 0.5 * h));
        let (k3x, k3v) = (v + 0.5 * h * k2v, acc(t + 0.5 * h));
        let (k4x, k4v) = (v + h * k3v, acc(t + h));
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    (x, v)
}

#[test]
fn sine_force_matches_ode_oracle() {
    let consts = PhysicalConstants::new(1.0, 1.3).unwrap();
    let tr =
        trajectory_from_force(1.0, RealFn::new(f64::sin), "sin(t)", &consts, 6.0, 1e-12).unwrap();
    for t in [0.5, 1.7, 3.0, 6.0] {
        let (x, v) = rk4_motion(1.0, f64::sin, 1.3, t, 20_000);
        let k = tr.eval(t).unwrap();
        assert!((k.d - x).abs() < 1e-11, "d({t}) = {} vs {x}", k.d);
        assert!((k.d_dot - v).abs() < 1e-11, "ḋ({t}) = {} vs {v}", k.d_dot);
        // positive sign: the force pushes along +x
        assert!((k.d_ddot - (1.0 + t.sin()) / 1.3).abs() < 1e-15);
    }
}

#[test]
fn zero_force_is_uniform_acceleration() {
    let consts = PhysicalConstants::default();
    let forced =
        trajectory_from_force(0.5, RealFn::constant(0.0), "0", &consts, 10.0, 1e-12).unwrap();
    let free = Trajectory::uniform_acceleration(0.5).unwrap();
    for i in 0..=100 {
        let t = i as f64 * 0.1;
        let (a, b) = (forced.eval(t).unwrap(), free.eval(t).unwrap());
        assert!((a.d - b.d).abs() < 1e-10);
        assert!((a.d_dot - b.d_dot).abs() < 1e-10);
        assert!((a.d_ddot - b.d_ddot).abs() < 1e-12);
    }
}

#[test]
fn derivatives_agree_with_central_differences() {
    let consts = PhysicalConstants::default();
    let ts: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
    let ds: Vec<f64> = ts.iter().map(|t| (0.7 * t).sin() * t).collect();
    let kinds = vec![
        Trajectory::Rest,
        Trajectory::polynomial(vec![0.0, -1.0, 0.25, 0.1]).unwrap(),
        Trajectory::sinusoid(2.0, 1.0, 0.3).unwrap(),
        Trajectory::uniform_acceleration(-0.8).unwrap(),
        Trajectory::spline(ts, ds, 0.0, (2.8f64).sin() + 2.8 * (2.8f64).cos()).unwrap(),
        trajectory_from_force(
            1.0,
            RealFn::new(|t| 0.3 * (2.0 * t).sin()),
            "f",
            &consts,
            4.0,
            1e-12,
        )
        .unwrap(),
    ];
    let h = 1e-6;
    for tr in &kinds {
        for t in [0.35, 1.1, 2.45, 3.3] {
            let k = tr.eval(t).unwrap();
            let (p, m) = (tr.eval(t + h).unwrap(), tr.eval(t - h).unwrap());
            let vd = (p.d - m.d) / (2.0 * h);
            let ad = (p.d_dot - m.d_dot) / (2.0 * h);
            assert!(
                (vd - k.d_dot).abs() <= 1e-6 * k.d_dot.abs().max(1.0),
                "{:?} ḋ at {t}",
                tr.descriptor()
            );
            assert!(
                (ad - k.d_ddot).abs() <= 1e-6 * k.d_ddot.abs().max(1.0),
                "{:?} d̈ at {t}",
                tr.descriptor()
            );
        }
        if !matches!(tr, Trajectory::TabulatedSpline { .. }) {
            assert_eq!(tr.eval(0.0).unwrap().d, 0.0);
        }
    }
}

#[test]
fn spline_knots_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("knots.csv");
    std::fs::write(&path, "t,d\n0,0\n1,0.5\n2,2\n3,4.5\n").unwrap();
    let tr = Trajectory::spline_from_csv(&path, 0.0, 3.0).unwrap();
    let k = tr.eval(1.5).unwrap();
    assert!((k.d - 1.125).abs() < 1e-12);
    assert!((k.d_dot - 1.5).abs() < 1e-12);
    std::fs::write(&path, "time,d\n0,0\n").unwrap();
    assert!(Trajectory::spline_from_csv(&path, 0.0, 0.0).is_err());
}
