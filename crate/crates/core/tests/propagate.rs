use std::f64::consts::PI;

use nswp_core::construct::{GaugeFunction, NswpSolution, Shape};
use nswp_core::eigen::StaticPotential;
use nswp_core::propagate::{propagate, PropagationConfig};
use nswp_core::specfun::RealFn;
use nswp_core::trajectory::Trajectory;
use nswp_core::{Grid1D, PhysicalConstants};

/// A Gaussian at rest in free space. It is not rigid, which is the point: it
/// is the control against which the packets are contrasted.
fn gaussian(sigma0: f64, consts: PhysicalConstants) -> NswpSolution {
    let norm = (2.0 * PI * sigma0 * sigma0).powf(-0.25);
    let f = RealFn::new(move |x| norm * (-x * x / (4.0 * sigma0 * sigma0)).exp());
    NswpSolution::new(
        Shape::Function {
            label: "gaussian".into(),
            f,
            energy: 0.0,
        },
        StaticPotential::Callable {
            label: "free".into(),
            f: RealFn::constant(0.0),
        },
        Trajectory::Rest,
        GaugeFunction::Zero,
        consts,
        10.0,
    )
    .unwrap()
}

fn spreading(consts: PhysicalConstants) {
    let sigma0 = 1.0;
    let sol = gaussian(sigma0, consts);
    let grid = Grid1D::new(-40.0, 40.0, 4096).unwrap();
    let mut cfg = PropagationConfig::new(grid, 2e-3, 4.0);
    cfg.snapshot_stride = 250;
    cfg.keep_snapshots = true;
    let zero = |g: &Grid1D, _t: f64| Ok(vec![0.0; g.len()]);
    let report = propagate(&sol.analytic_psi(&grid, 0.0).unwrap(), &zero, &sol, &cfg).unwrap();
    let mut worst = 0.0f64;
    for psi in &report.snapshots {
        let t = psi.time();
        let rho = psi.density();
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (i, r) in rho.iter().enumerate() {
            let x = grid.x(i);
            m0 += r;
            m1 += r * x;
            m2 += r * x * x;
        }
        let width = (m2 / m0 - (m1 / m0).powi(2)).sqrt();
        let tau = consts.hbar * t / (2.0 * consts.mass * sigma0 * sigma0);
        let want = sigma0 * (1.0 + tau * tau).sqrt();
        worst = worst.max((width / want - 1.0).abs());
    }
    assert!(worst < 0.01, "width error {worst:e}");
    // and it really does spread: the rigid-shape metric sees it
    assert!(report.max_shape_deviation() > 0.3);
}

#[test]
fn free_gaussian_spreads_at_the_textbook_rate() {
    spreading(PhysicalConstants::default());
    spreading(PhysicalConstants::new(0.8, 1.5).unwrap());
}

#[test]
fn oscillator_packet_holds_its_shape_for_a_quarter_period() {
    let c = PhysicalConstants::default();
    let grid = Grid1D::new(-8.5, 8.5, 4096).unwrap();
    let sol = nswp_core::cases::sho_solution(0, 2.0, 1.0, &grid, &c, 2.0).unwrap();
    let mut cfg = PropagationConfig::new(grid, 2.0 * PI / 20_000.0, 0.5 * PI);
    cfg.snapshot_stride = 100;
    let v = |g: &Grid1D, t: f64| sol.v_nswp_samples(g, t);
    let report = propagate(&sol.analytic_psi(&grid, 0.0).unwrap(), &v, &sol, &cfg).unwrap();
    let last = report.len() - 1;
    assert!((report.times[last] - 0.5 * PI).abs() < 1e-12);
    assert!((report.centroid[last] - 2.0).abs() < 1e-4);
    assert!(report.momentum_mean[last].abs() < 1e-4);
    assert!(report.max_shape_deviation() < 5e-4);
    assert!(report.htilde_residual.iter().all(|r| *r < 1e-3));
    let n0 = report.norm[0];
    assert!(report.norm.iter().all(|n| (n - n0).abs() < 1e-10));
}

#[test]
fn report_and_snapshots_are_written() {
    let c = PhysicalConstants::default();
    let sol = gaussian(1.0, c);
    let grid = Grid1D::new(-20.0, 20.0, 512).unwrap();
    let mut cfg = PropagationConfig::new(grid, 1e-2, 0.1);
    cfg.snapshot_stride = 5;
    cfg.keep_snapshots = true;
    let zero = |g: &Grid1D, _t: f64| Ok(vec![0.0; g.len()]);
    let report = propagate(&sol.analytic_psi(&grid, 0.0).unwrap(), &zero, &sol, &cfg).unwrap();
    assert_eq!(report.len(), 3);
    let dir = tempfile::tempdir().unwrap();
    report.write_json(dir.path().join("r.json")).unwrap();
    report.write_snapshots(dir.path().join("snaps")).unwrap();
    let back: nswp_core::propagate::RunReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(back.times, report.times);
    assert_eq!(
        std::fs::read_dir(dir.path().join("snaps")).unwrap().count(),
        3
    );
}
