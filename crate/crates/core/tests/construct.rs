use std::f64::consts::PI;

use nswp_core::construct::{GaugeFunction, NswpSolution, Shape};
use nswp_core::eigen::{lowest_eigenpairs, StaticPotential};
use nswp_core::specfun::RealFn;
use nswp_core::trajectory::{trajectory_from_force, Trajectory};
use nswp_core::{Grid1D, PhysicalConstants};

fn unit() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn sho(n: usize, amplitude: f64, grid: Grid1D) -> NswpSolution {
    let v = StaticPotential::harmonic(1.0).unwrap();
    let pair = lowest_eigenpairs(&v, &grid, &unit(), n + 1)
        .unwrap()
        .pop()
        .unwrap();
    NswpSolution::new(
        Shape::Sampled(pair),
        v.clone(),
        Trajectory::sinusoid(amplitude, 1.0, 0.0).unwrap(),
        GaugeFunction::default_for(&v),
        unit(),
        2.0 * PI,
    )
    .unwrap()
}

fn airy(force: Option<RealFn>) -> NswpSolution {
    let a = 0.5;
    let v = StaticPotential::linear(a).unwrap();
    let traj = match force {
        None => Trajectory::uniform_acceleration(a).unwrap(),
        Some(f) => trajectory_from_force(a, f, "f", &unit(), 3.0, 1e-12).unwrap(),
    };
    NswpSolution::new(
        Shape::Airy {
            force: a,
            energy: 0.0,
        },
        v.clone(),
        traj,
        GaugeFunction::default_for(&v),
        unit(),
        3.0,
    )
    .unwrap()
}

fn rel_residual(s: &NswpSolution, g: &Grid1D, t: f64) -> (f64, f64) {
    let m = s.analytic_psi(g, t).unwrap().max_abs();
    let clean = s.tdse_residual(g, t).unwrap() / m;
    let bad = s.clone().with_phi0_dropped().tdse_residual(g, t).unwrap() / m;
    (clean, bad)
}

#[test]
fn oscillator_family_solves_the_tdse() {
    let g = Grid1D::new(-15.0, 15.0, 4096).unwrap();
    for n in [0, 1, 2] {
        let s = sho(n, 2.0, g);
        for t in [0.0, 0.37 * 2.0 * PI, 2.0] {
            let (clean, bad) = rel_residual(&s, &g, t);
            assert!(clean < 1e-4, "n={n} t={t}: {clean:e}");
            assert!(bad > 100.0 * clean, "n={n} t={t}: {bad:e} vs {clean:e}");
        }
    }
}

#[test]
fn airy_family_solves_the_tdse() {
    let g = Grid1D::new(-15.0, 10.0, 4096).unwrap();
    for s in [
        airy(None),
        airy(Some(RealFn::new(|t| 0.3 * (2.0 * t).sin()))),
    ] {
        for t in [0.5, 1.0, 2.0] {
            let (clean, bad) = rel_residual(&s, &g, t);
            assert!(clean < 1e-5, "t={t}: {clean:e}");
            assert!(bad > 100.0 * clean, "t={t}: {bad:e} vs {clean:e}");
        }
    }
}

#[test]
fn non_unit_constants() {
    let c = PhysicalConstants::new(0.7, 1.3).unwrap();
    let g = Grid1D::new(-12.0, 12.0, 4096).unwrap();
    let v = StaticPotential::harmonic(1.2).unwrap();
    let pair = lowest_eigenpairs(&v, &g, &c, 2).unwrap().pop().unwrap();
    let s = NswpSolution::new(
        Shape::Sampled(pair),
        v.clone(),
        Trajectory::sinusoid(1.5, 1.2, 0.0).unwrap(),
        GaugeFunction::default_for(&v),
        c,
        6.0,
    )
    .unwrap();
    for t in [0.3, 2.9] {
        let (clean, bad) = rel_residual(&s, &g, t);
        assert!(clean < 1e-4, "t={t}: {clean:e}");
        assert!(bad > 100.0 * clean);
    }

    let a = 0.8;
    let v = StaticPotential::linear(a).unwrap();
    let s = NswpSolution::new(
        Shape::Airy {
            force: a,
            energy: 0.0,
        },
        v.clone(),
        trajectory_from_force(a, RealFn::new(|t| 0.2 * t.cos()), "f", &c, 3.0, 1e-12).unwrap(),
        GaugeFunction::default_for(&v),
        c,
        3.0,
    )
    .unwrap();
    let ga = Grid1D::new(-12.0, 12.0, 4096).unwrap();
    for t in [0.7, 2.2] {
        let (clean, bad) = rel_residual(&s, &ga, t);
        assert!(clean < 1e-4, "t={t}: {clean:e}");
        assert!(bad > 100.0 * clean);
    }
}

#[test]
fn gauge_choices_give_the_expected_potentials() {
    let free = airy(None);
    let forced = airy(Some(RealFn::new(|t| 0.3 * (2.0 * t).sin())));
    let osc = sho(0, 2.0, Grid1D::new(-9.0, 9.0, 512).unwrap());
    for t in [0.0, 0.4, 1.7] {
        for x in [-3.0, 0.0, 2.5] {
            assert!(free.v_nswp(x, t).unwrap().abs() < 1e-9);
            let f = 0.3 * (2.0 * t).sin();
            assert!((forced.v_nswp(x, t).unwrap() + f * x).abs() < 1e-9);
            assert!((osc.v_nswp(x, t).unwrap() - 0.5 * x * x).abs() < 1e-9);
        }
    }
}

#[test]
fn phase_matches_direct_quadrature() {
    let s = airy(Some(RealFn::new(|t| 0.3 * (2.0 * t).sin())));
    for t in [0.0, 0.9, 2.4, 3.0] {
        assert!((s.phi0(t).unwrap() - s.phi0_direct(t, 1e-12).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn manifest_and_phase_table_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let s = airy(None);
    s.write_manifest(dir.path().join("m.json")).unwrap();
    s.write_phase_table(dir.path().join("p.csv"), &[0.0, 1.0, 2.0])
        .unwrap();
    let text = std::fs::read_to_string(dir.path().join("m.json")).unwrap();
    let back: nswp_core::construct::NswpManifest = serde_json::from_str(&text).unwrap();
    assert_eq!(back, s.manifest());
    let table = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("t,d,d_dot,d_ddot,gauge,phi1,phi0"));
}
