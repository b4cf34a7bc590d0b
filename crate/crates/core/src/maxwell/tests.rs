use super::*;
use crate::analytic::{plane_wave, PlaneWaveSpec};
use crate::ops::{divergence, DiffScheme};
use crate::random::random_state;

fn combine(a: &FieldState, x: f64, b: &FieldState, y: f64) -> FieldState {
    FieldState::new(
        a.e.lincomb(x, &b.e, y).unwrap(),
        a.b.lincomb(x, &b.b, y).unwrap(),
        a.t,
    )
    .unwrap()
}

/// Final state after `nsteps` without keeping the trajectory.
fn run(init: &FieldState, dt: f64, nsteps: usize, stepper: Stepper) -> FieldState {
    let mut last = None;
    evolve_streaming(
        init,
        &CurrentSpec::Zero,
        dt,
        nsteps,
        stepper,
        nsteps,
        |_, s| {
            last = Some(s.clone());
            Ok(())
        },
    )
    .unwrap();
    last.unwrap()
}

#[test]
fn zero_field_stays_zero() {
    let g = GridSpec::cubic(8, 1.0).unwrap();
    for stepper in [Stepper::Spectral, Stepper::Yee] {
        let dt = 0.5 * cfl_max_dt(&g, stepper);
        let s = run(&FieldState::zeros(g, 0.0), dt, 10, stepper);
        assert_eq!(s.e.max_abs(), 0.0);
        assert_eq!(s.b.max_abs(), 0.0);
    }
}

#[test]
fn oversized_step_is_rejected() {
    let g = GridSpec::cubic(8, 1.0).unwrap();
    let s = FieldState::zeros(g, 0.0);
    let dt = 1.01 * cfl_max_dt(&g, Stepper::Yee);
    assert!(matches!(
        step_yee(&s, &CurrentSpec::Zero, dt),
        Err(Error::StepTooLarge { .. })
    ));
    let dt = 1.01 * cfl_max_dt(&g, Stepper::Spectral);
    assert!(matches!(
        step_spectral(&s, &CurrentSpec::Zero, dt),
        Err(Error::StepTooLarge { .. })
    ));
}

#[test]
fn spectral_plane_wave_returns_after_one_period() {
    let g = GridSpec::cubic(64, 1.0).unwrap();
    let spec = PlaneWaveSpec::new(1.0, 1);
    let period = spec.period(&g);
    let nsteps = (period / (0.2 * cfl_max_dt(&g, Stepper::Spectral))).ceil() as usize;
    let dt = period / nsteps as f64;
    let init = plane_wave(&spec, &g, 0.0).unwrap();
    let end = run(&init, dt, nsteps, Stepper::Spectral);
    let err = end.relative_l2_error(&init).unwrap();
    assert!(err <= 1e-8, "relative error {err:e}");
    assert!((end.t - period).abs() < 1e-12);
}

#[test]
fn spectral_keeps_magnetic_divergence_zero() {
    let g = GridSpec::cubic(12, 1.0).unwrap();
    let init = random_state(&g, 3, 11).unwrap();
    let dt = 0.8 * cfl_max_dt(&g, Stepper::Spectral);
    let end = run(&init, dt, 1000, Stepper::Spectral);
    assert!(divergence(&end.b, DiffScheme::Spectral).max_abs() <= 1e-10);
    assert!(divergence(&end.e, DiffScheme::Spectral).max_abs() <= 1e-10);
}

#[test]
fn yee_keeps_staggered_divergence() {
    let g = GridSpec::cubic(8, 1.0).unwrap();
    let init = random_state(&g, 2, 5).unwrap();
    let mut it =
        YeeIntegrator::new(&init, PreparedCurrent::new(&CurrentSpec::Zero, &g).unwrap()).unwrap();
    let d0 = it.staggered_div_b();
    let dt = 0.9 * cfl_max_dt(&g, Stepper::Yee);
    for _ in 0..1000 {
        it.step(dt).unwrap();
    }
    assert!((it.staggered_div_b() - d0).abs() <= 1e-10);
}

fn yee_plane_wave_error(n: usize) -> f64 {
    let g = GridSpec::cubic(n, 1.0).unwrap();
    let spec = PlaneWaveSpec::new(1.0, 1);
    let dt = 0.4 / n as f64;
    let nsteps = (spec.period(&g) / dt).round() as usize;
    let init = plane_wave(&spec, &g, 0.0).unwrap();
    let end = run(&init, dt, nsteps, Stepper::Yee);
    end.relative_l2_error(&init).unwrap()
}

#[test]
fn yee_error_falls_fourfold_under_joint_halving() {
    let ratio = yee_plane_wave_error(16) / yee_plane_wave_error(32);
    assert!((ratio - 4.0).abs() <= 0.6, "ratio {ratio}");
}

fn yee_energy_defect(n: usize) -> f64 {
    let g = GridSpec::cubic(n, 1.0).unwrap();
    let init = plane_wave(&PlaneWaveSpec::new(1.0, 1), &g, 0.0).unwrap();
    let e0 = init.energy();
    let dt = 0.4 / n as f64;
    let nsteps = (1.0 / dt).round() as usize;
    let mut worst = 0.0f64;
    evolve_streaming(
        &init,
        &CurrentSpec::Zero,
        dt,
        nsteps,
        Stepper::Yee,
        1,
        |_, s| {
            worst = worst.max((s.energy() - e0).abs() / e0);
            Ok(())
        },
    )
    .unwrap();
    worst
}

#[test]
fn yee_energy_defect_is_second_order() {
    let order = (yee_energy_defect(16) / yee_energy_defect(32)).log2();
    assert!(order >= 1.8, "order {order}");
}

#[test]
fn reversing_the_step_retraces_the_path() {
    let g = GridSpec::cubic(8, 1.0).unwrap();
    let init = random_state(&g, 2, 3).unwrap();
    // leapfrog is reversible to round-off, RK4 only to its truncation error
    for (stepper, frac, tol) in [(Stepper::Yee, 0.5, 1e-12), (Stepper::Spectral, 0.02, 1e-9)] {
        let dt = frac * cfl_max_dt(&g, stepper);
        let mut it = Integrator::new(&init, &CurrentSpec::Zero, stepper).unwrap();
        let start = it.state();
        for _ in 0..50 {
            it.step(dt).unwrap();
        }
        for _ in 0..50 {
            it.step(-dt).unwrap();
        }
        let back = it.state();
        let err = back.relative_l2_error(&start).unwrap();
        assert!(err < tol, "{stepper} {err:e}");
        assert!(back.t.abs() < 1e-12);
    }
}

#[test]
fn source_free_step_is_linear() {
    let g = GridSpec::cubic(8, 1.0).unwrap();
    let a = random_state(&g, 2, 1).unwrap();
    let b = random_state(&g, 2, 2).unwrap();
    let mix = combine(&a, 0.7, &b, -1.9);
    for stepper in [Stepper::Spectral, Stepper::Yee] {
        let dt = 0.5 * cfl_max_dt(&g, stepper);
        let step = |s: &FieldState| match stepper {
            Stepper::Spectral => step_spectral(s, &CurrentSpec::Zero, dt).unwrap(),
            Stepper::Yee => step_yee(s, &CurrentSpec::Zero, dt).unwrap(),
        };
        let lhs = step(&mix);
        let rhs = combine(&step(&a), 0.7, &step(&b), -1.9);
        assert!(lhs.relative_l2_error(&rhs).unwrap() < 1e-12, "{stepper}");
    }
}

#[test]
fn driven_current_matches_forced_oscillator() {
    // uniform J only drives the k = 0 mode: E(t) = a (cos ωt − 1)/ω
    let g = GridSpec::cubic(4, 1.0).unwrap();
    let (amp, w) = ([0.3, -0.2, 0.5], 2.0);
    let j = CurrentSpec::UniformOscillating {
        amplitude: amp,
        omega: w,
    };
    let dt = 0.01;
    for stepper in [Stepper::Spectral, Stepper::Yee] {
        let tr = evolve(&FieldState::zeros(g, 0.0), &j, dt, 100, stepper).unwrap();
        let t = tr.last().t;
        let tol = if stepper == Stepper::Spectral {
            1e-9
        } else {
            1e-4
        };
        for a in 0..3 {
            let exact = amp[a] * ((w * t).cos() - 1.0) / w;
            assert!(
                (tr.last().e.component(a)[0] - exact).abs() < tol,
                "{stepper}"
            );
        }
        assert_eq!(tr.len(), 101);
    }
}
