use std::f64::consts::PI;

use super::*;
use crate::analytic::{plane_wave, twopoint_energy_analytic, PlaneWaveSpec};
use crate::current::CurrentSpec;
use crate::grid::{FieldState, VectorField};
use crate::maxwell::{cfl_max_dt, evolve, Stepper};
use crate::ops::{cross, volume_integral};
use crate::random::random_state;

fn grid8() -> GridSpec {
    GridSpec::cubic(8, 1.0).unwrap()
}

fn mirror_index(g: &GridSpec, n: usize) -> usize {
    let c = g.coords(n);
    g.wrapped_index([-(c[0] as i64), -(c[1] as i64), -(c[2] as i64)])
}

#[test]
fn local_energy_density_is_field_energy() {
    let g = grid8();
    let s = random_state(&g, 2, 4).unwrap();
    let rho = density(&law_local_energy(), &s, &s).unwrap();
    for n in 0..g.len() {
        let (e, b) = (s.e.at(n), s.b.at(n));
        let exact: f64 = (0..3).map(|a| e[a] * e[a] + b[a] * b[a]).sum();
        assert!((rho.values()[n] - exact).abs() <= 1e-13 * exact.max(1.0));
    }
}

#[test]
fn local_energy_of_plane_wave_is_vol_e0_squared() {
    let g = GridSpec::cubic(16, 2.0).unwrap();
    let s = plane_wave(&PlaneWaveSpec::new(1.7, 3), &g, 0.21).unwrap();
    let q = volume_integral(&density(&law_local_energy(), &s, &s).unwrap());
    assert!((q - 8.0 * 1.7 * 1.7).abs() < 1e-11);
}

#[test]
fn inversion_density_vanishes_on_plane_wave() {
    let g = grid8();
    let s = plane_wave(&PlaneWaveSpec::new(1.0, 2), &g, 0.3).unwrap();
    assert_eq!(density(&law_inversion(), &s, &s).unwrap().max_abs(), 0.0);
}

#[test]
fn inversion_density_matches_brute_force() {
    let g = grid8();
    let s = random_state(&g, 2, 9).unwrap();
    let rho = density(&law_inversion(), &s, &s).unwrap();
    let mut direct = 0.0;
    for n in 0..g.len() {
        let m = mirror_index(&g, n);
        let (e, b, em, bm) = (s.e.at(n), s.b.at(n), s.e.at(m), s.b.at(m));
        let v: f64 = (0..3).map(|a| b[a] * em[a] + bm[a] * e[a]).sum();
        assert!((rho.values()[n] - v).abs() < 1e-13);
        // exchanging x and −x leaves the density unchanged
        assert!((rho.values()[n] - rho.values()[m]).abs() < 1e-13);
        direct += v;
    }
    assert!((volume_integral(&rho) - direct * g.cell_volume()).abs() < 1e-12);
}

#[test]
fn inversion_density_on_mirror_symmetric_data_is_twice_e_dot_b() {
    let g = grid8();
    let tau = 2.0 * PI;
    let e = VectorField::from_fn(g, |x| [(tau * x[1]).cos(), (tau * x[2]).cos(), 0.3]);
    let b = VectorField::from_fn(g, |x| {
        [0.5, (tau * x[0]).cos(), (tau * (x[0] + x[1])).cos()]
    });
    let s = FieldState::new(e, b, 0.0).unwrap();
    let rho = density(&law_inversion(), &s, &s).unwrap();
    for n in 0..g.len() {
        let v: f64 = 2.0 * (0..3).map(|a| s.e.at(n)[a] * s.b.at(n)[a]).sum::<f64>();
        assert!((rho.values()[n] - v).abs() < 1e-13);
    }
}

#[test]
fn rotation_by_identity_reproduces_local_energy() {
    let r = law_rotation(&AffineMap::identity()).unwrap();
    let e = law_local_energy();
    assert_eq!(r.w, e.w);
    assert_eq!(r.k, e.k);
    assert_eq!(r.source, e.source);
}

#[test]
fn quarter_turn_of_uniform_x_field_has_zero_density() {
    let g = grid8();
    let map = AffineMap::quarter_turn(2, 1, &g).unwrap();
    let law = law_rotation(&map).unwrap();
    let s = FieldState::new(
        VectorField::uniform(g, [1.0, 0.0, 0.0]),
        VectorField::zeros(g),
        0.0,
    )
    .unwrap();
    assert_eq!(density(&law, &s, &s).unwrap().max_abs(), 0.0);
}

#[test]
fn improper_rotation_is_rejected() {
    let g = grid8();
    let mirror = AffineMap::new(
        [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        [0.0; 3],
        crate::affine::Exactness::GridExact,
        &g,
    )
    .unwrap();
    assert!(matches!(
        law_rotation(&mirror),
        Err(Error::NotARotation { .. })
    ));
    assert!(matches!(
        law_rotation(&AffineMap::inversion()),
        Err(Error::NotARotation { .. })
    ));
}

#[test]
fn zero_translation_is_local_energy() {
    let g = grid8();
    let t = law_translation(&g, [0, 0, 0], 0);
    let e = law_local_energy();
    assert_eq!((t.map, t.w, t.k, t.source), (e.map, e.w, e.k, e.source));
}

#[test]
fn translated_plane_wave_follows_cosine_table() {
    let g = GridSpec::cubic(16, 1.0).unwrap();
    let spec = PlaneWaveSpec::new(1.3, 2);
    let s = plane_wave(&spec, &g, 0.17).unwrap();
    let k = spec.wavenumber(&g);
    for nodes in 0..16 {
        let law = law_translation(&g, [0, 0, nodes], 0);
        let q = volume_integral(&density(&law, &s, &s).unwrap());
        let d = nodes as f64 / 16.0;
        let exact = twopoint_energy_analytic(1.3, 1.0, k, d);
        assert!((q - exact).abs() < 1e-12, "shift {nodes}: {q} vs {exact}");
    }
}

#[test]
fn local_flux_on_plane_wave_is_twice_poynting() {
    let g = grid8();
    let s = plane_wave(&PlaneWaveSpec::new(0.8, 1), &g, 0.05).unwrap();
    let f = flux(&law_local_energy(), &s, &s).unwrap();
    for n in 0..g.len() {
        let p = cross(s.e.at(n), s.b.at(n));
        for i in 0..3 {
            assert!((f.component(i)[n] - 2.0 * p[i]).abs() < 1e-14);
        }
    }
}

#[test]
fn inversion_flux_without_electric_field() {
    let g = grid8();
    let s = FieldState::new(
        VectorField::zeros(g),
        random_state(&g, 2, 2).unwrap().b,
        0.0,
    )
    .unwrap();
    let f = flux(&law_inversion(), &s, &s).unwrap();
    for n in 0..g.len() {
        let p = cross(s.b.at(n), s.b.at(mirror_index(&g, n)));
        for i in 0..3 {
            assert!((f.component(i)[n] + p[i]).abs() < 1e-14);
        }
    }
}

#[test]
fn source_terms() {
    let g = grid8();
    let s = random_state(&g, 2, 5).unwrap();
    let zero = source_power(&law_inversion(), &s, &s, &CurrentSpec::Zero).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
    let j = CurrentSpec::UniformOscillating {
        amplitude: [0.2, -0.4, 1.0],
        omega: 1.0,
    };
    let e_only = FieldState::new(s.e.clone(), VectorField::zeros(g), 0.5).unwrap();
    assert_eq!(
        source_power(&law_inversion(), &e_only, &e_only, &j)
            .unwrap()
            .max_abs(),
        0.0
    );
    let b = [1.5, 0.5, -2.0];
    let uni = FieldState::new(
        VectorField::uniform(g, [0.3; 3]),
        VectorField::uniform(g, b),
        0.5,
    )
    .unwrap();
    let sp = source_power(&law_inversion(), &uni, &uni, &j).unwrap();
    let jt: Vec<f64> = [0.2, -0.4, 1.0].iter().map(|a| a * 0.5f64.sin()).collect();
    let expect = -2.0 * (0..3).map(|a| b[a] * jt[a]).sum::<f64>();
    for v in sp.values() {
        assert!((v - expect).abs() < 1e-14);
    }
    // local energy work is −2 J·E
    let le = source_power(&law_local_energy(), &uni, &uni, &j).unwrap();
    let expect = -2.0 * jt.iter().map(|x| 0.3 * x).sum::<f64>();
    assert!((le.values()[7] - expect).abs() < 1e-14);
}

#[test]
fn static_fields_have_zero_residual() {
    let g = grid8();
    let s = FieldState::new(
        VectorField::uniform(g, [0.4, -1.0, 2.0]),
        VectorField::uniform(g, [1.0, 0.5, 0.0]),
        0.0,
    )
    .unwrap();
    let tr = evolve(&s, &CurrentSpec::Zero, 0.01, 6, Stepper::Spectral).unwrap();
    for law in [
        law_local_energy(),
        law_inversion(),
        law_rotation(&AffineMap::quarter_turn(0, 1, &g).unwrap()).unwrap(),
    ] {
        let rep = residual(&tr, &law).unwrap();
        assert!(rep.max_residual().unwrap() <= 1e-13, "{}", law.name);
        assert!(rep.max_abs_defect() <= 1e-13);
    }
}

#[test]
fn residual_needs_enough_states() {
    let g = grid8();
    let tr = evolve(
        &FieldState::zeros(g, 0.0),
        &CurrentSpec::Zero,
        0.01,
        1,
        Stepper::Spectral,
    )
    .unwrap();
    assert!(matches!(
        residual(&tr, &law_local_energy()),
        Err(Error::HistoryUnderflow { .. })
    ));
    let shifted = law_translation(&g, [1, 0, 0], 3);
    let tr = evolve(
        &FieldState::zeros(g, 0.0),
        &CurrentSpec::Zero,
        0.01,
        3,
        Stepper::Spectral,
    )
    .unwrap();
    assert!(matches!(
        residual(&tr, &shifted),
        Err(Error::HistoryUnderflow { .. })
    ));
}

#[test]
fn local_energy_is_conserved_over_ten_periods() {
    let g = grid8();
    let init = plane_wave(&PlaneWaveSpec::new(1.0, 1), &g, 0.0).unwrap();
    let dt = 2e-3;
    let reps = balance_streaming(
        &init,
        &CurrentSpec::Zero,
        dt,
        5000,
        Stepper::Spectral,
        &[law_local_energy()],
        BalanceOptions::default(),
        50,
    )
    .unwrap();
    let r = &reps[0];
    assert_eq!(r.len(), 101);
    assert!(
        r.max_abs_defect() <= 1e-9 * r.q[0],
        "{:e}",
        r.max_abs_defect() / r.q[0]
    );
    assert!(r.r_l2.is_none());
}

fn inversion_residual(dt: f64) -> f64 {
    let g = grid8();
    let init = random_state(&g, 1, 21).unwrap();
    let nsteps = (0.1 / dt).round() as usize;
    let tr = evolve(&init, &CurrentSpec::Zero, dt, nsteps, Stepper::Spectral).unwrap();
    residual(&tr, &law_inversion())
        .unwrap()
        .max_residual()
        .unwrap()
}

#[test]
fn spectral_inversion_residual_is_second_order_in_time() {
    let dt = 0.25 * cfl_max_dt(&grid8(), Stepper::Spectral);
    let (a, b, c) = (
        inversion_residual(dt),
        inversion_residual(dt / 2.0),
        inversion_residual(dt / 4.0),
    );
    let o1 = (a / b).log2();
    let o2 = (b / c).log2();
    assert!(o1 >= 1.8 && o2 >= 1.8, "orders {o1} {o2}");
}

#[test]
fn driven_inversion_balance_closes() {
    let g = grid8();
    let init = random_state(&g, 1, 3).unwrap();
    let j = CurrentSpec::PlaneWave {
        mode: [0, 1, 1],
        polarization: [1.0, 0.5, 0.0],
        omega: 3.0,
    };
    let dt = 0.05 * cfl_max_dt(&g, Stepper::Spectral);
    let laws = [
        law_inversion(),
        law_local_energy(),
        law_rotation(&AffineMap::quarter_turn(2, 1, &g).unwrap()).unwrap(),
    ];
    let reps = balance_streaming(
        &init,
        &j,
        dt,
        800,
        Stepper::Spectral,
        &laws,
        BalanceOptions::default(),
        1,
    )
    .unwrap();
    for r in &reps {
        let work = r.source_cum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(work > 1e-3 * r.energy0, "{} source is negligible", r.law);
        assert!(
            r.max_relative_defect() < 1e-9,
            "{} {:e}",
            r.law,
            r.max_relative_defect()
        );
    }
}

#[test]
fn law_files_roundtrip() {
    let g = grid8();
    let laws = [
        law_local_energy(),
        law_inversion(),
        law_rotation(&AffineMap::quarter_turn(1, 3, &g).unwrap()).unwrap(),
        law_translation(&g, [1, -2, 3], 4),
    ];
    for law in laws {
        let text = law.to_toml();
        let back = TwoPointLawSpec::from_toml(&text, &g).unwrap();
        assert_eq!(back, law);
    }
    let bad = "W = [1.0]\nK = []\n[map]\nalpha = [1,0,0,0,1,0,0,0,1]\nbeta = [0,0,0]\n";
    assert!(matches!(
        TwoPointLawSpec::from_toml(bad, &g),
        Err(Error::Parse(_))
    ));
}

#[test]
fn coefficient_vector_roundtrip() {
    let law = law_inversion();
    let back =
        TwoPointLawSpec::from_coefficients("inversion", law.map, 0, &law.coefficients()).unwrap();
    assert_eq!(back, law);
    assert!(law.is_swap_symmetric());
    assert!((law.normalized().norm() - 1.0).abs() < 1e-15);
}

#[test]
fn discovery_rejects_small_ensembles() {
    let g = grid8();
    let ens = random_ensemble(&g, 1, 5, 0, 1e-3, 6).unwrap();
    let r = discover_laws(
        &ens,
        &AffineMap::identity(),
        0,
        &DiscoveryOptions::default(),
    );
    assert!(matches!(r, Err(Error::InsufficientData(_))));
}
