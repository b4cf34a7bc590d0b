use std::f64::consts::PI;

use proptest::prelude::*;
use twopoint_core::affine::{pullback, AffineMap, Exactness, Mat3};
use twopoint_core::current::CurrentSpec;
use twopoint_core::forge::{
    forge_invariants, nullspace_invariants, verify_invariant_drift, DriftOptions, MomentMatrix,
    Pde1D, PdeKind, PointSampleSet, DEFAULT_TOLERANCE,
};
use twopoint_core::grid::{FieldState, GridSpec, VectorField};
use twopoint_core::laws::{density, law_inversion};
use twopoint_core::maxwell::{cfl_max_dt, evolve, Stepper};
use twopoint_core::ops::{
    cross_density, curl, divergence, rotate_components, volume_integral, DiffScheme,
};
use twopoint_core::random::random_state;

fn grid() -> GridSpec {
    GridSpec::with_lengths([6, 6, 6], [1.0, 1.0, 1.0]).unwrap()
}

/// Signed permutation matrix from a permutation index and sign bits.
fn signed_perm(p: usize, signs: u8) -> Mat3 {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut a = [[0.0; 3]; 3];
    for r in 0..3 {
        a[r][PERMS[p][r]] = if signs >> r & 1 == 1 { -1.0 } else { 1.0 };
    }
    a
}

fn det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Few-mode trigonometric field with all wavenumbers below Nyquist.
fn band_limited(g: GridSpec, c: &[f64]) -> VectorField {
    let l = g.lengths();
    VectorField::from_fn(g, |x| {
        let u: [f64; 3] = std::array::from_fn(|a| 2.0 * PI * x[a] / l[a]);
        [
            c[0] * (u[0] + 2.0 * u[1]).sin() + c[1] * (2.0 * u[2]).cos(),
            c[2] * (u[1] - u[2] + 0.3).cos() + c[3] * u[0].sin(),
            c[4] * (u[0] + u[1] + u[2]).sin() + c[5] * (2.0 * u[0] - u[1]).cos(),
        ]
    })
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grid_exact_pullback_roundtrip_is_bit_exact(p in 0usize..6, s in 0u8..8, sh in prop::array::uniform3(-7i64..7), c in coeffs()) {
        let g = grid();
        let h = g.spacing();
        let beta = std::array::from_fn(|a| sh[a] as f64 * h[a]);
        let m = AffineMap::new(signed_perm(p, s), beta, Exactness::GridExact, &g).unwrap();
        let f = band_limited(g, &c);
        let back = pullback(&pullback(&f, &m).unwrap(), &m.inverse()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn interpolated_translation_roundtrip(beta in prop::array::uniform3(-0.5f64..0.5), c in coeffs()) {
        let g = grid();
        let m = AffineMap::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], beta, Exactness::Interpolated, &g).unwrap();
        let f = band_limited(g, &c);
        let back = pullback(&pullback(&f, &m).unwrap(), &m.inverse()).unwrap();
        let err = back.lincomb(1.0, &f, -1.0).unwrap().l2_norm();
        prop_assert!(err <= 1e-10 * f.l2_norm().max(1e-300), "{}", err);
    }

    #[test]
    fn rotation_commutes_with_cross_product(p in 0usize..6, s in 0u8..8, a in coeffs(), b in coeffs()) {
        let r = signed_perm(p, s);
        prop_assume!(det(&r) > 0.0);
        let g = grid();
        let (fa, fb) = (band_limited(g, &a), band_limited(g, &b));
        let lhs = rotate_components(&cross_density(&fa, &fb).unwrap(), &r);
        let rhs = cross_density(&rotate_components(&fa, &r), &rotate_components(&fb, &r)).unwrap();
        let err = lhs.lincomb(1.0, &rhs, -1.0).unwrap().max_abs();
        prop_assert!(err <= 1e-13, "{}", err);
    }

    #[test]
    fn volume_integral_survives_grid_exact_pullback(p in 0usize..6, s in 0u8..8, sh in prop::array::uniform3(-7i64..7), c in coeffs()) {
        let g = grid();
        let h = g.spacing();
        let beta = std::array::from_fn(|a| sh[a] as f64 * h[a]);
        let m = AffineMap::new(signed_perm(p, s), beta, Exactness::GridExact, &g).unwrap();
        let f = band_limited(g, &c);
        // an off-centre scalar so the integral is not trivially zero
        let dens = |v: &VectorField| {
            let d = twopoint_core::ops::dot_density(v, v).unwrap();
            let mut x = d.clone();
            x.values_mut().iter_mut().zip(v.component(0)).for_each(|(o, a)| *o += a);
            x
        };
        let i0 = volume_integral(&dens(&f));
        let i1 = volume_integral(&dens(&pullback(&f, &m).unwrap()));
        prop_assert!((i0 - i1).abs() <= 1e-13 * i0.abs().max(1.0), "{} vs {}", i0, i1);
    }

    #[test]
    fn divergence_of_curl_vanishes(c in coeffs()) {
        let f = band_limited(grid(), &c);
        let d = divergence(&curl(&f, DiffScheme::Spectral), DiffScheme::Spectral);
        prop_assert!(d.max_abs() <= 1e-10, "{}", d.max_abs());
    }

    #[test]
    fn inversion_density_is_swap_symmetric(seed in 0u64..1000) {
        let g = GridSpec::cubic(8, 1.0).unwrap();
        let s = random_state(&g, 2, seed).unwrap();
        let rho = density(&law_inversion(), &s, &s).unwrap();
        let m = AffineMap::inversion();
        let perm = m.node_permutation(&g).unwrap();
        let v = rho.values();
        let err = (0..g.len()).map(|n| (v[n] - v[perm[n]]).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-13, "{}", err);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn source_free_evolution_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, seed in 0u64..1000, yee in any::<bool>()) {
        let g = GridSpec::cubic(8, 1.0).unwrap();
        let stepper = if yee { Stepper::Yee } else { Stepper::Spectral };
        let s1 = random_state(&g, 2, seed).unwrap();
        let s2 = random_state(&g, 2, seed + 7919).unwrap();
        let mix = |x: &FieldState, y: &FieldState| {
            FieldState::new(x.e.lincomb(a, &y.e, b).unwrap(), x.b.lincomb(a, &y.b, b).unwrap(), 0.0).unwrap()
        };
        let dt = 0.5 * cfl_max_dt(&g, stepper);
        let run = |s: &FieldState| evolve(s, &CurrentSpec::Zero, dt, 20, stepper).unwrap().last().clone();
        let lhs = run(&mix(&s1, &s2));
        let rhs = mix(&run(&s1), &run(&s2));
        let err = lhs.relative_l2_error(&rhs).unwrap();
        prop_assert!(err <= 1e-11, "{}", err);
    }

    #[test]
    fn null_space_size_is_points_minus_rank(p in 3usize..8, r in 1usize..3, n in 1usize..6, vals in prop::collection::vec(-1.0f64..1.0, 64)) {
        let r = r.min(n).min(p - 1);
        // M = A·B with A: n×r and B: r×p generic, so rank M = r
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..p).map(|j| (0..r).map(|k| vals[i * r + k] * vals[32 + k * p + j]).sum()).collect())
            .collect();
        let m = MomentMatrix::from_rows(rows.clone()).unwrap();
        let inv = nullspace_invariants(&m, DEFAULT_TOLERANCE);
        prop_assert_eq!(inv.dim(), p - r);
        for v in &inv.basis {
            prop_assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
            for row in &rows {
                let scale = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                let dot: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
                prop_assert!(dot.abs() <= 1e-10 * scale.max(1e-300));
            }
        }
    }

    #[test]
    fn moment_order_never_grows_null_space(a in -1.0f64..1.0, b in -1.0f64..1.0, pts in prop::collection::btree_set(0u32..64, 3..7)) {
        let pde = Pde1D::new(PdeKind::Burgers { nu: 0.05 }, 2.0 * PI, 64).unwrap();
        let f0 = pde.sample(|x| a * x.sin() + b * (2.0 * x).cos() + 0.3);
        let ps = PointSampleSet::new(pts.iter().map(|&i| i as f64 * 2.0 * PI / 64.0 + 0.01).collect()).unwrap();
        let dims: Vec<usize> = (1..=6)
            .map(|n| forge_invariants(&pde, &f0, &ps, n, DEFAULT_TOLERANCE).unwrap().invariants.dim())
            .collect();
        prop_assert!(dims.windows(2).all(|w| w[1] <= w[0]), "{:?}", dims);
    }

    #[test]
    fn invariants_follow_point_order(shuffle in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle(), a in 0.2f64..1.0) {
        let pde = Pde1D::new(PdeKind::Burgers { nu: 0.1 }, 2.0 * PI, 64).unwrap();
        let f0 = pde.sample(|x| a * x.sin() + 0.5 * (2.0 * x).cos());
        let base = [0.3, 1.1, 2.0, 4.4, 5.5];
        let ps = PointSampleSet::new(base.to_vec()).unwrap();
        let qs = PointSampleSet::new(shuffle.iter().map(|&i| base[i]).collect()).unwrap();
        let x = forge_invariants(&pde, &f0, &ps, 3, DEFAULT_TOLERANCE).unwrap();
        let y = forge_invariants(&pde, &f0, &qs, 3, DEFAULT_TOLERANCE).unwrap();
        prop_assert_eq!(x.invariants.dim(), y.invariants.dim());
        for (u, v) in x.invariants.basis.iter().zip(&y.invariants.basis) {
            for (j, &i) in shuffle.iter().enumerate() {
                prop_assert_eq!(u[i].to_bits(), v[j].to_bits());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn linear_finite_mode_invariants_are_exact(
        k in 1usize..=2,
        extra in 1usize..=2,
        amps in prop::array::uniform2(0.3f64..1.0),
        phases in prop::array::uniform2(0.0f64..6.0),
        c in 0.5f64..1.5,
    ) {
        let pde = Pde1D::new(PdeKind::Advection { c }, 2.0 * PI, 64).unwrap();
        let f0 = pde.sample(|x| (0..k).map(|m| amps[m] * ((m + 1) as f64 * x + phases[m]).sin()).sum());
        let p = 2 * k + extra;
        let ps = PointSampleSet::new((0..p).map(|i| 0.17 + i as f64 * 5.9 / p as f64).collect()).unwrap();
        for n_order in 2 * k..=4 {
            let forged = forge_invariants(&pde, &f0, &ps, n_order, DEFAULT_TOLERANCE).unwrap();
            prop_assert_eq!(forged.invariants.dim(), p - 2 * k);
            for a in &forged.invariants.basis {
                let r = verify_invariant_drift(&pde, &f0, &ps, a, 2.0 * PI / c, 64, &DriftOptions::default()).unwrap();
                prop_assert!(r.max_drift() <= 1e-7, "order {} drift {:e}", n_order, r.max_drift());
            }
        }
    }
}
