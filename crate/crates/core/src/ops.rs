//! Differential operators, pointwise algebra and volume reductions.

use num_complex::Complex64;

use crate::error::Result;
use crate::fft::Fft3;
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::sum::compensated_sum;

/// Discretization of spatial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffScheme {
    /// Exact derivative of the band-limited (trigonometric) interpolant.
    #[default]
    Spectral,
    /// Second-order central differences with periodic wrap.
    Centered2,
}

fn centered_derivative(grid: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
    let d = grid.dims();
    let h = grid.spacing()[axis];
    let stride = match axis {
        0 => 1,
        1 => d[0],
        _ => d[0] * d[1],
    };
    let n = d[axis];
    let inv = 0.5 / h;
    (0..grid.len())
        .map(|idx| {
            let c = grid.coords(idx)[axis];
            let base = idx - c * stride;
            let up = base + ((c + 1) % n) * stride;
            let dn = base + ((c + n - 1) % n) * stride;
            (f[up] - f[dn]) * inv
        })
        .collect()
}

/// Partial derivative `∂f/∂x_axis`.
pub fn partial(f: &ScalarField, axis: usize, scheme: DiffScheme) -> ScalarField {
    let grid = *f.grid();
    match scheme {
        DiffScheme::Centered2 => {
            ScalarField::from_vec_unchecked(grid, centered_derivative(&grid, f.values(), axis))
        }
        DiffScheme::Spectral => {
            let fft = Fft3::new(grid);
            let mut s = fft.forward_real(f.values());
            fft.differentiate(&mut s, axis);
            ScalarField::from_vec_unchecked(grid, fft.inverse_real(&s))
        }
    }
}

/// Spectral divergence with a caller-supplied transform plan.
pub(crate) fn divergence_spectral(fft: &Fft3, comps: [&[f64]; 3]) -> Vec<f64> {
    let (sx, sy) = fft.forward_real_pair(comps[0], comps[1]);
    let sz = fft.forward_real(comps[2]);
    let out: Vec<Complex64> = (0..sx.len())
        .map(|idx| {
            let ik = fft.ik_vec(idx);
            ik[0] * sx[idx] + ik[1] * sy[idx] + ik[2] * sz[idx]
        })
        .collect();
    fft.inverse_real(&out)
}

/// Spectral curl of a field given as three spectra.
pub(crate) fn curl_spectrum(fft: &Fft3, s: [&[Complex64]; 3]) -> [Vec<Complex64>; 3] {
    let n = s[0].len();
    let mut out: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]);
    for idx in 0..n {
        let ik = fft.ik_vec(idx);
        out[0][idx] = ik[1] * s[2][idx] - ik[2] * s[1][idx];
        out[1][idx] = ik[2] * s[0][idx] - ik[0] * s[2][idx];
        out[2][idx] = ik[0] * s[1][idx] - ik[1] * s[0][idx];
    }
    out
}

pub fn divergence(v: &VectorField, scheme: DiffScheme) -> ScalarField {
    let grid = *v.grid();
    let data = match scheme {
        DiffScheme::Spectral => {
            let fft = Fft3::new(grid);
            divergence_spectral(&fft, [v.component(0), v.component(1), v.component(2)])
        }
        DiffScheme::Centered2 => {
            let mut acc = vec![0.0; grid.len()];
            for a in 0..3 {
                let d = centered_derivative(&grid, v.component(a), a);
                for (s, x) in acc.iter_mut().zip(d) {
                    *s += x;
                }
            }
            acc
        }
    };
    ScalarField::from_vec_unchecked(grid, data)
}

pub fn curl(v: &VectorField, scheme: DiffScheme) -> VectorField {
    let grid = *v.grid();
    match scheme {
        DiffScheme::Spectral => {
            let fft = Fft3::new(grid);
            let (s0, s1) = fft.forward_real_pair(v.component(0), v.component(1));
            let s2 = fft.forward_real(v.component(2));
            let c = curl_spectrum(&fft, [&s0, &s1, &s2]);
            let (c0, c1) = fft.inverse_real_pair(&c[0], &c[1]);
            let c2 = fft.inverse_real(&c[2]);
            VectorField::from_components_unchecked(grid, [c0, c1, c2])
        }
        DiffScheme::Centered2 => {
            let d = |a: usize, axis: usize| centered_derivative(&grid, v.component(a), axis);
            let sub = |x: Vec<f64>, y: Vec<f64>| -> Vec<f64> {
                x.iter().zip(&y).map(|(p, q)| p - q).collect()
            };
            VectorField::from_components_unchecked(
                grid,
                [
                    sub(d(2, 1), d(1, 2)),
                    sub(d(0, 2), d(2, 0)),
                    sub(d(1, 0), d(0, 1)),
                ],
            )
        }
    }
}

pub fn gradient(f: &ScalarField, scheme: DiffScheme) -> VectorField {
    let grid = *f.grid();
    let comps = std::array::from_fn(|a| partial(f, a, scheme).into_vec());
    VectorField::from_components_unchecked(grid, comps)
}

/// Componentwise spectral Laplacian.
pub fn laplacian(v: &VectorField) -> VectorField {
    let grid = *v.grid();
    let fft = Fft3::new(grid);
    let comps = std::array::from_fn(|a| {
        let mut s = fft.forward_real(v.component(a));
        for (idx, z) in s.iter_mut().enumerate() {
            let ik = fft.ik_vec(idx);
            *z *= ik[0] * ik[0] + ik[1] * ik[1] + ik[2] * ik[2];
        }
        fft.inverse_real(&s)
    });
    VectorField::from_components_unchecked(grid, comps)
}

/// `result_i(x) = α_ij v_j(x)` at every node.
pub fn rotate_components(v: &VectorField, alpha: &[[f64; 3]; 3]) -> VectorField {
    let grid = *v.grid();
    let comps = std::array::from_fn(|i| {
        (0..grid.len())
            .map(|n| {
                let x = v.at(n);
                alpha[i][0] * x[0] + alpha[i][1] * x[1] + alpha[i][2] * x[2]
            })
            .collect()
    });
    VectorField::from_components_unchecked(grid, comps)
}

pub fn dot_density(a: &VectorField, b: &VectorField) -> Result<ScalarField> {
    a.grid().check_same(b.grid())?;
    let data = (0..a.grid().len())
        .map(|n| {
            let (x, y) = (a.at(n), b.at(n));
            x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
        })
        .collect();
    Ok(ScalarField::from_vec_unchecked(*a.grid(), data))
}

pub fn cross_density(a: &VectorField, b: &VectorField) -> Result<VectorField> {
    a.grid().check_same(b.grid())?;
    let n = a.grid().len();
    let mut out = VectorField::zeros(*a.grid());
    for i in 0..n {
        let c = cross(a.at(i), b.at(i));
        for (k, v) in c.into_iter().enumerate() {
            out.component_mut(k)[i] = v;
        }
    }
    Ok(out)
}

#[inline]
pub fn cross(x: [f64; 3], y: [f64; 3]) -> [f64; 3] {
    [
        x[1] * y[2] - x[2] * y[1],
        x[2] * y[0] - x[0] * y[2],
        x[0] * y[1] - x[1] * y[0],
    ]
}

/// `∫ s d³x` as cell volume times a compensated node sum.
pub fn volume_integral(s: &ScalarField) -> f64 {
    s.grid().cell_volume() * compensated_sum(s.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine_x(n: usize) -> (GridSpec, VectorField) {
        let g = GridSpec::cubic(n, 1.0).unwrap();
        let v = VectorField::from_fn(g, |p| [(2.0 * PI * p[0]).sin(), 0.0, 0.0]);
        (g, v)
    }

    #[test]
    fn divergence_of_constant_is_zero() {
        let g = GridSpec::cubic(8, 2.0).unwrap();
        let v = VectorField::uniform(g, [1.0, -2.0, 3.5]);
        for s in [DiffScheme::Spectral, DiffScheme::Centered2] {
            assert!(divergence(&v, s).max_abs() <= 1e-13);
        }
    }

    #[test]
    fn spectral_divergence_of_sine() {
        let (g, v) = sine_x(16);
        let d = divergence(&v, DiffScheme::Spectral);
        for n in 0..g.len() {
            let exact = 2.0 * PI * (2.0 * PI * g.position(n)[0]).cos();
            assert!((d.values()[n] - exact).abs() <= 1e-10 * 2.0 * PI);
        }
    }

    #[test]
    fn centered_divergence_converges_second_order() {
        let err = |n: usize| {
            let (g, v) = sine_x(n);
            let d = divergence(&v, DiffScheme::Centered2);
            (0..g.len())
                .map(|i| {
                    let exact = 2.0 * PI * (2.0 * PI * g.position(i)[0]).cos();
                    (d.values()[i] - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(16) / err(32);
        assert!((ratio - 4.0).abs() <= 0.4, "ratio {ratio}");
    }

    #[test]
    fn curl_of_x_only_field_vanishes() {
        let (_, v) = sine_x(8);
        assert!(curl(&v, DiffScheme::Spectral).max_abs() <= 1e-10);
    }

    #[test]
    fn curl_of_transverse_sine() {
        let g = GridSpec::cubic(8, 1.0).unwrap();
        let v = VectorField::from_fn(g, |p| [0.0, (2.0 * PI * p[0]).sin(), 0.0]);
        let c = curl(&v, DiffScheme::Spectral);
        for n in 0..g.len() {
            let exact = 2.0 * PI * (2.0 * PI * g.position(n)[0]).cos();
            assert!(c.component(0)[n].abs() < 1e-10);
            assert!(c.component(1)[n].abs() < 1e-10);
            assert!((c.component(2)[n] - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn volume_integrals() {
        let g = GridSpec::cubic(16, 1.5).unwrap();
        let l = 1.5f64;
        let one = ScalarField::from_fn(g, |_| 1.0);
        assert!((volume_integral(&one) - l.powi(3)).abs() <= 1e-14 * l.powi(3));
        let s = ScalarField::from_fn(g, |p| (2.0 * PI * p[0] / l).sin());
        assert!(volume_integral(&s).abs() <= 1e-12 * 16.0);
        let s2 = ScalarField::from_fn(g, |p| (2.0 * PI * p[0] / l).sin().powi(2));
        assert!((volume_integral(&s2) - l.powi(3) / 2.0).abs() <= 1e-12 * l.powi(3) / 2.0);
    }

    #[test]
    fn pointwise_algebra() {
        let g = GridSpec::cubic(4, 1.0).unwrap();
        let x = VectorField::uniform(g, [1.0, 0.0, 0.0]);
        let y = VectorField::uniform(g, [0.0, 1.0, 0.0]);
        assert_eq!(dot_density(&x, &y).unwrap().max_abs(), 0.0);
        assert_eq!(cross_density(&x, &x).unwrap().max_abs(), 0.0);
        assert_eq!(
            cross_density(&x, &y).unwrap(),
            VectorField::uniform(g, [0.0, 0.0, 1.0])
        );
        let other = GridSpec::cubic(5, 1.0).unwrap();
        assert!(dot_density(&x, &VectorField::zeros(other)).is_err());
    }

    #[test]
    fn rotate_components_examples() {
        let g = GridSpec::cubic(4, 1.0).unwrap();
        let x = VectorField::uniform(g, [1.0, 0.0, 0.0]);
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(rotate_components(&x, &id), x);
        let neg = [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]];
        assert_eq!(
            rotate_components(&x, &neg),
            VectorField::uniform(g, [-1.0, 0.0, 0.0])
        );
        let rz = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(
            rotate_components(&x, &rz),
            VectorField::uniform(g, [0.0, 1.0, 0.0])
        );
    }
}
