//! Per-mode propagation factors of the linear part of the drift.

use num_complex::Complex64;

use super::Scheme;
use crate::error::{Error, Result};
use crate::models::Block2;

type C = Complex64;
type M4 = [[C; 4]; 4];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Factors `(a, b, c)` of the real scalar update
/// `X̂' = a X̂ + b N̂ + c Ŵ` for decay rate `λ` and step `h`, where `Ŵ` is
/// the transformed noise increment. For the exponential scheme, `c` makes
/// the stationary variance of a linear mode exactly `s/(2λ)`.
pub(crate) fn scalar_factors(lambda: f64, h: f64, scheme: Scheme) -> Result<(f64, f64, f64)> {
    let z = lambda * h;
    match scheme {
        Scheme::ExponentialEuler => {
            let a = (-z).exp();
            let (b, c) = if z.abs() < 1e-8 {
                (h * (1.0 - 0.5 * z), 1.0 - 0.5 * z)
            } else {
                (
                    -(-z).exp_m1() / lambda,
                    (-(-2.0 * z).exp_m1() / (2.0 * z)).sqrt(),
                )
            };
            Ok((a, b, c))
        }
        Scheme::EulerMaruyama => Ok((1.0 - z, h, 1.0)),
        Scheme::SemiImplicitEuler => {
            let d = 1.0 + z;
            if d <= 0.0 {
                return Err(Error::params(format!(
                    "semi-implicit step singular: 1 + lambda dt = {d}"
                )));
            }
            Ok((1.0 / d, h / d, 1.0 / d))
        }
    }
}

/// `(e^{rh}, ∫₀ʰ e^{rs} ds)` for a complex rate, or the scheme's analogue.
pub(crate) fn diagonal_factors(r: C, h: f64, scheme: Scheme) -> Result<(C, C)> {
    let z = r * h;
    match scheme {
        Scheme::ExponentialEuler => {
            let e = z.exp();
            let phi = if z.norm() < 1e-5 {
                h * (ONE + z / 2.0 + z * z / 6.0)
            } else {
                (e - ONE) / r
            };
            Ok((e, phi))
        }
        Scheme::EulerMaruyama => Ok((ONE + z, C::new(h, 0.0))),
        Scheme::SemiImplicitEuler => {
            let d = ONE - z;
            if d.norm() < 1e-12 {
                return Err(Error::params("semi-implicit step singular"));
            }
            Ok((ONE / d, h / d))
        }
    }
}

/// `(E, Φ)` for the 2×2 linear block `M`: `E = e^{Mh}`,
/// `Φ = ∫₀ʰ e^{Ms} ds`, read off the exponential of the augmented matrix
/// `[[M, I], [0, 0]] h`.
pub(crate) fn block_factors(m: &Block2, h: f64, scheme: Scheme) -> Result<(Block2, Block2)> {
    let hc = C::new(h, 0.0);
    match scheme {
        Scheme::ExponentialEuler => {
            let mut aug = [[ZERO; 4]; 4];
            for i in 0..2 {
                for j in 0..2 {
                    aug[i][j] = m[i][j] * h;
                }
                aug[i][i + 2] = hc;
            }
            let ex = expm4(&aug);
            let mut e = [[ZERO; 2]; 2];
            let mut phi = [[ZERO; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    e[i][j] = ex[i][j];
                    phi[i][j] = ex[i][j + 2];
                }
            }
            Ok((e, phi))
        }
        Scheme::EulerMaruyama => {
            let mut e = [[ZERO; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    e[i][j] = m[i][j] * h;
                }
                e[i][i] += ONE;
            }
            Ok((e, [[hc, ZERO], [ZERO, hc]]))
        }
        Scheme::SemiImplicitEuler => {
            let a = [
                [ONE - m[0][0] * h, -m[0][1] * h],
                [-m[1][0] * h, ONE - m[1][1] * h],
            ];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            if det.norm() < 1e-12 {
                return Err(Error::params("semi-implicit step singular"));
            }
            let inv = [
                [a[1][1] / det, -a[0][1] / det],
                [-a[1][0] / det, a[0][0] / det],
            ];
            let phi = [
                [inv[0][0] * h, inv[0][1] * h],
                [inv[1][0] * h, inv[1][1] * h],
            ];
            Ok((inv, phi))
        }
    }
}

fn matmul4(a: &M4, b: &M4) -> M4 {
    let mut c = [[ZERO; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == ZERO {
                continue;
            }
            for j in 0..4 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// Scaling and squaring with a Taylor series; the argument is scaled to
/// norm ≤ 1/2, where 20 terms are well past double precision.
fn expm4(a: &M4) -> M4 {
    let norm = a
        .iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5_f64.powi(squarings);
    let mut x = *a;
    for row in x.iter_mut() {
        for z in row.iter_mut() {
            *z *= scale;
        }
    }
    let mut result = [[ZERO; 4]; 4];
    let mut term = [[ZERO; 4]; 4];
    for i in 0..4 {
        result[i][i] = ONE;
        term[i][i] = ONE;
    }
    for n in 1..=20 {
        term = matmul4(&term, &x);
        let inv = 1.0 / n as f64;
        let mut largest = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                term[i][j] *= inv;
                result[i][j] += term[i][j];
                largest = largest.max(term[i][j].norm());
            }
        }
        if largest < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul4(&result, &result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn diagonal_block_matches_scalar_exponentials() {
        let r1 = C::new(-0.7, 0.3);
        let r2 = C::new(2.5, -4.0);
        let m = [[r1, ZERO], [ZERO, r2]];
        let (e, phi) = block_factors(&m, 0.37, Scheme::ExponentialEuler).unwrap();
        for (r, k) in [(r1, 0), (r2, 1)] {
            let (es, ps) = diagonal_factors(r, 0.37, Scheme::ExponentialEuler).unwrap();
            assert!(close(e[k][k], es, 1e-13));
            assert!(close(phi[k][k], ps, 1e-13));
        }
        assert_eq!(e[0][1], ZERO);
    }

    #[test]
    fn nilpotent_block_is_exact() {
        // exp([[0,1],[0,0]] h) = [[1,h],[0,1]], Φ = [[h, h²/2],[0, h]]
        let m = [[ZERO, ONE], [ZERO, ZERO]];
        let (e, phi) = block_factors(&m, 0.5, Scheme::ExponentialEuler).unwrap();
        assert!(close(e[0][1], C::new(0.5, 0.0), 1e-14));
        assert!(close(phi[0][1], C::new(0.125, 0.0), 1e-14));
        assert!(close(phi[1][1], C::new(0.5, 0.0), 1e-14));
    }

    #[test]
    fn rotation_generator_gives_cosines() {
        let w = 30.0;
        let m = [[ZERO, C::new(w, 0.0)], [C::new(-w, 0.0), ZERO]];
        let (e, _) = block_factors(&m, 0.9, Scheme::ExponentialEuler).unwrap();
        assert!(close(e[0][0], C::new((w * 0.9).cos(), 0.0), 1e-11));
        assert!(close(e[0][1], C::new((w * 0.9).sin(), 0.0), 1e-11));
    }

    #[test]
    fn scalar_factors_limits() {
        let (a, b, c) = scalar_factors(0.0, 0.1, Scheme::ExponentialEuler).unwrap();
        assert_eq!((a, b, c), (1.0, 0.1, 1.0));
        let (a, b, c) = scalar_factors(2.0, 0.1, Scheme::ExponentialEuler).unwrap();
        assert!((a - (-0.2_f64).exp()).abs() < 1e-15);
        assert!((b - (1.0 - (-0.2_f64).exp()) / 2.0).abs() < 1e-15);
        // stationary variance a²v + c²·h·s ⇒ v = s/(2λ)
        let v = c * c * 0.1 / (1.0 - a * a);
        assert!((v - 1.0 / (2.0 * 2.0)).abs() < 1e-14);
        assert!(scalar_factors(-20.0, 0.1, Scheme::SemiImplicitEuler).is_err());
    }

    #[test]
    fn small_rate_series_is_continuous() {
        let h = 0.01;
        let r = C::new(1e-4, 0.0);
        let (_, p_series) = diagonal_factors(r, h, Scheme::ExponentialEuler).unwrap();
        let exact = C::new((1e-6_f64).exp_m1() / 1e-4, 0.0);
        assert!(close(p_series, exact, 1e-12));
    }
}
