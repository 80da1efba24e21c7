//! The integrands of the nonlinear Kantorovich functional.
//!
//! `f(u) = (1 − e^{−2u})^{−(m+1)/2}` and `g(v) = (1 − e^{2v})^{−1/2}` with
//! antiderivatives `F` (normalized so `F(1) = 0`) and
//! `G(v) = v − ln(1 + sqrt(1 − e^{2v}))`. With `u = φ = −ln tanh h` and
//! `v = ψ = ln tanh r` one has `f(φ) = cosh^{m+1} h` and `g(ψ) = cosh r`.
//! The `*_tanh` variants take `x = e^{−u} = tanh h` directly, which is how
//! the solver evaluates them.

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

fn domain<S: Scalar>(function: &'static str, value: S) -> Error {
    Error::Domain {
        function,
        value: value.to_f64_lossy(),
    }
}

/// `1 − e^{−2u}` without cancellation.
fn one_minus_exp_m2<S: Scalar>(u: S) -> S {
    -(-(S::two() * u)).exp_m1()
}

/// `f(u)`, defined for `u > 0`.
pub fn f_small<S: Scalar>(u: S, m: usize) -> Result<S> {
    check_dim(m)?;
    if !(u > S::zero()) {
        return Err(domain("f", u));
    }
    Ok(one_minus_exp_m2(u).powf(-S::lit((m + 1) as f64) / S::two()))
}

/// `F(u) = ∫_1^u f`, defined for `u > 0`.
pub fn f_big<S: Scalar>(u: S, m: usize) -> Result<S> {
    check_dim(m)?;
    if !(u > S::zero()) {
        return Err(domain("F", u));
    }
    let w = one_minus_exp_m2(u).sqrt();
    Ok(big_f_raw(u, w, m) - big_f_raw(S::one(), one_minus_exp_m2(S::one()).sqrt(), m))
}

/// `F` up to its constant, given `u` and `w = sqrt(1 − e^{−2u})`.
fn big_f_raw<S: Scalar>(u: S, w: S, m: usize) -> S {
    if m == 1 {
        u + w.ln()
    } else {
        // artanh(w) = u + ln(1 + w) since 1 − w² = e^{−2u}
        u + w.ln_1p() - w.recip()
    }
}

/// `g(v)`, defined for `v < 0`.
pub fn g_small<S: Scalar>(v: S) -> Result<S> {
    if !(v < S::zero()) {
        return Err(domain("g", v));
    }
    Ok((-(S::two() * v).exp_m1()).sqrt().recip())
}

/// `G(v) = v − ln(1 + sqrt(1 − e^{2v}))`, defined for `v < 0`.
pub fn g_big<S: Scalar>(v: S) -> Result<S> {
    if !(v < S::zero()) {
        return Err(domain("G", v));
    }
    Ok(v - (-(S::two() * v).exp_m1()).sqrt().ln_1p())
}

/// `f(−ln x)` for `x = tanh h ∈ (0, 1)`.
#[inline]
pub fn f_small_tanh<S: Scalar>(x: S, m: usize) -> S {
    (S::one() - x * x).powf(-S::lit((m + 1) as f64) / S::two())
}

/// `F(−ln x)` for `x = tanh h ∈ (0, 1)`.
#[inline]
pub fn f_big_tanh<S: Scalar>(x: S, m: usize) -> S {
    let w = ((S::one() - x) * (S::one() + x)).sqrt();
    let c = {
        let w1 = one_minus_exp_m2(S::one()).sqrt();
        big_f_raw(S::one(), w1, m)
    };
    big_f_raw(-x.ln(), w, m) - c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_arc, Adaptive};

    #[test]
    fn g_of_log_tanh_is_cosh() {
        for r in [0.5f64, 1.0, 2.0] {
            let v = r.tanh().ln();
            assert!((g_small(v).unwrap() / r.cosh() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn f_of_minus_log_tanh_is_cosh_power() {
        for m in [1usize, 2] {
            for h in [0.5f64, 1.0] {
                let u = -h.tanh().ln();
                let want = h.cosh().powi(m as i32 + 1);
                assert!((f_small(u, m).unwrap() / want - 1.0).abs() < 1e-12);
                assert!((f_small_tanh(h.tanh(), m) / want - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn g_big_near_zero_behaves_like_minus_sqrt() {
        let t = 1e-6f64;
        let ratio = g_big(-t).unwrap() / -(2.0 * t).sqrt();
        assert!((ratio - 1.0).abs() < 0.01);
    }

    #[test]
    fn derivative_of_f_big_is_f_small() {
        for m in [1usize, 2] {
            for u in [0.1f64, 1.0, 3.0] {
                let h = 1e-5 * u;
                let fd = (f_big(u + h, m).unwrap() - f_big(u - h, m).unwrap()) / (2.0 * h);
                let f = f_small(u, m).unwrap();
                assert!((fd / f - 1.0).abs() < 1e-8, "m={m} u={u}: {fd} vs {f}");
            }
        }
    }

    #[test]
    fn derivative_of_g_big_is_g_small() {
        for v in [-3.0f64, -1.0, -0.1] {
            let h = 1e-5 * v.abs();
            let fd = (g_big(v + h).unwrap() - g_big(v - h).unwrap()) / (2.0 * h);
            assert!((fd / g_small(v).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn quadrature_of_f_matches_f_big_differences() {
        for m in [1usize, 2] {
            for (a, b) in [(0.1f64, 1.0), (1.0, 3.0), (0.05, 0.4)] {
                let q = integrate_arc(&|s: f64| f_small(s, m).unwrap(), a, b, Adaptive::default());
                let d = f_big(b, m).unwrap() - f_big(a, m).unwrap();
                assert!((q / d - 1.0).abs() < 1e-8, "m={m} [{a},{b}]");
            }
        }
    }

    #[test]
    fn normalization_and_tanh_forms_agree() {
        for m in [1usize, 2] {
            assert_eq!(f_big(1.0f64, m).unwrap(), 0.0);
            for u in [0.2f64, 1.0, 4.0] {
                let x = (-u).exp();
                assert!((f_big_tanh(x, m) - f_big(u, m).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(f_small(0.0f64, 1), Err(Error::Domain { .. })));
        assert!(matches!(f_big(-1.0f64, 2), Err(Error::Domain { .. })));
        assert!(matches!(g_small(0.0f64), Err(Error::Domain { .. })));
        assert!(matches!(g_big(0.5f64), Err(Error::Domain { .. })));
        assert_eq!(f_small(1.0f64, 3), Err(Error::UnsupportedDimension(3)));
    }
}
