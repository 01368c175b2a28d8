//! Closed-form / semi-analytic weight for the part of the nonlocal form
//! contributed by the complement of the enclosing ball `B_R`.

use crate::quadrature::gauss::gl_cached;
use crate::{Error, FracOrder, Result};

/// `omega(x) = int_{|y| > R} |x - y|^{-n-2s} dy` for `|x| < R`.
///
/// 1D closed form: `((R-x)^{-2s} + (R+x)^{-2s}) / (2s)`. In 2D the radial
/// integral is closed-form and the angle is integrated with 64-point Gauss:
/// `(1/(2s)) int_0^{2pi} rho(theta, x)^{-2s} dtheta` where `rho` is the
/// distance from `x` to the sphere along direction `theta`.
pub fn complement_weight(x: &[f64], ball_radius: f64, n: usize, s: FracOrder) -> Result<f64> {
    let two_s = 2.0 * s.value();
    match n {
        1 => {
            let xv = x[0];
            if xv.abs() >= ball_radius {
                return Err(Error::InvalidArgument(format!(
                    "point {xv} not inside ball of radius {ball_radius}"
                )));
            }
            Ok(((ball_radius - xv).powf(-two_s) + (ball_radius + xv).powf(-two_s)) / two_s)
        }
        2 => {
            let r2 = x[0] * x[0] + x[1] * x[1];
            if r2 >= ball_radius * ball_radius {
                return Err(Error::InvalidArgument(
                    "point not inside the enclosing ball".into(),
                ));
            }
            let rule = gl_cached(64);
            let (nodes, wts) = (&rule.0, &rule.1);
            let mut acc = 0.0;
            for (t, w) in nodes.iter().zip(wts.iter()) {
                let theta = 2.0 * std::f64::consts::PI * t;
                let e = [theta.cos(), theta.sin()];
                let xe = x[0] * e[0] + x[1] * e[1];
                let rho = -xe + (ball_radius * ball_radius - r2 + xe * xe).sqrt();
                acc += w * rho.powf(-two_s);
            }
            Ok(2.0 * std::f64::consts::PI * acc / two_s)
        }
        _ => Err(Error::InvalidDimension(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::FracOrder;

    fn s(v: f64) -> FracOrder {
        FracOrder::new(v).unwrap()
    }

    #[test]
    fn one_d_examples() {
        let v = complement_weight(&[0.0], 1.0, 1, s(0.5)).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        // even in x
        for &xv in &[0.3, 0.77] {
            let a = complement_weight(&[xv], 1.0, 1, s(0.3)).unwrap();
            let b = complement_weight(&[-xv], 1.0, 1, s(0.3)).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
        assert!(complement_weight(&[1.0], 1.0, 1, s(0.5)).is_err());
    }

    #[test]
    fn two_d_center() {
        for &sv in &[0.1, 0.5, 0.9] {
            let v = complement_weight(&[0.0, 0.0], 1.0, 2, s(sv)).unwrap();
            let want = std::f64::consts::PI / sv;
            assert!(((v - want) / want).abs() < 1e-13, "s={sv}: {v} vs {want}");
        }
    }

    #[test]
    fn increases_toward_boundary() {
        for n in [1usize, 2] {
            let mut prev = 0.0;
            for k in 1..=9 {
                let xv = 0.1 * k as f64;
                let x = if n == 1 { vec![xv] } else { vec![xv, 0.0] };
                let v = complement_weight(&x, 1.0, n, s(0.7)).unwrap();
                assert!(v > prev);
                prev = v;
            }
        }
    }
}
