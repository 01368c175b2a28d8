//! Closed-form constants and reference formulas: the normalization constant
//! `C(n, s)`, the one-dimensional eigenvalue expansion of Kwasnicki, the
//! Chen-Song two-sided bounds and the dilation scaling law.

use crate::{Error, Result};

/// Fractional order `s` of the operator, restricted to `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(s: f64) -> Result<Self> {
        if s.is_finite() && s > 0.0 && s < 1.0 {
            Ok(FracOrder(s))
        } else {
            Err(Error::InvalidFracOrder(s))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Normalization constant of the operator for a given dimension and order.
#[derive(Debug, Clone, Copy)]
pub struct KernelConstant {
    pub value: f64,
    pub n: usize,
    pub s: FracOrder,
}

/// Two-sided eigenvalue bounds, `lower <= upper`.
#[derive(Debug, Clone, Copy)]
pub struct EigenBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Lanczos coefficients, g = 7, nine terms.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function via the Lanczos approximation, accurate to better than
/// 1e-13 relative on (0, 10).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection keeps the approximation in its accurate range
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let z = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
    }
}

/// `C(n, s) = 2^{2s-1} s Gamma(s + n/2) / (pi^{n/2} Gamma(1 - s))`.
pub fn normalization_constant(n: usize, s: FracOrder) -> Result<KernelConstant> {
    if n == 0 || n > 2 {
        return Err(Error::InvalidDimension(n));
    }
    let sv = s.value();
    let value = 2f64.powf(2.0 * sv - 1.0) * sv * gamma(sv + n as f64 / 2.0)
        / (std::f64::consts::PI.powf(n as f64 / 2.0) * gamma(1.0 - sv));
    debug_assert!(value.is_finite() && value > 0.0);
    Ok(KernelConstant { value, n, s })
}

/// Leading term `(k pi/2 - (1-s) pi/4)^{2s}` of the k-th eigenvalue on
/// `(-1, 1)`. The remainder is `(1-s)/sqrt(s) * O(1/k)` and is not modeled.
pub fn kwasnicki_estimate(k: usize, s: FracOrder) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let sv = s.value();
    let base = k as f64 * std::f64::consts::PI / 2.0 - (1.0 - sv) * std::f64::consts::PI / 4.0;
    Ok(base.powf(2.0 * sv))
}

/// Two-sided bounds `c mu_k^s <= lambda_k <= mu_k^s` from the k-th Dirichlet
/// Laplacian eigenvalue of the same domain. For convex domains `c = 1/2`;
/// otherwise the domain constant must be supplied.
pub fn chen_song_bounds(
    mu_k: f64,
    s: FracOrder,
    convex: bool,
    c_domain: Option<f64>,
) -> Result<EigenBounds> {
    if !(mu_k > 0.0) {
        return Err(Error::InvalidArgument(format!("mu_k = {mu_k} must be positive")));
    }
    let c = if convex {
        0.5
    } else {
        match c_domain {
            Some(c) if c > 0.0 => c,
            _ => {
                return Err(Error::InvalidArgument(
                    "non-convex domain requires the domain constant".into(),
                ))
            }
        }
    };
    let upper = mu_k.powf(s.value());
    Ok(EigenBounds { lower: c * upper, upper })
}

/// Eigenvalue on the dilated domain `gamma * Omega`: `gamma^{-2s} lambda`.
pub fn scale_eigenvalue(lambda: f64, gamma_factor: f64, s: FracOrder) -> Result<f64> {
    if !(lambda > 0.0 && gamma_factor > 0.0) {
        return Err(Error::InvalidArgument(
            "lambda and gamma must be positive".into(),
        ));
    }
    Ok(gamma_factor.powf(-2.0 * s.value()) * lambda)
}

/// k-th Dirichlet Laplacian eigenvalue of the interval `(-1, 1)`: `(k pi/2)^2`.
pub fn interval_laplace_eigenvalue(k: usize) -> f64 {
    let kp = k as f64 * std::f64::consts::PI / 2.0;
    kp * kp
}

/// k-th Dirichlet Laplacian eigenvalue of the square `[-w, w]^2`, from sorted
/// sums of one-dimensional eigenvalues.
pub fn square_laplace_eigenvalue(k: usize, half_width: f64) -> f64 {
    assert!(k >= 1);
    let unit = (std::f64::consts::PI / (2.0 * half_width)).powi(2);
    let mut sums: Vec<f64> = Vec::new();
    // i^2 + j^2 over a window comfortably covering the first k values
    let m = (k as f64).sqrt() as usize + 4;
    for i in 1..=m {
        for j in 1..=m {
            sums.push(((i * i + j * j) as f64) * unit);
        }
    }
    sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sums[k - 1]
}
