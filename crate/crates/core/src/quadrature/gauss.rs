//! Gauss-Legendre and Gauss-Jacobi rules on [0, 1] and simplex rules built
//! from them (conical products in 2D).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::{Error, Result};

static GL_CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
static SIMPLEX_CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<QuadRule>>>> = OnceLock::new();

/// Cached Gauss-Legendre nodes/weights on [0, 1] for hot paths.
pub fn gl_cached(m: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    let cache = GL_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(m)
        .or_insert_with(|| Arc::new(gauss_legendre_01_uncached(m)))
        .clone()
}

/// Cached simplex rule for hot paths.
pub fn gauss_simplex_cached(dim: usize, order: usize) -> Result<Arc<QuadRule>> {
    let cache = SIMPLEX_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    {
        let map = cache.lock().unwrap();
        if let Some(r) = map.get(&(dim, order)) {
            return Ok(r.clone());
        }
    }
    let rule = Arc::new(gauss_simplex(dim, order)?);
    let mut map = cache.lock().unwrap();
    Ok(map.entry((dim, order)).or_insert(rule).clone())
}

/// Nodes and weights of the m-point Gauss-Legendre rule on [0, 1].
/// Newton iteration on the Legendre recurrence; good to machine precision
/// for m up to at least 64.
pub fn gauss_legendre_01(m: usize) -> (Vec<f64>, Vec<f64>) {
    let arc = gl_cached(m);
    (arc.0.clone(), arc.1.clone())
}

fn gauss_legendre_01_uncached(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let n = m as f64;
    for i in 0..m {
        // Tricomi-style initial guess on [-1, 1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(m, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[m - 1 - i] = (x + 1.0) / 2.0;
        weights[m - 1 - i] = w / 2.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    if m == 1 {
        return (x, 1.0);
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights of the m-point Gauss-Jacobi rule for the weight
/// `w^alpha` on [0, 1] (`alpha > -1`), via Golub-Welsch on the symmetric
/// tridiagonal recurrence matrix of the Jacobi polynomials P^(0, alpha).
pub fn gauss_jacobi_01(m: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1 && alpha > -1.0);
    let (a, b) = (0.0f64, alpha);
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m.saturating_sub(1)];
    for k in 0..m {
        let kf = k as f64;
        let den = (2.0 * kf + a + b) * (2.0 * kf + a + b + 2.0);
        diag[k] = if den == 0.0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / den };
    }
    for k in 1..m {
        let kf = k as f64;
        let num = 4.0 * kf * (kf + a) * (kf + b) * (kf + a + b);
        let den = (2.0 * kf + a + b).powi(2) * (2.0 * kf + a + b + 1.0) * (2.0 * kf + a + b - 1.0);
        off[k - 1] = (num / den).sqrt();
    }
    let mut t = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        t[(k, k)] = diag[k];
    }
    for k in 0..m - 1 {
        t[(k, k + 1)] = off[k];
        t[(k + 1, k)] = off[k];
    }
    let eig = nalgebra::SymmetricEigen::new(t);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    // mu0 on [-1,1] for weight (1+x)^alpha is 2^{alpha+1}/(alpha+1); mapping to
    // [0,1] with w = (x+1)/2 scales the total mass down by the same power of
    // two, leaving weights v_0^2 / (alpha + 1).
    let nodes = pairs.iter().map(|p| (p.0 + 1.0) / 2.0).collect();
    let weights = pairs.iter().map(|p| p.1 / (a + b + 1.0)).collect();
    (nodes, weights)
}

/// Quadrature rule on the reference simplex: `[0,1]` in 1D, the unit triangle
/// `{x, y >= 0, x + y <= 1}` in 2D. Points are stored as `[x, 0]` in 1D.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

pub const MAX_GAUSS_DEGREE: usize = 40;

/// Rule exact for polynomials up to `order` on the reference simplex. The 2D
/// rule is the conical product of Gauss-Legendre and Gauss-Jacobi(alpha = 1),
/// exact by construction at every order.
pub fn gauss_simplex(dim: usize, order: usize) -> Result<QuadRule> {
    if order < 1 || order > MAX_GAUSS_DEGREE {
        return Err(Error::UnsupportedQuadOrder(order, MAX_GAUSS_DEGREE));
    }
    let m = order / 2 + 1; // 2m - 1 >= order
    match dim {
        1 => {
            let (x, w) = gauss_legendre_01(m);
            Ok(QuadRule {
                dim: 1,
                degree: order,
                points: x.iter().map(|&t| [t, 0.0]).collect(),
                weights: w,
            })
        }
        2 => {
            // x = a, y = b (1 - a); dx dy = (1 - a) da db. The (1 - a) factor
            // is the Jacobi weight in the a direction after a -> 1 - a.
            let (xa, wa) = gauss_jacobi_01(m, 1.0);
            let (xb, wb) = gauss_legendre_01(m);
            let mut points = Vec::with_capacity(m * m);
            let mut weights = Vec::with_capacity(m * m);
            for (i, &a) in xa.iter().enumerate() {
                let x = 1.0 - a; // jacobi weight is w^1 at 0; we need (1-a) at 1
                for (j, &b) in xb.iter().enumerate() {
                    points.push([x, b * (1.0 - x)]);
                    weights.push(wa[i] * wb[j]);
                }
            }
            Ok(QuadRule { dim: 2, degree: order, points, weights })
        }
        _ => Err(Error::InvalidDimension(dim)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn legendre_rule_moments() {
        for m in 1..=20 {
            let (x, w) = gauss_legendre_01(m);
            for k in 0..=(2 * m - 1) {
                let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
                let want = 1.0 / (k as f64 + 1.0);
                assert!((got - want).abs() < 1e-14, "m={m} k={k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn jacobi_rule_moments() {
        for &alpha in &[-0.9, -0.5, 0.0, 0.3, 1.0, 2.5] {
            for m in 1..=14 {
                let (x, w) = gauss_jacobi_01(m, alpha);
                for k in 0..=(2 * m - 1) {
                    let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
                    let want = 1.0 / (alpha + k as f64 + 1.0);
                    assert!(
                        ((got - want) / want).abs() < 1e-12,
                        "alpha={alpha} m={m} k={k}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn simplex_1d_examples() {
        let r = gauss_simplex(1, 1).unwrap();
        assert_eq!(r.points.len(), 1);
        assert!((r.points[0][0] - 0.5).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);

        let r = gauss_simplex(1, 5).unwrap();
        let got: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0].powi(5)).sum();
        assert!((got - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn simplex_2d_monomials() {
        // int_T x^a y^b = a! b! / (a + b + 2)!
        for order in 1..=12 {
            let r = gauss_simplex(2, order).unwrap();
            let sw: f64 = r.weights.iter().sum();
            assert!((sw - 0.5).abs() < 1e-14);
            for a in 0..=order {
                for b in 0..=(order - a) {
                    let got: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let want = factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert!(
                        (got - want).abs() < 1e-13,
                        "order={order} a={a} b={b}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn unsupported_order_rejected() {
        assert!(gauss_simplex(1, 0).is_err());
        assert!(gauss_simplex(2, MAX_GAUSS_DEGREE + 1).is_err());
    }
}
