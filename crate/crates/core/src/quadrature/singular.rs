//! Regularizing quadrature for the singular kernel on touching element pairs.
//!
//! Every touching configuration (identical, vertex-touching, edge-touching)
//! is decomposed into Duffy-type subdomains in which the difference of the
//! two reference points factors as `x - y = w * V(z)` with `V` bounded away
//! from zero. Integrands of the stiffness form then have the exact radial
//! profile `w^{beta - n - 2s + d} * poly(w)` (`d` = homogeneity degree of the
//! numerator at the touching set, `beta` = the radial power of the subdomain
//! Jacobian). The radial direction is integrated with a generalized rule that
//! is exact on both the shifted family `w^{sigma + k}` and plain monomials
//! `w^k`, with weights solved from the mixed moment system in double-double
//! precision; the transverse directions use tensor Gauss rules.

use crate::mesh::PairTag;
use crate::quadrature::dd::{solve_dd, Dd};
use crate::quadrature::gauss::{gauss_jacobi_01, gauss_legendre_01, gauss_simplex};
use crate::{Error, FracOrder, Result};

/// Paired-point rule on the reference configuration of a touching pair.
/// Points are `(x in T1, y in T2)` in reference coordinates of each element
/// (canonical ordering: shared vertices first); weights are reference-level
/// and must be scaled by both physical Jacobian determinants when mapped.
#[derive(Debug, Clone)]
pub struct PairQuadRule {
    pub dim: usize,
    pub class: PairTag,
    pub points: Vec<([f64; 2], [f64; 2])>,
    pub weights: Vec<f64>,
}

impl PairQuadRule {
    /// Apply the rule to an integrand given in reference coordinates.
    /// Neumaier-compensated; the mixed-moment weights alternate in sign.
    pub fn apply_ref<F: Fn(&[f64; 2], &[f64; 2]) -> f64>(&self, f: F) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (pt, w) in self.points.iter().zip(&self.weights) {
            let term = w * f(&pt.0, &pt.1);
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }
}

/// Generalized radial rule: nodes on (0, 1) and weights exact on
/// `{w^{sigma0 + k}}` and `{w^k}` up to the requested degrees.
fn radial_rule(sigma0: f64, k_sing: usize, k_plain: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut exps: Vec<f64> = Vec::new();
    for k in 0..=k_sing {
        exps.push(sigma0 + k as f64);
    }
    for k in 0..=k_plain {
        exps.push(k as f64);
    }
    exps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    exps.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    let m = exps.len();
    let (nodes, _) = gauss_jacobi_01(m, sigma0.max(-0.999));
    let mut a = vec![Dd::ZERO; m * m];
    let mut b = vec![Dd::ZERO; m];
    for (i, &e) in exps.iter().enumerate() {
        for (j, &x) in nodes.iter().enumerate() {
            a[i * m + j] = Dd::from(x.powf(e));
        }
        b[i] = Dd::from(1.0).div(Dd::from(e + 1.0));
    }
    let w = solve_dd(&a, &b, m)
        .ok_or_else(|| Error::Factorization("radial moment system is singular".into()))?;
    Ok((nodes, w.iter().map(|x| x.to_f64()).collect()))
}

/// Smallest numerator homogeneity degree whose radial profile is integrable.
/// Identical pairs additionally require the numerator to vanish at the
/// diagonal, which every continuous piecewise-linear integrand does.
fn min_degree(beta: usize, n: usize, s: f64) -> usize {
    let mut d = 0usize;
    while beta as f64 - n as f64 - 2.0 * s + d as f64 <= -1.0 + 1e-9 {
        d += 1;
    }
    d
}

struct RadialSetup {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn radial_setup(beta: usize, jac_deg: usize, n: usize, s: f64) -> Result<RadialSetup> {
    let dmin = min_degree(beta, n, s);
    let sigma0 = beta as f64 - n as f64 - 2.0 * s + dmin as f64;
    let k_sing = (2 - dmin.min(2)) + jac_deg + 2;
    let k_plain = beta + jac_deg + 2;
    let (nodes, weights) = radial_rule(sigma0, k_sing, k_plain)?;
    Ok(RadialSetup { nodes, weights })
}

/// Hexagon sector vertices of the difference set of the unit simplex.
const HEX: [[f64; 2]; 6] = [
    [1.0, 0.0],
    [0.0, 1.0],
    [-1.0, 1.0],
    [-1.0, 0.0],
    [0.0, -1.0],
    [1.0, -1.0],
];

/// Duffy-type tensor rule for a touching pair.
///
/// `base_order` controls the transverse (angular) resolution; the radial
/// family is integrated exactly at any order. Rules are built on canonical
/// reference configurations: shared vertices occupy the leading local
/// positions of both elements, and for edge pairs both local orderings list
/// the shared edge as (vertex 0, vertex 1) in the same direction.
pub fn singular_pair_rule(
    dim: usize,
    class: PairTag,
    s: FracOrder,
    base_order: usize,
) -> Result<PairQuadRule> {
    if base_order < 1 {
        return Err(Error::UnsupportedQuadOrder(base_order, 1));
    }
    let sv = s.value();
    match (dim, class) {
        (_, PairTag::Disjoint) => Err(Error::DisjointPairRule),
        (1, PairTag::Identical) => rule_1d_identical(sv, base_order),
        (1, PairTag::VertexTouching) => rule_1d_vertex(sv, base_order),
        (1, PairTag::EdgeTouching) => Err(Error::InvalidArgument(
            "edge-touching pairs do not exist in 1D".into(),
        )),
        (2, PairTag::Identical) => rule_2d_identical(sv, base_order),
        (2, PairTag::VertexTouching) => rule_2d_vertex(sv, base_order),
        (2, PairTag::EdgeTouching) => rule_2d_edge(sv, base_order),
        _ => Err(Error::InvalidDimension(dim)),
    }
}

/// T1 = T2 = [0,1]: two branches around the diagonal,
/// (x, y) = (z(1-w) + w, z(1-w)) and mirrored; Jacobian (1 - w).
fn rule_1d_identical(s: f64, base_order: usize) -> Result<PairQuadRule> {
    let rad = radial_setup(0, 1, 1, s)?;
    let (zx, zw) = gauss_legendre_01(base_order.max(2));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (w, a) in rad.nodes.iter().zip(&rad.weights) {
        for (z, gz) in zx.iter().zip(&zw) {
            let x = z * (1.0 - w) + w;
            let y = z * (1.0 - w);
            let wt = a * gz * (1.0 - w);
            points.push(([x, 0.0], [y, 0.0]));
            weights.push(wt);
            points.push(([y, 0.0], [x, 0.0]));
            weights.push(wt);
        }
    }
    Ok(PairQuadRule { dim: 1, class: PairTag::Identical, points, weights })
}

/// Shared vertex at reference 0 of both intervals:
/// (x, y) = (w, wz) and (wz, w); Jacobian w.
fn rule_1d_vertex(s: f64, base_order: usize) -> Result<PairQuadRule> {
    let rad = radial_setup(1, 0, 1, s)?;
    let (zx, zw) = gauss_legendre_01(base_order.max(2));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (w, a) in rad.nodes.iter().zip(&rad.weights) {
        for (z, gz) in zx.iter().zip(&zw) {
            let wt = a * gz * w;
            points.push(([*w, 0.0], [w * z, 0.0]));
            weights.push(wt);
            points.push(([w * z, 0.0], [*w, 0.0]));
            weights.push(wt);
        }
    }
    Ok(PairQuadRule { dim: 1, class: PairTag::VertexTouching, points, weights })
}

/// T1 = T2 = unit simplex: six hexagon sectors of the difference z = x - y,
/// x = max(0, z) + (1 - w) u over the intersection simplex; Jacobian
/// w (1 - w)^2 per unit sector measure.
fn rule_2d_identical(s: f64, base_order: usize) -> Result<PairQuadRule> {
    let rad = radial_setup(1, 2, 2, s)?;
    let (zx, zw) = gauss_legendre_01(base_order.max(2));
    let tri = gauss_simplex(2, (base_order / 2).max(2))?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for sector in 0..6 {
        let va = HEX[sector];
        let vb = HEX[(sector + 1) % 6];
        for (w, a) in rad.nodes.iter().zip(&rad.weights) {
            for (z3, gz) in zx.iter().zip(&zw) {
                let v = [(1.0 - z3) * va[0] + z3 * vb[0], (1.0 - z3) * va[1] + z3 * vb[1]];
                let zvec = [w * v[0], w * v[1]];
                let c = [zvec[0].max(0.0), zvec[1].max(0.0)];
                let base_wt = a * gz * w * (1.0 - w) * (1.0 - w);
                for (u, tw) in tri.points.iter().zip(&tri.weights) {
                    let x = [c[0] + (1.0 - w) * u[0], c[1] + (1.0 - w) * u[1]];
                    let y = [x[0] - zvec[0], x[1] - zvec[1]];
                    points.push((x, y));
                    weights.push(base_wt * tw);
                }
            }
        }
    }
    Ok(PairQuadRule { dim: 2, class: PairTag::Identical, points, weights })
}

/// Shared vertex at reference origin of both triangles:
/// x = w1 (t, 1-t), y = w2 (tau, 1-tau) with (w1, w2) = (w, wz) and swapped;
/// Jacobian w^3 z.
fn rule_2d_vertex(s: f64, base_order: usize) -> Result<PairQuadRule> {
    let rad = radial_setup(3, 0, 2, s)?;
    let (zx, zw) = gauss_legendre_01(base_order.max(2));
    let (tx, tw) = gauss_legendre_01(base_order.max(2));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (w, a) in rad.nodes.iter().zip(&rad.weights) {
        for (z, gz) in zx.iter().zip(&zw) {
            let jac = a * gz * w.powi(3) * z;
            for (t, gt) in tx.iter().zip(&tw) {
                for (tau, gtau) in tx.iter().zip(&tw) {
                    let wt = jac * gt * gtau;
                    let xa = [w * t, w * (1.0 - t)];
                    let ya = [w * z * tau, w * z * (1.0 - tau)];
                    points.push((xa, ya));
                    weights.push(wt);
                    let xb = [w * z * t, w * z * (1.0 - t)];
                    let yb = [w * tau, w * (1.0 - tau)];
                    points.push((xb, yb));
                    weights.push(wt);
                }
            }
        }
    }
    Ok(PairQuadRule { dim: 2, class: PairTag::VertexTouching, points, weights })
}

/// Shared edge along the first reference axis of both triangles. Singular
/// coordinates (d, x2, y2) = x1 - y1 and the distances to the shared edge;
/// four Duffy subdomains (the third splits along its z-diagonal), each with
/// Jacobian w^2 / scale(z)^3 and remaining edge coordinate y1 = (1 - w) t.
fn rule_2d_edge(s: f64, base_order: usize) -> Result<PairQuadRule> {
    let rad = radial_setup(2, 1, 2, s)?;
    let (zx, zw) = gauss_legendre_01(base_order.max(2));
    let (tx, tw) = gauss_legendre_01((base_order / 2).max(3));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    // subdomain id: 0 -> d largest, 1 -> x2 largest, 2a/2b -> y2 largest
    for sub in 0..4 {
        for (w, a) in rad.nodes.iter().zip(&rad.weights) {
            for (za, gza) in zx.iter().zip(&zw) {
                for (zb, gzb) in zx.iter().zip(&zw) {
                    let (z1, z2, zjac) = match sub {
                        0 | 1 => (*za, *zb, 1.0),
                        2 => (*za, zb * (1.0 - za), 1.0 - za), // z1 + z2 <= 1
                        _ => (1.0 - za * zb, 1.0 - za * (1.0 - zb), *za), // z1 + z2 >= 1
                    };
                    let (d, x2, y2, jac) = match sub {
                        0 => {
                            let sc = 1.0 + z1;
                            (w / sc, w * z1 / sc, w * z2 / sc, w * w / sc.powi(3))
                        }
                        1 => {
                            let sc = 1.0 + z1;
                            (w * z1 / sc, w / sc, w * z2 / sc, w * w / sc.powi(3))
                        }
                        2 => (w * z1, w * z2, *w, w * w),
                        _ => {
                            let sc = z1 + z2;
                            (w * z1 / sc, w * z2 / sc, w / sc, w * w / sc.powi(3))
                        }
                    };
                    let ulen = 1.0 - w;
                    let base_wt = a * gza * gzb * zjac * jac * ulen;
                    for (t, gt) in tx.iter().zip(&tw) {
                        let y1 = ulen * t;
                        let x = [y1 + d, x2];
                        let y = [y1, y2];
                        let wt = base_wt * gt;
                        points.push((x, y));
                        weights.push(wt);
                        points.push((y, x));
                        weights.push(wt);
                    }
                }
            }
        }
    }
    Ok(PairQuadRule { dim: 2, class: PairTag::EdgeTouching, points, weights })
}
