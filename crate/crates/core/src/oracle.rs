//! Adaptive integration oracle, independent of the Duffy-rule path.
//!
//! Touching pairs are integrated by nested refinement with the self-similar
//! tail summed exactly: red/bisection children at a shared vertex (or the
//! diagonal children of an identical pair) are scaled copies of the parent
//! pair whenever the numerator is homogeneous about the shared set, so
//! `I = S / (1 - copies * rho)` with `rho = 2^{-(n + d - 2s)}`, where `S`
//! sums the non-copy child pairs (recursively) and `d` is the numerator
//! homogeneity degree. Piecewise-linear numerators of the stiffness form are
//! homogeneous of degree 2 by continuity. Separated pairs use escalating
//! tensor Gauss rules with bisection. Used by tests and the acceptance suite
//! to validate assembled matrix entries at tight tolerances.

use rayon::prelude::*;

use crate::assembly::{build_annulus, hat_value};
use crate::mesh::{Domain, Mesh};
use crate::quadrature::{gauss_simplex_cached, gl_cached};
use crate::{Error, FracOrder, Result};

type Elem = [[f64; 2]; 3];

fn elem_of(mesh: &Mesh, e: usize) -> Elem {
    let el = mesh.element(e);
    let mut out = [[0.0; 2]; 3];
    for (k, &v) in el.iter().enumerate() {
        let p = mesh.vertex(v);
        out[k][0] = p[0];
        if mesh.dim() == 2 {
            out[k][1] = p[1];
        }
    }
    out
}

fn kernel(dim: usize, s: f64, x: &[f64; 2], y: &[f64; 2]) -> f64 {
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    let r2 = dx * dx + dy * dy;
    r2.powf(-(dim as f64 + 2.0 * s) / 2.0)
}

fn children(dim: usize, e: &Elem) -> Vec<Elem> {
    if dim == 1 {
        let m = [(e[0][0] + e[1][0]) / 2.0, 0.0];
        vec![[e[0], m, [0.0; 2]], [m, e[1], [0.0; 2]]]
    } else {
        let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let (m01, m12, m20) = (mid(e[0], e[1]), mid(e[1], e[2]), mid(e[2], e[0]));
        vec![
            [e[0], m01, m20],
            [e[1], m12, m01],
            [e[2], m20, m12],
            [m01, m12, m20],
        ]
    }
}

fn shared_pairs(dim: usize, a: &Elem, b: &Elem) -> Vec<(usize, usize)> {
    let nv = dim + 1;
    let mut out = Vec::new();
    for i in 0..nv {
        for j in 0..nv {
            if a[i] == b[j] {
                out.push((i, j));
            }
        }
    }
    out
}

fn map_point(dim: usize, e: &Elem, r: &[f64; 2]) -> [f64; 2] {
    if dim == 1 {
        [e[0][0] + (e[1][0] - e[0][0]) * r[0], 0.0]
    } else {
        [
            e[0][0] + (e[1][0] - e[0][0]) * r[0] + (e[2][0] - e[0][0]) * r[1],
            e[0][1] + (e[1][1] - e[0][1]) * r[0] + (e[2][1] - e[0][1]) * r[1],
        ]
    }
}

fn elem_measure(dim: usize, e: &Elem) -> f64 {
    if dim == 1 {
        (e[1][0] - e[0][0]).abs()
    } else {
        0.5 * ((e[1][0] - e[0][0]) * (e[2][1] - e[0][1])
            - (e[1][1] - e[0][1]) * (e[2][0] - e[0][0]))
            .abs()
    }
}

fn elem_center_radius(dim: usize, e: &Elem) -> ([f64; 2], f64) {
    let nv = dim + 1;
    let mut c = [0.0f64; 2];
    for v in e.iter().take(nv) {
        c[0] += v[0];
        c[1] += v[1];
    }
    c[0] /= nv as f64;
    c[1] /= nv as f64;
    let mut r: f64 = 0.0;
    for v in e.iter().take(nv) {
        r = r.max(((v[0] - c[0]).powi(2) + (v[1] - c[1]).powi(2)).sqrt());
    }
    (c, r)
}

/// Tensor Gauss on a separated pair. Well-separated pairs (gap at least the
/// larger circumradius) converge under escalating orders; closer pairs bisect
/// the larger element first, which restores separation at finer scales.
fn separated_pair(
    dim: usize,
    a: &Elem,
    b: &Elem,
    f: &dyn Fn(&[f64; 2], &[f64; 2]) -> f64,
    depth: usize,
) -> Result<f64> {
    let (ca, ra) = elem_center_radius(dim, a);
    let (cb, rb) = elem_center_radius(dim, b);
    let gap = ((ca[0] - cb[0]).powi(2) + (ca[1] - cb[1]).powi(2)).sqrt() - ra - rb;
    if gap < ra.max(rb) && depth < 12 {
        let (big, small, split_a) = if ra >= rb { (a, b, true) } else { (b, a, false) };
        let mut acc = 0.0;
        for c in children(dim, big) {
            acc += if split_a {
                separated_pair(dim, &c, small, f, depth + 1)?
            } else {
                separated_pair(dim, small, &c, f, depth + 1)?
            };
        }
        return Ok(acc);
    }
    let meas = elem_measure(dim, a) * elem_measure(dim, b);
    let scale = if dim == 1 { 1.0 } else { 2.0 };
    let mut prev: Option<f64> = None;
    let mut best = 0.0;
    for order in [4usize, 8, 12, 16] {
        let rule = gauss_simplex_cached(dim, order)?;
        let pts: Vec<[f64; 2]> = rule.points.iter().map(|p| map_point(dim, a, p)).collect();
        let qts: Vec<[f64; 2]> = rule.points.iter().map(|p| map_point(dim, b, p)).collect();
        let mut acc = 0.0;
        for (x, wa) in pts.iter().zip(&rule.weights) {
            for (y, wb) in qts.iter().zip(&rule.weights) {
                acc += wa * wb * f(x, y);
            }
        }
        let val = acc * meas * scale * scale;
        if let Some(p) = prev {
            if (val - p).abs() <= 1e-12 * val.abs().max(1e-280) {
                return Ok(val);
            }
        }
        prev = Some(val);
        best = val;
    }
    Ok(best)
}

/// Adaptive integral of the full pair integrand `f(x, y)` (numerator times
/// kernel) over `a x b`. `numerator_degree` is the homogeneity degree of the
/// numerator about the touching set (2 for continuous piecewise-linear
/// stiffness numerators, 0 for bounded ones).
pub fn pair_integral_oracle(
    dim: usize,
    a: &Elem,
    b: &Elem,
    f: &dyn Fn(&[f64; 2], &[f64; 2]) -> f64,
    s: FracOrder,
    numerator_degree: usize,
    depth: usize,
) -> Result<f64> {
    if depth > 40 {
        return Err(Error::OracleBudget(1e-9));
    }
    let shared = shared_pairs(dim, a, b);
    let identical = shared.len() == dim + 1;
    if shared.is_empty() {
        return separated_pair(dim, a, b, f, 0);
    }
    let rho = 2f64.powf(-(dim as f64 + numerator_degree as f64 - 2.0 * s.value()));
    let copies: Vec<(usize, usize)> = if identical {
        (0..children(dim, a).len()).map(|k| (k, k)).collect()
    } else {
        shared
    };
    let fac = copies.len() as f64 * rho;
    if fac >= 1.0 {
        return Err(Error::DivergentIntegral(format!(
            "touching pair with numerator degree {numerator_degree} at s = {}",
            s.value()
        )));
    }
    let ca = children(dim, a);
    let cb = children(dim, b);
    let mut sum = 0.0;
    for (i, ea) in ca.iter().enumerate() {
        for (j, eb) in cb.iter().enumerate() {
            if copies.contains(&(i, j)) {
                continue;
            }
            if shared_pairs(dim, ea, eb).is_empty() {
                sum += separated_pair(dim, ea, eb, f, 0)?;
            } else {
                sum += pair_integral_oracle(dim, ea, eb, f, s, numerator_degree, depth + 1)?;
            }
        }
    }
    Ok(sum / (1.0 - fac))
}

/// Adaptive integral of a smooth-except-at-boundary function over one
/// element, with bisection grading.
fn elem_integral(dim: usize, e: &Elem, g: &dyn Fn(&[f64; 2]) -> f64, depth: usize) -> Result<f64> {
    let meas = elem_measure(dim, e);
    let scale = if dim == 1 { 1.0 } else { 2.0 };
    let mut prev: Option<f64> = None;
    for order in [4usize, 8, 14] {
        let rule = gauss_simplex_cached(dim, order)?;
        let mut acc = 0.0;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            acc += w * g(&map_point(dim, e, p));
        }
        let val = acc * meas * scale;
        if let Some(pv) = prev {
            if (val - pv).abs() <= 1e-12 * val.abs().max(1e-280) {
                return Ok(val);
            }
        }
        prev = Some(val);
    }
    if depth >= 18 {
        return Ok(prev.unwrap());
    }
    let mut acc = 0.0;
    for c in children(dim, e) {
        acc += elem_integral(dim, &c, g, depth + 1)?;
    }
    Ok(acc)
}

/// Complement weight with escalating angular resolution (1D is closed form).
fn complement_weight_adaptive(dim: usize, x: &[f64; 2], radius: f64, s: f64) -> f64 {
    let two_s = 2.0 * s;
    if dim == 1 {
        return ((radius - x[0]).powf(-two_s) + (radius + x[0]).powf(-two_s)) / two_s;
    }
    let r2 = x[0] * x[0] + x[1] * x[1];
    let mut prev = f64::NAN;
    for m in [64usize, 128, 256, 512] {
        let rule = gl_cached(m);
        let (nodes, wts) = (&rule.0, &rule.1);
        let mut acc = 0.0;
        for (t, w) in nodes.iter().zip(wts.iter()) {
            let th = 2.0 * std::f64::consts::PI * t;
            let e = [th.cos(), th.sin()];
            let xe = x[0] * e[0] + x[1] * e[1];
            let rho = -xe + (radius * radius - r2 + xe * xe).sqrt();
            acc += w * rho.powf(-two_s);
        }
        let val = 2.0 * std::f64::consts::PI * acc / two_s;
        if (val - prev).abs() <= 1e-13 * val.abs() {
            return val;
        }
        prev = val;
    }
    prev
}

/// Stiffness entry `K[i][j]` (interior dof indices) computed entirely through
/// the adaptive oracle over the same domain decomposition as the production
/// assembly: domain pairs, annulus pairs, and the ball-complement weight.
pub fn stiffness_entry_oracle(mesh: &Mesh, s: FracOrder, i: usize, j: usize) -> Result<f64> {
    let dim = mesh.dim();
    let sv = s.value();
    let dofs = mesh.interior_dofs();
    if i >= dofs.len() || j >= dofs.len() {
        return Err(Error::InvalidArgument("dof index out of range".into()));
    }
    let (vi, vj) = (dofs[i], dofs[j]);
    let star = |v: usize| -> Vec<usize> {
        (0..mesh.n_elements())
            .filter(|&e| mesh.element(e).contains(&v))
            .collect()
    };
    let si = star(vi);
    let sj = star(vj);

    // domain x domain
    let ne = mesh.n_elements();
    let mut domain_pairs: Vec<(usize, usize)> = Vec::new();
    for a in 0..ne {
        let a_i = si.contains(&a);
        let a_j = sj.contains(&a);
        for b in a..ne {
            let hits_i = a_i || si.contains(&b);
            let hits_j = a_j || sj.contains(&b);
            if hits_i && hits_j {
                domain_pairs.push((a, b));
            }
        }
    }
    let _t0 = std::time::Instant::now();
    let mut total = domain_pairs
        .par_iter()
        .map(|&(a, b)| {
            let (ea, eb) = (elem_of(mesh, a), elem_of(mesh, b));
            let f = |x: &[f64; 2], y: &[f64; 2]| {
                let ui = hat_value(mesh, vi, a, x) - hat_value(mesh, vi, b, y);
                let uj = hat_value(mesh, vj, a, x) - hat_value(mesh, vj, b, y);
                ui * uj * kernel(dim, sv, x, y)
            };
            let v = pair_integral_oracle(dim, &ea, &eb, &f, s, 2, 0)?;
            Ok(if a == b { v } else { 2.0 * v })
        })
        .sum::<Result<f64>>()?;

    // domain x annulus (test functions vanish outside the domain)
    let ann = build_annulus(mesh)?;
    let both: Vec<usize> = si.iter().copied().filter(|e| sj.contains(e)).collect();
    let mut ann_pairs: Vec<(usize, usize)> = Vec::new();
    for &a in &both {
        for k in 0..ann.elems.len() {
            ann_pairs.push((a, k));
        }
    }
    eprintln!("[oracle] domain pairs ({}) in {:?}", domain_pairs.len(), _t0.elapsed());
    let _t1 = std::time::Instant::now();
    total += ann_pairs
        .par_iter()
        .map(|&(a, k)| {
            let ea = elem_of(mesh, a);
            let eb = ann.elems[k];
            let f = |x: &[f64; 2], y: &[f64; 2]| {
                hat_value(mesh, vi, a, x) * hat_value(mesh, vj, a, x) * kernel(dim, sv, x, y)
            };
            Ok(2.0 * pair_integral_oracle(dim, &ea, &eb, &f, s, 2, 0)?)
        })
        .sum::<Result<f64>>()?;

    eprintln!("[oracle] annulus pairs ({}) in {:?}", ann_pairs.len(), _t1.elapsed());
    let _t2 = std::time::Instant::now();
    // domain x ball complement
    let radius = ann.ball_radius;
    for &a in &both {
        let ea = elem_of(mesh, a);
        let g = |x: &[f64; 2]| {
            hat_value(mesh, vi, a, x)
                * hat_value(mesh, vj, a, x)
                * complement_weight_adaptive(dim, x, radius, sv)
        };
        total += 2.0 * elem_integral(dim, &ea, &g, 0)?;
    }

    eprintln!("[oracle] complement in {:?}", _t2.elapsed());
    let c = crate::kernel::normalization_constant(dim, s)?.value;
    Ok(c * total)
}

/// Dirichlet-Laplacian-free sanity access to the domain tag for tests.
pub fn domain_of(mesh: &Mesh) -> Domain {
    mesh.domain()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::FracOrder;

    fn s(v: f64) -> FracOrder {
        FracOrder::new(v).unwrap()
    }

    #[test]
    fn identical_pair_matches_closed_form_1d() {
        // int over [0,h]^2 of (x-y)^2 |x-y|^{-1-2s} = 2 h^{3-2s}/((2-2s)(3-2s))
        let h = 0.7;
        let e: Elem = [[0.0, 0.0], [h, 0.0], [0.0, 0.0]];
        for sv in [0.25, 0.5, 0.75, 0.9] {
            let f = move |x: &[f64; 2], y: &[f64; 2]| {
                let d = x[0] - y[0];
                d * d * d.abs().powf(-1.0 - 2.0 * sv)
            };
            let got = pair_integral_oracle(1, &e, &e, &f, s(sv), 2, 0).unwrap();
            let want = 2.0 * h.powf(3.0 - 2.0 * sv) / ((2.0 - 2.0 * sv) * (3.0 - 2.0 * sv));
            assert!(
                ((got - want) / want).abs() < 1e-10,
                "s={sv}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn vertex_pair_matches_closed_form_1d() {
        // [0,h] x [-h,0], constant numerator, s < 1/2
        let h = 0.6;
        let a: Elem = [[0.0, 0.0], [h, 0.0], [0.0, 0.0]];
        let b: Elem = [[0.0, 0.0], [-h, 0.0], [0.0, 0.0]];
        for sv in [0.1, 0.25, 0.4] {
            let f = move |x: &[f64; 2], y: &[f64; 2]| {
                (x[0] - y[0]).abs().powf(-1.0 - 2.0 * sv)
            };
            let got = pair_integral_oracle(1, &a, &b, &f, s(sv), 0, 0).unwrap();
            let want = ((2.0 * h).powf(1.0 - 2.0 * sv) - 2.0 * h.powf(1.0 - 2.0 * sv))
                / ((-2.0 * sv) * (1.0 - 2.0 * sv));
            assert!(
                ((got - want) / want).abs() < 1e-9,
                "s={sv}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn divergent_vertex_pair_detected() {
        let a: Elem = [[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]];
        let b: Elem = [[0.0, 0.0], [-1.0, 0.0], [0.0, 0.0]];
        let f = |x: &[f64; 2], y: &[f64; 2]| (x[0] - y[0]).abs().powf(-2.0);
        assert!(matches!(
            pair_integral_oracle(1, &a, &b, &f, s(0.5), 0, 0),
            Err(Error::DivergentIntegral(_))
        ));
    }

    #[test]
    fn separated_pair_polynomial() {
        let a: Elem = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let b: Elem = [[3.0, 0.0], [4.0, 0.0], [3.0, 1.0]];
        let f = |x: &[f64; 2], y: &[f64; 2]| x[0] * y[1];
        let got = separated_pair(2, &a, &b, &f, 0).unwrap();
        // int x over a = 1/6; int y1 over b = 1/6
        assert!((got - 1.0 / 36.0).abs() < 1e-13);
    }
}
