//! Nested refinement studies, the eigenvalue convergence model
//! `lambda_h = lambda + C h^alpha`, extrapolation, and eigenfunction L2
//! errors against a fine-grid reference.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::assembly::{assemble_mass, assemble_stiffness, AssemblyParams, DofMap, SymmetricMatrix};
use crate::eigensolve::{fix_sign, solve_lowest, SolverMode, Spectrum};
use crate::mesh::{
    disk_mesh, interval_mesh, lshape_mesh, refine_uniform, square_mesh, Domain, Mesh, VertexParent,
};
use crate::{Error, FracOrder, Result};

/// One refinement level: mesh, mesh size and solved spectrum.
#[derive(Debug, Clone)]
pub struct StudyLevel {
    pub mesh: Arc<Mesh>,
    pub h_max: f64,
    pub spectrum: Spectrum,
}

/// A chain of nested meshes with spectra, finest level used as the
/// eigenfunction reference.
#[derive(Debug, Clone)]
pub struct RefinementStudy {
    pub domain: Domain,
    pub s: FracOrder,
    pub levels: Vec<StudyLevel>,
    pub reference_level: usize,
}

/// Least-squares fit of `lambda_h = lambda_ext + C h^alpha`.
#[derive(Debug, Clone, Copy)]
pub struct OrderFit {
    pub lambda_ext: f64,
    pub c: f64,
    pub alpha: f64,
    pub rms_residual: f64,
}

/// Per-level L2 errors of the k-th eigenfunction against the reference level
/// and the fitted order.
#[derive(Debug, Clone)]
pub struct EigenfunctionErrorSeries {
    pub k: usize,
    /// (h, error) for each fitted level.
    pub errors: Vec<(f64, f64)>,
    pub fitted_order: f64,
    pub cluster_mode: bool,
}

#[derive(Debug, Clone)]
pub struct StudyParams {
    pub k_max: usize,
    pub n_levels: usize,
    pub base_resolution: usize,
    pub assembly: AssemblyParams,
    pub solver: SolverMode,
}

pub fn base_mesh(domain: Domain, resolution: usize) -> Result<Mesh> {
    match domain {
        Domain::Interval { a, b } => interval_mesh(a, b, resolution),
        Domain::Square { half_width } => square_mesh(half_width, resolution),
        Domain::LShape => lshape_mesh(resolution),
        Domain::Disk { .. } => disk_mesh(resolution),
        Domain::Custom => Err(Error::InvalidArgument(
            "cannot build a study mesh for a custom domain".into(),
        )),
    }
}

/// Prolong interior-dof coefficients from a mesh to its refinement, exactly
/// through the recorded vertex lineage.
pub fn prolong(coarse: &Mesh, fine: &Mesh, coeffs: &[f64]) -> Vec<f64> {
    let cmap = DofMap::new(coarse);
    let fmap = DofMap::new(fine);
    let cval = |v: usize| cmap.dof(v).map(|d| coeffs[d]).unwrap_or(0.0);
    let mut out = vec![0.0; fmap.n_dofs()];
    for (d, slot) in out.iter_mut().enumerate() {
        let v = fmap.vertex(d);
        *slot = match fine.vertex_parents()[v] {
            VertexParent::Coarse(i) => cval(i),
            VertexParent::EdgeMidpoint(i, j) => 0.5 * (cval(i) + cval(j)),
        };
    }
    out
}

/// Run a nested refinement study: solve the lowest `k_max` eigenpairs on each
/// level, fixing signs against the prolonged next-coarser eigenvector.
pub fn run_study(domain: Domain, s: FracOrder, params: &StudyParams) -> Result<RefinementStudy> {
    if params.n_levels < 3 {
        return Err(Error::InvalidArgument(
            "a study needs at least 3 levels (the model has 3 parameters)".into(),
        ));
    }
    if params.k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be >= 1".into()));
    }
    let mut meshes: Vec<Arc<Mesh>> = vec![Arc::new(base_mesh(domain, params.base_resolution)?)];
    for _ in 1..params.n_levels {
        let next = refine_uniform(meshes.last().unwrap());
        meshes.push(Arc::new(next));
    }
    if meshes[0].interior_dofs().len() < params.k_max {
        return Err(Error::InvalidArgument(format!(
            "coarsest mesh has {} interior dofs, fewer than k_max = {}",
            meshes[0].interior_dofs().len(),
            params.k_max
        )));
    }

    let mut levels: Vec<StudyLevel> = Vec::with_capacity(params.n_levels);
    for (li, mesh) in meshes.iter().enumerate() {
        let k = assemble_stiffness(mesh, s, &params.assembly)?;
        let m = assemble_mass(mesh)?;
        let mut spectrum = solve_lowest(&k, &m, params.k_max, params.solver)?;
        if li == 0 {
            for pair in spectrum.pairs.iter_mut() {
                let (imax, vmax) = pair
                    .coeffs
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                    .map(|(i, v)| (i, *v))
                    .unwrap();
                let _ = imax;
                if vmax < 0.0 {
                    for c in pair.coeffs.iter_mut() {
                        *c = -*c;
                    }
                }
            }
        } else {
            let prevl = &levels[li - 1];
            for (ki, pair) in spectrum.pairs.iter_mut().enumerate() {
                let reference = prolong(&prevl.mesh, mesh, &prevl.spectrum.pairs[ki].coeffs);
                let (fixed, _ambiguous) = fix_sign(pair, &m, &reference);
                *pair = fixed;
            }
        }
        levels.push(StudyLevel { mesh: Arc::clone(mesh), h_max: mesh.h_max(), spectrum });
    }
    Ok(RefinementStudy {
        domain,
        s,
        levels,
        reference_level: params.n_levels - 1,
    })
}

impl RefinementStudy {
    pub fn hs(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.h_max).collect()
    }

    pub fn lambdas(&self, k: usize) -> Vec<f64> {
        self.levels
            .iter()
            .map(|l| l.spectrum.pairs[k - 1].lambda)
            .collect()
    }
}

/// Closed-form order/extrapolation seed from three successive halvings.
pub fn three_point_order(l_coarse: f64, l_mid: f64, l_fine: f64) -> Result<(f64, f64)> {
    let d1 = l_coarse - l_mid;
    let d2 = l_mid - l_fine;
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::StalledConvergence(
            "equal consecutive eigenvalues".into(),
        ));
    }
    let ratio = d1 / d2;
    if ratio <= 0.0 {
        return Err(Error::StalledConvergence(
            "sign-inconsistent eigenvalue differences".into(),
        ));
    }
    let alpha = ratio.log2();
    let den = d1 - d2;
    if den == 0.0 {
        return Err(Error::StalledConvergence("degenerate extrapolation".into()));
    }
    let lambda_ext = l_fine - d2 * d2 / den;
    Ok((alpha, lambda_ext))
}

/// Gauss-Newton fit of `(lambda_ext, C, alpha)` minimizing
/// `sum (lambda_i - lambda_ext - C h_i^alpha)^2`, seeded by the three-point
/// closed form on the three finest levels.
pub fn fit_order(hs: &[f64], lambdas: &[f64]) -> Result<OrderFit> {
    let n = hs.len();
    if n < 3 || lambdas.len() != n {
        return Err(Error::InvalidArgument(
            "need at least 3 (h, lambda) points".into(),
        ));
    }
    for w in hs.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidArgument("hs must be strictly decreasing".into()));
        }
    }

    let (alpha0, lext0) = three_point_order(lambdas[n - 3], lambdas[n - 2], lambdas[n - 1])
        .unwrap_or((1.0, lambdas[n - 1]));
    let c0 = (lambdas[n - 3] - lext0) / hs[n - 3].powf(alpha0);
    let mut p = [lext0, c0, alpha0];

    let ssr = |p: &[f64; 3]| -> f64 {
        hs.iter()
            .zip(lambdas)
            .map(|(&h, &l)| {
                let r = l - p[0] - p[1] * h.powf(p[2]);
                r * r
            })
            .sum()
    };

    let mut converged = false;
    for _ in 0..100 {
        // normal equations of the Gauss-Newton step
        let mut jtj = DMatrix::<f64>::zeros(3, 3);
        let mut jtr = DVector::<f64>::zeros(3);
        for (&h, &l) in hs.iter().zip(lambdas) {
            let ha = h.powf(p[2]);
            let r = l - p[0] - p[1] * ha;
            let grad = [-1.0, -ha, -p[1] * ha * h.ln()];
            for a in 0..3 {
                for b in 0..3 {
                    jtj[(a, b)] += grad[a] * grad[b];
                }
                jtr[a] += grad[a] * r;
            }
        }
        let step = match jtj.lu().solve(&jtr) {
            Some(s) => s,
            None => break,
        };
        // line search with halving against the residual
        let base = ssr(&p);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..25 {
            let cand = [p[0] - t * step[0], p[1] - t * step[1], p[2] - t * step[2]];
            if cand[2].is_finite() && ssr(&cand) <= base {
                p = cand;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if (t * step[0]).abs().max((t * step[1]).abs()).max((t * step[2]).abs()) < 1e-12 {
            converged = true;
            break;
        }
    }

    let rms = (ssr(&p) / n as f64).sqrt();
    if !converged && rms > 1e-10 * lambdas[n - 1].abs() {
        let (fa, fl) = three_point_order(lambdas[n - 3], lambdas[n - 2], lambdas[n - 1])?;
        return Err(Error::FitDidNotConverge { fallback_alpha: fa, fallback_lambda: fl });
    }
    Ok(OrderFit { lambda_ext: p[0], c: p[1], alpha: p[2], rms_residual: rms })
}

fn mass_inner(m: &SymmetricMatrix, a: &[f64], b: &[f64]) -> f64 {
    m.matvec(a).iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L2 errors of the k-th eigenfunction (1-based) against the reference level,
/// with the fitted log-log order. The two finest levels are reference-only.
pub fn eigenfunction_error_series(study: &RefinementStudy, k: usize) -> Result<EigenfunctionErrorSeries> {
    let nl = study.levels.len();
    if nl < 4 {
        return Err(Error::InvalidArgument(
            "study needs a reference at least 2 refinements past the fitted levels".into(),
        ));
    }
    let fit_levels = nl - 2;
    let refl = &study.levels[study.reference_level];
    let mref = assemble_mass(&refl.mesh)?;
    let uref = &refl.spectrum.pairs[k - 1].coeffs;

    // cluster of k at the reference level
    let cluster: Vec<usize> = refl
        .spectrum
        .multiplicity_clusters
        .iter()
        .find(|c| c.contains(&(k - 1)))
        .cloned()
        .unwrap_or_else(|| vec![k - 1]);
    let cluster_mode = cluster.len() > 1;

    let mut errors = Vec::with_capacity(fit_levels);
    for li in 0..fit_levels {
        // prolong the coarse eigenfunctions of the cluster to the reference
        let mut span: Vec<Vec<f64>> = Vec::new();
        for &kc in &cluster {
            let mut v = study.levels[li].spectrum.pairs[kc].coeffs.clone();
            for step in li..study.reference_level {
                v = prolong(&study.levels[step].mesh, &study.levels[step + 1].mesh, &v);
            }
            span.push(v);
        }
        let err = if cluster_mode {
            // best M-projection of u_ref onto the prolonged cluster span
            let mdim = span.len();
            let mut gram = DMatrix::<f64>::zeros(mdim, mdim);
            let mut rhs = DVector::<f64>::zeros(mdim);
            for a in 0..mdim {
                for b in 0..mdim {
                    gram[(a, b)] = mass_inner(&mref, &span[a], &span[b]);
                }
                rhs[a] = mass_inner(&mref, &span[a], uref);
            }
            let coef = gram
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Factorization("singular cluster Gram matrix".into()))?;
            let mut diff = uref.clone();
            for (a, va) in span.iter().enumerate() {
                for (d, x) in diff.iter_mut().zip(va) {
                    *d -= coef[a] * x;
                }
            }
            mass_inner(&mref, &diff, &diff).sqrt()
        } else {
            let diff: Vec<f64> = span[0].iter().zip(uref).map(|(a, b)| a - b).collect();
            mass_inner(&mref, &diff, &diff).sqrt()
        };
        errors.push((study.levels[li].h_max, err));
    }

    // log-log least squares for the order
    let xs: Vec<f64> = errors.iter().map(|(h, _)| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|(_, e)| e.ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - xm) * (y - ym);
        den += (x - xm) * (x - xm);
    }
    let fitted_order = num / den;

    Ok(EigenfunctionErrorSeries { k, errors, fitted_order, cluster_mode })
}

/// Convenience accessor used by tests: spectra of a study level.
pub fn level_spectrum(study: &RefinementStudy, level: usize) -> &Spectrum {
    &study.levels[level].spectrum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_exact_models() {
        let h = [0.5, 0.25, 0.125];
        let l: Vec<f64> = h.iter().map(|h| 1.0 + h).collect();
        let (a, le) = three_point_order(l[0], l[1], l[2]).unwrap();
        assert!((a - 1.0).abs() < 1e-12);
        assert!((le - 1.0).abs() < 1e-12);

        let l: Vec<f64> = h.iter().map(|h| 1.0 + h.sqrt()).collect();
        let (a, _) = three_point_order(l[0], l[1], l[2]).unwrap();
        assert!((a - 0.5).abs() < 1e-12);

        assert!(three_point_order(1.0, 1.0, 1.0).is_err());
        assert!(three_point_order(1.2, 1.0, 1.1).is_err());
    }

    #[test]
    fn fit_recovers_exact_models() {
        let hs: Vec<f64> = (1..=6).map(|k| 0.5f64.powi(k)).collect();
        let ls: Vec<f64> = hs.iter().map(|h| 2.0 + 0.7 * h).collect();
        let f = fit_order(&hs, &ls).unwrap();
        assert!((f.lambda_ext - 2.0).abs() < 1e-8);
        assert!((f.c - 0.7).abs() < 1e-8);
        assert!((f.alpha - 1.0).abs() < 1e-8);

        let ls: Vec<f64> = hs.iter().map(|h| 5.0 + 3.0 * h.powf(0.55)).collect();
        let f = fit_order(&hs, &ls).unwrap();
        assert!((f.alpha - 0.55).abs() < 1e-6);
        assert!((f.lambda_ext - 5.0).abs() < 1e-6);
    }

    #[test]
    fn fit_and_three_point_agree_on_exact_data() {
        let hs: Vec<f64> = (1..=5).map(|k| 0.5f64.powi(k)).collect();
        let ls: Vec<f64> = hs.iter().map(|h| 1.3 + 0.4 * h.powf(0.8)).collect();
        let f = fit_order(&hs, &ls).unwrap();
        let (a3, _) = three_point_order(ls[2], ls[3], ls[4]).unwrap();
        assert!((f.alpha - a3).abs() < 1e-8);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_order(&[0.5, 0.25], &[1.0, 1.0]).is_err());
        assert!(fit_order(&[0.5, 0.6, 0.25], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn prolongation_is_exact_on_nested_hats() {
        let coarse = Arc::new(interval_mesh(-1.0, 1.0, 4).unwrap());
        let fine = Arc::new(refine_uniform(&coarse));
        // function: hat at the middle coarse vertex
        let cmap = DofMap::new(&coarse);
        let mut v = vec![0.0; cmap.n_dofs()];
        v[1] = 1.0;
        let vf = prolong(&coarse, &fine, &v);
        // restriction back at coarse vertices must match
        let fmap = DofMap::new(&fine);
        for d in 0..cmap.n_dofs() {
            let vtx = cmap.vertex(d);
            let fd = fmap.dof(vtx).unwrap();
            assert_eq!(vf[fd], v[d]);
        }
    }
}
