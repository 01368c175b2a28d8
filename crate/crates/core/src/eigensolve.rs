//! Generalized symmetric eigenproblem `K u = lambda M u` for the lowest
//! eigenpairs, with L2 normalization and sign fixing.
//!
//! The primary path reduces through a Cholesky factorization of `M` and a
//! dense symmetric decomposition; a shift-invert subspace iteration backs it
//! for large orders and serves as an independent cross-check.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::assembly::SymmetricMatrix;
use crate::{Error, Result};

/// One normalized eigenpair: `coeffs' M coeffs = 1`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub coeffs: Vec<f64>,
    /// 1-based position in the ascending spectrum.
    pub index: usize,
}

/// Ascending eigenpairs with multiplicity clusters (relative gap < 1e-6).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub pairs: Vec<EigenPair>,
    pub multiplicity_clusters: Vec<Vec<usize>>,
}

/// Relative gap below which neighboring eigenvalues are treated as one
/// numerically split multiple eigenvalue.
pub const CLUSTER_REL_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    Dense,
    ShiftInvert,
    Auto,
}

/// Order above which `Auto` switches to the iterative path.
pub const DENSE_ORDER_LIMIT: usize = 3000;

fn cluster_indices(lambdas: &[f64]) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (k, &l) in lambdas.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) => {
                let prev = lambdas[*c.last().unwrap()];
                if (l - prev).abs() <= CLUSTER_REL_GAP * l.abs().max(prev.abs()) {
                    c.push(k);
                } else {
                    clusters.push(vec![k]);
                }
            }
            None => clusters.push(vec![k]),
        }
    }
    clusters
}

/// Solve for the `count` lowest eigenpairs, M-orthonormal, ascending.
pub fn solve_lowest(
    k: &SymmetricMatrix,
    m: &SymmetricMatrix,
    count: usize,
    mode: SolverMode,
) -> Result<Spectrum> {
    let n = k.order();
    if n == 0 {
        return Err(Error::NoInteriorDofs);
    }
    if m.order() != n {
        return Err(Error::InvalidArgument("K and M orders differ".into()));
    }
    if count == 0 || count > n {
        return Err(Error::InvalidArgument(format!(
            "count {count} outside 1..={n}"
        )));
    }
    let use_dense = match mode {
        SolverMode::Dense => true,
        SolverMode::ShiftInvert => false,
        SolverMode::Auto => n <= DENSE_ORDER_LIMIT,
    };
    let (lambdas, vectors) = if use_dense {
        dense_path(k, m, count)?
    } else {
        shift_invert_path(k, m, count)?
    };

    let mdense = m.to_dense_matrix();
    let mut pairs = Vec::with_capacity(count);
    for (i, (&l, v)) in lambdas.iter().zip(&vectors).enumerate() {
        if !(l > 0.0) {
            return Err(Error::Factorization(format!(
                "nonpositive eigenvalue {l} at position {}",
                i + 1
            )));
        }
        let vv = DVector::from_column_slice(v);
        let norm2 = (&mdense * &vv).dot(&vv);
        let scale = norm2.sqrt();
        pairs.push(EigenPair {
            lambda: l,
            coeffs: v.iter().map(|x| x / scale).collect(),
            index: i + 1,
        });
    }
    let ls: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
    Ok(Spectrum { pairs, multiplicity_clusters: cluster_indices(&ls) })
}

fn dense_path(
    k: &SymmetricMatrix,
    m: &SymmetricMatrix,
    count: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let kd = k.to_dense_matrix();
    let md = m.to_dense_matrix();
    let chol: Cholesky<f64, nalgebra::Dyn> = Cholesky::new(md)
        .ok_or_else(|| Error::Factorization("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // A = L^{-1} K L^{-T}, symmetrized against roundoff
    let x = l.solve_lower_triangular(&kd).ok_or_else(|| {
        Error::Factorization("singular Cholesky factor".into())
    })?;
    let xt = x.transpose();
    let a = l
        .solve_lower_triangular(&xt)
        .ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
    let a = (&a + a.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(a);
    let n = k.order();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let mut lambdas = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    let lt = l.transpose();
    for &idx in order.iter().take(count) {
        lambdas.push(eig.eigenvalues[idx]);
        let y = eig.eigenvectors.column(idx).into_owned();
        let v = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
        vectors.push(v.iter().copied().collect());
    }
    Ok((lambdas, vectors))
}

/// Shift-invert subspace iteration at shift zero with Rayleigh-Ritz.
fn shift_invert_path(
    k: &SymmetricMatrix,
    m: &SymmetricMatrix,
    count: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = k.order();
    let kd = k.to_dense_matrix();
    let chol = Cholesky::new(kd)
        .ok_or_else(|| Error::Factorization("stiffness matrix is not positive definite".into()))?;
    let p = (count + 4).min(n);
    // deterministic start basis
    let mut basis: Vec<DVector<f64>> = (0..p)
        .map(|j| {
            DVector::from_fn(n, |i, _| {
                let t = ((i + 1) * (j + 1)) as f64;
                (t * 0.618_033_988_749_895).sin() + if i == j { 1.0 } else { 0.0 }
            })
        })
        .collect();
    let m_apply = |v: &DVector<f64>| DVector::from_vec(m.matvec(v.as_slice()));
    let mut prev = vec![f64::INFINITY; count];
    for _ in 0..500 {
        // Y = K^{-1} M X
        for b in basis.iter_mut() {
            *b = chol.solve(&m_apply(b));
        }
        // M-orthonormalize (modified Gram-Schmidt)
        for i in 0..p {
            for j in 0..i {
                let mj = m_apply(&basis[j]);
                let c = basis[i].dot(&mj);
                let bj = basis[j].clone();
                basis[i] -= bj * c;
            }
            let nm = basis[i].dot(&m_apply(&basis[i])).sqrt();
            if nm <= 0.0 {
                return Err(Error::Factorization("subspace collapsed".into()));
            }
            basis[i] /= nm;
        }
        // Rayleigh-Ritz on the subspace
        let mut kp = DMatrix::zeros(p, p);
        for i in 0..p {
            let kv = DVector::from_vec(k.matvec(basis[i].as_slice()));
            for j in 0..p {
                kp[(j, i)] = basis[j].dot(&kv);
            }
        }
        let kp = (&kp + kp.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(kp);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
        let rotated: Vec<DVector<f64>> = order
            .iter()
            .map(|&c| {
                let mut v = DVector::zeros(n);
                for r in 0..p {
                    v += &basis[r] * eig.eigenvectors[(r, c)];
                }
                v
            })
            .collect();
        basis = rotated;
        let current: Vec<f64> = order.iter().take(count).map(|&c| eig.eigenvalues[c]).collect();
        let done = current
            .iter()
            .zip(&prev)
            .all(|(a, b)| (a - b).abs() <= 1e-13 * a.abs().max(1.0));
        prev = current.clone();
        if done {
            return Ok((
                current,
                basis.iter().take(count).map(|v| v.iter().copied().collect()).collect(),
            ));
        }
    }
    Ok((
        prev,
        basis.iter().take(count).map(|v| v.iter().copied().collect()).collect(),
    ))
}

/// Flip the sign of the pair so its M-inner product with `reference` is
/// nonnegative. A product within 1e-14 of zero is ambiguous; the pair is
/// returned unflipped with the flag set.
pub fn fix_sign(pair: &EigenPair, m: &SymmetricMatrix, reference: &[f64]) -> (EigenPair, bool) {
    let mv = m.matvec(&pair.coeffs);
    let dot: f64 = mv.iter().zip(reference).map(|(a, b)| a * b).sum();
    if dot.abs() < 1e-14 {
        return (pair.clone(), true);
    }
    if dot >= 0.0 {
        (pair.clone(), false)
    } else {
        let mut p = pair.clone();
        for c in p.coeffs.iter_mut() {
            *c = -*c;
        }
        (p, false)
    }
}

/// Rayleigh quotient `v' K v / v' M v`.
pub fn rayleigh_quotient(k: &SymmetricMatrix, m: &SymmetricMatrix, v: &[f64]) -> Result<f64> {
    let norm2: f64 = v.iter().map(|x| x * x).sum();
    if norm2 == 0.0 {
        return Err(Error::InvalidArgument("zero vector".into()));
    }
    let kv = k.matvec(v);
    let mv = m.matvec(v);
    let num: f64 = kv.iter().zip(v).map(|(a, b)| a * b).sum();
    let den: f64 = mv.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(num / den)
}

/// Relative residual `||K u - lambda M u|| / ||K u||`.
pub fn residual_norm(k: &SymmetricMatrix, m: &SymmetricMatrix, pair: &EigenPair) -> f64 {
    let ku = k.matvec(&pair.coeffs);
    let mu = m.matvec(&pair.coeffs);
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in ku.iter().zip(&mu) {
        let r = a - pair.lambda * b;
        num += r * r;
        den += a * a;
    }
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_matrix(vals: &[f64]) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::dense_zeros(vals.len());
        for (i, v) in vals.iter().enumerate() {
            m.add(i, i, *v);
        }
        m
    }

    #[test]
    fn identity_form_all_ones() {
        let k = diag_matrix(&[1.0; 5]);
        let m = diag_matrix(&[1.0; 5]);
        let s = solve_lowest(&k, &m, 5, SolverMode::Dense).unwrap();
        for p in &s.pairs {
            assert!((p.lambda - 1.0).abs() < 1e-12);
        }
        assert_eq!(s.multiplicity_clusters.len(), 1);
        assert_eq!(s.multiplicity_clusters[0].len(), 5);
    }

    #[test]
    fn one_by_one_system() {
        let k = diag_matrix(&[3.0]);
        let m = diag_matrix(&[4.0]);
        let s = solve_lowest(&k, &m, 1, SolverMode::Dense).unwrap();
        assert!((s.pairs[0].lambda - 0.75).abs() < 1e-14);
        assert!((s.pairs[0].coeffs[0].abs() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn m_orthonormality_on_generic_system() {
        // small SPD pencil
        let n = 12;
        let mut k = SymmetricMatrix::dense_zeros(n);
        let mut m = SymmetricMatrix::dense_zeros(n);
        for i in 0..n {
            k.add(i, i, 2.0 + i as f64);
            m.add(i, i, 1.0 + 0.1 * i as f64);
            if i + 1 < n {
                k.add(i + 1, i, -1.0);
                m.add(i + 1, i, 0.05);
            }
        }
        let s = solve_lowest(&k, &m, 6, SolverMode::Dense).unwrap();
        let md = m.to_dense_matrix();
        for a in 0..6 {
            for b in 0..6 {
                let va = DVector::from_column_slice(&s.pairs[a].coeffs);
                let vb = DVector::from_column_slice(&s.pairs[b].coeffs);
                let dot = (&md * &vb).dot(&va);
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "({a},{b}): {dot}");
            }
        }
        // ascending
        for wnd in s.pairs.windows(2) {
            assert!(wnd[0].lambda <= wnd[1].lambda);
        }
    }

    #[test]
    fn dense_and_iterative_agree() {
        let n = 40;
        let mut k = SymmetricMatrix::dense_zeros(n);
        let mut m = SymmetricMatrix::dense_zeros(n);
        for i in 0..n {
            k.add(i, i, 2.0);
            m.add(i, i, 4.0 / 6.0);
            if i + 1 < n {
                k.add(i + 1, i, -1.0);
                m.add(i + 1, i, 1.0 / 6.0);
            }
        }
        let d = solve_lowest(&k, &m, 4, SolverMode::Dense).unwrap();
        let it = solve_lowest(&k, &m, 4, SolverMode::ShiftInvert).unwrap();
        for (a, b) in d.pairs.iter().zip(&it.pairs) {
            assert!(
                ((a.lambda - b.lambda) / a.lambda).abs() < 1e-9,
                "{} vs {}",
                a.lambda,
                b.lambda
            );
        }
    }

    #[test]
    fn fix_sign_examples() {
        let m = diag_matrix(&[1.0, 1.0]);
        let p = EigenPair { lambda: 1.0, coeffs: vec![0.6, 0.8], index: 1 };
        let (same, amb) = fix_sign(&p, &m, &p.coeffs.clone());
        assert!(!amb);
        assert_eq!(same.coeffs, p.coeffs);
        let neg: Vec<f64> = p.coeffs.iter().map(|x| -x).collect();
        let (flip, amb) = fix_sign(&p, &m, &neg);
        assert!(!amb);
        assert_eq!(flip.coeffs, neg);
        let (_, amb) = fix_sign(&p, &m, &[0.8, -0.6]);
        assert!(amb);
    }

    #[test]
    fn rayleigh_and_residual() {
        let n = 10;
        let mut k = SymmetricMatrix::dense_zeros(n);
        let mut m = SymmetricMatrix::dense_zeros(n);
        for i in 0..n {
            k.add(i, i, 2.0);
            m.add(i, i, 1.0);
            if i + 1 < n {
                k.add(i + 1, i, -1.0);
            }
        }
        let s = solve_lowest(&k, &m, 3, SolverMode::Dense).unwrap();
        let p0 = &s.pairs[0];
        let rq = rayleigh_quotient(&k, &m, &p0.coeffs).unwrap();
        assert!(((rq - p0.lambda) / p0.lambda).abs() < 1e-12);
        // any vector sits above the bottom of the spectrum
        let v: Vec<f64> = (0..n).map(|i| (i as f64 + 0.3).cos()).collect();
        let rq2 = rayleigh_quotient(&k, &m, &v).unwrap();
        assert!(rq2 >= p0.lambda * (1.0 - 1e-12));
        // sum of the first two eigenvectors
        let p1 = &s.pairs[1];
        let sum: Vec<f64> = p0.coeffs.iter().zip(&p1.coeffs).map(|(a, b)| a + b).collect();
        let rq3 = rayleigh_quotient(&k, &m, &sum).unwrap();
        assert!(((rq3 - (p0.lambda + p1.lambda) / 2.0) / rq3).abs() < 1e-12);

        assert!(residual_norm(&k, &m, p0) < 1e-10);
        let bad = EigenPair { lambda: p0.lambda * 1.01, coeffs: p0.coeffs.clone(), index: 1 };
        assert!(residual_norm(&k, &m, &bad) > 1e-4);
        assert!(rayleigh_quotient(&k, &m, &vec![0.0; n]).is_err());
    }

    #[test]
    fn invalid_inputs() {
        let k = diag_matrix(&[1.0, 2.0]);
        let m = diag_matrix(&[1.0, 1.0]);
        assert!(solve_lowest(&k, &m, 0, SolverMode::Dense).is_err());
        assert!(solve_lowest(&k, &m, 3, SolverMode::Dense).is_err());
        let m3 = diag_matrix(&[1.0, 1.0, 1.0]);
        assert!(solve_lowest(&k, &m3, 1, SolverMode::Dense).is_err());
    }
}
