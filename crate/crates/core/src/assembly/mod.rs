//! Assembly of the nonlocal stiffness matrix and the L2 mass matrix over the
//! conforming piecewise-linear space on interior vertices.
//!
//! The stiffness entry for hat functions `phi_i, phi_j` is
//! `C(n,s) * [ sum over domain pairs + 2 * domain x annulus + 2 * int phi_i
//! phi_j omega ]` where `omega` is the closed-form weight of the ball
//! complement. Touching pairs use the Duffy rules of [`crate::quadrature`];
//! disjoint pairs use tensor Gauss rules selected by centroid distance.
//! Contributions are accumulated per element row and merged in row order, so
//! results are bit-stable for any thread count; the deterministic flag
//! additionally forces fully sequential execution.

mod annulus;

pub use annulus::{build_annulus, Annulus};

use rayon::prelude::*;

use crate::kernel::normalization_constant;
use crate::mesh::{Mesh, PairTag};
use crate::quadrature::{complement_weight, gauss_simplex, singular_pair_rule, PairQuadRule, QuadRule};
use crate::{Error, FracOrder, Result};

/// Symmetric matrix with the lower triangle authoritative.
#[derive(Debug, Clone)]
pub enum SymmetricMatrix {
    Dense { order: usize, lower: Vec<f64> },
    Sparse { order: usize, rows: Vec<Vec<(usize, f64)>> },
}

impl SymmetricMatrix {
    pub fn dense_zeros(order: usize) -> Self {
        SymmetricMatrix::Dense { order, lower: vec![0.0; order * (order + 1) / 2] }
    }

    pub fn sparse_zeros(order: usize) -> Self {
        SymmetricMatrix::Sparse { order, rows: vec![Vec::new(); order] }
    }

    pub fn order(&self) -> usize {
        match self {
            SymmetricMatrix::Dense { order, .. } | SymmetricMatrix::Sparse { order, .. } => *order,
        }
    }

    /// Add `v` at `(i, j)`; the mirrored entry is implied.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        match self {
            SymmetricMatrix::Dense { lower, .. } => lower[r * (r + 1) / 2 + c] += v,
            SymmetricMatrix::Sparse { rows, .. } => {
                let row = &mut rows[r];
                match row.iter_mut().find(|(cc, _)| *cc == c) {
                    Some((_, val)) => *val += v,
                    None => {
                        row.push((c, v));
                        row.sort_unstable_by_key(|(cc, _)| *cc);
                    }
                }
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        match self {
            SymmetricMatrix::Dense { lower, .. } => lower[r * (r + 1) / 2 + c],
            SymmetricMatrix::Sparse { rows, .. } => rows[r]
                .iter()
                .find(|(cc, _)| *cc == c)
                .map(|(_, v)| *v)
                .unwrap_or(0.0),
        }
    }

    pub fn to_dense_matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = self.order();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.get(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.order();
        let mut y = vec![0.0; n];
        match self {
            SymmetricMatrix::Dense { lower, .. } => {
                for i in 0..n {
                    for j in 0..=i {
                        let v = lower[i * (i + 1) / 2 + j];
                        y[i] += v * x[j];
                        if i != j {
                            y[j] += v * x[i];
                        }
                    }
                }
            }
            SymmetricMatrix::Sparse { rows, .. } => {
                for (i, row) in rows.iter().enumerate() {
                    for &(j, v) in row {
                        y[i] += v * x[j];
                        if i != j {
                            y[j] += v * x[i];
                        }
                    }
                }
            }
        }
        y
    }

    /// Plain-text coordinate export, lower triangle: `row col value` lines.
    pub fn export_coo<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        let n = self.order();
        for i in 0..n {
            for j in 0..=i {
                let v = self.get(i, j);
                if v != 0.0 {
                    writeln!(out, "{i} {j} {v:.16e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Interior-vertex indexing: maps vertex ids to contiguous dof indices.
#[derive(Debug, Clone)]
pub struct DofMap {
    vertex_to_dof: Vec<Option<usize>>,
    dof_to_vertex: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mut vertex_to_dof = vec![None; mesh.n_vertices()];
        let dof_to_vertex = mesh.interior_dofs().to_vec();
        for (d, &v) in dof_to_vertex.iter().enumerate() {
            vertex_to_dof[v] = Some(d);
        }
        DofMap { vertex_to_dof, dof_to_vertex }
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        self.vertex_to_dof[vertex]
    }

    pub fn vertex(&self, dof: usize) -> usize {
        self.dof_to_vertex[dof]
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_to_vertex.len()
    }
}

/// Value of the global hat function of `vertex` at point `x`, evaluated on
/// element `e` (zero if the vertex does not belong to that element).
pub fn hat_value(mesh: &Mesh, vertex: usize, e: usize, x: &[f64; 2]) -> f64 {
    let el = mesh.element(e);
    let Some(slot) = el.iter().position(|&v| v == vertex) else {
        return 0.0;
    };
    if mesh.dim() == 1 {
        let a = mesh.vertex(el[0])[0];
        let b = mesh.vertex(el[1])[0];
        let t = (x[0] - a) / (b - a);
        if slot == 0 {
            1.0 - t
        } else {
            t
        }
    } else {
        let p0 = mesh.vertex(el[0]);
        let p1 = mesh.vertex(el[1]);
        let p2 = mesh.vertex(el[2]);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
        let l1 = ((x[0] - p0[0]) * (p2[1] - p0[1]) - (x[1] - p0[1]) * (p2[0] - p0[0])) / det;
        let l2 = ((p1[0] - p0[0]) * (x[1] - p0[1]) - (p1[1] - p0[1]) * (x[0] - p0[0])) / det;
        match slot {
            0 => 1.0 - l1 - l2,
            1 => l1,
            _ => l2,
        }
    }
}

/// Quadrature selection for the stiffness assembly.
#[derive(Debug, Clone)]
pub struct AssemblyParams {
    /// Radial/transverse order of the Duffy rules on touching pairs.
    pub touching_order: usize,
    /// Tensor Gauss degree for disjoint pairs closer than the threshold.
    pub near_order: usize,
    /// Tensor Gauss degree for far pairs.
    pub far_order: usize,
    /// Near/far split: centroid distance below `threshold * max diameter`.
    pub near_threshold: f64,
    /// Gauss degree for the complement-weight term.
    pub complement_order: usize,
    /// Force fully sequential assembly (results are bit-stable either way).
    pub deterministic: bool,
}

impl Default for AssemblyParams {
    fn default() -> Self {
        AssemblyParams {
            touching_order: 10,
            near_order: 8,
            far_order: 5,
            near_threshold: 3.0,
            complement_order: 8,
            deterministic: false,
        }
    }
}

/// Geometry plus interior-dof slots of one integration element.
#[derive(Clone, Copy)]
struct LocalElem {
    verts: [[f64; 2]; 3],
    /// interior dof index per local vertex slot (None on boundary/annulus)
    dofs: [Option<usize>; 3],
    measure: f64,
    diameter: f64,
    centroid: [f64; 2],
}

impl LocalElem {
    fn from_mesh(mesh: &Mesh, dofmap: &DofMap, e: usize) -> Self {
        let el = mesh.element(e);
        let dim = mesh.dim();
        let mut verts = [[0.0; 2]; 3];
        let mut dofs = [None; 3];
        for k in 0..=dim {
            let p = mesh.vertex(el[k]);
            verts[k][0] = p[0];
            if dim == 2 {
                verts[k][1] = p[1];
            }
            dofs[k] = dofmap.dof(el[k]);
        }
        Self::finish(dim, verts, dofs)
    }

    fn from_coords(dim: usize, verts: [[f64; 2]; 3]) -> Self {
        Self::finish(dim, verts, [None; 3])
    }

    fn finish(dim: usize, verts: [[f64; 2]; 3], dofs: [Option<usize>; 3]) -> Self {
        let (measure, diameter, centroid);
        if dim == 1 {
            measure = (verts[1][0] - verts[0][0]).abs();
            diameter = measure;
            centroid = [(verts[0][0] + verts[1][0]) / 2.0, 0.0];
        } else {
            measure = 0.5
                * ((verts[1][0] - verts[0][0]) * (verts[2][1] - verts[0][1])
                    - (verts[1][1] - verts[0][1]) * (verts[2][0] - verts[0][0]))
                    .abs();
            let mut h: f64 = 0.0;
            for i in 0..3 {
                let a = verts[i];
                let b = verts[(i + 1) % 3];
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
            diameter = h;
            centroid = [
                (verts[0][0] + verts[1][0] + verts[2][0]) / 3.0,
                (verts[0][1] + verts[1][1] + verts[2][1]) / 3.0,
            ];
        }
        LocalElem { verts, dofs, measure, diameter, centroid }
    }

    /// Jacobian factor relative to the reference simplex.
    fn jac(&self, dim: usize) -> f64 {
        if dim == 1 {
            self.measure
        } else {
            2.0 * self.measure
        }
    }
}

fn shared_coord_pairs(dim: usize, a: &LocalElem, b: &LocalElem) -> Vec<(usize, usize)> {
    let nv = dim + 1;
    let mut out = Vec::new();
    for i in 0..nv {
        for j in 0..nv {
            if a.verts[i] == b.verts[j] {
                out.push((i, j));
            }
        }
    }
    out
}

/// Canonical permutation: shared slots first, remaining slots after.
fn canonical_perm(dim: usize, shared: &[usize]) -> [usize; 3] {
    let mut perm = [0usize; 3];
    let mut used = [false; 3];
    for (k, &s) in shared.iter().enumerate() {
        perm[k] = s;
        used[s] = true;
    }
    let mut next = shared.len();
    for v in 0..=dim {
        if !used[v] {
            perm[next] = v;
            next += 1;
        }
    }
    perm
}

#[inline]
fn bary(dim: usize, r: &[f64; 2]) -> [f64; 3] {
    if dim == 1 {
        [1.0 - r[0], r[0], 0.0]
    } else {
        [1.0 - r[0] - r[1], r[0], r[1]]
    }
}

#[inline]
fn kernel_pow(dim: usize, two_s: f64, x: &[f64; 2], y: &[f64; 2]) -> f64 {
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    (dx * dx + dy * dy).powf(-(dim as f64 + two_s) / 2.0)
}

struct PairRules {
    identical: PairQuadRule,
    vertex: PairQuadRule,
    edge: Option<PairQuadRule>,
    near: QuadRule,
    far: QuadRule,
}

fn make_rules(dim: usize, s: FracOrder, params: &AssemblyParams) -> Result<PairRules> {
    Ok(PairRules {
        identical: singular_pair_rule(dim, PairTag::Identical, s, params.touching_order)?,
        vertex: singular_pair_rule(dim, PairTag::VertexTouching, s, params.touching_order)?,
        edge: if dim == 2 {
            Some(singular_pair_rule(dim, PairTag::EdgeTouching, s, params.touching_order)?)
        } else {
            None
        },
        near: gauss_simplex(dim, params.near_order)?,
        far: gauss_simplex(dim, params.far_order)?,
    })
}

/// Contributions of one pair of integration elements to the stiffness form
/// (without the `C(n,s)` factor), scaled by `factor` (symmetry count), added
/// into the packed lower triangle `acc`. `annulus_side` means `b` carries no
/// test functions.
#[allow(clippy::too_many_arguments)]
fn pair_contributions(
    dim: usize,
    two_s: f64,
    a: &LocalElem,
    b: &LocalElem,
    identical: bool,
    rules: &PairRules,
    params: &AssemblyParams,
    annulus_side: bool,
    factor: f64,
    acc: &mut [f64],
) {
    let shared = if identical {
        (0..=dim).map(|k| (k, k)).collect::<Vec<_>>()
    } else {
        shared_coord_pairs(dim, a, b)
    };
    // active dofs: local slots with an interior dof on either side
    let mut active: Vec<(usize, Option<usize>, Option<usize>)> = Vec::new(); // (dof, slot_a, slot_b)
    for k in 0..=dim {
        if let Some(d) = a.dofs[k] {
            active.push((d, Some(k), None));
        }
    }
    if !annulus_side {
        for k in 0..=dim {
            if let Some(d) = b.dofs[k] {
                if let Some(entry) = active.iter_mut().find(|(dd, _, _)| *dd == d) {
                    entry.2 = Some(k);
                } else {
                    active.push((d, None, Some(k)));
                }
            }
        }
    }
    if active.is_empty() {
        return;
    }

    let jac = a.jac(dim) * b.jac(dim) * factor;

    let mut emit = |x: &[f64; 2],
                    y: &[f64; 2],
                    ba: &[f64; 3],
                    bb: &[f64; 3],
                    perm_a: &[usize; 3],
                    perm_b: &[usize; 3],
                    w: f64| {
        let kern = kernel_pow(dim, two_s, x, y);
        let mut slot_a = [0.0f64; 3];
        let mut slot_b = [0.0f64; 3];
        for c in 0..=dim {
            slot_a[perm_a[c]] = ba[c];
            slot_b[perm_b[c]] = bb[c];
        }
        let wk = w * kern * jac;
        let mut diffs = [0.0f64; 6];
        for (t, &(_, sa, sb)) in active.iter().enumerate() {
            let ux = sa.map(|k| slot_a[k]).unwrap_or(0.0);
            let uy = if annulus_side { 0.0 } else { sb.map(|k| slot_b[k]).unwrap_or(0.0) };
            diffs[t] = ux - uy;
        }
        for ti in 0..active.len() {
            let ui = diffs[ti];
            if ui == 0.0 {
                continue;
            }
            let di = active[ti].0;
            for tj in 0..=ti {
                let uj = diffs[tj];
                if uj == 0.0 {
                    continue;
                }
                let dj = active[tj].0;
                let (r, c) = if di >= dj { (di, dj) } else { (dj, di) };
                acc[r * (r + 1) / 2 + c] += wk * ui * uj;
            }
        }
    };

    let id_perm = [0usize, 1, 2];
    match (identical, shared.len()) {
        (true, _) => {
            let rule = &rules.identical;
            for (pt, w) in rule.points.iter().zip(&rule.weights) {
                let ba = bary(dim, &pt.0);
                let bb = bary(dim, &pt.1);
                let (x, y) = (phys(dim, a, &id_perm, &ba), phys(dim, b, &id_perm, &bb));
                emit(&x, &y, &ba, &bb, &id_perm, &id_perm, *w);
            }
        }
        (false, 0) => {
            let dist2 = (a.centroid[0] - b.centroid[0]).powi(2)
                + (a.centroid[1] - b.centroid[1]).powi(2);
            let cutoff = params.near_threshold * a.diameter.max(b.diameter);
            let rule = if dist2 < cutoff * cutoff { &rules.near } else { &rules.far };
            for (pa, wa) in rule.points.iter().zip(&rule.weights) {
                let ba = bary(dim, pa);
                let x = phys(dim, a, &id_perm, &ba);
                for (pb, wb) in rule.points.iter().zip(&rule.weights) {
                    let bb = bary(dim, pb);
                    let y = phys(dim, b, &id_perm, &bb);
                    emit(&x, &y, &ba, &bb, &id_perm, &id_perm, wa * wb);
                }
            }
        }
        (false, 1) => {
            let perm_a = canonical_perm(dim, &[shared[0].0]);
            let perm_b = canonical_perm(dim, &[shared[0].1]);
            let rule = &rules.vertex;
            for (pt, w) in rule.points.iter().zip(&rule.weights) {
                let ba = bary(dim, &pt.0);
                let bb = bary(dim, &pt.1);
                let (x, y) = (phys(dim, a, &perm_a, &ba), phys(dim, b, &perm_b, &bb));
                emit(&x, &y, &ba, &bb, &perm_a, &perm_b, *w);
            }
        }
        (false, 2) => {
            let perm_a = canonical_perm(dim, &[shared[0].0, shared[1].0]);
            let perm_b = canonical_perm(dim, &[shared[0].1, shared[1].1]);
            let rule = rules.edge.as_ref().expect("edge rule exists in 2D");
            for (pt, w) in rule.points.iter().zip(&rule.weights) {
                let ba = bary(dim, &pt.0);
                let bb = bary(dim, &pt.1);
                let (x, y) = (phys(dim, a, &perm_a, &ba), phys(dim, b, &perm_b, &bb));
                emit(&x, &y, &ba, &bb, &perm_a, &perm_b, *w);
            }
        }
        _ => unreachable!("classified pair"),
    }
}

#[inline]
fn phys(dim: usize, e: &LocalElem, perm: &[usize; 3], b: &[f64; 3]) -> [f64; 2] {
    let mut x = [0.0f64; 2];
    for c in 0..=dim {
        let v = e.verts[perm[c]];
        x[0] += b[c] * v[0];
        x[1] += b[c] * v[1];
    }
    x
}

/// Assemble the stiffness matrix of the nonlocal form on interior dofs.
pub fn assemble_stiffness(mesh: &Mesh, s: FracOrder, params: &AssemblyParams) -> Result<SymmetricMatrix> {
    let dim = mesh.dim();
    let dofmap = DofMap::new(mesh);
    let n = dofmap.n_dofs();
    if n == 0 {
        return Err(Error::NoInteriorDofs);
    }
    let rules = make_rules(dim, s, params)?;
    let two_s = 2.0 * s.value();
    let ne = mesh.n_elements();
    let locals: Vec<LocalElem> = (0..ne).map(|e| LocalElem::from_mesh(mesh, &dofmap, e)).collect();
    let annulus = build_annulus(mesh)?;
    let ann_locals: Vec<LocalElem> = (0..annulus.elems.len())
        .map(|k| LocalElem::from_coords(dim, annulus.elems[k]))
        .collect();

    // one task per row element; contributions go straight into packed-lower
    // accumulators (per thread in the parallel path, merged by summation)
    let tri_len = n * (n + 1) / 2;
    let row_into = |acc: &mut [f64], a: usize| {
        let ea = &locals[a];
        let a_has = ea.dofs.iter().any(|d| d.is_some());
        for b in a..ne {
            let eb = &locals[b];
            if !a_has && eb.dofs.iter().all(|d| d.is_none()) {
                continue;
            }
            let factor = if a == b { 1.0 } else { 2.0 };
            pair_contributions(dim, two_s, ea, eb, a == b, &rules, params, false, factor, acc);
        }
        if a_has {
            for eb in &ann_locals {
                pair_contributions(dim, two_s, ea, eb, false, &rules, params, true, 2.0, acc);
            }
        }
    };

    let lower: Vec<f64> = if params.deterministic {
        let mut acc = vec![0.0; tri_len];
        for a in 0..ne {
            row_into(&mut acc, a);
        }
        acc
    } else {
        (0..ne)
            .into_par_iter()
            .fold(
                || vec![0.0; tri_len],
                |mut acc, a| {
                    row_into(&mut acc, a);
                    acc
                },
            )
            .reduce(
                || vec![0.0; tri_len],
                |mut x, y| {
                    for (xi, yi) in x.iter_mut().zip(&y) {
                        *xi += yi;
                    }
                    x
                },
            )
    };
    let mut k = SymmetricMatrix::Dense { order: n, lower };

    // complement weight term: 2 * int phi_i phi_j omega over each element,
    // integrated adaptively (omega is steep near the enclosing sphere and the
    // basis products lose smoothness at the domain boundary)
    let radius = annulus.ball_radius;
    for ea in locals.iter() {
        if ea.dofs.iter().all(|d| d.is_none()) {
            continue;
        }
        let local = complement_element_term(dim, &ea.verts, radius, s, params.complement_order, 0)?;
        for (ka, da) in ea.dofs.iter().enumerate() {
            let Some(di) = da else { continue };
            for (kb, db) in ea.dofs.iter().enumerate().take(ka + 1) {
                let Some(dj) = db else { continue };
                k.add(*di, *dj, 2.0 * local[ka][kb]);
            }
        }
    }

    // normalization constant
    let c = normalization_constant(dim, s)?.value;
    match &mut k {
        SymmetricMatrix::Dense { lower, .. } => {
            for v in lower.iter_mut() {
                *v *= c;
            }
        }
        SymmetricMatrix::Sparse { rows, .. } => {
            for row in rows {
                for (_, v) in row {
                    *v *= c;
                }
            }
        }
    }
    Ok(k)
}

/// Barycentric coordinates of a physical point relative to an element.
fn bary_phys(dim: usize, verts: &[[f64; 2]; 3], x: &[f64; 2]) -> [f64; 3] {
    if dim == 1 {
        let t = (x[0] - verts[0][0]) / (verts[1][0] - verts[0][0]);
        [1.0 - t, t, 0.0]
    } else {
        let det = (verts[1][0] - verts[0][0]) * (verts[2][1] - verts[0][1])
            - (verts[1][1] - verts[0][1]) * (verts[2][0] - verts[0][0]);
        let l1 = ((x[0] - verts[0][0]) * (verts[2][1] - verts[0][1])
            - (x[1] - verts[0][1]) * (verts[2][0] - verts[0][0]))
            / det;
        let l2 = ((verts[1][0] - verts[0][0]) * (x[1] - verts[0][1])
            - (verts[1][1] - verts[0][1]) * (x[0] - verts[0][0]))
            / det;
        [1.0 - l1 - l2, l1, l2]
    }
}

/// `int_T phi_a phi_b omega` for all slot pairs of the parent element, by
/// adaptive bisection with escalating Gauss orders on each cell.
fn complement_element_term(
    dim: usize,
    parent: &[[f64; 2]; 3],
    radius: f64,
    s: FracOrder,
    order: usize,
    depth: usize,
) -> Result<[[f64; 3]; 3]> {
    fn eval_on(
        dim: usize,
        parent: &[[f64; 2]; 3],
        cell: &[[f64; 2]; 3],
        radius: f64,
        s: FracOrder,
        order: usize,
    ) -> Result<[[f64; 3]; 3]> {
        let rule = gauss_simplex(dim, order)?;
        let meas = LocalElem::from_coords(dim, *cell).measure;
        let scale = if dim == 1 { meas } else { 2.0 * meas };
        let mut out = [[0.0; 3]; 3];
        let id_perm = [0usize, 1, 2];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let bc = bary(dim, p);
            let cell_local = LocalElem::from_coords(dim, *cell);
            let x = phys(dim, &cell_local, &id_perm, &bc);
            let bp = bary_phys(dim, parent, &x);
            let omega = complement_weight(&x[..dim], radius, dim, s)?;
            let wj = w * scale * omega;
            for a in 0..=dim {
                for b in 0..=a {
                    out[a][b] += wj * bp[a] * bp[b];
                }
            }
        }
        Ok(out)
    }

    fn bisect(dim: usize, cell: &[[f64; 2]; 3]) -> Vec<[[f64; 2]; 3]> {
        if dim == 1 {
            let m = [(cell[0][0] + cell[1][0]) / 2.0, 0.0];
            vec![[cell[0], m, [0.0; 2]], [m, cell[1], [0.0; 2]]]
        } else {
            let mid =
                |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let (m01, m12, m20) = (mid(cell[0], cell[1]), mid(cell[1], cell[2]), mid(cell[2], cell[0]));
            vec![
                [cell[0], m01, m20],
                [cell[1], m12, m01],
                [cell[2], m20, m12],
                [m01, m12, m20],
            ]
        }
    }

    fn go(
        dim: usize,
        parent: &[[f64; 2]; 3],
        cell: &[[f64; 2]; 3],
        radius: f64,
        s: FracOrder,
        order: usize,
        depth: usize,
    ) -> Result<[[f64; 3]; 3]> {
        let lo = eval_on(dim, parent, cell, radius, s, order)?;
        let hi = eval_on(dim, parent, cell, radius, s, order + 6)?;
        let mut scale: f64 = 0.0;
        let mut diff: f64 = 0.0;
        for a in 0..=dim {
            for b in 0..=a {
                scale = scale.max(hi[a][b].abs());
                diff = diff.max((hi[a][b] - lo[a][b]).abs());
            }
        }
        if diff <= 1e-11 * scale.max(1e-300) || depth >= 24 {
            return Ok(hi);
        }
        let mut acc = [[0.0; 3]; 3];
        for c in bisect(dim, cell) {
            let part = go(dim, parent, &c, radius, s, order, depth + 1)?;
            for a in 0..3 {
                for b in 0..3 {
                    acc[a][b] += part[a][b];
                }
            }
        }
        Ok(acc)
    }

    go(dim, parent, parent, radius, s, order, depth)
}

/// Exact P1 mass matrix on interior dofs (sparse storage).
pub fn assemble_mass(mesh: &Mesh) -> Result<SymmetricMatrix> {
    let dofmap = DofMap::new(mesh);
    let n = dofmap.n_dofs();
    if n == 0 {
        return Err(Error::NoInteriorDofs);
    }
    let dim = mesh.dim();
    let mut m = SymmetricMatrix::sparse_zeros(n);
    for e in 0..mesh.n_elements() {
        let el = mesh.element(e);
        let meas = mesh.element_measure(e);
        for (ka, &va) in el.iter().enumerate() {
            let Some(di) = dofmap.dof(va) else { continue };
            for (kb, &vb) in el.iter().enumerate() {
                let Some(dj) = dofmap.dof(vb) else { continue };
                if dj > di {
                    continue;
                }
                let coef = if dim == 1 {
                    if ka == kb {
                        meas / 3.0
                    } else {
                        meas / 6.0
                    }
                } else if ka == kb {
                    meas / 6.0
                } else {
                    meas / 12.0
                };
                m.add(di, dj, coef);
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{interval_mesh, square_mesh};

    #[test]
    fn mass_matrix_1d_uniform() {
        let mesh = interval_mesh(-1.0, 1.0, 8).unwrap();
        let h = 0.25;
        let m = assemble_mass(&mesh).unwrap();
        for i in 0..m.order() {
            assert!((m.get(i, i) - 2.0 * h / 3.0).abs() < 1e-15);
            if i + 1 < m.order() {
                assert!((m.get(i, i + 1) - h / 6.0).abs() < 1e-15);
            }
            if i + 2 < m.order() {
                assert_eq!(m.get(i, i + 2), 0.0);
            }
        }
    }

    #[test]
    fn mass_row_sums_partition_of_unity() {
        // full row sum of the boundary-included mass matrix equals
        // (support measure)/(dim+1); check through interior rows of a mesh
        // whose hats have full interior support
        let mesh = square_mesh(1.0, 4).unwrap();
        let dofmap = DofMap::new(&mesh);
        let m = assemble_mass(&mesh).unwrap();
        // pick the central vertex: all neighbors interior
        let central = (0..mesh.n_vertices())
            .find(|&v| mesh.vertex(v)[0] == 0.0 && mesh.vertex(v)[1] == 0.0)
            .unwrap();
        let d = dofmap.dof(central).unwrap();
        let mut row_sum = 0.0;
        for j in 0..m.order() {
            row_sum += m.get(d, j);
        }
        let support: f64 = (0..mesh.n_elements())
            .filter(|&e| mesh.element(e).contains(&central))
            .map(|e| mesh.element_measure(e))
            .sum();
        assert!((row_sum - support / 3.0).abs() < 1e-13);
    }

    #[test]
    fn mass_element_2d() {
        // reference triangle area A: element mass A/12*(2 diag, 1 off)
        let mesh = square_mesh(1.0, 2).unwrap();
        let m = assemble_mass(&mesh).unwrap();
        // single interior dof at the center; diagonal = sum over its star
        let star_meas: f64 = 6.0 * 0.5; // six criss-cross triangles of area 1/2
        assert!((m.get(0, 0) - star_meas * 2.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn stiffness_symmetric_by_storage() {
        let mesh = interval_mesh(-1.0, 1.0, 4).unwrap();
        let s = crate::FracOrder::new(0.5).unwrap();
        let k = assemble_stiffness(&mesh, s, &AssemblyParams::default()).unwrap();
        for i in 0..k.order() {
            for j in 0..k.order() {
                assert_eq!(k.get(i, j), k.get(j, i));
            }
        }
    }

    #[test]
    fn no_interior_dofs_rejected() {
        let mesh = interval_mesh(-1.0, 1.0, 1).unwrap();
        let s = crate::FracOrder::new(0.5).unwrap();
        assert!(matches!(
            assemble_stiffness(&mesh, s, &AssemblyParams::default()),
            Err(Error::NoInteriorDofs)
        ));
        assert!(matches!(assemble_mass(&mesh), Err(Error::NoInteriorDofs)));
    }
}
