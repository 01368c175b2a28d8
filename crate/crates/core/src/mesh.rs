//! Simplicial meshes of the four study domains with nested uniform refinement
//! and interior/boundary bookkeeping.
//!
//! Vertices and elements are stored in flat index buffers (stride `dim` and
//! `dim + 1`). Refinement computes children midpoints as `(a + b) / 2`
//! componentwise, so coarse coordinates reappear bit-identically and
//! prolongation can be done through recorded vertex lineage instead of
//! geometric search.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::{Error, Result};

/// Domain tag; `Custom` is used for meshes imported from text files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Square { half_width: f64 },
    LShape,
    Disk { n_boundary: usize },
    Custom,
}

/// How a vertex of a refined mesh relates to its parent mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexParent {
    Coarse(usize),
    EdgeMidpoint(usize, usize),
}

/// Pair classification for quadrature selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairTag {
    Identical,
    EdgeTouching,
    VertexTouching,
    Disjoint,
}

/// Result of classifying two elements: the tag and local index pairs of the
/// shared vertices.
#[derive(Debug, Clone)]
pub struct PairClass {
    pub tag: PairTag,
    pub shared_vertices: Vec<(usize, usize)>,
}

/// Shape-regularity audit: `sigma = max_T h_T / rho_T`.
#[derive(Debug, Clone, Copy)]
pub struct ShapeReport {
    pub sigma: f64,
    pub worst_element: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    elems: Vec<usize>,
    boundary: Vec<bool>,
    interior_dofs: Vec<usize>,
    h_max: f64,
    domain: Domain,
    parent: Option<Arc<Mesh>>,
    vertex_parents: Vec<VertexParent>,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_elements(&self) -> usize {
        self.elems.len() / (self.dim + 1)
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.elems[e * (self.dim + 1)..(e + 1) * (self.dim + 1)]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn interior_dofs(&self) -> &[usize] {
        &self.interior_dofs
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn parent(&self) -> Option<&Arc<Mesh>> {
        self.parent.as_ref()
    }

    pub fn vertex_parents(&self) -> &[VertexParent] {
        &self.vertex_parents
    }

    /// Length of an interval element or area of a triangle element.
    pub fn element_measure(&self, e: usize) -> f64 {
        let el = self.element(e);
        if self.dim == 1 {
            (self.coords[el[1]] - self.coords[el[0]]).abs()
        } else {
            let p0 = self.vertex(el[0]);
            let p1 = self.vertex(el[1]);
            let p2 = self.vertex(el[2]);
            0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])).abs()
        }
    }

    pub fn element_diameter(&self, e: usize) -> f64 {
        let el = self.element(e);
        if self.dim == 1 {
            (self.coords[el[1]] - self.coords[el[0]]).abs()
        } else {
            let mut h: f64 = 0.0;
            for i in 0..3 {
                let a = self.vertex(el[i]);
                let b = self.vertex(el[(i + 1) % 3]);
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
            h
        }
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.element_measure(e)).sum()
    }

    /// Radius of the smallest origin-centered ball containing the mesh.
    pub fn circumradius(&self) -> f64 {
        let mut r2: f64 = 0.0;
        for v in 0..self.n_vertices() {
            let p = self.vertex(v);
            let n2 = if self.dim == 1 { p[0] * p[0] } else { p[0] * p[0] + p[1] * p[1] };
            r2 = r2.max(n2);
        }
        r2.sqrt()
    }

    fn finalize(
        dim: usize,
        coords: Vec<f64>,
        elems: Vec<usize>,
        domain: Domain,
        parent: Option<Arc<Mesh>>,
        vertex_parents: Vec<VertexParent>,
    ) -> Mesh {
        let nv = coords.len() / dim;
        let boundary = boundary_flags(dim, nv, &elems);
        let interior_dofs = (0..nv).filter(|&v| !boundary[v]).collect();
        let mut mesh = Mesh {
            dim,
            coords,
            elems,
            boundary,
            interior_dofs,
            h_max: 0.0,
            domain,
            parent,
            vertex_parents,
        };
        mesh.h_max = (0..mesh.n_elements())
            .map(|e| mesh.element_diameter(e))
            .fold(0.0, f64::max);
        mesh
    }
}

/// Boundary detection from topology alone: in 1D a boundary vertex belongs to
/// exactly one element, in 2D it lies on an edge used by exactly one element.
fn boundary_flags(dim: usize, n_vertices: usize, elems: &[usize]) -> Vec<bool> {
    let mut flags = vec![false; n_vertices];
    if dim == 1 {
        let mut count = vec![0usize; n_vertices];
        for v in elems {
            count[*v] += 1;
        }
        for v in 0..n_vertices {
            if count[v] == 1 {
                flags[v] = true;
            }
        }
    } else {
        let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for el in elems.chunks(3) {
            for k in 0..3 {
                let a = el[k];
                let b = el[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        for ((a, b), c) in edge_count {
            if c == 1 {
                flags[a] = true;
                flags[b] = true;
            }
        }
    }
    flags
}

/// Uniform partition of `(a, b)` into `n_cells` equal cells.
pub fn interval_mesh(a: f64, b: f64, n_cells: usize) -> Result<Mesh> {
    if n_cells < 1 {
        return Err(Error::InvalidArgument("n_cells must be >= 1".into()));
    }
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("need a < b, got [{a}, {b}]")));
    }
    let mut coords = Vec::with_capacity(n_cells + 1);
    for i in 0..=n_cells {
        coords.push(a + (b - a) * i as f64 / n_cells as f64);
    }
    // endpoints exact
    coords[0] = a;
    coords[n_cells] = b;
    let mut elems = Vec::with_capacity(2 * n_cells);
    for i in 0..n_cells {
        elems.push(i);
        elems.push(i + 1);
    }
    Ok(Mesh::finalize(1, coords, elems, Domain::Interval { a, b }, None, Vec::new()))
}

/// Criss-cross triangulation of `[-w, w]^2` with a single diagonal per cell.
pub fn square_mesh(half_width: f64, n_per_side: usize) -> Result<Mesh> {
    if n_per_side < 1 {
        return Err(Error::InvalidArgument("n_per_side must be >= 1".into()));
    }
    if !(half_width > 0.0) {
        return Err(Error::InvalidArgument("half_width must be positive".into()));
    }
    let n = n_per_side;
    let mut coords = Vec::with_capacity(2 * (n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            coords.push(-half_width + 2.0 * half_width * i as f64 / n as f64);
            coords.push(-half_width + 2.0 * half_width * j as f64 / n as f64);
        }
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut elems = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
            elems.extend_from_slice(&[v00, v10, v11]);
            elems.extend_from_slice(&[v00, v11, v01]);
        }
    }
    Ok(Mesh::finalize(
        2,
        coords,
        elems,
        Domain::Square { half_width },
        None,
        Vec::new(),
    ))
}

/// Criss-cross triangulation of the L-shape `[-1,1]^2 \ [0,1]^2` with
/// `n_per_side` cells per unit subsquare.
pub fn lshape_mesh(n_per_side: usize) -> Result<Mesh> {
    if n_per_side < 1 {
        return Err(Error::InvalidArgument("n_per_side must be >= 1".into()));
    }
    let n = n_per_side; // cells per unit length; grid spans 2n cells per side
    let m = 2 * n;
    let grid = |i: usize, j: usize| (-1.0 + i as f64 / n as f64, -1.0 + j as f64 / n as f64);
    let mut index = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut coords = Vec::new();
    let mut elems = Vec::new();
    let get = |i: usize, j: usize, index: &mut Vec<usize>, coords: &mut Vec<f64>| {
        let k = j * (m + 1) + i;
        if index[k] == usize::MAX {
            let (x, y) = grid(i, j);
            index[k] = coords.len() / 2;
            coords.push(x);
            coords.push(y);
        }
        index[k]
    };
    for j in 0..m {
        for i in 0..m {
            let (x0, y0) = grid(i, j);
            if x0 >= -1e-12 && y0 >= -1e-12 {
                continue; // cell inside the removed quadrant
            }
            let v00 = get(i, j, &mut index, &mut coords);
            let v10 = get(i + 1, j, &mut index, &mut coords);
            let v01 = get(i, j + 1, &mut index, &mut coords);
            let v11 = get(i + 1, j + 1, &mut index, &mut coords);
            elems.extend_from_slice(&[v00, v10, v11]);
            elems.extend_from_slice(&[v00, v11, v01]);
        }
    }
    Ok(Mesh::finalize(2, coords, elems, Domain::LShape, None, Vec::new()))
}

/// Triangulation of the inscribed regular polygon of the unit disk: a single
/// triangle for `n_boundary = 3`, otherwise a fan around the center vertex.
/// Boundary vertices stay on the polygon under refinement.
pub fn disk_mesh(n_boundary: usize) -> Result<Mesh> {
    if n_boundary < 3 {
        return Err(Error::InvalidArgument("n_boundary must be >= 3".into()));
    }
    let n = n_boundary;
    let mut coords = Vec::new();
    let mut elems = Vec::new();
    if n == 3 {
        for k in 0..3 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            coords.push(th.cos());
            coords.push(th.sin());
        }
        elems.extend_from_slice(&[0, 1, 2]);
    } else {
        coords.push(0.0);
        coords.push(0.0);
        for k in 0..n {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            coords.push(th.cos());
            coords.push(th.sin());
        }
        for k in 0..n {
            let a = 1 + k;
            let b = 1 + (k + 1) % n;
            elems.extend_from_slice(&[0, a, b]);
        }
    }
    Ok(Mesh::finalize(2, coords, elems, Domain::Disk { n_boundary }, None, Vec::new()))
}

/// Nested uniform refinement: bisection in 1D, red refinement in 2D. Children
/// vertices are midpoints `(a + b) / 2`, bit-exactly reproducible.
pub fn refine_uniform(mesh: &Arc<Mesh>) -> Mesh {
    let dim = mesh.dim;
    let nv = mesh.n_vertices();
    let mut coords = mesh.coords.clone();
    let mut vertex_parents: Vec<VertexParent> = (0..nv).map(VertexParent::Coarse).collect();
    let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut elems = Vec::with_capacity(mesh.elems.len() * if dim == 1 { 2 } else { 4 });

    let mut mid = |a: usize, b: usize, coords: &mut Vec<f64>, parents: &mut Vec<VertexParent>| {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let id = coords.len() / dim;
            for d in 0..dim {
                let pa = coords[a * dim + d];
                let pb = coords[b * dim + d];
                coords.push((pa + pb) / 2.0);
            }
            parents.push(VertexParent::EdgeMidpoint(key.0, key.1));
            id
        })
    };

    if dim == 1 {
        for e in 0..mesh.n_elements() {
            let el = [mesh.element(e)[0], mesh.element(e)[1]];
            let m = mid(el[0], el[1], &mut coords, &mut vertex_parents);
            elems.extend_from_slice(&[el[0], m]);
            elems.extend_from_slice(&[m, el[1]]);
        }
    } else {
        for e in 0..mesh.n_elements() {
            let el = [mesh.element(e)[0], mesh.element(e)[1], mesh.element(e)[2]];
            let m01 = mid(el[0], el[1], &mut coords, &mut vertex_parents);
            let m12 = mid(el[1], el[2], &mut coords, &mut vertex_parents);
            let m20 = mid(el[2], el[0], &mut coords, &mut vertex_parents);
            elems.extend_from_slice(&[el[0], m01, m20]);
            elems.extend_from_slice(&[el[1], m12, m01]);
            elems.extend_from_slice(&[el[2], m20, m12]);
            elems.extend_from_slice(&[m01, m12, m20]);
        }
    }
    Mesh::finalize(dim, coords, elems, mesh.domain, Some(Arc::clone(mesh)), vertex_parents)
}

/// Shape regularity `sigma = max_T h_T / rho_T` (`rho_T = h_T / 2` in 1D).
pub fn shape_regularity(mesh: &Mesh) -> Result<ShapeReport> {
    let mut sigma: f64 = 0.0;
    let mut worst = 0;
    for e in 0..mesh.n_elements() {
        let ratio = if mesh.dim == 1 {
            if mesh.element_measure(e) <= 0.0 {
                return Err(Error::DegenerateElement(e));
            }
            2.0
        } else {
            let el = mesh.element(e);
            let (a, b, c) = (
                dist(mesh.vertex(el[0]), mesh.vertex(el[1])),
                dist(mesh.vertex(el[1]), mesh.vertex(el[2])),
                dist(mesh.vertex(el[2]), mesh.vertex(el[0])),
            );
            let area = mesh.element_measure(e);
            if area <= f64::EPSILON * (a + b + c).powi(2) {
                return Err(Error::DegenerateElement(e));
            }
            let h = a.max(b).max(c);
            let inradius = 2.0 * area / (a + b + c);
            h / inradius
        };
        if ratio > sigma {
            sigma = ratio;
            worst = e;
        }
    }
    Ok(ShapeReport { sigma, worst_element: worst })
}

fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Classify an element pair within one mesh by shared vertex count.
pub fn classify_pair(mesh: &Mesh, t1: usize, t2: usize) -> PairClass {
    if t1 == t2 {
        let shared = (0..=mesh.dim).map(|k| (k, k)).collect();
        return PairClass { tag: PairTag::Identical, shared_vertices: shared };
    }
    let e1 = mesh.element(t1);
    let e2 = mesh.element(t2);
    let mut shared = Vec::new();
    for (i, a) in e1.iter().enumerate() {
        for (j, b) in e2.iter().enumerate() {
            if a == b {
                shared.push((i, j));
            }
        }
    }
    let tag = match shared.len() {
        0 => PairTag::Disjoint,
        1 => PairTag::VertexTouching,
        2 => PairTag::EdgeTouching,
        _ => PairTag::Identical,
    };
    PairClass { tag, shared_vertices: shared }
}

/// Plain-text export: `dim n_vertices n_elements`, vertex coordinate lines,
/// then 0-based element index lines.
pub fn write_text<W: Write>(mesh: &Mesh, out: &mut W) -> Result<()> {
    let werr = |e: std::io::Error| Error::MeshIo(e.to_string());
    writeln!(out, "{} {} {}", mesh.dim, mesh.n_vertices(), mesh.n_elements()).map_err(werr)?;
    for v in 0..mesh.n_vertices() {
        let p = mesh.vertex(v);
        let line: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", line.join(" ")).map_err(werr)?;
    }
    for e in 0..mesh.n_elements() {
        let el: Vec<String> = mesh.element(e).iter().map(|i| i.to_string()).collect();
        writeln!(out, "{}", el.join(" ")).map_err(werr)?;
    }
    Ok(())
}

pub fn read_text<R: BufRead>(input: &mut R) -> Result<Mesh> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MeshIo("empty file".into()))?
        .map_err(|e| Error::MeshIo(e.to_string()))?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| Error::MeshIo(e.to_string())))
        .collect::<Result<_>>()?;
    if head.len() != 3 || (head[0] != 1 && head[0] != 2) {
        return Err(Error::MeshIo(format!("bad header: {header}")));
    }
    let (dim, nv, ne) = (head[0], head[1], head[2]);
    let mut coords = Vec::with_capacity(nv * dim);
    for _ in 0..nv {
        let line = lines
            .next()
            .ok_or_else(|| Error::MeshIo("missing vertex line".into()))?
            .map_err(|e| Error::MeshIo(e.to_string()))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::MeshIo(e.to_string())))
            .collect::<Result<_>>()?;
        if vals.len() != dim {
            return Err(Error::MeshIo(format!("expected {dim} coordinates: {line}")));
        }
        coords.extend_from_slice(&vals);
    }
    let mut elems = Vec::with_capacity(ne * (dim + 1));
    for _ in 0..ne {
        let line = lines
            .next()
            .ok_or_else(|| Error::MeshIo("missing element line".into()))?
            .map_err(|e| Error::MeshIo(e.to_string()))?;
        let vals: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::MeshIo(e.to_string())))
            .collect::<Result<_>>()?;
        if vals.len() != dim + 1 || vals.iter().any(|&v| v >= nv) {
            return Err(Error::MeshIo(format!("bad element line: {line}")));
        }
        elems.extend_from_slice(&vals);
    }
    Ok(Mesh::finalize(dim, coords, elems, Domain::Custom, None, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_examples() {
        let m = interval_mesh(-1.0, 1.0, 4).unwrap();
        assert_eq!(m.n_vertices(), 5);
        assert_eq!(m.n_elements(), 4);
        assert_eq!(m.h_max(), 0.5);
        let ids: Vec<f64> = m.interior_dofs().iter().map(|&v| m.vertex(v)[0]).collect();
        assert_eq!(ids, vec![-0.5, 0.0, 0.5]);

        let m = interval_mesh(-1.0, 1.0, 1).unwrap();
        assert!(m.interior_dofs().is_empty());

        let m = interval_mesh(0.0, 3.0, 3).unwrap();
        assert_eq!(m.h_max(), 1.0);

        assert!(interval_mesh(1.0, -1.0, 4).is_err());
        assert!(interval_mesh(-1.0, 1.0, 0).is_err());
    }

    #[test]
    fn square_examples() {
        let m = square_mesh(1.0, 1).unwrap();
        assert_eq!(m.n_elements(), 2);
        assert!(m.interior_dofs().is_empty());

        let m = square_mesh(1.0, 2).unwrap();
        assert_eq!(m.n_elements(), 8);
        assert!((m.h_max() - 2.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.interior_dofs().len(), 1);

        let m = square_mesh(1.0, 50).unwrap();
        assert!((m.h_max() - 2.0 * 2.0_f64.sqrt() / 50.0).abs() < 1e-15);
        assert!((m.total_measure() - 4.0).abs() < 1e-12 * 4.0);
    }

    #[test]
    fn lshape_examples() {
        let m = lshape_mesh(1).unwrap();
        assert_eq!(m.n_elements(), 6);
        let m = lshape_mesh(2).unwrap();
        assert_eq!(m.n_elements(), 24);
        assert!((m.total_measure() - 3.0).abs() < 1e-12 * 3.0);
        // the re-entrant corner (0,0) lies on the boundary and is constrained
        let corner = (0..m.n_vertices())
            .find(|&v| m.vertex(v)[0] == 0.0 && m.vertex(v)[1] == 0.0)
            .unwrap();
        assert!(m.is_boundary_vertex(corner));
        for n in [1usize, 2, 3, 4] {
            assert_eq!(lshape_mesh(n).unwrap().n_elements(), 6 * n * n);
        }
    }

    #[test]
    fn disk_examples() {
        let m = disk_mesh(3).unwrap();
        assert_eq!(m.n_elements(), 1);
        assert!(m.interior_dofs().is_empty());

        let m = disk_mesh(6).unwrap();
        assert_eq!(m.interior_dofs().len(), 1);
        assert_eq!(m.interior_dofs()[0], 0);

        for n in [8usize, 32, 128] {
            let m = disk_mesh(n).unwrap();
            let poly = n as f64 / 2.0 * (2.0 * std::f64::consts::PI / n as f64).sin();
            assert!((m.total_measure() - poly).abs() < 1e-12 * poly);
        }
        assert!(disk_mesh(2).is_err());
    }

    #[test]
    fn refinement_examples() {
        let m = Arc::new(interval_mesh(-1.0, 1.0, 4).unwrap());
        let f = refine_uniform(&m);
        assert_eq!(f.n_elements(), 8);
        assert_eq!(f.h_max(), 0.25);

        let m2 = Arc::new(square_mesh(1.0, 2).unwrap());
        let f2 = refine_uniform(&m2);
        assert_eq!(f2.n_elements(), 4 * m2.n_elements());
        let s1 = shape_regularity(&m2).unwrap().sigma;
        let s2 = shape_regularity(&f2).unwrap().sigma;
        assert!((s1 - s2).abs() < 1e-13);
    }

    #[test]
    fn refinement_nestedness_bit_exact() {
        let base = Arc::new(disk_mesh(7).unwrap());
        let fine = refine_uniform(&base);
        for v in 0..base.n_vertices() {
            assert_eq!(fine.vertex(v), base.vertex(v));
            assert_eq!(fine.vertex_parents()[v], VertexParent::Coarse(v));
        }
        // boundary polygon preserved exactly
        for v in 0..fine.n_vertices() {
            if let VertexParent::EdgeMidpoint(a, b) = fine.vertex_parents()[v] {
                assert_eq!(fine.vertex(v)[0], (base.vertex(a)[0] + base.vertex(b)[0]) / 2.0);
                assert_eq!(fine.vertex(v)[1], (base.vertex(a)[1] + base.vertex(b)[1]) / 2.0);
            }
        }
    }

    #[test]
    fn measure_preserved_under_refinement() {
        let m = Arc::new(lshape_mesh(2).unwrap());
        let f = refine_uniform(&m);
        assert!((f.total_measure() - 3.0).abs() < 3e-12);
        let m = Arc::new(interval_mesh(0.0, 3.0, 5).unwrap());
        let f = refine_uniform(&m);
        assert!((f.total_measure() - 3.0).abs() < 3e-12);
    }

    #[test]
    fn shape_regularity_examples() {
        let m = interval_mesh(0.0, 1.0, 3).unwrap();
        assert_eq!(shape_regularity(&m).unwrap().sigma, 2.0);

        // right isoceles with legs 1: sigma = 2 + 2 sqrt 2
        let m = square_mesh(0.5, 1).unwrap();
        let s = shape_regularity(&m).unwrap().sigma;
        assert!((s - (2.0 + 2.0 * 2.0_f64.sqrt())).abs() < 1e-12);

        // equilateral triangle: sigma = 2 sqrt 3
        let coords = vec![0.0, 0.0, 1.0, 0.0, 0.5, 3.0_f64.sqrt() / 2.0];
        let eq = Mesh::finalize(2, coords, vec![0, 1, 2], Domain::Custom, None, Vec::new());
        let s = shape_regularity(&eq).unwrap().sigma;
        assert!((s - 2.0 * 3.0_f64.sqrt()).abs() < 1e-12);

        let bad = Mesh::finalize(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0],
            vec![0, 1, 2],
            Domain::Custom,
            None,
            Vec::new(),
        );
        assert!(matches!(shape_regularity(&bad), Err(Error::DegenerateElement(0))));
    }

    #[test]
    fn classify_examples() {
        let m = square_mesh(1.0, 2).unwrap();
        assert_eq!(classify_pair(&m, 0, 0).tag, PairTag::Identical);
        // the two triangles of one cell share the diagonal
        let c = classify_pair(&m, 0, 1);
        assert_eq!(c.tag, PairTag::EdgeTouching);
        assert_eq!(c.shared_vertices.len(), 2);
        // far-apart cells
        let m3 = square_mesh(1.0, 3).unwrap();
        let c = classify_pair(&m3, 0, m3.n_elements() - 1);
        assert_eq!(c.tag, PairTag::Disjoint);
    }

    #[test]
    fn classify_symmetry() {
        let m = square_mesh(1.0, 3).unwrap();
        for t1 in 0..m.n_elements() {
            for t2 in 0..m.n_elements() {
                let a = classify_pair(&m, t1, t2);
                let b = classify_pair(&m, t2, t1);
                assert_eq!(a.tag, b.tag);
                let mut swapped: Vec<(usize, usize)> =
                    b.shared_vertices.iter().map(|&(x, y)| (y, x)).collect();
                swapped.sort_unstable();
                let mut orig = a.shared_vertices.clone();
                orig.sort_unstable();
                assert_eq!(orig, swapped);
            }
        }
    }

    #[test]
    fn text_roundtrip() {
        let m = lshape_mesh(2).unwrap();
        let mut buf = Vec::new();
        write_text(&m, &mut buf).unwrap();
        let back = read_text(&mut buf.as_slice()).unwrap();
        assert_eq!(back.n_vertices(), m.n_vertices());
        assert_eq!(back.n_elements(), m.n_elements());
        assert_eq!(back.interior_dofs(), m.interior_dofs());
        for v in 0..m.n_vertices() {
            assert_eq!(back.vertex(v), m.vertex(v));
        }
    }
}
