//! Triangulation of the region between the domain and its enclosing ball.
//!
//! The stiffness form integrates the test functions against the whole
//! complement; the part inside the enclosing ball `B_R` is covered by
//! explicit integration cells built here, the rest by the closed-form
//! complement weight. The outer boundary is a tangent polygon of `B_R`, so
//! the covered region contains `B_R` minus the domain; the small overshoot
//! past the sphere is double-counted against the complement weight, which
//! only increases the quadratic form and preserves the upper-bound property
//! of conforming eigenvalues.
//!
//! Cells touching the domain share its boundary vertices bit-exactly, so
//! pair classification against mesh elements can compare coordinates.

use crate::mesh::{Domain, Mesh};
use crate::{Error, Result};

/// Integration-only cells outside the domain: segments in 1D (first two
/// vertex slots), triangles in 2D.
#[derive(Debug, Clone)]
pub struct Annulus {
    pub dim: usize,
    pub elems: Vec<[[f64; 2]; 3]>,
    /// Radius of the ball whose complement is handled by the closed-form
    /// weight (the circumradius of the domain).
    pub ball_radius: f64,
}

impl Annulus {
    pub fn elem_measure(&self, e: usize) -> f64 {
        let v = &self.elems[e];
        if self.dim == 1 {
            (v[1][0] - v[0][0]).abs()
        } else {
            0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
                - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0]))
                .abs()
        }
    }

    pub fn elem_diameter(&self, e: usize) -> f64 {
        let v = &self.elems[e];
        if self.dim == 1 {
            (v[1][0] - v[0][0]).abs()
        } else {
            let mut h: f64 = 0.0;
            for i in 0..3 {
                let a = v[i];
                let b = v[(i + 1) % 3];
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
            h
        }
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.elems.len()).map(|e| self.elem_measure(e)).sum()
    }
}

/// Sub-arcs per inner boundary edge of the ring strips.
const RING_SUBDIVISIONS: usize = 2;

pub fn build_annulus(mesh: &Mesh) -> Result<Annulus> {
    let radius = mesh.circumradius();
    match mesh.dim() {
        1 => build_annulus_1d(mesh, radius),
        2 => build_annulus_2d(mesh, radius),
        d => Err(Error::InvalidDimension(d)),
    }
}

fn build_annulus_1d(mesh: &Mesh, radius: f64) -> Result<Annulus> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in 0..mesh.n_vertices() {
        lo = lo.min(mesh.vertex(v)[0]);
        hi = hi.max(mesh.vertex(v)[0]);
    }
    let h = mesh.h_max();
    let mut elems = Vec::new();
    let mut fill = |a: f64, b: f64| {
        let len = b - a;
        if len <= 1e-14 {
            return;
        }
        let cells = (len / h).ceil() as usize;
        for k in 0..cells {
            let x0 = a + len * k as f64 / cells as f64;
            let x1 = if k + 1 == cells { b } else { a + len * (k + 1) as f64 / cells as f64 };
            elems.push([[x0, 0.0], [x1, 0.0], [0.0, 0.0]]);
        }
    };
    fill(-radius, lo);
    fill(hi, radius);
    Ok(Annulus { dim: 1, elems, ball_radius: radius })
}

fn build_annulus_2d(mesh: &Mesh, radius: f64) -> Result<Annulus> {
    let mut elems: Vec<[[f64; 2]; 3]> = Vec::new();
    let mut ring: Vec<[f64; 2]> = Vec::new();

    // boundary vertices of the mesh that belong to the outer ring
    let on_outer = |p: &[f64]| match mesh.domain() {
        Domain::LShape => p[0].abs().max(p[1].abs()) == 1.0,
        _ => true,
    };
    for v in 0..mesh.n_vertices() {
        if mesh.is_boundary_vertex(v) && on_outer(mesh.vertex(v)) {
            ring.push([mesh.vertex(v)[0], mesh.vertex(v)[1]]);
        }
    }

    // the L-shape adds the removed quadrant, gridded on the exact coordinate
    // lines of the mesh boundary along the two re-entrant segments
    if mesh.domain() == Domain::LShape {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for v in 0..mesh.n_vertices() {
            let p = mesh.vertex(v);
            if !mesh.is_boundary_vertex(v) {
                continue;
            }
            if p[1] == 0.0 && (0.0..=1.0).contains(&p[0]) {
                xs.push(p[0]);
            }
            if p[0] == 0.0 && (0.0..=1.0).contains(&p[1]) {
                ys.push(p[1]);
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ys.dedup();
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::MeshIo("cannot infer quadrant grid from L-mesh".into()));
        }
        for j in 0..ys.len() - 1 {
            for i in 0..xs.len() - 1 {
                let v00 = [xs[i], ys[j]];
                let v10 = [xs[i + 1], ys[j]];
                let v01 = [xs[i], ys[j + 1]];
                let v11 = [xs[i + 1], ys[j + 1]];
                elems.push([v00, v10, v11]);
                elems.push([v00, v11, v01]);
                for p in [v10, v01, v11] {
                    if p[0].abs().max(p[1].abs()) == 1.0 {
                        ring.push(p);
                    }
                }
            }
        }
    }

    ring.sort_by(|a, b| {
        a[1].atan2(a[0])
            .partial_cmp(&b[1].atan2(b[0]))
            .unwrap()
            .then(a[0].partial_cmp(&b[0]).unwrap())
    });
    ring.dedup();
    let m = ring.len();
    if m < 3 {
        return Err(Error::MeshIo("outer ring has fewer than 3 vertices".into()));
    }

    let q = RING_SUBDIVISIONS;
    let angle = |p: [f64; 2]| p[1].atan2(p[0]);
    let mut max_gap: f64 = 0.0;
    for k in 0..m {
        let a = angle(ring[k]);
        let mut b = angle(ring[(k + 1) % m]);
        if b <= a {
            b += 2.0 * std::f64::consts::PI;
        }
        max_gap = max_gap.max(b - a);
    }
    let delta = max_gap / q as f64;
    if delta >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::MeshIo("boundary too coarse for ring construction".into()));
    }
    let r_out = radius / (delta / 2.0).cos();

    for k in 0..m {
        let va = ring[k];
        let vb = ring[(k + 1) % m];
        let ta = angle(va);
        let mut tb = angle(vb);
        if tb <= ta {
            tb += 2.0 * std::f64::consts::PI;
        }
        let outer: Vec<[f64; 2]> = (0..=q)
            .map(|j| {
                let t = j as f64 / q as f64;
                let th = ta * (1.0 - t) + tb * t;
                [r_out * th.cos(), r_out * th.sin()]
            })
            .collect();
        // one conforming triangle on the boundary edge, then a fan to the
        // outer polyline from va
        elems.push([va, vb, outer[q]]);
        for j in 0..q {
            elems.push([va, outer[j + 1], outer[j]]);
        }
    }

    Ok(Annulus { dim: 2, elems, ball_radius: radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{disk_mesh, interval_mesh, lshape_mesh, refine_uniform, square_mesh};
    use std::sync::Arc;

    #[test]
    fn symmetric_interval_has_empty_annulus() {
        let m = interval_mesh(-1.0, 1.0, 8).unwrap();
        let a = build_annulus(&m).unwrap();
        assert!(a.elems.is_empty());
        assert_eq!(a.ball_radius, 1.0);
    }

    #[test]
    fn asymmetric_interval_covers_gap() {
        let m = interval_mesh(0.0, 3.0, 6).unwrap();
        let a = build_annulus(&m).unwrap();
        assert!((a.total_measure() - 3.0).abs() < 1e-12);
        assert_eq!(a.ball_radius, 3.0);
    }

    #[test]
    fn square_ring_covers_ball_complement() {
        let m = square_mesh(1.0, 4).unwrap();
        let a = build_annulus(&m).unwrap();
        let r = a.ball_radius;
        assert!((r - 2.0f64.sqrt()).abs() < 1e-14);
        let ball = std::f64::consts::PI * r * r;
        let covered = a.total_measure() + m.total_measure();
        assert!(covered >= ball - 1e-10, "covered {covered} < ball {ball}");
        // overshoot stays modest
        assert!(covered <= ball * 1.1);
    }

    #[test]
    fn lshape_ring_plus_quadrant() {
        let m = Arc::new(lshape_mesh(2).unwrap());
        let a = build_annulus(&m).unwrap();
        let ball = std::f64::consts::PI * 2.0;
        let covered = a.total_measure() + m.total_measure();
        assert!(covered >= ball - 1e-10);
        // refined meshes keep working and stay conforming
        let f = refine_uniform(&m);
        let af = build_annulus(&f).unwrap();
        let covered_f = af.total_measure() + f.total_measure();
        assert!(covered_f >= ball - 1e-10);
        assert!(covered_f <= covered + 1e-12);
    }

    #[test]
    fn disk_slivers() {
        let m = disk_mesh(12).unwrap();
        let a = build_annulus(&m).unwrap();
        let covered = a.total_measure() + m.total_measure();
        assert!(covered >= std::f64::consts::PI - 1e-10);
        assert!(covered <= std::f64::consts::PI * 1.05);
    }

    #[test]
    fn strip_cells_share_mesh_vertices_bit_exactly() {
        let m = square_mesh(1.0, 3).unwrap();
        let a = build_annulus(&m).unwrap();
        let mut shared = 0;
        for e in &a.elems {
            for p in e {
                for v in 0..m.n_vertices() {
                    if m.vertex(v)[0] == p[0] && m.vertex(v)[1] == p[1] {
                        shared += 1;
                    }
                }
            }
        }
        // every boundary edge contributes one conforming strip triangle
        assert!(shared >= 2 * 12);
    }
}
