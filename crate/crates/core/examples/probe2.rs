//! Timing probe for the 2D oracle path.

use std::time::Instant;

use fraceig_core::assembly::build_annulus;
use fraceig_core::mesh::square_mesh;
use fraceig_core::oracle::{pair_integral_oracle, stiffness_entry_oracle};
use fraceig_core::FracOrder;

fn main() {
    let s = FracOrder::new(0.5).unwrap();
    let mesh = square_mesh(1.0, 2).unwrap();
    let ann = build_annulus(&mesh).unwrap();
    eprintln!("annulus elems: {}", ann.elems.len());

    // time a single touching domain pair
    let t0 = Instant::now();
    let e0: [[f64; 2]; 3] = [[-1.0, -1.0], [0.0, -1.0], [0.0, 0.0]];
    let e1: [[f64; 2]; 3] = [[-1.0, -1.0], [0.0, 0.0], [-1.0, 0.0]];
    let f = |x: &[f64; 2], y: &[f64; 2]| {
        let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        (x[0] - y[0]) * (x[1] - y[1]) * d2.powf(-1.5)
    };
    let v = pair_integral_oracle(2, &e0, &e1, &f, s, 2, 0).unwrap();
    eprintln!("edge pair: {v:.6e} in {:?}", t0.elapsed());

    // time one domain x strip pair
    let t0 = Instant::now();
    let strip = ann.elems[0];
    eprintln!("strip: {:?}", strip);
    let v = pair_integral_oracle(2, &e0, &strip, &f, s, 2, 0).unwrap();
    eprintln!("strip pair: {v:.6e} in {:?}", t0.elapsed());

    let t0 = Instant::now();
    let v = stiffness_entry_oracle(&mesh, s, 0, 0).unwrap();
    eprintln!("entry (0,0): {v:.8e} in {:?}", t0.elapsed());
}
