//! Development probe: assembly vs oracle vs closed forms, plus eigenvalues.

use fraceig_core::assembly::{assemble_mass, assemble_stiffness, AssemblyParams};
use fraceig_core::eigensolve::{solve_lowest, SolverMode};
use fraceig_core::kernel::normalization_constant;
use fraceig_core::mesh::{disk_mesh, interval_mesh, lshape_mesh, square_mesh};
use fraceig_core::oracle::stiffness_entry_oracle;
use fraceig_core::FracOrder;

/// Full-line Gagliardo entry, closed form for uniform 1D hats (s != 1/2 uses
/// the power double antiderivative, s = 1/2 the log one).
fn closed_entry_1d(i: usize, j: usize, h: f64, s: f64) -> f64 {
    let f2 = |r: f64| -> f64 {
        let r = r.abs();
        if r == 0.0 {
            return 0.0;
        }
        if (s - 0.5).abs() > 1e-12 {
            r.powf(3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))
        } else {
            -r * r * (2.0 * r.ln() - 3.0) / 2.0
        }
    };
    let pref = if (s - 0.5).abs() > 1e-12 { 1.0 / (s * (2.0 * s - 1.0)) } else { 1.0 };
    let xi = i as f64;
    let xj = j as f64;
    let cells_u = [(xi - 1.0, xi, 1.0), (xi, xi + 1.0, -1.0)];
    let cells_v = [(xj - 1.0, xj, 1.0), (xj, xj + 1.0, -1.0)];
    let mut tot = 0.0;
    for (a, b, su) in cells_u {
        for (c, d, sv) in cells_v {
            let box_val = f2((b - c) * h) - f2((b - d) * h) - f2((a - c) * h) + f2((a - d) * h);
            tot += su * sv * box_val;
        }
    }
    pref * tot / (h * h)
}

fn main() {
    let params = AssemblyParams::default();

    println!("== 1D entries: assembly vs closed form vs oracle (n=8) ==");
    for sv in [0.25, 0.5, 0.75] {
        let s = FracOrder::new(sv).unwrap();
        let mesh = interval_mesh(-1.0, 1.0, 8).unwrap();
        let k = assemble_stiffness(&mesh, s, &params).unwrap();
        let c = normalization_constant(1, s).unwrap().value;
        let h = 0.25;
        for (i, j) in [(0usize, 0usize), (0, 1), (0, 4), (3, 3)] {
            let asm = k.get(i, j);
            let cf = c * closed_entry_1d(i, j, h, sv);
            let orc = stiffness_entry_oracle(&mesh, s, i, j).unwrap();
            println!(
                " s={sv} ({i},{j}): asm={asm:.10e} cf={cf:.10e} orc={orc:.10e} rel_cf={:.2e} rel_orc={:.2e}",
                ((asm - cf) / cf).abs(),
                ((asm - orc) / orc).abs()
            );
        }
    }

    println!("== 1D eigenvalues (paper: s=0.25->0.9702/1.6015 s=0.5->1.1577/2.7548 s=0.75->1.5975/5.0598) ==");
    for sv in [0.25, 0.5, 0.75] {
        let s = FracOrder::new(sv).unwrap();
        for n in [16usize, 32, 64, 128] {
            let mesh = interval_mesh(-1.0, 1.0, n).unwrap();
            let k = assemble_stiffness(&mesh, s, &params).unwrap();
            let m = assemble_mass(&mesh).unwrap();
            let sp = solve_lowest(&k, &m, 2, SolverMode::Dense).unwrap();
            println!(
                " s={sv} n={n}: l1={:.6} l2={:.6}",
                sp.pairs[0].lambda, sp.pairs[1].lambda
            );
        }
    }

    println!("== 2D square(2): K(0,0) assembly vs oracle ==");
    for sv in [0.1, 0.5, 0.9] {
        let s = FracOrder::new(sv).unwrap();
        let mesh = square_mesh(1.0, 2).unwrap();
        let k = assemble_stiffness(&mesh, s, &params).unwrap();
        let orc = stiffness_entry_oracle(&mesh, s, 0, 0).unwrap();
        println!(
            " s={sv}: asm={:.10e} orc={orc:.10e} rel={:.2e}",
            k.get(0, 0),
            ((k.get(0, 0) - orc) / orc).abs()
        );
    }

    println!("== 2D lshape(2): entries vs oracle, s=0.5 ==");
    {
        let s = FracOrder::new(0.5).unwrap();
        let mesh = lshape_mesh(2).unwrap();
        let k = assemble_stiffness(&mesh, s, &params).unwrap();
        let nd = mesh.interior_dofs().len();
        for i in 0..nd.min(3) {
            for j in 0..=i {
                let orc = stiffness_entry_oracle(&mesh, s, i, j).unwrap();
                println!(
                    " ({i},{j}): asm={:.8e} orc={:.8e} rel={:.2e}",
                    k.get(i, j),
                    orc,
                    ((k.get(i, j) - orc) / orc).abs()
                );
            }
        }
    }

    println!("== disk(6): K(0,0) vs oracle, s=0.5; square eig sanity ==");
    {
        let s = FracOrder::new(0.5).unwrap();
        let mesh = disk_mesh(6).unwrap();
        let k = assemble_stiffness(&mesh, s, &params).unwrap();
        let orc = stiffness_entry_oracle(&mesh, s, 0, 0).unwrap();
        println!(
            " disk s=0.5: asm={:.10e} orc={orc:.10e} rel={:.2e}",
            k.get(0, 0),
            ((k.get(0, 0) - orc) / orc).abs()
        );
    }
    for n in [4usize, 8] {
        let s = FracOrder::new(0.5).unwrap();
        let mesh = square_mesh(1.0, n).unwrap();
        let k = assemble_stiffness(&mesh, s, &params).unwrap();
        let m = assemble_mass(&mesh).unwrap();
        let sp = solve_lowest(&k, &m, 1, SolverMode::Dense).unwrap();
        println!(
            " square n={n} s=0.5: l1={:.6} (paper band [1.3844, 2.2214], lam_h(0.04)=1.8395)",
            sp.pairs[0].lambda
        );
    }
}
