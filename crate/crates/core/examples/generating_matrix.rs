//! Build the generating matrix of a few point sets and print the polynomials
//! that cut each set out.
//!
//! `cargo run --example generating_matrix`

use finiteloss::generating::{solve_g, PointSet};

fn main() -> finiteloss::Result<()> {
    let examples = [
        (
            "two points in 3D",
            PointSet::from_rows(&[vec![2.0, 1.0, 3.0], vec![-1.0, -2.0, 4.0]])?,
        ),
        (
            "triangle",
            PointSet::from_rows(&[vec![2.0, -1.0], vec![-1.0, 3.0], vec![-2.0, -2.0]])?,
        ),
        (
            "unit simplex",
            PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])?,
        ),
    ];
    for (name, s) in examples {
        let g = solve_g(&s)?;
        println!("{name}: n = {}, k = {}", s.n(), s.k());
        println!("  G ={:.4}", g.matrix());
        for p in g.describe() {
            println!("  {p} = 0");
        }
        println!(
            "  commutator residual {:.1e}\n",
            g.commutator_residual().total
        );
    }
    Ok(())
}
