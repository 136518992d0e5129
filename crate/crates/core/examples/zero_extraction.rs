//! Recover a point set from its generating matrix through the eigenvalues of
//! a random combination of multiplication matrices.
//!
//! `cargo run --example zero_extraction`

use finiteloss::extraction::{extract_zeros, real_projection, set_distance};
use finiteloss::generating::{solve_g, PointSet};

fn main() -> finiteloss::Result<()> {
    let s = PointSet::from_rows(&[
        vec![0.5, -1.0, 2.0],
        vec![1.5, 0.25, -0.5],
        vec![-2.0, 1.0, 1.0],
        vec![0.0, 0.0, 3.0],
    ])?;
    let g = solve_g(&s)?;
    let z = extract_zeros(&g, 42)?;
    println!("xi = {:?}", z.xi);
    println!(
        "commutator norm {:.1e}, approximate: {}",
        z.commutator_norm, z.approximate
    );
    for (p, r) in z.real_points.iter().zip(&z.residuals) {
        println!(
            "  {:?}  residual {r:.1e}",
            p.iter()
                .map(|v| (v * 1e6).round() / 1e6)
                .collect::<Vec<_>>()
        );
    }
    let (s_star, warnings) = real_projection(&z)?;
    println!(
        "Hausdorff distance to the input: {:.1e}",
        set_distance(&s, &s_star)?
    );
    for w in warnings {
        println!("warning: {w}");
    }
    Ok(())
}
