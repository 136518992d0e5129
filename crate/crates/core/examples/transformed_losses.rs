//! Both transformed-loss constructions: a pseudo-inverse when the set is
//! small relative to the dimension, an invertible lift otherwise.
//!
//! `cargo run --example transformed_losses`

use finiteloss::generating::PointSet;
use finiteloss::loss::TransformedLoss;

fn main() -> finiteloss::Result<()> {
    let small = PointSet::from_rows(&[vec![4.0, -2.0, 1.0], vec![-1.0, 3.0, -5.0]])?;
    let large = PointSet::from_rows(&[
        vec![1.0, 2.0],
        vec![2.0, 4.0],
        vec![3.0, 1.0],
        vec![5.0, 5.0],
    ])?;
    for s in [small, large] {
        let tl = TransformedLoss::build(&s)?;
        println!(
            "n = {}, k = {}, construction {:?}",
            tl.n(),
            tl.k(),
            tl.kind()
        );
        if let Some(text) = tl.describe() {
            println!("  F(x) = {text}");
        }
        for u in s.points() {
            println!("  at {:?}: {:.1e}", u.as_slice(), tl.value(u.as_slice())?);
        }
        let mid: Vec<f64> = (0..s.n())
            .map(|i| s.points().iter().map(|p| p[i]).sum::<f64>() / s.k() as f64)
            .collect();
        println!("  at the centroid: {:.4}", tl.value(&mid)?);
        println!(
            "  JSON: {}\n",
            serde_json::to_string(&tl).expect("serializable")
        );
    }
    Ok(())
}
