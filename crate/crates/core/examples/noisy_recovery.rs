//! Fit a generating matrix to noisy samples around six points, extract the
//! recovered set, and watch the error shrink with the noise level.
//!
//! `cargo run --release --example noisy_recovery`

use finiteloss::clustering::{bounded_noise_sample, recover_set, sub_seed, LossChoice, NoiseModel};
use finiteloss::extraction::set_distance;
use finiteloss::fitting::FitOptions;
use finiteloss::generating::PointSet;

fn main() -> finiteloss::Result<()> {
    let s = PointSet::from_rows(&[
        vec![1.0, 1.0],
        vec![3.0, 2.0],
        vec![1.5, 2.5],
        vec![2.5, 3.0],
        vec![2.0, 1.5],
        vec![3.0, 1.0],
    ])?;
    println!(
        "{:>6} {:>7} {:>12} {:>12}",
        "eps", "per pt", "median dist", "worst dist"
    );
    for eps in [0.5, 0.1, 0.05] {
        for per in [10, 50, 100] {
            let mut d = Vec::new();
            for seed in 0..5 {
                let (t, _) = bounded_noise_sample(
                    &s,
                    eps,
                    &[per; 6],
                    sub_seed(seed, 1),
                    NoiseModel::TruncatedNormal,
                )?;
                let r = recover_set(&t, 6, &FitOptions::default(), true, LossChoice::Transformed)?;
                d.push(set_distance(&s, &r.s_star)?);
            }
            d.sort_by(f64::total_cmp);
            println!("{eps:>6} {per:>7} {:>12.4} {:>12.4}", d[2], d[4]);
        }
    }
    Ok(())
}
