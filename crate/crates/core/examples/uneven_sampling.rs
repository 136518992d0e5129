//! Recovery when one point gets far fewer samples and a wider noise box than
//! the others.
//!
//! `cargo run --release --example uneven_sampling`

use finiteloss::clustering::{bounded_noise_sample_radii, recover_set, LossChoice, NoiseModel};
use finiteloss::extraction::set_distance;
use finiteloss::fitting::FitOptions;
use finiteloss::generating::PointSet;

fn main() -> finiteloss::Result<()> {
    let s = PointSet::from_rows(&[
        vec![0.0, 0.0],
        vec![2.0, 0.5],
        vec![1.0, 2.0],
        vec![-1.0, 1.5],
    ])?;
    let radii = [0.05, 0.05, 0.05, 0.2];
    for sparse in [100, 30, 10, 3] {
        let counts = [100, 100, 100, sparse];
        let (t, _) =
            bounded_noise_sample_radii(&s, &radii, &counts, 3, NoiseModel::TruncatedNormal)?;
        let r = recover_set(&t, 4, &FitOptions::default(), true, LossChoice::Transformed)?;
        let worst = s
            .points()
            .iter()
            .map(|u| {
                r.s_star
                    .points()
                    .iter()
                    .map(|v| (u - v).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect::<Vec<_>>();
        println!(
            "sparse point with {sparse:>3} samples: set distance {:.4}, error at that point {:.4}",
            set_distance(&s, &r.s_star)?,
            worst[3]
        );
    }
    Ok(())
}
