//! Cluster samples from a random Gaussian mixture: fit the set of centers,
//! then label every sample by descending the recovered loss.
//!
//! `cargo run --release --example gmm_clustering`

use finiteloss::clustering::{
    accuracy, assign_labels, gmm_sample, random_gmm, recover_set, LossChoice,
};
use finiteloss::fitting::FitOptions;

fn main() -> finiteloss::Result<()> {
    for (n, k) in [(2, 3), (3, 4), (4, 4)] {
        let spec = random_gmm(n, k, true, 6.0, 11)?;
        let (t, truth) = gmm_sample(&spec, 600, 12)?;
        let r = recover_set(&t, k, &FitOptions::default(), true, LossChoice::Transformed)?;
        let a = assign_labels(&r.loss, &r.s_star, &t, 4)?;
        let acc = accuracy(&a.labels, &truth, &r.s_star, &spec.means())?;
        println!(
            "n = {n}, k = {k}: accuracy {acc:.3}, {} of {} descents hit the iteration cap",
            a.non_converged(),
            a.len()
        );
    }
    Ok(())
}
