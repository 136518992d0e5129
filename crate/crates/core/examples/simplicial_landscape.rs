//! Run descent on the simplicial loss from random starts and count which
//! vertex each run reaches.
//!
//! `cargo run --example simplicial_landscape`

use finiteloss::descent::{minimize, DescentOptions};
use finiteloss::loss::{describe_simplicial, SimplicialLoss};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> finiteloss::Result<()> {
    let loss = SimplicialLoss::new(DVector::from_vec(vec![1.0, -2.0, 0.5]))?;
    println!("F(x) = {}", describe_simplicial(&loss));
    let vertices = loss.vertices();
    let mut hits = vec![0usize; vertices.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..2000 {
        let x0 = DVector::from_fn(loss.n(), |_, _| rng.random_range(-3.0..3.0));
        let r = minimize(
            |x| {
                let e = loss.value_gradient(x.as_slice());
                (e.value, e.gradient)
            },
            &x0,
            &DescentOptions::default(),
        );
        let (best, _) = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (i, (&r.x - v).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        hits[best] += 1;
    }
    for (v, h) in vertices.iter().zip(&hits) {
        println!("  vertex {:?}: {h} runs", v.as_slice());
    }
    Ok(())
}
