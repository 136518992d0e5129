//! Fit, extract and cluster on synthetic data.

use finiteloss::clustering::{
    assign_labels, bounded_noise_sample, label_sample, recover_set, sub_seed, vertex_label,
    LossChoice, NoiseModel, RecoveryLoss,
};
use finiteloss::extraction::{extract_zeros, set_distance};
use finiteloss::fitting::{fit_g, theta, FitOptions, SampleSet};
use finiteloss::generating::{solve_g, PointSet};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hexagon() -> PointSet {
    PointSet::from_rows(&[
        vec![1.0, 1.0],
        vec![3.0, 2.0],
        vec![1.5, 2.5],
        vec![2.5, 3.0],
        vec![2.0, 1.5],
        vec![3.0, 1.0],
    ])
    .unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn cloud(eps: f64, per: usize, seed: u64) -> SampleSet {
    bounded_noise_sample(
        &hexagon(),
        eps,
        &[per; 6],
        seed,
        NoiseModel::TruncatedNormal,
    )
    .unwrap()
    .0
}

#[test]
fn noiseless_recovery_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut done = 0;
    while done < 15 {
        let n = rng.random_range(1..=4);
        let k = rng.random_range(1..=6);
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let Ok(s) = PointSet::from_rows(&rows) else {
            continue;
        };
        let separated = (0..k).all(|i| (i + 1..k).all(|j| (s.point(i) - s.point(j)).norm() > 0.2));
        if !separated || solve_g(&s).is_err() {
            continue;
        }
        done += 1;
        let choice = if k >= 2 {
            LossChoice::Transformed
        } else {
            LossChoice::Fg
        };
        let r = recover_set(
            &SampleSet::from(&s),
            k,
            &FitOptions::default(),
            true,
            choice,
        )
        .unwrap();
        assert!(set_distance(&s, &r.s_star).unwrap() <= 1e-8);
        for u in r.s_star.points() {
            assert!(r.loss.value(u.as_slice()).unwrap() <= 1e-8);
        }
    }
}

#[test]
fn recovery_improves_as_noise_shrinks() {
    let truth = solve_g(&hexagon()).unwrap();
    let mut dist_medians = Vec::new();
    let mut g_medians = Vec::new();
    for eps in [0.5, 0.1, 0.05] {
        let mut dists = Vec::new();
        let mut gerr = Vec::new();
        for seed in 0..5 {
            let t = cloud(eps, 100, sub_seed(seed, 3));
            let r =
                recover_set(&t, 6, &FitOptions::default(), true, LossChoice::Transformed).unwrap();
            dists.push(set_distance(&hexagon(), &r.s_star).unwrap());
            gerr.push((r.fit.g_star.matrix() - truth.matrix()).norm());
        }
        dist_medians.push(median(dists));
        g_medians.push(median(gerr));
    }
    assert!(
        dist_medians.windows(2).all(|w| w[1] <= w[0]),
        "{dist_medians:?}"
    );
    assert!(g_medians.windows(2).all(|w| w[1] <= w[0]), "{g_medians:?}");
}

#[test]
fn small_noise_fit_has_real_zeros() {
    let t = cloud(0.02, 50, 4);
    let r = fit_g(&t, 6, &FitOptions::default()).unwrap();
    assert!(r.converged);
    // the fitted optimum is at least as good as the true set's generating matrix
    assert!(r.objective <= theta(&solve_g(&hexagon()).unwrap(), &t).unwrap());
    let z = extract_zeros(&r.g_star, 1).unwrap();
    assert!(z.max_imaginary() <= 1e-6);
    let bound = 1e-6 * (1.0 + r.g_star.matrix().norm());
    for p in &z.points {
        assert!(r.g_star.eval_phi(p).unwrap().norm() <= bound);
    }
}

#[test]
fn pipeline_is_deterministic() {
    let t = cloud(0.1, 40, 9);
    let opts = FitOptions {
        seed: 12,
        ..FitOptions::default()
    };
    let a = recover_set(&t, 6, &opts, true, LossChoice::Transformed).unwrap();
    let b = recover_set(&t, 6, &opts, true, LossChoice::Transformed).unwrap();
    assert_eq!(a.s_star, b.s_star);
    let la = assign_labels(&a.loss, &a.s_star, &t, 1).unwrap();
    let lb = assign_labels(&b.loss, &b.s_star, &t, 3).unwrap();
    assert_eq!(la.labels, lb.labels);
}

#[test]
fn converged_descents_end_at_vertices() {
    let t = cloud(0.1, 30, 21);
    let r = recover_set(&t, 6, &FitOptions::default(), true, LossChoice::Transformed).unwrap();
    let RecoveryLoss::Transformed(tl) = &r.loss else {
        unreachable!()
    };
    let a = assign_labels(&r.loss, &r.s_star, &t, 1).unwrap();
    for (j, p) in a.points.iter().enumerate() {
        if a.converged[j] {
            let (_, d) = vertex_label(&tl.z_of(p).unwrap());
            assert!(d <= 1e-4);
        }
    }
}

#[test]
fn labels_are_stable_under_tiny_perturbations() {
    let s = hexagon();
    let loss = RecoveryLoss::Transformed(finiteloss::loss::TransformedLoss::build(&s).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for u in s.points() {
        let v = u + DVector::from_fn(2, |_, _| rng.random_range(-0.05..0.05));
        let base = label_sample(&loss, &s, v.as_slice()).unwrap().0;
        for _ in 0..5 {
            let w = &v + DVector::from_fn(2, |_, _| rng.random_range(-5e-4..5e-4));
            assert_eq!(label_sample(&loss, &s, w.as_slice()).unwrap().0, base);
        }
    }
}

#[test]
fn descent_near_a_point_lands_on_its_vertex() {
    let s = hexagon();
    let tl = finiteloss::loss::TransformedLoss::build(&s).unwrap();
    let loss = RecoveryLoss::Transformed(tl.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (i, u) in s.points().iter().enumerate() {
        let v = u + DVector::from_fn(2, |_, _| rng.random_range(-0.05..0.05));
        let (label, dist, _) = label_sample(&loss, &s, v.as_slice()).unwrap();
        assert_eq!(label, i);
        assert!(dist <= 1e-5);
    }
}
