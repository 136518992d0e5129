//! Loss landscapes against independent oracles.

use finiteloss::descent::{minimize, DescentOptions};
use finiteloss::generating::{solve_g, PointSet};
use finiteloss::loss::{loss_g, simplicial_loss, SimplicialLoss, TransformedLoss};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `prod_j ||x - u_j||^2`, which vanishes exactly on the set.
fn product_loss(s: &PointSet, x: &[f64]) -> f64 {
    let x = DVector::from_column_slice(x);
    s.points().iter().map(|u| (&x - u).norm_squared()).product()
}

#[test]
fn zero_sets_agree_with_product_loss_on_grids() {
    let sets = [
        PointSet::from_rows(&[vec![2.0, -1.0], vec![-1.0, 3.0], vec![-2.0, -2.0]]).unwrap(),
        PointSet::from_rows(&[
            vec![3.0, -1.0],
            vec![-1.0, 2.0],
            vec![2.0, 1.0],
            vec![-2.0, -1.0],
        ])
        .unwrap(),
        PointSet::from_rows(&[vec![5.0, -2.0], vec![4.0, 3.0]]).unwrap(),
    ];
    for s in &sets {
        let g = solve_g(s).unwrap();
        // integer grid containing every point of the set
        for i in -6..=6 {
            for j in -6..=6 {
                let x = [i as f64, j as f64];
                let fg = loss_g(&g, &x).unwrap().value;
                let prod = product_loss(s, &x);
                assert_eq!(
                    fg <= 1e-18,
                    prod == 0.0,
                    "disagree at {x:?}: {fg} vs {prod}"
                );
            }
        }
    }
}

#[test]
fn losses_separate_points_half_a_unit_away() {
    let s = PointSet::from_rows(&[vec![2.0, -1.0], vec![-1.0, 3.0], vec![-2.0, -2.0]]).unwrap();
    let g = solve_g(&s).unwrap();
    let tl = TransformedLoss::build(&s).unwrap();
    for u in s.points() {
        assert!(loss_g(&g, u.as_slice()).unwrap().value <= 1e-18);
        assert!(tl.value(u.as_slice()).unwrap() <= 1e-18);
        for dir in [[0.5, 0.0], [0.0, 0.5], [-0.5, 0.0], [0.0, -0.5]] {
            let x = [u[0] + dir[0], u[1] + dir[1]];
            assert!(loss_g(&g, &x).unwrap().value >= 1e-6);
            assert!(tl.value(&x).unwrap() >= 1e-6);
        }
    }
}

#[test]
fn simplicial_descent_finds_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..5 {
        let n = rng.random_range(1..=6);
        let a: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.4..1.8) * if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let loss = SimplicialLoss::new(DVector::from_vec(a)).unwrap();
        let vertices = loss.vertices();
        for _ in 0..200 {
            let x0 = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
            let r = minimize(
                |x| {
                    let e = loss.value_gradient(x.as_slice());
                    (e.value, e.gradient)
                },
                &x0,
                &DescentOptions::default(),
            );
            assert!(r.converged);
            let nearest = vertices
                .iter()
                .map(|v| (&r.x - v).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= 1e-6, "stopped {nearest} from the vertex set");
        }
    }
}

#[test]
fn transformed_descent_finds_vertices() {
    let sets = [
        PointSet::from_rows(&[vec![4.0, -2.0, 1.0], vec![-1.0, 3.0, -5.0]]).unwrap(),
        PointSet::from_rows(&[
            vec![2.0, 3.0],
            vec![-1.0, -2.0],
            vec![1.0, -3.0],
            vec![-2.0, 2.0],
        ])
        .unwrap(),
        PointSet::from_rows(&[
            vec![1.0, 1.0],
            vec![3.0, 2.0],
            vec![1.5, 2.5],
            vec![2.5, 3.0],
            vec![2.0, 1.5],
            vec![3.0, 1.0],
        ])
        .unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for s in &sets {
        let tl = TransformedLoss::build(s).unwrap();
        for _ in 0..200 {
            let x0 = DVector::from_fn(s.n(), |_, _| rng.random_range(-6.0..6.0));
            let r = minimize(
                |x| {
                    let e = tl.eval(x.as_slice()).unwrap();
                    (e.value, e.gradient)
                },
                &x0,
                &DescentOptions::default(),
            );
            if !r.converged {
                continue;
            }
            let z = tl.z_of(r.x.as_slice()).unwrap();
            let m = z.len();
            let to_origin = z.norm();
            let to_unit = (0..m)
                .map(|i| {
                    let mut e = DVector::zeros(m);
                    e[i] = 1.0;
                    (&z - e).norm()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(to_origin.min(to_unit) <= 1e-5);
        }
    }
}

#[test]
fn small_sets_ignore_the_pseudo_inverse_null_space() {
    let s = PointSet::from_rows(&[vec![4.0, -2.0, 1.0], vec![-1.0, 3.0, -5.0]]).unwrap();
    let tl = TransformedLoss::build(&s).unwrap();
    let pinv = tl.u_pinv().unwrap();
    // the null space of the 1 x 3 pseudo-inverse, from its cross products
    let w = DVector::from_vec(vec![pinv[(0, 0)], pinv[(0, 1)], pinv[(0, 2)]]);
    let basis = [
        w.cross(&DVector::from_vec(vec![1.0, 0.0, 0.0])),
        w.cross(&DVector::from_vec(vec![0.0, 0.0, 1.0])),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let x = DVector::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
        let shift =
            &basis[0] * rng.random_range(-5.0..5.0) + &basis[1] * rng.random_range(-5.0..5.0);
        let a = tl.value(x.as_slice()).unwrap();
        let b = tl.value((&x + shift).as_slice()).unwrap();
        assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
    }
}

proptest! {
    #[test]
    fn simplicial_loss_is_nonnegative(
        a in prop::collection::vec(prop_oneof![0.1f64..3.0, -3.0f64..-0.1], 1..6),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = a.iter().map(|_| rng.random_range(-4.0..4.0)).collect();
        let e = simplicial_loss(&a, &x).unwrap();
        prop_assert!(e.value >= 0.0);
    }

    #[test]
    fn transformed_loss_is_nonnegative_and_vanishes_on_its_set(
        seed in any::<u64>(), n in 1usize..4, k in 2usize..6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let Ok(s) = PointSet::from_rows(&rows) else { return Ok(()) };
        let Ok(tl) = TransformedLoss::build(&s) else { return Ok(()) };
        for u in s.points() {
            prop_assert!(tl.value(u.as_slice()).unwrap() <= 1e-18);
        }
        for _ in 0..10 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            prop_assert!(tl.value(&x).unwrap() >= 0.0);
            prop_assert!(loss_g(&solve_g(&s).unwrap(), &x).unwrap().value >= 0.0);
        }
    }
}
