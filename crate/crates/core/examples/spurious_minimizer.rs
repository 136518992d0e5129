//! The plain generating-system loss can trap gradient descent far from the
//! set. Two points in the plane are enough to see it.
//!
//! `cargo run --example spurious_minimizer`

use finiteloss::descent::{minimize, DescentOptions};
use finiteloss::generating::{solve_g, PointSet};
use finiteloss::linalg::min_eigenvalue_sym;
use finiteloss::loss::{loss_g, loss_g_hessian, TransformedLoss};
use nalgebra::DVector;

fn main() -> finiteloss::Result<()> {
    let s = PointSet::from_rows(&[vec![5.0, -2.0], vec![4.0, 3.0]])?;
    let g = solve_g(&s)?;
    let opts = DescentOptions {
        grad_tol: 1e-9,
        max_iter: 2000,
    };
    let start = DVector::from_vec(vec![-2.0, -50.0]);

    let r = minimize(
        |x| {
            let e = loss_g(&g, x.as_slice()).unwrap();
            (e.value, e.gradient)
        },
        &start,
        &opts,
    );
    let lmin = min_eigenvalue_sym(&loss_g_hessian(&g, r.x.as_slice())?)?;
    println!("f_G from (-2, -50):");
    println!(
        "  stopped at ({:.4}, {:.4}) with f = {:.4}",
        r.x[0], r.x[1], r.value
    );
    println!(
        "  |grad| = {:.1e}, smallest Hessian eigenvalue {lmin:.3}",
        r.grad_norm
    );

    let tl = TransformedLoss::build(&s)?;
    let r = minimize(
        |x| {
            let e = tl.eval(x.as_slice()).unwrap();
            (e.value, e.gradient)
        },
        &start,
        &opts,
    );
    println!("transformed loss from the same start:");
    println!(
        "  stopped at ({:.4}, {:.4}) with value {:.1e}",
        r.x[0], r.x[1], r.value
    );
    // with k <= n the loss only sees the component along the lifted simplex,
    // so it vanishes on the whole line through each point orthogonal to it
    println!("  lifted coordinate z = {:.6}", tl.z_of(r.x.as_slice())?[0]);
    Ok(())
}
