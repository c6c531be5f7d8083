//! Diagonal Gaussians as an exponential family: natural parameters, the
//! log-partition function, its Hessian and the strong convexity constants
//! along a segment.

use annealed_bregman::exp_family::{
    hessian_log_partition, log_partition, mean_params, strong_constants, GaussianDiag, SimplyUnnormalizedModel,
};

fn main() -> annealed_bregman::Result<()> {
    let p0 = GaussianDiag::standard(2)?;
    let p1 = GaussianDiag::new(vec![1.0, -0.5], vec![2.0, 0.5])?;
    let (t0, t1) = (p0.natural_params(), p1.natural_params());

    println!("theta1 = {:?}", t1.as_slice());
    println!("A(theta1) = {:.6}", log_partition(&t1));
    println!("E[t(x)] = {:?}", mean_params(&t1));
    println!("distance = {:.6}", t0.distance(&t1));

    let h = hessian_log_partition(&t1);
    println!("Hessian eigenvalues (per coordinate) = {:?}", h.eigenvalues());

    let (m, l) = strong_constants(&t0, &t1, 101)?;
    println!("M = {m:.6}, L = {l:.6}");

    let f1 = SimplyUnnormalizedModel::from_gaussian(&p1);
    let x = [0.3, 0.1];
    println!(
        "log f1(x) = {:.6}, log p1(x) = {:.6}, log Z1 = {:.6}",
        f1.log_density_unnormalized(&x)?,
        p1.log_density(&x)?,
        f1.log_normalizer()
    );
    Ok(())
}
