//! Divergences, binary and annealed MSE predictions, Fisher-Rao path lengths
//! and distance bounds for `N(0, 1)` against `N(0, 2)`.

use annealed_bregman::bregman::Loss;
use annealed_bregman::estimator::Allocation;
use annealed_bregman::exp_family::GaussianDiag;
use annealed_bregman::mixture::GaussianMixture;
use annealed_bregman::paths::{alpha_h, Endpoints, PathKind, PathSpec, Schedule};
use annealed_bregman::theory::{
    chi2_gaussian, fisher_rao_length, harmonic, hellinger2, mse_pred_annealed, mse_pred_binary, distance_bounds,
};

fn main() -> annealed_bregman::Result<()> {
    let (g0, g1) = (GaussianDiag::standard(1)?, GaussianDiag::isotropic(1, 0.0, 2.0)?);
    let (p0, p1) = (GaussianMixture::single(g0.clone()), GaussianMixture::single(g1.clone()));
    let n = 50_000.0;

    println!("chi2(p1 | p0) = {}", chi2_gaussian(&g1, &g0)?);
    println!("chi2(p0 | p1) = {}", chi2_gaussian(&g0, &g1)?);
    println!("H^2           = {:.6}", hellinger2(&g0, &g1)?);
    println!("harmonic      = {:.6}", harmonic(&p0, &p1, 0.5)?);
    for loss in Loss::ALL {
        println!("binary MSE {:<9} = {}", loss.name(), mse_pred_binary(loss, &p0, &p1, n, 1.0)?);
    }

    let ep = Endpoints::simply_unnormalized(g0.clone(), &g1)?;
    let lz = ep.log_z1();
    for kind in [
        PathKind::Geometric,
        PathKind::Arithmetic(Schedule::Vanilla),
        PathKind::Arithmetic(Schedule::OracleTrig { log_z1: lz }),
        PathKind::Optimal,
    ] {
        let spec = PathSpec::new(kind, ep.clone())?;
        let length = fisher_rao_length(&spec, 16)?;
        let annealed = mse_pred_annealed(&spec, 81, n as usize, Loss::Nce, Allocation::default())?;
        println!("{:<24} length = {length:.6}, K = 81 NCE MSE = {annealed}", kind.name());
    }
    let a = alpha_h(&g0, &g1)?;
    println!("16 alpha_H^2 = {:.6}", 16.0 * a * a);
    println!("bounds: {:?}", distance_bounds(&ep, n)?);
    Ok(())
}
