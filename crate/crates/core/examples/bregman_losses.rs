//! One binary step with every loss: estimate `log Z1` of `N(0, 2)` from
//! `N(0, 1)` samples, paired seeds, and compare to the true value.

use annealed_bregman::bregman::{step_estimate, BregmanGenerator, Loss, StepTask};
use annealed_bregman::exp_family::GaussianDiag;
use annealed_bregman::paths::{Endpoints, PathSpec};

fn main() -> annealed_bregman::Result<()> {
    let ep = Endpoints::simply_unnormalized(GaussianDiag::standard(1)?, &GaussianDiag::isotropic(1, 0.0, 2.0)?)?;
    let spec = PathSpec::geometric(ep.clone());
    let (lower, upper) = (spec.point(0.0)?, spec.point(1.0)?);
    println!("true log Z1 = {:.6}", ep.log_z1());

    for loss in Loss::ALL {
        let task = StepTask { step: 0, lower: &lower, upper: &upper, n_lower: 5_000, n_upper: 5_000 };
        let ratios = task.log_ratios(7, 0)?;
        let generator = BregmanGenerator::new(loss, ratios.nu())?;
        let est = step_estimate(&generator, &ratios)?;
        println!("{:<9} beta = {:.6}  ({} iterations)", loss.name(), est.beta, est.iterations);
    }
    Ok(())
}
