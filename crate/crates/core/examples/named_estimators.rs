//! Annealed importance sampling, bridge sampling, umbrella sampling and the
//! two-step estimator on one pair.

use annealed_bregman::estimator::{ais, bridge_sampling, two_step, umbrella_sampling, FinalSchedule, TwoStepBudget};
use annealed_bregman::exp_family::GaussianDiag;
use annealed_bregman::paths::{Endpoints, PathSpec};

fn main() -> annealed_bregman::Result<()> {
    let ep = Endpoints::simply_unnormalized(GaussianDiag::standard(5)?, &GaussianDiag::isotropic(5, 0.0, 0.6)?)?;
    let geometric = PathSpec::geometric(ep.clone());
    let mid = geometric.point(0.5)?;
    let n = 10_000;
    println!("true log Z1     = {:.6}", ep.log_z1());
    println!("AIS (K = 9)     = {:.6}", ais(&geometric, 9, n, 3)?.log_z1_hat);
    println!("bridge          = {:.6}", bridge_sampling(&ep, &mid, n, 3)?.log_z1_hat);
    println!("umbrella        = {:.6}", umbrella_sampling(&ep, &mid, n, 3)?.log_z1_hat);
    for schedule in [FinalSchedule::Oracle, FinalSchedule::OracleTrig] {
        let r = two_step(&ep, 9, n, 3, schedule, TwoStepBudget::FullEach)?;
        println!(
            "two-step {schedule:?}: pre-estimate {:.6}, final {:.6}",
            r.pre_estimate.unwrap_or(f64::NAN),
            r.log_z1_hat
        );
    }
    Ok(())
}
