//! The annealed Bregman estimator along several paths, with the NCE loss and
//! a total budget of 10 000 samples.

use annealed_bregman::bregman::Loss;
use annealed_bregman::estimator::{abe_log_z, AbeConfig, Allocation};
use annealed_bregman::exp_family::GaussianDiag;
use annealed_bregman::paths::{Endpoints, PathSpec, Schedule};

fn main() -> annealed_bregman::Result<()> {
    let ep = Endpoints::simply_unnormalized(GaussianDiag::standard(10)?, &GaussianDiag::isotropic(10, 0.0, 0.25)?)?;
    println!("true log Z1 = {:.6}", ep.log_z1());

    let paths = [
        ("geometric", PathSpec::geometric(ep.clone())),
        ("arithmetic", PathSpec::arithmetic(Schedule::Vanilla, ep.clone())),
        ("arithmetic_oracle_trig", PathSpec::arithmetic(Schedule::OracleTrig { log_z1: ep.log_z1() }, ep.clone())),
    ];
    for (name, path) in paths {
        for k in [1, 3, 9] {
            let config = AbeConfig::new(path.clone(), k, 10_000, Loss::Nce, 42);
            let r = abe_log_z(&config)?;
            println!("{name:<24} K = {k}: log Z1 ~ {:.6}", r.log_z1_hat);
        }
    }

    // one-sided losses can spend the whole step budget on their class
    let config = AbeConfig::new(PathSpec::geometric(ep), 9, 10_000, Loss::Is, 42)
        .with_allocation(Allocation::PerLoss { nu: 1.0 });
    println!("geometric IS (per-loss allocation): {:.6}", abe_log_z(&config)?.log_z1_hat);
    Ok(())
}
