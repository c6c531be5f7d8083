//! Geometric, arithmetic, q-mean and optimal paths between `N(0, 1)` and the
//! unnormalized `N(0, 0.25)`: the normalizer along each path and samples from
//! the midpoint.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use annealed_bregman::exp_family::GaussianDiag;
use annealed_bregman::paths::{discretize, Endpoints, PathKind, PathSpec, Schedule};

fn main() -> annealed_bregman::Result<()> {
    let ep = Endpoints::simply_unnormalized(GaussianDiag::standard(1)?, &GaussianDiag::isotropic(1, 0.0, 0.25)?)?;
    let lz = ep.log_z1();
    println!("log Z1 = {lz:.6}");

    let kinds = [
        PathKind::Geometric,
        PathKind::Arithmetic(Schedule::Vanilla),
        PathKind::Arithmetic(Schedule::Oracle { log_z1: lz }),
        PathKind::Arithmetic(Schedule::OracleTrig { log_z1: lz }),
        PathKind::Optimal,
    ];
    for kind in kinds {
        let spec = PathSpec::new(kind, ep.clone())?;
        let grid = discretize(&spec, 4)?;
        let log_z: Vec<String> = grid
            .points
            .iter()
            .map(|p| format!("{:.4}", p.log_z.unwrap_or(f64::NAN)))
            .collect();
        let mid = spec.point(0.5)?;
        let s = mid.sample(20_000, &mut ChaCha8Rng::seed_from_u64(1))?;
        let var = s.rows().map(|x| x[0] * x[0]).sum::<f64>() / s.len() as f64;
        println!("{:<24} log Z_t = [{}], midpoint variance ~ {var:.3}", kind.name(), log_z.join(", "));
    }

    // the power mean has no closed-form normalizer but can still be evaluated
    let qmean = PathSpec::new(PathKind::QMean { q: 0.5 }, ep)?;
    println!("q-mean log f_0.5(0.2) = {:.6}", qmean.point(0.5)?.log_f(&[0.2])?);
    Ok(())
}
