//! Simultaneous approximation of random vectors: max_j ||n alpha_j|| against N.
use intersective::recurrence::{scaling_experiment, AlphaSpec, ExperimentKind, ScalingSpec};

fn main() -> anyhow::Result<()> {
    let grid = [100, 1_000, 10_000, 100_000];
    for d in 1..=3 {
        let spec = ScalingSpec {
            kind: ExperimentKind::Kronecker,
            polys: vec![],
            alpha: AlphaSpec::Random { d, seed: 11 },
            require_nonzero: false,
        };
        let report = scaling_experiment(&spec, &grid)?;
        println!("d = {d}: slope {:.3} (expected about {:.3})", report.fitted_slope, -1.0 / d as f64);
        print!("{}", report.to_csv());
    }
    Ok(())
}
