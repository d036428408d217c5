//! A small runtime sweep on grids plus the iteration count against epsilon.

use recflow::bench::{epsilon_sweep, run_bench, BenchOptions};
use recflow::generate::{generate, random_demand, Capacities, Family};

fn main() -> recflow::Result<()> {
    let opts = BenchOptions {
        edges: vec![1000, 2000, 4000],
        runs: 2,
        caps: Capacities::Uniform { lo: 1.0, hi: 10.0 },
        ..Default::default()
    };
    let series = run_bench(&opts, |r| {
        println!("{} m={} {:.3}s iterations {}", r.family, r.m, r.time_s, r.iterations)
    })?;
    println!("runtime slope {:.3}", series.slope.unwrap_or(f64::NAN));

    let instances: Vec<_> = (0..3)
        .map(|seed| {
            let g = generate(&Family::Grid2d { rows: 12, cols: 12 }, Capacities::Unit, seed)?;
            let b = random_demand(g.n(), seed);
            Ok((g, b))
        })
        .collect::<recflow::Result<_>>()?;
    let (means, exponent) = epsilon_sweep(&instances, &[0.4, 0.2, 0.1, 0.05], &opts.config)?;
    for (eps, it) in means {
        println!("eps {eps}: {it:.0} iterations");
    }
    println!("iterations ~ eps^-{:.2}", exponent.unwrap_or(f64::NAN));
    Ok(())
}
