//! Exact optimum congestion versus the best cut found by enumeration.

use recflow::generate::{generate, random_demand, Capacities, Family};
use recflow::oracle::{brute_force_min_ratio_cut, exact_max_flow_st, exact_opt_congestion};

fn main() -> recflow::Result<()> {
    let caps = Capacities::Uniform { lo: 0.1, hi: 10.0 };
    for seed in 0..5 {
        let g = generate(&Family::RandomGnm { n: 10, m: 20 }, caps, seed)?;
        let b = random_demand(g.n(), seed);
        let opt = exact_opt_congestion(&g, &b)?;
        let (cut, ratio) = brute_force_min_ratio_cut(&g, &b)?;
        println!(
            "seed {seed}: opt {:.6}  best cut {:.6}  cut side {:?}",
            opt.value,
            ratio,
            cut.vertices()
        );
    }

    let grid = generate(&Family::Grid2d { rows: 5, cols: 5 }, Capacities::Unit, 0)?;
    let st = exact_max_flow_st(&grid, 0, 24)?;
    println!("corner to corner on a 5x5 grid: {}", st.value);
    Ok(())
}
