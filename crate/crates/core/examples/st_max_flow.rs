//! Approximate s-t max flow value by bisection, against Dinic.

use recflow::generate::{generate, Capacities, Family};
use recflow::oracle::exact_max_flow_st;
use recflow::{max_flow_value, RecursionConfig};

fn main() -> recflow::Result<()> {
    let config = RecursionConfig::with_seed(7);
    for (family, s, t) in [
        (Family::Grid2d { rows: 8, cols: 8 }, 0, 63),
        (Family::RandomGnm { n: 200, m: 800 }, 3, 150),
        (Family::ExpanderLike { n: 300, degree: 4 }, 0, 1),
    ] {
        let g = generate(&family, Capacities::Uniform { lo: 1.0, hi: 5.0 }, 7)?;
        let (value, sol) = max_flow_value(&g, s, t, 0.05, &config)?;
        let exact = exact_max_flow_st(&g, s, t)?.value;
        println!(
            "{family}: value {value:.4}  exact {exact:.4}  ratio {:.4}  cut bound {:.4}",
            exact / value,
            1.0 / sol.cut_ratio
        );
    }
    Ok(())
}
