//! Sample ultra-sparsifiers of a small graph and measure how far their cuts drift.

use recflow::generate::{generate, Capacities, Family};
use recflow::sparsify::{edge_budget, measure_cut_distortion, ultra_sparsify, SparsifyParams};

fn main() -> recflow::Result<()> {
    let g = generate(
        &Family::RandomGnm { n: 10, m: 30 },
        Capacities::Uniform { lo: 1.0, hi: 10.0 },
        3,
    )?;
    let params = SparsifyParams::default();
    for kappa in [2.0, 4.0, 16.0] {
        let mut worst: f64 = 1.0;
        let mut kept = 0;
        for seed in 0..20 {
            let h = ultra_sparsify(&g, kappa, &params, seed)?;
            worst = worst.max(measure_cut_distortion(&g, &h.graph)?);
            kept += h.off_tree_count;
        }
        println!(
            "kappa {kappa:>4}: mean off-tree edges {:.1} (budget {:.0}), worst distortion {:.2}",
            kept as f64 / 20.0,
            edge_budget(kappa, g.m(), g.n(), params.oversample),
            worst
        );
    }
    Ok(())
}
