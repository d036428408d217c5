//! Size and accuracy sweeps with log-log fits.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::driver::{build_approximator, recursive_approx_max_flow, RecursionConfig};
use crate::error::{FlowError, Result};
use crate::generate::{generate, random_demand, random_pair_demand, Capacities, Family};
use crate::graph::{DemandVector, Graph};
use crate::hierarchy::empirical_quality;
use crate::rng::derive_seed;

/// Demand used on each bench instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BenchDemand {
    /// Unit flow between a seeded random pair of vertices.
    #[default]
    St,
    /// Seeded random zero-sum demand on every vertex.
    Random,
}

impl FromStr for BenchDemand {
    type Err = FlowError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "st" => Ok(BenchDemand::St),
            "random" => Ok(BenchDemand::Random),
            other => Err(FlowError::domain(format!("unknown demand kind `{other}`"))),
        }
    }
}

impl BenchDemand {
    pub fn draw(self, n: usize, seed: u64) -> DemandVector {
        match self {
            BenchDemand::St => random_pair_demand(n, seed),
            BenchDemand::Random => random_demand(n, seed),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    /// Family name, sized per entry of `edges`.
    pub family: String,
    /// Target edge counts.
    pub edges: Vec<usize>,
    /// Runs per size; instance `i` uses seed `derive_seed(seed, i)`.
    pub runs: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub caps: Capacities,
    pub demand: BenchDemand,
    pub config: RecursionConfig,
    /// Demands sampled for `alpha_emp` on instances with at most 64 vertices; 0 skips it.
    pub alpha_trials: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            family: "grid2d".into(),
            edges: vec![2000, 4000, 8000, 16000],
            runs: 3,
            seed: 1,
            epsilon: 0.2,
            caps: Capacities::Unit,
            demand: BenchDemand::St,
            config: RecursionConfig::default(),
            alpha_trials: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub family: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub time_s: f64,
    pub iterations: usize,
    pub converged: bool,
    pub congestion: f64,
    pub cut_ratio: f64,
    pub epsilon_achieved: f64,
    pub alpha_emp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSeries {
    pub rows: Vec<BenchRow>,
    /// `(m, median seconds)` per size.
    pub medians: Vec<(usize, f64)>,
    /// Fitted exponent of time against `m`.
    pub slope: Option<f64>,
}

/// Least-squares slope of `ln y` against `ln x`. Needs two distinct
/// positive `x` values and positive `y` values.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn bench_one(g: &Graph, spec: &str, opts: &BenchOptions, seed: u64) -> Result<BenchRow> {
    let b = opts.demand.draw(g.n(), seed);
    let config = RecursionConfig { seed, ..opts.config };
    let start = Instant::now();
    let (sol, _) = recursive_approx_max_flow(g, opts.epsilon, &b, &config)?;
    let time_s = start.elapsed().as_secs_f64();
    let alpha_emp = if opts.alpha_trials > 0 && g.n() <= 64 {
        let (op, _) = build_approximator(g, &config)?;
        Some(empirical_quality(&op, g, opts.alpha_trials, seed)?)
    } else {
        None
    };
    Ok(BenchRow {
        family: spec.to_string(),
        n: g.n(),
        m: g.m(),
        seed,
        time_s,
        iterations: sol.iterations,
        converged: sol.converged,
        congestion: sol.flow_congestion,
        cut_ratio: sol.cut_ratio,
        epsilon_achieved: sol.epsilon_achieved,
        alpha_emp,
    })
}

/// Runs the sweep; `progress` sees each row as it finishes.
pub fn run_bench(opts: &BenchOptions, mut progress: impl FnMut(&BenchRow)) -> Result<BenchSeries> {
    if opts.runs == 0 || opts.edges.is_empty() {
        return Err(FlowError::domain("bench needs at least one size and one run"));
    }
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for &target in &opts.edges {
        let family = Family::with_edges(&opts.family, target)?;
        let spec = family.to_string();
        let mut times = Vec::new();
        let mut m = 0;
        for i in 0..opts.runs {
            let seed = derive_seed(opts.seed, i as u64);
            let g = generate(&family, opts.caps, seed)?;
            let row = bench_one(&g, &spec, opts, seed)?;
            progress(&row);
            m = row.m;
            times.push(row.time_s);
            rows.push(row);
        }
        medians.push((m, median(times)));
    }
    let xs: Vec<f64> = medians.iter().map(|&(m, _)| m as f64).collect();
    let ys: Vec<f64> = medians.iter().map(|&(_, t)| t).collect();
    Ok(BenchSeries {
        slope: loglog_slope(&xs, &ys),
        rows,
        medians,
    })
}

pub fn write_csv<W: Write>(rows: &[BenchRow], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "family,n,m,seed,time_s,iterations,converged,congestion,cut_ratio,epsilon_achieved,alpha_emp"
    )?;
    for r in rows {
        let alpha = r.alpha_emp.map(|a| a.to_string()).unwrap_or_default();
        writeln!(
            out,
            "\"{}\",{},{},{},{:.6},{},{},{},{},{},{}",
            r.family,
            r.n,
            r.m,
            r.seed,
            r.time_s,
            r.iterations,
            r.converged,
            r.congestion,
            r.cut_ratio,
            r.epsilon_achieved,
            alpha
        )?;
    }
    Ok(())
}

/// Mean top-level iterations per epsilon over the given instances, and the
/// fitted exponent `k` in `iterations ~ eps^-k`.
pub fn epsilon_sweep(
    instances: &[(Graph, DemandVector)],
    epsilons: &[f64],
    config: &RecursionConfig,
) -> Result<(Vec<(f64, f64)>, Option<f64>)> {
    if instances.is_empty() {
        return Err(FlowError::domain("epsilon sweep needs instances"));
    }
    let mut means = Vec::new();
    for &eps in epsilons {
        let mut total = 0usize;
        for (g, b) in instances {
            total += recursive_approx_max_flow(g, eps, b, config)?.0.iterations;
        }
        means.push((eps, total as f64 / instances.len() as f64));
    }
    let xs: Vec<f64> = means.iter().map(|&(e, _)| 1.0 / e).collect();
    let ys: Vec<f64> = means.iter().map(|&(_, i)| i.max(1.0)).collect();
    Ok((means.clone(), loglog_slope(&xs, &ys)))
}
