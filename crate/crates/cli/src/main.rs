use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ris_uav::bcd::Scheme;
use ris_uav::harness::{emit_csv, load_spec, run_experiment, ExperimentKind, ExperimentResult, ExperimentSpec};
use ris_uav::scenario::load_scenario;

/// Energy-efficiency optimization for RIS-assisted UAV downlinks.
#[derive(Debug, Parser)]
#[command(name = "ris-uav", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Scenario JSON; unset keys take the built-in defaults.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// First master seed (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when unset.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Relative-improvement threshold of the outer loop.
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    max_outer: Option<usize>,
    /// Write measured wall times instead of zeros.
    #[arg(long, global = true)]
    record_timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment spec or re-run a manifest.
    Run {
        #[arg(long)]
        spec: PathBuf,
    },
    /// One cell per seed at the scenario's K and M.
    Single {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// η versus the number of GUs at fixed M.
    SweepGus {
        #[arg(long, default_value_t = 60)]
        m: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 6, 8])]
        k: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// η versus the number of RIS elements at fixed K.
    SweepElements {
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [20, 40, 60, 80])]
        m: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive discretized search on a tiny instance, next to the
    /// proposed scheme.
    Oracle {
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 8)]
        theta_grid: usize,
        #[arg(long, default_value_t = 5)]
        placement_grid: usize,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Schemes run on the same instances; none to run the oracle alone.
        #[arg(long, value_delimiter = ',', default_values_t = [Scheme::Proposed])]
        schemes: Vec<Scheme>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Number of consecutive seeds starting at `--seed`.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, value_delimiter = ',', default_values_t = Scheme::ALL)]
    schemes: Vec<Scheme>,
}

fn seed_range(global: &Global, n: u64) -> Vec<u64> {
    let first = global.seed.unwrap_or(0);
    (first..first + n).collect()
}

fn base_spec(kind: ExperimentKind, global: &Global, seeds: u64, values: Vec<usize>) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new(kind, seed_range(global, seeds), values, "out");
    if let Some(p) = &global.scenario {
        spec.scenario = Some(load_scenario(p).with_context(|| format!("loading scenario {}", p.display()))?);
    }
    Ok(spec)
}

fn scenario_mut(spec: &mut ExperimentSpec) -> &mut ris_uav::scenario::Scenario {
    spec.scenario.get_or_insert_with(ris_uav::scenario::default_scenario)
}

fn build_spec(cli: &Cli) -> Result<ExperimentSpec> {
    let g = &cli.global;
    let mut spec = match &cli.command {
        Command::Run { spec } => {
            let mut s = load_spec(spec).with_context(|| format!("loading spec {}", spec.display()))?;
            if let Some(p) = &g.scenario {
                s.scenario_path = Some(p.clone());
            }
            if let Some(seed) = g.seed {
                s.seeds = vec![seed];
            }
            s.record_timing |= g.record_timing;
            s
        }
        Command::Single { k, m, common } => {
            let mut s = base_spec(ExperimentKind::Single, g, common.seeds, vec![])?;
            s.schemes = common.schemes.clone();
            let scn = scenario_mut(&mut s);
            if let Some(k) = k {
                scn.num_gus = *k;
            }
            if let Some(m) = m {
                scn.set_num_elements(*m);
            }
            s
        }
        Command::SweepGus { m, k, common } => {
            let mut s = base_spec(ExperimentKind::SweepGus, g, common.seeds, k.clone())?;
            s.schemes = common.schemes.clone();
            scenario_mut(&mut s).set_num_elements(*m);
            s
        }
        Command::SweepElements { k, m, common } => {
            let mut s = base_spec(ExperimentKind::SweepElements, g, common.seeds, m.clone())?;
            s.schemes = common.schemes.clone();
            scenario_mut(&mut s).num_gus = *k;
            s
        }
        Command::Oracle {
            m,
            k,
            theta_grid,
            placement_grid,
            seeds,
            schemes,
        } => {
            let mut s = base_spec(ExperimentKind::Oracle, g, *seeds, vec![*m])?;
            s.schemes = schemes.clone();
            s.oracle.theta_grid = *theta_grid;
            s.oracle.placement_grid = *placement_grid;
            scenario_mut(&mut s).num_gus = *k;
            s
        }
    };
    if !matches!(cli.command, Command::Run { .. }) {
        spec.record_timing = g.record_timing;
    }
    if let Some(out) = &g.out {
        spec.output_path = out.clone();
    }
    if let Some(d) = g.delta {
        spec.bcd.delta = d;
    }
    if let Some(n) = g.max_outer {
        spec.bcd.max_outer_iters = n;
    }
    Ok(spec)
}

fn summarize(result: &ExperimentResult) {
    let mut groups: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
    for r in &result.rows {
        groups.entry((r.sweep_value, r.scheme.clone())).or_default().push(r.eta);
    }
    println!("{:>6}  {:<13} {:>5}  {:>14}  {:>14}", "value", "scheme", "runs", "mean eta", "std eta");
    for ((value, scheme), etas) in &groups {
        let n = etas.len() as f64;
        let mean = etas.iter().sum::<f64>() / n;
        let var = if etas.len() > 1 {
            etas.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        println!("{value:>6}  {scheme:<13} {:>5}  {mean:>14.6e}  {:>14.6e}", etas.len(), var.sqrt());
    }
    for cell in &result.manifest.cells {
        for e in &cell.errors {
            eprintln!(
                "warning: cell (value {}, seed {}) {}: {}",
                cell.sweep_value, cell.seed, e.scheme, e.message
            );
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let spec = build_spec(&cli)?;
    let result = run_experiment(&spec, cli.global.workers)?;
    let path = emit_csv(&result, &spec.output_path)
        .with_context(|| format!("writing results to {}", spec.output_path.display()))?;
    summarize(&result);
    println!("wrote {}", path.display());
    Ok(())
}
