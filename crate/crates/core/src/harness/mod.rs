//! Experiment driver: single runs, the K and M sweeps, and the brute-force
//! oracle, with CSV and manifest output.
//!
//! A *cell* is one `(sweep_value, seed)` pair. GU positions and scattering
//! are drawn once per cell from the streams `(seed, "gus")` and
//! `(seed, "scatter")`, and every scheme in the cell runs on that same
//! instance. A scheme's own solver randomness comes from `(seed, name)`.

pub mod csv;
pub mod oracle;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bcd::{run_scheme, BcdConfig, BcdResult, Scheme};
use crate::channel::ScatteringDraw;
use crate::error::{invalid, Error, Result};
use crate::objective::PenaltyConfig;
use crate::optim::{AdamConfig, GaConfig};
use crate::scenario::{default_scenario, load_scenario, RngStream, Scenario};

pub use self::csv::{emit_csv, format_float, RESULTS_HEADER};
pub use self::oracle::{oracle_search, run_oracle, OracleConfig, OracleOutcome};

pub const ARTIFACT_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Scheme column value for oracle rows.
pub const ORACLE_SCHEME: &str = "oracle";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// One cell per seed at the scenario's own K and M; the row's
    /// `sweep_value` is K.
    Single,
    /// `sweep_values` are GU counts.
    SweepGus,
    /// `sweep_values` are element counts, factored near-square.
    SweepElements,
    /// `sweep_values` are element counts; each cell also runs the
    /// exhaustive discretized search.
    Oracle,
}

/// Solver settings shared by every cell. The binary GA flip probability
/// defaults to `1/M` of each cell when `onoff_flip_prob` is unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcdTemplate {
    pub delta: f64,
    pub max_outer_iters: usize,
    pub ga_phase: GaConfig,
    pub ga_onoff: GaConfig,
    pub onoff_flip_prob: Option<f64>,
    pub adam: AdamConfig,
    pub penalty: PenaltyConfig,
    pub p_min: f64,
}

impl Default for BcdTemplate {
    fn default() -> Self {
        let c = BcdConfig::for_elements(1);
        Self {
            delta: c.delta,
            max_outer_iters: c.max_outer_iters,
            ga_phase: c.ga_phase_cfg,
            ga_onoff: c.ga_onoff_cfg,
            onoff_flip_prob: None,
            adam: c.adam_cfg,
            penalty: c.penalty,
            p_min: c.p_min,
        }
    }
}

impl BcdTemplate {
    pub fn resolve(&self, m: usize) -> BcdConfig {
        let mut ga_onoff = self.ga_onoff.clone();
        ga_onoff.mutation_scale = self
            .onoff_flip_prob
            .unwrap_or_else(|| GaConfig::onoff_default(m).mutation_scale);
        BcdConfig {
            delta: self.delta,
            max_outer_iters: self.max_outer_iters,
            ga_phase_cfg: self.ga_phase.clone(),
            ga_onoff_cfg: ga_onoff,
            adam_cfg: self.adam.clone(),
            penalty: self.penalty,
            p_min: self.p_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Takes precedence over `scenario`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub sweep_values: Vec<usize>,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<Scheme>,
    pub output_path: PathBuf,
    #[serde(default)]
    pub bcd: BcdTemplate,
    #[serde(default)]
    pub oracle: OracleConfig,
    /// Write measured wall times. Off by default so that output files are
    /// byte-identical across repeated runs.
    #[serde(default)]
    pub record_timing: bool,
}

fn all_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, seeds: Vec<u64>, sweep_values: Vec<usize>, output_path: impl Into<PathBuf>) -> Self {
        Self {
            kind,
            scenario_path: None,
            scenario: None,
            seeds,
            sweep_values,
            schemes: all_schemes(),
            output_path: output_path.into(),
            bcd: BcdTemplate::default(),
            oracle: OracleConfig::default(),
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(invalid("experiment needs at least one seed"));
        }
        if self.kind != ExperimentKind::Single && self.sweep_values.is_empty() {
            return Err(invalid("sweep kinds need at least one sweep value"));
        }
        if self.kind == ExperimentKind::SweepGus && self.sweep_values.contains(&0) {
            return Err(invalid("GU counts must be positive"));
        }
        if self.kind != ExperimentKind::Oracle && self.schemes.is_empty() {
            return Err(invalid("experiment needs at least one scheme"));
        }
        let mut seen = self.schemes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.schemes.len() {
            return Err(invalid("schemes must not repeat"));
        }
        let mut vals = self.sweep_values.clone();
        vals.sort();
        vals.dedup();
        if vals.len() != self.sweep_values.len() {
            return Err(invalid("sweep values must not repeat"));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(invalid("seeds must not repeat"));
        }
        Ok(())
    }

    /// Base scenario before the sweep value is applied.
    pub fn base_scenario(&self) -> Result<Scenario> {
        let scn = match (&self.scenario_path, &self.scenario) {
            (Some(p), _) => load_scenario(p)?,
            (None, Some(s)) => s.clone(),
            (None, None) => default_scenario(),
        };
        scn.validate()?;
        Ok(scn)
    }

    /// Copy with the scenario inlined, suitable for a manifest.
    pub fn resolved(&self) -> Result<ExperimentSpec> {
        let mut out = self.clone();
        out.scenario = Some(self.base_scenario()?);
        out.scenario_path = None;
        Ok(out)
    }

    fn values(&self, base: &Scenario) -> Vec<usize> {
        match self.kind {
            ExperimentKind::Single => vec![base.num_gus],
            _ => self.sweep_values.clone(),
        }
    }

    fn cell_scenario(&self, base: &Scenario, value: usize) -> Scenario {
        let mut s = base.clone();
        match self.kind {
            ExperimentKind::Single => {}
            ExperimentKind::SweepGus => s.num_gus = value,
            ExperimentKind::SweepElements | ExperimentKind::Oracle => s.set_num_elements(value),
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub sweep_value: usize,
    pub seed: u64,
    pub eta: f64,
    pub sum_rate: f64,
    pub total_power: f64,
    pub outer_iters: usize,
    pub wall_time_s: f64,
    /// `η` after each outer iteration, initial point first. Empty for
    /// oracle rows.
    pub eta_trace: Vec<f64>,
}

fn scheme_rank(name: &str) -> usize {
    Scheme::ALL.iter().position(|s| s.name() == name).unwrap_or(Scheme::ALL.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub scheme: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub sweep_value: usize,
    pub seed: u64,
    /// SHA-256 of the GU coordinates, little-endian `f64` pairs.
    pub gu_digest: String,
    /// SHA-256 of the scattering draw, little-endian `(re, im)` pairs.
    pub scatter_digest: String,
    pub errors: Vec<CellError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub spec: ExperimentSpec,
    pub cells: Vec<CellRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub manifest: Manifest,
}

/// Per-cell instance shared by all schemes of that cell.
#[derive(Debug, Clone)]
pub struct CellInstance {
    pub sweep_value: usize,
    pub seed: u64,
    pub scenario: Scenario,
    pub scatter: ScatteringDraw,
}

/// Draws the instance for one `(sweep_value, seed)` cell.
pub fn cell_instance(base: &Scenario, spec: &ExperimentSpec, value: usize, seed: u64) -> Result<CellInstance> {
    let scn = spec.cell_scenario(base, value);
    let scn = scn.with_sampled_gus(&RngStream::new(seed, "gus"))?;
    let scatter = ScatteringDraw::sample(&RngStream::new(seed, "scatter"), scn.num_gus, scn.num_elements());
    Ok(CellInstance {
        sweep_value: value,
        seed,
        scenario: scn,
        scatter,
    })
}

pub fn digest_gus(scn: &Scenario) -> String {
    let mut h = Sha256::new();
    for p in &scn.gu_positions {
        h.update(p.x.to_le_bytes());
        h.update(p.y.to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn digest_scatter(sc: &ScatteringDraw) -> String {
    let mut h = Sha256::new();
    for z in sc.direct.iter().chain(sc.ris_gu.iter().flatten()) {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn bcd_row(scheme: Scheme, cell: &CellInstance, r: &BcdResult, timing: bool) -> ResultRow {
    ResultRow {
        scheme: scheme.name().to_string(),
        sweep_value: cell.sweep_value,
        seed: cell.seed,
        eta: *r.eta_trace.last().expect("trace holds the initial point"),
        sum_rate: r.sum_rate,
        total_power: r.total_power,
        outer_iters: r.outer_iters_used,
        wall_time_s: if timing { r.wall_time } else { 0.0 },
        eta_trace: r.eta_trace.clone(),
    }
}

enum Task {
    Bcd(Scheme),
    Oracle,
}

impl Task {
    fn name(&self) -> &str {
        match self {
            Task::Bcd(s) => s.name(),
            Task::Oracle => ORACLE_SCHEME,
        }
    }
}

fn run_task(task: &Task, cell: &CellInstance, spec: &ExperimentSpec) -> Result<ResultRow> {
    match task {
        Task::Bcd(scheme) => {
            let cfg = spec.bcd.resolve(cell.scenario.num_elements());
            let r = run_scheme(*scheme, &cell.scenario, &cell.scatter, &cfg, &RngStream::new(cell.seed, scheme.name()))?;
            Ok(bcd_row(*scheme, cell, &r, spec.record_timing))
        }
        Task::Oracle => {
            let start = std::time::Instant::now();
            let out = oracle_search(&cell.scenario, &cell.scatter, &spec.oracle)?;
            Ok(ResultRow {
                scheme: ORACLE_SCHEME.to_string(),
                sweep_value: cell.sweep_value,
                seed: cell.seed,
                eta: out.eta,
                sum_rate: out.sum_rate,
                total_power: out.total_power,
                outer_iters: 0,
                wall_time_s: if spec.record_timing { start.elapsed().as_secs_f64() } else { 0.0 },
                eta_trace: Vec::new(),
            })
        }
    }
}

/// Runs every `(scheme, sweep_value, seed)` triple of `spec` on up to
/// `workers` threads (all cores when `None`).
///
/// A failing cell is recorded in the manifest and yields no rows; other
/// cells still run. Rows come back sorted by scheme, sweep value, seed.
pub fn run_experiment(spec: &ExperimentSpec, workers: Option<usize>) -> Result<ExperimentResult> {
    spec.validate()?;
    let resolved = spec.resolved()?;
    let base = resolved.scenario.clone().expect("resolved spec has a scenario");

    let mut cells = Vec::new();
    let mut records = Vec::new();
    for &value in &spec.values(&base) {
        for &seed in &spec.seeds {
            match cell_instance(&base, spec, value, seed) {
                Ok(c) => {
                    records.push(CellRecord {
                        sweep_value: value,
                        seed,
                        gu_digest: digest_gus(&c.scenario),
                        scatter_digest: digest_scatter(&c.scatter),
                        errors: Vec::new(),
                    });
                    cells.push(Some(c));
                }
                Err(e) => {
                    records.push(CellRecord {
                        sweep_value: value,
                        seed,
                        gu_digest: String::new(),
                        scatter_digest: String::new(),
                        errors: vec![CellError {
                            scheme: "instance".into(),
                            message: e.to_string(),
                        }],
                    });
                    cells.push(None);
                }
            }
        }
    }

    let mut tasks: Vec<Task> = spec.schemes.iter().map(|&s| Task::Bcd(s)).collect();
    if spec.kind == ExperimentKind::Oracle {
        tasks.push(Task::Oracle);
    }
    let jobs: Vec<(usize, &Task)> = (0..cells.len())
        .filter(|&i| cells[i].is_some())
        .flat_map(|i| tasks.iter().map(move |t| (i, t)))
        .collect();

    let run = || -> Vec<(usize, String, Result<ResultRow>)> {
        jobs.par_iter()
            .map(|&(i, t)| {
                let cell = cells[i].as_ref().expect("filtered above");
                (i, t.name().to_string(), run_task(t, cell, spec))
            })
            .collect()
    };
    let outcomes = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mut rows = Vec::new();
    for (i, name, out) in outcomes {
        match out {
            Ok(r) => rows.push(r),
            Err(e) => records[i].errors.push(CellError {
                scheme: name,
                message: e.to_string(),
            }),
        }
    }
    rows.sort_by(|a, b| {
        (scheme_rank(&a.scheme), a.sweep_value, a.seed).cmp(&(scheme_rank(&b.scheme), b.sweep_value, b.seed))
    });
    for rec in &mut records {
        rec.errors.sort_by_key(|e| scheme_rank(&e.scheme));
    }

    Ok(ExperimentResult {
        rows,
        manifest: Manifest {
            artifact_version: ARTIFACT_VERSION.to_string(),
            spec: resolved,
            cells: records,
        },
    })
}

/// Reads either an [`ExperimentSpec`] or a [`Manifest`]; for a manifest the
/// embedded resolved spec is returned.
pub fn parse_spec_or_manifest(text: &str) -> std::result::Result<ExperimentSpec, serde_json::Error> {
    match serde_json::from_str::<ExperimentSpec>(text) {
        Ok(s) => Ok(s),
        Err(spec_err) => serde_json::from_str::<Manifest>(text).map(|m| m.spec).map_err(|_| spec_err),
    }
}

pub fn load_spec(path: impl AsRef<std::path::Path>) -> Result<ExperimentSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_spec_or_manifest(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}
