//! Alternating optimization over the three variable blocks, plus the two
//! baseline schemes.
//!
//! One outer iteration runs, in order, the continuous GA over `(θ, P)`, the
//! binary GA over `X` and Adam over `W_U`, each with the other blocks held
//! fixed. A block's output replaces the incumbent only if neither the
//! penalized fitness nor `η` decreases, which keeps the `η` trace monotone
//! under stochastic inner solvers. The loop stops once the relative gain of
//! an outer iteration drops below `delta`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ScatteringDraw;
use crate::error::{invalid, Error, Result};
use crate::objective::{check_constraints, ConstraintReport, Evaluator, PenaltyConfig, SolutionState};
use crate::optim::{adam_maximize, ga_binary_run, ga_continuous_run, repair_power, AdamConfig, GaConfig};
use crate::optim::{GenomeLayout, PowerBounds};
use crate::scenario::{RngStream, Scenario};

/// Optimization schemes compared in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// All four blocks optimized.
    Proposed,
    /// Phases drawn once at random, all elements on.
    RandomPhase,
    /// RIS switched off entirely.
    NoRis,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::RandomPhase, Scheme::NoRis];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::RandomPhase => "random-phase",
            Scheme::NoRis => "no-ris",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| invalid(format!("unknown scheme `{s}` (proposed, random-phase, no-ris)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcdConfig {
    /// Relative-improvement threshold of the termination test.
    pub delta: f64,
    pub max_outer_iters: usize,
    pub ga_phase_cfg: GaConfig,
    pub ga_onoff_cfg: GaConfig,
    pub adam_cfg: AdamConfig,
    pub penalty: PenaltyConfig,
    /// Lower bound on each transmit power, watts.
    pub p_min: f64,
}

impl BcdConfig {
    pub fn for_elements(m: usize) -> Self {
        Self {
            delta: 1e-3,
            max_outer_iters: 20,
            ga_phase_cfg: GaConfig::phase_default(),
            ga_onoff_cfg: GaConfig::onoff_default(m),
            adam_cfg: AdamConfig::default(),
            penalty: PenaltyConfig::default(),
            p_min: 1e-6,
        }
    }

    pub fn for_scenario(scn: &Scenario) -> Self {
        Self::for_elements(scn.num_elements())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        self.ga_onoff_cfg.validate_binary()
    }

    fn validate_common(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(invalid("delta must be positive"));
        }
        if self.max_outer_iters < 1 {
            return Err(invalid("max_outer_iters must be at least 1"));
        }
        if !(self.penalty.epsilon > 0.0) {
            return Err(invalid("penalty epsilon must be positive"));
        }
        self.ga_phase_cfg.validate_continuous()?;
        self.adam_cfg.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcdResult {
    pub best: SolutionState,
    /// `η` of the initial point followed by `η` after every outer iteration.
    pub eta_trace: Vec<f64>,
    pub outer_iters_used: usize,
    pub constraint_report: ConstraintReport,
    pub sum_rate: f64,
    pub total_power: f64,
    /// Seconds.
    pub wall_time: f64,
}

/// All elements on, zero phases, equal power split, UAV at its initial
/// position.
pub fn default_init(scn: &Scenario) -> SolutionState {
    let m = scn.num_elements();
    SolutionState {
        onoff: vec![true; m],
        phases: vec![0.0; m],
        powers: vec![scn.max_power / scn.num_gus as f64; scn.num_gus],
        uav_pos: scn.uav_initial_position,
    }
}

#[derive(Debug, Clone, Copy)]
struct Plan {
    phases: bool,
    onoff: bool,
}

struct Incumbent {
    sol: SolutionState,
    fitness: f64,
    eta: f64,
}

fn score(scn: &Scenario, scatter: &ScatteringDraw, sol: &SolutionState, penalty: &PenaltyConfig) -> Result<(f64, f64)> {
    let ev = Evaluator::new(scn, scatter, sol.uav_pos)?;
    let e = ev.evaluate(&sol.phases, &sol.onoff, &sol.powers);
    let f = crate::objective::penalize(e.eta, &e.per_gu_rate, scn.min_rate, penalty);
    Ok((f, e.eta))
}

impl Incumbent {
    fn offer(&mut self, cand: SolutionState, scn: &Scenario, scatter: &ScatteringDraw, penalty: &PenaltyConfig) -> Result<bool> {
        let (f, eta) = score(scn, scatter, &cand, penalty)?;
        if f >= self.fitness && eta >= self.eta {
            *self = Incumbent { sol: cand, fitness: f, eta };
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

fn run_bcd(
    scn: &Scenario,
    scatter: &ScatteringDraw,
    init: &SolutionState,
    cfg: &BcdConfig,
    rng: &RngStream,
    plan: Plan,
) -> Result<BcdResult> {
    let start = Instant::now();
    if plan.onoff {
        cfg.validate()?;
    } else {
        cfg.validate_common()?;
    }
    scn.validate()?;
    init.check_dims(scn)?;
    scatter.check_dims(scn.num_gus, scn.num_elements())?;
    let bounds = PowerBounds {
        p_max: scn.max_power,
        p_min: cfg.p_min,
    };
    let mut start_sol = init.clone();
    start_sol.powers = repair_power(&init.powers, bounds.p_max, bounds.p_min)
        .map_err(|e| invalid(format!("initial solution cannot be made feasible: {e}")))?;
    start_sol.phases.iter_mut().for_each(|t| *t = crate::objective::wrap_phase(*t));

    let (fitness, eta) = score(scn, scatter, &start_sol, &cfg.penalty)?;
    let mut inc = Incumbent {
        sol: start_sol,
        fitness,
        eta,
    };
    let mut eta_trace = vec![inc.eta];
    let m = scn.num_elements();
    let k = scn.num_gus;
    let mut outer = 0;

    while outer < cfg.max_outer_iters {
        outer += 1;
        let it = rng.substream(format_args!("outer{outer}"));
        let prev = inc.eta;

        // (θ, P) with X and W_U fixed.
        {
            let ev = Evaluator::new(scn, scatter, inc.sol.uav_pos)?;
            let layout = GenomeLayout {
                phases: if plan.phases { m } else { 0 },
                powers: k,
            };
            let mut seed = if plan.phases { inc.sol.phases.clone() } else { Vec::new() };
            seed.extend_from_slice(&inc.sol.powers);
            let fixed = &inc.sol;
            let out = ga_continuous_run(
                |g| {
                    let (theta, p) = layout.split(g);
                    let theta = if plan.phases { theta } else { &fixed.phases };
                    Ok(ev.fitness(theta, &fixed.onoff, p, &cfg.penalty))
                },
                layout,
                bounds,
                &cfg.ga_phase_cfg,
                &it,
                &[seed],
            )?;
            let (theta, p) = layout.split(&out.best);
            let mut cand = inc.sol.clone();
            if plan.phases {
                cand.phases = theta.to_vec();
            }
            cand.powers = p.to_vec();
            inc.offer(cand, scn, scatter, &cfg.penalty)?;
        }

        // X with (θ, P, W_U) fixed.
        if plan.onoff {
            let ev = Evaluator::new(scn, scatter, inc.sol.uav_pos)?;
            let fixed = &inc.sol;
            let out = ga_binary_run(
                |x| Ok(ev.fitness(&fixed.phases, x, &fixed.powers, &cfg.penalty)),
                m,
                &cfg.ga_onoff_cfg,
                &it,
                &[inc.sol.onoff.clone()],
            )?;
            let mut cand = inc.sol.clone();
            cand.onoff = out.best;
            inc.offer(cand, scn, scatter, &cfg.penalty)?;
        }

        // W_U with (X, θ, P) fixed. A step into degenerate geometry just
        // forfeits this block.
        {
            let fixed = &inc.sol;
            let placed = adam_maximize(
                |w| {
                    let ev = Evaluator::new(scn, scatter, w)?;
                    Ok(ev.fitness(&fixed.phases, &fixed.onoff, &fixed.powers, &cfg.penalty))
                },
                inc.sol.uav_pos,
                &cfg.adam_cfg,
            );
            match placed {
                Ok(out) => {
                    let mut cand = inc.sol.clone();
                    cand.uav_pos = out.best;
                    inc.offer(cand, scn, scatter, &cfg.penalty)?;
                }
                Err(Error::DegenerateGeometry(_)) | Err(Error::Numeric(_)) => {}
                Err(e) => return Err(e),
            }
        }

        eta_trace.push(inc.eta);
        let gain = (inc.eta - prev) / prev.max(f64::MIN_POSITIVE);
        if gain < cfg.delta {
            break;
        }
    }

    let ev = Evaluator::new(scn, scatter, inc.sol.uav_pos)?;
    let e = ev.evaluate(&inc.sol.phases, &inc.sol.onoff, &inc.sol.powers);
    let constraint_report = check_constraints(&inc.sol, scatter, scn)?;
    Ok(BcdResult {
        best: inc.sol,
        eta_trace,
        outer_iters_used: outer,
        constraint_report,
        sum_rate: e.sum_rate,
        total_power: e.total_power,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Optimizes all four blocks starting from `init`.
pub fn optimize(
    scn: &Scenario,
    scatter: &ScatteringDraw,
    init: &SolutionState,
    cfg: &BcdConfig,
    rng: &RngStream,
) -> Result<BcdResult> {
    run_bcd(scn, scatter, init, cfg, rng, Plan { phases: true, onoff: true })
}

/// Direct link only: every element off, so there is no RIS power either.
/// Powers and placement are optimized.
pub fn baseline_no_ris(scn: &Scenario, scatter: &ScatteringDraw, cfg: &BcdConfig, rng: &RngStream) -> Result<BcdResult> {
    let mut init = default_init(scn);
    init.onoff.fill(false);
    run_bcd(scn, scatter, &init, cfg, rng, Plan { phases: false, onoff: false })
}

/// Phases drawn uniformly once from `rng` and frozen, all elements on;
/// powers and placement are optimized.
pub fn baseline_random_phase(
    scn: &Scenario,
    scatter: &ScatteringDraw,
    cfg: &BcdConfig,
    rng: &RngStream,
) -> Result<BcdResult> {
    let mut init = default_init(scn);
    let mut gen = rng.substream("phases").rng();
    init.phases = (0..scn.num_elements()).map(|_| gen.random::<f64>() * 2.0 * PI).collect();
    run_bcd(scn, scatter, &init, cfg, rng, Plan { phases: false, onoff: false })
}

/// Dispatches on `scheme` with the default initial point.
pub fn run_scheme(
    scheme: Scheme,
    scn: &Scenario,
    scatter: &ScatteringDraw,
    cfg: &BcdConfig,
    rng: &RngStream,
) -> Result<BcdResult> {
    match scheme {
        Scheme::Proposed => optimize(scn, scatter, &default_init(scn), cfg, rng),
        Scheme::RandomPhase => baseline_random_phase(scn, scatter, cfg, rng),
        Scheme::NoRis => baseline_no_ris(scn, scatter, cfg, rng),
    }
}
