//! SINR, sum-rate, power budget, energy efficiency and constraint checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, ComplexVec, ScatteringDraw};
use crate::error::{invalid, Result};
use crate::scenario::{hover_power_unchecked, Point, Scenario};

/// The four decision blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionState {
    pub onoff: Vec<bool>,
    pub phases: Vec<f64>,
    pub powers: Vec<f64>,
    pub uav_pos: Point,
}

impl SolutionState {
    pub fn check_dims(&self, scn: &Scenario) -> Result<()> {
        let m = scn.num_elements();
        if self.onoff.len() != m || self.phases.len() != m || self.powers.len() != scn.num_gus {
            return Err(invalid(format!(
                "solution dims (X {}, θ {}, P {}) do not match M = {m}, K = {}",
                self.onoff.len(),
                self.phases.len(),
                self.powers.len(),
                scn.num_gus
            )));
        }
        Ok(())
    }

    pub fn active_elements(&self) -> usize {
        self.onoff.iter().filter(|&&x| x).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub per_gu_rate: Vec<f64>,
    pub rate_feasible: Vec<bool>,
    pub power_sum: f64,
    pub power_feasible: bool,
    pub overall_feasible: bool,
}

/// Soft handling of the per-GU minimum-rate constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub weight: f64,
    pub epsilon: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            weight: 10.0,
            epsilon: 1e-12,
        }
    }
}

/// `γ_k = |C_k|² p_k / (|C_k|² Σ_{t≠k} p_t + σ²)`.
///
/// Interference reaches GU `k` through its own effective channel, so only
/// the total power of the other streams matters.
pub fn sinr(channels: &[Complex64], powers: &[f64], k: usize, noise: f64) -> f64 {
    let gain = channels[k].norm_sqr();
    let others: f64 = powers.iter().sum::<f64>() - powers[k];
    gain * powers[k] / (gain * others + noise)
}

/// Per-GU Shannon rates `B log2(1 + γ_k)`, bits/s.
pub fn per_gu_rates(channels: &[Complex64], powers: &[f64], bandwidth: f64, noise: f64) -> Vec<f64> {
    (0..channels.len())
        .map(|k| bandwidth * sinr(channels, powers, k, noise).ln_1p() / std::f64::consts::LN_2)
        .collect()
}

/// `R_t = B Σ_k log2(1 + γ_k)`.
pub fn sum_rate(channels: &[Complex64], powers: &[f64], bandwidth: f64, noise: f64) -> f64 {
    per_gu_rates(channels, powers, bandwidth, noise).iter().sum()
}

/// Rotor hovering power `sqrt((m g)³ / (2π r_p² n_p ρ))`, watts.
pub fn hover_power(
    mass_kg: f64,
    gravity: f64,
    prop_radius_m: f64,
    num_props: f64,
    air_density: f64,
) -> Result<f64> {
    for (name, v) in [
        ("mass", mass_kg),
        ("gravity", gravity),
        ("prop_radius", prop_radius_m),
        ("num_props", num_props),
        ("air_density", air_density),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(hover_power_unchecked(mass_kg, gravity, prop_radius_m, num_props, air_density))
}

fn total_power_parts(scn: &Scenario, powers: &[f64], active: usize) -> f64 {
    scn.hover_power()
        + powers.iter().sum::<f64>()
        + scn.gu_circuit_power * scn.num_gus as f64
        + scn.ru_power * active as f64
}

/// `P_t = p_h + Σ p_k + Σ p_k^c + p^r Σ x_m`.
pub fn total_power(solution: &SolutionState, scn: &Scenario) -> f64 {
    total_power_parts(scn, &solution.powers, solution.active_elements())
}

/// Everything an evaluation produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub per_gu_rate: Vec<f64>,
    pub sum_rate: f64,
    pub total_power: f64,
    pub eta: f64,
}

/// Precomputed channels for one UAV position; evaluates many `(θ, X, P)`
/// candidates without rebuilding steering vectors.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    scn: &'a Scenario,
    direct: Vec<Complex64>,
    cascade: Vec<ComplexVec>,
}

impl<'a> Evaluator<'a> {
    pub fn new(scn: &'a Scenario, scatter: &ScatteringDraw, uav_pos: Point) -> Result<Self> {
        let set = ChannelSet::build(scn, uav_pos, scatter)?;
        Ok(Self {
            scn,
            cascade: set.cascade(),
            direct: set.direct,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        self.scn
    }

    pub fn channels(&self, phases: &[f64], onoff: &[bool]) -> Vec<Complex64> {
        let rot: Vec<Option<Complex64>> = phases
            .iter()
            .zip(onoff)
            .map(|(&t, &on)| on.then(|| Complex64::from_polar(1.0, t)))
            .collect();
        self.direct
            .iter()
            .zip(&self.cascade)
            .map(|(&d, a)| {
                d + a
                    .iter()
                    .zip(&rot)
                    .filter_map(|(c, r)| r.map(|r| c * r))
                    .sum::<Complex64>()
            })
            .collect()
    }

    pub fn evaluate(&self, phases: &[f64], onoff: &[bool], powers: &[f64]) -> Evaluation {
        let channels = self.channels(phases, onoff);
        let per_gu_rate = per_gu_rates(&channels, powers, self.scn.bandwidth, self.scn.noise_power);
        let sum_rate = per_gu_rate.iter().sum();
        let active = onoff.iter().filter(|&&x| x).count();
        let total_power = total_power_parts(self.scn, powers, active);
        Evaluation {
            per_gu_rate,
            sum_rate,
            total_power,
            eta: sum_rate / total_power,
        }
    }

    pub fn fitness(&self, phases: &[f64], onoff: &[bool], powers: &[f64], penalty: &PenaltyConfig) -> f64 {
        let ev = self.evaluate(phases, onoff, powers);
        penalize(ev.eta, &ev.per_gu_rate, self.scn.min_rate, penalty)
    }
}

/// `η / (1 + w Σ_k deficit_k)` floored at `epsilon`, where `deficit_k` is
/// the relative shortfall of GU `k` below the minimum rate.
pub fn penalize(eta: f64, rates: &[f64], min_rate: f64, penalty: &PenaltyConfig) -> f64 {
    let deficit: f64 = if min_rate > 0.0 {
        rates
            .iter()
            .map(|&r| ((min_rate - r) / min_rate).max(0.0))
            .sum()
    } else {
        0.0
    };
    let f = if deficit > 0.0 {
        eta / (1.0 + penalty.weight * deficit)
    } else {
        eta
    };
    if f.is_finite() {
        f.max(penalty.epsilon)
    } else {
        penalty.epsilon
    }
}

/// Full evaluation of a solution, rebuilding channels at its UAV position.
pub fn evaluate(solution: &SolutionState, scatter: &ScatteringDraw, scn: &Scenario) -> Result<Evaluation> {
    solution.check_dims(scn)?;
    let ev = Evaluator::new(scn, scatter, solution.uav_pos)?;
    Ok(ev.evaluate(&solution.phases, &solution.onoff, &solution.powers))
}

/// `η = R_t / P_t`, bits per joule.
pub fn energy_efficiency(solution: &SolutionState, scatter: &ScatteringDraw, scn: &Scenario) -> Result<f64> {
    Ok(evaluate(solution, scatter, scn)?.eta)
}

const POWER_TOL: f64 = 1e-12;

pub fn check_constraints(
    solution: &SolutionState,
    scatter: &ScatteringDraw,
    scn: &Scenario,
) -> Result<ConstraintReport> {
    let ev = evaluate(solution, scatter, scn)?;
    let rate_feasible: Vec<bool> = ev.per_gu_rate.iter().map(|&r| r >= scn.min_rate).collect();
    let power_sum: f64 = solution.powers.iter().sum();
    let power_feasible = power_sum <= scn.max_power * (1.0 + POWER_TOL)
        && solution.powers.iter().all(|&p| p > 0.0);
    let overall_feasible = power_feasible && rate_feasible.iter().all(|&f| f);
    Ok(ConstraintReport {
        per_gu_rate: ev.per_gu_rate,
        rate_feasible,
        power_sum,
        power_feasible,
        overall_feasible,
    })
}

/// Nonnegative GA fitness: η when every rate constraint holds, otherwise
/// η shrunk by the relative rate deficit; never below `penalty.epsilon`.
pub fn penalized_fitness(
    solution: &SolutionState,
    scatter: &ScatteringDraw,
    scn: &Scenario,
    penalty: &PenaltyConfig,
) -> Result<f64> {
    if !(penalty.epsilon > 0.0) {
        return Err(invalid("penalty epsilon must be positive"));
    }
    let ev = evaluate(solution, scatter, scn)?;
    Ok(penalize(ev.eta, &ev.per_gu_rate, scn.min_rate, penalty))
}

/// Wraps a phase into `[0, 2π)`.
pub fn wrap_phase(t: f64) -> f64 {
    let w = t.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}
