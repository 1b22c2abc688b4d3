//! Genetic algorithms with fitness-proportional selection.
//!
//! Each generation draws `2L` parents from the roulette wheel, pairs them
//! at random, replaces each pair by its two offspring and mutates every
//! offspring. The offspring form the whole next population; with elitism on,
//! the best individual seen so far replaces the worst offspring whenever no
//! offspring matches it.
//!
//! Randomness is split per purpose: one stream per generation for selection
//! and pairing, one per `(generation, pair)` for crossover and mutation.
//! Results therefore depend only on the configuration and the stream, never
//! on evaluation order.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::objective::wrap_phase;
use crate::scenario::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    /// `L`; the population holds `2L` individuals.
    pub pop_pairs: usize,
    pub generations: usize,
    /// Gaussian σ in radians for phases (continuous GA), or the per-bit flip
    /// probability (binary GA).
    pub mutation_scale: f64,
    /// Gaussian σ for power genes as a fraction of `P_max`.
    pub power_mutation_scale: f64,
    pub elitism: bool,
    pub rng_label: String,
}

impl GaConfig {
    /// Defaults for the phase/power block.
    pub fn phase_default() -> Self {
        Self {
            pop_pairs: 25,
            generations: 100,
            mutation_scale: 0.15,
            power_mutation_scale: 0.002,
            elitism: true,
            rng_label: "ga-phase".into(),
        }
    }

    /// Defaults for the On–Off block with `m` elements: flip probability
    /// `1/m`, capped at one half.
    pub fn onoff_default(m: usize) -> Self {
        Self {
            pop_pairs: 25,
            generations: 60,
            mutation_scale: (1.0 / m.max(1) as f64).min(0.5),
            power_mutation_scale: 0.0,
            elitism: true,
            rng_label: "ga-onoff".into(),
        }
    }

    fn validate_common(&self) -> Result<()> {
        if self.pop_pairs < 1 {
            return Err(invalid("pop_pairs must be at least 1"));
        }
        if self.generations < 1 {
            return Err(invalid("generations must be at least 1"));
        }
        Ok(())
    }

    pub fn validate_continuous(&self) -> Result<()> {
        self.validate_common()?;
        if !(self.mutation_scale > 0.0 && self.mutation_scale.is_finite()) {
            return Err(invalid("phase mutation scale must be positive"));
        }
        if !(self.power_mutation_scale > 0.0 && self.power_mutation_scale.is_finite()) {
            return Err(invalid("power mutation scale must be positive"));
        }
        Ok(())
    }

    /// A flip probability of exactly 0 is accepted so that a frozen
    /// population can be observed.
    pub fn validate_binary(&self) -> Result<()> {
        self.validate_common()?;
        if !(0.0..1.0).contains(&self.mutation_scale) {
            return Err(invalid("flip probability must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBounds {
    pub p_max: f64,
    pub p_min: f64,
}

/// A real genome is `phases` wrapped angles followed by `powers` watts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenomeLayout {
    pub phases: usize,
    pub powers: usize,
}

impl GenomeLayout {
    pub fn len(&self) -> usize {
        self.phases + self.powers
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn split<'g>(&self, genome: &'g [f64]) -> (&'g [f64], &'g [f64]) {
        genome.split_at(self.phases)
    }

    /// Wraps the phase part and repairs the power part in place.
    pub fn normalize(&self, genome: &mut [f64], bounds: &PowerBounds) -> Result<()> {
        if genome.len() != self.len() {
            return Err(invalid(format!(
                "genome length {} != layout length {}",
                genome.len(),
                self.len()
            )));
        }
        let (theta, power) = genome.split_at_mut(self.phases);
        theta.iter_mut().for_each(|t| *t = wrap_phase(*t));
        if !power.is_empty() {
            let repaired = repair_power(power, bounds.p_max, bounds.p_min)?;
            power.copy_from_slice(&repaired);
        }
        Ok(())
    }
}

/// Best individual found and the best fitness in each population,
/// generation 0 included.
#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome<G> {
    pub best: G,
    pub best_fitness: f64,
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

/// Draws index `k` with probability `fitness[k] / Σ fitness`.
pub fn selection_sample<R: Rng + ?Sized>(fitnesses: &[f64], rng: &mut R) -> Result<usize> {
    let mut total = 0.0;
    for &f in fitnesses {
        if !(f >= 0.0 && f.is_finite()) {
            return Err(invalid(format!("fitness {f} is not a finite nonnegative value")));
        }
        total += f;
    }
    if !(total > 0.0) {
        return Err(invalid("all fitnesses are zero; selection PMF undefined"));
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &f) in fitnesses.iter().enumerate() {
        if f > 0.0 {
            acc += f;
            last_positive = i;
            if u < acc {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}

/// `(w·a + (1−w)·b, (1−w)·a + w·b)` for a fixed weight `w`.
pub fn blend_with_weight(a: &[f64], b: &[f64], w: f64) -> (Vec<f64>, Vec<f64>) {
    let c1 = a.iter().zip(b).map(|(x, y)| w * x + (1.0 - w) * y).collect();
    let c2 = a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect();
    (c1, c2)
}

/// Weighted-sum crossover with one uniform weight per pair. The children
/// are raw; wrapping and repair are the caller's job.
pub fn crossover_blend<R: Rng + ?Sized>(a: &[f64], b: &[f64], rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != b.len() {
        return Err(invalid(format!("parent lengths differ: {} vs {}", a.len(), b.len())));
    }
    let w: f64 = rng.random();
    Ok(blend_with_weight(a, b, w))
}

/// Adds independent `N(0, σ²)` noise to every gene.
pub fn mutate_continuous<R: Rng + ?Sized>(genome: &mut [f64], sigma: f64, rng: &mut R) -> Result<()> {
    let normal = Normal::new(0.0, sigma)
        .ok()
        .filter(|_| sigma > 0.0)
        .ok_or_else(|| invalid(format!("mutation sigma must be positive, got {sigma}")))?;
    genome.iter_mut().for_each(|g| *g += normal.sample(rng));
    Ok(())
}

/// Clamps every entry to at least `p_min`, then rescales onto the budget if
/// the sum exceeds `p_max`.
pub fn repair_power(p_raw: &[f64], p_max: f64, p_min: f64) -> Result<Vec<f64>> {
    if !(p_min > 0.0 && p_min * (p_raw.len() as f64) < p_max) {
        return Err(invalid(format!(
            "need 0 < p_min·K < p_max, got p_min = {p_min}, K = {}, p_max = {p_max}",
            p_raw.len()
        )));
    }
    if let Some(bad) = p_raw.iter().find(|p| !p.is_finite()) {
        return Err(Error::Numeric(format!("non-finite power {bad}")));
    }
    let mut p: Vec<f64> = p_raw.iter().map(|&x| x.max(p_min)).collect();
    let sum: f64 = p.iter().sum();
    if sum > p_max {
        let scale = p_max / sum;
        p.iter_mut().for_each(|x| *x *= scale);
    }
    Ok(p)
}

/// Cuts both parents at `cut` and swaps the tails.
pub fn crossover_single_point(a: &[bool], b: &[bool], cut: usize) -> (Vec<bool>, Vec<bool>) {
    let cut = cut.min(a.len());
    let c1 = a[..cut].iter().chain(&b[cut..]).copied().collect();
    let c2 = b[..cut].iter().chain(&a[cut..]).copied().collect();
    (c1, c2)
}

trait Genetics {
    type Genome: Clone;
    fn random<R: Rng>(&self, rng: &mut R) -> Result<Self::Genome>;
    fn admit(&self, seed: &Self::Genome) -> Result<Self::Genome>;
    fn crossover<R: Rng>(&self, a: &Self::Genome, b: &Self::Genome, rng: &mut R) -> Result<(Self::Genome, Self::Genome)>;
    fn mutate<R: Rng>(&self, g: &mut Self::Genome, rng: &mut R) -> Result<()>;
}

struct Continuous {
    layout: GenomeLayout,
    bounds: PowerBounds,
    phase_sigma: f64,
    power_sigma: f64,
}

impl Genetics for Continuous {
    type Genome = Vec<f64>;

    fn random<R: Rng>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let mut g: Vec<f64> = (0..self.layout.phases).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        // Uniform on the simplex Σp = P_max via normalized exponentials.
        let e: Vec<f64> = (0..self.layout.powers)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = e.iter().sum();
        g.extend(e.iter().map(|x| self.bounds.p_max * x / total));
        self.layout.normalize(&mut g, &self.bounds)?;
        Ok(g)
    }

    fn admit(&self, seed: &Vec<f64>) -> Result<Vec<f64>> {
        let mut g = seed.clone();
        self.layout.normalize(&mut g, &self.bounds)?;
        Ok(g)
    }

    fn crossover<R: Rng>(&self, a: &Vec<f64>, b: &Vec<f64>, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
        crossover_blend(a, b, rng)
    }

    fn mutate<R: Rng>(&self, g: &mut Vec<f64>, rng: &mut R) -> Result<()> {
        let (theta, power) = g.split_at_mut(self.layout.phases);
        if !theta.is_empty() {
            mutate_continuous(theta, self.phase_sigma, rng)?;
        }
        if !power.is_empty() {
            mutate_continuous(power, self.power_sigma, rng)?;
        }
        self.layout.normalize(g, &self.bounds)
    }
}

struct Binary {
    len: usize,
    flip_prob: f64,
}

impl Genetics for Binary {
    type Genome = Vec<bool>;

    fn random<R: Rng>(&self, rng: &mut R) -> Result<Vec<bool>> {
        Ok((0..self.len).map(|_| rng.random::<bool>()).collect())
    }

    fn admit(&self, seed: &Vec<bool>) -> Result<Vec<bool>> {
        if seed.len() != self.len {
            return Err(invalid(format!("seed length {} != {}", seed.len(), self.len)));
        }
        Ok(seed.clone())
    }

    fn crossover<R: Rng>(&self, a: &Vec<bool>, b: &Vec<bool>, rng: &mut R) -> Result<(Vec<bool>, Vec<bool>)> {
        if self.len < 2 {
            return Ok((a.clone(), b.clone()));
        }
        let cut = rng.random_range(1..self.len);
        Ok(crossover_single_point(a, b, cut))
    }

    fn mutate<R: Rng>(&self, g: &mut Vec<bool>, rng: &mut R) -> Result<()> {
        if self.flip_prob > 0.0 {
            for bit in g.iter_mut() {
                if rng.random::<f64>() < self.flip_prob {
                    *bit = !*bit;
                }
            }
        }
        Ok(())
    }
}

fn checked<G>(fitness: &mut impl FnMut(&G) -> Result<f64>, g: &G) -> Result<f64> {
    let f = fitness(g)?;
    if f >= 0.0 && f.is_finite() {
        Ok(f)
    } else {
        Err(Error::Numeric(format!("fitness returned {f}; must be finite and nonnegative")))
    }
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x > xs[best] { i } else { best })
}

fn argmin(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x < xs[best] { i } else { best })
}

fn evolve<S: Genetics>(
    spec: &S,
    mut fitness: impl FnMut(&S::Genome) -> Result<f64>,
    cfg: &GaConfig,
    stream: &RngStream,
    seeds: &[S::Genome],
) -> Result<GaOutcome<S::Genome>> {
    let stream = stream.substream(&cfg.rng_label);
    let size = 2 * cfg.pop_pairs;
    let mut init_rng = stream.substream("init").rng();
    let mut pop = Vec::with_capacity(size);
    for s in seeds.iter().take(size) {
        pop.push(spec.admit(s)?);
    }
    while pop.len() < size {
        pop.push(spec.random(&mut init_rng)?);
    }
    let mut fits = pop.iter().map(|g| checked(&mut fitness, g)).collect::<Result<Vec<_>>>()?;
    let mut evaluations = size;

    let i = argmax(&fits);
    let mut best = pop[i].clone();
    let mut best_fitness = fits[i];
    let mut trace = Vec::with_capacity(cfg.generations + 1);
    trace.push(best_fitness);

    for gen in 1..=cfg.generations {
        let mut sel = stream.substream(format_args!("gen{gen}/select")).rng();
        let mut chosen = (0..size)
            .map(|_| selection_sample(&fits, &mut sel))
            .collect::<Result<Vec<_>>>()?;
        chosen.shuffle(&mut sel);

        let mut next = Vec::with_capacity(size);
        for (pair, idx) in chosen.chunks_exact(2).enumerate() {
            let mut ops = stream.substream(format_args!("gen{gen}/pair{pair}")).rng();
            let (mut c1, mut c2) = spec.crossover(&pop[idx[0]], &pop[idx[1]], &mut ops)?;
            spec.mutate(&mut c1, &mut ops)?;
            spec.mutate(&mut c2, &mut ops)?;
            next.push(c1);
            next.push(c2);
        }
        let mut next_fits = next.iter().map(|g| checked(&mut fitness, g)).collect::<Result<Vec<_>>>()?;
        evaluations += size;

        let top = argmax(&next_fits);
        if next_fits[top] > best_fitness {
            best_fitness = next_fits[top];
            best = next[top].clone();
        } else if cfg.elitism && next_fits[top] < best_fitness {
            let worst = argmin(&next_fits);
            next[worst] = best.clone();
            next_fits[worst] = best_fitness;
        }
        pop = next;
        fits = next_fits;
        trace.push(fits[argmax(&fits)]);
    }

    Ok(GaOutcome {
        best,
        best_fitness,
        trace,
        evaluations,
    })
}

/// Continuous GA over genomes laid out as `layout`. `seeds` are inserted
/// (after wrapping and repair) into the initial population ahead of the
/// random individuals.
pub fn ga_continuous_run(
    fitness: impl FnMut(&Vec<f64>) -> Result<f64>,
    layout: GenomeLayout,
    bounds: PowerBounds,
    cfg: &GaConfig,
    stream: &RngStream,
    seeds: &[Vec<f64>],
) -> Result<GaOutcome<Vec<f64>>> {
    cfg.validate_continuous()?;
    if layout.powers > 0 {
        repair_power(&vec![bounds.p_min; layout.powers], bounds.p_max, bounds.p_min)?;
    }
    let spec = Continuous {
        layout,
        bounds,
        phase_sigma: cfg.mutation_scale,
        power_sigma: cfg.power_mutation_scale * bounds.p_max,
    };
    evolve(&spec, fitness, cfg, stream, seeds)
}

/// Binary GA over bit vectors of length `m` with single-point crossover and
/// per-bit flip mutation.
pub fn ga_binary_run(
    fitness: impl FnMut(&Vec<bool>) -> Result<f64>,
    m: usize,
    cfg: &GaConfig,
    stream: &RngStream,
    seeds: &[Vec<bool>],
) -> Result<GaOutcome<Vec<bool>>> {
    cfg.validate_binary()?;
    let spec = Binary {
        len: m,
        flip_prob: cfg.mutation_scale,
    };
    evolve(&spec, fitness, cfg, stream, seeds)
}
