//! Adam over a 2-D position with central-difference gradients.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scenario::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    /// Step size `α`, meters per iteration at steady state.
    pub step: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub iters: usize,
    /// Central-difference half-width, meters.
    pub fd_step: f64,
    /// Move along `+m̂/(√v̂+ε)`. With `false` the update subtracts, i.e.
    /// the textbook descent form.
    pub ascend: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            step: 0.5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            iters: 50,
            fd_step: 0.5,
            ascend: true,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..1.0;
        if !(self.step > 0.0 && self.eps > 0.0 && self.fd_step > 0.0) {
            return Err(invalid("Adam step, eps and fd_step must be positive"));
        }
        if !unit.contains(&self.beta1) || !unit.contains(&self.beta2) {
            return Err(invalid("Adam betas must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Moment estimates of one Adam run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub m: [f64; 2],
    pub v: [f64; 2],
    pub t: i32,
}

impl AdamState {
    /// Folds in gradient `g` and returns the bias-corrected step
    /// `m̂/(√v̂+ε)` (before scaling by `α`).
    pub fn update(&mut self, g: [f64; 2], cfg: &AdamConfig) -> [f64; 2] {
        self.t += 1;
        let mut dir = [0.0; 2];
        for i in 0..2 {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = self.m[i] / (1.0 - cfg.beta1.powi(self.t));
            let v_hat = self.v[i] / (1.0 - cfg.beta2.powi(self.t));
            dir[i] = m_hat / (v_hat.sqrt() + cfg.eps);
        }
        dir
    }
}

fn eval(f: &mut impl FnMut(Point) -> Result<f64>, w: Point) -> Result<f64> {
    let v = f(w)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("objective is {v} at {w:?}")))
    }
}

/// `(f(w + h e_i) − f(w − h e_i)) / 2h` for both coordinates.
pub fn finite_diff_gradient(mut f: impl FnMut(Point) -> Result<f64>, w: Point, h: f64) -> Result<[f64; 2]> {
    if !(h > 0.0) {
        return Err(invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let gx = (eval(&mut f, Point::new(w.x + h, w.y))? - eval(&mut f, Point::new(w.x - h, w.y))?) / (2.0 * h);
    let gy = (eval(&mut f, Point::new(w.x, w.y + h))? - eval(&mut f, Point::new(w.x, w.y - h))?) / (2.0 * h);
    Ok([gx, gy])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamOutcome {
    /// Iterate with the highest observed objective.
    pub best: Point,
    pub best_value: f64,
    pub last: Point,
    /// Objective at every iterate, starting point included.
    pub trace: Vec<f64>,
}

/// Maximizes `f` from `w0` for `cfg.iters` Adam steps.
pub fn adam_maximize(mut f: impl FnMut(Point) -> Result<f64>, w0: Point, cfg: &AdamConfig) -> Result<AdamOutcome> {
    cfg.validate()?;
    let sign = if cfg.ascend { 1.0 } else { -1.0 };
    let mut state = AdamState::default();
    let mut w = w0;
    let first = eval(&mut f, w)?;
    let mut trace = vec![first];
    let (mut best, mut best_value) = (w, first);
    for _ in 0..cfg.iters {
        let g = finite_diff_gradient(&mut f, w, cfg.fd_step)?;
        let d = state.update(g, cfg);
        w = Point::new(w.x + sign * cfg.step * d[0], w.y + sign * cfg.step * d[1]);
        let v = eval(&mut f, w)?;
        trace.push(v);
        if v > best_value {
            best = w;
            best_value = v;
        }
    }
    Ok(AdamOutcome {
        best,
        best_value,
        last: w,
        trace,
    })
}
