//! Projected subgradient descent for convex, positively homogeneous objectives
//! over compact convex sets with an exact projection.
//!
//! Steps follow Polyak's rule against a moving target level
//! `f_best - delta`. `delta` grows when the best value drops by `delta / 2`
//! and halves when the iterates travel `path_bound` without doing so, after
//! which the run resumes from the best point. A diminishing `c / sqrt(t)`
//! rule is kept as an alternative.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    Polyak,
    /// `scale / sqrt(t + 1)` along the normalized subgradient.
    Diminishing(f64),
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepRule::Polyak => f.write_str("polyak"),
            StepRule::Diminishing(c) => write!(f, "diminishing:{c}"),
        }
    }
}

impl FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polyak" => Ok(StepRule::Polyak),
            "diminishing" => Ok(StepRule::Diminishing(0.1)),
            _ => match s.strip_prefix("diminishing:") {
                Some(c) => c
                    .parse::<f64>()
                    .ok()
                    .filter(|c| *c > 0.0 && c.is_finite())
                    .map(StepRule::Diminishing)
                    .ok_or_else(|| Error::Input(format!("bad step scale in `{s}`"))),
                None => Err(Error::Input(format!(
                    "unknown step rule `{s}` (expected polyak or diminishing[:c])"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Relative best-value improvement below which a window counts as stalled.
    pub tol: f64,
    pub window: usize,
    /// Distance the iterates may travel without sufficient decrease before
    /// the target gap is halved.
    pub path_bound: f64,
    /// Recorded for reproducibility; the iteration itself is deterministic.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 50_000,
            step_rule: StepRule::Polyak,
            tol: 1e-7,
            window: 200,
            path_bound: 1.0,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.window == 0 {
            return Err(Error::Input("max_iters and window must be positive".into()));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::Input("tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub converged: bool,
}

/// A closed convex feasible set with an exact Euclidean projection.
pub trait ConvexSet {
    fn project(&self, x: &mut [f64]);

    /// Removes from `g` a normal-cone component at the feasible point `x`, so
    /// that `g` stays a subgradient of `objective + indicator(set)` while no
    /// longer pushing through active constraints.
    fn reduce(&self, _x: &[f64], _g: &mut [f64]) {}
}

/// The whole space.
pub struct Unconstrained;

impl ConvexSet for Unconstrained {
    fn project(&self, _x: &mut [f64]) {}
}

/// The box `[lo, hi]^n`.
pub struct UniformBox {
    pub lo: f64,
    pub hi: f64,
}

impl ConvexSet for UniformBox {
    fn project(&self, x: &mut [f64]) {
        for v in x.iter_mut() {
            *v = v.clamp(self.lo, self.hi);
        }
    }

    fn reduce(&self, x: &[f64], g: &mut [f64]) {
        for (xi, gi) in x.iter().zip(g.iter_mut()) {
            if (*xi <= self.lo && *gi > 0.0) || (*xi >= self.hi && *gi < 0.0) {
                *gi = 0.0;
            }
        }
    }
}

/// A stalled window only ends the run once the target gap is this small
/// relative to the best value.
const GAP_FLOOR: f64 = 1e-5;

/// Minimizes `objective` over `set`.
///
/// `objective` returns the value and a subgradient at a feasible point; `x0`
/// is projected before the first evaluation.
pub fn minimize<F, S>(mut objective: F, set: &S, x0: Vec<f64>, opts: &SolveOptions) -> Trace
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    S: ConvexSet + ?Sized,
{
    let mut eval = |x: &[f64]| {
        let (v, mut g) = objective(x);
        set.reduce(x, &mut g);
        (v, g)
    };
    let mut x = x0;
    set.project(&mut x);
    let (mut fx, mut g) = eval(&x);
    let mut best_x = x.clone();
    let mut best = fx;
    let mut history = vec![best];

    // target level is `best - delta`; `delta` halves whenever the iterates
    // travel `path_bound` without a sufficient decrease.
    let mut delta = 0.25 * best.abs();
    let path_bound = opts.path_bound;
    let mut path = 0.0;
    let mut group_best = best;
    let mut group_start = 0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        if best == 0.0 {
            converged = true;
            break;
        }
        let gnorm2: f64 = g.iter().map(|v| v * v).sum();
        if gnorm2 == 0.0 || !gnorm2.is_finite() {
            // zero reduced subgradient at a feasible point: optimal
            converged = true;
            break;
        }
        let target = best - delta;
        let step = match opts.step_rule {
            StepRule::Polyak => (fx - target) / gnorm2,
            StepRule::Diminishing(c) => c / ((iterations + 1) as f64).sqrt() / gnorm2.sqrt(),
        };
        path += step * gnorm2.sqrt();
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
        set.project(&mut x);
        let (fnext, gnext) = eval(&x);
        iterations += 1;
        fx = fnext;
        g = gnext;

        if fnext < best {
            best = fnext;
            best_x.clone_from(&x);
        }
        if best <= group_best - 0.5 * delta {
            group_best = best;
            group_start = iterations;
            path = 0.0;
            delta = (delta * 1.5).min(0.5 * best.abs());
        } else if path > path_bound || iterations - group_start >= opts.window {
            delta *= 0.5;
            path = 0.0;
            group_best = best;
            group_start = iterations;
            x.clone_from(&best_x);
            let (fb, gb) = eval(&x);
            fx = fb;
            g = gb;
        }
        history.push(best);

        if iterations >= opts.window {
            let before = history[iterations - opts.window];
            if before - best <= opts.tol * best.abs() && delta <= GAP_FLOOR * best.abs() {
                converged = true;
                break;
            }
        }
    }

    Trace {
        x: best_x,
        value: best,
        iterations,
        history,
        converged,
    }
}
