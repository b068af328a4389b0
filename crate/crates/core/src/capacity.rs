//! Condenser capacities on generator-labeled graphs.
//!
//! `cap(X1, X2) = inf { delta(f) : 0 <= f <= 1, f = 1 on X1, f = 0 on X2 and the halo }`
//! where `delta` is one of the gradient seminorms of [`crate::graph`]. The
//! objective is convex, so projected subgradient descent over the free
//! vertex values converges to the global infimum; every returned value is
//! attained by a feasible function and therefore an upper bound.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::NormingFunction;
use crate::graph::{
    cayley_ball, GradientCombiner, GradientOperator, Group, LabeledGraph, VertexFunction,
};
use crate::subgradient::{minimize, SolveOptions, Unconstrained, UniformBox};

#[derive(Debug, Clone)]
pub struct CondenserProblem<'g> {
    graph: &'g LabeledGraph,
    sources: Vec<usize>,
    sinks: Vec<usize>,
    phi: NormingFunction,
    combiner: GradientCombiner,
    enforce_box: bool,
}

impl<'g> CondenserProblem<'g> {
    pub fn new(
        graph: &'g LabeledGraph,
        sources: &[usize],
        sinks: &[usize],
        phi: NormingFunction,
        combiner: GradientCombiner,
    ) -> Result<Self> {
        let n = graph.vertex_count();
        if sources.is_empty() {
            return Err(Error::Precondition("source set X1 is empty".into()));
        }
        let src: BTreeSet<usize> = sources.iter().copied().collect();
        let snk: BTreeSet<usize> = sinks.iter().copied().collect();
        if let Some(&v) = src.iter().chain(&snk).find(|&&v| v >= n) {
            return Err(Error::Input(format!("vertex index {v} out of range")));
        }
        if let Some(&v) = src.iter().find(|&&v| graph.is_halo(v)) {
            return Err(Error::Precondition(format!(
                "source vertex `{}` lies in the halo",
                graph.label(v)
            )));
        }
        if let Some(&v) = src.intersection(&snk).next() {
            return Err(Error::Precondition(format!(
                "vertex `{}` is both source and sink",
                graph.label(v)
            )));
        }
        Ok(CondenserProblem {
            graph,
            sources: src.into_iter().collect(),
            sinks: snk.into_iter().collect(),
            phi,
            combiner,
            enforce_box: true,
        })
    }

    /// Drops the `0 <= f <= 1` constraint (it is inactive at the optimum).
    pub fn without_box(mut self) -> Self {
        self.enforce_box = false;
        self
    }

    pub fn graph(&self) -> &'g LabeledGraph {
        self.graph
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    /// Explicit sinks; the halo is pinned to 0 in addition.
    pub fn sinks(&self) -> &[usize] {
        &self.sinks
    }

    pub fn phi(&self) -> &NormingFunction {
        &self.phi
    }

    pub fn combiner(&self) -> GradientCombiner {
        self.combiner
    }

    /// Pinned value per vertex: `Some(1)` on X1, `Some(0)` on X2 and the halo.
    pub fn pins(&self) -> Vec<Option<f64>> {
        let mut pins: Vec<Option<f64>> = (0..self.graph.vertex_count())
            .map(|v| self.graph.is_halo(v).then_some(0.0))
            .collect();
        for &v in &self.sinks {
            pins[v] = Some(0.0);
        }
        for &v in &self.sources {
            pins[v] = Some(1.0);
        }
        pins
    }

    pub fn free_vertices(&self) -> Vec<usize> {
        self.pins()
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.is_none().then_some(v))
            .collect()
    }

    /// Largest violation of the pins, the halo and the box by `f`.
    pub fn feasibility_residual(&self, f: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, pin) in self.pins().iter().enumerate() {
            match pin {
                Some(p) => worst = worst.max((f[v] - p).abs()),
                None if self.enforce_box => {
                    worst = worst.max(-f[v]).max(f[v] - 1.0);
                }
                None => {}
            }
        }
        worst
    }

    pub fn objective(&self, f: &VertexFunction) -> f64 {
        GradientOperator::new(self.graph).seminorm(f.values(), &self.phi, self.combiner)
    }

    /// Feasible start: linear interpolation in graph distance between X1 and X2 plus the halo.
    pub fn initial_guess(&self) -> Vec<f64> {
        let to_source = undirected_distances(self.graph, &self.sources);
        let zero_set: Vec<usize> = self
            .pins()
            .iter()
            .enumerate()
            .filter_map(|(v, p)| (*p == Some(0.0)).then_some(v))
            .collect();
        let to_sink = undirected_distances(self.graph, &zero_set);
        self.pins()
            .iter()
            .enumerate()
            .map(|(v, pin)| match (*pin, to_source[v], to_sink[v]) {
                (Some(p), _, _) => p,
                (None, Some(a), Some(b)) => b as f64 / (a + b) as f64,
                (None, Some(_), None) => 1.0,
                (None, None, _) => 0.0,
            })
            .collect()
    }
}

/// Outcome of a capacity or modulus solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport<M> {
    pub value: f64,
    pub minimizer: M,
    pub iterations: usize,
    pub feasibility_residual: f64,
    pub best_value_history: Vec<f64>,
    pub tolerance_met: bool,
}

pub fn solve_condenser(
    problem: &CondenserProblem<'_>,
    opts: &SolveOptions,
) -> Result<SolveReport<VertexFunction>> {
    solve_condenser_from(problem, opts, None)
}

/// As [`solve_condenser`], additionally trying `warm` as a starting point.
///
/// The better of the warm start and the distance interpolation seeds the
/// iteration, so the result never exceeds the objective at `warm` (after
/// projection onto the feasible set).
pub fn solve_condenser_from(
    problem: &CondenserProblem<'_>,
    opts: &SolveOptions,
    warm: Option<&[f64]>,
) -> Result<SolveReport<VertexFunction>> {
    opts.validate()?;
    let graph = problem.graph;
    let op = GradientOperator::new(graph);
    let pins = problem.pins();
    let free = problem.free_vertices();
    let enforce_box = problem.enforce_box;

    let mut start = problem.initial_guess();
    if let Some(w) = warm {
        if w.len() != graph.vertex_count() {
            return Err(Error::Input("warm start has the wrong length".into()));
        }
        let mut candidate: Vec<f64> = w.to_vec();
        project_vertex_values(&mut candidate, &pins, enforce_box);
        let warm_value = op.seminorm(&candidate, &problem.phi, problem.combiner);
        let cold_value = op.seminorm(&start, &problem.phi, problem.combiner);
        if warm_value <= cold_value {
            start = candidate;
        }
    }

    let template = start.clone();
    let expand = |z: &[f64]| {
        let mut f = template.clone();
        for (&v, &zv) in free.iter().zip(z) {
            f[v] = zv;
        }
        f
    };
    let objective = |z: &[f64]| {
        let f = expand(z);
        let (value, grad) = op.value_and_subgradient(&f, &problem.phi, problem.combiner);
        (value, free.iter().map(|&v| grad[v]).collect())
    };
    let z0: Vec<f64> = free.iter().map(|&v| start[v]).collect();
    let trace = if enforce_box {
        minimize(objective, &UniformBox { lo: 0.0, hi: 1.0 }, z0, opts)
    } else {
        minimize(objective, &Unconstrained, z0, opts)
    };

    let mut f = expand(&trace.x);
    let mut value = op.seminorm(&f, &problem.phi, problem.combiner);
    let mut history = trace.history;
    if enforce_box {
        if let Some((cut, cut_value)) = best_level_set(&op, problem, &f, &free) {
            if cut_value < value {
                f = cut;
                value = cut_value;
                history.push(value);
            }
        }
    }
    let residual = problem.feasibility_residual(&f);
    Ok(SolveReport {
        value,
        minimizer: VertexFunction::from_raw(f),
        iterations: trace.iterations,
        feasibility_residual: residual,
        best_value_history: history,
        tolerance_met: trace.converged,
    })
}

const MAX_LEVELS: usize = 512;

/// Best indicator `1[f > t]` over thresholds `t` taken from the free values.
///
/// For the total variation the coarea formula makes some level set at least
/// as good as `f`, and cut values are integers, so a near-optimal `f` rounds
/// to an exact minimizer. For other objectives this is only a candidate.
fn best_level_set(
    op: &GradientOperator,
    problem: &CondenserProblem<'_>,
    f: &[f64],
    free: &[usize],
) -> Option<(Vec<f64>, f64)> {
    let mut levels: Vec<f64> = free.iter().map(|&v| f[v]).filter(|&t| t < 1.0).collect();
    levels.push(0.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() > MAX_LEVELS {
        let n = levels.len();
        levels = (0..MAX_LEVELS).map(|k| levels[k * (n - 1) / (MAX_LEVELS - 1)]).collect();
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for t in levels {
        let mut cut = f.to_vec();
        for &v in free {
            cut[v] = if f[v] > t { 1.0 } else { 0.0 };
        }
        let value = op.seminorm(&cut, &problem.phi, problem.combiner);
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((cut, value));
        }
    }
    best
}

fn project_vertex_values(f: &mut [f64], pins: &[Option<f64>], enforce_box: bool) {
    for (v, pin) in f.iter_mut().zip(pins) {
        match pin {
            Some(p) => *v = *p,
            None if enforce_box => *v = v.clamp(0.0, 1.0),
            None => {}
        }
    }
}

/// Breadth-first distances ignoring edge direction and labels.
pub(crate) fn undirected_distances(graph: &LabeledGraph, roots: &[usize]) -> Vec<Option<usize>> {
    let n = graph.vertex_count();
    let mut adj = vec![Vec::new(); n];
    for j in 0..graph.generators() {
        for (s, t) in graph.edges(j) {
            adj[s].push(t);
            adj[t].push(s);
        }
    }
    let mut dist = vec![None; n];
    let mut queue = VecDeque::new();
    for &r in roots {
        if dist[r].is_none() {
            dist[r] = Some(0);
            queue.push_back(r);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap_or(0);
        for &w in &adj[v] {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Resolves vertex labels; `e` always names the group identity.
pub fn resolve_labels(graph: &LabeledGraph, group: Option<Group>, labels: &[String]) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|l| {
            let key = match (l.as_str(), group) {
                ("e", Some(g)) => g.identity_label(),
                _ => l.clone(),
            };
            graph
                .vertex(&key)
                .ok_or_else(|| Error::UnknownVertex(l.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub radius: usize,
    pub value: f64,
    pub iterations: usize,
    pub tolerance_met: bool,
}

/// Capacities of the same source set on growing balls, with X2 = halo.
///
/// Each radius is warm-started from the previous minimizer (extended by zero),
/// which is feasible on the larger ball, so values never increase.
pub fn capacity_profile(
    group: Group,
    sources: &[String],
    phi: &NormingFunction,
    combiner: GradientCombiner,
    radii: &[usize],
    opts: &SolveOptions,
) -> Result<Vec<ProfilePoint>> {
    if radii.is_empty() {
        return Err(Error::Input("empty radius list".into()));
    }
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Input("radii must be nondecreasing".into()));
    }
    let mut previous: Option<HashMap<String, f64>> = None;
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let graph = cayley_ball(group, r)?;
        let src = resolve_labels(&graph, Some(group), sources)?;
        let problem = CondenserProblem::new(&graph, &src, &[], phi.clone(), combiner)?;
        let warm: Option<Vec<f64>> = previous.as_ref().map(|prev| {
            (0..graph.vertex_count())
                .map(|v| prev.get(graph.label(v)).copied().unwrap_or(0.0))
                .collect()
        });
        let report = solve_condenser_from(&problem, opts, warm.as_deref())?;
        previous = Some(
            (0..graph.vertex_count())
                .map(|v| (graph.label(v).to_string(), report.minimizer.values()[v]))
                .collect(),
        );
        out.push(ProfilePoint {
            radius: r,
            value: report.value,
            iterations: report.iterations,
            tolerance_met: report.tolerance_met,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Vanishing,
    BoundedBelow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Slope of `log value` against `log R` over the tail.
    pub loglog_slope: f64,
    /// Mean ratio of consecutive decrements over the tail.
    pub decrement_ratio: f64,
    /// Geometric extrapolation of the limit, when decrements decay geometrically.
    pub extrapolated_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub profile: Vec<ProfilePoint>,
    pub verdict: Option<Verdict>,
    pub fit: TailFit,
    pub diagnostics: String,
}

/// Decrements shrinking at least this fast per radius count as saturation.
const GEOMETRIC_RATIO: f64 = 0.6;

/// Heuristic reading of the singleton capacity profile `R = 1..=rmax` with `Phi = Lp(p)`.
pub fn hyperbolicity_probe(
    group: Group,
    p: f64,
    rmax: usize,
    combiner: GradientCombiner,
    opts: &SolveOptions,
) -> Result<ProbeReport> {
    if rmax < 4 {
        return Err(Error::Precondition("probe needs rmax >= 4".into()));
    }
    let phi = NormingFunction::lp(p)?;
    let radii: Vec<usize> = (1..=rmax).collect();
    let profile = capacity_profile(group, &["e".to_string()], &phi, combiner, &radii, opts)?;
    let (verdict, fit, diagnostics) = read_tail(&profile);
    Ok(ProbeReport {
        profile,
        verdict,
        fit,
        diagnostics,
    })
}

fn read_tail(profile: &[ProfilePoint]) -> (Option<Verdict>, TailFit, String) {
    let values: Vec<f64> = profile.iter().map(|p| p.value).collect();
    let radii: Vec<f64> = profile.iter().map(|p| p.radius as f64).collect();
    let tail = values.len() / 2;

    let (xs, ys): (Vec<f64>, Vec<f64>) = radii[tail..]
        .iter()
        .zip(&values[tail..])
        .map(|(r, v)| (r.ln(), v.max(f64::MIN_POSITIVE).ln()))
        .unzip();
    let slope = least_squares_slope(&xs, &ys);

    let decrements: Vec<f64> = values.windows(2).map(|w| w[0] - w[1]).collect();
    let ratios: Vec<f64> = decrements[tail.saturating_sub(1)..]
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let ratio = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    let last = *values.last().unwrap_or(&0.0);
    let last_dec = decrements.last().copied().unwrap_or(0.0).max(0.0);
    let geometric = ratio < GEOMETRIC_RATIO && ratios.iter().all(|r| *r < 0.8);
    let limit = geometric.then(|| last - last_dec * ratio / (1.0 - ratio));
    let fit = TailFit {
        loglog_slope: slope,
        decrement_ratio: ratio,
        extrapolated_limit: limit,
    };

    if let Some(l) = limit {
        if l > 0.5 * last {
            return (
                Some(Verdict::BoundedBelow),
                fit,
                format!("decrements decay geometrically (ratio {ratio:.3}); limit ~ {l:.5}"),
            );
        }
    }
    if !geometric && slope < -0.05 {
        return (
            Some(Verdict::Vanishing),
            fit,
            format!("power-law tail, log-log slope {slope:.3}, decrement ratio {ratio:.3}"),
        );
    }
    (
        None,
        fit,
        format!("inconclusive tail: slope {slope:.3}, decrement ratio {ratio:.3}"),
    )
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
