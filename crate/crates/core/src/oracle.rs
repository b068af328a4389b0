//! Exact reference values for two special condenser problems.
//!
//! * `Phi = l2` with the Euclidean (or concatenating) combiner: the objective
//!   is the square root of the Dirichlet energy, minimized by the harmonic
//!   extension of the boundary data. Found by a direct linear solve.
//! * `Phi = l1` with the concatenating combiner: the objective is the total
//!   variation, whose minimum over the condenser constraints equals the
//!   minimum number of edges separating `X1` from `X2` and the halo.
//!
//! Neither route shares code with the subgradient solver.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::dinics;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::capacity::CondenserProblem;
use crate::error::{Error, Result};
use crate::gauge::NormingFunction;
use crate::graph::GradientCombiner;

/// Minimizer of the Dirichlet energy under the condenser pins.
///
/// Free vertices in components that touch no pinned vertex are set to 0;
/// they contribute nothing to the energy.
pub fn harmonic_extension(problem: &CondenserProblem<'_>) -> Result<Vec<f64>> {
    let graph = problem.graph();
    let n = graph.vertex_count();
    let pins = problem.pins();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..graph.generators() {
        for (s, t) in graph.edges(j) {
            if s != t {
                adj[s].push(t);
                adj[t].push(s);
            }
        }
    }

    // free vertices reachable from a pinned vertex through free vertices
    let mut anchored = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| pins[v].is_some()).collect();
    for &v in &stack {
        anchored[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !anchored[w] && pins[w].is_none() {
                anchored[w] = true;
                stack.push(w);
            }
        }
    }

    let mut f: Vec<f64> = pins.iter().map(|p| p.unwrap_or(0.0)).collect();
    let unknowns: Vec<usize> = (0..n)
        .filter(|&v| pins[v].is_none() && anchored[v])
        .collect();
    if unknowns.is_empty() {
        return Ok(f);
    }
    let mut slot = vec![usize::MAX; n];
    for (k, &v) in unknowns.iter().enumerate() {
        slot[v] = k;
    }
    let m = unknowns.len();
    let mut lap = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for (k, &v) in unknowns.iter().enumerate() {
        for &w in &adj[v] {
            lap[(k, k)] += 1.0;
            if slot[w] != usize::MAX {
                lap[(k, slot[w])] -= 1.0;
            } else {
                rhs[k] += f[w];
            }
        }
    }
    let chol = lap
        .cholesky()
        .ok_or_else(|| Error::Numerical("reduced Laplacian is not positive definite".into()))?;
    let sol = chol.solve(&rhs);
    for (k, &v) in unknowns.iter().enumerate() {
        f[v] = sol[k];
    }
    Ok(f)
}

/// `sqrt(f^T L f)` at the harmonic extension.
pub fn oracle_quadratic(problem: &CondenserProblem<'_>) -> Result<f64> {
    let single = problem.graph().generators() == 1;
    let combiner_ok = matches!(
        problem.combiner(),
        GradientCombiner::EuclideanThenNorm | GradientCombiner::SumThenNorm
    ) || single;
    if *problem.phi() != NormingFunction::Lp(2.0) || !combiner_ok {
        return Err(Error::Precondition(
            "quadratic oracle needs Phi = l2 with the euclid or sum combiner".into(),
        ));
    }
    let f = harmonic_extension(problem)?;
    let graph = problem.graph();
    let energy: f64 = (0..graph.generators())
        .flat_map(|j| graph.edges(j))
        .map(|(s, t)| (f[t] - f[s]).powi(2))
        .sum();
    Ok(energy.sqrt())
}

/// Minimum number of edges separating the sources from the sinks and the halo.
pub fn oracle_mincut(problem: &CondenserProblem<'_>) -> Result<f64> {
    let single = problem.graph().generators() == 1;
    let l1 = matches!(problem.phi(), NormingFunction::Lp(p) | NormingFunction::LorentzP1(p) if *p == 1.0);
    let combiner_ok = problem.combiner() == GradientCombiner::SumThenNorm || single;
    if !l1 || !combiner_ok {
        return Err(Error::Precondition(
            "min-cut oracle needs Phi = l1 with the sum combiner".into(),
        ));
    }
    let graph = problem.graph();
    let n = graph.vertex_count();
    let pins = problem.pins();
    let big = graph.edge_count() as u64 + 1;

    let mut net: DiGraph<(), u64> = DiGraph::with_capacity(n + 2, 2 * graph.edge_count() + n);
    let nodes: Vec<NodeIndex> = (0..n).map(|_| net.add_node(())).collect();
    let source = net.add_node(());
    let sink = net.add_node(());
    for j in 0..graph.generators() {
        for (s, t) in graph.edges(j) {
            if s != t {
                net.add_edge(nodes[s], nodes[t], 1);
                net.add_edge(nodes[t], nodes[s], 1);
            }
        }
    }
    for (v, pin) in pins.iter().enumerate() {
        match pin {
            Some(p) if *p == 1.0 => {
                net.add_edge(source, nodes[v], big);
            }
            Some(_) => {
                net.add_edge(nodes[v], sink, big);
            }
            None => {}
        }
    }
    let (flow, _) = dinics(&net, source, sink);
    Ok(flow as f64)
}
