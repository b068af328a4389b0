//! Finite-dimensional condenser modulus of an operator tuple.
//!
//! The feasible set `{X = X^T : 0 <= X <= I, XP = P, XQ = 0}` is
//! parameterized as `X = P + W Y W^T`, where the columns of `W` span the
//! orthogonal complement of `range(P) + range(Q)` and `0 <= Y <= I`. The
//! projection onto the feasible set is then an eigenvalue clip of `Y`.
//!
//! Only real symmetric `X` are handled; every built-in tuple is real.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::capacity::{solve_condenser, CondenserProblem, SolveReport};
use crate::error::{Error, Result};
use crate::gauge::{evaluate_singular_norm, subgradient_singular, NormingFunction};
use crate::graph::{gradient_seminorm, GradientCombiner, LabeledGraph, VertexFunction, ACTIVE_TOL};
use crate::subgradient::{minimize, ConvexSet, SolveOptions};

pub const DEFAULT_DIMENSION_CAP: usize = 2000;

/// Eigenvalues within this distance of 0 or 1 count as on the boundary.
const EIGEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TupleKind {
    TruncatedShift,
    DiagonalMultiplication,
    Custom,
}

/// `n` real matrices of a common dimension, with an optional unit cyclic vector.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTuple {
    matrices: Vec<DMatrix<f64>>,
    kind: TupleKind,
    cyclic: Option<DVector<f64>>,
}

impl OperatorTuple {
    pub fn new(matrices: Vec<DMatrix<f64>>, kind: TupleKind) -> Result<Self> {
        Self::with_cap(matrices, kind, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(matrices: Vec<DMatrix<f64>>, kind: TupleKind, cap: usize) -> Result<Self> {
        let dim = matrices.first().map_or(0, |m| m.nrows());
        if dim > cap {
            return Err(Error::SizeCap {
                what: "operator dimension",
                needed: dim,
                cap,
            });
        }
        for (j, m) in matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Input(format!(
                    "matrix {j} is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("matrix {j} has non-finite entries")));
            }
            if kind == TupleKind::TruncatedShift && !is_partial_permutation(m) {
                return Err(Error::Input(format!("matrix {j} is not a partial permutation")));
            }
            if kind == TupleKind::DiagonalMultiplication && !is_diagonal(m) {
                return Err(Error::Input(format!("matrix {j} is not diagonal")));
            }
        }
        Ok(OperatorTuple {
            matrices,
            kind,
            cyclic: None,
        })
    }

    /// Attaches a cyclic vector, which must have unit norm.
    pub fn with_cyclic(mut self, xi: DVector<f64>) -> Result<Self> {
        if xi.len() != self.dim() {
            return Err(Error::Input("cyclic vector has the wrong length".into()));
        }
        if (xi.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Input("cyclic vector must have unit norm".into()));
        }
        self.cyclic = Some(xi);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.nrows())
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn kind(&self) -> TupleKind {
        self.kind
    }

    pub fn cyclic(&self) -> Option<&DVector<f64>> {
        self.cyclic.as_ref()
    }
}

fn is_partial_permutation(m: &DMatrix<f64>) -> bool {
    if m.iter().any(|&v| v != 0.0 && v != 1.0) {
        return false;
    }
    let rows_ok = m.row_iter().all(|r| r.iter().filter(|&&v| v == 1.0).count() <= 1);
    let cols_ok = m.column_iter().all(|c| c.iter().filter(|&&v| v == 1.0).count() <= 1);
    rows_ok && cols_ok
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    m.iter().enumerate().all(|(k, &v)| v == 0.0 || k % m.nrows() == k / m.nrows())
}

/// One partial permutation per generator: entry 1 at `(g_j v, v)` for each stored edge.
pub fn truncated_shift_tuple(graph: &LabeledGraph) -> Result<OperatorTuple> {
    let d = graph.vertex_count();
    if d > DEFAULT_DIMENSION_CAP {
        return Err(Error::SizeCap {
            what: "operator dimension",
            needed: d,
            cap: DEFAULT_DIMENSION_CAP,
        });
    }
    let matrices = (0..graph.generators())
        .map(|j| {
            let mut m = DMatrix::zeros(d, d);
            for (s, t) in graph.edges(j) {
                m[(t, s)] = 1.0;
            }
            m
        })
        .collect();
    OperatorTuple::new(matrices, TupleKind::TruncatedShift)
}

#[derive(Debug, Clone, PartialEq)]
enum Ranges {
    Coordinates { p: Vec<usize>, q: Vec<usize> },
    Frames { p: DMatrix<f64>, q: DMatrix<f64> },
}

/// Orthogonal projections `P`, `Q` with `PQ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    dim: usize,
    ranges: Ranges,
}

impl ProjectionPair {
    /// Coordinate projections onto the basis vectors in `p` and in `q`.
    pub fn coordinates(dim: usize, p: &[usize], q: &[usize]) -> Result<Self> {
        let mut p = p.to_vec();
        let mut q = q.to_vec();
        p.sort_unstable();
        p.dedup();
        q.sort_unstable();
        q.dedup();
        if let Some(&bad) = p.iter().chain(&q).find(|&&i| i >= dim) {
            return Err(Error::Input(format!("coordinate {bad} out of range for dimension {dim}")));
        }
        if p.iter().any(|i| q.binary_search(i).is_ok()) {
            return Err(Error::Precondition("P and Q overlap, so PQ != 0".into()));
        }
        Ok(ProjectionPair {
            dim,
            ranges: Ranges::Coordinates { p, q },
        })
    }

    /// Projections onto the spans of the columns of `p` and `q`, which must
    /// together form an orthonormal family.
    pub fn frames(p: DMatrix<f64>, q: DMatrix<f64>) -> Result<Self> {
        let dim = p.nrows();
        if q.nrows() != dim {
            return Err(Error::Input("frames have different row counts".into()));
        }
        let k = p.ncols() + q.ncols();
        if k > 0 {
            let both = DMatrix::from_columns(
                &p.column_iter().chain(q.column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>(),
            );
            let gram = both.transpose() * &both;
            let off = (gram - DMatrix::<f64>::identity(k, k)).amax();
            if off > 1e-10 {
                let cross = (p.transpose() * &q).amax();
                return Err(if cross > 1e-10 {
                    Error::Precondition("ranges of P and Q are not orthogonal, so PQ != 0".into())
                } else {
                    Error::Input("frame columns are not orthonormal".into())
                });
            }
        }
        Ok(ProjectionPair {
            dim,
            ranges: Ranges::Frames { p, q },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p_matrix(&self) -> DMatrix<f64> {
        match &self.ranges {
            Ranges::Coordinates { p, .. } => coordinate_projection(self.dim, p),
            Ranges::Frames { p, .. } => p * p.transpose(),
        }
    }

    pub fn q_matrix(&self) -> DMatrix<f64> {
        match &self.ranges {
            Ranges::Coordinates { q, .. } => coordinate_projection(self.dim, q),
            Ranges::Frames { q, .. } => q * q.transpose(),
        }
    }

    /// Orthonormal basis of the complement of `range(P) + range(Q)`, as columns.
    pub fn complement_basis(&self) -> DMatrix<f64> {
        match &self.ranges {
            Ranges::Coordinates { p, q } => {
                let rest: Vec<usize> = (0..self.dim)
                    .filter(|i| p.binary_search(i).is_err() && q.binary_search(i).is_err())
                    .collect();
                let mut w = DMatrix::zeros(self.dim, rest.len());
                for (k, &i) in rest.iter().enumerate() {
                    w[(i, k)] = 1.0;
                }
                w
            }
            Ranges::Frames { .. } => {
                let rest = DMatrix::identity(self.dim, self.dim) - self.p_matrix() - self.q_matrix();
                let eig = SymmetricEigen::new(rest);
                let cols: Vec<DVector<f64>> = (0..self.dim)
                    .filter(|&k| eig.eigenvalues[k] > 0.5)
                    .map(|k| eig.eigenvectors.column(k).into_owned())
                    .collect();
                if cols.is_empty() {
                    DMatrix::zeros(self.dim, 0)
                } else {
                    DMatrix::from_columns(&cols)
                }
            }
        }
    }
}

fn coordinate_projection(dim: usize, idx: &[usize]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for &i in idx {
        m[(i, i)] = 1.0;
    }
    m
}

/// Zeroes every off-diagonal entry.
pub fn diag_compress<T>(m: &DMatrix<T>) -> Result<DMatrix<T>>
where
    T: nalgebra::ComplexField,
{
    if m.nrows() != m.ncols() {
        return Err(Error::Precondition("diag_compress needs a square matrix".into()));
    }
    let mut out = DMatrix::from_element(m.nrows(), m.ncols(), nalgebra::zero::<T>());
    for i in 0..m.nrows() {
        out[(i, i)] = m[(i, i)].clone();
    }
    Ok(out)
}

fn clip_spectrum(y: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (y + y.transpose()) * 0.5;
    let mut eig = SymmetricEigen::new(sym);
    for v in eig.eigenvalues.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    eig.recompose()
}

/// Nearest feasible point in the Frobenius norm.
pub fn project_feasible(x: &DMatrix<f64>, pq: &ProjectionPair) -> Result<DMatrix<f64>> {
    check_square(x, pq.dim())?;
    let w = pq.complement_basis();
    let y = clip_spectrum(&(w.transpose() * x * &w));
    Ok(pq.p_matrix() + &w * y * w.transpose())
}

fn check_square(x: &DMatrix<f64>, dim: usize) -> Result<()> {
    if x.nrows() != dim || x.ncols() != dim {
        return Err(Error::Input(format!(
            "matrix is {}x{}, expected {dim}x{dim}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(())
}

/// `max_j Phi([T_j, X])`.
pub fn modulus_objective(tuple: &OperatorTuple, phi: &NormingFunction, x: &DMatrix<f64>) -> Result<f64> {
    check_square(x, tuple.dim())?;
    tuple
        .matrices()
        .iter()
        .map(|t| evaluate_singular_norm(phi, &(t * x - x * t)))
        .try_fold(0.0, |acc: f64, v| v.map(|v| acc.max(v)))
}

/// Largest violation of `XP = P`, `XQ = 0`, symmetry and `0 <= X <= I`.
pub fn feasibility_residual(x: &DMatrix<f64>, pq: &ProjectionPair) -> f64 {
    let p = pq.p_matrix();
    let q = pq.q_matrix();
    let r_p = (x * &p - &p).amax();
    let r_q = (x * &q).amax();
    let r_sym = (x - x.transpose()).amax();
    let eig = SymmetricEigen::new((x + x.transpose()) * 0.5);
    let r_spec = eig
        .eigenvalues
        .iter()
        .map(|&l| (-l).max(l - 1.0).max(0.0))
        .fold(0.0, f64::max);
    r_p.max(r_q).max(r_sym).max(r_spec)
}

/// `0 <= Y <= I` for symmetric `Y`, stored column-major.
struct SpectralBox {
    m: usize,
}

impl SpectralBox {
    fn matrix(&self, y: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.m, self.m, y)
    }
}

impl ConvexSet for SpectralBox {
    fn project(&self, y: &mut [f64]) {
        let clipped = clip_spectrum(&self.matrix(y));
        y.copy_from_slice(clipped.as_slice());
    }

    fn reduce(&self, y: &[f64], g: &mut [f64]) {
        let eig = SymmetricEigen::new(self.matrix(y));
        let low: Vec<usize> = (0..self.m).filter(|&k| eig.eigenvalues[k] <= EIGEN_TOL).collect();
        let high: Vec<usize> = (0..self.m)
            .filter(|&k| eig.eigenvalues[k] >= 1.0 - EIGEN_TOL)
            .collect();
        if low.is_empty() && high.is_empty() {
            return;
        }
        let v = &eig.eigenvectors;
        let mut gh = v.transpose() * self.matrix(g) * v;
        // at eigenvalue 0 only directions that raise the spectrum survive,
        // at eigenvalue 1 only those that lower it
        keep_part(&mut gh, &low, |l| l.min(0.0));
        keep_part(&mut gh, &high, |l| l.max(0.0));
        let back = v * gh * v.transpose();
        g.copy_from_slice(back.as_slice());
    }
}

fn keep_part(gh: &mut DMatrix<f64>, idx: &[usize], clip: impl Fn(f64) -> f64) {
    if idx.is_empty() {
        return;
    }
    let k = idx.len();
    let block = DMatrix::from_fn(k, k, |a, b| gh[(idx[a], idx[b])]);
    let mut eig = SymmetricEigen::new((&block + block.transpose()) * 0.5);
    for l in eig.eigenvalues.iter_mut() {
        *l = clip(*l);
    }
    let block = eig.recompose();
    for a in 0..k {
        for b in 0..k {
            gh[(idx[a], idx[b])] = block[(a, b)];
        }
    }
}

pub fn solve_modulus(
    tuple: &OperatorTuple,
    pq: &ProjectionPair,
    phi: &NormingFunction,
    opts: &SolveOptions,
) -> Result<SolveReport<DMatrix<f64>>> {
    solve_modulus_from(tuple, pq, phi, opts, None)
}

/// As [`solve_modulus`], starting from the projection of `warm` if that
/// beats the default start `X = P`.
pub fn solve_modulus_from(
    tuple: &OperatorTuple,
    pq: &ProjectionPair,
    phi: &NormingFunction,
    opts: &SolveOptions,
    warm: Option<&DMatrix<f64>>,
) -> Result<SolveReport<DMatrix<f64>>> {
    opts.validate()?;
    if pq.dim() != tuple.dim() {
        return Err(Error::Precondition(format!(
            "projections act on dimension {}, the tuple on {}",
            pq.dim(),
            tuple.dim()
        )));
    }
    let p = pq.p_matrix();
    let w = pq.complement_basis();
    let m = w.ncols();
    let assemble = |y: &DMatrix<f64>| &p + &w * y * w.transpose();

    let mut y0 = DMatrix::<f64>::zeros(m, m);
    if let Some(x) = warm {
        check_square(x, tuple.dim())?;
        let candidate = clip_spectrum(&(w.transpose() * x * &w));
        if modulus_objective(tuple, phi, &assemble(&candidate))? <= modulus_objective(tuple, phi, &p)? {
            y0 = candidate;
        }
    }

    // shared error slot: the solver interface has no failure channel
    let failure = std::cell::RefCell::new(None);
    let objective = |y: &[f64]| {
        let x = assemble(&DMatrix::from_column_slice(m, m, y));
        match value_and_subgradient(tuple, phi, &x) {
            Ok((value, gx)) => {
                let gy = w.transpose() * gx * &w;
                (value, gy.as_slice().to_vec())
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                (f64::INFINITY, vec![0.0; m * m])
            }
        }
    };
    let trace = minimize(objective, &SpectralBox { m }, y0.as_slice().to_vec(), opts);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let x = assemble(&DMatrix::from_column_slice(m, m, &trace.x));
    let x = (&x + x.transpose()) * 0.5;
    Ok(SolveReport {
        value: modulus_objective(tuple, phi, &x)?,
        feasibility_residual: feasibility_residual(&x, pq),
        minimizer: x,
        iterations: trace.iterations,
        best_value_history: trace.history,
        tolerance_met: trace.converged,
    })
}

/// Objective value and a symmetric subgradient with respect to `X`.
fn value_and_subgradient(
    tuple: &OperatorTuple,
    phi: &NormingFunction,
    x: &DMatrix<f64>,
) -> Result<(f64, DMatrix<f64>)> {
    let comms: Vec<DMatrix<f64>> = tuple.matrices().iter().map(|t| t * x - x * t).collect();
    let values: Vec<f64> = comms
        .iter()
        .map(|c| evaluate_singular_norm(phi, c))
        .collect::<Result<_>>()?;
    let top = values.iter().copied().fold(0.0, f64::max);
    let active: Vec<usize> = (0..values.len()).filter(|&j| values[j] >= top - ACTIVE_TOL).collect();
    let share = 1.0 / active.len().max(1) as f64;
    let d = tuple.dim();
    let mut grad = DMatrix::zeros(d, d);
    for &j in &active {
        // d/dX <G, TX - XT> = T^T G - G T^T
        let g = subgradient_singular(phi, &comms[j])?;
        let t = &tuple.matrices()[j];
        grad += (t.transpose() * &g - &g * t.transpose()) * share;
    }
    let grad = (&grad + grad.transpose()) * 0.5;
    Ok((top, grad))
}

/// Graph capacity against matrix modulus on a Cayley ball or graph file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub cap_graph: f64,
    pub k_matrix: f64,
    /// `k_matrix - cap_graph`.
    pub gap: f64,
    /// `|gap| / cap_graph`, or `|gap|` when the capacity vanishes.
    pub relative_gap: f64,
    /// Matrix objective at `diag(f)` for the graph minimizer `f`.
    pub embedded_value: f64,
    /// Graph objective at the diagonal of the matrix minimizer.
    pub compressed_value: f64,
    /// `diag(f)` is modulus-feasible with matrix objective equal to the graph objective.
    pub embedding_ok: bool,
    /// The diagonal of the matrix minimizer is graph-feasible with no larger objective.
    pub compression_ok: bool,
    pub diag_roundtrip_ok: bool,
    pub graph_iterations: usize,
    pub matrix_iterations: usize,
    pub tolerance_met: bool,
}

/// Relative slack allowed in the two sandwich checks.
const SANDWICH_TOL: f64 = 1e-9;

/// Solves the graph condenser (with the max combiner) and the matching
/// matrix condenser with `P = chi_{X1}` and `Q = chi_{X2 + halo}`.
pub fn transfer_compare(
    graph: &LabeledGraph,
    sources: &[usize],
    sinks: &[usize],
    phi: &NormingFunction,
    opts: &SolveOptions,
) -> Result<TransferReport> {
    let problem = CondenserProblem::new(graph, sources, sinks, phi.clone(), GradientCombiner::MaxThenNorm)?;
    let graph_report = solve_condenser(&problem, opts)?;
    let f = graph_report.minimizer.values();

    let tuple = truncated_shift_tuple(graph)?;
    let mut q: Vec<usize> = sinks.to_vec();
    q.extend(graph.halo_vertices());
    let pq = ProjectionPair::coordinates(graph.vertex_count(), sources, &q)?;

    let embedded = DMatrix::from_diagonal(&DVector::from_column_slice(f));
    let embedded_value = modulus_objective(&tuple, phi, &embedded)?;
    let scale = graph_report.value.max(1.0);
    let embedding_ok = feasibility_residual(&embedded, &pq) <= 1e-10
        && (embedded_value - graph_report.value).abs() <= SANDWICH_TOL * scale;

    let matrix_report = solve_modulus_from(&tuple, &pq, phi, opts, Some(&embedded))?;
    let diagonal: Vec<f64> = matrix_report.minimizer.diagonal().iter().copied().collect();
    let compressed_feasible = problem.feasibility_residual(&diagonal) <= 1e-10;
    let compressed_value = gradient_seminorm(
        graph,
        &VertexFunction::from_raw(diagonal),
        phi,
        GradientCombiner::MaxThenNorm,
    );
    let compression_ok =
        compressed_feasible && compressed_value <= matrix_report.value + SANDWICH_TOL * scale;

    let gap = matrix_report.value - graph_report.value;
    let relative_gap = if graph_report.value > 0.0 {
        gap.abs() / graph_report.value
    } else {
        gap.abs()
    };
    Ok(TransferReport {
        cap_graph: graph_report.value,
        k_matrix: matrix_report.value,
        gap,
        relative_gap,
        embedded_value,
        compressed_value,
        embedding_ok,
        compression_ok,
        diag_roundtrip_ok: embedding_ok && compression_ok,
        graph_iterations: graph_report.iterations,
        matrix_iterations: matrix_report.iterations,
        tolerance_met: graph_report.tolerance_met && matrix_report.tolerance_met,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cayley_ball, Group};

    #[test]
    fn shift_tuple_shapes() {
        let g = cayley_ball(Group::FreeAbelian(1), 1).unwrap();
        let t = truncated_shift_tuple(&g).unwrap();
        assert_eq!(t.dim(), 5);
        assert_eq!(t.len(), 1);
        assert_eq!(t.matrices()[0].iter().filter(|&&v| v == 1.0).count(), 4);

        let g = cayley_ball(Group::Free(2), 1).unwrap();
        let t = truncated_shift_tuple(&g).unwrap();
        assert_eq!(t.dim(), 17);
        assert_eq!(t.len(), 2);
        assert_eq!(t.kind(), TupleKind::TruncatedShift);

        let g = LabeledGraph::from_text("graph 2\nv a\nv b halo\n").unwrap();
        let t = truncated_shift_tuple(&g).unwrap();
        assert!(t.matrices().iter().all(|m| m.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn tuple_validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        assert!(OperatorTuple::new(vec![bad], TupleKind::TruncatedShift).is_err());
        let a = DMatrix::<f64>::identity(2, 2);
        let b = DMatrix::<f64>::identity(3, 3);
        assert!(OperatorTuple::new(vec![a.clone(), b], TupleKind::Custom).is_err());
        let t = OperatorTuple::new(vec![a], TupleKind::Custom).unwrap();
        assert!(t.clone().with_cyclic(DVector::from_element(2, 1.0)).is_err());
        assert!(t.with_cyclic(DVector::from_element(2, 0.5f64.sqrt())).is_ok());
    }

    #[test]
    fn overlapping_projections_are_rejected() {
        assert!(matches!(
            ProjectionPair::coordinates(3, &[0, 1], &[1]),
            Err(Error::Precondition(_))
        ));
        let e0 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let diag = DMatrix::from_column_slice(2, 1, &[0.5f64.sqrt(), 0.5f64.sqrt()]);
        assert!(matches!(ProjectionPair::frames(e0, diag), Err(Error::Precondition(_))));
    }

    #[test]
    fn projection_examples() {
        let pq = ProjectionPair::coordinates(3, &[0], &[]).unwrap();
        let two = DMatrix::<f64>::identity(3, 3) * 2.0;
        let x = project_feasible(&two, &pq).unwrap();
        assert!((x - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
        let minus = -DMatrix::<f64>::identity(3, 3);
        let x = project_feasible(&minus, &pq).unwrap();
        assert!((x - pq.p_matrix()).amax() < 1e-12);

        let feasible = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 0.3, 0.7]));
        let again = project_feasible(&feasible, &pq).unwrap();
        assert!((again - &feasible).amax() < 1e-12);
    }

    #[test]
    fn frame_projection_matches_coordinates() {
        let coords = ProjectionPair::coordinates(4, &[1], &[3]).unwrap();
        let e = |i: usize| DMatrix::from_fn(4, 1, |r, _| if r == i { 1.0 } else { 0.0 });
        let frames = ProjectionPair::frames(e(1), e(3)).unwrap();
        let x = DMatrix::from_fn(4, 4, |r, c| ((r * 4 + c) as f64).sin());
        let a = project_feasible(&x, &coords).unwrap();
        let b = project_feasible(&x, &frames).unwrap();
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn diag_compress_examples() {
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(diag_compress(&swap).unwrap(), DMatrix::zeros(2, 2));
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -2.0]));
        assert_eq!(diag_compress(&d).unwrap(), d);
        assert!(diag_compress(&DMatrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn commutator_entries_are_negated_differences() {
        let g = cayley_ball(Group::Free(2), 1).unwrap();
        let t = truncated_shift_tuple(&g).unwrap();
        let f: Vec<f64> = (0..g.vertex_count()).map(|v| (v as f64 * 0.37).cos()).collect();
        let x = DMatrix::from_diagonal(&DVector::from_column_slice(&f));
        for j in 0..g.generators() {
            let c = &t.matrices()[j] * &x - &x * &t.matrices()[j];
            let mut expected = DMatrix::zeros(g.vertex_count(), g.vertex_count());
            for (s, d) in g.edges(j) {
                expected[(d, s)] = f[s] - f[d];
            }
            assert!((c - expected).amax() < 1e-15);
        }
    }

    #[test]
    fn scalar_tuple_has_zero_modulus() {
        let t = OperatorTuple::new(vec![DMatrix::identity(4, 4) * 3.0], TupleKind::Custom).unwrap();
        let pq = ProjectionPair::coordinates(4, &[0], &[3]).unwrap();
        let r = solve_modulus(&t, &pq, &NormingFunction::Lp(2.0), &SolveOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!((r.minimizer - pq.p_matrix()).amax() < 1e-12);
    }

    #[test]
    fn z_ball_modulus() {
        let g = cayley_ball(Group::FreeAbelian(1), 2).unwrap();
        let t = truncated_shift_tuple(&g).unwrap();
        let pq = ProjectionPair::coordinates(g.vertex_count(), &[g.vertex("0").unwrap()], &g.halo_vertices())
            .unwrap();
        let r = solve_modulus(&t, &pq, &NormingFunction::Lp(2.0), &SolveOptions::default()).unwrap();
        let want = (2.0f64 / 3.0).sqrt();
        assert!((r.value - want).abs() < 0.02 * want, "{}", r.value);
        assert!(r.feasibility_residual < 1e-10);
    }

    #[test]
    fn transfer_on_small_balls() {
        let g = cayley_ball(Group::FreeAbelian(1), 2).unwrap();
        let e = g.vertex("0").unwrap();
        let rep = transfer_compare(&g, &[e], &[], &NormingFunction::Lp(2.0), &SolveOptions::default()).unwrap();
        assert!(rep.diag_roundtrip_ok, "{rep:?}");
        assert!(rep.relative_gap < 0.02, "{rep:?}");
        assert!((rep.cap_graph - (2.0f64 / 3.0).sqrt()).abs() < 1e-6);
    }
}
