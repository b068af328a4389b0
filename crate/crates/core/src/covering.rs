//! Ball coverings of cell sets, the commuting coordinate tuple of a cell set,
//! and the commutator bound for covering projections.
//!
//! A cell set is a union of axis-aligned cubes of side `base^-level` inside
//! `[0,1]^n`. Its grid model multiplies by the cell-center coordinates on
//! `l^2(cells)`, with cyclic vector `xi_c = sqrt(weight_c / total)`.
//!
//! For a partition of the cells the covering projection is
//! `P = sum_j u_j u_j^T`, with `u_j` the normalized restriction of `xi` to
//! part `j`. Since every coordinate multiplier `D` is diagonal, `[D, P]` is
//! block diagonal and each block equals `b u^T - u b^T` with
//! `b = D u - (u^T D u) u`, a rank-two antisymmetric matrix whose two nonzero
//! singular values both equal `|b|`. The certificate uses this closed form,
//! so it scales to cell counts far beyond dense linear algebra.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{MagnitudeProfile, NormingFunction};
use crate::modulus::{OperatorTuple, TupleKind};

pub const DEFAULT_CELL_CAP: usize = 1 << 20;

/// Greedy covering compares every pair of cells, so it gets a smaller cap.
pub const GREEDY_CELL_CAP: usize = 4096;

/// Relative inflation of the right-hand sides in [`certificate_check`].
const CERTIFICATE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapeKind {
    Cube(usize),
    Interval,
    Cantor,
    Carpet,
}

impl ShapeKind {
    pub fn dim(&self) -> usize {
        match self {
            ShapeKind::Cube(n) => *n,
            ShapeKind::Interval | ShapeKind::Cantor => 1,
            ShapeKind::Carpet => 2,
        }
    }

    /// 2 for the dyadic shapes, 3 for the triadic fractals.
    pub fn base(&self) -> usize {
        match self {
            ShapeKind::Cube(_) | ShapeKind::Interval => 2,
            ShapeKind::Cantor | ShapeKind::Carpet => 3,
        }
    }

    /// Similarity dimension: `n` for cubes, `log 2 / log 3` and `log 8 / log 3` for the fractals.
    pub fn similarity_dimension(&self) -> f64 {
        match self {
            ShapeKind::Cube(n) => *n as f64,
            ShapeKind::Interval => 1.0,
            ShapeKind::Cantor => 2f64.ln() / 3f64.ln(),
            ShapeKind::Carpet => 8f64.ln() / 3f64.ln(),
        }
    }

    fn digit_allowed(&self, digits: &[usize]) -> bool {
        match self {
            ShapeKind::Cube(_) | ShapeKind::Interval => true,
            ShapeKind::Cantor => digits[0] != 1,
            ShapeKind::Carpet => !(digits[0] == 1 && digits[1] == 1),
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeKind::Cube(n) => write!(f, "cube:{n}"),
            ShapeKind::Interval => f.write_str("interval"),
            ShapeKind::Cantor => f.write_str("cantor"),
            ShapeKind::Carpet => f.write_str("carpet"),
        }
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(ShapeKind::Interval),
            "cantor" => Ok(ShapeKind::Cantor),
            "carpet" => Ok(ShapeKind::Carpet),
            "cube" => Ok(ShapeKind::Cube(2)),
            _ => s
                .strip_prefix("cube:")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .map(ShapeKind::Cube)
                .ok_or_else(|| {
                    Error::Input(format!(
                        "unknown shape `{s}` (expected cube[:n], interval, cantor or carpet)"
                    ))
                }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    /// Equal mass per cell, the self-similar measure.
    Uniform,
    /// Cell volume.
    Lebesgue,
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Weighting::Uniform),
            "lebesgue" => Ok(Weighting::Lebesgue),
            _ => Err(Error::Input(format!(
                "unknown weighting `{s}` (expected uniform or lebesgue)"
            ))),
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Uniform => "uniform",
            Weighting::Lebesgue => "lebesgue",
        })
    }
}

/// Occupied cells of side `base^-level` in `[0,1]^dim`, each with a positive weight.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    dim: usize,
    level: usize,
    base: usize,
    cells: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl CellSet {
    /// Cells are stored in lexicographic index order.
    pub fn new(dim: usize, level: usize, base: usize, cells: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || base < 2 {
            return Err(Error::Input("cell sets need dim >= 1 and base >= 2".into()));
        }
        if cells.len() != weights.len() {
            return Err(Error::Input("one weight per cell is required".into()));
        }
        if cells.len() > DEFAULT_CELL_CAP {
            return Err(Error::SizeCap {
                what: "cells",
                needed: cells.len(),
                cap: DEFAULT_CELL_CAP,
            });
        }
        let side = side_count(base, level)?;
        let mut pairs: Vec<(Vec<usize>, f64)> = cells.into_iter().zip(weights).collect();
        for (c, w) in &pairs {
            if c.len() != dim {
                return Err(Error::Input(format!("cell {c:?} does not have {dim} indices")));
            }
            if c.iter().any(|&i| i >= side) {
                return Err(Error::Input(format!("cell {c:?} lies outside the unit cube")));
            }
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::Input(format!("cell {c:?} has non-positive weight {w}")));
            }
        }
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Input("duplicate cell".into()));
        }
        let (cells, weights) = pairs.into_iter().unzip();
        Ok(CellSet {
            dim,
            level,
            base,
            cells,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn side(&self) -> f64 {
        (self.base as f64).powi(-(self.level as i32))
    }

    /// Half the diagonal of one cell.
    pub fn cell_circumradius(&self) -> f64 {
        0.5 * self.side() * (self.dim as f64).sqrt()
    }

    pub fn center(&self, cell: usize) -> Vec<f64> {
        let h = self.side();
        self.cells[cell].iter().map(|&i| (i as f64 + 0.5) * h).collect()
    }

    pub fn contains(&self, idx: &[usize]) -> bool {
        self.cells.binary_search_by(|c| c.as_slice().cmp(idx)).is_ok()
    }

    /// `cells n level base` followed by `c i_1 .. i_n weight` lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("cells {} {} {}\n", self.dim, self.level, self.base);
        for (c, w) in self.cells.iter().zip(&self.weights) {
            out.push('c');
            for i in c {
                out.push_str(&format!(" {i}"));
            }
            out.push_str(&format!(" {w:?}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut cells = Vec::new();
        let mut weights = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line, msg };
            let fields: Vec<&str> = content.split_whitespace().collect();
            match fields[0] {
                "cells" => {
                    if header.is_some() {
                        return Err(parse_err("repeated header".into()));
                    }
                    let nums: Vec<usize> = fields[1..]
                        .iter()
                        .map(|f| f.parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| parse_err(format!("bad header: {e}")))?;
                    header = match nums.as_slice() {
                        [n, level] => Some((*n, *level, 2)),
                        [n, level, base] => Some((*n, *level, *base)),
                        _ => return Err(parse_err("expected `cells <n> <level> [base]`".into())),
                    };
                }
                "c" => {
                    let (n, _, _) = header.ok_or_else(|| parse_err("cell before header".into()))?;
                    if fields.len() != n + 2 {
                        return Err(parse_err(format!("expected {n} indices and a weight")));
                    }
                    let idx: Vec<usize> = fields[1..=n]
                        .iter()
                        .map(|f| f.parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| parse_err(format!("bad index: {e}")))?;
                    let w: f64 = fields[n + 1]
                        .parse()
                        .map_err(|e| parse_err(format!("bad weight: {e}")))?;
                    cells.push(idx);
                    weights.push(w);
                }
                other => return Err(parse_err(format!("unknown record `{other}`"))),
            }
        }
        let (n, level, base) = header.ok_or(Error::Parse {
            line: 0,
            msg: "missing `cells` header".into(),
        })?;
        CellSet::new(n, level, base, cells, weights)
    }
}

fn side_count(base: usize, level: usize) -> Result<usize> {
    u32::try_from(level)
        .ok()
        .and_then(|l| base.checked_pow(l))
        .ok_or(Error::SizeCap {
            what: "grid side",
            needed: usize::MAX,
            cap: DEFAULT_CELL_CAP,
        })
}

pub fn build_cell_set(shape: ShapeKind, level: usize, weighting: Weighting) -> Result<CellSet> {
    let dim = shape.dim();
    let base = shape.base();
    let count = match shape {
        ShapeKind::Cube(n) => 2f64.powi((n * level) as i32),
        ShapeKind::Interval | ShapeKind::Cantor => 2f64.powi(level as i32),
        ShapeKind::Carpet => 8f64.powi(level as i32),
    };
    if count > DEFAULT_CELL_CAP as f64 {
        return Err(Error::SizeCap {
            what: "cells",
            needed: count.min(usize::MAX as f64) as usize,
            cap: DEFAULT_CELL_CAP,
        });
    }

    // expand digit by digit, most significant first
    let mut cells: Vec<Vec<usize>> = vec![vec![0; dim]];
    for _ in 0..level {
        let mut next = Vec::with_capacity(cells.len() * base.pow(dim as u32));
        for c in &cells {
            let mut digits = vec![0usize; dim];
            loop {
                if shape.digit_allowed(&digits) {
                    next.push(c.iter().zip(&digits).map(|(i, d)| i * base + d).collect());
                }
                let mut k = 0;
                while k < dim {
                    digits[k] += 1;
                    if digits[k] < base {
                        break;
                    }
                    digits[k] = 0;
                    k += 1;
                }
                if k == dim {
                    break;
                }
            }
        }
        cells = next;
    }
    let n = cells.len();
    let weight = match weighting {
        Weighting::Uniform => 1.0 / n as f64,
        Weighting::Lebesgue => (base as f64).powi(-((level * dim) as i32)),
    };
    CellSet::new(dim, level, base, cells, vec![weight; n])
}

/// A partition of the cells of a [`CellSet`] with a containing ball per part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringPartition {
    pub parts: Vec<Vec<usize>>,
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
}

impl CoveringPartition {
    /// Checks disjointness, exhaustiveness and containment of every cell.
    pub fn validate(&self, set: &CellSet) -> Result<()> {
        if self.parts.len() != self.centers.len() || self.parts.len() != self.radii.len() {
            return Err(Error::Input("parts, centers and radii differ in length".into()));
        }
        let mut seen = vec![false; set.len()];
        let circ = set.cell_circumradius();
        for (j, part) in self.parts.iter().enumerate() {
            if part.is_empty() {
                return Err(Error::Input(format!("part {j} is empty")));
            }
            for &c in part {
                if c >= set.len() || seen[c] {
                    return Err(Error::Input(format!("cell {c} is out of range or repeated")));
                }
                seen[c] = true;
                let reach = distance(&set.center(c), &self.centers[j]) + circ;
                if reach > self.radii[j] * (1.0 + 1e-12) {
                    return Err(Error::Input(format!(
                        "cell {c} reaches {reach} from the center of part {j}, radius {}",
                        self.radii[j]
                    )));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Input("partition misses some cells".into()));
        }
        Ok(())
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Groups cells into blocks of `cells_per_axis` cells along each axis; each
/// block gets a ball around the center of the bounding box of its occupied
/// cells, just large enough to hold every cell's circumscribed ball.
pub fn block_partition(set: &CellSet, cells_per_axis: usize) -> Result<CoveringPartition> {
    if cells_per_axis == 0 {
        return Err(Error::Input("blocks need at least one cell per axis".into()));
    }
    let mut blocks: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (k, c) in set.cells().iter().enumerate() {
        let key: Vec<usize> = c.iter().map(|i| i / cells_per_axis).collect();
        blocks.entry(key).or_default().push(k);
    }
    let h = set.side();
    let mut out = CoveringPartition {
        parts: Vec::with_capacity(blocks.len()),
        centers: Vec::with_capacity(blocks.len()),
        radii: Vec::with_capacity(blocks.len()),
    };
    for part in blocks.into_values() {
        let mut lo = vec![usize::MAX; set.dim()];
        let mut hi = vec![0usize; set.dim()];
        for &k in &part {
            for (a, &i) in set.cells()[k].iter().enumerate() {
                lo[a] = lo[a].min(i);
                hi[a] = hi[a].max(i + 1);
            }
        }
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(&l, &u)| 0.5 * (l + u) as f64 * h).collect();
        let circ = set.cell_circumradius();
        let radius = part
            .iter()
            .map(|&k| distance(&set.center(k), &center) + circ)
            .fold(0.0, f64::max);
        out.parts.push(part);
        out.centers.push(center);
        out.radii.push(radius);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoveringStrategy {
    /// Best aligned block size (dyadic or triadic by the set's base) fitting under `eps`.
    Dyadic,
    /// Repeatedly places the admissible ball covering the most uncovered cells.
    Greedy,
}

impl FromStr for CoveringStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dyadic" | "triadic" => Ok(CoveringStrategy::Dyadic),
            "greedy" => Ok(CoveringStrategy::Greedy),
            _ => Err(Error::Input(format!(
                "unknown covering strategy `{s}` (expected dyadic or greedy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringResult {
    /// `Phi(r_1, r_2, ...)`, an upper bound for the covering functional at scale `eps`.
    pub value: f64,
    pub covering: CoveringPartition,
}

pub fn covering_value(
    set: &CellSet,
    eps: f64,
    phi: &NormingFunction,
    strategy: CoveringStrategy,
) -> Result<CoveringResult> {
    if set.is_empty() {
        return Err(Error::Input("cannot cover an empty cell set".into()));
    }
    if !(eps > set.cell_circumradius()) || !eps.is_finite() {
        return Err(Error::Precondition(format!(
            "eps = {eps} does not exceed the cell circumradius {}",
            set.cell_circumradius()
        )));
    }
    let covering = match strategy {
        CoveringStrategy::Dyadic => {
            // best aligned block size whose full circumradius stays below eps
            let mut best: Option<(f64, CoveringPartition)> = None;
            for k in 0..=set.level() {
                let cover = block_partition(set, set.base().pow(k as u32))?;
                if cover.radii.iter().any(|&r| r >= eps) {
                    continue;
                }
                let value = phi.evaluate(&cover.radii);
                if best.as_ref().is_none_or(|(v, _)| value <= *v) {
                    best = Some((value, cover));
                }
            }
            best.expect("single cells are admissible").1
        }
        CoveringStrategy::Greedy => greedy_covering(set, eps)?,
    };
    covering.validate(set)?;
    if covering.radii.iter().any(|&r| r >= eps) {
        return Err(Error::Numerical("covering radius reached eps".into()));
    }
    Ok(CoveringResult {
        value: phi.evaluate(&covering.radii),
        covering,
    })
}

fn greedy_covering(set: &CellSet, eps: f64) -> Result<CoveringPartition> {
    if set.len() > GREEDY_CELL_CAP {
        return Err(Error::SizeCap {
            what: "cells for greedy covering",
            needed: set.len(),
            cap: GREEDY_CELL_CAP,
        });
    }
    let circ = set.cell_circumradius();
    // largest admissible radius, strictly below eps
    let reach = eps * (1.0 - 1e-9) - circ;
    let centers: Vec<Vec<f64>> = (0..set.len()).map(|c| set.center(c)).collect();
    let mut covered = vec![false; set.len()];
    let mut out = CoveringPartition {
        parts: Vec::new(),
        centers: Vec::new(),
        radii: Vec::new(),
    };
    let mut left = set.len();
    while left > 0 {
        let mut best: Option<(usize, Vec<usize>)> = None;
        for a in (0..set.len()).filter(|&a| !covered[a]) {
            let part: Vec<usize> = (0..set.len())
                .filter(|&c| !covered[c] && distance(&centers[a], &centers[c]) <= reach)
                .collect();
            if best.as_ref().is_none_or(|(_, b)| part.len() > b.len()) {
                best = Some((a, part));
            }
        }
        let (a, part) = best.expect("an uncovered cell remains");
        let radius = part
            .iter()
            .map(|&c| distance(&centers[a], &centers[c]))
            .fold(0.0, f64::max)
            + circ;
        for &c in &part {
            covered[c] = true;
        }
        left -= part.len();
        out.parts.push(part);
        out.centers.push(centers[a].clone());
        out.radii.push(radius);
    }
    Ok(out)
}

/// Coordinate multipliers of a cell set, kept as diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct GridModel {
    /// `coordinates[i][c]`: coordinate `i` of the center of cell `c`.
    coordinates: Vec<Vec<f64>>,
    xi: Vec<f64>,
}

impl GridModel {
    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn coordinates(&self) -> &[Vec<f64>] {
        &self.coordinates
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// The tuple as dense diagonal matrices with `xi` attached.
    pub fn tuple(&self) -> Result<OperatorTuple> {
        let matrices = self
            .coordinates
            .iter()
            .map(|c| DMatrix::from_diagonal(&DVector::from_column_slice(c)))
            .collect();
        OperatorTuple::new(matrices, TupleKind::DiagonalMultiplication)?
            .with_cyclic(DVector::from_column_slice(&self.xi))
    }
}

pub fn build_grid_model(set: &CellSet) -> Result<GridModel> {
    if set.is_empty() {
        return Err(Error::Input("grid model of an empty cell set".into()));
    }
    let centers: Vec<Vec<f64>> = (0..set.len()).map(|c| set.center(c)).collect();
    let coordinates = (0..set.dim())
        .map(|i| centers.iter().map(|x| x[i]).collect())
        .collect();
    let total: f64 = set.weights().iter().sum();
    let xi = set.weights().iter().map(|w| (w / total).sqrt()).collect();
    Ok(GridModel { coordinates, xi })
}

/// Normalized restrictions of `xi` to the parts.
fn part_vectors(model: &GridModel, covering: &CoveringPartition) -> Result<Vec<Vec<f64>>> {
    covering
        .parts
        .iter()
        .enumerate()
        .map(|(j, part)| {
            if part.iter().any(|&c| c >= model.dim()) {
                return Err(Error::Input(format!("part {j} names a cell outside the model")));
            }
            let norm = part.iter().map(|&c| model.xi[c].powi(2)).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::Precondition(format!("part {j} carries no mass")));
            }
            Ok(part.iter().map(|&c| model.xi[c] / norm).collect())
        })
        .collect()
}

/// Dense covering projection `sum_j u_j u_j^T`.
pub fn covering_projection(model: &GridModel, covering: &CoveringPartition) -> Result<DMatrix<f64>> {
    let d = model.dim();
    if d > crate::modulus::DEFAULT_DIMENSION_CAP {
        return Err(Error::SizeCap {
            what: "operator dimension",
            needed: d,
            cap: crate::modulus::DEFAULT_DIMENSION_CAP,
        });
    }
    let us = part_vectors(model, covering)?;
    let mut p = DMatrix::zeros(d, d);
    for (part, u) in covering.parts.iter().zip(&us) {
        for (a, &ca) in part.iter().enumerate() {
            for (b, &cb) in part.iter().enumerate() {
                p[(ca, cb)] = u[a] * u[b];
            }
        }
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `max_i Phi([tau_i, P])`.
    pub lhs_ideal: f64,
    /// `2 Phi(r_1, r_2, ...)`.
    pub rhs_ideal: f64,
    /// `max_i ||[tau_i, P]||`.
    pub lhs_op: f64,
    /// `2 eps`.
    pub rhs_op: f64,
    pub ok: bool,
}

/// Singular values of `[tau_i, P]`, two per part, in no particular order.
pub fn commutator_singular_values(model: &GridModel, covering: &CoveringPartition, axis: usize) -> Result<Vec<f64>> {
    let us = part_vectors(model, covering)?;
    let coord = model
        .coordinates
        .get(axis)
        .ok_or_else(|| Error::Input(format!("axis {axis} out of range")))?;
    let mut out = Vec::with_capacity(2 * us.len());
    for (part, u) in covering.parts.iter().zip(&us) {
        let mean: f64 = part.iter().zip(u).map(|(&c, ui)| coord[c] * ui * ui).sum();
        let b2: f64 = part
            .iter()
            .zip(u)
            .map(|(&c, ui)| ((coord[c] - mean) * ui).powi(2))
            .sum();
        let b = b2.sqrt();
        out.push(b);
        out.push(b);
    }
    Ok(out)
}

/// Checks `Phi([tau_i, P]) <= 2 Phi(r)` and `||[tau_i, P]|| <= 2 eps` for every axis.
pub fn certificate_check(
    model: &GridModel,
    covering: &CoveringPartition,
    phi: &NormingFunction,
    eps: f64,
) -> Result<Certificate> {
    if let Some(r) = covering.radii.iter().find(|&&r| !(r < eps)) {
        return Err(Error::Precondition(format!("radius {r} is not below eps = {eps}")));
    }
    let mut lhs_ideal: f64 = 0.0;
    let mut lhs_op: f64 = 0.0;
    for axis in 0..model.coordinates.len() {
        let s = commutator_singular_values(model, covering, axis)?;
        lhs_ideal = lhs_ideal.max(phi.evaluate_profile(&MagnitudeProfile::from_values(&s)));
        lhs_op = lhs_op.max(s.iter().copied().fold(0.0, f64::max));
    }
    let rhs_ideal = 2.0 * phi.evaluate(&covering.radii);
    let rhs_op = 2.0 * eps;
    let ok = lhs_ideal <= rhs_ideal * (1.0 + CERTIFICATE_SLACK) && lhs_op <= rhs_op * (1.0 + CERTIFICATE_SLACK);
    Ok(Certificate {
        lhs_ideal,
        rhs_ideal,
        lhs_op,
        rhs_op,
        ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    Lp,
    LorentzP1,
}

impl NormKind {
    pub fn with_exponent(self, p: f64) -> Result<NormingFunction> {
        match self {
            NormKind::Lp => NormingFunction::lp(p),
            NormKind::LorentzP1 => NormingFunction::lorentz(p),
        }
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lp" => Ok(NormKind::Lp),
            "lorentz" => Ok(NormKind::LorentzP1),
            _ => Err(Error::Input(format!("unknown norm kind `{s}` (expected lp or lorentz)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub level: usize,
    pub parts: usize,
    pub eps: f64,
    pub covering_value: f64,
    pub lhs_ideal: f64,
    pub rhs_ideal: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trend {
    Increasing,
    Decreasing,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub rows: Vec<ScalingRow>,
    /// max / min of the covering values.
    pub band_ratio: f64,
    pub trend: Trend,
}

/// Covering values and certificates across levels.
///
/// At level `l` the shape is resolved one level finer and covered by its
/// natural blocks of level `l`, with `eps` just above their circumradius, so
/// each part holds several cells and the commutators do not vanish.
pub fn scaling_study(shape: ShapeKind, p: f64, levels: &[usize], kind: NormKind) -> Result<ScalingStudy> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Input("levels must be nonempty and strictly increasing".into()));
    }
    let phi = kind.with_exponent(p)?;
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let set = build_cell_set(shape, level + 1, Weighting::Uniform)?;
        let block_circ = 0.5 * (shape.base() as f64).powi(-(level as i32)) * (shape.dim() as f64).sqrt();
        let eps = block_circ * (1.0 + 1e-6);
        let cover = block_partition(&set, set.base())?;
        cover.validate(&set)?;
        let value = phi.evaluate(&cover.radii);
        let model = build_grid_model(&set)?;
        let cert = certificate_check(&model, &cover, &phi, eps)?;
        rows.push(ScalingRow {
            level,
            parts: cover.parts.len(),
            eps,
            covering_value: value,
            lhs_ideal: cert.lhs_ideal,
            rhs_ideal: cert.rhs_ideal,
            ok: cert.ok,
        });
    }
    let values: Vec<f64> = rows.iter().map(|r| r.covering_value).collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let trend = if values.windows(2).all(|w| w[1] > w[0]) {
        Trend::Increasing
    } else if values.windows(2).all(|w| w[1] < w[0]) {
        Trend::Decreasing
    } else {
        Trend::Mixed
    };
    Ok(ScalingStudy {
        rows,
        band_ratio: max / min,
        trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let s = build_cell_set(ShapeKind::Interval, 2, Weighting::Uniform).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.side(), 0.25);

        let s = build_cell_set(ShapeKind::Cantor, 2, Weighting::Lebesgue).unwrap();
        let lefts: Vec<f64> = s.cells().iter().map(|c| c[0] as f64 * s.side()).collect();
        let want = [0.0, 2.0 / 9.0, 6.0 / 9.0, 8.0 / 9.0];
        for (a, b) in lefts.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((s.weights()[0] - 1.0 / 9.0).abs() < 1e-15);

        let s = build_cell_set(ShapeKind::Carpet, 1, Weighting::Uniform).unwrap();
        assert_eq!(s.len(), 8);
        assert!(!s.contains(&[1, 1]));
        assert_eq!(build_cell_set(ShapeKind::Carpet, 3, Weighting::Uniform).unwrap().len(), 512);
        assert_eq!(build_cell_set(ShapeKind::Cube(3), 2, Weighting::Uniform).unwrap().len(), 64);
        assert!(matches!(
            build_cell_set(ShapeKind::Cube(2), 11, Weighting::Uniform),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let s = build_cell_set(ShapeKind::Carpet, 2, Weighting::Uniform).unwrap();
        let text = s.to_text();
        let back = CellSet::from_text(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_text(), text);
        assert!(CellSet::from_text("cells 1 2\nc 7 0.5\n").is_err());
        assert!(CellSet::from_text("c 1 0.5\n").is_err());
        assert!(CellSet::from_text("cells 1 2\nc 1 0\n").is_err());
    }

    #[test]
    fn grid_model_of_the_interval() {
        let s = build_cell_set(ShapeKind::Interval, 2, Weighting::Uniform).unwrap();
        let m = build_grid_model(&s).unwrap();
        assert_eq!(m.coordinates()[0], vec![0.125, 0.375, 0.625, 0.875]);
        assert!(m.xi().iter().all(|&x| (x - 0.5).abs() < 1e-15));
        let t = m.tuple().unwrap();
        assert_eq!(t.kind(), TupleKind::DiagonalMultiplication);

        let one = CellSet::new(1, 0, 2, vec![vec![0]], vec![3.0]).unwrap();
        assert_eq!(build_grid_model(&one).unwrap().xi(), &[1.0]);
    }

    #[test]
    fn interval_l1_covering_is_one_half() {
        let s = build_cell_set(ShapeKind::Interval, 8, Weighting::Lebesgue).unwrap();
        for eps in [0.3, 0.1, 0.02, 0.005] {
            let r = covering_value(&s, eps, &NormingFunction::Lp(1.0), CoveringStrategy::Dyadic).unwrap();
            assert!((r.value - 0.5).abs() < 1e-12, "eps {eps}: {}", r.value);
        }
        assert!(covering_value(&s, 1e-4, &NormingFunction::Lp(1.0), CoveringStrategy::Dyadic).is_err());
    }

    #[test]
    fn greedy_covers() {
        let s = build_cell_set(ShapeKind::Carpet, 2, Weighting::Uniform).unwrap();
        let r = covering_value(&s, 0.2, &NormingFunction::Lp(1.0), CoveringStrategy::Greedy).unwrap();
        assert!(r.covering.radii.iter().all(|&x| x < 0.2));
        assert_eq!(r.covering.parts.iter().map(Vec::len).sum::<usize>(), 64);
    }

    #[test]
    fn projection_examples() {
        let s = build_cell_set(ShapeKind::Interval, 2, Weighting::Uniform).unwrap();
        let m = build_grid_model(&s).unwrap();
        let pairs = block_partition(&s, 2).unwrap();
        let p = covering_projection(&m, &pairs).unwrap();
        let half = DMatrix::from_element(2, 2, 0.5);
        assert!((p.view((0, 0), (2, 2)) - &half).amax() < 1e-15);
        assert!((p.view((2, 2), (2, 2)) - &half).amax() < 1e-15);
        assert_eq!(p[(0, 2)], 0.0);

        let singles = block_partition(&s, 1).unwrap();
        let p = covering_projection(&m, &singles).unwrap();
        assert!((p - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
    }

    #[test]
    fn certificate_on_the_interval() {
        let s = build_cell_set(ShapeKind::Interval, 2, Weighting::Uniform).unwrap();
        let m = build_grid_model(&s).unwrap();
        let pairs = block_partition(&s, 2).unwrap();
        assert_eq!(pairs.radii, vec![0.25, 0.25]);
        let c = certificate_check(&m, &pairs, &NormingFunction::Lp(1.0), 0.3).unwrap();
        assert!((c.lhs_ideal - 0.5).abs() < 1e-15);
        assert!((c.rhs_ideal - 1.0).abs() < 1e-15);
        assert!(c.ok);

        let singles = block_partition(&s, 1).unwrap();
        let c = certificate_check(&m, &singles, &NormingFunction::Lp(1.0), 0.3).unwrap();
        assert_eq!(c.lhs_ideal, 0.0);
        assert!(certificate_check(&m, &pairs, &NormingFunction::Lp(1.0), 0.25).is_err());
    }

    #[test]
    fn closed_form_matches_dense_commutators() {
        let s = build_cell_set(ShapeKind::Carpet, 2, Weighting::Uniform).unwrap();
        let m = build_grid_model(&s).unwrap();
        let t = m.tuple().unwrap();
        for k in [1, 3, 9] {
            let cover = block_partition(&s, k).unwrap();
            let p = covering_projection(&m, &cover).unwrap();
            for (axis, d) in t.matrices().iter().enumerate() {
                let mut dense = crate::gauge::singular_values(&(d * &p - &p * d)).unwrap();
                let mut closed = commutator_singular_values(&m, &cover, axis).unwrap();
                closed.sort_by(|a, b| b.total_cmp(a));
                dense.truncate(closed.len());
                for (a, b) in dense.iter().zip(&closed) {
                    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn scaling_on_the_interval_is_flat() {
        let study = scaling_study(ShapeKind::Interval, 1.0, &[2, 3, 4, 5, 6], NormKind::Lp).unwrap();
        for row in &study.rows {
            assert!((row.covering_value - 0.5).abs() < 0.01);
            assert!(row.ok);
        }
        assert!(study.band_ratio < 1.0 + 1e-9);
    }
}
