//! Symmetric gauge functions ("norming functions") on finite sequences and
//! the unitarily invariant matrix norms they induce through singular values.
//!
//! Three families are supported:
//!
//! * `Lp(p)`: the ordinary `p`-norm, `p >= 1`.
//! * `LorentzP1(p)`: `sum_k s_k * k^(-1 + 1/p)` over the decreasing
//!   rearrangement `s_1 >= s_2 >= ...`. For `p = 1` this is the `l1` / trace norm.
//! * `Weights(pi)`: `sum_k pi_k * s_k` for an explicit nonincreasing weight
//!   sequence normalized to `pi_1 = 1`. Arguments longer than the weight
//!   sequence reuse its last entry.
//!
//! Subgradients are provided for both the vector and the singular-value
//! (matrix) versions; they are what the capacity and modulus solvers step along.

use std::fmt;
use std::str::FromStr;

use nalgebra::{ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest one are ranked as zero.
pub const SINGULAR_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NormingFunction {
    Lp(f64),
    LorentzP1(f64),
    Weights(Vec<f64>),
}

impl NormingFunction {
    pub fn lp(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(NormingFunction::Lp(p))
    }

    pub fn lorentz(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(NormingFunction::LorentzP1(p))
    }

    /// Builds a weight-sequence gauge, rescaling so that the first weight is 1.
    pub fn weights(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::Domain("weight sequence must be nonempty".into()));
        }
        if pi.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::Domain("weights must be finite and positive".into()));
        }
        if pi.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Domain("weights must be nonincreasing".into()));
        }
        let first = pi[0];
        Ok(NormingFunction::Weights(
            pi.into_iter().map(|w| w / first).collect(),
        ))
    }

    /// Weight paired with the `rank`-th largest magnitude (0-based), for the
    /// weighted kinds. `Lp(p)` has no weight sequence and returns `None`.
    pub fn weight(&self, rank: usize) -> Option<f64> {
        match self {
            NormingFunction::Lp(_) => None,
            NormingFunction::LorentzP1(p) => Some(lorentz_weight(*p, rank + 1)),
            NormingFunction::Weights(pi) => Some(pi[rank.min(pi.len() - 1)]),
        }
    }

    /// `Phi(x)` for a real sequence.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            NormingFunction::Lp(p) => lp_norm(*p, x.iter().map(|v| v.abs())),
            _ => {
                let profile = MagnitudeProfile::from_values(x);
                self.evaluate_profile(&profile)
            }
        }
    }

    /// `Phi(|z|)` for a complex sequence.
    pub fn evaluate_complex(&self, z: &[nalgebra::Complex<f64>]) -> f64 {
        let mags: Vec<f64> = z.iter().map(|c| c.norm()).collect();
        self.evaluate(&mags)
    }

    pub fn evaluate_profile(&self, profile: &MagnitudeProfile) -> f64 {
        match self {
            NormingFunction::Lp(p) => lp_norm(*p, profile.values().iter().copied()),
            _ => profile
                .values()
                .iter()
                .enumerate()
                .map(|(k, s)| self.weight(k).unwrap_or(1.0) * s)
                .sum(),
        }
    }

    /// A subgradient `g` of `Phi` at `x`: `<g, x> = Phi(x)` and
    /// `Phi(y) >= Phi(x) + <g, y - x>` for every `y`.
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            NormingFunction::Lp(p) => lp_subgradient(*p, x),
            _ => {
                let mut g = vec![0.0; x.len()];
                for (rank, &i) in decreasing_order(x).iter().enumerate() {
                    g[i] = sign(x[i]) * self.weight(rank).unwrap_or(1.0);
                }
                g
            }
        }
    }
}

impl fmt::Display for NormingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormingFunction::Lp(p) if *p == 1.0 => write!(f, "l1"),
            NormingFunction::Lp(p) if *p == 2.0 => write!(f, "l2"),
            NormingFunction::Lp(p) => write!(f, "lp:{p}"),
            NormingFunction::LorentzP1(p) => write!(f, "lorentz:{p}"),
            NormingFunction::Weights(pi) => {
                write!(f, "weights:")?;
                for (k, w) in pi.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{w}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for NormingFunction {
    type Err = Error;

    /// Accepts `l1`, `l2`, `lp:<p>`, `lorentz:<p>` and `weights:<w1>,<w2>,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "l1" => return NormingFunction::lp(1.0),
            "l2" => return NormingFunction::lp(2.0),
            _ => {}
        }
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Input(format!("unrecognized norming function `{s}`")))?;
        let number = |a: &str| -> Result<f64> {
            let a = a.trim();
            if a == "log8/log3" {
                return Ok(8f64.ln() / 3f64.ln());
            }
            a.parse::<f64>()
                .map_err(|_| Error::Input(format!("bad number `{a}` in `{s}`")))
        };
        match kind {
            "lp" => NormingFunction::lp(number(arg)?),
            "lorentz" => NormingFunction::lorentz(number(arg)?),
            "weights" => {
                let pi = arg.split(',').map(number).collect::<Result<Vec<_>>>()?;
                NormingFunction::weights(pi)
            }
            _ => Err(Error::Input(format!("unrecognized norming function `{s}`"))),
        }
    }
}

/// Decreasing rearrangement of magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeProfile(Vec<f64>);

impl MagnitudeProfile {
    pub fn from_values(x: &[f64]) -> Self {
        let mut v: Vec<f64> = x.iter().map(|a| a.abs()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        MagnitudeProfile(v)
    }

    /// Wraps values that are already nonnegative and sorted nonincreasing.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Input("profile entries must be nonnegative".into()));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Input("profile must be sorted nonincreasing".into()));
        }
        Ok(MagnitudeProfile(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `(j^(-1 + 1/p))` for `j = 1..=n`.
pub fn make_lorentz_weights(p: f64, n: usize) -> Result<Vec<f64>> {
    check_exponent(p)?;
    if n == 0 {
        return Err(Error::Domain("weight count must be positive".into()));
    }
    Ok((1..=n).map(|j| lorentz_weight(p, j)).collect())
}

/// Singular values of `m` in decreasing order.
pub fn singular_values<T>(m: &DMatrix<T>) -> Result<Vec<f64>>
where
    T: ComplexField<RealField = f64>,
{
    check_finite(m)?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `Phi(s_1(m), s_2(m), ...)`.
pub fn evaluate_singular_norm<T>(phi: &NormingFunction, m: &DMatrix<T>) -> Result<f64>
where
    T: ComplexField<RealField = f64>,
{
    let s = singular_values(m)?;
    Ok(phi.evaluate_profile(&MagnitudeProfile(s)))
}

/// `U diag(w) V^*` with `m = U diag(s) V^*` and `w` a subgradient of `Phi` at `s`.
pub fn subgradient_singular<T>(phi: &NormingFunction, m: &DMatrix<T>) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64>,
{
    check_finite(m)?;
    if m.is_empty() {
        return Ok(m.clone());
    }
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("missing singular vectors".into())),
    };
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let s: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&v| if v <= SINGULAR_RANK_TOL * top { 0.0 } else { v })
        .collect();
    let w = phi.subgradient(&s);
    let w = DVector::from_iterator(w.len(), w.into_iter().map(T::from_real));
    let mut scaled = u;
    for (mut col, wk) in scaled.column_iter_mut().zip(w.iter()) {
        col *= wk.clone();
    }
    Ok(scaled * v_t)
}

/// Indices of `x` ordered by decreasing magnitude; equal magnitudes keep index order.
pub fn decreasing_order(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()));
    idx
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!(
            "exponent {p} unsupported; need finite p >= 1"
        )));
    }
    Ok(())
}

fn check_finite<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Result<()> {
    if m.iter().any(|v| !v.clone().modulus().is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn lorentz_weight(p: f64, j: usize) -> f64 {
    (j as f64).powf(-1.0 + 1.0 / p)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn lp_norm(p: f64, mags: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = mags.clone().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return mags.sum();
    }
    let s: f64 = mags.map(|a| (a / top).powf(p)).sum();
    top * s.powf(1.0 / p)
}

fn lp_subgradient(p: f64, x: &[f64]) -> Vec<f64> {
    if p == 1.0 {
        return x.iter().map(|v| sign(*v)).collect();
    }
    let norm = lp_norm(p, x.iter().map(|v| v.abs()));
    if norm == 0.0 {
        return vec![0.0; x.len()];
    }
    x.iter()
        .map(|v| sign(*v) * (v.abs() / norm).powf(p - 1.0))
        .collect()
}
