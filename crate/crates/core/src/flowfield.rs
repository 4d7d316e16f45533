//! Markov chains and the divergence-free flux fields they induce.
//!
//! A row-stochastic transition matrix `Π` with stationary distribution `π`
//! yields the probability current `P = diag(π) Π`, whose antisymmetric part
//! `F = P - Pᵀ` is the net-flux field analysed by the rest of the crate.
//! [`markov_from_flow`] goes the other way and builds a chain whose net flux
//! reproduces a given field.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },
    #[error("transition graph is not strongly connected")]
    NotErgodic,
    #[error("stationary solve did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("entries ({i}, {j}) and ({j}, {i}) are not antisymmetric")]
    NotAntisymmetric { i: usize, j: usize },
    #[error("vertex {vertex} has divergence {value:e}")]
    Divergence { vertex: usize, value: f64 },
    #[error("total positive flux {total} exceeds 1")]
    InfeasibleMass { total: f64 },
    #[error("vertex {vertex} receives zero stationary mass")]
    ZeroColumn { vertex: usize },
    #[error("flux edge ({u}, {v}) is invalid: {reason}")]
    BadEdge { u: usize, v: usize, reason: &'static str },
}

impl FlowError {
    pub fn kind(&self) -> &'static str {
        match self {
            FlowError::BadShape { .. } => "bad_shape",
            FlowError::NonFinite { .. } => "non_finite",
            FlowError::NegativeEntry { .. } => "negative_entry",
            FlowError::RowSum { .. } => "row_sum",
            FlowError::NotErgodic => "not_ergodic",
            FlowError::NonConvergence { .. } => "non_convergence",
            FlowError::DimensionMismatch { .. } => "dimension_mismatch",
            FlowError::NotAntisymmetric { .. } => "not_antisymmetric",
            FlowError::Divergence { .. } => "divergence",
            FlowError::InfeasibleMass { .. } => "infeasible_mass",
            FlowError::ZeroColumn { .. } => "zero_column",
            FlowError::BadEdge { .. } => "bad_edge",
        }
    }
}

/// Row-stochastic transition matrix of a finite Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    entries: DMatrix<f64>,
}

impl TransitionMatrix {
    /// Validates nonnegativity and unit row sums (within `row_tol`).
    ///
    /// Strong connectivity is not required here; [`stationary_distribution`]
    /// rejects reducible chains.
    pub fn new(entries: DMatrix<f64>, row_tol: f64) -> Result<Self, FlowError> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows == 0 {
            return Err(FlowError::BadShape { rows, cols });
        }
        for i in 0..rows {
            let mut sum = 0.0;
            for j in 0..cols {
                let value = entries[(i, j)];
                if !value.is_finite() {
                    return Err(FlowError::NonFinite { row: i, col: j });
                }
                if value < 0.0 {
                    return Err(FlowError::NegativeEntry { row: i, col: j, value });
                }
                sum += value;
            }
            if (sum - 1.0).abs() > row_tol {
                return Err(FlowError::RowSum { row: i, sum });
            }
        }
        Ok(TransitionMatrix { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>], row_tol: f64) -> Result<Self, FlowError> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(FlowError::BadShape { rows: n, cols: bad.len() });
        }
        if n == 0 {
            return Err(FlowError::BadShape { rows: 0, cols: 0 });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]), row_tol)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// True when the directed graph of nonzero transitions is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n();
        let forward = reach(n, |u, v| self.entries[(u, v)] > 0.0);
        let backward = reach(n, |u, v| self.entries[(v, u)] > 0.0);
        forward.iter().all(|&r| r) && backward.iter().all(|&r| r)
    }

    /// True for an irreducible chain whose cycle lengths have gcd 1.
    pub fn is_aperiodic(&self) -> bool {
        if !self.is_irreducible() {
            return false;
        }
        let n = self.n();
        let mut level = vec![usize::MAX; n];
        level[0] = 0;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if self.entries[(u, v)] > 0.0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut period = 0usize;
        for u in 0..n {
            for v in 0..n {
                if self.entries[(u, v)] > 0.0 {
                    let diff = (level[u] + 1).abs_diff(level[v]);
                    period = gcd(period, diff);
                }
            }
        }
        period == 1
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[allow(clippy::needless_range_loop)]
fn reach(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if !seen[v] && edge(u, v) {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Stationary probability vector `π` with `πᵀΠ = πᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    probabilities: Vec<f64>,
}

impl StationaryDistribution {
    pub fn new(probabilities: Vec<f64>, row_tol: f64) -> Result<Self, FlowError> {
        for (i, &p) in probabilities.iter().enumerate() {
            if !p.is_finite() {
                return Err(FlowError::NonFinite { row: 0, col: i });
            }
            if p < 0.0 {
                return Err(FlowError::NegativeEntry { row: 0, col: i, value: p });
            }
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > row_tol {
            return Err(FlowError::RowSum { row: 0, sum });
        }
        Ok(StationaryDistribution { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// `‖πᵀΠ − πᵀ‖_∞`.
    pub fn residual(&self, tm: &TransitionMatrix) -> f64 {
        stationarity_residual(tm, &DVector::from_column_slice(&self.probabilities))
    }
}

fn stationarity_residual(tm: &TransitionMatrix, x: &DVector<f64>) -> f64 {
    let image = tm.entries().transpose() * x;
    (image - x).amax()
}

/// Solves for the stationary distribution of an irreducible chain.
///
/// The direct route solves `(Πᵀ − I)x = 0` with the last equation replaced by
/// `Σx = 1`. If that solve is singular or misses `tol`, power iteration on the
/// lazy chain `(I + Π)/2` takes over for up to `max_iter` steps.
pub fn stationary_distribution(
    tm: &TransitionMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<StationaryDistribution, FlowError> {
    if !tm.is_irreducible() {
        return Err(FlowError::NotErgodic);
    }
    let n = tm.n();
    let mut system = tm.entries().transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        system[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;

    if let Some(x) = system.lu().solve(&rhs) {
        if x.iter().all(|v| v.is_finite() && *v >= 0.0) {
            let x = &x / x.sum();
            if stationarity_residual(tm, &x) < tol {
                return StationaryDistribution::new(x.iter().copied().collect(), tol.max(1e-12));
            }
        }
        log::debug!("direct stationary solve missed tolerance, falling back to power iteration");
    }

    let lazy = (tm.entries().transpose() + DMatrix::identity(n, n)) * 0.5;
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        x = &lazy * &x;
        x /= x.sum();
        residual = stationarity_residual(tm, &x);
        if residual < tol {
            return StationaryDistribution::new(x.iter().copied().collect(), tol.max(1e-12));
        }
    }
    Err(FlowError::NonConvergence { iterations: max_iter, residual })
}

/// Stationary probability current `P = diag(π) Π`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityCurrent {
    entries: DMatrix<f64>,
}

impl ProbabilityCurrent {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn total(&self) -> f64 {
        self.entries.sum()
    }
}

pub fn probability_current(
    tm: &TransitionMatrix,
    pi: &StationaryDistribution,
) -> Result<ProbabilityCurrent, FlowError> {
    if pi.len() != tm.n() {
        return Err(FlowError::DimensionMismatch { expected: tm.n(), got: pi.len() });
    }
    let weights = DVector::from_column_slice(pi.probabilities());
    let entries = DMatrix::from_diagonal(&weights) * tm.entries();
    Ok(ProbabilityCurrent { entries })
}

/// Antisymmetric net-flux field, stored as its strict upper triangle so that
/// `F = −Fᵀ` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct NetFluxField {
    n: usize,
    upper: Vec<f64>,
    markov: bool,
}

impl NetFluxField {
    pub fn zeros(n: usize) -> Self {
        NetFluxField { n, upper: vec![0.0; n * n.saturating_sub(1) / 2], markov: false }
    }

    /// Builds a field from a dense matrix, requiring `|F_ij + F_ji| ≤ tol`.
    /// The stored value is the antisymmetric average `(F_ij − F_ji) / 2`.
    pub fn from_dense(m: &DMatrix<f64>, tol: f64) -> Result<Self, FlowError> {
        let (rows, cols) = m.shape();
        if rows != cols || rows == 0 {
            return Err(FlowError::BadShape { rows, cols });
        }
        let mut field = NetFluxField::zeros(rows);
        for i in 0..rows {
            for j in 0..rows {
                if !m[(i, j)].is_finite() {
                    return Err(FlowError::NonFinite { row: i, col: j });
                }
            }
            if m[(i, i)].abs() > tol {
                return Err(FlowError::NotAntisymmetric { i, j: i });
            }
            for j in (i + 1)..rows {
                if (m[(i, j)] + m[(j, i)]).abs() > tol {
                    return Err(FlowError::NotAntisymmetric { i, j });
                }
                field.set(i, j, 0.5 * (m[(i, j)] - m[(j, i)]));
            }
        }
        Ok(field)
    }

    /// Builds a field from 0-based `(u, v, flux)` triples meaning `F_uv = flux`.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, FlowError> {
        if n == 0 {
            return Err(FlowError::BadShape { rows: 0, cols: 0 });
        }
        let mut field = NetFluxField::zeros(n);
        let mut seen = std::collections::HashSet::new();
        for &(u, v, flux) in edges {
            if u >= n || v >= n {
                return Err(FlowError::BadEdge { u, v, reason: "vertex out of range" });
            }
            if u == v {
                return Err(FlowError::BadEdge { u, v, reason: "self-loop" });
            }
            if !flux.is_finite() {
                return Err(FlowError::BadEdge { u, v, reason: "non-finite flux" });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(FlowError::BadEdge { u, v, reason: "duplicate pair" });
            }
            field.set(u, v, flux);
        }
        Ok(field)
    }

    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => 0.0,
            Less => self.upper[self.index(i, j)],
            Greater => -self.upper[self.index(j, i)],
        }
    }

    /// Sets `F_ij = value` (and therefore `F_ji = −value`).
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => {}
            Less => {
                let k = self.index(i, j);
                self.upper[k] = value;
            }
            Greater => {
                let k = self.index(j, i);
                self.upper[k] = -value;
            }
        }
    }

    /// Copy with `F_ij` replaced by `value`.
    pub fn with_flux(&self, i: usize, j: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.set(i, j, value);
        out
    }

    /// Whether the field came from a Markov chain (so `𝟙ᵀF₊𝟙 ≤ 1` is expected).
    pub fn is_markov(&self) -> bool {
        self.markov
    }

    pub fn with_markov_flag(mut self, markov: bool) -> Self {
        self.markov = markov;
        self
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Row sums `F𝟙`.
    pub fn divergence(&self) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).sum()).collect()
    }

    pub fn max_divergence(&self) -> f64 {
        self.divergence().iter().fold(0.0, |acc, d| acc.max(d.abs()))
    }

    /// Errors with the worst vertex if any row sum exceeds `tol`.
    pub fn check_divergence_free(&self, tol: f64) -> Result<(), FlowError> {
        let div = self.divergence();
        let (vertex, value) = div
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, d)| if d.abs() > best.1.abs() { (i, d) } else { best });
        if value.abs() > tol {
            Err(FlowError::Divergence { vertex, value })
        } else {
            Ok(())
        }
    }

    /// `F₊ = max(F, 0)` entrywise.
    pub fn positive_part(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).max(0.0))
    }

    /// `𝟙ᵀF₊𝟙`, the total positive flux.
    pub fn total_positive(&self) -> f64 {
        self.upper.iter().map(|v| v.abs()).sum()
    }

    pub fn is_markov_normalized(&self, tol: f64) -> bool {
        self.total_positive() <= 1.0 + tol
    }

    pub fn scaled(&self, factor: f64) -> Self {
        NetFluxField {
            n: self.n,
            upper: self.upper.iter().map(|v| v * factor).collect(),
            markov: self.markov,
        }
    }

    /// Zeroes every entry with `|F_ij| < eps`.
    pub fn snapped(mut self, eps: f64) -> Self {
        for v in &mut self.upper {
            if v.abs() < eps {
                *v = 0.0;
            }
        }
        self
    }

    /// Projection `(I − 𝟙𝟙ᵀ/N) F (I − 𝟙𝟙ᵀ/N)`, which removes any divergence.
    pub fn centered(&self) -> Self {
        let n = self.n;
        let projector = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
        let dense = &projector * self.to_dense() * &projector;
        let mut out = NetFluxField::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                out.set(i, j, 0.5 * (dense[(i, j)] - dense[(j, i)]));
            }
        }
        out.markov = self.markov;
        out
    }

    /// Unordered pairs `i < j` with nonzero flux.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j) != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// `F = P − Pᵀ`, with entries below `snap` in magnitude set to exactly zero.
pub fn net_flux(p: &ProbabilityCurrent, snap: f64) -> NetFluxField {
    let n = p.n();
    let mut field = NetFluxField::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            field.set(i, j, p.entries[(i, j)] - p.entries[(j, i)]);
        }
    }
    field.snapped(snap).with_markov_flag(true)
}

/// How the symmetric mass `M` of `P = M + F₊` is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassPlacement {
    /// Spread uniformly over every off-diagonal entry.
    UniformOffdiagonal,
    /// Half on the diagonal, half over both orientations of each support
    /// edge of `F`. With an empty support everything lands on the diagonal.
    UniformDiagonalPlus,
    /// Spread uniformly over all `n²` entries.
    UniformAll,
}

/// Builds a transition matrix whose stationary net flux is `f`.
///
/// Requires `F𝟙 = 0` and `𝟙ᵀF₊𝟙 ≤ 1`. When the total positive flux is
/// exactly one (within `tol`), `P = F₊` and no mass is added.
pub fn markov_from_flow(
    f: &NetFluxField,
    placement: MassPlacement,
    tol: f64,
) -> Result<TransitionMatrix, FlowError> {
    let n = f.n();
    f.check_divergence_free(tol)?;
    let total = f.total_positive();
    if total > 1.0 + tol {
        return Err(FlowError::InfeasibleMass { total });
    }
    let mut p = f.positive_part();
    let free = 1.0 - total;
    if free > tol {
        match placement {
            MassPlacement::UniformOffdiagonal => {
                if n == 1 {
                    p[(0, 0)] += free;
                } else {
                    let share = free / (n * (n - 1)) as f64;
                    for i in 0..n {
                        for j in 0..n {
                            if i != j {
                                p[(i, j)] += share;
                            }
                        }
                    }
                }
            }
            MassPlacement::UniformDiagonalPlus => {
                let support = f.support();
                let diagonal = if support.is_empty() { free } else { free / 2.0 };
                for i in 0..n {
                    p[(i, i)] += diagonal / n as f64;
                }
                if !support.is_empty() {
                    let share = (free - diagonal) / (2 * support.len()) as f64;
                    for &(i, j) in &support {
                        p[(i, j)] += share;
                        p[(j, i)] += share;
                    }
                }
            }
            MassPlacement::UniformAll => {
                p.add_scalar_mut(free / (n * n) as f64);
            }
        }
    }
    let pi: Vec<f64> = (0..n).map(|j| p.column(j).sum()).collect();
    if let Some(vertex) = pi.iter().position(|&m| m <= 0.0) {
        return Err(FlowError::ZeroColumn { vertex });
    }
    let entries = DMatrix::from_fn(n, n, |i, j| p[(i, j)] / pi[i]);
    let tm = TransitionMatrix::new(entries, tol.max(1e-12) * n as f64)?;
    if !tm.is_irreducible() {
        return Err(FlowError::NotErgodic);
    }
    Ok(tm)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    fn three_state(gamma: f64) -> NetFluxField {
        NetFluxField::from_edges(3, &[(0, 1, -gamma), (0, 2, gamma), (1, 2, -gamma)]).unwrap()
    }

    fn hexagon() -> NetFluxField {
        let edges: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6, 1.0)).collect();
        NetFluxField::from_edges(6, &edges).unwrap()
    }

    #[test]
    fn doubly_stochastic_gives_uniform() {
        let tm = TransitionMatrix::from_rows(
            &[vec![0.2, 0.5, 0.3], vec![0.3, 0.2, 0.5], vec![0.5, 0.3, 0.2]],
            TOL,
        )
        .unwrap();
        let pi = stationary_distribution(&tm, TOL, 1000).unwrap();
        for p in pi.probabilities() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_cycle_is_periodic_but_solvable() {
        let tm = TransitionMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], TOL).unwrap();
        assert!(tm.is_irreducible());
        assert!(!tm.is_aperiodic());
        let pi = stationary_distribution(&tm, TOL, 1000).unwrap();
        assert!((pi.probabilities()[0] - 0.5).abs() < 1e-12);
        assert!((pi.probabilities()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reducible_chain_is_rejected() {
        let tm = TransitionMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]], TOL).unwrap();
        assert_eq!(stationary_distribution(&tm, TOL, 10), Err(FlowError::NotErgodic));
    }

    #[test]
    fn invalid_matrices_are_rejected() {
        assert!(matches!(
            TransitionMatrix::from_rows(&[vec![0.5, 0.4], vec![0.5, 0.5]], TOL),
            Err(FlowError::RowSum { row: 0, .. })
        ));
        assert!(matches!(
            TransitionMatrix::from_rows(&[vec![1.5, -0.5], vec![0.5, 0.5]], TOL),
            Err(FlowError::NegativeEntry { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            TransitionMatrix::from_rows(&[vec![1.0], vec![0.5, 0.5]], TOL),
            Err(FlowError::BadShape { .. })
        ));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn current_of_uniform_symmetric_chain() {
        let rows = vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]];
        let tm = TransitionMatrix::from_rows(&rows, TOL).unwrap();
        let pi = stationary_distribution(&tm, TOL, 100).unwrap();
        let p = probability_current(&tm, &pi).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((p.entries()[(i, j)] - rows[i][j] / 3.0).abs() < 1e-12);
            }
        }
        assert!((p.total() - 1.0).abs() < 1e-12);
        let f = net_flux(&p, 1e-12);
        assert_eq!(f.total_positive(), 0.0);
    }

    #[test]
    fn current_preserves_zero_pattern_and_checks_dimension() {
        let tm = TransitionMatrix::from_rows(
            &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.5, 0.0, 0.5]],
            TOL,
        )
        .unwrap();
        let pi = stationary_distribution(&tm, TOL, 100).unwrap();
        let p = probability_current(&tm, &pi).unwrap();
        assert_eq!(p.entries()[(0, 2)], 0.0);
        assert_eq!(p.entries()[(1, 0)], 0.0);
        let short = StationaryDistribution::new(vec![0.5, 0.5], TOL).unwrap();
        assert_eq!(
            probability_current(&tm, &short),
            Err(FlowError::DimensionMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn cyclic_chain_has_equal_magnitude_fluxes() {
        let tm = TransitionMatrix::from_rows(
            &[vec![0.2, 0.6, 0.2], vec![0.2, 0.2, 0.6], vec![0.6, 0.2, 0.2]],
            TOL,
        )
        .unwrap();
        let pi = stationary_distribution(&tm, TOL, 100).unwrap();
        let f = net_flux(&probability_current(&tm, &pi).unwrap(), 1e-12);
        let gamma = f.get(0, 1);
        assert!(gamma.abs() > 0.1);
        assert!((f.get(1, 2) - gamma).abs() < 1e-12);
        assert!((f.get(2, 0) - gamma).abs() < 1e-12);
        assert!(f.max_divergence() < 1e-12);
        assert!(f.is_markov_normalized(TOL));
    }

    #[test]
    fn antisymmetry_is_structural() {
        let mut f = NetFluxField::zeros(4);
        f.set(3, 1, 0.25);
        assert_eq!(f.get(3, 1), 0.25);
        assert_eq!(f.get(1, 3), -0.25);
        assert_eq!(f.get(2, 2), 0.0);
    }

    #[test]
    fn positive_part_of_hexagon() {
        let plus = hexagon().positive_part();
        for i in 0..6 {
            for j in 0..6 {
                let expected = if j == (i + 1) % 6 { 1.0 } else { 0.0 };
                assert_eq!(plus[(i, j)], expected);
            }
        }
        assert_eq!(NetFluxField::zeros(3).positive_part(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn from_dense_rejects_asymmetric_pairs() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.1, 0.2, 0.0]);
        assert_eq!(NetFluxField::from_dense(&m, TOL), Err(FlowError::NotAntisymmetric { i: 0, j: 1 }));
    }

    #[test]
    fn from_edges_rejects_duplicates() {
        assert!(matches!(
            NetFluxField::from_edges(3, &[(0, 1, 0.1), (1, 0, 0.1)]),
            Err(FlowError::BadEdge { reason: "duplicate pair", .. })
        ));
        assert!(matches!(NetFluxField::from_edges(3, &[(0, 3, 0.1)]), Err(FlowError::BadEdge { .. })));
    }

    #[test]
    fn centering_removes_divergence() {
        let f = NetFluxField::from_edges(4, &[(0, 1, 1.0), (1, 2, 0.5), (2, 3, 0.25)]).unwrap();
        assert!(f.max_divergence() > 0.1);
        let c = f.centered();
        assert!(c.max_divergence() < 1e-12);
        // Already divergence-free fields are fixed points.
        let h = hexagon();
        let hc = h.centered();
        for i in 0..6 {
            for j in 0..6 {
                assert!((h.get(i, j) - hc.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn three_state_round_trip() {
        let f = three_state(0.1);
        let tm = markov_from_flow(&f, MassPlacement::UniformAll, TOL).unwrap();
        // M = (0.7/9) 𝟙𝟙ᵀ gives uniform column sums.
        let pi = stationary_distribution(&tm, TOL, 1000).unwrap();
        for p in pi.probabilities() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        let back = net_flux(&probability_current(&tm, &pi).unwrap(), 0.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.get(i, j) - f.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hexagon_equality_branch_is_a_permutation() {
        let f = hexagon().scaled(1.0 / 6.0);
        let tm = markov_from_flow(&f, MassPlacement::UniformOffdiagonal, TOL).unwrap();
        for i in 0..6 {
            assert!((tm.get(i, (i + 1) % 6) - 1.0).abs() < 1e-12);
        }
        let pi = stationary_distribution(&tm, TOL, 1000).unwrap();
        let p = probability_current(&tm, &pi).unwrap();
        let plus = f.positive_part();
        assert!((p.entries() - plus).amax() < 1e-12);
    }

    #[test]
    fn zero_flow_with_diagonal_mass_is_not_ergodic() {
        let f = NetFluxField::zeros(3);
        assert_eq!(
            markov_from_flow(&f, MassPlacement::UniformDiagonalPlus, TOL),
            Err(FlowError::NotErgodic)
        );
        let tm = markov_from_flow(&f, MassPlacement::UniformOffdiagonal, TOL).unwrap();
        let pi = stationary_distribution(&tm, TOL, 100).unwrap();
        let back = net_flux(&probability_current(&tm, &pi).unwrap(), 1e-12);
        assert_eq!(back.total_positive(), 0.0);
    }

    #[test]
    fn infeasible_and_zero_column_errors() {
        assert!(matches!(
            markov_from_flow(&hexagon(), MassPlacement::UniformOffdiagonal, TOL),
            Err(FlowError::InfeasibleMass { .. })
        ));
        // Total positive flux exactly one but vertex 3 carries none of it.
        let mut f = three_state(1.0 / 3.0).to_dense();
        f = f.resize(4, 4, 0.0);
        let f = NetFluxField::from_dense(&f, TOL).unwrap();
        assert_eq!(
            markov_from_flow(&f, MassPlacement::UniformOffdiagonal, TOL),
            Err(FlowError::ZeroColumn { vertex: 3 })
        );
    }

    #[test]
    fn diagonal_plus_placement_round_trips() {
        let f = hexagon().scaled(0.05);
        let tm = markov_from_flow(&f, MassPlacement::UniformDiagonalPlus, TOL).unwrap();
        assert!(tm.is_aperiodic());
        let pi = stationary_distribution(&tm, 1e-12, 1000).unwrap();
        let back = net_flux(&probability_current(&tm, &pi).unwrap(), 0.0);
        for i in 0..6 {
            for j in 0..6 {
                assert!((back.get(i, j) - f.get(i, j)).abs() < 1e-12);
            }
        }
    }
}
