//! Synchronous correlation tables from tracial states.
//!
//! Given a representation and a tracial state, the table entry is the
//! two-moment `p(ab|xy) = tau(e(a|x) e(b|y))`. Tables produced this way are
//! nonnegative, normalized per question pair, synchronous
//! (`p(ab|xx) = 0` for `a != b`) and symmetric under `(a,x) <-> (b,y)` swap;
//! [`check_table`] measures how far an arbitrary table is from these
//! properties, and [`gram_psd_check`] verifies the independent moment-matrix
//! certificate. [`pipeline_correlations`] composes the whole path: lift a
//! truncated sequence indexwise, extract per-index tables with the normalized
//! trace, and measure convergence to a target.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;
use crate::lift::{
    lift_sequence, ApproxRepSequence, IndexLiftOutcome, LiftError, RoundingMode,
};
use crate::linalg::{eig_hermitian, HermitianMatrix, LinalgError};
use crate::player::{validate_player_rep, PlayerError, PlayerRep, TraceSpec};

#[derive(Debug, Error)]
pub enum CorrelationError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Player(#[from] PlayerError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error("table shapes do not match: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("representation fails PVM validation: max defect {defect:.3e} exceeds {tol:.3e}")]
    InvalidRep { defect: f64, tol: f64 },
    #[error("values length {got} does not match answers^2 * questions^2 = {want}")]
    BadValueCount { got: usize, want: usize },
}

/// How distances between tables are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConvergenceMetric {
    /// Largest entrywise absolute difference.
    Sup,
    /// Sum of entrywise absolute differences.
    L1,
}

/// A real table `p(ab|xy)`, stored flat in `[a][b][x][y]` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    questions: usize,
    answers: usize,
    values: Vec<f64>,
}

impl CorrelationTable {
    pub fn from_values(
        questions: usize,
        answers: usize,
        values: Vec<f64>,
    ) -> Result<Self, CorrelationError> {
        let want = answers * answers * questions * questions;
        if values.len() != want {
            return Err(CorrelationError::BadValueCount { got: values.len(), want });
        }
        Ok(CorrelationTable { questions, answers, values })
    }

    pub fn zeros(questions: usize, answers: usize) -> Self {
        CorrelationTable {
            questions,
            answers,
            values: vec![0.0; answers * answers * questions * questions],
        }
    }

    fn idx(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        ((a * self.answers + b) * self.questions + x) * self.questions + y
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.values[self.idx(a, b, x, y)]
    }

    pub fn set(&mut self, a: usize, b: usize, x: usize, y: usize, value: f64) {
        let i = self.idx(a, b, x, y);
        self.values[i] = value;
    }

    pub fn questions(&self) -> usize {
        self.questions
    }

    pub fn answers(&self) -> usize {
        self.answers
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.questions == other.questions && self.answers == other.answers
    }
}

/// Defect report for the defining properties of a synchronous correlation
/// table. Reports, never errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    /// max of `-p(ab|xy)` over entries (0 when all entries are nonnegative).
    pub max_negativity: f64,
    /// max over `(x,y)` of `|sum_ab p(ab|xy) - 1|`.
    pub max_normalization_defect: f64,
    /// max over `x` and `a != b` of `p(ab|xx)`.
    pub max_synchronicity_defect: f64,
    /// max over entries of `|p(ab|xy) - p(ba|yx)|`.
    pub max_symmetry_defect: f64,
    pub tol: f64,
    pub valid: bool,
}

impl TableReport {
    pub fn max_defect(&self) -> f64 {
        self.max_negativity
            .max(self.max_normalization_defect)
            .max(self.max_synchronicity_defect)
            .max(self.max_symmetry_defect)
    }
}

/// Extracts the two-moment table `p(ab|xy) = tau(e(a|x) e(b|y))` from a
/// representation under a tracial state. The representation must pass PVM
/// validation within `tol.proj`; traces with imaginary residue beyond
/// `tol.imag` also reject the representation, since a large residue means the
/// projection relations were violated.
pub fn correlation_from_rep(
    rep: &PlayerRep,
    tau: &TraceSpec,
    tol: &Tolerances,
) -> Result<CorrelationTable, CorrelationError> {
    if rep.dim() != tau.total_dim() {
        return Err(PlayerError::DimensionMismatch {
            matrix: rep.dim(),
            trace: tau.total_dim(),
        }
        .into());
    }
    let report = validate_player_rep(rep, tol.proj);
    if !report.valid {
        return Err(CorrelationError::InvalidRep {
            defect: report.max_defect(),
            tol: tol.proj,
        });
    }
    let (qs, ans) = (rep.questions(), rep.answers());
    let mut table = CorrelationTable::zeros(qs, ans);
    for x in 0..qs {
        for y in 0..qs {
            for a in 0..ans {
                for b in 0..ans {
                    let product =
                        rep.projection(a, x).as_matrix() * rep.projection(b, y).as_matrix();
                    let value = tau.apply_raw(&product, tol).map_err(|e| match e {
                        PlayerError::ImaginaryResidue { imag, tol } => {
                            CorrelationError::InvalidRep { defect: imag, tol }
                        }
                        other => other.into(),
                    })?;
                    table.set(a, b, x, y, value);
                }
            }
        }
    }
    Ok(table)
}

/// Measures the defining properties of a synchronous correlation table.
pub fn check_table(t: &CorrelationTable, tol: f64) -> TableReport {
    let (qs, ans) = (t.questions(), t.answers());
    let mut max_negativity: f64 = 0.0;
    let mut max_normalization_defect: f64 = 0.0;
    let mut max_synchronicity_defect: f64 = 0.0;
    let mut max_symmetry_defect: f64 = 0.0;
    for x in 0..qs {
        for y in 0..qs {
            let mut total = 0.0;
            for a in 0..ans {
                for b in 0..ans {
                    let v = t.get(a, b, x, y);
                    total += v;
                    max_negativity = max_negativity.max(-v);
                    max_symmetry_defect =
                        max_symmetry_defect.max((v - t.get(b, a, y, x)).abs());
                    if x == y && a != b {
                        max_synchronicity_defect = max_synchronicity_defect.max(v);
                    }
                }
            }
            max_normalization_defect = max_normalization_defect.max((total - 1.0).abs());
        }
    }
    let valid = max_negativity <= tol
        && max_normalization_defect <= tol
        && max_synchronicity_defect <= tol
        && max_symmetry_defect <= tol;
    TableReport {
        max_negativity,
        max_normalization_defect,
        max_synchronicity_defect,
        max_symmetry_defect,
        tol,
        valid,
    }
}

/// Result of the moment-matrix certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentMatrixReport {
    pub min_eigenvalue: f64,
    pub psd: bool,
}

/// Independent certificate: the matrix `M[(a,x), (b,y)] = tau(e(a|x) e(b|y))`
/// is a Gram matrix of projections under the tau-inner product, hence
/// positive semidefinite. Rows and columns are indexed by `x * answers + a`.
pub fn gram_psd_check(
    rep: &PlayerRep,
    tau: &TraceSpec,
    tol: &Tolerances,
) -> Result<MomentMatrixReport, CorrelationError> {
    if rep.dim() != tau.total_dim() {
        return Err(PlayerError::DimensionMismatch {
            matrix: rep.dim(),
            trace: tau.total_dim(),
        }
        .into());
    }
    let (qs, ans) = (rep.questions(), rep.answers());
    let side = qs * ans;
    let mut entries = vec![0.0; side * side];
    for x in 0..qs {
        for a in 0..ans {
            for y in 0..qs {
                for b in 0..ans {
                    let product =
                        rep.projection(a, x).as_matrix() * rep.projection(b, y).as_matrix();
                    let value = tau.apply_raw(&product, tol)?;
                    entries[(x * ans + a) * side + (y * ans + b)] = value;
                }
            }
        }
    }
    let mat = crate::linalg::CMatrix::from_fn(side, side, |i, j| {
        num_complex::Complex64::new(entries[i * side + j], 0.0)
    });
    let moment = HermitianMatrix::symmetrized(mat);
    let eig = eig_hermitian(&moment, tol)?;
    let min_eigenvalue = eig.eigenvalues[0];
    Ok(MomentMatrixReport { min_eigenvalue, psd: min_eigenvalue >= -tol.psd })
}

/// Distance between two tables of the same shape.
pub fn table_distance(
    p: &CorrelationTable,
    q: &CorrelationTable,
    metric: ConvergenceMetric,
) -> Result<f64, CorrelationError> {
    if !p.same_shape(q) {
        return Err(CorrelationError::ShapeMismatch(
            p.questions(),
            p.answers(),
            q.questions(),
            q.answers(),
        ));
    }
    let diffs = p.values().iter().zip(q.values()).map(|(a, b)| (a - b).abs());
    Ok(match metric {
        ConvergenceMetric::Sup => diffs.fold(0.0, f64::max),
        ConvergenceMetric::L1 => diffs.sum(),
    })
}

/// Distances to a target table along a sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub per_index_distance: Vec<f64>,
    /// Distance at the last successfully lifted index; NaN when no index
    /// succeeded.
    pub final_distance: f64,
    pub metric: ConvergenceMetric,
}

/// Per-index outcome of the full pipeline run, in index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRow {
    pub index: usize,
    pub dim: usize,
    /// `Ok` or the per-index error message.
    pub status: String,
    /// Largest certified rounding bound across questions and elements.
    pub max_certified_bound: Option<f64>,
    pub distance: Option<f64>,
}

/// Everything a pipeline run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub rows: Vec<PipelineRow>,
    pub convergence: ConvergenceReport,
}

/// Lifts the sequence indexwise (padding the last projection so every index
/// yields an exact PVM), extracts each index's table under the single-block
/// normalized trace of that index's dimension, and measures the distance to
/// the target. Per-index failures are recorded in their row and do not stop
/// the remaining indices.
pub fn pipeline_correlations(
    s: &ApproxRepSequence,
    target: &CorrelationTable,
    metric: ConvergenceMetric,
    tol: &Tolerances,
) -> Result<PipelineReport, CorrelationError> {
    if target.questions() != s.questions() || target.answers() != s.answers() {
        return Err(CorrelationError::ShapeMismatch(
            s.questions(),
            s.answers(),
            target.questions(),
            target.answers(),
        ));
    }
    let lift = lift_sequence(s, RoundingMode::PadLast, tol);
    let mut rows = Vec::with_capacity(lift.outcomes.len());
    let mut per_index_distance = Vec::new();
    for outcome in &lift.outcomes {
        match outcome {
            IndexLiftOutcome::Lifted(l) => {
                let max_certified_bound = l
                    .reports
                    .iter()
                    .map(|r| r.max_certified_bound())
                    .fold(0.0, f64::max);
                let tau = TraceSpec::single_block(l.dim);
                let row = match correlation_from_rep(&l.rep, &tau, tol)
                    .and_then(|table| table_distance(&table, target, metric))
                {
                    Ok(distance) => {
                        per_index_distance.push(distance);
                        PipelineRow {
                            index: l.index,
                            dim: l.dim,
                            status: "ok".into(),
                            max_certified_bound: Some(max_certified_bound),
                            distance: Some(distance),
                        }
                    }
                    Err(e) => PipelineRow {
                        index: l.index,
                        dim: l.dim,
                        status: e.to_string(),
                        max_certified_bound: Some(max_certified_bound),
                        distance: None,
                    },
                };
                rows.push(row);
            }
            IndexLiftOutcome::Failed(f) => rows.push(PipelineRow {
                index: f.index,
                dim: f.dim,
                status: f.message.clone(),
                max_certified_bound: None,
                distance: None,
            }),
        }
    }
    let final_distance = per_index_distance.last().copied().unwrap_or(f64::NAN);
    Ok(PipelineReport {
        rows,
        convergence: ConvergenceReport { per_index_distance, final_distance, metric },
    })
}
