//! Rounding of approximate measurements into exact ones, with certificates.
//!
//! The primitive is [`spectral_round`]: replace a positive contraction `a` by
//! its upper-half spectral projection `p(a)` and certify the move by
//!
//! ```text
//! ‖a − p(a)‖_φ  ≤  2 ‖a² − a‖_φ
//! ```
//!
//! for any state 2-norm. The bound is tight: half the identity saturates it.
//!
//! [`orthogonalize_tuple`] turns a whole tuple of positive contractions into
//! mutually orthogonal projections by rounding sequentially and compressing
//! each element by the complement of the projections produced so far:
//!
//! ```text
//! p_1 = p(a_1),   a_2' = (1 − p_1) a_2 (1 − p_1),   p_2 = p(a_2'),   ...
//! ```
//!
//! The compressed element is supported in the joint complement of the earlier
//! projections, so its spectral projections are too — orthogonality holds by
//! construction, not by luck. Each step carries its own certified bound,
//! computed against the compressed element that was actually rounded; the
//! distance back to the original element is also reported, as a measurement.
//!
//! [`lift_sequence`] applies the tuple procedure indexwise to a truncated
//! matrix-sequence model: each index is rounded independently (and in
//! parallel), failures are collected per index, and tail statistics over the
//! trailing window of a sequence stand in for limits that are not computable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;
use crate::linalg::{
    clamp_spectrum, eig_hermitian, opnorm_hermitian, spectral_projection_upper_half,
    state_two_norm, state_two_norm_raw, trace_two_norm, HermitianMatrix, LinalgError,
    StateVectorSpec,
};
use crate::player::{PlayerError, PlayerRep, PositiveTuple, PVM};

#[derive(Debug, Error)]
pub enum LiftError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Player(#[from] PlayerError),
    #[error("complement of the rounded projections fails the projection check: defect {defect:.3e} > {tol:.3e}")]
    PadLastNotProjection { defect: f64, tol: f64 },
    #[error("remainder is too negative to unitalize: min eigenvalue {min:.6}")]
    RemainderTooNegative { min: f64 },
    #[error("sequence is empty")]
    EmptySequence,
    #[error("tail fraction {0} is outside (0, 1]")]
    InvalidTailFraction(f64),
    #[error("entry {index} has operator norm {norm:.6} above the declared bound {declared:.6}")]
    NormExceedsDeclared { index: usize, norm: f64, declared: f64 },
}

/// What to do with the last element of a tuple after rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundingMode {
    /// Keep all rounded projections and report how far their sum is from the
    /// identity.
    ReportOnly,
    /// Replace the last projection by the complement `I − Σ_{k<m} p_k`, so
    /// the output is an exact PVM. The default for anything feeding the
    /// correlation extraction, which needs the sum-to-identity relation.
    PadLast,
}

/// Certificate for a single rounding step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralRoundReport {
    /// `‖a − p(a)‖_φ`.
    pub distance: f64,
    /// `2 ‖a² − a‖_φ`; always at least `distance` up to rounding noise.
    pub bound: f64,
}

/// Per-element record of a tuple rounding. All norms are state 2-norms with
/// respect to the state the caller supplied (the trace 2-norm when that state
/// is the normalized trace).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementDefect {
    /// `‖a_k² − a_k‖_φ` of the original input element.
    pub projection_defect: f64,
    /// `‖p_k − a_k'‖_φ` against the compressed element actually rounded.
    /// Certified: at most `certified_bound` up to rounding noise.
    pub rounding_distance: f64,
    /// `2 ‖a_k'² − a_k'‖_φ` for the compressed element `a_k'`.
    pub certified_bound: f64,
    /// `‖p_k − a_k‖_φ` against the original element. A measurement, not a
    /// certificate: the compression gap is not covered by the bound.
    pub distance_to_original: f64,
}

/// Full report of a tuple rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub per_element: Vec<ElementDefect>,
    /// `‖Σ_k out_k − I‖_φ` of the output projections (zero in
    /// [`RoundingMode::PadLast`] up to rounding).
    pub sum_defect: f64,
    /// max over pairs of `‖out_j out_k‖_φ`, `j ≠ k`.
    pub max_orthogonality_defect: f64,
    /// [`RoundingMode::PadLast`] only: `‖complement − p_m‖_φ`, the price of
    /// swapping the rounded last projection for the exact complement.
    pub pad_swap_distance: Option<f64>,
}

impl DefectReport {
    pub fn max_certified_bound(&self) -> f64 {
        self.per_element.iter().map(|e| e.certified_bound).fold(0.0, f64::max)
    }

    pub fn max_rounding_distance(&self) -> f64 {
        self.per_element.iter().map(|e| e.rounding_distance).fold(0.0, f64::max)
    }

    pub fn sum_distance_to_original(&self) -> f64 {
        self.per_element.iter().map(|e| e.distance_to_original).sum()
    }
}

/// Rounds a positive contraction to its upper-half spectral projection and
/// certifies the distance in the given state 2-norm.
pub fn spectral_round(
    a: &HermitianMatrix,
    phi: &StateVectorSpec,
    tol: &Tolerances,
) -> Result<(HermitianMatrix, SpectralRoundReport), LiftError> {
    if a.dim() != phi.dim() {
        return Err(LinalgError::DimensionMismatch { left: a.dim(), right: phi.dim() }.into());
    }
    let p = spectral_projection_upper_half(a, tol)?;
    let distance = state_two_norm(&a.sub(&p)?, phi)?;
    let bound = 2.0 * state_two_norm(&a.square().sub(a)?, phi)?;
    Ok((p, SpectralRoundReport { distance, bound }))
}

/// Sequentially rounds a tuple of positive contractions into mutually
/// orthogonal projections: round the first element, compress the next by the
/// complement of everything produced so far, round, repeat. Elements are
/// processed in the given order; callers may permute the tuple if they want a
/// different cut order.
pub fn orthogonalize_tuple(
    t: &PositiveTuple,
    phi: &StateVectorSpec,
    mode: RoundingMode,
    tol: &Tolerances,
) -> Result<(Vec<HermitianMatrix>, DefectReport), LiftError> {
    let dim = t.dim();
    if dim != phi.dim() {
        return Err(LinalgError::DimensionMismatch { left: dim, right: phi.dim() }.into());
    }
    let m = t.len();
    let identity = HermitianMatrix::identity(dim);
    let mut complement = identity.clone();
    let mut projections: Vec<HermitianMatrix> = Vec::with_capacity(m);
    let mut per_element = Vec::with_capacity(m);

    for (k, a) in t.elements().iter().enumerate() {
        let compressed = if k == 0 { a.clone() } else { a.compress_by(&complement)? };
        let (p, step) = spectral_round(&compressed, phi, tol)?;
        per_element.push(ElementDefect {
            projection_defect: state_two_norm(&a.square().sub(a)?, phi)?,
            rounding_distance: step.distance,
            certified_bound: step.bound,
            distance_to_original: state_two_norm(&p.sub(a)?, phi)?,
        });
        complement = complement.sub(&p)?;
        projections.push(p);
    }

    let mut pad_swap_distance = None;
    if mode == RoundingMode::PadLast {
        // complement currently equals I − Σ_all p_k; adding the last rounded
        // projection back gives I − Σ_{k<m} p_k.
        let pad = complement.add(&projections[m - 1])?;
        let defect = opnorm_hermitian(&pad.square().sub(&pad)?, tol)?;
        if defect > tol.proj {
            return Err(LiftError::PadLastNotProjection { defect, tol: tol.proj });
        }
        pad_swap_distance = Some(state_two_norm(&pad.sub(&projections[m - 1])?, phi)?);
        per_element[m - 1].distance_to_original =
            state_two_norm(&pad.sub(&t.elements()[m - 1])?, phi)?;
        projections[m - 1] = pad;
    }

    let mut sum = HermitianMatrix::zeros(dim);
    for p in &projections {
        sum = sum.add(p)?;
    }
    let sum_defect = state_two_norm(&sum.sub(&identity)?, phi)?;
    let mut max_orthogonality_defect: f64 = 0.0;
    for (j, p) in projections.iter().enumerate() {
        for q in projections.iter().skip(j + 1) {
            let prod = p.as_matrix() * q.as_matrix();
            max_orthogonality_defect =
                max_orthogonality_defect.max(state_two_norm_raw(&prod, phi)?);
        }
    }

    Ok((
        projections,
        DefectReport { per_element, sum_defect, max_orthogonality_defect, pad_swap_distance },
    ))
}

/// Report of a unitalization: how much eigenvalue clamping moved the last
/// element, and how far the output sum still is from the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitalizeReport {
    pub clamp_loss: f64,
    pub sum_defect: f64,
}

/// Makes a tuple sum to the identity by adding the remainder
/// `I − Σ_k a_k` onto the last element, then clamping its spectrum back into
/// `[0, 1]`. If the remainder is exactly zero the tuple is returned
/// unchanged. Refuses inputs whose remainder has an eigenvalue below `−1/2`:
/// those are not plausibly lifts of anything unital.
pub fn unitalize_tuple(
    t: &PositiveTuple,
    tol: &Tolerances,
) -> Result<(PositiveTuple, UnitalizeReport), LiftError> {
    let dim = t.dim();
    let mut sum = HermitianMatrix::zeros(dim);
    for a in t.elements() {
        sum = sum.add(a)?;
    }
    let remainder = HermitianMatrix::identity(dim).sub(&sum)?;
    if remainder.as_matrix().iter().all(|c| c.re == 0.0 && c.im == 0.0) {
        return Ok((t.clone(), UnitalizeReport { clamp_loss: 0.0, sum_defect: 0.0 }));
    }
    let eig = eig_hermitian(&remainder, tol)?;
    let min = eig.eigenvalues[0];
    if min < -0.5 {
        return Err(LiftError::RemainderTooNegative { min });
    }
    let raw = t.elements()[t.len() - 1].add(&remainder)?;
    let clamped = clamp_spectrum(&raw, 0.0, 1.0, tol)?;
    let clamp_loss = trace_two_norm(raw.sub(&clamped)?.as_matrix());

    let mut elements = t.elements().to_vec();
    let last = elements.len() - 1;
    elements[last] = clamped;
    let mut new_sum = HermitianMatrix::zeros(dim);
    for a in &elements {
        new_sum = new_sum.add(a)?;
    }
    let sum_defect =
        trace_two_norm(new_sum.sub(&HermitianMatrix::identity(dim))?.as_matrix());
    Ok((PositiveTuple::from_elements(elements)?, UnitalizeReport { clamp_loss, sum_defect }))
}

/// A finite prefix of a bounded sequence of Hermitian matrices of arbitrary
/// (possibly growing) dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSequence {
    entries: Vec<HermitianMatrix>,
    declared_sup_norm: f64,
}

impl MatrixSequence {
    /// Validates that every entry's operator norm stays within the declared
    /// uniform bound, up to `tol.pos`.
    pub fn new(
        entries: Vec<HermitianMatrix>,
        declared_sup_norm: f64,
        tol: &Tolerances,
    ) -> Result<Self, LiftError> {
        for (index, a) in entries.iter().enumerate() {
            let norm = opnorm_hermitian(a, tol)?;
            if norm > declared_sup_norm + tol.pos {
                return Err(LiftError::NormExceedsDeclared {
                    index,
                    norm,
                    declared: declared_sup_norm,
                });
            }
        }
        Ok(MatrixSequence { entries, declared_sup_norm })
    }

    pub fn entries(&self) -> &[HermitianMatrix] {
        &self.entries
    }

    pub fn declared_sup_norm(&self) -> f64 {
        self.declared_sup_norm
    }
}

/// Trace 2-norms per index plus sup/inf over the trailing window: the
/// computable stand-in for a limit along the tail of the sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub per_index: Vec<f64>,
    pub tail_sup: f64,
    pub tail_inf: f64,
    pub tail_len: usize,
}

/// Computes `‖a_n‖_2 = sqrt(tr_n(a_n* a_n))` per index and reports the sup
/// and inf over the trailing `ceil(tail_fraction * N)` indices.
pub fn seq_two_norm_tail(
    s: &MatrixSequence,
    tail_fraction: f64,
) -> Result<TailReport, LiftError> {
    if s.entries.is_empty() {
        return Err(LiftError::EmptySequence);
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(LiftError::InvalidTailFraction(tail_fraction));
    }
    let per_index: Vec<f64> =
        s.entries.iter().map(|a| trace_two_norm(a.as_matrix())).collect();
    let n = per_index.len();
    let tail_len = ((tail_fraction * n as f64).ceil() as usize).clamp(1, n);
    let tail = &per_index[n - tail_len..];
    let tail_sup = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail_inf = tail.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TailReport { per_index, tail_sup, tail_inf, tail_len })
}

/// One index of a truncated approximate-representation sequence: a tuple of
/// positive contractions per question, all on that index's dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceIndex {
    pub dim: usize,
    pub tuples: Vec<PositiveTuple>,
}

/// A truncated model of a sequence of approximate representations: per index,
/// one positive tuple per question. Dimensions may vary along the sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxRepSequence {
    questions: usize,
    answers: usize,
    indices: Vec<SequenceIndex>,
}

impl ApproxRepSequence {
    pub fn new(
        questions: usize,
        answers: usize,
        indices: Vec<SequenceIndex>,
    ) -> Result<Self, LiftError> {
        if questions == 0 || answers == 0 {
            return Err(PlayerError::Shape("questions and answers must be positive".into()).into());
        }
        for (i, index) in indices.iter().enumerate() {
            if index.tuples.len() != questions {
                return Err(PlayerError::Shape(format!(
                    "index {i} has {} tuples, expected {questions}",
                    index.tuples.len()
                ))
                .into());
            }
            for tuple in &index.tuples {
                if tuple.len() != answers || tuple.dim() != index.dim {
                    return Err(PlayerError::Shape(format!(
                        "index {i}: tuple shape ({}, {}) does not match ({}, {answers})",
                        tuple.dim(),
                        tuple.len(),
                        index.dim
                    ))
                    .into());
                }
            }
        }
        Ok(ApproxRepSequence { questions, answers, indices })
    }

    pub fn questions(&self) -> usize {
        self.questions
    }

    pub fn answers(&self) -> usize {
        self.answers
    }

    pub fn indices(&self) -> &[SequenceIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Successful lift of one sequence index.
#[derive(Debug, Clone)]
pub struct IndexLift {
    pub index: usize,
    pub dim: usize,
    pub rep: PlayerRep,
    /// One report per question.
    pub reports: Vec<DefectReport>,
}

/// Failure at one sequence index; other indices are unaffected.
#[derive(Debug, Clone)]
pub struct IndexLiftFailure {
    pub index: usize,
    pub dim: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub enum IndexLiftOutcome {
    Lifted(IndexLift),
    Failed(IndexLiftFailure),
}

/// Result of lifting a whole sequence, one outcome per index in order.
#[derive(Debug, Clone)]
pub struct SequenceLift {
    pub outcomes: Vec<IndexLiftOutcome>,
}

impl SequenceLift {
    pub fn lifted(&self) -> impl Iterator<Item = &IndexLift> {
        self.outcomes.iter().filter_map(|o| match o {
            IndexLiftOutcome::Lifted(l) => Some(l),
            IndexLiftOutcome::Failed(_) => None,
        })
    }

    pub fn failures(&self) -> impl Iterator<Item = &IndexLiftFailure> {
        self.outcomes.iter().filter_map(|o| match o {
            IndexLiftOutcome::Failed(f) => Some(f),
            IndexLiftOutcome::Lifted(_) => None,
        })
    }
}

/// Rounds every index of the sequence independently: per question, the tuple
/// is orthogonalized against the normalized trace of that index's dimension.
/// Indices are processed in parallel and reassembled in order; a failing
/// index is recorded and does not abort the rest.
pub fn lift_sequence(
    s: &ApproxRepSequence,
    mode: RoundingMode,
    tol: &Tolerances,
) -> SequenceLift {
    let outcomes: Vec<IndexLiftOutcome> = s
        .indices
        .par_iter()
        .enumerate()
        .map(|(index, seq_index)| match lift_index(seq_index, mode, tol) {
            Ok((rep, reports)) => {
                IndexLiftOutcome::Lifted(IndexLift { index, dim: seq_index.dim, rep, reports })
            }
            Err(e) => IndexLiftOutcome::Failed(IndexLiftFailure {
                index,
                dim: seq_index.dim,
                message: e.to_string(),
            }),
        })
        .collect();
    SequenceLift { outcomes }
}

fn lift_index(
    seq_index: &SequenceIndex,
    mode: RoundingMode,
    tol: &Tolerances,
) -> Result<(PlayerRep, Vec<DefectReport>), LiftError> {
    let phi = StateVectorSpec::normalized_trace(seq_index.dim);
    let mut pvms = Vec::with_capacity(seq_index.tuples.len());
    let mut reports = Vec::with_capacity(seq_index.tuples.len());
    for tuple in &seq_index.tuples {
        let (projections, report) = orthogonalize_tuple(tuple, &phi, mode, tol)?;
        pvms.push(PVM::from_projections(projections)?);
        reports.push(report);
    }
    Ok((PlayerRep::from_pvms(pvms)?, reports))
}
