//! Finite-dimensional measurement families.
//!
//! A [`PlayerRep`] is one projection-valued measure per question, all acting
//! on a common dimension. The defining relations are checked numerically, not
//! by construction, so deliberately defective inputs can be represented,
//! validated and repaired (see [`crate::lift`]). Tracial states on
//! block-diagonal algebras are carried by [`TraceSpec`]: a convex combination
//! of block normalized traces, which is the complete set of tracial states on
//! a finite-dimensional algebra.

use num_complex::Complex64;
use thiserror::Error;

use crate::config::Tolerances;
use crate::linalg::{
    self, clamp_spectrum, haar_unitary, is_positive_contraction, opnorm_hermitian,
    random_unit_norm_hermitian, spectral_norm, CMatrix, HermitianMatrix, LinalgError,
};
use crate::rng::rng_from_seed;

#[derive(Debug, Error)]
pub enum PlayerError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("function value {value} at question {question} is outside 0..{answers}")]
    InvalidFunctionRange { question: usize, value: usize, answers: usize },
    #[error("{answers} answers exceed dimension {dim}; some outcomes would be impossible")]
    AnswerCountExceedsDim { answers: usize, dim: usize },
    #[error("perturbation strength {0} is outside [0, 0.2]")]
    InvalidPerturbation(f64),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("element {index} is not a positive contraction within {tol:.3e}")]
    NotPositiveContraction { index: usize, tol: f64 },
    #[error("PVM invariant violated: {kind} defect {defect:.3e} exceeds {tol:.3e}")]
    PvmInvariantViolated { kind: &'static str, defect: f64, tol: f64 },
    #[error("trace weights must be nonnegative and sum to 1, got sum {sum}")]
    InvalidWeights { sum: f64 },
    #[error("dimension mismatch: matrix dim {matrix} vs trace total dim {trace}")]
    DimensionMismatch { matrix: usize, trace: usize },
    #[error("off-block mass {mass:.3e} exceeds tolerance {tol:.3e}")]
    BlockLeakage { mass: f64, tol: f64 },
    #[error("trace value has imaginary residue {imag:.3e} beyond tolerance {tol:.3e}")]
    ImaginaryResidue { imag: f64, tol: f64 },
}

/// A tuple of projections meant to be mutually orthogonal and sum to the
/// identity. Shape is guaranteed by construction; the numeric relations are
/// checked by [`PVM::new`] or reported by [`validate_player_rep`].
#[derive(Debug, Clone, PartialEq)]
pub struct PVM {
    dim: usize,
    projections: Vec<HermitianMatrix>,
}

impl PVM {
    /// Shape-checked constructor: at least one outcome, all on one dimension.
    pub fn from_projections(projections: Vec<HermitianMatrix>) -> Result<Self, PlayerError> {
        let dim = match projections.first() {
            Some(p) => p.dim(),
            None => return Err(PlayerError::Shape("a PVM needs at least one outcome".into())),
        };
        if let Some(bad) = projections.iter().find(|p| p.dim() != dim) {
            return Err(PlayerError::Shape(format!(
                "mixed dimensions in PVM: {} vs {}",
                dim,
                bad.dim()
            )));
        }
        Ok(PVM { dim, projections })
    }

    /// Shape check plus numeric validation of the three defining relations
    /// within `tol.proj`.
    pub fn new(projections: Vec<HermitianMatrix>, tol: &Tolerances) -> Result<Self, PlayerError> {
        let pvm = PVM::from_projections(projections)?;
        let defects = pvm.defects();
        if defects.projection > tol.proj {
            return Err(PlayerError::PvmInvariantViolated {
                kind: "idempotence",
                defect: defects.projection,
                tol: tol.proj,
            });
        }
        if defects.orthogonality > tol.proj {
            return Err(PlayerError::PvmInvariantViolated {
                kind: "orthogonality",
                defect: defects.orthogonality,
                tol: tol.proj,
            });
        }
        if defects.sum > tol.proj {
            return Err(PlayerError::PvmInvariantViolated {
                kind: "sum-to-identity",
                defect: defects.sum,
                tol: tol.proj,
            });
        }
        Ok(pvm)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn answers(&self) -> usize {
        self.projections.len()
    }

    pub fn projections(&self) -> &[HermitianMatrix] {
        &self.projections
    }

    pub fn projection(&self, answer: usize) -> &HermitianMatrix {
        &self.projections[answer]
    }

    /// Operator-norm defects of the three defining relations. Numerical
    /// failures inside the eigensolver are reported as infinite defects
    /// rather than errors, so validation never aborts.
    pub fn defects(&self) -> QuestionDefects {
        let tols = Tolerances::default();
        let inf = f64::INFINITY;
        let mut projection: f64 = 0.0;
        for p in &self.projections {
            let d = p.square().sub(p).expect("same dim");
            projection = projection.max(opnorm_hermitian(&d, &tols).unwrap_or(inf));
        }
        let mut orthogonality: f64 = 0.0;
        for (j, p) in self.projections.iter().enumerate() {
            for q in self.projections.iter().skip(j + 1) {
                let prod = p.as_matrix() * q.as_matrix();
                orthogonality = orthogonality.max(spectral_norm(&prod, &tols).unwrap_or(inf));
            }
        }
        let mut sum = HermitianMatrix::zeros(self.dim);
        for p in &self.projections {
            sum = sum.add(p).expect("same dim");
        }
        let sum_defect = sum.sub(&HermitianMatrix::identity(self.dim)).expect("same dim");
        let sum = opnorm_hermitian(&sum_defect, &tols).unwrap_or(inf);
        QuestionDefects { projection, orthogonality, sum }
    }
}

/// One PVM per question, all on a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerRep {
    dim: usize,
    questions: usize,
    answers: usize,
    pvms: Vec<PVM>,
}

impl PlayerRep {
    /// Shape-checked constructor.
    pub fn from_pvms(pvms: Vec<PVM>) -> Result<Self, PlayerError> {
        let first = pvms
            .first()
            .ok_or_else(|| PlayerError::Shape("a representation needs at least one question".into()))?;
        let (dim, answers) = (first.dim(), first.answers());
        for pvm in &pvms {
            if pvm.dim() != dim || pvm.answers() != answers {
                return Err(PlayerError::Shape(format!(
                    "inconsistent PVM shapes: ({}, {}) vs ({}, {})",
                    dim,
                    answers,
                    pvm.dim(),
                    pvm.answers()
                )));
            }
        }
        Ok(PlayerRep { dim, questions: pvms.len(), answers, pvms })
    }

    /// Shape check plus numeric validation of every PVM within `tol.proj`.
    pub fn new(pvms: Vec<PVM>, tol: &Tolerances) -> Result<Self, PlayerError> {
        let rep = PlayerRep::from_pvms(pvms)?;
        let report = validate_player_rep(&rep, tol.proj);
        if !report.valid {
            return Err(PlayerError::PvmInvariantViolated {
                kind: "representation",
                defect: report.max_defect(),
                tol: tol.proj,
            });
        }
        Ok(rep)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn questions(&self) -> usize {
        self.questions
    }

    pub fn answers(&self) -> usize {
        self.answers
    }

    pub fn pvm(&self, question: usize) -> &PVM {
        &self.pvms[question]
    }

    pub fn pvms(&self) -> &[PVM] {
        &self.pvms
    }

    pub fn projection(&self, answer: usize, question: usize) -> &HermitianMatrix {
        self.pvms[question].projection(answer)
    }
}

/// Per-question operator-norm defects of the PVM relations.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuestionDefects {
    /// max over outcomes of `‖P² − P‖`.
    pub projection: f64,
    /// max over outcome pairs of `‖P_a P_b‖`, a ≠ b.
    pub orthogonality: f64,
    /// `‖Σ_a P_a − I‖`.
    pub sum: f64,
}

/// Defect report for a whole representation. Produced by
/// [`validate_player_rep`]; never an error, even on garbage input.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ValidationReport {
    pub per_question: Vec<QuestionDefects>,
    pub max_projection_defect: f64,
    pub max_orthogonality_defect: f64,
    pub max_sum_defect: f64,
    pub tol: f64,
    pub valid: bool,
}

impl ValidationReport {
    pub fn max_defect(&self) -> f64 {
        self.max_projection_defect
            .max(self.max_orthogonality_defect)
            .max(self.max_sum_defect)
    }
}

/// Checks the defining relations of every PVM in the representation and
/// reports the worst operator-norm defects, per question and overall.
pub fn validate_player_rep(rep: &PlayerRep, tol: f64) -> ValidationReport {
    let per_question: Vec<QuestionDefects> = rep.pvms.iter().map(|p| p.defects()).collect();
    let max_projection_defect =
        per_question.iter().map(|d| d.projection).fold(0.0, f64::max);
    let max_orthogonality_defect =
        per_question.iter().map(|d| d.orthogonality).fold(0.0, f64::max);
    let max_sum_defect = per_question.iter().map(|d| d.sum).fold(0.0, f64::max);
    let valid = max_projection_defect <= tol
        && max_orthogonality_defect <= tol
        && max_sum_defect <= tol;
    ValidationReport {
        per_question,
        max_projection_defect,
        max_orthogonality_defect,
        max_sum_defect,
        tol,
        valid,
    }
}

/// Dimension-1 representation of a deterministic strategy `f`: the projection
/// for answer `a` at question `x` is `[1]` iff `a = f(x)`, else `[0]`.
pub fn deterministic_rep(f: &[usize], answers: usize) -> Result<PlayerRep, PlayerError> {
    if f.is_empty() || answers == 0 {
        return Err(PlayerError::Shape("need at least one question and one answer".into()));
    }
    for (question, &value) in f.iter().enumerate() {
        if value >= answers {
            return Err(PlayerError::InvalidFunctionRange { question, value, answers });
        }
    }
    let pvms = f
        .iter()
        .map(|&fx| {
            let projections = (0..answers)
                .map(|a| {
                    HermitianMatrix::from_real_diagonal(&[if a == fx { 1.0 } else { 0.0 }])
                })
                .collect();
            PVM::from_projections(projections)
        })
        .collect::<Result<Vec<_>, _>>()?;
    PlayerRep::from_pvms(pvms)
}

/// Exact random representation: per question, a Haar unitary conjugates a
/// fixed 0/1 diagonal partition, so every projection relation holds to
/// machine precision. Basis slots are assigned to answer cells round-robin
/// (`slot i -> cell i mod answers`), which exercises unequal ranks whenever
/// the answer count does not divide the dimension.
///
/// Errors when `answers > dim`, since some answer cell would be empty; use
/// [`random_rep_allowing_empty`] to permit zero projections.
pub fn random_rep(
    dim: usize,
    questions: usize,
    answers: usize,
    seed: u64,
) -> Result<PlayerRep, PlayerError> {
    if answers > dim {
        return Err(PlayerError::AnswerCountExceedsDim { answers, dim });
    }
    random_rep_impl(dim, questions, answers, seed)
}

/// [`random_rep`] without the `answers <= dim` guard: empty answer cells
/// yield zero projections, which the PVM relations allow.
pub fn random_rep_allowing_empty(
    dim: usize,
    questions: usize,
    answers: usize,
    seed: u64,
) -> Result<PlayerRep, PlayerError> {
    random_rep_impl(dim, questions, answers, seed)
}

fn random_rep_impl(
    dim: usize,
    questions: usize,
    answers: usize,
    seed: u64,
) -> Result<PlayerRep, PlayerError> {
    if dim == 0 || questions == 0 || answers == 0 {
        return Err(PlayerError::Shape("dim, questions and answers must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut pvms = Vec::with_capacity(questions);
    for _ in 0..questions {
        let u = haar_unitary(dim, &mut rng);
        let mut projections = Vec::with_capacity(answers);
        for cell in 0..answers {
            let slots: Vec<usize> = (0..dim).filter(|i| i % answers == cell).collect();
            if slots.is_empty() {
                projections.push(HermitianMatrix::zeros(dim));
                continue;
            }
            let mut basis = CMatrix::zeros(dim, slots.len());
            for (dst, &src) in slots.iter().enumerate() {
                basis.set_column(dst, &u.column(src));
            }
            projections.push(HermitianMatrix::symmetrized(&basis * basis.adjoint()));
        }
        pvms.push(PVM::from_projections(projections)?);
    }
    PlayerRep::from_pvms(pvms)
}

/// A tuple of positive contractions, one per answer: the relaxation of a PVM
/// that the rounding machinery accepts.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveTuple {
    dim: usize,
    elements: Vec<HermitianMatrix>,
}

impl PositiveTuple {
    /// Shape-checked constructor.
    pub fn from_elements(elements: Vec<HermitianMatrix>) -> Result<Self, PlayerError> {
        let dim = match elements.first() {
            Some(e) => e.dim(),
            None => return Err(PlayerError::Shape("a tuple needs at least one element".into())),
        };
        if elements.iter().any(|e| e.dim() != dim) {
            return Err(PlayerError::Shape("mixed dimensions in tuple".into()));
        }
        Ok(PositiveTuple { dim, elements })
    }

    /// Shape check plus spectrum check: every element must be a positive
    /// contraction within `tol.pos`.
    pub fn new(elements: Vec<HermitianMatrix>, tol: &Tolerances) -> Result<Self, PlayerError> {
        let tuple = PositiveTuple::from_elements(elements)?;
        for (index, e) in tuple.elements.iter().enumerate() {
            if !is_positive_contraction(e, tol.pos, tol)? {
                return Err(PlayerError::NotPositiveContraction { index, tol: tol.pos });
            }
        }
        Ok(tuple)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }
}

/// Replaces each projection `P` of the representation by
/// `clamp_[0,1](P + eps * H)` with `H` a fresh seeded random Hermitian of
/// unit operator norm; clamping is by eigenvalue so positivity and the
/// contraction bound hold exactly. `eps = 0` returns the projections
/// unchanged, bit for bit.
pub fn perturb_rep(
    rep: &PlayerRep,
    eps: f64,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<PositiveTuple>, PlayerError> {
    if !(0.0..=0.2).contains(&eps) {
        return Err(PlayerError::InvalidPerturbation(eps));
    }
    let mut rng = rng_from_seed(seed);
    let mut tuples = Vec::with_capacity(rep.questions());
    for pvm in rep.pvms() {
        let mut elements = Vec::with_capacity(pvm.answers());
        for p in pvm.projections() {
            if eps == 0.0 {
                elements.push(p.clone());
                continue;
            }
            let h = random_unit_norm_hermitian(rep.dim(), &mut rng, tol)?;
            let moved = p.add(&h.scale(eps))?;
            elements.push(clamp_spectrum(&moved, 0.0, 1.0, tol)?);
        }
        tuples.push(PositiveTuple::from_elements(elements)?);
    }
    Ok(tuples)
}

/// One block of a tracial state: a block dimension and a convex weight.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceBlock {
    pub dim: usize,
    pub weight: f64,
}

/// A tracial state on a block-diagonal algebra: `tau(a) = sum_i w_i tr_i(a_i)`
/// with `tr_i` the normalized trace of block `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSpec {
    blocks: Vec<TraceBlock>,
}

impl TraceSpec {
    pub fn new(blocks: Vec<TraceBlock>, tol: &Tolerances) -> Result<Self, PlayerError> {
        if blocks.is_empty() || blocks.iter().any(|b| b.dim == 0) {
            return Err(PlayerError::Shape("trace blocks must be nonempty with positive dims".into()));
        }
        let sum: f64 = blocks.iter().map(|b| b.weight).sum();
        if blocks.iter().any(|b| b.weight < 0.0) || (sum - 1.0).abs() > tol.trace {
            return Err(PlayerError::InvalidWeights { sum });
        }
        Ok(TraceSpec { blocks })
    }

    /// The normalized trace on a single full block.
    pub fn single_block(dim: usize) -> Self {
        TraceSpec { blocks: vec![TraceBlock { dim, weight: 1.0 }] }
    }

    pub fn blocks(&self) -> &[TraceBlock] {
        &self.blocks
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// Applies the trace to a general square matrix (products of projections
    /// are not Hermitian). Checks block-diagonality within `tol.herm` and
    /// coerces the result to a real number, rejecting imaginary residue
    /// beyond `tol.imag`.
    pub fn apply_raw(&self, m: &CMatrix, tol: &Tolerances) -> Result<f64, PlayerError> {
        let n = self.total_dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(PlayerError::DimensionMismatch { matrix: m.nrows(), trace: n });
        }
        let bounds = self.block_bounds();
        let mut mass: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if self.block_of(&bounds, i) != self.block_of(&bounds, j) {
                    mass = mass.max(m[(i, j)].norm());
                }
            }
        }
        if mass > tol.herm {
            return Err(PlayerError::BlockLeakage { mass, tol: tol.herm });
        }
        let mut value = Complex64::default();
        for (b, block) in self.blocks.iter().enumerate() {
            let (start, end) = bounds[b];
            let block_trace: Complex64 = (start..end).map(|i| m[(i, i)]).sum();
            value += block_trace * Complex64::new(block.weight / block.dim as f64, 0.0);
        }
        if value.im.abs() > tol.imag {
            return Err(PlayerError::ImaginaryResidue { imag: value.im, tol: tol.imag });
        }
        Ok(value.re)
    }

    /// Applies the trace to a Hermitian matrix.
    pub fn apply(&self, a: &HermitianMatrix, tol: &Tolerances) -> Result<f64, PlayerError> {
        self.apply_raw(a.as_matrix(), tol)
    }

    fn block_bounds(&self) -> Vec<(usize, usize)> {
        let mut bounds = Vec::with_capacity(self.blocks.len());
        let mut start = 0;
        for b in &self.blocks {
            bounds.push((start, start + b.dim));
            start += b.dim;
        }
        bounds
    }

    fn block_of(&self, bounds: &[(usize, usize)], i: usize) -> usize {
        bounds
            .iter()
            .position(|&(s, e)| i >= s && i < e)
            .expect("index inside total dim")
    }
}

/// Qubit representation with two mutually unbiased questions: the standard
/// basis and the Hadamard-rotated basis. Cross-question two-moments under the
/// normalized trace are all 1/4.
pub fn qubit_mub_rep() -> PlayerRep {
    let z = vec![
        HermitianMatrix::from_real_diagonal(&[1.0, 0.0]),
        HermitianMatrix::from_real_diagonal(&[0.0, 1.0]),
    ];
    let half = Complex64::new(0.5, 0.0);
    let plus = CMatrix::from_fn(2, 2, |_, _| half);
    let minus = CMatrix::from_fn(2, 2, |i, j| if i == j { half } else { -half });
    let x = vec![HermitianMatrix::symmetrized(plus), HermitianMatrix::symmetrized(minus)];
    PlayerRep::from_pvms(vec![
        PVM::from_projections(z).expect("two projections on dim 2"),
        PVM::from_projections(x).expect("two projections on dim 2"),
    ])
    .expect("consistent shapes")
}

/// Block direct sum of two representations with the same question and answer
/// counts. With a two-block [`TraceSpec`] this realizes convex combinations
/// of the summands' correlations.
pub fn direct_sum_rep(a: &PlayerRep, b: &PlayerRep) -> Result<PlayerRep, PlayerError> {
    if a.questions() != b.questions() || a.answers() != b.answers() {
        return Err(PlayerError::Shape(format!(
            "direct sum needs matching shapes, got ({}, {}) vs ({}, {})",
            a.questions(),
            a.answers(),
            b.questions(),
            b.answers()
        )));
    }
    let pvms = a
        .pvms()
        .iter()
        .zip(b.pvms())
        .map(|(pa, pb)| {
            let projections = pa
                .projections()
                .iter()
                .zip(pb.projections())
                .map(|(qa, qb)| linalg::direct_sum(qa, qb))
                .collect();
            PVM::from_projections(projections)
        })
        .collect::<Result<Vec<_>, _>>()?;
    PlayerRep::from_pvms(pvms)
}

/// Measured spectrum check used by generators and tests: the largest
/// projection defect of a tuple in the operator norm.
pub fn tuple_projection_defect(t: &PositiveTuple) -> f64 {
    let tols = Tolerances::default();
    t.elements()
        .iter()
        .map(|a| {
            let d = a.square().sub(a).expect("same dim");
            opnorm_hermitian(&d, &tols).unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max)
}
