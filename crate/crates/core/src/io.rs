//! File formats and serialization.
//!
//! Every artifact is JSON with a fixed schema; doubles are written with 17
//! significant digits (`%.16e`), which round-trips every finite `f64`
//! exactly and keeps fixtures diffable. Matrices are row-major nested arrays
//! of `[re, im]` pairs:
//!
//! ```text
//! {"dim": n, "entries": [[[re, im], ...], ...]}
//! ```
//!
//! Writers emit through [`to_json_string`] and [`write_atomic`] (temp file
//! plus rename), so outputs are byte-stable for identical inputs and never
//! observed half-written.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;
use crate::correlations::{CorrelationError, CorrelationTable};
use crate::games::{Game, GameError};
use crate::lift::{ApproxRepSequence, LiftError, SequenceIndex};
use crate::linalg::{CMatrix, HermitianMatrix, LinalgError, StateVectorSpec};
use crate::player::{PlayerError, PlayerRep, PositiveTuple, TraceBlock, TraceSpec, PVM};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
}

impl From<LinalgError> for IoError {
    fn from(e: LinalgError) -> Self {
        IoError::Schema(e.to_string())
    }
}

impl From<PlayerError> for IoError {
    fn from(e: PlayerError) -> Self {
        IoError::Schema(e.to_string())
    }
}

impl From<LiftError> for IoError {
    fn from(e: LiftError) -> Self {
        IoError::Schema(e.to_string())
    }
}

impl From<GameError> for IoError {
    fn from(e: GameError) -> Self {
        IoError::Schema(e.to_string())
    }
}

impl From<CorrelationError> for IoError {
    fn from(e: CorrelationError) -> Self {
        IoError::Schema(e.to_string())
    }
}

/// Formats a double with 17 significant digits, enough to reconstruct the
/// exact bit pattern on read.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Pretty JSON formatter that pins float output to [`format_f64`].
struct FixedFloatFormatter<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

impl serde_json::ser::Formatter for FixedFloatFormatter<'_> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::begin_array(&mut self.inner, writer)
    }

    fn end_array<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::end_array(&mut self.inner, writer)
    }

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::begin_array_value(&mut self.inner, writer, first)
    }

    fn end_array_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::end_array_value(&mut self.inner, writer)
    }

    fn begin_object<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::begin_object(&mut self.inner, writer)
    }

    fn end_object<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::end_object(&mut self.inner, writer)
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::begin_object_key(&mut self.inner, writer, first)
    }

    fn begin_object_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::begin_object_value(&mut self.inner, writer)
    }

    fn end_object_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::end_object_value(&mut self.inner, writer)
    }
}

/// Serializes with pretty indentation, 17-significant-digit doubles and a
/// trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut out = Vec::new();
    let formatter =
        FixedFloatFormatter { inner: serde_json::ser::PrettyFormatter::new() };
    let mut serializer = serde_json::Serializer::with_formatter(&mut out, formatter);
    value.serialize(&mut serializer)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits utf-8"))
}

pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    Ok(serde_json::from_str(text)?)
}

/// Writes via a temp file in the same directory plus rename, so readers never
/// observe partial content.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp_path = std::path::PathBuf::from(tmp);
    {
        let mut file = fs::File::create(&tmp_path)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
    }
    fs::rename(&tmp_path, path)?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String, IoError> {
    Ok(fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// JSON schema mirrors
// ---------------------------------------------------------------------------

/// `{"dim": n, "entries": [[[re, im], ...], ...]}`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl MatrixJson {
    pub fn from_hermitian(m: &HermitianMatrix) -> Self {
        let n = m.dim();
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let c = m.as_matrix()[(i, j)];
                        [c.re, c.im]
                    })
                    .collect()
            })
            .collect();
        MatrixJson { dim: n, entries }
    }

    pub fn to_hermitian(&self, tol: &Tolerances) -> Result<HermitianMatrix, IoError> {
        if self.dim == 0 {
            return Err(IoError::Schema("matrix dim must be positive".into()));
        }
        if self.entries.len() != self.dim
            || self.entries.iter().any(|row| row.len() != self.dim)
        {
            return Err(IoError::Schema(format!(
                "matrix entries are not a {0}x{0} nesting",
                self.dim
            )));
        }
        let mat = CMatrix::from_fn(self.dim, self.dim, |i, j| {
            num_complex::Complex64::new(self.entries[i][j][0], self.entries[i][j][1])
        });
        Ok(HermitianMatrix::new(mat, tol)?)
    }
}

/// `{"dim": n, "questions": X, "answers": A, "pvms": [[matrix, ...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlayerRepJson {
    pub dim: usize,
    pub questions: usize,
    pub answers: usize,
    pub pvms: Vec<Vec<MatrixJson>>,
}

impl PlayerRepJson {
    pub fn from_rep(rep: &PlayerRep) -> Self {
        PlayerRepJson {
            dim: rep.dim(),
            questions: rep.questions(),
            answers: rep.answers(),
            pvms: rep
                .pvms()
                .iter()
                .map(|pvm| pvm.projections().iter().map(MatrixJson::from_hermitian).collect())
                .collect(),
        }
    }

    /// Shape-checked reconstruction; the numeric PVM relations are not
    /// enforced here so that defective representations can be read, validated
    /// and repaired.
    pub fn to_rep(&self, tol: &Tolerances) -> Result<PlayerRep, IoError> {
        if self.pvms.len() != self.questions {
            return Err(IoError::Schema(format!(
                "expected {} pvms, found {}",
                self.questions,
                self.pvms.len()
            )));
        }
        let pvms = self
            .pvms
            .iter()
            .map(|matrices| {
                if matrices.len() != self.answers {
                    return Err(IoError::Schema(format!(
                        "expected {} projections per question, found {}",
                        self.answers,
                        matrices.len()
                    )));
                }
                let projections = matrices
                    .iter()
                    .map(|m| {
                        if m.dim != self.dim {
                            return Err(IoError::Schema(format!(
                                "matrix dim {} does not match rep dim {}",
                                m.dim, self.dim
                            )));
                        }
                        m.to_hermitian(tol)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(PVM::from_projections(projections)?)
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(PlayerRep::from_pvms(pvms)?)
    }
}

/// `{"blocks": [{"dim": n_i, "weight": w_i}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSpecJson {
    pub blocks: Vec<TraceBlock>,
}

impl TraceSpecJson {
    pub fn from_spec(spec: &TraceSpec) -> Self {
        TraceSpecJson { blocks: spec.blocks().to_vec() }
    }

    pub fn to_spec(&self, tol: &Tolerances) -> Result<TraceSpec, IoError> {
        Ok(TraceSpec::new(self.blocks.clone(), tol)?)
    }
}

/// One index of a sequence file: `{"dim": n, "tuples": [[matrix, ...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceIndexJson {
    pub dim: usize,
    pub tuples: Vec<Vec<MatrixJson>>,
}

/// `{"questions": X, "answers": A, "indices": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxRepSequenceJson {
    pub questions: usize,
    pub answers: usize,
    pub indices: Vec<SequenceIndexJson>,
}

impl ApproxRepSequenceJson {
    pub fn from_sequence(s: &ApproxRepSequence) -> Self {
        ApproxRepSequenceJson {
            questions: s.questions(),
            answers: s.answers(),
            indices: s
                .indices()
                .iter()
                .map(|index| SequenceIndexJson {
                    dim: index.dim,
                    tuples: index
                        .tuples
                        .iter()
                        .map(|t| t.elements().iter().map(MatrixJson::from_hermitian).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_sequence(&self, tol: &Tolerances) -> Result<ApproxRepSequence, IoError> {
        let indices = self
            .indices
            .iter()
            .enumerate()
            .map(|(i, index)| {
                let tuples = index
                    .tuples
                    .iter()
                    .map(|matrices| {
                        let elements = matrices
                            .iter()
                            .map(|m| m.to_hermitian(tol))
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(PositiveTuple::from_elements(elements)?)
                    })
                    .collect::<Result<Vec<_>, IoError>>()
                    .map_err(|e| IoError::Schema(format!("index {i}: {e}")))?;
                Ok(SequenceIndex { dim: index.dim, tuples })
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(ApproxRepSequence::new(self.questions, self.answers, indices)?)
    }
}

/// `{"questions": X, "answers": A, "values": [a][b][x][y]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationTableJson {
    pub questions: usize,
    pub answers: usize,
    pub values: Vec<Vec<Vec<Vec<f64>>>>,
}

impl CorrelationTableJson {
    pub fn from_table(t: &CorrelationTable) -> Self {
        let (qs, ans) = (t.questions(), t.answers());
        let values = (0..ans)
            .map(|a| {
                (0..ans)
                    .map(|b| {
                        (0..qs)
                            .map(|x| (0..qs).map(|y| t.get(a, b, x, y)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        CorrelationTableJson { questions: qs, answers: ans, values }
    }

    pub fn to_table(&self) -> Result<CorrelationTable, IoError> {
        let (qs, ans) = (self.questions, self.answers);
        let mut table = CorrelationTable::zeros(qs, ans);
        if self.values.len() != ans {
            return Err(IoError::Schema("values outer nesting must have one entry per answer".into()));
        }
        for (a, level_b) in self.values.iter().enumerate() {
            if level_b.len() != ans {
                return Err(IoError::Schema("values second nesting must have one entry per answer".into()));
            }
            for (b, level_x) in level_b.iter().enumerate() {
                if level_x.len() != qs {
                    return Err(IoError::Schema("values third nesting must have one entry per question".into()));
                }
                for (x, level_y) in level_x.iter().enumerate() {
                    if level_y.len() != qs {
                        return Err(IoError::Schema("values inner nesting must have one entry per question".into()));
                    }
                    for (y, &v) in level_y.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(IoError::Schema("table values must be finite".into()));
                        }
                        table.set(a, b, x, y, v);
                    }
                }
            }
        }
        Ok(table)
    }
}

/// `{"questions": X, "answers": A, "synchronous": bool, "lambda": [[...]],
/// "predicate": [a][b][x][y]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameJson {
    pub questions: usize,
    pub answers: usize,
    pub synchronous: bool,
    pub lambda: Vec<Vec<f64>>,
    pub predicate: Vec<Vec<Vec<Vec<u8>>>>,
}

impl GameJson {
    pub fn from_game(g: &Game) -> Self {
        let (qs, ans) = (g.questions(), g.answers());
        GameJson {
            questions: qs,
            answers: ans,
            synchronous: g.synchronous(),
            lambda: (0..qs).map(|x| (0..qs).map(|y| g.lambda(x, y)).collect()).collect(),
            predicate: (0..ans)
                .map(|a| {
                    (0..ans)
                        .map(|b| {
                            (0..qs)
                                .map(|x| (0..qs).map(|y| g.predicate(a, b, x, y)).collect())
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_game(&self, tol: &Tolerances) -> Result<Game, IoError> {
        let (qs, ans) = (self.questions, self.answers);
        if self.lambda.len() != qs || self.lambda.iter().any(|row| row.len() != qs) {
            return Err(IoError::Schema("lambda must be a questions x questions nesting".into()));
        }
        let mut lambda = vec![0.0; qs * qs];
        for (x, row) in self.lambda.iter().enumerate() {
            for (y, &v) in row.iter().enumerate() {
                lambda[x * qs + y] = v;
            }
        }
        let mut predicate = vec![0u8; ans * ans * qs * qs];
        if self.predicate.len() != ans {
            return Err(IoError::Schema("predicate outer nesting must have one entry per answer".into()));
        }
        for (a, level_b) in self.predicate.iter().enumerate() {
            if level_b.len() != ans {
                return Err(IoError::Schema("predicate second nesting must have one entry per answer".into()));
            }
            for (b, level_x) in level_b.iter().enumerate() {
                if level_x.len() != qs || level_x.iter().any(|row| row.len() != qs) {
                    return Err(IoError::Schema("predicate question nesting is ragged".into()));
                }
                for (x, level_y) in level_x.iter().enumerate() {
                    for (y, &v) in level_y.iter().enumerate() {
                        predicate[((a * ans + b) * qs + x) * qs + y] = v;
                    }
                }
            }
        }
        Ok(Game::new(qs, ans, self.synchronous, lambda, predicate, tol)?)
    }
}

/// Density matrix file for custom states: reuses the matrix schema.
pub fn state_from_matrix_json(
    m: &MatrixJson,
    tol: &Tolerances,
) -> Result<StateVectorSpec, IoError> {
    let density = m.to_hermitian(tol)?;
    Ok(StateVectorSpec::new(density, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::player::random_rep;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn float_format_round_trips_exactly() {
        for &v in &[0.0, -0.0, 0.5, 1.0 / 3.0, 2f64.powi(-40), 1e300, -7.25e-200] {
            let text = format_f64(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{text}");
        }
    }

    #[test]
    fn matrix_json_round_trip_is_value_identical() {
        let mut rng = crate::rng::rng_from_seed(1);
        let m = crate::linalg::random_hermitian(5, &mut rng);
        let json = to_json_string(&MatrixJson::from_hermitian(&m)).unwrap();
        let parsed: MatrixJson = from_json_str(&json).unwrap();
        let back = parsed.to_hermitian(&tol()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rep_round_trip_is_value_identical() {
        let rep = random_rep(4, 2, 3, 21).unwrap();
        let json = to_json_string(&PlayerRepJson::from_rep(&rep)).unwrap();
        let parsed: PlayerRepJson = from_json_str(&json).unwrap();
        assert_eq!(parsed.to_rep(&tol()).unwrap(), rep);
    }

    #[test]
    fn serialization_is_deterministic() {
        let rep = random_rep(3, 2, 2, 5).unwrap();
        let a = to_json_string(&PlayerRepJson::from_rep(&rep)).unwrap();
        let b = to_json_string(&PlayerRepJson::from_rep(&rep)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_matrix_shapes_are_rejected() {
        let bad = MatrixJson { dim: 2, entries: vec![vec![[1.0, 0.0]]] };
        assert!(matches!(bad.to_hermitian(&tol()), Err(IoError::Schema(_))));
    }

    #[test]
    fn json_parse_errors_carry_position() {
        let truncated = "{\"dim\": 2, \"entries\": [[[1.0, 0.0]";
        match from_json_str::<MatrixJson>(truncated) {
            Err(IoError::Json(e)) => {
                assert!(e.line() >= 1);
                assert!(e.column() >= 1);
            }
            other => panic!("expected Json error, got {other:?}"),
        }
    }

    #[test]
    fn atomic_write_then_read() {
        let dir = std::env::temp_dir().join("synclift-io-test");
        let path = dir.join("table.json");
        let table = CorrelationTable::zeros(1, 2);
        let json = to_json_string(&CorrelationTableJson::from_table(&table)).unwrap();
        write_atomic(&path, &json).unwrap();
        let parsed: CorrelationTableJson =
            from_json_str(&read_to_string(&path).unwrap()).unwrap();
        assert_eq!(parsed.to_table().unwrap(), table);
        std::fs::remove_dir_all(&dir).ok();
    }
}
