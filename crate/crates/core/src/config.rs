//! Numerical tolerances shared across the crate.

/// Named tolerances for validation and rounding.
///
/// The defaults sit well inside double-precision eigendecomposition accuracy
/// at the dimensions this crate targets (≤ 512). Every field can be
/// overridden, e.g. from CLI flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Hermiticity defect allowed at construction, and the bound under which
    /// imaginary parts of trace-like outputs are discarded.
    pub herm: f64,
    /// Eigendecomposition residual: reconstruction and orthonormality.
    pub eig: f64,
    /// Projection defects: idempotence, mutual orthogonality, sum to identity.
    pub proj: f64,
    /// Slack for positivity/contraction checks on spectra.
    pub pos: f64,
    /// Slack for positive-semidefiniteness of density and moment matrices.
    pub psd: f64,
    /// Slack for affine constraints: trace one, weights summing to one.
    pub trace: f64,
    /// Spectral threshold slack: eigenvalues at least `1/2 - thresh` count as
    /// lying in the upper half `[1/2, 1]` (the interval is closed at `1/2`).
    pub thresh: f64,
    /// Correlation-table invariant slack: negativity, normalization,
    /// synchronicity, symmetry.
    pub corr: f64,
    /// Imaginary residue above which a trace value is rejected instead of
    /// being coerced to a real number.
    pub imag: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-10,
            eig: 1e-10,
            proj: 1e-10,
            pos: 1e-9,
            psd: 1e-9,
            trace: 1e-10,
            thresh: 1e-12,
            corr: 1e-10,
            imag: 1e-8,
        }
    }
}

impl Tolerances {
    /// Override a tolerance by name. Unknown names are rejected so CLI typos
    /// surface instead of silently using a default.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("tolerance {name} must be a positive finite number"));
        }
        match name {
            "herm" => self.herm = value,
            "eig" => self.eig = value,
            "proj" => self.proj = value,
            "pos" => self.pos = value,
            "psd" => self.psd = value,
            "trace" => self.trace = value,
            "thresh" => self.thresh = value,
            "corr" => self.corr = value,
            "imag" => self.imag = value,
            _ => return Err(format!("unknown tolerance name: {name}")),
        }
        Ok(())
    }
}
