//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("lattice dimensions must satisfy nx, ny >= 2 and d >= 1 (got nx={nx}, ny={ny}, d={d})")]
    BadLatticeDims { nx: usize, ny: usize, d: usize },

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("model needs {expected} orbitals per site, geometry has {got}")]
    OrbitalMismatch { expected: usize, got: usize },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("matrix is not Hermitian: max |H - H*| entry = {defect:.3e}")]
    NotHermitian { defect: f64 },

    #[error("eigendecomposition failed: {0}")]
    EigenFailed(String),

    #[error("Fermi energy {ef} lies on an eigenvalue at finite size (distance {dist:.3e}); nudge it into a level gap")]
    FermiInSpectrum { ef: f64, dist: f64 },

    #[error("flux center ({0}, {1}) must have half-integer coordinates away from lattice sites")]
    BadFluxCenter(f64, f64),

    #[error("flux-based index operations require open boundary conditions")]
    PeriodicFlux,

    #[error("flux center ({cx}, {cy}) too close to the sample edge: margin {margin:.2} < required {required:.2}")]
    CenterTooClose { cx: f64, cy: f64, margin: f64, required: f64 },

    #[error("operator is not time-reversal invariant: residual {0:.3e}")]
    ThetaViolation(f64),

    #[error("no eigenvalue-free crossing interval of usable width found in [1/2, 1]")]
    NoContourGap,

    #[error("contour quadrature disagrees with the direct eigenvalue count: integral {integral:.4}, count {count} (contour too close to the spectrum, or too few nodes)")]
    QuadratureMismatch { integral: f64, count: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown model id `{0}`")]
    UnknownModel(String),

    #[error("invalid descriptor `{0}`: {1}")]
    BadDescriptor(String, String),
}
