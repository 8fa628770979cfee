//! The index engine: Laughlin flux operators, the Fredholm operator
//! `P·L·P + P⊥`, the Z₂ index by singular-value counting, the Chern index,
//! Kramers pairing diagnostics, the contour trace route, and the
//! center-independence / local-determinacy experiments.
//!
//! # Finite-size kernel counting
//!
//! On the infinite lattice the Z₂ index is the parity of
//! `dim ker(P·L·P + P⊥)`. A finite Θ-symmetric sample has no exact kernel;
//! instead the kernel *and* its Θ-image (the cokernel) show up together as
//! a cluster of exponentially small singular values, exactly degenerate in
//! pairs because `F = P·L·P + P⊥` is Θ-odd: `Θ F Θ = -F*` forces every
//! nonzero eigenvalue of `F*F` to have even multiplicity. The raw cluster
//! size is therefore twice the infinite-volume kernel dimension, and the
//! index is the parity of the number of Kramers *pairs* below the
//! threshold. Reports carry both the raw count and the pair count.

use crate::error::CoreError;
use crate::lattice::{BoundaryMode, LatticeGeometry};
use crate::linalg;
use crate::models::TimeReversalOp;
use crate::operator::HermitianOperator;
use crate::spectral::{self, FermiProjection};
use crate::Complex;
use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

/// Diagonal unitary `e^{i·arg(x - a)}` implementing one flux quantum at `a`.
#[derive(Debug, Clone)]
pub struct FluxOperator {
    /// One phase per matrix row (constant across the orbital fiber).
    phases: Vec<Complex>,
    center: (f64, f64),
    geometry: LatticeGeometry,
}

impl FluxOperator {
    pub fn phases(&self) -> &[Complex] {
        &self.phases
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    /// Conjugated phases, the flux of opposite orientation.
    pub fn adjoint_phases(&self) -> Vec<Complex> {
        self.phases.iter().map(|z| z.conj()).collect()
    }

    pub fn as_matrix(&self) -> Mat<Complex> {
        let n = self.phases.len();
        Mat::from_fn(n, n, |i, j| {
            if i == j {
                self.phases[i]
            } else {
                Complex::new(0.0, 0.0)
            }
        })
    }
}

/// Builds the Laughlin flux operator centered at a dual-lattice point
/// (both coordinates half-integers, so no site sits on the singularity).
pub fn flux_operator(
    geometry: &LatticeGeometry,
    center: (f64, f64),
) -> Result<FluxOperator, CoreError> {
    if geometry.boundary() == BoundaryMode::Periodic {
        return Err(CoreError::PeriodicFlux);
    }
    let half_integer = |v: f64| {
        let doubled = 2.0 * v;
        (doubled - doubled.round()).abs() < 1e-9 && (doubled.round() as i64).rem_euclid(2) == 1
    };
    if !half_integer(center.0) || !half_integer(center.1) {
        return Err(CoreError::BadFluxCenter(center.0, center.1));
    }
    let d = geometry.orbitals();
    let mut phases = Vec::with_capacity(geometry.dim());
    for s in geometry.sites() {
        let z = Complex::new(s.x1 as f64 - center.0, s.x2 as f64 - center.1);
        let phase = z / z.norm();
        phases.extend(std::iter::repeat(phase).take(d));
    }
    Ok(FluxOperator { phases, center, geometry: geometry.clone() })
}

/// `F = P·L·P + P⊥`, the fluxed projection completed on the empty states.
pub fn fluxed_projection(p: &FermiProjection, l: &FluxOperator) -> Mat<Complex> {
    let pm = p.matrix.as_ref();
    let n = pm.nrows();
    let lp = linalg::scale_rows(pm, l.phases()); // L·P
    let mut f = pm * &lp;
    // + (Id - P)
    for j in 0..n {
        for i in 0..n {
            f[(i, j)] -= pm[(i, j)];
        }
        f[(j, j)] += Complex::new(1.0, 0.0);
    }
    f
}

/// `A = P⊥·L·P`, the part of the fluxed projection leaking out of the
/// occupied subspace.
pub fn compression_defect(p: &FermiProjection, l: &FluxOperator) -> Mat<Complex> {
    let pm = p.matrix.as_ref();
    let lp = linalg::scale_rows(pm, l.phases());
    &lp - pm * &lp
}

/// `B = (A*A)³ = |A|⁶`, Hermitian positive semidefinite with `‖B‖ ≤ 1`.
pub fn defect_sixth_power(a: MatRef<'_, Complex>) -> Mat<Complex> {
    let a2 = a.adjoint() * a;
    let a4 = &a2 * &a2;
    let b = &a4 * &a2;
    linalg::hermitize(b.as_ref())
}

/// Knobs shared by the index computations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IndexParams {
    /// Singular values below this threshold count as kernel.
    pub tau: f64,
    /// Required ratio `σ_{k+1}/σ_k` across the threshold cut.
    pub min_separation: f64,
    /// Allowed splitting inside a Kramers pair of singular values.
    pub pairing_tol: f64,
    /// Residual allowed on `[H, Θ]` and `[P, Θ]`.
    pub theta_tol: f64,
    /// Flux center must be at least `margin_factor · min(nx, ny)` from the
    /// sample edge.
    pub margin_factor: f64,
}

impl Default for IndexParams {
    fn default() -> Self {
        Self {
            tau: 0.2,
            min_separation: 5.0,
            pairing_tol: 1e-6,
            theta_tol: 1e-8,
            margin_factor: 0.25,
        }
    }
}

/// Confidence of a counting verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Confident,
    Ambiguous { reason: String },
}

impl Verdict {
    pub fn is_confident(&self) -> bool {
        matches!(self, Verdict::Confident)
    }
}

/// Outcome of a Z₂ computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexReport {
    /// Singular values of `P·L·P + P⊥`, ascending.
    pub singular_values: Vec<f64>,
    /// Raw count below the threshold (kernel plus its Θ-image).
    pub kernel_count: usize,
    /// Kramers pairs below the threshold; the index is this modulo 2.
    pub kernel_pairs: usize,
    pub threshold: f64,
    /// `σ_{k+1}/σ_k` across the cut; infinite for an empty kernel cluster.
    pub separation_ratio: f64,
    pub z2: u8,
    pub verdict: Verdict,
    /// Worst splitting inside a paired cluster entry.
    pub pairing_residual: f64,
    pub theta_residual: f64,
    pub flux_center: (f64, f64),
    pub fermi_energy: f64,
}

fn separation_at_cut(sv: &[f64], k: usize) -> f64 {
    if k == 0 {
        return f64::INFINITY;
    }
    if k >= sv.len() {
        return 0.0;
    }
    sv[k] / sv[k - 1].max(f64::MIN_POSITIVE)
}

fn check_flux_preconditions(
    geometry: &LatticeGeometry,
    center: (f64, f64),
    params: &IndexParams,
) -> Result<(), CoreError> {
    let margin = geometry.edge_margin(center);
    let required = params.margin_factor * geometry.nx().min(geometry.ny()) as f64;
    if margin < required {
        return Err(CoreError::CenterTooClose {
            cx: center.0,
            cy: center.1,
            margin,
            required,
        });
    }
    Ok(())
}

/// Z₂ index of a Θ-invariant insulator by singular-value counting of the
/// fluxed projection.
pub fn z2_index(
    h: &HermitianOperator,
    theta: &TimeReversalOp,
    e_f: f64,
    center: (f64, f64),
    params: &IndexParams,
) -> Result<IndexReport, CoreError> {
    let theta_residual = theta.commutator_residual(h.matrix());
    if theta_residual > params.theta_tol {
        return Err(CoreError::ThetaViolation(theta_residual));
    }
    check_flux_preconditions(h.geometry(), center, params)?;
    let l = flux_operator(h.geometry(), center)?;
    let p = spectral::fermi_projection(h, e_f)?;
    z2_index_from_projection(&p, &l, theta_residual, params)
}

/// Same, reusing a projection (center sweeps share one eigendecomposition).
pub fn z2_index_from_projection(
    p: &FermiProjection,
    l: &FluxOperator,
    theta_residual: f64,
    params: &IndexParams,
) -> Result<IndexReport, CoreError> {
    let f = fluxed_projection(p, l);
    let sv = linalg::singular_values(f.as_ref())?;
    let kernel_count = sv.iter().filter(|&&s| s < params.tau).count();
    let separation_ratio = separation_at_cut(&sv, kernel_count);

    let mut verdict = Verdict::Confident;
    if separation_ratio < params.min_separation {
        verdict = Verdict::Ambiguous {
            reason: format!(
                "separation ratio {separation_ratio:.2} below required {:.2}",
                params.min_separation
            ),
        };
    }
    // Kramers pairing inside the kernel cluster
    let mut pairing_residual = 0.0f64;
    for pair in sv[..kernel_count].chunks(2) {
        if pair.len() == 2 {
            pairing_residual = pairing_residual.max(pair[1] - pair[0]);
        }
    }
    if kernel_count % 2 != 0 {
        verdict = Verdict::Ambiguous {
            reason: format!(
                "kernel cluster of size {kernel_count} is odd; Kramers pairing requires an even cluster"
            ),
        };
    } else if pairing_residual > params.pairing_tol {
        verdict = Verdict::Ambiguous {
            reason: format!(
                "kernel cluster pairing residual {pairing_residual:.3e} exceeds {:.3e}",
                params.pairing_tol
            ),
        };
    }
    let kernel_pairs = kernel_count / 2;
    Ok(IndexReport {
        kernel_count,
        kernel_pairs,
        threshold: params.tau,
        separation_ratio,
        z2: (kernel_pairs % 2) as u8,
        verdict,
        pairing_residual,
        theta_residual,
        flux_center: l.center(),
        fermi_energy: p.fermi_energy,
        singular_values: sv,
    })
}

/// Outcome of a Chern computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChernReport {
    pub value: i64,
    /// Half-plane commutator trace before rounding.
    pub trace_value: f64,
    pub rounding_residual: f64,
    /// Tiny-singular-value cluster of `P·L·P + P⊥`; its size is `|value|`
    /// for a clean sample.
    pub kernel_count: usize,
    pub separation_ratio: f64,
    pub verdict: Verdict,
    pub singular_values: Vec<f64>,
    pub flux_center: (f64, f64),
}

/// Chern index of a gapped Fermi projection (no time reversal needed).
///
/// The signed value is the windowed trace of `(P - L·P·L*)³`: the flux
/// rotation `L·P·L*` differs from `P` by a kernel concentrated at the flux
/// center plus a compensating contribution at the sample boundary, and the
/// full trace vanishes identically at finite size, so the trace is
/// restricted to the disk of radius `margin_factor · min(nx, ny)` around
/// the center. The magnitude is cross-checked against the size of the
/// tiny-singular-value cluster of `P·L·P + P⊥`. Orientation: the
/// positive-coupling Haldane model has index +1.
pub fn chern_index(
    p: &FermiProjection,
    l: &FluxOperator,
    params: &IndexParams,
) -> Result<ChernReport, CoreError> {
    check_flux_preconditions(&p.geometry, l.center(), params)?;
    let f = fluxed_projection(p, l);
    let sv = linalg::singular_values(f.as_ref())?;
    let kernel_count = sv.iter().filter(|&&s| s < params.tau).count();
    let separation_ratio = separation_at_cut(&sv, kernel_count);

    let window = params.margin_factor * p.geometry.nx().min(p.geometry.ny()) as f64;
    let trace_value = flux_rotation_trace(p, l, window);
    let value = trace_value.round() as i64;
    let rounding_residual = (trace_value - value as f64).abs();

    let mut verdict = Verdict::Confident;
    if separation_ratio < params.min_separation {
        verdict = Verdict::Ambiguous {
            reason: format!(
                "separation ratio {separation_ratio:.2} below required {:.2}",
                params.min_separation
            ),
        };
    } else if rounding_residual > 0.1 {
        verdict = Verdict::Ambiguous {
            reason: format!("trace {trace_value:.4} is {rounding_residual:.3} from an integer"),
        };
    } else if value.unsigned_abs() as usize != kernel_count {
        verdict = Verdict::Ambiguous {
            reason: format!(
                "trace magnitude |{value}| disagrees with the kernel-cluster size {kernel_count}"
            ),
        };
    }
    Ok(ChernReport {
        value,
        trace_value,
        rounding_residual,
        kernel_count,
        separation_ratio,
        verdict,
        singular_values: sv,
        flux_center: l.center(),
    })
}

/// `Re Tr(1_W (P - L·P·L*)³)` over the disk `W` of the given radius around
/// the flux center; equals the Chern index up to finite-size tails.
pub fn flux_rotation_trace(p: &FermiProjection, l: &FluxOperator, window_radius: f64) -> f64 {
    let g = &p.geometry;
    let d = g.orbitals();
    let pm = p.matrix.as_ref();
    let lpl = {
        let lp = linalg::scale_rows(pm, l.phases());
        linalg::scale_cols(lp.as_ref(), &l.adjoint_phases())
    };
    let t = pm - &lpl;
    let t3 = &t * &t * &t;
    let center = l.center();
    let mut acc = Complex::new(0.0, 0.0);
    for (i, s) in g.sites().enumerate() {
        let dx = s.x1 as f64 - center.0;
        let dy = s.x2 as f64 - center.1;
        if dx.hypot(dy) <= window_radius {
            for k in 0..d {
                acc += t3[(i * d + k, i * d + k)];
            }
        }
    }
    acc.re
}

/// A cluster of eigenvalues of `|A|²`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenCluster {
    pub lo: f64,
    pub hi: f64,
    pub size: usize,
}

/// Multiplicity table of the defect spectrum, the Kramers evenness check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KramersReport {
    pub clusters: Vec<EigenCluster>,
    /// Clusters fully inside (0.01, 0.99) with odd size; empty for a clean
    /// Θ-invariant sample.
    pub interior_odd_clusters: Vec<EigenCluster>,
    /// Eigenvalues within `|λ - 1| ≤ band` at the top.
    pub top_cluster_size: usize,
    /// Parity of the Kramers pair count at the top; equals the Z₂ index
    /// for a Θ-invariant sample.
    pub top_pair_parity: u8,
    pub theta_residual: Option<f64>,
}

/// Clusters the eigenvalues of `|A|²` and verifies evenness away from 1.
///
/// `theta_residual` is recorded, not enforced, so deliberately Θ-breaking
/// inputs serve as negative controls.
pub fn kramers_pairing_report(
    p: &FermiProjection,
    l: &FluxOperator,
    theta_residual: Option<f64>,
    cluster_tol: f64,
    top_band: f64,
) -> Result<KramersReport, CoreError> {
    let a = compression_defect(p, l);
    let a2 = linalg::hermitize((a.adjoint() * &a).as_ref());
    let evals = spectral::eigh_matrix(a2.as_ref())?.eigenvalues;

    let mut clusters = Vec::new();
    let mut start = 0usize;
    for i in 1..=evals.len() {
        if i == evals.len() || evals[i] - evals[i - 1] > cluster_tol {
            clusters.push(EigenCluster {
                lo: evals[start],
                hi: evals[i - 1],
                size: i - start,
            });
            start = i;
        }
    }
    let interior_odd_clusters: Vec<EigenCluster> = clusters
        .iter()
        .filter(|c| c.lo > 0.01 && c.hi < 0.99 && c.size % 2 == 1)
        .cloned()
        .collect();
    let top_cluster_size = evals.iter().filter(|&&v| (v - 1.0).abs() <= top_band).count();
    Ok(KramersReport {
        clusters,
        interior_odd_clusters,
        top_cluster_size,
        top_pair_parity: ((top_cluster_size / 2) % 2) as u8,
        theta_residual,
    })
}

/// Rectangle contour in the complex plane crossing the real axis at `λ₀`,
/// enclosing 1 but not 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContourSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    /// Crossing point λ₀ ∈ (1/2, 1].
    pub crossing: f64,
    /// Distance from the contour to the spectra it was built for.
    pub clearance: f64,
}

impl ContourSpec {
    pub fn perimeter(&self) -> f64 {
        2.0 * (self.re_max - self.re_min) + 2.0 * (self.im_max - self.im_min)
    }

    pub fn encloses(&self, x: f64) -> bool {
        x > self.re_min && x < self.re_max
    }

    /// Exact distance from a real point to the rectangle boundary.
    pub fn distance_to_boundary(&self, x: f64) -> f64 {
        let h = self.im_max.min(-self.im_min);
        if self.encloses(x) {
            (x - self.re_min).min(self.re_max - x).min(h)
        } else if x <= self.re_min {
            self.re_min - x
        } else {
            x - self.re_max
        }
    }
}

/// Finds the widest eigenvalue-free crossing interval of `B₁`, `B₂` inside
/// `[1/2, 1]` and builds the rectangle through its midpoint.
pub fn find_contour(
    b1: MatRef<'_, Complex>,
    b2: MatRef<'_, Complex>,
) -> Result<ContourSpec, CoreError> {
    let e1 = spectral::eigh_matrix(b1)?.eigenvalues;
    let e2 = spectral::eigh_matrix(b2)?.eigenvalues;
    let mut pts: Vec<f64> = e1
        .iter()
        .chain(e2.iter())
        .copied()
        .filter(|&v| (0.5..=1.0).contains(&v))
        .collect();
    pts.sort_by(f64::total_cmp);

    let mut best_lo = 0.5;
    let mut best_len = 0.0;
    let mut prev = 0.5;
    for &p in pts.iter().chain(std::iter::once(&1.0)) {
        if p - prev > best_len {
            best_len = p - prev;
            best_lo = prev;
        }
        prev = p;
    }
    if best_len < 1e-12 {
        return Err(CoreError::NoContourGap);
    }
    let crossing = best_lo + 0.5 * best_len;
    let spec = ContourSpec {
        re_min: crossing,
        re_max: 1.25,
        im_min: -0.25,
        im_max: 0.25,
        crossing,
        clearance: 0.0,
    };
    let clearance = e1
        .iter()
        .chain(e2.iter())
        .map(|&v| spec.distance_to_boundary(v))
        .fold(f64::INFINITY, f64::min);
    Ok(ContourSpec { clearance, ..spec })
}

/// Result of the resolvent trace along a contour.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContourParityReport {
    /// Eigenvalues of `B` enclosed by the rectangle, counted directly.
    pub enclosed_multiplicity: usize,
    /// Trapezoidal value of `(1/2πi) ∮ Tr (z - B)⁻¹ dz` (counterclockwise).
    pub quadrature_value: f64,
    pub rounding_residual: f64,
    /// Pair-count parity when `kramers` is set (finite Θ-symmetric samples
    /// double every multiplicity), raw parity otherwise.
    pub parity: u8,
    pub nodes: usize,
}

/// Computes the enclosed multiplicity of `B` by quadrature of the
/// resolvent trace and by direct counting; both must agree.
pub fn contour_trace_parity(
    b: MatRef<'_, Complex>,
    contour: &ContourSpec,
    quadrature_n: usize,
    kramers: bool,
) -> Result<ContourParityReport, CoreError> {
    let evals = spectral::eigh_matrix(b)?.eigenvalues;
    let clearance = evals
        .iter()
        .map(|&v| contour.distance_to_boundary(v))
        .fold(f64::INFINITY, f64::min);
    if clearance <= 0.0 {
        return Err(CoreError::Precondition("contour touches the spectrum".into()));
    }
    let count = evals.iter().filter(|&&v| contour.encloses(v)).count();

    // Counterclockwise rectangle, trapezoid rule edge by edge.
    let corners = [
        Complex::new(contour.re_min, contour.im_min),
        Complex::new(contour.re_max, contour.im_min),
        Complex::new(contour.re_max, contour.im_max),
        Complex::new(contour.re_min, contour.im_max),
    ];
    let trace_resolvent = |z: Complex| -> Complex {
        evals.iter().map(|&l| (z - Complex::new(l, 0.0)).inv()).sum()
    };
    let per_edge = (quadrature_n / 4).max(4);
    let mut integral = Complex::new(0.0, 0.0);
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        let dz = (b - a) * (1.0 / per_edge as f64);
        for k in 0..per_edge {
            let z0 = a + dz * (k as f64);
            let z1 = a + dz * ((k + 1) as f64);
            integral += (trace_resolvent(z0) + trace_resolvent(z1)) * dz * 0.5;
        }
    }
    let value = (integral / Complex::new(0.0, 2.0 * std::f64::consts::PI)).re;
    let rounding_residual = (value - value.round()).abs();
    if rounding_residual > 0.1 || (value.round() as i64) != count as i64 {
        return Err(CoreError::QuadratureMismatch { integral: value, count });
    }
    if kramers && count % 2 != 0 {
        return Err(CoreError::Precondition(format!(
            "enclosed multiplicity {count} is odd on a Kramers-paired sample"
        )));
    }
    let parity = if kramers { ((count / 2) % 2) as u8 } else { (count % 2) as u8 };
    Ok(ContourParityReport {
        enclosed_multiplicity: count,
        quadrature_value: value,
        rounding_residual,
        parity,
        nodes: 4 * per_edge,
    })
}

/// The trace-difference bound along a shared contour.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffBoundReport {
    /// `|enclosed(B₁) - enclosed(B₂)|` (the exact trace difference).
    pub delta_exact: f64,
    /// `|∂S| ‖B₁-B₂‖₁ / (2π · d(Spec B₁, ∂S) · d(Spec B₂, ∂S))`.
    pub bound: f64,
    pub trace_norm_diff: f64,
    pub within_bound: bool,
    pub quadrature_delta: f64,
}

/// Evaluates the exact index difference and its resolvent bound over one
/// contour valid for both operators.
pub fn index_difference_bound(
    b1: MatRef<'_, Complex>,
    b2: MatRef<'_, Complex>,
    contour: &ContourSpec,
    quadrature_n: usize,
) -> Result<DiffBoundReport, CoreError> {
    let r1 = contour_trace_parity(b1, contour, quadrature_n, false)?;
    let r2 = contour_trace_parity(b2, contour, quadrature_n, false)?;
    let e1 = spectral::eigh_matrix(b1)?.eigenvalues;
    let e2 = spectral::eigh_matrix(b2)?.eigenvalues;
    let d1 = e1
        .iter()
        .map(|&v| contour.distance_to_boundary(v))
        .fold(f64::INFINITY, f64::min);
    let d2 = e2
        .iter()
        .map(|&v| contour.distance_to_boundary(v))
        .fold(f64::INFINITY, f64::min);
    let diff = b1 - b2;
    let trace_norm_diff = linalg::schatten_norm(diff.as_ref(), 1.0)?;
    let bound =
        contour.perimeter() * trace_norm_diff / (2.0 * std::f64::consts::PI * d1 * d2);
    let delta_exact =
        (r1.enclosed_multiplicity as f64 - r2.enclosed_multiplicity as f64).abs();
    Ok(DiffBoundReport {
        delta_exact,
        bound,
        trace_norm_diff,
        within_bound: delta_exact <= bound + 1e-12,
        quadrature_delta: (r1.quadrature_value - r2.quadrature_value).abs(),
    })
}

/// Verdict of a flux-center sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenterShiftReport {
    pub per_center: Vec<((f64, f64), IndexReport)>,
    pub pass: bool,
}

/// Computes the Z₂ index at every listed center; passes when all verdicts
/// are confident and equal.
pub fn center_shift_test(
    h: &HermitianOperator,
    theta: &TimeReversalOp,
    e_f: f64,
    centers: &[(f64, f64)],
    params: &IndexParams,
) -> Result<CenterShiftReport, CoreError> {
    let theta_residual = theta.commutator_residual(h.matrix());
    if theta_residual > params.theta_tol {
        return Err(CoreError::ThetaViolation(theta_residual));
    }
    let p = spectral::fermi_projection(h, e_f)?;
    let mut per_center = Vec::new();
    for &c in centers {
        check_flux_preconditions(h.geometry(), c, params)?;
        let l = flux_operator(h.geometry(), c)?;
        let report = z2_index_from_projection(&p, &l, theta_residual, params)?;
        per_center.push((c, report));
    }
    let pass = !per_center.is_empty()
        && per_center.iter().all(|(_, r)| r.verdict.is_confident())
        && per_center.windows(2).all(|w| w[0].1.z2 == w[1].1.z2);
    Ok(CenterShiftReport { per_center, pass })
}

/// Outcome of the windowed-difference experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalDeterminacyReport {
    /// `‖1_{B_R(a)} (H₁-H₂) 1_{B_R(a)}‖`.
    pub windowed_norm: f64,
    pub epsilon: f64,
    pub radius: f64,
    /// True when the windowed norm is within ε (the hypothesis applies).
    pub applicable: bool,
    pub index_1: IndexReport,
    pub index_2: IndexReport,
    /// applicable ⇒ indices equal; recorded either way.
    pub pass: bool,
}

/// Measures `‖1_{B_R(a)}(H₁-H₂)1_{B_R(a)}‖` and compares the two indices.
pub fn local_determinacy_test(
    h1: &HermitianOperator,
    h2: &HermitianOperator,
    theta: &TimeReversalOp,
    e_f: f64,
    center: (f64, f64),
    radius: f64,
    epsilon: f64,
    params: &IndexParams,
) -> Result<LocalDeterminacyReport, CoreError> {
    if h1.geometry() != h2.geometry() {
        return Err(CoreError::GeometryMismatch(
            "local determinacy needs one shared geometry".into(),
        ));
    }
    let g = h1.geometry();
    // The windowed norm is the norm of the ball-supported submatrix.
    let d = g.orbitals();
    let mut rows = Vec::new();
    for (i, s) in g.sites().enumerate() {
        let dx = s.x1 as f64 - center.0;
        let dy = s.x2 as f64 - center.1;
        if dx.hypot(dy) <= radius {
            for k in 0..d {
                rows.push(i * d + k);
            }
        }
    }
    let diff = h1.matrix() - h2.matrix();
    let windowed = Mat::from_fn(rows.len(), rows.len(), |i, j| diff[(rows[i], rows[j])]);
    let windowed_norm = linalg::operator_norm(windowed.as_ref())?;

    let index_1 = z2_index(h1, theta, e_f, center, params)?;
    let index_2 = z2_index(h2, theta, e_f, center, params)?;
    let applicable = windowed_norm <= epsilon;
    let indices_equal = index_1.z2 == index_2.z2
        && index_1.verdict.is_confident()
        && index_2.verdict.is_confident();
    let pass = !applicable || indices_equal;
    Ok(LocalDeterminacyReport {
        windowed_norm,
        epsilon,
        radius,
        applicable,
        index_1,
        index_2,
        pass,
    })
}

/// Empirical scan of the flux-phase Lipschitz constant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `max |f(x)-f(y)| ⟨y⟩ / |x-y|` over the scanned box, `f(x) = x/|x|`.
    pub constant: f64,
    pub argmax_x: (i32, i32),
    pub argmax_y: (i32, i32),
    pub box_half_width: i32,
}

/// Phase-difference ratio `|f(x)-f(y)| ⟨y⟩ / |x-y|`; zero when `x = y`.
pub fn lipschitz_ratio(x: (i32, i32), y: (i32, i32)) -> f64 {
    if x == y {
        return 0.0;
    }
    let fx = Complex::new(x.0 as f64, x.1 as f64);
    let fy = Complex::new(y.0 as f64, y.1 as f64);
    let diff = (fx / fx.norm() - fy / fy.norm()).norm();
    let bracket = (1.0 + fy.norm_sqr()).sqrt();
    let dist = (fx - fy).norm();
    diff * bracket / dist
}

/// Exhaustive scan over ordered pairs `x ≠ y`, both nonzero, in the box
/// `[-half, half]²`.
pub fn lipschitz_scan(box_half_width: i32) -> LipschitzReport {
    use rayon::prelude::*;
    let b = box_half_width;
    let pts: Vec<(i32, i32)> = (-b..=b)
        .flat_map(|x1| (-b..=b).map(move |x2| (x1, x2)))
        .filter(|&(x1, x2)| x1 != 0 || x2 != 0)
        .collect();
    let best = pts
        .par_iter()
        .map(|&x| {
            let mut local = (0.0f64, x, x);
            for &y in &pts {
                if y == x {
                    continue;
                }
                let r = lipschitz_ratio(x, y);
                if r > local.0 {
                    local = (r, x, y);
                }
            }
            local
        })
        .reduce(|| (0.0, (0, 0), (0, 0)), |a, b| if a.0 >= b.0 { a } else { b });
    LipschitzReport {
        constant: best.0,
        argmax_x: best.1,
        argmax_y: best.2,
        box_half_width,
    }
}

/// Largest phase difference of `L - L^{(a)}` over sites with `|x| > r`.
/// Decaying tails witness compactness of the center-shift difference.
pub fn flux_shift_tail_norm(
    geometry: &LatticeGeometry,
    a: (f64, f64),
    base: (f64, f64),
    r: f64,
) -> Result<f64, CoreError> {
    let la = flux_operator(geometry, a)?;
    let lb = flux_operator(geometry, base)?;
    let d = geometry.orbitals();
    let mut worst = 0.0f64;
    for (i, s) in geometry.sites().enumerate() {
        if (s.x1 as f64).hypot(s.x2 as f64) > r {
            let diff = (la.phases()[i * d] - lb.phases()[i * d]).norm();
            worst = worst.max(diff);
        }
    }
    Ok(worst)
}
