//! The concrete lattice Hamiltonians: Wallace nearest-neighbor model,
//! Haldane second-neighbor flux model, the parity-broken model, and their
//! spinful layerings (Kane–Mele `H₊` and the trivial partner `H₋`), plus
//! the fermionic time-reversal operator Θ and Bloch dispersions.
//!
//! All models live on ℤ² with a 2-orbital (A, B) fiber per site — the
//! honeycomb structure is encoded in the hopping stencils, not in the
//! embedding. Spinful models double the fiber to (A↑, B↑, A↓, B↓).
//! Open-boundary truncation drops hoppings leaving the sample.

use crate::error::CoreError;
use crate::lattice::LatticeGeometry;
use crate::linalg;
use crate::operator::HermitianOperator;
use crate::spectral;
use crate::Complex;
use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);
const I: Complex = Complex::new(0.0, 1.0);

/// Built-in model identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Wallace,
    Haldane,
    ParityBroken,
    KaneMelePlus,
    HMinus,
}

impl ModelKind {
    pub fn orbitals(self) -> usize {
        match self {
            ModelKind::Wallace | ModelKind::Haldane | ModelKind::ParityBroken => 2,
            ModelKind::KaneMelePlus | ModelKind::HMinus => 4,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        match s {
            "wallace" => Ok(ModelKind::Wallace),
            "haldane" => Ok(ModelKind::Haldane),
            "parity_broken" => Ok(ModelKind::ParityBroken),
            "kane_mele_plus" => Ok(ModelKind::KaneMelePlus),
            "h_minus" => Ok(ModelKind::HMinus),
            other => Err(CoreError::UnknownModel(other.to_string())),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelKind::Wallace => "wallace",
            ModelKind::Haldane => "haldane",
            ModelKind::ParityBroken => "parity_broken",
            ModelKind::KaneMelePlus => "kane_mele_plus",
            ModelKind::HMinus => "h_minus",
        };
        f.write_str(s)
    }
}

type Block2 = [[Complex; 2]; 2];

/// Hopping stencil entry: the block `H(n, n + r)` for displacement `r`.
#[derive(Clone)]
struct Hop {
    dx: i32,
    dy: i32,
    block: Block2,
}

fn wallace_hops() -> Vec<Hop> {
    let ab = |dx, dy| Hop { dx, dy, block: [[ZERO, ONE], [ZERO, ZERO]] };
    let ba = |dx, dy| Hop { dx, dy, block: [[ZERO, ZERO], [ONE, ZERO]] };
    vec![
        Hop { dx: 0, dy: 0, block: [[ZERO, ONE], [ONE, ZERO]] },
        ab(-1, 0),
        ab(0, -1),
        ba(1, 0),
        ba(0, 1),
    ]
}

/// Directed second-neighbor hops of the Haldane term; the B sublattice
/// carries the opposite sign.
fn haldane_hops() -> Vec<Hop> {
    let signs: [((i32, i32), f64); 6] = [
        ((1, 0), 1.0),
        ((1, -1), -1.0),
        ((0, -1), 1.0),
        ((-1, 0), -1.0),
        ((-1, 1), 1.0),
        ((0, 1), -1.0),
    ];
    signs
        .iter()
        .map(|&((dx, dy), c)| Hop {
            dx,
            dy,
            block: [[I * c, ZERO], [ZERO, -I * c]],
        })
        .collect()
}

fn parity_hops() -> Vec<Hop> {
    vec![Hop { dx: 0, dy: 0, block: [[ONE, ZERO], [ZERO, -ONE]] }]
}

fn add_scaled(base: &mut Vec<Hop>, extra: &[Hop], s: f64) {
    let s = Complex::new(s, 0.0);
    for h in extra {
        let mut block = h.block;
        for row in &mut block {
            for z in row.iter_mut() {
                *z *= s;
            }
        }
        base.push(Hop { dx: h.dx, dy: h.dy, block });
    }
}

/// `-Γ* X Γ` for the antiunitary `Γψ = [[0,1],[-1,0]] conj(ψ)`, i.e. the
/// spin-down image `-G conj(X) G` of a spin-up block.
fn spin_flip(x: &Block2) -> Block2 {
    [
        [x[1][1].conj(), -x[1][0].conj()],
        [-x[0][1].conj(), x[0][0].conj()],
    ]
}

fn assemble2(geometry: &LatticeGeometry, hops: &[Hop]) -> Mat<Complex> {
    let n = geometry.dim();
    let mut mat = Mat::<Complex>::zeros(n, n);
    for site in geometry.sites() {
        let rows = geometry.rows_of(site).unwrap();
        for hop in hops {
            if let Some(target) = geometry.neighbor(site, hop.dx, hop.dy) {
                let cols = geometry.rows_of(target).unwrap();
                for a in 0..2 {
                    for b in 0..2 {
                        mat[(rows.start + a, cols.start + b)] += hop.block[a][b];
                    }
                }
            }
        }
    }
    mat
}

/// Assembles the spinful model `diag(up, Γ* up Γ)` from a 2-orbital stencil.
fn assemble4(geometry: &LatticeGeometry, hops: &[Hop]) -> Mat<Complex> {
    let n = geometry.dim();
    let mut mat = Mat::<Complex>::zeros(n, n);
    for site in geometry.sites() {
        let rows = geometry.rows_of(site).unwrap();
        for hop in hops {
            if let Some(target) = geometry.neighbor(site, hop.dx, hop.dy) {
                let cols = geometry.rows_of(target).unwrap();
                let down = spin_flip(&hop.block);
                for a in 0..2 {
                    for b in 0..2 {
                        mat[(rows.start + a, cols.start + b)] += hop.block[a][b];
                        mat[(rows.start + 2 + a, cols.start + 2 + b)] += down[a][b];
                    }
                }
            }
        }
    }
    mat
}

fn require_orbitals(geometry: &LatticeGeometry, d: usize) -> Result<(), CoreError> {
    if geometry.orbitals() != d {
        return Err(CoreError::OrbitalMismatch { expected: d, got: geometry.orbitals() });
    }
    Ok(())
}

fn spinless_hops(kind: ModelKind, s: f64) -> Vec<Hop> {
    let mut hops = wallace_hops();
    match kind {
        ModelKind::Wallace => {}
        ModelKind::Haldane | ModelKind::KaneMelePlus => add_scaled(&mut hops, &haldane_hops(), s),
        ModelKind::ParityBroken | ModelKind::HMinus => add_scaled(&mut hops, &parity_hops(), s),
    }
    hops
}

/// Nearest-neighbor Wallace model on the 2-orbital fiber.
pub fn wallace(geometry: &LatticeGeometry) -> Result<HermitianOperator, CoreError> {
    require_orbitals(geometry, 2)?;
    Ok(HermitianOperator::from_matrix_unchecked(
        assemble2(geometry, &wallace_hops()),
        geometry.clone(),
    ))
}

/// Haldane model `H_s = H₀ + s·S`.
pub fn haldane(geometry: &LatticeGeometry, s: f64) -> Result<HermitianOperator, CoreError> {
    require_orbitals(geometry, 2)?;
    Ok(HermitianOperator::from_matrix_unchecked(
        assemble2(geometry, &spinless_hops(ModelKind::Haldane, s)),
        geometry.clone(),
    ))
}

/// Parity-broken model `W_s = H₀ + s·I`, with `I = diag(+1, -1)` per site.
pub fn parity_broken(geometry: &LatticeGeometry, s: f64) -> Result<HermitianOperator, CoreError> {
    require_orbitals(geometry, 2)?;
    Ok(HermitianOperator::from_matrix_unchecked(
        assemble2(geometry, &spinless_hops(ModelKind::ParityBroken, s)),
        geometry.clone(),
    ))
}

/// Kane–Mele model `H₊ = diag(H_s, Γ* H_s Γ)` on the 4-orbital fiber.
pub fn kane_mele_plus(geometry: &LatticeGeometry, s: f64) -> Result<HermitianOperator, CoreError> {
    require_orbitals(geometry, 4)?;
    Ok(HermitianOperator::from_matrix_unchecked(
        assemble4(geometry, &spinless_hops(ModelKind::KaneMelePlus, s)),
        geometry.clone(),
    ))
}

/// Layered trivial partner `H₋ = diag(W_s, Γ* W_s Γ)`.
pub fn h_minus(geometry: &LatticeGeometry, s: f64) -> Result<HermitianOperator, CoreError> {
    require_orbitals(geometry, 4)?;
    Ok(HermitianOperator::from_matrix_unchecked(
        assemble4(geometry, &spinless_hops(ModelKind::HMinus, s)),
        geometry.clone(),
    ))
}

/// Θ-invariant flat-band reference: `diag(1, -1, -1, 1)` per site.
pub fn atomic_insulator(geometry: &LatticeGeometry) -> Result<HermitianOperator, CoreError> {
    require_orbitals(geometry, 4)?;
    let n = geometry.dim();
    let pattern = [1.0, -1.0, -1.0, 1.0];
    let mat = Mat::from_fn(n, n, |i, j| {
        if i == j {
            Complex::new(pattern[i % 4], 0.0)
        } else {
            ZERO
        }
    });
    Ok(HermitianOperator::from_matrix_unchecked(mat, geometry.clone()))
}

/// Dispatch on a model id.
pub fn build_model(
    geometry: &LatticeGeometry,
    kind: ModelKind,
    s: f64,
) -> Result<HermitianOperator, CoreError> {
    match kind {
        ModelKind::Wallace => wallace(geometry),
        ModelKind::Haldane => haldane(geometry, s),
        ModelKind::ParityBroken => parity_broken(geometry, s),
        ModelKind::KaneMelePlus => kane_mele_plus(geometry, s),
        ModelKind::HMinus => h_minus(geometry, s),
    }
}

/// The real-space hopping stencil of a model: the `d × d` block `H(n, n+r)`
/// per displacement `r`, merged over coinciding displacements.
pub fn hopping_blocks(kind: ModelKind, s: f64) -> Vec<(i32, i32, Mat<Complex>)> {
    let hops = spinless_hops(kind, s);
    let d = kind.orbitals();
    let mut merged: std::collections::BTreeMap<(i32, i32), Mat<Complex>> =
        std::collections::BTreeMap::new();
    for hop in &hops {
        let entry = merged
            .entry((hop.dx, hop.dy))
            .or_insert_with(|| Mat::zeros(d, d));
        let down = spin_flip(&hop.block);
        for a in 0..2 {
            for b in 0..2 {
                entry[(a, b)] += hop.block[a][b];
                if d == 4 {
                    entry[(
                        2 + a,
                        2 + b,
                    )] += down[a][b];
                }
            }
        }
    }
    merged.into_iter().map(|((dx, dy), m)| (dx, dy, m)).collect()
}

/// Antiunitary time-reversal map `Θψ = U_Θ · conj(ψ)` with `Θ² = -1`,
/// block-diagonal over sites.
#[derive(Debug, Clone)]
pub struct TimeReversalOp {
    u: Mat<Complex>,
    geometry: LatticeGeometry,
}

impl TimeReversalOp {
    fn from_site_block(geometry: &LatticeGeometry, block: &[&[f64]]) -> Self {
        let d = geometry.orbitals();
        assert_eq!(block.len(), d);
        let n = geometry.dim();
        let u = Mat::from_fn(n, n, |i, j| {
            if i / d == j / d {
                Complex::new(block[i % d][j % d], 0.0)
            } else {
                ZERO
            }
        });
        Self { u, geometry: geometry.clone() }
    }

    pub fn matrix(&self) -> MatRef<'_, Complex> {
        self.u.as_ref()
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    /// Applies Θ to a vector or matrix of column vectors.
    pub fn apply(&self, v: MatRef<'_, Complex>) -> Mat<Complex> {
        &self.u * linalg::conjugate(v)
    }

    /// `Θ² · v`; equals `-v` for a fermionic map.
    pub fn apply_twice(&self, v: MatRef<'_, Complex>) -> Mat<Complex> {
        let once = self.apply(v);
        self.apply(once.as_ref())
    }

    /// `Θ M Θ⁻¹` as a linear matrix: `-U · conj(M) · U` (U real).
    pub fn conjugate_operator(&self, m: MatRef<'_, Complex>) -> Mat<Complex> {
        let inner = linalg::conjugate(m);
        -(&self.u * inner * &self.u)
    }

    /// Residual of `[M, Θ] = 0` in matrix form: `max |M·U − U·conj(M)|`.
    pub fn commutator_residual(&self, m: MatRef<'_, Complex>) -> f64 {
        let lhs = m * &self.u;
        let rhs = &self.u * linalg::conjugate(m);
        (&lhs - &rhs).norm_max()
    }
}

/// The spinful time-reversal operator `Θ = [[0, Γ], [Γ, 0]]`.
pub fn theta(geometry: &LatticeGeometry) -> Result<TimeReversalOp, CoreError> {
    require_orbitals(geometry, 4)?;
    let block: [&[f64]; 4] = [
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, -1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[-1.0, 0.0, 0.0, 0.0],
    ];
    Ok(TimeReversalOp::from_site_block(geometry, &block))
}

/// The 2-orbital analog built from Γ alone; the Haldane model breaks it.
pub fn theta_spinless(geometry: &LatticeGeometry) -> Result<TimeReversalOp, CoreError> {
    require_orbitals(geometry, 2)?;
    let block: [&[f64]; 2] = [&[0.0, 1.0], &[-1.0, 0.0]];
    Ok(TimeReversalOp::from_site_block(geometry, &block))
}

/// Nearest-neighbor structure factor `ω(ξ) = 1 + e^{iξ₁} + e^{iξ₂}`.
pub fn omega(xi: (f64, f64)) -> Complex {
    ONE + Complex::from_polar(1.0, xi.0) + Complex::from_polar(1.0, xi.1)
}

/// Second-neighbor flux factor `η(ξ) = sin ξ₁ − sin ξ₂ + sin(ξ₂ − ξ₁)`.
pub fn eta(xi: (f64, f64)) -> f64 {
    xi.0.sin() - xi.1.sin() + (xi.1 - xi.0).sin()
}

/// The two Dirac momenta `ξ± = ±(2π/3)(1, -1)` of the Wallace model.
pub fn dirac_points() -> [(f64, f64); 2] {
    let k = 2.0 * std::f64::consts::PI / 3.0;
    [(k, -k), (-k, k)]
}

fn symbol2(kind: ModelKind, s: f64, xi: (f64, f64)) -> Mat<Complex> {
    let w = omega(xi);
    let m = match kind {
        ModelKind::Wallace => 0.0,
        ModelKind::Haldane | ModelKind::KaneMelePlus => -2.0 * s * eta(xi),
        ModelKind::ParityBroken | ModelKind::HMinus => s,
    };
    let mut out = Mat::<Complex>::zeros(2, 2);
    out[(0, 0)] = Complex::new(m, 0.0);
    out[(1, 1)] = Complex::new(-m, 0.0);
    out[(0, 1)] = w.conj();
    out[(1, 0)] = w;
    out
}

/// The Bloch symbol of the model at momentum ξ (2×2 or 4×4).
pub fn bloch_symbol(kind: ModelKind, s: f64, xi: (f64, f64)) -> Mat<Complex> {
    match kind.orbitals() {
        2 => symbol2(kind, s, xi),
        _ => {
            let up = symbol2(kind, s, xi);
            // Spin-down symbol: -Γ conj(up(-ξ)) Γ with Γ = [[0,1],[-1,0]].
            let um = symbol2(kind, s, (-xi.0, -xi.1));
            let mut out = Mat::<Complex>::zeros(4, 4);
            for a in 0..2 {
                for b in 0..2 {
                    out[(a, b)] = up[(a, b)];
                }
            }
            let down = [
                [um[(1, 1)].conj(), -um[(1, 0)].conj()],
                [-um[(0, 1)].conj(), um[(0, 0)].conj()],
            ];
            for a in 0..2 {
                for b in 0..2 {
                    out[(2 + a, 2 + b)] = down[a][b];
                }
            }
            out
        }
    }
}

/// Analytic dispersion `±λ(ξ)`; spinful models return the same doubly
/// degenerate pair as their spin-up layer.
pub fn bloch_dispersion(kind: ModelKind, s: f64, xi: (f64, f64)) -> (f64, f64) {
    let aw = omega(xi).norm();
    let lambda = match kind {
        ModelKind::Wallace => aw,
        ModelKind::Haldane | ModelKind::KaneMelePlus => {
            let m = 2.0 * s * eta(xi);
            (m * m + aw * aw).sqrt()
        }
        ModelKind::ParityBroken | ModelKind::HMinus => (s * s + aw * aw).sqrt(),
    };
    (-lambda, lambda)
}

/// Locality scan against the bound `|H(x,y)| ≤ ν⁻¹ e^{-2ν|x-y|}`.
#[derive(Debug, Clone, Serialize)]
pub struct LocalityReport {
    /// Largest `|H(x,y)| · ν · e^{2ν|x-y|}`; ≤ 1 means the bound holds.
    pub max_bound_ratio: f64,
    /// Least-squares decay rate of `log ‖H(x,y)‖` against `|x-y|`.
    pub fitted_rate: Option<f64>,
    pub nu: f64,
}

/// Scans all site blocks of `h` against the locality bound with rate `ν`.
pub fn check_locality(h: &HermitianOperator, nu: f64) -> LocalityReport {
    let g = h.geometry();
    let d = g.orbitals();
    let m = h.matrix();
    let mut worst = 0.0f64;
    for (i, x) in g.sites().enumerate() {
        for (j, y) in g.sites().enumerate() {
            let block = m.submatrix(i * d, j * d, d, d);
            let norm = block.norm_l2();
            if norm == 0.0 {
                continue;
            }
            let dist = g.distance(x, y);
            let ratio = norm * nu * (2.0 * nu * dist).exp();
            if ratio > worst {
                worst = ratio;
            }
        }
    }
    let profile = spectral::kernel_decay_profile(m, g);
    LocalityReport { max_bound_ratio: worst, fitted_rate: profile.fitted_rate, nu }
}

/// Residual of time-reversal invariance, `max |H·U_Θ − U_Θ·conj(H)|`.
pub fn check_theta_invariance(h: &HermitianOperator, theta: &TimeReversalOp) -> f64 {
    theta.commutator_residual(h.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, BoundaryMode, Site};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn open(n: usize, d: usize) -> LatticeGeometry {
        build_lattice(n, n, d, BoundaryMode::Open).unwrap()
    }

    fn periodic(n: usize, d: usize) -> LatticeGeometry {
        build_lattice(n, n, d, BoundaryMode::Periodic).unwrap()
    }

    /// Independent symbol oracle: sandwich the periodic real-space matrix
    /// between plane waves on the dual grid.
    fn symbol_from_real_space(h: &HermitianOperator, k: (f64, f64)) -> Mat<Complex> {
        let g = h.geometry();
        let d = g.orbitals();
        let ns = g.site_count() as f64;
        let mut waves = Mat::<Complex>::zeros(g.dim(), d);
        for (i, s) in g.sites().enumerate() {
            let phase = Complex::from_polar(
                1.0 / ns.sqrt(),
                k.0 * s.x1 as f64 + k.1 * s.x2 as f64,
            );
            for b in 0..d {
                waves[(i * d + b, b)] = phase;
            }
        }
        waves.adjoint() * h.matrix() * &waves
    }

    #[test]
    fn all_models_are_hermitian() {
        for &mode in &[BoundaryMode::Open, BoundaryMode::Periodic] {
            let g2 = build_lattice(6, 5, 2, mode).unwrap();
            let g4 = build_lattice(6, 5, 4, mode).unwrap();
            for s in [0.0, 0.5, -0.7] {
                assert!(wallace(&g2).unwrap().hermiticity_defect() <= 1e-12);
                assert!(haldane(&g2, s).unwrap().hermiticity_defect() <= 1e-12);
                assert!(parity_broken(&g2, s).unwrap().hermiticity_defect() <= 1e-12);
                assert!(kane_mele_plus(&g4, s).unwrap().hermiticity_defect() <= 1e-12);
                assert!(h_minus(&g4, s).unwrap().hermiticity_defect() <= 1e-12);
            }
        }
    }

    #[test]
    fn orbital_counts_are_enforced() {
        let g4 = open(4, 4);
        let g2 = open(4, 2);
        assert!(wallace(&g4).is_err());
        assert!(kane_mele_plus(&g2, 0.5).is_err());
        assert!(theta(&g2).is_err());
    }

    #[test]
    fn parity_broken_is_wallace_plus_diagonal() {
        let g = open(5, 2);
        let w0 = parity_broken(&g, 0.0).unwrap();
        let h0 = wallace(&g).unwrap();
        assert_eq!((w0.matrix() - h0.matrix()).norm_max(), 0.0);

        let s = 0.37;
        let ws = parity_broken(&g, s).unwrap();
        let diff = ws.matrix() - h0.matrix();
        for i in 0..g.dim() {
            for j in 0..g.dim() {
                let expect = if i == j {
                    Complex::new(if i % 2 == 0 { s } else { -s }, 0.0)
                } else {
                    ZERO
                };
                assert_eq!(diff[(i, j)], expect);
            }
        }
    }

    #[test]
    fn dispersion_spot_values() {
        // ω(0) = 3
        let (lo, hi) = bloch_dispersion(ModelKind::Wallace, 0.0, (0.0, 0.0));
        assert_abs_diff_eq!(hi, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(lo, -3.0, epsilon = 1e-14);
        // ω(π, π) = -1
        let (_, hi) = bloch_dispersion(ModelKind::Wallace, 0.0, (PI, PI));
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-14);
        // Dirac zeros
        for xi in dirac_points() {
            assert!(omega(xi).norm() <= 1e-12, "omega at Dirac point: {}", omega(xi).norm());
            let (_, hi) = bloch_dispersion(ModelKind::Wallace, 0.0, xi);
            assert!(hi <= 1e-12);
        }
        // Haldane at ξ₊: ±2sη with η = 3√3/2
        let xi = dirac_points()[0];
        assert_abs_diff_eq!(eta(xi), 1.5 * 3f64.sqrt(), epsilon = 1e-13);
        let (_, hi) = bloch_dispersion(ModelKind::Haldane, 0.3, xi);
        assert_abs_diff_eq!(hi, 0.6 * 1.5 * 3f64.sqrt(), epsilon = 1e-13);
        // parity-broken at a Dirac point: ±|s|
        let (_, hi) = bloch_dispersion(ModelKind::ParityBroken, 1.0, xi);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn haldane_gap_at_dirac_point_is_six_root_three_s() {
        let s = 0.5;
        let xi = dirac_points()[0];
        let (lo, hi) = bloch_dispersion(ModelKind::Haldane, s, xi);
        assert_abs_diff_eq!(hi - lo, 6.0 * 3f64.sqrt() * s, epsilon = 1e-12);
    }

    #[test]
    fn real_space_symbols_match_the_formulas() {
        for (kind, d) in [
            (ModelKind::Wallace, 2),
            (ModelKind::Haldane, 2),
            (ModelKind::ParityBroken, 2),
            (ModelKind::KaneMelePlus, 4),
            (ModelKind::HMinus, 4),
        ] {
            let g = periodic(8, d);
            let h = build_model(&g, kind, 0.45).unwrap();
            for k1 in 0..8 {
                for k2 in 0..8 {
                    let k = (2.0 * PI * k1 as f64 / 8.0, 2.0 * PI * k2 as f64 / 8.0);
                    let oracle = symbol_from_real_space(&h, k);
                    let formula = bloch_symbol(kind, 0.45, k);
                    let err = (&oracle - &formula).norm_max();
                    assert!(err <= 1e-12, "{kind} symbol mismatch {err:.2e} at {k:?}");
                }
            }
        }
    }

    #[test]
    fn wallace_is_gapless_on_grids_hitting_the_dirac_point() {
        let g = periodic(6, 2);
        let h = wallace(&g).unwrap();
        let (evals, _) = linalg::eigh(h.matrix()).unwrap();
        let min_abs = evals.iter().fold(f64::INFINITY, |m, &e| m.min(e.abs()));
        assert!(min_abs <= 1e-12, "expected 0 in the spectrum, min |λ| = {min_abs:.2e}");
    }

    #[test]
    fn spinful_models_are_gapped_and_kramers_degenerate() {
        let g = periodic(6, 4);
        for s in [0.5, -0.4] {
            for h in [kane_mele_plus(&g, s).unwrap(), h_minus(&g, s).unwrap()] {
                let (evals, _) = linalg::eigh(h.matrix()).unwrap();
                let min_abs = evals.iter().fold(f64::INFINITY, |m, &e| m.min(e.abs()));
                assert!(min_abs > 1e-3, "spinful model should be insulating, min |λ| = {min_abs:.2e}");
            }
        }
        // Kramers pairing on an open Θ-symmetric sample
        let g = open(6, 4);
        let h = kane_mele_plus(&g, 0.7).unwrap();
        let (evals, _) = linalg::eigh(h.matrix()).unwrap();
        for pair in evals.chunks(2) {
            assert!(pair[1] - pair[0] <= 1e-8, "Kramers pair split {:.2e}", pair[1] - pair[0]);
        }
    }

    #[test]
    fn spin_blocks_share_the_spectrum() {
        let g2 = open(5, 2);
        let g4 = open(5, 4);
        let hs = haldane(&g2, 0.6).unwrap();
        let hp = kane_mele_plus(&g4, 0.6).unwrap();
        let (mut up, _) = linalg::eigh(hs.matrix()).unwrap();
        let (full, _) = linalg::eigh(hp.matrix()).unwrap();
        let mut doubled: Vec<f64> = up.drain(..).flat_map(|e| [e, e]).collect();
        doubled.sort_by(f64::total_cmp);
        for (a, b) in doubled.iter().zip(full.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn theta_squares_to_minus_one() {
        let g = open(4, 4);
        let th = theta(&g).unwrap();
        let eye = Mat::<Complex>::identity(g.dim(), g.dim());
        let twice = th.apply_twice(eye.as_ref());
        assert!((&twice + &eye).norm_max() <= 1e-15);
        // unitary, and block-diagonal over sites by construction
        let gram = th.matrix().adjoint() * th.matrix();
        assert!((&gram - &eye).norm_max() <= 1e-15);
    }

    #[test]
    fn theta_invariance_residuals() {
        let g = open(5, 4);
        let th = theta(&g).unwrap();
        for s in [0.5, -0.8] {
            assert!(check_theta_invariance(&kane_mele_plus(&g, s).unwrap(), &th) <= 1e-12);
            assert!(check_theta_invariance(&h_minus(&g, s).unwrap(), &th) <= 1e-12);
        }
        let eye = HermitianOperator::from_matrix_unchecked(
            Mat::identity(g.dim(), g.dim()),
            g.clone(),
        );
        assert_eq!(check_theta_invariance(&eye, &th), 0.0);

        // the spinless Haldane model breaks the d=2 analog
        let g2 = open(5, 2);
        let th2 = theta_spinless(&g2).unwrap();
        let res = check_theta_invariance(&haldane(&g2, 0.5).unwrap(), &th2);
        assert!(res > 0.1, "Haldane should break time reversal, residual {res:.3}");
    }

    #[test]
    fn locality_bound_holds_for_finite_range_models() {
        let g = open(6, 2);
        let h = haldane(&g, 0.5).unwrap();
        assert!(h.hopping_range() <= 2.0 * 2f64.sqrt() + 1e-12);
        // any ν with ν⁻¹ ≥ max amplitude · e^{2ν·range} works; ν = 0.2:
        // bound ν⁻¹ e^{-2ν√2} = 5·e^{-0.57} ≈ 2.8 ≥ every block norm
        let report = check_locality(&h, 0.2);
        assert!(report.max_bound_ratio <= 1.0, "ratio {}", report.max_bound_ratio);

        let zero = HermitianOperator::from_matrix_unchecked(
            Mat::zeros(g.dim(), g.dim()),
            g.clone(),
        );
        let report = check_locality(&zero, 0.5);
        assert_eq!(report.max_bound_ratio, 0.0);
        assert!(report.fitted_rate.is_none());
    }

    #[test]
    fn stencil_blocks_match_the_displayed_formulas() {
        // H₀: the A component at n couples to B at n, n-e₁, n-e₂.
        let g = open(6, 2);
        let h = wallace(&g).unwrap();
        let n0 = Site::new(0, 0);
        for (target, expect_ab) in [
            (Site::new(0, 0), 1.0),
            (Site::new(-1, 0), 1.0),
            (Site::new(0, -1), 1.0),
            (Site::new(1, 0), 0.0),
        ] {
            let block = h.kernel(n0, target).unwrap();
            assert_eq!(block[(0, 1)], Complex::new(expect_ab, 0.0));
        }
        // S: the A component hops to A at n+e₁ with +i, B picks -i.
        let hs = haldane(&g, 1.0).unwrap();
        let block = hs.kernel(n0, Site::new(1, 0)).unwrap();
        assert_eq!(block[(0, 0)], I);
        assert_eq!(block[(1, 1)], -I);
        assert_eq!(block[(0, 1)], ZERO);
    }
}
