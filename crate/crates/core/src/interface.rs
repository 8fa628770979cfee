//! Interface Hamiltonians between two bulk phases, the edge-operator decay
//! check, the gap-filling experiment, the finite-strip counterexample, and
//! the Neumann-series invertibility certificate.
//!
//! Experiments run on periodic geometry: an open sample of a topological
//! phase carries gap-crossing states at the truncation boundary, which
//! would contaminate both the bulk references and the interface counts.

use crate::error::CoreError;
use crate::lattice::{BoundaryMode, LatticeGeometry, Region};
use crate::linalg;
use crate::models::{self, TimeReversalOp};
use crate::operator::HermitianOperator;
use crate::spectral;
use crate::Complex;
use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How the two bulk Hamiltonians are joined along ∂Ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceMode {
    /// `H = 1_Ω H₊ 1_Ω + 1_Ωc H₋ 1_Ωc`: hoppings across ∂Ω are cut.
    CompressionSum,
    /// `H = H₊ + 1_Ωc (H₋ - H₊) 1_Ωc`: the `H₊` hoppings across ∂Ω are
    /// kept, so the edge operator is exactly the retained cross terms.
    Overlay,
}

/// An interface Hamiltonian with its ingredients and edge operator.
#[derive(Debug, Clone)]
pub struct InterfaceSystem {
    pub h: HermitianOperator,
    pub h_plus: HermitianOperator,
    pub h_minus: HermitianOperator,
    pub region: Region,
    pub mode: InterfaceMode,
    /// `E = H - 1_Ω H₊ 1_Ω - 1_Ωc H₋ 1_Ωc`; zero in compression-sum mode.
    pub edge: Mat<Complex>,
    pub fermi_energy: f64,
}

/// Joins two bulk Hamiltonians along ∂Ω.
pub fn build_interface(
    h_plus: &HermitianOperator,
    h_minus: &HermitianOperator,
    region: &Region,
    mode: InterfaceMode,
    fermi_energy: f64,
) -> Result<InterfaceSystem, CoreError> {
    if h_plus.geometry() != h_minus.geometry() {
        return Err(CoreError::GeometryMismatch(
            "interface needs both bulks on one geometry".into(),
        ));
    }
    if region.geometry() != h_plus.geometry() {
        return Err(CoreError::GeometryMismatch(
            "region geometry differs from the Hamiltonians".into(),
        ));
    }
    let mask = region.row_mask();
    let co_mask: Vec<bool> = mask.iter().map(|&b| !b).collect();
    let compression = linalg::mask_both(h_plus.matrix(), &mask);
    let co_compression = linalg::mask_both(h_minus.matrix(), &co_mask);
    let h_mat = match mode {
        InterfaceMode::CompressionSum => &compression + &co_compression,
        InterfaceMode::Overlay => {
            let diff = h_minus.matrix() - h_plus.matrix();
            let overlay = linalg::mask_both(diff.as_ref(), &co_mask);
            h_plus.matrix() + &overlay
        }
    };
    let edge = &h_mat - &compression - &co_compression;
    let h = HermitianOperator::from_matrix(h_mat, h_plus.geometry().clone())?;
    Ok(InterfaceSystem {
        h,
        h_plus: h_plus.clone(),
        h_minus: h_minus.clone(),
        region: region.clone(),
        mode,
        edge,
        fermi_energy,
    })
}

impl InterfaceSystem {
    /// Residual of Θ-invariance of the joined Hamiltonian.
    pub fn theta_residual(&self, theta: &TimeReversalOp) -> f64 {
        theta.commutator_residual(self.h.matrix())
    }
}

/// Row-wise decay data of the edge operator.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeDecayReport {
    /// (distance to ∂Ω, largest row block norm at that distance).
    pub max_by_distance: Vec<(f64, f64)>,
    /// Largest distance with a nonzero row.
    pub support_width: f64,
    /// Least-squares decay rate; `None` when the support is too narrow.
    pub fitted_rate: Option<f64>,
    /// Largest `‖E(x,·)‖ · ν · e^{ν d(x, ∂Ω)}`; ≤ 1 means the supplied
    /// bound holds.
    pub max_bound_ratio: f64,
    pub nu: f64,
}

/// Scans the edge operator against `‖E(x,y)‖ ≤ ν⁻¹ e^{-ν d(x, ∂Ω)}`.
pub fn edge_decay_check(system: &InterfaceSystem, nu: f64) -> EdgeDecayReport {
    let g = system.h.geometry();
    let d = g.orbitals();
    let dists = system.region.boundary_distances();
    let e = system.edge.as_ref();
    let mut rows: Vec<(f64, f64)> = Vec::new(); // (distance, row block max)
    for (i, _) in g.sites().enumerate() {
        let mut row_max = 0.0f64;
        for j in 0..g.site_count() {
            let block = e.submatrix(i * d, j * d, d, d);
            row_max = row_max.max(block.norm_l2());
        }
        rows.push((dists[i], row_max));
    }
    let mut max_by_bin: Vec<(f64, f64)> = Vec::new();
    for &(dist, v) in &rows {
        let bin = dist.round();
        match max_by_bin.iter_mut().find(|(b, _)| *b == bin) {
            Some(entry) => entry.1 = entry.1.max(v),
            None => max_by_bin.push((bin, v)),
        }
    }
    max_by_bin.sort_by(|a, b| a.0.total_cmp(&b.0));
    let support_width = rows
        .iter()
        .filter(|&&(_, v)| v > 1e-14)
        .map(|&(dist, _)| dist)
        .fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = max_by_bin
        .iter()
        .filter(|&&(_, v)| v > 1e-14)
        .map(|&(dist, v)| (dist, v.ln()))
        .collect();
    let fitted_rate = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        (denom.abs() > 1e-12).then(|| -(n * sxy - sx * sy) / denom)
    } else {
        None
    };
    let max_bound_ratio = rows
        .iter()
        .map(|&(dist, v)| v * nu * (nu * dist).exp())
        .fold(0.0, f64::max);
    EdgeDecayReport {
        max_by_distance: max_by_bin,
        support_width,
        fitted_rate,
        max_bound_ratio,
        nu,
    }
}

/// One row of the gap-filling table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapFillingRow {
    pub size: usize,
    pub bulk_gap: f64,
    /// Half-width of the counting window around zero.
    pub window: f64,
    pub in_window_count: usize,
    /// Mean fraction of in-window eigenvector weight within distance 3
    /// of ∂Ω.
    pub edge_weight_mean: f64,
    pub bulk_plus_count: usize,
    pub bulk_minus_count: usize,
    /// In-window count of the same-phase control (`H₊` on both sides in
    /// overlay mode: no interface at all).
    pub control_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapFillingTable {
    pub rows: Vec<GapFillingRow>,
    pub delta_fraction: f64,
    pub s: f64,
    pub mode: InterfaceMode,
    pub pass: bool,
}

/// Region used by the experiments, scaled to the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentRegion {
    /// Disk of radius `size/4` at the origin.
    QuarterDisk,
    /// Half-plane `x₁ ≥ 0`.
    Halfplane,
    /// Strip `|x₂| ≤ L`.
    Strip { half_width: u32 },
}

impl ExperimentRegion {
    pub fn build(&self, g: &LatticeGeometry) -> Result<Region, CoreError> {
        match *self {
            ExperimentRegion::QuarterDisk => {
                Region::disk(g, (0.0, 0.0), g.nx().min(g.ny()) as f64 / 4.0)
            }
            ExperimentRegion::Halfplane => Region::halfplane(g, crate::lattice::Axis::X1, 0),
            ExperimentRegion::Strip { half_width } => Region::strip(g, half_width),
        }
    }
}

/// Diagonalizes the interface between `H₊` and `H₋` on tori of the given
/// sizes and counts eigenvalues in the window `(-δ, δ)` around zero,
/// `δ = delta_fraction · bulk gap`. Bulk references and the same-phase
/// control are reported per size.
pub fn gap_filling_experiment(
    s: f64,
    sizes: &[usize],
    region: ExperimentRegion,
    delta_fraction: f64,
    mode: InterfaceMode,
) -> Result<GapFillingTable, CoreError> {
    let mut rows: Vec<(usize, GapFillingRow)> = sizes
        .par_iter()
        .map(|&size| -> Result<(usize, GapFillingRow), CoreError> {
            let g = crate::lattice::build_lattice(size, size, 4, BoundaryMode::Periodic)?;
            let hp = models::kane_mele_plus(&g, s)?;
            let hm = models::h_minus(&g, s)?;
            let ep = spectral::eigh(&hp)?.eigenvalues;
            let em = spectral::eigh(&hm)?.eigenvalues;
            let gap_p = spectral::spectral_gap_from_eigenvalues(&ep, 0.0);
            let gap_m = spectral::spectral_gap_from_eigenvalues(&em, 0.0);
            if gap_p.in_spectrum || gap_m.in_spectrum {
                return Err(CoreError::Precondition(format!(
                    "bulk not gapped at s = {s} and size {size}"
                )));
            }
            let bulk_gap = gap_p.gap_width.min(gap_m.gap_width);
            let window = delta_fraction * bulk_gap;

            let omega = region.build(&g)?;
            let system = build_interface(&hp, &hm, &omega, mode, 0.0)?;
            let decomp = spectral::eigh(&system.h)?;
            let in_window: Vec<usize> = decomp
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, &e)| e.abs() < window)
                .map(|(i, _)| i)
                .collect();

            // localization of the in-window states near ∂Ω
            let dists = omega.boundary_distances();
            let d = g.orbitals();
            let mut weights = Vec::new();
            for &col in &in_window {
                let v = decomp.vectors.as_ref().col(col);
                let mut near = 0.0f64;
                let mut total = 0.0f64;
                for (i, _) in g.sites().enumerate() {
                    let mut w = 0.0;
                    for k in 0..d {
                        w += v[i * d + k].norm_sqr();
                    }
                    total += w;
                    if dists[i] <= 3.0 {
                        near += w;
                    }
                }
                weights.push(near / total);
            }
            let edge_weight_mean = if weights.is_empty() {
                0.0
            } else {
                weights.iter().sum::<f64>() / weights.len() as f64
            };

            let count_in = |evals: &[f64]| evals.iter().filter(|&&e| e.abs() < window).count();

            // same-phase control: overlay of H₊ on itself is H₊ exactly
            let control = build_interface(&hp, &hp, &omega, InterfaceMode::Overlay, 0.0)?;
            let control_evals = spectral::eigh(&control.h)?.eigenvalues;

            Ok((
                size,
                GapFillingRow {
                    size,
                    bulk_gap,
                    window,
                    in_window_count: in_window.len(),
                    edge_weight_mean,
                    bulk_plus_count: count_in(&ep),
                    bulk_minus_count: count_in(&em),
                    control_count: count_in(&control_evals),
                },
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by_key(|(size, _)| *size);
    let rows: Vec<GapFillingRow> = rows.into_iter().map(|(_, r)| r).collect();
    let counts: Vec<usize> = rows.iter().map(|r| r.in_window_count).collect();
    let pass = rows.iter().all(|r| {
        r.in_window_count >= 1
            && r.bulk_plus_count == 0
            && r.bulk_minus_count == 0
            && r.control_count == 0
            && r.edge_weight_mean >= 0.5
    }) && counts.windows(2).all(|w| w[1] >= w[0]);
    Ok(GapFillingTable {
        rows,
        delta_fraction,
        s,
        mode,
        pass,
    })
}

/// One row of the strip-counterexample table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StripRow {
    pub s: f64,
    pub size: usize,
    pub min_abs_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StripTable {
    pub half_width: u32,
    pub rows: Vec<StripRow>,
    /// Smallest tested `s` keeps a spectral gap, stable across sizes
    /// within 20%.
    pub pass: bool,
}

/// Builds the overlay interface with Ω a strip of the given half-width and
/// reports `min |eig|` per `(s, size)` cell.
pub fn strip_counterexample(
    half_width: u32,
    s_values: &[f64],
    sizes: &[usize],
) -> Result<StripTable, CoreError> {
    let cells: Vec<(f64, usize)> = s_values
        .iter()
        .flat_map(|&s| sizes.iter().map(move |&n| (s, n)))
        .collect();
    let mut rows: Vec<StripRow> = cells
        .par_iter()
        .map(|&(s, size)| -> Result<StripRow, CoreError> {
            let g = crate::lattice::build_lattice(size, size, 4, BoundaryMode::Periodic)?;
            let hp = models::kane_mele_plus(&g, s)?;
            let hm = models::h_minus(&g, s)?;
            let omega = Region::strip(&g, half_width)?;
            let system = build_interface(&hp, &hm, &omega, InterfaceMode::Overlay, 0.0)?;
            let evals = spectral::eigh(&system.h)?.eigenvalues;
            let min_abs = evals.iter().fold(f64::INFINITY, |m, &e| m.min(e.abs()));
            Ok(StripRow { s, size, min_abs_eigenvalue: min_abs })
        })
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.size.cmp(&b.size)));

    let smallest = s_values.iter().copied().fold(f64::INFINITY, f64::min);
    let small_rows: Vec<&StripRow> = rows.iter().filter(|r| r.s == smallest).collect();
    let all_gapped = small_rows.iter().all(|r| r.min_abs_eigenvalue > 1e-6);
    let stable = small_rows.windows(2).all(|w| {
        let (a, b) = (w[0].min_abs_eigenvalue, w[1].min_abs_eigenvalue);
        (a - b).abs() <= 0.2 * a.max(b)
    });
    Ok(StripTable {
        half_width,
        rows,
        pass: all_gapped && stable,
    })
}

/// The strip system is translation invariant along `x₁`, so it block-
/// diagonalizes over the continuous momentum `k₁` into transverse rings of
/// `ny·d` sites. This builds `H_e(k₁)` directly.
pub fn strip_transverse_hamiltonian(
    s: f64,
    half_width: u32,
    ny: usize,
    k1: f64,
) -> Mat<Complex> {
    let bp = models::hopping_blocks(models::ModelKind::KaneMelePlus, s);
    let bm = models::hopping_blocks(models::ModelKind::HMinus, s);
    let d = 4usize;
    let n = ny * d;
    let y_min = -((ny / 2) as i32);
    let idx = |y: i32| -> usize { (y - y_min).rem_euclid(ny as i32) as usize };
    let in_strip = |y: i32| y.unsigned_abs() <= half_width;
    let mut h = Mat::<Complex>::zeros(n, n);
    let mut add = |set: &[(i32, i32, Mat<Complex>)], y: i32, factor: f64, outside_only: bool| {
        let iy = idx(y);
        for (dx, dy, blk) in set {
            let ty = y + dy;
            if outside_only && (in_strip(y) || in_strip(ty)) {
                continue;
            }
            let jy = idx(ty);
            let phase = Complex::from_polar(factor, k1 * *dx as f64);
            for a in 0..d {
                for b in 0..d {
                    h[(iy * d + a, jy * d + b)] += blk[(a, b)] * phase;
                }
            }
        }
    };
    for y in y_min..y_min + ny as i32 {
        // overlay: H₊ everywhere plus (H₋ - H₊) compressed to Ωᶜ × Ωᶜ
        add(&bp, y, 1.0, false);
        add(&bm, y, 1.0, true);
        add(&bp, y, -1.0, true);
    }
    h
}

/// `min |eig H_e(k₁)|` over the momentum circle, by a coarse symmetric scan
/// plus golden-section refinement around the best dip. The spectral dips of
/// the strip system are exponentially narrow in `k₁`, so fixed-size square
/// samples cannot resolve them; this treats `k₁` exactly.
pub fn strip_transverse_gap(
    s: f64,
    half_width: u32,
    ny: usize,
    coarse_samples: usize,
) -> Result<f64, CoreError> {
    let min_abs = |k1: f64| -> Result<f64, CoreError> {
        let h = strip_transverse_hamiltonian(s, half_width, ny, k1);
        let evals = spectral::eigh_matrix(h.as_ref())?.eigenvalues;
        Ok(evals.iter().fold(f64::INFINITY, |m, &e| m.min(e.abs())))
    };
    // Θ maps k₁ to -k₁ with the same spectrum; scan half the circle.
    let ks: Vec<f64> = (0..=coarse_samples)
        .map(|k| std::f64::consts::PI * k as f64 / coarse_samples as f64)
        .collect();
    let values: Vec<f64> = ks
        .par_iter()
        .map(|&k1| min_abs(k1))
        .collect::<Result<Vec<_>, _>>()?;
    let (mut best_k, mut best) = (0.0, f64::INFINITY);
    for (&k1, &v) in ks.iter().zip(values.iter()) {
        if v < best {
            best = v;
            best_k = k1;
        }
    }
    let step = std::f64::consts::PI / coarse_samples as f64;
    let (mut lo, mut hi) = (best_k - step, best_k + step);
    for _ in 0..30 {
        let m1 = lo + 0.382 * (hi - lo);
        let m2 = lo + 0.618 * (hi - lo);
        if min_abs(m1)? < min_abs(m2)? {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(best.min(min_abs(0.5 * (lo + hi))?))
}

/// Invertibility certificate data for the strip interface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeumannReport {
    pub s: f64,
    pub half_width: u32,
    pub size: usize,
    /// `‖s · H₊⁻¹ 1_Ωc Δ 1_Ωc‖`; < 1 certifies invertibility of the
    /// overlay interface.
    pub lhs: f64,
    /// `‖Δ‖` with `Δ = (H₋ - H₊)/s`; bounded by 8.
    pub delta_norm: f64,
    pub certifies: bool,
}

/// Evaluates the Neumann-series bound for the strip interface at one
/// `(s, L, size)` cell.
pub fn neumann_bound_check(
    s: f64,
    half_width: u32,
    size: usize,
) -> Result<NeumannReport, CoreError> {
    if s == 0.0 {
        return Err(CoreError::Precondition("s must be nonzero".into()));
    }
    let g = crate::lattice::build_lattice(size, size, 4, BoundaryMode::Periodic)?;
    let hp = models::kane_mele_plus(&g, s)?;
    let hm = models::h_minus(&g, s)?;
    let gap = spectral::spectral_gap(&hp, 0.0)?;
    if gap.in_spectrum {
        return Err(CoreError::Precondition(format!(
            "H+ is not invertible at s = {s}, size {size}"
        )));
    }
    // Δ is s-independent: (H₋ - H₊)/s
    let delta = faer::Scale(Complex::new(1.0 / s, 0.0)) * (hm.matrix() - hp.matrix());
    let delta_norm = linalg::operator_norm(delta.as_ref())?;
    let omega = Region::strip(&g, half_width)?;
    let co_mask: Vec<bool> = omega.row_mask().iter().map(|&b| !b).collect();
    let masked = linalg::mask_both(delta.as_ref(), &co_mask);
    let solved = linalg::solve(hp.matrix(), masked.as_ref());
    let lhs = s.abs() * linalg::operator_norm(solved.as_ref())?;
    Ok(NeumannReport {
        s,
        half_width,
        size,
        lhs,
        delta_norm,
        certifies: lhs < 1.0,
    })
}
