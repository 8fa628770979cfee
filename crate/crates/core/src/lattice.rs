//! Finite truncations of ℤ² with internal orbitals, regions, and the
//! bookkeeping between sites and matrix rows.
//!
//! Coordinates are centered: `x1 ∈ [-⌊nx/2⌋, nx-1-⌊nx/2⌋]` and likewise for
//! `x2`, so flux centers and ball centers live near the origin. Every site
//! carries `d` orbitals; matrix row `site_index * d + orbital`.

use crate::error::CoreError;
use crate::operator::HermitianOperator;
use crate::Complex;
use faer::Mat;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    Open,
    Periodic,
}

/// Coordinate axis of the lattice plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X1,
    X2,
}

/// A lattice site in centered integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site {
    pub x1: i32,
    pub x2: i32,
}

impl Site {
    pub fn new(x1: i32, x2: i32) -> Self {
        Self { x1, x2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    nx: usize,
    ny: usize,
    orbitals: usize,
    boundary: BoundaryMode,
    /// Offset placing (0,0) at the sample center: smallest x1 coordinate.
    x_min: i32,
    y_min: i32,
}

/// Builds a centered `nx × ny` sample with `d` orbitals per site.
pub fn build_lattice(
    nx: usize,
    ny: usize,
    d: usize,
    boundary: BoundaryMode,
) -> Result<LatticeGeometry, CoreError> {
    if nx < 2 || ny < 2 || d == 0 {
        return Err(CoreError::BadLatticeDims { nx, ny, d });
    }
    Ok(LatticeGeometry {
        nx,
        ny,
        orbitals: d,
        boundary,
        x_min: -((nx / 2) as i32),
        y_min: -((ny / 2) as i32),
    })
}

impl LatticeGeometry {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn orbitals(&self) -> usize {
        self.orbitals
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn site_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Total matrix dimension `nx · ny · d`.
    pub fn dim(&self) -> usize {
        self.nx * self.ny * self.orbitals
    }

    /// Inclusive coordinate ranges of the centered box.
    pub fn x1_range(&self) -> (i32, i32) {
        (self.x_min, self.x_min + self.nx as i32 - 1)
    }

    pub fn x2_range(&self) -> (i32, i32) {
        (self.y_min, self.y_min + self.ny as i32 - 1)
    }

    pub fn contains(&self, s: Site) -> bool {
        let (x_lo, x_hi) = self.x1_range();
        let (y_lo, y_hi) = self.x2_range();
        s.x1 >= x_lo && s.x1 <= x_hi && s.x2 >= y_lo && s.x2 <= y_hi
    }

    pub fn site_index(&self, s: Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let ix = (s.x1 - self.x_min) as usize;
        let iy = (s.x2 - self.y_min) as usize;
        Some(iy * self.nx + ix)
    }

    pub fn site_at(&self, index: usize) -> Site {
        debug_assert!(index < self.site_count());
        let ix = index % self.nx;
        let iy = index / self.nx;
        Site::new(self.x_min + ix as i32, self.y_min + iy as i32)
    }

    /// Matrix rows carried by a site, `d` consecutive indices.
    pub fn rows_of(&self, s: Site) -> Option<std::ops::Range<usize>> {
        self.site_index(s).map(|i| i * self.orbitals..(i + 1) * self.orbitals)
    }

    /// Site owning a matrix row.
    pub fn site_of_row(&self, row: usize) -> Site {
        self.site_at(row / self.orbitals)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.site_count()).map(|i| self.site_at(i))
    }

    /// Resolves `site + (dx, dy)`: wraps on the torus, drops outside an open
    /// sample.
    pub fn neighbor(&self, s: Site, dx: i32, dy: i32) -> Option<Site> {
        let raw = Site::new(s.x1 + dx, s.x2 + dy);
        match self.boundary {
            BoundaryMode::Open => self.contains(raw).then_some(raw),
            BoundaryMode::Periodic => {
                let nx = self.nx as i32;
                let ny = self.ny as i32;
                let x1 = self.x_min + (raw.x1 - self.x_min).rem_euclid(nx);
                let x2 = self.y_min + (raw.x2 - self.y_min).rem_euclid(ny);
                Some(Site::new(x1, x2))
            }
        }
    }

    /// Displacement `b - a`, reduced to the minimal image on the torus.
    pub fn displacement(&self, a: Site, b: Site) -> (f64, f64) {
        let mut dx = (b.x1 - a.x1) as f64;
        let mut dy = (b.x2 - a.x2) as f64;
        if self.boundary == BoundaryMode::Periodic {
            let nx = self.nx as f64;
            let ny = self.ny as f64;
            if dx > nx / 2.0 {
                dx -= nx;
            } else if dx < -nx / 2.0 {
                dx += nx;
            }
            if dy > ny / 2.0 {
                dy -= ny;
            } else if dy < -ny / 2.0 {
                dy += ny;
            }
        }
        (dx, dy)
    }

    pub fn distance(&self, a: Site, b: Site) -> f64 {
        let (dx, dy) = self.displacement(a, b);
        dx.hypot(dy)
    }

    /// Distance from a point in the plane to the closest sample edge,
    /// with the sample occupying the box `[x_min - 1/2, x_max + 1/2]²`.
    pub fn edge_margin(&self, p: (f64, f64)) -> f64 {
        let (x_lo, x_hi) = self.x1_range();
        let (y_lo, y_hi) = self.x2_range();
        let left = p.0 - (x_lo as f64 - 0.5);
        let right = (x_hi as f64 + 0.5) - p.0;
        let bottom = p.1 - (y_lo as f64 - 0.5);
        let top = (y_hi as f64 + 0.5) - p.1;
        left.min(right).min(bottom).min(top)
    }
}

/// A set of sites Ω together with its owning geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    geometry: LatticeGeometry,
    membership: Vec<bool>,
}

impl Region {
    pub fn from_predicate(geometry: &LatticeGeometry, pred: impl Fn(Site) -> bool) -> Self {
        let membership = (0..geometry.site_count())
            .map(|i| pred(geometry.site_at(i)))
            .collect();
        Self {
            geometry: geometry.clone(),
            membership,
        }
    }

    pub fn full(geometry: &LatticeGeometry) -> Self {
        Self::from_predicate(geometry, |_| true)
    }

    pub fn empty(geometry: &LatticeGeometry) -> Self {
        Self::from_predicate(geometry, |_| false)
    }

    fn checked(self, what: &str) -> Result<Self, CoreError> {
        let n = self.site_count();
        if n == 0 {
            return Err(CoreError::DegenerateRegion(format!("{what}: region is empty")));
        }
        if n == self.geometry.site_count() {
            return Err(CoreError::DegenerateRegion(format!(
                "{what}: complement is empty"
            )));
        }
        Ok(self)
    }

    /// Half-plane `{x : x_axis >= threshold}`.
    pub fn halfplane(
        geometry: &LatticeGeometry,
        axis: Axis,
        threshold: i32,
    ) -> Result<Self, CoreError> {
        Self::from_predicate(geometry, |s| match axis {
            Axis::X1 => s.x1 >= threshold,
            Axis::X2 => s.x2 >= threshold,
        })
        .checked("halfplane")
    }

    /// Disk `{x : |x - center| <= radius}` (open-sample Euclidean metric;
    /// minimal-image metric on the torus).
    pub fn disk(
        geometry: &LatticeGeometry,
        center: (f64, f64),
        radius: f64,
    ) -> Result<Self, CoreError> {
        let g = geometry.clone();
        Self::from_predicate(geometry, |s| {
            let anchor = Site::new(0, 0);
            let (dx, dy) = g.displacement(anchor, s);
            (dx - center.0).hypot(dy - center.1) <= radius + 1e-12
        })
        .checked("disk")
    }

    /// Strip `{x : |x2| <= half_width}`.
    pub fn strip(geometry: &LatticeGeometry, half_width: u32) -> Result<Self, CoreError> {
        Self::from_predicate(geometry, |s| s.x2.unsigned_abs() <= half_width).checked("strip")
    }

    /// Parses a CLI descriptor: `disk:cx=0,cy=0,r=8`, `halfplane:axis=x1,min=0`,
    /// `strip:l=2`.
    pub fn parse_descriptor(geometry: &LatticeGeometry, desc: &str) -> Result<Self, CoreError> {
        let bad = |m: &str| CoreError::BadDescriptor(desc.to_string(), m.to_string());
        let (kind, rest) = desc.split_once(':').ok_or_else(|| bad("expected `kind:params`"))?;
        let mut fields = std::collections::BTreeMap::new();
        for part in rest.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad("expected comma-separated key=value pairs"))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| -> Result<f64, CoreError> {
            fields
                .get(k)
                .ok_or_else(|| bad(&format!("missing field `{k}`")))?
                .parse::<f64>()
                .map_err(|e| bad(&format!("field `{k}`: {e}")))
        };
        match kind {
            "disk" => Self::disk(geometry, (get("cx")?, get("cy")?), get("r")?),
            "strip" => Self::strip(geometry, get("l")? as u32),
            "halfplane" => {
                let axis = match fields.get("axis").map(String::as_str) {
                    Some("x1") | Some("x") => Axis::X1,
                    Some("x2") | Some("y") => Axis::X2,
                    _ => return Err(bad("field `axis` must be x1 or x2")),
                };
                Self::halfplane(geometry, axis, get("min")? as i32)
            }
            other => Err(bad(&format!("unknown region kind `{other}`"))),
        }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn contains(&self, s: Site) -> bool {
        self.geometry
            .site_index(s)
            .map(|i| self.membership[i])
            .unwrap_or(false)
    }

    pub fn contains_index(&self, site_index: usize) -> bool {
        self.membership[site_index]
    }

    pub fn complement(&self) -> Region {
        Region {
            geometry: self.geometry.clone(),
            membership: self.membership.iter().map(|&b| !b).collect(),
        }
    }

    pub fn site_count(&self) -> usize {
        self.membership.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.site_count() == 0
    }

    /// Per-matrix-row membership mask (each site contributes `d` rows).
    pub fn row_mask(&self) -> Vec<bool> {
        let d = self.geometry.orbitals();
        let mut mask = Vec::with_capacity(self.geometry.dim());
        for &m in &self.membership {
            mask.extend(std::iter::repeat(m).take(d));
        }
        mask
    }

    /// Discrete boundary ∂Ω: sites of Ω with a 4-neighbor in Ωᶜ, together
    /// with sites of Ωᶜ with a 4-neighbor in Ω.
    pub fn boundary_sites(&self) -> Vec<Site> {
        let g = &self.geometry;
        let mut out = Vec::new();
        for (i, s) in g.sites().enumerate() {
            let inside = self.membership[i];
            let crosses = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| {
                g.neighbor(s, dx, dy)
                    .map(|n| self.membership[g.site_index(n).unwrap()] != inside)
                    .unwrap_or(false)
            });
            if crosses {
                out.push(s);
            }
        }
        out
    }

    /// Euclidean distance from `s` to the discrete boundary; 0 on ∂Ω,
    /// infinite when the boundary is empty.
    pub fn distance_to_boundary(&self, s: Site) -> f64 {
        let boundary = self.boundary_sites();
        boundary
            .iter()
            .map(|&b| self.geometry.distance(s, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Boundary distances for every site, indexed like `site_at`.
    pub fn boundary_distances(&self) -> Vec<f64> {
        let boundary = self.boundary_sites();
        self.geometry
            .sites()
            .map(|s| {
                boundary
                    .iter()
                    .map(|&b| self.geometry.distance(s, b))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

/// Diagonal projector 𝟙_Ω ⊗ Id_d as a dense operator.
pub fn indicator_operator(region: &Region) -> HermitianOperator {
    let g = region.geometry();
    let n = g.dim();
    let mask = region.row_mask();
    let mat = Mat::from_fn(n, n, |i, j| {
        if i == j && mask[i] {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    HermitianOperator::from_matrix_unchecked(mat, g.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_match_the_stated_dimensions() {
        let g = build_lattice(4, 4, 1, BoundaryMode::Open).unwrap();
        assert_eq!(g.dim(), 16);
        assert!(g.site_index(Site::new(0, 0)).is_some());

        let g = build_lattice(2, 2, 4, BoundaryMode::Open).unwrap();
        assert_eq!(g.dim(), 16);

        let g = build_lattice(24, 24, 4, BoundaryMode::Open).unwrap();
        assert_eq!(g.dim(), 2304);
    }

    #[test]
    fn rejects_nonpositive_dimensions() {
        assert!(build_lattice(1, 4, 1, BoundaryMode::Open).is_err());
        assert!(build_lattice(4, 1, 1, BoundaryMode::Open).is_err());
        assert!(build_lattice(4, 4, 0, BoundaryMode::Open).is_err());
    }

    #[test]
    fn site_index_maps_are_mutually_inverse() {
        let g = build_lattice(5, 4, 3, BoundaryMode::Open).unwrap();
        for i in 0..g.site_count() {
            assert_eq!(g.site_index(g.site_at(i)), Some(i));
        }
        for s in g.sites() {
            let i = g.site_index(s).unwrap();
            assert_eq!(g.site_at(i), s);
        }
    }

    #[test]
    fn centered_box_contains_origin() {
        for (nx, ny) in [(4, 4), (5, 7), (24, 24)] {
            let g = build_lattice(nx, ny, 2, BoundaryMode::Open).unwrap();
            assert!(g.contains(Site::new(0, 0)));
            let (lo, hi) = g.x1_range();
            assert_eq!(lo, -((nx / 2) as i32));
            assert_eq!((hi - lo + 1) as usize, nx);
        }
    }

    #[test]
    fn zero_radius_disk_is_a_single_site() {
        let g = build_lattice(4, 4, 1, BoundaryMode::Open).unwrap();
        let r = Region::disk(&g, (0.0, 0.0), 0.0).unwrap();
        assert_eq!(r.site_count(), 1);
        assert!(r.contains(Site::new(0, 0)));
    }

    #[test]
    fn full_strip_is_degenerate() {
        let g = build_lattice(6, 6, 1, BoundaryMode::Open).unwrap();
        assert!(matches!(
            Region::strip(&g, 6),
            Err(CoreError::DegenerateRegion(_))
        ));
    }

    #[test]
    fn halfplane_covers_half_the_sites() {
        let g = build_lattice(4, 4, 1, BoundaryMode::Open).unwrap();
        let r = Region::halfplane(&g, Axis::X1, 0).unwrap();
        assert_eq!(r.site_count(), 8);
    }

    #[test]
    fn boundary_distance_matches_geometry() {
        let g = build_lattice(20, 20, 1, BoundaryMode::Open).unwrap();
        let disk = Region::disk(&g, (0.0, 0.0), 8.0).unwrap();
        for s in disk.boundary_sites() {
            assert_eq!(disk.distance_to_boundary(s), 0.0);
        }
        let d = disk.distance_to_boundary(Site::new(0, 0));
        assert!((d - 8.0).abs() <= 1.0, "disk center distance {d}");

        let half = Region::halfplane(&g, Axis::X1, 0).unwrap();
        let d = half.distance_to_boundary(Site::new(5, 0));
        assert!((d - 5.0).abs() <= 1.0, "halfplane distance {d}");
    }

    #[test]
    fn indicator_partition_of_unity() {
        let g = build_lattice(4, 4, 2, BoundaryMode::Open).unwrap();
        let r = Region::disk(&g, (0.5, -0.5), 1.5).unwrap();
        let a = indicator_operator(&r);
        let b = indicator_operator(&r.complement());
        let n = g.dim();
        for i in 0..n {
            for j in 0..n {
                let sum = a.matrix()[(i, j)] + b.matrix()[(i, j)];
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(sum, Complex::new(expect, 0.0));
            }
        }

        let full = indicator_operator(&Region::full(&g));
        let empty = indicator_operator(&Region::empty(&g));
        assert_eq!(full.matrix()[(3, 3)], Complex::new(1.0, 0.0));
        assert_eq!(empty.matrix().norm_max(), 0.0);
    }

    #[test]
    fn descriptor_round_trip() {
        let g = build_lattice(20, 20, 1, BoundaryMode::Open).unwrap();
        let r = Region::parse_descriptor(&g, "disk:cx=0,cy=0,r=8").unwrap();
        assert_eq!(r, Region::disk(&g, (0.0, 0.0), 8.0).unwrap());
        let r = Region::parse_descriptor(&g, "strip:l=2").unwrap();
        assert_eq!(r, Region::strip(&g, 2).unwrap());
        let r = Region::parse_descriptor(&g, "halfplane:axis=x1,min=0").unwrap();
        assert_eq!(r, Region::halfplane(&g, Axis::X1, 0).unwrap());
        assert!(Region::parse_descriptor(&g, "blob:r=1").is_err());
        assert!(Region::parse_descriptor(&g, "disk:cx=0").is_err());
    }

    proptest! {
        #[test]
        fn prop_site_row_bijection(nx in 2usize..9, ny in 2usize..9, d in 1usize..5) {
            let g = build_lattice(nx, ny, d, BoundaryMode::Open).unwrap();
            for row in 0..g.dim() {
                let s = g.site_of_row(row);
                let rows = g.rows_of(s).unwrap();
                prop_assert!(rows.contains(&row));
            }
        }

        #[test]
        fn prop_indicator_idempotent(seed in 0u64..200) {
            let g = build_lattice(4, 4, 2, BoundaryMode::Open).unwrap();
            let r = Region::from_predicate(&g, |s| {
                let h = (s.x1 as i64 * 31 + s.x2 as i64 * 17 + seed as i64) % 3;
                h == 0
            });
            let ind = indicator_operator(&r);
            let m = ind.matrix();
            let sq = m * m;
            let diff = &sq - m;
            prop_assert_eq!(diff.norm_max(), 0.0);
        }

        #[test]
        fn prop_boundary_distance_agrees_with_brute_force(r in 1.0f64..6.0) {
            let g = build_lattice(16, 16, 1, BoundaryMode::Open).unwrap();
            let disk = Region::disk(&g, (0.0, 0.0), r).unwrap();
            let boundary = disk.boundary_sites();
            for s in g.sites() {
                let brute = boundary
                    .iter()
                    .map(|&b| g.distance(s, b))
                    .fold(f64::INFINITY, f64::min);
                prop_assert_eq!(disk.distance_to_boundary(s), brute);
            }
        }
    }
}
