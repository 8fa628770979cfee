//! Dense Hermitian operators tied to a lattice geometry.

use crate::error::CoreError;
use crate::lattice::{LatticeGeometry, Site};
use crate::Complex;
use faer::{Mat, MatRef};
use std::io::{self, Write};

/// Hermiticity tolerance enforced on construction.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// A dense complex Hermitian matrix with site-block kernel access `H(x, y)`.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: Mat<Complex>,
    geometry: LatticeGeometry,
}

impl HermitianOperator {
    /// Wraps a matrix after checking dimensions and Hermiticity.
    pub fn from_matrix(matrix: Mat<Complex>, geometry: LatticeGeometry) -> Result<Self, CoreError> {
        if matrix.nrows() != geometry.dim() || matrix.ncols() != geometry.dim() {
            return Err(CoreError::GeometryMismatch(format!(
                "matrix is {}x{}, geometry dimension is {}",
                matrix.nrows(),
                matrix.ncols(),
                geometry.dim()
            )));
        }
        let op = Self { matrix, geometry };
        let defect = op.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(CoreError::NotHermitian { defect });
        }
        Ok(op)
    }

    /// Wraps a matrix the caller guarantees to be Hermitian of the right size.
    pub(crate) fn from_matrix_unchecked(matrix: Mat<Complex>, geometry: LatticeGeometry) -> Self {
        debug_assert_eq!(matrix.nrows(), geometry.dim());
        Self { matrix, geometry }
    }

    pub fn matrix(&self) -> MatRef<'_, Complex> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<Complex> {
        self.matrix
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    /// The `d × d` block `H(x, y)`, or `None` when a site lies outside.
    pub fn kernel(&self, x: Site, y: Site) -> Option<MatRef<'_, Complex>> {
        let d = self.geometry.orbitals();
        let rx = self.geometry.rows_of(x)?;
        let ry = self.geometry.rows_of(y)?;
        Some(self.matrix.as_ref().submatrix(rx.start, ry.start, d, d))
    }

    /// Largest entry of `|H - H*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = self.matrix.as_ref();
        let mut worst = 0.0f64;
        for j in 0..m.ncols() {
            for i in 0..=j {
                let d = (m[(i, j)] - m[(j, i)].conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Largest site distance carrying a nonzero block (Frobenius > 1e-14).
    pub fn hopping_range(&self) -> f64 {
        let g = &self.geometry;
        let d = g.orbitals();
        let mut range = 0.0f64;
        for (i, x) in g.sites().enumerate() {
            for (j, y) in g.sites().enumerate() {
                let block = self
                    .matrix
                    .as_ref()
                    .submatrix(i * d, j * d, d, d);
                if block.norm_l2() > 1e-14 {
                    range = range.max(g.distance(x, y));
                }
            }
        }
        range
    }

    /// Plain-text export: `nrows ncols` header, then one row per line with
    /// `re im` pairs.
    pub fn export_text(&self, w: &mut impl Write) -> io::Result<()> {
        let m = self.matrix.as_ref();
        writeln!(w, "{} {}", m.nrows(), m.ncols())?;
        for i in 0..m.nrows() {
            let mut line = String::new();
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                line.push_str(&format!("{:.17e} {:.17e} ", z.re, z.im));
            }
            writeln!(w, "{}", line.trim_end())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, BoundaryMode};

    #[test]
    fn rejects_non_hermitian_input() {
        let g = build_lattice(2, 2, 1, BoundaryMode::Open).unwrap();
        let mut m = Mat::<Complex>::zeros(4, 4);
        m[(0, 1)] = Complex::new(1.0, 0.0);
        assert!(matches!(
            HermitianOperator::from_matrix(m, g),
            Err(CoreError::NotHermitian { .. })
        ));
    }

    #[test]
    fn kernel_blocks_address_site_pairs() {
        let g = build_lattice(2, 2, 2, BoundaryMode::Open).unwrap();
        let n = g.dim();
        let m = Mat::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(i as f64, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        let op = HermitianOperator::from_matrix(m, g.clone()).unwrap();
        let s = Site::new(0, 0);
        let block = op.kernel(s, s).unwrap();
        let rows = g.rows_of(s).unwrap();
        assert_eq!(block[(0, 0)].re, rows.start as f64);
        assert!(op.kernel(Site::new(50, 0), s).is_none());
    }
}
