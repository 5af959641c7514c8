//! Orthonormal frames of linear subspaces.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative residual below which a vector is treated as dependent.
pub const PIVOT_THRESHOLD: f64 = 1e-10;
const ORTHO_TOL: f64 = 1e-12;

/// An orthonormal basis `E` (stored as the columns of a `d × m` matrix) of an
/// m-dimensional linear subspace of R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrameRepr", into = "FrameRepr")]
pub struct Frame {
    basis: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct FrameRepr {
    ambient_dim: usize,
    columns: Vec<Vec<f64>>,
}

impl TryFrom<FrameRepr> for Frame {
    type Error = Error;
    fn try_from(r: FrameRepr) -> Result<Frame> {
        let cols: Vec<DVector<f64>> = r.columns.into_iter().map(DVector::from_vec).collect();
        if cols.iter().any(|c| c.len() != r.ambient_dim) {
            return Err(Error::Invalid("frame column length differs from ambient_dim".into()));
        }
        Frame::from_columns(&cols)
    }
}

impl From<Frame> for FrameRepr {
    fn from(f: Frame) -> FrameRepr {
        FrameRepr {
            ambient_dim: f.ambient_dim(),
            columns: f.basis.column_iter().map(|c| c.iter().copied().collect()).collect(),
        }
    }
}

fn gram_schmidt_step(basis: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let mut w = v.clone();
    // two passes keep the result orthogonal to machine precision
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&w);
            w.axpy(-c, b, 1.0);
        }
    }
    w
}

/// Orthonormalizes `vectors` (modified Gram–Schmidt with re-orthogonalization).
/// The first output column is parallel to the first input vector.
pub fn orthonormalize(vectors: &[DVector<f64>]) -> Result<Frame> {
    if vectors.is_empty() {
        return Err(Error::Invalid("no vectors to orthonormalize".into()));
    }
    let d = vectors[0].len();
    if vectors.len() > d {
        return Err(Error::RankDeficient {
            column: d,
            residual: 0.0,
        });
    }
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.len(),
            });
        }
        let w = gram_schmidt_step(&basis, v);
        let scale = v.norm().max(f64::MIN_POSITIVE);
        let residual = w.norm();
        if residual <= PIVOT_THRESHOLD * scale || residual == 0.0 {
            return Err(Error::RankDeficient {
                column: i,
                residual: residual / scale,
            });
        }
        basis.push(w / residual);
    }
    Ok(Frame {
        basis: DMatrix::from_columns(&basis),
    })
}

impl Frame {
    /// Wraps already-orthonormal columns, checking norms and inner products to 1e-12.
    pub fn from_columns(columns: &[DVector<f64>]) -> Result<Frame> {
        if columns.is_empty() {
            return Err(Error::Invalid("frame needs at least one column".into()));
        }
        let d = columns[0].len();
        if columns.len() > d || d == 0 {
            return Err(Error::Invalid("frame has more columns than dimensions".into()));
        }
        for (i, a) in columns.iter().enumerate() {
            if a.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: a.len(),
                });
            }
            if (a.norm() - 1.0).abs() > ORTHO_TOL {
                return Err(Error::Invalid(format!("frame column {i} is not a unit vector")));
            }
            for b in &columns[..i] {
                if a.dot(b).abs() > ORTHO_TOL {
                    return Err(Error::Invalid("frame columns are not orthogonal".into()));
                }
            }
        }
        Ok(Frame {
            basis: DMatrix::from_columns(columns),
        })
    }

    /// Standard coordinate frame spanned by `e_i` for the given indices.
    pub fn coordinate(d: usize, indices: &[usize]) -> Result<Frame> {
        let cols: Vec<DVector<f64>> = indices
            .iter()
            .map(|&i| {
                if i >= d {
                    Err(Error::DimensionMismatch { expected: d, got: i + 1 })
                } else {
                    Ok(DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 }))
                }
            })
            .collect::<Result<_>>()?;
        Frame::from_columns(&cols)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Dimension m of the spanned subspace.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.basis.column(i).into_owned()
    }

    pub fn columns(&self) -> Vec<DVector<f64>> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    /// E-coordinates `Eᵀx` of the orthogonal projection of `x`.
    pub fn coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(x)
    }

    /// Coordinates written into `out` without allocating; `x` must have the ambient length.
    pub fn coords_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.ambient_dim();
        let data = self.basis.as_slice();
        for (j, o) in out.iter_mut().enumerate() {
            let col = &data[j * d..(j + 1) * d];
            *o = col.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// Point of R^d with E-coordinates `y`.
    pub fn embed(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.basis * y
    }

    /// Orthogonal projection `P_E x` as a vector of R^d.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        self.embed(&self.coords(x))
    }

    /// Orthonormal frame of `E^⊥`, chosen deterministically by pivoting over the
    /// standard basis.
    pub fn complement(&self) -> Result<Frame> {
        let d = self.ambient_dim();
        let m = self.rank();
        if m >= d {
            return Err(Error::FullDimensional(d));
        }
        let mut basis = self.columns();
        let mut extra = Vec::with_capacity(d - m);
        for _ in m..d {
            let mut best: Option<(f64, DVector<f64>)> = None;
            for i in 0..d {
                let e = DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 });
                let w = gram_schmidt_step(&basis, &e);
                let n = w.norm();
                if best.as_ref().is_none_or(|(bn, _)| n > *bn + 1e-14) {
                    best = Some((n, w));
                }
            }
            let (n, w) = best.expect("d > 0");
            let col = w / n;
            basis.push(col.clone());
            extra.push(col);
        }
        Ok(Frame {
            basis: DMatrix::from_columns(&extra),
        })
    }

    /// Largest entry of `|EᵀE - I|`.
    pub fn gram_deviation(&self) -> f64 {
        let g = self.basis.tr_mul(&self.basis) - DMatrix::identity(self.rank(), self.rank());
        g.amax()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{gaussian_vector, rng_for};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn already_orthogonal() {
        let f = orthonormalize(&[v(&[1.0, 0.0]), v(&[0.0, 2.0])]).unwrap();
        assert_eq!(f.column(0), v(&[1.0, 0.0]));
        assert_eq!(f.column(1), v(&[0.0, 1.0]));
    }

    #[test]
    fn normalization() {
        let f = orthonormalize(&[v(&[1.0, 1.0, 0.0])]).unwrap();
        let s = 0.5f64.sqrt();
        assert!((f.column(0) - v(&[s, s, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn gram_schmidt_by_hand() {
        let f = orthonormalize(&[v(&[1.0, 0.0]), v(&[1.0, 1.0])]).unwrap();
        assert!((f.column(1) - v(&[0.0, 1.0])).amax() < 1e-15);
    }

    #[test]
    fn rank_deficiency() {
        let err = orthonormalize(&[v(&[1.0, 2.0, 3.0]), v(&[2.0, 4.0, 6.0])]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { column: 1, .. }));
    }

    #[test]
    fn complements() {
        let e = Frame::coordinate(3, &[0]).unwrap();
        let c = e.complement().unwrap();
        assert_eq!(c.rank(), 2);
        assert_eq!(c.column(0), v(&[0.0, 1.0, 0.0]));
        assert_eq!(c.column(1), v(&[0.0, 0.0, 1.0]));

        let s = 0.5f64.sqrt();
        let e = orthonormalize(&[v(&[s, s])]).unwrap();
        let c = e.complement().unwrap();
        let w = c.column(0);
        assert!((w[0].abs() - s).abs() < 1e-15 && (w[0] + w[1]).abs() < 1e-15);

        assert!(matches!(
            Frame::coordinate(2, &[0, 1]).unwrap().complement(),
            Err(Error::FullDimensional(2))
        ));
    }

    #[test]
    fn random_complement_gram() {
        let mut rng = rng_for(5, 0);
        for _ in 0..50 {
            let e = orthonormalize(&[gaussian_vector(&mut rng, 5), gaussian_vector(&mut rng, 5)]).unwrap();
            let c = e.complement().unwrap();
            assert_eq!(c.rank(), 3);
            assert!(e.gram_deviation() < 1e-10 && c.gram_deviation() < 1e-10);
            let cross = e.matrix().tr_mul(c.matrix());
            assert!(cross.amax() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = rng_for(9, 0);
        let e = orthonormalize(&[gaussian_vector(&mut rng, 4), gaussian_vector(&mut rng, 4)]).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        let back: Frame = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
