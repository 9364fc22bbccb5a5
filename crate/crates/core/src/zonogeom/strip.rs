//! Strip: the affine preimage of a box, `{x : J x − o ∈ B}`.
//!
//! The measurement phase represents the measurement-consistent polytope in
//! this form; the compact state box is clipped through one single-row strip
//! per state dimension.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::zonogeom::BoxSet;

#[derive(Debug, Clone, PartialEq)]
pub struct Strip<T> {
    map: DMatrix<T>,
    offset: DVector<T>,
    bound: BoxSet<T>,
}

impl<T: Scalar> Strip<T> {
    pub fn new(map: DMatrix<T>, offset: DVector<T>, bound: BoxSet<T>) -> Result<Self> {
        if offset.len() != map.nrows() {
            return Err(Error::dims("strip offset", map.nrows(), offset.len()));
        }
        if bound.dim() != map.nrows() {
            return Err(Error::dims("strip bound", map.nrows(), bound.dim()));
        }
        Ok(Self { map, offset, bound })
    }

    /// Single-row strip pinning coordinate `j` of an `n`-dimensional space
    /// to the interval `[center ± radius]`.
    pub fn axis_aligned(n: usize, j: usize, center: T, radius: T) -> Result<Self> {
        let mut map = DMatrix::zeros(1, n);
        map[(0, j)] = T::one();
        Strip::new(
            map,
            DVector::zeros(1),
            BoxSet::new(DVector::from_element(1, center), DVector::from_element(1, radius))?,
        )
    }

    /// State-space dimension (columns of the map).
    pub fn dim(&self) -> usize {
        self.map.ncols()
    }

    /// Number of affine constraints (rows of the map).
    pub fn rows(&self) -> usize {
        self.map.nrows()
    }

    pub fn map(&self) -> &DMatrix<T> {
        &self.map
    }

    pub fn offset(&self) -> &DVector<T> {
        &self.offset
    }

    pub fn bound(&self) -> &BoxSet<T> {
        &self.bound
    }

    pub fn contains(&self, x: &DVector<T>) -> bool {
        debug_assert_eq!(x.len(), self.dim());
        let img = &self.map * x - &self.offset;
        self.bound.contains(&img)
    }

    pub fn contains_with_tol(&self, x: &DVector<T>, tol: T) -> bool {
        let img = &self.map * x - &self.offset;
        self.bound.contains_with_tol(&img, tol)
    }
}
