//! Generic operators built from other operators: identity, polynomials in an
//! operator, rank-one perturbations, and explicit dense matrices.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::index::{apply_power, FinVec, IndexKey, LocalOperator, C64};

impl<T: LocalOperator + ?Sized> LocalOperator for Arc<T> {
    fn image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        (**self).image(key)
    }
    fn adjoint_image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        (**self).adjoint_image(key)
    }
    fn support_growth(&self) -> usize {
        (**self).support_growth()
    }
    fn apply(&self, x: &FinVec) -> Result<FinVec> {
        (**self).apply(x)
    }
    fn adjoint_apply(&self, x: &FinVec) -> Result<FinVec> {
        (**self).adjoint_apply(x)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl LocalOperator for Identity {
    fn image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        Ok(vec![(*key, C64::new(1.0, 0.0))])
    }
    fn adjoint_image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        Ok(vec![(*key, C64::new(1.0, 0.0))])
    }
    fn support_growth(&self) -> usize {
        1
    }
}

/// `p(T) = Σ coeffs[i]·Tⁱ`.
#[derive(Clone)]
pub struct Polynomial {
    base: Arc<dyn LocalOperator>,
    coeffs: Vec<C64>,
}

impl Polynomial {
    pub fn new(base: Arc<dyn LocalOperator>, coeffs: Vec<C64>) -> Self {
        Self { base, coeffs }
    }

    pub fn monomial(base: Arc<dyn LocalOperator>, degree: usize) -> Self {
        let mut coeffs = vec![C64::default(); degree + 1];
        coeffs[degree] = C64::new(1.0, 0.0);
        Self { base, coeffs }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    fn eval(&self, x: &FinVec, adjoint: bool) -> Result<FinVec> {
        let mut acc = FinVec::with_budget(x.max_support());
        let mut power = x.clone();
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                power = apply_power(self.base.as_ref(), &power, 1, adjoint)?;
            }
            let c = if adjoint { c.conj() } else { *c };
            if c != C64::default() {
                acc = acc.axpy(c, &power)?;
            }
        }
        Ok(acc)
    }
}

impl LocalOperator for Polynomial {
    fn image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        let v = self.eval(&FinVec::basis(*key), false)?;
        Ok(v.iter().map(|(k, a)| (*k, *a)).collect())
    }
    fn adjoint_image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        let v = self.eval(&FinVec::basis(*key), true)?;
        Ok(v.iter().map(|(k, a)| (*k, *a)).collect())
    }
    fn support_growth(&self) -> usize {
        let g = self.base.support_growth();
        let deg = self.coeffs.len().saturating_sub(1) as u32;
        g.checked_pow(deg)
            .and_then(|p| p.checked_mul(self.coeffs.len()))
            .unwrap_or(usize::MAX)
    }
    fn apply(&self, x: &FinVec) -> Result<FinVec> {
        self.eval(x, false)
    }
    fn adjoint_apply(&self, x: &FinVec) -> Result<FinVec> {
        self.eval(x, true)
    }
}

/// `A x = B x + scale·⟨x, v⟩·u`.
#[derive(Clone)]
pub struct RankOnePerturbation {
    base: Arc<dyn LocalOperator>,
    u: FinVec,
    v: FinVec,
    scale: C64,
}

impl RankOnePerturbation {
    pub fn new(base: Arc<dyn LocalOperator>, u: FinVec, v: FinVec, scale: C64) -> Self {
        Self { base, u, v, scale }
    }
}

impl LocalOperator for RankOnePerturbation {
    fn image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        let mut out = self.base.image(key)?;
        let c = self.scale * self.v.get(key).conj();
        out.extend(self.u.iter().map(|(k, a)| (*k, c * a)));
        Ok(out)
    }
    fn adjoint_image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        let mut out = self.base.adjoint_image(key)?;
        let c = self.scale.conj() * self.u.get(key).conj();
        out.extend(self.v.iter().map(|(k, a)| (*k, c * a)));
        Ok(out)
    }
    fn support_growth(&self) -> usize {
        self.base
            .support_growth()
            .saturating_add(self.u.support_len().max(self.v.support_len()))
    }
}

/// Explicit matrix acting on `Node(0)..Node(n−1)`.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    matrix: DMatrix<C64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    fn index(&self, key: &IndexKey) -> Result<usize> {
        match key {
            IndexKey::Node(i) if (*i as usize) < self.matrix.ncols() => Ok(*i as usize),
            other => Err(Error::UnknownKey(other.to_string())),
        }
    }
}

impl LocalOperator for DenseOperator {
    fn image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        let j = self.index(key)?;
        Ok(self
            .matrix
            .column(j)
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != C64::default())
            .map(|(i, a)| (IndexKey::Node(i as u32), *a))
            .collect())
    }
    fn adjoint_image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        let i = self.index(key)?;
        Ok(self
            .matrix
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != C64::default())
            .map(|(j, a)| (IndexKey::Node(j as u32), a.conj()))
            .collect())
    }
    fn support_growth(&self) -> usize {
        self.matrix.nrows()
    }
}
