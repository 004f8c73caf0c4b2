//! Dense linear algebra on finite index windows, used as ground truth for
//! the closed-form formulas elsewhere in the crate.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{FinVec, IndexKey, LocalOperator, C64};

pub const DENSE_CAP: usize = 2000;
/// Singular values below this fraction of `σ_max` count as zero.
pub const NULL_TOL: f64 = 1e-8;

/// An operator compressed to `rows × cols`. `frontier[j]` is set when the
/// image of `e_{cols[j]}` leaves `rows`.
#[derive(Clone, Debug)]
pub struct DenseWindow {
    pub rows: Vec<IndexKey>,
    pub cols: Vec<IndexKey>,
    pub matrix: DMatrix<C64>,
    pub frontier: Vec<bool>,
}

impl DenseWindow {
    pub fn row_index(&self) -> BTreeMap<IndexKey, usize> {
        self.rows.iter().enumerate().map(|(i, k)| (*k, i)).collect()
    }

    /// Column `j` as a sparse vector over `rows`.
    pub fn column_vec(&self, j: usize) -> Result<FinVec> {
        FinVec::from_entries(
            self.rows
                .iter()
                .zip(self.matrix.column(j).iter())
                .map(|(k, a)| (*k, *a)),
        )
    }
}

fn check_cap(n: usize) -> Result<()> {
    if n > DENSE_CAP {
        Err(Error::DenseTooLarge(n))
    } else {
        Ok(())
    }
}

fn dedup(keys: &[IndexKey]) -> Vec<IndexKey> {
    let mut seen = BTreeSet::new();
    keys.iter().filter(|k| seen.insert(**k)).copied().collect()
}

/// `M[i][j] = ⟨op(e_{keys[j]}), e_{keys[i]}⟩`.
pub fn densify(op: &dyn LocalOperator, keys: &[IndexKey]) -> Result<DenseWindow> {
    let keys = dedup(keys);
    check_cap(keys.len())?;
    let pos: BTreeMap<IndexKey, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let n = keys.len();
    let mut matrix = DMatrix::zeros(n, n);
    let mut frontier = vec![false; n];
    for (j, k) in keys.iter().enumerate() {
        for (r, a) in op.image(k)? {
            match pos.get(&r) {
                Some(&i) => matrix[(i, j)] += a,
                None if a != C64::default() => frontier[j] = true,
                None => {}
            }
        }
    }
    Ok(DenseWindow {
        rows: keys.clone(),
        cols: keys,
        matrix,
        frontier,
    })
}

/// Like [`densify`] but the rows are `keys` followed by every other key the
/// images reach, so each column is the full image and `M*M` is exact.
pub fn densify_closed(op: &dyn LocalOperator, keys: &[IndexKey]) -> Result<DenseWindow> {
    densify_closed_multi(&[op], keys).map(|mut v| v.remove(0))
}

/// Closed windows of several operators sharing one row set.
pub fn densify_closed_multi(
    ops: &[&dyn LocalOperator],
    keys: &[IndexKey],
) -> Result<Vec<DenseWindow>> {
    let cols = dedup(keys);
    check_cap(cols.len())?;
    let images: Vec<Vec<Vec<(IndexKey, C64)>>> = ops
        .iter()
        .map(|op| cols.iter().map(|k| op.image(k)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut rows = cols.clone();
    let mut seen: BTreeSet<IndexKey> = cols.iter().copied().collect();
    let mut extra = BTreeSet::new();
    for img in images.iter().flatten().flatten() {
        if !seen.contains(&img.0) {
            extra.insert(img.0);
        }
    }
    for k in extra {
        seen.insert(k);
        rows.push(k);
    }
    check_cap(rows.len())?;
    let pos: BTreeMap<IndexKey, usize> = rows.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    Ok(images
        .into_iter()
        .map(|img| {
            let mut matrix = DMatrix::zeros(rows.len(), cols.len());
            for (j, col) in img.into_iter().enumerate() {
                for (r, a) in col {
                    matrix[(pos[&r], j)] += a;
                }
            }
            DenseWindow {
                rows: rows.clone(),
                cols: cols.clone(),
                matrix,
                frontier: vec![false; cols.len()],
            }
        })
        .collect())
}

/// Coordinates of `f` on `keys`; entries off the window are dropped.
pub fn to_dense(f: &FinVec, keys: &[IndexKey]) -> DVector<C64> {
    DVector::from_iterator(keys.len(), keys.iter().map(|k| f.get(k)))
}

pub fn from_dense(v: &DVector<C64>, keys: &[IndexKey]) -> Result<FinVec> {
    FinVec::from_entries(keys.iter().zip(v.iter()).map(|(k, a)| (*k, *a)))
}

/// Full SVD factors `(U, σ, V)` with `V` square, padding short matrices
/// with zero rows so that the null space is represented.
fn full_svd(m: &DMatrix<C64>) -> (DMatrix<C64>, DVector<f64>, DMatrix<C64>) {
    let (r, c) = m.shape();
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V*").adjoint();
    (u, svd.singular_values, v)
}

/// `‖M − UΣV*‖` for the thin SVD of `M`.
pub fn svd_reconstruction_error(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V*");
    let s = DMatrix::from_diagonal(&svd.singular_values.map(|x| C64::new(x, 0.0)));
    op_norm(&(m - u * s * vt))
}

pub fn singular_values(m: &DMatrix<C64>) -> DVector<f64> {
    if m.is_empty() {
        return DVector::zeros(0);
    }
    m.clone().svd(false, false).singular_values
}

/// Largest singular value.
pub fn op_norm(m: &DMatrix<C64>) -> f64 {
    singular_values(m).iter().copied().fold(0.0, f64::max)
}

/// Orthonormal basis (as columns) of `N(M)`; singular values below
/// `tol·σ_max` count as zero.
pub fn null_space(m: &DMatrix<C64>, tol: f64) -> DMatrix<C64> {
    let c = m.ncols();
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    let (_, s, v) = full_svd(m);
    let smax = s.iter().copied().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..c)
        .filter(|&j| smax == 0.0 || s.get(j).copied().unwrap_or(0.0) < tol * smax)
        .collect();
    DMatrix::from_fn(c, cols.len(), |i, j| v[(i, cols[j])])
}

/// Orthonormal basis of the column space of `M`.
pub fn range_basis(m: &DMatrix<C64>, tol: f64) -> DMatrix<C64> {
    if m.is_empty() {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&j| smax > 0.0 && svd.singular_values[j] >= tol * smax)
        .collect();
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| u[(i, cols[j])])
}

/// Sine of the largest principal angle between the column spans of the
/// orthonormal `q1` and `q2`, taken in both directions; `1` on a dimension
/// mismatch.
pub fn subspace_distance(q1: &DMatrix<C64>, q2: &DMatrix<C64>) -> f64 {
    if q1.ncols() != q2.ncols() || q1.nrows() != q2.nrows() {
        return 1.0;
    }
    if q1.ncols() == 0 {
        return 0.0;
    }
    let one_way = |a: &DMatrix<C64>, b: &DMatrix<C64>| op_norm(&(a - b * (b.adjoint() * a)));
    one_way(q1, q2).max(one_way(q2, q1))
}

/// `M(M*M)⁻¹`.
pub fn dense_cauchy_dual(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let gram = m.adjoint() * m;
    let inv = gram.try_inverse().ok_or(Error::Singular)?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(m * inv)
}

pub fn dense_cauchy_dual_window(w: &DenseWindow) -> Result<DenseWindow> {
    Ok(DenseWindow {
        rows: w.rows.clone(),
        cols: w.cols.clone(),
        matrix: dense_cauchy_dual(&w.matrix)?,
        frontier: w.frontier.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub max_deviation: f64,
    pub compared_columns: usize,
    pub frontier_columns: usize,
    pub pass: bool,
}

/// Entrywise comparison of two windows over the same columns, skipping
/// columns flagged as frontier in either. Rows are matched by key; a key
/// present in only one window compares against zero.
pub fn compare_windows(a: &DenseWindow, b: &DenseWindow, tol: f64) -> Result<CompareReport> {
    if a.cols != b.cols {
        return Err(Error::Dimension {
            expected: a.cols.len(),
            got: b.cols.len(),
        });
    }
    let mut max_deviation = 0.0f64;
    let mut compared = 0;
    let mut frontier = 0;
    for j in 0..a.cols.len() {
        if a.frontier[j] || b.frontier[j] {
            frontier += 1;
            continue;
        }
        compared += 1;
        max_deviation = max_deviation.max(a.column_vec(j)?.max_abs_diff(&b.column_vec(j)?));
    }
    Ok(CompareReport {
        max_deviation,
        compared_columns: compared,
        frontier_columns: frontier,
        pass: max_deviation <= tol,
    })
}

/// Compares two operators on the columns `keys` using their full images.
pub fn compare(
    a: &dyn LocalOperator,
    b: &dyn LocalOperator,
    keys: &[IndexKey],
    tol: f64,
) -> Result<CompareReport> {
    let w = densify_closed_multi(&[a, b], keys)?;
    compare_windows(&w[0], &w[1], tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtree::{DirectedTreeSystem, TreeSpec};
    use crate::linop::Identity;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn unilateral() -> DirectedTreeSystem {
        DirectedTreeSystem::from_spec(&TreeSpec::path(true, &[], r(1.0))).unwrap()
    }

    fn ytree() -> DirectedTreeSystem {
        DirectedTreeSystem::from_json(
            r#"{"rooted": true, "vertices": [{"id": "root"},
                {"id": "a", "parent": "root", "weight": "3/5"},
                {"id": "b", "parent": "root", "weight": "4/5"}], "extension": {"weight": 1}}"#,
        )
        .unwrap()
    }

    #[test]
    fn identity_and_shift_densify() {
        let keys: Vec<IndexKey> = unilateral().keys_to_depth(4);
        let id = densify(&Identity, &keys).unwrap();
        assert_eq!(id.matrix, DMatrix::identity(5, 5));
        let s = densify(&unilateral(), &keys).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j + 1 { r(1.0) } else { r(0.0) };
                assert_eq!(s.matrix[(i, j)], expect);
            }
        }
        assert_eq!(s.frontier, vec![false, false, false, false, true]);
    }

    #[test]
    fn ytree_densify_entries() {
        let t = ytree();
        let keys = t.keys_to_depth(2);
        let w = densify(&t, &keys).unwrap();
        let pos = w.row_index();
        for v in &keys {
            if let Some(p) = t.parent(v).unwrap() {
                if pos.contains_key(&p) {
                    assert_eq!(w.matrix[(pos[v], pos[&p])], t.weight(v).unwrap().unwrap());
                }
            }
        }
    }

    #[test]
    fn null_spaces() {
        let id = DMatrix::<C64>::identity(4, 4);
        assert_eq!(null_space(&id, NULL_TOL).ncols(), 0);
        let z = DMatrix::<C64>::zeros(3, 3);
        assert_eq!(null_space(&z, NULL_TOL).ncols(), 3);
        // S* on the Y-tree to depth 2: kernel is e_root and the branching atom.
        let t = ytree();
        let keys = t.keys_to_depth(2);
        let w = densify(&t, &keys).unwrap();
        let ns = null_space(&w.matrix.adjoint(), NULL_TOL);
        // The truncation also kills the depth-2 frontier row; compress to depth 1.
        let inner: Vec<usize> = (0..keys.len())
            .filter(|&i| t.level(&keys[i]).unwrap() <= 1)
            .collect();
        let sub = DMatrix::from_fn(inner.len(), inner.len(), |i, j| {
            w.matrix.adjoint()[(inner[i], inner[j])]
        });
        let ns_inner = null_space(&sub, NULL_TOL);
        assert_eq!(ns_inner.ncols(), 2);
        assert!(ns.ncols() >= 2);
    }

    #[test]
    fn cauchy_duals() {
        let u = DMatrix::from_row_slice(2, 2, &[r(0.0), r(1.0), C64::new(0.0, 1.0), r(0.0)]);
        assert!((dense_cauchy_dual(&u).unwrap() - &u).norm() < 1e-15);
        let two = DMatrix::<C64>::identity(3, 3) * r(2.0);
        let d = dense_cauchy_dual(&two).unwrap();
        assert!((d - DMatrix::<C64>::identity(3, 3) * r(0.5)).norm() < 1e-15);
        assert_eq!(dense_cauchy_dual(&DMatrix::zeros(2, 2)), Err(Error::Singular));
    }

    #[test]
    fn norms() {
        assert!((op_norm(&DMatrix::<C64>::identity(3, 3)) - 1.0).abs() < 1e-14);
        assert!((op_norm(&(DMatrix::<C64>::identity(3, 3) * r(3.0))) - 3.0).abs() < 1e-14);
        let u = DVector::from_vec(vec![r(1.0), C64::new(0.0, 2.0)]);
        let v = DVector::from_vec(vec![r(3.0), r(0.0), r(4.0)]);
        let uv = &u * v.adjoint();
        assert!((op_norm(&uv) - 5.0f64.sqrt() * 5.0).abs() < 1e-12);
        assert!(svd_reconstruction_error(&uv) <= 1e-10 * op_norm(&uv));
    }

    #[test]
    fn comparisons() {
        let t = ytree();
        let keys = t.keys_to_depth(3);
        let rep = compare(&t, &t, &keys, 1e-12).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
        assert!(rep.pass);
        let mut spec = t.to_spec();
        spec.vertices[1].weight = Some(crate::scalar::Scalar::Number(0.6 + 1e-3));
        let p = DirectedTreeSystem::from_spec(&spec).unwrap();
        let rep = compare(&t, &p, &keys, 1e-12).unwrap();
        assert!((rep.max_deviation - 1e-3).abs() < 1e-12);
        assert!(!rep.pass);
    }

    #[test]
    fn closed_window_gives_exact_dual() {
        let t = ytree();
        let keys = t.keys_to_depth(3);
        let w = densify_closed(&t, &keys).unwrap();
        let d = dense_cauchy_dual_window(&w).unwrap();
        let formula = densify_closed(&t.cauchy_dual_shift().unwrap(), &keys).unwrap();
        assert!(compare_windows(&d, &formula, 1e-12).unwrap().pass);
    }

    #[test]
    fn principal_angles() {
        let q1 = DMatrix::from_column_slice(3, 1, &[r(1.0), r(0.0), r(0.0)]);
        let q2 = DMatrix::from_column_slice(3, 1, &[C64::new(0.0, 1.0), r(0.0), r(0.0)]);
        assert!(subspace_distance(&q1, &q2) < 1e-15);
        let q3 = DMatrix::from_column_slice(3, 1, &[r(0.0), r(1.0), r(0.0)]);
        assert!((subspace_distance(&q1, &q3) - 1.0).abs() < 1e-15);
    }
}
