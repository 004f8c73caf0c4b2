//! Generalized multipliers: finitely supported `ℤ`-indexed families of
//! linear maps on `E`, acting on model coefficients by Cauchy convolution.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dtree::DirectedTreeSystem;
use crate::error::{Error, Result};
use crate::index::{apply_power, FinVec, IndexKey, LocalOperator, C64};
use crate::laurent::{CheckReport, LaurentWindow, ModelContext};
use crate::oracle;
use crate::scalar::Scalar;

/// Largest symmetric window tried when a computation needs exact windows.
pub const MAX_EXACT_WINDOW: usize = 64;

/// `n ↦ φ̂(n)`, a `dim × dim` matrix in E-basis coordinates; zero outside
/// the stored entries.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierSeq {
    dim: usize,
    entries: BTreeMap<i64, DMatrix<C64>>,
}

/// multiplier-spec document: either full matrices or scalar multiples of
/// the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MultiplierSpec {
    Matrix {
        #[serde(rename = "dimE")]
        dim_e: usize,
        entries: Vec<MatrixEntry>,
    },
    Scalar {
        entries: Vec<ScalarEntry>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixEntry {
    pub n: i64,
    /// Row-major `[re, im]` pairs.
    pub matrix: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarEntry {
    pub n: i64,
    pub value: Scalar,
}

fn is_zero_matrix(m: &DMatrix<C64>) -> bool {
    m.iter().all(|z| *z == C64::default())
}

impl MultiplierSeq {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// `c·χ_n I`.
    pub fn delta(dim: usize, n: i64, c: C64) -> Self {
        let mut s = Self::zero(dim);
        s.set(n, DMatrix::identity(dim, dim) * c);
        s
    }

    pub fn identity(dim: usize) -> Self {
        Self::delta(dim, 0, C64::new(1.0, 0.0))
    }

    /// `Σ c_n χ_n I`.
    pub fn scalar(dim: usize, values: &[(i64, C64)]) -> Self {
        let mut s = Self::zero(dim);
        for &(n, c) in values {
            let m = s.get(n) + DMatrix::identity(dim, dim) * c;
            s.set(n, m);
        }
        s
    }

    pub fn from_spec(spec: &MultiplierSpec, dim: usize) -> Result<Self> {
        let mut s = Self::zero(dim);
        match spec {
            MultiplierSpec::Matrix { dim_e, entries } => {
                if *dim_e != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        got: *dim_e,
                    });
                }
                for e in entries {
                    if e.matrix.len() != dim * dim {
                        return Err(Error::Dimension {
                            expected: dim * dim,
                            got: e.matrix.len(),
                        });
                    }
                    let m = DMatrix::from_row_iterator(
                        dim,
                        dim,
                        e.matrix.iter().map(|[re, im]| C64::new(*re, *im)),
                    );
                    s.set(e.n, s.get(e.n) + m);
                }
            }
            MultiplierSpec::Scalar { entries } => {
                for e in entries {
                    let c = e.value.value().map_err(|m| Error::Spec {
                        field: format!("entries[n={}].value", e.n),
                        message: m,
                    })?;
                    s.set(e.n, s.get(e.n) + DMatrix::identity(dim, dim) * c);
                }
            }
        }
        Ok(s)
    }

    pub fn from_json(text: &str, dim: usize) -> Result<Self> {
        let spec: MultiplierSpec = serde_json::from_str(text).map_err(|e| Error::Spec {
            field: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        Self::from_spec(&spec, dim)
    }

    pub fn to_spec(&self) -> MultiplierSpec {
        MultiplierSpec::Matrix {
            dim_e: self.dim,
            entries: self
                .entries
                .iter()
                .map(|(n, m)| MatrixEntry {
                    n: *n,
                    matrix: m.transpose().iter().map(|z| [z.re, z.im]).collect(),
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set(&mut self, n: i64, m: DMatrix<C64>) {
        assert_eq!(m.shape(), (self.dim, self.dim), "multiplier entry shape");
        if is_zero_matrix(&m) {
            self.entries.remove(&n);
        } else {
            self.entries.insert(n, m);
        }
    }

    pub fn get(&self, n: i64) -> DMatrix<C64> {
        self.entries
            .get(&n)
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.dim, self.dim))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &DMatrix<C64>)> {
        self.entries.iter().map(|(n, m)| (*n, m))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(min, max)` of the support, `None` when zero.
    pub fn support(&self) -> Option<(i64, i64)> {
        Some((*self.entries.keys().next()?, *self.entries.keys().next_back()?))
    }

    /// `max |n|` over the support.
    pub fn support_radius(&self) -> usize {
        self.entries.keys().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let mut out = self.clone();
        for (n, m) in other.iter() {
            out.set(n, out.get(n) + m);
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(self.dim);
        for (n, m) in self.iter() {
            out.set(n, m * c);
        }
        out
    }

    /// `n ↦ p(n)·φ̂(n)` for a scalar sequence `p` (dim 1).
    pub fn smooth(&self, p: &Self) -> Result<Self> {
        if p.dim != 1 {
            return Err(Error::Dimension {
                expected: 1,
                got: p.dim,
            });
        }
        let mut out = Self::zero(self.dim);
        for (n, m) in self.iter() {
            out.set(n, m * p.get(n)[(0, 0)]);
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let keys: BTreeSet<i64> = self.entries.keys().chain(other.entries.keys()).copied().collect();
        keys.into_iter()
            .map(|n| {
                (self.get(n) - other.get(n))
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            Err(Error::Dimension {
                expected: self.dim,
                got: other.dim,
            })
        } else {
            Ok(())
        }
    }
}

/// `(a*b)(n) = Σ_k a(k)·b(n−k)`.
pub fn convolve(a: &MultiplierSeq, b: &MultiplierSeq) -> Result<MultiplierSeq> {
    a.same_dim(b)?;
    let mut out = MultiplierSeq::zero(a.dim);
    let mut acc: BTreeMap<i64, DMatrix<C64>> = BTreeMap::new();
    for (k, ak) in a.iter() {
        for (j, bj) in b.iter() {
            let slot = acc
                .entry(k + j)
                .or_insert_with(|| DMatrix::zeros(a.dim, a.dim));
            *slot += ak * bj;
        }
    }
    for (n, m) in acc {
        out.set(n, m);
    }
    Ok(out)
}

/// `(a * f̂)(n)` on an index range, with a flag on every index whose sum
/// reaches outside the known part of `f̂`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffWindow {
    pub lo: i64,
    pub coeffs: Vec<DVector<C64>>,
    pub contaminated: Vec<bool>,
    pub exact_negative: bool,
    pub exact_positive: bool,
    dim: usize,
}

impl CoeffWindow {
    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi()
    }

    /// The value at `n`; zero beyond an exact side.
    pub fn get(&self, n: i64) -> Result<DVector<C64>> {
        if n < self.lo || n > self.hi() {
            let exact = if n < self.lo {
                self.exact_negative
            } else {
                self.exact_positive
            };
            return if exact {
                Ok(DVector::zeros(self.dim))
            } else {
                Err(Error::Contaminated(n))
            };
        }
        let i = (n - self.lo) as usize;
        if self.contaminated[i] {
            Err(Error::Contaminated(n))
        } else {
            Ok(self.coeffs[i].clone())
        }
    }

    pub fn is_clean(&self) -> bool {
        self.contaminated.iter().all(|c| !c)
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

pub fn convolve_window(a: &MultiplierSeq, f: &LaurentWindow) -> Result<CoeffWindow> {
    if f.dim() != a.dim {
        return Err(Error::Dimension {
            expected: a.dim,
            got: f.dim(),
        });
    }
    let (lo, hi) = match a.support() {
        Some((amin, amax)) => (f.lo() + amin, f.hi() + amax),
        None => (f.lo(), f.hi()),
    };
    let mut coeffs = Vec::new();
    let mut contaminated = Vec::new();
    for n in lo..=hi {
        let mut c = DVector::zeros(a.dim);
        let mut dirty = false;
        for (k, ak) in a.iter() {
            match f.known_coeff(n - k) {
                Ok(v) => c += ak * v,
                Err(_) => dirty = true,
            }
        }
        coeffs.push(c);
        contaminated.push(dirty);
    }
    Ok(CoeffWindow {
        lo,
        coeffs,
        contaminated,
        exact_negative: f.exact_negative,
        exact_positive: f.exact_positive,
        dim: a.dim,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultResult {
    pub window: LaurentWindow,
    /// Largest coefficient mismatch between `U g` and `a * f̂`.
    pub residual: f64,
}

fn nonzero(v: FinVec, out: &mut Vec<FinVec>) {
    if !v.is_zero() {
        out.push(v);
    }
}

/// `M_a f`: the `g` with `ĝ = a * f̂`, found by least squares over
/// `{Tⁿe} ∪ {T′*ᵐe}` with `e` ranging over the atoms of `E`. Fails with
/// [`Error::Domain`] when no such `g` reproduces the target.
pub fn mult_apply(ctx: &ModelContext, a: &MultiplierSeq, f: &LaurentWindow) -> Result<MultResult> {
    let target = convolve_window(a, f)?;
    let (lo, hi) = (target.lo, target.hi());
    let mut family = Vec::new();
    for e in ctx.e().atoms() {
        let mut v = e.clone();
        family.push(v.clone());
        for _ in 0..(hi.max(0) + 1) {
            v = ctx.apply_t(&v)?;
            nonzero(v.clone(), &mut family);
        }
        let mut v = e.clone();
        for _ in 0..((-lo).max(0) + 1) {
            v = ctx.apply_left_inverse(&v)?;
            if v.is_zero() {
                break;
            }
            family.push(v.clone());
        }
    }
    let rows_lo = lo - 1;
    let rows_hi = hi + 1;
    let fit_minus = (-rows_lo).max(1) as usize;
    let fit_plus = rows_hi.max(0) as usize;
    let mut rows: Vec<(i64, DVector<C64>)> = Vec::new();
    for n in rows_lo..=rows_hi {
        if let Ok(v) = target.get(n) {
            rows.push((n, v));
        }
    }
    if rows.is_empty() {
        return Err(Error::Contaminated(lo));
    }
    let dim = ctx.dim();
    let windows: Vec<LaurentWindow> = family
        .iter()
        .map(|v| ctx.analytic_model(v, fit_minus, fit_plus))
        .collect::<Result<_>>()?;
    let mut m = DMatrix::<C64>::zeros(rows.len() * dim, family.len());
    let mut b = DVector::<C64>::zeros(rows.len() * dim);
    for (r, (n, v)) in rows.iter().enumerate() {
        for i in 0..dim {
            b[r * dim + i] = v[i];
            for (j, w) in windows.iter().enumerate() {
                m[(r * dim + i, j)] = w.coeff(*n).unwrap()[i];
            }
        }
    }
    let g = if family.is_empty() {
        FinVec::zero()
    } else {
        let svd = m.svd(true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let c = svd
            .solve(&b, smax * 1e-12)
            .map_err(|_| Error::Singular)?;
        let mut g = FinVec::zero();
        for (v, cj) in family.iter().zip(c.iter()) {
            g = g.axpy(*cj, v)?;
        }
        g
    };
    // Compare on the fitted rows, then keep widening while either side of
    // the reconstruction is still uncertified.
    let mut n_minus = fit_minus;
    let mut n_plus = fit_plus;
    let window = loop {
        let w = ctx.analytic_model(&g, n_minus, n_plus)?;
        let more_neg = !w.exact_negative && target.exact_negative && n_minus < MAX_EXACT_WINDOW;
        let more_pos = !w.exact_positive && target.exact_positive && n_plus < MAX_EXACT_WINDOW;
        if !more_neg && !more_pos {
            break w;
        }
        if more_neg {
            n_minus *= 2;
        }
        if more_pos {
            n_plus = (n_plus * 2).max(1);
        }
    };
    let mut residual = 0.0f64;
    for n in window.indices() {
        if let Ok(t) = target.get(n) {
            residual = residual.max((window.coeff(n).unwrap() - t).norm());
        }
    }
    for (n, t) in &rows {
        if window.coeff(*n).is_none() {
            residual = residual.max(t.norm());
        }
    }
    let scale = target.max_norm().max(f.max_coeff_norm()).max(1.0);
    if residual > ctx.tol() * scale {
        return Err(Error::Domain { residual });
    }
    Ok(MultResult { window, residual })
}

/// `φ̂_A(m)` for `lo ≤ m ≤ hi`: column `j` is `f̂(m)` of `A e_j`.
pub fn multiplier_of_operator(
    ctx: &ModelContext,
    op: &dyn LocalOperator,
    lo: i64,
    hi: i64,
) -> Result<MultiplierSeq> {
    let dim = ctx.dim();
    let n_minus = (-lo).max(0) as usize;
    let n_plus = hi.max(0) as usize;
    let mut cols = Vec::with_capacity(dim);
    for e in ctx.e().atoms() {
        cols.push(ctx.analytic_model(&op.apply(e)?, n_minus, n_plus)?);
    }
    let mut out = MultiplierSeq::zero(dim);
    for m in lo..=hi {
        let mat = DMatrix::from_fn(dim, dim, |i, j| cols[j].coeff(m).unwrap()[i]);
        out.set(m, mat);
    }
    Ok(out)
}

/// `φ̂_A` in full, requiring every `A e_j` to have an exact window.
pub fn multiplier_of_operator_exact(ctx: &ModelContext, op: &dyn LocalOperator) -> Result<MultiplierSeq> {
    let dim = ctx.dim();
    let mut cols = Vec::with_capacity(dim);
    for e in ctx.e().atoms() {
        let w = ctx.exact_model(&op.apply(e)?, MAX_EXACT_WINDOW)?;
        if !w.is_exact() {
            return Err(Error::InexactWindow);
        }
        cols.push(w);
    }
    let lo = cols.iter().map(|w| w.lo()).min().unwrap_or(0);
    let hi = cols.iter().map(|w| w.hi()).max().unwrap_or(0);
    let mut out = MultiplierSeq::zero(dim);
    for m in lo..=hi {
        let mat = DMatrix::from_fn(dim, dim, |i, j| {
            cols[j].coeff(m).map_or(C64::default(), |c| c[i])
        });
        out.set(m, mat);
    }
    Ok(out)
}

/// Up to `count` nonzero vectors `Tⁿe`, `T′*ᵐe` (`e` an atom), interleaved
/// by power.
pub fn spanning_vectors(ctx: &ModelContext, count: usize) -> Result<Vec<FinVec>> {
    let mut out = Vec::new();
    let mut up: Vec<FinVec> = ctx.e().atoms().to_vec();
    let mut down: Vec<FinVec> = up.clone();
    for s in 0..=4 * count {
        for i in 0..up.len() {
            if out.len() >= count {
                return Ok(out);
            }
            if s > 0 {
                up[i] = ctx.apply_t(&up[i])?;
                down[i] = ctx.apply_left_inverse(&down[i])?;
            }
            nonzero(up[i].clone(), &mut out);
            if s > 0 && out.len() < count {
                nonzero(down[i].clone(), &mut out);
            }
        }
    }
    Ok(out)
}

/// Checks `(φ̂_A * f̂)(n) = (Af)^(n)` over the test vectors, after verifying
/// that `A` commutes with `T` on them and that the hypotheses on `E` hold.
pub fn check_commutant(
    ctx: &ModelContext,
    op: &dyn LocalOperator,
    tests: &[FinVec],
    hyp_depth: usize,
) -> Result<CheckReport> {
    let tol = ctx.tol();
    let mut probes: Vec<(String, FinVec)> = tests
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("test vector {i}"), v.clone()))
        .collect();
    let mut keys = BTreeSet::new();
    for (i, e) in ctx.e().atoms().iter().enumerate() {
        probes.push((format!("atom {i}"), e.clone()));
        keys.extend(e.keys().copied());
    }
    for v in tests {
        keys.extend(v.keys().copied());
    }
    probes.extend(keys.into_iter().map(|k| (format!("e[{k}]"), FinVec::basis(k))));
    for (label, v) in &probes {
        let at = op.apply(&ctx.apply_t(v)?)?;
        let ta = ctx.apply_t(&op.apply(v)?)?;
        let violation = at.distance(&ta);
        if violation > tol * at.norm().max(ta.norm()).max(1.0) {
            return Err(Error::NonCommuting {
                witness: label.clone(),
                violation,
            });
        }
    }
    for rep in [ctx.check_prep(hyp_depth)?, ctx.check_incl(hyp_depth)?] {
        if !rep.pass {
            return Err(Error::Hypothesis {
                check: rep.check,
                max_violation: rep.max_violation,
            });
        }
    }
    let symbol = multiplier_of_operator_exact(ctx, op)?;
    let mut worst = 0.0f64;
    let mut witnesses = Vec::new();
    for (i, f) in tests.iter().enumerate() {
        let fw = ctx.exact_model(f, MAX_EXACT_WINDOW)?;
        if !fw.is_exact() {
            return Err(Error::InexactWindow);
        }
        let lhs = convolve_window(&symbol, &fw)?;
        let n_minus = (1 - lhs.lo).max(1) as usize;
        let n_plus = (lhs.hi() + 1).max(0) as usize;
        let rhs = ctx.analytic_model(&op.apply(f)?, n_minus, n_plus)?;
        if !rhs.is_exact() {
            return Err(Error::InexactWindow);
        }
        let scale = lhs.max_norm().max(rhs.max_coeff_norm()).max(1.0);
        for n in rhs.indices() {
            let dev = (lhs.get(n)? - rhs.coeff(n).unwrap()).norm() / scale;
            if dev > tol {
                witnesses.push(format!("test vector {i}, n={n}: {dev:.3e}"));
            }
            worst = worst.max(dev);
        }
    }
    Ok(CheckReport {
        check: "commutant".into(),
        params: json!({
            "test_vectors": tests.len(),
            "symbol_support": symbol.support(),
            "hypothesis_depth": hyp_depth,
        }),
        max_violation: worst,
        pass: worst <= tol,
        witnesses,
    })
}

/// Coefficients of the `n`-th Fejér kernel, `1 − |m|/(n+1)` for `|m| ≤ n`.
pub fn fejer(n: usize) -> MultiplierSeq {
    let values: Vec<(i64, C64)> = (-(n as i64)..=n as i64)
        .map(|m| (m, C64::new(1.0 - m.unsigned_abs() as f64 / (n as f64 + 1.0), 0.0)))
        .collect();
    MultiplierSeq::scalar(1, &values)
}

fn scalar_coeffs(a: &MultiplierSeq) -> Result<BTreeMap<i64, C64>> {
    if a.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: a.dim(),
        });
    }
    Ok(a.iter().map(|(n, m)| (n, m[(0, 0)])).collect())
}

/// `Γ(v) = Σ_{k=0}^{|v|} λ_{par^k(v)|v}·a(k)·f(par^k(v))` on a rooted tree,
/// for a scalar `a` supported in `ℕ`.
pub fn tree_gamma_apply(t: &DirectedTreeSystem, a: &MultiplierSeq, f: &FinVec) -> Result<FinVec> {
    if !t.is_rooted() {
        return Err(Error::RequiresRootedTree);
    }
    let coeffs = scalar_coeffs(a)?;
    if let Some((&n, _)) = coeffs.iter().find(|(n, _)| **n < 0) {
        return Err(Error::Spec {
            field: "multiplier".into(),
            message: format!("negative index {n} in an N-supported multiplier"),
        });
    }
    let kmax = coeffs.keys().next_back().copied().unwrap_or(0) as usize;
    // Every vertex within kmax generations below supp f.
    let mut candidates = BTreeSet::new();
    for u in f.keys() {
        let mut layer = vec![*u];
        candidates.insert(*u);
        for _ in 0..kmax {
            let mut next = Vec::new();
            for w in &layer {
                next.extend(t.children(w)?);
            }
            candidates.extend(next.iter().copied());
            layer = next;
        }
    }
    let mut out = Vec::new();
    for v in candidates {
        let mut sum = C64::default();
        let mut below: Vec<C64> = Vec::new();
        let mut cur = v;
        for k in 0..=kmax {
            if let Some(ak) = coeffs.get(&(k as i64)) {
                let fu = f.get(&cur);
                if fu != C64::default() {
                    let mut amp = fu;
                    for w in below.iter().rev() {
                        amp *= w;
                    }
                    sum += ak * amp;
                }
            }
            match (t.parent(&cur)?, t.weight(&cur)?) {
                (Some(p), Some(w)) => {
                    below.push(w);
                    cur = p;
                }
                _ => break,
            }
        }
        out.push((v, sum));
    }
    FinVec::from_entries_with_budget(out, f.max_support())
}

/// `Σ_{k≥1} a(−k)·S′*ᵏf + Σ_{k≥0} a(k)·Sᵏf` for `f ∈ R(S)`.
pub fn tree_mult_expand(t: &DirectedTreeSystem, a: &MultiplierSeq, f: &FinVec) -> Result<FinVec> {
    let coeffs = scalar_coeffs(a)?;
    let dual = t.cauchy_dual_shift()?;
    let residual = t.apply(&dual.adjoint_apply(f)?)?.distance(f);
    if residual > 1e-10 * f.norm().max(1.0) {
        return Err(Error::NotInRange { residual });
    }
    let mut out = FinVec::with_budget(f.max_support());
    for (&k, &c) in &coeffs {
        let term = if k >= 0 {
            apply_power(t, f, k as usize, false)?
        } else {
            apply_power(&dual, f, k.unsigned_abs() as usize, true)?
        };
        out = out.axpy(c, &term)?;
    }
    Ok(out)
}

/// `‖M_a‖` restricted to `span{Tⁿe : s ≤ n < s + window}`, `s` large enough
/// that every backward step of `a` stays in the domain. Nested windows give
/// non-decreasing values.
pub fn norm_lower_bound(ctx: &ModelContext, a: &MultiplierSeq, window: usize) -> Result<f64> {
    let s = a.support().map_or(0, |(lo, _)| (-lo).max(0)) as usize;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for e in ctx.e().atoms() {
        let mut v = apply_power(ctx.t().as_ref(), e, s, false)?;
        for _ in 0..window {
            if !v.is_zero() {
                let hi = s + window + a.support().map_or(0, |(_, h)| h.max(0)) as usize + 1;
                let fw = ctx.analytic_model(&v, 1, hi)?;
                outputs.push(mult_apply(ctx, a, &fw)?.window.preimage);
                inputs.push(v.clone());
            }
            v = ctx.apply_t(&v)?;
        }
    }
    if inputs.is_empty() {
        return Ok(0.0);
    }
    let keys: Vec<IndexKey> = inputs
        .iter()
        .chain(&outputs)
        .flat_map(|v| v.keys().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let w = DMatrix::from_fn(keys.len(), inputs.len(), |i, j| inputs[j].get(&keys[i]));
    let y = DMatrix::from_fn(keys.len(), outputs.len(), |i, j| outputs[j].get(&keys[i]));
    let svd = w.svd(false, true);
    let v = svd.v_t.expect("requested V*").adjoint();
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&j| svd.singular_values[j] > oracle::NULL_TOL * smax)
        .collect();
    let map = DMatrix::from_fn(y.ncols(), kept.len(), |i, j| {
        v[(i, kept[j])] / C64::new(svd.singular_values[kept[j]], 0.0)
    });
    Ok(oracle::op_norm(&(y * map)))
}
