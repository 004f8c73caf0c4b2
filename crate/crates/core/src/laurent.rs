//! The analytic model: every `x ∈ H` is carried as a formal Laurent series
//! `Σ f̂(n) zⁿ` with coefficients in `E`,
//!
//! ```text
//! f̂(n) = P_E T′*ⁿ x     (n ≥ 0)
//! f̂(n) = P_E T^{|n|} x  (n < 0)
//! ```
//!
//! Windows always keep the preimage `x`, so every operation on the model side
//! re-derives coefficients from a vector rather than from other coefficients.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dtree::{DirectedTreeSystem, EBasis, EMode};
use crate::error::{Error, Result};
use crate::index::{inner, FinVec, IndexKey, LocalOperator, C64};
use crate::oracle;

pub const DEFAULT_TOL: f64 = 1e-10;

/// An integer level on the index set with `T` raising it by exactly one
/// and `T′*` lowering it by one. Used to certify that a window has captured
/// every nonzero coefficient on a side.
pub trait Grading: Send + Sync {
    fn level(&self, key: &IndexKey) -> Result<i64>;
}

impl Grading for DirectedTreeSystem {
    fn level(&self, key: &IndexKey) -> Result<i64> {
        DirectedTreeSystem::level(self, key)
    }
}

/// How negative coefficients are read off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeConvention {
    /// `P_E T^{|n|} x`.
    #[default]
    Powers,
    /// `P_E T*^{|n|} x`, kept only to show that it breaks intertwining.
    AdjointPowers,
}

#[derive(Clone)]
pub struct ModelContext {
    t: Arc<dyn LocalOperator>,
    dual: Arc<dyn LocalOperator>,
    e: EBasis,
    tol: f64,
    grading: Option<Arc<dyn Grading>>,
    convention: NegativeConvention,
}

/// Coefficients `f̂(n)` for `−n_minus ≤ n ≤ n_plus`, stored as coordinates in
/// the context's E-basis, with the preimage they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentWindow {
    pub n_minus: usize,
    pub n_plus: usize,
    pub coeffs: Vec<DVector<C64>>,
    pub preimage: FinVec,
    /// Every coefficient below the window is zero.
    pub exact_negative: bool,
    /// Every coefficient above the window is zero.
    pub exact_positive: bool,
}

impl LaurentWindow {
    pub fn lo(&self) -> i64 {
        -(self.n_minus as i64)
    }

    pub fn hi(&self) -> i64 {
        self.n_plus as i64
    }

    pub fn dim(&self) -> usize {
        self.coeffs.first().map_or(0, |c| c.len())
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.lo()..=self.hi()
    }

    /// `f̂(n)` inside the window.
    pub fn coeff(&self, n: i64) -> Option<&DVector<C64>> {
        if n < self.lo() || n > self.hi() {
            None
        } else {
            self.coeffs.get((n - self.lo()) as usize)
        }
    }

    /// `f̂(n)` for any `n`, with zeros beyond an exact side.
    pub fn known_coeff(&self, n: i64) -> Result<DVector<C64>> {
        if let Some(c) = self.coeff(n) {
            return Ok(c.clone());
        }
        let exact = if n < self.lo() {
            self.exact_negative
        } else {
            self.exact_positive
        };
        if exact {
            Ok(DVector::zeros(self.dim()))
        } else {
            Err(Error::Contaminated(n))
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact_negative && self.exact_positive
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|z| *z == C64::default()))
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient distance over the common index range.
    pub fn max_coeff_diff(&self, other: &LaurentWindow) -> f64 {
        let lo = self.lo().max(other.lo());
        let hi = self.hi().min(other.hi());
        (lo..=hi)
            .map(|n| (self.coeff(n).unwrap() - other.coeff(n).unwrap()).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        let coeffs: Vec<Value> = self
            .indices()
            .zip(&self.coeffs)
            .map(|(n, c)| {
                json!({
                    "n": n,
                    "coords": c.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "n_minus": self.n_minus,
            "n_plus": self.n_plus,
            "exact_negative": self.exact_negative,
            "exact_positive": self.exact_positive,
            "coefficients": coeffs,
        })
    }
}

/// Output record shared by all checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub params: Value,
    pub max_violation: f64,
    pub pass: bool,
    pub witnesses: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanCoverage {
    pub rank: usize,
    pub uncovered: Vec<IndexKey>,
    /// Largest squared distance of a window basis vector from the span.
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanReport {
    /// Coverage by `{T*ⁿe} ∪ {T′ⁿe}`.
    pub adjoint_side: SpanCoverage,
    /// Coverage by `{T′*ⁿe} ∪ {Tⁿe}`.
    pub dual_side: SpanCoverage,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusEstimate {
    /// Inner radius; 0 when the negative tail vanishes.
    pub r_minus: f64,
    /// Outer radius; `f64::INFINITY` when the positive tail vanishes.
    pub r_plus: f64,
    pub finite_negative: bool,
    pub finite_positive: bool,
}

pub const MIN_RADIUS_WINDOW: usize = 8;

impl ModelContext {
    pub fn new(t: Arc<dyn LocalOperator>, dual: Arc<dyn LocalOperator>, e: EBasis) -> Self {
        Self {
            t,
            dual,
            e,
            tol: DEFAULT_TOL,
            grading: None,
            convention: NegativeConvention::Powers,
        }
    }

    /// Weighted shift on `tree`, its Cauchy dual, and `E` built per `mode`.
    pub fn for_tree(tree: &DirectedTreeSystem, mode: EMode, depth: usize) -> Result<Self> {
        let e = tree.e_basis(mode, depth)?;
        Self::for_tree_with_basis(tree, e)
    }

    pub fn for_tree_with_basis(tree: &DirectedTreeSystem, e: EBasis) -> Result<Self> {
        let t = Arc::new(tree.clone());
        let dual = Arc::new(tree.cauchy_dual_shift()?);
        Ok(Self {
            grading: Some(t.clone()),
            ..Self::new(t, dual, e)
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_grading(mut self, grading: Arc<dyn Grading>) -> Self {
        self.grading = Some(grading);
        self
    }

    pub fn with_convention(mut self, convention: NegativeConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn t(&self) -> &Arc<dyn LocalOperator> {
        &self.t
    }

    pub fn dual(&self) -> &Arc<dyn LocalOperator> {
        &self.dual
    }

    pub fn e(&self) -> &EBasis {
        &self.e
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.e.dim()
    }

    pub fn apply_t(&self, x: &FinVec) -> Result<FinVec> {
        self.t.apply(x)
    }

    /// `T′* x`, the left inverse of `T`.
    pub fn apply_left_inverse(&self, x: &FinVec) -> Result<FinVec> {
        self.dual.adjoint_apply(x)
    }

    fn step_negative(&self, x: &FinVec) -> Result<FinVec> {
        match self.convention {
            NegativeConvention::Powers => self.t.apply(x),
            NegativeConvention::AdjointPowers => self.t.adjoint_apply(x),
        }
    }

    /// `f̂(n)` in E-coordinates.
    pub fn model_coeff(&self, x: &FinVec, n: i64) -> Result<DVector<C64>> {
        let mut y = x.clone();
        for _ in 0..n.unsigned_abs() {
            if y.is_zero() {
                break;
            }
            y = if n >= 0 {
                self.apply_left_inverse(&y)?
            } else {
                self.step_negative(&y)?
            };
        }
        Ok(self.e.coords(&y))
    }

    fn atom_levels(&self) -> Result<Option<(i64, i64)>> {
        let Some(g) = &self.grading else {
            return Ok(None);
        };
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for a in self.e.atoms() {
            for k in a.keys() {
                let l = g.level(k)?;
                lo = lo.min(l);
                hi = hi.max(l);
            }
        }
        Ok(Some((lo, hi)))
    }

    /// Whether every further step away from the window stays orthogonal to
    /// `E`: `beyond` is the first vector past the window on that side.
    fn side_exact(&self, beyond: &FinVec, negative: bool) -> Result<bool> {
        if beyond.is_zero() {
            return Ok(true);
        }
        if self.convention != NegativeConvention::Powers && negative {
            return Ok(false);
        }
        let (Some(g), Some((lo, hi))) = (&self.grading, self.atom_levels()?) else {
            return Ok(false);
        };
        let mut vmin = i64::MAX;
        let mut vmax = i64::MIN;
        for k in beyond.keys() {
            let l = g.level(k)?;
            vmin = vmin.min(l);
            vmax = vmax.max(l);
        }
        Ok(if negative { vmin > hi } else { vmax < lo })
    }

    /// `U x` on `[−n_minus, n_plus]`.
    pub fn analytic_model(&self, x: &FinVec, n_minus: usize, n_plus: usize) -> Result<LaurentWindow> {
        let mut neg = Vec::with_capacity(n_minus);
        let mut y = x.clone();
        for _ in 0..n_minus {
            y = self.step_negative(&y)?;
            neg.push(self.e.coords(&y));
        }
        let beyond_neg = self.step_negative(&y)?;
        let mut coeffs: Vec<DVector<C64>> = neg.into_iter().rev().collect();
        let mut y = x.clone();
        coeffs.push(self.e.coords(&y));
        for _ in 0..n_plus {
            y = self.apply_left_inverse(&y)?;
            coeffs.push(self.e.coords(&y));
        }
        let beyond_pos = self.apply_left_inverse(&y)?;
        Ok(LaurentWindow {
            n_minus,
            n_plus,
            coeffs,
            preimage: x.clone(),
            exact_negative: self.side_exact(&beyond_neg, true)?,
            exact_positive: self.side_exact(&beyond_pos, false)?,
        })
    }

    /// Smallest symmetric window, up to `max`, that is exact on both sides.
    pub fn exact_model(&self, x: &FinVec, max: usize) -> Result<LaurentWindow> {
        let mut n = 1;
        loop {
            let w = self.analytic_model(x, n, n)?;
            if w.is_exact() || n >= max {
                return Ok(w);
            }
            n = (n * 2).min(max);
        }
    }

    fn scale_of(&self, w: &LaurentWindow) -> f64 {
        w.max_coeff_norm().max(1.0)
    }

    /// `ℳ_z`: replaces the preimage by `Tx` and checks that every interior
    /// coefficient moved up by one.
    pub fn mz_apply(&self, w: &LaurentWindow) -> Result<LaurentWindow> {
        let moved = self.analytic_model(&self.apply_t(&w.preimage)?, w.n_minus, w.n_plus)?;
        let bound = self.tol * self.scale_of(w);
        for n in w.lo() + 1..=w.hi() {
            let dev = (moved.coeff(n).unwrap() - w.coeff(n - 1).unwrap()).norm();
            if dev > bound {
                return Err(Error::Intertwining { index: n, deviation: dev });
            }
        }
        Ok(moved)
    }

    /// `𝓛`: replaces the preimage by `T′*x`. When `x ∈ R(T)` the coefficients
    /// must move down by one; that is checked.
    pub fn ell_apply(&self, w: &LaurentWindow) -> Result<LaurentWindow> {
        let y = self.apply_left_inverse(&w.preimage)?;
        let moved = self.analytic_model(&y, w.n_minus, w.n_plus)?;
        let back = self.apply_t(&y)?;
        let scale = w.preimage.norm().max(1.0);
        if back.distance(&w.preimage) <= self.tol * scale {
            let bound = self.tol * self.scale_of(w);
            for n in w.lo()..w.hi() {
                let dev = (moved.coeff(n).unwrap() - w.coeff(n + 1).unwrap()).norm();
                if dev > bound {
                    return Err(Error::Intertwining { index: n, deviation: dev });
                }
            }
        }
        Ok(moved)
    }

    /// `E ⟂ TⁿE` and `E ⟂ T′ⁿE` for `1 ≤ n ≤ n_max`.
    pub fn check_prep(&self, n_max: usize) -> Result<CheckReport> {
        let atoms = self.e.atoms();
        let mut worst = 0.0f64;
        let mut witnesses = Vec::new();
        for (i, a) in atoms.iter().enumerate() {
            let mut tp = a.clone();
            let mut dp = a.clone();
            for n in 1..=n_max {
                tp = self.t.apply(&tp)?;
                dp = self.dual.apply(&dp)?;
                for (j, b) in atoms.iter().enumerate() {
                    for (label, v) in [("T", &tp), ("T'", &dp)] {
                        let m = inner(v, b).norm();
                        if m > self.tol {
                            witnesses.push(format!("<{label}^{n} e{i}, e{j}> = {m:.3e}"));
                        }
                        worst = worst.max(m);
                    }
                }
            }
        }
        Ok(CheckReport {
            check: "prep".into(),
            params: json!({ "n_max": n_max, "dim_e": self.dim() }),
            max_violation: worst,
            pass: worst <= self.tol,
            witnesses,
        })
    }

    /// `TⁿT′*ⁿE ⊂ E` for `1 ≤ n ≤ n_max`.
    pub fn check_incl(&self, n_max: usize) -> Result<CheckReport> {
        let mut worst = 0.0f64;
        let mut witnesses = Vec::new();
        for (i, a) in self.e.atoms().iter().enumerate() {
            let mut down = a.clone();
            for n in 1..=n_max {
                down = self.apply_left_inverse(&down)?;
                let mut up = down.clone();
                for _ in 0..n {
                    up = self.t.apply(&up)?;
                }
                let off = up.distance(&self.e.project(&up)?);
                if off > self.tol {
                    witnesses.push(format!("n={n} atom {i}: distance {off:.3e}"));
                }
                worst = worst.max(off);
            }
        }
        Ok(CheckReport {
            check: "incl".into(),
            params: json!({ "n_max": n_max, "dim_e": self.dim() }),
            max_violation: worst,
            pass: worst <= self.tol,
            witnesses,
        })
    }

    fn coverage(&self, family: &[FinVec], keys: &[IndexKey]) -> SpanCoverage {
        let m = DMatrix::from_fn(keys.len(), family.len(), |i, j| family[j].get(&keys[i]));
        let q = oracle::range_basis(&m, oracle::NULL_TOL);
        let tol = self.tol.max(1e-8);
        let mut uncovered = Vec::new();
        let mut max_residual = 0.0f64;
        for (i, k) in keys.iter().enumerate() {
            let row_norm_sqr: f64 = (0..q.ncols()).map(|j| q[(i, j)].norm_sqr()).sum();
            // Squared distance of e_k from the span; its square root would
            // turn rounding of order 1e-16 into 1e-8.
            let residual = (1.0 - row_norm_sqr).max(0.0);
            max_residual = max_residual.max(residual);
            if residual > tol {
                uncovered.push(*k);
            }
        }
        SpanCoverage {
            rank: q.ncols(),
            uncovered,
            max_residual,
        }
    }

    /// Which basis vectors of the window lie in the span of the orbits of
    /// `E` (compressed to the window) for `0 ≤ n ≤ n_max`.
    pub fn check_span(&self, keys: &[IndexKey], n_max: usize) -> Result<SpanReport> {
        let mut adjoint_family = Vec::new();
        let mut dual_family = Vec::new();
        for a in self.e.atoms() {
            let (mut ts, mut tp, mut ds, mut dp) = (a.clone(), a.clone(), a.clone(), a.clone());
            adjoint_family.push(a.clone());
            dual_family.push(a.clone());
            for _ in 0..n_max {
                ts = self.t.adjoint_apply(&ts)?;
                dp = self.dual.apply(&dp)?;
                ds = self.dual.adjoint_apply(&ds)?;
                tp = self.t.apply(&tp)?;
                adjoint_family.extend([ts.clone(), dp.clone()]);
                dual_family.extend([ds.clone(), tp.clone()]);
            }
        }
        let adjoint_side = self.coverage(&adjoint_family, keys);
        let dual_side = self.coverage(&dual_family, keys);
        let pass = adjoint_side.uncovered.is_empty() && dual_side.uncovered.is_empty();
        Ok(SpanReport {
            adjoint_side,
            dual_side,
            pass,
        })
    }

    /// Root-test estimates of the annulus `r_minus < |z| < r_plus` on which
    /// the series of `x` converges, from the outer half of a `window`-sized
    /// window on each side.
    pub fn radius_estimate(&self, x: &FinVec, window: usize) -> Result<RadiusEstimate> {
        if window < MIN_RADIUS_WINDOW {
            return Err(Error::WindowTooSmall {
                need: MIN_RADIUS_WINDOW,
                have: window,
            });
        }
        let w = self.analytic_model(x, window, window)?;
        let tail = |sign: i64| -> f64 {
            (window.div_ceil(2)..=window)
                .map(|n| {
                    let c = w.coeff(sign * n as i64).unwrap().norm();
                    if c == 0.0 {
                        0.0
                    } else {
                        c.powf(1.0 / n as f64)
                    }
                })
                .fold(0.0, f64::max)
        };
        let pos = tail(1);
        let neg = tail(-1);
        Ok(RadiusEstimate {
            r_minus: neg,
            r_plus: if pos == 0.0 { f64::INFINITY } else { 1.0 / pos },
            finite_negative: neg == 0.0,
            finite_positive: pos == 0.0,
        })
    }
}
