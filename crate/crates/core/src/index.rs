//! Index keys, finitely supported vectors on a countable index set, and the
//! local-operator contract shared by every concrete operator class.
//!
//! A basis vector `e_k` of `ℓ²(X)` is identified by an [`IndexKey`]. Keys are
//! produced by the systems that own them (a directed tree, a self-map), so the
//! same key type carries both the finite core and the lazily generated
//! extensions:
//!
//! * `Node(i)` is the `i`-th vertex or point of the finite core;
//! * `Down(a, j)` is the `j`-th element of the chain hanging below anchor `a`
//!   (tree tails, preimage chains of a self-map);
//! * `Up(a, k)` is the `k`-th element of the chain above anchor `a`
//!   (the ancestor spine of a rootless tree, forward chains of a self-map).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Amplitudes with modulus at or below this value are not stored.
pub const PRUNE_EPS: f64 = 1e-12;

/// Default cap on the number of stored entries of a [`FinVec`].
pub const DEFAULT_MAX_SUPPORT: usize = 1_000_000;

/// Environment variable overriding [`DEFAULT_MAX_SUPPORT`].
pub const MAX_SUPPORT_ENV: &str = "OPMODEL_MAX_SUPPORT";

/// The support budget in effect for this process.
pub fn default_budget() -> usize {
    static BUDGET: OnceLock<usize> = OnceLock::new();
    *BUDGET.get_or_init(|| {
        std::env::var(MAX_SUPPORT_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_MAX_SUPPORT)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndexKey {
    Node(u32),
    Down(u32, u32),
    Up(u32, u32),
}

impl fmt::Display for IndexKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexKey::Node(i) => write!(f, "#{i}"),
            IndexKey::Down(a, j) => write!(f, "#{a}>{j}"),
            IndexKey::Up(a, k) => write!(f, "#{a}<{k}"),
        }
    }
}

/// Finitely supported complex function on the index set.
#[derive(Clone, Debug, PartialEq)]
pub struct FinVec {
    entries: BTreeMap<IndexKey, C64>,
    max_support: usize,
}

impl Default for FinVec {
    fn default() -> Self {
        Self::zero()
    }
}

impl FinVec {
    pub fn zero() -> Self {
        Self::with_budget(default_budget())
    }

    pub fn with_budget(max_support: usize) -> Self {
        Self {
            entries: BTreeMap::new(),
            max_support,
        }
    }

    pub fn basis(key: IndexKey) -> Self {
        let mut v = Self::zero();
        v.entries.insert(key, C64::new(1.0, 0.0));
        v
    }

    /// Builds a vector by summing the given entries; repeated keys accumulate.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (IndexKey, C64)>,
    {
        Self::from_entries_with_budget(entries, default_budget())
    }

    pub fn from_entries_with_budget<I>(entries: I, max_support: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (IndexKey, C64)>,
    {
        let mut acc: BTreeMap<IndexKey, C64> = BTreeMap::new();
        for (k, a) in entries {
            *acc.entry(k).or_default() += a;
        }
        let mut v = Self {
            entries: acc,
            max_support,
        };
        v.prune();
        v.check_budget()?;
        Ok(v)
    }

    fn prune(&mut self) {
        self.entries.retain(|_, a| a.norm() > PRUNE_EPS);
    }

    fn check_budget(&self) -> Result<()> {
        if self.entries.len() > self.max_support {
            return Err(Error::SupportBudget {
                size: self.entries.len(),
                limit: self.max_support,
            });
        }
        Ok(())
    }

    pub fn max_support(&self) -> usize {
        self.max_support
    }

    pub fn get(&self, key: &IndexKey) -> C64 {
        self.entries.get(key).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&IndexKey, &C64)> {
        self.entries.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &IndexKey> {
        self.entries.keys()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, c: C64) -> FinVec {
        let mut out = self.clone();
        for a in out.entries.values_mut() {
            *a *= c;
        }
        out.prune();
        out
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: C64, other: &FinVec) -> Result<FinVec> {
        let mut out = self.clone();
        for (k, a) in &other.entries {
            *out.entries.entry(*k).or_default() += c * a;
        }
        out.prune();
        out.check_budget()?;
        Ok(out)
    }

    pub fn add(&self, other: &FinVec) -> Result<FinVec> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &FinVec) -> Result<FinVec> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// Largest entrywise modulus of `self − other`, without pruning.
    pub fn max_abs_diff(&self, other: &FinVec) -> f64 {
        let mut m = 0.0f64;
        for (k, a) in &self.entries {
            m = m.max((a - other.get(k)).norm());
        }
        for (k, b) in &other.entries {
            if !self.entries.contains_key(k) {
                m = m.max(b.norm());
            }
        }
        m
    }

    /// Distance `‖self − other‖` in ℓ².
    pub fn distance(&self, other: &FinVec) -> f64 {
        let mut s = 0.0;
        for (k, a) in &self.entries {
            s += (a - other.get(k)).norm_sqr();
        }
        for (k, b) in &other.entries {
            if !self.entries.contains_key(k) {
                s += b.norm_sqr();
            }
        }
        s.sqrt()
    }
}

/// `⟨x, y⟩ = Σ x(k)·conj(y(k))`, linear in the first argument.
pub fn inner(x: &FinVec, y: &FinVec) -> C64 {
    let (small, large, swap) = if x.support_len() <= y.support_len() {
        (x, y, false)
    } else {
        (y, x, true)
    };
    let mut s = C64::default();
    for (k, a) in small.iter() {
        let b = large.get(k);
        s += if swap { b * a.conj() } else { a * b.conj() };
    }
    s
}

/// A bounded operator known through its action on basis vectors.
///
/// Implementors must satisfy `⟨apply(x), y⟩ = ⟨x, adjoint_apply(y)⟩`.
pub trait LocalOperator: Send + Sync {
    /// `T e_key` as a list of (key, amplitude) pairs.
    fn image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>>;

    /// `T* e_key` as a list of (key, amplitude) pairs.
    fn adjoint_image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>>;

    /// Upper bound on `|supp(T e_k)|` over all keys, `usize::MAX` if unknown.
    fn support_growth(&self) -> usize;

    fn apply(&self, x: &FinVec) -> Result<FinVec> {
        combine(x, |k| self.image(k))
    }

    fn adjoint_apply(&self, x: &FinVec) -> Result<FinVec> {
        combine(x, |k| self.adjoint_image(k))
    }
}

fn combine<F>(x: &FinVec, mut column: F) -> Result<FinVec>
where
    F: FnMut(&IndexKey) -> Result<Vec<(IndexKey, C64)>>,
{
    let mut terms = Vec::new();
    for (k, a) in x.iter() {
        for (k2, b) in column(k)? {
            terms.push((k2, a * b));
        }
    }
    FinVec::from_entries_with_budget(terms, x.max_support())
}

/// `Tⁿx`, or `T*ⁿx` when `adjoint` is set.
pub fn apply_power(op: &dyn LocalOperator, x: &FinVec, n: usize, adjoint: bool) -> Result<FinVec> {
    let mut y = x.clone();
    for _ in 0..n {
        if y.is_zero() {
            break;
        }
        y = if adjoint {
            op.adjoint_apply(&y)?
        } else {
            op.apply(&y)?
        };
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct UnilateralShift;

    impl LocalOperator for UnilateralShift {
        fn image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
            match key {
                IndexKey::Node(i) => Ok(vec![(IndexKey::Node(i + 1), C64::new(1.0, 0.0))]),
                other => Err(Error::UnknownKey(other.to_string())),
            }
        }
        fn adjoint_image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
            match key {
                IndexKey::Node(0) => Ok(vec![]),
                IndexKey::Node(i) => Ok(vec![(IndexKey::Node(i - 1), C64::new(1.0, 0.0))]),
                other => Err(Error::UnknownKey(other.to_string())),
            }
        }
        fn support_growth(&self) -> usize {
            1
        }
    }

    fn e(i: u32) -> FinVec {
        FinVec::basis(IndexKey::Node(i))
    }

    #[test]
    fn inner_products_of_basis_vectors() {
        assert_eq!(inner(&e(0), &e(0)), C64::new(1.0, 0.0));
        assert_eq!(inner(&e(0), &e(1)), C64::new(0.0, 0.0));
        // ⟨2e_0 + i·e_1, e_1⟩ = i under conjugation in the second slot.
        let x = FinVec::from_entries([
            (IndexKey::Node(0), C64::new(2.0, 0.0)),
            (IndexKey::Node(1), C64::new(0.0, 1.0)),
        ])
        .unwrap();
        assert_eq!(inner(&x, &e(1)), C64::new(0.0, 1.0));
        assert_eq!(inner(&e(1), &x), C64::new(0.0, -1.0));
    }

    #[test]
    fn shift_powers() {
        let s = UnilateralShift;
        let x = e(0);
        assert_eq!(apply_power(&s, &x, 0, false).unwrap(), x);
        assert_eq!(apply_power(&s, &e(0), 3, false).unwrap(), e(3));
        assert_eq!(apply_power(&s, &e(3), 2, true).unwrap(), e(1));
        assert!(apply_power(&s, &e(1), 2, true).unwrap().is_zero());
    }

    #[test]
    fn stored_zeros_are_pruned() {
        let v = FinVec::from_entries([
            (IndexKey::Node(0), C64::new(1.0, 0.0)),
            (IndexKey::Node(0), C64::new(-1.0, 0.0)),
            (IndexKey::Node(1), C64::new(1e-13, 0.0)),
        ])
        .unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn budget_is_an_error_not_a_truncation() {
        let entries = (0..5).map(|i| (IndexKey::Node(i), C64::new(1.0, 0.0)));
        let err = FinVec::from_entries_with_budget(entries, 3).unwrap_err();
        assert_eq!(err, Error::SupportBudget { size: 5, limit: 3 });
    }

    #[test]
    fn key_order_is_total_and_stable() {
        let mut keys = vec![
            IndexKey::Up(0, 1),
            IndexKey::Down(2, 1),
            IndexKey::Node(3),
            IndexKey::Node(1),
        ];
        keys.sort();
        assert_eq!(
            keys,
            vec![
                IndexKey::Node(1),
                IndexKey::Node(3),
                IndexKey::Down(2, 1),
                IndexKey::Up(0, 1)
            ]
        );
    }
}
