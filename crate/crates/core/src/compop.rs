//! Weighted composition operators `C_{φ,w} f = w·(f∘φ)` on `ℓ²(X)` for a
//! countable set `X` with counting measure.
//!
//! `X` is a finite core plus optional infinite chains: a *forward* chain at
//! `a` replaces `φ(a)` by a fresh point and continues `φ` injectively forever;
//! a *backward* chain at `a` hangs an infinite sequence of preimages below
//! `a`. A directed tree can also be viewed as a self-map with `φ = par` and
//! `w = λ` (the root is a fixed point of weight zero), which reproduces `S_λ`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::dtree::{DirectedTreeSystem, LeftInvertibility};
use crate::error::{Error, Result};
use crate::index::{FinVec, IndexKey, LocalOperator, C64, PRUNE_EPS};
use crate::scalar::{Ident, Scalar};

/// JSON selfmap-spec document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfMapSpec {
    pub points: Vec<PointSpec>,
    #[serde(default)]
    pub basepoints: Vec<Ident>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ChainSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub id: Ident,
    /// Image under `φ`; omitted for points that start a forward chain.
    #[serde(default)]
    pub phi: Option<Ident>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Scalar>,
}

/// Chains attached to core points, all carrying `weight`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub weight: Scalar,
    #[serde(default)]
    pub forward: Vec<Ident>,
    #[serde(default)]
    pub backward: Vec<Ident>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Chain {
    first: C64,
    rest: C64,
}

impl Chain {
    fn uniform(w: C64) -> Self {
        Self { first: w, rest: w }
    }

    fn at(&self, k: u32) -> C64 {
        if k == 1 {
            self.first
        } else {
            self.rest
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct ExplicitMap {
    names: Vec<String>,
    index: BTreeMap<String, u32>,
    phi: Vec<IndexKey>,
    weights: Vec<C64>,
    pre: Vec<Vec<u32>>,
    forward: BTreeMap<u32, Chain>,
    backward: BTreeMap<u32, Chain>,
}

#[derive(Clone, Debug, PartialEq)]
enum Carrier {
    Explicit(ExplicitMap),
    Tree(Box<DirectedTreeSystem>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfMapSystem {
    carrier: Carrier,
    basepoints: Vec<IndexKey>,
}

/// `[φ]` on an explored part of `X`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationTable {
    pub values: BTreeMap<IndexKey, i64>,
    pub on_cycle: BTreeSet<IndexKey>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub points: BTreeSet<IndexKey>,
    /// False when exploration stopped at the budget.
    pub complete: bool,
}

fn field(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Spec {
        field: path.into(),
        message: message.into(),
    }
}

impl SelfMapSystem {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SelfMapSpec = serde_json::from_str(text).map_err(|e| {
            field(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        Self::from_spec(&spec)
    }

    pub fn from_spec(spec: &SelfMapSpec) -> Result<Self> {
        let n = spec.points.len();
        if n == 0 {
            return Err(field("points", "at least one point is required"));
        }
        let mut names = Vec::with_capacity(n);
        let mut index = BTreeMap::new();
        for (i, p) in spec.points.iter().enumerate() {
            let name = p.id.to_string();
            if name.is_empty() || name.contains('<') || name.contains('>') {
                return Err(field(
                    format!("points[{i}].id"),
                    "ids must be non-empty and free of `<` and `>`",
                ));
            }
            if index.insert(name.clone(), i as u32).is_some() {
                return Err(field(format!("points[{i}].id"), format!("duplicate id `{name}`")));
            }
            names.push(name);
        }
        let lookup = |id: &Ident, path: String| -> Result<u32> {
            index
                .get(&id.to_string())
                .copied()
                .ok_or_else(|| field(path, format!("unknown point `{id}`")))
        };

        let mut forward = BTreeMap::new();
        let mut backward = BTreeMap::new();
        if let Some(ext) = &spec.extension {
            let w = ext.weight.value().map_err(|m| field("extension.weight", m))?;
            for (j, id) in ext.forward.iter().enumerate() {
                forward.insert(lookup(id, format!("extension.forward[{j}]"))?, Chain::uniform(w));
            }
            for (j, id) in ext.backward.iter().enumerate() {
                backward.insert(lookup(id, format!("extension.backward[{j}]"))?, Chain::uniform(w));
            }
        }

        let mut phi = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (i, p) in spec.points.iter().enumerate() {
            let target = match (&p.phi, forward.contains_key(&(i as u32))) {
                (Some(t), false) => IndexKey::Node(lookup(t, format!("points[{i}].phi"))?),
                (None, true) => IndexKey::Up(i as u32, 1),
                (Some(_), true) => {
                    return Err(field(
                        format!("points[{i}].phi"),
                        "a point starting a forward chain must omit phi",
                    ))
                }
                (None, false) => return Err(field(format!("points[{i}].phi"), "phi is required")),
            };
            phi.push(target);
            let w = match &p.weight {
                Some(w) => w.value().map_err(|m| field(format!("points[{i}].weight"), m))?,
                None => C64::new(1.0, 0.0),
            };
            weights.push(w);
        }
        let basepoints = spec
            .basepoints
            .iter()
            .enumerate()
            .map(|(j, id)| lookup(id, format!("basepoints[{j}]")).map(IndexKey::Node))
            .collect::<Result<Vec<_>>>()?;
        Self::explicit(names, phi, weights, forward, backward, basepoints)
    }

    fn explicit(
        names: Vec<String>,
        phi: Vec<IndexKey>,
        weights: Vec<C64>,
        forward: BTreeMap<u32, Chain>,
        backward: BTreeMap<u32, Chain>,
        basepoints: Vec<IndexKey>,
    ) -> Result<Self> {
        let n = names.len();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        let mut pre = vec![Vec::new(); n];
        for (i, t) in phi.iter().enumerate() {
            if let IndexKey::Node(j) = t {
                pre[*j as usize].push(i as u32);
            }
        }
        let sys = Self {
            carrier: Carrier::Explicit(ExplicitMap {
                names,
                index,
                phi,
                weights,
                pre,
                forward,
                backward,
            }),
            basepoints,
        };
        sys.validate_basepoints()?;
        Ok(sys)
    }

    /// A finite system on points `0..n` with `φ(i) = phi[i]`.
    pub fn finite(phi: &[usize], weights: &[C64]) -> Result<Self> {
        Self::finite_with_chains(phi, weights, &[], C64::new(1.0, 0.0))
    }

    /// As [`finite`](Self::finite), with a backward chain of weight
    /// `chain_weight` hanging below each point listed in `backward`.
    pub fn finite_with_chains(
        phi: &[usize],
        weights: &[C64],
        backward: &[usize],
        chain_weight: C64,
    ) -> Result<Self> {
        let n = phi.len();
        if weights.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: weights.len(),
            });
        }
        if let Some(&bad) = phi.iter().find(|&&j| j >= n) {
            return Err(Error::UnknownKey(bad.to_string()));
        }
        Self::explicit(
            (0..n).map(|i| i.to_string()).collect(),
            phi.iter().map(|&j| IndexKey::Node(j as u32)).collect(),
            weights.to_vec(),
            BTreeMap::new(),
            backward
                .iter()
                .map(|&a| (a as u32, Chain::uniform(chain_weight)))
                .collect(),
            Vec::new(),
        )
    }

    /// `φ = par`, `w = λ`; a rootless tree gets ω as basepoint.
    pub fn from_tree(tree: &DirectedTreeSystem) -> Self {
        let basepoints = if tree.is_rooted() {
            Vec::new()
        } else {
            vec![tree.omega()]
        };
        Self {
            carrier: Carrier::Tree(Box::new(tree.clone())),
            basepoints,
        }
    }

    pub fn basepoints(&self) -> &[IndexKey] {
        &self.basepoints
    }

    pub fn contains(&self, key: &IndexKey) -> bool {
        match &self.carrier {
            Carrier::Tree(t) => t.contains(key),
            Carrier::Explicit(m) => {
                let n = m.names.len() as u32;
                match *key {
                    IndexKey::Node(i) => i < n,
                    IndexKey::Up(a, k) => k >= 1 && m.forward.contains_key(&a),
                    IndexKey::Down(a, j) => j >= 1 && m.backward.contains_key(&a),
                }
            }
        }
    }

    fn check(&self, key: &IndexKey) -> Result<()> {
        if self.contains(key) {
            Ok(())
        } else {
            Err(Error::UnknownKey(key.to_string()))
        }
    }

    pub fn phi(&self, key: &IndexKey) -> Result<IndexKey> {
        self.check(key)?;
        Ok(match &self.carrier {
            Carrier::Tree(t) => t.parent(key)?.unwrap_or(*key),
            Carrier::Explicit(m) => match *key {
                IndexKey::Node(i) => m.phi[i as usize],
                IndexKey::Up(a, k) => IndexKey::Up(a, k + 1),
                IndexKey::Down(a, 1) => IndexKey::Node(a),
                IndexKey::Down(a, j) => IndexKey::Down(a, j - 1),
            },
        })
    }

    /// `φ⁻¹(x)`, always finite.
    pub fn preimages(&self, key: &IndexKey) -> Result<Vec<IndexKey>> {
        self.check(key)?;
        Ok(match &self.carrier {
            Carrier::Tree(t) => {
                let mut out = t.children(key)?;
                if t.root() == Some(*key) {
                    out.push(*key);
                }
                out
            }
            Carrier::Explicit(m) => match *key {
                IndexKey::Node(i) => {
                    let mut out: Vec<IndexKey> =
                        m.pre[i as usize].iter().map(|&j| IndexKey::Node(j)).collect();
                    if m.backward.contains_key(&i) {
                        out.push(IndexKey::Down(i, 1));
                    }
                    out
                }
                IndexKey::Up(a, 1) => vec![IndexKey::Node(a)],
                IndexKey::Up(a, k) => vec![IndexKey::Up(a, k - 1)],
                IndexKey::Down(a, j) => vec![IndexKey::Down(a, j + 1)],
            },
        })
    }

    pub fn weight(&self, key: &IndexKey) -> Result<C64> {
        self.check(key)?;
        Ok(match &self.carrier {
            Carrier::Tree(t) => t.weight(key)?.unwrap_or_default(),
            Carrier::Explicit(m) => match *key {
                IndexKey::Node(i) => m.weights[i as usize],
                IndexKey::Up(a, k) => m.forward[&a].at(k),
                IndexKey::Down(a, j) => m.backward[&a].at(j),
            },
        })
    }

    pub fn core_len(&self) -> usize {
        match &self.carrier {
            Carrier::Tree(t) => t.core_len(),
            Carrier::Explicit(m) => m.names.len(),
        }
    }

    pub fn as_tree(&self) -> Option<&DirectedTreeSystem> {
        match &self.carrier {
            Carrier::Tree(t) => Some(t),
            Carrier::Explicit(_) => None,
        }
    }

    pub fn key_name(&self, key: &IndexKey) -> String {
        match &self.carrier {
            Carrier::Tree(t) => t.key_name(key),
            Carrier::Explicit(m) => match *key {
                IndexKey::Node(i) => m
                    .names
                    .get(i as usize)
                    .cloned()
                    .unwrap_or_else(|| key.to_string()),
                IndexKey::Down(a, j) => format!("{}>{j}", m.names[a as usize]),
                IndexKey::Up(a, k) => format!("{}<{k}", m.names[a as usize]),
            },
        }
    }

    pub fn parse_key(&self, text: &str) -> Result<IndexKey> {
        let m = match &self.carrier {
            Carrier::Tree(t) => return t.parse_key(text),
            Carrier::Explicit(m) => m,
        };
        let text = text.trim();
        let unknown = || Error::UnknownKey(text.to_string());
        let key = if let Some(&i) = m.index.get(text) {
            IndexKey::Node(i)
        } else if let Some((base, j)) = text.rsplit_once('>') {
            IndexKey::Down(
                *m.index.get(base).ok_or_else(unknown)?,
                j.parse().map_err(|_| unknown())?,
            )
        } else if let Some((base, k)) = text.rsplit_once('<') {
            IndexKey::Up(
                *m.index.get(base).ok_or_else(unknown)?,
                k.parse().map_err(|_| unknown())?,
            )
        } else {
            return Err(unknown());
        };
        self.check(&key).map_err(|_| unknown())?;
        Ok(key)
    }

    /// Core points plus the first `depth` elements of every chain (for a
    /// tree carrier, the vertices within `depth` levels of the base vertex).
    pub fn keys_to_depth(&self, depth: usize) -> Vec<IndexKey> {
        match &self.carrier {
            Carrier::Tree(t) => t.keys_to_depth(depth),
            Carrier::Explicit(m) => {
                let mut out: Vec<IndexKey> =
                    (0..m.names.len() as u32).map(IndexKey::Node).collect();
                for &a in m.backward.keys() {
                    out.extend((1..=depth as u32).map(|j| IndexKey::Down(a, j)));
                }
                for &a in m.forward.keys() {
                    out.extend((1..=depth as u32).map(|k| IndexKey::Up(a, k)));
                }
                out
            }
        }
    }

    pub fn comp_apply(&self, f: &FinVec) -> Result<FinVec> {
        self.apply(f)
    }

    /// `C*ⁿ e_x = conj(w(x)w(φ(x))···w(φ⁽ⁿ⁻¹⁾(x)))·e_{φ⁽ⁿ⁾(x)}`.
    pub fn comp_adjoint_power(&self, x: &IndexKey, n: usize) -> Result<FinVec> {
        let mut cur = *x;
        let mut prod = C64::new(1.0, 0.0);
        for _ in 0..n {
            prod *= self.weight(&cur)?.conj();
            cur = self.phi(&cur)?;
        }
        FinVec::from_entries([(cur, prod)])
    }

    /// `Cⁿ e_x = Σ_{y∈φ⁻ⁿ(x)} w(y)w(φ(y))···w(φ⁽ⁿ⁻¹⁾(y))·e_y`, enumerating the
    /// preimage sets level by level.
    pub fn comp_power(&self, x: &IndexKey, n: usize) -> Result<FinVec> {
        self.check(x)?;
        let budget = crate::index::default_budget();
        let mut level: Vec<(IndexKey, C64)> = vec![(*x, C64::new(1.0, 0.0))];
        for _ in 0..n {
            let mut next = Vec::new();
            for (z, p) in &level {
                for y in self.preimages(z)? {
                    next.push((y, self.weight(&y)? * p));
                }
            }
            if next.len() > budget {
                return Err(Error::SupportBudget {
                    size: next.len(),
                    limit: budget,
                });
            }
            level = next;
        }
        FinVec::from_entries(level)
    }

    /// `d(x) = Σ_{y∈φ⁻¹(x)} |w(y)|²`, the diagonal of `C*C`.
    pub fn gram_diagonal_comp(&self, x: &IndexKey) -> Result<f64> {
        let mut d = 0.0;
        for y in self.preimages(x)? {
            d += self.weight(&y)?.norm_sqr();
        }
        Ok(d)
    }

    /// Scans `d` over [`keys_to_depth`](Self::keys_to_depth) and the chains'
    /// asymptotic values.
    pub fn check_left_invertible(&self, window_depth: usize) -> LeftInvertibility {
        if let Carrier::Tree(t) = &self.carrier {
            return t.check_left_invertible(window_depth);
        }
        let depth = window_depth.max(2);
        let mut inf_d = f64::INFINITY;
        let mut sup_d = 0.0f64;
        for k in self.keys_to_depth(depth) {
            let d = self.gram_diagonal_comp(&k).expect("explored key");
            inf_d = inf_d.min(d);
            sup_d = sup_d.max(d);
        }
        LeftInvertibility {
            ok: inf_d > PRUNE_EPS,
            inf_d,
            sup_d,
        }
    }

    /// The Cauchy dual: same `φ`, weights `w′(y) = w(y) / d(φ(y))`.
    pub fn cauchy_dual_comp(&self) -> Result<Self> {
        let li = self.check_left_invertible(2);
        if !li.ok {
            return Err(Error::NotLeftInvertible { inf_d: li.inf_d });
        }
        match &self.carrier {
            Carrier::Tree(t) => Ok(Self {
                carrier: Carrier::Tree(Box::new(t.cauchy_dual_shift()?)),
                basepoints: self.basepoints.clone(),
            }),
            Carrier::Explicit(m) => {
                let mut dual = m.clone();
                for i in 0..m.names.len() {
                    let x = IndexKey::Node(i as u32);
                    dual.weights[i] = m.weights[i] / self.gram_diagonal_comp(&self.phi(&x)?)?;
                }
                for (a, c) in dual.forward.iter_mut() {
                    // d(φ(Up(a,k))) = |w(Up(a,k))|², the chain being injective.
                    let _ = a;
                    c.first /= c.first.norm_sqr();
                    c.rest /= c.rest.norm_sqr();
                }
                for (a, c) in dual.backward.iter_mut() {
                    c.first /= self.gram_diagonal_comp(&IndexKey::Node(*a))?;
                    c.rest /= c.rest.norm_sqr();
                }
                Ok(Self {
                    carrier: Carrier::Explicit(dual),
                    basepoints: self.basepoints.clone(),
                })
            }
        }
    }

    fn forward_walk(&self, x: &IndexKey, steps: usize) -> Result<Vec<IndexKey>> {
        let mut out = Vec::with_capacity(steps + 1);
        let mut cur = *x;
        out.push(cur);
        for _ in 0..steps {
            cur = self.phi(&cur)?;
            out.push(cur);
        }
        Ok(out)
    }

    /// `[x]_φ`: every point whose forward orbit meets that of `x`, explored
    /// breadth-first over preimages of the forward orbit.
    pub fn orbit_of(&self, x: &IndexKey, budget: usize) -> Result<Orbit> {
        self.check(x)?;
        let mut points = BTreeSet::new();
        let mut queue = VecDeque::new();
        let mut complete = true;
        let mut cur = *x;
        // Forward orbit until it repeats or the budget runs out.
        loop {
            if !points.insert(cur) {
                break;
            }
            queue.push_back(cur);
            if points.len() >= budget {
                complete = false;
                break;
            }
            cur = self.phi(&cur)?;
        }
        while let Some(z) = queue.pop_front() {
            for y in self.preimages(&z)? {
                if points.contains(&y) {
                    continue;
                }
                if points.len() >= budget {
                    complete = false;
                    break;
                }
                points.insert(y);
                queue.push_back(y);
            }
        }
        Ok(Orbit { points, complete })
    }

    fn walk_budget(&self, depth: usize) -> usize {
        2 * (self.core_len() + depth) + 8
    }

    fn validate_basepoints(&self) -> Result<()> {
        let Carrier::Explicit(m) = &self.carrier else {
            return Ok(());
        };
        let n = m.names.len();
        let budget = self.walk_budget(0);
        let mut seen_base: BTreeMap<IndexKey, IndexKey> = BTreeMap::new();
        for b in &self.basepoints {
            if self.cycle_entry(b, budget)?.is_some() {
                return Err(field(
                    "basepoints",
                    format!("`{}` lies on an orbit with a cycle", self.key_name(b)),
                ));
            }
            let sink = self.orbit_sink(b, budget)?;
            if let Some(other) = seen_base.insert(sink, *b) {
                return Err(field(
                    "basepoints",
                    format!(
                        "`{}` and `{}` share an orbit",
                        self.key_name(&other),
                        self.key_name(b)
                    ),
                ));
            }
        }
        for i in 0..n {
            let x = IndexKey::Node(i as u32);
            if self.cycle_entry(&x, budget)?.is_none() {
                let sink = self.orbit_sink(&x, budget)?;
                if !seen_base.contains_key(&sink) && !self.basepoints.is_empty() {
                    return Err(Error::Unclassifiable(self.key_name(&x)));
                }
            }
        }
        Ok(())
    }

    /// For a cycle-free core orbit the forward orbit leaves the core through a
    /// unique forward chain; its anchor identifies the orbit.
    fn orbit_sink(&self, x: &IndexKey, budget: usize) -> Result<IndexKey> {
        let walk = self.forward_walk(x, budget)?;
        Ok(walk
            .into_iter()
            .find(|k| matches!(k, IndexKey::Up(_, _)))
            .map(|k| match k {
                IndexKey::Up(a, _) => IndexKey::Up(a, 1),
                other => other,
            })
            .unwrap_or(*x))
    }

    /// Steps from `x` to the first point of a cycle, or `None` if no repeat
    /// occurs within `budget` steps.
    fn cycle_entry(&self, x: &IndexKey, budget: usize) -> Result<Option<(usize, bool)>> {
        let walk = self.forward_walk(x, budget)?;
        let mut first_seen: BTreeMap<IndexKey, usize> = BTreeMap::new();
        for (i, k) in walk.iter().enumerate() {
            if let Some(&j) = first_seen.get(k) {
                // walk[j..i] is the cycle; x is on it iff j == 0.
                return Ok(Some((j, j == 0)));
            }
            first_seen.insert(*k, i);
        }
        Ok(None)
    }

    /// `[φ]` on the points of [`keys_to_depth`](Self::keys_to_depth):
    /// zero on cycles and at basepoints, `[φ](φ(x)) = [φ](x) + 1` off cycles.
    /// Values are signed; points feeding into a cycle or a basepoint get
    /// negative generations.
    pub fn generation(&self, depth: usize) -> Result<GenerationTable> {
        let budget = self.walk_budget(depth);
        let base_walks: Vec<BTreeMap<IndexKey, i64>> = self
            .basepoints
            .iter()
            .map(|b| {
                self.forward_walk(b, budget).map(|w| {
                    w.into_iter()
                        .enumerate()
                        .map(|(j, k)| (k, j as i64))
                        .collect()
                })
            })
            .collect::<Result<_>>()?;
        let mut values = BTreeMap::new();
        let mut on_cycle = BTreeSet::new();
        for x in self.keys_to_depth(depth) {
            let value = match self.cycle_entry(&x, budget)? {
                Some((_, true)) => {
                    on_cycle.insert(x);
                    0
                }
                Some((steps, false)) => -(steps as i64),
                None => {
                    let walk = self.forward_walk(&x, budget)?;
                    let mut found = None;
                    'outer: for (i, k) in walk.iter().enumerate() {
                        for bw in &base_walks {
                            if let Some(&j) = bw.get(k) {
                                found = Some(j - i as i64);
                                break 'outer;
                            }
                        }
                    }
                    found.ok_or_else(|| Error::Unclassifiable(self.key_name(&x)))?
                }
            };
            values.insert(x, value);
        }
        Ok(GenerationTable { values, on_cycle })
    }

    /// `Gen_φ(m, n) = {x : m ≤ [φ](x) ≤ n}` over the explored points.
    pub fn gen_range(&self, m: i64, n: i64, depth: usize) -> Result<BTreeSet<IndexKey>> {
        Ok(self
            .generation(depth)?
            .values
            .into_iter()
            .filter(|(_, g)| (m..=n).contains(g))
            .map(|(k, _)| k)
            .collect())
    }
}

impl LocalOperator for SelfMapSystem {
    fn image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        self.preimages(key)?
            .into_iter()
            .map(|y| Ok((y, self.weight(&y)?)))
            .collect()
    }

    fn adjoint_image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        Ok(vec![(self.phi(key)?, self.weight(key)?.conj())])
    }

    fn support_growth(&self) -> usize {
        match &self.carrier {
            Carrier::Tree(t) => t.support_growth() + 1,
            Carrier::Explicit(m) => m.pre.iter().map(Vec::len).max().unwrap_or(0) + 1,
        }
    }
}
