//! Weighted shifts on leafless directed trees.
//!
//! A tree is a finite core (vertex list, parent map, ordered child lists)
//! together with one extension rule: every core vertex without core children
//! continues as an infinite non-branching path, and in the rootless case the
//! topmost core vertex continues upward as an infinite ancestor spine. All
//! extension vertices carry the same default weight. Branching is therefore
//! confined to the core and the kernel of `S_λ*` is finite-dimensional.
//!
//! The shift acts by `(S_λ f)(v) = λ_v·f(par(v))`, so `S_λ e_u = Σ_{v∈Chi(u)} λ_v e_v`
//! and `S_λ* e_v = conj(λ_v)·e_{par(v)}` (zero at the root).

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{inner, FinVec, IndexKey, LocalOperator, C64, PRUNE_EPS};
use crate::scalar::{Ident, Scalar};

/// JSON tree-spec document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSpec {
    pub rooted: bool,
    pub vertices: Vec<VertexSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Ident>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    pub id: Ident,
    #[serde(default)]
    pub parent: Option<Ident>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Scalar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionSpec {
    pub weight: Scalar,
}

impl TreeSpec {
    /// A single path `0 → 1 → … → n−1` with the given weights on `1..n`
    /// (rooted) or `0..n` (rootless), continued with weight `ext`.
    pub fn path(rooted: bool, weights: &[C64], ext: C64) -> Self {
        let n = if rooted { weights.len() + 1 } else { weights.len().max(1) };
        let vertices = (0..n)
            .map(|i| {
                let w = if rooted {
                    i.checked_sub(1).map(|j| weights[j])
                } else {
                    weights.get(i).copied()
                };
                VertexSpec {
                    id: Ident::Int(i as i64),
                    parent: i.checked_sub(1).map(|p| Ident::Int(p as i64)),
                    weight: w.map(Scalar::from_c64),
                }
            })
            .collect();
        TreeSpec {
            rooted,
            vertices,
            extension: Some(ExtensionSpec {
                weight: Scalar::from_c64(ext),
            }),
            omega: (!rooted).then_some(Ident::Int(0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeftInvertibility {
    pub ok: bool,
    pub inf_d: f64,
    pub sup_d: f64,
}

/// Which distinguished subspace to build for a tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EMode {
    /// `N(S_λ*)`.
    Kernel,
    /// `⟨e_ω⟩ ⊕ N(S_λ*)`; coincides with `Kernel` on rooted trees.
    #[serde(rename = "kernel+omega")]
    KernelOmega,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectedTreeSystem {
    rooted: bool,
    names: Vec<String>,
    index: BTreeMap<String, u32>,
    parent: Vec<Option<u32>>,
    children: Vec<Vec<u32>>,
    weights: Vec<C64>,
    top: u32,
    omega: u32,
    ext_weight: C64,
    depth: Vec<i64>,
}

fn field(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Spec {
        field: path.into(),
        message: message.into(),
    }
}

fn json_error(e: serde_json::Error) -> Error {
    field(
        format!("line {} column {}", e.line(), e.column()),
        e.to_string(),
    )
}

impl DirectedTreeSystem {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: TreeSpec = serde_json::from_str(text).map_err(json_error)?;
        Self::from_spec(&spec)
    }

    pub fn from_spec(spec: &TreeSpec) -> Result<Self> {
        let n = spec.vertices.len();
        if n == 0 {
            return Err(field("vertices", "at least one vertex is required"));
        }
        let mut names = Vec::with_capacity(n);
        let mut index = BTreeMap::new();
        for (i, v) in spec.vertices.iter().enumerate() {
            let name = v.id.to_string();
            if name.is_empty() || name.contains('<') || name.contains('>') {
                return Err(field(
                    format!("vertices[{i}].id"),
                    "ids must be non-empty and free of `<` and `>`",
                ));
            }
            if index.insert(name.clone(), i as u32).is_some() {
                return Err(field(format!("vertices[{i}].id"), format!("duplicate id `{name}`")));
            }
            names.push(name);
        }

        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for (i, v) in spec.vertices.iter().enumerate() {
            if let Some(p) = &v.parent {
                let p = *index.get(&p.to_string()).ok_or_else(|| {
                    field(format!("vertices[{i}].parent"), format!("unknown parent `{p}`"))
                })?;
                if p as usize == i {
                    return Err(Error::CyclicParent(names[i].clone()));
                }
                parent[i] = Some(p);
                children[p as usize].push(i as u32);
            }
        }

        let tops: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
        // Every vertex must reach the unique top by following parents.
        for (start, name) in names.iter().enumerate() {
            let mut v = start;
            let mut steps = 0;
            while let Some(p) = parent[v] {
                v = p as usize;
                steps += 1;
                if steps > n {
                    return Err(Error::CyclicParent(name.clone()));
                }
            }
        }
        let top = match tops.as_slice() {
            [t] => *t as u32,
            [] => return Err(Error::CyclicParent(names[0].clone())),
            many => {
                return Err(field(
                    "vertices",
                    format!(
                        "expected exactly one vertex without parent, found {} ({})",
                        many.len(),
                        many.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(", ")
                    ),
                ))
            }
        };

        let ext_weight = match &spec.extension {
            Some(ext) => {
                let w = ext.weight.value().map_err(|m| field("extension.weight", m))?;
                if w.norm() <= PRUNE_EPS {
                    return Err(Error::ZeroWeight("extension".into()));
                }
                Some(w)
            }
            None => None,
        };
        if let Some(leaf) = (0..n).find(|&i| children[i].is_empty()) {
            if ext_weight.is_none() {
                return Err(Error::LeafWithoutExtension(names[leaf].clone()));
            }
        }
        let ext_weight = match ext_weight {
            Some(w) => w,
            None if !spec.rooted => {
                return Err(field(
                    "extension",
                    "a rootless tree needs an extension weight for its ancestor spine",
                ))
            }
            // Unreachable in practice: a finite core always has a leaf.
            None => C64::new(1.0, 0.0),
        };

        let mut weights = vec![C64::default(); n];
        for (i, v) in spec.vertices.iter().enumerate() {
            let is_root = spec.rooted && i == top as usize;
            match (&v.weight, is_root) {
                (Some(_), true) => {
                    return Err(field(format!("vertices[{i}].weight"), "the root carries no weight"))
                }
                (None, true) => {}
                (Some(w), false) => {
                    let w = w.value().map_err(|m| field(format!("vertices[{i}].weight"), m))?;
                    if w.norm() <= PRUNE_EPS {
                        return Err(Error::ZeroWeight(names[i].clone()));
                    }
                    weights[i] = w;
                }
                (None, false) => weights[i] = ext_weight,
            }
        }

        let mut depth = vec![0i64; n];
        let mut order = vec![top as usize];
        while let Some(v) = order.pop() {
            for &c in &children[v] {
                depth[c as usize] = depth[v] + 1;
                order.push(c as usize);
            }
        }

        let omega = match (&spec.omega, spec.rooted) {
            (Some(_), true) => return Err(field("omega", "omega applies only to rootless trees")),
            (None, _) => top,
            (Some(id), false) => {
                let w = *index
                    .get(&id.to_string())
                    .ok_or_else(|| field("omega", format!("unknown vertex `{id}`")))?;
                // ω must be an ancestor of (or equal to) every branching vertex.
                for (b, ch) in children.iter().enumerate() {
                    if ch.len() >= 2 {
                        let mut v = b;
                        loop {
                            if v == w as usize {
                                break;
                            }
                            match parent[v] {
                                Some(p) => v = p as usize,
                                None => {
                                    return Err(field(
                                        "omega",
                                        format!(
                                            "`{id}` must lie on the spine above branching vertex `{}`",
                                            names[b]
                                        ),
                                    ))
                                }
                            }
                        }
                    }
                }
                w
            }
        };

        Ok(Self {
            rooted: spec.rooted,
            names,
            index,
            parent,
            children,
            weights,
            top,
            omega,
            ext_weight,
            depth,
        })
    }

    /// Inverse of [`from_spec`](Self::from_spec); weights are written as numbers or pairs.
    pub fn to_spec(&self) -> TreeSpec {
        let vertices = (0..self.names.len())
            .map(|i| VertexSpec {
                id: Ident::Text(self.names[i].clone()),
                parent: self.parent[i].map(|p| Ident::Text(self.names[p as usize].clone())),
                weight: (!(self.rooted && i as u32 == self.top))
                    .then(|| Scalar::from_c64(self.weights[i])),
            })
            .collect();
        TreeSpec {
            rooted: self.rooted,
            vertices,
            extension: Some(ExtensionSpec {
                weight: Scalar::from_c64(self.ext_weight),
            }),
            omega: (!self.rooted).then(|| Ident::Text(self.names[self.omega as usize].clone())),
        }
    }

    pub fn is_rooted(&self) -> bool {
        self.rooted
    }

    pub fn root(&self) -> Option<IndexKey> {
        self.rooted.then_some(IndexKey::Node(self.top))
    }

    /// The base vertex: the root of a rooted tree, ω otherwise.
    pub fn omega(&self) -> IndexKey {
        IndexKey::Node(self.omega)
    }

    pub fn extension_weight(&self) -> C64 {
        self.ext_weight
    }

    pub fn core_len(&self) -> usize {
        self.names.len()
    }

    pub fn core_keys(&self) -> impl Iterator<Item = IndexKey> + '_ {
        (0..self.names.len() as u32).map(IndexKey::Node)
    }

    fn is_frontier(&self, i: u32) -> bool {
        self.children[i as usize].is_empty()
    }

    pub fn contains(&self, key: &IndexKey) -> bool {
        let n = self.names.len() as u32;
        match *key {
            IndexKey::Node(i) => i < n,
            IndexKey::Down(f, j) => f < n && j >= 1 && self.is_frontier(f),
            IndexKey::Up(a, k) => !self.rooted && a == self.top && k >= 1,
        }
    }

    fn check(&self, key: &IndexKey) -> Result<()> {
        if self.contains(key) {
            Ok(())
        } else {
            Err(Error::UnknownKey(key.to_string()))
        }
    }

    pub fn parent(&self, key: &IndexKey) -> Result<Option<IndexKey>> {
        self.check(key)?;
        Ok(match *key {
            IndexKey::Node(i) => match self.parent[i as usize] {
                Some(p) => Some(IndexKey::Node(p)),
                None if self.rooted => None,
                None => Some(IndexKey::Up(self.top, 1)),
            },
            IndexKey::Down(f, 1) => Some(IndexKey::Node(f)),
            IndexKey::Down(f, j) => Some(IndexKey::Down(f, j - 1)),
            IndexKey::Up(a, k) => Some(IndexKey::Up(a, k + 1)),
        })
    }

    /// Children in spec order.
    pub fn children(&self, key: &IndexKey) -> Result<Vec<IndexKey>> {
        self.check(key)?;
        Ok(match *key {
            IndexKey::Node(i) if self.is_frontier(i) => vec![IndexKey::Down(i, 1)],
            IndexKey::Node(i) => self.children[i as usize]
                .iter()
                .map(|&c| IndexKey::Node(c))
                .collect(),
            IndexKey::Down(f, j) => vec![IndexKey::Down(f, j + 1)],
            IndexKey::Up(a, 1) => vec![IndexKey::Node(a)],
            IndexKey::Up(a, k) => vec![IndexKey::Up(a, k - 1)],
        })
    }

    /// `λ_v`, or `None` at the root.
    pub fn weight(&self, key: &IndexKey) -> Result<Option<C64>> {
        self.check(key)?;
        Ok(match *key {
            IndexKey::Node(i) if self.rooted && i == self.top => None,
            IndexKey::Node(i) => Some(self.weights[i as usize]),
            _ => Some(self.ext_weight),
        })
    }

    fn raw_depth(&self, key: &IndexKey) -> i64 {
        match *key {
            IndexKey::Node(i) => self.depth[i as usize],
            IndexKey::Down(f, j) => self.depth[f as usize] + j as i64,
            IndexKey::Up(_, k) => -(k as i64),
        }
    }

    /// Signed distance from the base vertex; `S_λ` raises it by one.
    pub fn level(&self, key: &IndexKey) -> Result<i64> {
        self.check(key)?;
        Ok(self.raw_depth(key) - self.depth[self.omega as usize])
    }

    pub fn key_name(&self, key: &IndexKey) -> String {
        match *key {
            IndexKey::Node(i) => self
                .names
                .get(i as usize)
                .cloned()
                .unwrap_or_else(|| key.to_string()),
            IndexKey::Down(f, j) => format!("{}>{j}", self.names[f as usize]),
            IndexKey::Up(a, k) => format!("{}<{k}", self.names[a as usize]),
        }
    }

    /// Accepts core ids, `id>j` for the `j`-th tail vertex below a frontier
    /// vertex, and `top<k` for the `k`-th spine ancestor of a rootless tree.
    pub fn parse_key(&self, text: &str) -> Result<IndexKey> {
        let text = text.trim();
        let unknown = || Error::UnknownKey(text.to_string());
        let key = if let Some(&i) = self.index.get(text) {
            IndexKey::Node(i)
        } else if let Some((base, j)) = text.rsplit_once('>') {
            let f = *self.index.get(base).ok_or_else(unknown)?;
            IndexKey::Down(f, j.parse().map_err(|_| unknown())?)
        } else if let Some((base, k)) = text.rsplit_once('<') {
            let a = *self.index.get(base).ok_or_else(unknown)?;
            IndexKey::Up(a, k.parse().map_err(|_| unknown())?)
        } else {
            return Err(unknown());
        };
        self.check(&key).map_err(|_| unknown())?;
        Ok(key)
    }

    pub fn branching_vertices(&self) -> Vec<IndexKey> {
        (0..self.names.len())
            .filter(|&i| self.children[i].len() >= 2)
            .map(|i| IndexKey::Node(i as u32))
            .collect()
    }

    /// All vertices whose level lies in `[−depth, depth]`, in depth-first
    /// order with children in spec order.
    pub fn keys_to_depth(&self, depth: usize) -> Vec<IndexKey> {
        let depth = depth as i64;
        let mut start = self.omega();
        for _ in 0..depth {
            match self.parent(&start).expect("valid key") {
                Some(p) => start = p,
                None => break,
            }
        }
        let mut out = Vec::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            out.push(v);
            if self.level(&v).expect("valid key") < depth {
                let ch = self.children(&v).expect("valid key");
                stack.extend(ch.into_iter().rev());
            }
        }
        out
    }

    pub fn shift_apply(&self, f: &FinVec) -> Result<FinVec> {
        self.apply(f)
    }

    pub fn shift_adjoint_apply(&self, f: &FinVec) -> Result<FinVec> {
        self.adjoint_apply(f)
    }

    /// `d(v) = Σ_{u∈Chi(v)} |λ_u|²`, the diagonal of `S_λ*S_λ`.
    pub fn gram_diagonal(&self, key: &IndexKey) -> Result<f64> {
        let mut d = 0.0;
        for c in self.children(key)? {
            d += self.weight(&c)?.unwrap_or_default().norm_sqr();
        }
        Ok(d)
    }

    /// Scans `d(v)` over the window plus the asymptotic value `|λ_ext|²`.
    pub fn check_left_invertible(&self, window_depth: usize) -> LeftInvertibility {
        let asymptotic = self.ext_weight.norm_sqr();
        let mut inf_d = asymptotic;
        let mut sup_d = asymptotic;
        let keys = self.keys_to_depth(window_depth.max(1));
        for k in keys.iter().chain(self.core_keys().collect::<Vec<_>>().iter()) {
            let d = self.gram_diagonal(k).expect("valid key");
            inf_d = inf_d.min(d);
            sup_d = sup_d.max(d);
        }
        LeftInvertibility {
            ok: inf_d > PRUNE_EPS,
            inf_d,
            sup_d,
        }
    }

    /// Orthonormal basis of `ℓ²(Chi(u)) ⊖ ⟨λ^u⟩`, by Gram–Schmidt of the
    /// children's basis vectors (spec order) against `λ^u/‖λ^u‖`.
    fn branching_atoms(&self, u: &IndexKey) -> Result<Vec<FinVec>> {
        let ch = self.children(u)?;
        let lam: Vec<C64> = ch
            .iter()
            .map(|c| self.weight(c).map(|w| w.unwrap_or_default()))
            .collect::<Result<_>>()?;
        let lam_norm = lam.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if lam_norm <= PRUNE_EPS {
            return Err(Error::DegenerateBranching(self.key_name(u)));
        }
        let m = ch.len();
        let mut basis: Vec<DVector<C64>> = vec![DVector::from_iterator(
            m,
            lam.iter().map(|z| z / lam_norm),
        )];
        for j in 0..m {
            if basis.len() == m {
                break;
            }
            let mut v = DVector::<C64>::zeros(m);
            v[j] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dotc(&v);
                    v -= q * c;
                }
            }
            let nv = v.norm();
            if nv > 1e-8 {
                basis.push(v / C64::new(nv, 0.0));
            }
        }
        basis
            .into_iter()
            .skip(1)
            .map(|q| FinVec::from_entries(ch.iter().copied().zip(q.iter().copied())))
            .collect()
    }

    /// Orthonormal basis of `N(S_λ*)`, with `e_ω` added on rootless trees.
    pub fn kernel_adjoint_basis(&self, window_depth: usize) -> Result<EBasis> {
        self.e_basis(EMode::KernelOmega, window_depth)
    }

    pub fn e_basis(&self, mode: EMode, window_depth: usize) -> Result<EBasis> {
        let mut atoms = Vec::new();
        if self.rooted || mode == EMode::KernelOmega {
            atoms.push(FinVec::basis(self.omega()));
        }
        for u in self.branching_vertices() {
            let lvl = self.level(&u)?;
            if lvl >= window_depth as i64 || lvl < -(window_depth as i64) {
                return Err(Error::BranchingOutsideWindow {
                    vertex: self.key_name(&u),
                    depth: window_depth as i64,
                });
            }
            atoms.extend(self.branching_atoms(&u)?);
        }
        Ok(EBasis { atoms })
    }

    /// The Cauchy dual `S_λ(S_λ*S_λ)⁻¹`, again a weighted shift on the same
    /// tree with weights `λ′_v = λ_v / d(par(v))`.
    pub fn cauchy_dual_shift(&self) -> Result<Self> {
        let li = self.check_left_invertible(1);
        if !li.ok {
            return Err(Error::NotLeftInvertible { inf_d: li.inf_d });
        }
        let mut dual = self.clone();
        for i in 0..self.names.len() {
            let key = IndexKey::Node(i as u32);
            if let Some(p) = self.parent(&key)? {
                dual.weights[i] = self.weights[i] / self.gram_diagonal(&p)?;
            }
        }
        dual.ext_weight = self.ext_weight / self.ext_weight.norm_sqr();
        Ok(dual)
    }

    /// `λ_{u|v}`: 1 if `u = v`, otherwise the product of the weights of all
    /// vertices on the path strictly below `u` down to `v`.
    pub fn path_weight(&self, u: &IndexKey, v: &IndexKey) -> Result<C64> {
        self.check(u)?;
        self.check(v)?;
        let target = self.level(u)?;
        let mut prod = C64::new(1.0, 0.0);
        let mut cur = *v;
        while self.level(&cur)? > target {
            prod *= self.weight(&cur)?.expect("non-root vertex below u");
            cur = match self.parent(&cur)? {
                Some(p) => p,
                None => break,
            };
        }
        if cur == *u {
            Ok(prod)
        } else {
            Err(Error::NotDescendant {
                u: self.key_name(u),
                v: self.key_name(v),
            })
        }
    }
}

impl LocalOperator for DirectedTreeSystem {
    fn image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        self.children(key)?
            .into_iter()
            .map(|c| Ok((c, self.weight(&c)?.unwrap_or_default())))
            .collect()
    }

    fn adjoint_image(&self, key: &IndexKey) -> Result<Vec<(IndexKey, C64)>> {
        match (self.parent(key)?, self.weight(key)?) {
            (Some(p), Some(w)) => Ok(vec![(p, w.conj())]),
            _ => Ok(vec![]),
        }
    }

    fn support_growth(&self) -> usize {
        self.children.iter().map(Vec::len).max().unwrap_or(1).max(1)
    }
}

/// Ordered orthonormal atoms spanning the distinguished subspace `E`.
#[derive(Clone, Debug, PartialEq)]
pub struct EBasis {
    atoms: Vec<FinVec>,
}

impl EBasis {
    /// Orthonormalises explicitly given atoms (Gram–Schmidt in the given
    /// order); dependent or empty input is rejected.
    pub fn from_atoms(atoms: Vec<FinVec>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::DependentAtoms);
        }
        let mut out: Vec<FinVec> = Vec::with_capacity(atoms.len());
        for a in atoms {
            let original = a.norm();
            let mut v = a;
            for _ in 0..2 {
                for q in &out {
                    let c = inner(&v, q);
                    v = v.axpy(-c, q)?;
                }
            }
            let nv = v.norm();
            if nv <= 1e-10 * original.max(1.0) {
                return Err(Error::DependentAtoms);
            }
            out.push(v.scale(C64::new(1.0 / nv, 0.0)));
        }
        Ok(Self { atoms: out })
    }

    pub fn dim(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[FinVec] {
        &self.atoms
    }

    /// `(⟨f, a_i⟩)_i`.
    pub fn coords(&self, f: &FinVec) -> DVector<C64> {
        DVector::from_iterator(self.atoms.len(), self.atoms.iter().map(|a| inner(f, a)))
    }

    pub fn from_coords(&self, c: &DVector<C64>) -> Result<FinVec> {
        let mut out = FinVec::zero();
        for (a, z) in self.atoms.iter().zip(c.iter()) {
            out = out.axpy(*z, a)?;
        }
        Ok(out)
    }

    /// `P_E f = Σ ⟨f, a⟩·a`.
    pub fn project(&self, f: &FinVec) -> Result<FinVec> {
        self.from_coords(&self.coords(f))
    }

    /// Largest deviation of the atom Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut m = 0.0f64;
        for (i, a) in self.atoms.iter().enumerate() {
            for (j, b) in self.atoms.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                m = m.max((inner(a, b) - C64::new(target, 0.0)).norm());
            }
        }
        m
    }
}

/// `P_E f`.
pub fn project_e(e: &EBasis, f: &FinVec) -> Result<FinVec> {
    e.project(f)
}
