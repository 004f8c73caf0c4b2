//! Run configuration documents and the system/subspace/operator specs they
//! reference.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::compop::SelfMapSystem;
use crate::dtree::{DirectedTreeSystem, EBasis, EMode};
use crate::error::{Error, Result};
use crate::index::{FinVec, IndexKey, LocalOperator, C64};
use crate::laurent::ModelContext;
use crate::linop::{Identity, Polynomial, RankOnePerturbation};
use crate::scalar::Scalar;

pub const MAX_TOL: f64 = 1e-4;

/// Either carrier, as loaded from a spec file.
#[derive(Clone, Debug, PartialEq)]
pub enum System {
    Tree(DirectedTreeSystem),
    SelfMap(SelfMapSystem),
}

impl System {
    /// Tree specs are recognised by their `rooted` field, self-map specs by
    /// `points`.
    pub fn from_json(text: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Spec {
            field: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        if probe.get("points").is_some() {
            SelfMapSystem::from_json(text).map(System::SelfMap)
        } else if probe.get("rooted").is_some() {
            DirectedTreeSystem::from_json(text).map(System::Tree)
        } else {
            Err(Error::Spec {
                field: "<root>".into(),
                message: "expected a tree spec (`rooted`, `vertices`) or a self-map spec (`points`)".into(),
            })
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn tree(&self) -> Result<&DirectedTreeSystem> {
        match self {
            System::Tree(t) => Ok(t),
            System::SelfMap(_) => Err(Error::Config("this suite requires a tree spec".into())),
        }
    }

    /// The composition-operator view; trees use `φ = par`, `w = λ`.
    pub fn as_selfmap(&self) -> SelfMapSystem {
        match self {
            System::Tree(t) => SelfMapSystem::from_tree(t),
            System::SelfMap(s) => s.clone(),
        }
    }

    pub fn parse_key(&self, text: &str) -> Result<IndexKey> {
        match self {
            System::Tree(t) => t.parse_key(text),
            System::SelfMap(s) => s.parse_key(text),
        }
    }

    pub fn key_name(&self, key: &IndexKey) -> String {
        match self {
            System::Tree(t) => t.key_name(key),
            System::SelfMap(s) => s.key_name(key),
        }
    }

    pub fn operator(&self) -> Arc<dyn LocalOperator> {
        match self {
            System::Tree(t) => Arc::new(t.clone()),
            System::SelfMap(s) => Arc::new(s.clone()),
        }
    }

    /// A vector written as `{"key": scalar, …}`.
    pub fn parse_vector(&self, entries: &BTreeMap<String, Scalar>) -> Result<FinVec> {
        let mut out = Vec::new();
        for (k, v) in entries {
            let c = v.value().map_err(|m| Error::Spec {
                field: format!("vector[{k}]"),
                message: m,
            })?;
            out.push((self.parse_key(k)?, c));
        }
        FinVec::from_entries(out)
    }
}

/// How `E` is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ESpec {
    Mode(EMode),
    Atoms { atoms: Vec<BTreeMap<String, Scalar>> },
}

impl Default for ESpec {
    fn default() -> Self {
        ESpec::Mode(EMode::KernelOmega)
    }
}

/// Operators for the commutant suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpSpec {
    Identity,
    /// `Σ coeffs[i]·Tⁱ`.
    Poly { coeffs: Vec<Scalar> },
    /// `I + scale·⟨·, v⟩u`.
    RankOne {
        u: BTreeMap<String, Scalar>,
        v: BTreeMap<String, Scalar>,
        #[serde(default = "one")]
        scale: Scalar,
    },
}

fn one() -> Scalar {
    Scalar::Number(1.0)
}

impl OpSpec {
    pub fn default_set() -> Vec<OpSpec> {
        let n = Scalar::Number;
        vec![
            OpSpec::Identity,
            OpSpec::Poly { coeffs: vec![n(0.0), n(1.0)] },
            OpSpec::Poly { coeffs: vec![n(0.0), n(0.0), n(1.0)] },
            OpSpec::Poly { coeffs: vec![n(0.0), n(2.0), n(0.0), n(1.0)] },
        ]
    }

    pub fn label(&self) -> String {
        match self {
            OpSpec::Identity => "I".into(),
            OpSpec::Poly { coeffs } => {
                let terms: Vec<String> = coeffs
                    .iter()
                    .enumerate()
                    .filter_map(|(i, c)| {
                        let v = c.value().ok()?;
                        (v != C64::default()).then(|| match i {
                            0 => format!("{}", v.re),
                            1 => format!("{}T", v.re),
                            _ => format!("{}T^{i}", v.re),
                        })
                    })
                    .collect();
                if terms.is_empty() {
                    "0".into()
                } else {
                    terms.join("+")
                }
            }
            OpSpec::RankOne { .. } => "I+uv*".into(),
        }
    }

    pub fn build(&self, system: &System) -> Result<Arc<dyn LocalOperator>> {
        let value = |s: &Scalar, f: &str| {
            s.value().map_err(|m| Error::Spec {
                field: f.into(),
                message: m,
            })
        };
        Ok(match self {
            OpSpec::Identity => Arc::new(Identity),
            OpSpec::Poly { coeffs } => Arc::new(Polynomial::new(
                system.operator(),
                coeffs
                    .iter()
                    .map(|c| value(c, "commutant.coeffs"))
                    .collect::<Result<_>>()?,
            )),
            OpSpec::RankOne { u, v, scale } => Arc::new(RankOnePerturbation::new(
                Arc::new(Identity),
                system.parse_vector(u)?,
                system.parse_vector(v)?,
                value(scale, "commutant.scale")?,
            )),
        })
    }
}

/// A run configuration document. Relative paths are resolved against the
/// directory of the document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec: PathBuf,
    #[serde(default)]
    pub e: ESpec,
    #[serde(default = "default_window")]
    pub window: [usize; 2],
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Absent means every suite; an empty list gives an empty report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suites: Option<Vec<String>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commutant: Option<Vec<OpSpec>>,
    #[serde(default = "default_cases")]
    pub cases: usize,
    /// Error code a negative control is expected to produce.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_error: Option<String>,
}

fn default_window() -> [usize; 2] {
    [10, 10]
}
fn default_depth() -> usize {
    4
}
fn default_tol() -> f64 {
    crate::laurent::DEFAULT_TOL
}
fn default_cases() -> usize {
    20
}

impl RunConfig {
    pub fn for_spec(spec: PathBuf) -> Self {
        Self {
            spec,
            e: ESpec::default(),
            window: default_window(),
            depth: default_depth(),
            tol: default_tol(),
            suites: None,
            seed: 0,
            out: None,
            commutant: None,
            cases: default_cases(),
            expected_error: None,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Spec {
            field: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.spec.is_relative() {
            cfg.spec = base.join(&cfg.spec);
        }
        if let Some(out) = &cfg.out {
            if out.is_relative() {
                cfg.out = Some(base.join(out));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= MAX_TOL) {
            return Err(Error::Config(format!("tolerance {} outside (0, {MAX_TOL}]", self.tol)));
        }
        if self.window[0] == 0 {
            return Err(Error::Config("the negative window bound must be at least 1".into()));
        }
        if !self.spec.exists() {
            return Err(Error::Config(format!("spec file {} does not exist", self.spec.display())));
        }
        for s in self.suites.iter().flatten() {
            if !crate::suites::SUITES.contains(&s.as_str()) {
                return Err(Error::Config(format!(
                    "unknown suite `{s}` (known: {})",
                    crate::suites::SUITES.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn load_system(&self) -> Result<System> {
        System::from_path(&self.spec)
    }

    pub fn selected_suites(&self) -> Vec<String> {
        self.suites
            .clone()
            .unwrap_or_else(|| crate::suites::SUITES.iter().map(|s| s.to_string()).collect())
    }

    pub fn commutant_ops(&self) -> Vec<OpSpec> {
        self.commutant.clone().unwrap_or_else(OpSpec::default_set)
    }
}

/// The model context for a tree system and a choice of `E`.
pub fn model_context(system: &System, e: &ESpec, depth: usize, tol: f64) -> Result<ModelContext> {
    let tree = system.tree()?;
    let ctx = match e {
        ESpec::Mode(mode) => ModelContext::for_tree(tree, *mode, depth)?,
        ESpec::Atoms { atoms } => {
            let atoms = atoms
                .iter()
                .map(|a| system.parse_vector(a))
                .collect::<Result<Vec<_>>>()?;
            ModelContext::for_tree_with_basis(tree, EBasis::from_atoms(atoms)?)?
        }
    };
    Ok(ctx.with_tol(tol))
}
