use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use opmodel::config::{model_context, ESpec, RunConfig, System};
use opmodel::dtree::EMode;
use opmodel::scalar::Scalar;
use opmodel::suites::run_config;
use opmodel::{Error, Result};

#[derive(Parser)]
#[command(name = "opmodel", version, about = "Laurent-series models of left-invertible operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a system spec and print a summary.
    Build(Common),
    /// Laurent coefficients of a finitely supported vector.
    Coeffs {
        #[command(flatten)]
        common: Common,
        /// JSON object `{"key": scalar, ...}`, or `@file`.
        #[arg(long)]
        vector: String,
    },
    /// Run verification suites; exits non-zero unless all pass.
    Verify(Common),
    /// Weights, Gram diagonal and Cauchy dual weights.
    Dual(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration document.
    #[arg(long)]
    config: Option<PathBuf>,
    /// System spec (tree or self-map); overrides the config.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Comma-separated suite names; empty selects none.
    #[arg(long)]
    suite: Option<String>,
    /// Window bounds `N-,N+`.
    #[arg(long, value_parser = parse_window)]
    window: Option<[usize; 2]>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `kernel` or `kernel+omega`.
    #[arg(long, value_parser = parse_e_mode)]
    e_mode: Option<EMode>,
}

fn parse_window(s: &str) -> std::result::Result<[usize; 2], String> {
    let (a, b) = s.split_once(',').ok_or("expected N-,N+")?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok([p(a)?, p(b)?])
}

fn parse_e_mode(s: &str) -> std::result::Result<EMode, String> {
    match s {
        "kernel" => Ok(EMode::Kernel),
        "kernel+omega" => Ok(EMode::KernelOmega),
        other => Err(format!("unknown mode `{other}` (kernel | kernel+omega)")),
    }
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.spec) {
            (Some(path), _) => RunConfig::from_path(path)?,
            (None, Some(spec)) => RunConfig::for_spec(spec.clone()),
            (None, None) => return Err(Error::Config("either --config or --spec is required".into())),
        };
        if let Some(spec) = &self.spec {
            cfg.spec = spec.clone();
        }
        if let Some(s) = &self.suite {
            cfg.suites = Some(
                s.split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(String::from)
                    .collect(),
            );
        }
        if let Some(w) = self.window {
            cfg.window = w;
        }
        if let Some(d) = self.depth {
            cfg.depth = d;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(m) = self.e_mode {
            cfg.e = ESpec::Mode(m);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn build(cfg: &RunConfig) -> Result<Value> {
    let system = cfg.load_system()?;
    Ok(match &system {
        System::Tree(t) => {
            let li = t.check_left_invertible(cfg.depth);
            let dim_e = model_context(&system, &cfg.e, cfg.depth, cfg.tol).map(|c| c.dim());
            json!({
                "kind": "tree",
                "rooted": t.is_rooted(),
                "core_vertices": t.core_len(),
                "branching": t.branching_vertices().iter().map(|k| t.key_name(k)).collect::<Vec<_>>(),
                "dim_e": dim_e.as_ref().ok(),
                "e_error": dim_e.err().map(|e| e.to_string()),
                "left_invertible": li.ok,
                "gram_inf": li.inf_d,
                "gram_sup": li.sup_d,
            })
        }
        System::SelfMap(s) => {
            let li = s.check_left_invertible(cfg.depth);
            json!({
                "kind": "selfmap",
                "core_points": s.core_len(),
                "basepoints": s.basepoints().iter().map(|k| s.key_name(k)).collect::<Vec<_>>(),
                "left_invertible": li.ok,
                "gram_inf": li.inf_d,
                "gram_sup": li.sup_d,
            })
        }
    })
}

fn read_vector(arg: &str) -> Result<BTreeMap<String, Scalar>> {
    let text = match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {path}: {e}")))?,
        None => arg.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| Error::Spec {
        field: "vector".into(),
        message: e.to_string(),
    })
}

fn coeffs(cfg: &RunConfig, vector: &str) -> Result<Value> {
    let system = cfg.load_system()?;
    let ctx = model_context(&system, &cfg.e, cfg.depth, cfg.tol)?;
    let x = system.parse_vector(&read_vector(vector)?)?;
    Ok(ctx.analytic_model(&x, cfg.window[0], cfg.window[1])?.to_json())
}

fn dual(cfg: &RunConfig) -> Result<Value> {
    let system = cfg.load_system()?;
    let s = system.as_selfmap();
    let d = s.cauchy_dual_comp()?;
    let mut rows = Vec::new();
    for k in s.keys_to_depth(cfg.depth) {
        let w = s.weight(&k)?;
        let dw = d.weight(&k)?;
        rows.push(json!({
            "key": s.key_name(&k),
            "image": s.key_name(&s.phi(&k)?),
            "weight": [w.re, w.im],
            "gram": s.gram_diagonal_comp(&k)?,
            "dual_weight": [dw.re, dw.im],
        }));
    }
    Ok(json!({ "entries": rows }))
}

fn verify(cfg: &RunConfig) -> Result<(Value, bool)> {
    let report = run_config(cfg)?;
    for r in &report.suites {
        let status = if r.pass { "PASS" } else { "FAIL" };
        match &r.error {
            Some(e) => eprintln!("{status} {:<10} {e}", r.suite),
            None => eprintln!(
                "{status} {:<10} cases={:<4} max_violation={:.3e}",
                r.suite, r.cases, r.max_violation
            ),
        }
    }
    let pass = report.pass;
    Ok((serde_json::to_value(report).expect("serializable"), pass))
}

fn run(cli: Cli) -> Result<bool> {
    let (common, value, pass) = match &cli.command {
        Command::Build(c) => {
            let cfg = c.resolve()?;
            (c, build(&cfg)?, true)
        }
        Command::Coeffs { common, vector } => {
            let cfg = common.resolve()?;
            (common, coeffs(&cfg, vector)?, true)
        }
        Command::Dual(c) => {
            let cfg = c.resolve()?;
            (c, dual(&cfg)?, true)
        }
        Command::Verify(c) => {
            let cfg = c.resolve()?;
            let (v, pass) = verify(&cfg)?;
            emit(&v, cfg.out.as_deref())?;
            return Ok(pass);
        }
    };
    let out = common.resolve()?.out;
    emit(&value, out.as_deref())?;
    Ok(pass)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            println!("{}", json!({"error": e.code(), "message": e.to_string()}));
            ExitCode::from(2)
        }
    }
}
