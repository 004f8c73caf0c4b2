//! Verification suites shared by the command line tool and the test targets.
//!
//! The `*_deviation` functions check one system or one vector and return a
//! relative deviation; the `run_*` functions wrap them into [`SuiteReport`]s.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::compop::SelfMapSystem;
use crate::config::{model_context, ESpec, OpSpec, System};
use crate::dtree::{DirectedTreeSystem, EMode};
use crate::error::{Error, Result};
use crate::index::{apply_power, FinVec, IndexKey, LocalOperator, C64};
use crate::laurent::{LaurentWindow, ModelContext};
use crate::mult::{
    check_commutant, fejer, mult_apply, spanning_vectors, tree_gamma_apply, tree_mult_expand, MultiplierSeq,
    MAX_EXACT_WINDOW,
};
use crate::oracle::{dense_cauchy_dual, from_dense, null_space, subspace_distance, to_dense, NULL_TOL};
use crate::sample;

pub const SUITES: [&str; 8] = ["podst", "cdcom", "ker", "model", "wla", "commutant", "gamma", "fejer"];

/// Tolerance for the bidual round trip.
pub const FORMULA_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: usize,
    pub max_violation: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl SuiteReport {
    fn new(suite: &str, cases: usize, max_violation: f64, tol: f64, details: Value) -> Self {
        Self {
            suite: suite.into(),
            cases,
            max_violation,
            pass: max_violation <= tol,
            error_code: None,
            error: None,
            details,
        }
    }

    fn failed(suite: &str, err: &Error) -> Self {
        Self {
            suite: suite.into(),
            cases: 0,
            max_violation: f64::INFINITY,
            pass: false,
            error_code: Some(err.code().into()),
            error: Some(err.to_string()),
            details: Value::Null,
        }
    }
}

/// Parameters of a verification run.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteParams {
    pub depth: usize,
    pub window: [usize; 2],
    pub tol: f64,
    pub seed: u64,
    pub cases: usize,
    pub e: ESpec,
    pub commutant: Vec<OpSpec>,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            depth: 4,
            window: [10, 10],
            tol: crate::laurent::DEFAULT_TOL,
            seed: 0,
            cases: 20,
            e: ESpec::default(),
            commutant: OpSpec::default_set(),
        }
    }
}

impl From<&crate::config::RunConfig> for SuiteParams {
    fn from(c: &crate::config::RunConfig) -> Self {
        Self {
            depth: c.depth,
            window: c.window,
            tol: c.tol,
            seed: c.seed,
            cases: c.cases,
            e: c.e.clone(),
            commutant: c.commutant_ops(),
        }
    }
}

pub fn run_suite(name: &str, system: &System, p: &SuiteParams) -> SuiteReport {
    let out = match name {
        "podst" => run_podst(system, p),
        "cdcom" => run_cdcom(system, p),
        "ker" => run_ker(system, p),
        "model" => run_model(system, p),
        "wla" => run_wla(system, p),
        "commutant" => run_commutant(system, p),
        "gamma" => run_gamma(system, p),
        "fejer" => run_fejer(system, p),
        other => Err(Error::Config(format!("unknown suite `{other}`"))),
    };
    out.unwrap_or_else(|e| SuiteReport::failed(name, &e))
}

/// The report of a whole run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub spec: String,
    pub seed: u64,
    pub tol: f64,
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
}

/// Runs the selected suites of a configuration concurrently, one thread per
/// suite; reports come back in selection order.
pub fn run_config(cfg: &crate::config::RunConfig) -> Result<VerifyReport> {
    let system = cfg.load_system()?;
    let params = SuiteParams::from(cfg);
    let names = cfg.selected_suites();
    let suites: Vec<SuiteReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = names
            .iter()
            .map(|n| {
                let (system, params) = (&system, &params);
                scope.spawn(move || run_suite(n, system, params))
            })
            .collect();
        handles
            .into_iter()
            .zip(&names)
            .map(|(h, n)| {
                h.join().unwrap_or_else(|_| SuiteReport {
                    suite: n.clone(),
                    cases: 0,
                    max_violation: f64::INFINITY,
                    pass: false,
                    error_code: Some("panic".into()),
                    error: Some("suite panicked".into()),
                    details: Value::Null,
                })
            })
            .collect()
    });
    Ok(VerifyReport {
        spec: cfg.spec.display().to_string(),
        seed: cfg.seed,
        tol: cfg.tol,
        pass: suites.iter().all(|r| r.pass),
        suites,
    })
}

fn rel(dev: f64, scale: f64) -> f64 {
    dev / scale.max(1.0)
}

/// The matrix `M[x, φ(x)] = w(x)`, built from the point map alone.
pub fn definition_matrix(s: &SelfMapSystem, rows: &[IndexKey], cols: &[IndexKey]) -> Result<DMatrix<C64>> {
    let col_of: BTreeMap<IndexKey, usize> = cols.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (i, x) in rows.iter().enumerate() {
        if let Some(&j) = col_of.get(&s.phi(x)?) {
            m[(i, j)] = s.weight(x)?;
        }
    }
    Ok(m)
}

/// Largest relative deviation of `C*e_y`, `C*ⁿe_y`, `Cⁿe_y` (`n ≤ n_max`)
/// and `C*Ce_y = d(y)e_y` from the definition matrix, over the keys of the
/// given depth.
pub fn podst_deviation(s: &SelfMapSystem, depth: usize, n_max: usize) -> Result<f64> {
    let window = s.keys_to_depth(depth + n_max + 1);
    let m = definition_matrix(s, &window, &window)?;
    let mh = m.adjoint();
    let pos: BTreeMap<IndexKey, usize> = window.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut worst = 0.0f64;
    let mut cmp = |formula: &FinVec, dense: &DVector<C64>| -> Result<()> {
        let d = from_dense(dense, &window)?;
        worst = worst.max(rel(formula.distance(&d), formula.norm()));
        Ok(())
    };
    for y in s.keys_to_depth(depth) {
        let mut e = DVector::zeros(window.len());
        e[pos[&y]] = C64::new(1.0, 0.0);
        cmp(&s.adjoint_apply(&FinVec::basis(y))?, &(&mh * &e))?;
        let (mut up, mut down) = (e.clone(), e.clone());
        for n in 1..=n_max {
            down = &mh * &down;
            up = &m * &up;
            cmp(&s.comp_adjoint_power(&y, n)?, &down)?;
            cmp(&s.comp_power(&y, n)?, &up)?;
        }
        let d = s.gram_diagonal_comp(&y)?;
        cmp(&FinVec::basis(y).scale(C64::new(d, 0.0)), &(&mh * (&m * &e)))?;
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualDeviation {
    /// Formula dual against `M(M*M)⁻¹` on the complete columns.
    pub dual: f64,
    /// `(C′)′` against `C`, weights.
    pub bidual: f64,
    pub compared_columns: usize,
    pub frontier_columns: usize,
}

pub fn cdcom_deviation(s: &SelfMapSystem, depth: usize) -> Result<DualDeviation> {
    let li = s.check_left_invertible(depth + 1);
    if !li.ok {
        return Err(Error::NotLeftInvertible { inf_d: li.inf_d });
    }
    let dual = s.cauchy_dual_comp()?;
    let rows = s.keys_to_depth(depth + 1);
    let cols = s.keys_to_depth(depth);
    let dense = dense_cauchy_dual(&definition_matrix(s, &rows, &cols)?)?;
    let formula = definition_matrix(&dual, &rows, &cols)?;
    let in_rows: std::collections::BTreeSet<IndexKey> = rows.iter().copied().collect();
    let (mut worst, mut compared, mut frontier) = (0.0f64, 0, 0);
    for (j, y) in cols.iter().enumerate() {
        if !s.preimages(y)?.iter().all(|x| in_rows.contains(x)) {
            frontier += 1;
            continue;
        }
        compared += 1;
        let a = formula.column(j);
        let b = dense.column(j);
        worst = worst.max(rel((a - b).camax(), a.camax()));
    }
    let bi = dual.cauchy_dual_comp()?;
    let mut bidual = 0.0f64;
    for x in &cols {
        let w = s.weight(x)?;
        bidual = bidual.max(rel((bi.weight(x)? - w).norm(), w.norm()));
    }
    Ok(DualDeviation {
        dual: worst,
        bidual,
        compared_columns: compared,
        frontier_columns: frontier,
    })
}

/// Agreement of the tree dual weights with the composition-operator dual of
/// the same tree.
pub fn tree_dual_agreement(t: &DirectedTreeSystem, depth: usize) -> Result<f64> {
    let td = t.cauchy_dual_shift()?;
    let cd = SelfMapSystem::from_tree(t).cauchy_dual_comp()?;
    let mut worst = 0.0f64;
    for k in t.keys_to_depth(depth) {
        let a = td.weight(&k)?.unwrap_or_default();
        worst = worst.max(rel((a - cd.weight(&k)?).norm(), a.norm()));
    }
    Ok(worst)
}

/// Distance between the numerical null space of the dense `S*` and the
/// kernel atoms, on a window two levels below the deepest branching vertex.
pub fn ker_distance(t: &DirectedTreeSystem) -> Result<f64> {
    let mut d = 0i64;
    for v in t.branching_vertices() {
        d = d.max(t.level(&v)?);
    }
    let depth = (d + 2) as usize;
    let rows = t.keys_to_depth(depth + 1);
    let cols = t.keys_to_depth(depth);
    let row_of: BTreeMap<IndexKey, usize> = rows.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut adj = DMatrix::<C64>::zeros(rows.len(), cols.len());
    for (j, k) in cols.iter().enumerate() {
        for (r, a) in t.adjoint_image(k)? {
            let i = *row_of.get(&r).ok_or_else(|| Error::UnknownKey(t.key_name(&r)))?;
            adj[(i, j)] += a;
        }
    }
    let numeric = null_space(&adj, NULL_TOL);
    let atoms = t.e_basis(EMode::Kernel, depth)?;
    let mut formula = DMatrix::<C64>::zeros(cols.len(), atoms.dim());
    for (j, a) in atoms.atoms().iter().enumerate() {
        formula.set_column(j, &to_dense(a, &cols));
    }
    Ok(subspace_distance(&numeric, &formula))
}

/// Intertwining `U T x = ℳ_z U x` and `𝓛 ℳ_z = I` for one vector, both
/// relative to the largest coefficient.
pub fn model_deviation(ctx: &ModelContext, x: &FinVec, window: [usize; 2]) -> Result<(f64, f64)> {
    let w = ctx.analytic_model(x, window[0], window[1])?;
    let moved = ctx.analytic_model(&ctx.apply_t(x)?, window[0], window[1])?;
    let scale = w.max_coeff_norm();
    let mut inter = 0.0f64;
    for n in w.lo() + 1..=w.hi() {
        inter = inter.max((moved.coeff(n).unwrap() - w.coeff(n - 1).unwrap()).norm());
    }
    let back = ctx.ell_apply(&ctx.mz_apply(&w)?)?;
    Ok((rel(inter, scale), rel(back.max_coeff_diff(&w), scale)))
}

/// The smallest exact window for `x`.
pub fn exact_window(ctx: &ModelContext, x: &FinVec) -> Result<LaurentWindow> {
    let w = ctx.exact_model(x, MAX_EXACT_WINDOW)?;
    if w.is_exact() {
        Ok(w)
    } else {
        Err(Error::InexactWindow)
    }
}

/// Largest difference over the indices both windows hold.
pub fn common_coeff_diff(a: &LaurentWindow, b: &LaurentWindow) -> f64 {
    a.indices()
        .filter_map(|n| Some((a.coeff(n)? - b.coeff(n)?).norm()))
        .fold(0.0, f64::max)
}

/// `M_{χ_n}` against `Tⁿ` and iterated `ℳ_z`, for `0 ≤ n ≤ n_max`.
pub fn wla_forward_deviation(ctx: &ModelContext, x: &FinVec, n_max: usize) -> Result<f64> {
    let f = exact_window(ctx, x)?;
    let mut iterated = f.clone();
    let mut tx = x.clone();
    let mut worst = 0.0f64;
    for n in 0..=n_max {
        if n > 0 {
            iterated = ctx.mz_apply(&iterated)?;
            tx = ctx.apply_t(&tx)?;
        }
        let g = mult_apply(ctx, &MultiplierSeq::delta(ctx.dim(), n as i64, C64::new(1.0, 0.0)), &f)?;
        worst = worst
            .max(rel(g.window.preimage.distance(&tx), tx.norm()))
            .max(rel(common_coeff_diff(&g.window, &iterated), f.max_coeff_norm()));
    }
    Ok(worst)
}

/// `M_{χ_{−s}}` applied to `Tˢy` must give back `y`.
pub fn wla_backward_deviation(ctx: &ModelContext, y: &FinVec, s: usize) -> Result<f64> {
    let x = apply_power(ctx.t().as_ref(), y, s, false)?;
    let f = exact_window(ctx, &x)?;
    let g = mult_apply(ctx, &MultiplierSeq::delta(ctx.dim(), -(s as i64), C64::new(1.0, 0.0)), &f)?;
    Ok(rel(g.window.preimage.distance(y), y.norm()))
}

/// Commutation `M_a ℳ_z = ℳ_z M_a` and the homomorphism
/// `M_a M_b = M_{a*b}` on one vector, relative deviations.
pub fn wla_pair_deviation(
    ctx: &ModelContext,
    a: &MultiplierSeq,
    b: &MultiplierSeq,
    x: &FinVec,
) -> Result<(f64, f64)> {
    let f = exact_window(ctx, x)?;
    let zf = exact_window(ctx, &ctx.apply_t(x)?)?;
    let lhs = mult_apply(ctx, a, &zf)?.window;
    let af = mult_apply(ctx, a, &f)?.window;
    let rhs = exact_window(ctx, &ctx.apply_t(&af.preimage)?)?;
    let comm = rel(common_coeff_diff(&lhs, &rhs), lhs.max_coeff_norm());

    let bf = exact_window(ctx, &mult_apply(ctx, b, &f)?.window.preimage)?;
    let abf = mult_apply(ctx, a, &bf)?.window;
    let target = crate::mult::convolve_window(&crate::mult::convolve(a, b)?, &f)?;
    let mut hom = 0.0f64;
    for n in abf.indices() {
        if let Ok(t) = target.get(n) {
            hom = hom.max((abf.coeff(n).unwrap() - t).norm());
        }
    }
    Ok((comm, rel(hom, abf.max_coeff_norm())))
}

/// `Γ f` against `Σ a(k)Sᵏf`; zero when the two agree bit for bit.
pub fn gamma_deviation(t: &DirectedTreeSystem, a: &MultiplierSeq, f: &FinVec) -> Result<f64> {
    let gamma = tree_gamma_apply(t, a, f)?;
    let mut sum = FinVec::with_budget(f.max_support());
    for (k, m) in a.iter() {
        sum = sum.axpy(m[(0, 0)], &apply_power(t, f, k as usize, false)?)?;
    }
    Ok(gamma.max_abs_diff(&sum))
}

/// The closed-form tree expansion against the least-squares multiplier.
pub fn expand_deviation(ctx: &ModelContext, t: &DirectedTreeSystem, a: &MultiplierSeq, f: &FinVec) -> Result<f64> {
    let h = tree_mult_expand(t, a, f)?;
    let values: Vec<(i64, C64)> = a.iter().map(|(n, m)| (n, m[(0, 0)])).collect();
    let g = mult_apply(ctx, &MultiplierSeq::scalar(ctx.dim(), &values), &exact_window(ctx, f)?)?;
    Ok(rel(h.distance(&g.window.preimage), h.norm()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FejerTrace {
    pub support_radius: usize,
    /// `‖M_{p_n·a} f − M_a f‖` for `n = 0, 1, …`.
    pub errors: Vec<f64>,
    pub monotone_violation: f64,
    /// Spread of `(n+1)·error_n` over `n ≥ R`.
    pub harmonic_violation: f64,
    /// Largest `error_n` over `n ≥ R`.
    pub tail_error: f64,
}

/// Fejér means of a scalar multiplier applied to `x`, for `n ≤ n_max`.
pub fn fejer_trace(ctx: &ModelContext, a: &MultiplierSeq, x: &FinVec, n_max: usize) -> Result<FejerTrace> {
    let values: Vec<(i64, C64)> = a.iter().map(|(n, m)| (n, m[(0, 0)])).collect();
    let full = MultiplierSeq::scalar(ctx.dim(), &values);
    let f = exact_window(ctx, x)?;
    let reference = mult_apply(ctx, &full, &f)?.window.preimage;
    let mut errors = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let g = mult_apply(ctx, &full.smooth(&fejer(n))?, &f)?;
        errors.push(g.window.preimage.distance(&reference));
    }
    let r = a.support_radius();
    let scale = reference.norm().max(1.0);
    let monotone_violation = errors
        .windows(2)
        .map(|w| (w[1] - w[0]).max(0.0))
        .fold(0.0, f64::max)
        / scale;
    let tail: Vec<(usize, f64)> = errors.iter().copied().enumerate().skip(r).collect();
    let harmonic_violation = match tail.first() {
        Some(&(n0, e0)) => {
            let c = (n0 as f64 + 1.0) * e0;
            tail.iter()
                .map(|&(n, e)| ((n as f64 + 1.0) * e - c).abs())
                .fold(0.0, f64::max)
                / scale
        }
        None => 0.0,
    };
    let tail_error = tail.iter().map(|p| p.1).fold(0.0, f64::max) / scale;
    Ok(FejerTrace {
        support_radius: r,
        errors,
        monotone_violation,
        harmonic_violation,
        tail_error,
    })
}

fn context(system: &System, p: &SuiteParams) -> Result<ModelContext> {
    model_context(system, &p.e, p.depth, p.tol)
}

/// `Tˢ` applied to a random vector on the levels `[lo, 3]` of the tree.
fn sample_range_vector(t: &DirectedTreeSystem, rng: &mut sample::SampleRng, s: usize) -> Result<FinVec> {
    let keys: Vec<IndexKey> = t
        .keys_to_depth(3)
        .into_iter()
        .filter(|k| t.level(k).map(|l| l >= 0).unwrap_or(false))
        .collect();
    let y = sample::random_vector(rng, &keys, 4)?;
    apply_power(t, &y, s, false)
}

fn run_podst(system: &System, p: &SuiteParams) -> Result<SuiteReport> {
    let s = system.as_selfmap();
    let dev = podst_deviation(&s, p.depth, 4)?;
    Ok(SuiteReport::new(
        "podst",
        s.keys_to_depth(p.depth).len(),
        dev,
        p.tol,
        Value::Null,
    ))
}

fn run_cdcom(system: &System, p: &SuiteParams) -> Result<SuiteReport> {
    let s = system.as_selfmap();
    let d = cdcom_deviation(&s, p.depth)?;
    let mut worst = d.dual;
    let mut details = json!({
        "dual": d.dual,
        "bidual": d.bidual,
        "compared_columns": d.compared_columns,
        "frontier_columns": d.frontier_columns,
    });
    if let System::Tree(t) = system {
        let agree = tree_dual_agreement(t, p.depth)?;
        worst = worst.max(agree);
        details["tree_agreement"] = json!(agree);
    }
    let mut report = SuiteReport::new("cdcom", d.compared_columns, worst.max(d.bidual), p.tol, details);
    report.pass = worst <= p.tol && d.bidual <= FORMULA_TOL;
    Ok(report)
}

fn run_ker(system: &System, _p: &SuiteParams) -> Result<SuiteReport> {
    let t = system.tree()?;
    let d = ker_distance(t)?;
    Ok(SuiteReport::new("ker", 1, d, NULL_TOL, Value::Null))
}

fn run_model(system: &System, p: &SuiteParams) -> Result<SuiteReport> {
    let ctx = context(system, p)?;
    let prep = ctx.check_prep(p.depth)?;
    if !prep.pass {
        return Err(Error::Hypothesis {
            check: prep.check,
            max_violation: prep.max_violation,
        });
    }
    let t = system.tree()?;
    let mut tests: Vec<FinVec> = t.keys_to_depth(p.depth).into_iter().map(FinVec::basis).collect();
    let mut rng = sample::rng(p.seed);
    let keys = t.keys_to_depth(p.depth);
    for _ in 0..p.cases {
        tests.push(sample::random_vector(&mut rng, &keys, 4)?);
    }
    let (mut inter, mut back) = (0.0f64, 0.0f64);
    for x in &tests {
        let (i, b) = model_deviation(&ctx, x, p.window)?;
        inter = inter.max(i);
        back = back.max(b);
    }
    Ok(SuiteReport::new(
        "model",
        tests.len(),
        inter.max(back),
        p.tol,
        json!({"intertwining": inter, "ell_mz": back}),
    ))
}

fn run_wla(system: &System, p: &SuiteParams) -> Result<SuiteReport> {
    let ctx = context(system, p)?;
    let t = system.tree()?;
    let mut rng = sample::rng(p.seed);
    let (mut forward, mut backward, mut comm, mut hom) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut domain_failures = 0usize;
    let mut kernel_atoms = 0usize;
    for e in ctx.e().atoms() {
        forward = forward.max(wla_forward_deviation(&ctx, e, 5)?);
        if ctx.t().adjoint_apply(e)?.norm() <= p.tol {
            kernel_atoms += 1;
            let f = exact_window(&ctx, e)?;
            if let Err(Error::Domain { .. }) =
                mult_apply(&ctx, &MultiplierSeq::delta(ctx.dim(), -1, C64::new(1.0, 0.0)), &f)
            {
                domain_failures += 1;
            }
        }
    }
    for s in 1..=3 {
        let y = sample_range_vector(t, &mut rng, 0)?;
        backward = backward.max(wla_backward_deviation(&ctx, &y, s)?);
    }
    for _ in 0..p.cases {
        let a = sample::random_multiplier(&mut rng, ctx.dim(), -2, 2, 5);
        let b = sample::random_multiplier(&mut rng, ctx.dim(), -2, 2, 5);
        let x = sample_range_vector(t, &mut rng, 4)?;
        let (c, h) = wla_pair_deviation(&ctx, &a, &b, &x)?;
        comm = comm.max(c);
        hom = hom.max(h);
    }
    let worst = forward.max(backward).max(comm).max(hom);
    let mut report = SuiteReport::new(
        "wla",
        p.cases + 3 + ctx.dim(),
        worst,
        p.tol,
        json!({
            "forward": forward,
            "backward": backward,
            "commutation": comm,
            "homomorphism": hom,
            "kernel_atoms": kernel_atoms,
            "kernel_domain_failures": domain_failures,
        }),
    );
    report.pass &= domain_failures == kernel_atoms;
    Ok(report)
}

fn run_commutant(system: &System, p: &SuiteParams) -> Result<SuiteReport> {
    let ctx = context(system, p)?;
    let t = system.tree()?;
    let span = ctx.check_span(&t.keys_to_depth(p.depth), 2 * p.depth + 2)?;
    if !span.pass {
        return Err(Error::Hypothesis {
            check: "span".into(),
            max_violation: span.adjoint_side.max_residual.max(span.dual_side.max_residual),
        });
    }
    let tests = spanning_vectors(&ctx, 20)?;
    let mut worst = 0.0f64;
    let mut per_op = serde_json::Map::new();
    for op in &p.commutant {
        let built = op.build(system)?;
        let r = check_commutant(&ctx, built.as_ref(), &tests, p.depth)?;
        worst = worst.max(r.max_violation);
        per_op.insert(op.label(), json!(r.max_violation));
    }
    Ok(SuiteReport::new(
        "commutant",
        p.commutant.len() * tests.len(),
        worst,
        p.tol,
        Value::Object(per_op),
    ))
}

fn run_gamma(system: &System, p: &SuiteParams) -> Result<SuiteReport> {
    let t = system.tree()?;
    let ctx = context(system, p)?;
    let mut rng = sample::rng(p.seed);
    let (mut gamma, mut expand) = (0.0f64, 0.0f64);
    for _ in 0..p.cases {
        let x = sample_range_vector(t, &mut rng, 0)?;
        if t.is_rooted() {
            let a = sample::random_scalar_multiplier(&mut rng, 0, 4, 3);
            gamma = gamma.max(gamma_deviation(t, &a, &x)?);
        }
        let a = sample::random_scalar_multiplier(&mut rng, -2, 3, 4);
        let s = a.support().map_or(1, |(lo, _)| (-lo).max(1)) as usize;
        let f = apply_power(t, &x, s, false)?;
        expand = expand.max(expand_deviation(&ctx, t, &a, &f)?);
    }
    let mut report = SuiteReport::new(
        "gamma",
        p.cases,
        gamma.max(expand),
        p.tol,
        json!({"gamma": gamma, "expand": expand, "gamma_checked": t.is_rooted()}),
    );
    report.pass &= gamma == 0.0;
    Ok(report)
}

fn run_fejer(system: &System, p: &SuiteParams) -> Result<SuiteReport> {
    let t = system.tree()?;
    let ctx = context(system, p)?;
    let mut rng = sample::rng(p.seed);
    let a = sample::random_scalar_multiplier(&mut rng, -2, 2, 5);
    let e = ctx.e().atoms().first().cloned().ok_or(Error::DependentAtoms)?;
    let x = apply_power(t, &e, 2, false)?;
    let trace = fejer_trace(&ctx, &a, &x, 3 * a.support_radius() + 10)?;
    let worst = trace.monotone_violation.max(trace.harmonic_violation);
    Ok(SuiteReport::new(
        "fejer",
        trace.errors.len(),
        worst,
        p.tol,
        json!({
            "errors": trace.errors,
            "support_radius": trace.support_radius,
            "monotone_violation": trace.monotone_violation,
            "harmonic_violation": trace.harmonic_violation,
            "exact_beyond_radius": trace.tail_error <= p.tol,
        }),
    ))
}
