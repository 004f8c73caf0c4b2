//! One test per acceptance criterion. Each prints a PASS/FAIL line with the
//! measured value and the tolerance before asserting.

use std::path::PathBuf;

use opmodel::config::{RunConfig, System};
use opmodel::dtree::{DirectedTreeSystem, EMode};
use opmodel::index::{apply_power, FinVec, IndexKey, C64};
use opmodel::laurent::ModelContext;
use opmodel::mult::{mult_apply, MultiplierSeq};
use opmodel::sample::{self, SampleRng};
use opmodel::suites::{
    cdcom_deviation, exact_window, expand_deviation, fejer_trace, gamma_deviation, ker_distance, model_deviation,
    podst_deviation, run_suite, wla_backward_deviation, wla_forward_deviation, wla_pair_deviation, SuiteParams,
};
use opmodel::Error;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load_tree(name: &str) -> DirectedTreeSystem {
    match System::from_path(&configs().join("specs").join(name)).unwrap() {
        System::Tree(t) => t,
        System::SelfMap(_) => panic!("{name} is not a tree"),
    }
}

fn report(criterion: &str, what: &str, value: f64, tol: f64) -> bool {
    let ok = value <= tol;
    println!(
        "{} criterion {criterion}: {what}: max {value:.3e} (tol {tol:.0e})",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn report_flag(criterion: &str, what: &str, ok: bool) -> bool {
    println!("{} criterion {criterion}: {what}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn range_vector(t: &DirectedTreeSystem, rng: &mut SampleRng, s: usize) -> FinVec {
    let keys: Vec<IndexKey> = t
        .keys_to_depth(3)
        .into_iter()
        .filter(|k| t.level(k).unwrap() >= 0)
        .collect();
    let y = sample::random_vector(rng, &keys, 4).unwrap();
    apply_power(t, &y, s, false).unwrap()
}

#[test]
fn criterion_1_selfmap_formulas() {
    let mut rng = sample::rng(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let s = sample::random_selfmap(&mut rng, 40).unwrap();
        worst = worst.max(podst_deviation(&s, 4, 4).unwrap());
    }
    assert!(report("1", "200 self-maps, adjoint/powers/Gram vs dense", worst, 1e-10));
}

#[test]
fn criterion_2_cauchy_dual() {
    let mut rng = sample::rng(202);
    let (mut dual, mut bidual) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let (phi, w) = sample::random_map(&mut rng, 40);
        let s = sample::left_invertible_selfmap(&phi, &w, sample::annulus_weight(&mut rng)).unwrap();
        let d = cdcom_deviation(&s, 4).unwrap();
        dual = dual.max(d.dual);
        bidual = bidual.max(d.bidual);
    }
    for i in 0..50 {
        let t = sample::random_tree(&mut rng, i % 2 == 0, 10, 3).unwrap();
        let d = cdcom_deviation(&opmodel::compop::SelfMapSystem::from_tree(&t), 11).unwrap();
        dual = dual.max(d.dual);
        bidual = bidual.max(d.bidual);
    }
    let a = report("2", "250 systems, formula dual vs dense T(T*T)^-1", dual, 1e-10);
    let b = report("2", "bidual returns the weights", bidual, 1e-12);
    assert!(a && b);
}

#[test]
fn criterion_3_kernel_basis() {
    let mut rng = sample::rng(303);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let t = sample::random_tree(&mut rng, true, 10, 3).unwrap();
        worst = worst.max(ker_distance(&t).unwrap());
    }
    assert!(report("3", "50 rooted trees, kernel atoms vs SVD null space", worst, 1e-8));
}

fn model_systems(rng: &mut SampleRng) -> Vec<DirectedTreeSystem> {
    let mut out = vec![load_tree("unilateral.json"), load_tree("bilateral.json")];
    while out.len() < 22 {
        let t = sample::random_tree(rng, out.len() % 2 == 0, 8, 3).unwrap();
        let ctx = ModelContext::for_tree(&t, EMode::KernelOmega, 8).unwrap();
        if ctx.check_prep(8).unwrap().pass {
            out.push(t);
        }
    }
    out
}

#[test]
fn criterion_4_model_intertwining() {
    let mut rng = sample::rng(404);
    let (mut inter, mut back) = (0.0f64, 0.0f64);
    for t in model_systems(&mut rng) {
        let ctx = ModelContext::for_tree(&t, EMode::KernelOmega, 8).unwrap();
        let keys = t.keys_to_depth(4);
        let mut tests: Vec<FinVec> = keys.iter().map(|k| FinVec::basis(*k)).collect();
        for _ in 0..10 {
            tests.push(sample::random_vector(&mut rng, &keys, 5).unwrap());
        }
        for x in &tests {
            let (i, b) = model_deviation(&ctx, x, [10, 10]).unwrap();
            inter = inter.max(i);
            back = back.max(b);
        }
    }
    let a = report("4", "22 systems, coefficient intertwining on |n| <= 10", inter, 1e-10);
    let b = report("4", "ell after mz is the identity on coefficients", back, 1e-12);
    assert!(a && b);
}

#[test]
fn criterion_5_multiplier_algebra() {
    let mut rng = sample::rng(505);
    let mut systems: Vec<(DirectedTreeSystem, EMode)> = vec![
        (load_tree("bilateral.json"), EMode::KernelOmega),
        (load_tree("unilateral.json"), EMode::Kernel),
        (load_tree("ytree.json"), EMode::Kernel),
    ];
    while systems.len() < 10 {
        let t = sample::random_tree(&mut rng, true, 6, 2).unwrap();
        if ModelContext::for_tree(&t, EMode::Kernel, 6).unwrap().dim() <= 3 {
            systems.push((t, EMode::Kernel));
        }
    }
    let (mut forward, mut backward) = (0.0f64, 0.0f64);
    let (mut kernel_vectors, mut domain_signals) = (0, 0);
    for (t, mode) in &systems {
        let ctx = ModelContext::for_tree(t, *mode, 6).unwrap();
        for e in ctx.e().atoms() {
            forward = forward.max(wla_forward_deviation(&ctx, e, 5).unwrap());
            if ctx.t().adjoint_apply(e).unwrap().norm() <= 1e-12 {
                kernel_vectors += 1;
                let f = exact_window(&ctx, e).unwrap();
                let step = MultiplierSeq::delta(ctx.dim(), -1, C64::new(1.0, 0.0));
                if matches!(mult_apply(&ctx, &step, &f), Err(Error::Domain { .. })) {
                    domain_signals += 1;
                }
            }
        }
        for s in 1..=3 {
            let y = range_vector(t, &mut rng, 0);
            backward = backward.max(wla_backward_deviation(&ctx, &y, s).unwrap());
        }
    }
    let (mut comm, mut hom) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let (t, mode) = &systems[i % systems.len()];
        let ctx = ModelContext::for_tree(t, *mode, 6).unwrap();
        let a = sample::random_multiplier(&mut rng, ctx.dim(), -2, 2, 5);
        let b = sample::random_multiplier(&mut rng, ctx.dim(), -2, 2, 5);
        let x = range_vector(t, &mut rng, 4);
        let (c, h) = wla_pair_deviation(&ctx, &a, &b, &x).unwrap();
        comm = comm.max(c);
        hom = hom.max(h);
    }
    let ok = [
        report("5", "shift multipliers equal powers of mz, 0 <= n <= 5", forward, 1e-10),
        report("5", "backward steps recover range vectors", backward, 1e-10),
        report_flag(
            "5",
            &format!("backward step on kernel vectors signals domain ({domain_signals}/{kernel_vectors})"),
            kernel_vectors > 0 && domain_signals == kernel_vectors,
        ),
        report("5", "100 pairs, commutation with mz", comm, 1e-10),
        report("5", "100 pairs, homomorphism", hom, 1e-10),
    ];
    assert!(ok.iter().all(|b| *b));
}

#[test]
fn criterion_6_commutant() {
    let params = SuiteParams::default();
    let mut worst = 0.0f64;
    let mut all = true;
    for name in ["bilateral.json", "unilateral.json", "ytree.json", "branching.json"] {
        let sys = System::Tree(load_tree(name));
        let rep = run_suite("commutant", &sys, &params);
        all &= rep.pass;
        worst = worst.max(rep.max_violation);
    }
    let neg = RunConfig::from_path(&configs().join("negative/non_commuting.json")).unwrap();
    let sys = neg.load_system().unwrap();
    let rep = run_suite("commutant", &sys, &SuiteParams::from(&neg));
    let ok = [
        report("6", "I, T, T^2, T^3+2T on 4 systems, 20 spanning vectors", worst, 1e-10) && all,
        report_flag(
            "6",
            "rank-one perturbation rejected at the commutation precheck",
            !rep.pass && rep.error_code.as_deref() == Some("non_commuting"),
        ),
    ];
    assert!(ok.iter().all(|b| *b));
}

#[test]
fn criterion_7_tree_multipliers() {
    let mut rng = sample::rng(707);
    let (mut gamma, mut expand) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let t = sample::random_tree(&mut rng, true, 8, 3).unwrap();
        let f = range_vector(&t, &mut rng, 0);
        let a = sample::random_scalar_multiplier(&mut rng, 0, 5, 4);
        gamma = gamma.max(gamma_deviation(&t, &a, &f).unwrap());

        let t = if i % 2 == 0 { t } else { sample::random_tree(&mut rng, false, 8, 3).unwrap() };
        let ctx = ModelContext::for_tree(&t, EMode::KernelOmega, 8).unwrap();
        let a = sample::random_scalar_multiplier(&mut rng, -2, 3, 4);
        let s = a.support().map_or(1, |(lo, _)| (-lo).max(1)) as usize;
        let f = range_vector(&t, &mut rng, s);
        expand = expand.max(expand_deviation(&ctx, &t, &a, &f).unwrap());
    }
    let mut monotone = 0.0f64;
    for i in 0..20 {
        let t = sample::random_tree(&mut rng, i % 2 == 0, 8, 3).unwrap();
        let ctx = ModelContext::for_tree(&t, EMode::KernelOmega, 8).unwrap();
        let a = sample::random_scalar_multiplier(&mut rng, -2, 2, 5);
        let x = apply_power(&t, &ctx.e().atoms()[0], 2, false).unwrap();
        monotone = monotone.max(fejer_trace(&ctx, &a, &x, 12).unwrap().monotone_violation);
    }
    let ok = [
        report("7", "50 rooted trees, Gamma equals the power series (exact)", gamma, 0.0),
        report("7", "tree expansion vs least-squares multiplier", expand, 1e-10),
        report("7", "Fejer error is non-increasing", monotone, 1e-12),
    ];
    assert!(ok.iter().all(|b| *b));
}

/// Literal form of the claim that Fejér means coincide with the multiplier
/// once `n` reaches the support radius. The error is `c/(n+1)` with `c > 0`
/// whenever the multiplier has mass off index 0, so this fails.
#[test]
fn criterion_7_fejer_exact_beyond_radius() {
    let t = load_tree("unilateral.json");
    let ctx = ModelContext::for_tree(&t, EMode::Kernel, 4).unwrap();
    let a = MultiplierSeq::scalar(1, &[(-1, C64::new(1.0, 0.0)), (0, C64::new(1.0, 0.0)), (2, C64::new(0.5, 0.0))]);
    let x = apply_power(&t, &ctx.e().atoms()[0], 2, false).unwrap();
    let tr = fejer_trace(&ctx, &a, &x, 3 * a.support_radius() + 10).unwrap();
    println!(
        "INFO criterion 7: (n+1)*error is constant beyond the radius to {:.3e}",
        tr.harmonic_violation
    );
    assert!(report(
        "7",
        "Fejer means equal the multiplier once n >= support radius",
        tr.tail_error,
        1e-10
    ));
}

#[test]
fn criterion_8_negative_controls() {
    let dir = configs().join("negative");
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    entries.sort();
    let mut ok = entries.len() >= 3;
    for path in &entries {
        let cfg = RunConfig::from_path(path).unwrap();
        let expected = cfg.expected_error.clone().expect("negative configs name their error");
        let sys = cfg.load_system().unwrap();
        let params = SuiteParams::from(&cfg);
        let reports: Vec<_> = cfg.selected_suites().iter().map(|s| run_suite(s, &sys, &params)).collect();
        let hit = reports.iter().any(|r| !r.pass && r.error_code.as_deref() == Some(expected.as_str()));
        ok &= report_flag(
            "8",
            &format!("{} fails with `{expected}`", path.file_name().unwrap().to_string_lossy()),
            hit,
        );
    }
    assert!(ok);
}
