use nalgebra::DMatrix;
use proptest::prelude::*;

use opmodel::compop::SelfMapSystem;
use opmodel::dtree::{DirectedTreeSystem, EMode};
use opmodel::index::{apply_power, inner, FinVec, IndexKey, LocalOperator, C64};
use opmodel::laurent::ModelContext;
use opmodel::mult::{convolve, convolve_window, MultiplierSeq};
use opmodel::oracle::{compare_windows, densify, svd_reconstruction_error, DenseWindow};
use opmodel::sample::{self, SampleRng};
use opmodel::suites::{
    cdcom_deviation, exact_window, fejer_trace, gamma_deviation, ker_distance, model_deviation, podst_deviation,
    tree_dual_agreement, wla_pair_deviation,
};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(32)
}

fn tree(seed: u64, rooted: bool) -> (DirectedTreeSystem, SampleRng) {
    let mut rng = sample::rng(seed);
    let t = sample::random_tree(&mut rng, rooted, 6, 3).unwrap();
    (t, rng)
}

fn vector(rng: &mut SampleRng, keys: &[IndexKey]) -> FinVec {
    sample::random_vector(rng, keys, 5).unwrap()
}

const DYADIC: [C64; 8] = [
    C64::new(1.0, 0.0),
    C64::new(-1.0, 0.0),
    C64::new(2.0, 0.0),
    C64::new(0.5, 0.0),
    C64::new(0.0, 1.0),
    C64::new(0.0, -2.0),
    C64::new(-0.5, 0.0),
    C64::new(0.0, 0.5),
];

fn dyadic_map() -> impl Strategy<Value = SelfMapSystem> {
    (1usize..=12)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0..n, n),
                prop::collection::vec(0..DYADIC.len(), n),
            )
        })
        .prop_map(|(phi, w)| {
            let w: Vec<C64> = w.into_iter().map(|i| DYADIC[i]).collect();
            SelfMapSystem::finite(&phi, &w).unwrap()
        })
}

fn int_multiplier(dim: usize) -> impl Strategy<Value = MultiplierSeq> {
    prop::collection::vec((-3i64..=3, prop::collection::vec(-3i32..=3, dim * dim * 2)), 1..4).prop_map(
        move |entries| {
            let mut s = MultiplierSeq::zero(dim);
            for (n, vals) in entries {
                let m = DMatrix::from_fn(dim, dim, |i, j| {
                    let k = 2 * (i * dim + j);
                    C64::new(vals[k] as f64, vals[k + 1] as f64)
                });
                s.set(n, m);
            }
            s
        },
    )
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn adjoint_duality(seed in any::<u64>(), rooted in any::<bool>()) {
        let (t, mut rng) = tree(seed, rooted);
        let keys = t.keys_to_depth(5);
        let dual = t.cauchy_dual_shift().unwrap();
        let s = SelfMapSystem::from_tree(&t);
        let (x, y) = (vector(&mut rng, &keys), vector(&mut rng, &keys));
        let ops: [&dyn LocalOperator; 3] = [&t, &dual, &s];
        for op in ops {
            let lhs = inner(&op.apply(&x).unwrap(), &y);
            let rhs = inner(&x, &op.adjoint_apply(&y).unwrap());
            prop_assert!((lhs - rhs).norm() <= 1e-10 * x.norm() * y.norm());
        }
    }

    #[test]
    fn power_semigroup_is_exact(seed in any::<u64>(), m in 0usize..4, n in 0usize..4) {
        let (t, mut rng) = tree(seed, false);
        let x = vector(&mut rng, &t.keys_to_depth(3));
        for adjoint in [false, true] {
            let once = apply_power(&t, &x, m + n, adjoint).unwrap();
            let twice = apply_power(&t, &apply_power(&t, &x, n, adjoint).unwrap(), m, adjoint).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn kernel_atoms_span_the_null_space(seed in any::<u64>(), rooted in any::<bool>()) {
        let (t, _) = tree(seed, rooted);
        prop_assert!(ker_distance(&t).unwrap() <= 1e-10);
    }

    #[test]
    fn tree_dual_matches_dense(seed in any::<u64>(), rooted in any::<bool>()) {
        let (t, _) = tree(seed, rooted);
        let d = cdcom_deviation(&SelfMapSystem::from_tree(&t), 6).unwrap();
        prop_assert!(d.dual <= 1e-10, "{d:?}");
        prop_assert!(d.bidual <= 1e-12, "{d:?}");
        prop_assert!(tree_dual_agreement(&t, 6).unwrap() <= 1e-12);
        let bi = t.cauchy_dual_shift().unwrap().cauchy_dual_shift().unwrap();
        for k in t.keys_to_depth(6) {
            let (a, b) = (t.weight(&k).unwrap(), bi.weight(&k).unwrap());
            prop_assert!((a.unwrap_or_default() - b.unwrap_or_default()).norm() <= 1e-12);
        }
    }

    #[test]
    fn shift_gram_is_diagonal(seed in any::<u64>(), rooted in any::<bool>()) {
        let (t, _) = tree(seed, rooted);
        for k in t.keys_to_depth(5) {
            let v = t.shift_adjoint_apply(&t.shift_apply(&FinVec::basis(k)).unwrap()).unwrap();
            let d = t.gram_diagonal(&k).unwrap();
            prop_assert!(v.distance(&FinVec::basis(k).scale(C64::new(d, 0.0))) <= 1e-12);
        }
    }

    #[test]
    fn selfmap_formulas_match_dense(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let s = sample::random_selfmap(&mut rng, 40).unwrap();
        prop_assert!(podst_deviation(&s, 4, 4).unwrap() <= 1e-10);
    }

    #[test]
    fn comp_power_semigroup_is_exact(s in dyadic_map(), m in 0usize..4, n in 0usize..4) {
        for x in s.keys_to_depth(0) {
            let direct = s.comp_power(&x, m + n).unwrap();
            let mut two = FinVec::zero();
            for (y, c) in s.comp_power(&x, n).unwrap().iter() {
                two = two.axpy(*c, &s.comp_power(y, m).unwrap()).unwrap();
            }
            prop_assert_eq!(direct.max_abs_diff(&two), 0.0);
        }
    }

    #[test]
    fn generation_steps_by_one(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let (phi, w) = sample::random_map(&mut rng, 20);
        let s = sample::left_invertible_selfmap(&phi, &w, C64::new(1.0, 0.0)).unwrap();
        let table = s.generation(3).unwrap();
        for (x, g) in &table.values {
            if table.on_cycle.contains(x) {
                continue;
            }
            if let Some(h) = table.values.get(&s.phi(x).unwrap()) {
                prop_assert_eq!(*h, g + 1);
            }
        }
    }

    #[test]
    fn model_intertwines(seed in any::<u64>(), rooted in any::<bool>()) {
        let (t, mut rng) = tree(seed, rooted);
        let ctx = ModelContext::for_tree(&t, EMode::KernelOmega, 6).unwrap();
        let x = vector(&mut rng, &t.keys_to_depth(4));
        let (inter, back) = model_deviation(&ctx, &x, [10, 10]).unwrap();
        prop_assert!(inter <= 1e-10);
        prop_assert!(back <= 1e-12);
    }

    #[test]
    fn coefficients_are_continuous(seed in any::<u64>(), rooted in any::<bool>()) {
        let (t, mut rng) = tree(seed, rooted);
        let ctx = ModelContext::for_tree(&t, EMode::KernelOmega, 6).unwrap();
        let keys = t.keys_to_depth(4);
        let (x, z) = (vector(&mut rng, &keys), vector(&mut rng, &keys));
        let li = t.check_left_invertible(8);
        for k in 1..8 {
            let xk = x.axpy(C64::new(0.5f64.powi(k), 0.0), &z).unwrap();
            let gap = xk.distance(&x);
            for n in -4i64..=4 {
                let bound = if n >= 0 {
                    li.inf_d.sqrt().recip().powi(n as i32)
                } else {
                    li.sup_d.sqrt().powi(-n as i32)
                };
                let d = (ctx.model_coeff(&xk, n).unwrap() - ctx.model_coeff(&x, n).unwrap()).norm();
                prop_assert!(d <= bound * gap * (1.0 + 1e-9) + 1e-12);
            }
        }
    }

    #[test]
    fn atoms_are_constant_series(seed in any::<u64>(), rooted in any::<bool>()) {
        let (t, _) = tree(seed, rooted);
        let ctx = ModelContext::for_tree(&t, EMode::KernelOmega, 6).unwrap();
        prop_assert!(ctx.check_prep(6).unwrap().pass);
        for (i, e) in ctx.e().atoms().iter().enumerate() {
            let w = ctx.analytic_model(e, 6, 6).unwrap();
            for n in w.indices() {
                let c = w.coeff(n).unwrap();
                if n == 0 {
                    prop_assert!((c[i] - C64::new(1.0, 0.0)).norm() <= 1e-12);
                    prop_assert!((c.norm() - 1.0).abs() <= 1e-12);
                } else {
                    prop_assert!(c.norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn multipliers_commute_and_compose(seed in any::<u64>()) {
        let (t, mut rng) = tree(seed, true);
        let ctx = ModelContext::for_tree(&t, EMode::Kernel, 6).unwrap();
        let dim = ctx.dim();
        prop_assume!(dim <= 3);
        let a = sample::random_multiplier(&mut rng, dim, -2, 2, 5);
        let b = sample::random_multiplier(&mut rng, dim, -2, 2, 5);
        let y = vector(&mut rng, &t.keys_to_depth(3));
        let x = apply_power(&t, &y, 4, false).unwrap();
        let (comm, hom) = wla_pair_deviation(&ctx, &a, &b, &x).unwrap();
        prop_assert!(comm <= 1e-10 && hom <= 1e-10, "{comm:e} {hom:e}");
    }

    #[test]
    fn convolution_is_associative_and_bilinear(
        a in int_multiplier(2), b in int_multiplier(2), c in int_multiplier(2), k in -3i32..=3,
    ) {
        let left = convolve(&convolve(&a, &b).unwrap(), &c).unwrap();
        let right = convolve(&a, &convolve(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left.max_abs_diff(&right), 0.0);
        let s = C64::new(k as f64, 0.0);
        let lin = convolve(&a.scale(s).add(&b).unwrap(), &c).unwrap();
        let sum = convolve(&a, &c).unwrap().scale(s).add(&convolve(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(lin.max_abs_diff(&sum), 0.0);
    }

    #[test]
    fn nonzero_multipliers_act_nontrivially(seed in any::<u64>(), a in int_multiplier(1)) {
        prop_assume!(!a.is_zero());
        let (t, _) = tree(seed, true);
        let ctx = ModelContext::for_tree(&t, EMode::Kernel, 6).unwrap();
        let a = MultiplierSeq::scalar(ctx.dim(), &a.iter().map(|(n, m)| (n, m[(0, 0)])).collect::<Vec<_>>());
        let hit = ctx.e().atoms().iter().any(|e| {
            let w = convolve_window(&a, &exact_window(&ctx, e).unwrap()).unwrap();
            w.max_norm() > 0.0
        });
        prop_assert!(hit);
    }

    #[test]
    fn gamma_is_the_power_series(seed in any::<u64>()) {
        let (t, mut rng) = tree(seed, true);
        let a = sample::random_scalar_multiplier(&mut rng, 0, 5, 4);
        let f = vector(&mut rng, &t.keys_to_depth(3));
        prop_assert_eq!(gamma_deviation(&t, &a, &f).unwrap(), 0.0);
    }

    #[test]
    fn fejer_error_decreases(seed in any::<u64>(), rooted in any::<bool>()) {
        let (t, mut rng) = tree(seed, rooted);
        let ctx = ModelContext::for_tree(&t, EMode::KernelOmega, 6).unwrap();
        let a = sample::random_scalar_multiplier(&mut rng, -2, 2, 5);
        let x = apply_power(&t, &ctx.e().atoms()[0], 2, false).unwrap();
        let tr = fejer_trace(&ctx, &a, &x, 12).unwrap();
        prop_assert!(tr.monotone_violation <= 1e-12);
        prop_assert!(tr.harmonic_violation <= 1e-10);
    }

    #[test]
    fn svd_reconstructs(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let m = DMatrix::from_fn(rows, cols, |_, _| sample::square_weight(&mut rng));
        prop_assert!(svd_reconstruction_error(&m) <= 1e-10 * m.norm());
    }

    #[test]
    fn frontier_columns_never_count(seed in any::<u64>()) {
        let (t, mut rng) = tree(seed, false);
        let keys = t.keys_to_depth(3);
        let a = densify(&t, &keys).unwrap();
        let mut b: DenseWindow = a.clone();
        for j in 0..b.cols.len() {
            if b.frontier[j] {
                for i in 0..b.rows.len() {
                    b.matrix[(i, j)] += sample::square_weight(&mut rng);
                }
            }
        }
        let rep = compare_windows(&a, &b, 0.0).unwrap();
        prop_assert!(rep.pass);
        prop_assert!(rep.frontier_columns > 0);
    }
}
