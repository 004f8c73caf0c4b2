//! Small hand-checkable systems with their expected values.

use std::sync::Arc;

use nalgebra::DMatrix;

use opmodel::compop::SelfMapSystem;
use opmodel::dtree::{DirectedTreeSystem, EMode, TreeSpec};
use opmodel::index::{apply_power, inner, FinVec, IndexKey, LocalOperator, C64};
use opmodel::laurent::ModelContext;
use opmodel::linop::Polynomial;
use opmodel::mult::{
    convolve, fejer, mult_apply, multiplier_of_operator_exact, norm_lower_bound, tree_gamma_apply, tree_mult_expand,
    MultiplierSeq,
};
use opmodel::oracle::{dense_cauchy_dual, densify, null_space, op_norm, subspace_distance, to_dense};

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn close(a: C64, b: C64) -> bool {
    (a - b).norm() <= 1e-12
}

fn ytree() -> DirectedTreeSystem {
    DirectedTreeSystem::from_json(
        r#"{"rooted": true, "vertices": [
            {"id": "root"}, {"id": "a", "parent": "root", "weight": "3/5"},
            {"id": "b", "parent": "root", "weight": "4/5"}],
            "extension": {"weight": 1}}"#,
    )
    .unwrap()
}

fn unilateral() -> DirectedTreeSystem {
    DirectedTreeSystem::from_spec(&TreeSpec::path(true, &[], r(1.0))).unwrap()
}

fn bilateral() -> DirectedTreeSystem {
    DirectedTreeSystem::from_spec(&TreeSpec::path(false, &[r(1.0)], r(1.0))).unwrap()
}

fn key(t: &DirectedTreeSystem, s: &str) -> IndexKey {
    t.parse_key(s).unwrap()
}

fn vec_of(t: &DirectedTreeSystem, entries: &[(&str, C64)]) -> FinVec {
    FinVec::from_entries(entries.iter().map(|(k, c)| (key(t, k), *c))).unwrap()
}

/// `e_k` of the bilateral shift, `k ∈ ℤ`.
fn bi(t: &DirectedTreeSystem, k: i64) -> FinVec {
    let name = match k {
        0 => "0".to_string(),
        k if k > 0 => format!("0>{k}"),
        k => format!("0<{}", -k),
    };
    FinVec::basis(key(t, &name))
}

fn uni(t: &DirectedTreeSystem, k: u32) -> FinVec {
    FinVec::basis(key(t, &if k == 0 { "0".to_string() } else { format!("0>{k}") }))
}

#[test]
fn inner_product_convention() {
    let t = unilateral();
    let x = uni(&t, 0).scale(r(2.0)).add(&uni(&t, 1).scale(C64::new(0.0, 1.0))).unwrap();
    assert_eq!(inner(&x, &uni(&t, 1)), C64::new(0.0, 1.0));
}

#[test]
fn shift_powers() {
    let t = unilateral();
    assert_eq!(apply_power(&t, &uni(&t, 0), 3, false).unwrap(), uni(&t, 3));
    assert_eq!(apply_power(&t, &uni(&t, 3), 2, true).unwrap(), uni(&t, 1));
}

#[test]
fn ytree_shift_and_adjoint() {
    let t = ytree();
    let s = t.shift_apply(&vec_of(&t, &[("root", r(1.0))])).unwrap();
    assert!(s.distance(&vec_of(&t, &[("a", r(0.6)), ("b", r(0.8))])) <= 1e-15);
    let a = t.shift_adjoint_apply(&vec_of(&t, &[("a", r(1.0))])).unwrap();
    assert!(a.distance(&vec_of(&t, &[("root", r(0.6))])) <= 1e-15);
    let k = t.shift_adjoint_apply(&vec_of(&t, &[("a", r(0.8)), ("b", r(-0.6))])).unwrap();
    assert!(k.norm() <= 1e-15);
    assert!((t.gram_diagonal(&key(&t, "root")).unwrap() - 1.0).abs() <= 1e-15);
    let doubled = DirectedTreeSystem::from_spec(&TreeSpec::path(true, &[r(2.0), r(2.0)], r(2.0))).unwrap();
    assert_eq!(doubled.gram_diagonal(&IndexKey::Node(1)).unwrap(), 4.0);
}

#[test]
fn ytree_left_invertibility_and_kernel() {
    let t = ytree();
    let li = t.check_left_invertible(4);
    assert!(li.ok);
    assert!((li.inf_d - 1.0).abs() <= 1e-15);
    // Decay until the Gram diagonal is numerically zero.
    let decaying: Vec<C64> = (1..=30).map(|k| r(0.5f64.powi(k))).collect();
    let bad = DirectedTreeSystem::from_spec(&TreeSpec::path(true, &decaying, r(0.5f64.powi(31)))).unwrap();
    let li = bad.check_left_invertible(32);
    assert!(!li.ok && li.inf_d < 1e-12);

    let e = t.e_basis(EMode::Kernel, 4).unwrap();
    assert_eq!(e.dim(), 2);
    assert_eq!(e.atoms()[0], vec_of(&t, &[("root", r(1.0))]));
    let atom = vec_of(&t, &[("a", r(0.8)), ("b", r(-0.6))]);
    assert!((inner(&e.atoms()[1], &atom).norm() - 1.0).abs() <= 1e-12);

    let p = e.project(&vec_of(&t, &[("a", r(1.0))])).unwrap();
    assert!(p.distance(&atom.scale(r(0.8))) <= 1e-12);

    assert_eq!(bilateral().e_basis(EMode::KernelOmega, 4).unwrap().dim(), 1);
    assert_eq!(bilateral().e_basis(EMode::Kernel, 4).unwrap().dim(), 0);

    // Null space of the dense adjoint on a depth-3 window.
    let keys = t.keys_to_depth(3);
    let adj = densify(&t, &keys).unwrap().matrix.adjoint();
    let interior: Vec<usize> = (0..keys.len()).filter(|&j| t.level(&keys[j]).unwrap() < 3).collect();
    let m = DMatrix::from_fn(keys.len(), interior.len(), |i, j| adj[(i, interior[j])]);
    let sub: Vec<IndexKey> = interior.iter().map(|&j| keys[j]).collect();
    let mut q = DMatrix::zeros(sub.len(), 2);
    for (j, a) in e.atoms().iter().enumerate() {
        q.set_column(j, &to_dense(a, &sub));
    }
    assert!(subspace_distance(&null_space(&m, 1e-10), &q) <= 1e-10);
}

#[test]
fn cauchy_dual_weights() {
    let t = ytree();
    let d = t.cauchy_dual_shift().unwrap();
    assert!(close(d.weight(&key(&t, "a")).unwrap().unwrap(), r(0.6)));
    assert!(close(d.weight(&key(&t, "b")).unwrap().unwrap(), r(0.8)));
    let w = DirectedTreeSystem::from_spec(&TreeSpec::path(true, &[r(2.0), r(4.0)], r(1.0))).unwrap();
    let wd = w.cauchy_dual_shift().unwrap();
    assert!(close(wd.weight(&IndexKey::Node(1)).unwrap().unwrap(), r(0.5)));
    assert!(close(wd.weight(&IndexKey::Node(2)).unwrap().unwrap(), r(0.25)));

    let p = DirectedTreeSystem::from_spec(&TreeSpec::path(true, &[r(2.0), r(3.0), r(5.0)], r(1.0))).unwrap();
    assert_eq!(p.path_weight(&IndexKey::Node(0), &IndexKey::Node(3)).unwrap(), r(30.0));
    assert_eq!(p.path_weight(&IndexKey::Node(2), &IndexKey::Node(2)).unwrap(), r(1.0));

    let m = DMatrix::from_diagonal_element(3, 3, r(2.0));
    assert!((dense_cauchy_dual(&m).unwrap() - DMatrix::from_diagonal_element(3, 3, r(0.5))).norm() <= 1e-15);
}

#[test]
fn swap_composition_operator() {
    let s = SelfMapSystem::finite(&[1, 0], &[r(2.0), r(3.0)]).unwrap();
    let (a, b) = (IndexKey::Node(0), IndexKey::Node(1));
    assert_eq!(s.comp_apply(&FinVec::basis(a)).unwrap(), FinVec::basis(b).scale(r(3.0)));
    assert_eq!(s.comp_apply(&FinVec::basis(b)).unwrap(), FinVec::basis(a).scale(r(2.0)));
    assert_eq!(s.comp_adjoint_power(&a, 2).unwrap(), FinVec::basis(a).scale(r(6.0)));
    assert_eq!(s.gram_diagonal_comp(&a).unwrap(), 9.0);
    assert_eq!(s.gram_diagonal_comp(&b).unwrap(), 4.0);
    let d = s.cauchy_dual_comp().unwrap();
    assert!(close(d.weight(&a).unwrap(), r(0.5)));
    assert!(close(d.weight(&b).unwrap(), r(1.0 / 3.0)));
    let table = s.generation(2).unwrap();
    assert!(table.values.values().all(|g| *g == 0));
}

#[test]
fn ytree_as_composition_operator() {
    let t = ytree();
    let s = SelfMapSystem::from_tree(&t);
    let c2 = s.comp_power(&key(&t, "root"), 2).unwrap();
    let dense = apply_power(&t, &vec_of(&t, &[("root", r(1.0))]), 2, false).unwrap();
    assert!(c2.distance(&dense) <= 1e-15);
    assert_eq!(c2.support_len(), 2);
}

#[test]
fn laurent_coefficients() {
    let t = bilateral();
    let ctx = ModelContext::for_tree(&t, EMode::KernelOmega, 4).unwrap();
    for k in [-3i64, -1, 0, 2, 4] {
        let w = ctx.analytic_model(&bi(&t, k), 6, 6).unwrap();
        for n in w.indices() {
            let expected = if n == k { r(1.0) } else { r(0.0) };
            assert!(close(w.coeff(n).unwrap()[0], expected), "k={k} n={n}");
        }
    }
    let x = bi(&t, 1).add(&bi(&t, -1)).unwrap();
    let w = ctx.analytic_model(&x, 3, 3).unwrap();
    let nz: Vec<i64> = w.indices().filter(|n| w.coeff(*n).unwrap().norm() > 0.5).collect();
    assert_eq!(nz, [-1, 1]);

    let mz = ctx.mz_apply(&ctx.analytic_model(&bi(&t, 0), 3, 3).unwrap()).unwrap();
    assert!(mz.max_coeff_diff(&ctx.analytic_model(&bi(&t, 1), 3, 3).unwrap()) <= 1e-15);
    let ell = ctx.ell_apply(&ctx.analytic_model(&bi(&t, 2), 3, 3).unwrap()).unwrap();
    assert!(ell.max_coeff_diff(&ctx.analytic_model(&bi(&t, 1), 3, 3).unwrap()) <= 1e-15);

    let u = unilateral();
    let uctx = ModelContext::for_tree(&u, EMode::Kernel, 4).unwrap();
    let w = uctx.analytic_model(&uni(&u, 3), 5, 5).unwrap();
    assert!(close(w.coeff(3).unwrap()[0], r(1.0)));
    assert!(w.indices().filter(|n| *n != 3).all(|n| w.coeff(n).unwrap().norm() == 0.0));
    let back = uctx.ell_apply(&uctx.analytic_model(&uni(&u, 0), 3, 3).unwrap()).unwrap();
    assert!(back.is_zero());
}

#[test]
fn hypothesis_checks() {
    let u = unilateral();
    let ctx = ModelContext::for_tree(&u, EMode::Kernel, 4).unwrap();
    assert_eq!(ctx.check_prep(5).unwrap().max_violation, 0.0);
    assert!(ctx.check_incl(5).unwrap().pass);
    let keys: Vec<IndexKey> = (0..10).map(|k| *uni(&u, k).keys().next().unwrap()).collect();
    assert!(ctx.check_span(&keys, 9).unwrap().pass);

    let skew = ModelContext::for_tree_with_basis(
        &u,
        opmodel::dtree::EBasis::from_atoms(vec![uni(&u, 0).add(&uni(&u, 1)).unwrap()]).unwrap(),
    )
    .unwrap();
    let prep = skew.check_prep(3).unwrap();
    assert!(!prep.pass);
    assert!((prep.max_violation - 0.5).abs() <= 1e-12);

    let y = ytree();
    assert!(ModelContext::for_tree(&y, EMode::Kernel, 4).unwrap().check_prep(6).unwrap().pass);
    let b = bilateral();
    assert!(ModelContext::for_tree(&b, EMode::KernelOmega, 4).unwrap().check_incl(6).unwrap().pass);

    let rad = ctx.radius_estimate(&uni(&u, 2), 8).unwrap();
    assert!(!rad.finite_negative || rad.r_minus == 0.0);
    let two = DirectedTreeSystem::from_spec(&TreeSpec::path(true, &[r(2.0); 4], r(2.0))).unwrap();
    let c2 = ModelContext::for_tree(&two, EMode::Kernel, 4).unwrap();
    // Σ_{k≤40} e_k has coefficients 2⁻ⁿ on the positive side.
    let long = FinVec::from_entries((0..=40).map(|k| {
        let name = if k == 0 { "0".to_string() } else if k <= 4 { k.to_string() } else { format!("4>{}", k - 4) };
        (two.parse_key(&name).unwrap(), r(1.0))
    }))
    .unwrap();
    let est = c2.radius_estimate(&long, 16).unwrap();
    assert!((est.r_plus - 2.0).abs() <= 0.1, "{est:?}");
}

#[test]
fn multiplier_values() {
    let a = MultiplierSeq::scalar(1, &[(0, r(1.0)), (1, r(1.0))]);
    let sq = convolve(&a, &a).unwrap();
    assert_eq!(sq, MultiplierSeq::scalar(1, &[(0, r(1.0)), (1, r(2.0)), (2, r(1.0))]));
    let f2 = fejer(2);
    for (m, v) in [(-2, 1.0 / 3.0), (-1, 2.0 / 3.0), (0, 1.0), (1, 2.0 / 3.0), (2, 1.0 / 3.0)] {
        assert!(close(f2.get(m)[(0, 0)], r(v)));
    }
    assert_eq!(f2.get(3)[(0, 0)], r(0.0));

    let t = bilateral();
    let ctx = ModelContext::for_tree(&t, EMode::KernelOmega, 4).unwrap();
    let e0 = ctx.exact_model(&bi(&t, 0), 16).unwrap();
    let g = mult_apply(&ctx, &MultiplierSeq::delta(1, 1, r(1.0)), &e0).unwrap();
    assert!(g.window.preimage.distance(&bi(&t, 1)) <= 1e-12);

    let u = unilateral();
    let uctx = ModelContext::for_tree(&u, EMode::Kernel, 4).unwrap();
    let e = uctx.exact_model(&uni(&u, 0), 16).unwrap();
    assert!(matches!(
        mult_apply(&uctx, &MultiplierSeq::delta(1, -1, r(1.0)), &e),
        Err(opmodel::Error::Domain { .. })
    ));

    let cube = Polynomial::new(Arc::new(t.clone()) as Arc<dyn LocalOperator>, vec![r(0.0), r(2.0), r(0.0), r(1.0)]);
    let phi = multiplier_of_operator_exact(&ctx, &cube).unwrap();
    assert!(phi.max_abs_diff(&MultiplierSeq::scalar(1, &[(1, r(2.0)), (3, r(1.0))])) <= 1e-12);

    assert!((norm_lower_bound(&uctx, &MultiplierSeq::delta(1, 1, r(1.0)), 6).unwrap() - 1.0).abs() <= 1e-12);
    assert!((norm_lower_bound(&uctx, &MultiplierSeq::delta(1, 0, r(2.0)), 6).unwrap() - 2.0).abs() <= 1e-12);
}

#[test]
fn tree_multiplier_values() {
    let y = ytree();
    let a = MultiplierSeq::scalar(1, &[(0, r(1.0)), (1, r(1.0))]);
    let g = tree_gamma_apply(&y, &a, &vec_of(&y, &[("root", r(1.0))])).unwrap();
    assert!(g.distance(&vec_of(&y, &[("root", r(1.0)), ("a", r(0.6)), ("b", r(0.8))])) <= 1e-15);

    let b = bilateral();
    let a = MultiplierSeq::scalar(1, &[(-1, r(1.0)), (1, r(1.0))]);
    let h = tree_mult_expand(&b, &a, &bi(&b, 0)).unwrap();
    assert!(h.distance(&bi(&b, 1).add(&bi(&b, -1)).unwrap()) <= 1e-15);

    let u = unilateral();
    assert!(matches!(
        tree_mult_expand(&u, &MultiplierSeq::delta(1, -1, r(1.0)), &uni(&u, 0)),
        Err(opmodel::Error::NotInRange { .. })
    ));
}

#[test]
fn dense_helpers() {
    let u = unilateral();
    let keys: Vec<IndexKey> = (0..5).map(|k| *uni(&u, k).keys().next().unwrap()).collect();
    let m = densify(&u, &keys).unwrap().matrix;
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(m[(i, j)], if i == j + 1 { r(1.0) } else { r(0.0) });
        }
    }
    assert!((op_norm(&DMatrix::from_diagonal_element(3, 3, r(3.0))) - 3.0).abs() <= 1e-12);
    let uv = DMatrix::from_fn(3, 3, |i, j| r((i + 1) as f64) * r((j as f64) - 1.0));
    let expected = (1.0f64 + 4.0 + 9.0).sqrt() * 2.0f64.sqrt();
    assert!((op_norm(&uv) - expected).abs() <= 1e-12);
}
