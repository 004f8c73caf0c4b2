//! Seeded random systems, vectors and multipliers for the verification
//! suites.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compop::SelfMapSystem;
use crate::dtree::{DirectedTreeSystem, ExtensionSpec, TreeSpec, VertexSpec};
use crate::error::Result;
use crate::index::{FinVec, IndexKey, C64};
use crate::mult::MultiplierSeq;
use crate::scalar::{Ident, Scalar};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in the square `[−2, 2]²`.
pub fn square_weight(rng: &mut SampleRng) -> C64 {
    C64::new(rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0))
}

/// Modulus uniform in `[0.3, 2]`, uniform phase.
pub fn annulus_weight(rng: &mut SampleRng) -> C64 {
    C64::from_polar(rng.gen_range(0.3..=2.0), rng.gen_range(0.0..std::f64::consts::TAU))
}

/// A map on `n ≤ max_points` points with weights in `[−2, 2]²`.
pub fn random_map(rng: &mut SampleRng, max_points: usize) -> (Vec<usize>, Vec<C64>) {
    let n = rng.gen_range(1..=max_points);
    let phi = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let w = (0..n).map(|_| square_weight(rng)).collect();
    (phi, w)
}

pub fn random_selfmap(rng: &mut SampleRng, max_points: usize) -> Result<SelfMapSystem> {
    let (phi, w) = random_map(rng, max_points);
    SelfMapSystem::finite(&phi, &w)
}

/// A finite map completed to a left-invertible system by hanging a backward
/// chain below every point without preimages.
pub fn left_invertible_selfmap(phi: &[usize], w: &[C64], chain_weight: C64) -> Result<SelfMapSystem> {
    let mut hit = vec![false; phi.len()];
    for &j in phi {
        hit[j] = true;
    }
    let sources: Vec<usize> = (0..phi.len()).filter(|&i| !hit[i]).collect();
    SelfMapSystem::finite_with_chains(phi, w, &sources, chain_weight)
}

/// Random tree with at most `max_branching` branching vertices, all of
/// them above depth `max_depth`, and weights from [`annulus_weight`].
pub fn random_tree(
    rng: &mut SampleRng,
    rooted: bool,
    max_depth: usize,
    max_branching: usize,
) -> Result<DirectedTreeSystem> {
    let n = rng.gen_range(1..=15usize);
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut depth = vec![0usize];
    let mut nchild = vec![0usize];
    let mut branching = 0;
    for i in 1..n {
        let candidates: Vec<usize> = (0..i)
            .filter(|&p| {
                depth[p] + 1 < max_depth && (nchild[p] != 1 || branching < max_branching)
            })
            .collect();
        let Some(&p) = candidates.choose(rng) else {
            break;
        };
        if nchild[p] == 1 {
            branching += 1;
        }
        nchild[p] += 1;
        parent.push(Some(p));
        depth.push(depth[p] + 1);
        nchild.push(0);
    }
    let vertices = parent
        .iter()
        .enumerate()
        .map(|(i, p)| VertexSpec {
            id: Ident::Int(i as i64),
            parent: p.map(|p| Ident::Int(p as i64)),
            weight: (!(rooted && i == 0)).then(|| Scalar::from_c64(annulus_weight(rng))),
        })
        .collect();
    DirectedTreeSystem::from_spec(&TreeSpec {
        rooted,
        vertices,
        extension: Some(ExtensionSpec {
            weight: Scalar::from_c64(annulus_weight(rng)),
        }),
        omega: None,
    })
}

/// `nnz` entries on randomly chosen keys, amplitudes in `[−2, 2]²`.
pub fn random_vector(rng: &mut SampleRng, keys: &[IndexKey], nnz: usize) -> Result<FinVec> {
    let chosen: Vec<IndexKey> = keys.choose_multiple(rng, nnz.min(keys.len())).copied().collect();
    FinVec::from_entries(chosen.into_iter().map(|k| (k, square_weight(rng))))
}

/// Up to `max_len` nonzero random matrices at indices in `lo..=hi`.
pub fn random_multiplier(rng: &mut SampleRng, dim: usize, lo: i64, hi: i64, max_len: usize) -> MultiplierSeq {
    let mut s = MultiplierSeq::zero(dim);
    let len = rng.gen_range(1..=max_len);
    let mut idx: Vec<i64> = (lo..=hi).collect();
    idx.shuffle(rng);
    for n in idx.into_iter().take(len) {
        let m = nalgebra::DMatrix::from_fn(dim, dim, |_, _| square_weight(rng) * 0.5);
        s.set(n, m);
    }
    s
}

/// Scalar variant of [`random_multiplier`] (dim 1).
pub fn random_scalar_multiplier(rng: &mut SampleRng, lo: i64, hi: i64, max_len: usize) -> MultiplierSeq {
    random_multiplier(rng, 1, lo, hi, max_len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generators_repeat() {
        let a = random_tree(&mut rng(3), true, 10, 3).unwrap();
        let b = random_tree(&mut rng(3), true, 10, 3).unwrap();
        assert_eq!(a, b);
        let mut r = rng(9);
        for _ in 0..50 {
            let t = random_tree(&mut r, false, 10, 3).unwrap();
            assert!(t.branching_vertices().len() <= 3);
            assert!(t.check_left_invertible(4).ok);
        }
    }

    #[test]
    fn completed_maps_are_left_invertible() {
        let mut r = rng(1);
        for _ in 0..50 {
            let (phi, w) = random_map(&mut r, 40);
            let s = left_invertible_selfmap(&phi, &w, annulus_weight(&mut r)).unwrap();
            let li = s.check_left_invertible(3);
            // Only weights that vanish exactly could spoil this.
            assert!(li.ok, "{li:?}");
        }
    }
}
