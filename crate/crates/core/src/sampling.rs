//! Seeded random generators.
//!
//! Every stochastic ingredient of the toolkit (initial conditions, base
//! matrices, perturbation directions, estimator samples) draws from an
//! explicitly seeded ChaCha stream, so equal seeds give bit-identical runs.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::StateVector;
use crate::hypergraph::{ConnectivityMode, HyperEdgeEntry, HyperTensorSet};

/// RNG for stream `stream` of a master seed. Independent consumers of the
/// same master seed use distinct stream ids.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal deviate (Box-Muller).
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

/// Random interior point of the simplex: uniform-positive coordinates
/// normalized to unit mass.
pub fn interior_state(n: usize, rng: &mut impl Rng) -> StateVector {
    let mut values: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let sum: f64 = values.iter().sum();
    for v in &mut values {
        *v /= sum;
    }
    StateVector::new(values).expect("normalized positive sample")
}

/// Uniform sample of the floor set `{x in simplex : min_i x_i >= theta}`,
/// via a uniform simplex sample pushed through the affine bijection
/// `x = (1 - n theta) y + theta 1`.
pub fn floor_set_state(n: usize, theta: f64, rng: &mut impl Rng) -> StateVector {
    assert!(theta >= 0.0 && theta * n as f64 < 1.0, "floor too large for the simplex");
    let mut values: Vec<f64> = (0..n).map(|_| -libm::log(1.0 - rng.gen::<f64>())).collect();
    let sum: f64 = values.iter().sum();
    let scale = 1.0 - n as f64 * theta;
    for v in &mut values {
        *v = scale * (*v / sum) + theta;
    }
    StateVector::new(values).expect("floor-set sample")
}

/// Direction tensor with the same coordinate keys as `tensors`, standard
/// normal weights, rescaled to unit Frobenius norm. Returns an all-zero
/// direction when `tensors` is empty.
pub fn unit_direction_like(tensors: &HyperTensorSet, rng: &mut impl Rng) -> HyperTensorSet {
    let entries: Vec<HyperEdgeEntry> = tensors
        .entries()
        .iter()
        .map(|e| HyperEdgeEntry::new(e.order, e.head, e.tail_primary, e.tail_rest.clone(), standard_normal(rng)))
        .collect();
    let direction = HyperTensorSet::direction(tensors.n(), entries).expect("keys of a valid set");
    let norm = direction.frobenius_norm();
    if norm > 0.0 {
        direction.scaled(1.0 / norm)
    } else {
        direction
    }
}

/// Dense symmetric matrix with zero diagonal and off-diagonal weights
/// uniform in `[lo, hi]`.
pub fn symmetric_uniform_matrix(n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = rng.gen_range(lo..hi);
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
    }
    m
}

/// Erdos-Renyi-style symmetric mask with edge probability `edge_prob` and
/// weights uniform in `[lo, hi]`, resampled until the support is connected.
pub fn connected_er_symmetric(n: usize, edge_prob: f64, lo: f64, hi: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    for _ in 0..10_000 {
        let mut m = DMatrix::zeros(n, n);
        let mut entries = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < edge_prob {
                    let w = rng.gen_range(lo..hi);
                    m[(i, j)] = w;
                    m[(j, i)] = w;
                    entries.push(HyperEdgeEntry::pairwise(i, j, w));
                    entries.push(HyperEdgeEntry::pairwise(j, i, w));
                }
            }
        }
        let support = HyperTensorSet::new(n, entries)
            .expect("generated entries are valid")
            .support_graph();
        if support.is_connected(ConnectivityMode::Undirected) {
            return m;
        }
    }
    panic!("could not sample a connected base matrix; raise edge_prob");
}

/// Random system satisfying the layerwise balance condition by construction,
/// together with its positive reference vector.
///
/// A ring of order-1 channels guarantees a strongly connected support; extra
/// channels of random order up to `max_order` are layered on top. For every
/// unordered pair `{p, q}` and multi-index `I`, the two directed weights are
/// set to `g v_p` and `g v_q` with a shared positive gain `g`, which makes
/// `v_q a_{pqI} = v_p a_{qpI}` hold identically.
pub fn tgdb_system(n: usize, max_order: usize, rng: &mut impl Rng) -> (HyperTensorSet, StateVector) {
    assert!(n >= 2 && max_order >= 1);
    let mut raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let sum: f64 = raw.iter().sum();
    for v in &mut raw {
        *v /= sum;
    }
    let v = StateVector::new(raw).expect("normalized positive reference");

    let mut keys = alloc::collections::BTreeSet::new();
    let mut entries = Vec::new();
    let mut push_pair = |entries: &mut Vec<HyperEdgeEntry>,
                         keys: &mut alloc::collections::BTreeSet<(usize, usize, usize, Vec<usize>)>,
                         order: usize,
                         p: usize,
                         q: usize,
                         rest: Vec<usize>,
                         gain: f64,
                         v: &StateVector| {
        if keys.insert((order, p, q, rest.clone())) && keys.insert((order, q, p, rest.clone())) {
            entries.push(HyperEdgeEntry::new(order, p, q, rest.clone(), gain * v[p]));
            entries.push(HyperEdgeEntry::new(order, q, p, rest, gain * v[q]));
        }
    };

    for i in 0..n {
        let j = (i + 1) % n;
        let gain = rng.gen_range(0.5..1.5);
        push_pair(&mut entries, &mut keys, 1, i, j, Vec::new(), gain, &v);
    }
    let extra = rng.gen_range(n..3 * n);
    for _ in 0..extra {
        let order = rng.gen_range(1..=max_order);
        let p = rng.gen_range(0..n);
        let mut q = rng.gen_range(0..n);
        while q == p {
            q = rng.gen_range(0..n);
        }
        let rest: Vec<usize> = (1..order).map(|_| rng.gen_range(0..n)).collect();
        let gain = rng.gen_range(0.5..1.5);
        push_pair(&mut entries, &mut keys, order, p, q, rest, gain, &v);
    }

    let tensors = HyperTensorSet::new(n, entries).expect("constructed entries are valid");
    (tensors, v)
}
