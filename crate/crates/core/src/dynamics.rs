//! Rate kernels, flows, and the generator vector field.
//!
//! The dynamics redistribute a conserved unit of mass over `n` nodes:
//!
//! ```text
//! dx_i/dt = sum_{k != i} ( Q_{k->i}(x) x_k - Q_{i->k}(x) x_i )
//! ```
//!
//! where the rate kernel `Q_{k->i}(x)` is a polynomial in `x` assembled from
//! the tensor layers: each entry `a^(r)_{ikI}` contributes the monomial
//! `a^(r)_{ikI} * prod_{j in I} x_j` (empty product = 1). Because every unit
//! of outflow from one node is inflow to another, the field is exactly
//! zero-sum and the open simplex is forward-invariant.
//!
//! Everything here is a pure function of immutable inputs; derivatives in the
//! state are assembled analytically by the product rule over the sparse
//! monomials, and the derivative in the tensor coefficients is the field
//! itself evaluated on the direction (the field is linear in the weights).

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::ValidationError;
use crate::hypergraph::{HyperEdgeEntry, HyperTensorSet};

/// Construction tolerance on `|1^T x - 1|` for states and `|1^T z|` for
/// tangent vectors.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A point of the open simplex: strictly positive coordinates of unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    values: Vec<f64>,
}

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ValidationError> {
        let mut sum = 0.0;
        for (i, &v) in values.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ValidationError::NonPositiveCoordinate { index: i, value: v });
            }
            sum += v;
        }
        let residual = libm::fabs(sum - 1.0);
        if residual > MASS_TOLERANCE {
            return Err(ValidationError::MassResidual { residual });
        }
        Ok(Self { values })
    }

    /// Validation bypass. Exists so boundary states (`x_i = 0`) and
    /// finite-difference probes slightly off the simplex can be evaluated;
    /// the dynamics themselves never produce such states.
    pub fn new_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// The barycenter `1/n`.
    pub fn uniform(n: usize) -> Self {
        Self { values: alloc::vec![1.0 / n as f64; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min_coordinate(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn linf_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }

    pub fn l2_distance(&self, other: &Self) -> f64 {
        libm::sqrt(
            self.values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
        )
    }
}

impl core::ops::Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// A zero-sum vector, i.e. an element of the simplex tangent subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    values: Vec<f64>,
}

impl TangentVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ValidationError> {
        let sum: f64 = values.iter().sum();
        if libm::fabs(sum) > MASS_TOLERANCE {
            return Err(ValidationError::NotZeroSum { sum });
        }
        Ok(Self { values })
    }

    /// For vectors that are zero-sum by construction (the generator field
    /// cancels every term pairwise).
    pub fn new_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: alloc::vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|v| libm::fabs(*v)).fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }
}

impl core::ops::Index<usize> for TangentVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Time-varying additive input `t -> w(t)` with `1^T w(t) = 0`.
///
/// The zero-sum contract is the constructor's promise for the built-in
/// signals; the integrator re-checks it at every evaluation.
pub struct InputSignal {
    dim: usize,
    description: String,
    eval: Box<dyn Fn(f64, &mut [f64]) + Send + Sync>,
}

impl InputSignal {
    pub fn new<F>(dim: usize, description: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64, &mut [f64]) + Send + Sync + 'static,
    {
        Self { dim, description: description.into(), eval: Box::new(eval) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, "zero input", |_t, out| out.fill(0.0))
    }

    /// `w(t) = amplitude * sin(2 pi frequency t) * (e_pos - e_neg)`:
    /// a zero-sum sinusoid exciting one opposed node pair.
    pub fn sinusoid_pair(dim: usize, amplitude: f64, frequency: f64, pos: usize, neg: usize) -> Self {
        assert!(pos < dim && neg < dim && pos != neg, "invalid node pair");
        Self::new(dim, "zero-sum sinusoid pair", move |t, out| {
            out.fill(0.0);
            let s = amplitude * libm::sin(core::f64::consts::TAU * frequency * t);
            out[pos] = s;
            out[neg] = -s;
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        (self.eval)(t, out);
    }

    pub fn evaluate(&self, t: f64) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dim];
        self.evaluate_into(t, &mut out);
        out
    }
}

impl fmt::Debug for InputSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InputSignal")
            .field("dim", &self.dim)
            .field("description", &self.description)
            .finish()
    }
}

/// Kernel family `Q_{k->i}(x) = S_{ki} (1 + alpha * sum_j x_j^2)` with a
/// nonnegative zero-diagonal base matrix `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredKernel {
    base: DMatrix<f64>,
    alpha: f64,
}

impl StructuredKernel {
    pub fn new(base: DMatrix<f64>, alpha: f64) -> Result<Self, ValidationError> {
        if base.nrows() != base.ncols() || base.nrows() == 0 {
            return Err(ValidationError::KernelBaseShape);
        }
        for i in 0..base.nrows() {
            if base[(i, i)] != 0.0 {
                return Err(ValidationError::KernelBaseShape);
            }
            for j in 0..base.ncols() {
                let w = base[(i, j)];
                if w < 0.0 || !w.is_finite() {
                    return Err(ValidationError::KernelBaseNegative { row: i, col: j, value: w });
                }
            }
        }
        if alpha < 0.0 || !alpha.is_finite() {
            return Err(ValidationError::NegativeAlpha { alpha });
        }
        Ok(Self { base, alpha })
    }

    pub fn n(&self) -> usize {
        self.base.nrows()
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The state factor `phi(x) = 1 + alpha * sum_j x_j^2`.
    pub fn phi(&self, x: &[f64]) -> f64 {
        1.0 + self.alpha * x.iter().map(|v| v * v).sum::<f64>()
    }

    /// Direct kernel evaluation `S_{ki} * phi(x)` for channel `tail -> head`.
    pub fn evaluate(&self, head: usize, tail: usize, x: &[f64]) -> f64 {
        self.base[(tail, head)] * self.phi(x)
    }

    /// Exact tensor encoding: every positive `S_{ki}` yields one order-1
    /// entry with weight `S_{ki}` and, when `alpha > 0`, one order-3 entry
    /// with repeated index `(j, j)` and weight `alpha * S_{ki}` per node `j`
    /// (the repeated index encodes `x_j^2`). `rate_kernel` on the result
    /// reproduces `S_{ki} * phi(x)` exactly.
    pub fn encode(&self) -> HyperTensorSet {
        let entries = encode_structured_entries(&self.base, self.alpha);
        HyperTensorSet::new(self.n(), entries).expect("validated base encodes cleanly")
    }

    /// Infimum of the kernel over the simplex, minimized over support edges:
    /// `min_{S_{ki} > 0} S_{ki} * (1 + alpha/n)`, since `sum_j x_j^2 >= 1/n`
    /// on the simplex with equality at the barycenter. `None` when the base
    /// has no positive entry.
    pub fn kernel_floor(&self) -> Option<f64> {
        let mut min_pos = f64::INFINITY;
        for k in 0..self.n() {
            for i in 0..self.n() {
                let w = self.base[(k, i)];
                if w > 0.0 {
                    min_pos = min_pos.min(w);
                }
            }
        }
        if min_pos.is_finite() {
            Some(min_pos * (1.0 + self.alpha / self.n() as f64))
        } else {
            None
        }
    }
}

fn encode_structured_entries(base: &DMatrix<f64>, alpha: f64) -> Vec<HyperEdgeEntry> {
    let n = base.nrows();
    let mut entries = Vec::new();
    for k in 0..n {
        for i in 0..n {
            if i == k {
                continue;
            }
            let w = base[(k, i)];
            if w == 0.0 {
                continue;
            }
            entries.push(HyperEdgeEntry::pairwise(i, k, w));
            if alpha != 0.0 {
                for j in 0..n {
                    entries.push(HyperEdgeEntry::new(3, i, k, alloc::vec![j, j], alpha * w));
                }
            }
        }
    }
    entries
}

/// Signed variant of [`StructuredKernel::encode`] for perturbation matrices
/// `ΔS`: same layout, weights may be negative.
pub fn encode_structured_direction(base: &DMatrix<f64>, alpha: f64) -> HyperTensorSet {
    let entries = encode_structured_entries(base, alpha);
    HyperTensorSet::direction(base.nrows(), entries).expect("structured direction encodes cleanly")
}

fn monomial(x: &[f64], indices: &[usize]) -> f64 {
    indices.iter().map(|&j| x[j]).product()
}

fn ipow(x: f64, e: usize) -> f64 {
    let mut out = 1.0;
    for _ in 0..e {
        out *= x;
    }
    out
}

impl HyperTensorSet {
    /// Polynomial rate kernel `Q_{tail->head}(x)`: the sum over all orders
    /// and multi-indices of `a^(r) * prod_{j in I} x_j`. Order-1 entries
    /// contribute their raw weight (empty product is 1).
    ///
    /// Panics if `head` or `tail` is out of range.
    pub fn rate_kernel(&self, head: usize, tail: usize, x: &StateVector) -> f64 {
        let xs = x.as_slice();
        self.pair_entries(head, tail)
            .iter()
            .map(|e| e.weight * monomial(xs, &e.tail_rest))
            .sum()
    }

    /// Net flow `Phi_{tail->head}(x) = Q_{tail->head} x_tail - Q_{head->tail} x_head`.
    /// Antisymmetric in its node arguments.
    pub fn flow(&self, head: usize, tail: usize, x: &StateVector) -> f64 {
        self.rate_kernel(head, tail, x) * x[tail] - self.rate_kernel(tail, head, x) * x[head]
    }

    /// Generator field `f_i(x) = sum_{k != i} Phi_{k->i}(x)`.
    ///
    /// Each entry's transported mass is added to its head and subtracted from
    /// its primary tail, so the coordinates sum to zero up to rounding.
    pub fn vector_field(&self, x: &StateVector) -> TangentVector {
        let xs = x.as_slice();
        let mut f = alloc::vec![0.0; self.n()];
        for e in self.entries() {
            let transported = e.weight * monomial(xs, &e.tail_rest) * xs[e.tail_primary];
            f[e.head] += transported;
            f[e.tail_primary] -= transported;
        }
        TangentVector::new_unchecked(f)
    }

    /// Perturbed field `f(x; A) + w(t)`; zero-sum is preserved because the
    /// input signal is zero-sum.
    pub fn vector_field_with_input(&self, x: &StateVector, w: &InputSignal, t: f64) -> TangentVector {
        let mut f = self.vector_field(x).into_vec();
        let mut buf = alloc::vec![0.0; self.n()];
        w.evaluate_into(t, &mut buf);
        for (fi, wi) in f.iter_mut().zip(buf.iter()) {
            *fi += wi;
        }
        TangentVector::new_unchecked(f)
    }

    /// Analytic Jacobian of the generator field, assembled by the product
    /// rule over the sparse monomials. Columns sum to zero up to rounding
    /// (mass conservation).
    pub fn jacobian(&self, x: &StateVector) -> DMatrix<f64> {
        let xs = x.as_slice();
        let n = self.n();
        let mut jac = DMatrix::zeros(n, n);
        // (variable index, multiplicity) of the entry's full monomial,
        // which includes the transported coordinate x_{tail_primary}.
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for e in self.entries() {
            counts.clear();
            for &idx in core::iter::once(&e.tail_primary).chain(e.tail_rest.iter()) {
                match counts.iter_mut().find(|(l, _)| *l == idx) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((idx, 1)),
                }
            }
            for ci in 0..counts.len() {
                let (var, mult) = counts[ci];
                let mut deriv = e.weight * mult as f64;
                for &(l, c) in &counts {
                    let exp = if l == var { c - 1 } else { c };
                    deriv *= ipow(xs[l], exp);
                }
                jac[(e.head, var)] += deriv;
                jac[(e.tail_primary, var)] -= deriv;
            }
        }
        jac
    }
}

/// Derivative of the field in the tensor coefficients, applied to the
/// direction `ΔA`. The field is linear in the weights, so this is exactly
/// the field of the direction tensor — no approximation involved.
pub fn frechet_in_tensor(direction: &HyperTensorSet, x: &StateVector) -> TangentVector {
    direction.vector_field(x)
}

/// Fitness polynomial for the replicator embedding: a sum of monomial terms
/// `coefficient * prod_{j in vars} x_j`, with `vars` a multiset of node
/// indices (repeats encode powers).
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    terms: Vec<(f64, Vec<usize>)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(f64, Vec<usize>)>) -> Self {
        let mut terms = terms;
        for (_, vars) in &mut terms {
            vars.sort_unstable();
        }
        Self { terms }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(alloc::vec![(c, Vec::new())])
    }

    /// `constant + sum_j coeffs[j] * x_j`.
    pub fn linear(constant: f64, coeffs: &[f64]) -> Self {
        let mut terms = alloc::vec![(constant, Vec::new())];
        for (j, &c) in coeffs.iter().enumerate() {
            terms.push((c, alloc::vec![j]));
        }
        Self::new(terms)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, vars)| c * monomial(x, vars)).sum()
    }
}

/// Embeds replicator dynamics `dx_i/dt = x_i (f_i(x) - fbar(x))` into the
/// generator form by defining `Q_{k->i}(x) := x_i f_i(x)` for every `k != i`.
///
/// The induced rates must be nonnegative on the open simplex for the kernel
/// to be meaningful; this is checked by evaluating `x_i f_i(x)` at `samples`
/// random interior states and rejecting on any materially negative value.
/// Accepted embeddings are returned as a (sign-relaxed) tensor set whose
/// generator field reproduces the replicator field pointwise.
pub fn embed_replicator(
    n: usize,
    fitness: &[Polynomial],
    rng: &mut impl Rng,
    samples: usize,
) -> Result<HyperTensorSet, ValidationError> {
    assert_eq!(fitness.len(), n, "one fitness polynomial per node");
    for _ in 0..samples {
        let x = crate::sampling::interior_state(n, rng);
        for (i, f_i) in fitness.iter().enumerate() {
            let rate = x[i] * f_i.eval(x.as_slice());
            if rate < -1e-12 {
                return Err(ValidationError::ReplicatorNegativeRate { node: i, value: rate });
            }
        }
    }
    // Canonicalize each node's monomials, then fan the common kernel
    // x_i f_i(x) out to every channel k -> i.
    let mut entries = Vec::new();
    for (i, f_i) in fitness.iter().enumerate() {
        let mut canonical: alloc::collections::BTreeMap<Vec<usize>, f64> =
            alloc::collections::BTreeMap::new();
        for (c, vars) in &f_i.terms {
            *canonical.entry(vars.clone()).or_insert(0.0) += c;
        }
        for (vars, c) in canonical {
            if c == 0.0 {
                continue;
            }
            let mut rest = alloc::vec![i];
            rest.extend(vars.iter().copied());
            let order = rest.len() + 1;
            for k in 0..n {
                if k != i {
                    entries.push(HyperEdgeEntry::new(order, i, k, rest.clone(), c));
                }
            }
        }
    }
    HyperTensorSet::direction(n, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_node() -> HyperTensorSet {
        HyperTensorSet::new(
            2,
            vec![HyperEdgeEntry::pairwise(0, 1, 2.0), HyperEdgeEntry::pairwise(1, 0, 1.0)],
        )
        .unwrap()
    }

    fn complete_uniform(n: usize, s: f64) -> HyperTensorSet {
        let entries = (0..n)
            .flat_map(|i| {
                (0..n).filter(move |&k| k != i).map(move |k| HyperEdgeEntry::pairwise(i, k, s))
            })
            .collect();
        HyperTensorSet::new(n, entries).unwrap()
    }

    #[test]
    fn pairwise_kernel_is_raw_weight() {
        let t = HyperTensorSet::new(2, vec![HyperEdgeEntry::pairwise(0, 1, 2.0)]).unwrap();
        let x = StateVector::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(t.rate_kernel(0, 1, &x), 2.0);
        assert_eq!(t.rate_kernel(1, 0, &x), 0.0);
    }

    #[test]
    fn order_two_kernel_multiplies_rest_coordinate() {
        let t = HyperTensorSet::new(3, vec![HyperEdgeEntry::new(2, 0, 1, vec![2], 3.0)]).unwrap();
        let x = StateVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_abs_diff_eq!(t.rate_kernel(0, 1, &x), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn structured_kernel_at_barycenter() {
        let mut s = DMatrix::zeros(8, 8);
        s[(1, 0)] = 1.0; // S_{ki} with k=1, i=0
        let sk = StructuredKernel::new(s, 0.8).unwrap();
        let t = sk.encode();
        let x = StateVector::uniform(8);
        // sum x_j^2 = 1/8, so Q = 1 * (1 + 0.8/8) = 1.1.
        assert_abs_diff_eq!(t.rate_kernel(0, 1, &x), 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(sk.evaluate(0, 1, x.as_slice()), 1.1, epsilon = 1e-15);
    }

    #[test]
    fn encode_alpha_zero_collapses_to_pairwise() {
        let mut s = DMatrix::zeros(2, 2);
        s[(0, 1)] = 1.0;
        s[(1, 0)] = 1.0;
        let t = StructuredKernel::new(s, 0.0).unwrap().encode();
        assert_eq!(t.len(), 2);
        assert_eq!(t.max_order(), 1);
    }

    #[test]
    fn encode_matches_closed_form_kernel() {
        let mut s = DMatrix::zeros(2, 2);
        s[(0, 1)] = 1.0;
        s[(1, 0)] = 1.0;
        let sk = StructuredKernel::new(s, 0.8).unwrap();
        let t = sk.encode();
        let x = StateVector::new(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(t.rate_kernel(0, 1, &x), 1.4, epsilon = 1e-15);
        assert_abs_diff_eq!(t.rate_kernel(1, 0, &x), 1.4, epsilon = 1e-15);
    }

    #[test]
    fn encode_dense_counts() {
        let mut s = DMatrix::from_element(8, 8, 1.0);
        s.fill_diagonal(0.0);
        let t = StructuredKernel::new(s, 0.8).unwrap().encode();
        let layers = t.decompose_layers();
        assert_eq!(layers.len(), 2);
        assert_eq!(layers[0].len(), 56);
        assert_eq!(layers[1].len(), 448);
        assert_eq!(layers[1].orders(), vec![3]);
    }

    #[test]
    fn flow_is_antisymmetric_and_balances() {
        let t = two_node();
        let half = StateVector::new(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(t.flow(0, 1, &half), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.flow(1, 0, &half), -0.5, epsilon = 1e-15);
        let v = StateVector::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert_abs_diff_eq!(t.flow(0, 1, &v), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn field_at_half_half() {
        let t = two_node();
        let f = t.vector_field(&StateVector::new(vec![0.5, 0.5]).unwrap());
        assert_abs_diff_eq!(f[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn field_vanishes_at_balance_reference() {
        let t = two_node();
        let v = StateVector::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!(t.vector_field(&v).linf_norm() < 1e-15);
    }

    #[test]
    fn complete_graph_field_closed_form() {
        // f_i = s (1 - n x_i) on the simplex.
        let (n, s) = (5, 0.7);
        let t = complete_uniform(n, s);
        let x = StateVector::new(vec![0.1, 0.3, 0.2, 0.25, 0.15]).unwrap();
        let f = t.vector_field(&x);
        for i in 0..n {
            assert_abs_diff_eq!(f[i], s * (1.0 - n as f64 * x[i]), epsilon = 1e-14);
        }
        assert!(libm::fabs(f.sum()) < 1e-15);
    }

    #[test]
    fn boundary_inflow_is_nonnegative() {
        // Positivity: with x_i = 0 the outflow terms vanish, so f_i >= 0.
        let t = complete_uniform(4, 1.3);
        let x = StateVector::new_unchecked(vec![0.0, 0.5, 0.3, 0.2]);
        assert!(t.vector_field(&x)[0] >= 0.0);
    }

    #[test]
    fn input_offsets_field() {
        let t = two_node();
        let v = StateVector::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let w = InputSignal::sinusoid_pair(2, 0.03, 0.25, 0, 1);
        let t_probe = 0.37;
        let f = t.vector_field_with_input(&v, &w, t_probe);
        let expected = 0.03 * libm::sin(core::f64::consts::TAU * 0.25 * t_probe);
        assert_abs_diff_eq!(f[0], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(f[1], -expected, epsilon = 1e-12);
        assert!(f.l2_norm() <= 0.03 * libm::sqrt(2.0) + 1e-12);

        let zero = InputSignal::zero(2);
        let x = StateVector::new(vec![0.4, 0.6]).unwrap();
        let plain = t.vector_field(&x);
        let with = t.vector_field_with_input(&x, &zero, 1.0);
        assert_eq!(plain.as_slice(), with.as_slice());
    }

    #[test]
    fn jacobian_of_complete_graph() {
        // J = s 1 1^T - n s I, independent of x.
        let (n, s) = (4, 2.0);
        let t = complete_uniform(n, s);
        let x = StateVector::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let j = t.jacobian(&x);
        for i in 0..n {
            for k in 0..n {
                let expected = if i == k { s - n as f64 * s } else { s };
                assert_abs_diff_eq!(j[(i, k)], expected, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn jacobian_of_empty_set_is_zero() {
        let t = HyperTensorSet::new(3, vec![]).unwrap();
        let j = t.jacobian(&StateVector::uniform(3));
        assert_eq!(j, DMatrix::zeros(3, 3));
    }

    #[test]
    fn jacobian_matches_central_differences() {
        // Mixed-order system with a repeated index.
        let t = HyperTensorSet::new(
            3,
            vec![
                HyperEdgeEntry::pairwise(0, 1, 2.0),
                HyperEdgeEntry::pairwise(1, 0, 1.0),
                HyperEdgeEntry::new(2, 2, 0, vec![1], 0.7),
                HyperEdgeEntry::new(3, 0, 2, vec![1, 1], 0.4),
                HyperEdgeEntry::new(3, 1, 2, vec![0, 2], 0.9),
            ],
        )
        .unwrap();
        let x = StateVector::new(vec![0.5, 0.2, 0.3]).unwrap();
        let jac = t.jacobian(&x);
        let h = 1e-6;
        for col in 0..3 {
            let mut plus = x.as_slice().to_vec();
            let mut minus = plus.clone();
            plus[col] += h;
            minus[col] -= h;
            let fp = t.vector_field(&StateVector::new_unchecked(plus));
            let fm = t.vector_field(&StateVector::new_unchecked(minus));
            for row in 0..3 {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                assert_abs_diff_eq!(jac[(row, col)], fd, epsilon = 1e-8);
            }
        }
        // Column sums vanish: mass conservation differentiates to 1^T J = 0.
        for col in 0..3 {
            let colsum: f64 = (0..3).map(|row| jac[(row, col)]).sum();
            assert!(libm::fabs(colsum) < 1e-14);
        }
    }

    #[test]
    fn frechet_is_field_of_direction() {
        let t = two_node();
        let x = StateVector::new(vec![0.4, 0.6]).unwrap();
        // Direction equal to the tensor itself reproduces the field.
        let d = frechet_in_tensor(&t, &x);
        assert_eq!(d.as_slice(), t.vector_field(&x).as_slice());
        // Zero direction gives the zero vector.
        let zero = HyperTensorSet::new(2, vec![]).unwrap();
        assert_eq!(frechet_in_tensor(&zero, &x).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn frechet_matches_directional_difference() {
        let t = two_node();
        let delta = HyperTensorSet::direction(
            2,
            vec![HyperEdgeEntry::pairwise(0, 1, -0.3), HyperEdgeEntry::new(2, 1, 0, vec![1], 0.8)],
        )
        .unwrap();
        let x = StateVector::new(vec![0.45, 0.55]).unwrap();
        let exact = frechet_in_tensor(&delta, &x);
        let eps = 1e-7;
        let bumped = t.add(&delta.scaled(eps)).unwrap();
        let f0 = t.vector_field(&x);
        let f1 = bumped.vector_field(&x);
        for i in 0..2 {
            let fd = (f1[i] - f0[i]) / eps;
            assert!(libm::fabs(fd - exact[i]) / exact.l2_norm().max(1.0) < 1e-6);
        }
    }

    #[test]
    fn replicator_constant_fitness_is_stationary() {
        let fitness = vec![Polynomial::constant(3.0), Polynomial::constant(3.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = embed_replicator(2, &fitness, &mut rng, 32).unwrap();
        let x = StateVector::new(vec![0.3, 0.7]).unwrap();
        assert!(t.vector_field(&x).linf_norm() < 1e-15);
    }

    #[test]
    fn replicator_two_node_hand_value() {
        // f1 = 1, f2 = 2 at x = (1/2, 1/2): fbar = 3/2, field = (-1/4, 1/4).
        let fitness = vec![Polynomial::constant(1.0), Polynomial::constant(2.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = embed_replicator(2, &fitness, &mut rng, 32).unwrap();
        let f = t.vector_field(&StateVector::new(vec![0.5, 0.5]).unwrap());
        assert_abs_diff_eq!(f[0], -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn replicator_linear_fitness_dual_path() {
        let fitness = vec![
            Polynomial::linear(1.0, &[0.5, 0.2, 0.0]),
            Polynomial::linear(2.0, &[0.0, 0.1, 0.3]),
            Polynomial::linear(1.5, &[0.4, 0.0, 0.2]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = embed_replicator(3, &fitness, &mut rng, 64).unwrap();
        for trial in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + trial);
            let x = crate::sampling::interior_state(3, &mut rng);
            let f = t.vector_field(&x);
            let vals: Vec<f64> = fitness.iter().map(|p| p.eval(x.as_slice())).collect();
            let fbar: f64 = (0..3).map(|i| x[i] * vals[i]).sum();
            for i in 0..3 {
                let replicator = x[i] * (vals[i] - fbar);
                assert_abs_diff_eq!(f[i], replicator, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn replicator_rejects_negative_rates() {
        let fitness = vec![Polynomial::constant(-1.0), Polynomial::constant(1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let err = embed_replicator(2, &fitness, &mut rng, 32).unwrap_err();
        assert!(matches!(err, ValidationError::ReplicatorNegativeRate { node: 0, .. }));
    }

    #[test]
    fn state_vector_validation() {
        assert!(StateVector::new(vec![0.5, 0.5]).is_ok());
        assert!(matches!(
            StateVector::new(vec![0.5, 0.501]),
            Err(ValidationError::MassResidual { .. })
        ));
        assert!(matches!(
            StateVector::new(vec![1.5, -0.5]),
            Err(ValidationError::NonPositiveCoordinate { index: 1, .. })
        ));
        assert!(TangentVector::new(vec![0.5, -0.5]).is_ok());
        assert!(matches!(
            TangentVector::new(vec![0.5, -0.4]),
            Err(ValidationError::NotZeroSum { .. })
        ));
    }
}
