//! Sparse adjacency tensors for directed, weighted, nonuniform hypergraphs.
//!
//! A system is described by a collection of coordinate-format layers, one per
//! interaction order `r`. An entry of order `r` couples a head node `i` to a
//! tail group `(k, I)` with `|I| = r - 1` and carries a nonnegative weight.
//! Order 1 is the ordinary adjacency-matrix case (empty `I`).
//!
//! The module also implements the structural checks used by the stability
//! theory: the layerwise generalized detailed-balance test around a positive
//! reference vector, extraction of the pairwise support graph, and the
//! decomposition of a nonuniform set into its uniform layers.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::dynamics::StateVector;
use crate::error::{EntryKey, ValidationError};

/// Absolute tolerance on balance residuals `|v_k a_{ikI} - v_i a_{kiI}|`.
///
/// Weights are O(1) in every supported experiment, so exact-rational inputs
/// leave residuals at rounding scale; anything above this is a real violation.
pub const TGDB_TOLERANCE: f64 = 1e-9;

/// One coordinate-format tensor entry `a^(r)_{i k I}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperEdgeEntry {
    /// Interaction order `r >= 1`; the hyperedge involves `r + 1` nodes.
    pub order: usize,
    /// Head node `i` receiving the flow.
    pub head: usize,
    /// Distinguished tail node `k != i` supplying the transported mass.
    pub tail_primary: usize,
    /// Remaining tail indices `I`, ordered as given, `|I| = order - 1`.
    /// Repeated indices are accepted and encode powers of a coordinate.
    pub tail_rest: Vec<usize>,
    /// Coupling weight; nonnegative for validated sets, signed for directions.
    pub weight: f64,
}

impl HyperEdgeEntry {
    pub fn new(order: usize, head: usize, tail_primary: usize, tail_rest: Vec<usize>, weight: f64) -> Self {
        Self { order, head, tail_primary, tail_rest, weight }
    }

    /// Pairwise entry `a^(1)_{ik}`: flow channel `k -> i` with constant rate.
    pub fn pairwise(head: usize, tail_primary: usize, weight: f64) -> Self {
        Self::new(1, head, tail_primary, Vec::new(), weight)
    }

    /// Coordinate key identifying this entry (everything but the weight).
    pub fn key(&self) -> EntryKey {
        EntryKey {
            order: self.order,
            head: self.head,
            tail_primary: self.tail_primary,
            tail_rest: self.tail_rest.clone(),
        }
    }

    fn sort_key(&self) -> (usize, usize, usize, &[usize]) {
        (self.head, self.tail_primary, self.order, &self.tail_rest)
    }

    fn validate_structure(&self, n: usize) -> Result<(), ValidationError> {
        if self.order == 0 {
            return Err(ValidationError::ZeroOrder { entry: self.key() });
        }
        if self.head >= n
            || self.tail_primary >= n
            || self.tail_rest.iter().any(|&j| j >= n)
        {
            return Err(ValidationError::IndexOutOfRange { entry: self.key(), n });
        }
        if self.head == self.tail_primary {
            return Err(ValidationError::SelfLoop { entry: self.key() });
        }
        if self.tail_rest.len() != self.order - 1 {
            return Err(ValidationError::ArityMismatch {
                entry: self.key(),
                expected: self.order - 1,
                found: self.tail_rest.len(),
            });
        }
        if !self.weight.is_finite() {
            return Err(ValidationError::NegativeWeight { entry: self.key(), weight: self.weight });
        }
        Ok(())
    }
}

/// Sparse collection of adjacency tensors `{A^(r)}`, all layers over the same
/// node set. Entries are kept sorted by `(head, tail_primary, order, I)` with
/// a per-pair index so kernel evaluation and reverse-entry lookups are cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperTensorSet {
    n: usize,
    max_order: usize,
    entries: Vec<HyperEdgeEntry>,
    /// Range into `entries` for each ordered pair, indexed `head * n + tail`.
    pair_ranges: Vec<(usize, usize)>,
}

impl HyperTensorSet {
    /// Validated constructor: indices in range, no self-channels, arity
    /// matching the order, nonnegative weights, and no duplicate keys
    /// (duplicates are rejected, not summed).
    pub fn new(n: usize, entries: Vec<HyperEdgeEntry>) -> Result<Self, ValidationError> {
        for e in &entries {
            e.validate_structure(n)?;
            if e.weight < 0.0 {
                return Err(ValidationError::NegativeWeight { entry: e.key(), weight: e.weight });
            }
        }
        Self::build(n, entries)
    }

    /// Direction-tensor constructor: same structural checks but signed
    /// weights are allowed. Used for perturbation directions `ΔA`.
    pub fn direction(n: usize, entries: Vec<HyperEdgeEntry>) -> Result<Self, ValidationError> {
        for e in &entries {
            e.validate_structure(n)?;
        }
        Self::build(n, entries)
    }

    fn build(n: usize, mut entries: Vec<HyperEdgeEntry>) -> Result<Self, ValidationError> {
        if n == 0 {
            return Err(ValidationError::EmptyNodeSet);
        }
        entries.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        for pair in entries.windows(2) {
            if pair[0].sort_key() == pair[1].sort_key() {
                return Err(ValidationError::DuplicateEntry { entry: pair[1].key() });
            }
        }
        let max_order = entries.iter().map(|e| e.order).max().unwrap_or(0);
        let mut pair_ranges = alloc::vec![(0usize, 0usize); n * n];
        let mut idx = 0;
        while idx < entries.len() {
            let (h, k) = (entries[idx].head, entries[idx].tail_primary);
            let start = idx;
            while idx < entries.len() && entries[idx].head == h && entries[idx].tail_primary == k {
                idx += 1;
            }
            pair_ranges[h * n + k] = (start, idx);
        }
        Ok(Self { n, max_order, entries, pair_ranges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest interaction order present; 0 for an empty set.
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn entries(&self) -> &[HyperEdgeEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Orders present, ascending, each appearing once.
    pub fn orders(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.entries.iter().map(|e| e.order).collect();
        set.into_iter().collect()
    }

    /// Entries of the ordered channel `tail -> head`, all orders.
    pub fn pair_entries(&self, head: usize, tail: usize) -> &[HyperEdgeEntry] {
        let (s, e) = self.pair_ranges[head * self.n + tail];
        &self.entries[s..e]
    }

    /// Weight of the entry with the exact coordinate key, if present.
    pub fn weight_of(&self, order: usize, head: usize, tail: usize, rest: &[usize]) -> Option<f64> {
        let slice = self.pair_entries(head, tail);
        slice
            .binary_search_by(|e| (e.order, e.tail_rest.as_slice()).cmp(&(order, rest)))
            .ok()
            .map(|i| slice[i].weight)
    }

    /// Frobenius norm over all entry weights.
    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|e| e.weight * e.weight).sum())
    }

    /// Entrywise sum `A + B`; overlapping keys are summed, so the result may
    /// carry signed weights when `other` is a direction tensor.
    pub fn add(&self, other: &Self) -> Result<Self, ValidationError> {
        if self.n != other.n {
            return Err(ValidationError::NodeCountMismatch { left: self.n, right: other.n });
        }
        let mut merged = self.entries.clone();
        for e in &other.entries {
            match merged
                .binary_search_by(|m| m.sort_key().cmp(&e.sort_key()))
            {
                Ok(i) => merged[i].weight += e.weight,
                Err(i) => merged.insert(i, e.clone()),
            }
        }
        Self::build(self.n, merged)
    }

    /// Same entries with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.weight *= factor;
        }
        out
    }

    /// Splits the set into uniform layers, one per order present, ascending.
    /// The union of the layers reproduces the input exactly.
    pub fn decompose_layers(&self) -> Vec<HyperTensorSet> {
        self.orders()
            .into_iter()
            .map(|r| {
                let entries: Vec<_> =
                    self.entries.iter().filter(|e| e.order == r).cloned().collect();
                // Entries of an already-validated set cannot fail to rebuild.
                Self::build(self.n, entries).expect("layer of a valid set")
            })
            .collect()
    }

    /// Reassembles layers into one set; duplicate keys across layers are
    /// rejected. Inverse of [`decompose_layers`](Self::decompose_layers).
    pub fn union(layers: &[HyperTensorSet]) -> Result<Self, ValidationError> {
        let n = layers.first().map(|l| l.n).ok_or(ValidationError::EmptyNodeSet)?;
        let mut entries = Vec::new();
        for layer in layers {
            if layer.n != n {
                return Err(ValidationError::NodeCountMismatch { left: n, right: layer.n });
            }
            entries.extend(layer.entries.iter().cloned());
        }
        Self::build(n, entries)
    }

    /// Pairwise support graph: a directed edge `(k, i)` for every channel
    /// `k -> i` that carries at least one strictly positive entry, any order.
    pub fn support_graph(&self) -> SupportGraph {
        let mut directed = BTreeSet::new();
        for e in &self.entries {
            if e.weight > 0.0 {
                directed.insert((e.tail_primary, e.head));
            }
        }
        let undirected = directed
            .iter()
            .map(|&(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        SupportGraph { n: self.n, directed, undirected }
    }

    /// Layerwise generalized detailed-balance check around the reference `v`:
    /// for every entry key `(r, i, k, I)` the residual
    /// `|v_k a^(r)_{ikI} - v_i a^(r)_{kiI}|` must stay within
    /// [`TGDB_TOLERANCE`]. Missing reverse entries count as weight 0, so a
    /// one-directional channel always violates the condition at positive `v`.
    /// Each unordered pair is reported once (the residual is symmetric).
    pub fn check_tgdb(&self, v: &StateVector) -> TgdbReport {
        let vs = v.as_slice();
        let mut max_residual: f64 = 0.0;
        let mut violations = Vec::new();
        for e in &self.entries {
            let (i, k) = (e.head, e.tail_primary);
            let reverse = self.weight_of(e.order, k, i, &e.tail_rest);
            if i > k && reverse.is_some() {
                continue; // counted when scanning the (k, i) side
            }
            let residual = libm::fabs(vs[k] * e.weight - vs[i] * reverse.unwrap_or(0.0));
            max_residual = max_residual.max(residual);
            if residual > TGDB_TOLERANCE {
                violations.push(TgdbViolation {
                    order: e.order,
                    head: i,
                    tail_primary: k,
                    tail_rest: e.tail_rest.clone(),
                    residual,
                });
            }
        }
        TgdbReport { holds: max_residual <= TGDB_TOLERANCE, reference: v.clone(), violations, max_residual }
    }
}

/// One balance violation `(r, i, k, I)` with its residual.
#[derive(Debug, Clone, PartialEq)]
pub struct TgdbViolation {
    pub order: usize,
    pub head: usize,
    pub tail_primary: usize,
    pub tail_rest: Vec<usize>,
    pub residual: f64,
}

/// Outcome of [`HyperTensorSet::check_tgdb`].
#[derive(Debug, Clone, PartialEq)]
pub struct TgdbReport {
    pub holds: bool,
    pub reference: StateVector,
    pub violations: Vec<TgdbViolation>,
    pub max_residual: f64,
}

/// Reachability mode for [`SupportGraph::is_connected`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectivityMode {
    /// Symmetrized edges, path-connected.
    Undirected,
    /// Directed edges, mutually reachable.
    Strong,
}

/// Pairwise projection of a tensor set keeping only support information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportGraph {
    n: usize,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
}

impl SupportGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Directed edges `(k, i)` oriented tail -> head.
    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.directed.iter().copied()
    }

    /// Symmetrized edges with the smaller index first.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.undirected.iter().copied()
    }

    pub fn directed_edge_count(&self) -> usize {
        self.directed.len()
    }

    pub fn has_directed_edge(&self, from: usize, to: usize) -> bool {
        self.directed.contains(&(from, to))
    }

    /// Degree-ordered adjacency over undirected edges.
    fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = alloc::vec![Vec::new(); self.n];
        for &(a, b) in &self.undirected {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn is_connected(&self, mode: ConnectivityMode) -> bool {
        if self.n <= 1 {
            return true;
        }
        match mode {
            ConnectivityMode::Undirected => {
                reachable_count(self.n, &self.undirected_adjacency(), 0) == self.n
            }
            ConnectivityMode::Strong => {
                let mut fwd = alloc::vec![Vec::new(); self.n];
                let mut rev = alloc::vec![Vec::new(); self.n];
                for &(a, b) in &self.directed {
                    fwd[a].push(b);
                    rev[b].push(a);
                }
                reachable_count(self.n, &fwd, 0) == self.n
                    && reachable_count(self.n, &rev, 0) == self.n
            }
        }
    }

    /// Breadth-first spanning tree of the undirected support graph rooted at
    /// 0, as `(parent, child)` pairs in visit order. Empty if disconnected.
    pub(crate) fn spanning_tree(&self) -> Option<Vec<(usize, usize)>> {
        let adj = self.undirected_adjacency();
        let mut seen = alloc::vec![false; self.n];
        let mut queue = alloc::vec![0usize];
        let mut tree = Vec::with_capacity(self.n.saturating_sub(1));
        seen[0] = true;
        while let Some(u) = queue.pop() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    tree.push((u, w));
                    queue.push(w);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            Some(tree)
        } else {
            None
        }
    }
}

fn reachable_count(n: usize, adj: &[Vec<usize>], start: usize) -> usize {
    let mut seen = alloc::vec![false; n];
    let mut stack = alloc::vec![start];
    seen[start] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::StateVector;
    use alloc::vec;

    fn two_node_asymmetric() -> HyperTensorSet {
        // Q_{2->1} = 2, Q_{1->2} = 1 in 1-based notation.
        HyperTensorSet::new(
            2,
            vec![HyperEdgeEntry::pairwise(0, 1, 2.0), HyperEdgeEntry::pairwise(1, 0, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn minimal_set_loads() {
        let t = HyperTensorSet::new(2, vec![HyperEdgeEntry::pairwise(0, 1, 2.0)]).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.max_order(), 1);
    }

    #[test]
    fn negative_weight_names_entry() {
        let err = HyperTensorSet::new(2, vec![HyperEdgeEntry::pairwise(0, 1, -1.0)]).unwrap_err();
        match err {
            ValidationError::NegativeWeight { entry, weight } => {
                assert_eq!(entry.head, 0);
                assert_eq!(entry.tail_primary, 1);
                assert_eq!(weight, -1.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_keys_rejected_not_summed() {
        let err = HyperTensorSet::new(
            3,
            vec![HyperEdgeEntry::pairwise(0, 1, 1.0), HyperEdgeEntry::pairwise(0, 1, 2.0)],
        )
        .unwrap_err();
        assert!(matches!(err, ValidationError::DuplicateEntry { .. }));
    }

    #[test]
    fn self_loop_and_range_and_arity_rejected() {
        assert!(matches!(
            HyperTensorSet::new(2, vec![HyperEdgeEntry::pairwise(1, 1, 1.0)]),
            Err(ValidationError::SelfLoop { .. })
        ));
        assert!(matches!(
            HyperTensorSet::new(2, vec![HyperEdgeEntry::pairwise(0, 2, 1.0)]),
            Err(ValidationError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            HyperTensorSet::new(2, vec![HyperEdgeEntry::new(2, 0, 1, vec![], 1.0)]),
            Err(ValidationError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn tgdb_holds_at_balance_reference() {
        let t = two_node_asymmetric();
        let v = StateVector::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let report = t.check_tgdb(&v);
        assert!(report.holds, "max residual {}", report.max_residual);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn tgdb_residual_at_uniform_is_half() {
        let t = two_node_asymmetric();
        let v = StateVector::new(vec![0.5, 0.5]).unwrap();
        let report = t.check_tgdb(&v);
        assert!(!report.holds);
        assert_eq!(report.violations.len(), 1);
        assert!((report.max_residual - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tgdb_symmetric_pairwise_holds_at_uniform() {
        let t = HyperTensorSet::new(
            3,
            vec![
                HyperEdgeEntry::pairwise(0, 1, 1.5),
                HyperEdgeEntry::pairwise(1, 0, 1.5),
                HyperEdgeEntry::pairwise(1, 2, 0.25),
                HyperEdgeEntry::pairwise(2, 1, 0.25),
            ],
        )
        .unwrap();
        let report = t.check_tgdb(&StateVector::uniform(3));
        assert!(report.holds);
    }

    #[test]
    fn tgdb_missing_reverse_is_weight_zero() {
        // One-directional channel: violation of size v_k * a.
        let t = HyperTensorSet::new(3, vec![HyperEdgeEntry::pairwise(0, 2, 1.0)]).unwrap();
        let report = t.check_tgdb(&StateVector::uniform(3));
        assert!(!report.holds);
        assert_eq!(report.violations.len(), 1);
        assert!((report.max_residual - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tgdb_reports_each_unordered_pair_once() {
        let t = two_node_asymmetric();
        let v = StateVector::new(vec![0.5, 0.5]).unwrap();
        // Both directed entries exist; only one residual row expected.
        assert_eq!(t.check_tgdb(&v).violations.len(), 1);
    }

    #[test]
    fn support_graph_of_nonuniqueness_example() {
        // Q_{2->1} = Q_{1->2} = 1 on n = 3; node 3 isolated.
        let t = HyperTensorSet::new(
            3,
            vec![HyperEdgeEntry::pairwise(0, 1, 1.0), HyperEdgeEntry::pairwise(1, 0, 1.0)],
        )
        .unwrap();
        let g = t.support_graph();
        let edges: Vec<_> = g.directed_edges().collect();
        assert_eq!(edges, vec![(0, 1), (1, 0)]);
        assert!(!g.is_connected(ConnectivityMode::Strong));
        assert!(!g.is_connected(ConnectivityMode::Undirected));
    }

    #[test]
    fn support_graph_empty_set() {
        let t = HyperTensorSet::new(3, vec![]).unwrap();
        assert_eq!(t.support_graph().directed_edge_count(), 0);
    }

    #[test]
    fn support_graph_ignores_zero_weight_entries() {
        let t = HyperTensorSet::new(
            3,
            vec![HyperEdgeEntry::pairwise(0, 1, 0.0), HyperEdgeEntry::pairwise(2, 1, 1.0)],
        )
        .unwrap();
        let g = t.support_graph();
        assert!(!g.has_directed_edge(1, 0));
        assert!(g.has_directed_edge(1, 2));
    }

    #[test]
    fn connectivity_modes() {
        // Path 1 - 2 - 3 as directed edges 0->1, 1->2 only.
        let t = HyperTensorSet::new(
            3,
            vec![HyperEdgeEntry::pairwise(1, 0, 1.0), HyperEdgeEntry::pairwise(2, 1, 1.0)],
        )
        .unwrap();
        let g = t.support_graph();
        assert!(g.is_connected(ConnectivityMode::Undirected));
        assert!(!g.is_connected(ConnectivityMode::Strong));

        let complete = HyperTensorSet::new(
            3,
            (0..3)
                .flat_map(|i| (0..3).filter(move |&k| k != i).map(move |k| HyperEdgeEntry::pairwise(i, k, 1.0)))
                .collect(),
        )
        .unwrap();
        assert!(complete.support_graph().is_connected(ConnectivityMode::Strong));
    }

    #[test]
    fn decompose_layers_partitions_and_rebuilds() {
        let t = HyperTensorSet::new(
            3,
            vec![
                HyperEdgeEntry::pairwise(0, 1, 1.0),
                HyperEdgeEntry::new(2, 1, 2, vec![0], 0.5),
                HyperEdgeEntry::new(2, 2, 0, vec![1], 0.25),
            ],
        )
        .unwrap();
        let layers = t.decompose_layers();
        assert_eq!(layers.len(), 2);
        assert_eq!(layers[0].orders(), vec![1]);
        assert_eq!(layers[1].orders(), vec![2]);
        assert_eq!(layers[0].len() + layers[1].len(), t.len());
        let rebuilt = HyperTensorSet::union(&layers).unwrap();
        assert_eq!(rebuilt, t);
        // Support is invariant under decompose-then-union.
        assert_eq!(rebuilt.support_graph(), t.support_graph());
    }

    #[test]
    fn single_order_decomposition_is_identity() {
        let t = two_node_asymmetric();
        let layers = t.decompose_layers();
        assert_eq!(layers.len(), 1);
        assert_eq!(layers[0], t);
    }

    #[test]
    fn add_merges_overlapping_keys() {
        let a = two_node_asymmetric();
        let b = HyperTensorSet::direction(
            2,
            vec![HyperEdgeEntry::pairwise(0, 1, -0.5), HyperEdgeEntry::new(2, 1, 0, vec![0], 0.1)],
        )
        .unwrap();
        let sum = a.add(&b).unwrap();
        assert_eq!(sum.weight_of(1, 0, 1, &[]), Some(1.5));
        assert_eq!(sum.weight_of(1, 1, 0, &[]), Some(1.0));
        assert_eq!(sum.weight_of(2, 1, 0, &[0]), Some(0.1));
    }

    #[test]
    fn frobenius_norm_over_all_entries() {
        let t = two_node_asymmetric();
        assert!((t.frobenius_norm() - libm::sqrt(5.0)).abs() < 1e-15);
    }
}
