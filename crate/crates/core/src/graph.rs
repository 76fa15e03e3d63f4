//! Graph storage, GCN normalization, neighborhoods, and homophily.

use std::collections::VecDeque;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Compressed sparse row adjacency structure without values.
///
/// Rows hold strictly increasing column indices. For the undirected graphs used
/// here every arc (u, v) has its mirror (v, u).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Csr {
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

impl Csr {
    /// Builds a symmetric structure from undirected edges. Self-loops are dropped,
    /// duplicates (in either direction) are merged.
    pub fn from_undirected(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid_argument(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                continue;
            }
            rows[u].push(v);
            rows[v].push(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(&row);
            offsets.push(indices.len());
        }
        Ok(Csr { offsets, indices })
    }

    pub fn empty(n: usize) -> Self {
        Csr {
            offsets: vec![0; n + 1],
            indices: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of stored arcs, i.e. twice the undirected edge count.
    pub fn arc_count(&self) -> usize {
        self.indices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.indices.len() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.indices[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected edges as (u, v) with u < v, in row-major order.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.node_count()).all(|u| self.neighbors(u).iter().all(|&v| self.has_arc(v, u)))
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

/// An undirected attributed graph with optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Csr,
    features: Array2<f64>,
    labels: Option<Vec<usize>>,
    classes: usize,
}

impl Graph {
    /// `classes` is the declared class count; it must cover every label and is
    /// ignored (but kept) when `labels` is `None`.
    pub fn new(adjacency: Csr, features: Array2<f64>, labels: Option<Vec<usize>>, classes: usize) -> Result<Self> {
        let n = adjacency.node_count();
        if features.nrows() != n {
            return Err(Error::invalid_argument(format!(
                "feature matrix has {} rows for {n} nodes",
                features.nrows()
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::invalid_argument(format!(
                    "{} labels for {n} nodes",
                    labels.len()
                )));
            }
            if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
                return Err(Error::invalid_argument(format!("label {bad} outside [0, {classes})")));
            }
        }
        if !adjacency.is_symmetric() {
            return Err(Error::invalid_argument("adjacency is not symmetric"));
        }
        Ok(Graph {
            adjacency,
            features,
            labels,
            classes,
        })
    }

    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize)],
        features: Array2<f64>,
        labels: Option<Vec<usize>>,
        classes: usize,
    ) -> Result<Self> {
        Graph::new(Csr::from_undirected(n, edges)?, features, labels, classes)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.edge_count()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    pub fn adjacency(&self) -> &Csr {
        &self.adjacency
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.adjacency.neighbors(v)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency.degree(v)
    }

    /// Copy with every feature row scaled to unit L1 mass (rows summing to zero are left alone).
    pub fn with_row_normalized_features(&self) -> Graph {
        let mut features = self.features.clone();
        for mut row in features.rows_mut() {
            let mass: f64 = row.iter().map(|x| x.abs()).sum();
            if mass > 0.0 {
                row.mapv_inplace(|x| x / mass);
            }
        }
        Graph {
            features,
            ..self.clone()
        }
    }

    fn require_labels(&self) -> Result<&[usize]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::invalid_state("graph has no labels"))
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.node_count() {
            return Err(Error::invalid_argument(format!(
                "node {v} outside 0..{}",
                self.node_count()
            )));
        }
        Ok(())
    }
}

/// Symmetrically normalized adjacency with self-loops, `D^-1/2 (A + I) D^-1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn from_structure(csr: &Csr) -> Self {
        let n = csr.node_count();
        let inv_sqrt: Vec<f64> = (0..n).map(|v| 1.0 / ((csr.degree(v) + 1) as f64).sqrt()).collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(csr.arc_count() + n);
        let mut values = Vec::with_capacity(csr.arc_count() + n);
        offsets.push(0);
        for u in 0..n {
            let mut self_done = false;
            for &v in csr.neighbors(u) {
                if !self_done && v > u {
                    indices.push(u);
                    values.push(inv_sqrt[u] * inv_sqrt[u]);
                    self_done = true;
                }
                indices.push(v);
                values.push(inv_sqrt[u] * inv_sqrt[v]);
            }
            if !self_done {
                indices.push(u);
                values.push(inv_sqrt[u] * inv_sqrt[u]);
            }
            offsets.push(indices.len());
        }
        NormalizedAdjacency {
            offsets,
            indices,
            values,
        }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Stored (column, weight) pairs of row `u`, columns ascending.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[u]..self.offsets[u + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let span = self.offsets[u]..self.offsets[u + 1];
        match self.indices[span.clone()].binary_search(&v) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.node_count();
        let mut out = Array2::zeros((n, n));
        for u in 0..n {
            for (v, w) in self.row(u) {
                out[[u, v]] = w;
            }
        }
        out
    }

    /// Sparse-dense product `self · x`. Each output row accumulates its stored
    /// entries in ascending column order.
    pub fn matmul(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.node_count(), "row count mismatch in spmm");
        let mut out = Array2::zeros((self.node_count(), x.ncols()));
        for (u, mut out_row) in out.rows_mut().into_iter().enumerate() {
            for (v, w) in self.row(u) {
                out_row.scaled_add(w, &x.row(v));
            }
        }
        out
    }
}

pub fn normalize_adjacency(g: &Graph) -> NormalizedAdjacency {
    NormalizedAdjacency::from_structure(g.adjacency())
}

/// Nodes at shortest-path distance 1..=k from `v`, ascending.
pub fn k_hop_neighbors(g: &Graph, v: usize, k: usize) -> Result<Vec<usize>> {
    g.check_node(v)?;
    if k == 0 {
        return Err(Error::invalid_argument("hop count must be at least 1"));
    }
    Ok(k_hop_unchecked(g.adjacency(), v, k))
}

pub(crate) fn k_hop_unchecked(adj: &Csr, v: usize, k: usize) -> Vec<usize> {
    if k == 1 {
        return adj.neighbors(v).to_vec();
    }
    let mut dist = vec![usize::MAX; adj.node_count()];
    dist[v] = 0;
    let mut queue = VecDeque::from([v]);
    let mut found = Vec::new();
    while let Some(u) = queue.pop_front() {
        if dist[u] == k {
            continue;
        }
        for &w in adj.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                found.push(w);
                queue.push_back(w);
            }
        }
    }
    found.sort_unstable();
    found
}

/// Intra-class and total edge counts of the closed 1-ego network of `v`.
fn ego_edge_counts(adj: &Csr, labels: &[usize], v: usize, in_ego: &mut [bool]) -> (usize, usize) {
    let members: Vec<usize> = std::iter::once(v).chain(adj.neighbors(v).iter().copied()).collect();
    for &u in &members {
        in_ego[u] = true;
    }
    let (mut intra, mut total) = (0, 0);
    for &u in &members {
        for &w in adj.neighbors(u) {
            if w > u && in_ego[w] {
                total += 1;
                if labels[u] == labels[w] {
                    intra += 1;
                }
            }
        }
    }
    for &u in &members {
        in_ego[u] = false;
    }
    (intra, total)
}

/// Fraction of intra-class edges in the closed 1-ego network of `v` (the
/// center, its neighbors, and every edge among them).
///
/// Isolated nodes have no ego edges and yield [`Error::Undefined`].
pub fn ego_homophily(g: &Graph, v: usize) -> Result<f64> {
    let labels = g.require_labels()?;
    g.check_node(v)?;
    if g.degree(v) == 0 {
        return Err(Error::Undefined(format!("node {v} is isolated")));
    }
    let mut scratch = vec![false; g.node_count()];
    let (intra, total) = ego_edge_counts(g.adjacency(), labels, v, &mut scratch);
    Ok(intra as f64 / total as f64)
}

/// Mean ego homophily over all non-isolated nodes.
pub fn mean_graph_homophily(g: &Graph) -> Result<f64> {
    let labels = g.require_labels()?;
    if g.edge_count() == 0 {
        return Err(Error::invalid_state("graph has no edges"));
    }
    let adj = g.adjacency();
    let mut scratch = vec![false; g.node_count()];
    let (mut sum, mut count) = (0.0, 0usize);
    for v in 0..g.node_count() {
        if adj.degree(v) == 0 {
            continue;
        }
        let (intra, total) = ego_edge_counts(adj, labels, v, &mut scratch);
        sum += intra as f64 / total as f64;
        count += 1;
    }
    Ok(sum / count as f64)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn csr_symmetrizes_and_dedups() {
        let csr = Csr::from_undirected(3, &[(0, 1), (1, 0), (2, 1), (1, 1)]).unwrap();
        assert_eq!(csr.neighbors(0), &[1]);
        assert_eq!(csr.neighbors(1), &[0, 2]);
        assert_eq!(csr.neighbors(2), &[1]);
        assert_eq!(csr.edge_count(), 2);
        assert!(csr.is_symmetric());
        assert!(Csr::from_undirected(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn normalization_single_node() {
        let g = graph(1, &[], None);
        let a = normalize_adjacency(&g);
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 0), 1.0);
    }

    #[test]
    fn normalization_two_node_path() {
        let a = normalize_adjacency(&path(2)).to_dense();
        for x in a.iter() {
            assert_abs_diff_eq!(*x, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn normalization_triangle() {
        let a = normalize_adjacency(&triangle()).to_dense();
        for x in a.iter() {
            assert_abs_diff_eq!(*x, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn normalization_matches_dense_formula() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (1, 3), (3, 4)], None);
        let sparse = normalize_adjacency(&g).to_dense();
        let n = 5;
        let mut a_hat = Array2::<f64>::eye(n);
        for (u, v) in g.adjacency().undirected_edges() {
            a_hat[[u, v]] = 1.0;
            a_hat[[v, u]] = 1.0;
        }
        let deg: Vec<f64> = a_hat.rows().into_iter().map(|r| r.sum()).collect();
        for u in 0..n {
            for v in 0..n {
                let expected = a_hat[[u, v]] / (deg[u] * deg[v]).sqrt();
                assert_abs_diff_eq!(sparse[[u, v]], expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn regular_graph_entries_are_uniform() {
        // 4-cycle is 2-regular
        let g = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], None);
        let a = normalize_adjacency(&g);
        for u in 0..4 {
            for (_, w) in a.row(u) {
                assert!((w - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spmm_matches_dense() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)], None);
        let a = normalize_adjacency(&g);
        let x = Array2::from_shape_fn((4, 3), |(i, j)| (i * 3 + j) as f64 - 4.0);
        let sparse = a.matmul(x.view());
        let dense = a.to_dense().dot(&x);
        for (s, d) in sparse.iter().zip(dense.iter()) {
            assert_abs_diff_eq!(*s, *d, epsilon = 1e-12);
        }
    }

    #[test]
    fn k_hop_examples() {
        assert_eq!(k_hop_neighbors(&triangle(), 0, 1).unwrap(), vec![1, 2]);
        assert_eq!(k_hop_neighbors(&path(4), 0, 2).unwrap(), vec![1, 2]);
        assert_eq!(k_hop_neighbors(&path(4), 1, 2).unwrap(), vec![0, 2, 3]);
        let lone = graph(1, &[], None);
        assert!(k_hop_neighbors(&lone, 0, 3).unwrap().is_empty());
        assert!(matches!(k_hop_neighbors(&lone, 1, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn ego_homophily_examples() {
        let star = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], Some(vec![0; 5]));
        assert_eq!(ego_homophily(&star, 0).unwrap(), 1.0);

        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)], Some(vec![0, 0, 1]));
        assert_abs_diff_eq!(ego_homophily(&tri, 0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);

        let lonely = graph(2, &[], Some(vec![0, 1]));
        assert!(matches!(ego_homophily(&lonely, 0), Err(Error::Undefined(_))));

        let unlabeled = triangle();
        assert!(matches!(ego_homophily(&unlabeled, 0), Err(Error::InvalidState(_))));
    }

    #[test]
    fn mean_homophily_examples() {
        let mono = graph(4, &[(0, 1), (2, 3)], Some(vec![0, 0, 1, 1]));
        assert_eq!(mean_graph_homophily(&mono).unwrap(), 1.0);

        let cross = graph(4, &[(0, 1), (2, 3)], Some(vec![0, 1, 0, 1]));
        assert_eq!(mean_graph_homophily(&cross).unwrap(), 0.0);

        let two_triangles = graph(
            6,
            &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)],
            Some(vec![0, 0, 0, 0, 0, 1]),
        );
        assert_abs_diff_eq!(
            mean_graph_homophily(&two_triangles).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-15
        );

        let edgeless = graph(3, &[], Some(vec![0, 1, 0]));
        assert!(matches!(mean_graph_homophily(&edgeless), Err(Error::InvalidState(_))));
    }

    #[test]
    fn isolated_nodes_are_excluded_from_mean() {
        let g = graph(4, &[(0, 1)], Some(vec![0, 0, 1, 0]));
        assert_eq!(mean_graph_homophily(&g).unwrap(), 1.0);
    }

    fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<usize>)> {
        (2usize..16).prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec((0..n, 0..n), 0..40),
                prop::collection::vec(0usize..3, n),
            )
        })
    }

    proptest! {
        #[test]
        fn normalized_adjacency_is_symmetric((n, edges, _) in arb_graph()) {
            let g = graph(n, &edges, None);
            let a = normalize_adjacency(&g);
            let dense = a.to_dense();
            for u in 0..n {
                prop_assert!(a.get(u, u) > 0.0);
                let row: f64 = dense.row(u).sum();
                let col: f64 = dense.column(u).sum();
                prop_assert!((row - col).abs() <= 1e-12);
                for v in 0..n {
                    prop_assert_eq!(dense[[u, v]], dense[[v, u]]);
                    prop_assert!(dense[[u, v]] <= 1.0);
                }
            }
        }

        #[test]
        fn k_hop_sets_are_nested((n, edges, _) in arb_graph(), k in 1usize..4) {
            let g = graph(n, &edges, None);
            for v in 0..n {
                let inner = k_hop_neighbors(&g, v, k).unwrap();
                let outer = k_hop_neighbors(&g, v, k + 1).unwrap();
                prop_assert!(!inner.contains(&v));
                prop_assert!(inner.iter().all(|u| outer.binary_search(u).is_ok()));
            }
        }

        #[test]
        fn ego_homophily_ignores_class_relabeling((n, edges, labels) in arb_graph()) {
            let g = graph(n, &edges, Some(labels.clone()));
            let permuted: Vec<usize> = labels.iter().map(|&y| (y + 1) % 3).collect();
            let h = Graph::from_edges(n, &edges, Array2::zeros((n, 1)), Some(permuted), 3).unwrap();
            for v in 0..n {
                match (ego_homophily(&g, v), ego_homophily(&h, v)) {
                    (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "definedness changed"),
                }
            }
        }
    }
}
