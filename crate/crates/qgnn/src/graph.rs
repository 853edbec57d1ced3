//! Undirected graphs with node features and optional labels.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real dense matrix used for graph operators and feature tables.
pub type RMatrix = DMatrix<f64>;

/// Largest graph accepted by the loaders.
pub const MAX_NODES: usize = 64;

/// Simple undirected graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    edges: Vec<(usize, usize)>,
    features: RMatrix,
    labels: Vec<Option<usize>>,
    num_classes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonNode {
    id: usize,
    features: Vec<f64>,
    #[serde(default)]
    label: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonGraph {
    nodes: Vec<JsonNode>,
    edges: Vec<[usize; 2]>,
}

/// On-disk graph encodings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    Json,
    /// Tab-separated edge list at the main path plus a features CSV.
    EdgeListTsv { features_csv: std::path::PathBuf },
}

impl Graph {
    /// Validates and builds a graph. Edges are deduplicated and stored with
    /// `u < v`; self-loops are rejected because `Â` adds them itself.
    pub fn new(features: RMatrix, edges: &[(usize, usize)], labels: Vec<Option<usize>>) -> Result<Self> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::Graph("graph needs at least one node".into()));
        }
        if n > MAX_NODES {
            return Err(Error::Graph(format!("{n} nodes exceeds the {MAX_NODES}-node limit")));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Graph("non-finite feature value".into()));
        }
        if labels.len() != n {
            return Err(Error::Graph(format!("{} labels for {n} nodes", labels.len())));
        }
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Graph(format!("edge ({u}, {v}) references a node outside 0..{n}")));
            }
            if u == v {
                return Err(Error::Graph(format!("self-loop on node {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let num_classes = labels.iter().flatten().map(|&l| l + 1).max().unwrap_or(1).max(1);
        Ok(Self { edges: set.into_iter().collect(), features, labels, num_classes })
    }

    /// Sets the class count, which must cover every label present.
    pub fn with_num_classes(mut self, classes: usize) -> Result<Self> {
        if self.labels.iter().flatten().any(|&l| l >= classes) || classes == 0 {
            return Err(Error::Graph(format!("{classes} classes does not cover the labels")));
        }
        self.num_classes = classes;
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &RMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn labelled_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&i| self.labels[i].is_some()).collect()
    }

    /// One-hot label matrix `N × classes`; unlabelled rows are zero.
    pub fn label_matrix(&self) -> RMatrix {
        let mut y = RMatrix::zeros(self.num_nodes(), self.num_classes);
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(l) = l {
                y[(i, *l)] = 1.0;
            }
        }
        y
    }

    pub fn adjacency(&self) -> RMatrix {
        let n = self.num_nodes();
        let mut a = RMatrix::zeros(n, n);
        for &(u, v) in &self.edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_nodes()];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    /// Average degree `2|E| / N`.
    pub fn average_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.num_nodes() as f64
    }

    /// Largest number of nonzeros in a row of `Â`, i.e. max degree plus one.
    pub fn sparsity(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0) + 1
    }

    pub fn neighbours(&self, j: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(u, v)| if u == j { Some(v) } else if v == j { Some(u) } else { None })
            .collect();
        out.sort_unstable();
        out
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Graph("relabelling is not a permutation".into()));
        }
        let mut x = RMatrix::zeros(n, self.num_features());
        let mut labels = vec![None; n];
        for i in 0..n {
            x.set_row(perm[i], &self.features.row(i));
            labels[perm[i]] = self.labels[i];
        }
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Graph::new(x, &edges, labels)?.with_num_classes(self.num_classes)
    }

    pub fn to_json(&self) -> String {
        let g = JsonGraph {
            nodes: (0..self.num_nodes())
                .map(|i| JsonNode {
                    id: i,
                    features: self.features.row(i).iter().copied().collect(),
                    label: self.labels[i],
                })
                .collect(),
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        };
        serde_json::to_string_pretty(&g).expect("graph serialises")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let g: JsonGraph = serde_json::from_str(s).map_err(|e| Error::Graph(format!("malformed JSON: {e}")))?;
        let n = g.nodes.len();
        let mut order: Vec<Option<&JsonNode>> = vec![None; n];
        for node in &g.nodes {
            if node.id >= n {
                return Err(Error::Graph(format!("node id {} is not dense in 0..{n}", node.id)));
            }
            if order[node.id].replace(node).is_some() {
                return Err(Error::Graph(format!("duplicate node id {}", node.id)));
            }
        }
        let c = g.nodes.first().map(|nd| nd.features.len()).unwrap_or(0);
        if c == 0 {
            return Err(Error::Graph("nodes need at least one feature".into()));
        }
        let mut x = RMatrix::zeros(n, c);
        let mut labels = Vec::with_capacity(n);
        for (i, node) in order.into_iter().enumerate() {
            let node = node.expect("dense ids checked above");
            if node.features.len() != c {
                return Err(Error::Graph(format!(
                    "node {i} has {} features, expected {c}",
                    node.features.len()
                )));
            }
            for (k, &v) in node.features.iter().enumerate() {
                x[(i, k)] = v;
            }
            labels.push(node.label);
        }
        let edges: Vec<(usize, usize)> = g.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(x, &edges, labels)
    }
}

/// Reads a graph from disk.
pub fn load_graph(path: &Path, format: &GraphFormat) -> Result<Graph> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::Graph(format!("{}: {e}", p.display())));
    match format {
        GraphFormat::Json => Graph::from_json_str(&read(path)?),
        GraphFormat::EdgeListTsv { features_csv } => {
            let text = read(features_csv)?;
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            let mut rows: Vec<Vec<f64>> = Vec::new();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::Graph(format!("features CSV: {e}")))?;
                let row = rec
                    .iter()
                    .map(|f| f.parse::<f64>().map_err(|e| Error::Graph(format!("features CSV value `{f}`: {e}"))))
                    .collect::<Result<Vec<f64>>>()?;
                rows.push(row);
            }
            let n = rows.len();
            let c = rows.first().map(Vec::len).unwrap_or(0);
            if n == 0 || c == 0 {
                return Err(Error::Graph("features CSV is empty".into()));
            }
            if let Some(i) = rows.iter().position(|r| r.len() != c) {
                return Err(Error::Graph(format!("features CSV row {i} has {} values, expected {c}", rows[i].len())));
            }
            let x = RMatrix::from_fn(n, c, |i, k| rows[i][k]);
            let mut edges = Vec::new();
            for (ln, line) in read(path)?.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let parts: Vec<&str> = line.split('\t').collect();
                if parts.len() != 2 {
                    return Err(Error::Graph(format!("edge list line {}: expected `u<TAB>v`", ln + 1)));
                }
                let parse = |s: &str| {
                    s.trim().parse::<usize>().map_err(|e| Error::Graph(format!("edge list line {}: {e}", ln + 1)))
                };
                edges.push((parse(parts[0])?, parse(parts[1])?));
            }
            Graph::new(x, &edges, vec![None; n])
        }
    }
}

/// `Â = D̃^{-1/2} (A + I) D̃^{-1/2}`.
pub fn normalized_adjacency(g: &Graph) -> RMatrix {
    let n = g.num_nodes();
    let a = g.adjacency() + RMatrix::identity(n, n);
    let dinv: Vec<f64> = (0..n).map(|i| 1.0 / a.row(i).sum().sqrt()).collect();
    RMatrix::from_fn(n, n, |i, j| dinv[i] * a[(i, j)] * dinv[j])
}

/// Shifted normalised Laplacian `scale · (I − Â)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Laplacian {
    pub matrix: RMatrix,
    pub scale: f64,
}

/// Default Laplacian scale. `I − Â` has spectrum in `[0, 2)`, so halving it
/// keeps the spectral norm at most 1 for every graph.
pub const LAPLACIAN_SCALE: f64 = 0.5;

pub fn graph_laplacian(g: &Graph) -> Laplacian {
    graph_laplacian_scaled(g, LAPLACIAN_SCALE)
}

pub fn graph_laplacian_scaled(g: &Graph, scale: f64) -> Laplacian {
    let n = g.num_nodes();
    let m = (RMatrix::identity(n, n) - normalized_adjacency(g)) * scale;
    Laplacian { matrix: m, scale }
}

/// Random graph with Bernoulli edges, uniform features in `[-1, 1]` and
/// labels in `0..classes` on every node.
pub fn random_graph(n: usize, edge_prob: f64, features: usize, classes: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < edge_prob {
                edges.push((u, v));
            }
        }
    }
    let x = RMatrix::from_fn(n, features, |_, _| rng.gen_range(-1.0..1.0));
    let labels = (0..n).map(|_| Some(rng.gen_range(0..classes))).collect();
    Graph::new(x, &edges, labels).expect("generated graph is valid").with_num_classes(classes).expect("classes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path2() -> Graph {
        Graph::new(RMatrix::identity(2, 2), &[(0, 1)], vec![Some(0), Some(1)]).unwrap()
    }

    #[test]
    fn edgeless_adjacency_is_identity() {
        let g = Graph::new(RMatrix::identity(3, 3), &[], vec![None; 3]).unwrap();
        assert_eq!(normalized_adjacency(&g), RMatrix::identity(3, 3));
    }

    #[test]
    fn path2_normalised_adjacency() {
        let a = normalized_adjacency(&path2());
        for v in a.iter() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn triangle_normalised_adjacency() {
        let g = Graph::new(RMatrix::identity(3, 3), &[(0, 1), (1, 2), (0, 2)], vec![None; 3]).unwrap();
        for v in normalized_adjacency(&g).iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn laplacian_unit_scale_examples() {
        let l = graph_laplacian_scaled(&path2(), 1.0).matrix;
        let expect = RMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!((l - expect).abs().max() < 1e-15);
        let g = Graph::new(RMatrix::identity(2, 2), &[], vec![None; 2]).unwrap();
        assert_eq!(graph_laplacian_scaled(&g, 1.0).matrix, RMatrix::zeros(2, 2));
        let k3 = Graph::new(RMatrix::identity(3, 3), &[(0, 1), (1, 2), (0, 2)], vec![None; 3]).unwrap();
        let l3 = graph_laplacian_scaled(&k3, 1.0).matrix;
        let expect3 = RMatrix::identity(3, 3) - RMatrix::from_element(3, 3, 1.0 / 3.0);
        assert!((l3 - expect3).abs().max() < 1e-15);
    }

    #[test]
    fn default_laplacian_norm_bounded() {
        for seed in 0..20 {
            let g = random_graph(7, 0.5, 2, 2, seed);
            let l = graph_laplacian(&g);
            let eig = l.matrix.clone().symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|e| e.abs() <= 1.0 + 1e-10));
            assert!((l.matrix.clone() - l.matrix.transpose()).abs().max() == 0.0);
        }
    }

    #[test]
    fn dangling_edge_rejected() {
        let err = Graph::new(RMatrix::identity(3, 3), &[(0, 5)], vec![None; 3]).unwrap_err();
        assert!(matches!(err, Error::Graph(_)));
    }

    #[test]
    fn json_round_trip() {
        let g = random_graph(5, 0.4, 3, 2, 8);
        let back = Graph::from_json_str(&g.to_json()).unwrap().with_num_classes(2).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn json_feature_length_mismatch() {
        let s = r#"{"nodes":[{"id":0,"features":[1.0,2.0],"label":null},{"id":1,"features":[1.0],"label":0}],"edges":[]}"#;
        assert!(Graph::from_json_str(s).is_err());
    }

    #[test]
    fn two_node_json() {
        let s = r#"{"nodes":[{"id":0,"features":[1.0],"label":0},{"id":1,"features":[0.5],"label":null}],"edges":[[0,1]]}"#;
        let g = Graph::from_json_str(s).unwrap();
        assert_eq!((g.num_nodes(), g.edges().len()), (2, 1));
    }

    #[test]
    fn tsv_loader() {
        let dir = std::env::temp_dir().join(format!("qgnn-tsv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let e = dir.join("e.tsv");
        let f = dir.join("f.csv");
        std::fs::write(&e, "0\t1\n1\t2\n").unwrap();
        std::fs::write(&f, "1.0,0.0\n0.0,1.0\n0.5,0.5\n").unwrap();
        let g = load_graph(&e, &GraphFormat::EdgeListTsv { features_csv: f.clone() }).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        std::fs::write(&e, "0\t7\n").unwrap();
        assert!(load_graph(&e, &GraphFormat::EdgeListTsv { features_csv: f }).is_err());
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn permutation_consistency_of_adjacency() {
        let g = random_graph(6, 0.5, 2, 2, 4);
        let perm = [3, 0, 5, 1, 4, 2];
        let gp = g.permuted(&perm).unwrap();
        let a = normalized_adjacency(&g);
        let ap = normalized_adjacency(&gp);
        for i in 0..6 {
            for j in 0..6 {
                assert!((ap[(perm[i], perm[j])] - a[(i, j)]).abs() < 1e-15);
            }
        }
    }
}
