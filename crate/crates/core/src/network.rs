//! Graphs of relations, markings and the two-step graph.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{GroupElement, ReactionGroup};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("a relation graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node index {node} out of range for {count} nodes")]
    NodeOutOfRange { node: usize, count: usize },
    #[error("self-loop at node `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge ({from}, {to})")]
    DuplicateEdge { from: String, to: String },
    #[error("edge ({from}, {to}) has no reverse edge ({to}, {from})")]
    MissingReverse { from: String, to: String },
    #[error("graph is not connected: node `{0}` is unreachable from the first node")]
    Disconnected(String),
    #[error("duplicate node label `{0}`")]
    DuplicateLabel(String),
    #[error("expected {expected} marks, got {found}")]
    MarkCount { expected: usize, found: usize },
    #[error("mark on edge ({from}, {to}) belongs to a different group")]
    ForeignMark { from: String, to: String },
    #[error("({from}, {to}) is not an edge")]
    NotAnEdge { from: usize, to: usize },
    #[error("path is not contiguous at step {step}")]
    NonContiguous { step: usize },
    #[error("marking is not potential")]
    NotPotential,
}

/// A connected, loop-free, symmetric directed graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationGraph {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
    adjacency: Vec<Vec<usize>>,
}

impl RelationGraph {
    /// Builds a graph from undirected pairs; both directions are added.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, NetworkError> {
        let mut directed = Vec::new();
        for (i, j) in pairs {
            directed.push((i, j));
            directed.push((j, i));
        }
        directed.sort_unstable();
        directed.dedup();
        Self::from_directed(numbered_labels(n), directed)
    }

    /// Builds a graph from directed edges, which must already be symmetric.
    pub fn from_directed(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, NetworkError> {
        let n = labels.len();
        if n < 2 {
            return Err(NetworkError::TooFewNodes(n));
        }
        for (k, l) in labels.iter().enumerate() {
            if labels[..k].contains(l) {
                return Err(NetworkError::DuplicateLabel(l.clone()));
            }
        }
        let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
        for &(i, j) in &edges {
            for node in [i, j] {
                if node >= n {
                    return Err(NetworkError::NodeOutOfRange { node, count: n });
                }
            }
            if i == j {
                return Err(NetworkError::SelfLoop(labels[i].clone()));
            }
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            let (i, j) = w[0];
            return Err(NetworkError::DuplicateEdge { from: labels[i].clone(), to: labels[j].clone() });
        }
        let index: HashMap<(usize, usize), usize> =
            edges.iter().enumerate().map(|(id, &e)| (e, id)).collect();
        if let Some(&(i, j)) = edges.iter().find(|&&(i, j)| !index.contains_key(&(j, i))) {
            return Err(NetworkError::MissingReverse { from: labels[i].clone(), to: labels[j].clone() });
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &edges {
            adjacency[i].push(j);
        }
        let graph = Self { labels, edges, index, adjacency };
        let order = graph.bfs_order(0);
        if order.len() < n {
            let mut seen = vec![false; n];
            order.iter().for_each(|&v| seen[v] = true);
            let lost = seen.iter().position(|s| !s).unwrap_or(0);
            return Err(NetworkError::Disconnected(graph.labels[lost].clone()));
        }
        Ok(graph)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, NetworkError> {
        if labels.len() != self.labels.len() {
            return Err(NetworkError::MarkCount { expected: self.labels.len(), found: labels.len() });
        }
        for (k, l) in labels.iter().enumerate() {
            if labels[..k].contains(l) {
                return Err(NetworkError::DuplicateLabel(l.clone()));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn complete(n: usize) -> Result<Self, NetworkError> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    /// The cycle `0 - 1 - … - (n-1) - 0`.
    pub fn cycle(n: usize) -> Result<Self, NetworkError> {
        if n < 3 {
            return Err(NetworkError::TooFewNodes(n));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Star with centre 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Result<Self, NetworkError> {
        Self::new(leaves + 1, (1..=leaves).map(|j| (0, j)))
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    /// Directed edges in index order (lexicographic).
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_id(&self, from: usize, to: usize) -> Option<usize> {
        self.index.get(&(from, to)).copied()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.index.contains_key(&(from, to))
    }

    /// Sorted neighbours of `node`.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn is_complete(&self) -> bool {
        let n = self.node_count();
        self.edges.len() == n * (n - 1)
    }

    pub fn adjacency_matrix(&self) -> Vec<Vec<bool>> {
        let n = self.node_count();
        let mut m = vec![vec![false; n]; n];
        for &(i, j) in &self.edges {
            m[i][j] = true;
        }
        m
    }

    /// Nodes in breadth-first order from `root`.
    pub fn bfs_order(&self, root: usize) -> Vec<usize> {
        self.bfs_tree(root).0
    }

    /// Breadth-first order and parent pointers.
    pub fn bfs_tree(&self, root: usize) -> (Vec<usize>, Vec<Option<usize>>) {
        let n = self.node_count();
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    queue.push_back(w);
                }
            }
        }
        (order, parent)
    }

    /// Shortest path `from → to` as a node sequence.
    pub fn shortest_path(&self, from: usize, to: usize) -> Vec<usize> {
        let (_, parent) = self.bfs_tree(from);
        let mut nodes = vec![to];
        let mut v = to;
        while let Some(p) = parent[v] {
            nodes.push(p);
            v = p;
        }
        nodes.reverse();
        nodes
    }

    /// Two-colouring with node 0 in the first part, or `None` for odd cycles.
    pub fn bipartition(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        let colours = self.two_colouring()?;
        let (a, b): (Vec<usize>, Vec<usize>) = (0..self.node_count()).partition(|&v| !colours[v]);
        Some((a, b))
    }

    fn two_colouring(&self) -> Option<Vec<bool>> {
        let n = self.node_count();
        let mut colour = vec![false; n];
        let (order, parent) = self.bfs_tree(0);
        for &v in &order {
            if let Some(p) = parent[v] {
                colour[v] = !colour[p];
            }
        }
        self.edges.iter().all(|&(i, j)| colour[i] != colour[j]).then_some(colour)
    }

    pub fn is_bipartite(&self) -> bool {
        self.two_colouring().is_some()
    }

    pub fn two_step(&self) -> TwoStepGraph {
        TwoStepGraph::new(self)
    }
}

pub(crate) fn numbered_labels(n: usize) -> Vec<String> {
    (1..=n).map(|k| k.to_string()).collect()
}

/// Group-valued marks on the edges of a relation graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Marking {
    graph: Arc<RelationGraph>,
    group: Arc<ReactionGroup>,
    marks: Vec<GroupElement>,
}

impl Marking {
    /// Marks are given in edge-index order.
    pub fn new(
        graph: Arc<RelationGraph>,
        group: Arc<ReactionGroup>,
        marks: Vec<GroupElement>,
    ) -> Result<Self, NetworkError> {
        if marks.len() != graph.edge_count() {
            return Err(NetworkError::MarkCount { expected: graph.edge_count(), found: marks.len() });
        }
        if let Some(id) = marks.iter().position(|&g| !group.contains(g)) {
            let (i, j) = graph.edges()[id];
            return Err(NetworkError::ForeignMark {
                from: graph.label(i).to_owned(),
                to: graph.label(j).to_owned(),
            });
        }
        Ok(Self { graph, group, marks })
    }

    pub fn from_fn(
        graph: Arc<RelationGraph>,
        group: Arc<ReactionGroup>,
        mut mark: impl FnMut(usize, usize) -> GroupElement,
    ) -> Result<Self, NetworkError> {
        let marks = graph.edges().iter().map(|&(i, j)| mark(i, j)).collect();
        Self::new(graph, group, marks)
    }

    pub fn uniform(graph: Arc<RelationGraph>, group: Arc<ReactionGroup>, g: GroupElement) -> Result<Self, NetworkError> {
        Self::from_fn(graph, group, |_, _| g)
    }

    pub fn identity(graph: Arc<RelationGraph>, group: Arc<ReactionGroup>) -> Self {
        let e = group.identity();
        let marks = vec![e; graph.edge_count()];
        Self { graph, group, marks }
    }

    pub fn graph(&self) -> &Arc<RelationGraph> {
        &self.graph
    }

    pub fn group(&self) -> &Arc<ReactionGroup> {
        &self.group
    }

    /// Marks in edge-index order.
    pub fn marks(&self) -> &[GroupElement] {
        &self.marks
    }

    pub fn mark(&self, edge: usize) -> GroupElement {
        self.marks[edge]
    }

    pub fn get(&self, from: usize, to: usize) -> Option<GroupElement> {
        self.graph.edge_id(from, to).map(|id| self.marks[id])
    }

    /// `g_ij`; panics if `(i, j)` is not an edge.
    pub fn g(&self, from: usize, to: usize) -> GroupElement {
        self.get(from, to).unwrap_or_else(|| panic!("({from}, {to}) is not an edge"))
    }

    pub fn is_symmetric(&self) -> bool {
        self.graph.edges().iter().all(|&(i, j)| self.g(i, j) == self.g(j, i))
    }

    /// Mark names in edge-index order.
    pub fn names(&self) -> Vec<&str> {
        self.marks.iter().map(|&g| self.group.name(g)).collect()
    }

    /// Extension to the complete graph by shortest-path products; diagonal entries are implicit `e`.
    pub fn complete_extension(&self) -> Result<Marking, NetworkError> {
        if !crate::potential::is_potential(self).holds() {
            return Err(NetworkError::NotPotential);
        }
        if self.graph.is_complete() {
            return Ok(self.clone());
        }
        let n = self.graph.node_count();
        let complete = RelationGraph::complete(n)?.with_labels(self.graph.labels().to_vec())?;
        let complete = Arc::new(complete);
        let mut marks = Vec::with_capacity(complete.edge_count());
        for &(i, j) in complete.edges() {
            let g = match self.get(i, j) {
                Some(g) => g,
                None => {
                    let nodes = self.graph.shortest_path(i, j);
                    self.group.product(nodes.windows(2).map(|w| self.g(w[0], w[1])))
                }
            };
            marks.push(g);
        }
        Ok(Marking { graph: complete, group: self.group.clone(), marks })
    }
}

/// The two-step multigraph: one edge `(i, j)` per mediator `k` with `(i,k), (k,j)` in the graph.
///
/// Triples with `i = j` are omitted; their star marks are always `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoStepGraph {
    nodes: usize,
    triples: Vec<(usize, usize, usize)>,
    component: Vec<usize>,
    components: Vec<Vec<usize>>,
}

impl TwoStepGraph {
    pub fn new(graph: &RelationGraph) -> Self {
        let n = graph.node_count();
        let mut triples = Vec::new();
        for i in 0..n {
            for &k in graph.neighbors(i) {
                for &j in graph.neighbors(k) {
                    if j != i {
                        triples.push((i, k, j));
                    }
                }
            }
        }
        triples.sort_unstable_by_key(|&(i, k, j)| (i, j, k));
        let mut component = vec![usize::MAX; n];
        let mut components = Vec::new();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, _, j) in &triples {
            out[i].push(j);
        }
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = vec![start];
            component[start] = id;
            let mut cursor = 0;
            while cursor < members.len() {
                let v = members[cursor];
                cursor += 1;
                for &w in &out[v] {
                    if component[w] == usize::MAX {
                        component[w] = id;
                        members.push(w);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        Self { nodes: n, triples, component, components }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// Triples `(i, k, j)`: an edge from `i` to `j` through mediator `k`.
    pub fn triples(&self) -> &[(usize, usize, usize)] {
        &self.triples
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component_of(&self, node: usize) -> usize {
        self.component[node]
    }
}

/// Induced marks `a_ij(k) = g_ki⁻¹ g_kj` on the two-step graph.
#[derive(Debug, Clone, PartialEq)]
pub struct StarMarking {
    two_step: TwoStepGraph,
    group: Arc<ReactionGroup>,
    marks: Vec<GroupElement>,
    index: HashMap<(usize, usize, usize), usize>,
}

impl StarMarking {
    pub fn new(marking: &Marking) -> Self {
        let two_step = marking.graph().two_step();
        let group = marking.group().clone();
        let marks = two_step
            .triples()
            .iter()
            .map(|&(i, k, j)| group.mul(group.inverse(marking.g(k, i)), marking.g(k, j)))
            .collect();
        let index = two_step.triples().iter().enumerate().map(|(id, &t)| (t, id)).collect();
        Self { two_step, group, marks, index }
    }

    pub fn two_step(&self) -> &TwoStepGraph {
        &self.two_step
    }

    pub fn group(&self) -> &Arc<ReactionGroup> {
        &self.group
    }

    /// Marks aligned with [`TwoStepGraph::triples`].
    pub fn marks(&self) -> &[GroupElement] {
        &self.marks
    }

    /// `a_ij(k)`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> Option<GroupElement> {
        if i == j {
            return self.two_step.triples().iter().any(|&(a, b, _)| a == i && b == k).then(|| self.group.identity());
        }
        self.index.get(&(i, k, j)).map(|&id| self.marks[id])
    }
}

pub fn star_marking(marking: &Marking) -> StarMarking {
    StarMarking::new(marking)
}

/// A contiguous directed path, stored as its node sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    nodes: Vec<usize>,
}

impl Path {
    /// The empty path at `node`.
    pub fn empty(node: usize) -> Self {
        Self { nodes: vec![node] }
    }

    pub fn from_nodes(nodes: Vec<usize>) -> Self {
        assert!(!nodes.is_empty(), "a path visits at least one node");
        Self { nodes }
    }

    /// From an edge sequence; each edge's head must equal the next edge's tail.
    pub fn from_edges(edges: &[(usize, usize)]) -> Result<Self, NetworkError> {
        let Some(&(first, _)) = edges.first() else {
            return Err(NetworkError::NonContiguous { step: 0 });
        };
        let mut nodes = vec![first];
        for (step, &(i, j)) in edges.iter().enumerate() {
            if *nodes.last().unwrap() != i {
                return Err(NetworkError::NonContiguous { step });
            }
            nodes.push(j);
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn start(&self) -> usize {
        self.nodes[0]
    }

    pub fn end(&self) -> usize {
        *self.nodes.last().unwrap()
    }

    pub fn is_closed(&self) -> bool {
        self.start() == self.end()
    }
}

/// A path in the two-step graph as a sequence of triples `(i, k, j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StarPath {
    steps: Vec<(usize, usize, usize)>,
}

impl StarPath {
    pub fn new(steps: Vec<(usize, usize, usize)>) -> Result<Self, NetworkError> {
        for (step, w) in steps.windows(2).enumerate() {
            if w[0].2 != w[1].0 {
                return Err(NetworkError::NonContiguous { step: step + 1 });
            }
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[(usize, usize, usize)] {
        &self.steps
    }

    pub fn is_closed(&self) -> bool {
        match (self.steps.first(), self.steps.last()) {
            (Some(a), Some(b)) => a.0 == b.2,
            _ => true,
        }
    }
}
