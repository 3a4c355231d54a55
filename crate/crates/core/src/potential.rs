//! Product integrals, potentiality, conditions A1/A2, generated potential fields and balance.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{GroupElement, ReactionGroup};
use crate::network::{Marking, NetworkError, Path, RelationGraph, StarMarking, StarPath};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("potential fields are generated for at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Ordered product `g_{i1 i2} g_{i2 i3} …` along `path`.
pub fn product_integral(marking: &Marking, path: &Path) -> Result<GroupElement, NetworkError> {
    let group = marking.group();
    let mut acc = group.identity();
    for (i, j) in path.edges() {
        let g = marking.get(i, j).ok_or(NetworkError::NotAnEdge { from: i, to: j })?;
        acc = group.mul(acc, g);
    }
    Ok(acc)
}

/// Ordered product `a_{i1 i2}(k1) a_{i2 i3}(k2) …` along a two-step path.
pub fn product_integral_star(star: &StarMarking, path: &StarPath) -> Result<GroupElement, NetworkError> {
    let group = star.group();
    let mut acc = group.identity();
    for &(i, k, j) in path.steps() {
        let a = star.get(i, j, k).ok_or(NetworkError::NotAnEdge { from: i, to: j })?;
        acc = group.mul(acc, a);
    }
    Ok(acc)
}

struct GaugeEdge {
    from: usize,
    to: usize,
    reverse: usize,
    mark: GroupElement,
}

/// Tree gauge over an edge list whose edges come in reverse pairs.
///
/// Returns `u` with `u(from)·mark = u(to)` on every edge, or the edge ids of a closed
/// path whose product differs from `e`.
fn gauge(n: usize, edges: &[GaugeEdge], group: &ReactionGroup) -> Result<Vec<GroupElement>, Vec<usize>> {
    let e = group.identity();
    for (id, edge) in edges.iter().enumerate() {
        if group.mul(edge.mark, edges[edge.reverse].mark) != e {
            return Err(vec![id, edge.reverse]);
        }
    }
    let mut out = vec![Vec::new(); n];
    for (id, edge) in edges.iter().enumerate() {
        out[edge.from].push(id);
    }
    let mut u: Vec<Option<GroupElement>> = vec![None; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut depth = vec![0usize; n];
    for root in 0..n {
        if u[root].is_some() {
            continue;
        }
        u[root] = Some(e);
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &id in &out[v] {
                let w = edges[id].to;
                if u[w].is_none() {
                    u[w] = Some(group.mul(u[v].unwrap(), edges[id].mark));
                    parent[w] = Some(id);
                    depth[w] = depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    let u: Vec<GroupElement> = u.into_iter().map(Option::unwrap).collect();
    for (id, edge) in edges.iter().enumerate() {
        if group.mul(u[edge.from], edge.mark) == u[edge.to] {
            continue;
        }
        let (mut a, mut b) = (edge.from, edge.to);
        let mut down = Vec::new();
        let mut up = Vec::new();
        while a != b {
            if depth[a] >= depth[b] {
                let p = parent[a].unwrap();
                down.push(p);
                a = edges[p].from;
            } else {
                let p = parent[b].unwrap();
                up.push(edges[p].reverse);
                b = edges[p].from;
            }
        }
        down.reverse();
        down.push(id);
        down.extend(up);
        return Err(down);
    }
    Ok(u)
}

/// `u(k) = R(L_{root,k})`, defined by `u(root) = e` and `u(j)·g_jk = u(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFunction {
    pub root: usize,
    pub values: Vec<GroupElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialVerdict {
    Potential(PotentialFunction),
    /// A closed path whose product integral is not `e`.
    Violated { cycle: Path, product: GroupElement },
}

impl PotentialVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, PotentialVerdict::Potential(_))
    }

    pub fn potential(&self) -> Option<&PotentialFunction> {
        match self {
            PotentialVerdict::Potential(u) => Some(u),
            PotentialVerdict::Violated { .. } => None,
        }
    }
}

pub fn is_potential(marking: &Marking) -> PotentialVerdict {
    let graph = marking.graph();
    let edges: Vec<GaugeEdge> = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(id, &(i, j))| GaugeEdge {
            from: i,
            to: j,
            reverse: graph.edge_id(j, i).unwrap(),
            mark: marking.mark(id),
        })
        .collect();
    match gauge(graph.node_count(), &edges, marking.group()) {
        Ok(values) => PotentialVerdict::Potential(PotentialFunction { root: 0, values }),
        Err(ids) => {
            let mut nodes = vec![edges[ids[0]].from];
            nodes.extend(ids.iter().map(|&id| edges[id].to));
            let cycle = Path::from_nodes(nodes);
            let product = product_integral(marking, &cycle).unwrap();
            PotentialVerdict::Violated { cycle, product }
        }
    }
}

fn star_gauge_edges(star: &StarMarking) -> Vec<GaugeEdge> {
    let triples = star.two_step().triples();
    let index: HashMap<(usize, usize, usize), usize> =
        triples.iter().enumerate().map(|(id, &t)| (t, id)).collect();
    triples
        .iter()
        .enumerate()
        .map(|(id, &(i, k, j))| GaugeEdge { from: i, to: j, reverse: index[&(j, k, i)], mark: star.marks()[id] })
        .collect()
}

/// A closed two-step path with non-identity product, if the star marking is not potential.
pub fn a1_violation(marking: &Marking) -> Option<(StarPath, GroupElement)> {
    let star = StarMarking::new(marking);
    let edges = star_gauge_edges(&star);
    let ids = gauge(marking.graph().node_count(), &edges, marking.group()).err()?;
    let triples = star.two_step().triples();
    let path = StarPath::new(ids.iter().map(|&id| triples[id]).collect()).unwrap();
    let product = product_integral_star(&star, &path).unwrap();
    Some((path, product))
}

/// Condition A1: the star marking is potential on every component of the two-step graph.
pub fn check_a1(marking: &Marking) -> bool {
    a1_violation(marking).is_none()
}

/// Characteristic reactions `a_i = g_ij g_ji`, one per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacteristicReactions(pub Vec<GroupElement>);

impl CharacteristicReactions {
    pub fn get(&self, node: usize) -> GroupElement {
        self.0[node]
    }

    pub fn all_identity(&self, group: &ReactionGroup) -> bool {
        self.0.iter().all(|&a| a == group.identity())
    }
}

/// Condition A2: `g_ij g_ji` does not depend on the neighbour `j`.
pub fn check_a2(marking: &Marking) -> Option<CharacteristicReactions> {
    if a2_failure(marking).is_some() {
        return None;
    }
    let graph = marking.graph();
    let group = marking.group();
    let values = (0..graph.node_count())
        .map(|i| {
            let j = graph.neighbors(i)[0];
            group.mul(marking.g(i, j), marking.g(j, i))
        })
        .collect();
    Some(CharacteristicReactions(values))
}

/// First node whose characteristic reaction depends on the neighbour, as `(node, j1, j2)`.
pub fn a2_failure(marking: &Marking) -> Option<(usize, usize, usize)> {
    let graph = marking.graph();
    let group = marking.group();
    (0..graph.node_count()).find_map(|i| {
        let neighbours = graph.neighbors(i);
        let a = |j: usize| group.mul(marking.g(i, j), marking.g(j, i));
        let first = a(neighbours[0]);
        neighbours[1..].iter().find(|&&j| a(j) != first).map(|&j| (i, neighbours[0], j))
    })
}

/// All potential markings of the complete graph on `n` nodes, indexed by the free marks `g(1,m)`.
///
/// Every other mark is forced: `g(m,1) = g(1,m)⁻¹` and `g(j,m) = g(1,j)⁻¹ g(1,m)`.
#[derive(Debug, Clone)]
pub struct PotentialFieldStream {
    graph: Arc<RelationGraph>,
    group: Arc<ReactionGroup>,
    next: usize,
    total: usize,
}

pub fn generate_potential_fields(
    group: Arc<ReactionGroup>,
    n: usize,
) -> Result<PotentialFieldStream, PotentialError> {
    if n < 3 {
        return Err(PotentialError::TooFewNodes(n));
    }
    let graph = Arc::new(RelationGraph::complete(n)?);
    let total = group.order().pow((n - 1) as u32);
    Ok(PotentialFieldStream { graph, group, next: 0, total })
}

impl PotentialFieldStream {
    pub fn restart(&mut self) {
        self.next = 0;
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// The marking with free marks given by the base-|G| digits of `index` (node 2 least significant).
    pub fn field(&self, index: usize) -> Marking {
        let group = &self.group;
        let n = self.graph.node_count();
        let mut free = vec![group.identity(); n];
        let mut rest = index;
        for slot in free.iter_mut().skip(1) {
            *slot = group.element(rest % group.order()).unwrap();
            rest /= group.order();
        }
        Marking::from_fn(self.graph.clone(), group.clone(), |i, j| group.mul(group.inverse(free[i]), free[j]))
            .unwrap()
    }
}

impl Iterator for PotentialFieldStream {
    type Item = Marking;

    fn next(&mut self) -> Option<Marking> {
        if self.next >= self.total {
            return None;
        }
        let m = self.field(self.next);
        self.next += 1;
        Some(m)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.total - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for PotentialFieldStream {}

/// The three-parameter family of solutions on the complete graph of 3 nodes.
pub fn gamma3_solution_family(
    group: Arc<ReactionGroup>,
    x1: GroupElement,
    x2: GroupElement,
    x3: GroupElement,
) -> Result<Marking, NetworkError> {
    let graph = Arc::new(RelationGraph::complete(3)?);
    let gr = &group;
    let x3i = gr.inverse(x3);
    let g21 = gr.product([x3i, x2, x1, x3i, x2]);
    let g13 = gr.product([x1, x3i, x2, x1, x3i]);
    let g23 = gr.product([x3i, x2, x1, x3i, x2, x1, x3i]);
    let marks = [((0, 1), x1), ((2, 0), x2), ((2, 1), x3), ((1, 0), g21), ((0, 2), g13), ((1, 2), g23)];
    let table: HashMap<(usize, usize), GroupElement> = marks.into_iter().collect();
    Marking::from_fn(graph, group.clone(), |i, j| table[&(i, j)])
}

/// Two blocks with positive edges inside and negative edges across.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancePartition {
    /// Contains node 0.
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    /// Edge signs in edge-index order.
    pub signs: Vec<i8>,
}

/// `e ↦ +1`, anything else `↦ -1`.
pub fn identity_signs(marking: &Marking) -> Vec<i8> {
    let e = marking.group().identity();
    marking.marks().iter().map(|&g| if g == e { 1 } else { -1 }).collect()
}

pub fn balance_partition(graph: &RelationGraph, signs: &[i8]) -> Option<BalancePartition> {
    assert_eq!(signs.len(), graph.edge_count());
    let sign = |i: usize, j: usize| signs[graph.edge_id(i, j).unwrap()];
    let n = graph.node_count();
    let mut side = vec![None; n];
    side[0] = Some(false);
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        for &w in graph.neighbors(v) {
            let expected = side[v].unwrap() ^ (sign(v, w) < 0);
            match side[w] {
                None => {
                    side[w] = Some(expected);
                    queue.push_back(w);
                }
                Some(s) if s != expected => return None,
                Some(_) => {}
            }
        }
    }
    let (first, second): (Vec<usize>, Vec<usize>) = (0..n).partition(|&v| side[v] == Some(false));
    Some(BalancePartition { first, second, signs: signs.to_vec() })
}

pub fn balance_partition_of(marking: &Marking) -> Option<BalancePartition> {
    balance_partition(marking.graph(), &identity_signs(marking))
}
