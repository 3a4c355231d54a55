//! System states, the update map `F`, the induced Markov chain and its class structure.

use std::collections::VecDeque;
use std::sync::Arc;

use num_rational::Ratio;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{AlgebraError, GroupElement, ReactionGroup};
use crate::network::{Marking, NetworkError, RelationGraph, StarMarking};
use crate::potential::{check_a1, check_a2, is_potential};

pub const DEFAULT_BOUND_STATES: usize = 4096;
/// Tolerance on row sums of transition matrices.
pub const TAU_DYN: f64 = 1e-12;
/// Largest number of markings a scan will enumerate.
pub const MAX_SCAN_MARKINGS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("state space has {size} states, bound is {bound}")]
    StateSpaceTooLarge { size: u128, bound: usize },
    #[error("choice weights at node {node} must be positive and finite, one per neighbour")]
    BadWeights { node: usize },
    #[error("marking scan would enumerate {count} markings, bound is {bound}")]
    ScanTooLarge { count: u128, bound: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A system state: one state index per node.
pub type SystemState = Vec<usize>;

/// All states `E^A`, indexed lexicographically with node 0 most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    nodes: usize,
    states: usize,
    size: usize,
}

impl StateSpace {
    pub fn new(nodes: usize, states: usize, bound: usize) -> Result<Self, DynamicsError> {
        let size = (states as u128).pow(nodes as u32);
        if size > bound as u128 {
            return Err(DynamicsError::StateSpaceTooLarge { size, bound });
        }
        Ok(Self { nodes, states, size: size as usize })
    }

    pub fn for_marking(marking: &Marking, bound: usize) -> Result<Self, DynamicsError> {
        Self::new(marking.graph().node_count(), marking.group().states().len(), bound)
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn encode(&self, x: &[usize]) -> usize {
        x.iter().fold(0, |acc, &v| acc * self.states + v)
    }

    pub fn decode(&self, mut index: usize) -> SystemState {
        let mut x = vec![0; self.nodes];
        for slot in x.iter_mut().rev() {
            *slot = index % self.states;
            index /= self.states;
        }
        x
    }
}

/// Per-node choice probabilities over neighbours, aligned with [`RelationGraph::neighbors`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceDistribution {
    weights: Vec<Vec<f64>>,
}

impl ChoiceDistribution {
    pub fn uniform(graph: &RelationGraph) -> Self {
        let weights = (0..graph.node_count()).map(|i| vec![1.0 / graph.degree(i) as f64; graph.degree(i)]).collect();
        Self { weights }
    }

    /// Positive weights, normalized per node.
    pub fn new(graph: &RelationGraph, weights: Vec<Vec<f64>>) -> Result<Self, DynamicsError> {
        if weights.len() != graph.node_count() {
            return Err(DynamicsError::BadWeights { node: weights.len().min(graph.node_count()) });
        }
        let mut normalized = Vec::with_capacity(weights.len());
        for (node, w) in weights.into_iter().enumerate() {
            if w.len() != graph.degree(node) || w.iter().any(|&q| !(q > 0.0 && q.is_finite())) {
                return Err(DynamicsError::BadWeights { node });
            }
            let total: f64 = w.iter().sum();
            normalized.push(w.into_iter().map(|q| q / total).collect());
        }
        Ok(Self { weights: normalized })
    }

    /// `q_i` over the sorted neighbours of `node`.
    pub fn weights(&self, node: usize) -> &[f64] {
        &self.weights[node]
    }
}

/// Distinct options `{g_ij x_j : j ∈ ∂i}` of node `i`, sorted.
pub fn node_options(marking: &Marking, x: &[usize], i: usize) -> Vec<usize> {
    let group = marking.group();
    let mut out: Vec<usize> = marking.graph().neighbors(i).iter().map(|&j| group.act(marking.g(i, j), x[j])).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// `F(x)`: the product of per-node option sets, sorted lexicographically.
pub fn apply_f(marking: &Marking, x: &[usize]) -> Vec<SystemState> {
    let options: Vec<Vec<usize>> = (0..x.len()).map(|i| node_options(marking, x, i)).collect();
    let mut out = vec![Vec::with_capacity(x.len())];
    for opts in &options {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |&v| {
                    let mut y = prefix.clone();
                    y.push(v);
                    y
                })
            })
            .collect();
    }
    out
}

fn is_single_valued(marking: &Marking, x: &[usize]) -> bool {
    let group = marking.group();
    let graph = marking.graph();
    (0..x.len()).all(|i| {
        let mut it = graph.neighbors(i).iter().map(|&j| group.act(marking.g(i, j), x[j]));
        let first = it.next();
        it.all(|v| Some(v) == first)
    })
}

/// Sparse row-stochastic transition matrix over a [`StateSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    space: StateSpace,
    rows: Vec<Vec<(usize, f64)>>,
}

fn per_node_distribution<W: Clone + std::ops::AddAssign>(
    marking: &Marking,
    x: &[usize],
    i: usize,
    weights: &[W],
) -> Vec<(usize, W)> {
    let group = marking.group();
    let mut dist: Vec<(usize, W)> = Vec::new();
    for (&j, q) in marking.graph().neighbors(i).iter().zip(weights) {
        let v = group.act(marking.g(i, j), x[j]);
        match dist.iter_mut().find(|(s, _)| *s == v) {
            Some((_, w)) => *w += q.clone(),
            None => dist.push((v, q.clone())),
        }
    }
    dist.sort_unstable_by_key(|&(s, _)| s);
    dist
}

fn product_row<W: Clone + std::ops::Mul<Output = W>>(
    space: &StateSpace,
    states: usize,
    per_node: Vec<Vec<(usize, W)>>,
    one: W,
) -> Vec<(usize, W)> {
    let mut row = vec![(0usize, one)];
    for dist in per_node {
        row = row
            .into_iter()
            .flat_map(|(prefix, p)| dist.iter().map(move |(v, q)| (prefix * states + v, p.clone() * q.clone())))
            .collect();
    }
    debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
    debug_assert!(row.iter().all(|&(y, _)| y < space.len()));
    row
}

pub fn build_markov(
    marking: &Marking,
    choice: &ChoiceDistribution,
    bound: usize,
) -> Result<MarkovModel, DynamicsError> {
    let space = StateSpace::for_marking(marking, bound)?;
    let states = marking.group().states().len();
    let rows = (0..space.len())
        .into_par_iter()
        .map(|index| {
            let x = space.decode(index);
            let per_node = (0..x.len()).map(|i| per_node_distribution(marking, &x, i, choice.weights(i))).collect();
            product_row(&space, states, per_node, 1.0)
        })
        .collect();
    Ok(MarkovModel { space, rows })
}

impl MarkovModel {
    /// Builds a model from explicit sparse rows.
    pub fn from_rows(space: StateSpace, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), space.len());
        Self { space, rows }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// Nonzero entries of row `x`, sorted by target.
    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    pub fn rows_mut(&mut self) -> &mut Vec<Vec<(usize, f64)>> {
        &mut self.rows
    }

    pub fn probability(&self, x: usize, y: usize) -> f64 {
        self.rows[x].binary_search_by_key(&y, |&(s, _)| s).map_or(0.0, |k| self.rows[x][k].1)
    }

    pub fn max_row_defect(&self) -> f64 {
        self.rows.iter().map(|r| (r.iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.len()]; self.len()];
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, p) in row {
                m[x][y] = p;
            }
        }
        m
    }

    pub fn support(&self) -> Vec<Vec<usize>> {
        self.rows.iter().map(|r| r.iter().filter(|&&(_, p)| p > 0.0).map(|&(y, _)| y).collect()).collect()
    }

    pub fn classes(&self) -> ClassStructure {
        ClassStructure::new(&self.support())
    }

    pub fn stationary_count(&self) -> usize {
        self.classes().stationary_count()
    }

    pub fn limit_exists(&self) -> bool {
        self.classes().limit_exists()
    }
}

/// Exact transition matrix for uniform choice.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMarkovModel {
    space: StateSpace,
    rows: Vec<Vec<(usize, Ratio<u64>)>>,
}

pub fn build_markov_exact(marking: &Marking, bound: usize) -> Result<ExactMarkovModel, DynamicsError> {
    let space = StateSpace::for_marking(marking, bound)?;
    let graph = marking.graph();
    let states = marking.group().states().len();
    let rows = (0..space.len())
        .into_par_iter()
        .map(|index| {
            let x = space.decode(index);
            let per_node = (0..x.len())
                .map(|i| {
                    let q = vec![Ratio::new(1, graph.degree(i) as u64); graph.degree(i)];
                    per_node_distribution(marking, &x, i, &q)
                })
                .collect();
            product_row(&space, states, per_node, Ratio::from_integer(1))
        })
        .collect();
    Ok(ExactMarkovModel { space, rows })
}

impl ExactMarkovModel {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn row(&self, x: usize) -> &[(usize, Ratio<u64>)] {
        &self.rows[x]
    }

    pub fn rows_sum_to_one(&self) -> bool {
        self.rows.iter().all(|r| r.iter().map(|&(_, p)| p).sum::<Ratio<u64>>() == Ratio::from_integer(1))
    }

    pub fn to_float(&self) -> MarkovModel {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&(y, p)| (y, *p.numer() as f64 / *p.denom() as f64)).collect())
            .collect();
        MarkovModel { space: self.space, rows }
    }

    pub fn classes(&self) -> ClassStructure {
        let support: Vec<Vec<usize>> = self.rows.iter().map(|r| r.iter().map(|&(y, _)| y).collect()).collect();
        ClassStructure::new(&support)
    }
}

/// Closed communicating classes of a transition graph, with their periods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassStructure {
    /// Sorted members of each closed class, ordered by smallest member.
    pub closed: Vec<Vec<usize>>,
    pub periods: Vec<usize>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl ClassStructure {
    pub fn new(successors: &[Vec<usize>]) -> Self {
        let n = successors.len();
        let mut graph = DiGraph::<(), ()>::with_capacity(n, 0);
        let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
        for (x, succ) in successors.iter().enumerate() {
            for &y in succ {
                graph.add_edge(nodes[x], nodes[y], ());
            }
        }
        let mut class_of = vec![usize::MAX; n];
        let sccs = tarjan_scc(&graph);
        for (c, scc) in sccs.iter().enumerate() {
            for v in scc {
                class_of[v.index()] = c;
            }
        }
        let mut closed: Vec<Vec<usize>> = sccs
            .iter()
            .enumerate()
            .filter(|(c, scc)| scc.iter().all(|v| successors[v.index()].iter().all(|&y| class_of[y] == *c)))
            .map(|(_, scc)| {
                let mut members: Vec<usize> = scc.iter().map(|v| v.index()).collect();
                members.sort_unstable();
                members
            })
            .collect();
        closed.sort_unstable();
        let periods = closed.iter().map(|members| class_period(successors, members)).collect();
        Self { closed, periods }
    }

    pub fn stationary_count(&self) -> usize {
        self.closed.len()
    }

    pub fn limit_exists(&self) -> bool {
        self.periods.iter().all(|&p| p == 1)
    }
}

fn class_period(successors: &[Vec<usize>], members: &[usize]) -> usize {
    let mut level = std::collections::HashMap::new();
    level.insert(members[0], 0usize);
    let mut queue = VecDeque::from([members[0]]);
    let mut period = 0;
    while let Some(v) = queue.pop_front() {
        let lv = level[&v];
        for &w in &successors[v] {
            match level.get(&w) {
                Some(&lw) => period = gcd(period, (lv + 1).abs_diff(lw)),
                None => {
                    level.insert(w, lv + 1);
                    queue.push_back(w);
                }
            }
        }
    }
    period.max(1)
}

pub fn stationary_count(model: &MarkovModel) -> usize {
    model.stationary_count()
}

pub fn limit_exists(model: &MarkovModel) -> bool {
    model.limit_exists()
}

/// Transition support without probabilities: the successors of `x` are exactly `F(x)`.
pub fn transition_support(marking: &Marking, bound: usize) -> Result<Vec<Vec<usize>>, DynamicsError> {
    let space = StateSpace::for_marking(marking, bound)?;
    Ok((0..space.len())
        .map(|index| apply_f(marking, &space.decode(index)).iter().map(|y| space.encode(y)).collect())
        .collect())
}

/// `x_j = R(L*_{j,root}) t` on each component of the two-step graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreParameterization {
    /// Smallest node of each two-step component.
    pub roots: Vec<usize>,
    pub component: Vec<usize>,
    /// Group element carrying the root value to node `j`.
    pub transforms: Vec<GroupElement>,
}

impl CoreParameterization {
    /// Closed form from a star marking that is potential on every component.
    fn new(marking: &Marking) -> Option<Self> {
        if !check_a1(marking) {
            return None;
        }
        let star = StarMarking::new(marking);
        let two = star.two_step();
        let group = marking.group();
        let n = two.node_count();
        let mut transforms = vec![group.identity(); n];
        let mut seen = vec![false; n];
        for members in two.components() {
            let root = members[0];
            seen[root] = true;
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                for (&(i, _, j), &a) in two.triples().iter().zip(star.marks()) {
                    // x_i = a_ij(k) x_j, so x_j = a_ij(k)⁻¹ x_i
                    if i == v && !seen[j] {
                        seen[j] = true;
                        transforms[j] = group.mul(group.inverse(a), transforms[v]);
                        queue.push_back(j);
                    }
                }
            }
        }
        let roots = two.components().iter().map(|c| c[0]).collect();
        let component = (0..n).map(|v| two.component_of(v)).collect();
        Some(Self { roots, component, transforms })
    }

    /// `z(t)` or `z(t, r)`: one root value per component.
    pub fn state(&self, group: &ReactionGroup, params: &[usize]) -> SystemState {
        (0..self.transforms.len()).map(|j| group.act(self.transforms[j], params[self.component[j]])).collect()
    }
}

/// `W₀ = {x : |F(x)| = 1}`, with the closed form when condition A1 holds.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreSet {
    /// Indices of `W₀` in the state space, ascending.
    pub states: Vec<usize>,
    pub parameterization: Option<CoreParameterization>,
    /// Closed-form states agree with the scan.
    pub closed_form_matches: Option<bool>,
    /// `F(W₀) ⊆ W₀`.
    pub closed_under_f: bool,
}

pub fn core_set(marking: &Marking, bound: usize) -> Result<CoreSet, DynamicsError> {
    let space = StateSpace::for_marking(marking, bound)?;
    let states: Vec<usize> = (0..space.len()).filter(|&i| is_single_valued(marking, &space.decode(i))).collect();
    let closed_under_f = states.iter().all(|&i| {
        let y = apply_f(marking, &space.decode(i));
        states.binary_search(&space.encode(&y[0])).is_ok()
    });
    let parameterization = CoreParameterization::new(marking);
    let closed_form_matches = parameterization.as_ref().map(|p| {
        let group = marking.group();
        let k = group.states().len();
        let mut from_form: Vec<usize> = (0..k.pow(p.roots.len() as u32))
            .map(|code| {
                let params: Vec<usize> = (0..p.roots.len()).map(|c| code / k.pow(c as u32) % k).collect();
                space.encode(&p.state(group, &params))
            })
            .collect();
        from_form.sort_unstable();
        from_form.dedup();
        from_form == states
    });
    Ok(CoreSet { states, parameterization, closed_form_matches, closed_under_f })
}

/// Every state reaches `W₀` and no transition leaves it.
pub fn essential_check(model: &MarkovModel, core: &[usize]) -> bool {
    let support = model.support();
    let mut in_core = vec![false; model.len()];
    core.iter().for_each(|&x| in_core[x] = true);
    if core.iter().any(|&x| support[x].iter().any(|&y| !in_core[y])) {
        return false;
    }
    let mut predecessors = vec![Vec::new(); model.len()];
    for (x, succ) in support.iter().enumerate() {
        for &y in succ {
            predecessors[y].push(x);
        }
    }
    let mut reached = in_core.clone();
    let mut queue: VecDeque<usize> = core.iter().copied().collect();
    while let Some(y) = queue.pop_front() {
        for &x in &predecessors[y] {
            if !reached[x] {
                reached[x] = true;
                queue.push_back(x);
            }
        }
    }
    reached.into_iter().all(|r| r)
}

/// Dynamics on the core set against the characteristic equations.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreDynamicsReport {
    pub a1: bool,
    pub a2: bool,
    pub bipartite: bool,
    /// `b` with `F(z(t)) = z(b t)`, or `(v, w)` with `F(z(t, r)) = z(v r, w t)`.
    pub observed: Vec<GroupElement>,
    /// The replay over every parameter value agrees with `observed`.
    pub replay_ok: bool,
    /// `b² = a_i`, or `vw = a_i` and `wv = a_j`.
    pub characteristic_ok: bool,
    /// Solutions of the characteristic equations, best first.
    pub solutions: Vec<Vec<GroupElement>>,
    pub no_solution: bool,
}

pub fn verify_core_dynamics(marking: &Marking, bound: usize) -> Result<CoreDynamicsReport, DynamicsError> {
    let group = marking.group();
    let graph = marking.graph();
    let a1 = check_a1(marking);
    let chars = check_a2(marking);
    let bipartite = graph.is_bipartite();
    let core = core_set(marking, bound)?;
    let (Some(param), Some(chars)) = (core.parameterization.clone(), chars.clone()) else {
        return Ok(CoreDynamicsReport {
            a1,
            a2: chars.is_some(),
            bipartite,
            observed: Vec::new(),
            replay_ok: false,
            characteristic_ok: false,
            solutions: Vec::new(),
            no_solution: true,
        });
    };
    // root value after one step: y_root = g_{root,j} x_j with x_j = T_j(param of j's component)
    let step = |root: usize| -> (GroupElement, usize) {
        let j = graph.neighbors(root)[0];
        (group.mul(marking.g(root, j), param.transforms[j]), param.component[j])
    };
    let k = group.states().len();
    let comps = param.roots.len();
    let steps: Vec<(GroupElement, usize)> = param.roots.iter().map(|&r| step(r)).collect();
    let observed: Vec<GroupElement> = steps.iter().map(|s| s.0).collect();
    let replay_ok = (0..k.pow(comps as u32)).all(|code| {
        let params: Vec<usize> = (0..comps).map(|c| code / k.pow(c as u32) % k).collect();
        let x = param.state(group, &params);
        let next: Vec<usize> = steps.iter().map(|&(b, c)| group.act(b, params[c])).collect();
        apply_f(marking, &x) == vec![param.state(group, &next)]
    });
    let bound_grp = crate::algebra::MAX_GROUP_ORDER;
    let (characteristic_ok, solutions): (bool, Vec<Vec<GroupElement>>) = if comps == 1 {
        let a = chars.get(param.roots[0]);
        let b = observed[0];
        let sols = group.solve_characteristic(a, bound_grp)?.into_iter().map(|v| vec![v]).collect();
        (group.mul(b, b) == a, sols)
    } else {
        let (ai, aj) = (chars.get(param.roots[0]), chars.get(param.roots[1]));
        let (v, w) = (observed[0], observed[1]);
        let sols = group
            .solve_characteristic_pair(ai, aj, bound_grp)?
            .into_iter()
            .map(|(v, w)| vec![v, w])
            .collect();
        (group.mul(v, w) == ai && group.mul(w, v) == aj, sols)
    };
    let no_solution = solutions.is_empty();
    Ok(CoreDynamicsReport {
        a1,
        a2: true,
        bipartite,
        observed,
        replay_ok,
        characteristic_ok,
        solutions,
        no_solution,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkingSpace {
    /// `g_ij = g_ji`: one mark per undirected edge.
    Symmetric,
    /// Independent marks on every directed edge.
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// `(marking, stationary count)` in enumeration order.
    pub counts: Vec<(Marking, usize)>,
    pub best: usize,
}

impl ScanResult {
    /// Markings attaining the maximum number of stationary measures.
    pub fn argmax(&self) -> Vec<&Marking> {
        self.counts.iter().filter(|(_, c)| *c == self.best).map(|(m, _)| m).collect()
    }
}

/// Stationary counts over every marking of `graph` in `space`, in parallel.
pub fn max_nonergodicity_scan(
    graph: Arc<RelationGraph>,
    group: Arc<ReactionGroup>,
    space: MarkingSpace,
    bound: usize,
) -> Result<ScanResult, DynamicsError> {
    StateSpace::new(graph.node_count(), group.states().len(), bound)?;
    let slots: Vec<Vec<usize>> = match space {
        MarkingSpace::All => (0..graph.edge_count()).map(|id| vec![id]).collect(),
        MarkingSpace::Symmetric => graph
            .edges()
            .iter()
            .filter(|&&(i, j)| i < j)
            .map(|&(i, j)| vec![graph.edge_id(i, j).unwrap(), graph.edge_id(j, i).unwrap()])
            .collect(),
    };
    let count = (group.order() as u128).pow(slots.len() as u32);
    if count > MAX_SCAN_MARKINGS as u128 {
        return Err(DynamicsError::ScanTooLarge { count, bound: MAX_SCAN_MARKINGS });
    }
    let order = group.order();
    let counts: Vec<(Marking, usize)> = (0..count as usize)
        .into_par_iter()
        .map(|code| {
            let mut marks = vec![group.identity(); graph.edge_count()];
            for (s, ids) in slots.iter().enumerate() {
                let g = group.element(code / order.pow(s as u32) % order).unwrap();
                ids.iter().for_each(|&id| marks[id] = g);
            }
            let m = Marking::new(graph.clone(), group.clone(), marks).unwrap();
            let support = transition_support(&m, bound).unwrap();
            let c = ClassStructure::new(&support).stationary_count();
            (m, c)
        })
        .collect();
    let best = counts.iter().map(|(_, c)| *c).max().unwrap_or(0);
    Ok(ScanResult { counts, best })
}

/// Whether the marking is potential; shorthand used by reports.
pub fn potential(marking: &Marking) -> bool {
    is_potential(marking).holds()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::generate_potential_fields;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sign() -> Arc<ReactionGroup> {
        Arc::new(ReactionGroup::sign_flip())
    }

    fn k(n: usize) -> Arc<RelationGraph> {
        Arc::new(RelationGraph::complete(n).unwrap())
    }

    /// 1-based symmetric triangle marking from the marks on (1,2), (1,3), (2,3).
    fn triangle(group: &Arc<ReactionGroup>, m12: &str, m13: &str, m23: &str) -> Marking {
        let name = |i: usize, j: usize| match (i.min(j), i.max(j)) {
            (0, 1) => m12,
            (0, 2) => m13,
            _ => m23,
        };
        Marking::from_fn(k(3), group.clone(), |i, j| group.by_name(name(i, j)).unwrap()).unwrap()
    }

    /// `+1` is state 0, `-1` is state 1.
    fn neg(x: usize) -> usize {
        1 - x
    }

    #[test]
    fn state_space_order() {
        let s = StateSpace::new(3, 2, 4096).unwrap();
        assert_eq!(s.decode(1), vec![0, 0, 1]);
        assert_eq!(s.encode(&[1, 0, 0]), 4);
        assert!(matches!(StateSpace::new(13, 2, 4096), Err(DynamicsError::StateSpaceTooLarge { size: 8192, .. })));
    }

    #[test]
    fn update_sets() {
        let group = sign();
        let r = triangle(&group, "e", "g", "e");
        for x in StateSpaceIter::new(3, 2) {
            let expect = {
                let mut v = Vec::new();
                for a in [x[1], neg(x[2])] {
                    for b in [x[0], x[2]] {
                        for c in [x[1], neg(x[0])] {
                            v.push(vec![a, b, c]);
                        }
                    }
                }
                v.sort();
                v.dedup();
                v
            };
            assert_eq!(apply_f(&r, &x), expect);
        }
        for t in 0..2 {
            assert_eq!(apply_f(&r, &[t, neg(t), t]), vec![vec![neg(t), t, neg(t)]]);
        }
        let id = Marking::identity(k(4), group);
        assert_eq!(apply_f(&id, &[1, 1, 1, 1]), vec![vec![1, 1, 1, 1]]);
    }

    struct StateSpaceIter;
    impl StateSpaceIter {
        #[allow(clippy::new_ret_no_self)]
        fn new(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
            let s = StateSpace::new(n, k, usize::MAX).unwrap();
            (0..s.len()).map(move |i| s.decode(i))
        }
    }

    #[test]
    fn transition_probabilities() {
        let group = sign();
        let r = triangle(&group, "e", "g", "e");
        let q = ChoiceDistribution::new(r.graph(), vec![vec![0.2, 0.8], vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let p = build_markov(&r, &q, 4096).unwrap();
        let s = p.space();
        // choices (2, 1, 2) from x = (0, 0, 1) give (x2, x1, x2) with probability q12 q21 q32
        assert!((p.probability(s.encode(&[0, 0, 1]), s.encode(&[0, 0, 0])) - 0.3 * 0.4).abs() < 1e-15);
        // sum over all choice tuples
        let g = r.graph();
        for x in 0..8 {
            let v = s.decode(x);
            let mut expect = [0.0; 8];
            for c in 0..8usize {
                let pick = |i: usize| (c >> i) & 1;
                let y: Vec<usize> = (0..3).map(|i| group.act(r.g(i, g.neighbors(i)[pick(i)]), v[g.neighbors(i)[pick(i)]])).collect();
                expect[s.encode(&y)] += (0..3).map(|i| q.weights(i)[pick(i)]).product::<f64>();
            }
            for (y, e) in expect.iter().enumerate() {
                assert!((p.probability(x, y) - e).abs() < 1e-15);
            }
        }
        assert!(p.max_row_defect() < TAU_DYN);

        let k2 = Arc::new(RelationGraph::complete(2).unwrap());
        let copy = build_markov(&Marking::identity(k2.clone(), group.clone()), &ChoiceDistribution::uniform(&k2), 64).unwrap();
        assert_eq!(copy.len(), 4);
        for x in 0..4 {
            let v = copy.space().decode(x);
            assert_eq!(copy.row(x), &[(copy.space().encode(&[v[1], v[0]]), 1.0)]);
        }
    }

    #[test]
    fn exact_mode_agrees() {
        let group = sign();
        let r = triangle(&group, "g", "g", "e");
        let exact = build_markov_exact(&r, 4096).unwrap();
        assert!(exact.rows_sum_to_one());
        let float = build_markov(&r, &ChoiceDistribution::uniform(r.graph()), 4096).unwrap();
        let converted = exact.to_float();
        for x in 0..8 {
            for y in 0..8 {
                assert!((converted.probability(x, y) - float.probability(x, y)).abs() < 1e-15);
            }
        }
        assert_eq!(exact.classes(), float.classes());
    }

    #[test]
    fn matches_simulated_choice_process() {
        let group = sign();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let graph = k(3);
        let r = Marking::from_fn(graph.clone(), group.clone(), |_, _| group.element(rng.random_range(0..2)).unwrap())
            .unwrap();
        let weights = (0..3).map(|_| vec![rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)]).collect();
        let q = ChoiceDistribution::new(&graph, weights).unwrap();
        let p = build_markov(&r, &q, 4096).unwrap();
        let samples = 100_000;
        for x in 0..p.len() {
            let state = p.space().decode(x);
            let mut hits = vec![0usize; p.len()];
            for _ in 0..samples {
                let y: Vec<usize> = (0..3)
                    .map(|i| {
                        let nb = graph.neighbors(i);
                        let j = if rng.random::<f64>() < q.weights(i)[0] { nb[0] } else { nb[1] };
                        group.act(r.g(i, j), state[j])
                    })
                    .collect();
                hits[p.space().encode(&y)] += 1;
            }
            for (y, &h) in hits.iter().enumerate() {
                let prob = p.probability(x, y);
                let sigma = (prob * (1.0 - prob) / samples as f64).sqrt();
                let freq = h as f64 / samples as f64;
                assert!((freq - prob).abs() <= 3.0 * sigma + 1e-3, "x={x} y={y} freq={freq} p={prob}");
            }
        }
    }

    #[test]
    fn weight_scaling_is_invisible() {
        let group = sign();
        let r = triangle(&group, "g", "e", "g");
        let w = vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![5.0, 1.0]];
        let scaled = w.iter().map(|v| v.iter().map(|x| x * 7.5).collect()).collect();
        let a = build_markov(&r, &ChoiceDistribution::new(r.graph(), w).unwrap(), 4096).unwrap();
        let b = build_markov(&r, &ChoiceDistribution::new(r.graph(), scaled).unwrap(), 4096).unwrap();
        for x in 0..8 {
            for (&(y1, p1), &(y2, p2)) in a.row(x).iter().zip(b.row(x)) {
                assert_eq!(y1, y2);
                assert!((p1 - p2).abs() < 1e-15);
            }
        }
        assert!(ChoiceDistribution::new(r.graph(), vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn triangle_examples() {
        let group = sign();
        let uniform = |r: &Marking| build_markov(r, &ChoiceDistribution::uniform(r.graph()), 4096).unwrap();
        let ex1 = triangle(&group, "e", "g", "e");
        let p = uniform(&ex1);
        assert_eq!((p.stationary_count(), p.limit_exists()), (1, false));

        let ex2 = triangle(&group, "g", "g", "e");
        let p = uniform(&ex2);
        assert_eq!((p.stationary_count(), p.limit_exists()), (2, true));
        let core = core_set(&ex2, 4096).unwrap();
        let s = p.space();
        assert_eq!(core.states, vec![s.encode(&[0, 1, 1]), s.encode(&[1, 0, 0])]);
        assert_eq!(core.closed_form_matches, Some(true));
        assert!(essential_check(&p, &core.states));

        let ex3 = triangle(&group, "g", "g", "g");
        let p = uniform(&ex3);
        assert_eq!((p.stationary_count(), p.limit_exists()), (1, false));
        let core = core_set(&ex3, 4096).unwrap();
        assert_eq!(core.states, vec![s.encode(&[0, 0, 0]), s.encode(&[1, 1, 1])]);
    }

    #[test]
    fn corrupted_chain_fails_essential_check() {
        let group = sign();
        let r = triangle(&group, "g", "g", "e");
        let mut p = build_markov(&r, &ChoiceDistribution::uniform(r.graph()), 4096).unwrap();
        let core = core_set(&r, 4096).unwrap();
        let x = core.states[0];
        p.rows_mut()[x] = vec![(0, 0.5), (x, 0.5)];
        p.rows_mut()[x].sort_by_key(|e| e.0);
        assert!(!essential_check(&p, &core.states));
    }

    #[test]
    fn four_cycle_core() {
        let group = sign();
        let c4 = Arc::new(RelationGraph::cycle(4).unwrap());
        let r = Marking::identity(c4, group.clone());
        let core = core_set(&r, 4096).unwrap();
        assert_eq!(core.states.len(), 4);
        assert_eq!(core.closed_form_matches, Some(true));
        assert!(core.closed_under_f);
    }

    #[test]
    fn potential_complete_graphs() {
        let group = sign();
        for n in 3..=4 {
            for r in generate_potential_fields(group.clone(), n).unwrap() {
                let p = build_markov(&r, &ChoiceDistribution::uniform(r.graph()), 4096).unwrap();
                let core = core_set(&r, 4096).unwrap();
                assert!(essential_check(&p, &core.states));
                assert_eq!(p.stationary_count(), core.states.len());
                for &x in &core.states {
                    let v = p.space().decode(x);
                    assert_eq!(apply_f(&r, &v), vec![v.clone()]);
                }
                let report = verify_core_dynamics(&r, 4096).unwrap();
                assert!(report.replay_ok && report.characteristic_ok);
                assert_eq!(report.observed, vec![group.identity()]);
                assert_eq!(report.solutions[0], vec![group.identity()]);
            }
        }
    }

    #[test]
    fn limit_iff_potential_on_triangle() {
        let group = sign();
        let scan = max_nonergodicity_scan(k(3), group.clone(), MarkingSpace::Symmetric, 4096).unwrap();
        assert_eq!(scan.counts.len(), 8);
        for (m, _) in &scan.counts {
            let p = build_markov(m, &ChoiceDistribution::uniform(m.graph()), 4096).unwrap();
            assert_eq!(p.limit_exists(), potential(m));
        }
        assert_eq!(scan.best, 2);
        let best = scan.argmax();
        assert_eq!(best.len(), 4);
        assert!(best.iter().all(|m| potential(m)));
    }

    #[test]
    fn bipartite_core_dynamics() {
        let group = sign();
        let c4 = Arc::new(RelationGraph::cycle(4).unwrap());
        let r = Marking::identity(c4, group.clone());
        let report = verify_core_dynamics(&r, 4096).unwrap();
        assert!(report.bipartite && report.replay_ok && report.characteristic_ok);
        assert_eq!(report.observed, vec![group.identity(), group.identity()]);
        assert_eq!(report.solutions[0], vec![group.identity(), group.identity()]);
        // period-2 swaps between z(t,r) and z(r,t) make extra classes
        let p = build_markov(&r, &ChoiceDistribution::uniform(r.graph()), 4096).unwrap();
        assert_eq!(p.stationary_count(), 3);
    }

    #[test]
    fn characteristic_equations_over_cyclic_group() {
        let group = Arc::new(ReactionGroup::cyclic(4).unwrap());
        let graph = k(3);
        let mut checked = 0;
        for code in 0..4usize.pow(6) {
            let marks = (0..6).map(|b| group.element(code / 4usize.pow(b) % 4).unwrap()).collect();
            let m = Marking::new(graph.clone(), group.clone(), marks).unwrap();
            let report = verify_core_dynamics(&m, 4096).unwrap();
            if report.a1 && report.a2 {
                checked += 1;
                assert!(report.replay_ok && report.characteristic_ok, "{:?}", m.names());
                assert!(!report.no_solution);
                assert!(report.solutions.contains(&report.observed));
            } else {
                assert!(report.no_solution && report.observed.is_empty());
            }
        }
        assert_eq!(checked, 64);
    }
}
