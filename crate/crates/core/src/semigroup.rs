//! Control matrices, the `*`-product with the reaction matrix, left ideals and final states.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{GroupElement, ReactionGroup};
use crate::dynamics::{StateSpace, SystemState};
use crate::network::{Marking, NetworkError, RelationGraph};

pub const DEFAULT_BOUND_SEMIGROUP: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemigroupError {
    #[error("semigroup enumeration is bounded to {bound} nodes, graph has {nodes}")]
    TooManyNodes { nodes: usize, bound: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("row {row} maps to column {column}, out of range")]
    ColumnOutOfRange { row: usize, column: usize },
    #[error("reaction matrix diagonal entry ({0}, {0}) is not the identity")]
    DiagonalNotIdentity(usize),
    #[error("reaction matrix is not potential: g({i},{j}) g({j},{k}) != g({i},{k})")]
    NotPotential { i: usize, j: usize, k: usize },
    #[error("reaction matrices need a complete graph")]
    NotComplete,
    #[error("operator product differs from the product word at row {row}")]
    HomomorphismFailure { row: usize },
    #[error("the constructive chain needs a non-bipartite graph")]
    Bipartite,
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A 0/1 row-stochastic matrix, stored as the column of the 1 in each row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ControlWord(Vec<u8>);

impl ControlWord {
    pub fn new(columns: Vec<usize>) -> Result<Self, SemigroupError> {
        let n = columns.len();
        if let Some((row, &column)) = columns.iter().enumerate().find(|(_, &c)| c >= n) {
            return Err(SemigroupError::ColumnOutOfRange { row, column });
        }
        Ok(Self(columns.into_iter().map(|c| c as u8).collect()))
    }

    /// `I_k`: every row has its 1 in column `k`.
    pub fn constant(n: usize, k: usize) -> Self {
        Self(vec![k as u8; n])
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n as u8).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Column of the 1 in `row`.
    pub fn column(&self, row: usize) -> usize {
        self.0[row] as usize
    }

    pub fn columns(&self) -> Vec<usize> {
        self.0.iter().map(|&c| c as usize).collect()
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &ControlWord) -> ControlWord {
        ControlWord(self.0.iter().map(|&c| other.0[c as usize]).collect())
    }

    pub fn image(&self) -> Vec<usize> {
        let mut cols = self.columns();
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    pub fn rank(&self) -> usize {
        self.image().len()
    }

    pub fn matrix(&self) -> Vec<Vec<u8>> {
        let n = self.dim();
        self.0.iter().map(|&c| (0..n).map(|j| u8::from(j == c as usize)).collect()).collect()
    }

    /// Zero diagonal and support inside the adjacency matrix.
    pub fn is_control_matrix(&self, graph: &RelationGraph) -> bool {
        self.dim() == graph.node_count() && (0..self.dim()).all(|i| graph.has_edge(i, self.column(i)))
    }

    /// `(Cx)_i = x_{c(i)}`.
    pub fn apply(&self, x: &[usize]) -> SystemState {
        self.0.iter().map(|&c| x[c as usize]).collect()
    }
}

/// All control matrices `M(B)`: each row picks one neighbour.
pub fn control_matrices(graph: &RelationGraph) -> Vec<ControlWord> {
    let n = graph.node_count();
    let mut out = vec![Vec::with_capacity(n)];
    for i in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<u8>| {
                graph.neighbors(i).iter().map(move |&j| {
                    let mut w = prefix.clone();
                    w.push(j as u8);
                    w
                })
            })
            .collect();
    }
    out.into_iter().map(ControlWord).collect()
}

/// A uniformly random control matrix.
pub fn random_control_matrix<R: Rng>(graph: &RelationGraph, rng: &mut R) -> ControlWord {
    ControlWord(
        (0..graph.node_count())
            .map(|i| {
                let nb = graph.neighbors(i);
                nb[rng.random_range(0..nb.len())] as u8
            })
            .collect(),
    )
}

/// The complete reaction matrix `Rg` with identity diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionMatrix {
    group: Arc<ReactionGroup>,
    entries: Vec<Vec<GroupElement>>,
}

impl ReactionMatrix {
    pub fn new(group: Arc<ReactionGroup>, entries: Vec<Vec<GroupElement>>) -> Result<Self, SemigroupError> {
        let n = entries.len();
        if let Some(row) = entries.iter().find(|r| r.len() != n) {
            return Err(SemigroupError::DimensionMismatch { left: n, right: row.len() });
        }
        if let Some(i) = (0..n).find(|&i| entries[i][i] != group.identity()) {
            return Err(SemigroupError::DiagonalNotIdentity(i));
        }
        Ok(Self { group, entries })
    }

    /// From a potential marking, extended to the complete graph first if needed.
    pub fn from_marking(marking: &Marking) -> Result<Self, SemigroupError> {
        let full = marking.complete_extension()?;
        let rg = Self::from_marking_unchecked(&full)?;
        rg.check_potential()?;
        Ok(rg)
    }

    /// From a marking of a complete graph, without checking potentiality.
    pub fn from_marking_unchecked(marking: &Marking) -> Result<Self, SemigroupError> {
        let graph = marking.graph();
        if !graph.is_complete() {
            return Err(SemigroupError::NotComplete);
        }
        let group = marking.group().clone();
        let n = graph.node_count();
        let entries = (0..n)
            .map(|i| (0..n).map(|j| if i == j { group.identity() } else { marking.g(i, j) }).collect())
            .collect();
        Self::new(group, entries)
    }

    pub fn group(&self) -> &Arc<ReactionGroup> {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> GroupElement {
        self.entries[i][j]
    }

    /// `g(i,j) g(j,k) = g(i,k)` for all `i, j, k`.
    pub fn check_potential(&self) -> Result<(), SemigroupError> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.group.mul(self.entries[i][j], self.entries[j][k]) != self.entries[i][k] {
                        return Err(SemigroupError::NotPotential { i, j, k });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Operator matrix: one present entry per row, at the column of a control word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OperatorMatrix {
    pub pattern: ControlWord,
    pub values: Vec<GroupElement>,
}

impl OperatorMatrix {
    pub fn entry(&self, i: usize, j: usize) -> Option<GroupElement> {
        (self.pattern.column(i) == j).then(|| self.values[i])
    }

    /// Operator product; entries compose as group products.
    pub fn mul(&self, group: &ReactionGroup, other: &OperatorMatrix) -> OperatorMatrix {
        let pattern = self.pattern.mul(&other.pattern);
        let values = (0..self.pattern.dim())
            .map(|i| group.mul(self.values[i], other.values[self.pattern.column(i)]))
            .collect();
        OperatorMatrix { pattern, values }
    }

    /// `y_i = v_i(x_{c(i)})`.
    pub fn apply(&self, group: &ReactionGroup, x: &[usize]) -> SystemState {
        (0..x.len()).map(|i| group.act(self.values[i], x[self.pattern.column(i)])).collect()
    }
}

/// `C * Rg`: entry `(i, j)` present iff `C(i, j) = 1`, valued `Rg(i, j)`.
pub fn star_product(c: &ControlWord, rg: &ReactionMatrix) -> Result<OperatorMatrix, SemigroupError> {
    if c.dim() != rg.dim() {
        return Err(SemigroupError::DimensionMismatch { left: c.dim(), right: rg.dim() });
    }
    let values = (0..c.dim()).map(|i| rg.get(i, c.column(i))).collect();
    Ok(OperatorMatrix { pattern: c.clone(), values })
}

/// `(F₁ F₂ ⋯ F_m) * Rg`, checked against `(F₁*Rg)(F₂*Rg)⋯(F_m*Rg)`.
pub fn rho(factors: &[ControlWord], rg: &ReactionMatrix) -> Result<OperatorMatrix, SemigroupError> {
    let n = rg.dim();
    let mut word = ControlWord::identity(n);
    let mut product = star_product(&word, rg)?;
    for f in factors {
        word = word.mul(f);
        product = product.mul(rg.group(), &star_product(f, rg)?);
    }
    let direct = star_product(&word, rg)?;
    match (0..n).find(|&i| direct.values[i] != product.values[i]) {
        Some(row) => Err(SemigroupError::HomomorphismFailure { row }),
        None => Ok(direct),
    }
}

/// How a minimal left ideal matches the generator forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdealForm {
    /// `{I_k}`.
    Constant(usize),
    /// `{S(i,j), S⁻(i,j)}` with `i` in the first part and `j` in the second.
    Pair(usize, usize),
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeftIdeal {
    /// Sorted elements.
    pub elements: Vec<ControlWord>,
    pub form: IdealForm,
}

impl LeftIdeal {
    pub fn contains(&self, w: &ControlWord) -> bool {
        self.elements.binary_search(w).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealReport {
    pub ideals: Vec<LeftIdeal>,
    /// `n` for non-bipartite graphs, `|A₁||A₂|` for bipartite ones.
    pub theorem1_expected: usize,
    /// Every ideal has the expected generator form.
    pub forms_match: bool,
    /// Each ideal is the left closure of each of its elements.
    pub minimal: bool,
    pub minimal_rank: usize,
    /// Control-matrix factors of one minimal-rank word, in product order.
    pub witness: Vec<ControlWord>,
}

impl IdealReport {
    pub fn count(&self) -> usize {
        self.ideals.len()
    }

    pub fn matches_theorem1(&self) -> bool {
        self.count() == self.theorem1_expected && self.forms_match
    }

    /// Ideal index of `w`, if any.
    pub fn ideal_of(&self, w: &ControlWord) -> Option<usize> {
        self.ideals.iter().position(|l| l.contains(w))
    }
}

fn left_closure(start: &ControlWord, generators: &[ControlWord]) -> Vec<ControlWord> {
    let mut seen: HashSet<ControlWord> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(w) = queue.pop_front() {
        for c in generators {
            let next = c.mul(&w);
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    let mut out: Vec<ControlWord> = seen.into_iter().collect();
    out.sort_unstable();
    out
}

/// Minimal left ideals of the word semigroup generated by `M(B)`.
///
/// They live in the kernel, the set of minimal-rank words: the minimal rank is found
/// by a search over images, the kernel by two-sided closure of one minimal word, and the
/// ideals as left closures partitioning it.
pub fn enumerate_ideals(graph: &RelationGraph, bound: usize) -> Result<IdealReport, SemigroupError> {
    let n = graph.node_count();
    if n > bound {
        return Err(SemigroupError::TooManyNodes { nodes: n, bound });
    }
    let generators = control_matrices(graph);
    let full: u32 = (1 << n) - 1;
    let apply_set = |c: &ControlWord, set: u32| -> u32 {
        (0..n).filter(|&v| set >> v & 1 == 1).fold(0, |acc, v| acc | 1 << c.column(v))
    };
    // images of words; appending C on the right maps T to c(T)
    let mut parent: HashMap<u32, (Option<u32>, usize)> = HashMap::new();
    let mut queue = VecDeque::new();
    for (g, c) in generators.iter().enumerate() {
        let t = apply_set(c, full);
        if let Entry::Vacant(e) = parent.entry(t) {
            e.insert((None, g));
            queue.push_back(t);
        }
    }
    while let Some(t) = queue.pop_front() {
        for (g, c) in generators.iter().enumerate() {
            let next = apply_set(c, t);
            if let Entry::Vacant(e) = parent.entry(next) {
                e.insert((Some(t), g));
                queue.push_back(next);
            }
        }
    }
    let best = parent.keys().copied().min_by_key(|&t| (t.count_ones(), t)).unwrap();
    let mut witness = Vec::new();
    let mut t = best;
    loop {
        let (prev, g) = parent[&t];
        witness.push(generators[g].clone());
        match prev {
            Some(p) => t = p,
            None => break,
        }
    }
    witness.reverse();
    let word = witness.iter().skip(1).fold(witness[0].clone(), |acc, c| acc.mul(c));
    let minimal_rank = word.rank();
    debug_assert_eq!(minimal_rank, best.count_ones() as usize);

    let mut kernel: HashSet<ControlWord> = HashSet::from([word.clone()]);
    let mut queue = VecDeque::from([word]);
    while let Some(w) = queue.pop_front() {
        for c in &generators {
            for next in [c.mul(&w), w.mul(c)] {
                if kernel.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    let mut kernel: Vec<ControlWord> = kernel.into_iter().collect();
    kernel.sort_unstable();

    let mut assigned: HashSet<ControlWord> = HashSet::new();
    let mut elements_list = Vec::new();
    for w in &kernel {
        if assigned.contains(w) {
            continue;
        }
        let closure = left_closure(w, &generators);
        assigned.extend(closure.iter().cloned());
        elements_list.push(closure);
    }
    let minimal = elements_list.iter().all(|l| l.iter().all(|u| left_closure(u, &generators) == *l));

    let bipartition = graph.bipartition();
    let theorem1_expected = match &bipartition {
        Some((a, b)) => a.len() * b.len(),
        None => n,
    };
    let ideals: Vec<LeftIdeal> = elements_list
        .into_iter()
        .map(|elements| {
            let form = classify(&elements, bipartition.as_ref());
            LeftIdeal { elements, form }
        })
        .collect();
    let forms_match = ideals
        .iter()
        .all(|l| matches!((&l.form, &bipartition), (IdealForm::Constant(_), None) | (IdealForm::Pair(..), Some(_))));
    Ok(IdealReport { ideals, theorem1_expected, forms_match, minimal, minimal_rank, witness })
}

/// `S(i,j)`: first part to `i`, second part to `j`.
pub fn pair_word(n: usize, first: &[usize], i: usize, j: usize) -> ControlWord {
    ControlWord((0..n).map(|v| if first.contains(&v) { i as u8 } else { j as u8 }).collect())
}

fn classify(elements: &[ControlWord], bipartition: Option<&(Vec<usize>, Vec<usize>)>) -> IdealForm {
    let n = elements[0].dim();
    match bipartition {
        None => {
            if let [w] = elements {
                if w.rank() == 1 {
                    return IdealForm::Constant(w.column(0));
                }
            }
            IdealForm::Other
        }
        Some((a, b)) => {
            for &i in a {
                for &j in b {
                    let mut expect = vec![pair_word(n, a, i, j), pair_word(n, a, j, i)];
                    expect.sort_unstable();
                    if expect == elements {
                        return IdealForm::Pair(i, j);
                    }
                }
            }
            IdealForm::Other
        }
    }
}

/// Control-matrix chain reaching `I_i` on a non-bipartite graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructiveChain {
    /// `levels[t]`: nodes with a walk of length `t` to the target.
    pub levels: Vec<Vec<usize>>,
    /// Factors in product order; their product is `I_target`.
    pub factors: Vec<ControlWord>,
}

impl ConstructiveChain {
    pub fn product(&self) -> ControlWord {
        self.factors.iter().skip(1).fold(self.factors[0].clone(), |acc, c| acc.mul(c))
    }
}

pub fn constructive_chain(graph: &RelationGraph, target: usize) -> Result<ConstructiveChain, SemigroupError> {
    if graph.is_bipartite() {
        return Err(SemigroupError::Bipartite);
    }
    let n = graph.node_count();
    let mut levels = vec![vec![target]];
    while levels.last().unwrap().len() < n {
        let prev = levels.last().unwrap();
        let mut next: Vec<usize> = (0..n).filter(|&v| graph.neighbors(v).iter().any(|w| prev.contains(w))).collect();
        next.sort_unstable();
        levels.push(next);
    }
    // D_t sends level t into level t-1; the product D_m ⋯ D_1 is constant
    let m = levels.len() - 1;
    let mut factors = Vec::with_capacity(m.max(1));
    for t in (1..=m).rev() {
        let cols = (0..n)
            .map(|v| {
                let nb = graph.neighbors(v);
                *nb.iter().find(|w| levels[t - 1].contains(w)).unwrap_or(&nb[0])
            })
            .collect();
        factors.push(ControlWord::new(cols)?);
    }
    if factors.is_empty() {
        factors.push(ControlWord::constant(n, target));
    }
    Ok(ConstructiveChain { levels, factors })
}

/// One run of `C_0, C_1 C_0, C_2 C_1 C_0, …`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub word: ControlWord,
    /// Step (0-based) at which the word first lies in an ideal.
    pub absorbed_at: Option<usize>,
    pub ideal: Option<usize>,
}

pub fn random_product_process<R: Rng>(
    graph: &RelationGraph,
    ideals: &IdealReport,
    steps: usize,
    rng: &mut R,
) -> Trajectory {
    let mut word = random_control_matrix(graph, rng);
    for step in 0..steps {
        if step > 0 {
            word = random_control_matrix(graph, rng).mul(&word);
        }
        if let Some(k) = ideals.ideal_of(&word) {
            return Trajectory { word, absorbed_at: Some(step), ideal: Some(k) };
        }
    }
    Trajectory { word, absorbed_at: None, ideal: None }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionStats {
    pub runs: usize,
    pub absorbed: usize,
    /// Absorptions per ideal, in ideal order.
    pub counts: Vec<usize>,
    pub mean_steps: f64,
    pub max_steps: usize,
}

/// `runs` independent trajectories; run `i` uses seed `seed + i`.
pub fn absorption_statistics(
    graph: &RelationGraph,
    ideals: &IdealReport,
    steps: usize,
    runs: usize,
    seed: u64,
) -> AbsorptionStats {
    let trajectories: Vec<Trajectory> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            random_product_process(graph, ideals, steps, &mut rng)
        })
        .collect();
    let mut counts = vec![0; ideals.count()];
    let mut total_steps = 0usize;
    let mut max_steps = 0;
    let mut absorbed = 0;
    for t in &trajectories {
        if let (Some(k), Some(s)) = (t.ideal, t.absorbed_at) {
            absorbed += 1;
            counts[k] += 1;
            total_steps += s;
            max_steps = max_steps.max(s);
        }
    }
    let mean_steps = if absorbed > 0 { total_steps as f64 / absorbed as f64 } else { 0.0 };
    AbsorptionStats { runs, absorbed, counts, mean_steps, max_steps }
}

/// `W = ∪ (m*Rg)·x` over ideal elements `m` and all states `x`, sorted.
pub fn final_states(ideals: &IdealReport, rg: &ReactionMatrix, bound: usize) -> Result<Vec<SystemState>, SemigroupError> {
    let group = rg.group();
    let space = StateSpace::new(rg.dim(), group.states().len(), bound)
        .map_err(|_| SemigroupError::TooManyNodes { nodes: rg.dim(), bound })?;
    let mut out = HashSet::new();
    for ideal in &ideals.ideals {
        for m in &ideal.elements {
            let op = star_product(m, rg)?;
            for x in 0..space.len() {
                out.insert(op.apply(group, &space.decode(x)));
            }
        }
    }
    let mut out: Vec<SystemState> = out.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}
