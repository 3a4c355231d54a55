//! Finite reaction groups: permutation groups acting on the automaton state set.
//!
//! Elements are stored as explicit permutations together with a precomputed
//! composition table, so products are table lookups. Composition follows the
//! usual right-to-left convention: `compose(g, h)` applies `h` first.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::AlgebraError;

/// Hard cap on group order; characteristic-equation searches are exhaustive.
pub const MAX_GROUP_ORDER: usize = 720;

static NEXT_GROUP_ID: AtomicU32 = AtomicU32::new(1);

/// The finite set `E` of automaton states. Labels are opaque and distinct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct StateSet {
    labels: Vec<String>,
}

impl StateSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self, AlgebraError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(AlgebraError::EmptyStateSet);
        }
        if let Some(dup) = labels.iter().duplicates().next() {
            return Err(AlgebraError::DuplicateState(dup.clone()));
        }
        Ok(Self { labels })
    }

    /// States labelled `1..=n`.
    pub fn numbered(n: usize) -> Result<Self, AlgebraError> {
        Self::new((1..=n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

impl TryFrom<Vec<String>> for StateSet {
    type Error = AlgebraError;

    fn try_from(labels: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(labels)
    }
}

impl From<StateSet> for Vec<String> {
    fn from(s: StateSet) -> Self {
        s.labels
    }
}

/// A bijection of `{0, .., n-1}` given by its image array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self, AlgebraError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x >= n || std::mem::replace(&mut seen[x], true) {
                return Err(AlgebraError::NotABijection { images });
            }
        }
        Ok(Self(images))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    /// `self ∘ other`: apply `other`, then `self`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.degree(), other.degree(), "permutation degree mismatch");
        Permutation(other.0.iter().map(|&x| self.0[x]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.degree()];
        for (x, &y) in self.0.iter().enumerate() {
            inv[y] = x;
        }
        Permutation(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// Disjoint cycle decomposition, fixed points included as 1-cycles.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree()];
        let mut cycles = Vec::new();
        for start in 0..self.degree() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x);
                x = self.0[x];
            }
            cycles.push(cycle);
        }
        cycles
    }

    /// Cycle notation over 1-based points with fixed points omitted; `e` for the identity.
    pub fn cycle_notation(&self) -> String {
        let sep = if self.degree() > 9 { " " } else { "" };
        let parts: Vec<String> = self
            .cycles()
            .into_iter()
            .filter(|c| c.len() > 1)
            .map(|c| format!("({})", c.iter().map(|x| (x + 1).to_string()).join(sep)))
            .collect();
        if parts.is_empty() {
            "e".to_string()
        } else {
            parts.concat()
        }
    }
}

/// Handle to an element of a specific [`ReactionGroup`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    group: u32,
    index: u32,
}

impl GroupElement {
    pub fn index(self) -> usize {
        self.index as usize
    }
}

/// A finite group of permutations of a [`StateSet`].
#[derive(Clone)]
pub struct ReactionGroup {
    id: u32,
    states: StateSet,
    names: Vec<String>,
    perms: Vec<Permutation>,
    identity: usize,
    table: Vec<u32>,
    inverses: Vec<u32>,
    involutive: bool,
}

impl fmt::Debug for ReactionGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReactionGroup")
            .field("states", &self.states.labels)
            .field("elements", &self.names)
            .field("involutive", &self.involutive)
            .finish()
    }
}

impl ReactionGroup {
    /// Builds a group from named permutations, validating the group axioms.
    pub fn new(
        states: StateSet,
        elements: Vec<(String, Permutation)>,
        identity: &str,
    ) -> Result<Self, AlgebraError> {
        let order = elements.len();
        if order == 0 {
            return Err(AlgebraError::UnknownElement(identity.to_string()));
        }
        if order > MAX_GROUP_ORDER {
            return Err(AlgebraError::GroupTooLarge { order, bound: MAX_GROUP_ORDER });
        }
        let degree = states.len();
        let mut index: HashMap<&Permutation, usize> = HashMap::with_capacity(order);
        let mut names = Vec::with_capacity(order);
        for (i, (name, perm)) in elements.iter().enumerate() {
            if perm.degree() != degree {
                return Err(AlgebraError::DegreeMismatch {
                    name: name.clone(),
                    expected: degree,
                    found: perm.degree(),
                });
            }
            if names.contains(name) {
                return Err(AlgebraError::DuplicateElement(name.clone()));
            }
            if index.insert(perm, i).is_some() {
                return Err(AlgebraError::DuplicateElement(name.clone()));
            }
            names.push(name.clone());
        }
        let identity_idx = names
            .iter()
            .position(|n| n == identity)
            .ok_or_else(|| AlgebraError::UnknownElement(identity.to_string()))?;
        if !elements[identity_idx].1.is_identity() {
            return Err(AlgebraError::IdentityNotTrivial(identity.to_string()));
        }

        let mut table = vec![0u32; order * order];
        for (a, (_, pa)) in elements.iter().enumerate() {
            for (b, (_, pb)) in elements.iter().enumerate() {
                let prod = pa.compose(pb);
                let c = *index.get(&prod).ok_or_else(|| AlgebraError::NotClosed {
                    left: names[a].clone(),
                    right: names[b].clone(),
                })?;
                table[a * order + b] = c as u32;
            }
        }
        let mut inverses = vec![0u32; order];
        for (a, (_, pa)) in elements.iter().enumerate() {
            let inv = pa.inverse();
            inverses[a] = *index
                .get(&inv)
                .ok_or_else(|| AlgebraError::MissingInverse(names[a].clone()))?
                as u32;
        }
        let involutive = (0..order).all(|a| table[a * order + a] as usize == identity_idx);
        let perms = elements.into_iter().map(|(_, p)| p).collect();

        Ok(Self {
            id: NEXT_GROUP_ID.fetch_add(1, Ordering::Relaxed),
            states,
            names,
            perms,
            identity: identity_idx,
            table,
            inverses,
            involutive,
        })
    }

    /// The two-element group `{e, g}` on `E = {+1, -1}` with `g(x) = -x`.
    pub fn sign_flip() -> Self {
        let states = StateSet::new(["+1", "-1"]).expect("static states");
        Self::new(
            states,
            vec![
                ("e".to_string(), Permutation::identity(2)),
                ("g".to_string(), Permutation(vec![1, 0])),
            ],
            "e",
        )
        .expect("sign-flip group")
    }

    /// The full symmetric group on `n` numbered states, elements named in cycle notation.
    pub fn symmetric(n: usize) -> Result<Self, AlgebraError> {
        let states = StateSet::numbered(n)?;
        let elements: Vec<(String, Permutation)> = (0..n)
            .permutations(n)
            .map(|p| {
                let perm = Permutation(p);
                (perm.cycle_notation(), perm)
            })
            .collect();
        Self::new(states, elements, "e")
    }

    /// The cyclic group generated by the rotation `i -> i+1 mod n`; elements `r0..r{n-1}`.
    pub fn cyclic(n: usize) -> Result<Self, AlgebraError> {
        let states = StateSet::numbered(n)?;
        let elements = (0..n)
            .map(|k| (format!("r{k}"), Permutation((0..n).map(|i| (i + k) % n).collect())))
            .collect();
        Self::new(states, elements, "r0")
    }

    pub fn states(&self) -> &StateSet {
        &self.states
    }

    pub fn order(&self) -> usize {
        self.perms.len()
    }

    pub fn identity(&self) -> GroupElement {
        self.handle(self.identity)
    }

    /// Whether every element squares to the identity (the double-negation law).
    pub fn is_involutive(&self) -> bool {
        self.involutive
    }

    pub fn require_involutive(&self) -> Result<(), AlgebraError> {
        match (0..self.order()).find(|&a| self.table[a * self.order() + a] as usize != self.identity) {
            None => Ok(()),
            Some(a) => Err(AlgebraError::NotInvolutive(self.names[a].clone())),
        }
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = GroupElement> + '_ {
        (0..self.order()).map(|i| self.handle(i))
    }

    pub fn element(&self, index: usize) -> Option<GroupElement> {
        (index < self.order()).then(|| self.handle(index))
    }

    pub fn by_name(&self, name: &str) -> Result<GroupElement, AlgebraError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.handle(i))
            .ok_or_else(|| AlgebraError::UnknownElement(name.to_string()))
    }

    pub fn contains(&self, g: GroupElement) -> bool {
        g.group == self.id && g.index() < self.order()
    }

    pub fn name(&self, g: GroupElement) -> &str {
        self.check(g);
        &self.names[g.index()]
    }

    pub fn permutation(&self, g: GroupElement) -> &Permutation {
        self.check(g);
        &self.perms[g.index()]
    }

    /// Action of `g` on a state index.
    pub fn act(&self, g: GroupElement, state: usize) -> usize {
        self.perms[g.index()].apply(state)
    }

    /// `g ∘ h` via the composition table.
    pub fn compose(&self, g: GroupElement, h: GroupElement) -> Result<GroupElement, AlgebraError> {
        if !self.contains(g) || !self.contains(h) {
            return Err(AlgebraError::ForeignElement);
        }
        Ok(self.mul(g, h))
    }

    /// Infallible `g ∘ h`. Panics if either element belongs to another group.
    pub fn mul(&self, g: GroupElement, h: GroupElement) -> GroupElement {
        self.check(g);
        self.check(h);
        self.handle(self.table[g.index() * self.order() + h.index()] as usize)
    }

    pub fn inverse(&self, g: GroupElement) -> GroupElement {
        self.check(g);
        self.handle(self.inverses[g.index()] as usize)
    }

    /// Ordered product `g1 g2 ... gk`; the empty product is the identity.
    pub fn product(&self, items: impl IntoIterator<Item = GroupElement>) -> GroupElement {
        items.into_iter().fold(self.identity(), |acc, g| self.mul(acc, g))
    }

    /// Number of `<g>`-orbits partitioning `E`, i.e. the number of cycles of `g`.
    pub fn orbit_count(&self, g: GroupElement) -> usize {
        self.permutation(g).cycles().len()
    }

    /// Number of `<g>`-orbits meeting the given subset of states.
    pub fn orbit_count_on(&self, g: GroupElement, subset: &[usize]) -> usize {
        self.permutation(g)
            .cycles()
            .iter()
            .filter(|c| c.iter().any(|x| subset.contains(x)))
            .count()
    }

    /// All solutions of `v ∘ v = a`, most orbits first (identity wins ties).
    pub fn solve_characteristic(
        &self,
        a: GroupElement,
        bound: usize,
    ) -> Result<Vec<GroupElement>, AlgebraError> {
        self.check_bound(bound)?;
        if !self.contains(a) {
            return Err(AlgebraError::ForeignElement);
        }
        let mut sols: Vec<GroupElement> =
            self.elements().filter(|&v| self.mul(v, v) == a).collect();
        sols.sort_by_key(|&v| (std::cmp::Reverse(self.orbit_count(v)), v.index() != self.identity, v.index()));
        Ok(sols)
    }

    /// All pairs with `v ∘ w = a_i` and `w ∘ v = a_j`, ranked by the number of
    /// cycles of `σ(x, y) = (w y, v x)` on `E × E`.
    pub fn solve_characteristic_pair(
        &self,
        a_i: GroupElement,
        a_j: GroupElement,
        bound: usize,
    ) -> Result<Vec<(GroupElement, GroupElement)>, AlgebraError> {
        self.check_bound(bound)?;
        if !self.contains(a_i) || !self.contains(a_j) {
            return Err(AlgebraError::ForeignElement);
        }
        let mut sols: Vec<((GroupElement, GroupElement), usize)> = Vec::new();
        for v in self.elements() {
            for w in self.elements() {
                if self.mul(v, w) == a_i && self.mul(w, v) == a_j {
                    sols.push(((v, w), self.pair_orbit_count(v, w)));
                }
            }
        }
        let id = self.identity;
        sols.sort_by_key(|&((v, w), count)| {
            (std::cmp::Reverse(count), !(v.index() == id && w.index() == id), v.index(), w.index())
        });
        Ok(sols.into_iter().map(|(p, _)| p).collect())
    }

    /// Cycles of `σ(x, y) = (w y, v x)` acting on `E × E`.
    pub fn pair_orbit_count(&self, v: GroupElement, w: GroupElement) -> usize {
        let n = self.states.len();
        let images = (0..n * n)
            .map(|xy| {
                let (x, y) = (xy / n, xy % n);
                self.act(w, y) * n + self.act(v, x)
            })
            .collect();
        Permutation(images).cycles().len()
    }

    fn check_bound(&self, bound: usize) -> Result<(), AlgebraError> {
        if self.order() > bound {
            return Err(AlgebraError::GroupTooLarge { order: self.order(), bound });
        }
        Ok(())
    }

    fn handle(&self, index: usize) -> GroupElement {
        GroupElement { group: self.id, index: index as u32 }
    }

    fn check(&self, g: GroupElement) {
        assert!(self.contains(g), "group element used with a foreign group");
    }
}

impl PartialEq for ReactionGroup {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for ReactionGroup {}
