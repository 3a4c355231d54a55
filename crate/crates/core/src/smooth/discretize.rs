use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{Curve, InvolutionField};
use super::integral::{p_integral, residual_scan, Parity};
use super::{in_domain, SmoothError, TAU_FLD};
use crate::network::RelationGraph;
use crate::potential::balance_partition;

/// Residual threshold and step used to reject non-potential fields before discretizing.
pub const RESIDUAL_CHECK: (f64, f64) = (1e-3, 1e-3);
const RESIDUAL_GRID: usize = 5;

/// Parity tag and step count for one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeQuadratureRule {
    pub parity: Parity,
    pub steps: usize,
}

impl EdgeQuadratureRule {
    pub fn new(parity: Parity, steps: usize) -> Result<Self, SmoothError> {
        if steps < 2 {
            return Err(SmoothError::TooFewSteps(steps));
        }
        if Parity::of(steps) != parity {
            return Err(SmoothError::ParityMismatch { steps, parity });
        }
        Ok(EdgeQuadratureRule { parity, steps })
    }

    /// P₂ rule with `steps` rounded up to even.
    pub fn even(steps: usize) -> Self {
        let steps = steps.max(2);
        EdgeQuadratureRule { parity: Parity::Even, steps: steps + steps % 2 }
    }

    /// P₁ rule with `steps` rounded up to odd.
    pub fn odd(steps: usize) -> Self {
        let steps = steps.max(3);
        EdgeQuadratureRule { parity: Parity::Odd, steps: steps + 1 - steps % 2 }
    }
}

/// Per-edge rules keyed by unordered node pair, with a default.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRules {
    default: EdgeQuadratureRule,
    overrides: BTreeMap<(usize, usize), EdgeQuadratureRule>,
}

impl EdgeRules {
    pub fn uniform(default: EdgeQuadratureRule) -> Self {
        EdgeRules { default, overrides: BTreeMap::new() }
    }

    pub fn set(&mut self, i: usize, j: usize, rule: EdgeQuadratureRule) -> &mut Self {
        self.overrides.insert((i.min(j), i.max(j)), rule);
        self
    }

    pub fn with(mut self, i: usize, j: usize, rule: EdgeQuadratureRule) -> Self {
        self.set(i, j, rule);
        self
    }

    pub fn get(&self, i: usize, j: usize) -> EdgeQuadratureRule {
        self.overrides.get(&(i.min(j), i.max(j))).copied().unwrap_or(self.default)
    }

    pub fn parity(&self, i: usize, j: usize) -> Parity {
        self.get(i, j).parity
    }
}

/// Whether every closed path of `graph` has an even number of odd-tagged edges.
pub fn parity_rule_holds(graph: &RelationGraph, parity: impl Fn(usize, usize) -> Parity) -> bool {
    let signs: Vec<i8> = graph
        .edges()
        .iter()
        .map(|&(i, j)| if parity(i, j) == Parity::Odd { -1 } else { 1 })
        .collect();
    balance_partition(graph, &signs).is_some()
}

/// Node positions and optional edge curves in the unit square.
#[derive(Debug, Clone)]
pub struct Embedding {
    points: Vec<[f64; 2]>,
    curves: BTreeMap<(usize, usize), Curve>,
}

impl Embedding {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self, SmoothError> {
        for p in &points {
            if !in_domain(p[0], p[1]) {
                return Err(SmoothError::OutsideDomain { x: p[0], y: p[1] });
            }
        }
        Ok(Embedding { points, curves: BTreeMap::new() })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Uses `curve` for the edge `from → to`; the reverse edge runs it backwards.
    pub fn set_curve(&mut self, from: usize, to: usize, curve: Curve) -> Result<(), SmoothError> {
        let (a, b) = (self.point(from)?, self.point(to)?);
        let close = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).abs() <= TAU_FLD && (p[1] - q[1]).abs() <= TAU_FLD;
        if !close(curve.start(), a) || !close(curve.end(), b) {
            return Err(SmoothError::CurveEndpoints { from, to });
        }
        if from < to {
            self.curves.insert((from, to), curve);
        } else {
            self.curves.insert((to, from), curve.reversed());
        }
        Ok(())
    }

    fn point(&self, node: usize) -> Result<[f64; 2], SmoothError> {
        self.points.get(node).copied().ok_or(SmoothError::MissingNode(node))
    }

    /// Curve of the edge `from → to`, a straight segment unless set.
    pub fn curve(&self, from: usize, to: usize) -> Result<Curve, SmoothError> {
        let key = (from.min(to), from.max(to));
        let forward = match self.curves.get(&key) {
            Some(c) => c.clone(),
            None => Curve::segment(self.point(key.0)?, self.point(key.1)?)?,
        };
        Ok(if from < to { forward } else { forward.reversed() })
    }
}

/// Matrix marks on the directed edges of a graph, in `graph.edges()` order.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMarking {
    graph: Arc<RelationGraph>,
    marks: Vec<Matrix2<f64>>,
    parities: Vec<Parity>,
}

impl MatrixMarking {
    pub fn new(graph: Arc<RelationGraph>, marks: Vec<Matrix2<f64>>, parities: Vec<Parity>) -> Self {
        assert_eq!(marks.len(), graph.edge_count());
        assert_eq!(parities.len(), graph.edge_count());
        MatrixMarking { graph, marks, parities }
    }

    pub fn graph(&self) -> &Arc<RelationGraph> {
        &self.graph
    }

    pub fn marks(&self) -> &[Matrix2<f64>] {
        &self.marks
    }

    pub fn parities(&self) -> &[Parity] {
        &self.parities
    }

    pub fn mark(&self, from: usize, to: usize) -> Option<Matrix2<f64>> {
        self.graph.edge_id(from, to).map(|id| self.marks[id])
    }

    /// `f(k, j) = det G(k, j)` rounded to a sign.
    pub fn relation_signs(&self) -> Vec<i8> {
        self.marks.iter().map(|m| if m.determinant() < 0.0 { -1 } else { 1 }).collect()
    }

    /// Ordered product of marks along a node sequence.
    pub fn path_product(&self, nodes: &[usize]) -> Option<Matrix2<f64>> {
        nodes.windows(2).try_fold(Matrix2::identity(), |acc, w| Some(acc * self.mark(w[0], w[1])?))
    }

    /// Largest `‖u(i)·G(i,j) − u(j)‖` for the spanning-tree gauge rooted at node 0.
    pub fn max_gauge_defect(&self) -> f64 {
        let (order, parent) = self.graph.bfs_tree(0);
        let mut u = vec![Matrix2::identity(); self.graph.node_count()];
        for &v in order.iter().skip(1) {
            let p = parent[v].unwrap();
            u[v] = u[p] * self.mark(p, v).unwrap();
        }
        self.graph
            .edges()
            .iter()
            .zip(&self.marks)
            .map(|(&(i, j), m)| (u[i] * m - u[j]).norm())
            .fold(0.0, f64::max)
    }
}

/// Product integrals of `field` along every edge of the embedded graph.
pub fn discretize<F>(
    field: &F,
    graph: &Arc<RelationGraph>,
    embedding: &Embedding,
    rules: &EdgeRules,
) -> Result<MatrixMarking, SmoothError>
where
    F: InvolutionField<Scalar = f64>,
{
    if embedding.points().len() != graph.node_count() {
        return Err(SmoothError::EmbeddingSize { nodes: graph.node_count(), points: embedding.points().len() });
    }
    if let Some(&(from, to)) = graph
        .edges()
        .iter()
        .find(|&&(i, j)| rules.get(i, j).steps < 2 || Parity::of(rules.get(i, j).steps) != rules.parity(i, j))
    {
        let rule = rules.get(from, to);
        return Err(SmoothError::ParityMismatch { steps: rule.steps, parity: rule.parity });
    }
    if !parity_rule_holds(graph, |i, j| rules.parity(i, j)) {
        return Err(SmoothError::ParityRule);
    }
    let (threshold, h) = RESIDUAL_CHECK;
    let scan = residual_scan(field, RESIDUAL_GRID, h)?;
    if scan.max_norm.is_nan() || scan.max_norm > threshold {
        return Err(SmoothError::NonPotentialField { x: scan.at[0], y: scan.at[1], residual: scan.max_norm });
    }
    let marks = graph
        .edges()
        .par_iter()
        .map(|&(i, j)| {
            let rule = rules.get(i, j);
            let curve = embedding.curve(i, j)?;
            Ok(p_integral(field, &curve, rule.steps, rule.parity)?.matrix)
        })
        .collect::<Result<Vec<_>, SmoothError>>()?;
    let parities = graph.edges().iter().map(|&(i, j)| rules.parity(i, j)).collect();
    Ok(MatrixMarking::new(graph.clone(), marks, parities))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::InvolutionMatrix;
    use crate::smooth::conic::SectionField;
    use crate::smooth::field::{ComponentField, ConstantField};
    use itertools::Itertools;

    fn triangle() -> Arc<RelationGraph> {
        Arc::new(RelationGraph::complete(3).unwrap())
    }

    #[test]
    fn triangle_tag_assignments() {
        let g = triangle();
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let mut valid = Vec::new();
        for mask in 0u8..8 {
            let tag = |i: usize, j: usize| {
                let k = pairs.iter().position(|&p| p == (i.min(j), i.max(j))).unwrap();
                if mask >> k & 1 == 1 {
                    Parity::Odd
                } else {
                    Parity::Even
                }
            };
            if parity_rule_holds(&g, tag) {
                valid.push(mask.count_ones());
            }
        }
        valid.sort();
        assert_eq!(valid, vec![0, 2, 2, 2]);
    }

    #[test]
    fn constant_field_on_triangle() {
        let a = InvolutionMatrix::new(0.6, 0.8, 0.8).unwrap();
        let f = ConstantField(a);
        let emb = Embedding::new(vec![[0.1, 0.1], [0.9, 0.2], [0.4, 0.8]]).unwrap();
        let rules = EdgeRules::uniform(EdgeQuadratureRule::even(2))
            .with(0, 1, EdgeQuadratureRule::odd(3))
            .with(1, 2, EdgeQuadratureRule::odd(3));
        let m = discretize(&f, &triangle(), &emb, &rules).unwrap();
        assert_eq!(m.mark(0, 1).unwrap(), a.matrix());
        assert_eq!(m.mark(1, 2).unwrap(), a.matrix());
        assert_eq!(m.mark(2, 0).unwrap(), Matrix2::identity());
        assert!((m.path_product(&[0, 1, 2, 0]).unwrap() - Matrix2::identity()).norm() < 1e-15);
        let signs = m.relation_signs();
        let g = m.graph();
        assert_eq!(signs[g.edge_id(0, 1).unwrap()], -1);
        assert_eq!(signs[g.edge_id(2, 0).unwrap()], 1);

        let bad = EdgeRules::uniform(EdgeQuadratureRule::even(2)).with(0, 1, EdgeQuadratureRule::odd(3));
        assert!(matches!(discretize(&f, &triangle(), &emb, &bad), Err(SmoothError::ParityRule)));
    }

    #[test]
    fn rejects_non_potential_field() {
        let f = ComponentField::new(
            Arc::new(|x, y| (x * y).cos()),
            Arc::new(|x, y| (x * y).sin()),
            Arc::new(|x, y| (x * y).sin()),
        );
        let emb = Embedding::new(vec![[0.1, 0.1], [0.9, 0.2], [0.4, 0.8]]).unwrap();
        let rules = EdgeRules::uniform(EdgeQuadratureRule::even(16));
        assert!(matches!(
            discretize(&f, &triangle(), &emb, &rules),
            Err(SmoothError::NonPotentialField { .. })
        ));
    }

    #[test]
    fn rotation_field_on_k4_with_curved_edge() {
        let f = SectionField::rotation(Arc::new(|x, y| 2.0 * x + 3.0 * y));
        let g = Arc::new(RelationGraph::complete(4).unwrap());
        let mut emb = Embedding::new(vec![[0.1, 0.1], [0.9, 0.15], [0.85, 0.9], [0.2, 0.8]]).unwrap();
        emb.set_curve(
            2,
            0,
            Curve::param(
                Arc::new(|s: f64| 0.85 + (0.1 - 0.85) * s - 0.3 * s * (1.0 - s)),
                Arc::new(|s: f64| 0.9 + (0.1 - 0.9) * s + 0.2 * s * (1.0 - s)),
                0.0,
                1.0,
            )
            .unwrap(),
        )
        .unwrap();
        let rules = EdgeRules::uniform(EdgeQuadratureRule::even(256))
            .with(0, 1, EdgeQuadratureRule::odd(257))
            .with(0, 2, EdgeQuadratureRule::odd(257))
            .with(1, 3, EdgeQuadratureRule::odd(257))
            .with(2, 3, EdgeQuadratureRule::odd(257));
        let m = discretize(&f, &g, &emb, &rules).unwrap();
        assert!(m.max_gauge_defect() < 1e-4, "{}", m.max_gauge_defect());
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let p = m.mark(i, j).unwrap() * m.mark(j, i).unwrap();
                    assert!((p - Matrix2::identity()).norm() < 1e-12);
                }
            }
        }
        for cycle in (1..4).permutations(3) {
            let nodes = [vec![0], cycle, vec![0]].concat();
            let p = m.path_product(&nodes).unwrap();
            assert!((p - Matrix2::identity()).norm() < 1e-4);
        }
        assert!(matches!(
            emb.set_curve(0, 1, Curve::segment([0.0, 0.0], [0.9, 0.15]).unwrap()),
            Err(SmoothError::CurveEndpoints { .. })
        ));
    }
}
