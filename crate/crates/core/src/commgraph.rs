//! Communication graph, connectivity and the minimum-spacing constraint.

use serde::Serialize;
use thiserror::Error;

use crate::deployment::Deployment;
use crate::geometry::Point;
use crate::spatial::SpatialGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("connectivity margin needs at least two sensors (got {0})")]
    TooFewSensors(usize),
}

/// Undirected graph on sensor ids; `(i, j)` is an edge iff `|s_i s_j| < r_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommGraph {
    adjacency: Vec<Vec<usize>>,
    r_c: f64,
}

impl CommGraph {
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn r_c(&self) -> f64 {
        self.r_c
    }

    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.adjacency[id]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency
            .get(i)
            .is_some_and(|adj| adj.binary_search(&j).is_ok())
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    pub fn component_count(&self) -> usize {
        let mut dsu = DisjointSet::new(self.node_count());
        for (i, j) in self.edges() {
            dsu.union(i, j);
        }
        dsu.components()
    }
}

pub fn build_graph(d: &Deployment) -> CommGraph {
    build_graph_with_range(d.sensors(), d.r_c())
}

/// Graph over `sensors` at an arbitrary communication range.
pub fn build_graph_with_range(sensors: &[Point], r_c: f64) -> CommGraph {
    let grid = SpatialGrid::new(sensors, r_c);
    let adjacency = sensors
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut adj: Vec<usize> = grid
                .candidates(*p, r_c)
                .filter(|&j| j != i && sensors[j].dist(p) < r_c)
                .collect();
            adj.sort_unstable();
            adj
        })
        .collect();
    CommGraph { adjacency, r_c }
}

/// O(n²) reference construction.
pub fn build_graph_naive(sensors: &[Point], r_c: f64) -> CommGraph {
    let n = sensors.len();
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if sensors[i].dist(&sensors[j]) < r_c {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    CommGraph { adjacency, r_c }
}

/// Graphs with zero or one node count as connected.
pub fn is_connected(g: &CommGraph) -> bool {
    g.component_count() <= 1
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpacingViolation {
    pub first: usize,
    pub second: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpacingReport {
    pub ok: bool,
    /// Ascending by distance, then by id pair.
    pub violating_pairs: Vec<SpacingViolation>,
}

/// Every pair must be at least `r_s - tau` apart; distance exactly `r_s` is
/// allowed.
pub fn check_spacing(d: &Deployment) -> SpacingReport {
    let limit = d.r_s() - d.tau();
    let sensors = d.sensors();
    let grid = d.grid(d.r_s());
    let mut violating_pairs = Vec::new();
    for (i, p) in sensors.iter().enumerate() {
        for j in grid.candidates(*p, limit) {
            if j <= i {
                continue;
            }
            let distance = p.dist(&sensors[j]);
            if distance < limit {
                violating_pairs.push(SpacingViolation {
                    first: i,
                    second: j,
                    distance,
                });
            }
        }
    }
    violating_pairs.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| (a.first, a.second).cmp(&(b.first, b.second)))
    });
    SpacingReport {
        ok: violating_pairs.is_empty(),
        violating_pairs,
    }
}

/// Longest edge of a Euclidean minimum spanning tree: the smallest range
/// `r` for which range `r + tau` connects every sensor.
pub fn connectivity_margin(d: &Deployment) -> Result<f64, GraphError> {
    mst_bottleneck(d.sensors())
}

/// Dense Prim's algorithm, O(n²) time and O(n) memory.
pub fn mst_bottleneck(points: &[Point]) -> Result<f64, GraphError> {
    let n = points.len();
    if n < 2 {
        return Err(GraphError::TooFewSensors(n));
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut current = 0;
    in_tree[0] = true;
    let mut longest = 0.0f64;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let dj = points[current].dist(&points[j]);
            if dj < best[j] {
                best[j] = dj;
            }
            if best[j] < next_d {
                next_d = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        longest = longest.max(next_d);
        current = next;
    }
    Ok(longest)
}

#[derive(Clone, Debug)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
    components: usize,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    pub(crate) fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] = self.rank[a].saturating_add(1);
        }
        self.components -= 1;
        true
    }

    pub(crate) fn components(&self) -> usize {
        self.components
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rectangle;
    use crate::routing::bound_constant;

    fn dep(points: &[(f64, f64)], r_s: f64, r_c: f64) -> Deployment {
        Deployment::new(
            points.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            r_s,
            r_c,
            Rectangle::new(10.0, 10.0).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn build_graph_examples() {
        let g = build_graph(&dep(&[(0.0, 0.0), (1.9, 0.0), (3.8, 0.0)], 1.0, bound_constant()));
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        assert!(is_connected(&g));

        let g = build_graph(&dep(&[(0.0, 0.0), (2.0, 0.0)], 1.0, 2.0));
        assert_eq!(g.edge_count(), 0);
        assert!(!is_connected(&g));

        let g = build_graph(&dep(&[(3.0, 3.0)], 1.0, 2.0));
        assert_eq!(g.edge_count(), 0);
        assert!(is_connected(&g));

        assert!(is_connected(&build_graph(&dep(&[], 1.0, 2.0))));
    }

    #[test]
    fn spacing_examples() {
        assert!(check_spacing(&dep(&[(0.0, 0.0), (1.0, 0.0)], 1.0, 2.0)).ok);
        let r = check_spacing(&dep(&[(0.0, 0.0), (0.5, 0.0)], 1.0, 2.0));
        assert!(!r.ok);
        assert_eq!(r.violating_pairs, vec![SpacingViolation { first: 0, second: 1, distance: 0.5 }]);
        assert!(check_spacing(&dep(&[(4.0, 4.0)], 1.0, 2.0)).ok);
    }

    #[test]
    fn spacing_report_is_ordered() {
        let r = check_spacing(&dep(&[(0.0, 0.0), (0.5, 0.0), (5.0, 5.0), (5.2, 5.0), (0.0, 0.5)], 1.0, 2.0));
        let keys: Vec<(usize, usize)> = r.violating_pairs.iter().map(|v| (v.first, v.second)).collect();
        assert_eq!(keys, vec![(2, 3), (0, 1), (0, 4), (1, 4)]);
    }

    #[test]
    fn margin_examples() {
        let m = connectivity_margin(&dep(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], 1.0, 2.0)).unwrap();
        assert_eq!(m, 1.0);
        let m = connectivity_margin(&dep(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)], 1.0, 2.0)).unwrap();
        assert_eq!(m, 1.0);
        assert_eq!(
            connectivity_margin(&dep(&[(0.0, 0.0)], 1.0, 2.0)),
            Err(GraphError::TooFewSensors(1))
        );
    }

    #[test]
    fn edge_is_strict() {
        let tau = 1e-9;
        for (gap, expect) in [(2.0 - 2.0 * tau, true), (2.0 + 2.0 * tau, false)] {
            let g = build_graph(&dep(&[(1.0, 1.0), (1.0 + gap, 1.0)], 1.0, 2.0));
            assert_eq!(g.has_edge(0, 1), expect);
        }
    }
}
