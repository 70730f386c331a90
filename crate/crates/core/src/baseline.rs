//! Shortest paths in the `h`-neighbourhood graph, the classical geodesic
//! estimator used for comparison.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{DistanceMatrix, PointCloud};

/// Undirected graph joining samples closer than a radius, weighted by their
/// Euclidean distance. Stored as adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    radius: f64,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, adj)| {
            adj.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, w)| (i, j, w))
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (i, adj) in self.adjacency.iter().enumerate() {
            for &(j, w) in adj {
                if !(w > 0.0 && w < self.radius) {
                    return Err(Error::Parameter(format!("edge ({i}, {j}) has weight {w}")));
                }
                if !self.adjacency[j].contains(&(i, w)) {
                    return Err(Error::Parameter(format!("edge ({i}, {j}) is not mirrored")));
                }
            }
        }
        Ok(())
    }
}

/// Joins every pair at Euclidean distance strictly below `radius`.
/// Coincident points (distance 0) are left unjoined so weights stay positive.
pub fn build_neighbor_graph(cloud: &PointCloud, radius: f64) -> Result<NeighborGraph> {
    if !(radius >= 0.0) || radius.is_infinite() {
        return Err(Error::Parameter(format!(
            "graph radius must be finite and non-negative, got {radius}"
        )));
    }
    let n = cloud.len();
    let adjacency = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .filter_map(|j| {
                    let w = cloud.sq_dist(i, j).sqrt();
                    (w > 0.0 && w < radius).then_some((j, w))
                })
                .collect()
        })
        .collect();
    Ok(NeighborGraph { radius, adjacency })
}

/// Path lengths are accumulated exactly as integer multiples of a dyadic
/// tick, so the output satisfies the triangle inequality with no rounding
/// slack. Weights are rounded up to whole ticks; the tick is chosen so that
/// the longest possible path stays below 2^53 ticks, which keeps every sum
/// exactly representable (the tick is about `n · max_w · 2^-52`).
struct Ticks {
    tick: f64,
}

impl Ticks {
    fn for_graph(graph: &NeighborGraph) -> Self {
        let max_w = graph.edges().map(|e| e.2).fold(0.0f64, f64::max);
        let bound = (max_w * graph.len() as f64).max(f64::MIN_POSITIVE);
        let tick = 2f64.powi(bound.log2().ceil() as i32 - 52);
        Self { tick }
    }

    fn to_ticks(&self, w: f64) -> u64 {
        (w / self.tick).ceil() as u64
    }

    fn to_length(&self, t: u64) -> f64 {
        t as f64 * self.tick
    }
}

fn dijkstra(adjacency: &[Vec<(usize, u64)>], source: usize) -> Vec<Option<u64>> {
    let mut dist = vec![None; adjacency.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(0);
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((d, node))) = heap.pop() {
        if dist[node].is_some_and(|best| d > best) {
            continue;
        }
        for &(next, w) in &adjacency[node] {
            let cand = d + w;
            if dist[next].is_none_or(|best| cand < best) {
                dist[next] = Some(cand);
                heap.push(Reverse((cand, next)));
            }
        }
    }
    dist
}

/// All-pairs shortest path lengths; unreachable pairs are `+inf`.
pub fn shortest_path_distances(graph: &NeighborGraph) -> Result<DistanceMatrix> {
    let ticks = Ticks::for_graph(graph);
    let adjacency: Vec<Vec<(usize, u64)>> = graph
        .adjacency
        .iter()
        .map(|adj| adj.iter().map(|&(j, w)| (j, ticks.to_ticks(w))).collect())
        .collect();
    let rows: Vec<Vec<Option<u64>>> = (0..graph.len())
        .into_par_iter()
        .map(|s| dijkstra(&adjacency, s))
        .collect();
    DistanceMatrix::from_fn(graph.len(), |i, j| {
        rows[i][j].map_or(f64::INFINITY, |t| ticks.to_length(t))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplacian::gram_distances;

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud::new(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn collinear_example() {
        let g = build_neighbor_graph(&line(&[0.0, 1.0, 3.0]), 1.5).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 1.0)]);
        g.validate().unwrap();
        let d = shortest_path_distances(&g).unwrap();
        assert_eq!(d.get(0, 1), 1.0);
        assert!(d.get(0, 2).is_infinite());
        assert!(d.get(1, 2).is_infinite());
    }

    #[test]
    fn radius_extremes() {
        let cloud = line(&[0.0, 0.5, 2.0, 2.25]);
        assert_eq!(
            build_neighbor_graph(&cloud, 0.1).unwrap().edges().count(),
            0
        );
        let g = build_neighbor_graph(&cloud, 10.0).unwrap();
        assert_eq!(g.edges().count(), 6);
        let d = shortest_path_distances(&g).unwrap();
        let e = gram_distances(&cloud);
        for (i, j, x) in d.upper_pairs() {
            assert!(x >= e.get(i, j) && x - e.get(i, j) < 1e-13);
        }
        let d = shortest_path_distances(&build_neighbor_graph(&cloud, 0.0).unwrap()).unwrap();
        assert!(d.upper_pairs().all(|(_, _, x)| x.is_infinite()));
        assert!(build_neighbor_graph(&cloud, -1.0).is_err());
    }

    #[test]
    fn two_nodes() {
        let d = shortest_path_distances(&build_neighbor_graph(&line(&[0.0, 0.3]), 1.0).unwrap())
            .unwrap();
        assert!((d.get(0, 1) - 0.3).abs() < 1e-15 && d.get(0, 1) >= 0.3);
    }

    #[test]
    fn path_goes_through_intermediate() {
        let d =
            shortest_path_distances(&build_neighbor_graph(&line(&[0.0, 1.0, 2.0]), 1.5).unwrap())
                .unwrap();
        assert_eq!(d.get(0, 2), 2.0);
    }
}
