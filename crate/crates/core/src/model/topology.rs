//! Minimum-latency routing over the undirected network links.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::IoTSystemModel;

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub latency_ms: f64,
    /// Platforms from source to destination, both included.
    pub path: Vec<String>,
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    latency: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .latency
            .total_cmp(&self.latency)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Adjacency view of a model's network, indexed by platform position.
#[derive(Debug, Clone)]
pub struct Topology {
    names: Vec<String>,
    index: HashMap<String, usize>,
    /// (neighbour, latency_ms, distance_m), sorted by neighbour index.
    adjacency: Vec<Vec<(usize, f64, f64)>>,
}

impl Topology {
    pub fn new(model: &IoTSystemModel) -> Self {
        let names: Vec<String> = model.platforms.iter().map(|p| p.name.clone()).collect();
        let index: HashMap<String, usize> =
            names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut adjacency = vec![Vec::new(); names.len()];
        for link in &model.networks {
            if let (Some(&a), Some(&b)) = (index.get(&link.endpoint_a), index.get(&link.endpoint_b)) {
                adjacency[a].push((b, link.latency_ms, link.distance_m));
                adjacency[b].push((a, link.latency_ms, link.distance_m));
            }
        }
        for edges in &mut adjacency {
            edges.sort_by_key(|e| e.0);
        }
        Self {
            names,
            index,
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    /// Links incident to a platform as (neighbour, latency_ms, distance_m).
    pub fn neighbours(&self, idx: usize) -> &[(usize, f64, f64)] {
        &self.adjacency[idx]
    }

    /// Single-source Dijkstra. Returns per-node latency (infinite when
    /// unreachable) and predecessor.
    pub fn from_source(&self, source: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        let n = self.names.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Frontier {
            latency: 0.0,
            node: source,
        });
        while let Some(Frontier { latency, node }) = heap.pop() {
            if latency > dist[node] {
                continue;
            }
            for &(next, link_latency, _) in &self.adjacency[node] {
                let candidate = latency + link_latency;
                if candidate < dist[next] {
                    dist[next] = candidate;
                    pred[next] = Some(node);
                    heap.push(Frontier {
                        latency: candidate,
                        node: next,
                    });
                }
            }
        }
        (dist, pred)
    }

    pub fn route(&self, from: &str, to: &str) -> Option<Route> {
        let (src, dst) = (self.index_of(from)?, self.index_of(to)?);
        let (dist, pred) = self.from_source(src);
        if !dist[dst].is_finite() {
            return None;
        }
        Some(Route {
            latency_ms: dist[dst],
            path: walk_back(&pred, src, dst)
                .into_iter()
                .map(|i| self.names[i].clone())
                .collect(),
        })
    }

    pub fn all_pairs(&self) -> PathTable {
        let rows = (0..self.len()).map(|s| self.from_source(s)).collect();
        PathTable { rows }
    }
}

fn walk_back(pred: &[Option<usize>], src: usize, dst: usize) -> Vec<usize> {
    let mut path = vec![dst];
    let mut cur = dst;
    while cur != src {
        match pred[cur] {
            Some(p) => {
                path.push(p);
                cur = p;
            }
            None => break,
        }
    }
    path.reverse();
    path
}

/// Shortest routes between every pair of platforms.
#[derive(Debug, Clone)]
pub struct PathTable {
    rows: Vec<(Vec<f64>, Vec<Option<usize>>)>,
}

impl PathTable {
    pub fn latency(&self, from: usize, to: usize) -> Option<f64> {
        let d = self.rows[from].0[to];
        d.is_finite().then_some(d)
    }

    /// Node indices along the route, endpoints included.
    pub fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        self.latency(from, to)?;
        Some(walk_back(&self.rows[from].1, from, to))
    }
}

/// Minimum-total-latency route between two platforms, or `None` when either
/// platform is unknown or no route exists.
pub fn shortest_path_latency(model: &IoTSystemModel, from: &str, to: &str) -> Option<Route> {
    Topology::new(model).route(from, to)
}
