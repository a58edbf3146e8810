use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// Static undirected graph over `K` agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    node_count: usize,
    /// Sorted, `u < v`.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<bool>>,
    neighbors: Vec<Vec<usize>>,
}

impl Network {
    /// Builds a network from undirected edges. Duplicates collapse; self-loops
    /// and out-of-range endpoints are rejected. Connectivity is not required
    /// here; see [`Network::is_connected`].
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::InvalidNetwork(format!(
                "need at least 2 agents, got {node_count}"
            )));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({u}, {v}) out of range for {node_count} agents"
                )));
            }
            if u == v {
                return Err(Error::InvalidNetwork(format!("self-loop at node {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adjacency = vec![vec![false; node_count]; node_count];
        let mut neighbors = vec![Vec::new(); node_count];
        for &(u, v) in &set {
            adjacency[u][v] = true;
            adjacency[v][u] = true;
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self {
            node_count,
            edges: set.into_iter().collect(),
            adjacency,
            neighbors,
        })
    }

    /// `G(K, p)` random graph; may be disconnected.
    pub fn erdos_renyi<R: Rng + ?Sized>(node_count: usize, p: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidNetwork(format!("edge probability {p} outside [0, 1]")));
        }
        let mut edges = Vec::new();
        for u in 0..node_count {
            for v in (u + 1)..node_count {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        Self::new(node_count, edges)
    }

    /// Redraws `G(K, p)` until connected, at most `max_attempts` times.
    pub fn connected_erdos_renyi<R: Rng + ?Sized>(
        node_count: usize,
        p: f64,
        rng: &mut R,
        max_attempts: usize,
    ) -> Result<Self> {
        for _ in 0..max_attempts {
            let net = Self::erdos_renyi(node_count, p, rng)?;
            if net.is_connected() {
                return Ok(net);
            }
        }
        Err(Error::InvalidNetwork(format!(
            "no connected G({node_count}, {p}) sample in {max_attempts} attempts"
        )))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adjacency
    }

    pub fn is_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u][v]
    }

    /// Neighbors of `k`, excluding `k`.
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.neighbors[k]
    }

    pub fn degree(&self, k: usize) -> usize {
        self.neighbors[k].len()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.node_count
    }

    /// Parses `"K\n"` followed by one `"u v"` pair per line (0-indexed).
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let node_count: usize = header
            .parse()
            .map_err(|_| Error::Parse(format!("expected node count, got {header:?}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize> {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("malformed edge line {line:?}")))?
                    .parse()
                    .map_err(|_| Error::Parse(format!("malformed edge line {line:?}")))
            };
            let (u, v) = (next()?, next()?);
            if parts.next().is_some() {
                return Err(Error::Parse(format!("malformed edge line {line:?}")));
            }
            edges.push((u, v));
        }
        Self::new(node_count, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.node_count);
        for (u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }

    pub fn path(node_count: usize) -> Result<Self> {
        Self::new(node_count, (1..node_count).map(|k| (k - 1, k)))
    }

    pub fn complete(node_count: usize) -> Result<Self> {
        Self::new(
            node_count,
            (0..node_count).flat_map(|u| ((u + 1)..node_count).map(move |v| (u, v))),
        )
    }

    pub fn ring(node_count: usize) -> Result<Self> {
        Self::new(node_count, (0..node_count).map(|k| (k, (k + 1) % node_count)))
    }
}
