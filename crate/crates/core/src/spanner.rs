//! Theta-graph construction, cone routing, and an exact shortest-path
//! certifier for the spanning ratio.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConeSystem, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Undirected edge of the embedding, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGraph {
    points: Vec<Point>,
    cs: ConeSystem,
    /// Row-major `n × k`: entry `v*k + i` is the chosen neighbor in cone `i` of `v`.
    out_edge: Vec<Option<VertexId>>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(VertexId, f64)>>,
}

impl ThetaGraph {
    /// Naive O(n²) construction: every vertex scans all others, buckets them
    /// by cone and keeps the one with the smallest bisector projection. Ties
    /// go to the smaller vertex index.
    pub fn build(points: Vec<Point>, cs: ConeSystem) -> Result<Self> {
        validate_points(&points)?;
        let n = points.len();
        let k = cs.k();
        let bisectors: Vec<Point> = (0..k).map(|i| cs.bisector(i)).collect();
        let mut out_edge = vec![None; n * k];
        let mut best = vec![f64::INFINITY; k];
        for (v, &pv) in points.iter().enumerate() {
            best.fill(f64::INFINITY);
            let row = &mut out_edge[v * k..(v + 1) * k];
            for (w, &pw) in points.iter().enumerate() {
                if w == v {
                    continue;
                }
                let cone = cs.cone_of(pv, pw)?;
                let proj = (pw - pv).dot(bisectors[cone]);
                if proj < best[cone] {
                    best[cone] = proj;
                    row[cone] = Some(VertexId(w));
                }
            }
        }
        Ok(Self::assemble(points, cs, out_edge))
    }

    fn assemble(points: Vec<Point>, cs: ConeSystem, out_edge: Vec<Option<VertexId>>) -> Self {
        let n = points.len();
        let k = cs.k();
        let mut lengths: BTreeMap<(VertexId, VertexId), f64> = BTreeMap::new();
        for v in 0..n {
            for w in out_edge[v * k..(v + 1) * k].iter().flatten() {
                let key = if v < w.0 {
                    (VertexId(v), *w)
                } else {
                    (*w, VertexId(v))
                };
                lengths
                    .entry(key)
                    .or_insert_with(|| points[v].dist(points[w.0]));
            }
        }
        let edges: Vec<Edge> = lengths
            .into_iter()
            .map(|((u, v), length)| Edge { u, v, length })
            .collect();
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.u.0].push((e.v, e.length));
            adjacency[e.v.0].push((e.u, e.length));
        }
        ThetaGraph {
            points,
            cs,
            out_edge,
            edges,
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, v: VertexId) -> Point {
        self.points[v.0]
    }

    pub fn cones(&self) -> ConeSystem {
        self.cs
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.adjacency[v.0]
    }

    pub fn out_edge(&self, v: VertexId, cone: usize) -> Option<VertexId> {
        self.out_edge[v.0 * self.cs.k() + cone]
    }

    pub fn out_edges(&self, v: VertexId) -> &[Option<VertexId>] {
        let k = self.cs.k();
        &self.out_edge[v.0 * k..(v.0 + 1) * k]
    }

    pub fn edge_length(&self, u: VertexId, v: VertexId) -> Option<f64> {
        self.adjacency
            .get(u.0)?
            .iter()
            .find(|(w, _)| *w == v)
            .map(|&(_, len)| len)
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v.0 < self.len() {
            Ok(())
        } else {
            Err(Error::BadVertex(v.0))
        }
    }

    /// One hop of cone routing: follow the out-edge of `at` in `cone`.
    pub fn route_step(&self, at: VertexId, cone: usize) -> Result<VertexId> {
        self.check_vertex(at)?;
        if cone >= self.cs.k() {
            return Err(Error::NoEdgeInCone { vertex: at.0, cone });
        }
        self.out_edge(at, cone)
            .ok_or(Error::NoEdgeInCone { vertex: at.0, cone })
    }

    /// Cone route from `from` to `to`, inclusive of both endpoints.
    pub fn route(&self, from: VertexId, to: VertexId) -> Result<Vec<VertexId>> {
        self.check_vertex(from)?;
        self.check_vertex(to)?;
        let target = self.point(to);
        let cap = self.len() * self.cs.k();
        let mut path = vec![from];
        let mut at = from;
        while at != to {
            if path.len() > cap {
                return Err(Error::RoutingDiverged {
                    from: from.0,
                    to: to.0,
                    steps: cap,
                });
            }
            let cone = self.cs.cone_of(self.point(at), target)?;
            at = self.route_step(at, cone)?;
            path.push(at);
        }
        Ok(path)
    }

    /// Euclidean length of a vertex path.
    pub fn path_length(&self, path: &[VertexId]) -> f64 {
        path.windows(2)
            .map(|w| self.point(w[0]).dist(self.point(w[1])))
            .sum()
    }

    /// Single-source shortest path lengths over the undirected embedding.
    /// Unreachable vertices get `f64::INFINITY`.
    pub fn shortest_paths(&self, source: VertexId) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Entry(f64, usize);
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Entry {
            // min-heap on distance
            fn cmp(&self, other: &Self) -> Ordering {
                other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
            }
        }

        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[source.0] = 0.0;
        heap.push(Entry(0.0, source.0));
        while let Some(Entry(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(w, len) in &self.adjacency[u] {
                let nd = d + len;
                if nd < dist[w.0] {
                    dist[w.0] = nd;
                    heap.push(Entry(nd, w.0));
                }
            }
        }
        dist
    }

    /// Maximum over `pairs` of (shortest-path length / Euclidean distance).
    /// Pairs with identical endpoints are skipped.
    pub fn certify_spanning_ratio(&self, pairs: &[(VertexId, VertexId)]) -> Result<f64> {
        let mut by_source: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
        for &(s, t) in pairs {
            self.check_vertex(s)?;
            self.check_vertex(t)?;
            if s != t {
                by_source.entry(s).or_default().push(t);
            }
        }
        if by_source.is_empty() {
            return Err(Error::NoData);
        }
        let per_source: Vec<Result<f64>> = by_source
            .par_iter()
            .map(|(&s, targets)| {
                let dist = self.shortest_paths(s);
                let mut worst: f64 = 0.0;
                for &t in targets {
                    if !dist[t.0].is_finite() {
                        return Err(Error::Unreachable { from: s.0, to: t.0 });
                    }
                    worst = worst.max(dist[t.0] / self.point(s).dist(self.point(t)));
                }
                Ok(worst)
            })
            .collect();
        per_source
            .into_iter()
            .try_fold(0.0f64, |acc, r| Ok(acc.max(r?)))
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            k: self.cs.k(),
            points: self.points.iter().map(|p| [p.x, p.y]).collect(),
            out_edges: (0..self.len())
                .map(|v| {
                    self.out_edges(VertexId(v))
                        .iter()
                        .map(|e| e.map(|w| w.0))
                        .collect()
                })
                .collect(),
        }
    }

    /// Load a graph from its JSON form. The stored out-edges must match a
    /// fresh construction over the stored points.
    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let points = json
            .points
            .iter()
            .map(|&[x, y]| Point::checked(x, y))
            .collect::<Result<Vec<_>>>()?;
        let cs = ConeSystem::for_spanner(json.k)?;
        if json.out_edges.len() != points.len() {
            return Err(Error::Parse(format!(
                "out_edges has {} rows for {} points",
                json.out_edges.len(),
                points.len()
            )));
        }
        let mut out_edge = Vec::with_capacity(points.len() * json.k);
        for (v, row) in json.out_edges.iter().enumerate() {
            if row.len() != json.k {
                return Err(Error::Parse(format!(
                    "vertex {v} has {} cones, expected {}",
                    row.len(),
                    json.k
                )));
            }
            for e in row {
                if let Some(w) = e {
                    if *w >= points.len() {
                        return Err(Error::BadVertex(*w));
                    }
                }
                out_edge.push(e.map(VertexId));
            }
        }
        let rebuilt = Self::build(points, cs)?;
        if rebuilt.out_edge != out_edge {
            return Err(Error::Invariant(
                "stored out-edges differ from theta-graph construction".into(),
            ));
        }
        Ok(rebuilt)
    }
}

/// Serialized theta graph: `{"k", "points": [[x,y]..], "out_edges": [[v|null; k]; n]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub k: usize,
    pub points: Vec<[f64; 2]>,
    pub out_edges: Vec<Vec<Option<usize>>>,
}

fn validate_points(points: &[Point]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let mut seen: HashMap<(u64, u64), usize> = HashMap::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::NonFinite(p.x, p.y));
        }
        // +0.0 normalizes -0.0 so both hash alike
        let key = ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits());
        if let Some(&first) = seen.get(&key) {
            return Err(Error::DuplicatePoint { first, second: i });
        }
        seen.insert(key, i);
    }
    Ok(())
}

/// Every unordered pair `(i, j)` with `i < j`.
pub fn all_pairs(n: usize) -> Vec<(VertexId, VertexId)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (VertexId(i), VertexId(j))))
        .collect()
}

/// `count` ordered pairs of distinct vertices drawn uniformly with replacement.
pub fn sample_pairs<R: Rng + ?Sized>(
    n: usize,
    count: usize,
    rng: &mut R,
) -> Vec<(VertexId, VertexId)> {
    if n < 2 {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let u = rng.random_range(0..n);
            let v = (u + rng.random_range(1..n)) % n;
            (VertexId(u), VertexId(v))
        })
        .collect()
}

/// Parse a point-set file: one `x y` pair per line, `#` comments and blank
/// lines ignored.
pub fn read_points(reader: impl BufRead) -> Result<Vec<Point>> {
    let mut points = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let parse = |f: Option<&str>| -> Result<f64> {
            f.ok_or_else(|| Error::Parse(format!("line {}: expected two numbers", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
        };
        let x = parse(fields.next())?;
        let y = parse(fields.next())?;
        if fields.next().is_some() {
            return Err(Error::Parse(format!(
                "line {}: trailing fields",
                lineno + 1
            )));
        }
        points.push(Point::checked(x, y)?);
    }
    Ok(points)
}

/// Write points in the format read by [`read_points`]. Coordinates are
/// printed in shortest round-trip form.
pub fn write_points(mut w: impl Write, points: &[Point]) -> Result<()> {
    writeln!(w, "# {} points", points.len())?;
    for p in points {
        writeln!(w, "{} {}", p.x, p.y)?;
    }
    Ok(())
}
