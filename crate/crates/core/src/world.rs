//! The evolving system: the true label matching, the hypothesis kept on the
//! graph embedding, the evolver that swaps nearby labels once per time unit,
//! the cone oracle with its switch cost, and the distance between the two.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rng::{stream_rng, SimRng, EVOLVER_STREAM};
use crate::spanner::{ThetaGraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelId(pub usize);

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

/// The true assignment of labels to vertices, kept as a pair of inverse
/// permutations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    label_at: Vec<LabelId>,
    vertex_of: Vec<VertexId>,
}

impl Matching {
    pub fn identity(n: usize) -> Self {
        Matching {
            label_at: (0..n).map(LabelId).collect(),
            vertex_of: (0..n).map(VertexId).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut label_at: Vec<LabelId> = (0..n).map(LabelId).collect();
        label_at.shuffle(rng);
        Self::from_label_at(label_at).expect("shuffle is a permutation")
    }

    pub fn from_label_at(label_at: Vec<LabelId>) -> Result<Self> {
        let n = label_at.len();
        let mut vertex_of = vec![VertexId(usize::MAX); n];
        for (v, l) in label_at.iter().enumerate() {
            if l.0 >= n || vertex_of[l.0].0 != usize::MAX {
                return Err(Error::Invariant(format!(
                    "label_at is not a permutation at {v}"
                )));
            }
            vertex_of[l.0] = VertexId(v);
        }
        Ok(Matching {
            label_at,
            vertex_of,
        })
    }

    pub fn len(&self) -> usize {
        self.label_at.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label_at.is_empty()
    }

    pub fn label_at(&self, v: VertexId) -> LabelId {
        self.label_at[v.0]
    }

    pub fn vertex_of(&self, l: LabelId) -> VertexId {
        self.vertex_of[l.0]
    }

    pub fn swap(&mut self, u: VertexId, v: VertexId) {
        let (a, b) = (self.label_at[u.0], self.label_at[v.0]);
        self.label_at.swap(u.0, v.0);
        self.vertex_of[a.0] = v;
        self.vertex_of[b.0] = u;
    }

    pub fn is_consistent(&self) -> bool {
        self.label_at.len() == self.vertex_of.len()
            && self
                .label_at
                .iter()
                .enumerate()
                .all(|(v, l)| self.vertex_of.get(l.0) == Some(&VertexId(v)))
    }
}

/// A location on the embedding: a vertex, or a point strictly inside an edge
/// at distance `offset` from `from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GraphPos {
    Vertex(VertexId),
    Edge {
        from: VertexId,
        to: VertexId,
        offset: f64,
    },
}

impl GraphPos {
    /// Position `offset` along edge `from → to`, normalized to a vertex at
    /// either end.
    pub fn on_edge(g: &ThetaGraph, from: VertexId, to: VertexId, offset: f64) -> Result<Self> {
        let length = g
            .edge_length(from, to)
            .ok_or(Error::NoSuchEdge(from.0, to.0))?;
        if !offset.is_finite() {
            return Err(Error::Invariant(format!("non-finite edge offset {offset}")));
        }
        Ok(if offset <= 0.0 {
            GraphPos::Vertex(from)
        } else if offset >= length {
            GraphPos::Vertex(to)
        } else {
            GraphPos::Edge { from, to, offset }
        })
    }

    pub fn vertex(&self) -> Option<VertexId> {
        match *self {
            GraphPos::Vertex(v) => Some(v),
            GraphPos::Edge { .. } => None,
        }
    }

    pub fn point(&self, g: &ThetaGraph) -> Point {
        match *self {
            GraphPos::Vertex(v) => g.point(v),
            GraphPos::Edge { from, to, offset } => {
                let (a, b) = (g.point(from), g.point(to));
                a.lerp(b, offset / a.dist(b))
            }
        }
    }

    pub fn is_valid(&self, g: &ThetaGraph) -> bool {
        match *self {
            GraphPos::Vertex(v) => v.0 < g.len(),
            GraphPos::Edge { from, to, offset } => g
                .edge_length(from, to)
                .is_some_and(|len| offset > 0.0 && offset < len),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pos: Vec<GraphPos>,
}

impl Hypothesis {
    pub fn new(pos: Vec<GraphPos>) -> Self {
        Hypothesis { pos }
    }

    /// Every label hypothesized exactly where the matching puts it.
    pub fn from_matching(m: &Matching) -> Self {
        Hypothesis {
            pos: (0..m.len())
                .map(|l| GraphPos::Vertex(m.vertex_of(LabelId(l))))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn get(&self, l: LabelId) -> GraphPos {
        self.pos[l.0]
    }

    pub fn positions(&self) -> &[GraphPos] {
        &self.pos
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    Perfect,
    Scrambled,
}

/// Random bijection of labels to vertices, plus the initial hypothesis.
pub fn init_world<R: Rng + ?Sized>(
    g: &ThetaGraph,
    init: InitMode,
    rng: &mut R,
) -> (Matching, Hypothesis) {
    let n = g.len();
    let m = Matching::random(n, rng);
    let h = match init {
        InitMode::Perfect => Hypothesis::from_matching(&m),
        InitMode::Scrambled => Hypothesis::new(
            (0..n)
                .map(|_| GraphPos::Vertex(VertexId(rng.random_range(0..n))))
                .collect(),
        ),
    };
    (m, h)
}

/// `D(M, H)` recomputed from scratch.
pub fn distance(g: &ThetaGraph, m: &Matching, h: &Hypothesis) -> f64 {
    h.positions()
        .iter()
        .enumerate()
        .map(|(l, pos)| pos.point(g).dist(g.point(m.vertex_of(LabelId(l)))))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolverKind {
    /// No swaps; ticks still fire.
    Off,
    Random,
    GreedyMax,
    /// Pushes the currently tracked label away from its hypothesis. Sees the
    /// tracker's choice, so it is not an oblivious adversary.
    Evader,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolverConfig {
    pub kind: EvolverKind,
    pub swap_radius: f64,
    pub swaps_per_step: usize,
}

impl Default for EvolverConfig {
    fn default() -> Self {
        EvolverConfig {
            kind: EvolverKind::Random,
            swap_radius: 1.0,
            swaps_per_step: 1,
        }
    }
}

impl EvolverConfig {
    pub fn off() -> Self {
        EvolverConfig {
            kind: EvolverKind::Off,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.swap_radius > 0.0 && self.swap_radius.is_finite()) {
            return Err(Error::config("swap_radius", "must be positive and finite"));
        }
        if self.swaps_per_step == 0 {
            return Err(Error::config("swaps_per_step", "must be at least 1"));
        }
        Ok(())
    }
}

/// All vertex pairs closer than `radius`, found through a grid of
/// `radius`-sized cells. Sorted by `(u, v)` with `u < v`.
pub fn eligible_pairs(points: &[Point], radius: f64) -> Vec<(VertexId, VertexId)> {
    let cell = |p: Point| ((p.x / radius).floor() as i64, (p.y / radius).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &p) in points.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let mut pairs = Vec::new();
    for (u, &pu) in points.iter().enumerate() {
        let (cx, cy) = cell(pu);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &v in bucket {
                    if v > u && pu.dist(points[v]) < radius {
                        pairs.push((VertexId(u), VertexId(v)));
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCostModel {
    pub switch_overhead: f64,
    pub last_queried: Option<LabelId>,
}

impl OracleCostModel {
    pub fn new(switch_overhead: f64) -> Result<Self> {
        if !(switch_overhead >= 0.0 && switch_overhead.is_finite()) {
            return Err(Error::config(
                "switch_overhead",
                "must be non-negative and finite",
            ));
        }
        Ok(OracleCostModel {
            switch_overhead,
            last_queried: None,
        })
    }
}

/// Simulated time. The evolver fires at every positive integer time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clock {
    now: f64,
    next_tick: u64,
}

impl Default for Clock {
    fn default() -> Self {
        Clock {
            now: 0.0,
            next_tick: 1,
        }
    }
}

impl Clock {
    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn next_tick(&self) -> u64 {
        self.next_tick
    }
}

/// A label moving along an edge at constant speed.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Traversal {
    label: LabelId,
    from: VertexId,
    to: VertexId,
    start: f64,
    speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickSample {
    pub time: f64,
    pub distance: f64,
}

pub struct World<'g> {
    g: &'g ThetaGraph,
    matching: Matching,
    hypothesis: Hypothesis,
    hyp_point: Vec<Point>,
    label_dist: Vec<f64>,
    displaced: Vec<bool>,
    displaced_count: usize,
    total: f64,
    updates_since_resum: usize,
    clock: Clock,
    cost: OracleCostModel,
    evolver: EvolverConfig,
    pairs: Vec<(VertexId, VertexId)>,
    near: Vec<Vec<VertexId>>,
    evolver_rng: SimRng,
    tracked: Option<LabelId>,
    in_flight: Option<Traversal>,
    recording: bool,
    tick_log: Vec<TickSample>,
    swaps: u64,
    idle_ticks: u64,
}

impl<'g> World<'g> {
    pub fn new(
        g: &'g ThetaGraph,
        matching: Matching,
        hypothesis: Hypothesis,
        evolver: EvolverConfig,
        switch_overhead: f64,
        seed: u64,
    ) -> Result<Self> {
        evolver.validate()?;
        let cost = OracleCostModel::new(switch_overhead)?;
        let n = g.len();
        if matching.len() != n || hypothesis.len() != n {
            return Err(Error::Invariant(format!(
                "matching ({}) and hypothesis ({}) must cover all {n} vertices",
                matching.len(),
                hypothesis.len()
            )));
        }
        if !matching.is_consistent() {
            return Err(Error::Invariant("matching is not a bijection".into()));
        }
        if let Some(l) = hypothesis.pos.iter().position(|p| !p.is_valid(g)) {
            return Err(Error::Invariant(format!(
                "hypothesis of label {l} is not on the embedding"
            )));
        }
        let pairs = eligible_pairs(g.points(), evolver.swap_radius);
        let mut near = vec![Vec::new(); n];
        for &(u, v) in &pairs {
            near[u.0].push(v);
            near[v.0].push(u);
        }
        let hyp_point: Vec<Point> = hypothesis.pos.iter().map(|p| p.point(g)).collect();
        let mut world = World {
            g,
            matching,
            hypothesis,
            hyp_point,
            label_dist: vec![0.0; n],
            displaced: vec![false; n],
            displaced_count: 0,
            total: 0.0,
            updates_since_resum: 0,
            clock: Clock::default(),
            cost,
            evolver,
            pairs,
            near,
            evolver_rng: stream_rng(seed, EVOLVER_STREAM),
            tracked: None,
            in_flight: None,
            recording: false,
            tick_log: Vec::new(),
            swaps: 0,
            idle_ticks: 0,
        };
        for l in 0..n {
            world.refresh_label(LabelId(l));
        }
        world.resum();
        Ok(world)
    }

    pub fn graph(&self) -> &'g ThetaGraph {
        self.g
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn hypothesis(&self) -> &Hypothesis {
        &self.hypothesis
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn now(&self) -> f64 {
        self.clock.now
    }

    pub fn cost(&self) -> OracleCostModel {
        self.cost
    }

    pub fn evolver(&self) -> &EvolverConfig {
        &self.evolver
    }

    pub fn eligible(&self) -> &[(VertexId, VertexId)] {
        &self.pairs
    }

    /// Number of swaps performed so far.
    pub fn swaps(&self) -> u64 {
        self.swaps
    }

    /// Ticks at which the evolver had no eligible pair.
    pub fn idle_ticks(&self) -> u64 {
        self.idle_ticks
    }

    /// Incrementally maintained `D(M, H)`.
    pub fn distance(&self) -> f64 {
        self.total
    }

    pub fn label_distance(&self, l: LabelId) -> f64 {
        self.label_dist[l.0]
    }

    /// Labels whose hypothesis is not exactly their true vertex.
    pub fn displaced_count(&self) -> usize {
        self.displaced_count
    }

    pub fn tracked(&self) -> Option<LabelId> {
        self.tracked
    }

    pub fn set_tracked(&mut self, l: Option<LabelId>) {
        self.tracked = l;
    }

    /// When on, every tick appends a [`TickSample`] to be drained later.
    pub fn set_recording(&mut self, on: bool) {
        self.recording = on;
    }

    pub fn drain_ticks(&mut self) -> std::vec::Drain<'_, TickSample> {
        self.tick_log.drain(..)
    }

    pub fn set_hypothesis(&mut self, l: LabelId, pos: GraphPos) -> Result<()> {
        if !pos.is_valid(self.g) {
            return Err(Error::Invariant(format!("{pos:?} is not on the embedding")));
        }
        self.hypothesis.pos[l.0] = pos;
        self.hyp_point[l.0] = pos.point(self.g);
        self.refresh_label(l);
        Ok(())
    }

    fn refresh_label(&mut self, l: LabelId) {
        let truth = self.matching.vertex_of(l);
        let d = self.hyp_point[l.0].dist(self.g.point(truth));
        self.total += d - self.label_dist[l.0];
        self.label_dist[l.0] = d;
        let off = self.hypothesis.pos[l.0] != GraphPos::Vertex(truth);
        if off != self.displaced[l.0] {
            self.displaced[l.0] = off;
            if off {
                self.displaced_count += 1;
            } else {
                self.displaced_count -= 1;
            }
        }
        self.updates_since_resum += 1;
        if self.displaced_count == 0 {
            self.total = 0.0;
            self.updates_since_resum = 0;
        } else if self.updates_since_resum >= self.label_dist.len().max(64) {
            self.resum();
        }
    }

    // Bounds incremental round-off to one window of updates.
    fn resum(&mut self) {
        self.total = self.label_dist.iter().sum();
        self.updates_since_resum = 0;
    }

    fn apply_swap(&mut self, u: VertexId, v: VertexId) {
        let (a, b) = (self.matching.label_at(u), self.matching.label_at(v));
        self.matching.swap(u, v);
        self.refresh_label(a);
        self.refresh_label(b);
        self.swaps += 1;
    }

    /// Change in `D` if the labels at `u` and `v` were swapped.
    fn swap_gain(&self, u: VertexId, v: VertexId) -> f64 {
        let (a, b) = (self.matching.label_at(u), self.matching.label_at(v));
        let (pu, pv) = (self.g.point(u), self.g.point(v));
        self.hyp_point[a.0].dist(pv) + self.hyp_point[b.0].dist(pu)
            - self.label_dist[a.0]
            - self.label_dist[b.0]
    }

    fn greedy_pair(&self) -> Option<(VertexId, VertexId)> {
        let mut best: Option<((VertexId, VertexId), f64)> = None;
        for &(u, v) in &self.pairs {
            let gain = self.swap_gain(u, v);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some(((u, v), gain));
            }
        }
        best.map(|(p, _)| p)
    }

    fn evader_pair(&self) -> Option<(VertexId, VertexId)> {
        let Some(l) = self.tracked else {
            return self.greedy_pair();
        };
        let at = self.matching.vertex_of(l);
        let h = self.hyp_point[l.0];
        let mut best: Option<(VertexId, f64)> = None;
        for &w in &self.near[at.0] {
            let d = h.dist(self.g.point(w));
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((w, d));
            }
        }
        match best {
            Some((w, _)) => Some((at, w)),
            None => self.greedy_pair(),
        }
    }

    fn choose_pair(&mut self) -> Option<(VertexId, VertexId)> {
        if self.pairs.is_empty() {
            return None;
        }
        match self.evolver.kind {
            EvolverKind::Off => None,
            EvolverKind::Random => {
                let i = self.evolver_rng.random_range(0..self.pairs.len());
                Some(self.pairs[i])
            }
            EvolverKind::GreedyMax => self.greedy_pair(),
            EvolverKind::Evader => self.evader_pair(),
        }
    }

    /// One evolver step: up to `swaps_per_step` swaps of labels on vertices
    /// closer than the swap radius. Empty when no pair is eligible or the
    /// evolver is off.
    pub fn evolver_step(&mut self) -> Vec<(VertexId, VertexId)> {
        let mut done = Vec::with_capacity(self.evolver.swaps_per_step);
        for _ in 0..self.evolver.swaps_per_step {
            match self.choose_pair() {
                Some((u, v)) => {
                    self.apply_swap(u, v);
                    done.push((u, v));
                }
                None => break,
            }
        }
        if done.is_empty() && self.evolver.kind != EvolverKind::Off {
            self.idle_ticks += 1;
        }
        done
    }

    /// Advance simulated time to `t`, firing the evolver at each integer in
    /// `(now, t]`. A label in flight is placed at its interpolated position
    /// before each tick.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.clock.now || t.is_nan() {
            return Err(Error::Invariant(format!(
                "clock cannot move backwards from {} to {t}",
                self.clock.now
            )));
        }
        while self.clock.next_tick as f64 <= t {
            let tick = self.clock.next_tick as f64;
            self.clock.now = tick;
            if let Some(tr) = self.in_flight {
                let pos = GraphPos::on_edge(self.g, tr.from, tr.to, tr.speed * (tick - tr.start))?;
                self.set_hypothesis(tr.label, pos)?;
            }
            self.evolver_step();
            if self.recording {
                self.tick_log.push(TickSample {
                    time: tick,
                    distance: self.total,
                });
            }
            self.clock.next_tick += 1;
        }
        self.clock.now = t;
        Ok(())
    }

    /// Move `label` from its current vertex to `to` at `speed` (distance per
    /// time unit). Time advances by `length / speed`; afterwards the
    /// hypothesis sits on `to`.
    pub fn traverse(&mut self, label: LabelId, to: VertexId, speed: f64) -> Result<f64> {
        let from = self
            .hypothesis
            .get(label)
            .vertex()
            .ok_or(Error::QueryOffVertex(label.0))?;
        let length = self
            .g
            .edge_length(from, to)
            .ok_or(Error::NoSuchEdge(from.0, to.0))?;
        let start = self.clock.now;
        let end = start + length / speed;
        self.in_flight = Some(Traversal {
            label,
            from,
            to,
            start,
            speed,
        });
        let res = self.advance_to(end);
        self.in_flight = None;
        res?;
        self.set_hypothesis(label, GraphPos::Vertex(to))?;
        Ok(length)
    }

    /// The cone around `H(l)` containing `l`'s true vertex, or `None` when
    /// they coincide. Switching to a label other than the last one queried
    /// costs `switch_overhead` time, during which the evolver keeps running;
    /// the answer reflects the state after that delay.
    pub fn oracle_query(&mut self, l: LabelId) -> Result<Option<usize>> {
        let at = self
            .hypothesis
            .get(l)
            .vertex()
            .ok_or(Error::QueryOffVertex(l.0))?;
        if self.cost.last_queried != Some(l) {
            let until = self.clock.now + self.cost.switch_overhead;
            self.advance_to(until)?;
            self.cost.last_queried = Some(l);
        }
        let truth = self.matching.vertex_of(l);
        if truth == at {
            Ok(None)
        } else {
            let cs = self.g.cones();
            Ok(Some(cs.cone_of(self.g.point(at), self.g.point(truth))?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConeSystem;
    use crate::rng::INSTANCE_STREAM;
    use approx::assert_relative_eq;

    fn graph(pts: &[(f64, f64)]) -> ThetaGraph {
        ThetaGraph::build(
            pts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            ConeSystem::new(8).unwrap(),
        )
        .unwrap()
    }

    fn random_graph(n: usize, seed: u64) -> ThetaGraph {
        let mut rng = stream_rng(seed, INSTANCE_STREAM);
        let side = (n as f64).sqrt();
        let pts = (0..n)
            .map(|_| Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side))
            .collect();
        ThetaGraph::build(pts, ConeSystem::new(8).unwrap()).unwrap()
    }

    #[test]
    fn matching_swap_keeps_bijection() {
        let mut m = Matching::identity(4);
        m.swap(VertexId(0), VertexId(3));
        assert!(m.is_consistent());
        assert_eq!(m.label_at(VertexId(0)), LabelId(3));
        assert_eq!(m.vertex_of(LabelId(0)), VertexId(3));
        assert!(Matching::from_label_at(vec![LabelId(0), LabelId(0)]).is_err());
    }

    #[test]
    fn perfect_init_has_zero_distance() {
        let g = random_graph(30, 1);
        let mut rng = stream_rng(1, INSTANCE_STREAM);
        let (m, h) = init_world(&g, InitMode::Perfect, &mut rng);
        assert!(m.is_consistent());
        assert_eq!(distance(&g, &m, &h), 0.0);
    }

    #[test]
    fn swapped_pair_distance() {
        let g = graph(&[(0.0, 0.0), (3.0, 4.0)]);
        let m = Matching::identity(2);
        let h = Hypothesis::new(vec![
            GraphPos::Vertex(VertexId(1)),
            GraphPos::Vertex(VertexId(0)),
        ]);
        assert_eq!(distance(&g, &m, &h), 10.0);
    }

    #[test]
    fn midpoint_distance() {
        let g = graph(&[(0.0, 0.0), (2.0, 0.0)]);
        let m = Matching::identity(2);
        let mid = GraphPos::on_edge(&g, VertexId(0), VertexId(1), 1.0).unwrap();
        let h = Hypothesis::new(vec![mid, GraphPos::Vertex(VertexId(1))]);
        assert_eq!(distance(&g, &m, &h), 1.0);
    }

    #[test]
    fn graph_pos_normalizes_and_validates() {
        let g = graph(&[(0.0, 0.0), (2.0, 0.0)]);
        let (a, b) = (VertexId(0), VertexId(1));
        assert_eq!(
            GraphPos::on_edge(&g, a, b, 0.0).unwrap(),
            GraphPos::Vertex(a)
        );
        assert_eq!(
            GraphPos::on_edge(&g, a, b, 2.0).unwrap(),
            GraphPos::Vertex(b)
        );
        assert_eq!(
            GraphPos::on_edge(&g, a, b, 5.0).unwrap(),
            GraphPos::Vertex(b)
        );
        assert!(matches!(
            GraphPos::on_edge(&g, a, b, 0.5).unwrap(),
            GraphPos::Edge { offset, .. } if offset == 0.5
        ));
        let g3 = graph(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert_eq!(
            GraphPos::on_edge(&g3, VertexId(0), VertexId(2), 0.5),
            Err(Error::NoSuchEdge(0, 2))
        );
    }

    #[test]
    fn eligible_pairs_match_brute_force() {
        for seed in 0..5 {
            let g = random_graph(150, seed);
            let pts = g.points();
            let mut brute = Vec::new();
            for u in 0..pts.len() {
                for v in u + 1..pts.len() {
                    if pts[u].dist(pts[v]) < 1.0 {
                        brute.push((VertexId(u), VertexId(v)));
                    }
                }
            }
            assert_eq!(eligible_pairs(pts, 1.0), brute);
        }
    }

    #[test]
    fn far_points_never_swap() {
        let g = graph(&[(0.0, 0.0), (2.0, 0.0)]);
        let m = Matching::identity(2);
        let h = Hypothesis::from_matching(&m);
        for kind in [
            EvolverKind::Random,
            EvolverKind::GreedyMax,
            EvolverKind::Evader,
        ] {
            let cfg = EvolverConfig {
                kind,
                ..Default::default()
            };
            let mut w = World::new(&g, m.clone(), h.clone(), cfg, 0.0, 0).unwrap();
            assert!(w.evolver_step().is_empty());
            assert_eq!(w.idle_ticks(), 1);
        }
    }

    #[test]
    fn close_points_always_swap() {
        let g = graph(&[(0.0, 0.0), (0.5, 0.0)]);
        let m = Matching::identity(2);
        let h = Hypothesis::from_matching(&m);
        for kind in [
            EvolverKind::Random,
            EvolverKind::GreedyMax,
            EvolverKind::Evader,
        ] {
            let cfg = EvolverConfig {
                kind,
                ..Default::default()
            };
            let mut w = World::new(&g, m.clone(), h.clone(), cfg, 0.0, 0).unwrap();
            assert_eq!(w.evolver_step(), vec![(VertexId(0), VertexId(1))]);
            assert_eq!(w.distance(), 1.0);
            assert_eq!(w.evolver_step().len(), 1);
            assert_eq!(w.distance(), 0.0);
        }
    }

    #[test]
    fn greedy_picks_largest_gain() {
        // pair (0,1) is 0.9 apart, pair (2,3) only 0.2: greedy takes the former
        let g = graph(&[(0.0, 0.0), (0.9, 0.0), (5.0, 5.0), (5.2, 5.0)]);
        let m = Matching::identity(4);
        let h = Hypothesis::from_matching(&m);
        let cfg = EvolverConfig {
            kind: EvolverKind::GreedyMax,
            ..Default::default()
        };
        let mut w = World::new(&g, m, h, cfg, 0.0, 0).unwrap();
        assert_eq!(w.evolver_step(), vec![(VertexId(0), VertexId(1))]);
        // undoing that swap now loses 1.8, so greedy moves to the other pair
        assert_eq!(w.evolver_step(), vec![(VertexId(2), VertexId(3))]);
    }

    #[test]
    fn evader_moves_tracked_label_away() {
        // label 0 sits at the origin; its neighbors are at 0.3 and 0.8
        let g = graph(&[(0.0, 0.0), (0.3, 0.0), (-0.8, 0.0), (9.0, 9.0), (9.5, 9.0)]);
        let m = Matching::identity(5);
        let h = Hypothesis::from_matching(&m);
        let cfg = EvolverConfig {
            kind: EvolverKind::Evader,
            ..Default::default()
        };
        let mut w = World::new(&g, m, h, cfg, 0.0, 0).unwrap();
        w.set_tracked(Some(LabelId(0)));
        assert_eq!(w.evolver_step(), vec![(VertexId(0), VertexId(2))]);
        assert_eq!(w.matching().vertex_of(LabelId(0)), VertexId(2));
    }

    #[test]
    fn swaps_per_step_and_bounded_change() {
        let g = random_graph(80, 3);
        let m = Matching::identity(80);
        let h = Hypothesis::from_matching(&m);
        let cfg = EvolverConfig {
            kind: EvolverKind::Random,
            swap_radius: 1.0,
            swaps_per_step: 3,
        };
        let mut w = World::new(&g, m, h, cfg, 0.0, 9).unwrap();
        for _ in 0..500 {
            let before = w.distance();
            let swaps = w.evolver_step();
            assert_eq!(swaps.len(), 3);
            assert!((w.distance() - before).abs() < 2.0 * 3.0);
            assert!(w.matching().is_consistent());
        }
        assert_relative_eq!(
            w.distance(),
            distance(&g, w.matching(), w.hypothesis()),
            epsilon = 1e-9
        );
    }

    #[test]
    fn ticks_fire_once_per_unit() {
        let g = random_graph(40, 2);
        let m = Matching::identity(40);
        let h = Hypothesis::from_matching(&m);
        let mut w = World::new(&g, m, h, EvolverConfig::default(), 0.0, 4).unwrap();
        w.set_recording(true);
        w.advance_to(0.5).unwrap();
        assert_eq!(w.swaps(), 0);
        w.advance_to(1.0).unwrap();
        assert_eq!(w.swaps(), 1);
        w.advance_to(3.7).unwrap();
        assert_eq!(w.swaps(), 3);
        assert_eq!(w.clock().next_tick(), 4);
        let times: Vec<f64> = w.drain_ticks().map(|s| s.time).collect();
        assert_eq!(times, vec![1.0, 2.0, 3.0]);
        assert!(w.advance_to(1.0).is_err());
    }

    #[test]
    fn oracle_answers_and_charges() {
        let g = graph(&[(0.0, 0.0), (1.0, 0.0), (5.0, 5.0)]);
        let m = Matching::identity(3);
        let mut h = Hypothesis::from_matching(&m);
        h.pos[1] = GraphPos::Vertex(VertexId(0));
        let mut w = World::new(&g, m, h, EvolverConfig::off(), 2.5, 0).unwrap();
        assert_eq!(w.oracle_query(LabelId(1)).unwrap(), Some(0));
        assert_eq!(w.now(), 2.5);
        assert_eq!(w.oracle_query(LabelId(1)).unwrap(), Some(0));
        assert_eq!(w.now(), 2.5);
        assert_eq!(w.oracle_query(LabelId(0)).unwrap(), None);
        assert_eq!(w.now(), 5.0);
    }

    #[test]
    fn oracle_rejects_mid_edge() {
        let g = graph(&[(0.0, 0.0), (1.0, 0.0)]);
        let m = Matching::identity(2);
        let mut h = Hypothesis::from_matching(&m);
        h.pos[0] = GraphPos::on_edge(&g, VertexId(0), VertexId(1), 0.5).unwrap();
        let mut w = World::new(&g, m, h, EvolverConfig::off(), 1.0, 0).unwrap();
        assert_eq!(w.oracle_query(LabelId(0)), Err(Error::QueryOffVertex(0)));
    }

    #[test]
    fn traversal_moves_continuously() {
        let g = graph(&[(0.0, 0.0), (4.0, 0.0)]);
        let m = Matching::identity(2);
        let mut h = Hypothesis::from_matching(&m);
        h.pos[1] = GraphPos::Vertex(VertexId(0));
        let mut w = World::new(&g, m, h, EvolverConfig::off(), 0.0, 0).unwrap();
        w.set_recording(true);
        // speed 1.6: ticks at t=1,2 see the label at x=1.6 and x=3.2
        let len = w.traverse(LabelId(1), VertexId(1), 1.6).unwrap();
        assert_eq!(len, 4.0);
        assert_eq!(w.now(), 2.5);
        let d: Vec<f64> = w.drain_ticks().map(|s| s.distance).collect();
        assert_eq!(d.len(), 2);
        assert_relative_eq!(d[0], 4.0 - 1.6, epsilon = 1e-12);
        assert_relative_eq!(d[1], 4.0 - 3.2, epsilon = 1e-12);
        assert_eq!(w.distance(), 0.0);
        assert_eq!(w.displaced_count(), 0);
    }

    #[test]
    fn config_validation() {
        let g = graph(&[(0.0, 0.0), (1.0, 0.0)]);
        let m = Matching::identity(2);
        let h = Hypothesis::from_matching(&m);
        let bad = EvolverConfig {
            swap_radius: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            World::new(&g, m.clone(), h.clone(), bad, 0.0, 0),
            Err(Error::Config {
                field: "swap_radius",
                ..
            })
        ));
        let bad = EvolverConfig {
            swaps_per_step: 0,
            ..Default::default()
        };
        assert!(World::new(&g, m.clone(), h.clone(), bad, 0.0, 0).is_err());
        assert!(matches!(
            World::new(&g, m, h, EvolverConfig::default(), -1.0, 0),
            Err(Error::Config {
                field: "switch_overhead",
                ..
            })
        ));
    }
}
