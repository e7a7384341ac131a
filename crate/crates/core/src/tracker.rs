//! Randomized label tracking with a cone oracle.
//!
//! The tracker repeatedly picks a label uniformly at random and chases it
//! over the theta graph: ask the oracle which cone around the hypothesized
//! position holds the label, walk the out-edge in that cone at speed
//! `c · t_θ`, and repeat until the oracle reports a match. Simulated time is
//! event driven, so evolver ticks interleave exactly with edge traversals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, TRACKER_STREAM};
use crate::world::{GraphPos, LabelId, World};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Speed factor: labels move `c · t_θ` distance units per time unit.
    pub c: f64,
    /// Edge traversals allowed per pursuit; `None` means `10 · n · k`.
    pub max_steps_per_label: Option<usize>,
    pub rng_seed: u64,
}

impl TrackerConfig {
    pub fn new(c: f64, rng_seed: u64) -> Self {
        TrackerConfig {
            c,
            max_steps_per_label: None,
            rng_seed,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::config("c", "must be positive and finite"));
        }
        if let Some(cap) = self.max_steps_per_label {
            if cap < n {
                return Err(Error::config(
                    "max_steps_per_label",
                    format!("must be at least n = {n}"),
                ));
            }
        }
        Ok(())
    }

    fn cap(&self, n: usize, k: usize) -> usize {
        self.max_steps_per_label.unwrap_or(10 * n * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackEventKind {
    Selected,
    EdgeTraversed,
    Found,
    CapHit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackEvent {
    pub time: f64,
    pub label: LabelId,
    pub kind: TrackEventKind,
    pub position: GraphPos,
}

/// Chase `label` until the oracle reports it found or the step cap is hit.
/// The hypothesis of `label` must start on a vertex.
pub fn track_label(
    world: &mut World<'_>,
    label: LabelId,
    cfg: &TrackerConfig,
) -> Result<Vec<TrackEvent>> {
    let g = world.graph();
    cfg.validate(g.len())?;
    let speed = cfg.c * g.cones().spanning_ratio()?;
    let cap = cfg.cap(g.len(), g.cones().k());
    let mut events = Vec::new();
    let mut emit = |world: &World<'_>, kind| {
        events.push(TrackEvent {
            time: world.now(),
            label,
            kind,
            position: world.hypothesis().get(label),
        })
    };

    world.set_tracked(Some(label));
    emit(world, TrackEventKind::Selected);
    let mut steps = 0;
    let outcome = loop {
        let Some(cone) = world.oracle_query(label)? else {
            break TrackEventKind::Found;
        };
        if steps >= cap {
            break TrackEventKind::CapHit;
        }
        let at = world
            .hypothesis()
            .get(label)
            .vertex()
            .ok_or(Error::QueryOffVertex(label.0))?;
        // The true vertex lies in this cone, so the cone is never empty.
        let next = g.route_step(at, cone)?;
        world.traverse(label, next, speed)?;
        steps += 1;
        emit(world, TrackEventKind::EdgeTraversed);
    };
    emit(world, outcome);
    world.set_tracked(None);
    Ok(events)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub distance: f64,
    pub found: u64,
    pub cap_hits: u64,
}

/// Time series of `D(M, H)` for one run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub fingerprint: String,
    pub seed: u64,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    /// Appends a sample; a sample at the same time as the last one replaces it.
    pub fn push(&mut self, s: Sample) {
        match self.samples.last_mut() {
            Some(last) if last.time == s.time => *last = s,
            Some(last) => {
                debug_assert!(s.time > last.time, "samples must be time ordered");
                self.samples.push(s)
            }
            None => self.samples.push(s),
        }
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Distance at the last sample taken at or before `t`.
    pub fn distance_at(&self, t: f64) -> Option<f64> {
        let idx = self.samples.partition_point(|s| s.time <= t);
        idx.checked_sub(1).map(|i| self.samples[i].distance)
    }
}

/// Runs the tracker until the clock reaches `horizon`, sampling `D` at every
/// integer tick and after every pursuit.
pub fn run(world: &mut World<'_>, cfg: &TrackerConfig, horizon: f64) -> Result<Trajectory> {
    run_with(world, cfg, horizon, |_| {})
}

/// Like [`run`], handing every [`TrackEvent`] to `on_event`.
pub fn run_with(
    world: &mut World<'_>,
    cfg: &TrackerConfig,
    horizon: f64,
    mut on_event: impl FnMut(&TrackEvent),
) -> Result<Trajectory> {
    let n = world.graph().len();
    cfg.validate(n)?;
    let mut rng = stream_rng(cfg.rng_seed, TRACKER_STREAM);
    let mut traj = Trajectory::default();
    let (mut found, mut cap_hits) = (0u64, 0u64);
    world.set_recording(true);
    traj.push(Sample {
        time: world.now(),
        distance: world.distance(),
        found,
        cap_hits,
    });

    while world.now() < horizon {
        if world.displaced_count() == 0 {
            // Nothing to chase; wait for the evolver.
            let t = (world.clock().next_tick() as f64).min(horizon);
            world.advance_to(t)?;
        } else {
            let label = LabelId(rng.random_range(0..n));
            for ev in track_label(world, label, cfg)? {
                match ev.kind {
                    TrackEventKind::Found => found += 1,
                    TrackEventKind::CapHit => cap_hits += 1,
                    _ => {}
                }
                on_event(&ev);
            }
        }
        // Counters change only at pursuit boundaries; ticks inside this
        // pursuit precede its completion.
        let (prev_found, prev_caps) = traj.last().map(|s| (s.found, s.cap_hits)).unwrap_or((0, 0));
        for tick in world.drain_ticks() {
            traj.push(Sample {
                time: tick.time,
                distance: tick.distance,
                found: prev_found,
                cap_hits: prev_caps,
            });
        }
        traj.push(Sample {
            time: world.now(),
            distance: world.distance(),
            found,
            cap_hits,
        });
    }
    world.set_recording(false);
    Ok(traj)
}

/// Lets only the evolver act until `horizon`, sampling `D` at every tick.
pub fn run_without_tracker(world: &mut World<'_>, horizon: f64) -> Result<Trajectory> {
    let mut traj = Trajectory::default();
    world.set_recording(true);
    traj.push(Sample {
        time: world.now(),
        distance: world.distance(),
        found: 0,
        cap_hits: 0,
    });
    if horizon > world.now() {
        world.advance_to(horizon)?;
    }
    for tick in world.drain_ticks() {
        traj.push(Sample {
            time: tick.time,
            distance: tick.distance,
            found: 0,
            cap_hits: 0,
        });
    }
    traj.push(Sample {
        time: world.now(),
        distance: world.distance(),
        found: 0,
        cap_hits: 0,
    });
    world.set_recording(false);
    Ok(traj)
}
