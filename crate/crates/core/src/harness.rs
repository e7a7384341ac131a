//! Experiment driver: instance generation, replications, trajectory files,
//! and steady-state summaries.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{ConeSystem, Point};
use crate::rng::{stream_rng, INSTANCE_STREAM};
use crate::spanner::{read_points, ThetaGraph};
use crate::tracker::{self, Sample, TrackerConfig, Trajectory};
use crate::world::{eligible_pairs, init_world, EvolverConfig, InitMode, World};

pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;
pub const CSV_HEADER: &str = "time,distance,found,cap_hits";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    /// `20 · n ln n / z` with `z = (c − 3)/(c − 1)` when `c > 3`, else `50 · n ln n`.
    Auto,
    Time(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointSource {
    /// `n` points uniform in a square of side `√n`.
    UniformSquare,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    /// Speed factor; `0` disables the tracker.
    pub c: f64,
    pub evolver: EvolverConfig,
    pub switch_overhead: f64,
    pub horizon: Horizon,
    pub replications: usize,
    pub seed: u64,
    pub init: InitMode,
    pub points: PointSource,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 200,
            k: 8,
            c: 4.0,
            evolver: EvolverConfig::default(),
            switch_overhead: 1.0,
            horizon: Horizon::Auto,
            replications: 1,
            seed: 0,
            init: InitMode::Perfect,
            points: PointSource::UniformSquare,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config("n", "must be at least 2"));
        }
        if self.k < 7 {
            return Err(Error::config("k", "must be at least 7"));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::config("c", "must be non-negative and finite"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if !(self.switch_overhead >= 0.0 && self.switch_overhead.is_finite()) {
            return Err(Error::config(
                "switch_overhead",
                "must be non-negative and finite",
            ));
        }
        if let Horizon::Time(t) = self.horizon {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::config("horizon", "must be non-negative and finite"));
            }
        }
        self.evolver.validate()
    }

    pub fn tracker_enabled(&self) -> bool {
        self.c > 0.0
    }

    pub fn horizon_time(&self) -> f64 {
        match self.horizon {
            Horizon::Time(t) => t,
            Horizon::Auto => auto_horizon(self.n, self.c),
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn replication_seed(&self, rep: usize) -> u64 {
        self.seed.wrapping_add(rep as u64)
    }
}

pub fn auto_horizon(n: usize, c: f64) -> f64 {
    let nln = n as f64 * (n as f64).ln();
    if c > 3.0 {
        let z = (c - 3.0) / (c - 1.0);
        20.0 * nln / z
    } else {
        50.0 * nln
    }
}

/// `n` uniform points in a `√n × √n` square, resampled until some pair is
/// closer than `swap_radius` and all points are distinct.
pub fn uniform_square<R: Rng + ?Sized>(
    n: usize,
    swap_radius: f64,
    rng: &mut R,
) -> Result<Vec<Point>> {
    let side = (n as f64).sqrt();
    for _ in 0..1000 {
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side))
            .collect();
        let mut sorted: Vec<(f64, f64)> = pts.iter().map(|p| (p.x, p.y)).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let distinct = sorted.windows(2).all(|w| w[0] != w[1]);
        if distinct && !eligible_pairs(&pts, swap_radius).is_empty() {
            return Ok(pts);
        }
    }
    Err(Error::config(
        "n",
        format!("could not place {n} points with a pair closer than {swap_radius}"),
    ))
}

pub fn load_points(path: &Path) -> Result<Vec<Point>> {
    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_points(BufReader::new(f))
}

/// One replication: instance, graph, world, then the tracker (or only the
/// evolver when `c == 0`) up to the horizon.
pub fn run_replication(
    cfg: &ExperimentConfig,
    rep: usize,
    fixed_points: Option<&[Point]>,
) -> Result<Trajectory> {
    let seed = cfg.replication_seed(rep);
    let mut rng = stream_rng(seed, INSTANCE_STREAM);
    let points = match fixed_points {
        Some(p) => p.to_vec(),
        None => uniform_square(cfg.n, cfg.evolver.swap_radius, &mut rng)?,
    };
    let g = ThetaGraph::build(points, ConeSystem::for_spanner(cfg.k)?)?;
    let (m, h) = init_world(&g, cfg.init, &mut rng);
    let mut world = World::new(&g, m, h, cfg.evolver, cfg.switch_overhead, seed)?;
    let horizon = cfg.horizon_time();
    let mut traj = if cfg.tracker_enabled() {
        tracker::run(&mut world, &TrackerConfig::new(cfg.c, seed), horizon)?
    } else {
        tracker::run_without_tracker(&mut world, horizon)?
    };
    if !world.matching().is_consistent() {
        return Err(Error::Invariant("matching lost bijectivity".into()));
    }
    traj.fingerprint = cfg.fingerprint();
    traj.seed = seed;
    Ok(traj)
}

/// All replications, run in parallel and returned in replication order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    let fixed = match &cfg.points {
        PointSource::UniformSquare => None,
        PointSource::File(path) => {
            let pts = load_points(path)?;
            if pts.len() != cfg.n {
                return Err(Error::config(
                    "n",
                    format!("point file has {} points, config says {}", pts.len(), cfg.n),
                ));
            }
            Some(pts)
        }
    };
    (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(cfg, rep, fixed.as_deref()))
        .collect()
}

/// Time-weighted mean of `D` over the last `tail_fraction` of the run,
/// treating `D` as constant between samples.
pub fn tail_mean(samples: &[Sample], tail_fraction: f64) -> Result<f64> {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.time.total_cmp(&b.time));
    let last = s.last().ok_or(Error::NoData)?;
    let end = last.time;
    let start = end * (1.0 - tail_fraction);
    if end <= start {
        return Ok(last.distance);
    }
    let mut acc = 0.0;
    for w in s.windows(2) {
        let a = w[0].time.max(start);
        let b = w[1].time;
        if b > a {
            acc += w[0].distance * (b - a);
        }
    }
    Ok(acc / (end - start))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub fingerprint: String,
    pub replications: usize,
    pub tail_fraction: f64,
    pub mean_tail_distance: f64,
    pub std_error: f64,
    pub cap_hits: u64,
    pub per_replication: Vec<f64>,
}

/// Mean and standard error (across replications) of the tail-window mean.
pub fn summarize(trajectories: &[Trajectory], tail_fraction: f64) -> Result<Summary> {
    let first = trajectories.first().ok_or(Error::NoData)?;
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::config("tail_fraction", "must lie in (0, 1]"));
    }
    if let Some(t) = trajectories
        .iter()
        .find(|t| t.fingerprint != first.fingerprint)
    {
        return Err(Error::FingerprintMismatch(
            first.fingerprint.clone(),
            t.fingerprint.clone(),
        ));
    }
    let per_replication = trajectories
        .iter()
        .map(|t| tail_mean(&t.samples, tail_fraction))
        .collect::<Result<Vec<_>>>()?;
    let cap_hits = trajectories
        .iter()
        .map(|t| t.samples.iter().map(|s| s.cap_hits).max().unwrap_or(0))
        .sum();
    let (mean, se) = mean_and_std_error(&per_replication);
    Ok(Summary {
        fingerprint: first.fingerprint.clone(),
        replications: trajectories.len(),
        tail_fraction,
        mean_tail_distance: mean,
        std_error: se,
        cap_hits,
        per_replication,
    })
}

pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    N,
    C,
    K,
    Overhead,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(SweepParam::N),
            "c" => Ok(SweepParam::C),
            "k" => Ok(SweepParam::K),
            "overhead" => Ok(SweepParam::Overhead),
            other => Err(Error::config(
                "param",
                format!("unknown sweep parameter `{other}`"),
            )),
        }
    }
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::N => "n",
            SweepParam::C => "c",
            SweepParam::K => "k",
            SweepParam::Overhead => "overhead",
        }
    }

    pub fn apply(&self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        let as_count = |field| {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::config(
                    field,
                    format!("{value} is not a whole number"),
                ))
            }
        };
        match self {
            SweepParam::N => cfg.n = as_count("n")?,
            SweepParam::K => cfg.k = as_count("k")?,
            SweepParam::C => cfg.c = value,
            SweepParam::Overhead => cfg.switch_overhead = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub n: usize,
    pub mean_tail_distance: f64,
    pub std_error: f64,
    /// `mean_tail_distance / n`.
    pub distance_per_label: f64,
    pub cap_hits: u64,
}

pub fn sweep(
    base: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
    tail_fraction: f64,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::config("values", "need at least one value"));
    }
    values
        .iter()
        .map(|&value| {
            let cfg = param.apply(base, value)?;
            let s = summarize(&run_experiment(&cfg)?, tail_fraction)?;
            Ok(SweepRow {
                value,
                n: cfg.n,
                mean_tail_distance: s.mean_tail_distance,
                std_error: s.std_error,
                distance_per_label: s.mean_tail_distance / cfg.n as f64,
                cap_hits: s.cap_hits,
            })
        })
        .collect()
}

/// Largest over smallest `distance_per_label` across rows.
pub fn ratio_spread(rows: &[SweepRow]) -> f64 {
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
        (lo.min(r.distance_per_label), hi.max(r.distance_per_label))
    });
    hi / lo
}

pub fn write_trajectory_csv(w: impl Write, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "# fingerprint={} seed={}", traj.fingerprint, traj.seed)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(CSV_HEADER.split(','))
        .map_err(|e| Error::Io(e.to_string()))?;
    for s in &traj.samples {
        csv.serialize((s.time, s.distance, s.found, s.cap_hits))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_trajectory_csv(r: impl BufRead) -> Result<Trajectory> {
    let mut r = r;
    let mut first = String::new();
    r.read_line(&mut first)?;
    let meta = first
        .trim()
        .strip_prefix("# ")
        .ok_or_else(|| Error::Parse("missing `# fingerprint=... seed=...` line".into()))?;
    let mut fingerprint = None;
    let mut seed = None;
    for kv in meta.split_whitespace() {
        match kv.split_once('=') {
            Some(("fingerprint", v)) => fingerprint = Some(v.to_string()),
            Some(("seed", v)) => {
                seed = Some(v.parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?)
            }
            _ => {}
        }
    }
    let mut csv = csv::Reader::from_reader(r);
    let header = csv.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let samples = csv
        .deserialize::<(f64, f64, u64, u64)>()
        .map(|rec| {
            let (time, distance, found, cap_hits) = rec.map_err(|e| Error::Parse(e.to_string()))?;
            Ok(Sample {
                time,
                distance,
                found,
                cap_hits,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        fingerprint: fingerprint.ok_or_else(|| Error::Parse("no fingerprint".into()))?,
        seed: seed.ok_or_else(|| Error::Parse("no seed".into()))?,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub fingerprint: String,
    pub config: ExperimentConfig,
    pub horizon: f64,
    pub summary: Summary,
}

/// Writes `rep_NNN.csv` per replication and `summary.json` into `dir`.
pub fn write_run_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    trajectories: &[Trajectory],
    summary: &Summary,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (i, t) in trajectories.iter().enumerate() {
        let path = dir.join(format!("rep_{i:03}.csv"));
        write_trajectory_csv(File::create(&path)?, t)?;
        written.push(path);
    }
    let report = RunReport {
        fingerprint: cfg.fingerprint(),
        config: cfg.clone(),
        horizon: cfg.horizon_time(),
        summary: summary.clone(),
    };
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(&path, json + "\n")?;
    written.push(path);
    Ok(written)
}

pub fn write_sweep_csv(w: impl Write, param: SweepParam, rows: &[SweepRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        param.name(),
        "n",
        "mean_tail_distance",
        "std_error",
        "distance_per_label",
        "cap_hits",
    ])
    .map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        csv.serialize((
            r.value,
            r.n,
            r.mean_tail_distance,
            r.std_error,
            r.distance_per_label,
            r.cap_hits,
        ))
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(time: f64, distance: f64) -> Sample {
        Sample {
            time,
            distance,
            found: 0,
            cap_hits: 0,
        }
    }

    fn traj(samples: Vec<Sample>) -> Trajectory {
        Trajectory {
            fingerprint: "f".into(),
            seed: 0,
            samples,
        }
    }

    #[test]
    fn constant_trajectory_summary() {
        let t = traj(vec![sample(0.0, 5.0)]);
        let s = summarize(&[t], 0.25).unwrap();
        assert_eq!(s.mean_tail_distance, 5.0);
        assert_eq!(s.std_error, 0.0);
        let t = traj((0..=100).map(|i| sample(i as f64, 5.0)).collect());
        let s = summarize(&[t.clone(), t], 0.25).unwrap();
        assert_eq!(s.mean_tail_distance, 5.0);
        assert_eq!(s.std_error, 0.0);
    }

    #[test]
    fn tail_mean_is_time_weighted() {
        // window [75, 100]: D = 1 on [75, 90), D = 3 on [90, 100)
        let t = vec![
            sample(0.0, 100.0),
            sample(50.0, 1.0),
            sample(90.0, 3.0),
            sample(100.0, 7.0),
        ];
        let m = tail_mean(&t, 0.25).unwrap();
        assert!((m - (15.0 + 30.0) / 25.0).abs() < 1e-12);
        let mut shuffled = t.clone();
        shuffled.reverse();
        assert_eq!(tail_mean(&shuffled, 0.25).unwrap(), m);
    }

    #[test]
    fn summarize_errors() {
        assert_eq!(summarize(&[], 0.25), Err(Error::NoData));
        let a = traj(vec![sample(0.0, 1.0)]);
        let mut b = a.clone();
        b.fingerprint = "g".into();
        assert!(matches!(
            summarize(&[a, b], 0.25),
            Err(Error::FingerprintMismatch(..))
        ));
    }

    #[test]
    fn std_error_matches_hand_value() {
        let (m, se) = mean_and_std_error(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample sd = sqrt(5/3); se = sd / 2
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn auto_horizon_formula() {
        let n = 100.0f64;
        // c = 4 -> z = 1/3
        assert!((auto_horizon(100, 4.0) - 60.0 * n * n.ln()).abs() < 1e-6);
        assert_eq!(auto_horizon(100, 2.0), 50.0 * n * n.ln());
        assert_eq!(auto_horizon(100, 3.0), 50.0 * n * n.ln());
    }

    #[test]
    fn config_validation_names_field() {
        let bad = |f: fn(&mut ExperimentConfig)| {
            let mut c = ExperimentConfig::default();
            f(&mut c);
            match c.validate() {
                Err(Error::Config { field, .. }) => field,
                other => panic!("expected config error, got {other:?}"),
            }
        };
        assert_eq!(bad(|c| c.n = 1), "n");
        assert_eq!(bad(|c| c.k = 6), "k");
        assert_eq!(bad(|c| c.c = -1.0), "c");
        assert_eq!(bad(|c| c.replications = 0), "replications");
        assert_eq!(
            bad(|c| c.switch_overhead = f64::INFINITY),
            "switch_overhead"
        );
        assert_eq!(bad(|c| c.horizon = Horizon::Time(-1.0)), "horizon");
        assert_eq!(bad(|c| c.evolver.swap_radius = 0.0), "swap_radius");
    }

    #[test]
    fn fingerprint_tracks_every_field() {
        let base = ExperimentConfig::default();
        let fp = base.fingerprint();
        assert_eq!(fp.len(), 64);
        assert_eq!(fp, base.clone().fingerprint());
        let mut c = base.clone();
        c.seed = 1;
        assert_ne!(c.fingerprint(), fp);
        let mut c = base.clone();
        c.evolver.swaps_per_step = 2;
        assert_ne!(c.fingerprint(), fp);
    }

    #[test]
    fn uniform_square_has_close_pair() {
        let mut rng = stream_rng(3, INSTANCE_STREAM);
        let pts = uniform_square(10, 1.0, &mut rng).unwrap();
        assert_eq!(pts.len(), 10);
        assert!(!eligible_pairs(&pts, 1.0).is_empty());
        let side = 10f64.sqrt();
        assert!(pts
            .iter()
            .all(|p| (0.0..side).contains(&p.x) && (0.0..side).contains(&p.y)));
    }

    #[test]
    fn sweep_param_parsing() {
        assert_eq!("n".parse::<SweepParam>().unwrap(), SweepParam::N);
        assert!("q".parse::<SweepParam>().is_err());
        let base = ExperimentConfig::default();
        assert!(SweepParam::N.apply(&base, 10.5).is_err());
        assert_eq!(SweepParam::N.apply(&base, 300.0).unwrap().n, 300);
    }
}
