use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thetatrack::harness::{
    load_points, run_experiment, summarize, sweep, uniform_square, write_run_outputs,
    write_sweep_csv, ExperimentConfig, Horizon, PointSource, SweepParam, DEFAULT_TAIL_FRACTION,
};
use thetatrack::rng::{stream_rng, INSTANCE_STREAM};
use thetatrack::spanner::{all_pairs, sample_pairs, write_points, GraphJson};
use thetatrack::{ConeSystem, Error, EvolverConfig, EvolverKind, InitMode, Result, ThetaGraph};

#[derive(Parser)]
#[command(
    name = "thetatrack",
    version,
    about = "Theta-graph spanners and label tracking under an evolving matching"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate uniform points in a √n × √n square.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the theta-graph of a point file.
    Build {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure the spanning ratio of a built graph against its bound.
    Certify {
        #[arg(long)]
        graph: PathBuf,
        /// Number of random pairs, or `all`.
        #[arg(long, default_value = "all")]
        pairs: PairCount,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run replications of one configuration.
    Run {
        #[command(flatten)]
        opts: RunOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one configuration per value of a swept parameter.
    Sweep {
        #[arg(long)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[command(flatten)]
        opts: RunOpts,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy)]
enum PairCount {
    All,
    Sample(usize),
}

impl std::str::FromStr for PairCount {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "all" {
            return Ok(PairCount::All);
        }
        s.parse()
            .map(PairCount::Sample)
            .map_err(|_| format!("expected a count or `all`, got `{s}`"))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EvolverArg {
    None,
    Random,
    Greedy,
    Evader,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Perfect,
    Scrambled,
}

#[derive(Args)]
struct RunOpts {
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// Tracker speed factor; 0 runs the evolver alone.
    #[arg(long, default_value_t = 4.0)]
    c: f64,
    #[arg(long, value_enum, default_value_t = EvolverArg::Random)]
    evolver: EvolverArg,
    #[arg(long, default_value_t = 1.0)]
    swap_radius: f64,
    #[arg(long, default_value_t = 1)]
    swaps_per_step: usize,
    /// Time charged when the oracle switches to a different label.
    #[arg(long, default_value_t = 1.0)]
    overhead: f64,
    /// `auto` or a time.
    #[arg(long, default_value = "auto")]
    horizon: String,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = InitArg::Perfect)]
    init: InitArg,
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TAIL_FRACTION)]
    tail: f64,
}

impl RunOpts {
    fn config(&self) -> Result<ExperimentConfig> {
        let horizon = match self.horizon.as_str() {
            "auto" => Horizon::Auto,
            t => Horizon::Time(t.parse().map_err(|_| {
                Error::Parse(format!("horizon `{t}` is neither `auto` nor a number"))
            })?),
        };
        let kind = match self.evolver {
            EvolverArg::None => EvolverKind::Off,
            EvolverArg::Random => EvolverKind::Random,
            EvolverArg::Greedy => EvolverKind::GreedyMax,
            EvolverArg::Evader => EvolverKind::Evader,
        };
        let cfg = ExperimentConfig {
            n: self.n,
            k: self.k,
            c: self.c,
            evolver: EvolverConfig {
                kind,
                swap_radius: self.swap_radius,
                swaps_per_step: self.swaps_per_step,
            },
            switch_overhead: self.overhead,
            horizon,
            replications: self.reps,
            seed: self.seed,
            init: match self.init {
                InitArg::Perfect => InitMode::Perfect,
                InitArg::Scrambled => InitMode::Scrambled,
            },
            points: self
                .points
                .clone()
                .map_or(PointSource::UniformSquare, PointSource::File),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 1 } else { 2 })
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Gen { n, seed, out } => {
            let mut rng = stream_rng(seed, INSTANCE_STREAM);
            let pts = uniform_square(n, EvolverConfig::default().swap_radius, &mut rng)?;
            write_points(BufWriter::new(File::create(&out)?), &pts)?;
            println!("wrote {n} points to {}", out.display());
        }
        Cmd::Build { points, k, out } => {
            let g = ThetaGraph::build(load_points(&points)?, ConeSystem::for_spanner(k)?)?;
            let json = serde_json::to_string(&g.to_json()).map_err(|e| Error::Io(e.to_string()))?;
            fs::write(&out, json)?;
            println!(
                "{} vertices, {} edges, k={k} -> {}",
                g.len(),
                g.edges().len(),
                out.display()
            );
        }
        Cmd::Certify { graph, pairs, seed } => {
            let text = fs::read_to_string(&graph)?;
            let json: GraphJson =
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let g = ThetaGraph::from_json(&json)?;
            let pairs = match pairs {
                PairCount::All => all_pairs(g.len()),
                PairCount::Sample(m) => {
                    sample_pairs(g.len(), m, &mut stream_rng(seed, INSTANCE_STREAM))
                }
            };
            let bound = g.cones().spanning_ratio()?;
            let ratio = g.certify_spanning_ratio(&pairs)?;
            let ok = ratio <= bound;
            println!(
                "{} pairs: max ratio {ratio:.6}, bound {bound:.6}: {}",
                pairs.len(),
                if ok { "PASS" } else { "FAIL" }
            );
            if !ok {
                return Ok(ExitCode::from(2));
            }
        }
        Cmd::Run { opts, out } => {
            let cfg = opts.config()?;
            let trajs = run_experiment(&cfg)?;
            let summary = summarize(&trajs, opts.tail)?;
            write_run_outputs(&out, &cfg, &trajs, &summary)?;
            println!("fingerprint {}", summary.fingerprint);
            println!("horizon     {:.1}", cfg.horizon_time());
            println!(
                "tail D      {:.4} ± {:.4} over {} replications",
                summary.mean_tail_distance, summary.std_error, summary.replications
            );
            println!("cap hits    {}", summary.cap_hits);
        }
        Cmd::Sweep {
            param,
            values,
            opts,
            out,
        } => {
            let base = opts.config()?;
            let rows = sweep(&base, param, &values, opts.tail)?;
            fs::create_dir_all(&out)?;
            write_sweep_csv(
                BufWriter::new(File::create(out.join("sweep.csv"))?),
                param,
                &rows,
            )?;
            println!(
                "{:>10} {:>6} {:>14} {:>10} {:>10} {:>5}",
                param.name(),
                "n",
                "tail D",
                "SE",
                "D/n",
                "caps"
            );
            for r in &rows {
                println!(
                    "{:>10} {:>6} {:>14.4} {:>10.4} {:>10.5} {:>5}",
                    r.value,
                    r.n,
                    r.mean_tail_distance,
                    r.std_error,
                    r.distance_per_label,
                    r.cap_hits
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
