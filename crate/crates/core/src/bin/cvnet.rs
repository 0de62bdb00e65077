use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use cvnet::hebb_sync::{bind, write_event_trace, BindParams, FiringMode, SpatialNetwork, SyncParams};
use cvnet::neuron::BandedNeuron;
use cvnet::runner::{run_experiment, sweep, write_outputs, RunConfig};
use cvnet::NodeId;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "cvnet", version, about = "Concept-value network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seed of the reconstruction experiment.
    Run {
        #[command(flatten)]
        exp: ExpArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run seeds `seed..seed+N` and print the aggregate report.
    Sweep {
        #[command(flatten)]
        exp: ExpArgs,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drive a banded neuron with a ramped input and print its trace.
    NeuronDemo {
        #[arg(long, default_value_t = 40)]
        steps: usize,
        #[arg(long, default_value_t = 0.9)]
        decay: f64,
    },
    /// Simulate a small spatial network and print firing events and groups.
    SyncDemo {
        #[arg(long, default_value_t = 1000)]
        steps: u64,
        #[arg(long)]
        stochastic: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ExpArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    patterns: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    noise_links: Option<usize>,
    #[arg(long)]
    max_presented: Option<usize>,
    #[arg(long)]
    noise_prob: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    link_threshold: Option<f64>,
    #[arg(long)]
    min_support: Option<u64>,
    #[arg(long)]
    overlap_min: Option<usize>,
}

impl ExpArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)
                .with_context(|| format!("reading config {}", path.display()))?;
        }
        let e = &mut c.experiment;
        if let Some(v) = self.seed {
            e.rng_seed = v;
        }
        if let Some(v) = self.patterns {
            e.num_patterns = v;
        }
        if let Some(v) = self.instances {
            e.instances_per_pattern = v;
        }
        if let Some(v) = self.noise_links {
            e.num_noise_links = v;
        }
        if let Some(v) = self.max_presented {
            e.max_presented = v;
        }
        if let Some(v) = self.noise_prob {
            e.noise_prob = v;
        }
        if let Some(v) = self.iterations {
            e.iterations = v;
        }
        if self.link_threshold.is_some() {
            c.link.threshold = self.link_threshold;
        }
        if let Some(v) = self.min_support {
            c.grid.min_support = v;
        }
        if let Some(v) = self.overlap_min {
            c.overlap_min = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { exp, out } => {
            let config = exp.resolve()?;
            let artifacts = run_experiment(&config)?;
            write_outputs(&out, &config, &artifacts)
                .with_context(|| format!("writing outputs to {}", out.display()))?;
            println!("{}", serde_json::to_string_pretty(&artifacts.record)?);
        }
        Command::Sweep { exp, seeds, out } => {
            let config = exp.resolve()?;
            let start = config.experiment.rng_seed;
            let list: Vec<u64> = (start..start + seeds).collect();
            let report = sweep(&config, &list)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("report.json"), report.to_json())?;
            }
            println!("{}", report.to_json());
        }
        Command::NeuronDemo { steps, decay } => neuron_demo(steps, decay)?,
        Command::SyncDemo {
            steps,
            stochastic,
            seed,
        } => sync_demo(steps, stochastic, seed)?,
    }
    Ok(())
}

fn neuron_demo(steps: usize, decay: f64) -> Result<()> {
    let links = (0..8u32).map(|i| (NodeId(i), f64::from(8 - i))).collect();
    let mut neuron = BandedNeuron::default().with_out_links(links)?;
    let mut out = io::stdout().lock();
    writeln!(out, "step,input,threshold,activity,band,strength,targets,reinforcement")?;
    for t in 0..steps {
        // ramps up to 3 and back down
        let phase = t as f64 / steps.max(1) as f64;
        let input = 3.0 * (1.0 - (2.0 * phase - 1.0).abs());
        let threshold = neuron.threshold();
        let signal = neuron.step(&[input], decay)?;
        let (band, strength, targets, reinf) = match &signal {
            Some(s) => (
                s.band.to_string(),
                s.strength.to_string(),
                s.targets.iter().map(ToString::to_string).collect::<Vec<_>>().join(";"),
                s.reinforcement.to_string(),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        writeln!(
            out,
            "{t},{input:.4},{threshold:.4},{:.4},{band},{strength},{targets},{reinf}",
            neuron.activity()
        )?;
    }
    eprintln!("{}", neuron.snapshot_json());
    Ok(())
}

fn sync_demo(steps: u64, stochastic: bool, seed: u64) -> Result<()> {
    // source 0 links to 1 and 2 at length 1 and to 3 at length 10
    let mut net = SpatialNetwork::new(4);
    net.connect(NodeId(0), NodeId(1), 1.0)?;
    net.connect(NodeId(0), NodeId(2), 1.0)?;
    net.connect(NodeId(0), NodeId(3), 10.0)?;
    let stimulus: BTreeMap<NodeId, f64> = (0..4u32).map(|i| (NodeId(i), 1.0)).collect();
    let params = SyncParams {
        mode: if stochastic {
            FiringMode::Stochastic
        } else {
            FiringMode::Deterministic
        },
        ..SyncParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let events = net.simulate(&stimulus, steps, &params, &mut rng)?;
    write_event_trace(io::stdout().lock(), &events)?;
    let groups = bind(&events, &BindParams::default());
    eprintln!("groups: {}", groups.to_json());
    eprintln!("network: {}", serde_json::to_string(&net.snapshot())?);
    Ok(())
}
