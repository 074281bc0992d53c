use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coopkitchen::assets;
use coopkitchen::eval::{
    build_start_pool, default_population, validation_reward, EvalConfig, EvalError, StartStatePool,
    DEFAULT_EPISODES_PER_MEMBER, DEFAULT_STRIDE,
};
use coopkitchen::grid::{Layout, DEFAULT_HORIZON};
use coopkitchen::harness::{bundled_suite, load_suite, run_suite, Scenario};
use coopkitchen::policy::{PolicySpec, Population};
use coopkitchen::rollout::{record_rollout, RolloutError, Trajectory};
use coopkitchen_cli::{agent, server, session::Session};

#[derive(Parser)]
#[command(
    name = "coopkitchen",
    version,
    about = "Robustness test bench for cooperative kitchen agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Base seed; falls back to COOPKITCHEN_SEED, then 0.
    #[arg(long, env = "COOPKITCHEN_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Score an agent on a scenario suite.
    RunTests {
        /// Directory of .scenario files; the bundled suite when omitted.
        #[arg(long)]
        suite: Option<PathBuf>,
        #[arg(long)]
        agent: String,
        #[command(flatten)]
        seed: SeedArg,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        jobs: Option<usize>,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validation reward against a partner population.
    Validate {
        #[arg(long)]
        agent: String,
        #[arg(long)]
        layout: String,
        /// Partner spec, repeatable; `default` is the standard 20-member
        /// population for the layout.
        #[arg(long, default_value = "default")]
        population: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_EPISODES_PER_MEMBER)]
        episodes: u32,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: u32,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Start pool file; enables diverse starts.
        #[arg(long)]
        starts: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play one episode from the initial state and save it.
    Record {
        #[arg(long)]
        layout: String,
        /// Two specs separated by a comma, slot 0 first.
        #[arg(long, value_delimiter = ',', required = true)]
        agents: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: u32,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a trajectory file, optionally re-stepping it.
    Replay {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        verify: bool,
    },
    /// Extract a diverse-starts pool from trajectories.
    Pool {
        #[arg(long, required = true, num_args = 1..)]
        traj: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_STRIDE)]
        stride: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Host a live session over a websocket.
    Serve {
        #[arg(long)]
        layout: String,
        #[arg(long)]
        agent: String,
        #[arg(long, default_value_t = 0)]
        human_slot: usize,
        /// 0 picks a free port.
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value_t = 5.0)]
        tick_rate: f64,
        #[command(flatten)]
        seed: SeedArg,
        /// Where captured scenarios are written.
        #[arg(long, default_value = "captured")]
        capture_dir: PathBuf,
    },
    /// Run a built-in policy behind the subprocess protocol on stdin/stdout.
    Agent {
        #[arg(long, default_value = "tom:max_capability")]
        agent: String,
    },
}

/// Reasons to exit non-zero.
enum Failure {
    Config(String),
    Policy(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Policy(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Policy(m) => m,
        }
    }
}

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn threads(jobs: Option<usize>) -> usize {
    jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn spec(text: &str) -> Result<PolicySpec, Failure> {
    PolicySpec::parse(text).map_err(config)
}

fn layout(name: &str) -> Result<Layout, Failure> {
    assets::resolve_layout(name).map_err(config)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn run_tests(
    suite: Option<PathBuf>,
    agent: &str,
    seed: u64,
    jobs: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let tested = spec(agent)?;
    let suite: Vec<Scenario> = match suite {
        Some(dir) => load_suite(&dir).map_err(config)?,
        None => bundled_suite(),
    };
    if suite.is_empty() {
        return Err(Failure::Config("suite has no scenarios".into()));
    }
    for sc in &suite {
        for w in sc.warnings() {
            log::warn!("{}: {w}", sc.id);
        }
        if !tested.is_external() {
            tested
                .check(&sc.layout)
                .map_err(|e| Failure::Config(format!("{}: {e}", sc.id)))?;
        }
    }
    let report = run_suite(&suite, &tested, seed, threads(jobs));
    print!("{}", report.table());
    if let Some(path) = out {
        write(&path, &report.to_json())?;
    }
    if report.error_rollouts > 0 {
        let first = report
            .scenarios
            .iter()
            .flat_map(|s| {
                s.variants
                    .iter()
                    .flat_map(|v| v.rollouts.iter())
                    .map(move |r| (s, r))
            })
            .find_map(|(s, r)| r.error.as_ref().map(|e| format!("{}: {e}", s.id)))
            .unwrap_or_default();
        return Err(Failure::Policy(format!(
            "{} rollouts ended in a policy error; first: {first}",
            report.error_rollouts
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn validate(
    agent: &str,
    layout_name: &str,
    population: &[String],
    episodes: u32,
    horizon: u32,
    gamma: f64,
    starts: Option<PathBuf>,
    seed: u64,
    jobs: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let tested = spec(agent)?;
    let layout = layout(layout_name)?;
    let mut members = Vec::new();
    for p in population {
        if p == "default" {
            let d = default_population(&layout).map_err(config)?;
            members.extend(d.members().iter().cloned());
        } else {
            members.push(spec(p)?);
        }
    }
    let population = Population::uniform(members).map_err(config)?;
    let pool = match &starts {
        Some(path) => {
            let (pool, pool_layout) = StartStatePool::load(path).map_err(config)?;
            if pool_layout != layout {
                return Err(Failure::Config(format!(
                    "start pool {} is for layout {}",
                    path.display(),
                    pool_layout.name()
                )));
            }
            Some(pool)
        }
        None => None,
    };
    let cfg = EvalConfig {
        episodes_per_member: episodes,
        horizon,
        gamma,
        seed,
        diverse_starts: pool.is_some(),
    };
    let report = validation_reward(
        &tested,
        &population,
        &layout,
        &cfg,
        pool.as_ref(),
        threads(jobs),
    )
    .map_err(|e| match e {
        EvalError::Config(_) => config(e),
        EvalError::Policy { .. } => Failure::Policy(e.to_string()),
    })?;
    print!("{}", report.table());
    if let Some(path) = out {
        write(&path, &report.to_json())?;
    }
    Ok(())
}

fn record(
    layout_name: &str,
    agents: &[String],
    horizon: u32,
    seed: u64,
    out: &Path,
) -> Result<(), Failure> {
    let [a, b] = agents else {
        return Err(Failure::Config("--agents takes exactly two specs".into()));
    };
    let layout = layout(layout_name)?;
    let a = spec(a)?;
    let b = spec(b)?;
    let traj = record_rollout(&layout, [&a, &b], horizon, seed).map_err(|e| match e {
        RolloutError::Build { .. } => config(e),
        RolloutError::Failed(_) => Failure::Policy(e.to_string()),
    })?;
    write(out, &traj.to_json())?;
    println!(
        "recorded {} ticks on {}, reward {}",
        traj.len(),
        layout.name(),
        traj.total_reward()
    );
    Ok(())
}

fn replay(path: &Path, verify: bool) -> Result<(), Failure> {
    let traj = Trajectory::load(path).map_err(config)?;
    let layout = traj.layout().map_err(config)?;
    println!(
        "{}: {} ticks on {}, reward {}, source {}",
        path.display(),
        traj.len(),
        traj.layout_name,
        traj.total_reward(),
        traj.meta.source
    );
    if verify {
        traj.verify(&layout).map_err(config)?;
        println!("verified");
    }
    Ok(())
}

fn pool(paths: &[PathBuf], stride: usize, out: &Path) -> Result<(), Failure> {
    let trajs = paths
        .iter()
        .map(|p| Trajectory::load(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    let layout = trajs[0].layout().map_err(config)?;
    let pool = build_start_pool(&trajs, &layout, stride).map_err(config)?;
    pool.save(&layout, out).map_err(config)?;
    println!(
        "{} start states from {} trajectories",
        pool.len(),
        trajs.len()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn serve(
    layout_name: &str,
    agent: &str,
    human_slot: usize,
    port: u16,
    tick_rate: f64,
    seed: u64,
    capture_dir: PathBuf,
) -> Result<(), Failure> {
    if human_slot > 1 {
        return Err(Failure::Config("human slot must be 0 or 1".into()));
    }
    if !(tick_rate.is_finite() && tick_rate > 0.0) {
        return Err(Failure::Config("tick rate must be positive".into()));
    }
    let layout = layout(layout_name)?;
    let agent = spec(agent)?;
    let session =
        Session::new(layout, agent, human_slot, seed, capture_dir, tick_rate).map_err(config)?;
    let listener = server::bind(port).map_err(config)?;
    let addr = listener.local_addr().map_err(config)?;
    println!("listening on ws://{addr}");
    use std::io::Write as _;
    let _ = std::io::stdout().flush();
    server::serve(listener, session, || false).map_err(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::RunTests {
            suite,
            agent,
            seed,
            jobs,
            out,
        } => run_tests(suite, &agent, seed.seed, jobs, out),
        Command::Validate {
            agent,
            layout,
            population,
            episodes,
            horizon,
            gamma,
            starts,
            seed,
            jobs,
            out,
        } => validate(
            &agent,
            &layout,
            &population,
            episodes,
            horizon,
            gamma,
            starts,
            seed.seed,
            jobs,
            out,
        ),
        Command::Record {
            layout,
            agents,
            horizon,
            seed,
            out,
        } => record(&layout, &agents, horizon, seed.seed, &out),
        Command::Replay { traj, verify } => replay(&traj, verify),
        Command::Pool { traj, stride, out } => pool(&traj, stride, &out),
        Command::Serve {
            layout,
            agent,
            human_slot,
            port,
            tick_rate,
            seed,
            capture_dir,
        } => serve(
            &layout,
            &agent,
            human_slot,
            port,
            tick_rate,
            seed.seed,
            capture_dir,
        ),
        Command::Agent { agent: a } => spec(&a).and_then(|s| {
            let stdin = std::io::stdin().lock();
            let stdout = std::io::stdout().lock();
            agent::run(&s, stdin, stdout).map_err(|e| Failure::Policy(e.to_string()))
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
