use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ksshift::agent::{greedy_score, Checkpoint};
use ksshift::experiment::{
    self, load_settings, parse_ks_levels, parse_volumes, shift_alarm, ExperimentError, LinePlot, Settings,
};
use ksshift::scenario::{build_experiment_grid, generate_scenario, PerturbMode};
use ksshift::shift::{normalize, phase_ks_distance, PhaseCounts};

#[derive(Parser)]
#[command(
    name = "ksshift",
    version,
    about = "Phase-distribution shift experiments for a Q-learning signal controller"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Key-value config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Comma-separated KS levels.
    #[arg(long, global = true)]
    ks_levels: Option<String>,
    /// Comma-separated volumes or an inclusive `start:end:step` range.
    #[arg(long, global = true)]
    volumes: Option<String>,
    #[arg(long, global = true, value_parser = ["concentrated", "spread"])]
    mode: Option<String>,
    /// Evaluation threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Trained agent to evaluate instead of training a new one.
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    /// dqn, fixed_time or random.
    #[arg(long, global = true)]
    policy: Option<String>,
    /// Write one vehicle event log per run into this directory.
    #[arg(long, global = true)]
    event_logs: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the training scenario and the perturbed scenarios as JSON.
    Generate,
    /// Train an agent and write its checkpoint and learning curve.
    Train,
    /// Evaluate a policy on every KS level and volume.
    Evaluate,
    /// Run experiment 1, 2 or 3.
    Experiment {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        number: u8,
    },
    /// Cumulative difference reached at each KS level.
    KsReport,
    /// Compare observed phase volumes with the training distribution.
    Alarm {
        /// Eight comma-separated phase volumes; without it every hour of the
        /// turn-count file is checked.
        #[arg(long)]
        observed: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

fn settings(c: &Common) -> Result<Settings, ExperimentError> {
    let mut s = load_settings(c.config.as_deref())?;
    if let Some(seed) = c.seed {
        s.set_seed(seed);
    }
    if let Some(d) = &c.out_dir {
        s.out_dir = d.clone();
    }
    if let Some(t) = &c.ks_levels {
        s.ks_levels = Some(parse_ks_levels(t)?);
    }
    if let Some(t) = &c.volumes {
        s.volumes = Some(parse_volumes(t)?);
    }
    if let Some(m) = &c.mode {
        s.mode = m.parse::<PerturbMode>().map_err(ExperimentError::Config)?;
    }
    if let Some(w) = c.workers {
        s.workers = w;
    }
    if let Some(p) = &c.checkpoint {
        s.checkpoint = Some(p.clone());
    }
    if let Some(p) = &c.policy {
        s.policy = p.parse()?;
    }
    if let Some(d) = &c.event_logs {
        s.event_log_dir = Some(d.clone());
    }
    Ok(s)
}

fn parse_counts(text: &str) -> Result<PhaseCounts, ExperimentError> {
    let v = parse_volumes(text)?;
    let arr: [u64; 8] = v
        .try_into()
        .map_err(|v: Vec<u64>| ExperimentError::Config(format!("expected 8 phase volumes, got {}", v.len())))?;
    Ok(PhaseCounts(arr))
}

fn generate(s: &Settings) -> Result<(), ExperimentError> {
    let dir = s.out_dir.join("scenarios");
    fs::create_dir_all(&dir)?;
    let train = experiment::training_scenarios(&s.train_counts, s.duration_s, s.agent.seed, 1)?;
    train[0].save(&dir.join("train.json"))?;
    let p_train = normalize(&s.train_counts)?;
    let levels = s.ks_levels.clone().unwrap_or_else(|| vec![0.0]);
    let volumes = s.volumes.clone().unwrap_or_else(|| vec![s.train_counts.total()]);
    let grid = build_experiment_grid(&p_train, &levels, &volumes, s.mode, s.duration_s, s.seed)?;
    for cell in &grid {
        cell.scenario.save(&dir.join(format!("{}.json", cell.scenario.label)))?;
        let realized = phase_ks_distance(&p_train, &cell.scenario.distribution()?);
        println!(
            "{}\t{} vehicles\tKS {realized:.6}",
            cell.scenario.label,
            cell.scenario.total_vehicles()
        );
    }
    println!("wrote {} scenarios to {}", grid.len() + 1, dir.display());
    Ok(())
}

fn train(s: &Settings) -> Result<(), ExperimentError> {
    let outcome = experiment::train_agent(&s.train_counts, s.duration_s, &s.sim, &s.agent)?;
    fs::create_dir_all(&s.out_dir)?;
    let path = s.out_dir.join("agent.json");
    Checkpoint::new(&outcome.network, &s.agent).save(&path)?;

    let mut w = csv::Writer::from_path(s.out_dir.join("training_curve.csv"))?;
    w.write_record([
        "episode",
        "scenario",
        "steps",
        "total_reward",
        "normalized_throughput",
        "mean_loss",
        "greedy_reward",
        "greedy_throughput",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for e in &outcome.curve {
        w.write_record([
            e.episode.to_string(),
            e.scenario.clone(),
            e.steps.to_string(),
            format!("{:.6}", e.total_reward),
            format!("{:.6}", e.normalized_throughput),
            format!("{:.6}", e.mean_loss),
            opt(e.greedy_reward),
            opt(e.greedy_throughput),
        ])?;
    }
    w.flush()?;
    let mut plot = LinePlot::new("Greedy throughput during training", "episode", "normalized throughput");
    plot.add_series(
        "greedy",
        outcome
            .curve
            .iter()
            .filter_map(|e| e.greedy_throughput.map(|t| (e.episode as f64, t)))
            .collect(),
    );
    fs::write(s.out_dir.join("training_curve.svg"), plot.to_svg())?;

    let check = generate_scenario(&s.train_counts, s.duration_s, s.seed, "check")?;
    let score = greedy_score(&outcome.network, &check, &s.sim, s.seed)?;
    println!(
        "trained {} steps over {} episodes; greedy throughput {:.4}, mean journey {:.1} s; wrote {}",
        outcome.steps,
        outcome.curve.len(),
        score.throughput,
        score.mean_journey_s,
        path.display()
    );
    Ok(())
}

fn evaluate(s: &Settings) -> Result<(), ExperimentError> {
    let files = experiment::evaluate_grid(s)?;
    println!("wrote {}", files.results_csv.display());
    Ok(())
}

fn ks_report(s: &Settings) -> Result<(), ExperimentError> {
    let p = normalize(&s.train_counts)?;
    let levels = s
        .ks_levels
        .clone()
        .unwrap_or_else(|| (0..=15).map(|k| k as f64 * 0.02).collect());
    let rows = experiment::ks_nonlinearity_report(&p, &levels, s.mode, s.seed)?;
    fs::create_dir_all(&s.out_dir)?;
    let path = s.out_dir.join("ks_report.csv");
    experiment::write_nonlinearity_csv(&rows, fs::File::create(&path)?)?;
    let mut plot = LinePlot::new(
        "Cumulative difference by phase KS distance",
        "phase KS distance",
        "cumulative difference",
    );
    plot.add_series(
        format!("{:?}", s.mode).to_lowercase(),
        rows.iter().map(|r| (r.ks_level, r.cumulative_difference)).collect(),
    );
    fs::write(s.out_dir.join("ks_report.svg"), plot.to_svg())?;
    for r in &rows {
        println!("{:.4}\t{:.6}", r.ks_level, r.cumulative_difference);
    }
    Ok(())
}

fn alarm(s: &Settings, observed: Option<&str>, threshold: Option<f64>) -> Result<(), ExperimentError> {
    let threshold = threshold.unwrap_or(s.alarm_threshold);
    let p_ref = normalize(&s.train_counts)?;
    let observations = match observed {
        Some(text) => vec![("observed".to_string(), parse_counts(text)?)],
        None => s.hourly_counts()?.into_iter().map(|h| (h.label, h.counts)).collect(),
    };
    for (label, counts) in observations {
        let p = normalize(&counts)?;
        let status = shift_alarm(&p_ref, &p, threshold)?;
        let status = serde_json::to_value(status).expect("status serializes");
        println!(
            "{label}\t{:.6}\t{}",
            phase_ks_distance(&p_ref, &p),
            status.as_str().unwrap_or_default()
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    let s = settings(&cli.common)?;
    match cli.command {
        Command::Generate => generate(&s),
        Command::Train => train(&s),
        Command::Evaluate => evaluate(&s),
        Command::Experiment { number } => {
            for f in experiment::run_numbered(number, &s)? {
                println!("wrote {}", f.results_csv.display());
            }
            Ok(())
        }
        Command::KsReport => ks_report(&s),
        Command::Alarm { observed, threshold } => alarm(&s, observed.as_deref(), threshold),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
