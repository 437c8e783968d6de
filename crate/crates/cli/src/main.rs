//! `dialbench`: train, evaluate and benchmark dialogue policies.
//!
//! Exit codes: 0 success, 2 configuration error, 3 missing artifact,
//! 1 anything else.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dialbench::config::Settings;
use dialbench::domain::DomainCode;
use dialbench::env::{all_task_ids, make_task};
use dialbench::harness::{self, BenchmarkSpec, CrossSpec, EnvFactory, RunSpec};
use dialbench::policy::Algorithm;
use dialbench::Error;

#[derive(Parser)]
#[command(
    name = "dialbench",
    version,
    about = "Dialogue policy benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Train one algorithm on one task over several seeds.
    Train(Common),
    /// Evaluate saved checkpoints of one algorithm on one task.
    Eval(Common),
    /// Train (or evaluate) a grid of tasks and algorithms and emit tables.
    Benchmark(Bench),
    /// Evaluate checkpoints trained on env1/3/6 on the other two envs.
    Cross(Cross),
    /// Print the task catalog.
    ListTasks,
}

#[derive(Args, Clone)]
struct Common {
    /// Task id such as env3-SFR.
    #[arg(long)]
    task: Option<String>,
    /// gp, dqn, a2c, enac or handcrafted.
    #[arg(long)]
    algo: Option<String>,
    /// Seed list `0,4,7`, range `0..10`, or a count `10` meaning 0..10.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    dialogues: Option<usize>,
    /// Comma-separated, ascending.
    #[arg(long = "eval-at")]
    eval_at: Option<String>,
    #[arg(long = "test-dialogues")]
    test_dialogues: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run every seed and test dialogue on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct Bench {
    #[command(flatten)]
    common: Common,
    /// Comma-separated task ids, or `all`. Overrides --task.
    #[arg(long)]
    tasks: Option<String>,
    /// Evaluate existing checkpoints instead of training.
    #[arg(long = "eval-only")]
    eval_only: bool,
}

#[derive(Args)]
struct Cross {
    #[command(flatten)]
    common: Common,
    /// Comma-separated domain codes.
    #[arg(long, default_value = "CR,SFR,LAP")]
    domains: String,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn parse_seeds(s: &str) -> dialbench::Result<Vec<u64>> {
    let num = |x: &str| {
        x.trim()
            .parse::<u64>()
            .map_err(|_| usage(format!("bad seed `{x}`")))
    };
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if a >= b {
            return Err(usage(format!("empty seed range `{s}`")));
        }
        return Ok((a..b).collect());
    }
    if s.contains(',') {
        return s
            .split(',')
            .filter(|x| !x.trim().is_empty())
            .map(num)
            .collect();
    }
    Ok((0..num(s)?).collect())
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> dialbench::Result<T>) -> dialbench::Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(f)
        .collect()
}

fn parse_algos(s: &str) -> dialbench::Result<Vec<Algorithm>> {
    if s == "all" {
        return Ok(Algorithm::ALL.to_vec());
    }
    parse_list(s, |x| x.parse())
}

/// Config file first, then command-line flags on top.
fn settings(c: &Common) -> dialbench::Result<Settings> {
    let mut s = match &c.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let h = &mut s.harness;
    if let Some(seeds) = &c.seeds {
        h.seeds = parse_seeds(seeds)?;
    }
    if let Some(n) = c.dialogues {
        h.dialogues = n;
        if c.eval_at.is_none() {
            h.eval_at.retain(|&e| e <= n);
            if h.eval_at.last() != Some(&n) {
                h.eval_at.push(n);
            }
        }
    }
    if let Some(e) = &c.eval_at {
        h.eval_at = parse_list(e, |x| {
            x.parse()
                .map_err(|_| usage(format!("bad eval point `{x}`")))
        })?;
    }
    if let Some(n) = c.test_dialogues {
        h.test_dialogues = n;
    }
    if let Some(out) = &c.out {
        h.out = out.clone();
    }
    if c.sequential {
        h.exec = dialbench::exec::ExecMode::Sequential;
    }
    if let Some(t) = &c.task {
        s.task.id = Some(t.clone());
    }
    if let Some(a) = &c.algo {
        s.policy.algorithm = Some(a.parse()?);
    }
    s.validate().map_err(|e| match e {
        Error::Config(m) => usage(m),
        other => other,
    })?;
    Ok(s)
}

fn task_of(s: &Settings) -> dialbench::Result<String> {
    let id = s
        .task
        .id
        .clone()
        .ok_or_else(|| usage("--task is required"))?;
    make_task(&id)?;
    Ok(id)
}

fn algo_of(s: &Settings) -> dialbench::Result<Algorithm> {
    s.policy
        .algorithm
        .ok_or_else(|| usage("--algo is required"))
}

fn train(c: &Common) -> dialbench::Result<String> {
    let s = settings(c)?;
    let task = task_of(&s)?;
    let env = s.environment(&task)?;
    let spec = RunSpec {
        task_id: task.clone(),
        algorithm: algo_of(&s)?,
        seeds: s.harness.seeds.clone(),
        train_dialogues: s.harness.dialogues,
        eval_points: s.harness.eval_at.clone(),
        test_dialogues: s.harness.test_dialogues,
        out_dir: Some(s.harness.out.clone()),
        exec: s.harness.exec,
        policy: s.policy_config(),
    };
    let report = harness::run_training(&env, &spec)?;
    eprintln!(
        "wrote {}",
        harness::curve_path(&s.harness.out, &task, spec.algorithm).display()
    );
    report.curve_csv()
}

fn eval(c: &Common) -> dialbench::Result<String> {
    let s = settings(c)?;
    let task = task_of(&s)?;
    let algo = algo_of(&s)?;
    let h = &s.harness;
    let stats = harness::run_eval(&s, &task, algo, &h.seeds, h.test_dialogues, &h.out, h.exec)?;
    let mut out = String::from("seed,success,reward,turns\n");
    for (seed, st) in stats {
        writeln!(
            out,
            "{seed},{},{},{}",
            st.success_rate, st.mean_reward, st.mean_turns
        )
        .unwrap();
    }
    Ok(out)
}

fn benchmark(b: &Bench) -> dialbench::Result<String> {
    // --algo may be a list here; it is parsed below.
    let s = settings(&Common {
        algo: None,
        ..b.common.clone()
    })?;
    let tasks = match b.tasks.as_deref().or(s.task.id.as_deref()) {
        None | Some("all") => all_task_ids(),
        Some(list) => parse_list(list, |t| make_task(t).map(|_| t.to_string()))?,
    };
    let algorithms = match &b.common.algo {
        Some(a) => parse_algos(a)?,
        None => s
            .policy
            .algorithm
            .map_or(Algorithm::ALL.to_vec(), |a| vec![a]),
    };
    let h = &s.harness;
    let spec = BenchmarkSpec {
        tasks,
        algorithms,
        seeds: h.seeds.clone(),
        train_dialogues: h.dialogues,
        eval_points: h.eval_at.clone(),
        test_dialogues: h.test_dialogues,
        eval_only: b.eval_only,
        out_dir: h.out.clone(),
        exec: h.exec,
        policy: s.policy_config(),
    };
    let report = harness::run_benchmark(&s, &spec)?;
    eprintln!(
        "wrote results.csv, table.csv, summary.json to {}",
        h.out.display()
    );
    report.table_csv()
}

fn cross(x: &Cross) -> dialbench::Result<String> {
    let mut common = x.common.clone();
    // Cross-task reads checkpoints; no training budget is involved.
    common.dialogues = None;
    common.eval_at = None;
    common.algo = None;
    let s = settings(&common)?;
    let domains = parse_list(&x.domains, |d| d.parse::<DomainCode>())?;
    let algorithms = match &x.common.algo {
        Some(a) => parse_algos(a)?,
        None => Algorithm::ALL.to_vec(),
    };
    let h = &s.harness;
    let spec = CrossSpec {
        train_envs: vec![1, 3, 6],
        eval_envs: vec![1, 3, 6],
        domains,
        algorithms,
        seeds: h.seeds.clone(),
        test_dialogues: h.test_dialogues,
        out_dir: h.out.clone(),
        exec: h.exec,
    };
    let factory: &dyn EnvFactory = &s;
    let cells = harness::run_cross_task(factory, &spec)?;
    let mut out = String::from("domain,algorithm,train_env,eval_env,success_mean,reward_mean\n");
    for c in cells {
        writeln!(
            out,
            "{},{},env{},env{},{},{}",
            c.domain, c.algorithm, c.train_env, c.eval_env, c.success_mean, c.reward_mean
        )
        .unwrap();
    }
    Ok(out)
}

fn list_tasks() -> dialbench::Result<String> {
    let mut out = String::from("task,domain,ser,masks,user\n");
    for id in all_task_ids() {
        let t = make_task(&id)?;
        writeln!(
            out,
            "{id},{},{},{},{}",
            t.domain, t.ser, t.masks_enabled, t.user_profile
        )
        .unwrap();
    }
    Ok(out)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Usage(_)
        | Error::Parse { .. }
        | Error::Schema(_)
        | Error::Dimension { .. } => 2,
        Error::MissingArtifact(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.verb {
        Verb::Train(c) => train(c),
        Verb::Eval(c) => eval(c),
        Verb::Benchmark(b) => benchmark(b),
        Verb::Cross(x) => cross(x),
        Verb::ListTasks => list_tasks(),
    };
    match result {
        Ok(text) => {
            // A closed pipe (e.g. `| head`) is not an error.
            let mut stdout = std::io::stdout().lock();
            match stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
            {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    eprintln!("dialbench: {e}");
                    ExitCode::from(1)
                }
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("dialbench: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_forms() {
        assert_eq!(parse_seeds("3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("2..5").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seeds("7,1").unwrap(), vec![7, 1]);
        assert!(parse_seeds("5..5").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
