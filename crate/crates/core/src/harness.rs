//! Training and evaluation protocol: seeded training runs with milestone
//! evaluations, results tables and cross-task matrices.
//!
//! Every dialogue draws from its own stream keyed by `(seed, index)`, so a
//! run is reproducible whatever the thread count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::DomainCode;
use crate::env::{make_task_for, Environment, EpisodeResult};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::policy::{Algorithm, AnyPolicy, Checkpoint, Observation, PolicyConfig, Transition};
use crate::seeding::{purpose_stream, Purpose, Rng};

/// One greedy dialogue.
pub fn run_dialogue(env: &Environment, policy: &AnyPolicy, rng: &mut Rng) -> EpisodeResult {
    let mut ep = env.reset(rng);
    while !ep.done {
        let features = ep.belief.flatten();
        let obs = Observation {
            features: &features,
            mask: &ep.mask,
            belief: Some(&ep.belief),
        };
        let a = policy.greedy(&obs);
        env.step(&mut ep, a, rng).expect("greedy action is legal");
    }
    ep.into_result(env.task.gamma)
}

/// One exploring dialogue, fed to the learner turn by turn.
pub fn train_dialogue(
    env: &Environment,
    policy: &mut AnyPolicy,
    env_rng: &mut Rng,
    learner_rng: &mut Rng,
) -> EpisodeResult {
    let mut ep = env.reset(env_rng);
    let mut features = ep.belief.flatten();
    while !ep.done {
        let mask = ep.mask.clone();
        let obs = Observation {
            features: &features,
            mask: &mask,
            belief: Some(&ep.belief),
        };
        let a = policy.explore(&obs, learner_rng);
        let step = env
            .step(&mut ep, a, env_rng)
            .expect("explored action is legal");
        let next = step.belief.flatten();
        policy.observe(
            &Transition {
                features: &features,
                mask: &mask,
                action: a,
                reward: step.reward,
                next_features: &next,
                next_mask: &step.mask,
                done: step.done,
            },
            learner_rng,
        );
        features = next;
    }
    policy.end_episode();
    ep.into_result(env.task.gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub success_rate: f64,
    pub mean_reward: f64,
    pub mean_turns: f64,
}

/// Greedy test run over `n` dialogues drawn from the test streams of `seed`.
pub fn evaluate(
    env: &Environment,
    policy: &AnyPolicy,
    seed: u64,
    n: usize,
    mode: ExecMode,
) -> EvalStats {
    let results = map_indexed(n, mode, |i| {
        let mut rng = purpose_stream(seed, Purpose::Test, i as u64);
        let r = run_dialogue(env, policy, &mut rng);
        (r.success, r.final_reward, r.turns)
    });
    let n = n.max(1) as f64;
    EvalStats {
        success_rate: results.iter().filter(|r| r.0).count() as f64 / n,
        mean_reward: results.iter().map(|r| r.1).sum::<f64>() / n,
        mean_turns: results.iter().map(|r| r.2 as f64).sum::<f64>() / n,
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub task_id: String,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub train_dialogues: usize,
    pub eval_points: Vec<usize>,
    pub test_dialogues: usize,
    pub out_dir: Option<PathBuf>,
    pub exec: ExecMode,
    pub policy: PolicyConfig,
}

impl RunSpec {
    pub fn new(task_id: &str, algorithm: Algorithm) -> Self {
        RunSpec {
            task_id: task_id.to_string(),
            algorithm,
            seeds: (0..10).collect(),
            train_dialogues: 10_000,
            eval_points: vec![1000, 4000, 10_000],
            test_dialogues: 500,
            out_dir: None,
            exec: ExecMode::default(),
            policy: PolicyConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds".into()));
        }
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.eval_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "eval points must be strictly ascending".into(),
            ));
        }
        if self
            .eval_points
            .last()
            .is_some_and(|&e| e > self.train_dialogues)
        {
            return Err(Error::Config(
                "eval point beyond the training budget".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    /// One entry per eval point.
    pub evals: Vec<EvalStats>,
    #[serde(skip)]
    pub policy: Option<AnyPolicy>,
}

/// Trains one seed, pausing for a greedy test run at every eval point.
/// Evaluation only reads the model, so training is unaffected by it.
pub fn train_seed(env: &Environment, spec: &RunSpec, seed: u64) -> SeedRun {
    let mut learner_rng = purpose_stream(seed, Purpose::Learner, 0);
    let mut policy = AnyPolicy::new(
        spec.algorithm,
        env.ontology.clone(),
        env.belief_dim(),
        env.n_actions(),
        &spec.policy,
        &mut learner_rng,
    );
    let mut evals = Vec::with_capacity(spec.eval_points.len());
    let mut done = 0;
    for &point in &spec.eval_points {
        // The handcrafted policy has nothing to learn.
        if spec.algorithm.is_learner() {
            for i in done..point {
                let mut env_rng = purpose_stream(seed, Purpose::Train, i as u64);
                train_dialogue(env, &mut policy, &mut env_rng, &mut learner_rng);
            }
        }
        done = point;
        evals.push(evaluate(env, &policy, seed, spec.test_dialogues, spec.exec));
    }
    if spec.algorithm.is_learner() {
        for i in done..spec.train_dialogues {
            let mut env_rng = purpose_stream(seed, Purpose::Train, i as u64);
            train_dialogue(env, &mut policy, &mut env_rng, &mut learner_rng);
        }
    }
    SeedRun {
        seed,
        evals,
        policy: Some(policy),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingReport {
    pub task: String,
    pub algorithm: Algorithm,
    pub eval_points: Vec<usize>,
    pub runs: Vec<SeedRun>,
}

impl TrainingReport {
    /// Across-seed `(mean, std)` of success and reward at eval point `k`.
    pub fn aggregate(&self, k: usize) -> ((f64, f64), (f64, f64)) {
        let s: Vec<f64> = self.runs.iter().map(|r| r.evals[k].success_rate).collect();
        let r: Vec<f64> = self.runs.iter().map(|r| r.evals[k].mean_reward).collect();
        (mean_std(&s), mean_std(&r))
    }

    /// Learning curve: one row per eval point, one column per seed.
    pub fn curve_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["dialogue_index".to_string()];
        header.extend(self.runs.iter().map(|r| format!("success_s{}", r.seed)));
        header.extend(self.runs.iter().map(|r| format!("reward_s{}", r.seed)));
        header
            .extend(["success_mean", "success_std", "reward_mean", "reward_std"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for (k, point) in self.eval_points.iter().enumerate() {
            let mut row = vec![point.to_string()];
            row.extend(
                self.runs
                    .iter()
                    .map(|r| r.evals[k].success_rate.to_string()),
            );
            row.extend(self.runs.iter().map(|r| r.evals[k].mean_reward.to_string()));
            let ((sm, ss), (rm, rs)) = self.aggregate(k);
            row.extend([sm, ss, rm, rs].map(|x| x.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
        finish_csv(w)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Schema(format!("csv: {e}"))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Schema(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn curve_path(out: &Path, task: &str, algorithm: Algorithm) -> PathBuf {
    out.join("curves").join(format!("{task}_{algorithm}.csv"))
}

pub fn checkpoint_path(out: &Path, task: &str, algorithm: Algorithm, seed: u64) -> PathBuf {
    out.join("checkpoints")
        .join(task)
        .join(algorithm.name())
        .join(format!("seed{seed}.json"))
}

fn save_outputs(env: &Environment, report: &mut TrainingReport, out: &Path) -> Result<()> {
    write_file(
        &curve_path(out, &report.task, report.algorithm),
        &report.curve_csv()?,
    )?;
    for run in &mut report.runs {
        if let Some(policy) = run.policy.take() {
            let ck = Checkpoint::new(
                policy,
                &report.task,
                &env.ontology,
                env.belief_dim(),
                env.n_actions(),
            );
            ck.save(&checkpoint_path(
                out,
                &report.task,
                report.algorithm,
                run.seed,
            ))?;
            run.policy = Some(ck.policy);
        }
    }
    Ok(())
}

/// Trains every seed of `spec` and writes the curve and final checkpoints
/// when an output directory is set.
pub fn run_training(env: &Environment, spec: &RunSpec) -> Result<TrainingReport> {
    spec.validate()?;
    let runs = map_indexed(spec.seeds.len(), spec.exec, |i| {
        train_seed(env, spec, spec.seeds[i])
    });
    let mut report = TrainingReport {
        task: spec.task_id.clone(),
        algorithm: spec.algorithm,
        eval_points: spec.eval_points.clone(),
        runs,
    };
    if let Some(out) = &spec.out_dir {
        save_outputs(env, &mut report, out)?;
    }
    Ok(report)
}

/// Loads the checkpoint of every seed, or builds a fresh handcrafted policy.
pub fn load_policy(
    env: &Environment,
    out: &Path,
    task: &str,
    algorithm: Algorithm,
    seed: u64,
) -> Result<AnyPolicy> {
    if !algorithm.is_learner() {
        let mut rng = purpose_stream(seed, Purpose::Learner, 0);
        return Ok(AnyPolicy::new(
            algorithm,
            env.ontology.clone(),
            env.belief_dim(),
            env.n_actions(),
            &PolicyConfig::default(),
            &mut rng,
        ));
    }
    let path = checkpoint_path(out, task, algorithm, seed);
    Ok(Checkpoint::load(
        &path,
        env.ontology.clone(),
        env.belief_dim(),
        env.n_actions(),
    )?
    .policy)
}

/// Greedy test runs of saved policies; writes `evals/<task>_<algo>.csv`.
pub fn run_eval(
    factory: &dyn EnvFactory,
    task: &str,
    algorithm: Algorithm,
    seeds: &[u64],
    test_dialogues: usize,
    out: &Path,
    exec: ExecMode,
) -> Result<Vec<(u64, EvalStats)>> {
    let env = factory.environment(task)?;
    let policies: Vec<AnyPolicy> = seeds
        .iter()
        .map(|&s| load_policy(&env, out, task, algorithm, s))
        .collect::<Result<_>>()?;
    let stats = map_indexed(seeds.len(), exec, |i| {
        (
            seeds[i],
            evaluate(&env, &policies[i], seeds[i], test_dialogues, exec),
        )
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "success", "reward", "turns"])
        .map_err(csv_err)?;
    for (seed, s) in &stats {
        w.write_record([
            seed.to_string(),
            s.success_rate.to_string(),
            s.mean_reward.to_string(),
            s.mean_turns.to_string(),
        ])
        .map_err(csv_err)?;
    }
    write_file(
        &out.join("evals").join(format!("{task}_{algorithm}.csv")),
        &finish_csv(w)?,
    )?;
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub task: String,
    pub algorithm: Algorithm,
    pub eval_point: usize,
    pub success_mean: f64,
    pub success_std: f64,
    pub reward_mean: f64,
    pub reward_std: f64,
}

/// One row of the results table: a task or a mean over tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    /// Per algorithm, `(success, reward)`.
    pub cells: BTreeMap<String, (f64, f64)>,
    /// Learner with the highest reward.
    pub best: Option<Algorithm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub tasks: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub train_dialogues: usize,
    pub eval_points: Vec<usize>,
    pub test_dialogues: usize,
    /// Evaluate saved checkpoints instead of training.
    pub eval_only: bool,
    pub out_dir: PathBuf,
    pub exec: ExecMode,
    pub policy: PolicyConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    /// Every (task, algorithm, eval point).
    pub rows: Vec<ResultRow>,
    /// Table at the last eval point.
    pub table: Vec<TableRow>,
    pub algorithms: Vec<Algorithm>,
}

fn best_learner(
    cells: &BTreeMap<String, (f64, f64)>,
    algorithms: &[Algorithm],
) -> Option<Algorithm> {
    let mut best: Option<(Algorithm, f64)> = None;
    for &a in algorithms.iter().filter(|a| a.is_learner()) {
        if let Some(&(_, r)) = cells.get(a.name()) {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((a, r));
            }
        }
    }
    best.map(|(a, _)| a)
}

fn domain_of(task: &str) -> &str {
    task.rsplit('-').next().unwrap_or(task)
}

/// Task rows followed by a mean row per domain present and an `ALL` row.
pub fn build_table(
    rows: &[ResultRow],
    algorithms: &[Algorithm],
    tasks: &[String],
) -> Vec<TableRow> {
    let eval_point = rows.iter().map(|r| r.eval_point).max().unwrap_or(0);
    let mut table: Vec<TableRow> = Vec::new();
    for task in tasks {
        let cells: BTreeMap<String, (f64, f64)> = rows
            .iter()
            .filter(|r| &r.task == task && r.eval_point == eval_point)
            .map(|r| {
                (
                    r.algorithm.name().to_string(),
                    (r.success_mean, r.reward_mean),
                )
            })
            .collect();
        table.push(TableRow {
            label: task.clone(),
            best: best_learner(&cells, algorithms),
            cells,
        });
    }
    let mean_row = |label: String, members: Vec<&TableRow>| {
        let mut cells = BTreeMap::new();
        for a in algorithms {
            let xs: Vec<(f64, f64)> = members
                .iter()
                .filter_map(|r| r.cells.get(a.name()).copied())
                .collect();
            if !xs.is_empty() {
                let n = xs.len() as f64;
                cells.insert(
                    a.name().to_string(),
                    (
                        xs.iter().map(|x| x.0).sum::<f64>() / n,
                        xs.iter().map(|x| x.1).sum::<f64>() / n,
                    ),
                );
            }
        }
        TableRow {
            label,
            best: best_learner(&cells, algorithms),
            cells,
        }
    };
    let n_tasks = table.len();
    let mut means = Vec::new();
    for code in DomainCode::ALL {
        let members: Vec<&TableRow> = table[..n_tasks]
            .iter()
            .filter(|r| domain_of(&r.label) == code.as_str())
            .collect();
        if !members.is_empty() {
            means.push(mean_row(format!("Mean-{}", code.as_str()), members));
        }
    }
    means.push(mean_row(
        "ALL".to_string(),
        table[..n_tasks].iter().collect(),
    ));
    table.extend(means);
    table
}

impl BenchmarkReport {
    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "task",
            "algorithm",
            "eval_point",
            "success_mean",
            "success_std",
            "reward_mean",
            "reward_std",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.task.clone(),
                r.algorithm.to_string(),
                r.eval_point.to_string(),
                r.success_mean.to_string(),
                r.success_std.to_string(),
                r.reward_mean.to_string(),
                r.reward_std.to_string(),
            ])
            .map_err(csv_err)?;
        }
        finish_csv(w)
    }

    /// Wide layout: per algorithm a success and a reward column, plus the
    /// best learner by reward.
    pub fn table_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["task".to_string()];
        for a in &self.algorithms {
            header.push(format!("{a}_success"));
            header.push(format!("{a}_reward"));
        }
        header.push("best_reward".to_string());
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.table {
            let mut rec = vec![row.label.clone()];
            for a in &self.algorithms {
                match row.cells.get(a.name()) {
                    Some((s, r)) => {
                        rec.push(s.to_string());
                        rec.push(r.to_string());
                    }
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            rec.push(row.best.map(|a| a.to_string()).unwrap_or_default());
            w.write_record(&rec).map_err(csv_err)?;
        }
        finish_csv(w)
    }
}

/// Builds environments for a benchmark; lets configs override tasks.
pub trait EnvFactory: Sync {
    fn environment(&self, task_id: &str) -> Result<Environment>;
}

/// The stock task catalog.
pub struct StandardTasks;

impl EnvFactory for StandardTasks {
    fn environment(&self, task_id: &str) -> Result<Environment> {
        Environment::from_id(task_id)
    }
}

impl EnvFactory for crate::config::Settings {
    fn environment(&self, task_id: &str) -> Result<Environment> {
        crate::config::Settings::environment(self, task_id)
    }
}

/// Runs every (task, algorithm, seed) cell and writes `results.csv`,
/// `table.csv` and `summary.json` to the output directory.
pub fn run_benchmark(factory: &dyn EnvFactory, spec: &BenchmarkSpec) -> Result<BenchmarkReport> {
    let envs: Vec<Environment> = spec
        .tasks
        .iter()
        .map(|t| factory.environment(t))
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, Algorithm)> = (0..envs.len())
        .flat_map(|t| spec.algorithms.iter().map(move |&a| (t, a)))
        .collect();

    let mut reports: Vec<TrainingReport> = Vec::with_capacity(cells.len());
    if spec.eval_only {
        // Load first so a missing checkpoint fails before any work.
        let mut loaded = Vec::new();
        for &(t, a) in &cells {
            for &seed in &spec.seeds {
                loaded.push(load_policy(
                    &envs[t],
                    &spec.out_dir,
                    &spec.tasks[t],
                    a,
                    seed,
                )?);
            }
        }
        let per = spec.seeds.len();
        let evals = map_indexed(loaded.len(), spec.exec, |k| {
            let (t, _) = cells[k / per];
            evaluate(
                &envs[t],
                &loaded[k],
                spec.seeds[k % per],
                spec.test_dialogues,
                spec.exec,
            )
        });
        for (c, &(t, a)) in cells.iter().enumerate() {
            let point = loaded[c * per].dialogues() as usize;
            reports.push(TrainingReport {
                task: spec.tasks[t].clone(),
                algorithm: a,
                eval_points: vec![point],
                runs: (0..per)
                    .map(|s| SeedRun {
                        seed: spec.seeds[s],
                        evals: vec![evals[c * per + s]],
                        policy: None,
                    })
                    .collect(),
            });
        }
    } else {
        for &(t, a) in &cells {
            let run = RunSpec {
                task_id: spec.tasks[t].clone(),
                algorithm: a,
                seeds: spec.seeds.clone(),
                train_dialogues: spec.train_dialogues,
                eval_points: spec.eval_points.clone(),
                test_dialogues: spec.test_dialogues,
                out_dir: Some(spec.out_dir.clone()),
                exec: spec.exec,
                policy: spec.policy.clone(),
            };
            reports.push(run_training(&envs[t], &run)?);
        }
    }

    let mut rows = Vec::new();
    for rep in &reports {
        for (k, &point) in rep.eval_points.iter().enumerate() {
            let ((sm, ss), (rm, rs)) = rep.aggregate(k);
            rows.push(ResultRow {
                task: rep.task.clone(),
                algorithm: rep.algorithm,
                eval_point: point,
                success_mean: sm,
                success_std: ss,
                reward_mean: rm,
                reward_std: rs,
            });
        }
    }
    let table = build_table(&last_point_rows(&rows), &spec.algorithms, &spec.tasks);
    let report = BenchmarkReport {
        rows,
        table,
        algorithms: spec.algorithms.clone(),
    };
    write_file(&spec.out_dir.join("results.csv"), &report.rows_csv()?)?;
    write_file(&spec.out_dir.join("table.csv"), &report.table_csv()?)?;
    write_file(
        &spec.out_dir.join("summary.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

/// Keeps, per (task, algorithm), the row with the largest eval point.
fn last_point_rows(rows: &[ResultRow]) -> Vec<ResultRow> {
    let mut last: BTreeMap<(String, Algorithm), &ResultRow> = BTreeMap::new();
    for r in rows {
        let key = (r.task.clone(), r.algorithm);
        if last
            .get(&key)
            .is_none_or(|old| r.eval_point >= old.eval_point)
        {
            last.insert(key, r);
        }
    }
    // build_table keys on the maximum point, so flatten to a common one.
    let mut out: Vec<ResultRow> = last.into_values().cloned().collect();
    let max = out.iter().map(|r| r.eval_point).max().unwrap_or(0);
    out.iter_mut().for_each(|r| r.eval_point = max);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSpec {
    pub train_envs: Vec<usize>,
    pub eval_envs: Vec<usize>,
    pub domains: Vec<DomainCode>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub test_dialogues: usize,
    pub out_dir: PathBuf,
    pub exec: ExecMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCell {
    pub domain: DomainCode,
    pub algorithm: Algorithm,
    pub train_env: usize,
    pub eval_env: usize,
    pub success_mean: f64,
    pub reward_mean: f64,
}

/// Evaluates each trained policy on the other environments of its domain.
/// The diagonal is omitted. Writes `cross.csv` and `cross.json`.
pub fn run_cross_task(factory: &dyn EnvFactory, spec: &CrossSpec) -> Result<Vec<CrossCell>> {
    let mut jobs = Vec::new();
    for &domain in &spec.domains {
        for &algorithm in &spec.algorithms {
            for &train_env in &spec.train_envs {
                let train_id = make_task_for(train_env, domain)?.id();
                let train = factory.environment(&train_id)?;
                let policies: Vec<AnyPolicy> = spec
                    .seeds
                    .iter()
                    .map(|&s| load_policy(&train, &spec.out_dir, &train_id, algorithm, s))
                    .collect::<Result<_>>()?;
                for &eval_env in spec.eval_envs.iter().filter(|&&e| e != train_env) {
                    let env = factory.environment(&make_task_for(eval_env, domain)?.id())?;
                    jobs.push((
                        domain,
                        algorithm,
                        train_env,
                        eval_env,
                        env,
                        policies.clone(),
                    ));
                }
            }
        }
    }
    let cells = map_indexed(jobs.len(), spec.exec, |j| {
        let (domain, algorithm, train_env, eval_env, env, policies) = &jobs[j];
        let stats: Vec<EvalStats> = policies
            .iter()
            .zip(&spec.seeds)
            .map(|(p, &s)| evaluate(env, p, s, spec.test_dialogues, spec.exec))
            .collect();
        let n = stats.len().max(1) as f64;
        CrossCell {
            domain: *domain,
            algorithm: *algorithm,
            train_env: *train_env,
            eval_env: *eval_env,
            success_mean: stats.iter().map(|s| s.success_rate).sum::<f64>() / n,
            reward_mean: stats.iter().map(|s| s.mean_reward).sum::<f64>() / n,
        }
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "domain",
        "algorithm",
        "train_env",
        "eval_env",
        "success_mean",
        "reward_mean",
    ])
    .map_err(csv_err)?;
    for c in &cells {
        w.write_record([
            c.domain.as_str().to_string(),
            c.algorithm.to_string(),
            format!("env{}", c.train_env),
            format!("env{}", c.eval_env),
            c.success_mean.to_string(),
            c.reward_mean.to_string(),
        ])
        .map_err(csv_err)?;
    }
    write_file(&spec.out_dir.join("cross.csv"), &finish_csv(w)?)?;
    write_file(
        &spec.out_dir.join("cross.json"),
        &serde_json::to_string_pretty(&cells)?,
    )?;
    Ok(cells)
}
