use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dialbench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn list_tasks_prints_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["list-tasks"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 19);
    assert!(text.contains("env5-SFR,SFR,0.15,true,unfriendly"));
}

#[test]
fn train_then_eval_agree() {
    let dir = tempfile::tempdir().unwrap();
    let common = [
        "--task",
        "env3-CR",
        "--algo",
        "gp",
        "--seeds",
        "0,2",
        "--test-dialogues",
        "20",
    ];
    let mut train = vec!["train", "--dialogues", "15", "--out", "out"];
    train.extend(common);
    let o = run(&train, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curve = stdout(&o);
    assert!(curve.starts_with("dialogue_index,success_s0,success_s2,"));
    assert_eq!(curve.lines().count(), 2);
    assert!(dir
        .path()
        .join("out/checkpoints/env3-CR/gp/seed2.json")
        .exists());

    let mut eval = vec!["eval", "--out", "out"];
    eval.extend(common);
    let o = run(&eval, dir.path());
    assert!(o.status.success());
    // Same test set, same model: eval reproduces the final curve point.
    let evals: Vec<Vec<String>> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    let last: Vec<&str> = curve.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(evals[0][1], last[1]);
    assert_eq!(evals[1][1], last[2]);
    assert_eq!(evals[0][2], last[3]);
}

#[test]
fn benchmark_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "benchmark",
            "--tasks",
            "env1-CR,env6-SFR",
            "--algo",
            "handcrafted,enac",
            "--seeds",
            "2",
            "--dialogues",
            "10",
            "--test-dialogues",
            "10",
            "--out",
            out,
        ]
    };
    assert!(run(&args("a"), dir.path()).status.success());
    assert!(run(&args("b"), dir.path()).status.success());
    for f in ["results.csv", "table.csv", "curves/env6-SFR_enac.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[harness]\nseeds = []\n").unwrap();
    for args in [
        vec!["train", "--task", "env9-CR", "--algo", "gp"],
        vec!["train", "--task", "env1-XX", "--algo", "gp"],
        vec!["train", "--task", "env1-CR", "--algo", "ppo"],
        vec!["train", "--algo", "gp"],
        vec!["train", "--task", "env1-CR"],
        vec![
            "train", "--task", "env1-CR", "--algo", "gp", "--seeds", "3..1",
        ],
        vec![
            "train",
            "--task",
            "env1-CR",
            "--algo",
            "gp",
            "--dialogues",
            "5",
            "--eval-at",
            "10",
        ],
        vec![
            "train", "--task", "env1-CR", "--algo", "gp", "--config", "bad.toml",
        ],
    ] {
        let o = run(&args, dir.path());
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn missing_artifacts_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec![
            "eval", "--task", "env1-CR", "--algo", "dqn", "--out", "nowhere",
        ],
        vec![
            "train",
            "--task",
            "env1-CR",
            "--algo",
            "gp",
            "--config",
            "absent.toml",
        ],
        vec![
            "benchmark",
            "--tasks",
            "env1-CR",
            "--algo",
            "a2c",
            "--eval-only",
            "--out",
            "nowhere",
        ],
        vec![
            "cross",
            "--domains",
            "CR",
            "--algo",
            "gp",
            "--out",
            "nowhere",
        ],
    ] {
        let o = run(&args, dir.path());
        assert_eq!(
            o.status.code(),
            Some(3),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn config_file_sets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "[task]\nid = \"env2-LAP\"\n[policy]\nalgorithm = \"handcrafted\"\n\
         [harness]\nseeds = [5]\ndialogues = 30\neval_at = [10, 30]\ntest_dialogues = 10\nout = \"res\"\n",
    )
    .unwrap();
    let o = run(&["train", "--config", "run.toml"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("dialogue_index,success_s5,reward_s5"));
    assert!(dir
        .path()
        .join("res/curves/env2-LAP_handcrafted.csv")
        .exists());
}
