//! Drives the binary the way an operator would.

use std::path::Path;
use std::process::{Command, Output};

use veronese::betti::BettiDatabase;
use veronese::jobs::queue::Queue;
use veronese::jobs::{pipeline, PlanOptions};
use veronese::rank::RankConfig;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_veronese"))
        .args(args)
        .env_remove("VERONESE_LOG")
        .output()
        .unwrap()
}

fn stdout_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cubic_table_is_printed() {
    let text = stdout_ok(&["betti", "--d", "3", "--b", "0"]);
    assert!(text.contains("1: . 27 105 189 189 105 27 ."), "{text}");
    assert!(text.lines().any(|l| l.starts_with("2:") && l.trim_end().ends_with('1')));
}

#[test]
fn bad_arguments_exit_with_two() {
    let out = run(&["betti", "--d", "3", "--b", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn killed_workers_still_complete_each_task_once() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("queue");
    let db = dir.path().join("db");
    stdout_ok(&["plan", "--d", "4", "--b", "2", "--queue", path(&q)]);
    stdout_ok(&[
        "work", "--queue", path(&q), "--workers", "4", "--faulty", "4", "--fault", "abort:3", "--lease-ms", "300",
    ]);
    let queue = Queue::open(&q).unwrap();
    let man = queue.manifest().unwrap();
    let done = queue.completions().unwrap();
    assert_eq!(done.len(), man.tasks.len());
    assert!(done.values().all(|&c| c == 1), "{done:?}");
    assert!(queue.failures().unwrap().is_empty());

    stdout_ok(&["aggregate", "--queue", path(&q), "--out", path(&db)]);
    let (_, want) = pipeline(2, 2, 4, &PlanOptions::default(), &RankConfig::default()).unwrap();
    assert_eq!(BettiDatabase::load(&db).unwrap(), want);
}

#[test]
fn conjecture_holds_for_quartics() {
    let text = stdout_ok(&["check-conj", "--d", "4", "--all-b"]);
    assert!(text.trim_end().ends_with("all match"), "{text}");
}

#[test]
fn references_up_to_quartics_verify() {
    stdout_ok(&["verify-golden", "--d", "3"]);
    stdout_ok(&["verify-golden", "--d", "4"]);
}
