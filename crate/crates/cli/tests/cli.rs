use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use light_core::agents::{EmbeddingModel, PhraseKind};
use light_core::episode::{EpisodeFile, EpisodeLog, TurnInput};
use light_core::fixtures::{dataset_dir, foyer_episode, foyer_turns};
use light_core::world::WorldGraph;

fn light() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_light"));
    c.env_remove("LIGHT_DATA_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    light().args(args).output().expect("light runs")
}

fn run_with_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = light()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("light runs");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn data() -> String {
    dataset_dir().display().to_string()
}

fn foyer_world_path() -> String {
    dataset_dir().join("worlds/foyer.json").display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const COMMANDS: [&str; 8] = ["play", "serve", "eval", "train-embed", "stats", "import", "nn", "export-cooccurrence"];

/// Flags listed in the Options block of a `--help` page.
fn help_flags(help: &str) -> BTreeSet<String> {
    help.lines()
        .skip_while(|l| !l.starts_with("Options:"))
        .skip(1)
        .filter_map(|l| {
            let l = l.trim_start();
            let first = l.split([' ', ',']).next()?;
            let flag = if first.starts_with("--") {
                first
            } else if first.starts_with('-') {
                // "-k <N>" or "-h, --help"
                match l.split(", ").nth(1) {
                    Some(long) if long.starts_with("--") => long.split(' ').next()?,
                    _ => first,
                }
            } else {
                return None;
            };
            (flag != "--help").then(|| flag.to_owned())
        })
        .collect()
}

/// Flags in the first column of a command's table in docs/cli.md.
fn doc_flags(doc: &str, command: &str) -> BTreeSet<String> {
    let heading = format!("## light {command}");
    doc.lines()
        .skip_while(|l| l.trim() != heading)
        .skip(1)
        .take_while(|l| !l.starts_with("## "))
        .filter_map(|l| l.strip_prefix("| `"))
        .filter_map(|l| l.split(['`', ' ']).next())
        .filter(|f| f.starts_with('-'))
        .map(str::to_owned)
        .collect()
}

#[test]
fn documented_flags_match_help() {
    let doc = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/cli.md")).unwrap();
    for cmd in COMMANDS {
        let out = run(&[cmd, "--help"]);
        assert_eq!(code(&out), 0, "{cmd} --help");
        let from_help = help_flags(&text(&out.stdout));
        assert!(!from_help.is_empty(), "{cmd}: no flags parsed from help");
        assert_eq!(from_help, doc_flags(&doc, cmd), "flags of `{cmd}` in --help vs docs/cli.md");
    }
}

#[test]
fn top_level_help_and_version() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    let help = text(&out.stdout);
    assert!(help.contains("Usage: light <COMMAND>"));
    for cmd in COMMANDS {
        assert!(help.contains(cmd), "{cmd} missing from the synopsis");
    }
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn usage_errors_exit_2_with_synopsis() {
    let d = data();
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["dance"],
        vec!["stats", "--data", &d, "--bogus"],
        vec!["eval", "--model", "random", "--data", &d],
        vec!["eval", "--task", "speech", "--model", "random", "--data", &d, "--split", "weekend"],
        vec!["eval", "--task", "singing", "--model", "random", "--data", &d],
        vec!["eval", "--task", "speech", "--model", "no-such-model", "--data", &d],
        vec!["nn", "--model", "m.bin", "--query", "x", "--kind", "colour"],
        vec!["serve", "--world", "w.json", "--timeout", "soon"],
        vec!["serve", "--world", "w.json", "--port", "seventy"],
        vec!["stats"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", text(&out.stderr));
        assert!(text(&out.stderr).contains("Usage:"), "{args:?} prints a synopsis");
    }
}

#[test]
fn domain_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.bin");
    std::fs::write(&garbage, b"not a model or a world").unwrap();
    let missing = dir.path().join("missing");
    let broken = dir.path().join("broken");
    std::fs::create_dir(&broken).unwrap();
    std::fs::write(broken.join("manifest.json"), "{ nope").unwrap();

    let w = foyer_world_path();
    let d = data();
    let out_dir = dir.path().join("out");
    let cases: Vec<Vec<&str>> = vec![
        vec!["stats", "--data", s(&broken)],
        vec!["eval", "--task", "speech", "--model", "random", "--data", s(&missing)],
        vec!["eval", "--task", "speech", "--model", s(&garbage), "--data", &d],
        vec!["nn", "--model", s(&garbage), "--query", "crown", "--kind", "object"],
        vec!["nn", "--model", s(&missing), "--query", "crown", "--kind", "object"],
        vec!["play", "--world", s(&garbage), "--seat", "servant"],
        vec!["play", "--world", &w, "--seat", "dragon"],
        vec!["serve", "--world", s(&missing), "--port", "0"],
        vec!["import", "--raw", s(&missing), "--out", s(&out_dir)],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(code(&out), 1, "{args:?}: {}", text(&out.stderr));
        assert!(text(&out.stderr).lines().any(|l| l.starts_with("error: ")), "{args:?}");
    }
}

fn turn_line(t: &TurnInput) -> String {
    let mut parts = Vec::new();
    if let Some(u) = &t.utterance {
        parts.push(u.clone());
    }
    if let Some(a) = &t.act {
        parts.push(format!("do {a}"));
    }
    if let Some(e) = &t.emote {
        parts.push(e.clone());
    }
    parts.join(" | ")
}

fn load_log(path: &Path) -> EpisodeLog {
    let file = EpisodeFile::parse(&std::fs::read_to_string(path).unwrap()).unwrap();
    let world_path = path.with_file_name(&file.header.world);
    let world = WorldGraph::from_json(&std::fs::read_to_string(world_path).unwrap()).unwrap();
    file.into_log(world).expect("log replays")
}

#[test]
fn play_the_foyer_as_the_servant_against_a_scripted_king() {
    let dir = tempfile::tempdir().unwrap();
    let turns = foyer_turns();
    let servant: Vec<String> = turns.iter().step_by(2).map(turn_line).collect();
    let king: Vec<String> = turns.iter().skip(1).step_by(2).map(turn_line).collect();
    let script = dir.path().join("king.txt");
    std::fs::write(&script, king.join("\n") + "\n").unwrap();
    let log = dir.path().join("foyer.jsonl");

    // a mistyped action first: reported, and the turn is retried
    let stdin = format!("do get rug\n{}\n", servant.join("\n"));
    let out = run_with_stdin(
        &["play", "--world", &foyer_world_path(), "--seat", "servant", "--partner-script", s(&script), "--log", s(&log), "--seed", "1"],
        &stdin,
    );
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("servant says: my humble king. What am I to do to serve you?"));
    assert!(stdout.contains("king acts: give scepter to servant"));
    assert!(stdout.contains("king emotes: sigh"));
    assert!(text(&out.stderr).contains("rug"));

    let played = load_log(&log);
    let expected = foyer_episode();
    assert_eq!(played.turns.len(), 14);
    assert_eq!(played.final_hash().unwrap(), expected.final_hash().unwrap());
    assert!(stdout.contains(&expected.final_hash().unwrap()));
}

#[test]
fn immediate_quit_leaves_an_empty_valid_log() {
    let dir = tempfile::tempdir().unwrap();
    for stdin in ["/quit\n", ""] {
        let log = dir.path().join("quit.jsonl");
        let out = run_with_stdin(&["play", "--world", &foyer_world_path(), "--seat", "servant", "--log", s(&log), "--seed", "0"], stdin);
        assert_eq!(code(&out), 0, "{}", text(&out.stderr));
        let played = load_log(&log);
        assert!(played.turns.is_empty());
        assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 1);
    }
}

#[test]
fn typed_gesture_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("smile.jsonl");
    let out = run_with_stdin(
        &["play", "--world", &foyer_world_path(), "--seat", "servant", "--log", s(&log), "--seed", "4"],
        "gesture smile\n/quit\n",
    );
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("servant emotes: smile"));
    let played = load_log(&log);
    // the smile plus the random partner's reply
    assert_eq!(played.turns.len(), 2);
    assert_eq!(played.turns[0].emote.map(|e| e.as_str()), Some("smile"));
}

#[test]
fn default_seed_is_announced() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["eval", "--task", "emote", "--model", "random", "--data", &data(), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0);
    assert!(text(&out.stderr).contains("seed: 0 (default)"));
    let seeded = run(&["eval", "--task", "emote", "--model", "random", "--data", &data(), "--out", s(dir.path()), "--seed", "0"]);
    assert!(!text(&seeded.stderr).contains("(default)"));
    assert_eq!(seeded.stdout, out.stdout);
}

#[test]
fn random_speech_baseline_is_near_one_in_twenty() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["eval", "--task", "speech", "--model", "random", "--data", &data(), "--seed", "7", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    let tsv = std::fs::read_to_string(dir.path().join("metrics.tsv")).unwrap();
    assert_eq!(text(&out.stdout), tsv);
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines[0], "split\ttask\tmetric\tvalue\tn\tseed");
    let cols: Vec<&str> = lines[1].split('\t').collect();
    assert_eq!(&cols[..3], ["mixed", "speech", "r_at_1_of_20"]);
    assert_eq!(cols[5], "7");
    let value: f64 = cols[3].parse().unwrap();
    let n: f64 = cols[4].parse().unwrap();
    // three binomial standard deviations around 1/20
    let band = 3.0 * (0.05f64 * 0.95 / n).sqrt();
    assert!((value - 0.05).abs() <= band, "R@1/20 {value} over {n} examples");
    assert!(dir.path().join("metrics.json").exists());
}

#[test]
fn sequential_and_parallel_eval_agree() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["eval", "--task", "all", "--model", "ir", "--data", &data(), "--seed", "3", "--split", "valid", "--split", "test_unseen"];
    let mut seq = base.to_vec();
    seq.extend(["--sequential", "--out", s(dir.path())]);
    let mut par = base.to_vec();
    par.extend(["--out", s(dir.path())]);
    let (a, b) = (run(&seq), run(&par));
    assert_eq!(code(&a), 0, "{}", text(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    // header plus three tasks for each of the two splits
    assert_eq!(text(&a.stdout).lines().count(), 7);
}

#[test]
fn nn_matches_a_brute_force_scan() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("m.bin");
    let out = run(&["train-embed", "--data", &data(), "--out", s(&model_path), "--epochs", "2", "--seed", "5"]);
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    let model = EmbeddingModel::load(&model_path).unwrap();

    for (query, kind) in [("the crown is loose", "object"), ("chicken", "location"), ("king", "character"), ("give", "action")] {
        let out = run(&["nn", "--model", s(&model_path), "--query", query, "--kind", kind, "-k", "5"]);
        assert_eq!(code(&out), 0, "{}", text(&out.stderr));
        let got: Vec<(String, f64)> = text(&out.stdout)
            .lines()
            .map(|l| {
                let (t, v) = l.rsplit_once('\t').unwrap();
                (t.to_owned(), v.parse().unwrap())
            })
            .collect();

        let want_kind: PhraseKind = kind.parse().unwrap();
        let q = model.embed(query);
        let mut scan: Vec<(String, f64)> = model
            .registry()
            .iter()
            .filter(|(k, _)| *k == want_kind)
            .map(|(_, p)| (p.clone(), model.embed(p).iter().zip(&q).map(|(a, b)| a * b).sum()))
            .collect();
        scan.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        scan.truncate(5);

        assert_eq!(got.len(), scan.len(), "{query}/{kind}");
        assert!(!got.is_empty(), "{kind} phrases are registered");
        for ((gt, gv), (wt, wv)) in got.iter().zip(&scan) {
            assert_eq!(gt, wt, "{query}/{kind}");
            assert!((gv - wv).abs() < 1e-6);
        }
    }
}

#[test]
fn stats_table_json_and_empty_dir() {
    let out = run(&["stats", "--data", &data(), "--split", "train", "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let train = &v["splits"]["train"];
    assert!(train["dialogues"].as_u64().unwrap() > 0);

    let table = text(&run(&["stats", "--data", &data()]).stdout);
    assert!(table.starts_with("stat\ttrain\tvalid\ttest_seen\ttest_unseen\n"));
    let dialogues = table.lines().find(|l| l.starts_with("dialogues\t")).unwrap();
    assert_eq!(dialogues.split('\t').nth(1).unwrap(), train["dialogues"].to_string());

    let empty = tempfile::tempdir().unwrap();
    let out = run(&["stats", "--data", s(empty.path())]);
    assert_eq!(code(&out), 0);
    assert!(text(&out.stderr).contains("warning"));
}

#[test]
fn data_dir_comes_from_the_environment() {
    let out = light().args(["stats", "--split", "valid"]).env("LIGHT_DATA_DIR", data()).output().unwrap();
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    assert!(text(&out.stdout).starts_with("stat\tvalid\n"));
}

#[test]
fn cooccurrence_export_writes_four_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["export-cooccurrence", "--data", &data(), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    for name in ["action_action", "action_emote", "emote_action", "emote_emote"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap();
        assert!(csv.lines().count() > 1, "{name} has rows");
    }
}

#[test]
fn import_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir: PathBuf = dir.path().join("ds");
    let raw = dataset_dir().join("raw");
    let out = run(&["import", "--raw", s(&raw), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    assert!(text(&out.stdout).starts_with("dialogues: "));
    let stats = run(&["stats", "--data", s(&out_dir), "--json"]);
    assert_eq!(code(&stats), 0, "{}", text(&stats.stderr));
}

#[test]
fn serve_runs_agent_sessions_and_exits() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    let out = run(&[
        "serve", "--port", "0", "--world", &foyer_world_path(), "--seats", "agent-vs-agent", "--agent-sessions", "2",
        "--max-turns", "6", "--log-dir", s(&logs), "--seed", "9",
    ]);
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("listening on 127.0.0.1:"));
    let ended: Vec<&str> = stdout.lines().filter(|l| l.starts_with("session ")).collect();
    assert_eq!(ended.len(), 2);
    for line in ended {
        assert!(line.contains("(completed) after 6 turns"), "{line}");
        let log = line.rsplit("log ").next().unwrap();
        assert_eq!(load_log(Path::new(log)).turns.len(), 6);
    }
}
