use anyhow::{Context, Result};
use light_core::data::import_light;
use light_core::episode::{EpisodeLog, Split};
use light_core::eval::{self, dataset_stats, dataset_stats_dir, SplitStats, StatsReport};
use light_core::exec::Exec;

use crate::common::load;
use crate::{CooccurArgs, ImportArgs, StatsArgs};

fn table(report: &StatsReport) -> String {
    let rows: [(&str, fn(&SplitStats) -> String); 9] = [
        ("locations", |s| s.locations.to_string()),
        ("objects", |s| s.objects.to_string()),
        ("characters", |s| s.characters.to_string()),
        ("dialogues", |s| s.dialogues.to_string()),
        ("utterances", |s| s.utterances.to_string()),
        ("emotes", |s| s.emotes.to_string()),
        ("actions", |s| s.actions.to_string()),
        ("vocabulary", |s| s.vocabulary.to_string()),
        ("mean_utterance_length", |s| format!("{:.2}", s.mean_utterance_length)),
    ];
    let mut out = String::from("stat");
    for split in report.splits.keys() {
        out.push('\t');
        out.push_str(split.as_str());
    }
    out.push('\n');
    for (name, cell) in rows {
        out.push_str(name);
        for s in report.splits.values() {
            out.push('\t');
            out.push_str(&cell(s));
        }
        out.push('\n');
    }
    out
}

pub fn stats(args: StatsArgs) -> Result<()> {
    let splits = if args.split.is_empty() { Split::ALL.to_vec() } else { args.split.clone() };
    let report = if args.data.data.is_dir() {
        dataset_stats_dir(&args.data.data, &splits, Exec::default())?
    } else {
        dataset_stats(&load(&args.data.data, Exec::default())?, &splits)?
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", table(&report));
    }
    Ok(())
}

pub fn import(args: ImportArgs) -> Result<()> {
    let summary = import_light(&args.raw, &args.out)
        .with_context(|| format!("importing {} into {}", args.raw.display(), args.out.display()))?;
    for (name, reason) in &summary.skipped {
        eprintln!("skipped {name}: {reason}");
    }
    println!("dialogues: {}  written: {}  skipped: {}", summary.dialogues, summary.written, summary.skipped.len());
    Ok(())
}

pub fn cooccurrence(args: CooccurArgs) -> Result<()> {
    let ds = load(&args.data.data, Exec::default())?;
    let logs: Vec<EpisodeLog> = if args.split.is_empty() {
        ds.logs()
    } else {
        args.split.iter().flat_map(|s| ds.split(*s)).collect()
    };
    let counts = eval::cooccurrence(&logs);
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for m in counts.all() {
        let path = args.out.join(format!("{}.csv", m.name));
        std::fs::write(&path, m.to_csv()).with_context(|| format!("writing {}", path.display()))?;
        match m.argmax() {
            Some((a, b, n)) => println!("{}\t{}\ttop {a} -> {b} ({n})", path.display(), m.total()),
            None => println!("{}\t0", path.display()),
        }
    }
    Ok(())
}
