//! Ranker evaluation, embedding training and neighbor lookup.

use std::collections::BTreeSet;

use anyhow::{Context, Result};
use light_core::agents::{
    interleave_uniform, nearest_neighbors, train_embedding, EmbeddingModel, Hyperparams, Ranker,
};
use light_core::episode::{make_examples, CandidatePool, Example, ExampleOptions, EpisodeLog, Split, TaskKind};
use light_core::eval::{eval_action, eval_emote, eval_speech, metrics_tsv, speech_pool, write_reports, MetricReport};
use light_core::exec::Exec;

use crate::common::{build_ranker, load, seed_or_default, usage};
use crate::{EvalArgs, NnArgs, TrainArgs};

fn parse_tasks(raw: &[String]) -> Result<Vec<TaskKind>> {
    let mut tasks = Vec::new();
    for t in raw {
        let add: Vec<TaskKind> = if t == "all" {
            TaskKind::ALL.to_vec()
        } else {
            match t.parse() {
                Ok(k) => vec![k],
                Err(_) => return usage(format!("invalid value '{t}' for '--task': expected speech, action, emote or all")),
            }
        };
        for k in add {
            if !tasks.contains(&k) {
                tasks.push(k);
            }
        }
    }
    Ok(tasks)
}

fn score(ranker: &dyn Ranker, task: TaskKind, examples: &[Example], seed: u64, exec: Exec) -> Result<MetricReport> {
    let r = match task {
        TaskKind::Speech => eval_speech(ranker, examples, &speech_pool(examples), seed, exec),
        TaskKind::Action => eval_action(ranker, examples, seed, exec),
        TaskKind::Emote => eval_emote(ranker, examples, seed, exec),
    };
    r.with_context(|| format!("evaluating the {task} task"))
}

pub fn run(args: EvalArgs) -> Result<()> {
    let tasks = parse_tasks(&args.task)?;
    let seed = seed_or_default(args.seed);
    let exec = if args.sequential { Exec::Sequential } else { Exec::default() };
    let ds = load(&args.data.data, exec)?;
    let ranker = build_ranker(&args.model, Some(&ds))?;

    // one group per requested split, or everything pooled
    let groups: Vec<Vec<EpisodeLog>> = if args.split.is_empty() {
        vec![ds.logs()]
    } else {
        args.split.iter().map(|s| ds.split(*s)).collect()
    };
    let mut reports = Vec::new();
    for logs in &groups {
        for &task in &tasks {
            let examples = make_examples(logs, task, ExampleOptions::default());
            reports.push(score(ranker.as_ref(), task, &examples, seed, exec)?);
        }
    }
    write_reports(&args.out, &reports)?;
    print!("{}", metrics_tsv(&reports));
    Ok(())
}

fn action_texts(examples: &[Example]) -> Vec<String> {
    let mut out = BTreeSet::new();
    for e in examples {
        if let CandidatePool::ValidActions { actions } = &e.pool {
            out.extend(actions.iter().cloned());
        }
        out.insert(e.label.clone());
    }
    out.into_iter().collect()
}

pub fn train(args: TrainArgs) -> Result<()> {
    if args.dim == 0 || args.batch_size == 0 {
        return usage("--dim and --batch-size must be at least 1");
    }
    let seed = seed_or_default(args.seed);
    let ds = load(&args.data.data, Exec::default())?;
    let tasks = if args.task.is_empty() { TaskKind::ALL.to_vec() } else { args.task.clone() };
    let train = ds.split(Split::Train);

    let mut sets = Vec::new();
    let mut actions = Vec::new();
    for &task in &tasks {
        let examples = make_examples(&train, task, ExampleOptions::default());
        if task == TaskKind::Action {
            actions = action_texts(&examples);
        }
        sets.push(examples.into_iter().map(|e| (e.context.flat_text, e.label)).collect::<Vec<_>>());
    }
    let pairs = interleave_uniform(&sets);
    let hp = Hyperparams {
        dim: args.dim,
        learning_rate: args.lr,
        margin: args.margin,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed,
        ..Hyperparams::default()
    };
    let report = train_embedding(&pairs, &hp).context("training on the train split")?;
    eprintln!("pairs: {}  initial loss: {:.6}", pairs.len(), report.initial_loss);
    for (i, l) in report.epoch_losses.iter().enumerate() {
        eprintln!("epoch {:>3}: {l:.6}", i + 1);
    }
    println!("final loss: {:.6}", report.final_loss);

    let mut model = report.model;
    let worlds: Vec<_> = ds.worlds.values().cloned().collect();
    model.register_defaults(&worlds, &actions);
    model.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!("model: {} (vocab {}, dim {})", args.out.display(), model.vocab().len(), model.dim());
    Ok(())
}

pub fn nn(args: NnArgs) -> Result<()> {
    let model = EmbeddingModel::load(&args.model).with_context(|| format!("loading model {}", args.model.display()))?;
    for (text, score) in nearest_neighbors(&model, &args.query, args.k, args.kind) {
        println!("{text}\t{score:.6}");
    }
    Ok(())
}
