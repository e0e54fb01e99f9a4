//! TF-IDF scores against hand arithmetic, and a retrieval set where only
//! the gold shares the context's rare word.

use light_acceptance::Outcome;
use light_core::agents::{CandidateSet, IrRanker, Ranker, TfIdf};
use light_core::episode::TaskKind;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOLERANCE: f64 = 1e-9;

/// Corpus: "the cat sat" / "the dog sat" / "the bird flew". With N = 3:
/// idf(the) = ln 1 = 0, idf(sat) = ln 1.5, idf(cat) = idf(dog) = idf(bird)
/// = idf(flew) = ln 3. Weights are count × idf; unseen tokens weigh 0.
fn hand_cases() -> Vec<(&'static str, &'static str, f64)> {
    let (l3, l15) = (3f64.ln(), 1.5f64.ln());
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    vec![
        // {cat: l3, sat: l15} vs {cat: l3, flew: l3}
        ("cat sat on the mat", "the cat flew", l3 * l3 / (norm(&[l3, l15]) * norm(&[l3, l3]))),
        // {cat: 2 l3, sat: l15} vs {sat: l15}
        ("cat cat sat", "sat", l15 * l15 / (norm(&[2.0 * l3, l15]) * l15)),
        // {dog: l3, sat: l15} vs {cat: l3, sat: l15}
        ("the dog sat", "the cat sat", l15 * l15 / (norm(&[l3, l15]) * norm(&[l3, l15]))),
        ("the bird flew", "the bird flew", 1.0),
        // only zero-weight or unseen tokens
        ("the the", "the cat", 0.0),
        ("zebra", "zebra", 0.0),
    ]
}

fn rare_word_recall() -> Result<(usize, usize), String> {
    let common = ["the", "a", "and", "of", "to"];
    let n = 200;
    let rare = |i: usize| format!("rare{i:03}");
    let golds: Vec<String> = (0..n).map(|i| format!("{} {} {}", common[i % 5], rare(i), common[(i + 2) % 5])).collect();
    let contexts: Vec<String> =
        (0..n).map(|i| format!("{} {} {} {}", common[(i + 1) % 5], common[(i + 3) % 5], rare(i), common[i % 5])).collect();
    let docs: Vec<&str> = golds.iter().chain(&contexts).map(String::as_str).collect();
    let ir = IrRanker::new(TfIdf::fit(docs).map_err(|e| e.to_string())?);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut hits = 0;
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|j| *j != i).collect();
        others.shuffle(&mut rng);
        let mut items: Vec<String> = others[..19].iter().map(|j| golds[*j].clone()).collect();
        items.push(golds[i].clone());
        items.shuffle(&mut rng);
        let c = CandidateSet::new(items, TaskKind::Speech).map_err(|e| e.to_string())?;
        let s = ir.rank(&contexts[i], &c, &mut rng).map_err(|e| e.to_string())?;
        hits += usize::from(c.items()[s.argmax_index] == golds[i]);
    }
    Ok((hits, n))
}

pub fn check() -> Outcome {
    let stats = TfIdf::fit(["the cat sat", "the dog sat", "the bird flew"]).map_err(|e| e.to_string())?;
    let idf_expected = [("the", 0.0), ("sat", 1.5f64.ln()), ("cat", 3f64.ln()), ("flew", 3f64.ln())];
    for (t, want) in idf_expected {
        let got = stats.idf(t).ok_or_else(|| format!("no idf for `{t}`"))?;
        if (got - want).abs() > TOLERANCE {
            return Err(format!("idf({t}) = {got}, expected {want}"));
        }
    }
    let mut worst: f64 = 0.0;
    let cases = hand_cases();
    for (a, b, want) in &cases {
        let got = stats.similarity(a, b);
        worst = worst.max((got - want).abs());
        if (got - want).abs() > TOLERANCE {
            return Err(format!("sim(`{a}`, `{b}`) = {got}, expected {want}"));
        }
    }
    let (hits, n) = rare_word_recall()?;
    if hits != n {
        return Err(format!("rare-word R@1/20 {hits}/{n}"));
    }
    Ok(format!("{} hand scores within {worst:.1e}; rare-word R@1/20 {hits}/{n}", cases.len()))
}
