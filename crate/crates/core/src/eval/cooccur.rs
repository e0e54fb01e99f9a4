use serde::{Deserialize, Serialize};

use crate::action::{Emote, Template};
use crate::episode::{EpisodeLog, TurnRecord};

/// Counts of (move, partner's reply on the next turn).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceMatrix {
    pub name: String,
    /// Rows: the move.
    pub axis_a: Vec<String>,
    /// Columns: the reply.
    pub axis_b: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl CooccurrenceMatrix {
    fn zeros(name: &str, axis_a: Vec<String>, axis_b: Vec<String>) -> Self {
        let counts = vec![vec![0; axis_b.len()]; axis_a.len()];
        CooccurrenceMatrix { name: name.to_owned(), axis_a, axis_b, counts }
    }

    pub fn get(&self, a: &str, b: &str) -> u64 {
        match (self.axis_a.iter().position(|x| x == a), self.axis_b.iter().position(|x| x == b)) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Largest cell, first in row-major order on ties.
    pub fn argmax(&self) -> Option<(&str, &str, u64)> {
        let mut best: Option<(usize, usize, u64)> = None;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c > 0 && best.map_or(true, |(_, _, b)| c > b) {
                    best = Some((i, j, c));
                }
            }
        }
        best.map(|(i, j, c)| (self.axis_a[i].as_str(), self.axis_b[j].as_str(), c))
    }

    /// Header row of reply labels, then one row per move label.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(&*self.name);
        for b in &self.axis_b {
            out.push(',');
            out.push_str(b);
        }
        out.push('\n');
        for (a, row) in self.axis_a.iter().zip(&self.counts) {
            out.push_str(a);
            for c in row {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }

    fn bump(&mut self, a: &str, b: &str) {
        if let (Some(i), Some(j)) = (self.axis_a.iter().position(|x| x == a), self.axis_b.iter().position(|x| x == b)) {
            self.counts[i][j] += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cooccurrences {
    pub action_action: CooccurrenceMatrix,
    pub action_emote: CooccurrenceMatrix,
    pub emote_action: CooccurrenceMatrix,
    pub emote_emote: CooccurrenceMatrix,
}

impl Cooccurrences {
    pub fn all(&self) -> [&CooccurrenceMatrix; 4] {
        [&self.action_action, &self.action_emote, &self.emote_action, &self.emote_emote]
    }
}

/// Root verb of an action text: its first word.
pub fn action_root(text: &str) -> String {
    text.split_whitespace().next().unwrap_or_default().to_lowercase()
}

fn root_axis() -> Vec<String> {
    let mut roots: Vec<String> = Vec::new();
    for t in Template::ALL {
        if !roots.iter().any(|r| r == t.verb()) {
            roots.push(t.verb().to_owned());
        }
    }
    roots
}

fn emote_axis() -> Vec<String> {
    Emote::ALL.iter().map(|e| e.as_str().to_owned()).collect()
}

fn act_of(t: &TurnRecord) -> Option<String> {
    t.act_text.as_deref().map(action_root)
}

/// Four matrices over adjacent turns: a move on turn t, the partner's reply
/// on turn t + 1. Axes are fixed: the 12 root verbs and the 22 emotes.
pub fn cooccurrence(episodes: &[EpisodeLog]) -> Cooccurrences {
    let (roots, emotes) = (root_axis(), emote_axis());
    let mut m = Cooccurrences {
        action_action: CooccurrenceMatrix::zeros("action_action", roots.clone(), roots.clone()),
        action_emote: CooccurrenceMatrix::zeros("action_emote", roots.clone(), emotes.clone()),
        emote_action: CooccurrenceMatrix::zeros("emote_action", emotes.clone(), roots),
        emote_emote: CooccurrenceMatrix::zeros("emote_emote", emotes.clone(), emotes),
    };
    for log in episodes {
        for pair in log.turns.windows(2) {
            let (a_act, b_act) = (act_of(&pair[0]), act_of(&pair[1]));
            let (a_emo, b_emo) = (pair[0].emote.map(|e| e.as_str()), pair[1].emote.map(|e| e.as_str()));
            if let (Some(a), Some(b)) = (&a_act, &b_act) {
                m.action_action.bump(a, b);
            }
            if let (Some(a), Some(b)) = (&a_act, b_emo) {
                m.action_emote.bump(a, b);
            }
            if let (Some(a), Some(b)) = (a_emo, &b_act) {
                m.emote_action.bump(a, b);
            }
            if let (Some(a), Some(b)) = (a_emo, b_emo) {
                m.emote_emote.bump(a, b);
            }
        }
    }
    m
}
