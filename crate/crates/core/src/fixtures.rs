//! Bundled fixture data: the castle foyer episode and the graveyard
//! entities. The files live under `fixtures/` in this crate.

use std::path::PathBuf;

use crate::episode::{EpisodeFile, EpisodeLog, TurnInput};
use crate::world::{EntityId, WorldGraph};

pub const FOYER_WORLD: &str = include_str!("../fixtures/worlds/foyer.json");
pub const GRAVEYARD_WORLD: &str = include_str!("../fixtures/worlds/graveyard.json");
pub const FOYER_EPISODE: &str = include_str!("../fixtures/episodes/foyer.jsonl");
/// Expected speech context for the king's second turn of the foyer episode.
pub const FOYER_SPEECH_CONTEXT: &str = include_str!("../fixtures/golden/foyer_speech_turn4.txt");
pub const FOYER_SPEECH_LABEL: &str = "Yes. Yes. Of course. Also check the jewels in my crown. They seem loose.";

/// The five physical actions logged in the foyer episode, with the speaker.
pub const FOYER_ACTIONS: [(&str, &str); 5] = [
    ("king", "give scepter to servant"),
    ("servant", "put scepter in small bucket"),
    ("king", "give crown to servant"),
    ("servant", "drop crown"),
    ("servant", "get scepter from small bucket"),
];

pub fn foyer_world() -> WorldGraph {
    WorldGraph::from_json(FOYER_WORLD).expect("bundled foyer world is valid")
}

pub fn graveyard_world() -> WorldGraph {
    WorldGraph::from_json(GRAVEYARD_WORLD).expect("bundled graveyard world is valid")
}

/// Seed and size of the synthetic part of the bundled dataset.
pub const BUNDLED_SYNTH_SEED: u64 = 7;
pub const BUNDLED_SYNTH_COUNT: usize = 50;

/// Root of the bundled dataset (contains `manifest.json`).
pub fn dataset_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// The foyer dialogue, one entry per turn, servant first.
pub fn foyer_turns() -> Vec<TurnInput> {
    let say = TurnInput::say;
    vec![
        say("my humble king. What am I to do to serve you?"),
        say("Ahhh. My loyal servant. Polish my scepter.").with_act("give scepter to servant"),
        say("Yes my lord. I will polish it immediately. Am I to return it to you personally?")
            .with_act("put scepter in small bucket"),
        say("Yes. Yes. Of course. Also check the jewels in my crown. They seem loose.").with_act("give crown to servant"),
        say("But sire I am not qualified to do that. Would you prefer I take it to someone?"),
        say("Oh fine then.").with_emote("gesture sigh"),
        say("I am sorry sir the rug startled me").with_act("drop crown"),
        say("Haha! That's bear I slain on my latest hunting trip. He's a mighty beast!").with_emote("gesture laugh"),
        say("and if I may ask where did you go hunting sire?"),
        say("The great woods of course. This bear was stealing children in the kingdom. Surely you heard about it."),
        say("sire. I have not been outside of these walls in quiet some time. I have not seen my family in ages."),
        say("Such is the life of a servant I suppose. How's that scepter looking?"),
        say("it is almost ready sire. and the crown who would you like me to take it to?")
            .with_act("get scepter from small bucket"),
        say("Here just give it back. I'll have the queen find someone."),
    ]
}

pub fn foyer_participants() -> [EntityId; 2] {
    [EntityId::new("servant"), EntityId::new("king")]
}

/// The bundled foyer episode file, replayed against the foyer world.
pub fn foyer_episode() -> EpisodeLog {
    EpisodeFile::parse(FOYER_EPISODE)
        .expect("bundled foyer episode parses")
        .into_log(foyer_world())
        .expect("bundled foyer episode replays")
}
