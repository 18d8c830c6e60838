//! Parse the crossing scenario from its text files and print a summary.

use anytime_synth::fixtures;
use anytime_synth::model::{parse_component, parse_dfa, Component};

fn main() -> anytime_synth::Result<()> {
    for text in [fixtures::VEHICLE, fixtures::PED1, fixtures::PED5] {
        match parse_component(text)? {
            Component::Mc(m) => println!("mc   {} (agent {}): {} states", m.name, m.agent, m.num_states()),
            Component::Mdp(m) => println!("mdp  {}: {} states", m.name, m.num_states()),
            Component::Dfts(t) => println!("dfts {}: {} states, actions {:?}", t.name, t.num_states(), t.actions),
        }
    }
    let dfa = parse_dfa(fixtures::CROSSING)?;
    println!("dfa: {} states, {} props in the alphabet", dfa.num_states(), dfa.alphabet().len());
    Ok(())
}
