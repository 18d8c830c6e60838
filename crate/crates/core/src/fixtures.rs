//! The pedestrian-crossing scenario: a vehicle that must pass a crossing
//! while five pedestrians move around it. Four pedestrians cross once and
//! stay on the far side; the fifth keeps wandering back and forth.

use crate::compose::Plant;
use crate::model::{parse_component, parse_dfa, Component, Dfa, Mc};

pub const VEHICLE: &str = include_str!("../fixtures/vehicle.mdl");
pub const PED1: &str = include_str!("../fixtures/ped1.mdl");
pub const PED2: &str = include_str!("../fixtures/ped2.mdl");
pub const PED3: &str = include_str!("../fixtures/ped3.mdl");
pub const PED4: &str = include_str!("../fixtures/ped4.mdl");
pub const PED5: &str = include_str!("../fixtures/ped5.mdl");
pub const CROSSING: &str = include_str!("../fixtures/crossing.dfa");

pub fn vehicle() -> Plant {
    Plant::try_from(parse_component(VEHICLE).expect("vehicle fixture")).expect("vehicle is a plant")
}

/// Pedestrian `i` in 1..=5.
pub fn pedestrian(i: usize) -> Mc {
    let text = [PED1, PED2, PED3, PED4, PED5][i - 1];
    match parse_component(text).expect("pedestrian fixture") {
        Component::Mc(m) => m,
        _ => unreachable!("pedestrian fixtures are Markov chains"),
    }
}

pub fn pedestrians() -> Vec<Mc> {
    (1..=5).map(pedestrian).collect()
}

pub fn crossing_dfa() -> Dfa {
    parse_dfa(CROSSING).expect("crossing DFA fixture")
}
