//! Instances shipped with the crate.

use crate::instance::{build_network, load_instance, PdpInstance, PdpNetwork};

/// Ring `DEP-A-B-C-DEP` with 15 m edges, two tasks and two vehicles.
pub const TRI3_JSON: &str = include_str!("../../../instances/tri3.json");

/// Six tasks and five vehicles on a plant layout with a tight delivery
/// schedule. Approximate: edge lengths and task times are reconstructed.
pub const PLANT6_JSON: &str = include_str!("../../../instances/plant6.json");

pub fn tri3() -> PdpInstance {
    load_instance(TRI3_JSON).expect("bundled instance is valid")
}

pub fn tri3_network() -> PdpNetwork {
    build_network(&tri3()).expect("bundled instance is connected")
}

pub fn plant6() -> PdpInstance {
    load_instance(PLANT6_JSON).expect("bundled instance is valid")
}

pub fn plant6_network() -> PdpNetwork {
    build_network(&plant6()).expect("bundled instance is connected")
}
