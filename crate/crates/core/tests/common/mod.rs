#![allow(dead_code)]

use std::path::PathBuf;

use routed_mpst::scribble::parse_module_named;
use routed_mpst::{Arm, GlobalType, MsgLabel, Role};

pub mod gen;
pub mod oracle;
pub mod props;

pub fn r(s: &'static str) -> Role {
    Role::from_static(s)
}

pub fn m(s: &str) -> MsgLabel {
    MsgLabel::new(s)
}

pub fn comm(from: &'static str, to: &'static str, arms: Vec<(&str, GlobalType)>) -> GlobalType {
    GlobalType::comm(r(from), r(to), arms.into_iter().map(|(l, g)| Arm::new(m(l), g)).collect())
}

pub fn routed(from: &'static str, to: &'static str, via: &'static str, arms: Vec<(&str, GlobalType)>) -> GlobalType {
    GlobalType::routed(r(from), r(to), r(via), arms.into_iter().map(|(l, g)| Arm::new(m(l), g)).collect())
}

pub fn one(from: &'static str, to: &'static str, l: &str, k: GlobalType) -> GlobalType {
    comm(from, to, vec![(l, k)])
}

pub fn one_via(from: &'static str, to: &'static str, via: &'static str, l: &str, k: GlobalType) -> GlobalType {
    routed(from, to, via, vec![(l, k)])
}

/// The travel agency protocol written out by hand.
pub fn g_travel() -> GlobalType {
    GlobalType::rec(
        "t",
        one(
            "B",
            "A",
            "Suggest",
            one(
                "A",
                "S",
                "Query",
                comm(
                    "S",
                    "A",
                    vec![
                        (
                            "Available",
                            one(
                                "A",
                                "B",
                                "Quote",
                                comm(
                                    "B",
                                    "A",
                                    vec![
                                        ("Ok", one("A", "S", "Confirm", GlobalType::End)),
                                        ("No", one("A", "S", "Reject", GlobalType::End)),
                                    ],
                                ),
                            ),
                        ),
                        ("Full", one("A", "B", "Full", GlobalType::var("t"))),
                    ],
                ),
            ),
        ),
    )
}

/// The travel agency protocol with client-to-client messages routed via S.
pub fn g_travel_routed() -> GlobalType {
    GlobalType::rec(
        "t",
        one_via(
            "B",
            "A",
            "S",
            "Suggest",
            one(
                "A",
                "S",
                "Query",
                comm(
                    "S",
                    "A",
                    vec![
                        (
                            "Available",
                            one_via(
                                "A",
                                "B",
                                "S",
                                "Quote",
                                routed(
                                    "B",
                                    "A",
                                    "S",
                                    vec![
                                        ("Ok", one("A", "S", "Confirm", GlobalType::End)),
                                        ("No", one("A", "S", "Reject", GlobalType::End)),
                                    ],
                                ),
                            ),
                        ),
                        ("Full", one_via("A", "B", "S", "Full", GlobalType::var("t"))),
                    ],
                ),
            ),
        ),
    )
}

/// p -> q: M1. s -> q: M2. end
pub fn g_ex() -> GlobalType {
    one("p", "q", "M1", one("s", "q", "M2", GlobalType::End))
}

pub fn g_ex_encoded() -> GlobalType {
    one_via("p", "q", "s", "M1", one("s", "q", "M2", GlobalType::End))
}

pub fn protocols_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../protocols")
}

/// (file stem, entry protocol, router role)
pub const CORPUS: [(&str, &str, &str); 4] = [
    ("TravelAgency", "TravelAgency", "S"),
    ("Game", "Game", "Svr"),
    ("PingPong", "PingPong", "S"),
    ("Battleships", "Battleships", "Svr"),
];

pub fn load(stem: &str, entry: &str) -> GlobalType {
    let path = protocols_dir().join(format!("{stem}.scr"));
    let text = std::fs::read_to_string(&path).expect("corpus file");
    let module = parse_module_named(&text, &path.display().to_string()).expect("corpus parses");
    module.elaborate(entry, None).expect("corpus elaborates")
}

pub fn corpus() -> Vec<(&'static str, GlobalType, Role)> {
    CORPUS.iter().map(|(stem, entry, router)| (*entry, load(stem, entry), Role::from_static(router))).collect()
}
