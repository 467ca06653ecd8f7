mod common;

use std::collections::BTreeSet;

use common::gen::Gen;
use common::{corpus, g_ex, g_ex_encoded, g_travel_routed, oracle};
use routed_mpst::analysis::global_traces;
use routed_mpst::encoding::encode_global;
use routed_mpst::GlobalType;

const DEPTH: usize = 6;

fn as_text(g: &GlobalType, depth: usize) -> BTreeSet<String> {
    let set = global_traces(g, depth).expect("trace enumeration");
    set.traces.iter().map(|t| t.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")).collect()
}

fn agree(name: &str, g: &GlobalType, depth: usize) {
    let ours = as_text(g, depth);
    let reference = oracle::traces(g, depth);
    let missing: Vec<_> = reference.difference(&ours).take(3).collect();
    let extra: Vec<_> = ours.difference(&reference).take(3).collect();
    assert!(missing.is_empty() && extra.is_empty(), "{name}: missing {missing:?}, extra {extra:?}");
}

#[test]
fn corpus_agrees_with_reference_enumerator() {
    for (name, g, s) in corpus() {
        agree(name, &g, DEPTH);
        agree(&format!("{name} via {s}"), &encode_global(&g, &s).unwrap(), DEPTH);
    }
}

#[test]
fn small_examples_agree() {
    agree("g_ex", &g_ex(), DEPTH);
    agree("g_ex encoded", &g_ex_encoded(), DEPTH);
    agree("travel routed", &g_travel_routed(), DEPTH);
    let witness = "s->q!M2 s.(p->q!M1) s.(p->q?M1) s->q?M2";
    assert!(oracle::traces(&g_ex_encoded(), 4).contains(witness));
}

#[test]
fn generated_types_agree() {
    for seed in 0..64 {
        let g = Gen::new(seed).global(4);
        agree(&format!("seed {seed}: {g}"), &g, 5);
    }
}
