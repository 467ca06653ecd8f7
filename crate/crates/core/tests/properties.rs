mod common;

use common::props::{self, Outcome, CASES};
use routed_mpst::encoding::encode_global;
use routed_mpst::wellformed::{is_wf, is_wf_routed};

fn holds(o: Outcome) {
    println!("{o}");
    assert!(o.passed(), "{o}");
    assert!(o.checked >= 1, "{o}: premise never held");
}

#[test]
fn projection_commutes_with_encoding() {
    holds(props::projection_commutes_with_encoding(CASES));
}

#[test]
fn encoding_defines_centroid() {
    holds(props::encoding_defines_centroid(CASES));
}

#[test]
fn encoding_preserves_participants() {
    holds(props::encoding_preserves_participants(CASES));
}

#[test]
fn encoding_preserves_privacy() {
    holds(props::encoding_preserves_privacy(CASES));
}

#[test]
fn encoding_permutes_with_substitution() {
    holds(props::encoding_permutes_with_substitution(CASES));
}

#[test]
fn projection_and_participation() {
    holds(props::projection_and_participation(CASES));
}

#[test]
fn wf_implies_routed_wf_of_encoding() {
    holds(props::wf_implies_routed_wf(CASES));
}

#[test]
fn routed_wf_of_encoding_does_not_imply_wf() {
    let o = props::routed_wf_implies_wf(CASES);
    println!("{o}");
    assert!(!o.passed(), "generator no longer finds a counterexample to the converse");
}

#[test]
fn converse_counterexample_by_hand() {
    let (g, s) = props::converse_counterexample();
    let enc = encode_global(&g, &s).unwrap();
    assert!(is_wf_routed(&enc, &s));
    assert!(!is_wf(&g));
}

#[test]
fn preservation() {
    holds(props::preservation(CASES));
}

#[test]
fn progress() {
    holds(props::progress(CASES));
}

#[test]
fn local_steps_preserve_merge() {
    holds(props::local_steps_preserve_merge(CASES));
}
