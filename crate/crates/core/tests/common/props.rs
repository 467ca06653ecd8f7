//! Seeded property suites over generated global types. Shared by the
//! `properties` tests and the acceptance run.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use routed_mpst::encoding::{encode_global, encode_local};
use routed_mpst::projection::{merge, project};
use routed_mpst::semantics::{global_steps, local_steps};
use routed_mpst::wellformed::{is_centroid, is_wf, is_wf_routed};
use routed_mpst::{Arm, GlobalType, LocalType, Role};

use super::gen::{Gen, ROLES};
use super::{comm, one};

pub const CASES: u64 = 256;
const SIZE: usize = 6;
/// Reachable states examined per generated type.
const REACH_CAP: usize = 48;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub name: &'static str,
    pub cases: u64,
    /// Cases where the premise held, so the conclusion was actually checked.
    pub checked: u64,
    pub failure: Option<String>,
}

impl Outcome {
    fn new(name: &'static str) -> Self {
        Outcome { name, cases: 0, checked: 0, failure: None }
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    fn fail(&mut self, seed: u64, msg: String) {
        if self.failure.is_none() {
            self.failure = Some(format!("seed {seed}: {msg}"));
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} cases, {} checked", self.name, self.cases, self.checked)?;
        if let Some(e) = &self.failure {
            write!(f, ", failed at {e}")?;
        }
        Ok(())
    }
}

fn roles() -> impl Iterator<Item = Role> {
    ROLES.iter().map(|r| Role::from_static(r))
}

fn run(name: &'static str, cases: u64, mut body: impl FnMut(u64, &mut Outcome)) -> Outcome {
    let mut out = Outcome::new(name);
    for seed in 0..cases {
        out.cases += 1;
        body(seed, &mut out);
    }
    out
}

/// Keep generating until `target` cases satisfied the premise.
fn run_until(name: &'static str, target: u64, mut body: impl FnMut(u64, &mut Outcome)) -> Outcome {
    let mut out = Outcome::new(name);
    let mut seed = 0;
    while out.checked < target && seed < target * 50 {
        out.cases += 1;
        body(seed, &mut out);
        seed += 1;
    }
    out
}

/// Random type plus a random router.
fn sample(seed: u64) -> (GlobalType, Role) {
    let mut gen = if seed.is_multiple_of(2) { Gen::new(seed) } else { Gen::wf_biased(seed) };
    let g = gen.global(SIZE);
    let s = gen.role();
    (g, s)
}

/// Breadth-first prefix of the reachable state space.
fn reachable(g: &GlobalType, cap: usize) -> Vec<GlobalType> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([g.canonical()]);
    let mut out = Vec::new();
    while let Some(h) = queue.pop_front() {
        if out.len() >= cap {
            break;
        }
        if !seen.insert(h.clone()) {
            continue;
        }
        for (_, next) in global_steps(&h) {
            queue.push_back(next);
        }
        out.push(h);
    }
    out
}

pub fn projection_commutes_with_encoding(cases: u64) -> Outcome {
    run("projection/encoding commutation", cases, |seed, out| {
        let (g, s) = sample(seed);
        let enc = encode_global(&g, &s).expect("canonical input encodes");
        for r in roles().filter(|r| r != &s) {
            let left = project(&enc, &r).ok();
            let right = project(&g, &r).ok().map(|t| encode_local(&t, &r, &s).expect("canonical local encodes"));
            out.checked += 1;
            match (&left, &right) {
                (Some(a), Some(b)) if a.equiv(b) => {}
                (None, None) => {}
                _ => out.fail(seed, format!("{g} via {s} onto {r}: {left:?} vs {right:?}")),
            }
        }
    })
}

pub fn encoding_defines_centroid(cases: u64) -> Outcome {
    run("encoding defines centroid", cases, |seed, out| {
        let (g, s) = sample(seed);
        let enc = encode_global(&g, &s).expect("canonical input encodes");
        out.checked += 1;
        if !is_centroid(&enc, &s) {
            out.fail(seed, format!("{s} is not the centroid of {enc}"));
        }
    })
}

pub fn encoding_preserves_participants(cases: u64) -> Outcome {
    run("encoding preserves participants", cases, |seed, out| {
        let (g, s) = sample(seed);
        let enc = encode_global(&g, &s).expect("canonical input encodes");
        out.checked += 1;
        if !g.participants().is_subset(&enc.participants()) {
            out.fail(seed, format!("{g} loses participants under {s}"));
        }
    })
}

pub fn encoding_preserves_privacy(cases: u64) -> Outcome {
    run_until("encoding preserves privacy", cases, |seed, out| {
        let mut gen = Gen::new(seed);
        let g = gen.global(2);
        let s = gen.role();
        let enc = encode_global(&g, &s).expect("canonical input encodes");
        let before = g.participants();
        let after = enc.participants();
        for r in roles().filter(|r| r != &s && !before.contains(r)) {
            out.checked += 1;
            if after.contains(&r) {
                out.fail(seed, format!("{r} appears in {enc}"));
            }
        }
    })
}

pub fn encoding_permutes_with_substitution(cases: u64) -> Outcome {
    run("encoding/substitution permutation", cases, |seed, out| {
        let mut gen = Gen::new(seed).with_free_var("t");
        let g = gen.global(SIZE);
        let g2 = Gen::new(seed.wrapping_add(1 << 32)).global(3);
        let s = gen.role();
        let enc = |x: &GlobalType| encode_global(x, &s).expect("canonical input encodes");
        let left = enc(&g.substitute("t", &g2));
        let right = enc(&g).substitute("t", &enc(&g2));
        out.checked += 1;
        if !left.equiv(&right) {
            out.fail(seed, format!("{g} [{g2}/t] via {s}: {left} vs {right}"));
        }
    })
}

pub fn projection_and_participation(cases: u64) -> Outcome {
    run("projection and participation", cases, |seed, out| {
        let (g, _) = sample(seed);
        let pt = g.participants();
        for r in roles() {
            // Only meaningful where the projection exists.
            let Ok(t) = project(&g, &r) else { continue };
            out.checked += 1;
            if t.equiv(&LocalType::End) == pt.contains(&r) {
                out.fail(seed, format!("{g} onto {r} gives {t}, participants {pt:?}"));
            }
        }
    })
}

pub fn wf_implies_routed_wf(cases: u64) -> Outcome {
    run_until("wf implies wf^s of the encoding", cases, |seed, out| {
        let (g, s) = sample(seed);
        if !is_wf(&g) {
            return;
        }
        out.checked += 1;
        let enc = encode_global(&g, &s).expect("canonical input encodes");
        if !is_wf_routed(&enc, &s) {
            out.fail(seed, format!("{g} is wf but its encoding via {s} is not"));
        }
    })
}

pub fn routed_wf_implies_wf(cases: u64) -> Outcome {
    run_until("wf^s of the encoding implies wf", cases, |seed, out| {
        let (g, s) = sample(seed);
        let enc = encode_global(&g, &s).expect("canonical input encodes");
        if !is_wf_routed(&enc, &s) {
            return;
        }
        out.checked += 1;
        if !is_wf(&g) {
            out.fail(seed, format!("encoding of {g} via {s} is wf^s but the type is not wf"));
        }
    })
}

/// A -> B { X: S -> C: M, Y: S -> C: N }, routed through S.
pub fn converse_counterexample() -> (GlobalType, Role) {
    let g =
        comm("A", "B", vec![("X", one("S", "C", "M", GlobalType::End)), ("Y", one("S", "C", "N", GlobalType::End))]);
    (g, Role::from_static("S"))
}

fn wf_routed_samples(seed: u64) -> Option<(GlobalType, Role)> {
    let (g, s) = sample(seed);
    let enc = encode_global(&g, &s).ok()?;
    is_wf_routed(&enc, &s).then_some((enc, s))
}

pub fn preservation(cases: u64) -> Outcome {
    run("preservation", cases, |seed, out| {
        let Some((g, s)) = wf_routed_samples(seed) else { return };
        for h in reachable(&g, REACH_CAP) {
            for (l, next) in global_steps(&h) {
                out.checked += 1;
                if !is_wf_routed(&next, &s) {
                    out.fail(seed, format!("{h} --{l}--> {next} leaves wf^{s}"));
                }
            }
        }
    })
}

pub fn progress(cases: u64) -> Outcome {
    run("progress", cases, |seed, out| {
        let Some((g, s)) = wf_routed_samples(seed) else { return };
        for h in reachable(&g, REACH_CAP) {
            out.checked += 1;
            if !is_wf_routed(&h, &s) {
                continue;
            }
            if !h.equiv(&GlobalType::End) && global_steps(&h).is_empty() {
                out.fail(seed, format!("{h} is stuck"));
            }
        }
    })
}

/// Closed subterm choices, with their arms projected onto each third party.
fn sibling_projections(g: &GlobalType, acc: &mut Vec<(Role, Vec<LocalType>)>) {
    let arms: &[Arm<GlobalType>] = match g {
        GlobalType::End | GlobalType::Var(_) => return,
        GlobalType::Rec(_, body) => return sibling_projections(body, acc),
        _ => g.arms(),
    };
    if arms.len() > 1 && arms.iter().all(|a| a.cont.free_vars().is_empty()) {
        let (p, q) = match g {
            GlobalType::Comm { from, to, .. } | GlobalType::Routed { from, to, .. } => (from, to),
            _ => unreachable!("generated types have no transit nodes"),
        };
        for r in roles().filter(|r| r != p && r != q) {
            let ts: Option<Vec<LocalType>> = arms.iter().map(|a| project(&a.cont, &r).ok()).collect();
            if let Some(ts) = ts {
                acc.push((r, ts));
            }
        }
    }
    for a in arms {
        sibling_projections(&a.cont, acc);
    }
}

pub fn local_steps_preserve_merge(cases: u64) -> Outcome {
    run("local steps preserve merge", cases, |seed, out| {
        let mut gen = Gen::wf_biased(seed);
        let g = gen.global(SIZE + 2);
        let s = gen.role();
        let mut pairs = Vec::new();
        sibling_projections(&g, &mut pairs);
        if let Ok(enc) = encode_global(&g, &s) {
            sibling_projections(&enc, &mut pairs);
        }
        for (r, ts) in pairs {
            for (i, t1) in ts.iter().enumerate() {
                for t2 in &ts[i + 1..] {
                    if merge(t1, t2).is_err() {
                        continue;
                    }
                    let s2 = local_steps(t2, &r);
                    for (l, t1n) in local_steps(t1, &r) {
                        for (_, t2n) in s2.iter().filter(|(l2, _)| *l2 == l) {
                            out.checked += 1;
                            if merge(&t1n, t2n).is_err() {
                                out.fail(seed, format!("{t1} and {t2} merge, but not after {l}"));
                            }
                        }
                    }
                }
            }
        }
    })
}

/// Every suite, in a fixed order.
pub fn all(cases: u64) -> Vec<Outcome> {
    vec![
        projection_commutes_with_encoding(cases),
        encoding_defines_centroid(cases),
        encoding_preserves_participants(cases),
        encoding_preserves_privacy(cases),
        encoding_permutes_with_substitution(cases),
        projection_and_participation(cases),
        wf_implies_routed_wf(cases),
        routed_wf_implies_wf(cases),
        preservation(cases),
        progress(cases),
        local_steps_preserve_merge(cases),
    ]
}
