//! Naive reference enumerator for global traces.
//!
//! Reads the reduction rules directly off the syntax, without memoization or
//! canonical forms. Recursion is unfolded eagerly with a per-derivation fuel
//! budget instead of a cycle check, and traces are compared as strings.
//! Step sets are cached per (type, fuel) since nested recursion re-derives
//! the same unfoldings many times.

use std::collections::{BTreeSet, HashMap};

use routed_mpst::{Arm, GlobalType, MsgLabel, Role};

/// Unfoldings allowed along one derivation. Deeper than any nesting in the
/// corpus; a derivation that needs more is looping on a non-participant.
const FUEL: usize = 6;

fn send(from: &Role, to: &Role, via: Option<&Role>, m: &MsgLabel) -> (String, Role) {
    let base = format!("{from}->{to}!{}", m.name);
    let label = match via {
        Some(s) => format!("{s}.({base})"),
        None => base,
    };
    (label, from.clone())
}

fn recv(from: &Role, to: &Role, via: Option<&Role>, m: &MsgLabel) -> (String, Role) {
    let base = format!("{from}->{to}?{}", m.name);
    let label = match via {
        Some(s) => format!("{s}.({base})"),
        None => base,
    };
    (label, to.clone())
}

type Step = ((String, Role), GlobalType);

fn with_arms(g: &GlobalType, arms: Vec<Arm<GlobalType>>) -> GlobalType {
    match g {
        GlobalType::Comm { from, to, .. } => GlobalType::Comm { from: from.clone(), to: to.clone(), arms },
        GlobalType::Routed { from, to, via, .. } => {
            GlobalType::Routed { from: from.clone(), to: to.clone(), via: via.clone(), arms }
        }
        GlobalType::TransitComm { from, to, chosen, .. } => {
            GlobalType::TransitComm { from: from.clone(), to: to.clone(), chosen: chosen.clone(), arms }
        }
        GlobalType::TransitRouted { from, to, via, chosen, .. } => GlobalType::TransitRouted {
            from: from.clone(),
            to: to.clone(),
            via: via.clone(),
            chosen: chosen.clone(),
            arms,
        },
        _ => unreachable!("only interaction nodes have arms"),
    }
}

type Cache = HashMap<(GlobalType, usize), Vec<Step>>;

/// Every one-step reduction of `g`, with its label text and subject.
pub fn steps(g: &GlobalType, fuel: usize) -> Vec<Step> {
    cached_steps(g, fuel, &mut Cache::new())
}

fn cached_steps(g: &GlobalType, fuel: usize, cache: &mut Cache) -> Vec<Step> {
    let key = (g.clone(), fuel);
    if let Some(hit) = cache.get(&key) {
        return hit.clone();
    }
    let out = derive(g, fuel, cache);
    cache.insert(key, out.clone());
    out
}

fn derive(g: &GlobalType, fuel: usize, cache: &mut Cache) -> Vec<Step> {
    let mut out = Vec::new();
    match g {
        GlobalType::End | GlobalType::Var(_) => {}
        GlobalType::Rec(t, body) => {
            if fuel > 0 {
                out = cached_steps(&body.substitute(t, g), fuel - 1, cache);
            }
        }
        GlobalType::Comm { from: p, to: q, arms } | GlobalType::Routed { from: p, to: q, arms, .. } => {
            let via = match g {
                GlobalType::Routed { via, .. } => Some(via),
                _ => None,
            };
            // Emission of each label.
            for a in arms {
                let target = match via {
                    None => GlobalType::TransitComm {
                        from: p.clone(),
                        to: q.clone(),
                        chosen: a.label.clone(),
                        arms: arms.clone(),
                    },
                    Some(s) => GlobalType::TransitRouted {
                        from: p.clone(),
                        to: q.clone(),
                        via: s.clone(),
                        chosen: a.label.clone(),
                        arms: arms.clone(),
                    },
                };
                out.push((send(p, q, via, &a.label), target));
            }
            // Every arm steps with the same label, whose subject is neither p nor q.
            let per_arm: Vec<Vec<Step>> = arms.iter().map(|a| cached_steps(&a.cont, fuel, cache)).collect();
            let labels: BTreeSet<(String, Role)> = per_arm[0]
                .iter()
                .map(|(l, _)| l.clone())
                .filter(|(_, subj)| subj != p && subj != q)
                .filter(|l| per_arm.iter().all(|ss| ss.iter().any(|(m, _)| m == l)))
                .collect();
            for l in labels {
                let choices: Vec<Vec<&GlobalType>> =
                    per_arm.iter().map(|ss| ss.iter().filter(|(m, _)| *m == l).map(|(_, g)| g).collect()).collect();
                let mut combos: Vec<Vec<GlobalType>> = vec![Vec::new()];
                for options in &choices {
                    let mut next = Vec::new();
                    for prefix in &combos {
                        for o in options {
                            let mut v = prefix.clone();
                            v.push((*o).clone());
                            next.push(v);
                        }
                    }
                    combos = next;
                }
                for conts in combos {
                    let new_arms =
                        arms.iter().zip(conts).map(|(a, k)| Arm { label: a.label.clone(), cont: k }).collect();
                    out.push((l.clone(), with_arms(g, new_arms)));
                }
            }
        }
        GlobalType::TransitComm { from: p, to: q, chosen, arms }
        | GlobalType::TransitRouted { from: p, to: q, chosen, arms, .. } => {
            let via = match g {
                GlobalType::TransitRouted { via, .. } => Some(via),
                _ => None,
            };
            let j = arms.iter().position(|a| a.label.name == chosen.name).expect("chosen label has an arm");
            out.push((recv(p, q, via, chosen), arms[j].cont.clone()));
            for (l, k) in cached_steps(&arms[j].cont, fuel, cache) {
                if &l.1 != q {
                    let mut new_arms = arms.clone();
                    new_arms[j].cont = k;
                    out.push((l, with_arms(g, new_arms)));
                }
            }
        }
    }
    out
}

/// All traces of length at most `depth`, as space-separated label text.
pub fn traces(g: &GlobalType, depth: usize) -> BTreeSet<String> {
    fn go(g: &GlobalType, depth: usize, prefix: &mut Vec<String>, acc: &mut BTreeSet<String>, cache: &mut Cache) {
        acc.insert(prefix.join(" "));
        if depth == 0 {
            return;
        }
        for ((l, _), next) in cached_steps(g, FUEL, cache) {
            prefix.push(l);
            go(&next, depth - 1, prefix, acc, cache);
            prefix.pop();
        }
    }
    let mut acc = BTreeSet::new();
    go(g, depth, &mut Vec::new(), &mut acc, &mut Cache::new());
    acc
}
