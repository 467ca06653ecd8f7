//! Labelled transition systems over global types, local types and
//! configurations, together with buffer projection and subtyping.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use log::debug;

use crate::projection::{project, MergeFailure};
use crate::types::{arm_for, ActionKind, ActionLabel, Arm, GlobalType, LocalType, MsgLabel, Role};

/// The global reduction rules, individually switchable for mutation testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GlobalRule {
    /// Direct send into the in-transit form.
    Gr1,
    /// Direct receive out of the in-transit form.
    Gr2,
    /// Recursion unfolding.
    Gr3,
    /// Step under a direct prefix that does not involve its roles.
    Gr4,
    /// Step inside the chosen continuation of a direct in-transit message.
    Gr5,
    /// Routed send.
    Gr6,
    /// Routed receive.
    Gr7,
    /// Step under a routed prefix.
    Gr8,
    /// Step inside the chosen continuation of a routed in-transit message.
    Gr9,
}

impl GlobalRule {
    pub const ALL: [GlobalRule; 9] = [
        GlobalRule::Gr1,
        GlobalRule::Gr2,
        GlobalRule::Gr3,
        GlobalRule::Gr4,
        GlobalRule::Gr5,
        GlobalRule::Gr6,
        GlobalRule::Gr7,
        GlobalRule::Gr8,
        GlobalRule::Gr9,
    ];

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleSet(u16);

impl RuleSet {
    pub fn all() -> Self {
        RuleSet(GlobalRule::ALL.iter().fold(0, |acc, r| acc | r.bit()))
    }

    pub fn without(self, rule: GlobalRule) -> Self {
        RuleSet(self.0 & !rule.bit())
    }

    pub fn contains(self, rule: GlobalRule) -> bool {
        self.0 & rule.bit() != 0
    }
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::all()
    }
}

fn with_arm(arms: &[Arm<GlobalType>], label: &MsgLabel, cont: GlobalType) -> Vec<Arm<GlobalType>> {
    arms.iter().map(|a| if &a.label == label { Arm::new(a.label.clone(), cont.clone()) } else { a.clone() }).collect()
}

/// For each label enabled in every arm, all combinations of arm successors.
fn common_steps<T: Clone + Ord>(
    per_arm: Vec<Vec<(ActionLabel, T)>>,
    allowed: impl Fn(&ActionLabel) -> bool,
) -> Vec<(ActionLabel, Vec<T>)> {
    let Some(first) = per_arm.first() else { return Vec::new() };
    let labels: BTreeSet<&ActionLabel> = first.iter().map(|(l, _)| l).filter(|l| allowed(l)).collect();
    let mut out = Vec::new();
    for l in labels {
        let mut combos: Vec<Vec<T>> = vec![Vec::new()];
        for steps in &per_arm {
            let succs: Vec<&T> = steps.iter().filter(|(m, _)| m == l).map(|(_, t)| t).collect();
            if succs.is_empty() {
                combos.clear();
                break;
            }
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    succs.iter().map(move |s| {
                        let mut c = c.clone();
                        c.push((*s).clone());
                        c
                    })
                })
                .collect();
        }
        for c in combos {
            out.push((l.clone(), c));
        }
    }
    out
}

fn raw_global_steps(g: &GlobalType, rules: RuleSet) -> Vec<(ActionLabel, GlobalType)> {
    gsteps(g, rules, &mut Vec::new())
}

/// `unfolding` holds the recursive terms unfolded on the current derivation
/// path. Rec bodies contain no in-transit nodes, so every prefix rule inside
/// them needs all branches to step; a derivation that reaches the same
/// recursive term again would have to repeat forever, and is cut.
fn gsteps(g: &GlobalType, rules: RuleSet, unfolding: &mut Vec<GlobalType>) -> Vec<(ActionLabel, GlobalType)> {
    match g {
        GlobalType::End | GlobalType::Var(_) => Vec::new(),
        GlobalType::Rec(..) => {
            if !rules.contains(GlobalRule::Gr3) || unfolding.contains(g) {
                return Vec::new();
            }
            unfolding.push(g.clone());
            let out = gsteps(&g.unfold_once().expect("rec unfolds"), rules, unfolding);
            unfolding.pop();
            out
        }
        GlobalType::Comm { from, to, arms } => {
            let mut out = Vec::new();
            if rules.contains(GlobalRule::Gr1) {
                for a in arms {
                    out.push((
                        ActionLabel::send(from.clone(), to.clone(), a.label.clone()),
                        GlobalType::TransitComm {
                            from: from.clone(),
                            to: to.clone(),
                            chosen: a.label.clone(),
                            arms: arms.clone(),
                        },
                    ));
                }
            }
            if rules.contains(GlobalRule::Gr4) {
                let per_arm = arms.iter().map(|a| gsteps(&a.cont, rules, unfolding)).collect();
                for (l, conts) in common_steps(per_arm, |l| l.subject() != from && l.subject() != to) {
                    let arms = arms.iter().zip(conts).map(|(a, c)| Arm::new(a.label.clone(), c)).collect();
                    out.push((l, GlobalType::comm(from.clone(), to.clone(), arms)));
                }
            }
            out
        }
        GlobalType::TransitComm { from, to, chosen, arms } => {
            let mut out = Vec::new();
            let cont = &arm_for(arms, chosen).expect("chosen is a branch").cont;
            if rules.contains(GlobalRule::Gr2) {
                out.push((ActionLabel::recv(from.clone(), to.clone(), chosen.clone()), cont.clone()));
            }
            if rules.contains(GlobalRule::Gr5) {
                for (l, next) in gsteps(cont, rules, unfolding) {
                    if l.subject() != to {
                        out.push((
                            l,
                            GlobalType::TransitComm {
                                from: from.clone(),
                                to: to.clone(),
                                chosen: chosen.clone(),
                                arms: with_arm(arms, chosen, next),
                            },
                        ));
                    }
                }
            }
            out
        }
        GlobalType::Routed { from, to, via, arms } => {
            let mut out = Vec::new();
            if rules.contains(GlobalRule::Gr6) {
                for a in arms {
                    out.push((
                        ActionLabel::routed_send(via.clone(), from.clone(), to.clone(), a.label.clone()),
                        GlobalType::TransitRouted {
                            from: from.clone(),
                            to: to.clone(),
                            via: via.clone(),
                            chosen: a.label.clone(),
                            arms: arms.clone(),
                        },
                    ));
                }
            }
            if rules.contains(GlobalRule::Gr8) {
                let per_arm = arms.iter().map(|a| gsteps(&a.cont, rules, unfolding)).collect();
                for (l, conts) in common_steps(per_arm, |l| l.subject() != from && l.subject() != to) {
                    let arms = arms.iter().zip(conts).map(|(a, c)| Arm::new(a.label.clone(), c)).collect();
                    out.push((l, GlobalType::routed(from.clone(), to.clone(), via.clone(), arms)));
                }
            }
            out
        }
        GlobalType::TransitRouted { from, to, via, chosen, arms } => {
            let mut out = Vec::new();
            let cont = &arm_for(arms, chosen).expect("chosen is a branch").cont;
            if rules.contains(GlobalRule::Gr7) {
                out.push((
                    ActionLabel::routed_recv(via.clone(), from.clone(), to.clone(), chosen.clone()),
                    cont.clone(),
                ));
            }
            if rules.contains(GlobalRule::Gr9) {
                for (l, next) in gsteps(cont, rules, unfolding) {
                    if l.subject() != to {
                        out.push((
                            l,
                            GlobalType::TransitRouted {
                                from: from.clone(),
                                to: to.clone(),
                                via: via.clone(),
                                chosen: chosen.clone(),
                                arms: with_arm(arms, chosen, next),
                            },
                        ));
                    }
                }
            }
            out
        }
    }
}

fn normalize<T: Ord>(mut steps: Vec<(ActionLabel, T)>) -> Vec<(ActionLabel, T)> {
    steps.sort();
    steps.dedup();
    steps
}

/// One-step successors of `g` under the full rule set. Successors are in
/// canonical form, duplicate-free and sorted by label then successor.
pub fn global_steps(g: &GlobalType) -> Vec<(ActionLabel, GlobalType)> {
    global_steps_with(g, RuleSet::all())
}

pub fn global_steps_with(g: &GlobalType, rules: RuleSet) -> Vec<(ActionLabel, GlobalType)> {
    normalize(raw_global_steps(g, rules).into_iter().map(|(l, g)| (l, g.canonical())).collect())
}

fn raw_local_steps(t: &LocalType, me: &Role) -> Vec<(ActionLabel, LocalType)> {
    lsteps(t, me, &mut Vec::new())
}

fn lsteps(t: &LocalType, me: &Role, unfolding: &mut Vec<LocalType>) -> Vec<(ActionLabel, LocalType)> {
    let arms_with = |arms: &[Arm<LocalType>], conts: Vec<LocalType>| -> Vec<Arm<LocalType>> {
        arms.iter().zip(conts).map(|(a, c)| Arm::new(a.label.clone(), c)).collect()
    };
    let mut per_arm = |arms: &[Arm<LocalType>]| arms.iter().map(|a| lsteps(&a.cont, me, unfolding)).collect::<Vec<_>>();
    // Routing actions of `me` that do not involve `peer` as subject.
    let routing_by_me = |l: &ActionLabel, peer: &Role| l.via.as_ref() == Some(me) && l.subject() != peer;
    match t {
        LocalType::End | LocalType::Var(_) => Vec::new(),
        LocalType::Rec(..) => {
            if unfolding.contains(t) {
                return Vec::new();
            }
            unfolding.push(t.clone());
            let out = lsteps(&t.unfold_once().expect("rec unfolds"), me, unfolding);
            unfolding.pop();
            out
        }
        LocalType::Select { to, arms } => {
            let mut out: Vec<_> = arms
                .iter()
                .map(|a| (ActionLabel::send(me.clone(), to.clone(), a.label.clone()), a.cont.clone()))
                .collect();
            for (l, conts) in common_steps(per_arm(arms), |l| routing_by_me(l, to)) {
                out.push((l, LocalType::Select { to: to.clone(), arms: arms_with(arms, conts) }));
            }
            out
        }
        LocalType::Branch { from, arms } => {
            let mut out: Vec<_> = arms
                .iter()
                .map(|a| (ActionLabel::recv(from.clone(), me.clone(), a.label.clone()), a.cont.clone()))
                .collect();
            for (l, conts) in common_steps(per_arm(arms), |l| routing_by_me(l, from)) {
                out.push((l, LocalType::Branch { from: from.clone(), arms: arms_with(arms, conts) }));
            }
            out
        }
        LocalType::RoutedSelect { to, via, arms } => arms
            .iter()
            .map(|a| (ActionLabel::routed_send(via.clone(), me.clone(), to.clone(), a.label.clone()), a.cont.clone()))
            .collect(),
        LocalType::RoutedBranch { from, via, arms } => arms
            .iter()
            .map(|a| (ActionLabel::routed_recv(via.clone(), from.clone(), me.clone(), a.label.clone()), a.cont.clone()))
            .collect(),
        LocalType::Router { from, to, arms } => {
            let mut out: Vec<_> = arms
                .iter()
                .map(|a| {
                    (
                        ActionLabel::routed_send(me.clone(), from.clone(), to.clone(), a.label.clone()),
                        LocalType::RouterTransit {
                            from: from.clone(),
                            to: to.clone(),
                            chosen: a.label.clone(),
                            arms: arms.clone(),
                        },
                    )
                })
                .collect();
            for (l, conts) in common_steps(per_arm(arms), |l| l.subject() != from && l.subject() != to) {
                out.push((l, LocalType::Router { from: from.clone(), to: to.clone(), arms: arms_with(arms, conts) }));
            }
            out
        }
        LocalType::RouterTransit { from, to, chosen, arms } => {
            let cont = &arm_for(arms, chosen).expect("chosen is a branch").cont;
            let mut out =
                vec![(ActionLabel::routed_recv(me.clone(), from.clone(), to.clone(), chosen.clone()), cont.clone())];
            for (l, next) in lsteps(cont, me, unfolding) {
                if l.subject() != to {
                    let arms = arms
                        .iter()
                        .map(|a| if &a.label == chosen { Arm::new(a.label.clone(), next.clone()) } else { a.clone() })
                        .collect();
                    out.push((
                        l,
                        LocalType::RouterTransit { from: from.clone(), to: to.clone(), chosen: chosen.clone(), arms },
                    ));
                }
            }
            out
        }
    }
}

/// One-step successors of local type `t` as seen by role `me`, which fills in
/// the missing endpoint of direct labels. Successors are canonical.
pub fn local_steps(t: &LocalType, me: &Role) -> Vec<(ActionLabel, LocalType)> {
    normalize(raw_local_steps(t, me).into_iter().map(|(l, t)| (l, t.canonical())).collect())
}

/// Local types of every participant plus one FIFO buffer per ordered pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub locals: BTreeMap<Role, LocalType>,
    pub buffers: BTreeMap<(Role, Role), VecDeque<MsgLabel>>,
}

impl Configuration {
    /// Configuration with all buffers empty.
    pub fn new(locals: BTreeMap<Role, LocalType>) -> Self {
        let mut buffers = BTreeMap::new();
        for p in locals.keys() {
            for q in locals.keys() {
                if p != q {
                    buffers.insert((p.clone(), q.clone()), VecDeque::new());
                }
            }
        }
        Configuration { locals, buffers }
    }

    pub fn roles(&self) -> impl Iterator<Item = &Role> {
        self.locals.keys()
    }

    pub fn canonical(&self) -> Configuration {
        Configuration {
            locals: self.locals.iter().map(|(r, t)| (r.clone(), t.canonical())).collect(),
            buffers: self.buffers.clone(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.locals.values().all(|t| matches!(t.unfold_head(), LocalType::End))
            && self.buffers.values().all(VecDeque::is_empty)
    }

    pub fn buffer(&self, from: &Role, to: &Role) -> Option<&VecDeque<MsgLabel>> {
        self.buffers.get(&(from.clone(), to.clone()))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, t) in &self.locals {
            writeln!(f, "{r}: {t}")?;
        }
        for ((p, q), w) in &self.buffers {
            if !w.is_empty() {
                let msgs: Vec<&str> = w.iter().map(|m| m.name.as_str()).collect();
                writeln!(f, "w[{p},{q}] = {}", msgs.join("."))?;
            }
        }
        Ok(())
    }
}

fn head_matches(c: &Configuration, from: &Role, to: &Role, msg: &MsgLabel) -> bool {
    c.buffer(from, to).and_then(|w| w.front()).is_some_and(|m| m == msg)
}

/// One-step successors of a configuration, canonical and sorted.
pub fn config_steps(c: &Configuration) -> Vec<(ActionLabel, Configuration)> {
    let mut out = Vec::new();
    for (r, t) in &c.locals {
        for (l, next) in raw_local_steps(t, r) {
            if l.subject() != r || l.via.as_ref() == Some(r) {
                continue;
            }
            let (from, to) = (&l.from, &l.to);
            let mut base = c.clone();
            base.locals.insert(r.clone(), next);
            match l.kind {
                ActionKind::DirectSend => {
                    base.buffers.entry((from.clone(), to.clone())).or_default().push_back(l.msg.clone());
                    out.push((l, base));
                }
                ActionKind::DirectRecv => {
                    if head_matches(c, from, to, &l.msg) {
                        base.buffers.get_mut(&(from.clone(), to.clone())).expect("buffer").pop_front();
                        out.push((l, base));
                    }
                }
                ActionKind::RoutedSend | ActionKind::RoutedRecv => {
                    let send = l.kind == ActionKind::RoutedSend;
                    if !send && !head_matches(c, from, to, &l.msg) {
                        continue;
                    }
                    let s = l.via.as_ref().expect("routed label has a router");
                    let Some(ts) = c.locals.get(s) else { continue };
                    for (m, ts_next) in raw_local_steps(ts, s) {
                        if m != l {
                            continue;
                        }
                        let mut next_c = base.clone();
                        next_c.locals.insert(s.clone(), ts_next);
                        let w = next_c.buffers.entry((from.clone(), to.clone())).or_default();
                        if send {
                            w.push_back(l.msg.clone());
                        } else {
                            w.pop_front();
                        }
                        out.push((l.clone(), next_c));
                    }
                }
            }
        }
    }
    normalize(out.into_iter().map(|(l, c)| (l, c.canonical())).collect())
}

/// Buffer contents recorded by the in-transit constructs of `g`.
pub fn project_buffers(g: &GlobalType) -> BTreeMap<(Role, Role), VecDeque<MsgLabel>> {
    fn go(g: &GlobalType, acc: &mut BTreeMap<(Role, Role), VecDeque<MsgLabel>>) {
        match g {
            GlobalType::End | GlobalType::Var(_) => {}
            GlobalType::Rec(_, body) => go(body, acc),
            GlobalType::Comm { arms, .. } | GlobalType::Routed { arms, .. } => go(&arms[0].cont, acc),
            GlobalType::TransitComm { from, to, chosen, arms }
            | GlobalType::TransitRouted { from, to, chosen, arms, .. } => {
                acc.entry((from.clone(), to.clone())).or_default().push_back(chosen.clone());
                go(&arm_for(arms, chosen).expect("chosen is a branch").cont, acc);
            }
        }
    }
    let mut acc = BTreeMap::new();
    go(g, &mut acc);
    acc
}

/// Project `g` onto each of `roles`, with buffers from its in-transit
/// constructs.
pub fn project_configuration_over(g: &GlobalType, roles: &BTreeSet<Role>) -> Result<Configuration, MergeFailure> {
    let mut locals = BTreeMap::new();
    for r in roles {
        locals.insert(r.clone(), project(g, r)?);
    }
    let mut c = Configuration::new(locals);
    for (k, w) in project_buffers(g) {
        c.buffers.insert(k, w);
    }
    Ok(c)
}

pub fn project_configuration(g: &GlobalType) -> Result<Configuration, MergeFailure> {
    project_configuration_over(g, &g.participants())
}

pub const DEFAULT_SUBTYPE_FUEL: usize = 8;

/// Subtyping on local types: a branch offering more labels is a subtype of
/// one offering fewer; selections and routing constructs are invariant in
/// their label sets.
pub fn subtype_local(a: &LocalType, b: &LocalType) -> bool {
    subtype_local_with_fuel(a, b, DEFAULT_SUBTYPE_FUEL)
}

pub fn subtype_local_with_fuel(a: &LocalType, b: &LocalType, fuel: usize) -> bool {
    sub(a, b, &mut HashSet::new(), fuel)
}

fn sub(a: &LocalType, b: &LocalType, seen: &mut HashSet<(LocalType, LocalType)>, fuel: usize) -> bool {
    if a == b || seen.contains(&(a.clone(), b.clone())) {
        return true;
    }
    if matches!(a, LocalType::Rec(..)) || matches!(b, LocalType::Rec(..)) {
        if fuel == 0 {
            debug!("subtyping ran out of fuel comparing `{a}` and `{b}`");
            return false;
        }
        seen.insert((a.clone(), b.clone()));
        return sub(&a.unfold_head(), &b.unfold_head(), seen, fuel - 1);
    }
    let wider = |xs: &[Arm<LocalType>], ys: &[Arm<LocalType>], seen: &mut HashSet<_>| {
        ys.iter().all(|y| arm_for(xs, &y.label).is_some_and(|x| sub(&x.cont, &y.cont, seen, fuel)))
    };
    let same = |xs: &[Arm<LocalType>], ys: &[Arm<LocalType>], seen: &mut HashSet<_>| {
        xs.len() == ys.len()
            && ys.iter().all(|y| arm_for(xs, &y.label).is_some_and(|x| sub(&x.cont, &y.cont, seen, fuel)))
    };
    match (a, b) {
        (LocalType::End, LocalType::End) => true,
        (LocalType::Var(x), LocalType::Var(y)) => x == y,
        (LocalType::Branch { from: p, arms: xs }, LocalType::Branch { from: q, arms: ys }) => {
            p == q && wider(xs, ys, seen)
        }
        (
            LocalType::RoutedBranch { from: p, via: s, arms: xs },
            LocalType::RoutedBranch { from: q, via: t, arms: ys },
        ) => p == q && s == t && wider(xs, ys, seen),
        (LocalType::Select { to: p, arms: xs }, LocalType::Select { to: q, arms: ys }) => p == q && same(xs, ys, seen),
        (LocalType::RoutedSelect { to: p, via: s, arms: xs }, LocalType::RoutedSelect { to: q, via: t, arms: ys }) => {
            p == q && s == t && same(xs, ys, seen)
        }
        (LocalType::Router { from: p, to: q, arms: xs }, LocalType::Router { from: p2, to: q2, arms: ys }) => {
            p == p2 && q == q2 && same(xs, ys, seen)
        }
        (
            LocalType::RouterTransit { from: p, to: q, chosen: j, arms: xs },
            LocalType::RouterTransit { from: p2, to: q2, chosen: k, arms: ys },
        ) => p == p2 && q == q2 && j == k && same(xs, ys, seen),
        _ => false,
    }
}

/// Pointwise subtyping of locals with identical buffers.
pub fn subtype_config(a: &Configuration, b: &Configuration) -> bool {
    a.buffers == b.buffers
        && a.locals.len() == b.locals.len()
        && a.locals.iter().all(|(r, t)| b.locals.get(r).is_some_and(|u| subtype_local(t, u)))
}
