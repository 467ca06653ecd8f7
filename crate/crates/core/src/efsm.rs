//! Endpoint finite state machines built from local types, with DOT and JSON
//! renderings.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde_json::{json, Value};

use crate::types::{arm_for, LocalType, MsgLabel, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateKind {
    Send,
    Receive,
    Terminal,
}

impl StateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StateKind::Send => "send",
            StateKind::Receive => "receive",
            StateKind::Terminal => "terminal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Send,
    Receive,
}

impl Direction {
    pub fn symbol(self) -> char {
        match self {
            Direction::Send => '!',
            Direction::Receive => '?',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub id: usize,
    pub kind: StateKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub peer: Role,
    pub dir: Direction,
    pub label: MsgLabel,
    /// Router for routed transitions. Equal to the machine's own role for the
    /// forwarding transitions of a router.
    pub via: Option<Role>,
}

impl Transition {
    /// `B?Suggest`, with ` (via S)` appended for routed transitions.
    pub fn display_label(&self) -> String {
        let mut s = format!("{}{}{}", self.peer, self.dir.symbol(), self.label.name);
        if let Some(v) = &self.via {
            let _ = write!(s, " (via {v})");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Efsm {
    pub role: Role,
    pub states: Vec<State>,
    pub transitions: Vec<Transition>,
    pub initial: usize,
}

impl Efsm {
    pub fn state(&self, id: usize) -> Option<&State> {
        self.states.iter().find(|s| s.id == id)
    }

    pub fn outgoing(&self, id: usize) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.from == id)
    }

    pub fn terminal_states(&self) -> impl Iterator<Item = &State> {
        self.states.iter().filter(|s| s.kind == StateKind::Terminal)
    }

    /// True if any transition forwards traffic on behalf of other roles.
    pub fn has_routing(&self) -> bool {
        self.transitions.iter().any(|t| t.via.as_ref() == Some(&self.role))
    }

    pub fn to_json(&self) -> Value {
        let states: Vec<Value> = self.states.iter().map(|s| json!({"id": s.id, "kind": s.kind.as_str()})).collect();
        let transitions: Vec<Value> = self
            .transitions
            .iter()
            .map(|t| {
                let mut v = json!({
                    "from": t.from,
                    "to": t.to,
                    "peer": t.peer.as_str(),
                    "dir": t.dir.symbol().to_string(),
                    "label": t.label.name,
                    "payload": t.label.payload,
                });
                if let Some(via) = &t.via {
                    v["via"] = json!(via.as_str());
                }
                v
            })
            .collect();
        json!({
            "role": self.role.as_str(),
            "initial": self.initial,
            "states": states,
            "transitions": transitions,
        })
    }

    /// Pretty JSON with sorted keys.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json value serializes");
        s.push('\n');
        s
    }
}

impl fmt::Display for Efsm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "role {} initial {}", self.role, self.initial)?;
        for s in &self.states {
            writeln!(f, "state {} {}", s.id, s.kind.as_str())?;
        }
        for t in &self.transitions {
            writeln!(f, "{} -> {} {}", t.from, t.to, t.display_label())?;
        }
        Ok(())
    }
}

enum Pending {
    Id(usize),
    Terminal,
}

struct Builder<'a> {
    me: &'a Role,
    ids: HashMap<LocalType, usize>,
    kinds: Vec<(usize, StateKind)>,
    edges: Vec<(usize, Pending, Role, Direction, MsgLabel, Option<Role>)>,
    next: usize,
}

impl Builder<'_> {
    fn visit(&mut self, t: &LocalType) -> Pending {
        let t = t.unfold_head();
        if matches!(t, LocalType::End | LocalType::Var(_)) {
            return Pending::Terminal;
        }
        let key = t.canonical();
        if let Some(id) = self.ids.get(&key) {
            return Pending::Id(*id);
        }
        let id = self.next;
        self.next += 1;
        self.ids.insert(key, id);
        let me = self.me.clone();
        let (kind, peer, dir, via) = match &t {
            LocalType::Select { to, .. } => (StateKind::Send, to, Direction::Send, None),
            LocalType::RoutedSelect { to, via, .. } => (StateKind::Send, to, Direction::Send, Some(via.clone())),
            LocalType::Branch { from, .. } => (StateKind::Receive, from, Direction::Receive, None),
            LocalType::RoutedBranch { from, via, .. } => {
                (StateKind::Receive, from, Direction::Receive, Some(via.clone()))
            }
            LocalType::Router { from, .. } => (StateKind::Receive, from, Direction::Receive, Some(me)),
            LocalType::RouterTransit { to, .. } => (StateKind::Send, to, Direction::Send, Some(me)),
            LocalType::End | LocalType::Var(_) | LocalType::Rec(..) => unreachable!("unfolded non-terminal"),
        };
        self.kinds.push((id, kind));
        let peer = peer.clone();
        match &t {
            LocalType::Router { from, to, arms } => {
                for a in arms {
                    let transit = LocalType::RouterTransit {
                        from: from.clone(),
                        to: to.clone(),
                        chosen: a.label.clone(),
                        arms: arms.clone(),
                    };
                    let target = self.visit(&transit);
                    self.edges.push((id, target, peer.clone(), dir, a.label.clone(), via.clone()));
                }
            }
            LocalType::RouterTransit { chosen, arms, .. } => {
                let arm = arm_for(arms, chosen).expect("chosen is a branch");
                let target = self.visit(&arm.cont);
                self.edges.push((id, target, peer, dir, arm.label.clone(), via));
            }
            other => {
                for a in other.arms() {
                    let target = self.visit(&a.cont);
                    self.edges.push((id, target, peer.clone(), dir, a.label.clone(), via.clone()));
                }
            }
        }
        Pending::Id(id)
    }
}

/// Build the state machine of local type `t` for role `me`.
///
/// States are numbered from 1 in depth-first pre-order following branch
/// order, and the terminal state, if any, is numbered last.
pub fn build_efsm(t: &LocalType, me: &Role) -> Efsm {
    let mut b = Builder { me, ids: HashMap::new(), kinds: Vec::new(), edges: Vec::new(), next: 1 };
    let root = b.visit(t);
    let terminal_needed = matches!(root, Pending::Terminal) || b.edges.iter().any(|e| matches!(e.1, Pending::Terminal));
    let terminal_id = b.next;
    let mut states: Vec<State> = b.kinds.iter().map(|(id, kind)| State { id: *id, kind: *kind }).collect();
    if terminal_needed {
        states.push(State { id: terminal_id, kind: StateKind::Terminal });
    }
    let resolve = |p: &Pending| match p {
        Pending::Id(id) => *id,
        Pending::Terminal => terminal_id,
    };
    let mut transitions: Vec<Transition> = b
        .edges
        .iter()
        .map(|(from, to, peer, dir, label, via)| Transition {
            from: *from,
            to: resolve(to),
            peer: peer.clone(),
            dir: *dir,
            label: label.clone(),
            via: via.clone(),
        })
        .collect();
    transitions.sort_by_key(|t| t.from);
    Efsm { role: me.clone(), states, transitions, initial: resolve(&root) }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Render as a DOT digraph. Node ids are the state numbers.
pub fn render_dot(e: &Efsm) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", dot_escape(e.role.as_str()));
    out.push_str("  rankdir=LR;\n  node [shape=circle];\n");
    for s in &e.states {
        let shape = if s.kind == StateKind::Terminal { ", shape=doublecircle" } else { "" };
        let _ = writeln!(out, "  {} [label=\"{}\"{shape}];", s.id, s.id);
    }
    for t in &e.transitions {
        let _ = writeln!(out, "  {} -> {} [label=\"{}\"];", t.from, t.to, dot_escape(&t.display_label()));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Arm;

    fn r(s: &'static str) -> Role {
        Role::from_static(s)
    }

    fn m(s: &str) -> MsgLabel {
        MsgLabel::new(s)
    }

    #[test]
    fn end_machine() {
        let e = build_efsm(&LocalType::End, &r("A"));
        assert_eq!(e.states, vec![State { id: 1, kind: StateKind::Terminal }]);
        assert!(e.transitions.is_empty());
        assert_eq!(e.initial, 1);
        let dot = render_dot(&e);
        assert!(dot.contains("1 [label=\"1\", shape=doublecircle];"));
    }

    #[test]
    fn recursive_branch_back_edge() {
        // rec x. S + PING. S & { PONG: x; BYE: end }
        let t = LocalType::rec(
            "x",
            LocalType::Select {
                to: r("S"),
                arms: vec![Arm::new(
                    m("PING"),
                    LocalType::Branch {
                        from: r("S"),
                        arms: vec![Arm::new(m("PONG"), LocalType::var("x")), Arm::new(m("BYE"), LocalType::End)],
                    },
                )],
            },
        );
        let e = build_efsm(&t, &r("C"));
        assert_eq!(e.states.len(), 3);
        let labels: Vec<(usize, usize, String)> =
            e.transitions.iter().map(|t| (t.from, t.to, t.display_label())).collect();
        assert_eq!(labels, vec![(1, 2, "S!PING".into()), (2, 1, "S?PONG".into()), (2, 3, "S?BYE".into())]);
    }

    #[test]
    fn routed_labels_mention_router() {
        let t = LocalType::RoutedSelect { to: r("B"), via: r("S"), arms: vec![Arm::new(m("Quote"), LocalType::End)] };
        let e = build_efsm(&t, &r("A"));
        assert_eq!(e.transitions[0].display_label(), "B!Quote (via S)");
        assert!(!e.has_routing());
    }

    #[test]
    fn router_states_forward() {
        let t = LocalType::Router { from: r("A"), to: r("B"), arms: vec![Arm::new(m("M"), LocalType::End)] };
        let e = build_efsm(&t, &r("S"));
        assert_eq!(e.states.len(), 3);
        assert!(e.has_routing());
        assert_eq!(e.transitions[0].display_label(), "A?M (via S)");
        assert_eq!(e.transitions[1].display_label(), "B!M (via S)");
    }

    #[test]
    fn json_keys_are_sorted() {
        let e = build_efsm(&LocalType::End, &r("A"));
        let s = e.to_json_string();
        let initial = s.find("\"initial\"").unwrap();
        let role = s.find("\"role\"").unwrap();
        let states = s.find("\"states\"").unwrap();
        assert!(initial < role && role < states);
    }
}
