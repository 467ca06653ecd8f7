//! Type grammars shared by every other module: roles, message labels, global
//! and local types (including the in-transit forms used by the LTS), and the
//! action labels that decorate transitions.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

/// Returns true when `s` matches `[A-Za-z][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("empty branch set at {0}")]
    EmptyBranches(String),
    #[error("duplicate label `{label}` at {at}")]
    DuplicateLabel { label: String, at: String },
    #[error("roles must be pairwise distinct at {0}")]
    RolesNotDistinct(String),
    #[error("chosen label `{label}` is not a branch of {at}")]
    ChosenNotInBranches { label: String, at: String },
    #[error("unbound recursion variable `{0}`")]
    UnboundVar(String),
    #[error("non-contractive recursion on `{0}`")]
    NonContractive(String),
    #[error("not a recursive type")]
    NotRecursive,
}

/// A protocol participant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Role(String);

impl Role {
    pub fn new(name: impl Into<String>) -> Result<Self, TypeError> {
        let name = name.into();
        if is_identifier(&name) {
            Ok(Role(name))
        } else {
            Err(TypeError::InvalidIdentifier(name))
        }
    }

    /// Panics on an invalid identifier; intended for literals.
    pub fn from_static(name: &'static str) -> Self {
        Role::new(name).expect("role literal must be an identifier")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A message label with its payload sorts.
///
/// Equality, ordering and hashing look at the name only: payload sorts are
/// inert metadata kept for code generation.
#[derive(Debug, Clone)]
pub struct MsgLabel {
    pub name: String,
    pub payload: Vec<String>,
}

impl MsgLabel {
    pub fn new(name: impl Into<String>) -> Self {
        MsgLabel { name: name.into(), payload: Vec::new() }
    }

    pub fn with_payload(name: impl Into<String>, payload: Vec<String>) -> Self {
        MsgLabel { name: name.into(), payload }
    }
}

impl PartialEq for MsgLabel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for MsgLabel {}

impl PartialOrd for MsgLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MsgLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name.cmp(&other.name)
    }
}

impl Hash for MsgLabel {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
    }
}

impl fmt::Display for MsgLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// One labelled continuation of a communication.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arm<T> {
    pub label: MsgLabel,
    pub cont: T,
}

impl<T> Arm<T> {
    pub fn new(label: MsgLabel, cont: T) -> Self {
        Arm { label, cont }
    }
}

pub(crate) fn arm_for<'a, T>(arms: &'a [Arm<T>], label: &MsgLabel) -> Option<&'a Arm<T>> {
    arms.iter().find(|a| &a.label == label)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GlobalType {
    End,
    Var(String),
    Rec(String, Box<GlobalType>),
    Comm {
        from: Role,
        to: Role,
        arms: Vec<Arm<GlobalType>>,
    },
    Routed {
        from: Role,
        to: Role,
        via: Role,
        arms: Vec<Arm<GlobalType>>,
    },
    /// `chosen` has been sent by `from` and not yet received by `to`.
    TransitComm {
        from: Role,
        to: Role,
        chosen: MsgLabel,
        arms: Vec<Arm<GlobalType>>,
    },
    /// `chosen` has reached the router `via` and not yet been routed to `to`.
    TransitRouted {
        from: Role,
        to: Role,
        via: Role,
        chosen: MsgLabel,
        arms: Vec<Arm<GlobalType>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LocalType {
    End,
    Var(String),
    Rec(String, Box<LocalType>),
    Select { to: Role, arms: Vec<Arm<LocalType>> },
    Branch { from: Role, arms: Vec<Arm<LocalType>> },
    RoutedSelect { to: Role, via: Role, arms: Vec<Arm<LocalType>> },
    RoutedBranch { from: Role, via: Role, arms: Vec<Arm<LocalType>> },
    Router { from: Role, to: Role, arms: Vec<Arm<LocalType>> },
    RouterTransit { from: Role, to: Role, chosen: MsgLabel, arms: Vec<Arm<LocalType>> },
}

/// Shape view used by the generic recursion utilities below.
pub(crate) enum Shape<'a, T> {
    End,
    Var(&'a str),
    Rec(&'a str, &'a T),
    Node(&'a [Arm<T>]),
}

pub(crate) trait Term: Clone + Ord {
    fn shape(&self) -> Shape<'_, Self>;
    fn make_var(name: String) -> Self;
    fn make_rec(name: String, body: Self) -> Self;
    /// Rebuild a `Node` with new arms (same roles, same chosen label).
    fn with_arms(&self, arms: Vec<Arm<Self>>) -> Self;
    /// Check node-local invariants (role distinctness, chosen label).
    fn check_node(&self) -> Result<(), TypeError>;
    fn describe(&self) -> String;
}

impl Term for GlobalType {
    fn shape(&self) -> Shape<'_, Self> {
        match self {
            GlobalType::End => Shape::End,
            GlobalType::Var(t) => Shape::Var(t),
            GlobalType::Rec(t, b) => Shape::Rec(t, b),
            GlobalType::Comm { arms, .. }
            | GlobalType::Routed { arms, .. }
            | GlobalType::TransitComm { arms, .. }
            | GlobalType::TransitRouted { arms, .. } => Shape::Node(arms),
        }
    }

    fn make_var(name: String) -> Self {
        GlobalType::Var(name)
    }

    fn make_rec(name: String, body: Self) -> Self {
        GlobalType::Rec(name, Box::new(body))
    }

    fn with_arms(&self, arms: Vec<Arm<Self>>) -> Self {
        match self {
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
            other => other.clone(),
        }
    }

    fn check_node(&self) -> Result<(), TypeError> {
        match self {
            GlobalType::Comm { from, to, .. } if from == to => Err(TypeError::RolesNotDistinct(self.describe())),
            GlobalType::TransitComm { from, to, chosen, arms } => {
                if from == to {
                    return Err(TypeError::RolesNotDistinct(self.describe()));
                }
                check_chosen(chosen, arms, self)
            }
            GlobalType::Routed { from, to, via, .. } if !distinct3(from, to, via) => {
                Err(TypeError::RolesNotDistinct(self.describe()))
            }
            GlobalType::TransitRouted { from, to, via, chosen, arms } => {
                if !distinct3(from, to, via) {
                    return Err(TypeError::RolesNotDistinct(self.describe()));
                }
                check_chosen(chosen, arms, self)
            }
            _ => Ok(()),
        }
    }

    fn describe(&self) -> String {
        match self {
            GlobalType::End => "end".into(),
            GlobalType::Var(t) => t.clone(),
            GlobalType::Rec(t, _) => format!("rec {t}"),
            GlobalType::Comm { from, to, arms } => format!("{from}->{to} {{{}}}", labels(arms)),
            GlobalType::Routed { from, to, via, arms } => {
                format!("{from}->{to} via {via} {{{}}}", labels(arms))
            }
            GlobalType::TransitComm { from, to, chosen, .. } => format!("{from}~>{to} <{chosen}>"),
            GlobalType::TransitRouted { from, to, via, chosen, .. } => {
                format!("{from}~>{to} via {via} <{chosen}>")
            }
        }
    }
}

impl Term for LocalType {
    fn shape(&self) -> Shape<'_, Self> {
        match self {
            LocalType::End => Shape::End,
            LocalType::Var(t) => Shape::Var(t),
            LocalType::Rec(t, b) => Shape::Rec(t, b),
            LocalType::Select { arms, .. }
            | LocalType::Branch { arms, .. }
            | LocalType::RoutedSelect { arms, .. }
            | LocalType::RoutedBranch { arms, .. }
            | LocalType::Router { arms, .. }
            | LocalType::RouterTransit { arms, .. } => Shape::Node(arms),
        }
    }

    fn make_var(name: String) -> Self {
        LocalType::Var(name)
    }

    fn make_rec(name: String, body: Self) -> Self {
        LocalType::Rec(name, Box::new(body))
    }

    fn with_arms(&self, arms: Vec<Arm<Self>>) -> Self {
        match self {
            LocalType::Select { to, .. } => LocalType::Select { to: to.clone(), arms },
            LocalType::Branch { from, .. } => LocalType::Branch { from: from.clone(), arms },
            LocalType::RoutedSelect { to, via, .. } => {
                LocalType::RoutedSelect { to: to.clone(), via: via.clone(), arms }
            }
            LocalType::RoutedBranch { from, via, .. } => {
                LocalType::RoutedBranch { from: from.clone(), via: via.clone(), arms }
            }
            LocalType::Router { from, to, .. } => LocalType::Router { from: from.clone(), to: to.clone(), arms },
            LocalType::RouterTransit { from, to, chosen, .. } => {
                LocalType::RouterTransit { from: from.clone(), to: to.clone(), chosen: chosen.clone(), arms }
            }
            other => other.clone(),
        }
    }

    fn check_node(&self) -> Result<(), TypeError> {
        match self {
            LocalType::RoutedSelect { to: peer, via, .. } | LocalType::RoutedBranch { from: peer, via, .. }
                if peer == via =>
            {
                Err(TypeError::RolesNotDistinct(self.describe()))
            }
            LocalType::Router { from, to, .. } if from == to => Err(TypeError::RolesNotDistinct(self.describe())),
            LocalType::RouterTransit { from, to, chosen, arms } => {
                if from == to {
                    return Err(TypeError::RolesNotDistinct(self.describe()));
                }
                check_chosen(chosen, arms, self)
            }
            _ => Ok(()),
        }
    }

    fn describe(&self) -> String {
        match self {
            LocalType::End => "end".into(),
            LocalType::Var(t) => t.clone(),
            LocalType::Rec(t, _) => format!("rec {t}"),
            LocalType::Select { to, arms } => format!("{to}+{{{}}}", labels(arms)),
            LocalType::Branch { from, arms } => format!("{from}&{{{}}}", labels(arms)),
            LocalType::RoutedSelect { to, via, arms } => {
                format!("{to}+ via {via} {{{}}}", labels(arms))
            }
            LocalType::RoutedBranch { from, via, arms } => {
                format!("{from}& via {via} {{{}}}", labels(arms))
            }
            LocalType::Router { from, to, arms } => {
                format!("route {from}->{to} {{{}}}", labels(arms))
            }
            LocalType::RouterTransit { from, to, chosen, .. } => {
                format!("route {from}~>{to} <{chosen}>")
            }
        }
    }
}

fn distinct3(a: &Role, b: &Role, c: &Role) -> bool {
    a != b && b != c && a != c
}

fn labels<T>(arms: &[Arm<T>]) -> String {
    arms.iter().map(|a| a.label.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn check_chosen<T: Term>(chosen: &MsgLabel, arms: &[Arm<T>], at: &T) -> Result<(), TypeError> {
    if arm_for(arms, chosen).is_some() {
        Ok(())
    } else {
        Err(TypeError::ChosenNotInBranches { label: chosen.name.clone(), at: at.describe() })
    }
}

pub(crate) fn validate_term<T: Term>(t: &T) -> Result<(), TypeError> {
    fn go<T: Term>(t: &T, bound: &mut Vec<String>) -> Result<(), TypeError> {
        match t.shape() {
            Shape::End => Ok(()),
            Shape::Var(x) => {
                if bound.iter().any(|b| b == x) {
                    Ok(())
                } else {
                    Err(TypeError::UnboundVar(x.to_string()))
                }
            }
            Shape::Rec(x, body) => {
                if !is_identifier(x) && !x.starts_with('_') {
                    return Err(TypeError::InvalidIdentifier(x.to_string()));
                }
                if !is_contractive(x, body) {
                    return Err(TypeError::NonContractive(x.to_string()));
                }
                bound.push(x.to_string());
                let r = go(body, bound);
                bound.pop();
                r
            }
            Shape::Node(arms) => {
                if arms.is_empty() {
                    return Err(TypeError::EmptyBranches(t.describe()));
                }
                let mut seen = HashSet::new();
                for arm in arms {
                    if !is_identifier(&arm.label.name) {
                        return Err(TypeError::InvalidIdentifier(arm.label.name.clone()));
                    }
                    if !seen.insert(arm.label.name.as_str()) {
                        return Err(TypeError::DuplicateLabel { label: arm.label.name.clone(), at: t.describe() });
                    }
                }
                t.check_node()?;
                for arm in arms {
                    go(&arm.cont, bound)?;
                }
                Ok(())
            }
        }
    }
    go(t, &mut Vec::new())
}

/// A `rec x` body is contractive unless, after stripping nested binders, it is
/// a bare variable.
fn is_contractive<T: Term>(_binder: &str, body: &T) -> bool {
    let mut cur = body;
    loop {
        match cur.shape() {
            Shape::Rec(_, b) => cur = b,
            Shape::Var(_) => return false,
            _ => return true,
        }
    }
}

pub(crate) fn free_vars<T: Term>(t: &T) -> BTreeSet<String> {
    fn go<T: Term>(t: &T, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match t.shape() {
            Shape::End => {}
            Shape::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.to_string());
                }
            }
            Shape::Rec(x, body) => {
                bound.push(x.to_string());
                go(body, bound, out);
                bound.pop();
            }
            Shape::Node(arms) => {
                for arm in arms {
                    go(&arm.cont, bound, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

/// `t[replacement / var]`. The replacement is expected to be closed, so no
/// capture avoidance is performed.
pub(crate) fn substitute<T: Term>(t: &T, var: &str, replacement: &T) -> T {
    match t.shape() {
        Shape::End => t.clone(),
        Shape::Var(x) => {
            if x == var {
                replacement.clone()
            } else {
                t.clone()
            }
        }
        Shape::Rec(x, body) => {
            if x == var {
                t.clone()
            } else {
                T::make_rec(x.to_string(), substitute(body, var, replacement))
            }
        }
        Shape::Node(arms) => {
            t.with_arms(arms.iter().map(|a| Arm::new(a.label.clone(), substitute(&a.cont, var, replacement))).collect())
        }
    }
}

pub(crate) fn unfold_once_term<T: Term>(t: &T) -> Option<T> {
    match t.shape() {
        Shape::Rec(x, body) => Some(substitute(body, x, t)),
        _ => None,
    }
}

/// Unfold leading binders until the head is not a `rec`.
pub(crate) fn unfold_head<T: Term>(t: &T) -> T {
    let mut cur = t.clone();
    while let Some(next) = unfold_once_term(&cur) {
        cur = next;
    }
    cur
}

/// Canonical form: unused binders dropped, used binders renamed by nesting
/// depth (`_0`, `_1`, ...), arms sorted by label name.
pub(crate) fn canonical_term<T: Term>(t: &T) -> Result<T, TypeError> {
    validate_term(t)?;
    Ok(canon_open(t))
}

/// Canonical form that also accepts open terms. Fresh binder names start past
/// any `_<n>` free variable so they cannot capture it.
pub(crate) fn canon_open<T: Term>(t: &T) -> T {
    let offset = free_vars(t)
        .iter()
        .filter_map(|v| v.strip_prefix('_').and_then(|n| n.parse::<usize>().ok()))
        .map(|n| n + 1)
        .max()
        .unwrap_or(0);
    canon(t, &mut Vec::new(), offset)
}

fn canon<T: Term>(t: &T, env: &mut Vec<(String, String)>, offset: usize) -> T {
    match t.shape() {
        Shape::End => t.clone(),
        Shape::Var(x) => {
            let renamed = env
                .iter()
                .rev()
                .find(|(orig, _)| orig == x)
                .map(|(_, new)| new.clone())
                .unwrap_or_else(|| x.to_string());
            T::make_var(renamed)
        }
        Shape::Rec(x, body) => {
            if !free_vars(body).contains(x) {
                return canon(body, env, offset);
            }
            let level = env.len() + offset;
            let fresh = format!("_{level}");
            env.push((x.to_string(), fresh.clone()));
            let body = canon(body, env, offset);
            env.pop();
            T::make_rec(fresh, body)
        }
        Shape::Node(arms) => {
            let mut arms: Vec<Arm<T>> =
                arms.iter().map(|a| Arm::new(a.label.clone(), canon(&a.cont, env, offset))).collect();
            arms.sort_by(|a, b| a.label.name.cmp(&b.label.name));
            t.with_arms(arms)
        }
    }
}

impl GlobalType {
    pub fn comm(from: Role, to: Role, arms: Vec<Arm<GlobalType>>) -> Self {
        GlobalType::Comm { from, to, arms }
    }

    pub fn routed(from: Role, to: Role, via: Role, arms: Vec<Arm<GlobalType>>) -> Self {
        GlobalType::Routed { from, to, via, arms }
    }

    pub fn rec(name: impl Into<String>, body: GlobalType) -> Self {
        GlobalType::Rec(name.into(), Box::new(body))
    }

    pub fn var(name: impl Into<String>) -> Self {
        GlobalType::Var(name.into())
    }

    /// Check every structural invariant, including closedness.
    pub fn validate(&self) -> Result<(), TypeError> {
        validate_term(self)
    }

    pub fn canonicalize(&self) -> Result<GlobalType, TypeError> {
        canonical_term(self)
    }

    /// Canonical form of a type already known to be valid.
    pub fn canonical(&self) -> GlobalType {
        canon_open(self)
    }

    /// Structural equality modulo alpha-renaming, arm order and unused binders.
    pub fn equiv(&self, other: &GlobalType) -> bool {
        self.canonical() == other.canonical()
    }

    pub fn unfold_once(&self) -> Result<GlobalType, TypeError> {
        unfold_once_term(self).ok_or(TypeError::NotRecursive)
    }

    pub fn unfold_head(&self) -> GlobalType {
        unfold_head(self)
    }

    pub fn substitute(&self, var: &str, replacement: &GlobalType) -> GlobalType {
        substitute(self, var, replacement)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        free_vars(self)
    }

    pub fn participants(&self) -> BTreeSet<Role> {
        let mut out = BTreeSet::new();
        self.collect_participants(&mut out);
        out
    }

    fn collect_participants(&self, out: &mut BTreeSet<Role>) {
        match self {
            GlobalType::End | GlobalType::Var(_) => {}
            GlobalType::Rec(_, body) => body.collect_participants(out),
            GlobalType::Comm { from, to, arms } | GlobalType::TransitComm { from, to, arms, .. } => {
                out.insert(from.clone());
                out.insert(to.clone());
                arms.iter().for_each(|a| a.cont.collect_participants(out));
            }
            GlobalType::Routed { from, to, via, arms } | GlobalType::TransitRouted { from, to, via, arms, .. } => {
                out.insert(from.clone());
                out.insert(to.clone());
                out.insert(via.clone());
                arms.iter().for_each(|a| a.cont.collect_participants(out));
            }
        }
    }

    /// True when the type contains no routed or in-transit constructs.
    pub fn is_canonical_mpst(&self) -> bool {
        match self {
            GlobalType::End | GlobalType::Var(_) => true,
            GlobalType::Rec(_, b) => b.is_canonical_mpst(),
            GlobalType::Comm { arms, .. } => arms.iter().all(|a| a.cont.is_canonical_mpst()),
            _ => false,
        }
    }

    pub fn contains_routing(&self) -> bool {
        match self {
            GlobalType::End | GlobalType::Var(_) => false,
            GlobalType::Rec(_, b) => b.contains_routing(),
            GlobalType::Comm { arms, .. } | GlobalType::TransitComm { arms, .. } => {
                arms.iter().any(|a| a.cont.contains_routing())
            }
            GlobalType::Routed { .. } | GlobalType::TransitRouted { .. } => true,
        }
    }

    /// Replace routed constructs with their direct counterparts.
    pub fn strip_routing(&self) -> GlobalType {
        let strip = |arms: &[Arm<GlobalType>]| -> Vec<Arm<GlobalType>> {
            arms.iter().map(|a| Arm::new(a.label.clone(), a.cont.strip_routing())).collect()
        };
        match self {
            GlobalType::End | GlobalType::Var(_) => self.clone(),
            GlobalType::Rec(t, b) => GlobalType::rec(t.clone(), b.strip_routing()),
            GlobalType::Comm { from, to, arms } | GlobalType::Routed { from, to, arms, .. } => {
                GlobalType::comm(from.clone(), to.clone(), strip(arms))
            }
            GlobalType::TransitComm { from, to, chosen, arms }
            | GlobalType::TransitRouted { from, to, chosen, arms, .. } => GlobalType::TransitComm {
                from: from.clone(),
                to: to.clone(),
                chosen: chosen.clone(),
                arms: strip(arms),
            },
        }
    }

    pub fn arms(&self) -> &[Arm<GlobalType>] {
        match self {
            GlobalType::Comm { arms, .. }
            | GlobalType::Routed { arms, .. }
            | GlobalType::TransitComm { arms, .. }
            | GlobalType::TransitRouted { arms, .. } => arms,
            _ => &[],
        }
    }
}

impl LocalType {
    pub fn rec(name: impl Into<String>, body: LocalType) -> Self {
        LocalType::Rec(name.into(), Box::new(body))
    }

    pub fn var(name: impl Into<String>) -> Self {
        LocalType::Var(name.into())
    }

    pub fn validate(&self) -> Result<(), TypeError> {
        validate_term(self)
    }

    pub fn canonicalize(&self) -> Result<LocalType, TypeError> {
        canonical_term(self)
    }

    pub fn canonical(&self) -> LocalType {
        canon_open(self)
    }

    pub fn equiv(&self, other: &LocalType) -> bool {
        self.canonical() == other.canonical()
    }

    pub fn unfold_once(&self) -> Result<LocalType, TypeError> {
        unfold_once_term(self).ok_or(TypeError::NotRecursive)
    }

    pub fn unfold_head(&self) -> LocalType {
        unfold_head(self)
    }

    pub fn substitute(&self, var: &str, replacement: &LocalType) -> LocalType {
        substitute(self, var, replacement)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        free_vars(self)
    }

    pub fn arms(&self) -> &[Arm<LocalType>] {
        match self {
            LocalType::Select { arms, .. }
            | LocalType::Branch { arms, .. }
            | LocalType::RoutedSelect { arms, .. }
            | LocalType::RoutedBranch { arms, .. }
            | LocalType::Router { arms, .. }
            | LocalType::RouterTransit { arms, .. } => arms,
            _ => &[],
        }
    }

    pub fn is_canonical_mpst(&self) -> bool {
        match self {
            LocalType::End | LocalType::Var(_) => true,
            LocalType::Rec(_, b) => b.is_canonical_mpst(),
            LocalType::Select { arms, .. } | LocalType::Branch { arms, .. } => {
                arms.iter().all(|a| a.cont.is_canonical_mpst())
            }
            _ => false,
        }
    }

    pub fn contains_router(&self) -> bool {
        match self {
            LocalType::End | LocalType::Var(_) => false,
            LocalType::Rec(_, b) => b.contains_router(),
            LocalType::Router { .. } | LocalType::RouterTransit { .. } => true,
            other => other.arms().iter().any(|a| a.cont.contains_router()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    DirectSend,
    DirectRecv,
    RoutedSend,
    RoutedRecv,
}

impl ActionKind {
    pub fn is_send(self) -> bool {
        matches!(self, ActionKind::DirectSend | ActionKind::RoutedSend)
    }

    pub fn is_routed(self) -> bool {
        matches!(self, ActionKind::RoutedSend | ActionKind::RoutedRecv)
    }
}

/// Label of an LTS step. `via` is present exactly for the routed kinds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionLabel {
    pub kind: ActionKind,
    pub from: Role,
    pub to: Role,
    pub via: Option<Role>,
    pub msg: MsgLabel,
}

impl ActionLabel {
    pub fn send(from: Role, to: Role, msg: MsgLabel) -> Self {
        ActionLabel { kind: ActionKind::DirectSend, from, to, via: None, msg }
    }

    pub fn recv(from: Role, to: Role, msg: MsgLabel) -> Self {
        ActionLabel { kind: ActionKind::DirectRecv, from, to, via: None, msg }
    }

    pub fn routed_send(via: Role, from: Role, to: Role, msg: MsgLabel) -> Self {
        ActionLabel { kind: ActionKind::RoutedSend, from, to, via: Some(via), msg }
    }

    pub fn routed_recv(via: Role, from: Role, to: Role, msg: MsgLabel) -> Self {
        ActionLabel { kind: ActionKind::RoutedRecv, from, to, via: Some(via), msg }
    }

    /// The role performing the action.
    pub fn subject(&self) -> &Role {
        if self.kind.is_send() {
            &self.from
        } else {
            &self.to
        }
    }

    pub fn is_routed(&self) -> bool {
        self.kind.is_routed()
    }

    pub fn is_valid(&self) -> bool {
        match (&self.via, self.kind.is_routed()) {
            (Some(v), true) => v != &self.from && v != &self.to && self.from != self.to,
            (None, false) => self.from != self.to,
            _ => false,
        }
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.kind.is_send() { '!' } else { '?' };
        match &self.via {
            Some(s) => write!(f, "{s}.({}->{}{op}{})", self.from, self.to, self.msg),
            None => write!(f, "{}->{}{op}{}", self.from, self.to, self.msg),
        }
    }
}

fn fmt_payload(f: &mut fmt::Formatter<'_>, label: &MsgLabel) -> fmt::Result {
    write!(f, "{}", label.name)?;
    if !label.payload.is_empty() {
        write!(f, "({})", label.payload.join(", "))?;
    }
    Ok(())
}

fn fmt_arms<T: fmt::Display>(f: &mut fmt::Formatter<'_>, arms: &[Arm<T>]) -> fmt::Result {
    if arms.len() == 1 {
        fmt_payload(f, &arms[0].label)?;
        return write!(f, ". {}", arms[0].cont);
    }
    f.write_str("{ ")?;
    for (i, arm) in arms.iter().enumerate() {
        if i > 0 {
            f.write_str("; ")?;
        }
        fmt_payload(f, &arm.label)?;
        write!(f, ": {}", arm.cont)?;
    }
    f.write_str(" }")
}

fn fmt_transit<T: fmt::Display>(f: &mut fmt::Formatter<'_>, chosen: &MsgLabel, arms: &[Arm<T>]) -> fmt::Result {
    write!(f, "<{chosen}> {{ ")?;
    for (i, arm) in arms.iter().enumerate() {
        if i > 0 {
            f.write_str("; ")?;
        }
        fmt_payload(f, &arm.label)?;
        write!(f, ": {}", arm.cont)?;
    }
    f.write_str(" }")
}

impl fmt::Display for GlobalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlobalType::End => f.write_str("end"),
            GlobalType::Var(t) => f.write_str(t),
            GlobalType::Rec(t, b) => write!(f, "rec {t}. {b}"),
            GlobalType::Comm { from, to, arms } => {
                write!(f, "{from} -> {to}: ")?;
                fmt_arms(f, arms)
            }
            GlobalType::Routed { from, to, via, arms } => {
                write!(f, "{from} -> {to} via {via}: ")?;
                fmt_arms(f, arms)
            }
            GlobalType::TransitComm { from, to, chosen, arms } => {
                write!(f, "{from} ~> {to}: ")?;
                fmt_transit(f, chosen, arms)
            }
            GlobalType::TransitRouted { from, to, via, chosen, arms } => {
                write!(f, "{from} ~> {to} via {via}: ")?;
                fmt_transit(f, chosen, arms)
            }
        }
    }
}

impl fmt::Display for LocalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalType::End => f.write_str("end"),
            LocalType::Var(t) => f.write_str(t),
            LocalType::Rec(t, b) => write!(f, "rec {t}. {b}"),
            LocalType::Select { to, arms } => {
                write!(f, "{to} + ")?;
                fmt_arms(f, arms)
            }
            LocalType::Branch { from, arms } => {
                write!(f, "{from} & ")?;
                fmt_arms(f, arms)
            }
            LocalType::RoutedSelect { to, via, arms } => {
                write!(f, "{to} + via {via} ")?;
                fmt_arms(f, arms)
            }
            LocalType::RoutedBranch { from, via, arms } => {
                write!(f, "{from} & via {via} ")?;
                fmt_arms(f, arms)
            }
            LocalType::Router { from, to, arms } => {
                write!(f, "route {from} -> {to} ")?;
                fmt_arms(f, arms)
            }
            LocalType::RouterTransit { from, to, chosen, arms } => {
                write!(f, "route {from} ~> {to} ")?;
                fmt_transit(f, chosen, arms)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &'static str) -> Role {
        Role::from_static(s)
    }

    fn m(s: &str) -> MsgLabel {
        MsgLabel::new(s)
    }

    fn one(from: &'static str, to: &'static str, l: &str, k: GlobalType) -> GlobalType {
        GlobalType::comm(r(from), r(to), vec![Arm::new(m(l), k)])
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("A"));
        assert!(is_identifier("P1_x"));
        assert!(!is_identifier("1A"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("_t"));
        assert!(Role::new("a b").is_err());
    }

    #[test]
    fn roles_are_case_sensitive() {
        assert_ne!(r("a"), r("A"));
    }

    #[test]
    fn labels_compare_by_name_only() {
        let a = MsgLabel::with_payload("Pos", vec!["Pt".into()]);
        assert_eq!(a, m("Pos"));
    }

    #[test]
    fn canonical_binder_gets_level_zero() {
        let g = GlobalType::rec("x", one("A", "B", "M", GlobalType::var("x")));
        let c = g.canonicalize().unwrap();
        assert_eq!(c, GlobalType::rec("_0", one("A", "B", "M", GlobalType::var("_0"))));
    }

    #[test]
    fn canonical_end() {
        assert_eq!(GlobalType::End.canonicalize().unwrap(), GlobalType::End);
    }

    #[test]
    fn canonical_sorts_arms_and_drops_unused_binders() {
        let g = GlobalType::rec(
            "t",
            GlobalType::comm(
                r("A"),
                r("B"),
                vec![Arm::new(m("Z"), GlobalType::End), Arm::new(m("M"), GlobalType::End)],
            ),
        );
        let c = g.canonicalize().unwrap();
        assert_eq!(
            c,
            GlobalType::comm(
                r("A"),
                r("B"),
                vec![Arm::new(m("M"), GlobalType::End), Arm::new(m("Z"), GlobalType::End)],
            )
        );
    }

    #[test]
    fn unfold_substitutes_binder() {
        let g = GlobalType::rec("t", one("A", "B", "M", GlobalType::var("t")));
        let expected = one("A", "B", "M", g.clone());
        assert_eq!(g.unfold_once().unwrap(), expected);
    }

    #[test]
    fn unfold_unused_binder() {
        let g = GlobalType::rec("t", one("A", "B", "M", GlobalType::End));
        assert_eq!(g.unfold_once().unwrap(), one("A", "B", "M", GlobalType::End));
    }

    #[test]
    fn unfold_requires_rec() {
        assert_eq!(GlobalType::End.unfold_once(), Err(TypeError::NotRecursive));
    }

    #[test]
    fn invariants_are_checked() {
        assert!(matches!(
            GlobalType::comm(r("A"), r("A"), vec![Arm::new(m("M"), GlobalType::End)]).validate(),
            Err(TypeError::RolesNotDistinct(_))
        ));
        assert!(matches!(GlobalType::comm(r("A"), r("B"), vec![]).validate(), Err(TypeError::EmptyBranches(_))));
        assert!(matches!(
            GlobalType::comm(
                r("A"),
                r("B"),
                vec![Arm::new(m("M"), GlobalType::End), Arm::new(m("M"), GlobalType::End)]
            )
            .validate(),
            Err(TypeError::DuplicateLabel { .. })
        ));
        assert!(matches!(
            GlobalType::routed(r("A"), r("B"), r("A"), vec![Arm::new(m("M"), GlobalType::End)]).validate(),
            Err(TypeError::RolesNotDistinct(_))
        ));
        assert_eq!(GlobalType::var("t").validate(), Err(TypeError::UnboundVar("t".into())));
        assert_eq!(GlobalType::rec("t", GlobalType::var("t")).validate(), Err(TypeError::NonContractive("t".into())));
        assert_eq!(
            GlobalType::rec("t", GlobalType::rec("u", GlobalType::var("t"))).validate(),
            Err(TypeError::NonContractive("t".into()))
        );
        let transit = GlobalType::TransitComm {
            from: r("A"),
            to: r("B"),
            chosen: m("X"),
            arms: vec![Arm::new(m("M"), GlobalType::End)],
        };
        assert!(matches!(transit.validate(), Err(TypeError::ChosenNotInBranches { .. })));
    }

    #[test]
    fn participants_follow_definition() {
        assert!(GlobalType::End.participants().is_empty());
        let g = GlobalType::routed(r("p"), r("q"), r("s"), vec![Arm::new(m("M"), GlobalType::End)]);
        let expected: BTreeSet<Role> = [r("p"), r("q"), r("s")].into_iter().collect();
        assert_eq!(g.participants(), expected);
    }

    #[test]
    fn action_subjects() {
        let s = ActionLabel::routed_send(r("s"), r("p"), r("q"), m("M"));
        let v = ActionLabel::routed_recv(r("s"), r("p"), r("q"), m("M"));
        assert_eq!(s.subject(), &r("p"));
        assert_eq!(v.subject(), &r("q"));
        assert!(s.is_valid());
        assert_eq!(s.to_string(), "s.(p->q!M)");
        assert_eq!(ActionLabel::recv(r("p"), r("q"), m("M")).to_string(), "p->q?M");
    }

    #[test]
    fn display_is_readable() {
        let g = GlobalType::rec("t", one("A", "B", "M", GlobalType::var("t")));
        assert_eq!(g.to_string(), "rec t. A -> B: M. t");
    }
}
