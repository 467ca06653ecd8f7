//! Bounded exploration of the transition systems and the checkers built on
//! it: trace sets, trace equivalence between a global type and its projected
//! configuration, deadlock freedom, and step correspondence under encoding.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::hash::Hash;

use thiserror::Error;

use crate::encoding::{encode_global_state, encode_label, EncodingError};
use crate::projection::MergeFailure;
use crate::semantics::{config_steps, global_steps_with, project_configuration, Configuration, RuleSet};
use crate::types::{ActionLabel, GlobalType, Role};
use crate::wellformed::{check_wf, check_wf_routed};

pub const DEFAULT_DEPTH: usize = 8;
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("state budget of {cap} exceeded")]
    StateBudgetExceeded { cap: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Projection(#[from] MergeFailure),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    pub depth: usize,
    pub state_cap: usize,
    pub rules: RuleSet,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { depth: DEFAULT_DEPTH, state_cap: DEFAULT_STATE_CAP, rules: RuleSet::all() }
    }
}

impl ExploreOptions {
    pub fn with_depth(depth: usize) -> Self {
        ExploreOptions { depth, ..Default::default() }
    }
}

/// Prefix-closed set of traces up to a depth. Always contains the empty trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSet {
    pub depth: usize,
    pub traces: BTreeSet<Vec<ActionLabel>>,
}

impl TraceSet {
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn contains(&self, trace: &[ActionLabel]) -> bool {
        self.traces.contains(trace)
    }

    pub fn is_prefix_closed(&self) -> bool {
        self.traces.iter().all(|t| t.is_empty() || self.traces.contains(&t[..t.len() - 1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The state budget ran out before the check completed.
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub trace: Vec<ActionLabel>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplorationReport {
    pub states_visited: usize,
    pub depth_reached: usize,
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample>,
}

impl ExplorationReport {
    fn pass(states_visited: usize, depth_reached: usize) -> Self {
        ExplorationReport { states_visited, depth_reached, verdict: Verdict::Pass, counterexample: None }
    }

    fn fail(states_visited: usize, depth_reached: usize, trace: Vec<ActionLabel>, detail: String) -> Self {
        ExplorationReport {
            states_visited,
            depth_reached,
            verdict: Verdict::Fail,
            counterexample: Some(Counterexample { trace, detail }),
        }
    }

    fn inconclusive(states_visited: usize, depth_reached: usize) -> Self {
        ExplorationReport { states_visited, depth_reached, verdict: Verdict::Inconclusive, counterexample: None }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// `key=value` lines; the counterexample trace is space separated.
    pub fn to_key_values(&self, check: &str) -> String {
        let mut out = format!(
            "check={check}\nverdict={}\nstates={}\ndepth={}\n",
            self.verdict, self.states_visited, self.depth_reached
        );
        match &self.counterexample {
            Some(c) => {
                let trace: Vec<String> = c.trace.iter().map(ToString::to_string).collect();
                out.push_str(&format!("counterexample={}\n", trace.join(" ")));
                out.push_str(&format!("detail={}\n", c.detail.replace('\n', "; ")));
            }
            None => out.push_str("counterexample=\n"),
        }
        out
    }
}

/// Memoized step function with a state budget.
struct Explorer<S, F> {
    step: F,
    cache: HashMap<S, Vec<(ActionLabel, S)>>,
    cap: usize,
}

impl<S: Clone + Eq + Hash, F: Fn(&S) -> Vec<(ActionLabel, S)>> Explorer<S, F> {
    fn new(step: F, cap: usize) -> Self {
        Explorer { step, cache: HashMap::new(), cap }
    }

    fn steps(&mut self, s: &S) -> Result<&[(ActionLabel, S)], AnalysisError> {
        if !self.cache.contains_key(s) {
            if self.cache.len() >= self.cap {
                return Err(AnalysisError::StateBudgetExceeded { cap: self.cap });
            }
            let steps = (self.step)(s);
            self.cache.insert(s.clone(), steps);
        }
        Ok(&self.cache[s])
    }

    fn visited(&self) -> usize {
        self.cache.len()
    }
}

fn traces_of<S: Clone + Ord + Hash>(
    init: S,
    depth: usize,
    cap: usize,
    step: impl Fn(&S) -> Vec<(ActionLabel, S)>,
) -> Result<TraceSet, AnalysisError> {
    let mut ex = Explorer::new(step, cap);
    let mut traces = BTreeSet::new();
    traces.insert(Vec::new());
    let mut frontier: Vec<(Vec<ActionLabel>, BTreeSet<S>)> = vec![(Vec::new(), BTreeSet::from([init]))];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (trace, states) in frontier {
            let mut by_label: BTreeMap<ActionLabel, BTreeSet<S>> = BTreeMap::new();
            for s in &states {
                for (l, t) in ex.steps(s)? {
                    by_label.entry(l.clone()).or_default().insert(t.clone());
                }
            }
            for (l, succ) in by_label {
                let mut t = trace.clone();
                t.push(l);
                traces.insert(t.clone());
                next.push((t, succ));
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(TraceSet { depth, traces })
}

/// All traces of the global LTS from `g` up to `depth`.
pub fn global_traces(g: &GlobalType, depth: usize) -> Result<TraceSet, AnalysisError> {
    global_traces_with(g, ExploreOptions::with_depth(depth))
}

pub fn global_traces_with(g: &GlobalType, opts: ExploreOptions) -> Result<TraceSet, AnalysisError> {
    let rules = opts.rules;
    traces_of(g.canonical(), opts.depth, opts.state_cap, move |s| global_steps_with(s, rules))
}

/// All traces of the configuration LTS from the initial configuration of `g`.
pub fn config_traces(g: &GlobalType, depth: usize) -> Result<TraceSet, AnalysisError> {
    config_traces_with(g, ExploreOptions::with_depth(depth))
}

pub fn config_traces_with(g: &GlobalType, opts: ExploreOptions) -> Result<TraceSet, AnalysisError> {
    let c = project_configuration(g)?.canonical();
    traces_of(c, opts.depth, opts.state_cap, config_steps)
}

fn labels_of<S: Clone + Ord + Hash, F: Fn(&S) -> Vec<(ActionLabel, S)>>(
    ex: &mut Explorer<S, F>,
    states: &BTreeSet<S>,
) -> Result<BTreeMap<ActionLabel, BTreeSet<S>>, AnalysisError> {
    let mut out: BTreeMap<ActionLabel, BTreeSet<S>> = BTreeMap::new();
    for s in states {
        for (l, t) in ex.steps(s)? {
            out.entry(l.clone()).or_default().insert(t.clone());
        }
    }
    Ok(out)
}

/// Compare the traces of `g` with those of its projected configuration up to
/// the configured depth. On failure the counterexample is a shortest trace
/// enabled on exactly one side.
pub fn check_trace_equivalence(g: &GlobalType, opts: ExploreOptions) -> Result<ExplorationReport, AnalysisError> {
    let c0 = project_configuration(g)?.canonical();
    let rules = opts.rules;
    let mut left = Explorer::new(move |s: &GlobalType| global_steps_with(s, rules), opts.state_cap);
    let mut right = Explorer::new(config_steps, opts.state_cap);
    type Node = (BTreeSet<GlobalType>, BTreeSet<Configuration>);
    let start: Node = (BTreeSet::from([g.canonical()]), BTreeSet::from([c0]));
    let mut seen: BTreeSet<Node> = BTreeSet::from([start.clone()]);
    let mut queue: VecDeque<(Vec<ActionLabel>, Node)> = VecDeque::from([(Vec::new(), start)]);
    let mut depth_reached = 0;
    let visited = |l: &Explorer<_, _>, r: &Explorer<_, _>| l.visited() + r.visited();
    while let Some((trace, (gs, cs))) = queue.pop_front() {
        depth_reached = depth_reached.max(trace.len());
        if trace.len() >= opts.depth {
            continue;
        }
        let (ls, rs) = match (labels_of(&mut left, &gs), labels_of(&mut right, &cs)) {
            (Ok(ls), Ok(rs)) => (ls, rs),
            _ => return Ok(ExplorationReport::inconclusive(visited(&left, &right), depth_reached)),
        };
        let only_left = ls.keys().find(|l| !rs.contains_key(*l));
        let only_right = rs.keys().find(|l| !ls.contains_key(*l));
        if let Some((l, side)) = only_left.map(|l| (l, "global type")).or(only_right.map(|l| (l, "configuration"))) {
            let mut t = trace.clone();
            t.push(l.clone());
            let state = if side == "global type" {
                gs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" | ")
            } else {
                cs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" | ")
            };
            let detail = format!("`{l}` is enabled only in the {side}; state: {state}");
            return Ok(ExplorationReport::fail(visited(&left, &right), depth_reached, t, detail));
        }
        for ((l, gnext), (_, cnext)) in ls.into_iter().zip(rs) {
            let node = (gnext, cnext);
            if seen.insert(node.clone()) {
                let mut t = trace.clone();
                t.push(l);
                queue.push_back((t, node));
            }
        }
    }
    Ok(ExplorationReport::pass(visited(&left, &right), depth_reached))
}

/// Breadth-first search of the reachable states of `g` for a state that is
/// neither `end` nor able to step.
pub fn check_deadlock_freedom(
    g: &GlobalType,
    router: &Role,
    opts: ExploreOptions,
) -> Result<ExplorationReport, AnalysisError> {
    let report = check_wf_routed(g, router);
    if !report.is_ok() {
        return Err(AnalysisError::Precondition(report.to_string()));
    }
    let start = g.canonical();
    let mut parent: HashMap<GlobalType, Option<(GlobalType, ActionLabel)>> = HashMap::from([(start.clone(), None)]);
    let mut queue = VecDeque::from([(start, 0usize)]);
    let mut depth_reached = 0;
    let trace_to = |parent: &HashMap<GlobalType, Option<(GlobalType, ActionLabel)>>, s: &GlobalType| {
        let mut trace = Vec::new();
        let mut cur = s.clone();
        while let Some(Some((prev, l))) = parent.get(&cur) {
            trace.push(l.clone());
            cur = prev.clone();
        }
        trace.reverse();
        trace
    };
    while let Some((s, d)) = queue.pop_front() {
        depth_reached = depth_reached.max(d);
        if parent.len() > opts.state_cap {
            return Ok(ExplorationReport::inconclusive(parent.len(), depth_reached));
        }
        let steps = global_steps_with(&s, opts.rules);
        if steps.is_empty() {
            if s != GlobalType::End {
                let detail = format!("stuck state: {s}");
                return Ok(ExplorationReport::fail(parent.len(), depth_reached, trace_to(&parent, &s), detail));
            }
            continue;
        }
        if d >= opts.depth {
            continue;
        }
        for (l, t) in steps {
            if !parent.contains_key(&t) {
                parent.insert(t.clone(), Some((s.clone(), l)));
                queue.push_back((t, d + 1));
            }
        }
    }
    Ok(ExplorationReport::pass(parent.len(), depth_reached))
}

/// At every state reachable from canonical `g`, compare its steps (encoded
/// with `encode_label` and `encode_global_state`) with the steps of the
/// encoded state.
pub fn check_encoding_bisim(
    g: &GlobalType,
    s: &Role,
    opts: ExploreOptions,
) -> Result<ExplorationReport, AnalysisError> {
    if !g.is_canonical_mpst() {
        return Err(AnalysisError::Precondition("type must not contain routed or in-transit constructs".into()));
    }
    let report = check_wf(g);
    if !report.is_ok() {
        return Err(AnalysisError::Precondition(report.to_string()));
    }
    let start = g.canonical();
    let mut seen: BTreeSet<GlobalType> = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, Vec::<ActionLabel>::new())]);
    let mut depth_reached = 0;
    while let Some((state, trace)) = queue.pop_front() {
        depth_reached = depth_reached.max(trace.len());
        if seen.len() > opts.state_cap {
            return Ok(ExplorationReport::inconclusive(seen.len(), depth_reached));
        }
        let steps = global_steps_with(&state, opts.rules);
        let mut expected = BTreeSet::new();
        for (l, t) in &steps {
            expected.insert((encode_label(l, s)?, encode_global_state(t, s)?.canonical()));
        }
        let encoded = encode_global_state(&state, s)?;
        let actual: BTreeSet<(ActionLabel, GlobalType)> = global_steps_with(&encoded, opts.rules).into_iter().collect();
        if expected != actual {
            let (l, side) = match expected.difference(&actual).next() {
                Some((l, _)) => (l.clone(), "missing from the encoded type"),
                None => {
                    (actual.difference(&expected).next().expect("sets differ").0.clone(), "only in the encoded type")
                }
            };
            let mut t = trace.clone();
            t.push(l.clone());
            let detail = format!("step `{l}` {side}; state: {state}");
            return Ok(ExplorationReport::fail(seen.len(), depth_reached, t, detail));
        }
        if trace.len() >= opts.depth {
            continue;
        }
        for (l, t) in steps {
            if seen.insert(t.clone()) {
                let mut tr = trace.clone();
                tr.push(l);
                queue.push_back((t, tr));
            }
        }
    }
    Ok(ExplorationReport::pass(seen.len(), depth_reached))
}
