//! Endpoint projection and the merge operator.

use thiserror::Error;

use crate::types::{arm_for, Arm, GlobalType, LocalType, Role};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot merge `{left}` with `{right}`")]
pub struct MergeConflict {
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("projection onto {role} undefined at {path}: cannot merge `{left}` with `{right}`")]
pub struct MergeFailure {
    pub role: Role,
    /// Interactions leading to the failing merge, e.g. `A->B.Greet`.
    pub path: String,
    pub left: String,
    pub right: String,
}

/// The merge operator on local types. Branches with the same peer (and
/// router) merge labelwise; every other construct merges only with itself.
pub fn merge(a: &LocalType, b: &LocalType) -> Result<LocalType, MergeConflict> {
    if a == b || a.canonical() == b.canonical() {
        return Ok(a.clone());
    }
    let conflict = || MergeConflict { left: a.to_string(), right: b.to_string() };
    match (a, b) {
        (LocalType::Branch { from: p, arms: xs }, LocalType::Branch { from: q, arms: ys }) if p == q => {
            Ok(LocalType::Branch { from: p.clone(), arms: merge_arms(xs, ys)? })
        }
        (
            LocalType::RoutedBranch { from: p, via: s, arms: xs },
            LocalType::RoutedBranch { from: q, via: s2, arms: ys },
        ) if p == q && s == s2 => {
            Ok(LocalType::RoutedBranch { from: p.clone(), via: s.clone(), arms: merge_arms(xs, ys)? })
        }
        (LocalType::Rec(t, x), LocalType::Rec(u, y)) => {
            if t == u {
                return Ok(LocalType::rec(t.clone(), merge(x, y)?));
            }
            if y.free_vars().contains(t) {
                return Err(conflict());
            }
            let y = y.substitute(u, &LocalType::var(t.clone()));
            Ok(LocalType::rec(t.clone(), merge(x, &y)?))
        }
        _ => Err(conflict()),
    }
}

fn merge_arms(xs: &[Arm<LocalType>], ys: &[Arm<LocalType>]) -> Result<Vec<Arm<LocalType>>, MergeConflict> {
    let mut out = Vec::with_capacity(xs.len() + ys.len());
    for x in xs {
        match arm_for(ys, &x.label) {
            Some(y) => out.push(Arm::new(x.label.clone(), merge(&x.cont, &y.cont)?)),
            None => out.push(x.clone()),
        }
    }
    for y in ys {
        if arm_for(xs, &y.label).is_none() {
            out.push(y.clone());
        }
    }
    Ok(out)
}

/// Project `g` onto role `r`.
pub fn project(g: &GlobalType, r: &Role) -> Result<LocalType, MergeFailure> {
    let mut path = Vec::new();
    proj(g, r, &mut path)
}

fn step_name(from: &Role, to: &Role, label: &str) -> String {
    format!("{from}->{to}.{label}")
}

fn proj_arms(
    arms: &[Arm<GlobalType>],
    r: &Role,
    from: &Role,
    to: &Role,
    path: &mut Vec<String>,
) -> Result<Vec<Arm<LocalType>>, MergeFailure> {
    arms.iter()
        .map(|a| {
            path.push(step_name(from, to, &a.label.name));
            let cont = proj(&a.cont, r, path);
            path.pop();
            Ok(Arm::new(a.label.clone(), cont?))
        })
        .collect()
}

fn merge_all(
    arms: &[Arm<GlobalType>],
    r: &Role,
    from: &Role,
    to: &Role,
    path: &mut Vec<String>,
) -> Result<LocalType, MergeFailure> {
    let projected = proj_arms(arms, r, from, to, path)?;
    let mut iter = projected.into_iter();
    let mut acc = iter.next().expect("nonempty branches").cont;
    for arm in iter {
        acc = merge(&acc, &arm.cont).map_err(|c| MergeFailure {
            role: r.clone(),
            path: if path.is_empty() { "top level".into() } else { path.join(" / ") },
            left: c.left,
            right: c.right,
        })?;
    }
    Ok(acc)
}

fn chosen_cont<'a>(arms: &'a [Arm<GlobalType>], chosen: &crate::types::MsgLabel) -> &'a GlobalType {
    &arm_for(arms, chosen).expect("chosen label is a branch").cont
}

fn proj(g: &GlobalType, r: &Role, path: &mut Vec<String>) -> Result<LocalType, MergeFailure> {
    match g {
        GlobalType::End => Ok(LocalType::End),
        GlobalType::Var(t) => Ok(LocalType::Var(t.clone())),
        GlobalType::Rec(t, body) => match proj(body, r, path)? {
            LocalType::Var(_) => Ok(LocalType::End),
            b => Ok(LocalType::rec(t.clone(), b)),
        },
        GlobalType::Comm { from, to, arms } => {
            if r == from {
                Ok(LocalType::Select { to: to.clone(), arms: proj_arms(arms, r, from, to, path)? })
            } else if r == to {
                Ok(LocalType::Branch { from: from.clone(), arms: proj_arms(arms, r, from, to, path)? })
            } else {
                merge_all(arms, r, from, to, path)
            }
        }
        GlobalType::Routed { from, to, via, arms } => {
            if r == from {
                Ok(LocalType::RoutedSelect {
                    to: to.clone(),
                    via: via.clone(),
                    arms: proj_arms(arms, r, from, to, path)?,
                })
            } else if r == to {
                Ok(LocalType::RoutedBranch {
                    from: from.clone(),
                    via: via.clone(),
                    arms: proj_arms(arms, r, from, to, path)?,
                })
            } else if r == via {
                Ok(LocalType::Router { from: from.clone(), to: to.clone(), arms: proj_arms(arms, r, from, to, path)? })
            } else {
                merge_all(arms, r, from, to, path)
            }
        }
        GlobalType::TransitComm { from, to, chosen, arms } => {
            if r == to {
                Ok(LocalType::Branch { from: from.clone(), arms: proj_arms(arms, r, from, to, path)? })
            } else {
                path.push(step_name(from, to, &chosen.name));
                let out = proj(chosen_cont(arms, chosen), r, path);
                path.pop();
                out
            }
        }
        GlobalType::TransitRouted { from, to, via, chosen, arms } => {
            if r == to {
                Ok(LocalType::RoutedBranch {
                    from: from.clone(),
                    via: via.clone(),
                    arms: proj_arms(arms, r, from, to, path)?,
                })
            } else if r == via {
                Ok(LocalType::RouterTransit {
                    from: from.clone(),
                    to: to.clone(),
                    chosen: chosen.clone(),
                    arms: proj_arms(arms, r, from, to, path)?,
                })
            } else {
                path.push(step_name(from, to, &chosen.name));
                let out = proj(chosen_cont(arms, chosen), r, path);
                path.pop();
                out
            }
        }
    }
}
