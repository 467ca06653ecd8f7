//! Centroid relation and the two well-formedness conditions.

use std::fmt;

use crate::projection::{project, MergeFailure};
use crate::types::{GlobalType, Role};

/// Where the centroid relation first fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CentroidViolation {
    pub router: Role,
    /// Interactions leading to the violating construct.
    pub path: Vec<String>,
    /// The violating construct, e.g. `B->A {Suggest}`.
    pub construct: String,
}

impl fmt::Display for CentroidViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} is not the centroid: `{}` does not involve it", self.router, self.construct)?;
        if !self.path.is_empty() {
            write!(f, " (after {})", self.path.join(" / "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WfReport {
    pub projection_failures: Vec<MergeFailure>,
    pub centroid: Option<CentroidViolation>,
}

impl WfReport {
    pub fn is_ok(&self) -> bool {
        self.projection_failures.is_empty() && self.centroid.is_none()
    }
}

impl fmt::Display for WfReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let mut first = true;
        for failure in &self.projection_failures {
            if !first {
                writeln!(f)?;
            }
            first = false;
            write!(f, "{failure}")?;
        }
        if let Some(c) = &self.centroid {
            if !first {
                writeln!(f)?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

fn comm_text(from: &Role, to: &Role, via: Option<&Role>, g: &GlobalType) -> String {
    let labels: Vec<&str> = g.arms().iter().map(|a| a.label.name.as_str()).collect();
    match via {
        Some(s) => format!("{from}->{to} via {s} {{{}}}", labels.join(", ")),
        None => format!("{from}->{to} {{{}}}", labels.join(", ")),
    }
}

/// Check whether `s` is the centroid of `g`, returning the outermost
/// violation otherwise.
pub fn centroid(g: &GlobalType, s: &Role) -> Result<(), CentroidViolation> {
    fn go(g: &GlobalType, s: &Role, path: &mut Vec<String>) -> Result<(), CentroidViolation> {
        let violation = |path: &Vec<String>, construct: String| CentroidViolation {
            router: s.clone(),
            path: path.clone(),
            construct,
        };
        let (from, to) = match g {
            GlobalType::End | GlobalType::Var(_) => return Ok(()),
            GlobalType::Rec(_, body) => return go(body, s, path),
            GlobalType::Comm { from, to, .. } | GlobalType::TransitComm { from, to, .. } => {
                if s != from && s != to {
                    return Err(violation(path, comm_text(from, to, None, g)));
                }
                (from, to)
            }
            GlobalType::Routed { from, to, via, .. } | GlobalType::TransitRouted { from, to, via, .. } => {
                if via != s {
                    return Err(violation(path, comm_text(from, to, Some(via), g)));
                }
                (from, to)
            }
        };
        for arm in g.arms() {
            path.push(format!("{from}->{to}.{}", arm.label));
            let r = go(&arm.cont, s, path);
            path.pop();
            r?;
        }
        Ok(())
    }
    go(g, s, &mut Vec::new())
}

pub fn is_centroid(g: &GlobalType, s: &Role) -> bool {
    centroid(g, s).is_ok()
}

/// Projection must be defined for every participant.
pub fn check_wf(g: &GlobalType) -> WfReport {
    let projection_failures = g.participants().iter().filter_map(|p| project(g, p).err()).collect();
    WfReport { projection_failures, centroid: None }
}

pub fn is_wf(g: &GlobalType) -> bool {
    g.participants().iter().all(|p| project(g, p).is_ok())
}

/// Well-formedness with respect to router `s`: `check_wf` plus the centroid
/// condition.
pub fn check_wf_routed(g: &GlobalType, s: &Role) -> WfReport {
    let mut report = check_wf(g);
    report.centroid = centroid(g, s).err();
    report
}

pub fn is_wf_routed(g: &GlobalType, s: &Role) -> bool {
    is_centroid(g, s) && is_wf(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Arm, MsgLabel};

    fn r(s: &'static str) -> Role {
        Role::from_static(s)
    }

    fn one(from: &'static str, to: &'static str, l: &str, k: GlobalType) -> GlobalType {
        GlobalType::comm(r(from), r(to), vec![Arm::new(MsgLabel::new(l), k)])
    }

    #[test]
    fn end_is_centroid_and_wf() {
        assert!(is_centroid(&GlobalType::End, &r("X")));
        assert!(check_wf(&GlobalType::End).is_ok());
        assert!(check_wf_routed(&GlobalType::End, &r("X")).is_ok());
    }

    #[test]
    fn centroid_reports_first_violation() {
        let g = one("S", "A", "M", one("B", "A", "N", GlobalType::End));
        let v = centroid(&g, &r("S")).unwrap_err();
        assert_eq!(v.construct, "B->A {N}");
        assert_eq!(v.path, vec!["S->A.M".to_string()]);
    }

    #[test]
    fn routed_requires_matching_router() {
        let g = GlobalType::routed(r("A"), r("B"), r("T"), vec![Arm::new(MsgLabel::new("M"), GlobalType::End)]);
        assert!(!is_centroid(&g, &r("S")));
        assert!(is_centroid(&g, &r("T")));
    }

    #[test]
    fn report_lists_failing_role() {
        let hello = one("C", "A", "Hello", GlobalType::End);
        let bye = one("C", "A", "Bye", GlobalType::End);
        let g = GlobalType::comm(
            r("A"),
            r("B"),
            vec![Arm::new(MsgLabel::new("Greet"), hello), Arm::new(MsgLabel::new("Farewell"), bye)],
        );
        let report = check_wf(&g);
        assert_eq!(report.projection_failures.len(), 1);
        assert_eq!(report.projection_failures[0].role, r("C"));
        assert!(!is_wf(&g));
    }
}
