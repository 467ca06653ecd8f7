//! Router-parameterised encoding of canonical protocols into routed ones, on
//! global types, local types and action labels.

use log::warn;
use thiserror::Error;

use crate::types::{ActionKind, ActionLabel, Arm, GlobalType, LocalType, Role, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("encoding is only defined on canonical types, found `{0}`")]
    NotCanonical(String),
    #[error("label `{0}` is already routed")]
    AlreadyRouted(String),
}

fn enc_arms(arms: &[Arm<GlobalType>], s: &Role, transit: bool) -> Result<Vec<Arm<GlobalType>>, EncodingError> {
    arms.iter().map(|a| Ok(Arm::new(a.label.clone(), enc(&a.cont, s, transit)?))).collect()
}

fn enc(g: &GlobalType, s: &Role, transit: bool) -> Result<GlobalType, EncodingError> {
    match g {
        GlobalType::End | GlobalType::Var(_) => Ok(g.clone()),
        GlobalType::Rec(t, body) => Ok(GlobalType::rec(t.clone(), enc(body, s, transit)?)),
        GlobalType::Comm { from, to, arms } => {
            let arms = enc_arms(arms, s, transit)?;
            if s == from || s == to {
                Ok(GlobalType::comm(from.clone(), to.clone(), arms))
            } else {
                Ok(GlobalType::routed(from.clone(), to.clone(), s.clone(), arms))
            }
        }
        GlobalType::TransitComm { from, to, chosen, arms } if transit => {
            let arms = enc_arms(arms, s, transit)?;
            if s == from || s == to {
                Ok(GlobalType::TransitComm { from: from.clone(), to: to.clone(), chosen: chosen.clone(), arms })
            } else {
                Ok(GlobalType::TransitRouted {
                    from: from.clone(),
                    to: to.clone(),
                    via: s.clone(),
                    chosen: chosen.clone(),
                    arms,
                })
            }
        }
        other => Err(EncodingError::NotCanonical(other.describe())),
    }
}

/// Route every interaction of `g` that does not involve `s` through `s`.
pub fn encode_global(g: &GlobalType, s: &Role) -> Result<GlobalType, EncodingError> {
    enc(g, s, false)
}

/// Like [`encode_global`], but also maps in-transit direct communications to
/// their routed counterparts, so that reachable states of a canonical type
/// can be related to reachable states of its encoding.
pub fn encode_global_state(g: &GlobalType, s: &Role) -> Result<GlobalType, EncodingError> {
    enc(g, s, true)
}

/// Encode a local type from the perspective of role `q`.
pub fn encode_local(t: &LocalType, q: &Role, s: &Role) -> Result<LocalType, EncodingError> {
    if q == s {
        warn!("encoding a local type from the router's own perspective ({s}); returning it unchanged");
        return Ok(t.clone());
    }
    enc_local(t, s)
}

fn enc_local(t: &LocalType, s: &Role) -> Result<LocalType, EncodingError> {
    let arms = |arms: &[Arm<LocalType>]| -> Result<Vec<Arm<LocalType>>, EncodingError> {
        arms.iter().map(|a| Ok(Arm::new(a.label.clone(), enc_local(&a.cont, s)?))).collect()
    };
    match t {
        LocalType::End | LocalType::Var(_) => Ok(t.clone()),
        LocalType::Rec(x, body) => Ok(LocalType::rec(x.clone(), enc_local(body, s)?)),
        LocalType::Select { to, arms: xs } => {
            if s == to {
                Ok(LocalType::Select { to: to.clone(), arms: arms(xs)? })
            } else {
                Ok(LocalType::RoutedSelect { to: to.clone(), via: s.clone(), arms: arms(xs)? })
            }
        }
        LocalType::Branch { from, arms: xs } => {
            if s == from {
                Ok(LocalType::Branch { from: from.clone(), arms: arms(xs)? })
            } else {
                Ok(LocalType::RoutedBranch { from: from.clone(), via: s.clone(), arms: arms(xs)? })
            }
        }
        other => Err(EncodingError::NotCanonical(other.describe())),
    }
}

/// Encode a direct action label: routed via `s` unless `s` is an endpoint.
pub fn encode_label(l: &ActionLabel, s: &Role) -> Result<ActionLabel, EncodingError> {
    if l.is_routed() {
        return Err(EncodingError::AlreadyRouted(l.to_string()));
    }
    if &l.from == s || &l.to == s {
        return Ok(l.clone());
    }
    let kind = match l.kind {
        ActionKind::DirectSend => ActionKind::RoutedSend,
        _ => ActionKind::RoutedRecv,
    };
    Ok(ActionLabel { kind, from: l.from.clone(), to: l.to.clone(), via: Some(s.clone()), msg: l.msg.clone() })
}
