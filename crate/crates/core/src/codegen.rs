//! Callback-style endpoint skeletons emitted from an EFSM through text
//! templates.
//!
//! A template is a sequence of sections. Each section starts with a line
//! `@@ name` and runs up to the next section line; lines starting with `##`
//! are comments. Section bodies may use the placeholders `{{role}}`,
//! `{{protocol}}`, `{{state}}`, `{{peer}}`, `{{label}}`, `{{payloads}}`
//! (comma-separated sorts), `{{params}}` (`payload1: sort, ...`),
//! `{{successor}}`, `{{alternatives}}`, `{{initial}}` and `{{terminal}}`.
//!
//! Four units are emitted, named by the `file.message`, `file.handler`,
//! `file.state` and `file.factory` sections:
//!
//! - message: `message.item` per transition, then `message.state` per
//!   non-terminal state with `{{alternatives}}` built from `message.alt`;
//! - handler: `handler.send` / `handler.receive` per state, with
//!   alternatives from `handler.send.alt` / `handler.receive.alt`;
//! - state: `state.send`, `state.receive`, `state.terminal`;
//! - factory: `factory.send` (alternatives from `factory.send.alt`),
//!   `factory.receive`, `factory.terminal`, then `factory.initial` and
//!   `factory.terminal_alias`.
//!
//! Every unit is framed by optional `<unit>.begin` and `<unit>.end`
//! sections. Alternatives are joined by newlines unless the alternative
//! section `X` has a companion `X.sep` giving the separator.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::efsm::{Efsm, StateKind, Transition};

const SERVER_TEMPLATE: &str = include_str!("../templates/server.tmpl");
const CLIENT_TEMPLATE: &str = include_str!("../templates/client.tmpl");

const UNITS: [&str; 4] = ["message", "handler", "state", "factory"];

#[derive(Debug, Error)]
pub enum CodegenError {
    #[error("unsupported flavor `{0}` (expected `server` or `client`)")]
    UnsupportedFlavor(String),
    #[error("role {role} forwards messages for other roles; routing has no endpoint surface")]
    RoutingSurface { role: String },
    #[error("template line {line}: {message}")]
    TemplateSyntax { line: usize, message: String },
    #[error("template is missing section `{0}`")]
    MissingSection(String),
    #[error("placeholder `{{{{{name}}}}}` is not available in section `{section}`")]
    UnknownPlaceholder { section: String, name: String },
    #[error("cannot write skeleton: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Server,
    Client,
}

impl FromStr for Flavor {
    type Err = CodegenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "server" => Ok(Flavor::Server),
            "client" => Ok(Flavor::Client),
            other => Err(CodegenError::UnsupportedFlavor(other.to_string())),
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Server => "server",
            Flavor::Client => "client",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    sections: BTreeMap<String, String>,
}

impl Template {
    pub fn parse(text: &str) -> Result<Template, CodegenError> {
        let mut sections: BTreeMap<String, String> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            if line.starts_with("##") {
                continue;
            }
            if let Some(rest) = line.strip_prefix("@@") {
                let name = rest.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(CodegenError::TemplateSyntax {
                        line: i + 1,
                        message: format!("bad section name `{name}`"),
                    });
                }
                if sections.insert(name.to_string(), String::new()).is_some() {
                    return Err(CodegenError::TemplateSyntax {
                        line: i + 1,
                        message: format!("duplicate section `{name}`"),
                    });
                }
                current = Some(name.to_string());
                continue;
            }
            match &current {
                Some(name) => {
                    let body = sections.get_mut(name).expect("section was inserted");
                    body.push_str(line);
                    body.push('\n');
                }
                None if line.trim().is_empty() => {}
                None => {
                    return Err(CodegenError::TemplateSyntax {
                        line: i + 1,
                        message: "text before the first section".to_string(),
                    })
                }
            }
        }
        for unit in UNITS {
            let key = format!("file.{unit}");
            if !sections.contains_key(&key) {
                return Err(CodegenError::MissingSection(key));
            }
        }
        Ok(Template { sections })
    }

    pub fn builtin(flavor: Flavor) -> Template {
        let text = match flavor {
            Flavor::Server => SERVER_TEMPLATE,
            Flavor::Client => CLIENT_TEMPLATE,
        };
        Template::parse(text).expect("builtin templates parse")
    }

    pub fn section(&self, name: &str) -> Option<&str> {
        self.sections.get(name).map(String::as_str)
    }

    fn render(&self, name: &str, vars: &[(&str, &str)]) -> Result<String, CodegenError> {
        match self.sections.get(name) {
            None => Ok(String::new()),
            Some(body) => substitute(body, name, vars),
        }
    }

    fn render_alt(&self, name: &str, vars: &[(&str, &str)]) -> Result<String, CodegenError> {
        let mut s = self.render(name, vars)?;
        if s.ends_with('\n') {
            s.pop();
        }
        Ok(s)
    }
}

fn substitute(body: &str, section: &str, vars: &[(&str, &str)]) -> Result<String, CodegenError> {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find("}}").ok_or_else(|| CodegenError::UnknownPlaceholder {
            section: section.to_string(),
            name: after.lines().next().unwrap_or("").to_string(),
        })?;
        let name = after[..end].trim();
        let value = vars
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| CodegenError::UnknownPlaceholder { section: section.to_string(), name: name.to_string() })?;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

pub fn state_name(id: usize) -> String {
    format!("S{id}")
}

/// Emitted files keyed by relative path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub files: BTreeMap<String, String>,
}

impl Skeleton {
    /// Write every file below `dir`, creating directories as needed.
    pub fn write_to(&self, dir: &Path) -> Result<(), CodegenError> {
        for (name, text) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, text)?;
        }
        Ok(())
    }
}

struct Ctx<'a> {
    t: &'a Template,
    e: &'a Efsm,
    role: &'a str,
    protocol: &'a str,
}

impl Ctx<'_> {
    fn framed(&self, unit: &str, body: String) -> Result<String, CodegenError> {
        let vars = [("role", self.role), ("protocol", self.protocol)];
        let mut out = self.t.render(&format!("{unit}.begin"), &vars)?;
        out.push_str(&body);
        out.push_str(&self.t.render(&format!("{unit}.end"), &vars)?);
        Ok(out)
    }

    fn alternatives(&self, section: &str, ts: &[&Transition]) -> Result<String, CodegenError> {
        let mut alts = Vec::with_capacity(ts.len());
        for tr in ts {
            let state = state_name(tr.from);
            let successor = state_name(tr.to);
            let payloads = tr.label.payload.join(", ");
            let params = params(tr);
            let vars = [
                ("role", self.role),
                ("protocol", self.protocol),
                ("state", state.as_str()),
                ("peer", tr.peer.as_str()),
                ("label", tr.label.name.as_str()),
                ("payloads", payloads.as_str()),
                ("params", params.as_str()),
                ("successor", successor.as_str()),
            ];
            alts.push(self.t.render_alt(section, &vars)?);
        }
        let sep = match self.t.sections.get(&format!("{section}.sep")) {
            Some(body) => body.strip_suffix('\n').unwrap_or(body).to_string(),
            None => "\n".to_string(),
        };
        Ok(alts.join(&sep))
    }

    fn per_state(&self, unit: &str) -> Result<String, CodegenError> {
        let mut out = String::new();
        for s in &self.e.states {
            let ts: Vec<&Transition> = self.e.outgoing(s.id).collect();
            let state = state_name(s.id);
            let peer = ts.first().map(|t| t.peer.as_str()).unwrap_or("");
            let kind = match s.kind {
                StateKind::Send => "send",
                StateKind::Receive => "receive",
                StateKind::Terminal => "terminal",
            };
            let (section, alt) = match unit {
                "message" if s.kind == StateKind::Terminal => continue,
                "message" => {
                    for tr in &ts {
                        out.push_str(&self.alternatives("message.item", &[tr])?);
                        out.push('\n');
                    }
                    ("message.state".to_string(), Some("message.alt".to_string()))
                }
                "handler" if s.kind == StateKind::Terminal => continue,
                "state" => (format!("state.{kind}"), None),
                "handler" | "factory" if s.kind == StateKind::Send => {
                    (format!("{unit}.send"), Some(format!("{unit}.send.alt")))
                }
                "handler" => ("handler.receive".to_string(), Some("handler.receive.alt".to_string())),
                _ => (format!("factory.{kind}"), None),
            };
            let alternatives = match alt {
                Some(a) => self.alternatives(&a, &ts)?,
                None => String::new(),
            };
            let vars = [
                ("role", self.role),
                ("protocol", self.protocol),
                ("state", state.as_str()),
                ("peer", peer),
                ("alternatives", alternatives.as_str()),
            ];
            out.push_str(&self.t.render(&section, &vars)?);
        }
        if unit == "factory" {
            let initial = state_name(self.e.initial);
            let vars = [("role", self.role), ("protocol", self.protocol), ("initial", initial.as_str())];
            out.push_str(&self.t.render("factory.initial", &vars)?);
            if let Some(term) = self.e.terminal_states().next() {
                let terminal = state_name(term.id);
                let vars = [("role", self.role), ("protocol", self.protocol), ("terminal", terminal.as_str())];
                out.push_str(&self.t.render("factory.terminal_alias", &vars)?);
            }
        }
        Ok(out)
    }
}

fn params(tr: &Transition) -> String {
    tr.label.payload.iter().enumerate().map(|(i, s)| format!("payload{}: {s}", i + 1)).collect::<Vec<_>>().join(", ")
}

/// Emit the four skeleton units for `e` using `template`.
pub fn emit_with_template(e: &Efsm, protocol: &str, template: &Template) -> Result<Skeleton, CodegenError> {
    if e.has_routing() {
        return Err(CodegenError::RoutingSurface { role: e.role.to_string() });
    }
    let ctx = Ctx { t: template, e, role: e.role.as_str(), protocol };
    let mut files = BTreeMap::new();
    for unit in UNITS {
        let name = template.render(&format!("file.{unit}"), &[("role", ctx.role), ("protocol", protocol)])?;
        let body = ctx.per_state(unit)?;
        files.insert(name.trim().to_string(), ctx.framed(unit, body)?);
    }
    Ok(Skeleton { files })
}

/// Emit with the built-in template of `flavor`.
pub fn emit_skeleton(e: &Efsm, protocol: &str, flavor: Flavor) -> Result<Skeleton, CodegenError> {
    emit_with_template(e, protocol, &Template::builtin(flavor))
}
