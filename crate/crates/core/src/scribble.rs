//! Front end for the Scribble subset used by the protocol corpus.
//!
//! Grammar:
//!
//! ```text
//! module   = { typeDecl | protocol }
//! typeDecl = "type" "<" Ident ">" String "from" String "as" Ident ";"
//! protocol = ["aux"] "global" "protocol" Ident "(" role { "," role } ")" "{" stmt* "}"
//! role     = "role" Ident
//! stmt     = msg | choice | doCall
//! msg      = Ident "(" [ Ident { "," Ident } ] ")" "from" Ident "to" Ident ";"
//! choice   = "choice" "at" Ident block { "or" block }
//! block    = "{" stmt* "}"
//! doCall   = "do" Ident "(" [ Ident { "," Ident } ] ")" ";"
//! ```
//!
//! `//` starts a comment that runs to the end of the line.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::types::{is_identifier, Arm, GlobalType, MsgLabel, Role, TypeError};

/// Depth guard for `do` expansion. Keys are finite, so this only trips on
/// pathological inputs.
const MAX_CALL_DEPTH: usize = 512;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceSpan {
    pub file: String,
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl SourceSpan {
    fn join(&self, other: &SourceSpan) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            start_line: self.start_line,
            start_col: self.start_col,
            end_line: other.end_line,
            end_col: other.end_col,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let file = if self.file.is_empty() { "<input>" } else { &self.file };
        write!(f, "{file}:{}:{}", self.start_line, self.start_col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScribbleError {
    #[error("syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax { span: SourceSpan, expected: Vec<String>, found: String },
    #[error("duplicate role `{role}`")]
    DuplicateRole { span: SourceSpan, role: String },
    #[error("unknown role `{role}`")]
    UnknownRole { span: SourceSpan, role: String },
    #[error("unknown protocol `{name}`")]
    UnknownProtocol { span: SourceSpan, name: String },
    #[error("duplicate protocol `{name}`")]
    DuplicateProtocol { span: SourceSpan, name: String },
    #[error("protocol `{name}` expects {expected} roles, got {found}")]
    ArityMismatch { span: SourceSpan, name: String, expected: usize, found: usize },
    #[error("role `{role}` sends a message to itself")]
    SelfMessage { span: SourceSpan, role: String },
    #[error("`do` must be the last statement of its protocol")]
    NonTailCall { span: SourceSpan },
    #[error("call chain through `{name}` does not close into recursion")]
    UnboundedCall { span: SourceSpan, name: String },
    #[error("invalid choice: {reason}")]
    InvalidChoice { span: SourceSpan, reason: String },
    #[error("aux protocol `{name}` cannot be used as an entry point")]
    AuxEntry { span: SourceSpan, name: String },
    #[error("elaborated type is invalid: {source}")]
    Type {
        span: SourceSpan,
        #[source]
        source: TypeError,
    },
}

impl ScribbleError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            ScribbleError::Syntax { span, .. }
            | ScribbleError::DuplicateRole { span, .. }
            | ScribbleError::UnknownRole { span, .. }
            | ScribbleError::UnknownProtocol { span, .. }
            | ScribbleError::DuplicateProtocol { span, .. }
            | ScribbleError::ArityMismatch { span, .. }
            | ScribbleError::SelfMessage { span, .. }
            | ScribbleError::NonTailCall { span }
            | ScribbleError::UnboundedCall { span, .. }
            | ScribbleError::InvalidChoice { span, .. }
            | ScribbleError::AuxEntry { span, .. }
            | ScribbleError::Type { span, .. } => span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub kind: String,
    pub source_name: String,
    pub origin: String,
    pub alias: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Message { label: MsgLabel, from: Role, to: Role, span: SourceSpan },
    Choice { at: Role, blocks: Vec<Vec<Stmt>>, span: SourceSpan },
    Do { protocol: String, args: Vec<Role>, span: SourceSpan },
}

impl Stmt {
    pub fn span(&self) -> &SourceSpan {
        match self {
            Stmt::Message { span, .. } | Stmt::Choice { span, .. } | Stmt::Do { span, .. } => span,
        }
    }

    fn strip_spans(&mut self) {
        match self {
            Stmt::Message { span, .. } | Stmt::Do { span, .. } => *span = SourceSpan::default(),
            Stmt::Choice { blocks, span, .. } => {
                *span = SourceSpan::default();
                blocks.iter_mut().flatten().for_each(Stmt::strip_spans);
            }
        }
    }

    fn contains_do(&self) -> bool {
        match self {
            Stmt::Do { .. } => true,
            Stmt::Message { .. } => false,
            Stmt::Choice { blocks, .. } => blocks.iter().flatten().any(Stmt::contains_do),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolDecl {
    pub name: String,
    pub roles: Vec<Role>,
    pub is_aux: bool,
    pub body: Vec<Stmt>,
    /// Alias name to descriptor, e.g. `Cred` to `typescript "Credentials" from "./Types"`.
    pub type_aliases: BTreeMap<String, String>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Module {
    pub types: Vec<TypeDecl>,
    pub protocols: Vec<ProtocolDecl>,
}

impl Module {
    pub fn protocol(&self, name: &str) -> Option<&ProtocolDecl> {
        self.protocols.iter().find(|p| p.name == name)
    }

    /// Clear all spans so that modules can be compared structurally.
    pub fn strip_spans(mut self) -> Module {
        for t in &mut self.types {
            t.span = SourceSpan::default();
        }
        for p in &mut self.protocols {
            p.span = SourceSpan::default();
            p.body.iter_mut().for_each(Stmt::strip_spans);
        }
        self
    }

    pub fn elaborate(&self, entry: &str, args: Option<&[Role]>) -> Result<GlobalType, ScribbleError> {
        elaborate(&self.protocols, entry, args)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    Punct(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Punct(c) => write!(f, "`{c}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex(text: &str, file: &str) -> Result<Vec<Token>, ScribbleError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let span_at = |l: usize, c: usize, el: usize, ec: usize| SourceSpan {
        file: file.to_string(),
        start_line: l,
        start_col: c,
        end_line: el,
        end_col: ec,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (sl, sc) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            let word: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Ident(word), span: span_at(sl, sc, line, col - 1) });
            continue;
        }
        if c == '"' {
            let start = i + 1;
            i += 1;
            col += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(ScribbleError::Syntax {
                    span: span_at(sl, sc, line, col),
                    expected: vec!["closing `\"`".into()],
                    found: "end of line".into(),
                });
            }
            let s: String = chars[start..i].iter().collect();
            i += 1;
            col += 1;
            out.push(Token { tok: Tok::Str(s), span: span_at(sl, sc, line, col - 1) });
            continue;
        }
        if "(){}<>,;".contains(c) {
            i += 1;
            col += 1;
            out.push(Token { tok: Tok::Punct(c), span: span_at(sl, sc, sl, sc) });
            continue;
        }
        return Err(ScribbleError::Syntax {
            span: span_at(sl, sc, sl, sc),
            expected: vec!["a token".into()],
            found: format!("`{c}`"),
        });
    }
    out.push(Token { tok: Tok::Eof, span: span_at(line, col, line, col) });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, ScribbleError> {
        let t = self.peek();
        Err(ScribbleError::Syntax {
            span: t.span.clone(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.to_string(),
        })
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<SourceSpan, ScribbleError> {
        if self.is_keyword(kw) {
            Ok(self.bump().span)
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn punct(&mut self, c: char) -> Result<SourceSpan, ScribbleError> {
        if self.peek().tok == Tok::Punct(c) {
            Ok(self.bump().span)
        } else {
            self.error(&[&format!("`{c}`")])
        }
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek().tok == Tok::Punct(c)
    }

    fn ident(&mut self, what: &str) -> Result<(String, SourceSpan), ScribbleError> {
        match &self.peek().tok {
            Tok::Ident(s) if is_identifier(s) => {
                let s = s.clone();
                let span = self.bump().span;
                Ok((s, span))
            }
            _ => self.error(&[what]),
        }
    }

    fn string(&mut self) -> Result<String, ScribbleError> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.error(&["a string literal"]),
        }
    }

    fn role(&mut self) -> Result<(Role, SourceSpan), ScribbleError> {
        let (name, span) = self.ident("a role name")?;
        Ok((Role::new(name).expect("identifier checked"), span))
    }

    fn module(&mut self) -> Result<Module, ScribbleError> {
        let mut module = Module::default();
        loop {
            if self.peek().tok == Tok::Eof {
                break;
            }
            if self.is_keyword("type") {
                module.types.push(self.type_decl()?);
            } else if self.is_keyword("aux") || self.is_keyword("global") {
                module.protocols.push(self.protocol()?);
            } else {
                return self.error(&["`type`", "`global`", "`aux`"]);
            }
        }
        Ok(module)
    }

    fn type_decl(&mut self) -> Result<TypeDecl, ScribbleError> {
        let start = self.keyword("type")?;
        self.punct('<')?;
        let (kind, _) = self.ident("a type kind")?;
        self.punct('>')?;
        let source_name = self.string()?;
        self.keyword("from")?;
        let origin = self.string()?;
        self.keyword("as")?;
        let (alias, _) = self.ident("an alias name")?;
        let end = self.punct(';')?;
        Ok(TypeDecl { kind, source_name, origin, alias, span: start.join(&end) })
    }

    fn protocol(&mut self) -> Result<ProtocolDecl, ScribbleError> {
        let start = self.peek().span.clone();
        let is_aux = if self.is_keyword("aux") {
            self.bump();
            true
        } else {
            false
        };
        self.keyword("global")?;
        self.keyword("protocol")?;
        let (name, _) = self.ident("a protocol name")?;
        self.punct('(')?;
        let mut roles: Vec<Role> = Vec::new();
        loop {
            self.keyword("role")?;
            let (r, span) = self.role()?;
            if roles.contains(&r) {
                return Err(ScribbleError::DuplicateRole { span, role: r.to_string() });
            }
            roles.push(r);
            if self.is_punct(',') {
                self.bump();
            } else {
                break;
            }
        }
        self.punct(')')?;
        self.punct('{')?;
        let body = self.stmts()?;
        let end = self.punct('}')?;
        Ok(ProtocolDecl { name, roles, is_aux, body, type_aliases: BTreeMap::new(), span: start.join(&end) })
    }

    fn stmts(&mut self) -> Result<Vec<Stmt>, ScribbleError> {
        let mut out = Vec::new();
        while !self.is_punct('}') {
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, ScribbleError> {
        if self.is_keyword("choice") {
            let start = self.bump().span;
            self.keyword("at")?;
            let (at, _) = self.role()?;
            let mut blocks = Vec::new();
            self.punct('{')?;
            blocks.push(self.stmts()?);
            let mut end = self.punct('}')?;
            while self.is_keyword("or") {
                self.bump();
                self.punct('{')?;
                blocks.push(self.stmts()?);
                end = self.punct('}')?;
            }
            return Ok(Stmt::Choice { at, blocks, span: start.join(&end) });
        }
        if self.is_keyword("do") {
            let start = self.bump().span;
            let (protocol, _) = self.ident("a protocol name")?;
            self.punct('(')?;
            let mut args = Vec::new();
            if !self.is_punct(')') {
                loop {
                    args.push(self.role()?.0);
                    if self.is_punct(',') {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.punct(')')?;
            let end = self.punct(';')?;
            return Ok(Stmt::Do { protocol, args, span: start.join(&end) });
        }
        let (name, start) = match &self.peek().tok {
            Tok::Ident(_) => self.ident("a message label")?,
            _ => return self.error(&["a message", "`choice`", "`do`", "`}`"]),
        };
        self.punct('(')?;
        let mut payload = Vec::new();
        if !self.is_punct(')') {
            loop {
                payload.push(self.ident("a payload sort")?.0);
                if self.is_punct(',') {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.punct(')')?;
        self.keyword("from")?;
        let (from, _) = self.role()?;
        self.keyword("to")?;
        let (to, _) = self.role()?;
        let end = self.punct(';')?;
        Ok(Stmt::Message { label: MsgLabel::with_payload(name, payload), from, to, span: start.join(&end) })
    }
}

/// Parse a module read from `file` (used only in spans).
pub fn parse_module_named(text: &str, file: &str) -> Result<Module, ScribbleError> {
    let toks = lex(text, file)?;
    let mut parser = Parser { toks, pos: 0 };
    let mut module = parser.module()?;
    check_module(&mut module)?;
    Ok(module)
}

pub fn parse_module(text: &str) -> Result<Module, ScribbleError> {
    parse_module_named(text, "")
}

fn check_module(module: &mut Module) -> Result<(), ScribbleError> {
    let aliases: BTreeMap<String, String> = module
        .types
        .iter()
        .map(|t| (t.alias.clone(), format!("{} \"{}\" from \"{}\"", t.kind, t.source_name, t.origin)))
        .collect();
    let mut arity = HashMap::new();
    for p in &module.protocols {
        if arity.insert(p.name.clone(), p.roles.len()).is_some() {
            return Err(ScribbleError::DuplicateProtocol { span: p.span.clone(), name: p.name.clone() });
        }
    }
    for p in &mut module.protocols {
        p.type_aliases = aliases.clone();
        let roles: HashSet<&Role> = p.roles.iter().collect();
        check_stmts(&p.body, &roles, &arity)?;
    }
    Ok(())
}

fn check_stmts(stmts: &[Stmt], roles: &HashSet<&Role>, arity: &HashMap<String, usize>) -> Result<(), ScribbleError> {
    let known = |r: &Role, span: &SourceSpan| {
        if roles.contains(r) {
            Ok(())
        } else {
            Err(ScribbleError::UnknownRole { span: span.clone(), role: r.to_string() })
        }
    };
    for stmt in stmts {
        match stmt {
            Stmt::Message { from, to, span, .. } => {
                known(from, span)?;
                known(to, span)?;
                if from == to {
                    return Err(ScribbleError::SelfMessage { span: span.clone(), role: from.to_string() });
                }
            }
            Stmt::Choice { at, blocks, span } => {
                known(at, span)?;
                for b in blocks {
                    check_stmts(b, roles, arity)?;
                }
            }
            Stmt::Do { protocol, args, span } => {
                let expected = *arity
                    .get(protocol)
                    .ok_or_else(|| ScribbleError::UnknownProtocol { span: span.clone(), name: protocol.clone() })?;
                if expected != args.len() {
                    return Err(ScribbleError::ArityMismatch {
                        span: span.clone(),
                        name: protocol.clone(),
                        expected,
                        found: args.len(),
                    });
                }
                let mut seen = HashSet::new();
                for a in args {
                    known(a, span)?;
                    if !seen.insert(a) {
                        return Err(ScribbleError::DuplicateRole { span: span.clone(), role: a.to_string() });
                    }
                }
            }
        }
    }
    Ok(())
}

struct Elaborator<'a> {
    decls: &'a [ProtocolDecl],
    stack: Vec<(String, Vec<Role>)>,
}

fn binder_name(protocol: &str, args: &[Role]) -> String {
    let mut s = protocol.to_string();
    for a in args {
        s.push('_');
        s.push_str(a.as_str());
    }
    s
}

impl<'a> Elaborator<'a> {
    fn decl(&self, name: &str, span: &SourceSpan) -> Result<&'a ProtocolDecl, ScribbleError> {
        let decls: &'a [ProtocolDecl] = self.decls;
        decls
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| ScribbleError::UnknownProtocol { span: span.clone(), name: name.to_string() })
    }

    fn call(
        &mut self,
        name: &str,
        args: &[Role],
        span: &SourceSpan,
        is_entry: bool,
    ) -> Result<GlobalType, ScribbleError> {
        let key = (name.to_string(), args.to_vec());
        if self.stack.contains(&key) {
            return Ok(GlobalType::var(binder_name(name, args)));
        }
        if self.stack.len() >= MAX_CALL_DEPTH {
            return Err(ScribbleError::UnboundedCall { span: span.clone(), name: name.to_string() });
        }
        let decl = self.decl(name, span)?;
        if decl.roles.len() != args.len() {
            return Err(ScribbleError::ArityMismatch {
                span: span.clone(),
                name: name.to_string(),
                expected: decl.roles.len(),
                found: args.len(),
            });
        }
        let subst: HashMap<Role, Role> = decl.roles.iter().cloned().zip(args.iter().cloned()).collect();
        self.stack.push(key);
        let body = self.stmts(&decl.body, &[], &subst);
        self.stack.pop();
        let body = body?;
        let binder = binder_name(name, args);
        if !is_entry || body.free_vars().contains(&binder) {
            Ok(GlobalType::rec(binder, body))
        } else {
            Ok(body)
        }
    }

    /// Elaborate `stmts` followed by `rest` (the statements after an enclosing
    /// choice).
    fn stmts(
        &mut self,
        stmts: &[Stmt],
        rest: &[Stmt],
        subst: &HashMap<Role, Role>,
    ) -> Result<GlobalType, ScribbleError> {
        let Some((head, tail)) = stmts.split_first() else {
            return if rest.is_empty() { Ok(GlobalType::End) } else { self.stmts(rest, &[], subst) };
        };
        let r = |role: &Role| subst.get(role).cloned().unwrap_or_else(|| role.clone());
        match head {
            Stmt::Message { label, from, to, .. } => {
                let cont = self.stmts(tail, rest, subst)?;
                Ok(GlobalType::comm(r(from), r(to), vec![Arm::new(label.clone(), cont)]))
            }
            Stmt::Do { protocol, args, span } => {
                if !tail.is_empty() || !rest.is_empty() {
                    return Err(ScribbleError::NonTailCall { span: span.clone() });
                }
                let args: Vec<Role> = args.iter().map(r).collect();
                self.call(protocol, &args, span, false)
            }
            Stmt::Choice { at, blocks, span } => {
                let has_following = !tail.is_empty() || !rest.is_empty();
                if has_following && head.contains_do() {
                    return Err(ScribbleError::NonTailCall { span: span.clone() });
                }
                let mut peer: Option<Role> = None;
                let mut arms: Vec<Arm<GlobalType>> = Vec::new();
                let follow: Vec<Stmt> = tail.iter().chain(rest.iter()).cloned().collect();
                for block in blocks {
                    let Some(Stmt::Message { label, from, to, span: mspan }) = block.first() else {
                        return Err(ScribbleError::InvalidChoice {
                            span: span.clone(),
                            reason: format!("every block must start with a message from `{at}`"),
                        });
                    };
                    if from != at {
                        return Err(ScribbleError::InvalidChoice {
                            span: mspan.clone(),
                            reason: format!("block starts with a message from `{from}`, not `{at}`"),
                        });
                    }
                    match &peer {
                        None => peer = Some(to.clone()),
                        Some(p) if p != to => {
                            return Err(ScribbleError::InvalidChoice {
                                span: mspan.clone(),
                                reason: format!("blocks address different roles `{p}` and `{to}`"),
                            })
                        }
                        _ => {}
                    }
                    if arms.iter().any(|a| a.label == *label) {
                        return Err(ScribbleError::InvalidChoice {
                            span: mspan.clone(),
                            reason: format!("label `{label}` appears in more than one block"),
                        });
                    }
                    let cont = self.stmts(&block[1..], &follow, subst)?;
                    arms.push(Arm::new(label.clone(), cont));
                }
                let peer = peer.ok_or_else(|| ScribbleError::InvalidChoice {
                    span: span.clone(),
                    reason: "choice has no blocks".into(),
                })?;
                Ok(GlobalType::comm(r(at), r(&peer), arms))
            }
        }
    }
}

/// Expand `entry` applied to `args` (defaulting to its declared roles) into a
/// closed global type. Each `do` becomes a back-edge to an enclosing expansion
/// with the same protocol and role tuple, or a fresh recursive expansion.
pub fn elaborate(decls: &[ProtocolDecl], entry: &str, args: Option<&[Role]>) -> Result<GlobalType, ScribbleError> {
    let nowhere = SourceSpan::default();
    let decl = decls
        .iter()
        .find(|d| d.name == entry)
        .ok_or_else(|| ScribbleError::UnknownProtocol { span: nowhere.clone(), name: entry.to_string() })?;
    if decl.is_aux {
        return Err(ScribbleError::AuxEntry { span: decl.span.clone(), name: entry.to_string() });
    }
    let args: Vec<Role> = args.map(|a| a.to_vec()).unwrap_or_else(|| decl.roles.clone());
    let mut el = Elaborator { decls, stack: Vec::new() };
    let g = el.call(entry, &args, &decl.span, true)?;
    g.validate().map_err(|source| ScribbleError::Type { span: decl.span.clone(), source })?;
    Ok(g)
}

/// Render a module back to source text.
pub fn pretty_print(module: &Module) -> String {
    let mut out = String::new();
    for t in &module.types {
        let _ = writeln!(out, "type <{}> \"{}\" from \"{}\" as {};", t.kind, t.source_name, t.origin, t.alias);
    }
    for (i, p) in module.protocols.iter().enumerate() {
        if i > 0 || !module.types.is_empty() {
            out.push('\n');
        }
        let roles: Vec<String> = p.roles.iter().map(|r| format!("role {r}")).collect();
        let aux = if p.is_aux { "aux " } else { "" };
        let _ = writeln!(out, "{aux}global protocol {}({}) {{", p.name, roles.join(", "));
        print_stmts(&mut out, &p.body, 1);
        out.push_str("}\n");
    }
    out
}

fn print_stmts(out: &mut String, stmts: &[Stmt], indent: usize) {
    let pad = "  ".repeat(indent);
    for s in stmts {
        match s {
            Stmt::Message { label, from, to, .. } => {
                let _ = writeln!(out, "{pad}{}({}) from {from} to {to};", label.name, label.payload.join(", "));
            }
            Stmt::Do { protocol, args, .. } => {
                let args: Vec<&str> = args.iter().map(Role::as_str).collect();
                let _ = writeln!(out, "{pad}do {protocol}({});", args.join(", "));
            }
            Stmt::Choice { at, blocks, .. } => {
                let _ = write!(out, "{pad}choice at {at} ");
                for (i, b) in blocks.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" or ");
                    }
                    out.push_str("{\n");
                    print_stmts(out, b, indent + 1);
                    let _ = write!(out, "{pad}}}");
                }
                out.push('\n');
            }
        }
    }
}
