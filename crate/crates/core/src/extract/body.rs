//! Pattern matching over method-body token streams: call sites, typed
//! locals, and string-valued expressions.

use std::collections::BTreeMap;
use std::ops::Range;

use super::lexer::{Token, TokenKind};
use super::parser::{is_keyword, simple_type_name, FieldDecl};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Receiver {
    /// `foo(...)`
    Unqualified,
    /// `this.foo(...)`
    This,
    /// `name.foo(...)` or `this.name.foo(...)`
    Name(String),
    /// anything else: chained calls, array elements, qualified paths
    Complex,
}

#[derive(Debug, Clone)]
pub struct CallSite {
    pub receiver: Receiver,
    pub method: String,
    /// Token ranges of the individual arguments.
    pub args: Vec<Range<usize>>,
    /// Token index of the method name.
    pub pos: usize,
}

#[derive(Debug, Clone)]
pub struct LocalVar {
    pub name: String,
    pub declared_type: String,
    pub pos: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BodyFacts {
    pub calls: Vec<CallSite>,
    pub locals: Vec<LocalVar>,
    /// Assignments `name = expr;` keyed by name, in source order.
    pub assignments: BTreeMap<String, Vec<(usize, Range<usize>)>>,
}

impl BodyFacts {
    /// Declared type of a local visible at `pos` (latest declaration before it).
    pub fn local_type(&self, name: &str, pos: usize) -> Option<&str> {
        self.locals
            .iter()
            .rev()
            .find(|l| l.name == name && l.pos < pos)
            .map(|l| l.declared_type.as_str())
    }

    /// Latest assignment to `name` before token `before`: (name position, rhs range).
    pub fn last_assignment(&self, name: &str, before: usize) -> Option<(usize, Range<usize>)> {
        self.assignments
            .get(name)?
            .iter()
            .rev()
            .find(|(p, _)| *p < before)
            .cloned()
    }
}

const PRIMITIVES: &[&str] = &[
    "int", "long", "short", "byte", "char", "boolean", "double", "float",
];

fn is_open(t: &Token) -> bool {
    t.is_punct('(') || t.is_punct('{') || t.is_punct('[')
}

fn is_close(t: &Token) -> bool {
    t.is_punct(')') || t.is_punct('}') || t.is_punct(']')
}

/// Index of the token closing the group opened at `open`, bounded by `end`.
pub fn matching_close(toks: &[Token], open: usize, end: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, t) in toks.iter().enumerate().take(end).skip(open) {
        if is_open(t) {
            depth += 1;
        } else if is_close(t) {
            depth = depth.checked_sub(1)?;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// Tries to read a type reference starting at `i`; returns the rendered
/// type and the index just past it.
fn read_type(toks: &[Token], mut i: usize, end: usize) -> Option<(String, usize)> {
    let first = toks.get(i).filter(|_| i < end)?;
    if !first.is_ident() {
        return None;
    }
    if is_keyword(&first.text) && !PRIMITIVES.contains(&first.text.as_str()) {
        return None;
    }
    let mut out = first.text.clone();
    i += 1;
    while i + 1 < end && toks[i].is_punct('.') && toks[i + 1].is_ident() {
        out.push('.');
        out.push_str(&toks[i + 1].text);
        i += 2;
    }
    if i < end && toks[i].is_punct('<') {
        let mut depth = 0usize;
        let start = i;
        loop {
            if i >= end {
                return None;
            }
            let t = &toks[i];
            if t.is_punct('<') {
                depth += 1;
            } else if t.is_punct('>') {
                depth -= 1;
                if depth == 0 {
                    i += 1;
                    break;
                }
            } else if !(t.is_ident() || t.is_punct(',') || t.is_punct('.') || t.is_punct('?')
                || t.is_punct('[') || t.is_punct(']'))
            {
                return None;
            }
            i += 1;
        }
        let inner: String = toks[start..i]
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join("");
        out.push_str(&inner);
    }
    while i + 1 < end && toks[i].is_punct('[') && toks[i + 1].is_punct(']') {
        out.push_str("[]");
        i += 2;
    }
    Some((out, i))
}

/// Splits an argument list into per-argument ranges. Commas inside
/// brackets or inside `new T<A, B>` type arguments do not split.
pub fn split_args(toks: &[Token], range: Range<usize>) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    if range.is_empty() {
        return out;
    }
    let mut depth = 0usize;
    let mut start = range.start;
    let mut i = range.start;
    while i < range.end {
        let t = &toks[i];
        if t.is_word("new") {
            if let Some((_, next)) = read_type(toks, i + 1, range.end) {
                i = next;
                continue;
            }
        }
        if is_open(t) {
            depth += 1;
        } else if is_close(t) {
            depth = depth.saturating_sub(1);
        } else if depth == 0 && t.is_punct(',') {
            out.push(start..i);
            start = i + 1;
        }
        i += 1;
    }
    out.push(start..range.end);
    out
}

fn statement_end(toks: &[Token], from: usize, end: usize) -> usize {
    let mut depth = 0usize;
    let mut i = from;
    while i < end {
        let t = &toks[i];
        if is_open(t) {
            depth += 1;
        } else if is_close(t) {
            if depth == 0 {
                return i;
            }
            depth -= 1;
        } else if depth == 0 && (t.is_punct(';') || t.is_punct(',')) {
            return i;
        }
        i += 1;
    }
    end
}

pub fn analyze_body(toks: &[Token], body: Range<usize>) -> BodyFacts {
    let mut facts = BodyFacts::default();
    let end = body.end;
    let mut i = body.start;
    while i < end {
        let t = &toks[i];
        let prev = if i > body.start { toks.get(i - 1) } else { None };

        // local declarations: `Type name =|;|:|,|)`
        let decl_ctx = prev.is_none_or(|p| {
            p.is_punct('{')
                || p.is_punct(';')
                || p.is_punct('(')
                || p.is_punct(',')
                || p.is_punct('}')
                || p.is_word("final")
        });
        if decl_ctx && t.is_ident() {
            if let Some((ty, j)) = read_type(toks, i, end) {
                if j + 1 < end
                    && toks[j].is_ident()
                    && !is_keyword(&toks[j].text)
                    && (toks[j + 1].is_punct(';')
                        || toks[j + 1].is_punct(':')
                        || toks[j + 1].is_punct(',')
                        || toks[j + 1].is_punct(')')
                        || (toks[j + 1].is_punct('=')
                            && !toks.get(j + 2).is_some_and(|n| n.is_punct('='))))
                {
                    let mut declared = ty;
                    if declared == "var" && toks[j + 1].is_punct('=') && toks.get(j + 2).is_some_and(|n| n.is_word("new"))
                    {
                        if let Some((inferred, _)) = read_type(toks, j + 3, end) {
                            declared = inferred;
                        }
                    }
                    facts.locals.push(LocalVar {
                        name: toks[j].text.clone(),
                        declared_type: declared,
                        pos: j,
                    });
                }
            }
        }

        // assignments: `name = expr`
        if t.is_ident()
            && toks.get(i + 1).is_some_and(|n| n.is_punct('='))
            && !toks.get(i + 2).is_some_and(|n| n.is_punct('='))
            && !prev.is_some_and(|p| p.is_punct('.') || p.is_punct('=') || p.is_punct('!') || p.is_punct('<') || p.is_punct('>'))
        {
            let rhs_start = i + 2;
            let rhs_end = statement_end(toks, rhs_start, end);
            facts
                .assignments
                .entry(t.text.clone())
                .or_default()
                .push((i, rhs_start..rhs_end));
        }

        // calls: `name(`
        if t.is_ident()
            && !is_keyword(&t.text)
            && toks.get(i + 1).is_some_and(|n| n.is_punct('('))
            && !prev.is_some_and(|p| p.is_word("new"))
        {
            if let Some(close) = matching_close(toks, i + 1, end) {
                let receiver = receiver_of(toks, body.start, i);
                if let Some(receiver) = receiver {
                    facts.calls.push(CallSite {
                        receiver,
                        method: t.text.clone(),
                        args: split_args(toks, i + 2..close),
                        pos: i,
                    });
                }
            }
        }
        i += 1;
    }
    facts
}

/// Receiver of the call whose name token is at `i`; `None` when the token
/// is not a call (e.g. a declaration in a local class).
fn receiver_of(toks: &[Token], start: usize, i: usize) -> Option<Receiver> {
    let at = |k: usize| if k >= start { toks.get(k) } else { None };
    match at(i.wrapping_sub(1)) {
        Some(p) if p.is_punct('.') => {}
        Some(p) if p.is_ident() && !is_keyword(&p.text) => return None,
        Some(p) if p.is_punct('>') => return None,
        _ => return Some(Receiver::Unqualified),
    }
    let Some(r) = at(i.wrapping_sub(2)) else {
        return Some(Receiver::Complex);
    };
    if r.is_word("this") {
        return Some(Receiver::This);
    }
    if !r.is_ident() || is_keyword(&r.text) {
        return Some(Receiver::Complex);
    }
    match at(i.wrapping_sub(3)) {
        Some(d) if d.is_punct('.') => {
            if at(i.wrapping_sub(4)).is_some_and(|t| t.is_word("this")) {
                Some(Receiver::Name(r.text.clone()))
            } else {
                Some(Receiver::Complex)
            }
        }
        _ => Some(Receiver::Name(r.text.clone())),
    }
}

/// One piece of a string expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fragment {
    Literal(String),
    Dynamic,
}

/// Context for resolving names inside string expressions.
pub struct StringScope<'a> {
    pub toks: &'a [Token],
    pub facts: Option<&'a BodyFacts>,
    pub fields: &'a [FieldDecl],
}

const MAX_DEPTH: usize = 6;

impl StringScope<'_> {
    /// Evaluates a concatenation expression into literal and dynamic pieces.
    pub fn eval(&self, range: Range<usize>, at: usize) -> Vec<Fragment> {
        self.eval_depth(range, at, 0)
    }

    fn eval_depth(&self, range: Range<usize>, at: usize, depth: usize) -> Vec<Fragment> {
        if depth > MAX_DEPTH || range.is_empty() {
            return vec![Fragment::Dynamic];
        }
        let toks = self.toks;
        let mut out = Vec::new();
        let mut part_start = range.start;
        let mut nest = 0usize;
        let mut parts = Vec::new();
        for i in range.clone() {
            let t = &toks[i];
            if is_open(t) {
                nest += 1;
            } else if is_close(t) {
                nest = nest.saturating_sub(1);
            } else if nest == 0 && t.is_punct('+') {
                parts.push(part_start..i);
                part_start = i + 1;
            }
        }
        parts.push(part_start..range.end);
        for part in parts {
            out.extend(self.eval_part(part, at, depth));
        }
        out
    }

    fn eval_part(&self, part: Range<usize>, at: usize, depth: usize) -> Vec<Fragment> {
        let toks = self.toks;
        let slice = &toks[part.clone()];
        match slice {
            [t] if t.kind == TokenKind::Str => vec![Fragment::Literal(t.text.clone())],
            [t] if t.kind == TokenKind::Number || t.kind == TokenKind::Char => {
                vec![Fragment::Literal(t.text.clone())]
            }
            [t] if t.is_ident() => self.eval_name(&t.text, at, depth),
            [this, dot, t] if this.is_word("this") && dot.is_punct('.') && t.is_ident() => {
                self.eval_field(&t.text, depth)
            }
            [open, .., close] if open.is_punct('(') && close.is_punct(')') => {
                if matching_close(toks, part.start, part.end) == Some(part.end - 1) {
                    self.eval_depth(part.start + 1..part.end - 1, at, depth + 1)
                } else {
                    vec![Fragment::Dynamic]
                }
            }
            [s, dot, f, open, ..]
                if s.is_word("String") && dot.is_punct('.') && f.is_word("format") && open.is_punct('(') =>
            {
                let Some(close) = matching_close(toks, part.start + 3, part.end) else {
                    return vec![Fragment::Dynamic];
                };
                let args = split_args(toks, part.start + 4..close);
                let Some(fmt) = args.first() else {
                    return vec![Fragment::Dynamic];
                };
                let mut out = Vec::new();
                for frag in self.eval_depth(fmt.clone(), at, depth + 1) {
                    match frag {
                        Fragment::Literal(s) => out.extend(split_format(&s)),
                        Fragment::Dynamic => out.push(Fragment::Dynamic),
                    }
                }
                out
            }
            _ => vec![Fragment::Dynamic],
        }
    }

    fn eval_name(&self, name: &str, at: usize, depth: usize) -> Vec<Fragment> {
        if let Some(facts) = self.facts {
            if let Some((pos, rhs)) = facts.last_assignment(name, at) {
                return self.eval_depth(rhs, pos, depth + 1);
            }
            if facts.local_type(name, at).is_some() {
                return vec![Fragment::Dynamic];
            }
        }
        self.eval_field(name, depth)
    }

    pub fn eval_field(&self, name: &str, depth: usize) -> Vec<Fragment> {
        let Some(field) = self.fields.iter().find(|f| f.name == name) else {
            return vec![Fragment::Dynamic];
        };
        match (&field.initializer, simple_type_name(&field.declared_type).as_str()) {
            (Some(init), "String") if field.has_modifier("final") => {
                let scope = StringScope {
                    toks: self.toks,
                    facts: None,
                    fields: self.fields,
                };
                scope.eval_depth(init.clone(), init.start, depth + 1)
            }
            _ => vec![Fragment::Dynamic],
        }
    }
}

fn split_format(s: &str) -> Vec<Fragment> {
    let mut out = Vec::new();
    let mut lit = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '%' {
            match chars.peek() {
                Some('%') => {
                    chars.next();
                    lit.push('%');
                }
                Some(_) => {
                    while let Some(&n) = chars.peek() {
                        chars.next();
                        if n.is_ascii_alphabetic() {
                            break;
                        }
                    }
                    if !lit.is_empty() {
                        out.push(Fragment::Literal(std::mem::take(&mut lit)));
                    }
                    out.push(Fragment::Dynamic);
                }
                None => lit.push('%'),
            }
        } else {
            lit.push(c);
        }
    }
    if !lit.is_empty() {
        out.push(Fragment::Literal(lit));
    }
    out
}

/// Renders fragments with each dynamic piece replaced by `{*}`.
pub fn template(fragments: &[Fragment]) -> String {
    fragments
        .iter()
        .map(|f| match f {
            Fragment::Literal(s) => s.as_str(),
            Fragment::Dynamic => "{*}",
        })
        .collect()
}
