//! Lightweight structural parser for Java-like compilation units.
//!
//! Only declarations are parsed: package, type declarations, annotations,
//! fields, and method signatures. Method bodies are kept as token ranges for
//! later pattern matching.

use std::fmt;
use std::ops::Range;

use super::lexer::{tokenize, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotationValue {
    Str(String),
    Name(String),
    Other(String),
}

impl AnnotationValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            AnnotationValue::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Last dotted segment of a name value, e.g. `POST` for `RequestMethod.POST`.
    pub fn name_tail(&self) -> Option<&str> {
        match self {
            AnnotationValue::Name(n) => n.rsplit('.').next(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationArg {
    pub key: String,
    pub values: Vec<AnnotationValue>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    /// Simple name, e.g. `GetMapping` for `@org.x.GetMapping`.
    pub name: String,
    pub args: Vec<AnnotationArg>,
    /// Canonical rendering including arguments, e.g. `@Query("select o")`.
    pub text: String,
}

impl Annotation {
    pub fn arg(&self, key: &str) -> Option<&AnnotationArg> {
        self.args.iter().find(|a| a.key == key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeKind {
    Class,
    Interface,
    Enum,
    Record,
    Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub annotations: Vec<Annotation>,
    pub modifiers: Vec<String>,
    pub declared_type: String,
    pub name: String,
    pub initializer: Option<Range<usize>>,
}

impl FieldDecl {
    pub fn has_modifier(&self, m: &str) -> bool {
        self.modifiers.iter().any(|x| x == m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamDecl {
    pub annotations: Vec<Annotation>,
    pub declared_type: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub annotations: Vec<Annotation>,
    pub modifiers: Vec<String>,
    /// Empty for constructors.
    pub return_type: String,
    pub name: String,
    pub params: Vec<ParamDecl>,
    /// Token range strictly inside the body braces.
    pub body: Option<Range<usize>>,
    /// Source text of the body including braces.
    pub body_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub kind: TypeKind,
    pub name: String,
    pub annotations: Vec<Annotation>,
    pub supertypes: Vec<String>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub constructors: Vec<MethodDecl>,
}

#[derive(Debug, Clone)]
pub struct ParsedUnit {
    pub package: Option<String>,
    pub types: Vec<TypeDecl>,
    pub tokens: Vec<Token>,
}

impl ParsedUnit {
    pub fn qualified_name(&self, simple: &str) -> String {
        match &self.package {
            Some(p) if !p.is_empty() => format!("{p}.{simple}"),
            _ => simple.to_string(),
        }
    }
}

const MODIFIERS: &[&str] = &[
    "public",
    "private",
    "protected",
    "static",
    "final",
    "abstract",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
    "sealed",
];

pub fn is_keyword(word: &str) -> bool {
    matches!(
        word,
        "abstract" | "assert" | "boolean" | "break" | "byte" | "case" | "catch" | "char"
            | "class" | "const" | "continue" | "default" | "do" | "double" | "else" | "enum"
            | "extends" | "final" | "finally" | "float" | "for" | "goto" | "if" | "implements"
            | "import" | "instanceof" | "int" | "interface" | "long" | "native" | "new"
            | "package" | "private" | "protected" | "public" | "return" | "short" | "static"
            | "strictfp" | "super" | "switch" | "synchronized" | "this" | "throw" | "throws"
            | "transient" | "try" | "void" | "volatile" | "while" | "true" | "false" | "null"
            | "yield"
    )
}

/// Renders tokens back into canonical text: single spaces only between
/// word-like tokens, string literals re-quoted.
pub fn render_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut prev_word = false;
    for t in tokens {
        let word = matches!(t.kind, TokenKind::Ident | TokenKind::Number | TokenKind::Str | TokenKind::Char);
        if word && prev_word {
            out.push(' ');
        }
        match t.kind {
            TokenKind::Str => out.push_str(&format!("{:?}", t.text)),
            TokenKind::Char => out.push_str(&format!("'{}'", t.text)),
            _ => out.push_str(&t.text),
        }
        prev_word = word;
    }
    out
}

pub fn parse_unit(src: &str) -> Result<ParsedUnit, ParseError> {
    let tokens = tokenize(src).map_err(|e| ParseError {
        line: e.line,
        message: e.message,
    })?;
    let mut p = Parser {
        src,
        toks: &tokens,
        pos: 0,
    };
    let (package, types) = p.compilation_unit()?;
    Ok(ParsedUnit {
        package,
        types,
        tokens,
    })
}

struct Parser<'a> {
    src: &'a str,
    toks: &'a [Token],
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + n)
    }

    fn at_punct(&self, c: char) -> bool {
        self.peek().is_some_and(|t| t.is_punct(c))
    }

    fn at_word(&self, w: &str) -> bool {
        self.peek().is_some_and(|t| t.is_word(w))
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let offset = self
            .peek()
            .map(|t| t.start)
            .unwrap_or(self.src.len());
        ParseError {
            line: self.src[..offset].matches('\n').count() + 1,
            message: message.into(),
        }
    }

    fn expect_punct(&mut self, c: char) -> PResult<()> {
        if self.at_punct(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!(
                "expected `{c}`, found {}",
                self.peek().map_or("end of file".to_string(), |t| format!("`{}`", t.text))
            )))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if t.is_ident() => {
                self.pos += 1;
                Ok(t.text.clone())
            }
            Some(t) => Err(self.error(format!("expected identifier, found `{}`", t.text))),
            None => Err(self.error("expected identifier, found end of file")),
        }
    }

    fn qualified_ident(&mut self) -> PResult<String> {
        let mut name = self.ident()?;
        while self.at_punct('.') && self.peek_at(1).is_some_and(|t| t.is_ident()) {
            self.pos += 1;
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    /// Skips a balanced group starting at the current open token; returns
    /// the index of the closing token.
    fn skip_balanced(&mut self, open: char, close: char) -> PResult<usize> {
        self.expect_punct(open)?;
        let mut depth = 1usize;
        while let Some(t) = self.bump() {
            if t.is_punct(open) {
                depth += 1;
            } else if t.is_punct(close) {
                depth -= 1;
                if depth == 0 {
                    return Ok(self.pos - 1);
                }
            }
        }
        Err(self.error(format!("unbalanced `{open}`")))
    }

    fn compilation_unit(&mut self) -> PResult<(Option<String>, Vec<TypeDecl>)> {
        let mut package = None;
        let mut types = Vec::new();
        loop {
            if self.peek().is_none() {
                break;
            }
            if self.at_word("import") {
                while let Some(t) = self.bump() {
                    if t.is_punct(';') {
                        break;
                    }
                }
                continue;
            }
            if self.at_punct(';') {
                self.pos += 1;
                continue;
            }
            let annotations = self.annotations()?;
            if self.at_word("package") {
                self.pos += 1;
                package = Some(self.qualified_ident()?);
                self.expect_punct(';')?;
                continue;
            }
            let _modifiers = self.modifiers();
            match self.type_decl(annotations)? {
                Some(decl) => types.push(decl),
                None => {
                    return Err(self.error(format!(
                        "unexpected `{}` at top level",
                        self.peek().map_or("end of file", |t| t.text.as_str())
                    )))
                }
            }
        }
        Ok((package, types))
    }

    fn annotations(&mut self) -> PResult<Vec<Annotation>> {
        let mut out = Vec::new();
        while self.at_punct('@') && !self.peek_at(1).is_some_and(|t| t.is_word("interface")) {
            out.push(self.annotation()?);
        }
        Ok(out)
    }

    fn annotation(&mut self) -> PResult<Annotation> {
        self.expect_punct('@')?;
        let qualified = self.qualified_ident()?;
        let name = qualified.rsplit('.').next().unwrap_or(&qualified).to_string();
        let mut args = Vec::new();
        let mut text = format!("@{name}");
        if self.at_punct('(') {
            let open = self.pos;
            let close = self.skip_balanced('(', ')')?;
            let inner = &self.toks[open + 1..close];
            text.push('(');
            text.push_str(&render_tokens(inner));
            text.push(')');
            for piece in split_top_level(inner, ',') {
                if piece.is_empty() {
                    continue;
                }
                if piece.len() >= 2 && piece[0].is_ident() && piece[1].is_punct('=') {
                    args.push(AnnotationArg {
                        key: piece[0].text.clone(),
                        values: annotation_values(&piece[2..]),
                    });
                } else {
                    args.push(AnnotationArg {
                        key: "value".into(),
                        values: annotation_values(piece),
                    });
                }
            }
        }
        Ok(Annotation { name, args, text })
    }

    fn modifiers(&mut self) -> Vec<String> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Some(t) if t.is_ident() && MODIFIERS.contains(&t.text.as_str()) => {
                    // `default` inside a switch never reaches here; in interfaces it is a modifier
                    out.push(t.text.clone());
                    self.pos += 1;
                }
                Some(t)
                    if t.is_word("non")
                        && self.peek_at(1).is_some_and(|t| t.is_punct('-'))
                        && self.peek_at(2).is_some_and(|t| t.is_word("sealed")) =>
                {
                    out.push("non-sealed".into());
                    self.pos += 3;
                }
                _ => return out,
            }
        }
    }

    fn type_kind(&self) -> Option<(TypeKind, usize)> {
        let t = self.peek()?;
        if t.is_punct('@') && self.peek_at(1).is_some_and(|t| t.is_word("interface")) {
            return Some((TypeKind::Annotation, 2));
        }
        match t.text.as_str() {
            "class" if t.is_ident() => Some((TypeKind::Class, 1)),
            "interface" if t.is_ident() => Some((TypeKind::Interface, 1)),
            "enum" if t.is_ident() => Some((TypeKind::Enum, 1)),
            "record" if t.is_ident() && self.peek_at(1).is_some_and(|n| n.is_ident()) => {
                Some((TypeKind::Record, 1))
            }
            _ => None,
        }
    }

    fn type_decl(&mut self, annotations: Vec<Annotation>) -> PResult<Option<TypeDecl>> {
        let Some((kind, width)) = self.type_kind() else {
            return Ok(None);
        };
        self.pos += width;
        let name = self.ident()?;
        let mut supertypes = Vec::new();
        let mut record_components = Vec::new();
        while !self.at_punct('{') {
            if self.peek().is_none() {
                return Err(self.error("expected type body"));
            }
            if self.at_punct('<') {
                self.skip_angle()?;
            } else if self.at_punct('(') && kind == TypeKind::Record {
                record_components = self.params()?;
            } else if self.at_word("extends") || self.at_word("implements") || self.at_word("permits")
            {
                self.pos += 1;
                loop {
                    let ty = self.parse_type()?;
                    supertypes.push(strip_generics(&ty));
                    if self.at_punct(',') {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
            } else {
                return Err(self.error(format!(
                    "unexpected `{}` in type header",
                    self.peek().map_or("", |t| t.text.as_str())
                )));
            }
        }
        let mut decl = TypeDecl {
            kind,
            name,
            annotations,
            supertypes,
            fields: record_components
                .into_iter()
                .map(|p| FieldDecl {
                    annotations: p.annotations,
                    modifiers: vec!["final".into()],
                    declared_type: p.declared_type,
                    name: p.name,
                    initializer: None,
                })
                .collect(),
            methods: Vec::new(),
            constructors: Vec::new(),
        };
        self.type_body(&mut decl)?;
        Ok(Some(decl))
    }

    fn type_body(&mut self, decl: &mut TypeDecl) -> PResult<()> {
        self.expect_punct('{')?;
        if decl.kind == TypeKind::Enum {
            self.enum_constants()?;
        }
        loop {
            match self.peek() {
                None => return Err(self.error(format!("unterminated body of `{}`", decl.name))),
                Some(t) if t.is_punct('}') => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(t) if t.is_punct(';') => {
                    self.pos += 1;
                    continue;
                }
                _ => {}
            }
            let annotations = self.annotations()?;
            let modifiers = self.modifiers();
            if self.at_punct('{') {
                self.skip_balanced('{', '}')?;
                continue;
            }
            if self.type_kind().is_some() {
                // nested types are parsed for balance but not attributed to the outer unit
                self.type_decl(annotations)?;
                continue;
            }
            if self.at_punct('<') {
                self.skip_angle()?;
            }
            let is_ctor = self.peek().is_some_and(|t| t.is_word(&decl.name))
                && self.peek_at(1).is_some_and(|t| t.is_punct('('));
            if is_ctor {
                let name = self.ident()?;
                let m = self.method_rest(annotations, modifiers, String::new(), name)?;
                decl.constructors.push(m);
                continue;
            }
            let ty = self.parse_type()?;
            let name = self.ident()?;
            if self.at_punct('(') {
                let m = self.method_rest(annotations, modifiers, ty, name)?;
                decl.methods.push(m);
            } else {
                self.field_rest(annotations, modifiers, ty, name, &mut decl.fields)?;
            }
        }
    }

    fn enum_constants(&mut self) -> PResult<()> {
        loop {
            let _ = self.annotations()?;
            match self.peek() {
                Some(t) if t.is_punct(';') => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(t) if t.is_punct('}') => return Ok(()),
                Some(t) if t.is_ident() => {
                    self.pos += 1;
                    if self.at_punct('(') {
                        self.skip_balanced('(', ')')?;
                    }
                    if self.at_punct('{') {
                        self.skip_balanced('{', '}')?;
                    }
                    if self.at_punct(',') {
                        self.pos += 1;
                    }
                }
                _ => return Err(self.error("malformed enum constant")),
            }
        }
    }

    fn skip_angle(&mut self) -> PResult<()> {
        self.skip_balanced('<', '>').map(|_| ())
    }

    /// Parses a type reference and renders it canonically.
    fn parse_type(&mut self) -> PResult<String> {
        let _ = self.annotations()?;
        let mut out = self.qualified_ident()?;
        if self.at_punct('<') {
            out.push_str(&self.type_args()?);
            // inner class of a generic type: Outer<T>.Inner
            while self.at_punct('.') && self.peek_at(1).is_some_and(|t| t.is_ident()) {
                self.pos += 1;
                out.push('.');
                out.push_str(&self.ident()?);
                if self.at_punct('<') {
                    out.push_str(&self.type_args()?);
                }
            }
        }
        loop {
            if self.at_punct('[') && self.peek_at(1).is_some_and(|t| t.is_punct(']')) {
                self.pos += 2;
                out.push_str("[]");
            } else if self.at_punct('.')
                && self.peek_at(1).is_some_and(|t| t.is_punct('.'))
                && self.peek_at(2).is_some_and(|t| t.is_punct('.'))
            {
                self.pos += 3;
                out.push_str("...");
            } else {
                return Ok(out);
            }
        }
    }

    fn type_args(&mut self) -> PResult<String> {
        self.expect_punct('<')?;
        let mut parts = Vec::new();
        while !self.at_punct('>') {
            if self.at_punct('?') {
                self.pos += 1;
                let mut s = "?".to_string();
                if self.at_word("extends") || self.at_word("super") {
                    let kw = self.ident()?;
                    s.push_str(&format!(" {kw} {}", self.parse_type()?));
                }
                parts.push(s);
            } else {
                parts.push(self.parse_type()?);
            }
            if self.at_punct(',') {
                self.pos += 1;
            } else if !self.at_punct('>') {
                return Err(self.error("malformed type arguments"));
            }
        }
        self.pos += 1;
        Ok(format!("<{}>", parts.join(",")))
    }

    fn params(&mut self) -> PResult<Vec<ParamDecl>> {
        self.expect_punct('(')?;
        let mut out = Vec::new();
        while !self.at_punct(')') {
            let annotations = self.annotations()?;
            let _ = self.modifiers();
            let declared_type = self.parse_type()?;
            if self.at_word("this") {
                // explicit receiver parameter
                self.pos += 1;
            } else {
                let name = self.ident()?;
                let mut declared_type = declared_type;
                while self.at_punct('[') && self.peek_at(1).is_some_and(|t| t.is_punct(']')) {
                    self.pos += 2;
                    declared_type.push_str("[]");
                }
                out.push(ParamDecl {
                    annotations,
                    declared_type,
                    name,
                });
            }
            if self.at_punct(',') {
                self.pos += 1;
            } else if !self.at_punct(')') {
                return Err(self.error("malformed parameter list"));
            }
        }
        self.pos += 1;
        Ok(out)
    }

    fn method_rest(
        &mut self,
        annotations: Vec<Annotation>,
        modifiers: Vec<String>,
        mut return_type: String,
        name: String,
    ) -> PResult<MethodDecl> {
        let params = self.params()?;
        while self.at_punct('[') && self.peek_at(1).is_some_and(|t| t.is_punct(']')) {
            self.pos += 2;
            return_type.push_str("[]");
        }
        if self.at_word("throws") {
            self.pos += 1;
            loop {
                self.parse_type()?;
                if self.at_punct(',') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        let mut body = None;
        let mut body_text = String::new();
        if self.at_punct('{') {
            let open = self.pos;
            let close = self.skip_balanced('{', '}')?;
            body = Some(open + 1..close);
            body_text = self.src[self.toks[open].start..self.toks[close].end].to_string();
        } else if self.at_word("default") {
            // annotation element default value
            while let Some(t) = self.bump() {
                if t.is_punct(';') {
                    break;
                }
            }
        } else {
            self.expect_punct(';')?;
        }
        Ok(MethodDecl {
            annotations,
            modifiers,
            return_type,
            name,
            params,
            body,
            body_text,
        })
    }

    fn field_rest(
        &mut self,
        annotations: Vec<Annotation>,
        modifiers: Vec<String>,
        declared_type: String,
        first_name: String,
        fields: &mut Vec<FieldDecl>,
    ) -> PResult<()> {
        let mut name = first_name;
        loop {
            let mut ty = declared_type.clone();
            while self.at_punct('[') && self.peek_at(1).is_some_and(|t| t.is_punct(']')) {
                self.pos += 2;
                ty.push_str("[]");
            }
            let mut initializer = None;
            if self.at_punct('=') {
                self.pos += 1;
                let start = self.pos;
                self.skip_expression()?;
                initializer = Some(start..self.pos);
            }
            fields.push(FieldDecl {
                annotations: annotations.clone(),
                modifiers: modifiers.clone(),
                declared_type: ty,
                name,
                initializer,
            });
            if self.at_punct(',') {
                self.pos += 1;
                name = self.ident()?;
            } else {
                return self.expect_punct(';');
            }
        }
    }

    /// Advances to the `,` or `;` ending an initializer expression.
    fn skip_expression(&mut self) -> PResult<()> {
        let mut depth = 0usize;
        loop {
            let Some(t) = self.peek() else {
                return Err(self.error("unterminated initializer"));
            };
            if depth == 0 && (t.is_punct(',') || t.is_punct(';')) {
                return Ok(());
            }
            if t.is_word("new") {
                self.pos += 1;
                let _ = self.annotations()?;
                if self.peek().is_some_and(|t| t.is_ident()) {
                    self.qualified_ident()?;
                    if self.at_punct('<') {
                        self.skip_angle()?;
                    }
                }
                continue;
            }
            if t.is_punct('(') || t.is_punct('{') || t.is_punct('[') {
                depth += 1;
            } else if t.is_punct(')') || t.is_punct('}') || t.is_punct(']') {
                if depth == 0 {
                    return Err(self.error(format!("unbalanced `{}`", t.text)));
                }
                depth -= 1;
            }
            self.pos += 1;
        }
    }
}

/// Splits tokens at `sep` occurring outside `()`, `{}` and `[]`.
pub fn split_top_level(tokens: &[Token], sep: char) -> Vec<&[Token]> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if t.is_punct('(') || t.is_punct('{') || t.is_punct('[') {
            depth += 1;
        } else if t.is_punct(')') || t.is_punct('}') || t.is_punct(']') {
            depth -= 1;
        } else if depth == 0 && t.is_punct(sep) {
            out.push(&tokens[start..i]);
            start = i + 1;
        }
    }
    if start < tokens.len() || !out.is_empty() {
        out.push(&tokens[start..]);
    }
    out
}

fn annotation_values(tokens: &[Token]) -> Vec<AnnotationValue> {
    if tokens.first().is_some_and(|t| t.is_punct('{')) && tokens.last().is_some_and(|t| t.is_punct('}'))
    {
        return split_top_level(&tokens[1..tokens.len() - 1], ',')
            .into_iter()
            .filter(|p| !p.is_empty())
            .map(annotation_value)
            .collect();
    }
    vec![annotation_value(tokens)]
}

fn annotation_value(tokens: &[Token]) -> AnnotationValue {
    let pieces = split_top_level(tokens, '+');
    if !pieces.is_empty()
        && pieces
            .iter()
            .all(|p| p.len() == 1 && p[0].kind == TokenKind::Str)
    {
        return AnnotationValue::Str(pieces.iter().map(|p| p[0].text.as_str()).collect());
    }
    let is_name = !tokens.is_empty()
        && tokens.iter().enumerate().all(|(i, t)| {
            if i % 2 == 0 {
                t.is_ident()
            } else {
                t.is_punct('.')
            }
        })
        && tokens.len() % 2 == 1;
    if is_name {
        AnnotationValue::Name(tokens.iter().map(|t| t.text.as_str()).collect())
    } else {
        AnnotationValue::Other(render_tokens(tokens))
    }
}

/// `Map<String,Order>` -> `Map`; `a.b.List<X>[]` -> `a.b.List`.
pub fn strip_generics(ty: &str) -> String {
    let base = ty.split('<').next().unwrap_or(ty);
    base.trim_end_matches("[]").trim_end_matches("...").to_string()
}

/// Unqualified raw type: `java.util.List<Order>` -> `List`.
pub fn simple_type_name(ty: &str) -> String {
    let base = strip_generics(ty);
    base.rsplit('.').next().unwrap_or(&base).trim_end_matches("[]").to_string()
}
