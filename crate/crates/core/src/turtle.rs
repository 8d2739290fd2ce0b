//! Turtle subset reader and deterministic writer.
//!
//! Supported: `@prefix`/`PREFIX`, prefixed names, absolute IRIs, `_:x`
//! labels, `[ ... ]` property lists, `( ... )` collections, quoted literals
//! with `^^` or `@lang`, numeric and boolean shorthand, the `a` keyword,
//! `,`/`;` abbreviations and `#` comments. Relative IRIs and `@base` are
//! rejected.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, Iri, Literal, Term, Triple};
use crate::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    UndefinedPrefix,
    BadIri,
    BadLiteral,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} error at {line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub kind: ParseErrorKind,
}

type Pos = (usize, usize);

pub fn parse_turtle(text: &str) -> Result<Graph, ParseError> {
    let mut parser = Parser {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        prefixes: HashMap::new(),
        blanks: HashMap::new(),
        graph: Graph::new(),
    };
    parser.document()?;
    Ok(parser.graph)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    prefixes: HashMap<String, String>,
    blanks: HashMap<String, Term>,
    graph: Graph,
}

fn is_name_start(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || c == '\u{b7}'
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '<' | '[' | '(' | '"' | '\'' | '_' | '#')
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn here(&self) -> Pos {
        (self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error<T>(
        &self,
        kind: ParseErrorKind,
        at: Pos,
        message: impl Into<String>,
    ) -> Result<T, ParseError> {
        Err(ParseError {
            line: at.0,
            column: at.1,
            message: message.into(),
            kind,
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => self.error(
                ParseErrorKind::Syntax,
                self.here(),
                format!("expected '{want}', found '{c}'"),
            ),
            None => self.error(
                ParseErrorKind::Syntax,
                self.here(),
                format!("expected '{want}', found end of input"),
            ),
        }
    }

    fn keyword_ahead(&self, word: &str) -> bool {
        let n = word.chars().count();
        let matches = self.chars[self.pos..]
            .iter()
            .take(n)
            .collect::<String>()
            .eq_ignore_ascii_case(word);
        matches && self.peek_at(n).is_some_and(char::is_whitespace)
    }

    fn document(&mut self) -> Result<(), ParseError> {
        loop {
            self.skip_ws();
            let Some(c) = self.peek() else {
                return Ok(());
            };
            if c == '@' {
                self.at_directive()?;
            } else if self.keyword_ahead("PREFIX") {
                for _ in 0..6 {
                    self.bump();
                }
                self.prefix_body()?;
            } else if self.keyword_ahead("BASE") {
                return self.error(ParseErrorKind::Syntax, self.here(), "BASE is not supported");
            } else {
                self.triples()?;
                self.skip_ws();
                self.expect('.')?;
            }
        }
    }

    fn at_directive(&mut self) -> Result<(), ParseError> {
        let start = self.here();
        self.bump();
        let mut word = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_alphabetic) {
            word.push(c);
            self.bump();
        }
        match word.as_str() {
            "prefix" => {
                self.prefix_body()?;
                self.skip_ws();
                self.expect('.')
            }
            "base" => self.error(ParseErrorKind::Syntax, start, "@base is not supported"),
            _ => self.error(
                ParseErrorKind::Syntax,
                start,
                format!("unknown directive @{word}"),
            ),
        }
    }

    fn prefix_body(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        let start = self.here();
        let mut prefix = String::new();
        while let Some(c) = self.peek().filter(|&c| is_name_char(c) || c == '.') {
            prefix.push(c);
            self.bump();
        }
        if prefix.ends_with('.') || prefix.starts_with(|c: char| !c.is_alphabetic()) {
            return self.error(
                ParseErrorKind::Syntax,
                start,
                format!("invalid prefix name {prefix:?}"),
            );
        }
        self.expect(':')?;
        self.skip_ws();
        if self.peek() != Some('<') {
            return self.error(
                ParseErrorKind::Syntax,
                self.here(),
                "expected IRI after prefix name",
            );
        }
        let iri = self.iriref()?;
        self.graph.set_prefix(prefix.clone(), iri.as_str());
        self.prefixes.insert(prefix, iri.as_str().to_string());
        Ok(())
    }

    fn iriref(&mut self) -> Result<Iri, ParseError> {
        let start = self.here();
        self.bump();
        let mut value = String::new();
        loop {
            let at = self.here();
            match self.bump() {
                None => return self.error(ParseErrorKind::Lexical, start, "unterminated IRI"),
                Some('>') => break,
                Some(c)
                    if c.is_whitespace()
                        || c.is_control()
                        || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') =>
                {
                    return self.error(
                        ParseErrorKind::BadIri,
                        at,
                        format!("character {c:?} not allowed in IRI"),
                    );
                }
                Some(c) => value.push(c),
            }
        }
        if !has_scheme(&value) {
            return self.error(
                ParseErrorKind::BadIri,
                start,
                format!("IRI <{value}> is not absolute"),
            );
        }
        Iri::new(value).or_else(|e| self.error(ParseErrorKind::BadIri, start, e.to_string()))
    }

    fn blank_label(&mut self) -> Result<Term, ParseError> {
        let start = self.here();
        self.bump();
        if self.peek() != Some(':') {
            return self.error(ParseErrorKind::Lexical, start, "expected ':' after '_'");
        }
        self.bump();
        let mut label = String::new();
        while let Some(c) = self.peek() {
            let continues =
                is_name_char(c) || (c == '.' && self.peek_at(1).is_some_and(is_name_char));
            if !continues {
                break;
            }
            label.push(c);
            self.bump();
        }
        if label.is_empty() {
            return self.error(ParseErrorKind::Lexical, start, "empty blank node label");
        }
        if let Some(term) = self.blanks.get(&label) {
            return Ok(term.clone());
        }
        let term = self.graph.fresh_blank();
        self.blanks.insert(label, term.clone());
        Ok(term)
    }

    /// Reads a prefixed name, or a bare word such as `true` when no colon follows.
    fn name(&mut self) -> Result<Name, ParseError> {
        let start = self.here();
        let mut prefix = String::new();
        while let Some(c) = self.peek() {
            let continues = is_name_char(c)
                || (c == '.' && !prefix.is_empty() && self.peek_at(1).is_some_and(is_name_char));
            if !continues {
                break;
            }
            prefix.push(c);
            self.bump();
        }
        if self.peek() != Some(':') {
            if prefix.is_empty() {
                return match self.peek() {
                    None => self.error(
                        ParseErrorKind::Syntax,
                        start,
                        "expected a term, found end of input",
                    ),
                    Some(c @ ('.' | ';' | ',' | '[' | ']' | '(' | ')')) => self.error(
                        ParseErrorKind::Syntax,
                        start,
                        format!("expected a term, found '{c}'"),
                    ),
                    Some(c) => {
                        self.error(ParseErrorKind::Lexical, start, format!("unexpected '{c}'"))
                    }
                };
            }
            return Ok(Name::Word(prefix, start));
        }
        self.bump();
        let mut local = String::new();
        while let Some(c) = self.peek() {
            let continues = if local.is_empty() {
                is_name_start(c) || c == ':'
            } else {
                is_name_char(c)
                    || c == ':'
                    || c == '%'
                    || (c == '.' && self.peek_at(1).is_some_and(|n| is_name_char(n) || n == ':'))
            };
            if !continues {
                break;
            }
            local.push(c);
            self.bump();
        }
        let base = match self.prefixes.get(&prefix) {
            Some(base) => base.clone(),
            None => match vocab::BUILTIN_PREFIXES.iter().find(|(p, _)| *p == prefix) {
                Some((_, base)) => {
                    self.graph.set_prefix(prefix.clone(), *base);
                    base.to_string()
                }
                None => {
                    return self.error(
                        ParseErrorKind::UndefinedPrefix,
                        start,
                        format!("undefined prefix {prefix:?}"),
                    )
                }
            },
        };
        Iri::new(format!("{base}{local}"))
            .map(Name::Iri)
            .or_else(|e| self.error(ParseErrorKind::BadIri, start, e.to_string()))
    }

    fn iri_or_name(&mut self) -> Result<Iri, ParseError> {
        if self.peek() == Some('<') {
            return self.iriref();
        }
        match self.name()? {
            Name::Iri(iri) => Ok(iri),
            Name::Word(word, at) => self.error(
                ParseErrorKind::Syntax,
                at,
                format!("expected IRI or prefixed name, found {word:?}"),
            ),
        }
    }

    fn triples(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some('[') => {
                let start = self.here();
                let (node, had_properties) = self.blank_property_list()?;
                self.skip_ws();
                if self.peek() != Some('.') {
                    self.predicate_object_list(&node)?;
                } else if !had_properties {
                    return self.error(
                        ParseErrorKind::Syntax,
                        start,
                        "'[]' subject needs predicates",
                    );
                }
                Ok(())
            }
            Some('(') => {
                let node = self.collection()?;
                self.skip_ws();
                self.predicate_object_list(&node)
            }
            _ => {
                let subject = self.subject()?;
                self.skip_ws();
                self.predicate_object_list(&subject)
            }
        }
    }

    fn subject(&mut self) -> Result<Term, ParseError> {
        let at = self.here();
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iriref()?)),
            Some('_') if self.peek_at(1) == Some(':') => self.blank_label(),
            Some(c) if c == '"' || c == '\'' || c.is_ascii_digit() || c == '+' || c == '-' => {
                self.error(ParseErrorKind::Syntax, at, "a literal cannot be a subject")
            }
            _ => match self.name()? {
                Name::Iri(iri) => Ok(Term::Iri(iri)),
                Name::Word(word, at) => self.error(
                    ParseErrorKind::Syntax,
                    at,
                    format!("expected subject, found {word:?}"),
                ),
            },
        }
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), ParseError> {
        loop {
            self.skip_ws();
            let predicate = self.verb()?;
            self.object_list(subject, &predicate)?;
            self.skip_ws();
            if self.peek() != Some(';') {
                return Ok(());
            }
            while self.peek() == Some(';') {
                self.bump();
                self.skip_ws();
            }
            if matches!(self.peek(), Some('.') | Some(']') | None) {
                return Ok(());
            }
        }
    }

    fn verb(&mut self) -> Result<Term, ParseError> {
        let at = self.here();
        match self.peek() {
            Some('a') if self.peek_at(1).is_none_or(is_delimiter) => {
                self.bump();
                Ok(Term::vocab(vocab::RDF_TYPE))
            }
            Some('<') => Ok(Term::Iri(self.iriref()?)),
            Some('[') | Some('_') if self.peek() == Some('[') || self.peek_at(1) == Some(':') => {
                self.error(
                    ParseErrorKind::Syntax,
                    at,
                    "a blank node cannot be a predicate",
                )
            }
            Some(c) if c == '"' || c == '\'' || c == '(' || c.is_ascii_digit() => {
                self.error(ParseErrorKind::Syntax, at, "expected predicate")
            }
            None => self.error(
                ParseErrorKind::Syntax,
                at,
                "expected predicate, found end of input",
            ),
            _ => match self.name()? {
                Name::Iri(iri) => Ok(Term::Iri(iri)),
                Name::Word(word, at) => self.error(
                    ParseErrorKind::Syntax,
                    at,
                    format!("expected predicate, found {word:?}"),
                ),
            },
        }
    }

    fn object_list(&mut self, subject: &Term, predicate: &Term) -> Result<(), ParseError> {
        loop {
            self.skip_ws();
            let at = self.here();
            let object = self.object()?;
            let triple = Triple::new(subject.clone(), predicate.clone(), object)
                .or_else(|e| self.error(ParseErrorKind::Syntax, at, e.to_string()))?;
            self.graph.insert(triple);
            self.skip_ws();
            if self.peek() != Some(',') {
                return Ok(());
            }
            self.bump();
        }
    }

    fn object(&mut self) -> Result<Term, ParseError> {
        let at = self.here();
        match self.peek() {
            None => self.error(
                ParseErrorKind::Syntax,
                at,
                "expected object, found end of input",
            ),
            Some('<') => Ok(Term::Iri(self.iriref()?)),
            Some('_') if self.peek_at(1) == Some(':') => self.blank_label(),
            Some('[') => Ok(self.blank_property_list()?.0),
            Some('(') => self.collection(),
            Some('"') | Some('\'') => self.string_literal(),
            Some(c)
                if c.is_ascii_digit()
                    || c == '+'
                    || c == '-'
                    || (c == '.' && self.peek_at(1).is_some_and(|n| n.is_ascii_digit())) =>
            {
                self.number()
            }
            Some(c) if matches!(c, '.' | ',' | ';' | ']' | ')') => self.error(
                ParseErrorKind::Syntax,
                at,
                format!("expected object, found '{c}'"),
            ),
            _ => match self.name()? {
                Name::Iri(iri) => Ok(Term::Iri(iri)),
                Name::Word(word, _) if word == "true" || word == "false" => Ok(Term::Literal(
                    Literal::typed(word, Iri::from_static(vocab::XSD_BOOLEAN)),
                )),
                Name::Word(word, at) => self.error(
                    ParseErrorKind::Syntax,
                    at,
                    format!("expected object, found {word:?}"),
                ),
            },
        }
    }

    fn blank_property_list(&mut self) -> Result<(Term, bool), ParseError> {
        self.bump();
        self.skip_ws();
        let node = self.graph.fresh_blank();
        if self.peek() == Some(']') {
            self.bump();
            return Ok((node, false));
        }
        self.predicate_object_list(&node)?;
        self.skip_ws();
        self.expect(']')?;
        Ok((node, true))
    }

    fn collection(&mut self) -> Result<Term, ParseError> {
        let start = self.here();
        self.bump();
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(')') => {
                    self.bump();
                    break;
                }
                None => {
                    return self.error(ParseErrorKind::Lexical, start, "unterminated collection")
                }
                _ => items.push(self.object()?),
            }
        }
        Ok(self.graph.build_list(&items))
    }

    fn string_literal(&mut self) -> Result<Term, ParseError> {
        let start = self.here();
        let quote = self.bump().unwrap_or('"');
        let long = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if long {
            self.bump();
            self.bump();
        }
        let mut value = String::new();
        loop {
            let at = self.here();
            match self.bump() {
                None => return self.error(ParseErrorKind::Lexical, start, "unterminated string"),
                Some(c) if c == quote => {
                    if !long {
                        break;
                    }
                    if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
                        self.bump();
                        self.bump();
                        break;
                    }
                    value.push(c);
                }
                Some('\n') | Some('\r') if !long => {
                    return self.error(ParseErrorKind::Lexical, at, "line break in short string")
                }
                Some('\\') => value.push(self.escape(at)?),
                Some(c) => value.push(c),
            }
        }
        if self.peek() == Some('@') {
            let at = self.here();
            self.bump();
            let mut tag = String::new();
            while let Some(c) = self
                .peek()
                .filter(|&c| c.is_ascii_alphanumeric() || c == '-')
            {
                tag.push(c);
                self.bump();
            }
            let valid = !tag.is_empty()
                && tag.split('-').all(|part| !part.is_empty())
                && tag
                    .split('-')
                    .next()
                    .is_some_and(|p| p.chars().all(|c| c.is_ascii_alphabetic()));
            if !valid {
                return self.error(
                    ParseErrorKind::BadLiteral,
                    at,
                    format!("invalid language tag {tag:?}"),
                );
            }
            return Ok(Term::Literal(Literal::lang(value, tag)));
        }
        if self.peek() == Some('^') {
            let at = self.here();
            self.bump();
            if self.peek() != Some('^') {
                return self.error(ParseErrorKind::Lexical, at, "expected '^^'");
            }
            self.bump();
            self.skip_ws();
            let datatype = self.iri_or_name()?;
            return Ok(Term::Literal(Literal::typed(value, datatype)));
        }
        Ok(Term::Literal(Literal::string(value)))
    }

    fn escape(&mut self, at: Pos) -> Result<char, ParseError> {
        let c = match self.bump() {
            Some('t') => '\t',
            Some('b') => '\u{8}',
            Some('n') => '\n',
            Some('r') => '\r',
            Some('f') => '\u{c}',
            Some('"') => '"',
            Some('\'') => '\'',
            Some('\\') => '\\',
            Some(u @ ('u' | 'U')) => {
                let width = if u == 'u' { 4 } else { 8 };
                let mut hex = String::new();
                for _ in 0..width {
                    match self.bump() {
                        Some(h) if h.is_ascii_hexdigit() => hex.push(h),
                        _ => {
                            return self.error(
                                ParseErrorKind::BadLiteral,
                                at,
                                "invalid unicode escape",
                            )
                        }
                    }
                }
                match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                    Some(c) => c,
                    None => {
                        return self.error(
                            ParseErrorKind::BadLiteral,
                            at,
                            "escape is not a valid code point",
                        )
                    }
                }
            }
            _ => return self.error(ParseErrorKind::BadLiteral, at, "invalid escape sequence"),
        };
        Ok(c)
    }

    fn number(&mut self) -> Result<Term, ParseError> {
        let start = self.here();
        let mut text = String::new();
        if let Some(sign) = self.peek().filter(|&c| c == '+' || c == '-') {
            text.push(sign);
            self.bump();
        }
        let digits = |p: &mut Parser, text: &mut String| {
            let mut n = 0;
            while let Some(d) = p.peek().filter(char::is_ascii_digit) {
                text.push(d);
                p.bump();
                n += 1;
            }
            n
        };
        let whole = digits(self, &mut text);
        let mut fraction = 0;
        let mut has_point = false;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            has_point = true;
            text.push('.');
            self.bump();
            fraction = digits(self, &mut text);
        }
        if whole == 0 && fraction == 0 {
            return self.error(ParseErrorKind::BadLiteral, start, "malformed number");
        }
        let datatype = if matches!(self.peek(), Some('e') | Some('E')) {
            text.push('e');
            self.bump();
            if let Some(sign) = self.peek().filter(|&c| c == '+' || c == '-') {
                text.push(sign);
                self.bump();
            }
            if digits(self, &mut text) == 0 {
                return self.error(ParseErrorKind::BadLiteral, start, "exponent without digits");
            }
            vocab::XSD_DOUBLE
        } else if has_point {
            vocab::XSD_DECIMAL
        } else {
            vocab::XSD_INTEGER
        };
        Ok(Term::Literal(Literal::typed(
            text,
            Iri::from_static(datatype),
        )))
    }
}

enum Name {
    Iri(Iri),
    Word(String, Pos),
}

fn has_scheme(value: &str) -> bool {
    let Some((scheme, _)) = value.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

// ---------------------------------------------------------------------------
// Writer

/// Renders `graph` as Turtle. Output depends only on graph content and its
/// namespace table.
pub fn serialize_turtle(graph: &Graph) -> String {
    Writer::new(graph).write()
}

struct Writer<'g> {
    graph: &'g Graph,
    prefixes: Vec<(&'g str, &'g str)>,
    inline: HashSet<&'g Term>,
}

impl<'g> Writer<'g> {
    fn new(graph: &'g Graph) -> Self {
        let mut prefixes: Vec<(&str, &str)> = graph
            .namespaces()
            .iter()
            .map(|(p, b)| (p.as_str(), b.as_str()))
            .collect();
        // longest namespace first so the most specific prefix wins
        prefixes.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
        let mut writer = Writer {
            graph,
            prefixes,
            inline: HashSet::new(),
        };
        writer.inline = writer.inline_blanks();
        writer
    }

    /// Blanks referenced exactly once as an object are nested in place,
    /// except where that would leave a cycle with no entry point.
    fn inline_blanks(&self) -> HashSet<&'g Term> {
        let mut refs: HashMap<&Term, usize> = HashMap::new();
        for t in self.graph.iter() {
            if t.object().is_blank() {
                *refs.entry(t.object()).or_default() += 1;
            }
        }
        let mut inline: HashSet<&Term> = refs
            .iter()
            .filter(|(_, &n)| n == 1)
            .map(|(t, _)| *t)
            .collect();
        let mut reached: HashSet<&Term> = HashSet::new();
        let roots: Vec<&Term> = self
            .graph
            .subject_terms()
            .filter(|s| !inline.contains(s))
            .collect();
        for root in roots {
            self.mark_reached(root, &inline, &mut reached);
        }
        loop {
            let mut orphans: Vec<&Term> = inline
                .iter()
                .copied()
                .filter(|b| !reached.contains(b))
                .collect();
            orphans.sort();
            let Some(first) = orphans.first().copied() else {
                break;
            };
            inline.remove(first);
            self.mark_reached(first, &inline, &mut reached);
        }
        inline
    }

    fn mark_reached(
        &self,
        node: &'g Term,
        inline: &HashSet<&'g Term>,
        reached: &mut HashSet<&'g Term>,
    ) {
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            for t in self.graph.statements_about(n) {
                let o = t.object();
                if inline.contains(o) && reached.insert(o) {
                    stack.push(o);
                }
            }
        }
    }

    fn write(&self) -> String {
        let mut out = String::new();
        let mut prefixes: Vec<_> = self.graph.namespaces().iter().collect();
        prefixes.sort();
        for (prefix, base) in prefixes {
            out.push_str(&format!("@prefix {prefix}: <{base}> .\n"));
        }
        let mut blocks: Vec<(String, String)> = self
            .graph
            .subject_terms()
            .filter(|s| !self.inline.contains(s))
            .map(|s| {
                let subject = self.term(s);
                let body = self.predicate_list(s, 0);
                (subject.clone(), format!("{subject} {body} .\n"))
            })
            .collect();
        blocks.sort();
        for (_, block) in blocks {
            out.push('\n');
            out.push_str(&block);
        }
        out
    }

    fn predicate_list(&self, subject: &Term, indent: usize) -> String {
        let mut by_predicate: BTreeMap<(bool, String), Vec<String>> = BTreeMap::new();
        for t in self.graph.statements_about(subject) {
            let is_type = t.predicate().is_iri(vocab::RDF_TYPE);
            let key = if is_type {
                (false, "a".to_string())
            } else {
                (true, self.term(t.predicate()))
            };
            by_predicate
                .entry(key)
                .or_default()
                .push(self.object(t.object(), indent + 4));
        }
        let pad = " ".repeat(indent + 4);
        by_predicate
            .into_iter()
            .map(|((_, predicate), mut objects)| {
                objects.sort();
                format!("{predicate} {}", objects.join(", "))
            })
            .collect::<Vec<_>>()
            .join(&format!(" ;\n{pad}"))
    }

    fn object(&self, term: &Term, indent: usize) -> String {
        if !self.inline.contains(term) {
            return self.term(term);
        }
        if let Some(items) = self.collection(term) {
            let rendered: Vec<String> = items.iter().map(|i| self.object(i, indent)).collect();
            return format!("( {} )", rendered.join(" "));
        }
        if self.graph.statements_about(term).next().is_none() {
            return "[]".to_string();
        }
        let pad = " ".repeat(indent);
        format!("[\n{pad}    {}\n{pad}]", self.predicate_list(term, indent))
    }

    /// Members of a well-formed collection whose cells can all be nested.
    fn collection(&self, head: &Term) -> Option<Vec<&'g Term>> {
        let mut items = Vec::new();
        let mut cell = head;
        let mut first_cell = true;
        while !cell.is_iri(vocab::RDF_NIL) {
            if !cell.is_blank() || (!first_cell && !self.inline.contains(cell)) {
                return None;
            }
            let statements: Vec<&Triple> = self.graph.statements_about(cell).collect();
            let [a, b] = statements.as_slice() else {
                return None;
            };
            let (first, rest) = if a.predicate().is_iri(vocab::RDF_FIRST) {
                (a, b)
            } else {
                (b, a)
            };
            if !first.predicate().is_iri(vocab::RDF_FIRST)
                || !rest.predicate().is_iri(vocab::RDF_REST)
            {
                return None;
            }
            items.push(first.object());
            cell = rest.object();
            first_cell = false;
            if items.len() > self.graph.len() {
                return None;
            }
        }
        Some(items)
    }

    fn term(&self, term: &Term) -> String {
        match term {
            Term::Iri(iri) => self.iri(iri),
            Term::Blank(label) => format!("_:{label}"),
            Term::Literal(lit) => self.literal(lit),
        }
    }

    fn iri(&self, iri: &Iri) -> String {
        for (prefix, base) in &self.prefixes {
            if let Some(local) = iri.as_str().strip_prefix(base) {
                if is_safe_local(local) {
                    return format!("{prefix}:{local}");
                }
            }
        }
        format!("<{iri}>")
    }

    fn literal(&self, lit: &Literal) -> String {
        let quoted = quote(&lit.lexical);
        if let Some(lang) = &lit.language {
            return format!("{quoted}@{lang}");
        }
        let bare = match lit.datatype.as_str() {
            vocab::XSD_STRING => return quoted,
            vocab::XSD_INTEGER => is_integer_lexical(&lit.lexical),
            vocab::XSD_DECIMAL => is_decimal_shorthand(&lit.lexical),
            vocab::XSD_BOOLEAN => lit.lexical == "true" || lit.lexical == "false",
            _ => false,
        };
        if bare {
            lit.lexical.clone()
        } else {
            format!("{quoted}^^{}", self.iri(&lit.datatype))
        }
    }
}

fn is_safe_local(local: &str) -> bool {
    let mut chars = local.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {
            chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        }
        _ => false,
    }
}

pub(crate) fn is_integer_lexical(s: &str) -> bool {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())
}

pub(crate) fn is_decimal_lexical(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (whole, fraction) = body.split_once('.').unwrap_or((body, ""));
    let all_digits = |p: &str| p.chars().all(|c| c.is_ascii_digit());
    (!whole.is_empty() || !fraction.is_empty())
        && all_digits(whole)
        && all_digits(fraction)
        && body != "."
}

fn is_decimal_shorthand(s: &str) -> bool {
    is_decimal_lexical(s) && s.split_once('.').is_some_and(|(_, f)| !f.is_empty())
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => out.push_str(&format!("\\u{:04X}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

// ---------------------------------------------------------------------------
// Canonical blank relabeling

/// Relabels blank nodes `_b0, _b1, …` depth-first from sorted non-blank
/// subjects, so graphs equal up to blank renaming compare equal.
pub fn canonicalize(graph: &Graph) -> Graph {
    let mut signatures: HashMap<Term, String> = HashMap::new();
    let mut blanks: Vec<&Term> = graph
        .iter()
        .flat_map(|t| [t.subject(), t.object()])
        .filter(|t| t.is_blank())
        .collect();
    blanks.sort();
    blanks.dedup();
    for b in &blanks {
        let mut in_progress = HashSet::new();
        signature(graph, b, &mut signatures, &mut in_progress);
    }

    let mut labels: HashMap<Term, Term> = HashMap::new();
    let mut next = 0usize;
    let mut roots: Vec<&Term> = graph.subject_terms().filter(|s| !s.is_blank()).collect();
    roots.sort_by_key(|t| t.to_string());
    for root in roots {
        visit(graph, root, &signatures, &mut labels, &mut next);
    }
    let mut rest: Vec<&Term> = blanks
        .into_iter()
        .filter(|b| !labels.contains_key(*b))
        .collect();
    rest.sort_by(|a, b| signatures[*a].cmp(&signatures[*b]).then(a.cmp(b)));
    for b in rest {
        if !labels.contains_key(b) {
            labels.insert(b.clone(), Term::Blank(format!("_b{next}")));
            next += 1;
            visit(graph, b, &signatures, &mut labels, &mut next);
        }
    }

    let relabel = |t: &Term| labels.get(t).cloned().unwrap_or_else(|| t.clone());
    let mut out = Graph::new();
    for (prefix, base) in graph.namespaces() {
        out.set_prefix(prefix.clone(), base.clone());
    }
    for t in graph.iter() {
        if let Ok(triple) = Triple::new(
            relabel(t.subject()),
            t.predicate().clone(),
            relabel(t.object()),
        ) {
            out.insert(triple);
        }
    }
    out
}

fn signature(
    graph: &Graph,
    node: &Term,
    memo: &mut HashMap<Term, String>,
    in_progress: &mut HashSet<Term>,
) -> String {
    if let Some(sig) = memo.get(node) {
        return sig.clone();
    }
    if !in_progress.insert(node.clone()) {
        return "@cycle".to_string();
    }
    let mut parts: Vec<String> = graph
        .statements_about(node)
        .map(|t| {
            let object = if t.object().is_blank() {
                format!("[{}]", signature(graph, t.object(), memo, in_progress))
            } else {
                t.object().to_string()
            };
            format!("{} {}", t.predicate(), object)
        })
        .collect();
    parts.sort();
    let sig = parts.join(";");
    in_progress.remove(node);
    memo.insert(node.clone(), sig.clone());
    sig
}

fn visit(
    graph: &Graph,
    node: &Term,
    signatures: &HashMap<Term, String>,
    labels: &mut HashMap<Term, Term>,
    next: &mut usize,
) {
    let mut edges: Vec<(String, String, &Term)> = graph
        .statements_about(node)
        .filter(|t| t.object().is_blank())
        .map(|t| {
            (
                t.predicate().to_string(),
                signatures[t.object()].clone(),
                t.object(),
            )
        })
        .collect();
    edges.sort();
    for (_, _, child) in edges {
        if labels.contains_key(child) {
            continue;
        }
        labels.insert(child.clone(), Term::Blank(format!("_b{next}")));
        *next += 1;
        visit(graph, child, signatures, labels, next);
    }
}

/// Statement-set equality up to blank node relabeling.
pub fn equal_modulo_blanks(a: &Graph, b: &Graph) -> bool {
    a.len() == b.len() && canonicalize(a) == canonicalize(b)
}
