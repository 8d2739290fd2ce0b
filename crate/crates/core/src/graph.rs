//! In-memory triple graph.
//!
//! Statements are kept in a sorted set with subject, predicate and object
//! indexes, so lookups with a bound subject or predicate never scan the
//! whole graph. Graph equality is statement-set equality; the namespace
//! table only affects serialization.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("invalid IRI {0:?}")]
    InvalidIri(String),
    #[error("invalid triple: {0}")]
    InvalidTriple(String),
    #[error("malformed list at {cell}: {reason}")]
    MalformedList { cell: String, reason: String },
}

/// An absolute identifier: non-empty and free of whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, GraphError> {
        let value = value.into();
        if value.is_empty() || value.chars().any(char::is_whitespace) {
            return Err(GraphError::InvalidIri(value));
        }
        Ok(Iri(value))
    }

    /// For compile-time vocabulary constants known to be valid.
    pub(crate) fn from_static(value: &'static str) -> Self {
        debug_assert!(!value.is_empty() && !value.chars().any(char::is_whitespace));
        Iri(value.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The part after the last `#` or `/`, or the whole IRI when neither
    /// leaves anything behind.
    pub fn local_name(&self) -> &str {
        let tail = self.0.rsplit(['#', '/', ':']).next().unwrap_or("");
        if tail.is_empty() {
            &self.0
        } else {
            tail
        }
    }
}

impl TryFrom<String> for Iri {
    type Error = GraphError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Iri::new(value)
    }
}

impl From<Iri> for String {
    fn from(iri: Iri) -> Self {
        iri.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub lexical: String,
    pub datatype: Iri,
    pub language: Option<String>,
}

impl Literal {
    pub fn string(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: Iri::from_static(vocab::XSD_STRING),
            language: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype,
            language: None,
        }
    }

    pub fn lang(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: Iri::from_static(vocab::RDF_LANG_STRING),
            language: Some(language.into().to_ascii_lowercase()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Blank(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(value: impl Into<String>) -> Result<Self, GraphError> {
        Iri::new(value).map(Term::Iri)
    }

    pub(crate) fn vocab(value: &'static str) -> Self {
        Term::Iri(Iri::from_static(value))
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::Blank(_))
    }

    pub fn is_iri(&self, value: &str) -> bool {
        matches!(self, Term::Iri(iri) if iri.as_str() == value)
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Self {
        Term::Literal(lit)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Blank(label) => write!(f, "_:{label}"),
            Term::Literal(lit) => {
                write!(f, "{:?}", lit.lexical)?;
                match &lit.language {
                    Some(lang) => write!(f, "@{lang}"),
                    None => write!(f, "^^<{}>", lit.datatype),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    subject: Term,
    predicate: Term,
    object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, GraphError> {
        if matches!(subject, Term::Literal(_)) {
            return Err(GraphError::InvalidTriple(format!(
                "literal {subject} in subject position"
            )));
        }
        if !matches!(predicate, Term::Iri(_)) {
            return Err(GraphError::InvalidTriple(format!(
                "{predicate} in predicate position"
            )));
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Term {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: BTreeSet<Triple>,
    by_subject: HashMap<Term, BTreeSet<Triple>>,
    by_predicate: HashMap<Term, BTreeSet<Triple>>,
    by_object: HashMap<Term, BTreeSet<Triple>>,
    namespaces: BTreeMap<String, String>,
    next_blank: usize,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

impl Eq for Graph {}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    /// Returns `true` when the statement was not already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        if self.triples.contains(&triple) {
            return false;
        }
        if let Term::Blank(label) = &triple.subject {
            self.reserve_blank(label);
        }
        if let Term::Blank(label) = &triple.object {
            self.reserve_blank(label);
        }
        for (index, key) in [
            (&mut self.by_subject, &triple.subject),
            (&mut self.by_predicate, &triple.predicate),
            (&mut self.by_object, &triple.object),
        ] {
            index.entry(key.clone()).or_default().insert(triple.clone());
        }
        self.triples.insert(triple);
        true
    }

    /// Validates and inserts `(s, p, o)`.
    pub fn add(&mut self, s: Term, p: Term, o: Term) -> Result<bool, GraphError> {
        Ok(self.insert(Triple::new(s, p, o)?))
    }

    pub fn remove(&mut self, triple: &Triple) -> bool {
        if !self.triples.remove(triple) {
            return false;
        }
        for (index, key) in [
            (&mut self.by_subject, &triple.subject),
            (&mut self.by_predicate, &triple.predicate),
            (&mut self.by_object, &triple.object),
        ] {
            if let Some(set) = index.get_mut(key) {
                set.remove(triple);
                if set.is_empty() {
                    index.remove(key);
                }
            }
        }
        true
    }

    fn reserve_blank(&mut self, label: &str) {
        if let Some(n) = label
            .strip_prefix('b')
            .and_then(|n| n.parse::<usize>().ok())
        {
            self.next_blank = self.next_blank.max(n + 1);
        }
    }

    /// Mints a blank node label unused in this graph.
    pub fn fresh_blank(&mut self) -> Term {
        loop {
            let label = format!("b{}", self.next_blank);
            self.next_blank += 1;
            let term = Term::Blank(label);
            if !self.by_subject.contains_key(&term) && !self.by_object.contains_key(&term) {
                return term;
            }
        }
    }

    pub fn namespaces(&self) -> &BTreeMap<String, String> {
        &self.namespaces
    }

    pub fn set_prefix(&mut self, prefix: impl Into<String>, base: impl Into<String>) {
        self.namespaces.insert(prefix.into(), base.into());
    }

    /// All statements matching the bound positions, using the narrowest index.
    pub fn triples_matching(
        &self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
    ) -> std::vec::IntoIter<&Triple> {
        let candidates: Option<&BTreeSet<Triple>> = match (s, p, o) {
            (Some(s), _, _) => self.by_subject.get(s),
            (None, Some(p), None) => self.by_predicate.get(p),
            (None, _, Some(o)) => {
                let by_o = self.by_object.get(o);
                match p.and_then(|p| self.by_predicate.get(p)) {
                    Some(by_p) if by_o.is_some_and(|by_o| by_p.len() < by_o.len()) => Some(by_p),
                    _ => by_o,
                }
            }
            (None, None, None) => Some(&self.triples),
        };
        candidates
            .into_iter()
            .flatten()
            .filter(|t| {
                s.is_none_or(|s| &t.subject == s)
                    && p.is_none_or(|p| &t.predicate == p)
                    && o.is_none_or(|o| &t.object == o)
            })
            .collect::<Vec<_>>()
            .into_iter()
    }

    pub fn match_pattern(
        &self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
    ) -> BTreeSet<Triple> {
        self.triples_matching(s, p, o).cloned().collect()
    }

    pub fn objects(&self, s: &Term, p: &Term) -> std::vec::IntoIter<&Term> {
        self.triples_matching(Some(s), Some(p), None)
            .map(|t| &t.object)
            .collect::<Vec<_>>()
            .into_iter()
    }

    pub fn subjects(&self, p: &Term, o: &Term) -> std::vec::IntoIter<&Term> {
        self.triples_matching(None, Some(p), Some(o))
            .map(|t| &t.subject)
            .collect::<Vec<_>>()
            .into_iter()
    }

    /// All distinct subjects, in term order.
    pub fn subject_terms(&self) -> impl Iterator<Item = &Term> {
        let mut subjects: Vec<&Term> = self.by_subject.keys().collect();
        subjects.sort();
        subjects.into_iter()
    }

    pub fn statements_about(&self, s: &Term) -> impl Iterator<Item = &Triple> {
        self.by_subject.get(s).into_iter().flatten()
    }

    pub fn references_to(&self, o: &Term) -> impl Iterator<Item = &Triple> {
        self.by_object.get(o).into_iter().flatten()
    }

    /// Whether the term occurs anywhere in the graph.
    pub fn mentions(&self, term: &Term) -> bool {
        self.by_subject.contains_key(term)
            || self.by_object.contains_key(term)
            || self.by_predicate.contains_key(term)
    }

    pub fn has_type(&self, s: &Term, class: &str) -> bool {
        self.contains_spo(s, vocab::RDF_TYPE, class)
    }

    fn contains_spo(&self, s: &Term, p: &str, o: &str) -> bool {
        self.by_subject.get(s).is_some_and(|set| {
            set.iter()
                .any(|t| t.predicate.is_iri(p) && t.object.is_iri(o))
        })
    }

    /// Reads the members of an RDF collection starting at `head`.
    pub fn list_members(&self, head: &Term) -> Result<Vec<Term>, GraphError> {
        let first = Term::vocab(vocab::RDF_FIRST);
        let rest = Term::vocab(vocab::RDF_REST);
        let mut members = Vec::new();
        let mut seen = HashSet::new();
        let mut cell = head.clone();
        while !cell.is_iri(vocab::RDF_NIL) {
            let malformed = |reason: &str| GraphError::MalformedList {
                cell: cell.to_string(),
                reason: reason.to_string(),
            };
            if matches!(cell, Term::Literal(_)) {
                return Err(malformed("literal in list position"));
            }
            if !seen.insert(cell.clone()) {
                return Err(malformed("list cycles back to an earlier cell"));
            }
            let firsts = self.objects(&cell, &first);
            let rests = self.objects(&cell, &rest);
            match (firsts.as_slice(), rests.as_slice()) {
                ([member], [next]) => {
                    members.push((*member).clone());
                    cell = (*next).clone();
                }
                ([], []) => {
                    return Err(malformed(
                        "cell has neither first nor rest; list not terminated by nil",
                    ))
                }
                ([_], []) => return Err(malformed("cell lacks rest")),
                ([], _) => return Err(malformed("cell lacks first")),
                _ => return Err(malformed("cell has more than one first or rest")),
            }
        }
        Ok(members)
    }

    /// Builds a fresh collection holding `items` and returns its head.
    pub fn build_list(&mut self, items: &[Term]) -> Term {
        let mut head = Term::vocab(vocab::RDF_NIL);
        let cells: Vec<Term> = items.iter().map(|_| self.fresh_blank()).collect();
        for (cell, item) in cells.iter().zip(items).rev() {
            self.insert(Triple {
                subject: cell.clone(),
                predicate: Term::vocab(vocab::RDF_FIRST),
                object: item.clone(),
            });
            self.insert(Triple {
                subject: cell.clone(),
                predicate: Term::vocab(vocab::RDF_REST),
                object: head,
            });
            head = cell.clone();
        }
        head
    }

    /// Adds every statement of `other`, relabeling its blank nodes so they
    /// cannot capture blanks already present here.
    pub fn union_with(&mut self, other: &Graph) {
        let mut renamed: HashMap<String, Term> = HashMap::new();
        let mut rename = |graph: &mut Graph, term: &Term| match term {
            Term::Blank(label) => renamed
                .entry(label.clone())
                .or_insert_with(|| graph.fresh_blank())
                .clone(),
            other => other.clone(),
        };
        for triple in other.iter() {
            let s = rename(self, &triple.subject);
            let o = rename(self, &triple.object);
            self.insert(Triple {
                subject: s,
                predicate: triple.predicate.clone(),
                object: o,
            });
        }
        for (prefix, base) in &other.namespaces {
            self.namespaces
                .entry(prefix.clone())
                .or_insert_with(|| base.clone());
        }
    }

    /// Statements of `root` plus everything reachable from it through blank
    /// objects. Used to copy class definitions between graphs verbatim.
    pub fn blank_closure(&self, root: &Term) -> Vec<&Triple> {
        let mut out = Vec::new();
        let mut stack = vec![root];
        let mut seen = HashSet::new();
        while let Some(node) = stack.pop() {
            if !seen.insert(node) {
                continue;
            }
            for triple in self.statements_about(node) {
                out.push(triple);
                if triple.object.is_blank() {
                    stack.push(&triple.object);
                }
            }
        }
        out
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut graph = Graph::new();
        for triple in iter {
            graph.insert(triple);
        }
        graph
    }
}
