//! Session output: an RDF annotation file and a readable HTML document.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::axiom::{self, Datatype};
use crate::graph::{Graph, Iri, Term};
use crate::ontology::Ontology;
use crate::orchestrator::{self, Session, TypedValue, DESIGNATION};
use crate::turtle;
use crate::vocab;

/// Canonical Turtle of the annotation graph behind a short comment header.
pub fn to_rdf(session: &Session) -> String {
    let mut out = String::new();
    writeln!(out, "# session: {}", session.id()).unwrap();
    writeln!(out, "# product: {}", session.product()).unwrap();
    writeln!(out, "# ontology: {}", session.ontology_hash()).unwrap();
    out.push_str(&turtle::serialize_turtle(session.annotations()));
    out
}

/// An answer read back from an annotation graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredAnswer {
    pub instance: String,
    pub concept: Iri,
    pub parent: Option<String>,
    pub property: Option<Iri>,
    pub values: BTreeMap<String, TypedValue>,
}

fn instance_of(iri: &Iri, prefix: &str) -> Option<String> {
    iri.as_str()
        .strip_prefix(prefix)
        .filter(|rest| rest.starts_with("inst-"))
        .map(str::to_string)
}

fn instance_number(instance: &str) -> u64 {
    instance
        .trim_start_matches("inst-")
        .parse()
        .unwrap_or(u64::MAX)
}

/// Inverse of the annotation mapping: every instance of the session with its
/// field values (keyed by field id) and the link from its parent.
pub fn answers_from_rdf(
    graph: &Graph,
    ontology: &Ontology,
    session_id: &str,
) -> Vec<RecoveredAnswer> {
    let prefix = format!("urn:ontoform:session:{session_id}:");
    let rdf_type = Term::vocab(vocab::RDF_TYPE);
    let mut links: BTreeMap<String, (String, Iri)> = BTreeMap::new();
    for t in graph.iter() {
        if let (Term::Iri(s), Term::Iri(p), Term::Iri(o)) = (t.subject(), t.predicate(), t.object())
        {
            if let (Some(parent), Some(child)) = (instance_of(s, &prefix), instance_of(o, &prefix))
            {
                links.insert(child, (parent, p.clone()));
            }
        }
    }
    let mut out = Vec::new();
    for t in graph.triples_matching(None, Some(&rdf_type), None) {
        let (Term::Iri(subject), Term::Iri(concept)) = (t.subject(), t.object()) else {
            continue;
        };
        let Some(instance) = instance_of(subject, &prefix) else {
            continue;
        };
        let link = links.get(&instance).cloned();
        let fields = orchestrator::form_fields(ontology.graph(), concept, link.is_some())
            .unwrap_or_default();
        let mut values = BTreeMap::new();
        for (spec, property) in fields {
            let value = graph
                .objects(t.subject(), &Term::Iri(property))
                .find_map(Term::as_literal);
            if let Some(literal) = value {
                values.insert(
                    spec.id,
                    TypedValue {
                        lexical: literal.lexical.clone(),
                        datatype: spec.datatype,
                    },
                );
            }
        }
        let (parent, property) = link.map_or((None, None), |(p, prop)| (Some(p), Some(prop)));
        out.push(RecoveredAnswer {
            instance,
            concept: concept.clone(),
            parent,
            property,
            values,
        });
    }
    out.sort_by_key(|a| instance_number(&a.instance));
    out
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn display_value(value: &TypedValue) -> String {
    match value.datatype {
        Datatype::Boolean if value.lexical == "true" => "oui".to_string(),
        Datatype::Boolean => "non".to_string(),
        _ => value.lexical.clone(),
    }
}

const STYLE: &str = "body{font-family:sans-serif;max-width:50em;margin:2em auto;color:#222}\
table{border-collapse:collapse;margin:.5em 0}\
th,td{border:1px solid #bbb;padding:.25em .6em;text-align:left}\
th{background:#f2f2f2;font-weight:normal}\
.meta{color:#666;font-size:.9em}";

/// One section per answered form, in submission order.
pub fn to_html(session: &Session, ontology: &Ontology) -> String {
    let graph = ontology.graph();
    let product_label = axiom::label_of(graph, session.product());
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"fr\">\n<head>\n<meta charset=\"utf-8\">\n");
    writeln!(out, "<title>{}</title>", escape(&product_label)).unwrap();
    writeln!(out, "<style>{STYLE}</style>").unwrap();
    out.push_str("</head>\n<body>\n");
    writeln!(out, "<h1>{}</h1>", escape(&product_label)).unwrap();
    writeln!(
        out,
        "<p class=\"meta\">session {} &middot; ontology {}</p>",
        escape(session.id()),
        escape(session.ontology_hash())
    )
    .unwrap();

    if session.answers().is_empty() {
        out.push_str("<p class=\"empty\">No entries yet.</p>\n");
    }
    for answer in session.answers() {
        let label = axiom::label_of(graph, &answer.concept);
        let field_labels = orchestrator::field_labels(ontology, &answer.concept);
        writeln!(out, "<section id=\"{}\">", escape(&answer.instance)).unwrap();
        writeln!(
            out,
            "<h2>{} : {}</h2>",
            escape(&label),
            escape(answer.designation())
        )
        .unwrap();
        let filled: Vec<(&String, &TypedValue)> = answer
            .values
            .iter()
            .filter(|(id, _)| *id != DESIGNATION)
            .collect();
        if !filled.is_empty() {
            out.push_str("<table>\n");
            for (id, value) in filled {
                let name = field_labels.get(id).unwrap_or(id);
                writeln!(
                    out,
                    "<tr><th>{}</th><td>{}</td></tr>",
                    escape(name),
                    escape(&display_value(value))
                )
                .unwrap();
            }
            out.push_str("</table>\n");
        }
        let children: Vec<_> = session
            .answers()
            .iter()
            .filter(|a| a.parent.as_deref() == Some(answer.instance.as_str()))
            .collect();
        let pending: Vec<_> = session
            .frontier()
            .iter()
            .filter(|p| p.parent.as_deref() == Some(answer.instance.as_str()))
            .collect();
        if !children.is_empty() || !pending.is_empty() {
            out.push_str("<ul>\n");
            for child in children {
                writeln!(
                    out,
                    "<li><a href=\"#{}\">{} : {}</a></li>",
                    escape(&child.instance),
                    escape(&axiom::label_of(graph, &child.concept)),
                    escape(child.designation())
                )
                .unwrap();
            }
            for p in pending {
                writeln!(
                    out,
                    "<li>{} (pending)</li>",
                    escape(&axiom::label_of(graph, &p.concept))
                )
                .unwrap();
            }
            out.push_str("</ul>\n");
        }
        out.push_str("</section>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}
