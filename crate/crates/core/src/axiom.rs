//! Defined-class axioms and the composition query.
//!
//! A defined class carries one anonymous superclass holding
//! `owl:intersectionOf` over existential restrictions:
//!
//! ```text
//! dt:VerrePolymere rdfs:subClassOf dt:ModulePhotoV ,
//!     [ owl:intersectionOf ( [ owl:onProperty dt:hasComponent ; owl:someValuesFrom reef:01573 ] … ) ] .
//! ```
//!
//! [`components_of`] answers the composition query for one class: walk the
//! class's anonymous superclass, its intersection list, and read
//! `(onProperty, someValuesFrom)` from every member.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, Iri, Literal, Term};
use crate::thesaurus::find_cycle;
use crate::vocab;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AxiomError {
    #[error("unknown class {0}")]
    UnknownClass(Iri),
    #[error("malformed axiom for {class}: {reason}")]
    MalformedAxiom { class: Iri, reason: String },
    #[error("cyclic class hierarchy: {}", .0.iter().map(Iri::local_name).collect::<Vec<_>>().join(" -> "))]
    CyclicHierarchy(Vec<Iri>),
}

fn malformed(class: &Iri, reason: impl Into<String>) -> AxiomError {
    AxiomError::MalformedAxiom {
        class: class.clone(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Restriction {
    pub property: Iri,
    pub filler: Iri,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassAxiom {
    pub class: Iri,
    pub superclasses: Vec<Iri>,
    /// Restrictions of the intersection, in collection order.
    pub definition: Option<Vec<Restriction>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Defined,
    Primitive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    String,
    Decimal,
    Integer,
    Boolean,
    Date,
}

impl Datatype {
    /// Ranges outside the five supported datatypes fall back to `String`.
    pub fn from_range(range: Option<&Iri>) -> Self {
        let Some(range) = range else {
            return Datatype::String;
        };
        match range.as_str().strip_prefix(vocab::XSD) {
            Some("decimal" | "double" | "float") => Datatype::Decimal,
            Some(
                "integer" | "int" | "long" | "short" | "nonNegativeInteger" | "positiveInteger"
                | "nonPositiveInteger" | "negativeInteger" | "unsignedInt" | "unsignedLong",
            ) => Datatype::Integer,
            Some("boolean") => Datatype::Boolean,
            Some("date") => Datatype::Date,
            _ => Datatype::String,
        }
    }

    pub fn iri(self) -> Iri {
        Iri::from_static(match self {
            Datatype::String => vocab::XSD_STRING,
            Datatype::Decimal => vocab::XSD_DECIMAL,
            Datatype::Integer => vocab::XSD_INTEGER,
            Datatype::Boolean => vocab::XSD_BOOLEAN,
            Datatype::Date => vocab::XSD_DATE,
        })
    }

    /// Checks a lexical form against this datatype.
    pub fn check(self, lexical: &str) -> Result<(), String> {
        let ok = match self {
            Datatype::String => true,
            Datatype::Decimal => crate::turtle::is_decimal_lexical(lexical),
            Datatype::Integer => crate::turtle::is_integer_lexical(lexical),
            Datatype::Boolean => matches!(lexical, "true" | "false" | "1" | "0"),
            Datatype::Date => {
                lexical.len() == 10
                    && chrono::NaiveDate::parse_from_str(lexical, "%Y-%m-%d").is_ok()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(format!("{lexical:?} is not a valid {self}"))
        }
    }
}

impl fmt::Display for Datatype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Datatype::String => "string",
            Datatype::Decimal => "decimal",
            Datatype::Integer => "integer",
            Datatype::Boolean => "boolean",
            Datatype::Date => "date",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertySpec {
    pub property: Iri,
    pub label: String,
    pub domain: Iri,
    pub datatype: Datatype,
}

pub fn is_class(graph: &Graph, iri: &Iri) -> bool {
    let term = Term::Iri(iri.clone());
    graph.has_type(&term, vocab::OWL_CLASS) || graph.has_type(&term, vocab::RDFS_CLASS)
}

/// All named classes, sorted.
pub fn named_classes(graph: &Graph) -> BTreeSet<Iri> {
    let rdf_type = Term::vocab(vocab::RDF_TYPE);
    [vocab::OWL_CLASS, vocab::RDFS_CLASS]
        .into_iter()
        .flat_map(|c| {
            graph
                .subjects(&rdf_type, &Term::vocab(c))
                .filter_map(Term::as_iri)
                .cloned()
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Preferred `rdfs:label`: French, then untagged, then anything.
pub fn label_literal<'g>(graph: &'g Graph, iri: &Iri) -> Option<&'g Literal> {
    let term = Term::Iri(iri.clone());
    let label = Term::vocab(vocab::RDFS_LABEL);
    let mut labels: Vec<&Literal> = graph
        .objects(&term, &label)
        .filter_map(Term::as_literal)
        .collect();
    labels.sort_by_key(|l| {
        (
            l.language.as_deref() != Some("fr"),
            l.language.is_some(),
            l.lexical.clone(),
        )
    });
    labels.first().copied()
}

pub fn label_of(graph: &Graph, iri: &Iri) -> String {
    label_literal(graph, iri)
        .map(|l| l.lexical.clone())
        .unwrap_or_else(|| iri.local_name().to_string())
}

fn require_class(graph: &Graph, class: &Iri) -> Result<(), AxiomError> {
    if is_class(graph, class) {
        Ok(())
    } else {
        Err(AxiomError::UnknownClass(class.clone()))
    }
}

fn single_iri<'g>(graph: &'g Graph, node: &Term, predicate: &'static str) -> Option<&'g Iri> {
    let mut values = graph.objects(node, &Term::vocab(predicate));
    match (values.next(), values.next()) {
        (Some(Term::Iri(iri)), None) => Some(iri),
        _ => None,
    }
}

pub fn read_axiom(graph: &Graph, class: &Iri) -> Result<ClassAxiom, AxiomError> {
    require_class(graph, class)?;
    let subject = Term::Iri(class.clone());
    let mut superclasses = Vec::new();
    let mut definitions = Vec::new();
    let intersection_of = Term::vocab(vocab::OWL_INTERSECTION_OF);
    for sup in graph.objects(&subject, &Term::vocab(vocab::RDFS_SUBCLASS_OF)) {
        match sup {
            Term::Iri(iri) => superclasses.push(iri.clone()),
            Term::Blank(_) => {
                let lists: Vec<&Term> = graph.objects(sup, &intersection_of).collect();
                match lists.as_slice() {
                    [] => {}
                    [list] => definitions.push(*list),
                    _ => {
                        return Err(malformed(
                            class,
                            "anonymous superclass has several intersectionOf lists",
                        ))
                    }
                }
            }
            Term::Literal(_) => return Err(malformed(class, "literal superclass")),
        }
    }
    let definition = match definitions.as_slice() {
        [] => None,
        [list] => {
            let members = graph
                .list_members(list)
                .map_err(|e| malformed(class, e.to_string()))?;
            let restrictions = members
                .iter()
                .enumerate()
                .map(|(i, member)| {
                    let property = single_iri(graph, member, vocab::OWL_ON_PROPERTY);
                    let filler = single_iri(graph, member, vocab::OWL_SOME_VALUES_FROM);
                    match (property, filler) {
                        (Some(property), Some(filler)) => Ok(Restriction {
                            property: property.clone(),
                            filler: filler.clone(),
                        }),
                        _ => Err(malformed(
                            class,
                            format!("intersection member {i} needs exactly one onProperty and one someValuesFrom"),
                        )),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(restrictions)
        }
        _ => return Err(malformed(class, "more than one definition")),
    };
    Ok(ClassAxiom {
        class: class.clone(),
        superclasses,
        definition,
    })
}

pub fn classify_concept(graph: &Graph, class: &Iri) -> Result<Classification, AxiomError> {
    Ok(match read_axiom(graph, class)?.definition {
        Some(_) => Classification::Defined,
        None => Classification::Primitive,
    })
}

/// `(property, filler)` pairs of the class's own definition, in collection
/// order. Definitions are not inherited from superclasses, and every
/// restricted property is returned.
pub fn components_of(graph: &Graph, class: &Iri) -> Result<Vec<Restriction>, AxiomError> {
    Ok(read_axiom(graph, class)?.definition.unwrap_or_default())
}

/// Strict named ancestors of `class`.
pub fn ancestors(graph: &Graph, class: &Iri) -> BTreeSet<Iri> {
    let sub_class_of = Term::vocab(vocab::RDFS_SUBCLASS_OF);
    let mut out = BTreeSet::new();
    let mut stack = vec![Term::Iri(class.clone())];
    while let Some(node) = stack.pop() {
        for sup in graph.objects(&node, &sub_class_of) {
            if let Term::Iri(iri) = sup {
                if iri != class && out.insert(iri.clone()) {
                    stack.push(sup.clone());
                }
            }
        }
    }
    out
}

/// Strict named descendants of `class`.
pub fn descendants(graph: &Graph, class: &Iri) -> BTreeSet<Iri> {
    let sub_class_of = Term::vocab(vocab::RDFS_SUBCLASS_OF);
    let mut out = BTreeSet::new();
    let mut stack = vec![Term::Iri(class.clone())];
    while let Some(node) = stack.pop() {
        for sub in graph.subjects(&sub_class_of, &node) {
            if let Term::Iri(iri) = sub {
                if iri != class && out.insert(iri.clone()) {
                    stack.push(sub.clone());
                }
            }
        }
    }
    out
}

/// Datatype properties whose domain is the class or one of its named
/// ancestors, deduplicated and sorted by label.
pub fn properties_of(graph: &Graph, class: &Iri) -> Result<Vec<PropertySpec>, AxiomError> {
    require_class(graph, class)?;
    let mut scope = ancestors(graph, class);
    scope.insert(class.clone());
    let domain = Term::vocab(vocab::RDFS_DOMAIN);
    let range = Term::vocab(vocab::RDFS_RANGE);
    let rdf_type = Term::vocab(vocab::RDF_TYPE);
    let mut found: BTreeMap<Iri, PropertySpec> = BTreeMap::new();
    for property in graph.subjects(&rdf_type, &Term::vocab(vocab::OWL_DATATYPE_PROPERTY)) {
        let Term::Iri(property_iri) = property else {
            continue;
        };
        let mut domains: Vec<&Iri> = graph
            .objects(property, &domain)
            .filter_map(Term::as_iri)
            .filter(|d| scope.contains(*d))
            .collect();
        domains.sort();
        // prefer the most specific attachment when several domains apply
        let Some(attached) = domains
            .iter()
            .find(|d| ***d == *class)
            .or_else(|| domains.first())
        else {
            continue;
        };
        let range_iri = graph.objects(property, &range).find_map(Term::as_iri);
        found
            .entry(property_iri.clone())
            .or_insert_with(|| PropertySpec {
                property: property_iri.clone(),
                label: label_of(graph, property_iri),
                domain: (*attached).clone(),
                datatype: Datatype::from_range(range_iri),
            });
    }
    let mut specs: Vec<PropertySpec> = found.into_values().collect();
    specs.sort_by(|a, b| {
        a.label
            .cmp(&b.label)
            .then_with(|| a.property.cmp(&b.property))
    });
    Ok(specs)
}

/// Load-time checks: every class axiom decodes, every restriction filler is
/// a declared class, and the named hierarchy is acyclic.
pub fn validate_ontology(graph: &Graph) -> Result<(), AxiomError> {
    let classes = named_classes(graph);
    for class in &classes {
        let axiom = read_axiom(graph, class)?;
        for restriction in axiom.definition.iter().flatten() {
            if !classes.contains(&restriction.filler) {
                return Err(malformed(
                    class,
                    format!(
                        "restriction filler {} is not a declared class",
                        restriction.filler
                    ),
                ));
            }
        }
    }
    let edges: BTreeSet<(Iri, Iri)> = graph
        .triples_matching(None, Some(&Term::vocab(vocab::RDFS_SUBCLASS_OF)), None)
        .filter_map(|t| Some((t.subject().as_iri()?.clone(), t.object().as_iri()?.clone())))
        .collect();
    match find_cycle(classes.iter(), &edges) {
        Some(cycle) => Err(AxiomError::CyclicHierarchy(cycle)),
        None => Ok(()),
    }
}
