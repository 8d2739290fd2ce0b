//! Label-based alignment and intersection merge of a thesaurus-derived
//! ontology (left) with a technical-document ontology (right).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::axiom::{self, AxiomError};
use crate::graph::{Graph, Iri, Term};
use crate::thesaurus::{self, Hierarchy, ThesaurusError};
use crate::vocab;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("merged hierarchy has a cycle: {}", .0.iter().map(Iri::local_name).collect::<Vec<_>>().join(" -> "))]
    CyclicHierarchy(Vec<Iri>),
    #[error(transparent)]
    Axiom(#[from] AxiomError),
}

/// Lowercase, strip diacritics, collapse whitespace and hyphens.
pub fn normalize_label(label: &str) -> String {
    let stripped: String = label
        .to_lowercase()
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .collect();
    stripped
        .split(|c: char| c.is_whitespace() || c == '-')
        .filter(|part| !part.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub left: Iri,
    pub right: Iri,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub matches: Vec<Match>,
    pub left_only: BTreeSet<Iri>,
    pub right_only: BTreeSet<Iri>,
    pub name_conflicts: Vec<NameConflict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameConflict {
    pub label: String,
    pub left: Vec<Iri>,
    pub right: Vec<Iri>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Redundancy {
    pub sub: Iri,
    #[serde(rename = "super")]
    pub sup: Iri,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub name_conflicts: Vec<NameConflict>,
    pub hierarchy_redundancies: Vec<Redundancy>,
    pub carried_classes: Vec<Iri>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reef_fraction: Option<f64>,
}

impl ConflictReport {
    pub fn is_empty(&self) -> bool {
        self.name_conflicts.is_empty() && self.hierarchy_redundancies.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn classes_by_label(graph: &Graph) -> BTreeMap<String, Vec<Iri>> {
    let mut out: BTreeMap<String, Vec<Iri>> = BTreeMap::new();
    for class in axiom::named_classes(graph) {
        out.entry(normalize_label(&axiom::label_of(graph, &class)))
            .or_default()
            .push(class);
    }
    out
}

pub fn align_by_label(left: &Graph, right: &Graph) -> (Alignment, ConflictReport) {
    let left_labels = classes_by_label(left);
    let right_labels = classes_by_label(right);
    let mut alignment = Alignment::default();
    let labels: BTreeSet<&String> = left_labels.keys().chain(right_labels.keys()).collect();
    for label in labels {
        let l = left_labels.get(label).map(Vec::as_slice).unwrap_or(&[]);
        let r = right_labels.get(label).map(Vec::as_slice).unwrap_or(&[]);
        match (l, r) {
            ([left], [right]) => alignment.matches.push(Match {
                left: left.clone(),
                right: right.clone(),
                label: label.clone(),
            }),
            _ => {
                if l.len() > 1 || r.len() > 1 {
                    alignment.name_conflicts.push(NameConflict {
                        label: label.clone(),
                        left: l.to_vec(),
                        right: r.to_vec(),
                    });
                }
                alignment.left_only.extend(l.iter().cloned());
                alignment.right_only.extend(r.iter().cloned());
            }
        }
    }
    let report = ConflictReport {
        name_conflicts: alignment.name_conflicts.clone(),
        ..ConflictReport::default()
    };
    (alignment, report)
}

/// Copies every statement about `subject` from `source`, following blank
/// objects, except named subclass edges (added separately after reduction).
fn copy_description(source: &Graph, subject: &Iri, into: &mut Graph) {
    let term = Term::Iri(subject.clone());
    for t in source.statements_about(&term) {
        let named_edge =
            t.predicate().is_iri(vocab::RDFS_SUBCLASS_OF) && t.object().as_iri().is_some();
        if named_edge {
            continue;
        }
        into.insert(t.clone());
        if t.object().is_blank() {
            for inner in source.blank_closure(t.object()) {
                into.insert(inner.clone());
            }
        }
    }
}

pub fn intersect_merge(
    left: &Graph,
    right: &Graph,
    alignment: &Alignment,
) -> Result<(Graph, ConflictReport), MergeError> {
    let to_right: BTreeMap<&Iri, &Iri> = alignment
        .matches
        .iter()
        .map(|m| (&m.left, &m.right))
        .collect();
    let matched: BTreeSet<Iri> = alignment.matches.iter().map(|m| m.right.clone()).collect();

    // Fillers of surviving definitions that did not match anything.
    let right_classes = axiom::named_classes(right);
    let mut survivors = matched.clone();
    let mut carried = BTreeSet::new();
    let mut queue: Vec<Iri> = matched.iter().cloned().collect();
    while let Some(class) = queue.pop() {
        for restriction in axiom::components_of(right, &class)? {
            let filler = restriction.filler;
            if right_classes.contains(&filler) && survivors.insert(filler.clone()) {
                carried.insert(filler.clone());
                queue.push(filler);
            }
        }
    }

    let right_hierarchy = Hierarchy::from_graph(right);
    let left_hierarchy = Hierarchy::from_graph(left);
    let mut merged_hierarchy = Hierarchy::default();
    for class in &survivors {
        if let Some(label) = right_hierarchy.classes.get(class) {
            merged_hierarchy
                .classes
                .insert(class.clone(), label.clone());
        }
    }
    for (sub, sup) in &right_hierarchy.edges {
        if survivors.contains(sub) && survivors.contains(sup) {
            merged_hierarchy.edges.insert((sub.clone(), sup.clone()));
        }
    }
    for (sub, sup) in &left_hierarchy.edges {
        if let (Some(sub), Some(sup)) = (to_right.get(sub), to_right.get(sup)) {
            merged_hierarchy
                .edges
                .insert(((*sub).clone(), (*sup).clone()));
        }
    }
    let reduced = thesaurus::transitive_reduction(&merged_hierarchy).map_err(|e| match e {
        ThesaurusError::CyclicHierarchy(cycle) => MergeError::CyclicHierarchy(cycle),
        other => unreachable!("reduction only fails on cycles: {other}"),
    })?;

    let mut merged = Graph::new();
    if !survivors.is_empty() {
        for source in [right, left] {
            for (prefix, base) in source.namespaces() {
                if !merged.namespaces().contains_key(prefix) {
                    merged.set_prefix(prefix.clone(), base.clone());
                }
            }
        }
        merged.set_prefix("skos", vocab::SKOS);
    }
    for class in &survivors {
        copy_description(right, class, &mut merged);
    }
    for m in &alignment.matches {
        if m.left != m.right {
            merged
                .add(
                    Term::Iri(m.right.clone()),
                    Term::vocab(vocab::SKOS_EXACT_MATCH),
                    Term::Iri(m.left.clone()),
                )
                .expect("iri triple");
        }
    }
    for (sub, sup) in &reduced.edges {
        merged
            .add(
                Term::Iri(sub.clone()),
                Term::vocab(vocab::RDFS_SUBCLASS_OF),
                Term::Iri(sup.clone()),
            )
            .expect("iri triple");
    }

    // Properties whose class-valued domain and range all survive.
    let rdf_type = Term::vocab(vocab::RDF_TYPE);
    for property_type in [vocab::OWL_DATATYPE_PROPERTY, vocab::OWL_OBJECT_PROPERTY] {
        for property in right.subjects(&rdf_type, &Term::vocab(property_type)) {
            let Term::Iri(iri) = property else { continue };
            let class_refs = right
                .objects(property, &Term::vocab(vocab::RDFS_DOMAIN))
                .chain(right.objects(property, &Term::vocab(vocab::RDFS_RANGE)))
                .filter_map(Term::as_iri)
                .filter(|c| right_classes.contains(*c))
                .collect::<Vec<_>>();
            let used = property_type == vocab::OWL_OBJECT_PROPERTY && merged.mentions(property);
            let attached =
                !class_refs.is_empty() && class_refs.iter().all(|c| survivors.contains(*c));
            if attached || used {
                copy_description(right, iri, &mut merged);
            }
        }
    }
    for t in right.triples_matching(None, Some(&Term::vocab(vocab::ONTOFORM_PRODUCT_ROOT)), None) {
        if t.object()
            .as_iri()
            .is_some_and(|root| survivors.contains(root))
        {
            merged.insert(t.clone());
        }
    }

    let hierarchy_redundancies = merged_hierarchy
        .edges
        .difference(&reduced.edges)
        .map(|(sub, sup)| Redundancy {
            sub: sub.clone(),
            sup: sup.clone(),
        })
        .collect();
    let reef_fraction =
        (!survivors.is_empty()).then(|| matched.len() as f64 / survivors.len() as f64);
    let report = ConflictReport {
        name_conflicts: alignment.name_conflicts.clone(),
        hierarchy_redundancies,
        carried_classes: carried.into_iter().collect(),
        reef_fraction,
    };
    Ok((merged, report))
}

pub fn merge(left: &Graph, right: &Graph) -> Result<(Graph, ConflictReport), MergeError> {
    let (alignment, _) = align_by_label(left, right);
    intersect_merge(left, right, &alignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turtle::parse_turtle;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_label("Étanchéité"), "etancheite");
        assert_eq!(
            normalize_label("Cellule  Photo-Voltaïque"),
            "cellule photo voltaique"
        );
        assert_eq!(normalize_label(""), "");
        assert_eq!(
            normalize_label("  -Câble - électrique- "),
            "cable electrique"
        );
    }

    #[test]
    fn alignment_matches_by_label() {
        let left = parse_turtle(
            r#"@prefix l: <http://l/> .
            l:Cadre a owl:Class ; rdfs:label "Cadre"@fr .
            l:Etancheite a owl:Class ; rdfs:label "étanchéité"@fr ."#,
        )
        .unwrap();
        let right = parse_turtle(
            r#"@prefix r: <http://r/> .
            r:Cadre a owl:Class ; rdfs:label "cadre" .
            r:CellulePhotoV a owl:Class ; rdfs:label "cellule photovoltaïque" ."#,
        )
        .unwrap();
        let (a, report) = align_by_label(&left, &right);
        assert_eq!(
            a.matches,
            vec![Match {
                left: iri("http://l/Cadre"),
                right: iri("http://r/Cadre"),
                label: "cadre".into()
            }]
        );
        assert_eq!(a.left_only, BTreeSet::from([iri("http://l/Etancheite")]));
        assert_eq!(
            a.right_only,
            BTreeSet::from([iri("http://r/CellulePhotoV")])
        );
        assert!(report.is_empty());
    }

    #[test]
    fn duplicate_label_is_a_conflict_without_match() {
        let left = parse_turtle(
            r#"@prefix l: <http://l/> .
            l:A a owl:Class ; rdfs:label "cadre" .
            l:B a owl:Class ; rdfs:label "Cadre" ."#,
        )
        .unwrap();
        let right =
            parse_turtle(r#"@prefix r: <http://r/> . r:C a owl:Class ; rdfs:label "cadre" ."#)
                .unwrap();
        let (a, report) = align_by_label(&left, &right);
        assert!(a.matches.is_empty());
        assert_eq!(report.name_conflicts.len(), 1);
        assert_eq!(report.name_conflicts[0].label, "cadre");
        assert_eq!(report.name_conflicts[0].left.len(), 2);
        assert_eq!(a.left_only.len() + a.right_only.len(), 3);
    }

    #[test]
    fn edges_need_both_endpoints() {
        let left = parse_turtle(
            r#"@prefix l: <http://l/> .
            l:Cadre a owl:Class ; rdfs:label "cadre" ; rdfs:subClassOf l:Etancheite .
            l:Etancheite a owl:Class ; rdfs:label "étanchéité" ."#,
        )
        .unwrap();
        let right =
            parse_turtle(r#"@prefix r: <http://r/> . r:Cadre a owl:Class ; rdfs:label "cadre" ."#)
                .unwrap();
        let (merged, report) = merge(&left, &right).unwrap();
        let subclass = Term::vocab(vocab::RDFS_SUBCLASS_OF);
        assert_eq!(
            merged.triples_matching(None, Some(&subclass), None).count(),
            0
        );
        assert!(merged.has_type(&Term::Iri(iri("http://r/Cadre")), vocab::OWL_CLASS));
        assert_eq!(
            merged
                .objects(
                    &Term::Iri(iri("http://r/Cadre")),
                    &Term::vocab(vocab::SKOS_EXACT_MATCH)
                )
                .next(),
            Some(&Term::Iri(iri("http://l/Cadre")))
        );
        assert!(report.is_empty());
        assert_eq!(report.reef_fraction, Some(1.0));
    }

    #[test]
    fn empty_alignment_gives_empty_graph() {
        let left =
            parse_turtle(r#"@prefix l: <http://l/> . l:X a owl:Class ; rdfs:label "x" ."#).unwrap();
        let right =
            parse_turtle(r#"@prefix r: <http://r/> . r:Y a owl:Class ; rdfs:label "y" ."#).unwrap();
        let (merged, report) = merge(&left, &right).unwrap();
        assert!(merged.is_empty());
        assert_eq!(report, ConflictReport::default());
        assert_eq!(
            report.to_json().split_whitespace().collect::<String>(),
            r#"{"name_conflicts":[],"hierarchy_redundancies":[],"carried_classes":[]}"#
        );
    }

    #[test]
    fn opposite_edges_are_a_cycle() {
        let left = parse_turtle(
            r#"@prefix r: <http://r/> .
            r:A a owl:Class ; rdfs:label "a" ; rdfs:subClassOf r:B .
            r:B a owl:Class ; rdfs:label "b" ."#,
        )
        .unwrap();
        let right = parse_turtle(
            r#"@prefix r: <http://r/> .
            r:A a owl:Class ; rdfs:label "a" .
            r:B a owl:Class ; rdfs:label "b" ; rdfs:subClassOf r:A ."#,
        )
        .unwrap();
        assert!(matches!(
            merge(&left, &right),
            Err(MergeError::CyclicHierarchy(_))
        ));
    }

    #[test]
    fn report_json_shape() {
        let report = ConflictReport {
            name_conflicts: vec![NameConflict {
                label: "cadre".into(),
                left: vec![iri("http://l/A")],
                right: vec![],
            }],
            hierarchy_redundancies: vec![Redundancy {
                sub: iri("http://r/A"),
                sup: iri("http://r/B"),
            }],
            carried_classes: vec![iri("http://r/C")],
            reef_fraction: Some(0.5),
        };
        let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(value["hierarchy_redundancies"][0]["super"], "http://r/B");
        assert_eq!(value["name_conflicts"][0]["left"][0], "http://l/A");
        assert_eq!(value["reef_fraction"], 0.5);
        let back: ConflictReport = serde_json::from_value(value).unwrap();
        assert_eq!(back, report);
    }
}
