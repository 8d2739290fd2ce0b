use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::axiom::{self, AxiomError};
use crate::graph::{Graph, Iri, Term};
use crate::turtle::{self, ParseError};
use crate::vocab;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Axiom(#[from] AxiomError),
    #[error("no product root configured and none declared with of:productRoot")]
    NoRoot,
    #[error("several product roots declared: {0:?}")]
    AmbiguousRoot(Vec<String>),
}

/// A validated ontology graph with its configured product root.
#[derive(Debug, Clone)]
pub struct Ontology {
    graph: Graph,
    root: Iri,
    hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Product {
    pub iri: Iri,
    pub label: String,
}

impl Ontology {
    /// Validates `graph`. Without an explicit `root`, the graph must declare
    /// exactly one `of:productRoot`.
    pub fn new(graph: Graph, root: Option<Iri>) -> Result<Self, OntologyError> {
        axiom::validate_ontology(&graph)?;
        let root = match root {
            Some(root) => root,
            None => {
                let declared: Vec<&Iri> = graph
                    .triples_matching(None, Some(&Term::vocab(vocab::ONTOFORM_PRODUCT_ROOT)), None)
                    .filter_map(|t| t.object().as_iri())
                    .collect();
                match declared.as_slice() {
                    [] => return Err(OntologyError::NoRoot),
                    [root] => (*root).clone(),
                    many => {
                        return Err(OntologyError::AmbiguousRoot(
                            many.iter().map(|i| i.to_string()).collect(),
                        ))
                    }
                }
            }
        };
        if !axiom::is_class(&graph, &root) {
            return Err(AxiomError::UnknownClass(root).into());
        }
        let hash = ontology_hash(&graph);
        Ok(Ontology { graph, root, hash })
    }

    pub fn from_turtle(text: &str, root: Option<Iri>) -> Result<Self, OntologyError> {
        Self::new(turtle::parse_turtle(text)?, root)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn root(&self) -> &Iri {
        &self.root
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn products(&self) -> Vec<Product> {
        list_products(&self.graph, &self.root).expect("root validated at construction")
    }

    /// Resolves a full IRI, or a local name when exactly one class has it.
    pub fn resolve_class(&self, name: &str) -> Option<Iri> {
        resolve_class(&self.graph, name)
    }
}

/// Resolves a full IRI, or a local name when exactly one class has it.
pub fn resolve_class(graph: &Graph, name: &str) -> Option<Iri> {
    if let Ok(iri) = Iri::new(name) {
        if axiom::is_class(graph, &iri) {
            return Some(iri);
        }
    }
    let matches: Vec<Iri> = axiom::named_classes(graph)
        .into_iter()
        .filter(|c| c.local_name() == name)
        .collect();
    match <[Iri; 1]>::try_from(matches) {
        Ok([iri]) => Some(iri),
        Err(_) => None,
    }
}

/// Readable identifier for a class: its local name, or for opaque codes
/// such as `reef:01573` the label folded to CamelCase ("CableElectrique").
pub fn short_name(graph: &Graph, iri: &Iri) -> String {
    let local = iri.local_name();
    if local.chars().next().is_some_and(char::is_alphabetic) {
        return local.to_string();
    }
    let folded: String = crate::merge::normalize_label(&axiom::label_of(graph, iri))
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut chars = w.chars();
            let first = chars.next().expect("non-empty word");
            first.to_uppercase().chain(chars).collect::<String>()
        })
        .collect();
    if folded.is_empty() {
        local.to_string()
    } else {
        folded
    }
}

/// SHA-256 over the canonical Turtle serialization.
pub fn ontology_hash(graph: &Graph) -> String {
    let canonical = turtle::serialize_turtle(&turtle::canonicalize(graph));
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Every strict named descendant of `root`, sorted by label.
pub fn list_products(graph: &Graph, root: &Iri) -> Result<Vec<Product>, AxiomError> {
    if !axiom::is_class(graph, root) {
        return Err(AxiomError::UnknownClass(root.clone()));
    }
    let mut products: Vec<Product> = axiom::descendants(graph, root)
        .into_iter()
        .filter(|iri| axiom::is_class(graph, iri))
        .map(|iri| Product {
            label: axiom::label_of(graph, &iri),
            iri,
        })
        .collect();
    products.sort_by(|a, b| a.label.cmp(&b.label).then_with(|| a.iri.cmp(&b.iri)));
    Ok(products)
}
