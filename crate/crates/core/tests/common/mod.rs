#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use ontoform_core::graph::{Graph, Iri, Term};
use ontoform_core::ontology::Ontology;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const DT: &str = "http://example.org/ontodt#";
pub const REEF: &str = "http://example.org/reef/#";

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn pv() -> Ontology {
    Ontology::from_turtle(&fixture("pv-ontology.ttl"), None).unwrap()
}

pub fn dt(local: &str) -> Iri {
    Iri::new(format!("{DT}{local}")).unwrap()
}

pub fn reef(local: &str) -> Iri {
    Iri::new(format!("{REEF}{local}")).unwrap()
}

fn iri_of(term: &Term) -> Option<&str> {
    match term {
        Term::Iri(i) => Some(i.as_str()),
        _ => None,
    }
}

fn scan<'g>(g: &'g Graph, s: &Term, p: &str) -> Vec<&'g Term> {
    g.iter()
        .filter(|t| t.subject() == s && iri_of(t.predicate()) == Some(p))
        .map(|t| t.object())
        .collect()
}

/// Restriction pairs of a class found by scanning every statement, without
/// the graph's indexes or list helpers.
pub fn naive_components(g: &Graph, class: &Iri) -> Vec<(Iri, Iri)> {
    let subject = Term::Iri(class.clone());
    let mut out = Vec::new();
    for sup in scan(g, &subject, &format!("{RDFS}subClassOf")) {
        if !sup.is_blank() {
            continue;
        }
        for list in scan(g, sup, &format!("{OWL}intersectionOf")) {
            let mut cell = list.clone();
            let mut guard = 0;
            while iri_of(&cell) != Some(&format!("{RDF}nil")) {
                guard += 1;
                assert!(guard < 10_000, "runaway list");
                let member = scan(g, &cell, &format!("{RDF}first"))[0].clone();
                let prop = scan(g, &member, &format!("{OWL}onProperty"))[0];
                let filler = scan(g, &member, &format!("{OWL}someValuesFrom"))[0];
                out.push((
                    Iri::new(iri_of(prop).unwrap()).unwrap(),
                    Iri::new(iri_of(filler).unwrap()).unwrap(),
                ));
                cell = scan(g, &cell, &format!("{RDF}rest"))[0].clone();
            }
        }
    }
    out
}

/// A random ontology in Turtle. Class `Ci` may only use classes `Cj` with
/// `j > i` as fillers, so the definition graph is acyclic. Products are the
/// classes directly under `Root`.
#[derive(Debug, Clone)]
pub struct RandomOntology {
    pub turtle: String,
    pub classes: usize,
    pub definitions: BTreeMap<usize, Vec<usize>>,
    pub products: Vec<usize>,
    /// class index -> datatype property names with their xsd type local name
    pub properties: BTreeMap<usize, Vec<(String, &'static str)>>,
}

pub const GEN_NS: &str = "http://gen.example/o#";

pub fn gen_iri(i: usize) -> Iri {
    Iri::new(format!("{GEN_NS}C{i}")).unwrap()
}

pub fn random_ontology(seed: u64, max_classes: usize, max_restrictions: usize) -> RandomOntology {
    let mut rng = StdRng::seed_from_u64(seed);
    let classes = rng.random_range(1..=max_classes);
    let mut definitions = BTreeMap::new();
    let mut properties: BTreeMap<usize, Vec<(String, &'static str)>> = BTreeMap::new();
    let mut out = String::new();
    writeln!(out, "@prefix g: <{GEN_NS}> .").unwrap();
    writeln!(out, "@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .").unwrap();
    writeln!(out, "@prefix of: <urn:ontoform:vocab#> .").unwrap();
    writeln!(out, "<{GEN_NS}> of:productRoot g:Root .").unwrap();
    writeln!(out, "g:Root a owl:Class ; rdfs:label \"root\" .").unwrap();
    writeln!(out, "g:has a owl:ObjectProperty .").unwrap();
    writeln!(out, "g:part a owl:ObjectProperty .").unwrap();
    let mut products = Vec::new();
    for i in 0..classes {
        write!(out, "g:C{i} a owl:Class ; rdfs:label \"class {i}\"").unwrap();
        if i == 0 || rng.random_bool(0.3) {
            write!(out, " ; rdfs:subClassOf g:Root").unwrap();
            products.push(i);
        }
        if i + 1 < classes && rng.random_bool(0.6) {
            let n = rng.random_range(1..=max_restrictions);
            let fillers: Vec<usize> = (0..n).map(|_| rng.random_range(i + 1..classes)).collect();
            write!(out, " ;\n  rdfs:subClassOf [ owl:intersectionOf (").unwrap();
            for f in &fillers {
                let prop = if rng.random_bool(0.8) { "has" } else { "part" };
                write!(
                    out,
                    " [ a owl:Restriction ; owl:onProperty g:{prop} ; owl:someValuesFrom g:C{f} ]"
                )
                .unwrap();
            }
            write!(out, " ) ]").unwrap();
            definitions.insert(i, fillers);
        }
        writeln!(out, " .").unwrap();
        for k in 0..rng.random_range(0..3usize) {
            let ty = ["string", "decimal", "integer", "boolean", "date"][rng.random_range(0..5)];
            let name = format!("p{i}_{k}");
            writeln!(out, "g:{name} a owl:DatatypeProperty ; rdfs:label \"{name}\" ; rdfs:domain g:C{i} ; rdfs:range xsd:{ty} .")
                .unwrap();
            properties.entry(i).or_default().push((name, ty));
        }
    }
    RandomOntology {
        turtle: out,
        classes,
        definitions,
        products,
        properties,
    }
}

impl RandomOntology {
    /// Number of forms a session on `class` issues: the class itself plus
    /// the expansion of every filler occurrence.
    pub fn expansion_size(&self, class: usize) -> usize {
        1 + self.definitions.get(&class).map_or(0, |fillers| {
            fillers.iter().map(|f| self.expansion_size(*f)).sum()
        })
    }

    /// Classes reachable from `class` through definitions, itself included.
    pub fn reachable(&self, class: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([class]);
        let mut stack = vec![class];
        while let Some(c) = stack.pop() {
            for f in self.definitions.get(&c).into_iter().flatten() {
                if seen.insert(*f) {
                    stack.push(*f);
                }
            }
        }
        seen
    }
}

/// A lexical value of the given xsd type.
pub fn sample_value(rng: &mut StdRng, ty: &str) -> String {
    match ty {
        "string" => format!("s{}", rng.random_range(0..1000)),
        "decimal" => format!("{}.{}", rng.random_range(0..5000), rng.random_range(0..100)),
        "integer" => rng.random_range(-50..5000).to_string(),
        "boolean" => ["true", "false"][rng.random_range(0..2)].to_string(),
        _ => format!(
            "20{:02}-{:02}-{:02}",
            rng.random_range(0..30),
            rng.random_range(1..13),
            rng.random_range(1..29)
        ),
    }
}

/// Every defined instance links, through each of its restrictions, to an
/// instance of the filler type.
pub fn check_completeness(annotations: &Graph, ontology: &Ontology) -> Result<(), String> {
    let rdf_type = Term::Iri(Iri::new(format!("{RDF}type")).unwrap());
    for t in annotations.triples_matching(None, Some(&rdf_type), None) {
        let Term::Iri(concept) = t.object() else {
            continue;
        };
        let components = ontoform_core::axiom::components_of(ontology.graph(), concept)
            .map_err(|e| e.to_string())?;
        let mut used: BTreeSet<Term> = BTreeSet::new();
        for r in components {
            let linked = annotations
                .objects(t.subject(), &Term::Iri(r.property.clone()))
                .find(|child| {
                    !used.contains(*child) && annotations.has_type(child, r.filler.as_str())
                })
                .cloned();
            match linked {
                Some(child) => {
                    used.insert(child);
                }
                None => {
                    return Err(format!(
                        "{} lacks a {} link to {}",
                        t.subject(),
                        r.property,
                        r.filler
                    ))
                }
            }
        }
    }
    Ok(())
}

/// Tag balance over the HTML we emit (no void elements besides `meta`).
pub fn html_balanced(html: &str) -> bool {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = html;
    while let Some(start) = rest.find('<') {
        let Some(end) = rest[start..].find('>') else {
            return false;
        };
        let tag = &rest[start + 1..start + end];
        rest = &rest[start + end + 1..];
        if tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            if stack.pop().as_deref() != Some(name.trim()) {
                return false;
            }
        } else {
            let name = tag.split_whitespace().next().unwrap_or("").to_string();
            if name != "meta" {
                stack.push(name);
            }
        }
    }
    stack.is_empty()
}
