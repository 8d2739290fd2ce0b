//! Thesaurus to class hierarchy: broader/narrower links become subclass
//! edges (narrower term is the subclass), then redundant transitive edges
//! are removed.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use thiserror::Error;

use crate::graph::{Graph, GraphError, Iri, Literal, Term};
use crate::vocab;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ThesaurusError {
    #[error("cyclic hierarchy: {}", format_cycle(.0))]
    CyclicHierarchy(Vec<Iri>),
    #[error("link references undeclared concept {0}")]
    UndeclaredConcept(Iri),
    #[error("concept {0} has an empty label")]
    EmptyLabel(Iri),
    #[error("concept {0} declared twice with different labels")]
    DuplicateConcept(Iri),
    #[error("invalid concept id {0:?}")]
    InvalidId(String),
    #[error("csv: {0}")]
    Csv(String),
}

fn format_cycle(cycle: &[Iri]) -> String {
    cycle
        .iter()
        .map(Iri::local_name)
        .collect::<Vec<_>>()
        .join(" -> ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub text: String,
    pub language: Option<String>,
}

impl Label {
    fn to_literal(&self) -> Literal {
        match &self.language {
            Some(lang) => Literal::lang(self.text.clone(), lang.clone()),
            None => Literal::string(self.text.clone()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptScheme {
    concepts: BTreeMap<Iri, Label>,
    /// (concept, broader concept)
    broader: BTreeSet<(Iri, Iri)>,
    /// (concept, narrower concept)
    narrower: BTreeSet<(Iri, Iri)>,
}

impl ConceptScheme {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn concepts(&self) -> &BTreeMap<Iri, Label> {
        &self.concepts
    }

    pub fn add_concept(
        &mut self,
        id: Iri,
        label: &str,
        language: Option<&str>,
    ) -> Result<(), ThesaurusError> {
        let text = label.trim();
        if text.is_empty() {
            return Err(ThesaurusError::EmptyLabel(id));
        }
        let label = Label {
            text: text.to_string(),
            language: language.map(str::to_ascii_lowercase),
        };
        match self.concepts.get(&id) {
            Some(existing) if existing != &label => Err(ThesaurusError::DuplicateConcept(id)),
            Some(_) => Ok(()),
            None => {
                self.concepts.insert(id, label);
                Ok(())
            }
        }
    }

    fn declared(&self, id: &Iri) -> Result<(), ThesaurusError> {
        if self.concepts.contains_key(id) {
            Ok(())
        } else {
            Err(ThesaurusError::UndeclaredConcept(id.clone()))
        }
    }

    pub fn add_broader(&mut self, concept: Iri, broader: Iri) -> Result<(), ThesaurusError> {
        self.declared(&concept)?;
        self.declared(&broader)?;
        self.broader.insert((concept, broader));
        Ok(())
    }

    pub fn add_narrower(&mut self, concept: Iri, narrower: Iri) -> Result<(), ThesaurusError> {
        self.declared(&concept)?;
        self.declared(&narrower)?;
        self.narrower.insert((concept, narrower));
        Ok(())
    }

    /// Reads `skos:Concept`s with their `skos:prefLabel` and hierarchical
    /// links. Associative links are ignored.
    pub fn from_graph(graph: &Graph) -> Result<Self, ThesaurusError> {
        let mut scheme = ConceptScheme::new();
        let concept_type = Term::vocab(vocab::SKOS_CONCEPT);
        let pref_label = Term::vocab(vocab::SKOS_PREF_LABEL);
        let rdf_type = Term::vocab(vocab::RDF_TYPE);
        let mut concepts: Vec<&Iri> = graph
            .subjects(&rdf_type, &concept_type)
            .filter_map(Term::as_iri)
            .collect();
        concepts.sort();
        for id in concepts {
            let term = Term::Iri(id.clone());
            let mut labels: Vec<&Literal> = graph
                .objects(&term, &pref_label)
                .filter_map(Term::as_literal)
                .collect();
            // one preferred label per concept: French first, then untagged
            labels.sort_by_key(|l| {
                (
                    l.language.as_deref() != Some("fr"),
                    l.language.is_some(),
                    l.lexical.clone(),
                )
            });
            let (text, lang) = labels
                .first()
                .map(|l| (l.lexical.as_str(), l.language.as_deref()))
                .unwrap_or(("", None));
            scheme.add_concept(id.clone(), text, lang)?;
        }
        for (predicate, is_broader) in [(vocab::SKOS_BROADER, true), (vocab::SKOS_NARROWER, false)]
        {
            for t in graph.triples_matching(None, Some(&Term::vocab(predicate)), None) {
                let (Some(a), Some(b)) = (t.subject().as_iri(), t.object().as_iri()) else {
                    continue;
                };
                if is_broader {
                    scheme.add_broader(a.clone(), b.clone())?;
                } else {
                    scheme.add_narrower(a.clone(), b.clone())?;
                }
            }
        }
        Ok(scheme)
    }

    /// Reads `id,label,broader_id` rows (header required). Relative ids are
    /// resolved against `base`; an empty `broader_id` marks a root, and a
    /// concept may repeat on several rows to list more than one broader term.
    pub fn from_csv<R: Read>(reader: R, base: &str) -> Result<Self, ThesaurusError> {
        let mut csv = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv
            .headers()
            .map_err(|e| ThesaurusError::Csv(e.to_string()))?
            .clone();
        let expected = ["id", "label", "broader_id"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(ThesaurusError::Csv(format!(
                "expected header id,label,broader_id, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let resolve = |id: &str| -> Result<Iri, ThesaurusError> {
            let full = if id.contains(':') {
                id.to_string()
            } else {
                format!("{base}{id}")
            };
            Iri::new(full).map_err(|_| ThesaurusError::InvalidId(id.to_string()))
        };
        let mut scheme = ConceptScheme::new();
        let mut links = Vec::new();
        for record in csv.records() {
            let record = record.map_err(|e| ThesaurusError::Csv(e.to_string()))?;
            let id = resolve(&record[0])?;
            scheme.add_concept(id.clone(), &record[1], None)?;
            if !record[2].is_empty() {
                links.push((id, resolve(&record[2])?));
            }
        }
        for (concept, broader) in links {
            scheme.add_broader(concept, broader)?;
        }
        Ok(scheme)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Hierarchy {
    pub classes: BTreeMap<Iri, Label>,
    /// (subclass, superclass)
    pub edges: BTreeSet<(Iri, Iri)>,
}

impl Hierarchy {
    /// Named classes of an ontology graph with their first label and the
    /// subclass edges between them.
    pub fn from_graph(graph: &Graph) -> Self {
        let mut hierarchy = Hierarchy::default();
        let rdf_type = Term::vocab(vocab::RDF_TYPE);
        for class_type in [vocab::OWL_CLASS, vocab::RDFS_CLASS] {
            for subject in graph.subjects(&rdf_type, &Term::vocab(class_type)) {
                if let Term::Iri(iri) = subject {
                    let label = crate::axiom::label_of(graph, iri);
                    let language =
                        crate::axiom::label_literal(graph, iri).and_then(|l| l.language.clone());
                    hierarchy.classes.insert(
                        iri.clone(),
                        Label {
                            text: label,
                            language,
                        },
                    );
                }
            }
        }
        for t in graph.triples_matching(None, Some(&Term::vocab(vocab::RDFS_SUBCLASS_OF)), None) {
            if let (Term::Iri(sub), Term::Iri(sup)) = (t.subject(), t.object()) {
                if hierarchy.classes.contains_key(sub) && hierarchy.classes.contains_key(sup) {
                    hierarchy.edges.insert((sub.clone(), sup.clone()));
                }
            }
        }
        hierarchy
    }

    pub fn check_acyclic(&self) -> Result<(), ThesaurusError> {
        match find_cycle(self.classes.keys(), &self.edges) {
            Some(cycle) => Err(ThesaurusError::CyclicHierarchy(cycle)),
            None => Ok(()),
        }
    }

    /// Every (descendant, ancestor) pair implied by the edges.
    pub fn closure(&self) -> BTreeSet<(Iri, Iri)> {
        let mut out = BTreeSet::new();
        let adjacency = adjacency(&self.edges);
        for start in self.classes.keys() {
            let mut stack = vec![start];
            let mut seen = BTreeSet::new();
            while let Some(node) = stack.pop() {
                for next in adjacency.get(node).into_iter().flatten() {
                    if seen.insert(*next) {
                        out.insert((start.clone(), (*next).clone()));
                        stack.push(*next);
                    }
                }
            }
        }
        out
    }
}

fn adjacency(edges: &BTreeSet<(Iri, Iri)>) -> BTreeMap<&Iri, Vec<&Iri>> {
    let mut adjacency: BTreeMap<&Iri, Vec<&Iri>> = BTreeMap::new();
    for (sub, sup) in edges {
        adjacency.entry(sub).or_default().push(sup);
    }
    adjacency
}

/// First cycle found by depth-first search in sorted order, as a closed
/// sequence `[a, b, …, a]`.
pub(crate) fn find_cycle<'a>(
    nodes: impl Iterator<Item = &'a Iri>,
    edges: &BTreeSet<(Iri, Iri)>,
) -> Option<Vec<Iri>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        Grey,
        Black,
    }
    let adjacency = adjacency(edges);
    let mut color: BTreeMap<&Iri, Color> = BTreeMap::new();
    let mut starts: BTreeSet<&Iri> = nodes.collect();
    starts.extend(edges.iter().map(|(s, _)| s));
    for start in starts {
        if color.contains_key(start) {
            continue;
        }
        // (node, index of next child to visit)
        let mut stack: Vec<(&Iri, usize)> = vec![(start, 0)];
        color.insert(start, Color::Grey);
        while let Some((node, next)) = stack.last().copied() {
            let children = adjacency.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if let Some(child) = children.get(next) {
                stack.last_mut().expect("non-empty").1 += 1;
                match color.get(child) {
                    Some(Color::Grey) => {
                        let from = stack
                            .iter()
                            .position(|(n, _)| n == child)
                            .expect("grey node on stack");
                        let mut cycle: Vec<Iri> =
                            stack[from..].iter().map(|(n, _)| (*n).clone()).collect();
                        cycle.push((*child).clone());
                        return Some(cycle);
                    }
                    Some(Color::Black) => {}
                    None => {
                        color.insert(child, Color::Grey);
                        stack.push((child, 0));
                    }
                }
            } else {
                color.insert(node, Color::Black);
                stack.pop();
            }
        }
    }
    None
}

/// One class per concept; one edge per broader link and per inverted
/// narrower link.
pub fn extract_hierarchy(scheme: &ConceptScheme) -> Result<Hierarchy, ThesaurusError> {
    let mut edges = scheme.broader.clone();
    edges.extend(
        scheme
            .narrower
            .iter()
            .map(|(broad, narrow)| (narrow.clone(), broad.clone())),
    );
    let hierarchy = Hierarchy {
        classes: scheme.concepts.clone(),
        edges,
    };
    hierarchy.check_acyclic()?;
    Ok(hierarchy)
}

/// The unique minimal edge set with the same transitive closure.
pub fn transitive_reduction(hierarchy: &Hierarchy) -> Result<Hierarchy, ThesaurusError> {
    hierarchy.check_acyclic()?;
    let mut nodes: BTreeSet<&Iri> = hierarchy.classes.keys().collect();
    nodes.extend(hierarchy.edges.iter().flat_map(|(a, b)| [a, b]));
    let index: BTreeMap<&Iri, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let n = nodes.len();
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for (sub, sup) in &hierarchy.edges {
        successors[index[sub]].push(index[sup]);
        indegree[index[sup]] += 1;
    }

    // Kahn order, then descendants accumulated in reverse topological order
    let mut order = Vec::with_capacity(n);
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    while let Some(u) = ready.pop() {
        order.push(u);
        for &v in &successors[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                ready.push(v);
            }
        }
    }
    let words = n.div_ceil(64);
    let mut reach = vec![vec![0u64; words]; n];
    for &u in order.iter().rev() {
        let mut bits = vec![0u64; words];
        for &v in &successors[u] {
            bits[v / 64] |= 1 << (v % 64);
            for (b, r) in bits.iter_mut().zip(&reach[v]) {
                *b |= r;
            }
        }
        reach[u] = bits;
    }

    let edges = hierarchy
        .edges
        .iter()
        .filter(|(sub, sup)| {
            let (u, v) = (index[sub], index[sup]);
            !successors[u]
                .iter()
                .any(|&w| w != v && reach[w][v / 64] & (1 << (v % 64)) != 0)
        })
        .cloned()
        .collect();
    Ok(Hierarchy {
        classes: hierarchy.classes.clone(),
        edges,
    })
}

pub fn hierarchy_to_graph(hierarchy: &Hierarchy) -> Graph {
    let mut graph = Graph::new();
    graph.set_prefix("owl", vocab::OWL);
    graph.set_prefix("rdfs", vocab::RDFS);
    for (class, label) in &hierarchy.classes {
        let subject = Term::Iri(class.clone());
        graph
            .add(
                subject.clone(),
                Term::vocab(vocab::RDF_TYPE),
                Term::vocab(vocab::OWL_CLASS),
            )
            .and_then(|_| {
                graph.add(
                    subject,
                    Term::vocab(vocab::RDFS_LABEL),
                    label.to_literal().into(),
                )
            })
            .expect("well-formed class statements");
    }
    for (sub, sup) in &hierarchy.edges {
        graph
            .add(
                Term::Iri(sub.clone()),
                Term::vocab(vocab::RDFS_SUBCLASS_OF),
                Term::Iri(sup.clone()),
            )
            .expect("well-formed subclass statement");
    }
    graph
}

impl From<GraphError> for ThesaurusError {
    fn from(err: GraphError) -> Self {
        ThesaurusError::InvalidId(err.to_string())
    }
}
