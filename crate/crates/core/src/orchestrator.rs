//! Dynamic form chaining.
//!
//! A session starts from a product class. Each submitted form describes one
//! instance of the frontier head; every component of that concept is then
//! queued as a further form, breadth-first, until only terminal concepts
//! remain and the frontier is empty.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::axiom::{self, AxiomError, Datatype, Restriction};
use crate::graph::{Graph, Iri, Literal, Term};
use crate::ontology::Ontology;
use crate::turtle;
use crate::vocab;

pub const DESIGNATION: &str = "designation";
pub const QUANTITE: &str = "quantite";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("unknown class {0}")]
    UnknownClass(Iri),
    #[error("{0} is not a product under the configured root")]
    NotAProduct(Iri),
    #[error("session is complete")]
    SessionComplete,
    #[error("stale form: expected {expected}, got {got}")]
    StaleForm { expected: String, got: String },
    #[error("validation failed: {}", .0.iter().map(|e| format!("{}: {}", e.field, e.message)).collect::<Vec<_>>().join("; "))]
    ValidationFailed(Vec<FieldError>),
    #[error("cyclic definition: {}", .0.iter().map(Iri::local_name).collect::<Vec<_>>().join(" -> "))]
    CyclicDefinition(Vec<Iri>),
    #[error(transparent)]
    Axiom(AxiomError),
    #[error("session was recorded against ontology {expected}, current ontology is {found}")]
    OntologyMismatch { expected: String, found: String },
    #[error("corrupt session document: {0}")]
    CorruptSession(String),
    #[error("invalid session id {0:?}")]
    InvalidSessionId(String),
    #[error("script entry {index} is for {entry} but the next form is for {concept}")]
    ScriptMismatch {
        index: usize,
        entry: String,
        concept: Iri,
    },
}

impl From<AxiomError> for SessionError {
    fn from(err: AxiomError) -> Self {
        match err {
            AxiomError::UnknownClass(iri) => SessionError::UnknownClass(iri),
            other => SessionError::Axiom(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub id: String,
    pub label: String,
    pub datatype: Datatype,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentChoice {
    pub property: Iri,
    pub concept: Iri,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormSchema {
    pub form_id: String,
    pub concept: Iri,
    pub title: String,
    pub fields: Vec<FieldSpec>,
    pub components: Vec<ComponentChoice>,
}

/// Raw submitted values, keyed by field id, as lexical forms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormAnswer {
    pub form_id: String,
    pub values: BTreeMap<String, String>,
}

impl FormAnswer {
    pub fn new(form_id: impl Into<String>) -> Self {
        FormAnswer {
            form_id: form_id.into(),
            values: BTreeMap::new(),
        }
    }

    pub fn with(mut self, field: &str, value: impl Into<String>) -> Self {
        self.values.insert(field.to_string(), value.into());
        self
    }

    /// Converts JSON scalars to lexical forms; `null` means "left empty".
    pub fn from_json(
        form_id: impl Into<String>,
        values: &serde_json::Map<String, Value>,
    ) -> Result<Self, SessionError> {
        let mut answer = FormAnswer::new(form_id);
        let mut errors = Vec::new();
        for (field, value) in values {
            let lexical = match value {
                Value::Null => continue,
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                Value::Array(_) | Value::Object(_) => {
                    errors.push(FieldError {
                        field: field.clone(),
                        message: "expected a scalar value".into(),
                    });
                    continue;
                }
            };
            answer.values.insert(field.clone(), lexical);
        }
        if errors.is_empty() {
            Ok(answer)
        } else {
            Err(SessionError::ValidationFailed(errors))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedValue {
    pub lexical: String,
    pub datatype: Datatype,
}

/// A form waiting in the frontier. `path` lists the concepts expanded
/// above it, root first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingForm {
    pub parent: Option<String>,
    pub property: Option<Iri>,
    pub concept: Iri,
    pub path: Vec<Iri>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsweredForm {
    pub instance: String,
    pub concept: Iri,
    pub parent: Option<String>,
    pub property: Option<Iri>,
    pub form_id: String,
    pub values: BTreeMap<String, TypedValue>,
}

impl AnsweredForm {
    pub fn designation(&self) -> &str {
        self.values
            .get(DESIGNATION)
            .map_or("", |v| v.lexical.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionState {
    InProgress,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub answered: usize,
    pub pending: usize,
    pub state: SessionState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    id: String,
    ontology_hash: String,
    product: Iri,
    revision: u64,
    frontier: VecDeque<PendingForm>,
    answers: Vec<AnsweredForm>,
    annotations: Graph,
}

pub fn validate_session_id(id: &str) -> Result<(), SessionError> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(SessionError::InvalidSessionId(id.to_string()))
    }
}

pub fn instance_iri(session_id: &str, instance: &str) -> Iri {
    Iri::new(format!("urn:ontoform:session:{session_id}:{instance}")).expect("validated session id")
}

fn field_id_for(property: &Iri, taken: &HashSet<String>) -> String {
    let base: String = property
        .local_name()
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    let base = if base.is_empty() {
        "field".to_string()
    } else {
        base
    };
    if !taken.contains(&base) {
        return base;
    }
    (2..)
        .map(|n| format!("{base}_{n}"))
        .find(|candidate| !taken.contains(candidate))
        .expect("unbounded suffixes")
}

/// Field specs for a concept, each paired with the property it fills.
/// Component forms carry the extra `quantite` field.
pub fn form_fields(
    graph: &Graph,
    concept: &Iri,
    is_component: bool,
) -> Result<Vec<(FieldSpec, Iri)>, AxiomError> {
    let mut fields = vec![(
        FieldSpec {
            id: DESIGNATION.into(),
            label: "désignation".into(),
            datatype: Datatype::String,
            required: true,
        },
        Iri::from_static(vocab::ONTOFORM_DESIGNATION),
    )];
    if is_component {
        fields.push((
            FieldSpec {
                id: QUANTITE.into(),
                label: "quantité".into(),
                datatype: Datatype::Integer,
                required: false,
            },
            Iri::from_static(vocab::ONTOFORM_QUANTITE),
        ));
    }
    let mut taken: HashSet<String> = fields.iter().map(|(f, _)| f.id.clone()).collect();
    for spec in axiom::properties_of(graph, concept)? {
        let id = field_id_for(&spec.property, &taken);
        taken.insert(id.clone());
        fields.push((
            FieldSpec {
                id,
                label: spec.label,
                datatype: spec.datatype,
                required: false,
            },
            spec.property,
        ));
    }
    Ok(fields)
}

/// Labels for every field a concept's form can carry, keyed by field id.
pub fn field_labels(ontology: &Ontology, concept: &Iri) -> BTreeMap<String, String> {
    form_fields(ontology.graph(), concept, true)
        .map(|fields| fields.into_iter().map(|(f, _)| (f.id, f.label)).collect())
        .unwrap_or_default()
}

impl Session {
    pub fn start(
        ontology: &Ontology,
        product: &Iri,
        session_id: &str,
    ) -> Result<Self, SessionError> {
        validate_session_id(session_id)?;
        let graph = ontology.graph();
        if !axiom::is_class(graph, product) {
            return Err(SessionError::UnknownClass(product.clone()));
        }
        if !axiom::descendants(graph, ontology.root()).contains(product) {
            return Err(SessionError::NotAProduct(product.clone()));
        }
        let mut annotations = Graph::new();
        for (prefix, base) in graph.namespaces() {
            annotations.set_prefix(prefix.clone(), base.clone());
        }
        annotations.set_prefix("of", vocab::ONTOFORM);
        annotations.set_prefix("xsd", vocab::XSD);
        annotations.set_prefix("rdf", vocab::RDF);
        annotations.set_prefix("session", format!("urn:ontoform:session:{session_id}:"));
        Ok(Session {
            id: session_id.to_string(),
            ontology_hash: ontology.hash().to_string(),
            product: product.clone(),
            revision: 0,
            frontier: VecDeque::from([PendingForm {
                parent: None,
                property: None,
                concept: product.clone(),
                path: Vec::new(),
            }]),
            answers: Vec::new(),
            annotations,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn product(&self) -> &Iri {
        &self.product
    }

    pub fn ontology_hash(&self) -> &str {
        &self.ontology_hash
    }

    /// Incremented by every accepted submission.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn frontier(&self) -> &VecDeque<PendingForm> {
        &self.frontier
    }

    pub fn answers(&self) -> &[AnsweredForm] {
        &self.answers
    }

    pub fn annotations(&self) -> &Graph {
        &self.annotations
    }

    pub fn state(&self) -> SessionState {
        if self.frontier.is_empty() {
            SessionState::Complete
        } else {
            SessionState::InProgress
        }
    }

    /// Concepts on the expansion paths of all pending forms.
    pub fn visited(&self) -> BTreeSet<Iri> {
        self.frontier
            .iter()
            .flat_map(|p| p.path.iter().cloned())
            .collect()
    }

    pub fn progress(&self) -> Progress {
        Progress {
            answered: self.answers.len(),
            pending: self.frontier.len(),
            state: self.state(),
        }
    }

    fn check_ontology(&self, ontology: &Ontology) -> Result<(), SessionError> {
        if ontology.hash() == self.ontology_hash {
            Ok(())
        } else {
            Err(SessionError::OntologyMismatch {
                expected: self.ontology_hash.clone(),
                found: ontology.hash().to_string(),
            })
        }
    }

    fn next_form_id(&self) -> String {
        format!("form-{}", self.answers.len() + 1)
    }

    pub fn current_form(&self, ontology: &Ontology) -> Result<FormSchema, SessionError> {
        self.check_ontology(ontology)?;
        let head = self.frontier.front().ok_or(SessionError::SessionComplete)?;
        let graph = ontology.graph();
        let fields = form_fields(graph, &head.concept, head.parent.is_some())?
            .into_iter()
            .map(|(f, _)| f)
            .collect();
        let components = axiom::components_of(graph, &head.concept)?
            .into_iter()
            .map(|Restriction { property, filler }| ComponentChoice {
                label: axiom::label_of(graph, &filler),
                property,
                concept: filler,
            })
            .collect();
        Ok(FormSchema {
            form_id: self.next_form_id(),
            concept: head.concept.clone(),
            title: axiom::label_of(graph, &head.concept),
            fields,
            components,
        })
    }

    /// Validates and records one answer. On any error the session is left
    /// exactly as it was.
    pub fn submit_form(
        &mut self,
        ontology: &Ontology,
        answer: &FormAnswer,
    ) -> Result<(), SessionError> {
        self.check_ontology(ontology)?;
        let head = self
            .frontier
            .front()
            .ok_or(SessionError::SessionComplete)?
            .clone();
        let expected = self.next_form_id();
        if answer.form_id != expected {
            return Err(SessionError::StaleForm {
                expected,
                got: answer.form_id.clone(),
            });
        }
        let graph = ontology.graph();
        let fields = form_fields(graph, &head.concept, head.parent.is_some())?;
        let values = validate_answer(&fields, answer)?;

        let mut child_path = head.path.clone();
        child_path.push(head.concept.clone());
        let instance = format!("inst-{}", self.answers.len() + 1);
        let mut children = Vec::new();
        for restriction in axiom::components_of(graph, &head.concept)? {
            if let Some(start) = child_path.iter().position(|c| *c == restriction.filler) {
                let mut cycle = child_path[start..].to_vec();
                cycle.push(restriction.filler.clone());
                return Err(SessionError::CyclicDefinition(cycle));
            }
            children.push(PendingForm {
                parent: Some(instance.clone()),
                property: Some(restriction.property),
                concept: restriction.filler,
                path: child_path.clone(),
            });
        }

        let subject = Term::Iri(instance_iri(&self.id, &instance));
        let mut statements = vec![(
            subject.clone(),
            Term::vocab(vocab::RDF_TYPE),
            Term::Iri(head.concept.clone()),
        )];
        for (spec, property) in &fields {
            if let Some(value) = values.get(&spec.id) {
                let literal = match value.datatype {
                    Datatype::String => Literal::string(value.lexical.clone()),
                    other => Literal::typed(value.lexical.clone(), other.iri()),
                };
                statements.push((subject.clone(), Term::Iri(property.clone()), literal.into()));
            }
        }
        if let (Some(parent), Some(property)) = (&head.parent, &head.property) {
            statements.push((
                Term::Iri(instance_iri(&self.id, parent)),
                Term::Iri(property.clone()),
                subject.clone(),
            ));
        }

        // commit
        for (s, p, o) in statements {
            self.annotations
                .add(s, p, o)
                .expect("annotation statements are well-formed");
        }
        self.answers.push(AnsweredForm {
            instance,
            concept: head.concept.clone(),
            parent: head.parent.clone(),
            property: head.property.clone(),
            form_id: answer.form_id.clone(),
            values,
        });
        self.frontier.pop_front();
        self.frontier.extend(children);
        self.revision += 1;
        Ok(())
    }
}

fn validate_answer(
    fields: &[(FieldSpec, Iri)],
    answer: &FormAnswer,
) -> Result<BTreeMap<String, TypedValue>, SessionError> {
    let mut errors = Vec::new();
    let mut values = BTreeMap::new();
    let known: HashSet<&str> = fields.iter().map(|(f, _)| f.id.as_str()).collect();
    for field in answer.values.keys() {
        if !known.contains(field.as_str()) {
            errors.push(FieldError {
                field: field.clone(),
                message: "unknown field".into(),
            });
        }
    }
    for (spec, _) in fields {
        let raw = answer
            .values
            .get(&spec.id)
            .map(|v| v.trim())
            .filter(|v| !v.is_empty());
        match raw {
            None if spec.required => errors.push(FieldError {
                field: spec.id.clone(),
                message: "required".into(),
            }),
            None => {}
            Some(raw) => match spec.datatype.check(raw) {
                Ok(()) => {
                    let lexical = match (spec.datatype, raw) {
                        (Datatype::Boolean, "1") => "true".to_string(),
                        (Datatype::Boolean, "0") => "false".to_string(),
                        _ => raw.to_string(),
                    };
                    values.insert(
                        spec.id.clone(),
                        TypedValue {
                            lexical,
                            datatype: spec.datatype,
                        },
                    );
                }
                Err(message) => errors.push(FieldError {
                    field: spec.id.clone(),
                    message,
                }),
            },
        }
    }
    if errors.is_empty() {
        Ok(values)
    } else {
        Err(SessionError::ValidationFailed(errors))
    }
}

// ---------------------------------------------------------------------------
// Persistence

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionDocument {
    session_id: String,
    ontology_hash: String,
    product: Iri,
    revision: u64,
    frontier: Vec<PendingForm>,
    visited: Vec<Iri>,
    answers: Vec<AnsweredForm>,
    annotations_ttl: String,
}

pub fn save_session(session: &Session) -> String {
    let document = SessionDocument {
        session_id: session.id.clone(),
        ontology_hash: session.ontology_hash.clone(),
        product: session.product.clone(),
        revision: session.revision,
        frontier: session.frontier.iter().cloned().collect(),
        visited: session.visited().into_iter().collect(),
        answers: session.answers.clone(),
        annotations_ttl: turtle::serialize_turtle(&session.annotations),
    };
    serde_json::to_string_pretty(&document).expect("session document serializes")
}

pub fn load_session(document: &str, ontology: &Ontology) -> Result<Session, SessionError> {
    let corrupt = |msg: String| SessionError::CorruptSession(msg);
    let doc: SessionDocument =
        serde_json::from_str(document).map_err(|e| corrupt(e.to_string()))?;
    if doc.ontology_hash != ontology.hash() {
        return Err(SessionError::OntologyMismatch {
            expected: doc.ontology_hash,
            found: ontology.hash().to_string(),
        });
    }
    validate_session_id(&doc.session_id).map_err(|e| corrupt(e.to_string()))?;
    let annotations = turtle::parse_turtle(&doc.annotations_ttl)
        .map_err(|e| corrupt(format!("annotations: {e}")))?;
    for (i, answer) in doc.answers.iter().enumerate() {
        if answer.instance != format!("inst-{}", i + 1) {
            return Err(corrupt(format!(
                "answer {i} has instance {}",
                answer.instance
            )));
        }
    }
    if doc.revision != doc.answers.len() as u64 {
        return Err(corrupt(
            "revision does not match the number of answers".into(),
        ));
    }
    if doc.answers.is_empty() && doc.frontier.len() != 1 {
        return Err(corrupt(
            "fresh session must have exactly the product pending".into(),
        ));
    }
    let session = Session {
        id: doc.session_id,
        ontology_hash: doc.ontology_hash,
        product: doc.product,
        revision: doc.revision,
        frontier: doc.frontier.into(),
        answers: doc.answers,
        annotations,
    };
    if session.visited().into_iter().collect::<Vec<_>>() != doc.visited {
        return Err(corrupt(
            "visited set does not match the frontier paths".into(),
        ));
    }
    if !axiom::is_class(ontology.graph(), &session.product) {
        return Err(corrupt(format!(
            "product {} is not a class",
            session.product
        )));
    }
    Ok(session)
}

// ---------------------------------------------------------------------------
// Replay scripts

/// One scripted answer: the concept it is meant for (full IRI or local
/// name), an optional explicit form id, and the field values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub concept: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form_id: Option<String>,
    #[serde(default)]
    pub values: serde_json::Map<String, Value>,
}

impl ScriptEntry {
    pub fn matches(&self, concept: &Iri) -> bool {
        self.concept == concept.as_str() || self.concept == concept.local_name()
    }
}

impl ScriptEntry {
    /// Builds the answer for `form`, checking the entry targets its concept.
    pub fn to_answer(&self, index: usize, form: &FormSchema) -> Result<FormAnswer, SessionError> {
        if !self.matches(&form.concept) {
            return Err(SessionError::ScriptMismatch {
                index,
                entry: self.concept.clone(),
                concept: form.concept.clone(),
            });
        }
        let form_id = self.form_id.clone().unwrap_or_else(|| form.form_id.clone());
        FormAnswer::from_json(form_id, &self.values)
    }
}

pub fn parse_script(text: &str) -> Result<Vec<ScriptEntry>, serde_json::Error> {
    serde_json::from_str(text)
}

/// Feeds script entries to the session in frontier order. Stops at the end
/// of the script or when the session completes, returning the number of
/// entries applied.
pub fn replay(
    session: &mut Session,
    ontology: &Ontology,
    script: &[ScriptEntry],
) -> Result<usize, SessionError> {
    for (index, entry) in script.iter().enumerate() {
        if session.state() == SessionState::Complete {
            return Ok(index);
        }
        let form = session.current_form(ontology)?;
        let answer = entry.to_answer(index, &form)?;
        session.submit_form(ontology, &answer)?;
    }
    Ok(script.len())
}
