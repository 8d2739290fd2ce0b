pub mod axiom;
pub mod export;
pub mod graph;
pub mod merge;
pub mod ontology;
pub mod orchestrator;
pub mod thesaurus;
pub mod turtle;
pub mod vocab;
pub mod wire;
