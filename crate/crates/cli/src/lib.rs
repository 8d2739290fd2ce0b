//! Commands behind the `ontoform` binary. Each `cmd_*` writes its report to
//! `out` and returns a [`CliError`] carrying the exit code on failure.

use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ontoform_client::{ClientError, OntoformClient};
use ontoform_core::axiom::{self, AxiomError, Datatype};
use ontoform_core::export::{to_html, to_rdf};
use ontoform_core::graph::{Graph, Iri};
use ontoform_core::merge::{self, MergeError};
use ontoform_core::ontology::{resolve_class, short_name, Ontology, OntologyError};
use ontoform_core::orchestrator::{
    parse_script, save_session, FieldSpec, FormAnswer, FormSchema, ScriptEntry, Session,
    SessionError, SessionState,
};
use ontoform_core::thesaurus::{self, ConceptScheme, ThesaurusError};
use ontoform_core::turtle::{parse_turtle, serialize_turtle};
use ontoform_core::wire::{ExportFormat, NextStep, SubmitAnswer};
use ontoform_service::{ServeConfig, ServiceError};
use serde_json::{Map, Value};
use thiserror::Error;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

/// Namespace for relative ids in thesaurus CSV files.
pub const DEFAULT_CSV_BASE: &str = "http://example.org/reef/#";
/// Session id used by local wizard runs when none is given.
pub const DEFAULT_SESSION_ID: &str = "wizard";

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or unparsable input, unknown names, unreachable server.
    #[error("{0}")]
    Input(String),
    /// Well-formed input rejected by the engine: cycles, malformed axioms,
    /// failed validation, stale forms.
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Invalid(_) => EXIT_INVALID,
        }
    }
}

impl From<SessionError> for CliError {
    fn from(err: SessionError) -> Self {
        match err {
            SessionError::UnknownClass(_)
            | SessionError::NotAProduct(_)
            | SessionError::InvalidSessionId(_)
            | SessionError::CorruptSession(_) => CliError::Input(err.to_string()),
            _ => CliError::Invalid(err.to_string()),
        }
    }
}

impl From<OntologyError> for CliError {
    fn from(err: OntologyError) -> Self {
        match err {
            OntologyError::Axiom(AxiomError::UnknownClass(_)) | OntologyError::Parse(_) => {
                CliError::Input(err.to_string())
            }
            OntologyError::NoRoot | OntologyError::AmbiguousRoot(_) => {
                CliError::Input(format!("{err} (use --root)"))
            }
            OntologyError::Axiom(_) => CliError::Invalid(err.to_string()),
        }
    }
}

impl From<ClientError> for CliError {
    fn from(err: ClientError) -> Self {
        match &err {
            ClientError::Api(api) if matches!(api.status, 409 | 422) => {
                let mut message = format!("{}: {}", api.code, api.message);
                for d in api.details.iter().flatten() {
                    message.push_str(&format!("\n  {}: {}", d.field, d.message));
                }
                CliError::Invalid(message)
            }
            ClientError::Api(api) => CliError::Input(format!("{}: {}", api.code, api.message)),
            _ => CliError::Input(err.to_string()),
        }
    }
}

fn io_error(path: &Path, err: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {err}", path.display()))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn say(out: &mut dyn Write, line: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::Input(format!("stdout: {e}")))
}

fn parse_iri(value: &str) -> Result<Iri, String> {
    Iri::new(value).map_err(|e| e.to_string())
}

fn load_graph(path: &Path) -> Result<Graph, CliError> {
    parse_turtle(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Arguments

#[derive(Debug, Parser)]
#[command(name = "ontoform", version, about = "Ontology-driven form chaining")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a thesaurus (SKOS Turtle or id,label,broader_id CSV) into a class hierarchy
    Transform(TransformArgs),
    /// Intersect two ontologies by class label and report conflicts
    Merge(MergeArgs),
    /// Print the components of a defined class, one `property filler` per line
    Components(ComponentsArgs),
    /// Fill the chained forms of a product, interactively or from a script
    Wizard(WizardArgs),
    /// Run the HTTP service
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Drop subclass edges implied by other edges
    #[arg(long)]
    pub reduce: bool,
    /// Namespace for relative CSV ids
    #[arg(long, default_value = DEFAULT_CSV_BASE)]
    pub base: String,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Conflict report (JSON); printed to stdout when omitted
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComponentsArgs {
    #[arg(long, env = "ONTOFORM_ONTOLOGY")]
    pub ontology: PathBuf,
    /// Full IRI or unique local name
    pub class: String,
}

#[derive(Debug, Args)]
pub struct WizardArgs {
    #[arg(long, env = "ONTOFORM_ONTOLOGY", required_unless_present = "server")]
    pub ontology: Option<PathBuf>,
    /// Product class, full IRI or local name
    #[arg(long)]
    pub product: String,
    /// Output path; `.ttl`, `.html` and (locally) `.json` files are written next to it
    #[arg(long)]
    pub out: PathBuf,
    /// Replay script `[{"concept": ..., "values": {...}}]` instead of prompting
    #[arg(long)]
    pub answers: Option<PathBuf>,
    #[arg(long)]
    pub session_id: Option<String>,
    /// Product root class, when the ontology declares none
    #[arg(long, value_parser = parse_iri)]
    pub root: Option<Iri>,
    /// Drive a running service instead of the local engine
    #[arg(long, env = "ONTOFORM_SERVER")]
    pub server: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "ONTOFORM_ONTOLOGY")]
    pub ontology: PathBuf,
    #[arg(long, env = "ONTOFORM_BIND", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Directory for session documents; sessions live in memory only without it
    #[arg(long, env = "ONTOFORM_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, env = "ONTOFORM_ROOT", value_parser = parse_iri)]
    pub root: Option<Iri>,
}

/// Runs one command and reports failures on `err`. Returns the exit code.
pub fn run(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Transform(args) => cmd_transform(&args, out),
        Command::Merge(args) => cmd_merge(&args, out),
        Command::Components(args) => cmd_components(&args, out),
        Command::Wizard(args) => cmd_wizard(&args, input, out),
        Command::Serve(args) => cmd_serve(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

// ---------------------------------------------------------------------------
// transform

pub fn cmd_transform(args: &TransformArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let text = read(&args.input)?;
    let is_csv = args
        .input
        .extension()
        .is_some_and(|x| x.eq_ignore_ascii_case("csv"));
    let scheme = if is_csv {
        ConceptScheme::from_csv(text.as_bytes(), &args.base)
    } else {
        let graph = parse_turtle(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
        ConceptScheme::from_graph(&graph)
    }
    .map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;

    let cycle = |e: ThesaurusError| match e {
        ThesaurusError::CyclicHierarchy(_) => CliError::Invalid(e.to_string()),
        other => CliError::Input(other.to_string()),
    };
    let mut hierarchy = thesaurus::extract_hierarchy(&scheme).map_err(cycle)?;
    let extracted = hierarchy.edges.len();
    if args.reduce {
        hierarchy = thesaurus::transitive_reduction(&hierarchy).map_err(cycle)?;
    }
    write(
        &args.output,
        &serialize_turtle(&thesaurus::hierarchy_to_graph(&hierarchy)),
    )?;
    say(out, format!("classes: {}", hierarchy.classes.len()))?;
    say(out, format!("edges: {}", hierarchy.edges.len()))?;
    if args.reduce {
        say(
            out,
            format!("redundant: {}", extracted - hierarchy.edges.len()),
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// merge

pub fn cmd_merge(args: &MergeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let left = load_graph(&args.left)?;
    let right = load_graph(&args.right)?;
    let (merged, report) = merge::merge(&left, &right).map_err(|e| match e {
        MergeError::CyclicHierarchy(_) | MergeError::Axiom(_) => CliError::Invalid(e.to_string()),
    })?;
    write(&args.output, &serialize_turtle(&merged))?;
    match &args.report {
        Some(path) => write(path, &(report.to_json() + "\n"))?,
        None => say(out, report.to_json())?,
    }
    say(
        out,
        format!("classes: {}", axiom::named_classes(&merged).len()),
    )?;
    say(
        out,
        format!("name conflicts: {}", report.name_conflicts.len()),
    )?;
    say(
        out,
        format!("redundancies: {}", report.hierarchy_redundancies.len()),
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// components

pub fn cmd_components(args: &ComponentsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let graph = load_graph(&args.ontology)?;
    let class = resolve_class(&graph, &args.class)
        .ok_or_else(|| CliError::Input(format!("unknown class {}", args.class)))?;
    let components = axiom::components_of(&graph, &class).map_err(|e| match e {
        AxiomError::UnknownClass(_) => CliError::Input(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    })?;
    for r in components {
        say(
            out,
            format!(
                "{} {}",
                short_name(&graph, &r.property),
                short_name(&graph, &r.filler)
            ),
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// wizard

/// The `.ttl`, `.html` and `.json` paths for `--out`.
pub fn output_paths(out: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let stem = match out.extension().and_then(|x| x.to_str()) {
        Some("ttl" | "html" | "json") => out.with_extension(""),
        _ => out.to_path_buf(),
    };
    let with = |ext: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    (with("ttl"), with("html"), with("json"))
}

/// Either the local orchestrator or a remote session.
trait Engine {
    fn next(&mut self) -> Result<Option<FormSchema>, CliError>;
    /// `Ok(Some(errors))` when the values were rejected field by field.
    fn submit(
        &mut self,
        form_id: &str,
        values: &Map<String, Value>,
    ) -> Result<Option<Vec<String>>, CliError>;
    fn answered(&self) -> usize;
}

struct Local<'o> {
    ontology: &'o Ontology,
    session: Session,
}

impl Engine for Local<'_> {
    fn next(&mut self) -> Result<Option<FormSchema>, CliError> {
        match self.session.state() {
            SessionState::Complete => Ok(None),
            SessionState::InProgress => Ok(Some(self.session.current_form(self.ontology)?)),
        }
    }

    fn submit(
        &mut self,
        form_id: &str,
        values: &Map<String, Value>,
    ) -> Result<Option<Vec<String>>, CliError> {
        let answer = FormAnswer::from_json(form_id, values)
            .and_then(|a| self.session.submit_form(self.ontology, &a));
        match answer {
            Ok(()) => Ok(None),
            Err(SessionError::ValidationFailed(errors)) => Ok(Some(
                errors
                    .into_iter()
                    .map(|e| format!("{}: {}", e.field, e.message))
                    .collect(),
            )),
            Err(e) => Err(e.into()),
        }
    }

    fn answered(&self) -> usize {
        self.session.answers().len()
    }
}

struct Remote {
    runtime: tokio::runtime::Runtime,
    client: OntoformClient,
    id: String,
    revision: u64,
    answered: usize,
}

impl Remote {
    fn start(server: &str, product: &str, session_id: Option<&str>) -> Result<Self, CliError> {
        let runtime = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .map_err(|e| CliError::Input(format!("runtime: {e}")))?;
        let client = OntoformClient::new(server);
        let created = runtime.block_on(client.create_session(product, session_id))?;
        Ok(Remote {
            runtime,
            client,
            id: created.session_id,
            revision: created.revision,
            answered: 0,
        })
    }

    fn export(&self, format: ExportFormat) -> Result<String, CliError> {
        Ok(self
            .runtime
            .block_on(self.client.export(&self.id, format))?)
    }
}

impl Engine for Remote {
    fn next(&mut self) -> Result<Option<FormSchema>, CliError> {
        match self.runtime.block_on(self.client.form(&self.id))? {
            NextStep::Form(form) => Ok(Some(form)),
            NextStep::Done { .. } => Ok(None),
        }
    }

    fn submit(
        &mut self,
        form_id: &str,
        values: &Map<String, Value>,
    ) -> Result<Option<Vec<String>>, CliError> {
        let body = SubmitAnswer {
            revision: self.revision,
            form_id: form_id.to_string(),
            values: values.clone(),
        };
        match self.runtime.block_on(self.client.submit(&self.id, &body)) {
            Ok(done) => {
                self.revision = done.revision;
                self.answered += 1;
                Ok(None)
            }
            Err(ClientError::Api(api)) if api.status == 422 && api.details.is_some() => Ok(Some(
                api.details
                    .into_iter()
                    .flatten()
                    .map(|e| format!("{}: {}", e.field, e.message))
                    .collect(),
            )),
            Err(e) => Err(e.into()),
        }
    }

    fn answered(&self) -> usize {
        self.answered
    }
}

fn drive_script(engine: &mut dyn Engine, script: &[ScriptEntry]) -> Result<(), CliError> {
    for (index, entry) in script.iter().enumerate() {
        let Some(form) = engine.next()? else {
            break;
        };
        if !entry.matches(&form.concept) {
            return Err(SessionError::ScriptMismatch {
                index,
                entry: entry.concept.clone(),
                concept: form.concept,
            }
            .into());
        }
        let form_id = entry.form_id.as_deref().unwrap_or(&form.form_id);
        if let Some(errors) = engine.submit(form_id, &entry.values)? {
            return Err(CliError::Invalid(format!(
                "script entry {index} ({}) rejected:\n  {}",
                entry.concept,
                errors.join("\n  ")
            )));
        }
    }
    match engine.next()? {
        None => Ok(()),
        Some(form) => Err(CliError::Invalid(format!(
            "script ended before the session was complete; next form is {} ({})",
            form.form_id, form.concept
        ))),
    }
}

fn prompt_line(
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    label: &str,
) -> Result<String, CliError> {
    write!(out, "{label}: ")
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Input(format!("stdout: {e}")))?;
    let mut line = String::new();
    let n = input
        .read_line(&mut line)
        .map_err(|e| CliError::Input(format!("stdin: {e}")))?;
    if n == 0 {
        return Err(CliError::Input(
            "input ended before the session was complete".into(),
        ));
    }
    Ok(line.trim().to_string())
}

fn field_prompt(field: &FieldSpec) -> String {
    let hint = match field.datatype {
        Datatype::String => "",
        Datatype::Decimal => " (decimal)",
        Datatype::Integer => " (integer)",
        Datatype::Boolean => " (oui/non)",
        Datatype::Date => " (AAAA-MM-JJ)",
    };
    let required = if field.required { " *" } else { "" };
    format!("  {}{hint}{required}", field.label)
}

fn boolean_answer(raw: &str) -> String {
    match raw.to_lowercase().as_str() {
        "o" | "oui" | "y" | "yes" | "vrai" => "true".into(),
        "n" | "non" | "no" | "faux" => "false".into(),
        _ => raw.to_string(),
    }
}

fn drive_prompts(
    engine: &mut dyn Engine,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    while let Some(form) = engine.next()? {
        say(out, "")?;
        say(
            out,
            format!(
                "[{}] {} ({})",
                engine.answered() + 1,
                form.title,
                form.form_id
            ),
        )?;
        if !form.components.is_empty() {
            let next: Vec<&str> = form.components.iter().map(|c| c.label.as_str()).collect();
            say(out, format!("  next: {}", next.join(", ")))?;
        }
        loop {
            let mut values = Map::new();
            for field in &form.fields {
                let raw = prompt_line(input, out, &field_prompt(field))?;
                if raw.is_empty() {
                    continue;
                }
                let raw = match field.datatype {
                    Datatype::Boolean => boolean_answer(&raw),
                    _ => raw,
                };
                values.insert(field.id.clone(), Value::String(raw));
            }
            match engine.submit(&form.form_id, &values)? {
                None => break,
                Some(errors) => {
                    for e in errors {
                        say(out, format!("  ! {e}"))?;
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn cmd_wizard(
    args: &WizardArgs,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let script = match &args.answers {
        Some(path) => Some(
            parse_script(&read(path)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let (ttl_path, html_path, json_path) = output_paths(&args.out);

    let drive =
        |engine: &mut dyn Engine, input: &mut dyn BufRead, out: &mut dyn Write| match &script {
            Some(script) => drive_script(engine, script),
            None => drive_prompts(engine, input, out),
        };

    let answered = if let Some(server) = &args.server {
        let mut remote = Remote::start(server, &args.product, args.session_id.as_deref())?;
        drive(&mut remote, input, out)?;
        write(&ttl_path, &remote.export(ExportFormat::Ttl)?)?;
        write(&html_path, &remote.export(ExportFormat::Html)?)?;
        say(out, format!("session: {}", remote.id))?;
        remote.answered
    } else {
        let path = args
            .ontology
            .as_deref()
            .ok_or_else(|| CliError::Input("--ontology is required without --server".into()))?;
        let ontology = Ontology::from_turtle(&read(path)?, args.root.clone())?;
        let product = ontology
            .resolve_class(&args.product)
            .ok_or_else(|| CliError::Input(format!("unknown class {}", args.product)))?;
        let id = args.session_id.as_deref().unwrap_or(DEFAULT_SESSION_ID);
        let mut local = Local {
            ontology: &ontology,
            session: Session::start(&ontology, &product, id)?,
        };
        drive(&mut local, input, out)?;
        write(&ttl_path, &to_rdf(&local.session))?;
        write(&html_path, &to_html(&local.session, &ontology))?;
        write(&json_path, &save_session(&local.session))?;
        local.answered()
    };
    say(out, format!("complete: {answered} forms"))?;
    say(out, format!("wrote {}", ttl_path.display()))?;
    say(out, format!("wrote {}", html_path.display()))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// serve

pub fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let config = ServeConfig {
        ontology: args.ontology.clone(),
        root: args.root.clone(),
        bind: args.bind,
        data_dir: args.data_dir.clone(),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Input(format!("runtime: {e}")))?;
    runtime
        .block_on(ontoform_service::serve(config))
        .map_err(|e| match e {
            ServiceError::Ontology(err) => CliError::from(err),
            other => CliError::Input(other.to_string()),
        })
}
