//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails. Expected values come from the fixtures or from
//! oracles written here, never from the engine under test.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ontoform_cli::{
    cmd_components, cmd_transform, cmd_wizard, ComponentsArgs, TransformArgs, WizardArgs,
};
use ontoform_client::OntoformClient;
use ontoform_core::export::{answers_from_rdf, to_rdf};
use ontoform_core::graph::{Graph, Iri, Term};
use ontoform_core::merge;
use ontoform_core::ontology::Ontology;
use ontoform_core::orchestrator::{
    load_session, parse_script, replay, save_session, Session, SessionState,
};
use ontoform_core::thesaurus::{self, Hierarchy, Label};
use ontoform_core::turtle::{canonicalize, equal_modulo_blanks, parse_turtle, serialize_turtle};
use ontoform_core::wire::{ExportFormat, NextStep, SubmitAnswer};
use ontoform_service::{serve_on, AppState};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Map, Value};

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const GEN: &str = "http://gen.example/acc#";

// pinned workload sizes and wall-clock limits
const DAGS: u64 = 500;
const DAG_NODES: usize = 12;
const MERGE_PAIRS: u64 = 200;
const WIZARD_RUNS: u64 = 100;
const MAX_DEFINED: usize = 15;
const MAX_RESTRICTIONS: usize = 5;
const PARITY_ONTOLOGIES: u64 = 5;

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

fn iri(s: &str) -> Iri {
    Iri::new(s).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: components of the fixture product

fn components_of_fixture_product() -> Result<String, String> {
    let mut out = Vec::new();
    cmd_components(
        &ComponentsArgs {
            ontology: fixture_path("pv-ontology.ttl"),
            class: "VerrePolymere".into(),
        },
        &mut out,
    )
    .map_err(|e| e.to_string())?;
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<(&str, &str)> = text
        .lines()
        .map(|l| l.split_once(' ').unwrap_or((l, "")))
        .collect();
    let fillers: Vec<&str> = lines.iter().map(|(_, f)| *f).collect();
    let expected = [
        "CableElectrique",
        "Cadre",
        "CellulePhotoV",
        "FilmPolymere",
        "VerreInterieur",
    ];
    ensure(fillers == expected, || format!("got {fillers:?}"))?;
    ensure(lines.iter().all(|(p, _)| *p == "hasComponent"), || {
        format!("unexpected property in {text:?}")
    })?;
    Ok(format!("{} components in definition order", fillers.len()))
}

// ---------------------------------------------------------------------------
// Criterion 2: transitive reduction

fn node(i: usize) -> Iri {
    iri(&format!("{GEN}n{i}"))
}

fn hierarchy(nodes: usize, edges: &[(usize, usize)]) -> Hierarchy {
    Hierarchy {
        classes: (0..nodes)
            .map(|i| {
                (
                    node(i),
                    Label {
                        text: format!("n{i}"),
                        language: None,
                    },
                )
            })
            .collect(),
        edges: edges.iter().map(|(a, b)| (node(*a), node(*b))).collect(),
    }
}

/// Reachability by Floyd-Warshall closure; an edge is redundant when some
/// third node sits on a path between its ends.
fn oracle_reduction(nodes: usize, edges: &BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    let mut reach = vec![vec![false; nodes]; nodes];
    for (a, b) in edges {
        reach[*a][*b] = true;
    }
    for k in 0..nodes {
        for i in 0..nodes {
            for j in 0..nodes {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    edges
        .iter()
        .filter(|(a, b)| !(0..nodes).any(|w| w != *a && w != *b && reach[*a][w] && reach[w][*b]))
        .copied()
        .collect()
}

fn reduction_matches_oracle() -> Result<String, String> {
    // A=0, B=1, C=2
    let reduced = thesaurus::transitive_reduction(&hierarchy(3, &[(0, 1), (1, 2), (0, 2)]))
        .map_err(|e| e.to_string())?;
    let expected: BTreeSet<(Iri, Iri)> = [(node(0), node(1)), (node(1), node(2))].into();
    ensure(reduced.edges == expected, || {
        format!("three-node case gave {:?}", reduced.edges)
    })?;

    let dir = tempfile::tempdir().unwrap();
    let mut out = Vec::new();
    cmd_transform(
        &TransformArgs {
            input: fixture_path("redundant.csv"),
            output: dir.path().join("r.ttl"),
            reduce: true,
            base: ontoform_cli::DEFAULT_CSV_BASE.into(),
        },
        &mut out,
    )
    .map_err(|e| e.to_string())?;
    let report = String::from_utf8(out).unwrap();
    ensure(report.contains("edges: 2\n"), || {
        format!("transform reported {report:?}")
    })?;

    let mut total_edges = 0;
    for seed in 0..DAGS {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = rng.random_range(1..=DAG_NODES);
        // a hidden topological order, so edge direction is not tied to ids
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let density = rng.random_range(0.05..0.7);
        let mut edges = BTreeSet::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(density) {
                    edges.insert((order[i], order[j]));
                }
            }
        }
        total_edges += edges.len();
        let list: Vec<(usize, usize)> = edges.iter().copied().collect();
        let got = thesaurus::transitive_reduction(&hierarchy(n, &list))
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let want: BTreeSet<(Iri, Iri)> = oracle_reduction(n, &edges)
            .into_iter()
            .map(|(a, b)| (node(a), node(b)))
            .collect();
        ensure(got.edges == want, || {
            format!("seed {seed}: got {:?}, want {want:?}", got.edges)
        })?;
    }
    Ok(format!(
        "3-node case and {DAGS} random DAGs ({total_edges} edges) match"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 3: label intersection merge

/// Each row is one concept written several ways; rows never collide after
/// normalization.
const ROWS: &[&[&str]] = &[
    &["cadre", "Cadre", "CADRE"],
    &["câble électrique", "Cable electrique", "CÂBLE ÉLECTRIQUE"],
    &["étanchéité", "Etancheite"],
    &["verre intérieur", "Verre Interieur"],
    &["film polymère", "FILM POLYMERE"],
    &["diode", "Diode"],
    &["connecteur", "CONNECTEUR"],
    &["onduleur", "Onduleur"],
    &["boîte de jonction", "Boite de jonction"],
    &["cellule", "Cellule", "CELLULE"],
];

struct Side {
    graph: Graph,
    row: BTreeMap<Iri, usize>,
}

fn random_side(rng: &mut StdRng, ns: &str) -> Side {
    let n = rng.random_range(0..=10);
    let mut text = format!("@prefix x: <{ns}> .\n");
    let mut row = BTreeMap::new();
    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..ROWS.len())).collect();
    for (i, r) in rows.iter().enumerate() {
        let label = ROWS[*r][rng.random_range(0..ROWS[*r].len())];
        writeln!(text, "x:k{i} a owl:Class ; rdfs:label \"{label}\" .").unwrap();
        row.insert(iri(&format!("{ns}k{i}")), *r);
    }
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in rows.iter().enumerate() {
            if a < b && rng.random_bool(0.2) {
                writeln!(text, "x:k{i} rdfs:subClassOf x:k{j} .").unwrap();
            }
        }
    }
    Side {
        graph: parse_turtle(&text).unwrap(),
        row,
    }
}

fn counts(side: &Side) -> BTreeMap<usize, usize> {
    let mut c = BTreeMap::new();
    for r in side.row.values() {
        *c.entry(*r).or_insert(0) += 1;
    }
    c
}

fn merge_is_label_intersection() -> Result<String, String> {
    let mut conflicts_seen = 0;
    for seed in 0..MERGE_PAIRS {
        let mut rng = StdRng::seed_from_u64(seed);
        let left = random_side(&mut rng, "http://left.example/#");
        let right = random_side(&mut rng, "http://right.example/#");
        let (merged, report) =
            merge::merge(&left.graph, &right.graph).map_err(|e| format!("seed {seed}: {e}"))?;
        let (lc, rc) = (counts(&left), counts(&right));

        // multiset of merged classes, by concept row
        let mut got: Vec<usize> = merged
            .subjects(
                &Term::Iri(iri(RDF_TYPE)),
                &Term::Iri(iri("http://www.w3.org/2002/07/owl#Class")),
            )
            .filter_map(|s| s.as_iri().and_then(|c| right.row.get(c)).copied())
            .collect();
        got.sort();
        let want: Vec<usize> = lc
            .iter()
            .filter(|(r, n)| **n == 1 && rc.get(*r) == Some(&1))
            .map(|(r, _)| *r)
            .collect();
        ensure(got == want, || {
            format!("seed {seed}: merged rows {got:?}, want {want:?}")
        })?;

        let duplicated: BTreeSet<usize> = lc
            .iter()
            .chain(rc.iter())
            .filter(|(_, n)| **n > 1)
            .map(|(r, _)| *r)
            .collect();
        let reported: BTreeSet<usize> = report
            .name_conflicts
            .iter()
            .flat_map(|c| c.left.iter().chain(c.right.iter()))
            .map(|c| left.row.get(c).or(right.row.get(c)).copied().unwrap())
            .collect();
        ensure(reported == duplicated, || {
            format!("seed {seed}: conflicts {reported:?}, duplicates {duplicated:?}")
        })?;
        conflicts_seen += reported.len();
    }
    Ok(format!(
        "{MERGE_PAIRS} pairs, {conflicts_seen} duplicated labels reported"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 4: chaining completeness

struct Generated {
    turtle: String,
    /// class -> ordered (property local name, filler)
    definitions: BTreeMap<usize, Vec<(&'static str, usize)>>,
    /// class -> (property local name, xsd type)
    properties: BTreeMap<usize, Vec<(String, &'static str)>>,
    products: Vec<usize>,
}

fn generate(seed: u64) -> Generated {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(1..=MAX_DEFINED);
    let mut t = String::new();
    writeln!(t, "@prefix g: <{GEN}> .").unwrap();
    writeln!(t, "@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .").unwrap();
    writeln!(t, "@prefix of: <urn:ontoform:vocab#> .").unwrap();
    writeln!(t, "<{GEN}> of:productRoot g:Top .").unwrap();
    writeln!(t, "g:Top a owl:Class ; rdfs:label \"top\" .").unwrap();
    writeln!(t, "g:made a owl:ObjectProperty .").unwrap();
    writeln!(t, "g:holds a owl:ObjectProperty .").unwrap();
    let mut definitions = BTreeMap::new();
    let mut properties: BTreeMap<usize, Vec<(String, &'static str)>> = BTreeMap::new();
    let mut products = Vec::new();
    for i in 0..n {
        write!(t, "g:C{i} a owl:Class ; rdfs:label \"classe {i}\"").unwrap();
        if i == 0 || rng.random_bool(0.25) {
            write!(t, " ; rdfs:subClassOf g:Top").unwrap();
            products.push(i);
        }
        if i + 1 < n && rng.random_bool(0.7) {
            let k = rng.random_range(1..=MAX_RESTRICTIONS);
            let pairs: Vec<(&'static str, usize)> = (0..k)
                .map(|_| {
                    let p = if rng.random_bool(0.7) {
                        "made"
                    } else {
                        "holds"
                    };
                    (p, rng.random_range(i + 1..n))
                })
                .collect();
            write!(t, " ;\n  rdfs:subClassOf [ owl:intersectionOf (").unwrap();
            for (p, f) in &pairs {
                write!(
                    t,
                    " [ a owl:Restriction ; owl:onProperty g:{p} ; owl:someValuesFrom g:C{f} ]"
                )
                .unwrap();
            }
            write!(t, " ) ]").unwrap();
            definitions.insert(i, pairs);
        }
        writeln!(t, " .").unwrap();
        for k in 0..rng.random_range(0..3usize) {
            let ty = ["string", "decimal", "integer", "boolean", "date"][rng.random_range(0..5)];
            let name = format!("f{i}x{k}");
            writeln!(t, "g:{name} a owl:DatatypeProperty ; rdfs:label \"{name}\" ; rdfs:domain g:C{i} ; rdfs:range xsd:{ty} .").unwrap();
            properties.entry(i).or_default().push((name, ty));
        }
    }
    Generated {
        turtle: t,
        definitions,
        properties,
        products,
    }
}

impl Generated {
    fn tree_size(&self, c: usize) -> usize {
        1 + self
            .definitions
            .get(&c)
            .map_or(0, |d| d.iter().map(|(_, f)| self.tree_size(*f)).sum())
    }

    /// Concepts in the order a breadth-first expansion asks for them.
    fn bfs(&self, product: usize) -> Vec<usize> {
        let mut queue = VecDeque::from([product]);
        let mut order = Vec::new();
        while let Some(c) = queue.pop_front() {
            order.push(c);
            for (_, f) in self.definitions.get(&c).into_iter().flatten() {
                queue.push_back(*f);
            }
        }
        order
    }

    fn value(rng: &mut StdRng, ty: &str) -> Value {
        match ty {
            "string" => json!(format!("texte {}", rng.random_range(0..100))),
            "decimal" => json!(format!(
                "{}.{}",
                rng.random_range(0..900),
                rng.random_range(0..10)
            )),
            "integer" => json!(rng.random_range(-5..500)),
            "boolean" => json!(rng.random_bool(0.5)),
            _ => json!(format!(
                "2011-{:02}-{:02}",
                rng.random_range(1..13),
                rng.random_range(1..29)
            )),
        }
    }

    /// Replay script for a breadth-first walk from `product`.
    fn script(&self, product: usize, seed: u64) -> String {
        let mut rng = StdRng::seed_from_u64(seed);
        let entries: Vec<Value> = self
            .bfs(product)
            .iter()
            .enumerate()
            .map(|(step, c)| {
                let mut values = Map::new();
                values.insert("designation".into(), json!(format!("piece {step}")));
                for (name, ty) in self.properties.get(c).into_iter().flatten() {
                    if rng.random_bool(0.6) {
                        values.insert(name.clone(), Self::value(&mut rng, ty));
                    }
                }
                if step > 0 && rng.random_bool(0.3) {
                    values.insert("quantite".into(), json!(rng.random_range(1..10)));
                }
                json!({ "concept": format!("C{c}"), "values": values })
            })
            .collect();
        serde_json::to_string_pretty(&entries).unwrap()
    }
}

fn class_of(graph: &Graph, instance: &Term) -> Option<usize> {
    graph
        .objects(instance, &Term::Iri(iri(RDF_TYPE)))
        .find_map(|t| {
            t.as_iri()?
                .as_str()
                .strip_prefix(GEN)?
                .strip_prefix('C')?
                .parse()
                .ok()
        })
}

/// Every instance of a defined class links, per restriction occurrence, to
/// a distinct child of the filler class through the restriction's property.
fn completeness(graph: &Graph, gen: &Generated) -> Result<usize, String> {
    let typed: Vec<Term> = graph
        .triples_matching(None, Some(&Term::Iri(iri(RDF_TYPE))), None)
        .map(|t| t.subject().clone())
        .collect();
    for instance in &typed {
        let class = class_of(graph, instance).ok_or_else(|| format!("{instance} has no class"))?;
        let mut need: BTreeMap<(&str, usize), usize> = BTreeMap::new();
        for (p, f) in gen.definitions.get(&class).into_iter().flatten() {
            *need.entry((*p, *f)).or_insert(0) += 1;
        }
        for ((p, f), n) in need {
            let have = graph
                .objects(instance, &Term::Iri(iri(&format!("{GEN}{p}"))))
                .filter(|child| class_of(graph, child) == Some(f))
                .count();
            ensure(have >= n, || {
                format!("{instance} (C{class}) has {have} {p}-links to C{f}, needs {n}")
            })?;
        }
    }
    Ok(typed.len())
}

fn wizard_args(ontology: &Path, product: &str, out: &Path, answers: &Path, id: &str) -> WizardArgs {
    WizardArgs {
        ontology: Some(ontology.to_path_buf()),
        product: product.into(),
        out: out.to_path_buf(),
        answers: Some(answers.to_path_buf()),
        session_id: Some(id.into()),
        root: None,
        server: None,
    }
}

fn forms_reported(out: &[u8]) -> Option<usize> {
    String::from_utf8_lossy(out).lines().find_map(|l| {
        l.strip_prefix("complete: ")?
            .strip_suffix(" forms")?
            .parse()
            .ok()
    })
}

fn chaining_is_complete() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let mut steps = 0;
    for seed in 0..WIZARD_RUNS {
        let gen = generate(seed);
        let product = gen.products[(seed as usize) % gen.products.len()];
        let onto = dir.path().join(format!("o{seed}.ttl"));
        let answers = dir.path().join(format!("a{seed}.json"));
        let out = dir.path().join(format!("run{seed}"));
        std::fs::write(&onto, &gen.turtle).unwrap();
        std::fs::write(&answers, gen.script(product, seed)).unwrap();

        let mut log = Vec::new();
        cmd_wizard(
            &wizard_args(&onto, &format!("C{product}"), &out, &answers, "acc"),
            &mut std::io::empty(),
            &mut log,
        )
        .map_err(|e| format!("seed {seed}: {e}"))?;
        let size = gen.tree_size(product);
        let forms = forms_reported(&log);
        ensure(forms == Some(size), || {
            format!("seed {seed}: {forms:?} forms, expansion tree has {size}")
        })?;
        let ttl = std::fs::read_to_string(out.with_extension("ttl")).unwrap();
        let graph = parse_turtle(&ttl).map_err(|e| format!("seed {seed}: {e}"))?;
        let instances = completeness(&graph, &gen).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(instances == size, || {
            format!("seed {seed}: {instances} instances, want {size}")
        })?;
        steps += size;
    }
    Ok(format!(
        "{WIZARD_RUNS} runs complete after exactly tree-size steps ({steps} forms)"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 5: round trips

fn round_trips() -> Result<String, String> {
    let names = ["pv-ontology.ttl", "reef-sample.ttl", "merged-golden.ttl"];
    for name in names {
        let g = parse_turtle(&fixture(name)).map_err(|e| format!("{name}: {e}"))?;
        let again = parse_turtle(&serialize_turtle(&g)).map_err(|e| format!("{name}: {e}"))?;
        ensure(equal_modulo_blanks(&g, &again), || {
            format!("{name}: graph changed")
        })?;
        let once = serialize_turtle(&canonicalize(&again));
        let twice = serialize_turtle(&canonicalize(&parse_turtle(&once).unwrap()));
        ensure(once == twice, || format!("{name}: no fixpoint"))?;
    }

    let script = parse_script(&fixture("fixture-answers.json")).unwrap();
    let mut ontologies = vec![(
        Ontology::from_turtle(&fixture("pv-ontology.ttl"), None).unwrap(),
        iri("http://example.org/ontodt#VerrePolymere"),
        script,
    )];
    for seed in 0..20 {
        let gen = generate(1000 + seed);
        let product = gen.products[0];
        let script = parse_script(&gen.script(product, seed)).unwrap();
        ontologies.push((
            Ontology::from_turtle(&gen.turtle, None).unwrap(),
            iri(&format!("{GEN}C{product}")),
            script,
        ));
    }
    let mut checked = 0;
    for (ontology, product, script) in &ontologies {
        for cut in 0..=script.len() {
            let mut s = Session::start(ontology, product, "rt").unwrap();
            replay(&mut s, ontology, &script[..cut]).map_err(|e| e.to_string())?;
            let loaded = load_session(&save_session(&s), ontology).map_err(|e| e.to_string())?;
            ensure(loaded == s, || {
                format!("session at step {cut} changed on reload")
            })?;

            let back = answers_from_rdf(&parse_turtle(&to_rdf(&s)).unwrap(), ontology, "rt");
            ensure(back.len() == s.answers().len(), || {
                format!("{} of {} answers recovered", back.len(), s.answers().len())
            })?;
            for (r, a) in back.iter().zip(s.answers()) {
                ensure(
                    (&r.instance, &r.concept, &r.parent, &r.property, &r.values)
                        == (&a.instance, &a.concept, &a.parent, &a.property, &a.values),
                    || format!("answer {} differs after reload", a.instance),
                )?;
            }
            checked += 1;
        }
        ensure(
            {
                let mut s = Session::start(ontology, product, "rt").unwrap();
                replay(&mut s, ontology, script).unwrap();
                s.state() == SessionState::Complete
            },
            || "script does not complete".into(),
        )?;
    }
    Ok(format!(
        "{} fixtures at fixpoint, {checked} sessions reloaded",
        names.len()
    ))
}

// ---------------------------------------------------------------------------
// Criterion 6: CLI/HTTP parity

async fn drive_http(
    base: &str,
    product: &str,
    id: &str,
    script: &[Value],
) -> Result<String, String> {
    let client = OntoformClient::new(base);
    let created = client
        .create_session(product, Some(id))
        .await
        .map_err(|e| e.to_string())?;
    let mut revision = created.revision;
    for entry in script {
        let NextStep::Form(form) = client.form(id).await.map_err(|e| e.to_string())? else {
            return Err("session ended before the script".into());
        };
        let done = client
            .submit(
                id,
                &SubmitAnswer {
                    revision,
                    form_id: form.form_id,
                    values: entry["values"].as_object().cloned().unwrap_or_default(),
                },
            )
            .await
            .map_err(|e| e.to_string())?;
        revision = done.revision;
    }
    client
        .export(id, ExportFormat::Ttl)
        .await
        .map_err(|e| e.to_string())
}

fn cli_http_parity() -> Result<String, String> {
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut cases = vec![(
        fixture_path("pv-ontology.ttl"),
        "VerrePolymere".to_string(),
        fixture_path("fixture-answers.json"),
    )];
    for seed in 0..PARITY_ONTOLOGIES {
        let gen = generate(2000 + seed);
        let product = *gen.products.last().unwrap();
        let onto = dir.path().join(format!("p{seed}.ttl"));
        let answers = dir.path().join(format!("p{seed}.json"));
        std::fs::write(&onto, &gen.turtle).unwrap();
        std::fs::write(&answers, gen.script(product, seed)).unwrap();
        cases.push((onto, format!("C{product}"), answers));
    }

    let mut bytes = 0;
    for (i, (onto, product, answers)) in cases.iter().enumerate() {
        // each driver gets its own service, as they reuse one session id
        let spawn = |data: Option<PathBuf>| {
            let text = std::fs::read_to_string(onto).unwrap();
            let state = AppState::new(Ontology::from_turtle(&text, None).unwrap(), data).unwrap();
            let listener = runtime
                .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
                .unwrap();
            let base = format!("http://{}", listener.local_addr().unwrap());
            runtime.spawn(serve_on(listener, state, std::future::pending()));
            base
        };

        let local = dir.path().join(format!("local{i}"));
        cmd_wizard(
            &wizard_args(onto, product, &local, answers, "parity"),
            &mut std::io::empty(),
            &mut Vec::new(),
        )
        .map_err(|e| format!("local wizard: {e}"))?;

        let remote = dir.path().join(format!("remote{i}"));
        let mut args = wizard_args(onto, product, &remote, answers, "parity");
        args.ontology = None;
        args.server = Some(spawn(Some(dir.path().join(format!("data{i}")))));
        cmd_wizard(&args, &mut std::io::empty(), &mut Vec::new())
            .map_err(|e| format!("wizard via service: {e}"))?;

        let script: Vec<Value> =
            serde_json::from_str(&std::fs::read_to_string(answers).unwrap()).unwrap();
        let http = runtime.block_on(drive_http(&spawn(None), product, "parity", &script))?;

        let local_ttl = std::fs::read_to_string(local.with_extension("ttl")).unwrap();
        let remote_ttl = std::fs::read_to_string(remote.with_extension("ttl")).unwrap();
        ensure(local_ttl == http, || {
            format!("case {i}: HTTP export differs from the local wizard")
        })?;
        ensure(local_ttl == remote_ttl, || {
            format!("case {i}: wizard via service differs")
        })?;
        bytes += local_ttl.len();
    }
    Ok(format!("{} scripts, {bytes} bytes identical", cases.len()))
}

// ---------------------------------------------------------------------------

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Result<String, String>,
}

fn main() {
    let criteria = [
        Criterion {
            name: "components of VerrePolymere",
            limit: Duration::from_secs(1),
            run: components_of_fixture_product,
        },
        Criterion {
            name: "transitive reduction",
            limit: Duration::from_secs(30),
            run: reduction_matches_oracle,
        },
        Criterion {
            name: "label intersection merge",
            limit: Duration::from_secs(30),
            run: merge_is_label_intersection,
        },
        Criterion {
            name: "chaining completeness",
            limit: Duration::from_secs(60),
            run: chaining_is_complete,
        },
        Criterion {
            name: "round trips",
            limit: Duration::from_secs(10),
            run: round_trips,
        },
        Criterion {
            name: "CLI/HTTP parity",
            limit: Duration::from_secs(10),
            run: cli_http_parity,
        },
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if took <= c.limit {
                Ok(detail)
            } else {
                Err(format!("{detail}; over the {:?} limit", c.limit))
            }
        });
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(e) => {
                failed += 1;
                ("FAIL", e)
            }
        };
        println!(
            "{status} [{}] {}: {detail} ({:.3}s, limit {}s)",
            i + 1,
            c.name,
            took.as_secs_f64(),
            c.limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
