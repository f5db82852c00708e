//! Exit criteria. Each criterion prints one PASS/FAIL line with its runtime
//! against its budget; the process exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::{fixture, fixture_survey, role_map, scripted_poll_backend, StubReply, StubServer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use synthpoll::adherence_eval::{
    adherence, load_human_csv, render_report, CsvOptions, ReportFormat, RoleMatchMap,
};
use synthpoll::embed_index::{embed_text, RoleIndex};
use synthpoll::llm_gateway::{
    BackendConfig, ChatRequest, GatewayError, HttpBackend, LlmBackend, MockBackend, MockFallback,
};
use synthpoll::role_forge::{
    attribute_grid, generate_role_from_grid, HexacoDimension, PoliticalLeaning, RoleProfile,
    RoleSource,
};
use synthpoll::survey_runner::{
    assemble_prompt, parse_answer, read_responses, run_poll, user_prompt, write_responses,
    ParsedAnswer, PollOptions, SimulatedResponse, Survey,
};

fn main() {
    let criteria: Vec<(&str, Duration, fn())> = vec![
        (
            "grid completeness",
            Duration::from_secs(1),
            grid_completeness,
        ),
        (
            "retrieval oracle equivalence",
            Duration::from_secs(5),
            retrieval_oracle_equivalence,
        ),
        (
            "pipeline determinism",
            Duration::from_secs(10),
            pipeline_determinism,
        ),
        (
            "adherence metric oracle",
            Duration::from_secs(2),
            adherence_metric_oracle,
        ),
        (
            "answer-parser cascade",
            Duration::from_secs(1),
            answer_parser_cascade,
        ),
        (
            "statelessness / wire conformance",
            Duration::from_secs(5),
            statelessness_wire_conformance,
        ),
        (
            "live smoke (gated on SYNTHPOLL_API_BASE)",
            Duration::from_secs(600),
            live_smoke,
        ),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, budget, check) in criteria {
        if name.starts_with("live") && std::env::var_os("SYNTHPOLL_API_BASE").is_none() {
            println!("[SKIP] {name}");
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        match outcome {
            Ok(()) if elapsed <= budget => {
                println!(
                    "[PASS] {name} ({:.3}s, budget {}s)",
                    elapsed.as_secs_f64(),
                    budget.as_secs()
                )
            }
            Ok(()) => {
                failed += 1;
                println!(
                    "[FAIL] {name}: took {:.3}s, budget {}s",
                    elapsed.as_secs_f64(),
                    budget.as_secs()
                );
            }
            Err(panic) => {
                failed += 1;
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("[FAIL] {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}

// ---------------------------------------------------------------------------

fn grid_completeness() {
    use HexacoDimension::*;
    use PoliticalLeaning::*;
    let table: [(HexacoDimension, PoliticalLeaning, &str); 18] = [
        (H, Conservative, "high honesty/humility, conservative values. Integrity, tradition, honest governance."),
        (H, Liberal, "high honesty/humility, liberal justice. Equality, fairness, systemic equity."),
        (H, Populist, "cynical of power. Low H elites, skeptical, 'common person' vs 'establishment'."),
        (E, Conservative, "low emotionality, national security. Calm, rational, strong defense, measured concern."),
        (E, Liberal, "high emotionality, social empathy. Concerned, empathetic, vulnerable, compassionate solutions."),
        (E, Populist, "emotional appeals, common frustrations. High E grievances, overlooked, wronged by elites."),
        (X, Conservative, "introverted, measured action. Deliberate, reserved, cautious, behind-scenes influence."),
        (X, Liberal, "extraverted, public engagement. Lively, engaging, activist, public discourse, collective action."),
        (X, Populist, "extraverted, rally base. Energetic, direct, 'common person', bypass 'establishment'."),
        (A, Conservative, "low agreeableness, firm stance. Direct, less consensus, strong convictions, principled."),
        (A, Liberal, "high agreeableness, consensus. Cooperative, polite, common ground, compromise, harmony."),
        (A, Populist, "low agreeableness vs. elites. Combative, critical, 'people's will', conflict if needed."),
        (C, Conservative, "high conscientiousness, fiscal responsibility. Organized, rules, disciplined, efficient, responsible gov."),
        (C, Liberal, "low conscientiousness flexible, urgent needs. Flexible, responsive, immediate problems, adaptable policy."),
        (C, Populist, "low conscientiousness anti-bureaucracy. Disregard 'red tape', direct action, swift results."),
        (O, Conservative, "low openness, tradition. Conventional, historical precedent, cautious change, proven methods."),
        (O, Liberal, "high openness, progress. Creative, forward-thinking, innovative, social progress, rethink systems."),
        (O, Populist, "high openness disruptive style. Reject 'elitist' norms, unconventional style, disrupt status quo."),
    ];
    let cells = attribute_grid();
    assert_eq!(cells.len(), 18, "grid size");
    for (cell, (dim, leaning, fragment)) in cells.iter().zip(table) {
        assert_eq!((cell.dimension, cell.leaning), (dim, leaning), "grid order");
        assert!(
            cell.prompt_fragment.contains(fragment),
            "{dim:?}/{leaning}: {:?}",
            cell.prompt_fragment
        );
    }
    let pairs: std::collections::HashSet<_> =
        cells.iter().map(|c| (c.dimension, c.leaning)).collect();
    assert_eq!(pairs.len(), 18, "full 6x3 product");
}

// ---------------------------------------------------------------------------

const WORDS: &[&str] = &[
    "tax",
    "policy",
    "reform",
    "border",
    "security",
    "health",
    "care",
    "climate",
    "jobs",
    "wages",
    "guns",
    "schools",
    "voting",
    "rights",
    "energy",
    "housing",
    "rent",
    "police",
    "budget",
    "defense",
    "trade",
    "farm",
    "union",
    "church",
    "family",
    "freedom",
    "equity",
    "tradition",
    "elites",
    "people",
    "I",
    "we",
    "believe",
    "oppose",
    "support",
    "strongly",
    "community",
    "values",
];

fn sentence(rng: &mut impl Rng, len: usize) -> String {
    (0..len)
        .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn retrieval_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grid = attribute_grid();
    let mut store = RoleIndex::default();
    let mut narratives = Vec::new();
    while store.len() < 200 {
        let cell = grid[rng.gen_range(0..grid.len())].clone();
        let leaning = cell.leaning;
        let len = rng.gen_range(5..30);
        let narrative = sentence(&mut rng, len);
        let profile = RoleProfile::new(
            RoleSource::Grid,
            vec![cell],
            leaning,
            narrative.clone(),
            None,
            None,
        );
        store.upsert(&profile).unwrap();
        narratives.push((profile.id, narrative));
    }
    for _ in 0..50 {
        let len = rng.gen_range(1..8);
        let query = sentence(&mut rng, len);
        // oracle: embed every narrative afresh, score, full sort
        let q = embed_text(&query);
        let mut oracle: Vec<(String, f64)> = narratives
            .iter()
            .map(|(id, text)| {
                let v = embed_text(text);
                (
                    id.clone(),
                    q.values().iter().zip(v.values()).map(|(a, b)| a * b).sum(),
                )
            })
            .collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        for k in [1, 3, 5] {
            let hits = store.retrieve(&query, k).unwrap();
            assert_eq!(hits.len(), k);
            for (i, (hit, (id, score))) in hits.iter().zip(&oracle).enumerate() {
                assert_eq!(&hit.role_id, id, "query {query:?} k={k} rank {}", i + 1);
                assert_eq!(hit.rank, i + 1);
                assert!(
                    (hit.score - score).abs() <= 1e-12,
                    "score drift {} vs {}",
                    hit.score,
                    score
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------

struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

/// grid → expand (echo mock) → index five roles → poll the 5×6 fixture →
/// evaluate. Returns every written file keyed by relative path.
fn run_pipeline(dir: &Path) -> Artifacts {
    let roles_dir = dir.join("roles");
    std::fs::create_dir_all(&roles_dir).unwrap();
    let echo = MockBackend::from_script([], MockFallback::Echo);
    let mut roles = Vec::new();
    for cell in attribute_grid() {
        let leaning = cell.leaning;
        let role = generate_role_from_grid(vec![cell], leaning, &echo).unwrap();
        role.write_to_dir(&roles_dir).unwrap();
        roles.push(role);
    }
    roles.sort_by(|a, b| a.id.cmp(&b.id));

    let mut store = RoleIndex::default();
    for role in roles.iter().take(5) {
        store.upsert(role).unwrap();
    }
    store.save(&dir.join("fixture.roleindex.json")).unwrap();

    let survey = fixture_survey();
    let backend = scripted_poll_backend(&store, &survey);
    let responses = run_poll(&survey, &store, &backend, &PollOptions::default(), None).unwrap();
    write_responses(&dir.join("responses.jsonl"), &responses).unwrap();

    let map = RoleMatchMap::new(role_map(&store)).unwrap();
    std::fs::write(
        dir.join("map.json"),
        serde_json::to_string_pretty(&map).unwrap(),
    )
    .unwrap();
    let human = load_human_csv(&fixture("human.csv"), &survey, CsvOptions::default()).unwrap();
    let reread = read_responses(&dir.join("responses.jsonl")).unwrap();
    let report = adherence(&reread, &human, &map, "Role Creation + scripted mock (0b)").unwrap();
    std::fs::write(
        dir.join("report.txt"),
        render_report(&report, ReportFormat::Text),
    )
    .unwrap();
    std::fs::write(
        dir.join("report.json"),
        render_report(&report, ReportFormat::Json),
    )
    .unwrap();

    let mut files = BTreeMap::new();
    collect(dir, dir, &mut files);
    Artifacts { files }
}

fn collect(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect(root, &path, out);
        } else {
            let rel = path
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            out.insert(rel, std::fs::read(&path).unwrap());
        }
    }
}

fn pipeline_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_pipeline(a.path());
    let second = run_pipeline(b.path());
    assert_eq!(
        first.files.keys().collect::<Vec<_>>(),
        second.files.keys().collect::<Vec<_>>(),
        "file sets differ"
    );
    let role_files = first
        .files
        .keys()
        .filter(|k| k.ends_with(".role.json"))
        .count();
    assert_eq!(role_files, 18, "expanded role files");
    for (name, bytes) in &first.files {
        assert!(bytes == &second.files[name], "{name} differs between runs");
    }
    let jsonl = std::str::from_utf8(&first.files["responses.jsonl"]).unwrap();
    assert_eq!(jsonl.lines().count(), 30);
    assert!(!jsonl.contains('\r'));
}

// ---------------------------------------------------------------------------

/// Counts matches straight from the files, sharing no code with the evaluator.
struct Counted {
    overall: (u64, u64),
    per_question: BTreeMap<String, (u64, u64)>,
    per_topic: BTreeMap<String, (u64, u64)>,
    per_respondent: BTreeMap<String, (u64, u64)>,
    unparseable: u64,
}

fn independent_count(dir: &Path) -> Counted {
    let survey: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("survey.json")).unwrap()).unwrap();
    let topics: BTreeMap<String, String> = survey["questions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|q| {
            (
                q["id"].as_str().unwrap().to_string(),
                q["topic"].as_str().unwrap().to_string(),
            )
        })
        .collect();
    let csv = std::fs::read_to_string(fixture("human.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let mut human: BTreeMap<(String, String), String> = BTreeMap::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        for (col, cell) in header.iter().zip(&cells).skip(1) {
            human.insert((cells[0].to_string(), col.to_string()), cell.to_lowercase());
        }
    }
    let map: BTreeMap<String, String> =
        serde_json::from_str(&std::fs::read_to_string(dir.join("map.json")).unwrap()).unwrap();

    let mut c = Counted {
        overall: (0, 0),
        per_question: BTreeMap::new(),
        per_topic: BTreeMap::new(),
        per_respondent: BTreeMap::new(),
        unparseable: 0,
    };
    for line in std::fs::read_to_string(dir.join("responses.jsonl"))
        .unwrap()
        .lines()
    {
        let r: Value = serde_json::from_str(line).unwrap();
        let respondent = map[r["role_id"].as_str().unwrap()].clone();
        let qid = r["question_id"].as_str().unwrap().to_string();
        let truth = &human[&(respondent.clone(), qid.clone())];
        let hit = r["parsed_option"].as_str().map(str::to_lowercase).as_ref() == Some(truth);
        if r["parsed_option"].is_null() {
            c.unparseable += 1;
        }
        for slot in [
            &mut c.overall,
            c.per_question.entry(qid.clone()).or_default(),
            c.per_topic.entry(topics[&qid].clone()).or_default(),
            c.per_respondent.entry(respondent).or_default(),
        ] {
            slot.0 += u64::from(hit);
            slot.1 += 1;
        }
    }
    c
}

fn oracle_pct((m, n): (u64, u64)) -> f64 {
    ((m as f64 * 1000.0 / n as f64) + 0.5).floor() / 10.0
}

fn adherence_metric_oracle() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(dir.path());
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let counted = independent_count(dir.path());

    let row = &report["rows"][0];
    assert_eq!(row["n_matched"].as_u64().unwrap(), counted.overall.0);
    assert_eq!(row["n_total"].as_u64().unwrap(), counted.overall.1);
    assert_eq!(
        row["overall_pct"].as_f64().unwrap(),
        oracle_pct(counted.overall)
    );
    assert_eq!(row["n_unparseable"].as_u64().unwrap(), counted.unparseable);
    for (section, groups) in [
        ("per_question", &counted.per_question),
        ("per_topic", &counted.per_topic),
        ("per_respondent", &counted.per_respondent),
    ] {
        let got = report[section].as_object().unwrap();
        assert_eq!(got.len(), groups.len(), "{section} size");
        for (key, tally) in groups {
            assert_eq!(
                got[key].as_f64().unwrap(),
                oracle_pct(*tally),
                "{section}[{key}]"
            );
        }
    }

    // values frozen by hand from the fixture tables
    assert_eq!(counted.overall, (22, 30));
    assert_eq!(row["overall_pct"], 73.3);
    assert_eq!(row["macro_questions_pct"], 73.3);
    assert_eq!(row["unparse_rate"], 6.7);
    let frozen_q = [
        ("q1", 80.0),
        ("q2", 80.0),
        ("q3", 80.0),
        ("q4", 80.0),
        ("q5", 60.0),
        ("q6", 60.0),
    ];
    for (q, pct) in frozen_q {
        assert_eq!(report["per_question"][q].as_f64().unwrap(), pct, "{q}");
    }
    for (t, pct) in [("economy", 80.0), ("health", 80.0), ("immigration", 60.0)] {
        assert_eq!(report["per_topic"][t].as_f64().unwrap(), pct, "{t}");
    }
    for (r, pct) in [
        ("R1", 66.7),
        ("R2", 83.3),
        ("R3", 66.7),
        ("R4", 66.7),
        ("R5", 83.3),
    ] {
        assert_eq!(report["per_respondent"][r].as_f64().unwrap(), pct, "{r}");
    }
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(
        text.contains("Role Creation + scripted mock | 0b | 73.3\n"),
        "{text}"
    );

    // 3 of 4 pairs -> 75.0
    let survey = fixture_survey();
    let human = load_human_csv(&fixture("human.csv"), &survey, CsvOptions::default()).unwrap();
    let sim: Vec<SimulatedResponse> = [
        ("q1", "Support"),
        ("q2", "Oppose"),
        ("q3", "Support"),
        ("q4", "Support"),
    ]
    .into_iter()
    .map(|(q, a)| SimulatedResponse {
        question_id: q.into(),
        role_id: "role-r1".into(),
        raw_text: a.into(),
        parsed_option: ParsedAnswer::Option(a.into()),
        hits: vec![],
        prompt_hash: String::new(),
    })
    .collect();
    let map = RoleMatchMap::new([("role-r1".to_string(), "R1".to_string())].into()).unwrap();
    let small = adherence(&sim, &human, &map, "spot").unwrap();
    assert_eq!((small.rows[0].n_matched, small.rows[0].n_total), (3, 4));
    assert_eq!(small.rows[0].overall_pct, 75.0);
}

// ---------------------------------------------------------------------------

fn answer_parser_cascade() {
    let so = ["Support", "Oppose"];
    let yn = ["Yes", "No"];
    let ns = ["Support", "Oppose", "Not sure"];
    let ag = ["Strongly agree", "Agree", "Disagree", "Strongly disagree"];
    let cases: [(&str, &[&str], Option<&str>); 30] = [
        // tier 1: whole reply equals a label
        ("Support", &so, Some("Support")),
        ("oppose", &so, Some("Oppose")),
        ("  Support.  ", &so, Some("Support")),
        ("\"Oppose\"", &so, Some("Oppose")),
        ("STRONGLY AGREE!", &ag, Some("Strongly agree")),
        ("No.", &yn, Some("No")),
        ("Not sure", &ns, Some("Not sure")),
        // tier 2: unique label in the first line
        (
            "Oppose.\nMany people support it, but not me.",
            &so,
            Some("Oppose"),
        ),
        ("I support it.\nOthers oppose it.", &so, Some("Support")),
        (
            "My answer: Agree\nI could also disagree on details.",
            &ag,
            Some("Agree"),
        ),
        ("Yes, absolutely.\nNo doubt.", &yn, Some("Yes")),
        (
            "I strongly disagree with that.\nAgree? Never.",
            &ag,
            Some("Strongly disagree"),
        ),
        (
            "Not sure.\nI might support it later.",
            &ns,
            Some("Not sure"),
        ),
        ("\n\nOppose\nreasons follow", &so, Some("Oppose")),
        // tier 3: unique label anywhere
        (
            "As a retired teacher, I think about this a lot.\nIn the end I support the measure.",
            &so,
            Some("Support"),
        ),
        ("Let me think.\nMy final answer is no.", &yn, Some("No")),
        (
            "Hmm.\nI would say I strongly agree.",
            &ag,
            Some("Strongly agree"),
        ),
        (
            "Well...\nI'd probably oppose that idea.",
            &so,
            Some("Oppose"),
        ),
        (
            "Considering everything,\nI'm not sure.",
            &ns,
            Some("Not sure"),
        ),
        ("I would support this policy.", &so, Some("Support")),
        // ambiguous
        ("Support or oppose, hard to say", &so, None),
        ("Yes and no.", &yn, None),
        ("I agree and disagree at once.", &ag, None),
        ("Thinking...\nSome support, some oppose.", &so, None),
        ("Strongly agree or strongly disagree", &ag, None),
        // garbage
        ("", &so, None),
        ("I don't know", &yn, None),
        ("As an AI I cannot answer.", &so, None),
        ("Supportive of some parts.", &so, None),
        ("???", &ns, None),
    ];
    for (i, (raw, options, expected)) in cases.iter().enumerate() {
        let options: Vec<String> = options.iter().map(|s| s.to_string()).collect();
        let got = parse_answer(raw, &options);
        assert_eq!(got.label(), *expected, "case {} {raw:?}", i + 1);
    }
}

// ---------------------------------------------------------------------------

fn statelessness_wire_conformance() {
    let server = StubServer::start(|_, body| {
        let user = body["messages"][1]["content"].as_str().unwrap_or("");
        let first = synthpoll::llm_gateway::first_option_label(user)
            .unwrap_or("none")
            .to_string();
        StubReply::Completion(first)
    });
    let cfg = BackendConfig {
        max_in_flight: 4,
        ..BackendConfig::http(&server.base_url, "llama3.3")
    };
    let http = HttpBackend::with_api_key(cfg.clone(), None).unwrap();

    let echo = MockBackend::from_script([], MockFallback::Echo);
    let mut store = RoleIndex::default();
    for cell in attribute_grid().into_iter().take(3) {
        let leaning = cell.leaning;
        store
            .upsert(&generate_role_from_grid(vec![cell], leaning, &echo).unwrap())
            .unwrap();
    }
    let survey = Survey {
        questions: fixture_survey().questions[..2].to_vec(),
        ..fixture_survey()
    };
    let responses = run_poll(
        &survey,
        &store,
        &http,
        &PollOptions {
            concurrency: 4,
            ..Default::default()
        },
        None,
    )
    .unwrap();
    assert_eq!(responses.len(), 6);
    assert!(responses
        .iter()
        .all(|r| r.parsed_option == ParsedAnswer::Option("Support".into())));

    let expected_users: std::collections::BTreeSet<String> =
        survey.questions.iter().map(user_prompt).collect();
    let recorded = server.requests();
    assert_eq!(recorded.len(), 6, "one request per (role, question)");
    let mut systems = std::collections::BTreeSet::new();
    for r in &recorded {
        assert_eq!(r.path, "/v1/chat/completions");
        let body = r.body.as_object().unwrap();
        let mut keys: Vec<&str> = body.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            ["max_tokens", "messages", "model", "temperature"],
            "no conversation id or extra state"
        );
        assert_eq!(body["temperature"].as_f64(), Some(0.0));
        let messages = body["messages"].as_array().unwrap();
        assert_eq!(messages.len(), 2, "exactly one system and one user message");
        assert_eq!(messages[0]["role"], "system");
        assert_eq!(messages[1]["role"], "user");
        assert!(
            expected_users.contains(messages[1]["content"].as_str().unwrap()),
            "user message carries history"
        );
        systems.insert(messages[0]["content"].as_str().unwrap().to_string());
    }
    assert_eq!(systems.len(), 3, "each role's own profile, no carry-over");
    for entry in store.entries() {
        let q = &survey.questions[0];
        let req = assemble_prompt(&entry.text_snapshot, q, &cfg).unwrap();
        assert!(recorded
            .iter()
            .any(|r| r.body["messages"][0]["content"] == req.system.as_str()));
    }

    let req = ChatRequest::new("sys", "usr", "m").unwrap();
    let down = StubServer::start(|_, _| StubReply::Status(503));
    let err = HttpBackend::with_api_key(BackendConfig::http(&down.base_url, "m"), None)
        .unwrap()
        .complete(&req);
    assert_eq!(err.unwrap_err(), GatewayError::HttpStatus(503));
    let garbled = StubServer::start(|_, _| StubReply::RawBody("<html>oops</html>".into()));
    let err = HttpBackend::with_api_key(BackendConfig::http(&garbled.base_url, "m"), None)
        .unwrap()
        .complete(&req);
    assert!(
        matches!(err, Err(GatewayError::MalformedResponse(_))),
        "{err:?}"
    );
}

// ---------------------------------------------------------------------------

fn live_smoke() {
    let base = std::env::var("SYNTHPOLL_API_BASE").unwrap();
    let model = std::env::var("SYNTHPOLL_MODEL").unwrap_or_else(|_| "default".into());
    let cfg = BackendConfig {
        timeout_secs: 300.0,
        ..BackendConfig::http(base, model)
    };
    let http = HttpBackend::new(cfg).unwrap();
    let cell = attribute_grid().remove(1);
    let leaning = cell.leaning;
    let role = RoleProfile::new(
        RoleSource::Grid,
        vec![cell],
        leaning,
        "I am a schoolteacher who believes fairness and equal treatment should guide public policy.".into(),
        None,
        None,
    );
    let mut store = RoleIndex::default();
    store.upsert(&role).unwrap();
    let survey = Survey {
        questions: fixture_survey().questions[..2].to_vec(),
        ..fixture_survey()
    };
    let responses = run_poll(&survey, &store, &http, &PollOptions::default(), None).unwrap();
    assert_eq!(responses.len(), 2);
    for r in &responses {
        assert_eq!(r.role_id, role.id);
        assert!(!r.raw_text.is_empty());
        assert_eq!(r.prompt_hash.len(), 64);
        let line = serde_json::to_string(r).unwrap();
        let back: SimulatedResponse = serde_json::from_str(&line).unwrap();
        assert_eq!(&back, r);
        if let Some(label) = r.parsed_option.label() {
            assert!(survey
                .question(&r.question_id)
                .unwrap()
                .options
                .iter()
                .any(|o| o == label));
        }
    }
}
