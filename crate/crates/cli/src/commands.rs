use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::anyhow;
use serde::Serialize;
use serde_json::{json, Value};
use synthpoll::adherence_eval::{
    adherence, load_human_csv, render_report, Aggregation, CsvOptions, ReportFormat, RoleMatchMap,
};
use synthpoll::embed_index::RoleIndex;
use synthpoll::llm_gateway::{
    connect, BackendConfig, ChatRequest, ChatResponse, GatewayError, LlmBackend, WireRequest,
};
use synthpoll::role_forge::{
    generate_role_from_grid, render_role_prompt, role_files, role_to_role, text_to_role,
    AttributeCell, AttributeGrid, RoleProfile,
};
use synthpoll::survey_runner::{
    read_responses, run_poll, write_responses, PollOptions, ResponseJournal, SimulatedResponse,
    Survey,
};

use crate::config::Config;
use crate::exit::{CliError, CliResult};
use crate::{
    EvalArgs, FromTextArgs, GridArgs, IndexBuildArgs, OutputFormat, PerturbArgs, PollArgs,
};

const RESPONSES_FILE: &str = "responses.jsonl";

fn emit(format: OutputFormat, text: impl AsRef<str>, json: Value) {
    match format {
        OutputFormat::Text => println!("{}", text.as_ref()),
        OutputFormat::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json).expect("summary serializes")
        ),
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| {
        CliError::input(e).context(format!("cannot create output directory {}", dir.display()))
    })
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => ensure_dir(parent),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::input(e).context(format!("cannot write {}", path.display())))
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(e).context(format!("cannot read {}", path.display())))
}

fn load_grid(path: Option<&Path>) -> CliResult<AttributeGrid> {
    match path {
        Some(path) => Ok(AttributeGrid::load(path)?),
        None => Ok(AttributeGrid::builtin().clone()),
    }
}

fn write_role(profile: &RoleProfile, dir: &Path) -> CliResult<PathBuf> {
    ensure_dir(dir)?;
    profile
        .write_to_dir(dir)
        .map_err(|e| CliError::input(e).context(format!("cannot write role to {}", dir.display())))
}

fn load_index(config: &Config, path: &Path) -> CliResult<RoleIndex> {
    RoleIndex::load(path, Arc::new(config.embedder()))
        .map_err(|e| CliError::from(e).context(format!("index {}", path.display())))
}

#[derive(Serialize)]
struct CellFile<'a> {
    #[serde(flatten)]
    cell: &'a AttributeCell,
    role_prompt: String,
}

fn cell_file_name(cell: &AttributeCell) -> String {
    format!(
        "{}-{}.cell.json",
        cell.dimension.code(),
        cell.leaning.name().to_lowercase()
    )
}

pub fn roles_grid(config: &Config, args: &GridArgs) -> CliResult<()> {
    let grid = load_grid(args.grid.as_deref())?;
    let out = args.out.clone().unwrap_or_else(|| config.roles_dir());
    ensure_dir(&out)?;
    let backend = if args.expand {
        Some(connect(&config.backend)?)
    } else {
        None
    };

    let mut cell_paths = Vec::new();
    let mut role_ids = Vec::new();
    for cell in grid.cells() {
        let body = CellFile {
            cell,
            role_prompt: render_role_prompt(std::slice::from_ref(cell), cell.leaning)?,
        };
        let mut text = serde_json::to_string_pretty(&body).expect("cell serializes");
        text.push('\n');
        let path = out.join(cell_file_name(cell));
        write_file(&path, &text)?;
        cell_paths.push(path.display().to_string());
        if let Some(backend) = &backend {
            let profile =
                generate_role_from_grid(vec![cell.clone()], cell.leaning, backend.as_ref())
                    .map_err(|e| {
                        CliError::from(e).context(format!("expanding {}", cell_file_name(cell)))
                    })?;
            write_role(&profile, &out)?;
            role_ids.push(profile.id);
        }
    }
    let mut text = format!("wrote {} cell files to {}", cell_paths.len(), out.display());
    if args.expand {
        text.push_str(&format!(
            "\nwrote {} role profiles to {}",
            role_ids.len(),
            out.display()
        ));
    }
    emit(
        args.common.format,
        text,
        json!({ "cells": cell_paths, "roles": role_ids }),
    );
    Ok(())
}

fn emit_role(format: OutputFormat, profile: &RoleProfile, path: &Path) {
    emit(
        format,
        &profile.id,
        json!({ "id": profile.id, "path": path.display().to_string(), "leaning": profile.leaning, "dimensions": profile.dimensions() }),
    );
}

pub fn roles_from_text(config: &Config, args: &FromTextArgs) -> CliResult<()> {
    let text = read_text(&args.input)?;
    let grid = load_grid(args.grid.as_deref())?;
    let backend = connect(&config.backend)?;
    let profile = text_to_role(&text, &grid, backend.as_ref()).map_err(|e| {
        CliError::from(e).context(format!("deriving role from {}", args.input.display()))
    })?;
    let path = write_role(
        &profile,
        &args.out.clone().unwrap_or_else(|| config.roles_dir()),
    )?;
    emit_role(args.common.format, &profile, &path);
    Ok(())
}

pub fn roles_perturb(config: &Config, args: &PerturbArgs) -> CliResult<()> {
    let seed = RoleProfile::read_file(&args.seed)?;
    let grid = load_grid(args.grid.as_deref())?;
    let backend = connect(&config.backend)?;
    let dims: BTreeSet<_> = args.dims.iter().copied().collect();
    let profile = role_to_role(&seed, &dims, &grid, backend.as_ref())?;
    let path = write_role(
        &profile,
        &args.out.clone().unwrap_or_else(|| config.roles_dir()),
    )?;
    emit_role(args.common.format, &profile, &path);
    Ok(())
}

pub fn index_build(config: &Config, args: &IndexBuildArgs) -> CliResult<()> {
    let files = role_files(&args.roles_dir).map_err(|e| {
        CliError::input(e).context(format!("cannot list roles in {}", args.roles_dir.display()))
    })?;
    if files.is_empty() {
        return Err(CliError::input(anyhow!(
            "no *.role.json files in {}",
            args.roles_dir.display()
        )));
    }
    let mut index = RoleIndex::new(Arc::new(config.embedder()));
    for file in &files {
        let profile = RoleProfile::read_file(file)?;
        index
            .upsert(&profile)
            .map_err(|e| CliError::from(e).context(format!("role file {}", file.display())))?;
    }
    let out = args.out.clone().unwrap_or_else(|| config.index_path());
    ensure_parent(&out)?;
    index
        .save(&out)
        .map_err(|e| CliError::from(e).context(format!("cannot write index {}", out.display())))?;
    emit(
        args.common.format,
        format!("indexed {} roles into {}", index.len(), out.display()),
        json!({ "entries": index.len(), "path": out.display().to_string(), "header": index.header() }),
    );
    Ok(())
}

/// Records requests instead of sending them.
struct DryRun {
    config: BackendConfig,
    seen: Mutex<BTreeMap<String, ChatRequest>>,
}

impl LlmBackend for DryRun {
    fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn backend_id(&self) -> String {
        "dry-run".into()
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let prompt_hash = request.prompt_hash();
        self.seen
            .lock()
            .expect("not poisoned")
            .insert(prompt_hash.clone(), request.clone());
        Ok(ChatResponse {
            text: String::new(),
            backend_id: self.backend_id(),
            prompt_hash,
        })
    }
}

fn dump_requests(
    format: OutputFormat,
    planned: &[SimulatedResponse],
    seen: &BTreeMap<String, ChatRequest>,
) {
    for r in planned {
        let request = &seen[&r.prompt_hash];
        match format {
            OutputFormat::Text => {
                println!(
                    "# role {} question {} prompt_hash {}",
                    r.role_id, r.question_id, r.prompt_hash
                );
                println!("model: {}", request.model);
                println!("temperature: {:?}", request.temperature);
                println!("max_tokens: {}", request.max_tokens);
                println!("[system]\n{}\n[user]\n{}\n", request.system, request.user);
            }
            OutputFormat::Json => {
                let line = json!({
                    "role_id": r.role_id,
                    "question_id": r.question_id,
                    "prompt_hash": r.prompt_hash,
                    "request": WireRequest::from_request(request),
                });
                println!("{line}");
            }
        }
    }
}

pub fn poll_run(config: &Config, args: &PollArgs) -> CliResult<()> {
    let survey = Survey::load(&config.survey_path(&args.survey))?;
    let index = load_index(
        config,
        &args.index.clone().unwrap_or_else(|| config.index_path()),
    )?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| config.output_path(RESPONSES_FILE));

    let mut kept = Vec::new();
    if args.resume && out.exists() {
        kept = read_responses(&out)
            .map_err(|e| CliError::from(e).context(format!("resuming from {}", out.display())))?
            .into_iter()
            .filter(|r| !r.is_transient_error())
            .collect();
    }
    let options = PollOptions {
        mode: config.poll_mode,
        k: config.retrieval_k,
        excerpt: config.excerpt,
        concurrency: config.concurrency_limit,
        skip: kept.iter().map(SimulatedResponse::key).collect(),
    };

    if args.dry_run {
        let dry = DryRun {
            config: config.backend.clone(),
            seen: Mutex::new(BTreeMap::new()),
        };
        let planned = run_poll(&survey, &index, &dry, &options, None)?;
        dump_requests(
            args.common.format,
            &planned,
            &dry.seen.into_inner().expect("not poisoned"),
        );
        return Ok(());
    }

    let backend = connect(&config.backend)?;
    ensure_parent(&out)?;
    write_responses(&out, &kept)
        .map_err(|e| CliError::from(e).context(format!("cannot write {}", out.display())))?;
    let journal = ResponseJournal::append_to(&out)?;
    let record = |r: &SimulatedResponse| {
        if let Err(err) = journal.record(r) {
            eprintln!("warning: journal write failed: {err}");
        }
    };
    let fresh = run_poll(&survey, &index, backend.as_ref(), &options, Some(&record))?;
    drop(journal);

    let n_new = fresh.len();
    let n_errors = fresh.iter().filter(|r| r.error_tag().is_some()).count();
    let n_unparseable = fresh
        .iter()
        .filter(|r| r.error_tag().is_none() && r.parsed_option.label().is_none())
        .count();
    let mut all = kept;
    all.extend(fresh);
    write_responses(&out, &all)
        .map_err(|e| CliError::from(e).context(format!("cannot write {}", out.display())))?;
    let total = read_responses(&out)?.len();
    emit(
        args.common.format,
        format!(
            "wrote {total} responses to {} ({n_new} new, {n_unparseable} unparseable, {n_errors} errors)",
            out.display()
        ),
        json!({
            "path": out.display().to_string(),
            "total": total,
            "new": n_new,
            "unparseable": n_unparseable,
            "errors": n_errors,
        }),
    );
    Ok(())
}

pub fn eval(config: &Config, args: &EvalArgs) -> CliResult<()> {
    let survey = Survey::load(&config.survey_path(&args.survey))?;
    let responses = read_responses(&args.responses).map_err(|e| {
        CliError::from(e).context(format!("responses {}", args.responses.display()))
    })?;
    let human = load_human_csv(
        &args.human_csv,
        &survey,
        CsvOptions {
            ignore_extra: args.ignore_extra,
        },
    )
    .map_err(|e| {
        CliError::from(e).context(format!("human answers {}", args.human_csv.display()))
    })?;
    let map = RoleMatchMap::load(&args.map)
        .map_err(|e| CliError::from(e).context(format!("role map {}", args.map.display())))?;

    let label = match &args.label {
        Some(label) => label.clone(),
        None if config.backend.model.is_empty() => "simulated".to_string(),
        None => config.backend.model.clone(),
    };
    let mut report = adherence(&responses, &human, &map, &label)?;
    if args.macro_questions {
        report.headline = Aggregation::MacroQuestions;
    }
    let rendered = render_report(
        &report,
        match args.common.format {
            OutputFormat::Text => ReportFormat::Text,
            OutputFormat::Json => ReportFormat::Json,
        },
    );
    match &args.out {
        Some(path) => {
            ensure_parent(path)?;
            write_file(path, &rendered)?;
        }
        None => print!("{rendered}"),
    }
    Ok(())
}
