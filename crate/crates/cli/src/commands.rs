use std::path::{Path, PathBuf};

use logiplan::agent::{self, Agent, CompletionProvider, PromptAssets, ReplayProvider, ScriptedProvider, TaskError};
use logiplan::data::{generate, load_dataset, write_dataset, DataPaths, Dataset, FixtureSpec};
use logiplan::eval::{Plan, Rubric};
use logiplan::logic::{KnowledgeBase, Provenance, Query};
use logiplan::tools::{install_tools, ToolContext, ToolRegistry};
use logiplan::Execution;

use crate::{repl, transcript, AgentArgs, Cli, CliError, Command, DataArg, ProviderArgs};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let json = cli.json;
    match cli.command {
        Command::Repl { files, data } => {
            let mut kb = program_kb(&files, &data, exec)?;
            repl::run(&mut kb)
        }
        Command::Consult { files } => consult(&files, json),
        Command::Query { goal, files, limit, data } => query(&goal, &files, limit, &data, exec, json),
        Command::Ingest { data } => ingest(&data, json),
        Command::EvalPlan { file, agent } => eval_plan(&file, &agent, exec, json),
        Command::RunTask {
            query,
            plan,
            print_prompt,
            agent,
            provider,
        } => run_task(&query, plan.as_deref(), print_prompt, &agent, &provider, exec, json),
        Command::Bench { tasks, agent, provider } => bench(&tasks, &agent, &provider, exec, json),
        Command::GenFixture {
            seed,
            out,
            payments,
            rules,
        } => gen_fixture(
            FixtureSpec {
                seed,
                payments,
                rules,
                ..FixtureSpec::default()
            },
            &out,
            json,
        ),
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value serializes"));
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

fn consult_files(kb: &mut KnowledgeBase, files: &[PathBuf]) -> Result<usize, CliError> {
    let mut n = 0;
    for f in files {
        n += kb
            .consult(&read(f)?, Provenance::Program)
            .map_err(|e| CliError::User(format!("{}: {e}", f.display())))?;
    }
    Ok(n)
}

fn load(dir: &Path) -> Result<Dataset, CliError> {
    load_dataset(&DataPaths::in_dir(dir)).map_err(CliError::user)
}

/// The dataset named on the command line or in the environment, or the
/// default synthetic fixture.
fn dataset_or_fixture(data: &DataArg) -> Result<Dataset, CliError> {
    match &data.dir {
        Some(dir) => load(dir),
        None => {
            eprintln!(
                "note: no --data given; using the synthetic fixture (seed {})",
                FixtureSpec::default().seed
            );
            Ok(generate(FixtureSpec::default()))
        }
    }
}

/// Tool predicates are always installed; dataset facts and tables only when
/// a dataset is given.
fn program_kb(files: &[PathBuf], data: &DataArg, exec: Execution) -> Result<KnowledgeBase, CliError> {
    let registry = ToolRegistry::builtin();
    let mut kb = match &data.dir {
        Some(dir) => {
            let ds = load(dir)?;
            Agent::knowledge_base(&ds, &registry, ToolContext::from_dataset(&ds).with_execution(exec)).map_err(CliError::internal)?
        }
        None => {
            let mut kb = KnowledgeBase::new();
            let ctx = ToolContext::from_dataset(&Dataset::default()).with_execution(exec);
            install_tools(&mut kb, &registry, std::sync::Arc::new(ctx)).map_err(CliError::internal)?;
            kb
        }
    };
    consult_files(&mut kb, files)?;
    Ok(kb)
}

fn consult(files: &[PathBuf], json: bool) -> Result<(), CliError> {
    let mut kb = KnowledgeBase::new();
    let n = consult_files(&mut kb, files)?;
    if json {
        let preds: Vec<String> = kb.user_predicates().map(|k| k.to_string()).collect();
        print_json(&serde_json::json!({"clauses": n, "predicates": preds, "listing": kb.listing()}));
    } else {
        print!("{}", kb.listing());
    }
    Ok(())
}

fn query(goal: &str, files: &[PathBuf], limit: Option<usize>, data: &DataArg, exec: Execution, json: bool) -> Result<(), CliError> {
    let kb = program_kb(files, data, exec)?;
    let q = Query::parse(goal, &kb).map_err(CliError::user)?;
    let c = transcript::collect(&kb, q, limit);
    if json {
        print_json(&transcript::to_json(&c));
    } else {
        print!("{}", transcript::render(&c));
    }
    match c.error {
        Some(e) => Err(CliError::user(e)),
        None => Ok(()),
    }
}

fn ingest(data: &DataArg, json: bool) -> Result<(), CliError> {
    let dir = data
        .dir
        .as_ref()
        .ok_or_else(|| CliError::User("ingest needs --data DIR or LOGIPLAN_DATA_DIR".into()))?;
    let started = std::time::Instant::now();
    let ds = load(dir)?;
    let seconds = started.elapsed().as_secs_f64();
    if json {
        print_json(&serde_json::json!({
            "payments": ds.payments.len(),
            "fees": ds.fee_rules.len(),
            "merchant_data": ds.merchants.len(),
            "acquirer_countries": ds.acquirers.len(),
            "merchant_category_codes": ds.mccs.len(),
            "seconds": seconds,
        }));
    } else {
        println!("{ds}");
    }
    Ok(())
}

fn build_agent(args: &AgentArgs, exec: Execution) -> Result<Agent, CliError> {
    let ds = dataset_or_fixture(&args.data)?;
    let registry = ToolRegistry::builtin();
    let kb = Agent::knowledge_base(&ds, &registry, ToolContext::from_dataset(&ds).with_execution(exec)).map_err(CliError::internal)?;
    let mut agent = Agent::new(kb, registry);
    if let Some(path) = &args.rubric {
        agent.rubric = serde_json::from_str::<Rubric>(&read(path)?).map_err(|e| CliError::User(format!("{}: {e}", path.display())))?;
    }
    if let Some(dir) = &args.prompt_dir {
        agent.assets = PromptAssets::from_dir(dir).map_err(CliError::user)?;
    }
    if let Some(t) = args.threshold {
        agent.policy.threshold = t;
    }
    if let Some(r) = args.max_retries {
        agent.policy.max_retries = r;
    }
    Ok(agent)
}

fn eval_plan(file: &Path, args: &AgentArgs, exec: Execution, json: bool) -> Result<(), CliError> {
    let agent = build_agent(args, exec)?;
    let text = read(file)?;
    let report = Plan::parse(&text, &agent.kb, &agent.registry)
        .and_then(|p| p.evaluate(&agent.kb, &agent.registry, &agent.rubric))
        .map_err(|e| CliError::User(format!("{}: {e}", file.display())))?;
    if json {
        println!("{}", report.to_json());
    } else {
        println!("{report}");
    }
    Ok(())
}

fn provider(args: &ProviderArgs) -> Result<Box<dyn CompletionProvider>, CliError> {
    if let Some(dir) = &args.replay {
        return Ok(Box::new(ReplayProvider::new(dir)));
    }
    #[cfg(feature = "http")]
    {
        agent::HttpProvider::from_env()
            .map(|p| Box::new(p) as Box<dyn CompletionProvider>)
            .map_err(|e| CliError::User(format!("{e}; pass --replay DIR or --plan FILE")))
    }
    #[cfg(not(feature = "http"))]
    Err(CliError::User("no provider: pass --replay DIR or --plan FILE".into()))
}

fn task_error(e: TaskError) -> CliError {
    match e {
        TaskError::Provider {
            source: agent::ProviderError::Transport(m),
            ..
        } => CliError::Internal(format!("provider request failed: {m}")),
        other => CliError::user(other),
    }
}

fn run_task(
    query: &str,
    plan: Option<&Path>,
    print_prompt: bool,
    args: &AgentArgs,
    pargs: &ProviderArgs,
    exec: Execution,
    json: bool,
) -> Result<(), CliError> {
    let agent = build_agent(args, exec)?;
    let mut session = agent.session();
    if print_prompt {
        print!("{}", agent.prompt(query, &session.history));
        return Ok(());
    }
    let provider: Box<dyn CompletionProvider> = match plan {
        Some(p) => Box::new(ScriptedProvider::new([read(p)?])),
        None => provider(pargs)?,
    };
    match session.run_task(query, provider.as_ref()) {
        Ok(out) => {
            if json {
                print_json(&serde_json::to_value(&out).map_err(CliError::internal)?);
            } else {
                println!("{}", out.answer);
                eprintln!("score {} after {} attempt(s)", out.report.score, out.attempts);
            }
            Ok(())
        }
        Err(e) => {
            if json {
                print_json(&serde_json::json!({"error": e.to_string(), "trace": e.trace()}));
            }
            Err(task_error(e))
        }
    }
}

fn bench(tasks: &Path, args: &AgentArgs, pargs: &ProviderArgs, exec: Execution, json: bool) -> Result<(), CliError> {
    let tasks = agent::load_tasks(tasks).map_err(CliError::user)?;
    let agent = build_agent(args, exec)?;
    // Tasks that carry their own plan never reach the provider, so a
    // missing provider only matters when some task lacks one.
    let fallback: Box<dyn CompletionProvider> = if tasks.iter().all(|t| t.plan.is_some()) {
        Box::new(agent::RejectingProvider)
    } else {
        provider(pargs)?
    };
    let report = agent::run_bench(&agent, &tasks, fallback.as_ref(), exec);
    if json {
        print_json(&serde_json::to_value(&report).map_err(CliError::internal)?);
        return Ok(());
    }
    for r in &report.results {
        let mark = if r.correct { "PASS" } else { "FAIL" };
        let got = match (&r.got, &r.error) {
            (Some(g), _) => g.replace('\n', " | "),
            (None, Some(e)) => format!("error: {e}"),
            (None, None) => String::new(),
        };
        println!("{mark} {:.2}s {} => {got} (expected {})", r.seconds, r.question, r.expected);
    }
    println!("accuracy: {}/{} = {:.3}", report.correct, report.total, report.accuracy);
    Ok(())
}

fn gen_fixture(spec: FixtureSpec, out: &Path, json: bool) -> Result<(), CliError> {
    let ds = generate(spec);
    let paths = write_dataset(out, &ds).map_err(CliError::internal)?;
    if json {
        print_json(&serde_json::json!({
            "seed": spec.seed,
            "payments": paths.payments,
            "fees": paths.fees,
            "merchant_data": paths.merchants,
            "acquirer_countries": paths.acquirers,
            "merchant_category_codes": paths.mccs,
        }));
    } else {
        println!("wrote {} payments to {}", ds.payments.len(), out.display());
    }
    Ok(())
}
