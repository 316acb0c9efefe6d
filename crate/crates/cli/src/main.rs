use std::fs;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use graphdiff::adapter::{pipe_bridge, serve_bridge, EngineAdapter, ReferenceAdapter};
use graphdiff::campaign::{build_generator, run_campaign, CampaignConfig, CampaignReport, GeneratorKind, DEFAULT_CONFIG_TOML};
use graphdiff::gen::emit_load_statements;
use graphdiff::inject::{run_injection, ReferencePairs};
use graphdiff::ir::operator_fingerprint;
use graphdiff::lint::lint_query;
use graphdiff::prompt::build_prompt;
use graphdiff::querygen::{append_fixture, parse_generation_response, prompt_sha256, FixtureEntry, GenerationRequest, Query};
use graphdiff::{Dialect, FaultSet, LabeledPropertyGraph};

/// Differential testing of graph database engines.
#[derive(Parser)]
#[command(name = "graphdiff", version, arg_required_else_help = true)]
struct Cli {
    /// Print the default campaign configuration (TOML) and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random property graph.
    GenGraph {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        edges: Option<usize>,
        /// Graph JSON destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print load statements for this dialect instead of graph JSON.
        #[arg(long)]
        load_statements: Option<Dialect>,
    },
    /// Build the prompts of a campaign and collect generator responses as fixtures.
    GenQueries {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        rounds: Option<u32>,
        /// Fixture file the responses are appended to.
        #[arg(long)]
        out: PathBuf,
        /// Also write each round's prompt to `<dir>/round-<n>.txt`.
        #[arg(long)]
        prompts_dir: Option<PathBuf>,
    },
    /// Classify queries, one per line.
    Lint {
        #[arg(long)]
        dialect: Dialect,
        /// Treat the input as a raw generator response and extract the queries first.
        #[arg(long)]
        response: bool,
        /// Input file (stdin when absent).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run a campaign.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Exit with status 1 when any discrepancy is found.
        #[arg(long)]
        fail_on_discrepancy: bool,
    },
    /// Re-run a campaign from recorded fixtures.
    Replay {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        fixtures: PathBuf,
        /// Report JSON destination (overrides the configuration).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        fail_on_discrepancy: bool,
    },
    /// Run the built-in fault-injection suite.
    Inject {
        /// Reach the faulty engine through the line bridge protocol.
        #[arg(long)]
        via_bridge: bool,
    },
    /// Re-render a stored report.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// Markdown destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the embedded engine over the line bridge protocol on stdin/stdout.
    ServeBridge {
        #[arg(long)]
        dialect: Dialect,
        /// Comma-separated faults to switch on, e.g. `F1,F8`.
        #[arg(long, default_value = "none")]
        faults: FaultSet,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    if cli.print_config {
        print!("{DEFAULT_CONFIG_TOML}");
        return Ok(ExitCode::SUCCESS);
    }
    let Some(command) = cli.command else {
        bail!("no subcommand given (see --help)");
    };
    let json = cli.json;
    match command {
        Command::GenGraph {
            config,
            seed,
            nodes,
            edges,
            out,
            load_statements,
        } => {
            let mut c = load_config(config.as_deref())?;
            c.graph_file = None;
            if let Some(s) = seed {
                c.graph.seed = s;
            }
            if let Some(n) = nodes {
                c.graph.nodes = n;
            }
            if let Some(m) = edges {
                c.graph.edges = m;
            }
            let g = c.graph_for_round(1)?;
            let text = match load_statements {
                Some(d) => emit_load_statements(&g, d).join("\n") + "\n",
                None => g.to_json(),
            };
            write_out(out.as_deref(), &text)
        }
        Command::GenQueries {
            config,
            rounds,
            out,
            prompts_dir,
        } => {
            let mut c = load_config(config.as_deref())?;
            if let Some(r) = rounds {
                c.rounds = r;
            }
            c.validate()?;
            gen_queries(&c, &out, prompts_dir.as_deref(), json)
        }
        Command::Lint {
            dialect,
            response,
            input,
        } => lint(dialect, response, input.as_deref(), json),
        Command::Run {
            config,
            fail_on_discrepancy,
        } => {
            let c = CampaignConfig::load(&config)?;
            let report = run_campaign(&c)?;
            finish(&report, json, fail_on_discrepancy)
        }
        Command::Replay {
            config,
            fixtures,
            out,
            fail_on_discrepancy,
        } => {
            let mut c = load_config(config.as_deref())?;
            c.generator.kind = GeneratorKind::Replay;
            c.generator.fixtures = Some(fixtures);
            c.output.progress = None;
            c.output.include_timing = false;
            if out.is_some() {
                c.output.report_json = out;
                c.output.report_md = None;
            }
            let report = run_campaign(&c)?;
            finish(&report, json, fail_on_discrepancy)
        }
        Command::Inject { via_bridge } => {
            let report = if via_bridge {
                let mut factory = |dialect: Dialect, faults: FaultSet| {
                    let clean: Box<dyn EngineAdapter> = Box::new(ReferenceAdapter::new("clean", dialect, FaultSet::none()));
                    let faulty = pipe_bridge(Box::new(ReferenceAdapter::new("faulty", dialect, faults)))
                        .map_err(|e| e.to_string())?;
                    Ok::<_, String>((clean, Box::new(faulty) as Box<dyn EngineAdapter>))
                };
                run_injection(&mut factory)
            } else {
                run_injection(&mut ReferencePairs)
            }
            .map_err(anyhow::Error::msg)?;
            if json {
                print!("{}", report.to_json());
            } else {
                print!("{report}");
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Report { input, out } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let report = CampaignReport::from_json(&text).map_err(anyhow::Error::msg)?;
            if json {
                print!("{}", report.to_json(true));
                return Ok(ExitCode::SUCCESS);
            }
            write_out(out.as_deref(), &report.to_markdown())
        }
        Command::ServeBridge { dialect, faults } => {
            let mut engine = ReferenceAdapter::new("reference", dialect, faults);
            serve_bridge(&mut engine, BufReader::new(io::stdin().lock()), io::stdout().lock())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<CampaignConfig> {
    Ok(match path {
        Some(p) => CampaignConfig::load(p)?,
        None => CampaignConfig::default(),
    })
}

fn write_out(path: Option<&Path>, text: &str) -> Result<ExitCode> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn finish(report: &CampaignReport, json: bool, fail_on_discrepancy: bool) -> Result<ExitCode> {
    let a = &report.aggregates;
    if json {
        print!("{}", report.to_json(false));
    } else {
        println!(
            "{} queries, {} passed lint, {} equivalent, {} discrepancies ({} clusters), {} incomparable",
            a.total,
            a.passed_lint,
            a.equivalent,
            a.discrepancies,
            report.clusters.len(),
            a.incomparable
        );
        println!("non-empty-result ratio: {}", a.non_empty_ratio);
    }
    Ok(if fail_on_discrepancy && a.discrepancies > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn gen_queries(c: &CampaignConfig, out: &Path, prompts_dir: Option<&Path>, json: bool) -> Result<ExitCode> {
    let mut generator = build_generator(c)?;
    let profile = c.profile();
    if let Some(dir) = prompts_dir {
        fs::create_dir_all(dir)?;
    }
    let mut total = 0;
    for round in 1..=c.rounds {
        let graph: LabeledPropertyGraph = c.graph_for_round(round)?;
        let prompt = build_prompt(&graph, &profile)?.text();
        if let Some(dir) = prompts_dir {
            fs::write(dir.join(format!("round-{round}.txt")), &prompt)?;
        }
        let remote = &c.generator.remote;
        let response = generator.generate(&GenerationRequest {
            prompt: prompt.clone(),
            round,
            model: remote.model.clone(),
            temperature: remote.temperature,
            max_tokens: remote.max_tokens,
        })?;
        let queries = parse_generation_response(&response.raw, c.dialect, round);
        total += queries.len();
        append_fixture(
            out,
            &FixtureEntry {
                round,
                prompt_sha256: Some(prompt_sha256(&prompt)),
                response: response.raw,
            },
        )
        .with_context(|| format!("writing {}", out.display()))?;
        if json {
            for q in &queries {
                println!("{}", serde_json::to_string(q)?);
            }
        }
    }
    if !json {
        println!("{} rounds, {total} queries, fixtures in {}", c.rounds, out.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn lint(dialect: Dialect, response: bool, input: Option<&Path>, json: bool) -> Result<ExitCode> {
    let text = match input {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    let config = CampaignConfig::default().lint;
    let queries = if response {
        parse_generation_response(&text, dialect, 0)
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with("//") && !l.starts_with('#'))
            .enumerate()
            .map(|(index, line)| Query {
                dialect,
                text: line.to_owned(),
                round: 0,
                index,
                fingerprint: operator_fingerprint(line, dialect),
                lint: None,
            })
            .collect()
    };
    for mut q in queries {
        let verdict = lint_query(&q.text, dialect, &config);
        if json {
            q.lint = Some(verdict);
            println!("{}", serde_json::to_string(&q)?);
        } else {
            println!("{}\t{}", verdict.tag(), q.text);
        }
    }
    Ok(ExitCode::SUCCESS)
}
