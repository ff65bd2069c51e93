//! Command-line surface: parse, annotate, graphs, stats, retrieve, judge,
//! and evaluate subcommands over checklist/case/judgment files.

use std::collections::BTreeSet;
use std::error::Error;
use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};

use crate::annotate::{annotate_checklist, AnnotateConfig};
use crate::checklist::{load_checklist_file, save_checklist_file, Checklist, NormType};
use crate::config::{Config, CorpusChoice};
use crate::embedding::{EmbeddingProvider, HttpEmbeddingProvider, MockEmbeddingProvider};
use crate::gateway::{
    ChatClient, ChatProvider, Gateway, HttpChatProvider, MockChatProvider, RetryConfig,
    TranscriptLog,
};
use crate::graphs::{
    build_role_graph, ingest_attribute_ontology, parse_defined_roles_tsv, parse_ontology_tsv,
    FixtureTaxonomy,
};
use crate::judge::{judge_cases, JudgeConfig, JudgeContext, Judgment, Method, METHODS};
use crate::regdoc::parse_document;
use crate::retrieve::{
    agent_retrieve, bm25_query, build_bm25_index, corpus_for, embedding_retrieve,
    llm_explanation, EmbeddingRetrieveConfig, RetrievalHit,
};

#[derive(Debug, Parser)]
#[command(name = "cicheck", version, about = "Regulation compliance checklist and judge")]
struct Cli {
    /// Config file with key=value lines; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Chat-completion endpoint URL.
    #[arg(long, global = true)]
    provider_endpoint: Option<String>,
    /// Model name sent to the provider.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Scripted mock provider file (line-delimited JSON entries).
    #[arg(long, global = true)]
    mock_script: Option<PathBuf>,
    /// Embedding endpoint URL.
    #[arg(long, global = true)]
    embed_endpoint: Option<String>,
    /// Use the deterministic mock embedding provider.
    #[arg(long, global = true)]
    mock_embeddings: bool,
    /// Retrieval depth (candidates per query).
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Max in-flight provider requests and worker threads.
    #[arg(long, global = true)]
    max_parallel: Option<usize>,
    /// Seed recorded for reproducibility; built-in pipelines are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Append provider transcripts to this file.
    #[arg(long, global = true)]
    transcript: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a plain-text regulation export into a checklist skeleton.
    Parse {
        /// Regulation text file (one clause per identifier line).
        #[arg(long)]
        input: PathBuf,
        /// Label for the synthetic root node.
        #[arg(long, default_value = "HIPAA")]
        root_label: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the annotation questionnaire over every leaf (needs a provider).
    Annotate {
        #[arg(long)]
        checklist: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Write the per-leaf annotation report (JSON) here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build the role/attribute graphs and definitions from fixture files.
    Graphs {
        #[arg(long)]
        checklist: PathBuf,
        /// Taxonomy file: `child<TAB>parent` per line.
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        /// Defined roles file: `name<TAB>member` per line.
        #[arg(long)]
        defined_roles: Option<PathBuf>,
        /// Attribute ontology file: `child<TAB>parent<TAB>kind` per line.
        #[arg(long)]
        ontology: Option<PathBuf>,
        /// Definitions file: `term<TAB>definition` per line.
        #[arg(long)]
        definitions: Option<PathBuf>,
        /// Extra role surfaces, one per line (annotated roles are always used).
        #[arg(long)]
        roles: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print tree and checklist statistics.
    Stats {
        #[arg(long)]
        checklist: PathBuf,
    },
    /// Run one retrieval method ad hoc.
    Retrieve {
        #[arg(long)]
        checklist: PathBuf,
        /// bm25 | embedding | agent
        #[arg(long)]
        method: String,
        /// Direct lexical query (bm25 only; skips the provider).
        #[arg(long)]
        query: Option<String>,
        /// Event text to retrieve for.
        #[arg(long)]
        event: Option<String>,
        /// Corpus choice: norms | all.
        #[arg(long)]
        corpus: Option<String>,
    },
    /// Judge a case file with one method (or `all`), resumable per case id.
    Judge {
        /// dp | cot-auto | cot-manual | agent-id | bm25-content | ci-es-content | all
        #[arg(long)]
        method: String,
        #[arg(long)]
        cases: PathBuf,
        #[arg(long)]
        checklist: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score a judgments file against its case file.
    Evaluate {
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long)]
        cases: PathBuf,
        /// text | json
        #[arg(long, default_value = "text")]
        format: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Pipeline(Box<dyn Error>),
}

impl<E: Error + 'static> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Pipeline(Box::new(e))
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

/// Entry point; returns the process exit code (0 success, 1 pipeline
/// failure, 2 usage error).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let config = match build_config(&cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match dispatch(cli.command, &config) {
        Ok(()) => 0,
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            2
        }
        Err(CliError::Pipeline(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn build_config(cli: &Cli) -> Result<Config, Box<dyn Error>> {
    let mut config = Config::default();
    if let Some(path) = &cli.config {
        config.apply_file(path)?;
    }
    if let Some(v) = &cli.provider_endpoint {
        config.provider_endpoint = Some(v.clone());
    }
    if let Some(v) = &cli.model {
        config.model = v.clone();
    }
    if let Some(v) = &cli.mock_script {
        config.mock_script = Some(v.clone());
    }
    if let Some(v) = &cli.embed_endpoint {
        config.embed_endpoint = Some(v.clone());
    }
    if cli.mock_embeddings {
        config.mock_embeddings = true;
    }
    if let Some(v) = cli.k {
        config.k = v;
    }
    if let Some(v) = cli.max_parallel {
        config.max_parallel = v;
    }
    if let Some(v) = cli.seed {
        config.seed = v;
    }
    if let Some(v) = &cli.transcript {
        config.transcript = Some(v.clone());
    }
    Ok(config)
}

fn build_chat_client(config: &Config) -> Result<ChatClient, CliError> {
    let provider: Arc<dyn ChatProvider> = if let Some(path) = &config.mock_script {
        let text = std::fs::read_to_string(path)?;
        Arc::new(MockChatProvider::from_script_text(&text)?)
    } else if let Some(endpoint) = &config.provider_endpoint {
        Arc::new(HttpChatProvider::from_env(endpoint, &config.api_key_env)?)
    } else {
        return Err(usage(
            "no chat provider configured: pass --mock-script or --provider-endpoint",
        ));
    };
    let retry = RetryConfig {
        max_attempts: config.retry_max_attempts,
        base_delay: Duration::from_millis(config.retry_base_ms),
    };
    let transcript = match &config.transcript {
        Some(path) => Some(Arc::new(TranscriptLog::to_file(path)?)),
        None => None,
    };
    let gateway = Gateway::with_config(provider, retry, config.max_parallel, transcript);
    Ok(ChatClient::new(gateway, &config.model))
}

fn build_embedder(config: &Config) -> Result<Option<Box<dyn EmbeddingProvider>>, CliError> {
    if config.mock_embeddings {
        Ok(Some(Box::new(MockEmbeddingProvider)))
    } else if let Some(endpoint) = &config.embed_endpoint {
        Ok(Some(Box::new(HttpEmbeddingProvider::new(endpoint)?)))
    } else {
        Ok(None)
    }
}

/// Human-readable checklist summary shared by `stats` and tests.
pub fn stats_text(checklist: &Checklist) -> String {
    let stats = &checklist.tree.stats;
    let positive = checklist.norms_by_type(NormType::Positive).len();
    let negative = checklist.norms_by_type(NormType::Negative).len();
    let definitions = checklist.norms_by_type(NormType::GeneralDefinition).len();
    format!(
        "nodes: {} (internal {}, leaf {})\n\
         edges: {}\n\
         cross references: {}\n\
         annotations: {} (positive {}, negative {}, general definitions {})\n\
         role graph: {} vertices, {} relations, {} unresolved\n\
         attribute graph: {} vertices, {} relations\n\
         definitions: {}\n",
        stats.internal_count + stats.leaf_count,
        stats.internal_count,
        stats.leaf_count,
        stats.edge_count,
        stats.cross_reference_count,
        checklist.annotations.len(),
        positive,
        negative,
        definitions,
        checklist.role_graph.vertices.len(),
        checklist.role_graph.edge_count(),
        checklist.role_graph.unresolved.len(),
        checklist.attribute_graph.vertices.len(),
        checklist.attribute_graph.edge_count(),
        checklist.definitions.len(),
    )
}

fn print_hits(hits: &[RetrievalHit]) {
    if hits.is_empty() {
        println!("no hits");
        return;
    }
    for (rank, hit) in hits.iter().enumerate() {
        println!("{}. {} {:.6}", rank + 1, hit.leaf.canonical(), hit.score);
    }
}

fn dispatch(command: Command, config: &Config) -> Result<(), CliError> {
    match command {
        Command::Parse { input, root_label, output } => {
            let text = std::fs::read_to_string(&input)?;
            let tree = parse_document(&text, &root_label)?;
            let checklist = Checklist::new(tree);
            save_checklist_file(&checklist, &output)?;
            print!("{}", stats_text(&checklist));
            Ok(())
        }
        Command::Annotate { checklist, output, report } => {
            let mut checklist = load_checklist_file(&checklist)?;
            let client = build_chat_client(config)?;
            let annotate_config = AnnotateConfig {
                retry_limit: config.annotate_retry_limit,
                parallelism: config.max_parallel,
            };
            let run_report = annotate_checklist(&client, &mut checklist, annotate_config)?;
            save_checklist_file(&checklist, &output)?;
            if let Some(path) = report {
                let json = serde_json::to_string_pretty(&run_report)
                    .map_err(|e| CliError::Pipeline(Box::new(e)))?;
                std::fs::write(path, json + "\n")?;
            }
            println!(
                "annotated {} leaves, {} failures",
                run_report.entries.len() - run_report.failures(),
                run_report.failures()
            );
            Ok(())
        }
        Command::Graphs {
            checklist,
            taxonomy,
            defined_roles,
            ontology,
            definitions,
            roles,
            output,
        } => {
            let mut checklist = load_checklist_file(&checklist)?;
            let tax = match taxonomy {
                Some(path) => FixtureTaxonomy::from_tsv(&std::fs::read_to_string(path)?)?,
                None => FixtureTaxonomy::default(),
            };
            let defined = match defined_roles {
                Some(path) => parse_defined_roles_tsv(&std::fs::read_to_string(path)?)?,
                None => Default::default(),
            };
            let mut role_surfaces: BTreeSet<String> = checklist
                .annotations
                .values()
                .filter_map(|a| a.characteristics.as_ref())
                .flat_map(|c| {
                    [&c.sender_role, &c.recipient_role, &c.subject_role]
                        .into_iter()
                        .flatten()
                        .cloned()
                        .collect::<Vec<_>>()
                })
                .collect();
            if let Some(path) = roles {
                for line in std::fs::read_to_string(path)?.lines() {
                    let line = line.trim();
                    if !line.is_empty() && !line.starts_with('#') {
                        role_surfaces.insert(line.to_string());
                    }
                }
            }
            let role_list: Vec<String> = role_surfaces.into_iter().collect();
            checklist.role_graph = build_role_graph(&role_list, &tax, &defined)?;
            if let Some(path) = ontology {
                let records = parse_ontology_tsv(&std::fs::read_to_string(path)?)?;
                checklist.attribute_graph = ingest_attribute_ontology(&records)?;
            }
            if let Some(path) = definitions {
                checklist.definitions =
                    crate::checklist::DefinitionDictionary::from_tsv(&std::fs::read_to_string(
                        path,
                    )?)
                    .map_err(|e| CliError::Pipeline(e.into()))?;
            }
            save_checklist_file(&checklist, &output)?;
            print!("{}", stats_text(&checklist));
            Ok(())
        }
        Command::Stats { checklist } => {
            let checklist = load_checklist_file(&checklist)?;
            print!("{}", stats_text(&checklist));
            Ok(())
        }
        Command::Retrieve { checklist, method, query, event, corpus } => {
            let checklist = load_checklist_file(&checklist)?;
            let corpus_choice = match corpus {
                Some(value) => value.parse().map_err(usage)?,
                None => config.corpus,
            };
            match method.trim().to_lowercase().as_str() {
                "bm25" => {
                    let query_text = match (query, event) {
                        (Some(q), _) => q,
                        (None, Some(event)) => {
                            let client = build_chat_client(config)?;
                            llm_explanation(&client, &event)?
                        }
                        (None, None) => {
                            return Err(usage("bm25 retrieval needs --query or --event"))
                        }
                    };
                    let corpus = corpus_for(&checklist, corpus_choice);
                    if corpus.is_empty() {
                        return Err(usage("checklist has no corpus leaves to index"));
                    }
                    let index = build_bm25_index(&corpus)?;
                    print_hits(&bm25_query(&index, &query_text, config.k));
                    Ok(())
                }
                "embedding" => {
                    let event = event.ok_or_else(|| usage("embedding retrieval needs --event"))?;
                    let client = build_chat_client(config)?;
                    let embed = build_embedder(config)?
                        .ok_or_else(|| usage("embedding retrieval needs an embedding provider"))?;
                    let (characteristics, _) = crate::annotate::extract_characteristics(
                        &client,
                        crate::prompts::AnnotationSubject::Event,
                        &event,
                        config.annotate_retry_limit,
                    )?;
                    let retrieval = embedding_retrieve(
                        &checklist,
                        &event,
                        &characteristics,
                        embed.as_ref(),
                        config.k,
                        EmbeddingRetrieveConfig { role_tau: config.role_tau, ..Default::default() },
                    )?;
                    for note in &retrieval.notes {
                        eprintln!("note: {note}");
                    }
                    if retrieval.fallback {
                        eprintln!("note: no usable roles, ranked the whole norm corpus");
                    }
                    print_hits(&retrieval.hits);
                    Ok(())
                }
                "agent" => {
                    let event = event.ok_or_else(|| usage("agent retrieval needs --event"))?;
                    let client = build_chat_client(config)?;
                    print_hits(&agent_retrieve(&client, &checklist, &event, config.k)?);
                    Ok(())
                }
                other => Err(usage(format!(
                    "unknown retrieval method `{other}` (expected bm25, embedding, or agent)"
                ))),
            }
        }
        Command::Judge { method, cases, checklist, output } => {
            let methods: Vec<Method> = if method.trim().eq_ignore_ascii_case("all") {
                METHODS.to_vec()
            } else {
                vec![method.parse().map_err(usage)?]
            };
            let (case_records, _) = crate::eval::load_cases_file(&cases)?;
            let loaded_checklist = match &checklist {
                Some(path) => Some(load_checklist_file(path)?),
                None => None,
            };
            if methods.iter().any(Method::is_rag) && loaded_checklist.is_none() {
                return Err(usage("retrieval-augmented methods need --checklist"));
            }
            let client = build_chat_client(config)?;
            let embedder = build_embedder(config)?;
            if methods.contains(&Method::CiEsContent) && embedder.is_none() {
                return Err(usage(
                    "ci-es-content needs --mock-embeddings or --embed-endpoint",
                ));
            }

            // Resume: keep prior judgments, only judge what is missing.
            let mut judgments: Vec<Judgment> = if output.exists() {
                let file = std::fs::File::open(&output)?;
                crate::eval::load_judgments(&mut std::io::BufReader::new(file))?
            } else {
                Vec::new()
            };
            let done: BTreeSet<(Method, String)> =
                judgments.iter().map(|j| (j.method, j.case_id.clone())).collect();

            let ctx = JudgeContext {
                chat: &client,
                embed: embedder.as_deref(),
                checklist: loaded_checklist.as_ref(),
                config: JudgeConfig {
                    k: config.k,
                    role_tau: config.role_tau,
                    max_reference_chars: config.max_reference_chars,
                    retry_limit: config.annotate_retry_limit,
                    corpus: config.corpus,
                },
            };
            for method in &methods {
                let pending: Vec<_> = case_records
                    .iter()
                    .filter(|c| !done.contains(&(*method, c.id.clone())))
                    .cloned()
                    .collect();
                if pending.is_empty() {
                    println!("{method}: all {} cases already judged", case_records.len());
                    continue;
                }
                let fresh = judge_cases(*method, &ctx, &pending, config.max_parallel)?;
                println!("{method}: judged {} cases", fresh.len());
                judgments.extend(fresh);
            }
            let mut file = std::fs::File::create(&output)?;
            crate::eval::save_judgments(&judgments, &mut file)?;
            Ok(())
        }
        Command::Evaluate { judgments, cases, format, output } => {
            let (case_records, _) = crate::eval::load_cases_file(&cases)?;
            let file = std::fs::File::open(&judgments)?;
            let judgment_records =
                crate::eval::load_judgments(&mut std::io::BufReader::new(file))?;
            let report = crate::eval::evaluate(&judgment_records, &case_records)?;
            let rendered = match format.trim().to_lowercase().as_str() {
                "text" | "text-table" => {
                    crate::eval::render_report(&report, crate::eval::ReportFormat::TextTable)
                }
                "json" | "structured" => {
                    crate::eval::render_report(&report, crate::eval::ReportFormat::Structured)
                }
                other => return Err(usage(format!("unknown format `{other}`"))),
            };
            match output {
                Some(path) => std::fs::write(path, rendered)?,
                None => print!("{rendered}"),
            }
            Ok(())
        }
    }
}
