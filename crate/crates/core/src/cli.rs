//! Command-line driver. `run` does all the work so that it can be tested
//! without spawning a process.
//!
//! Exit codes: 0 ok, 1 usage, 2 invalid input, 3 internal failure.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::engine::Engine;
use crate::explain::{ExplainConfig, ExplainMode, Explainer};
use crate::factors::Thresholds;
use crate::intake::{parse_questionnaire_str, HealthIndicators};
use crate::risk::RiskCalibration;
use crate::service::{serve, ServiceConfig};
use crate::verification::{dus_from_mean, simulate, survey, SurveyMatrix};

#[derive(Parser, Debug)]
#[command(
    name = "cardioprev",
    version,
    about = "Cardiovascular prevention recommendations from a 17-item questionnaire"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Factor vector, classes and risk category.
    Assess(PipelineArgs),
    /// Full four-part recommendation.
    Recommend {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, value_enum, default_value_t = ExplainArg::Fallback)]
        explain: ExplainArg,
    },
    /// Checks a catalog file for completeness (the built-in one by default).
    ValidateCatalog {
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Runs the postcondition checks over generated records.
    Simulate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        /// Skip the sweep over all 8192 factor vectors.
        #[arg(long)]
        no_exhaustive: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Satisfaction scores (and alpha, given raw scores) from a survey file.
    SurveyScore {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// HTTP service.
    Serve {
        #[arg(long)]
        listen: Option<SocketAddr>,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        region: Option<String>,
        /// JSON file with any of: listen, store_path, catalog_path,
        /// calibration_path, region. Flags and environment win over it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Questionnaire file, or `-` for stdin.
    #[arg(long = "in", conflicts_with = "json", required_unless_present = "json")]
    pub input: Option<String>,
    /// Questionnaire given inline.
    #[arg(long)]
    pub json: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Risk region: low, moderate, high or very_high.
    #[arg(long)]
    pub region: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExplainArg {
    Llm,
    Fallback,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Invalid(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Invalid(m) | CliError::Internal(m) => m,
        }
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(cli.command, stdin, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn io_internal(e: std::io::Error) -> CliError {
    CliError::Internal(format!("write failed: {e}"))
}

fn execute(
    cmd: Command,
    stdin: &mut dyn Read,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    match cmd {
        Command::Assess(args) => {
            let (engine, ind) = prepare(&args, stdin)?;
            let a = engine.assess(&ind);
            match args.format {
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&a).unwrap()),
                Format::Text => write!(out, "{}", assessment_text(&a)),
            }
            .map_err(io_internal)
        }
        Command::Recommend { pipeline, explain } => {
            let (mut engine, ind) = prepare(&pipeline, stdin)?;
            let rec = match explain {
                ExplainArg::Fallback => engine.recommend_fallback(&ind),
                ExplainArg::Llm => {
                    let config = ExplainConfig::from_env();
                    if !config.is_enabled() {
                        let _ = writeln!(
                            err,
                            "note: no explanation endpoint configured, using catalog explanations"
                        );
                    }
                    let explainer = Explainer::from_config(&config)
                        .map_err(|e| CliError::Internal(e.to_string()))?;
                    engine = engine.with_explainer(explainer);
                    runtime()?
                        .block_on(engine.recommend(&ind, ExplainMode::Llm))
                        .map(|o| o.recommendation)
                }
            }
            .map_err(|e| CliError::Invalid(e.to_string()))?;
            match pipeline.format {
                Format::Json => writeln!(out, "{}", rec.to_json()),
                Format::Text => write!(out, "{}", rec.to_text()),
            }
            .map_err(io_internal)
        }
        Command::ValidateCatalog { catalog } => {
            let (name, loaded) = match &catalog {
                Some(p) => (p.display().to_string(), Catalog::from_path(p)),
                None => ("built-in catalog".to_string(), Ok(Catalog::shipped())),
            };
            let c = loaded.map_err(|e| CliError::Invalid(format!("{name}: {e}")))?;
            writeln!(
                out,
                "{name}: version {} ({}), {} items, {} ranks, complete",
                c.version(),
                c.language(),
                c.item_count(),
                c.ranks().iter().count()
            )
            .map_err(io_internal)
        }
        Command::Simulate {
            seed,
            n,
            no_exhaustive,
            format,
        } => {
            if n == 0 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            let report = simulate(&Engine::shipped(), seed, n, !no_exhaustive);
            match format {
                Format::Json => {
                    writeln!(out, "{}", report.to_json()).map_err(io_internal)?;
                    let _ = write!(err, "{report}");
                }
                Format::Text => write!(out, "{report}").map_err(io_internal)?,
            }
            if report.all_passed() {
                Ok(())
            } else {
                Err(CliError::Internal(
                    "postcondition failures, see report".into(),
                ))
            }
        }
        Command::SurveyScore { input, format } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", input.display())))?;
            let scores = score_survey(&text).map_err(CliError::Invalid)?;
            match format {
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&scores).unwrap()),
                Format::Text => write!(out, "{}", scores.to_text()),
            }
            .map_err(io_internal)
        }
        Command::Serve {
            listen,
            store,
            catalog,
            calibration,
            region,
            config,
        } => {
            let mut cfg = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| {
                        CliError::Usage(format!("cannot read {}: {e}", p.display()))
                    })?;
                    serde_json::from_str::<ServiceConfig>(&text)
                        .map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?
                }
                None => ServiceConfig::default(),
            }
            .apply_env()
            .map_err(CliError::Invalid)?;
            if let Some(l) = listen {
                cfg.listen = l;
            }
            cfg.store_path = store.or(cfg.store_path);
            cfg.catalog_path = catalog.or(cfg.catalog_path);
            cfg.calibration_path = calibration.or(cfg.calibration_path);
            cfg.region = region.or(cfg.region);
            runtime()?
                .block_on(serve(cfg))
                .map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn prepare(
    args: &PipelineArgs,
    stdin: &mut dyn Read,
) -> Result<(Engine, HealthIndicators), CliError> {
    let text = match (&args.input, &args.json) {
        (_, Some(inline)) => inline.clone(),
        (Some(p), None) if p == "-" => {
            let mut s = String::new();
            stdin
                .read_to_string(&mut s)
                .map_err(|e| CliError::Usage(format!("cannot read stdin: {e}")))?;
            s
        }
        (Some(p), None) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Usage(format!("cannot read {p}: {e}")))?,
        (None, None) => return Err(CliError::Usage("give --in or --json".into())),
    };
    let ind = parse_questionnaire_str(&text).map_err(|e| CliError::Invalid(e.to_string()))?;
    let calibration = match &args.calibration {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            RiskCalibration::from_json_str(&text, args.region.as_deref())
        }
        None => match &args.region {
            Some(r) => RiskCalibration::shipped_region(r),
            None => Ok(RiskCalibration::shipped()),
        },
    }
    .map_err(|e| CliError::Invalid(e.to_string()))?;
    let catalog = match &args.catalog {
        Some(p) => {
            Catalog::from_path(p).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?
        }
        None => Catalog::shipped(),
    };
    Ok((
        Engine::new(Thresholds::default(), calibration, catalog),
        ind,
    ))
}

fn assessment_text(a: &crate::engine::Assessment) -> String {
    let p = &a.profile;
    let join = |bits: &[u8]| bits.iter().map(u8::to_string).collect::<Vec<_>>().join(",");
    let present: Vec<String> = p.factors.present().map(|f| f.to_string()).collect();
    let mut s = format!(
        "Factor: ({})\nClass: ({})\nPresent: {}\nSco: {}\n",
        join(&p.factors.bits()),
        join(&p.classes.bits()),
        if present.is_empty() {
            "none".to_string()
        } else {
            present.join(", ")
        },
        u8::from(p.risk.sco),
    );
    if let Some(r) = p.risk.cvrisk {
        s.push_str(&format!("CV risk: {r:.1}%\n"));
    }
    s.push_str(&format!(
        "Category: {}\nNote: {}\n",
        p.risk.category, a.note
    ));
    for w in &a.warnings {
        s.push_str(&format!("Warning: {}\n", w.message));
    }
    s
}

/// Survey file: either per-question means or a raw score matrix
/// (questions by participants).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SurveyInput {
    Matrix {
        #[serde(default)]
        labels: Vec<String>,
        matrix: SurveyMatrix,
    },
    Means {
        items: Vec<MeanItem>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanItem {
    pub label: String,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub label: String,
    pub mean: f64,
    pub dus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyScores {
    pub questions: Vec<QuestionScore>,
    /// Only with raw scores.
    pub alpha: Option<f64>,
}

impl SurveyScores {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for q in &self.questions {
            s.push_str(&format!(
                "{}: mean {:.2}, DUS {:.2}\n",
                q.label, q.mean, q.dus
            ));
        }
        if let Some(a) = self.alpha {
            s.push_str(&format!("Cronbach's alpha: {a:.2}\n"));
        }
        s
    }
}

pub fn score_survey(text: &str) -> Result<SurveyScores, String> {
    let input: SurveyInput = serde_json::from_str(text)
        .map_err(|e| format!("survey file needs `items` (label, mean) or `matrix`: {e}"))?;
    match input {
        SurveyInput::Means { items } => {
            if items.is_empty() {
                return Err(survey::SurveyError::Empty.to_string());
            }
            let questions = items
                .into_iter()
                .map(|i| {
                    dus_from_mean(i.mean)
                        .map(|dus| QuestionScore {
                            label: i.label.clone(),
                            mean: i.mean,
                            dus,
                        })
                        .map_err(|e| format!("{}: {e}", i.label))
                })
                .collect::<Result<_, _>>()?;
            Ok(SurveyScores {
                questions,
                alpha: None,
            })
        }
        SurveyInput::Matrix { labels, matrix } => {
            let questions = (0..matrix.questions())
                .map(|q| {
                    let row = matrix.row(q);
                    QuestionScore {
                        label: labels
                            .get(q)
                            .cloned()
                            .unwrap_or_else(|| format!("Q{}", q + 1)),
                        mean: row.iter().sum::<f64>() / row.len() as f64,
                        dus: survey::dus(row).expect("matrix entries are checked"),
                    }
                })
                .collect();
            let alpha = survey::cronbach_alpha(&matrix).map_err(|e| e.to_string())?;
            Ok(SurveyScores {
                questions,
                alpha: Some(alpha),
            })
        }
    }
}
