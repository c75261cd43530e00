//! `mlsysml` command-line front end.
//!
//! Exit codes: 0 clean, 1 warnings only, 2 errors (model or pipeline),
//! 3 I/O or parse failure.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mlsysml::ast::Model;
use mlsysml::codegen::{builtin_templates_dir, generate, CodegenOptions, TemplateSet};
use mlsysml::diagnostics::{explain, Diagnostic, Severity};
use mlsysml::interpreter::{run, RunOptions, StepOutput, DEFAULT_SEED};
use mlsysml::profile::{default_registry, load_profile, StereotypeRegistry};
use mlsysml::scheduler::{schedule, PipelinePlan};
use mlsysml::validator::{CustomCodePolicy, UnknownOptionalPolicy, ValidationConfig};

#[derive(Parser)]
#[command(name = "mlsysml", version, about = "Validate, plan, generate and run MLSysML models")]
struct Cli {
    /// Stereotype profile; the built-in default profile when omitted.
    #[arg(long, global = true, env = "MLSYSML_PROFILE")]
    profile: Option<PathBuf>,
    /// Diagnostic output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Error,
    Warn,
    Allow,
}

#[derive(Args)]
struct ModelArgs {
    /// Model file (`.mlsysml`).
    #[arg(value_name = "MODEL", required_unless_present = "model_flag")]
    model: Option<PathBuf>,
    #[arg(long = "model", value_name = "MODEL", conflicts_with = "model")]
    model_flag: Option<PathBuf>,
    /// How the CustomCode stereotype is treated.
    #[arg(long, value_enum)]
    custom_code_policy: Option<Policy>,
    /// Accept CustomCode: validation warns instead of failing, and code
    /// generation renders it.
    #[arg(long)]
    allow_custom_code: bool,
    /// Do not warn about values that match no stereotype parameter.
    #[arg(long)]
    allow_unknown_values: bool,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ModelArgs {
    fn path(&self) -> &Path {
        self.model
            .as_deref()
            .or(self.model_flag.as_deref())
            .expect("clap requires a model")
    }

    fn config(&self) -> ValidationConfig {
        let custom_code_policy = match (self.custom_code_policy, self.allow_custom_code) {
            (Some(Policy::Error), _) => CustomCodePolicy::Error,
            (Some(Policy::Warn), _) | (None, true) => CustomCodePolicy::Warn,
            (Some(Policy::Allow), _) => CustomCodePolicy::Allow,
            (None, false) => CustomCodePolicy::Error,
        };
        ValidationConfig {
            custom_code_policy,
            unknown_optional_attrs: if self.allow_unknown_values {
                UnknownOptionalPolicy::Allow
            } else {
                UnknownOptionalPolicy::Warn
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a model and print its diagnostics.
    Validate(ModelArgs),
    /// Print the execution plan as JSON.
    Plan(ModelArgs),
    /// Print the block, dataflow and workflow graph in DOT.
    Graph(ModelArgs),
    /// Generate a Python script or notebook.
    Gen {
        #[command(flatten)]
        model: ModelArgs,
        /// Template target directory name.
        #[arg(long, default_value = "py-script")]
        target: String,
        /// Template root; the shipped templates when omitted.
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Execute the plan with the reference interpreter and print metrics JSON.
    Run {
        #[command(flatten)]
        model: ModelArgs,
        /// Directory that model file paths are resolved against.
        #[arg(long, default_value = ".")]
        data_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Also write every table-valued step output as `<block>.csv` here.
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// Describe a diagnostic code.
    Explain { code: String },
}

const EXIT_CLEAN: u8 = 0;
const EXIT_WARNINGS: u8 = 1;
const EXIT_ERRORS: u8 = 2;
const EXIT_IO: u8 = 3;

/// A failure with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn io(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_IO,
        error: error.into(),
    }
}

fn model_error(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_ERRORS,
        error: error.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn registry(cli: &Cli) -> Result<StereotypeRegistry, Failure> {
    match &cli.profile {
        None => Ok(default_registry()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read profile {}", path.display()))
                .map_err(io)?;
            load_profile(&text)
                .with_context(|| format!("invalid profile {}", path.display()))
                .map_err(io)
        }
    }
}

/// A parsed, validated model plus the severity-derived exit code.
struct Loaded {
    model: Model,
    diagnostics: Vec<Diagnostic>,
    status: u8,
}

fn print_diagnostics(diags: &[Diagnostic], format: Format, to_stdout: bool) {
    let lines: Vec<String> = diags
        .iter()
        .map(|d| match format {
            Format::Text => d.to_string(),
            Format::Json => d.to_json(),
        })
        .collect();
    for line in lines {
        if to_stdout {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

fn status_of(diags: &[Diagnostic]) -> u8 {
    if diags.iter().any(|d| d.severity == Severity::Error) {
        EXIT_ERRORS
    } else if diags.iter().any(|d| d.severity == Severity::Warning) {
        EXIT_WARNINGS
    } else {
        EXIT_CLEAN
    }
}

/// Reads, parses and validates. Diagnostics go to stdout for `validate`
/// and to stderr otherwise; parse failures end the command with exit 3.
fn load(
    cli: &Cli,
    args: &ModelArgs,
    reg: &StereotypeRegistry,
    to_stdout: bool,
) -> Result<Loaded, Failure> {
    let path = args.path();
    let source = fs::read_to_string(path)
        .with_context(|| format!("cannot read model {}", path.display()))
        .map_err(io)?;
    let checked = mlsysml::check_source(&source, &path.to_string_lossy(), reg, &args.config());
    print_diagnostics(&checked.diagnostics, cli.format, to_stdout);
    let model = checked.model.ok_or_else(|| io(anyhow!("{} does not parse", path.display())))?;
    Ok(Loaded {
        status: status_of(&checked.diagnostics),
        model,
        diagnostics: checked.diagnostics,
    })
}

/// Loads a model that must be free of errors and schedules it.
fn plan(cli: &Cli, args: &ModelArgs, reg: &StereotypeRegistry) -> Result<(PipelinePlan, u8), Failure> {
    let loaded = load(cli, args, reg, false)?;
    if loaded.status == EXIT_ERRORS {
        let n = loaded.diagnostics.iter().filter(|d| d.is_error()).count();
        return Err(model_error(anyhow!("the model has {n} error(s)")));
    }
    let mut plan = schedule(&loaded.model, reg).map_err(model_error)?;
    // Provenance names the file, not the path it was reached by, so output
    // does not depend on the working directory.
    plan.source_model = args
        .path()
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok((plan, loaded.status))
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, content)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(io),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(io)
        }
    }
}

fn execute(cli: &Cli) -> Result<u8, Failure> {
    if let Command::Explain { code } = &cli.command {
        return match explain(code) {
            Ok(text) => {
                println!("{text}");
                Ok(EXIT_CLEAN)
            }
            Err(e) => Err(model_error(e)),
        };
    }
    let reg = registry(cli)?;
    match &cli.command {
        Command::Validate(args) => Ok(load(cli, args, &reg, true)?.status),
        Command::Plan(args) => {
            let (plan, status) = plan(cli, args, &reg)?;
            emit(args.out.as_deref(), &format!("{}\n", plan.to_json()))?;
            Ok(status)
        }
        Command::Graph(args) => {
            let loaded = load(cli, args, &reg, false)?;
            emit(args.out.as_deref(), &mlsysml::graph::to_dot(&loaded.model))?;
            Ok(loaded.status)
        }
        Command::Gen {
            model: args,
            target,
            templates,
        } => {
            let (plan, status) = plan(cli, args, &reg)?;
            let root = templates.clone().unwrap_or_else(builtin_templates_dir);
            let set = TemplateSet::load(&root, target).map_err(io)?;
            let options = CodegenOptions {
                allow_custom_code: !matches!(args.config().custom_code_policy, CustomCodePolicy::Error),
            };
            let artifact = generate(&plan, &reg, &set, &options).map_err(model_error)?;
            emit(args.out.as_deref(), &artifact.content)?;
            Ok(status)
        }
        Command::Run {
            model: args,
            data_dir,
            seed,
            tables,
        } => {
            let (plan, status) = plan(cli, args, &reg)?;
            let options = RunOptions {
                data_dir: data_dir.clone(),
                seed: *seed,
            };
            let result = run(&plan, &reg, &options).map_err(|e| match e {
                mlsysml::interpreter::RunError::Io { .. } => io(e),
                other => model_error(other),
            })?;
            for s in &result.skipped {
                eprintln!("skipped {}: {}", s.block, s.reason);
            }
            if let Some(dir) = tables {
                fs::create_dir_all(dir)
                    .with_context(|| format!("cannot create {}", dir.display()))
                    .map_err(io)?;
                for (block, output) in &result.outputs {
                    let parts: Vec<(String, &mlsysml::interpreter::Table)> = match output {
                        StepOutput::Table(t) => vec![(block.clone(), t)],
                        StepOutput::Split { train, test } => {
                            vec![(format!("{block}.train"), train), (format!("{block}.test"), test)]
                        }
                        _ => Vec::new(),
                    };
                    for (name, table) in parts {
                        let path = dir.join(format!("{name}.csv"));
                        fs::write(&path, table.to_csv())
                            .with_context(|| format!("cannot write {}", path.display()))
                            .map_err(io)?;
                    }
                }
            }
            emit(args.out.as_deref(), &result.metrics_json())?;
            Ok(status)
        }
        Command::Explain { .. } => unreachable!("handled above"),
    }
}
