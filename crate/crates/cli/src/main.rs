mod session;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anonsql_core::executor::{AnswerTable, PreparedQuery};
use anonsql_core::{explain, Engine, Error, Table};
use anonsql_harness::{
    generate, run_averaging, run_difference, run_split_averaging, salts, AttackReport, DifferenceAttack,
    FixtureSpec, HarnessError, SplitAveraging,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use session::{load_table, CliConfig, Format};

#[derive(Parser, Debug)]
#[command(name = "anonsql", version, about = "Anonymizing SQL over CSV tables")]
struct Cli {
    /// Config file of `key = value` lines (salt, uid_column, format, table.NAME).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format for query answers.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Extra table as NAME=CSV; the schema is read from the CSV path with a `.schema` extension.
    #[arg(long = "table", global = true, value_name = "NAME=CSV")]
    tables: Vec<String>,
    /// Write the seed vectors of a query's noise layers to this file (JSON lines).
    #[arg(long, global = true, value_name = "PATH")]
    seed_vectors: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a CSV file against its schema and summarize it.
    Load {
        csv: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Run one query; `-` reads it from standard input.
    Query { sql: String },
    /// Read `;`-terminated queries from standard input (`\explain`, `\d`, `\q`).
    Repl,
    /// Describe how a query's answer would be anonymized.
    Explain { sql: String },
    /// Run an attack scenario on a generated fixture and print a JSON report.
    Attack(AttackArgs),
    /// Write the synthetic HR table used by the attacks as CSV plus schema.
    Generate {
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AttackKind {
    Averaging,
    Split,
    Difference,
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[arg(value_enum)]
    kind: AttackKind,
    /// Split pairs (split).
    #[arg(long, default_value_t = 50)]
    pairs: usize,
    /// Number of salts (split).
    #[arg(long, default_value_t = 200)]
    salts: usize,
    /// Repetitions (averaging) or fixtures (difference).
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Fixture seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Query for the averaging attack.
    #[arg(long, default_value = "SELECT count(*) FROM hr WHERE dept = 'CS'")]
    query: String,
    /// Split without the persistent `dept = 'CS'` condition.
    #[arg(long)]
    no_base: bool,
    /// Generate fixtures without the victim (difference).
    #[arg(long)]
    no_victim: bool,
    /// Disable static noise layers.
    #[arg(long)]
    no_static: bool,
    /// Disable dynamic noise layers.
    #[arg(long)]
    no_dynamic: bool,
}

#[derive(Debug)]
enum Failure {
    Engine(Error),
    Harness(HarnessError),
}

impl Failure {
    fn code(&self) -> &'static str {
        match self {
            Failure::Engine(e) => e.code(),
            Failure::Harness(e) => e.code(),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Engine(e) => e.fmt(f),
            Failure::Harness(e) => e.fmt(f),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Harness(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Engine(e.into())
    }
}

type Outcome<T> = Result<T, Failure>;

fn render(answer: &AnswerTable, format: Format) -> Result<String, Error> {
    Ok(match format {
        Format::Csv => answer.to_csv()?,
        Format::Json => answer.to_json()? + "\n",
        Format::Table => answer.to_pretty() + "\n",
    })
}

fn settings(cli: &Cli) -> Outcome<CliConfig> {
    let mut config = match &cli.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    config.apply_env();
    for t in &cli.tables {
        let (name, path) = t.split_once('=').ok_or_else(|| Error::Config {
            message: format!("--table expects NAME=CSV, got `{t}`"),
        })?;
        config.tables.insert(name.to_string(), PathBuf::from(path));
    }
    if cli.format.is_some() {
        config.format = cli.format;
    }
    Ok(config)
}

fn read_sql(sql: &str) -> Outcome<String> {
    if sql == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)?;
        Ok(s)
    } else {
        Ok(sql.to_string())
    }
}

fn write_seed_vectors(path: &Path, prepared: &PreparedQuery, engine: &Engine) -> Outcome<()> {
    let buckets = prepared.materialize(engine)?;
    let mut text = String::new();
    for v in prepared.seed_vectors(&buckets, &engine.config().salt) {
        text.push_str(&serde_json::to_string(&v).expect("seed vectors serialize"));
        text.push('\n');
    }
    let mut options = std::fs::OpenOptions::new();
    options.write(true).create(true).truncate(true);
    #[cfg(unix)]
    std::os::unix::fs::OpenOptionsExt::mode(&mut options, 0o600);
    options.open(path)?.write_all(text.as_bytes())?;
    Ok(())
}

fn run_query(engine: &Engine, sql: &str, format: Format, seeds: Option<&Path>) -> Outcome<String> {
    let prepared = engine.prepare(sql)?;
    if let Some(path) = seeds {
        write_seed_vectors(path, &prepared, engine)?;
    }
    Ok(render(&prepared.run(engine, engine.config())?, format)?)
}

fn explain_query(tables: Vec<Table>, sql: &str) -> Outcome<String> {
    let prepared = PreparedQuery::new(sql, &tables)?;
    Ok(explain(&prepared.validated)?)
}

fn attack(args: &AttackArgs, config: &CliConfig) -> Outcome<AttackReport> {
    let salt = config.salt.clone().unwrap_or_else(|| "attack".to_string());
    let mut engine_config = anonsql_core::EngineConfig::new(salt)?;
    engine_config.layer_toggles.static_layers = !args.no_static;
    engine_config.layer_toggles.dynamic_layers = !args.no_dynamic;
    let fixture_engine = || {
        let mut e = Engine::new(engine_config.clone());
        e.add_table(generate(&FixtureSpec::with_seed(args.seed)).table);
        e
    };
    Ok(match args.kind {
        AttackKind::Averaging => run_averaging(&fixture_engine(), &args.query, args.trials)?,
        AttackKind::Split => {
            let mut a = SplitAveraging::standard(args.pairs, salts("split", args.salts));
            if args.no_base {
                a.base = None;
            }
            run_split_averaging(&fixture_engine(), &a)?
        }
        AttackKind::Difference => {
            let mut a = DifferenceAttack::new(args.trials, args.seed);
            a.victim_present = !args.no_victim;
            run_difference(&engine_config, &a)?
        }
    })
}

fn repl_statement(engine: &Engine, statement: &str, format: Format, out: &mut impl Write) -> Outcome<()> {
    let sql = statement.trim().trim_end_matches(';');
    let result = match sql.strip_prefix("\\explain ") {
        Some(rest) => explain_query(engine.tables().cloned().collect(), rest),
        None => run_query(engine, sql, format, None),
    };
    match result {
        Ok(text) => write!(out, "{text}")?,
        Err(e) => eprintln!("error[{}]: {e}", e.code()),
    }
    out.flush()?;
    Ok(())
}

/// Statements end with `;`; whatever is pending at end of input runs too.
fn repl(config: &CliConfig, format: Format) -> Outcome<()> {
    let engine = config.engine()?;
    let mut out = std::io::stdout().lock();
    let mut pending = String::new();
    for line in std::io::stdin().lock().lines() {
        let line = line?;
        let trimmed = line.trim();
        if pending.is_empty() {
            match trimmed {
                "" => continue,
                "\\q" | "quit" | "exit" => return Ok(()),
                "\\d" => {
                    for t in engine.tables() {
                        writeln!(out, "{} ({} rows)", t.name(), t.rows().len())?;
                    }
                    continue;
                }
                _ => {}
            }
        }
        pending.push_str(&line);
        pending.push('\n');
        if trimmed.ends_with(';') {
            repl_statement(&engine, &std::mem::take(&mut pending), format, &mut out)?;
        }
    }
    if !pending.trim().is_empty() {
        repl_statement(&engine, &pending, format, &mut out)?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Outcome<()> {
    let config = settings(cli)?;
    let format = config.format.unwrap_or(Format::Csv);
    let mut out = std::io::stdout().lock();
    match &cli.command {
        Command::Load { csv, schema, name } => {
            let t = load_table(csv, schema.as_deref(), name.as_deref(), config.uid_column.as_deref())?;
            let uids = anonsql_core::table::distinct_uids(t.rows(), t.uid_index()).len();
            let columns: Vec<String> =
                t.schema().columns().iter().map(|(n, ty)| format!("{n}:{ty}")).collect();
            writeln!(
                out,
                "table {}: {} rows, {} distinct users, uid column {}, columns {}",
                t.name(),
                t.rows().len(),
                uids,
                t.schema().uid_name(),
                columns.join(" ")
            )?;
        }
        Command::Query { sql } => {
            let engine = config.engine()?;
            out.write_all(run_query(&engine, &read_sql(sql)?, format, cli.seed_vectors.as_deref())?.as_bytes())?;
        }
        Command::Explain { sql } => {
            out.write_all(explain_query(config.load_tables()?, &read_sql(sql)?)?.as_bytes())?;
        }
        Command::Repl => {
            drop(out);
            repl(&config, config.format.unwrap_or(Format::Table))?;
        }
        Command::Attack(args) => {
            writeln!(out, "{}", attack(args, &config)?.to_json())?;
        }
        Command::Generate { out: path, seed } => {
            let table = generate(&FixtureSpec::with_seed(*seed)).table;
            table.write_csv(std::fs::File::create(path)?)?;
            let schema = session::default_schema_path(path);
            std::fs::write(&schema, table.schema().to_sidecar())?;
            writeln!(out, "wrote {} and {}", path.display(), schema.display())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
