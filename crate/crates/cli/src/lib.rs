//! The `mathlog` command line: an interactive top level, batch goal runs,
//! lesson management and the HTTP server.
//!
//! Exit codes: 0 when a goal has at least one answer (or a command
//! succeeds), 1 when a goal fails cleanly or a lesson check fails, 2 on
//! any error.

use std::cell::RefCell;
use std::ffi::OsString;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::rc::Rc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use mathlog_core::lessons::{self, LessonPack};
use mathlog_core::{read_term, Database, EngineLimits, Error, SolveOptions, Solutions};
use serde_json::{Map, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mathlog", version, about = "A small logic-programming engine for math lessons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Interactive top level (the default).
    Repl(ReplArgs),
    /// Runs one goal and prints its answers.
    Run(RunArgs),
    /// Lists, shows, checks or exports the bundled lessons.
    #[command(subcommand)]
    Lesson(LessonCommand),
    /// Serves the HTTP query gateway.
    Serve(ServeArgs),
}

#[derive(Debug, Default, Args)]
pub struct ProgramArgs {
    /// Lesson pack consulted before any files.
    #[arg(long)]
    pub lesson: Option<String>,
    /// Program files consulted in order.
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct LimitArgs {
    /// Inference step budget per query.
    #[arg(long, env = "MATHLOG_MAX_STEPS")]
    pub max_steps: Option<u64>,
    /// Goal depth limit.
    #[arg(long, env = "MATHLOG_MAX_DEPTH")]
    pub max_depth: Option<usize>,
    /// Wall-clock limit per query, in milliseconds.
    #[arg(long, env = "MATHLOG_TIMEOUT_MS")]
    pub timeout_ms: Option<u64>,
    /// Refuse to bind a variable to a term containing it.
    #[arg(long)]
    pub occurs_check: bool,
}

impl LimitArgs {
    fn options(&self) -> SolveOptions {
        let defaults = EngineLimits::default();
        let limits = EngineLimits {
            max_steps: self.max_steps.unwrap_or(defaults.max_steps),
            max_depth: self.max_depth.unwrap_or(defaults.max_depth),
            max_solutions: None,
            timeout: self.timeout_ms.map(Duration::from_millis),
        };
        SolveOptions {
            occurs_check: self.occurs_check,
            ..SolveOptions::with_limits(limits)
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct ReplArgs {
    #[command(flatten)]
    pub program: ProgramArgs,
    #[command(flatten)]
    pub limits: LimitArgs,
    /// Print the engine trace to stderr.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub program: ProgramArgs,
    /// Goal to solve, ending in `.`.
    #[arg(short, long)]
    pub goal: String,
    /// Answers to print; 0 prints them all.
    #[arg(short = 'n', long = "max-solutions", default_value_t = 0)]
    pub max_solutions: usize,
    /// Print the engine trace to stderr.
    #[arg(long)]
    pub trace: bool,
    /// One JSON object of bindings per answer.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub limits: LimitArgs,
}

#[derive(Debug, Subcommand)]
pub enum LessonCommand {
    /// Lesson names and descriptions.
    List,
    /// Prints a lesson's program.
    Show { name: String },
    /// Runs canonical goals for one lesson, or all of them.
    Check { name: Option<String> },
    /// Writes every lesson program to `<dir>/<name>.pl`.
    Export { dir: PathBuf },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

/// Where a command reads and writes. Shared handles let the trace sink
/// write to `err` while a query is running.
pub struct Io {
    pub input: Box<dyn BufRead>,
    pub out: Rc<RefCell<dyn Write>>,
    pub err: Rc<RefCell<dyn Write>>,
}

impl Io {
    pub fn std() -> Io {
        Io {
            input: Box::new(io::BufReader::new(io::stdin())),
            out: Rc::new(RefCell::new(io::stdout())),
            err: Rc::new(RefCell::new(io::stderr())),
        }
    }
}

/// Runs a command with in-memory streams; returns the exit code, stdout
/// and stderr.
pub fn run_captured<I, T>(args: I, stdin: &str) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let out = Rc::new(RefCell::new(Vec::<u8>::new()));
    let err = Rc::new(RefCell::new(Vec::<u8>::new()));
    let mut io = Io {
        input: Box::new(io::Cursor::new(stdin.to_string().into_bytes())),
        out: out.clone(),
        err: err.clone(),
    };
    let code = run(args, &mut io);
    drop(io);
    let text = |rc: Rc<RefCell<Vec<u8>>>| String::from_utf8_lossy(&rc.borrow()).into_owned();
    (code, text(out), text(err))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, io: &mut Io) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let stream = if e.use_stderr() { &io.err } else { &io.out };
            let _ = write!(stream.borrow_mut(), "{}", e.render());
            return code;
        }
    };
    let result = match cli.command.unwrap_or(Command::Repl(ReplArgs::default())) {
        Command::Repl(args) => repl(&args, io),
        Command::Run(args) => run_goal(&args, io),
        Command::Lesson(cmd) => lesson(&cmd, io),
        Command::Serve(args) => serve(&args, io),
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(io.err.borrow_mut(), "error: {e}");
        EXIT_ERROR
    })
}

fn find_lesson(name: &str) -> io::Result<&'static LessonPack> {
    lessons::find(name).ok_or_else(|| {
        let names: Vec<&str> = lessons::catalog().map(|p| p.name).collect();
        io::Error::new(
            io::ErrorKind::NotFound,
            format!("unknown lesson `{name}` (known: {})", names.join(", ")),
        )
    })
}

/// Consults the lesson, then each file. Syntax errors are reported with
/// the file name and position.
pub fn load_program(args: &ProgramArgs) -> Result<Database, String> {
    let mut db = match &args.lesson {
        Some(name) => find_lesson(name).map_err(|e| e.to_string())?.database(),
        None => Database::new(),
    };
    for path in &args.files {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        db.consult_text(&text)
            .map_err(|e| describe_error(Some(path), &e))?;
    }
    Ok(db)
}

fn describe_error(path: Option<&Path>, e: &Error) -> String {
    let prefix = path.map(|p| format!("{}:", p.display())).unwrap_or_default();
    match e {
        Error::Read(errs) => errs
            .0
            .iter()
            .map(|r| format!("{prefix}{}:{}: syntax error: {}", r.pos.line, r.pos.column, r.kind))
            .collect::<Vec<_>>()
            .join("\n"),
        Error::Engine(e) if path.is_some() => format!("{prefix} {e}"),
        Error::Engine(e) => e.to_string(),
    }
}

fn with_trace<'db>(sols: Solutions<'db>, on: bool, err: &Rc<RefCell<dyn Write>>) -> Solutions<'db> {
    if !on {
        return sols;
    }
    let err = Rc::clone(err);
    sols.with_trace_sink(move |line| {
        let _ = writeln!(err.borrow_mut(), "{line}");
    })
}

fn bindings_json(answer: &mathlog_core::Answer) -> String {
    let map: Map<String, Value> = answer
        .formatted()
        .into_iter()
        .map(|(n, v)| (n, Value::String(v)))
        .collect();
    Value::Object(map).to_string()
}

fn run_goal(args: &RunArgs, io: &mut Io) -> io::Result<i32> {
    let db = match load_program(&args.program) {
        Ok(db) => db,
        Err(msg) => {
            writeln!(io.err.borrow_mut(), "{msg}")?;
            return Ok(EXIT_ERROR);
        }
    };
    let sols = match db.solve_text(&args.goal, args.limits.options()) {
        Ok(s) => s,
        Err(e) => {
            writeln!(io.err.borrow_mut(), "{}", describe_error(None, &e))?;
            return Ok(EXIT_ERROR);
        }
    };
    let mut sols = with_trace(sols, args.trace, &io.err);
    let mut count = 0usize;
    loop {
        if args.max_solutions != 0 && count == args.max_solutions {
            break;
        }
        let next = sols.next_solution();
        // Program output comes first; in JSON mode it goes to stderr so
        // stdout stays one object per line.
        let text = sols.take_output();
        if !text.is_empty() {
            let stream = if args.json { &io.err } else { &io.out };
            write!(stream.borrow_mut(), "{text}")?;
        }
        match next {
            Ok(Some(answer)) => {
                count += 1;
                let line = if args.json {
                    bindings_json(&answer)
                } else {
                    answer.to_line()
                };
                writeln!(io.out.borrow_mut(), "{line}")?;
            }
            Ok(None) => break,
            Err(e) => {
                writeln!(io.err.borrow_mut(), "error: {e}")?;
                return Ok(EXIT_ERROR);
            }
        }
    }
    io.out.borrow_mut().flush()?;
    Ok(if count > 0 { EXIT_OK } else { EXIT_NO })
}

/// Reads one goal, which may span lines, up to a line ending in `.`.
/// `None` at end of input.
fn read_goal(io: &mut Io) -> io::Result<Option<String>> {
    let mut goal = String::new();
    loop {
        let prompt = if goal.is_empty() { "?- " } else { "|    " };
        write!(io.out.borrow_mut(), "{prompt}")?;
        io.out.borrow_mut().flush()?;
        let mut line = String::new();
        if io.input.read_line(&mut line)? == 0 {
            return Ok((!goal.trim().is_empty()).then_some(goal));
        }
        goal.push_str(&line);
        let trimmed = goal.trim_end();
        if trimmed.is_empty() {
            goal.clear();
        } else if trimmed.ends_with('.') {
            return Ok(Some(goal));
        }
    }
}

fn repl(args: &ReplArgs, io: &mut Io) -> io::Result<i32> {
    let db = match load_program(&args.program) {
        Ok(db) => db,
        Err(msg) => {
            writeln!(io.err.borrow_mut(), "{msg}")?;
            return Ok(EXIT_ERROR);
        }
    };
    while let Some(goal) = read_goal(io)? {
        if matches!(read_term(&goal), Ok(t) if t.term.is_atom("halt")) {
            break;
        }
        let sols = match db.solve_text(&goal, args.limits.options()) {
            Ok(s) => s,
            Err(e) => {
                writeln!(io.err.borrow_mut(), "{}", describe_error(None, &e))?;
                continue;
            }
        };
        let mut sols = with_trace(sols, args.trace, &io.err);
        loop {
            let next = sols.next_solution();
            let text = sols.take_output();
            write!(io.out.borrow_mut(), "{text}")?;
            match next {
                Ok(Some(answer)) => {
                    writeln!(io.out.borrow_mut(), "{}", answer.to_line())?;
                    io.out.borrow_mut().flush()?;
                    let mut reply = String::new();
                    io.input.read_line(&mut reply)?;
                    if reply.trim() != ";" {
                        break;
                    }
                }
                Ok(None) => {
                    writeln!(io.out.borrow_mut(), "false.")?;
                    break;
                }
                Err(e) => {
                    writeln!(io.err.borrow_mut(), "error: {e}")?;
                    break;
                }
            }
        }
    }
    io.out.borrow_mut().flush()?;
    Ok(EXIT_OK)
}

fn lesson(cmd: &LessonCommand, io: &mut Io) -> io::Result<i32> {
    let mut out = io.out.borrow_mut();
    match cmd {
        LessonCommand::List => {
            for p in lessons::catalog() {
                writeln!(out, "{:<12} {}", p.name, p.description)?;
            }
            Ok(EXIT_OK)
        }
        LessonCommand::Show { name } => {
            write!(out, "{}", find_lesson(name)?.program)?;
            Ok(EXIT_OK)
        }
        LessonCommand::Check { name } => {
            let packs: Vec<&LessonPack> = match name {
                Some(n) => vec![find_lesson(n)?],
                None => lessons::catalog().collect(),
            };
            let mut failed = 0;
            for pack in packs {
                for report in pack.check() {
                    let verdict = if report.passed { "PASS" } else { "FAIL" };
                    writeln!(out, "{verdict} {}: {}", pack.name, report.goal)?;
                    if !report.passed {
                        failed += 1;
                        for line in report.detail.lines() {
                            writeln!(out, "    {line}")?;
                        }
                    }
                }
            }
            Ok(if failed == 0 { EXIT_OK } else { EXIT_NO })
        }
        LessonCommand::Export { dir } => {
            std::fs::create_dir_all(dir)?;
            for p in lessons::catalog() {
                let path = dir.join(p.file_name());
                std::fs::write(&path, p.program)?;
                writeln!(out, "{}", path.display())?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn serve(args: &ServeArgs, io: &mut Io) -> io::Result<i32> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port)).await?;
        writeln!(
            io.err.borrow_mut(),
            "listening on http://{}",
            listener.local_addr()?
        )?;
        mathlog_gateway::serve(listener).await
    })?;
    Ok(EXIT_OK)
}
