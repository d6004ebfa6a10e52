//! The `mhb` operator tool.
//!
//! Exit status: 0 success (and no findings), 1 a validate/conflicts report
//! found something, 2 usage, configuration or operation error. Diagnostics
//! go to stderr as `error: <CODE>: <message>`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mhb_core::{Actor, ConflictScope, Mutation, State, TermId};

use crate::api::{self, AppState};
use crate::bundle::Bundle;
use crate::clock::{Clock, SystemClock};
use crate::config::Config;
use crate::error::{Result, ServiceError};
use crate::identity::{IdentityProvider, LocalCredentials};
use crate::report::{self, Format};
use crate::session::Sessions;
use crate::store::{LocalStore, Store};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FINDINGS: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "mhb", version, about = "Online module handbook: service and operator tool")]
pub struct Cli {
    /// Store directory for offline commands.
    #[arg(long, global = true, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    /// Service configuration; `serve` requires it, other commands take the
    /// store directory from it when `--data-dir` is absent.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API until interrupted.
    Serve,
    /// Load a fixture bundle into an empty store.
    Import {
        #[arg(long, value_name = "FILE")]
        file: PathBuf,
    },
    /// Write the store as a fixture bundle.
    Export {
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Produce a report from the current store.
    Report {
        kind: ReportKind,
        #[command(flatten)]
        params: ReportParams,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Validate,
    Conflicts,
    Catalog,
    Timetable,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ReportParams {
    #[arg(long)]
    pub term: Option<String>,
    #[arg(long)]
    pub program: Option<String>,
    #[arg(long)]
    pub institution: Option<String>,
    #[arg(long)]
    pub person: Option<String>,
    /// Restrict the conflict report to one room.
    #[arg(long)]
    pub room: Option<String>,
    /// `json` or `html` for catalogs and timetables.
    #[arg(long, default_value = "json")]
    pub format: String,
    /// CSV export kind: modules, lectures or persons
    #[arg(long = "kind", alias = "entity", value_name = "KIND")]
    pub csv_kind: Option<String>,
    /// Write here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    init_tracing();
    run(cli)
}

fn init_tracing() {
    let filter = tracing_subscriber::EnvFilter::try_from_env("MHB_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

fn fail(code: &str, msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {code}: {msg}");
    EXIT_ERROR
}

fn fail_with(e: &ServiceError) -> u8 {
    fail(e.code(), e)
}

pub fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Serve => match &cli.config {
            Some(path) => serve(path),
            None => fail("CONFIG_INVALID", "serve needs --config"),
        },
        ref command => {
            let dir = match data_dir(&cli) {
                Ok(d) => d,
                Err(code) => return code,
            };
            offline(&dir, command)
        }
    }
}

fn data_dir(cli: &Cli) -> std::result::Result<PathBuf, u8> {
    if let Some(d) = &cli.data_dir {
        return Ok(d.clone());
    }
    match &cli.config {
        Some(path) => Config::load(path).map(|c| c.data_dir).map_err(|e| fail(e.code(), e)),
        None => Err(fail("CONFIG_INVALID", "give --data-dir or --config")),
    }
}

fn offline(dir: &Path, command: &Command) -> u8 {
    if matches!(command, Command::Import { .. }) {
        if let Err(e) = std::fs::create_dir_all(dir) {
            return fail_with(&e.into());
        }
    } else if !dir.is_dir() {
        return fail("IO_ERROR", format!("store directory {} does not exist", dir.display()));
    }
    let store = match LocalStore::open(dir) {
        Ok(s) => s,
        Err(e) => return fail_with(&e),
    };
    let outcome = match command {
        Command::Import { file } => import(&store, file).map(|()| EXIT_OK),
        Command::Export { out } => {
            let text = Bundle::from_state(&store.snapshot()).to_canonical_json();
            write_atomically(out, text.as_bytes()).map(|()| EXIT_OK)
        }
        Command::Report { kind, params } => render_report(&store.snapshot(), *kind, params).and_then(|(body, code)| {
            emit(params.out.as_deref(), &body)?;
            Ok(code)
        }),
        Command::Serve => unreachable!("handled by run"),
    };
    outcome.unwrap_or_else(|e| fail_with(&e))
}

pub fn import(store: &dyn Store, file: &Path) -> Result<()> {
    let text = std::fs::read_to_string(file)?;
    let state = Bundle::parse(&text)?.to_state()?;
    store.import(state)
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => write_atomically(path, body.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn required<'a>(value: &'a Option<String>, flag: &str, kind: ReportKind) -> Result<&'a str> {
    value
        .as_deref()
        .ok_or_else(|| ServiceError::validation(format!("report {kind:?}: --{flag} is required").to_lowercase()))
}

fn parsed<T: std::str::FromStr<Err = mhb_core::Error>>(value: &Option<String>) -> Result<Option<T>> {
    Ok(value.as_deref().map(str::parse).transpose()?)
}

/// The report body and the exit code it implies. Bodies are byte-identical
/// to what the API serves for the same snapshot and parameters.
pub fn render_report(s: &State, kind: ReportKind, p: &ReportParams) -> Result<(String, u8)> {
    let flag = |found: bool| if found { EXIT_FINDINGS } else { EXIT_OK };
    match kind {
        ReportKind::Validate => {
            let r = report::validate(s);
            Ok((report::canonical_json(&r), flag(!r.findings.is_empty())))
        }
        ReportKind::Conflicts => {
            let term: TermId = required(&p.term, "term", kind)?.parse()?;
            let scope = ConflictScope {
                term: Some(term),
                program: parsed(&p.program)?,
                room: p.room.clone(),
            };
            let r = report::conflicts(s, scope)?;
            Ok((report::canonical_json(&r), flag(!r.conflicts.is_empty())))
        }
        ReportKind::Catalog => {
            let term: TermId = required(&p.term, "term", kind)?.parse()?;
            let format: Format = p.format.parse()?;
            let body = match (&p.program, &p.institution) {
                (Some(prog), None) => report::program_catalog(s, prog.parse()?, &term, format)?,
                (None, Some(inst)) => report::semester_catalog(s, inst.parse()?, &term, format)?,
                _ => {
                    return Err(ServiceError::validation(
                        "report catalog: give exactly one of --program or --institution",
                    ))
                }
            };
            Ok((body, EXIT_OK))
        }
        ReportKind::Timetable => {
            let term: TermId = required(&p.term, "term", kind)?.parse()?;
            let person = required(&p.person, "person", kind)?.parse()?;
            let format: Format = p.format.parse()?;
            Ok((report::timetable(s, person, &term, format)?, EXIT_OK))
        }
        ReportKind::Csv => {
            let k = required(&p.csv_kind, "kind", kind)?;
            let body = report::csv(s, k, parsed(&p.institution)?, parsed(&p.term)?)?;
            Ok((body, EXIT_OK))
        }
    }
}

/// Make the configured login an administrator with the configured
/// credential. Only writes to the store the first time.
pub fn bootstrap_admin(
    store: &dyn Store,
    identity: &dyn IdentityProvider,
    clock: &dyn Clock,
    admin: &crate::config::AdminBootstrap,
) -> Result<()> {
    let snap = store.snapshot();
    let already = snap.person_by_login(&admin.login).is_some_and(|p| snap.is_admin(p.id));
    if !already {
        let m = Mutation::BootstrapAdmin {
            login_name: admin.login.clone(),
            display_name: admin.display_name.clone(),
        };
        store.apply(Actor::System, m, clock.now())?;
    }
    identity.set_credential(&admin.login, &admin.password)
}

fn serve(config_path: &Path) -> u8 {
    let cfg = match Config::load(config_path) {
        Ok(c) => c,
        Err(e) => return fail(e.code(), e),
    };
    let rt = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => return fail_with(&e.into()),
    };
    rt.block_on(async move {
        // Bind before touching the store so a second instance reports the
        // port rather than the store lock.
        let listener = match tokio::net::TcpListener::bind(cfg.listen).await {
            Ok(l) => l,
            Err(e) if e.kind() == std::io::ErrorKind::AddrInUse => {
                return fail("PORT_IN_USE", format!("{} is already in use", cfg.listen))
            }
            Err(e) => return fail_with(&e.into()),
        };
        if let Err(e) = std::fs::create_dir_all(&cfg.data_dir) {
            return fail_with(&e.into());
        }
        let store = match LocalStore::open(&cfg.data_dir) {
            Ok(s) => Arc::new(s),
            Err(e) => return fail_with(&e),
        };
        let identity = match LocalCredentials::open(&cfg.data_dir) {
            Ok(i) => Arc::new(i),
            Err(e) => return fail_with(&e),
        };
        let clock: Arc<dyn Clock> = Arc::new(SystemClock);
        if let Some(admin) = &cfg.admin {
            if let Err(e) = bootstrap_admin(store.as_ref(), identity.as_ref(), clock.as_ref(), admin) {
                return fail_with(&e);
            }
        }
        let app = AppState {
            store: store.clone(),
            sessions: Arc::new(Sessions::new(cfg.session_ttl)),
            identity,
            clock,
        };
        tracing::info!(listen = %cfg.listen, data_dir = %cfg.data_dir.display(), "serving");
        let served = axum::serve(listener, api::router(app))
            .with_graceful_shutdown(shutdown_signal())
            .await;
        let flushed = store.flush();
        tracing::info!("store flushed, shutting down");
        if let Err(e) = served {
            return fail_with(&e.into());
        }
        match flushed {
            Ok(()) => EXIT_OK,
            Err(e) => fail_with(&e),
        }
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
