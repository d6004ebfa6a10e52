mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use common::*;
use mhb::bundle::Bundle;
use mhb::store::{LocalStore, Store};
use mhb_core::*;
use serde_json::Value;
use tempfile::TempDir;

fn mhb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhb"))
        .args(args)
        .env("MHB_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

struct Fixture {
    _tmp: TempDir,
    dir: PathBuf,
    data: String,
}

impl Fixture {
    fn path(&self, name: &str) -> String {
        self.dir.join(name).display().to_string()
    }

    fn run(&self, args: &[&str]) -> Output {
        let mut all = vec!["--data-dir", &self.data];
        all.extend_from_slice(args);
        mhb(&all)
    }

    fn state(&self) -> State {
        (*LocalStore::open(Path::new(&self.data)).unwrap().snapshot()).clone()
    }
}

fn write_bundle(dir: &Path, name: &str, s: &State) -> String {
    let path = dir.join(name);
    std::fs::write(&path, Bundle::from_state(s).to_canonical_json()).unwrap();
    path.display().to_string()
}

/// An imported campus store.
fn imported() -> Fixture {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_path_buf();
    let data = dir.join("data").display().to_string();
    let (w, _) = campus();
    let file = write_bundle(&dir, "campus.json", &w.s);
    let f = Fixture { _tmp: tmp, dir, data };
    let o = f.run(&["import", "--file", &file]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    f
}

fn program_id(s: &State, title: &str) -> ProgramId {
    s.programs().find(|p| p.title == title).unwrap().id
}

#[test]
fn validate_clean_store() {
    let f = imported();
    let o = f.run(&["report", "validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["findings"], serde_json::json!([]));
}

#[test]
fn conflicts_report_finds_the_shared_room() {
    let f = imported();
    let o = f.run(&["report", "conflicts", "--term", "2008S"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let conflicts = v["conflicts"].as_array().unwrap();
    assert_eq!(conflicts.len(), 1);
    assert_eq!(conflicts[0]["kind"], "ROOM_OVERLAP");

    let o = f.run(&["report", "conflicts", "--term", "2008S", "--room", "R2"]);
    assert_eq!(o.status.code(), Some(0));
    let o = f.run(&["report", "conflicts"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error: VALIDATION_FAILED"), "{}", stderr(&o));
}

#[test]
fn catalog_is_deterministic_and_matches_the_api() {
    let f = imported();
    let s = f.state();
    let p1 = program_id(&s, "Computer Science (B.Sc.)").to_string();
    let args = ["report", "catalog", "--program", &p1, "--term", "2008S"];
    let first = f.run(&args);
    let second = f.run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(first.stdout, second.stdout);
    let out = f.path("catalog.html");
    let html = f.run(&["report", "catalog", "--program", &p1, "--term", "2008S", "--format", "html", "--out", &out]);
    assert_eq!(html.status.code(), Some(0));
    assert!(html.stdout.is_empty());

    let api = Api::with_store(Arc::new(LocalStore::open(Path::new(&f.data)).unwrap()), ts(2008, 1, 10));
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let (json, page) = rt.block_on(async {
        (
            api.get(&format!("/catalogs/program/{p1}?term=2008S"), None).await,
            api.get(&format!("/catalogs/program/{p1}?term=2008S&format=html"), None).await,
        )
    });
    assert_eq!(json.body, first.stdout);
    assert_eq!(page.body, std::fs::read(&out).unwrap());
}

#[test]
fn csv_and_timetable_reports() {
    let f = imported();
    let s = f.state();
    let editor = s.person_by_login("editor").unwrap().id.to_string();
    let o = f.run(&["report", "timetable", "--person", &editor, "--term", "2008S"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["body"]["entries"][0]["title"], "Algorithms");

    let o = f.run(&["report", "csv", "--kind", "persons"]);
    let text = stdout(&o);
    assert!(text.starts_with("id,display_name,login_name\n"));
    assert_eq!(text.lines().count(), 7);
    let alias = f.run(&["report", "csv", "--entity", "persons"]);
    assert_eq!(alias.stdout, o.stdout);
    let o = f.run(&["report", "csv", "--kind", "rooms"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: UNKNOWN_KIND"));
}

#[test]
fn catalog_needs_exactly_one_subject() {
    let f = imported();
    let o = f.run(&["report", "catalog", "--term", "2008S"]);
    assert_eq!(o.status.code(), Some(2));
    let o = f.run(&["report", "catalog", "--term", "2008S", "--program", "999"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NOT_FOUND"));
}

#[test]
fn export_import_export_is_stable() {
    let f = imported();
    let a = f.path("a.json");
    let o = f.run(&["export", "--out", &a]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let second = f.dir.join("second").display().to_string();
    let o = mhb(&["--data-dir", &second, "import", "--file", &a]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let b = f.path("b.json");
    let o = mhb(&["--data-dir", &second, "export", "--out", &b]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(std::fs::read_to_string(&a).unwrap().ends_with("}\n"));
}

#[test]
fn import_refuses_a_populated_store() {
    let f = imported();
    let (w, _) = campus();
    let file = write_bundle(&f.dir, "again.json", &w.s);
    let before = f.state();
    let o = f.run(&["import", "--file", &file]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: STORE_NOT_EMPTY"), "{}", stderr(&o));
    assert_eq!(f.state(), before);
}

#[test]
fn invalid_bundle_names_the_offender_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let (w, _) = campus();
    let mut b = Bundle::from_state(&w.s);
    let key = b.modules[1].key.clone();
    b.modules[1].institution = "institution-404".into();
    let file = tmp.path().join("bad.json");
    std::fs::write(&file, b.to_canonical_json()).unwrap();
    let data = tmp.path().join("data");
    let o = mhb(&["--data-dir", data.to_str().unwrap(), "import", "--file", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error: VALIDATION_FAILED"), "{err}");
    assert!(err.contains(&key), "{err} should name {key}");
    assert!(LocalStore::open(&data).unwrap().snapshot().is_empty());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(mhb(&["report"]).status.code(), Some(2));
    assert_eq!(mhb(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mhb(&["--help"]).status.code(), Some(0));
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let o = mhb(&["--data-dir", missing.to_str().unwrap(), "report", "validate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = mhb(&["serve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CONFIG_INVALID"));
}

#[test]
fn serve_rejects_unknown_config_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("mhb.toml");
    std::fs::write(&cfg, "data_dir = \"d\"\nlisten_port = 9\n").unwrap();
    let o = mhb(&["--config", cfg.to_str().unwrap(), "serve"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error: CONFIG_INVALID") && err.contains("listen_port"), "{err}");
}

#[test]
fn locked_store_is_reported() {
    let f = imported();
    let _held = LocalStore::open(Path::new(&f.data)).unwrap();
    let o = f.run(&["report", "validate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: STORE_LOCKED"), "{}", stderr(&o));
}

fn http_get(addr: &str, path: &str) -> Option<String> {
    use std::io::{Read, Write};
    let mut s = std::net::TcpStream::connect(addr).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").ok()?;
    let mut out = String::new();
    s.read_to_string(&mut out).ok()?;
    Some(out)
}

#[cfg(unix)]
#[test]
fn serve_answers_and_shuts_down_cleanly() {
    use std::process::Stdio;
    use std::time::{Duration, Instant};

    let tmp = tempfile::tempdir().unwrap();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let data = tmp.path().join("data");
    let cfg = tmp.path().join("mhb.toml");
    std::fs::write(
        &cfg,
        format!(
            "listen = \"{addr}\"\ndata_dir = \"{}\"\n[admin]\nlogin = \"root\"\npassword = \"pw\"\n",
            data.display()
        ),
    )
    .unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_mhb"))
        .args(["--config", cfg.to_str().unwrap(), "serve"])
        .env("MHB_LOG", "warn")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();

    let deadline = Instant::now() + Duration::from_secs(20);
    let health = loop {
        if let Some(r) = http_get(&addr, "/health") {
            break r;
        }
        assert!(Instant::now() < deadline, "server did not come up");
        std::thread::sleep(Duration::from_millis(50));
    };
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    assert!(health.to_ascii_lowercase().contains("x-snapshot: 1"), "{health}");

    let second = mhb(&["--config", cfg.to_str().unwrap(), "serve"]);
    assert_eq!(second.status.code(), Some(2));
    assert!(stderr(&second).starts_with("error: PORT_IN_USE"), "{}", stderr(&second));

    Command::new("kill").args(["-TERM", &child.id().to_string()]).status().unwrap();
    let status = child.wait().unwrap();
    assert_eq!(status.code(), Some(0));
    // The bootstrap survived shutdown.
    let s = LocalStore::open(&data).unwrap().snapshot();
    let root = s.person_by_login("root").unwrap();
    assert!(s.is_admin(root.id));
}
