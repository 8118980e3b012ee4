use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::thread;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

struct Env {
    dir: tempfile::TempDir,
}

impl Env {
    fn new() -> Self {
        let env = Self { dir: tempfile::tempdir().unwrap() };
        assert!(env.run(&["synth", "--events", "500", "--seed", "1", "--output", "events.jsonl"]).status.success());
        assert!(env.run(&["keygen", "--output", "key.hex"]).status.success());
        env
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_simpact"))
            .current_dir(self.dir.path())
            .env_remove("SIMPACT_KEY_FILE")
            .env_remove("RUST_LOG")
            .args(args)
            .output()
            .unwrap()
    }

    fn pipeline(&self, out: &str, extra: &[&str]) -> Output {
        let mut args = vec!["run-all", "--input", "events.jsonl", "--out", out, "--key-file", "key.hex"];
        args.extend(["--k", "2,3", "--seed", "7"]);
        args.extend(extra);
        self.run(&args)
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap().flatten() {
            if e.file_type().unwrap().is_dir() {
                stack.push(e.path());
            } else {
                out.push(e.path());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn manifest_lists_every_artifact_and_rerun_is_noop() {
    let env = Env::new();
    let o = env.pipeline("out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let root = env.path("out");
    let manifest: Value = serde_json::from_slice(&fs::read(root.join("manifest.json")).unwrap()).unwrap();
    let artifacts = manifest["artifacts"].as_object().unwrap();
    let on_disk: Vec<PathBuf> = files_under(&root).into_iter().filter(|p| !p.ends_with("manifest.json")).collect();
    assert_eq!(on_disk.len(), artifacts.len());
    for p in on_disk {
        let rel = p.strip_prefix(&root).unwrap().to_string_lossy().replace('\\', "/");
        let art = artifacts.get(&rel).unwrap_or_else(|| panic!("{rel} missing from manifest"));
        assert_eq!(art["sha256"], hex::encode(Sha256::digest(fs::read(&p).unwrap())), "{rel}");
    }
    assert!(manifest["key_fingerprint"].is_string());
    assert!(!root.join(".simpact.lock").exists());

    let again = env.pipeline("out", &[]);
    assert!(again.status.success());
    let text = stdout(&again);
    assert_eq!(text.lines().count(), 7, "{text}");
    assert!(text.lines().all(|l| l.ends_with("up to date")), "{text}");
}

#[test]
fn changed_parameters_rerun_downstream_stages() {
    let env = Env::new();
    assert!(env.pipeline("out", &[]).status.success());
    let o = env.pipeline("out", &["--dataset-k", "3"]);
    let text = stdout(&o);
    assert!(text.contains("ingest: up to date") && text.contains("cluster: up to date"), "{text}");
    assert!(text.contains("threads: ") && !text.contains("threads: up to date"), "{text}");
}

#[test]
fn missing_prerequisite_exits_2() {
    let env = Env::new();
    let o = env.run(&["threads", "--out", "empty", "--key-file", "key.hex"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run `cluster` first"), "{}", stderr(&o));
}

#[test]
fn missing_key_exits_2() {
    let env = Env::new();
    let o = env.run(&["run-all", "--input", "events.jsonl", "--out", "out"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn malformed_input_exits_3() {
    let env = Env::new();
    fs::write(env.path("bad.jsonl"), "{not json\n").unwrap();
    let o = env.run(&["ingest", "--input", "bad.jsonl", "--out", "out"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn infeasible_k_exits_4() {
    let env = Env::new();
    let o = env.run(&["run-all", "--input", "events.jsonl", "--out", "out", "--key-file", "key.hex", "--k", "30"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn held_lock_is_refused() {
    let env = Env::new();
    fs::create_dir_all(env.path("out")).unwrap();
    fs::write(env.path("out/.simpact.lock"), "1").unwrap();
    let o = env.run(&["ingest", "--input", "events.jsonl", "--out", "out"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lock"), "{}", stderr(&o));
}

#[test]
fn keygen_does_not_overwrite() {
    let env = Env::new();
    let before = fs::read(env.path("key.hex")).unwrap();
    assert_eq!(env.run(&["keygen", "--output", "key.hex"]).status.code(), Some(2));
    assert_eq!(fs::read(env.path("key.hex")).unwrap(), before);
    assert!(env.run(&["keygen", "--output", "key.hex", "--force"]).status.success());
    assert_ne!(fs::read(env.path("key.hex")).unwrap(), before);
}

#[test]
fn exec_bridge_matches_in_process_fallback() {
    let env = Env::new();
    assert!(env.pipeline("direct", &[]).status.success());
    let provider = format!("exec:{} serve-fallback --seed 7", env!("CARGO_BIN_EXE_simpact"));
    let o = env.pipeline("bridged", &["--embedding", &provider]);
    assert!(o.status.success(), "{}", stderr(&o));
    for rel in ["dataset/cluster_0.jsonl", "dataset/cluster_1.jsonl", "stats.csv", "keywords.json"] {
        assert_eq!(
            fs::read(env.path(&format!("direct/{rel}"))).ok(),
            fs::read(env.path(&format!("bridged/{rel}"))).ok(),
            "{rel}"
        );
    }
}

#[test]
fn delete_user_removes_and_purges() {
    let env = Env::new();
    assert!(env.pipeline("out", &[]).status.success());
    let did = "did:plc:synth00000";
    assert!(fs::read_to_string(env.path("out/events.jsonl")).unwrap().contains(did));
    let o = env.run(&["delete-user", "--did", did, "--out", "out", "--key-file", "key.hex"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stdout(&o).contains("removed 0 thread"), "{}", stdout(&o));
    for rel in ["out/events.jsonl", "out/anonymized.jsonl"] {
        assert!(!fs::read_to_string(env.path(rel)).unwrap().contains(did), "{rel}");
    }
    let o = env.run(&["delete-user", "--did", did, "--out", "out", "--key-file", "key.hex"]);
    assert!(stdout(&o).contains("removed 0 thread elements and 0 raw events"), "{}", stdout(&o));

    assert!(env.run(&["keygen", "--output", "other.hex"]).status.success());
    let o = env.run(&["delete-user", "--did", "did:plc:synth10001", "--out", "out", "--key-file", "other.hex"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

fn commit(did: &str, n: u64, collection: &str, record: Value) -> String {
    json!({
        "did": did,
        "time_us": 1_745_000_000_000_000u64 + n * 1000,
        "kind": "commit",
        "commit": {"rev": "r", "operation": "create", "collection": collection, "rkey": format!("k{n}"), "cid": "c", "record": record}
    })
    .to_string()
}

#[test]
fn live_ingest_reads_a_jetstream_socket() {
    let env = Env::new();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let server = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut ws = tungstenite::accept(stream).unwrap();
        let mut n = 0;
        for user in ["did:plc:livea", "did:plc:liveb", "did:plc:livec"] {
            for text in ["Carney and Poilievre debate tonight", "my riding votes Liberal this election"] {
                n += 1;
                let post = json!({"$type": "app.bsky.feed.post", "text": text, "langs": ["en"], "createdAt": "2025-04-18T00:00:00Z"});
                ws.send(tungstenite::Message::Text(commit(user, n, "app.bsky.feed.post", post))).unwrap();
            }
        }
        n += 1;
        let like = json!({"$type": "app.bsky.feed.like", "subject": {"cid": "c", "uri": "at://did:plc:livea/app.bsky.feed.post/k1"}});
        ws.send(tungstenite::Message::Text(commit("did:plc:liveb", n, "app.bsky.feed.like", like))).unwrap();
        ws.close(None).unwrap();
        while ws.read().is_ok() {}
    });
    fs::write(env.path("live.toml"), format!("[jetstream]\nendpoint = \"ws://127.0.0.1:{port}\"\nmax_events = 100\n"))
        .unwrap();
    let o = env.run(&["ingest", "--live", "--config", "live.toml", "--out", "out"]);
    server.join().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let events = fs::read_to_string(env.path("out/events.jsonl")).unwrap();
    assert_eq!(events.lines().count(), 7, "{events}");
    assert!(events.contains("\"kind\":\"like\""));
}
