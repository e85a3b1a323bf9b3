use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

fn bidchess(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bidchess")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn certify(dir: &Path, board: &str, pieces: &str, n: u32, symmetry: bool) -> std::path::PathBuf {
    let out = dir.join(format!("{pieces}-{board}.tb"));
    let n = n.to_string();
    let mut args = vec!["certify", "--board", board, "--pieces", pieces, "--n", &n, "--out", out.to_str().unwrap()];
    if symmetry {
        args.push("--symmetry");
    }
    let o = bidchess(&args);
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("violations: 0"));
    out
}

const SMALL_ZUGZWANG: &str = "4x4/3k/4/4/K2N";

#[test]
fn small_board_lookups() {
    let dir = tempfile::tempdir().unwrap();
    let table = certify(dir.path(), "4x4", "KNk", 400, false);
    let t = table.to_str().unwrap();

    let o = bidchess(&["value", "--table", t, "--fen", SMALL_ZUGZWANG]);
    assert_eq!(stdout(&o).trim(), "31/48");

    let o = bidchess(&["report", "--table", t, "--fen", SMALL_ZUGZWANG]);
    let s = stdout(&o);
    assert!(s.contains("classification: Zugzwang"), "{s}");
    assert!(s.contains("richman bid: -1/96"), "{s}");

    let o = bidchess(&["best-moves", "--table", t, "--fen", SMALL_ZUGZWANG, "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let mut white: Vec<&str> = v["white"].as_array().unwrap().iter().map(|m| m["move"]["coord"].as_str().unwrap()).collect();
    white.sort();
    assert_eq!(white, ["a1a2", "a1b1", "d1b2"]);

    let out = dir.path().join("values.txt");
    assert!(bidchess(&["export", "--table", t, "--out", out.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 4112);
    assert!(text.lines().any(|l| l == format!("{SMALL_ZUGZWANG} 31/48")));

    let o = bidchess(&["value", "--table", t, "--fen", "8x8/8/8/8/8/8/8/8/KN5k"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn rook_table_value() {
    let dir = tempfile::tempdir().unwrap();
    let table = certify(dir.path(), "8x8", "KRk", 331, true);
    let fen = "8/8/5k2/3R4/8/8/8/3K4";
    let o = bidchess(&["value", "--table", table.to_str().unwrap(), "--fen", fen]);
    assert_eq!(stdout(&o).trim(), "249/320", "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn certify_refuses_too_small_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.tb");
    let o = bidchess(&["certify", "--pieces", "KBk", "--n", "5", "--symmetry", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    let s = stdout(&o);
    let count: usize = s.lines().find_map(|l| l.strip_prefix("violations: ")).unwrap().parse().unwrap();
    assert!(count > 0);
    assert!(s.contains("violation 8x8/"));
    assert!(!out.exists());

    certify(dir.path(), "8x8", "KBk", 30, true);
}

#[test]
fn invalid_piece_set_is_a_usage_error() {
    let o = bidchess(&["solve", "--board", "8x8", "--pieces", "Kq"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Kq"));
    let o = bidchess(&["solve", "--board", "0x8", "--pieces", "KRk"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_writes_and_resumes_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("knk");
    let c = ck.to_str().unwrap();
    let started = Instant::now();
    let o = bidchess(&["solve", "--board", "4x4", "--pieces", "KNk", "--n", "400", "--checkpoint", c]);
    assert!(o.status.success());
    assert!(started.elapsed() < Duration::from_secs(60));
    assert!(stdout(&o).contains("violations: 0"));
    assert!(dir.path().join("knk.alpha").exists() && dir.path().join("knk.beta").exists());

    let o = bidchess(&["solve", "--board", "4x4", "--pieces", "KNk", "--n", "450", "--checkpoint", c]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("resuming alpha from n=400"));

    let o = bidchess(&["solve", "--board", "4x4", "--pieces", "KNk", "--n", "100", "--kind", "beta", "--checkpoint", dir.path().join("knk.alpha").to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn bishop_gap_after_thousand_steps() {
    let o = bidchess(&["solve", "--pieces", "KBk", "--symmetry", "--n", "1000"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let line = s.lines().find_map(|l| l.strip_prefix("gap: ")).unwrap();
    if line != "0" {
        let exp: f64 = line.strip_prefix("about 10^").unwrap().parse().unwrap();
        assert!(exp < -91.0, "{line}");
    }
}

fn http(addr: &str, request: &str) -> String {
    let mut s = TcpStream::connect(addr).unwrap();
    s.write_all(request.as_bytes()).unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).unwrap();
    out
}

struct Server {
    child: Child,
    addr: String,
}

impl Server {
    fn start(tables: &Path) -> Server {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let addr = format!("127.0.0.1:{port}");
        let child = Command::new(env!("CARGO_BIN_EXE_bidchess"))
            .args(["serve", "--addr", &addr])
            .env("BIDCHESS_TABLE_DIR", tables)
            .stderr(Stdio::piped())
            .stdout(Stdio::null())
            .spawn()
            .unwrap();
        let deadline = Instant::now() + Duration::from_secs(60);
        while TcpStream::connect(&addr).is_err() {
            assert!(Instant::now() < deadline, "server did not start");
            std::thread::sleep(Duration::from_millis(50));
        }
        Server { child, addr }
    }

    fn get(&self, path: &str) -> String {
        http(&self.addr, &format!("GET {path} HTTP/1.0\r\n\r\n"))
    }

    fn post(&self, path: &str, body: &str) -> String {
        http(&self.addr, &format!("POST {path} HTTP/1.0\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{body}", body.len()))
    }

    /// Stops the server and returns the decoded protocol events it logged.
    fn stop(mut self) -> Vec<serde_json::Value> {
        self.child.kill().unwrap();
        let mut logs = String::new();
        self.child.stderr.take().unwrap().read_to_string(&mut logs).unwrap();
        self.child.wait().unwrap();
        logs.lines()
            .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
            .filter(|v| v["fields"]["message"] == "protocol event")
            .map(|v| serde_json::from_str(v["fields"]["event"].as_str().unwrap()).unwrap())
            .collect()
    }
}

fn status_ok(resp: &str, code: u16) -> bool {
    resp.split_whitespace().nth(1) == Some(&code.to_string())
}

#[test]
fn serve_reads_table_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    certify(dir.path(), "4x4", "KNk", 400, false);
    let server = Server::start(dir.path());
    let resp = server.get("/v1/value?fen=4x4%2F3k%2F4%2F4%2FK2N");
    assert!(status_ok(&resp, 200), "{resp}");
    assert!(resp.contains(r#""num":"31""#) && resp.contains(r#""den":"48""#), "{resp}");
    let resp = server.get("/v1/value?fen=4x4%2F3k");
    assert!(status_ok(&resp, 400), "{resp}");

    let resp = server.post("/v1/session", r#"{"fen":"4x4/3k/4/4/K2N","chips_total":1000,"human_side":"white","white_chips":646}"#);
    assert!(status_ok(&resp, 201), "{resp}");

    let events = server.stop();
    assert_eq!(events.len(), 1);
    assert_eq!(events[0]["event"], "bid");
    assert!(events[0]["amount"].as_i64().unwrap() < 0);
}

/// The 8x8 knight closure stabilizes at n = 2644; about a minute of work.
#[test]
fn knight_zugzwang_on_full_board() {
    let dir = tempfile::tempdir().unwrap();
    let table = certify(dir.path(), "8x8", "KNk", 2644, true);
    let fen = "8/8/8/8/3k4/8/8/K2N4";
    let o = bidchess(&["report", "--table", table.to_str().unwrap(), "--fen", fen]);
    let s = stdout(&o);
    assert!(s.contains("value: 21073/32256"), "{s}");
    assert!(s.contains("classification: Zugzwang"), "{s}");
    assert!(s.contains("white best: d1c3 (10489/16128)"), "{s}");
    assert!(s.contains("richman bid: -95/32256"), "{s}");

    // engine as Black opens with a negative bid: round(-95/32256 * 10^4) = -29
    let server = Server::start(dir.path());
    let resp = server.post("/v1/session", &format!(r#"{{"fen":"{fen}","chips_total":10000,"human_side":"white"}}"#));
    assert!(status_ok(&resp, 201), "{resp}");
    let events = server.stop();
    assert_eq!(events[0], serde_json::json!({"event": "bid", "by": "black", "amount": -29}));
}
