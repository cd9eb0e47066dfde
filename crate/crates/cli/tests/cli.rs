use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const TRIANGLE: &str = "Q(A,B,C) :- R(A,B), S(B,C), T(A,C).\n";
const FIVE_ATOM: &str = "Q(A,B,C,D) :- R(A,B), S(B,C), T(C,D), W(A,C,D), V(A,B,D).\n";
const FIVE_ATOM_DC: &str = "card R 1024\ncard S 1024\ncard T 1024\ndeg W A,C -> A,C,D 1024\ndeg V B,D -> A,B,D 1024\n";
const FIVE_ATOM_SEQ: &str = "\
dec Y={B,C} X={B} w=1/2
sub I={C,D} J={B} w=1/2
comp Y={B,C,D} X={B} w=1/2
sub I={A,B,D} J={B,C,D} w=1/2
comp Y={A,B,C,D} X={B,C,D} w=1/2
sub I={B,C} J={A,B} w=1/2
comp Y={A,B,C} X={A,B} w=1/2
sub I={A,C,D} J={A,B,C} w=1/2
comp Y={A,B,C,D} X={A,B,C} w=1/2
";

struct Sandbox {
    dir: tempfile::TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Sandbox { dir: tempfile::tempdir().unwrap() }
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn wcoj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wcoj")).arg("--deterministic").args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stdout={} stderr={}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn triangle_bounds() {
    let sb = Sandbox::new();
    let q = sb.file("q.txt", TRIANGLE);
    let c = sb.file("c.txt", "card R 1048576\ncard S 1048576\ncard T 1048576\n");
    for method in ["agm", "modular", "polymatroid", "dual"] {
        let out = wcoj(&["bound", "-q", s(&q), "-c", s(&c), "--method", method]);
        assert!(out.status.success(), "{method}");
        assert_eq!(json(&out)["value_log2"], "30/1", "{method}");
    }
    let out = wcoj(&["bound", "-q", s(&q), "-c", s(&c), "--method", "dual"]);
    assert!(json(&out)["certificate"]["delta"].is_array());
}

#[test]
fn unbounded_reports_witness() {
    let sb = Sandbox::new();
    let q = sb.file("q.txt", TRIANGLE);
    let c = sb.file("c.txt", "card R 100\n");
    let out = wcoj(&["bound", "-q", s(&q), "-c", s(&c)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"C\""));
}

#[test]
fn parse_errors_exit_2_with_line() {
    let sb = Sandbox::new();
    let q = sb.file("q.txt", TRIANGLE);
    let c = sb.file("c.txt", "card R 100\ncard X 5\n");
    let out = wcoj(&["bound", "-q", s(&q), "-c", s(&c)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn grid_runs_agree() {
    let sb = Sandbox::new();
    let q = sb.file("q.txt", TRIANGLE);
    let c = sb.file("c.txt", "card R 10000\ncard S 10000\ncard T 10000\n");
    let data = sb.path("grid");
    let out = wcoj(&["gen", "--kind", "grid", "--m", "100", "--out", s(&data)]);
    assert!(out.status.success());
    for algo in ["backtrack", "heavy-light"] {
        let o = sb.path(&format!("{algo}.csv"));
        let out = wcoj(&["run", "-q", s(&q), "-c", s(&c), "-d", s(&data), "--algo", algo, "-o", s(&o)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["output_cardinality"], 1_000_000, "{algo}");
    }
    assert_eq!(fs::read(sb.path("backtrack.csv")).unwrap(), fs::read(sb.path("heavy-light.csv")).unwrap());
}

#[test]
fn small_grid_all_algorithms() {
    let sb = Sandbox::new();
    let q = sb.file("q.txt", TRIANGLE);
    let c = sb.file("c.txt", "card R 100\ncard S 100\ncard T 100\n");
    let data = sb.path("grid");
    let out = wcoj(&["gen", "--kind", "grid", "--m", "10", "--out", s(&data)]);
    assert!(out.status.success());
    for rel in ["R", "S", "T"] {
        let body = fs::read_to_string(data.join(format!("{rel}.csv"))).unwrap();
        assert_eq!(body.lines().count(), 101);
    }
    for algo in ["backtrack", "heavy-light", "panda", "bruteforce"] {
        let out = wcoj(&["run", "-q", s(&q), "-c", s(&c), "-d", s(&data), "--algo", algo]);
        assert!(out.status.success(), "{algo}: {}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert_eq!(v["output_cardinality"], 1000, "{algo}");
        assert_eq!(v["validation"]["ok"], true);
        assert!(v.get("wall_time_ms").is_none() && v.get("timestamp").is_none());
    }
}

#[test]
fn validation_failure_is_nonzero() {
    let sb = Sandbox::new();
    let q = sb.file("q.txt", TRIANGLE);
    let c = sb.file("c.txt", "card R 10\ncard S 100\ncard T 100\n");
    let data = sb.path("grid");
    wcoj(&["gen", "--kind", "grid", "--m", "10", "--out", s(&data)]);
    let out = wcoj(&["run", "-q", s(&q), "-c", s(&c), "-d", s(&data)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["validation"]["ok"], false);
    let out = wcoj(&["run", "-q", s(&q), "-c", s(&c), "-d", s(&data), "--no-validate", "--algo", "bruteforce"]);
    assert!(out.status.success());
}

#[test]
fn cyclic_backtrack_exits_3() {
    let sb = Sandbox::new();
    let q = sb.file("q.txt", "Q(A,B,C,D) :- R(A), S(A,B), T(B,C), W(C,A,D).\n");
    let c = sb.file("c.txt", "card R 16\ndeg S A -> A,B 4\ndeg T B -> B,C 4\ndeg W C -> A,C,D 8\n");
    let out = wcoj(&["run", "-q", s(&q), "-c", s(&c), "-d", s(&sb.path("none")), "--algo", "backtrack"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("acyclicize"));

    let o = sb.path("acyclic.txt");
    let out = wcoj(&["acyclicize", "-q", s(&q), "-c", s(&c), "-o", s(&o)]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["edges"], serde_json::json!(["A->B", "B->C", "C->D"]));
    assert_eq!(v["input_acyclic"], false);
    assert!(fs::read_to_string(&o).unwrap().contains("deg W C -> C,D 8"));

    // already acyclic: unchanged
    let out = wcoj(&["acyclicize", "-q", s(&q), "-c", s(&o)]);
    assert_eq!(json(&out)["constraints"], fs::read_to_string(&o).unwrap());

    let c = sb.file("c2.txt", "deg S A -> A,B 4\ndeg T B -> B,C 4\ndeg W C -> A,C,D 8\n");
    assert_eq!(wcoj(&["acyclicize", "-q", s(&q), "-c", s(&c)]).status.code(), Some(4));
}

#[test]
fn proof_commands() {
    let sb = Sandbox::new();
    let q = sb.file("q.txt", FIVE_ATOM);
    let c = sb.file("c.txt", FIVE_ATOM_DC);
    let seq = sb.file("seq.txt", FIVE_ATOM_SEQ);
    let out = wcoj(&["proof", "validate", "-q", s(&q), "-c", s(&c), "--seq", s(&seq), "--delta", "1/2"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["valid"], true);

    // third step claims more weight than is available
    let bad: String = FIVE_ATOM_SEQ
        .lines()
        .enumerate()
        .map(|(i, l)| if i == 2 { l.replace("w=1/2", "w=1") } else { l.to_string() } + "\n")
        .collect();
    let bad = sb.file("bad.txt", &bad);
    let out = wcoj(&["proof", "validate", "-q", s(&q), "-c", s(&c), "--seq", s(&bad), "--delta", "1/2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["failed_at"], 2);

    let derived = sb.path("derived.txt");
    let out = wcoj(&["proof", "derive", "-q", s(&q), "-c", s(&c), "-o", s(&derived)]);
    assert!(out.status.success());
    let out = wcoj(&["proof", "validate", "-q", s(&q), "-c", s(&c), "--seq", s(&derived)]);
    assert_eq!(json(&out)["valid"], true);
}

#[test]
fn five_atom_panda_matches_bruteforce() {
    let sb = Sandbox::new();
    let q = sb.file("q.txt", FIVE_ATOM);
    let c = sb.file("c.txt", FIVE_ATOM_DC);
    let seq = sb.file("seq.txt", FIVE_ATOM_SEQ);
    let data = sb.path("db");
    let out = wcoj(&["gen", "--kind", "random", "--query", s(&q), "--sizes", "64,64,64,64,64", "--domain", "8", "--seed", "11", "--out", s(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (pa, bf) = (sb.path("p.csv"), sb.path("b.csv"));
    let out = wcoj(&[
        "run", "-q", s(&q), "-c", s(&c), "-d", s(&data), "--algo", "panda", "--seq", s(&seq), "--delta", "1/2", "--theta", "2", "-o",
        s(&pa),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = wcoj(&["run", "-q", s(&q), "-c", s(&c), "-d", s(&data), "--algo", "bruteforce", "-o", s(&bf)]);
    assert!(out.status.success());
    assert_eq!(fs::read(&pa).unwrap(), fs::read(&bf).unwrap());
}

#[test]
fn gen_is_reproducible() {
    let sb = Sandbox::new();
    let q = sb.file("q.txt", TRIANGLE);
    let (a, b) = (sb.path("a"), sb.path("b"));
    for d in [&a, &b] {
        let out = wcoj(&["gen", "--kind", "random", "--query", s(&q), "--sizes", "100,200,300", "--seed", "7", "--out", s(d)]);
        assert!(out.status.success());
    }
    for f in ["R.csv", "S.csv", "T.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m: Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["spec"]["seed"], 7);
    assert_eq!(m["spec"]["kind"], "random");
}

#[test]
fn agm_tight_triangle() {
    let sb = Sandbox::new();
    let q = sb.file("q.txt", TRIANGLE);
    let c = sb.file("c.txt", "card R 1024\ncard S 1024\ncard T 1024\n");
    let data = sb.path("tight");
    let out = wcoj(&["gen", "--kind", "agm-tight", "--query", s(&q), "--n", "1024", "--out", s(&data)]);
    assert!(out.status.success());
    let out = wcoj(&["run", "-q", s(&q), "-c", s(&c), "-d", s(&data)]);
    assert_eq!(json(&out)["output_cardinality"], 1 << 15);
}

#[test]
fn deterministic_reports_are_identical() {
    let sb = Sandbox::new();
    let q = sb.file("q.txt", TRIANGLE);
    let c = sb.file("c.txt", "card R 100\ncard S 100\ncard T 100\n");
    let data = sb.path("grid");
    wcoj(&["gen", "--kind", "grid", "--m", "10", "--out", s(&data)]);
    let args = ["run", "-q", s(&q), "-c", s(&c), "-d", s(&data), "--algo", "panda"];
    assert_eq!(wcoj(&args).stdout, wcoj(&args).stdout);
    let timed = Command::new(env!("CARGO_BIN_EXE_wcoj")).args(args).output().unwrap();
    let v = json(&timed);
    assert!(v.get("wall_time_ms").is_some() && v.get("timestamp").is_some());
}
