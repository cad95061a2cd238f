use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_numertree"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

/// Exit code plus the parsed single-line error from standard error.
fn fails(args: &[&str]) -> (i32, Value) {
    let o = run(args);
    let err = String::from_utf8(o.stderr).unwrap();
    let line = err.lines().last().expect("error line");
    (o.status.code().unwrap(), serde_json::from_str(line).expect("JSON error line"))
}

fn fixture(dir: &Path, name: &str) -> String {
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, ok(&["fixture", name])).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn rep_and_val() {
    assert_eq!(ok(&["rep", "--system", "3/2", "22"]), "2120012\n");
    assert_eq!(ok(&["val", "--system", "fib", "10010"]), "10\n");
    assert_eq!(ok(&["rep", "--system", "2", "0"]), "\n");
    let (code, e) = fails(&["val", "--system", "3/2", "11"]);
    assert_eq!(code, 2);
    assert_eq!(e["exit"], 2);
    assert!(e["message"].as_str().unwrap().contains("position 0"));
}

#[test]
fn bad_inputs_exit_2() {
    assert_eq!(fails(&["rep", "--system", "4/2", "3"]).0, 2);
    assert_eq!(fails(&["rep", "--system", "2", "-3"]).0, 2);
    assert_eq!(fails(&["terms", "--system", "2", "--seq", "builtin:nope"]).0, 2);
    assert_eq!(fails(&["frobnicate"]).0, 2);
}

#[test]
fn tree_text_and_levels() {
    let text = ok(&["tree", "--system", "3/2", "--seq", "builtin:sumdigits", "--levels", "6", "--format", "text"]);
    assert!(text.lines().last().unwrap().ends_with(",9,9"));
    let root = ok(&["tree", "--system", "3/2", "--seq", "builtin:sumdigits", "--levels", "0"]);
    assert_eq!(root.lines().count(), 2);
}

/// Accepts the DOT subset the renderer emits: a digraph of node statements
/// with quoted labels and labelled edges between declared nodes.
fn parse_dot(s: &str) -> Result<(usize, usize), String> {
    let mut lines = s.lines();
    let head = lines.next().ok_or("empty")?;
    let name = head
        .strip_prefix("digraph ")
        .and_then(|r| r.strip_suffix(" {"))
        .ok_or("bad header")?;
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err("bad graph id".into());
    }
    let mut nodes = std::collections::HashSet::new();
    let mut edges = 0;
    let mut closed = false;
    for line in lines {
        if closed {
            return Err("content after closing brace".into());
        }
        if line == "}" {
            closed = true;
            continue;
        }
        let stmt = line.trim().strip_suffix(';').ok_or("missing semicolon")?;
        let (lhs, attrs) = stmt.split_once(" [").ok_or("missing attributes")?;
        let label = attrs
            .strip_prefix("label=\"")
            .and_then(|r| r.strip_suffix("\"]"))
            .ok_or("bad attribute list")?;
        if label.contains('"') {
            return Err("unescaped quote".into());
        }
        match lhs.split_once(" -> ") {
            Some((a, b)) => {
                if !nodes.contains(a) || !nodes.contains(b) {
                    return Err(format!("edge {a} -> {b} uses undeclared node"));
                }
                edges += 1;
            }
            None => {
                if !lhs.starts_with('n') || !lhs[1..].chars().all(|c| c.is_ascii_digit()) {
                    return Err(format!("bad node id {lhs}"));
                }
                nodes.insert(lhs.to_string());
            }
        }
    }
    if !closed {
        return Err("unterminated graph".into());
    }
    Ok((nodes.len(), edges))
}

#[test]
fn tree_dot_is_well_formed() {
    let dot = ok(&["tree", "--system", "fib", "--seq", "builtin:zeck-subwords", "--levels", "5", "--format", "dot"]);
    let (nodes, edges) = parse_dot(&dot).unwrap();
    assert_eq!(nodes, 13);
    assert_eq!(edges, 12);
    assert!(parse_dot("digraph t {\n  n0 -> n1 [label=\"0\"];\n}\n").is_err());
}

#[test]
fn node_budget_exit_3() {
    let o = bin()
        .args(["tree", "--system", "2", "--seq", "builtin:n", "--levels", "12"])
        .env("NUMERTREE_NODE_BUDGET", "100")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    let e: Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().trim()).unwrap();
    assert_eq!(e["error"], "budget_exceeded");
}

fn coeffs(set: &Value, domain_has: &str, leaf: &str) -> Value {
    let types = set["types"].as_array().unwrap();
    let ids: Vec<&Value> = types
        .iter()
        .filter(|t| t["domain"].as_array().unwrap().iter().any(|w| w == domain_has))
        .map(|t| &t["id"])
        .collect();
    set["relations"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["leaf"] == leaf && ids.contains(&&r["type"]))
        .map(|r| r["coeffs"].clone())
        .expect("relation present")
}

#[test]
fn guess_squares() {
    let out = ok(&["guess", "--system", "3/2", "--seq", "builtin:power:2", "--h", "3", "--terms", "20000"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let cells: Vec<&Value> = v["report"]["types"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|t| t["cells"].as_array().unwrap())
        .collect();
    assert_eq!(cells.len(), 27);
    assert!(cells.iter().all(|c| c["status"] == "solved"));
    // The residue-2 type is the one containing the leaf 011.
    let c = coeffs(&v["relations"], "011", "011");
    assert_eq!(c["01"], "5/4");
    assert_eq!(c["20"], "5/4");
    assert_eq!(c["22"], "-1/4");
    assert_eq!(c.as_object().unwrap().len(), 3);
}

#[test]
fn guess_is_deterministic() {
    let args = ["guess", "--system", "fib", "--seq", "builtin:subwords", "--h", "2", "--terms", "3000"];
    assert_eq!(ok(&args), ok(&args));
}

#[test]
fn guess_automatic_sequence_reports_inconsistency() {
    let dir = tempfile::tempdir().unwrap();
    let dfao = fixture(dir.path(), "nonregular");
    let out = ok(&["guess", "--system", "3/2", "--seq", &format!("dfao:{dfao}"), "--h", "4", "--terms", "20000"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let bad: Vec<&Value> = v["report"]["types"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|t| t["cells"].as_array().unwrap())
        .filter(|c| c["status"] == "inconsistent")
        .collect();
    assert!(!bad.is_empty());
    assert!(bad.iter().all(|c| !c["witness"].as_array().unwrap().is_empty()));
}

#[test]
fn guess_with_too_few_terms_exit_4() {
    let (code, e) = fails(&["guess", "--system", "3/2", "--seq", "builtin:sumdigits", "--h", "2", "--terms", "20"]);
    assert_eq!(code, 4);
    assert!(e["message"].as_str().unwrap().contains("type"));
}

#[test]
fn verify_pass_and_fail() {
    let dir = tempfile::tempdir().unwrap();
    let good = fixture(dir.path(), "sumdigits32");
    let out = ok(&["verify", "--system", "3/2", "--seq", "builtin:sumdigits", "--relset", &good, "--terms", "3000"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["ok"], true);

    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(&good).unwrap().replacen("\"3/2\"", "\"5/3\"", 1);
    std::fs::write(&bad, text).unwrap();
    let o = run(&["verify", "--system", "3/2", "--seq", "builtin:sumdigits", "--relset", bad.to_str().unwrap(), "--terms", "3000"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!v["violations"].as_array().unwrap().is_empty());

    // A single corrupted deepest-level term is a leaf of exactly one occurrence.
    let terms = ok(&["terms", "--system", "3/2", "--seq", "builtin:sumdigits", "--terms", "93"]);
    let mut lines: Vec<String> = terms.lines().map(String::from).collect();
    lines[90] = "90 1000".into();
    let bfile = dir.path().join("b.txt");
    std::fs::write(&bfile, lines.join("\n")).unwrap();
    let seq = format!("bfile:{}", bfile.display());
    let o = run(&["verify", "--system", "3/2", "--seq", &seq, "--relset", &good, "--terms", "93"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["violations"].as_array().unwrap().len(), 1);
}

#[test]
fn lift_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let rel = fixture(dir.path(), "pairs11");
    let lifted = ok(&["lift", "--system", "2", "--seq", "builtin:count:11", "--relset", &rel, "--terms", "2000"]);
    let path = dir.path().join("lifted.json");
    std::fs::write(&path, &lifted).unwrap();
    let v: Value = serde_json::from_str(&lifted).unwrap();
    assert_eq!(v["h"], 4);
    ok(&["verify", "--system", "2", "--seq", "builtin:count:11", "--relset", path.to_str().unwrap(), "--terms", "4000"]);
}

#[test]
fn extend_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let rel = fixture(dir.path(), "zeck-subwords");
    let out = ok(&["extend", "--relset", &rel, "--prefix", "1,2,3", "--levels", "6"]);
    let terms: Vec<&str> = out.lines().map(|l| l.split_whitespace().nth(1).unwrap()).collect();
    assert_eq!(terms[..21], ["1", "2", "3", "4", "4", "5", "6", "6", "6", "8", "9", "8", "8", "7", "10", "12", "12", "12", "10", "12", "12"]);
}

#[test]
fn gdlr_eval_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let sm = fixture(dir.path(), "sumdigits-matrix");
    assert_eq!(ok(&["gdlr", "eval", "--relset", &sm, "--seq", "builtin:sumdigits", "--n", "22"]), "8\n");
    let f4 = fixture(dir.path(), "zeck-subwords");
    assert_eq!(ok(&["gdlr", "eval", "--relset", &f4, "--seq", "builtin:zeck-subwords", "--n", "10", "--trace"]), "10010 9 4\n");
}

#[test]
fn gdlr_export_import_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let sq = fixture(dir.path(), "squares");
    let file = dir.path().join("g.json");
    let f = file.to_str().unwrap();
    ok(&["gdlr", "export", "--relset", &sq, "--seq", "builtin:squares", "--terms", "3000", "--out", f]);
    let direct = ok(&["gdlr", "eval", "--relset", &sq, "--seq", "builtin:squares", "--terms", "3000", "--n", "0..1000"]);
    let imported = ok(&["gdlr", "eval", "--file", f, "--n", "0..1000"]);
    assert_eq!(direct, imported);
    let values: Vec<u64> = imported.lines().map(|l| l.parse().unwrap()).collect();
    assert!(values.iter().enumerate().all(|(n, &x)| x == (n * n) as u64));
    let summary = ok(&["gdlr", "import", "--file", f]);
    assert!(summary.starts_with("system: 3/2\nh: 3\n"));
}

#[test]
fn gdlr_refuses_unverified_relations() {
    let dir = tempfile::tempdir().unwrap();
    let rel = fixture(dir.path(), "sumdigits32");
    let (code, e) = fails(&["gdlr", "build", "--relset", &rel, "--seq", "builtin:squares"]);
    assert_eq!(code, 4);
    assert_eq!(e["error"], "unverified");
}

#[test]
fn kernel_commands() {
    let row = ok(&["kernel", "element", "--system", "3/2", "--seq", "builtin:sumdigits", "--suffix", "0", "--terms", "21"]);
    let col: Vec<&str> = row.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(col.join(","), "0,0,3,0,5,0,5,0,5,0,7,0,5,0,6,0,9,0,5,0,8");
    let itself = ok(&["kernel", "element", "--system", "3/2", "--seq", "builtin:sumdigits", "--suffix", "", "--terms", "18"]);
    let col: Vec<&str> = itself.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(col.join(","), "0,2,3,3,5,4,5,7,5,5,7,8,5,7,6,7,9,9");
    let power = ok(&["kernel", "element", "--system", "2", "--seq", "builtin:count:11", "--power", "1,1", "--terms", "8"]);
    let col: Vec<&str> = power.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(col.join(","), "0,1,0,2,0,1,1,3");
    let rank = ok(&["kernel", "rank", "--system", "3/2", "--seq", "builtin:sumdigits", "--max-suffix", "3", "--terms", "2000"]);
    let ranks: Vec<usize> = rank.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(ranks.windows(2).all(|p| p[0] < p[1]), "{ranks:?}");
}
