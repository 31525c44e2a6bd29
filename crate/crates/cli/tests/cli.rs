use std::io::Write;
use std::process::{Command, Output};

fn imred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imred")).args(args).output().expect("run imred")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('\t')))
}

#[test]
fn family_queries() {
    assert_eq!(stdout(&imred(&["family", "--ginv", "4"])), "(2,3)\n");
    assert_eq!(stdout(&imred(&["family", "--g", "2", "3"])), "4\n");
    assert_eq!(stdout(&imred(&["family", "--count", "5"])), "3969\n");
    let a11 = imred(&["family", "A", "1", "1"]);
    assert!(a11.status.success());
    let expected = imred::reduction::family_formula(
        imred::reduction::FamilyId::new(1, imred::reduction::Letter::A, 1),
        1,
    )
    .unwrap();
    assert_eq!(imred::parse_formula(stdout(&a11).trim()).unwrap(), expected);
}

#[test]
fn family_out_of_range() {
    let o = imred(&["family", "B", "1", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1..=3"));
}

#[test]
fn translate_stages() {
    let o = imred(&["translate", "--stage", "positive", "<>false"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(field(&text, "phi_f"), Some("<>p1"));
    assert!(field(&text, "F").is_some());

    let o = imred(&["translate", "p1 -> p1"]);
    let text = stdout(&o);
    assert_eq!(field(&text, "vars"), Some("p1"));
    assert_eq!(field(&text, "positive"), Some("true"));
    assert!(text.lines().any(|l| l == "bound_ok=true"));

    let o = imred(&["translate", "--stage", "star", "p1 -> false"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn translate_is_reproducible() {
    let a = imred(&["translate", "--max-print", "100000000", "<>p2 -> []p1"]);
    let b = imred(&["translate", "--max-print", "100000000", "<>p2 -> []p1"]);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let out = imred::parse_formula(field(&text, "output").unwrap()).unwrap();
    assert!(out.is_positive());
    assert_eq!(out.varset().iter().collect::<Vec<_>>(), vec![1]);
}

#[test]
fn parse_errors_exit_2() {
    let o = imred(&["translate", "p1 ->"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn refute_and_check_certificate() {
    let o = imred(&["refute", "<>p1 -> []p1"]);
    assert_eq!(o.status.code(), Some(1));
    let cert = stdout(&o);
    assert!(cert.contains("refutes "));
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(cert.as_bytes()).unwrap();
    let path = file.path().to_str().unwrap();
    let o = imred(&["check", "--global", path, "<>p1 -> []p1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("false\t"));
    let o = imred(&["check", path, "p1 -> p1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().all(|l| l.ends_with("\ttrue")));
}

#[test]
fn refute_valid_formula_is_exhausted() {
    let o = imred(&["refute", "--max-worlds", "2", "--max-points", "2", "p1 -> p1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("exhausted\t"));
    let o = imred(&["refute", "--mipc", "--max-worlds", "2", "--max-points", "2", "((p1 -> p2) -> p1) -> p1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("kind mipc\n"));
}

#[test]
fn check_trivial_model() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "world w\npoint w a").unwrap();
    let o = imred(&["check", "--global", file.path().to_str().unwrap(), "p1 -> p1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "true\n");
}

#[test]
fn check_lists_violations() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "world u\nworld v\nle u v\npoint u a\npoint v b").unwrap();
    let o = imred(&["check", file.path().to_str().unwrap(), "p1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("point-set monotonicity"));
}

#[test]
fn audits_pass() {
    for args in [
        &["audit", "--spiral", "10000"][..],
        &["audit", "--lemma3", "--max-level", "6"],
        &["audit", "--stability"],
        &["audit", "--sizes", "--corpus", "200", "--seed", "7"],
    ] {
        let o = imred(args);
        assert!(o.status.success(), "{args:?}: {}", stdout(&o));
        assert!(stdout(&o).lines().all(|l| l.split('\t').nth(1) == Some("pass")));
    }
}

#[test]
fn bench_runs() {
    let o = imred(&["bench", "--lengths", "50,100", "--samples", "2", "--consistency", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("summary\tformulas=5"));
    assert!(text.contains("contradictions=0"));
}
