mod support;

use std::path::Path;
use std::process::{Command, Output};

use sensreach_core::{Dispatch, PackageVersionProfile};
use support::*;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sensreach"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_graph(
    dir: &Path,
    name: &str,
    g: &sensreach_core::IntraPackageCallGraph,
) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, g.to_json()).unwrap();
    path
}

fn quiet_core() -> sensreach_core::IntraPackageCallGraph {
    graph(
        "g:quiet:1",
        vec![class("q.A", None, &[], &["f"])],
        vec![site(
            ("q.A", "f"),
            ("java.util.List", "size"),
            Dispatch::Interface,
        )],
    )
}

#[test]
fn stats_ci_reference_value() {
    let o = run(&["stats", "ci", "--p", "0.508", "--n", "4183"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "lo=0.4928 hi=0.5232");
}

#[test]
fn stats_ci_domain_errors_exit_1() {
    assert_eq!(code(&run(&["stats", "ci", "--p", "1.2", "--n", "10"])), 1);
    assert_eq!(code(&run(&["stats", "ci", "--p", "0.5", "--n", "0"])), 1);
}

#[test]
fn json_errors_are_machine_readable() {
    let o = run(&["--json-errors", "stats", "ci", "--p", "0.5", "--n", "0"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["exit_code"], 1);
    assert!(v["error"].as_str().unwrap().contains("sample size"));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn catalog_validate_shipped_and_custom() {
    let o = run(&["catalog", "validate"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("219 entries, 15 subcategories, 3 categories"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"schema_version":"1","entries":[{"class":"java.io.File","method":"exists","category":"Network","subcategory":"Input","cwes":[]}]}"#,
    )
    .unwrap();
    let o = run(&["catalog", "validate", p(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("entry 0"));

    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&run(&["catalog", "validate", p(&bad)])), 2);
}

#[test]
fn catalog_validate_maps_cwes() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("cwe.json");
    std::fs::write(&h, r#"{"parents": {"73": [22]}, "owasp": {"22": "A01"}}"#).unwrap();
    let o = run(&["catalog", "validate", "--cwe-hierarchy", p(&h)]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("CWE-22 A01"));
    assert!(text.contains("CWE-73 A01"));
    assert!(text.contains(" Other"));
}

#[test]
fn analyze_without_sensitive_calls_gives_zero_profile() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "g.json", &quiet_core());
    let o = run(&["analyze", "--mode", "intra", "--core", p(&g)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let profile = PackageVersionProfile::from_json(&o.stdout).unwrap();
    assert_eq!(profile.total(), 0);
    assert!(profile.per_subcategory.values().all(|c| *c == 0));
}

#[test]
fn analyze_intra_with_deps_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "g.json", &quiet_core());
    let o = run(&[
        "analyze",
        "--mode",
        "intra",
        "--core",
        p(&g),
        "--deps",
        p(&g),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn analyze_io_and_parse_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run(&[
            "analyze",
            "--core",
            p(&dir.path().join("missing.json"))
        ])),
        2
    );
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"schema_version\": \"1\",").unwrap();
    assert_eq!(code(&run(&["analyze", "--core", p(&broken)])), 2);
}

#[test]
fn analyze_invalid_graph_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = quiet_core();
    g.call_sites[0].multiplicity = 0;
    let path = write_graph(dir.path(), "g.json", &g);
    assert_eq!(code(&run(&["analyze", "--core", p(&path)])), 1);
}

#[test]
fn analyze_inter_counts_dependency_calls_as_indirect() {
    let dir = tempfile::tempdir().unwrap();
    let core = graph(
        "g:core:1",
        vec![class("c.Main", None, &[], &["run"])],
        vec![
            site(("c.Main", "run"), ("d.Net", "open"), Dispatch::Static),
            site(
                ("c.Main", "run"),
                ("java.io.File", "exists"),
                Dispatch::Virtual,
            ),
        ],
    );
    let dep = graph(
        "g:dep:1",
        vec![class("d.Net", None, &[], &["open"])],
        vec![site(
            ("d.Net", "open"),
            ("java.net.Socket", "connect"),
            Dispatch::Virtual,
        )],
    );
    let c = write_graph(dir.path(), "core.json", &core);
    let d = write_graph(dir.path(), "dep.json", &dep);
    let out = dir.path().join("profile.json");
    let o = run(&[
        "analyze",
        "--core",
        p(&c),
        "--deps",
        p(&d),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let profile = PackageVersionProfile::from_json(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(profile.mode, sensreach_core::Mode::Inter);
    assert_eq!((profile.direct_count, profile.indirect_count), (1, 1));

    let o = run(&["analyze", "--mode", "intra", "--core", p(&c)]);
    let intra = PackageVersionProfile::from_json(&o.stdout).unwrap();
    assert_eq!((intra.direct_count, intra.indirect_count), (1, 0));
}

#[test]
fn analyze_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_tree(dir.path(), 2, 2);
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"core": ["cores"], "deps": ["deps"], "mode": "inter", "entry": "public", "out_dir": "out", "jobs": 2}"#,
    )
    .unwrap();
    let o = run(&["analyze", "--config", p(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let written = std::fs::read_dir(dir.path().join("out")).unwrap().count();
    assert_eq!(written, 4);

    std::fs::write(&cfg, r#"{"core": ["cores"], "colour": "red"}"#).unwrap();
    assert_eq!(code(&run(&["analyze", "--config", p(&cfg)])), 2);
    std::fs::write(&cfg, r#"{"core": ["cores"], "jobs": 0}"#).unwrap();
    assert_eq!(code(&run(&["analyze", "--config", p(&cfg)])), 1);
}

#[test]
fn analyze_out_requires_single_core() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_tree(dir.path(), 1, 2);
    let o = run(&[
        "analyze",
        "--core",
        p(&dir.path().join("cores")),
        "--out",
        p(&dir.path().join("x.json")),
    ]);
    assert_eq!(code(&o), 1);
}

fn profiles_dir(root: &Path) -> std::path::PathBuf {
    write_fixture_tree(root, 2, 3);
    let out = root.join("profiles");
    let o = run(&[
        "analyze",
        "--core",
        p(&root.join("cores")),
        "--deps",
        p(&root.join("deps")),
        "--out-dir",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn compare_prints_table_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let profiles = profiles_dir(dir.path());
    let o = run(&["compare", p(&profiles), "--group", "libs"]);
    assert_eq!(code(&o), 0);
    let table = stdout(&o);
    assert_eq!(table.lines().count(), 7);
    assert!(table.lines().next().unwrap().contains("Read_network_env"));

    let csv = dir.path().join("m.csv");
    let svg = dir.path().join("m.svg");
    let o = run(&[
        "compare",
        p(&profiles),
        "--group",
        "libs",
        "--csv",
        p(&csv),
        "--svg",
        p(&svg),
        "--shuffle-seed",
        "5",
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<?xml"));

    let o = run(&[
        "compare",
        p(&profiles),
        "--group",
        "libs",
        "--order",
        "com.lib0:lib0:1.0",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn delta_between_versions() {
    let dir = tempfile::tempdir().unwrap();
    let profiles = profiles_dir(dir.path());
    let old = profiles.join("com.lib0_lib0_1.0.inter.json");
    let new = profiles.join("com.lib0_lib0_1.2.inter.json");
    let json = dir.path().join("delta.json");
    let o = run(&["delta", p(&old), p(&new), "--json", p(&json)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("com.lib0:lib0:1.0 -> 1.2 (inter): total"));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert!(v["per_subcategory_delta"].is_object());

    let other = profiles.join("com.lib1_lib1_1.0.inter.json");
    assert_eq!(code(&run(&["delta", p(&old), p(&other)])), 1);
}

#[test]
fn corpus_top_ranks_apis() {
    let dir = tempfile::tempdir().unwrap();
    let profiles = profiles_dir(dir.path());
    let o = run(&["corpus", "top", p(&profiles), "-k", "3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.lines().count() <= 4);
    assert!(text.starts_with("rank"));
}

#[test]
fn vuln_scan_reports_proportion() {
    let dir = tempfile::tempdir().unwrap();
    let core = graph(
        "g:v:1",
        vec![class("p.P", None, &[], &["a", "b"])],
        vec![site(
            ("p.P", "a"),
            ("java.lang.Runtime", "exec"),
            Dispatch::Virtual,
        )],
    );
    let g = write_graph(dir.path(), "g.json", &core);
    let f = dir.path().join("f.json");
    std::fs::write(
        &f,
        r#"[{"owner":"p.P","name":"a"},{"owner":"p.P","name":"b"},{"owner":"p.P","name":"zzz"}]"#,
    )
    .unwrap();
    let o = run(&["vuln", "scan", "--core", p(&g), "--functions", p(&f)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("functions_with_hits=1 total=3 proportion=0.3333"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}
