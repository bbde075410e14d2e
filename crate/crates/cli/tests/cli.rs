use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gudie::RunConfig;

const OUTPUTS: [&str; 5] = [
    "node_scores.csv",
    "edge_scores.csv",
    "propagated.csv",
    "expansions.txt",
    "units.json",
];

fn gudie(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gudie"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn export(dir: &Path) {
    ok(&gudie(&["examples", "export", "all", "ex"], dir));
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(name).display()))
}

#[test]
fn init_config_prints_the_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = gudie(&["init-config"], dir.path());
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(RunConfig::from_toml(&text).unwrap(), RunConfig::template());
    for key in [
        "h = 5",
        "k = 0.7",
        "gamma = \"mean_blend\"",
        "theta = \"exponential\"",
        "kind = \"fraud_time_weighted\"",
    ] {
        assert!(text.contains(key), "missing {key}");
    }
    ok(&gudie(&["init-config", "c.toml"], dir.path()));
    let again = gudie(&["init-config", "c.toml"], dir.path());
    assert_eq!(again.status.code(), Some(2));
}

#[test]
fn stage_commands_compose_to_run() {
    let dir = tempfile::tempdir().unwrap();
    export(dir.path());
    for i in 1..=5 {
        let cfg = format!("ex/example{i}/config.toml");
        ok(&gudie(&["run", "-c", &cfg, "--out", "full"], dir.path()));
        for stage in ["score", "propagate", "expand", "units"] {
            ok(&gudie(&[stage, "-c", &cfg, "--out", "staged"], dir.path()));
        }
        for name in OUTPUTS {
            assert_eq!(
                read(&dir.path().join("full"), name),
                read(&dir.path().join("staged"), name),
                "example{i} {name}"
            );
        }
    }
}

#[test]
fn path_edge_mode_survives_the_staged_route() {
    let dir = tempfile::tempdir().unwrap();
    export(dir.path());
    let cfg = "ex/example5/config.toml";
    let flags = ["--edge-mode", "path_edges", "--k", "0.2"];
    let run = |cmd: &str, out: &str| {
        let mut args = vec![cmd, "-c", cfg, "--out", out];
        args.extend(flags);
        ok(&gudie(&args, dir.path()));
    };
    run("run", "full");
    for stage in ["score", "propagate", "expand", "units"] {
        run(stage, "staged");
    }
    assert_eq!(
        read(&dir.path().join("full"), "units.json"),
        read(&dir.path().join("staged"), "units.json")
    );
}

#[test]
fn reruns_and_thread_counts_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let g = gudie::fixtures::make_powerlaw(4_000, 11).unwrap();
    gudie::save_graph_dir(&g, &dir.path().join("g")).unwrap();
    let seeds: Vec<String> = g.node_ids().step_by(400).map(|n| g.id_of(n).to_string()).collect();
    let seeds = seeds.join(",");
    for (out, threads) in [("a", "1"), ("b", "1"), ("c", "4"), ("d", "7")] {
        ok(&gudie(
            &[
                "run",
                "--graph",
                "g",
                "--seeds",
                &seeds,
                "--k",
                "0.2",
                "--threads",
                threads,
                "--out",
                out,
            ],
            dir.path(),
        ));
    }
    for name in OUTPUTS {
        let a = read(&dir.path().join("a"), name);
        for other in ["b", "c", "d"] {
            assert_eq!(a, read(&dir.path().join(other), name), "{other}/{name}");
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    export(dir.path());
    let cfg = "ex/example1/config.toml";
    assert_eq!(
        gudie(&["run", "-c", cfg, "--k", "1.5"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        gudie(&["run", "-c", cfg, "--seeds", "ZZ"], dir.path()).status.code(),
        Some(3)
    );
    assert_eq!(
        gudie(&["run", "-c", cfg, "--k", "0", "--budget", "3"], dir.path())
            .status
            .code(),
        Some(4)
    );
    fs::write(dir.path().join("bad.toml"), "h = \"five\"").unwrap();
    assert_eq!(gudie(&["run", "-c", "bad.toml"], dir.path()).status.code(), Some(2));
    fs::write(
        dir.path().join("ex/example1/transactions.csv"),
        "src,dst,timestamp,amount,is_fraud\nC1,M1,1,-4,0\n",
    )
    .unwrap();
    let out = gudie(&["run", "-c", cfg], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("transactions.csv:2"));
    // a missing intermediate file is a data error
    assert_eq!(
        gudie(&["units", "-c", cfg, "--out", "empty"], dir.path()).status.code(),
        Some(3)
    );
}

#[test]
fn examples_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = gudie(&["examples", "list"], dir.path());
    ok(&out);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 5);
    let out = gudie(&["examples", "run", "all", "--out", "res"], dir.path());
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("PASS").count(), 5, "{text}");
    assert!(dir.path().join("res/example3/units.json").exists());
    export(dir.path());
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&dir.path().join("ex/example4"), "manifest.json")).unwrap();
    assert_eq!(manifest["seed"], "C1");
    assert!(manifest["expect_in"].as_array().unwrap().iter().any(|v| v == "M1"));
}

#[test]
fn dot_files_are_written_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    export(dir.path());
    ok(&gudie(
        &[
            "run",
            "-c",
            "ex/example1/config.toml",
            "--seeds",
            "C1,M2",
            "--dot",
            "--out",
            "o",
        ],
        dir.path(),
    ));
    let dot = fs::read_to_string(dir.path().join("o/dot/C1.dot")).unwrap();
    assert!(dot.contains("doublecircle") && dot.contains("color=red"));
    assert!(dir.path().join("o/dot/M2.dot").exists());
}
