use std::process::{Command, Output};

use serde_json::Value;

fn tbfid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbfid"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn json(o: &Output) -> Value {
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).unwrap()
}

fn preset(name: &str) -> String {
    format!("{}/presets/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn stabilizers_of_four_photons() {
    let v = json(&tbfid(&["stabilizers", "--n", "4"]));
    let g: Vec<f64> = serde_json::from_value(v).unwrap();
    assert_eq!(g.len(), 5);
    assert!(g.iter().all(|x| (x - 1.0).abs() < 1e-12));
}

#[test]
fn phonon_channel() {
    let v = json(&tbfid(&[
        "fidelity",
        "--channel",
        "phonon",
        "--target",
        "ghz",
        "--n",
        "5",
        "--gamma",
        "3.2",
        "--gamma-d",
        "0.06",
    ]));
    assert!((v["exact"].as_f64().unwrap() - 0.9160).abs() < 1e-4);
    assert!(v["first_order"].is_f64());
}

#[test]
fn branching_preset_first_order() {
    let v = json(&tbfid(&[
        "branching",
        "--n",
        "5",
        "--filtered",
        "--params",
        &preset("branching_unfiltered.json"),
    ]));
    assert!((v["first_order"].as_f64().unwrap() - 0.881875).abs() < 1e-9);
    let v = json(&tbfid(&[
        "branching",
        "--n",
        "5",
        "--params",
        &preset("branching_unfiltered.json"),
    ]));
    assert!((v["first_order"].as_f64().unwrap() - 0.619375).abs() < 1e-9);
    let c = v["conditional"].as_f64().unwrap();
    assert!(c > 0.0 && c < 1.0);
}

#[test]
fn flags_override_the_params_file() {
    let a = json(&tbfid(&[
        "branching",
        "--n",
        "3",
        "--params",
        &preset("branching_unfiltered.json"),
    ]));
    let b = json(&tbfid(&[
        "branching",
        "--n",
        "3",
        "--params",
        &preset("branching_unfiltered.json"),
        "--xi3",
        "0",
    ]));
    assert!(b["conditional"].as_f64().unwrap() > a["conditional"].as_f64().unwrap());
}

#[test]
fn excitation_record() {
    let v = json(&tbfid(&[
        "excitation",
        "--pulse",
        "gaussian",
        "--t-fwhm",
        "0.06",
        "--gamma",
        "3.2",
        "--delta-ghz",
        "16",
        "--n",
        "5",
    ]));
    assert_eq!(v["c"].as_array().unwrap().len(), 4);
    assert_eq!(v["phi"].as_array().unwrap().len(), 4);
    assert_eq!(v["d"].as_array().unwrap().len(), 3);
    for k in ["ghz", "cluster", "first_order"] {
        assert!(v["fidelity"][k].is_f64());
    }
}

#[test]
fn oracle_record() {
    let v = json(&tbfid(&[
        "oracle",
        "--target",
        "cluster",
        "--n",
        "3",
        "--model",
        "branching",
        "--params",
        &preset("branching_filtered.json"),
    ]));
    assert!(v["fidelity"].is_f64() && v["success"].is_f64());
    assert!(v["n_terms"].as_u64().unwrap() > 8);
}

#[test]
fn exit_codes() {
    let o = tbfid(&["fidelity", "--channel", "phonon", "--n", "5", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let o = tbfid(&[
        "fidelity",
        "--channel",
        "phonon",
        "--n",
        "5",
        "--gamma",
        "-1",
    ]);
    assert_eq!(o.status.code(), Some(1));

    let o = tbfid(&[
        "branching",
        "--n",
        "2",
        "--params",
        "/nonexistent/params.json",
    ]);
    assert_eq!(o.status.code(), Some(1));

    let o = tbfid(&[
        "excitation",
        "--pulse",
        "square",
        "--duration",
        "5",
        "--gamma",
        "3",
        "--delta-ghz",
        "1432",
        "--n",
        "1",
        "--grid",
        "200",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = tbfid(&[
        "branching",
        "--n",
        "2",
        "--beta-par",
        "0",
        "--beta-perp",
        "0",
        "--beta-par-prime",
        "0.5",
        "--beta-perp-prime",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(3));

    assert_eq!(tbfid(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_passes_for_several_seeds() {
    for seed in ["1", "2", "99"] {
        let o = tbfid(&["verify", "--seed", seed]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stdout)
        );
        let text = String::from_utf8_lossy(&o.stdout);
        assert!(text.lines().all(|l| l.starts_with("PASS")));
    }
}

#[test]
fn verify_catches_a_corrupted_formula() {
    let o = tbfid(&["verify", "--mutate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("branching exact transfer"));
}

#[test]
fn sweep_writes_csv() {
    let dir = std::env::temp_dir().join(format!("tbfid-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("curves.csv");
    let o = tbfid(&[
        "sweep",
        "--config",
        &preset("curves_64ghz_b140.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_path(&out).unwrap();
    assert_eq!(r.headers().unwrap().len(), 7);
    assert_eq!(r.records().count(), 60);
    std::fs::remove_dir_all(&dir).unwrap();
}
